//! Full-frame versus windowed scan timing.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand::Rng;

use crate::imagebuf::{GrayImage, Rect};
use crate::matcher::{scan, valid_centers, DEFAULT_THRESHOLD};
use crate::warp::{build_bank, BankError};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub width: usize,
    pub height: usize,
    pub window: usize,
    pub reps: usize,
    pub bank_size: usize,
    /// Median milliseconds per full-frame scan.
    pub full_ms: f64,
    /// Median milliseconds per windowed scan.
    pub windowed_ms: f64,
    /// Matches found by each scan; both should include the planted target.
    pub full_matches: usize,
    pub windowed_matches: usize,
}

impl BenchReport {
    pub fn speedup(&self) -> f64 {
        self.full_ms / self.windowed_ms
    }

    pub fn windowed_fps(&self) -> f64 {
        1e3 / self.windowed_ms
    }

    pub fn summary(&self) -> String {
        format!(
            "{}x{} frame, {}-entry bank, {}x{} window, {} reps: full {:.3} ms/frame, windowed {:.3} ms/frame ({:.1} fps), speedup {:.1}x",
            self.width,
            self.height,
            self.bank_size,
            self.window,
            self.window,
            self.reps,
            self.full_ms,
            self.windowed_ms,
            self.windowed_fps(),
            self.speedup()
        )
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Textured test frame with `template` pasted at the center.
pub fn bench_frame(width: usize, height: usize, template: &GrayImage, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut frame = GrayImage::from_fn(width, height, |_, _| rng.gen_range(96..160)).expect("positive size");
    let x = width / 2 - template.width() / 2;
    let y = height / 2 - template.height() / 2;
    frame.paste(template, x, y).expect("template fits");
    frame
}

/// Times `reps` full-frame and windowed scans over the same frame.
pub fn run_bench(
    width: usize,
    height: usize,
    template: &GrayImage,
    window: usize,
    reps: usize,
    bank_count: usize,
    bank_step: u32,
) -> Result<BenchReport, BankError> {
    let bank = build_bank(template, bank_count, bank_step)?;
    let full = valid_centers(width, height, template.width(), template.height())
        .expect("template must be smaller than the frame");
    let frame = bench_frame(width, height, template, 7);
    let (cx, cy) = (width / 2, height / 2);
    let half = window / 2;
    let win = Rect::new(cx.saturating_sub(half), cy.saturating_sub(half), window.max(1), window.max(1));

    let reps = reps.max(1);
    let mut full_times = Vec::with_capacity(reps);
    let mut win_times = Vec::with_capacity(reps);
    let (mut full_matches, mut windowed_matches) = (0, 0);
    for _ in 0..reps {
        let t = Instant::now();
        windowed_matches = scan(&frame, &bank, &win, DEFAULT_THRESHOLD).len();
        win_times.push(t.elapsed().as_secs_f64() * 1e3);
    }
    for _ in 0..reps {
        let t = Instant::now();
        full_matches = scan(&frame, &bank, &full, DEFAULT_THRESHOLD).len();
        full_times.push(t.elapsed().as_secs_f64() * 1e3);
    }
    Ok(BenchReport {
        width,
        height,
        window,
        reps,
        bank_size: bank.len(),
        full_ms: median(full_times),
        windowed_ms: median(win_times),
        full_matches,
        windowed_matches,
    })
}
