//! Zero-mean normalized cross-correlation, windowed bank scanning and
//! centroid detection.
//!
//! Positions are template CENTERS: a `w`×`h` template centered at `(u, v)`
//! covers columns `u - w/2 .. u - w/2 + w` (integer division), rows likewise.
//!
//! The 8-bit path accumulates every sum in integers, so a flat region has a
//! variance of exactly zero and the degenerate case is detected without an
//! epsilon.

use thiserror::Error;

use crate::imagebuf::{GrayImage, Rect};
use crate::warp::TemplateBank;

pub const DEFAULT_THRESHOLD: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatchError {
    #[error("{tw}x{th} template centered at ({u}, {v}) does not fit in {iw}x{ih} image")]
    OutOfBounds {
        u: i64,
        v: i64,
        tw: usize,
        th: usize,
        iw: usize,
        ih: usize,
    },
    #[error("float buffer of {got} samples does not match {width}x{height}")]
    BadBuffer {
        width: usize,
        height: usize,
        got: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchPoint {
    pub u: usize,
    pub v: usize,
    pub score: f64,
    pub angle_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub x: f64,
    pub y: f64,
    pub best_score: f64,
    pub best_angle_deg: f64,
    pub support: usize,
}

/// Range of template centers keeping a `tw`×`th` template inside an
/// `iw`×`ih` image, as a rect of centers. `None` if the template is larger.
pub fn valid_centers(iw: usize, ih: usize, tw: usize, th: usize) -> Option<Rect> {
    if tw > iw || th > ih || tw == 0 || th == 0 {
        return None;
    }
    Some(Rect::new(tw / 2, th / 2, iw - tw + 1, ih - th + 1))
}

fn top_left(u: i64, v: i64, tw: usize, th: usize, iw: usize, ih: usize) -> Result<(usize, usize), MatchError> {
    let x = u - (tw / 2) as i64;
    let y = v - (th / 2) as i64;
    if x < 0 || y < 0 || x as usize + tw > iw || y as usize + th > ih {
        return Err(MatchError::OutOfBounds {
            u,
            v,
            tw,
            th,
            iw,
            ih,
        });
    }
    Ok((x as usize, y as usize))
}

/// Combines integer moments into a correlation coefficient.
///
/// `n` samples; sums of region, template, squares and cross products.
#[inline]
fn coefficient(n: u64, sf: u64, sff: u64, st: u64, stt: u64, sft: u64) -> f64 {
    let n = i128::from(n);
    let var_f = n * i128::from(sff) - i128::from(sf) * i128::from(sf);
    let var_t = n * i128::from(stt) - i128::from(st) * i128::from(st);
    if var_f <= 0 || var_t <= 0 {
        return 0.0;
    }
    let num = n * i128::from(sft) - i128::from(sf) * i128::from(st);
    let c = num as f64 / ((var_f as f64) * (var_t as f64)).sqrt();
    c.clamp(-1.0, 1.0)
}

#[inline]
fn dot_u8(a: &[u8], b: &[u8]) -> u32 {
    a.iter().zip(b).map(|(&x, &y)| u32::from(x) * u32::from(y)).sum()
}

/// Correlation coefficient of `tpl` against the image region under it when
/// centered at `(u, v)`. Zero when either side has no variance.
pub fn zmncc(img: &GrayImage, tpl: &GrayImage, u: i64, v: i64) -> Result<f64, MatchError> {
    let (tw, th) = (tpl.width(), tpl.height());
    let (x0, y0) = top_left(u, v, tw, th, img.width(), img.height())?;
    let (mut sf, mut sff, mut st, mut stt, mut sft) = (0u64, 0u64, 0u64, 0u64, 0u64);
    for j in 0..th {
        let f = &img.row(y0 + j)[x0..x0 + tw];
        let t = tpl.row(j);
        sf += f.iter().map(|&p| u64::from(p)).sum::<u64>();
        st += t.iter().map(|&p| u64::from(p)).sum::<u64>();
        sff += u64::from(dot_u8(f, f));
        stt += u64::from(dot_u8(t, t));
        sft += u64::from(dot_u8(f, t));
    }
    Ok(coefficient((tw * th) as u64, sf, sff, st, stt, sft))
}

/// Floating-point correlation over row-major `f64` buffers, for inputs that
/// are not 8-bit (e.g. intensity-transformed copies).
pub fn zmncc_f64(
    img: &[f64],
    iw: usize,
    ih: usize,
    tpl: &[f64],
    tw: usize,
    th: usize,
    u: i64,
    v: i64,
) -> Result<f64, MatchError> {
    if img.len() != iw * ih {
        return Err(MatchError::BadBuffer {
            width: iw,
            height: ih,
            got: img.len(),
        });
    }
    if tpl.len() != tw * th {
        return Err(MatchError::BadBuffer {
            width: tw,
            height: th,
            got: tpl.len(),
        });
    }
    let (x0, y0) = top_left(u, v, tw, th, iw, ih)?;
    let n = (tw * th) as f64;
    let region = |j: usize| &img[(y0 + j) * iw + x0..(y0 + j) * iw + x0 + tw];
    let f_mean = (0..th).map(|j| region(j).iter().sum::<f64>()).sum::<f64>() / n;
    let t_mean = tpl.iter().sum::<f64>() / n;
    let (mut num, mut var_f, mut var_t) = (0.0, 0.0, 0.0);
    for j in 0..th {
        for (f, t) in region(j).iter().zip(&tpl[j * tw..(j + 1) * tw]) {
            let (df, dt) = (f - f_mean, t - t_mean);
            num += df * dt;
            var_f += df * df;
            var_t += dt * dt;
        }
    }
    let denom = (var_f * var_t).sqrt();
    // relative floor: a constant buffer leaves only rounding residue
    if var_f <= 1e-18 * n * (f_mean * f_mean + 1.0) || var_t <= 1e-18 * n * (t_mean * t_mean + 1.0) {
        return Ok(0.0);
    }
    Ok((num / denom).clamp(-1.0, 1.0))
}

/// Largest template whose sums fit u32 (255 * 255 * n < 2^32).
const MAX_FAST_PIXELS: u64 = 66051;

/// Per-entry template moments, computed once per scan.
struct Prepared<'a> {
    patch: &'a GrayImage,
    angle_deg: f64,
    st: u64,
    stt: u64,
}

/// Scans every template center inside `window` (clipped to the valid range)
/// and keeps positions whose best score over the bank reaches `threshold`.
/// Output is in row-major order.
pub fn scan(img: &GrayImage, bank: &TemplateBank, window: &Rect, threshold: f64) -> Vec<MatchPoint> {
    let mut out = Vec::new();
    scan_with(img, bank, window, |u, v, score, angle_deg| {
        if score >= threshold {
            out.push(MatchPoint {
                u,
                v,
                score,
                angle_deg,
            });
        }
    });
    out
}

/// Best score over the bank at every center of `window`, row-major, with
/// the angle of the maximizing entry. Used by diagnostics and benchmarks.
pub fn score_map(img: &GrayImage, bank: &TemplateBank, window: &Rect) -> Vec<(usize, usize, f64, f64)> {
    let mut out = Vec::new();
    scan_with(img, bank, window, |u, v, s, a| out.push((u, v, s, a)));
    out
}

fn clip_window(img: &GrayImage, bank: &TemplateBank, window: &Rect) -> Option<Rect> {
    let valid = valid_centers(img.width(), img.height(), bank.base_width(), bank.base_height())?;
    let x0 = window.x.max(valid.x);
    let y0 = window.y.max(valid.y);
    let x1 = window.right().min(valid.right());
    let y1 = window.bottom().min(valid.bottom());
    (x1 > x0 && y1 > y0).then(|| Rect::new(x0, y0, x1 - x0, y1 - y0))
}

fn scan_with(img: &GrayImage, bank: &TemplateBank, window: &Rect, mut visit: impl FnMut(usize, usize, f64, f64)) {
    if bank.is_empty() {
        return;
    }
    let Some(win) = clip_window(img, bank, window) else {
        return;
    };
    let (tw, th) = (bank.base_width(), bank.base_height());
    let n = (tw * th) as u64;
    let prepared: Vec<Prepared> = bank
        .entries()
        .iter()
        .map(|e| Prepared {
            patch: &e.patch,
            angle_deg: e.angle_deg,
            st: e.patch.data().iter().map(|&p| u64::from(p)).sum(),
            stt: e.patch.data().iter().map(|&p| u64::from(p) * u64::from(p)).sum(),
        })
        .collect();

    if n > MAX_FAST_PIXELS {
        for v in win.y..win.bottom() {
            for u in win.x..win.right() {
                let mut best = (f64::NEG_INFINITY, 0.0);
                for e in bank.entries() {
                    let c = zmncc(img, &e.patch, u as i64, v as i64).expect("window is clipped");
                    if c > best.0 {
                        best = (c, e.angle_deg);
                    }
                }
                visit(u, v, best.0, best.1);
            }
        }
        return;
    }

    // Sums are accumulated for a whole window row at once so the inner loops
    // run along contiguous pixels. Products fit u16 and sums fit u32 below
    // MAX_FAST_PIXELS, so the wrapping ops never wrap.
    let ww = win.w;
    let base = win.x - tw / 2;
    let mut sf = vec![0u32; ww];
    let mut sff = vec![0u32; ww];
    let mut sft = vec![0u32; ww];
    let mut best = vec![(f64::NEG_INFINITY, 0.0); ww];
    for v in win.y..win.bottom() {
        let y0 = v - th / 2;
        sf.fill(0);
        sff.fill(0);
        for j in 0..th {
            let row = img.row(y0 + j);
            for i in 0..tw {
                let src = &row[base + i..base + i + ww];
                for ((a, b), &x) in sf.iter_mut().zip(sff.iter_mut()).zip(src) {
                    let x16 = u16::from(x);
                    *a = a.wrapping_add(u32::from(x));
                    *b = b.wrapping_add(u32::from(x16.wrapping_mul(x16)));
                }
            }
        }
        best.fill((f64::NEG_INFINITY, 0.0));
        for p in &prepared {
            sft.fill(0);
            for j in 0..th {
                let row = img.row(y0 + j);
                for (i, &t) in p.patch.row(j).iter().enumerate() {
                    if t == 0 {
                        continue;
                    }
                    let t = u16::from(t);
                    let src = &row[base + i..base + i + ww];
                    for (a, &x) in sft.iter_mut().zip(src) {
                        *a = a.wrapping_add(u32::from(u16::from(x).wrapping_mul(t)));
                    }
                }
            }
            for k in 0..ww {
                let c = coefficient(n, u64::from(sf[k]), u64::from(sff[k]), p.st, p.stt, u64::from(sft[k]));
                // strict comparison: ties keep the lowest angle
                if c > best[k].0 {
                    best[k] = (c, p.angle_deg);
                }
            }
        }
        for (k, &(score, angle)) in best.iter().enumerate() {
            visit(win.x + k, v, score, angle);
        }
    }
}

/// Centroid of the match points, with the best-scoring point's score and
/// angle. `None` for an empty list.
pub fn detect(points: &[MatchPoint]) -> Option<Detection> {
    let best = points.iter().fold(None::<&MatchPoint>, |acc, p| match acc {
        Some(b) if b.score >= p.score => Some(b),
        _ => Some(p),
    })?;
    let n = points.len() as f64;
    let x = points.iter().map(|p| p.u as f64).sum::<f64>() / n;
    let y = points.iter().map(|p| p.v as f64).sum::<f64>() / n;
    Some(Detection {
        x,
        y,
        best_score: best.score,
        best_angle_deg: best.angle_deg,
        support: points.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::warp::build_bank;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(w: usize, h: usize, seed: u64) -> GrayImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GrayImage::from_fn(w, h, |_, _| rng.gen()).unwrap()
    }

    /// Direct evaluation with explicit means, written independently of the
    /// moment-based implementation.
    fn naive(img: &GrayImage, tpl: &GrayImage, u: usize, v: usize) -> f64 {
        let (tw, th) = (tpl.width(), tpl.height());
        let (x0, y0) = (u - tw / 2, v - th / 2);
        let n = (tw * th) as f64;
        let mut fm = 0.0;
        let mut tm = 0.0;
        for y in 0..th {
            for x in 0..tw {
                fm += img.get(x0 + x, y0 + y) as f64;
                tm += tpl.get(x, y) as f64;
            }
        }
        fm /= n;
        tm /= n;
        let (mut num, mut sf, mut st) = (0.0, 0.0, 0.0);
        for y in 0..th {
            for x in 0..tw {
                let a = img.get(x0 + x, y0 + y) as f64 - fm;
                let b = tpl.get(x, y) as f64 - tm;
                num += a * b;
                sf += a * a;
                st += b * b;
            }
        }
        num / (sf * st).sqrt()
    }

    fn planted(frame_w: usize, frame_h: usize, tpl: &GrayImage, cx: usize, cy: usize, seed: u64) -> GrayImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut img = GrayImage::from_fn(frame_w, frame_h, |_, _| rng.gen_range(100..156)).unwrap();
        img.paste(tpl, cx - tpl.width() / 2, cy - tpl.height() / 2).unwrap();
        img
    }

    #[test]
    fn identical_region_scores_one() {
        let tpl = random_image(8, 6, 1);
        let img = planted(30, 30, &tpl, 15, 12, 2);
        assert!((zmncc(&img, &tpl, 15, 12).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn affine_intensity_change_is_invisible() {
        let tpl = GrayImage::from_fn(8, 8, |x, y| (60 + 11 * x + 7 * y) as u8 ^ (x as u8 * 3)).unwrap();
        // a=0.5, b=40 keeps every value in range; values of 2·k make it exact
        let even = GrayImage::from_fn(8, 8, |x, y| tpl.get(x, y) & !1).unwrap();
        let region = GrayImage::from_fn(8, 8, |x, y| (0.5 * even.get(x, y) as f64 + 40.0) as u8).unwrap();
        let img = planted(20, 20, &region, 10, 10, 3);
        assert!((zmncc(&img, &even, 10, 10).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn contrast_inversion_scores_minus_one() {
        let tpl = random_image(7, 9, 4);
        let inv = GrayImage::from_fn(7, 9, |x, y| 255 - tpl.get(x, y)).unwrap();
        let img = planted(25, 25, &inv, 12, 12, 5);
        assert!((zmncc(&img, &tpl, 12, 12).unwrap() + 1.0).abs() < 1e-9);
    }

    #[test]
    fn matches_naive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let img = random_image(32, 32, 6);
        let tpl = random_image(8, 8, 7);
        for _ in 0..20 {
            let u = rng.gen_range(4..=28);
            let v = rng.gen_range(4..=28);
            let got = zmncc(&img, &tpl, u as i64, v as i64).unwrap();
            assert!((got - naive(&img, &tpl, u, v)).abs() < 1e-9);
        }
    }

    #[test]
    fn degenerate_variance_is_zero() {
        let flat = GrayImage::filled(20, 20, 128).unwrap();
        let tpl = random_image(5, 5, 8);
        assert_eq!(zmncc(&flat, &tpl, 10, 10).unwrap(), 0.0);
        let flat_tpl = GrayImage::filled(5, 5, 3).unwrap();
        assert_eq!(zmncc(&random_image(20, 20, 9), &flat_tpl, 10, 10).unwrap(), 0.0);
    }

    #[test]
    fn bounds_follow_center_convention() {
        let img = random_image(10, 10, 10);
        let tpl = random_image(4, 3, 11);
        // columns u-2..u+2, rows v-1..v+2
        assert!(zmncc(&img, &tpl, 2, 1).is_ok());
        assert!(zmncc(&img, &tpl, 8, 8).is_ok());
        assert!(zmncc(&img, &tpl, 1, 1).is_err());
        assert!(zmncc(&img, &tpl, 9, 5).is_err());
        assert!(zmncc(&img, &tpl, 5, 9).is_err());
        assert!(zmncc(&img, &tpl, -3, 5).is_err());
    }

    #[test]
    fn float_route_agrees_with_integer_route() {
        let img = random_image(24, 20, 12);
        let tpl = random_image(6, 5, 13);
        let (fi, ft) = (img.to_f64(), tpl.to_f64());
        for (u, v) in [(3, 2), (10, 10), (20, 17)] {
            let a = zmncc(&img, &tpl, u, v).unwrap();
            let b = zmncc_f64(&fi, 24, 20, &ft, 6, 5, u, v).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
        let flat = vec![7.25; 24 * 20];
        assert_eq!(zmncc_f64(&flat, 24, 20, &ft, 6, 5, 10, 10).unwrap(), 0.0);
    }

    #[test]
    fn scan_finds_planted_entry() {
        let tpl = random_image(9, 13, 14);
        let bank = build_bank(&tpl, 36, 10).unwrap();
        let img = planted(60, 50, &tpl, 31, 22, 15);
        let pts = scan(&img, &bank, &img.bounds(), 0.9);
        let best = pts
            .iter()
            .max_by(|a, b| a.score.total_cmp(&b.score))
            .unwrap();
        assert_eq!((best.u, best.v), (31, 22));
        assert!((best.score - 1.0).abs() < 1e-12);
        assert_eq!(best.angle_deg, 0.0);
    }

    #[test]
    fn uniform_frame_has_no_matches() {
        let bank = build_bank(&random_image(8, 8, 16), 36, 10).unwrap();
        let img = GrayImage::filled(40, 40, 128).unwrap();
        assert!(scan(&img, &bank, &img.bounds(), 0.9).is_empty());
    }

    #[test]
    fn quarter_turn_target_selects_ninety() {
        let n = 16;
        // smooth, asymmetric pattern so neighbouring angles score lower
        let src = GrayImage::from_fn(n, n, |x, y| {
            let (fx, fy) = (x as f64, y as f64);
            (128.0 + 60.0 * ((fx - 4.0).powi(2) + (fy - 5.0).powi(2)).sqrt().cos() * (-(fx + fy) / 20.0).exp()
                + 3.0 * fx
                - 2.0 * fy) as u8
        })
        .unwrap();
        // destination (i, j) samples source (n-1-j, i) under the 90° map
        let rotated = GrayImage::from_fn(n, n, |i, j| src.get(n - 1 - j, i)).unwrap();
        let bank = build_bank(&src, 36, 10).unwrap();
        let img = planted(48, 48, &rotated, 24, 24, 17);
        let pts = scan(&img, &bank, &Rect::new(22, 22, 5, 5), 0.9);
        let best = pts.iter().max_by(|a, b| a.score.total_cmp(&b.score)).unwrap();
        assert_eq!((best.u, best.v), (24, 24));
        assert_eq!(best.angle_deg, 90.0);
        assert!((best.score - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ties_keep_lowest_angle() {
        // a constant-in-rotation disc scores identically for several entries
        let disc = GrayImage::from_fn(9, 9, |x, y| {
            if (x as i32 - 4).pow(2) + (y as i32 - 4).pow(2) <= 4 {
                220
            } else {
                30
            }
        })
        .unwrap();
        let bank = build_bank(&disc, 4, 90).unwrap();
        let img = planted(30, 30, &disc, 15, 15, 18);
        let pts = scan(&img, &bank, &Rect::new(15, 15, 1, 1), 0.9);
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].angle_deg, 0.0);
    }

    #[test]
    fn scan_clips_window_and_handles_empty() {
        let bank = build_bank(&random_image(8, 8, 19), 4, 90).unwrap();
        let img = random_image(20, 20, 20);
        let all = score_map(&img, &bank, &Rect::new(0, 0, 100, 100));
        assert_eq!(all.len(), 13 * 13);
        assert_eq!((all[0].0, all[0].1), (4, 4));
        assert!(score_map(&img, &bank, &Rect::new(17, 0, 3, 20)).is_empty());
        let big = build_bank(&random_image(30, 8, 21), 4, 90).unwrap();
        assert!(scan(&img, &big, &img.bounds(), 0.5).is_empty());
    }

    fn per_position(img: &GrayImage, bank: &TemplateBank, win: &Rect) -> Vec<(usize, usize, f64, f64)> {
        let mut out = Vec::new();
        for v in win.y..win.bottom() {
            for u in win.x..win.right() {
                let mut best = (f64::NEG_INFINITY, 0.0);
                for e in bank.entries() {
                    let c = zmncc(img, &e.patch, u as i64, v as i64).unwrap();
                    if c > best.0 {
                        best = (c, e.angle_deg);
                    }
                }
                out.push((u, v, best.0, best.1));
            }
        }
        out
    }

    #[test]
    fn score_map_equals_per_position_scores() {
        let tpl = random_image(22, 36, 40);
        let bank = build_bank(&tpl, 36, 10).unwrap();
        let img = planted(90, 80, &tpl, 45, 40, 41);
        let win = Rect::new(30, 25, 31, 29);
        assert_eq!(score_map(&img, &bank, &win), per_position(&img, &bank, &win));
        let full = valid_centers(90, 80, 22, 36).unwrap();
        assert_eq!(score_map(&img, &bank, &full), per_position(&img, &bank, &full));
    }

    #[test]
    fn oversized_template_takes_exact_slow_path() {
        let tpl = GrayImage::from_fn(260, 260, |x, y| if (x / 13 + y / 13) % 2 == 0 { 255 } else { 250 }).unwrap();
        let bank = build_bank(&tpl, 2, 180).unwrap();
        let mut img = GrayImage::filled(264, 263, 250).unwrap();
        img.paste(&tpl, 2, 1).unwrap();
        let win = valid_centers(264, 263, 260, 260).unwrap();
        let map = score_map(&img, &bank, &win);
        assert_eq!(map, per_position(&img, &bank, &win));
        let best = map.iter().max_by(|a, b| a.2.total_cmp(&b.2)).unwrap();
        assert_eq!((best.0, best.1, best.2), (132, 131, 1.0));
    }

    #[test]
    fn detect_examples() {
        let p = MatchPoint {
            u: 50,
            v: 60,
            score: 0.97,
            angle_deg: 20.0,
        };
        let d = detect(&[p]).unwrap();
        assert_eq!((d.x, d.y, d.best_score, d.best_angle_deg, d.support), (50.0, 60.0, 0.97, 20.0, 1));

        let pts = [
            MatchPoint {
                u: 10,
                v: 10,
                score: 0.91,
                angle_deg: 0.0,
            },
            MatchPoint {
                u: 12,
                v: 14,
                score: 0.95,
                angle_deg: 10.0,
            },
        ];
        let d = detect(&pts).unwrap();
        assert_eq!((d.x, d.y, d.best_score, d.support), (11.0, 12.0, 0.95, 2));
        assert!(detect(&[]).is_none());
    }

    proptest! {
        #[test]
        fn gain_offset_invariance(seed in 0u64..1000, a in 0.2f64..3.0, b in -100.0f64..100.0) {
            let img = random_image(16, 16, seed);
            let tpl = random_image(5, 5, seed + 1);
            let fi = img.to_f64();
            let scaled: Vec<f64> = fi.iter().map(|v| a * v + b).collect();
            let ft = tpl.to_f64();
            let c0 = zmncc_f64(&fi, 16, 16, &ft, 5, 5, 8, 8).unwrap();
            let c1 = zmncc_f64(&scaled, 16, 16, &ft, 5, 5, 8, 8).unwrap();
            prop_assert!((c0 - c1).abs() < 1e-9);
        }

        #[test]
        fn score_bounded(seed in 0u64..1000, u in 3i64..17, v in 3i64..17) {
            let img = random_image(20, 20, seed);
            let tpl = random_image(6, 6, seed ^ 0xff);
            let c = zmncc(&img, &tpl, u, v).unwrap();
            prop_assert!((-1.0..=1.0).contains(&c));
        }

        #[test]
        fn window_subset(seed in 0u64..200, x in 0usize..10, y in 0usize..10, w in 1usize..10, h in 1usize..10) {
            let tpl = random_image(5, 5, seed);
            let bank = build_bank(&tpl, 4, 90).unwrap();
            let mut img = random_image(24, 24, seed + 7);
            img.paste(&tpl, 9, 9).unwrap();
            let inner = scan(&img, &bank, &Rect::new(x, y, w, h), 0.3);
            let outer = scan(&img, &bank, &Rect::new(0, 0, 24, 24), 0.3);
            for p in &inner {
                prop_assert!(outer.contains(p));
            }
        }

        #[test]
        fn centroid_in_bounding_box(pts in proptest::collection::vec((0usize..100, 0usize..100, 0.9f64..1.0), 1..20)) {
            let pts: Vec<MatchPoint> = pts.into_iter().map(|(u, v, score)| MatchPoint { u, v, score, angle_deg: 0.0 }).collect();
            let d = detect(&pts).unwrap();
            let (minx, maxx) = (pts.iter().map(|p| p.u).min().unwrap(), pts.iter().map(|p| p.u).max().unwrap());
            let (miny, maxy) = (pts.iter().map(|p| p.v).min().unwrap(), pts.iter().map(|p| p.v).max().unwrap());
            prop_assert!(d.x >= minx as f64 - 1e-9 && d.x <= maxx as f64 + 1e-9);
            prop_assert!(d.y >= miny as f64 - 1e-9 && d.y <= maxy as f64 + 1e-9);
        }
    }
}
