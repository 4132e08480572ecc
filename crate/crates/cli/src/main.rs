use std::fmt::Display;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::net::ToSocketAddrs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::thread;
use std::time::{Duration, Instant};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use uastrack_core::bench::run_bench;
use uastrack_core::config::TrackerConfig;
use uastrack_core::groundlink::{send_message, Link, Message};
use uastrack_core::imagebuf::{load_pgm, GrayImage, Rect};
use uastrack_core::scenesim::{target_patch, GroundTruth, Scenario, Scene, BUILTIN_NAMES, DEFAULT_TARGET_H, DEFAULT_TARGET_W};
use uastrack_core::serve::{Applied, Payload};
use uastrack_core::sim::{run_sim, ClosedLoop, FrameResult, RunReport};
use uastrack_core::tracker::{Status, TrackOutcome, Tracker};
use uastrack_core::tracklog::LogWriter;
use uastrack_core::warp::build_bank;

#[derive(Parser)]
#[command(name = "uastrack", version, about = "Rotation-invariant template tracker with a simulated pan/tilt gimbal")]
struct Cli {
    /// Suppress per-frame output
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Track a stored template over a sequence of PGM frames
    Track(TrackArgs),
    /// Run a closed-loop simulation
    Sim(SimArgs),
    /// Write the rotated template bank
    Bank(BankArgs),
    /// Time full-frame against windowed scanning
    Bench(BenchArgs),
    /// Run a simulation with the ground link enabled
    Serve(ServeArgs),
    /// Send a region or patch selection to a serving payload
    Roi(RoiArgs),
}

#[derive(Args)]
struct TrackArgs {
    /// Directory of PGM frames, or a list file naming one frame per line
    #[arg(long)]
    frames: PathBuf,
    #[arg(long)]
    template: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long)]
    scenario: String,
    #[arg(long)]
    frames: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    log: Option<PathBuf>,
    /// Write every rendered frame and the ground truth here
    #[arg(long)]
    dump_frames: Option<PathBuf>,
}

#[derive(Args)]
struct BankArgs {
    #[arg(long)]
    template: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 640)]
    width: usize,
    #[arg(long, default_value_t = 480)]
    height: usize,
    /// Template PGM; defaults to a generated 22x36 patch
    #[arg(long)]
    template: Option<PathBuf>,
    #[arg(long, default_value_t = 48)]
    window: usize,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    listen: String,
    #[arg(long)]
    scenario: String,
    #[arg(long, default_value_t = 300)]
    frames: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    log: Option<PathBuf>,
    /// Ground station address for frame samples; otherwise the first sender
    #[arg(long)]
    ground: Option<String>,
    /// Start with this template instead of waiting for a selection
    #[arg(long)]
    template: Option<PathBuf>,
    /// Pause between frames
    #[arg(long, default_value_t = 33)]
    frame_ms: u64,
}

#[derive(Args)]
struct RoiArgs {
    #[arg(long)]
    send: String,
    #[arg(long, required_unless_present = "patch")]
    frame: Option<u32>,
    /// Region in sample pixels: x,y,w,h
    #[arg(long, value_parser = parse_rect, required_unless_present = "patch", conflicts_with = "patch")]
    rect: Option<Rect>,
    /// Upload this PGM as the template instead of a region
    #[arg(long)]
    patch: Option<PathBuf>,
}

fn parse_rect(s: &str) -> Result<Rect, String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [x, y, w, h] if w > 0 && h > 0 => Ok(Rect::new(x, y, w, h)),
        [_, _, _, _] => Err("width and height must be positive".into()),
        _ => Err("expected x,y,w,h".into()),
    }
}

enum Failure {
    Usage(anyhow::Error),
    Io(anyhow::Error),
    NeverAcquired,
}

type Outcome = Result<(), Failure>;

trait Classify<T> {
    fn usage(self) -> Result<T, Failure>;
    fn io(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn usage(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Usage(e.into()))
    }
    fn io(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Io(e.into()))
    }
}

fn load_config(path: Option<&Path>) -> Result<TrackerConfig, Failure> {
    match path {
        None => Ok(TrackerConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display())).io()?;
            TrackerConfig::from_json(&text)
                .with_context(|| format!("config {}", p.display()))
                .usage()
        }
    }
}

fn read_pgm(path: &Path) -> Result<GrayImage, Failure> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display())).io()?;
    load_pgm(&bytes).with_context(|| format!("decoding {}", path.display())).io()
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display())).io()
}

/// Frame paths from a directory (sorted `*.pgm`) or a list file.
fn frame_paths(src: &Path) -> Result<Vec<PathBuf>, Failure> {
    let ctx = || format!("reading {}", src.display());
    if src.is_dir() {
        let mut paths: Vec<PathBuf> = fs::read_dir(src)
            .with_context(ctx)
            .io()?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("pgm")))
            .collect();
        paths.sort();
        Ok(paths)
    } else {
        let text = fs::read_to_string(src).with_context(ctx).io()?;
        let base = src.parent().unwrap_or(Path::new(""));
        Ok(text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| base.join(l))
            .collect())
    }
}

fn opt<T: Display>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |v| v.to_string())
}

fn frame_line(o: &TrackOutcome) -> String {
    let d = o.detection.as_ref();
    format!(
        "frame {:5} {:<11} x={} y={} score={} angle={} window={}",
        o.frame_index,
        o.status.as_str(),
        opt(d.map(|d| format!("{:.2}", d.x))),
        opt(d.map(|d| format!("{:.2}", d.y))),
        opt(d.map(|d| format!("{:.3}", d.best_score))),
        opt(d.map(|d| d.best_angle_deg)),
        o.window
    )
}

struct Log {
    writer: Option<LogWriter<BufWriter<fs::File>>>,
    path: Option<PathBuf>,
}

impl Log {
    fn create(path: Option<&Path>) -> Result<Log, Failure> {
        let writer = match path {
            Some(p) => {
                let f = fs::File::create(p).with_context(|| format!("creating {}", p.display())).io()?;
                Some(LogWriter::new(BufWriter::new(f)).io()?)
            }
            None => None,
        };
        Ok(Log {
            writer,
            path: path.map(Path::to_path_buf),
        })
    }

    fn write(&mut self, o: &TrackOutcome) -> Result<(), Failure> {
        if let Some(w) = self.writer.as_mut() {
            w.write(o).io()?;
        }
        Ok(())
    }

    fn finish(self) -> Result<(), Failure> {
        if let Some(w) = self.writer {
            let ctx = || format!("writing {}", self.path.as_ref().expect("set with writer").display());
            w.finish().with_context(ctx).io()?.flush().with_context(ctx).io()?;
        }
        Ok(())
    }
}

fn acquired(outcomes: &[TrackOutcome]) -> Outcome {
    if outcomes.iter().any(|o| o.status != Status::Lost) {
        Ok(())
    } else {
        Err(Failure::NeverAcquired)
    }
}

fn cmd_track(a: TrackArgs, quiet: bool) -> Outcome {
    let mut cfg = load_config(a.config.as_deref())?;
    let template = read_pgm(&a.template)?;
    let paths = frame_paths(&a.frames)?;
    if paths.is_empty() {
        return Err(Failure::Io(anyhow!("no frames found in {}", a.frames.display())));
    }
    let first = read_pgm(&paths[0])?;
    cfg.optics.frame_w = first.width();
    cfg.optics.frame_h = first.height();
    let mut tracker = Tracker::from_template(&template, cfg).usage()?;
    let mut log = Log::create(a.log.as_deref())?;
    let start = Instant::now();
    let mut outcomes = Vec::with_capacity(paths.len());
    let mut frame = Some(first);
    for (i, path) in paths.iter().enumerate() {
        let img = match frame.take() {
            Some(f) => f,
            None => read_pgm(path)?,
        };
        let o = tracker
            .process(&img, 1.0)
            .with_context(|| format!("frame {i} ({})", path.display()))
            .io()?;
        if !quiet {
            println!("{}", frame_line(&o));
        }
        log.write(&o)?;
        outcomes.push(o);
    }
    log.finish()?;
    let report = RunReport::from_outcomes(&outcomes, None, start.elapsed().as_secs_f64() * 1e3);
    println!("{}", report.summary());
    acquired(&outcomes)
}

fn scenario(name: &str, cfg: &TrackerConfig, seed: u64) -> Result<Scenario, Failure> {
    Scenario::builtin(name, cfg.optics, seed)
        .with_context(|| format!("known scenarios: {}", BUILTIN_NAMES.join(", ")))
        .usage()
}

fn write_truth(dir: &Path, truths: &[GroundTruth]) -> Result<(), Failure> {
    let mut s = String::from("frame,x,y,angle_deg\n");
    for t in truths {
        s.push_str(&format!("{},{},{},{}\n", t.frame, t.x, t.y, t.angle_deg));
    }
    write_file(&dir.join("ground_truth.csv"), s.as_bytes())
}

fn cmd_sim(a: SimArgs, quiet: bool) -> Outcome {
    let cfg = load_config(a.config.as_deref())?;
    let sc = scenario(&a.scenario, &cfg, a.seed)?;
    if let Some(dir) = &a.dump_frames {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display())).io()?;
    }
    let mut dump_err = None;
    let run = run_sim(sc, &cfg, a.frames, |r: &FrameResult| {
        if let Some(dir) = &a.dump_frames {
            if dump_err.is_none() {
                if let Err(e) = write_file(&dir.join(format!("frame_{:05}.pgm", r.frame_index)), &r.image.to_pgm()) {
                    dump_err = Some(e);
                }
            }
        }
        if !quiet {
            if let Some(o) = &r.outcome {
                println!("{}", frame_line(o));
            }
        }
    })
    .usage()?;
    if let Some(e) = dump_err {
        return Err(e);
    }
    if let Some(dir) = &a.dump_frames {
        write_truth(dir, &run.truths)?;
    }
    let mut log = Log::create(a.log.as_deref())?;
    for o in &run.outcomes {
        log.write(o)?;
    }
    log.finish()?;
    println!("{}", run.report.summary());
    acquired(&run.outcomes)
}

fn cmd_bank(a: BankArgs, quiet: bool) -> Outcome {
    let cfg = load_config(a.config.as_deref())?;
    let template = read_pgm(&a.template)?;
    let bank = build_bank(&template, cfg.bank_count, cfg.bank_step_deg).usage()?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display())).io()?;
    for e in bank.entries() {
        let path = a.out.join(format!("rot_{:03}.pgm", e.angle_deg.round() as i64));
        write_file(&path, &e.patch.to_pgm())?;
        if !quiet {
            println!("{}", path.display());
        }
    }
    println!("wrote {} templates to {}", bank.len(), a.out.display());
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Outcome {
    let cfg = load_config(a.config.as_deref())?;
    let template = match &a.template {
        Some(p) => read_pgm(p)?,
        None => target_patch(DEFAULT_TARGET_W, DEFAULT_TARGET_H, 0),
    };
    if template.width() >= a.width || template.height() >= a.height || a.window == 0 {
        return Err(Failure::Usage(anyhow!(
            "template {}x{} and window {} must fit a {}x{} frame",
            template.width(),
            template.height(),
            a.window,
            a.width,
            a.height
        )));
    }
    let r = run_bench(a.width, a.height, &template, a.window, a.reps, cfg.bank_count, cfg.bank_step_deg).usage()?;
    println!("{}", r.summary());
    Ok(())
}

fn cmd_serve(a: ServeArgs, quiet: bool) -> Outcome {
    let cfg = load_config(a.config.as_deref())?;
    let sc = scenario(&a.scenario, &cfg, a.seed)?;
    let scene = Scene::new(sc, a.frames).usage()?;
    let mut lp = ClosedLoop::without_template(scene, cfg.clone()).usage()?;
    if let Some(p) = &a.template {
        lp.set_template(&read_pgm(p)?).usage()?;
    }
    let mut link = Link::bind(&a.listen).with_context(|| format!("binding {}", a.listen)).io()?;
    if let Some(g) = &a.ground {
        let addr = g
            .to_socket_addrs()
            .with_context(|| format!("resolving {g}"))
            .usage()?
            .next()
            .ok_or_else(|| Failure::Usage(anyhow!("no address for {g}")))?;
        link.set_ground(addr);
    }
    if !quiet {
        println!("listening on {}", link.local_addr().io()?);
    }
    let mut payload = Payload::new(lp, link, cfg.sample_every);
    let mut log = Log::create(a.log.as_deref())?;
    let mut outcomes = Vec::new();
    let mut truths = Vec::new();
    let mut seen = 0;
    let start = Instant::now();
    for _ in 0..a.frames {
        let r = payload.step().io()?;
        if !quiet {
            for ap in &payload.applied()[seen..] {
                match ap {
                    Applied::Template { width, height } => println!("template selected: {width}x{height}"),
                    Applied::Ignored(why) => println!("selection ignored: {why}"),
                }
            }
        }
        seen = payload.applied().len();
        if let Some(o) = r.outcome {
            if !quiet {
                println!("{}", frame_line(&o));
            }
            log.write(&o)?;
            outcomes.push(o);
            truths.push(r.truth);
        }
        if a.frame_ms > 0 {
            thread::sleep(Duration::from_millis(a.frame_ms));
        }
    }
    log.finish()?;
    let report = RunReport::from_outcomes(&outcomes, Some(&truths), start.elapsed().as_secs_f64() * 1e3);
    println!("{}", report.summary());
    acquired(&outcomes)
}

fn cmd_roi(a: RoiArgs) -> Outcome {
    let msg = match (&a.patch, a.frame, a.rect) {
        (Some(p), _, _) => Message::PatchUpload { image: read_pgm(p)? },
        (None, Some(frame_id), Some(rect)) => Message::RoiSelect { frame_id, rect },
        _ => return Err(Failure::Usage(anyhow!("need --frame and --rect, or --patch"))),
    };
    send_message(&a.send, &msg).with_context(|| format!("sending to {}", a.send)).io()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let q = cli.quiet;
    let result = match cli.command {
        Cmd::Track(a) => cmd_track(a, q),
        Cmd::Sim(a) => cmd_sim(a, q),
        Cmd::Bank(a) => cmd_bank(a, q),
        Cmd::Bench(a) => cmd_bench(a),
        Cmd::Serve(a) => cmd_serve(a, q),
        Cmd::Roi(a) => cmd_roi(a),
    };
    let _ = io::stdout().flush();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::NeverAcquired) => {
            eprintln!("error: no target was ever acquired");
            ExitCode::from(3)
        }
    }
}
