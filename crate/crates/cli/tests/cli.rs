use std::fs;
use std::net::UdpSocket;
use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::time::Duration;

use uastrack_core::config::TrackerConfig;
use uastrack_core::gimbal::GimbalState;
use uastrack_core::groundlink::{decode, Message};
use uastrack_core::imagebuf::{load_pgm, GrayImage};
use uastrack_core::scenesim::{Scenario, Scene};
use uastrack_core::tracker::Status;
use uastrack_core::tracklog::read_log_file;

fn uastrack(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uastrack")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const SMALL: &str = r#"{"frame_w": 240, "frame_h": 180}"#;

#[test]
fn unknown_flag_is_a_usage_error() {
    let o = uastrack(&["sim", "--scenario", "cv", "--frames", "1", "--bogus"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(code(&uastrack(&[])), 1);
    assert_eq!(code(&uastrack(&["--help"])), 0);
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"threshold": 0.9, "colour": 3}"#).unwrap();
    let o = uastrack(&["sim", "--scenario", "cv", "--frames", "1", "--config", p(&cfg)]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
    let o = uastrack(&["sim", "--scenario", "nope", "--frames", "1"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn missing_files_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.pgm");
    let o = uastrack(&["bank", "--template", p(&missing), "--out", p(dir.path())]);
    assert_eq!(code(&o), 2);
    let o = uastrack(&["sim", "--scenario", "cv", "--frames", "1", "--config", p(&dir.path().join("none.json"))]);
    assert_eq!(code(&o), 2);
}

#[test]
fn sim_dump_then_offline_track() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.json");
    fs::write(&cfg, SMALL).unwrap();
    let frames = dir.path().join("frames");
    let log = dir.path().join("sim.csv");
    let o = uastrack(&[
        "sim", "--scenario", "cv", "--frames", "12", "--seed", "4", "--config", p(&cfg), "--log", p(&log),
        "--dump-frames", p(&frames),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 13);
    assert!(lines[12].starts_with("frames=12 tracked=12 "));
    assert_eq!(read_log_file(&log).unwrap().len(), 12);

    let truth = fs::read_to_string(frames.join("ground_truth.csv")).unwrap();
    let rows: Vec<&str> = truth.lines().collect();
    assert_eq!(rows[0], "frame,x,y,angle_deg");
    assert_eq!(rows.len(), 13);

    let first = load_pgm(&fs::read(frames.join("frame_00000.pgm")).unwrap()).unwrap();
    assert_eq!((first.width(), first.height()), (240, 180));
}

#[test]
fn offline_track_over_still_camera_frames() {
    let dir = tempfile::tempdir().unwrap();
    let frames = dir.path().join("frames");
    fs::create_dir(&frames).unwrap();
    let optics = TrackerConfig::from_json(SMALL).unwrap().optics;
    let scene = Scene::new(Scenario::builtin("turn", optics, 4).unwrap(), 12).unwrap();
    let still = GimbalState::default();
    for f in 0..12 {
        fs::write(frames.join(format!("frame_{f:05}.pgm")), scene.render(&still, f).to_pgm()).unwrap();
    }
    let tpl_path = dir.path().join("tpl.pgm");
    fs::write(&tpl_path, scene.patch().to_pgm()).unwrap();

    let track_log = dir.path().join("track.csv");
    let o = uastrack(&["track", "--frames", p(&frames), "--template", p(&tpl_path), "--log", p(&track_log), "--quiet"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 1, "quiet prints only the summary");
    let recs = read_log_file(&track_log).unwrap();
    assert_eq!(recs.len(), 12);
    assert_eq!(recs[0].status().unwrap(), Status::Initialized);
    assert!(recs[1..].iter().all(|r| r.status().unwrap() == Status::Tracking));

    // a list file selects and orders frames
    let list = dir.path().join("frames.list");
    fs::write(&list, "# replay\nframes/frame_00003.pgm\nframes/frame_00004.pgm\n").unwrap();
    let o = uastrack(&["track", "--frames", p(&list), "--template", p(&tpl_path), "--quiet"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8(o.stdout).unwrap().starts_with("frames=2 "));
}

#[test]
fn never_acquired_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let frames = dir.path().join("flat");
    fs::create_dir(&frames).unwrap();
    for i in 0..3 {
        let img = GrayImage::filled(80, 60, 90 + i).unwrap();
        fs::write(frames.join(format!("f{i}.pgm")), img.to_pgm()).unwrap();
    }
    let tpl = GrayImage::from_fn(10, 12, |x, y| (x * 20 + y * 7) as u8).unwrap();
    let tpl_path = dir.path().join("t.pgm");
    fs::write(&tpl_path, tpl.to_pgm()).unwrap();
    let log = dir.path().join("log.csv");
    let o = uastrack(&["track", "--frames", p(&frames), "--template", p(&tpl_path), "--log", p(&log)]);
    assert_eq!(code(&o), 3);
    let recs = read_log_file(&log).unwrap();
    assert!(recs.iter().all(|r| r.status().unwrap() == Status::Lost));
}

#[test]
fn bank_writes_every_rotation() {
    let dir = tempfile::tempdir().unwrap();
    let tpl = GrayImage::from_fn(22, 36, |x, y| (x * 9 + y * 5) as u8).unwrap();
    let tpl_path = dir.path().join("t.pgm");
    fs::write(&tpl_path, tpl.to_pgm()).unwrap();
    let out = dir.path().join("bank");
    let o = uastrack(&["bank", "--template", p(&tpl_path), "--out", p(&out), "--quiet"]);
    assert_eq!(code(&o), 0);
    let mut names: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names.len(), 36);
    assert_eq!((names[0].as_str(), names[35].as_str()), ("rot_000.pgm", "rot_350.pgm"));
    let zero = load_pgm(&fs::read(out.join("rot_000.pgm")).unwrap()).unwrap();
    assert_eq!(zero, tpl);
}

#[test]
fn bench_reports_speedup() {
    let o = uastrack(&["bench", "--width", "200", "--height", "150", "--window", "32", "--reps", "1"]);
    assert_eq!(code(&o), 0);
    let s = String::from_utf8(o.stdout).unwrap();
    let ratio: f64 = s.rsplit("speedup ").next().unwrap().trim().trim_end_matches('x').parse().unwrap();
    assert!(ratio > 1.0, "{s}");
    assert_eq!(code(&uastrack(&["bench", "--width", "20", "--height", "20"])), 1);
}

#[test]
fn serve_takes_roi_from_operator() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.json");
    fs::write(&cfg, SMALL).unwrap();
    let log = dir.path().join("serve.csv");
    let ground = UdpSocket::bind("127.0.0.1:0").unwrap();
    ground.set_read_timeout(Some(Duration::from_secs(10))).unwrap();
    let listen = UdpSocket::bind("127.0.0.1:0").unwrap().local_addr().unwrap().to_string();
    let child = Command::new(env!("CARGO_BIN_EXE_uastrack"))
        .args(["serve", "--listen", &listen, "--scenario", "cv", "--frames", "80", "--frame-ms", "25"])
        .args(["--config", p(&cfg), "--log", p(&log), "--ground"])
        .arg(ground.local_addr().unwrap().to_string())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();

    let mut buf = vec![0u8; 70000];
    let n = ground.recv(&mut buf).unwrap();
    let Message::FrameSample { frame_id, image } = decode(&buf[..n]).unwrap() else {
        panic!("expected a frame sample");
    };
    assert_eq!((image.width(), image.height()), (60, 45));

    // no template yet, so the gimbal is still at rest
    let optics = TrackerConfig::from_json(SMALL).unwrap().optics;
    let scene = Scene::new(Scenario::builtin("cv", optics, 0).unwrap(), 80).unwrap();
    let gt = scene.ground_truth(&GimbalState::default(), u64::from(frame_id));
    // largest sample-grid rect inside the 22x36 target
    let (left, top) = (gt.x.round() as usize - 11, gt.y.round() as usize - 18);
    let (x, y) = (left.div_ceil(4), top.div_ceil(4));
    let (w, h) = ((left + 22 - 4 * x) / 4, (top + 36 - 4 * y) / 4);
    let rect = format!("{x},{y},{w},{h}");
    let o = uastrack(&["roi", "--send", &listen, "--frame", &frame_id.to_string(), "--rect", &rect]);
    assert_eq!(code(&o), 0);

    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains(&format!("template selected: {}x{}", 4 * w, 4 * h)), "{stdout}");
    let recs = read_log_file(&log).unwrap();
    assert_eq!(recs[0].status().unwrap(), Status::Initialized);
    let tracking = recs.iter().filter(|r| r.status().unwrap() == Status::Tracking).count();
    assert_eq!(tracking, recs.len() - 1);
}

#[test]
fn roi_requires_rect_or_patch() {
    assert_eq!(code(&uastrack(&["roi", "--send", "127.0.0.1:9"])), 1);
    assert_eq!(code(&uastrack(&["roi", "--send", "127.0.0.1:9", "--frame", "1", "--rect", "1,2,0,4"])), 1);
}
