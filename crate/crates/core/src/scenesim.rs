//! Deterministic synthetic scenes for closed-loop tracking runs.
//!
//! The world is an unbounded plane with a seeded smooth texture. The camera
//! sees a `frame_w`×`frame_h` window into it whose offset follows the gimbal:
//! `counts / counts_per_pixel` pixels per axis, the inverse of the tracker's
//! pixel-to-count mapping. At zero counts frame pixel `(i, j)` shows world
//! point `(i, j)`.
//!
//! Target positions use the matcher's center convention: patch pixel
//! `(w/2, h/2)` sits at the reported position. The patch is rotated about
//! its geometric center with the same rotation as [`warp_patch`].
//!
//! [`warp_patch`]: crate::warp::warp_patch

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::config::OpticsConfig;
use crate::gimbal::GimbalState;
use crate::imagebuf::{GrayImage, Rect};
use crate::warp::{inverse_rotate, sample_bilinear};

pub const DEFAULT_TARGET_W: usize = 22;
pub const DEFAULT_TARGET_H: usize = 36;

/// World texture extends this far beyond the zero-gimbal frame; beyond it
/// the texture is edge-extended.
const WORLD_MARGIN: f64 = 1200.0;
const COARSE_SPACING: f64 = 14.0;
const FINE_SPACING: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("unknown scenario {0:?}")]
    Unknown(String),
    #[error("target leaves the world at frame {frame} (position {x:.1}, {y:.1})")]
    OutOfWorld { frame: u64, x: f64, y: f64 },
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

/// Target center path in world pixels; rates are per frame.
#[derive(Debug, Clone, PartialEq)]
pub enum Trajectory {
    Line {
        start: (f64, f64),
        velocity: (f64, f64),
    },
    Circle {
        center: (f64, f64),
        radius: f64,
        rate_deg: f64,
    },
    /// Constant-speed polyline; the target rests at the last point.
    Waypoints { points: Vec<(f64, f64)>, speed: f64 },
    /// Piecewise lines, each starting at its own frame and position, so
    /// the path may jump.
    Segments(Vec<Segment>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start_frame: u64,
    pub start: (f64, f64),
    pub velocity: (f64, f64),
}

impl Trajectory {
    pub fn position(&self, frame: u64) -> (f64, f64) {
        let t = frame as f64;
        match self {
            Trajectory::Line { start, velocity } => (start.0 + velocity.0 * t, start.1 + velocity.1 * t),
            Trajectory::Circle {
                center,
                radius,
                rate_deg,
            } => {
                let a = (rate_deg * t).to_radians();
                (center.0 + radius * a.cos(), center.1 + radius * a.sin())
            }
            Trajectory::Waypoints { points, speed } => {
                let mut remaining = speed * t;
                for pair in points.windows(2) {
                    let (a, b) = (pair[0], pair[1]);
                    let len = (b.0 - a.0).hypot(b.1 - a.1);
                    if remaining <= len && len > 0.0 {
                        let f = remaining / len;
                        return (a.0 + (b.0 - a.0) * f, a.1 + (b.1 - a.1) * f);
                    }
                    remaining -= len;
                }
                *points.last().unwrap_or(&(0.0, 0.0))
            }
            Trajectory::Segments(segs) => {
                let seg = segs
                    .iter()
                    .rev()
                    .find(|s| s.start_frame <= frame)
                    .or(segs.first())
                    .expect("validated non-empty");
                let dt = frame as f64 - seg.start_frame as f64;
                (seg.start.0 + seg.velocity.0 * dt, seg.start.1 + seg.velocity.1 * dt)
            }
        }
    }
}

/// Piecewise-linear function of the frame index, held constant outside
/// its knots.
#[derive(Debug, Clone, PartialEq)]
pub struct Ramp(pub Vec<(u64, f64)>);

impl Ramp {
    pub fn constant(v: f64) -> Ramp {
        Ramp(vec![(0, v)])
    }

    pub fn at(&self, frame: u64) -> f64 {
        let k = &self.0;
        match k.iter().position(|&(f, _)| f > frame) {
            None => k.last().map_or(0.0, |p| p.1),
            Some(0) => k[0].1,
            Some(i) => {
                let (f0, v0) = k[i - 1];
                let (f1, v1) = k[i];
                v0 + (v1 - v0) * (frame - f0) as f64 / (f1 - f0) as f64
            }
        }
    }
}

/// The target is not drawn where its world position falls inside `rect`
/// during frames `start..end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Occlusion {
    pub start: u64,
    pub end: u64,
    /// World-pixel rectangle as (x, y, w, h).
    pub rect: (f64, f64, f64, f64),
}

impl Occlusion {
    fn hides(&self, frame: u64, x: f64, y: f64) -> bool {
        let (rx, ry, rw, rh) = self.rect;
        (self.start..self.end).contains(&frame) && x >= rx && x < rx + rw && y >= ry && y < ry + rh
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub optics: OpticsConfig,
    pub target_w: usize,
    pub target_h: usize,
    pub trajectory: Trajectory,
    /// Degrees per frame.
    pub target_spin: f64,
    pub gain: Ramp,
    pub offset: Ramp,
    /// Gray levels, 1σ.
    pub noise_sigma: f64,
    pub occlusions: Vec<Occlusion>,
    pub seed: u64,
    /// Seconds between frames as seen by the filter.
    pub frame_dt: f64,
}

/// Per-frame truth in frame pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruth {
    pub frame: u64,
    pub x: f64,
    pub y: f64,
    pub angle_deg: f64,
    /// False while any part of the target is occluded.
    pub visible: bool,
}

pub const BUILTIN_NAMES: [&str; 7] = ["cv", "turn", "spin", "occlude", "relight", "blurless-stopstart", "teleport"];

impl Scenario {
    fn base(name: &str, optics: OpticsConfig, seed: u64, trajectory: Trajectory) -> Scenario {
        Scenario {
            name: name.to_string(),
            optics,
            target_w: DEFAULT_TARGET_W,
            target_h: DEFAULT_TARGET_H,
            trajectory,
            target_spin: 0.0,
            gain: Ramp::constant(1.0),
            offset: Ramp::constant(0.0),
            noise_sigma: 2.0,
            occlusions: Vec::new(),
            seed,
            frame_dt: 1.0,
        }
    }

    /// Builds one of [`BUILTIN_NAMES`] for the given camera.
    pub fn builtin(name: &str, optics: OpticsConfig, seed: u64) -> Result<Scenario, ScenarioError> {
        let (cx, cy) = (
            (optics.frame_w as f64 / 2.0).round(),
            (optics.frame_h as f64 / 2.0).round(),
        );
        let start = (cx - 40.0, cy - 30.0);
        let cv = Trajectory::Line {
            start,
            velocity: (1.5, 0.75),
        };
        let s = match name {
            "cv" => Scenario::base(name, optics, seed, cv),
            "turn" => Scenario::base(
                name,
                optics,
                seed,
                Trajectory::Circle {
                    center: (cx, cy),
                    radius: 60.0,
                    rate_deg: 1.5,
                },
            ),
            "spin" => Scenario {
                target_spin: 3.0,
                ..Scenario::base(
                    name,
                    optics,
                    seed,
                    Trajectory::Line {
                        start: (cx, cy),
                        velocity: (0.0, 0.0),
                    },
                )
            },
            "occlude" => {
                let mut s = Scenario::base(name, optics, seed, cv.clone());
                s.occlusions.push(occluder_over(&cv, 40, 44, s.target_w, s.target_h));
                s
            }
            "relight" => Scenario {
                gain: Ramp(vec![(0, 0.7), (300, 1.3)]),
                ..Scenario::base(name, optics, seed, cv)
            },
            "blurless-stopstart" => {
                let v = (2.0, 1.0);
                let p1 = (start.0 + 60.0 * v.0, start.1 + 60.0 * v.1);
                let p2 = (p1.0 - 2.0 * 60.0, p1.1);
                Scenario::base(
                    name,
                    optics,
                    seed,
                    Trajectory::Segments(vec![
                        Segment {
                            start_frame: 0,
                            start,
                            velocity: v,
                        },
                        Segment {
                            start_frame: 60,
                            start: p1,
                            velocity: (0.0, 0.0),
                        },
                        Segment {
                            start_frame: 120,
                            start: p1,
                            velocity: (-2.0, 0.0),
                        },
                        Segment {
                            start_frame: 180,
                            start: p2,
                            velocity: (1.0, -1.0),
                        },
                    ]),
                )
            }
            "teleport" => teleport_scenario(optics, seed, 5, 150.0),
            other => return Err(ScenarioError::Unknown(other.to_string())),
        };
        Ok(s)
    }

    /// Target position at `frame`, world pixels.
    pub fn target_position(&self, frame: u64) -> (f64, f64) {
        self.trajectory.position(frame)
    }

    pub fn target_angle(&self, frame: u64) -> f64 {
        (self.target_spin * frame as f64).rem_euclid(360.0)
    }
}

/// Occluder covering the whole target footprint along `traj` during
/// `start..end`.
pub fn occluder_over(traj: &Trajectory, start: u64, end: u64, tw: usize, th: usize) -> Occlusion {
    let r = (tw as f64).hypot(th as f64) / 2.0 + 2.0;
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for f in start..end {
        let (x, y) = traj.position(f);
        x0 = x0.min(x - r);
        y0 = y0.min(y - r);
        x1 = x1.max(x + r);
        y1 = y1.max(y + r);
    }
    Occlusion {
        start,
        end,
        rect: (x0, y0, x1 - x0, y1 - y0),
    }
}

/// Constant-velocity target hidden for `hidden` frames from frame 40, then
/// reappearing `jump` pixels to the right of its path.
pub fn teleport_scenario(optics: OpticsConfig, seed: u64, hidden: u64, jump: f64) -> Scenario {
    let (cx, cy) = (
        (optics.frame_w as f64 / 2.0).round(),
        (optics.frame_h as f64 / 2.0).round(),
    );
    let start = (cx - 40.0, cy - 30.0);
    let v = (1.0, 0.5);
    let t_jump = 40 + hidden;
    let before = Segment {
        start_frame: 0,
        start,
        velocity: v,
    };
    let after = Segment {
        start_frame: t_jump,
        start: (start.0 + v.0 * t_jump as f64 + jump, start.1 + v.1 * t_jump as f64),
        velocity: v,
    };
    let traj = Trajectory::Segments(vec![before, after]);
    let mut s = Scenario::base("teleport", optics, seed, traj.clone());
    s.occlusions.push(occluder_over(
        &Trajectory::Segments(vec![before]),
        40,
        t_jump,
        s.target_w,
        s.target_h,
    ));
    s
}

/// Smooth seeded target pattern: a few signed Gaussian blobs on mid-gray.
pub fn target_patch(w: usize, h: usize, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7a26_e7b1_0000_0001);
    let blobs: Vec<(f64, f64, f64, f64)> = (0..6)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            (
                rng.gen_range(0.15..0.85) * w as f64,
                rng.gen_range(0.1..0.9) * h as f64,
                rng.gen_range(2.5..4.5),
                sign * rng.gen_range(45.0..70.0),
            )
        })
        .collect();
    GrayImage::from_fn(w, h, |x, y| {
        let v = blobs.iter().fold(128.0, |acc, &(bx, by, s, a)| {
            let d2 = (x as f64 - bx).powi(2) + (y as f64 - by).powi(2);
            acc + a * (-d2 / (2.0 * s * s)).exp()
        });
        v.round().clamp(20.0, 235.0) as u8
    })
    .expect("positive size")
}

struct Lattice {
    spacing: f64,
    origin: f64,
    cols: usize,
    rows: usize,
    values: Vec<f32>,
}

impl Lattice {
    fn new(spacing: f64, extent: (f64, f64), amplitude: f64, rng: &mut ChaCha8Rng) -> Lattice {
        let cols = ((extent.0 + 2.0 * WORLD_MARGIN) / spacing).ceil() as usize + 2;
        let rows = ((extent.1 + 2.0 * WORLD_MARGIN) / spacing).ceil() as usize + 2;
        let values = (0..cols * rows)
            .map(|_| (rng.gen_range(-1.0..1.0) * amplitude) as f32)
            .collect();
        Lattice {
            spacing,
            origin: -WORLD_MARGIN,
            cols,
            rows,
            values,
        }
    }

    fn sample(&self, x: f64, y: f64) -> f64 {
        let gx = ((x - self.origin) / self.spacing).clamp(0.0, (self.cols - 1) as f64);
        let gy = ((y - self.origin) / self.spacing).clamp(0.0, (self.rows - 1) as f64);
        let (x0, y0) = (gx.floor() as usize, gy.floor() as usize);
        let (x1, y1) = ((x0 + 1).min(self.cols - 1), (y0 + 1).min(self.rows - 1));
        let (fx, fy) = (gx - x0 as f64, gy - y0 as f64);
        let v = |c: usize, r: usize| f64::from(self.values[r * self.cols + c]);
        let top = v(x0, y0) * (1.0 - fx) + v(x1, y0) * fx;
        let bottom = v(x0, y1) * (1.0 - fx) + v(x1, y1) * fx;
        top * (1.0 - fy) + bottom * fy
    }
}

/// A scenario prepared for rendering.
pub struct Scene {
    scenario: Scenario,
    patch: GrayImage,
    coarse: Lattice,
    fine: Lattice,
}

impl Scene {
    /// Prepares textures and checks that the target stays inside the world
    /// for the first `frames` frames.
    pub fn new(scenario: Scenario, frames: u64) -> Result<Scene, ScenarioError> {
        let o = &scenario.optics;
        if scenario.target_w == 0 || scenario.target_h == 0 {
            return Err(ScenarioError::Invalid("empty target".into()));
        }
        if scenario.target_w >= o.frame_w || scenario.target_h >= o.frame_h {
            return Err(ScenarioError::Invalid("target larger than frame".into()));
        }
        if let Trajectory::Segments(s) = &scenario.trajectory {
            if s.is_empty() {
                return Err(ScenarioError::Invalid("no trajectory segments".into()));
            }
        }
        if let Trajectory::Waypoints { points, .. } = &scenario.trajectory {
            if points.is_empty() {
                return Err(ScenarioError::Invalid("no waypoints".into()));
            }
        }
        if !(scenario.frame_dt > 0.0) || scenario.noise_sigma < 0.0 {
            return Err(ScenarioError::Invalid("frame_dt must be positive, noise non-negative".into()));
        }
        let half = (scenario.target_w.max(scenario.target_h) as f64) / 2.0;
        let world = (
            -WORLD_MARGIN + half,
            -WORLD_MARGIN + half,
            o.frame_w as f64 + WORLD_MARGIN - half,
            o.frame_h as f64 + WORLD_MARGIN - half,
        );
        for f in 0..frames {
            let (x, y) = scenario.target_position(f);
            if !(x >= world.0 && y >= world.1 && x <= world.2 && y <= world.3) {
                return Err(ScenarioError::OutOfWorld { frame: f, x, y });
            }
            if !(scenario.gain.at(f) > 0.0) {
                return Err(ScenarioError::Invalid(format!("gain must be positive (frame {f})")));
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
        let extent = (o.frame_w as f64, o.frame_h as f64);
        let coarse = Lattice::new(COARSE_SPACING, extent, 16.0, &mut rng);
        let fine = Lattice::new(FINE_SPACING, extent, 10.0, &mut rng);
        let patch = target_patch(scenario.target_w, scenario.target_h, scenario.seed);
        Ok(Scene {
            scenario,
            patch,
            coarse,
            fine,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    /// The unrotated target, usable as the tracker's stored template.
    pub fn patch(&self) -> &GrayImage {
        &self.patch
    }

    /// Camera offset in world pixels for a gimbal pose.
    pub fn camera_offset(&self, gimbal: &GimbalState) -> (f64, f64) {
        let k = self.scenario.optics.counts_per_pixel();
        (gimbal.pan_signed() as f64 / k, gimbal.tilt() as f64 / k)
    }

    pub fn ground_truth(&self, gimbal: &GimbalState, frame: u64) -> GroundTruth {
        let (px, py) = self.scenario.target_position(frame);
        let (ox, oy) = self.camera_offset(gimbal);
        let visible = !self.scenario.occlusions.iter().any(|o| {
            let (rx, ry, rw, rh) = o.rect;
            let r = (self.scenario.target_w as f64).hypot(self.scenario.target_h as f64) / 2.0;
            (o.start..o.end).contains(&frame)
                && px + r > rx
                && px - r < rx + rw
                && py + r > ry
                && py - r < ry + rh
        });
        GroundTruth {
            frame,
            x: px - ox,
            y: py - oy,
            angle_deg: self.scenario.target_angle(frame),
            visible,
        }
    }

    fn background(&self, x: f64, y: f64) -> f64 {
        128.0 + self.coarse.sample(x, y) + self.fine.sample(x, y)
    }

    /// Renders frame `frame` with the camera at `gimbal`.
    pub fn render(&self, gimbal: &GimbalState, frame: u64) -> GrayImage {
        let s = &self.scenario;
        let (fw, fh) = (s.optics.frame_w, s.optics.frame_h);
        let (ox, oy) = self.camera_offset(gimbal);
        let (px, py) = s.target_position(frame);
        let alpha = s.target_angle(frame).to_radians();
        let (tw, th) = (s.target_w, s.target_h);
        // matcher center (w/2, h/2) vs geometric center ((w-1)/2, (h-1)/2)
        let gx = px - (tw / 2) as f64 + (tw as f64 - 1.0) / 2.0;
        let gy = py - (th / 2) as f64 + (th as f64 - 1.0) / 2.0;
        let reach = (tw as f64).hypot(th as f64) / 2.0 + 1.0;
        let gain = s.gain.at(frame);
        let offset = s.offset.at(frame);

        let mut noise_rng = ChaCha8Rng::seed_from_u64(s.seed);
        noise_rng.set_stream(frame.wrapping_add(1));

        let mut data = Vec::with_capacity(fw * fh);
        for j in 0..fh {
            let wy = j as f64 + oy;
            for i in 0..fw {
                let wx = i as f64 + ox;
                let mut v = None;
                if (wx - gx).abs() <= reach && (wy - gy).abs() <= reach && !s.occlusions.iter().any(|o| o.hides(frame, wx, wy)) {
                    let (sx, sy) = inverse_rotate(tw, th, alpha, wx - gx, wy - gy);
                    v = sample_bilinear(&self.patch, sx, sy);
                }
                let base = v.unwrap_or_else(|| self.background(wx, wy));
                let noise: f64 = if s.noise_sigma > 0.0 {
                    s.noise_sigma * noise_rng.sample::<f64, _>(StandardNormal)
                } else {
                    0.0
                };
                data.push((gain * base + offset + noise).round().clamp(0.0, 255.0) as u8);
            }
        }
        GrayImage::new(fw, fh, data).expect("frame dimensions are positive")
    }

    /// Frame-pixel rectangle that would hold the unrotated target when it
    /// sits at `(x, y)` (matcher center convention), if it fits.
    pub fn target_rect(&self, x: f64, y: f64) -> Option<Rect> {
        let (tw, th) = (self.scenario.target_w, self.scenario.target_h);
        let left = x.round() as i64 - (tw / 2) as i64;
        let top = y.round() as i64 - (th / 2) as i64;
        let o = &self.scenario.optics;
        (left >= 0 && top >= 0 && left as usize + tw <= o.frame_w && top as usize + th <= o.frame_h)
            .then(|| Rect::new(left as usize, top as usize, tw, th))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcher::zmncc;
    use crate::tracker::gimbal_offset;
    use crate::matcher::Detection;
    use crate::warp::warp_patch;

    fn optics() -> OpticsConfig {
        OpticsConfig {
            frame_w: 240,
            frame_h: 180,
            ..OpticsConfig::default()
        }
    }

    fn still(noise: f64, spin: f64) -> Scenario {
        Scenario {
            noise_sigma: noise,
            target_spin: spin,
            ..Scenario::base(
                "still",
                optics(),
                3,
                Trajectory::Line {
                    start: (120.0, 90.0),
                    velocity: (0.0, 0.0),
                },
            )
        }
    }

    #[test]
    fn static_scene_is_deterministic() {
        let scene = Scene::new(still(0.0, 0.0), 10).unwrap();
        let g = GimbalState::default();
        assert_eq!(scene.render(&g, 0), scene.render(&g, 1));

        let noisy = Scene::new(still(3.0, 0.0), 10).unwrap();
        assert_eq!(noisy.render(&g, 4), noisy.render(&g, 4));
        assert_ne!(noisy.render(&g, 4), noisy.render(&g, 5));
    }

    #[test]
    fn target_is_composited_losslessly() {
        for (spin, expected) in [(0.0, None), (180.0, Some(180.0)), (90.0, Some(90.0))] {
            let scene = Scene::new(still(0.0, spin), 2).unwrap();
            let frame = scene.render(&GimbalState::default(), 1);
            let patch = scene.patch();
            let rotated = match expected {
                None => patch.clone(),
                Some(a) => warp_patch(patch, f64::to_radians(a)),
            };
            // compare the area both the warped patch and the scene cover:
            // for 90° that is the central square of the patch
            let (tw, th) = (patch.width(), patch.height());
            let (left, top) = (120 - tw / 2, 90 - th / 2);
            let inset = if spin == 90.0 { (th - tw) / 2 } else { 0 };
            for y in inset..th - inset {
                for x in 0..tw {
                    assert_eq!(frame.get(left + x, top + y), rotated.get(x, y), "spin {spin} at ({x}, {y})");
                }
            }
        }
    }

    #[test]
    fn recentering_command_centers_target() {
        let mut sc = still(0.0, 0.0);
        sc.trajectory = Trajectory::Line {
            start: (160.0, 60.0),
            velocity: (0.0, 0.0),
        };
        let scene = Scene::new(sc, 2).unwrap();
        let g = GimbalState::default();
        let gt = scene.ground_truth(&g, 0);
        let d = Detection {
            x: gt.x,
            y: gt.y,
            best_score: 1.0,
            best_angle_deg: 0.0,
            support: 1,
        };
        let (dp, dt) = gimbal_offset(&d, &scene.scenario().optics);
        let g2 = g.command(dp, dt);
        let gt2 = scene.ground_truth(&g2, 1);
        let (cx, cy) = scene.scenario().optics.center();
        assert!((gt2.x - cx).abs() <= 1.0 && (gt2.y - cy).abs() <= 1.0, "{gt2:?}");

        // and the rendered target agrees with the truth
        let frame = scene.render(&g2, 1);
        let c = zmncc(&frame, scene.patch(), gt2.x.round() as i64, gt2.y.round() as i64).unwrap();
        assert!(c > 0.95, "{c}");
    }

    #[test]
    fn gain_change_keeps_correlation() {
        let mut sc = still(0.0, 0.0);
        sc.gain = Ramp(vec![(0, 1.0), (5, 1.0), (6, 1.3)]);
        sc.offset = Ramp::constant(-20.0);
        let scene = Scene::new(sc, 10).unwrap();
        let g = GimbalState::default();
        for f in [0, 8] {
            let frame = scene.render(&g, f);
            assert!(zmncc(&frame, scene.patch(), 120, 90).unwrap() >= 0.99);
        }
    }

    #[test]
    fn ramp_interpolates() {
        let r = Ramp(vec![(0, 0.7), (300, 1.3)]);
        assert_eq!(r.at(0), 0.7);
        assert!((r.at(150) - 1.0).abs() < 1e-12);
        assert_eq!(r.at(1000), 1.3);
        assert_eq!(Ramp(vec![(10, 2.0)]).at(0), 2.0);
    }

    #[test]
    fn trajectories() {
        let c = Trajectory::Circle {
            center: (0.0, 0.0),
            radius: 10.0,
            rate_deg: 90.0,
        };
        let p = c.position(1);
        assert!(p.0.abs() < 1e-9 && (p.1 - 10.0).abs() < 1e-9);
        let w = Trajectory::Waypoints {
            points: vec![(0.0, 0.0), (10.0, 0.0), (10.0, 10.0)],
            speed: 4.0,
        };
        assert_eq!(w.position(2), (8.0, 0.0));
        assert_eq!(w.position(4), (10.0, 6.0));
        assert_eq!(w.position(100), (10.0, 10.0));
        let s = Trajectory::Segments(vec![
            Segment {
                start_frame: 0,
                start: (0.0, 0.0),
                velocity: (1.0, 0.0),
            },
            Segment {
                start_frame: 5,
                start: (100.0, 0.0),
                velocity: (0.0, 1.0),
            },
        ]);
        assert_eq!(s.position(4), (4.0, 0.0));
        assert_eq!(s.position(7), (100.0, 2.0));
    }

    #[test]
    fn builtins_resolve_and_validate() {
        let o = OpticsConfig::default();
        for name in BUILTIN_NAMES {
            let s = Scenario::builtin(name, o, 1).unwrap();
            Scene::new(s, 300).unwrap();
        }
        assert_eq!(Scenario::builtin("nope", o, 1), Err(ScenarioError::Unknown("nope".into())));
        assert_eq!(Scenario::builtin("spin", o, 1).unwrap().target_angle(30), 90.0);
    }

    #[test]
    fn leaving_world_is_rejected() {
        let mut s = still(0.0, 0.0);
        s.trajectory = Trajectory::Line {
            start: (120.0, 90.0),
            velocity: (50.0, 0.0),
        };
        assert!(matches!(Scene::new(s, 100), Err(ScenarioError::OutOfWorld { .. })));
    }

    #[test]
    fn occlusion_hides_target() {
        let mut s = still(0.0, 0.0);
        s.occlusions.push(occluder_over(&s.trajectory, 2, 4, 22, 36));
        let scene = Scene::new(s, 6).unwrap();
        let g = GimbalState::default();
        assert!(scene.ground_truth(&g, 1).visible);
        assert!(!scene.ground_truth(&g, 2).visible);
        let hidden = scene.render(&g, 3);
        assert!(zmncc(&hidden, scene.patch(), 120, 90).unwrap() < 0.5);
        assert!(zmncc(&scene.render(&g, 4), scene.patch(), 120, 90).unwrap() > 0.99);
    }
}
