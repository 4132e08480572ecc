//! Closed-loop simulation: render, track, actuate, repeat.

use std::time::Instant;

use thiserror::Error;

use crate::config::TrackerConfig;
use crate::gimbal::GimbalState;
use crate::imagebuf::GrayImage;
use crate::scenesim::{GroundTruth, Scenario, ScenarioError, Scene};
use crate::tracker::{Status, TrackOutcome, Tracker, TrackerError};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Tracker(#[from] TrackerError),
    #[error("scenario camera {0}x{1} differs from tracker frames {2}x{3}")]
    Mismatch(usize, usize, usize, usize),
}

/// Summary of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub frames_processed: u64,
    /// Frames with a detection (initialized or tracking).
    pub tracked_count: u64,
    /// Frames without a detection after acquisition (miss or redetecting).
    pub miss_count: u64,
    pub redetect_count: u64,
    /// Mean distance between detection and ground truth, when truth exists.
    pub mean_abs_pixel_error: Option<f64>,
    pub ms_per_frame: f64,
}

impl RunReport {
    pub fn from_outcomes(outcomes: &[TrackOutcome], truths: Option<&[GroundTruth]>, elapsed_ms: f64) -> RunReport {
        let count = |f: &dyn Fn(Status) -> bool| outcomes.iter().filter(|o| f(o.status)).count() as u64;
        let errors: Vec<f64> = match truths {
            Some(t) => outcomes
                .iter()
                .zip(t)
                .filter_map(|(o, g)| o.detection.map(|d| (d.x - g.x).hypot(d.y - g.y)))
                .collect(),
            None => Vec::new(),
        };
        let n = outcomes.len() as u64;
        RunReport {
            frames_processed: n,
            tracked_count: count(&|s| matches!(s, Status::Tracking | Status::Initialized)),
            miss_count: count(&|s| matches!(s, Status::Miss | Status::Redetecting)),
            redetect_count: count(&|s| s == Status::Redetecting),
            mean_abs_pixel_error: (!errors.is_empty()).then(|| errors.iter().sum::<f64>() / errors.len() as f64),
            ms_per_frame: if n > 0 { elapsed_ms / n as f64 } else { 0.0 },
        }
    }

    /// One-line human summary.
    pub fn summary(&self) -> String {
        let err = self
            .mean_abs_pixel_error
            .map_or_else(|| "n/a".to_string(), |e| format!("{e:.2}px"));
        format!(
            "frames={} tracked={} miss={} redetect={} mean_err={} ms/frame={:.2}",
            self.frames_processed, self.tracked_count, self.miss_count, self.redetect_count, err, self.ms_per_frame
        )
    }
}

/// Everything produced for one simulated frame.
#[derive(Debug, Clone)]
pub struct FrameResult {
    pub frame_index: u64,
    pub image: GrayImage,
    /// Absent while no template has been selected.
    pub outcome: Option<TrackOutcome>,
    /// Truth at render time, before the frame's gimbal command.
    pub truth: GroundTruth,
    /// Gimbal pose the frame was rendered with.
    pub gimbal: GimbalState,
}

/// A scene, a tracker and a gimbal wired together.
pub struct ClosedLoop {
    scene: Scene,
    cfg: TrackerConfig,
    tracker: Option<Tracker>,
    gimbal: GimbalState,
    next_frame: u64,
}

impl ClosedLoop {
    /// Loop with the scene's own target patch as the stored template.
    pub fn new(scene: Scene, cfg: TrackerConfig) -> Result<ClosedLoop, SimError> {
        let mut l = ClosedLoop::without_template(scene, cfg)?;
        let patch = l.scene.patch().clone();
        l.set_template(&patch)?;
        Ok(l)
    }

    /// Loop that renders and actuates nothing until a template arrives.
    pub fn without_template(scene: Scene, cfg: TrackerConfig) -> Result<ClosedLoop, SimError> {
        let (so, to) = (&scene.scenario().optics, &cfg.optics);
        if (so.frame_w, so.frame_h) != (to.frame_w, to.frame_h) {
            return Err(SimError::Mismatch(so.frame_w, so.frame_h, to.frame_w, to.frame_h));
        }
        cfg.validate().map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        Ok(ClosedLoop {
            scene,
            cfg,
            tracker: None,
            gimbal: GimbalState::default(),
            next_frame: 0,
        })
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn gimbal(&self) -> &GimbalState {
        &self.gimbal
    }

    pub fn tracker(&self) -> Option<&Tracker> {
        self.tracker.as_ref()
    }

    /// Selects a new template; the next frame starts a fresh acquisition.
    pub fn set_template(&mut self, patch: &GrayImage) -> Result<(), SimError> {
        match self.tracker.as_mut() {
            Some(t) => t.replace_template(patch)?,
            None => {
                let mut t = Tracker::from_template(patch, self.cfg.clone())?;
                if self.next_frame > 0 {
                    let dt = self.scene.scenario().frame_dt;
                    t.resume_clock(self.next_frame, (self.next_frame - 1) as f64 * dt);
                }
                self.tracker = Some(t);
            }
        }
        Ok(())
    }

    /// Renders, tracks and actuates one frame.
    pub fn advance(&mut self) -> Result<FrameResult, SimError> {
        let f = self.next_frame;
        let image = self.scene.render(&self.gimbal, f);
        let truth = self.scene.ground_truth(&self.gimbal, f);
        let rendered_with = self.gimbal;
        let dt = self.scene.scenario().frame_dt;
        let outcome = match self.tracker.as_mut() {
            Some(t) => {
                let o = t.process(&image, dt)?;
                if let Some((dp, dtilt)) = o.gimbal_cmd {
                    let next = self.gimbal.command(dp, dtilt);
                    let (mp, mt) = self.gimbal.delta_to(&next);
                    self.gimbal = next;
                    t.camera_moved(mp, mt);
                }
                Some(o)
            }
            None => None,
        };
        self.next_frame += 1;
        Ok(FrameResult {
            frame_index: f,
            image,
            outcome,
            truth,
            gimbal: rendered_with,
        })
    }
}

/// Result of [`run_sim`].
#[derive(Debug, Clone)]
pub struct SimRun {
    pub outcomes: Vec<TrackOutcome>,
    pub truths: Vec<GroundTruth>,
    pub gimbal_trace: Vec<GimbalState>,
    pub report: RunReport,
}

/// Runs `frames` closed-loop frames of `scenario`, calling `on_frame` after
/// each one.
pub fn run_sim(
    scenario: Scenario,
    cfg: &TrackerConfig,
    frames: u64,
    mut on_frame: impl FnMut(&FrameResult),
) -> Result<SimRun, SimError> {
    let scene = Scene::new(scenario, frames)?;
    let mut lp = ClosedLoop::new(scene, cfg.clone())?;
    let start = Instant::now();
    let mut outcomes = Vec::with_capacity(frames as usize);
    let mut truths = Vec::with_capacity(frames as usize);
    let mut gimbal_trace = Vec::with_capacity(frames as usize);
    for _ in 0..frames {
        let r = lp.advance()?;
        on_frame(&r);
        outcomes.push(r.outcome.expect("template set at construction"));
        truths.push(r.truth);
        gimbal_trace.push(r.gimbal);
    }
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    let report = RunReport::from_outcomes(&outcomes, Some(&truths), elapsed);
    Ok(SimRun {
        outcomes,
        truths,
        gimbal_trace,
        report,
    })
}
