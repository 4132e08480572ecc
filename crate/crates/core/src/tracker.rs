//! The tracking loop: full-frame acquisition, Kalman-windowed detection,
//! miss handling with full-frame re-detection, and gimbal offsets.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::config::{OpticsConfig, TrackerConfig};
use crate::ekf::{predict, search_window, update, FilterError, TrackState};
use crate::imagebuf::{GrayImage, Rect};
use crate::matcher::{detect, scan, valid_centers, Detection};
use crate::warp::{build_bank, BankError, TemplateBank};

#[derive(Debug, Error)]
pub enum TrackerError {
    #[error("{tw}x{th} template does not fit in {fw}x{fh} frames")]
    TemplateTooLarge {
        tw: usize,
        th: usize,
        fw: usize,
        fh: usize,
    },
    #[error("frame is {got_w}x{got_h}, tracker is configured for {want_w}x{want_h}")]
    FrameSize {
        got_w: usize,
        got_h: usize,
        want_w: usize,
        want_h: usize,
    },
    #[error("step called before a target was acquired")]
    NotInitialized,
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Bank(#[from] BankError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Initialized,
    Tracking,
    Miss,
    Redetecting,
    Lost,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Initialized => "initialized",
            Status::Tracking => "tracking",
            Status::Miss => "miss",
            Status::Redetecting => "redetecting",
            Status::Lost => "lost",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Status {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "initialized" => Status::Initialized,
            "tracking" => Status::Tracking,
            "miss" => Status::Miss,
            "redetecting" => Status::Redetecting,
            "lost" => Status::Lost,
            other => return Err(format!("unknown status {other:?}")),
        })
    }
}

/// What happened on one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackOutcome {
    pub frame_index: u64,
    pub time_s: f64,
    pub status: Status,
    pub detection: Option<Detection>,
    /// Template centers that were scanned.
    pub window: Rect,
    pub state: Option<TrackState>,
    /// Relative (pan, tilt) move in encoder counts, issued on detections.
    pub gimbal_cmd: Option<(i64, i64)>,
}

/// Encoder counts that bring the detection onto the optical axis.
///
/// Positive pan turns the view toward +x, positive tilt toward +y.
pub fn gimbal_offset(d: &Detection, optics: &OpticsConfig) -> (i64, i64) {
    let (cx, cy) = optics.center();
    let k = optics.angle_per_pixel() * optics.counts_per_radian;
    (((d.x - cx) * k).round() as i64, ((d.y - cy) * k).round() as i64)
}

/// One tracking session. Frames must be fed in order.
#[derive(Debug, Clone)]
pub struct Tracker {
    cfg: TrackerConfig,
    bank: TemplateBank,
    state: Option<TrackState>,
    frame_index: u64,
    time_s: f64,
}

impl Tracker {
    pub fn new(bank: TemplateBank, cfg: TrackerConfig) -> Result<Tracker, TrackerError> {
        let (fw, fh) = (cfg.optics.frame_w, cfg.optics.frame_h);
        let (tw, th) = (bank.base_width(), bank.base_height());
        if valid_centers(fw, fh, tw, th).is_none() {
            return Err(TrackerError::TemplateTooLarge { tw, th, fw, fh });
        }
        Ok(Tracker {
            cfg,
            bank,
            state: None,
            frame_index: 0,
            time_s: 0.0,
        })
    }

    /// Builds the rotated bank from `template` per the configuration.
    pub fn from_template(template: &GrayImage, cfg: TrackerConfig) -> Result<Tracker, TrackerError> {
        let bank = build_bank(template, cfg.bank_count, cfg.bank_step_deg)?;
        Tracker::new(bank, cfg)
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    pub fn bank(&self) -> &TemplateBank {
        &self.bank
    }

    pub fn state(&self) -> Option<&TrackState> {
        self.state.as_ref()
    }

    pub fn is_initialized(&self) -> bool {
        self.state.is_some()
    }

    /// Continues frame numbering from an earlier session: the next frame is
    /// `next_frame`, and `last_time_s` is the time of the frame before it.
    pub fn resume_clock(&mut self, next_frame: u64, last_time_s: f64) {
        self.frame_index = next_frame;
        self.time_s = last_time_s;
    }

    /// Swaps in a new template bank and drops the current track.
    pub fn replace_template(&mut self, template: &GrayImage) -> Result<(), TrackerError> {
        let next = Tracker::from_template(template, self.cfg.clone())?;
        self.bank = next.bank;
        self.state = None;
        Ok(())
    }

    fn full_window(&self) -> Rect {
        let o = &self.cfg.optics;
        valid_centers(o.frame_w, o.frame_h, self.bank.base_width(), self.bank.base_height())
            .expect("checked at construction")
    }

    fn check_frame(&self, frame: &GrayImage) -> Result<(), TrackerError> {
        let o = &self.cfg.optics;
        if frame.width() != o.frame_w || frame.height() != o.frame_h {
            return Err(TrackerError::FrameSize {
                got_w: frame.width(),
                got_h: frame.height(),
                want_w: o.frame_w,
                want_h: o.frame_h,
            });
        }
        Ok(())
    }

    fn find(&self, frame: &GrayImage, window: &Rect) -> Option<Detection> {
        detect(&scan(frame, &self.bank, window, self.cfg.threshold))
    }

    fn emit(&mut self, outcome: TrackOutcome) -> TrackOutcome {
        self.frame_index += 1;
        outcome
    }

    /// Searches the whole frame and, on success, starts the filter at the
    /// detection centroid with zero velocity.
    pub fn initialize(&mut self, frame: &GrayImage) -> Result<TrackOutcome, TrackerError> {
        self.check_frame(frame)?;
        let window = self.full_window();
        let detection = self.find(frame, &window);
        self.state = detection.map(|d| TrackState::at(d.x, d.y, &self.cfg.noise));
        let outcome = TrackOutcome {
            frame_index: self.frame_index,
            time_s: self.time_s,
            status: if detection.is_some() {
                Status::Initialized
            } else {
                Status::Lost
            },
            detection,
            window,
            state: self.state,
            gimbal_cmd: detection.map(|d| gimbal_offset(&d, &self.cfg.optics)),
        };
        Ok(self.emit(outcome))
    }

    /// Predict, search, and correct on the next frame, `dt` seconds after
    /// the previous one.
    pub fn step(&mut self, frame: &GrayImage, dt: f64) -> Result<TrackOutcome, TrackerError> {
        self.check_frame(frame)?;
        let current = self.state.ok_or(TrackerError::NotInitialized)?;
        let predicted = predict(&current, dt, &self.cfg.noise)?;
        self.time_s += dt;

        let full = current.misses >= self.cfg.miss_limit;
        let window = if full {
            self.full_window()
        } else {
            let o = &self.cfg.optics;
            search_window(
                &predicted,
                self.bank.base_width(),
                self.bank.base_height(),
                o.frame_w,
                o.frame_h,
                &self.cfg.noise,
            )
        };

        let detection = self.find(frame, &window);
        let (state, status) = match detection {
            // a full-frame reacquisition restarts the filter like initialization
            Some(d) if full => (TrackState::at(d.x, d.y, &self.cfg.noise), Status::Tracking),
            Some(d) => (update(&predicted, [d.x, d.y], &self.cfg.noise), Status::Tracking),
            None => {
                let mut s = predicted;
                s.misses += 1;
                let status = if s.misses >= self.cfg.miss_limit {
                    Status::Redetecting
                } else {
                    Status::Miss
                };
                (s, status)
            }
        };
        self.state = Some(state);
        let outcome = TrackOutcome {
            frame_index: self.frame_index,
            time_s: self.time_s,
            status,
            detection,
            window,
            state: Some(state),
            gimbal_cmd: detection.map(|d| gimbal_offset(&d, &self.cfg.optics)),
        };
        Ok(self.emit(outcome))
    }

    /// Steps when a track exists, otherwise (re)tries acquisition.
    pub fn process(&mut self, frame: &GrayImage, dt: f64) -> Result<TrackOutcome, TrackerError> {
        if self.state.is_some() {
            self.step(frame, dt)
        } else {
            if self.frame_index > 0 {
                self.time_s += dt;
            }
            self.initialize(frame)
        }
    }

    /// Accounts for a camera move of `(d_pan, d_tilt)` counts: the scene
    /// shifts the opposite way in the image.
    pub fn camera_moved(&mut self, d_pan: i64, d_tilt: i64) {
        let k = self.cfg.optics.counts_per_pixel();
        if let Some(s) = self.state.as_mut() {
            *s = s.shifted(-(d_pan as f64) / k, -(d_tilt as f64) / k);
        }
    }
}
