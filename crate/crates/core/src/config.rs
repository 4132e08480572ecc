//! Tracker configuration and its JSON file form.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ekf::NoiseConfig;
use crate::gimbal::COUNTS_PER_RADIAN;
use crate::matcher::DEFAULT_THRESHOLD;
use crate::warp::{DEFAULT_BANK_COUNT, DEFAULT_BANK_STEP_DEG};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid config JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Camera geometry used to turn pixel offsets into gimbal counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticsConfig {
    /// Horizontal field of view in radians.
    pub hfov: f64,
    pub frame_w: usize,
    pub frame_h: usize,
    pub counts_per_radian: f64,
}

impl OpticsConfig {
    /// Angle subtended by one pixel (square pixels, linear model).
    pub fn angle_per_pixel(&self) -> f64 {
        self.hfov / self.frame_w as f64
    }

    pub fn counts_per_pixel(&self) -> f64 {
        self.angle_per_pixel() * self.counts_per_radian
    }

    /// Pixel coordinates of the optical axis.
    pub fn center(&self) -> (f64, f64) {
        ((self.frame_w as f64 - 1.0) / 2.0, (self.frame_h as f64 - 1.0) / 2.0)
    }
}

impl Default for OpticsConfig {
    fn default() -> Self {
        OpticsConfig {
            hfov: 30f64.to_radians(),
            frame_w: 640,
            frame_h: 480,
            counts_per_radian: COUNTS_PER_RADIAN,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig {
    pub threshold: f64,
    pub noise: NoiseConfig,
    /// Consecutive misses before the search falls back to the full frame.
    pub miss_limit: u32,
    pub bank_count: usize,
    pub bank_step_deg: u32,
    pub optics: OpticsConfig,
    /// Ground-link decimation, spatial and temporal.
    pub sample_every: usize,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            threshold: DEFAULT_THRESHOLD,
            noise: NoiseConfig::default(),
            miss_limit: 5,
            bank_count: DEFAULT_BANK_COUNT,
            bank_step_deg: DEFAULT_BANK_STEP_DEG,
            optics: OpticsConfig::default(),
            sample_every: 4,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return bad("threshold must be in (0, 1]");
        }
        if self.miss_limit < 1 {
            return bad("miss_limit must be at least 1");
        }
        if self.bank_count == 0 || self.bank_count as u64 * u64::from(self.bank_step_deg) != 360 {
            return bad("bank_count * bank_step_deg must equal 360");
        }
        let o = &self.optics;
        if !(o.hfov > 0.0 && o.hfov < std::f64::consts::PI) {
            return bad("hfov_deg must be in (0, 180)");
        }
        if o.frame_w == 0 || o.frame_h == 0 {
            return bad("frame_w and frame_h must be positive");
        }
        if !(o.counts_per_radian > 0.0) {
            return bad("counts_per_radian must be positive");
        }
        if self.sample_every == 0 {
            return bad("sample_every must be at least 1");
        }
        self.noise
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<TrackerConfig, ConfigError> {
        let file: ConfigFile = serde_json::from_str(text)?;
        let cfg = file.into_config();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ConfigFile::from_config(self)).expect("plain data serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sigma {
    Uniform(f64),
    PerAxis([f64; 4]),
}

/// On-disk configuration. Every key is optional; unknown keys are errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub threshold: f64,
    pub sigma: Sigma,
    pub r_pos: f64,
    pub kappa: f64,
    pub miss_limit: u32,
    pub bank_count: usize,
    pub bank_step_deg: u32,
    pub hfov_deg: f64,
    pub frame_w: usize,
    pub frame_h: usize,
    pub p0_vel_var: f64,
    pub sample_every: usize,
}

impl Default for ConfigFile {
    fn default() -> Self {
        ConfigFile::from_config(&TrackerConfig::default())
    }
}

impl ConfigFile {
    fn from_config(c: &TrackerConfig) -> Self {
        let s = c.noise.sigma;
        ConfigFile {
            threshold: c.threshold,
            sigma: if s.iter().all(|&v| v == s[0]) {
                Sigma::Uniform(s[0])
            } else {
                Sigma::PerAxis(s)
            },
            r_pos: c.noise.r_pos,
            kappa: c.noise.kappa,
            miss_limit: c.miss_limit,
            bank_count: c.bank_count,
            bank_step_deg: c.bank_step_deg,
            hfov_deg: c.optics.hfov.to_degrees(),
            frame_w: c.optics.frame_w,
            frame_h: c.optics.frame_h,
            p0_vel_var: c.noise.p0_vel_var,
            sample_every: c.sample_every,
        }
    }

    fn into_config(self) -> TrackerConfig {
        TrackerConfig {
            threshold: self.threshold,
            noise: NoiseConfig {
                sigma: match self.sigma {
                    Sigma::Uniform(v) => [v; 4],
                    Sigma::PerAxis(v) => v,
                },
                r_pos: self.r_pos,
                kappa: self.kappa,
                p0_vel_var: self.p0_vel_var,
            },
            miss_limit: self.miss_limit,
            bank_count: self.bank_count,
            bank_step_deg: self.bank_step_deg,
            optics: OpticsConfig {
                hfov: self.hfov_deg.to_radians(),
                frame_w: self.frame_w,
                frame_h: self.frame_h,
                counts_per_radian: COUNTS_PER_RADIAN,
            },
            sample_every: self.sample_every,
        }
    }
}
