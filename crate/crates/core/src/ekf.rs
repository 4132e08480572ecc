//! Constant-velocity Kalman filter over the target's image position.
//!
//! State is `[x, y, vx, vy]` in pixels and pixels per second. The motion
//! model is linear, so the extended filter's Jacobian is the transition
//! matrix itself and prediction/correction are the ordinary Kalman steps.
//! All algebra is fixed-size and written out by hand.

use thiserror::Error;

use crate::imagebuf::Rect;
use crate::matcher::valid_centers;

pub type Mat4 = [[f64; 4]; 4];
pub type Vec4 = [f64; 4];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error("time step must be positive, got {0}")]
    BadTimeStep(f64),
    #[error("noise parameter {name} must be positive, got {value}")]
    BadNoise { name: &'static str, value: f64 },
}

/// Process and measurement noise settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    /// Process noise intensities for x, y, vx, vy.
    pub sigma: [f64; 4],
    /// Measurement variance per axis (pixels²).
    pub r_pos: f64,
    /// Search window half-width in standard deviations.
    pub kappa: f64,
    /// Initial velocity variance ((pixels/s)²).
    pub p0_vel_var: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            sigma: [0.4; 4],
            r_pos: 1.0,
            kappa: 3.0,
            p0_vel_var: 25.0,
        }
    }
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<(), FilterError> {
        let named = [
            ("sigma[0]", self.sigma[0]),
            ("sigma[1]", self.sigma[1]),
            ("sigma[2]", self.sigma[2]),
            ("sigma[3]", self.sigma[3]),
            ("r_pos", self.r_pos),
            ("kappa", self.kappa),
            ("p0_vel_var", self.p0_vel_var),
        ];
        for (name, value) in named {
            if !(value > 0.0 && value.is_finite()) {
                return Err(FilterError::BadNoise { name, value });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackState {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub p: Mat4,
    /// Consecutive frames without a detection.
    pub misses: u32,
}

impl TrackState {
    /// Track started at a detected position with zero velocity.
    pub fn at(x: f64, y: f64, cfg: &NoiseConfig) -> Self {
        let mut p = [[0.0; 4]; 4];
        p[0][0] = cfg.r_pos;
        p[1][1] = cfg.r_pos;
        p[2][2] = cfg.p0_vel_var;
        p[3][3] = cfg.p0_vel_var;
        TrackState {
            x,
            y,
            vx: 0.0,
            vy: 0.0,
            p,
            misses: 0,
        }
    }

    pub fn vector(&self) -> Vec4 {
        [self.x, self.y, self.vx, self.vy]
    }

    fn with_vector(&self, v: Vec4, p: Mat4) -> Self {
        TrackState {
            x: v[0],
            y: v[1],
            vx: v[2],
            vy: v[3],
            p,
            misses: self.misses,
        }
    }

    pub fn trace(&self) -> f64 {
        (0..4).map(|i| self.p[i][i]).sum()
    }

    /// Moves the position estimate, e.g. to follow a known camera motion.
    pub fn shifted(&self, dx: f64, dy: f64) -> Self {
        TrackState {
            x: self.x + dx,
            y: self.y + dy,
            ..*self
        }
    }
}

fn identity() -> Mat4 {
    let mut m = [[0.0; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

fn mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn transpose(a: &Mat4) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = a[j][i];
        }
    }
    out
}

fn mul_vec(a: &Mat4, v: &Vec4) -> Vec4 {
    let mut out = [0.0; 4];
    for (i, o) in out.iter_mut().enumerate() {
        *o = (0..4).map(|k| a[i][k] * v[k]).sum();
    }
    out
}

fn symmetrize(p: &mut Mat4) {
    for i in 0..4 {
        for j in (i + 1)..4 {
            let m = 0.5 * (p[i][j] + p[j][i]);
            p[i][j] = m;
            p[j][i] = m;
        }
    }
}

fn check_dt(dt: f64) -> Result<(), FilterError> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(FilterError::BadTimeStep(dt))
    }
}

/// Transition Jacobian: identity with `dt` coupling position to velocity.
pub fn process_jacobian(dt: f64) -> Result<Mat4, FilterError> {
    check_dt(dt)?;
    let mut a = identity();
    a[0][2] = dt;
    a[1][3] = dt;
    Ok(a)
}

/// Process noise covariance.
///
/// Diagonal `a1, a2, dt·σ3, dt·σ4` with `a_i = dt·σ_i + dt³·σ_{i+2}/3`;
/// position/velocity coupling `b3` at (0,2) and `b4` at (1,3), with
/// `b_i = dt²·σ_i/2`.
pub fn process_noise(dt: f64, cfg: &NoiseConfig) -> Result<Mat4, FilterError> {
    check_dt(dt)?;
    let s = cfg.sigma;
    let a = |i: usize| dt * s[i] + dt.powi(3) * s[i + 2] / 3.0;
    let b = |i: usize| 0.5 * dt * dt * s[i];
    let (a1, a2, b3, b4) = (a(0), a(1), b(2), b(3));
    Ok([
        [a1, 0.0, b3, 0.0],
        [0.0, a2, 0.0, b4],
        [b3, 0.0, dt * s[2], 0.0],
        [0.0, b4, 0.0, dt * s[3]],
    ])
}

/// Propagates the state `dt` seconds ahead: `x⁻ = A x`, `P⁻ = A P Aᵀ + Q`.
pub fn predict(s: &TrackState, dt: f64, cfg: &NoiseConfig) -> Result<TrackState, FilterError> {
    let a = process_jacobian(dt)?;
    let q = process_noise(dt, cfg)?;
    let x = mul_vec(&a, &s.vector());
    let mut p = mul(&mul(&a, &s.p), &transpose(&a));
    for i in 0..4 {
        for j in 0..4 {
            p[i][j] += q[i][j];
        }
    }
    symmetrize(&mut p);
    Ok(s.with_vector(x, p))
}

/// Corrects a predicted state with a measured position `z`.
///
/// Observation is `H = [I₂ 0]`, measurement noise `V R Vᵀ` with `V = I₂`
/// and `R = r_pos·I₂`. Resets the miss counter.
pub fn update(s: &TrackState, z: [f64; 2], cfg: &NoiseConfig) -> TrackState {
    let p = &s.p;
    let innovation = [z[0] - s.x, z[1] - s.y];
    // S = H P Hᵀ + R is the upper-left 2×2 block plus R
    let s00 = p[0][0] + cfg.r_pos;
    let s01 = p[0][1];
    let s10 = p[1][0];
    let s11 = p[1][1] + cfg.r_pos;
    let det = s00 * s11 - s01 * s10;
    assert!(det > 0.0, "innovation covariance must be positive definite");
    let inv = [[s11 / det, -s01 / det], [-s10 / det, s00 / det]];

    // K = P Hᵀ S⁻¹; P Hᵀ is the first two columns of P
    let mut k = [[0.0; 2]; 4];
    for (i, row) in k.iter_mut().enumerate() {
        for (j, kij) in row.iter_mut().enumerate() {
            *kij = p[i][0] * inv[0][j] + p[i][1] * inv[1][j];
        }
    }

    let mut x = s.vector();
    for (i, xi) in x.iter_mut().enumerate() {
        *xi += k[i][0] * innovation[0] + k[i][1] * innovation[1];
    }

    // P = (I - K H) P
    let mut ikh = identity();
    for (i, row) in ikh.iter_mut().enumerate() {
        row[0] -= k[i][0];
        row[1] -= k[i][1];
    }
    let mut p_new = mul(&ikh, p);
    symmetrize(&mut p_new);

    let mut out = s.with_vector(x, p_new);
    out.misses = 0;
    out
}

/// Search window of template CENTERS around the predicted position.
///
/// Half-extents are `ceil(κ·σ_pos) + ceil(template/2)` per axis, clipped to
/// the centers that keep the template inside the frame. Falls back to the
/// whole valid area when the clipped window would be empty or would cover it.
pub fn search_window(
    s: &TrackState,
    tpl_w: usize,
    tpl_h: usize,
    frame_w: usize,
    frame_h: usize,
    cfg: &NoiseConfig,
) -> Rect {
    let valid = valid_centers(frame_w, frame_h, tpl_w, tpl_h)
        .expect("template must be smaller than the frame");
    let half = |var: f64, t: usize| -> f64 { (cfg.kappa * var.max(0.0).sqrt()).ceil() + t.div_ceil(2) as f64 };
    let hx = half(s.p[0][0], tpl_w);
    let hy = half(s.p[1][1], tpl_h);
    let (cx, cy) = (s.x.round(), s.y.round());

    let clip = |lo: f64, hi: f64, vlo: usize, vlen: usize| -> Option<(usize, usize)> {
        let vhi = (vlo + vlen) as f64; // exclusive
        let a = lo.max(vlo as f64);
        let b = (hi + 1.0).min(vhi);
        if !(a.is_finite() && b.is_finite()) || b <= a {
            return None;
        }
        Some((a as usize, (b - a) as usize))
    };
    match (
        clip(cx - hx, cx + hx, valid.x, valid.w),
        clip(cy - hy, cy + hy, valid.y, valid.h),
    ) {
        (Some((x, w)), Some((y, h))) => {
            let r = Rect::new(x, y, w, h);
            if r.area() >= valid.area() {
                valid
            } else {
                r
            }
        }
        _ => valid,
    }
}

/// Unclipped window size `(2·hx + 1, 2·hy + 1)`.
pub fn window_extent(s: &TrackState, tpl_w: usize, tpl_h: usize, cfg: &NoiseConfig) -> (f64, f64) {
    let half = |var: f64, t: usize| (cfg.kappa * var.max(0.0).sqrt()).ceil() + t.div_ceil(2) as f64;
    (2.0 * half(s.p[0][0], tpl_w) + 1.0, 2.0 * half(s.p[1][1], tpl_h) + 1.0)
}
