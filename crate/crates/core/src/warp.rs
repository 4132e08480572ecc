//! Rotational warping and the rotated template bank.
//!
//! The point map is the similarity transform
//!
//! ```text
//! [x']   [ s·cosα  s·sinα  tx ] [x]
//! [y'] = [-s·sinα  s·cosα  ty ] [y]
//! [1 ]   [   0       0      1 ] [1]
//! ```
//!
//! Patches are warped by inverse mapping each destination pixel through the
//! pure rotation (s = 1, t = 0) about the patch center and sampling the source
//! bilinearly. Bank angles are labels in this same convention.

use thiserror::Error;

use crate::imagebuf::GrayImage;

/// Positions this close outside the source grid are snapped onto it, so that
/// exact multiples of 90° stay lossless despite `sin(π)` not being zero.
const EDGE_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    pub scale: f64,
    /// Rotation angle in radians.
    pub alpha: f64,
    pub tx: f64,
    pub ty: f64,
}

impl AffineMap {
    pub fn rotation(alpha: f64) -> Self {
        AffineMap {
            scale: 1.0,
            alpha,
            tx: 0.0,
            ty: 0.0,
        }
    }

    /// The 3×3 homogeneous matrix.
    pub fn matrix(&self) -> [[f64; 3]; 3] {
        let (sin, cos) = self.alpha.sin_cos();
        let (sc, ss) = (self.scale * cos, self.scale * sin);
        [[sc, ss, self.tx], [-ss, sc, self.ty], [0.0, 0.0, 1.0]]
    }

    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        let m = self.matrix();
        (
            m[0][0] * x + m[0][1] * y + m[0][2],
            m[1][0] * x + m[1][1] * y + m[1][2],
        )
    }
}

/// Forward point map `x' = Hx`.
pub fn apply_map(m: &AffineMap, x: f64, y: f64) -> (f64, f64) {
    m.apply(x, y)
}

/// Bilinear sample of `src` at a real position, or `None` when the position
/// falls outside the pixel grid.
pub fn sample_bilinear(src: &GrayImage, x: f64, y: f64) -> Option<f64> {
    let max_x = (src.width() - 1) as f64;
    let max_y = (src.height() - 1) as f64;
    if !(-EDGE_EPS..=max_x + EDGE_EPS).contains(&x) || !(-EDGE_EPS..=max_y + EDGE_EPS).contains(&y)
    {
        return None;
    }
    let x = x.clamp(0.0, max_x);
    let y = y.clamp(0.0, max_y);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(src.width() - 1);
    let y1 = (y0 + 1).min(src.height() - 1);
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let p = |xx, yy| f64::from(src.get(xx, yy));
    let top = p(x0, y0) * (1.0 - fx) + p(x1, y0) * fx;
    let bottom = p(x0, y1) * (1.0 - fx) + p(x1, y1) * fx;
    Some(top * (1.0 - fy) + bottom * fy)
}

/// Source position in `src` (of size `w`×`h`) feeding destination offset
/// `(dx, dy)` from the patch center, for a patch rotated by `alpha`.
#[inline]
pub fn inverse_rotate(w: usize, h: usize, alpha: f64, dx: f64, dy: f64) -> (f64, f64) {
    let (sin, cos) = alpha.sin_cos();
    let cx = (w as f64 - 1.0) / 2.0;
    let cy = (h as f64 - 1.0) / 2.0;
    // inverse of the rotation rows above
    (cx + cos * dx - sin * dy, cy + sin * dx + cos * dy)
}

/// Rotates `src` by `alpha` radians about its center, keeping its size.
/// Uncovered pixels take the patch mean.
pub fn warp_patch(src: &GrayImage, alpha: f64) -> GrayImage {
    let (w, h) = (src.width(), src.height());
    let fill = src.mean();
    let cx = (w as f64 - 1.0) / 2.0;
    let cy = (h as f64 - 1.0) / 2.0;
    GrayImage::from_fn(w, h, |i, j| {
        let (sx, sy) = inverse_rotate(w, h, alpha, i as f64 - cx, j as f64 - cy);
        let v = sample_bilinear(src, sx, sy).unwrap_or(fill);
        v.round().clamp(0.0, 255.0) as u8
    })
    .expect("dimensions come from a valid image")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BankError {
    #[error("bank of {count} templates at {step}° steps does not cover 360°")]
    BadCoverage { count: usize, step: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BankEntry {
    pub angle_deg: f64,
    pub patch: GrayImage,
}

/// Rotated copies of one template, ordered by increasing angle.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateBank {
    entries: Vec<BankEntry>,
    base_width: usize,
    base_height: usize,
}

impl TemplateBank {
    pub fn entries(&self) -> &[BankEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn base_width(&self) -> usize {
        self.base_width
    }

    pub fn base_height(&self) -> usize {
        self.base_height
    }

    /// The unrotated template.
    pub fn base(&self) -> &GrayImage {
        &self.entries[0].patch
    }
}

pub const DEFAULT_BANK_COUNT: usize = 36;
pub const DEFAULT_BANK_STEP_DEG: u32 = 10;

/// Builds `count` rotations of `patch` spaced `step` degrees apart.
pub fn build_bank(patch: &GrayImage, count: usize, step: u32) -> Result<TemplateBank, BankError> {
    if count == 0 || count as u64 * u64::from(step) != 360 {
        return Err(BankError::BadCoverage { count, step });
    }
    let entries = (0..count)
        .map(|k| {
            let angle_deg = (k as u32 * step) as f64;
            let patch = if k == 0 {
                patch.clone()
            } else {
                warp_patch(patch, angle_deg.to_radians())
            };
            BankEntry { angle_deg, patch }
        })
        .collect();
    Ok(TemplateBank {
        entries,
        base_width: patch.width(),
        base_height: patch.height(),
    })
}
