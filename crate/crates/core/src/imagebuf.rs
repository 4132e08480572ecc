//! Grayscale image container, binary PGM I/O and region statistics.

use std::fmt;

use thiserror::Error;

/// Axis-aligned rectangle in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    pub const fn new(x: usize, y: usize, w: usize, h: usize) -> Self {
        Rect { x, y, w, h }
    }

    pub fn area(&self) -> usize {
        self.w * self.h
    }

    /// One past the rightmost column.
    pub fn right(&self) -> usize {
        self.x + self.w
    }

    /// One past the bottom row.
    pub fn bottom(&self) -> usize {
        self.y + self.h
    }

    pub fn is_empty(&self) -> bool {
        self.w == 0 || self.h == 0
    }

    pub fn contains_point(&self, x: usize, y: usize) -> bool {
        x >= self.x && x < self.right() && y >= self.y && y < self.bottom()
    }

    /// True when `other` lies entirely inside `self`.
    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x >= self.x
            && other.y >= self.y
            && other.right() <= self.right()
            && other.bottom() <= self.bottom()
    }

    /// Multiplies every coordinate by `factor`.
    pub fn scaled(&self, factor: usize) -> Rect {
        Rect::new(self.x * factor, self.y * factor, self.w * factor, self.h * factor)
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}x{})", self.x, self.y, self.w, self.h)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ImageError {
    #[error("image dimensions must be non-zero, got {width}x{height}")]
    ZeroDimension { width: usize, height: usize },
    #[error("sample buffer holds {got} bytes, {width}x{height} image needs {expected}")]
    LengthMismatch {
        width: usize,
        height: usize,
        expected: usize,
        got: usize,
    },
    #[error("rect {rect} is outside the {width}x{height} image")]
    OutOfBounds {
        rect: Rect,
        width: usize,
        height: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PgmError {
    #[error("not a binary PGM stream (expected magic \"P5\")")]
    BadMagic,
    #[error("malformed PGM header: {0}")]
    BadHeader(&'static str),
    #[error("unsupported maxval {0}, only 255 is accepted")]
    UnsupportedMaxval(u32),
    #[error("PGM declares a zero dimension ({width}x{height})")]
    ZeroDimension { width: usize, height: usize },
    #[error("truncated PGM payload: expected {expected} bytes, got {got}")]
    Truncated { expected: usize, got: usize },
}

/// Owned row-major 8-bit grayscale image.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl fmt::Debug for GrayImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GrayImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::ZeroDimension { width, height });
        }
        let expected = width * height;
        if data.len() != expected {
            return Err(ImageError::LengthMismatch {
                width,
                height,
                expected,
                got: data.len(),
            });
        }
        Ok(GrayImage {
            width,
            height,
            data,
        })
    }

    /// Image filled with a single value.
    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self, ImageError> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> u8,
    ) -> Result<Self, ImageError> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    /// Sample at column `x`, row `y`. Panics when out of range.
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        assert!(x < self.width && y < self.height, "pixel ({x}, {y}) out of range");
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        assert!(x < self.width && y < self.height, "pixel ({x}, {y}) out of range");
        self.data[y * self.width + x] = value;
    }

    /// Row `y` as a slice.
    #[inline]
    pub fn row(&self, y: usize) -> &[u8] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn bounds(&self) -> Rect {
        Rect::new(0, 0, self.width, self.height)
    }

    pub fn check_rect(&self, r: &Rect) -> Result<(), ImageError> {
        if r.is_empty() || !self.bounds().contains_rect(r) {
            return Err(ImageError::OutOfBounds {
                rect: *r,
                width: self.width,
                height: self.height,
            });
        }
        Ok(())
    }

    /// Copies the pixels inside `r` into a new image.
    pub fn crop(&self, r: &Rect) -> Result<GrayImage, ImageError> {
        self.check_rect(r)?;
        let mut data = Vec::with_capacity(r.area());
        for y in r.y..r.bottom() {
            data.extend_from_slice(&self.row(y)[r.x..r.right()]);
        }
        GrayImage::new(r.w, r.h, data)
    }

    /// Arithmetic mean of the samples inside `r`.
    pub fn region_mean(&self, r: &Rect) -> Result<f64, ImageError> {
        self.check_rect(r)?;
        let sum: u64 = (r.y..r.bottom())
            .map(|y| {
                self.row(y)[r.x..r.right()]
                    .iter()
                    .map(|&v| u64::from(v))
                    .sum::<u64>()
            })
            .sum();
        Ok(sum as f64 / r.area() as f64)
    }

    /// Mean of all samples.
    pub fn mean(&self) -> f64 {
        let sum: u64 = self.data.iter().map(|&v| u64::from(v)).sum();
        sum as f64 / self.data.len() as f64
    }

    /// Copies `src` into this image with its top-left corner at `(x, y)`.
    pub fn paste(&mut self, src: &GrayImage, x: usize, y: usize) -> Result<(), ImageError> {
        let r = Rect::new(x, y, src.width, src.height);
        self.check_rect(&r)?;
        for row in 0..src.height {
            let start = (y + row) * self.width + x;
            self.data[start..start + src.width].copy_from_slice(src.row(row));
        }
        Ok(())
    }

    /// Keeps every `factor`-th pixel in both directions, starting at (0, 0).
    pub fn decimate(&self, factor: usize) -> GrayImage {
        let factor = factor.max(1);
        let w = self.width.div_ceil(factor);
        let h = self.height.div_ceil(factor);
        let mut data = Vec::with_capacity(w * h);
        for y in (0..self.height).step_by(factor) {
            data.extend(self.row(y).iter().step_by(factor));
        }
        GrayImage {
            width: w,
            height: h,
            data,
        }
    }

    /// Samples converted to `f64`, row-major.
    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|&v| f64::from(v)).collect()
    }

    /// Encodes as a canonical binary PGM.
    pub fn to_pgm(&self) -> Vec<u8> {
        save_pgm(self)
    }

    pub fn from_pgm(bytes: &[u8]) -> Result<GrayImage, PgmError> {
        load_pgm(bytes)
    }
}

/// Writes `"P5\n<w> <h>\n255\n"` followed by the raw samples.
pub fn save_pgm(img: &GrayImage) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", img.width, img.height);
    let mut out = Vec::with_capacity(header.len() + img.data.len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(&img.data);
    out
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    /// Skips whitespace and `#` comments (a comment runs to end of line).
    fn skip_separators(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &'static str) -> Result<u32, PgmError> {
        self.skip_separators();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(PgmError::BadHeader(what));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or(PgmError::BadHeader(what))
    }
}

/// Parses a binary PGM (P5, maxval 255). Trailing bytes after the payload are ignored.
pub fn load_pgm(bytes: &[u8]) -> Result<GrayImage, PgmError> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(PgmError::BadMagic);
    }
    let mut cur = HeaderCursor { bytes, pos: 2 };
    match bytes.get(2) {
        Some(b) if b.is_ascii_whitespace() || *b == b'#' => {}
        _ => return Err(PgmError::BadMagic),
    }
    let width = cur.number("missing or invalid width")? as usize;
    let height = cur.number("missing or invalid height")? as usize;
    let maxval = cur.number("missing or invalid maxval")?;
    if maxval != 255 {
        return Err(PgmError::UnsupportedMaxval(maxval));
    }
    if width == 0 || height == 0 {
        return Err(PgmError::ZeroDimension { width, height });
    }
    // exactly one whitespace byte separates maxval from the raster
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        Some(_) => return Err(PgmError::BadHeader("missing separator after maxval")),
        None => {
            return Err(PgmError::Truncated {
                expected: width * height,
                got: 0,
            })
        }
    }
    let expected = width * height;
    let payload = &bytes[cur.pos..];
    if payload.len() < expected {
        return Err(PgmError::Truncated {
            expected,
            got: payload.len(),
        });
    }
    Ok(GrayImage {
        width,
        height,
        data: payload[..expected].to_vec(),
    })
}
