//! Simulated pan/tilt controller with integer encoder counts.
//!
//! One count is 100 µrad. Pan is continuous and wraps once per revolution;
//! tilt is clamped to ±30°. Each command is one control tick and moves each
//! axis by at most `max_counts_per_step`.
//!
//! The controller speaks a line-oriented ASCII protocol:
//!
//! ```text
//! MV <d_pan> <d_tilt>   ->  OK <pan> <tilt>
//! POS                   ->  POS <pan> <tilt>
//! RST                   ->  OK 0 0
//! anything else         ->  ERR <reason>
//! ```

use std::io::{self, BufRead, Write};

/// Radians per encoder count.
pub const RADIANS_PER_COUNT: f64 = 1e-4;
pub const COUNTS_PER_RADIAN: f64 = 1.0 / RADIANS_PER_COUNT;
/// `round(2π / 1e-4)`.
pub const COUNTS_PER_REV: i64 = 62832;
/// `round(30° / 1e-4 rad)`.
pub const TILT_LIMIT: i64 = 5236;
pub const DEFAULT_MAX_COUNTS_PER_STEP: i64 = 2000;

pub fn counts_to_radians(counts: i64) -> f64 {
    counts as f64 * RADIANS_PER_COUNT
}

/// Nearest whole count, halves away from zero.
pub fn radians_to_counts(rad: f64) -> i64 {
    (rad * COUNTS_PER_RADIAN).round() as i64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GimbalState {
    pan: i64,
    tilt: i64,
    max_step: i64,
}

impl Default for GimbalState {
    fn default() -> Self {
        GimbalState::new(DEFAULT_MAX_COUNTS_PER_STEP)
    }
}

impl GimbalState {
    pub fn new(max_counts_per_step: i64) -> Self {
        GimbalState {
            pan: 0,
            tilt: 0,
            max_step: max_counts_per_step.max(0),
        }
    }

    /// Pan position normalized to `[0, COUNTS_PER_REV)`.
    pub fn pan(&self) -> i64 {
        self.pan
    }

    pub fn tilt(&self) -> i64 {
        self.tilt
    }

    /// Pan as a signed offset in `(-COUNTS_PER_REV/2, COUNTS_PER_REV/2]`.
    pub fn pan_signed(&self) -> i64 {
        if self.pan > COUNTS_PER_REV / 2 {
            self.pan - COUNTS_PER_REV
        } else {
            self.pan
        }
    }

    pub fn max_counts_per_step(&self) -> i64 {
        self.max_step
    }

    /// Applies one relative move. Saturation is silent.
    pub fn command(&self, d_pan: i64, d_tilt: i64) -> GimbalState {
        let d_pan = d_pan.clamp(-self.max_step, self.max_step);
        let d_tilt = d_tilt.clamp(-self.max_step, self.max_step);
        GimbalState {
            pan: (self.pan + d_pan).rem_euclid(COUNTS_PER_REV),
            tilt: (self.tilt + d_tilt).clamp(-TILT_LIMIT, TILT_LIMIT),
            max_step: self.max_step,
        }
    }

    /// Signed motion from `self` to `next`, taking the short way round in pan.
    pub fn delta_to(&self, next: &GimbalState) -> (i64, i64) {
        let mut dp = (next.pan - self.pan).rem_euclid(COUNTS_PER_REV);
        if dp > COUNTS_PER_REV / 2 {
            dp -= COUNTS_PER_REV;
        }
        (dp, next.tilt - self.tilt)
    }

    pub fn reset(&self) -> GimbalState {
        GimbalState::new(self.max_step)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Move { d_pan: i64, d_tilt: i64 },
    Position,
    Reset,
}

/// Parses one protocol line. The error string is the reply reason.
pub fn parse_line(text: &str) -> Result<Command, &'static str> {
    let line = text.strip_suffix('\n').unwrap_or(text);
    let line = line.strip_suffix('\r').unwrap_or(line);
    let mut parts = line.split(' ');
    let verb = parts.next().unwrap_or("");
    let args: Vec<&str> = parts.collect();
    match verb {
        "MV" => {
            let [p, t] = args.as_slice() else {
                return Err("parse");
            };
            match (p.parse(), t.parse()) {
                (Ok(d_pan), Ok(d_tilt)) => Ok(Command::Move { d_pan, d_tilt }),
                _ => Err("parse"),
            }
        }
        "POS" if args.is_empty() => Ok(Command::Position),
        "RST" if args.is_empty() => Ok(Command::Reset),
        "POS" | "RST" => Err("parse"),
        _ => Err("unknown"),
    }
}

pub fn format_reply(verb: &str, state: &GimbalState) -> String {
    format!("{verb} {} {}\n", state.pan(), state.tilt())
}

/// Applies one protocol line, returning the new state and the reply.
pub fn handle_line(state: &GimbalState, text: &str) -> (GimbalState, String) {
    match parse_line(text) {
        Ok(Command::Move { d_pan, d_tilt }) => {
            let next = state.command(d_pan, d_tilt);
            (next, format_reply("OK", &next))
        }
        Ok(Command::Position) => (*state, format_reply("POS", state)),
        Ok(Command::Reset) => {
            let next = state.reset();
            (next, format_reply("OK", &next))
        }
        Err(reason) => (*state, format!("ERR {reason}\n")),
    }
}

/// Serves the protocol over a byte stream until EOF, one reply per line.
pub fn serve<R: BufRead, W: Write>(state: &mut GimbalState, input: R, mut output: W) -> io::Result<()> {
    for line in input.lines() {
        let (next, reply) = handle_line(state, &line?);
        *state = next;
        output.write_all(reply.as_bytes())?;
        output.flush()?;
    }
    Ok(())
}
