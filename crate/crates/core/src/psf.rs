//! Square, odd-sided, nonnegative blur kernels and their text format.
//!
//! The text format is a `PSF <side>` header line followed by `side` lines of
//! `side` whitespace-separated decimal floats.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Tolerance on the unit-sum invariant.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Largest side accepted by the text reader (half-side 24).
pub const MAX_TEXT_SIDE: usize = 49;

/// A normalized point spread function.
#[derive(Debug, Clone, PartialEq)]
pub struct Psf {
    side: usize,
    weights: Vec<f64>,
}

impl Psf {
    /// Validates an already-normalized kernel.
    pub fn new(side: usize, weights: Vec<f64>) -> Result<Self> {
        check_side(side)?;
        if weights.len() != side * side {
            return Err(Error::invalid(format!(
                "psf of side {side} needs {} weights, got {}",
                side * side,
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::invalid(format!("psf weight {w} is negative or non-finite")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::invalid(format!("psf weights sum to {sum}, expected 1")));
        }
        Ok(Self { side, weights })
    }

    /// Normalizes arbitrary nonnegative weights to unit sum.
    pub fn from_unnormalized(side: usize, mut weights: Vec<f64>) -> Result<Self> {
        check_side(side)?;
        if weights.len() != side * side {
            return Err(Error::invalid("weight count does not match side"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid("psf weights must be finite and nonnegative"));
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(Error::invalid("psf has no mass"));
        }
        weights.iter_mut().for_each(|w| *w /= sum);
        Self::new(side, weights)
    }

    /// Centered unit impulse.
    pub fn delta(side: usize) -> Result<Self> {
        check_side(side)?;
        let mut weights = vec![0.0; side * side];
        weights[(side / 2) * side + side / 2] = 1.0;
        Ok(Self { side, weights })
    }

    pub fn uniform(side: usize) -> Result<Self> {
        check_side(side)?;
        let n = side * side;
        Self::from_unnormalized(side, vec![1.0 / n as f64; n])
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// Half-side `l` such that `side = 2l + 1`.
    pub fn half(&self) -> usize {
        self.side / 2
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight at row `y`, column `x` of the grid.
    #[inline]
    pub fn at(&self, y: usize, x: usize) -> f64 {
        self.weights[y * self.side + x]
    }

    /// Weight at offset `(dy, dx)` from the center; zero outside the grid.
    pub fn at_offset(&self, dy: isize, dx: isize) -> f64 {
        let l = self.half() as isize;
        if dy.abs() > l || dx.abs() > l {
            return 0.0;
        }
        self.at((dy + l) as usize, (dx + l) as usize)
    }

    /// Serializes to the `PSF <side>` text format.
    pub fn to_text(&self) -> String {
        let mut out = format!("PSF {}\n", self.side);
        for row in self.weights.chunks(self.side) {
            let line: Vec<String> = row.iter().map(|w| format!("{w}")).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::parse("empty psf file"))?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some("PSF") {
            return Err(Error::parse("psf header must start with `PSF`"));
        }
        let side: usize = parts
            .next()
            .ok_or_else(|| Error::parse("psf header is missing the side"))?
            .parse()
            .map_err(|_| Error::parse("psf side is not an integer"))?;
        if parts.next().is_some() {
            return Err(Error::parse("trailing tokens in psf header"));
        }
        if side == 0 || side % 2 == 0 || side > MAX_TEXT_SIDE {
            return Err(Error::parse(format!("psf side {side} must be odd and in 1..={MAX_TEXT_SIDE}")));
        }
        let mut weights = Vec::with_capacity(side * side);
        for row in 0..side {
            let line = lines
                .next()
                .ok_or_else(|| Error::parse(format!("psf is missing row {row}")))?;
            let before = weights.len();
            for tok in line.split_whitespace() {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| Error::parse(format!("bad psf value `{tok}`")))?;
                weights.push(v);
            }
            if weights.len() - before != side {
                return Err(Error::parse(format!(
                    "psf row {row} has {} values, expected {side}",
                    weights.len() - before
                )));
            }
        }
        if lines.next().is_some() {
            return Err(Error::parse("trailing lines after psf rows"));
        }
        Self::new(side, weights).map_err(|e| Error::parse(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_text(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

fn check_side(side: usize) -> Result<()> {
    if side == 0 || side % 2 == 0 {
        return Err(Error::invalid(format!("psf side {side} must be odd")));
    }
    Ok(())
}
