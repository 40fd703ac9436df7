use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::psf::Psf;
use crate::rng::rng_from;

pub const MIN_HALF_SIDE: usize = 3;
pub const MAX_HALF_SIDE: usize = 24;

/// Parameters of the inertial random-walk camera trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkParams {
    /// Half-side `l`; the kernel is `(2l + 1) × (2l + 1)`.
    pub half: usize,
    pub steps: usize,
    /// Fraction of velocity retained per step, in `[0, 1)`.
    pub inertia: f64,
    /// Scale of the Gaussian velocity kick per step, in pixels.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for WalkParams {
    fn default() -> Self {
        Self {
            half: MIN_HALF_SIDE,
            steps: 256,
            inertia: 0.7,
            jitter: 0.5,
            seed: 0,
        }
    }
}

impl WalkParams {
    pub fn validate(&self) -> Result<()> {
        if !(MIN_HALF_SIDE..=MAX_HALF_SIDE).contains(&self.half) {
            return Err(Error::invalid(format!(
                "half-side {} outside {MIN_HALF_SIDE}..={MAX_HALF_SIDE}",
                self.half
            )));
        }
        if self.steps < 2 {
            return Err(Error::invalid("random walk needs at least 2 steps"));
        }
        if !(0.0..1.0).contains(&self.inertia) {
            return Err(Error::invalid("inertia must lie in [0, 1)"));
        }
        if !(self.jitter >= 0.0 && self.jitter.is_finite()) {
            return Err(Error::invalid("jitter must be finite and nonnegative"));
        }
        Ok(())
    }
}

/// Rasterizes a random motion trajectory into a `(2l + 1)²` kernel.
///
/// The trajectory starts at rest at the origin, `x ← x + v`,
/// `v ← inertia·v + jitter·g` with `g` a standard 2-D Gaussian. It is centred
/// on its centroid and, if its extent exceeds `l`, shrunk uniformly to fit the
/// grid; samples are then deposited with bilinear weights and the grid is
/// normalized.
pub fn random_walk_psf(params: &WalkParams) -> Result<Psf> {
    params.validate()?;
    let mut rng = rng_from(params.seed);
    let mut pos = (0.0f64, 0.0f64);
    let mut vel = (0.0f64, 0.0f64);
    let mut path = Vec::with_capacity(params.steps);
    for _ in 0..params.steps {
        path.push(pos);
        pos.0 += vel.0;
        pos.1 += vel.1;
        let gy: f64 = rng.sample(StandardNormal);
        let gx: f64 = rng.sample(StandardNormal);
        vel.0 = params.inertia * vel.0 + params.jitter * gy;
        vel.1 = params.inertia * vel.1 + params.jitter * gx;
    }

    let n = path.len() as f64;
    let cy = path.iter().map(|p| p.0).sum::<f64>() / n;
    let cx = path.iter().map(|p| p.1).sum::<f64>() / n;
    let l = params.half as f64;
    let extent = path
        .iter()
        .map(|p| (p.0 - cy).abs().max((p.1 - cx).abs()))
        .fold(0.0, f64::max);
    let scale = if extent > l { l / extent } else { 1.0 };

    let side = 2 * params.half + 1;
    let top = (side - 1) as f64;
    let mut grid = vec![0.0; side * side];
    for &(py, px) in &path {
        let y = ((py - cy) * scale + l).clamp(0.0, top);
        let x = ((px - cx) * scale + l).clamp(0.0, top);
        let (y0, x0) = (y.floor(), x.floor());
        let (fy, fx) = (y - y0, x - x0);
        let (y0, x0) = (y0 as usize, x0 as usize);
        let y1 = (y0 + 1).min(side - 1);
        let x1 = (x0 + 1).min(side - 1);
        grid[y0 * side + x0] += (1.0 - fy) * (1.0 - fx);
        grid[y0 * side + x1] += (1.0 - fy) * fx;
        grid[y1 * side + x0] += fy * (1.0 - fx);
        grid[y1 * side + x1] += fy * fx;
    }
    Psf::from_unnormalized(side, grid)
}
