use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::rng::rng_from;

/// Additive white Gaussian noise with `sigma` on the 0–255 scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub seed: u64,
}

/// `img + n` with `n ~ N(0, (σ/255)²)` i.i.d.; no clamping.
pub fn add_noise(img: &Image, spec: &NoiseSpec) -> Result<Image> {
    if !(spec.sigma >= 0.0 && spec.sigma.is_finite()) {
        return Err(Error::invalid(format!("noise sigma {} must be >= 0", spec.sigma)));
    }
    if spec.sigma == 0.0 {
        return Ok(img.clone());
    }
    let std = spec.sigma / 255.0;
    let mut rng = rng_from(spec.seed);
    let mut out = img.clone();
    for v in out.data_mut() {
        let g: f64 = rng.sample(StandardNormal);
        *v += std * g;
    }
    Ok(out)
}
