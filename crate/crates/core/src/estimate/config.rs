use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients and schedule of the exemplar-guided kernel solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HqsConfig {
    /// Weight of the ℓ0 gradient term.
    pub lambda: f64,
    /// Weight of the exemplar gradient term.
    pub mu: f64,
    /// Initial splitting penalty; `None` means `2 · lambda`.
    pub beta0: Option<f64>,
    pub beta_growth: f64,
    pub beta_max: f64,
    pub outer_iters: usize,
    /// Tikhonov weight on the kernel spectrum.
    pub kernel_ridge: f64,
    /// Kernel weights below this fraction of the maximum are zeroed.
    pub kernel_prune: f64,
    /// Spectral floor of the direct deconvolution.
    pub epsilon_wiener: f64,
    /// Solve the kernel from differentiated images.
    pub gradient_domain: bool,
}

impl Default for HqsConfig {
    fn default() -> Self {
        Self {
            lambda: 0.002,
            mu: 0.001,
            beta0: None,
            beta_growth: 2.0,
            beta_max: 1e5,
            outer_iters: 5,
            kernel_ridge: 1e-3,
            kernel_prune: 0.05,
            epsilon_wiener: 1e-3,
            gradient_domain: true,
        }
    }
}

impl HqsConfig {
    pub fn beta_start(&self) -> f64 {
        self.beta0.unwrap_or(2.0 * self.lambda)
    }

    /// Number of (g, I) rounds per outer iteration.
    pub fn beta_rounds(&self) -> usize {
        let mut beta = self.beta_start();
        let mut n = 0;
        while beta <= self.beta_max {
            beta *= self.beta_growth;
            n += 1;
        }
        n
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("hqs.{name} must be positive, got {v}")))
            }
        };
        positive(self.lambda, "lambda")?;
        positive(self.mu, "mu")?;
        positive(self.beta_start(), "beta0")?;
        positive(self.beta_max, "beta_max")?;
        if !(self.beta_growth > 1.0 && self.beta_growth.is_finite()) {
            return Err(Error::Config("hqs.beta_growth must exceed 1".into()));
        }
        if self.beta_start() >= self.beta_max {
            return Err(Error::Config("hqs.beta0 must be below hqs.beta_max".into()));
        }
        if self.outer_iters == 0 {
            return Err(Error::Config("hqs.outer_iters must be at least 1".into()));
        }
        // Zero ridge and zero floor are allowed: they give the exact solves.
        for (v, name) in [(self.kernel_ridge, "kernel_ridge"), (self.epsilon_wiener, "epsilon_wiener")] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("hqs.{name} must be >= 0, got {v}")));
            }
        }
        if !(0.0..0.5).contains(&self.kernel_prune) {
            return Err(Error::Config("hqs.kernel_prune must lie in [0, 0.5)".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schedule() {
        let c = HqsConfig::default();
        c.validate().unwrap();
        assert_eq!(c.beta_start(), 0.004);
        // 0.004 · 2^24 ≈ 67109 ≤ 1e5 < 0.004 · 2^25
        assert_eq!(c.beta_rounds(), 25);
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            HqsConfig { lambda: 0.0, ..Default::default() },
            HqsConfig { beta0: Some(1e6), ..Default::default() },
            HqsConfig { beta_growth: 1.0, ..Default::default() },
            HqsConfig { kernel_prune: 0.5, ..Default::default() },
            HqsConfig { kernel_ridge: -1.0, ..Default::default() },
            HqsConfig { outer_iters: 0, ..Default::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }

    #[test]
    fn json_rejects_unknown_keys() {
        let c: HqsConfig = serde_json::from_str(r#"{"lambda": 0.01}"#).unwrap();
        assert_eq!(c.lambda, 0.01);
        assert_eq!(c.mu, 0.001);
        assert!(serde_json::from_str::<HqsConfig>(r#"{"lamda": 0.01}"#).is_err());
    }
}
