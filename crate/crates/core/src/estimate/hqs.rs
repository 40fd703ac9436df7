//! Half-quadratic splitting for
//! `min_{P, I} ‖P * I − B₁‖² + λ‖∇I‖₀ + μ‖∇I − ∇I₁‖²`.
//!
//! An auxiliary field `g ≈ ∇I` with penalty `β‖∇I − g‖²` splits the problem
//! into an exact per-site threshold for `g` and a Fourier-diagonal quadratic
//! solve for `I`; `β` doubles from `β₀` up to `β_max`, after which the kernel
//! is re-solved.

use std::path::Path;

use rustfft::num_complex::Complex64;
use serde::Serialize;

use super::deconv::fft_deconv;
use super::kernel::kernel_step;
use super::{check_side, luminance_plane, require_gray, HqsConfig, Operators};
use crate::conv::fft_convolve;
use crate::error::{Error, Result};
use crate::fft::embed_centered;
use crate::gradient::{gradient, GradientField};
use crate::image::Image;
use crate::metrics::kernel_similarity;
use crate::psf::Psf;

const SPECTRAL_FLOOR: f64 = 1e-12;
/// Initial estimates at least this similar to a flat box are discarded.
const DEGENERATE_KS: f64 = 0.99;

pub const TRACE_HEADER: [&str; 5] = ["outer_iter", "beta_rounds", "objective", "data_term", "l0_count"];

/// Keeps `(∂_h I, ∂_v I)` at sites where `∂_h I² + ∂_v I² ≥ λ/β` and zeroes
/// the rest: the exact minimizer of `λ‖g‖₀ + β‖g − ∇I‖²`.
pub fn latent_g_step(grad: &GradientField, lambda: f64, beta: f64) -> Result<GradientField> {
    if !(beta > 0.0) {
        return Err(Error::invalid(format!("splitting penalty {beta} must be positive")));
    }
    let threshold = lambda / beta;
    let mut out = grad.clone();
    let (gh, gv) = (out.horizontal.data_mut(), out.vertical.data_mut());
    for (h, v) in gh.iter_mut().zip(gv.iter_mut()) {
        if *h * *h + *v * *v < threshold {
            *h = 0.0;
            *v = 0.0;
        }
    }
    Ok(out)
}

/// Exact minimizer over `I` of
/// `‖P * I − B₁‖² + μ‖∇I − ∇I₁‖² + β‖∇I − g‖²`.
pub fn latent_image_step(
    b1: &Image,
    i1: &Image,
    kernel: &Psf,
    g: &GradientField,
    beta: f64,
    mu: f64,
) -> Result<Image> {
    let solver = Solver::new(b1, i1)?;
    solver.image_step(kernel, g, beta, mu)
}

/// Terms of the reported objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveParts {
    /// `‖P * I − B₁‖²`
    pub data: f64,
    /// `μ‖∇I − ∇I₁‖²`
    pub exemplar: f64,
    /// Joint nonzero sites of `g`.
    pub l0_count: usize,
    /// `data + exemplar + λ · l0_count`
    pub total: f64,
}

pub fn objective(
    latent: &Image,
    b1: &Image,
    i1: &Image,
    kernel: &Psf,
    g: &GradientField,
    lambda: f64,
    mu: f64,
) -> Result<ObjectiveParts> {
    latent.check_same_shape(b1)?;
    latent.check_same_shape(i1)?;
    let blurred = fft_convolve(latent, kernel)?;
    let data: f64 = blurred.data().iter().zip(b1.data()).map(|(a, b)| (a - b) * (a - b)).sum();
    let gl = gradient(latent);
    let ge = gradient(i1);
    let sq = |a: &Image, b: &Image| -> f64 { a.data().iter().zip(b.data()).map(|(x, y)| (x - y) * (x - y)).sum() };
    let exemplar = mu * (sq(&gl.horizontal, &ge.horizontal) + sq(&gl.vertical, &ge.vertical));
    let l0_count = g.nonzero_sites();
    Ok(ObjectiveParts {
        data,
        exemplar,
        l0_count,
        total: data + exemplar + lambda * l0_count as f64,
    })
}

/// One outer iteration of the alternation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub outer_iter: usize,
    pub beta_rounds: usize,
    pub objective: f64,
    pub data_term: f64,
    pub l0_count: usize,
}

/// Solver state after the last outer iteration.
#[derive(Debug, Clone)]
pub struct LatentState {
    pub latent: Image,
    pub aux_grad: GradientField,
    pub kernel: Psf,
    /// Penalty of the last (g, I) round.
    pub beta: f64,
    pub trace: Vec<TraceRow>,
}

impl LatentState {
    pub fn trace_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.trace {
            w.serialize(row)?;
        }
        if self.trace.is_empty() {
            w.write_record(TRACE_HEADER)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write_trace(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.trace_csv()?).map_err(|e| Error::io(path, e))
    }
}

/// Estimates the kernel relating `I₁` to `B₁`, using `I₁` both as the
/// starting latent image and as the exemplar.
///
/// The kernel starts from [`fft_deconv`], or from a centered delta when that
/// fails or returns a near-flat box. Identical inputs give bit-identical
/// outputs.
pub fn estimate_psf_exemplar(b1: &Image, i1: &Image, side: usize, cfg: &HqsConfig) -> Result<(Psf, LatentState)> {
    cfg.validate()?;
    b1.check_same_shape(i1)?;
    check_side(side, b1.height(), b1.width())?;
    let b1 = luminance_plane(b1);
    let i1 = luminance_plane(i1);

    let mut kernel = match fft_deconv(&b1, &i1, cfg.epsilon_wiener, side) {
        Ok(p) if kernel_similarity(&p, &Psf::uniform(side)?)? < DEGENERATE_KS => p,
        _ => Psf::delta(side)?,
    };
    let solver = Solver::new(&b1, &i1)?;
    let mut latent = i1.clone();
    let mut g = GradientField::zeros_like(&latent);
    let mut beta = cfg.beta_start();
    let mut trace = Vec::with_capacity(cfg.outer_iters);
    for outer in 0..cfg.outer_iters {
        beta = cfg.beta_start();
        let mut rounds = 0;
        let mut last = beta;
        while beta <= cfg.beta_max {
            g = latent_g_step(&gradient(&latent), cfg.lambda, beta)?;
            latent = solver.image_step(&kernel, &g, beta, cfg.mu)?;
            last = beta;
            beta *= cfg.beta_growth;
            rounds += 1;
        }
        beta = last;
        kernel = kernel_step(&latent, &b1, side, cfg)?;
        let parts = objective(&latent, &b1, &i1, &kernel, &g, cfg.lambda, cfg.mu)?;
        if !parts.total.is_finite() {
            return Err(Error::invalid(format!("objective diverged at outer iteration {outer}")));
        }
        trace.push(TraceRow {
            outer_iter: outer + 1,
            beta_rounds: rounds,
            objective: parts.total,
            data_term: parts.data,
            l0_count: parts.l0_count,
        });
    }
    Ok((
        kernel.clone(),
        LatentState { latent, aux_grad: g, kernel, beta, trace },
    ))
}

/// Spectra that stay fixed across the alternation.
struct Solver {
    ops: Operators,
    height: usize,
    width: usize,
    b1: Vec<Complex64>,
    /// `Σ_d conj(D̂_d) D̂_d Î₁`
    exemplar: Vec<Complex64>,
    /// `Σ_d |D̂_d|²`
    grad_energy: Vec<f64>,
}

impl Solver {
    fn new(b1: &Image, i1: &Image) -> Result<Self> {
        require_gray(b1, "blurred estimate")?;
        require_gray(i1, "exemplar")?;
        b1.check_same_shape(i1)?;
        let (height, width) = (b1.height(), b1.width());
        let ops = Operators::new(height, width);
        let bh = ops.fft.forward_real(b1.data());
        let ih = ops.fft.forward_real(i1.data());
        let grad_energy: Vec<f64> = ops.dh.iter().zip(&ops.dv).map(|(h, v)| h.norm_sqr() + v.norm_sqr()).collect();
        let exemplar = ih.iter().zip(&grad_energy).map(|(i, e)| i * *e).collect();
        Ok(Self { ops, height, width, b1: bh, exemplar, grad_energy })
    }

    fn image_step(&self, kernel: &Psf, g: &GradientField, beta: f64, mu: f64) -> Result<Image> {
        if g.height() != self.height || g.width() != self.width {
            return Err(Error::DimensionMismatch("auxiliary gradient does not match the image".into()));
        }
        let k = self
            .ops
            .fft
            .forward_real(&embed_centered(kernel.weights(), kernel.side(), self.height, self.width));
        let gh = self.ops.fft.forward_real(g.horizontal.data());
        let gv = self.ops.fft.forward_real(g.vertical.data());
        let spectrum: Vec<Complex64> = (0..k.len())
            .map(|u| {
                let num = k[u].conj() * self.b1[u]
                    + (self.ops.dh[u].conj() * gh[u] + self.ops.dv[u].conj() * gv[u]) * beta
                    + self.exemplar[u] * mu;
                let den = k[u].norm_sqr() + (beta + mu) * self.grad_energy[u] + SPECTRAL_FLOOR;
                num / den
            })
            .collect();
        Image::gray(self.height, self.width, self.ops.fft.inverse_real(spectrum))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(h: Vec<f64>, v: Vec<f64>) -> GradientField {
        let n = h.len();
        GradientField {
            horizontal: Image::gray(1, n, h).unwrap(),
            vertical: Image::gray(1, n, v).unwrap(),
        }
    }

    #[test]
    fn g_step_threshold_cases() {
        // Site 0: 0.001 < 0.002 → zeroed. Site 1: 0.01 → kept.
        let g = field(vec![0.001f64.sqrt(), 0.06], vec![0.0, 0.08]);
        let out = latent_g_step(&g, 0.002, 1.0).unwrap();
        assert_eq!(out.horizontal.data(), &[0.0, 0.06]);
        assert_eq!(out.vertical.data(), &[0.0, 0.08]);
        assert!(latent_g_step(&g, 0.002, 0.0).is_err());
    }

    #[test]
    fn image_step_of_zero_inputs_is_zero() {
        let z = Image::filled(8, 8, 1, 0.0).unwrap();
        let g = GradientField::zeros_like(&z);
        let out = latent_image_step(&z, &z, &Psf::delta(3).unwrap(), &g, 1.0, 0.001).unwrap();
        assert!(out.data().iter().all(|&v| v.abs() < 1e-15));
    }

    #[test]
    fn trace_csv_has_header() {
        let z = Image::filled(4, 4, 1, 0.0).unwrap();
        let state = LatentState {
            aux_grad: GradientField::zeros_like(&z),
            latent: z,
            kernel: Psf::delta(1).unwrap(),
            beta: 1.0,
            trace: vec![],
        };
        assert_eq!(state.trace_csv().unwrap().trim(), TRACE_HEADER.join(","));
    }
}
