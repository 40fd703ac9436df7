//! Evaluation of a trained cascade over a dataset manifest.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{PsfMethod, RunConfig};
use crate::error::{Error, Result};
use crate::estimate::{estimate_psf_exemplar, fft_deconv};
use crate::image::Image;
use crate::io::read_png;
use crate::metrics::{kernel_similarity, psnr, ssim};
use crate::network::{infer, Checkpoint};
use crate::psf::Psf;
use crate::synthesis::{Manifest, ManifestRow};

#[derive(Debug, Clone, PartialEq)]
pub struct SampleMetrics {
    /// PSNR of the noisy input against the sharp image.
    pub psnr_noisy: f64,
    /// PSNR of `B₁` against the blurry image.
    pub psnr_denoised: f64,
    /// PSNR of `I₁` against the sharp image.
    pub psnr_sharp: f64,
    pub ssim_sharp: f64,
    /// Similarity of the kernel estimated from `(B₁, I₁)` to the true one.
    pub ks: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub id: String,
    pub sigma: f64,
    /// `Err` holds the reason a sample could not be evaluated.
    pub outcome: std::result::Result<SampleMetrics, String>,
}

/// Arithmetic means over the successful rows of one group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupMeans {
    /// `None` for the pooled group.
    pub sigma: Option<f64>,
    pub count: usize,
    pub psnr_noisy: f64,
    pub psnr_denoised: f64,
    pub psnr_sharp: f64,
    pub ssim_sharp: f64,
    pub ks: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// In manifest order.
    pub rows: Vec<EvalRow>,
    /// One entry per distinct σ, ascending.
    pub groups: Vec<GroupMeans>,
    pub pooled: Option<GroupMeans>,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    id: &'a str,
    sigma: f64,
    status: &'a str,
    psnr_noisy: Option<String>,
    psnr_denoised: Option<String>,
    psnr_sharp: Option<String>,
    ssim_sharp: Option<String>,
    ks: Option<String>,
    error: Option<&'a str>,
}

/// Runs the cascade on every manifest row and scores it. Rows are processed
/// in parallel and reported in manifest order.
pub fn evaluate(manifest: &Manifest, checkpoint: &Checkpoint, cfg: &RunConfig) -> Result<EvalReport> {
    if manifest.rows.is_empty() {
        return Err(Error::invalid("manifest has no samples"));
    }
    let rows: Vec<EvalRow> = manifest
        .rows
        .par_iter()
        .map(|row| EvalRow {
            id: row.id.clone(),
            sigma: row.sigma,
            outcome: score(manifest, row, checkpoint, cfg).map_err(|e| e.to_string()),
        })
        .collect();
    for r in &rows {
        if let Err(e) = &r.outcome {
            log::warn!("sample {} failed: {e}", r.id);
        }
    }
    let mut sigmas: Vec<f64> = rows.iter().map(|r| r.sigma).collect();
    sigmas.sort_by(f64::total_cmp);
    sigmas.dedup();
    let groups = sigmas
        .iter()
        .filter_map(|&s| means(rows.iter().filter(|r| r.sigma == s), Some(s)))
        .collect();
    let pooled = means(rows.iter(), None);
    Ok(EvalReport { rows, groups, pooled })
}

fn score(manifest: &Manifest, row: &ManifestRow, checkpoint: &Checkpoint, cfg: &RunConfig) -> Result<SampleMetrics> {
    let sharp = read_png(&manifest.resolve(&row.sharp))?;
    let blurry = read_png(&manifest.resolve(&row.blurry))?;
    let noisy = read_png(&manifest.resolve(&row.noisy))?;
    sharp.check_same_shape(&blurry)?;
    sharp.check_same_shape(&noisy)?;
    let (b1, i1) = infer(checkpoint, &noisy)?;
    let ks = if cfg.psf.in_eval {
        let truth = Psf::read(&manifest.resolve(&row.psf))?;
        let est = estimate(&b1, &i1, truth.side(), cfg)?;
        Some(kernel_similarity(&est, &truth)?)
    } else {
        None
    };
    Ok(SampleMetrics {
        psnr_noisy: psnr(&noisy, &sharp)?,
        psnr_denoised: psnr(&b1, &blurry)?,
        psnr_sharp: psnr(&i1, &sharp)?,
        ssim_sharp: ssim(&i1, &sharp)?,
        ks,
    })
}

/// Kernel estimate from the cascade outputs with the configured method.
pub fn estimate(b1: &Image, i1: &Image, side: usize, cfg: &RunConfig) -> Result<Psf> {
    match cfg.psf.method {
        PsfMethod::Fft => fft_deconv(b1, i1, cfg.hqs.epsilon_wiener, side),
        PsfMethod::Exemplar => Ok(estimate_psf_exemplar(b1, i1, side, &cfg.hqs)?.0),
    }
}

fn means<'a>(rows: impl Iterator<Item = &'a EvalRow>, sigma: Option<f64>) -> Option<GroupMeans> {
    let ok: Vec<&SampleMetrics> = rows.filter_map(|r| r.outcome.as_ref().ok()).collect();
    if ok.is_empty() {
        return None;
    }
    let n = ok.len() as f64;
    let mean = |f: fn(&SampleMetrics) -> f64| ok.iter().map(|m| f(m)).sum::<f64>() / n;
    let ks = ok
        .iter()
        .map(|m| m.ks)
        .collect::<Option<Vec<f64>>>()
        .map(|v| v.iter().sum::<f64>() / n);
    Some(GroupMeans {
        sigma,
        count: ok.len(),
        psnr_noisy: mean(|m| m.psnr_noisy),
        psnr_denoised: mean(|m| m.psnr_denoised),
        psnr_sharp: mean(|m| m.psnr_sharp),
        ssim_sharp: mean(|m| m.ssim_sharp),
        ks,
    })
}

fn fixed(v: f64) -> String {
    format!("{v:.6}")
}

impl EvalReport {
    pub fn failed(&self) -> impl Iterator<Item = &EvalRow> {
        self.rows.iter().filter(|r| r.outcome.is_err())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            let row = match &r.outcome {
                Ok(m) => CsvRow {
                    id: &r.id,
                    sigma: r.sigma,
                    status: "ok",
                    psnr_noisy: Some(fixed(m.psnr_noisy)),
                    psnr_denoised: Some(fixed(m.psnr_denoised)),
                    psnr_sharp: Some(fixed(m.psnr_sharp)),
                    ssim_sharp: Some(fixed(m.ssim_sharp)),
                    ks: m.ks.map(fixed),
                    error: None,
                },
                Err(e) => CsvRow {
                    id: &r.id,
                    sigma: r.sigma,
                    status: "failed",
                    psnr_noisy: None,
                    psnr_denoised: None,
                    psnr_sharp: None,
                    ssim_sharp: None,
                    ks: None,
                    error: Some(e),
                },
            };
            w.serialize(row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Aligned summary: one line per σ, then the pooled line. The pooled
    /// SSIM is the single-figure value; per-σ SSIM is shown for reference.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let ok = self.rows.len() - self.failed().count();
        let _ = writeln!(s, "samples: {} evaluated, {} failed", ok, self.rows.len() - ok);
        let _ = writeln!(
            s,
            "{:>8} {:>6} {:>11} {:>14} {:>11} {:>11} {:>8}",
            "sigma", "count", "psnr_noisy", "psnr_denoised", "psnr_sharp", "ssim_sharp", "ks"
        );
        for g in self.groups.iter().chain(self.pooled.iter()) {
            let label = g.sigma.map_or_else(|| "all".to_string(), |v| format!("{v}"));
            let ks = g.ks.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
            let _ = writeln!(
                s,
                "{:>8} {:>6} {:>11.4} {:>14.4} {:>11.4} {:>11.4} {:>8}",
                label, g.count, g.psnr_noisy, g.psnr_denoised, g.psnr_sharp, g.ssim_sharp, ks
            );
        }
        for r in self.failed() {
            if let Err(e) = &r.outcome {
                let _ = writeln!(s, "failed {}: {e}", r.id);
            }
        }
        s
    }

    /// Writes `report.csv` and `report.txt` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let csv_path = dir.join("report.csv");
        std::fs::write(&csv_path, self.to_csv()?).map_err(|e| Error::io(&csv_path, e))?;
        let txt_path = dir.join("report.txt");
        std::fs::write(&txt_path, self.summary()).map_err(|e| Error::io(&txt_path, e))
    }
}
