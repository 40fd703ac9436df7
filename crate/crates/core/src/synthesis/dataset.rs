use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::noise::{add_noise, NoiseSpec};
use super::walk::{random_walk_psf, WalkParams, MAX_HALF_SIDE, MIN_HALF_SIDE};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::io::{read_png, resize_square, write_png};
use crate::psf::Psf;
use crate::rng::{derive_seed, rng_from};

/// Noise levels (0–255 scale) drawn with equal probability.
pub const SIGMA_LEVELS: [f64; 4] = [10.0, 20.0, 30.0, 40.0];

pub const MANIFEST_HEADER: [&str; 7] = ["id", "sharp", "blurry", "noisy", "psf", "sigma", "seed"];

const SAMPLE_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;

/// Settings of a dataset build.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    /// Side length sharp images are resized to.
    pub size: usize,
    /// 1 (luminance) or 3 (RGB).
    pub channels: usize,
    /// Optional extra cap on the kernel half-side.
    pub max_half_side: Option<usize>,
    pub walk_steps: usize,
    pub walk_inertia: f64,
    pub walk_jitter: f64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        let walk = WalkParams::default();
        Self {
            size: 64,
            channels: 1,
            max_half_side: None,
            walk_steps: walk.steps,
            walk_inertia: walk.inertia,
            walk_jitter: walk.jitter,
        }
    }
}

impl DatasetConfig {
    /// Largest half-side drawn: 24, `size / 8` and `max_half_side`, whichever is smallest.
    pub fn half_side_cap(&self) -> usize {
        let mut cap = MAX_HALF_SIDE.min(self.size / 8);
        if let Some(m) = self.max_half_side {
            cap = cap.min(m);
        }
        cap
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels != 1 && self.channels != 3 {
            return Err(Error::Config("dataset channels must be 1 or 3".into()));
        }
        if self.half_side_cap() < MIN_HALF_SIDE {
            return Err(Error::Config(format!(
                "size {} with max_half_side {:?} leaves no admissible kernel half-side (need >= {MIN_HALF_SIDE})",
                self.size, self.max_half_side
            )));
        }
        WalkParams {
            half: MIN_HALF_SIDE,
            steps: self.walk_steps,
            inertia: self.walk_inertia,
            jitter: self.walk_jitter,
            seed: 0,
        }
        .validate()
        .map_err(|e| Error::Config(e.to_string()))
    }
}

/// One fully synthesized training/evaluation sample.
#[derive(Debug, Clone)]
pub struct SynthSample {
    pub sharp: Image,
    pub blurry: Image,
    /// Unclamped noisy observation.
    pub noisy: Image,
    pub psf: Psf,
    pub sigma: f64,
    pub seed: u64,
}

/// Seed of the additive noise of a sample, derived from its manifest seed.
pub fn noise_seed(sample_seed: u64) -> u64 {
    derive_seed(sample_seed, NOISE_STREAM, 0)
}

/// Degrades an already sized sharp image. All randomness derives from
/// `sample_seed`.
pub fn synthesize_sample(sharp: &Image, sample_seed: u64, cfg: &DatasetConfig) -> Result<SynthSample> {
    cfg.validate()?;
    let mut rng = rng_from(sample_seed);
    let half = rng.random_range(MIN_HALF_SIDE..=cfg.half_side_cap());
    let sigma = SIGMA_LEVELS[rng.random_range(0..SIGMA_LEVELS.len())];
    let psf_seed: u64 = rng.random();
    let psf = random_walk_psf(&WalkParams {
        half,
        steps: cfg.walk_steps,
        inertia: cfg.walk_inertia,
        jitter: cfg.walk_jitter,
        seed: psf_seed,
    })?;
    let blurry = super::blur(sharp, &psf)?;
    let noisy = add_noise(
        &blurry,
        &NoiseSpec {
            sigma,
            seed: noise_seed(sample_seed),
        },
    )?;
    Ok(SynthSample {
        sharp: sharp.clone(),
        blurry,
        noisy,
        psf,
        sigma,
        seed: sample_seed,
    })
}

/// Seed of sample `index` in a build seeded with `seed`.
pub fn sample_seed(seed: u64, index: usize) -> u64 {
    derive_seed(seed, SAMPLE_STREAM, index as u64)
}

/// A manifest row; paths are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub id: String,
    pub sharp: String,
    pub blurry: String,
    pub noisy: String,
    pub psf: String,
    pub sigma: f64,
    pub seed: u64,
}

/// Sidecar written next to the manifest describing how the set was built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub seed: u64,
    pub requested: usize,
    pub built: usize,
    pub half_side_cap: usize,
    pub config: DatasetConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub base_dir: PathBuf,
    pub rows: Vec<ManifestRow>,
}

impl Manifest {
    /// Parses CSV text, checking the exact header and id uniqueness.
    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(text.as_bytes());
        let header = reader.headers()?.clone();
        if header.iter().ne(MANIFEST_HEADER.iter().copied()) {
            return Err(Error::parse(format!(
                "manifest header must be `{}`",
                MANIFEST_HEADER.join(",")
            )));
        }
        let mut rows = Vec::new();
        let mut seen = HashSet::new();
        for rec in reader.deserialize::<ManifestRow>() {
            let row = rec.map_err(|e| Error::parse(format!("manifest row: {e}")))?;
            if !(row.sigma >= 0.0 && row.sigma.is_finite()) {
                return Err(Error::parse(format!("row {}: sigma must be >= 0", row.id)));
            }
            if !seen.insert(row.id.clone()) {
                return Err(Error::parse(format!("duplicate sample id {}", row.id)));
            }
            rows.push(row);
        }
        Ok(Self {
            base_dir: base_dir.into(),
            rows,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            writer.serialize(row)?;
        }
        if self.rows.is_empty() {
            writer.write_record(MANIFEST_HEADER)?;
        }
        let bytes = writer
            .into_inner()
            .map_err(|e| Error::parse(format!("manifest encoding: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()?).map_err(|e| Error::io(path, e))
    }

    pub fn resolve(&self, rel: &str) -> PathBuf {
        self.base_dir.join(rel)
    }

    /// Checks that every referenced file exists and parses.
    pub fn validate_files(&self) -> Result<()> {
        for row in &self.rows {
            for rel in [&row.sharp, &row.blurry, &row.noisy] {
                read_png(&self.resolve(rel))?;
            }
            Psf::read(&self.resolve(&row.psf))?;
        }
        Ok(())
    }
}

fn conform_channels(img: Image, channels: usize) -> Result<Image> {
    match (img.channels(), channels) {
        (a, b) if a == b => Ok(img),
        (3, 1) => Ok(img.luminance()),
        (1, 3) => {
            let plane = img.data().to_vec();
            let mut data = plane.clone();
            data.extend_from_slice(&plane);
            data.extend_from_slice(&plane);
            Image::new(img.height(), img.width(), 3, data)
        }
        _ => Err(Error::invalid("unsupported channel conversion")),
    }
}

fn list_pngs(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| e.eq_ignore_ascii_case("png"))
        })
        .collect();
    files.sort();
    Ok(files)
}

/// Builds a degraded dataset from the PNGs in `sharp_dir` (sorted by name).
///
/// Unreadable inputs are skipped with a warning. Each sample's randomness
/// derives from `(seed, index)`, so the parallel build is identical to a
/// serial one. Writes `sharp/`, `blurry/`, `noisy/`, `psf/`, `manifest.csv`
/// and `dataset.json` under `out_dir`.
pub fn build_dataset(
    sharp_dir: &Path,
    out_dir: &Path,
    count: usize,
    seed: u64,
    cfg: &DatasetConfig,
) -> Result<Manifest> {
    cfg.validate()?;
    if count == 0 {
        return Err(Error::invalid("dataset count must be positive"));
    }
    let mut sources = Vec::with_capacity(count);
    for path in list_pngs(sharp_dir)? {
        if sources.len() == count {
            break;
        }
        match read_png(&path) {
            Ok(img) => sources.push(img),
            Err(e) => log::warn!("skipping {}: {e}", path.display()),
        }
    }
    if sources.is_empty() {
        return Err(Error::invalid(format!(
            "no readable PNG images in {}",
            sharp_dir.display()
        )));
    }
    if sources.len() < count {
        log::warn!("requested {count} samples, only {} readable inputs", sources.len());
    }

    for sub in ["sharp", "blurry", "noisy", "psf"] {
        let d = out_dir.join(sub);
        std::fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
    }

    let rows: Vec<ManifestRow> = sources
        .into_par_iter()
        .enumerate()
        .map(|(i, img)| -> Result<ManifestRow> {
            let sharp = conform_channels(resize_square(&img, cfg.size)?, cfg.channels)?;
            let s = synthesize_sample(&sharp, sample_seed(seed, i), cfg)?;
            let id = format!("{i:05}");
            let row = ManifestRow {
                sharp: format!("sharp/{id}.png"),
                blurry: format!("blurry/{id}.png"),
                noisy: format!("noisy/{id}.png"),
                psf: format!("psf/{id}.txt"),
                sigma: s.sigma,
                seed: s.seed,
                id,
            };
            write_png(&s.sharp, &out_dir.join(&row.sharp))?;
            write_png(&s.blurry, &out_dir.join(&row.blurry))?;
            write_png(&s.noisy, &out_dir.join(&row.noisy))?;
            s.psf.write(&out_dir.join(&row.psf))?;
            Ok(row)
        })
        .collect::<Result<_>>()?;

    let manifest = Manifest {
        base_dir: out_dir.to_path_buf(),
        rows,
    };
    manifest.write(&out_dir.join("manifest.csv"))?;
    let meta = DatasetMeta {
        seed,
        requested: count,
        built: manifest.rows.len(),
        half_side_cap: cfg.half_side_cap(),
        config: cfg.clone(),
    };
    let meta_path = out_dir.join("dataset.json");
    let json = serde_json::to_string_pretty(&meta).expect("meta serializes");
    std::fs::write(&meta_path, json + "\n").map_err(|e| Error::io(&meta_path, e))?;
    Ok(manifest)
}
