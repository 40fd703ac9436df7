//! Stage-wise training and inference.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::adam::{adam_step, AdamState};
use super::arch::{NetArch, NetParams};
use super::cascade::{deblur_gradients, denoise_gradients, joint_gradients, Cascade};
use super::checkpoint::Checkpoint;
use super::config::{Precision, Stage, TrainConfig};
use super::scalar::Scalar;
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::io::read_png;
use crate::rng::{derive_seed, rng_from};
use crate::synthesis::{add_noise, noise_seed, Manifest, NoiseSpec};

const INIT_STREAM: u64 = 11;
const SHUFFLE_STREAM: u64 = 12;

/// One `(N, B, I)` training triple.
#[derive(Debug, Clone)]
pub struct TrainSample {
    pub noisy: Image,
    pub blurry: Image,
    pub sharp: Image,
}

/// Starting weights for a run; missing subnets are freshly initialized
/// (pretraining only).
#[derive(Debug, Clone, Default)]
pub struct TrainInit {
    pub denoiser: Option<NetParams<f32>>,
    pub deblurrer: Option<NetParams<f32>>,
}

impl TrainInit {
    /// Net1 from `first` and, when given, Net2 from `second`; otherwise both
    /// subnets come from `first`.
    pub fn from_checkpoints(first: Option<&Checkpoint>, second: Option<&Checkpoint>) -> Self {
        Self {
            denoiser: first.map(|c| c.nets.denoiser.clone()),
            deblurrer: second.or(first).map(|c| c.nets.deblurrer.clone()),
        }
    }
}

/// Fresh weights for both subnets of a run seeded with `seed`.
pub fn initial_cascade(arch: NetArch, seed: u64) -> Cascade<f32> {
    Cascade {
        denoiser: NetParams::init(arch, derive_seed(seed, INIT_STREAM, 1)),
        deblurrer: NetParams::init(arch, derive_seed(seed, INIT_STREAM, 2)),
    }
}

/// Loads `(N, B, I)` triples. `B` and `I` come from the PNGs; `N` is
/// regenerated from `B` with the sample's recorded noise seed, unclamped.
pub fn load_training_samples(manifest: &Manifest) -> Result<Vec<TrainSample>> {
    manifest
        .rows
        .iter()
        .map(|row| {
            let blurry = read_png(&manifest.resolve(&row.blurry))?;
            let sharp = read_png(&manifest.resolve(&row.sharp))?;
            blurry.check_same_shape(&sharp)?;
            let noisy = add_noise(
                &blurry,
                &NoiseSpec {
                    sigma: row.sigma,
                    seed: noise_seed(row.seed),
                },
            )?;
            Ok(TrainSample { noisy, blurry, sharp })
        })
        .collect()
}

pub fn train_from_manifest(
    manifest: &Manifest,
    arch: NetArch,
    config: &TrainConfig,
    init: TrainInit,
) -> Result<Checkpoint> {
    let samples = load_training_samples(manifest)?;
    train(&samples, arch, config, init)
}

struct Prepared<T> {
    noisy: Tensor<T>,
    blurry: Tensor<T>,
    sharp: Tensor<T>,
}

/// Trains the subnets the stage touches and returns a checkpoint holding
/// both. Batches are shuffled by a permutation derived from the seed and the
/// epoch; per-sample gradients are reduced in batch order, so results do not
/// depend on thread scheduling. With `config.augment` the set is first
/// expanded by [`augment`].
pub fn train(samples: &[TrainSample], arch: NetArch, config: &TrainConfig, init: TrainInit) -> Result<Checkpoint> {
    arch.validate()?;
    config.validate()?;
    if samples.is_empty() {
        return Err(Error::invalid("no training samples"));
    }
    if config.stage == Stage::Joint && (init.denoiser.is_none() || init.deblurrer.is_none()) {
        return Err(Error::invalid(
            "joint stage needs pretrained denoiser and deblurrer checkpoints",
        ));
    }
    let augmented;
    let samples = if config.augment {
        augmented = augment(samples);
        augmented.as_slice()
    } else {
        samples
    };
    for s in samples {
        arch.check_input(s.noisy.channels(), s.noisy.height(), s.noisy.width())?;
        s.noisy.check_same_shape(&s.blurry)?;
        s.noisy.check_same_shape(&s.sharp)?;
    }
    let fresh = initial_cascade(arch, config.seed);
    let start = Cascade {
        denoiser: init.denoiser.unwrap_or(fresh.denoiser),
        deblurrer: init.deblurrer.unwrap_or(fresh.deblurrer),
    };
    if start.denoiser.arch != arch || start.deblurrer.arch != arch {
        return Err(Error::invalid("initial checkpoint architecture differs from the requested one"));
    }
    let (nets, losses) = match config.precision {
        Precision::F32 => run::<f32>(samples, &start.cast(), config)?,
        Precision::F64 => {
            let (nets, losses) = run::<f64>(samples, &start.cast(), config)?;
            (nets.cast(), losses)
        }
    };
    Ok(Checkpoint {
        arch,
        stage: config.stage,
        epoch: losses.len(),
        losses,
        config: *config,
        nets,
    })
}

/// Every sample under the eight grid symmetries, sample-major.
pub fn augment(samples: &[TrainSample]) -> Vec<TrainSample> {
    samples
        .iter()
        .flat_map(|s| {
            (0..8).map(move |t| TrainSample {
                noisy: s.noisy.dihedral(t),
                blurry: s.blurry.dihedral(t),
                sharp: s.sharp.dihedral(t),
            })
        })
        .collect()
}

fn run<T: Scalar>(
    samples: &[TrainSample],
    start: &Cascade<T>,
    config: &TrainConfig,
) -> Result<(Cascade<f32>, Vec<f64>)> {
    let data: Vec<Prepared<T>> = samples
        .iter()
        .map(|s| Prepared {
            noisy: Tensor::from_image(&s.noisy),
            blurry: Tensor::from_image(&s.blurry),
            sharp: Tensor::from_image(&s.sharp),
        })
        .collect();
    let mut nets = start.clone();
    let mut adam1 = AdamState::new(&nets.denoiser);
    let mut adam2 = AdamState::new(&nets.deblurrer);
    let mut losses = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..data.len()).collect();

    for epoch in 0..config.epochs {
        order.sort_unstable();
        order.shuffle(&mut rng_from(derive_seed(config.seed, SHUFFLE_STREAM, epoch as u64)));
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let results: Vec<(f64, Cascade<T>)> = batch
                .par_iter()
                .map(|&i| sample_gradients(&nets, &data[i], config.stage))
                .collect::<Result<_>>()?;
            let scale = T::from_f64(1.0 / batch.len() as f64);
            let mut iter = results.into_iter();
            let (first_loss, mut acc) = iter.next().expect("non-empty batch");
            epoch_loss += first_loss;
            for (loss, g) in iter {
                epoch_loss += loss;
                acc.denoiser.add_assign(&g.denoiser);
                acc.deblurrer.add_assign(&g.deblurrer);
            }
            acc.denoiser.scale(scale);
            acc.deblurrer.scale(scale);
            if config.stage != Stage::PretrainDeblur {
                adam_step(&mut nets.denoiser, &acc.denoiser, &mut adam1, config.learning_rate)?;
            }
            if config.stage != Stage::PretrainDenoise {
                adam_step(&mut nets.deblurrer, &acc.deblurrer, &mut adam2, config.learning_rate)?;
            }
        }
        let mean = epoch_loss / data.len() as f64;
        if !mean.is_finite() {
            return Err(Error::invalid(format!("training diverged at epoch {epoch}")));
        }
        log::info!("{} epoch {}: loss {mean:.6}", config.stage, epoch + 1);
        losses.push(mean);
    }
    Ok((nets.cast(), losses))
}

fn sample_gradients<T: Scalar>(nets: &Cascade<T>, s: &Prepared<T>, stage: Stage) -> Result<(f64, Cascade<T>)> {
    let arch = nets.denoiser.arch;
    match stage {
        Stage::PretrainDenoise => {
            let (loss, g) = denoise_gradients(&nets.denoiser, &s.noisy, &s.blurry)?;
            Ok((loss, Cascade { denoiser: g, deblurrer: NetParams::zeros(arch) }))
        }
        Stage::PretrainDeblur => {
            let (loss, g) = deblur_gradients(&nets.deblurrer, &s.blurry, &s.sharp)?;
            Ok((loss, Cascade { denoiser: NetParams::zeros(arch), deblurrer: g }))
        }
        Stage::Joint => joint_gradients(nets, &s.noisy, &s.blurry, &s.sharp),
    }
}

/// `(Net1(N), Net2(Net1(N)))`.
pub fn infer(checkpoint: &Checkpoint, noisy: &Image) -> Result<(Image, Image)> {
    checkpoint
        .arch
        .check_input(noisy.channels(), noisy.height(), noisy.width())?;
    let (b1, i1) = checkpoint.nets.run(&Tensor::<f32>::from_image(noisy))?;
    Ok((b1.to_image()?, i1.to_image()?))
}
