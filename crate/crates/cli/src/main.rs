//! `deblur`: dataset synthesis, cascade training and inference, blur-kernel
//! estimation and evaluation.
//!
//! Exit codes: 0 on success, 1 for invalid arguments, configuration or input
//! data, 2 for runtime failures (I/O, codec).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use deblur_core::config::{PsfMethod, RunConfig};
use deblur_core::estimate::{estimate_psf_exemplar, fft_deconv};
use deblur_core::eval::evaluate;
use deblur_core::io::{read_png, write_png};
use deblur_core::network::{infer, train_from_manifest, Checkpoint, Stage, TrainInit};
use deblur_core::synthesis::{build_dataset, Manifest};
use deblur_core::{Error, Image};

#[derive(Parser, Debug)]
#[command(name = "deblur", version, about = "Blind deblurring of noisy images")]
struct Cli {
    /// Run configuration (JSON). Omitted fields take their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override one configuration value, e.g. `--set hqs.lambda=0.004`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Root seed of every random stream (overrides `seed` in the config).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Write the effective configuration to PATH before running.
    #[arg(long, global = true, value_name = "PATH")]
    dump_config: Option<PathBuf>,

    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a blurred, noisy dataset from a directory of sharp PNGs.
    Synth(SynthArgs),
    /// Train one stage of the cascade.
    Train(TrainArgs),
    /// Run the cascade on one noisy image.
    Infer(InferArgs),
    /// Estimate the blur kernel from a denoised and a deblurred image.
    EstimatePsf(EstimateArgs),
    /// Score a checkpoint on a dataset manifest.
    Eval(EvalArgs),
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, value_name = "DIR")]
    sharp_dir: PathBuf,
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    /// Number of samples (at most the number of readable inputs).
    #[arg(long)]
    count: usize,
    /// Side length images are resized to (overrides `dataset.size`).
    #[arg(long)]
    size: Option<usize>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long, value_name = "CSV")]
    manifest: PathBuf,
    /// pretrain-denoise, pretrain-deblur or joint.
    #[arg(long)]
    stage: Stage,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch: Option<usize>,
    /// Starting checkpoint; supplies the denoiser, and the deblurrer unless
    /// `--init2` is given.
    #[arg(long, value_name = "CKPT")]
    init: Option<PathBuf>,
    /// Checkpoint supplying the deblurrer.
    #[arg(long, value_name = "CKPT", requires = "init")]
    init2: Option<PathBuf>,
    #[arg(long, value_name = "CKPT")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct InferArgs {
    #[arg(long, value_name = "CKPT")]
    ckpt: PathBuf,
    #[arg(long = "in", value_name = "PNG")]
    input: PathBuf,
    #[arg(long, value_name = "PNG")]
    out_denoised: PathBuf,
    #[arg(long, value_name = "PNG")]
    out_sharp: PathBuf,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    /// Denoised image B1.
    #[arg(long, value_name = "PNG")]
    denoised: PathBuf,
    /// Deblurred image I1, used as the exemplar.
    #[arg(long, value_name = "PNG")]
    sharp: PathBuf,
    /// Odd kernel side (overrides `psf.side`).
    #[arg(long)]
    side: Option<usize>,
    /// fft or exemplar (overrides `psf.method`).
    #[arg(long)]
    method: Option<PsfMethod>,
    /// Estimated kernel in PSF text format.
    #[arg(long, value_name = "TXT")]
    out: PathBuf,
    /// Per-iteration objective trace (exemplar method only).
    #[arg(long, value_name = "CSV")]
    trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long, value_name = "CSV")]
    manifest: PathBuf,
    #[arg(long, value_name = "CKPT")]
    ckpt: PathBuf,
    /// Directory receiving report.csv and report.txt.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    /// Skip kernel estimation and kernel similarity.
    #[arg(long)]
    no_ks: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let mut sets = cli.set;
    if let Some(seed) = cli.seed {
        sets.push(format!("seed={seed}"));
    }
    match &cli.command {
        Command::Synth(a) => push_opt(&mut sets, "dataset.size", a.size),
        Command::Train(a) => {
            push_opt(&mut sets, "train.epochs", a.epochs);
            push_opt(&mut sets, "train.learning_rate", a.lr);
            push_opt(&mut sets, "train.batch_size", a.batch);
        }
        Command::EstimatePsf(a) => {
            push_opt(&mut sets, "psf.side", a.side);
            if let Some(m) = a.method {
                sets.push(format!("psf.method={}", method_name(m)));
            }
        }
        Command::Eval(a) if a.no_ks => sets.push("psf.in_eval=false".into()),
        _ => {}
    }
    let cfg = RunConfig::load(cli.config.as_deref(), &sets)?;
    log::info!("seed {}, {} override(s)", cfg.seed, sets.len());
    if let Some(path) = &cli.dump_config {
        write(path, cfg.to_json().as_bytes())?;
    }
    match cli.command {
        Command::Synth(a) => synth(&a, &cfg),
        Command::Train(a) => train(&a, &cfg),
        Command::Infer(a) => infer_one(&a),
        Command::EstimatePsf(a) => estimate(&a, &cfg),
        Command::Eval(a) => eval(&a, &cfg),
    }
}

fn push_opt<T: std::fmt::Display>(sets: &mut Vec<String>, key: &str, value: Option<T>) {
    if let Some(v) = value {
        sets.push(format!("{key}={v}"));
    }
}

fn method_name(m: PsfMethod) -> &'static str {
    match m {
        PsfMethod::Fft => "fft",
        PsfMethod::Exemplar => "exemplar",
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    std::fs::write(path, bytes).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn synth(a: &SynthArgs, cfg: &RunConfig) -> Result<(), Error> {
    let manifest = build_dataset(&a.sharp_dir, &a.out_dir, a.count, cfg.seed, &cfg.dataset)?;
    println!(
        "wrote {} samples to {}",
        manifest.rows.len(),
        a.out_dir.join("manifest.csv").display()
    );
    Ok(())
}

fn train(a: &TrainArgs, cfg: &RunConfig) -> Result<(), Error> {
    let manifest = Manifest::load(&a.manifest)?;
    let first = a.init.as_deref().map(Checkpoint::read).transpose()?;
    let second = a.init2.as_deref().map(Checkpoint::read).transpose()?;
    // Initial checkpoints fix the architecture.
    let arch = first.as_ref().map_or(cfg.arch, |c| c.arch);
    let init = TrainInit::from_checkpoints(first.as_ref(), second.as_ref());
    log::info!("training {} on {} samples", a.stage, manifest.rows.len());
    let ck = train_from_manifest(&manifest, arch, &cfg.train_config(a.stage), init)?;
    ck.write(&a.out)?;
    match ck.losses.last() {
        Some(l) => println!("{}: {} epochs, final loss {l:.6}", a.stage, ck.epoch),
        None => println!("{}: 0 epochs", a.stage),
    }
    Ok(())
}

/// Reads a PNG and matches it to the network's channel count; colour inputs
/// to a grayscale network are reduced to luminance.
fn read_input(path: &Path, channels: usize) -> Result<Image, Error> {
    let img = read_png(path)?;
    if img.channels() == 3 && channels == 1 {
        Ok(img.luminance())
    } else {
        Ok(img)
    }
}

fn infer_one(a: &InferArgs) -> Result<(), Error> {
    let ck = Checkpoint::read(&a.ckpt)?;
    let noisy = read_input(&a.input, ck.arch.in_channels)?;
    let (b1, i1) = infer(&ck, &noisy)?;
    write_png(&b1, &a.out_denoised)?;
    write_png(&i1, &a.out_sharp)
}

fn estimate(a: &EstimateArgs, cfg: &RunConfig) -> Result<(), Error> {
    if a.trace.is_some() && cfg.psf.method != PsfMethod::Exemplar {
        return Err(Error::Config("--trace needs the exemplar method".into()));
    }
    let b1 = read_png(&a.denoised)?;
    let i1 = read_png(&a.sharp)?;
    let psf = match cfg.psf.method {
        PsfMethod::Fft => fft_deconv(&b1, &i1, cfg.hqs.epsilon_wiener, cfg.psf.side)?,
        PsfMethod::Exemplar => {
            let (psf, state) = estimate_psf_exemplar(&b1, &i1, cfg.psf.side, &cfg.hqs)?;
            if let Some(t) = &a.trace {
                state.write_trace(t)?;
            }
            psf
        }
    };
    psf.write(&a.out)
}

fn eval(a: &EvalArgs, cfg: &RunConfig) -> Result<(), Error> {
    let manifest = Manifest::load(&a.manifest)?;
    let ck = Checkpoint::read(&a.ckpt)?;
    log::info!("evaluating {} on {} samples", a.ckpt.display(), manifest.rows.len());
    let report = evaluate(&manifest, &ck, cfg)?;
    report.write(&a.out_dir)?;
    print!("{}", report.summary());
    Ok(())
}
