//! Run configuration: one JSON document covering every stage, plus dotted
//! `key=value` overrides.
//!
//! ```json
//! {
//!   "seed": 7,
//!   "dataset": { "size": 48, "max_half_side": 5 },
//!   "arch": { "levels": 2, "base_channels": 8 },
//!   "train": { "batch_size": 4, "epochs": 30 },
//!   "psf": { "side": 11, "method": "exemplar" },
//!   "hqs": { "lambda": 0.002 }
//! }
//! ```
//!
//! Omitted fields take their defaults; unknown keys are errors.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::estimate::HqsConfig;
use crate::network::{NetArch, Precision, Stage, TrainConfig};
use crate::synthesis::DatasetConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Root of every random stream; CLI `--seed` overrides it.
    pub seed: u64,
    pub dataset: DatasetConfig,
    pub arch: NetArch,
    pub train: TrainSettings,
    pub psf: PsfSettings,
    pub hqs: HqsConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSettings {
    /// `None` uses the stage default (1e-4 pretraining, 1e-5 joint).
    pub learning_rate: Option<f64>,
    pub batch_size: usize,
    pub epochs: usize,
    pub precision: Precision,
    /// Dihedral (flip and transpose) augmentation, ×8 samples.
    pub augment: bool,
}

impl Default for TrainSettings {
    fn default() -> Self {
        let base = TrainConfig::new(Stage::PretrainDenoise);
        Self {
            learning_rate: None,
            batch_size: base.batch_size,
            epochs: base.epochs,
            precision: base.precision,
            augment: base.augment,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PsfMethod {
    Fft,
    #[default]
    Exemplar,
}

impl std::str::FromStr for PsfMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fft" => Ok(Self::Fft),
            "exemplar" => Ok(Self::Exemplar),
            other => Err(Error::Config(format!("unknown PSF method `{other}` (fft|exemplar)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsfSettings {
    /// Side of estimated kernels when no ground-truth kernel fixes it.
    pub side: usize,
    pub method: PsfMethod,
    /// Estimate kernels and report kernel similarity during evaluation.
    pub in_eval: bool,
}

impl Default for PsfSettings {
    fn default() -> Self {
        Self {
            side: 27,
            method: PsfMethod::Exemplar,
            in_eval: true,
        }
    }
}

impl RunConfig {
    /// Defaults, then the JSON file (if any), then each `key=value` override
    /// in order. Override values are parsed as JSON when possible and taken
    /// as strings otherwise.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut value = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                let parsed: Value = serde_json::from_str(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                // Reject unknown keys before merging.
                Self::from_value(parsed.clone())?;
                merge(serde_json::to_value(Self::default()).expect("serializable"), parsed)
            }
            None => serde_json::to_value(Self::default()).expect("serializable"),
        };
        for kv in overrides {
            apply_override(&mut value, kv)?;
        }
        let cfg = Self::from_value(value)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let cfg = Self::from_value(value)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn from_value(value: Value) -> Result<Self> {
        serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable") + "\n"
    }

    pub fn validate(&self) -> Result<()> {
        self.dataset.validate()?;
        self.arch.validate()?;
        self.hqs.validate()?;
        self.train_config(Stage::PretrainDenoise).validate()?;
        if self.psf.side % 2 == 0 {
            return Err(Error::Config(format!("psf.side {} must be odd", self.psf.side)));
        }
        Ok(())
    }

    /// Training settings for one stage.
    pub fn train_config(&self, stage: Stage) -> TrainConfig {
        TrainConfig {
            stage,
            learning_rate: self.train.learning_rate.unwrap_or(stage.default_learning_rate()),
            batch_size: self.train.batch_size,
            epochs: self.train.epochs,
            seed: self.seed,
            precision: self.train.precision,
            augment: self.train.augment,
        }
    }
}

/// Overlays `patch` onto `base` object by object.
fn merge(mut base: Value, patch: Value) -> Value {
    match (&mut base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                let slot = b.remove(&k).unwrap_or(Value::Null);
                b.insert(k, merge(slot, v));
            }
            base
        }
        (_, p) => p,
    }
}

fn apply_override(root: &mut Value, kv: &str) -> Result<()> {
    let (key, raw) = kv
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{kv}` is not key=value")))?;
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override key `{key}`")));
    }
    let mut node = root;
    for (i, part) in parts.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("`{}` is not a section", parts[..i].join("."))))?;
        let slot = obj
            .get_mut(*part)
            .ok_or_else(|| Error::Config(format!("unknown config key `{}`", parts[..=i].join("."))))?;
        if i + 1 == parts.len() {
            if slot.is_object() {
                return Err(Error::Config(format!("`{key}` is a section, not a value")));
            }
            *slot = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            return Ok(());
        }
        node = slot;
    }
    unreachable!("split yields at least one part")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        assert_eq!(RunConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn partial_file_keeps_other_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        std::fs::write(&path, r#"{"seed": 3, "hqs": {"lambda": 0.01}}"#).unwrap();
        let cfg = RunConfig::load(Some(&path), &[]).unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.hqs.lambda, 0.01);
        assert_eq!(cfg.hqs.mu, 0.001);
        assert_eq!(cfg.arch, NetArch::default());
    }

    #[test]
    fn overrides_apply_in_order() {
        let sets = [
            "train.epochs=5".to_string(),
            "psf.method=fft".to_string(),
            "hqs.beta0=0.5".to_string(),
            "train.epochs=6".to_string(),
            "train.learning_rate=0.001".to_string(),
        ];
        let cfg = RunConfig::load(None, &sets).unwrap();
        assert_eq!(cfg.train.epochs, 6);
        assert_eq!(cfg.psf.method, PsfMethod::Fft);
        assert_eq!(cfg.hqs.beta0, Some(0.5));
        assert_eq!(cfg.train_config(Stage::Joint).learning_rate, 0.001);
    }

    #[test]
    fn stage_default_learning_rates() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.train_config(Stage::PretrainDeblur).learning_rate, 1e-4);
        assert_eq!(cfg.train_config(Stage::Joint).learning_rate, 1e-5);
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        assert!(RunConfig::from_json(r#"{"sed": 1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"arch": {"depth": 3}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"psf": {"side": 10}}"#).is_err());
        assert!(RunConfig::load(None, &["train.nope=1".into()]).is_err());
        assert!(RunConfig::load(None, &["train=1".into()]).is_err());
        assert!(RunConfig::load(None, &["seed".into()]).is_err());
        assert!(RunConfig::load(None, &["seed.x=1".into()]).is_err());
        assert!(RunConfig::load(None, &["train.batch_size=0".into()]).is_err());
        assert!(RunConfig::load(None, &["psf.method=wiener".into()]).is_err());
    }
}
