use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Training stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    /// Net1 on (noisy, blurry) pairs.
    PretrainDenoise,
    /// Net2 on (blurry, sharp) pairs.
    PretrainDeblur,
    /// Both subnets on (noisy, blurry, sharp) triples with the joint loss.
    Joint,
}

impl Stage {
    pub fn default_learning_rate(self) -> f64 {
        match self {
            Stage::PretrainDenoise | Stage::PretrainDeblur => 1e-4,
            Stage::Joint => 1e-5,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::PretrainDenoise => "pretrain-denoise",
            Stage::PretrainDeblur => "pretrain-deblur",
            Stage::Joint => "joint",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pretrain-denoise" => Ok(Stage::PretrainDenoise),
            "pretrain-deblur" => Ok(Stage::PretrainDeblur),
            "joint" => Ok(Stage::Joint),
            other => Err(Error::Config(format!("unknown stage `{other}`"))),
        }
    }
}

/// Arithmetic precision used while training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum Precision {
    F32,
    F64,
}

impl TryFrom<u32> for Precision {
    type Error = String;

    fn try_from(v: u32) -> std::result::Result<Self, String> {
        match v {
            32 => Ok(Precision::F32),
            64 => Ok(Precision::F64),
            _ => Err(format!("precision must be 32 or 64, got {v}")),
        }
    }
}

impl From<Precision> for u32 {
    fn from(p: Precision) -> u32 {
        match p {
            Precision::F32 => 32,
            Precision::F64 => 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub stage: Stage,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub precision: Precision,
    /// Train on all eight flips and transposes of every sample.
    pub augment: bool,
}

impl TrainConfig {
    pub fn new(stage: Stage) -> Self {
        Self {
            stage,
            learning_rate: stage.default_learning_rate(),
            batch_size: 16,
            epochs: 200,
            seed: 0,
            precision: Precision::F32,
            augment: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        Ok(())
    }
}
