//! Checkpoint file: the magic line `NIDF1`, a textual header terminated by a
//! blank line, then little-endian `f32` values of the denoiser followed by the
//! deblurrer, each in parameter declaration order.
//!
//! Header lines:
//! ```text
//! arch levels=2 base_channels=8 in_channels=1 out_channels=1 residual=true
//! stage joint
//! epoch 200
//! config lr=0.00001 batch=16 epochs=200 seed=7 precision=32 augment=0
//! losses 0.031 0.029 ...
//! params 12345
//! ```

use std::path::Path;

use super::arch::{NetArch, NetParams};
use super::cascade::Cascade;
use super::config::{Precision, Stage, TrainConfig};
use crate::error::{Error, Result};

pub const MAGIC: &str = "NIDF1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub arch: NetArch,
    pub stage: Stage,
    /// Epochs completed in the run that produced this checkpoint.
    pub epoch: usize,
    /// Mean training loss of every completed epoch.
    pub losses: Vec<f64>,
    pub config: TrainConfig,
    pub nets: Cascade<f32>,
}

impl Checkpoint {
    pub fn encode(&self) -> Vec<u8> {
        let a = &self.arch;
        let c = &self.config;
        let losses: Vec<String> = self.losses.iter().map(|l| format!("{l}")).collect();
        let mut header = format!(
            "{MAGIC}\narch levels={} base_channels={} in_channels={} out_channels={} residual={}\n\
             stage {}\nepoch {}\nconfig lr={} batch={} epochs={} seed={} precision={} augment={}\n",
            a.levels,
            a.base_channels,
            a.in_channels,
            a.out_channels,
            a.residual,
            self.stage,
            self.epoch,
            c.learning_rate,
            c.batch_size,
            c.epochs,
            c.seed,
            u32::from(c.precision),
            u8::from(c.augment),
        );
        if losses.is_empty() {
            header.push_str("losses\n");
        } else {
            header.push_str(&format!("losses {}\n", losses.join(" ")));
        }
        header.push_str(&format!("params {}\n\n", a.param_count()));
        let mut out = header.into_bytes();
        for net in [&self.nets.denoiser, &self.nets.deblurrer] {
            for v in net.flat() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let split = bytes
            .windows(2)
            .position(|w| w == b"\n\n")
            .ok_or_else(|| Error::parse("checkpoint header is not terminated by a blank line"))?;
        let header = std::str::from_utf8(&bytes[..split])
            .map_err(|_| Error::parse("checkpoint header is not utf-8"))?;
        let body = &bytes[split + 2..];
        let mut lines = header.lines();
        if lines.next() != Some(MAGIC) {
            return Err(Error::parse("missing NIDF1 magic"));
        }

        let mut arch = None;
        let mut stage = None;
        let mut epoch = None;
        let mut config = None;
        let mut losses = None;
        let mut params = None;
        for line in lines {
            let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
            let dup = || Error::parse(format!("duplicate checkpoint key `{key}`"));
            match key {
                "arch" => {
                    if arch.replace(parse_arch(rest)?).is_some() {
                        return Err(dup());
                    }
                }
                "stage" => {
                    let s: Stage = rest.parse().map_err(|e: Error| Error::parse(e.to_string()))?;
                    if stage.replace(s).is_some() {
                        return Err(dup());
                    }
                }
                "epoch" => {
                    if epoch.replace(parse_num::<usize>(rest, "epoch")?).is_some() {
                        return Err(dup());
                    }
                }
                "config" => {
                    if config.replace(parse_config(rest)?).is_some() {
                        return Err(dup());
                    }
                }
                "losses" => {
                    let v = rest
                        .split_whitespace()
                        .map(|t| parse_num::<f64>(t, "loss"))
                        .collect::<Result<Vec<_>>>()?;
                    if losses.replace(v).is_some() {
                        return Err(dup());
                    }
                }
                "params" => {
                    if params.replace(parse_num::<usize>(rest, "params")?).is_some() {
                        return Err(dup());
                    }
                }
                other => return Err(Error::parse(format!("unknown checkpoint key `{other}`"))),
            }
        }
        let missing = |k: &str| Error::parse(format!("checkpoint header lacks `{k}`"));
        let arch: NetArch = arch.ok_or_else(|| missing("arch"))?;
        let count = params.ok_or_else(|| missing("params"))?;
        if count != arch.param_count() {
            return Err(Error::parse(format!(
                "header declares {count} parameters, architecture has {}",
                arch.param_count()
            )));
        }
        if body.len() != 2 * 4 * count {
            return Err(Error::parse(format!(
                "checkpoint body has {} bytes, expected {}",
                body.len(),
                8 * count
            )));
        }
        let values: Vec<f32> = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::parse("checkpoint contains non-finite parameters"));
        }
        let stage = stage.ok_or_else(|| missing("stage"))?;
        let mut config = config.ok_or_else(|| missing("config"))?;
        config.stage = stage;
        Ok(Self {
            arch,
            stage,
            epoch: epoch.ok_or_else(|| missing("epoch"))?,
            losses: losses.ok_or_else(|| missing("losses"))?,
            config,
            nets: Cascade {
                denoiser: NetParams::from_flat(arch, &values[..count])?,
                deblurrer: NetParams::from_flat(arch, &values[count..])?,
            },
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.encode()).map_err(|e| Error::io(path, e))
    }
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::parse(format!("bad {what} value `{s}`")))
}

fn key_values(rest: &str) -> Result<Vec<(&str, &str)>> {
    rest.split_whitespace()
        .map(|kv| {
            kv.split_once('=')
                .ok_or_else(|| Error::parse(format!("expected key=value, got `{kv}`")))
        })
        .collect()
}

fn parse_arch(rest: &str) -> Result<NetArch> {
    let mut fields = [None; 4];
    let mut residual = None;
    for (k, v) in key_values(rest)? {
        let slot = match k {
            "levels" => 0,
            "base_channels" => 1,
            "in_channels" => 2,
            "out_channels" => 3,
            "residual" => {
                residual = Some(parse_num::<bool>(v, "residual")?);
                continue;
            }
            other => return Err(Error::parse(format!("unknown arch field `{other}`"))),
        };
        fields[slot] = Some(parse_num::<usize>(v, k)?);
    }
    let get = |i: usize| fields[i].ok_or_else(|| Error::parse("incomplete arch line"));
    let arch = NetArch {
        levels: get(0)?,
        base_channels: get(1)?,
        in_channels: get(2)?,
        out_channels: get(3)?,
        residual: residual.ok_or_else(|| Error::parse("incomplete arch line"))?,
    };
    arch.validate().map_err(|e| Error::parse(e.to_string()))?;
    Ok(arch)
}

fn parse_config(rest: &str) -> Result<TrainConfig> {
    let mut lr = None;
    let mut batch = None;
    let mut epochs = None;
    let mut seed = None;
    let mut precision = None;
    let mut augment = None;
    for (k, v) in key_values(rest)? {
        match k {
            "lr" => lr = Some(parse_num::<f64>(v, k)?),
            "batch" => batch = Some(parse_num::<usize>(v, k)?),
            "epochs" => epochs = Some(parse_num::<usize>(v, k)?),
            "seed" => seed = Some(parse_num::<u64>(v, k)?),
            "precision" => {
                let p = parse_num::<u32>(v, k)?;
                precision = Some(Precision::try_from(p).map_err(Error::parse)?);
            }
            "augment" => {
                augment = Some(match v {
                    "0" => false,
                    "1" => true,
                    _ => return Err(Error::parse(format!("augment must be 0 or 1, got `{v}`"))),
                });
            }
            other => return Err(Error::parse(format!("unknown config field `{other}`"))),
        }
    }
    let incomplete = || Error::parse("incomplete config line");
    // The stage is echoed on its own line and patched in by the caller.
    Ok(TrainConfig {
        stage: Stage::Joint,
        learning_rate: lr.ok_or_else(incomplete)?,
        batch_size: batch.ok_or_else(incomplete)?,
        epochs: epochs.ok_or_else(incomplete)?,
        seed: seed.ok_or_else(incomplete)?,
        precision: precision.ok_or_else(incomplete)?,
        augment: augment.ok_or_else(incomplete)?,
    })
}
