//! Flat `key = value` run configuration (UTF-8, `#` comments). Unknown keys
//! are rejected; every key has a documented default, so an empty (or absent)
//! file is a valid configuration.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use bispace_core::adam::LrSchedule;
use bispace_core::dsi::DsiConfig;
use bispace_core::geometry::Activation;
use bispace_core::hypergraph::{LshadConfig, TemporalConfig};
use bispace_core::model::{ModelConfig, ModelVariant};
use bispace_core::objective::{HvlglConfig, WeightingMode};
use bispace_core::synth::SyntheticSpec;
use bispace_core::train::TrainConfig;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown key `{key}`")]
    UnknownKey { key: String },
    #[error("key `{key}`: cannot parse `{value}` as {expected}")]
    BadValue {
        key: String,
        value: String,
        expected: &'static str,
    },
}

/// Raw parsed key/value pairs.
fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut pairs = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Syntax {
                line: i + 1,
                text: raw.trim().to_string(),
            });
        };
        pairs.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(pairs)
}

struct Reader {
    pairs: BTreeMap<String, String>,
}

impl Reader {
    fn f64(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.pairs.remove(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| ConfigError::BadValue {
                key: key.into(),
                value: v,
                expected: "a real number",
            }),
        }
    }

    fn usize(&mut self, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.pairs.remove(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| ConfigError::BadValue {
                key: key.into(),
                value: v,
                expected: "a nonnegative integer",
            }),
        }
    }

    fn u64(&mut self, key: &str, default: u64) -> Result<u64, ConfigError> {
        match self.pairs.remove(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| ConfigError::BadValue {
                key: key.into(),
                value: v,
                expected: "a nonnegative integer",
            }),
        }
    }

    fn bool(&mut self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.pairs.remove(key) {
            None => Ok(default),
            Some(v) => match v.as_str() {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                _ => Err(ConfigError::BadValue {
                    key: key.into(),
                    value: v,
                    expected: "true or false",
                }),
            },
        }
    }

    fn string(&mut self, key: &str, default: &str) -> String {
        self.pairs
            .remove(key)
            .unwrap_or_else(|| default.to_string())
    }

    fn finish(self) -> Result<(), ConfigError> {
        if let Some(key) = self.pairs.into_keys().next() {
            return Err(ConfigError::UnknownKey { key });
        }
        Ok(())
    }
}

/// Model + training configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            train: TrainConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_str(text: &str) -> Result<Self, ConfigError> {
        let mut r = Reader {
            pairs: parse_pairs(text)?,
        };

        let weighting = match r.string("hvlgl_weighting", "distance").as_str() {
            "distance" => WeightingMode::Distance,
            "literal-similarity" => WeightingMode::LiteralSimilarity,
            other => {
                return Err(ConfigError::BadValue {
                    key: "hvlgl_weighting".into(),
                    value: other.into(),
                    expected: "`distance` or `literal-similarity`",
                })
            }
        };
        let activation = match r.string("activation", "identity").as_str() {
            "identity" => Activation::Identity,
            "relu" => Activation::Relu,
            "sigmoid-gate" => Activation::SigmoidGate,
            other => {
                return Err(ConfigError::BadValue {
                    key: "activation".into(),
                    value: other.into(),
                    expected: "`identity`, `relu` or `sigmoid-gate`",
                })
            }
        };
        let variant = match r.string("variant", "full").as_str() {
            "full" => ModelVariant::Full,
            "euclid-only" => ModelVariant::EuclidOnly,
            other => {
                return Err(ConfigError::BadValue {
                    key: "variant".into(),
                    value: other.into(),
                    expected: "`full` or `euclid-only`",
                })
            }
        };

        let model = ModelConfig {
            seed: r.u64("seed", 7)?,
            curvature: r.f64("curvature", -1.0)?,
            hidden_dim: r.usize("hidden_dim", 8)?,
            layers: r.usize("layers", 2)?,
            proj_visual_dim: r.usize("proj_visual_dim", 12)?,
            proj_audio_dim: r.usize("proj_audio_dim", 4)?,
            cross_attention_dim: r.usize("cross_attention_dim", 6)?,
            lshad: LshadConfig {
                beta: r.f64("lshad_beta", 0.8)?,
                gamma: r.f64("lshad_gamma", 1.2)?,
            },
            temporal: TemporalConfig {
                eta: r.f64("temporal_eta", std::f64::consts::E)?,
            },
            dsi: DsiConfig {
                lambda_thresh: r.f64("dsi_lambda", 0.8)?,
                alpha: r.f64("dsi_alpha", 0.4)?,
                head_dim: r.usize("dsi_head_dim", 8)?,
                double_softmax: r.bool("dsi_double_softmax", false)?,
            },
            classifier_epsilon: r.f64("classifier_epsilon", 1.0)?,
            hvlgl: HvlglConfig {
                tau: r.f64("hvlgl_tau", 0.3)?,
                theta: r.f64("hvlgl_theta", 1.0)?,
                psi: r.f64("hvlgl_psi", 1e-4)?,
                mode: weighting,
            },
            activation,
            dropout: r.f64("dropout", 0.0)?,
            variant,
        };

        let epochs = r.usize("epochs", 20)?;
        let schedule_name = r.string("schedule", "cosine");
        let milestones_raw = r.string("multistep_milestones", "4,8");
        let gamma = r.f64("multistep_gamma", 0.1)?;
        let schedule = match schedule_name.as_str() {
            "constant" => LrSchedule::Constant,
            "cosine" => LrSchedule::Cosine {
                total_epochs: epochs,
            },
            "multistep" => {
                let milestones = milestones_raw
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| {
                        s.trim().parse().map_err(|_| ConfigError::BadValue {
                            key: "multistep_milestones".into(),
                            value: milestones_raw.clone(),
                            expected: "comma-separated epoch indices",
                        })
                    })
                    .collect::<Result<Vec<usize>, _>>()?;
                LrSchedule::MultiStep { milestones, gamma }
            }
            other => {
                return Err(ConfigError::BadValue {
                    key: "schedule".into(),
                    value: other.into(),
                    expected: "`cosine`, `multistep` or `constant`",
                })
            }
        };
        let train = TrainConfig {
            epochs,
            batch_size: r.usize("batch_size", 8)?,
            lr: r.f64("lr", 1e-3)?,
            schedule,
            shuffle: r.bool("shuffle", true)?,
        };

        r.finish()?;
        Ok(Self { model, train })
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_str(&text)
    }
}

/// Synthesis configuration, same syntax.
#[derive(Debug, Clone)]
pub struct SynthConfig(pub SyntheticSpec);

impl SynthConfig {
    pub fn from_str(text: &str) -> Result<Self, ConfigError> {
        let mut r = Reader {
            pairs: parse_pairs(text)?,
        };
        let spec = SyntheticSpec {
            seed: r.u64("seed", 7)?,
            num_videos: r.usize("num_videos", 60)?,
            t_min: r.usize("t_min", 16)?,
            t_max: r.usize("t_max", 64)?,
            visual_dim: r.usize("visual_dim", 16)?,
            audio_dim: r.usize("audio_dim", 8)?,
            margin: r.f64("margin", 1.0)?,
            ambiguity_fraction: r.f64("ambiguity_fraction", 0.3)?,
            feature_noise: r.f64("feature_noise", 0.12)?,
            negatives_per_video: r.usize("negatives_per_video", 2)?,
        };
        r.finish()?;
        Ok(Self(spec))
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_str(&text)
    }
}
