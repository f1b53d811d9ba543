//! Trained-model persistence: config, data dimensions and every parameter
//! tensor in one JSON document. `serde_json` prints shortest round-trip float
//! representations, so save/load is value-exact and byte-deterministic.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use bispace_core::adam::LrSchedule;
use bispace_core::dsi::DsiConfig;
use bispace_core::geometry::Activation;
use bispace_core::hypergraph::{LshadConfig, TemporalConfig};
use bispace_core::model::{DataDims, ModelConfig, ModelVariant};
use bispace_core::objective::{HvlglConfig, WeightingMode};
use bispace_core::params::{ParameterStore, Shape};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const FORMAT: &str = "bispace-model";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("io error on `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("model file `{path}` is not valid JSON: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("unsupported model file format `{format}` v{version}")]
    Format { format: String, version: u32 },
    #[error("parameter `{name}`: {rows}x{cols} shape does not match {len} values")]
    Shape {
        name: String,
        rows: usize,
        cols: usize,
        len: usize,
    },
}

#[derive(Serialize, Deserialize)]
struct TensorDoc {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ConfigDoc {
    seed: u64,
    curvature: f64,
    hidden_dim: usize,
    layers: usize,
    proj_visual_dim: usize,
    proj_audio_dim: usize,
    cross_attention_dim: usize,
    lshad_beta: f64,
    lshad_gamma: f64,
    temporal_eta: f64,
    dsi_lambda: f64,
    dsi_alpha: f64,
    dsi_head_dim: usize,
    dsi_double_softmax: bool,
    classifier_epsilon: f64,
    hvlgl_tau: f64,
    hvlgl_theta: f64,
    hvlgl_psi: f64,
    hvlgl_weighting: String,
    activation: String,
    dropout: f64,
    variant: String,
    epochs: usize,
    batch_size: usize,
    lr: f64,
    schedule: String,
    multistep_milestones: Vec<usize>,
    multistep_gamma: f64,
    shuffle: bool,
}

#[derive(Serialize, Deserialize)]
struct DimsDoc {
    visual: usize,
    audio: usize,
    text: usize,
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    format: String,
    version: u32,
    config: ConfigDoc,
    dims: DimsDoc,
    params: BTreeMap<String, TensorDoc>,
}

fn weighting_name(mode: WeightingMode) -> &'static str {
    match mode {
        WeightingMode::Distance => "distance",
        WeightingMode::LiteralSimilarity => "literal-similarity",
    }
}

fn activation_name(a: Activation) -> &'static str {
    match a {
        Activation::Identity => "identity",
        Activation::Relu => "relu",
        Activation::SigmoidGate => "sigmoid-gate",
    }
}

fn variant_name(v: ModelVariant) -> &'static str {
    match v {
        ModelVariant::Full => "full",
        ModelVariant::EuclidOnly => "euclid-only",
    }
}

/// Also persists the training schedule so a saved model records how it was
/// produced.
pub struct SavedTrainSettings {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub schedule: LrSchedule,
    pub shuffle: bool,
}

impl From<&bispace_core::train::TrainConfig> for SavedTrainSettings {
    fn from(t: &bispace_core::train::TrainConfig) -> Self {
        Self {
            epochs: t.epochs,
            batch_size: t.batch_size,
            lr: t.lr,
            schedule: t.schedule.clone(),
            shuffle: t.shuffle,
        }
    }
}

pub fn save(
    path: &Path,
    model_cfg: &ModelConfig,
    train: &SavedTrainSettings,
    dims: DataDims,
    store: &ParameterStore,
) -> Result<(), ModelFileError> {
    let (schedule, milestones, gamma) = match &train.schedule {
        LrSchedule::Constant => ("constant".to_string(), vec![], 0.1),
        LrSchedule::Cosine { .. } => ("cosine".to_string(), vec![], 0.1),
        LrSchedule::MultiStep { milestones, gamma } => {
            ("multistep".to_string(), milestones.clone(), *gamma)
        }
    };
    let doc = ModelDoc {
        format: FORMAT.to_string(),
        version: VERSION,
        config: ConfigDoc {
            seed: model_cfg.seed,
            curvature: model_cfg.curvature,
            hidden_dim: model_cfg.hidden_dim,
            layers: model_cfg.layers,
            proj_visual_dim: model_cfg.proj_visual_dim,
            proj_audio_dim: model_cfg.proj_audio_dim,
            cross_attention_dim: model_cfg.cross_attention_dim,
            lshad_beta: model_cfg.lshad.beta,
            lshad_gamma: model_cfg.lshad.gamma,
            temporal_eta: model_cfg.temporal.eta,
            dsi_lambda: model_cfg.dsi.lambda_thresh,
            dsi_alpha: model_cfg.dsi.alpha,
            dsi_head_dim: model_cfg.dsi.head_dim,
            dsi_double_softmax: model_cfg.dsi.double_softmax,
            classifier_epsilon: model_cfg.classifier_epsilon,
            hvlgl_tau: model_cfg.hvlgl.tau,
            hvlgl_theta: model_cfg.hvlgl.theta,
            hvlgl_psi: model_cfg.hvlgl.psi,
            hvlgl_weighting: weighting_name(model_cfg.hvlgl.mode).to_string(),
            activation: activation_name(model_cfg.activation).to_string(),
            dropout: model_cfg.dropout,
            variant: variant_name(model_cfg.variant).to_string(),
            epochs: train.epochs,
            batch_size: train.batch_size,
            lr: train.lr,
            schedule,
            multistep_milestones: milestones,
            multistep_gamma: gamma,
            shuffle: train.shuffle,
        },
        dims: DimsDoc {
            visual: dims.visual,
            audio: dims.audio,
            text: dims.text,
        },
        params: store
            .iter()
            .map(|(name, entry)| {
                (
                    name.clone(),
                    TensorDoc {
                        rows: entry.shape.rows,
                        cols: entry.shape.cols,
                        data: entry.value.clone(),
                    },
                )
            })
            .collect(),
    };
    let mut body = serde_json::to_string_pretty(&doc).expect("serializable model");
    body.push('\n');
    fs::write(path, body).map_err(|source| ModelFileError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub struct LoadedModel {
    pub model: ModelConfig,
    pub train: SavedTrainSettings,
    pub dims: DataDims,
    pub store: ParameterStore,
}

pub fn load(path: &Path) -> Result<LoadedModel, ModelFileError> {
    let body = fs::read_to_string(path).map_err(|source| ModelFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let doc: ModelDoc = serde_json::from_str(&body).map_err(|source| ModelFileError::Json {
        path: path.display().to_string(),
        source,
    })?;
    if doc.format != FORMAT || doc.version != VERSION {
        return Err(ModelFileError::Format {
            format: doc.format,
            version: doc.version,
        });
    }
    let c = &doc.config;
    let model = ModelConfig {
        seed: c.seed,
        curvature: c.curvature,
        hidden_dim: c.hidden_dim,
        layers: c.layers,
        proj_visual_dim: c.proj_visual_dim,
        proj_audio_dim: c.proj_audio_dim,
        cross_attention_dim: c.cross_attention_dim,
        lshad: LshadConfig {
            beta: c.lshad_beta,
            gamma: c.lshad_gamma,
        },
        temporal: TemporalConfig {
            eta: c.temporal_eta,
        },
        dsi: DsiConfig {
            lambda_thresh: c.dsi_lambda,
            alpha: c.dsi_alpha,
            head_dim: c.dsi_head_dim,
            double_softmax: c.dsi_double_softmax,
        },
        classifier_epsilon: c.classifier_epsilon,
        hvlgl: HvlglConfig {
            tau: c.hvlgl_tau,
            theta: c.hvlgl_theta,
            psi: c.hvlgl_psi,
            mode: match c.hvlgl_weighting.as_str() {
                "literal-similarity" => WeightingMode::LiteralSimilarity,
                _ => WeightingMode::Distance,
            },
        },
        activation: match c.activation.as_str() {
            "relu" => Activation::Relu,
            "sigmoid-gate" => Activation::SigmoidGate,
            _ => Activation::Identity,
        },
        dropout: c.dropout,
        variant: match c.variant.as_str() {
            "euclid-only" => ModelVariant::EuclidOnly,
            _ => ModelVariant::Full,
        },
    };
    let train = SavedTrainSettings {
        epochs: c.epochs,
        batch_size: c.batch_size,
        lr: c.lr,
        schedule: match c.schedule.as_str() {
            "constant" => LrSchedule::Constant,
            "multistep" => LrSchedule::MultiStep {
                milestones: c.multistep_milestones.clone(),
                gamma: c.multistep_gamma,
            },
            _ => LrSchedule::Cosine {
                total_epochs: c.epochs,
            },
        },
        shuffle: c.shuffle,
    };
    let mut store = ParameterStore::new();
    for (name, tensor) in doc.params {
        if tensor.rows * tensor.cols != tensor.data.len() {
            return Err(ModelFileError::Shape {
                name,
                rows: tensor.rows,
                cols: tensor.cols,
                len: tensor.data.len(),
            });
        }
        store.insert(&name, Shape::matrix(tensor.rows, tensor.cols), tensor.data);
    }
    Ok(LoadedModel {
        model,
        train,
        dims: DataDims {
            visual: doc.dims.visual,
            audio: doc.dims.audio,
            text: doc.dims.text,
        },
        store,
    })
}
