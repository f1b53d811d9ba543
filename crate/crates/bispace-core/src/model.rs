//! End-to-end model assembly: modality fusion, the two branches, cross-space
//! interaction and the classifier, plus parameter registration/initialization
//! and the batch training objective.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::data::{Dataset, FeatureSequence, TextBank, TextEntry};
use crate::dsi::{dsi_fuse, CrossAttentionParams, DsiConfig};
use crate::euclid::{euclid_branch_forward, GcnLayerParams};
use crate::fusion::{fuse_modalities, AudioFusionParams, FusionParams};
use crate::geometry::{
    euclid_to_lorentz, tangent_at_origin, Activation, Curvature, GeometryError,
    HyperbolicLinearParams, LorentzPoint, TransformMode,
};
use crate::gradcheck::DifferentiableLoss;
use crate::hypergraph::{hyper_branch_forward, LshadConfig, TemporalConfig};
use crate::objective::{
    bce_loss, classify, hvlgl_video_loss, mil_video_score, top_k_indices, total_loss,
    ClassifierParams, HvlglConfig,
};
use crate::params::{ParamError, ParamSet, ParameterStore, Shape};
use crate::rng::{DetRng, Stream};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub enum ModelError {
    InvalidConfig(String),
    Geometry(GeometryError),
    Param(ParamError),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::InvalidConfig(msg) => write!(f, "invalid model config: {msg}"),
            ModelError::Geometry(e) => write!(f, "geometry error: {e}"),
            ModelError::Param(e) => write!(f, "parameter error: {e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ModelError {}

impl From<GeometryError> for ModelError {
    fn from(e: GeometryError) -> Self {
        ModelError::Geometry(e)
    }
}

impl From<ParamError> for ModelError {
    fn from(e: ParamError) -> Self {
        ModelError::Param(e)
    }
}

/// Which parts of the architecture are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ModelVariant {
    #[default]
    Full,
    /// Euclidean branch only; no hyperbolic branch, no cross-space
    /// interaction, no text guidance.
    EuclidOnly,
}

/// All architecture and objective hyperparameters.
#[derive(Debug, Clone)]
pub struct ModelConfig {
    pub curvature: f64,
    pub hidden_dim: usize,
    pub layers: usize,
    pub proj_visual_dim: usize,
    pub proj_audio_dim: usize,
    pub cross_attention_dim: usize,
    pub lshad: LshadConfig,
    pub temporal: TemporalConfig,
    pub dsi: DsiConfig,
    pub classifier_epsilon: f64,
    pub hvlgl: HvlglConfig,
    pub activation: Activation,
    pub dropout: f64,
    pub variant: ModelVariant,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            curvature: -1.0,
            hidden_dim: 8,
            layers: 2,
            proj_visual_dim: 12,
            proj_audio_dim: 4,
            cross_attention_dim: 6,
            lshad: LshadConfig::default(),
            temporal: TemporalConfig::default(),
            dsi: DsiConfig::default(),
            classifier_epsilon: 1.0,
            hvlgl: HvlglConfig::default(),
            activation: Activation::Identity,
            dropout: 0.0,
            variant: ModelVariant::Full,
            seed: 7,
        }
    }
}

/// Data-derived dimensions the model is built against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DataDims {
    pub visual: usize,
    /// 0 when the dataset has no audio modality.
    pub audio: usize,
    /// 0 when no text bank is used.
    pub text: usize,
}

impl DataDims {
    pub fn of(dataset: &Dataset, bank: Option<&TextBank>) -> Self {
        Self {
            visual: dataset.visual_dim(),
            audio: dataset.audio_dim(),
            text: bank.map_or(0, |b| b.dim),
        }
    }
}

/// A text entry lifted onto the model's manifold.
pub struct LiftedText {
    pub positive: LorentzPoint<f64>,
    pub negatives: Vec<LorentzPoint<f64>>,
}

/// A validated model: config plus data dimensions.
pub struct Model {
    pub cfg: ModelConfig,
    pub dims: DataDims,
}

impl Model {
    pub fn new(cfg: ModelConfig, dims: DataDims) -> Result<Self, ModelError> {
        let fail = |msg: &str| Err(ModelError::InvalidConfig(String::from(msg)));
        if !(cfg.curvature < 0.0) || !cfg.curvature.is_finite() {
            return fail("curvature must be strictly negative");
        }
        if cfg.hidden_dim == 0 || cfg.proj_visual_dim == 0 || cfg.cross_attention_dim == 0 {
            return fail("dimensions must be positive");
        }
        if dims.audio > 0 && cfg.proj_audio_dim == 0 {
            return fail("audio projection width must be positive");
        }
        if cfg.dsi.head_dim == 0 {
            return fail("attention head dimension must be positive");
        }
        if !(0.0..1.0).contains(&cfg.dropout) {
            return fail("dropout must lie in [0, 1)");
        }
        if !(cfg.hvlgl.tau > 0.0) {
            return fail("temperature must be positive");
        }
        if dims.visual == 0 {
            return fail("visual feature dimension must be positive");
        }
        let model = Self { cfg, dims };
        if model.dims.text > 0
            && model.cfg.variant == ModelVariant::Full
            && model.dims.text != model.fused_width()
        {
            return Err(ModelError::InvalidConfig(format!(
                "text embedding dimension {} must equal the fused feature width {}",
                model.dims.text,
                model.fused_width()
            )));
        }
        Ok(model)
    }

    pub fn curvature(&self) -> Curvature {
        Curvature::new(self.cfg.curvature).expect("validated at construction")
    }

    /// Width of the fused per-snippet features entering the branches.
    pub fn input_width(&self) -> usize {
        self.cfg.proj_visual_dim + if self.dims.audio > 0 { self.cfg.proj_audio_dim } else { 0 }
    }

    /// Width of each branch output (and of the fused representation).
    pub fn fused_width(&self) -> usize {
        if self.cfg.layers == 0 {
            2 * self.input_width()
        } else {
            2 * self.cfg.hidden_dim
        }
    }

    fn branch_in(&self, layer: usize) -> usize {
        if layer == 0 {
            self.input_width()
        } else {
            self.cfg.hidden_dim
        }
    }

    /// Parameter registration order is fixed; initialization draws follow it.
    fn param_specs(&self) -> Vec<(String, Shape, Init)> {
        fn weight(specs: &mut Vec<(String, Shape, Init)>, name: String, rows: usize, cols: usize) {
            specs.push((name, Shape::matrix(rows, cols), Init::fan_in(cols)));
        }
        fn bias(specs: &mut Vec<(String, Shape, Init)>, name: String, len: usize) {
            specs.push((name, Shape::vector(len), Init::Zeros));
        }

        let mut specs: Vec<(String, Shape, Init)> = Vec::new();
        let h = self.cfg.hidden_dim;
        let f = self.fused_width();

        weight(&mut specs, String::from("fuse.visual.w"), self.cfg.proj_visual_dim, self.dims.visual);
        bias(&mut specs, String::from("fuse.visual.b"), self.cfg.proj_visual_dim);
        if self.dims.audio > 0 {
            let pa = self.cfg.proj_audio_dim;
            let c = self.cfg.cross_attention_dim;
            weight(&mut specs, String::from("fuse.audio.w"), pa, self.dims.audio);
            bias(&mut specs, String::from("fuse.audio.b"), pa);
            weight(&mut specs, String::from("fuse.query.w"), c, pa);
            bias(&mut specs, String::from("fuse.query.b"), c);
            weight(&mut specs, String::from("fuse.key.w"), c, self.cfg.proj_visual_dim);
            bias(&mut specs, String::from("fuse.key.b"), c);
        }

        for l in 0..self.cfg.layers {
            let inp = self.branch_in(l);
            for path in ["sem", "tmp"] {
                weight(&mut specs, format!("euclid.{path}{l}.w"), h, inp);
                bias(&mut specs, format!("euclid.{path}{l}.b"), h);
            }
        }
        if self.cfg.variant == ModelVariant::Full {
            for l in 0..self.cfg.layers {
                let inp = self.branch_in(l) + 1;
                for path in ["sem", "tmp"] {
                    weight(&mut specs, format!("hyper.{path}{l}.w"), h, inp);
                    specs.push((format!("hyper.{path}{l}.v"), Shape::vector(inp), Init::fan_in(inp)));
                    bias(&mut specs, format!("hyper.{path}{l}.b"), h);
                    specs.push((format!("hyper.{path}{l}.bp"), Shape::scalar(), Init::Zeros));
                }
            }
            let d = self.cfg.dsi.head_dim;
            for dir in ["e", "h"] {
                weight(&mut specs, format!("dsi.{dir}.wq"), d, f);
                bias(&mut specs, format!("dsi.{dir}.bq"), d);
                weight(&mut specs, format!("dsi.{dir}.wk"), d, f);
                bias(&mut specs, format!("dsi.{dir}.bk"), d);
                weight(&mut specs, format!("dsi.{dir}.wv"), f, f);
                bias(&mut specs, format!("dsi.{dir}.bv"), f);
            }
        }

        specs.push((String::from("cls.w"), Shape::vector(f + 1), Init::fan_in(f + 1)));
        specs.push((String::from("cls.b"), Shape::scalar(), Init::Zeros));
        specs
    }

    /// Seeded parameter initialization (Gaussian fan-in weights, zero biases).
    pub fn init_store(&self) -> ParameterStore {
        let mut rng = DetRng::new(self.cfg.seed, Stream::ParamInit);
        let mut store = ParameterStore::new();
        for (name, shape, init) in self.param_specs() {
            let value = match init {
                Init::Zeros => vec![0.0; shape.len()],
                Init::Normal { std } => {
                    (0..shape.len()).map(|_| std * rng.normal()).collect()
                }
            };
            store.insert(&name, shape, value);
        }
        store
    }

    fn fusion_params<S: Scalar>(&self, ps: &ParamSet<S>) -> Result<FusionParams<S>, ModelError> {
        let audio = if self.dims.audio > 0 {
            Some(AudioFusionParams {
                audio_w: ps.rows("fuse.audio.w")?,
                audio_b: ps.vec("fuse.audio.b")?.to_vec(),
                query_w: ps.rows("fuse.query.w")?,
                query_b: ps.vec("fuse.query.b")?.to_vec(),
                key_w: ps.rows("fuse.key.w")?,
                key_b: ps.vec("fuse.key.b")?.to_vec(),
            })
        } else {
            None
        };
        Ok(FusionParams {
            visual_w: ps.rows("fuse.visual.w")?,
            visual_b: ps.vec("fuse.visual.b")?.to_vec(),
            audio,
        })
    }

    fn euclid_layers<S: Scalar>(
        &self,
        ps: &ParamSet<S>,
        path: &str,
    ) -> Result<Vec<GcnLayerParams<S>>, ModelError> {
        (0..self.cfg.layers)
            .map(|l| {
                Ok(GcnLayerParams {
                    w: ps.rows(&format!("euclid.{path}{l}.w"))?,
                    b: ps.vec(&format!("euclid.{path}{l}.b"))?.to_vec(),
                })
            })
            .collect()
    }

    fn hyper_layers<S: Scalar>(
        &self,
        ps: &ParamSet<S>,
        path: &str,
    ) -> Result<Vec<HyperbolicLinearParams<S>>, ModelError> {
        (0..self.cfg.layers)
            .map(|l| {
                Ok(HyperbolicLinearParams {
                    w: ps.rows(&format!("hyper.{path}{l}.w"))?,
                    v: ps.vec(&format!("hyper.{path}{l}.v"))?.to_vec(),
                    b: ps.vec(&format!("hyper.{path}{l}.b"))?.to_vec(),
                    b_prime: ps.scalar(&format!("hyper.{path}{l}.bp"))?,
                    scale_lambda: 1.0,
                    activation: self.cfg.activation,
                    mode: TransformMode::Normalized,
                    dropout_mask: None,
                })
            })
            .collect()
    }

    fn attention_params<S: Scalar>(
        &self,
        ps: &ParamSet<S>,
        dir: &str,
    ) -> Result<CrossAttentionParams<S>, ModelError> {
        Ok(CrossAttentionParams {
            wq: ps.rows(&format!("dsi.{dir}.wq"))?,
            bq: ps.vec(&format!("dsi.{dir}.bq"))?.to_vec(),
            wk: ps.rows(&format!("dsi.{dir}.wk"))?,
            bk: ps.vec(&format!("dsi.{dir}.bk"))?.to_vec(),
            wv: ps.rows(&format!("dsi.{dir}.wv"))?,
            bv: ps.vec(&format!("dsi.{dir}.bv"))?.to_vec(),
        })
    }

    fn classifier<S: Scalar>(&self, ps: &ParamSet<S>) -> Result<ClassifierParams<S>, ModelError> {
        Ok(ClassifierParams {
            w: ps.vec("cls.w")?.to_vec(),
            b: ps.scalar("cls.b")?,
            epsilon: self.cfg.classifier_epsilon,
        })
    }

    /// Forward pass over one video: per-snippet scores plus the intermediate
    /// representations used by the objectives.
    pub fn forward<S: Scalar>(
        &self,
        ps: &ParamSet<S>,
        seq: &FeatureSequence,
    ) -> Result<Forward<S>, ModelError> {
        let curv = self.curvature();
        let fusion = self.fusion_params(ps)?;
        let fused = fuse_modalities(&seq.visual, seq.audio.as_deref(), &fusion)?;

        let euclid_rows = euclid_branch_forward(
            &fused,
            &self.euclid_layers(ps, "sem")?,
            &self.euclid_layers(ps, "tmp")?,
            &self.cfg.temporal,
        )?;

        let fused_rows = match self.cfg.variant {
            ModelVariant::EuclidOnly => euclid_rows.clone(),
            ModelVariant::Full => {
                let hyper_nodes = hyper_branch_forward(
                    &fused,
                    &self.hyper_layers(ps, "sem")?,
                    &self.hyper_layers(ps, "tmp")?,
                    &self.cfg.lshad,
                    &self.cfg.temporal,
                    curv,
                )?;
                let hyper_tangent: Vec<Vec<S>> =
                    hyper_nodes.iter().map(tangent_at_origin).collect();
                dsi_fuse(
                    &euclid_rows,
                    &hyper_tangent,
                    &self.attention_params(ps, "e")?,
                    &self.attention_params(ps, "h")?,
                    &self.cfg.dsi,
                    curv,
                )?
            }
        };

        let classifier = self.classifier(ps)?;
        let scores = fused_rows
            .iter()
            .map(|row| classify(row, &classifier, curv))
            .collect::<Result<Vec<S>, _>>()?;

        Ok(Forward {
            scores,
            fused: fused_rows,
            euclid: euclid_rows,
        })
    }

    /// Lift the bank entries used by this model onto the manifold once.
    pub fn lift_bank(&self, bank: &TextBank) -> BTreeMap<String, LiftedText> {
        let curv = self.curvature();
        bank.entries
            .iter()
            .map(|(id, entry)| (id.clone(), lift_entry(entry, curv)))
            .collect()
    }

    /// Combined objective over a batch of videos:
    /// `psi * mean(contrastive over videos with text) + BCE(video scores)`.
    ///
    /// Also returns the plain values of both components for logging.
    pub fn batch_objective<S: Scalar>(
        &self,
        ps: &ParamSet<S>,
        batch: &[(&FeatureSequence, Option<&LiftedText>)],
    ) -> Result<BatchLoss<S>, ModelError> {
        assert!(!batch.is_empty(), "empty batch");
        let mut predictions = Vec::with_capacity(batch.len());
        let mut labels = Vec::with_capacity(batch.len());
        let mut contrastive_terms: Vec<S> = Vec::new();
        for (seq, text) in batch {
            let fwd = self.forward(ps, seq)?;
            predictions.push(mil_video_score(&fwd.scores));
            labels.push(f64::from(seq.video_label));
            if self.cfg.variant == ModelVariant::Full {
                if let Some(text) = text {
                    contrastive_terms.push(self.video_contrastive(&fwd, text)?);
                }
            }
        }
        let bce = bce_loss(&predictions, &labels);
        let hvlgl = match contrastive_terms.len() {
            0 => None,
            n => Some(crate::linalg::sum(&contrastive_terms) / n as f64),
        };
        let bce_val = bce.val();
        let hvlgl_val = hvlgl.as_ref().map_or(0.0, Scalar::val);
        let total = match &hvlgl {
            Some(h) => total_loss(h, &bce, self.cfg.hvlgl.psi),
            None => bce.clone(),
        };
        Ok(BatchLoss {
            total,
            bce_term: bce,
            hvlgl_term: hvlgl,
            bce: bce_val,
            hvlgl: hvlgl_val,
        })
    }

    /// Contrastive term of one video: the fused rows of the top-k snippets
    /// (the positive bag) are averaged, lifted, and compared against the
    /// video's positive and negative texts.
    fn video_contrastive<S: Scalar>(
        &self,
        fwd: &Forward<S>,
        text: &LiftedText,
    ) -> Result<S, ModelError> {
        let vals: Vec<f64> = fwd.scores.iter().map(Scalar::val).collect();
        let k = crate::objective::mil_k(vals.len());
        let picked = top_k_indices(&vals, k);
        let width = fwd.fused[0].len();
        let mut mean: Vec<S> = fwd.fused[picked[0]].clone();
        for &i in &picked[1..] {
            for (m, v) in mean.iter_mut().zip(&fwd.fused[i]) {
                *m = m.clone() + v.clone();
            }
        }
        let mean: Vec<S> = mean.into_iter().map(|m| m / picked.len() as f64).collect();
        debug_assert_eq!(mean.len(), width);
        let visual = euclid_to_lorentz(&mean, self.curvature());
        Ok(hvlgl_video_loss(
            &visual,
            &text.positive,
            &text.negatives,
            &self.cfg.hvlgl,
        )?)
    }
}

#[derive(Clone, Copy, Debug)]
enum Init {
    Zeros,
    Normal { std: f64 },
}

impl Init {
    fn fan_in(n: usize) -> Self {
        Init::Normal {
            std: 1.0 / crate::math::sqrt(n.max(1) as f64),
        }
    }
}

fn lift_entry(entry: &TextEntry, curv: Curvature) -> LiftedText {
    LiftedText {
        positive: euclid_to_lorentz(&entry.positive, curv),
        negatives: entry
            .negatives
            .iter()
            .map(|n| euclid_to_lorentz(&n.embedding, curv))
            .collect(),
    }
}

/// Per-video forward output.
pub struct Forward<S> {
    /// Per-snippet violence scores in `(0, 1)`.
    pub scores: Vec<S>,
    /// Fused per-snippet representation (classifier input).
    pub fused: Vec<Vec<S>>,
    /// Euclidean branch output (inspection).
    pub euclid: Vec<Vec<S>>,
}

/// Batch objective with the separate differentiable terms and their raw
/// values for logging.
pub struct BatchLoss<S> {
    /// `psi * hvlgl_term + bce_term`.
    pub total: S,
    pub bce_term: S,
    pub hvlgl_term: Option<S>,
    pub bce: f64,
    pub hvlgl: f64,
}

/// Objective adapter for gradient checking: a fixed batch against a model.
pub struct BatchObjective<'a> {
    pub model: &'a Model,
    pub batch: Vec<(&'a FeatureSequence, Option<&'a LiftedText>)>,
}

impl DifferentiableLoss for BatchObjective<'_> {
    fn loss<S: Scalar>(&self, params: &ParamSet<S>) -> S {
        self.model
            .batch_objective(params, &self.batch)
            .expect("validated model and data")
            .total
    }
}
