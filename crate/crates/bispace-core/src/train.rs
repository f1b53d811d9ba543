//! Weakly supervised training loop and frame-level evaluation.
//!
//! Training is single-threaded and fully deterministic for a given seed and
//! config: shuffling, initialization and every floating-point operation run in
//! a fixed order. Each video's loss contribution is recorded on its own tape
//! and scaled so the accumulated gradients equal the batch objective exactly;
//! the optimizer steps once per batch.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::adam::{adam_step, AdamConfig, AdamState, LrSchedule};
use crate::data::{DataError, Dataset, FeatureSequence, TextBank};
use crate::metrics::{average_precision, broadcast_to_frames, roc_auc};
use crate::model::{LiftedText, Model, ModelError, ModelVariant};
use crate::params::{ParamSet, ParameterStore};
use crate::rng::{DetRng, Stream};
use crate::tape::{EngineError, Tape, Var};

#[derive(Debug, Clone)]
pub enum TrainError {
    Model(ModelError),
    Data(DataError),
    /// Training diverged: non-finite loss or gradient.
    NonFinite {
        epoch: usize,
        step: usize,
        source: EngineError,
    },
}

impl fmt::Display for TrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainError::Model(e) => write!(f, "{e}"),
            TrainError::Data(e) => write!(f, "{e}"),
            TrainError::NonFinite {
                epoch,
                step,
                source,
            } => write!(f, "non-finite loss at epoch {epoch}, step {step}: {source}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for TrainError {}

impl From<ModelError> for TrainError {
    fn from(e: ModelError) -> Self {
        TrainError::Model(e)
    }
}

impl From<DataError> for TrainError {
    fn from(e: DataError) -> Self {
        TrainError::Data(e)
    }
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub schedule: LrSchedule,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 8,
            lr: 1e-3,
            schedule: LrSchedule::Cosine { total_epochs: 20 },
            shuffle: true,
        }
    }
}

/// One epoch of the training log.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub bce: f64,
    pub hvlgl: f64,
    pub total: f64,
    /// Frame-level metrics on the training set; NaN when labels are missing.
    pub ap: f64,
    pub auc: f64,
}

pub struct TrainOutcome {
    pub store: ParameterStore,
    pub log: Vec<EpochLog>,
}

/// Train a model on a dataset with an optional text bank.
pub fn train(
    model: &Model,
    dataset: &Dataset,
    bank: Option<&TextBank>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    if dataset.is_empty() {
        return Err(TrainError::Data(DataError::EmptyDataset));
    }
    if let Some(bank) = bank {
        bank.validate()?;
        bank.cross_reference(dataset)?;
    }
    let lifted: BTreeMap<String, LiftedText> = match (bank, model.cfg.variant) {
        (Some(bank), ModelVariant::Full) => model.lift_bank(bank),
        _ => BTreeMap::new(),
    };

    let mut store = model.init_store();
    let mut adam = AdamState::new(AdamConfig {
        lr: cfg.lr,
        ..AdamConfig::default()
    });
    let mut shuffle_rng = DetRng::new(model.cfg.seed, Stream::Shuffle);
    let mut log = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..dataset.len()).collect();
        if cfg.shuffle {
            shuffle_rng.shuffle(&mut order);
        }
        let lr = cfg.lr * cfg.schedule.factor(epoch);

        let mut bce_sum = 0.0;
        let mut hvlgl_sum = 0.0;
        let mut hvlgl_batches = 0usize;
        let mut steps = 0usize;

        for (step, batch_idx) in order.chunks(cfg.batch_size.max(1)).enumerate() {
            let batch: Vec<(&FeatureSequence, Option<&LiftedText>)> = batch_idx
                .iter()
                .map(|&i| {
                    let video = &dataset.videos[i];
                    (video, lifted.get(&video.video_id))
                })
                .collect();

            // Each video runs on its own tape. Scaling the per-video BCE term
            // by 1/|batch| and the contrastive term by psi/#texted makes the
            // accumulated gradients equal the batch-mean objective while
            // keeping only one video's graph alive at a time.
            let n = batch.len() as f64;
            let n_text = batch
                .iter()
                .filter(|(_, t)| t.is_some() && model.cfg.variant == ModelVariant::Full)
                .count();
            let mut batch_bce = 0.0;
            let mut batch_hvlgl = 0.0;
            for (video, text) in &batch {
                let tape = Tape::new();
                let ps: ParamSet<Var> = ParamSet::bind_tape(&store, &tape);
                let one = [(*video, *text)];
                let loss = model.batch_objective(&ps, &one)?;
                let mut contribution = loss.bce_term / n;
                if let Some(term) = loss.hvlgl_term {
                    contribution =
                        contribution + term * (model.cfg.hvlgl.psi / n_text.max(1) as f64);
                    batch_hvlgl += loss.hvlgl / n_text.max(1) as f64;
                }
                contribution
                    .backward()
                    .map_err(|source| TrainError::NonFinite {
                        epoch,
                        step,
                        source,
                    })?;
                ps.accumulate_grads(&mut store, 1.0);
                batch_bce += loss.bce / n;
            }
            adam_step(&mut store, &mut adam, lr);

            bce_sum += batch_bce;
            if n_text > 0 {
                hvlgl_sum += batch_hvlgl;
                hvlgl_batches += 1;
            }
            steps += 1;
        }

        let bce = bce_sum / steps.max(1) as f64;
        let hvlgl = if hvlgl_batches > 0 {
            hvlgl_sum / hvlgl_batches as f64
        } else {
            0.0
        };
        let total = bce + model.cfg.hvlgl.psi * hvlgl;
        let (ap, auc) = if dataset.has_frame_labels() {
            let report = evaluate(model, &store, dataset)?;
            (report.ap, report.auc)
        } else {
            (f64::NAN, f64::NAN)
        };
        log.push(EpochLog {
            epoch,
            bce,
            hvlgl,
            total,
            ap,
            auc,
        });
    }

    Ok(TrainOutcome { store, log })
}

/// Frame-level evaluation report.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub ap: f64,
    pub auc: f64,
    /// Per-video snippet scores, in dataset order.
    pub per_video: Vec<(String, Vec<f64>)>,
}

#[derive(Debug, Clone)]
pub enum EvalError {
    Model(ModelError),
    MissingLabels { video_id: String },
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::Model(e) => write!(f, "{e}"),
            EvalError::MissingLabels { video_id } => {
                write!(f, "video `{video_id}` has no frame labels")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for EvalError {}

impl From<EvalError> for TrainError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Model(m) => TrainError::Model(m),
            EvalError::MissingLabels { video_id } => {
                TrainError::Data(DataError::FrameLabelLength {
                    video_id,
                    expected: 0,
                    got: 0,
                })
            }
        }
    }
}

/// Score every video, broadcast snippet scores to their 16-frame windows and
/// pool all frames across videos for AP/AUC. Requires frame labels.
pub fn evaluate(
    model: &Model,
    store: &ParameterStore,
    dataset: &Dataset,
) -> Result<EvalReport, EvalError> {
    let ps = ParamSet::<f64>::bind(store);
    let mut frame_scores = Vec::new();
    let mut frame_labels = Vec::new();
    let mut per_video = Vec::with_capacity(dataset.len());
    for video in &dataset.videos {
        let labels = video
            .frame_labels
            .as_ref()
            .ok_or_else(|| EvalError::MissingLabels {
                video_id: video.video_id.clone(),
            })?;
        let fwd = model.forward(&ps, video).map_err(EvalError::Model)?;
        frame_scores.extend(broadcast_to_frames(&fwd.scores));
        frame_labels.extend_from_slice(labels);
        per_video.push((video.video_id.clone(), fwd.scores));
    }
    Ok(EvalReport {
        ap: average_precision(&frame_scores, &frame_labels),
        auc: roc_auc(&frame_scores, &frame_labels),
        per_video,
    })
}

/// Score every video without requiring labels (per-frame export).
pub fn score_videos(
    model: &Model,
    store: &ParameterStore,
    dataset: &Dataset,
) -> Result<Vec<(String, Vec<f64>)>, ModelError> {
    let ps = ParamSet::<f64>::bind(store);
    dataset
        .videos
        .iter()
        .map(|video| Ok((video.video_id.clone(), model.forward(&ps, video)?.scores)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DataDims, ModelConfig};
    use crate::synth::{generate_synthetic, SyntheticSpec};

    fn smoke_setup() -> (Model, Dataset, TextBank) {
        let out = generate_synthetic(&SyntheticSpec {
            num_videos: 6,
            t_min: 8,
            t_max: 16,
            visual_dim: 6,
            audio_dim: 4,
            ..SyntheticSpec::default()
        })
        .unwrap();
        let cfg = ModelConfig {
            hidden_dim: 3,
            layers: 1,
            proj_visual_dim: 4,
            proj_audio_dim: 3,
            cross_attention_dim: 3,
            dsi: crate::dsi::DsiConfig {
                head_dim: 3,
                ..Default::default()
            },
            ..ModelConfig::default()
        };
        let dims = DataDims::of(&out.dataset, Some(&out.bank));
        (Model::new(cfg, dims).unwrap(), out.dataset, out.bank)
    }

    #[test]
    fn identical_seeds_reproduce_identical_logs() {
        let (model, dataset, bank) = smoke_setup();
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 3,
            ..TrainConfig::default()
        };
        let a = train(&model, &dataset, Some(&bank), &cfg).unwrap();
        let b = train(&model, &dataset, Some(&bank), &cfg).unwrap();
        assert_eq!(a.log, b.log);
        for ((na, ea), (nb, eb)) in a.store.iter().zip(b.store.iter()) {
            assert_eq!(na, nb);
            assert_eq!(ea.value, eb.value);
        }
    }

    #[test]
    fn loss_curve_is_finite() {
        let (model, dataset, bank) = smoke_setup();
        let cfg = TrainConfig {
            epochs: 4,
            batch_size: 2,
            ..TrainConfig::default()
        };
        let out = train(&model, &dataset, Some(&bank), &cfg).unwrap();
        assert_eq!(out.log.len(), 4);
        for e in &out.log {
            assert!(e.bce.is_finite() && e.total.is_finite());
            assert!(e.ap.is_finite() && e.auc.is_finite());
        }
    }

    #[test]
    fn overfit_smoke_two_separable_videos() {
        // psi = 0, two trivially separable videos: BCE collapses quickly.
        let out = generate_synthetic(&SyntheticSpec {
            num_videos: 2,
            t_min: 8,
            t_max: 8,
            visual_dim: 6,
            audio_dim: 0,
            margin: 4.0,
            ambiguity_fraction: 0.0,
            feature_noise: 0.05,
            ..SyntheticSpec::default()
        })
        .unwrap();
        let mut cfg = ModelConfig {
            hidden_dim: 3,
            layers: 1,
            proj_visual_dim: 4,
            proj_audio_dim: 1,
            cross_attention_dim: 2,
            dsi: crate::dsi::DsiConfig {
                head_dim: 2,
                ..Default::default()
            },
            ..ModelConfig::default()
        };
        cfg.hvlgl.psi = 0.0;
        let dims = DataDims {
            text: 0,
            ..DataDims::of(&out.dataset, None)
        };
        let model = Model::new(cfg, dims).unwrap();
        // 200 optimizer steps: batch of 2 -> 1 step per epoch.
        let tcfg = TrainConfig {
            epochs: 200,
            batch_size: 2,
            lr: 5e-2,
            schedule: LrSchedule::Constant,
            shuffle: false,
        };
        let outcome = train(&model, &out.dataset, None, &tcfg).unwrap();
        let last = outcome.log.last().unwrap();
        assert!(last.bce < 0.05, "final bce {}", last.bce);
    }

    #[test]
    fn per_video_accumulation_matches_single_tape_batch_gradient() {
        let (model, dataset, bank) = smoke_setup();
        let lifted = model.lift_bank(&bank);
        let store = model.init_store();
        let batch: Vec<(&FeatureSequence, Option<&LiftedText>)> = dataset
            .videos
            .iter()
            .map(|v| (v, lifted.get(&v.video_id)))
            .collect();

        // Route A: whole batch on one tape.
        let mut store_a = store.clone();
        {
            let tape = Tape::new();
            let ps = ParamSet::bind_tape(&store_a, &tape);
            let loss = model.batch_objective(&ps, &batch).unwrap();
            loss.total.backward().unwrap();
            ps.accumulate_grads(&mut store_a, 1.0);
        }

        // Route B: per-video tapes with the training-loop weights.
        let mut store_b = store.clone();
        let n = batch.len() as f64;
        let n_text = batch.iter().filter(|(_, t)| t.is_some()).count() as f64;
        for (video, text) in &batch {
            let tape = Tape::new();
            let ps = ParamSet::bind_tape(&store_b, &tape);
            let loss = model.batch_objective(&ps, &[(*video, *text)]).unwrap();
            let mut c = loss.bce_term / n;
            if let Some(term) = loss.hvlgl_term {
                c = c + term * (model.cfg.hvlgl.psi / n_text);
            }
            c.backward().unwrap();
            ps.accumulate_grads(&mut store_b, 1.0);
        }

        for ((name_a, ea), (_, eb)) in store_a.iter().zip(store_b.iter()) {
            for (ga, gb) in ea.grad.iter().zip(&eb.grad) {
                // Different summation order: identical up to rounding noise.
                let scale = ga.abs().max(gb.abs()).max(1e-12);
                let diff = (ga - gb).abs();
                assert!(
                    diff < 1e-14 || diff / scale < 1e-9,
                    "gradient mismatch on {name_a}: {ga} vs {gb}"
                );
            }
        }
    }

    #[test]
    fn evaluation_invariant_to_video_ordering() {
        let (model, dataset, _) = smoke_setup();
        let store = model.init_store();
        let a = evaluate(&model, &store, &dataset).unwrap();

        let mut reversed = dataset.clone();
        reversed.videos.reverse();
        let b = evaluate(&model, &store, &reversed).unwrap();
        assert_eq!(a.ap, b.ap);
        assert_eq!(a.auc, b.auc);
    }

    #[test]
    fn missing_labels_error_is_structured() {
        let (model, mut dataset, _) = smoke_setup();
        dataset.videos[0].frame_labels = None;
        let store = model.init_store();
        assert!(matches!(
            evaluate(&model, &store, &dataset),
            Err(EvalError::MissingLabels { .. })
        ));
    }
}
