//! Command-line surface: dataset synthesis, training, evaluation, gradient
//! checking, score export and the seeded ablation comparison.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
//! failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use bispace::config::{ConfigError, RunConfig, SynthConfig};
use bispace::csvio;
use bispace::exit_codes;
use bispace::manifest::{self, DatasetLayout, ManifestError, OracleInfo, VideoRecord};
use bispace::modelfile::{self, SavedTrainSettings};
use bispace::{bank, peye};
use bispace_core::data::{Dataset, TextBank};
use bispace_core::gradcheck::{gradcheck, DEFAULT_STEP, DEFAULT_TOLERANCE};
use bispace_core::model::{BatchObjective, DataDims, Model, ModelConfig, ModelError, ModelVariant};
use bispace_core::synth::{generate_synthetic, SyntheticSpec};
use bispace_core::train::{evaluate, score_videos, train, EvalError, TrainConfig, TrainError};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "bispace",
    about = "Dual-space (Euclidean + hyperbolic) graph learning for weakly supervised event scoring",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset with a text bank and reference score.
    Synth {
        /// Synthesis config (key = value); defaults used when absent.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Output directory for the dataset tree.
        #[arg(long)]
        out: PathBuf,
        /// Override the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train a model on a dataset manifest.
    Train {
        /// Run config (key = value); defaults used when absent.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Dataset manifest (JSON).
        #[arg(long)]
        data: PathBuf,
        /// Text bank; defaults to `bank.ptxb` next to the manifest.
        #[arg(long)]
        bank: Option<PathBuf>,
        /// Output directory for `model.json` and `train_log.csv`.
        #[arg(long)]
        out: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate a trained model on a labeled dataset.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Export per-frame scores as CSV.
    Score {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Verify analytic gradients of the full model against central
    /// differences on a small fixture.
    Gradcheck {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train the full model and its ablations over several seeds and compare
    /// frame-level AP on the ambiguous subset.
    Ablate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory for `ablation.csv`.
        #[arg(long)]
        out: PathBuf,
        /// Number of seeds to average over.
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        /// Epochs per run (defaults to the config's epoch count).
        #[arg(long)]
        epochs: Option<usize>,
    },
}

enum CliError {
    Config(String),
    Data(String),
    Numeric(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => exit_codes::CONFIG,
            CliError::Data(_) => exit_codes::DATA,
            CliError::Numeric(_) => exit_codes::NUMERIC,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Data(m) | CliError::Numeric(m) => m,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<ManifestError> for CliError {
    fn from(e: ManifestError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::InvalidConfig(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::NonFinite { .. } => CliError::Numeric(e.to_string()),
            TrainError::Model(m) => m.into(),
            TrainError::Data(d) => CliError::Data(d.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Model(m) => m.into(),
            EvalError::MissingLabels { .. } => CliError::Data(e.to_string()),
        }
    }
}

fn io_data<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Data(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth { spec, out, seed } => cmd_synth(spec.as_deref(), &out, seed),
        Command::Train {
            config,
            data,
            bank,
            out,
            seed,
        } => cmd_train(config.as_deref(), &data, bank.as_deref(), &out, seed),
        Command::Eval { model, data } => cmd_eval(&model, &data),
        Command::Score { model, data, out } => cmd_score(&model, &data, &out),
        Command::Gradcheck { config, seed } => cmd_gradcheck(config.as_deref(), seed),
        Command::Ablate {
            config,
            out,
            seeds,
            epochs,
        } => cmd_ablate(config.as_deref(), &out, seeds, epochs),
    }
}

fn load_run_config(path: Option<&Path>, seed: Option<u64>) -> Result<RunConfig, CliError> {
    let mut cfg = match path {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = seed {
        cfg.model.seed = seed;
    }
    Ok(cfg)
}

fn cmd_synth(spec: Option<&Path>, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let SynthConfig(mut spec) = match spec {
        Some(p) => SynthConfig::from_file(p)?,
        None => SynthConfig(SyntheticSpec::default()),
    };
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    let generated = generate_synthetic(&spec).map_err(|e| CliError::Config(e.to_string()))?;

    let layout = DatasetLayout::new(out);
    for dir in [
        layout.root.clone(),
        layout.features_dir(),
        layout.labels_dir(),
    ] {
        fs::create_dir_all(&dir).map_err(io_data)?;
    }
    if spec.audio_dim > 0 {
        fs::create_dir_all(layout.audio_dir()).map_err(io_data)?;
    }

    let mut records = Vec::with_capacity(generated.dataset.len());
    for video in &generated.dataset.videos {
        let id = &video.video_id;
        let feature_path = format!("features/{id}.peye");
        peye::write_file(&layout.root.join(&feature_path), &video.visual).map_err(io_data)?;
        let audio_path = match &video.audio {
            Some(audio) => {
                let p = format!("audio/{id}.peye");
                peye::write_file(&layout.root.join(&p), audio).map_err(io_data)?;
                Some(p)
            }
            None => None,
        };
        let frame_label_path = match &video.frame_labels {
            Some(labels) => {
                let p = format!("labels/{id}.peye");
                peye::write_file(&layout.root.join(&p), &peye::labels_to_rows(labels))
                    .map_err(io_data)?;
                Some(p)
            }
            None => None,
        };
        records.push(VideoRecord {
            video_id: id.clone(),
            feature_path,
            audio_path,
            video_label: video.video_label,
            frame_label_path,
        });
    }
    manifest::save(&layout.manifest(), &records)?;
    bank::write_file(&layout.bank(), &generated.bank).map_err(io_data)?;
    manifest::save_oracle(
        &layout.oracle(),
        &OracleInfo {
            nearest_centroid_ap: generated.oracle_ap,
            seed: spec.seed,
            ambiguous_ids: generated.ambiguous_ids.clone(),
        },
    )?;

    println!(
        "synthesized {} videos ({} ambiguous) into {}",
        generated.dataset.len(),
        generated.ambiguous_ids.len(),
        out.display()
    );
    println!("nearest-centroid oracle AP = {:.6}", generated.oracle_ap);
    Ok(())
}

fn load_bank_for(data: &Path, explicit: Option<&Path>) -> Result<Option<TextBank>, CliError> {
    let path = match explicit {
        Some(p) => Some(p.to_path_buf()),
        None => {
            let sibling = data
                .parent()
                .unwrap_or_else(|| Path::new("."))
                .join("bank.ptxb");
            sibling.exists().then_some(sibling)
        }
    };
    path.map(|p| bank::read_file(&p).map_err(io_data)).transpose()
}

fn cmd_train(
    config: Option<&Path>,
    data: &Path,
    bank_path: Option<&Path>,
    out: &Path,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let cfg = load_run_config(config, seed)?;
    let dataset = manifest::load_dataset(data)?;
    let bank = if cfg.model.variant == ModelVariant::Full {
        load_bank_for(data, bank_path)?
    } else {
        None
    };
    let dims = DataDims::of(&dataset, bank.as_ref());
    let model = Model::new(cfg.model.clone(), dims)?;

    let started = Instant::now();
    let outcome = train(&model, &dataset, bank.as_ref(), &cfg.train)?;

    fs::create_dir_all(out).map_err(io_data)?;
    modelfile::save(
        &out.join("model.json"),
        &cfg.model,
        &SavedTrainSettings::from(&cfg.train),
        dims,
        &outcome.store,
    )
    .map_err(io_data)?;
    csvio::write_train_log(&out.join("train_log.csv"), &outcome.log).map_err(io_data)?;

    for e in &outcome.log {
        println!(
            "epoch {:>3}: bce {:.6} hvlgl {:.6} total {:.6} AP {:.4} AUC {:.4}",
            e.epoch, e.bce, e.hvlgl, e.total, e.ap, e.auc
        );
    }
    if let Some(last) = outcome.log.last() {
        println!(
            "trained {} epochs in {:.1?}: final AP {:.6}, AUC {:.6}",
            outcome.log.len(),
            started.elapsed(),
            last.ap,
            last.auc
        );
    }
    Ok(())
}

fn load_model(path: &Path) -> Result<(Model, bispace_core::params::ParameterStore), CliError> {
    let loaded = modelfile::load(path).map_err(io_data)?;
    let model = Model::new(loaded.model, loaded.dims)?;
    Ok((model, loaded.store))
}

fn check_dims(model: &Model, dataset: &Dataset) -> Result<(), CliError> {
    if dataset.visual_dim() != model.dims.visual || dataset.audio_dim() != model.dims.audio {
        return Err(CliError::Data(format!(
            "dataset dimensions ({}, {}) do not match the model ({}, {})",
            dataset.visual_dim(),
            dataset.audio_dim(),
            model.dims.visual,
            model.dims.audio
        )));
    }
    Ok(())
}

fn cmd_eval(model_path: &Path, data: &Path) -> Result<(), CliError> {
    let (model, store) = load_model(model_path)?;
    let dataset = manifest::load_dataset(data)?;
    check_dims(&model, &dataset)?;
    let report = evaluate(&model, &store, &dataset)?;
    println!("AP = {:.6}", report.ap);
    println!("AUC = {:.6}", report.auc);
    Ok(())
}

fn cmd_score(model_path: &Path, data: &Path, out: &Path) -> Result<(), CliError> {
    let (model, store) = load_model(model_path)?;
    let dataset = manifest::load_dataset(data)?;
    check_dims(&model, &dataset)?;
    let scored = score_videos(&model, &store, &dataset)?;
    let rows: Vec<(String, Vec<f64>, Option<Vec<u8>>)> = scored
        .into_iter()
        .zip(&dataset.videos)
        .map(|((id, scores), video)| (id, scores, video.frame_labels.clone()))
        .collect();
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(io_data)?;
        }
    }
    csvio::write_scores(out, &rows).map_err(io_data)?;
    let frames: usize = rows.iter().map(|(_, s, _)| s.len() * 16).sum();
    println!("wrote {} frame scores to {}", frames, out.display());
    Ok(())
}

/// The gradcheck fixture: two 8-snippet videos with 6-dim visual features and
/// one positive plus two negative texts, against a narrow model. The user
/// config contributes the objective/geometry hyperparameters; the widths are
/// pinned so the fixture stays small and its margins well-conditioned.
fn gradcheck_model_config(base: &ModelConfig) -> ModelConfig {
    let mut cfg = base.clone();
    cfg.hidden_dim = 3;
    cfg.layers = 2;
    cfg.proj_visual_dim = 4;
    cfg.proj_audio_dim = 3;
    cfg.cross_attention_dim = 3;
    cfg.dsi.head_dim = 3;
    cfg.variant = ModelVariant::Full;
    cfg
}

fn cmd_gradcheck(config: Option<&Path>, seed: Option<u64>) -> Result<(), CliError> {
    let cfg = load_run_config(config, seed)?;
    let mut spec = SyntheticSpec::gradcheck_fixture();
    spec.seed = cfg.model.seed;
    let generated = generate_synthetic(&spec).map_err(|e| CliError::Config(e.to_string()))?;
    let model_cfg = gradcheck_model_config(&cfg.model);
    let dims = DataDims::of(&generated.dataset, Some(&generated.bank));
    let model = Model::new(model_cfg, dims)?;
    let store = model.init_store();
    let lifted = model.lift_bank(&generated.bank);
    let batch: Vec<_> = generated
        .dataset
        .videos
        .iter()
        .map(|v| (v, lifted.get(&v.video_id)))
        .collect();
    let objective = BatchObjective {
        model: &model,
        batch,
    };

    let started = Instant::now();
    let report = gradcheck(&store, &objective, DEFAULT_STEP, DEFAULT_TOLERANCE)
        .map_err(|e| CliError::Numeric(e.to_string()))?;
    println!("{report}");
    println!(
        "checked {} parameter elements in {:.1?}",
        report.elements_checked,
        started.elapsed()
    );
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::Numeric(format!(
            "gradient check failed: {report}"
        )))
    }
}

fn cmd_ablate(
    config: Option<&Path>,
    out: &Path,
    seeds: u64,
    epochs: Option<usize>,
) -> Result<(), CliError> {
    let base = load_run_config(config, None)?;
    let mut train_cfg = base.train.clone();
    if let Some(epochs) = epochs {
        train_cfg.epochs = epochs;
        if let bispace_core::adam::LrSchedule::Cosine { total_epochs } = &mut train_cfg.schedule {
            *total_epochs = epochs;
        }
    }

    let variants: [(&str, Box<dyn Fn(&ModelConfig) -> ModelConfig>); 3] = [
        ("full", Box::new(|c: &ModelConfig| c.clone())),
        (
            "no-hvlgl",
            Box::new(|c: &ModelConfig| {
                let mut c = c.clone();
                c.hvlgl.psi = 0.0;
                c
            }),
        ),
        (
            "euclid-only",
            Box::new(|c: &ModelConfig| {
                let mut c = c.clone();
                c.variant = ModelVariant::EuclidOnly;
                c
            }),
        ),
    ];

    let mut rows: Vec<(u64, Vec<f64>)> = Vec::new();
    let mut sums = vec![0.0; variants.len()];
    for s in 0..seeds {
        let seed = base.model.seed + s;
        let spec = SyntheticSpec {
            seed,
            num_videos: 24,
            t_min: 16,
            t_max: 32,
            ..SyntheticSpec::default()
        };
        let generated = generate_synthetic(&spec).map_err(|e| CliError::Config(e.to_string()))?;
        // The hard part of the benchmark: ambiguous normal videos plus every
        // violent video.
        let subset = Dataset::new(
            generated
                .dataset
                .videos
                .iter()
                .filter(|v| v.video_label == 1 || generated.ambiguous_ids.contains(&v.video_id))
                .cloned()
                .collect(),
        )
        .map_err(|e| CliError::Data(e.to_string()))?;

        let mut seed_row = Vec::with_capacity(variants.len());
        for (i, (name, make_cfg)) in variants.iter().enumerate() {
            let mut cfg = make_cfg(&base.model);
            cfg.seed = seed;
            let use_bank = cfg.variant == ModelVariant::Full && cfg.hvlgl.psi != 0.0;
            let bank = use_bank.then_some(&generated.bank);
            let dims = DataDims::of(&generated.dataset, bank);
            let model = Model::new(cfg, dims)?;
            let outcome = train(&model, &generated.dataset, bank, &train_cfg)?;
            let report = evaluate(&model, &outcome.store, &subset)?;
            println!("seed {seed} {name:>11}: ambiguous-subset AP {:.6}", report.ap);
            sums[i] += report.ap;
            seed_row.push(report.ap);
        }
        rows.push((seed, seed_row));
    }

    let means: Vec<f64> = sums.iter().map(|s| s / seeds as f64).collect();
    println!("----");
    for ((name, _), mean) in variants.iter().zip(&means) {
        println!("mean {name:>11}: ambiguous-subset AP {mean:.6}");
    }

    fs::create_dir_all(out).map_err(io_data)?;
    let mut body = String::from("seed,full,no_hvlgl,euclid_only\n");
    for (seed, row) in &rows {
        body.push_str(&format!("{seed},{},{},{}\n", row[0], row[1], row[2]));
    }
    body.push_str(&format!("mean,{},{},{}\n", means[0], means[1], means[2]));
    fs::write(out.join("ablation.csv"), body).map_err(io_data)?;
    println!("wrote {}", out.join("ablation.csv").display());
    Ok(())
}
