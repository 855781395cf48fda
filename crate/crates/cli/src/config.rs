//! Run configuration: one TOML file, overridable by command-line flags.
//!
//! Relative paths are resolved against the config file's directory, so a
//! generated corpus can carry its own ready-to-run config. Data can be split
//! across several corpora (e.g. two BOP datasets); per-corpus
//! `object_id_offset` keeps object ids globally unique, and the corpus name
//! doubles as the dataset label in pose-error reports.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use graspcast_core::dataset::{EstimatorId, GripperId};
use graspcast_core::features::Variant;
use graspcast_core::mlp::TrainConfig;
use graspcast_core::synth::{default_error_models, ErrorModel};
use nalgebra::Vector3;
use serde::Deserialize;

use crate::error::{CmdError, CmdResult};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    out_dir: Option<PathBuf>,
    seed: Option<u64>,
    train_fraction: Option<f64>,
    principal: Option<String>,
    variant: Option<String>,
    gripper: Option<String>,
    workers: Option<usize>,
    grasps: Option<PathBuf>,
    #[serde(default)]
    corpora: BTreeMap<String, RawCorpus>,
    #[serde(default)]
    train: RawTrain,
    #[serde(default)]
    features: RawFeatures,
    #[serde(default)]
    synth: RawSynth,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCorpus {
    estimates: BTreeMap<String, PathBuf>,
    ground_truth: PathBuf,
    trials: PathBuf,
    models: Option<PathBuf>,
    #[serde(default)]
    object_id_offset: u32,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrain {
    epochs: Option<usize>,
    lr_start: Option<f64>,
    lr_end: Option<f64>,
    batch_size: Option<usize>,
    beta1: Option<f64>,
    beta2: Option<f64>,
    epsilon: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFeatures {
    translation_scale_mm: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSynth {
    n: Option<usize>,
    correlation: Option<f64>,
    #[serde(default)]
    estimators: Vec<RawEstimatorModel>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEstimatorModel {
    id: String,
    axial_sd_mm: f64,
    lateral_sd_mm: f64,
    rotation_sd_deg: f64,
    failure_scale: f64,
    tail_weight: f64,
    viewing_axis: Option<[f64; 3]>,
}

/// One corpus worth of input paths, fully resolved.
#[derive(Debug, Clone)]
pub struct CorpusPaths {
    pub name: String,
    pub estimates: BTreeMap<EstimatorId, PathBuf>,
    pub ground_truth: PathBuf,
    pub trials: PathBuf,
    pub models: Option<PathBuf>,
    pub object_id_offset: u32,
}

/// Synthetic-generation settings.
#[derive(Debug, Clone)]
pub struct SynthSettings {
    pub n: usize,
    pub correlation: f64,
    pub models: BTreeMap<EstimatorId, ErrorModel>,
}

/// Fully resolved configuration (file plus flag overrides).
#[derive(Debug, Clone)]
pub struct Config {
    pub out_dir: PathBuf,
    pub seed: u64,
    pub train_fraction: f64,
    pub principal: Option<EstimatorId>,
    pub variant: Option<Variant>,
    /// `None` means every gripper present in the trials.
    pub gripper: Option<GripperId>,
    pub workers: usize,
    pub grasps: Option<PathBuf>,
    pub corpora: Vec<CorpusPaths>,
    pub train: TrainConfig,
    pub translation_scale_mm: f64,
    pub synth: SynthSettings,
}

/// Flag overrides shared by all subcommands.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct CommonArgs {
    /// Path to the run configuration TOML.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Principal estimator id, or "all".
    #[arg(long, global = true)]
    pub principal: Option<String>,
    /// Network variant: mlp, mlp-o, mlp-g, mlp-og.
    #[arg(long, global = true)]
    pub variant: Option<String>,
    /// Gripper id, or "all".
    #[arg(long, global = true)]
    pub gripper: Option<String>,
    /// Output directory; overrides the config file.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads for the training grid.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

fn resolve(base: &Path, path: PathBuf) -> PathBuf {
    if path.is_absolute() {
        path
    } else {
        base.join(path)
    }
}

impl Config {
    /// Loads the config file (when given) and applies flag overrides.
    pub fn load(args: &CommonArgs) -> CmdResult<Self> {
        let (raw, base) = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CmdError::usage_msg(format!("cannot read config {}: {e}", path.display()))
                })?;
                let raw: RawConfig = toml::from_str(&text).map_err(|e| {
                    CmdError::usage_msg(format!("config {}: {e}", path.display()))
                })?;
                let base = path
                    .parent()
                    .map(Path::to_path_buf)
                    .unwrap_or_else(|| PathBuf::from("."));
                (raw, base)
            }
            None => (RawConfig::default(), PathBuf::from(".")),
        };

        let mut corpora = Vec::new();
        for (name, raw_corpus) in raw.corpora {
            let mut estimates = BTreeMap::new();
            for (id, path) in raw_corpus.estimates {
                let id = EstimatorId::new(&id).map_err(CmdError::usage)?;
                estimates.insert(id, resolve(&base, path));
            }
            corpora.push(CorpusPaths {
                name,
                estimates,
                ground_truth: resolve(&base, raw_corpus.ground_truth),
                trials: resolve(&base, raw_corpus.trials),
                models: raw_corpus.models.map(|p| resolve(&base, p)),
                object_id_offset: raw_corpus.object_id_offset,
            });
        }

        let principal = match args.principal.as_deref().or(raw.principal.as_deref()) {
            None => None,
            Some("all") => None,
            Some(id) => Some(EstimatorId::new(id).map_err(CmdError::usage)?),
        };
        let variant = match args.variant.as_deref().or(raw.variant.as_deref()) {
            None => None,
            Some(text) => Some(
                Variant::parse(text)
                    .ok_or_else(|| CmdError::usage_msg(format!("unknown variant {text:?}")))?,
            ),
        };
        let gripper = match args.gripper.as_deref().or(raw.gripper.as_deref()) {
            None => None,
            Some("all") => None,
            Some(id) => Some(GripperId::new(id).map_err(CmdError::usage)?),
        };

        let defaults = TrainConfig::default();
        let train = TrainConfig {
            epochs: raw.train.epochs.unwrap_or(defaults.epochs),
            lr_start: raw.train.lr_start.unwrap_or(defaults.lr_start),
            lr_end: raw.train.lr_end.unwrap_or(defaults.lr_end),
            batch_size: raw.train.batch_size.unwrap_or(defaults.batch_size),
            beta1: raw.train.beta1.unwrap_or(defaults.beta1),
            beta2: raw.train.beta2.unwrap_or(defaults.beta2),
            epsilon: raw.train.epsilon.unwrap_or(defaults.epsilon),
            seed: 0, // per-run seeds are derived from the master seed
        };
        if !(train.lr_start > train.lr_end && train.lr_end > 0.0) {
            return Err(CmdError::usage_msg(format!(
                "learning rates must satisfy lr_start > lr_end > 0 (got {} and {})",
                train.lr_start, train.lr_end
            )));
        }
        if train.epochs == 0 {
            return Err(CmdError::usage_msg("train.epochs must be positive"));
        }

        let train_fraction = raw.train_fraction.unwrap_or(0.8);
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(CmdError::usage_msg(format!(
                "train_fraction must be in (0, 1), got {train_fraction}"
            )));
        }

        let synth_models = if raw.synth.estimators.is_empty() {
            default_error_models()
        } else {
            let mut models = BTreeMap::new();
            for raw_model in raw.synth.estimators {
                let id = EstimatorId::new(&raw_model.id).map_err(CmdError::usage)?;
                let axis = raw_model.viewing_axis.unwrap_or([0.0, 0.0, 1.0]);
                let model = ErrorModel {
                    viewing_axis: Vector3::new(axis[0], axis[1], axis[2]),
                    axial_sd_mm: raw_model.axial_sd_mm,
                    lateral_sd_mm: raw_model.lateral_sd_mm,
                    rotation_sd_deg: raw_model.rotation_sd_deg,
                    failure_scale: raw_model.failure_scale,
                    tail_weight: raw_model.tail_weight,
                };
                model.validate().map_err(CmdError::usage)?;
                models.insert(id, model);
            }
            models
        };

        Ok(Self {
            out_dir: args
                .out_dir
                .clone()
                .or_else(|| raw.out_dir.map(|p| resolve(&base, p)))
                .unwrap_or_else(|| PathBuf::from("runs/out")),
            seed: args.seed.or(raw.seed).unwrap_or(7),
            train_fraction,
            principal,
            variant,
            gripper,
            workers: args.workers.or(raw.workers).unwrap_or(1).max(1),
            grasps: raw.grasps.map(|p| resolve(&base, p)),
            corpora,
            train,
            translation_scale_mm: raw.features.translation_scale_mm.unwrap_or(10.0),
            synth: SynthSettings {
                n: raw.synth.n.unwrap_or(5000),
                correlation: raw.synth.correlation.unwrap_or(0.5),
                models: synth_models,
            },
        })
    }

    /// Commands that read a corpus need at least one, with consistent
    /// estimator sets and every referenced file present.
    pub fn require_corpora(&self) -> CmdResult<()> {
        if self.corpora.is_empty() {
            return Err(CmdError::usage_msg(
                "no [corpora.<name>] sections in the config; run `graspcast synth` first or point the config at your data",
            ));
        }
        let reference: Vec<&EstimatorId> = self.corpora[0].estimates.keys().collect();
        for corpus in &self.corpora {
            let ids: Vec<&EstimatorId> = corpus.estimates.keys().collect();
            if ids != reference {
                return Err(CmdError::usage_msg(format!(
                    "corpus {:?} defines estimators {:?}, but corpus {:?} defines {:?}; all corpora must share one estimator set",
                    corpus.name,
                    ids.iter().map(|i| i.as_str()).collect::<Vec<_>>(),
                    self.corpora[0].name,
                    reference.iter().map(|i| i.as_str()).collect::<Vec<_>>(),
                )));
            }
            for (id, path) in &corpus.estimates {
                if !path.is_file() {
                    return Err(CmdError::usage_msg(format!(
                        "estimates file for {id} not found: {}",
                        path.display()
                    )));
                }
            }
            if !corpus.ground_truth.is_dir() {
                return Err(CmdError::usage_msg(format!(
                    "ground-truth directory not found: {}",
                    corpus.ground_truth.display()
                )));
            }
            if !corpus.trials.is_file() {
                return Err(CmdError::usage_msg(format!(
                    "trials file not found: {}",
                    corpus.trials.display()
                )));
            }
            if let Some(models) = &corpus.models {
                if !models.is_dir() {
                    return Err(CmdError::usage_msg(format!(
                        "models directory not found: {}",
                        models.display()
                    )));
                }
            }
        }
        if let Some(grasps) = &self.grasps {
            if !grasps.is_file() {
                return Err(CmdError::usage_msg(format!(
                    "grasps config not found: {}",
                    grasps.display()
                )));
            }
        }
        Ok(())
    }

}
