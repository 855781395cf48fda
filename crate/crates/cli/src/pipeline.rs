//! Corpus loading, training-run planning and execution, and evaluation.
//!
//! Artifact layout under `out_dir`:
//!
//! ```text
//! splits/split_<pe>_<gripper>.txt
//! models/<variant>/<pe>/<gripper-scope>/<object-scope>.{bin,meta.json,log.csv}
//! thresholds/<pe>_<gripper>.csv
//! cache/joined_<pe>_<gripper>.csv
//! reports/{eval_results,improvements,success_rates,pose_errors}.csv
//! reports/tables.txt
//! ```
//!
//! Every artifact is deterministic in (inputs, master seed): per-run seeds
//! are derived from the run name, orderings are sorted, and floats are
//! written in shortest round-trip form.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use graspcast_core::baseline::{
    baseline_predict, disagreement_score, learn_threshold, read_threshold_table,
    write_threshold_table, ThresholdModel,
};
use graspcast_core::dataset::{
    join_samples, load_estimates, load_ground_truth_dir, load_model_points, load_trials,
    partition, stratified_split, EstimateRecord, EstimatorId, GripperId, GroundTruthRecord,
    JoinedSample, SplitAssignment, TrialRecord,
};
use graspcast_core::features::{
    build_sample, write_feature_matrix, FeatureConfig, TrainingSample, Variant,
};
use graspcast_core::mlp::{train, MlpModel, TrainConfig};
use graspcast_core::pose::PointSet;
use graspcast_core::report::{tally_results, EvalResult, Method};
use graspcast_core::seeding::derive_seed;
use graspcast_core::synth::GraspTable;
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{io_data, CmdError, CmdResult};

/// Half extent of the fallback ADD point set when neither a mesh nor object
/// geometry is configured.
const DEFAULT_HALF_EXTENT_MM: f64 = 50.0;
/// Maximum model points kept for ADD.
const MAX_MODEL_POINTS: usize = 1000;

/// All input data merged across corpora, with object-id offsets applied.
pub struct LoadedCorpus {
    pub estimates: BTreeMap<EstimatorId, Vec<EstimateRecord>>,
    pub ground_truth: Vec<GroundTruthRecord>,
    pub trials: Vec<TrialRecord>,
    /// Corpus (dataset) label per object id.
    pub dataset_of_object: BTreeMap<u32, String>,
    pub model_points: BTreeMap<u32, PointSet>,
    pub warnings: Vec<String>,
}

impl LoadedCorpus {
    pub fn estimator_ids(&self) -> Vec<EstimatorId> {
        self.estimates.keys().cloned().collect()
    }

    pub fn gripper_ids(&self) -> Vec<GripperId> {
        let mut ids: Vec<GripperId> = self.trials.iter().map(|t| t.gripper_id.clone()).collect();
        ids.sort();
        ids.dedup();
        ids
    }
}

fn offset_record(record: &mut EstimateRecord, offset: u32) {
    record.object_id += offset;
}

pub fn load_corpus(cfg: &Config) -> CmdResult<LoadedCorpus> {
    cfg.require_corpora()?;
    let mut estimates: BTreeMap<EstimatorId, Vec<EstimateRecord>> = BTreeMap::new();
    let mut ground_truth = Vec::new();
    let mut trials = Vec::new();
    let mut dataset_of_object = BTreeMap::new();
    let mut model_points = BTreeMap::new();
    let mut warnings = Vec::new();

    let grasp_table = match &cfg.grasps {
        Some(path) => Some(GraspTable::load(path)?),
        None => None,
    };

    for corpus in &cfg.corpora {
        let offset = corpus.object_id_offset;
        for (estimator_id, path) in &corpus.estimates {
            let mut outcome = load_estimates(path, estimator_id)?;
            if outcome.records.is_empty() {
                return Err(CmdError::data_msg(format!(
                    "estimate file {} produced no records",
                    path.display()
                )));
            }
            warnings.append(&mut outcome.warnings);
            for record in &mut outcome.records {
                offset_record(record, offset);
                dataset_of_object.insert(record.object_id, corpus.name.clone());
            }
            estimates
                .entry(estimator_id.clone())
                .or_default()
                .append(&mut outcome.records);
        }
        for mut record in load_ground_truth_dir(&corpus.ground_truth)? {
            record.object_id += offset;
            dataset_of_object.insert(record.object_id, corpus.name.clone());
            ground_truth.push(record);
        }
        for mut record in load_trials(&corpus.trials)? {
            record.object_id += offset;
            trials.push(record);
        }

        // Model points per object: PLY mesh when available (named by the
        // pre-offset BOP id), otherwise the grasp table's box extents,
        // otherwise a default box.
        let object_ids: Vec<u32> = dataset_of_object
            .iter()
            .filter(|(_, name)| **name == corpus.name)
            .map(|(id, _)| *id)
            .collect();
        for object_id in object_ids {
            if model_points.contains_key(&object_id) {
                continue;
            }
            let raw_id = object_id - offset;
            if let Some(models_dir) = &corpus.models {
                let ply = models_dir.join(format!("obj_{raw_id:06}.ply"));
                if ply.is_file() {
                    let points = load_model_points(&ply)?.subsampled(MAX_MODEL_POINTS);
                    model_points.insert(object_id, points);
                    continue;
                }
            }
            let half_extents = grasp_table
                .as_ref()
                .and_then(|t| t.objects.get(&raw_id))
                .map(|o| o.half_extents_mm)
                .unwrap_or_else(|| {
                    Vector3::new(
                        DEFAULT_HALF_EXTENT_MM,
                        DEFAULT_HALF_EXTENT_MM,
                        DEFAULT_HALF_EXTENT_MM,
                    )
                });
            model_points.insert(object_id, PointSet::box_corners(half_extents));
        }
    }

    Ok(LoadedCorpus {
        estimates,
        ground_truth,
        trials,
        dataset_of_object,
        model_points,
        warnings,
    })
}

/// Joined samples for every (principal, gripper) pair in scope, built once
/// and shared read-only.
pub struct JoinedCorpora {
    samples: BTreeMap<(EstimatorId, GripperId), Vec<JoinedSample>>,
}

impl JoinedCorpora {
    pub fn build(
        corpus: &LoadedCorpus,
        principals: &[EstimatorId],
        grippers: &[GripperId],
    ) -> CmdResult<Self> {
        let mut samples = BTreeMap::new();
        for principal in principals {
            for gripper in grippers {
                let joined = join_samples(
                    &corpus.estimates,
                    &corpus.ground_truth,
                    &corpus.trials,
                    principal,
                    gripper,
                )?;
                samples.insert((principal.clone(), gripper.clone()), joined);
            }
        }
        Ok(Self { samples })
    }

    pub fn get(&self, principal: &EstimatorId, gripper: &GripperId) -> &[JoinedSample] {
        self.samples
            .get(&(principal.clone(), gripper.clone()))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }
}

pub fn split_path(out_dir: &Path, principal: &EstimatorId, gripper: &GripperId) -> PathBuf {
    out_dir
        .join("splits")
        .join(format!("split_{principal}_{gripper}.txt"))
}

/// Loads the split for (principal, gripper), creating and writing it when
/// absent. The split seed is derived from the master seed and the pair, so
/// recreation is byte-identical.
pub fn ensure_split(
    cfg: &Config,
    joined: &[JoinedSample],
    principal: &EstimatorId,
    gripper: &GripperId,
) -> CmdResult<(SplitAssignment, Vec<String>)> {
    let path = split_path(&cfg.out_dir, principal, gripper);
    if path.is_file() {
        return Ok((SplitAssignment::read_from(&path)?, Vec::new()));
    }
    if joined.is_empty() {
        return Err(CmdError::data_msg(format!(
            "no joined samples for principal {principal}, gripper {gripper}"
        )));
    }
    let seed = derive_seed(cfg.seed, &format!("split/{principal}/{gripper}"));
    let outcome = stratified_split(joined, cfg.train_fraction, seed)?;
    fs::create_dir_all(path.parent().unwrap()).map_err(io_data(&path))?;
    outcome.assignment.write_to(&path)?;
    Ok((outcome.assignment, outcome.warnings))
}

/// One network training run: a variant for one principal, a gripper scope,
/// and optionally a single object.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub variant: Variant,
    pub principal: EstimatorId,
    pub grippers: Vec<GripperId>,
    pub object: Option<u32>,
}

impl RunSpec {
    pub fn gripper_scope(&self) -> String {
        self.grippers
            .iter()
            .map(|g| g.as_str().to_string())
            .collect::<Vec<_>>()
            .join("+")
    }

    pub fn object_scope(&self) -> String {
        match self.object {
            Some(id) => format!("obj_{id:06}"),
            None => "all-objects".to_string(),
        }
    }

    pub fn name(&self) -> String {
        format!(
            "{}/{}/{}/{}",
            self.variant,
            self.principal,
            self.gripper_scope(),
            self.object_scope()
        )
    }

    pub fn dir(&self, out_dir: &Path) -> PathBuf {
        out_dir
            .join("models")
            .join(self.variant.as_str())
            .join(self.principal.as_str())
            .join(self.gripper_scope())
    }

    pub fn model_path(&self, out_dir: &Path) -> PathBuf {
        self.dir(out_dir).join(format!("{}.bin", self.object_scope()))
    }

    pub fn meta_path(&self, out_dir: &Path) -> PathBuf {
        self.dir(out_dir)
            .join(format!("{}.meta.json", self.object_scope()))
    }

    pub fn log_path(&self, out_dir: &Path) -> PathBuf {
        self.dir(out_dir)
            .join(format!("{}.log.csv", self.object_scope()))
    }
}

/// Expands one variant into its training runs for a principal.
///
/// Per-object variants (mlp, mlp-g) produce one run per object; gripper-
/// spanning variants (mlp-g, mlp-og) always train on every gripper in scope.
pub fn runs_for(
    variant: Variant,
    principal: &EstimatorId,
    grippers: &[GripperId],
    objects_by_gripper: &BTreeMap<GripperId, Vec<u32>>,
) -> Vec<RunSpec> {
    let mut runs = Vec::new();
    match variant {
        Variant::Mlp => {
            for gripper in grippers {
                for object in objects_by_gripper.get(gripper).into_iter().flatten() {
                    runs.push(RunSpec {
                        variant,
                        principal: principal.clone(),
                        grippers: vec![gripper.clone()],
                        object: Some(*object),
                    });
                }
            }
        }
        Variant::MlpO => {
            for gripper in grippers {
                runs.push(RunSpec {
                    variant,
                    principal: principal.clone(),
                    grippers: vec![gripper.clone()],
                    object: None,
                });
            }
        }
        Variant::MlpG => {
            let mut objects: Vec<u32> = objects_by_gripper
                .values()
                .flat_map(|v| v.iter().copied())
                .collect();
            objects.sort_unstable();
            objects.dedup();
            for object in objects {
                runs.push(RunSpec {
                    variant,
                    principal: principal.clone(),
                    grippers: grippers.to_vec(),
                    object: Some(object),
                });
            }
        }
        Variant::MlpOg => {
            runs.push(RunSpec {
                variant,
                principal: principal.clone(),
                grippers: grippers.to_vec(),
                object: None,
            });
        }
    }
    runs
}

/// Sidecar metadata for a trained model. The one-hot index maps stored here
/// are authoritative at evaluation time.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunMeta {
    pub variant: String,
    pub principal: String,
    pub grippers: Vec<String>,
    pub object: Option<u32>,
    pub input_dim: usize,
    pub seed: u64,
    pub train_size: usize,
    pub test_size: usize,
    pub checkpoint_epoch: usize,
    pub checkpoint_test_accuracy: f64,
    pub final_test_accuracy: f64,
    pub translation_scale_mm: f64,
    pub supporting_order: Vec<String>,
    pub object_index: BTreeMap<u32, usize>,
    pub gripper_index: BTreeMap<String, usize>,
}

impl RunMeta {
    pub fn feature_config(&self) -> CmdResult<FeatureConfig> {
        let variant = Variant::parse(&self.variant)
            .ok_or_else(|| CmdError::data_msg(format!("meta has unknown variant {:?}", self.variant)))?;
        let principal = EstimatorId::new(&self.principal).map_err(CmdError::data)?;
        let mut supporting = Vec::new();
        for id in &self.supporting_order {
            supporting.push(EstimatorId::new(id).map_err(CmdError::data)?);
        }
        let mut gripper_index = BTreeMap::new();
        for (id, idx) in &self.gripper_index {
            gripper_index.insert(GripperId::new(id).map_err(CmdError::data)?, *idx);
        }
        Ok(FeatureConfig {
            variant,
            principal_id: principal,
            supporting_order: supporting,
            object_index: self.object_index.clone(),
            gripper_index,
            translation_scale_mm: self.translation_scale_mm,
        })
    }
}

/// Distinct object ids of a joined corpus, sorted.
pub fn objects_of(samples: &[JoinedSample]) -> Vec<u32> {
    let mut ids: Vec<u32> = samples.iter().map(|s| s.object_id).collect();
    ids.sort_unstable();
    ids.dedup();
    ids
}

/// Train/test sample sets assembled for one run.
pub struct RunData {
    pub feature_config: FeatureConfig,
    pub train_set: Vec<TrainingSample>,
    pub test_set: Vec<TrainingSample>,
}

/// Builds the feature config and train/test sets for a run from the joined
/// corpora and their splits.
pub fn assemble_run_data(
    cfg: &Config,
    corpus: &LoadedCorpus,
    joined: &JoinedCorpora,
    splits: &BTreeMap<GripperId, SplitAssignment>,
    run: &RunSpec,
) -> CmdResult<RunData> {
    // One-hot domains come from the full scope the run trains across.
    let mut scope_objects = Vec::new();
    for gripper in &run.grippers {
        scope_objects.extend(objects_of(joined.get(&run.principal, gripper)));
    }
    scope_objects.sort_unstable();
    scope_objects.dedup();

    let feature_config = FeatureConfig::new(
        run.variant,
        run.principal.clone(),
        &corpus.estimator_ids(),
        &scope_objects,
        &run.grippers,
        cfg.translation_scale_mm,
    )?;

    let mut train_set = Vec::new();
    let mut test_set = Vec::new();
    for gripper in &run.grippers {
        let samples = joined.get(&run.principal, gripper);
        let assignment = splits.get(gripper).ok_or_else(|| {
            CmdError::internal(anyhow::anyhow!("no split for gripper {gripper}"))
        })?;
        let (train_refs, test_refs) = partition(samples, assignment);
        for sample in train_refs {
            if run.object.is_none_or(|o| o == sample.object_id) {
                train_set.push(build_sample(sample, &feature_config)?);
            }
        }
        for sample in test_refs {
            if run.object.is_none_or(|o| o == sample.object_id) {
                test_set.push(build_sample(sample, &feature_config)?);
            }
        }
    }
    Ok(RunData {
        feature_config,
        train_set,
        test_set,
    })
}

pub struct RunSummary {
    pub name: String,
    pub train_size: usize,
    pub test_size: usize,
    pub checkpoint_epoch: usize,
    pub checkpoint_test_accuracy: f64,
    pub final_test_accuracy: f64,
    pub reused: bool,
}

/// Trains one run and writes its artifacts. When the model file already
/// exists the run is reused as-is (regeneration is byte-identical anyway,
/// because all seeds derive from the run name).
pub fn execute_run(
    cfg: &Config,
    corpus: &LoadedCorpus,
    joined: &JoinedCorpora,
    splits: &BTreeMap<GripperId, SplitAssignment>,
    run: &RunSpec,
    dump_features: bool,
) -> CmdResult<RunSummary> {
    let model_path = run.model_path(&cfg.out_dir);
    let meta_path = run.meta_path(&cfg.out_dir);
    if model_path.is_file() && meta_path.is_file() {
        let meta = read_meta(&meta_path)?;
        return Ok(RunSummary {
            name: run.name(),
            train_size: meta.train_size,
            test_size: meta.test_size,
            checkpoint_epoch: meta.checkpoint_epoch,
            checkpoint_test_accuracy: meta.checkpoint_test_accuracy,
            final_test_accuracy: meta.final_test_accuracy,
            reused: true,
        });
    }

    let data = assemble_run_data(cfg, corpus, joined, splits, run)?;
    if data.train_set.is_empty() || data.test_set.is_empty() {
        return Err(CmdError::data_msg(format!(
            "run {} has an empty train or test set",
            run.name()
        )));
    }
    let seed = derive_seed(cfg.seed, &format!("train/{}", run.name()));
    let train_config = TrainConfig {
        seed,
        ..cfg.train.clone()
    };
    let outcome = train(&data.train_set, &data.test_set, &train_config)?;

    fs::create_dir_all(run.dir(&cfg.out_dir)).map_err(io_data(&model_path))?;
    outcome.checkpoint.parameters.save(&model_path)?;
    graspcast_core::mlp::write_training_log(&outcome.log, &run.log_path(&cfg.out_dir))?;
    let final_test_accuracy = outcome.log.last().map(|l| l.test_accuracy).unwrap_or(0.0);
    let meta = RunMeta {
        variant: run.variant.as_str().to_string(),
        principal: run.principal.as_str().to_string(),
        grippers: run.grippers.iter().map(|g| g.as_str().to_string()).collect(),
        object: run.object,
        input_dim: data.feature_config.input_dim(),
        seed,
        train_size: data.train_set.len(),
        test_size: data.test_set.len(),
        checkpoint_epoch: outcome.checkpoint.epoch,
        checkpoint_test_accuracy: outcome.checkpoint.test_accuracy,
        final_test_accuracy,
        translation_scale_mm: cfg.translation_scale_mm,
        supporting_order: data
            .feature_config
            .supporting_order
            .iter()
            .map(|e| e.as_str().to_string())
            .collect(),
        object_index: data.feature_config.object_index.clone(),
        gripper_index: data
            .feature_config
            .gripper_index
            .iter()
            .map(|(g, i)| (g.as_str().to_string(), *i))
            .collect(),
    };
    write_meta(&meta, &meta_path)?;
    if dump_features {
        let features_dir = cfg.out_dir.join("features");
        fs::create_dir_all(&features_dir).map_err(io_data(&features_dir))?;
        let dump_path = features_dir.join(format!(
            "{}_{}_{}_{}.csv",
            run.variant,
            run.principal,
            run.gripper_scope(),
            run.object_scope()
        ));
        let mut all = data.train_set.clone();
        all.extend(data.test_set.iter().cloned());
        all.sort_by(|a, b| a.key.cmp(&b.key));
        write_feature_matrix(&all, &dump_path)?;
    }

    Ok(RunSummary {
        name: run.name(),
        train_size: data.train_set.len(),
        test_size: data.test_set.len(),
        checkpoint_epoch: outcome.checkpoint.epoch,
        checkpoint_test_accuracy: outcome.checkpoint.test_accuracy,
        final_test_accuracy,
        reused: false,
    })
}

pub fn write_meta(meta: &RunMeta, path: &Path) -> CmdResult<()> {
    let text = serde_json::to_string_pretty(meta)
        .map_err(|e| CmdError::internal(anyhow::anyhow!("meta serialization: {e}")))?;
    fs::write(path, text).map_err(io_data(path))?;
    Ok(())
}

pub fn read_meta(path: &Path) -> CmdResult<RunMeta> {
    let text = fs::read_to_string(path).map_err(|e| {
        CmdError::data_msg(format!("missing run metadata {}: {e}", path.display()))
    })?;
    serde_json::from_str(&text)
        .map_err(|e| CmdError::data_msg(format!("run metadata {}: {e}", path.display())))
}

pub fn thresholds_path(out_dir: &Path, principal: &EstimatorId, gripper: &GripperId) -> PathBuf {
    out_dir
        .join("thresholds")
        .join(format!("{principal}_{gripper}.csv"))
}

/// Learns per-object baseline thresholds on the training split and writes
/// the threshold table.
pub fn learn_baseline(
    cfg: &Config,
    corpus: &LoadedCorpus,
    joined: &JoinedCorpora,
    splits: &BTreeMap<GripperId, SplitAssignment>,
    principal: &EstimatorId,
    gripper: &GripperId,
) -> CmdResult<Vec<ThresholdModel>> {
    let samples = joined.get(principal, gripper);
    let assignment = splits
        .get(gripper)
        .ok_or_else(|| CmdError::internal(anyhow::anyhow!("no split for gripper {gripper}")))?;
    let (train_refs, _) = partition(samples, assignment);
    let mut per_object: BTreeMap<u32, (Vec<f64>, Vec<bool>)> = BTreeMap::new();
    for sample in train_refs {
        let points = corpus.model_points.get(&sample.object_id).ok_or_else(|| {
            CmdError::internal(anyhow::anyhow!(
                "no model points for object {}",
                sample.object_id
            ))
        })?;
        let score = disagreement_score(sample, points)?;
        let entry = per_object.entry(sample.object_id).or_default();
        entry.0.push(score);
        entry.1.push(sample.label);
    }
    let mut models = Vec::new();
    for (object_id, (scores, labels)) in per_object {
        models.push(learn_threshold(principal, object_id, gripper, &scores, &labels)?);
    }
    let path = thresholds_path(&cfg.out_dir, principal, gripper);
    fs::create_dir_all(path.parent().unwrap()).map_err(io_data(&path))?;
    write_threshold_table(&models, &path)?;
    Ok(models)
}

/// Evaluates one method on the test split of (principal, gripper).
pub fn evaluate_cell(
    cfg: &Config,
    corpus: &LoadedCorpus,
    joined: &JoinedCorpora,
    splits: &BTreeMap<GripperId, SplitAssignment>,
    method: Method,
    principal: &EstimatorId,
    gripper: &GripperId,
) -> CmdResult<Vec<EvalResult>> {
    let samples = joined.get(principal, gripper);
    let assignment = splits
        .get(gripper)
        .ok_or_else(|| CmdError::internal(anyhow::anyhow!("no split for gripper {gripper}")))?;
    let (_, test_refs) = partition(samples, assignment);
    if test_refs.is_empty() {
        return Err(CmdError::data_msg(format!(
            "empty test stratum for principal {principal}, gripper {gripper}"
        )));
    }

    let mut outcomes: Vec<(u32, bool, bool)> = Vec::with_capacity(test_refs.len());
    match method {
        Method::Baseline => {
            let path = thresholds_path(&cfg.out_dir, principal, gripper);
            if !path.is_file() {
                return Err(CmdError::data_msg(format!(
                    "missing baseline threshold table {}; run `graspcast baseline` first",
                    path.display()
                )));
            }
            let table = read_threshold_table(&path)?;
            let by_object: BTreeMap<u32, &ThresholdModel> =
                table.iter().map(|m| (m.object_id, m)).collect();
            for sample in test_refs {
                let model = by_object.get(&sample.object_id).ok_or_else(|| {
                    CmdError::data_msg(format!(
                        "threshold table {} has no entry for object {}",
                        path.display(),
                        sample.object_id
                    ))
                })?;
                let points = corpus.model_points.get(&sample.object_id).ok_or_else(|| {
                    CmdError::internal(anyhow::anyhow!(
                        "no model points for object {}",
                        sample.object_id
                    ))
                })?;
                let score = disagreement_score(sample, points)?;
                outcomes.push((sample.object_id, baseline_predict(score, model), sample.label));
            }
        }
        Method::Mlp(variant) => {
            // Locate the runs covering this cell and cache their models.
            let objects: BTreeMap<GripperId, Vec<u32>> = [(gripper.clone(), objects_of(samples))]
                .into_iter()
                .collect();
            let run_grippers: Vec<GripperId> = if variant.spans_grippers() {
                corpus.gripper_ids()
            } else {
                vec![gripper.clone()]
            };
            let objects_for_runs: BTreeMap<GripperId, Vec<u32>> = if variant.spans_grippers() {
                run_grippers
                    .iter()
                    .map(|g| (g.clone(), objects_of(joined.get(principal, g))))
                    .collect()
            } else {
                objects
            };
            let runs = runs_for(variant, principal, &run_grippers, &objects_for_runs);
            let mut loaded: BTreeMap<Option<u32>, (MlpModel, FeatureConfig)> = BTreeMap::new();
            for run in &runs {
                let model_path = run.model_path(&cfg.out_dir);
                if !model_path.is_file() {
                    return Err(CmdError::data_msg(format!(
                        "missing model artifact {}; run `graspcast train --variant {}` first",
                        model_path.display(),
                        variant
                    )));
                }
                let meta = read_meta(&run.meta_path(&cfg.out_dir))?;
                let feature_config = meta.feature_config()?;
                let model = MlpModel::load(&model_path)?;
                if model.input_dim() != feature_config.input_dim() {
                    return Err(CmdError::internal(anyhow::anyhow!(
                        "model {} input dim {} does not match feature config {}",
                        model_path.display(),
                        model.input_dim(),
                        feature_config.input_dim()
                    )));
                }
                loaded.insert(run.object, (model, feature_config));
            }
            for sample in test_refs {
                let key = if variant.per_object() {
                    Some(sample.object_id)
                } else {
                    None
                };
                let (model, feature_config) = loaded.get(&key).ok_or_else(|| {
                    CmdError::data_msg(format!(
                        "no {variant} model covers object {} for principal {principal}, gripper {gripper}",
                        sample.object_id
                    ))
                })?;
                let features = build_sample(sample, feature_config)?;
                let predicted = model.predict(&features.features)?;
                outcomes.push((sample.object_id, predicted, sample.label));
            }
        }
    }
    Ok(tally_results(method, principal, gripper, &outcomes)?)
}

/// Writes the joined-key cache for one (principal, gripper).
pub fn write_join_cache(
    out_dir: &Path,
    principal: &EstimatorId,
    gripper: &GripperId,
    samples: &[JoinedSample],
) -> CmdResult<PathBuf> {
    let dir = out_dir.join("cache");
    fs::create_dir_all(&dir).map_err(io_data(&dir))?;
    let path = dir.join(format!("joined_{principal}_{gripper}.csv"));
    let mut text = String::from("object_id,scene_id,image_id,label\n");
    for sample in samples {
        text.push_str(&format!(
            "{},{},{},{}\n",
            sample.object_id,
            sample.scene_id,
            sample.image_id,
            u8::from(sample.label)
        ));
    }
    fs::write(&path, text).map_err(io_data(&path))?;
    Ok(path)
}

/// Builds train-set feature dumps and split partitions for reuse in command
/// summaries: sample counts and label rates per (principal, gripper).
pub fn corpus_summary(joined: &[JoinedSample]) -> (usize, usize) {
    let successes = joined.iter().filter(|s| s.label).count();
    (joined.len(), successes)
}

/// Scope resolution shared by commands: requested principal(s) and
/// gripper(s), defaulting to everything in the corpus.
pub fn resolve_scope(
    cfg: &Config,
    corpus: &LoadedCorpus,
) -> CmdResult<(Vec<EstimatorId>, Vec<GripperId>)> {
    let estimators = corpus.estimator_ids();
    let principals = match &cfg.principal {
        Some(id) => {
            if !estimators.contains(id) {
                return Err(CmdError::usage_msg(format!(
                    "principal {id} is not among the corpus estimators"
                )));
            }
            vec![id.clone()]
        }
        None => estimators,
    };
    let grippers_all = corpus.gripper_ids();
    if grippers_all.is_empty() {
        return Err(CmdError::data_msg("trials define no grippers"));
    }
    let grippers = match &cfg.gripper {
        Some(id) => {
            if !grippers_all.contains(id) {
                return Err(CmdError::usage_msg(format!(
                    "gripper {id} does not appear in the trials"
                )));
            }
            vec![id.clone()]
        }
        None => grippers_all,
    };
    Ok((principals, grippers))
}
