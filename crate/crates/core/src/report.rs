//! Evaluation aggregation and report rendering.
//!
//! Produces prediction-accuracy results per (method, principal, object,
//! gripper) with pooled per-gripper rollups, grasp success-rate tables,
//! per-estimator pose-error tables, and per-method improvement over the
//! baseline. Writers emit CSV for machines and aligned text for humans;
//! all orderings are sorted so identical inputs give byte-identical files.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::dataset::{EstimateRecord, EstimatorId, GripperId, GroundTruthRecord, TrialRecord};
use crate::features::Variant;
use crate::pose::{rotation_error, translation_error};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("predictions and labels have different lengths ({predictions} vs {labels})")]
    LengthMismatch { predictions: usize, labels: usize },
    #[error("empty prediction set")]
    Empty,
    #[error("no matching baseline cell for {method} principal {principal} gripper {gripper}")]
    MissingBaselineCell {
        method: Method,
        principal: EstimatorId,
        gripper: GripperId,
    },
    #[error("requested stratum is empty: {0}")]
    EmptyStratum(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Prediction methods compared in the reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    Baseline,
    Mlp(Variant),
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Baseline,
        Method::Mlp(Variant::Mlp),
        Method::Mlp(Variant::MlpO),
        Method::Mlp(Variant::MlpG),
        Method::Mlp(Variant::MlpOg),
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Baseline => "baseline",
            Method::Mlp(v) => v.as_str(),
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        if text == "baseline" {
            return Some(Method::Baseline);
        }
        Variant::parse(text).map(Method::Mlp)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Accuracy of one method on one stratum. `object_id = None` is the pooled
/// all-objects row.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub method: Method,
    pub principal_id: EstimatorId,
    pub object_id: Option<u32>,
    pub gripper_id: GripperId,
    pub correct: usize,
    pub sample_count: usize,
}

impl EvalResult {
    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.sample_count as f64
    }
}

/// Fraction of exact prediction/label matches.
pub fn accuracy(predictions: &[bool], labels: &[bool]) -> Result<f64, ReportError> {
    if predictions.len() != labels.len() {
        return Err(ReportError::LengthMismatch {
            predictions: predictions.len(),
            labels: labels.len(),
        });
    }
    if predictions.is_empty() {
        return Err(ReportError::Empty);
    }
    let correct = predictions
        .iter()
        .zip(labels)
        .filter(|(p, l)| p == l)
        .count();
    Ok(correct as f64 / predictions.len() as f64)
}

/// Builds per-object rows plus the pooled per-gripper row from per-sample
/// outcomes: `(object_id, predicted, label)` triples.
pub fn tally_results(
    method: Method,
    principal_id: &EstimatorId,
    gripper_id: &GripperId,
    outcomes: &[(u32, bool, bool)],
) -> Result<Vec<EvalResult>, ReportError> {
    if outcomes.is_empty() {
        return Err(ReportError::Empty);
    }
    let mut per_object: BTreeMap<u32, (usize, usize)> = BTreeMap::new();
    for (object_id, predicted, label) in outcomes {
        let entry = per_object.entry(*object_id).or_default();
        entry.0 += usize::from(predicted == label);
        entry.1 += 1;
    }
    let mut results = Vec::with_capacity(per_object.len() + 1);
    let mut pooled = (0usize, 0usize);
    for (object_id, (correct, total)) in &per_object {
        pooled.0 += correct;
        pooled.1 += total;
        results.push(EvalResult {
            method,
            principal_id: principal_id.clone(),
            object_id: Some(*object_id),
            gripper_id: gripper_id.clone(),
            correct: *correct,
            sample_count: *total,
        });
    }
    results.push(EvalResult {
        method,
        principal_id: principal_id.clone(),
        object_id: None,
        gripper_id: gripper_id.clone(),
        correct: pooled.0,
        sample_count: pooled.1,
    });
    Ok(results)
}

/// Per-(method, principal, gripper) cell accuracies in both flavors:
/// the unweighted mean of per-object accuracies (the headline) and the
/// pooled sample-weighted accuracy.
#[derive(Debug, Clone, PartialEq)]
pub struct CellAccuracy {
    pub method: Method,
    pub principal_id: EstimatorId,
    pub gripper_id: GripperId,
    pub object_mean: f64,
    pub pooled: f64,
    pub object_count: usize,
    pub sample_count: usize,
}

/// Collapses per-object rows into per-(method, principal, gripper) cells.
pub fn cell_accuracies(results: &[EvalResult]) -> Vec<CellAccuracy> {
    let mut cells: BTreeMap<(Method, EstimatorId, GripperId), (Vec<f64>, usize, usize)> =
        BTreeMap::new();
    for result in results {
        let key = (
            result.method,
            result.principal_id.clone(),
            result.gripper_id.clone(),
        );
        let entry = cells.entry(key).or_default();
        match result.object_id {
            Some(_) => entry.0.push(result.accuracy()),
            None => {
                entry.1 = result.correct;
                entry.2 = result.sample_count;
            }
        }
    }
    cells
        .into_iter()
        .map(|((method, principal_id, gripper_id), (accs, correct, total))| CellAccuracy {
            method,
            principal_id,
            gripper_id,
            object_mean: accs.iter().sum::<f64>() / accs.len() as f64,
            pooled: correct as f64 / total as f64,
            object_count: accs.len(),
            sample_count: total,
        })
        .collect()
}

/// Per-object grasp success rate for one (estimator, gripper).
#[derive(Debug, Clone, PartialEq)]
pub struct SuccessRate {
    pub estimator_id: EstimatorId,
    pub gripper_id: GripperId,
    pub object_id: u32,
    pub successes: usize,
    pub total: usize,
}

impl SuccessRate {
    pub fn rate(&self) -> f64 {
        self.successes as f64 / self.total as f64
    }
}

/// Success counts per (estimator, object, gripper). Combinations with no
/// trials simply do not appear, mirroring excluded pairs.
pub fn grasp_success_table(trials: &[TrialRecord]) -> Vec<SuccessRate> {
    let mut counts: BTreeMap<(EstimatorId, GripperId, u32), (usize, usize)> = BTreeMap::new();
    for trial in trials {
        let entry = counts
            .entry((
                trial.estimator_id.clone(),
                trial.gripper_id.clone(),
                trial.object_id,
            ))
            .or_default();
        entry.0 += usize::from(trial.success);
        entry.1 += 1;
    }
    counts
        .into_iter()
        .map(|((estimator_id, gripper_id, object_id), (successes, total))| SuccessRate {
            estimator_id,
            gripper_id,
            object_id,
            successes,
            total,
        })
        .collect()
}

/// Mean rotation/translation error of one estimator over one dataset group.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseErrorRow {
    pub estimator_id: EstimatorId,
    pub dataset: String,
    pub sample_count: usize,
    pub mean_rotation_deg: f64,
    pub mean_translation_mm: f64,
}

/// Per-(estimator, dataset) error means over the keys every estimator
/// covered and ground truth exists for. `dataset_of_object` maps object ids
/// to dataset labels; unmapped objects fall into `"all"`.
pub fn pose_error_table(
    estimates: &BTreeMap<EstimatorId, Vec<EstimateRecord>>,
    ground_truth: &[GroundTruthRecord],
    dataset_of_object: &BTreeMap<u32, String>,
) -> Vec<PoseErrorRow> {
    // Keys covered by every estimator.
    let mut coverage: BTreeMap<(u32, u32, u32), usize> = BTreeMap::new();
    for records in estimates.values() {
        for record in records {
            *coverage
                .entry((record.object_id, record.scene_id, record.image_id))
                .or_default() += 1;
        }
    }
    let estimator_count = estimates.len();
    let mut gt_poses: BTreeMap<(u32, u32, u32), &GroundTruthRecord> = BTreeMap::new();
    for record in ground_truth {
        gt_poses.insert((record.object_id, record.scene_id, record.image_id), record);
    }

    let mut accum: BTreeMap<(EstimatorId, String), (usize, f64, f64)> = BTreeMap::new();
    for (estimator_id, records) in estimates {
        for record in records {
            let key = (record.object_id, record.scene_id, record.image_id);
            if coverage.get(&key) != Some(&estimator_count) {
                continue;
            }
            let Some(gt) = gt_poses.get(&key) else {
                continue;
            };
            let dataset = dataset_of_object
                .get(&record.object_id)
                .cloned()
                .unwrap_or_else(|| "all".to_string());
            let entry = accum.entry((estimator_id.clone(), dataset)).or_default();
            entry.0 += 1;
            entry.1 += rotation_error(&record.pose, &gt.pose);
            entry.2 += translation_error(&record.pose, &gt.pose);
        }
    }
    accum
        .into_iter()
        .map(|((estimator_id, dataset), (count, rot_sum, trans_sum))| PoseErrorRow {
            estimator_id,
            dataset,
            sample_count: count,
            mean_rotation_deg: rot_sum / count as f64,
            mean_translation_mm: trans_sum / count as f64,
        })
        .collect()
}

/// Mean accuracy delta of one method over the baseline, in percentage
/// points, averaged over matched (principal, gripper) cells.
#[derive(Debug, Clone, PartialEq)]
pub struct ImprovementRow {
    pub method: Method,
    pub cell_count: usize,
    pub mean_delta_points: f64,
}

/// Per-method improvement over the baseline using the headline
/// (unweighted-object-mean) cell accuracies. Every method cell must have a
/// matching baseline cell.
pub fn improvement_summary(results: &[EvalResult]) -> Result<Vec<ImprovementRow>, ReportError> {
    let cells = cell_accuracies(results);
    let mut baseline: BTreeMap<(EstimatorId, GripperId), f64> = BTreeMap::new();
    for cell in &cells {
        if cell.method == Method::Baseline {
            baseline.insert(
                (cell.principal_id.clone(), cell.gripper_id.clone()),
                cell.object_mean,
            );
        }
    }
    let mut deltas: BTreeMap<Method, (usize, f64)> = BTreeMap::new();
    for cell in &cells {
        if cell.method == Method::Baseline {
            continue;
        }
        let Some(base) = baseline.get(&(cell.principal_id.clone(), cell.gripper_id.clone()))
        else {
            return Err(ReportError::MissingBaselineCell {
                method: cell.method,
                principal: cell.principal_id.clone(),
                gripper: cell.gripper_id.clone(),
            });
        };
        let entry = deltas.entry(cell.method).or_default();
        entry.0 += 1;
        entry.1 += (cell.object_mean - base) * 100.0;
    }
    Ok(deltas
        .into_iter()
        .map(|(method, (count, sum))| ImprovementRow {
            method,
            cell_count: count,
            mean_delta_points: sum / count as f64,
        })
        .collect())
}

fn write_text(path: &Path, text: &str) -> Result<(), ReportError> {
    fs::write(path, text).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// `method,principal_id,gripper_id,object_id,correct,sample_count,accuracy`
/// with `ALL` marking pooled rows.
pub fn write_eval_csv(results: &[EvalResult], path: &Path) -> Result<(), ReportError> {
    let mut sorted: Vec<&EvalResult> = results.iter().collect();
    sorted.sort_by(|a, b| {
        (
            a.method,
            &a.principal_id,
            &a.gripper_id,
            a.object_id.map_or(u64::MAX, u64::from),
        )
            .cmp(&(
                b.method,
                &b.principal_id,
                &b.gripper_id,
                b.object_id.map_or(u64::MAX, u64::from),
            ))
    });
    let mut out = String::from("method,principal_id,gripper_id,object_id,correct,sample_count,accuracy\n");
    for result in sorted {
        let object = result
            .object_id
            .map_or_else(|| "ALL".to_string(), |id| id.to_string());
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            result.method,
            result.principal_id,
            result.gripper_id,
            object,
            result.correct,
            result.sample_count,
            result.accuracy()
        ));
    }
    write_text(path, &out)
}

pub fn write_success_csv(rates: &[SuccessRate], path: &Path) -> Result<(), ReportError> {
    let mut out = String::from("estimator_id,gripper_id,object_id,successes,total,rate\n");
    for rate in rates {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            rate.estimator_id,
            rate.gripper_id,
            rate.object_id,
            rate.successes,
            rate.total,
            rate.rate()
        ));
    }
    write_text(path, &out)
}

pub fn write_pose_error_csv(rows: &[PoseErrorRow], path: &Path) -> Result<(), ReportError> {
    let mut out = String::from("estimator_id,dataset,samples,mean_rotation_deg,mean_translation_mm\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.estimator_id,
            row.dataset,
            row.sample_count,
            row.mean_rotation_deg,
            row.mean_translation_mm
        ));
    }
    write_text(path, &out)
}

pub fn write_improvement_csv(rows: &[ImprovementRow], path: &Path) -> Result<(), ReportError> {
    let mut out = String::from("method,cells,mean_delta_points\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            row.method, row.cell_count, row.mean_delta_points
        ));
    }
    write_text(path, &out)
}

/// Renders the aligned-text report: prediction-accuracy table (one row per
/// method, one column per principal × gripper plus the per-gripper average),
/// the improvement summary, grasp success rates, and pose errors.
pub fn render_tables(
    results: &[EvalResult],
    improvements: &[ImprovementRow],
    success_rates: &[SuccessRate],
    pose_errors: &[PoseErrorRow],
) -> String {
    let mut out = String::new();
    let cells = cell_accuracies(results);

    let mut principals: Vec<EstimatorId> = cells.iter().map(|c| c.principal_id.clone()).collect();
    principals.sort();
    principals.dedup();
    let mut grippers: Vec<GripperId> = cells.iter().map(|c| c.gripper_id.clone()).collect();
    grippers.sort();
    grippers.dedup();
    let mut methods: Vec<Method> = cells.iter().map(|c| c.method).collect();
    methods.sort();
    methods.dedup();

    let cell_of = |method: Method, pe: &EstimatorId, gr: &GripperId| {
        cells
            .iter()
            .find(|c| c.method == method && &c.principal_id == pe && &c.gripper_id == gr)
    };

    for (title, pick) in [
        (
            "Prediction accuracy (mean over per-object accuracies)",
            true,
        ),
        ("Prediction accuracy (pooled over samples)", false),
    ] {
        out.push_str(title);
        out.push('\n');
        out.push_str(&format!("{:<10}", "method"));
        for pe in &principals {
            for gr in &grippers {
                out.push_str(&format!(" {:>18}", format!("{pe}/{gr}")));
            }
        }
        for gr in &grippers {
            out.push_str(&format!(" {:>18}", format!("avg/{gr}")));
        }
        out.push('\n');
        for method in &methods {
            out.push_str(&format!("{:<10}", method.as_str()));
            for pe in &principals {
                for gr in &grippers {
                    match cell_of(*method, pe, gr) {
                        Some(cell) => {
                            let value = if pick { cell.object_mean } else { cell.pooled };
                            out.push_str(&format!(" {value:>18.3}"));
                        }
                        None => out.push_str(&format!(" {:>18}", "-")),
                    }
                }
            }
            for gr in &grippers {
                let values: Vec<f64> = principals
                    .iter()
                    .filter_map(|pe| cell_of(*method, pe, gr))
                    .map(|c| if pick { c.object_mean } else { c.pooled })
                    .collect();
                if values.is_empty() {
                    out.push_str(&format!(" {:>18}", "-"));
                } else {
                    let mean = values.iter().sum::<f64>() / values.len() as f64;
                    out.push_str(&format!(" {mean:>18.3}"));
                }
            }
            out.push('\n');
        }
        out.push('\n');
    }

    if !improvements.is_empty() {
        out.push_str("Improvement over baseline (percentage points, mean over PE x gripper cells)\n");
        for row in improvements {
            out.push_str(&format!(
                "{:<10} {:>+8.2} over {} cells\n",
                row.method.as_str(),
                row.mean_delta_points,
                row.cell_count
            ));
        }
        out.push('\n');
    }

    if !success_rates.is_empty() {
        out.push_str("Grasp success rates\n");
        out.push_str(&format!(
            "{:<12} {:<16} {:>9} {:>9} {:>9}\n",
            "estimator", "gripper", "object", "trials", "rate"
        ));
        for rate in success_rates {
            out.push_str(&format!(
                "{:<12} {:<16} {:>9} {:>9} {:>9.3}\n",
                rate.estimator_id.to_string(),
                rate.gripper_id.to_string(),
                rate.object_id,
                rate.total,
                rate.rate()
            ));
        }
        out.push('\n');
    }

    if !pose_errors.is_empty() {
        out.push_str("Pose errors vs ground truth (joined keys)\n");
        out.push_str(&format!(
            "{:<12} {:<10} {:>9} {:>14} {:>14}\n",
            "estimator", "dataset", "samples", "rot err (deg)", "trans err (mm)"
        ));
        for row in pose_errors {
            out.push_str(&format!(
                "{:<12} {:<10} {:>9} {:>14.2} {:>14.1}\n",
                row.estimator_id.to_string(),
                row.dataset,
                row.sample_count,
                row.mean_rotation_deg,
                row.mean_translation_mm
            ));
        }
        out.push('\n');
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pose::RigidTransform;
    use nalgebra::Vector3;

    fn estimator(name: &str) -> EstimatorId {
        EstimatorId::new(name).unwrap()
    }

    fn gripper(name: &str) -> GripperId {
        GripperId::new(name).unwrap()
    }

    #[test]
    fn accuracy_trivial_cases() {
        assert_eq!(accuracy(&[true, false], &[true, false]).unwrap(), 1.0);
        assert_eq!(
            accuracy(&[true, true, true, false], &[true, true, false, false]).unwrap(),
            0.75
        );
        assert!(matches!(
            accuracy(&[true], &[true, false]),
            Err(ReportError::LengthMismatch { .. })
        ));
        assert!(matches!(accuracy(&[], &[]), Err(ReportError::Empty)));
    }

    #[test]
    fn tally_produces_pooled_row_consistent_with_objects() {
        let outcomes = vec![
            (1u32, true, true),
            (1, false, true),
            (2, true, true),
            (2, false, false),
            (2, true, false),
        ];
        let results = tally_results(
            Method::Baseline,
            &estimator("alpha"),
            &gripper("parallel"),
            &outcomes,
        )
        .unwrap();
        let pooled = results.iter().find(|r| r.object_id.is_none()).unwrap();
        // Aggregation consistency, checked in exact integer arithmetic:
        // pooled counts equal the sums of the per-object counts.
        let sum_correct: usize = results
            .iter()
            .filter(|r| r.object_id.is_some())
            .map(|r| r.correct)
            .sum();
        let sum_total: usize = results
            .iter()
            .filter(|r| r.object_id.is_some())
            .map(|r| r.sample_count)
            .sum();
        assert_eq!(pooled.correct, sum_correct);
        assert_eq!(pooled.sample_count, sum_total);
        // Sample-weighted mean of per-object accuracies equals the pooled
        // accuracy exactly, by cross-multiplication.
        let mut weighted_num = 0usize;
        for r in results.iter().filter(|r| r.object_id.is_some()) {
            weighted_num += r.correct;
        }
        assert_eq!(weighted_num * pooled.sample_count, pooled.correct * sum_total);
    }

    #[test]
    fn success_table_matches_hand_recount() {
        let mut trials = Vec::new();
        for (i, success) in [true, true, false, true].iter().enumerate() {
            trials.push(TrialRecord {
                estimator_id: estimator("alpha"),
                object_id: 1,
                scene_id: 1,
                image_id: i as u32,
                gripper_id: gripper("parallel"),
                success: *success,
            });
        }
        trials.push(TrialRecord {
            estimator_id: estimator("alpha"),
            object_id: 2,
            scene_id: 1,
            image_id: 9,
            gripper_id: gripper("underactuated"),
            success: false,
        });
        let table = grasp_success_table(&trials);
        assert_eq!(table.len(), 2);
        let first = &table[0];
        assert_eq!(first.object_id, 1);
        assert_eq!(first.successes, 3);
        assert_eq!(first.total, 4);
        assert_eq!(first.rate(), 0.75);
        // The (object 2, parallel) pair has no trials and is absent.
        assert!(!table
            .iter()
            .any(|r| r.object_id == 2 && r.gripper_id == gripper("parallel")));
    }

    #[test]
    fn all_success_trials_give_rate_one() {
        let trials: Vec<TrialRecord> = (0..5)
            .map(|i| TrialRecord {
                estimator_id: estimator("bravo"),
                object_id: 3,
                scene_id: 1,
                image_id: i,
                gripper_id: gripper("parallel"),
                success: true,
            })
            .collect();
        let table = grasp_success_table(&trials);
        assert!(table.iter().all(|r| r.rate() == 1.0));
    }

    #[test]
    fn pose_error_table_matches_hand_arithmetic() {
        let gt_pose = RigidTransform::identity();
        let est_a = RigidTransform::from_translation(Vector3::new(3.0, 4.0, 0.0)); // 5 mm
        let est_b = RigidTransform::from_translation(Vector3::new(0.0, 0.0, 7.0)); // 7 mm
        let mut estimates = BTreeMap::new();
        estimates.insert(
            estimator("alpha"),
            vec![
                EstimateRecord {
                    estimator_id: estimator("alpha"),
                    object_id: 1,
                    scene_id: 1,
                    image_id: 0,
                    pose: est_a,
                    detection_score: 1.0,
                },
                EstimateRecord {
                    estimator_id: estimator("alpha"),
                    object_id: 1,
                    scene_id: 1,
                    image_id: 1,
                    pose: est_b,
                    detection_score: 1.0,
                },
            ],
        );
        let ground_truth = vec![
            GroundTruthRecord {
                object_id: 1,
                scene_id: 1,
                image_id: 0,
                pose: gt_pose.clone(),
            },
            GroundTruthRecord {
                object_id: 1,
                scene_id: 1,
                image_id: 1,
                pose: gt_pose.clone(),
            },
        ];
        let rows = pose_error_table(&estimates, &ground_truth, &BTreeMap::new());
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].sample_count, 2);
        assert_eq!(rows[0].mean_rotation_deg, 0.0);
        assert!((rows[0].mean_translation_mm - 6.0).abs() < 1e-12);
    }

    #[test]
    fn pose_error_table_zero_for_perfect_estimates() {
        let pose = RigidTransform::from_translation(Vector3::new(5.0, 5.0, 500.0));
        let mut estimates = BTreeMap::new();
        estimates.insert(
            estimator("alpha"),
            vec![EstimateRecord {
                estimator_id: estimator("alpha"),
                object_id: 1,
                scene_id: 1,
                image_id: 0,
                pose: pose.clone(),
                detection_score: 1.0,
            }],
        );
        let ground_truth = vec![GroundTruthRecord {
            object_id: 1,
            scene_id: 1,
            image_id: 0,
            pose,
        }];
        let rows = pose_error_table(&estimates, &ground_truth, &BTreeMap::new());
        assert_eq!(rows[0].mean_rotation_deg, 0.0);
        assert_eq!(rows[0].mean_translation_mm, 0.0);
    }

    fn result(
        method: Method,
        pe: &str,
        gr: &str,
        object: Option<u32>,
        correct: usize,
        total: usize,
    ) -> EvalResult {
        EvalResult {
            method,
            principal_id: estimator(pe),
            object_id: object,
            gripper_id: gripper(gr),
            correct,
            sample_count: total,
        }
    }

    #[test]
    fn improvement_deltas_are_in_percentage_points() {
        let results = vec![
            result(Method::Baseline, "alpha", "parallel", Some(1), 80, 100),
            result(Method::Baseline, "alpha", "parallel", None, 80, 100),
            result(Method::Mlp(Variant::Mlp), "alpha", "parallel", Some(1), 85, 100),
            result(Method::Mlp(Variant::Mlp), "alpha", "parallel", None, 85, 100),
        ];
        let rows = improvement_summary(&results).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].method, Method::Mlp(Variant::Mlp));
        assert!((rows[0].mean_delta_points - 5.0).abs() < 1e-9);
        // Identical accuracies give a zero delta.
        let same = vec![
            result(Method::Baseline, "alpha", "parallel", Some(1), 80, 100),
            result(Method::Baseline, "alpha", "parallel", None, 80, 100),
            result(Method::Mlp(Variant::MlpO), "alpha", "parallel", Some(1), 80, 100),
            result(Method::Mlp(Variant::MlpO), "alpha", "parallel", None, 80, 100),
        ];
        let rows = improvement_summary(&same).unwrap();
        assert_eq!(rows[0].mean_delta_points, 0.0);
    }

    #[test]
    fn improvement_requires_matching_baseline_cell() {
        let results = vec![
            result(Method::Mlp(Variant::Mlp), "alpha", "parallel", Some(1), 85, 100),
            result(Method::Mlp(Variant::Mlp), "alpha", "parallel", None, 85, 100),
        ];
        assert!(matches!(
            improvement_summary(&results),
            Err(ReportError::MissingBaselineCell { .. })
        ));
    }

    #[test]
    fn report_files_are_deterministic() {
        let dir = tempfile::TempDir::new().unwrap();
        let results = vec![
            result(Method::Baseline, "alpha", "parallel", Some(1), 70, 100),
            result(Method::Baseline, "alpha", "parallel", Some(2), 90, 100),
            result(Method::Baseline, "alpha", "parallel", None, 160, 200),
            result(Method::Mlp(Variant::Mlp), "alpha", "parallel", Some(1), 80, 100),
            result(Method::Mlp(Variant::Mlp), "alpha", "parallel", Some(2), 92, 100),
            result(Method::Mlp(Variant::Mlp), "alpha", "parallel", None, 172, 200),
        ];
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        write_eval_csv(&results, &a).unwrap();
        let mut shuffled = results.clone();
        shuffled.reverse();
        write_eval_csv(&shuffled, &b).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

        let improvements = improvement_summary(&results).unwrap();
        let text = render_tables(&results, &improvements, &[], &[]);
        let text2 = render_tables(&shuffled, &improvements, &[], &[]);
        assert_eq!(text, text2);
        assert!(text.contains("baseline"));
        assert!(text.contains("mlp"));
    }
}
