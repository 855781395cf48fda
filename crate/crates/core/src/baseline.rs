//! Learned-threshold baseline over ADD disagreement.
//!
//! The disagreement score of a sample is the mean ADD distance between the
//! Principal's pose and each Supporting Estimator's pose. A per-(principal,
//! object, gripper) threshold is learned on the training set by exhaustive
//! sweep; scores strictly below the threshold predict success.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::dataset::{EstimatorId, GripperId, JoinedSample};
use crate::pose::{add_metric, PointSet, PoseError};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("pose error: {0}")]
    Pose(#[from] PoseError),
    #[error("sample has no pose for principal {0}")]
    MissingPrincipal(EstimatorId),
    #[error("scores and labels are empty")]
    EmptyTrainingSet,
    #[error("scores and labels have different lengths ({scores} vs {labels})")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("threshold table {path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Learned decision threshold for one (principal, object, gripper) tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdModel {
    pub principal_id: EstimatorId,
    pub object_id: u32,
    pub gripper_id: GripperId,
    pub threshold_mm: f64,
    pub train_accuracy: f64,
}

/// Mean ADD between the principal's pose and each supporting pose.
pub fn disagreement_score(
    joined: &JoinedSample,
    model_points: &PointSet,
) -> Result<f64, BaselineError> {
    let principal_pose = joined
        .poses
        .get(&joined.principal_id)
        .ok_or_else(|| BaselineError::MissingPrincipal(joined.principal_id.clone()))?;
    let mut total = 0.0;
    let mut count = 0usize;
    for (estimator_id, pose) in &joined.poses {
        if estimator_id == &joined.principal_id {
            continue;
        }
        total += add_metric(principal_pose, pose, model_points)?;
        count += 1;
    }
    debug_assert!(count > 0, "joined sample must have supporting estimators");
    Ok(total / count as f64)
}

/// Accuracy of the rule `score < threshold ⇒ predict success` on the given
/// labeled scores.
pub fn threshold_accuracy(scores: &[f64], labels: &[bool], threshold: f64) -> f64 {
    let correct = scores
        .iter()
        .zip(labels)
        .filter(|(score, label)| (**score < threshold) == **label)
        .count();
    correct as f64 / scores.len() as f64
}

/// Exhaustive threshold sweep.
///
/// Candidates are 0 (predict all failure: scores are non-negative), the
/// midpoints of consecutive sorted unique scores, and max+1 (predict all
/// success); the two finite sentinels play the roles of -inf/+inf while
/// keeping the threshold finite. Ties break toward the smallest candidate.
pub fn optimal_threshold(scores: &[f64], labels: &[bool]) -> Result<(f64, f64), BaselineError> {
    if scores.is_empty() {
        return Err(BaselineError::EmptyTrainingSet);
    }
    if scores.len() != labels.len() {
        return Err(BaselineError::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    let mut unique: Vec<f64> = scores.to_vec();
    unique.sort_by(|a, b| a.partial_cmp(b).expect("scores are finite"));
    unique.dedup();

    let mut candidates = Vec::with_capacity(unique.len() + 1);
    candidates.push(0.0);
    for pair in unique.windows(2) {
        candidates.push(0.5 * (pair[0] + pair[1]));
    }
    candidates.push(unique.last().unwrap() + 1.0);

    let mut best_threshold = candidates[0];
    let mut best_accuracy = threshold_accuracy(scores, labels, best_threshold);
    for &candidate in &candidates[1..] {
        let accuracy = threshold_accuracy(scores, labels, candidate);
        if accuracy > best_accuracy {
            best_accuracy = accuracy;
            best_threshold = candidate;
        }
    }
    Ok((best_threshold, best_accuracy))
}

/// Learns the threshold for one (principal, object, gripper) tuple.
pub fn learn_threshold(
    principal_id: &EstimatorId,
    object_id: u32,
    gripper_id: &GripperId,
    scores: &[f64],
    labels: &[bool],
) -> Result<ThresholdModel, BaselineError> {
    let (threshold_mm, train_accuracy) = optimal_threshold(scores, labels)?;
    Ok(ThresholdModel {
        principal_id: principal_id.clone(),
        object_id,
        gripper_id: gripper_id.clone(),
        threshold_mm,
        train_accuracy,
    })
}

/// Strictly-below decision rule: `score < threshold` predicts success.
pub fn baseline_predict(score_mm: f64, model: &ThresholdModel) -> bool {
    score_mm < model.threshold_mm
}

/// Writes the threshold table as
/// `principal_id,object_id,gripper_id,threshold_mm,train_acc` CSV.
pub fn write_threshold_table(models: &[ThresholdModel], path: &Path) -> Result<(), BaselineError> {
    let mut out = String::from("principal_id,object_id,gripper_id,threshold_mm,train_acc\n");
    for model in models {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            model.principal_id,
            model.object_id,
            model.gripper_id,
            model.threshold_mm,
            model.train_accuracy
        ));
    }
    fs::write(path, out).map_err(|source| BaselineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_threshold_table(path: &Path) -> Result<Vec<ThresholdModel>, BaselineError> {
    let text = fs::read_to_string(path).map_err(|source| BaselineError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut models = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || (idx == 0 && trimmed.starts_with("principal_id")) {
            continue;
        }
        let parse_err = |message: String| BaselineError::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            message,
        };
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 5 {
            return Err(parse_err(format!("expected 5 fields, got {}", fields.len())));
        }
        models.push(ThresholdModel {
            principal_id: EstimatorId::new(fields[0]).map_err(|e| parse_err(e.to_string()))?,
            object_id: fields[1]
                .parse()
                .map_err(|_| parse_err(format!("bad object_id {:?}", fields[1])))?,
            gripper_id: GripperId::new(fields[2]).map_err(|e| parse_err(e.to_string()))?,
            threshold_mm: fields[3]
                .parse()
                .map_err(|_| parse_err(format!("bad threshold {:?}", fields[3])))?,
            train_accuracy: fields[4]
                .parse()
                .map_err(|_| parse_err(format!("bad train_acc {:?}", fields[4])))?,
        });
    }
    Ok(models)
}
