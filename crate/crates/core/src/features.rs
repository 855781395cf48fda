//! Network inputs: signed PE−SE pose-component differences, concatenated
//! across Supporting Estimators, with optional one-hot object and gripper
//! blocks.
//!
//! Sign convention: every difference is Principal minus Supporting. Each
//! 6-vector is `[dx, dy, dz, da, db, dc]` with translation differences in
//! camera frame divided by `translation_scale_mm` (default 10, i.e.
//! centimeters) and Euler-angle differences in degrees, wrapped to
//! `(-180, 180]`. Euler angles are decomposed in camera frame. Supporting
//! blocks are ordered by estimator id; one-hot blocks follow as
//! `differences ‖ object ‖ gripper`.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::dataset::{EstimatorId, GripperId, JoinedSample, SampleKey};
use crate::pose::{euler_decompose, wrap_angle_deg, RigidTransform};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("sample principal {sample} does not match configured principal {configured}")]
    PrincipalMismatch {
        sample: EstimatorId,
        configured: EstimatorId,
    },
    #[error("sample is missing a pose for estimator {0}")]
    MissingPose(EstimatorId),
    #[error("object {0} is not in the one-hot index")]
    UnknownObject(u32),
    #[error("gripper {0} is not in the one-hot index")]
    UnknownGripper(GripperId),
    #[error("translation scale must be positive, got {0}")]
    BadScale(f64),
    #[error("io error writing {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// The four training configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Variant {
    /// Per-object, per-gripper network: differences only.
    Mlp,
    /// All objects jointly: differences plus a one-hot object block.
    MlpO,
    /// All grippers jointly: differences plus a one-hot gripper block.
    MlpG,
    /// All objects and grippers jointly: both one-hot blocks.
    MlpOg,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Mlp, Variant::MlpO, Variant::MlpG, Variant::MlpOg];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Mlp => "mlp",
            Variant::MlpO => "mlp-o",
            Variant::MlpG => "mlp-g",
            Variant::MlpOg => "mlp-og",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "mlp" => Some(Variant::Mlp),
            "mlp-o" => Some(Variant::MlpO),
            "mlp-g" => Some(Variant::MlpG),
            "mlp-og" => Some(Variant::MlpOg),
            _ => None,
        }
    }

    pub fn uses_object_block(self) -> bool {
        matches!(self, Variant::MlpO | Variant::MlpOg)
    }

    pub fn uses_gripper_block(self) -> bool {
        matches!(self, Variant::MlpG | Variant::MlpOg)
    }

    /// Whether the variant trains one network per object.
    pub fn per_object(self) -> bool {
        matches!(self, Variant::Mlp | Variant::MlpG)
    }

    /// Whether the variant trains across all grippers at once.
    pub fn spans_grippers(self) -> bool {
        matches!(self, Variant::MlpG | Variant::MlpOg)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How feature vectors are laid out for one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureConfig {
    pub variant: Variant,
    pub principal_id: EstimatorId,
    /// Supporting estimators, sorted by id; fixes the block order.
    pub supporting_order: Vec<EstimatorId>,
    /// One-hot index per object id (sorted ids), used by MLP-O / MLP-OG.
    pub object_index: BTreeMap<u32, usize>,
    /// One-hot index per gripper id (sorted ids), used by MLP-G / MLP-OG.
    pub gripper_index: BTreeMap<GripperId, usize>,
    /// Millimeters per feature unit for translation differences.
    pub translation_scale_mm: f64,
}

impl FeatureConfig {
    pub fn new(
        variant: Variant,
        principal_id: EstimatorId,
        estimator_ids: &[EstimatorId],
        object_ids: &[u32],
        gripper_ids: &[GripperId],
        translation_scale_mm: f64,
    ) -> Result<Self, FeatureError> {
        if !(translation_scale_mm > 0.0 && translation_scale_mm.is_finite()) {
            return Err(FeatureError::BadScale(translation_scale_mm));
        }
        let mut supporting_order: Vec<EstimatorId> = estimator_ids
            .iter()
            .filter(|id| **id != principal_id)
            .cloned()
            .collect();
        supporting_order.sort();
        supporting_order.dedup();
        let mut objects: Vec<u32> = object_ids.to_vec();
        objects.sort_unstable();
        objects.dedup();
        let object_index = objects.into_iter().enumerate().map(|(i, o)| (o, i)).collect();
        let mut grippers: Vec<GripperId> = gripper_ids.to_vec();
        grippers.sort();
        grippers.dedup();
        let gripper_index = grippers.into_iter().enumerate().map(|(i, g)| (g, i)).collect();
        Ok(Self {
            variant,
            principal_id,
            supporting_order,
            object_index,
            gripper_index,
            translation_scale_mm,
        })
    }

    /// `6(K-1)` plus the one-hot blocks the variant requires.
    pub fn input_dim(&self) -> usize {
        let mut dim = 6 * self.supporting_order.len();
        if self.variant.uses_object_block() {
            dim += self.object_index.len();
        }
        if self.variant.uses_gripper_block() {
            dim += self.gripper_index.len();
        }
        dim
    }
}

/// One network input row: feature vector, binary label, sample identity.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub key: SampleKey,
    pub features: Vec<f64>,
    pub label: bool,
}

/// Signed 6-D pose-component difference, Principal minus Supporting.
pub fn difference_vector(
    principal: &RigidTransform,
    supporting: &RigidTransform,
    translation_scale_mm: f64,
) -> [f64; 6] {
    let dt = principal.translation() - supporting.translation();
    let ep = euler_decompose(principal.rotation());
    let es = euler_decompose(supporting.rotation());
    [
        dt.x / translation_scale_mm,
        dt.y / translation_scale_mm,
        dt.z / translation_scale_mm,
        wrap_angle_deg(ep.angles[0] - es.angles[0]),
        wrap_angle_deg(ep.angles[1] - es.angles[1]),
        wrap_angle_deg(ep.angles[2] - es.angles[2]),
    ]
}

/// Assembles the feature vector for one joined sample.
pub fn build_sample(
    joined: &JoinedSample,
    cfg: &FeatureConfig,
) -> Result<TrainingSample, FeatureError> {
    if joined.principal_id != cfg.principal_id {
        return Err(FeatureError::PrincipalMismatch {
            sample: joined.principal_id.clone(),
            configured: cfg.principal_id.clone(),
        });
    }
    let principal_pose = joined
        .poses
        .get(&cfg.principal_id)
        .ok_or_else(|| FeatureError::MissingPose(cfg.principal_id.clone()))?;

    let mut features = Vec::with_capacity(cfg.input_dim());
    for supporting in &cfg.supporting_order {
        let pose = joined
            .poses
            .get(supporting)
            .ok_or_else(|| FeatureError::MissingPose(supporting.clone()))?;
        features.extend_from_slice(&difference_vector(
            principal_pose,
            pose,
            cfg.translation_scale_mm,
        ));
    }
    if cfg.variant.uses_object_block() {
        let idx = *cfg
            .object_index
            .get(&joined.object_id)
            .ok_or(FeatureError::UnknownObject(joined.object_id))?;
        let mut block = vec![0.0; cfg.object_index.len()];
        block[idx] = 1.0;
        features.extend_from_slice(&block);
    }
    if cfg.variant.uses_gripper_block() {
        let idx = *cfg
            .gripper_index
            .get(&joined.gripper_id)
            .ok_or_else(|| FeatureError::UnknownGripper(joined.gripper_id.clone()))?;
        let mut block = vec![0.0; cfg.gripper_index.len()];
        block[idx] = 1.0;
        features.extend_from_slice(&block);
    }
    debug_assert_eq!(features.len(), cfg.input_dim());
    Ok(TrainingSample {
        key: joined.key(),
        features,
        label: joined.label,
    })
}

/// Builds feature vectors for a whole corpus slice.
pub fn build_samples(
    joined: &[&JoinedSample],
    cfg: &FeatureConfig,
) -> Result<Vec<TrainingSample>, FeatureError> {
    joined.iter().map(|j| build_sample(j, cfg)).collect()
}

/// Dumps `key,feature...,label` rows for cross-implementation diffing.
pub fn write_feature_matrix(samples: &[TrainingSample], path: &Path) -> Result<(), FeatureError> {
    let mut out = String::from("key,features...,label\n");
    for sample in samples {
        out.push_str(&sample.key.to_string());
        for value in &sample.features {
            out.push(',');
            out.push_str(&value.to_string());
        }
        out.push(',');
        out.push_str(if sample.label { "1" } else { "0" });
        out.push('\n');
    }
    fs::write(path, out).map_err(|source| FeatureError::Io {
        path: path.to_path_buf(),
        source,
    })
}
