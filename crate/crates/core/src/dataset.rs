//! BOP-style corpus ingestion and the deterministic stratified split.
//!
//! File formats (all plain text, documented in the README):
//!
//! - estimates CSV: `scene_id,im_id,obj_id,score,R,t,time` with `R` nine
//!   space-separated row-major floats and `t` three floats in millimeters;
//! - ground truth: a directory tree `<root>/<scene_id>/scene_gt.json` in the
//!   BOP `scene_gt` schema (`cam_R_m2c`, `cam_t_m2c`, `obj_id` per image);
//! - trials CSV: `estimator_id,scene_id,im_id,obj_id,gripper_id,success`
//!   with `success` in `{0,1}`;
//! - split file: one `key assignment` line per sample, sorted
//!   lexicographically so reruns are byte-identical.
//!
//! Rotations in published result files carry rounding noise, so every loaded
//! rotation is projected to the nearest rotation matrix; records are loaded
//! silently up to a drift of 1e-4, with a warning up to 1e-2, and rejected
//! beyond that.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Vector3};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Deserialize;
use thiserror::Error;

use crate::pose::{orthonormality_drift, PointSet, PoseError, RigidTransform};

/// Rotation drift above which a loaded record is re-orthonormalized with a
/// warning rather than silently.
pub const ROTATION_WARN_DRIFT: f64 = 1e-4;
/// Rotation drift above which a loaded record is rejected.
pub const ROTATION_REJECT_DRIFT: f64 = 1e-2;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("invalid identifier {0:?}: only [A-Za-z0-9_-] is allowed")]
    BadIdentifier(String),
    #[error("duplicate trial for estimator {estimator}, gripper {gripper}, object {object_id}, scene {scene_id}, image {image_id}")]
    DuplicateTrial {
        estimator: EstimatorId,
        gripper: GripperId,
        object_id: u32,
        scene_id: u32,
        image_id: u32,
    },
    #[error("no ground truth for object {object_id}, scene {scene_id}, image {image_id} (corpus inconsistency)")]
    MissingGroundTruth {
        object_id: u32,
        scene_id: u32,
        image_id: u32,
    },
    #[error("train fraction {0} is outside (0, 1)")]
    InvalidFraction(f64),
    #[error("no samples to split")]
    EmptySamples,
    #[error("pose error: {0}")]
    Pose(#[from] PoseError),
}

fn valid_identifier(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// Name of one pose estimator, e.g. `"epos"`. Restricted to
/// `[A-Za-z0-9_-]` so ids embed safely in keys and file names.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EstimatorId(String);

impl EstimatorId {
    pub fn new(id: &str) -> Result<Self, DataError> {
        if valid_identifier(id) {
            Ok(Self(id.to_string()))
        } else {
            Err(DataError::BadIdentifier(id.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EstimatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Name of one gripper, e.g. `"parallel"` or `"underactuated"`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GripperId(String);

impl GripperId {
    pub fn new(id: &str) -> Result<Self, DataError> {
        if valid_identifier(id) {
            Ok(Self(id.to_string()))
        } else {
            Err(DataError::BadIdentifier(id.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for GripperId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One estimator's pose prediction for one (object, scene, image) key.
#[derive(Debug, Clone)]
pub struct EstimateRecord {
    pub estimator_id: EstimatorId,
    pub object_id: u32,
    pub scene_id: u32,
    pub image_id: u32,
    pub pose: RigidTransform,
    pub detection_score: f64,
}

#[derive(Debug, Clone)]
pub struct GroundTruthRecord {
    pub object_id: u32,
    pub scene_id: u32,
    pub image_id: u32,
    pub pose: RigidTransform,
}

/// Binary outcome of one grasping trial.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub estimator_id: EstimatorId,
    pub object_id: u32,
    pub scene_id: u32,
    pub image_id: u32,
    pub gripper_id: GripperId,
    pub success: bool,
}

/// One labeled sample: poses from all K estimators for a single
/// (object, scene, image) key plus the trial outcome for the Principal.
#[derive(Debug, Clone)]
pub struct JoinedSample {
    pub object_id: u32,
    pub scene_id: u32,
    pub image_id: u32,
    pub gripper_id: GripperId,
    pub principal_id: EstimatorId,
    pub poses: BTreeMap<EstimatorId, RigidTransform>,
    pub label: bool,
}

impl JoinedSample {
    pub fn key(&self) -> SampleKey {
        SampleKey {
            principal_id: self.principal_id.clone(),
            gripper_id: self.gripper_id.clone(),
            object_id: self.object_id,
            scene_id: self.scene_id,
            image_id: self.image_id,
        }
    }
}

/// Identity of a joined sample. Ids are zero-padded in the text form so
/// lexicographic file order equals the derived `Ord`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SampleKey {
    pub principal_id: EstimatorId,
    pub gripper_id: GripperId,
    pub object_id: u32,
    pub scene_id: u32,
    pub image_id: u32,
}

impl fmt::Display for SampleKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/{}/{:06}/{:06}/{:06}",
            self.principal_id, self.gripper_id, self.object_id, self.scene_id, self.image_id
        )
    }
}

impl SampleKey {
    pub fn parse(text: &str) -> Result<Self, DataError> {
        let parts: Vec<&str> = text.split('/').collect();
        let err = || DataError::BadIdentifier(text.to_string());
        if parts.len() != 5 {
            return Err(err());
        }
        Ok(Self {
            principal_id: EstimatorId::new(parts[0])?,
            gripper_id: GripperId::new(parts[1])?,
            object_id: parts[2].parse().map_err(|_| err())?,
            scene_id: parts[3].parse().map_err(|_| err())?,
            image_id: parts[4].parse().map_err(|_| err())?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

/// Map from sample key to train/test assignment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SplitAssignment {
    assignments: BTreeMap<SampleKey, Split>,
}

impl SplitAssignment {
    pub fn get(&self, key: &SampleKey) -> Option<Split> {
        self.assignments.get(key).copied()
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SampleKey, Split)> {
        self.assignments.iter().map(|(k, s)| (k, *s))
    }

    pub fn count(&self, split: Split) -> usize {
        self.assignments.values().filter(|s| **s == split).count()
    }

    /// Serializes to the sorted `key assignment` text form.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (key, split) in &self.assignments {
            out.push_str(&format!("{key} {}\n", split.as_str()));
        }
        out
    }

    pub fn write_to(&self, path: &Path) -> Result<(), DataError> {
        fs::write(path, self.to_text()).map_err(|source| DataError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn read_from(path: &Path) -> Result<Self, DataError> {
        let file = fs::File::open(path).map_err(|source| DataError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut assignments = BTreeMap::new();
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|source| DataError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| DataError::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                message,
            };
            let (key_text, split_text) = line
                .split_once(' ')
                .ok_or_else(|| parse_err("expected `key assignment`".to_string()))?;
            let key = SampleKey::parse(key_text)
                .map_err(|e| parse_err(format!("bad sample key: {e}")))?;
            let split = match split_text {
                "train" => Split::Train,
                "test" => Split::Test,
                other => return Err(parse_err(format!("unknown assignment {other:?}"))),
            };
            assignments.insert(key, split);
        }
        Ok(Self { assignments })
    }
}

/// Loaded records plus non-fatal per-record diagnostics.
#[derive(Debug)]
pub struct LoadOutcome<T> {
    pub records: Vec<T>,
    pub warnings: Vec<String>,
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> DataError + '_ {
    move |source| DataError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_floats(field: &str, expected: usize) -> Option<Vec<f64>> {
    let values: Vec<f64> = field
        .split_whitespace()
        .map(|v| v.parse::<f64>())
        .collect::<Result<_, _>>()
        .ok()?;
    (values.len() == expected).then_some(values)
}

fn rotation_from_row_major(values: &[f64]) -> Matrix3<f64> {
    Matrix3::new(
        values[0], values[1], values[2],
        values[3], values[4], values[5],
        values[6], values[7], values[8],
    )
}

/// Validates a raw rotation against the load policy. Rotations that already
/// satisfy the transform invariant pass through untouched (keeping clean
/// corpora bit-exact); drifted ones are projected onto SO(3), with a warning
/// above [`ROTATION_WARN_DRIFT`] and rejection above
/// [`ROTATION_REJECT_DRIFT`].
fn normalize_rotation(
    raw: Matrix3<f64>,
    context: &str,
) -> Result<(RigidTransformRotation, Option<String>), String> {
    if !raw.iter().all(|v| v.is_finite()) {
        return Err(format!("{context}: rotation has non-finite entries"));
    }
    let drift = orthonormality_drift(&raw);
    if drift > ROTATION_REJECT_DRIFT {
        return Err(format!(
            "{context}: rotation drift {drift:.3e} exceeds {ROTATION_REJECT_DRIFT:.0e}, record rejected"
        ));
    }
    if drift <= crate::pose::ROTATION_TOLERANCE {
        return Ok((raw, None));
    }
    let projected = crate::pose::nearest_rotation(&raw)
        .ok_or_else(|| format!("{context}: rotation could not be projected"))?;
    let warning = (drift > ROTATION_WARN_DRIFT).then(|| {
        format!("{context}: rotation drift {drift:.3e} above {ROTATION_WARN_DRIFT:.0e}, re-orthonormalized")
    });
    Ok((projected, warning))
}

type RigidTransformRotation = Matrix3<f64>;

/// Loads one estimator's BOP-style results CSV.
///
/// Duplicate (object, scene, image) keys keep the record with the highest
/// detection score (first occurrence on ties); records whose rotation drift
/// exceeds [`ROTATION_REJECT_DRIFT`] are dropped with a warning.
pub fn load_estimates(
    path: &Path,
    estimator_id: &EstimatorId,
) -> Result<LoadOutcome<EstimateRecord>, DataError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut warnings = Vec::new();
    let mut by_key: BTreeMap<(u32, u32, u32), EstimateRecord> = BTreeMap::new();

    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if idx == 0 && trimmed.starts_with("scene_id") {
            continue; // header
        }
        let parse_err = |message: String| DataError::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message,
        };
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() != 7 {
            return Err(parse_err(format!(
                "expected 7 comma-separated fields (scene_id,im_id,obj_id,score,R,t,time), got {}",
                fields.len()
            )));
        }
        let scene_id: u32 = fields[0]
            .parse()
            .map_err(|_| parse_err(format!("bad scene_id {:?}", fields[0])))?;
        let image_id: u32 = fields[1]
            .parse()
            .map_err(|_| parse_err(format!("bad im_id {:?}", fields[1])))?;
        let object_id: u32 = fields[2]
            .parse()
            .map_err(|_| parse_err(format!("bad obj_id {:?}", fields[2])))?;
        let score: f64 = fields[3]
            .parse()
            .map_err(|_| parse_err(format!("bad score {:?}", fields[3])))?;
        let r = parse_floats(fields[4], 9)
            .ok_or_else(|| parse_err("R must be 9 space-separated floats".to_string()))?;
        let t = parse_floats(fields[5], 3)
            .ok_or_else(|| parse_err("t must be 3 space-separated floats".to_string()))?;

        let context = format!("{}:{line_no}", path.display());
        let raw = rotation_from_row_major(&r);
        let (rotation, warning) = match normalize_rotation(raw, &context) {
            Ok(ok) => ok,
            Err(message) => {
                warnings.push(message);
                continue;
            }
        };
        if let Some(w) = warning {
            warnings.push(w);
        }
        let translation = Vector3::new(t[0], t[1], t[2]);
        let pose = RigidTransform::new(rotation, translation)
            .map_err(|e| parse_err(format!("invalid pose: {e}")))?;
        let record = EstimateRecord {
            estimator_id: estimator_id.clone(),
            object_id,
            scene_id,
            image_id,
            pose,
            detection_score: score,
        };
        let key = (object_id, scene_id, image_id);
        match by_key.get(&key) {
            Some(existing) if existing.detection_score >= score => {
                warnings.push(format!(
                    "{context}: duplicate detection for object {object_id} scene {scene_id} image {image_id}, kept higher-score record"
                ));
            }
            Some(_) => {
                warnings.push(format!(
                    "{context}: duplicate detection for object {object_id} scene {scene_id} image {image_id}, kept higher-score record"
                ));
                by_key.insert(key, record);
            }
            None => {
                by_key.insert(key, record);
            }
        }
    }
    Ok(LoadOutcome {
        records: by_key.into_values().collect(),
        warnings,
    })
}

#[derive(Deserialize)]
#[allow(non_snake_case)]
struct SceneGtEntry {
    cam_R_m2c: [f64; 9],
    cam_t_m2c: [f64; 3],
    obj_id: u32,
}

/// Loads a single BOP `scene_gt.json` for the given scene id.
pub fn load_scene_gt(path: &Path, scene_id: u32) -> Result<Vec<GroundTruthRecord>, DataError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let parsed: BTreeMap<String, Vec<SceneGtEntry>> =
        serde_json::from_str(&text).map_err(|e| DataError::Format {
            path: path.to_path_buf(),
            message: format!("scene_gt JSON: {e}"),
        })?;
    let mut records = Vec::new();
    for (image_key, entries) in parsed {
        let image_id: u32 = image_key.parse().map_err(|_| DataError::Format {
            path: path.to_path_buf(),
            message: format!("image key {image_key:?} is not an integer"),
        })?;
        for entry in entries {
            let context = format!("{} image {image_id} obj {}", path.display(), entry.obj_id);
            let raw = rotation_from_row_major(&entry.cam_R_m2c);
            let (rotation, _warning) = normalize_rotation(raw, &context).map_err(|message| {
                DataError::Format {
                    path: path.to_path_buf(),
                    message,
                }
            })?;
            let translation = Vector3::new(entry.cam_t_m2c[0], entry.cam_t_m2c[1], entry.cam_t_m2c[2]);
            let pose = RigidTransform::new(rotation, translation).map_err(|e| DataError::Format {
                path: path.to_path_buf(),
                message: format!("{context}: {e}"),
            })?;
            records.push(GroundTruthRecord {
                object_id: entry.obj_id,
                scene_id,
                image_id,
                pose,
            });
        }
    }
    Ok(records)
}

/// Loads every `<root>/<scene_id>/scene_gt.json` under a BOP dataset root.
pub fn load_ground_truth_dir(root: &Path) -> Result<Vec<GroundTruthRecord>, DataError> {
    let entries = fs::read_dir(root).map_err(io_err(root))?;
    let mut scene_dirs: Vec<(u32, PathBuf)> = Vec::new();
    for entry in entries {
        let entry = entry.map_err(io_err(root))?;
        let path = entry.path();
        if !path.is_dir() {
            continue;
        }
        let name = entry.file_name();
        if let Ok(scene_id) = name.to_string_lossy().parse::<u32>() {
            scene_dirs.push((scene_id, path));
        }
    }
    if scene_dirs.is_empty() {
        return Err(DataError::Format {
            path: root.to_path_buf(),
            message: "no numeric scene directories with scene_gt.json found".to_string(),
        });
    }
    scene_dirs.sort();
    let mut records = Vec::new();
    for (scene_id, dir) in scene_dirs {
        let gt_path = dir.join("scene_gt.json");
        records.extend(load_scene_gt(&gt_path, scene_id)?);
    }
    Ok(records)
}

/// Loads a trial-outcome CSV. Duplicate (estimate, gripper) keys are an
/// error: every trial must be uniquely identified.
pub fn load_trials(path: &Path) -> Result<Vec<TrialRecord>, DataError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut seen: BTreeMap<(String, u32, u32, u32, String), ()> = BTreeMap::new();
    let mut records = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if idx == 0 && trimmed.starts_with("estimator_id") {
            continue;
        }
        let parse_err = |message: String| DataError::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message,
        };
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() != 6 {
            return Err(parse_err(format!(
                "expected 6 fields (estimator_id,scene_id,im_id,obj_id,gripper_id,success), got {}",
                fields.len()
            )));
        }
        let estimator_id = EstimatorId::new(fields[0])
            .map_err(|e| parse_err(e.to_string()))?;
        let scene_id: u32 = fields[1]
            .parse()
            .map_err(|_| parse_err(format!("bad scene_id {:?}", fields[1])))?;
        let image_id: u32 = fields[2]
            .parse()
            .map_err(|_| parse_err(format!("bad im_id {:?}", fields[2])))?;
        let object_id: u32 = fields[3]
            .parse()
            .map_err(|_| parse_err(format!("bad obj_id {:?}", fields[3])))?;
        let gripper_id = GripperId::new(fields[4])
            .map_err(|e| parse_err(e.to_string()))?;
        let success = match fields[5] {
            "0" => false,
            "1" => true,
            other => return Err(parse_err(format!("success must be 0 or 1, got {other:?}"))),
        };
        let key = (
            estimator_id.as_str().to_string(),
            object_id,
            scene_id,
            image_id,
            gripper_id.as_str().to_string(),
        );
        if seen.insert(key, ()).is_some() {
            return Err(DataError::DuplicateTrial {
                estimator: estimator_id,
                gripper: gripper_id,
                object_id,
                scene_id,
                image_id,
            });
        }
        records.push(TrialRecord {
            estimator_id,
            object_id,
            scene_id,
            image_id,
            gripper_id,
            success,
        });
    }
    Ok(records)
}

/// Joins per-estimator corpora with trials for one (principal, gripper).
///
/// A key survives only when every estimator predicted it and a trial exists
/// for the principal with the requested gripper. Surviving keys must have
/// ground truth; anything else is a corpus inconsistency.
pub fn join_samples(
    estimates: &BTreeMap<EstimatorId, Vec<EstimateRecord>>,
    ground_truth: &[GroundTruthRecord],
    trials: &[TrialRecord],
    principal_id: &EstimatorId,
    gripper_id: &GripperId,
) -> Result<Vec<JoinedSample>, DataError> {
    let estimator_count = estimates.len();
    let mut poses_by_key: BTreeMap<(u32, u32, u32), BTreeMap<EstimatorId, RigidTransform>> =
        BTreeMap::new();
    for (estimator, records) in estimates {
        for record in records {
            poses_by_key
                .entry((record.object_id, record.scene_id, record.image_id))
                .or_default()
                .insert(estimator.clone(), record.pose.clone());
        }
    }
    let mut gt_keys: BTreeMap<(u32, u32, u32), ()> = BTreeMap::new();
    for record in ground_truth {
        gt_keys.insert((record.object_id, record.scene_id, record.image_id), ());
    }
    let mut labels: BTreeMap<(u32, u32, u32), bool> = BTreeMap::new();
    for trial in trials {
        if &trial.estimator_id == principal_id && &trial.gripper_id == gripper_id {
            labels.insert((trial.object_id, trial.scene_id, trial.image_id), trial.success);
        }
    }

    let mut samples = Vec::new();
    for ((object_id, scene_id, image_id), poses) in poses_by_key {
        if poses.len() < estimator_count {
            continue; // at least one estimator missed this key
        }
        let Some(&label) = labels.get(&(object_id, scene_id, image_id)) else {
            continue;
        };
        if !gt_keys.contains_key(&(object_id, scene_id, image_id)) {
            return Err(DataError::MissingGroundTruth {
                object_id,
                scene_id,
                image_id,
            });
        }
        samples.push(JoinedSample {
            object_id,
            scene_id,
            image_id,
            gripper_id: gripper_id.clone(),
            principal_id: principal_id.clone(),
            poses,
            label,
        });
    }
    Ok(samples)
}

/// Split result plus warnings about degenerate strata.
#[derive(Debug)]
pub struct SplitOutcome {
    pub assignment: SplitAssignment,
    pub warnings: Vec<String>,
}

/// Deterministic stratified split.
///
/// Strata are (object, gripper, label) groups; each is shuffled with a
/// ChaCha20 stream seeded from `seed` and split at `train_fraction` (rounded,
/// clamped so both sides stay non-empty for strata of at least 2 samples).
/// Strata with fewer than 2 samples go entirely to train, with a warning.
pub fn stratified_split(
    samples: &[JoinedSample],
    train_fraction: f64,
    seed: u64,
) -> Result<SplitOutcome, DataError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DataError::InvalidFraction(train_fraction));
    }
    if samples.is_empty() {
        return Err(DataError::EmptySamples);
    }
    let mut strata: BTreeMap<(u32, GripperId, bool), Vec<SampleKey>> = BTreeMap::new();
    for sample in samples {
        strata
            .entry((sample.object_id, sample.gripper_id.clone(), sample.label))
            .or_default()
            .push(sample.key());
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut assignments = BTreeMap::new();
    let mut warnings = Vec::new();
    for ((object_id, gripper_id, label), mut keys) in strata {
        keys.sort();
        keys.shuffle(&mut rng);
        let n = keys.len();
        let train_count = if n < 2 {
            warnings.push(format!(
                "stratum object {object_id} gripper {gripper_id} label {} has {n} sample(s); assigned to train",
                if label { 1 } else { 0 }
            ));
            n
        } else {
            (((n as f64) * train_fraction).round() as usize).clamp(1, n - 1)
        };
        for (idx, key) in keys.into_iter().enumerate() {
            let split = if idx < train_count {
                Split::Train
            } else {
                Split::Test
            };
            assignments.insert(key, split);
        }
    }
    Ok(SplitOutcome {
        assignment: SplitAssignment { assignments },
        warnings,
    })
}

/// Partitions joined samples by an existing assignment. Samples without an
/// assignment are dropped (they were not part of the split corpus).
pub fn partition<'a>(
    samples: &'a [JoinedSample],
    assignment: &SplitAssignment,
) -> (Vec<&'a JoinedSample>, Vec<&'a JoinedSample>) {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for sample in samples {
        match assignment.get(&sample.key()) {
            Some(Split::Train) => train.push(sample),
            Some(Split::Test) => test.push(sample),
            None => {}
        }
    }
    (train, test)
}

// ---------------------------------------------------------------------------
// Model points (PLY vertices with a deterministic-stride fallback path)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PlyFormat {
    Ascii,
    BinaryLittleEndian,
}

fn scalar_size(type_name: &str) -> Option<usize> {
    match type_name {
        "char" | "uchar" | "int8" | "uint8" => Some(1),
        "short" | "ushort" | "int16" | "uint16" => Some(2),
        "int" | "uint" | "int32" | "uint32" | "float" | "float32" => Some(4),
        "double" | "float64" => Some(8),
        _ => None,
    }
}

/// Reads the vertex positions of a PLY mesh (ASCII or binary little-endian).
///
/// Only the vertex element is consumed; faces and trailing elements are
/// ignored. Coordinates are taken as millimeters, matching BOP models.
pub fn load_model_points(path: &Path) -> Result<PointSet, DataError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let format_err = |message: String| DataError::Format {
        path: path.to_path_buf(),
        message,
    };

    // Parse the header as lines of ASCII up to "end_header".
    let mut offset = 0usize;
    let mut lines: Vec<String> = Vec::new();
    loop {
        let rest = &bytes[offset..];
        let end = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| format_err("unterminated PLY header".to_string()))?;
        let line = String::from_utf8_lossy(&rest[..end]).trim_end_matches('\r').to_string();
        offset += end + 1;
        if line.trim() == "end_header" {
            break;
        }
        lines.push(line);
        if lines.len() > 1000 {
            return Err(format_err("PLY header too large".to_string()));
        }
    }
    if lines.first().map(String::as_str) != Some("ply") {
        return Err(format_err("missing `ply` magic".to_string()));
    }

    let mut format = None;
    let mut vertex_count: Option<usize> = None;
    // (type size, is x/y/z index) per vertex property, in declared order.
    let mut properties: Vec<(usize, Option<usize>, String)> = Vec::new();
    let mut in_vertex_element = false;
    let mut seen_other_element_first = false;

    for line in &lines[1..] {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            ["comment", ..] | [] => {}
            ["format", "ascii", _] => format = Some(PlyFormat::Ascii),
            ["format", "binary_little_endian", _] => format = Some(PlyFormat::BinaryLittleEndian),
            ["format", other, _] => {
                return Err(format_err(format!("unsupported PLY format {other:?}")))
            }
            ["element", "vertex", count] => {
                if seen_other_element_first {
                    return Err(format_err(
                        "vertex element must come first in the PLY body".to_string(),
                    ));
                }
                vertex_count = Some(
                    count
                        .parse()
                        .map_err(|_| format_err(format!("bad vertex count {count:?}")))?,
                );
                in_vertex_element = true;
            }
            ["element", _name, _count] => {
                if vertex_count.is_none() {
                    seen_other_element_first = true;
                }
                in_vertex_element = false;
            }
            ["property", "list", ..] if in_vertex_element => {
                return Err(format_err(
                    "list properties on the vertex element are not supported".to_string(),
                ));
            }
            ["property", type_name, prop_name] if in_vertex_element => {
                let size = scalar_size(type_name)
                    .ok_or_else(|| format_err(format!("unknown property type {type_name:?}")))?;
                let axis = match *prop_name {
                    "x" => Some(0),
                    "y" => Some(1),
                    "z" => Some(2),
                    _ => None,
                };
                properties.push((size, axis, type_name.to_string()));
            }
            _ => {}
        }
    }

    let format = format.ok_or_else(|| format_err("missing format directive".to_string()))?;
    let vertex_count =
        vertex_count.ok_or_else(|| format_err("missing vertex element".to_string()))?;
    let axis_count = properties.iter().filter(|(_, a, _)| a.is_some()).count();
    if axis_count != 3 {
        return Err(format_err("vertex element must declare x, y, z".to_string()));
    }

    let mut points = Vec::with_capacity(vertex_count);
    match format {
        PlyFormat::Ascii => {
            let body = String::from_utf8_lossy(&bytes[offset..]);
            let mut rows = body.lines();
            for i in 0..vertex_count {
                let row = rows
                    .next()
                    .ok_or_else(|| format_err(format!("vertex row {i} missing")))?;
                let values: Vec<&str> = row.split_whitespace().collect();
                if values.len() < properties.len() {
                    return Err(format_err(format!("vertex row {i} too short")));
                }
                let mut coords = [0.0f64; 3];
                for (field, (_, axis, _)) in values.iter().zip(&properties) {
                    if let Some(a) = axis {
                        coords[*a] = field
                            .parse()
                            .map_err(|_| format_err(format!("bad coordinate {field:?}")))?;
                    }
                }
                points.push(Vector3::new(coords[0], coords[1], coords[2]));
            }
        }
        PlyFormat::BinaryLittleEndian => {
            let mut cursor = &bytes[offset..];
            for i in 0..vertex_count {
                let mut coords = [0.0f64; 3];
                for (size, axis, type_name) in &properties {
                    let mut buf = vec![0u8; *size];
                    cursor
                        .read_exact(&mut buf)
                        .map_err(|_| format_err(format!("vertex {i} truncated")))?;
                    if let Some(a) = axis {
                        coords[*a] = match type_name.as_str() {
                            "float" | "float32" => {
                                f32::from_le_bytes(buf[..4].try_into().unwrap()) as f64
                            }
                            "double" | "float64" => {
                                f64::from_le_bytes(buf[..8].try_into().unwrap())
                            }
                            other => {
                                return Err(format_err(format!(
                                    "coordinate property has non-float type {other:?}"
                                )))
                            }
                        };
                    }
                }
                points.push(Vector3::new(coords[0], coords[1], coords[2]));
            }
        }
    }
    PointSet::new(points).map_err(DataError::Pose)
}
