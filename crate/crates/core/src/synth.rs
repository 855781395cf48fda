//! Synthetic labeled grasping trials.
//!
//! When no real trial logs are available, this module generates a corpus in
//! the exact file formats the [`crate::dataset`] loaders consume: ground
//! truth poses, per-estimator estimates perturbed by a correlated,
//! heavy-tailed error model, and per-(estimator, gripper) trial labels from
//! an analytical grasp oracle.
//!
//! The error model is a two-component mixture: an inlier component with the
//! configured standard deviations and a tail component with every deviation
//! multiplied by `failure_scale`. Translation error concentrates along the
//! viewing axis; the model requires at least 80% of translation variance on
//! that axis. Estimators share a latent draw blended with independent noise
//! so their errors correlate, the way real estimators' errors do.
//!
//! Error convention: a sampled error `Δ = (R_δ, t_δ)` perturbs a ground
//! truth pose `(R, t)` to the estimate `(R R_δ, t + t_δ)` — the rotation
//! error acts in the object frame and the translation offset in the camera
//! frame, so `rotation_error` and `translation_error` against ground truth
//! recover exactly the sampled angle and offset.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{EstimateRecord, EstimatorId, GripperId, GroundTruthRecord, TrialRecord};
use crate::pose::{compose, invert, rotation_angle_deg, PoseError, RigidTransform};
use crate::seeding::derive_seed;

/// Minimum fraction of translation-error variance that must lie along the
/// viewing axis.
pub const VIEWING_AXIS_VARIANCE_FLOOR: f64 = 0.8;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("gripper {id}: tolerances must be positive")]
    BadTolerance { id: GripperId },
    #[error("underactuated tolerances must strictly dominate parallel tolerances")]
    DominanceViolated,
    #[error("approach axis must be unit length (norm {0})")]
    ApproachAxisNotUnit(f64),
    #[error(
        "error model puts {0:.3} of translation variance on the viewing axis; at least {VIEWING_AXIS_VARIANCE_FLOOR} is required"
    )]
    ViewingAxisTooWeak(f64),
    #[error("viewing axis must be unit length (norm {0})")]
    ViewingAxisNotUnit(f64),
    #[error("error model field {field} = {value} is out of range")]
    BadModelField { field: &'static str, value: f64 },
    #[error("correlation must be in [0, 1], got {0}")]
    BadCorrelation(f64),
    #[error("trial count must be positive")]
    EmptyGeneration,
    #[error("no reference grasp for object {object_id}, gripper {gripper_id}")]
    MissingGrasp { object_id: u32, gripper_id: GripperId },
    #[error("grasp config {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("pose error: {0}")]
    Pose(#[from] PoseError),
}

/// Positional and angular tolerance of one gripper, in the grasp frame.
#[derive(Debug, Clone, PartialEq)]
pub struct GripperSpec {
    pub id: GripperId,
    pub lateral_tolerance_mm: f64,
    pub axial_tolerance_mm: f64,
    pub angular_tolerance_deg: f64,
}

impl GripperSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let ok = self.lateral_tolerance_mm > 0.0
            && self.axial_tolerance_mm > 0.0
            && self.angular_tolerance_deg > 0.0;
        if ok {
            Ok(())
        } else {
            Err(SynthError::BadTolerance { id: self.id.clone() })
        }
    }

    /// Component-wise strict dominance (every tolerance strictly larger).
    pub fn dominates(&self, other: &GripperSpec) -> bool {
        self.lateral_tolerance_mm > other.lateral_tolerance_mm
            && self.axial_tolerance_mm > other.axial_tolerance_mm
            && self.angular_tolerance_deg > other.angular_tolerance_deg
    }
}

/// Handcrafted grasp for one (object, gripper), expressed in the object's
/// reference frame. The approach axis is a unit vector in grasp-frame
/// coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceGrasp {
    pub object_id: u32,
    pub gripper_id: GripperId,
    pub grasp_frame: RigidTransform,
    pub approach_axis: Vector3<f64>,
}

impl ReferenceGrasp {
    pub fn validate(&self) -> Result<(), SynthError> {
        let norm = self.approach_axis.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(SynthError::ApproachAxisNotUnit(norm));
        }
        Ok(())
    }
}

/// Simple geometry for objects without meshes: half extents of the bounding
/// box, used for the 8-corner ADD fallback.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectSpec {
    pub id: u32,
    pub half_extents_mm: Vector3<f64>,
}

/// Grippers, objects, and reference grasps, loaded from one config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GraspTable {
    pub grippers: BTreeMap<GripperId, GripperSpec>,
    pub objects: BTreeMap<u32, ObjectSpec>,
    grasps: BTreeMap<(u32, String), ReferenceGrasp>,
}

impl GraspTable {
    pub fn new(
        grippers: Vec<GripperSpec>,
        objects: Vec<ObjectSpec>,
        grasps: Vec<ReferenceGrasp>,
    ) -> Result<Self, SynthError> {
        let mut table = GraspTable::default();
        for spec in grippers {
            spec.validate()?;
            table.grippers.insert(spec.id.clone(), spec);
        }
        for object in objects {
            table.objects.insert(object.id, object);
        }
        for grasp in grasps {
            grasp.validate()?;
            table
                .grasps
                .insert((grasp.object_id, grasp.gripper_id.as_str().to_string()), grasp);
        }
        table.check_dominance()?;
        Ok(table)
    }

    /// When the canonical pair of grippers is present, the underactuated
    /// hand must strictly dominate the parallel gripper.
    fn check_dominance(&self) -> Result<(), SynthError> {
        let parallel = GripperId::new("parallel").unwrap();
        let underactuated = GripperId::new("underactuated").unwrap();
        if let (Some(p), Some(u)) = (self.grippers.get(&parallel), self.grippers.get(&underactuated))
        {
            if !u.dominates(p) {
                return Err(SynthError::DominanceViolated);
            }
        }
        Ok(())
    }

    pub fn grasp(&self, object_id: u32, gripper_id: &GripperId) -> Option<&ReferenceGrasp> {
        self.grasps
            .get(&(object_id, gripper_id.as_str().to_string()))
    }

    pub fn grasps(&self) -> impl Iterator<Item = &ReferenceGrasp> {
        self.grasps.values()
    }

    pub fn gripper_ids(&self) -> Vec<GripperId> {
        self.grippers.keys().cloned().collect()
    }

    pub fn load(path: &Path) -> Result<Self, SynthError> {
        let text = fs::read_to_string(path).map_err(|source| SynthError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let raw: GraspTableFile = toml::from_str(&text).map_err(|e| SynthError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        raw.into_table(path)
    }

    pub fn save(&self, path: &Path) -> Result<(), SynthError> {
        let raw = GraspTableFile::from_table(self);
        let text = toml::to_string_pretty(&raw).expect("grasp table serializes");
        fs::write(path, text).map_err(|source| SynthError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct GripperSpecRaw {
    id: String,
    lateral_tolerance_mm: f64,
    axial_tolerance_mm: f64,
    angular_tolerance_deg: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ObjectSpecRaw {
    id: u32,
    half_extents_mm: [f64; 3],
}

#[derive(Debug, Serialize, Deserialize)]
struct ReferenceGraspRaw {
    object_id: u32,
    gripper_id: String,
    /// Row-major rotation followed by translation: 12 floats.
    frame: Vec<f64>,
    approach_axis: [f64; 3],
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct GraspTableFile {
    #[serde(default)]
    grippers: Vec<GripperSpecRaw>,
    #[serde(default)]
    objects: Vec<ObjectSpecRaw>,
    #[serde(default)]
    grasps: Vec<ReferenceGraspRaw>,
}

impl GraspTableFile {
    fn into_table(self, path: &Path) -> Result<GraspTable, SynthError> {
        let config_err = |message: String| SynthError::Config {
            path: path.to_path_buf(),
            message,
        };
        let mut grippers = Vec::new();
        for raw in self.grippers {
            grippers.push(GripperSpec {
                id: GripperId::new(&raw.id).map_err(|e| config_err(e.to_string()))?,
                lateral_tolerance_mm: raw.lateral_tolerance_mm,
                axial_tolerance_mm: raw.axial_tolerance_mm,
                angular_tolerance_deg: raw.angular_tolerance_deg,
            });
        }
        let objects = self
            .objects
            .into_iter()
            .map(|raw| ObjectSpec {
                id: raw.id,
                half_extents_mm: Vector3::new(
                    raw.half_extents_mm[0],
                    raw.half_extents_mm[1],
                    raw.half_extents_mm[2],
                ),
            })
            .collect();
        let mut grasps = Vec::new();
        for raw in self.grasps {
            if raw.frame.len() != 12 {
                return Err(config_err(format!(
                    "grasp frame for object {} must have 12 floats, got {}",
                    raw.object_id,
                    raw.frame.len()
                )));
            }
            let rotation = nalgebra::Matrix3::new(
                raw.frame[0], raw.frame[1], raw.frame[2],
                raw.frame[3], raw.frame[4], raw.frame[5],
                raw.frame[6], raw.frame[7], raw.frame[8],
            );
            let translation = Vector3::new(raw.frame[9], raw.frame[10], raw.frame[11]);
            let grasp_frame = RigidTransform::project(rotation, translation)
                .map_err(|e| config_err(format!("grasp frame for object {}: {e}", raw.object_id)))?;
            grasps.push(ReferenceGrasp {
                object_id: raw.object_id,
                gripper_id: GripperId::new(&raw.gripper_id).map_err(|e| config_err(e.to_string()))?,
                grasp_frame,
                approach_axis: Vector3::new(
                    raw.approach_axis[0],
                    raw.approach_axis[1],
                    raw.approach_axis[2],
                ),
            });
        }
        GraspTable::new(grippers, objects, grasps)
    }

    fn from_table(table: &GraspTable) -> Self {
        let grippers = table
            .grippers
            .values()
            .map(|g| GripperSpecRaw {
                id: g.id.as_str().to_string(),
                lateral_tolerance_mm: g.lateral_tolerance_mm,
                axial_tolerance_mm: g.axial_tolerance_mm,
                angular_tolerance_deg: g.angular_tolerance_deg,
            })
            .collect();
        let objects = table
            .objects
            .values()
            .map(|o| ObjectSpecRaw {
                id: o.id,
                half_extents_mm: [o.half_extents_mm.x, o.half_extents_mm.y, o.half_extents_mm.z],
            })
            .collect();
        let grasps = table
            .grasps
            .values()
            .map(|g| {
                let r = g.grasp_frame.rotation();
                let t = g.grasp_frame.translation();
                ReferenceGraspRaw {
                    object_id: g.object_id,
                    gripper_id: g.gripper_id.as_str().to_string(),
                    frame: vec![
                        r[(0, 0)], r[(0, 1)], r[(0, 2)],
                        r[(1, 0)], r[(1, 1)], r[(1, 2)],
                        r[(2, 0)], r[(2, 1)], r[(2, 2)],
                        t.x, t.y, t.z,
                    ],
                    approach_axis: [g.approach_axis.x, g.approach_axis.y, g.approach_axis.z],
                }
            })
            .collect();
        Self {
            grippers,
            objects,
            grasps,
        }
    }
}

/// Correlated, heavy-tailed pose-error distribution for one estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorModel {
    /// Unit vector along which translation error concentrates.
    pub viewing_axis: Vector3<f64>,
    pub axial_sd_mm: f64,
    pub lateral_sd_mm: f64,
    /// Per-axis standard deviation of the rotation vector, degrees.
    pub rotation_sd_deg: f64,
    /// Multiplier applied to all deviations in the tail component.
    pub failure_scale: f64,
    /// Mixture weight of the tail component, in [0, 1).
    pub tail_weight: f64,
}

impl ErrorModel {
    pub fn validate(&self) -> Result<(), SynthError> {
        let norm = self.viewing_axis.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(SynthError::ViewingAxisNotUnit(norm));
        }
        for (field, value) in [
            ("axial_sd_mm", self.axial_sd_mm),
            ("lateral_sd_mm", self.lateral_sd_mm),
            ("rotation_sd_deg", self.rotation_sd_deg),
        ] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(SynthError::BadModelField { field, value });
            }
        }
        if !(self.failure_scale >= 1.0 && self.failure_scale.is_finite()) {
            return Err(SynthError::BadModelField {
                field: "failure_scale",
                value: self.failure_scale,
            });
        }
        if !(0.0..1.0).contains(&self.tail_weight) {
            return Err(SynthError::BadModelField {
                field: "tail_weight",
                value: self.tail_weight,
            });
        }
        let axial_var = self.axial_sd_mm * self.axial_sd_mm;
        let total_var = axial_var + 2.0 * self.lateral_sd_mm * self.lateral_sd_mm;
        if total_var > 0.0 {
            let fraction = axial_var / total_var;
            if fraction < VIEWING_AXIS_VARIANCE_FLOOR {
                return Err(SynthError::ViewingAxisTooWeak(fraction));
            }
        }
        Ok(())
    }

    /// Orthonormal complement of the viewing axis.
    fn lateral_basis(&self) -> (Vector3<f64>, Vector3<f64>) {
        let helper = if self.viewing_axis.x.abs() < 0.9 {
            Vector3::x()
        } else {
            Vector3::y()
        };
        let e1 = self.viewing_axis.cross(&helper).normalize();
        let e2 = self.viewing_axis.cross(&e1);
        (e1, e2)
    }
}

/// The raw randomness behind one error sample: six standard normals plus a
/// uniform for the mixture component. Keeping draws separate from the model
/// lets estimators blend a shared latent draw with independent noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorDraw {
    pub normals: [f64; 6],
    pub mixture: f64,
}

impl ErrorDraw {
    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut normals = [0.0; 6];
        for value in &mut normals {
            *value = rng.sample(StandardNormal);
        }
        Self {
            normals,
            mixture: rng.gen_range(0.0..1.0),
        }
    }

    /// Variance-preserving blend: `sqrt(c)·latent + sqrt(1-c)·independent`
    /// on the normals; the mixture draw stays independent per estimator.
    pub fn blend(latent: &ErrorDraw, independent: &ErrorDraw, correlation: f64) -> Self {
        let wl = correlation.sqrt();
        let wi = (1.0 - correlation).sqrt();
        let mut normals = [0.0; 6];
        for i in 0..6 {
            normals[i] = wl * latent.normals[i] + wi * independent.normals[i];
        }
        Self {
            normals,
            mixture: independent.mixture,
        }
    }
}

/// Realizes an error transform from a draw under the model.
pub fn realize_error(model: &ErrorModel, draw: &ErrorDraw) -> RigidTransform {
    let scale = if draw.mixture < model.tail_weight {
        model.failure_scale
    } else {
        1.0
    };
    let (e1, e2) = model.lateral_basis();
    let translation = scale
        * (model.axial_sd_mm * draw.normals[0] * model.viewing_axis
            + model.lateral_sd_mm * (draw.normals[1] * e1 + draw.normals[2] * e2));
    let rotation_vector_deg = scale
        * model.rotation_sd_deg
        * Vector3::new(draw.normals[3], draw.normals[4], draw.normals[5]);
    let rotation = Rotation3::new(rotation_vector_deg * std::f64::consts::PI / 180.0).into_inner();
    RigidTransform::project(rotation, translation).expect("axis-angle rotation is valid")
}

/// Draws one error transform, deterministic in the seed.
pub fn sample_correlated_error(model: &ErrorModel, seed: u64) -> RigidTransform {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    realize_error(model, &ErrorDraw::sample(&mut rng))
}

/// Applies an error to a ground-truth pose: rotation perturbs in the object
/// frame, translation offsets in the camera frame. See the module docs.
pub fn apply_error(truth: &RigidTransform, error: &RigidTransform) -> RigidTransform {
    RigidTransform::project(
        truth.rotation() * error.rotation(),
        truth.translation() + error.translation(),
    )
    .expect("product of rotations is a rotation")
}

/// Analytical grasp-success oracle.
///
/// The relative error between the estimated and true placement is expressed
/// in the grasp frame (conjugation by the grasp frame's world pose), then
/// tested against the gripper's axial, lateral, and angular tolerances.
pub fn grasp_oracle(
    estimated: &RigidTransform,
    truth: &RigidTransform,
    grasp: &ReferenceGrasp,
    gripper: &GripperSpec,
) -> bool {
    let grasp_true = compose(truth, &grasp.grasp_frame);
    let grasp_estimated = compose(estimated, &grasp.grasp_frame);
    let relative = compose(&invert(&grasp_true), &grasp_estimated);
    let axial_signed = relative.translation().dot(&grasp.approach_axis);
    let lateral = (relative.translation() - axial_signed * grasp.approach_axis).norm();
    let angle = rotation_angle_deg(relative.rotation());
    axial_signed.abs() <= gripper.axial_tolerance_mm
        && lateral <= gripper.lateral_tolerance_mm
        && angle <= gripper.angular_tolerance_deg
}

/// Everything `generate_trials` needs.
#[derive(Debug, Clone)]
pub struct GenerateConfig {
    /// Number of (object, image) keys to generate.
    pub n: usize,
    /// Per-estimator error models; keys define the estimator set.
    pub models: BTreeMap<EstimatorId, ErrorModel>,
    pub grasp_table: GraspTable,
    /// Cross-estimator blend weight of the shared latent draw, in [0, 1].
    pub correlation: f64,
    pub seed: u64,
}

/// A generated corpus, schema-compatible with the `dataset` loaders.
#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub estimates: BTreeMap<EstimatorId, Vec<EstimateRecord>>,
    pub ground_truth: Vec<GroundTruthRecord>,
    pub trials: Vec<TrialRecord>,
}

/// Generates `n` keys with one ground truth, K estimates, and one trial per
/// (estimator, gripper) with a grasp defined. Objects rotate round-robin;
/// every sample derives its own RNG stream from the master seed.
pub fn generate_trials(cfg: &GenerateConfig) -> Result<SynthCorpus, SynthError> {
    if cfg.n == 0 {
        return Err(SynthError::EmptyGeneration);
    }
    if !(0.0..=1.0).contains(&cfg.correlation) {
        return Err(SynthError::BadCorrelation(cfg.correlation));
    }
    for model in cfg.models.values() {
        model.validate()?;
    }
    for gripper in cfg.grasp_table.grippers.values() {
        gripper.validate()?;
    }
    let objects: Vec<u32> = cfg.grasp_table.objects.keys().copied().collect();
    assert!(!objects.is_empty(), "grasp table must define objects");

    let mut estimates: BTreeMap<EstimatorId, Vec<EstimateRecord>> = cfg
        .models
        .keys()
        .map(|id| (id.clone(), Vec::with_capacity(cfg.n)))
        .collect();
    let mut ground_truth = Vec::with_capacity(cfg.n);
    let mut trials = Vec::new();

    for i in 0..cfg.n {
        let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(cfg.seed, &format!("sample/{i}")));
        let object_id = objects[i % objects.len()];
        let scene_id = 1u32;
        let image_id = i as u32;

        let truth_pose = RigidTransform::new(
            crate::pose::random_rotation(&mut rng),
            Vector3::new(
                rng.gen_range(-150.0..150.0),
                rng.gen_range(-150.0..150.0),
                rng.gen_range(400.0..800.0),
            ),
        )
        .expect("random rotation is valid");
        ground_truth.push(GroundTruthRecord {
            object_id,
            scene_id,
            image_id,
            pose: truth_pose.clone(),
        });

        let latent = ErrorDraw::sample(&mut rng);
        let mut estimated_poses: BTreeMap<EstimatorId, RigidTransform> = BTreeMap::new();
        for (estimator_id, model) in &cfg.models {
            let independent = ErrorDraw::sample(&mut rng);
            let draw = ErrorDraw::blend(&latent, &independent, cfg.correlation);
            let error = realize_error(model, &draw);
            let estimate_pose = apply_error(&truth_pose, &error);
            estimates.get_mut(estimator_id).unwrap().push(EstimateRecord {
                estimator_id: estimator_id.clone(),
                object_id,
                scene_id,
                image_id,
                pose: estimate_pose.clone(),
                detection_score: 1.0,
            });
            estimated_poses.insert(estimator_id.clone(), estimate_pose);
        }

        for (gripper_id, gripper) in &cfg.grasp_table.grippers {
            let Some(grasp) = cfg.grasp_table.grasp(object_id, gripper_id) else {
                continue; // this (object, gripper) pair is excluded
            };
            for (estimator_id, estimate_pose) in &estimated_poses {
                trials.push(TrialRecord {
                    estimator_id: estimator_id.clone(),
                    object_id,
                    scene_id,
                    image_id,
                    gripper_id: gripper_id.clone(),
                    success: grasp_oracle(estimate_pose, &truth_pose, grasp, gripper),
                });
            }
        }
    }

    Ok(SynthCorpus {
        estimates,
        ground_truth,
        trials,
    })
}

/// Default gripper pair: the underactuated hand strictly dominates the
/// parallel gripper, anchored at the 50 mm axial tolerance.
pub fn default_grippers() -> Vec<GripperSpec> {
    vec![
        GripperSpec {
            id: GripperId::new("parallel").unwrap(),
            lateral_tolerance_mm: 15.0,
            axial_tolerance_mm: 25.0,
            angular_tolerance_deg: 15.0,
        },
        GripperSpec {
            id: GripperId::new("underactuated").unwrap(),
            lateral_tolerance_mm: 30.0,
            axial_tolerance_mm: 50.0,
            angular_tolerance_deg: 30.0,
        },
    ]
}

/// Default synthetic object set: five boxes of assorted proportions with a
/// top-down grasp slightly above the centroid.
pub fn default_objects() -> Vec<ObjectSpec> {
    let extents = [
        (1u32, [30.0, 30.0, 60.0]),
        (2, [20.0, 20.0, 20.0]),
        (3, [35.0, 25.0, 45.0]),
        (4, [15.0, 15.0, 50.0]),
        (5, [40.0, 40.0, 25.0]),
    ];
    extents
        .into_iter()
        .map(|(id, [x, y, z])| ObjectSpec {
            id,
            half_extents_mm: Vector3::new(x, y, z),
        })
        .collect()
}

/// Default grasp table over [`default_objects`] and [`default_grippers`]:
/// one grasp per (object, gripper) at a small offset above the centroid,
/// approaching along +z of the grasp frame.
pub fn default_grasp_table() -> GraspTable {
    let objects = default_objects();
    let grippers = default_grippers();
    let mut grasps = Vec::new();
    for object in &objects {
        for gripper in &grippers {
            let frame = RigidTransform::from_translation(Vector3::new(
                0.0,
                0.0,
                object.half_extents_mm.z * 0.5,
            ));
            grasps.push(ReferenceGrasp {
                object_id: object.id,
                gripper_id: gripper.id.clone(),
                grasp_frame: frame,
                approach_axis: Vector3::z(),
            });
        }
    }
    GraspTable::new(grippers, objects, grasps).expect("default grasp table is valid")
}

/// Default per-estimator error models: three estimators with distinct noise
/// levels, all with viewing-direction-dominated translation error and a
/// heavy tail that produces most failures. Inlier deviations sit well inside
/// the default gripper tolerances, so failures are dominated by tail draws —
/// large, visible in the estimator disagreement — rather than by boundary
/// cases whose outcome hinges on the unobserved object orientation.
pub fn default_error_models() -> BTreeMap<EstimatorId, ErrorModel> {
    let specs = [
        ("alpha", 6.0, 2.0, 3.0, 6.0, 0.30),
        ("bravo", 4.5, 1.5, 2.2, 6.0, 0.22),
        ("charlie", 5.0, 1.6, 2.5, 6.0, 0.26),
    ];
    specs
        .into_iter()
        .map(
            |(name, axial_sd_mm, lateral_sd_mm, rotation_sd_deg, failure_scale, tail_weight)| {
                (
                    EstimatorId::new(name).unwrap(),
                    ErrorModel {
                        viewing_axis: Vector3::z(),
                        axial_sd_mm,
                        lateral_sd_mm,
                        rotation_sd_deg,
                        failure_scale,
                        tail_weight,
                    },
                )
            },
        )
        .collect()
}

/// Paths of a written synthetic corpus.
#[derive(Debug, Clone)]
pub struct CorpusPaths {
    pub estimates: BTreeMap<EstimatorId, PathBuf>,
    pub ground_truth_dir: PathBuf,
    pub trials: PathBuf,
    pub grasps: PathBuf,
}

/// Writes a corpus in the exact formats the `dataset` loaders read:
/// `estimates/<id>.csv`, `gt/000001/scene_gt.json`, `trials.csv`, and the
/// grasp table as `grasps.toml`.
pub fn write_corpus(
    corpus: &SynthCorpus,
    grasp_table: &GraspTable,
    out_dir: &Path,
) -> Result<CorpusPaths, SynthError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source: std::io::Error| SynthError::Io {
            path: path.clone(),
            source,
        }
    };
    let estimates_dir = out_dir.join("estimates");
    fs::create_dir_all(&estimates_dir).map_err(io(&estimates_dir))?;

    let mut estimate_paths = BTreeMap::new();
    for (estimator_id, records) in &corpus.estimates {
        let path = estimates_dir.join(format!("{estimator_id}.csv"));
        let mut text = String::from("scene_id,im_id,obj_id,score,R,t,time\n");
        for record in records {
            let r = record.pose.rotation();
            let t = record.pose.translation();
            text.push_str(&format!(
                "{},{},{},{},{} {} {} {} {} {} {} {} {},{} {} {},-1\n",
                record.scene_id,
                record.image_id,
                record.object_id,
                record.detection_score,
                r[(0, 0)], r[(0, 1)], r[(0, 2)],
                r[(1, 0)], r[(1, 1)], r[(1, 2)],
                r[(2, 0)], r[(2, 1)], r[(2, 2)],
                t.x, t.y, t.z,
            ));
        }
        fs::write(&path, text).map_err(io(&path))?;
        estimate_paths.insert(estimator_id.clone(), path);
    }

    // Ground truth: group by scene (generation uses a single scene, but the
    // writer handles any).
    let gt_root = out_dir.join("gt");
    let mut by_scene: BTreeMap<u32, BTreeMap<String, Vec<serde_json::Value>>> = BTreeMap::new();
    for record in &corpus.ground_truth {
        let r = record.pose.rotation();
        let t = record.pose.translation();
        let entry = serde_json::json!({
            "cam_R_m2c": [
                r[(0, 0)], r[(0, 1)], r[(0, 2)],
                r[(1, 0)], r[(1, 1)], r[(1, 2)],
                r[(2, 0)], r[(2, 1)], r[(2, 2)],
            ],
            "cam_t_m2c": [t.x, t.y, t.z],
            "obj_id": record.object_id,
        });
        by_scene
            .entry(record.scene_id)
            .or_default()
            .entry(record.image_id.to_string())
            .or_default()
            .push(entry);
    }
    for (scene_id, images) in &by_scene {
        let scene_dir = gt_root.join(format!("{scene_id:06}"));
        fs::create_dir_all(&scene_dir).map_err(io(&scene_dir))?;
        let path = scene_dir.join("scene_gt.json");
        let text = serde_json::to_string_pretty(images).expect("scene_gt serializes");
        fs::write(&path, text).map_err(io(&path))?;
    }

    let trials_path = out_dir.join("trials.csv");
    let mut text = String::from("estimator_id,scene_id,im_id,obj_id,gripper_id,success\n");
    for trial in &corpus.trials {
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            trial.estimator_id,
            trial.scene_id,
            trial.image_id,
            trial.object_id,
            trial.gripper_id,
            u8::from(trial.success),
        ));
    }
    fs::write(&trials_path, text).map_err(io(&trials_path))?;

    let grasps_path = out_dir.join("grasps.toml");
    grasp_table.save(&grasps_path)?;

    Ok(CorpusPaths {
        estimates: estimate_paths,
        ground_truth_dir: gt_root,
        trials: trials_path,
        grasps: grasps_path,
    })
}
