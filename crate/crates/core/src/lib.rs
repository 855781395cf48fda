//! graspcast-core — predict whether a grasp guided by a 6-DoF pose estimate
//! will succeed, before the grasp is attempted.
//!
//! One estimator is designated the Principal (PE): its pose estimate would
//! guide the actual grasp. The remaining estimators act as Supporting
//! Estimators (SE), and the signed differences between the PE's and each
//! SE's pose components form the input of a small success-prediction
//! network. Labels come from grasping trials (real trial logs or the
//! synthetic oracle in [`synth`]).
//!
//! Pipeline stages, one module each:
//!
//! - [`pose`] — SE(3) algebra, rotation/translation errors, ADD,
//!   reference-frame alignment.
//! - [`dataset`] — BOP-style ingestion, corpus joining, stratified split.
//! - [`synth`] — correlated pose-error sampler and the analytical
//!   grasp-success oracle for generating labeled trials.
//! - [`features`] — PE−SE difference vectors plus optional one-hot
//!   object/gripper blocks.
//! - [`mlp`] — the from-scratch 16-8-4-4-1 network, Adam, cosine annealing,
//!   best-test-accuracy checkpointing.
//! - [`baseline`] — learned-threshold baseline over the mean ADD
//!   disagreement between the PE and the SEs.
//! - [`report`] — accuracy aggregation, success-rate and pose-error tables,
//!   improvement summaries.
//!
//! All units are millimeters and degrees. Every randomized step is seeded
//! (ChaCha20) and deterministic; see [`seeding`].

pub mod baseline;
pub mod dataset;
pub mod features;
pub mod mlp;
pub mod pose;
pub mod report;
pub mod seeding;
pub mod synth;

pub use dataset::{EstimatorId, GripperId, JoinedSample, SampleKey, Split, SplitAssignment};
pub use features::{FeatureConfig, TrainingSample, Variant};
pub use pose::{PointSet, RigidTransform};
