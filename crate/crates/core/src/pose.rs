//! SE(3) pose algebra, rotation/translation error metrics, the ADD metric,
//! and the reference-frame alignment transform.
//!
//! Conventions used throughout the crate:
//! - translations are in millimeters, angles in degrees,
//! - rotations are 3x3 orthonormal matrices with determinant +1,
//! - Euler angles use the intrinsic X-Y'-Z'' decomposition, i.e.
//!   `R = Rx(a) * Ry(b) * Rz(c)`, each angle wrapped to `(-180, 180]`.

use nalgebra::{Matrix3, Quaternion, Rotation3, UnitQuaternion, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Per-entry tolerance for the orthonormality invariant of [`RigidTransform`].
pub const ROTATION_TOLERANCE: f64 = 1e-9;

/// Middle-angle distance (radians) from ±90° below which a decomposition is
/// flagged as gimbal-locked and canonicalized.
pub const GIMBAL_LOCK_THRESHOLD_RAD: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum PoseError {
    #[error("matrix is not a rotation: orthonormality drift {drift:.3e} exceeds {tolerance:.1e}")]
    NotARotation { drift: f64, tolerance: f64 },
    #[error("matrix is a reflection (determinant {det:.6})")]
    Reflection { det: f64 },
    #[error("transform contains a non-finite value")]
    NonFinite,
    #[error("point set is empty")]
    EmptyPointSet,
    #[error("point set contains a non-finite coordinate")]
    NonFinitePoint,
}

/// A rigid transform: rotation plus translation (millimeters).
///
/// Valid instances always satisfy `Rᵀ R = I` and `det R = +1` within
/// [`ROTATION_TOLERANCE`]; construction goes through [`RigidTransform::new`]
/// or [`RigidTransform::project`], which enforce this.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl RigidTransform {
    /// Builds a transform, rejecting rotation matrices that violate the
    /// orthonormality invariant.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, PoseError> {
        if !rotation.iter().all(|v| v.is_finite()) || !translation.iter().all(|v| v.is_finite()) {
            return Err(PoseError::NonFinite);
        }
        let det = rotation.determinant();
        if det < 0.0 {
            return Err(PoseError::Reflection { det });
        }
        let drift = orthonormality_drift(&rotation);
        if drift > ROTATION_TOLERANCE {
            return Err(PoseError::NotARotation {
                drift,
                tolerance: ROTATION_TOLERANCE,
            });
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    /// Builds a transform from a nearly orthonormal matrix by projecting it
    /// to the nearest rotation. Rejects reflections and non-finite input.
    ///
    /// Callers that need to police how much drift is acceptable should check
    /// [`orthonormality_drift`] before projecting.
    pub fn project(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, PoseError> {
        if !rotation.iter().all(|v| v.is_finite()) || !translation.iter().all(|v| v.is_finite()) {
            return Err(PoseError::NonFinite);
        }
        let det = rotation.determinant();
        if det < 0.0 {
            return Err(PoseError::Reflection { det });
        }
        let projected = nearest_rotation(&rotation).ok_or(PoseError::NonFinite)?;
        Self::new(projected, translation)
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Pure translation by `translation` millimeters.
    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    /// Applies the transform to a point: `R p + t`.
    pub fn apply(&self, point: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * point + self.translation
    }
}

/// Maximum deviation of `Rᵀ R` from the identity, combined with the
/// determinant's deviation from +1. Zero for an exact rotation.
pub fn orthonormality_drift(rotation: &Matrix3<f64>) -> f64 {
    let gram = rotation.transpose() * rotation;
    let mut drift: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let expected = if i == j { 1.0 } else { 0.0 };
            drift = drift.max((gram[(i, j)] - expected).abs());
        }
    }
    drift.max((rotation.determinant() - 1.0).abs())
}

/// Orthogonal projection onto SO(3) via SVD: `U diag(1, 1, det(U Vᵀ)) Vᵀ`.
///
/// Returns `None` when the SVD fails to produce the factor matrices
/// (degenerate input).
pub fn nearest_rotation(matrix: &Matrix3<f64>) -> Option<Matrix3<f64>> {
    let svd = matrix.svd(true, true);
    let u = svd.u?;
    let v_t = svd.v_t?;
    let sign = (u * v_t).determinant().signum();
    let fix = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, sign));
    Some(u * fix * v_t)
}

/// Composition `a ∘ b`: apply `b` first, then `a`.
pub fn compose(a: &RigidTransform, b: &RigidTransform) -> RigidTransform {
    RigidTransform {
        rotation: a.rotation * b.rotation,
        translation: a.rotation * b.translation + a.translation,
    }
}

/// Inverse transform: `(Rᵀ, -Rᵀ t)`.
pub fn invert(t: &RigidTransform) -> RigidTransform {
    let rotation = t.rotation.transpose();
    RigidTransform {
        rotation,
        translation: -(rotation * t.translation),
    }
}

/// Geodesic angle between the two rotations, in degrees, in `[0, 180]`.
pub fn rotation_error(a: &RigidTransform, b: &RigidTransform) -> f64 {
    let relative = a.rotation.transpose() * b.rotation;
    rotation_angle_deg(&relative)
}

/// Rotation angle of a single rotation matrix, in degrees.
pub fn rotation_angle_deg(rotation: &Matrix3<f64>) -> f64 {
    let cos = ((rotation.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    cos.acos().to_degrees()
}

/// Euclidean distance between the two translations, in millimeters.
pub fn translation_error(a: &RigidTransform, b: &RigidTransform) -> f64 {
    (a.translation - b.translation).norm()
}

/// Fixed-convention Euler decomposition of a rotation (degrees).
///
/// `gimbal_lock` is set when the middle angle is within
/// [`GIMBAL_LOCK_THRESHOLD_RAD`] of ±90°; the triple is then canonicalized
/// with the third angle folded into the first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerTriple {
    /// Angles in degrees, each in `(-180, 180]`, intrinsic X-Y'-Z'' order.
    pub angles: [f64; 3],
    pub gimbal_lock: bool,
}

/// Wraps an angle in degrees to `(-180, 180]`.
pub fn wrap_angle_deg(angle: f64) -> f64 {
    let wrapped = angle - 360.0 * ((angle + 180.0) / 360.0).floor();
    if wrapped <= -180.0 {
        wrapped + 360.0
    } else {
        wrapped
    }
}

/// Decomposes a rotation into the intrinsic X-Y'-Z'' Euler triple.
///
/// With `R = Rx(a) Ry(b) Rz(c)` the matrix entries give
/// `R[0,2] = sin b`, `R[1,2] = -sin a cos b`, `R[0,1] = -cos b sin c`.
pub fn euler_decompose(rotation: &Matrix3<f64>) -> EulerTriple {
    let sin_b = rotation[(0, 2)].clamp(-1.0, 1.0);
    let b = sin_b.asin();
    let locked = (std::f64::consts::FRAC_PI_2 - b.abs()) < GIMBAL_LOCK_THRESHOLD_RAD;
    let (a, c) = if locked {
        // Only a±c is determined; canonicalize with c = 0.
        let a = if b > 0.0 {
            rotation[(1, 0)].atan2(rotation[(1, 1)])
        } else {
            (-rotation[(1, 0)]).atan2(rotation[(1, 1)])
        };
        (a, 0.0)
    } else {
        let a = (-rotation[(1, 2)]).atan2(rotation[(2, 2)]);
        let c = (-rotation[(0, 1)]).atan2(rotation[(0, 0)]);
        (a, c)
    };
    EulerTriple {
        angles: [
            wrap_angle_deg(a.to_degrees()),
            wrap_angle_deg(b.to_degrees()),
            wrap_angle_deg(c.to_degrees()),
        ],
        gimbal_lock: locked,
    }
}

/// Recomposes the intrinsic X-Y'-Z'' triple (degrees) into a rotation matrix.
pub fn euler_recompose(angles: &[f64; 3]) -> Matrix3<f64> {
    let (a, b, c) = (
        angles[0].to_radians(),
        angles[1].to_radians(),
        angles[2].to_radians(),
    );
    let rx = Rotation3::from_axis_angle(&Vector3::x_axis(), a);
    let ry = Rotation3::from_axis_angle(&Vector3::y_axis(), b);
    let rz = Rotation3::from_axis_angle(&Vector3::z_axis(), c);
    (rx * ry * rz).into_inner()
}

/// The transform that carries camera-frame poses into the reference frame:
/// `reference_pose ∘ invert(ground_truth)`.
///
/// Composing the result with the ground truth reproduces the reference pose,
/// and rotation/translation errors between any two camera-frame poses are
/// unchanged when both are composed with it.
pub fn alignment_transform(
    reference_pose: &RigidTransform,
    ground_truth: &RigidTransform,
) -> RigidTransform {
    compose(reference_pose, &invert(ground_truth))
}

/// Points sampled from an object's 3D model, in millimeters.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    points: Vec<Vector3<f64>>,
}

impl PointSet {
    pub fn new(points: Vec<Vector3<f64>>) -> Result<Self, PoseError> {
        if points.is_empty() {
            return Err(PoseError::EmptyPointSet);
        }
        if points.iter().any(|p| !p.iter().all(|v| v.is_finite())) {
            return Err(PoseError::NonFinitePoint);
        }
        Ok(Self { points })
    }

    /// The 8 corners of the axis-aligned box with the given half extents,
    /// the mesh-free fallback for ADD.
    pub fn box_corners(half_extents: Vector3<f64>) -> Self {
        let mut points = Vec::with_capacity(8);
        for &sx in &[-1.0, 1.0] {
            for &sy in &[-1.0, 1.0] {
                for &sz in &[-1.0, 1.0] {
                    points.push(Vector3::new(
                        sx * half_extents.x,
                        sy * half_extents.y,
                        sz * half_extents.z,
                    ));
                }
            }
        }
        Self { points }
    }

    /// Keeps at most `max_points` points by deterministic stride.
    pub fn subsampled(&self, max_points: usize) -> Self {
        assert!(max_points > 0, "max_points must be positive");
        if self.points.len() <= max_points {
            return self.clone();
        }
        let stride = self.points.len().div_ceil(max_points);
        Self {
            points: self.points.iter().step_by(stride).cloned().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vector3<f64>> {
        self.points.iter()
    }
}

/// ADD: mean Euclidean distance between the model points under `a` and
/// under `b`, in millimeters.
pub fn add_metric(
    a: &RigidTransform,
    b: &RigidTransform,
    model: &PointSet,
) -> Result<f64, PoseError> {
    if model.is_empty() {
        return Err(PoseError::EmptyPointSet);
    }
    let total: f64 = model
        .iter()
        .map(|p| (a.apply(p) - b.apply(p)).norm())
        .sum();
    Ok(total / model.len() as f64)
}

/// Uniformly distributed random rotation (normalized Gaussian quaternion).
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> Matrix3<f64> {
    loop {
        let w: f64 = rng.sample(StandardNormal);
        let x: f64 = rng.sample(StandardNormal);
        let y: f64 = rng.sample(StandardNormal);
        let z: f64 = rng.sample(StandardNormal);
        let norm = (w * w + x * x + y * y + z * z).sqrt();
        if norm > 1e-6 {
            let q = UnitQuaternion::from_quaternion(Quaternion::new(w, x, y, z));
            return q.to_rotation_matrix().into_inner();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn random_transform(rng: &mut ChaCha20Rng) -> RigidTransform {
        let t = Vector3::new(
            rng.gen_range(-500.0..500.0),
            rng.gen_range(-500.0..500.0),
            rng.gen_range(-500.0..500.0),
        );
        RigidTransform::new(random_rotation(rng), t).unwrap()
    }

    /// Brute-force 4x4 homogeneous product, independent of `compose`.
    fn mat4_of(t: &RigidTransform) -> [[f64; 4]; 4] {
        let mut m = [[0.0; 4]; 4];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = t.rotation()[(i, j)];
            }
            m[i][3] = t.translation()[i];
        }
        m[3][3] = 1.0;
        m
    }

    fn mat4_mul(a: &[[f64; 4]; 4], b: &[[f64; 4]; 4]) -> [[f64; 4]; 4] {
        let mut out = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    out[i][j] += a[i][k] * b[k][j];
                }
            }
        }
        out
    }

    /// Dense 4x4 inverse by Gauss-Jordan elimination with partial pivoting.
    fn mat4_inverse(a: &[[f64; 4]; 4]) -> [[f64; 4]; 4] {
        let mut aug = [[0.0; 8]; 4];
        for i in 0..4 {
            for j in 0..4 {
                aug[i][j] = a[i][j];
            }
            aug[i][i + 4] = 1.0;
        }
        for col in 0..4 {
            let pivot = (col..4)
                .max_by(|&r1, &r2| aug[r1][col].abs().partial_cmp(&aug[r2][col].abs()).unwrap())
                .unwrap();
            aug.swap(col, pivot);
            let p = aug[col][col];
            assert!(p.abs() > 1e-12, "singular matrix in oracle");
            for j in 0..8 {
                aug[col][j] /= p;
            }
            for row in 0..4 {
                if row != col {
                    let f = aug[row][col];
                    for j in 0..8 {
                        aug[row][j] -= f * aug[col][j];
                    }
                }
            }
        }
        let mut out = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                out[i][j] = aug[i][j + 4];
            }
        }
        out
    }

    /// Shepperd-style rotation-matrix-to-quaternion conversion, used as an
    /// independent oracle for the geodesic rotation error.
    fn quat_of(m: &Matrix3<f64>) -> [f64; 4] {
        let trace = m.trace();
        if trace > 0.0 {
            let s = (trace + 1.0).sqrt() * 2.0;
            [
                s / 4.0,
                (m[(2, 1)] - m[(1, 2)]) / s,
                (m[(0, 2)] - m[(2, 0)]) / s,
                (m[(1, 0)] - m[(0, 1)]) / s,
            ]
        } else if m[(0, 0)] > m[(1, 1)] && m[(0, 0)] > m[(2, 2)] {
            let s = (1.0 + m[(0, 0)] - m[(1, 1)] - m[(2, 2)]).sqrt() * 2.0;
            [
                (m[(2, 1)] - m[(1, 2)]) / s,
                s / 4.0,
                (m[(0, 1)] + m[(1, 0)]) / s,
                (m[(0, 2)] + m[(2, 0)]) / s,
            ]
        } else if m[(1, 1)] > m[(2, 2)] {
            let s = (1.0 + m[(1, 1)] - m[(0, 0)] - m[(2, 2)]).sqrt() * 2.0;
            [
                (m[(0, 2)] - m[(2, 0)]) / s,
                (m[(0, 1)] + m[(1, 0)]) / s,
                s / 4.0,
                (m[(1, 2)] + m[(2, 1)]) / s,
            ]
        } else {
            let s = (1.0 + m[(2, 2)] - m[(0, 0)] - m[(1, 1)]).sqrt() * 2.0;
            [
                (m[(1, 0)] - m[(0, 1)]) / s,
                (m[(0, 2)] + m[(2, 0)]) / s,
                (m[(1, 2)] + m[(2, 1)]) / s,
                s / 4.0,
            ]
        }
    }

    fn quat_angle_deg(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
        let qa = quat_of(a);
        let qb = quat_of(b);
        let dot: f64 = qa.iter().zip(qb.iter()).map(|(x, y)| x * y).sum();
        (2.0 * dot.abs().clamp(0.0, 1.0).acos()).to_degrees()
    }

    #[test]
    fn compose_identity_is_neutral() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let t = random_transform(&mut rng);
        let id = RigidTransform::identity();
        assert_eq!(compose(&id, &t), t);
        assert_eq!(compose(&t, &id), t);
    }

    #[test]
    fn compose_with_inverse_gives_identity() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        for _ in 0..50 {
            let t = random_transform(&mut rng);
            let round = compose(&t, &invert(&t));
            assert!(orthonormality_drift(round.rotation()) < 1e-9);
            for i in 0..3 {
                for j in 0..3 {
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!((round.rotation()[(i, j)] - expected).abs() < 1e-9);
                }
            }
            assert!(round.translation().norm() < 1e-9);
        }
    }

    #[test]
    fn compose_matches_homogeneous_product_oracle() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for _ in 0..100 {
            let a = random_transform(&mut rng);
            let b = random_transform(&mut rng);
            let got = compose(&a, &b);
            let expected = mat4_mul(&mat4_of(&a), &mat4_of(&b));
            for i in 0..3 {
                for j in 0..3 {
                    assert_relative_eq!(
                        got.rotation()[(i, j)],
                        expected[i][j],
                        epsilon = 1e-12
                    );
                }
                assert_relative_eq!(got.translation()[i], expected[i][3], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn invert_identity_and_pure_translation() {
        let id = RigidTransform::identity();
        assert_eq!(invert(&id), id);
        let t = RigidTransform::from_translation(Vector3::new(5.0, 0.0, 0.0));
        let inv = invert(&t);
        assert_eq!(inv.translation(), &Vector3::new(-5.0, 0.0, 0.0));
        assert_eq!(inv.rotation(), &Matrix3::identity());
    }

    #[test]
    fn invert_matches_gaussian_elimination_oracle() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        for _ in 0..100 {
            let t = random_transform(&mut rng);
            let got = invert(&t);
            let expected = mat4_inverse(&mat4_of(&t));
            for i in 0..3 {
                for j in 0..3 {
                    assert_relative_eq!(got.rotation()[(i, j)], expected[i][j], epsilon = 1e-9);
                }
                assert_relative_eq!(got.translation()[i], expected[i][3], epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn rotation_error_of_equal_transforms_is_zero() {
        // acos is ill-conditioned at the identity: rounding in R^T R shows
        // up as ~1e-6 degrees, so "zero" means below that noise floor.
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let t = random_transform(&mut rng);
        assert!(rotation_error(&t, &t) < 1e-5);
        assert_eq!(
            rotation_error(&RigidTransform::identity(), &RigidTransform::identity()),
            0.0
        );
    }

    #[test]
    fn rotation_error_antipodal_about_z_is_180() {
        let a = RigidTransform::identity();
        let r = euler_recompose(&[0.0, 0.0, 180.0]);
        let b = RigidTransform::new(r, Vector3::zeros()).unwrap();
        assert_relative_eq!(rotation_error(&a, &b), 180.0, epsilon = 1e-9);
    }

    #[test]
    fn rotation_error_matches_quaternion_oracle() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        for _ in 0..200 {
            let a = random_transform(&mut rng);
            let b = random_transform(&mut rng);
            let got = rotation_error(&a, &b);
            let expected = quat_angle_deg(a.rotation(), b.rotation());
            assert!(
                (got - expected).abs() < 1e-6,
                "geodesic {got} vs quaternion {expected}"
            );
            assert!((0.0..=180.0).contains(&got));
            assert_eq!(got, rotation_error(&b, &a));
        }
    }

    #[test]
    fn translation_error_345_triangle() {
        let a = RigidTransform::identity();
        let b = RigidTransform::from_translation(Vector3::new(3.0, 4.0, 0.0));
        assert_eq!(translation_error(&a, &b), 5.0);
        assert_eq!(translation_error(&a, &a), 0.0);
    }

    #[test]
    fn translation_error_matches_componentwise_norm() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for _ in 0..100 {
            let a = random_transform(&mut rng);
            let b = random_transform(&mut rng);
            let d = a.translation() - b.translation();
            let expected = (d.x * d.x + d.y * d.y + d.z * d.z).sqrt();
            assert_relative_eq!(translation_error(&a, &b), expected, epsilon = 1e-12);
            assert_eq!(translation_error(&a, &b), translation_error(&b, &a));
        }
    }

    #[test]
    fn euler_identity_and_axis_aligned() {
        let id = euler_decompose(&Matrix3::identity());
        assert_eq!(id.angles, [0.0, 0.0, 0.0]);
        assert!(!id.gimbal_lock);

        let r = euler_recompose(&[90.0, 0.0, 0.0]);
        let triple = euler_decompose(&r);
        assert_relative_eq!(triple.angles[0], 90.0, epsilon = 1e-9);
        assert_relative_eq!(triple.angles[1], 0.0, epsilon = 1e-9);
        assert_relative_eq!(triple.angles[2], 0.0, epsilon = 1e-9);
    }

    #[test]
    fn euler_round_trip_on_random_rotations() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let mut checked = 0;
        while checked < 500 {
            let r = random_rotation(&mut rng);
            let triple = euler_decompose(&r);
            if triple.gimbal_lock {
                continue;
            }
            let back = euler_recompose(&triple.angles);
            for i in 0..3 {
                for j in 0..3 {
                    assert!(
                        (r[(i, j)] - back[(i, j)]).abs() < 1e-6,
                        "round trip failed at ({i},{j}): {} vs {}",
                        r[(i, j)],
                        back[(i, j)]
                    );
                }
            }
            checked += 1;
        }
    }

    #[test]
    fn euler_gimbal_lock_is_flagged_and_canonicalized() {
        for sign in [1.0, -1.0] {
            let r = euler_recompose(&[37.0, sign * 90.0, 23.0]);
            let triple = euler_decompose(&r);
            assert!(triple.gimbal_lock);
            assert_eq!(triple.angles[2], 0.0);
            // Canonical triple still recomposes to the source matrix.
            let back = euler_recompose(&triple.angles);
            for i in 0..3 {
                for j in 0..3 {
                    assert!((r[(i, j)] - back[(i, j)]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn wrap_angle_covers_boundaries() {
        assert_eq!(wrap_angle_deg(180.0), 180.0);
        assert_eq!(wrap_angle_deg(-180.0), 180.0);
        assert_eq!(wrap_angle_deg(540.0), 180.0);
        assert_eq!(wrap_angle_deg(190.0), -170.0);
        assert_eq!(wrap_angle_deg(-190.0), 170.0);
        assert_eq!(wrap_angle_deg(0.0), 0.0);
    }

    fn assert_transforms_equal(a: &RigidTransform, b: &RigidTransform, tol: f64) {
        for i in 0..3 {
            for j in 0..3 {
                assert!(
                    (a.rotation()[(i, j)] - b.rotation()[(i, j)]).abs() < tol,
                    "rotation entry ({i},{j}) differs"
                );
            }
        }
        assert!(translation_error(a, b) < tol);
    }

    #[test]
    fn alignment_reproduces_reference_pose() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        for _ in 0..100 {
            let reference = random_transform(&mut rng);
            let gt = random_transform(&mut rng);
            let align = alignment_transform(&reference, &gt);
            let recovered = compose(&align, &gt);
            assert_transforms_equal(&recovered, &reference, 1e-9);
        }
        let t = random_transform(&mut rng);
        let align = alignment_transform(&t, &t);
        assert_transforms_equal(&align, &RigidTransform::identity(), 1e-9);
    }

    #[test]
    fn alignment_preserves_errors_over_random_triples() {
        let mut rng = ChaCha20Rng::seed_from_u64(10);
        for _ in 0..1000 {
            let reference = random_transform(&mut rng);
            let gt = random_transform(&mut rng);
            let est = random_transform(&mut rng);
            let align = alignment_transform(&reference, &gt);
            let est_aligned = compose(&align, &est);
            let gt_aligned = compose(&align, &gt);
            let rot_raw = rotation_error(&est, &gt);
            let rot_aligned = rotation_error(&est_aligned, &gt_aligned);
            let trans_raw = translation_error(&est, &gt);
            let trans_aligned = translation_error(&est_aligned, &gt_aligned);
            assert!(
                (rot_raw - rot_aligned).abs() < 1e-9,
                "rotation error changed: {rot_raw} vs {rot_aligned}"
            );
            assert!(
                (trans_raw - trans_aligned).abs() < 1e-9,
                "translation error changed: {trans_raw} vs {trans_aligned}"
            );
        }
    }

    #[test]
    fn add_metric_trivial_cases() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let model = PointSet::box_corners(Vector3::new(20.0, 30.0, 40.0));
        let t = random_transform(&mut rng);
        assert_eq!(add_metric(&t, &t, &model).unwrap(), 0.0);

        let offset = RigidTransform::from_translation(Vector3::new(10.0, 0.0, 0.0));
        let shifted = compose(&offset, &t);
        assert_relative_eq!(add_metric(&t, &shifted, &model).unwrap(), 10.0, epsilon = 1e-9);
    }

    #[test]
    fn add_metric_matches_per_point_brute_force_on_unit_cube() {
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let model = PointSet::box_corners(Vector3::new(0.5, 0.5, 0.5));
        for _ in 0..50 {
            let a = random_transform(&mut rng);
            let b = random_transform(&mut rng);
            let mut total = 0.0;
            for p in model.iter() {
                let pa = a.rotation() * p + a.translation();
                let pb = b.rotation() * p + b.translation();
                let d = pa - pb;
                total += (d.x * d.x + d.y * d.y + d.z * d.z).sqrt();
            }
            let expected = total / 8.0;
            assert_relative_eq!(add_metric(&a, &b, &model).unwrap(), expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn add_metric_is_left_invariant_and_symmetric() {
        let mut rng = ChaCha20Rng::seed_from_u64(13);
        let model = PointSet::box_corners(Vector3::new(35.0, 20.0, 55.0));
        for _ in 0..100 {
            let a = random_transform(&mut rng);
            let b = random_transform(&mut rng);
            let s = random_transform(&mut rng);
            let raw = add_metric(&a, &b, &model).unwrap();
            let moved = add_metric(&compose(&s, &a), &compose(&s, &b), &model).unwrap();
            assert!((raw - moved).abs() < 1e-9, "left invariance: {raw} vs {moved}");
            assert_relative_eq!(raw, add_metric(&b, &a, &model).unwrap(), epsilon = 1e-12);
        }
    }

    #[test]
    fn point_set_rejects_empty_and_subsamples_deterministically() {
        assert!(matches!(
            PointSet::new(vec![]),
            Err(PoseError::EmptyPointSet)
        ));
        let points: Vec<_> = (0..2500)
            .map(|i| Vector3::new(i as f64, 0.0, 0.0))
            .collect();
        let set = PointSet::new(points).unwrap();
        let sub = set.subsampled(1000);
        assert!(sub.len() <= 1000);
        assert_eq!(sub, set.subsampled(1000));
    }

    #[test]
    fn constructor_rejects_bad_rotations() {
        let reflection = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert!(matches!(
            RigidTransform::new(reflection, Vector3::zeros()),
            Err(PoseError::Reflection { .. })
        ));
        let skewed = Matrix3::identity() * 1.001;
        assert!(RigidTransform::new(skewed, Vector3::zeros()).is_err());
        // Projection repairs small drift.
        let repaired = RigidTransform::project(skewed, Vector3::zeros()).unwrap();
        assert!(orthonormality_drift(repaired.rotation()) < 1e-12);
    }

    #[test]
    fn nearest_rotation_recovers_noisy_rotation() {
        let mut rng = ChaCha20Rng::seed_from_u64(14);
        for _ in 0..50 {
            let r = random_rotation(&mut rng);
            let mut noisy = r;
            for i in 0..3 {
                for j in 0..3 {
                    noisy[(i, j)] += rng.gen_range(-1e-5..1e-5);
                }
            }
            let projected = nearest_rotation(&noisy).unwrap();
            assert!(orthonormality_drift(&projected) < 1e-12);
            for i in 0..3 {
                for j in 0..3 {
                    assert!((projected[(i, j)] - r[(i, j)]).abs() < 1e-4);
                }
            }
        }
    }
}
