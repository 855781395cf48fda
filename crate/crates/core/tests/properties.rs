//! Property tests over the library invariants.

use std::collections::BTreeMap;

use graspcast_core::baseline::{optimal_threshold, threshold_accuracy};
use graspcast_core::dataset::{stratified_split, EstimatorId, GripperId, JoinedSample, Split};
use graspcast_core::pose::{
    add_metric, compose, euler_recompose, rotation_error, wrap_angle_deg, PointSet,
    RigidTransform,
};
use nalgebra::Vector3;
use proptest::prelude::*;

fn transform_from(angles: [f64; 3], t: [f64; 3]) -> RigidTransform {
    RigidTransform::new(euler_recompose(&angles), Vector3::new(t[0], t[1], t[2])).unwrap()
}

fn arb_transform() -> impl Strategy<Value = RigidTransform> {
    (
        [-179.0f64..179.0, -89.0f64..89.0, -179.0f64..179.0],
        [-500.0f64..500.0, -500.0f64..500.0, -500.0f64..500.0],
    )
        .prop_map(|(angles, t)| transform_from(angles, t))
}

proptest! {
    #[test]
    fn wrap_angle_stays_in_half_open_range(angle in -1e6f64..1e6) {
        let wrapped = wrap_angle_deg(angle);
        prop_assert!(wrapped > -180.0 && wrapped <= 180.0);
        // Wrapping is periodic with period 360.
        let again = wrap_angle_deg(angle + 360.0);
        prop_assert!((wrapped - again).abs() < 1e-6);
    }

    #[test]
    fn rotation_error_symmetric_and_bounded(a in arb_transform(), b in arb_transform()) {
        let e = rotation_error(&a, &b);
        prop_assert!((0.0..=180.0).contains(&e));
        prop_assert_eq!(e, rotation_error(&b, &a));
    }

    #[test]
    fn add_metric_left_invariant(
        a in arb_transform(),
        b in arb_transform(),
        s in arb_transform(),
    ) {
        let model = PointSet::box_corners(Vector3::new(30.0, 20.0, 40.0));
        let raw = add_metric(&a, &b, &model).unwrap();
        let moved = add_metric(&compose(&s, &a), &compose(&s, &b), &model).unwrap();
        prop_assert!((raw - moved).abs() < 1e-9);
    }

    #[test]
    fn threshold_sweep_is_optimal(
        scores in proptest::collection::vec(0.0f64..100.0, 1..40),
        label_bits in proptest::collection::vec(any::<bool>(), 40),
    ) {
        let labels: Vec<bool> = scores.iter().zip(&label_bits).map(|(_, b)| *b).collect();
        let (threshold, accuracy) = optimal_threshold(&scores, &labels).unwrap();
        prop_assert_eq!(accuracy, threshold_accuracy(&scores, &labels, threshold));
        // No other cut point between observed scores can do better.
        let mut sorted = scores.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        sorted.dedup();
        for w in sorted.windows(2) {
            let candidate = 0.5 * (w[0] + w[1]);
            prop_assert!(threshold_accuracy(&scores, &labels, candidate) <= accuracy);
        }
    }

    #[test]
    fn split_partitions_every_sample(
        sizes in proptest::collection::vec((0usize..30, 0usize..30), 1..4),
        seed in any::<u64>(),
    ) {
        let mut samples = Vec::new();
        let mut image = 0u32;
        for (object_idx, (succ, fail)) in sizes.iter().enumerate() {
            for i in 0..(succ + fail) {
                samples.push(JoinedSample {
                    object_id: object_idx as u32 + 1,
                    scene_id: 1,
                    image_id: image,
                    gripper_id: GripperId::new("parallel").unwrap(),
                    principal_id: EstimatorId::new("alpha").unwrap(),
                    poses: BTreeMap::new(),
                    label: i < *succ,
                });
                image += 1;
            }
        }
        prop_assume!(!samples.is_empty());
        let outcome = stratified_split(&samples, 0.8, seed).unwrap();
        prop_assert_eq!(outcome.assignment.len(), samples.len());
        let train = outcome.assignment.count(Split::Train);
        let test = outcome.assignment.count(Split::Test);
        prop_assert_eq!(train + test, samples.len());
        for sample in &samples {
            prop_assert!(outcome.assignment.get(&sample.key()).is_some());
        }
        // Strata of at least 2 samples keep a non-empty test side within
        // one sample of the 80/20 point.
        let mut strata: BTreeMap<(u32, bool), (usize, usize)> = BTreeMap::new();
        for sample in &samples {
            let entry = strata.entry((sample.object_id, sample.label)).or_default();
            match outcome.assignment.get(&sample.key()).unwrap() {
                Split::Train => entry.0 += 1,
                Split::Test => entry.1 += 1,
            }
        }
        for ((object, label), (train_n, test_n)) in strata {
            let n = train_n + test_n;
            if n >= 2 {
                prop_assert!(test_n >= 1, "object {object} label {label}: empty test side");
                let ideal = n as f64 * 0.8;
                prop_assert!(
                    (train_n as f64 - ideal).abs() <= 1.0,
                    "object {object} label {label}: train {train_n} vs ideal {ideal}"
                );
            }
        }
    }
}
