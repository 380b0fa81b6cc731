mod common;

use proptest::prelude::*;

use monodist::distance::pinhole_distance;
use monodist::ego_gradient::{ego_direction, ground_normal, road_gradient};
use monodist::eval::rmse;
use monodist::geometry::Mat3;
use monodist::target_adjust::{adjust_theta, vanishing_line, AdjustmentPolicy};
use monodist::types::{validate_pose, CameraCalibration, Flag};

fn theta_for(delta_prev: &Mat3<f64>, delta_curr: &Mat3<f64>) -> f64 {
    road_gradient(&ground_normal(delta_prev, 0.0), &ego_direction(delta_curr)).unwrap()
}

fn calib(focal_px: f64, h: f64) -> CameraCalibration<f64> {
    CameraCalibration::with_focal_px(focal_px, h, 540.0, 0.0, 1920, 1080).unwrap()
}

proptest! {
    #[test]
    fn pure_pitch_recovers_pitch(phi in -1.2f64..1.2) {
        prop_assert!((theta_for(&Mat3::identity(), &Mat3::rot_x(phi)) - phi).abs() < 1e-9);
    }

    #[test]
    fn yaw_does_not_change_gradient(phi in -0.5f64..0.5, yaw in -3.0f64..3.0) {
        let with_yaw = Mat3::rot_y(yaw) * Mat3::rot_x(phi);
        let a = theta_for(&Mat3::identity(), &with_yaw);
        let b = theta_for(&Mat3::identity(), &Mat3::rot_x(phi));
        prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn gradient_is_finite_and_bounded(
        a in -3.1f64..3.1, b in -3.1f64..3.1, c in -3.1f64..3.1, d in -3.1f64..3.1,
    ) {
        let prev = Mat3::rot_x(a) * Mat3::rot_y(b);
        let curr = Mat3::rot_y(c) * Mat3::rot_x(d);
        let theta = theta_for(&prev, &curr);
        prop_assert!(theta.is_finite());
        prop_assert!(theta.abs() <= std::f64::consts::FRAC_PI_2 + 1e-12);
    }

    #[test]
    fn vanishing_line_inverts_and_decreases(t1 in -1.4f64..1.4, t2 in -1.4f64..1.4) {
        let c = calib(1700.0, 1.5);
        let v = vanishing_line(t1, &c);
        let back = ((c.c_y() - v) / c.focal_px()).atan();
        prop_assert!((back - t1).abs() < 1e-12);
        if t1 < t2 {
            prop_assert!(vanishing_line(t2, &c) < v);
        }
    }

    #[test]
    fn adjustment_is_monotone_in_plane_difference(
        theta in -0.3f64..0.3, a in -60.0f64..60.0, b in -60.0f64..60.0,
    ) {
        let p = AdjustmentPolicy::default();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (t_lo, _) = adjust_theta(theta, lo, &p);
        let (t_hi, _) = adjust_theta(theta, hi, &p);
        prop_assert!(t_lo >= t_hi);
    }

    #[test]
    fn adjustment_partitions_the_line(theta in -0.3f64..0.3, dy in -60.0f64..60.0) {
        let p = AdjustmentPolicy::<f64>::default();
        let (t, flag) = adjust_theta(theta, dy, &p);
        let [a1, a2, a3] = p.alpha();
        let expected = if dy < -20.0 {
            (Flag::AdjustedA3, a3)
        } else if dy <= -10.0 {
            (Flag::AdjustedA2, a2)
        } else if dy <= 0.0 {
            (Flag::AdjustedA1, a1)
        } else {
            (Flag::SamePlane, 0.0)
        };
        prop_assert_eq!(flag, expected.0);
        prop_assert_eq!(t, theta + expected.1);
    }

    #[test]
    fn same_plane_leaves_theta_untouched(theta in -0.3f64..0.3, dy in 1e-9f64..500.0) {
        let p = AdjustmentPolicy::default();
        prop_assert_eq!(adjust_theta(theta, dy, &p), (theta, Flag::SamePlane));
    }

    #[test]
    fn distance_is_linear_in_height(gap in 2.0f64..500.0, h in 0.5f64..3.0, k in 0.1f64..10.0) {
        let d1 = pinhole_distance(540.0 + gap, 540.0, &calib(1700.0, h), 1.0).unwrap();
        let d2 = pinhole_distance(540.0 + gap, 540.0, &calib(1700.0, k * h), 1.0).unwrap();
        prop_assert!((d2 - k * d1).abs() <= 1e-9 * d2.max(1.0));
    }

    #[test]
    fn doubling_the_gap_halves_distance(gap in 2.0f64..250.0) {
        let c = calib(1700.0, 1.5);
        let d1 = pinhole_distance(540.0 + gap, 540.0, &c, 1.0).unwrap();
        let d2 = pinhole_distance(540.0 + 2.0 * gap, 540.0, &c, 1.0).unwrap();
        prop_assert!((d1 - 2.0 * d2).abs() < 1e-9);
    }

    #[test]
    fn raising_theta_shortens_distance(theta in -0.2f64..0.2, alpha in 0.001f64..0.2, u_off in 30.0f64..500.0) {
        let c = calib(1700.0, 1.5);
        let v = vanishing_line(theta, &c);
        let v_adj = vanishing_line(theta + alpha, &c);
        let u = v + u_off;
        let d = pinhole_distance(u, v, &c, 1.0).unwrap();
        let d_adj = pinhole_distance(u, v_adj, &c, 1.0).unwrap();
        prop_assert!(d_adj < d);
    }

    #[test]
    fn rmse_ignores_order_and_scales(
        pairs in prop::collection::vec((0.0f64..100.0, 0.0f64..100.0), 1..40),
        k in 0.1f64..10.0,
    ) {
        let base = rmse(&pairs).unwrap();
        let mut rev = pairs.clone();
        rev.reverse();
        prop_assert!((rmse(&rev).unwrap() - base).abs() <= 1e-12 * base.max(1.0));
        let scaled: Vec<_> = pairs.iter().map(|&(e, t)| (k * e, k * t)).collect();
        prop_assert!((rmse(&scaled).unwrap() - k * base).abs() <= 1e-9 * (k * base).max(1.0));
        prop_assert!(base >= 0.0);
    }

    #[test]
    fn accepted_poses_are_rotations(
        a in -3.1f64..3.1, b in -3.1f64..3.1,
        noise in prop::array::uniform9(-1e-4f64..1e-4),
    ) {
        let mut entries = (Mat3::rot_x(a) * Mat3::rot_y(b)).to_row_major();
        for (e, n) in entries.iter_mut().zip(noise) {
            *e += n;
        }
        if let Ok(p) = validate_pose(0, 0.0, entries) {
            let r = *p.delta_r();
            prop_assert!(r.orthonormality_residual() < 1e-9);
            prop_assert!((r.determinant() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn f32_matches_f64_within_single_precision(phi in -0.5f64..0.5) {
        let t64 = theta_for(&Mat3::identity(), &Mat3::rot_x(phi));
        let t32 = road_gradient(
            &ground_normal(&Mat3::<f32>::identity(), 0.0),
            &ego_direction(&Mat3::<f32>::rot_x(phi as f32)),
        )
        .unwrap();
        prop_assert!((t32 as f64 - t64).abs() < 2e-3);
    }
}

#[test]
fn reflections_are_rejected() {
    let mut entries = Mat3::<f64>::identity().to_row_major();
    entries[8] = -1.0;
    assert!(validate_pose(0, 0.0, entries).is_err());
}
