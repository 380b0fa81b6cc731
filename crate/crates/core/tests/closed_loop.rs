//! Simulator -> pipeline -> evaluation on synthetic roads.

mod common;

use common::{closed_loop_pairs, rmse, same_plane_scenario, slope_transition_scenario, EGO_SPEED};
use monodist::distance::{run_sequence, PipelineOptions};
use monodist::simulator::{generate, ElevationProfile, Scenario};
use monodist::types::Flag;

#[test]
fn same_plane_error_is_within_two_percent() {
    for grad_deg in [0.0f64, 3.0, -3.0] {
        let pairs = closed_loop_pairs(&same_plane_scenario(grad_deg.to_radians(), 8.0, 50.0, 10.0), true);
        assert!(pairs.len() > 250);
        for (e, t) in pairs {
            assert!((e - t).abs() / t <= 0.02, "{grad_deg} deg: estimate {e} truth {t}");
        }
    }
}

#[test]
fn equal_speeds_on_constant_slope_keep_truth_constant() {
    let sc = Scenario::new(
        ElevationProfile::constant(1000.0, 0.08).unwrap(),
        common::hd_calibration(),
        EGO_SPEED,
        25.0,
        EGO_SPEED,
        30.0,
        5.0,
    );
    let out = generate(&sc).unwrap();
    let first = out.truth[0].true_distance_m;
    for t in &out.truth {
        assert!((t.true_distance_m - first).abs() < 1e-9);
        assert!(t.on_same_plane);
    }
}

#[test]
fn poses_from_simulator_are_rotations() {
    let out = generate(&slope_transition_scenario()).unwrap();
    for p in &out.poses {
        let r = *p.delta_r();
        assert!(r.orthonormality_residual() < 1e-9);
        assert!((r.determinant() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn uphill_target_pulls_plane_difference_negative() {
    let sc = slope_transition_scenario();
    let out = generate(&sc).unwrap();
    let run = run_sequence(sc.calib, PipelineOptions::for_calibration(&sc.calib), &out.poses, &out.detections).unwrap();
    let dy = |same_plane: bool| -> Vec<f64> {
        run.estimates
            .iter()
            .zip(&out.truth)
            .filter(|(_, t)| t.on_same_plane == same_plane)
            .filter_map(|(e, _)| e.delta_y_px())
            .collect()
    };
    let split = dy(false);
    assert!(!split.is_empty());
    let min_split = split.iter().cloned().fold(f64::INFINITY, f64::min);
    let min_same = dy(true).iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(min_split < min_same, "{min_split} vs {min_same}");
    assert!(run.estimates.iter().any(|e| e.flag == Flag::AdjustedA3));
}

#[test]
fn correction_reduces_error_across_slope_transition() {
    let sc = slope_transition_scenario();
    let adjusted = rmse(&closed_loop_pairs(&sc, true));
    let ablated = rmse(&closed_loop_pairs(&sc, false));
    assert!(adjusted < ablated, "{adjusted} vs {ablated}");
}

#[test]
fn seeded_runs_are_reproducible() {
    let mut sc = same_plane_scenario(0.0, 8.0, 30.0, 3.0);
    sc.pixel_noise_sigma = 2.0;
    sc.seed = 42;
    let a = generate(&sc).unwrap();
    let b = generate(&sc).unwrap();
    assert_eq!(a.detections, b.detections);
    assert_eq!(a.truth, b.truth);
    sc.seed = 43;
    assert_ne!(generate(&sc).unwrap().detections, a.detections);
}

#[test]
fn warm_up_frames_carry_no_distance() {
    let sc = same_plane_scenario(0.0, 10.0, 20.0, 2.0);
    let out = generate(&sc).unwrap();
    let run = run_sequence(sc.calib, PipelineOptions::for_calibration(&sc.calib), &out.poses, &out.detections).unwrap();
    // the first half interval at 30 fps
    let warm: Vec<_> = run.estimates.iter().filter(|e| e.flag == Flag::NoPoseHistory).collect();
    assert_eq!(warm.len(), 15);
    assert!(warm.iter().all(|e| e.distance_m.is_none() && e.frame_index < 15));
}
