#![allow(dead_code)]

use monodist::distance::{run_sequence, PipelineOptions};
use monodist::eval::join;
use monodist::io::TruthRow;
use monodist::simulator::{generate, ElevationProfile, Scenario};
use monodist::types::CameraCalibration;

pub const EGO_SPEED: f64 = 16.67;

/// 1920x1080 camera, focal 1700 px, mounted 1.5 m above the road.
pub fn hd_calibration() -> CameraCalibration<f64> {
    CameraCalibration::new(0.0034, 2e-6, 1.5, 540.0, 0.0, 1920, 1080).unwrap()
}

/// 1024x368 camera with focal 1000 px used by the worked examples.
pub fn small_calibration() -> CameraCalibration<f64> {
    CameraCalibration::new(0.004, 4e-6, 1.5, 184.0, 0.0, 1024, 368).unwrap()
}

/// Ego and target on one straight road of the given gradient; the gap
/// grows linearly from `gap_start` to `gap_end` over `duration` seconds.
pub fn same_plane_scenario(gradient_rad: f64, gap_start: f64, gap_end: f64, duration: f64) -> Scenario {
    let profile = ElevationProfile::constant(1000.0, gradient_rad).unwrap();
    let closing = (gap_end - gap_start) / duration;
    Scenario::new(profile, hd_calibration(), EGO_SPEED, gap_start, EGO_SPEED + closing, 30.0, duration)
}

pub fn slope_transition_scenario() -> Scenario {
    monodist::io::parse_scenario("demo", monodist::cli::DEMO_SCENARIO).unwrap()
}

/// Matched `(estimate, truth)` pairs for a scenario, with or without the
/// plane correction.
pub fn closed_loop_pairs(scenario: &Scenario, adjust: bool) -> Vec<(f64, f64)> {
    let out = generate(scenario).unwrap();
    let mut options = PipelineOptions::for_calibration(&scenario.calib);
    options.adjust = adjust;
    let run = run_sequence(scenario.calib, options, &out.poses, &out.detections).unwrap();
    let truth: Vec<TruthRow> = out
        .truth
        .iter()
        .map(|t| TruthRow { frame_index: t.frame_index, track_id: None, distance_m: t.true_distance_m })
        .collect();
    join(&run.estimates, &truth).pairs
}

pub fn rmse(pairs: &[(f64, f64)]) -> f64 {
    (pairs.iter().map(|(e, t)| (e - t).powi(2)).sum::<f64>() / pairs.len() as f64).sqrt()
}
