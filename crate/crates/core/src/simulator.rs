//! Synthetic driving scenarios with exact ground truth.
//!
//! The world is a vertical slice: a horizontal station axis and an
//! elevation axis, with a piecewise-linear road. The ego camera rides at
//! height `h` above the road along the local road normal with its optical
//! axis parallel to the road. The target is a `width x height` rectangle
//! standing perpendicular to its own road segment, centered on the camera
//! axis laterally.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geometry::Mat3;
use crate::types::{BBox, CameraCalibration, Detection, PoseSample};

const SAME_PLANE_TOL: f64 = 1e-9;

/// Piecewise-linear road elevation over a horizontal station axis.
#[derive(Clone, Debug, PartialEq)]
pub struct ElevationProfile {
    knots: Vec<(f64, f64)>,
}

impl ElevationProfile {
    /// `knots` are `(station_m, elevation_m)` pairs with strictly increasing
    /// stations.
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidScenario("profile needs at least two knots".into()));
        }
        if knots.iter().any(|(s, z)| !s.is_finite() || !z.is_finite()) {
            return Err(Error::InvalidScenario("profile knots must be finite".into()));
        }
        if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidScenario("knot stations must strictly increase".into()));
        }
        Ok(Self { knots })
    }

    /// A single straight segment of the given gradient (radians).
    pub fn constant(length_m: f64, gradient: f64) -> Result<Self> {
        Self::new(vec![(0.0, 0.0), (length_m, length_m * gradient.tan())])
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn range(&self) -> (f64, f64) {
        (self.knots[0].0, self.knots[self.knots.len() - 1].0)
    }

    fn segment(&self, s: f64) -> Result<usize> {
        let (min, max) = self.range();
        if !(min..=max).contains(&s) {
            return Err(Error::OutOfRange { station: s, min, max });
        }
        // index of the last knot at or before s, clamped to a valid segment start
        let i = self.knots.partition_point(|k| k.0 <= s);
        Ok(i.saturating_sub(1).min(self.knots.len() - 2))
    }

    fn slope(&self, i: usize) -> f64 {
        let (a, b) = (self.knots[i], self.knots[i + 1]);
        (b.1 - a.1) / (b.0 - a.0)
    }

    /// Elevation and gradient (radians, uphill positive) at station `s`.
    /// At an interior knot the gradient of the segment ahead is returned.
    pub fn elevation(&self, s: f64) -> Result<(f64, f64)> {
        let i = self.segment(s)?;
        let slope = self.slope(i);
        let (s0, z0) = self.knots[i];
        Ok((z0 + slope * (s - s0), slope.atan()))
    }

    /// Length of road between stations `a <= b`, measured along the surface.
    pub fn arc_length(&self, a: f64, b: f64) -> Result<f64> {
        let (ia, ib) = (self.segment(a)?, self.segment(b)?);
        let mut total = 0.0;
        for i in ia..=ib {
            let lo = if i == ia { a } else { self.knots[i].0 };
            let hi = if i == ib { b } else { self.knots[i + 1].0 };
            total += (hi - lo) * self.slope(i).hypot(1.0);
        }
        Ok(total)
    }

    /// Whether the road between stations `a <= b` is a single plane.
    pub fn is_planar_between(&self, a: f64, b: f64) -> Result<bool> {
        let (ia, ib) = (self.segment(a)?, self.segment(b)?);
        let g = self.slope(ia).atan();
        Ok((ia..=ib).all(|i| (self.slope(i).atan() - g).abs() <= SAME_PLANE_TOL))
    }
}

/// Scenario parameters. Ego and target positions are `speed * t` in
/// station units.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub profile: ElevationProfile,
    pub ego_speed: f64,
    pub frame_rate: f64,
    pub duration: f64,
    pub target_lead: f64,
    pub target_speed: f64,
    pub calib: CameraCalibration<f64>,
    pub pixel_noise_sigma: f64,
    pub target_height: f64,
    pub target_width: f64,
    pub seed: u64,
}

impl Scenario {
    /// Scenario with the default target size, no noise and seed 0.
    pub fn new(
        profile: ElevationProfile,
        calib: CameraCalibration<f64>,
        ego_speed: f64,
        target_lead: f64,
        target_speed: f64,
        frame_rate: f64,
        duration: f64,
    ) -> Self {
        Self {
            profile,
            ego_speed,
            frame_rate,
            duration,
            target_lead,
            target_speed,
            calib,
            pixel_noise_sigma: 0.0,
            target_height: 1.5,
            target_width: 1.8,
            seed: 0,
        }
    }

    pub fn frame_count(&self) -> u64 {
        ((self.duration * self.frame_rate).round() as u64).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidScenario(m.into()));
        let finite = [
            self.ego_speed,
            self.frame_rate,
            self.duration,
            self.target_lead,
            self.target_speed,
            self.pixel_noise_sigma,
            self.target_height,
            self.target_width,
        ];
        if finite.iter().any(|x| !x.is_finite()) {
            return bad("parameters must be finite");
        }
        if self.ego_speed < 0.0 || self.target_speed < 0.0 {
            return bad("speeds must be >= 0");
        }
        if self.frame_rate <= 0.0 {
            return bad("frame_rate must be > 0");
        }
        if self.duration <= 0.0 {
            return bad("duration must be > 0");
        }
        if self.target_lead <= 0.0 {
            return bad("target_lead must be > 0");
        }
        if self.target_height <= 0.0 || self.target_width <= 0.0 {
            return bad("target dimensions must be > 0");
        }
        if self.pixel_noise_sigma < 0.0 {
            return bad("pixel_noise_sigma must be >= 0");
        }
        if self.calib.theta_0() != 0.0 {
            return bad("simulated camera is mounted level (theta_0 = 0)");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroundTruthRecord {
    pub frame_index: u64,
    /// Along-road distance from the ego ground contact to the target's
    /// rear-bottom midpoint.
    pub true_distance_m: f64,
    /// Straight-line camera-center to target rear-bottom midpoint.
    pub euclid_distance_m: f64,
    pub true_theta_ego_rad: f64,
    pub true_theta_target_rad: f64,
    pub on_same_plane: bool,
}

#[derive(Clone, Debug)]
pub struct SimulationOutput {
    pub poses: Vec<PoseSample<f64>>,
    pub detections: Vec<Detection<f64>>,
    pub truth: Vec<GroundTruthRecord>,
    pub warnings: Vec<String>,
}

/// Point in the vertical slice: (station, elevation).
type P2 = (f64, f64);

fn dot(a: P2, b: P2) -> f64 {
    a.0 * b.0 + a.1 * b.1
}

/// Camera frame of the ego at one instant.
struct CameraFrame {
    center: P2,
    forward: P2,
    down: P2,
}

impl CameraFrame {
    fn on_road(ground: P2, gradient: f64, h: f64) -> Self {
        let (s, c) = gradient.sin_cos();
        Self { center: (ground.0 - h * s, ground.1 + h * c), forward: (c, s), down: (s, -c) }
    }

    /// (depth, downward offset) of a world point in camera coordinates.
    fn to_camera(&self, p: P2) -> (f64, f64) {
        let r = (p.0 - self.center.0, p.1 - self.center.1);
        (dot(r, self.forward), dot(r, self.down))
    }
}

/// Generates poses, detections and ground truth for every frame.
pub fn generate(scenario: &Scenario) -> Result<SimulationOutput> {
    scenario.validate()?;
    let calib = &scenario.calib;
    let profile = &scenario.profile;
    let focal = calib.focal_px();
    let c_x = calib.image_width() as f64 / 2.0;
    let c_y = calib.c_y();
    let (w_img, h_img) = (calib.image_width() as f64, calib.image_height() as f64);
    let half_w = scenario.target_width / 2.0;

    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let noise = Normal::new(0.0, scenario.pixel_noise_sigma)
        .map_err(|e| Error::InvalidScenario(format!("pixel noise: {e}")))?;

    let n = scenario.frame_count();
    let (_, gradient_0) = profile.elevation(0.0_f64.max(profile.range().0))?;
    let mut out =
        SimulationOutput { poses: Vec::new(), detections: Vec::new(), truth: Vec::new(), warnings: Vec::new() };

    for k in 0..n {
        let t = k as f64 / scenario.frame_rate;
        let s_e = scenario.ego_speed * t;
        let s_t = scenario.target_lead + scenario.target_speed * t;
        if s_t <= s_e {
            return Err(Error::TargetBehindCamera(k));
        }
        let (z_e, g_e) = profile.elevation(s_e)?;
        let (z_t, g_t) = profile.elevation(s_t)?;

        out.poses.push(PoseSample::from_rotation(k, t, Mat3::rot_x(g_e - gradient_0))?);

        let cam = CameraFrame::on_road((s_e, z_e), g_e, calib.h());
        let bottom = (s_t, z_t);
        let (st, ct) = g_t.sin_cos();
        let top = (s_t - scenario.target_height * st, z_t + scenario.target_height * ct);
        let (depth_b, down_b) = cam.to_camera(bottom);
        let (depth_t, down_t) = cam.to_camera(top);
        if depth_b <= 0.0 || depth_t <= 0.0 {
            return Err(Error::TargetBehindCamera(k));
        }
        let y_b = c_y + focal * down_b / depth_b;
        let y_t = c_y + focal * down_t / depth_t;
        let half_px = focal * half_w / depth_b.min(depth_t);
        let mut bbox = [c_x - half_px, y_b.min(y_t), c_x + half_px, y_b.max(y_t)];
        if scenario.pixel_noise_sigma > 0.0 {
            bbox.iter_mut().for_each(|x| *x += noise.sample(&mut rng));
        }
        let [x_min, y_min, x_max, y_max] = bbox.map(f64::round);
        let inside = x_min >= 0.0 && y_min >= 0.0 && x_max <= w_img - 1.0 && y_max <= h_img - 1.0;
        if inside && x_min < x_max && y_min < y_max {
            let b = BBox { x_min, y_min, x_max, y_max };
            out.detections.push(Detection::new(k, 0, b, calib.image_width(), calib.image_height())?);
        }

        out.truth.push(GroundTruthRecord {
            frame_index: k,
            true_distance_m: profile.arc_length(s_e, s_t)?,
            euclid_distance_m: (bottom.0 - cam.center.0).hypot(bottom.1 - cam.center.1),
            true_theta_ego_rad: g_e,
            true_theta_target_rad: g_t,
            on_same_plane: profile.is_planar_between(s_e, s_t)?,
        });
    }

    let visible = out.detections.len() as f64 / n as f64;
    if visible < 0.8 {
        out.warnings.push(format!(
            "target visible in only {:.1}% of frames ({} of {})",
            visible * 100.0,
            out.detections.len(),
            n
        ));
    }
    Ok(out)
}
