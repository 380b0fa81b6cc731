//! Road gradient of the ego vehicle from two odometry rotations.
//!
//! The ground normal is taken from the rotation at an earlier time point and
//! compared with the current driving direction; the gradient is the angle by
//! which the direction leaves the plane orthogonal to that normal. A pitch
//! that raises the optical axis (toward -y) yields a positive gradient.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::geometry::{Mat3, Vec3};
use crate::scalar::Scalar;
use crate::types::PoseSample;

/// Allowed deviation from unit length for [`road_gradient`] inputs.
pub const UNIT_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradientEstimatorConfig<T> {
    /// Seconds between the "previous" and "current" pose.
    pub time_interval: T,
    /// Initial camera pitch, radians.
    pub theta_0: T,
}

impl<T: Scalar> GradientEstimatorConfig<T> {
    pub fn new(time_interval: T, theta_0: T) -> Result<Self> {
        if !(time_interval.is_finite() && time_interval > T::zero()) {
            return Err(Error::invariant("time_interval > 0"));
        }
        if !(theta_0.is_finite() && theta_0.abs() < T::FRAC_PI_2()) {
            return Err(Error::invariant("|theta_0| < pi/2"));
        }
        Ok(Self { time_interval, theta_0 })
    }
}

impl<T: Scalar> Default for GradientEstimatorConfig<T> {
    fn default() -> Self {
        Self { time_interval: T::one(), theta_0: T::zero() }
    }
}

/// Ground normal at the start of the sequence: `(0, -cos θ0, -sin θ0)`.
pub fn initial_normal<T: Scalar>(theta_0: T) -> Vec3<T> {
    let (s, c) = theta_0.sin_cos();
    Vec3::new(T::zero(), -c, -s)
}

/// Ground normal at the previous time point.
pub fn ground_normal<T: Scalar>(delta_r_prev: &Mat3<T>, theta_0: T) -> Vec3<T> {
    *delta_r_prev * initial_normal(theta_0)
}

/// Current driving direction: the rotated optical axis.
pub fn ego_direction<T: Scalar>(delta_r_curr: &Mat3<T>) -> Vec3<T> {
    *delta_r_curr * Vec3::new(T::zero(), T::zero(), T::one())
}

/// `π/2 − arccos(nᵀ d)`, with the dot product clamped to `[-1, 1]`.
pub fn road_gradient<T: Scalar>(normal: &Vec3<T>, direction: &Vec3<T>) -> Result<T> {
    let tol = T::lit(UNIT_TOL);
    for v in [normal, direction] {
        let norm = v.norm();
        if norm.is_nan() || (norm - T::one()).abs() > tol {
            return Err(Error::NonUnitInput { norm: norm.to_f64_lossy() });
        }
    }
    let cos = normal.dot(direction).max(-T::one()).min(T::one());
    Ok(T::FRAC_PI_2() - cos.acos())
}

/// Chronological buffer of pose samples for one sequence.
///
/// Keeps roughly two intervals of history; older samples are evicted from
/// the front as new ones arrive.
#[derive(Clone, Debug)]
pub struct PoseHistory<T> {
    samples: VecDeque<PoseSample<T>>,
    retention: T,
}

impl<T: Scalar> PoseHistory<T> {
    pub fn new(cfg: &GradientEstimatorConfig<T>) -> Self {
        Self { samples: VecDeque::new(), retention: cfg.time_interval * T::lit(2.0) }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn newest(&self) -> Option<&PoseSample<T>> {
        self.samples.back()
    }

    pub fn oldest(&self) -> Option<&PoseSample<T>> {
        self.samples.front()
    }

    pub fn iter(&self) -> impl Iterator<Item = &PoseSample<T>> {
        self.samples.iter()
    }

    /// Appends a sample; timestamps and frame indices must strictly increase.
    pub fn push(&mut self, sample: PoseSample<T>) -> Result<()> {
        if let Some(last) = self.samples.back() {
            if sample.frame_index <= last.frame_index {
                return Err(Error::OutOfOrderFrame { last: last.frame_index, got: sample.frame_index });
            }
            if sample.timestamp <= last.timestamp {
                return Err(Error::invariant(format!(
                    "timestamps strictly increase (frame {} at {} after {})",
                    sample.frame_index, sample.timestamp, last.timestamp
                )));
            }
        }
        let horizon = sample.timestamp - self.retention;
        self.samples.push_back(sample);
        while self.samples.len() > 1 && self.samples[0].timestamp < horizon {
            self.samples.pop_front();
        }
        Ok(())
    }

    /// Sample whose timestamp is closest to `t`; ties go to the older one.
    pub fn nearest(&self, t: T) -> Option<&PoseSample<T>> {
        self.samples.iter().fold(None, |best: Option<&PoseSample<T>>, s| match best {
            Some(b) if (b.timestamp - t).abs() <= (s.timestamp - t).abs() => Some(b),
            _ => Some(s),
        })
    }
}

/// Ego gradient at the newest sample in `history`, or `None` while no
/// sample at least half an interval old is available.
pub fn estimate_theta<T: Scalar>(history: &PoseHistory<T>, cfg: &GradientEstimatorConfig<T>) -> Option<T> {
    let curr = history.newest()?;
    let now = curr.timestamp;
    let oldest = history.oldest()?;
    if oldest.timestamp > now - cfg.time_interval * T::lit(0.5) {
        return None;
    }
    let prev = history.nearest(now - cfg.time_interval)?;
    let normal = ground_normal(prev.delta_r(), cfg.theta_0);
    let direction = ego_direction(curr.delta_r());
    // Both vectors are rotations of unit vectors, so this only fails on
    // pathological input that slipped past pose validation.
    road_gradient(&normal, &direction).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pose(frame: u64, t: f64, r: Mat3<f64>) -> PoseSample<f64> {
        PoseSample::from_rotation(frame, t, r).unwrap()
    }

    #[test]
    fn initial_normal_flat_camera() {
        assert_eq!(initial_normal(0.0_f64), Vec3::new(0.0, -1.0, 0.0));
    }

    #[test]
    fn initial_normal_is_unit() {
        for theta in [-1.2_f64, -0.3, 0.0, 0.1, 1.5] {
            assert!((initial_normal(theta).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn road_gradient_flat_and_vertical() {
        let n = Vec3::new(0.0_f64, -1.0, 0.0);
        assert_eq!(road_gradient(&n, &Vec3::new(0.0, 0.0, 1.0)).unwrap(), 0.0);
        let vertical = road_gradient(&n, &n).unwrap();
        assert!((vertical - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn road_gradient_rejects_non_unit() {
        let n = Vec3::new(0.0_f64, -1.0, 0.0);
        let d = Vec3::new(0.0, 0.0, 1.1);
        assert!(matches!(road_gradient(&n, &d), Err(Error::NonUnitInput { .. })));
    }

    #[test]
    fn zero_interval_gives_zero_gradient() {
        let cfg = GradientEstimatorConfig::default();
        let mut h = PoseHistory::new(&cfg);
        h.push(pose(0, 0.0, Mat3::identity())).unwrap();
        h.push(pose(1, 1.0, Mat3::identity())).unwrap();
        assert_eq!(estimate_theta(&h, &cfg), Some(0.0));
    }

    #[test]
    fn short_history_reports_none() {
        let cfg = GradientEstimatorConfig::default();
        let mut h = PoseHistory::new(&cfg);
        h.push(pose(0, 0.8, Mat3::identity())).unwrap();
        h.push(pose(1, 1.0, Mat3::rot_x(0.05))).unwrap();
        assert_eq!(estimate_theta(&h, &cfg), None);
        assert_eq!(estimate_theta(&PoseHistory::new(&cfg), &cfg), None);
    }

    #[test]
    fn half_interval_boundary_is_usable() {
        let cfg = GradientEstimatorConfig::default();
        let mut h = PoseHistory::new(&cfg);
        h.push(pose(0, 0.5, Mat3::identity())).unwrap();
        h.push(pose(1, 1.0, Mat3::rot_x(0.05))).unwrap();
        let theta = estimate_theta(&h, &cfg).unwrap();
        assert!((theta - 0.05).abs() < 1e-12);
    }

    #[test]
    fn history_rejects_non_increasing_samples() {
        let cfg = GradientEstimatorConfig::default();
        let mut h = PoseHistory::new(&cfg);
        h.push(pose(5, 1.0, Mat3::identity())).unwrap();
        assert!(matches!(h.push(pose(5, 2.0, Mat3::identity())), Err(Error::OutOfOrderFrame { .. })));
        assert!(h.push(pose(6, 1.0, Mat3::identity())).is_err());
    }

    #[test]
    fn history_evicts_only_old_samples() {
        let cfg = GradientEstimatorConfig::default();
        let mut h = PoseHistory::new(&cfg);
        for k in 0..300u64 {
            h.push(pose(k, k as f64 / 30.0, Mat3::identity())).unwrap();
        }
        let newest = h.newest().unwrap().timestamp;
        assert!(h.oldest().unwrap().timestamp >= newest - 2.0 - 1e-12);
        assert!(h.len() <= 62);
        let ts: Vec<f64> = h.iter().map(|s| s.timestamp).collect();
        assert!(ts.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn nearest_prefers_older_on_tie() {
        let cfg = GradientEstimatorConfig::default();
        let mut h = PoseHistory::new(&cfg);
        h.push(pose(0, 0.0, Mat3::identity())).unwrap();
        h.push(pose(1, 0.2, Mat3::identity())).unwrap();
        assert_eq!(h.nearest(0.1).unwrap().frame_index, 0);
        assert_eq!(h.nearest(0.15).unwrap().frame_index, 1);
    }

    #[test]
    fn config_rejects_bad_interval() {
        assert!(GradientEstimatorConfig::new(0.0_f64, 0.0).is_err());
        assert!(GradientEstimatorConfig::new(1.0_f64, 2.0).is_err());
    }
}
