//! Pinhole ground-plane distance and the per-frame estimation pipeline.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use crate::ego_gradient::{estimate_theta, GradientEstimatorConfig, PoseHistory};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::target_adjust::{adjust_theta, plane_difference, vanishing_line, AdjustmentPolicy};
use crate::types::{CameraCalibration, Detection, DistanceEstimate, Flag, Geometry, PoseSample};

/// Minimum gap in pixels between target bottom and vanishing line.
pub const DEFAULT_EPSILON_PX: f64 = 1.0;

/// `focal_px · h / (u − v)`. Fails when `u − v <= epsilon_px`.
pub fn pinhole_distance<T: Scalar>(u: T, v: T, calib: &CameraCalibration<T>, epsilon_px: T) -> Result<T> {
    let gap = u - v;
    if gap.is_nan() || gap <= epsilon_px {
        return Err(Error::DegenerateGeometry { gap_px: gap.to_f64_lossy() });
    }
    Ok(calib.focal_px() * calib.h() / gap)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PipelineOptions<T> {
    pub gradient: GradientEstimatorConfig<T>,
    pub policy: AdjustmentPolicy<T>,
    /// When false the plane test is skipped and estimates carry [`Flag::Ok`].
    pub adjust: bool,
    pub epsilon_px: T,
}

impl<T: Scalar> PipelineOptions<T> {
    /// Defaults with the initial pitch taken from the calibration.
    pub fn for_calibration(calib: &CameraCalibration<T>) -> Self {
        Self {
            gradient: GradientEstimatorConfig { time_interval: T::one(), theta_0: calib.theta_0() },
            policy: AdjustmentPolicy::default(),
            adjust: true,
            epsilon_px: T::lit(DEFAULT_EPSILON_PX),
        }
    }

    pub fn without_adjustment(mut self) -> Self {
        self.adjust = false;
        self
    }
}

/// Per-sequence state: calibration, pose history and frame cursor.
#[derive(Clone, Debug)]
pub struct Pipeline<T> {
    calib: CameraCalibration<T>,
    options: PipelineOptions<T>,
    history: PoseHistory<T>,
    last_frame: Option<u64>,
}

impl<T: Scalar> Pipeline<T> {
    pub fn new(calib: CameraCalibration<T>, options: PipelineOptions<T>) -> Self {
        let history = PoseHistory::new(&options.gradient);
        Self { calib, options, history, last_frame: None }
    }

    pub fn calibration(&self) -> &CameraCalibration<T> {
        &self.calib
    }

    pub fn options(&self) -> &PipelineOptions<T> {
        &self.options
    }

    /// Feeds one frame's pose and its detections, returning one estimate per
    /// detection in input order.
    pub fn process_frame(
        &mut self,
        pose: PoseSample<T>,
        detections: &[Detection<T>],
    ) -> Result<Vec<DistanceEstimate<T>>> {
        if let Some(last) = self.last_frame {
            if pose.frame_index <= last {
                return Err(Error::OutOfOrderFrame { last, got: pose.frame_index });
            }
        }
        if let Some(d) = detections.iter().find(|d| d.frame_index != pose.frame_index) {
            return Err(Error::FrameMismatch { pose: pose.frame_index, detection: d.frame_index });
        }
        self.history.push(pose)?;
        self.last_frame = Some(pose.frame_index);

        let theta = estimate_theta(&self.history, &self.options.gradient);
        Ok(detections.iter().map(|d| self.estimate_one(d, theta)).collect())
    }

    fn estimate_one(&self, det: &Detection<T>, theta: Option<T>) -> DistanceEstimate<T> {
        let mut est = DistanceEstimate {
            frame_index: det.frame_index,
            track_id: det.track_id,
            distance_m: None,
            geometry: None,
            flag: Flag::NoPoseHistory,
        };
        let Some(theta) = theta else {
            return est;
        };
        let v = vanishing_line(theta, &self.calib);
        let delta_y = plane_difference(det.b_y(), v);
        let (theta_adjusted, flag) =
            if self.options.adjust { adjust_theta(theta, delta_y, &self.options.policy) } else { (theta, Flag::Ok) };
        let v_adjusted = if theta_adjusted == theta { v } else { vanishing_line(theta_adjusted, &self.calib) };
        est.geometry = Some(Geometry { theta_ego: theta, theta_adjusted, v_line: v, delta_y_px: delta_y });
        match pinhole_distance(det.u(), v_adjusted, &self.calib, self.options.epsilon_px) {
            Ok(d) => {
                est.distance_m = Some(d);
                est.flag = flag;
            }
            Err(_) => est.flag = Flag::DegenerateGeometry,
        }
        est
    }
}

/// Estimates for a whole sequence plus pipeline timing.
#[derive(Clone, Debug)]
pub struct SequenceRun<T> {
    pub estimates: Vec<DistanceEstimate<T>>,
    pub frames: usize,
    pub total_time: Duration,
}

impl<T> SequenceRun<T> {
    /// Mean wall-clock time spent in the pipeline per frame, seconds.
    pub fn mean_frame_time_s(&self) -> f64 {
        if self.frames == 0 {
            0.0
        } else {
            self.total_time.as_secs_f64() / self.frames as f64
        }
    }
}

/// Runs the pipeline over a pose stream. Every detection must reference a
/// frame present in `poses`; poses are processed in the given order.
pub fn run_sequence<T: Scalar>(
    calib: CameraCalibration<T>,
    options: PipelineOptions<T>,
    poses: &[PoseSample<T>],
    detections: &[Detection<T>],
) -> Result<SequenceRun<T>> {
    let mut by_frame: BTreeMap<u64, Vec<Detection<T>>> = BTreeMap::new();
    for d in detections {
        by_frame.entry(d.frame_index).or_default().push(*d);
    }
    let pose_frames: BTreeSet<u64> = poses.iter().map(|p| p.frame_index).collect();
    if let Some(&frame) = by_frame.keys().find(|f| !pose_frames.contains(f)) {
        return Err(Error::MissingPose(frame));
    }

    let mut pipeline = Pipeline::new(calib, options);
    let mut estimates = Vec::with_capacity(detections.len());
    let mut total_time = Duration::ZERO;
    for pose in poses {
        let dets = by_frame.get(&pose.frame_index).map(Vec::as_slice).unwrap_or(&[]);
        let start = Instant::now();
        let out = pipeline.process_frame(*pose, dets)?;
        total_time += start.elapsed();
        estimates.extend(out);
    }
    Ok(SequenceRun { estimates, frames: poses.len(), total_time })
}
