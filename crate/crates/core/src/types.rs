//! Calibration, pose, detection and estimate records plus their
//! ingestion-time validation.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Mat3;
use crate::scalar::Scalar;

/// Orthonormality residual below which a pose matrix is accepted as is.
pub const ROTATION_ACCEPT_TOL: f64 = 1e-6;
/// Orthonormality residual below which a pose matrix is projected back onto
/// the rotation group instead of being rejected.
pub const ROTATION_REPAIR_TOL: f64 = 1e-3;

/// Focal length as given in the calibration file.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FocalLength<T> {
    /// Focal length in meters and pixel pitch along y in meters per pixel.
    Metric { f: T, delta_y: T },
    /// Focal length already expressed in pixels.
    Pixels(T),
}

/// Pinhole camera calibration: focal length, mounting height, principal
/// point row, initial pitch and image size.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraCalibration<T> {
    focal: FocalLength<T>,
    h: T,
    c_y: T,
    theta_0: T,
    image_width: u32,
    image_height: u32,
}

impl<T: Scalar> CameraCalibration<T> {
    /// Builds and validates a calibration from metric focal length and
    /// pixel pitch.
    pub fn new(f: T, delta_y: T, h: T, c_y: T, theta_0: T, image_width: u32, image_height: u32) -> Result<Self> {
        Self::checked(FocalLength::Metric { f, delta_y }, h, c_y, theta_0, image_width, image_height)
    }

    pub fn with_focal_px(focal_px: T, h: T, c_y: T, theta_0: T, image_width: u32, image_height: u32) -> Result<Self> {
        Self::checked(FocalLength::Pixels(focal_px), h, c_y, theta_0, image_width, image_height)
    }

    fn checked(focal: FocalLength<T>, h: T, c_y: T, theta_0: T, image_width: u32, image_height: u32) -> Result<Self> {
        let positive = |x: T| x.is_finite() && x > T::zero();
        match focal {
            FocalLength::Metric { f, delta_y } => {
                if !positive(f) {
                    return Err(Error::invariant("f > 0"));
                }
                if !positive(delta_y) {
                    return Err(Error::invariant("delta_y > 0"));
                }
            }
            FocalLength::Pixels(px) => {
                if !positive(px) {
                    return Err(Error::invariant("focal_px > 0"));
                }
            }
        }
        if !positive(h) {
            return Err(Error::invariant("h > 0"));
        }
        if image_width == 0 {
            return Err(Error::invariant("image_width > 0"));
        }
        if image_height == 0 {
            return Err(Error::invariant("image_height > 0"));
        }
        if !c_y.is_finite() || c_y < T::zero() {
            return Err(Error::invariant("c_y >= 0"));
        }
        if c_y >= T::lit(image_height as f64) {
            return Err(Error::invariant("c_y < image_height"));
        }
        if !theta_0.is_finite() || theta_0.abs() >= T::FRAC_PI_2() {
            return Err(Error::invariant("|theta_0| < pi/2"));
        }
        Ok(Self { focal, h, c_y, theta_0, image_width, image_height })
    }

    pub fn focal(&self) -> FocalLength<T> {
        self.focal
    }

    /// Focal length in pixels, `f / delta_y`.
    pub fn focal_px(&self) -> T {
        match self.focal {
            FocalLength::Metric { f, delta_y } => f / delta_y,
            FocalLength::Pixels(px) => px,
        }
    }

    /// Camera height above the road, meters.
    pub fn h(&self) -> T {
        self.h
    }

    pub fn c_y(&self) -> T {
        self.c_y
    }

    pub fn theta_0(&self) -> T {
        self.theta_0
    }

    pub fn image_width(&self) -> u32 {
        self.image_width
    }

    pub fn image_height(&self) -> u32 {
        self.image_height
    }

    /// Same calibration with the scalar type converted.
    pub fn cast<U: Scalar>(&self) -> CameraCalibration<U> {
        let c = |x: T| U::lit(x.to_f64_lossy());
        CameraCalibration {
            focal: match self.focal {
                FocalLength::Metric { f, delta_y } => FocalLength::Metric { f: c(f), delta_y: c(delta_y) },
                FocalLength::Pixels(px) => FocalLength::Pixels(c(px)),
            },
            h: c(self.h),
            c_y: c(self.c_y),
            theta_0: c(self.theta_0),
            image_width: self.image_width,
            image_height: self.image_height,
        }
    }
}

const IMAGE_KEYS: [&str; 2] = ["image_width", "image_height"];

/// Validates a raw key/value calibration map.
///
/// Required keys: `f`, `delta_y`, `h`, `c_y`, `theta_0`, `image_width`,
/// `image_height`. `focal_px` may replace the pair `f` + `delta_y`.
pub fn validate_calibration<T: Scalar>(raw: &BTreeMap<String, f64>) -> Result<CameraCalibration<T>> {
    let get = |key: &str| raw.get(key).copied().ok_or_else(|| Error::MissingKey(key.to_string()));
    let focal = if let Some(&px) = raw.get("focal_px") {
        if raw.contains_key("f") || raw.contains_key("delta_y") {
            return Err(Error::invariant("focal_px excludes f and delta_y"));
        }
        FocalLength::Pixels(T::lit(px))
    } else {
        FocalLength::Metric { f: T::lit(get("f")?), delta_y: T::lit(get("delta_y")?) }
    };
    let h = get("h")?;
    let c_y = get("c_y")?;
    let theta_0 = get("theta_0")?;
    let mut dims = [0u32; 2];
    for (slot, key) in dims.iter_mut().zip(IMAGE_KEYS) {
        let value = get(key)?;
        if value.fract() != 0.0 || !(1.0..=u32::MAX as f64).contains(&value) {
            return Err(Error::invariant(format!("{key} is a positive integer")));
        }
        *slot = value as u32;
    }
    CameraCalibration::checked(focal, T::lit(h), T::lit(c_y), T::lit(theta_0), dims[0], dims[1])
}

/// Rotation of the camera at one frame relative to the first frame of the
/// sequence, as reported by visual odometry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoseSample<T> {
    pub frame_index: u64,
    pub timestamp: T,
    delta_r: Mat3<T>,
}

impl<T: Scalar> PoseSample<T> {
    pub fn delta_r(&self) -> &Mat3<T> {
        &self.delta_r
    }

    /// Builds a sample from a matrix already known to be a rotation, e.g.
    /// produced by [`Mat3::rot_x`]. Still validated.
    pub fn from_rotation(frame_index: u64, timestamp: T, delta_r: Mat3<T>) -> Result<Self> {
        validate_pose(frame_index, timestamp, delta_r.to_row_major())
    }
}

/// Validates one pose row. Matrices within [`ROTATION_REPAIR_TOL`] of
/// orthonormal but outside [`ROTATION_ACCEPT_TOL`] are replaced by their
/// nearest rotation.
pub fn validate_pose<T: Scalar>(frame_index: u64, timestamp: T, entries: [T; 9]) -> Result<PoseSample<T>> {
    if !timestamp.is_finite() {
        return Err(Error::invariant("timestamp is finite"));
    }
    if entries.iter().any(|x| !x.is_finite()) {
        return Err(Error::invariant("rotation entries are finite"));
    }
    let m = Mat3::from_row_major(entries);
    let residual = m.orthonormality_residual();
    let det = m.determinant();
    let reject = || Error::NotARotation { residual: residual.to_f64_lossy(), det: det.to_f64_lossy() };
    if det <= T::zero() || residual > T::lit(ROTATION_REPAIR_TOL) {
        return Err(reject());
    }
    let accept = T::lit(ROTATION_ACCEPT_TOL);
    let delta_r = if residual <= accept && (det - T::one()).abs() <= accept {
        m
    } else {
        let r = m.nearest_orthogonal().ok_or_else(reject)?;
        if r.determinant() <= T::zero() {
            return Err(reject());
        }
        r
    };
    Ok(PoseSample { frame_index, timestamp, delta_r })
}

/// Axis-aligned bounding box in pixels, origin at the top-left pixel, y down.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BBox<T> {
    pub x_min: T,
    pub y_min: T,
    pub x_max: T,
    pub y_max: T,
}

/// One detected target in one frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Detection<T> {
    pub frame_index: u64,
    pub track_id: u64,
    bbox: BBox<T>,
}

impl<T: Scalar> Detection<T> {
    /// Validates box ordering and that the box intersects an image of the
    /// given size.
    pub fn new(frame_index: u64, track_id: u64, bbox: BBox<T>, image_width: u32, image_height: u32) -> Result<Self> {
        let BBox { x_min, y_min, x_max, y_max } = bbox;
        if [x_min, y_min, x_max, y_max].iter().any(|x| !x.is_finite()) {
            return Err(Error::invariant("bbox coordinates are finite"));
        }
        if x_min >= x_max {
            return Err(Error::invariant("x_min < x_max"));
        }
        if y_min >= y_max {
            return Err(Error::invariant("y_min < y_max"));
        }
        let (w, h) = (T::lit(image_width as f64), T::lit(image_height as f64));
        if x_max <= T::zero() || y_max <= T::zero() || x_min >= w || y_min >= h {
            return Err(Error::invariant("bbox intersects the image"));
        }
        Ok(Self { frame_index, track_id, bbox })
    }

    pub fn bbox(&self) -> &BBox<T> {
        &self.bbox
    }

    /// Image row of the bottom of the target (`y_max`).
    pub fn u(&self) -> T {
        self.bbox.y_max
    }

    /// Image row of the box center.
    pub fn b_y(&self) -> T {
        (self.bbox.y_min + self.bbox.y_max) * T::lit(0.5)
    }
}

/// Outcome attached to every distance estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Flag {
    /// Distance computed with the plane test disabled.
    Ok,
    SamePlane,
    AdjustedA1,
    AdjustedA2,
    AdjustedA3,
    DegenerateGeometry,
    NoPoseHistory,
}

impl Flag {
    pub const ALL: [Flag; 7] = [
        Flag::Ok,
        Flag::SamePlane,
        Flag::AdjustedA1,
        Flag::AdjustedA2,
        Flag::AdjustedA3,
        Flag::DegenerateGeometry,
        Flag::NoPoseHistory,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Flag::Ok => "OK",
            Flag::SamePlane => "SAME_PLANE",
            Flag::AdjustedA1 => "ADJUSTED_A1",
            Flag::AdjustedA2 => "ADJUSTED_A2",
            Flag::AdjustedA3 => "ADJUSTED_A3",
            Flag::DegenerateGeometry => "DEGENERATE_GEOMETRY",
            Flag::NoPoseHistory => "NO_POSE_HISTORY",
        }
    }

    /// Whether an estimate with this flag carries a distance.
    pub fn has_distance(&self) -> bool {
        !matches!(self, Flag::DegenerateGeometry | Flag::NoPoseHistory)
    }

    pub fn is_adjusted(&self) -> bool {
        matches!(self, Flag::AdjustedA1 | Flag::AdjustedA2 | Flag::AdjustedA3)
    }
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Flag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Flag::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::parse("flag", format!("unknown flag `{s}`")))
    }
}

/// Per-frame intermediates of the estimate; absent while the pose history
/// is warming up.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Geometry<T> {
    pub theta_ego: T,
    pub theta_adjusted: T,
    /// Vanishing line of the unadjusted gradient, so `v_line + delta_y_px`
    /// is the box center row.
    pub v_line: T,
    pub delta_y_px: T,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistanceEstimate<T> {
    pub frame_index: u64,
    pub track_id: u64,
    pub distance_m: Option<T>,
    pub geometry: Option<Geometry<T>>,
    pub flag: Flag,
}

impl<T: Scalar> DistanceEstimate<T> {
    pub fn theta_ego(&self) -> Option<T> {
        self.geometry.map(|g| g.theta_ego)
    }

    pub fn theta_adjusted(&self) -> Option<T> {
        self.geometry.map(|g| g.theta_adjusted)
    }

    pub fn v_line(&self) -> Option<T> {
        self.geometry.map(|g| g.v_line)
    }

    pub fn delta_y_px(&self) -> Option<T> {
        self.geometry.map(|g| g.delta_y_px)
    }
}
