//! Vanishing line, plane-difference signal and the stepwise correction of
//! the ego gradient for targets on a steeper road section.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::types::{CameraCalibration, Flag};

/// Angle increments and pixel thresholds of the gradient correction.
///
/// A more negative plane difference (target center further above the
/// vanishing line) selects a larger increment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdjustmentPolicy<T> {
    alpha: [T; 3],
    thresholds: [T; 3],
}

impl<T: Scalar> AdjustmentPolicy<T> {
    /// `alpha` in radians, `thresholds` in pixels, both ordered from the
    /// mildest to the steepest case.
    pub fn new(alpha: [T; 3], thresholds: [T; 3]) -> Result<Self> {
        let [a1, a2, a3] = alpha;
        let [t1, t2, t3] = thresholds;
        if alpha.iter().chain(&thresholds).any(|x| !x.is_finite()) {
            return Err(Error::invariant("adjustment parameters are finite"));
        }
        if !(T::zero() < a1 && a1 < a2 && a2 < a3) {
            return Err(Error::invariant("0 < alpha_1 < alpha_2 < alpha_3"));
        }
        if !(t3 < t2 && t2 < t1) {
            return Err(Error::invariant("t3 < t2 < t1"));
        }
        Ok(Self { alpha, thresholds })
    }

    pub fn from_degrees(alpha_deg: [f64; 3], thresholds_px: [f64; 3]) -> Result<Self> {
        Self::new(alpha_deg.map(|a| T::lit(a.to_radians())), thresholds_px.map(T::lit))
    }

    pub fn alpha(&self) -> [T; 3] {
        self.alpha
    }

    pub fn thresholds(&self) -> [T; 3] {
        self.thresholds
    }
}

impl<T: Scalar> Default for AdjustmentPolicy<T> {
    /// 3°, 5°, 6° at 0, −10, −20 px.
    fn default() -> Self {
        Self::from_degrees([3.0, 5.0, 6.0], [0.0, -10.0, -20.0]).expect("default policy is valid")
    }
}

/// Image row of the vanishing line for ego gradient `theta`:
/// `c_y − tan θ · focal_px`.
pub fn vanishing_line<T: Scalar>(theta: T, calib: &CameraCalibration<T>) -> T {
    calib.c_y() - theta.tan() * calib.focal_px()
}

/// `b_y − v`; positive when the target center lies below the vanishing line.
pub fn plane_difference<T: Scalar>(b_y: T, v: T) -> T {
    b_y - v
}

/// Applies the stepwise correction, steepest case first: strictly below
/// `t3`, then at or below `t2`, then at or below `t1`.
pub fn adjust_theta<T: Scalar>(theta: T, delta_y: T, policy: &AdjustmentPolicy<T>) -> (T, Flag) {
    let [a1, a2, a3] = policy.alpha;
    let [t1, t2, t3] = policy.thresholds;
    if delta_y < t3 {
        (theta + a3, Flag::AdjustedA3)
    } else if delta_y <= t2 {
        (theta + a2, Flag::AdjustedA2)
    } else if delta_y <= t1 {
        (theta + a1, Flag::AdjustedA1)
    } else {
        (theta, Flag::SamePlane)
    }
}
