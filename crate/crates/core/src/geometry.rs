//! Minimal fixed-size 3-vector and 3x3 matrix types.
//!
//! Camera frame convention used throughout the crate: x to the right,
//! y downward, z forward along the optical axis.

use std::ops::{Add, Mul, Sub};

use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Vec3<T>(pub [T; 3]);

impl<T: Scalar> Vec3<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self([x, y, z])
    }

    pub fn x(&self) -> T {
        self.0[0]
    }

    pub fn y(&self) -> T {
        self.0[1]
    }

    pub fn z(&self) -> T {
        self.0[2]
    }

    pub fn dot(&self, other: &Self) -> T {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    pub fn norm(&self) -> T {
        self.dot(self).sqrt()
    }
}

impl<T: Scalar> Sub for Vec3<T> {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        Self([self.0[0] - rhs.0[0], self.0[1] - rhs.0[1], self.0[2] - rhs.0[2]])
    }
}

/// Row-major 3x3 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat3<T>(pub [[T; 3]; 3]);

impl<T: Scalar> Mat3<T> {
    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self([[o, z, z], [z, o, z], [z, z, o]])
    }

    /// Builds a matrix from nine entries in row-major order.
    pub fn from_row_major(e: [T; 9]) -> Self {
        Self([[e[0], e[1], e[2]], [e[3], e[4], e[5]], [e[6], e[7], e[8]]])
    }

    pub fn to_row_major(&self) -> [T; 9] {
        let m = &self.0;
        [m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2]]
    }

    /// Rotation about the camera x-axis. A positive angle tilts the optical
    /// axis toward -y, i.e. pitches the camera up.
    pub fn rot_x(angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        let (o, z) = (T::one(), T::zero());
        Self([[o, z, z], [z, c, -s], [z, s, c]])
    }

    /// Rotation about the camera y-axis (yaw).
    pub fn rot_y(angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        let (o, z) = (T::one(), T::zero());
        Self([[c, z, s], [z, o, z], [-s, z, c]])
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        Self([[m[0][0], m[1][0], m[2][0]], [m[0][1], m[1][1], m[2][1]], [m[0][2], m[1][2], m[2][2]]])
    }

    pub fn determinant(&self) -> T {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Cofactor matrix; equals `det * inverse^T`.
    fn cofactor(&self) -> Self {
        let m = &self.0;
        let c = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
        Self([
            [c(1, 2, 1, 2), -c(1, 2, 0, 2), c(1, 2, 0, 1)],
            [-c(0, 2, 1, 2), c(0, 2, 0, 2), -c(0, 2, 0, 1)],
            [c(0, 1, 1, 2), -c(0, 1, 0, 2), c(0, 1, 0, 1)],
        ])
    }

    /// `inverse(self)^T`, or `None` when the matrix is singular.
    pub fn inverse_transpose(&self) -> Option<Self> {
        let det = self.determinant();
        if det == T::zero() || !det.is_finite() {
            return None;
        }
        Some(self.cofactor().scale(T::one() / det))
    }

    pub fn scale(&self, k: T) -> Self {
        let mut out = *self;
        out.0.iter_mut().flatten().for_each(|x| *x = *x * k);
        out
    }

    pub fn frobenius_norm(&self) -> T {
        self.0.iter().flatten().fold(T::zero(), |acc, &x| acc + x * x).sqrt()
    }

    /// `||M^T M - I||_F`, zero for an exact orthogonal matrix.
    pub fn orthonormality_residual(&self) -> T {
        (self.transpose() * *self - Self::identity()).frobenius_norm()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.is_finite())
    }

    /// Orthogonal polar factor of the matrix, which is the nearest orthogonal
    /// matrix in Frobenius norm. Uses the Newton iteration
    /// `X <- (X + X^-T) / 2`; converges quadratically for the near-orthogonal
    /// inputs it is applied to.
    pub fn nearest_orthogonal(&self) -> Option<Self> {
        let half = T::lit(0.5);
        let tol = T::epsilon() * T::lit(16.0);
        let mut x = *self;
        for _ in 0..32 {
            let next = (x + x.inverse_transpose()?).scale(half);
            let step = (next - x).frobenius_norm();
            x = next;
            if step <= tol {
                break;
            }
        }
        x.is_finite().then_some(x)
    }
}

impl<T: Scalar> Add for Mat3<T> {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        let mut out = self;
        for (r, row) in out.0.iter_mut().enumerate() {
            for (c, x) in row.iter_mut().enumerate() {
                *x = *x + rhs.0[r][c];
            }
        }
        out
    }
}

impl<T: Scalar> Sub for Mat3<T> {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        self + rhs.scale(-T::one())
    }
}

impl<T: Scalar> Mul for Mat3<T> {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        let mut out = [[T::zero(); 3]; 3];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, x) in row.iter_mut().enumerate() {
                *x = (0..3).fold(T::zero(), |acc, k| acc + self.0[r][k] * rhs.0[k][c]);
            }
        }
        Self(out)
    }
}

impl<T: Scalar> Mul<Vec3<T>> for Mat3<T> {
    type Output = Vec3<T>;

    fn mul(self, v: Vec3<T>) -> Vec3<T> {
        let m = &self.0;
        Vec3([
            m[0][0] * v.0[0] + m[0][1] * v.0[1] + m[0][2] * v.0[2],
            m[1][0] * v.0[0] + m[1][1] * v.0[1] + m[1][2] * v.0[2],
            m[2][0] * v.0[0] + m[2][1] * v.0[1] + m[2][2] * v.0[2],
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rot_x_pitches_optical_axis_up() {
        let d = Mat3::rot_x(0.3_f64) * Vec3::new(0.0, 0.0, 1.0);
        assert!((d.y() + 0.3_f64.sin()).abs() < 1e-15);
        assert!((d.z() - 0.3_f64.cos()).abs() < 1e-15);
    }

    #[test]
    fn rotations_are_orthonormal_with_unit_determinant() {
        let r = Mat3::rot_y(0.7_f64) * Mat3::rot_x(-0.2);
        assert!(r.orthonormality_residual() < 1e-15);
        assert!((r.determinant() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn inverse_transpose_of_singular_is_none() {
        let m = Mat3::from_row_major([1.0_f64, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 0.0, 1.0]);
        assert!(m.inverse_transpose().is_none());
    }

    #[test]
    fn nearest_orthogonal_fixes_rotations() {
        let r = Mat3::rot_x(0.4_f64) * Mat3::rot_y(1.1);
        let p = r.nearest_orthogonal().unwrap();
        assert!((p - r).frobenius_norm() < 1e-14);
    }
}
