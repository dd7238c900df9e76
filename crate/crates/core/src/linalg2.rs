//! Closed-form 2-D vector and symmetric 2×2 matrix arithmetic.
//!
//! Every information matrix in this crate is a symmetric 2×2 matrix over the
//! planar user position, so [`Mat2`] stores only its three distinct entries
//! and is symmetric by construction.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Relative singularity threshold: `det <= SINGULAR_TOL * max(1, tr^2)`.
pub const SINGULAR_TOL: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Construct, rejecting NaN or infinite components.
    pub fn checked(x: f64, y: f64) -> Result<Self> {
        if x.is_finite() && y.is_finite() {
            Ok(Self { x, y })
        } else {
            Err(Error::InvalidConfig(format!(
                "vector components must be finite, got ({x}, {y})"
            )))
        }
    }

    /// Unit vector at `angle` radians from the +x axis.
    pub fn from_angle(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self { x: c, y: s }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s)
    }

    /// Counter-clockwise rotation by 90°.
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    pub fn rotate(self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Symmetric 2×2 matrix `[[xx, xy], [xy, yy]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Mat2 {
    pub const ZERO: Mat2 = Mat2 {
        xx: 0.0,
        xy: 0.0,
        yy: 0.0,
    };
    pub const IDENTITY: Mat2 = Mat2 {
        xx: 1.0,
        xy: 0.0,
        yy: 1.0,
    };

    pub const fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Self { xx, xy, yy }
    }

    pub const fn diag(a: f64, b: f64) -> Self {
        Self::new(a, 0.0, b)
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(self.xx * s, self.xy * s, self.yy * s)
    }

    pub fn trace(self) -> f64 {
        self.xx + self.yy
    }

    pub fn det(self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    /// `v^T M v`.
    pub fn quad(self, v: Vec2) -> f64 {
        self.xx * v.x * v.x + 2.0 * self.xy * v.x * v.y + self.yy * v.y * v.y
    }

    /// `tr(self * other)` for two symmetric matrices.
    pub fn trace_product(self, other: Mat2) -> f64 {
        self.xx * other.xx + 2.0 * self.xy * other.xy + self.yy * other.yy
    }

    /// Largest absolute entry.
    pub fn max_abs(self) -> f64 {
        self.xx.abs().max(self.xy.abs()).max(self.yy.abs())
    }

    pub fn is_finite(self) -> bool {
        self.xx.is_finite() && self.xy.is_finite() && self.yy.is_finite()
    }

    /// Scale-relative singularity test shared by [`inverse`].
    pub fn is_singular(self) -> bool {
        let tr = self.trace();
        self.det() <= SINGULAR_TOL * (tr * tr).max(1.0)
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, rhs: Mat2) -> Mat2 {
        Mat2::new(self.xx + rhs.xx, self.xy + rhs.xy, self.yy + rhs.yy)
    }
}

impl AddAssign for Mat2 {
    fn add_assign(&mut self, rhs: Mat2) {
        self.xx += rhs.xx;
        self.xy += rhs.xy;
        self.yy += rhs.yy;
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, rhs: Mat2) -> Mat2 {
        Mat2::new(self.xx - rhs.xx, self.xy - rhs.xy, self.yy - rhs.yy)
    }
}

impl Mul<Vec2> for Mat2 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        Vec2::new(self.xx * v.x + self.xy * v.y, self.xy * v.x + self.yy * v.y)
    }
}

impl std::iter::Sum for Mat2 {
    fn sum<I: Iterator<Item = Mat2>>(iter: I) -> Mat2 {
        iter.fold(Mat2::ZERO, |acc, m| acc + m)
    }
}

/// `v v^T`.
pub fn outer(v: Vec2) -> Mat2 {
    Mat2::new(v.x * v.x, v.x * v.y, v.y * v.y)
}

/// Natural log of the determinant of a positive definite matrix.
pub fn logdet(m: Mat2) -> Result<f64> {
    let det = m.det();
    if !(det > 0.0) || !(m.xx > 0.0) {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(det.ln())
}

/// [`logdet`], mapping non-PD input to `-inf`. Used where singular candidates
/// simply lose a comparison.
pub fn logdet_or_neg_inf(m: Mat2) -> f64 {
    logdet(m).unwrap_or(f64::NEG_INFINITY)
}

pub fn inverse(m: Mat2) -> Result<Mat2> {
    if m.is_singular() || !m.is_finite() {
        return Err(Error::NotPositiveDefinite);
    }
    let det = m.det();
    Ok(Mat2::new(m.yy / det, -m.xy / det, m.xx / det))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spd() -> impl Strategy<Value = Mat2> {
        (-5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0, 0.01f64..2.0).prop_map(
            |(a, b, c, d, ridge)| {
                // A A^T + ridge I
                Mat2::new(a * a + b * b + ridge, a * c + b * d, c * c + d * d + ridge)
            },
        )
    }

    #[test]
    fn outer_examples() {
        assert_eq!(outer(Vec2::new(1.0, 0.0)), Mat2::new(1.0, 0.0, 0.0));
        assert_eq!(outer(Vec2::ZERO), Mat2::ZERO);
        assert_eq!(outer(Vec2::new(3.0, 4.0)), Mat2::new(9.0, 12.0, 16.0));
    }

    #[test]
    fn logdet_examples() {
        assert_eq!(logdet(Mat2::IDENTITY).unwrap(), 0.0);
        assert!((logdet(Mat2::diag(2.0, 2.0)).unwrap() - 4f64.ln()).abs() < 1e-15);
        assert!((logdet(Mat2::diag(2.0, 2.0)).unwrap() - 1.386294).abs() < 1e-6);
        assert!(matches!(
            logdet(Mat2::new(1.0, 0.0, 0.0)),
            Err(Error::NotPositiveDefinite)
        ));
        assert!(logdet(Mat2::diag(-1.0, -1.0)).is_err());
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(inverse(Mat2::IDENTITY).unwrap(), Mat2::IDENTITY);
        assert_eq!(inverse(Mat2::diag(4.0, 2.0)).unwrap(), Mat2::diag(0.25, 0.5));
        assert!(matches!(
            inverse(Mat2::new(1.0, 1.0, 1.0)),
            Err(Error::NotPositiveDefinite)
        ));
    }

    #[test]
    fn singularity_threshold_is_scale_relative() {
        // det = 1e-6 against tr^2 ~ 4e12: relative det ~ 2.5e-19, singular.
        let big = Mat2::new(1e6, 1e6 - 1e-12, 1e6);
        assert!(big.is_singular());
        // A well-conditioned matrix with tiny entries is not rejected by an
        // absolute cutoff of the same size.
        assert!(!Mat2::diag(1e-7, 1e-7).is_singular());
    }

    proptest! {
        #[test]
        fn outer_is_psd(x in -1e3f64..1e3, y in -1e3f64..1e3) {
            let v = Vec2::new(x, y);
            let m = outer(v);
            let n4 = v.dot(v).powi(2);
            prop_assert!(m.trace() >= 0.0);
            prop_assert!(m.det() >= -1e-12 * n4.max(1e-300));
        }

        #[test]
        fn inverse_roundtrip(m in spd()) {
            let inv = inverse(m).unwrap();
            // M * M^-1 as a general product
            let p11 = m.xx * inv.xx + m.xy * inv.xy;
            let p12 = m.xx * inv.xy + m.xy * inv.yy;
            let p21 = m.xy * inv.xx + m.yy * inv.xy;
            let p22 = m.xy * inv.xy + m.yy * inv.yy;
            let cond = m.max_abs() * inv.max_abs();
            prop_assert!((p11 - 1.0).abs() <= 1e-12 * cond);
            prop_assert!(p12.abs() <= 1e-12 * cond);
            prop_assert!(p21.abs() <= 1e-12 * cond);
            prop_assert!((p22 - 1.0).abs() <= 1e-12 * cond);
        }

        #[test]
        fn logdet_of_inverse_negates(m in spd()) {
            let a = logdet(m).unwrap();
            let b = logdet(inverse(m).unwrap()).unwrap();
            prop_assert!((a + b).abs() < 1e-9);
        }

        #[test]
        fn determinant_lemma(m in spd(), x in -3.0f64..3.0, y in -3.0f64..3.0) {
            let v = Vec2::new(x, y);
            let lhs = logdet(m + outer(v)).unwrap() - logdet(m).unwrap();
            let rhs = (1.0 + inverse(m).unwrap().quad(v)).ln();
            prop_assert!((lhs - rhs).abs() < 1e-9);
        }
    }
}
