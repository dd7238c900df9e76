//! Candidate port layouts of a fluid antenna and activated-port subsets.

use crate::error::{Error, Result};
use crate::linalg2::Vec2;

/// Candidate port positions of one fluid antenna, relative to its phase center.
#[derive(Debug, Clone, PartialEq)]
pub struct PortLayout {
    displacements: Vec<Vec2>,
    aperture_wavelengths: f64,
    wavelength: f64,
}

impl PortLayout {
    /// `count` ports evenly spaced over `aperture_wavelengths * wavelength`
    /// metres along the direction `orientation`, end points included and
    /// centered on the origin.
    pub fn linear(
        count: usize,
        aperture_wavelengths: f64,
        wavelength: f64,
        orientation: f64,
    ) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidConfig("a layout needs at least one port".into()));
        }
        if !(wavelength > 0.0) || !wavelength.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "wavelength must be positive, got {wavelength}"
            )));
        }
        if !(aperture_wavelengths >= 0.0) || !aperture_wavelengths.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "aperture must be non-negative, got {aperture_wavelengths}"
            )));
        }
        if !orientation.is_finite() {
            return Err(Error::InvalidConfig("orientation must be finite".into()));
        }
        let axis = Vec2::from_angle(orientation);
        let extent = aperture_wavelengths * wavelength;
        let displacements = if count == 1 {
            vec![Vec2::ZERO]
        } else {
            let last = (count - 1) as f64;
            (0..count)
                .map(|m| {
                    // Mirror the upper half so the layout is exactly centered.
                    let k = m.min(count - 1 - m) as f64;
                    let offset = (0.5 - k / last) * extent;
                    let signed = if 2 * m < count - 1 { -offset } else { offset };
                    axis.scale(signed)
                })
                .collect()
        };
        Ok(Self {
            displacements,
            aperture_wavelengths,
            wavelength,
        })
    }

    /// Arbitrary port positions, e.g. a planar or irregular test layout. The
    /// aperture is recorded as the largest pairwise distance in wavelengths.
    pub fn from_displacements(displacements: Vec<Vec2>, wavelength: f64) -> Result<Self> {
        if displacements.is_empty() {
            return Err(Error::InvalidConfig("a layout needs at least one port".into()));
        }
        if !(wavelength > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "wavelength must be positive, got {wavelength}"
            )));
        }
        if displacements.iter().any(|d| !d.is_finite()) {
            return Err(Error::InvalidConfig("port displacements must be finite".into()));
        }
        let mut extent: f64 = 0.0;
        for (i, a) in displacements.iter().enumerate() {
            for b in &displacements[i + 1..] {
                extent = extent.max((*a - *b).norm());
            }
        }
        Ok(Self {
            displacements,
            aperture_wavelengths: extent / wavelength,
            wavelength,
        })
    }

    pub fn len(&self) -> usize {
        self.displacements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.displacements.is_empty()
    }

    pub fn displacements(&self) -> &[Vec2] {
        &self.displacements
    }

    pub fn aperture_wavelengths(&self) -> f64 {
        self.aperture_wavelengths
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn displacement(&self, m: usize) -> Result<Vec2> {
        self.displacements
            .get(m)
            .copied()
            .ok_or(Error::IndexOutOfRange {
                index: m,
                len: self.len(),
            })
    }

    /// Projection of port `m` onto `u_perp`, in metres.
    pub fn perp_projection(&self, m: usize, u_perp: Vec2) -> Result<f64> {
        Ok(u_perp.dot(self.displacement(m)?))
    }

    /// Same layout with every displacement multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            displacements: self.displacements.iter().map(|d| d.scale(s)).collect(),
            aperture_wavelengths: self.aperture_wavelengths * s.abs(),
            wavelength: self.wavelength,
        }
    }
}

/// A set of activated ports: strictly increasing, 0-based indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Selection {
    indices: Vec<usize>,
}

impl Selection {
    /// Build from indices in any order. Duplicates and indices `>= port_count`
    /// are rejected.
    pub fn new(mut indices: Vec<usize>, port_count: usize) -> Result<Self> {
        indices.sort_unstable();
        if let Some(w) = indices.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfig(format!(
                "port {} selected more than once",
                w[0]
            )));
        }
        if let Some(&last) = indices.last() {
            if last >= port_count {
                return Err(Error::IndexOutOfRange {
                    index: last,
                    len: port_count,
                });
            }
        }
        Ok(Self { indices })
    }

    pub fn all(port_count: usize) -> Self {
        Self {
            indices: (0..port_count).collect(),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, m: usize) -> bool {
        self.indices.binary_search(&m).is_ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn linear_examples() {
        let l = PortLayout::linear(2, 0.5, 1.0, 0.0).unwrap();
        assert_eq!(l.displacements(), &[Vec2::new(-0.25, 0.0), Vec2::new(0.25, 0.0)]);

        let l = PortLayout::linear(3, 2.0, 0.1, 0.0).unwrap();
        let xs: Vec<f64> = l.displacements().iter().map(|d| d.x).collect();
        assert!((xs[0] + 0.1).abs() < 1e-15);
        assert_eq!(xs[1], 0.0);
        assert!((xs[2] - 0.1).abs() < 1e-15);
        assert!(l.displacements().iter().all(|d| d.y == 0.0));

        let l = PortLayout::linear(1, 7.0, 0.3, 1.0).unwrap();
        assert_eq!(l.displacements(), &[Vec2::ZERO]);
    }

    #[test]
    fn linear_rejects_bad_input() {
        assert!(PortLayout::linear(0, 1.0, 1.0, 0.0).is_err());
        assert!(PortLayout::linear(4, 1.0, 0.0, 0.0).is_err());
        assert!(PortLayout::linear(4, 1.0, -1.0, 0.0).is_err());
        assert!(PortLayout::linear(4, -0.1, 1.0, 0.0).is_err());
    }

    #[test]
    fn projection_examples() {
        let l = PortLayout::linear(5, 0.5, 0.1, 0.0).unwrap();
        for m in 0..5 {
            assert_eq!(l.perp_projection(m, Vec2::new(0.0, 1.0)).unwrap(), 0.0);
        }
        let l = PortLayout::from_displacements(vec![Vec2::new(0.25, 0.0)], 1.0).unwrap();
        assert_eq!(l.perp_projection(0, Vec2::new(-1.0, 0.0)).unwrap(), -0.25);
        let l = PortLayout::from_displacements(vec![Vec2::new(0.1, 0.0)], 1.0).unwrap();
        let p = l.perp_projection(0, Vec2::new(-0.6, 0.8)).unwrap();
        assert!((p + 0.06).abs() < 1e-15);
        assert!(matches!(
            l.perp_projection(1, Vec2::new(0.0, 1.0)),
            Err(Error::IndexOutOfRange { index: 1, len: 1 })
        ));
    }

    #[test]
    fn selection_validation() {
        let s = Selection::new(vec![3, 0, 2], 4).unwrap();
        assert_eq!(s.indices(), &[0, 2, 3]);
        assert!(s.contains(2) && !s.contains(1));
        assert!(Selection::new(vec![1, 1], 4).is_err());
        assert!(Selection::new(vec![4], 4).is_err());
        assert_eq!(Selection::all(3).indices(), &[0, 1, 2]);
    }

    proptest! {
        #[test]
        fn linear_layout_is_centered_with_exact_extent(
            count in 2usize..80, w in 0.0f64..4.0, wl in 0.01f64..1.0, orient in -3.2f64..3.2
        ) {
            let l = PortLayout::linear(count, w, wl, orient).unwrap();
            prop_assert_eq!(l.len(), count);
            let n = count as f64;
            let mean = l.displacements().iter().fold(Vec2::ZERO, |a, d| a + *d).scale(1.0 / n);
            prop_assert!(mean.norm() <= 1e-12);
            let axis = Vec2::from_angle(orient);
            let offs: Vec<f64> = l.displacements().iter().map(|d| d.dot(axis)).collect();
            let lo = offs.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = offs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(((hi - lo) - w * wl).abs() <= 1e-12);
            // evenly spaced
            let step = w * wl / (n - 1.0);
            for pair in offs.windows(2) {
                prop_assert!((pair[1] - pair[0] - step).abs() <= 1e-12);
            }
        }

        #[test]
        fn squared_projection_sum_invariants(
            count in 1usize..40, w in 0.0f64..4.0, orient in -3.2f64..3.2,
            psi in -3.2f64..3.2, s in 0.1f64..10.0
        ) {
            let l = PortLayout::linear(count, w, 0.1, orient).unwrap();
            let up = Vec2::from_angle(psi);
            let sum_sq = |layout: &PortLayout, v: Vec2| -> f64 {
                (0..layout.len()).map(|m| layout.perp_projection(m, v).unwrap().powi(2)).sum()
            };
            let base = sum_sq(&l, up);
            prop_assert_eq!(base, sum_sq(&l, -up));
            let scaled = sum_sq(&l.scaled(s), up);
            prop_assert!((scaled - s * s * base).abs() <= 1e-12 * (s * s * base).max(1e-300));

            // cos^2 law along the layout axis
            let axis = Vec2::from_angle(orient);
            let axial: f64 = l.displacements().iter().map(|d| d.dot(axis).powi(2)).sum();
            let c = up.dot(axis);
            prop_assert!((base - c * c * axial).abs() <= 1e-12 * axial.max(1e-300));
        }
    }
}
