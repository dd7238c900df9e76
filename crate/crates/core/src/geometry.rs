//! Anchor placement and user-to-anchor bearings.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg2::Vec2;

/// Ranges below this are treated as a user collocated with an anchor.
pub const MIN_RANGE_M: f64 = 1e-6;

/// A base station at a known position. `id` is 1-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anchor {
    pub id: usize,
    pub position: Vec2,
}

/// Direction, range and angle from an anchor to the user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bearing {
    /// Unit vector from the anchor towards the user.
    pub u: Vec2,
    /// `u` rotated by +90°.
    pub u_perp: Vec2,
    pub range: f64,
    /// Angle of `u`, in (-π, π].
    pub theta: f64,
}

pub fn bearing(user: Vec2, anchor: &Anchor) -> Result<Bearing> {
    let d = user - anchor.position;
    let range = d.norm();
    if !(range >= MIN_RANGE_M) {
        return Err(Error::DegenerateGeometry {
            anchor: anchor.id,
            range,
        });
    }
    let u = d.scale(1.0 / range);
    Ok(Bearing {
        u,
        u_perp: u.perp(),
        range,
        theta: u.y.atan2(u.x),
    })
}

/// `count` anchors evenly spaced on a circle of `radius` about the origin,
/// the first on the +x axis.
pub fn symmetric_ring(count: usize, radius: f64) -> Result<Vec<Anchor>> {
    if count == 0 {
        return Err(Error::InvalidConfig("ring needs at least one anchor".into()));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "ring radius must be positive, got {radius}"
        )));
    }
    Ok((0..count)
        .map(|b| {
            let angle = 2.0 * PI * b as f64 / count as f64;
            Anchor {
                id: b + 1,
                position: ring_point(angle, radius),
            }
        })
        .collect())
}

// Exact zeros on the axes, so the B=4 ring sits on (±r, 0), (0, ±r).
fn ring_point(angle: f64, radius: f64) -> Vec2 {
    let snap = |v: f64| if v.abs() < 1e-15 { 0.0 } else { v };
    let (s, c) = angle.sin_cos();
    Vec2::new(snap(c) * radius, snap(s) * radius)
}
