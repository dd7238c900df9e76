//! Positioning error bounds for fluid-antenna-assisted localization.
//!
//! The crate builds the equivalent Fisher information matrix of a 2-D user
//! position from ToA and AoA measurements, where the AoA precision depends on
//! which ports of a fluid antenna are activated, and chooses those ports to
//! maximize `ln det` of the information matrix.
//!
//! * [`linalg2`]: closed-form 2-D vectors and symmetric 2×2 matrices.
//! * [`geometry`]: anchors and bearings.
//! * [`ports`]: candidate port layouts and selections.
//! * [`fisher`]: ToA/AoA information, network EFIM and PEB.
//! * [`select`]: random, lazy-greedy, convex-relaxation and exhaustive selection.
//! * [`experiments`]: configuration, sweeps and CSV/plot output.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(a < b)` keeps NaN on the failing side of comparisons

pub mod error;
pub mod experiments;
pub mod fisher;
pub mod geometry;
pub mod linalg2;
pub mod ports;
pub mod select;

pub use error::{Error, Result};
pub use fisher::{
    aoa_fim, aoa_weight, base_fim, network_fim, peb, port_kernel, toa_fim, toa_variance, toa_weight,
    Activation, MeasurementModel, Scenario, ScenarioConfig,
};
pub use geometry::{bearing, symmetric_ring, Anchor, Bearing};
pub use linalg2::{inverse, logdet, outer, Mat2, Vec2};
pub use ports::{PortLayout, Selection};
pub use select::{
    exhaustive_selection, greedy_selection, random_selection, relaxed_selection, Method,
    SelectOptions, SelectionReport,
};
