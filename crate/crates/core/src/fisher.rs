//! Equivalent Fisher information for ToA and AoA measurements, and the
//! positioning error bound (PEB) derived from it.
//!
//! Each anchor contributes two rank-one terms to the position EFIM:
//!
//! * ToA: `λ_τ u uᵀ` with `λ_τ = 1 / (σ_τ² c²)`, information along the
//!   anchor-to-user direction;
//! * AoA: `λ_θ u⊥ u⊥ᵀ / r²` with
//!   `λ_θ = (2π/λ)² σ_φ⁻² Σ_{m∈S} (u⊥ᵀ r_m)²`, information across it.
//!
//! With a user-side fluid antenna one port subset serves every anchor; with
//! BS-side antennas each anchor has its own layout and subset. The ToA
//! variance uses the delay CRB `σ_τ² = 1 / (8 π² β² SNR)` and the per-port
//! phase noise defaults to `σ_φ² = 1 / (2 SNR)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{bearing, Anchor, Bearing};
use crate::linalg2::{inverse, outer, Mat2, Vec2};
use crate::ports::{PortLayout, Selection};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Human-readable statement of the ToA variance formula in use.
pub const TOA_VARIANCE_FORMULA: &str = "sigma_tau^2 = 1 / (8 pi^2 beta_eff^2 SNR)";

/// Convert dB to a linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementModel {
    pub snr_linear: f64,
    /// Effective (RMS) bandwidth in Hz.
    pub beta_eff: f64,
    /// Per-port phase noise variance in rad².
    pub phase_noise_var: f64,
    pub wavelength: f64,
}

impl MeasurementModel {
    /// Model whose phase noise follows the SNR: `σ_φ² = 1 / (2 SNR)`.
    pub fn new(snr_linear: f64, beta_eff: f64, wavelength: f64) -> Result<Self> {
        Self::with_phase_noise(snr_linear, beta_eff, 0.5 / snr_linear, wavelength)
    }

    pub fn with_phase_noise(
        snr_linear: f64,
        beta_eff: f64,
        phase_noise_var: f64,
        wavelength: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("snr", snr_linear),
            ("beta_eff", beta_eff),
            ("phase_noise_var", phase_noise_var),
            ("wavelength", wavelength),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(Self {
            snr_linear,
            beta_eff,
            phase_noise_var,
            wavelength,
        })
    }

    /// Wavenumber-squared over phase variance, `(2π/λ)² / σ_φ²`.
    pub fn aoa_gain(&self) -> f64 {
        let k = 2.0 * PI / self.wavelength;
        k * k / self.phase_noise_var
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scenario {
    /// The user carries the fluid antenna; anchors have fixed antennas.
    UserSideFas,
    /// Every anchor carries its own fluid antenna; the user has a fixed one.
    BsSideFas,
}

impl Scenario {
    pub fn tag(self) -> &'static str {
        match self {
            Scenario::UserSideFas => "user",
            Scenario::BsSideFas => "bs",
        }
    }
}

/// Activated ports: one subset shared by all anchors (user-side) or one per
/// anchor (BS-side).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Activation {
    Shared(Selection),
    PerAnchor(Vec<Selection>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    scenario: Scenario,
    anchors: Vec<Anchor>,
    user: Vec2,
    layouts: Vec<PortLayout>,
    model: MeasurementModel,
}

impl ScenarioConfig {
    /// `layouts` holds one layout for [`Scenario::UserSideFas`] and one per
    /// anchor for [`Scenario::BsSideFas`].
    pub fn new(
        scenario: Scenario,
        anchors: Vec<Anchor>,
        user: Vec2,
        layouts: Vec<PortLayout>,
        model: MeasurementModel,
    ) -> Result<Self> {
        if anchors.is_empty() {
            return Err(Error::InvalidConfig("at least one anchor is required".into()));
        }
        if !user.is_finite() || anchors.iter().any(|a| !a.position.is_finite()) {
            return Err(Error::InvalidConfig("positions must be finite".into()));
        }
        let mut ids: Vec<usize> = anchors.iter().map(|a| a.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfig("anchor ids must be unique".into()));
        }
        let expected = match scenario {
            Scenario::UserSideFas => 1,
            Scenario::BsSideFas => anchors.len(),
        };
        if layouts.len() != expected {
            return Err(Error::InvalidConfig(format!(
                "{} scenario needs {expected} layout(s), got {}",
                scenario.tag(),
                layouts.len()
            )));
        }
        Ok(Self {
            scenario,
            anchors,
            user,
            layouts,
            model,
        })
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn anchors(&self) -> &[Anchor] {
        &self.anchors
    }

    pub fn user(&self) -> Vec2 {
        self.user
    }

    pub fn model(&self) -> &MeasurementModel {
        &self.model
    }

    pub fn layouts(&self) -> &[PortLayout] {
        &self.layouts
    }

    /// Layout whose ports provide AoA information towards anchor index `b`
    /// (0-based position in [`anchors`](Self::anchors)).
    pub fn layout_for(&self, b: usize) -> &PortLayout {
        match self.scenario {
            Scenario::UserSideFas => &self.layouts[0],
            Scenario::BsSideFas => &self.layouts[b],
        }
    }

    pub fn bearings(&self) -> Result<Vec<Bearing>> {
        self.anchors.iter().map(|a| bearing(self.user, a)).collect()
    }

    pub fn with_model(&self, model: MeasurementModel) -> Self {
        Self {
            model,
            ..self.clone()
        }
    }

    pub fn with_user(&self, user: Vec2) -> Self {
        Self {
            user,
            ..self.clone()
        }
    }

    pub fn with_layouts(&self, layouts: Vec<PortLayout>) -> Result<Self> {
        Self::new(
            self.scenario,
            self.anchors.clone(),
            self.user,
            layouts,
            self.model,
        )
    }

    fn selection_for<'a>(&self, activation: &'a Activation, b: usize) -> Result<&'a Selection> {
        match (self.scenario, activation) {
            (Scenario::UserSideFas, Activation::Shared(s)) => Ok(s),
            (Scenario::BsSideFas, Activation::PerAnchor(v)) if v.len() == self.anchors.len() => {
                Ok(&v[b])
            }
            _ => Err(Error::InvalidConfig(format!(
                "activation shape does not match the {} scenario",
                self.scenario.tag()
            ))),
        }
    }
}

/// Per-anchor information weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfoWeights {
    pub lambda_tau: f64,
    pub lambda_theta: f64,
}

pub fn toa_variance(model: &MeasurementModel) -> f64 {
    1.0 / (8.0 * PI * PI * model.beta_eff * model.beta_eff * model.snr_linear)
}

/// `λ_τ = 1 / (σ_τ² c²)`, in 1/m².
pub fn toa_weight(model: &MeasurementModel) -> f64 {
    1.0 / (toa_variance(model) * SPEED_OF_LIGHT * SPEED_OF_LIGHT)
}

pub fn toa_fim(bearing: &Bearing, model: &MeasurementModel) -> Mat2 {
    toa_fim_with_weight(bearing, toa_weight(model))
}

pub fn toa_fim_with_weight(bearing: &Bearing, lambda_tau: f64) -> Mat2 {
    outer(bearing.u).scale(lambda_tau)
}

/// Inverse AoA variance `λ_θ` contributed by the ports in `sel`.
pub fn aoa_weight(
    layout: &PortLayout,
    sel: &Selection,
    u_perp: Vec2,
    model: &MeasurementModel,
) -> Result<f64> {
    let mut sum_sq = 0.0;
    for &m in sel.indices() {
        let p = layout.perp_projection(m, u_perp)?;
        sum_sq += p * p;
    }
    if sum_sq == 0.0 {
        return Ok(0.0);
    }
    Ok(model.aoa_gain() * sum_sq)
}

pub fn aoa_fim(bearing: &Bearing, lambda_theta: f64) -> Mat2 {
    outer(bearing.u_perp).scale(lambda_theta / (bearing.range * bearing.range))
}

/// ToA and AoA weights per anchor for an activation.
pub fn info_weights(config: &ScenarioConfig, activation: &Activation) -> Result<Vec<InfoWeights>> {
    let lambda_tau = toa_weight(&config.model);
    config
        .anchors
        .iter()
        .enumerate()
        .map(|(b, anchor)| {
            let br = bearing(config.user, anchor)?;
            let sel = config.selection_for(activation, b)?;
            let lambda_theta = aoa_weight(config.layout_for(b), sel, br.u_perp, &config.model)?;
            Ok(InfoWeights {
                lambda_tau,
                lambda_theta,
            })
        })
        .collect()
}

/// Network EFIM `Σ_b [ToA_b + AoA_b]` for the activated ports.
pub fn network_fim(config: &ScenarioConfig, activation: &Activation) -> Result<Mat2> {
    let weights = info_weights(config, activation)?;
    let mut j = Mat2::ZERO;
    for (anchor, w) in config.anchors.iter().zip(&weights) {
        let br = bearing(config.user, anchor)?;
        j += toa_fim_with_weight(&br, w.lambda_tau) + aoa_fim(&br, w.lambda_theta);
    }
    Ok(j)
}

/// Port-independent ToA part of the EFIM.
pub fn base_fim(config: &ScenarioConfig) -> Result<Mat2> {
    let lambda_tau = toa_weight(&config.model);
    let mut j = Mat2::ZERO;
    for anchor in &config.anchors {
        j += toa_fim_with_weight(&bearing(config.user, anchor)?, lambda_tau);
    }
    Ok(j)
}

/// `sqrt(tr(J⁻¹))` in metres.
pub fn peb(j: Mat2) -> Result<f64> {
    Ok(inverse(j)?.trace().sqrt())
}

/// Additive AoA share of port `m` towards anchor index `b` (0-based).
/// Summing over a selection reproduces [`aoa_fim`] for that selection.
pub fn port_kernel(config: &ScenarioConfig, b: usize, m: usize) -> Result<Mat2> {
    let anchor = config.anchors.get(b).ok_or(Error::IndexOutOfRange {
        index: b,
        len: config.anchors.len(),
    })?;
    let br = bearing(config.user, anchor)?;
    kernel_from_bearing(config, b, m, &br)
}

fn kernel_from_bearing(config: &ScenarioConfig, b: usize, m: usize, br: &Bearing) -> Result<Mat2> {
    let p = config.layout_for(b).perp_projection(m, br.u_perp)?;
    let gamma = if p == 0.0 {
        0.0
    } else {
        config.model.aoa_gain() * p * p
    };
    Ok(aoa_fim(br, gamma))
}

/// All kernels `Q[b][m]` for every anchor and every port of its layout.
pub fn all_port_kernels(config: &ScenarioConfig) -> Result<Vec<Vec<Mat2>>> {
    config
        .anchors
        .iter()
        .enumerate()
        .map(|(b, anchor)| {
            let br = bearing(config.user, anchor)?;
            (0..config.layout_for(b).len())
                .map(|m| kernel_from_bearing(config, b, m, &br))
                .collect()
        })
        .collect()
}
