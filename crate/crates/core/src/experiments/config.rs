//! Experiment configuration: a flat `key = value` text format.
//!
//! ```text
//! # anchors on a 50 m ring
//! geometry.num_bs = 4
//! fas.M = 60
//! sweep.axis = snr_db
//! sweep.values = -10, 0, 10, 20
//! ```
//!
//! Omitted keys keep their defaults (3 GHz carrier, 4 anchors at 50 m, 60
//! ports with 10 active, 0.5λ user aperture, 2λ BS aperture).

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fisher::{db_to_linear, MeasurementModel, Scenario, ScenarioConfig, SPEED_OF_LIGHT};
use crate::geometry::symmetric_ring;
use crate::linalg2::Vec2;
use crate::ports::PortLayout;
use crate::select::{Method, DEFAULT_MAX_ITERS, DEFAULT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SweepAxis {
    SnrDb,
    NumPorts,
    ActivePorts,
}

impl SweepAxis {
    pub fn tag(self) -> &'static str {
        match self {
            SweepAxis::SnrDb => "snr_db",
            SweepAxis::NumPorts => "M",
            SweepAxis::ActivePorts => "n_s",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "snr_db" | "snr" | "SnrDb" => Some(SweepAxis::SnrDb),
            "M" | "num_ports" | "NumPorts" => Some(SweepAxis::NumPorts),
            "n_s" | "active_ports" | "ActivePorts" => Some(SweepAxis::ActivePorts),
            _ => None,
        }
    }

    fn default_values(self) -> Vec<f64> {
        match self {
            SweepAxis::SnrDb => default_snr_grid(),
            SweepAxis::NumPorts => vec![10.0, 30.0, 60.0],
            SweepAxis::ActivePorts => vec![10.0, 20.0, 40.0, 60.0],
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// -10 dB to 30 dB in 2 dB steps.
pub fn default_snr_grid() -> Vec<f64> {
    (0..=20).map(|k| -10.0 + 2.0 * k as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    /// SNR points evaluated at every axis value when the axis is not SNR.
    pub snr_db: Vec<f64>,
    pub scenarios: Vec<Scenario>,
    pub methods: Vec<Method>,
    pub trials: usize,
    pub seed: u64,
    /// Radius of the disc around the configured user position from which
    /// per-trial user positions are drawn; 0 keeps the user fixed.
    pub user_disc_radius_m: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            axis: SweepAxis::SnrDb,
            values: default_snr_grid(),
            snr_db: default_snr_grid(),
            scenarios: vec![Scenario::UserSideFas, Scenario::BsSideFas],
            methods: vec![Method::Random, Method::Greedy],
            trials: 100,
            seed: 0,
            user_disc_radius_m: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub fc_hz: f64,
    pub beta_eff_hz: f64,
    /// Fixed per-port phase noise variance; `None` ties it to the SNR.
    pub phase_noise_var: Option<f64>,
    pub num_bs: usize,
    pub radius_m: f64,
    pub user: Vec2,
    pub ports: usize,
    pub active: usize,
    pub user_aperture_wl: f64,
    pub bs_aperture_wl: f64,
    pub user_orientation_rad: f64,
    /// Rotation of every BS layout away from broadside.
    pub bs_orientation_offset_rad: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub sweep: SweepSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            fc_hz: 3e9,
            beta_eff_hz: 10e6,
            phase_noise_var: None,
            num_bs: 4,
            radius_m: 50.0,
            user: Vec2::new(1.0, 1.5),
            ports: 60,
            active: 10,
            user_aperture_wl: 0.5,
            bs_aperture_wl: 2.0,
            user_orientation_rad: 0.0,
            bs_orientation_offset_rad: 0.0,
            tol: DEFAULT_TOL,
            max_iters: DEFAULT_MAX_ITERS,
            sweep: SweepSpec::default(),
        }
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    let mut seen: Vec<String> = Vec::new();
    let mut values_given = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let perr = |field: &str, message: String| Error::Parse {
            line: line_no,
            field: field.to_string(),
            message,
        };
        let Some((key, value)) = line.split_once('=') else {
            return Err(perr("-", format!("expected `key = value`, got `{line}`")));
        };
        let (key, value) = (key.trim(), value.trim());
        if seen.iter().any(|k| k == key) {
            return Err(perr(key, "duplicate key".into()));
        }
        seen.push(key.to_string());

        let num = |v: &str| -> Result<f64> {
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| perr(key, format!("expected a finite number, got `{v}`")))
        };
        let int = |v: &str| -> Result<usize> {
            v.parse::<usize>()
                .map_err(|_| perr(key, format!("expected a non-negative integer, got `{v}`")))
        };

        match key {
            "system.fc_hz" => cfg.fc_hz = num(value)?,
            "system.beta_eff_hz" => cfg.beta_eff_hz = num(value)?,
            "system.phase_noise_var" => cfg.phase_noise_var = Some(num(value)?),
            "geometry.num_bs" => cfg.num_bs = int(value)?,
            "geometry.radius_m" => cfg.radius_m = num(value)?,
            "geometry.user_x" => cfg.user.x = num(value)?,
            "geometry.user_y" => cfg.user.y = num(value)?,
            "fas.M" => cfg.ports = int(value)?,
            "fas.n_s" => cfg.active = int(value)?,
            "fas.W_u" => cfg.user_aperture_wl = num(value)?,
            "fas.W_b" => cfg.bs_aperture_wl = num(value)?,
            "fas.user_orientation_rad" => cfg.user_orientation_rad = num(value)?,
            "sweep.axis" => {
                cfg.sweep.axis = SweepAxis::parse(value).ok_or_else(|| {
                    perr(key, format!("expected snr_db, M or n_s, got `{value}`"))
                })?
            }
            "sweep.values" => {
                cfg.sweep.values = parse_list(value).map_err(|m| perr(key, m))?;
                values_given = true;
            }
            "sweep.snr_db" => cfg.sweep.snr_db = parse_list(value).map_err(|m| perr(key, m))?,
            "sweep.trials" => cfg.sweep.trials = int(value)?,
            "sweep.seed" => {
                cfg.sweep.seed = value
                    .parse::<u64>()
                    .map_err(|_| perr(key, format!("expected an unsigned integer, got `{value}`")))?
            }
            "solver.tol" => cfg.tol = num(value)?,
            "solver.max_iters" => cfg.max_iters = int(value)?,
            _ => return Err(perr(key, "unknown key".into())),
        }
    }
    if !values_given {
        cfg.sweep.values = cfg.sweep.axis.default_values();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_list(value: &str) -> std::result::Result<Vec<f64>, String> {
    let inner = value.trim().trim_start_matches('[').trim_end_matches(']');
    inner
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| format!("`{s}` is not a finite number"))
        })
        .collect()
}

fn strictly_increasing(v: &[f64]) -> bool {
    !v.is_empty() && v.windows(2).all(|w| w[0] < w[1])
}

fn as_count(v: f64) -> Option<usize> {
    (v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64).then_some(v as usize)
}

impl ExperimentConfig {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.fc_hz
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        if !(self.fc_hz > 0.0) {
            return bad(format!("system.fc_hz must be positive, got {}", self.fc_hz));
        }
        if !(self.beta_eff_hz > 0.0) {
            return bad(format!("system.beta_eff_hz must be positive, got {}", self.beta_eff_hz));
        }
        if let Some(v) = self.phase_noise_var {
            if !(v > 0.0) {
                return bad(format!("system.phase_noise_var must be positive, got {v}"));
            }
        }
        if self.num_bs == 0 {
            return bad("geometry.num_bs must be at least 1".into());
        }
        if !(self.radius_m > 0.0) {
            return bad(format!("geometry.radius_m must be positive, got {}", self.radius_m));
        }
        if self.ports == 0 || self.active == 0 {
            return bad("fas.M and fas.n_s must be at least 1".into());
        }
        if self.active > self.ports {
            return bad(format!(
                "fas.n_s = {} exceeds fas.M = {}",
                self.active, self.ports
            ));
        }
        if !(self.user_aperture_wl >= 0.0) || !(self.bs_aperture_wl >= 0.0) {
            return bad("fas.W_u and fas.W_b must be non-negative".into());
        }
        if !(self.tol > 0.0) || self.max_iters == 0 {
            return bad("solver.tol must be positive and solver.max_iters at least 1".into());
        }
        let s = &self.sweep;
        if !strictly_increasing(&s.values) {
            return bad("sweep.values must be non-empty and strictly increasing".into());
        }
        if !strictly_increasing(&s.snr_db) {
            return bad("sweep.snr_db must be non-empty and strictly increasing".into());
        }
        if s.trials == 0 {
            return bad("sweep.trials must be at least 1".into());
        }
        if s.trials >= 1 << 20 {
            return bad("sweep.trials must be below 2^20".into());
        }
        if s.scenarios.is_empty() || s.methods.is_empty() {
            return bad("a sweep needs at least one scenario and one method".into());
        }
        if !(s.user_disc_radius_m >= 0.0) {
            return bad("user disc radius must be non-negative".into());
        }
        match s.axis {
            SweepAxis::SnrDb => {}
            SweepAxis::NumPorts => {
                for &v in &s.values {
                    match as_count(v) {
                        Some(m) if m >= self.active && m < 1 << 20 => {}
                        _ => {
                            return bad(format!(
                                "sweep value M = {v} must be an integer >= fas.n_s = {}",
                                self.active
                            ))
                        }
                    }
                }
            }
            SweepAxis::ActivePorts => {
                for &v in &s.values {
                    match as_count(v) {
                        Some(k) if k <= self.ports => {}
                        _ => {
                            return bad(format!(
                                "sweep value n_s = {v} must be an integer in 1..={}",
                                self.ports
                            ))
                        }
                    }
                }
            }
        }
        if self.ports >= 1 << 20 {
            return bad("fas.M must be below 2^20".into());
        }
        Ok(())
    }

    pub fn model(&self, snr_db: f64) -> Result<MeasurementModel> {
        let snr = db_to_linear(snr_db);
        match self.phase_noise_var {
            Some(v) => MeasurementModel::with_phase_noise(snr, self.beta_eff_hz, v, self.wavelength()),
            None => MeasurementModel::new(snr, self.beta_eff_hz, self.wavelength()),
        }
    }

    /// Problem instance for one sweep point with `ports` candidate ports.
    pub fn scenario_config(
        &self,
        scenario: Scenario,
        snr_db: f64,
        ports: usize,
        user: Vec2,
    ) -> Result<ScenarioConfig> {
        let anchors = symmetric_ring(self.num_bs, self.radius_m)?;
        let wl = self.wavelength();
        let layouts = match scenario {
            Scenario::UserSideFas => vec![PortLayout::linear(
                ports,
                self.user_aperture_wl,
                wl,
                self.user_orientation_rad,
            )?],
            Scenario::BsSideFas => anchors
                .iter()
                .map(|a| {
                    let to_center = (-a.position.y).atan2(-a.position.x);
                    PortLayout::linear(
                        ports,
                        self.bs_aperture_wl,
                        wl,
                        to_center + FRAC_PI_2 + self.bs_orientation_offset_rad,
                    )
                })
                .collect::<Result<_>>()?,
        };
        ScenarioConfig::new(scenario, anchors, user, layouts, self.model(snr_db)?)
    }
}
