//! Sweep execution over SNR, candidate-port count, or active-port count.
//!
//! Random draws come from a ChaCha stream keyed by the master seed and the
//! point's (scenario, M, n_s, trial) coordinates, so every SNR value of a
//! curve sees the same port subsets and results do not depend on how points
//! are scheduled across threads.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{ExperimentConfig, SweepAxis};
use crate::error::{Error, Result};
use crate::fisher::{base_fim, network_fim, peb, port_kernel, Activation, Scenario, ScenarioConfig};
use crate::linalg2::{Mat2, Vec2};
use crate::select::{random_report_with, select, Method, SelectOptions, SelectionReport};

/// Relative tolerance of the post-sweep PEB self-audit.
pub const SELF_AUDIT_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub scenario: Scenario,
    pub method: Method,
    pub axis: SweepAxis,
    pub axis_value: f64,
    pub snr_db: f64,
    pub ports: usize,
    pub active: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scenario: Scenario,
    pub method: Method,
    pub axis: SweepAxis,
    pub axis_value: f64,
    pub snr_db: f64,
    pub ports: usize,
    pub active: usize,
    /// `None` marks the point unlocalizable.
    pub peb_m: Option<f64>,
    pub logdet: Option<f64>,
    pub seed: u64,
    /// Set on per-trial rows only.
    pub trial: Option<usize>,
}

impl ResultRow {
    pub fn status(&self) -> &'static str {
        if self.peb_m.is_some() {
            "ok"
        } else {
            "unlocalizable"
        }
    }

    pub fn point(&self) -> SweepPoint {
        SweepPoint {
            scenario: self.scenario,
            method: self.method,
            axis: self.axis,
            axis_value: self.axis_value,
            snr_db: self.snr_db,
            ports: self.ports,
            active: self.active,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
    pub per_trial: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepOutput {
    pub rows: Vec<ResultRow>,
    pub trial_rows: Vec<ResultRow>,
}

/// All points of the sweep in canonical order.
pub fn sweep_points(cfg: &ExperimentConfig) -> Vec<SweepPoint> {
    let s = &cfg.sweep;
    let mut scenarios = s.scenarios.clone();
    scenarios.sort();
    scenarios.dedup();
    let mut methods = s.methods.clone();
    methods.sort();
    methods.dedup();
    let mut points = Vec::new();
    for &scenario in &scenarios {
        for &method in &methods {
            for &axis_value in &s.values {
                let snrs: &[f64] = match s.axis {
                    SweepAxis::SnrDb => std::slice::from_ref(&axis_value),
                    _ => &s.snr_db,
                };
                for &snr_db in snrs {
                    let (ports, active) = match s.axis {
                        SweepAxis::SnrDb => (cfg.ports, cfg.active),
                        SweepAxis::NumPorts => (axis_value as usize, cfg.active),
                        SweepAxis::ActivePorts => (cfg.ports, axis_value as usize),
                    };
                    points.push(SweepPoint {
                        scenario,
                        method,
                        axis: s.axis,
                        axis_value,
                        snr_db,
                        ports,
                        active,
                    });
                }
            }
        }
    }
    points
}

fn stream_id(scenario: Scenario, ports: usize, active: usize, trial: usize) -> u64 {
    let tag = match scenario {
        Scenario::UserSideFas => 1u64,
        Scenario::BsSideFas => 2u64,
    };
    (tag << 62) | ((ports as u64) << 40) | ((active as u64) << 20) | trial as u64
}

fn point_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// User position for `trial`: the configured position, or a uniform draw from
/// the disc around it. Shared by every scenario, method and SNR.
pub fn trial_user(cfg: &ExperimentConfig, seed: u64, trial: usize) -> Vec2 {
    let r = cfg.sweep.user_disc_radius_m;
    if r == 0.0 {
        return cfg.user;
    }
    let mut rng = point_rng(seed, (3u64 << 62) | trial as u64);
    let rho = r * rng.gen::<f64>().sqrt();
    let phi = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
    cfg.user + Vec2::from_angle(phi).scale(rho)
}

fn is_unlocalizable(e: &Error) -> bool {
    matches!(
        e,
        Error::NotPositiveDefinite | Error::SingularBase | Error::DegenerateGeometry { .. }
    )
}

/// PEB rebuilt from the selection through per-port kernels, independent of
/// the per-anchor weight route used by the selectors' reports.
pub fn kernel_route_peb(config: &ScenarioConfig, activation: &Activation) -> Result<f64> {
    let mut j: Mat2 = base_fim(config)?;
    for b in 0..config.anchors().len() {
        let sel = match activation {
            Activation::Shared(s) => s,
            Activation::PerAnchor(v) => &v[b],
        };
        for &m in sel.indices() {
            j += port_kernel(config, b, m)?;
        }
    }
    peb(j)
}

fn audit_report(config: &ScenarioConfig, report: &SelectionReport) -> Result<()> {
    let Some(p) = report.peb_m else {
        return Ok(());
    };
    let check = kernel_route_peb(config, &report.activation)?;
    let direct = peb(network_fim(config, &report.activation)?)?;
    for other in [check, direct] {
        if (other - p).abs() > SELF_AUDIT_RTOL * p {
            return Err(Error::Audit(format!(
                "PEB {p:e} disagrees with recomputation {other:e}"
            )));
        }
    }
    Ok(())
}

struct PointResult {
    row: ResultRow,
    trials: Vec<ResultRow>,
}

fn evaluate(cfg: &ExperimentConfig, point: &SweepPoint, seed: u64) -> Result<PointResult> {
    let opts = SelectOptions {
        seed,
        tol: cfg.tol,
        max_iters: cfg.max_iters,
        ..SelectOptions::default()
    };
    // Deterministic selectors on a fixed user need a single evaluation.
    let runs = if point.method == Method::Random || cfg.sweep.user_disc_radius_m > 0.0 {
        cfg.sweep.trials
    } else {
        1
    };
    let mut pebs: Vec<Option<f64>> = Vec::with_capacity(runs);
    let mut logdets = Vec::with_capacity(runs);
    for trial in 0..runs {
        let user = trial_user(cfg, seed, trial);
        let outcome = cfg
            .scenario_config(point.scenario, point.snr_db, point.ports, user)
            .and_then(|sc| {
                let report = if point.method == Method::Random {
                    let mut rng = point_rng(
                        seed,
                        stream_id(point.scenario, point.ports, point.active, trial),
                    );
                    random_report_with(&sc, point.active, &mut rng)?
                } else {
                    select(&sc, point.active, point.method, &opts)?
                };
                audit_report(&sc, &report)?;
                Ok(report)
            });
        match outcome {
            Ok(r) => {
                pebs.push(r.peb_m);
                logdets.push(r.objective_logdet);
            }
            Err(e) if is_unlocalizable(&e) => {
                pebs.push(None);
                logdets.push(f64::NEG_INFINITY);
            }
            Err(e) => return Err(e),
        }
    }

    let make_row = |peb_m: Option<f64>, logdet: f64, trial: Option<usize>| ResultRow {
        scenario: point.scenario,
        method: point.method,
        axis: point.axis,
        axis_value: point.axis_value,
        snr_db: point.snr_db,
        ports: point.ports,
        active: point.active,
        peb_m,
        logdet: peb_m.and(Some(logdet)).filter(|v| v.is_finite()),
        seed,
        trial,
    };
    let all_ok = pebs.iter().all(Option::is_some);
    let (peb_m, logdet) = if all_ok {
        let n = pebs.len() as f64;
        let ms = pebs.iter().map(|p| p.unwrap().powi(2)).sum::<f64>() / n;
        (Some(ms.sqrt()), logdets.iter().sum::<f64>() / n)
    } else {
        (None, f64::NEG_INFINITY)
    };
    let trials = if runs > 1 {
        pebs.iter()
            .zip(&logdets)
            .enumerate()
            .map(|(t, (p, l))| make_row(*p, *l, Some(t)))
            .collect()
    } else {
        Vec::new()
    };
    Ok(PointResult {
        row: make_row(peb_m, logdet, None),
        trials,
    })
}

/// Re-evaluate a single point, e.g. to audit a previously written row.
pub fn evaluate_point(cfg: &ExperimentConfig, point: &SweepPoint, seed: u64) -> Result<ResultRow> {
    Ok(evaluate(cfg, point, seed)?.row)
}

fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| {
        a.scenario
            .cmp(&b.scenario)
            .then(a.method.cmp(&b.method))
            .then(a.axis_value.total_cmp(&b.axis_value))
            .then(a.snr_db.total_cmp(&b.snr_db))
            .then(a.trial.cmp(&b.trial))
    });
}

pub fn run_sweep(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<SweepOutput> {
    cfg.validate()?;
    let points = sweep_points(cfg);
    let seed = cfg.sweep.seed;
    let work = || -> Result<Vec<PointResult>> {
        points
            .par_iter()
            .map(|p| evaluate(cfg, p, seed))
            .collect::<Result<Vec<_>>>()
    };
    let results = match opts.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let mut out = SweepOutput::default();
    for r in results {
        out.rows.push(r.row);
        if opts.per_trial {
            out.trial_rows.extend(r.trials);
        }
    }
    sort_rows(&mut out.rows);
    sort_rows(&mut out.trial_rows);
    Ok(out)
}
