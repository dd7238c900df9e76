use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use fas_peb::experiments::{self, output, ExperimentConfig, RunOptions};
use fas_peb::fisher::{info_weights, network_fim, toa_variance, TOA_VARIANCE_FORMULA};
use fas_peb::linalg2::logdet;
use fas_peb::select::{select, Method, SelectOptions};
use fas_peb::{Activation, Result, Scenario};

#[derive(Parser, Debug)]
#[command(name = "fas-peb", version, about = "Positioning error bounds and port selection for fluid antenna systems")]
struct Cli {
    /// Configuration file (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; overrides `sweep.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output path (CSV for `sweep`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Also write an SVG plot next to the output.
    #[arg(long, global = true)]
    svg: bool,

    /// Scenario(s): user-side or BS-side fluid antenna.
    #[arg(long, global = true, value_enum, value_delimiter = ',')]
    scenario: Vec<ScenarioArg>,

    /// Port selection method(s).
    #[arg(long, global = true, value_enum, value_delimiter = ',')]
    method: Vec<MethodArg>,

    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate one instance and print its EFIM and PEB.
    Peb {
        #[arg(long, default_value_t = 20.0, allow_negative_numbers = true)]
        snr_db: f64,
    },
    /// Run a sweep and write CSV plus plot data.
    Sweep {
        /// Also write per-trial rows to `<out>.trials.csv`.
        #[arg(long)]
        per_trial: bool,
        /// Average over user positions drawn uniformly from a disc of this
        /// radius around the configured position.
        #[arg(long, default_value_t = 0.0)]
        user_disc: f64,
    },
    /// Print the chosen ports and their gains.
    Select {
        #[arg(long, default_value_t = 20.0, allow_negative_numbers = true)]
        snr_db: f64,
        /// Single-swap local search after relaxed rounding.
        #[arg(long)]
        polish: bool,
    },
    /// Re-verify a sweep CSV against a fresh evaluation.
    Audit { csv: PathBuf },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ScenarioArg {
    User,
    Bs,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum MethodArg {
    Random,
    Greedy,
    Relaxed,
    Exhaustive,
}

impl From<ScenarioArg> for Scenario {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::User => Scenario::UserSideFas,
            ScenarioArg::Bs => Scenario::BsSideFas,
        }
    }
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Random => Method::Random,
            MethodArg::Greedy => Method::Greedy,
            MethodArg::Relaxed => Method::Relaxed,
            MethodArg::Exhaustive => Method::Exhaustive,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => experiments::load_config(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.sweep.seed = seed;
    }
    if !cli.scenario.is_empty() {
        cfg.sweep.scenarios = cli.scenario.iter().map(|&s| s.into()).collect();
    }
    if !cli.method.is_empty() {
        cfg.sweep.methods = cli.method.iter().map(|&m| m.into()).collect();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = load(&cli)?;
    match &cli.command {
        Command::Peb { snr_db } => single(&cli, &cfg, *snr_db, false, false),
        Command::Select { snr_db, polish } => single(&cli, &cfg, *snr_db, true, *polish),
        Command::Sweep {
            per_trial,
            user_disc,
        } => {
            cfg.sweep.user_disc_radius_m = *user_disc;
            cfg.validate()?;
            let out = experiments::run_sweep(
                &cfg,
                &RunOptions {
                    threads: cli.threads,
                    per_trial: *per_trial,
                },
            )?;
            let path = cli.out.clone().unwrap_or_else(|| PathBuf::from("sweep.csv"));
            output::emit_csv(&out.rows, &path)?;
            let plot = path.with_extension("dat");
            output::emit_plot_data(&out.rows, &plot)?;
            if *per_trial {
                output::emit_trial_csv(&out.trial_rows, path.with_extension("trials.csv"))?;
            }
            if cli.svg {
                output::emit_svg(&out.rows, path.with_extension("svg"))?;
            }
            let bad = out.rows.iter().filter(|r| r.peb_m.is_none()).count();
            eprintln!(
                "wrote {} rows to {} ({} unlocalizable); plot data in {}",
                out.rows.len(),
                path.display(),
                bad,
                plot.display()
            );
            Ok(())
        }
        Command::Audit { csv } => {
            let text = std::fs::read_to_string(csv)?;
            let checked = experiments::audit_csv(&cfg, &text)?.into_result()?;
            println!("audit ok: {checked} rows match");
            Ok(())
        }
    }
}

fn single(cli: &Cli, cfg: &ExperimentConfig, snr_db: f64, verbose: bool, polish: bool) -> Result<()> {
    let scenarios: Vec<Scenario> = if cli.scenario.is_empty() {
        vec![Scenario::UserSideFas]
    } else {
        cli.scenario.iter().map(|&s| s.into()).collect()
    };
    let methods: Vec<Method> = if cli.method.is_empty() {
        vec![Method::Greedy]
    } else {
        cli.method.iter().map(|&m| m.into()).collect()
    };
    let opts = SelectOptions {
        seed: cfg.sweep.seed,
        tol: cfg.tol,
        max_iters: cfg.max_iters,
        polish,
        ..SelectOptions::default()
    };
    println!("ToA variance: {TOA_VARIANCE_FORMULA}");
    for scenario in scenarios {
        let sc = cfg.scenario_config(scenario, snr_db, cfg.ports, cfg.user)?;
        println!(
            "scenario={} SNR={snr_db} dB M={} n_s={} sigma_tau^2={:.6e} s^2",
            scenario.tag(),
            cfg.ports,
            cfg.active,
            toa_variance(sc.model())
        );
        for &method in &methods {
            let report = select(&sc, cfg.active, method, &opts)?;
            let j = network_fim(&sc, &report.activation)?;
            println!("  method={}", method.tag());
            println!("    J = [[{:.9e}, {:.9e}], [{:.9e}, {:.9e}]]", j.xx, j.xy, j.xy, j.yy);
            match logdet(j) {
                Ok(v) => println!("    logdet = {v:.9}"),
                Err(_) => println!("    logdet = undefined"),
            }
            match report.peb_m {
                Some(p) => println!("    PEB = {p:.9e} m"),
                None => println!("    PEB = unlocalizable configuration"),
            }
            if verbose {
                print_selection(&sc, &report)?;
            }
        }
    }
    Ok(())
}

fn print_selection(sc: &fas_peb::ScenarioConfig, report: &fas_peb::SelectionReport) -> Result<()> {
    let ports = |s: &fas_peb::Selection| -> String {
        s.indices().iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(" ")
    };
    match &report.activation {
        Activation::Shared(s) => println!("    ports (1-based): {}", ports(s)),
        Activation::PerAnchor(v) => {
            for (a, s) in sc.anchors().iter().zip(v) {
                println!("    anchor {} ports (1-based): {}", a.id, ports(s));
            }
        }
    }
    if !report.gains.is_empty() {
        let g: Vec<String> = report.gains.iter().map(|g| format!("{g:.6e}")).collect();
        println!("    marginal gains: {}", g.join(" "));
    }
    for (a, w) in sc.anchors().iter().zip(info_weights(sc, &report.activation)?) {
        println!(
            "    anchor {}: lambda_tau={:.6e} lambda_theta={:.6e}",
            a.id, w.lambda_tau, w.lambda_theta
        );
    }
    if report.regularization > 0.0 {
        println!("    regularization eps = {:.3e}", report.regularization);
    }
    println!("    iterations = {}", report.iterations);
    Ok(())
}
