//! Command-line front end.

pub mod config;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::Serialize;

use crate::analytic::CoverageKernel;
use crate::error::Error;
use crate::model::NetworkConfig;
use crate::optimize::{beta_coeffs, lambda_lower_bound_from, lambda_star_grid, DensityGrid};
use crate::sim::{estimates_from_outcomes, simulate_trials, trial_rng, LosModel, Metric, SimWindow};
use crate::units::{db_to_linear, per_km2_to_per_m2, per_m2_to_per_km2};
use crate::validate::{
    bound_gate, default_density_grid, fd_gate, identity_gate, mc_gate, random_config, random_u, Fault,
};

use config::{Params, RunConfig};

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(i32)]
pub enum Exit {
    Ok = 0,
    ValidationFailed = 1,
    Config = 2,
    Numerical = 3,
    NoRoot = 4,
}

impl From<&Error> for Exit {
    fn from(e: &Error) -> Self {
        match e {
            Error::Config(_) => Exit::Config,
            Error::NoRoot(_) => Exit::NoRoot,
            _ => Exit::Numerical,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "uavcov", version, about = "Coverage of cellular-connected UAVs under the LoS ball model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// SIR coverage probability over a threshold sweep.
    Coverage(CommonArgs),
    /// Coverage probability over a density grid at one threshold.
    DensitySweep(CommonArgs),
    /// Lower bound and grid optimum of the coverage-maximizing density.
    OptimalDensity(CommonArgs),
    /// Monte Carlo coverage estimates.
    Simulate(SimulateArgs),
    /// Run the consistency gates.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Flat TOML file with unit-suffixed keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub params: Params,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricChoice {
    Sir,
    Sinr,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LosModelChoice {
    Ball,
    Probabilistic,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, default_value = "sir")]
    pub metric: MetricChoice,
    #[arg(long, value_enum, default_value = "ball")]
    pub los_model: LosModelChoice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FaultChoice {
    C1Sign,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Random draws for the finite-difference gate.
    #[arg(long, default_value_t = 20)]
    pub fd_draws: usize,
    /// Random draws for the integrand-identity gate.
    #[arg(long, default_value_t = 50)]
    pub identity_draws: usize,
    #[arg(long, value_enum, hide = true)]
    pub inject_fault: Option<FaultChoice>,
}

/// Text written to `--out` or stdout, plus the exit status.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub body: String,
    pub exit: Exit,
}

fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

fn emit(out: &Option<PathBuf>, body: &str) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, body),
        None => std::io::stdout().lock().write_all(body.as_bytes()),
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let (out, result) = match cli.command {
        Command::Coverage(a) => (a.out.clone(), resolve(&a, "-10:20:5").and_then(|r| cmd_coverage(&r))),
        Command::DensitySweep(a) => (a.out.clone(), resolve(&a, "0").and_then(|r| cmd_density_sweep(&r))),
        Command::OptimalDensity(a) => (a.out.clone(), resolve(&a, "0").and_then(|r| cmd_optimal_density(&r))),
        Command::Simulate(a) => {
            (a.common.out.clone(), resolve(&a.common, "-10:20:5").and_then(|r| cmd_simulate(&r, a.metric, a.los_model)))
        }
        Command::Validate(a) => {
            let fault = a.inject_fault.map(|FaultChoice::C1Sign| Fault::C1Sign);
            (
                a.common.out.clone(),
                resolve(&a.common, "-10:20:5").and_then(|r| cmd_validate(&r, a.fd_draws, a.identity_draws, fault)),
            )
        }
    };
    match result {
        Ok(outcome) => {
            if let Err(e) = emit(&out, &outcome.body) {
                eprintln!("error: cannot write output: {e}");
                return Exit::Config as i32;
            }
            outcome.exit as i32
        }
        Err((exit, e)) => {
            eprintln!("error: {e}");
            exit as i32
        }
    }
}

pub type CmdResult = std::result::Result<Outcome, (Exit, Error)>;

fn resolve(args: &CommonArgs, default_tau_db: &str) -> std::result::Result<RunConfig, (Exit, Error)> {
    let run =
        Params::resolve(args.params.clone(), args.config.as_deref(), default_tau_db).map_err(|e| (Exit::Config, e))?;
    info!("resolved run configuration: {run:?}");
    Ok(run)
}

fn numerical(e: Error) -> (Exit, Error) {
    (Exit::from(&e), e)
}

fn single_tau(run: &RunConfig) -> std::result::Result<f64, (Exit, Error)> {
    match run.tau_db.as_slice() {
        [t] => Ok(*t),
        _ => Err((Exit::Config, Error::Config("this command takes a single --tau-db value".into()))),
    }
}

fn density_grid(run: &RunConfig) -> DensityGrid {
    let g = &run.lambda_per_km2;
    DensityGrid { lo: per_km2_to_per_m2(g.lo), hi: per_km2_to_per_m2(g.hi), points: g.points, log: g.log }
}

pub fn cmd_coverage(run: &RunConfig) -> CmdResult {
    let mut body = String::from("tau_db,p_c,los_term,nlos_term\n");
    for &t in &run.tau_db {
        let r = CoverageKernel::new(db_to_linear(t), &run.network, run.quad_order)
            .map_err(numerical)?
            .evaluate(run.network.density);
        if !r.total.is_finite() {
            return Err(numerical(Error::Numerical(format!("non-finite coverage at {t} dB"))));
        }
        writeln!(body, "{},{},{},{}", fmt_f(t), fmt_f(r.total), fmt_f(r.los_term), fmt_f(r.nlos_term)).unwrap();
    }
    Ok(Outcome { body, exit: Exit::Ok })
}

pub fn cmd_density_sweep(run: &RunConfig) -> CmdResult {
    let tau_db = single_tau(run)?;
    let grid = density_grid(run);
    let opt = lambda_star_grid(db_to_linear(tau_db), &run.network, &grid, run.quad_order).map_err(numerical)?;
    let mut body = String::from("lambda_per_km2,p_c\n");
    for &(l, p) in &opt.curve {
        writeln!(body, "{},{}", fmt_f(per_m2_to_per_km2(l)), fmt_f(p)).unwrap();
    }
    let (l, p) = opt.curve[opt.argmax_index];
    writeln!(
        body,
        "# argmax lambda_per_km2={} p_c={} interior={} refined_lambda_per_km2={} refined_p_c={}",
        fmt_f(per_m2_to_per_km2(l)),
        fmt_f(p),
        opt.interior,
        fmt_f(per_m2_to_per_km2(opt.lambda_star)),
        fmt_f(opt.coverage)
    )
    .unwrap();
    Ok(Outcome { body, exit: Exit::Ok })
}

#[derive(Debug, Serialize)]
struct OptimalDensityRecord {
    tau_db: f64,
    /// m⁻²
    lambda_lb: f64,
    /// m⁻²
    lambda_star_grid: f64,
    /// Every real root of the polynomial (m⁻²).
    roots: Vec<f64>,
    /// Coefficients of `λⁿ`, `λ` in m⁻².
    betas: Vec<f64>,
    coverage_at_lb: f64,
    coverage_at_star: f64,
    bound_holds: bool,
}

pub fn cmd_optimal_density(run: &RunConfig) -> CmdResult {
    let tau_db = single_tau(run)?;
    let tau = db_to_linear(tau_db);
    let cfg = &run.network;
    let poly = beta_coeffs(tau, cfg, run.quad_order).map_err(numerical)?;
    let lb = lambda_lower_bound_from(&poly).map_err(numerical)?;
    let star = lambda_star_grid(tau, cfg, &density_grid(run), run.quad_order).map_err(numerical)?;
    let kernel = CoverageKernel::new(tau, cfg, run.quad_order).map_err(numerical)?;
    let record = OptimalDensityRecord {
        tau_db,
        lambda_lb: lb.lambda_lb,
        lambda_star_grid: star.lambda_star,
        roots: lb.all_real_roots,
        betas: poly.coefficients,
        coverage_at_lb: kernel.evaluate(lb.lambda_lb).total,
        coverage_at_star: star.coverage,
        bound_holds: lb.lambda_lb <= star.lambda_star,
    };
    let exit = if record.bound_holds {
        Exit::Ok
    } else {
        eprintln!(
            "bound property violated: lambda_lb = {:e} > lambda_star_grid = {:e}",
            record.lambda_lb, record.lambda_star_grid
        );
        Exit::ValidationFailed
    };
    let body = serde_json::to_string_pretty(&record).expect("record serializes") + "\n";
    Ok(Outcome { body, exit })
}

fn los_model(run: &RunConfig, choice: LosModelChoice) -> LosModel {
    match choice {
        LosModelChoice::Ball => LosModel::for_config(&run.network),
        LosModelChoice::Probabilistic => LosModel::logistic(run.logistic.0, run.logistic.1),
    }
}

pub fn cmd_simulate(run: &RunConfig, metric: MetricChoice, choice: LosModelChoice) -> CmdResult {
    let cfg = &run.network;
    let model = los_model(run, choice);
    let outcomes =
        simulate_trials(cfg, &model, SimWindow::default_for(cfg), run.trials, run.seed).map_err(numerical)?;
    let taus: Vec<f64> = run.tau_db.iter().map(|&t| db_to_linear(t)).collect();
    let metrics: &[Metric] = match metric {
        MetricChoice::Sir => &[Metric::Sir],
        MetricChoice::Sinr => &[Metric::Sinr],
        MetricChoice::Both => &[Metric::Sir, Metric::Sinr],
    };
    let per_metric: Vec<_> = metrics.iter().map(|&m| estimates_from_outcomes(&outcomes, &taus, m, run.seed)).collect();
    let mut body = String::from("tau_db,metric,coverage,stderr,trials,seed\n");
    for (i, &t) in run.tau_db.iter().enumerate() {
        for est in per_metric.iter().map(|v| &v[i]) {
            writeln!(
                body,
                "{},{},{},{},{},{}",
                fmt_f(t),
                est.metric,
                fmt_f(est.coverage),
                fmt_f(est.stderr),
                est.trials,
                est.seed
            )
            .unwrap();
        }
    }
    Ok(Outcome { body, exit: Exit::Ok })
}

#[derive(Debug, Serialize)]
struct GateReport {
    name: &'static str,
    tolerance: f64,
    checks: usize,
    /// Largest observed error in the gate's own metric.
    worst: f64,
    passed: bool,
    skipped: Option<String>,
    /// Configurations that failed.
    failures: Vec<serde_json::Value>,
}

impl GateReport {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self { name, tolerance, checks: 0, worst: 0.0, passed: true, skipped: None, failures: Vec::new() }
    }

    fn record(&mut self, err: f64, context: impl FnOnce() -> serde_json::Value) {
        self.checks += 1;
        self.worst = self.worst.max(err);
        if !(err <= self.tolerance) {
            self.passed = false;
            self.failures.push(context());
        }
    }

    fn skip(mut self, why: &str) -> Self {
        self.skipped = Some(why.to_string());
        self
    }
}

#[derive(Debug, Serialize)]
struct ValidationReport {
    passed: bool,
    gates: Vec<GateReport>,
}

fn fd_gate_report(run: &RunConfig, draws: usize, fault: Option<Fault>) -> Result<GateReport, Error> {
    let mut gate = GateReport::new("finite_difference", 1e-4);
    let mut check = |cfg: &NetworkConfig, u: f64, tau: f64| -> Result<(), Error> {
        for c in fd_gate(u, tau, cfg, 4)? {
            let c = c.with_fault(fault);
            gate.record(c.rel_error, || serde_json::json!({ "u": u, "tau": tau, "check": c, "config": cfg }));
        }
        Ok(())
    };
    let cfg = &run.network;
    if cfg.los_radius > 0.0 && cfg.channel.m_los >= 2 {
        let r2 = cfg.los_radius * cfg.los_radius;
        for &t in &run.tau_db {
            for frac in [0.1, 0.5, 0.9] {
                check(cfg, frac * r2, db_to_linear(t))?;
            }
        }
    }
    let mut rng = trial_rng(run.seed, u64::MAX);
    for _ in 0..draws {
        let cfg = random_config(&mut rng, 2..=6)?;
        let u = random_u(&mut rng, &cfg);
        let tau = db_to_linear(rand::Rng::random_range(&mut rng, -10.0..20.0));
        check(&cfg, u, tau)?;
    }
    Ok(gate)
}

fn identity_gate_report(run: &RunConfig, draws: usize) -> Result<GateReport, Error> {
    let mut gate = GateReport::new("integrand_identity", 1e-9);
    let mut rng = trial_rng(run.seed, u64::MAX - 1);
    for _ in 0..draws {
        let cfg = random_config(&mut rng, 1..=8)?;
        let u = random_u(&mut rng, &cfg);
        let tau = db_to_linear(rand::Rng::random_range(&mut rng, -10.0..20.0));
        let lambda = cfg.density;
        let gap = identity_gate(u, lambda, tau, &cfg)?;
        gate.record(gap, || serde_json::json!({ "u": u, "lambda": lambda, "tau": tau, "config": cfg }));
    }
    Ok(gate)
}

fn mc_gate_report(run: &RunConfig) -> Result<GateReport, Error> {
    // Tolerance is max(0.01, 3·stderr); the recorded error is the excess over it.
    let gate = GateReport::new("mc_vs_analytic", 0.0);
    if run.network.density == 0.0 {
        return Ok(gate.skip("zero density: no base stations to simulate"));
    }
    let mut gate = gate;
    let taus: Vec<f64> = run.tau_db.iter().map(|&t| db_to_linear(t)).collect();
    for c in mc_gate(&taus, &run.network, run.trials, run.seed, run.quad_order)? {
        let excess = ((c.analytic - c.sir).abs() - 0.01f64.max(3.0 * c.stderr)).max(0.0);
        gate.record(excess, || serde_json::json!({ "comparison": c, "config": run.network }));
    }
    Ok(gate)
}

fn bound_gate_report(run: &RunConfig) -> Result<GateReport, Error> {
    // The recorded error is max(0, λ_LB/λ* - 1).
    let gate = GateReport::new("bound_property", 0.0);
    if run.network.los_radius == 0.0 {
        return Ok(gate.skip("zero LoS radius: the density polynomial is degenerate"));
    }
    let mut gate = gate;
    let grid = default_density_grid();
    for &t in &run.tau_db {
        let b = bound_gate(db_to_linear(t), &run.network, &grid, run.quad_order)?;
        gate.record(
            (b.ratio() - 1.0).max(0.0),
            || serde_json::json!({ "tau_db": t, "check": b, "config": run.network }),
        );
    }
    Ok(gate)
}

pub fn cmd_validate(run: &RunConfig, fd_draws: usize, identity_draws: usize, fault: Option<Fault>) -> CmdResult {
    let gates = vec![
        fd_gate_report(run, fd_draws, fault).map_err(numerical)?,
        identity_gate_report(run, identity_draws).map_err(numerical)?,
        mc_gate_report(run).map_err(numerical)?,
        bound_gate_report(run).map_err(numerical)?,
    ];
    let passed = gates.iter().all(|g| g.passed);
    for g in &gates {
        let status = match (&g.skipped, g.passed) {
            (Some(why), _) => format!("SKIP ({why})"),
            (None, true) => "PASS".to_string(),
            (None, false) => "FAIL".to_string(),
        };
        println!("{:<20} {status:<6} checks={:<4} worst={:.3e} tol={:.1e}", g.name, g.checks, g.worst, g.tolerance);
    }
    println!("overall: {}", if passed { "PASS" } else { "FAIL" });
    let report = ValidationReport { passed, gates };
    let body = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    Ok(Outcome { body, exit: if passed { Exit::Ok } else { Exit::ValidationFailed } })
}

/// Entry point for the binary: logging, thread cap, argument parsing.
pub fn main_entry() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Ok(v) = std::env::var("UAVCOV_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("warning: cannot size thread pool: {e}");
                }
            }
            _ => {
                eprintln!("error: UAVCOV_THREADS must be a positive integer, got `{v}`");
                return Exit::Config as i32;
            }
        }
    }
    run(Cli::parse())
}
