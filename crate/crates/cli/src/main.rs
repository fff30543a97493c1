//! Command-line front end for the secure-beamforming pipeline.
//!
//! Every subcommand follows the same contract: parse the scenario, write a
//! run manifest to the output directory *before* any computation, compute,
//! then write artifacts. Artifacts contain no wall-clock data, so rerunning
//! the same seeded configuration reproduces them byte for byte.
//!
//! Exit codes: 0 success, 1 configuration or I/O problem, 3 infeasible
//! scenario, 4 numerical failure. Errors are reported on stderr as a single
//! JSON object with a machine-readable `error_class`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use secbeam::antenna::beampattern_grid;
use secbeam::evaluation::{
    beampattern_csv, brute_force_oracle, histogram_csv, monte_carlo_outage, power_sweep,
    sweep_csv, EvaluationError, SweepConfig,
};
use secbeam::optimizer::{
    bisection_search, solve_non_robust, solve_perfect_csi, solve_sdr_randomization,
    BeamformerSolution, OptimizerError, Scheme,
};
use secbeam::scenario::{load_scenario, BuiltScenario, ScenarioError, ScenarioFile};

#[derive(Parser)]
#[command(name = "secbeam", version, about = "Robust secure multicast beamforming simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario and write the certified beam.
    Solve(SolveArgs),
    /// Solve across a transmit-power range for one or more schemes.
    Sweep(SweepArgs),
    /// Solve, then estimate outage probabilities by Monte Carlo.
    Montecarlo(MontecarloArgs),
    /// Solve, then render the normalized far-field gain pattern.
    Beampattern(BeampatternArgs),
    /// Exhaustive two-antenna grid reference (exact CSI).
    Oracle(OracleArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario description file (TOML).
    #[arg(long)]
    scenario: PathBuf,
    /// Override the scenario's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for the manifest and artifacts (created if missing).
    #[arg(long, default_value = "secbeam-out")]
    out: PathBuf,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    Robust,
    Perfect,
    NonRobust,
    Sdr,
}

impl SchemeArg {
    fn to_scheme(self) -> Scheme {
        match self {
            SchemeArg::Robust => Scheme::Robust,
            SchemeArg::Perfect => Scheme::PerfectCsi,
            SchemeArg::NonRobust => Scheme::NonRobust,
            SchemeArg::Sdr => Scheme::SdrRandomization,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Beamforming scheme.
    #[arg(long, value_enum, default_value = "robust")]
    scheme: SchemeArg,
    /// Candidate count for the randomized-rounding scheme.
    #[arg(long, default_value_t = 500)]
    sdr_candidates: usize,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Transmit power range in dB as lo:hi:step (inclusive endpoints).
    #[arg(long)]
    power_sweep: String,
    /// Comma-separated schemes to sweep.
    #[arg(long, default_value = "robust,perfect")]
    schemes: String,
    /// Candidate count for the randomized-rounding scheme.
    #[arg(long, default_value_t = 500)]
    sdr_candidates: usize,
    /// Monte Carlo draws used to document the non-robust baseline.
    #[arg(long, default_value_t = 1000)]
    draws: usize,
}

#[derive(Args)]
struct MontecarloArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Beamforming scheme to validate.
    #[arg(long, value_enum, default_value = "robust")]
    scheme: SchemeArg,
    /// Number of channel-error draws.
    #[arg(long, default_value_t = 10000)]
    draws: usize,
    /// Candidate count for the randomized-rounding scheme.
    #[arg(long, default_value_t = 500)]
    sdr_candidates: usize,
}

#[derive(Args)]
struct BeampatternArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Beamforming scheme to render.
    #[arg(long, value_enum, default_value = "robust")]
    scheme: SchemeArg,
    /// Grid resolution as THETAxPHI steps, e.g. 181x361.
    #[arg(long, default_value = "181x361")]
    grid: String,
    /// Candidate count for the randomized-rounding scheme.
    #[arg(long, default_value_t = 500)]
    sdr_candidates: usize,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Grid resolution as TxPSI steps over the two-antenna weight space.
    #[arg(long, default_value = "360x360")]
    grid: String,
}

/// Error classes, ordered by exit code: config/IO = 1, infeasible = 3,
/// numerical = 4.
enum CliError {
    Config(String),
    Infeasible { binding: &'static str, message: String },
    Numerical(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Infeasible { .. } => 3,
            CliError::Numerical(_) => 4,
        }
    }

    fn report(&self) -> serde_json::Value {
        match self {
            CliError::Config(m) => {
                serde_json::json!({ "error_class": "config", "message": m })
            }
            CliError::Infeasible { binding, message } => serde_json::json!({
                "error_class": "infeasible",
                "binding": binding,
                "message": message,
            }),
            CliError::Numerical(m) => {
                serde_json::json!({ "error_class": "numerical", "message": m })
            }
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<OptimizerError> for CliError {
    fn from(e: OptimizerError) -> Self {
        match &e {
            OptimizerError::Infeasible { binding } => CliError::Infeasible {
                binding: binding.as_str(),
                message: e.to_string(),
            },
            OptimizerError::InvalidConfig(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<EvaluationError> for CliError {
    fn from(e: EvaluationError) -> Self {
        match &e {
            EvaluationError::ZeroDraws
            | EvaluationError::OracleArity(_)
            | EvaluationError::EmptyGrid => CliError::Config(e.to_string()),
            EvaluationError::Optimizer(inner) => match inner {
                OptimizerError::Infeasible { binding } => CliError::Infeasible {
                    binding: binding.as_str(),
                    message: e.to_string(),
                },
                _ => CliError::Numerical(e.to_string()),
            },
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("I/O error: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => run_solve(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Montecarlo(a) => run_montecarlo(a),
        Command::Beampattern(a) => run_beampattern(a),
        Command::Oracle(a) => run_oracle(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.report());
            ExitCode::from(e.exit_code())
        }
    }
}

/// Parse the scenario, apply the seed override, and build the instance.
fn load(common: &CommonArgs) -> Result<BuiltScenario, CliError> {
    let mut file: ScenarioFile = load_scenario(&common.scenario)?;
    if let Some(seed) = common.seed {
        file.seed = seed;
    }
    Ok(file.build()?)
}

/// Write the run manifest before any computation starts, so an interrupted
/// or failed run still documents what was attempted.
fn write_manifest(
    common: &CommonArgs,
    command: &str,
    parameters: serde_json::Value,
    seed: u64,
) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct RunManifest<'a> {
        tool: &'a str,
        version: &'a str,
        command: &'a str,
        scenario: String,
        seed: u64,
        parameters: serde_json::Value,
    }
    fs::create_dir_all(&common.out)?;
    let manifest = RunManifest {
        tool: "secbeam",
        version: env!("CARGO_PKG_VERSION"),
        command,
        scenario: common.scenario.display().to_string(),
        seed,
        parameters,
    };
    write_json(&common.out.join("manifest.json"), &manifest)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Numerical(format!("serialization failed: {e}")))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn solve_scheme(
    built: &BuiltScenario,
    scheme: SchemeArg,
    sdr_candidates: usize,
) -> Result<BeamformerSolution, CliError> {
    let sol = match scheme {
        SchemeArg::Robust => bisection_search(&built.channels, &built.problem, &built.algorithm)?,
        SchemeArg::Perfect => solve_perfect_csi(&built.channels, &built.problem, &built.algorithm)?,
        SchemeArg::NonRobust => solve_non_robust(&built.channels, &built.problem, &built.algorithm)?,
        SchemeArg::Sdr => solve_sdr_randomization(
            &built.channels,
            &built.problem,
            &built.algorithm,
            sdr_candidates,
            built.seed,
        )?,
    };
    Ok(sol)
}

#[derive(Serialize)]
struct SolutionArtifact {
    scheme: &'static str,
    min_asr_bps_hz: f64,
    converged: bool,
    degraded: bool,
    rank1_gap: f64,
    rate_interval: [f64; 2],
    per_antenna_power: Vec<f64>,
    w_re: Vec<f64>,
    w_im: Vec<f64>,
}

impl SolutionArtifact {
    fn from_solution(sol: &BeamformerSolution) -> Self {
        SolutionArtifact {
            scheme: sol.scheme.as_str(),
            min_asr_bps_hz: sol.min_asr,
            converged: sol.converged,
            degraded: sol.degraded,
            rank1_gap: sol.rank1_gap,
            rate_interval: [sol.rate_interval.0, sol.rate_interval.1],
            per_antenna_power: sol.w.iter().map(|c| c.norm_sqr()).collect(),
            w_re: sol.w.iter().map(|c| c.re).collect(),
            w_im: sol.w.iter().map(|c| c.im).collect(),
        }
    }
}

fn run_solve(args: SolveArgs) -> Result<(), CliError> {
    let built = load(&args.common)?;
    write_manifest(
        &args.common,
        "solve",
        serde_json::json!({
            "scheme": args.scheme.to_scheme().as_str(),
            "sdr_candidates": args.sdr_candidates,
        }),
        built.seed,
    )?;
    let sol = solve_scheme(&built, args.scheme, args.sdr_candidates)?;
    write_json(&args.common.out.join("solution.json"), &SolutionArtifact::from_solution(&sol))?;
    println!(
        "{}: certified rate {:.4} bits/s/Hz (converged: {}, rank-one gap {:.2e})",
        sol.scheme.as_str(),
        sol.min_asr,
        sol.converged,
        sol.rank1_gap,
    );
    Ok(())
}

fn parse_power_sweep(text: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    let [lo, hi, step] = parts.as_slice() else {
        return Err(CliError::Config(format!(
            "--power-sweep expects lo:hi:step, got {text:?}"
        )));
    };
    let parse = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| CliError::Config(format!("invalid number {s:?} in --power-sweep")))
    };
    let (lo, hi, step) = (parse(lo)?, parse(hi)?, parse(step)?);
    if !(step > 0.0) || hi < lo {
        return Err(CliError::Config(
            "power sweep needs hi >= lo and step > 0".to_string(),
        ));
    }
    let mut powers = Vec::new();
    let mut p = lo;
    // Half-step slack keeps the inclusive endpoint robust to rounding.
    while p <= hi + step * 0.5 {
        powers.push(p);
        p += step;
    }
    Ok(powers)
}

fn parse_schemes(text: &str) -> Result<Vec<Scheme>, CliError> {
    text.split(',')
        .map(|name| match name.trim() {
            "robust" => Ok(Scheme::Robust),
            "perfect" | "perfect-csi" => Ok(Scheme::PerfectCsi),
            "non-robust" => Ok(Scheme::NonRobust),
            "sdr" | "sdr-randomization" => Ok(Scheme::SdrRandomization),
            other => Err(CliError::Config(format!("unknown scheme {other:?}"))),
        })
        .collect()
}

fn parse_grid(text: &str) -> Result<(usize, usize), CliError> {
    let Some((a, b)) = text.split_once('x') else {
        return Err(CliError::Config(format!("--grid expects AxB, got {text:?}")));
    };
    let parse = |s: &str| {
        s.parse::<usize>()
            .ok()
            .filter(|&v| v >= 2)
            .ok_or_else(|| CliError::Config(format!("invalid grid dimension {s:?}")))
    };
    Ok((parse(a)?, parse(b)?))
}

fn run_sweep(args: SweepArgs) -> Result<(), CliError> {
    let powers_db = parse_power_sweep(&args.power_sweep)?;
    let schemes = parse_schemes(&args.schemes)?;
    let built = load(&args.common)?;
    write_manifest(
        &args.common,
        "sweep",
        serde_json::json!({
            "powers_db": powers_db,
            "schemes": schemes.iter().map(|s| s.as_str()).collect::<Vec<_>>(),
            "sdr_candidates": args.sdr_candidates,
            "draws": args.draws,
        }),
        built.seed,
    )?;
    let sweep = SweepConfig {
        powers_db,
        schemes,
        sdr_candidates: args.sdr_candidates,
        nonrobust_draws: args.draws,
        seed: built.seed,
    };
    let rows = power_sweep(&built.channels, &built.problem, &built.algorithm, &sweep);
    fs::write(args.common.out.join("sweep.csv"), sweep_csv(&rows))?;
    let failures = rows.iter().filter(|r| r.error.is_some()).count();
    println!("sweep: {} rows written ({} failed)", rows.len(), failures);
    Ok(())
}

fn run_montecarlo(args: MontecarloArgs) -> Result<(), CliError> {
    let built = load(&args.common)?;
    write_manifest(
        &args.common,
        "montecarlo",
        serde_json::json!({
            "scheme": args.scheme.to_scheme().as_str(),
            "draws": args.draws,
            "sdr_candidates": args.sdr_candidates,
        }),
        built.seed,
    )?;
    let sol = solve_scheme(&built, args.scheme, args.sdr_candidates)?;
    let report = monte_carlo_outage(
        &built.channels,
        &built.problem,
        &sol.w,
        sol.min_asr,
        args.draws,
        built.seed,
    )?;
    write_json(&args.common.out.join("solution.json"), &SolutionArtifact::from_solution(&sol))?;
    write_json(&args.common.out.join("montecarlo.json"), &report)?;
    if let Some(hist) = &report.interference_histogram {
        fs::write(args.common.out.join("interference_histogram.csv"), histogram_csv(hist))?;
    }
    println!(
        "montecarlo: {} draws — interference satisfaction {:.4}, secrecy outage {:.4}",
        report.n_draws, report.aggregate_pu_satisfaction, report.aggregate_secrecy_outage,
    );
    Ok(())
}

fn run_beampattern(args: BeampatternArgs) -> Result<(), CliError> {
    let (theta_steps, phi_steps) = parse_grid(&args.grid)?;
    let built = load(&args.common)?;
    write_manifest(
        &args.common,
        "beampattern",
        serde_json::json!({
            "scheme": args.scheme.to_scheme().as_str(),
            "grid": [theta_steps, phi_steps],
            "sdr_candidates": args.sdr_candidates,
        }),
        built.seed,
    )?;
    let sol = solve_scheme(&built, args.scheme, args.sdr_candidates)?;
    let grid = beampattern_grid(&built.geometry, &built.directivity, &sol.w, theta_steps, phi_steps)
        .map_err(|e| CliError::Config(e.to_string()))?;
    write_json(&args.common.out.join("solution.json"), &SolutionArtifact::from_solution(&sol))?;
    fs::write(args.common.out.join("beampattern.csv"), beampattern_csv(&grid))?;
    let (ti, pi) = grid.argmax();
    println!(
        "beampattern: {}x{} grid written, peak at theta {:.1} deg, phi {:.1} deg",
        theta_steps, phi_steps, grid.theta_deg[ti], grid.phi_deg[pi],
    );
    Ok(())
}

fn run_oracle(args: OracleArgs) -> Result<(), CliError> {
    let (t_steps, psi_steps) = parse_grid(&args.grid)?;
    let built = load(&args.common)?;
    write_manifest(
        &args.common,
        "oracle",
        serde_json::json!({ "grid": [t_steps, psi_steps] }),
        built.seed,
    )?;
    let exact = built.channels.with_exact_csi();
    let result = brute_force_oracle(&exact, &built.problem, t_steps, psi_steps)?;
    #[derive(Serialize)]
    struct OracleArtifact {
        min_asr_bps_hz: f64,
        t: f64,
        psi: f64,
        w_re: Vec<f64>,
        w_im: Vec<f64>,
    }
    write_json(
        &args.common.out.join("oracle.json"),
        &OracleArtifact {
            min_asr_bps_hz: result.min_asr,
            t: result.t,
            psi: result.psi,
            w_re: result.w.iter().map(|c| c.re).collect(),
            w_im: result.w.iter().map(|c| c.im).collect(),
        },
    )?;
    println!("oracle: best grid rate {:.4} bits/s/Hz", result.min_asr);
    Ok(())
}
