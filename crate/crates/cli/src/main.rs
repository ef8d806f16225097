//! Command-line front end: fidelity, Fisher, posterior, and sweep
//! computations with CSV output for external plotting.
//!
//! Exit codes: 0 success, 2 argument/validation error, 3 numeric or model
//! failure, 4 I/O failure. Every subcommand is deterministic given its full
//! flag set (including the seed).

mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fidelity_core::fisher::{
    classical_fisher, cramer_rao_bound, quantum_fisher, ClassicalFamily, CramerRaoBound,
    QuantumFamily,
};
use fidelity_core::info::{estimate_phase, posterior, PhasePrior};
use fidelity_core::interferometer::{
    comparison_sweep, noisy_classical_fidelity, quantum_mz_fidelity, quantum_mz_photon_family,
    CoherentMzModel, NoisyClassicalMz, QuantumMzChannel,
};
use fidelity_core::montecarlo::{mi_plugin, sample_outcomes, OutcomeBinning};
use fidelity_core::numerics::Tolerance;

use crate::config::Config;

const EXIT_USAGE: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_IO: u8 = 4;

/// Workers for parallel sweeps; unset uses all cores, 1 forces serial.
const WORKERS_ENV: &str = "FIDELITY_WORKERS";

#[derive(Parser)]
#[command(
    name = "fidelity",
    about = "Mutual-information fidelity of Mach-Zehnder phase measurements",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fidelity of the quantum interferometer at mean photon number eta.
    Quantum(QuantumArgs),
    /// Fidelity of the Gaussian-noise classical interferometer.
    Classical(ClassicalArgs),
    /// Quantum-vs-classical fidelity sweep over eta, as CSV.
    Sweep(SweepArgs),
    /// Phase posterior for one classical measurement outcome, as CSV.
    Posterior(PosteriorArgs),
    /// Fisher information and Cramér-Rao bound for built-in families.
    Fisher(FisherArgs),
    /// Cross-validate a fidelity value against a Monte Carlo estimate.
    McCheck(McCheckArgs),
}

#[derive(Args)]
struct QuantumArgs {
    /// Mean photon number (dimensionless energy).
    #[arg(long, allow_negative_numbers = true)]
    eta: Option<f64>,
    /// Relative tolerance for the fidelity quadrature.
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Config file preloading flag values (key = value).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ClassicalArgs {
    /// Monochromatic input energy, in photon-energy units.
    #[arg(long, allow_negative_numbers = true)]
    e: Option<f64>,
    /// Gaussian readout noise width, in photon-energy units.
    #[arg(long, allow_negative_numbers = true)]
    delta: Option<f64>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Smallest eta in the sweep.
    #[arg(long, allow_negative_numbers = true)]
    eta_min: Option<f64>,
    /// Largest eta in the sweep.
    #[arg(long, allow_negative_numbers = true)]
    eta_max: Option<f64>,
    /// Number of evenly spaced sweep points.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct PosteriorArgs {
    /// Measured energy in port c (may be negative: noise tails).
    #[arg(long, allow_negative_numbers = true)]
    e_c: Option<f64>,
    /// Measured energy in port d.
    #[arg(long, allow_negative_numbers = true)]
    e_d: Option<f64>,
    /// Monochromatic input energy of the model.
    #[arg(long, allow_negative_numbers = true)]
    e: Option<f64>,
    /// Noise width of the model.
    #[arg(long, allow_negative_numbers = true)]
    delta: Option<f64>,
    /// Number of phase-grid points.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct FisherArgs {
    /// One of: bernoulli, poisson, quantum-mz, pure-qubit.
    #[arg(long)]
    model: Option<String>,
    /// Parameter value at which the information is evaluated.
    #[arg(long, allow_negative_numbers = true)]
    x0: Option<f64>,
    /// Mean photon number (quantum-mz model only).
    #[arg(long, allow_negative_numbers = true)]
    eta: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct McCheckArgs {
    /// One of: quantum, classical.
    #[arg(long)]
    target: Option<String>,
    /// Mean photon number for the quantum target.
    #[arg(long, allow_negative_numbers = true)]
    eta: Option<f64>,
    /// Input energy for the classical target.
    #[arg(long, allow_negative_numbers = true)]
    e: Option<f64>,
    /// Noise width for the classical target.
    #[arg(long, allow_negative_numbers = true)]
    delta: Option<f64>,
    /// Sample count (at least 10000).
    #[arg(long)]
    n: Option<usize>,
    /// RNG seed (ChaCha12).
    #[arg(long)]
    seed: Option<u64>,
    /// Phase bins for the plug-in estimator.
    #[arg(long)]
    phi_bins: Option<usize>,
    /// Per-axis outcome bins (classical target only).
    #[arg(long)]
    outcome_bins: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

enum CliError {
    Usage(String),
    Numeric(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numeric(_) => EXIT_NUMERIC,
            CliError::Io(_) => EXIT_IO,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Numeric(m) | CliError::Io(m) => m,
        }
    }
}

fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

fn numeric_err(e: fidelity_core::Error) -> CliError {
    CliError::Numeric(e.to_string())
}

/// Writes `content` to the path, or to stdout when no path is given.
fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        None => std::io::stdout()
            .write_all(content.as_bytes())
            .map_err(|e| CliError::Io(format!("cannot write to stdout: {e}"))),
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
    }
}

/// The summary channel: stdout when the CSV goes to a file, stderr when the
/// CSV occupies stdout (keeps the CSV bytes clean).
fn emit_summary(out: &Option<PathBuf>, line: &str) {
    if out.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

fn load_config(path: &Option<PathBuf>, keys: &[&str]) -> Result<Config, CliError> {
    match path {
        None => Ok(Config::empty()),
        Some(p) => Config::load(p, keys).map_err(CliError::Usage),
    }
}

fn tolerance(rel: f64) -> Result<Tolerance, CliError> {
    Tolerance::new(rel, 1e-12).map_err(|e| CliError::Usage(e.to_string()))
}

fn init_workers() -> Result<(), CliError> {
    if let Ok(raw) = std::env::var(WORKERS_ENV) {
        let n: usize = raw.parse().map_err(|_| {
            CliError::Usage(format!("{WORKERS_ENV} must be a positive integer, got `{raw}`"))
        })?;
        if n == 0 {
            return usage(format!("{WORKERS_ENV} must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot configure worker pool: {e}")))?;
    }
    Ok(())
}

fn cmd_quantum(args: QuantumArgs) -> Result<(), CliError> {
    let cfg = load_config(&args.config, &["eta", "rel-tol", "out"])?;
    let eta: f64 = cfg.resolve_required(args.eta, "eta").map_err(CliError::Usage)?;
    let rel: f64 = cfg.resolve(args.rel_tol, "rel-tol", 1e-8).map_err(CliError::Usage)?;
    let out = args.out.or_else(|| cfg.get_string("out").map(PathBuf::from));
    if !eta.is_finite() || eta < 0.0 {
        return usage(format!("--eta must be finite and nonnegative, got {eta}"));
    }
    let est =
        quantum_mz_fidelity(eta, &PhasePrior::Uniform, &tolerance(rel)?).map_err(numeric_err)?;
    emit(
        &out,
        &format!("eta,h_coh_bits,err\n{},{},{}\n", eta, est.bits, est.numeric_error),
    )
}

fn cmd_classical(args: ClassicalArgs) -> Result<(), CliError> {
    let cfg = load_config(&args.config, &["e", "delta", "rel-tol", "out"])?;
    let e: f64 = cfg.resolve_required(args.e, "e").map_err(CliError::Usage)?;
    let delta: f64 = cfg.resolve_required(args.delta, "delta").map_err(CliError::Usage)?;
    let rel: f64 = cfg.resolve(args.rel_tol, "rel-tol", 1e-8).map_err(CliError::Usage)?;
    let out = args.out.or_else(|| cfg.get_string("out").map(PathBuf::from));
    if !e.is_finite() || e < 0.0 {
        return usage(format!("--e must be finite and nonnegative, got {e}"));
    }
    if delta <= 0.0 || !delta.is_finite() {
        return usage(format!("--delta must be positive and finite, got {delta}"));
    }
    let est = noisy_classical_fidelity(e, delta, &PhasePrior::Uniform, &tolerance(rel)?)
        .map_err(numeric_err)?;
    emit(
        &out,
        &format!(
            "e,delta,h_class_bits,err\n{},{},{},{}\n",
            e, delta, est.bits, est.numeric_error
        ),
    )
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let cfg = load_config(&args.config, &["eta-min", "eta-max", "steps", "rel-tol", "out"])?;
    let eta_min: f64 = cfg.resolve(args.eta_min, "eta-min", 0.0).map_err(CliError::Usage)?;
    let eta_max: f64 = cfg.resolve(args.eta_max, "eta-max", 5.0).map_err(CliError::Usage)?;
    let steps: usize = cfg.resolve(args.steps, "steps", 21).map_err(CliError::Usage)?;
    let rel: f64 = cfg.resolve(args.rel_tol, "rel-tol", 1e-8).map_err(CliError::Usage)?;
    let out = args.out.or_else(|| cfg.get_string("out").map(PathBuf::from));
    if !eta_min.is_finite() || eta_min < 0.0 {
        return usage(format!("--eta-min must be finite and nonnegative, got {eta_min}"));
    }
    if eta_max <= eta_min || !eta_max.is_finite() {
        return usage(format!("--eta-max ({eta_max}) must exceed --eta-min ({eta_min})"));
    }
    if steps < 2 {
        return usage(format!("--steps must be at least 2, got {steps}"));
    }

    let grid: Vec<f64> = (0..steps)
        .map(|i| eta_min + (eta_max - eta_min) * i as f64 / (steps - 1) as f64)
        .collect();
    let rows = comparison_sweep(&grid, &tolerance(rel)?);

    let mut csv = String::from("eta,h_coh_bits,h_class_bits,h_coh_err,h_class_err\n");
    for row in rows {
        let (qb, qe) = match &row.quantum {
            Ok(est) => (est.bits, est.numeric_error),
            Err(_) => (f64::NAN, f64::NAN),
        };
        let (cb, ce) = match &row.classical {
            Ok(est) => (est.bits, est.numeric_error),
            Err(_) => (f64::NAN, f64::NAN),
        };
        csv.push_str(&format!("{},{},{},{},{}\n", row.eta, qb, cb, qe, ce));
    }
    emit(&out, &csv)
}

fn cmd_posterior(args: PosteriorArgs) -> Result<(), CliError> {
    let cfg = load_config(&args.config, &["e-c", "e-d", "e", "delta", "grid", "out"])?;
    let e_c: f64 = cfg.resolve_required(args.e_c, "e-c").map_err(CliError::Usage)?;
    let e_d: f64 = cfg.resolve_required(args.e_d, "e-d").map_err(CliError::Usage)?;
    let e: f64 = cfg.resolve_required(args.e, "e").map_err(CliError::Usage)?;
    let delta: f64 = cfg.resolve_required(args.delta, "delta").map_err(CliError::Usage)?;
    let grid: usize = cfg.resolve(args.grid, "grid", 1024).map_err(CliError::Usage)?;
    let out = args.out.or_else(|| cfg.get_string("out").map(PathBuf::from));
    if delta <= 0.0 || !delta.is_finite() {
        return usage(format!("--delta must be positive and finite, got {delta}"));
    }
    if !e.is_finite() || e < 0.0 {
        return usage(format!("--e must be finite and nonnegative, got {e}"));
    }
    if !e_c.is_finite() || !e_d.is_finite() {
        return usage("--e-c and --e-d must be finite".to_string());
    }
    if grid < 2 {
        return usage(format!("--grid must be at least 2, got {grid}"));
    }

    let model = NoisyClassicalMz::new(e, delta).map_err(numeric_err)?;
    let post = posterior(&model, &PhasePrior::Uniform, &[e_c, e_d], grid).map_err(numeric_err)?;
    let estimate = estimate_phase(&post);

    let mut csv = String::from("phi,density\n");
    for (phi, d) in post.grid().iter().zip(post.density()) {
        csv.push_str(&format!("{phi},{d}\n"));
    }
    emit(&out, &csv)?;

    let mean = match estimate.circular_mean {
        Some(m) => format!("{m}"),
        None => "undefined".to_string(),
    };
    let modes = estimate
        .modes
        .iter()
        .map(|m| m.to_string())
        .collect::<Vec<_>>()
        .join(";");
    emit_summary(
        &out,
        &format!(
            "circular_mean={mean} dispersion={} modes={modes}",
            estimate.dispersion
        ),
    );
    Ok(())
}

fn cmd_fisher(args: FisherArgs) -> Result<(), CliError> {
    let cfg = load_config(&args.config, &["model", "x0", "eta", "out"])?;
    let model: String = cfg.resolve_required(args.model, "model").map_err(CliError::Usage)?;
    let x0: f64 = cfg.resolve_required(args.x0, "x0").map_err(CliError::Usage)?;
    let out = args.out.or_else(|| cfg.get_string("out").map(PathBuf::from));

    let fisher_value = match model.as_str() {
        "bernoulli" => {
            if !(x0 > 0.0 && x0 < 1.0) {
                return usage(format!("bernoulli needs 0 < x0 < 1, got {x0}"));
            }
            classical_fisher(&ClassicalFamily::bernoulli(), x0).map_err(numeric_err)?
        }
        "poisson" => {
            if x0 <= 0.0 || x0.is_nan() {
                return usage(format!("poisson needs x0 > 0, got {x0}"));
            }
            classical_fisher(&ClassicalFamily::poisson(1e-14), x0).map_err(numeric_err)?
        }
        "quantum-mz" => {
            let eta: f64 = cfg.resolve_required(args.eta, "eta").map_err(CliError::Usage)?;
            if !eta.is_finite() || eta < 0.0 {
                return usage(format!("--eta must be finite and nonnegative, got {eta}"));
            }
            let family = quantum_mz_photon_family(eta, 1e-14).map_err(numeric_err)?;
            classical_fisher(&family, x0).map_err(numeric_err)?
        }
        "pure-qubit" => {
            quantum_fisher(&QuantumFamily::pure_qubit(), x0)
                .map_err(numeric_err)?
                .fisher_value
        }
        other => {
            return usage(format!(
                "unknown model `{other}` (expected bernoulli, poisson, quantum-mz, pure-qubit)"
            ))
        }
    };

    let bound = match cramer_rao_bound(fisher_value).map_err(numeric_err)? {
        CramerRaoBound::Bounded(b) => b.to_string(),
        CramerRaoBound::Unbounded => "inf".to_string(),
    };
    emit(
        &out,
        &format!("model,x0,fisher,cramer_rao_bound\n{model},{x0},{fisher_value},{bound}\n"),
    )
}

fn cmd_mc_check(args: McCheckArgs) -> Result<bool, CliError> {
    let keys = ["target", "eta", "e", "delta", "n", "seed", "phi-bins", "outcome-bins", "out"];
    let cfg = load_config(&args.config, &keys)?;
    let target: String = cfg.resolve_required(args.target, "target").map_err(CliError::Usage)?;
    let n: usize = cfg.resolve(args.n, "n", 1_000_000).map_err(CliError::Usage)?;
    let seed: u64 = cfg.resolve(args.seed, "seed", 1).map_err(CliError::Usage)?;
    let out = args.out.or_else(|| cfg.get_string("out").map(PathBuf::from));
    if n < 10_000 {
        return usage(format!("--n must be at least 10000, got {n}"));
    }
    let tol = Tolerance::default();

    let (analytic, estimate) = match target.as_str() {
        "quantum" => {
            let eta: f64 = cfg.resolve(args.eta, "eta", 1.0).map_err(CliError::Usage)?;
            if !eta.is_finite() || eta < 0.0 {
                return usage(format!("--eta must be finite and nonnegative, got {eta}"));
            }
            let phi_bins: usize =
                cfg.resolve(args.phi_bins, "phi-bins", 64).map_err(CliError::Usage)?;
            let analytic = quantum_mz_fidelity(eta, &PhasePrior::Uniform, &tol)
                .map_err(numeric_err)?
                .bits;
            let model = CoherentMzModel::new(eta).map_err(numeric_err)?;
            let channel = QuantumMzChannel::new(model, 1e-12).map_err(numeric_err)?;
            let batch =
                sample_outcomes(&channel, &PhasePrior::Uniform, n, seed).map_err(numeric_err)?;
            let est = mi_plugin(&batch, phi_bins, OutcomeBinning::DiscreteIdentity)
                .map_err(numeric_err)?;
            (analytic, est)
        }
        "classical" => {
            let e: f64 = cfg.resolve(args.e, "e", 1.0).map_err(CliError::Usage)?;
            let delta: f64 = cfg.resolve(args.delta, "delta", 1.0).map_err(CliError::Usage)?;
            if !e.is_finite() || e < 0.0 {
                return usage(format!("--e must be finite and nonnegative, got {e}"));
            }
            if delta <= 0.0 || !delta.is_finite() {
                return usage(format!("--delta must be positive and finite, got {delta}"));
            }
            let phi_bins: usize =
                cfg.resolve(args.phi_bins, "phi-bins", 48).map_err(CliError::Usage)?;
            let outcome_bins: usize = cfg
                .resolve(args.outcome_bins, "outcome-bins", 24)
                .map_err(CliError::Usage)?;
            let analytic = noisy_classical_fidelity(e, delta, &PhasePrior::Uniform, &tol)
                .map_err(numeric_err)?
                .bits;
            let model = NoisyClassicalMz::new(e, delta).map_err(numeric_err)?;
            let batch =
                sample_outcomes(&model, &PhasePrior::Uniform, n, seed).map_err(numeric_err)?;
            let est = mi_plugin(
                &batch,
                phi_bins,
                OutcomeBinning::EqualWidth {
                    bins: [outcome_bins, outcome_bins],
                },
            )
            .map_err(numeric_err)?;
            (analytic, est)
        }
        other => {
            return usage(format!("unknown target `{other}` (expected quantum, classical)"))
        }
    };

    let corrected = estimate.bias_corrected();
    let gap = (corrected - analytic).abs();
    let pass = gap <= 3.0 * estimate.std_error;
    let verdict = if pass { "PASS" } else { "FAIL" };
    emit(
        &out,
        &format!(
            "target,analytic_bits,mc_bits,mc_corrected_bits,std_error,bin_spec,verdict\n\
             {target},{analytic},{},{corrected},{},{},{verdict}\n",
            estimate.bits, estimate.std_error, estimate.bin_spec
        ),
    )?;
    Ok(pass)
}

fn run() -> Result<bool, CliError> {
    init_workers()?;
    match Cli::parse().command {
        Command::Quantum(a) => cmd_quantum(a).map(|()| true),
        Command::Classical(a) => cmd_classical(a).map(|()| true),
        Command::Sweep(a) => cmd_sweep(a).map(|()| true),
        Command::Posterior(a) => cmd_posterior(a).map(|()| true),
        Command::Fisher(a) => cmd_fisher(a).map(|()| true),
        Command::McCheck(a) => cmd_mc_check(a),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        // A completed check that failed its criterion is a numeric outcome.
        Ok(false) => ExitCode::from(EXIT_NUMERIC),
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
