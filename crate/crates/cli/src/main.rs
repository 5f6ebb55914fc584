use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use plateau_core::bounds::{self, BoundsError};
use plateau_core::circuit::{brickwork_1d, Architecture, CircuitError, DEFAULT_MAX_EXACT_CONNECTIVITY_N};
use plateau_core::hamiltonian::{parse_pauli, HamiltonianError, HamiltonianSpec, SupportPattern};
use plateau_core::oracle::{self, exact_gx, haar_gx, HaarConfig, OperatorBasis, OracleError};
use plateau_core::sweep::{periodic_width, run_sweep, SweepConfig, SweepError};
use plateau_core::walk::{estimate_second_moment, EstimatorConfig, WalkError, WalkKind};

mod output;

#[derive(Parser)]
#[command(name = "plateau", version, about = "Barren-plateau diagnostics for random variational circuits")]
struct Cli {
    /// Worker threads for sampling loops (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Biased,
    Unbiased,
}

#[derive(Subcommand)]
enum Command {
    /// Check an architecture file; exit 1 if it violates any rule.
    Validate { arch: PathBuf },
    /// Monte Carlo estimate of E f² for an architecture and Hamiltonian.
    Estimate {
        arch: PathBuf,
        ham: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = MethodArg::Biased)]
        method: MethodArg,
        /// Override the Hoeffding sample count.
        #[arg(long)]
        samples: Option<u64>,
        /// Score every term on each trajectory.
        #[arg(long)]
        reuse_trajectory: bool,
    },
    /// Exact E f² by propagating the walk distribution.
    Exact { arch: PathBuf, ham: PathBuf },
    /// Analytic lower and upper bounds on g_x.
    Bounds {
        arch: PathBuf,
        /// Comma-separated support sites.
        #[arg(long, value_delimiter = ',')]
        support: Option<Vec<usize>>,
        /// Support size |x|; defaults to the number of support sites.
        #[arg(long)]
        abs_x: Option<usize>,
        /// Use the 1D brickwork bounds (the architecture must be a brickwork).
        #[arg(long)]
        one_d: bool,
        /// Locality for the 1D bounds; defaults to the support's periodic width.
        #[arg(long)]
        k: Option<usize>,
        /// Regular connectivity, when it cannot be computed.
        #[arg(long)]
        r: Option<usize>,
    },
    /// Depth sweep over the 1D brickwork, written as CSV.
    Sweep {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        q: usize,
        /// Locality used by the bounds; also sizes the default Hamiltonian.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 2)]
        d_min: usize,
        #[arg(long)]
        d_max: usize,
        /// Hamiltonian file; defaults to a single Z-type term on sites 0..k.
        #[arg(long)]
        ham: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long)]
        samples: Option<u64>,
        /// Skip the exact column.
        #[arg(long)]
        no_exact: bool,
        /// Output CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the walk's exact g_x with a Haar-random statevector simulation.
    HaarCheck {
        arch: PathBuf,
        /// Pauli string such as ZZII (q = 2 only).
        #[arg(long, conflicts_with_all = ["sites", "ops"])]
        pauli: Option<String>,
        /// Comma-separated sites of the term.
        #[arg(long, value_delimiter = ',', requires = "ops")]
        sites: Option<Vec<usize>>,
        /// Comma-separated basis indices, one per site.
        #[arg(long, value_delimiter = ',', requires = "sites")]
        ops: Option<Vec<usize>>,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write a periodic 1D brickwork architecture.
    #[command(name = "gen-1d")]
    Gen1d {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        q: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Domain(String),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{0}")]
    Parse(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Io { .. } | CliError::Parse(_) => 2,
        }
    }
}

macro_rules! domain_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Domain(e.to_string())
            }
        }
    )*};
}

domain_from!(BoundsError, WalkError, OracleError, SweepError);

impl From<CircuitError> for CliError {
    fn from(e: CircuitError) -> Self {
        match e {
            CircuitError::Json(_) => CliError::Parse(e.to_string()),
            e => CliError::Domain(e.to_string()),
        }
    }
}

impl From<HamiltonianError> for CliError {
    fn from(e: HamiltonianError) -> Self {
        match e {
            HamiltonianError::Json(_) => CliError::Parse(e.to_string()),
            e => CliError::Domain(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn load_arch(path: &Path) -> Result<Architecture, CliError> {
    Ok(Architecture::from_json_str(&read(path)?)?)
}

fn load_ham(path: &Path) -> Result<HamiltonianSpec, CliError> {
    Ok(HamiltonianSpec::from_json_str(&read(path)?)?)
}

fn write_out(path: Option<&Path>, body: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, body).map_err(|source| CliError::Io { path: p.display().to_string(), source }),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(body.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| CliError::Io { path: "<stdout>".into(), source })
        }
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    write_out(None, &s)
}

fn seed_or_default(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        log::warn!("no --seed given; using 0");
        0
    })
}

fn check_match(arch: &Architecture, spec: &HamiltonianSpec) -> Result<(), CliError> {
    if (arch.n, arch.q) != (spec.n(), spec.q()) {
        return Err(CliError::Domain(format!(
            "architecture has (n, q) = ({}, {}) but the Hamiltonian has ({}, {})",
            arch.n,
            arch.q,
            spec.n(),
            spec.q()
        )));
    }
    Ok(())
}

fn cmd_validate(arch: &Path) -> Result<(), CliError> {
    let arch = load_arch(arch)?;
    let violations = arch.validate();
    let valid = violations.is_empty();
    let messages: Vec<String> = violations.iter().map(ToString::to_string).collect();
    let mut report = json!({ "valid": valid, "violations": violations, "messages": messages });
    if valid {
        report["m"] = json!(arch.gate_count());
        report["d"] = json!(arch.depth());
    }
    print_json(&report)?;
    if valid {
        Ok(())
    } else {
        Err(CliError::Domain(format!("invalid architecture: {}", messages.join("; "))))
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_estimate(
    arch: &Path,
    ham: &Path,
    epsilon: f64,
    delta: f64,
    seed: Option<u64>,
    method: MethodArg,
    samples: Option<u64>,
    reuse: bool,
) -> Result<(), CliError> {
    let arch = load_arch(arch)?;
    let spec = load_ham(ham)?;
    check_match(&arch, &spec)?;
    let kind = match method {
        MethodArg::Biased => WalkKind::Biased,
        MethodArg::Unbiased => WalkKind::Unbiased,
    };
    let mut cfg = EstimatorConfig::new(epsilon, delta, seed_or_default(seed))
        .with_method(kind)
        .with_reuse_trajectory(reuse);
    if let Some(n) = samples {
        cfg = cfg.with_samples(n);
    }
    print_json(&estimate_second_moment(&arch, &spec, &cfg)?)
}

fn cmd_exact(arch: &Path, ham: &Path) -> Result<(), CliError> {
    let arch = load_arch(arch)?;
    let spec = load_ham(ham)?;
    check_match(&arch, &spec)?;
    let value = oracle::exact_second_moment(&arch, &spec).map_err(|e| match e {
        OracleError::TooManySites { .. } => {
            CliError::Domain(format!("{e}; use `plateau estimate` for larger systems"))
        }
        e => e.into(),
    })?;
    print_json(&json!({ "second_moment": value, "sum_c2": spec.sum_c2(), "n": arch.n, "q": arch.q }))
}

fn cmd_bounds(
    arch: &Path,
    support: Option<Vec<usize>>,
    abs_x: Option<usize>,
    one_d: bool,
    k: Option<usize>,
    r: Option<usize>,
) -> Result<(), CliError> {
    let arch = load_arch(arch)?;
    arch.check()?;
    let d = arch.depth();
    let sites: Option<BTreeSet<usize>> = support.map(|s| s.into_iter().collect());
    if let Some(s) = &sites {
        if let Some(&bad) = s.iter().find(|&&i| i >= arch.n) {
            return Err(CliError::Domain(format!("support site {bad} out of range for n = {}", arch.n)));
        }
    }
    let abs_x = match (&sites, abs_x) {
        (Some(s), Some(a)) if a != s.len() => {
            return Err(CliError::Domain(format!("--abs-x {a} disagrees with {} support sites", s.len())))
        }
        (Some(s), _) => s.len(),
        (None, Some(a)) => a,
        (None, None) => return Err(CliError::Domain("give --support or --abs-x".into())),
    };
    let report = if one_d {
        if brickwork_1d(arch.n, arch.q, d).ok().as_ref() != Some(&arch) {
            return Err(CliError::Domain("--one-d needs a periodic 1D brickwork architecture".into()));
        }
        let width = sites
            .as_ref()
            .map(|s| periodic_width(&SupportPattern::uniform(s.iter().copied(), 1), arch.n));
        let k = match (k, width) {
            (Some(k), Some(w)) if k < w => {
                return Err(CliError::Domain(format!("--k {k} is smaller than the support width {w}")))
            }
            (Some(k), _) => k,
            (None, Some(w)) => w,
            (None, None) => return Err(CliError::Domain("--one-d without --support needs --k".into())),
        };
        bounds::one_d_report(arch.q, arch.n, k, abs_x, d)?
    } else {
        let s = sites.ok_or_else(|| CliError::Domain("the general bounds need --support".into()))?;
        let gates_x = if s.len() == arch.n { 0 } else { arch.gates_crossing(&s)?.gates_crossing };
        let r = match r {
            Some(r) => Some(r),
            None => arch.regular_connectivity(DEFAULT_MAX_EXACT_CONNECTIVITY_N)?,
        };
        if r.is_none() {
            return Err(CliError::Domain(format!(
                "regular connectivity is not computed for n = {} > {}; pass --r",
                arch.n, DEFAULT_MAX_EXACT_CONNECTIVITY_N
            )));
        }
        bounds::general_report(arch.q, arch.n, abs_x, gates_x, d, r)?
    };
    print_json(&report)
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    n: usize,
    q: usize,
    k: Option<usize>,
    d_min: usize,
    d_max: usize,
    ham: Option<&Path>,
    seed: Option<u64>,
    epsilon: f64,
    delta: f64,
    samples: Option<u64>,
    exact: bool,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let spec = match (ham, k) {
        (Some(p), _) => load_ham(p)?,
        (None, Some(k)) => default_sweep_hamiltonian(n, q, k)?,
        (None, None) => return Err(CliError::Domain("sweep needs --ham or --k".into())),
    };
    let mut estimator = EstimatorConfig::new(epsilon, delta, seed_or_default(seed));
    if let Some(s) = samples {
        estimator = estimator.with_samples(s);
    }
    let cfg = SweepConfig { n, q, k, d_min, d_max, estimator, exact };
    let rows = run_sweep(&cfg, &spec)?;
    let csv = output::sweep_csv(&rows).map_err(|e| CliError::Io { path: "<csv>".into(), source: e })?;
    write_out(out, &csv)
}

/// `Z^{⊗k}` on sites `0..k`: Pauli Z for qubits, the clock operator otherwise.
fn default_sweep_hamiltonian(n: usize, q: usize, k: usize) -> Result<HamiltonianSpec, CliError> {
    if k == 0 || k > n {
        return Err(CliError::Domain(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
    }
    let op = if q == 2 { 3 } else { 1 };
    let basis = plateau_core::BasisKind::default_for(q);
    let term = plateau_core::Term { pattern: SupportPattern::uniform(0..k, op), coeff: Complex64::new(1.0, 0.0) };
    Ok(HamiltonianSpec::new(n, q, basis, vec![term])?)
}

fn cmd_haar_check(
    arch: &Path,
    pauli: Option<String>,
    sites: Option<Vec<usize>>,
    ops: Option<Vec<usize>>,
    samples: u64,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let arch = load_arch(arch)?;
    let (x, basis) = match (pauli, sites, ops) {
        (Some(p), _, _) => {
            if p.chars().count() != arch.n {
                return Err(CliError::Domain(format!("Pauli string has length {} but n = {}", p.chars().count(), arch.n)));
            }
            let x = if p.chars().all(|c| c == 'I') {
                SupportPattern::empty()
            } else {
                parse_pauli(&[(p.as_str(), Complex64::new(1.0, 0.0))])?.terms()[0].pattern.clone()
            };
            (x, OperatorBasis::pauli())
        }
        (None, Some(s), Some(o)) => {
            if s.len() != o.len() {
                return Err(CliError::Domain(format!("{} sites but {} operator indices", s.len(), o.len())));
            }
            let x = SupportPattern::from_entries(s.into_iter().zip(o).filter(|&(_, op)| op != 0));
            let basis = OperatorBasis::for_kind(plateau_core::BasisKind::default_for(arch.q), arch.q)?;
            (x, basis)
        }
        _ => return Err(CliError::Domain("give --pauli or --sites with --ops".into())),
    };
    let cfg = HaarConfig::new(samples, seed_or_default(seed));
    let haar = haar_gx(&arch, &x, &basis, &cfg)?;
    let exact = exact_gx(&arch, &x)?;
    let diff = haar.estimate - exact;
    let z = if diff == 0.0 { 0.0 } else { diff / haar.std_error };
    print_json(&json!({ "haar": haar, "exact": exact, "z": z }))
}

fn cmd_gen_1d(n: usize, q: usize, d: usize, out: Option<&Path>) -> Result<(), CliError> {
    let arch = brickwork_1d(n, q, d)?;
    let mut body = arch.to_json_string();
    body.push('\n');
    write_out(out, &body)
}

fn configure_threads(threads: Option<usize>) -> Result<(), CliError> {
    let Some(t) = threads else { return Ok(()) };
    if t == 0 {
        return Err(CliError::Domain("--threads must be at least 1".into()));
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(t)
        .build_global()
        .map_err(|e| CliError::Domain(e.to_string()))?;
    #[cfg(not(feature = "parallel"))]
    log::warn!("built without the `parallel` feature; --threads {t} ignored");
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads(cli.threads)?;
    match cli.command {
        Command::Validate { arch } => cmd_validate(&arch),
        Command::Estimate { arch, ham, epsilon, delta, seed, method, samples, reuse_trajectory } => {
            cmd_estimate(&arch, &ham, epsilon, delta, seed, method, samples, reuse_trajectory)
        }
        Command::Exact { arch, ham } => cmd_exact(&arch, &ham),
        Command::Bounds { arch, support, abs_x, one_d, k, r } => cmd_bounds(&arch, support, abs_x, one_d, k, r),
        Command::Sweep { n, q, k, d_min, d_max, ham, seed, epsilon, delta, samples, no_exact, out } => cmd_sweep(
            n,
            q,
            k,
            d_min,
            d_max,
            ham.as_deref(),
            seed,
            epsilon,
            delta,
            samples,
            !no_exact,
            out.as_deref(),
        ),
        Command::HaarCheck { arch, pauli, sites, ops, samples, seed } => {
            cmd_haar_check(&arch, pauli, sites, ops, samples, seed)
        }
        Command::Gen1d { n, q, d, out } => cmd_gen_1d(n, q, d, out.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
