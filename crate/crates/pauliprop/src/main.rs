//! Command-line front end: seeded experiment runs, parameter scans, graph
//! and distribution exports, and the oracle cross-check suite.
//!
//! Exit codes: 0 on success, 1 for usage or configuration problems, 2 when
//! a tolerance check fails, 3 when a size or resource limit is hit.
//! Identical configurations (including seeds and thread settings) produce
//! byte-identical output files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use pauliprop::circuits::{Circuit, Family};
use pauliprop::dense::{build_full_omega, check_orthogonality, schrodinger_expectation};
use pauliprop::network::{omega_graph, GRAPH_THRESHOLD};
use pauliprop::pauli::{Axis, PauliString};
use pauliprop::propagation::{
    expectation_zero_state, propagate_with, NoiseModel, OperatorSum, PropagationOptions,
    PropagationTrace, TruncationMode,
};
use pauliprop::stats::{fit_neps, ordered_spectrum, pt1_curve, pt2_curve, StatsError};

/// Register cap for runs that expand layers exactly (`exact` and `global`
/// modes can hold up to `4^N` terms).
const EXACT_MODE_MAX_QUBITS: usize = 10;
/// Register cap for anything built on the dense transfer matrix.
const DENSE_MAX_QUBITS: usize = 6;
/// Seeded circuits per family in the `check` suites.
const CHECK_SEEDS: u64 = 20;

const EXIT_USAGE: i32 = 1;
const EXIT_TOLERANCE: i32 = 2;
const EXIT_RESOURCE: i32 = 3;

#[derive(Parser)]
#[command(
    name = "pauliprop",
    about = "Sparse Heisenberg-picture propagation of Pauli observables",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate an observable through one circuit and write the layer trace.
    Simulate(SimulateArgs),
    /// Run a grid of (gamma, eps) points and write per-point traces plus a summary.
    Scan(ScanArgs),
    /// Build the dense transfer matrix and export its graph views.
    Graph(GraphArgs),
    /// Export the ordered coefficient spectrum and the growth/decay fit.
    Dist(DistArgs),
    /// Run the orthogonality and oracle-equivalence suites.
    Check(CheckArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    Clifford,
    CliffordT,
    Matchgate,
    /// Load the circuit from --circuit instead of sampling one.
    File,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    /// Drop contributions as soon as they fall below eps mid-layer.
    Pruned,
    /// Expand each layer exactly, truncate once per layer.
    Global,
    /// No truncation; eps only sets the reported significant-count column.
    Exact,
}

/// Flags shared by every experiment-running subcommand.
#[derive(Args)]
struct RunArgs {
    /// Circuit ensemble to sample (or `file` with --circuit).
    #[arg(long, value_enum, default_value_t = FamilyArg::CliffordT)]
    family: FamilyArg,
    /// Register size N.
    #[arg(long, default_value_t = 4)]
    qubits: usize,
    /// Logical layer count L.
    #[arg(long, default_value_t = 100)]
    layers: usize,
    /// Master seed for the circuit draw.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Truncation threshold eps.
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    /// Dephasing rate gamma (per stored layer).
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    /// Dephasing duration t per stored layer.
    #[arg(long = "time", default_value_t = 1.0)]
    time: f64,
    /// Observable as Pauli text, qubit 1 first (default: Z on the last qubit).
    #[arg(long)]
    observable: Option<String>,
    /// Circuit JSON file, required with --family file.
    #[arg(long)]
    circuit: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Truncation strategy.
    #[arg(long, value_enum, default_value_t = ModeArg::Pruned)]
    mode: ModeArg,
    /// Also run the exact comparator and write per-prefix errors.
    #[arg(long)]
    with_error: bool,
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated gamma grid (defaults to the single --gamma value).
    #[arg(long)]
    grid_gamma: Option<String>,
    /// Comma-separated eps grid (defaults to the single --eps value).
    #[arg(long)]
    grid_eps: Option<String>,
}

#[derive(Args)]
struct GraphArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Edge threshold on |omega|.
    #[arg(long, default_value_t = GRAPH_THRESHOLD)]
    threshold: f64,
}

#[derive(Args)]
struct DistArgs {
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct CheckArgs {
    /// Register size N for the suite circuits.
    #[arg(long, default_value_t = 3)]
    qubits: usize,
    /// Logical layer count L for the suite circuits.
    #[arg(long, default_value_t = 10)]
    layers: usize,
    /// First seed; the suites run seeds seed..seed+20 per family.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Dephasing duration t per stored layer.
    #[arg(long = "time", default_value_t = 1.0)]
    time: f64,
    /// Observable for the oracle-equivalence suite (default: Z on the last qubit).
    #[arg(long)]
    observable: Option<String>,
}

/// Error carrying its process exit code.
struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> CliError {
        CliError { code: EXIT_USAGE, message: message.into() }
    }

    fn tolerance(message: impl Into<String>) -> CliError {
        CliError { code: EXIT_TOLERANCE, message: message.into() }
    }

    fn resource(message: impl Into<String>) -> CliError {
        CliError { code: EXIT_RESOURCE, message: message.into() }
    }
}

impl From<pauliprop::circuits::CircuitError> for CliError {
    fn from(e: pauliprop::circuits::CircuitError) -> CliError {
        CliError::usage(e.to_string())
    }
}

impl From<pauliprop::propagation::PropagationError> for CliError {
    fn from(e: pauliprop::propagation::PropagationError) -> CliError {
        CliError::usage(e.to_string())
    }
}

impl From<pauliprop::pauli::PauliError> for CliError {
    fn from(e: pauliprop::pauli::PauliError) -> CliError {
        CliError::usage(e.to_string())
    }
}

impl From<pauliprop::dense::DenseError> for CliError {
    fn from(e: pauliprop::dense::DenseError) -> CliError {
        match e {
            pauliprop::dense::DenseError::TooLarge { .. } => CliError::resource(e.to_string()),
            other => CliError::usage(other.to_string()),
        }
    }
}

impl From<pauliprop::network::NetworkError> for CliError {
    fn from(e: pauliprop::network::NetworkError) -> CliError {
        match e {
            pauliprop::network::NetworkError::Dense(inner) => inner.into(),
            other => CliError::usage(other.to_string()),
        }
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> CliError {
        match e {
            StatsError::DegenerateTrace => CliError::tolerance(e.to_string()),
            StatsError::TooLarge { .. } => CliError::resource(e.to_string()),
            other => CliError::usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::usage(format!("io error: {e}"))
    }
}

fn main() {
    // die quietly when a downstream pipe closes instead of panicking
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    configure_threads();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version requests are successes, anything else is a
            // usage error
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match cli.command {
        Command::Simulate(args) => simulate(&args),
        Command::Scan(args) => scan(&args),
        Command::Graph(args) => graph(&args),
        Command::Dist(args) => dist(&args),
        Command::Check(args) => check(&args),
    };
    match result {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {}", e.message);
            std::process::exit(e.code);
        }
    }
}

/// Applies PAULIPROP_THREADS to the global worker pool; 0 or unset means
/// automatic.
fn configure_threads() {
    if let Ok(value) = std::env::var("PAULIPROP_THREADS") {
        match value.trim().parse::<usize>() {
            Ok(0) => {}
            Ok(n) => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            Err(_) => {
                eprintln!("warning: ignoring non-numeric PAULIPROP_THREADS={value}");
            }
        }
    }
}

fn build_circuit(args: &RunArgs) -> Result<Circuit, CliError> {
    match args.family {
        FamilyArg::File => {
            let path = args
                .circuit
                .as_ref()
                .ok_or_else(|| CliError::usage("--family file requires --circuit <path>"))?;
            Ok(Circuit::read_json(path)?)
        }
        FamilyArg::Clifford => Ok(Family::Clifford.sample(args.qubits, args.layers, args.seed)?),
        FamilyArg::CliffordT => {
            Ok(Family::CliffordT.sample(args.qubits, args.layers, args.seed)?)
        }
        FamilyArg::Matchgate => {
            Ok(Family::Matchgate.sample(args.qubits, args.layers, args.seed)?)
        }
    }
}

fn build_observable(observable: Option<&String>, n_qubits: usize) -> Result<OperatorSum, CliError> {
    let string = match observable {
        Some(text) => {
            let p: PauliString = text.parse()?;
            if p.n_qubits() != n_qubits {
                return Err(CliError::usage(format!(
                    "observable {text} has {} qubits but the circuit has {n_qubits}",
                    p.n_qubits()
                )));
            }
            p
        }
        None => {
            let mut p = PauliString::identity(n_qubits)
                .map_err(|e| CliError::usage(e.to_string()))?;
            p.set_axis(n_qubits, Axis::Z).expect("last qubit is in range");
            p
        }
    };
    Ok(OperatorSum::single(string, 1.0))
}

fn build_noise(args: &RunArgs) -> Result<NoiseModel, CliError> {
    NoiseModel::new(args.gamma, args.time).map_err(|e| CliError::usage(e.to_string()))
}

fn ensure_out_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path)?;
    Ok(())
}

fn run_propagation(
    circuit: &Circuit,
    observable: &OperatorSum,
    noise: &NoiseModel,
    eps: f64,
    mode: ModeArg,
) -> Result<(OperatorSum, PropagationTrace), CliError> {
    let options = match mode {
        ModeArg::Pruned => PropagationOptions { eps, ..Default::default() },
        ModeArg::Global => {
            PropagationOptions { eps, mode: TruncationMode::Global, ..Default::default() }
        }
        ModeArg::Exact => {
            let count_eps = if eps > 0.0 { Some(eps) } else { None };
            PropagationOptions { eps: 0.0, count_eps, ..Default::default() }
        }
    };
    if mode != ModeArg::Pruned && circuit.n_qubits() > EXACT_MODE_MAX_QUBITS {
        return Err(CliError::resource(format!(
            "{} mode holds up to 4^N terms and is limited to {EXACT_MODE_MAX_QUBITS} qubits, got {}",
            if mode == ModeArg::Exact { "exact" } else { "global" },
            circuit.n_qubits()
        )));
    }
    Ok(propagate_with(circuit, observable, noise, options)?)
}

fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let circuit = build_circuit(&args.run)?;
    let observable = build_observable(args.run.observable.as_ref(), circuit.n_qubits())?;
    let noise = build_noise(&args.run)?;
    ensure_out_dir(&args.run.out)?;
    let (_, trace) = run_propagation(&circuit, &observable, &noise, args.run.eps, args.mode)?;
    let trace_path = args.run.out.join("trace.csv");
    trace.write_csv(&trace_path).map_err(|e| CliError::usage(e.to_string()))?;
    println!("expectation,{:.16e}", trace.expectation);
    if let Some(last) = trace.records.last() {
        println!("final_retained,{}", last.retained);
        println!("final_norm,{:.16e}", last.norm);
    }
    println!("trace,{}", trace_path.display());

    if args.with_error {
        if args.mode != ModeArg::Pruned && args.mode != ModeArg::Global {
            return Err(CliError::usage("--with-error needs a truncating mode to compare"));
        }
        if circuit.n_qubits() > EXACT_MODE_MAX_QUBITS {
            return Err(CliError::resource(format!(
                "the exact comparator is limited to {EXACT_MODE_MAX_QUBITS} qubits, got {}",
                circuit.n_qubits()
            )));
        }
        let (_, exact) =
            run_propagation(&circuit, &observable, &noise, args.run.eps, ModeArg::Exact)?;
        let mut csv = String::from("layer,expectation_truncated,expectation_exact,abs_error\n");
        let mut worst = 0.0f64;
        for (a, b) in trace.records.iter().zip(&exact.records) {
            let error = (a.expectation - b.expectation).abs();
            worst = worst.max(error);
            let _ = writeln!(
                csv,
                "{},{:.16e},{:.16e},{:.16e}",
                a.layer, a.expectation, b.expectation, error
            );
        }
        let errors_path = args.run.out.join("errors.csv");
        std::fs::write(&errors_path, csv)?;
        println!("max_prefix_error,{:.16e}", worst);
        println!("errors,{}", errors_path.display());
    }
    Ok(())
}

fn parse_grid(text: Option<&String>, fallback: f64, name: &str) -> Result<Vec<f64>, CliError> {
    let Some(text) = text else {
        return Ok(vec![fallback]);
    };
    let mut values = Vec::new();
    for piece in text.split(',') {
        let piece = piece.trim();
        if piece.is_empty() {
            continue;
        }
        let value: f64 = piece
            .parse()
            .map_err(|e| CliError::usage(format!("bad {name} grid entry {piece:?}: {e}")))?;
        values.push(value);
    }
    if values.is_empty() {
        return Err(CliError::usage(format!("{name} grid is empty")));
    }
    Ok(values)
}

fn scan(args: &ScanArgs) -> Result<(), CliError> {
    let circuit = build_circuit(&args.run)?;
    let observable = build_observable(args.run.observable.as_ref(), circuit.n_qubits())?;
    let gammas = parse_grid(args.grid_gamma.as_ref(), args.run.gamma, "gamma")?;
    let epses = parse_grid(args.grid_eps.as_ref(), args.run.eps, "eps")?;
    ensure_out_dir(&args.run.out)?;

    let mut seen: Vec<(f64, f64)> = Vec::new();
    let mut summary = String::from("gamma,eps,layer,n_eps\n");
    let mut traces = 0usize;
    for &gamma in &gammas {
        for &eps in &epses {
            if seen.iter().any(|&(g, e)| g == gamma && e == eps) {
                eprintln!("warning: duplicate grid point gamma={gamma} eps={eps} skipped");
                continue;
            }
            seen.push((gamma, eps));
            let noise =
                NoiseModel::new(gamma, args.run.time).map_err(|e| CliError::usage(e.to_string()))?;
            let (_, trace) =
                run_propagation(&circuit, &observable, &noise, eps, ModeArg::Pruned)?;
            for r in &trace.records {
                let _ = writeln!(summary, "{gamma},{eps},{},{}", r.layer, r.n_eps);
            }
            let path = args.run.out.join(format!("trace_g{gamma}_e{eps}.csv"));
            trace.write_csv(&path).map_err(|e| CliError::usage(e.to_string()))?;
            traces += 1;
        }
    }
    std::fs::write(args.run.out.join("summary.csv"), summary)?;
    println!("traces,{traces}");
    println!("summary,{}", args.run.out.join("summary.csv").display());
    Ok(())
}

fn graph(args: &GraphArgs) -> Result<(), CliError> {
    let circuit = build_circuit(&args.run)?;
    if circuit.n_qubits() > DENSE_MAX_QUBITS {
        return Err(CliError::resource(format!(
            "graph needs the dense transfer matrix and is limited to {DENSE_MAX_QUBITS} qubits, got {}",
            circuit.n_qubits()
        )));
    }
    let noise = build_noise(&args.run)?;
    ensure_out_dir(&args.run.out)?;
    let omega = build_full_omega(&circuit, &noise)?;
    let g = omega_graph(&omega, args.threshold);
    std::fs::write(args.run.out.join("graph.dot"), g.export_dot())?;
    std::fs::write(args.run.out.join("edges.csv"), g.export_edges_csv())?;
    let summary = g.summary();
    let json = serde_json::to_string_pretty(&summary)
        .map_err(|e| CliError::usage(e.to_string()))?;
    std::fs::write(args.run.out.join("summary.json"), json + "\n")?;
    println!("nodes,{}", g.n_nodes());
    println!("edges,{}", g.edges().len());
    println!("d_mean,{:.16e}", summary.d_mean);
    println!("d_max,{}", summary.d_max);
    println!("components,{}", summary.components.len());
    Ok(())
}

fn dist(args: &DistArgs) -> Result<(), CliError> {
    let circuit = build_circuit(&args.run)?;
    let observable = build_observable(args.run.observable.as_ref(), circuit.n_qubits())?;
    let noise = build_noise(&args.run)?;
    ensure_out_dir(&args.run.out)?;
    let (out_sum, trace) =
        run_propagation(&circuit, &observable, &noise, args.run.eps, ModeArg::Pruned)?;
    let spectrum = ordered_spectrum(&out_sum, false)?;
    let d = spectrum.d();
    let lambda = spectrum.lambda();
    let mut csv = String::from("n,lambda_sq,pt1,pt2\n");
    for (n, value) in spectrum.values().iter().enumerate() {
        let _ = writeln!(
            csv,
            "{n},{value:.16e},{:.16e},{:.16e}",
            pt1_curve(n, d, lambda),
            pt2_curve(n, d, lambda)
        );
    }
    std::fs::write(args.run.out.join("spectrum.csv"), csv)?;
    let fit = fit_neps(&trace, d)?;
    let json = serde_json::json!({
        "d_bar": fit.d_bar,
        "tau": fit.decay_rate,
        "a": fit.a,
        "scale": fit.scale,
        "residual": fit.residual,
    });
    let text = serde_json::to_string_pretty(&json).map_err(|e| CliError::usage(e.to_string()))?;
    std::fs::write(args.run.out.join("fit.json"), text + "\n")?;
    println!("lambda,{lambda:.16e}");
    println!("d_bar,{:.16e}", fit.d_bar);
    println!("spectrum,{}", args.run.out.join("spectrum.csv").display());
    println!("fit,{}", args.run.out.join("fit.json").display());
    Ok(())
}

fn check(args: &CheckArgs) -> Result<(), CliError> {
    let n = args.qubits;
    let layers = args.layers;
    if n > DENSE_MAX_QUBITS {
        return Err(CliError::resource(format!(
            "check needs the dense references and is limited to {DENSE_MAX_QUBITS} qubits, got {n}"
        )));
    }
    let base_seed = args.seed;
    let mut failures = 0usize;

    // suite 1: noiseless transfers are orthogonal
    let mut worst_orth = 0.0f64;
    for family in Family::ALL {
        for seed in base_seed..base_seed + CHECK_SEEDS {
            let circuit = family.sample(n, layers, seed)?;
            let omega = build_full_omega(&circuit, &NoiseModel::noiseless())?;
            worst_orth = worst_orth.max(check_orthogonality(&omega));
        }
    }
    let orth_ok = worst_orth <= 1e-9;
    println!(
        "orthogonality: {} (worst deviation {:.3e}, bound 1.0e-9)",
        if orth_ok { "pass" } else { "FAIL" },
        worst_orth
    );
    if !orth_ok {
        failures += 1;
    }

    // suite 2: sparse propagation matches forward density evolution
    let observable = build_observable(args.observable.as_ref(), n)?;
    let mut worst_gap = 0.0f64;
    for family in Family::ALL {
        for seed in base_seed..base_seed + CHECK_SEEDS {
            let circuit = family.sample(n, layers, seed)?;
            for gamma in [0.0, 0.01] {
                let noise = NoiseModel::new(gamma, args.time)
                    .map_err(|e| CliError::usage(e.to_string()))?;
                let (out, _) =
                    run_propagation(&circuit, &observable, &noise, 0.0, ModeArg::Exact)?;
                let sparse = expectation_zero_state(&out);
                let dense = schrodinger_expectation(&circuit, &observable, &noise)?;
                worst_gap = worst_gap.max((sparse - dense).abs());
            }
        }
    }
    let oracle_ok = worst_gap <= 1e-8;
    println!(
        "oracle equivalence: {} (worst gap {:.3e}, bound 1.0e-8)",
        if oracle_ok { "pass" } else { "FAIL" },
        worst_gap
    );
    if !oracle_ok {
        failures += 1;
    }

    if failures > 0 {
        return Err(CliError::tolerance(format!("{failures} check suite(s) failed")));
    }
    println!("all checks passed");
    Ok(())
}
