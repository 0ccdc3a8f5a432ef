//! Command-line frontend: mask construction and validation, coherence and
//! certificate analysis, completion, dual-certificate checks, and
//! phase-transition sweeps.
//!
//! Exit codes are a scripting contract:
//!   0  success
//!   1  infeasible certificate, unconverged solve, or failed recovery
//!   2  invalid input or arguments
//!   3  internal numerical failure

use clap::{Args, Parser, Subcommand, ValueEnum};
use ramcomp::bounds::{self, BoundsError};
use ramcomp::experiments::{self, ExperimentError, SweepConfig};
use ramcomp::graphs::{self, BiregularMask, GraphError, SampleSet};
use ramcomp::linalg::{self, DenseMatrix, LinalgError};
use ramcomp::solver::{self, SolverError, SolverOptions};
use ramcomp::subspace::{self, SubspaceError, SubspacePair};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "ramcomp",
    version,
    about = "Deterministic matrix completion with expander-graph sampling masks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Construct or validate sampling masks
    Graph {
        #[command(subcommand)]
        action: GraphAction,
    },
    /// Coherence parameters and the recovery certificate of a matrix/mask pair
    Analyze(AnalyzeArgs),
    /// Complete a partially observed matrix by nuclear-norm minimization
    Complete(CompleteArgs),
    /// Build a dual certificate and check its conditions
    Certify(CertifyArgs),
    /// Rank sweep measuring the recovery phase transition
    Phase(PhaseArgs),
}

#[derive(Subcommand)]
enum GraphAction {
    /// Build the LPS Cayley-graph mask for a prime pair (p, q)
    Lps {
        /// Prime congruent to 1 mod 4; the mask degree is p + 1
        #[arg(long)]
        p: u64,
        /// Prime congruent to 1 mod 4; the mask has q(q^2-1)/2 rows
        #[arg(long)]
        q: u64,
        /// Write the mask in canonical coordinate form to this path
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Load a mask file, check biregularity, and report its spectrum
    Validate {
        #[arg(long)]
        mask: PathBuf,
    },
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Dense matrix CSV to analyze
    #[arg(long)]
    matrix: PathBuf,
    /// Rank at which to truncate the matrix
    #[arg(long)]
    rank: usize,
    /// Mask file in coordinate form
    #[arg(long)]
    mask: PathBuf,
    /// Use this value in the certificate instead of the measured theta
    #[arg(long)]
    theta_override: Option<f64>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum CompleteMode {
    Exact,
    Stable,
}

#[derive(Args)]
struct CompleteArgs {
    /// Observed entries as dense CSV; cells off the mask are ignored
    #[arg(long)]
    obs: PathBuf,
    /// Mask file in coordinate form
    #[arg(long)]
    mask: PathBuf,
    #[arg(long, value_enum)]
    mode: CompleteMode,
    /// Noise radius for stable mode
    #[arg(long, required_if_eq("mode", "stable"))]
    eps: Option<f64>,
    /// Ground truth CSV; prints the relative error and success verdict
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Write the completed matrix to this CSV path
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    rank: usize,
    #[arg(long)]
    mask: PathBuf,
    /// Accumulation steps of the iterated certificate
    #[arg(long, default_value_t = 1)]
    iterations: usize,
    /// Monte-Carlo probes of the tangent-space operator condition
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct PhaseArgs {
    #[arg(long)]
    p: u64,
    #[arg(long)]
    q: u64,
    #[arg(long)]
    rank_min: usize,
    #[arg(long)]
    rank_max: usize,
    /// Completion trials per rank
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sweep CSV output path
    #[arg(long)]
    out: PathBuf,
    /// Also sweep a random mask with the same sample count, written next to
    /// the main output with a .baseline.csv suffix
    #[arg(long)]
    baseline: bool,
    /// Relative-error threshold that counts as successful recovery
    #[arg(long, default_value_t = 1e-6)]
    threshold: f64,
    /// Allow runs beyond desk scale (degree > 30 or more than 20 trials)
    #[arg(long)]
    full: bool,
    /// Worker threads for the trial loop (default: all logical processors)
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args)]
struct SolverFlags {
    #[arg(long, default_value_t = 5000)]
    max_iterations: usize,
    #[arg(long, default_value_t = 1e-9)]
    primal_tol: f64,
    #[arg(long, default_value_t = 1e-9)]
    dual_tol: f64,
    #[arg(long, default_value_t = 1.0)]
    penalty: f64,
}

impl SolverFlags {
    fn to_options(&self) -> SolverOptions {
        SolverOptions {
            max_iterations: self.max_iterations,
            primal_tolerance: self.primal_tol,
            dual_tolerance: self.dual_tol,
            penalty: self.penalty,
        }
    }
}

/// Failures routed to exit codes 2 (usage) and 3 (numerical).
enum CliError {
    Usage(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Numerical(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Graph { action } => match action {
            GraphAction::Lps { p, q, out } => cmd_graph_lps(p, q, out.as_deref()),
            GraphAction::Validate { mask } => cmd_graph_validate(&mask),
        },
        Command::Analyze(args) => cmd_analyze(&args),
        Command::Complete(args) => cmd_complete(&args),
        Command::Certify(args) => cmd_certify(&args),
        Command::Phase(args) => cmd_phase(&args),
    }
}

fn cmd_graph_lps(p: u64, q: u64, out: Option<&Path>) -> Result<u8, CliError> {
    let mask = graphs::lps_graph(p, q).map_err(graph_error)?;
    if let Some(path) = out {
        write_text(path, &mask.sample().to_coordinate_text())?;
    }
    print!("{}", mask_block(&mask));
    Ok(0)
}

fn cmd_graph_validate(path: &Path) -> Result<u8, CliError> {
    let sample = read_mask(path)?;
    let mask = graphs::validate_biregular(sample).map_err(graph_error)?;
    print!("{}", mask_block(&mask));
    Ok(0)
}

fn mask_block(mask: &BiregularMask) -> String {
    let report = graphs::spectral_certificate(mask);
    format!(
        "n_rows={}\nn_cols={}\nd_r={}\nd_c={}\nalpha={:?}\nsigma1={:?}\nsigma2={:?}\n\
         ramanujan_bound={:?}\nis_ramanujan={}\n",
        mask.n_rows(),
        mask.n_cols(),
        mask.row_degree(),
        mask.col_degree(),
        mask.alpha(),
        report.sigma1,
        report.sigma2,
        report.ramanujan_bound,
        report.is_ramanujan
    )
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<u8, CliError> {
    let matrix = read_matrix(&args.matrix)?;
    let mask = graphs::validate_biregular(read_mask(&args.mask)?).map_err(graph_error)?;
    let sp = pair_from_matrix(&matrix, args.rank)?;
    let mut report = subspace::coherence_report(&sp, &mask).map_err(subspace_error)?;
    if let Some(theta) = args.theta_override {
        report.theta = theta;
    }
    let cert = bounds::certify_recovery(
        report.mu0,
        report.theta,
        report.phi,
        sp.rank(),
        mask.alpha(),
        mask.n_rows(),
    )
    .map_err(bounds_error)?;
    print!("{}", report.to_key_value(&mask));
    print!("{}", cert.to_key_value());
    // The stable-recovery bound (gamma + delta) * eps holds for every
    // delta > 0; gamma * eps is its limiting value.
    println!("stable_error_limit_per_unit_noise={:?}", cert.gamma);
    println!(
        "prior_degree_requirement={:?}",
        bounds::prior_bound_comparison(report.mu0, sp.rank())
    );
    Ok(if cert.feasible { 0 } else { 1 })
}

fn cmd_complete(args: &CompleteArgs) -> Result<u8, CliError> {
    let observed = read_matrix(&args.obs)?;
    let mask = read_mask(&args.mask)?;
    let opts = args.solver.to_options();
    let outcome = match args.mode {
        CompleteMode::Exact => solver::complete_exact(&observed, &mask, &opts),
        CompleteMode::Stable => {
            let eps = args.eps.expect("clap enforces --eps for stable mode");
            solver::complete_stable(&observed, &mask, eps, &opts)
        }
    }
    .map_err(solver_error)?;

    if let Some(path) = &args.out {
        write_text(path, &outcome.x_hat.to_csv())?;
    }
    print!("{}", outcome.to_key_value());

    let mut failed_truth = false;
    if let Some(truth_path) = &args.truth {
        let truth = read_matrix(truth_path)?;
        let rel = solver::relative_error(&outcome.x_hat, &truth).map_err(solver_error)?;
        let success = rel < solver::DEFAULT_SUCCESS_THRESHOLD;
        println!("relative_error={rel:?}");
        println!("success={success}");
        failed_truth = !success;
    }
    Ok(if !outcome.converged || failed_truth { 1 } else { 0 })
}

fn cmd_certify(args: &CertifyArgs) -> Result<u8, CliError> {
    let matrix = read_matrix(&args.matrix)?;
    let mask = graphs::validate_biregular(read_mask(&args.mask)?).map_err(graph_error)?;
    let sp = pair_from_matrix(&matrix, args.rank)?;
    let coherence = subspace::coherence_report(&sp, &mask).map_err(subspace_error)?;
    let cert =
        bounds::dual_certificate_iterate(&sp, &mask, args.iterations).map_err(bounds_error)?;

    let r = sp.rank() as f64;
    let k1 = coherence.phi;
    let k2 = coherence.theta + coherence.phi;
    let k3 = (r * (coherence.theta.powi(2) + coherence.phi.powi(2))).sqrt();
    let check = bounds::check_dual_certificate(
        &cert.y,
        &sp,
        &mask,
        k1,
        k2,
        k3,
        args.samples,
        args.seed,
    )
    .map_err(bounds_error)?;

    println!("iterations={}", cert.iterations);
    println!("deviation_T={:?}", cert.deviation_t);
    println!("spectral_Tperp={:?}", cert.spectral_t_perp);
    println!("theta={:?}", coherence.theta);
    println!("phi={:?}", coherence.phi);
    for (i, w) in cert.deviation_history.iter().enumerate() {
        println!("w_norm_{i}={w:?}");
        if i > 0 {
            let prev = cert.deviation_history[i - 1];
            let ratio = if prev > 0.0 { w / prev } else { 0.0 };
            println!("decay_ratio_{i}={ratio:?}");
        }
    }
    println!("k1={:?}\nk2={:?}\nk3={:?}", check.k1, check.k2, check.k3);
    println!("spectral_ok={}", check.spectral_ok);
    println!("deviation_ok={}", check.deviation_ok);
    println!("operator_ratio_max={:?}", check.operator_ratio_max);
    println!("operator_ok={}", check.operator_ok);
    println!("gate_ok={}", check.gate_ok);
    println!("verdict={}", if check.passed { "pass" } else { "fail" });
    if check.passed {
        println!("c={:?}", check.c);
        println!("bound_factor={:?}", check.bound_factor);
    }
    Ok(0)
}

fn cmd_phase(args: &PhaseArgs) -> Result<u8, CliError> {
    let degree = args.p + 1;
    if !args.full && (degree > 30 || args.trials > 20) {
        return Err(CliError::Usage(format!(
            "degree {degree} or trials {} exceed desk scale; pass --full to confirm \
             (paper-scale sweeps can run for days)",
            args.trials
        )));
    }
    if args.full {
        eprintln!(
            "warning: full-scale sweep (degree {degree}, {} trials); this can take days",
            args.trials
        );
    }

    let mask = graphs::lps_sample_set(args.p, args.q).map_err(graph_error)?;
    let cfg = SweepConfig {
        rank_min: args.rank_min,
        rank_max: args.rank_max,
        trials_per_rank: args.trials,
        matrix_seed: args.seed,
        success_threshold: args.threshold,
        solver: args.solver.to_options(),
        jobs: args.jobs,
    };

    let records = experiments::phase_sweep(&mask, &cfg).map_err(experiment_error)?;
    write_text(&args.out, &experiments::records_to_csv(&records))?;
    print_critical("critical_rank", &records)?;

    if args.baseline {
        let baseline_path = baseline_path(&args.out);
        let mask_seed = derive_baseline_seed(args.seed);
        let records = experiments::baseline_sweep(
            mask.n_rows(),
            mask.n_cols(),
            mask.len(),
            mask_seed,
            &cfg,
        )
        .map_err(experiment_error)?;
        write_text(&baseline_path, &experiments::records_to_csv(&records))?;
        print_critical("baseline_critical_rank", &records)?;
    }
    Ok(0)
}

fn print_critical(label: &str, records: &[experiments::PhaseSweepRecord]) -> Result<(), CliError> {
    match experiments::critical_rank(records).map_err(experiment_error)? {
        Some(r) => println!("{label}={r}"),
        None => println!("{label}=none"),
    }
    Ok(())
}

fn baseline_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sweep".to_string());
    out.with_file_name(format!("{stem}.baseline.csv"))
}

/// The random baseline mask needs its own seed stream, decoupled from the
/// per-trial matrix seeds.
fn derive_baseline_seed(seed: u64) -> u64 {
    seed ^ 0xB1A5_E11E_5EED_0001
}

fn pair_from_matrix(matrix: &DenseMatrix, rank: usize) -> Result<SubspacePair, CliError> {
    let decomposition = linalg::svd(matrix).map_err(linalg_error)?;
    subspace::truncate(&decomposition, rank).map_err(subspace_error)
}

fn read_matrix(path: &Path) -> Result<DenseMatrix, CliError> {
    let text = read_text(path)?;
    DenseMatrix::from_csv(&text).map_err(linalg_error)
}

fn read_mask(path: &Path) -> Result<SampleSet, CliError> {
    let text = read_text(path)?;
    SampleSet::from_coordinate_text(&text).map_err(graph_error)
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

fn linalg_error(e: LinalgError) -> CliError {
    match e {
        LinalgError::SvdNonConvergence { .. } => CliError::Numerical(e.to_string()),
        _ => CliError::Usage(e.to_string()),
    }
}

fn graph_error(e: GraphError) -> CliError {
    match e {
        GraphError::MultiEdge { .. }
        | GraphError::SelfLoop { .. }
        | GraphError::GeneratorCount { .. }
        | GraphError::Disconnected
        | GraphError::SpectralInvariant { .. } => CliError::Numerical(e.to_string()),
        GraphError::Linalg(inner) => linalg_error(inner),
        _ => CliError::Usage(e.to_string()),
    }
}

fn subspace_error(e: SubspaceError) -> CliError {
    match e {
        SubspaceError::Linalg(inner) => linalg_error(inner),
        _ => CliError::Usage(e.to_string()),
    }
}

fn bounds_error(e: BoundsError) -> CliError {
    match e {
        BoundsError::Subspace(inner) => subspace_error(inner),
        BoundsError::Linalg(inner) => linalg_error(inner),
        _ => CliError::Usage(e.to_string()),
    }
}

fn solver_error(e: SolverError) -> CliError {
    match e {
        SolverError::Linalg(inner) => linalg_error(inner),
        _ => CliError::Usage(e.to_string()),
    }
}

fn experiment_error(e: ExperimentError) -> CliError {
    match e {
        ExperimentError::Graph(inner) => graph_error(inner),
        ExperimentError::Solver(inner) => solver_error(inner),
        ExperimentError::Linalg(inner) => linalg_error(inner),
        _ => CliError::Usage(e.to_string()),
    }
}
