//! Phase-transition harness: seeded low-rank test matrices, rank sweeps of
//! generate/complete/score cycles against a fixed mask, the critical rank
//! of a sweep, and the canonical CSV form of the results.
//!
//! Trials are independent and run in parallel; per-trial seeds are derived
//! from `(matrix_seed, rank, trial)` and results are reduced in trial
//! order, so the output is identical for every parallelism degree.

use crate::graphs::{self, GraphError, Replacement, SampleSet};
use crate::linalg::{self, splitmix64, DenseMatrix};
use crate::solver::{self, SolverError, SolverOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid sweep configuration: {0}")]
    InvalidConfig(String),
    #[error("rank {r} exceeds min(n_rows, n_cols) = {limit}")]
    RankTooLarge { r: usize, limit: usize },
    #[error("sweep records must be sorted by rank and contiguous")]
    UnsortedRecords,
    #[error("no records")]
    EmptyRecords,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
}

/// Sweep parameters. The mask itself is passed to [`phase_sweep`]
/// separately so one mask can be reused across sweeps.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub rank_min: usize,
    pub rank_max: usize,
    pub trials_per_rank: usize,
    pub matrix_seed: u64,
    pub success_threshold: f64,
    pub solver: SolverOptions,
    /// Worker threads for the trial loop; `None` uses the rayon default.
    pub jobs: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            rank_min: 1,
            rank_max: 1,
            trials_per_rank: 20,
            matrix_seed: 0,
            success_threshold: solver::DEFAULT_SUCCESS_THRESHOLD,
            solver: SolverOptions::default(),
            jobs: None,
        }
    }
}

/// Aggregated result of all trials at one rank.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSweepRecord {
    pub rank: usize,
    pub trials: usize,
    pub successes: usize,
    pub mean_relative_error: f64,
    pub mean_iterations: f64,
}

impl PhaseSweepRecord {
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }
}

/// Gaussian-factor test matrix: `X = G H^T` with independent standard
/// normal entries drawn from a ChaCha20 stream keyed by `seed` (G row-major
/// first, then H row-major). The ratio `s_r / s_1` is checked to confirm
/// the numerical rank; the astronomically unlikely degenerate draw is
/// regenerated from a perturbed seed.
pub fn random_low_rank(
    n_rows: usize,
    n_cols: usize,
    r: usize,
    seed: u64,
) -> Result<DenseMatrix, ExperimentError> {
    let limit = n_rows.min(n_cols);
    if r == 0 || r > limit {
        return Err(ExperimentError::RankTooLarge { r, limit });
    }
    let mut attempt_seed = seed;
    loop {
        let mut rng = ChaCha20Rng::seed_from_u64(attempt_seed);
        let g = DenseMatrix::from_fn(n_rows, r, |_, _| rng.sample(StandardNormal));
        let h = DenseMatrix::from_fn(n_cols, r, |_, _| rng.sample(StandardNormal));
        let x = g.matmul(&h.transpose())?;
        let spectrum = linalg::svd(&x)?.singulars;
        if spectrum[r - 1] > 1e-8 * spectrum[0] {
            return Ok(x);
        }
        eprintln!(
            "rank-deficient draw at seed {attempt_seed} (rank {r}); regenerating"
        );
        attempt_seed = splitmix64(attempt_seed);
    }
}

/// Seed for one trial, mixed from the sweep seed, the rank, and the trial
/// index with splitmix64 so trials are decorrelated and independent of
/// scheduling order.
pub fn trial_seed(matrix_seed: u64, rank: usize, trial: usize) -> u64 {
    let mut h = splitmix64(matrix_seed ^ (rank as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    h = splitmix64(h ^ (trial as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9));
    h
}

/// Runs `trials_per_rank` generate/complete/score cycles for every rank in
/// the configured range against a fixed mask.
///
/// A trial succeeds when the solve converges and the relative error beats
/// the success threshold; solver non-convergence counts as a failure and
/// never aborts the sweep.
pub fn phase_sweep(
    mask: &SampleSet,
    cfg: &SweepConfig,
) -> Result<Vec<PhaseSweepRecord>, ExperimentError> {
    validate_config(mask, cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.unwrap_or(0))
        .build()
        .map_err(|e| ExperimentError::InvalidConfig(format!("thread pool: {e}")))?;

    let indicator = mask.indicator();
    let mut records = Vec::with_capacity(cfg.rank_max - cfg.rank_min + 1);
    for rank in cfg.rank_min..=cfg.rank_max {
        let trials: Vec<(bool, f64, usize)> = pool.install(|| {
            (0..cfg.trials_per_rank)
                .into_par_iter()
                .map(|trial| run_trial(mask, &indicator, cfg, rank, trial))
                .collect::<Result<Vec<_>, ExperimentError>>()
        })?;
        // Reduce in trial order; floating-point sums stay bit-stable.
        let successes = trials.iter().filter(|t| t.0).count();
        let mean_relative_error =
            trials.iter().map(|t| t.1).sum::<f64>() / cfg.trials_per_rank as f64;
        let mean_iterations =
            trials.iter().map(|t| t.2 as f64).sum::<f64>() / cfg.trials_per_rank as f64;
        records.push(PhaseSweepRecord {
            rank,
            trials: cfg.trials_per_rank,
            successes,
            mean_relative_error,
            mean_iterations,
        });
    }
    Ok(records)
}

fn run_trial(
    mask: &SampleSet,
    indicator: &DenseMatrix,
    cfg: &SweepConfig,
    rank: usize,
    trial: usize,
) -> Result<(bool, f64, usize), ExperimentError> {
    let seed = trial_seed(cfg.matrix_seed, rank, trial);
    let x = random_low_rank(mask.n_rows(), mask.n_cols(), rank, seed)?;
    let observed = linalg::hadamard(&x, indicator)?;
    let outcome = solver::complete_exact(&observed, mask, &cfg.solver)?;
    let rel_err = solver::relative_error(&outcome.x_hat, &x)?;
    let success = outcome.converged && rel_err < cfg.success_threshold;
    Ok((success, rel_err, outcome.iterations_used))
}

/// Same sweep against a uniform random mask with a matched number of
/// samples, the random-sampling baseline for a structured mask of the same
/// size.
pub fn baseline_sweep(
    n_rows: usize,
    n_cols: usize,
    m: usize,
    mask_seed: u64,
    cfg: &SweepConfig,
) -> Result<Vec<PhaseSweepRecord>, ExperimentError> {
    let mask = graphs::random_mask(n_rows, n_cols, m, mask_seed, Replacement::Without)?;
    phase_sweep(&mask, cfg)
}

/// Largest rank r such that every record with rank at most r has full
/// success; `None` if even the smallest rank already fails. Records must
/// be sorted by rank and contiguous.
pub fn critical_rank(records: &[PhaseSweepRecord]) -> Result<Option<usize>, ExperimentError> {
    if records.is_empty() {
        return Err(ExperimentError::EmptyRecords);
    }
    if records
        .windows(2)
        .any(|w| w[1].rank != w[0].rank + 1)
    {
        return Err(ExperimentError::UnsortedRecords);
    }
    let mut best = None;
    for record in records {
        if record.successes == record.trials {
            best = Some(record.rank);
        } else {
            break;
        }
    }
    Ok(best)
}

/// Canonical sweep CSV: fixed header, one row per rank, success rate with
/// six decimal places, LF line endings.
pub fn records_to_csv(records: &[PhaseSweepRecord]) -> String {
    let mut out =
        String::from("rank,trials,successes,success_rate,mean_relative_error,mean_iterations\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{:.6},{:.6e},{:.3}\n",
            r.rank,
            r.trials,
            r.successes,
            r.success_rate(),
            r.mean_relative_error,
            r.mean_iterations
        ));
    }
    out
}

fn validate_config(mask: &SampleSet, cfg: &SweepConfig) -> Result<(), ExperimentError> {
    if cfg.rank_min == 0 {
        return Err(ExperimentError::InvalidConfig("rank_min must be >= 1".into()));
    }
    if cfg.rank_min > cfg.rank_max {
        return Err(ExperimentError::InvalidConfig(format!(
            "rank_min {} exceeds rank_max {}",
            cfg.rank_min, cfg.rank_max
        )));
    }
    let limit = mask.n_rows().min(mask.n_cols());
    if cfg.rank_max > limit {
        return Err(ExperimentError::RankTooLarge {
            r: cfg.rank_max,
            limit,
        });
    }
    if cfg.trials_per_rank == 0 {
        return Err(ExperimentError::InvalidConfig(
            "trials_per_rank must be >= 1".into(),
        ));
    }
    if !(cfg.success_threshold > 0.0) {
        return Err(ExperimentError::InvalidConfig(
            "success_threshold must be positive".into(),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::permutation_union_mask;

    #[test]
    fn low_rank_generator_contracts() {
        let a = random_low_rank(20, 20, 3, 7).unwrap();
        let b = random_low_rank(20, 20, 3, 7).unwrap();
        assert_eq!(a.entries(), b.entries());

        let spectrum = linalg::svd(&a).unwrap().singulars;
        assert!(spectrum[2] > 1e-8 * spectrum[0]);
        assert!(spectrum[3] < 1e-10 * spectrum[0]);

        assert!(matches!(
            random_low_rank(5, 5, 0, 1),
            Err(ExperimentError::RankTooLarge { .. })
        ));
        assert!(matches!(
            random_low_rank(5, 5, 6, 1),
            Err(ExperimentError::RankTooLarge { .. })
        ));
        // Full-rank product is fine.
        random_low_rank(5, 5, 5, 2).unwrap();
    }

    #[test]
    fn trivial_sweep_on_full_mask() {
        let n = 6;
        let edges = (0..n).flat_map(|r| (0..n).map(move |c| (r, c))).collect();
        let mask = SampleSet::new(n, n, edges).unwrap();
        let cfg = SweepConfig {
            rank_min: 1,
            rank_max: 2,
            trials_per_rank: 1,
            matrix_seed: 3,
            ..SweepConfig::default()
        };
        let records = phase_sweep(&mask, &cfg).unwrap();
        assert_eq!(records.len(), 2);
        for r in &records {
            assert_eq!(r.successes, r.trials);
        }
        assert_eq!(critical_rank(&records).unwrap(), Some(2));
    }

    #[test]
    fn sweep_is_independent_of_parallelism() {
        let mask = permutation_union_mask(12, 6, 5).unwrap();
        let base = SweepConfig {
            rank_min: 1,
            rank_max: 3,
            trials_per_rank: 4,
            matrix_seed: 11,
            ..SweepConfig::default()
        };
        let serial = SweepConfig {
            jobs: Some(1),
            ..base.clone()
        };
        let parallel = SweepConfig {
            jobs: Some(4),
            ..base
        };
        let a = records_to_csv(&phase_sweep(&mask, &serial).unwrap());
        let b = records_to_csv(&phase_sweep(&mask, &parallel).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn critical_rank_logic() {
        let rec = |rank, successes| PhaseSweepRecord {
            rank,
            trials: 100,
            successes,
            mean_relative_error: 0.0,
            mean_iterations: 0.0,
        };
        assert_eq!(
            critical_rank(&[rec(1, 100), rec(2, 100), rec(3, 97)]).unwrap(),
            Some(2)
        );
        assert_eq!(
            critical_rank(&[rec(1, 100), rec(2, 100)]).unwrap(),
            Some(2)
        );
        assert_eq!(critical_rank(&[rec(1, 99)]).unwrap(), None);
        assert!(matches!(
            critical_rank(&[]),
            Err(ExperimentError::EmptyRecords)
        ));
        assert!(matches!(
            critical_rank(&[rec(1, 100), rec(3, 100)]),
            Err(ExperimentError::UnsortedRecords)
        ));
    }

    #[test]
    fn baseline_uses_matched_samples_and_seeded_mask() {
        let cfg = SweepConfig {
            rank_min: 1,
            rank_max: 1,
            trials_per_rank: 2,
            matrix_seed: 1,
            ..SweepConfig::default()
        };
        let a = baseline_sweep(10, 10, 100, 3, &cfg).unwrap();
        let b = baseline_sweep(10, 10, 100, 3, &cfg).unwrap();
        assert_eq!(records_to_csv(&a), records_to_csv(&b));
        // m = n^2 is the full mask: everything succeeds.
        assert_eq!(a[0].successes, a[0].trials);
    }

    #[test]
    fn config_validation() {
        let mask = permutation_union_mask(8, 2, 1).unwrap();
        let bad = SweepConfig {
            rank_min: 5,
            rank_max: 3,
            ..SweepConfig::default()
        };
        assert!(matches!(
            phase_sweep(&mask, &bad),
            Err(ExperimentError::InvalidConfig(_))
        ));
        let zero = SweepConfig {
            rank_min: 0,
            rank_max: 2,
            ..SweepConfig::default()
        };
        assert!(phase_sweep(&mask, &zero).is_err());
        let huge = SweepConfig {
            rank_min: 1,
            rank_max: 9,
            ..SweepConfig::default()
        };
        assert!(matches!(
            phase_sweep(&mask, &huge),
            Err(ExperimentError::RankTooLarge { .. })
        ));
    }
}
