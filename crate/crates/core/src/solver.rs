//! Nuclear-norm-minimization completion by ADMM with a singular value
//! thresholding prox step.
//!
//! Two constraint modes share one iteration: exact completion overwrites the
//! sampled entries with the observations, stable completion projects the
//! sampled residual onto a Frobenius ball of radius `epsilon` around them.
//! The solver takes no randomness, adapts no parameters, and iterates in a
//! fixed order, so every solve is a pure function of its inputs.

use crate::graphs::SampleSet;
use crate::linalg::{self, DenseMatrix, LinalgError};
use thiserror::Error;

/// Default success criterion on the relative Frobenius error.
pub const DEFAULT_SUCCESS_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("observed matrix is {rows}x{cols} but the mask is {mask_rows}x{mask_cols}")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        mask_rows: usize,
        mask_cols: usize,
    },
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
    #[error("epsilon must be non-negative, got {0}")]
    NegativeEpsilon(f64),
    #[error("tau must be non-negative, got {0}")]
    NegativeTau(f64),
    #[error("reference matrix is zero; relative error is undefined")]
    ZeroReference,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Iteration and tolerance knobs. The solver is deterministic by
/// construction: it consumes no seed and these options are its only state.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Relative bound on `|Z - W|_F` at which the iterate is accepted.
    pub primal_tolerance: f64,
    /// Relative bound on the scaled change `penalty * |W_k - W_{k-1}|_F`.
    pub dual_tolerance: f64,
    /// ADMM penalty; the prox threshold is its reciprocal. Fixed, never
    /// adapted, so repeated runs produce identical iterates.
    pub penalty: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 5000,
            primal_tolerance: 1e-9,
            dual_tolerance: 1e-9,
            penalty: 1.0,
        }
    }
}

impl SolverOptions {
    fn validate(&self) -> Result<(), SolverError> {
        if self.max_iterations == 0 {
            return Err(SolverError::InvalidOptions(
                "max_iterations must be at least 1".into(),
            ));
        }
        for (name, v) in [
            ("primal_tolerance", self.primal_tolerance),
            ("dual_tolerance", self.dual_tolerance),
            ("penalty", self.penalty),
        ] {
            if !(v > 0.0) {
                return Err(SolverError::InvalidOptions(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Result of one completion solve. `x_hat` always satisfies the sampling
/// constraint exactly (its residual on the sample set is zero in exact mode
/// and at most `epsilon` in stable mode); `converged` reports whether the
/// primal and dual residuals fell below tolerance before the iteration cap.
#[derive(Debug, Clone)]
pub struct CompletionOutcome {
    pub x_hat: DenseMatrix,
    pub iterations_used: usize,
    pub residual_on_omega: f64,
    pub nuclear_norm_value: f64,
    pub converged: bool,
}

impl CompletionOutcome {
    pub fn to_key_value(&self) -> String {
        format!(
            "converged={}\niterations_used={}\nresidual_on_omega={:?}\nnuclear_norm_value={:?}\n",
            self.converged, self.iterations_used, self.residual_on_omega, self.nuclear_norm_value
        )
    }
}

/// Singular value thresholding: `U max(s - tau, 0) V^T`, the prox operator
/// of `tau * |.|_*`.
pub fn svt(a: &DenseMatrix, tau: f64) -> Result<DenseMatrix, SolverError> {
    if !(tau >= 0.0) {
        return Err(SolverError::NegativeTau(tau));
    }
    Ok(svt_with_norm(a, tau)?.0)
}

/// As [`svt`], also returning the nuclear norm of the shrunk matrix, which
/// is free given the decomposition.
fn svt_with_norm(a: &DenseMatrix, tau: f64) -> Result<(DenseMatrix, f64), SolverError> {
    let decomposition = linalg::svd(a)?;
    let mut out = DenseMatrix::zeros(a.rows(), a.cols());
    let mut nuclear = 0.0;
    for (k, &sigma) in decomposition.singulars.iter().enumerate() {
        let shrunk = sigma - tau;
        if shrunk <= 0.0 {
            break;
        }
        nuclear += shrunk;
        for i in 0..a.rows() {
            let us = decomposition.u.get(i, k) * shrunk;
            if us == 0.0 {
                continue;
            }
            for j in 0..a.cols() {
                out.set(i, j, out.get(i, j) + us * decomposition.v.get(j, k));
            }
        }
    }
    Ok((out, nuclear))
}

enum Constraint {
    /// `E o W = S` exactly.
    Exact,
    /// `|E o W - S|_F <= epsilon`.
    Ball { epsilon: f64 },
}

/// Exact completion: minimize the nuclear norm subject to agreeing with the
/// observations on the sample set. Entries of `observed` off the sample set
/// are ignored.
pub fn complete_exact(
    observed: &DenseMatrix,
    mask: &SampleSet,
    opts: &SolverOptions,
) -> Result<CompletionOutcome, SolverError> {
    admm(observed, mask, Constraint::Exact, opts, None)
}

/// As [`complete_exact`], also collecting the nuclear norm of the prox
/// iterate at every step.
pub fn complete_exact_traced(
    observed: &DenseMatrix,
    mask: &SampleSet,
    opts: &SolverOptions,
) -> Result<(CompletionOutcome, Vec<f64>), SolverError> {
    let mut trace = Vec::new();
    let outcome = admm(observed, mask, Constraint::Exact, opts, Some(&mut trace))?;
    Ok((outcome, trace))
}

/// Stable completion: minimize the nuclear norm subject to the sampled
/// residual lying in a Frobenius ball of radius `epsilon` around the noisy
/// observations. With `epsilon = 0` this reduces to exact completion.
pub fn complete_stable(
    observed_noisy: &DenseMatrix,
    mask: &SampleSet,
    epsilon: f64,
    opts: &SolverOptions,
) -> Result<CompletionOutcome, SolverError> {
    if !(epsilon >= 0.0) {
        return Err(SolverError::NegativeEpsilon(epsilon));
    }
    admm(observed_noisy, mask, Constraint::Ball { epsilon }, opts, None)
}

fn admm(
    observed: &DenseMatrix,
    mask: &SampleSet,
    constraint: Constraint,
    opts: &SolverOptions,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<CompletionOutcome, SolverError> {
    opts.validate()?;
    if observed.rows() != mask.n_rows() || observed.cols() != mask.n_cols() {
        return Err(SolverError::ShapeMismatch {
            rows: observed.rows(),
            cols: observed.cols(),
            mask_rows: mask.n_rows(),
            mask_cols: mask.n_cols(),
        });
    }

    let indicator = mask.indicator();
    let s = linalg::hadamard(observed, &indicator)?;
    let scale = s.frobenius_norm().max(f64::MIN_POSITIVE);
    let rho = opts.penalty;
    let tau = 1.0 / rho;

    let mut w = s.clone();
    let mut dual = DenseMatrix::zeros(s.rows(), s.cols());
    let mut converged = false;
    let mut iterations_used = 0;

    for iter in 1..=opts.max_iterations {
        iterations_used = iter;
        let (z, z_nuclear) = svt_with_norm(&w.sub(&dual)?, tau)?;
        if let Some(t) = trace.as_deref_mut() {
            t.push(z_nuclear);
        }
        let v = z.add(&dual)?;
        let w_next = project_onto_constraint(&v, &s, mask, &constraint)?;
        let dual_residual = rho * w_next.sub(&w)?.frobenius_norm();
        let primal_residual = z.sub(&w_next)?.frobenius_norm();
        dual = dual.add(&z.sub(&w_next)?)?;
        w = w_next;
        if primal_residual <= opts.primal_tolerance * scale
            && dual_residual <= opts.dual_tolerance * scale
        {
            converged = true;
            break;
        }
    }

    let residual_on_omega = linalg::hadamard(&w, &indicator)?.sub(&s)?.frobenius_norm();
    let nuclear_norm_value = linalg::nuclear_norm(&w)?;
    Ok(CompletionOutcome {
        x_hat: w,
        iterations_used,
        residual_on_omega,
        nuclear_norm_value,
        converged,
    })
}

/// Nearest matrix to `v` in the constraint set: sampled entries move to the
/// observations (exact) or shrink radially toward them (ball); entries off
/// the sample set are free and pass through.
fn project_onto_constraint(
    v: &DenseMatrix,
    s: &DenseMatrix,
    mask: &SampleSet,
    constraint: &Constraint,
) -> Result<DenseMatrix, SolverError> {
    let mut out = v.clone();
    match constraint {
        Constraint::Exact => {
            for &(i, j) in mask.edges() {
                out.set(i, j, s.get(i, j));
            }
        }
        Constraint::Ball { epsilon } => {
            let mut residual_sq = 0.0;
            for &(i, j) in mask.edges() {
                let d = v.get(i, j) - s.get(i, j);
                residual_sq += d * d;
            }
            let residual = residual_sq.sqrt();
            let shrink = if residual > *epsilon && residual > 0.0 {
                epsilon / residual
            } else {
                1.0
            };
            for &(i, j) in mask.edges() {
                let d = v.get(i, j) - s.get(i, j);
                out.set(i, j, s.get(i, j) + shrink * d);
            }
        }
    }
    Ok(out)
}

/// Success criterion `|X_hat - X|_F / |X|_F < threshold` with the standard
/// threshold of `1e-6`.
pub fn recovery_success(x_hat: &DenseMatrix, x_true: &DenseMatrix) -> Result<bool, SolverError> {
    recovery_success_with(x_hat, x_true, DEFAULT_SUCCESS_THRESHOLD)
}

pub fn recovery_success_with(
    x_hat: &DenseMatrix,
    x_true: &DenseMatrix,
    threshold: f64,
) -> Result<bool, SolverError> {
    Ok(relative_error(x_hat, x_true)? < threshold)
}

/// `|X_hat - X|_F / |X|_F`; the reference must be nonzero.
pub fn relative_error(x_hat: &DenseMatrix, x_true: &DenseMatrix) -> Result<f64, SolverError> {
    if !x_hat.same_shape(x_true) {
        return Err(SolverError::ShapeMismatch {
            rows: x_hat.rows(),
            cols: x_hat.cols(),
            mask_rows: x_true.rows(),
            mask_cols: x_true.cols(),
        });
    }
    let denom = x_true.frobenius_norm();
    if denom == 0.0 {
        return Err(SolverError::ZeroReference);
    }
    Ok(x_hat.sub(x_true)?.frobenius_norm() / denom)
}
