//! Recovery certificates: the closed-form sufficient conditions on
//! `(theta, phi, r, alpha)`, the runtime dual-certificate checks, and the
//! simple and iterated dual-certificate constructions.

use crate::graphs::BiregularMask;
use crate::linalg::{self, DenseMatrix, LinalgError};
use crate::subspace::{self, SubspacePair, SubspaceError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Numerical slack applied to inequality checks that are exact in the
/// underlying analysis.
pub const CHECK_SLACK: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("inputs must be non-negative: {name} = {value}")]
    NegativeInput { name: &'static str, value: f64 },
    #[error("rank must be at least 1")]
    ZeroRank,
    #[error("delta must be positive, got {0}")]
    NonPositiveDelta(f64),
    #[error("certificate is infeasible: {reasons:?}")]
    InfeasibleCertificate { reasons: Vec<String> },
    #[error("candidate is not supported on the sample set: entry ({row}, {col}) = {value}")]
    SupportViolation { row: usize, col: usize, value: f64 },
    #[error(transparent)]
    Subspace(#[from] SubspaceError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Closed-form certificate constants and the feasibility verdict.
///
/// `feasible` implies `k1 < 1`, `k2 < 1`, `c > 0`, and the gate
/// `k3 < (1 - k1) sqrt(alpha (1 - k2))`; an infeasible certificate carries
/// one reason per failed condition and is a value, never an error.
#[derive(Debug, Clone)]
pub struct RecoveryCertificate {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub alpha: f64,
    pub alpha_threshold: f64,
    pub c: f64,
    pub gamma: f64,
    pub feasible: bool,
    pub reasons: Vec<String>,
}

impl RecoveryCertificate {
    /// Flat key=value block, one pair per line.
    pub fn to_key_value(&self) -> String {
        format!(
            "k1={:?}\nk2={:?}\nk3={:?}\nalpha={:?}\nalpha_threshold={:?}\nc={:?}\n\
             gamma={:?}\nfeasible={}\nreasons={}\n",
            self.k1,
            self.k2,
            self.k3,
            self.alpha,
            self.alpha_threshold,
            self.c,
            self.gamma,
            self.feasible,
            if self.reasons.is_empty() {
                "none".to_string()
            } else {
                self.reasons.join("; ")
            }
        )
    }
}

/// Evaluates the sufficient conditions for recovery with constants
/// `k1 = phi`, `k2 = theta + phi`, `k3 = sqrt(r (theta^2 + phi^2))`.
///
/// The sampling-fraction threshold is
/// `r (theta^2 + phi^2) / ((1 - (theta + phi)) (1 - phi^2))`, and
/// `c = (1 - k1) - k3 / sqrt(alpha (1 - k2))`, whose positivity is
/// equivalent to the certificate gate. The error multiplier is
/// `gamma = 2 sqrt(1 + (n_r / c^2) (1 + 1 / (alpha (1 - k2))))`.
pub fn certify_recovery(
    mu0: f64,
    theta: f64,
    phi: f64,
    r: usize,
    alpha: f64,
    n_r: usize,
) -> Result<RecoveryCertificate, BoundsError> {
    for (name, value) in [
        ("mu0", mu0),
        ("theta", theta),
        ("phi", phi),
        ("alpha", alpha),
    ] {
        if !(value >= 0.0) {
            return Err(BoundsError::NegativeInput { name, value });
        }
    }
    if r == 0 {
        return Err(BoundsError::ZeroRank);
    }

    let k1 = phi;
    let k2 = theta + phi;
    let k3 = (r as f64 * (theta * theta + phi * phi)).sqrt();

    let mut reasons = Vec::new();
    if k2 >= 1.0 {
        reasons.push("theta+phi >= 1".to_string());
    }

    let alpha_threshold = if k2 < 1.0 && phi < 1.0 {
        r as f64 * (theta * theta + phi * phi) / ((1.0 - k2) * (1.0 - phi * phi))
    } else {
        f64::INFINITY
    };
    if alpha <= alpha_threshold {
        reasons.push(format!(
            "alpha {alpha:?} does not exceed the threshold {alpha_threshold:?}"
        ));
    }

    let c = if k2 < 1.0 && alpha > 0.0 {
        (1.0 - k1) - k3 / (alpha * (1.0 - k2)).sqrt()
    } else {
        f64::NEG_INFINITY
    };
    if c <= 0.0 {
        reasons.push(format!(
            "certificate gate fails: k3 {k3:?} >= (1-k1) sqrt(alpha (1-k2))"
        ));
    }

    let gamma = if c > 0.0 {
        2.0 * (1.0 + n_r as f64 / (c * c) * (1.0 + 1.0 / (alpha * (1.0 - k2)))).sqrt()
    } else {
        f64::INFINITY
    };

    Ok(RecoveryCertificate {
        k1,
        k2,
        k3,
        alpha,
        alpha_threshold,
        c,
        gamma,
        feasible: reasons.is_empty(),
        reasons,
    })
}

/// Worst-case reconstruction error `(gamma + delta) * epsilon` for a noise
/// level `epsilon`; requires a feasible certificate and `delta > 0`.
pub fn error_bound(
    cert: &RecoveryCertificate,
    epsilon: f64,
    delta: f64,
) -> Result<f64, BoundsError> {
    if !cert.feasible {
        return Err(BoundsError::InfeasibleCertificate {
            reasons: cert.reasons.clone(),
        });
    }
    if !(epsilon >= 0.0) {
        return Err(BoundsError::NegativeInput {
            name: "epsilon",
            value: epsilon,
        });
    }
    if !(delta > 0.0) {
        return Err(BoundsError::NonPositiveDelta(delta));
    }
    Ok((cert.gamma + delta) * epsilon)
}

/// Comparison sample-degree requirement `144 mu0^2 r^2` from the earlier
/// (unproven) regular-graph bound; reported side by side, never certified.
pub fn prior_bound_comparison(mu0: f64, r: usize) -> f64 {
    144.0 * mu0 * mu0 * (r * r) as f64
}

/// A candidate dual certificate: a matrix supported exactly on the sample
/// set, with its measured distance from the orientation matrix on `T` and
/// its spectral norm on the complement.
#[derive(Debug, Clone)]
pub struct DualCertificate {
    pub y: DenseMatrix,
    /// `|P_T(Y) - U V^T|_F`, which for the iterated construction equals
    /// `|W_p|_F`.
    pub deviation_t: f64,
    /// `|P_Tperp(Y)|_S`.
    pub spectral_t_perp: f64,
    /// Number of accumulation steps used to build `Y`.
    pub iterations: usize,
    /// `|W_0|_F, |W_1|_F, ..., |W_p|_F`.
    pub deviation_history: Vec<f64>,
}

/// One-shot certificate `Y = (1/alpha) E o (U V^T)`.
pub fn dual_certificate_simple(
    sp: &SubspacePair,
    mask: &BiregularMask,
) -> Result<DualCertificate, BoundsError> {
    check_pair_shape(sp, mask)?;
    let w0 = sp.uv_t();
    let y = linalg::hadamard(&mask.indicator(), &w0)?.scale(1.0 / mask.alpha());
    let deviation = subspace::project_t(&y, sp)?.sub(&w0)?.frobenius_norm();
    let spectral = linalg::spectral_norm(&subspace::project_t_perp(&y, sp)?)?;
    Ok(DualCertificate {
        y,
        deviation_t: deviation,
        spectral_t_perp: spectral,
        iterations: 1,
        deviation_history: vec![w0.frobenius_norm(), deviation],
    })
}

/// Iterated certificate: starting from `W_0 = U V^T`,
/// `W_i = W_{i-1} - (1/alpha) P_T(E o W_{i-1})` and
/// `Y_p = sum_{i<p} (1/alpha) E o W_i`.
///
/// Off-sample entries of `Y_p` are exactly zero by construction. The
/// deviation on `T` telescopes to `|W_p|_F` and contracts at rate at most
/// `theta + phi` per step; the spectral norm on the complement is measured
/// and reported without a claimed bound.
pub fn dual_certificate_iterate(
    sp: &SubspacePair,
    mask: &BiregularMask,
    p: usize,
) -> Result<DualCertificate, BoundsError> {
    check_pair_shape(sp, mask)?;
    let indicator = mask.indicator();
    let inv_alpha = 1.0 / mask.alpha();
    let mut w = sp.uv_t();
    let mut y = DenseMatrix::zeros(sp.n_rows(), sp.n_cols());
    let mut history = vec![w.frobenius_norm()];
    for _ in 0..p {
        let sampled = linalg::hadamard(&indicator, &w)?.scale(inv_alpha);
        y = y.add(&sampled)?;
        w = w.sub(&subspace::project_t(&sampled, sp)?)?;
        history.push(w.frobenius_norm());
    }
    let spectral = linalg::spectral_norm(&subspace::project_t_perp(&y, sp)?)?;
    Ok(DualCertificate {
        y,
        deviation_t: *history.last().expect("history starts non-empty"),
        spectral_t_perp: spectral,
        iterations: p,
        deviation_history: history,
    })
}

fn check_pair_shape(sp: &SubspacePair, mask: &BiregularMask) -> Result<(), BoundsError> {
    if sp.n_rows() != mask.n_rows() || sp.n_cols() != mask.n_cols() {
        return Err(BoundsError::Subspace(SubspaceError::ShapeMismatch {
            expected_rows: mask.n_rows(),
            expected_cols: mask.n_cols(),
            rows: sp.n_rows(),
            cols: sp.n_cols(),
        }));
    }
    Ok(())
}

/// Outcome of checking a concrete candidate `Y` against the certificate
/// conditions with constants `(k1, k2, k3)`.
#[derive(Debug, Clone)]
pub struct CertificateCheck {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    /// Measured `|P_Tperp(Y)|_S`, required `<= k1`.
    pub spectral_t_perp: f64,
    pub spectral_ok: bool,
    /// Measured `|U V^T - P_T(Y)|_F`, required `<= k3`.
    pub deviation_t: f64,
    pub deviation_ok: bool,
    /// Largest contraction ratio over the Monte-Carlo probe of the operator
    /// condition, required `<= k2`.
    pub operator_ratio_max: f64,
    pub operator_ok: bool,
    /// The proven uniform value `theta + phi` of the probed operator norm.
    pub operator_bound_proven: f64,
    pub samples: usize,
    /// Gate `k3 < (1 - k1) sqrt(alpha (1 - k2))`.
    pub gate_ok: bool,
    pub passed: bool,
    /// `(1 - k1) - k3 / sqrt(alpha (1 - k2))`; positive iff the gate holds.
    pub c: f64,
    /// Full error multiplier `2 sqrt(1 + (n_r / c^2)(1 + 1/(alpha(1-k2))))`.
    pub bound_factor: f64,
}

/// Verifies the dual-certificate conditions for a candidate `Y`.
///
/// The support condition `E o Y = Y` must hold exactly and is an error when
/// violated. The two norm conditions are measured directly. The operator
/// condition quantifies over all of `T`, so it is spot-checked on
/// `n_samples` seeded Gaussian matrices projected onto `T`, and the proven
/// uniform value `theta + phi` is reported alongside.
#[allow(clippy::too_many_arguments)]
pub fn check_dual_certificate(
    y: &DenseMatrix,
    sp: &SubspacePair,
    mask: &BiregularMask,
    k1: f64,
    k2: f64,
    k3: f64,
    n_samples: usize,
    seed: u64,
) -> Result<CertificateCheck, BoundsError> {
    check_pair_shape(sp, mask)?;
    let indicator = mask.indicator();
    for i in 0..y.rows() {
        for j in 0..y.cols() {
            if indicator.get(i, j) == 0.0 && y.get(i, j) != 0.0 {
                return Err(BoundsError::SupportViolation {
                    row: i,
                    col: j,
                    value: y.get(i, j),
                });
            }
        }
    }

    let spectral_t_perp = linalg::spectral_norm(&subspace::project_t_perp(y, sp)?)?;
    let spectral_ok = spectral_t_perp <= k1 + CHECK_SLACK;

    let deviation_t = sp
        .uv_t()
        .sub(&subspace::project_t(y, sp)?)?
        .frobenius_norm();
    let deviation_ok = deviation_t <= k3 + CHECK_SLACK;

    let inv_alpha = 1.0 / mask.alpha();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut operator_ratio_max = 0.0f64;
    for _ in 0..n_samples {
        let gauss = DenseMatrix::from_fn(sp.n_rows(), sp.n_cols(), |_, _| {
            rng.sample(StandardNormal)
        });
        let z = subspace::project_t(&gauss, sp)?;
        let z_norm = z.frobenius_norm();
        if z_norm == 0.0 {
            continue;
        }
        let mapped = subspace::project_t(&linalg::hadamard(&indicator, &z)?, sp)?
            .scale(inv_alpha)
            .sub(&z)?;
        operator_ratio_max = operator_ratio_max.max(mapped.frobenius_norm() / z_norm);
    }
    let operator_ok = operator_ratio_max <= k2 + CHECK_SLACK;

    let report = subspace::coherence_report(sp, mask)?;
    let operator_bound_proven = report.theta + report.phi;

    let alpha = mask.alpha();
    let gate_ok = k2 < 1.0 && k3 < (1.0 - k1) * (alpha * (1.0 - k2)).sqrt();
    let (c, bound_factor) = if gate_ok {
        let c = (1.0 - k1) - k3 / (alpha * (1.0 - k2)).sqrt();
        let factor =
            2.0 * (1.0 + sp.n_rows() as f64 / (c * c) * (1.0 + 1.0 / (alpha * (1.0 - k2)))).sqrt();
        (c, factor)
    } else {
        (f64::NEG_INFINITY, f64::INFINITY)
    };

    Ok(CertificateCheck {
        k1,
        k2,
        k3,
        spectral_t_perp,
        spectral_ok,
        deviation_t,
        deviation_ok,
        operator_ratio_max,
        operator_ok,
        operator_bound_proven,
        samples: n_samples,
        gate_ok,
        passed: spectral_ok && deviation_ok && operator_ok && gate_ok,
        c,
        bound_factor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{validate_biregular, SampleSet};
    use crate::linalg::svd;
    use crate::subspace::truncate;
    use rand::Rng;

    fn full_mask(n: usize) -> BiregularMask {
        let edges = (0..n).flat_map(|r| (0..n).map(move |c| (r, c))).collect();
        validate_biregular(SampleSet::new(n, n, edges).unwrap()).unwrap()
    }

    fn random_pair(n: usize, r: usize, seed: u64) -> SubspacePair {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let g = DenseMatrix::from_fn(n, r, |_, _| rng.gen_range(-1.0..1.0));
        let h = DenseMatrix::from_fn(n, r, |_, _| rng.gen_range(-1.0..1.0));
        let x = g.matmul(&h.transpose()).unwrap();
        truncate(&svd(&x).unwrap(), r).unwrap()
    }

    #[test]
    fn certify_rejects_contraction_failure() {
        let cert = certify_recovery(1.0, 0.6, 0.5, 2, 0.9, 100).unwrap();
        assert!(!cert.feasible);
        assert!(cert.reasons.iter().any(|r| r == "theta+phi >= 1"));
    }

    #[test]
    fn certify_worked_values() {
        // theta = 0.1, phi from a degree-800 spectrum ratio with mu0 r = 3.
        let phi = 2.0 / 800f64.sqrt() * 3.0;
        let cert = certify_recovery(1.5, 0.1, phi, 2, 0.9, 1092).unwrap();
        assert!((cert.alpha_threshold - 0.16745).abs() < 1e-4);

        let phi = 2.0 / 500f64.sqrt() * 3.0;
        let cert = certify_recovery(1.5, 0.1, phi, 2, 0.9, 1092).unwrap();
        assert!((cert.alpha_threshold - 0.27977).abs() < 1e-4);
    }

    #[test]
    fn certify_perfect_incoherence_limit() {
        let cert = certify_recovery(1.0, 0.0, 0.0, 3, 0.5, 64).unwrap();
        assert_eq!(cert.alpha_threshold, 0.0);
        assert!((cert.c - 1.0).abs() < 1e-12);
        assert!(cert.feasible);
        assert!(cert.gamma.is_finite());
    }

    #[test]
    fn certify_monotone_in_theta_and_phi() {
        let base = certify_recovery(1.0, 0.05, 0.1, 2, 0.6, 64).unwrap();
        for (dt, dp) in [(0.05, 0.0), (0.0, 0.05), (0.1, 0.1)] {
            let bumped = certify_recovery(1.0, 0.05 + dt, 0.1 + dp, 2, 0.6, 64).unwrap();
            assert!(bumped.alpha_threshold >= base.alpha_threshold);
            assert!(bumped.c <= base.c);
        }
    }

    #[test]
    fn error_bound_behavior() {
        let cert = certify_recovery(1.0, 0.0, 0.0, 1, 0.5, 16).unwrap();
        assert_eq!(error_bound(&cert, 0.0, 0.1).unwrap(), 0.0);
        let b1 = error_bound(&cert, 0.01, 0.1).unwrap();
        let b2 = error_bound(&cert, 0.02, 0.1).unwrap();
        assert!((b2 - 2.0 * b1).abs() < 1e-12);

        let mut synthetic = cert.clone();
        synthetic.gamma = 10.0;
        assert!((error_bound(&synthetic, 0.01, 0.1).unwrap() - 0.101).abs() < 1e-12);

        let infeasible = certify_recovery(1.0, 0.6, 0.5, 2, 0.9, 100).unwrap();
        assert!(matches!(
            error_bound(&infeasible, 0.1, 0.1),
            Err(BoundsError::InfeasibleCertificate { .. })
        ));
    }

    #[test]
    fn prior_bound_values() {
        assert_eq!(prior_bound_comparison(1.5, 2), 1296.0);
        assert_eq!(prior_bound_comparison(1.0, 1), 144.0);
        assert_eq!(prior_bound_comparison(2.0, 2), 2304.0);
    }

    #[test]
    fn simple_certificate_on_full_mask() {
        let sp = random_pair(6, 2, 1);
        let mask = full_mask(6);
        let cert = dual_certificate_simple(&sp, &mask).unwrap();
        // alpha = 1 makes Y = U V^T itself.
        assert!(cert.y.sub(&sp.uv_t()).unwrap().frobenius_norm() < 1e-12);
        assert!(cert.deviation_t < 1e-10);
        assert!(cert.spectral_t_perp < 1e-9);
        // |W_0|_F = sqrt(r).
        assert!((cert.deviation_history[0] - 2f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn iterated_certificate_edge_cases() {
        let n = 12usize;
        let sample = crate::graphs::permutation_union_mask(n, 5, 3).unwrap();
        let mask = validate_biregular(sample).unwrap();
        let sp = random_pair(n, 2, 2);

        let p0 = dual_certificate_iterate(&sp, &mask, 0).unwrap();
        assert!(p0.y.frobenius_norm() == 0.0);
        assert!((p0.deviation_t - 2f64.sqrt()).abs() < 1e-10);

        let p1 = dual_certificate_iterate(&sp, &mask, 1).unwrap();
        let simple = dual_certificate_simple(&sp, &mask).unwrap();
        assert!(p1.y.sub(&simple.y).unwrap().frobenius_norm() < 1e-12);
        assert!((p1.deviation_t - simple.deviation_t).abs() < 1e-10);

        // Support is exact for every p.
        let p4 = dual_certificate_iterate(&sp, &mask, 4).unwrap();
        let indicator = mask.indicator();
        for i in 0..n {
            for j in 0..n {
                if indicator.get(i, j) == 0.0 {
                    assert_eq!(p4.y.get(i, j), 0.0);
                }
            }
        }
    }

    #[test]
    fn check_dual_certificate_paths() {
        let n = 12usize;
        let sample = crate::graphs::permutation_union_mask(n, 6, 7).unwrap();
        let mask = validate_biregular(sample).unwrap();
        let sp = random_pair(n, 2, 5);
        let report = subspace::coherence_report(&sp, &mask).unwrap();
        let (k1, k2) = (report.phi, report.theta + report.phi);
        let k3 = (2.0 * (report.theta.powi(2) + report.phi.powi(2))).sqrt();

        let cert = dual_certificate_simple(&sp, &mask).unwrap();
        let out = check_dual_certificate(&cert.y, &sp, &mask, k1, k2, k3, 25, 42).unwrap();
        assert!(out.spectral_ok);
        assert!(out.deviation_ok);
        assert!(out.operator_ok);
        assert!((out.operator_bound_proven - k2).abs() < 1e-12);

        // Y = 0 satisfies the deviation condition only with k3 >= sqrt(r).
        let zero = DenseMatrix::zeros(n, n);
        let tight = check_dual_certificate(&zero, &sp, &mask, k1, k2, 2f64.sqrt(), 5, 1).unwrap();
        assert!(tight.deviation_ok);
        let short = check_dual_certificate(&zero, &sp, &mask, k1, k2, 2f64.sqrt() - 0.01, 5, 1).unwrap();
        assert!(!short.deviation_ok);

        // Oversized k3 breaks the gate.
        let alpha = mask.alpha();
        let too_big = (1.0 - k1) * (alpha * (1.0 - k2)).sqrt() + 0.1;
        let gated = check_dual_certificate(&cert.y, &sp, &mask, k1, k2, too_big, 5, 1).unwrap();
        assert!(!gated.gate_ok && !gated.passed);

        // Support violations are an error.
        let mut off = zero.clone();
        let (r0, c0) = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .find(|&(i, j)| !mask.sample().contains(i, j))
            .unwrap();
        off.set(r0, c0, 1.0);
        assert!(matches!(
            check_dual_certificate(&off, &sp, &mask, k1, k2, k3, 5, 1),
            Err(BoundsError::SupportViolation { .. })
        ));
    }
}
