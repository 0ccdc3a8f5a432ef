//! Tangent-space machinery and coherence parameters of a reference low-rank
//! matrix: truncated SVD factors, the projectors onto the tangent space T
//! and its complement, the row-coherence mu0, the cross-coherence mu1, the
//! graph-relative theta of a (subspace, mask) pair, the combined parameter
//! phi, and the centered sampling operator.

use crate::graphs::BiregularMask;
use crate::linalg::{self, DenseMatrix, LinalgError, SvdResult};
use thiserror::Error;

/// Orthonormality tolerance for user-supplied factors. Looser than the
/// construction tolerance so factors round-tripped through files pass.
pub const FACTOR_ORTHONORMALITY_TOLERANCE: f64 = 1e-6;

/// Singular values below `RANK_TOLERANCE_FACTOR * s1` do not count toward
/// the numerical rank.
pub const RANK_TOLERANCE_FACTOR: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum SubspaceError {
    #[error("requested rank {requested} exceeds the {available} computed singular values")]
    RankExceedsSpectrum { requested: usize, available: usize },
    #[error(
        "requested rank {requested} exceeds the numerical rank: singular value {value} \
         is below the cutoff {cutoff}"
    )]
    RankDeficient {
        requested: usize,
        value: f64,
        cutoff: f64,
    },
    #[error("factor columns are not orthonormal: max Gram deviation {deviation}")]
    NotOrthonormal { deviation: f64 },
    #[error("expected a {expected_rows}x{expected_cols} matrix, got {rows}x{cols}")]
    ShapeMismatch {
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },
    #[error("rank must be at least 1")]
    ZeroRank,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Truncated SVD factors `(U, gamma, V)` of a reference matrix; the column
/// spans of `U` and `V` define the tangent space `T`.
#[derive(Debug, Clone)]
pub struct SubspacePair {
    u: DenseMatrix,
    gamma: Vec<f64>,
    v: DenseMatrix,
}

impl SubspacePair {
    /// Assembles a pair from explicit factors, checking orthonormality of
    /// both factors within [`FACTOR_ORTHONORMALITY_TOLERANCE`].
    pub fn from_factors(
        u: DenseMatrix,
        gamma: Vec<f64>,
        v: DenseMatrix,
    ) -> Result<Self, SubspaceError> {
        if gamma.is_empty() {
            return Err(SubspaceError::ZeroRank);
        }
        if u.cols() != gamma.len() || v.cols() != gamma.len() {
            return Err(SubspaceError::ShapeMismatch {
                expected_rows: u.rows(),
                expected_cols: gamma.len(),
                rows: v.rows(),
                cols: v.cols(),
            });
        }
        check_orthonormal(&u, FACTOR_ORTHONORMALITY_TOLERANCE)?;
        check_orthonormal(&v, FACTOR_ORTHONORMALITY_TOLERANCE)?;
        Ok(Self { u, gamma, v })
    }

    pub fn u(&self) -> &DenseMatrix {
        &self.u
    }

    pub fn v(&self) -> &DenseMatrix {
        &self.v
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn rank(&self) -> usize {
        self.gamma.len()
    }

    pub fn n_rows(&self) -> usize {
        self.u.rows()
    }

    pub fn n_cols(&self) -> usize {
        self.v.rows()
    }

    /// The rank-r orientation matrix `U V^T`.
    pub fn uv_t(&self) -> DenseMatrix {
        let r = self.rank();
        DenseMatrix::from_fn(self.n_rows(), self.n_cols(), |i, j| {
            (0..r).map(|k| self.u.get(i, k) * self.v.get(j, k)).sum()
        })
    }

    /// Reassembles `U diag(gamma) V^T`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let r = self.rank();
        DenseMatrix::from_fn(self.n_rows(), self.n_cols(), |i, j| {
            (0..r)
                .map(|k| self.u.get(i, k) * self.gamma[k] * self.v.get(j, k))
                .sum()
        })
    }
}

fn check_orthonormal(factor: &DenseMatrix, tol: f64) -> Result<(), SubspaceError> {
    let gram = factor.transpose().matmul(factor)?;
    let deviation = gram
        .sub(&DenseMatrix::identity(factor.cols()))?
        .max_abs_entry();
    if deviation > tol {
        return Err(SubspaceError::NotOrthonormal { deviation });
    }
    Ok(())
}

/// Keeps the first `r` singular triplets of a full decomposition.
pub fn truncate(decomposition: &SvdResult, r: usize) -> Result<SubspacePair, SubspaceError> {
    if r == 0 {
        return Err(SubspaceError::ZeroRank);
    }
    if r > decomposition.singulars.len() {
        return Err(SubspaceError::RankExceedsSpectrum {
            requested: r,
            available: decomposition.singulars.len(),
        });
    }
    let cutoff = RANK_TOLERANCE_FACTOR * decomposition.singulars[0];
    let value = decomposition.singulars[r - 1];
    if value <= cutoff {
        return Err(SubspaceError::RankDeficient {
            requested: r,
            value,
            cutoff,
        });
    }
    let take_cols = |m: &DenseMatrix| {
        DenseMatrix::from_fn(m.rows(), r, |i, k| m.get(i, k))
    };
    Ok(SubspacePair {
        u: take_cols(&decomposition.u),
        gamma: decomposition.singulars[..r].to_vec(),
        v: take_cols(&decomposition.v),
    })
}

fn check_shape(z: &DenseMatrix, sp: &SubspacePair) -> Result<(), SubspaceError> {
    if z.rows() != sp.n_rows() || z.cols() != sp.n_cols() {
        return Err(SubspaceError::ShapeMismatch {
            expected_rows: sp.n_rows(),
            expected_cols: sp.n_cols(),
            rows: z.rows(),
            cols: z.cols(),
        });
    }
    Ok(())
}

/// Projection onto the tangent space:
/// `P_T Z = U U^T Z + Z V V^T - U U^T Z V V^T`.
pub fn project_t(z: &DenseMatrix, sp: &SubspacePair) -> Result<DenseMatrix, SubspaceError> {
    check_shape(z, sp)?;
    let ut_z = sp.u.transpose().matmul(z)?; // r x n_c
    let z_v = z.matmul(&sp.v)?; // n_r x r
    let ut_z_v = ut_z.matmul(&sp.v)?; // r x r
    let left = sp.u.matmul(&ut_z)?;
    let right = z_v.matmul(&sp.v.transpose())?;
    let cross = sp.u.matmul(&ut_z_v)?.matmul(&sp.v.transpose())?;
    Ok(left.add(&right)?.sub(&cross)?)
}

/// Complementary projection `Z - P_T Z`. The perpendicular factors are
/// never materialized; `I - U U^T` and `I - V V^T` act implicitly.
pub fn project_t_perp(z: &DenseMatrix, sp: &SubspacePair) -> Result<DenseMatrix, SubspaceError> {
    Ok(z.sub(&project_t(z, sp)?)?)
}

/// Row coherence of an orthonormal factor: `(n / r) * max_i |row_i|^2`,
/// always in `[1, n / r]`.
pub fn mu0_of(factor: &DenseMatrix) -> Result<f64, SubspaceError> {
    check_orthonormal(factor, FACTOR_ORTHONORMALITY_TOLERANCE)?;
    let max_row_sq = (0..factor.rows())
        .map(|i| factor.row(i).iter().map(|x| x * x).sum::<f64>())
        .fold(0.0f64, f64::max);
    Ok(factor.rows() as f64 / factor.cols() as f64 * max_row_sq)
}

/// Cross coherence `sqrt(n_r n_c / r) * max_ij |(U V^T)_ij|`. Reported for
/// context only; no certificate consumes it.
pub fn mu1_of(sp: &SubspacePair) -> f64 {
    let r = sp.rank();
    let mut max_abs = 0.0f64;
    for i in 0..sp.n_rows() {
        for j in 0..sp.n_cols() {
            let e: f64 = (0..r).map(|k| sp.u.get(i, k) * sp.v.get(j, k)).sum();
            max_abs = max_abs.max(e.abs());
        }
    }
    ((sp.n_rows() * sp.n_cols()) as f64 / r as f64).sqrt() * max_abs
}

/// Graph-relative spectral deviation of the sampled row blocks of `U` and
/// `V` from the identity.
///
/// For each mask column `j` with sampled row set `N(j)` this measures
/// `| (1/alpha) * sum_{l in N(j)} row_l(U)^T row_l(U) - I_r |_S`, and
/// symmetrically over mask rows with `V`; the result is the maximum over
/// all of these neighborhoods, which is exactly the quantity the recovery
/// bounds consume.
pub fn theta_graph(sp: &SubspacePair, mask: &BiregularMask) -> Result<f64, SubspaceError> {
    if sp.n_rows() != mask.n_rows() || sp.n_cols() != mask.n_cols() {
        return Err(SubspaceError::ShapeMismatch {
            expected_rows: mask.n_rows(),
            expected_cols: mask.n_cols(),
            rows: sp.n_rows(),
            cols: sp.n_cols(),
        });
    }
    let inv_alpha = 1.0 / mask.alpha();
    let max_u = neighborhood_deviation(sp.u(), &mask.sample().cols_to_rows(), inv_alpha)?;
    let max_v = neighborhood_deviation(sp.v(), &mask.sample().rows_to_cols(), inv_alpha)?;
    Ok(max_u.max(max_v))
}

fn neighborhood_deviation(
    factor: &DenseMatrix,
    neighborhoods: &[Vec<usize>],
    inv_alpha: f64,
) -> Result<f64, SubspaceError> {
    let r = factor.cols();
    let mut worst = 0.0f64;
    for rows in neighborhoods {
        let mut gram = DenseMatrix::zeros(r, r);
        for &l in rows {
            let row = factor.row(l);
            for a in 0..r {
                for b in 0..r {
                    gram.set(a, b, gram.get(a, b) + row[a] * row[b]);
                }
            }
        }
        let deviation = gram
            .scale(inv_alpha)
            .sub(&DenseMatrix::identity(r))?;
        worst = worst.max(linalg::spectral_norm(&deviation)?);
    }
    Ok(worst)
}

/// Combined mask/matrix parameter `phi = (sigma2 / sigma1) * mu0 * r`.
pub fn phi_of(mask: &BiregularMask, mu0: f64, r: usize) -> f64 {
    phi_from_ratio(mask.sigma2() / mask.sigma1(), mu0, r)
}

/// Same product stated on a bare singular-value ratio.
pub fn phi_from_ratio(sigma_ratio: f64, mu0: f64, r: usize) -> f64 {
    sigma_ratio * mu0 * r as f64
}

/// The centered sampling operator `M = (1/alpha) E - 1`, applied as
/// `M o Z = (1/alpha)(E o Z) - Z` without materializing `M`.
#[derive(Debug, Clone)]
pub struct CenteredOperator {
    indicator: DenseMatrix,
    alpha: f64,
}

impl CenteredOperator {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `(1/alpha) (E o Z) - Z`.
    pub fn apply(&self, z: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
        let sampled = linalg::hadamard(&self.indicator, z)?;
        sampled.scale(1.0 / self.alpha).sub(z)
    }

    /// The dense matrix `(1/alpha) E - 1`, for tests and spectra.
    pub fn materialize(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.indicator.rows(), self.indicator.cols(), |i, j| {
            self.indicator.get(i, j) / self.alpha - 1.0
        })
    }
}

pub fn centered_operator(mask: &BiregularMask) -> CenteredOperator {
    CenteredOperator {
        indicator: mask.indicator(),
        alpha: mask.alpha(),
    }
}

/// Coherence parameters of a (subspace, mask) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceReport {
    pub mu0_u: f64,
    pub mu0_v: f64,
    pub mu0: f64,
    pub mu1: f64,
    pub theta: f64,
    pub phi: f64,
}

impl CoherenceReport {
    /// Flat key=value block, one pair per line, including the mask spectrum.
    pub fn to_key_value(&self, mask: &BiregularMask) -> String {
        format!(
            "mu0_U={:?}\nmu0_V={:?}\nmu0={:?}\nmu1={:?}\ntheta={:?}\nphi={:?}\n\
             sigma1={:?}\nsigma2={:?}\nalpha={:?}\n",
            self.mu0_u,
            self.mu0_v,
            self.mu0,
            self.mu1,
            self.theta,
            self.phi,
            mask.sigma1(),
            mask.sigma2(),
            mask.alpha(),
        )
    }
}

/// Computes every coherence parameter of the pair in one pass.
pub fn coherence_report(
    sp: &SubspacePair,
    mask: &BiregularMask,
) -> Result<CoherenceReport, SubspaceError> {
    let mu0_u = mu0_of(sp.u())?;
    let mu0_v = mu0_of(sp.v())?;
    let mu0 = mu0_u.max(mu0_v);
    let mu1 = mu1_of(sp);
    let theta = theta_graph(sp, mask)?;
    let phi = phi_of(mask, mu0, sp.rank());
    Ok(CoherenceReport {
        mu0_u,
        mu0_v,
        mu0,
        mu1,
        theta,
        phi,
    })
}
