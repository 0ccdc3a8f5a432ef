//! Sampling masks: general 0/1 patterns, biregular validation with spectral
//! data, deterministic mask generators, and the LPS Cayley-graph
//! construction (in [`lps`]).

mod lps;

pub use lps::{four_square_generators, lps_graph, lps_sample_set};

use crate::linalg::{self, DenseMatrix, LinalgError};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

/// Slack used when deciding whether a measured second singular value meets
/// the optimal spectral-gap bound.
pub const RAMANUJAN_SLACK: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("edge ({row}, {col}) out of bounds for a {n_rows}x{n_cols} pattern")]
    EdgeOutOfBounds {
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },
    #[error("duplicate edge ({row}, {col})")]
    DuplicateEdge { row: usize, col: usize },
    #[error("row {index} has degree {found}, expected {expected}")]
    IrregularRow {
        index: usize,
        found: usize,
        expected: usize,
    },
    #[error("column {index} has degree {found}, expected {expected}")]
    IrregularColumn {
        index: usize,
        found: usize,
        expected: usize,
    },
    #[error("pattern has no edges")]
    Empty,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("multiple edges between vertices {row} and {col}")]
    MultiEdge { row: usize, col: usize },
    #[error("self loop at vertex {vertex}: a generator is the identity")]
    SelfLoop { vertex: usize },
    #[error("expected {expected} generators for p = {p}, enumeration found {found}")]
    GeneratorCount {
        p: u64,
        expected: usize,
        found: usize,
    },
    #[error("constructed graph is not connected")]
    Disconnected,
    #[error("largest singular value {found} deviates from sqrt(d_r*d_c) = {expected}")]
    SpectralInvariant { found: f64, expected: f64 },
    #[error("requested {requested} samples but the pattern only has {capacity} cells")]
    SampleCount { requested: usize, capacity: usize },
    #[error("mask file line {line}: {message}")]
    FileFormat { line: usize, message: String },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A sampling pattern: the set of observed (row, col) positions of an
/// `n_rows x n_cols` matrix. Edges are stored sorted and duplicate-free;
/// indices are 0-based in memory and 1-based on disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSet {
    n_rows: usize,
    n_cols: usize,
    edges: Vec<(usize, usize)>,
}

impl SampleSet {
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        mut edges: Vec<(usize, usize)>,
    ) -> Result<Self, GraphError> {
        if n_rows == 0 || n_cols == 0 {
            return Err(GraphError::InvalidParameter(format!(
                "pattern dimensions must be positive, got {n_rows}x{n_cols}"
            )));
        }
        for &(r, c) in &edges {
            if r >= n_rows || c >= n_cols {
                return Err(GraphError::EdgeOutOfBounds {
                    row: r,
                    col: c,
                    n_rows,
                    n_cols,
                });
            }
        }
        edges.sort_unstable();
        if let Some(w) = edges.windows(2).find(|w| w[0] == w[1]) {
            return Err(GraphError::DuplicateEdge {
                row: w[0].0,
                col: w[0].1,
            });
        }
        Ok(Self {
            n_rows,
            n_cols,
            edges,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        self.edges.binary_search(&(row, col)).is_ok()
    }

    /// The 0/1 indicator matrix of the pattern.
    pub fn indicator(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.n_rows, self.n_cols);
        for &(r, c) in &self.edges {
            m.set(r, c, 1.0);
        }
        m
    }

    pub fn row_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n_rows];
        for &(r, _) in &self.edges {
            deg[r] += 1;
        }
        deg
    }

    pub fn col_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n_cols];
        for &(_, c) in &self.edges {
            deg[c] += 1;
        }
        deg
    }

    /// Sampled columns of each row, in ascending order.
    pub fn rows_to_cols(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_rows];
        for &(r, c) in &self.edges {
            out[r].push(c);
        }
        out
    }

    /// Sampled rows of each column, in ascending order.
    pub fn cols_to_rows(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_cols];
        for &(r, c) in &self.edges {
            out[c].push(r);
        }
        out
    }

    /// Connectivity of the bipartite graph whose biadjacency this pattern
    /// is, checked by breadth-first search over row and column vertices.
    pub fn is_connected(&self) -> bool {
        if self.edges.is_empty() {
            return false;
        }
        let rows_to_cols = self.rows_to_cols();
        let cols_to_rows = self.cols_to_rows();
        let mut seen_row = vec![false; self.n_rows];
        let mut seen_col = vec![false; self.n_cols];
        let mut queue = std::collections::VecDeque::new();
        seen_row[self.edges[0].0] = true;
        queue.push_back((true, self.edges[0].0));
        while let Some((is_row, idx)) = queue.pop_front() {
            if is_row {
                for &c in &rows_to_cols[idx] {
                    if !seen_col[c] {
                        seen_col[c] = true;
                        queue.push_back((false, c));
                    }
                }
            } else {
                for &r in &cols_to_rows[idx] {
                    if !seen_row[r] {
                        seen_row[r] = true;
                        queue.push_back((true, r));
                    }
                }
            }
        }
        seen_row.iter().all(|&s| s) && seen_col.iter().all(|&s| s)
    }

    /// Canonical coordinate text form: header `n_rows n_cols nnz`, then one
    /// `i j` line per edge with 1-based indices sorted by (i, j).
    pub fn to_coordinate_text(&self) -> String {
        let mut out = String::with_capacity(16 * (self.edges.len() + 1));
        out.push_str(&format!(
            "{} {} {}\n",
            self.n_rows,
            self.n_cols,
            self.edges.len()
        ));
        for &(r, c) in &self.edges {
            out.push_str(&format!("{} {}\n", r + 1, c + 1));
        }
        out
    }

    /// Parses coordinate text. Unsorted input is accepted; duplicates and
    /// out-of-range indices are rejected.
    pub fn from_coordinate_text(text: &str) -> Result<Self, GraphError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(GraphError::FileFormat {
            line: 1,
            message: "missing header line".into(),
        })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(GraphError::FileFormat {
                line: 1,
                message: format!("header must be `n_rows n_cols nnz`, got {header:?}"),
            });
        }
        let parse = |s: &str, line: usize| -> Result<usize, GraphError> {
            s.parse().map_err(|_| GraphError::FileFormat {
                line,
                message: format!("cannot parse {s:?} as an integer"),
            })
        };
        let n_rows = parse(fields[0], 1)?;
        let n_cols = parse(fields[1], 1)?;
        let nnz = parse(fields[2], 1)?;
        let mut edges = Vec::with_capacity(nnz);
        for (lineno, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(GraphError::FileFormat {
                    line: lineno + 1,
                    message: format!("expected `i j`, got {line:?}"),
                });
            }
            let i = parse(fields[0], lineno + 1)?;
            let j = parse(fields[1], lineno + 1)?;
            if i == 0 || j == 0 {
                return Err(GraphError::FileFormat {
                    line: lineno + 1,
                    message: "indices are 1-based".into(),
                });
            }
            edges.push((i - 1, j - 1));
        }
        if edges.len() != nnz {
            return Err(GraphError::FileFormat {
                line: 1,
                message: format!("header promises {nnz} edges, file has {}", edges.len()),
            });
        }
        Self::new(n_rows, n_cols, edges)
    }
}

/// A biregular sampling pattern together with its degrees and the spectral
/// data of its 0/1 indicator matrix.
#[derive(Debug, Clone)]
pub struct BiregularMask {
    sample: SampleSet,
    d_r: usize,
    d_c: usize,
    sigma1: f64,
    sigma2: f64,
    alpha: f64,
}

impl BiregularMask {
    pub fn sample(&self) -> &SampleSet {
        &self.sample
    }

    pub fn n_rows(&self) -> usize {
        self.sample.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.sample.n_cols
    }

    pub fn row_degree(&self) -> usize {
        self.d_r
    }

    pub fn col_degree(&self) -> usize {
        self.d_c
    }

    pub fn sigma1(&self) -> f64 {
        self.sigma1
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// Fraction of sampled cells: `d_c / n_rows = d_r / n_cols`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn indicator(&self) -> DenseMatrix {
        self.sample.indicator()
    }
}

/// Spectral summary of a biregular mask against the optimal-gap bound
/// `sqrt(d_r - 1) + sqrt(d_c - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    pub sigma1: f64,
    pub sigma2: f64,
    pub ramanujan_bound: f64,
    pub is_ramanujan: bool,
}

/// Checks that every row has the same degree and every column has the same
/// degree, computes the full singular spectrum of the indicator, and
/// returns the populated mask.
pub fn validate_biregular(sample: SampleSet) -> Result<BiregularMask, GraphError> {
    if sample.is_empty() {
        return Err(GraphError::Empty);
    }
    let row_deg = sample.row_degrees();
    let col_deg = sample.col_degrees();
    let d_r = row_deg[0];
    if let Some(index) = row_deg.iter().position(|&d| d != d_r) {
        return Err(GraphError::IrregularRow {
            index,
            found: row_deg[index],
            expected: d_r,
        });
    }
    let d_c = col_deg[0];
    if let Some(index) = col_deg.iter().position(|&d| d != d_c) {
        return Err(GraphError::IrregularColumn {
            index,
            found: col_deg[index],
            expected: d_c,
        });
    }

    let spectrum = linalg::singular_values(&sample.indicator())?;
    let sigma1 = spectrum[0];
    let sigma2 = spectrum.get(1).copied().unwrap_or(0.0);
    let expected = ((d_r * d_c) as f64).sqrt();
    if (sigma1 - expected).abs() > 1e-8 * expected {
        return Err(GraphError::SpectralInvariant {
            found: sigma1,
            expected,
        });
    }
    let alpha = d_c as f64 / sample.n_rows as f64;
    Ok(BiregularMask {
        sample,
        d_r,
        d_c,
        sigma1,
        sigma2,
        alpha,
    })
}

/// Compares the measured second singular value with the optimal-gap bound.
pub fn spectral_certificate(mask: &BiregularMask) -> SpectralReport {
    let ramanujan_bound =
        ((mask.d_r as f64 - 1.0).sqrt()) + ((mask.d_c as f64 - 1.0).sqrt());
    SpectralReport {
        sigma1: mask.sigma1,
        sigma2: mask.sigma2,
        ramanujan_bound,
        is_ramanujan: mask.sigma2 <= ramanujan_bound + RAMANUJAN_SLACK,
    }
}

/// Whether [`random_mask`] draws cells with or without replacement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Replacement {
    With,
    Without,
}

/// Uniform random sampling of `m` cells, seeded and reproducible. Without
/// replacement the result has exactly `m` edges; with replacement duplicate
/// draws collapse, so it has at most `m`.
pub fn random_mask(
    n_rows: usize,
    n_cols: usize,
    m: usize,
    seed: u64,
    replacement: Replacement,
) -> Result<SampleSet, GraphError> {
    let capacity = n_rows
        .checked_mul(n_cols)
        .ok_or_else(|| GraphError::InvalidParameter("pattern size overflows".into()))?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let cells: Vec<(usize, usize)> = match replacement {
        Replacement::Without => {
            if m > capacity {
                return Err(GraphError::SampleCount {
                    requested: m,
                    capacity,
                });
            }
            let mut all: Vec<usize> = (0..capacity).collect();
            all.partial_shuffle(&mut rng, m);
            all[..m].iter().map(|&k| (k / n_cols, k % n_cols)).collect()
        }
        Replacement::With => {
            let mut draws: Vec<usize> = (0..m).map(|_| rng.gen_range(0..capacity)).collect();
            draws.sort_unstable();
            draws.dedup();
            draws.iter().map(|&k| (k / n_cols, k % n_cols)).collect()
        }
    };
    SampleSet::new(n_rows, n_cols, cells)
}

/// Square d-regular mask built as the union of `d` pairwise-disjoint random
/// permutation matrices.
///
/// Each round draws a permutation avoiding every previously used cell; when
/// a greedy random assignment gets stuck it is repaired with augmenting
/// paths, which always succeed because the unused cells form a regular
/// bipartite graph.
pub fn permutation_union_mask(n: usize, d: usize, seed: u64) -> Result<SampleSet, GraphError> {
    if n == 0 || d == 0 || d > n {
        return Err(GraphError::InvalidParameter(format!(
            "need 0 < d <= n, got n = {n}, d = {d}"
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut used = vec![vec![false; n]; n];
    let mut edges = Vec::with_capacity(n * d);
    for _ in 0..d {
        let mut col_of_row = vec![usize::MAX; n];
        let mut row_of_col = vec![usize::MAX; n];
        let mut row_order: Vec<usize> = (0..n).collect();
        row_order.shuffle(&mut rng);
        for &row in &row_order {
            let mut cols: Vec<usize> = (0..n).filter(|&c| !used[row][c]).collect();
            cols.shuffle(&mut rng);
            let mut visited = vec![false; n];
            let ok = augment(
                row,
                &cols,
                &used,
                &mut col_of_row,
                &mut row_of_col,
                &mut visited,
            );
            debug_assert!(ok, "regular bipartite complement always has a matching");
            if !ok {
                return Err(GraphError::InvalidParameter(
                    "failed to extend permutation union".into(),
                ));
            }
        }
        for row in 0..n {
            let col = col_of_row[row];
            used[row][col] = true;
            edges.push((row, col));
        }
    }
    SampleSet::new(n, n, edges)
}

fn augment(
    row: usize,
    preferred: &[usize],
    used: &[Vec<bool>],
    col_of_row: &mut [usize],
    row_of_col: &mut [usize],
    visited: &mut [bool],
) -> bool {
    for &col in preferred {
        if visited[col] || used[row][col] {
            continue;
        }
        visited[col] = true;
        let holder = row_of_col[col];
        if holder == usize::MAX || {
            let n = used.len();
            let cols: Vec<usize> = (0..n).filter(|&c| !used[holder][c]).collect();
            augment(holder, &cols, used, col_of_row, row_of_col, visited)
        } {
            col_of_row[row] = col;
            row_of_col[col] = row;
            return true;
        }
    }
    false
}

/// Cayley mask of the group (Z/2)^(2m) whose connection set is the zero set
/// of the quadratic form `x1 x2 + x3 x4 + ... + x_{2m-1} x_{2m}`.
///
/// The indicator is a group circulant, so its singular values are the
/// absolute Fourier coefficients of the connection set: one value
/// `d = 2^(2m-1) + 2^(m-1)` and all others exactly `2^(m-1)`. This is the
/// flattest possible nontrivial spectrum at this density, which makes the
/// mask a convenient fixture with an exactly known spectral gap.
pub fn quadratic_form_mask(m: u32) -> Result<SampleSet, GraphError> {
    if m == 0 || m > 7 {
        return Err(GraphError::InvalidParameter(format!(
            "need 1 <= m <= 7 pairs of bits, got {m}"
        )));
    }
    let n = 1usize << (2 * m);
    let form = |x: usize| -> bool {
        let mut acc = false;
        for k in 0..m {
            let a = (x >> (2 * k)) & 1;
            let b = (x >> (2 * k + 1)) & 1;
            acc ^= (a & b) == 1;
        }
        acc
    };
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if !form(i ^ j) {
                edges.push((i, j));
            }
        }
    }
    SampleSet::new(n, n, edges)
}
