//! LPS Cayley-graph masks.
//!
//! For primes `p, q` congruent to 1 mod 4, the `p + 1` integer quadruples
//! `(a0, a1, a2, a3)` with `a0^2 + a1^2 + a2^2 + a3^2 = p`, `a0 > 0` odd and
//! `a1, a2, a3` even are mapped to 2x2 matrices over Z/qZ. The Cayley graph
//! of the projective matrix group on this generator set is `(p + 1)`-regular
//! on `q(q^2 - 1)/2` vertices per side:
//!
//! - when `p` is a quadratic residue mod `q` the generators lie in the
//!   square-determinant subgroup, the graph is an ordinary graph on that
//!   subgroup, and its adjacency matrix is the mask;
//! - when `p` is a non-residue the generators map the square-determinant
//!   coset onto its complement, the graph is bipartite between the two
//!   cosets, and its biadjacency matrix is the mask.
//!
//! Either way the mask is a square `(p + 1)`-regular pattern whose second
//! singular value is certified numerically downstream.

use super::{validate_biregular, BiregularMask, GraphError, SampleSet};

/// Enumerates the generator quadruples for `p`: all integer solutions of
/// `a0^2 + a1^2 + a2^2 + a3^2 = p` with `a0 > 0` odd and `a1, a2, a3` even.
/// There are exactly `p + 1` of them for primes `p = 1 mod 4`.
pub fn four_square_generators(p: u64) -> Result<Vec<[i64; 4]>, GraphError> {
    check_lps_prime(p, "p")?;
    let bound = (p as f64).sqrt() as i64 + 1;
    let mut out = Vec::new();
    let target = p as i64;
    let mut a0 = 1;
    while a0 * a0 <= target {
        let rem0 = target - a0 * a0;
        for a1 in (-bound..=bound).filter(|x| x % 2 == 0) {
            let rem1 = rem0 - a1 * a1;
            if rem1 < 0 {
                continue;
            }
            for a2 in (-bound..=bound).filter(|x| x % 2 == 0) {
                let rem2 = rem1 - a2 * a2;
                if rem2 < 0 {
                    continue;
                }
                let a3 = (rem2 as f64).sqrt().round() as i64;
                if a3 * a3 == rem2 && a3 % 2 == 0 {
                    out.push([a0, a1, a2, a3]);
                    if a3 != 0 {
                        out.push([a0, a1, a2, -a3]);
                    }
                }
            }
        }
        a0 += 2;
    }
    out.sort_unstable();
    let expected = (p + 1) as usize;
    if out.len() != expected {
        return Err(GraphError::GeneratorCount {
            p,
            expected,
            found: out.len(),
        });
    }
    Ok(out)
}

/// Builds the LPS mask for the prime pair `(p, q)`, including the full
/// singular spectrum of its indicator.
///
/// Construction is fully deterministic: projective classes are canonicalized
/// by scaling their first nonzero entry (row-major) to 1 and vertices are
/// indexed by lexicographic order of the canonical entries, so repeated runs
/// produce bit-identical masks. Multi-edges and self loops are detected and
/// reported; the graph is checked for connectivity by breadth-first search.
pub fn lps_graph(p: u64, q: u64) -> Result<BiregularMask, GraphError> {
    validate_biregular(lps_sample_set(p, q)?)
}

/// The edge set of the LPS mask without the spectral validation pass; see
/// [`lps_graph`].
pub fn lps_sample_set(p: u64, q: u64) -> Result<SampleSet, GraphError> {
    check_lps_prime(p, "p")?;
    check_lps_prime(q, "q")?;
    if p == q {
        return Err(GraphError::InvalidParameter(
            "p and q must be distinct primes".into(),
        ));
    }

    let generators = generator_matrices(p, q)?;
    let (square_classes, nonsquare_classes) = projective_classes(q);
    let n = (q * (q * q - 1) / 2) as usize;
    debug_assert_eq!(square_classes.len(), n);
    debug_assert_eq!(nonsquare_classes.len(), n);

    // Generators all have determinant p, so right multiplication lands in
    // the square-determinant coset exactly when p is a residue mod q.
    let p_is_residue = is_quadratic_residue(p % q, q);
    let targets = if p_is_residue {
        &square_classes
    } else {
        &nonsquare_classes
    };

    let mut edges = Vec::with_capacity(n * generators.len());
    let mut seen = vec![false; n];
    for (vi, v) in square_classes.iter().enumerate() {
        let mut touched = Vec::with_capacity(generators.len());
        for g in &generators {
            let w = canonicalize(mat_mul(*v, *g, q), q);
            let wi = targets
                .binary_search(&w)
                .map_err(|_| GraphError::InvalidParameter(format!(
                    "product of vertex {vi} with a generator left its coset"
                )))?;
            if p_is_residue && wi == vi {
                return Err(GraphError::SelfLoop { vertex: vi });
            }
            if seen[wi] {
                return Err(GraphError::MultiEdge { row: vi, col: wi });
            }
            seen[wi] = true;
            touched.push(wi);
            edges.push((vi, wi));
        }
        for wi in touched {
            seen[wi] = false;
        }
    }

    let sample = SampleSet::new(n, n, edges)?;
    if !sample.is_connected() {
        return Err(GraphError::Disconnected);
    }
    Ok(sample)
}

fn check_lps_prime(value: u64, name: &str) -> Result<(), GraphError> {
    if !is_prime(value) {
        return Err(GraphError::InvalidParameter(format!(
            "{name} = {value} is not prime"
        )));
    }
    if value % 4 != 1 {
        return Err(GraphError::InvalidParameter(format!(
            "{name} = {value} is not congruent to 1 mod 4"
        )));
    }
    Ok(())
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Canonical generator classes, checked to be closed under projective
/// inverse (which makes the Cayley adjacency symmetric).
fn generator_matrices(p: u64, q: u64) -> Result<Vec<[u64; 4]>, GraphError> {
    let quadruples = four_square_generators(p)?;
    let i = sqrt_minus_one(q);
    let reduce = |x: i64| -> u64 { x.rem_euclid(q as i64) as u64 };
    let mut mats: Vec<[u64; 4]> = quadruples
        .iter()
        .map(|&[a0, a1, a2, a3]| {
            let m = [
                (reduce(a0) + i * reduce(a1)) % q,
                (reduce(a2) + i * reduce(a3)) % q,
                (reduce(-a2) + i * reduce(a3)) % q,
                (reduce(a0) + (q - i % q) * reduce(a1) % q) % q,
            ];
            canonicalize(m, q)
        })
        .collect();
    mats.sort_unstable();
    let closed = mats
        .iter()
        .all(|&m| mats.binary_search(&canonicalize(projective_inverse(m, q), q)).is_ok());
    if !closed {
        return Err(GraphError::InvalidParameter(
            "generator set is not closed under inverse".into(),
        ));
    }
    Ok(mats)
}

/// All canonical projective classes of invertible 2x2 matrices over Z/qZ,
/// split by whether the determinant is a square mod q, each list sorted
/// lexicographically by entries.
fn projective_classes(q: u64) -> (Vec<[u64; 4]>, Vec<[u64; 4]>) {
    let residue: Vec<bool> = {
        let mut table = vec![false; q as usize];
        for x in 1..q {
            table[((x * x) % q) as usize] = true;
        }
        table
    };
    let mut squares = Vec::new();
    let mut nonsquares = Vec::new();
    let mut push = |m: [u64; 4]| {
        let det = (m[0] * m[3] % q + q * q - m[1] * m[2] % q) % q;
        if det == 0 {
            return;
        }
        if residue[det as usize] {
            squares.push(m);
        } else {
            nonsquares.push(m);
        }
    };
    for b in 0..q {
        for c in 0..q {
            for d in 0..q {
                push([1, b, c, d]);
            }
        }
    }
    for c in 0..q {
        for d in 0..q {
            push([0, 1, c, d]);
        }
    }
    for d in 0..q {
        push([0, 0, 1, d]);
    }
    // [0, 0, 0, 1] is singular and therefore never a class.
    squares.sort_unstable();
    nonsquares.sort_unstable();
    (squares, nonsquares)
}

fn is_quadratic_residue(a: u64, q: u64) -> bool {
    (1..q).any(|x| (x * x) % q == a % q)
}

/// Smallest `i` in `[1, q - 1]` with `i^2 = -1 mod q`; exists for every
/// prime `q = 1 mod 4`.
fn sqrt_minus_one(q: u64) -> u64 {
    (1..q)
        .find(|&x| (x * x) % q == q - 1)
        .expect("q = 1 mod 4 admits a square root of -1")
}

fn mat_mul(a: [u64; 4], b: [u64; 4], q: u64) -> [u64; 4] {
    [
        (a[0] * b[0] + a[1] * b[2]) % q,
        (a[0] * b[1] + a[1] * b[3]) % q,
        (a[2] * b[0] + a[3] * b[2]) % q,
        (a[2] * b[1] + a[3] * b[3]) % q,
    ]
}

/// Adjugate, which equals the inverse up to the (projectively irrelevant)
/// determinant factor.
fn projective_inverse(m: [u64; 4], q: u64) -> [u64; 4] {
    [m[3], (q - m[1]) % q, (q - m[2]) % q, m[0]]
}

/// Scales the class so its first nonzero entry (row-major) is 1.
fn canonicalize(m: [u64; 4], q: u64) -> [u64; 4] {
    let lead = m
        .iter()
        .copied()
        .find(|&x| x != 0)
        .expect("projective class of the zero matrix");
    let inv = mod_inverse(lead, q);
    [
        m[0] * inv % q,
        m[1] * inv % q,
        m[2] * inv % q,
        m[3] * inv % q,
    ]
}

fn mod_inverse(x: u64, q: u64) -> u64 {
    // Fermat: x^(q-2) mod q.
    let mut base = x % q;
    let mut exp = q - 2;
    let mut acc = 1u64;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % q;
        }
        base = base * base % q;
        exp >>= 1;
    }
    acc
}
