//! Total-degree polynomial spaces on R^d, their graded-lexicographic bases and
//! Vandermonde matrices.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{Domain, NodeSet};

/// Pivots below this fraction of the largest one count as numerically zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Monomial,
    /// Tensor Chebyshev polynomials of the first kind after mapping the box to `[-1, 1]^d`.
    Chebyshev,
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "monomial" => Ok(Family::Monomial),
            "chebyshev" => Ok(Family::Chebyshev),
            other => Err(Error::InvalidArgument(format!("unknown basis family '{other}'"))),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::Monomial => "monomial",
            Family::Chebyshev => "chebyshev",
        })
    }
}

/// `Q = C(m + d, d)`.
pub fn dimension(degree: usize, dim: usize) -> usize {
    // Multiplicative form stays exact: every partial product is itself a binomial.
    (1..=dim).fold(1usize, |acc, i| acc * (degree + i) / i)
}

/// Multi-indices with `|alpha| <= degree`, ordered by total degree and, within a degree,
/// by descending exponent of the first coordinate (then the second, ...).
pub fn multi_indices(degree: usize, dim: usize) -> Vec<Vec<usize>> {
    fn fill(rest: usize, dim: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() + 1 == dim {
            prefix.push(rest);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for e in (0..=rest).rev() {
            prefix.push(e);
            fill(rest - e, dim, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::with_capacity(dimension(degree, dim));
    for total in 0..=degree {
        fill(total, dim, &mut Vec::with_capacity(dim), &mut out);
    }
    out
}

#[derive(Debug, Clone)]
pub struct BasisSpec {
    degree: usize,
    dim: usize,
    family: Family,
    domain: Option<Domain>,
    indices: Vec<Vec<usize>>,
}

impl BasisSpec {
    pub fn monomial(degree: usize, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        Ok(Self {
            degree,
            dim,
            family: Family::Monomial,
            domain: None,
            indices: multi_indices(degree, dim),
        })
    }

    pub fn chebyshev(degree: usize, domain: &Domain) -> Self {
        Self {
            degree,
            dim: domain.dim(),
            family: Family::Chebyshev,
            domain: Some(domain.clone()),
            indices: multi_indices(degree, domain.dim()),
        }
    }

    /// Builds either family over `domain`; the monomial basis ignores the box.
    pub fn new(family: Family, degree: usize, domain: &Domain) -> Self {
        match family {
            Family::Monomial => Self::monomial(degree, domain.dim()).expect("domain has positive dimension"),
            Family::Chebyshev => Self::chebyshev(degree, domain),
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[Vec<usize>] {
        &self.indices
    }

    /// Writes the `Q` basis values at `x` into `out`.
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(out.len(), self.len());
        let m = self.degree;
        // Per-axis univariate tables of length m + 1.
        let mut table = vec![0.0; self.dim * (m + 1)];
        for (a, &xa) in x.iter().enumerate() {
            let row = &mut table[a * (m + 1)..(a + 1) * (m + 1)];
            match self.family {
                Family::Monomial => {
                    row[0] = 1.0;
                    for k in 1..=m {
                        row[k] = row[k - 1] * xa;
                    }
                }
                Family::Chebyshev => {
                    let dom = self.domain.as_ref().expect("chebyshev basis carries its box");
                    let t = 2.0 * (xa - dom.lower()[a]) / dom.width(a) - 1.0;
                    row[0] = 1.0;
                    if m >= 1 {
                        row[1] = t;
                    }
                    for k in 2..=m {
                        row[k] = 2.0 * t * row[k - 1] - row[k - 2];
                    }
                }
            }
        }
        for (slot, alpha) in out.iter_mut().zip(&self.indices) {
            *slot = alpha.iter().enumerate().map(|(a, &e)| table[a * (m + 1) + e]).product();
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.eval_into(x, &mut out);
        out
    }
}

/// `P = (p_k(x_i))`, one row per node.
#[derive(Debug, Clone)]
pub struct Vandermonde {
    matrix: DMatrix<f64>,
}

impl Vandermonde {
    pub fn new(spec: &BasisSpec, nodes: &NodeSet) -> Self {
        let n = nodes.len();
        let q = spec.len();
        let mut row = vec![0.0; q];
        let mut matrix = DMatrix::zeros(n, q);
        for (i, p) in nodes.points().enumerate() {
            spec.eval_into(p, &mut row);
            for (k, v) in row.iter().enumerate() {
                matrix[(i, k)] = *v;
            }
        }
        Self { matrix }
    }

    /// Wraps an arbitrary `N x Q` matrix, e.g. for synthetic programs.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    #[inline]
    pub fn get(&self, node: usize, k: usize) -> f64 {
        self.matrix[(node, k)]
    }

    /// Row `node` copied into `out`.
    pub fn row_into(&self, node: usize, out: &mut [f64]) {
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = self.matrix[(node, k)];
        }
    }

    /// `sum_k P[node, k] * y[k]`.
    #[inline]
    pub fn row_dot(&self, node: usize, y: &[f64]) -> f64 {
        y.iter().enumerate().map(|(k, v)| self.matrix[(node, k)] * v).sum()
    }

    /// `P^T a`.
    pub fn transpose_mul(&self, a: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ncols()];
        for (i, ai) in a.iter().enumerate() {
            if *ai != 0.0 {
                for (k, o) in out.iter_mut().enumerate() {
                    *o += self.matrix[(i, k)] * ai;
                }
            }
        }
        out
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record((0..self.ncols()).map(|k| format!("p{k}")))?;
        for i in 0..self.nrows() {
            w.write_record((0..self.ncols()).map(|k| format!("{:.17e}", self.matrix[(i, k)])))?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn vandermonde(spec: &BasisSpec, nodes: &NodeSet) -> Vandermonde {
    Vandermonde::new(spec, nodes)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unisolvency {
    pub unisolvent: bool,
    pub rank: usize,
    pub smallest_pivot: f64,
}

/// Numerical rank of `P` from a column-pivoted QR factorization.
pub fn unisolvency_check(v: &Vandermonde) -> Unisolvency {
    let (n, q) = (v.nrows(), v.ncols());
    let qr = v.matrix().clone().col_piv_qr();
    let r = qr.r();
    let pivots: Vec<f64> = (0..n.min(q)).map(|i| r[(i, i)].abs()).collect();
    let largest = pivots.iter().cloned().fold(0.0, f64::max);
    let rank = pivots
        .iter()
        .filter(|p| **p > RANK_TOLERANCE * largest && **p > 0.0)
        .count();
    let smallest_pivot = pivots.iter().cloned().fold(f64::INFINITY, f64::min);
    Unisolvency {
        unisolvent: rank == q,
        rank,
        smallest_pivot: if pivots.is_empty() { 0.0 } else { smallest_pivot },
    }
}
