//! The data every quasi-interpolant is built from: nodes, a polynomial space with its
//! Vandermonde matrix, a weight family and the resolved weight scale.

use crate::basis::{unisolvency_check, BasisSpec, Vandermonde};
use crate::error::{Error, Result};
use crate::geometry::{dist, NodeSet};
use crate::weights::WeightSpec;

/// Relative snap tolerance: evaluation points closer than `SNAP_FACTOR * scale` to a node
/// take that node's cardinal vector when the weight diverges at zero.
pub const SNAP_FACTOR: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Scheme {
    nodes: NodeSet,
    basis: BasisSpec,
    vandermonde: Vandermonde,
    weights: WeightSpec,
    delta: f64,
    scale: f64,
    snap: f64,
}

/// Weights at an evaluation point, or the node it snapped to.
#[derive(Debug, Clone, PartialEq)]
pub enum PointWeights {
    /// Weights divided by their maximum, together with that maximum.
    Normalized {
        values: Vec<f64>,
        max: f64,
    },
    Snapped(usize),
}

impl Scheme {
    /// `delta` is the scale parameter from a [`crate::geometry::DeltaRule`]; the weight
    /// spec decides whether it or the separation radius scales the weights.
    pub fn new(nodes: NodeSet, basis: BasisSpec, weights: WeightSpec, delta: f64) -> Result<Self> {
        if basis.dim() != nodes.dim() {
            return Err(Error::InvalidArgument(format!(
                "basis dimension {} differs from node dimension {}",
                basis.dim(),
                nodes.dim()
            )));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
        }
        let vandermonde = Vandermonde::new(&basis, &nodes);
        let check = unisolvency_check(&vandermonde);
        if !check.unisolvent {
            return Err(Error::NotUnisolvent {
                rank: check.rank,
                dimension: basis.len(),
            });
        }
        let q = nodes.separation_radius();
        let scale = weights.resolve_scale(delta, if q.is_finite() { q } else { delta });
        Ok(Self {
            nodes,
            basis,
            vandermonde,
            weights,
            delta,
            scale,
            snap: SNAP_FACTOR * scale,
        })
    }

    pub fn nodes(&self) -> &NodeSet {
        &self.nodes
    }

    pub fn basis(&self) -> &BasisSpec {
        &self.basis
    }

    pub fn vandermonde(&self) -> &Vandermonde {
        &self.vandermonde
    }

    pub fn weights(&self) -> &WeightSpec {
        &self.weights
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Length dividing distances inside the profile.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn snap_tolerance(&self) -> f64 {
        self.snap
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn dim_space(&self) -> usize {
        self.basis.len()
    }

    /// Raw weights `w(x, x_j)`; fails with `DivergentAtZero` at an algebraic node.
    pub fn raw_weights(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.nodes
            .points()
            .map(|p| self.weights.profile.value(dist(x, p) / self.scale))
            .collect()
    }

    pub fn point_weights(&self, x: &[f64]) -> Result<PointWeights> {
        if self.weights.profile.divergent_at_zero() {
            let (j, r) = self.nodes.nearest(x);
            if r < self.snap {
                return Ok(PointWeights::Snapped(j));
            }
        }
        let mut values = self.raw_weights(x)?;
        let max = values.iter().cloned().fold(0.0, f64::max);
        for v in &mut values {
            *v /= max;
        }
        Ok(PointWeights::Normalized { values, max })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Coefficients {
    Dense(Vec<f64>),
    /// `(node index, value)` pairs in increasing index order.
    Sparse(Vec<(usize, f64)>),
}

/// The basis values `a*(x)` of a quasi-interpolant at one evaluation point.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    pub point: Vec<f64>,
    pub len: usize,
    pub values: Coefficients,
}

impl CoefficientVector {
    pub fn dense(point: &[f64], values: Vec<f64>) -> Self {
        Self {
            point: point.to_vec(),
            len: values.len(),
            values: Coefficients::Dense(values),
        }
    }

    pub fn sparse(point: &[f64], len: usize, mut entries: Vec<(usize, f64)>) -> Self {
        entries.sort_by_key(|e| e.0);
        Self {
            point: point.to_vec(),
            len,
            values: Coefficients::Sparse(entries),
        }
    }

    pub fn cardinal(point: &[f64], len: usize, j: usize) -> Self {
        Self::sparse(point, len, vec![(j, 1.0)])
    }

    pub fn iter(&self) -> Box<dyn Iterator<Item = (usize, f64)> + '_> {
        match &self.values {
            Coefficients::Dense(v) => Box::new(v.iter().cloned().enumerate()),
            Coefficients::Sparse(e) => Box::new(e.iter().cloned()),
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.len];
        for (i, v) in self.iter() {
            out[i] += v;
        }
        out
    }

    pub fn dot(&self, samples: &[f64]) -> f64 {
        self.iter().map(|(i, v)| v * samples[i]).sum()
    }

    pub fn sum(&self) -> f64 {
        self.iter().map(|(_, v)| v).sum()
    }

    /// Lebesgue function value `sum_j |a_j(x)|`.
    pub fn abs_sum(&self) -> f64 {
        self.iter().map(|(_, v)| v.abs()).sum()
    }

    pub fn nonzeros(&self) -> usize {
        self.iter().filter(|(_, v)| *v != 0.0).count()
    }

    /// Entries with magnitude above `tol`; display only.
    pub fn dropped(&self, tol: f64) -> Vec<(usize, f64)> {
        self.iter().filter(|(_, v)| v.abs() > tol).collect()
    }

    /// `sum_j p(x_j) a_j - p(x)` for every basis polynomial, i.e. `P^T a - S(x)`.
    pub fn reproduction_residual(&self, scheme: &Scheme) -> Vec<f64> {
        let v = scheme.vandermonde();
        let mut r = scheme.basis().eval(&self.point);
        for x in r.iter_mut() {
            *x = -*x;
        }
        for (i, a) in self.iter() {
            for (k, rk) in r.iter_mut().enumerate() {
                *rk += v.get(i, k) * a;
            }
        }
        r
    }
}
