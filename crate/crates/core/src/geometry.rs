//! Node sets on axis-aligned boxes and the geometric quantities that drive every
//! approximation scale: separation radius, fill distance and the quasi-uniformity ratio.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Points closer than this fraction of the domain diameter are treated as coincident.
pub const DUPLICATE_TOLERANCE: f64 = 1e-14;

/// Probe intervals per node interval used for the cached fill-distance estimate.
pub const DEFAULT_PROBE_REFINEMENT: usize = 8;

const MAX_PERTURB_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Domain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::InvalidArgument(format!(
                "box corners must be non-empty and of equal length (got {} and {})",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidArgument(format!(
                    "axis {i}: lower bound {lo} must be below upper bound {hi}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn diameter(&self) -> f64 {
        (0..self.dim()).map(|i| self.width(i).powi(2)).sum::<f64>().sqrt()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    /// Tensor grid with `counts[i]` equispaced points per axis (endpoints included), in
    /// row-major order with the first axis varying fastest.
    pub fn tensor_grid(&self, counts: &[usize]) -> Result<Vec<Vec<f64>>> {
        if counts.len() != self.dim() {
            return Err(Error::InvalidArgument(format!(
                "expected {} per-axis counts, got {}",
                self.dim(),
                counts.len()
            )));
        }
        if let Some(axis) = counts.iter().position(|&c| c == 0) {
            return Err(Error::InvalidArgument(format!("zero count on axis {axis}")));
        }
        let axes: Vec<Vec<f64>> = counts
            .iter()
            .enumerate()
            .map(|(i, &c)| linspace(self.lower[i], self.upper[i], c))
            .collect();
        let total: usize = counts.iter().product();
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; counts.len()];
        for _ in 0..total {
            out.push(idx.iter().enumerate().map(|(a, &k)| axes[a][k]).collect());
            for (a, k) in idx.iter_mut().enumerate() {
                *k += 1;
                if *k < counts[a] {
                    break;
                }
                *k = 0;
            }
        }
        Ok(out)
    }
}

/// `n` equispaced values from `lo` to `hi` inclusive; a single point sits at the midpoint.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n)
            .map(|k| {
                if k == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * k as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// A set of distinct nodes in a box together with cached geometry.
#[derive(Debug, Clone)]
pub struct NodeSet {
    domain: Domain,
    coords: Vec<f64>,
    axis_counts: Option<Vec<usize>>,
    separation: f64,
    fill: f64,
}

impl NodeSet {
    /// Validates membership and distinctness and fills the geometry caches.
    pub fn new(domain: Domain, points: Vec<Vec<f64>>) -> Result<Self> {
        Self::build(domain, points, None)
    }

    fn build(domain: Domain, points: Vec<Vec<f64>>, axis_counts: Option<Vec<usize>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("node set is empty".into()));
        }
        let d = domain.dim();
        let mut coords = Vec::with_capacity(points.len() * d);
        for (i, p) in points.iter().enumerate() {
            if p.len() != d || p.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "node {i} has wrong arity or non-finite coordinates"
                )));
            }
            if !domain.contains(p) {
                return Err(Error::InvalidArgument(format!(
                    "node {i} {p:?} lies outside the domain"
                )));
            }
            coords.extend_from_slice(p);
        }
        let mut set = Self {
            domain,
            coords,
            axis_counts,
            separation: f64::INFINITY,
            fill: 0.0,
        };
        if set.len() >= 2 {
            let min_dist = 2.0 * set.compute_separation();
            if min_dist <= DUPLICATE_TOLERANCE * set.domain.diameter() {
                return Err(Error::InvalidArgument("node set contains coincident points".into()));
            }
            set.separation = 0.5 * min_dist;
        }
        set.fill = fill_distance(&set, set.default_probe_points())?;
        Ok(set)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.coords[i * d..(i + 1) * d]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim())
    }

    /// Per-axis counts when the set was generated as a tensor grid (or perturbed from one).
    pub fn axis_counts(&self) -> Option<&[usize]> {
        self.axis_counts.as_deref()
    }

    /// Cached `q_X`; infinite for a single node.
    pub fn separation_radius(&self) -> f64 {
        self.separation
    }

    /// Cached probe-grid estimate of `h_{X,Omega}`.
    pub fn fill_distance(&self) -> f64 {
        self.fill
    }

    pub fn quasi_uniformity(&self) -> f64 {
        self.fill / self.separation
    }

    /// Nodes-per-axis figure used to size probe grids.
    pub fn nodes_per_axis(&self) -> usize {
        match &self.axis_counts {
            Some(c) => *c.iter().max().unwrap(),
            None => (self.len() as f64).powf(1.0 / self.dim() as f64).ceil() as usize,
        }
    }

    pub fn default_probe_points(&self) -> usize {
        DEFAULT_PROBE_REFINEMENT * (self.nodes_per_axis().max(2) - 1) + 1
    }

    /// Node indices sorted by distance to `x` (ties broken by index).
    pub fn indices_by_distance(&self, x: &[f64]) -> Vec<usize> {
        let mut idx: Vec<(f64, usize)> = self.points().map(|p| dist2(p, x)).zip(0..).collect();
        idx.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        idx.into_iter().map(|(_, i)| i).collect()
    }

    pub fn nearest(&self, x: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (i, p) in self.points().enumerate() {
            let d2 = dist2(p, x);
            if d2 < best.1 {
                best = (i, d2);
            }
        }
        (best.0, best.1.sqrt())
    }

    fn compute_separation(&self) -> f64 {
        let n = self.len();
        (0..n)
            .into_par_iter()
            .map(|i| {
                let pi = self.point(i);
                (i + 1..n)
                    .map(|j| dist2(pi, self.point(j)))
                    .fold(f64::INFINITY, f64::min)
            })
            .reduce(|| f64::INFINITY, f64::min)
            .sqrt()
            * 0.5
    }

    /// Writes `x0,...,x{d-1}` followed by one row per node.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record((0..self.dim()).map(|i| format!("x{i}")))?;
        for p in self.points() {
            w.write_record(p.iter().map(|v| format!("{v:.17e}")))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(domain: Domain, input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers()?.clone();
        let expected: Vec<String> = (0..domain.dim()).map(|i| format!("x{i}")).collect();
        if header.iter().map(str::trim).ne(expected.iter().map(String::as_str)) {
            return Err(Error::InvalidArgument(format!(
                "node CSV header must be {}",
                expected.join(",")
            )));
        }
        let mut points = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let p = rec
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::InvalidArgument(format!("row {}: {e}", line + 2)))?;
            points.push(p);
        }
        Self::new(domain, points)
    }
}

#[inline]
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}

pub fn generate_grid(domain: &Domain, counts_per_axis: &[usize]) -> Result<NodeSet> {
    let points = domain.tensor_grid(counts_per_axis)?;
    NodeSet::build(domain.clone(), points, Some(counts_per_axis.to_vec()))
}

/// Shifts every interior coordinate of a grid set by uniform noise in
/// `±fraction * spacing`; boundary coordinates stay fixed so nodes remain in the box.
pub fn perturb(nodes: &NodeSet, fraction: f64, seed: u64) -> Result<NodeSet> {
    if !(0.0..0.5).contains(&fraction) {
        return Err(Error::InvalidArgument(format!(
            "perturbation fraction {fraction} outside [0, 0.5)"
        )));
    }
    let counts = nodes
        .axis_counts()
        .ok_or_else(|| Error::InvalidArgument("perturbation requires a grid node set".into()))?
        .to_vec();
    let domain = nodes.domain().clone();
    if fraction == 0.0 {
        return Ok(nodes.clone());
    }
    let spacing: Vec<f64> = counts
        .iter()
        .enumerate()
        .map(|(a, &c)| if c > 1 { domain.width(a) / (c - 1) as f64 } else { 0.0 })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_PERTURB_ATTEMPTS {
        let points: Vec<Vec<f64>> = nodes
            .points()
            .map(|p| {
                p.iter()
                    .enumerate()
                    .map(|(a, &v)| {
                        let on_boundary = v <= domain.lower()[a] || v >= domain.upper()[a];
                        if on_boundary || spacing[a] == 0.0 {
                            v
                        } else {
                            let s = fraction * spacing[a];
                            (v + rng.random_range(-s..=s)).clamp(domain.lower()[a], domain.upper()[a])
                        }
                    })
                    .collect()
            })
            .collect();
        match NodeSet::build(domain.clone(), points, Some(counts.clone())) {
            Ok(set) => return Ok(set),
            Err(Error::InvalidArgument(msg)) if msg.contains("coincident") => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::PerturbationFailed(MAX_PERTURB_ATTEMPTS))
}

/// Exact `q_X = min_{i != j} |x_i - x_j| / 2`.
pub fn separation_radius(nodes: &NodeSet) -> Result<f64> {
    if nodes.len() < 2 {
        return Err(Error::InvalidArgument(
            "separation radius needs at least two nodes".into(),
        ));
    }
    Ok(nodes.separation_radius())
}

/// Probe-grid estimate of the fill distance: the largest nearest-node distance over a
/// tensor grid with `probe_points` points per axis (box corners included).
pub fn fill_distance(nodes: &NodeSet, probe_points: usize) -> Result<f64> {
    if probe_points < nodes.nodes_per_axis().max(2) {
        return Err(Error::InvalidArgument(format!(
            "probe resolution {probe_points} is below the node resolution {}",
            nodes.nodes_per_axis()
        )));
    }
    let domain = nodes.domain();
    let counts = vec![probe_points; domain.dim()];
    let probes = domain.tensor_grid(&counts)?;
    Ok(probes.par_iter().map(|x| nodes.nearest(x).1).reduce(|| 0.0, f64::max))
}

pub fn quasi_uniformity(nodes: &NodeSet) -> f64 {
    nodes.quasi_uniformity()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeltaMode {
    FillDistance,
    SeparationRadius,
}

/// `delta = factor * h` or `delta = factor * q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaRule {
    pub mode: DeltaMode,
    pub factor: f64,
}

impl DeltaRule {
    pub fn new(mode: DeltaMode, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "delta factor must be positive, got {factor}"
            )));
        }
        Ok(Self { mode, factor })
    }

    pub fn fill(factor: f64) -> Result<Self> {
        Self::new(DeltaMode::FillDistance, factor)
    }
}

pub fn scale_delta(rule: &DeltaRule, nodes: &NodeSet) -> f64 {
    match rule.mode {
        DeltaMode::FillDistance => rule.factor * nodes.fill_distance(),
        DeltaMode::SeparationRadius => rule.factor * nodes.separation_radius(),
    }
}
