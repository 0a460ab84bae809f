//! Lebesgue functions, sup-norm errors, convergence sweeps and reproduction audits.
//!
//! Scans split the evaluation grid into fixed row-major chunks (one grid row in 2-D).
//! Every chunk gets its own evaluator, so LP warm starts follow spatial neighbors, and
//! results are reassembled in grid order regardless of thread count.

mod target;
mod theory;

pub use target::{franke, Target};
pub use theory::{
    hurwitz_zeta, lebesgue_bound, stability_bound, theory_constants, Budgets, FastDecay, StabilityBound,
    TheoryConstants, SERIES_TOLERANCE,
};

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::basis::{BasisSpec, Family};
use crate::engine::{Approximant, Engine};
use crate::error::{Error, Result};
use crate::geometry::{dist, generate_grid, perturb, scale_delta, DeltaRule, Domain, NodeSet};
use crate::scheme::{CoefficientVector, Scheme};
use crate::weights::WeightSpec;

pub const DEFAULT_GRID_1D: usize = 2001;
pub const DEFAULT_GRID_PER_AXIS: usize = 101;
const CHUNK_1D: usize = 64;

/// Errors whose maximum stays below this are reported as a noise floor without a slope.
pub const NOISE_FLOOR: f64 = 1e-11;

#[derive(Debug, Clone)]
pub struct EvalGrid {
    points: Vec<Vec<f64>>,
    chunk: usize,
}

impl EvalGrid {
    /// Tensor grid with `per_axis[i]` points along axis `i`, first axis fastest.
    pub fn new(domain: &Domain, per_axis: &[usize]) -> Result<Self> {
        let points = domain.tensor_grid(per_axis)?;
        let chunk = if domain.dim() == 1 { CHUNK_1D } else { per_axis[0] };
        Ok(Self { points, chunk })
    }

    /// 2001 points in 1-D, 101 per axis otherwise.
    pub fn default_for(domain: &Domain) -> Result<Self> {
        let n = if domain.dim() == 1 {
            DEFAULT_GRID_1D
        } else {
            DEFAULT_GRID_PER_AXIS
        };
        Self::new(domain, &vec![n; domain.dim()])
    }

    pub fn from_points(points: Vec<Vec<f64>>, chunk: usize) -> Self {
        Self {
            points,
            chunk: chunk.max(1),
        }
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn chunk(&self) -> usize {
        self.chunk
    }
}

/// Applies `f` to the coefficient vector at every grid point, in grid order.
pub fn scan<T, F>(approx: &Approximant, grid: &EvalGrid, f: F) -> Vec<Result<T>>
where
    T: Send,
    F: Fn(&CoefficientVector) -> T + Sync,
{
    grid.points
        .par_chunks(grid.chunk)
        .map(|chunk| {
            let mut ev = approx.evaluator();
            chunk
                .iter()
                .map(|x| ev.coefficients(x).map(|c| f(&c)))
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Unwraps a scan; any failed point makes the whole scan non-certifiable.
pub fn certify<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    let total = results.len();
    let failed = results.iter().filter(|r| r.is_err()).count();
    if failed == 0 {
        return Ok(results.into_iter().map(|r| r.unwrap()).collect());
    }
    let first = results.into_iter().find_map(|r| r.err()).unwrap();
    Err(Error::ScanFailed {
        failed,
        total,
        first: Box::new(first),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LebesgueScan {
    /// `sum_j |a_j(x)|` per grid point; `NaN` where the solver failed.
    pub values: Vec<f64>,
    /// Maximum over the points that succeeded.
    pub constant: f64,
    /// Failed points as `(grid index, error)`.
    pub failures: Vec<(usize, Error)>,
}

impl LebesgueScan {
    pub fn certified(&self) -> Result<f64> {
        match self.failures.first() {
            None => Ok(self.constant),
            Some((_, e)) => Err(Error::ScanFailed {
                failed: self.failures.len(),
                total: self.values.len(),
                first: Box::new(e.clone()),
            }),
        }
    }
}

pub fn lebesgue_scan(approx: &Approximant, grid: &EvalGrid) -> LebesgueScan {
    let mut values = Vec::with_capacity(grid.len());
    let mut failures = Vec::new();
    for (i, r) in scan(approx, grid, |c| c.abs_sum()).into_iter().enumerate() {
        match r {
            Ok(v) => values.push(v),
            Err(e) => {
                values.push(f64::NAN);
                failures.push((i, e));
            }
        }
    }
    let constant = values.iter().cloned().filter(|v| !v.is_nan()).fold(0.0, f64::max);
    LebesgueScan {
        values,
        constant,
        failures,
    }
}

/// `f(x_j)` for every node.
pub fn samples(nodes: &NodeSet, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    nodes.points().map(f).collect()
}

/// `max |f(x) - sum_j f(x_j) a_j(x)|` over the grid.
pub fn sup_error(
    approx: &Approximant,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    samples: &[f64],
    grid: &EvalGrid,
) -> Result<f64> {
    if samples.len() != approx.scheme().len() {
        return Err(Error::InvalidArgument(format!(
            "{} samples for {} nodes",
            samples.len(),
            approx.scheme().len()
        )));
    }
    let errs = certify(scan(approx, grid, |c| (f(&c.point) - c.dot(samples)).abs()))?;
    Ok(errs.into_iter().fold(0.0, f64::max))
}

/// Largest `|sum_j q(x_j) a_j(x) - q(x)|` over `trials` random `q` in the scheme's
/// polynomial space (coefficients uniform in `[-1, 1]`) and all grid points.
pub fn reproduction_residual(approx: &Approximant, grid: &EvalGrid, trials: usize, seed: u64) -> Result<f64> {
    let scheme = approx.scheme();
    let q = scheme.dim_space();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let polys: Vec<Vec<f64>> = (0..trials)
        .map(|_| (0..q).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect();
    let node_values: Vec<Vec<f64>> = polys
        .iter()
        .map(|c| (0..scheme.len()).map(|j| scheme.vandermonde().row_dot(j, c)).collect())
        .collect();
    let basis = scheme.basis();
    let worst = certify(scan(approx, grid, |c| {
        let px = basis.eval(&c.point);
        polys
            .iter()
            .zip(&node_values)
            .map(|(coef, vals)| {
                let exact: f64 = coef.iter().zip(&px).map(|(a, b)| a * b).sum();
                (c.dot(vals) - exact).abs()
            })
            .fold(0.0, f64::max)
    }))?;
    Ok(worst.into_iter().fold(0.0, f64::max))
}

/// `max_x sum_j (|x - x_j| / q_X)^l |a_j(x)|`.
pub fn moment_bound(approx: &Approximant, grid: &EvalGrid, ell: u32) -> Result<f64> {
    let nodes = approx.scheme().nodes();
    let q = nodes.separation_radius();
    let v = certify(scan(approx, grid, |c| {
        c.iter()
            .map(|(j, a)| (dist(&c.point, nodes.point(j)) / q).powi(ell as i32) * a.abs())
            .sum::<f64>()
    }))?;
    Ok(v.into_iter().fold(0.0, f64::max))
}

/// A refinement sweep: the same scheme on growing equispaced (optionally perturbed) grids.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub domain: Domain,
    /// Nodes per axis at each level.
    pub levels: Vec<usize>,
    /// Perturbation `(fraction, seed)` applied to each node grid.
    pub perturbation: Option<(f64, u64)>,
    pub family: Family,
    pub degree: usize,
    pub weights: WeightSpec,
    pub delta: DeltaRule,
    pub engine: Engine,
    /// Evaluation points per axis; `None` uses [`EvalGrid::default_for`].
    pub grid: Option<usize>,
}

impl Sweep {
    pub fn nodes(&self, per_axis: usize) -> Result<NodeSet> {
        let grid = generate_grid(&self.domain, &vec![per_axis; self.domain.dim()])?;
        match self.perturbation {
            Some((fraction, seed)) if fraction > 0.0 => perturb(&grid, fraction, seed),
            _ => Ok(grid),
        }
    }

    pub fn approximant(&self, nodes: NodeSet) -> Result<Approximant> {
        let delta = scale_delta(&self.delta, &nodes);
        let basis = BasisSpec::new(self.family, self.degree, &self.domain);
        Approximant::new(Scheme::new(nodes, basis, self.weights, delta)?, self.engine)
    }

    pub fn eval_grid(&self) -> Result<EvalGrid> {
        match self.grid {
            Some(n) => EvalGrid::new(&self.domain, &vec![n; self.domain.dim()]),
            None => EvalGrid::default_for(&self.domain),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub h: f64,
    pub q: f64,
    pub delta: f64,
    pub sup_error: Option<f64>,
    pub lebesgue: f64,
    /// Slope against the previous row.
    pub slope_running: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of `log error` against `log h`.
    pub slope: Option<f64>,
    /// Slope between the first and last rows.
    pub endpoint_slope: Option<f64>,
    pub target_order: usize,
    /// Written as `# key=value` lines ahead of the table.
    pub metadata: Vec<(String, String)>,
}

/// Least-squares slope of `ln y` against `ln x`; `None` for fewer than two usable points.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 || pts.len() != x.len() {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

/// Runs every level of `sweep`. With a target the sup error is measured alongside the
/// Lebesgue constant; slopes are `None` when all errors sit below [`NOISE_FLOOR`].
pub fn convergence_study(sweep: &Sweep, target: Option<&Target>) -> Result<ConvergenceReport> {
    if let Some(t) = target {
        t.validate(sweep.domain.dim())?;
    }
    let grid = sweep.eval_grid()?;
    let mut rows: Vec<SweepRow> = Vec::with_capacity(sweep.levels.len());
    for &per_axis in &sweep.levels {
        let nodes = sweep.nodes(per_axis)?;
        let (n, h, q) = (nodes.len(), nodes.fill_distance(), nodes.separation_radius());
        let approx = sweep.approximant(nodes)?;
        let delta = approx.scheme().delta();
        let (sup_error, lebesgue) = match target {
            Some(t) => {
                let s = samples(approx.scheme().nodes(), |x| t.eval(x));
                let pairs = certify(scan(&approx, &grid, |c| {
                    ((t.eval(&c.point) - c.dot(&s)).abs(), c.abs_sum())
                }))?;
                let err = pairs.iter().map(|p| p.0).fold(0.0, f64::max);
                let leb = pairs.iter().map(|p| p.1).fold(0.0, f64::max);
                (Some(err), leb)
            }
            None => (None, lebesgue_scan(&approx, &grid).certified()?),
        };
        rows.push(SweepRow {
            n,
            h,
            q,
            delta,
            sup_error,
            lebesgue,
            slope_running: None,
        });
    }
    let errors: Vec<f64> = rows.iter().filter_map(|r| r.sup_error).collect();
    let resolved = errors.len() == rows.len() && errors.iter().any(|e| *e > NOISE_FLOOR);
    let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let (mut slope, mut endpoint_slope) = (None, None);
    if resolved {
        for i in 1..rows.len() {
            rows[i].slope_running = fit_slope(&hs[i - 1..=i], &errors[i - 1..=i]);
        }
        slope = fit_slope(&hs, &errors);
        if rows.len() >= 2 {
            let last = rows.len() - 1;
            endpoint_slope = fit_slope(&[hs[0], hs[last]], &[errors[0], errors[last]]);
        }
    }
    let metadata = vec![
        ("engine".into(), sweep.engine.to_string()),
        ("degree".into(), sweep.degree.to_string()),
        ("family".into(), sweep.family.to_string()),
        ("weight".into(), sweep.weights.to_string()),
        ("delta_factor".into(), sweep.delta.factor.to_string()),
        (
            "target".into(),
            target.map(|t| t.to_string()).unwrap_or_else(|| "none".into()),
        ),
        ("eval_points".into(), grid.len().to_string()),
        ("slope".into(), fmt_opt(slope)),
        ("endpoint_slope".into(), fmt_opt(endpoint_slope)),
        ("target_order".into(), (sweep.degree + 1).to_string()),
    ];
    Ok(ConvergenceReport {
        rows,
        slope,
        endpoint_slope,
        target_order: sweep.degree + 1,
        metadata,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.6}")).unwrap_or_else(|| "undefined".into())
}

fn fmt_num(v: f64) -> String {
    format!("{v:.10e}")
}

impl ConvergenceReport {
    pub const HEADER: [&'static str; 7] = ["N", "h", "q", "delta", "sup_error", "lebesgue", "slope_running"];

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for (k, v) in &self.metadata {
            writeln!(out, "# {k}={v}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.n.to_string(),
                fmt_num(r.h),
                fmt_num(r.q),
                fmt_num(r.delta),
                r.sup_error.map(fmt_num).unwrap_or_default(),
                fmt_num(r.lebesgue),
                r.slope_running.map(|s| format!("{s:.6}")).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::Strategy;
    use approx::assert_relative_eq;

    fn sweep_1d(engine: Engine, degree: usize, levels: Vec<usize>) -> Sweep {
        Sweep {
            domain: Domain::cube(1, 0.0, 1.0).unwrap(),
            levels,
            perturbation: None,
            family: Family::Chebyshev,
            degree,
            weights: WeightSpec::gaussian(1.0).unwrap(),
            delta: DeltaRule::fill(5.0).unwrap(),
            engine,
            grid: Some(201),
        }
    }

    #[test]
    fn slope_fit() {
        let h = [0.1, 0.05, 0.025];
        let e: Vec<f64> = h.iter().map(|h: &f64| 3.0 * h.powi(2)).collect();
        assert_relative_eq!(fit_slope(&h, &e).unwrap(), 2.0, epsilon = 1e-12);
        assert_eq!(fit_slope(&[0.1], &[1.0]), None);
        assert_eq!(fit_slope(&[0.1, 0.05], &[0.0, 1.0]), None);
    }

    #[test]
    fn shepard_lebesgue_is_one() {
        let s = sweep_1d(Engine::Shepard, 0, vec![9]);
        let a = s.approximant(s.nodes(9).unwrap()).unwrap();
        let scan = lebesgue_scan(&a, &s.eval_grid().unwrap());
        assert!(scan.failures.is_empty());
        assert!((scan.constant - 1.0).abs() <= 4.0 * f64::EPSILON);
    }

    #[test]
    fn scan_is_thread_count_independent() {
        let s = sweep_1d(Engine::OneNorm(Strategy::Warm), 2, vec![17]);
        let a = s.approximant(s.nodes(17).unwrap()).unwrap();
        let g = s.eval_grid().unwrap();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a1 = one.install(|| lebesgue_scan(&a, &g));
        let a4 = four.install(|| lebesgue_scan(&a, &g));
        assert_eq!(a1, a4);
    }

    #[test]
    fn polynomial_target_hits_noise_floor() {
        for engine in [Engine::Mls, Engine::OneNorm(Strategy::Cold)] {
            let s = sweep_1d(engine, 2, vec![9, 17, 33]);
            let t: Target = "polynomial:0.5,-1,2".parse().unwrap();
            let r = convergence_study(&s, Some(&t)).unwrap();
            assert!(r.rows.iter().all(|row| row.sup_error.unwrap() < 1e-10));
            assert_eq!(r.slope, None);
            assert!(r.metadata.contains(&("slope".to_string(), "undefined".to_string())));
        }
    }

    #[test]
    fn sin_convergence_order() {
        let s = sweep_1d(Engine::Mls, 1, vec![9, 17, 33, 65]);
        let r = convergence_study(&s, Some(&Target::SinPi)).unwrap();
        assert!(r.slope.unwrap() > 1.6, "{:?}", r.slope);
        assert!(r.rows[1].slope_running.is_some());
        assert_eq!(r.rows[0].slope_running, None);
    }

    #[test]
    fn report_csv_layout() {
        let s = sweep_1d(Engine::Mls, 1, vec![5, 9, 17]);
        let r = convergence_study(&s, Some(&Target::SinPi)).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# engine=mls"));
        let header = lines.iter().find(|l| !l.starts_with('#')).unwrap();
        assert_eq!(*header, "N,h,q,delta,sup_error,lebesgue,slope_running");
        assert_eq!(lines.iter().filter(|l| !l.starts_with('#')).count(), 4);
    }

    #[test]
    fn reproduction_audits() {
        let dom = Domain::cube(2, 0.0, 1.0).unwrap();
        let nodes = perturb(&generate_grid(&dom, &[7, 7]).unwrap(), 0.2, 3).unwrap();
        let delta = 5.0 * nodes.fill_distance();
        let scheme = Scheme::new(
            nodes,
            BasisSpec::chebyshev(2, &dom),
            WeightSpec::gaussian(1.0).unwrap(),
            delta,
        )
        .unwrap();
        let grid = EvalGrid::new(&dom, &[9, 9]).unwrap();
        for engine in [Engine::Mls, Engine::OneNorm(Strategy::Warm)] {
            let a = Approximant::new(scheme.clone(), engine).unwrap();
            assert!(reproduction_residual(&a, &grid, 5, 1).unwrap() < 1e-8);
            let m0 = moment_bound(&a, &grid, 0).unwrap();
            assert_relative_eq!(m0, lebesgue_scan(&a, &grid).constant, max_relative = 1e-14);
        }
    }

    #[test]
    fn failed_points_are_flagged() {
        let results: Vec<Result<f64>> = vec![Ok(1.0), Err(Error::Infeasible), Ok(2.0)];
        match certify(results) {
            Err(Error::ScanFailed { failed, total, first }) => {
                assert_eq!((failed, total), (1, 3));
                assert_eq!(*first, Error::Infeasible);
            }
            other => panic!("{other:?}"),
        }
    }
}
