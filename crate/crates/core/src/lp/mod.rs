//! Weighted 1-norm quasi-interpolant: minimize `sum_i |a_i| / w(x, x_i)` subject to
//! `P^T a = p(x)`, solved as the standard-form program in `(a+, a-) >= 0` with
//! constraint matrix `(P^T, -P^T)`.

mod simplex;

pub use simplex::{
    simplex_solve, warm_start_solve, DenseProblem, LpSolution, LpState, SimplexOptions, StandardForm, Start, Status,
};

use std::fmt;
use std::str::FromStr;

use crate::basis::Vandermonde;
use crate::error::{Error, Result};
use crate::scheme::{CoefficientVector, PointWeights, Scheme};

/// One evaluation point's program. Columns `0..N` are `a+`, `N..2N` are `a-`.
#[derive(Debug, Clone)]
pub struct LpProblem<'a> {
    vandermonde: &'a Vandermonde,
    costs: Vec<f64>,
    rhs: Vec<f64>,
    /// Nodes by increasing cost, ties by index.
    order: Vec<usize>,
}

impl<'a> LpProblem<'a> {
    /// `costs[i]` multiplies both `a+_i` and `a-_i`.
    pub fn new(vandermonde: &'a Vandermonde, costs: Vec<f64>, rhs: Vec<f64>) -> Result<Self> {
        if costs.len() != vandermonde.nrows() || rhs.len() != vandermonde.ncols() {
            return Err(Error::InvalidArgument(format!(
                "{} costs and {} right-hand sides for a {}x{} Vandermonde matrix",
                costs.len(),
                rhs.len(),
                vandermonde.nrows(),
                vandermonde.ncols()
            )));
        }
        if let Some(c) = costs.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "objective weight {c} is not positive and finite"
            )));
        }
        let mut order: Vec<usize> = (0..costs.len()).collect();
        order.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(a.cmp(&b)));
        Ok(Self {
            vandermonde,
            costs,
            rhs,
            order,
        })
    }

    pub fn nodes(&self) -> usize {
        self.costs.len()
    }

    /// Objective weight `1 / w(x, x_i)` of node `i`.
    pub fn node_cost(&self, i: usize) -> f64 {
        self.costs[i]
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn vandermonde(&self) -> &Vandermonde {
        self.vandermonde
    }

    /// Entry `(k, j)` of `A = (P^T, -P^T)`.
    pub fn a(&self, k: usize, j: usize) -> f64 {
        let n = self.nodes();
        if j < n {
            self.vandermonde.get(j, k)
        } else {
            -self.vandermonde.get(j - n, k)
        }
    }

    /// Objective of an arbitrary coefficient vector, `sum_i |a_i| costs_i`.
    pub fn objective_of(&self, a: &[f64]) -> f64 {
        a.iter().zip(&self.costs).map(|(a, c)| a.abs() * c).sum()
    }

    /// Up to `Q` nodes, taken by increasing cost among `allowed`, whose Vandermonde rows
    /// are linearly independent.
    fn independent_nodes(&self, allowed: impl Fn(usize) -> bool) -> Vec<usize> {
        let q = self.vandermonde.ncols();
        let mut ortho: Vec<Vec<f64>> = Vec::with_capacity(q);
        let mut chosen = Vec::with_capacity(q);
        let mut row = vec![0.0; q];
        for &i in &self.order {
            if chosen.len() == q {
                break;
            }
            if !allowed(i) {
                continue;
            }
            self.vandermonde.row_into(i, &mut row);
            let norm0 = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            for _ in 0..2 {
                for e in &ortho {
                    let c: f64 = e.iter().zip(&row).map(|(a, b)| a * b).sum();
                    for (r, a) in row.iter_mut().zip(e) {
                        *r -= c * a;
                    }
                }
            }
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 1e-9 * norm0.max(f64::MIN_POSITIVE) {
                ortho.push(row.iter().map(|v| v / norm).collect());
                chosen.push(i);
            }
        }
        chosen
    }
}

impl StandardForm for LpProblem<'_> {
    fn rows(&self) -> usize {
        self.vandermonde.ncols()
    }

    fn cols(&self) -> usize {
        2 * self.nodes()
    }

    fn cost(&self, j: usize) -> f64 {
        self.costs[j % self.nodes()]
    }

    fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    fn column_into(&self, j: usize, out: &mut [f64]) {
        let n = self.nodes();
        let (i, s) = if j < n { (j, 1.0) } else { (j - n, -1.0) };
        for (k, o) in out.iter_mut().enumerate() {
            *o = s * self.vandermonde.get(i, k);
        }
    }

    fn column_dot(&self, j: usize, y: &[f64]) -> f64 {
        let n = self.nodes();
        if j < n {
            self.vandermonde.row_dot(j, y)
        } else {
            -self.vandermonde.row_dot(j - n, y)
        }
    }

    /// The cheapest independent nodes, each with the sign of its coefficient in the square
    /// solve, form a feasible basis whenever both signed columns of those nodes are active.
    fn crash_basis(&self, active: Option<&[bool]>) -> Option<Vec<usize>> {
        let n = self.nodes();
        let q = self.rows();
        let both = |i: usize| active.is_none_or(|a| a[i] && a[i + n]);
        let nodes = self.independent_nodes(both);
        if nodes.len() < q {
            return None;
        }
        let m = nalgebra::DMatrix::from_fn(q, q, |k, c| self.vandermonde.get(nodes[c], k));
        let a = m.lu().solve(&nalgebra::DVector::from_column_slice(&self.rhs))?;
        Some(
            nodes
                .iter()
                .zip(a.iter())
                .map(|(&i, &v)| if v < 0.0 { i + n } else { i })
                .collect(),
        )
    }
}

/// Program at `x`: objective weights `1 / w(x, x_i)` and right-hand side `p(x)`.
pub fn build_lp<'a>(scheme: &'a Scheme, x: &[f64]) -> Result<LpProblem<'a>> {
    let w = scheme.raw_weights(x)?;
    LpProblem::new(
        scheme.vandermonde(),
        w.iter().map(|w| 1.0 / w).collect(),
        scheme.basis().eval(x),
    )
}

/// Column generation over the signed columns of `problem`. Each round solves the program
/// restricted to the active columns, prices every excluded column against its duals and
/// activates the most negative one (lowest index on ties).
pub fn column_generation_solve(
    problem: &LpProblem<'_>,
    initial_subset: &[usize],
    opts: &SimplexOptions,
) -> Result<LpSolution> {
    let total = problem.cols();
    let q = problem.rows();
    let mut active = vec![false; total];
    for &j in initial_subset {
        if j >= total {
            return Err(Error::InvalidArgument(format!("column {j} out of range 0..{total}")));
        }
        active[j] = true;
    }
    let mut solver = simplex::Solver::new(problem, opts, Some(active.clone()));
    let mut start = solver.cold();
    if matches!(start, Err(Error::Infeasible) | Err(Error::SingularBasis)) {
        let n = problem.nodes();
        for i in problem.independent_nodes(|_| true) {
            active[i] = true;
            active[i + n] = true;
        }
        if active.iter().filter(|a| **a).count() < 2 * q {
            active.iter_mut().for_each(|a| *a = true);
        }
        solver = simplex::Solver::new(problem, opts, Some(active.clone()));
        start = solver.cold();
        if matches!(start, Err(Error::Infeasible) | Err(Error::SingularBasis)) {
            solver = simplex::Solver::new(problem, opts, None);
            start = solver.cold();
        }
    }
    let start = start?;
    let mut rounds = 1;
    let mut generated = Vec::new();
    loop {
        let y = solver.duals_phase_two();
        let mut best: Option<(usize, f64)> = None;
        for j in 0..total {
            if solver.is_active(j) {
                continue;
            }
            let c = problem.cost(j);
            let d = c - problem.column_dot(j, &y);
            if d < -opts.eps_opt * (1.0 + c) && best.is_none_or(|(_, b)| d < b) {
                best = Some((j, d));
            }
        }
        let Some((j, _)) = best else {
            break;
        };
        solver.activate(j);
        generated.push(j);
        rounds += 1;
        solver.resume()?;
    }
    if solver.has_artificials() {
        solver.complete_basis()?;
    }
    let mut sol = solver.finish(start)?;
    sol.rounds = rounds;
    sol.generated = generated;
    Ok(sol)
}

/// The default column-generation seed: both signed columns of the `Q` cheapest nodes.
pub fn nearest_subset(problem: &LpProblem<'_>) -> Vec<usize> {
    let n = problem.nodes();
    let mut s: Vec<usize> = problem
        .order
        .iter()
        .take(problem.rows())
        .flat_map(|&i| [i, i + n])
        .collect();
    s.sort_unstable();
    s
}

/// Merges `a+ - a-` into per-node coefficients.
pub fn node_coefficients(solution: &LpSolution, nodes: usize) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = Vec::new();
    for &(j, v) in &solution.primal {
        let (i, s) = if j < nodes { (j, v) } else { (j - nodes, -v) };
        match out.iter_mut().find(|e| e.0 == i) {
            Some(e) => e.1 += s,
            None => out.push((i, s)),
        }
    }
    out.retain(|e| e.1 != 0.0);
    out.sort_by_key(|e| e.0);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Cold,
    Warm,
    ColumnGeneration,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Cold => "cold",
            Strategy::Warm => "warm",
            Strategy::ColumnGeneration => "colgen",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cold" => Ok(Strategy::Cold),
            "warm" => Ok(Strategy::Warm),
            "colgen" | "column-generation" => Ok(Strategy::ColumnGeneration),
            other => Err(Error::InvalidArgument(format!("unknown LP strategy '{other}'"))),
        }
    }
}

/// Per-worker LP evaluator; holds the warm-start state between points.
#[derive(Debug, Clone)]
pub struct LpEvaluator<'a> {
    scheme: &'a Scheme,
    strategy: Strategy,
    options: SimplexOptions,
    state: Option<LpState>,
    last: Option<LpSolution>,
    pivots: usize,
}

impl<'a> LpEvaluator<'a> {
    pub fn new(scheme: &'a Scheme, strategy: Strategy) -> Self {
        Self::with_options(scheme, strategy, SimplexOptions::default())
    }

    pub fn with_options(scheme: &'a Scheme, strategy: Strategy, options: SimplexOptions) -> Self {
        Self {
            scheme,
            strategy,
            options,
            state: None,
            last: None,
            pivots: 0,
        }
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn scheme(&self) -> &'a Scheme {
        self.scheme
    }

    /// Full solution of the most recent non-snapped evaluation.
    pub fn last_solution(&self) -> Option<&LpSolution> {
        self.last.as_ref()
    }

    /// Pivots over every solve made by this evaluator.
    pub fn total_pivots(&self) -> usize {
        self.pivots
    }

    pub fn solve(&mut self, x: &[f64]) -> Result<LpSolution> {
        let problem = build_lp(self.scheme, x)?;
        let mut sol = match (self.strategy, &self.state) {
            (Strategy::Cold, _) => simplex_solve(
                &problem,
                &SimplexOptions {
                    crash: false,
                    ..self.options.clone()
                },
            )?,
            (Strategy::Warm, None) => simplex_solve(&problem, &self.options)?,
            (Strategy::Warm, Some(state)) => warm_start_solve(&problem, state, &self.options)?,
            (Strategy::ColumnGeneration, _) => {
                column_generation_solve(&problem, &nearest_subset(&problem), &self.options)?
            }
        };
        sol.state.point = Some(x.to_vec());
        self.pivots += sol.iterations;
        if self.strategy == Strategy::Warm {
            self.state = Some(sol.state.clone());
        }
        Ok(sol)
    }

    /// Sparse coefficient vector with at most `Q` nonzeros.
    pub fn coefficients(&mut self, x: &[f64]) -> Result<CoefficientVector> {
        let n = self.scheme.len();
        if let PointWeights::Snapped(j) = self.scheme.point_weights(x)? {
            return Ok(CoefficientVector::cardinal(x, n, j));
        }
        let sol = self.solve(x)?;
        let c = CoefficientVector::sparse(x, n, node_coefficients(&sol, n));
        self.last = Some(sol);
        Ok(c)
    }
}

/// One-shot evaluation with the given strategy.
pub fn coefficients(scheme: &Scheme, x: &[f64], strategy: Strategy) -> Result<CoefficientVector> {
    LpEvaluator::new(scheme, strategy).coefficients(x)
}
