//! Revised simplex on `min c^T x, A x = b, x >= 0` with an explicit basis inverse.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Column access for a standard-form program.
pub trait StandardForm {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn cost(&self, j: usize) -> f64;
    fn rhs(&self) -> &[f64];
    fn column_into(&self, j: usize, out: &mut [f64]);

    fn column_dot(&self, j: usize, y: &[f64]) -> f64 {
        let mut col = vec![0.0; self.rows()];
        self.column_into(j, &mut col);
        col.iter().zip(y).map(|(a, b)| a * b).sum()
    }

    /// A primal feasible starting basis restricted to `active` columns, if one is cheap
    /// to construct. Returning `None` selects the artificial-variable first phase.
    fn crash_basis(&self, _active: Option<&[bool]>) -> Option<Vec<usize>> {
        None
    }
}

/// Explicit `A`, `b`, `c`.
#[derive(Debug, Clone)]
pub struct DenseProblem {
    pub a: DMatrix<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl DenseProblem {
    pub fn new(a: DMatrix<f64>, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        if a.nrows() != b.len() || a.ncols() != c.len() {
            return Err(Error::InvalidArgument(format!(
                "shape mismatch: A is {}x{}, b has {}, c has {}",
                a.nrows(),
                a.ncols(),
                b.len(),
                c.len()
            )));
        }
        Ok(Self { a, b, c })
    }
}

impl StandardForm for DenseProblem {
    fn rows(&self) -> usize {
        self.a.nrows()
    }

    fn cols(&self) -> usize {
        self.a.ncols()
    }

    fn cost(&self, j: usize) -> f64 {
        self.c[j]
    }

    fn rhs(&self) -> &[f64] {
        &self.b
    }

    fn column_into(&self, j: usize, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.a[(i, j)];
        }
    }

    fn column_dot(&self, j: usize, y: &[f64]) -> f64 {
        (0..self.a.nrows()).map(|i| self.a[(i, j)] * y[i]).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexOptions {
    pub eps_feas: f64,
    pub eps_opt: f64,
    /// Refactorize the basis inverse after this many product-form updates.
    pub refactor_every: usize,
    /// Degenerate pivots tolerated before switching to Bland's rule; `None` means `5 n`.
    pub bland_after: Option<usize>,
    /// `None` means `50 (m + n) + 1000`.
    pub max_iterations: Option<usize>,
    /// Try a feasible crash basis before the artificial first phase.
    pub crash: bool,
    pub trace: bool,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            eps_feas: 1e-10,
            eps_opt: 1e-10,
            refactor_every: 50,
            bland_after: None,
            max_iterations: None,
            crash: true,
            trace: false,
        }
    }
}

/// How the returned basis was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Start {
    /// Artificial first phase.
    TwoPhase,
    /// Feasible crash basis, second phase only.
    Crash,
    /// Previous basis was primal feasible.
    WarmPrimal,
    /// Previous basis was dual feasible; dual simplex restored primal feasibility.
    WarmDual,
    /// Previous basis was neither; solved from scratch.
    WarmFallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
}

/// Basis and its inverse, reusable for another program with the same `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpState {
    pub basis: Vec<usize>,
    pub binv: DMatrix<f64>,
    pub point: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    /// Nonzero basic variables as `(column, value)`, by increasing column.
    pub primal: Vec<(usize, f64)>,
    pub objective: f64,
    /// Basic columns, one per row.
    pub basis: Vec<usize>,
    pub duals: Vec<f64>,
    /// Simplex pivots, all phases.
    pub iterations: usize,
    /// Restricted solves performed by column generation; 1 otherwise.
    pub rounds: usize,
    /// Columns added by column generation, in order.
    pub generated: Vec<usize>,
    pub status: Status,
    pub start: Start,
    /// `|A x - b|_inf`.
    pub feasibility_residual: f64,
    /// Largest negative reduced cost over eligible nonbasic columns, as a positive number.
    pub optimality_residual: f64,
    pub trace: Vec<String>,
    pub state: LpState,
}

const ART: usize = usize::MAX / 2;

pub(crate) struct Solver<'p, P: StandardForm> {
    p: &'p P,
    m: usize,
    n: usize,
    opts: SimplexOptions,
    /// Column ids; `ART + r` is the artificial of row `r`.
    basis: Vec<usize>,
    position: Vec<Option<usize>>,
    binv: DMatrix<f64>,
    xb: Vec<f64>,
    art_sign: Vec<f64>,
    active: Option<Vec<bool>>,
    pivots: usize,
    since_refactor: usize,
    degenerate: usize,
    bland: bool,
    trace: Vec<String>,
    col: Vec<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

impl<'p, P: StandardForm> Solver<'p, P> {
    pub(crate) fn new(p: &'p P, opts: &SimplexOptions, active: Option<Vec<bool>>) -> Self {
        let (m, n) = (p.rows(), p.cols());
        Self {
            p,
            m,
            n,
            opts: opts.clone(),
            basis: Vec::new(),
            position: vec![None; n],
            binv: DMatrix::identity(m, m),
            xb: vec![0.0; m],
            art_sign: vec![1.0; m],
            active,
            pivots: 0,
            since_refactor: 0,
            degenerate: 0,
            bland: false,
            trace: Vec::new(),
            col: vec![0.0; m],
        }
    }

    fn max_iterations(&self) -> usize {
        self.opts.max_iterations.unwrap_or(50 * (self.m + self.n) + 1000)
    }

    fn bland_after(&self) -> usize {
        self.opts.bland_after.unwrap_or(5 * self.n)
    }

    fn eligible(&self, j: usize) -> bool {
        self.position[j].is_none() && self.active.as_ref().is_none_or(|a| a[j])
    }

    pub(crate) fn activate(&mut self, j: usize) {
        if let Some(a) = self.active.as_mut() {
            a[j] = true;
        }
    }

    pub(crate) fn is_active(&self, j: usize) -> bool {
        self.active.as_ref().is_none_or(|a| a[j])
    }

    fn column(&self, id: usize, out: &mut [f64]) {
        if id >= ART {
            out.iter_mut().for_each(|v| *v = 0.0);
            out[id - ART] = self.art_sign[id - ART];
        } else {
            self.p.column_into(id, out);
        }
    }

    fn cost(&self, id: usize, phase: Phase) -> f64 {
        match (phase, id >= ART) {
            (Phase::One, true) => 1.0,
            (Phase::One, false) => 0.0,
            (Phase::Two, true) => 0.0,
            (Phase::Two, false) => self.p.cost(id),
        }
    }

    fn set_basis(&mut self, basis: Vec<usize>) {
        self.position = vec![None; self.n];
        for (i, &id) in basis.iter().enumerate() {
            if id < ART {
                self.position[id] = Some(i);
            }
        }
        self.basis = basis;
    }

    /// Rebuilds `B^{-1}` and `x_B` from scratch.
    pub(crate) fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        let mut b = DMatrix::zeros(m, m);
        let mut col = vec![0.0; m];
        for (k, &id) in self.basis.iter().enumerate() {
            self.column(id, &mut col);
            for i in 0..m {
                b[(i, k)] = col[i];
            }
        }
        self.binv = b.try_inverse().ok_or(Error::SingularBasis)?;
        if self.binv.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularBasis);
        }
        self.recompute_xb();
        self.since_refactor = 0;
        Ok(())
    }

    fn recompute_xb(&mut self) {
        let b = self.p.rhs();
        for i in 0..self.m {
            self.xb[i] = (0..self.m).map(|k| self.binv[(i, k)] * b[k]).sum();
        }
    }

    fn duals(&self, phase: Phase) -> Vec<f64> {
        let cb: Vec<f64> = self.basis.iter().map(|&id| self.cost(id, phase)).collect();
        (0..self.m)
            .map(|k| (0..self.m).map(|i| cb[i] * self.binv[(i, k)]).sum())
            .collect()
    }

    fn objective(&self, phase: Phase) -> f64 {
        self.basis
            .iter()
            .zip(&self.xb)
            .map(|(&id, x)| self.cost(id, phase) * x)
            .sum()
    }

    fn reduced_cost(&self, j: usize, phase: Phase, y: &[f64]) -> f64 {
        self.cost(j, phase) - self.p.column_dot(j, y)
    }

    fn entering_tolerance(&self, j: usize, phase: Phase) -> f64 {
        self.opts.eps_opt * (1.0 + self.cost(j, phase).abs())
    }

    /// Dantzig pricing with lowest index on ties; first improving column under Bland.
    fn price(&self, phase: Phase, y: &[f64]) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.n {
            if !self.eligible(j) {
                continue;
            }
            let d = self.reduced_cost(j, phase, y);
            if d < -self.entering_tolerance(j, phase) {
                if self.bland {
                    return Some(j);
                }
                if best.is_none_or(|(_, b)| d < b) {
                    best = Some((j, d));
                }
            }
        }
        best.map(|b| b.0)
    }

    fn ftran(&self, col: &[f64]) -> Vec<f64> {
        (0..self.m)
            .map(|i| (0..self.m).map(|k| self.binv[(i, k)] * col[k]).sum())
            .collect()
    }

    fn ratio_test(&self, d: &[f64], phase: Phase) -> Option<usize> {
        let dmax = d.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let tol = (1e-12 * dmax).max(1e-14);
        let mut best: Option<(usize, f64)> = None;
        for (i, &di) in d.iter().enumerate() {
            // A basic artificial sits at zero; it leaves as soon as the direction moves it.
            let theta = if phase == Phase::Two && self.basis[i] >= ART && di.abs() > tol {
                0.0
            } else if di > tol {
                self.xb[i].max(0.0) / di
            } else {
                continue;
            };
            let better = match best {
                None => true,
                Some((r, t)) => {
                    let close = (theta - t).abs() <= 1e-12 * (1.0 + t.abs());
                    if !close {
                        theta < t
                    } else if self.bland {
                        self.basis[i] < self.basis[r]
                    } else {
                        di.abs() > d[r].abs()
                    }
                }
            };
            if better {
                best = Some((i, theta));
            }
        }
        best.map(|b| b.0)
    }

    fn pivot(&mut self, r: usize, entering: usize, d: &[f64], phase: Phase) -> Result<()> {
        let theta = if phase == Phase::Two && self.basis[r] >= ART {
            0.0
        } else {
            self.xb[r].max(0.0) / d[r]
        };
        for i in 0..self.m {
            if i != r {
                self.xb[i] -= theta * d[i];
            }
        }
        self.xb[r] = theta;
        let pr = d[r];
        for k in 0..self.m {
            self.binv[(r, k)] /= pr;
        }
        for i in 0..self.m {
            if i != r && d[i] != 0.0 {
                for k in 0..self.m {
                    let v = self.binv[(r, k)];
                    self.binv[(i, k)] -= d[i] * v;
                }
            }
        }
        let leaving = self.basis[r];
        if leaving < ART {
            self.position[leaving] = None;
        }
        self.basis[r] = entering;
        self.position[entering] = Some(r);
        self.pivots += 1;
        self.since_refactor += 1;
        if theta <= self.opts.eps_feas {
            self.degenerate += 1;
            if self.degenerate > self.bland_after() {
                self.bland = true;
            }
        }
        if self.opts.trace {
            let obj = self.objective(phase);
            let leaving = if leaving >= ART {
                format!("a{}", leaving - ART)
            } else {
                leaving.to_string()
            };
            self.trace
                .push(format!("{} {} {} {:.17e}", self.pivots, entering, leaving, obj));
        }
        if self.since_refactor >= self.opts.refactor_every {
            self.refactor()?;
        }
        if self.pivots > self.max_iterations() {
            return Err(Error::IterationLimit(self.pivots));
        }
        Ok(())
    }

    fn check_duals(y: &[f64]) -> Result<()> {
        if y.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::IllConditioned { smallest_pivot: 0.0 })
        }
    }

    /// Primal simplex from a primal feasible basis.
    fn primal(&mut self, phase: Phase) -> Result<()> {
        loop {
            let y = self.duals(phase);
            Self::check_duals(&y)?;
            let Some(j) = self.price(phase, &y) else {
                return Ok(());
            };
            let mut col = std::mem::take(&mut self.col);
            self.p.column_into(j, &mut col);
            let d = self.ftran(&col);
            self.col = col;
            let Some(r) = self.ratio_test(&d, phase) else {
                return Err(Error::Unbounded);
            };
            self.pivot(r, j, &d, phase)?;
        }
    }

    /// Dual simplex from a dual feasible basis until `x_B >= 0`.
    fn dual(&mut self) -> Result<()> {
        loop {
            let mut r = None;
            let mut worst = -self.opts.eps_feas;
            for i in 0..self.m {
                if self.xb[i] < worst {
                    worst = self.xb[i];
                    r = Some(i);
                }
            }
            let Some(r) = r else {
                return Ok(());
            };
            let y = self.duals(Phase::Two);
            Self::check_duals(&y)?;
            let row: Vec<f64> = (0..self.m).map(|k| self.binv[(r, k)]).collect();
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.n {
                if !self.eligible(j) {
                    continue;
                }
                let alpha = self.p.column_dot(j, &row);
                if alpha < -1e-12 {
                    let ratio = self.reduced_cost(j, Phase::Two, &y).max(0.0) / -alpha;
                    if best.is_none_or(|(_, b)| ratio < b) {
                        best = Some((j, ratio));
                    }
                }
            }
            let Some((j, _)) = best else {
                return Err(Error::Infeasible);
            };
            let mut col = vec![0.0; self.m];
            self.p.column_into(j, &mut col);
            let d = self.ftran(&col);
            let theta = self.xb[r] / d[r];
            for i in 0..self.m {
                if i != r {
                    self.xb[i] -= theta * d[i];
                }
            }
            self.xb[r] = theta;
            let pr = d[r];
            for k in 0..self.m {
                self.binv[(r, k)] /= pr;
            }
            for i in 0..self.m {
                if i != r && d[i] != 0.0 {
                    for k in 0..self.m {
                        let v = self.binv[(r, k)];
                        self.binv[(i, k)] -= d[i] * v;
                    }
                }
            }
            let leaving = self.basis[r];
            self.position[leaving] = None;
            self.basis[r] = j;
            self.position[j] = Some(r);
            self.pivots += 1;
            self.since_refactor += 1;
            if self.opts.trace {
                let obj = self.objective(Phase::Two);
                self.trace
                    .push(format!("{} {} {} {:.17e} dual", self.pivots, j, leaving, obj));
            }
            if self.since_refactor >= self.opts.refactor_every {
                self.refactor()?;
            }
            if self.pivots > self.max_iterations() {
                return Err(Error::IterationLimit(self.pivots));
            }
        }
    }

    fn primal_feasible(&self) -> bool {
        self.xb.iter().all(|&v| v >= -self.opts.eps_feas)
    }

    fn dual_feasible(&self) -> Result<bool> {
        let y = self.duals(Phase::Two);
        Self::check_duals(&y)?;
        Ok((0..self.n)
            .filter(|&j| self.eligible(j))
            .all(|j| self.reduced_cost(j, Phase::Two, &y) >= -self.entering_tolerance(j, Phase::Two)))
    }

    /// Crash basis if the problem offers a feasible one, artificial first phase otherwise.
    pub(crate) fn cold(&mut self) -> Result<Start> {
        let crash = if self.opts.crash {
            self.p.crash_basis(self.active.as_deref())
        } else {
            None
        };
        if let Some(crash) = crash {
            if crash.len() == self.m {
                self.set_basis(crash);
                if self.refactor().is_ok() && self.primal_feasible() {
                    self.primal(Phase::Two)?;
                    return Ok(Start::Crash);
                }
            }
        }
        self.two_phase()?;
        Ok(Start::TwoPhase)
    }

    fn two_phase(&mut self) -> Result<()> {
        let b = self.p.rhs().to_vec();
        self.art_sign = b.iter().map(|v| if *v < 0.0 { -1.0 } else { 1.0 }).collect();
        self.set_basis((0..self.m).map(|r| ART + r).collect());
        self.refactor()?;
        self.primal(Phase::One)?;
        let infeasibility = self.objective(Phase::One);
        let scale = 1.0 + b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if infeasibility > self.opts.eps_feas * scale {
            return Err(Error::Infeasible);
        }
        self.drive_out_artificials()?;
        self.primal(Phase::Two)
    }

    /// Replaces artificials still basic at level zero by structural columns.
    fn drive_out_artificials(&mut self) -> Result<()> {
        for r in 0..self.m {
            if self.basis[r] < ART {
                continue;
            }
            let row: Vec<f64> = (0..self.m).map(|k| self.binv[(r, k)]).collect();
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.n {
                if !self.eligible(j) {
                    continue;
                }
                let alpha = self.p.column_dot(j, &row).abs();
                if alpha > 1e-9 && best.is_none_or(|(_, b)| alpha > b) {
                    best = Some((j, alpha));
                }
            }
            if let Some((j, _)) = best {
                let mut col = vec![0.0; self.m];
                self.p.column_into(j, &mut col);
                let d = self.ftran(&col);
                self.pivot(r, j, &d, Phase::One)?;
            }
        }
        Ok(())
    }

    /// Resumes from a previous basis of a program with the same constraint matrix.
    pub(crate) fn warm(&mut self, state: &LpState) -> Result<Start> {
        let valid = state.basis.len() == self.m
            && state.binv.nrows() == self.m
            && state.basis.iter().all(|&j| j < self.n && self.is_active(j));
        if valid {
            self.set_basis(state.basis.clone());
            self.binv = state.binv.clone();
            self.recompute_xb();
            if self.primal_feasible() {
                self.primal(Phase::Two)?;
                return Ok(Start::WarmPrimal);
            }
            if self.dual_feasible()? {
                self.dual()?;
                self.primal(Phase::Two)?;
                return Ok(Start::WarmDual);
            }
        }
        self.reset();
        self.cold()?;
        Ok(Start::WarmFallback)
    }

    fn reset(&mut self) {
        self.set_basis(Vec::new());
        self.binv = DMatrix::identity(self.m, self.m);
        self.art_sign = vec![1.0; self.m];
        self.bland = false;
        self.degenerate = 0;
        self.since_refactor = 0;
    }

    pub(crate) fn has_artificials(&self) -> bool {
        self.basis.iter().any(|&id| id >= ART)
    }

    /// Activates every column and pivots leftover artificials out of the basis.
    pub(crate) fn complete_basis(&mut self) -> Result<()> {
        self.active = None;
        self.drive_out_artificials()?;
        self.primal(Phase::Two)
    }

    /// Second phase again after columns were activated.
    pub(crate) fn resume(&mut self) -> Result<()> {
        self.primal(Phase::Two)
    }

    pub(crate) fn duals_phase_two(&self) -> Vec<f64> {
        self.duals(Phase::Two)
    }

    pub(crate) fn finish(mut self, start: Start) -> Result<LpSolution> {
        if self.basis.iter().any(|&id| id >= ART) {
            return Err(Error::SingularBasis);
        }
        if self.since_refactor > 0 {
            self.refactor()?;
        }
        let y = self.duals(Phase::Two);
        Self::check_duals(&y)?;
        let mut primal: Vec<(usize, f64)> = self
            .basis
            .iter()
            .zip(&self.xb)
            .map(|(&j, &v)| (j, v.max(0.0)))
            .filter(|(_, v)| *v > 0.0)
            .collect();
        primal.sort_by_key(|e| e.0);
        let objective = primal.iter().map(|&(j, v)| self.p.cost(j) * v).sum();
        let mut ax = vec![0.0; self.m];
        let mut col = vec![0.0; self.m];
        for &(j, v) in &primal {
            self.p.column_into(j, &mut col);
            for (a, c) in ax.iter_mut().zip(&col) {
                *a += c * v;
            }
        }
        let feasibility_residual = ax
            .iter()
            .zip(self.p.rhs())
            .fold(0.0f64, |a, (u, b)| a.max((u - b).abs()));
        let optimality_residual = (0..self.n)
            .filter(|&j| self.eligible(j))
            .fold(0.0f64, |a, j| a.max(-self.reduced_cost(j, Phase::Two, &y)));
        Ok(LpSolution {
            primal,
            objective,
            basis: self.basis.clone(),
            duals: y,
            iterations: self.pivots,
            rounds: 1,
            generated: Vec::new(),
            status: Status::Optimal,
            start,
            feasibility_residual,
            optimality_residual,
            trace: self.trace,
            state: LpState {
                basis: self.basis,
                binv: self.binv,
                point: None,
            },
        })
    }
}

/// Cold solve: crash basis or two phases.
pub fn simplex_solve<P: StandardForm>(p: &P, opts: &SimplexOptions) -> Result<LpSolution> {
    let mut s = Solver::new(p, opts, None);
    let start = s.cold()?;
    s.finish(start)
}

/// Restarts from `state`: primal simplex if its basis is still primal feasible, dual
/// simplex if it is dual feasible, otherwise a cold solve.
pub fn warm_start_solve<P: StandardForm>(p: &P, state: &LpState, opts: &SimplexOptions) -> Result<LpSolution> {
    let mut s = Solver::new(p, opts, None);
    let start = s.warm(state)?;
    s.finish(start)
}
