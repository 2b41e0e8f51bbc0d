//! Dense two-phase primal simplex with bounded variables.
//!
//! Sized for the attack programs: a handful of rows and a few dozen columns,
//! every variable boxed in `[0, u]`. Upper bounds are handled by bound flips
//! instead of extra rows, so the tableau stays `rows × (columns + slacks)`.
//!
//! Pricing is Dantzig's rule with lowest-index tie-breaking. After a run of
//! degenerate pivots the solver switches to Bland's rule for the rest of the
//! solve, which rules out cycling. Every choice is deterministic.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
struct Row {
    coeffs: Vec<f64>,
    relation: Relation,
    rhs: f64,
}

/// `minimize c·x` subject to linear rows and `0 ≤ x ≤ u`.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    objective: Vec<f64>,
    upper: Vec<f64>,
    rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(self) -> Option<LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

/// Phase-one residual (in row-scaled units) still counted as feasible.
const FEASIBILITY_TOL: f64 = 1e-11;
const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-12;
const DEGENERATE_RUN: usize = 50;

impl LinearProgram {
    /// A program over `objective.len()` variables, each in `[0, ∞)`.
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            upper: vec![f64::INFINITY; n],
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn set_upper(&mut self, var: usize, upper: f64) {
        assert!(upper >= 0.0, "upper bound must be nonnegative");
        self.upper[var] = upper;
    }

    /// Boxes every variable in `[0, upper]`.
    pub fn with_uniform_upper(mut self, upper: f64) -> Self {
        assert!(upper >= 0.0, "upper bound must be nonnegative");
        self.upper.iter_mut().for_each(|u| *u = upper);
        self
    }

    pub fn add_constraint(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        assert_eq!(coeffs.len(), self.num_vars(), "constraint width mismatch");
        self.rows.push(Row {
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn solve(&self) -> Result<LpOutcome> {
        if self
            .objective
            .iter()
            .chain(self.rows.iter().flat_map(|r| r.coeffs.iter()))
            .chain(self.rows.iter().map(|r| &r.rhs))
            .any(|v| !v.is_finite())
        {
            return Err(Error::Solver("non-finite coefficient".into()));
        }
        match Tableau::build(self) {
            None => Ok(LpOutcome::Infeasible),
            Some(mut t) => t.run(self),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Basic,
    AtLower,
    AtUpper,
}

struct Tableau {
    /// structural variables
    n: usize,
    /// first artificial column
    art_start: usize,
    cols: usize,
    /// row-major `m × cols`
    a: Vec<f64>,
    beta: Vec<f64>,
    basis: Vec<usize>,
    status: Vec<Status>,
    upper: Vec<f64>,
    reduced: Vec<f64>,
    bland: bool,
    degenerate_run: usize,
}

impl Tableau {
    /// `None` when a row without coefficients cannot be satisfied.
    fn build(lp: &LinearProgram) -> Option<Self> {
        let n = lp.num_vars();
        let mut rows = Vec::new();
        for row in &lp.rows {
            let scale = row.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
            if scale == 0.0 {
                let ok = match row.relation {
                    Relation::Le => row.rhs >= -FEASIBILITY_TOL,
                    Relation::Ge => row.rhs <= FEASIBILITY_TOL,
                    Relation::Eq => row.rhs.abs() <= FEASIBILITY_TOL,
                };
                if !ok {
                    return None;
                }
                continue;
            }
            rows.push(Row {
                coeffs: row.coeffs.iter().map(|c| c / scale).collect(),
                relation: row.relation,
                rhs: row.rhs / scale,
            });
        }

        let m = rows.len();
        let slacks = rows.iter().filter(|r| r.relation != Relation::Eq).count();
        let art_start = n + slacks;
        let cols = art_start + m;
        let mut a = vec![0.0; m * cols];
        let mut beta = vec![0.0; m];
        let mut slack = n;
        for (i, row) in rows.iter().enumerate() {
            let sign = if row.rhs < 0.0 { -1.0 } else { 1.0 };
            let line = &mut a[i * cols..(i + 1) * cols];
            for (j, c) in row.coeffs.iter().enumerate() {
                line[j] = sign * c;
            }
            match row.relation {
                Relation::Le => {
                    line[slack] = sign;
                    slack += 1;
                }
                Relation::Ge => {
                    line[slack] = -sign;
                    slack += 1;
                }
                Relation::Eq => {}
            }
            line[art_start + i] = 1.0;
            beta[i] = sign * row.rhs;
        }

        let mut upper = vec![f64::INFINITY; cols];
        upper[..n].copy_from_slice(&lp.upper);
        let mut status = vec![Status::AtLower; cols];
        for i in 0..m {
            status[art_start + i] = Status::Basic;
        }
        Some(Self {
            n,
            art_start,
            cols,
            a,
            beta,
            basis: (art_start..cols).collect(),
            status,
            upper,
            reduced: vec![0.0; cols],
            bland: false,
            degenerate_run: 0,
        })
    }

    fn m(&self) -> usize {
        self.basis.len()
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.cols + j]
    }

    fn price(&mut self, costs: &[f64]) {
        for j in 0..self.cols {
            let mut d = costs[j];
            for i in 0..self.m() {
                d -= costs[self.basis[i]] * self.at(i, j);
            }
            self.reduced[j] = if self.status[j] == Status::Basic {
                0.0
            } else {
                d
            };
        }
    }

    fn run(&mut self, lp: &LinearProgram) -> Result<LpOutcome> {
        let iteration_limit = 100 * (self.cols + self.m()) + 1000;

        // phase one: drive the artificials to zero
        let mut phase1 = vec![0.0; self.cols];
        phase1[self.art_start..].iter_mut().for_each(|c| *c = 1.0);
        self.price(&phase1);
        if self.iterate(iteration_limit, COST_TOL)? == Progress::Unbounded {
            return Err(Error::Solver("phase one reported unbounded".into()));
        }
        let residual: f64 = (0..self.m())
            .filter(|&i| self.basis[i] >= self.art_start)
            .map(|i| self.beta[i].max(0.0))
            .sum();
        if residual > FEASIBILITY_TOL {
            return Ok(LpOutcome::Infeasible);
        }
        self.evict_artificials();

        // phase two
        let mut costs = vec![0.0; self.cols];
        costs[..self.n].copy_from_slice(&lp.objective);
        let cost_tol = COST_TOL * lp.objective.iter().fold(1.0f64, |m, c| m.max(c.abs()));
        self.price(&costs);
        self.bland = false;
        self.degenerate_run = 0;
        if self.iterate(iteration_limit, cost_tol)? == Progress::Unbounded {
            return Ok(LpOutcome::Unbounded);
        }

        let mut x = vec![0.0; self.n];
        for (j, xj) in x.iter_mut().enumerate() {
            *xj = match self.status[j] {
                Status::AtLower => 0.0,
                Status::AtUpper => self.upper[j],
                Status::Basic => 0.0,
            };
        }
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.n {
                x[b] = self.beta[i];
            }
        }
        for (j, xj) in x.iter_mut().enumerate() {
            *xj = xj.clamp(0.0, self.upper[j]);
        }
        let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpOutcome::Optimal(LpSolution { x, objective }))
    }

    fn iterate(&mut self, limit: usize, cost_tol: f64) -> Result<Progress> {
        for _ in 0..limit {
            let Some(j) = self.entering(cost_tol) else {
                return Ok(Progress::Optimal);
            };
            if !self.step(j) {
                return Ok(Progress::Unbounded);
            }
        }
        Err(Error::Solver(format!(
            "no convergence after {limit} iterations"
        )))
    }

    fn entering(&self, cost_tol: f64) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.art_start {
            let gain = match self.status[j] {
                Status::Basic => continue,
                Status::AtLower => -self.reduced[j],
                Status::AtUpper => self.reduced[j],
            };
            if gain <= cost_tol || (self.status[j] == Status::AtLower && self.upper[j] == 0.0) {
                continue;
            }
            if self.bland {
                return Some(j);
            }
            if best.is_none_or(|(_, g)| gain > g) {
                best = Some((j, gain));
            }
        }
        best.map(|(j, _)| j)
    }

    /// Moves variable `j` off its bound. Returns false when unbounded.
    fn step(&mut self, j: usize) -> bool {
        let dir = if self.status[j] == Status::AtLower {
            1.0
        } else {
            -1.0
        };
        let mut limit = self.upper[j];
        let mut leaving: Option<(usize, Status, f64)> = None;
        for i in 0..self.m() {
            let rate = -dir * self.at(i, j);
            let (room, to) = if rate < -PIVOT_TOL {
                (self.beta[i].max(0.0) / -rate, Status::AtLower)
            } else if rate > PIVOT_TOL && self.upper[self.basis[i]].is_finite() {
                (
                    (self.upper[self.basis[i]] - self.beta[i]).max(0.0) / rate,
                    Status::AtUpper,
                )
            } else {
                continue;
            };
            let better = match leaving {
                _ if room < limit => true,
                Some((r, _, _)) if room == limit => {
                    let (cur, new) = (self.at(r, j).abs(), self.at(i, j).abs());
                    new > cur || (new == cur && self.basis[i] < self.basis[r])
                }
                _ => false,
            };
            if better {
                limit = room;
                leaving = Some((i, to, rate));
            }
        }
        if !limit.is_finite() {
            return false;
        }

        if limit <= 1e-14 {
            self.degenerate_run += 1;
            if self.degenerate_run > DEGENERATE_RUN {
                self.bland = true;
            }
        } else {
            self.degenerate_run = 0;
        }

        for i in 0..self.m() {
            let rate = -dir * self.at(i, j);
            self.beta[i] += rate * limit;
        }
        let start = if self.status[j] == Status::AtLower {
            0.0
        } else {
            self.upper[j]
        };
        let value = start + dir * limit;

        match leaving {
            None => {
                self.status[j] = if dir > 0.0 {
                    Status::AtUpper
                } else {
                    Status::AtLower
                };
            }
            Some((r, to, _)) => {
                let out = self.basis[r];
                self.status[out] = to;
                self.pivot(r, j);
                self.beta[r] = value;
            }
        }
        true
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let cols = self.cols;
        let p = self.at(r, j);
        for k in 0..cols {
            self.a[r * cols + k] /= p;
        }
        self.a[r * cols + j] = 1.0;
        for i in 0..self.m() {
            if i == r {
                continue;
            }
            let f = self.at(i, j);
            if f == 0.0 {
                continue;
            }
            for k in 0..cols {
                self.a[i * cols + k] -= f * self.a[r * cols + k];
            }
            self.a[i * cols + j] = 0.0;
        }
        let f = self.reduced[j];
        if f != 0.0 {
            for k in 0..cols {
                self.reduced[k] -= f * self.a[r * cols + k];
            }
        }
        self.reduced[j] = 0.0;
        self.status[j] = Status::Basic;
        self.basis[r] = j;
    }

    /// Pivots zero-valued artificials out of the basis where possible.
    fn evict_artificials(&mut self) {
        for r in 0..self.m() {
            if self.basis[r] < self.art_start {
                continue;
            }
            let candidate = (0..self.art_start)
                .filter(|&j| self.status[j] != Status::Basic)
                .max_by(|&x, &y| {
                    self.at(r, x)
                        .abs()
                        .total_cmp(&self.at(r, y).abs())
                        .then(y.cmp(&x))
                });
            if let Some(j) = candidate.filter(|&j| self.at(r, j).abs() > 1e-9) {
                let value = if self.status[j] == Status::AtUpper {
                    self.upper[j]
                } else {
                    0.0
                };
                let out = self.basis[r];
                self.status[out] = Status::AtLower;
                self.pivot(r, j);
                self.beta[r] = value;
            }
        }
        // artificials that stayed basic sit on redundant rows at zero
        for k in self.art_start..self.cols {
            self.upper[k] = 0.0;
        }
    }
}

#[derive(Debug, PartialEq, Eq)]
enum Progress {
    Optimal,
    Unbounded,
}
