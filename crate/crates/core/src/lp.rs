//! Dense two-phase primal simplex for small LPs with bounded variables.
//!
//! Each row `a_i x (sense) b_i` is written as `a_i x - r_i = 0` with a row
//! variable `r_i` whose bounds carry the right-hand side, so every constraint
//! is an equality and every variable has a box. Nonbasic variables sit at a
//! bound (or at zero when free).

use crate::error::{Error, Result};
use crate::system::{ConstraintSystem, Direction, Sense, VarKind};

pub const FEAS_TOL: f64 = 1e-9;
pub const PIVOT_TOL: f64 = 1e-10;
const OPT_TOL: f64 = 1e-10;
const REINVERT_EVERY: usize = 64;
// After this many pivots without progress, switch to Bland's rule.
const DEGENERATE_RUN: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Values of the system's variables; meaningful when optimal.
    pub x: Vec<f64>,
    /// Objective value in the system's own direction.
    pub value: f64,
    /// Shadow price of each row: the rate at which `value` changes as the
    /// row's right-hand side grows.
    pub duals: Vec<f64>,
    /// `c_j - a_j^T y` in the system's own direction.
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
}

impl LpSolution {
    fn failed(status: LpStatus, iterations: usize) -> Self {
        LpSolution {
            status,
            x: Vec::new(),
            value: f64::NAN,
            duals: Vec::new(),
            reduced_costs: Vec::new(),
            iterations,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

enum Outcome {
    Optimal,
    Unbounded,
    Cap,
}

struct Simplex {
    m: usize,
    cols: usize,
    // Original constraint matrix [A | -I | diag(sign)], row-major.
    a: Vec<f64>,
    // B^{-1} times the above.
    t: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    x: Vec<f64>,
    basis: Vec<usize>,
    row_of: Vec<Option<usize>>,
    cost: Vec<f64>,
    d: Vec<f64>,
    iterations: usize,
    cap: usize,
    since_reinvert: usize,
}

impl Simplex {
    fn col(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.cols + j]
    }

    fn set_cost(&mut self, cost: Vec<f64>) {
        self.cost = cost;
        self.price();
    }

    fn price(&mut self) {
        let cols = self.cols;
        self.d.clone_from(&self.cost);
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = self.cost[b];
            if cb != 0.0 {
                let row = &self.t[i * cols..(i + 1) * cols];
                for (dj, &tij) in self.d.iter_mut().zip(row) {
                    *dj -= cb * tij;
                }
            }
        }
        for &b in &self.basis {
            self.d[b] = 0.0;
        }
    }

    /// Rebuilds the tableau and basic values from the original matrix by
    /// Gauss-Jordan elimination on the basis columns.
    fn reinvert(&mut self) -> Result<()> {
        let (m, cols) = (self.m, self.cols);
        let w = cols + 1;
        let mut aug = vec![0.0; m * w];
        for i in 0..m {
            aug[i * w..i * w + cols].copy_from_slice(&self.a[i * cols..(i + 1) * cols]);
        }
        // Right-hand side: -N x_N.
        for j in 0..cols {
            if self.row_of[j].is_none() && self.x[j] != 0.0 {
                for i in 0..m {
                    aug[i * w + cols] -= self.a[i * cols + j] * self.x[j];
                }
            }
        }
        let mut order = vec![usize::MAX; m];
        let mut used = vec![false; m];
        for (k, &b) in self.basis.iter().enumerate() {
            let mut best = None;
            let mut best_abs = 0.0;
            for i in 0..m {
                let v = aug[i * w + b].abs();
                if !used[i] && v > best_abs {
                    best_abs = v;
                    best = Some(i);
                }
            }
            let Some(p) = best.filter(|_| best_abs > 1e-13) else {
                return Err(Error::Numerical("singular basis".into()));
            };
            used[p] = true;
            order[k] = p;
            let inv = 1.0 / aug[p * w + b];
            for v in &mut aug[p * w..(p + 1) * w] {
                *v *= inv;
            }
            let (pivot_row, rest) = split_row(&mut aug, p, w);
            for row in rest {
                let f = row[b];
                if f != 0.0 {
                    for (rv, &pv) in row.iter_mut().zip(pivot_row.iter()) {
                        *rv -= f * pv;
                    }
                }
            }
        }
        for (k, &p) in order.iter().enumerate() {
            self.t[k * cols..(k + 1) * cols].copy_from_slice(&aug[p * w..p * w + cols]);
            self.x[self.basis[k]] = aug[p * w + cols];
        }
        self.since_reinvert = 0;
        self.price();
        Ok(())
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let cols = self.cols;
        let inv = 1.0 / self.t[r * cols + j];
        for v in &mut self.t[r * cols..(r + 1) * cols] {
            *v *= inv;
        }
        self.t[r * cols + j] = 1.0;
        let (pivot_row, rest) = split_row(&mut self.t, r, cols);
        for row in rest {
            let f = row[j];
            if f != 0.0 {
                for (rv, &pv) in row.iter_mut().zip(pivot_row.iter()) {
                    *rv -= f * pv;
                }
                row[j] = 0.0;
            }
        }
        let dj = self.d[j];
        if dj != 0.0 {
            for (dv, &pv) in self.d.iter_mut().zip(pivot_row.iter()) {
                *dv -= dj * pv;
            }
        }
        self.d[j] = 0.0;
        let old = self.basis[r];
        self.row_of[old] = None;
        self.basis[r] = j;
        self.row_of[j] = Some(r);
        self.since_reinvert += 1;
    }

    fn entering(&self, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.cols {
            if self.row_of[j].is_some() || self.lo[j] == self.hi[j] {
                continue;
            }
            let dj = self.d[j];
            let dir = if dj < -OPT_TOL && self.x[j] < self.hi[j] {
                1.0
            } else if dj > OPT_TOL && self.x[j] > self.lo[j] {
                -1.0
            } else {
                continue;
            };
            if bland {
                return Some((j, dir));
            }
            if dj.abs() > best_score {
                best_score = dj.abs();
                best = Some((j, dir));
            }
        }
        best
    }

    fn run(&mut self) -> Result<Outcome> {
        let mut degenerate = 0usize;
        loop {
            if self.iterations >= self.cap {
                return Ok(Outcome::Cap);
            }
            if self.since_reinvert >= REINVERT_EVERY {
                self.reinvert()?;
            }
            let Some((j, dir)) = self.entering(degenerate >= DEGENERATE_RUN) else {
                if self.since_reinvert > 0 {
                    // Confirm optimality on freshly computed values.
                    self.reinvert()?;
                    continue;
                }
                return Ok(Outcome::Optimal);
            };
            self.iterations += 1;
            let bland = degenerate >= DEGENERATE_RUN;

            let mut theta = self.hi[j] - self.lo[j];
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let alpha = dir * self.col(i, j);
                if alpha.abs() <= PIVOT_TOL {
                    continue;
                }
                let b = self.basis[i];
                let lim = if alpha > 0.0 {
                    if self.lo[b] == f64::NEG_INFINITY {
                        continue;
                    }
                    (self.x[b] - self.lo[b]) / alpha
                } else {
                    if self.hi[b] == f64::INFINITY {
                        continue;
                    }
                    (self.hi[b] - self.x[b]) / -alpha
                };
                let lim = lim.max(0.0);
                let better = match leave {
                    None => lim < theta,
                    Some((r, a_r)) => {
                        if lim < theta - 1e-12 {
                            true
                        } else if lim <= theta + 1e-12 {
                            if bland {
                                b < self.basis[r]
                            } else {
                                alpha.abs() > a_r.abs()
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    theta = theta.min(lim);
                    leave = Some((i, alpha));
                }
            }
            if theta == f64::INFINITY {
                return Ok(Outcome::Unbounded);
            }
            if theta > 1e-12 {
                degenerate = 0;
            } else {
                degenerate += 1;
            }
            self.x[j] += dir * theta;
            if theta != 0.0 {
                for i in 0..self.m {
                    let tij = self.col(i, j);
                    if tij != 0.0 {
                        let b = self.basis[i];
                        self.x[b] -= dir * theta * tij;
                    }
                }
            }
            match leave {
                None => {
                    self.x[j] = if dir > 0.0 { self.hi[j] } else { self.lo[j] };
                }
                Some((r, alpha)) => {
                    let b = self.basis[r];
                    self.x[b] = if alpha > 0.0 { self.lo[b] } else { self.hi[b] };
                    self.pivot(r, j);
                }
            }
        }
    }
}

/// Splits a row-major matrix into row `r` and an iterator over the others.
fn split_row(data: &mut [f64], r: usize, w: usize) -> (&[f64], impl Iterator<Item = &mut [f64]>) {
    let (before, rest) = data.split_at_mut(r * w);
    let (pivot, after) = rest.split_at_mut(w);
    (&*pivot, before.chunks_mut(w).chain(after.chunks_mut(w)))
}

/// Solves a continuous LP. Fails with [`Error::NonContinuous`] if any
/// variable is binary or integer (use [`ConstraintSystem::relaxed`]).
pub fn solve_lp(sys: &ConstraintSystem) -> Result<LpSolution> {
    sys.check()?;
    if let Some(j) = sys.vars.iter().position(|v| v.kind != VarKind::Real) {
        return Err(Error::NonContinuous(j));
    }
    for (j, v) in sys.vars.iter().enumerate() {
        if v.lo > v.hi || v.lo == f64::INFINITY || v.hi == f64::NEG_INFINITY {
            return Err(Error::InvalidParameter(format!("variable {j} has an empty box")));
        }
    }
    let n = sys.num_vars();
    let m = sys.num_rows();
    let cols = n + 2 * m;
    let cap = 50 * (m + n).max(1);

    let mut lo = Vec::with_capacity(cols);
    let mut hi = Vec::with_capacity(cols);
    let mut x = Vec::with_capacity(cols);
    for v in &sys.vars {
        lo.push(v.lo);
        hi.push(v.hi);
        x.push(if v.lo.is_finite() {
            v.lo
        } else if v.hi.is_finite() {
            v.hi
        } else {
            0.0
        });
    }
    for r in &sys.rows {
        let (l, h) = match r.sense {
            Sense::Ge => (r.rhs, f64::INFINITY),
            Sense::Le => (f64::NEG_INFINITY, r.rhs),
            Sense::Eq => (r.rhs, r.rhs),
        };
        lo.push(l);
        hi.push(h);
        x.push(0.0);
    }
    lo.extend(std::iter::repeat_n(0.0, m));
    hi.extend(std::iter::repeat_n(0.0, m));
    x.extend(std::iter::repeat_n(0.0, m));

    let mut a = vec![0.0; m * cols];
    let mut t = vec![0.0; m * cols];
    let mut basis = Vec::with_capacity(m);
    let mut row_of = vec![None; cols];
    for (i, r) in sys.rows.iter().enumerate() {
        let row = &mut a[i * cols..(i + 1) * cols];
        let mut act = 0.0;
        for &(j, c) in &r.coeffs {
            row[j] = c;
            act += c * x[j];
        }
        let rv = n + i;
        let art = n + m + i;
        row[rv] = -1.0;
        if act >= lo[rv] && act <= hi[rv] {
            row[art] = 1.0;
            x[rv] = act;
            basis.push(rv);
            row_of[rv] = Some(i);
            for (tv, &av) in t[i * cols..(i + 1) * cols].iter_mut().zip(row.iter()) {
                *tv = -av;
            }
        } else {
            let target = act.clamp(lo[rv], hi[rv]);
            x[rv] = target;
            let sign = if target > act { 1.0 } else { -1.0 };
            row[art] = sign;
            hi[art] = f64::INFINITY;
            x[art] = (target - act).abs();
            basis.push(art);
            row_of[art] = Some(i);
            for (tv, &av) in t[i * cols..(i + 1) * cols].iter_mut().zip(row.iter()) {
                *tv = av * sign;
            }
        }
    }

    let mut s = Simplex {
        m,
        cols,
        a,
        t,
        lo,
        hi,
        x,
        basis,
        row_of,
        cost: Vec::new(),
        d: Vec::new(),
        iterations: 0,
        cap,
        since_reinvert: 0,
    };

    let needs_phase1 = (n + m..cols).any(|j| s.hi[j] > 0.0);
    if needs_phase1 {
        let mut c1 = vec![0.0; cols];
        for c in &mut c1[n + m..] {
            *c = 1.0;
        }
        s.set_cost(c1);
        match s.run()? {
            Outcome::Cap => return Ok(LpSolution::failed(LpStatus::NumericalFailure, s.iterations)),
            Outcome::Unbounded => {
                return Err(Error::Numerical("phase one reported unbounded".into()))
            }
            Outcome::Optimal => {}
        }
        for (i, r) in sys.rows.iter().enumerate() {
            let art = n + m + i;
            if s.x[art] > FEAS_TOL * (1.0 + r.rhs.abs()) {
                return Ok(LpSolution::failed(LpStatus::Infeasible, s.iterations));
            }
            s.hi[art] = 0.0;
            if s.row_of[art].is_none() {
                s.x[art] = 0.0;
            }
        }
    }

    let sign = match sys.objective.direction {
        Direction::Min => 1.0,
        Direction::Max => -1.0,
    };
    let mut c2 = vec![0.0; cols];
    for &(j, c) in &sys.objective.coeffs {
        c2[j] = sign * c;
    }
    s.set_cost(c2);
    match s.run()? {
        Outcome::Cap => return Ok(LpSolution::failed(LpStatus::NumericalFailure, s.iterations)),
        Outcome::Unbounded => return Ok(LpSolution::failed(LpStatus::Unbounded, s.iterations)),
        Outcome::Optimal => {}
    }

    let xs: Vec<f64> = s.x[..n].to_vec();
    // Basic artificials can hold tiny leftovers; anything larger means the
    // refactorised point drifted off the rows.
    if !sys.rows_satisfied(&xs, 1e3 * FEAS_TOL) {
        return Ok(LpSolution::failed(LpStatus::NumericalFailure, s.iterations));
    }
    let duals = (0..m).map(|i| sign * s.d[n + i]).collect();
    let reduced_costs = (0..n).map(|j| sign * s.d[j]).collect();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        value: sys.objective.value(&xs),
        x: xs,
        duals,
        reduced_costs,
        iterations: s.iterations,
    })
}

/// Objective of the dual: `b^T y` plus the bound terms of the reduced costs.
/// Equals the primal value at optimality.
pub fn dual_value(sys: &ConstraintSystem, sol: &LpSolution) -> f64 {
    let rows: f64 = sys.rows.iter().zip(&sol.duals).map(|(r, y)| r.rhs * y).sum();
    let bounds: f64 = sys
        .vars
        .iter()
        .zip(&sol.reduced_costs)
        .zip(&sol.x)
        .map(|((v, &dj), &xj)| {
            if dj == 0.0 {
                0.0
            } else if (xj - v.lo).abs() <= (xj - v.hi).abs() {
                dj * v.lo
            } else {
                dj * v.hi
            }
        })
        .sum();
    rows + bounds
}
