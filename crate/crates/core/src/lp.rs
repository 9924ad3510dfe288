//! Self-contained dense linear-program solver.
//!
//! Bounded-variable primal simplex over inequality systems A x <= b with
//! per-variable bounds lo <= x <= hi (infinities allowed). Phase 1 introduces
//! artificial columns only for rows violated at the initial bound point.
//! Pivoting is Dantzig pricing with deterministic lowest-index tie-breaking
//! and a Bland's-rule fallback after a run of degenerate steps. Every optimal
//! solve is certified: primal residuals, dual sign conditions, and the
//! duality gap are checked against `FEAS_TOL`/`OPT_TOL` before returning.

use crate::error::{Error, Result};

/// Feasibility tolerance of the certificate check (on row-scaled data).
pub const FEAS_TOL: f64 = 1e-8;
/// Optimality (dual feasibility / gap) tolerance of the certificate check.
pub const OPT_TOL: f64 = 1e-8;

const PIVOT_TOL: f64 = 1e-10;
const PRICE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

/// max/min c.x subject to A x <= b, lo <= x <= hi.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub sense: Sense,
    pub c: Vec<f64>,
    /// Row-major constraint matrix.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Optimal point (meaningful only when status is Optimal).
    pub x: Vec<f64>,
    pub value: f64,
    /// Duals of the inequality rows (sign convention of a maximization).
    pub row_duals: Vec<f64>,
    pub iterations: usize,
}

impl LinearProgram {
    fn validate(&self) -> Result<()> {
        let n = self.c.len();
        let m = self.a.len();
        if self.b.len() != m || self.lo.len() != n || self.hi.len() != n {
            return Err(Error::Lp(format!(
                "dimension mismatch: n={n}, m={m}, b={}, lo={}, hi={}",
                self.b.len(),
                self.lo.len(),
                self.hi.len()
            )));
        }
        for row in &self.a {
            if row.len() != n {
                return Err(Error::Lp(format!("row has {} entries, expected {n}", row.len())));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Lp("non-finite constraint coefficient".into()));
            }
        }
        if self.c.iter().any(|v| !v.is_finite()) || self.b.iter().any(|v| !v.is_finite()) {
            return Err(Error::Lp("non-finite objective or rhs".into()));
        }
        for j in 0..n {
            if self.lo[j] > self.hi[j] {
                return Err(Error::Lp(format!("lo[{j}] > hi[{j}]")));
            }
            if self.lo[j].is_nan() || self.hi[j].is_nan() {
                return Err(Error::Lp("NaN bound".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColState {
    Basic,
    AtLower,
    AtUpper,
}

struct Tableau {
    /// Total columns: structural + slacks + artificials.
    cols: usize,
    m: usize,
    /// t[i][j] = (B^-1 A)_{ij}, maintained across pivots.
    t: Vec<Vec<f64>>,
    /// Values of the basic variables per row.
    xb: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<ColState>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    /// Current objective coefficients (phase 1 or 2).
    obj: Vec<f64>,
    /// Reduced costs, kept in sync with pivots.
    dj: Vec<f64>,
    iterations: usize,
    bland: bool,
    degenerate_run: usize,
}

impl Tableau {
    fn nb_value(&self, j: usize) -> f64 {
        match self.state[j] {
            ColState::AtLower => {
                if self.lo[j].is_finite() {
                    self.lo[j]
                } else {
                    0.0
                }
            }
            ColState::AtUpper => {
                if self.hi[j].is_finite() {
                    self.hi[j]
                } else {
                    0.0
                }
            }
            ColState::Basic => unreachable!("basic column has no nonbasic value"),
        }
    }

    fn rebuild_reduced_costs(&mut self) {
        // dj = obj_j - sum_i obj[basis[i]] * t[i][j]
        let mut dj = self.obj.clone();
        for i in 0..self.m {
            let cb = self.obj[self.basis[i]];
            if cb != 0.0 {
                for j in 0..self.cols {
                    dj[j] -= cb * self.t[i][j];
                }
            }
        }
        for i in 0..self.m {
            dj[self.basis[i]] = 0.0;
        }
        self.dj = dj;
    }

    /// Picks the entering column and its move direction (+1 from lower,
    /// -1 from upper); None means the current basis is optimal.
    fn choose_entering(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None; // (col, dir, gain)
        for j in 0..self.cols {
            let (dir, gain) = match self.state[j] {
                ColState::Basic => continue,
                ColState::AtLower => (1.0, self.dj[j]),
                ColState::AtUpper => (-1.0, -self.dj[j]),
            };
            // A variable pinned by equal bounds can never move.
            if self.lo[j] == self.hi[j] {
                continue;
            }
            if gain > PRICE_TOL {
                if self.bland {
                    return Some((j, dir));
                }
                match best {
                    Some((_, _, g)) if g >= gain => {}
                    _ => best = Some((j, dir, gain)),
                }
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    /// Ratio test. Returns (step, Some(row) to pivot | None for a bound flip),
    /// or None when the problem is unbounded along this column.
    fn ratio_test(&self, enter: usize, dir: f64) -> Option<(f64, Option<usize>)> {
        let span = self.hi[enter] - self.lo[enter]; // may be +inf
        let mut limit = span;
        let mut leave: Option<usize> = None;
        for i in 0..self.m {
            let alpha = dir * self.t[i][enter];
            let bi = self.basis[i];
            let (room, blocked) = if alpha > PIVOT_TOL {
                // Basic variable decreases toward its lower bound.
                if self.lo[bi].is_finite() {
                    ((self.xb[i] - self.lo[bi]) / alpha, true)
                } else {
                    (f64::INFINITY, false)
                }
            } else if alpha < -PIVOT_TOL {
                if self.hi[bi].is_finite() {
                    ((self.hi[bi] - self.xb[i]) / (-alpha), true)
                } else {
                    (f64::INFINITY, false)
                }
            } else {
                (f64::INFINITY, false)
            };
            if blocked {
                let room = room.max(0.0);
                let better = room < limit - 1e-15
                    || (room < limit + 1e-15
                        && leave.is_some_and(|l| bi < self.basis[l]));
                if better {
                    limit = room;
                    leave = Some(i);
                }
            }
        }
        if limit.is_infinite() {
            return None;
        }
        Some((limit, leave))
    }

    fn apply_bound_flip(&mut self, enter: usize, dir: f64, step: f64) {
        for i in 0..self.m {
            self.xb[i] -= dir * step * self.t[i][enter];
        }
        self.state[enter] = if dir > 0.0 { ColState::AtUpper } else { ColState::AtLower };
    }

    fn pivot(&mut self, enter: usize, dir: f64, step: f64, leave_row: usize) {
        let leaving = self.basis[leave_row];
        let alpha_leave = self.t[leave_row][enter];
        // Move every basic value, then install the entering variable.
        for i in 0..self.m {
            self.xb[i] -= dir * step * self.t[i][enter];
        }
        let enter_value = self.nb_value(enter) + dir * step;
        // Leaving variable parks at the bound it ran into.
        let moved_down = dir * alpha_leave > 0.0;
        self.state[leaving] = if moved_down { ColState::AtLower } else { ColState::AtUpper };

        // Row elimination.
        let pivot = self.t[leave_row][enter];
        let inv = 1.0 / pivot;
        for v in self.t[leave_row].iter_mut() {
            *v *= inv;
        }
        let pivot_row = self.t[leave_row].clone();
        for i in 0..self.m {
            if i == leave_row {
                continue;
            }
            let factor = self.t[i][enter];
            if factor != 0.0 {
                for j in 0..self.cols {
                    self.t[i][j] -= factor * pivot_row[j];
                }
                self.t[i][enter] = 0.0;
            }
        }
        let dfac = self.dj[enter];
        if dfac != 0.0 {
            for j in 0..self.cols {
                self.dj[j] -= dfac * pivot_row[j];
            }
            self.dj[enter] = 0.0;
        }
        self.basis[leave_row] = enter;
        self.state[enter] = ColState::Basic;
        self.xb[leave_row] = enter_value;

        if step <= 1e-12 {
            self.degenerate_run += 1;
            if self.degenerate_run > 2 * (self.m + self.cols) {
                self.bland = true;
            }
        } else {
            self.degenerate_run = 0;
        }
    }

    /// Runs the simplex loop on the current objective. Ok(true) = optimal,
    /// Ok(false) = unbounded.
    fn optimize(&mut self, max_iters: usize) -> Result<bool> {
        loop {
            self.iterations += 1;
            if self.iterations > max_iters {
                return Err(Error::Lp(format!("simplex iteration limit {max_iters} reached")));
            }
            let Some((enter, dir)) = self.choose_entering() else {
                return Ok(true);
            };
            match self.ratio_test(enter, dir) {
                None => return Ok(false),
                Some((step, None)) => self.apply_bound_flip(enter, dir, step),
                Some((step, Some(row))) => self.pivot(enter, dir, step, row),
            }
        }
    }

    fn solution_x(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.cols];
        for j in 0..self.cols {
            if self.state[j] != ColState::Basic {
                x[j] = self.nb_value(j);
            }
        }
        for i in 0..self.m {
            x[self.basis[i]] = self.xb[i];
        }
        x
    }
}

/// Solves the LP. Optimal solutions carry row duals and pass an internal
/// primal/dual certificate; a failed certificate reports a numerical error
/// rather than a wrong answer.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.c.len();
    let m = lp.a.len();
    let flip = match lp.sense {
        Sense::Maximize => 1.0,
        Sense::Minimize => -1.0,
    };

    // Row scaling for pivothealth; duals are unscaled on the way out.
    let mut row_scale = vec![1.0; m];
    let mut a = lp.a.clone();
    let mut b = lp.b.clone();
    for i in 0..m {
        let amax = a[i].iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(b[i].abs());
        if amax > 0.0 {
            row_scale[i] = 1.0 / amax;
            for v in a[i].iter_mut() {
                *v *= row_scale[i];
            }
            b[i] *= row_scale[i];
        }
    }

    // Columns: structural, then one slack per row; artificials appended below.
    let cols = n + m;
    let mut t = vec![vec![0.0; cols]; m];
    let mut lo = Vec::with_capacity(cols);
    let mut hi = Vec::with_capacity(cols);
    for j in 0..n {
        lo.push(lp.lo[j]);
        hi.push(lp.hi[j]);
    }
    for _ in 0..m {
        lo.push(0.0);
        hi.push(f64::INFINITY);
    }
    for i in 0..m {
        for j in 0..n {
            t[i][j] = a[i][j];
        }
        t[i][n + i] = 1.0;
    }

    let mut state = Vec::with_capacity(cols);
    for j in 0..n {
        // Start at the finite bound closest to zero; free variables at 0.
        let s = if lp.lo[j].is_finite() {
            if lp.hi[j].is_finite() && lp.hi[j].abs() < lp.lo[j].abs() {
                ColState::AtUpper
            } else {
                ColState::AtLower
            }
        } else if lp.hi[j].is_finite() {
            ColState::AtUpper
        } else {
            ColState::AtLower // free, parked at 0
        };
        state.push(s);
    }
    for _ in 0..m {
        state.push(ColState::Basic);
    }

    let mut tab = Tableau {
        cols,
        m,
        t,
        xb: vec![0.0; m],
        basis: (n..n + m).collect(),
        state,
        lo,
        hi,
        obj: vec![0.0; cols],
        dj: vec![0.0; cols],
        iterations: 0,
        bland: false,
        degenerate_run: 0,
    };

    // Initial basic (slack) values at the nonbasic bound point.
    let mut needs_phase1 = false;
    for i in 0..m {
        let mut s = b[i];
        for j in 0..n {
            if tab.state[j] != ColState::Basic {
                s -= a[i][j] * tab.nb_value(j);
            }
        }
        tab.xb[i] = s;
        if s < 0.0 {
            needs_phase1 = true;
        }
    }

    let max_iters = 200 * (m + cols) + 2000;

    if needs_phase1 {
        // Append artificial columns for the violated rows.
        let mut art_cols = Vec::new();
        for i in 0..m {
            if tab.xb[i] < 0.0 {
                let j = tab.cols;
                for (r, row) in tab.t.iter_mut().enumerate() {
                    row.push(if r == i { -1.0 } else { 0.0 });
                }
                tab.lo.push(0.0);
                tab.hi.push(f64::INFINITY);
                tab.state.push(ColState::Basic);
                tab.obj.push(0.0);
                tab.dj.push(0.0);
                tab.cols += 1;
                // Swap: slack leaves at lower bound, artificial enters basic.
                tab.state[n + i] = ColState::AtLower;
                tab.basis[i] = j;
                tab.xb[i] = -tab.xb[i];
                // Keep B^-1 A consistent: negate the row so the artificial
                // column is +1 in its own row.
                for v in tab.t[i].iter_mut() {
                    *v = -*v;
                }
                art_cols.push(j);
            }
        }
        // Phase-1 objective: maximize -(sum of artificials).
        tab.obj = vec![0.0; tab.cols];
        for &j in &art_cols {
            tab.obj[j] = -1.0;
        }
        tab.rebuild_reduced_costs();
        let optimal = tab.optimize(max_iters)?;
        let infeasibility: f64 = tab
            .basis
            .iter()
            .zip(&tab.xb)
            .filter(|(j, _)| art_cols.contains(j))
            .map(|(_, v)| v.max(0.0))
            .sum();
        if !optimal || infeasibility > FEAS_TOL {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: vec![0.0; n],
                value: f64::NAN,
                row_duals: vec![0.0; m],
                iterations: tab.iterations,
            });
        }
        // Freeze artificials at zero so phase 2 cannot reuse them.
        for &j in &art_cols {
            tab.hi[j] = 0.0;
            if tab.state[j] == ColState::AtUpper {
                tab.state[j] = ColState::AtLower;
            }
        }
    }

    // Phase 2.
    tab.obj = vec![0.0; tab.cols];
    for j in 0..n {
        tab.obj[j] = flip * lp.c[j];
    }
    tab.rebuild_reduced_costs();
    let optimal = tab.optimize(max_iters)?;
    if !optimal {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: vec![0.0; n],
            value: flip * f64::INFINITY,
            row_duals: vec![0.0; m],
            iterations: tab.iterations,
        });
    }

    let full = tab.solution_x();
    let mut x: Vec<f64> = full[..n].to_vec();
    // Clamp roundoff outside the box.
    for j in 0..n {
        x[j] = x[j].clamp(
            if lp.lo[j].is_finite() { lp.lo[j] } else { x[j] },
            if lp.hi[j].is_finite() { lp.hi[j] } else { x[j] },
        );
    }
    let value = lp.c.iter().zip(&x).map(|(c, v)| c * v).sum::<f64>();

    // Row duals from the slack reduced costs: y_i = -dj[slack_i] (scaled).
    let mut row_duals = vec![0.0; m];
    for i in 0..m {
        row_duals[i] = flip * -tab.dj[n + i] * row_scale[i];
    }

    certify(lp, &x, &row_duals)?;

    Ok(LpSolution { status: LpStatus::Optimal, x, value, row_duals, iterations: tab.iterations })
}

/// Primal/dual certificate: bound and row residuals, dual signs, reduced-cost
/// signs at bounds, and the duality-gap identity c.x = y.b + d.x.
fn certify(lp: &LinearProgram, x: &[f64], y: &[f64]) -> Result<()> {
    let n = lp.c.len();
    let flip = match lp.sense {
        Sense::Maximize => 1.0,
        Sense::Minimize => -1.0,
    };
    for (i, row) in lp.a.iter().enumerate() {
        let ax: f64 = row.iter().zip(x).map(|(a, v)| a * v).sum();
        let scale = 1.0 + row.iter().fold(0.0f64, |a, v| a.max(v.abs())) * x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if ax - lp.b[i] > FEAS_TOL * scale {
            return Err(Error::Lp(format!("certificate: row {i} violated by {}", ax - lp.b[i])));
        }
        if flip * y[i] < -OPT_TOL {
            return Err(Error::Lp(format!("certificate: dual {i} has wrong sign")));
        }
    }
    // Reduced costs d = c - A^T y (in the maximization orientation).
    let mut d: Vec<f64> = (0..n).map(|j| flip * lp.c[j]).collect();
    for (i, row) in lp.a.iter().enumerate() {
        let yi = flip * y[i];
        if yi != 0.0 {
            for j in 0..n {
                d[j] -= yi * row[j];
            }
        }
    }
    let scale_d: f64 = 1.0 + d.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for j in 0..n {
        let at_lo = lp.lo[j].is_finite() && (x[j] - lp.lo[j]).abs() <= 1e-7 * (1.0 + lp.lo[j].abs());
        let at_hi = lp.hi[j].is_finite() && (lp.hi[j] - x[j]).abs() <= 1e-7 * (1.0 + lp.hi[j].abs());
        if at_lo && at_hi {
            continue; // fixed variable: any reduced cost is fine
        }
        if at_lo {
            if d[j] > OPT_TOL * scale_d {
                return Err(Error::Lp(format!("certificate: var {j} at lower bound with d={}", d[j])));
            }
        } else if at_hi {
            if d[j] < -OPT_TOL * scale_d {
                return Err(Error::Lp(format!("certificate: var {j} at upper bound with d={}", d[j])));
            }
        } else if d[j].abs() > OPT_TOL * scale_d * 10.0 {
            return Err(Error::Lp(format!("certificate: interior var {j} with d={}", d[j])));
        }
    }
    // Gap identity; d has zeros off-bound so d.x recovers the bound terms.
    let cx: f64 = (0..n).map(|j| flip * lp.c[j] * x[j]).sum();
    let yb: f64 = lp.b.iter().zip(y).map(|(b, yi)| b * flip * yi).sum();
    let dx: f64 = (0..n)
        .map(|j| {
            let at_bound = (lp.lo[j].is_finite()
                && (x[j] - lp.lo[j]).abs() <= 1e-7 * (1.0 + lp.lo[j].abs()))
                || (lp.hi[j].is_finite() && (lp.hi[j] - x[j]).abs() <= 1e-7 * (1.0 + lp.hi[j].abs()));
            if at_bound {
                d[j] * x[j]
            } else {
                0.0
            }
        })
        .sum();
    let scale = 1.0 + cx.abs().max(yb.abs());
    if (cx - yb - dx).abs() > 1e-6 * scale {
        return Err(Error::Lp(format!("certificate: duality gap {}", cx - yb - dx)));
    }
    Ok(())
}
