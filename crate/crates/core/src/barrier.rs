//! Log-barrier interior-point solver for smooth convex objectives over
//! linear inequality systems.
//!
//! Problems have the shape
//!
//! ```text
//!   minimize   sum_k  -w_k log2(1 + a_k.x)  +  c.x
//!   subject to row_i.x <= b_i                       (all inequalities)
//! ```
//!
//! with w_k >= 0, which covers the convex majorant subproblems of the
//! successive-convex-approximation loop and the schedule-fixed power
//! refinement. The solver follows the central path: Newton centering on
//! t*objective + barrier, then t <- mu*t until the duality gap m/t reaches
//! the target. Multipliers come from the barrier (nu_i = 1/(t s_i)), so at a
//! centered point the KKT stationarity residual is the Newton residual
//! divided by t.
//!
//! The Newton system is solved either densely (small problems) or by
//! two-level block elimination: variables partitioned into small independent
//! blocks plus a shared pool, rows touching several blocks handled as
//! rank-one Woodbury corrections. Both paths produce the same step and are
//! pinned to each other in tests.

use crate::error::{Error, Result};

/// One convex term -weight * log2(1 + coefs.x).
#[derive(Debug, Clone)]
pub struct LogTerm {
    pub weight: f64,
    pub coefs: Vec<(usize, f64)>,
}

/// Sparse inequality row coefs.x <= rhs.
#[derive(Debug, Clone)]
pub struct SparseRow {
    pub coefs: Vec<(usize, f64)>,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct ConvexLogProblem {
    pub n: usize,
    pub terms: Vec<LogTerm>,
    /// Dense linear objective part.
    pub linear: Vec<f64>,
    pub rows: Vec<SparseRow>,
}

/// How to factor the Newton system.
#[derive(Debug, Clone)]
pub enum KktPlan {
    Dense,
    /// Variables split into disjoint small blocks plus a shared pool
    /// (`var_block[v] = None`). Rows and objective terms must touch at most
    /// one block (plus shared variables); rows touching two or more blocks
    /// are lifted into Woodbury corrections automatically.
    TwoLevel { var_block: Vec<Option<usize>>, n_blocks: usize },
}

#[derive(Debug, Clone)]
pub struct BarrierOptions {
    /// Target duality gap (absolute).
    pub gap_target: f64,
    pub t0: f64,
    pub mu: f64,
    pub max_newton_per_stage: usize,
    pub plan: KktPlan,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        BarrierOptions {
            gap_target: 1e-8,
            t0: 1.0,
            mu: 20.0,
            max_newton_per_stage: 60,
            plan: KktPlan::Dense,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BarrierResult {
    pub x: Vec<f64>,
    pub value: f64,
    /// Row multipliers from the final barrier parameter.
    pub duals: Vec<f64>,
    /// Infinity norm of grad(objective) + A^T duals at the solution.
    pub kkt_residual: f64,
    pub gap: f64,
    pub newton_steps: usize,
}

impl ConvexLogProblem {
    pub fn objective(&self, x: &[f64]) -> f64 {
        let mut v: f64 = self.linear.iter().zip(x).map(|(c, xi)| c * xi).sum();
        for term in &self.terms {
            let arg = 1.0 + term.coefs.iter().map(|&(j, c)| c * x[j]).sum::<f64>();
            v -= term.weight * arg.log2();
        }
        v
    }

    fn gradient(&self, x: &[f64], g: &mut [f64]) -> bool {
        g.copy_from_slice(&self.linear);
        for term in &self.terms {
            let arg = 1.0 + term.coefs.iter().map(|&(j, c)| c * x[j]).sum::<f64>();
            if arg <= 0.0 {
                return false;
            }
            let scale = -term.weight / (arg * std::f64::consts::LN_2);
            for &(j, c) in &term.coefs {
                g[j] += scale * c;
            }
        }
        true
    }

    fn slacks(&self, x: &[f64], s: &mut [f64]) -> bool {
        let mut ok = true;
        for (i, row) in self.rows.iter().enumerate() {
            let ax: f64 = row.coefs.iter().map(|&(j, c)| c * x[j]).sum();
            s[i] = row.rhs - ax;
            ok &= s[i] > 0.0;
        }
        ok
    }
}

/// Strictly-feasible start required; fails otherwise.
pub fn solve_barrier(
    p: &ConvexLogProblem,
    x0: &[f64],
    opts: &BarrierOptions,
) -> Result<BarrierResult> {
    let n = p.n;
    let m = p.rows.len();
    if x0.len() != n || p.linear.len() != n {
        return Err(Error::Solver("barrier: dimension mismatch".into()));
    }
    let mut x = x0.to_vec();
    let mut s = vec![0.0; m];
    if !p.slacks(&x, &mut s) {
        return Err(Error::Solver("barrier: start point is not strictly feasible".into()));
    }
    {
        let mut g = vec![0.0; n];
        if !p.gradient(&x, &mut g) {
            return Err(Error::Solver("barrier: start point outside objective domain".into()));
        }
    }

    let mut t = opts.t0;
    let mut newton_steps = 0;
    let mut kkt = f64::INFINITY;
    let mut solver = NewtonSolver::new(p, &opts.plan)?;
    loop {
        // Centering for the current t.
        let mut decrement = f64::INFINITY;
        for _ in 0..opts.max_newton_per_stage {
            p.slacks(&x, &mut s);
            let mut g = vec![0.0; n];
            p.gradient(&x, &mut g);
            for gi in g.iter_mut() {
                *gi *= t;
            }
            for (i, row) in p.rows.iter().enumerate() {
                let inv = 1.0 / s[i];
                for &(j, c) in &row.coefs {
                    g[j] += c * inv;
                }
            }
            let dir = solver.solve(p, &x, &s, t, &g)?;
            let dec2: f64 = -g.iter().zip(&dir).map(|(gi, di)| gi * di).sum::<f64>();
            decrement = dec2.max(0.0);
            if decrement / 2.0 < 1e-11 {
                kkt = g.iter().fold(0.0f64, |a, v| a.max(v.abs())) / t;
                break;
            }
            // Step to stay strictly inside all rows.
            let mut alpha_max = 1.0f64;
            for (i, row) in p.rows.iter().enumerate() {
                let ad: f64 = row.coefs.iter().map(|&(j, c)| c * dir[j]).sum();
                if ad > 0.0 {
                    alpha_max = alpha_max.min(0.99 * s[i] / ad);
                }
            }
            let merit = |x: &[f64]| -> f64 {
                let mut sl = vec![0.0; m];
                let mut val = t * p.objective(x);
                if !p.slacks(x, &mut sl) {
                    return f64::INFINITY;
                }
                for &si in &sl {
                    val -= si.ln();
                }
                if val.is_nan() {
                    f64::INFINITY
                } else {
                    val
                }
            };
            let m0 = merit(&x);
            let slope: f64 = g.iter().zip(&dir).map(|(gi, di)| gi * di).sum();
            let mut alpha = alpha_max.min(1.0);
            let mut accepted = false;
            for _ in 0..60 {
                let trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + alpha * di).collect();
                if merit(&trial) <= m0 + 0.25 * alpha * slope {
                    x = trial;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            newton_steps += 1;
            if !accepted {
                // Flat line search: centered to numerical precision.
                kkt = g.iter().fold(0.0f64, |a, v| a.max(v.abs())) / t;
                break;
            }
        }
        if decrement / 2.0 >= 1e-11 && kkt.is_infinite() {
            // Stage hit the iteration cap without centering; report honestly.
            let mut g = vec![0.0; n];
            p.gradient(&x, &mut g);
            for gi in g.iter_mut() {
                *gi *= t;
            }
            p.slacks(&x, &mut s);
            for (i, row) in p.rows.iter().enumerate() {
                let inv = 1.0 / s[i];
                for &(j, c) in &row.coefs {
                    g[j] += c * inv;
                }
            }
            kkt = g.iter().fold(0.0f64, |a, v| a.max(v.abs())) / t;
        }
        if m as f64 / t <= opts.gap_target {
            break;
        }
        t *= opts.mu;
        kkt = f64::INFINITY;
    }

    p.slacks(&x, &mut s);
    let duals: Vec<f64> = s.iter().map(|&si| 1.0 / (t * si)).collect();
    Ok(BarrierResult {
        value: p.objective(&x),
        x,
        duals,
        kkt_residual: kkt,
        gap: m as f64 / t,
        newton_steps,
    })
}

/// Newton-system solver, dense or two-level.
struct NewtonSolver {
    plan: Plan,
}

enum Plan {
    Dense { n: usize },
    TwoLevel(TwoLevelPlan),
}

struct TwoLevelPlan {
    var_block: Vec<Option<usize>>,
    /// Variables of each block.
    block_vars: Vec<Vec<usize>>,
    /// Shared variables.
    shared_vars: Vec<usize>,
    /// Position of each variable inside its block / the shared pool.
    pos: Vec<usize>,
    /// Rows lifted to Woodbury corrections (touch >= 2 blocks).
    coupling_rows: Vec<usize>,
}

impl NewtonSolver {
    fn new(p: &ConvexLogProblem, plan: &KktPlan) -> Result<Self> {
        match plan {
            KktPlan::Dense => Ok(NewtonSolver { plan: Plan::Dense { n: p.n } }),
            KktPlan::TwoLevel { var_block, n_blocks } => {
                if var_block.len() != p.n {
                    return Err(Error::Solver("kkt plan: var_block length mismatch".into()));
                }
                let mut block_vars = vec![Vec::new(); *n_blocks];
                let mut shared_vars = Vec::new();
                let mut pos = vec![0usize; p.n];
                for (v, b) in var_block.iter().enumerate() {
                    match b {
                        Some(bi) => {
                            pos[v] = block_vars[*bi].len();
                            block_vars[*bi].push(v);
                        }
                        None => {
                            pos[v] = shared_vars.len();
                            shared_vars.push(v);
                        }
                    }
                }
                for term in &p.terms {
                    if touched_blocks(&term.coefs, var_block) > 1 {
                        return Err(Error::Solver(
                            "kkt plan: objective term spans several blocks".into(),
                        ));
                    }
                }
                let mut coupling_rows = Vec::new();
                for (i, row) in p.rows.iter().enumerate() {
                    if touched_blocks(&row.coefs, var_block) > 1 {
                        coupling_rows.push(i);
                    }
                }
                Ok(NewtonSolver {
                    plan: Plan::TwoLevel(TwoLevelPlan {
                        var_block: var_block.clone(),
                        block_vars,
                        shared_vars,
                        pos,
                        coupling_rows,
                    }),
                })
            }
        }
    }

    fn solve(
        &mut self,
        p: &ConvexLogProblem,
        x: &[f64],
        s: &[f64],
        t: f64,
        g: &[f64],
    ) -> Result<Vec<f64>> {
        match &self.plan {
            Plan::Dense { n } => dense_newton(p, x, s, t, g, *n),
            Plan::TwoLevel(plan) => two_level_newton(p, x, s, t, g, plan),
        }
    }
}

fn touched_blocks(coefs: &[(usize, f64)], var_block: &[Option<usize>]) -> usize {
    let mut seen: Option<usize> = None;
    let mut count = 0;
    for &(j, _) in coefs {
        if let Some(b) = var_block[j] {
            if seen != Some(b) {
                if seen.is_some() {
                    count += 1;
                } else {
                    count = 1;
                }
                seen = Some(b);
            }
        }
    }
    // Exact count needs a set; a cheap two-pass for the common cases.
    if count <= 1 {
        return count;
    }
    let mut blocks: Vec<usize> = coefs.iter().filter_map(|&(j, _)| var_block[j]).collect();
    blocks.sort_unstable();
    blocks.dedup();
    blocks.len()
}

fn dense_newton(
    p: &ConvexLogProblem,
    x: &[f64],
    s: &[f64],
    t: f64,
    g: &[f64],
    n: usize,
) -> Result<Vec<f64>> {
    let mut h = vec![0.0; n * n];
    let mut add_outer = |wt: f64, coefs: &[(usize, f64)]| {
        for &(j1, c1) in coefs {
            for &(j2, c2) in coefs {
                h[j1 * n + j2] += wt * c1 * c2;
            }
        }
    };
    for term in &p.terms {
        let arg = 1.0 + term.coefs.iter().map(|&(j, c)| c * x[j]).sum::<f64>();
        add_outer(t * term.weight / (std::f64::consts::LN_2 * arg * arg), &term.coefs);
    }
    for (i, row) in p.rows.iter().enumerate() {
        add_outer(1.0 / (s[i] * s[i]), &row.coefs);
    }
    drop(add_outer);
    let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
    cholesky_solve(&mut h, n, &rhs)
}

/// In-place Cholesky with a ridge retry for near-singular systems.
fn cholesky_solve(h: &mut [f64], n: usize, rhs: &[f64]) -> Result<Vec<f64>> {
    let base: f64 = (0..n).map(|i| h[i * n + i]).fold(0.0, f64::max);
    let mut ridge = 0.0;
    for attempt in 0..6 {
        let mut l = h.to_vec();
        if ridge > 0.0 {
            for i in 0..n {
                l[i * n + i] += ridge;
            }
        }
        if let Some(x) = try_cholesky(&mut l, n, rhs) {
            return Ok(x);
        }
        ridge = base.max(1e-300) * 1e-12 * 10f64.powi(attempt);
    }
    Err(Error::Solver("newton system not positive definite".into()))
}

fn try_cholesky(a: &mut [f64], n: usize, rhs: &[f64]) -> Option<Vec<f64>> {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if d <= 0.0 || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut v = a[i * n + j];
            for k in 0..j {
                v -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = v / d;
        }
    }
    let mut y = rhs.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= a[i * n + k] * y[k];
        }
        y[i] /= a[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= a[k * n + i] * y[k];
        }
        y[i] /= a[i * n + i];
    }
    Some(y)
}

/// Block-bordered elimination plus Woodbury for coupling rows.
fn two_level_newton(
    p: &ConvexLogProblem,
    x: &[f64],
    s: &[f64],
    t: f64,
    g: &[f64],
    plan: &TwoLevelPlan,
) -> Result<Vec<f64>> {
    let n_sh = plan.shared_vars.len();
    let nb = plan.block_vars.len();
    // Per-block dense Hessians, block-shared coupling, shared core.
    let mut blocks: Vec<Vec<f64>> =
        plan.block_vars.iter().map(|vars| vec![0.0; vars.len() * vars.len()]).collect();
    let mut cross: Vec<Vec<f64>> =
        plan.block_vars.iter().map(|vars| vec![0.0; vars.len() * n_sh]).collect();
    let mut core = vec![0.0; n_sh * n_sh];

    let coupling_set: std::collections::HashSet<usize> =
        plan.coupling_rows.iter().cloned().collect();

    // Local curvature: objective terms plus local barrier rows.
    let mut add_outer = |wt: f64, coefs: &[(usize, f64)]| {
        // All vars of a local term live in one block (or shared).
        for &(j1, c1) in coefs {
            for &(j2, c2) in coefs {
                let v = wt * c1 * c2;
                match (plan.var_block[j1], plan.var_block[j2]) {
                    (Some(b1), Some(b2)) => {
                        debug_assert_eq!(b1, b2);
                        let w = plan.block_vars[b1].len();
                        blocks[b1][plan.pos[j1] * w + plan.pos[j2]] += v;
                    }
                    (Some(b1), None) => {
                        cross[b1][plan.pos[j1] * n_sh + plan.pos[j2]] += v;
                    }
                    (None, Some(_)) => { /* symmetric term handled above */ }
                    (None, None) => {
                        core[plan.pos[j1] * n_sh + plan.pos[j2]] += v;
                    }
                }
            }
        }
    };
    for term in &p.terms {
        let arg = 1.0 + term.coefs.iter().map(|&(j, c)| c * x[j]).sum::<f64>();
        add_outer(t * term.weight / (std::f64::consts::LN_2 * arg * arg), &term.coefs);
    }
    for (i, row) in p.rows.iter().enumerate() {
        if !coupling_set.contains(&i) {
            add_outer(1.0 / (s[i] * s[i]), &row.coefs);
        }
    }
    drop(add_outer);

    // Tiny ridge keeps blocks factorable when a variable has no curvature.
    let ridge = 1e-300f64.max(
        blocks
            .iter()
            .flat_map(|b| b.iter())
            .chain(core.iter())
            .fold(0.0f64, |a, v| a.max(v.abs()))
            * 1e-14,
    );
    for b in 0..nb {
        let w = plan.block_vars[b].len();
        for i in 0..w {
            blocks[b][i * w + i] += ridge;
        }
    }
    for i in 0..n_sh {
        core[i * n_sh + i] += ridge;
    }

    // Factor blocks and build the Schur complement on the shared pool.
    let mut block_chol = Vec::with_capacity(nb);
    for b in 0..nb {
        let w = plan.block_vars[b].len();
        let mut l = blocks[b].clone();
        if chol_factor(&mut l, w).is_none() {
            return Err(Error::Solver("two-level: block not positive definite".into()));
        }
        // core -= cross^T B^-1 cross
        let mut binv_c = cross[b].clone();
        chol_solve_many(&l, w, &mut binv_c, n_sh);
        for r in 0..n_sh {
            for cidx in 0..n_sh {
                let mut acc = 0.0;
                for kk in 0..w {
                    acc += cross[b][kk * n_sh + r] * binv_c[kk * n_sh + cidx];
                }
                core[r * n_sh + cidx] -= acc;
            }
        }
        block_chol.push((l, binv_c));
    }
    let mut core_l = core.clone();
    if chol_factor(&mut core_l, n_sh).is_none() {
        return Err(Error::Solver("two-level: shared core not positive definite".into()));
    }

    // Solve M0 y = r via the factorization above.
    let n = p.n;
    let solve_m0 = |r: &[f64]| -> Vec<f64> {
        // Forward: block parts.
        let mut y_blocks: Vec<Vec<f64>> = Vec::with_capacity(nb);
        let mut r_sh: Vec<f64> = plan.shared_vars.iter().map(|&v| r[v]).collect();
        for b in 0..nb {
            let w = plan.block_vars[b].len();
            let rb: Vec<f64> = plan.block_vars[b].iter().map(|&v| r[v]).collect();
            let mut yb = rb.clone();
            chol_solve_vec(&block_chol[b].0, w, &mut yb);
            // r_sh -= cross^T yb
            for r_i in 0..n_sh {
                let mut acc = 0.0;
                for kk in 0..w {
                    acc += cross[b][kk * n_sh + r_i] * yb[kk];
                }
                r_sh[r_i] -= acc;
            }
            y_blocks.push(rb);
        }
        let mut y_sh = r_sh;
        chol_solve_vec(&core_l, n_sh, &mut y_sh);
        // Back-substitute blocks: y_b = B^-1 (r_b - C y_sh).
        let mut y = vec![0.0; n];
        for b in 0..nb {
            let w = plan.block_vars[b].len();
            let mut rb = y_blocks[b].clone();
            for kk in 0..w {
                let mut acc = 0.0;
                for r_i in 0..n_sh {
                    acc += cross[b][kk * n_sh + r_i] * y_sh[r_i];
                }
                rb[kk] -= acc;
            }
            chol_solve_vec(&block_chol[b].0, w, &mut rb);
            for (kk, &v) in plan.block_vars[b].iter().enumerate() {
                y[v] = rb[kk];
            }
        }
        for (kk, &v) in plan.shared_vars.iter().enumerate() {
            y[v] = y_sh[kk];
        }
        y
    };

    let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
    let w_rows = &plan.coupling_rows;
    if w_rows.is_empty() {
        return Ok(solve_m0(&rhs));
    }
    // Woodbury: H = M0 + U diag(rho) U^T with one column per coupling row.
    let k = w_rows.len();
    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut rho = Vec::with_capacity(k);
    for &ri in w_rows {
        let mut col = vec![0.0; n];
        for &(j, c) in &p.rows[ri].coefs {
            col[j] = c;
        }
        u_cols.push(col);
        rho.push(1.0 / (s[ri] * s[ri]));
    }
    let m0_rhs = solve_m0(&rhs);
    let m0_u: Vec<Vec<f64>> = u_cols.iter().map(|u| solve_m0(u)).collect();
    // Small system: (diag(1/rho) + U^T M0^-1 U) beta = U^T M0^-1 rhs.
    let mut small = vec![0.0; k * k];
    let mut srhs = vec![0.0; k];
    for a_i in 0..k {
        for b_i in 0..k {
            let dot: f64 = u_cols[a_i].iter().zip(&m0_u[b_i]).map(|(u, v)| u * v).sum();
            small[a_i * k + b_i] = dot + if a_i == b_i { 1.0 / rho[a_i] } else { 0.0 };
        }
        srhs[a_i] = u_cols[a_i].iter().zip(&m0_rhs).map(|(u, v)| u * v).sum();
    }
    let mut small_l = small.clone();
    if chol_factor(&mut small_l, k).is_none() {
        return Err(Error::Solver("two-level: woodbury system not positive definite".into()));
    }
    let mut beta = srhs.clone();
    chol_solve_vec(&small_l, k, &mut beta);
    let mut dir = m0_rhs;
    for a_i in 0..k {
        for j in 0..n {
            dir[j] -= m0_u[a_i][j] * beta[a_i];
        }
    }
    Ok(dir)
}

fn chol_factor(a: &mut [f64], n: usize) -> Option<()> {
    for j in 0..n {
        let mut d = a[j * n + j];
        for kk in 0..j {
            d -= a[j * n + kk] * a[j * n + kk];
        }
        if d <= 0.0 || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut v = a[i * n + j];
            for kk in 0..j {
                v -= a[i * n + kk] * a[j * n + kk];
            }
            a[i * n + j] = v / d;
        }
    }
    Some(())
}

fn chol_solve_vec(l: &[f64], n: usize, y: &mut [f64]) {
    for i in 0..n {
        for kk in 0..i {
            let li = l[i * n + kk];
            y[i] -= li * y[kk];
        }
        y[i] /= l[i * n + i];
    }
    for i in (0..n).rev() {
        for kk in i + 1..n {
            y[i] -= l[kk * n + i] * y[kk];
        }
        y[i] /= l[i * n + i];
    }
}

/// Solves L L^T X = B column-wise for a row-major B with `cols` columns.
fn chol_solve_many(l: &[f64], n: usize, b: &mut [f64], cols: usize) {
    for col in 0..cols {
        let mut y: Vec<f64> = (0..n).map(|r| b[r * cols + col]).collect();
        chol_solve_vec(l, n, &mut y);
        for r in 0..n {
            b[r * cols + col] = y[r];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn scalar_interior_optimum() {
        // minimize -log2(1+x) + 0.5 x on [0, 3]: optimum at 1/(0.5 ln2) - 1.
        let p = ConvexLogProblem {
            n: 1,
            terms: vec![LogTerm { weight: 1.0, coefs: vec![(0, 1.0)] }],
            linear: vec![0.5],
            rows: vec![
                SparseRow { coefs: vec![(0, 1.0)], rhs: 3.0 },
                SparseRow { coefs: vec![(0, -1.0)], rhs: 0.0 },
            ],
        };
        let r = solve_barrier(&p, &[1.0], &BarrierOptions::default()).unwrap();
        let expect = 1.0 / (0.5 * std::f64::consts::LN_2) - 1.0;
        assert!((r.x[0] - expect).abs() < 1e-5, "{} vs {expect}", r.x[0]);
        assert!(r.kkt_residual < 1e-6);
        assert!(r.gap <= 1e-8 + 1e-12);
    }

    #[test]
    fn boundary_optimum_hits_budget() {
        // minimize -log2(1+2x) s.t. x <= 1.5, x >= 0: all the budget.
        let p = ConvexLogProblem {
            n: 1,
            terms: vec![LogTerm { weight: 1.0, coefs: vec![(0, 2.0)] }],
            linear: vec![0.0],
            rows: vec![
                SparseRow { coefs: vec![(0, 1.0)], rhs: 1.5 },
                SparseRow { coefs: vec![(0, -1.0)], rhs: 0.0 },
            ],
        };
        let r = solve_barrier(&p, &[0.5], &BarrierOptions::default()).unwrap();
        assert!((r.x[0] - 1.5).abs() < 1e-6);
    }

    #[test]
    fn two_level_matches_dense() {
        // Random block-structured problem: 4 blocks of 3 vars + 2 shared,
        // local rows, plus 2 coupling rows across blocks.
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let nb = 4;
        let bs = 3;
        let n = nb * bs + 2;
        let shared0 = nb * bs;
        let mut var_block = vec![None; n];
        for b in 0..nb {
            for v in 0..bs {
                var_block[b * bs + v] = Some(b);
            }
        }
        let mut terms = Vec::new();
        let mut rows = Vec::new();
        for b in 0..nb {
            // One log term per block touching block vars + a shared var.
            let mut coefs: Vec<(usize, f64)> =
                (0..bs).map(|v| (b * bs + v, rng.gen_range(0.1..1.0))).collect();
            coefs.push((shared0, rng.gen_range(0.1..0.5)));
            terms.push(LogTerm { weight: rng.gen_range(0.5..2.0), coefs });
            for v in 0..bs {
                rows.push(SparseRow { coefs: vec![(b * bs + v, 1.0)], rhs: 2.0 });
                rows.push(SparseRow { coefs: vec![(b * bs + v, -1.0)], rhs: 0.0 });
            }
        }
        for sv in [shared0, shared0 + 1] {
            rows.push(SparseRow { coefs: vec![(sv, 1.0)], rhs: 2.0 });
            rows.push(SparseRow { coefs: vec![(sv, -1.0)], rhs: 0.0 });
        }
        // Coupling rows across all blocks (budget style).
        rows.push(SparseRow { coefs: (0..nb).map(|b| (b * bs, 1.0)).collect(), rhs: 3.0 });
        rows.push(SparseRow {
            coefs: (0..nb).map(|b| (b * bs + 1, 1.0)).chain([(shared0 + 1, 0.5)]).collect(),
            rhs: 2.5,
        });
        let linear: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.2..0.4)).collect();
        let p = ConvexLogProblem { n, terms, linear, rows };
        let x0 = vec![0.3; n];

        let dense = solve_barrier(&p, &x0, &BarrierOptions::default()).unwrap();
        let two = solve_barrier(
            &p,
            &x0,
            &BarrierOptions {
                plan: KktPlan::TwoLevel { var_block, n_blocks: nb },
                ..BarrierOptions::default()
            },
        )
        .unwrap();
        assert!(
            (dense.value - two.value).abs() < 1e-7 * (1.0 + dense.value.abs()),
            "dense {} vs structured {}",
            dense.value,
            two.value
        );
        for (a, b) in dense.x.iter().zip(&two.x) {
            assert!((a - b).abs() < 1e-5, "{a} vs {b}");
        }
    }

    #[test]
    fn rejects_infeasible_start() {
        let p = ConvexLogProblem {
            n: 1,
            terms: vec![],
            linear: vec![1.0],
            rows: vec![SparseRow { coefs: vec![(0, 1.0)], rhs: 1.0 }],
        };
        assert!(solve_barrier(&p, &[2.0], &BarrierOptions::default()).is_err());
    }
}
