//! Schedule-fixed power refinement.
//!
//! With the tuple selection frozen, the weighted throughput is a difference
//! of concave logs in the slot powers, so it is tightened by
//! majorize-minimize: linearize the subtracted (denominator) logs at the
//! current point and solve the resulting convex problem with the barrier
//! solver, repeating until the true objective stops improving. Each step can
//! only increase the true objective, so this is used both as the final power
//! re-optimization after rounding and as the incumbent polish of the
//! polyblock loop.

use crate::barrier::{solve_barrier, BarrierOptions, ConvexLogProblem, KktPlan, LogTerm, SparseRow};
use crate::error::Result;
use crate::lp::{solve_lp, LinearProgram, LpStatus, Sense};
use crate::zspace::ZSpace;

const MAX_MM_ITERS: usize = 80;
const IMPROVE_TOL: f64 = 1e-10;

/// Constraint rows of the fixed-schedule power problem (budgets, SIC rows,
/// and box rows), over the concatenated slot powers of the picked entries.
fn power_rows(zs: &ZSpace, entries: &[usize]) -> Vec<SparseRow> {
    let s = zs.n_slots;
    let mut rows = Vec::new();
    for (k, &e) in entries.iter().enumerate() {
        let entry = &zs.entries[e];
        for slot in 0..s {
            rows.push(SparseRow { coefs: vec![(k * s + slot, 1.0)], rhs: entry.slot_cap[slot] });
            rows.push(SparseRow { coefs: vec![(k * s + slot, -1.0)], rhs: 0.0 });
        }
        if let Some(sic) = entry.sic {
            // Vacuous rows (orthogonal tuples have an identically-zero
            // margin) would pin the barrier to the boundary; drop them.
            if sic.c_r != 0.0 || sic.c_t != 0.0 {
                rows.push(SparseRow {
                    coefs: vec![(k * s + 2, -sic.c_r), (k * s + 3, -sic.c_t)],
                    rhs: sic.c0,
                });
            }
        }
    }
    if zs.has_dl_budget {
        let mut coefs = Vec::new();
        for (k, &e) in entries.iter().enumerate() {
            for (slot, &(is_dl, _)) in zs.entries[e].slot_user.iter().enumerate() {
                if is_dl {
                    coefs.push((k * s + slot, 1.0));
                }
            }
        }
        if !coefs.is_empty() {
            rows.push(SparseRow { coefs, rhs: zs.p_max_dl });
        }
    }
    if zs.has_ul_budget {
        for user in 1..=zs.dims.n_ul {
            let mut coefs = Vec::new();
            for (k, &e) in entries.iter().enumerate() {
                for (slot, &(is_dl, u)) in zs.entries[e].slot_user.iter().enumerate() {
                    if !is_dl && u == user {
                        coefs.push((k * s + slot, 1.0));
                    }
                }
            }
            if !coefs.is_empty() {
                rows.push(SparseRow { coefs, rhs: zs.p_max_ul[user - 1] });
            }
        }
    }
    rows
}

/// Interior point of the row system by Chebyshev-center LP; None when the
/// system has (numerically) no interior.
fn interior_point(rows: &[SparseRow], n: usize) -> Result<Option<Vec<f64>>> {
    let mut a = Vec::with_capacity(rows.len());
    let mut b = Vec::with_capacity(rows.len());
    for row in rows {
        let norm: f64 = row.coefs.iter().map(|&(_, c)| c * c).sum::<f64>().sqrt().max(1e-300);
        let mut dense = vec![0.0; n + 1];
        for &(j, c) in &row.coefs {
            dense[j] = c;
        }
        dense[n] = norm;
        a.push(dense);
        b.push(row.rhs);
    }
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut lo = vec![f64::NEG_INFINITY; n + 1];
    lo[n] = 0.0;
    let mut hi = vec![f64::INFINITY; n + 1];
    hi[n] = 1e6;
    let lp = LinearProgram { sense: Sense::Maximize, c, a, b, lo, hi };
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal || sol.value <= 1e-11 {
        return Ok(None);
    }
    Ok(Some(sol.x[..n].to_vec()))
}

/// Maximizes the true utility of the picked tuples over their slot powers.
/// Never returns a worse point than the input (the input is kept when no
/// improvement is found or the feasible set has no interior).
pub fn refine_power(
    zs: &ZSpace,
    picks: &[(usize, Vec<f64>)],
    gap_target: f64,
) -> Result<Vec<(usize, Vec<f64>)>> {
    if picks.is_empty() {
        return Ok(Vec::new());
    }
    let entries: Vec<usize> = picks.iter().map(|&(e, _)| e).collect();
    let s = zs.n_slots;
    let n = entries.len() * s;
    let rows = power_rows(zs, &entries);

    let objective_of = |x: &[f64]| -> f64 {
        entries
            .iter()
            .enumerate()
            .map(|(k, &e)| zs.entries[e].utility(&x[k * s..(k + 1) * s]))
            .sum()
    };

    let mut x_best: Vec<f64> = picks.iter().flat_map(|(_, slots)| slots.clone()).collect();
    let mut best = objective_of(&x_best);

    let Some(start) = interior_point(&rows, n)? else {
        return Ok(picks.to_vec());
    };

    let mut x_interior = start;
    let mut expansion = x_best.clone();
    for _ in 0..MAX_MM_ITERS {
        // Surrogate: keep the -chi log2(f) terms, linearize the +chi log2(g)
        // terms at the expansion point.
        let mut terms = Vec::new();
        let mut linear = vec![0.0; n];
        for (k, &e) in entries.iter().enumerate() {
            let entry = &zs.entries[e];
            let y = &expansion[k * s..(k + 1) * s];
            for q in 0..zs.n_quadrants {
                let chi = entry.chi[q];
                if chi == 0.0 {
                    continue;
                }
                let form = &entry.forms[q];
                let coefs: Vec<(usize, f64)> = form
                    .f
                    .iter()
                    .enumerate()
                    .filter(|(_, &c)| c != 0.0)
                    .map(|(slot, &c)| (k * s + slot, c))
                    .collect();
                if !coefs.is_empty() {
                    terms.push(LogTerm { weight: chi, coefs });
                }
                // grad of chi*log2(g) at y.
                let g_y = form.g_at(y);
                for (slot, &c) in form.g.iter().enumerate() {
                    if c != 0.0 {
                        linear[k * s + slot] += chi * c / (g_y * std::f64::consts::LN_2);
                    }
                }
            }
        }
        let problem = ConvexLogProblem { n, terms, linear, rows: rows.clone() };
        let result = solve_barrier(
            &problem,
            &x_interior,
            &BarrierOptions { gap_target, plan: KktPlan::Dense, ..BarrierOptions::default() },
        )?;
        let value = objective_of(&result.x);
        let improved = value > best + IMPROVE_TOL * (1.0 + best.abs());
        if value > best {
            best = value;
            x_best = result.x.clone();
        }
        expansion = result.x.clone();
        x_interior = result.x;
        if !improved {
            break;
        }
    }

    Ok(entries
        .iter()
        .enumerate()
        .map(|(k, &e)| (e, x_best[k * s..(k + 1) * s].to_vec()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ProblemInstance;
    use crate::tuples::Dims;

    fn one_tuple() -> ProblemInstance {
        ProblemInstance::from_parts(
            Dims::new(1, 1, 1),
            vec![2.0],
            vec![1.5],
            vec![0.4],
            vec![0.6],
            vec![1.0],
            vec![1.0],
            2.0,
            vec![1.0],
            0.5,
        )
        .unwrap()
    }

    #[test]
    fn refinement_never_decreases_utility() {
        let inst = one_tuple();
        let zs = ZSpace::fd(&inst, false);
        let picks = vec![(0usize, vec![0.5, 0.5, 0.2, 0.2])];
        let before = zs.pick_objective(&picks);
        let after = refine_power(&zs, &picks, 1e-9).unwrap();
        let after_val = zs.pick_objective(&after);
        assert!(after_val >= before - 1e-12);
        assert!(after_val > before + 0.01, "refinement should find real improvement here");
    }

    #[test]
    fn single_dl_user_takes_full_budget() {
        // Pure DL: the optimum is all the BS power on the only user.
        let inst = ProblemInstance::from_parts(
            Dims::new(1, 1, 1),
            vec![1.0],
            vec![0.0],
            vec![0.0],
            vec![0.0],
            vec![1.0],
            vec![0.0],
            3.0,
            vec![1.0],
            0.5,
        )
        .unwrap();
        let zs = ZSpace::fd(&inst, false);
        let picks = vec![(0usize, vec![0.1, 0.1, 0.0, 0.0])];
        let after = refine_power(&zs, &picks, 1e-10).unwrap();
        let total_dl = after[0].1[0] + after[0].1[1];
        assert!((total_dl - 3.0).abs() < 1e-4, "dl power {total_dl}");
        let val = zs.pick_objective(&after);
        assert!((val - 2.0f64.log2() * 2.0).abs() < 1e-6, "log2(1+3)=2, got {val}");
    }

    #[test]
    fn empty_picks_pass_through() {
        let inst = one_tuple();
        let zs = ZSpace::fd(&inst, false);
        assert!(refine_power(&zs, &[], 1e-9).unwrap().is_empty());
    }
}
