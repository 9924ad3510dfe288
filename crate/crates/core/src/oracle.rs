//! Exhaustive grid oracle: certified lower bound on the optimal objective.
//!
//! Every schedule is enumerated; for each active tuple the slot powers run
//! over a logarithmic grid (zero plus `levels` multiplicative steps from
//! budget*1e-4 to the budget), filtered by the SIC margin and the per-tuple
//! budget caps. Grids nest under doubling of `levels`, so refining the grid
//! never lowers the result. Subcarriers share budgets through a quantized
//! consumption lattice: per subcarrier the best utility within each budget
//! cell is tabulated (consumption rounded up, so reconstructed solutions are
//! exactly feasible), closed monotonically, and the subcarrier tables are
//! combined over complementary cells. The result is achieved by concrete
//! feasible powers, hence a valid lower bound that converges to the optimum
//! as `levels` grows.

use crate::error::{Error, Result};
use crate::zspace::ZSpace;
use rayon::prelude::*;

/// Refusal thresholds: exhaustive search is for desk-scale instances only.
pub const ORACLE_MAX_SUBCARRIERS: usize = 2;
pub const ORACLE_MAX_TUPLES: usize = 64;

#[derive(Debug, Clone)]
pub struct OracleOutcome {
    pub picks: Vec<(usize, Vec<f64>)>,
    pub objective: f64,
    /// Number of (subcarrier, tuple) tables evaluated.
    pub tables: usize,
}

/// Zero plus `levels` log-spaced points from cap*1e-4 to cap. Nested under
/// doubling of `levels`.
fn power_grid(cap: f64, levels: usize) -> Vec<f64> {
    if cap <= 0.0 {
        return vec![0.0];
    }
    let mut grid = Vec::with_capacity(levels + 2);
    grid.push(0.0);
    for k in 0..=levels {
        grid.push(cap * 10f64.powf(-4.0 * (1.0 - k as f64 / levels as f64)));
    }
    grid
}

/// Budget lattice per consumption dimension (same construction as the grid).
struct Lattice {
    /// Per-dimension nondecreasing budget levels, starting at 0.
    dims: Vec<Vec<f64>>,
    strides: Vec<usize>,
    cells: usize,
}

impl Lattice {
    fn new(budgets: &[f64], levels: usize) -> Self {
        let dims: Vec<Vec<f64>> = budgets.iter().map(|&b| power_grid(b, levels)).collect();
        let mut strides = vec![0usize; dims.len()];
        let mut acc = 1usize;
        for (k, d) in dims.iter().enumerate() {
            strides[k] = acc;
            acc *= d.len();
        }
        Lattice { dims, strides, cells: acc }
    }

    /// Smallest lattice level >= x (conservative rounding of consumption).
    fn up(&self, dim: usize, x: f64) -> Option<usize> {
        let vals = &self.dims[dim];
        let slack = 1e-12 * (1.0 + vals[vals.len() - 1]);
        vals.iter().position(|&v| v >= x - slack)
    }

    /// Largest lattice level <= x (available leftover budget).
    fn down(&self, dim: usize, x: f64) -> Option<usize> {
        let vals = &self.dims[dim];
        let slack = 1e-12 * (1.0 + vals[vals.len() - 1]);
        vals.iter().rposition(|&v| v <= x + slack)
    }

    fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    fn unflatten(&self, mut cell: usize) -> Vec<usize> {
        let mut idx = vec![0usize; self.dims.len()];
        for k in (0..self.dims.len()).rev() {
            idx[k] = cell / self.strides[k];
            cell %= self.strides[k];
        }
        idx
    }
}

/// Consumption dimensions of a space: the DL budget (if any) followed by one
/// dimension per UL user (if any).
fn budget_dims(zs: &ZSpace) -> Vec<f64> {
    let mut v = Vec::new();
    if zs.has_dl_budget {
        v.push(zs.p_max_dl);
    }
    if zs.has_ul_budget {
        v.extend_from_slice(&zs.p_max_ul);
    }
    v
}

/// Iterates the feasible slot combos of one entry, calling `visit` with
/// (slots, consumption-by-dimension, utility).
fn scan_entry<F: FnMut(&[f64], &[f64], f64)>(
    zs: &ZSpace,
    entry_idx: usize,
    levels: usize,
    mut visit: F,
) {
    let e = &zs.entries[entry_idx];
    let n_dims = budget_dims(zs).len();
    let ul_dim_of = |user: usize| if zs.has_dl_budget { user } else { user - 1 };
    match zs.kind {
        crate::zspace::SpaceKind::Fd => {
            let dl_grid = power_grid(zs.p_max_dl, levels);
            let r_grid = power_grid(e.slot_cap[2], levels);
            let t_grid = power_grid(e.slot_cap[3], levels);
            let (r_user, t_user) = (e.tuple.r, e.tuple.t);
            let same_ul = r_user == t_user;
            let sic = e.sic.expect("fd entry");
            let mut slots = [0.0; 4];
            let mut cons = vec![0.0; n_dims];
            for &a in &dl_grid {
                for &b in &dl_grid {
                    if a + b > zs.p_max_dl * (1.0 + 1e-12) {
                        continue;
                    }
                    slots[0] = a;
                    slots[1] = b;
                    for &c in &r_grid {
                        for &d in &t_grid {
                            if same_ul && c + d > e.slot_cap[2] * (1.0 + 1e-12) {
                                continue;
                            }
                            if sic.c_r * c + sic.c_t * d + sic.c0 < 0.0 {
                                continue;
                            }
                            slots[2] = c;
                            slots[3] = d;
                            cons[0] = a + b;
                            for v in cons[1..].iter_mut() {
                                *v = 0.0;
                            }
                            cons[ul_dim_of(r_user)] += c;
                            cons[ul_dim_of(t_user)] += d;
                            visit(&slots, &cons, e.utility(&slots));
                        }
                    }
                }
            }
        }
        crate::zspace::SpaceKind::DlOnly => {
            let dl_grid = power_grid(zs.p_max_dl, levels);
            let mut cons = vec![0.0; n_dims];
            for &a in &dl_grid {
                for &b in &dl_grid {
                    if a + b > zs.p_max_dl * (1.0 + 1e-12) {
                        continue;
                    }
                    let slots = [a, b];
                    cons[0] = a + b;
                    visit(&slots, &cons, e.utility(&slots));
                }
            }
        }
        crate::zspace::SpaceKind::UlOnly => {
            let r_grid = power_grid(e.slot_cap[0], levels);
            let t_grid = power_grid(e.slot_cap[1], levels);
            let (r_user, t_user) = (e.tuple.r, e.tuple.t);
            let same_ul = r_user == t_user;
            let mut cons = vec![0.0; n_dims];
            for &c in &r_grid {
                for &d in &t_grid {
                    if same_ul && c + d > e.slot_cap[0] * (1.0 + 1e-12) {
                        continue;
                    }
                    let slots = [c, d];
                    for v in cons.iter_mut() {
                        *v = 0.0;
                    }
                    cons[ul_dim_of(r_user)] += c;
                    cons[ul_dim_of(t_user)] += d;
                    visit(&slots, &cons, e.utility(&slots));
                }
            }
        }
    }
}

/// Best utility per budget cell for one subcarrier, with the winning entry.
struct SubcarrierTable {
    /// (utility, entry or usize::MAX for the empty pick) per lattice cell.
    best: Vec<(f64, usize)>,
}

fn build_table(zs: &ZSpace, lat: &Lattice, subcarrier: usize, levels: usize) -> SubcarrierTable {
    let entries = &zs.by_subcarrier[subcarrier];
    // Per-entry utility tables in parallel, merged in entry order.
    let partials: Vec<Vec<f64>> = entries
        .par_iter()
        .map(|&eidx| {
            let mut table = vec![f64::NEG_INFINITY; lat.cells];
            let mut idx_buf = vec![0usize; lat.dims.len()];
            scan_entry(zs, eidx, levels, |_slots, cons, utility| {
                for (k, &c) in cons.iter().enumerate() {
                    match lat.up(k, c) {
                        Some(i) => idx_buf[k] = i,
                        None => return,
                    }
                }
                let cell = lat.flat(&idx_buf);
                if utility > table[cell] {
                    table[cell] = utility;
                }
            });
            table
        })
        .collect();

    let mut best = vec![(f64::NEG_INFINITY, usize::MAX); lat.cells];
    best[0] = (0.0, usize::MAX); // leaving the subcarrier idle
    for (slot, partial) in partials.iter().enumerate() {
        let eidx = entries[slot];
        for (cell, &u) in partial.iter().enumerate() {
            if u > best[cell].0 {
                best[cell] = (u, eidx);
            }
        }
    }
    // Monotone closure: more budget never hurts.
    for dim in 0..lat.dims.len() {
        let stride = lat.strides[dim];
        let len = lat.dims[dim].len();
        for cell in 0..lat.cells {
            let level = (cell / stride) % len;
            if level > 0 {
                let prev = cell - stride;
                if best[prev].0 > best[cell].0 {
                    best[cell] = best[prev];
                }
            }
        }
    }
    SubcarrierTable { best }
}

/// Finds a concrete combo of `entry` achieving at least `target` utility
/// within the budget cell `cell_idx` (exists by construction of the tables).
fn reconstruct(
    zs: &ZSpace,
    lat: &Lattice,
    entry: usize,
    cell_idx: &[usize],
    target: f64,
    levels: usize,
) -> Option<Vec<f64>> {
    let caps: Vec<f64> = cell_idx
        .iter()
        .enumerate()
        .map(|(k, &i)| lat.dims[k][i])
        .collect();
    let mut found: Option<(f64, Vec<f64>)> = None;
    scan_entry(zs, entry, levels, |slots, cons, utility| {
        if utility >= target - 1e-9 * (1.0 + target.abs()) {
            let fits = cons
                .iter()
                .zip(&caps)
                .all(|(&c, &cap)| c <= cap * (1.0 + 1e-12) + 1e-300);
            if fits && found.as_ref().is_none_or(|(u, _)| utility > *u) {
                found = Some((utility, slots.to_vec()));
            }
        }
    });
    found.map(|(_, s)| s)
}

/// Exhaustive schedule x power-grid search over the space.
pub fn oracle_optimize(zs: &ZSpace, levels: usize) -> Result<OracleOutcome> {
    if levels < 2 {
        return Err(Error::Domain("grid levels must be at least 2".into()));
    }
    if zs.dims.n_sc > ORACLE_MAX_SUBCARRIERS {
        return Err(Error::SizeGuard(format!(
            "oracle refuses N_F > {ORACLE_MAX_SUBCARRIERS}"
        )));
    }
    if zs.entries.len() > ORACLE_MAX_TUPLES {
        return Err(Error::SizeGuard(format!(
            "oracle refuses more than {ORACLE_MAX_TUPLES} tuples"
        )));
    }

    let lat = Lattice::new(&budget_dims(zs), levels);
    let tables: Vec<SubcarrierTable> =
        (0..zs.dims.n_sc).map(|i| build_table(zs, &lat, i, levels)).collect();
    let n_tables: usize = zs.by_subcarrier.iter().map(|v| v.len()).sum();

    let full_cell: Vec<usize> = lat.dims.iter().map(|d| d.len() - 1).collect();
    let (objective, cells) = match zs.dims.n_sc {
        1 => {
            let cell = lat.flat(&full_cell);
            (tables[0].best[cell].0, vec![full_cell.clone()])
        }
        2 => {
            // Split the budgets over complementary lattice cells.
            let budgets = budget_dims(zs);
            let mut best = f64::NEG_INFINITY;
            let mut best_cells = (vec![0usize; lat.dims.len()], vec![0usize; lat.dims.len()]);
            for cell in 0..lat.cells {
                let v1 = tables[0].best[cell].0;
                if !v1.is_finite() {
                    continue;
                }
                let idx = lat.unflatten(cell);
                let mut comp = Vec::with_capacity(idx.len());
                let mut ok = true;
                for (k, &i) in idx.iter().enumerate() {
                    match lat.down(k, budgets[k] - lat.dims[k][i]) {
                        Some(c) => comp.push(c),
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if !ok {
                    continue;
                }
                let v2 = tables[1].best[lat.flat(&comp)].0;
                if v2.is_finite() && v1 + v2 > best {
                    best = v1 + v2;
                    best_cells = (idx, comp);
                }
            }
            (best, vec![best_cells.0, best_cells.1])
        }
        _ => unreachable!("guarded above"),
    };

    // Reconstruct concrete picks from the winning cells.
    let mut picks = Vec::new();
    for (i, cell_idx) in cells.iter().enumerate() {
        let cell = lat.flat(cell_idx);
        let (value, entry) = tables[i].best[cell];
        if entry == usize::MAX || value <= 0.0 {
            continue;
        }
        let slots = reconstruct(zs, &lat, entry, cell_idx, value, levels).ok_or_else(|| {
            Error::Solver("oracle reconstruction failed to refind the achieving combo".into())
        })?;
        picks.push((entry, slots));
    }
    let objective = objective.max(0.0);
    Ok(OracleOutcome { picks, objective, tables: n_tables })
}
