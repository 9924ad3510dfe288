//! Projection onto the feasible rate region: parametric Dinkelbach runs over
//! candidate schedules.
//!
//! The projection of a vertex z is Phi(z) = lambda z with lambda the largest
//! scale at which lambda z stays achievable. Membership requires a schedule
//! (at most one tuple per subcarrier): inactive tuples have ratio f/g = 1, so
//! a schedule sigma caps lambda at 1/max(z_d over inactive d), while its
//! active coordinates contribute the fractional program
//!
//!   max over slot powers in P_sigma of min_d f_d / (z_d g_d),
//!
//! solved by the Dinkelbach iteration: repeatedly maximize the epigraph LP
//! min_d {f_d - lambda z_d g_d} and update lambda to the achieved min ratio,
//! until the LP value drops below delta. lambda(z) is the best of the
//! per-schedule values; the winning run also yields the projecting slot
//! powers. The returned lambda is always achieved by a concrete allocation.

use crate::allocation::TildeAllocation;
use crate::channel::ProblemInstance;
use crate::error::{Error, Result};
use crate::lp::{solve_lp, LinearProgram, LpStatus, Sense};
use crate::trace::{TraceEvent, TraceSink};
use crate::zspace::ZSpace;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

/// Inner iteration cap of one Dinkelbach run.
pub const MAX_DINKELBACH_ITERS: usize = 50;

/// Hard guard on the schedule enumeration size.
const MAX_SCHEDULES: usize = 100_000;

#[derive(Debug, Clone)]
struct SigmaInfo {
    /// Chosen allowed-entry index per subcarrier.
    choice: Vec<Option<usize>>,
    /// Active entries in subcarrier order.
    active_entries: Vec<usize>,
    /// Active z coordinates (0-based), grouped by entry.
    active_coords: Vec<usize>,
    active_mask: Vec<bool>,
}

/// Result of one projection.
#[derive(Debug, Clone)]
pub struct Projection {
    pub lambda: f64,
    /// lambda * z.
    pub phi: Vec<f64>,
    /// Winning schedule: allowed-entry index per subcarrier.
    pub sigma: Vec<Option<usize>>,
    /// Achieving slot powers of the active entries.
    pub picks: Vec<(usize, Vec<f64>)>,
    /// Highest-utility allocation among all schedules evaluated in this
    /// projection (incumbent fodder; equals `picks` when the winner is also
    /// the best achiever).
    pub best_picks: Vec<(usize, Vec<f64>)>,
    pub best_value: f64,
}

type DinkCache = HashMap<(u32, Vec<u64>), Option<Arc<DinkResult>>>;

#[derive(Debug)]
struct DinkResult {
    lambda: f64,
    x: Vec<f64>,
    /// True when the run stopped early at the inactive-coordinate cap, so
    /// `lambda` is only a lower bound on the unconstrained value.
    capped: bool,
}

/// Reusable projection state for one vertex space: the schedule enumeration
/// and a cache of Dinkelbach runs keyed by (schedule, active z coordinates).
/// Cache hits reproduce earlier results exactly, so caching never changes
/// values, only cost.
pub struct ProjectionEngine<'a> {
    pub zs: &'a ZSpace,
    pub delta: f64,
    sigmas: Vec<SigmaInfo>,
    cache: Mutex<DinkCache>,
}

impl<'a> ProjectionEngine<'a> {
    pub fn new(zs: &'a ZSpace, delta: f64) -> Result<Self> {
        let mut count: usize = 1;
        for list in &zs.by_subcarrier {
            count = count.saturating_mul(list.len() + 1);
            if count > MAX_SCHEDULES {
                return Err(Error::SizeGuard(format!(
                    "schedule enumeration exceeds {MAX_SCHEDULES}"
                )));
            }
        }
        // Cartesian product over subcarriers, lexicographic, None first.
        let mut sigmas = Vec::with_capacity(count);
        let mut cursor = vec![0usize; zs.dims.n_sc];
        loop {
            let choice: Vec<Option<usize>> = cursor
                .iter()
                .zip(&zs.by_subcarrier)
                .map(|(&c, list)| if c == 0 { None } else { Some(list[c - 1]) })
                .collect();
            let mut active_entries = Vec::new();
            let mut active_coords = Vec::new();
            let mut active_mask = vec![false; zs.coord_count()];
            for e in choice.iter().flatten() {
                active_entries.push(*e);
                for q in 0..zs.n_quadrants {
                    let d = zs.coord(q, *e);
                    active_coords.push(d);
                    active_mask[d] = true;
                }
            }
            sigmas.push(SigmaInfo { choice, active_entries, active_coords, active_mask });
            // Advance the mixed-radix counter.
            let mut pos = zs.dims.n_sc;
            loop {
                if pos == 0 {
                    return Ok(ProjectionEngine {
                        zs,
                        delta,
                        sigmas,
                        cache: Mutex::new(HashMap::new()),
                    });
                }
                pos -= 1;
                if cursor[pos] < zs.by_subcarrier[pos].len() {
                    cursor[pos] += 1;
                    for c in cursor.iter_mut().skip(pos + 1) {
                        *c = 0;
                    }
                    break;
                }
            }
        }
    }

    /// Cap on lambda from the inactive coordinates of sigma.
    fn inactive_cap(&self, sigma: &SigmaInfo, z: &[f64]) -> f64 {
        let mut zmax: f64 = 0.0;
        for (d, &active) in sigma.active_mask.iter().enumerate() {
            if !active && z[d] > zmax {
                zmax = z[d];
            }
        }
        if zmax > 0.0 {
            1.0 / zmax
        } else {
            f64::INFINITY
        }
    }

    /// Cheap upper bound on the active fractional program.
    fn active_bound(&self, sigma: &SigmaInfo, z: &[f64]) -> f64 {
        let mut bound = f64::INFINITY;
        for &e in &sigma.active_entries {
            let entry = &self.zs.entries[e];
            for q in 0..self.zs.n_quadrants {
                let d = self.zs.coord(q, e);
                bound = bound.min(entry.f_cap[q] / z[d]);
            }
        }
        bound
    }

    /// Utility of a Dinkelbach point in the space's model.
    fn x_utility(&self, sigma: &SigmaInfo, x: &[f64]) -> f64 {
        let s = self.zs.n_slots;
        sigma
            .active_entries
            .iter()
            .enumerate()
            .map(|(k, &e)| self.zs.entries[e].utility(&x[k * s..(k + 1) * s]))
            .sum()
    }

    fn picks_of(&self, sigma: &SigmaInfo, x: &[f64]) -> Vec<(usize, Vec<f64>)> {
        let s = self.zs.n_slots;
        sigma
            .active_entries
            .iter()
            .enumerate()
            .map(|(k, &e)| (e, x[k * s..(k + 1) * s].to_vec()))
            .collect()
    }

    /// Projects z. The best lambda over all schedules, with the achieving
    /// allocation; per-schedule Dinkelbach runs go to the trace sink.
    /// Lambda ties (common while vertex coordinates still share values)
    /// break toward the higher-utility allocation, then enumeration order.
    pub fn project(&self, z: &[f64], trace: &dyn TraceSink) -> Result<Projection> {
        debug_assert_eq!(z.len(), self.zs.coord_count());
        let mut best: Option<(f64, f64, usize, Vec<f64>)> = None; // (lambda, util, sigma, x)
        let mut best_value = 0.0;
        let mut best_picks: Vec<(usize, Vec<f64>)> = Vec::new();
        for (si, sigma) in self.sigmas.iter().enumerate() {
            let cap = self.inactive_cap(sigma, z);
            if let Some((best_l, _, _, _)) = best {
                let ub = cap.min(self.active_bound(sigma, z));
                if ub <= best_l {
                    continue;
                }
            }
            let dink = self.dinkelbach(si as u32, sigma, z, cap, trace)?;
            let Some(dink) = dink else { continue };
            let lambda = dink.lambda.min(cap);
            let util = self.x_utility(sigma, &dink.x);
            if util > best_value {
                best_value = util;
                best_picks = self.picks_of(sigma, &dink.x);
            }
            let replace = match &best {
                Some((best_l, best_u, _, _)) => {
                    lambda > *best_l || (lambda == *best_l && util > *best_u)
                }
                None => true,
            };
            if replace {
                best = Some((lambda, util, si, dink.x.clone()));
            }
        }
        let (lambda, _, si, x) = best.ok_or_else(|| {
            Error::Solver("projection failed: no feasible schedule (empty schedule missing?)".into())
        })?;
        let sigma = &self.sigmas[si];
        let phi: Vec<f64> = z.iter().map(|&v| lambda * v).collect();
        let picks = self.picks_of(sigma, &x);
        Ok(Projection { lambda, phi, sigma: sigma.choice.clone(), picks, best_picks, best_value })
    }

    /// Dinkelbach over the active coordinates of sigma (cached). `cap` only
    /// affects the logged residual, not the iteration itself. Returns None
    /// when the schedule's constraint set is empty.
    fn dinkelbach(
        &self,
        sigma_idx: u32,
        sigma: &SigmaInfo,
        z: &[f64],
        cap: f64,
        trace: &dyn TraceSink,
    ) -> Result<Option<Arc<DinkResult>>> {
        if sigma.active_entries.is_empty() {
            return Ok(Some(Arc::new(DinkResult {
                lambda: f64::INFINITY,
                x: Vec::new(),
                capped: false,
            })));
        }
        let key = (
            sigma_idx,
            sigma.active_coords.iter().map(|&d| z[d].to_bits()).collect::<Vec<u64>>(),
        );
        if let Some(hit) = self.cache.lock().expect("cache poisoned").get(&key) {
            // A capped run is reusable only when the stored lambda already
            // clears the current cap.
            match hit {
                Some(r) if r.capped && r.lambda < cap => {}
                _ => return Ok(hit.clone()),
            }
        }

        let mut lambdas = vec![0.0];
        let mut lambda = 0.0;
        let mut x_star: Option<Vec<f64>> = None;
        let mut lp_iters = 0;
        let mut result = None;
        for _ in 0..MAX_DINKELBACH_ITERS {
            let lp = self.build_sigma_lp(sigma, z, lambda);
            let sol = solve_lp(&lp)?;
            lp_iters += sol.iterations;
            match sol.status {
                LpStatus::Optimal => {}
                LpStatus::Infeasible => {
                    // The schedule cannot satisfy its SIC rows within budget.
                    self.cache.lock().expect("cache poisoned").insert(key, None);
                    return Ok(None);
                }
                LpStatus::Unbounded => {
                    return Err(Error::Solver("epigraph LP unbounded".into()));
                }
            }
            let tau = sol.value;
            let x = sol.x[..sol.x.len() - 1].to_vec(); // strip tau
            let (next, ref_zg) = self.min_ratio(sigma, z, &x);
            // Residual in lambda units: the epigraph value divided by the
            // z*g magnitude at the binding ratio, which bounds the remaining
            // lambda increment.
            let residual = tau / ref_zg;
            if residual <= self.delta && x_star.is_some() {
                let residual = if cap < lambda { 0.0 } else { residual };
                trace.record(&TraceEvent::Projection { lambdas: lambdas.clone(), residual, lp_iters });
                result = Some(Arc::new(DinkResult { lambda, x: x_star.unwrap(), capped: false }));
                break;
            }
            debug_assert!(next >= lambda - 1e-9, "lambda sequence must be nondecreasing");
            lambdas.push(next);
            lambda = next;
            x_star = Some(x);
            if lambda >= cap {
                // The inactive coordinates cap the projection below this
                // achieved value; the exact unconstrained optimum is moot.
                trace.record(&TraceEvent::Projection {
                    lambdas: lambdas.clone(),
                    residual: 0.0,
                    lp_iters,
                });
                result = Some(Arc::new(DinkResult { lambda, x: x_star.clone().unwrap(), capped: true }));
                break;
            }
        }
        let result = match result {
            Some(r) => r,
            None => {
                return Err(Error::Solver(format!(
                    "projection did not converge within {MAX_DINKELBACH_ITERS} iterations"
                )))
            }
        };
        self.cache.lock().expect("cache poisoned").insert(key, Some(result.clone()));
        Ok(Some(result))
    }

    /// min over active coordinates of f_d(x) / (z_d g_d(x)), together with
    /// the z_d g_d value at the binding coordinate.
    fn min_ratio(&self, sigma: &SigmaInfo, z: &[f64], x: &[f64]) -> (f64, f64) {
        let s = self.zs.n_slots;
        let mut best = f64::INFINITY;
        let mut ref_zg = 1.0;
        for (k, &e) in sigma.active_entries.iter().enumerate() {
            let slots = &x[k * s..(k + 1) * s];
            let entry = &self.zs.entries[e];
            for q in 0..self.zs.n_quadrants {
                let d = self.zs.coord(q, e);
                let zg = z[d] * entry.forms[q].g_at(slots);
                let ratio = entry.forms[q].f_at(slots) / zg;
                if ratio < best {
                    best = ratio;
                    ref_zg = zg;
                }
            }
        }
        (best, ref_zg)
    }

    /// Epigraph LP of one schedule at a given lambda: variables are the
    /// active entries' slot powers plus tau; rows are the active epigraph
    /// rows, the active SIC rows, and the budget rows.
    fn build_sigma_lp(&self, sigma: &SigmaInfo, z: &[f64], lambda: f64) -> LinearProgram {
        let zs = self.zs;
        let s = zs.n_slots;
        let n_x = sigma.active_entries.len() * s;
        let n = n_x + 1; // + tau
        let mut a = Vec::new();
        let mut b = Vec::new();

        let mut tau_lo = f64::INFINITY;
        for (k, &e) in sigma.active_entries.iter().enumerate() {
            let entry = &zs.entries[e];
            for q in 0..zs.n_quadrants {
                let d = zs.coord(q, e);
                let lz = lambda * z[d];
                let mut row = vec![0.0; n];
                for slot in 0..s {
                    row[k * s + slot] = -(entry.forms[q].f[slot] - lz * entry.forms[q].g[slot]);
                }
                row[n_x] = 1.0;
                a.push(row);
                b.push(1.0 - lz);
                let g_cap = entry.forms[q].g_at(&entry.slot_cap);
                tau_lo = tau_lo.min(1.0 - lz * g_cap);
            }
            if let Some(sic) = entry.sic {
                let mut row = vec![0.0; n];
                row[k * s + 2] = -sic.c_r;
                row[k * s + 3] = -sic.c_t;
                a.push(row);
                b.push(sic.c0);
            }
        }
        if zs.has_dl_budget {
            let mut row = vec![0.0; n];
            for (k, &e) in sigma.active_entries.iter().enumerate() {
                for (slot, &(is_dl, _)) in zs.entries[e].slot_user.iter().enumerate() {
                    if is_dl {
                        row[k * s + slot] = 1.0;
                    }
                }
            }
            a.push(row);
            b.push(zs.p_max_dl);
        }
        if zs.has_ul_budget {
            for user in 1..=zs.dims.n_ul {
                let mut row = vec![0.0; n];
                let mut any = false;
                for (k, &e) in sigma.active_entries.iter().enumerate() {
                    for (slot, &(is_dl, u)) in zs.entries[e].slot_user.iter().enumerate() {
                        if !is_dl && u == user {
                            row[k * s + slot] = 1.0;
                            any = true;
                        }
                    }
                }
                if any {
                    a.push(row);
                    b.push(zs.p_max_ul[user - 1]);
                }
            }
        }

        let mut lo = vec![0.0; n];
        let mut hi = Vec::with_capacity(n);
        for &e in &sigma.active_entries {
            hi.extend_from_slice(&zs.entries[e].slot_cap);
        }
        hi.push(f64::INFINITY);
        lo[n_x] = (tau_lo - 1.0).min(0.0);
        let mut c = vec![0.0; n];
        c[n_x] = 1.0;
        LinearProgram { sense: Sense::Maximize, c, a, b, lo, hi }
    }
}

/// Epigraph LP of the unrestricted slot-power set (every tuple's variables
/// free simultaneously, every SIC row included). Variables: four slots per
/// tuple in grid order, then tau. Rows: one epigraph row per coordinate in
/// block order, the SIC row of every tuple, the DL budget, and one UL budget
/// row per user.
pub fn build_dinkelbach_lp(inst: &ProblemInstance, z: &[f64], lambda: f64) -> Result<LinearProgram> {
    if lambda < 0.0 {
        return Err(Error::Domain(format!("lambda must be nonnegative, got {lambda}")));
    }
    let zs = ZSpace::fd(inst, false);
    let d_total = zs.coord_count();
    if z.len() != d_total {
        return Err(Error::Domain(format!("z has {} coordinates, expected {d_total}", z.len())));
    }
    if z.iter().any(|&v| v < 1.0) {
        return Err(Error::Domain("vertex coordinates must be >= 1".into()));
    }
    let t_count = zs.entries.len();
    let s = zs.n_slots;
    let n = t_count * s + 1;
    let mut a = Vec::with_capacity(d_total + t_count + 1 + zs.dims.n_ul);
    let mut b = Vec::with_capacity(a.capacity());

    let mut tau_lo = f64::INFINITY;
    for q in 0..zs.n_quadrants {
        for (e, entry) in zs.entries.iter().enumerate() {
            let d = zs.coord(q, e);
            let lz = lambda * z[d];
            let mut row = vec![0.0; n];
            for slot in 0..s {
                row[e * s + slot] = -(entry.forms[q].f[slot] - lz * entry.forms[q].g[slot]);
            }
            row[n - 1] = 1.0;
            a.push(row);
            b.push(1.0 - lz);
            tau_lo = tau_lo.min(1.0 - lz * entry.forms[q].g_at(&entry.slot_cap));
        }
    }
    for (e, entry) in zs.entries.iter().enumerate() {
        let sic = entry.sic.expect("fd entries carry a SIC row");
        let mut row = vec![0.0; n];
        row[e * s + 2] = -sic.c_r;
        row[e * s + 3] = -sic.c_t;
        a.push(row);
        b.push(sic.c0);
    }
    {
        let mut row = vec![0.0; n];
        for e in 0..t_count {
            row[e * s] = 1.0;
            row[e * s + 1] = 1.0;
        }
        a.push(row);
        b.push(zs.p_max_dl);
    }
    for user in 1..=zs.dims.n_ul {
        let mut row = vec![0.0; n];
        for (e, entry) in zs.entries.iter().enumerate() {
            if entry.tuple.r == user {
                row[e * s + 2] = 1.0;
            }
            if entry.tuple.t == user {
                row[e * s + 3] += 1.0;
            }
        }
        a.push(row);
        b.push(zs.p_max_ul[user - 1]);
    }

    let mut lo = vec![0.0; n];
    let mut hi = Vec::with_capacity(n);
    for entry in &zs.entries {
        hi.extend_from_slice(&entry.slot_cap);
    }
    hi.push(f64::INFINITY);
    lo[n - 1] = (tau_lo - 1.0).min(0.0);
    let mut c = vec![0.0; n];
    c[n - 1] = 1.0;
    Ok(LinearProgram { sense: Sense::Maximize, c, a, b, lo, hi })
}

/// Projects a vertex of the full-duplex space and returns the scale, the
/// projected point, and the achieving lifted allocation.
pub fn project_fd(
    inst: &ProblemInstance,
    z: &[f64],
    trace: &dyn TraceSink,
) -> Result<(f64, Vec<f64>, TildeAllocation, Projection)> {
    let zs = ZSpace::fd(inst, false);
    let engine = ProjectionEngine::new(&zs, inst.delta)?;
    let proj = engine.project(z, trace)?;
    let mut tilde = TildeAllocation::zeros(inst.dims);
    for (e, slots) in &proj.picks {
        let delta = zs.entries[*e].delta;
        tilde.set_slots(delta, slots[0], slots[1], slots[2], slots[3]);
    }
    Ok((proj.lambda, proj.phi.clone(), tilde, proj))
}
