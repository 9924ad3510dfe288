//! Vertex-space description of one allocation problem.
//!
//! The monotonic solvers work on a vector z with one coordinate per
//! (quadrant, tuple) pair, where each coordinate is bounded by an affine
//! ratio f_d/g_d of the tuple's slot powers. This module materializes that
//! description for the three problem families:
//!
//! - `Fd`: the full-duplex problem, four quadrants per tuple and four slot
//!   powers [p_m, p_n, q_r, q_t], with the SIC margin row and both budgets;
//! - `DlOnly`: the half-duplex DL subproblem, quadrants [u, v] over slots
//!   [p_m, p_n], no UL interference or SI, SIC reduces to the gain ordering
//!   H_n >= H_m;
//! - `UlOnly`: the half-duplex UL subproblem, quadrants [zeta, xi] over
//!   slots [q_r, q_t] with the SI term removed.
//!
//! Restricting to orthogonal tuples (m = n, r = t) yields the OMA variants.
//! Tuples whose SIC row can never be satisfied within the UL budgets are
//! marked disallowed: they can never carry power, so their coordinates pin
//! to 1 in every vertex.

use crate::allocation::PowerAllocation;
use crate::channel::ProblemInstance;
use crate::error::{Error, Result};
use crate::objective::{quad_form, quad_weight, sic_coefficients};
use crate::tuples::{Dims, Quadrant, Schedule, TupleId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    Fd,
    DlOnly,
    UlOnly,
}

/// Affine numerator/denominator over this space's slot powers.
#[derive(Debug, Clone)]
pub struct SlotForm {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
}

impl SlotForm {
    #[inline]
    pub fn f_at(&self, x: &[f64]) -> f64 {
        1.0 + self.f.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    #[inline]
    pub fn g_at(&self, x: &[f64]) -> f64 {
        1.0 + self.g.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    #[inline]
    pub fn ratio(&self, x: &[f64]) -> f64 {
        self.f_at(x) / self.g_at(x)
    }
}

/// SIC margin row c_r q_r + c_t q_t + c0 >= 0 over the UL slot powers.
#[derive(Debug, Clone, Copy)]
pub struct SicRow {
    pub c_r: f64,
    pub c_t: f64,
    pub c0: f64,
}

/// One tuple of the space's grid.
#[derive(Debug, Clone)]
pub struct Entry {
    pub tuple: TupleId,
    /// 1-based position in this space's row-major grid.
    pub delta: usize,
    /// Restriction filter and admissibility combined.
    pub allowed: bool,
    /// Per-quadrant affine forms over the slot powers.
    pub forms: Vec<SlotForm>,
    /// Per-quadrant weights (w_m, w_n, mu_r, mu_t pattern of the space).
    pub chi: Vec<f64>,
    /// Initial-vertex coordinates (1 + gain * budget per quadrant).
    pub init: Vec<f64>,
    /// Per-slot budget caps (DL slots: BS budget; UL slots: owner's budget).
    pub slot_cap: Vec<f64>,
    /// Per-quadrant f value at the slot caps, for cheap ratio bounds.
    pub f_cap: Vec<f64>,
    /// SIC row, present only in the Fd space for tuples with two DL users.
    pub sic: Option<SicRow>,
    /// (is_dl, user) per quadrant, for per-user rate accounting.
    pub quad_user: Vec<(bool, usize)>,
    /// (is_dl, user) per slot, for budget membership and power assembly.
    pub slot_user: Vec<(bool, usize)>,
}

impl Entry {
    /// Weighted utility of this tuple at the given slot powers.
    pub fn utility(&self, slots: &[f64]) -> f64 {
        self.forms
            .iter()
            .zip(&self.chi)
            .map(|(form, &w)| if w == 0.0 { 0.0 } else { w * form.ratio(slots).log2() })
            .sum()
    }
}

/// Full problem description over the tuple grid of one space kind.
#[derive(Debug, Clone)]
pub struct ZSpace {
    pub kind: SpaceKind,
    pub dims: Dims,
    pub n_quadrants: usize,
    pub n_slots: usize,
    /// Tuples in the grid (allowed or not); length = grid size.
    pub entries: Vec<Entry>,
    /// Allowed entry indices per subcarrier (0-based entry positions).
    pub by_subcarrier: Vec<Vec<usize>>,
    pub has_dl_budget: bool,
    pub has_ul_budget: bool,
    pub p_max_dl: f64,
    pub p_max_ul: Vec<f64>,
}

impl ZSpace {
    /// Full-duplex space; `oma` restricts to orthogonal tuples.
    pub fn fd(inst: &ProblemInstance, oma: bool) -> Self {
        let dims = inst.dims;
        let mut entries = Vec::with_capacity(dims.tuple_count());
        for delta in 1..=dims.tuple_count() {
            let tuple = crate::tuples::tuple_from_index(delta, dims).expect("delta in range");
            let restricted = oma && !tuple.is_oma();
            let (c_r, c_t, c0) = sic_coefficients(inst, &tuple);
            let p_r = inst.p_max_ul[tuple.r - 1];
            let p_t = inst.p_max_ul[tuple.t - 1];
            // The SIC row is satisfiable iff pushing the positive
            // coefficients to the budget caps reaches zero.
            let admissible = c0 >= 0.0 || c_r.max(0.0) * p_r + c_t.max(0.0) * p_t + c0 >= 0.0;
            let slot_cap = vec![inst.p_max_dl, inst.p_max_dl, p_r, p_t];
            let mut forms = Vec::with_capacity(4);
            let mut chi = Vec::with_capacity(4);
            let mut init = Vec::with_capacity(4);
            let mut f_cap = Vec::with_capacity(4);
            for &q in &Quadrant::ALL {
                let qf = quad_form(inst, &tuple, q);
                let form = SlotForm { f: qf.f_coef.to_vec(), g: qf.g_coef.to_vec() };
                f_cap.push(form.f_at(&slot_cap));
                forms.push(form);
                chi.push(quad_weight(inst, &tuple, q));
            }
            init.push(1.0 + inst.h(tuple.i, tuple.m) * inst.p_max_dl);
            init.push(1.0 + inst.h(tuple.i, tuple.n) * inst.p_max_dl);
            init.push(1.0 + inst.g(tuple.i, tuple.r) * p_r);
            init.push(1.0 + inst.g(tuple.i, tuple.t) * p_t);
            entries.push(Entry {
                tuple,
                delta,
                allowed: !restricted && admissible,
                forms,
                chi,
                init,
                slot_cap,
                f_cap,
                sic: Some(SicRow { c_r, c_t, c0 }),
                quad_user: vec![
                    (true, tuple.m),
                    (true, tuple.n),
                    (false, tuple.r),
                    (false, tuple.t),
                ],
                slot_user: vec![
                    (true, tuple.m),
                    (true, tuple.n),
                    (false, tuple.r),
                    (false, tuple.t),
                ],
            });
        }
        Self::finish(SpaceKind::Fd, inst, dims, 4, 4, true, true, entries)
    }

    /// Half-duplex DL subproblem over (i, m, n) tuples; `oma` keeps m = n.
    /// SIC admissibility is the per-subcarrier gain ordering.
    pub fn dl_only(inst: &ProblemInstance, oma: bool) -> Self {
        let dims = inst.dims;
        let k = dims.n_dl;
        let mut entries = Vec::new();
        for i in 1..=dims.n_sc {
            for m in 1..=k {
                for n in 1..=k {
                    let delta = ((i - 1) * k + (m - 1)) * k + n;
                    let tuple = TupleId { i, m, n, r: 1, t: 1 };
                    let restricted = oma && m != n;
                    let admissible = inst.h(i, n) >= inst.h(i, m);
                    let h_m = inst.h(i, m);
                    let h_n = inst.h(i, n);
                    let slot_cap = vec![inst.p_max_dl, inst.p_max_dl];
                    let forms = vec![
                        SlotForm { f: vec![h_m, h_m], g: vec![0.0, h_m] },
                        SlotForm { f: vec![0.0, h_n], g: vec![0.0, 0.0] },
                    ];
                    let f_cap = forms.iter().map(|f| f.f_at(&slot_cap)).collect();
                    entries.push(Entry {
                        tuple,
                        delta,
                        allowed: !restricted && admissible,
                        chi: vec![inst.w[m - 1], inst.w[n - 1]],
                        init: vec![1.0 + h_m * inst.p_max_dl, 1.0 + h_n * inst.p_max_dl],
                        slot_cap,
                        f_cap,
                        forms,
                        sic: None,
                        quad_user: vec![(true, m), (true, n)],
                        slot_user: vec![(true, m), (true, n)],
                    });
                }
            }
        }
        Self::finish(SpaceKind::DlOnly, inst, dims, 2, 2, true, false, entries)
    }

    /// Half-duplex UL subproblem over (i, r, t) tuples with the SI removed;
    /// `oma` keeps r = t.
    pub fn ul_only(inst: &ProblemInstance, oma: bool) -> Self {
        let dims = inst.dims;
        let j = dims.n_ul;
        let mut entries = Vec::new();
        for i in 1..=dims.n_sc {
            for r in 1..=j {
                for t in 1..=j {
                    let delta = ((i - 1) * j + (r - 1)) * j + t;
                    let tuple = TupleId { i, m: 1, n: 1, r, t };
                    let restricted = oma && r != t;
                    let g_r = inst.g(i, r);
                    let g_t = inst.g(i, t);
                    let slot_cap = vec![inst.p_max_ul[r - 1], inst.p_max_ul[t - 1]];
                    let forms = vec![
                        SlotForm { f: vec![g_r, g_t], g: vec![0.0, g_t] },
                        SlotForm { f: vec![0.0, g_t], g: vec![0.0, 0.0] },
                    ];
                    let f_cap = forms.iter().map(|f| f.f_at(&slot_cap)).collect();
                    entries.push(Entry {
                        tuple,
                        delta,
                        allowed: !restricted,
                        chi: vec![inst.mu[r - 1], inst.mu[t - 1]],
                        init: vec![
                            1.0 + g_r * inst.p_max_ul[r - 1],
                            1.0 + g_t * inst.p_max_ul[t - 1],
                        ],
                        slot_cap,
                        f_cap,
                        forms,
                        sic: None,
                        quad_user: vec![(false, r), (false, t)],
                        slot_user: vec![(false, r), (false, t)],
                    });
                }
            }
        }
        Self::finish(SpaceKind::UlOnly, inst, dims, 2, 2, false, true, entries)
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        kind: SpaceKind,
        inst: &ProblemInstance,
        dims: Dims,
        n_quadrants: usize,
        n_slots: usize,
        has_dl_budget: bool,
        has_ul_budget: bool,
        entries: Vec<Entry>,
    ) -> Self {
        let mut by_subcarrier = vec![Vec::new(); dims.n_sc];
        for (idx, e) in entries.iter().enumerate() {
            if e.allowed {
                by_subcarrier[e.tuple.i - 1].push(idx);
            }
        }
        ZSpace {
            kind,
            dims,
            n_quadrants,
            n_slots,
            entries,
            by_subcarrier,
            has_dl_budget,
            has_ul_budget,
            p_max_dl: inst.p_max_dl,
            p_max_ul: inst.p_max_ul.clone(),
        }
    }

    /// Restriction of the space to one tuple selection: only the listed
    /// entries stay allowed (others keep their coordinates pinned at 1 in
    /// the initial vertex and never enter a schedule).
    pub fn restrict_to(&self, keep: &[usize]) -> ZSpace {
        let mut out = self.clone();
        for (idx, e) in out.entries.iter_mut().enumerate() {
            e.allowed = e.allowed && keep.contains(&idx);
        }
        let mut by_subcarrier = vec![Vec::new(); out.dims.n_sc];
        for (idx, e) in out.entries.iter().enumerate() {
            if e.allowed {
                by_subcarrier[e.tuple.i - 1].push(idx);
            }
        }
        out.by_subcarrier = by_subcarrier;
        out
    }

    /// Number of z coordinates.
    pub fn coord_count(&self) -> usize {
        self.n_quadrants * self.entries.len()
    }

    /// 0-based coordinate of (quadrant q, entry idx): blockwise layout, all
    /// first-quadrant values, then all second-quadrant values, and so on.
    #[inline]
    pub fn coord(&self, q: usize, entry_idx: usize) -> usize {
        q * self.entries.len() + entry_idx
    }

    /// Splits a coordinate back into (quadrant, entry index).
    #[inline]
    pub fn coord_split(&self, coord: usize) -> (usize, usize) {
        (coord / self.entries.len(), coord % self.entries.len())
    }

    /// Initial polyblock vertex: per-quadrant 1 + gain * budget on allowed
    /// tuples, 1 on disallowed ones (their ratio is identically 1).
    /// Weightless coordinates also start collapsed at 1: they contribute
    /// nothing to the objective, and clamping them onto the unit slice never
    /// excludes a better feasible point of the normal set.
    pub fn z_init(&self) -> Vec<f64> {
        let mut z = vec![1.0; self.coord_count()];
        for (idx, e) in self.entries.iter().enumerate() {
            if e.allowed {
                for q in 0..self.n_quadrants {
                    if e.chi[q] > 0.0 {
                        z[self.coord(q, idx)] = e.init[q];
                    }
                }
            }
        }
        z
    }

    /// Coordinate weights chi_d.
    pub fn chi_vec(&self) -> Vec<f64> {
        let mut chi = vec![0.0; self.coord_count()];
        for (idx, e) in self.entries.iter().enumerate() {
            for q in 0..self.n_quadrants {
                chi[self.coord(q, idx)] = e.chi[q];
            }
        }
        chi
    }

    /// Weighted objective of a z point: sum chi_d log2(max(z_d, 1)).
    pub fn z_objective(&self, z: &[f64]) -> f64 {
        let mut total = 0.0;
        for (idx, e) in self.entries.iter().enumerate() {
            for q in 0..self.n_quadrants {
                let v = z[self.coord(q, idx)];
                if e.chi[q] > 0.0 && v > 1.0 {
                    total += e.chi[q] * v.log2();
                }
            }
        }
        total
    }

    /// Builds the per-user allocation for one selected tuple per subcarrier.
    /// Shared-slot users (m = n or r = t) receive the average of their two
    /// slots so their per-slot sum is preserved.
    pub fn assemble(
        &self,
        picks: &[(usize, Vec<f64>)],
    ) -> Result<(Schedule, PowerAllocation)> {
        let mut sched = Schedule::empty(self.dims.n_sc);
        let mut alloc = PowerAllocation::zeros(self.dims);
        let mut seen = vec![false; self.dims.n_sc];
        for (entry_idx, slots) in picks {
            let e = &self.entries[*entry_idx];
            if seen[e.tuple.i - 1] {
                return Err(Error::Solver(format!(
                    "two tuples picked on subcarrier {}",
                    e.tuple.i
                )));
            }
            seen[e.tuple.i - 1] = true;
            sched.set(e.tuple)?;
            let mut pairs: Vec<(bool, usize, f64)> = Vec::with_capacity(self.n_slots);
            for (s, &(is_dl, user)) in e.slot_user.iter().enumerate() {
                pairs.push((is_dl, user, slots[s]));
            }
            // Average shared slots onto the user variable.
            for (is_dl, user, _) in pairs.iter() {
                let total: f64 = pairs
                    .iter()
                    .filter(|(d, u, _)| d == is_dl && u == user)
                    .map(|(_, _, v)| v)
                    .sum();
                let count = pairs.iter().filter(|(d, u, _)| d == is_dl && u == user).count();
                let value = total / count as f64;
                if *is_dl {
                    alloc.set_p(e.tuple.i, *user, value.max(0.0));
                } else {
                    alloc.set_q(e.tuple.i, *user, value.max(0.0));
                }
            }
        }
        Ok((sched, alloc))
    }

    /// Per-user unweighted rates of a set of picks, in this space's model.
    pub fn pick_rates(&self, picks: &[(usize, Vec<f64>)]) -> (Vec<f64>, Vec<f64>) {
        let mut dl = vec![0.0; self.dims.n_dl];
        let mut ul = vec![0.0; self.dims.n_ul];
        for (entry_idx, slots) in picks {
            let e = &self.entries[*entry_idx];
            for (q, &(is_dl, user)) in e.quad_user.iter().enumerate() {
                let rate = e.forms[q].ratio(slots).log2();
                if is_dl {
                    dl[user - 1] += rate;
                } else {
                    ul[user - 1] += rate;
                }
            }
        }
        (dl, ul)
    }

    /// Total weighted utility of a set of picks.
    pub fn pick_objective(&self, picks: &[(usize, Vec<f64>)]) -> f64 {
        picks.iter().map(|(idx, slots)| self.entries[*idx].utility(slots)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{subcarrier_utility, tuple_utility_slots};
    use crate::tuples::Dims;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_instance(seed: u64) -> ProblemInstance {
        let dims = Dims::new(2, 2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |n: usize| (0..n).map(|_| rng.gen_range(0.05..4.0)).collect::<Vec<f64>>();
        let h = draw(4);
        let g = draw(4);
        let cci = draw(8);
        let l_si = draw(2);
        ProblemInstance::from_parts(
            dims,
            h,
            g,
            cci,
            l_si,
            vec![1.0, 0.8],
            vec![0.9, 1.0],
            3.0,
            vec![1.5, 2.0],
            0.2,
        )
        .unwrap()
    }

    #[test]
    fn fd_space_covers_full_grid() {
        let inst = random_instance(1);
        let zs = ZSpace::fd(&inst, false);
        assert_eq!(zs.entries.len(), inst.dims.tuple_count());
        assert_eq!(zs.coord_count(), inst.dims.z_dim());
        // Every entry is either allowed or inadmissible via the SIC bound.
        for e in &zs.entries {
            let sic = e.sic.unwrap();
            if !e.allowed {
                assert!(
                    sic.c0 < 0.0
                        && sic.c_r.max(0.0) * e.slot_cap[2] + sic.c_t.max(0.0) * e.slot_cap[3]
                            + sic.c0
                            < 0.0
                );
            }
        }
    }

    #[test]
    fn oma_restriction_filters_tuples() {
        let inst = random_instance(2);
        let zs = ZSpace::fd(&inst, true);
        for e in &zs.entries {
            if e.allowed {
                assert!(e.tuple.is_oma());
            }
        }
        // Orthogonal tuples have a zero SIC row, hence always admissible.
        let n_allowed = zs.entries.iter().filter(|e| e.allowed).count();
        assert_eq!(n_allowed, inst.dims.n_sc * inst.dims.n_dl * inst.dims.n_ul);
    }

    #[test]
    fn fd_entry_utility_matches_objective_formulas() {
        let inst = random_instance(3);
        let zs = ZSpace::fd(&inst, false);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for e in &zs.entries {
            let slots = [
                rng.gen_range(0.0..1.0),
                rng.gen_range(0.0..1.0),
                rng.gen_range(0.0..1.0),
                rng.gen_range(0.0..1.0),
            ];
            let via_space = e.utility(&slots);
            let via_objective = tuple_utility_slots(&inst, &e.tuple, &slots);
            assert!((via_space - via_objective).abs() < 1e-12);
        }
    }

    #[test]
    fn dl_only_space_has_no_interference_terms() {
        let inst = random_instance(4);
        let zs = ZSpace::dl_only(&inst, false);
        assert_eq!(zs.entries.len(), inst.dims.n_sc * inst.dims.n_dl * inst.dims.n_dl);
        for e in &zs.entries {
            // v-quadrant is pure signal: g = 0 coefficients.
            assert!(e.forms[1].g.iter().all(|&c| c == 0.0));
            if e.allowed {
                assert!(inst.h(e.tuple.i, e.tuple.n) >= inst.h(e.tuple.i, e.tuple.m));
            }
        }
    }

    #[test]
    fn ul_only_space_ignores_si() {
        let inst = random_instance(5);
        let zs = ZSpace::ul_only(&inst, false);
        for e in &zs.entries {
            // No slot touches the SI coefficient: forms depend only on G.
            assert_eq!(e.forms[0].f.len(), 2);
            assert!(e.forms[1].f[0] == 0.0);
        }
        // A rho change must not alter the space at all.
        let mut inst2 = random_instance(5);
        inst2.rho *= 100.0;
        let zs2 = ZSpace::ul_only(&inst2, false);
        for (a, b) in zs.entries.iter().zip(&zs2.entries) {
            assert_eq!(a.forms[0].f, b.forms[0].f);
            assert_eq!(a.init, b.init);
        }
    }

    #[test]
    fn initial_vertex_dominates_feasible_points() {
        // Any budget-feasible slot assignment keeps every ratio below the
        // initial vertex coordinate.
        let inst = random_instance(6);
        let zs = ZSpace::fd(&inst, false);
        let z0 = zs.z_init();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..200 {
            for (idx, e) in zs.entries.iter().enumerate() {
                if !e.allowed {
                    continue;
                }
                let slots: Vec<f64> =
                    e.slot_cap.iter().map(|&cap| rng.gen_range(0.0..cap)).collect();
                for q in 0..zs.n_quadrants {
                    let ratio = e.forms[q].ratio(&slots);
                    assert!(
                        ratio <= z0[zs.coord(q, idx)] + 1e-9,
                        "ratio {ratio} exceeds init {}",
                        z0[zs.coord(q, idx)]
                    );
                }
            }
        }
    }

    #[test]
    fn zero_budget_init_is_all_ones() {
        let mut inst = random_instance(7);
        inst.p_max_dl = 0.0;
        inst.p_max_ul = vec![0.0, 0.0];
        let zs = ZSpace::fd(&inst, false);
        assert!(zs.z_init().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn unit_gains_unit_budgets_init() {
        let dims = Dims::new(1, 1, 1);
        let inst = ProblemInstance::from_parts(
            dims,
            vec![1.0],
            vec![1.0],
            vec![0.5],
            vec![0.3],
            vec![1.0],
            vec![1.0],
            1.0,
            vec![1.0],
            0.5,
        )
        .unwrap();
        let zs = ZSpace::fd(&inst, false);
        assert_eq!(zs.z_init(), vec![2.0; 4]);
    }

    #[test]
    fn assemble_averages_shared_slots() {
        let inst = random_instance(8);
        let zs = ZSpace::fd(&inst, false);
        // Find the orthogonal tuple (1,1,1,1,1).
        let idx = zs
            .entries
            .iter()
            .position(|e| e.tuple == TupleId { i: 1, m: 1, n: 1, r: 1, t: 1 })
            .unwrap();
        let picks = vec![(idx, vec![0.4, 0.2, 0.3, 0.1])];
        let (sched, alloc) = zs.assemble(&picks).unwrap();
        assert_eq!(sched.iter_active().count(), 1);
        assert!((alloc.p(1, 1) - 0.3).abs() < 1e-15); // (0.4 + 0.2)/2
        assert!((alloc.q(1, 1) - 0.2).abs() < 1e-15); // (0.3 + 0.1)/2
        // Utility is preserved under the averaging.
        let t = zs.entries[idx].tuple;
        let direct = subcarrier_utility(&inst, &t, &alloc);
        let via_slots = zs.entries[idx].utility(&[0.4, 0.2, 0.3, 0.1]);
        assert!((direct - via_slots).abs() < 1e-12);
    }
}
