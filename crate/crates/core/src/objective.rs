//! Throughput formulas, the SIC feasibility margin, constraint checking, and
//! the fractional reformulation used by the vertex-space solvers.
//!
//! All rates are in bits/s/Hz per subcarrier (base-2 logs, no bandwidth
//! scaling). For a tuple (i, m, n, r, t) the weighted subcarrier utility sums
//! four SINR terms; user n's SIC of user m's signal succeeds exactly when the
//! margin Q is nonnegative. The fractional form writes each 1+SINR value as a
//! ratio f_d/g_d of affine functions of the slot powers, one coordinate per
//! (quadrant, tuple) pair.

use crate::allocation::{PowerAllocation, TildeAllocation};
use crate::channel::ProblemInstance;
use crate::error::{Error, Result};
use crate::tuples::{split_coord, tuple_from_index, tuple_index, Quadrant, Schedule, TupleId};

pub const LOG2_E: f64 = std::f64::consts::LOG2_E;

/// Affine numerator/denominator pair over a tuple's four slot powers
/// [p_m, p_n, q_r, q_t]: value = 1 + coeffs . slots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadForm {
    pub f_coef: [f64; 4],
    pub g_coef: [f64; 4],
}

impl QuadForm {
    #[inline]
    pub fn f(&self, x: &[f64; 4]) -> f64 {
        1.0 + dot4(&self.f_coef, x)
    }

    #[inline]
    pub fn g(&self, x: &[f64; 4]) -> f64 {
        1.0 + dot4(&self.g_coef, x)
    }

    /// log2(f/g), the quadrant's unweighted rate at the given slot powers.
    #[inline]
    pub fn rate(&self, x: &[f64; 4]) -> f64 {
        (self.f(x) / self.g(x)).log2()
    }
}

#[inline]
fn dot4(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

/// Numerator/denominator coefficients of the quadrant's 1+SINR expression in
/// slot powers. The denominator keeps every term of the numerator except the
/// quadrant's own signal term, so f >= g >= 1 for nonnegative slots and
/// f/g reproduces the SINR ratio exactly.
pub fn quad_form(inst: &ProblemInstance, t: &TupleId, q: Quadrant) -> QuadForm {
    let h_m = inst.h(t.i, t.m);
    let h_n = inst.h(t.i, t.n);
    let g_r = inst.g(t.i, t.r);
    let g_t = inst.g(t.i, t.t);
    let f_rm = inst.f(t.i, t.r, t.m);
    let f_tm = inst.f(t.i, t.t, t.m);
    let f_rn = inst.f(t.i, t.r, t.n);
    let f_tn = inst.f(t.i, t.t, t.n);
    let si = inst.si_coeff(t.i);
    match q {
        Quadrant::DlFirst => QuadForm {
            f_coef: [h_m, h_m, f_rm, f_tm],
            g_coef: [0.0, h_m, f_rm, f_tm],
        },
        Quadrant::DlSecond => QuadForm {
            f_coef: [0.0, h_n, f_rn, f_tn],
            g_coef: [0.0, 0.0, f_rn, f_tn],
        },
        Quadrant::UlFirst => QuadForm {
            f_coef: [si, si, g_r, g_t],
            g_coef: [si, si, 0.0, g_t],
        },
        Quadrant::UlSecond => QuadForm {
            f_coef: [si, si, 0.0, g_t],
            g_coef: [si, si, 0.0, 0.0],
        },
    }
}

/// Weight of the quadrant's rate term: w_m, w_n, mu_r, mu_t.
pub fn quad_weight(inst: &ProblemInstance, t: &TupleId, q: Quadrant) -> f64 {
    match q {
        Quadrant::DlFirst => inst.w[t.m - 1],
        Quadrant::DlSecond => inst.w[t.n - 1],
        Quadrant::UlFirst => inst.mu[t.r - 1],
        Quadrant::UlSecond => inst.mu[t.t - 1],
    }
}

/// SIC margin at given UL powers on the tuple's subcarrier:
///
/// Q = (H_n F_{r,m} - H_m F_{r,n}) q_r + (H_n F_{t,m} - H_m F_{t,n}) q_t + H_n - H_m.
///
/// User n can decode and cancel user m's signal iff Q >= 0.
pub fn sic_margin(inst: &ProblemInstance, t: &TupleId, alloc: &PowerAllocation) -> f64 {
    sic_margin_q(inst, t, alloc.q(t.i, t.r), alloc.q(t.i, t.t))
}

/// [`sic_margin`] with the two UL slot powers given directly.
pub fn sic_margin_q(inst: &ProblemInstance, t: &TupleId, q_r: f64, q_t: f64) -> f64 {
    let (c_r, c_t, c0) = sic_coefficients(inst, t);
    c_r * q_r + c_t * q_t + c0
}

/// Coefficients (c_r, c_t, constant) of the SIC margin in the UL slot powers.
pub fn sic_coefficients(inst: &ProblemInstance, t: &TupleId) -> (f64, f64, f64) {
    let h_m = inst.h(t.i, t.m);
    let h_n = inst.h(t.i, t.n);
    let c_r = h_n * inst.f(t.i, t.r, t.m) - h_m * inst.f(t.i, t.r, t.n);
    let c_t = h_n * inst.f(t.i, t.t, t.m) - h_m * inst.f(t.i, t.t, t.n);
    (c_r, c_t, h_n - h_m)
}

/// Scale of the SIC margin terms, used for scale-aware tolerance checks.
pub fn sic_scale(inst: &ProblemInstance, t: &TupleId, q_r: f64, q_t: f64) -> f64 {
    let (c_r, c_t, c0) = sic_coefficients(inst, t);
    (c_r * q_r).abs() + (c_t * q_t).abs() + c0.abs()
}

/// Weighted throughput of one tuple at the given per-user powers (the tuple
/// is taken as active; an unscheduled subcarrier contributes nothing to
/// [`total_objective`]).
pub fn subcarrier_utility(inst: &ProblemInstance, t: &TupleId, alloc: &PowerAllocation) -> f64 {
    let x = slot_powers(t, alloc);
    Quadrant::ALL
        .iter()
        .map(|&q| {
            let w = quad_weight(inst, t, q);
            if w == 0.0 {
                0.0
            } else {
                w * quad_form(inst, t, q).rate(&x)
            }
        })
        .sum()
}

/// Slot powers [p_m, p_n, q_r, q_t] read from the per-user allocation.
#[inline]
pub fn slot_powers(t: &TupleId, alloc: &PowerAllocation) -> [f64; 4] {
    [alloc.p(t.i, t.m), alloc.p(t.i, t.n), alloc.q(t.i, t.r), alloc.q(t.i, t.t)]
}

/// Orthogonal special case m = n, r = t: one DL and one UL user occupy the
/// subcarrier with combined powers p_m + p_n and q_r + q_t.
pub fn oma_utility(inst: &ProblemInstance, t: &TupleId, alloc: &PowerAllocation) -> Result<f64> {
    if t.m != t.n || t.r != t.t {
        return Err(Error::Domain(format!(
            "oma_utility requires m = n and r = t, got {t:?}"
        )));
    }
    let p_sum = alloc.p(t.i, t.m) + alloc.p(t.i, t.n);
    let q_sum = alloc.q(t.i, t.r) + alloc.q(t.i, t.t);
    let f_rm = inst.f(t.i, t.r, t.m);
    let f_tm = inst.f(t.i, t.t, t.m);
    let dl = 1.0 + inst.h(t.i, t.m) * p_sum
        / (f_rm * alloc.q(t.i, t.r) + f_tm * alloc.q(t.i, t.t) + 1.0);
    let ul = 1.0 + inst.g(t.i, t.r) * q_sum / (inst.si_coeff(t.i) * p_sum + 1.0);
    Ok(inst.w[t.m - 1] * dl.log2() + inst.mu[t.r - 1] * ul.log2())
}

/// Weighted sum throughput of the whole schedule.
pub fn total_objective(inst: &ProblemInstance, sched: &Schedule, alloc: &PowerAllocation) -> f64 {
    sched.iter_active().map(|t| subcarrier_utility(inst, t, alloc)).sum()
}

/// Unweighted per-user rates (DL, UL) achieved by a schedule. The weighted
/// recombination of these equals [`total_objective`].
pub fn per_user_rates(
    inst: &ProblemInstance,
    sched: &Schedule,
    alloc: &PowerAllocation,
) -> (Vec<f64>, Vec<f64>) {
    let mut dl = vec![0.0; inst.dims.n_dl];
    let mut ul = vec![0.0; inst.dims.n_ul];
    for t in sched.iter_active() {
        let x = slot_powers(t, alloc);
        dl[t.m - 1] += quad_form(inst, t, Quadrant::DlFirst).rate(&x);
        dl[t.n - 1] += quad_form(inst, t, Quadrant::DlSecond).rate(&x);
        ul[t.r - 1] += quad_form(inst, t, Quadrant::UlFirst).rate(&x);
        ul[t.t - 1] += quad_form(inst, t, Quadrant::UlSecond).rate(&x);
    }
    (dl, ul)
}

/// Worst signed residual per constraint family; negative means violated.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    /// Smallest SIC margin over active tuples (infinity when none are active).
    pub c1_min_margin: f64,
    /// Scale of the worst C1 margin's terms, for tolerance normalization.
    pub c1_scale: f64,
    /// BS budget slack P_max_dl - scheduled DL power.
    pub c2_slack: f64,
    /// Worst per-UL-user budget slack.
    pub c3_min_slack: f64,
    /// Smallest DL power entry.
    pub c6_min: f64,
    /// Smallest UL power entry.
    pub c7_min: f64,
    pub feasible: bool,
}

/// Absolute floor of the C1 tolerance. The margin's terms scale with the
/// product of normalized gains, so the check also allows noise relative to
/// the term magnitudes.
pub const C1_TOL: f64 = 1e-9;

/// Verifies C1-C3, C6, C7 at (schedule, powers); C4/C5 hold structurally.
///
/// C1 binds only on active tuples (inactive tuples are unconstrained). C2 and
/// C3 count scheduled slot appearances, so an orthogonal tuple (m = n or
/// r = t) counts its user's power once per slot.
pub fn check_feasibility(
    inst: &ProblemInstance,
    sched: &Schedule,
    alloc: &PowerAllocation,
) -> FeasibilityReport {
    let mut c1_min = f64::INFINITY;
    let mut c1_scale = 1.0;
    let mut dl_used = 0.0;
    let mut ul_used = vec![0.0; inst.dims.n_ul];
    for t in sched.iter_active() {
        let m = sic_margin(inst, t, alloc);
        if m < c1_min {
            c1_min = m;
            c1_scale = sic_scale(inst, t, alloc.q(t.i, t.r), alloc.q(t.i, t.t));
        }
        dl_used += alloc.p(t.i, t.m) + alloc.p(t.i, t.n);
        ul_used[t.r - 1] += alloc.q(t.i, t.r);
        ul_used[t.t - 1] += alloc.q(t.i, t.t);
    }
    let c2_slack = inst.p_max_dl - dl_used;
    let c3_min_slack = ul_used
        .iter()
        .zip(&inst.p_max_ul)
        .map(|(&used, &cap)| cap - used)
        .fold(f64::INFINITY, f64::min);
    let c6_min = alloc.p.iter().cloned().fold(f64::INFINITY, f64::min);
    let c7_min = alloc.q.iter().cloned().fold(f64::INFINITY, f64::min);

    let budget_tol = 1e-7 * (1.0 + inst.p_max_dl.max(max_or_zero(&inst.p_max_ul)));
    let feasible = c1_min >= -C1_TOL * c1_scale.max(1.0)
        && c2_slack >= -budget_tol
        && c3_min_slack >= -budget_tol
        && c6_min >= -1e-12
        && c7_min >= -1e-12;
    FeasibilityReport { c1_min_margin: c1_min, c1_scale, c2_slack, c3_min_slack, c6_min, c7_min, feasible }
}

fn max_or_zero(v: &[f64]) -> f64 {
    v.iter().cloned().fold(0.0, f64::max)
}

/// Numerator and denominator (f_d, g_d) of vertex coordinate d (1-based) at
/// the given slot powers.
pub fn fg_values(inst: &ProblemInstance, tilde: &TildeAllocation, d: usize) -> Result<(f64, f64)> {
    let (quad, delta) = split_coord(d, inst.dims)?;
    let t = tuple_from_index(delta, inst.dims)?;
    let (pm, pn) = tilde.p_slots(delta);
    let (qr, qt) = tilde.q_slots(delta);
    let x = [pm, pn, qr, qt];
    let form = quad_form(inst, &t, quad);
    Ok((form.f(&x), form.g(&x)))
}

/// Objective of the fractional reformulation at a full slot-power vector:
/// sum over coordinates of chi_d * log2(f_d/g_d). Equals the weighted sum
/// throughput when the slots respect a one-tuple-per-subcarrier schedule.
pub fn tilde_objective(inst: &ProblemInstance, tilde: &TildeAllocation) -> f64 {
    let mut total = 0.0;
    for delta in 1..=inst.dims.tuple_count() {
        let t = tuple_from_index(delta, inst.dims).expect("delta in range");
        let (pm, pn) = tilde.p_slots(delta);
        let (qr, qt) = tilde.q_slots(delta);
        let x = [pm, pn, qr, qt];
        for &q in &Quadrant::ALL {
            let w = quad_weight(inst, &t, q);
            if w > 0.0 {
                total += w * quad_form(inst, &t, q).rate(&x);
            }
        }
    }
    total
}

/// Utility of one tuple evaluated in slot powers.
pub fn tuple_utility_slots(inst: &ProblemInstance, t: &TupleId, x: &[f64; 4]) -> f64 {
    Quadrant::ALL
        .iter()
        .map(|&q| {
            let w = quad_weight(inst, t, q);
            if w == 0.0 {
                0.0
            } else {
                w * quad_form(inst, t, q).rate(x)
            }
        })
        .sum()
}

/// Checks that delta is consistent with the tuple it came from (used by
/// callers that carry both).
pub fn tuple_delta(inst: &ProblemInstance, t: &TupleId) -> usize {
    tuple_index(t, inst.dims).expect("validated tuple")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tuples::Dims;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Hand-set single-subcarrier instance with K = J = 2 and unit-ish gains.
    fn toy(h: [f64; 2], g: [f64; 2], f: [[f64; 2]; 2], si: f64, w: [f64; 2], mu: [f64; 2]) -> ProblemInstance {
        // cci flat layout [(i*J+r)*K+m]
        let cci = vec![f[0][0], f[0][1], f[1][0], f[1][1]];
        ProblemInstance::from_parts(
            Dims::new(1, 2, 2),
            h.to_vec(),
            g.to_vec(),
            cci,
            vec![si],
            w.to_vec(),
            mu.to_vec(),
            10.0,
            vec![10.0, 10.0],
            0.5,
        )
        .unwrap()
    }

    fn random_instance(seed: u64, n_sc: usize, k: usize, j: usize) -> ProblemInstance {
        let dims = Dims::new(n_sc, k, j);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |n: usize| (0..n).map(|_| rng.gen_range(0.01..5.0)).collect::<Vec<f64>>();
        let h = draw(n_sc * k);
        let g = draw(n_sc * j);
        let cci = draw(n_sc * j * k);
        let l_si = draw(n_sc);
        let mut rng2 = ChaCha8Rng::seed_from_u64(seed + 1);
        let w = (0..k).map(|_| rng2.gen_range(0.1..1.0)).collect();
        let mu = (0..j).map(|_| rng2.gen_range(0.1..1.0)).collect();
        ProblemInstance::from_parts(dims, h, g, cci, l_si, w, mu, 4.0, vec![2.0; j], 0.25).unwrap()
    }

    #[test]
    fn sic_margin_independent_of_q_without_cci() {
        // With vanishing CCI coefficients the q terms cancel: Q = H_n - H_m
        // for any UL powers.
        let inst = toy([1.0, 2.0], [1.0, 1.0], [[0.0, 0.0], [0.0, 0.0]], 0.1, [1.0, 1.0], [1.0, 1.0]);
        let t = TupleId::new(1, 1, 2, 1, 2, inst.dims).unwrap();
        let mut alloc = PowerAllocation::zeros(inst.dims);
        for (qr, qt) in [(0.0, 0.0), (3.7, 9.1), (100.0, 0.5)] {
            alloc.set_q(1, 1, qr);
            alloc.set_q(1, 2, qt);
            assert!((sic_margin(&inst, &t, &alloc) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sic_margin_zero_for_symmetric_users() {
        let inst = toy([2.0, 2.0], [1.0, 1.0], [[0.7, 0.7], [0.3, 0.3]], 0.1, [1.0, 1.0], [1.0, 1.0]);
        let t = TupleId::new(1, 1, 2, 1, 2, inst.dims).unwrap();
        let mut alloc = PowerAllocation::zeros(inst.dims);
        alloc.set_q(1, 1, 1.0);
        alloc.set_q(1, 2, 2.0);
        assert_eq!(sic_margin(&inst, &t, &alloc), 0.0);
    }

    #[test]
    fn sic_margin_hand_value() {
        // H_n=1, H_m=2, F_{r,m}=F_{t,m}=0, F_{r,n}=1, q_r=1, q_t=0:
        // Q = (1*0 - 2*1)*1 + 0 + (1 - 2) = -3.
        let inst = toy([2.0, 1.0], [1.0, 1.0], [[0.0, 1.0], [0.0, 0.0]], 0.1, [1.0, 1.0], [1.0, 1.0]);
        let t = TupleId::new(1, 1, 2, 1, 2, inst.dims).unwrap();
        let mut alloc = PowerAllocation::zeros(inst.dims);
        alloc.set_q(1, 1, 1.0);
        assert!((sic_margin(&inst, &t, &alloc) + 3.0).abs() < 1e-12);
    }

    #[test]
    fn utility_zero_at_zero_power() {
        let inst = random_instance(3, 1, 2, 2);
        let t = TupleId::new(1, 1, 2, 2, 1, inst.dims).unwrap();
        let alloc = PowerAllocation::zeros(inst.dims);
        assert_eq!(subcarrier_utility(&inst, &t, &alloc), 0.0);
    }

    #[test]
    fn unit_snr_gives_one_bit() {
        let inst = toy([1.0, 1.0], [1.0, 1.0], [[0.0, 0.0], [0.0, 0.0]], 0.0, [1.0, 0.0], [0.0, 0.0]);
        let t = TupleId::new(1, 1, 2, 1, 2, inst.dims).unwrap();
        let mut alloc = PowerAllocation::zeros(inst.dims);
        alloc.set_p(1, 1, 1.0);
        assert!((subcarrier_utility(&inst, &t, &alloc) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oma_case_matches_general_utility() {
        // Cross-check of the orthogonal collapse on random inputs.
        for seed in 0..50 {
            let inst = random_instance(seed, 2, 2, 2);
            let mut rng = ChaCha8Rng::seed_from_u64(seed * 31 + 7);
            let mut alloc = PowerAllocation::zeros(inst.dims);
            for v in alloc.p.iter_mut().chain(alloc.q.iter_mut()) {
                *v = rng.gen_range(0.0..2.0);
            }
            for i in 1..=2 {
                for m in 1..=2 {
                    for r in 1..=2 {
                        let t = TupleId::new(i, m, m, r, r, inst.dims).unwrap();
                        let lhs = subcarrier_utility(&inst, &t, &alloc);
                        let rhs = oma_utility(&inst, &t, &alloc).unwrap();
                        let scale = lhs.abs().max(1e-30);
                        assert!(
                            ((lhs - rhs) / scale).abs() < 1e-12,
                            "seed {seed} tuple {t:?}: {lhs} vs {rhs}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn oma_hand_value() {
        // H=1, combined DL power 3, no CCI, w=1, UL term weightless: log2(4) = 2.
        let inst = toy([1.0, 1.0], [1.0, 1.0], [[0.0, 0.0], [0.0, 0.0]], 0.0, [1.0, 1.0], [0.0, 0.0]);
        let t = TupleId::new(1, 1, 1, 1, 1, inst.dims).unwrap();
        let mut alloc = PowerAllocation::zeros(inst.dims);
        alloc.set_p(1, 1, 1.5); // both slots read the same user: combined 3.0
        assert!((oma_utility(&inst, &t, &alloc).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn oma_requires_duplicated_users() {
        let inst = random_instance(8, 1, 2, 2);
        let t = TupleId::new(1, 1, 2, 1, 1, inst.dims).unwrap();
        let alloc = PowerAllocation::zeros(inst.dims);
        assert!(oma_utility(&inst, &t, &alloc).is_err());
    }

    #[test]
    fn utility_monotone_in_served_power() {
        // Only the served user's term active: nondecreasing in p_m.
        let inst = toy([1.3, 0.8], [1.0, 1.0], [[0.2, 0.4], [0.1, 0.3]], 0.05, [1.0, 0.0], [0.0, 0.0]);
        let t = TupleId::new(1, 1, 2, 1, 2, inst.dims).unwrap();
        let mut alloc = PowerAllocation::zeros(inst.dims);
        alloc.set_p(1, 2, 0.7);
        alloc.set_q(1, 1, 0.3);
        alloc.set_q(1, 2, 0.9);
        let mut prev = f64::NEG_INFINITY;
        for k in 0..40 {
            alloc.set_p(1, 1, 0.1 * k as f64);
            let u = subcarrier_utility(&inst, &t, &alloc);
            assert!(u >= prev - 1e-14);
            prev = u;
        }
    }

    #[test]
    fn feasibility_empty_schedule() {
        let inst = random_instance(11, 2, 2, 2);
        let rep = check_feasibility(&inst, &Schedule::empty(2), &PowerAllocation::zeros(inst.dims));
        assert!(rep.feasible);
        assert_eq!(rep.c1_min_margin, f64::INFINITY);
    }

    #[test]
    fn feasibility_tight_dl_budget() {
        let inst = random_instance(12, 1, 2, 2);
        let t = TupleId::new(1, 1, 2, 1, 1, inst.dims).unwrap();
        let mut sched = Schedule::empty(1);
        sched.set(t).unwrap();
        let mut alloc = PowerAllocation::zeros(inst.dims);
        alloc.set_p(1, 1, inst.p_max_dl * 0.25);
        alloc.set_p(1, 2, inst.p_max_dl * 0.75);
        let rep = check_feasibility(&inst, &sched, &alloc);
        assert!(rep.c2_slack.abs() < 1e-12);
        // C1 margin may be negative on this random draw; only budget families matter here.
        assert!(rep.c2_slack >= -1e-9 && rep.c3_min_slack > 0.0);
    }

    #[test]
    fn feasibility_flags_sic_violation() {
        let inst = toy([2.0, 1.0], [1.0, 1.0], [[0.0, 1.0], [0.0, 0.0]], 0.1, [1.0, 1.0], [1.0, 1.0]);
        let t = TupleId::new(1, 1, 2, 1, 2, inst.dims).unwrap();
        let mut sched = Schedule::empty(1);
        sched.set(t).unwrap();
        let mut alloc = PowerAllocation::zeros(inst.dims);
        alloc.set_q(1, 1, 1.0);
        let rep = check_feasibility(&inst, &sched, &alloc);
        assert!(!rep.feasible);
        assert!((rep.c1_min_margin + 3.0).abs() < 1e-12);
    }

    #[test]
    fn fg_all_ones_at_zero() {
        let inst = random_instance(21, 1, 2, 2);
        let tilde = TildeAllocation::zeros(inst.dims);
        for d in 1..=inst.dims.z_dim() {
            assert_eq!(fg_values(&inst, &tilde, d).unwrap(), (1.0, 1.0));
        }
    }

    #[test]
    fn fg_single_term() {
        // Only p_m = 1 with H_m = 1 in the first quadrant: (f, g) = (2, 1).
        let inst = toy([1.0, 2.0], [1.0, 1.0], [[0.0, 0.0], [0.0, 0.0]], 0.0, [1.0, 1.0], [1.0, 1.0]);
        let t = TupleId::new(1, 1, 2, 1, 2, inst.dims).unwrap();
        let delta = tuple_delta(&inst, &t);
        let mut tilde = TildeAllocation::zeros(inst.dims);
        tilde.set_slots(delta, 1.0, 0.0, 0.0, 0.0);
        let d = crate::tuples::quadrant_coord(Quadrant::DlFirst, delta, inst.dims);
        assert_eq!(fg_values(&inst, &tilde, d).unwrap(), (2.0, 1.0));
    }

    #[test]
    fn fg_ratio_consistency_with_utilities() {
        // The four weighted ratios recombine to the subcarrier utility, and
        // f/g equals the 1+SINR values of the direct formulas.
        for seed in 0..30 {
            let inst = random_instance(seed + 100, 1, 2, 2);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = TupleId::new(
                1,
                rng.gen_range(1..=2),
                rng.gen_range(1..=2),
                rng.gen_range(1..=2),
                rng.gen_range(1..=2),
                inst.dims,
            )
            .unwrap();
            let delta = tuple_delta(&inst, &t);
            let x = [
                rng.gen_range(0.0..2.0),
                rng.gen_range(0.0..2.0),
                rng.gen_range(0.0..2.0),
                rng.gen_range(0.0..2.0),
            ];
            let mut tilde = TildeAllocation::zeros(inst.dims);
            tilde.set_slots(delta, x[0], x[1], x[2], x[3]);

            let mut product = 1.0;
            for &q in &Quadrant::ALL {
                let d = crate::tuples::quadrant_coord(q, delta, inst.dims);
                let (f, g) = fg_values(&inst, &tilde, d).unwrap();
                assert!(
                    f >= g && g >= 1.0,
                    "f={f} g={g} must satisfy f >= g >= 1"
                );
                product *= (f / g).powf(quad_weight(&inst, &t, q));
                // f/g is the quadrant's 1+SINR when the slots are the powers.
                let expect = quad_form(&inst, &t, q).f(&x) / quad_form(&inst, &t, q).g(&x);
                assert!(((f / g) - expect).abs() < 1e-12);
            }
            // Build the matching per-user allocation. Slot powers of shared
            // users are averaged so their per-user sum matches the slots.
            let mut alloc = PowerAllocation::zeros(inst.dims);
            if t.m == t.n {
                alloc.set_p(1, t.m, (x[0] + x[1]) / 2.0);
            } else {
                alloc.set_p(1, t.m, x[0]);
                alloc.set_p(1, t.n, x[1]);
            }
            if t.r == t.t {
                alloc.set_q(1, t.r, (x[2] + x[3]) / 2.0);
            } else {
                alloc.set_q(1, t.r, x[2]);
                alloc.set_q(1, t.t, x[3]);
            }
            let util = subcarrier_utility(&inst, &t, &alloc);
            if t.m != t.n && t.r != t.t {
                assert!(
                    (product.log2() - util).abs() < 1e-10,
                    "seed {seed}: {} vs {util}",
                    product.log2()
                );
            }
        }
    }

    #[test]
    fn rates_recombine_to_objective() {
        for seed in 0..20 {
            let inst = random_instance(seed + 400, 2, 2, 2);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut sched = Schedule::empty(2);
            for i in 1..=2 {
                sched
                    .set(
                        TupleId::new(
                            i,
                            rng.gen_range(1..=2),
                            rng.gen_range(1..=2),
                            rng.gen_range(1..=2),
                            rng.gen_range(1..=2),
                            inst.dims,
                        )
                        .unwrap(),
                    )
                    .unwrap();
            }
            let mut alloc = PowerAllocation::zeros(inst.dims);
            for v in alloc.p.iter_mut().chain(alloc.q.iter_mut()) {
                *v = rng.gen_range(0.0..1.0);
            }
            let (dl, ul) = per_user_rates(&inst, &sched, &alloc);
            let recombined: f64 = dl.iter().zip(&inst.w).map(|(r, w)| r * w).sum::<f64>()
                + ul.iter().zip(&inst.mu).map(|(r, w)| r * w).sum::<f64>();
            let total = total_objective(&inst, &sched, &alloc);
            assert!((recombined - total).abs() < 1e-9 * (1.0 + total.abs()));
        }
    }
}
