//! Solution records and the evaluation metrics reported by the harness.

use crate::allocation::PowerAllocation;
use crate::tuples::Schedule;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    /// Converged within tolerance.
    Optimal,
    /// Returned the incumbent after hitting the iteration budget.
    IterationCap,
    /// No feasible nondegenerate allocation was produced.
    Degenerate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverDiag {
    pub iterations: usize,
    /// Certified optimality gap where available (upper bound minus achieved).
    pub gap: f64,
    pub status: SolveStatus,
}

/// Common output of every scheme: the schedule, the transmit powers, the
/// weighted objective, and unweighted per-user rates whose weighted
/// recombination equals the objective.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Solution {
    pub schedule: Schedule,
    pub powers: PowerAllocation,
    /// Weighted sum throughput, bits/s/Hz.
    pub objective: f64,
    pub rate_dl: Vec<f64>,
    pub rate_ul: Vec<f64>,
    pub diag: SolverDiag,
}

/// Power threshold below which a scheduled appearance does not count a user
/// as served.
pub const SCHEDULED_POWER_TOL: f64 = 1e-9;

/// Jain's fairness index over all DL and UL user rates:
/// (sum R)^2 / ((K+J) sum R^2). None when every rate is zero.
pub fn jain_index(sol: &Solution) -> Option<f64> {
    let rates: Vec<f64> = sol.rate_dl.iter().chain(&sol.rate_ul).cloned().collect();
    let sum: f64 = rates.iter().sum();
    let sumsq: f64 = rates.iter().map(|r| r * r).sum();
    if sumsq <= 0.0 {
        return None;
    }
    Some(sum * sum / (rates.len() as f64 * sumsq))
}

/// Number of distinct users served: a user counts once if it appears in any
/// active tuple with positive allocated power, DL and UL counted separately.
pub fn scheduled_user_count(sol: &Solution) -> usize {
    let dims = sol.powers.dims;
    let mut dl = vec![false; dims.n_dl];
    let mut ul = vec![false; dims.n_ul];
    for t in sol.schedule.iter_active() {
        for user in [t.m, t.n] {
            if sol.powers.p(t.i, user) > SCHEDULED_POWER_TOL {
                dl[user - 1] = true;
            }
        }
        for user in [t.r, t.t] {
            if sol.powers.q(t.i, user) > SCHEDULED_POWER_TOL {
                ul[user - 1] = true;
            }
        }
    }
    dl.iter().filter(|&&b| b).count() + ul.iter().filter(|&&b| b).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tuples::{Dims, TupleId};

    fn sol(dims: Dims, rate_dl: Vec<f64>, rate_ul: Vec<f64>) -> Solution {
        Solution {
            schedule: Schedule::empty(dims.n_sc),
            powers: PowerAllocation::zeros(dims),
            objective: 0.0,
            rate_dl,
            rate_ul,
            diag: SolverDiag { iterations: 0, gap: 0.0, status: SolveStatus::Optimal },
        }
    }

    #[test]
    fn jain_equal_rates_is_one() {
        let s = sol(Dims::new(1, 2, 2), vec![0.7, 0.7], vec![0.7, 0.7]);
        assert!((jain_index(&s).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn jain_single_active_user() {
        let s = sol(Dims::new(1, 2, 2), vec![1.0, 0.0], vec![0.0, 0.0]);
        assert!((jain_index(&s).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn jain_hand_case() {
        // Rates (1, 2, 3): 36 / (3 * 14) = 6/7.
        let s = sol(Dims::new(1, 2, 1), vec![1.0, 2.0], vec![3.0]);
        assert!((jain_index(&s).unwrap() - 6.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn jain_all_zero_is_absent() {
        let s = sol(Dims::new(1, 2, 2), vec![0.0, 0.0], vec![0.0, 0.0]);
        assert!(jain_index(&s).is_none());
    }

    #[test]
    fn jain_in_unit_interval_and_one_iff_equal() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let k = rng.gen_range(1..5);
            let j = rng.gen_range(1..5);
            let dl: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..3.0)).collect();
            let ul: Vec<f64> = (0..j).map(|_| rng.gen_range(0.0..3.0)).collect();
            let s = sol(Dims::new(1, k, j), dl.clone(), ul.clone());
            if let Some(v) = jain_index(&s) {
                assert!(v > 0.0 && v <= 1.0 + 1e-12);
                let all: Vec<f64> = dl.iter().chain(&ul).cloned().collect();
                let equal = all.windows(2).all(|w| (w[0] - w[1]).abs() < 1e-12);
                if (v - 1.0).abs() < 1e-12 {
                    assert!(equal);
                }
            }
        }
    }

    #[test]
    fn scheduled_count_cases() {
        let dims = Dims::new(1, 3, 3);
        let mut s = sol(dims, vec![0.0; 3], vec![0.0; 3]);
        assert_eq!(scheduled_user_count(&s), 0);

        // One tuple with four distinct users, all powered.
        s.schedule.set(TupleId::new(1, 1, 2, 1, 2, dims).unwrap()).unwrap();
        s.powers.set_p(1, 1, 0.1);
        s.powers.set_p(1, 2, 0.1);
        s.powers.set_q(1, 1, 0.1);
        s.powers.set_q(1, 2, 0.1);
        assert_eq!(scheduled_user_count(&s), 4);

        // Orthogonal tuple: duplicates collapse to one user per direction.
        let mut s2 = sol(dims, vec![0.0; 3], vec![0.0; 3]);
        s2.schedule.set(TupleId::new(1, 3, 3, 2, 2, dims).unwrap()).unwrap();
        s2.powers.set_p(1, 3, 0.5);
        s2.powers.set_q(1, 2, 0.5);
        assert_eq!(scheduled_user_count(&s2), 2);

        // Zero-power appearances do not count.
        let mut s3 = sol(dims, vec![0.0; 3], vec![0.0; 3]);
        s3.schedule.set(TupleId::new(1, 1, 2, 1, 1, dims).unwrap()).unwrap();
        s3.powers.set_p(1, 1, 0.5);
        assert_eq!(scheduled_user_count(&s3), 1);
    }

    #[test]
    fn scheduled_count_bounded_by_slots() {
        // At most 2 users per direction per subcarrier can be served.
        let dims = Dims::new(2, 5, 5);
        let mut s = sol(dims, vec![0.0; 5], vec![0.0; 5]);
        for i in 1..=2 {
            s.schedule.set(TupleId::new(i, 2 * i - 1, 2 * i, 2 * i - 1, 2 * i, dims).unwrap()).unwrap();
            for u in [2 * i - 1, 2 * i] {
                s.powers.set_p(i, u, 0.1);
                s.powers.set_q(i, u, 0.1);
            }
        }
        let count = scheduled_user_count(&s);
        assert!(count <= 2 * dims.n_sc + 2 * dims.n_sc);
        assert_eq!(count, 8);
    }
}
