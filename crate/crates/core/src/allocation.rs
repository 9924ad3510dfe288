//! Power allocation containers.

use crate::tuples::Dims;
use serde::{Deserialize, Serialize};

/// Per-user transmit powers: `p[i][m]` for the BS signal to DL user m and
/// `q[i][r]` for UL user r, both in watts on subcarrier i.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    pub dims: Dims,
    /// DL powers, flat [i*K + m].
    pub p: Vec<f64>,
    /// UL powers, flat [i*J + r].
    pub q: Vec<f64>,
}

impl PowerAllocation {
    pub fn zeros(dims: Dims) -> Self {
        PowerAllocation {
            dims,
            p: vec![0.0; dims.n_sc * dims.n_dl],
            q: vec![0.0; dims.n_sc * dims.n_ul],
        }
    }

    #[inline]
    pub fn p(&self, i: usize, m: usize) -> f64 {
        self.p[(i - 1) * self.dims.n_dl + (m - 1)]
    }

    #[inline]
    pub fn q(&self, i: usize, r: usize) -> f64 {
        self.q[(i - 1) * self.dims.n_ul + (r - 1)]
    }

    #[inline]
    pub fn set_p(&mut self, i: usize, m: usize, v: f64) {
        self.p[(i - 1) * self.dims.n_dl + (m - 1)] = v;
    }

    #[inline]
    pub fn set_q(&mut self, i: usize, r: usize, v: f64) {
        self.q[(i - 1) * self.dims.n_ul + (r - 1)] = v;
    }
}

/// Schedule-lifted powers: every tuple owns two DL slots (for users m and n)
/// and two UL slots (for users r and t). With the binary schedule these equal
/// the per-user powers gated by the schedule indicator.
#[derive(Debug, Clone, PartialEq)]
pub struct TildeAllocation {
    pub dims: Dims,
    /// DL slot powers, flat [2*(delta-1) + slot], slot 0 = m-owner, 1 = n-owner.
    pub p: Vec<f64>,
    /// UL slot powers, flat [2*(delta-1) + slot], slot 0 = r-owner, 1 = t-owner.
    pub q: Vec<f64>,
}

impl TildeAllocation {
    pub fn zeros(dims: Dims) -> Self {
        let t = dims.tuple_count();
        TildeAllocation { dims, p: vec![0.0; 2 * t], q: vec![0.0; 2 * t] }
    }

    /// DL slot powers (m-owner, n-owner) of the 1-based tuple index.
    #[inline]
    pub fn p_slots(&self, delta: usize) -> (f64, f64) {
        (self.p[2 * (delta - 1)], self.p[2 * (delta - 1) + 1])
    }

    /// UL slot powers (r-owner, t-owner) of the 1-based tuple index.
    #[inline]
    pub fn q_slots(&self, delta: usize) -> (f64, f64) {
        (self.q[2 * (delta - 1)], self.q[2 * (delta - 1) + 1])
    }

    #[inline]
    pub fn set_slots(&mut self, delta: usize, pm: f64, pn: f64, qr: f64, qt: f64) {
        self.p[2 * (delta - 1)] = pm;
        self.p[2 * (delta - 1) + 1] = pn;
        self.q[2 * (delta - 1)] = qr;
        self.q[2 * (delta - 1) + 1] = qt;
    }
}
