//! Multiplexing tuples, subcarrier schedules, and the flat index map used by
//! the vertex-space solvers.
//!
//! A tuple (i, m, n, r, t) multiplexes DL users m and n and UL users r and t
//! on subcarrier i: user n cancels user m's signal before decoding its own,
//! and the BS decodes user r first and removes it before decoding user t.
//! Tuples are flattened row-major with t fastest,
//!
//! ```text
//! Delta = ((((i-1)K + (m-1))K + (n-1))J + (r-1))J + t,   Delta in 1..=N_F K^2 J^2,
//! ```
//!
//! and the vertex space stacks four quadrant blocks of length D/4 each
//! (both DL SINR terms, then both UL SINR terms), D = 4 N_F K^2 J^2.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Problem dimensions (subcarriers, DL users, UL users).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub n_sc: usize,
    pub n_dl: usize,
    pub n_ul: usize,
}

impl Dims {
    pub fn new(n_sc: usize, n_dl: usize, n_ul: usize) -> Self {
        Dims { n_sc, n_dl, n_ul }
    }

    /// Number of multiplexing tuples, N_F K^2 J^2.
    pub fn tuple_count(&self) -> usize {
        self.n_sc * self.n_dl * self.n_dl * self.n_ul * self.n_ul
    }

    /// Vertex-space dimension D = 4 N_F K^2 J^2.
    pub fn z_dim(&self) -> usize {
        4 * self.tuple_count()
    }
}

/// Quadrant of a vertex coordinate: which of the four SINR terms it tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrant {
    /// DL user m's SINR term (decoded without SIC).
    DlFirst = 0,
    /// DL user n's SINR term (after cancelling m).
    DlSecond = 1,
    /// UL user r's SINR term (decoded first at the BS).
    UlFirst = 2,
    /// UL user t's SINR term (decoded after removing r).
    UlSecond = 3,
}

impl Quadrant {
    pub const ALL: [Quadrant; 4] =
        [Quadrant::DlFirst, Quadrant::DlSecond, Quadrant::UlFirst, Quadrant::UlSecond];
}

/// One multiplexing tuple. Indices are 1-based, matching the usual
/// (i, m, n, r, t) notation; `m == n` (and `r == t`) encode single-user
/// orthogonal use of the subcarrier in that direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TupleId {
    /// Subcarrier, 1..=N_F.
    pub i: usize,
    /// DL user whose signal is decoded and removed by n, 1..=K.
    pub m: usize,
    /// DL user performing SIC, 1..=K.
    pub n: usize,
    /// UL user decoded first at the BS, 1..=J.
    pub r: usize,
    /// UL user decoded second, 1..=J.
    pub t: usize,
}

impl TupleId {
    pub fn new(i: usize, m: usize, n: usize, r: usize, t: usize, dims: Dims) -> Result<Self> {
        let id = TupleId { i, m, n, r, t };
        id.check(dims)?;
        Ok(id)
    }

    pub fn check(&self, dims: Dims) -> Result<()> {
        let ok = (1..=dims.n_sc).contains(&self.i)
            && (1..=dims.n_dl).contains(&self.m)
            && (1..=dims.n_dl).contains(&self.n)
            && (1..=dims.n_ul).contains(&self.r)
            && (1..=dims.n_ul).contains(&self.t);
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("tuple {self:?} out of range for {dims:?}")))
        }
    }

    /// True when the tuple is orthogonal in both directions (m = n, r = t).
    pub fn is_oma(&self) -> bool {
        self.m == self.n && self.r == self.t
    }
}

/// Row-major tuple index Delta in 1..=N_F K^2 J^2 (t fastest).
pub fn tuple_index(t: &TupleId, dims: Dims) -> Result<usize> {
    t.check(dims)?;
    let (k, j) = (dims.n_dl, dims.n_ul);
    Ok(((((t.i - 1) * k + (t.m - 1)) * k + (t.n - 1)) * j + (t.r - 1)) * j + t.t)
}

/// Inverse of [`tuple_index`].
pub fn tuple_from_index(delta: usize, dims: Dims) -> Result<TupleId> {
    if delta == 0 || delta > dims.tuple_count() {
        return Err(Error::Domain(format!(
            "tuple index {delta} out of 1..={}",
            dims.tuple_count()
        )));
    }
    let (k, j) = (dims.n_dl, dims.n_ul);
    let mut rest = delta - 1;
    let t = rest % j + 1;
    rest /= j;
    let r = rest % j + 1;
    rest /= j;
    let n = rest % k + 1;
    rest /= k;
    let m = rest % k + 1;
    rest /= k;
    let i = rest + 1;
    Ok(TupleId { i, m, n, r, t })
}

/// Vertex coordinate for a (quadrant, tuple) pair: d = q * D/4 + Delta,
/// returned 1-based like Delta.
pub fn quadrant_coord(q: Quadrant, delta: usize, dims: Dims) -> usize {
    (q as usize) * dims.tuple_count() + delta
}

/// Splits a 1-based vertex coordinate back into (quadrant, Delta).
pub fn split_coord(d: usize, dims: Dims) -> Result<(Quadrant, usize)> {
    if d == 0 || d > dims.z_dim() {
        return Err(Error::Domain(format!("coordinate {d} out of 1..={}", dims.z_dim())));
    }
    let block = dims.tuple_count();
    let q = Quadrant::ALL[(d - 1) / block];
    Ok((q, (d - 1) % block + 1))
}

/// Subcarrier assignment: at most one tuple per subcarrier.
///
/// The one-tuple-per-subcarrier structure is the schedule cardinality
/// constraint of the allocation problem; it is enforced by construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    active: Vec<Option<TupleId>>,
}

impl Schedule {
    /// All subcarriers unused.
    pub fn empty(n_sc: usize) -> Self {
        Schedule { active: vec![None; n_sc] }
    }

    pub fn n_subcarriers(&self) -> usize {
        self.active.len()
    }

    /// Activates `tuple` on its own subcarrier, replacing any previous tuple.
    pub fn set(&mut self, tuple: TupleId) -> Result<()> {
        if tuple.i == 0 || tuple.i > self.active.len() {
            return Err(Error::Domain(format!(
                "subcarrier {} out of 1..={}",
                tuple.i,
                self.active.len()
            )));
        }
        self.active[tuple.i - 1] = Some(tuple);
        Ok(())
    }

    pub fn clear(&mut self, subcarrier: usize) {
        self.active[subcarrier - 1] = None;
    }

    /// Active tuple on a 1-based subcarrier.
    pub fn on(&self, subcarrier: usize) -> Option<&TupleId> {
        self.active[subcarrier - 1].as_ref()
    }

    /// Iterates over active tuples in subcarrier order.
    pub fn iter_active(&self) -> impl Iterator<Item = &TupleId> {
        self.active.iter().filter_map(|t| t.as_ref())
    }

    pub fn is_empty(&self) -> bool {
        self.active.iter().all(|t| t.is_none())
    }
}
