//! Solvers and simulation harness for joint power and subcarrier allocation
//! in a full-duplex multicarrier NOMA cell.
//!
//! A full-duplex base station serves DL and UL users in-band; each subcarrier
//! carries at most two DL and two UL users separated by successive
//! interference cancellation. The crate provides:
//!
//! - [`channel`]: seeded random instance generation (geometry, path loss,
//!   Rayleigh/Rician fading) producing normalized-gain [`ProblemInstance`]s;
//! - [`objective`]: throughput formulas, SIC margins, and constraint checks;
//! - [`lp`]: a self-contained bounded-variable simplex solver;
//! - [`polyblock`]: the globally optimal solver (outer polyblock
//!   approximation driven by a Dinkelbach fractional-programming projection);
//! - [`sca`]: the suboptimal successive-convex-approximation solver (big-M
//!   lifting, exact penalty, log-barrier inner steps);
//! - [`baselines`]: orthogonal and half-duplex reference schemes plus a
//!   brute-force grid oracle;
//! - [`metrics`], [`experiment`]: evaluation metrics and the reproducible
//!   batch sweep harness.
//!
//! Instance generation is deterministic given the config and a 64-bit seed
//! (ChaCha8 generator; see [`channel`] for the draw order).

pub mod allocation;
pub mod barrier;
pub mod channel;
pub mod config;
pub mod error;
pub mod lp;
pub mod objective;
pub mod metrics;
pub mod oracle;
pub mod polyblock;
pub mod projection;
pub mod refine;
pub mod trace;
pub mod tuples;
pub mod zspace;

pub use allocation::{PowerAllocation, TildeAllocation};
pub use channel::{generate_instance, generate_instance_seeded, path_loss_gain, ProblemInstance};
pub use config::SystemConfig;
pub use error::{Error, Result};
pub use metrics::{jain_index, scheduled_user_count, Solution, SolveStatus};
pub use tuples::{Dims, Quadrant, Schedule, TupleId};
