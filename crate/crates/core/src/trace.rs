//! Line-delimited iteration traces shared by the solvers.

use serde::Serialize;
use std::io::Write;
use std::sync::Mutex;

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    /// One outer polyblock iteration.
    PolyblockIter { k: usize, vertices: usize, incumbent: f64, gap: f64 },
    /// One Dinkelbach projection run: the lambda sequence (starting at 0),
    /// the termination residual, and the LP pivot count.
    Projection { lambdas: Vec<f64>, residual: f64, lp_iters: usize },
    /// One successive-convex-approximation iteration.
    ScaIter { k: usize, surrogate: f64, penalty_gap: f64, step_norm: f64 },
}

pub trait TraceSink: Sync + Send {
    fn record(&self, ev: &TraceEvent);
}

/// Discards everything.
pub struct NullSink;

impl TraceSink for NullSink {
    fn record(&self, _ev: &TraceEvent) {}
}

/// Writes one JSON object per line.
pub struct JsonlSink<W: Write + Send> {
    out: Mutex<W>,
}

impl<W: Write + Send> JsonlSink<W> {
    pub fn new(out: W) -> Self {
        JsonlSink { out: Mutex::new(out) }
    }
}

impl<W: Write + Send> TraceSink for JsonlSink<W> {
    fn record(&self, ev: &TraceEvent) {
        let mut out = self.out.lock().expect("trace sink poisoned");
        if let Ok(line) = serde_json::to_string(ev) {
            let _ = writeln!(out, "{line}");
        }
    }
}

/// Collects events in memory (used by tests and the acceptance suite).
#[derive(Default)]
pub struct CollectSink {
    events: Mutex<Vec<TraceEvent>>,
}

impl CollectSink {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn take(&self) -> Vec<TraceEvent> {
        std::mem::take(&mut self.events.lock().expect("trace sink poisoned"))
    }
}

impl TraceSink for CollectSink {
    fn record(&self, ev: &TraceEvent) {
        self.events.lock().expect("trace sink poisoned").push(ev.clone());
    }
}
