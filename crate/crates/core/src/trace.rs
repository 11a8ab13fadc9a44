//! Per-iteration run records shared by the solvers and the experiment runner.

/// One logged checkpoint of a solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    /// Iteration count at the checkpoint (1-based: the row describes the
    /// iterate after `t` iterations).
    pub t: usize,
    /// Merit value at the checkpoint: the VI gap for game runs, the current
    /// suboptimality `f_min - f*` for finite-sum runs with a known optimum,
    /// `NaN` when neither is available.
    pub gap: f64,
    /// Problem-specific extras: per-player payoffs for game runs, the current
    /// objective value and best-so-far for finite-sum runs.
    pub values: Vec<f64>,
    /// Theoretical O(1/sqrt(t)) reference bound evaluated at this checkpoint.
    pub bound: f64,
}

/// Ordered checkpoint log of a single solver run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTrace {
    pub rows: Vec<TraceRow>,
}

impl RunTrace {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last_gap(&self) -> Option<f64> {
        self.rows.last().map(|r| r.gap)
    }
}
