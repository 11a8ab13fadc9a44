//! Stepsize schedules shared by both solvers.

/// Shape of the stepsize sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    /// `eta_t = scale / sqrt(T)`: the horizon-tuned constant stepsize behind
    /// both O(1/sqrt(T)) rate statements.
    ConstantHorizon,
    /// `eta_t = scale / sqrt(t + 1)`.
    HarmonicSqrt,
    /// `eta_t = scale / (t + 1)`.
    Harmonic,
}

impl ScheduleKind {
    pub fn name(self) -> &'static str {
        match self {
            ScheduleKind::ConstantHorizon => "constant_horizon",
            ScheduleKind::HarmonicSqrt => "harmonic_sqrt",
            ScheduleKind::Harmonic => "harmonic",
        }
    }
}

/// A positive, non-increasing stepsize sequence `eta_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSchedule {
    pub kind: ScheduleKind,
    pub scale: f64,
}

impl StepSchedule {
    pub fn new(kind: ScheduleKind, scale: f64) -> Self {
        assert!(scale > 0.0 && scale.is_finite(), "scale must be positive");
        Self { kind, scale }
    }

    pub fn harmonic_sqrt() -> Self {
        Self::new(ScheduleKind::HarmonicSqrt, 1.0)
    }

    pub fn harmonic() -> Self {
        Self::new(ScheduleKind::Harmonic, 1.0)
    }

    pub fn constant_horizon(scale: f64) -> Self {
        Self::new(ScheduleKind::ConstantHorizon, scale)
    }

    /// Horizon-tuned scale for the incremental subgradient solver:
    /// `(1 / L_total) sqrt(D0 / (n + 1))`, so that
    /// `eta_t = (1 / L_total) sqrt(D0 / ((n + 1) T))`.
    pub fn finite_sum_scale(l_total: f64, d0: f64, dim: usize) -> f64 {
        (d0 / (dim as f64 + 1.0)).sqrt() / l_total
    }

    /// Horizon-tuned scale for the stochastic VI solver:
    /// `(1 / C_total) sqrt(sum_i log(n_i + 1))`, so that
    /// `eta_t = (1 / C_total) sqrt(sum_i log(n_i + 1) / T)`.
    pub fn vi_scale(c_total: f64, dims: &[usize]) -> f64 {
        let log_sum: f64 = dims.iter().map(|&n| (n as f64 + 1.0).ln()).sum();
        log_sum.sqrt() / c_total
    }

    /// Stepsize at (0-based) iteration `t` for a run of `horizon` iterations.
    pub fn eta(&self, t: usize, horizon: usize) -> f64 {
        match self.kind {
            ScheduleKind::ConstantHorizon => self.scale / (horizon.max(1) as f64).sqrt(),
            ScheduleKind::HarmonicSqrt => self.scale / ((t + 1) as f64).sqrt(),
            ScheduleKind::Harmonic => self.scale / (t + 1) as f64,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequences_are_positive_and_non_increasing() {
        for sched in [
            StepSchedule::constant_horizon(0.7),
            StepSchedule::harmonic_sqrt(),
            StepSchedule::harmonic(),
        ] {
            let mut prev = f64::INFINITY;
            for t in 0..1000 {
                let eta = sched.eta(t, 1000);
                assert!(eta > 0.0);
                assert!(eta <= prev);
                prev = eta;
            }
        }
    }

    #[test]
    fn harmonic_values() {
        let s = StepSchedule::harmonic_sqrt();
        assert!((s.eta(0, 10) - 1.0).abs() < 1e-15);
        assert!((s.eta(3, 10) - 0.5).abs() < 1e-15);
        let h = StepSchedule::harmonic();
        assert!((h.eta(9, 10) - 0.1).abs() < 1e-15);
    }
}
