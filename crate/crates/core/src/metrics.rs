//! Error measures over trajectories.
//!
//! `nmse` normalizes the per-node squared error by the squared reference
//! average; `mse` is the same quantity left in measurement units.

use alloc::vec::Vec;

/// Node states at one instant, in measurement units.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrajectorySample {
    pub t: f64,
    pub state: Vec<f64>,
    pub active: Vec<bool>,
}

impl TrajectorySample {
    pub fn all_active(t: f64, state: Vec<f64>) -> Self {
        let active = alloc::vec![true; state.len()];
        Self { t, state, active }
    }

    pub fn active_mean(&self) -> f64 {
        active_mean(&self.state, &self.active)
    }
}

/// Mean over active entries; NaN when no node is active.
pub fn active_mean(values: &[f64], active: &[bool]) -> f64 {
    let (sum, n) = values
        .iter()
        .zip(active)
        .filter(|(_, &a)| a)
        .fold((0.0, 0usize), |(s, n), (&x, _)| (s + x, n + 1));
    sum / n as f64
}

/// `(1/M_a) sum_active (x_i - z_avg)^2`, `z_avg` the active mean of `z_ref`.
pub fn mse(state: &[f64], active: &[bool], z_ref: &[f64]) -> f64 {
    let z_avg = active_mean(z_ref, active);
    let (sum, n) = state
        .iter()
        .zip(active)
        .filter(|(_, &a)| a)
        .fold((0.0, 0usize), |(s, n), (&x, _)| {
            (s + (x - z_avg) * (x - z_avg), n + 1)
        });
    sum / n as f64
}

/// [`mse`] divided by `z_avg^2`.
pub fn nmse(state: &[f64], active: &[bool], z_ref: &[f64]) -> f64 {
    let z_avg = active_mean(z_ref, active);
    mse(state, active, z_ref) / (z_avg * z_avg)
}

/// Spread of the active states around their own mean, normalized by the
/// squared mean.
pub fn deviation(state: &[f64], active: &[bool]) -> f64 {
    let m = active_mean(state, active);
    let (sum, n) = state
        .iter()
        .zip(active)
        .filter(|(_, &a)| a)
        .fold((0.0, 0usize), |(s, n), (&x, _)| (s + (x - m) * (x - m), n + 1));
    sum / n as f64 / (m * m)
}

/// Earliest sample time after which every sample stays below `threshold`.
pub fn convergence_time(times: &[f64], series: &[f64], threshold: f64) -> Option<f64> {
    assert_eq!(times.len(), series.len());
    let mut start = None;
    for (&t, &v) in times.iter().zip(series) {
        if v < threshold {
            start.get_or_insert(t);
        } else {
            start = None;
        }
    }
    start
}
