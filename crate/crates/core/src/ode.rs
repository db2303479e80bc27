//! Mean-field reference for the linear consensus dynamics
//! `dc/dt = -L c + delta (z - c)`.

use alloc::vec::Vec;

use thiserror::Error;

use crate::chem::sample_grid;
use crate::linalg::{LinalgError, Matrix};
use crate::topology::{algebraic_connectivity, laplacian, NetworkGraph, TopologyError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("dimension mismatch between laplacian, z and c0")]
    Dimension,
    #[error("laplacian rows must sum to zero")]
    NotLaplacian,
    #[error("delta must be finite and >= 0")]
    NegativeDelta,
    #[error("step {dt} exceeds the stability limit {max}")]
    StepTooLarge { dt: f64, max: f64 },
    #[error("invalid time arguments: {0}")]
    InvalidTime(&'static str),
    #[error("L + delta I is singular (delta = 0)")]
    Singular,
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

impl From<LinalgError> for OdeError {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::Singular => OdeError::Singular,
            LinalgError::Dimension => OdeError::Dimension,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub laplacian: Matrix,
    pub delta: f64,
    pub z: Vec<f64>,
    pub c0: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeSample {
    pub t: f64,
    pub state: Vec<f64>,
}

impl LinearModel {
    pub fn new(laplacian: Matrix, delta: f64, z: Vec<f64>, c0: Vec<f64>) -> Result<Self, OdeError> {
        let n = laplacian.rows();
        if laplacian.cols() != n || z.len() != n || c0.len() != n {
            return Err(OdeError::Dimension);
        }
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(OdeError::NegativeDelta);
        }
        for i in 0..n {
            let s: f64 = laplacian.row(i).iter().sum();
            let scale = laplacian[(i, i)].abs().max(1.0);
            if s.abs() > 1e-9 * scale {
                return Err(OdeError::NotLaplacian);
            }
        }
        Ok(Self {
            laplacian,
            delta,
            z,
            c0,
        })
    }

    pub fn from_graph(g: &NetworkGraph, delta: f64, z: Vec<f64>, c0: Vec<f64>) -> Result<Self, OdeError> {
        Self::new(laplacian(g), delta, z, c0)
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }

    /// Largest step accepted by [`integrate`].
    pub fn max_step(&self) -> f64 {
        let dmax = (0..self.dim())
            .map(|i| self.laplacian[(i, i)])
            .fold(0.0, f64::max);
        0.1 / (dmax + self.delta).max(1e-300)
    }

    pub fn derivative(&self, c: &[f64]) -> Vec<f64> {
        let lc = self.laplacian.mul_vec(c);
        lc.iter()
            .zip(c)
            .zip(&self.z)
            .map(|((l, ci), zi)| -l + self.delta * (zi - ci))
            .collect()
    }

    /// `L + delta I`.
    pub fn system_matrix(&self) -> Matrix {
        self.laplacian
            .add(&Matrix::identity(self.dim()).scale(self.delta))
    }
}

fn axpy(x: &[f64], a: f64, y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(xi, yi)| xi + a * yi).collect()
}

fn rk4_step(m: &LinearModel, c: &[f64], h: f64) -> Vec<f64> {
    let k1 = m.derivative(c);
    let k2 = m.derivative(&axpy(c, h / 2.0, &k1));
    let k3 = m.derivative(&axpy(c, h / 2.0, &k2));
    let k4 = m.derivative(&axpy(c, h, &k3));
    (0..c.len())
        .map(|i| c[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Classical RK4 with step at most `dt`, sampled on the grid
/// `0, interval, ..., t_end`. Each grid gap is split into equal substeps.
pub fn integrate(model: &LinearModel, t_end: f64, dt: f64, interval: f64) -> Result<Vec<OdeSample>, OdeError> {
    if !(dt > 0.0) || !(interval > 0.0) || !(t_end > 0.0) {
        return Err(OdeError::InvalidTime("dt, interval and t_end must be positive"));
    }
    let max = model.max_step();
    if dt > max {
        return Err(OdeError::StepTooLarge { dt, max });
    }
    let mut out = Vec::new();
    let mut c = model.c0.clone();
    let mut t = 0.0;
    for tg in sample_grid(0.0, t_end, interval) {
        let gap = tg - t;
        if gap > 0.0 {
            let n = libm::ceil(gap / dt - 1e-9).max(1.0) as usize;
            let h = gap / n as f64;
            for _ in 0..n {
                c = rk4_step(model, &c, h);
            }
        }
        t = tg;
        out.push(OdeSample { t, state: c.clone() });
    }
    Ok(out)
}

/// `c(t) = E c0 + (L + delta I)^{-1} (I - E) delta z`, `E = exp(-(L + delta I) t)`.
pub fn analytic_response(model: &LinearModel, t: f64) -> Result<Vec<f64>, OdeError> {
    if model.delta == 0.0 {
        return Err(OdeError::Singular);
    }
    if !(t >= 0.0) {
        return Err(OdeError::InvalidTime("t must be >= 0"));
    }
    if t == 0.0 {
        return Ok(model.c0.clone());
    }
    let a = model.system_matrix();
    let e = a.scale(-t).expm();
    let ec0 = e.mul_vec(&model.c0);
    let dz: Vec<f64> = model.z.iter().map(|z| z * model.delta).collect();
    let edz = e.mul_vec(&dz);
    let rhs: Vec<f64> = dz.iter().zip(&edz).map(|(a, b)| a - b).collect();
    let forced = a.solve(&rhs)?;
    Ok(ec0.iter().zip(&forced).map(|(a, b)| a + b).collect())
}

/// Solves `(L + delta I) c = delta z`.
pub fn steady_state(model: &LinearModel) -> Result<Vec<f64>, OdeError> {
    if model.delta == 0.0 {
        return Err(OdeError::Singular);
    }
    let dz: Vec<f64> = model.z.iter().map(|z| z * model.delta).collect();
    Ok(model.system_matrix().solve(&dz)?)
}

/// `ln(1 / threshold) / (2 lambda_2)`: time for an error normalized to 1 at
/// `t = 0` to decay below `threshold` at the mirror-spectrum rate.
pub fn convergence_time_bound(g: &NetworkGraph, threshold: f64) -> Result<f64, OdeError> {
    decay_time_bound(g, 1.0, threshold)
}

/// `ln(initial / threshold) / (2 lambda_2)`, zero when already below.
pub fn decay_time_bound(g: &NetworkGraph, initial: f64, threshold: f64) -> Result<f64, OdeError> {
    if !(threshold > 0.0) || !(initial > 0.0) {
        return Err(OdeError::InvalidTime("initial error and threshold must be positive"));
    }
    g.validate_for_consensus()?;
    let l2 = algebraic_connectivity(g)?;
    Ok((libm::log(initial / threshold) / (2.0 * l2)).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{make_complete, make_ring};
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    fn pair(delta: f64) -> LinearModel {
        LinearModel::from_graph(&make_complete(2).unwrap(), delta, vec![500.0, 300.0], vec![500.0, 300.0])
            .unwrap()
    }

    #[test]
    fn pair_closed_form() {
        let traj = integrate(&pair(0.0), 3.0, 0.01, 0.1).unwrap();
        for s in &traj {
            let d = 100.0 * libm::exp(-2.0 * s.t);
            assert_abs_diff_eq!(s.state[0], 400.0 + d, epsilon = 1e-6);
            assert_abs_diff_eq!(s.state[1], 400.0 - d, epsilon = 1e-6);
        }
        assert_eq!(traj.len(), 31);
    }

    #[test]
    fn step_precondition() {
        let m = pair(0.0);
        assert_eq!(m.max_step(), 0.1);
        assert!(matches!(integrate(&m, 1.0, 0.2, 0.1), Err(OdeError::StepTooLarge { .. })));
    }

    #[test]
    fn analytic_endpoints() {
        let m = pair(0.1);
        assert_eq!(analytic_response(&m, 0.0).unwrap(), m.c0);
        let far = analytic_response(&m, 500.0).unwrap();
        let ss = steady_state(&m).unwrap();
        for (a, b) in far.iter().zip(&ss) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
        assert_eq!(analytic_response(&pair(0.0), 1.0), Err(OdeError::Singular));
    }

    #[test]
    fn constant_measurements_are_fixed() {
        let g = make_ring(6).unwrap();
        let m = LinearModel::from_graph(&g, 0.3, vec![7.0; 6], vec![0.0; 6]).unwrap();
        for c in steady_state(&m).unwrap() {
            assert_abs_diff_eq!(c, 7.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn bound_scales_inversely_with_lambda2() {
        let ring = convergence_time_bound(&make_ring(25).unwrap(), 0.01).unwrap();
        assert_abs_diff_eq!(ring, libm::log(100.0) / (2.0 * 0.0314), epsilon = 1.5);
        let complete = convergence_time_bound(&make_complete(25).unwrap(), 0.01).unwrap();
        assert!(complete < 0.26);
        assert_eq!(decay_time_bound(&make_ring(5).unwrap(), 0.001, 0.01).unwrap(), 0.0);
    }
}
