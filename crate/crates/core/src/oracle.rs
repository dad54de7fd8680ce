//! Classical fourth-order Runge-Kutta integration of the truncated system.
//!
//! The right-hand side reuses the order-0 convolution and the per-mode
//! projection; only the time discretization differs from the Taylor route.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::state::SpectralState;
use crate::taylor::{direct_terms, projected_state};

#[derive(Debug, Clone)]
pub struct OdeRunConfig {
    pub alpha: f64,
    pub t_end: f64,
    pub dt: f64,
    pub ic: SpectralState,
}

/// `min(1e-3, t_end / 100)`.
pub fn default_dt(t_end: f64) -> f64 {
    if t_end > 0.0 {
        (t_end / 100.0).min(1e-3)
    } else {
        1e-3
    }
}

impl OdeRunConfig {
    pub fn new(ic: SpectralState, alpha: f64, t_end: f64, dt: f64) -> Self {
        Self { alpha, t_end, dt, ic }
    }

    /// Number of steps; `t_end / dt` must be an integer up to rounding.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter { field: "dt", reason: format!("{} is not a positive step", self.dt) });
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::InvalidParameter { field: "t_end", reason: format!("{} is not a nonnegative time", self.t_end) });
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::InvalidParameter { field: "alpha", reason: format!("{} is negative", self.alpha) });
        }
        let ratio = self.t_end / self.dt;
        let steps = ratio.round();
        if (ratio - steps).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::InvalidParameter {
                field: "dt",
                reason: format!("t_end / dt = {ratio} is not an integer number of steps"),
            });
        }
        Ok(steps as usize)
    }
}

/// `dC/dt`, `dD/dt` of the truncated system; zero at the mean mode.
pub fn rhs(state: &SpectralState, alpha: f64) -> Result<SpectralState> {
    let terms = direct_terms(std::slice::from_ref(state), 0, alpha);
    projected_state(&terms, 1.0)
}

fn axpy(y: &SpectralState, h: f64, k: &SpectralState) -> SpectralState {
    let combine = |a: &[Complex64], b: &[Complex64]| a.iter().zip(b).map(|(x, d)| x + d * h).collect::<Vec<_>>();
    SpectralState::from_raw(y.lattice(), combine(y.c_slice(), k.c_slice()), combine(y.d_slice(), k.d_slice()))
        .expect("same lattice")
}

/// Runs `t_end / dt` RK4 steps from the initial condition.
pub fn integrate(config: &OdeRunConfig) -> Result<SpectralState> {
    let steps = config.steps()?;
    config.ic.validate()?;
    let (h, alpha) = (config.dt, config.alpha);
    let mut y = config.ic.clone();
    for step in 0..steps {
        let k1 = rhs(&y, alpha)?;
        let k2 = rhs(&axpy(&y, 0.5 * h, &k1), alpha)?;
        let k3 = rhs(&axpy(&y, 0.5 * h, &k2), alpha)?;
        let k4 = rhs(&axpy(&y, h, &k3), alpha)?;
        let mut c = y.c_slice().to_vec();
        let mut d = y.d_slice().to_vec();
        for (i, (cc, dd)) in c.iter_mut().zip(d.iter_mut()).enumerate() {
            *cc += (k1.c_slice()[i] + (k2.c_slice()[i] + k3.c_slice()[i]) * 2.0 + k4.c_slice()[i]) * (h / 6.0);
            *dd += (k1.d_slice()[i] + (k2.d_slice()[i] + k3.d_slice()[i]) * 2.0 + k4.d_slice()[i]) * (h / 6.0);
        }
        y = SpectralState::from_raw(y.lattice(), c, d)?;
        if !y.is_finite() {
            return Err(Error::OracleBlowup { step: step + 1 });
        }
    }
    Ok(y)
}

/// Largest coefficient-wise `|a - b|` over both components.
pub fn max_abs_difference(a: &SpectralState, b: &SpectralState) -> f64 {
    a.c_slice()
        .iter()
        .zip(b.c_slice())
        .chain(a.d_slice().iter().zip(b.d_slice()))
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}
