//! Taylor coefficients in time of the truncated Fourier-Galerkin system.
//!
//! Writing `C(n,m;t) = Σ_p C_p(n,m) t^p`, each order follows from the ones
//! before it:
//!
//! ```text
//! FC_p(n,m) = ι Σ_{u+v=p} Σ_{i+s=n, j+t=m} (C_u(i,j) s + D_u(i,j) t) C_v(s,t) + α(n²+m²) C_p(n,m)
//! FD_p(n,m) = ι Σ_{u+v=p} Σ_{i+s=n, j+t=m} (C_u(i,j) s + D_u(i,j) t) D_v(s,t) + α(n²+m²) D_p(n,m)
//! C_{p+1} = P(-FC_p, -FD_p) / (p + 1)
//! ```
//!
//! where every index is clipped to the lattice and `P` eliminates the
//! pressure mode by mode (see [`project_rhs`]).

mod dump;
mod fast;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use dump::{decode_table, encode_table, read_table, write_table};
pub use fast::TransformConvolver;

use crate::error::{Error, Result};
use crate::lattice::{ModeLattice, Region, WaveIndex};
use crate::state::{close, SpectralState};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// How the spatial convolution is evaluated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvolutionMethod {
    /// Quadruple sum in fixed ascending `(u, i, j)` order.
    #[default]
    Direct,
    /// Zero-padded FFT products on a `(4N+1)²` grid.
    Transform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SeriesStatus {
    Complete,
    /// A non-finite coefficient appeared while computing `failed_order`; the
    /// table is frozen at the last finite order.
    DivergedOverflow { failed_order: usize },
}

/// Coefficient slices `C_p, D_p` for `p = 0..=P_max`.
#[derive(Debug, Clone)]
pub struct TaylorTable {
    alpha: f64,
    orders: Vec<SpectralState>,
    status: SeriesStatus,
}

impl TaylorTable {
    /// A table holding only the initial condition.
    pub fn new(ic: SpectralState, alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::InvalidParameter { field: "alpha", reason: format!("{alpha} is not a nonnegative number") });
        }
        ic.validate()?;
        Ok(Self { alpha, orders: vec![ic], status: SeriesStatus::Complete })
    }

    pub(crate) fn from_parts(alpha: f64, orders: Vec<SpectralState>, status: SeriesStatus) -> Self {
        Self { alpha, orders, status }
    }

    pub fn lattice(&self) -> ModeLattice {
        self.orders[0].lattice()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Highest computed order.
    pub fn p_max(&self) -> usize {
        self.orders.len() - 1
    }

    pub fn order(&self, p: usize) -> Option<&SpectralState> {
        self.orders.get(p)
    }

    pub fn orders(&self) -> &[SpectralState] {
        &self.orders
    }

    pub fn initial(&self) -> &SpectralState {
        &self.orders[0]
    }

    pub fn status(&self) -> SeriesStatus {
        self.status
    }

    pub fn overflowed(&self) -> bool {
        matches!(self.status, SeriesStatus::DivergedOverflow { .. })
    }

    /// The truncated series `Σ_{p <= P_max} X_p t^p`, accumulated in
    /// ascending order like the partial-sum traces.
    pub fn evaluate(&self, t: f64) -> SpectralState {
        let lattice = self.lattice();
        let mut c = vec![ZERO; lattice.len()];
        let mut d = vec![ZERO; lattice.len()];
        let mut power = 1.0f64;
        for (p, slice) in self.orders.iter().enumerate() {
            if p > 0 {
                power *= t;
            }
            for k in 0..lattice.len() {
                c[k] += slice.c_slice()[k] * power;
                d[k] += slice.d_slice()[k] * power;
            }
        }
        SpectralState::from_raw(lattice, c, d).expect("lattice-sized grids")
    }

    /// Appends order `p_max + 1`. A non-finite result is reported as
    /// [`Error::NonFinite`] and leaves the table unchanged.
    pub fn advance_order(&mut self, method: ConvolutionMethod) -> Result<&SpectralState> {
        let p = self.p_max();
        let terms = convolve_order(self, p, method)?;
        let next = next_slice(&terms, p)?;
        self.orders.push(next);
        Ok(&self.orders[p + 1])
    }

    fn advance_with(&mut self, convolver: &mut Option<TransformConvolver>) -> Result<()> {
        let p = self.p_max();
        let terms = match convolver {
            Some(fast) => fast.terms(self, p)?,
            None => convolve_order(self, p, ConvolutionMethod::Direct)?,
        };
        let next = next_slice(&terms, p)?;
        self.orders.push(next);
        Ok(())
    }
}

/// Builds the series up to `p_max`. Overflow is not an error: the table is
/// frozen at the last finite order and marked diverged.
pub fn build_series(ic: SpectralState, alpha: f64, p_max: usize, method: ConvolutionMethod) -> Result<TaylorTable> {
    let mut table = TaylorTable::new(ic, alpha)?;
    let mut convolver = match method {
        ConvolutionMethod::Direct => None,
        ConvolutionMethod::Transform => Some(TransformConvolver::new(table.lattice())),
    };
    while table.p_max() < p_max {
        match table.advance_with(&mut convolver) {
            Ok(()) => {}
            Err(Error::NonFinite { order }) => {
                table.status = SeriesStatus::DivergedOverflow { failed_order: order };
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(table)
}

/// The nonlinear-plus-viscous terms `FC`, `FD` at one order.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearTerms {
    lattice: ModeLattice,
    pub(crate) fc: Vec<Complex64>,
    pub(crate) fd: Vec<Complex64>,
}

impl NonlinearTerms {
    pub fn lattice(&self) -> ModeLattice {
        self.lattice
    }

    pub fn fc(&self, idx: WaveIndex) -> Complex64 {
        self.lattice.index(idx).map_or(ZERO, |k| self.fc[k])
    }

    pub fn fd(&self, idx: WaveIndex) -> Complex64 {
        self.lattice.index(idx).map_or(ZERO, |k| self.fd[k])
    }

    pub fn from_raw(lattice: ModeLattice, fc: Vec<Complex64>, fd: Vec<Complex64>) -> Result<Self> {
        if fc.len() != lattice.len() || fd.len() != lattice.len() {
            return Err(Error::InvalidParameter {
                field: "terms",
                reason: format!("expected {} values per component", lattice.len()),
            });
        }
        Ok(Self { lattice, fc, fd })
    }
}

/// `FC_p`, `FD_p` from orders `0..=p` of the table.
pub fn convolve_order(table: &TaylorTable, p: usize, method: ConvolutionMethod) -> Result<NonlinearTerms> {
    if p > table.p_max() {
        return Err(Error::OrderUnavailable { requested: p, available: table.p_max() });
    }
    match method {
        ConvolutionMethod::Direct => Ok(direct_terms(table.orders(), p, table.alpha())),
        ConvolutionMethod::Transform => TransformConvolver::new(table.lattice()).terms(table, p),
    }
}

pub(crate) fn direct_terms(orders: &[SpectralState], p: usize, alpha: f64) -> NonlinearTerms {
    let lattice = orders[0].lattice();
    let (fc, fd): (Vec<_>, Vec<_>) = (0..lattice.len())
        .into_par_iter()
        .map(|k| {
            let mode = lattice.mode_at(k);
            let (nc, nd) = direct_mode(orders, p, mode);
            let visc = alpha * mode.norm_sq() as f64;
            let cur = &orders[p];
            (I * nc + cur.c_slice()[k] * visc, I * nd + cur.d_slice()[k] * visc)
        })
        .unzip();
    NonlinearTerms { lattice, fc, fd }
}

/// `Σ_{u+v=p} Σ (C_u(i,j) s + D_u(i,j) t) (C_v(s,t), D_v(s,t))` at one mode,
/// without the leading factor `ι`.
///
/// Canonical modes accumulate in ascending `(u, i, j)`; their partners visit
/// the negated pairs in the same sequence, so Hermitian input gives exactly
/// conjugate sums at `±(n, m)`.
fn direct_mode(orders: &[SpectralState], p: usize, mode: WaveIndex) -> (Complex64, Complex64) {
    let lattice = orders[0].lattice();
    let b = lattice.bound() as i32;
    let side = lattice.side() as i32;
    let sign = if mode.is_canonical() { 1 } else { -1 };
    // canonical representative of the output mode
    let (cn, cm) = (sign * mode.n, sign * mode.m);
    let (i_lo, i_hi) = ((cn - b).max(-b), (cn + b).min(b));
    let (j_lo, j_hi) = ((cm - b).max(-b), (cm + b).min(b));
    let mut acc_c = ZERO;
    let mut acc_d = ZERO;
    for u in 0..=p {
        let (a, bs) = (&orders[u], &orders[p - u]);
        let (ac, ad) = (a.c_slice(), a.d_slice());
        let (bc, bd) = (bs.c_slice(), bs.d_slice());
        for ci in i_lo..=i_hi {
            let i = sign * ci;
            let s = mode.n - i;
            let row_a = (i + b) * side + b;
            let row_b = (s + b) * side + b;
            for cj in j_lo..=j_hi {
                let j = sign * cj;
                let t = mode.m - j;
                let ka = (row_a + j) as usize;
                let kb = (row_b + t) as usize;
                let w = ac[ka] * s as f64 + ad[ka] * t as f64;
                acc_c += w * bc[kb];
                acc_d += w * bd[kb];
            }
        }
    }
    (acc_c, acc_d)
}

/// The independent component of the projected right-hand side at a
/// non-mean mode: `dC` in region 1, `dD` in region 2.
#[inline]
fn project_independent(fc: Complex64, fd: Complex64, mode: WaveIndex) -> Result<Complex64> {
    match mode.region() {
        Region::Region1 => {
            let r = mode.n as f64 / mode.m as f64;
            Ok((-fc + fd * r) / (1.0 + r * r))
        }
        Region::Region2 => {
            let r = mode.m as f64 / mode.n as f64;
            Ok((-fd + fc * r) / (1.0 + r * r))
        }
        Region::MeanMode => Err(Error::MeanMode),
    }
}

/// Time derivative `(dC, dD)` at `idx` with the pressure eliminated.
///
/// Region 1 solves `(1 + (n/m)²) dC = -FC + (n/m) FD` and closes
/// `dD = -(n/m) dC`; region 2 solves the mirrored equation for `dD`. Both are
/// the divergence-free projection `dC = (-m² FC + nm FD) / (n² + m²)`.
pub fn project_rhs(terms: &NonlinearTerms, idx: WaveIndex) -> Result<(Complex64, Complex64)> {
    let k = terms.lattice.try_index(idx)?;
    let z = project_independent(terms.fc[k], terms.fd[k], idx)?;
    Ok(match idx.region() {
        Region::Region1 => close(idx, z, ZERO),
        _ => close(idx, ZERO, z),
    })
}

/// Projected derivative for every mode, scaled by `scale`, with the mean
/// mode pinned to zero. The scale is applied before closing the dependent
/// component so closure consistency stays exact.
pub(crate) fn projected_state(terms: &NonlinearTerms, scale: f64) -> Result<SpectralState> {
    let lattice = terms.lattice;
    let mut c = vec![ZERO; lattice.len()];
    let mut d = vec![ZERO; lattice.len()];
    for (k, mode) in lattice.modes().enumerate() {
        if mode == WaveIndex::MEAN {
            continue;
        }
        let z = project_independent(terms.fc[k], terms.fd[k], mode)? * scale;
        let (ck, dk) = match mode.region() {
            Region::Region1 => close(mode, z, ZERO),
            _ => close(mode, ZERO, z),
        };
        c[k] = ck;
        d[k] = dk;
    }
    SpectralState::from_raw(lattice, c, d)
}

fn next_slice(terms: &NonlinearTerms, p: usize) -> Result<SpectralState> {
    let next = projected_state(terms, 1.0 / (p + 1) as f64)?;
    if !next.is_finite() {
        return Err(Error::NonFinite { order: p + 1 });
    }
    Ok(next)
}

#[cfg(test)]
mod tests;
