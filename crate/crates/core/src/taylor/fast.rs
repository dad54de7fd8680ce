//! FFT evaluation of the truncated convolutions.
//!
//! Each order is synthesized once on a zero-padded `L × L` grid with
//! `L = 4N + 1`; products of two fields band-limited to `|k| <= N` then carry
//! wavenumbers up to `2N < L/2`, so nothing aliases back into the box. The
//! time convolution becomes a pointwise sum of products, followed by one
//! forward transform per component.
//!
//! Results are mirrored from canonical modes, which assumes Hermitian input
//! slices (every [`TaylorTable`] holds such slices).

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{NonlinearTerms, TaylorTable, I, ZERO};
use crate::error::Result;
use crate::lattice::ModeLattice;
use crate::state::SpectralState;

/// Physical-space samples of one order: velocity and its gradients.
struct Synthesized {
    c: Vec<Complex64>,
    d: Vec<Complex64>,
    cx: Vec<Complex64>,
    cy: Vec<Complex64>,
    dx: Vec<Complex64>,
    dy: Vec<Complex64>,
}

pub struct TransformConvolver {
    lattice: ModeLattice,
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    cache: Vec<Synthesized>,
}

impl TransformConvolver {
    pub fn new(lattice: ModeLattice) -> Self {
        let len = 4 * lattice.bound() + 1;
        let mut planner = FftPlanner::new();
        Self {
            lattice,
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
            cache: Vec::new(),
        }
    }

    /// Grid side `L`.
    pub fn grid_len(&self) -> usize {
        self.len
    }

    /// `FC_p`, `FD_p`; syntheses of orders already seen are reused, so a
    /// convolver must only be fed tables that share their leading orders.
    pub fn terms(&mut self, table: &TaylorTable, p: usize) -> Result<NonlinearTerms> {
        if p > table.p_max() {
            return Err(crate::Error::OrderUnavailable { requested: p, available: table.p_max() });
        }
        if table.lattice() != self.lattice {
            return Err(crate::Error::LatticeMismatch { expected: self.lattice.bound(), found: table.lattice().bound() });
        }
        while self.cache.len() <= p {
            let next = self.synthesize(&table.orders()[self.cache.len()]);
            self.cache.push(next);
        }

        let cells = self.len * self.len;
        let mut nl_c = vec![ZERO; cells];
        let mut nl_d = vec![ZERO; cells];
        for u in 0..=p {
            let (a, b) = (&self.cache[u], &self.cache[p - u]);
            for x in 0..cells {
                nl_c[x] += a.c[x] * b.cx[x] + a.d[x] * b.cy[x];
                nl_d[x] += a.c[x] * b.dx[x] + a.d[x] * b.dy[x];
            }
        }
        self.fft2(&mut nl_c, false);
        self.fft2(&mut nl_d, false);

        let lattice = self.lattice;
        let norm = 1.0 / cells as f64;
        let cur = &table.orders()[p];
        let mut fc = vec![ZERO; lattice.len()];
        let mut fd = vec![ZERO; lattice.len()];
        for (k, mode) in lattice.modes().enumerate() {
            if !mode.is_canonical() {
                continue;
            }
            let g = self.grid_index(mode.n, mode.m);
            let visc = table.alpha() * mode.norm_sq() as f64;
            fc[k] = nl_c[g] * norm + cur.c_slice()[k] * visc;
            fd[k] = nl_d[g] * norm + cur.d_slice()[k] * visc;
            let q = lattice.partner(k);
            if q != k {
                fc[q] = fc[k].conj();
                fd[q] = fd[k].conj();
            }
        }
        Ok(NonlinearTerms { lattice, fc, fd })
    }

    fn grid_index(&self, n: i32, m: i32) -> usize {
        let l = self.len as i32;
        (n.rem_euclid(l) as usize) * self.len + m.rem_euclid(l) as usize
    }

    fn synthesize(&self, slice: &SpectralState) -> Synthesized {
        let cells = self.len * self.len;
        let mut grids: [Vec<Complex64>; 6] = std::array::from_fn(|_| vec![ZERO; cells]);
        for (k, mode) in self.lattice.modes().enumerate() {
            let g = self.grid_index(mode.n, mode.m);
            let (c, d) = (slice.c_slice()[k], slice.d_slice()[k]);
            let (ikx, iky) = (I * mode.n as f64, I * mode.m as f64);
            grids[0][g] = c;
            grids[1][g] = d;
            grids[2][g] = c * ikx;
            grids[3][g] = c * iky;
            grids[4][g] = d * ikx;
            grids[5][g] = d * iky;
        }
        for grid in grids.iter_mut() {
            self.fft2(grid, true);
        }
        let [c, d, cx, cy, dx, dy] = grids;
        Synthesized { c, d, cx, cy, dx, dy }
    }

    /// Unnormalized 2D transform, rows then columns.
    fn fft2(&self, data: &mut [Complex64], inverse: bool) {
        let plan = if inverse { &self.inverse } else { &self.forward };
        let l = self.len;
        plan.process(data);
        let mut col = vec![ZERO; l];
        for j in 0..l {
            for i in 0..l {
                col[i] = data[i * l + j];
            }
            plan.process(&mut col);
            for i in 0..l {
                data[i * l + j] = col[i];
            }
        }
    }
}
