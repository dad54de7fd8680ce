//! Velocity coefficient grids and the constraints they must satisfy.
//!
//! The velocity is `v_x = Σ C(n,m) e^{inx} e^{imy}`, `v_y = Σ D(n,m) e^{inx} e^{imy}`
//! on the `2π`-periodic box. A physical state obeys two constraints:
//!
//! * reality: `C(-n,-m) = conj C(n,m)` and likewise for `D`;
//! * incompressibility: `n C(n,m) + m D(n,m) = 0`.
//!
//! Both components are stored densely. In region 1 the stored `D` is always
//! the closure `-(n/m) C` of the stored `C`, in region 2 the stored `C` is
//! `-(m/n) D`; [`SpectralState::is_closure_consistent`] checks that bitwise.

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Component, Error, Result};
use crate::lattice::{ModeLattice, Region, WaveIndex};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Tolerance on Hermitian asymmetry, relative to the largest coefficient,
/// beyond which a state is treated as corrupted.
pub const REALITY_TOLERANCE: f64 = 1e-10;

/// Imaginary residue of evaluated fields below this fraction of the field
/// magnitude is discarded.
pub const IMAG_RESIDUE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralState {
    lattice: ModeLattice,
    c: Vec<Complex64>,
    d: Vec<Complex64>,
}

impl SpectralState {
    pub fn zeros(lattice: ModeLattice) -> Self {
        Self { lattice, c: vec![ZERO; lattice.len()], d: vec![ZERO; lattice.len()] }
    }

    /// Wraps raw storage-order grids without checking any invariant.
    pub fn from_raw(lattice: ModeLattice, c: Vec<Complex64>, d: Vec<Complex64>) -> Result<Self> {
        if c.len() != lattice.len() || d.len() != lattice.len() {
            return Err(Error::InvalidParameter {
                field: "grid",
                reason: format!("expected {} coefficients per component", lattice.len()),
            });
        }
        Ok(Self { lattice, c, d })
    }

    pub fn lattice(&self) -> ModeLattice {
        self.lattice
    }

    pub fn c(&self, idx: WaveIndex) -> Complex64 {
        self.lattice.index(idx).map_or(ZERO, |k| self.c[k])
    }

    pub fn d(&self, idx: WaveIndex) -> Complex64 {
        self.lattice.index(idx).map_or(ZERO, |k| self.d[k])
    }

    pub fn get(&self, idx: WaveIndex, component: Component) -> Complex64 {
        match component {
            Component::C => self.c(idx),
            Component::D => self.d(idx),
        }
    }

    /// Storage-order view of the x-velocity coefficients.
    pub fn c_slice(&self) -> &[Complex64] {
        &self.c
    }

    pub fn d_slice(&self) -> &[Complex64] {
        &self.d
    }

    #[cfg(test)]
    pub(crate) fn c_mut(&mut self) -> &mut [Complex64] {
        &mut self.c
    }

    /// Sets both components at a mode, no invariant enforcement.
    pub fn set(&mut self, idx: WaveIndex, c: Complex64, d: Complex64) -> Result<()> {
        let k = self.lattice.try_index(idx)?;
        self.c[k] = c;
        self.d[k] = d;
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.c.iter_mut().chain(out.d.iter_mut()).for_each(|z| *z *= s);
        out.reclose();
        out
    }

    /// Same coefficients on a different lattice; modes that do not fit must
    /// be zero.
    pub fn resampled(&self, lattice: ModeLattice) -> Result<Self> {
        let mut out = Self::zeros(lattice);
        for (k, mode) in self.lattice.modes().enumerate() {
            let (c, d) = (self.c[k], self.d[k]);
            match lattice.index(mode) {
                Some(j) => {
                    out.c[j] = c;
                    out.d[j] = d;
                }
                None if c == ZERO && d == ZERO => {}
                None => return Err(Error::ModeOutOfRange { mode, bound: lattice.bound() }),
            }
        }
        Ok(out)
    }

    /// Recomputes every dependent component from its independent one.
    pub(crate) fn reclose(&mut self) {
        for k in 0..self.lattice.len() {
            let mode = self.lattice.mode_at(k);
            let (c, d) = close(mode, self.c[k], self.d[k]);
            self.c[k] = c;
            self.d[k] = d;
        }
    }

    /// Largest `|X(k) - conj X(-k)|` over both components.
    pub fn reality_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for k in 0..self.lattice.len() {
            let p = self.lattice.partner(k);
            worst = worst.max((self.c[k] - self.c[p].conj()).norm());
            worst = worst.max((self.d[k] - self.d[p].conj()).norm());
        }
        worst
    }

    /// Bitwise Hermitian symmetry (signed zeros compare equal).
    pub fn is_hermitian_exact(&self) -> bool {
        (0..self.lattice.len()).all(|k| {
            let p = self.lattice.partner(k);
            self.c[k] == self.c[p].conj() && self.d[k] == self.d[p].conj()
        })
    }

    /// Stored dependent components equal, bit for bit, the incompressibility
    /// closure of the stored independent components.
    pub fn is_closure_consistent(&self) -> bool {
        self.first_closure_violation().is_none()
    }

    pub(crate) fn first_closure_violation(&self) -> Option<WaveIndex> {
        self.lattice.modes().enumerate().find_map(|(k, mode)| {
            let (c, d) = close(mode, self.c[k], self.d[k]);
            (c != self.c[k] || d != self.d[k]).then_some(mode)
        })
    }

    /// Largest `|n C + m D|`, evaluated in floating point.
    pub fn divergence_residual(&self) -> f64 {
        self.lattice
            .modes()
            .enumerate()
            .map(|(k, mode)| (self.c[k] * mode.n as f64 + self.d[k] * mode.m as f64).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_modulus(&self) -> f64 {
        compute_vmax(self)
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().chain(self.d.iter()).all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest mode radius `max(|n|, |m|)` carrying a nonzero coefficient.
    pub fn support_radius(&self) -> Option<u32> {
        self.lattice
            .modes()
            .enumerate()
            .filter(|&(k, _)| self.c[k] != ZERO || self.d[k] != ZERO)
            .map(|(_, mode)| mode.chebyshev_radius())
            .max()
    }

    /// Checks both invariants: Hermitian within [`REALITY_TOLERANCE`] and
    /// exact closure consistency.
    pub fn validate(&self) -> Result<()> {
        check_reality(self)?;
        match self.first_closure_violation() {
            Some(mode) => Err(Error::DivergenceViolated { mode }),
            None => Ok(()),
        }
    }
}

/// `-(n/m)` for region 1 (multiplies `C` to give `D`) or `-(m/n)` for region 2
/// (multiplies `D` to give `C`).
#[inline]
pub(crate) fn closure_ratio(mode: WaveIndex) -> f64 {
    match mode.region() {
        Region::Region1 => -(mode.n as f64 / mode.m as f64),
        Region::Region2 => -(mode.m as f64 / mode.n as f64),
        Region::MeanMode => 0.0,
    }
}

/// Fills the dependent component of `(c, d)` from the independent one.
#[inline]
pub(crate) fn close(mode: WaveIndex, c: Complex64, d: Complex64) -> (Complex64, Complex64) {
    match mode.region() {
        Region::Region1 => (c, c * closure_ratio(mode)),
        Region::Region2 => (d * closure_ratio(mode), d),
        Region::MeanMode => (c, d),
    }
}

fn check_reality(state: &SpectralState) -> Result<()> {
    let tolerance = REALITY_TOLERANCE * state.max_modulus();
    let deviation = state.reality_deviation();
    if deviation > tolerance {
        return Err(Error::RealityViolated { deviation, tolerance });
    }
    Ok(())
}

/// The independent coefficients a caller provides for an initial condition.
///
/// Independent slots are `C` on region 1, `D` on region 2, and both at the
/// mean mode. A dependent slot may also be given, but only if it equals the
/// closure of its independent partner exactly.
#[derive(Debug, Clone, Default)]
pub struct IndependentCoefficients {
    entries: BTreeMap<(WaveIndex, Component), Complex64>,
}

impl IndependentCoefficients {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, mode: WaveIndex, component: Component, value: Complex64) -> Result<()> {
        if self.entries.insert((mode, component), value).is_some() {
            return Err(Error::DuplicateEntry { mode, component });
        }
        Ok(())
    }

    pub fn with(mut self, mode: WaveIndex, component: Component, value: Complex64) -> Result<Self> {
        self.insert(mode, component, value)?;
        Ok(self)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn complete_incompressible(lattice: ModeLattice, partial: &IndependentCoefficients) -> Result<SpectralState> {
    let mut state = SpectralState::zeros(lattice);
    for (&(mode, component), &value) in &partial.entries {
        let k = lattice.try_index(mode)?;
        let independent = match mode.region() {
            Region::Region1 => component == Component::C,
            Region::Region2 => component == Component::D,
            Region::MeanMode => true,
        };
        if independent {
            match component {
                Component::C => state.c[k] = value,
                Component::D => state.d[k] = value,
            }
        }
    }
    state.reclose();
    for (&(mode, component), &value) in &partial.entries {
        if state.get(mode, component) != value {
            return Err(Error::InconsistentDependent { mode, component });
        }
    }
    Ok(state)
}

/// Hermitian symmetrization `X(k) <- (X(k) + conj X(-k)) / 2`.
pub fn enforce_reality(state: &SpectralState) -> SpectralState {
    let lat = state.lattice;
    let sym = |v: &[Complex64]| -> Vec<Complex64> {
        (0..lat.len()).map(|k| (v[k] + v[lat.partner(k)].conj()) * 0.5).collect()
    };
    SpectralState { lattice: lat, c: sym(&state.c), d: sym(&state.d) }
}

/// `max` over all modes of `max(|C|, |D|)`.
pub fn compute_vmax(state: &SpectralState) -> f64 {
    state.c.iter().chain(state.d.iter()).map(|z| z.norm()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyDiagnostics {
    /// `Σ |C|² + |D|²`, equal to the box mean of `v_x² + v_y²`.
    pub total: f64,
    /// The same sum grouped by shell `n² + m²`.
    pub per_shell: BTreeMap<i64, f64>,
}

pub fn energy(state: &SpectralState) -> EnergyDiagnostics {
    let mut per_shell = BTreeMap::new();
    let mut total = 0.0;
    for (k, mode) in state.lattice.modes().enumerate() {
        let e = state.c[k].norm_sqr() + state.d[k].norm_sqr();
        total += e;
        *per_shell.entry(mode.norm_sq()).or_insert(0.0) += e;
    }
    EnergyDiagnostics { total, per_shell }
}

/// Real velocity samples on a uniform `samples × samples` grid over `[0, 2π)²`,
/// indexed `[x, y]`.
#[derive(Debug, Clone)]
pub struct PhysicalField {
    pub vx: Array2<f64>,
    pub vy: Array2<f64>,
    /// Largest discarded imaginary part over both components.
    pub max_imag_residue: f64,
}

impl PhysicalField {
    pub fn mean_square(&self) -> f64 {
        let count = self.vx.len() as f64;
        self.vx.iter().zip(self.vy.iter()).map(|(a, b)| a * a + b * b).sum::<f64>() / count
    }
}

pub fn default_samples(lattice: ModeLattice) -> usize {
    4 * lattice.bound() + 1
}

/// Direct (separable) summation of the Fourier series at grid points.
pub fn evaluate_field(state: &SpectralState, samples: usize) -> Result<PhysicalField> {
    if samples == 0 {
        return Err(Error::InvalidParameter { field: "samples", reason: "must be positive".into() });
    }
    check_reality(state)?;
    let lat = state.lattice;
    let b = lat.bound() as i64;
    let side = lat.side();
    let g = samples as i64;
    // e^{i k x_j} with x_j = 2πj/G, k reduced mod G for an exact phase table.
    let phase: Vec<Complex64> = (0..samples)
        .map(|r| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * r as f64 / samples as f64))
        .collect();
    let twiddle = |k: i64, j: usize| phase[(k * j as i64).rem_euclid(g) as usize];

    let eval = |coef: &[Complex64]| -> Array2<Complex64> {
        // partial[n, y] = Σ_m coef(n, m) e^{i m y}
        let mut partial = Array2::from_elem((side, samples), ZERO);
        for row in 0..side {
            for j in 0..samples {
                let mut acc = ZERO;
                for col in 0..side {
                    acc += coef[row * side + col] * twiddle(col as i64 - b, j);
                }
                partial[[row, j]] = acc;
            }
        }
        let mut out = Array2::from_elem((samples, samples), ZERO);
        for i in 0..samples {
            for j in 0..samples {
                let mut acc = ZERO;
                for row in 0..side {
                    acc += partial[[row, j]] * twiddle(row as i64 - b, i);
                }
                out[[i, j]] = acc;
            }
        }
        out
    };

    let (cx, cy) = (eval(&state.c), eval(&state.d));
    let max_imag_residue = cx.iter().chain(cy.iter()).map(|z| z.im.abs()).fold(0.0, f64::max);
    Ok(PhysicalField { vx: cx.mapv(|z| z.re), vy: cy.mapv(|z| z.re), max_imag_residue })
}

/// One line of an initial-condition file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IcEntry {
    pub n: i32,
    pub m: i32,
    pub component: Component,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IcFile {
    pub entries: Vec<IcEntry>,
}

/// An initial condition after completion and symmetrization.
#[derive(Debug, Clone)]
pub struct LoadedIc {
    pub state: SpectralState,
    pub v_max: f64,
}

impl IcFile {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
        serde_json::from_str(&text).map_err(|source| Error::Json { path: path.into(), source })
    }

    /// Completes the incompressible closure, symmetrizes, and reports `v_max`.
    pub fn build(&self, lattice: ModeLattice) -> Result<LoadedIc> {
        let mut partial = IndependentCoefficients::new();
        for e in &self.entries {
            partial.insert(WaveIndex::new(e.n, e.m), e.component, Complex64::new(e.re, e.im))?;
        }
        let mut state = enforce_reality(&complete_incompressible(lattice, &partial)?);
        // symmetrizing the dependent slots can cost an ulp of closure
        state.reclose();
        let v_max = compute_vmax(&state);
        Ok(LoadedIc { state, v_max })
    }
}

/// A random real, divergence-free state supported on `max(|n|,|m|) <= radius`
/// (mean mode excluded), rescaled so its `v_max` is `v_max`.
pub fn random_state<R: Rng + ?Sized>(lattice: ModeLattice, radius: u32, v_max: f64, rng: &mut R) -> SpectralState {
    let mut state = SpectralState::zeros(lattice);
    for k in 0..lattice.len() {
        let mode = lattice.mode_at(k);
        if mode == WaveIndex::MEAN || !mode.is_canonical() || mode.chebyshev_radius() > radius {
            continue;
        }
        let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let (c, d) = match mode.region() {
            Region::Region1 => close(mode, z, ZERO),
            _ => close(mode, ZERO, z),
        };
        let p = lattice.partner(k);
        state.c[k] = c;
        state.d[k] = d;
        state.c[p] = c.conj();
        state.d[p] = d.conj();
    }
    let current = compute_vmax(&state);
    if current > 0.0 {
        let s = v_max / current;
        state.c.iter_mut().chain(state.d.iter_mut()).for_each(|z| *z *= s);
        state.reclose();
    }
    state
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lat(n: usize) -> ModeLattice {
        ModeLattice::new(n).unwrap()
    }

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sin_y_state() -> SpectralState {
        let mut s = SpectralState::zeros(lat(3));
        s.set(WaveIndex::new(0, 1), c64(0.0, -0.5), ZERO).unwrap();
        s.set(WaveIndex::new(0, -1), c64(0.0, 0.5), ZERO).unwrap();
        s
    }

    #[test]
    fn completion_fills_dependents() {
        let p = IndependentCoefficients::new()
            .with(WaveIndex::new(1, 2), Component::C, c64(0.01, 0.0))
            .unwrap()
            .with(WaveIndex::new(0, 3), Component::C, c64(0.2, 0.1))
            .unwrap()
            .with(WaveIndex::new(4, 0), Component::D, c64(0.3, -0.1))
            .unwrap();
        let s = complete_incompressible(lat(5), &p).unwrap();
        assert_eq!(s.d(WaveIndex::new(1, 2)), c64(-0.005, 0.0));
        assert_eq!(s.d(WaveIndex::new(0, 3)).norm(), 0.0);
        assert_eq!(s.c(WaveIndex::new(4, 0)).norm(), 0.0);
        assert!(s.is_closure_consistent());
    }

    #[test]
    fn completion_rejects_inconsistent_dependent() {
        let p = IndependentCoefficients::new()
            .with(WaveIndex::new(1, 2), Component::C, c64(0.01, 0.0))
            .unwrap()
            .with(WaveIndex::new(1, 2), Component::D, c64(0.01, 0.0))
            .unwrap();
        assert!(matches!(
            complete_incompressible(lat(5), &p),
            Err(Error::InconsistentDependent { component: Component::D, .. })
        ));
        let ok = IndependentCoefficients::new()
            .with(WaveIndex::new(1, 2), Component::C, c64(0.01, 0.0))
            .unwrap()
            .with(WaveIndex::new(1, 2), Component::D, c64(-0.005, 0.0))
            .unwrap();
        assert!(complete_incompressible(lat(5), &ok).is_ok());
    }

    #[test]
    fn completion_rejects_out_of_lattice() {
        let p = IndependentCoefficients::new().with(WaveIndex::new(6, 0), Component::D, c64(1.0, 0.0)).unwrap();
        assert!(matches!(complete_incompressible(lat(5), &p), Err(Error::ModeOutOfRange { .. })));
    }

    #[test]
    fn reality_symmetrization() {
        let mut s = SpectralState::zeros(lat(2));
        s.set(WaveIndex::new(1, 1), c64(1.0, 0.0), ZERO).unwrap();
        let r = enforce_reality(&s);
        assert_eq!(r.c(WaveIndex::new(1, 1)), c64(0.5, 0.0));
        assert_eq!(r.c(WaveIndex::new(-1, -1)), c64(0.5, 0.0));
        assert_eq!(enforce_reality(&r), r);
        let z = SpectralState::zeros(lat(2));
        assert_eq!(enforce_reality(&z), z);
    }

    #[test]
    fn sin_y_field_and_energy() {
        let s = sin_y_state();
        let g = default_samples(s.lattice());
        let f = evaluate_field(&s, g).unwrap();
        for i in 0..g {
            for j in 0..g {
                let y = 2.0 * std::f64::consts::PI * j as f64 / g as f64;
                assert!((f.vx[[i, j]] - y.sin()).abs() < 1e-14);
                assert_eq!(f.vy[[i, j]], 0.0);
            }
        }
        assert_eq!(energy(&s).total, 0.5);
        assert_eq!(energy(&s.scaled(2.0)).total, 2.0);
        assert_eq!(energy(&SpectralState::zeros(lat(2))).total, 0.0);
    }

    #[test]
    fn zero_state_field() {
        let f = evaluate_field(&SpectralState::zeros(lat(2)), 9).unwrap();
        assert!(f.vx.iter().chain(f.vy.iter()).all(|&v| v == 0.0));
    }

    #[test]
    fn corrupted_state_is_rejected() {
        let mut s = sin_y_state();
        s.set(WaveIndex::new(0, -1), c64(0.0, 0.4), ZERO).unwrap();
        assert!(matches!(evaluate_field(&s, 9), Err(Error::RealityViolated { .. })));
    }

    #[test]
    fn vmax_examples() {
        assert_eq!(compute_vmax(&SpectralState::zeros(lat(2))), 0.0);
        let p = IndependentCoefficients::new().with(WaveIndex::new(1, 1), Component::C, c64(0.0, 0.1)).unwrap();
        let s = enforce_reality(&complete_incompressible(lat(2), &p).unwrap());
        // half of the amplitude went to the missing partner
        assert!((compute_vmax(&s) - 0.05).abs() < 1e-17);
        let p = IndependentCoefficients::new()
            .with(WaveIndex::new(1, 1), Component::C, c64(0.0, 0.1))
            .unwrap()
            .with(WaveIndex::new(-1, -1), Component::C, c64(0.0, -0.1))
            .unwrap();
        let s = complete_incompressible(lat(2), &p).unwrap();
        assert_eq!(s.d(WaveIndex::new(1, 1)), c64(-0.0, -0.1));
        assert_eq!(compute_vmax(&s), 0.1);
        assert_eq!(compute_vmax(&enforce_reality(&s)), 0.1);
    }

    #[test]
    fn ic_file_roundtrip_build() {
        let file: IcFile = serde_json::from_str(
            r#"{"entries":[
                {"n":1,"m":1,"component":"C","re":0.0,"im":-0.014},
                {"n":-1,"m":-1,"component":"C","re":0.0,"im":0.014},
                {"n":2,"m":1,"component":"D","re":0.01,"im":0.0},
                {"n":-2,"m":-1,"component":"D","re":0.01,"im":0.0}
            ]}"#,
        )
        .unwrap();
        let ic = file.build(lat(3)).unwrap();
        assert_eq!(ic.v_max, 0.014);
        assert!(ic.state.is_hermitian_exact());
        assert!(ic.state.is_closure_consistent());
        assert_eq!(ic.state.c(WaveIndex::new(2, 1)), c64(-0.005, 0.0));
    }

    #[test]
    fn random_states_satisfy_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let s = random_state(lat(5), 3, 0.3, &mut rng);
            assert!(s.is_hermitian_exact());
            assert!(s.is_closure_consistent());
            assert!((compute_vmax(&s) - 0.3).abs() < 1e-15);
            assert_eq!(s.support_radius(), Some(3));
            assert!(s.divergence_residual() <= 1e-15);
        }
    }

    #[test]
    fn vmax_invariant_under_reality_for_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_state(lat(4), 4, 1.0, &mut rng);
        assert_eq!(compute_vmax(&enforce_reality(&s)), compute_vmax(&s));
    }
}
