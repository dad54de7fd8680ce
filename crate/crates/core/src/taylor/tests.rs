use super::*;
use crate::state::{random_state, IndependentCoefficients};
use crate::Component;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn lat(n: usize) -> ModeLattice {
    ModeLattice::new(n).unwrap()
}

/// C(1,1) = ia with its partner; D follows from incompressibility.
fn single_mode(lattice: ModeLattice, a: f64) -> SpectralState {
    let p = IndependentCoefficients::new()
        .with(WaveIndex::new(1, 1), Component::C, Complex64::new(0.0, a))
        .unwrap()
        .with(WaveIndex::new(-1, -1), Component::C, Complex64::new(0.0, -a))
        .unwrap();
    crate::state::complete_incompressible(lattice, &p).unwrap()
}

/// Literal double sum over every lattice pair with `i+s=n, j+t=m`, and every
/// `u+v=p`, in the textbook form `C C (ι s) + D C (ι t)`.
fn brute_force_terms(orders: &[SpectralState], p: usize, alpha: f64) -> (Vec<Complex64>, Vec<Complex64>) {
    let lattice = orders[0].lattice();
    let modes: Vec<WaveIndex> = lattice.modes().collect();
    let mut fc = vec![ZERO; modes.len()];
    let mut fd = vec![ZERO; modes.len()];
    for (k, out) in modes.iter().enumerate() {
        for u in 0..=p {
            let v = p - u;
            for a in &modes {
                for b in &modes {
                    if a.n + b.n != out.n || a.m + b.m != out.m {
                        continue;
                    }
                    let is = Complex64::new(0.0, b.n as f64);
                    let it = Complex64::new(0.0, b.m as f64);
                    let (ca, da) = (orders[u].c(*a), orders[u].d(*a));
                    let (cb, db) = (orders[v].c(*b), orders[v].d(*b));
                    fc[k] += ca * cb * is + da * cb * it;
                    fd[k] += ca * db * is + da * db * it;
                }
            }
        }
        let visc = alpha * out.norm_sq() as f64;
        fc[k] += orders[p].c(*out) * visc;
        fd[k] += orders[p].d(*out) * visc;
    }
    (fc, fd)
}

fn max_rel_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let scale = b.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}

#[test]
fn single_mode_has_no_nonlinear_term() {
    let table = TaylorTable::new(single_mode(lat(3), 0.3), 0.0).unwrap();
    let terms = convolve_order(&table, 0, ConvolutionMethod::Direct).unwrap();
    let (bc, bd) = brute_force_terms(table.orders(), 0, 0.0);
    assert!(bc.iter().chain(bd.iter()).all(|z| z.norm() < 1e-17));
    assert!(terms.fc.iter().chain(terms.fd.iter()).all(|z| z.norm() < 1e-17));
}

#[test]
fn single_mode_viscous_term() {
    let alpha = 0.01;
    let a = 0.3;
    let table = TaylorTable::new(single_mode(lat(3), a), alpha).unwrap();
    let terms = convolve_order(&table, 0, ConvolutionMethod::Direct).unwrap();
    let expected = Complex64::new(0.0, alpha * 2.0 * a);
    assert!((terms.fc(WaveIndex::new(1, 1)) - expected).norm() < 1e-17);
    for mode in table.lattice().modes().filter(|m| m.chebyshev_radius() != 1 || m.n != m.m) {
        assert_eq!(terms.fc(mode).norm(), 0.0, "{mode:?}");
    }
}

#[test]
fn zero_table_gives_zero_terms() {
    let table = build_series(SpectralState::zeros(lat(3)), 0.1, 4, ConvolutionMethod::Direct).unwrap();
    for p in 0..=4 {
        let t = convolve_order(&table, p, ConvolutionMethod::Direct).unwrap();
        assert!(t.fc.iter().chain(t.fd.iter()).all(|z| *z == ZERO));
    }
    assert!(table.orders().iter().all(|s| s.max_modulus() == 0.0));
}

#[test]
fn convolve_rejects_missing_order() {
    let table = TaylorTable::new(SpectralState::zeros(lat(2)), 0.0).unwrap();
    assert!(matches!(
        convolve_order(&table, 1, ConvolutionMethod::Direct),
        Err(Error::OrderUnavailable { requested: 1, available: 0 })
    ));
}

#[test]
fn direct_matches_brute_force_on_random_tables() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for bound in [2usize, 3] {
        let ic = random_state(lat(bound), bound as u32, 0.4, &mut rng);
        let table = build_series(ic, 0.02, 3, ConvolutionMethod::Direct).unwrap();
        for p in 0..=3 {
            let terms = convolve_order(&table, p, ConvolutionMethod::Direct).unwrap();
            let (bc, bd) = brute_force_terms(table.orders(), p, 0.02);
            assert!(max_rel_diff(&terms.fc, &bc) < 1e-13);
            assert!(max_rel_diff(&terms.fd, &bd) < 1e-13);
        }
    }
}

#[test]
fn transform_matches_direct() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for bound in [1usize, 4, 9] {
        let ic = random_state(lat(bound), bound as u32, 0.2, &mut rng);
        let table = build_series(ic, 0.01, 4, ConvolutionMethod::Direct).unwrap();
        let mut fast = TransformConvolver::new(table.lattice());
        for p in 0..=4 {
            let direct = convolve_order(&table, p, ConvolutionMethod::Direct).unwrap();
            let transformed = fast.terms(&table, p).unwrap();
            assert!(max_rel_diff(&transformed.fc, &direct.fc) < 1e-12, "N={bound} p={p}");
            assert!(max_rel_diff(&transformed.fd, &direct.fd) < 1e-12, "N={bound} p={p}");
        }
    }
}

#[test]
fn projection_examples() {
    let lattice = lat(3);
    let (f, g) = (Complex64::new(0.3, -0.2), Complex64::new(-0.7, 0.11));
    let mut fc = vec![ZERO; lattice.len()];
    let mut fd = vec![ZERO; lattice.len()];
    let k02 = lattice.index(WaveIndex::new(0, 2)).unwrap();
    let k11 = lattice.index(WaveIndex::new(1, 1)).unwrap();
    fc[k02] = f;
    fd[k02] = g;
    fc[k11] = f;
    fd[k11] = g;
    let terms = NonlinearTerms::from_raw(lattice, fc, fd).unwrap();
    let (dc, dd) = project_rhs(&terms, WaveIndex::new(0, 2)).unwrap();
    assert_eq!(dc, -f);
    assert_eq!(dd.norm(), 0.0);
    let (dc, dd) = project_rhs(&terms, WaveIndex::new(1, 1)).unwrap();
    assert_eq!(dc, (-f + g) / 2.0);
    assert_eq!(dd, -dc);
    assert!(matches!(project_rhs(&terms, WaveIndex::MEAN), Err(Error::MeanMode)));
}

proptest! {
    #[test]
    fn projection_equals_leray_form(
        n in -6i32..=6, m in -6i32..=6,
        a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0, d in -1.0f64..1.0,
    ) {
        prop_assume!((n, m) != (0, 0));
        let lattice = lat(6);
        let mode = WaveIndex::new(n, m);
        let (f, g) = (Complex64::new(a, b), Complex64::new(c, d));
        let mut fc = vec![ZERO; lattice.len()];
        let mut fd = vec![ZERO; lattice.len()];
        let k = lattice.index(mode).unwrap();
        fc[k] = f;
        fd[k] = g;
        let terms = NonlinearTerms::from_raw(lattice, fc, fd).unwrap();
        let (dc, dd) = project_rhs(&terms, mode).unwrap();
        let (nf, mf) = (n as f64, m as f64);
        let k2 = nf * nf + mf * mf;
        let leray_c = (-f * (mf * mf) + g * (nf * mf)) / k2;
        let leray_d = (f * (nf * mf) - g * (nf * nf)) / k2;
        let scale = f.norm().max(g.norm());
        prop_assert!((dc - leray_c).norm() <= 1e-14 * scale);
        prop_assert!((dd - leray_d).norm() <= 1e-14 * scale);
    }
}

#[test]
fn single_mode_decays_in_closed_form() {
    let alpha = 1e-3;
    let ic = single_mode(lat(3), 0.25);
    let table = build_series(ic.clone(), alpha, 30, ConvolutionMethod::Direct).unwrap();
    let c0 = ic.c(WaveIndex::new(1, 1));
    let mut factor = 1.0f64;
    for p in 0..=30 {
        if p > 0 {
            factor *= -2.0 * alpha / p as f64;
        }
        let got = table.order(p).unwrap().c(WaveIndex::new(1, 1));
        let want = c0 * factor;
        assert!((got - want).norm() <= 1e-13 * want.norm(), "order {p}");
    }
    let p1 = TaylorTable::new(single_mode(lat(3), 0.25), 1e-6).unwrap();
    let mut p1 = p1;
    let s1 = p1.advance_order(ConvolutionMethod::Direct).unwrap().c(WaveIndex::new(1, 1));
    assert!((s1 - c0 * -2e-6).norm() <= 1e-15 * s1.norm());
}

#[test]
fn single_mode_without_viscosity_is_stationary() {
    let table = build_series(single_mode(lat(4), 0.7), 0.0, 8, ConvolutionMethod::Direct).unwrap();
    for p in 1..=8 {
        assert!(table.order(p).unwrap().max_modulus() < 1e-17, "order {p}");
    }
}

#[test]
fn p_max_zero_is_just_the_ic() {
    let ic = single_mode(lat(2), 0.1);
    let table = build_series(ic.clone(), 0.1, 0, ConvolutionMethod::Direct).unwrap();
    assert_eq!(table.p_max(), 0);
    assert_eq!(table.initial(), &ic);
}

#[test]
fn generated_slices_keep_invariants_and_energy() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..5 {
        let ic = random_state(lat(4), 3, 0.5, &mut rng);
        let table = build_series(ic, 0.0, 12, ConvolutionMethod::Direct).unwrap();
        for slice in table.orders() {
            assert!(slice.is_hermitian_exact());
            assert!(slice.is_closure_consistent());
            assert_eq!(slice.c(WaveIndex::MEAN), ZERO);
        }
        let (s0, s1) = (table.order(0).unwrap(), table.order(1).unwrap());
        let flux: f64 = s0
            .c_slice()
            .iter()
            .zip(s1.c_slice())
            .chain(s0.d_slice().iter().zip(s1.d_slice()))
            .map(|(a, b)| (a.conj() * b).re)
            .sum();
        let e0 = crate::state::energy(s0).total;
        assert!(flux.abs() <= 1e-12 * e0, "flux {flux:e}");
    }
}

#[test]
fn frequencies_spread_at_most_linearly() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let ic = random_state(lat(7), 1, 0.3, &mut rng);
    let table = build_series(ic, 1e-3, 10, ConvolutionMethod::Direct).unwrap();
    for (p, slice) in table.orders().iter().enumerate() {
        let bound = ((p as u32 + 1) * 1).min(7);
        assert!(slice.support_radius().unwrap_or(0) <= bound, "order {p}");
    }
    assert_eq!(table.order(3).unwrap().support_radius(), Some(4));
}

#[test]
fn transform_series_is_hermitian_and_close_to_direct() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let ic = random_state(lat(5), 2, 0.05, &mut rng);
    let direct = build_series(ic.clone(), 1e-6, 20, ConvolutionMethod::Direct).unwrap();
    let fast = build_series(ic, 1e-6, 20, ConvolutionMethod::Transform).unwrap();
    for (a, b) in fast.orders().iter().zip(direct.orders()) {
        assert!(a.is_hermitian_exact());
        assert!(a.is_closure_consistent());
        assert!(max_rel_diff(a.c_slice(), b.c_slice()) < 1e-12);
    }
}

#[test]
fn parallel_evaluation_is_bit_reproducible() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let ic = random_state(lat(5), 3, 0.1, &mut rng);
    let a = build_series(ic.clone(), 1e-4, 10, ConvolutionMethod::Direct).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| build_series(ic, 1e-4, 10, ConvolutionMethod::Direct).unwrap());
    assert_eq!(a.orders(), b.orders());
}

#[test]
fn overflow_freezes_series() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let ic = random_state(lat(3), 2, 1e100, &mut rng);
    let table = build_series(ic, 0.0, 50, ConvolutionMethod::Direct).unwrap();
    assert!(table.overflowed());
    assert!(table.p_max() < 50);
    assert!(table.orders().iter().all(|s| s.is_finite()));
}

#[test]
fn rejects_invalid_ic() {
    let mut s = SpectralState::zeros(lat(2));
    s.set(WaveIndex::new(1, 1), Complex64::new(1.0, 0.0), ZERO).unwrap();
    assert!(TaylorTable::new(s, 0.0).is_err());
    assert!(TaylorTable::new(SpectralState::zeros(lat(2)), -1.0).is_err());
}
