use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ns_fourier::state::{default_samples, random_state, IMAG_RESIDUE_TOLERANCE};
use ns_fourier::{build_series, energy, evaluate_field, ConvolutionMethod, ModeLattice};

#[test]
fn physical_field_matches_spectral_energy() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for (bound, radius) in [(2, 2), (5, 3), (7, 7)] {
        let lattice = ModeLattice::new(bound).unwrap();
        let state = random_state(lattice, radius, 0.3, &mut rng);
        let field = evaluate_field(&state, default_samples(lattice)).unwrap();
        let spectral = energy(&state).total;
        assert!((field.mean_square() - spectral).abs() <= 1e-10 * spectral, "N={bound}");
        let peak = field.vx.iter().chain(field.vy.iter()).fold(0.0f64, |a, b| a.max(b.abs()));
        assert!(field.max_imag_residue <= IMAG_RESIDUE_TOLERANCE * (1.0 + peak));
    }
}

#[test]
fn evolved_state_stays_real_in_physical_space() {
    let lattice = ModeLattice::new(5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let table = build_series(random_state(lattice, 2, 0.05, &mut rng), 1e-6, 30, ConvolutionMethod::Direct).unwrap();
    let state = table.evaluate(0.5);
    let field = evaluate_field(&state, default_samples(lattice)).unwrap();
    let peak = field.vx.iter().chain(field.vy.iter()).fold(0.0f64, |a, b| a.max(b.abs()));
    assert!(field.max_imag_residue <= IMAG_RESIDUE_TOLERANCE * (1.0 + peak));
    let spectral = energy(&state).total;
    assert!((field.mean_square() - spectral).abs() <= 1e-10 * spectral);
}

#[test]
fn sample_count_sets_grid_shape() {
    let lattice = ModeLattice::new(4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let state = random_state(lattice, 4, 1.0, &mut rng);
    let field = evaluate_field(&state, 3).unwrap();
    assert_eq!(field.vx.dim(), (3, 3));
    assert!(evaluate_field(&state, 0).is_err());
}
