//! Built-in initial conditions.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Component, Error, Result};
use crate::lattice::{ModeLattice, WaveIndex};
use crate::state::{complete_incompressible, random_state, IndependentCoefficients, SpectralState};

/// Independent `C` modes of the headline example, one per Hermitian pair.
pub const PAPER_EXAMPLE_MODES: [WaveIndex; 2] = [WaveIndex::new(1, 1), WaveIndex::new(2, -2)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// `C` nonzero only at `(±1, ±1)` and `(±2, ∓2)`, all of modulus `v_max`.
    PaperExample,
    /// `C(1, 1) = -i v_max` and its partner.
    SingleMode,
    /// Random real divergence-free state on `max(|n|, |m|) <= 2`.
    Random,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::PaperExample => "paper-example",
            Preset::SingleMode => "single-mode",
            Preset::Random => "random",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "paper-example" => Ok(Preset::PaperExample),
            "single-mode" => Ok(Preset::SingleMode),
            "random" => Ok(Preset::Random),
            other => Err(Error::InvalidParameter { field: "preset", reason: format!("unknown preset `{other}`") }),
        }
    }

    pub fn default_v_max(self) -> Vec<f64> {
        match self {
            Preset::PaperExample => vec![0.014, 0.14],
            Preset::SingleMode | Preset::Random => vec![0.01],
        }
    }

    pub fn build(self, lattice: ModeLattice, v_max: f64, seed: Option<u64>) -> Result<SpectralState> {
        match self {
            Preset::PaperExample => match seed {
                None => preset_paper_example(lattice, v_max),
                Some(seed) => preset_paper_example_with_phases(lattice, v_max, seed),
            },
            Preset::SingleMode => pairs(lattice, v_max, &[(WaveIndex::new(1, 1), Complex64::new(0.0, -v_max))]),
            Preset::Random => {
                check_vmax(v_max)?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(0));
                Ok(random_state(lattice, 2.min(lattice.bound() as u32), v_max, &mut rng))
            }
        }
    }
}

fn check_vmax(v_max: f64) -> Result<()> {
    if v_max.is_finite() && v_max > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter { field: "v_max", reason: format!("{v_max} is not positive") })
    }
}

/// Sets `C` at each mode and `conj C` at its partner, then closes `D`.
fn pairs(lattice: ModeLattice, v_max: f64, values: &[(WaveIndex, Complex64)]) -> Result<SpectralState> {
    check_vmax(v_max)?;
    let mut partial = IndependentCoefficients::new();
    for &(mode, c) in values {
        partial.insert(mode, Component::C, c)?;
        partial.insert(mode.neg(), Component::C, c.conj())?;
    }
    complete_incompressible(lattice, &partial)
}

/// `C(1,1) = C(2,-2) = -i v_max` with partners `+i v_max`; `D` follows from
/// incompressibility, and `|D| = |C|` on the diagonals, so `v_max` is exact.
pub fn preset_paper_example(lattice: ModeLattice, v_max: f64) -> Result<SpectralState> {
    let c = Complex64::new(0.0, -v_max);
    pairs(lattice, v_max, &PAPER_EXAMPLE_MODES.map(|m| (m, c)))
}

/// Same support and moduli with phases drawn from `seed`.
pub fn preset_paper_example_with_phases(lattice: ModeLattice, v_max: f64, seed: u64) -> Result<SpectralState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = PAPER_EXAMPLE_MODES.map(|m| {
        let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        (m, Complex64::from_polar(v_max, phase))
    });
    pairs(lattice, v_max, &values)
}
