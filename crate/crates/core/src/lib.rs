//! Taylor-series-in-time Fourier-Galerkin solver for the two-dimensional
//! incompressible Navier-Stokes equation on the `2π`-periodic box.
//!
//! * [`lattice`]: truncated wavenumber lattice and region split.
//! * [`state`]: coefficient grids, incompressibility and reality constraints,
//!   physical-field evaluation and diagnostics.
//! * [`taylor`]: nonlinear convolution terms and the order-by-order recurrence.
//! * [`convergence`]: partial sums, convergence classification, ratio-test
//!   radii and cross-truncation comparison.
//! * [`oracle`]: fixed-step RK4 integration of the same truncated system.
//! * [`harness`]: configuration, presets and parameter sweeps.

pub mod convergence;
pub mod error;
pub mod harness;
pub mod lattice;
pub mod oracle;
pub mod state;
pub mod taylor;

pub use error::{Component, Error, Result};
pub use lattice::{assign_region, ModeLattice, Region, WaveIndex};
pub use state::{
    complete_incompressible, compute_vmax, energy, enforce_reality, evaluate_field, EnergyDiagnostics,
    IndependentCoefficients, SpectralState,
};
pub use taylor::{build_series, convolve_order, project_rhs, ConvolutionMethod, NonlinearTerms, TaylorTable};
