//! Reference solutions for the benchmark problems.
//!
//! * [`burgers_exact`]: the viscous Burgers solution from the Cole–Hopf
//!   transformation and Gauss–Hermite quadrature.
//! * [`nls_spectral`] and [`allen_cahn_spectral`]: Fourier pseudospectral
//!   simulations with RK4 or ETDRK4 time stepping.
//!
//! All results come back as [`SolutionGrid`](pinn_core::metrics::SolutionGrid)s.

mod burgers;
mod hermite;
mod problems;
mod spectral;

pub use burgers::{
    burgers_exact, burgers_exact_with, burgers_grid, burgers_reference_axes, linspace, HERMITE_NODES,
    HERMITE_NODES_FINE,
};
pub use hermite::HermiteRule;
pub use problems::{allen_cahn_spectral, burgers_periodic_spectral, nls_mass, nls_spectral};
pub use spectral::{interpolate, Integrator, SpectralConfig};
