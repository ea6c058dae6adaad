//! Grid-free simulation of the cubic nonlinear Schrödinger equation with a
//! harmonic potential,
//!
//! ```text
//! i∂_t ψ + μ(Δψ − |x|²ψ) = λ|ψ|²ψ,
//! ```
//!
//! using sums of modulated Gaussian/Hermite wave packets ("bubbles"),
//! together with an FFT split-step reference solver.

pub mod bubble;
pub mod dfmp;
pub mod driver;
pub mod error;
pub mod gaussian;
pub mod linear;
pub mod observables;
pub mod ode;
pub mod spectral;

pub use bubble::{hermite_function, Bubble, BubbleEnsemble, BubbleRecord, HermiteSpectrum};
pub use driver::{run_simulation, simulate, Method, RunConfig, TestCase};
pub use error::{Error, Result};
pub use linear::{
    compute_sigma, from_action_angle, propagate_ensemble_linear, propagate_linear, ActionAngleState,
    LinearReference, ModulationParams, ModulationRates,
};
pub use observables::{ObservableParams, ObservableRecord};
pub use spectral::{Grid, GridField, SpectralSolver};
