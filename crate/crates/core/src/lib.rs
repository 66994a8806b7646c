//! Numerical toolkit for conditional-correlation decay in non-ergodic
//! torus and rotation-group dynamics.
//!
//! The library centers on the transvection `T(x,y) = (x, y+x)` and the linear
//! flow `g_t(x,y) = (x, y+tx)` on the 2-torus, carrying a product measure
//! `mu (x) lambda` whose base factor `mu` may be singular. Everything else is
//! built around measuring how fast conditional correlations of observables
//! decay, and how that rate is controlled by the Fourier decay of `mu`:
//!
//! - [`measure`]: one-dimensional probability measures, their characteristic
//!   functions, sampling, and power-law decay estimation of `|mu^(t)|`.
//! - [`observables`]: finitely supported Fourier series on the 2-torus,
//!   Sobolev norms, and the projection onto flow-invariant functions.
//! - [`shear`]: exact spectral and Monte-Carlo conditional covariances for
//!   the transvection, decay fitting and interval checks.
//! - [`phase`]: push-forward measures of circle velocity fields, oscillatory
//!   integrals (dense and Filon quadrature), and stationary-phase decay
//!   orders driven by critical-point structure.
//! - [`targets`]: shrinking-target hit counting along transvection orbits and
//!   rotation orbits.
//! - [`dio`]: arbitrary-precision continued fractions and Diophantine
//!   exponent estimation.
//! - [`lie`]: rotation-group bundles over the circle (SO(3), SU(2)), their
//!   Monte-Carlo covariances and the reduction to a circle push-forward.

pub mod decay;
pub mod dio;
pub mod lie;
pub mod measure;
pub mod observables;
pub mod phase;
pub mod shear;
pub mod targets;

pub use decay::{DecayEstimate, FittedOrder};
pub use measure::Measure1D;
pub use observables::TrigPoly2;
pub use shear::{CovCurve, ShearSystem};

pub(crate) mod rng {
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Seeded generator for stream 0 (plain single-threaded use).
    pub fn seeded(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    /// Independent generator for a numbered chunk of work. Chunked consumers
    /// (Monte-Carlo, per-orbit runs) draw from disjoint ChaCha streams so the
    /// result is independent of the parallel schedule.
    pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        rng
    }
}
