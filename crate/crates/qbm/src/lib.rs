//! Exact, non-perturbative dynamics of a damped quantum harmonic oscillator
//! coupled to a thermal bath of oscillators.
//!
//! The crate evaluates the closed-form Green function (propagator) of the
//! dissipative oscillator for several bath spectral densities, the
//! time-dependent coefficients of the associated Gaussian master equation,
//! the exact thermal covariances, and derived quantities such as decoherence
//! of superposition states and response to external forces. Every closed-form
//! route has an independent brute-force counterpart (Volterra integration,
//! direct quadrature, Monte Carlo sampling of the generalized Langevin
//! equation) used for cross-validation; see the [`oracle`] module.
//!
//! All numerics are generic over the scalar type through the [`Real`] trait;
//! `f64` is the default type parameter everywhere and the type exercised by
//! the test suite.

pub mod covariance;
pub mod error;
pub mod laplace;
pub mod linalg;
pub mod master;
pub mod oracle;
pub mod poly;
pub mod propagator;
pub mod quad;
pub mod specfun;
pub mod spectrum;
pub mod state;

pub use covariance::{Covariance2, GrowthBoundsReport, TwoTimeCovariance};
pub use error::{Error, Result};
pub use linalg::{Mat2, Vec2};
pub use propagator::{Propagator, RegimeLabel, StarParams};
pub use spectrum::{BathFamily, SpectralModel, SystemParams};

use core::fmt::{Debug, Display, LowerExp};
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Scalar type over which all numerical routines are generic.
///
/// The bounds collect everything the closed-form evaluations need: IEEE
/// floating-point semantics, mathematical constants, conversions from
/// literals, and thread-safety for the parallel Monte Carlo sampler.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into `Self`.
    ///
    /// Panics only if the target type cannot represent any approximation of
    /// the value, which cannot happen for IEEE types.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("floating-point literal conversion")
    }

    /// Converts a `usize` into `Self` (exact for the magnitudes used here).
    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize to float conversion")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over the crate's scalar trait.
pub type Complex<T> = num_complex::Complex<T>;

/// Double-precision complex number, the concrete type used by the CLI.
pub type Complex64 = num_complex::Complex<f64>;

/// Double-precision 2-vector (position, momentum).
pub type Vec2f64 = Vec2<f64>;

/// Double-precision 2×2 matrix.
pub type Mat2f64 = Mat2<f64>;
