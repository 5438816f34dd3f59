//! Fiber-coupled type-I parametric down-conversion in uniaxial crystals.
//!
//! The crate is `no_std` (it needs `alloc`) and purely computational:
//!
//! * [`sellmeier`], [`dispersion`], [`phase_matching`], [`constants`] evaluate
//!   refractive indices and the ordinary/extraordinary dispersion relations,
//!   solve the degenerate phase-matching condition and derive the handful of
//!   scalars (walk-off, inverse group velocities, internal angle) that drive
//!   the closed-form model.
//! * [`model`] is the closed-form Gaussian model of the fiber-coupled joint
//!   spectral amplitude, the spectrum matrix, the separability condition and
//!   the total pair-coupling probability.
//! * [`numeric`] is an independent oracle that keeps the exact sinc
//!   phase-matching factor and second-order mismatch (diffraction) terms.
//! * [`optimize`] maximizes the coupling probability over crystal length and
//!   beam waists.
//!
//! All quantities are SI: metres, radians, rad/s, s/m.
#![no_std]
// `!(x > 0.0)` is deliberate: NaN must fail positivity checks.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod constants;
pub mod diff;
pub mod dispersion;
mod error;
pub mod gaussian;
pub mod model;
pub mod numeric;
pub mod optimize;
pub mod phase_matching;
pub mod quadrature;
pub mod sellmeier;
pub mod units;

pub use constants::{derive_constants, OpticalConstants};
pub use dispersion::{Crystal, CrystalCut};
pub use error::{Error, Result};
pub use model::{EffectiveParams, ModeVector, SetupParams, SpectrumMatrix};
pub use numeric::{ExpansionOrder2, NumericOptions, QuadratureSpec};
pub use sellmeier::{Polarization, SellmeierCoefficients, SellmeierSet};
