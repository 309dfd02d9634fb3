//! Wilsonian renormalization of Gaussian-process regression.
//!
//! The crate is organised bottom-up:
//!
//! * [`spectral`]: data measures, orthonormal bases, spectra, quadrature.
//! * [`gp`]: exact posterior regression and Monte Carlo dataset averages.
//! * [`ek`]: closed-form equivalent-kernel predictions per mode.
//! * [`cumulants`]: fourth-order Ursell functions and the A/B Hermite forms.
//! * [`flow`]: shell scheduling and the ridge/weight flow.
//! * [`toy`]: the rank-2 Hermite kernel learning `He_5`.

pub mod cumulants;
pub mod ek;
pub mod error;
pub mod flow;
pub mod gp;
pub mod linalg;
pub mod rng;
pub mod spectral;
pub mod stats;
pub mod toy;

pub use error::{Error, Result};
