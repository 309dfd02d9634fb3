//! Data measures, eigenfunction bases, kernel spectra and quadrature.

mod basis;
mod hermite;
mod kernel;
mod measure;
mod quadrature;
mod spectrum;

pub use basis::{check_orthonormality, Basis, FnBasis, HermiteBasis, LinearBasis, OrthonormalityReport};
pub use hermite::{
    factorial, hermite_orthonormal, hermite_orthonormal_all, hermite_probabilist,
    hermite_probabilist_unbounded, MAX_HERMITE_DEGREE,
};
pub use kernel::KernelFn;
pub use measure::{
    quadrature_integral, DataMeasure, MeasureKind, Points, QuadratureGrid,
    DEFAULT_QUADRATURE_ORDER,
};
pub use quadrature::GaussHermiteRule;
pub use spectrum::{power_law_spectrum, Mode, Spectrum};
