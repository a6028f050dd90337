//! Monte Carlo laboratory for two-parameter stochastic differential
//! equations driven by a Brownian sheet.
//!
//! The crate simulates solution lattices of the hyperbolic Itô equation
//! `X_z = x₀ + ∫_{R_z} (Σ_l A_l dW^l + A_0 dr)`, the first-variation kernels
//! of that equation, and the Malliavin covariance matrices built from them;
//! it checks covariant-derivative Hörmander rank conditions and runs
//! small-ball probability experiments for parameter-dependent
//! semimartingales evaluated on the diagonal.
//!
//! All numerics are generic over the scalar type through [`scalar::Scalar`]
//! (`f32`/`f64`, plus nested dual numbers for forward-mode derivatives);
//! the aliases below pin the common `f64` lane.

pub mod density;
pub mod dual;
pub mod error;
pub mod field;
pub mod grid;
pub mod linalg;
pub mod malliavin;
pub mod norris;
pub mod rng;
pub mod scalar;
pub mod sheet;
pub mod solver;
pub mod stats;

pub use error::{Error, Result};
pub use field::{DeclaredBounds, FieldExpr, FieldSet, Regime};
pub use grid::GridSpec;
pub use scalar::{Lift, Scalar};

/// First dual level over `f64`, the workhorse derivative type.
pub type Dual64 = dual::Dual<f64>;

/// `f64` lane of the generic compute types.
pub type SheetSample64 = sheet::SheetSample<f64>;
pub type PathLattice64 = solver::PathLattice<f64>;
pub type VariationKernel64 = solver::VariationKernel<f64>;
pub type MalliavinMatrix64 = malliavin::MalliavinMatrix<f64>;
pub type DiagonalPath64 = norris::DiagonalPath<f64>;
pub type SemimartingaleSpec64 = norris::SemimartingaleSpec<f64>;
pub type EndpointSample64 = density::EndpointSample<f64>;

/// `f32` lane, exercised by the cross-precision smoke tests.
pub type SheetSample32 = sheet::SheetSample<f32>;
pub type PathLattice32 = solver::PathLattice<f32>;
