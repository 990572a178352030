//! Inhomogeneous U/V-statistics on step graphons, the mean-field
//! variational problems that describe their large deviations and Gibbs
//! limits, and finite-n oracles (exact enumeration, closed sums, Glauber
//! dynamics) to check those limits numerically.
//!
//! The evaluation modules ([`kernel`], [`ustat`], [`tilt`], [`functionals`])
//! are generic over [`Scalar`] (`f32` or `f64`); the solvers and samplers in
//! [`variational`] and [`gibbs`] work in `f64`. Concrete aliases for the
//! common instantiations are exported at the crate root.

pub mod error;
pub mod functionals;
pub mod gibbs;
pub mod io;
pub mod kernel;
pub mod motif;
pub mod scalar;
pub mod tilt;
pub mod ustat;
pub mod variational;

pub use error::{Error, Result};
pub use motif::Motif;
pub use scalar::Scalar;

pub type SymmetricMatrixF64 = kernel::SymmetricMatrix<f64>;
pub type SymmetricMatrixF32 = kernel::SymmetricMatrix<f32>;
pub type StepKernelF64 = kernel::StepKernel<f64>;
pub type StepKernelF32 = kernel::StepKernel<f32>;
pub type StepFunctionF64 = kernel::StepFunction<f64>;
pub type FiniteBaseMeasureF64 = tilt::FiniteBaseMeasure<f64>;
pub type FiniteBaseMeasureF32 = tilt::FiniteBaseMeasure<f32>;
pub type PhiKernelF64 = ustat::PhiKernel<f64>;
pub type PhiKernelF32 = ustat::PhiKernel<f32>;
pub type BlockMeasureF64 = functionals::BlockMeasure<f64>;
pub type TiltProfileF64 = functionals::TiltProfile<f64>;
