//! Numerics for quasiperiodic SL(2) cocycles: continued fractions, analytic
//! Fourier maps, transfer-matrix products, Lyapunov exponents, invariant
//! directions, holomorphic conjugacies and the Schrödinger specialization.

// `!(x > y)` is used on purpose so NaN lands in the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod arithmetic;
pub mod cocycle;
pub mod conjugacy;
pub mod error;
pub mod hyperbolicity;
pub mod lyapunov;
pub mod mat2;
pub mod schrodinger;

pub use analytic::{FourierMap, MatrixMap};
pub use arithmetic::{Frequency, FrequencySpec};
pub use cocycle::{Cocycle, ProductResult, ProjPoint};
pub use conjugacy::{ConjugacyConfig, ConjugacyResult, SymmetryDiagnostics};
pub use error::{Error, Result};
pub use hyperbolicity::{DirectionField, UhCertificate, UhConfig};
pub use lyapunov::{LeEstimate, StripProfile};
pub use mat2::{Mat2, Vec2, C64};
pub use schrodinger::{ClassifyConfig, DichotomyReport, EnergyClass, EnergyRecord, IdsMethod};
