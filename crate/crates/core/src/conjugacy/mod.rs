//! Holomorphic conjugacies of perturbed cocycles to constant rotations.

pub mod cohomology;
pub mod minimizer;
pub mod pipeline;
pub mod straighten;

pub use cohomology::{cohom_solve, rotation_extract, CohomSolution, RotationAngle};
pub use minimizer::{cayley_unitary, dilation, minimizer, MinimizerData};
pub use pipeline::{
    complex_conjugacy, real_conjugacy, real_conjugacy_with, symmetry_diagnostics, ConjugacyConfig,
    ConjugacyResult, SymmetricBranch, SymmetryDiagnostics,
};
pub use straighten::{hilbert_minimize, periodize, straighten, FitOptions, HilbertSolution};
