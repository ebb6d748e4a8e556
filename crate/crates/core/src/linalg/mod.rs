//! Linear algebra kernels shared by every solver layer.

pub mod banded;
pub mod dense;
pub mod gmres;
pub mod sparse;

pub use banded::{direct_solve, BandedLu};
pub use dense::{power_method_generalized, DenseFactorization, DenseMatrix, EigenEstimate};
pub use gmres::{gmres, GmresOutcome, IdentityPreconditioner, KrylovConfig, Preconditioner};
pub use sparse::{norm2, norm_inf, IndexSet, LinearOperator, SparseMatrix};
