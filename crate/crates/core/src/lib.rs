//! Monolithic ALE fluid-structure interaction on Q2-P1 quadrilaterals, solved by
//! Newton's method with GMRES preconditioned by geometric multigrid. The level
//! smoothers are damped Richardson iterations preconditioned either by Vanka-type
//! additive Schwarz blocks or by a field-split preconditioner.

pub mod ad;
pub mod assembly;
pub mod bench;
pub mod config;
pub mod constitutive;
pub mod error;
pub mod fem;
pub mod gmg;
pub mod linalg;
pub mod mesh;
pub mod ordering;
pub mod precond;
pub mod solver;
pub mod supg;

pub use error::{FsiError, Result};
