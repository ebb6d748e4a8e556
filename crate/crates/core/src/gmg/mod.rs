//! Geometric multigrid on the refinement hierarchy.

pub mod cycle;
pub mod sanity;
pub mod transfer;

pub use cycle::{CycleConfig, CycleType, Gmg, Level};
pub use transfer::{build_transfer, child_offset, coarse_to_fine_nodes, prolongation, restrict_state, restriction, TransferPair};
