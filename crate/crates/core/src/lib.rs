//! Shifting-based approximation schemes for pairwise energy functions
//! `E(σ) = Σ_i φ_i(σ_i) + Σ_(i,j) φ_ij(σ_i, σ_j)` on planar, geometric and
//! near-planar graphs, with exact tree-decomposition dynamic programming and
//! an exhaustive oracle for verification.

pub mod cli;
pub mod crossing;
pub mod dp;
pub mod error;
pub mod geometry;
pub mod graph;
pub mod io;
pub mod model;
pub mod oracle;
pub mod problems;
pub mod shifting;
pub mod treedecomp;

pub use error::{Error, Result};
pub use graph::Graph;
pub use model::{Configuration, Instance, Objective, Partition};
