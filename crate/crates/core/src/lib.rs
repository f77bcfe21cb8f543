//! Time-domain simulation of elastic and Kelvin–Voigt viscoelastic waves in
//! unbounded anisotropic solids, truncated by a second-order perfectly
//! matched layer.
//!
//! The layer is built from the complex stretch `s_j = 1 + iβ_j/ω` and
//! realized with three displacement equations, nine auxiliary stresses
//! `w_ij` and the displacement history `U_i = ∫u_i dt`:
//!
//! ```text
//! ρ(ü + a u̇ + b u + c U) = ∂_j(C_ijkl ∂_l u_k + w_ij)
//! ẇ_ij + β_j w_ij        = C̃_ijkl ∂_l u_k + C̆_ijkl ∂_l U_k
//! U̇ = u
//! ```
//!
//! The crate is `no_std` (it needs `alloc`); file formats, configuration and
//! the command line live in the `pmlwave` crate.

#![no_std]
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod diagnostics;
pub mod error;
pub mod fd;
pub mod grid;
pub mod materials;
mod math;
pub mod pml;
pub mod scenario;
pub mod solver;
pub mod source;

pub use error::{Error, Result};
pub use math::{pairwise_sum, symmetric_eigenvalues};
