//! Numerical geometric measure theory for continuous BV maps on boxes.
//!
//! The crate computes topological degree (2D winding numbers, 3D solid-angle
//! sums and exact ray sweeps over piecewise-linear image surfaces), the 2D
//! distributional Jacobian and the 3D distributional adjugate of continuous
//! BV maps by three independent routes, grid measures with disintegration and
//! absolutely-continuous/singular splitting, and Lebesgue area of 2D-to-3D
//! maps. The [`verify`] module assembles these into identity checks for
//! inverse-mapping formulas on a [`gallery`] of explicit homeomorphisms.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, JSON reports
//! and the command line live in the `gmt-adjugate` companion crate.
#![no_std]
#![forbid(unsafe_code)]
// `Float` is redundant whenever a dependency links std.
#![allow(unused_imports)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod adj3d;
pub mod area;
pub mod cantor;
pub mod degree;
pub mod error;
pub mod field;
pub mod gallery;
pub mod jac2d;
pub mod linalg;
pub mod measure;
pub mod pairing;
pub mod quad;
pub mod testfn;
pub mod verify;

pub use error::{Error, Result};
