//! Index theory workbench for radial Callias-type operators with degenerate potentials.
//!
//! The line ℝ carries two conic ends, `t → +∞` and `t → −∞`, with boundary defining function
//! `x = 1/|t|`. Operators are first-order systems `P = A d/dt + C(t)`.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod index;
pub mod indicial;
pub mod linalg;
pub mod model;
pub mod models;
pub mod phg;
pub mod quad;
pub mod spectral;
