//! Verification lab for the hardness of gradient-based learning of the
//! additive discrete logarithm's parity bit.
//!
//! The crate is organized around five subsystems:
//!
//! - [`zp`]: exact modular arithmetic, primality, and the additive-group
//!   discrete logarithm with its parity bit.
//! - [`spectral`]: the structured ±1 matrices built from the parity class,
//!   their spectral norms (power iteration plus an independent one-sided
//!   Jacobi oracle), and their roots-of-unity decomposition.
//! - [`orthogonality`]: exact integer statistics of the parity-bit class —
//!   the f statistic, its variance, pairwise inner products, the dlog base
//!   distribution, and a Boas-Bellman inequality checker.
//! - [`neural`]: a from-scratch dense feed-forward network with manual
//!   backpropagation, Adam, exact group-expectation gradients, and a
//!   training loop.
//! - [`experiments`]: deterministic sweep runners behind the CLI, with CSV
//!   results and self-contained SVG plots.

pub mod error;
pub mod experiments;
pub mod neural;
pub mod orthogonality;
pub mod seeds;
pub mod spectral;
pub mod zp;

pub use error::{Error, Result};
pub use zp::{GroupSpec, ZpElement};
