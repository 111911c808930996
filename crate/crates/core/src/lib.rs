//! One-shot entropic quantities of quantum states and channels.
//!
//! The crate covers dense Hermitian linear algebra ([`linalg`]), a small
//! primal-dual interior-point solver for Hermitian semidefinite programs
//! ([`sdp`]), channel representations ([`channels`]), state entropies
//! ([`entropies`]), the min-entropy of a channel ([`dynamical`]), Monte Carlo
//! decoupling experiments ([`decoupling`]) and work-cost calculators
//! ([`thermo`]). The `dynent` binary wraps these in a command-line tool
//! ([`cli`]).
//!
//! All entropies are in bits.

pub mod channels;
pub mod cli;
pub mod decoupling;
pub mod dynamical;
pub mod entropies;
pub mod error;
pub mod linalg;
pub mod random;
pub mod sdp;
pub mod thermo;
pub mod tolerance;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, DensityOperator, HermitianOperator, C64};
