//! Representations of the odometer semigroup `O_n` on truncated vector-valued
//! Fock spaces.
//!
//! The crate builds odometer maps `W_L` from their symbols, classifies them
//! (isometric, Nica-covariant, unitary), dilates pure row contractions to
//! Fock representations, factorizes invariant subspaces through inner
//! multi-analytic maps, and computes spectra of the unitary cases. Every
//! construction is finite: operators act on `F(n, M) ⊗ C^d`, the span of all
//! words of length at most `M`, and carry an exactness window recording
//! which columns are free of truncation error.
//!
//! Large truncations are handled without dense matrices where the structure
//! allows it: [`FockVector`] is a sparse vector keyed by words, and the
//! odometer map and its adjoint have matrix-free actions on it.

pub mod classify;
pub mod cli;
pub mod dilation;
mod error;
pub mod fock;
pub mod gallery;
pub mod io;
pub mod linalg;
pub mod odometer;
pub mod operator;
pub mod random;
pub mod report;
pub mod subspace;
pub mod symbol;

pub use error::{Error, Result};
pub use fock::{enumerate_words, word_index, FockVector, TruncatedFockSpace, Word};
pub use operator::{creation_operator, Domain, Operator};
pub use symbol::Symbol;

/// Complex scalar used throughout.
pub type C64 = nalgebra::Complex<f64>;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;

/// Default tolerance for structural residuals and rank decisions.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Largest dense dimension any routine will allocate.
pub const DENSE_LIMIT: usize = 4096;
