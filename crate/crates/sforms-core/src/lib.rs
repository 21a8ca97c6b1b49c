//! Exact arithmetic for the equivalence theory of integral quadratic forms
//! over `ℤ` and the rings `ℤ_S` of `S`-integers.
//!
//! Everything that feeds a decision is computed in exact rational arithmetic:
//! `p`-adic valuations and norms, square classes with verified witnesses,
//! Hilbert symbols, the complete local classification of quadratic forms over
//! `ℚ_ν` (standard-form catalog), constructive standardization with certified
//! norm bounds, Minkowski reduction and equivalence search with certificates,
//! an exact ledger of the explicit constants used by the effective bounds,
//! and `ℤ_S`-lattice utilities (covolume, systole, reduced bases).
//!
//! Floating point appears only in clearly flagged diagnostic paths (numeric
//! quadrature, approximate real standardization); no decision consumes it.

pub mod arith;
pub mod bounds;
pub mod construct;
pub mod error;
pub mod local;
pub mod matrix;
pub mod qform;
pub mod reduce;
pub mod selftest;
pub mod slattice;

pub use arith::{Place, PlaceSet, Rat};
pub use error::{Error, Result};
pub use matrix::RMatrix;
pub use qform::QuadraticForm;
