//! Weyl groupoids and arithmetic root systems of bicharacters of diagonal
//! type.
//!
//! Scalars are exact monomials in a generic parameter and a root of unity,
//! so every fullness and finiteness question is decided by integer
//! arithmetic. The [`catalog`] module carries the rank 4 and rank >= 5
//! classification tables together with the reflection words certifying
//! finiteness.

pub mod catalog;
pub mod criteria;
pub mod diagram;
pub mod exec;
pub mod groupoid;
pub mod scalar;

pub use diagram::{BicharacterMatrix, CanonicalDiagram, DynkinDiagram};
pub use exec::Execution;
pub use groupoid::{explore, Basis, Caps, GroupoidResult, ReflectionWord, Verdict};
pub use scalar::{Scalar, TorsionConfig};
