pub mod error;
pub mod field;
pub mod flags;
pub mod harness;
pub mod linalg;
pub mod mpoly;
pub mod polyio;
pub mod schubert;
pub mod smoothness;
pub mod upoly;

pub use error::{Error, Result};
pub use field::{Embedding, FieldCtx, FieldElem};
pub use flags::{Flag, Line, Multiplicity, Scheme};
pub use mpoly::{MultiPoly, PolyRing, RestrictionCoeffs};
