//! Ladder systems and colourings over finite fields: constructive
//! uniformization, the exact quotient of colourings by the uniform
//! subspace, and relational models coding colourings so that counting
//! isomorphism classes reproduces the quotient size.

pub mod colouring;
pub mod error;
pub mod field;
pub mod instance;
pub mod isobridge;
pub mod ladder;
pub mod model;
pub mod quotient;
pub mod uniformize;
pub mod vector;

pub use colouring::{Colouring, FilterD};
pub use error::{Error, Result};
pub use field::{FieldCtx, FieldElem};
pub use instance::Instance;
pub use ladder::{GenParams, LadderSystem, Regime};
pub use uniformize::PartialUniformizer;
pub use vector::SparseVec;
