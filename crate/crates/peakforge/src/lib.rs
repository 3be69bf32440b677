//! Compiler for small programmable hardware units. Crate docs are finalized in
//! the last build step; see module docs meanwhile.

pub mod adt;
pub mod bitvec;
pub mod error;
pub mod interp;
pub mod normalize;
pub mod pipeline;
pub mod rtl;
pub mod smt;
pub mod surface;
pub mod synth;
pub mod verify;

pub use crate::adt::{AdtType, AdtValue};
pub use crate::bitvec::{BVValue, OpCode, Value};
pub use crate::error::Error;
