//! Synthesis of optimal predicate pushdowns through fold-style UDFs.
//!
//! Given a fold `F(x) = fold(x, I, f)` and a post-filter `P`, the synthesizer
//! searches finite predicate universes for a strongest row pre-filter `Q`, a
//! weakest residual `P'` and a bisimulation invariant certifying that
//! `Lift(P, F(x)) = Lift(P', F(filter_Q(x)))` for every input.

pub mod analysis;
pub mod bmc;
pub mod dsl;
pub mod exec;
pub mod fixtures;
pub mod logic;
pub mod smt;
pub mod synth;
pub mod term;
pub mod value;
pub mod vcgen;

pub use dsl::{parse, typecheck, PipelineTask};
pub use term::{Term, Var};
pub use value::{Ty, Value};
