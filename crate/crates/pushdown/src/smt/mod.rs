//! SMT backend: term encoding, response parsing and the solver session.

pub mod encode;
pub mod sexp;
pub mod session;

pub use session::{Model, SatResult, Session, SmtError, SolverConfig, Verdict};

use crate::dsl::PipelineTask;
use crate::exec::interp::Interp;
use crate::term::Term;

/// Ground truth of `atom` under a countermodel, via the interpreter.
pub fn eval_atom(task: &PipelineTask, atom: &Term, model: &Model) -> bool {
    let ctx = task.ctx();
    Interp::new(Some(&task.body), &ctx).eval_bool(atom, &model.env)
}
