//! Bounded feasibility screen: is there any pre-filter other than `true` that
//! is correct on every dataframe of a fixed small length?
//!
//! The fold is unrolled over symbolic rows `r1..rn`, once unfiltered and once
//! filtered by an uninterpreted `Q`. The outcome assertion must hold for all
//! rows, and some row must be rejected by `Q`.

use crate::dsl::PipelineTask;
use crate::smt::encode::{mangle, Encoder};
use crate::smt::{SatResult, Session, SmtError};
use crate::term::{and_all, Var};
use crate::value::{Ty, Value};

pub const MAX_ROWS: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub enum ScreenVerdict {
    /// A row the witness filter rejects.
    Feasible(Value),
    Infeasible,
    Inconclusive(String),
}

impl ScreenVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            ScreenVerdict::Feasible(_) => "feasible",
            ScreenVerdict::Infeasible => "infeasible",
            ScreenVerdict::Inconclusive(_) => "inconclusive",
        }
    }
}

/// Binders for one symbolic row, the row built from them, and guards for the
/// parts left as datatype values. Tuples and floats are split into scalar
/// binders: quantifying over the solver's row datatype directly stalls the
/// quantifier instantiation on simple tasks.
fn row_binders(enc: &Encoder, x: &str, ty: &Ty) -> (Vec<String>, String, Vec<String>) {
    match ty {
        Ty::Float => {
            let b = vec![format!("({x} Real)")];
            (b, if enc.sort(ty) == "Real" { x.to_string() } else { format!("(Fin {x})") }, vec![])
        }
        Ty::Tuple(ts) => {
            let (mut bs, mut es, mut gs) = (Vec::new(), Vec::new(), Vec::new());
            for (i, t) in ts.iter().enumerate() {
                let (b, e, g) = row_binders(enc, &format!("{x}_{i}"), t);
                bs.extend(b);
                es.push(e);
                gs.extend(g);
            }
            (bs, format!("(mk_{} {})", mangle(ty), es.join(" ")), gs)
        }
        _ => (vec![format!("({x} {})", enc.sort(ty))], x.to_string(), enc.finite(x, ty).into_iter().collect()),
    }
}

/// The screening query's commands, for `rows` symbolic rows.
pub fn query(s: &Session, task: &PipelineTask, rows: usize) -> Vec<String> {
    let enc = &s.enc;
    let row_sort = enc.sort(&task.row_ty);
    let post = and_all(task.post_clauses.iter().cloned());
    let p = |a: &str| enc.formula(&post, &|v| if v == Var::Acc { a.to_string() } else { v.name().to_string() });

    let (mut binders, mut guards, mut lets) = (Vec::new(), Vec::new(), Vec::new());
    for k in 1..=rows {
        let (b, e, g) = row_binders(enc, &format!("bmc_x{k}"), &task.row_ty);
        binders.extend(b);
        guards.extend(g);
        lets.push(format!("(bmc_r{k} {e})"));
    }
    let init = enc.value(&task.init, &task.acc_ty);
    for k in 1..=rows {
        let (prev1, prev2) = if k == 1 { (init.clone(), init.clone()) } else { (format!("bmc_a1_{}", k - 1), format!("bmc_a2_{}", k - 1)) };
        lets.push(format!("(bmc_a1_{k} (f {prev1} bmc_r{k}))"));
        lets.push(format!("(bmc_a2_{k} (ite (bmc_q bmc_r{k}) (f {prev2} bmc_r{k}) {prev2}))"));
    }
    let (a1, a2) = (format!("bmc_a1_{rows}"), format!("bmc_a2_{rows}"));
    let mut body = format!("(and (= {p1} {p2}) (=> {p1} (= {a1} {a2})))", p1 = p(&a1), p2 = p(&a2));
    for l in lets.iter().rev() {
        body = format!("(let ({l}) {body})");
    }
    if !guards.is_empty() {
        body = format!("(=> (and true {}) {body})", guards.join(" "));
    }
    let mut cmds = vec![
        format!("(declare-fun bmc_q ({row_sort}) Bool)"),
        format!("(assert (forall ({}) {body}))", binders.join(" ")),
        format!("(declare-const bmc_w {row_sort})"),
        "(assert (not (bmc_q bmc_w)))".to_string(),
    ];
    if let Some(g) = enc.finite("bmc_w", &task.row_ty) {
        cmds.push(format!("(assert {g})"));
    }
    cmds
}

/// Satisfiable: some non-trivial filter survives every dataframe of length
/// `rows`. Unsatisfiable: only `Q = true` does, so no pushdown exists.
pub fn screen(s: &mut Session, task: &PipelineTask, rows: usize) -> Result<ScreenVerdict, SmtError> {
    if !(1..=MAX_ROWS).contains(&rows) {
        return Ok(ScreenVerdict::Inconclusive(format!("row bound {rows} outside 1..={MAX_ROWS}")));
    }
    let cmds = query(s, task, rows);
    let (r, vals) = s.check_sat_values(&cmds, &["bmc_w".to_string()])?;
    Ok(match r {
        SatResult::Unsat => ScreenVerdict::Infeasible,
        SatResult::Unknown(why) => ScreenVerdict::Inconclusive(why),
        SatResult::Sat => match vals.first().map(|v| s.enc.decode(v, &task.row_ty)) {
            Some(Ok(w)) => ScreenVerdict::Feasible(w),
            Some(Err(e)) => return Err(SmtError::Protocol(e)),
            None => return Err(SmtError::Protocol("no value for the witness row".into())),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::load;
    use crate::smt::SolverConfig;

    fn run(name: &str, rows: usize) -> ScreenVerdict {
        let t = load(name);
        let mut s = Session::start(&SolverConfig::default(), &t).unwrap();
        screen(&mut s, &t, rows).unwrap()
    }

    #[test]
    fn fixtures_at_two_rows() {
        assert!(matches!(run("discount", 2), ScreenVerdict::Feasible(_)));
        assert!(matches!(run("top2", 2), ScreenVerdict::Feasible(_)));
        assert_eq!(run("count", 2), ScreenVerdict::Infeasible);
    }

    #[test]
    fn discount_witness_is_a_cheap_item() {
        // rows priced under 1000 never reach the threshold, so dropping them is safe
        let ScreenVerdict::Feasible(Value::Tuple(w)) = run("discount", 2) else { panic!() };
        let Value::Real(p) = &w[0] else { panic!("{w:?}") };
        assert!(*p < num_rational::BigRational::from_integer(1000.into()), "{p}");
    }

    #[test]
    fn row_bound_is_checked() {
        assert!(matches!(run("top2", 0), ScreenVerdict::Inconclusive(_)));
        assert!(matches!(run("top2", 5), ScreenVerdict::Inconclusive(_)));
    }
}
