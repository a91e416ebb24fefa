//! Data-flow facts about the accumulator function and the predicate universes
//! built from them.

pub mod simplify;
pub mod universe;

pub use universe::{build_universe_invariant, build_universe_q, build_universe_residual, build_universes, PredicateUniverse};

use crate::dsl::PipelineTask;
use crate::logic::nnf;
use crate::term::{not, proj, ArithOp, CmpOp, Term, TyCtx, Var};
use crate::value::Value;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Mono {
    Inc(Value),
    Dec(Value),
    None,
}

impl fmt::Display for Mono {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mono::Inc(b) => write!(f, "Inc({b})"),
            Mono::Dec(b) => write!(f, "Dec({b})"),
            Mono::None => write!(f, "None"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepInfo {
    /// `is_dep[i][j]`: component `j` of the step reads accumulator component `i`.
    pub is_dep: Vec<Vec<bool>>,
    pub is_dep_row: Vec<bool>,
    pub is_mono: Vec<Mono>,
}

impl DepInfo {
    pub fn dep(&self, i: usize, j: usize) -> bool {
        self.is_dep[i][j]
    }
}

/// Expression for component `j` of the step result, with ite pushed outward.
pub fn component(body: &Term, j: usize) -> Term {
    match body {
        Term::Tuple(es) => es[j].clone(),
        Term::Ite(c, x, y) => Term::Ite(c.clone(), Box::new(component(x, j)), Box::new(component(y, j))),
        t => proj(t.clone(), j),
    }
}

/// Leaf expressions of a component with the branch conditions leading to them.
/// Conditions carry their polarity.
pub fn paths(t: &Term) -> Vec<(Vec<(Term, bool)>, Term)> {
    match t {
        Term::Ite(c, x, y) => {
            let mut out = Vec::new();
            for (mut conds, leaf) in paths(x) {
                conds.insert(0, ((**c).clone(), true));
                out.push((conds, leaf));
            }
            for (mut conds, leaf) in paths(y) {
                conds.insert(0, ((**c).clone(), false));
                out.push((conds, leaf));
            }
            out
        }
        Term::Some(x) => paths(x).into_iter().map(|(c, l)| (c, Term::Some(Box::new(l)))).collect(),
        t => vec![(vec![], t.clone())],
    }
}

pub fn strip_some(t: &Term) -> &Term {
    match t {
        Term::Some(x) => strip_some(x),
        t => t,
    }
}

pub fn acc_field(i: usize) -> Term {
    proj(Term::Var(Var::Acc), i)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Step {
    Same,
    Init,
    Up,
    Down,
    Other,
}

fn is_null_test(t: &Term) -> bool {
    matches!(t, Term::IsNone(x) if matches!(&**x, Term::Proj(v, _) if **v == Term::Var(Var::Acc)))
}

/// Direction in which a taken condition moves component `i` to the row value `e`.
fn guard_direction(cond: &Term, i: usize, e: &Term) -> Option<Step> {
    let ai = acc_field(i);
    let disj: Vec<&Term> = match cond {
        Term::Or(ts) => ts.iter().collect(),
        t => vec![t],
    };
    let mut dir = None;
    let mut all_null = true;
    for d in disj {
        if is_null_test(d) {
            continue;
        }
        all_null = false;
        let here = match d {
            Term::Cmp(op, l, r) if strip_some(l) == e && **r == ai => match op {
                CmpOp::Gt | CmpOp::Ge => Step::Up,
                CmpOp::Lt | CmpOp::Le => Step::Down,
                CmpOp::Eq => return None,
            },
            Term::Cmp(op, l, r) if **l == ai && strip_some(r) == e => match op {
                CmpOp::Lt | CmpOp::Le => Step::Up,
                CmpOp::Gt | CmpOp::Ge => Step::Down,
                CmpOp::Eq => return None,
            },
            _ => return None,
        };
        match dir {
            None => dir = Some(here),
            Some(d0) if d0 == here => {}
            Some(_) => return None,
        }
    }
    if all_null {
        Some(Step::Init)
    } else {
        dir
    }
}

fn classify(conds: &[(Term, bool)], leaf: &Term, i: usize, ctx: &TyCtx) -> Step {
    let ai = acc_field(i);
    let leaf = strip_some(leaf);
    if *leaf == ai {
        return Step::Same;
    }
    if let Term::Arith(op, x, c) = leaf {
        if let Term::Lit(v, _) = &**c {
            let sign = v.num_cmp(&Value::int(0));
            if **x == ai {
                match (op, sign) {
                    (ArithOp::Add, Some(std::cmp::Ordering::Greater)) | (ArithOp::Sub, Some(std::cmp::Ordering::Less)) => {
                        return Step::Up
                    }
                    (ArithOp::Add, Some(std::cmp::Ordering::Less)) | (ArithOp::Sub, Some(std::cmp::Ordering::Greater)) => {
                        return Step::Down
                    }
                    _ => return Step::Other,
                }
            }
        }
    }
    if leaf.mentions(Var::Acc) {
        return Step::Other;
    }
    for (c, pos) in conds {
        let c = if *pos { c.clone() } else { nnf(&not(c.clone()), ctx) };
        if let Some(s) = guard_direction(&c, i, leaf) {
            return s;
        }
    }
    Step::Other
}

pub fn infer_dep_info(task: &PipelineTask) -> DepInfo {
    let n = task.arity();
    let ctx = task.ctx();
    let comps: Vec<Term> = (0..n).map(|j| component(&task.body, j)).collect();
    let mut is_dep = vec![vec![false; n]; n];
    for (j, c) in comps.iter().enumerate() {
        for i in c.fields_read(Var::Acc, n) {
            is_dep[i][j] = true;
        }
        is_dep[j][j] = true;
    }
    let is_dep_row = comps.iter().map(|c| c.mentions(Var::Row)).collect();
    let is_mono = comps
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let steps: Vec<Step> = paths(c).iter().map(|(conds, leaf)| classify(conds, leaf, i, &ctx)).collect();
            let init = task.init.field(i).cloned().unwrap_or(Value::None);
            let up = steps.contains(&Step::Up);
            let down = steps.contains(&Step::Down);
            if steps.contains(&Step::Other) || up == down {
                Mono::None
            } else if up {
                Mono::Inc(init)
            } else {
                Mono::Dec(init)
            }
        })
        .collect();
    DepInfo { is_dep, is_dep_row, is_mono }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse, typecheck};

    pub(crate) fn task(src: &str) -> PipelineTask {
        typecheck(&parse(src).unwrap()).unwrap()
    }

    const TOP2: &str = "x = (float,)\nI : (float, float,) = (-inf, -inf)\nagg = fold(x, I, lambda a, r: (r[0], a[0]) if r[0] > a[0] else ((a[0], r[0]) if r[0] > a[1] else a))\nout = filter(agg, lambda a: a[0] > 90.0 and a[1] > 90.0)\n";

    #[test]
    fn top2_dependencies() {
        let d = infer_dep_info(&task(TOP2));
        assert!(d.dep(0, 1));
        assert!(d.dep(1, 1) && d.dep(0, 0));
        assert!(d.dep(1, 0), "the first component's branch condition reads a[1]");
        assert_eq!(d.is_dep_row, vec![true, true]);
        assert_eq!(d.is_mono, vec![Mono::Inc(Value::NegInf), Mono::None]);
    }

    #[test]
    fn counters_and_extrema() {
        let src = "x = (str, int,)\nI : (int, Optional[int], Optional[int], int,) = (0, None, None, 7)\n\
            agg = fold(x, I, lambda a, r: (a[0] + 1 if r[0] == \"time\" else a[0], \
            r[1] if a[1] == None else (r[1] if r[1] < a[1] else a[1]), \
            (match a[2]: case None: r[1] case v: (r[1] if r[1] > v else v)), a[3]))\n\
            out = filter(agg, lambda a: a[0] > 0)\n";
        let d = infer_dep_info(&task(src));
        assert_eq!(d.is_mono[0], Mono::Inc(Value::int(0)));
        assert_eq!(d.is_mono[1], Mono::Dec(Value::None));
        assert_eq!(d.is_mono[2], Mono::Inc(Value::None));
        assert_eq!(d.is_mono[3], Mono::None);
        assert_eq!(d.is_dep_row, vec![true, true, true, false]);
    }

    #[test]
    fn unconditional_counter() {
        let src = "x = (float,)\nI : (int,) = (0,)\nagg = fold(x, I, lambda a, r: (a[0] + 1,))\nout = filter(agg, lambda a: a[0] >= 0)\n";
        let d = infer_dep_info(&task(src));
        assert_eq!(d.is_mono, vec![Mono::Inc(Value::int(0))]);
        assert_eq!(d.is_dep_row, vec![false]);
    }
}
