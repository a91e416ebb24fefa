//! Verification conditions for a candidate pushdown and the witness check.
//!
//! With `lift_guard` set, the task's step never returns to the initializer, so
//! `a == I` holds exactly for the empty fold. Final then reads the filters
//! through Lift: `P̂(a) = a != I and P(a)`, which lets an exact pushdown be
//! certified even when `P(I)` is false.

use crate::dsl::PipelineTask;
use crate::smt::{Model, Session, SmtError, Verdict};
use crate::term::{and_all, eq, implies, lit, not, or_all, Term, Var};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VcKind {
    Init,
    Sync,
    Stutter,
    Final,
}

impl fmt::Display for VcKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VcKind::Init => "Init",
            VcKind::Sync => "Sync",
            VcKind::Stutter => "Stutter",
            VcKind::Final => "Final",
        })
    }
}

pub struct VcGen<'a> {
    pub task: &'a PipelineTask,
    pub lift_guard: bool,
}

fn step(v: Var) -> Term {
    Term::ApplyF(Box::new(Term::Var(v)), Box::new(Term::Var(Var::Row)))
}

impl<'a> VcGen<'a> {
    /// Decide the lift guard with one validity query: `f(a, r) != I`.
    pub fn new(task: &'a PipelineTask, s: &mut Session) -> Result<VcGen<'a>, SmtError> {
        let never_init = not(eq(step(Var::Acc), task.init_term()));
        let lift_guard = s.check_valid(&never_init)?.is_valid();
        Ok(VcGen { task, lift_guard })
    }

    pub fn with_guard(task: &'a PipelineTask, lift_guard: bool) -> VcGen<'a> {
        VcGen { task, lift_guard }
    }

    fn init_lit(&self) -> Term {
        lit(self.task.init.clone(), self.task.acc_ty.clone())
    }

    /// A conjunction over `a`, read at accumulator `v` and guarded by
    /// definedness when the lift guard holds.
    pub fn lifted(&self, v: Var, pred: &[Term]) -> Term {
        let body = and_all(pred.iter().map(|p| p.rename(Var::Acc, v)));
        if self.lift_guard {
            and_all([not(eq(Term::Var(v), self.init_lit())), body])
        } else {
            body
        }
    }

    pub fn post(&self) -> &[Term] {
        &self.task.post_clauses
    }

    /// `ψ(I, I)`.
    pub fn init(&self, psi: &[Term]) -> Term {
        let i = self.init_lit();
        let ground = and_all(psi.iter().cloned());
        ground.subst(&|v| matches!(v, Var::Acc1 | Var::Acc2).then(|| i.clone()))
    }

    fn after(cons: &[Term], stutter: bool) -> Term {
        and_all(cons.iter().map(|c| {
            c.subst(&|v| match v {
                Var::Acc1 => Some(step(Var::Acc1)),
                Var::Acc2 if !stutter => Some(step(Var::Acc2)),
                _ => None,
            })
        }))
    }

    /// `ante(a1, a2) and q(r) => cons(f(a1, r), f(a2, r))`.
    pub fn sync(&self, ante: &[Term], q: &[Term], cons: &[Term]) -> Term {
        let pre = and_all(ante.iter().cloned().chain(q.iter().cloned()));
        implies(pre, Self::after(cons, false))
    }

    /// `ante(a1, a2) and not q(r) => cons(f(a1, r), a2)`.
    pub fn stutter(&self, ante: &[Term], q: &[Term], cons: &[Term]) -> Term {
        let pre = and_all(ante.iter().cloned().chain([not(and_all(q.iter().cloned()))]));
        implies(pre, Self::after(cons, true))
    }

    /// The two executions agree on the lifted outcome of `p` and `p_res`.
    pub fn outcome_agrees(&self, p: &[Term], p_res: &[Term]) -> Term {
        let p1 = self.lifted(Var::Acc1, p);
        let p2 = self.lifted(Var::Acc2, p_res);
        or_all([
            and_all([p1.clone(), p2.clone(), eq(Term::Var(Var::Acc1), Term::Var(Var::Acc2))]),
            and_all([not(p1), not(p2)]),
        ])
    }

    /// `ψ(a1, a2) => (P̂(a1) and P̂'(a2) and a1 = a2) or (not P̂(a1) and not P̂'(a2))`.
    pub fn final_vc(&self, psi: &[Term], p_res: &[Term]) -> Term {
        self.final_with(psi, self.post(), p_res)
    }

    pub fn final_with(&self, psi: &[Term], p: &[Term], p_res: &[Term]) -> Term {
        implies(and_all(psi.iter().cloned()), self.outcome_agrees(p, p_res))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum WitnessCheck {
    Certified,
    Failed(VcKind, Model),
    Inconclusive(VcKind, String),
}

impl WitnessCheck {
    pub fn is_certified(&self) -> bool {
        matches!(self, WitnessCheck::Certified)
    }
}

/// All four conditions, with ψ as both antecedent and consequent.
pub fn check_witness(
    s: &mut Session,
    vc: &VcGen,
    q: &[Term],
    p_res: &[Term],
    psi: &[Term],
) -> Result<WitnessCheck, SmtError> {
    let conds = [
        (VcKind::Init, vc.init(psi)),
        (VcKind::Sync, vc.sync(psi, q, psi)),
        (VcKind::Stutter, vc.stutter(psi, q, psi)),
        (VcKind::Final, vc.final_vc(psi, p_res)),
    ];
    for (kind, f) in conds {
        match s.check_valid(&f)? {
            Verdict::Valid => {}
            Verdict::Invalid(m) => return Ok(WitnessCheck::Failed(kind, m)),
            Verdict::Unknown(why) => return Ok(WitnessCheck::Inconclusive(kind, why)),
        }
    }
    Ok(WitnessCheck::Certified)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Partial,
    Split,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Exact => "exact",
            Mode::Partial => "partial",
            Mode::Split => "split",
        })
    }
}

/// Exact when nothing remains after the fold, partial when the residual is
/// the whole post-filter, split otherwise.
pub fn classify_mode(s: &mut Session, task: &PipelineTask, p_res: &[Term]) -> Result<Mode, SmtError> {
    if p_res.is_empty() {
        return Ok(Mode::Exact);
    }
    let p = and_all(task.post_clauses.iter().cloned());
    let r = and_all(p_res.iter().cloned());
    let same = s.check_valid(&implies(p.clone(), r.clone()))?.is_valid() && s.check_valid(&implies(r, p))?.is_valid();
    Ok(if same { Mode::Partial } else { Mode::Split })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::dsl::parse_atom;
    use crate::fixtures::load;
    use crate::smt::SolverConfig;

    fn atoms(task: &PipelineTask, srcs: &[&str]) -> Vec<Term> {
        srcs.iter().map(|s| parse_atom(task, s).unwrap()).collect()
    }

    pub const TOP2_INVARIANT: &[&str] = &[
        "not a1[0] > 90.0 or a1[0] == a2[0]",
        "not a2[0] > 90.0 or a1[0] == a2[0]",
        "not a1[1] > 90.0 or a1[1] == a2[1]",
        "not a2[1] > 90.0 or a1[1] == a2[1]",
        "a2[0] == -inf or a2[0] > 90.0",
        "a2[1] == -inf or a2[1] > 90.0",
        "not a2[1] > 90.0 or a2[0] > 90.0",
    ];

    #[test]
    fn init_is_ground() {
        let t = load("top2");
        let vc = VcGen::with_guard(&t, true);
        let keep = atoms(&t, &["not a1[0] == -inf or a1[0] == a2[0]"]);
        assert_eq!(crate::exec::interp::eval_closed(&vc.init(&keep)), crate::value::Value::Bool(true));
        let drop = atoms(&t, &["not a1[0] == -inf"]);
        assert_eq!(crate::exec::interp::eval_closed(&vc.init(&drop)), crate::value::Value::Bool(false));
        assert_eq!(vc.init(&[]), crate::term::tt());
    }

    #[test]
    fn top2_paper_invariant_certifies_split_pushdown() {
        let t = load("top2");
        let mut s = Session::start(&SolverConfig::default(), &t).unwrap();
        let vc = VcGen::new(&t, &mut s).unwrap();
        assert!(vc.lift_guard);
        let psi = atoms(&t, TOP2_INVARIANT);
        let q = atoms(&t, &["r[0] > 90.0"]);
        let res = atoms(&t, &["not a[1] == -inf"]);
        assert_eq!(check_witness(&mut s, &vc, &q, &res, &psi).unwrap(), WitnessCheck::Certified);
        assert_eq!(classify_mode(&mut s, &t, &res).unwrap(), Mode::Split);
        // a stronger pre-filter breaks Stutter
        let q95 = atoms(&t, &["r[0] > 95.0"]);
        let r = check_witness(&mut s, &vc, &q95, &t.post_clauses, &psi).unwrap();
        assert!(matches!(r, WitnessCheck::Failed(VcKind::Stutter, _)), "{r:?}");
        // Sync rejects an atom that a kept row falsifies
        let bad = atoms(&t, &["not a1[0] > 90.0"]);
        assert!(s.check_valid(&vc.sync(&bad, &q, &bad)).unwrap().is_invalid());
        assert!(s.check_valid(&vc.sync(&psi, &q, &[])).unwrap().is_valid());
        assert!(s.check_valid(&vc.stutter(&psi, &[], &bad)).unwrap().is_valid());
    }

    #[test]
    fn final_sanity() {
        for name in ["top2", "discount", "count", "event_agg", "return_price"] {
            let t = load(name);
            let mut s = Session::start(&SolverConfig::default(), &t).unwrap();
            let vc = VcGen::new(&t, &mut s).unwrap();
            assert_eq!(vc.lift_guard, name != "count", "{name}");
            let same = vec![eq(Term::Var(Var::Acc1), Term::Var(Var::Acc2))];
            assert!(s.check_valid(&vc.final_vc(&same, &t.post_clauses)).unwrap().is_valid(), "{name}");
            assert!(s.check_valid(&vc.final_vc(&[], &[])).unwrap().is_invalid(), "{name}");
            assert_eq!(classify_mode(&mut s, &t, &[]).unwrap(), Mode::Exact);
            let mut shuffled = t.post_clauses.clone();
            shuffled.reverse();
            assert_eq!(classify_mode(&mut s, &t, &shuffled).unwrap(), Mode::Partial, "{name}");
        }
    }
}
