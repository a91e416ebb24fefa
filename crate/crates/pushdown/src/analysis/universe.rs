//! The finite atom pools that bound the search: row pre-filters, residuals and
//! relational invariants.

use super::simplify::simplify;
use super::{acc_field, component, infer_dep_info, paths, strip_some, DepInfo, Mono};
use crate::dsl::{PipelineTask, CNF_CAP};
use crate::logic::{canon, cnf, disjuncts};
use crate::term::{and_all, eq, ff, implies, is_none, lit, not, or_all, proj, CmpOp, Term, Var};
use crate::value::Value;
use serde_json::{json, Value as Json};
use std::collections::BTreeSet;

#[derive(Clone, Debug, PartialEq)]
pub struct PredicateUniverse {
    /// Atoms over `r`.
    pub u_q: Vec<Term>,
    /// Atoms over `a`.
    pub u_res: Vec<Term>,
    /// Atoms over `a1`, `a2`.
    pub u_psi: Vec<Term>,
    /// Conjuncts of P with no row-level counterpart, and why.
    pub dropped: Vec<String>,
}

impl PredicateUniverse {
    pub fn to_json(&self) -> Json {
        let list = |atoms: &[Term]| -> Json {
            atoms.iter().enumerate().map(|(k, a)| json!({"index": k, "atom": a.to_string()})).collect()
        };
        json!({
            "u_q": list(&self.u_q),
            "u_residual": list(&self.u_res),
            "u_psi": list(&self.u_psi),
            "dropped": self.dropped,
        })
    }
}

pub fn build_universes(task: &PipelineTask) -> (DepInfo, PredicateUniverse) {
    let dep = infer_dep_info(task);
    let (u_q, dropped) = build_universe_q(task, &dep);
    let u_res = build_universe_residual(task);
    let u_psi = build_universe_invariant(task, &dep);
    (dep, PredicateUniverse { u_q, u_res, u_psi, dropped })
}

fn push_unique(out: &mut Vec<Term>, t: Term) {
    if t.as_bool_lit().is_none() && !out.contains(&t) {
        out.push(t);
    }
}

// ---------------------------------------------------------------------------
// Pre-filter universe.

/// How an accumulator component is fed from rows.
#[derive(Clone, Debug)]
enum Source {
    /// The component takes one of these row expressions.
    Values(Vec<Term>),
    /// The component only counts; the term is the row condition under which
    /// it moves.
    Counter(Term),
    Opaque,
}

fn source(task: &PipelineTask, i: usize, seen: &mut BTreeSet<usize>) -> Source {
    if !seen.insert(i) {
        return Source::Values(vec![]);
    }
    let comp = component(&task.body, i);
    let ai = acc_field(i);
    let mut values: Vec<Term> = Vec::new();
    let mut guards: Vec<Term> = Vec::new();
    for (conds, leaf) in paths(&comp) {
        let leaf = strip_some(&leaf).clone();
        if leaf == ai {
            continue;
        }
        if let Term::Arith(_, x, c) = &leaf {
            if **x == ai && c.is_lit() {
                let g = and_all(conds.iter().map(|(c, pos)| if *pos { c.clone() } else { not(c.clone()) }));
                if g.mentions(Var::Acc) {
                    return Source::Opaque;
                }
                guards.push(g);
                continue;
            }
        }
        if !leaf.mentions(Var::Acc) {
            if !values.contains(&leaf) {
                values.push(leaf);
            }
            continue;
        }
        match &leaf {
            Term::Proj(v, k) if **v == Term::Var(Var::Acc) => match source(task, *k, seen) {
                Source::Values(vs) => {
                    for v in vs {
                        if !values.contains(&v) {
                            values.push(v);
                        }
                    }
                }
                _ => return Source::Opaque,
            },
            _ => return Source::Opaque,
        }
    }
    match (values.is_empty(), guards.is_empty()) {
        (false, true) => Source::Values(values),
        (true, false) => Source::Counter(or_all(guards)),
        _ => Source::Opaque,
    }
}

/// Replace accumulator reads in a literal by the row terms feeding them.
fn lift_literal(task: &PipelineTask, sources: &[Source], l: &Term) -> Option<Term> {
    let comps = l.fields_read(Var::Acc, task.arity());
    let mut alts = vec![l.clone()];
    for i in comps {
        match &sources[i] {
            Source::Counter(g) => return Some(g.clone()),
            Source::Values(vs) if !vs.is_empty() => {
                let ai = acc_field(i);
                alts = alts.iter().flat_map(|a| vs.iter().map(|v| a.replace(&ai, v)).collect::<Vec<_>>()).collect();
            }
            _ => return None,
        }
    }
    Some(or_all(alts))
}

/// Apply the monotone relaxation of equalities, then lift a clause to rows.
fn lift_clause(task: &PipelineTask, dep: &DepInfo, sources: &[Source], clause: &Term) -> Option<Term> {
    let mut lits = Vec::new();
    for l in disjuncts(clause) {
        let l = relax_equality(dep, &l);
        lits.push(lift_literal(task, sources, &l)?);
    }
    Some(simplify(&or_all(lits), &task.ctx()))
}

fn relax_equality(dep: &DepInfo, l: &Term) -> Term {
    if let Term::Cmp(CmpOp::Eq, x, c) = l {
        if let (Term::Proj(v, i), Term::Lit(val, _)) = (&**x, &**c) {
            if **v == Term::Var(Var::Acc) && matches!(val, Value::Int(_) | Value::Real(_)) {
                match dep.is_mono[*i] {
                    Mono::Inc(_) => return Term::Cmp(CmpOp::Ge, x.clone(), c.clone()),
                    Mono::Dec(_) => return Term::Cmp(CmpOp::Le, x.clone(), c.clone()),
                    Mono::None => {}
                }
            }
        }
    }
    l.clone()
}

fn ite_conditions(t: &Term, out: &mut Vec<Term>) {
    if let Term::Ite(c, _, _) = t {
        if !out.contains(c) {
            out.push((**c).clone());
        }
    }
    for c in t.children() {
        ite_conditions(c, out);
    }
}

/// Row-field indices read by an atom.
fn row_fields(t: &Term, task: &PipelineTask) -> BTreeSet<usize> {
    t.fields_read(Var::Row, task.row_arity())
}

/// The row pre-filter universe, and the conjuncts of P that could not be
/// lifted to rows.
pub fn build_universe_q(task: &PipelineTask, dep: &DepInfo) -> (Vec<Term>, Vec<String>) {
    let ctx = task.ctx();
    let sources: Vec<Source> = (0..task.arity()).map(|i| source(task, i, &mut BTreeSet::new())).collect();
    let mut dropped = Vec::new();
    let lift_all = |clauses: &[Term], dropped: &mut Vec<String>| -> Vec<Term> {
        let mut out = Vec::new();
        for c in clauses {
            match lift_clause(task, dep, &sources, c) {
                Some(t) if t.mentions(Var::Acc) => dropped.push(format!("{c}: accumulator read survives lifting")),
                Some(t) if t.as_bool_lit().is_some() => {}
                Some(t) => {
                    // A lifted counter guard may be a non-clause; split it.
                    for k in cnf(&t, &ctx, CNF_CAP).unwrap_or_else(|_| vec![t.clone()]) {
                        push_unique(&mut out, simplify(&k, &ctx));
                    }
                }
                None => dropped.push(format!("{c}: no contributing row field")),
            }
        }
        out
    };
    let qp = lift_all(&task.post_clauses, &mut dropped);
    let mut conds = Vec::new();
    ite_conditions(&task.body, &mut conds);
    let mut cond_clauses = Vec::new();
    for c in conds {
        for k in cnf(&c, &ctx, CNF_CAP).unwrap_or_default() {
            if !cond_clauses.contains(&k) {
                cond_clauses.push(k);
            }
        }
    }
    let qf = lift_all(&cond_clauses, &mut Vec::new());

    let disj = |ts: &[Term]| simplify(&or_all(ts.iter().cloned()), &ctx);
    let mut out = Vec::new();
    for t in &qp {
        push_unique(&mut out, t.clone());
    }
    if !qp.is_empty() {
        push_unique(&mut out, disj(&qp));
    }
    if !qf.is_empty() {
        push_unique(&mut out, disj(&qf));
    }
    let both: Vec<Term> = qp.iter().chain(qf.iter()).cloned().collect();
    if !qp.is_empty() && !qf.is_empty() {
        push_unique(&mut out, disj(&both));
    }
    // Disjunctions of related atoms: those reading the same row fields.
    let mut groups: Vec<(BTreeSet<usize>, Vec<Term>)> = Vec::new();
    for t in &both {
        let key = row_fields(t, task);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, ts)) => {
                if !ts.contains(t) {
                    ts.push(t.clone())
                }
            }
            None => groups.push((key, vec![t.clone()])),
        }
    }
    for (_, ts) in groups {
        if ts.len() >= 2 {
            push_unique(&mut out, disj(&ts));
        }
    }
    (out, dropped)
}

// ---------------------------------------------------------------------------
// Residual universe.

/// `a[i] != I[i]`, as a null test for Optional components.
pub fn differs_from_init(task: &PipelineTask, v: Var, i: usize) -> Term {
    not(equals_init(task, v, i))
}

pub fn equals_init(task: &PipelineTask, v: Var, i: usize) -> Term {
    let ai = proj(Term::Var(v), i);
    match task.init.field(i) {
        Some(Value::None) => is_none(ai),
        Some(x) => eq(ai, lit(x.clone(), task.acc_field_ty(i).clone())),
        None => unreachable!("initializer arity matches the accumulator"),
    }
}

pub fn build_universe_residual(task: &PipelineTask) -> Vec<Term> {
    let mut out = Vec::new();
    for i in 0..task.arity() {
        push_unique(&mut out, canon(&differs_from_init(task, Var::Acc, i)));
    }
    for c in &task.post_clauses {
        push_unique(&mut out, canon(c));
    }
    out
}

// ---------------------------------------------------------------------------
// Invariant universe.

/// Guard formulas over component `i` of a single accumulator `a`.
fn guards(task: &PipelineTask, dep: &DepInfo, i: usize) -> Vec<Term> {
    let ai = acc_field(i);
    let ty = task.acc_field_ty(i).clone();
    let bound = |op: CmpOp, b: &Value| -> Option<Term> {
        matches!(b, Value::Int(_) | Value::Real(_) | Value::NegInf)
            .then(|| Term::Cmp(op, Box::new(ai.clone()), Box::new(lit(b.clone(), ty.payload().clone()))))
    };
    if !dep.is_dep_row[i] {
        let fixed = match &dep.is_mono[i] {
            Mono::Inc(b) => bound(CmpOp::Ge, b),
            Mono::Dec(b) => bound(CmpOp::Le, b),
            Mono::None => None,
        };
        if let Some(g) = fixed {
            return vec![canon(&g)];
        }
    }
    let mut out = Vec::new();
    for clause in &task.post_clauses {
        for l in disjuncts(clause) {
            let l = match l {
                Term::Not(x) => *x,
                l => l,
            };
            if l.fields_read(Var::Acc, task.arity()) != BTreeSet::from([i]) {
                continue;
            }
            let l = if dep.is_dep_row[i] { relax_equality(dep, &l) } else { l };
            push_unique(&mut out, canon(&l));
        }
    }
    out
}

fn at(t: &Term, v: Var) -> Term {
    t.rename(Var::Acc, v)
}

fn synced(i: usize) -> Term {
    canon(&eq(proj(Term::Var(Var::Acc1), i), proj(Term::Var(Var::Acc2), i)))
}

/// `x => l`, with `l = False` rendered as a negation.
fn imp(x: &Term, l: &Option<Term>) -> Term {
    match l {
        None => canon(&not(x.clone())),
        Some(l) => canon(&implies(x.clone(), l.clone())),
    }
}

pub fn build_universe_invariant(task: &PipelineTask, dep: &DepInfo) -> Vec<Term> {
    let n = task.arity();
    let phi: Vec<Vec<Term>> = (0..n).map(|i| guards(task, dep, i)).collect();
    let leaves1 = |i: usize| vec![None, Some(synced(i))];
    let leaves2 = |j: usize| {
        vec![
            None,
            Some(synced(j)),
            Some(canon(&equals_init(task, Var::Acc2, j))),
            Some(canon(&differs_from_init(task, Var::Acc2, j))),
        ]
    };
    let u1 = |i: usize| -> Vec<Term> {
        let mut out = Vec::new();
        for g in &phi[i] {
            let g1 = at(g, Var::Acc1);
            for l in leaves1(i) {
                out.push(imp(&g1, &l));
                out.push(imp(&not(g1.clone()), &l));
            }
        }
        out
    };
    let mut out = Vec::new();
    for i in 0..n {
        push_unique(&mut out, synced(i));
        for t in u1(i) {
            push_unique(&mut out, t);
        }
        for g in &phi[i] {
            let g2 = at(g, Var::Acc2);
            let ng2 = not(g2.clone());
            for j in 0..n {
                if dep.dep(i, j) {
                    for l in leaves2(j) {
                        push_unique(&mut out, imp(&g2, &l));
                        push_unique(&mut out, imp(&ng2, &l));
                    }
                }
            }
            for j in 0..n {
                if j != i && dep.dep(j, i) {
                    for l in u1(j) {
                        let l = Some(l);
                        push_unique(&mut out, imp(&g2, &l));
                        push_unique(&mut out, imp(&ng2, &l));
                    }
                }
            }
        }
    }
    out.retain(|t| *t != ff());
    out
}
