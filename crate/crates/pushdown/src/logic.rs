//! Boolean normal forms over terms: negation pushing, capped CNF and the
//! canonical form used to deduplicate atoms.

use crate::term::{and_all, not, or_all, CmpOp, Term, TyCtx};
use crate::value::{Ty, Value};

fn is_opt(t: &Term, ctx: &TyCtx) -> bool {
    matches!(t.ty(ctx), Ty::Opt(_))
}

/// Negate a non-connective literal, flipping order comparisons when neither
/// operand is Optional (null-false comparisons have no complement operator).
pub fn negate_atom(t: &Term, ctx: &TyCtx) -> Term {
    match t {
        Term::Cmp(op, a, b) if !is_opt(a, ctx) && !is_opt(b, ctx) => match op.negate() {
            Some(n) => Term::Cmp(n, a.clone(), b.clone()),
            None => not(t.clone()),
        },
        _ => not(t.clone()),
    }
}

/// Negation normal form: only `And`, `Or` and literals remain at the top.
pub fn nnf(t: &Term, ctx: &TyCtx) -> Term {
    nnf_pol(t, true, ctx)
}

fn nnf_pol(t: &Term, pos: bool, ctx: &TyCtx) -> Term {
    match t {
        Term::Not(x) => nnf_pol(x, !pos, ctx),
        Term::And(ts) if pos => and_all(ts.iter().map(|x| nnf_pol(x, true, ctx))),
        Term::And(ts) => or_all(ts.iter().map(|x| nnf_pol(x, false, ctx))),
        Term::Or(ts) if pos => or_all(ts.iter().map(|x| nnf_pol(x, true, ctx))),
        Term::Or(ts) => and_all(ts.iter().map(|x| nnf_pol(x, false, ctx))),
        Term::Implies(a, b) => {
            let alt = Term::Or(vec![not((**a).clone()), (**b).clone()]);
            nnf_pol(&alt, pos, ctx)
        }
        Term::Ite(c, x, y) if t.ty(ctx) == Ty::Bool => {
            let alt = Term::And(vec![
                Term::Or(vec![not((**c).clone()), (**x).clone()]),
                Term::Or(vec![(**c).clone(), (**y).clone()]),
            ]);
            nnf_pol(&alt, pos, ctx)
        }
        Term::Lit(Value::Bool(b), _) => Term::Lit(Value::Bool(*b == pos), Ty::Bool),
        _ if pos => t.clone(),
        _ => negate_atom(t, ctx),
    }
}

/// Conjunctive normal form as a clause list. Each clause is a disjunction of
/// literals in canonical form; tautological clauses are dropped. Fails with the
/// clause count once it exceeds `cap`.
pub fn cnf(t: &Term, ctx: &TyCtx, cap: usize) -> Result<Vec<Term>, usize> {
    let clauses = cnf_clauses(&nnf(t, ctx), cap)?;
    let mut out: Vec<Term> = Vec::new();
    for lits in clauses {
        if lits.iter().any(|l| l.as_bool_lit() == Some(true)) {
            continue;
        }
        let lits: Vec<Term> = lits.into_iter().filter(|l| l.as_bool_lit() != Some(false)).collect();
        let c = canon(&or_all(lits));
        if !out.contains(&c) {
            out.push(c);
        }
    }
    Ok(out)
}

fn cnf_clauses(t: &Term, cap: usize) -> Result<Vec<Vec<Term>>, usize> {
    match t {
        Term::And(ts) => {
            let mut out = Vec::new();
            for x in ts {
                out.extend(cnf_clauses(x, cap)?);
                if out.len() > cap {
                    return Err(out.len());
                }
            }
            Ok(out)
        }
        Term::Or(ts) => {
            let mut acc: Vec<Vec<Term>> = vec![vec![]];
            for x in ts {
                let cs = cnf_clauses(x, cap)?;
                let mut next = Vec::with_capacity(acc.len() * cs.len());
                for a in &acc {
                    for c in &cs {
                        let mut merged = a.clone();
                        merged.extend(c.iter().cloned());
                        next.push(merged);
                    }
                }
                if next.len() > cap {
                    return Err(next.len());
                }
                acc = next;
            }
            Ok(acc)
        }
        Term::Lit(Value::Bool(true), _) => Ok(vec![]),
        _ => Ok(vec![vec![t.clone()]]),
    }
}

/// Canonical form: constants on the right of comparisons, equality operands
/// ordered, commutative connectives sorted and deduplicated.
pub fn canon(t: &Term) -> Term {
    let t = t.map_children(&mut |c| canon(c));
    match t {
        Term::Cmp(op, a, b) => {
            if a.is_lit() && !b.is_lit() {
                Term::Cmp(op.flip(), b, a)
            } else if op == CmpOp::Eq && !b.is_lit() && b < a {
                Term::Cmp(op, b, a)
            } else {
                Term::Cmp(op, a, b)
            }
        }
        Term::And(ts) => and_all(sorted(ts, true)),
        Term::Or(ts) => or_all(sorted(ts, false)),
        Term::Not(x) => not(*x),
        t => t,
    }
}

fn sorted(ts: Vec<Term>, conj: bool) -> Vec<Term> {
    let mut ts: Vec<Term> = ts
        .into_iter()
        .flat_map(|t| match t {
            Term::And(inner) if conj => inner,
            Term::Or(inner) if !conj => inner,
            t => vec![t],
        })
        .collect();
    ts.sort();
    ts.dedup();
    ts
}

/// Literals of a clause.
pub fn disjuncts(t: &Term) -> Vec<Term> {
    match t {
        Term::Or(ts) => ts.clone(),
        t => vec![t.clone()],
    }
}

/// Conjuncts of a term.
pub fn conjuncts(t: &Term) -> Vec<Term> {
    match t {
        Term::And(ts) => ts.clone(),
        Term::Lit(Value::Bool(true), _) => vec![],
        t => vec![t.clone()],
    }
}
