//! Local rewriting for universe atoms: constant folding, `Some` stripping,
//! linear normalization of one-variable comparisons and merging of bounds
//! inside disjunctions.

use crate::exec::interp::{arith, compare};
use crate::logic::canon;
use crate::term::{and_all, ff, not, or_all, tt, ArithOp, CmpOp, Term, TyCtx};
use crate::value::{Ty, Value};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use std::cmp::Ordering;

pub fn simplify(t: &Term, ctx: &TyCtx) -> Term {
    canon(&step(t, ctx))
}

fn is_opt(t: &Term, ctx: &TyCtx) -> bool {
    matches!(t.ty(ctx), Ty::Opt(_))
}

fn strip_some(t: Term) -> Term {
    match t {
        Term::Some(x) => *x,
        Term::Lit(Value::Some(v), Ty::Opt(inner)) => Term::Lit(*v, *inner),
        t => t,
    }
}

fn lit_value(t: &Term) -> Option<&Value> {
    match t {
        Term::Lit(v, _) => Some(v),
        _ => None,
    }
}

fn step(t: &Term, ctx: &TyCtx) -> Term {
    let t = t.map_children(&mut |c| step(c, ctx));
    match t {
        Term::IsNone(x) => match *x {
            Term::Some(_) => ff(),
            Term::Lit(Value::None, _) => tt(),
            Term::Lit(..) => ff(),
            x if !is_opt(&x, ctx) => ff(),
            x => Term::IsNone(Box::new(x)),
        },
        Term::Not(x) => not(*x),
        Term::Cmp(op, l, r) => comparison(op, *l, *r, ctx),
        Term::And(ts) => conjunction(ts),
        Term::Or(ts) => disjunction(ts, ctx),
        Term::Implies(a, b) => match (a.as_bool_lit(), b.as_bool_lit()) {
            (Some(false), _) | (_, Some(true)) => tt(),
            (Some(true), _) => *b,
            (_, Some(false)) => not(*a),
            _ if a == b => tt(),
            _ => Term::Implies(a, b),
        },
        Term::Ite(c, x, y) => match c.as_bool_lit() {
            Some(true) => *x,
            Some(false) => *y,
            None if x == y => *x,
            None => Term::Ite(c, x, y),
        },
        t => t,
    }
}

fn comparison(op: CmpOp, l: Term, r: Term, ctx: &TyCtx) -> Term {
    let (mut l, mut r) = (l, r);
    let sl = strip_some(l.clone());
    let sr = strip_some(r.clone());
    if (sl != l || sr != r) && !is_opt(&sl, ctx) && !is_opt(&sr, ctx) {
        l = sl;
        r = sr;
    }
    if let (Some(a), Some(b)) = (lit_value(&l), lit_value(&r)) {
        return Term::Lit(Value::Bool(compare(op, a, b)), Ty::Bool);
    }
    let opt = is_opt(&l, ctx) || is_opt(&r, ctx);
    if l == r && !opt {
        return Term::Lit(Value::Bool(op.holds(Ordering::Equal)), Ty::Bool);
    }
    if l.is_lit() {
        return linear(op.flip(), r, l);
    }
    linear(op, l, r)
}

/// `x * c op d` becomes `x op d / c` over the reals; `x + c op d` becomes
/// `x op d - c`.
fn linear(op: CmpOp, l: Term, r: Term) -> Term {
    let Some(d) = lit_value(&r).cloned() else {
        return Term::Cmp(op, Box::new(l), Box::new(r));
    };
    let ty = match &r {
        Term::Lit(_, ty) => ty.clone(),
        _ => unreachable!(),
    };
    let split = match &l {
        Term::Arith(aop, x, c) if c.is_lit() => Some((*aop, (**x).clone(), lit_value(c).cloned().unwrap())),
        Term::Arith(aop @ (ArithOp::Add | ArithOp::Mul), c, x) if c.is_lit() => {
            Some((*aop, (**x).clone(), lit_value(c).cloned().unwrap()))
        }
        _ => None,
    };
    let Some((aop, x, c)) = split else {
        return Term::Cmp(op, Box::new(l), Box::new(r));
    };
    if matches!(d, Value::NegInf) || matches!(c, Value::NegInf) {
        return Term::Cmp(op, Box::new(l), Box::new(r));
    }
    let next = match (aop, &c) {
        (ArithOp::Add, _) => Some((op, arith(ArithOp::Sub, d, c))),
        (ArithOp::Sub, _) => Some((op, arith(ArithOp::Add, d, c))),
        (ArithOp::Mul, Value::Real(k)) if !k.is_zero() => {
            let op = if k.is_negative() { op.flip() } else { op };
            Some((op, arith(ArithOp::Div, d, c)))
        }
        (ArithOp::Div, Value::Real(k)) if !k.is_zero() => {
            let op = if k.is_negative() { op.flip() } else { op };
            Some((op, arith(ArithOp::Mul, d, c)))
        }
        _ => None,
    };
    match next {
        Some((op, v)) => linear(op, x, Term::Lit(v, ty)),
        None => Term::Cmp(op, Box::new(l), Box::new(r)),
    }
}

fn conjunction(ts: Vec<Term>) -> Term {
    let mut out: Vec<Term> = Vec::new();
    for t in ts {
        match t.as_bool_lit() {
            Some(true) => {}
            Some(false) => return ff(),
            None => {
                if out.contains(&not(t.clone())) {
                    return ff();
                }
                if !out.contains(&t) {
                    out.push(t);
                }
            }
        }
    }
    and_all(out)
}

fn disjunction(ts: Vec<Term>, ctx: &TyCtx) -> Term {
    let mut flat: Vec<Term> = Vec::new();
    for t in ts {
        match t {
            Term::Or(inner) => flat.extend(inner),
            t => flat.push(t),
        }
    }
    let mut out: Vec<Term> = Vec::new();
    for t in flat {
        match t.as_bool_lit() {
            Some(true) => return tt(),
            Some(false) => {}
            None => {
                if out.contains(&not(t.clone())) {
                    return tt();
                }
                if !out.contains(&t) {
                    out.push(t);
                }
            }
        }
    }
    merge_bounds(out, ctx)
}

/// A literal `x op c` with `x` total and numeric.
fn as_bound(t: &Term, ctx: &TyCtx) -> Option<(Term, CmpOp, Value)> {
    if let Term::Cmp(op, x, c) = t {
        let v = lit_value(c)?;
        if matches!(v, Value::Int(_) | Value::Real(_)) && x.ty(ctx).is_numeric() && !x.is_lit() {
            return Some(((**x).clone(), *op, v.clone()));
        }
    }
    None
}

/// Half-line or point over `x`, with strict integer bounds made non-strict.
#[derive(Clone)]
struct Piece {
    op: CmpOp,
    c: Value,
}

fn normalize(op: CmpOp, c: &Value) -> (CmpOp, Value) {
    match (op, c) {
        (CmpOp::Gt, Value::Int(n)) => (CmpOp::Ge, Value::Int(n + BigInt::one())),
        (CmpOp::Lt, Value::Int(n)) => (CmpOp::Le, Value::Int(n - BigInt::one())),
        _ => (op, c.clone()),
    }
}

fn ord(a: &Value, b: &Value) -> Ordering {
    a.num_cmp(b).expect("numeric bound")
}

/// Whether the set of piece `p` covers the set of piece `q`.
fn covers(p: &Piece, q: &Piece) -> bool {
    let (po, pc) = normalize(p.op, &p.c);
    let (qo, qc) = normalize(q.op, &q.c);
    let o = ord(&pc, &qc);
    match (po, qo) {
        (CmpOp::Ge, CmpOp::Ge | CmpOp::Gt | CmpOp::Eq) => o != Ordering::Greater,
        (CmpOp::Gt, CmpOp::Gt) => o != Ordering::Greater,
        (CmpOp::Gt, CmpOp::Ge | CmpOp::Eq) => o == Ordering::Less,
        (CmpOp::Le, CmpOp::Le | CmpOp::Lt | CmpOp::Eq) => o != Ordering::Less,
        (CmpOp::Lt, CmpOp::Lt) => o != Ordering::Less,
        (CmpOp::Lt, CmpOp::Le | CmpOp::Eq) => o == Ordering::Greater,
        (CmpOp::Eq, CmpOp::Eq) => o == Ordering::Equal,
        _ => false,
    }
}

/// An upward and a downward piece whose union is every value.
fn exhaustive(up: &Piece, down: &Piece, int: bool) -> bool {
    let (uo, uc) = normalize(up.op, &up.c);
    let (d_o, dc) = normalize(down.op, &down.c);
    if int {
        // x >= u or x <= d covers the integers iff d >= u - 1
        if let (Value::Int(u), Value::Int(d)) = (&uc, &dc) {
            return d >= &(u - BigInt::one());
        }
    }
    match ord(&dc, &uc) {
        Ordering::Greater => true,
        Ordering::Equal => uo == CmpOp::Ge || d_o == CmpOp::Le,
        Ordering::Less => false,
    }
}

fn merge_bounds(lits: Vec<Term>, ctx: &TyCtx) -> Term {
    // Group bounds on the same operand, keeping first-appearance order.
    let mut groups: Vec<(Term, Vec<Piece>)> = Vec::new();
    let mut rest: Vec<Term> = Vec::new();
    for t in lits {
        match as_bound(&t, ctx) {
            Some((x, op, c)) => match groups.iter_mut().find(|(y, _)| *y == x) {
                Some((_, ps)) => ps.push(Piece { op, c }),
                None => groups.push((x, vec![Piece { op, c }])),
            },
            None => rest.push(t),
        }
    }
    let mut out = rest;
    for (x, ps) in groups {
        let int = x.ty(ctx) == Ty::Int;
        let mut kept: Vec<Piece> = Vec::new();
        for p in ps {
            if kept.iter().any(|k| covers(k, &p)) {
                continue;
            }
            kept.retain(|k| !covers(&p, k));
            kept.push(p);
        }
        let up = kept.iter().find(|p| matches!(p.op, CmpOp::Ge | CmpOp::Gt));
        let down = kept.iter().find(|p| matches!(p.op, CmpOp::Le | CmpOp::Lt));
        if let (Some(u), Some(d)) = (up, down) {
            if exhaustive(u, d, int) {
                return tt();
            }
        }
        let ty = x.ty(ctx);
        for p in kept {
            out.push(Term::Cmp(p.op, Box::new(x.clone()), Box::new(Term::Lit(p.c, ty.clone()))));
        }
    }
    or_all(out)
}
