//! Typed term IR shared by the analyses, the solver encoder and the interpreter.

use crate::value::{Ty, Value};
use std::collections::BTreeSet;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    /// Accumulator parameter of `f` and the free variable of `P` / residuals.
    Acc,
    /// Row parameter of `f` and the free variable of pre-filters.
    Row,
    /// Original-run state in invariants.
    Acc1,
    /// Optimized-run state in invariants.
    Acc2,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::Acc => "a",
            Var::Row => "r",
            Var::Acc1 => "a1",
            Var::Acc2 => "a2",
        }
    }

    pub fn is_acc(self) -> bool {
        !matches!(self, Var::Row)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Eq,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    /// The operator obtained by swapping operands.
    pub fn flip(self) -> CmpOp {
        match self {
            CmpOp::Eq => CmpOp::Eq,
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Gt => CmpOp::Lt,
            CmpOp::Ge => CmpOp::Le,
        }
    }

    /// Negation over a total order (`None` for equality).
    pub fn negate(self) -> Option<CmpOp> {
        match self {
            CmpOp::Eq => None,
            CmpOp::Lt => Some(CmpOp::Ge),
            CmpOp::Le => Some(CmpOp::Gt),
            CmpOp::Gt => Some(CmpOp::Le),
            CmpOp::Ge => Some(CmpOp::Lt),
        }
    }

    pub fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            CmpOp::Eq => ord == Equal,
            CmpOp::Lt => ord == Less,
            CmpOp::Le => ord != Greater,
            CmpOp::Gt => ord == Greater,
            CmpOp::Ge => ord != Less,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Lit(Value, Ty),
    Var(Var),
    /// Tuple field access.
    Proj(Box<Term>, usize),
    Tuple(Vec<Term>),
    Not(Box<Term>),
    And(Vec<Term>),
    Or(Vec<Term>),
    Implies(Box<Term>, Box<Term>),
    /// Comparisons with an Optional operand are null-false; `Eq` is structural
    /// after injecting the non-optional side.
    Cmp(CmpOp, Box<Term>, Box<Term>),
    Arith(ArithOp, Box<Term>, Box<Term>),
    Ite(Box<Term>, Box<Term>, Box<Term>),
    IsNone(Box<Term>),
    Some(Box<Term>),
    List(Vec<Term>, Ty),
    /// List element access; out of range yields the element type's default.
    Index(Box<Term>, usize),
    /// Suffix slice `e[k:]`.
    Slice(Box<Term>, usize),
    /// Sorted insertion into an ascending list.
    Insert(Box<Term>, Box<Term>),
    /// `f(acc, row)` for the task's accumulator.
    ApplyF(Box<Term>, Box<Term>),
}

/// Types of the free variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TyCtx {
    pub acc: Ty,
    pub row: Ty,
}

impl TyCtx {
    pub fn var(&self, v: Var) -> &Ty {
        match v {
            Var::Row => &self.row,
            _ => &self.acc,
        }
    }
}

pub fn tt() -> Term {
    Term::Lit(Value::Bool(true), Ty::Bool)
}

pub fn ff() -> Term {
    Term::Lit(Value::Bool(false), Ty::Bool)
}

pub fn var(v: Var) -> Term {
    Term::Var(v)
}

pub fn proj(t: Term, i: usize) -> Term {
    Term::Proj(Box::new(t), i)
}

pub fn field(v: Var, i: usize) -> Term {
    proj(Term::Var(v), i)
}

pub fn not(t: Term) -> Term {
    match t {
        Term::Not(inner) => *inner,
        Term::Lit(Value::Bool(b), _) => Term::Lit(Value::Bool(!b), Ty::Bool),
        t => Term::Not(Box::new(t)),
    }
}

pub fn cmp(op: CmpOp, l: Term, r: Term) -> Term {
    Term::Cmp(op, Box::new(l), Box::new(r))
}

pub fn eq(l: Term, r: Term) -> Term {
    cmp(CmpOp::Eq, l, r)
}

pub fn implies(l: Term, r: Term) -> Term {
    Term::Implies(Box::new(l), Box::new(r))
}

pub fn is_none(t: Term) -> Term {
    Term::IsNone(Box::new(t))
}

pub fn ite(c: Term, t: Term, e: Term) -> Term {
    Term::Ite(Box::new(c), Box::new(t), Box::new(e))
}

pub fn lit(v: Value, ty: Ty) -> Term {
    Term::Lit(v, ty)
}

/// Flattening conjunction; the empty conjunction is `True`.
pub fn and_all(ts: impl IntoIterator<Item = Term>) -> Term {
    let mut out = Vec::new();
    for t in ts {
        match t {
            Term::And(inner) => out.extend(inner),
            Term::Lit(Value::Bool(true), _) => {}
            t => out.push(t),
        }
    }
    match out.len() {
        0 => tt(),
        1 => out.pop().unwrap(),
        _ => Term::And(out),
    }
}

/// Flattening disjunction; the empty disjunction is `False`.
pub fn or_all(ts: impl IntoIterator<Item = Term>) -> Term {
    let mut out = Vec::new();
    for t in ts {
        match t {
            Term::Or(inner) => out.extend(inner),
            Term::Lit(Value::Bool(false), _) => {}
            t => out.push(t),
        }
    }
    match out.len() {
        0 => ff(),
        1 => out.pop().unwrap(),
        _ => Term::Or(out),
    }
}

impl Term {
    pub fn as_bool_lit(&self) -> Option<bool> {
        match self {
            Term::Lit(Value::Bool(b), _) => Some(*b),
            _ => None,
        }
    }

    pub fn is_lit(&self) -> bool {
        matches!(self, Term::Lit(..))
    }

    pub fn children(&self) -> Vec<&Term> {
        match self {
            Term::Lit(..) | Term::Var(_) => vec![],
            Term::Proj(t, _)
            | Term::Not(t)
            | Term::IsNone(t)
            | Term::Some(t)
            | Term::Index(t, _)
            | Term::Slice(t, _) => vec![t],
            Term::Tuple(ts) | Term::And(ts) | Term::Or(ts) | Term::List(ts, _) => ts.iter().collect(),
            Term::Implies(a, b)
            | Term::Cmp(_, a, b)
            | Term::Arith(_, a, b)
            | Term::Insert(a, b)
            | Term::ApplyF(a, b) => vec![a, b],
            Term::Ite(c, t, e) => vec![c, t, e],
        }
    }

    /// Rebuild with `g` applied to each direct child.
    pub fn map_children(&self, g: &mut impl FnMut(&Term) -> Term) -> Term {
        let b = |t: Term| Box::new(t);
        match self {
            Term::Lit(..) | Term::Var(_) => self.clone(),
            Term::Proj(t, i) => Term::Proj(b(g(t)), *i),
            Term::Not(t) => Term::Not(b(g(t))),
            Term::IsNone(t) => Term::IsNone(b(g(t))),
            Term::Some(t) => Term::Some(b(g(t))),
            Term::Index(t, i) => Term::Index(b(g(t)), *i),
            Term::Slice(t, i) => Term::Slice(b(g(t)), *i),
            Term::Tuple(ts) => Term::Tuple(ts.iter().map(|t| g(t)).collect()),
            Term::And(ts) => Term::And(ts.iter().map(|t| g(t)).collect()),
            Term::Or(ts) => Term::Or(ts.iter().map(|t| g(t)).collect()),
            Term::List(ts, ty) => Term::List(ts.iter().map(|t| g(t)).collect(), ty.clone()),
            Term::Implies(x, y) => Term::Implies(b(g(x)), b(g(y))),
            Term::Cmp(op, x, y) => Term::Cmp(*op, b(g(x)), b(g(y))),
            Term::Arith(op, x, y) => Term::Arith(*op, b(g(x)), b(g(y))),
            Term::Insert(x, y) => Term::Insert(b(g(x)), b(g(y))),
            Term::ApplyF(x, y) => Term::ApplyF(b(g(x)), b(g(y))),
            Term::Ite(c, t, e) => Term::Ite(b(g(c)), b(g(t)), b(g(e))),
        }
    }

    /// Replace variables per `m`.
    pub fn subst(&self, m: &impl Fn(Var) -> Option<Term>) -> Term {
        match self {
            Term::Var(v) => m(*v).unwrap_or_else(|| self.clone()),
            _ => self.map_children(&mut |c| c.subst(m)),
        }
    }

    pub fn rename(&self, from: Var, to: Var) -> Term {
        self.subst(&|v| (v == from).then_some(Term::Var(to)))
    }

    /// Replace every occurrence of the subterm `pat` by `rep`.
    pub fn replace(&self, pat: &Term, rep: &Term) -> Term {
        if self == pat {
            return rep.clone();
        }
        self.map_children(&mut |c| c.replace(pat, rep))
    }

    pub fn any(&self, pred: &impl Fn(&Term) -> bool) -> bool {
        pred(self) || self.children().into_iter().any(|c| c.any(pred))
    }

    pub fn mentions(&self, v: Var) -> bool {
        self.any(&|t| matches!(t, Term::Var(w) if *w == v))
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.walk(&mut |t| {
            if let Term::Var(v) = t {
                out.insert(*v);
            }
        });
        out
    }

    pub fn walk(&self, visit: &mut impl FnMut(&Term)) {
        visit(self);
        for c in self.children() {
            c.walk(visit);
        }
    }

    /// Component indices of `v` read by this term. A bare use of `v` (not
    /// under a projection) reads every component in `0..arity`.
    pub fn fields_read(&self, v: Var, arity: usize) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.fields_read_into(v, arity, &mut out);
        out
    }

    fn fields_read_into(&self, v: Var, arity: usize, out: &mut BTreeSet<usize>) {
        match self {
            Term::Proj(inner, i) if matches!(**inner, Term::Var(w) if w == v) => {
                out.insert(*i);
            }
            Term::Var(w) if *w == v => out.extend(0..arity),
            _ => {
                for c in self.children() {
                    c.fields_read_into(v, arity, out);
                }
            }
        }
    }

    /// Static type under `ctx`. Assumes the term was produced by the typechecker
    /// or the analyses, so it is well-typed.
    pub fn ty(&self, ctx: &TyCtx) -> Ty {
        match self {
            Term::Lit(_, ty) => ty.clone(),
            Term::Var(v) => ctx.var(*v).clone(),
            Term::Proj(t, i) => match t.ty(ctx) {
                Ty::Tuple(ts) => ts[*i].clone(),
                other => panic!("projection from non-tuple {other}"),
            },
            Term::Tuple(ts) => Ty::Tuple(ts.iter().map(|t| t.ty(ctx)).collect()),
            Term::Not(_)
            | Term::And(_)
            | Term::Or(_)
            | Term::Implies(..)
            | Term::Cmp(..)
            | Term::IsNone(_) => Ty::Bool,
            Term::Arith(_, l, _) => l.ty(ctx),
            Term::Ite(_, t, _) => t.ty(ctx),
            Term::Some(t) => Ty::opt(t.ty(ctx)),
            Term::List(_, elem) => Ty::list(elem.clone()),
            Term::Index(t, _) => match t.ty(ctx) {
                Ty::List(e) => *e,
                other => panic!("index into non-list {other}"),
            },
            Term::Slice(t, _) | Term::Insert(t, _) => t.ty(ctx),
            Term::ApplyF(..) => ctx.acc.clone(),
        }
    }

    /// Number of nodes; used for tie-breaking and caps.
    pub fn size(&self) -> usize {
        1 + self.children().into_iter().map(Term::size).sum::<usize>()
    }
}

// ---------------------------------------------------------------------------
// DSL rendering. Output is valid DSL expression syntax over the variable names
// `a`, `r`, `a1`, `a2`.

const P_COND: u8 = 1;
const P_OR: u8 = 2;
const P_AND: u8 = 3;
const P_NOT: u8 = 4;
const P_CMP: u8 = 5;
const P_ADD: u8 = 6;
const P_MUL: u8 = 7;
const P_POST: u8 = 8;
const P_ATOM: u8 = 9;

fn prec(t: &Term) -> u8 {
    match t {
        Term::Ite(..) => P_COND,
        Term::Or(_) | Term::Implies(..) => P_OR,
        Term::And(_) => P_AND,
        Term::Not(_) => P_NOT,
        Term::Cmp(..) | Term::IsNone(_) => P_CMP,
        Term::Arith(ArithOp::Add | ArithOp::Sub, ..) => P_ADD,
        Term::Arith(ArithOp::Mul | ArithOp::Div, ..) => P_MUL,
        Term::Proj(..) | Term::Index(..) | Term::Slice(..) => P_POST,
        Term::Some(t) => prec(t),
        Term::Lit(Value::Real(r), _) if r < &num_rational::BigRational::from_integer(0.into()) => P_ADD,
        Term::Lit(Value::Int(n), _) if n < &num_bigint::BigInt::from(0) => P_ADD,
        Term::Lit(Value::NegInf, _) => P_ADD,
        _ => P_ATOM,
    }
}

fn wrap(t: &Term, min: u8, out: &mut String) {
    if prec(t) < min {
        out.push('(');
        render(t, out);
        out.push(')');
    } else {
        render(t, out);
    }
}

fn render(t: &Term, out: &mut String) {
    match t {
        Term::Lit(v, _) => out.push_str(&v.to_string()),
        Term::Var(v) => out.push_str(v.name()),
        Term::Proj(x, i) | Term::Index(x, i) => {
            wrap(x, P_POST, out);
            out.push_str(&format!("[{i}]"));
        }
        Term::Slice(x, i) => {
            wrap(x, P_POST, out);
            out.push_str(&format!("[{i}:]"));
        }
        Term::Tuple(ts) => {
            out.push('(');
            for (k, x) in ts.iter().enumerate() {
                if k > 0 {
                    out.push_str(", ");
                }
                wrap(x, P_COND, out);
            }
            if ts.len() == 1 {
                out.push(',');
            }
            out.push(')');
        }
        Term::List(ts, _) => {
            out.push('[');
            for (k, x) in ts.iter().enumerate() {
                if k > 0 {
                    out.push_str(", ");
                }
                wrap(x, P_COND, out);
            }
            out.push(']');
        }
        Term::Not(x) => {
            out.push_str("not ");
            wrap(x, P_NOT, out);
        }
        Term::And(ts) => {
            if ts.is_empty() {
                out.push_str("True");
            }
            for (k, x) in ts.iter().enumerate() {
                if k > 0 {
                    out.push_str(" and ");
                }
                wrap(x, P_NOT, out);
            }
        }
        Term::Or(ts) => {
            if ts.is_empty() {
                out.push_str("False");
            }
            for (k, x) in ts.iter().enumerate() {
                if k > 0 {
                    out.push_str(" or ");
                }
                wrap(x, P_AND, out);
            }
        }
        Term::Implies(a, b) => {
            match &**a {
                Term::Not(x) => wrap(x, P_AND, out),
                a => {
                    out.push_str("not ");
                    wrap(a, P_NOT, out);
                }
            }
            out.push_str(" or ");
            wrap(b, P_AND, out);
        }
        Term::Cmp(op, a, b) => {
            wrap(a, P_ADD, out);
            out.push_str(&format!(" {} ", op.symbol()));
            wrap(b, P_ADD, out);
        }
        Term::IsNone(a) => {
            wrap(a, P_ADD, out);
            out.push_str(" == None");
        }
        Term::Arith(op, a, b) => {
            let (lp, rp) = match op {
                ArithOp::Add | ArithOp::Sub => (P_ADD, P_MUL),
                ArithOp::Mul | ArithOp::Div => (P_MUL, P_POST),
            };
            wrap(a, lp, out);
            out.push_str(&format!(" {} ", op.symbol()));
            wrap(b, rp, out);
        }
        Term::Ite(c, x, y) => {
            wrap(x, P_OR, out);
            out.push_str(" if ");
            wrap(c, P_OR, out);
            out.push_str(" else ");
            wrap(y, P_COND, out);
        }
        Term::Some(x) => render(x, out),
        Term::Insert(l, x) => {
            out.push_str("insert(");
            wrap(l, P_COND, out);
            out.push_str(", ");
            wrap(x, P_COND, out);
            out.push(')');
        }
        Term::ApplyF(a, r) => {
            // Not expressible in the DSL; only appears inside solver queries.
            out.push_str("f(");
            render(a, out);
            out.push_str(", ");
            render(r, out);
            out.push(')');
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        render(self, &mut s);
        f.write_str(&s)
    }
}
