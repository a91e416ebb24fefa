//! Ground evaluation of terms. Semantics mirror the solver encoding exactly:
//! reals are exact rationals, `-inf` absorbs arithmetic, comparisons with an
//! Optional operand are false on `None`, list reads out of range yield the
//! element type's default.

use crate::term::{ArithOp, CmpOp, Term, TyCtx, Var};
use crate::value::{Ty, Value};
use std::cmp::Ordering;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Env {
    vals: [Option<Value>; 4],
}

fn slot(v: Var) -> usize {
    match v {
        Var::Acc => 0,
        Var::Row => 1,
        Var::Acc1 => 2,
        Var::Acc2 => 3,
    }
}

impl Env {
    pub fn new() -> Env {
        Env::default()
    }

    pub fn with(mut self, v: Var, val: Value) -> Env {
        self.vals[slot(v)] = Some(val);
        self
    }

    pub fn set(&mut self, v: Var, val: Value) {
        self.vals[slot(v)] = Some(val);
    }

    pub fn get(&self, v: Var) -> Option<&Value> {
        self.vals[slot(v)].as_ref()
    }
}

impl std::fmt::Display for Env {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut first = true;
        for v in [Var::Acc, Var::Row, Var::Acc1, Var::Acc2] {
            if let Some(x) = self.get(v) {
                write!(f, "{}{} = {x}", if first { "" } else { ", " }, v.name())?;
                first = false;
            }
        }
        Ok(())
    }
}

/// Evaluation context: the accumulator body for `ApplyF` and the variable
/// types for default values.
#[derive(Clone, Copy)]
pub struct Interp<'a> {
    pub body: Option<&'a Term>,
    pub tys: &'a TyCtx,
}

impl<'a> Interp<'a> {
    pub fn new(body: Option<&'a Term>, tys: &'a TyCtx) -> Interp<'a> {
        Interp { body, tys }
    }

    pub fn eval_bool(&self, t: &Term, env: &Env) -> bool {
        match self.eval(t, env) {
            Value::Bool(b) => b,
            other => panic!("expected a boolean from `{t}`, got {other}"),
        }
    }

    pub fn eval(&self, t: &Term, env: &Env) -> Value {
        match t {
            Term::Lit(v, _) => v.clone(),
            Term::Var(v) => env.get(*v).cloned().unwrap_or_else(|| panic!("unbound variable {}", v.name())),
            Term::Proj(x, i) => match self.eval(x, env) {
                Value::Tuple(mut vs) if *i < vs.len() => vs.swap_remove(*i),
                other => panic!("bad projection [{i}] on {other}"),
            },
            Term::Tuple(ts) => Value::Tuple(ts.iter().map(|x| self.eval(x, env)).collect()),
            Term::Not(x) => Value::Bool(!self.eval_bool(x, env)),
            Term::And(ts) => Value::Bool(ts.iter().all(|x| self.eval_bool(x, env))),
            Term::Or(ts) => Value::Bool(ts.iter().any(|x| self.eval_bool(x, env))),
            Term::Implies(a, b) => Value::Bool(!self.eval_bool(a, env) || self.eval_bool(b, env)),
            Term::Cmp(op, a, b) => Value::Bool(compare(*op, &self.eval(a, env), &self.eval(b, env))),
            Term::Arith(op, a, b) => arith(*op, self.eval(a, env), self.eval(b, env)),
            Term::Ite(c, x, y) => {
                if self.eval_bool(c, env) {
                    self.eval(x, env)
                } else {
                    self.eval(y, env)
                }
            }
            Term::IsNone(x) => Value::Bool(matches!(self.eval(x, env), Value::None)),
            Term::Some(x) => Value::some(self.eval(x, env)),
            Term::List(ts, _) => Value::List(ts.iter().map(|x| self.eval(x, env)).collect()),
            Term::Index(x, i) => match self.eval(x, env) {
                Value::List(mut vs) if *i < vs.len() => vs.swap_remove(*i),
                Value::List(_) => Value::default_of(&t.ty(self.tys)),
                other => panic!("index into non-list {other}"),
            },
            Term::Slice(x, i) => match self.eval(x, env) {
                Value::List(vs) => Value::List(vs.into_iter().skip(*i).collect()),
                other => panic!("slice of non-list {other}"),
            },
            Term::Insert(l, x) => match self.eval(l, env) {
                Value::List(vs) => Value::List(sorted_insert(vs, self.eval(x, env))),
                other => panic!("insert into non-list {other}"),
            },
            Term::ApplyF(a, r) => {
                let body = self.body.expect("ApplyF evaluated without an accumulator body");
                let inner = Env::new().with(Var::Acc, self.eval(a, env)).with(Var::Row, self.eval(r, env));
                self.eval(body, &inner)
            }
        }
    }
}

/// Insert `x` after every element `<= x`, keeping an ascending list ascending.
pub fn sorted_insert(mut vs: Vec<Value>, x: Value) -> Vec<Value> {
    let pos = vs
        .iter()
        .position(|v| v.num_cmp(&x).map(|o| o == Ordering::Greater).unwrap_or(false))
        .unwrap_or(vs.len());
    vs.insert(pos, x);
    vs
}

fn strip(v: &Value) -> Option<&Value> {
    match v {
        Value::None => None,
        Value::Some(x) => Some(x),
        x => Some(x),
    }
}

fn structural_eq(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Tuple(xs), Value::Tuple(ys)) | (Value::List(xs), Value::List(ys)) => {
            xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| structural_eq(x, y))
        }
        (Value::Some(x), Value::Some(y)) => structural_eq(x, y),
        _ => match a.num_cmp(b) {
            Some(o) => o == Ordering::Equal,
            None => a == b,
        },
    }
}

pub fn compare(op: CmpOp, a: &Value, b: &Value) -> bool {
    let a_opt = matches!(a, Value::None | Value::Some(_));
    let b_opt = matches!(b, Value::None | Value::Some(_));
    if op == CmpOp::Eq && a_opt == b_opt {
        return structural_eq(a, b);
    }
    let (Some(x), Some(y)) = (strip(a), strip(b)) else {
        return false;
    };
    if op == CmpOp::Eq {
        return structural_eq(x, y);
    }
    match x.num_cmp(y) {
        Some(o) => op.holds(o),
        None => panic!("ordering comparison on non-numeric values {x} and {y}"),
    }
}

pub fn arith(op: ArithOp, a: Value, b: Value) -> Value {
    match (a, b) {
        (Value::NegInf, _) | (_, Value::NegInf) => Value::NegInf,
        (Value::Int(x), Value::Int(y)) => Value::Int(match op {
            ArithOp::Add => x + y,
            ArithOp::Sub => x - y,
            ArithOp::Mul => x * y,
            ArithOp::Div => panic!("integer division is rejected by the typechecker"),
        }),
        (Value::Real(x), Value::Real(y)) => Value::Real(match op {
            ArithOp::Add => x + y,
            ArithOp::Sub => x - y,
            ArithOp::Mul => x * y,
            ArithOp::Div => x / y,
        }),
        (x, y) => panic!("arithmetic on {x} and {y}"),
    }
}

/// Evaluate a closed term (no free variables, no `ApplyF`).
pub fn eval_closed(t: &Term) -> Value {
    let ctx = TyCtx { acc: Ty::Tuple(vec![]), row: Ty::Tuple(vec![]) };
    Interp::new(None, &ctx).eval(t, &Env::new())
}
