//! Translation of types, values and terms to SMT-LIB 2, and decoding of model
//! values back into [`Value`]s.
//!
//! Sorts: `bool`/`int` map to the builtin sorts; `float` maps to `Real`, or to
//! the datatype `XReal = NegInf | Fin(Real)` when the task mentions `-inf`.
//! Strings become the enumerated sort `Label` with one constructor per program
//! constant plus one for every other string. Optionals, tuples and lists are
//! datatypes named by a prefix-free mangling of their type.

use super::sexp::Sexp;
use crate::term::{ArithOp, CmpOp, Term, TyCtx, Var};
use crate::value::{Ty, Value, OTHER_LABEL};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use std::collections::{BTreeSet, HashMap};
use std::fmt::Write;

pub const DEFAULT_LIST_DEPTH: usize = 8;

pub fn var_name(v: Var) -> &'static str {
    match v {
        Var::Acc => "a",
        Var::Row => "r",
        Var::Acc1 => "a1",
        Var::Acc2 => "a2",
    }
}

pub fn mangle(ty: &Ty) -> String {
    match ty {
        Ty::Bool => "B".into(),
        Ty::Int => "I".into(),
        Ty::Float => "R".into(),
        Ty::Str => "S".into(),
        Ty::Opt(t) => format!("O{}", mangle(t)),
        Ty::List(t) => format!("L{}", mangle(t)),
        Ty::Tuple(ts) => {
            let mut s = format!("T{}", ts.len());
            for t in ts {
                s.push_str(&mangle(t));
            }
            s
        }
    }
}

fn int_lit(n: &BigInt) -> String {
    if n.is_negative() {
        format!("(- {})", -n)
    } else {
        n.to_string()
    }
}

fn real_lit(r: &BigRational) -> String {
    let body = |n: &BigInt, d: &BigInt| {
        if d == &BigInt::from(1) {
            format!("{n}.0")
        } else {
            format!("(/ {n}.0 {d}.0)")
        }
    };
    if r.is_negative() {
        format!("(- {})", body(&-r.numer(), r.denom()))
    } else {
        body(r.numer(), r.denom())
    }
}

#[derive(Clone, Debug)]
pub struct Encoder {
    pub ctx: TyCtx,
    pub neg_inf: bool,
    labels: Vec<String>,
    depth: usize,
    /// Compound types in declaration order (children first).
    compound: Vec<Ty>,
    uses_labels: bool,
}

impl Encoder {
    pub fn new(ctx: TyCtx, neg_inf: bool, strings: &BTreeSet<String>, depth: usize) -> Encoder {
        let mut e = Encoder {
            ctx,
            neg_inf,
            labels: strings.iter().cloned().collect(),
            depth,
            compound: Vec::new(),
            uses_labels: !strings.is_empty(),
        };
        let (acc, row) = (e.ctx.acc.clone(), e.ctx.row.clone());
        e.register(&acc);
        e.register(&row);
        e
    }

    fn register(&mut self, ty: &Ty) {
        match ty {
            Ty::Str => self.uses_labels = true,
            Ty::Opt(t) | Ty::List(t) => self.register(t),
            Ty::Tuple(ts) => ts.iter().for_each(|t| self.register(t)),
            _ => {}
        }
        if matches!(ty, Ty::Opt(_) | Ty::List(_) | Ty::Tuple(_)) && !self.compound.contains(ty) {
            self.compound.push(ty.clone());
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn sort(&self, ty: &Ty) -> String {
        match ty {
            Ty::Bool => "Bool".into(),
            Ty::Int => "Int".into(),
            Ty::Float if self.neg_inf => "XReal".into(),
            Ty::Float => "Real".into(),
            Ty::Str => "Label".into(),
            _ => format!("D_{}", mangle(ty)),
        }
    }

    fn label_ctor(&self, s: &str) -> String {
        match self.labels.iter().position(|l| l == s) {
            Some(k) => format!("lab_{k}"),
            None => "lab_other".into(),
        }
    }

    /// Datatype declarations and helper definitions, in order.
    pub fn declarations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.neg_inf {
            out.push("(declare-datatypes ((XReal 0)) (((NegInf) (Fin (fv Real)))))".into());
            out.push(
                "(define-fun xlt ((x XReal) (y XReal)) Bool \
                 (and ((_ is Fin) y) (or ((_ is NegInf) x) (< (fv x) (fv y)))))"
                    .into(),
            );
            out.push(
                "(define-fun xle ((x XReal) (y XReal)) Bool \
                 (or ((_ is NegInf) x) (and ((_ is Fin) y) (<= (fv x) (fv y)))))"
                    .into(),
            );
            for (name, op) in [("xadd", "+"), ("xsub", "-"), ("xmul", "*"), ("xdiv", "/")] {
                out.push(format!(
                    "(define-fun {name} ((x XReal) (y XReal)) XReal \
                     (ite (or ((_ is NegInf) x) ((_ is NegInf) y)) NegInf (Fin ({op} (fv x) (fv y)))))"
                ));
            }
        }
        if self.uses_labels {
            let mut ctors = String::new();
            for k in 0..self.labels.len() {
                write!(ctors, "(lab_{k}) ").unwrap();
            }
            out.push(format!("(declare-datatypes ((Label 0)) (({ctors}(lab_other))))"));
        }
        for ty in &self.compound {
            let m = mangle(ty);
            let s = self.sort(ty);
            match ty {
                Ty::Opt(t) => out.push(format!(
                    "(declare-datatypes (({s} 0)) (((none_{m}) (some_{m} (val_{m} {})))))",
                    self.sort(t)
                )),
                Ty::Tuple(ts) => {
                    let fields: Vec<String> =
                        ts.iter().enumerate().map(|(i, t)| format!("(p{i}_{m} {})", self.sort(t))).collect();
                    out.push(format!("(declare-datatypes (({s} 0)) (((mk_{m} {}))))", fields.join(" ")));
                }
                Ty::List(t) => {
                    let e = self.sort(t);
                    out.push(format!(
                        "(declare-datatypes (({s} 0)) (((nil_{m}) (cons_{m} (hd_{m} {e}) (tl_{m} {s})))))"
                    ));
                    let dflt = self.value(&Value::default_of(t), t);
                    out.push(format!(
                        "(define-fun lhd_{m} ((l {s})) {e} (ite ((_ is nil_{m}) l) {dflt} (hd_{m} l)))"
                    ));
                    out.push(format!(
                        "(define-fun ldrop_{m} ((l {s})) {s} (ite ((_ is nil_{m}) l) nil_{m} (tl_{m} l)))"
                    ));
                    if t.is_numeric() {
                        out.push(format!("(define-fun lins0_{m} ((l {s}) (x {e})) {s} (cons_{m} x l))"));
                        let gt = self.order(CmpOp::Gt, t, &format!("(hd_{m} l)"), "x");
                        for d in 1..=self.depth {
                            out.push(format!(
                                "(define-fun lins{d}_{m} ((l {s}) (x {e})) {s} \
                                 (ite ((_ is nil_{m}) l) (cons_{m} x nil_{m}) \
                                 (ite {gt} (cons_{m} x l) (cons_{m} (hd_{m} l) (lins{}_{m} (tl_{m} l) x)))))",
                                d - 1
                            ));
                        }
                    }
                }
                _ => unreachable!(),
            }
        }
        out
    }

    /// Constraint that `x` of type `ty` holds no `-inf`, when that can fail.
    /// Rows satisfy it: input data never carries the sentinel.
    pub fn finite(&self, x: &str, ty: &Ty) -> Option<String> {
        if !self.neg_inf {
            return None;
        }
        match ty {
            Ty::Float => Some(format!("((_ is Fin) {x})")),
            Ty::Opt(t) => {
                let m = mangle(ty);
                self.finite(&format!("(val_{m} {x})"), t).map(|c| format!("(or ((_ is none_{m}) {x}) {c})"))
            }
            Ty::Tuple(ts) => {
                let m = mangle(ty);
                let cs: Vec<String> =
                    ts.iter().enumerate().filter_map(|(i, t)| self.finite(&format!("(p{i}_{m} {x})"), t)).collect();
                match cs.len() {
                    0 => None,
                    1 => cs.into_iter().next(),
                    _ => Some(format!("(and {})", cs.join(" "))),
                }
            }
            _ => None,
        }
    }

    /// Definition of the accumulator step as the SMT function `f`.
    pub fn define_step(&self, body: &Term) -> String {
        let acc = self.sort(&self.ctx.acc);
        let row = self.sort(&self.ctx.row);
        let b = self.term(body, &|v| var_name(v).to_string());
        format!("(define-fun f ((a {acc}) (r {row})) {acc} {b})")
    }

    pub fn value(&self, v: &Value, ty: &Ty) -> String {
        match (v, ty) {
            (Value::Bool(b), _) => b.to_string(),
            (Value::Int(n), _) => int_lit(n),
            (Value::Real(r), Ty::Float) if self.neg_inf => format!("(Fin {})", real_lit(r)),
            (Value::Real(r), _) => real_lit(r),
            (Value::NegInf, _) => {
                assert!(self.neg_inf, "-inf in a task encoded without the sentinel");
                "NegInf".into()
            }
            (Value::Str(s), _) => self.label_ctor(s),
            (Value::None, _) => format!("none_{}", mangle(ty)),
            (Value::Some(x), Ty::Opt(t)) => format!("(some_{} {})", mangle(ty), self.value(x, t)),
            (Value::Tuple(vs), Ty::Tuple(ts)) => {
                let parts: Vec<String> = vs.iter().zip(ts).map(|(x, t)| self.value(x, t)).collect();
                format!("(mk_{} {})", mangle(ty), parts.join(" "))
            }
            (Value::List(vs), Ty::List(t)) => {
                let m = mangle(ty);
                let mut s = format!("nil_{m}");
                for x in vs.iter().rev() {
                    s = format!("(cons_{m} {} {s})", self.value(x, t));
                }
                s
            }
            _ => panic!("value {v} does not have type {ty}"),
        }
    }

    fn order(&self, op: CmpOp, ty: &Ty, x: &str, y: &str) -> String {
        if *ty == Ty::Float && self.neg_inf {
            return match op {
                CmpOp::Lt => format!("(xlt {x} {y})"),
                CmpOp::Le => format!("(xle {x} {y})"),
                CmpOp::Gt => format!("(xlt {y} {x})"),
                CmpOp::Ge => format!("(xle {y} {x})"),
                CmpOp::Eq => format!("(= {x} {y})"),
            };
        }
        let sym = match op {
            CmpOp::Eq => "=",
            o => o.symbol(),
        };
        format!("({sym} {x} {y})")
    }

    /// Encode a term, naming free variables with `vars`.
    pub fn term(&self, t: &Term, vars: &dyn Fn(Var) -> String) -> String {
        self.enc(t, vars, &HashMap::new())
    }

    /// Encode a boolean formula, binding each distinct `f(..)` application once
    /// with `let`.
    pub fn formula(&self, t: &Term, vars: &dyn Fn(Var) -> String) -> String {
        let mut apps: Vec<Term> = Vec::new();
        collect_apps(t, &mut apps);
        let mut names: HashMap<Term, String> = HashMap::new();
        let mut binds = Vec::new();
        for (k, app) in apps.iter().enumerate() {
            let rhs = self.enc(app, vars, &names);
            let name = format!("fa{k}");
            binds.push((name.clone(), rhs));
            names.insert(app.clone(), name);
        }
        let mut out = self.enc(t, vars, &names);
        for (name, rhs) in binds.into_iter().rev() {
            out = format!("(let (({name} {rhs})) {out})");
        }
        out
    }

    fn enc(&self, t: &Term, vars: &dyn Fn(Var) -> String, names: &HashMap<Term, String>) -> String {
        let e = |x: &Term| self.enc(x, vars, names);
        match t {
            Term::Lit(v, ty) => self.value(v, ty),
            Term::Var(v) => vars(*v),
            Term::Proj(x, i) => format!("(p{i}_{} {})", mangle(&x.ty(&self.ctx)), e(x)),
            Term::Tuple(ts) => {
                let ty = t.ty(&self.ctx);
                let parts: Vec<String> = ts.iter().map(e).collect();
                format!("(mk_{} {})", mangle(&ty), parts.join(" "))
            }
            Term::Not(x) => format!("(not {})", e(x)),
            Term::And(ts) if ts.is_empty() => "true".into(),
            Term::Or(ts) if ts.is_empty() => "false".into(),
            Term::And(ts) => format!("(and {})", ts.iter().map(e).collect::<Vec<_>>().join(" ")),
            Term::Or(ts) => format!("(or {})", ts.iter().map(e).collect::<Vec<_>>().join(" ")),
            Term::Implies(a, b) => format!("(=> {} {})", e(a), e(b)),
            Term::Cmp(op, a, b) => {
                let (ta, tb) = (a.ty(&self.ctx), b.ty(&self.ctx));
                let (oa, ob) = (matches!(ta, Ty::Opt(_)), matches!(tb, Ty::Opt(_)));
                let (sa, sb) = (e(a), e(b));
                if *op == CmpOp::Eq && oa == ob {
                    return format!("(= {sa} {sb})");
                }
                let mut guards = Vec::new();
                let unwrap = |s: String, o: bool, ty: &Ty, guards: &mut Vec<String>| {
                    if o {
                        let m = mangle(ty);
                        guards.push(format!("((_ is some_{m}) {s})"));
                        format!("(val_{m} {s})")
                    } else {
                        s
                    }
                };
                let xa = unwrap(sa, oa, &ta, &mut guards);
                let xb = unwrap(sb, ob, &tb, &mut guards);
                let core = self.order(*op, ta.payload(), &xa, &xb);
                if guards.is_empty() {
                    core
                } else {
                    format!("(and {} {core})", guards.join(" "))
                }
            }
            Term::Arith(op, a, b) => {
                let ty = a.ty(&self.ctx);
                let (sa, sb) = (e(a), e(b));
                if ty == Ty::Float && self.neg_inf {
                    let f = match op {
                        ArithOp::Add => "xadd",
                        ArithOp::Sub => "xsub",
                        ArithOp::Mul => "xmul",
                        ArithOp::Div => "xdiv",
                    };
                    format!("({f} {sa} {sb})")
                } else {
                    format!("({} {sa} {sb})", op.symbol())
                }
            }
            Term::Ite(c, x, y) => format!("(ite {} {} {})", e(c), e(x), e(y)),
            Term::IsNone(x) => format!("((_ is none_{}) {})", mangle(&x.ty(&self.ctx)), e(x)),
            Term::Some(x) => format!("(some_{} {})", mangle(&Ty::opt(x.ty(&self.ctx))), e(x)),
            Term::List(ts, elem) => {
                let m = mangle(&Ty::list(elem.clone()));
                let mut s = format!("nil_{m}");
                for x in ts.iter().rev() {
                    s = format!("(cons_{m} {} {s})", e(x));
                }
                s
            }
            Term::Index(x, k) => {
                let m = mangle(&x.ty(&self.ctx));
                let mut s = e(x);
                for _ in 0..*k {
                    s = format!("(ldrop_{m} {s})");
                }
                format!("(lhd_{m} {s})")
            }
            Term::Slice(x, k) => {
                let m = mangle(&x.ty(&self.ctx));
                let mut s = e(x);
                for _ in 0..*k {
                    s = format!("(ldrop_{m} {s})");
                }
                s
            }
            Term::Insert(l, x) => {
                let m = mangle(&l.ty(&self.ctx));
                format!("(lins{}_{m} {} {})", self.depth, e(l), e(x))
            }
            Term::ApplyF(a, r) => match names.get(t) {
                Some(n) => n.clone(),
                None => format!("(f {} {})", e(a), e(r)),
            },
        }
    }

    /// Decode a model value printed by the solver.
    pub fn decode(&self, s: &Sexp, ty: &Ty) -> Result<Value, String> {
        if s.head() == Some("as") {
            return self.decode(&s.list().unwrap()[1], ty);
        }
        let bad = || format!("cannot read {s} as {ty}");
        match ty {
            Ty::Bool => match s.atom() {
                Some("true") => Ok(Value::Bool(true)),
                Some("false") => Ok(Value::Bool(false)),
                _ => Err(bad()),
            },
            Ty::Int => parse_int(s).map(Value::Int).ok_or_else(bad),
            Ty::Float if self.neg_inf => match (s.atom(), s.head()) {
                (Some("NegInf"), _) => Ok(Value::NegInf),
                (_, Some("Fin")) => parse_real(&s.list().unwrap()[1]).map(Value::Real).ok_or_else(bad),
                _ => Err(bad()),
            },
            Ty::Float => parse_real(s).map(Value::Real).ok_or_else(bad),
            Ty::Str => {
                let a = s.atom().ok_or_else(bad)?;
                if a == "lab_other" {
                    return Ok(Value::Str(OTHER_LABEL.into()));
                }
                let k: usize = a.strip_prefix("lab_").and_then(|k| k.parse().ok()).ok_or_else(bad)?;
                self.labels.get(k).map(|l| Value::Str(l.clone())).ok_or_else(bad)
            }
            Ty::Opt(t) => {
                if s.atom().is_some() {
                    return Ok(Value::None);
                }
                let xs = s.list().ok_or_else(bad)?;
                if xs.len() != 2 {
                    return Err(bad());
                }
                Ok(Value::some(self.decode(&xs[1], t)?))
            }
            Ty::Tuple(ts) => {
                let xs = s.list().ok_or_else(bad)?;
                if xs.len() != ts.len() + 1 {
                    return Err(bad());
                }
                Ok(Value::Tuple(xs[1..].iter().zip(ts).map(|(x, t)| self.decode(x, t)).collect::<Result<_, _>>()?))
            }
            Ty::List(t) => {
                let mut out = Vec::new();
                let mut cur = s;
                loop {
                    if cur.head() == Some("as") {
                        cur = &cur.list().unwrap()[1];
                    }
                    match cur.list() {
                        None => return Ok(Value::List(out)),
                        Some(xs) if xs.len() == 3 => {
                            out.push(self.decode(&xs[1], t)?);
                            cur = &xs[2];
                        }
                        Some(_) => return Err(bad()),
                    }
                }
            }
        }
    }
}

fn collect_apps(t: &Term, out: &mut Vec<Term>) {
    for c in t.children() {
        collect_apps(c, out);
    }
    if matches!(t, Term::ApplyF(..)) && !out.contains(t) {
        out.push(t.clone());
    }
}

fn parse_int(s: &Sexp) -> Option<BigInt> {
    match s {
        Sexp::Atom(a) => a.parse().ok(),
        Sexp::List(xs) if xs.len() == 2 && xs[0].atom() == Some("-") => parse_int(&xs[1]).map(|n| -n),
        _ => None,
    }
}

fn parse_real(s: &Sexp) -> Option<BigRational> {
    match s {
        Sexp::Atom(a) => {
            let (whole, frac) = a.split_once('.').unwrap_or((a, ""));
            let digits = format!("{whole}{frac}");
            let n: BigInt = digits.parse().ok()?;
            let d = BigInt::from(10).pow(frac.len() as u32);
            Some(BigRational::new(n, d))
        }
        Sexp::List(xs) if xs.len() == 2 && xs[0].atom() == Some("-") => parse_real(&xs[1]).map(|r| -r),
        Sexp::List(xs) if xs.len() == 3 && xs[0].atom() == Some("/") => {
            let d = parse_real(&xs[2])?;
            if d.is_zero() {
                return None;
            }
            Some(parse_real(&xs[1])? / d)
        }
        _ => None,
    }
}
