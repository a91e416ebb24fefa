use super::ast::*;
use super::{parse_expr, DslError, ErrorKind};
use crate::exec::interp::eval_closed;
use crate::logic;
use crate::term::{self, and_all, ite, not, or_all, ArithOp, CmpOp, Term, TyCtx, Var};
use crate::value::{Ty, Value};
use num_traits::Zero;
use std::collections::{BTreeMap, BTreeSet};

/// Maximum number of CNF clauses accepted for a post-filter.
pub const CNF_CAP: usize = 64;

/// A typed fold UDF with its post-filter.
#[derive(Clone, Debug)]
pub struct PipelineTask {
    pub name: String,
    pub program: Program,
    pub consts: BTreeMap<String, (Value, Ty)>,
    /// Name of the input dataframe.
    pub input: String,
    pub row_ty: Ty,
    pub acc_ty: Ty,
    pub init: Value,
    /// The fold lambda's body over `a` and `r`.
    pub udf: Term,
    /// The step actually folded: `udf`, guarded by `pre` when present.
    pub body: Term,
    /// A filter the program already applies before the fold.
    pub pre: Option<Term>,
    /// Post-filter over `a` (`True` when absent).
    pub post: Term,
    /// CNF clauses of `post`.
    pub post_clauses: Vec<Term>,
    /// String constants of the program; the enumerated label sort.
    pub strings: BTreeSet<String>,
    pub uses_neg_inf: bool,
}

impl PipelineTask {
    pub fn ctx(&self) -> TyCtx {
        TyCtx { acc: self.acc_ty.clone(), row: self.row_ty.clone() }
    }

    pub fn arity(&self) -> usize {
        self.acc_ty.tuple_fields().map_or(0, |f| f.len())
    }

    pub fn row_arity(&self) -> usize {
        self.row_ty.tuple_fields().map_or(0, |f| f.len())
    }

    pub fn acc_field_ty(&self, i: usize) -> &Ty {
        &self.acc_ty.tuple_fields().expect("tuple accumulator")[i]
    }

    pub fn row_field_ty(&self, i: usize) -> &Ty {
        &self.row_ty.tuple_fields().expect("tuple row")[i]
    }

    pub fn init_term(&self) -> Term {
        Term::Lit(self.init.clone(), self.acc_ty.clone())
    }

    pub fn init_field(&self, i: usize) -> Term {
        Term::Lit(self.init.field(i).expect("initializer field").clone(), self.acc_field_ty(i).clone())
    }

    pub fn with_name(mut self, name: impl Into<String>) -> PipelineTask {
        self.name = name.into();
        self
    }
}

#[derive(Clone)]
enum Binding {
    Const(Value, Ty),
    Frame,
    /// The fold result or a post-filtered view of it.
    Folded,
}

struct Checker {
    globals: BTreeMap<String, Binding>,
    consts: BTreeMap<String, (Value, Ty)>,
    strings: BTreeSet<String>,
    uses_neg_inf: bool,
    /// Restrict string literals to this set (atoms parsed against a task).
    known_strings: Option<BTreeSet<String>>,
}

type Scope = Vec<(String, Term, Ty)>;

fn mismatch(span: Span, expected: &Ty, found: &Ty) -> DslError {
    DslError::ty(span, format!("type mismatch: expected {expected}, found {found}"))
}

fn none_ambiguity(span: Span) -> DslError {
    DslError::ty(span, "cannot infer the type of `None` here; annotate the binding")
}

fn is_none_ambiguity(e: &DslError) -> bool {
    e.kind == ErrorKind::Type && e.message.starts_with("cannot infer the type of `None`")
}

fn lower_type(t: &TypeAst, span: Span) -> Result<Ty, DslError> {
    Ok(match t {
        TypeAst::Bool => Ty::Bool,
        TypeAst::Int => Ty::Int,
        TypeAst::Float => Ty::Float,
        TypeAst::Str => Ty::Str,
        TypeAst::List(e) => Ty::list(lower_type(e, span)?),
        TypeAst::Optional(e) => {
            let inner = lower_type(e, span)?;
            if matches!(inner, Ty::Opt(_)) {
                return Err(DslError::ty(span, "nested Optional types are not supported"));
            }
            Ty::opt(inner)
        }
    })
}

fn lower_types(ts: &[TypeAst], span: Span) -> Result<Ty, DslError> {
    Ok(Ty::Tuple(ts.iter().map(|t| lower_type(t, span)).collect::<Result<_, _>>()?))
}

/// Reinterpret an integer literal as a float when the context asks for one.
fn int_lit_as_float(t: &Term) -> Option<Term> {
    match t {
        Term::Lit(Value::Int(n), Ty::Int) => {
            Some(Term::Lit(Value::Real(num_rational::BigRational::from_integer(n.clone())), Ty::Float))
        }
        _ => None,
    }
}

fn coerce(t: Term, ty: Ty, expected: Option<&Ty>, span: Span) -> Result<(Term, Ty), DslError> {
    let Some(exp) = expected else {
        return Ok((t, ty));
    };
    if &ty == exp {
        return Ok((t, ty));
    }
    if *exp == Ty::Float && ty == Ty::Int {
        if let Some(f) = int_lit_as_float(&t) {
            return Ok((f, Ty::Float));
        }
    }
    if let Ty::Opt(p) = exp {
        if !matches!(ty, Ty::Opt(_)) {
            let (inner, _) = coerce(t, ty.clone(), Some(p), span).map_err(|_| mismatch(span, exp, &ty))?;
            return Ok((Term::Some(Box::new(inner)), exp.clone()));
        }
    }
    if let (Term::Tuple(items), Ty::Tuple(tys), Ty::Tuple(etys)) = (&t, &ty, exp) {
        if tys.len() == etys.len() {
            let mut out = Vec::new();
            for ((x, xt), et) in items.iter().zip(tys).zip(etys) {
                out.push(coerce(x.clone(), xt.clone(), Some(et), span)?.0);
            }
            return Ok((Term::Tuple(out), exp.clone()));
        }
    }
    Err(mismatch(span, exp, &ty))
}

/// Common type of two branch types, if one exists.
fn unify(a: &Ty, b: &Ty) -> Option<Ty> {
    if a == b {
        return Some(a.clone());
    }
    match (a, b) {
        (Ty::Opt(p), q) | (q, Ty::Opt(p)) if **p == *q => Some(a.clone().max(b.clone()).into_opt()),
        (Ty::Int, Ty::Float) | (Ty::Float, Ty::Int) => Some(Ty::Float),
        (Ty::Tuple(xs), Ty::Tuple(ys)) if xs.len() == ys.len() => {
            Some(Ty::Tuple(xs.iter().zip(ys).map(|(x, y)| unify(x, y)).collect::<Option<_>>()?))
        }
        _ => None,
    }
}

trait IntoOpt {
    fn into_opt(self) -> Ty;
}

impl IntoOpt for Ty {
    fn into_opt(self) -> Ty {
        match self {
            Ty::Opt(_) => self,
            t => Ty::opt(t),
        }
    }
}

fn fold_closed(t: Term) -> Term {
    let closed = t.free_vars().is_empty() && !t.any(&|x| matches!(x, Term::ApplyF(..)));
    match &t {
        Term::Arith(_, a, b) if closed && a.is_lit() && b.is_lit() => {
            let v = eval_closed(&t);
            let ty = match &t {
                Term::Arith(_, a, _) => match &**a {
                    Term::Lit(_, ty) => ty.clone(),
                    _ => unreachable!(),
                },
                _ => unreachable!(),
            };
            Term::Lit(v, ty)
        }
        _ => t,
    }
}

impl Checker {
    fn new() -> Checker {
        Checker {
            globals: BTreeMap::new(),
            consts: BTreeMap::new(),
            strings: BTreeSet::new(),
            uses_neg_inf: false,
            known_strings: None,
        }
    }

    fn check(&mut self, e: &Expr, expected: Option<&Ty>, scope: &Scope) -> Result<(Term, Ty), DslError> {
        let (t, ty) = self.infer(e, expected, scope)?;
        coerce(t, ty, expected, e.span)
    }

    fn check_bool(&mut self, e: &Expr, scope: &Scope) -> Result<Term, DslError> {
        Ok(self.check(e, Some(&Ty::Bool), scope)?.0)
    }

    fn lookup(&self, name: &str, span: Span, scope: &Scope) -> Result<(Term, Ty), DslError> {
        if let Some((_, t, ty)) = scope.iter().rev().find(|(n, _, _)| n == name) {
            return Ok((t.clone(), ty.clone()));
        }
        match self.globals.get(name) {
            Some(Binding::Const(v, ty)) => Ok((Term::Lit(v.clone(), ty.clone()), ty.clone())),
            Some(Binding::Frame) | Some(Binding::Folded) => {
                Err(DslError::ty(span, format!("`{name}` is a dataframe, not a value")))
            }
            None => Err(DslError::ty(span, format!("unbound identifier `{name}`"))),
        }
    }

    fn infer(&mut self, e: &Expr, expected: Option<&Ty>, scope: &Scope) -> Result<(Term, Ty), DslError> {
        let span = e.span;
        let wants_float = matches!(expected.map(Ty::payload), Some(Ty::Float));
        Ok(match &e.kind {
            ExprKind::Bool(b) => (term::lit(Value::Bool(*b), Ty::Bool), Ty::Bool),
            ExprKind::Int(n) if wants_float => (
                term::lit(Value::Real(num_rational::BigRational::from_integer(n.clone())), Ty::Float),
                Ty::Float,
            ),
            ExprKind::Int(n) => (term::lit(Value::Int(n.clone()), Ty::Int), Ty::Int),
            ExprKind::Float(r) => (term::lit(Value::Real(r.clone()), Ty::Float), Ty::Float),
            ExprKind::NegInf => {
                self.uses_neg_inf = true;
                (term::lit(Value::NegInf, Ty::Float), Ty::Float)
            }
            ExprKind::Str(s) => {
                if let Some(known) = &self.known_strings {
                    if !known.contains(s) {
                        return Err(DslError::ty(span, format!("string {s:?} is not a label of this task")));
                    }
                }
                self.strings.insert(s.clone());
                (term::lit(Value::Str(s.clone()), Ty::Str), Ty::Str)
            }
            ExprKind::Ident(name) => self.lookup(name, span, scope)?,
            ExprKind::None => match expected {
                Some(t @ Ty::Opt(_)) => (term::lit(Value::None, t.clone()), t.clone()),
                Some(t) => return Err(DslError::ty(span, format!("`None` where {t} is expected"))),
                None => return Err(none_ambiguity(span)),
            },
            ExprKind::Binary(op, l, r) => self.binary(*op, l, r, expected, span, scope)?,
            ExprKind::Not(x) => (not(self.check_bool(x, scope)?), Ty::Bool),
            ExprKind::Types(_) => {
                return Err(DslError::ty(span, "a type list is only allowed as a dataframe schema"));
            }
            ExprKind::Tuple(es) => {
                if es.is_empty() {
                    return Err(DslError::ty(span, "tuples must have at least one component"));
                }
                let etys = match expected {
                    Some(Ty::Tuple(ts)) if ts.len() == es.len() => Some(ts.clone()),
                    _ => None,
                };
                let mut items = Vec::new();
                let mut tys = Vec::new();
                for (k, x) in es.iter().enumerate() {
                    let (t, ty) = self.check(x, etys.as_ref().map(|ts| &ts[k]), scope)?;
                    items.push(t);
                    tys.push(ty);
                }
                (Term::Tuple(items), Ty::Tuple(tys))
            }
            ExprKind::List(es) => {
                let elem = match expected {
                    Some(Ty::List(t)) => (**t).clone(),
                    _ => match es.first() {
                        Some(x) => self.check(x, None, scope)?.1,
                        None => return Err(DslError::ty(span, "cannot infer the element type of `[]`")),
                    },
                };
                let mut items = Vec::new();
                for x in es {
                    items.push(self.check(x, Some(&elem), scope)?.0);
                }
                (Term::List(items, elem.clone()), Ty::list(elem))
            }
            ExprKind::Index(x, k) => {
                if *k < 0 {
                    return Err(DslError::ty(span, "negative indices are not supported"));
                }
                let k = *k as usize;
                let (t, ty) = self.check(x, None, scope)?;
                match ty {
                    Ty::Tuple(ts) if k < ts.len() => (term::proj(t, k), ts[k].clone()),
                    Ty::Tuple(ts) => {
                        return Err(DslError::ty(span, format!("index {k} out of range for a {}-tuple", ts.len())))
                    }
                    Ty::List(el) => (Term::Index(Box::new(t), k), *el),
                    other => return Err(DslError::ty(span, format!("cannot index a value of type {other}"))),
                }
            }
            ExprKind::Slice(x, k) => {
                if *k < 0 {
                    return Err(DslError::ty(span, "negative slice bounds are not supported"));
                }
                let (t, ty) = self.check(x, expected.filter(|t| matches!(t, Ty::List(_))), scope)?;
                match ty {
                    Ty::List(_) => (Term::Slice(Box::new(t), *k as usize), ty),
                    other => return Err(DslError::ty(span, format!("cannot slice a value of type {other}"))),
                }
            }
            ExprKind::Insert(l, x) => {
                let (lt, lty) = self.check(l, expected.filter(|t| matches!(t, Ty::List(_))), scope)?;
                let Ty::List(el) = &lty else {
                    return Err(DslError::ty(l.span, format!("insert needs a list, found {lty}")));
                };
                if !el.is_numeric() {
                    return Err(DslError::ty(l.span, format!("insert needs numeric elements, found {el}")));
                }
                let (xt, _) = self.check(x, Some(el), scope)?;
                (Term::Insert(Box::new(lt), Box::new(xt)), lty)
            }
            ExprKind::Cond { then, cond, els } => {
                let c = self.check_bool(cond, scope)?;
                let branches = [(&**then, scope.clone()), (&**els, scope.clone())];
                let (mut ts, ty) = self.branches(&branches, expected, span)?;
                let el = ts.pop().unwrap();
                let th = ts.pop().unwrap();
                let t = match c.as_bool_lit() {
                    Some(true) => th,
                    Some(false) => el,
                    None => ite(c, th, el),
                };
                (t, ty)
            }
            ExprKind::Match(s, cases) => self.match_expr(s, cases, expected, span, scope)?,
            ExprKind::Fold(..) | ExprKind::Filter(..) => {
                return Err(DslError::new(
                    ErrorKind::Fold,
                    span,
                    "fold and filter may only appear as the right-hand side of a statement",
                ));
            }
        })
    }

    /// Type several alternatives to a common type.
    fn branches(
        &mut self,
        alts: &[(&Expr, Scope)],
        expected: Option<&Ty>,
        span: Span,
    ) -> Result<(Vec<Term>, Ty), DslError> {
        if let Some(exp) = expected {
            let mut out = Vec::new();
            for (e, sc) in alts {
                out.push(self.check(e, Some(exp), sc)?.0);
            }
            return Ok((out, exp.clone()));
        }
        let mut target: Option<Ty> = None;
        for (e, sc) in alts {
            match self.check(e, None, sc) {
                Ok((_, ty)) => {
                    target = Some(match target {
                        None => ty,
                        Some(t) => unify(&t, &ty).ok_or_else(|| mismatch(e.span, &t, &ty))?,
                    })
                }
                Err(err) if is_none_ambiguity(&err) => {}
                Err(err) => return Err(err),
            }
        }
        let target = target.ok_or_else(|| none_ambiguity(span))?;
        let target = if alts.iter().any(|(e, _)| matches!(e.kind, ExprKind::None)) {
            target.into_opt()
        } else {
            target
        };
        let mut out = Vec::new();
        for (e, sc) in alts {
            out.push(self.check(e, Some(&target), sc)?.0);
        }
        Ok((out, target))
    }

    fn binary(
        &mut self,
        op: BinOp,
        l: &Expr,
        r: &Expr,
        expected: Option<&Ty>,
        span: Span,
        scope: &Scope,
    ) -> Result<(Term, Ty), DslError> {
        match op {
            BinOp::And => {
                let (a, b) = (self.check_bool(l, scope)?, self.check_bool(r, scope)?);
                return Ok((and_all([a, b]), Ty::Bool));
            }
            BinOp::Or => {
                let (a, b) = (self.check_bool(l, scope)?, self.check_bool(r, scope)?);
                return Ok((or_all([a, b]), Ty::Bool));
            }
            _ => {}
        }
        if op == BinOp::Eq {
            let other = match (&l.kind, &r.kind) {
                (ExprKind::None, ExprKind::None) => return Ok((term::tt(), Ty::Bool)),
                (ExprKind::None, _) => Some(r),
                (_, ExprKind::None) => Some(l),
                _ => None,
            };
            if let Some(x) = other {
                let (t, ty) = self.check(x, None, scope)?;
                if !matches!(ty, Ty::Opt(_)) {
                    return Err(DslError::ty(x.span, format!("comparison with None needs an Optional, found {ty}")));
                }
                return Ok((term::is_none(t), Ty::Bool));
            }
        }
        let arith = matches!(op, BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div);
        let hint = if arith { expected.filter(|t| t.is_numeric()).cloned() } else { None };
        let (mut lt, mut lty) = self.check(l, hint.as_ref(), scope)?;
        let (mut rt, mut rty) = self.check(r, Some(lty.payload()).filter(|t| t.is_numeric()), scope)
            .or_else(|_| self.check(r, None, scope))?;
        if lty.payload() == &Ty::Int && rty.payload() == &Ty::Float {
            if let Some(f) = int_lit_as_float(&lt) {
                lt = f;
                lty = Ty::Float;
            }
        }
        if rty.payload() == &Ty::Int && lty.payload() == &Ty::Float {
            if let Some(f) = int_lit_as_float(&rt) {
                rt = f;
                rty = Ty::Float;
            }
        }
        if arith {
            if matches!(lty, Ty::Opt(_)) || matches!(rty, Ty::Opt(_)) {
                return Err(DslError::ty(span, "arithmetic on an Optional value; match on it first"));
            }
            if !lty.is_numeric() || lty != rty {
                return Err(DslError::ty(
                    span,
                    format!("operands of `{}` must be numbers of one type, found {lty} and {rty}", op.symbol()),
                ));
            }
            let aop = match op {
                BinOp::Add => ArithOp::Add,
                BinOp::Sub => ArithOp::Sub,
                BinOp::Mul => ArithOp::Mul,
                _ => ArithOp::Div,
            };
            let rt = fold_closed(rt);
            if aop == ArithOp::Div {
                let ok = lty == Ty::Float && matches!(&rt, Term::Lit(Value::Real(x), _) if !x.is_zero());
                if !ok {
                    return Err(DslError::ty(r.span, "divisor must be a nonzero float constant"));
                }
            }
            let t = fold_closed(Term::Arith(aop, Box::new(lt), Box::new(rt)));
            return Ok((t, lty));
        }
        let cop = match op {
            BinOp::Eq => CmpOp::Eq,
            BinOp::Ge => CmpOp::Ge,
            BinOp::Gt => CmpOp::Gt,
            BinOp::Le => CmpOp::Le,
            _ => CmpOp::Lt,
        };
        let (lp, rp) = (lty.payload(), rty.payload());
        if lp != rp {
            return Err(DslError::ty(span, format!("cannot compare {lty} with {rty}")));
        }
        if cop != CmpOp::Eq && !lp.is_numeric() {
            return Err(DslError::ty(span, format!("ordering comparison on {lp}")));
        }
        Ok((term::cmp(cop, lt, rt), Ty::Bool))
    }

    fn match_expr(
        &mut self,
        s: &Expr,
        cases: &[Case],
        expected: Option<&Ty>,
        span: Span,
        scope: &Scope,
    ) -> Result<(Term, Ty), DslError> {
        let (st, sty) = self.check(s, None, scope)?;
        let mut conds: Vec<Option<Term>> = Vec::new();
        let mut alts: Vec<(&Expr, Scope)> = Vec::new();
        let mut catch_all = false;
        let mut bools = BTreeSet::new();
        let mut none_seen = false;
        for c in cases {
            if catch_all {
                return Err(DslError::new(ErrorKind::Match, c.pattern.span, "unreachable case after a catch-all"));
            }
            let mut sc = scope.clone();
            let cond = match &c.pattern.kind {
                ExprKind::None => {
                    if !matches!(sty, Ty::Opt(_)) {
                        return Err(DslError::ty(c.pattern.span, format!("`case None` on a non-Optional {sty}")));
                    }
                    none_seen = true;
                    Some(term::is_none(st.clone()))
                }
                ExprKind::Ident(v) => {
                    catch_all = true;
                    sc.push((v.clone(), st.clone(), sty.clone()));
                    None
                }
                _ => {
                    let (pt, _) = self.check(&c.pattern, Some(sty.payload()), scope)?;
                    if let Some(b) = pt.as_bool_lit() {
                        bools.insert(b);
                    }
                    Some(term::eq(st.clone(), pt))
                }
            };
            conds.push(cond);
            alts.push((&c.body, sc));
        }
        let exhaustive = catch_all || (sty == Ty::Bool && bools.len() == 2) || (none_seen && bools.len() == 2);
        if !exhaustive {
            return Err(DslError::new(ErrorKind::Match, span, "non-exhaustive match; add a catch-all case"));
        }
        let (bodies, ty) = self.branches(&alts, expected, span)?;
        let mut it = conds.into_iter().zip(bodies).rev();
        let (_, mut acc) = it.next().expect("at least one case");
        for (cond, body) in it {
            acc = ite(cond.expect("only the last case may be a catch-all"), body, acc);
        }
        Ok((acc, ty))
    }

    fn closed_value(&mut self, e: &Expr, declared: Option<&Ty>) -> Result<(Value, Ty), DslError> {
        let (t, ty) = self.check(e, declared, &Vec::new())?;
        Ok((eval_closed(&t), ty))
    }
}

struct FoldInfo {
    name: String,
    acc_ty: Ty,
    init: Value,
    udf: Term,
    span: Span,
}

/// Lower a parsed program to a task.
pub fn typecheck(program: &Program) -> Result<PipelineTask, DslError> {
    let mut ck = Checker::new();
    let mut folds = 0usize;
    for s in &program.stmts {
        s.expr().walk(&mut |e| {
            if matches!(e.kind, ExprKind::Fold(..)) {
                folds += 1;
            }
            if matches!(&e.kind, ExprKind::Fold(_, _, l) | ExprKind::Filter(_, l) if l.fix) {
                folds += 1000;
            }
        });
    }
    if folds >= 1000 {
        let span = program
            .stmts
            .iter()
            .find_map(|s| {
                let mut sp = None;
                s.expr().walk(&mut |e| {
                    if let ExprKind::Fold(_, _, l) | ExprKind::Filter(_, l) = &e.kind {
                        if l.fix && sp.is_none() {
                            sp = Some(l.span);
                        }
                    }
                });
                sp
            })
            .unwrap_or_default();
        return Err(DslError::new(ErrorKind::Fix, span, "`fix` lambdas are not supported"));
    }
    let last_span = program.stmts.last().map(|s| s.span()).unwrap_or_default();
    if folds == 0 {
        return Err(DslError::new(ErrorKind::Fold, last_span, "program has no fold"));
    }
    if folds > 1 {
        return Err(DslError::new(ErrorKind::Fold, last_span, "program has more than one fold"));
    }

    let mut frame: Option<(String, Ty)> = None;
    let mut pre: Vec<Term> = Vec::new();
    let mut fold: Option<FoldInfo> = None;
    let mut post: Vec<Term> = Vec::new();

    for s in &program.stmts {
        let (name, e, span) = (s.name().to_string(), s.expr(), s.span());
        if ck.globals.contains_key(&name) {
            return Err(DslError::ty(span, format!("`{name}` is already defined")));
        }
        let declared = match s {
            Stmt::Typed { types, .. } => Some(lower_types(types, span)?),
            Stmt::Assign { .. } => None,
        };
        let binding = match &e.kind {
            ExprKind::Types(ts) => {
                if declared.is_some() {
                    return Err(DslError::ty(span, "a schema cannot carry a type annotation"));
                }
                if frame.is_some() {
                    return Err(DslError::ty(span, "only one input dataframe is supported"));
                }
                frame = Some((name.clone(), lower_types(ts, e.span)?));
                Binding::Frame
            }
            ExprKind::Fold(x, i, lam) => {
                let (fname, row_ty) = frame.clone().ok_or_else(|| DslError::ty(span, "fold before any schema"))?;
                if !matches!(&x.kind, ExprKind::Ident(n) if matches!(ck.globals.get(n), Some(Binding::Frame))) {
                    return Err(DslError::new(ErrorKind::Fold, x.span, format!("fold must consume `{fname}`")));
                }
                if lam.params.len() != 2 {
                    return Err(DslError::ty(lam.span, "the fold lambda takes an accumulator and a row"));
                }
                let acc_decl = match (&declared, &i.kind) {
                    (Some(t), _) => Some(t.clone()),
                    (None, ExprKind::Ident(n)) => match ck.globals.get(n) {
                        Some(Binding::Const(_, t)) => Some(t.clone()),
                        _ => None,
                    },
                    _ => None,
                };
                let (init, acc_ty) = ck.closed_value(i, acc_decl.as_ref())?;
                if !matches!(acc_ty, Ty::Tuple(_)) {
                    return Err(DslError::ty(i.span, format!("the initializer must be a tuple, found {acc_ty}")));
                }
                let scope = vec![
                    (lam.params[0].clone(), term::var(Var::Acc), acc_ty.clone()),
                    (lam.params[1].clone(), term::var(Var::Row), row_ty.clone()),
                ];
                let (udf, _) = ck.check(&lam.body, Some(&acc_ty), &scope)?;
                fold = Some(FoldInfo { name: name.clone(), acc_ty, init, udf, span });
                Binding::Folded
            }
            ExprKind::Filter(x, lam) => {
                let src = match &x.kind {
                    ExprKind::Ident(n) => ck.globals.get(n).cloned(),
                    _ => None,
                };
                if lam.params.len() != 1 {
                    return Err(DslError::ty(lam.span, "a filter lambda takes exactly one parameter"));
                }
                match src {
                    Some(Binding::Frame) if fold.is_none() => {
                        let row_ty = frame.as_ref().unwrap().1.clone();
                        let scope = vec![(lam.params[0].clone(), term::var(Var::Row), row_ty)];
                        pre.push(ck.check_bool(&lam.body, &scope)?);
                        Binding::Frame
                    }
                    Some(Binding::Folded) => {
                        let acc_ty = fold.as_ref().unwrap().acc_ty.clone();
                        let scope = vec![(lam.params[0].clone(), term::var(Var::Acc), acc_ty)];
                        let (p, pty) = ck.check(&lam.body, None, &scope)?;
                        if pty != Ty::Bool {
                            return Err(DslError::ty(lam.body.span, format!("the post-filter must be bool, found {pty}")));
                        }
                        post.push(p);
                        Binding::Folded
                    }
                    _ => {
                        return Err(DslError::new(
                            ErrorKind::Fold,
                            x.span,
                            "filter must consume the input dataframe before the fold or the fold result",
                        ))
                    }
                }
            }
            _ => {
                let (v, ty) = ck.closed_value(e, declared.as_ref())?;
                ck.consts.insert(name.clone(), (v.clone(), ty.clone()));
                Binding::Const(v, ty)
            }
        };
        ck.globals.insert(name, binding);
    }

    let (input, row_ty) = frame.ok_or_else(|| DslError::ty(last_span, "program declares no input schema"))?;
    let fold = fold.expect("fold counted above");
    let pre = if pre.is_empty() { None } else { Some(and_all(pre)) };
    let body = match &pre {
        Some(q) => ite(q.clone(), fold.udf.clone(), term::var(Var::Acc)),
        None => fold.udf.clone(),
    };
    let post = and_all(post);
    let ctx = TyCtx { acc: fold.acc_ty.clone(), row: row_ty.clone() };
    let post_clauses = logic::cnf(&post, &ctx, CNF_CAP).map_err(|n| {
        DslError::new(ErrorKind::Cnf, fold.span, format!("post-filter CNF has {n} clauses; the cap is {CNF_CAP}"))
    })?;
    let uses_neg_inf = ck.uses_neg_inf || contains_neg_inf(&fold.init);
    let _ = fold.name;
    Ok(PipelineTask {
        name: "task".into(),
        program: program.clone(),
        consts: ck.consts,
        input,
        row_ty,
        acc_ty: fold.acc_ty,
        init: fold.init,
        udf: fold.udf,
        body,
        pre,
        post,
        post_clauses,
        strings: ck.strings,
        uses_neg_inf,
    })
}

fn contains_neg_inf(v: &Value) -> bool {
    match v {
        Value::NegInf => true,
        Value::Some(x) => contains_neg_inf(x),
        Value::Tuple(vs) | Value::List(vs) => vs.iter().any(contains_neg_inf),
        _ => false,
    }
}

/// Parse a boolean expression over `r`, `a`, `a1`, `a2` and the task's
/// constants, as printed by the tools.
pub fn parse_atom(task: &PipelineTask, src: &str) -> Result<Term, DslError> {
    let e = parse_expr(src)?;
    let mut ck = Checker::new();
    ck.known_strings = Some(task.strings.clone());
    for (k, (v, ty)) in &task.consts {
        ck.globals.insert(k.clone(), Binding::Const(v.clone(), ty.clone()));
    }
    let scope = vec![
        ("r".to_string(), term::var(Var::Row), task.row_ty.clone()),
        ("a".to_string(), term::var(Var::Acc), task.acc_ty.clone()),
        ("a1".to_string(), term::var(Var::Acc1), task.acc_ty.clone()),
        ("a2".to_string(), term::var(Var::Acc2), task.acc_ty.clone()),
    ];
    let t = ck.check_bool(&e, &scope)?;
    Ok(logic::canon(&t))
}
