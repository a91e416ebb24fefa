//! Source printer for the AST. Output re-parses to the same tree.

use super::ast::*;
use crate::value::fmt_rational;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;

const P_COND: u8 = 1;
const P_OR: u8 = 2;
const P_AND: u8 = 3;
const P_NOT: u8 = 4;
const P_CMP: u8 = 5;
const P_ADD: u8 = 6;
const P_MUL: u8 = 7;
const P_UNARY: u8 = 8;
const P_POST: u8 = 9;
const P_ATOM: u8 = 10;

pub fn program(p: &Program) -> String {
    let mut out = String::new();
    for s in &p.stmts {
        match s {
            Stmt::Assign { name, expr, .. } => {
                out.push_str(&format!("{name} = {}\n", expr_top(expr)));
            }
            Stmt::Typed { name, types, expr, .. } => {
                out.push_str(&format!("{name} : ({}) = {}\n", type_list(types), expr_top(expr)));
            }
        }
    }
    out
}

pub fn type_list(ts: &[TypeAst]) -> String {
    ts.iter().map(|t| format!("{},", ty(t))).collect::<Vec<_>>().join(" ")
}

pub fn ty(t: &TypeAst) -> String {
    match t {
        TypeAst::Bool => "bool".into(),
        TypeAst::Int => "int".into(),
        TypeAst::Float => "float".into(),
        TypeAst::Str => "str".into(),
        TypeAst::List(e) => format!("List[{}]", ty(e)),
        TypeAst::Optional(e) => format!("Optional[{}]", ty(e)),
    }
}

/// Expression in a position that extends to the end of the enclosing
/// construct (statement right-hand side, lambda body, last case body).
pub fn expr_top(e: &Expr) -> String {
    let mut s = String::new();
    render(e, P_COND, true, &mut s);
    s
}

fn prec(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Cond { .. } | ExprKind::Match(..) => P_COND,
        ExprKind::Binary(op, ..) => match op {
            BinOp::Or => P_OR,
            BinOp::And => P_AND,
            BinOp::Add | BinOp::Sub => P_ADD,
            BinOp::Mul | BinOp::Div => P_MUL,
            _ => P_CMP,
        },
        ExprKind::Not(_) => P_NOT,
        ExprKind::NegInf => P_UNARY,
        ExprKind::Int(n) if n.is_negative() => P_UNARY,
        ExprKind::Float(r) if r.is_negative() => P_UNARY,
        ExprKind::Index(..) | ExprKind::Slice(..) => P_POST,
        _ => P_ATOM,
    }
}

/// `tail` is true when nothing follows the expression inside its enclosing
/// construct; a `match` elsewhere must be parenthesized because its last case
/// body would otherwise swallow the following tokens.
fn render(e: &Expr, min: u8, tail: bool, out: &mut String) {
    let needs_parens = prec(e) < min || (matches!(e.kind, ExprKind::Match(..)) && !tail);
    if needs_parens {
        out.push('(');
        render_bare(e, true, out);
        out.push(')');
    } else {
        render_bare(e, tail, out);
    }
}

fn int(n: &BigInt) -> String {
    n.to_string()
}

fn float(r: &BigRational) -> String {
    fmt_rational(r)
}

fn items(es: &[Expr], out: &mut String) {
    for (k, x) in es.iter().enumerate() {
        if k > 0 {
            out.push_str(", ");
        }
        render(x, P_COND, true, out);
    }
}

fn render_bare(e: &Expr, tail: bool, out: &mut String) {
    match &e.kind {
        ExprKind::Bool(b) => out.push_str(if *b { "True" } else { "False" }),
        ExprKind::Int(n) => out.push_str(&int(n)),
        ExprKind::Float(r) => out.push_str(&float(r)),
        ExprKind::NegInf => out.push_str("-inf"),
        ExprKind::Str(s) => out.push_str(&format!("{s:?}")),
        ExprKind::Ident(s) => out.push_str(s),
        ExprKind::None => out.push_str("None"),
        ExprKind::Binary(op, l, r) => {
            let p = prec(e);
            let (lp, rp) = if op.is_comparison() { (P_ADD, P_ADD) } else { (p, p + 1) };
            render(l, lp, false, out);
            out.push_str(&format!(" {} ", op.symbol()));
            render(r, rp, tail, out);
        }
        ExprKind::Not(x) => {
            out.push_str("not ");
            render(x, P_NOT, tail, out);
        }
        ExprKind::Types(ts) => out.push_str(&format!("({})", type_list(ts))),
        ExprKind::Tuple(es) => {
            out.push('(');
            items(es, out);
            if es.len() == 1 {
                out.push(',');
            }
            out.push(')');
        }
        ExprKind::List(es) => {
            out.push('[');
            items(es, out);
            out.push(']');
        }
        ExprKind::Index(x, k) => {
            render(x, P_POST, false, out);
            out.push_str(&format!("[{k}]"));
        }
        ExprKind::Slice(x, k) => {
            render(x, P_POST, false, out);
            out.push_str(&format!("[{k}:]"));
        }
        ExprKind::Insert(l, x) => {
            out.push_str("insert(");
            items(&[(**l).clone(), (**x).clone()], out);
            out.push(')');
        }
        ExprKind::Cond { then, cond, els } => {
            render(then, P_OR, false, out);
            out.push_str(" if ");
            render(cond, P_OR, false, out);
            out.push_str(" else ");
            render(els, P_COND, tail, out);
        }
        ExprKind::Match(s, cases) => {
            out.push_str("match ");
            render(s, P_COND, false, out);
            out.push(':');
            for (k, c) in cases.iter().enumerate() {
                out.push_str(" case ");
                render(&c.pattern, P_UNARY, false, out);
                out.push_str(": ");
                render(&c.body, P_COND, k + 1 == cases.len() && tail, out);
            }
        }
        ExprKind::Fold(x, i, l) => {
            out.push_str("fold(");
            items(&[(**x).clone(), (**i).clone()], out);
            out.push_str(", ");
            lambda(l, out);
            out.push(')');
        }
        ExprKind::Filter(x, l) => {
            out.push_str("filter(");
            render(x, P_COND, true, out);
            out.push_str(", ");
            lambda(l, out);
            out.push(')');
        }
    }
}

fn lambda(l: &Lambda, out: &mut String) {
    out.push_str(if l.fix { "fix" } else { "lambda" });
    if !l.params.is_empty() {
        out.push(' ');
        out.push_str(&l.params.join(", "));
    }
    out.push_str(": ");
    render(&l.body, P_COND, true, out);
}
