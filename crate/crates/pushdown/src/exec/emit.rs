//! The optimized pipeline as DSL source: pre-filter, fold, residual check.

use crate::dsl::ast::{Expr, ExprKind, Lambda, Program, Stmt};
use crate::dsl::{parse_expr, pretty, PipelineTask};
use crate::term::{and_all, Term};

fn lambda(param: &str, body: &[Term]) -> Lambda {
    let src = and_all(body.iter().cloned()).to_string();
    let body = parse_expr(&src).unwrap_or_else(|e| panic!("printed term `{src}` does not parse: {e:?}"));
    Lambda { fix: false, params: vec![param.into()], body: Box::new(body), span: Default::default() }
}

fn ident(e: &Expr) -> Option<&str> {
    match &e.kind {
        ExprKind::Ident(n) => Some(n),
        _ => None,
    }
}

/// Insert `filter(x, lambda r: Q)` before the fold and replace the
/// post-filter by the residual, dropping it when the residual is empty.
pub fn emit_rewritten(task: &PipelineTask, q: &[Term], residual: &[Term]) -> String {
    let names: Vec<String> = task.program.stmts.iter().map(|s| s.name().to_string()).collect();
    let mut pre_name = format!("{}_pre", task.input);
    while names.contains(&pre_name) {
        pre_name.push('_');
    }
    let mut fold_name = None;
    let mut out = Program { stmts: Vec::new() };
    for s in &task.program.stmts {
        let mut s = s.clone();
        let (name, expr) = match &mut s {
            Stmt::Assign { name, expr, .. } | Stmt::Typed { name, expr, .. } => (name.clone(), expr),
        };
        match &mut expr.kind {
            ExprKind::Fold(x, _, _) if !q.is_empty() => {
                let filter = ExprKind::Filter(Box::new((**x).clone()), lambda("r", q));
                out.stmts.push(Stmt::Assign { name: pre_name.clone(), expr: Expr::synth(filter), span: Default::default() });
                **x = Expr::synth(ExprKind::Ident(pre_name.clone()));
                fold_name = Some(name);
            }
            ExprKind::Fold(..) => fold_name = Some(name),
            ExprKind::Filter(x, l) if fold_name.is_some() && ident(x) == fold_name.as_deref() => {
                if residual.is_empty() {
                    continue;
                }
                *l = lambda("a", residual);
            }
            _ => {}
        }
        out.stmts.push(s);
    }
    pretty::program(&out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse, parse_atom, typecheck};
    use crate::exec::{both_sides, eval_fold, lift_eval};
    use crate::fixtures::load;
    use crate::value::Value;

    fn atoms(t: &PipelineTask, src: &[&str]) -> Vec<Term> {
        src.iter().map(|s| parse_atom(t, s).unwrap()).collect()
    }

    #[test]
    fn top2_rewrite_has_prefilter_and_weakened_check() {
        let t = load("top2");
        let q = atoms(&t, &["r[0] > 90.0"]);
        let res = atoms(&t, &["not a[1] == -inf"]);
        let src = emit_rewritten(&t, &q, &res);
        assert!(src.contains("filter(x, lambda r: r[0] > 90.0)"), "{src}");
        assert!(src.contains("lambda a: not a[1] == -inf"), "{src}");
        let t2 = typecheck(&parse(&src).unwrap()).unwrap();
        for rows in [vec![95, 80, 92], vec![91, 99, 10], vec![50], vec![]] {
            let rows: Vec<Value> = rows.into_iter().map(|x| Value::Tuple(vec![Value::real(x, 1)])).collect();
            let (orig, _) = both_sides(&t, &q, &res, &rows);
            assert_eq!(lift_eval(&t2, &t2.post_clauses, &eval_fold(&t2, &rows)), orig, "{rows:?}");
        }
    }

    #[test]
    fn exact_rewrite_drops_post_filter() {
        let t = load("discount");
        let src = emit_rewritten(&t, &atoms(&t, &["r[0] >= 1000.0"]), &[]);
        assert!(!src.contains("lambda a: a[0] >= 900.0"), "{src}");
        typecheck(&parse(&src).unwrap()).unwrap();
    }

    #[test]
    fn trivial_rewrite_is_the_input() {
        let t = load("top2");
        let src = emit_rewritten(&t, &[], &t.post_clauses);
        let again = typecheck(&parse(&src).unwrap()).unwrap();
        assert_eq!(again.body, t.body);
        assert_eq!(again.post_clauses, t.post_clauses);
        assert_eq!(src, pretty::program(&t.program));
    }
}
