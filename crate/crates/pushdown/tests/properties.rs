//! Property tests over the bundled fixtures and their known pushdowns.

use proptest::prelude::*;
use pushdown::dsl::parse_atom;
use pushdown::exec::gen::ValueGen;
use pushdown::exec::interp::{Env, Interp};
use pushdown::exec::{both_sides, emit_rewritten, eval_fold, filter_rows, lift_eval, LiftResult};
use pushdown::fixtures::{load, ALL};
use pushdown::smt::{Session, SolverConfig};
use pushdown::term::{eq, lit, Term, Var};
use pushdown::{parse, typecheck, PipelineTask, Value};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Pushdowns for the solved fixtures, as the synthesizer reports them.
const KNOWN: &[(&str, &[&str], &[&str])] = &[
    ("top2", &["r[0] > 90.0"], &["not a[1] == -inf"]),
    ("discount", &["r[0] >= 1000.0"], &[]),
    (
        "event_agg",
        &[r#"r[0] == "price" or r[0] == "time" or r[1] <= 19900730 or r[1] >= 19950730"#],
        &[
            "not a[0] == 0",
            "a[1] > 5",
            "a[1] <= 18",
            "a[2] == 19900730 or a[2] <= 19800730",
            "a[3] == 19950730 or a[3] > 20010730",
        ],
    ),
    (
        "return_price",
        &["r[1] <= 38 or r[1] >= 53"],
        &[
            "a[0] > 5.0",
            "a[0] <= 100.0",
            "a[1] <= 38 or a[1] == None",
            "a[2] >= 10.0",
            "a[2] <= 100.0",
            "a[3] == 53 or a[3] > 55 or a[3] == None",
        ],
    ),
];

fn atoms(t: &PipelineTask, xs: &[&str]) -> Vec<Term> {
    xs.iter().map(|x| parse_atom(t, x).unwrap()).collect()
}

fn rows(t: &PipelineTask, consts: &[Term], seed: u64, n: usize) -> Vec<Value> {
    let mut g = ValueGen::with_terms(t, consts, ChaCha8Rng::seed_from_u64(seed));
    (0..n).map(|_| g.gen_row(&t.row_ty)).collect()
}

fn known(k: usize) -> (PipelineTask, Vec<Term>, Vec<Term>) {
    let (name, q, res) = KNOWN[k];
    let t = load(name);
    let (q, res) = (atoms(&t, q), atoms(&t, res));
    (t, q, res)
}

/// Top two of the scores when both exceed 90, computed directly.
fn top2_reference(scores: &[i64]) -> Option<(i64, i64)> {
    let mut s = scores.to_vec();
    s.sort_unstable_by(|a, b| b.cmp(a));
    match s.as_slice() {
        [x, y, ..] if *y > 90 => Some((*x, *y)),
        _ => None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn filtering_is_idempotent(k in 0..KNOWN.len(), seed: u64, n in 0usize..12) {
        let (t, q, _) = known(k);
        let xs = rows(&t, &q, seed, n);
        let once = filter_rows(&t, &q, &xs);
        prop_assert_eq!(filter_rows(&t, &q, &once), once.clone());
        prop_assert!(once.len() <= xs.len());
    }

    #[test]
    fn conjunctive_filters_compose(k in 0..KNOWN.len(), seed: u64, n in 0usize..12) {
        let (t, q, _) = known(k);
        let xs = rows(&t, &q, seed, n);
        let extra = match t.name.as_str() {
            "top2" | "discount" => vec![parse_atom(&t, "r[0] < 1500.0").unwrap()],
            _ => vec![parse_atom(&t, "r[1] > 20000000").unwrap()],
        };
        let both: Vec<Term> = q.iter().chain(&extra).cloned().collect();
        prop_assert_eq!(filter_rows(&t, &both, &xs), filter_rows(&t, &extra, &filter_rows(&t, &q, &xs)));
    }

    #[test]
    fn known_pushdowns_preserve_the_outcome(k in 0..KNOWN.len(), seed: u64, n in 0usize..9) {
        let (t, q, res) = known(k);
        let consts: Vec<Term> = q.iter().chain(&res).cloned().collect();
        let xs = rows(&t, &consts, seed, n);
        let (orig, opt) = both_sides(&t, &q, &res, &xs);
        prop_assert_eq!(orig, opt);
    }

    #[test]
    fn top2_matches_the_direct_computation(scores in prop::collection::vec(80i64..100, 0..9)) {
        let t = load("top2");
        let xs: Vec<Value> = scores.iter().map(|&s| Value::Tuple(vec![Value::real(s, 1)])).collect();
        let expect = match top2_reference(&scores) {
            Some((a, b)) => LiftResult::Defined(Value::Tuple(vec![Value::real(a, 1), Value::real(b, 1)])),
            None => LiftResult::Bottom,
        };
        prop_assert_eq!(lift_eval(&t, &t.post_clauses, &eval_fold(&t, &xs)), expect.clone());
        let q = atoms(&t, &["r[0] > 90.0"]);
        let res = atoms(&t, &["not a[1] == -inf"]);
        prop_assert_eq!(both_sides(&t, &q, &res, &xs).1, expect);
    }

    #[test]
    fn rewritten_program_agrees_with_the_original(k in 0..KNOWN.len(), seed: u64, n in 0usize..9) {
        let (t, q, res) = known(k);
        let src = emit_rewritten(&t, &q, &res);
        let t2 = typecheck(&parse(&src).unwrap()).unwrap();
        let consts: Vec<Term> = q.iter().chain(&res).cloned().collect();
        let xs = rows(&t, &consts, seed, n);
        let orig = lift_eval(&t, &t.post_clauses, &eval_fold(&t, &xs));
        prop_assert_eq!(lift_eval(&t2, &t2.post_clauses, &eval_fold(&t2, &xs)), orig);
    }
}

/// The step function and the post-filter evaluate identically in the
/// interpreter and, on literal arguments, in the solver.
#[test]
fn interpreter_and_solver_agree() {
    for (name, _) in ALL {
        let t = load(name);
        let mut s = Session::start(&SolverConfig::default(), &t).unwrap();
        let mut g = ValueGen::new(&t, ChaCha8Rng::seed_from_u64(11));
        let ctx = t.ctx();
        let mut acc = t.init.clone();
        for _ in 0..12 {
            let r = g.gen_row(&t.row_ty);
            let next = Interp::new(Some(&t.body), &ctx).eval(&t.body, &Env::new().with(Var::Acc, acc.clone()).with(Var::Row, r.clone()));
            let call = Term::ApplyF(Box::new(lit(acc.clone(), t.acc_ty.clone())), Box::new(lit(r.clone(), t.row_ty.clone())));
            let claim = eq(call, lit(next.clone(), t.acc_ty.clone()));
            assert!(s.check_valid(&claim).unwrap().is_valid(), "{name}: f({acc}, {r}) = {next}");
            for p in &t.post_clauses {
                let closed = p.subst(&|v| (v == Var::Acc).then(|| lit(next.clone(), t.acc_ty.clone())));
                let holds = lift_eval(&t, std::slice::from_ref(p), &LiftResult::Defined(next.clone())) != LiftResult::Bottom;
                let f = if holds { closed } else { pushdown::term::not(closed) };
                assert!(s.check_valid(&f).unwrap().is_valid(), "{name}: {p} at {next}");
            }
            acc = next;
        }
    }
}
