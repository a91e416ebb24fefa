//! Whole-pipeline runs on the quick fixtures: universes, search, witness
//! re-check, fuzzing and the rewritten program.

use pushdown::analysis::build_universes;
use pushdown::bmc::{screen, ScreenVerdict};
use pushdown::exec::{differential_check, emit_rewritten, DiffConfig};
use pushdown::fixtures::load;
use pushdown::smt::{Session, SolverConfig};
use pushdown::synth::{synthesize, FailReason, SynthOutcome};
use pushdown::vcgen::{check_witness, Mode, VcGen};
use pushdown::{parse, typecheck, PipelineTask};

fn run(t: &PipelineTask) -> (Session, SynthOutcome) {
    let (_, u) = build_universes(t);
    let mut s = Session::start(&SolverConfig::default(), t).unwrap();
    let (out, _) = synthesize(&mut s, t, &u, false).unwrap();
    (s, out)
}

fn solved(name: &str, mode: Mode, q: &[&str], res: &[&str]) {
    let t = load(name);
    let (mut s, out) = run(&t);
    let sol = out.solution().unwrap_or_else(|| panic!("{name}: {out:?}"));
    let shown = |ts: &[pushdown::Term]| ts.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    assert_eq!(sol.mode, mode);
    assert_eq!(shown(&sol.q_atoms), q);
    assert_eq!(shown(&sol.residual_atoms), res);

    let vc = VcGen::new(&t, &mut s).unwrap();
    assert!(check_witness(&mut s, &vc, &sol.q_atoms, &sol.residual_atoms, &sol.psi_atoms).unwrap().is_certified());
    let cfg = DiffConfig { trials: 2_000, seed: 3, ..DiffConfig::default() };
    let report = differential_check(&t, &sol.q_atoms, &sol.residual_atoms, &cfg);
    assert!(report.ok(), "{:?}", report.mismatches);

    let src = emit_rewritten(&t, &sol.q_atoms, &sol.residual_atoms);
    let t2 = typecheck(&parse(&src).unwrap()).unwrap();
    assert!(t2.pre.is_some(), "{src}");
    assert_eq!(t2.post_clauses.len(), sol.residual_atoms.len(), "{src}");
}

#[test]
fn top2_end_to_end() {
    solved("top2", Mode::Split, &["r[0] > 90.0"], &["not a[1] == -inf"]);
}

#[test]
fn discount_end_to_end() {
    solved("discount", Mode::Exact, &["r[0] >= 1000.0"], &[]);
}

#[test]
fn count_has_nothing_to_push() {
    let t = load("count");
    let (mut s, out) = run(&t);
    assert!(matches!(out, SynthOutcome::Failed(FailReason::Exhausted, _)), "{out:?}");
    assert_eq!(screen(&mut s, &t, 3).unwrap(), ScreenVerdict::Infeasible);
}

#[test]
fn partial_pushdown_keeps_the_post_filter() {
    let src = "\
x = (int,)
I : (int,) = (0,)
c = fold(x, I, lambda a, r: (a[0] + 1,) if r[0] > 4 else a)
out = filter(c, lambda a: a[0] > 2)
";
    let t = typecheck(&parse(src).unwrap()).unwrap();
    let (_, out) = run(&t);
    let sol = out.solution().unwrap();
    assert_eq!(sol.mode, Mode::Partial);
    assert_eq!(sol.q_atoms.iter().map(|a| a.to_string()).collect::<Vec<_>>(), ["r[0] > 4"]);
    assert_eq!(sol.residual_atoms.iter().map(|a| a.to_string()).collect::<Vec<_>>(), ["a[0] > 2"]);
}
