//! Optimal pushdown synthesis: a max-cardinality worklist over pre-filters,
//! each candidate screened by symbolic invariant bounds, then a Houdini pass
//! for the invariant and a min-cardinality search for the residual.

pub mod bisim;
pub mod bounds;
pub mod implicant;
pub mod residual;

pub use bisim::BisimOutcome;
pub use bounds::SymbolicBounds;
pub use implicant::{find_weakest_implicant, Implicant, ImplicantError};

use crate::analysis::PredicateUniverse;
use crate::dsl::PipelineTask;
use crate::exec::interp::{Env, Interp};
use crate::smt::{Model, Session, SmtError, Verdict};
use crate::term::{Term, TyCtx, Var};
use crate::value::Value;
use crate::vcgen::{check_witness, classify_mode, Mode, VcGen, VcKind, WitnessCheck};
use serde::Serialize;
use std::cmp::Reverse;
use std::collections::{BTreeSet, HashSet};
use std::time::Instant;

/// Sorted atom indices into one universe.
pub type Conj = Vec<usize>;

/// Root cause of a refuted pre-filter: the row on which a VC fails.
#[derive(Clone, Debug, PartialEq)]
pub enum Diagnosis {
    Sync(Value),
    Stutter(Value),
}

impl Diagnosis {
    pub fn kind(&self) -> &'static str {
        match self {
            Diagnosis::Sync(_) => "Sync",
            Diagnosis::Stutter(_) => "Stutter",
        }
    }

    pub fn row(&self) -> &Value {
        match self {
            Diagnosis::Sync(r) | Diagnosis::Stutter(r) => r,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Stats {
    pub wall_ms: u64,
    pub solver_calls: u64,
    pub worklist_iters: u64,
    pub u_q: usize,
    pub u_residual: usize,
    pub u_psi: usize,
    pub psi_min_size: usize,
    pub psi_min_complete: bool,
    pub lift_guard: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceEvent {
    pub event: &'static str,
    pub q: Conj,
    /// Largest candidate size in the worklist, before a dequeue.
    pub sigma: usize,
    /// Number of candidates of that size.
    pub kappa: usize,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PushdownSolution {
    pub q: Conj,
    pub residual: Conj,
    pub psi: Conj,
    pub q_atoms: Vec<Term>,
    pub residual_atoms: Vec<Term>,
    pub psi_atoms: Vec<Term>,
    pub mode: Mode,
    pub stats: Stats,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FailReason {
    /// Every candidate pre-filter was refuted.
    Exhausted,
    Budget(String),
    /// The final witness re-check rejected the result.
    Witness(VcKind),
    Inconclusive(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum SynthOutcome {
    Solved(PushdownSolution),
    Failed(FailReason, Stats),
}

impl SynthOutcome {
    pub fn solution(&self) -> Option<&PushdownSolution> {
        match self {
            SynthOutcome::Solved(s) => Some(s),
            SynthOutcome::Failed(..) => None,
        }
    }

    pub fn stats(&self) -> &Stats {
        match self {
            SynthOutcome::Solved(s) => &s.stats,
            SynthOutcome::Failed(_, st) => st,
        }
    }
}

#[derive(Default)]
struct Cache {
    psi_min: Option<Conj>,
    psi_init: Option<Conj>,
}

pub struct Engine<'a> {
    pub s: &'a mut Session,
    pub task: &'a PipelineTask,
    pub vc: VcGen<'a>,
    pub u: &'a PredicateUniverse,
    ctx: TyCtx,
    cache: Cache,
    pub stats: Stats,
    pub trace: Option<Vec<TraceEvent>>,
    measure: (usize, usize),
}

const ALL_VARS: [Var; 3] = [Var::Acc1, Var::Acc2, Var::Row];

impl<'a> Engine<'a> {
    pub fn new(s: &'a mut Session, task: &'a PipelineTask, u: &'a PredicateUniverse) -> Result<Engine<'a>, SmtError> {
        let vc = VcGen::new(task, s)?;
        let stats = Stats {
            u_q: u.u_q.len(),
            u_residual: u.u_res.len(),
            u_psi: u.u_psi.len(),
            lift_guard: vc.lift_guard,
            ..Stats::default()
        };
        Ok(Engine { s, task, vc, u, ctx: task.ctx(), cache: Cache::default(), stats, trace: None, measure: (0, 0) })
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub(crate) fn interp(&self) -> Interp<'_> {
        Interp::new(Some(&self.task.body), &self.ctx)
    }

    /// Validity with countermodels that bind both accumulators and the row.
    pub(crate) fn check(&mut self, f: &Term) -> Result<Verdict, SmtError> {
        self.s.check_valid_over(f, &ALL_VARS)
    }

    pub(crate) fn eval_row(&self, atom: &Term, row: &Value) -> bool {
        self.interp().eval_bool(atom, &Env::new().with(Var::Row, row.clone()))
    }

    pub(crate) fn row_of(&self, m: &Model) -> Value {
        m.get(Var::Row).cloned().unwrap_or_else(|| Value::default_of(&self.task.row_ty))
    }

    /// Truth of an invariant atom after one step from the countermodel's
    /// states; on a stutter step the optimized state stays put.
    pub(crate) fn holds_after(&self, atom: &Term, m: &Model, stutter: bool) -> bool {
        let step = |v: Var| Term::ApplyF(Box::new(Term::Var(v)), Box::new(Term::Var(Var::Row)));
        let post = atom.subst(&|v| match v {
            Var::Acc1 => Some(step(Var::Acc1)),
            Var::Acc2 if !stutter => Some(step(Var::Acc2)),
            _ => None,
        });
        self.interp().eval_bool(&post, &m.env)
    }

    pub(crate) fn event(&mut self, event: &'static str, q: &[usize], note: String) {
        let (sigma, kappa) = self.measure;
        if let Some(t) = &mut self.trace {
            t.push(TraceEvent { event, q: q.to_vec(), sigma, kappa, note });
        }
    }

    fn solution(&mut self, q: Conj, residual: Conj, psi: Conj, started: Instant) -> Result<SynthOutcome, SmtError> {
        let (qt, rt, pt) = (self.q_terms(&q), self.res_terms(&residual), self.psi_terms(&psi));
        let verdict = check_witness(self.s, &self.vc, &qt, &rt, &pt)?;
        let mode = classify_mode(self.s, self.task, &rt)?;
        self.finish_stats(started);
        Ok(match verdict {
            WitnessCheck::Certified => SynthOutcome::Solved(PushdownSolution {
                q,
                residual,
                psi,
                q_atoms: qt,
                residual_atoms: rt,
                psi_atoms: pt,
                mode,
                stats: self.stats.clone(),
            }),
            WitnessCheck::Failed(k, _) => SynthOutcome::Failed(FailReason::Witness(k), self.stats.clone()),
            WitnessCheck::Inconclusive(k, why) => {
                SynthOutcome::Failed(FailReason::Inconclusive(format!("{k}: {why}")), self.stats.clone())
            }
        })
    }

    fn finish_stats(&mut self, started: Instant) {
        self.stats.wall_ms = started.elapsed().as_millis() as u64;
        self.stats.solver_calls = self.s.calls;
    }

    /// The worklist search. Candidates leave in order of decreasing size,
    /// ties broken by the lexicographically least index list; a pre-filter
    /// already dequeued is never enqueued again.
    pub fn run(&mut self) -> Result<SynthOutcome, SmtError> {
        let started = Instant::now();
        match self.search(started) {
            Err(SmtError::Budget(what)) => {
                self.finish_stats(started);
                Ok(SynthOutcome::Failed(FailReason::Budget(what.to_string()), self.stats.clone()))
            }
            r => r,
        }
    }

    fn search(&mut self, started: Instant) -> Result<SynthOutcome, SmtError> {
        let mut work: BTreeSet<(Reverse<usize>, Conj)> = BTreeSet::new();
        let mut visited: HashSet<Conj> = HashSet::new();
        work.insert((Reverse(self.u.u_q.len()), (0..self.u.u_q.len()).collect()));
        let enqueue = |work: &mut BTreeSet<(Reverse<usize>, Conj)>, visited: &HashSet<Conj>, q: Conj| {
            if !visited.contains(&q) {
                work.insert((Reverse(q.len()), q));
            }
        };
        while let Some((_, q0)) = work.first().cloned() {
            self.measure = measure(&work);
            work.pop_first();
            visited.insert(q0.clone());
            self.stats.worklist_iters += 1;
            self.event("dequeue", &q0, String::new());
            let Some((q, b)) = self.weaken_via_bounds(&q0)? else {
                self.event("verdict", &q0, "hopeless".into());
                continue;
            };
            match self.find_strongest_bisimulation(&q, &b)? {
                BisimOutcome::Refuted(d) => {
                    let r = self.repair(&q, &d);
                    self.event("repair", &r, format!("bisimulation, {}", d.kind()));
                    enqueue(&mut work, &visited, r);
                }
                BisimOutcome::Inconclusive => self.event("verdict", &q, "bisimulation inconclusive".into()),
                BisimOutcome::Found(psi) => match self.find_residual(&psi)? {
                    Some(res) => {
                        self.event("verdict", &q, format!("solved, residual {res:?}"));
                        return self.solution(q, res, psi, started);
                    }
                    None => self.event("verdict", &q, "no residual".into()),
                },
            }
            for k in 0..q.len() {
                let mut w = q.clone();
                w.remove(k);
                self.event("enqueue", &w, String::new());
                enqueue(&mut work, &visited, w);
            }
        }
        self.finish_stats(started);
        Ok(SynthOutcome::Failed(FailReason::Exhausted, self.stats.clone()))
    }
}

/// Size of the largest candidates and how many there are.
pub fn measure<T: Ord>(work: &BTreeSet<(Reverse<usize>, T)>) -> (usize, usize) {
    match work.first() {
        None => (0, 0),
        Some((Reverse(top), _)) => (*top, work.iter().take_while(|(Reverse(n), _)| n == top).count()),
    }
}

/// Run the whole search on one task with a fresh engine.
pub fn synthesize(
    s: &mut Session,
    task: &PipelineTask,
    u: &PredicateUniverse,
    trace: bool,
) -> Result<(SynthOutcome, Vec<TraceEvent>), SmtError> {
    let mut e = Engine::new(s, task, u)?;
    if trace {
        e = e.with_trace();
    }
    let out = e.run()?;
    Ok((out, e.trace.take().unwrap_or_default()))
}

#[cfg(test)]
pub(crate) mod testkit {
    use crate::analysis::PredicateUniverse;
    use crate::dsl::{parse, parse_atom, typecheck, PipelineTask};
    use crate::term::Term;

    pub fn atoms(t: &PipelineTask, src: &[&str]) -> Vec<Term> {
        src.iter().map(|s| parse_atom(t, s).unwrap_or_else(|e| panic!("{s}: {e:?}"))).collect()
    }

    pub fn universe(t: &PipelineTask, q: &[&str], res: &[&str], psi: &[&str]) -> PredicateUniverse {
        PredicateUniverse { u_q: atoms(t, q), u_res: atoms(t, res), u_psi: atoms(t, psi), dropped: vec![] }
    }

    pub fn program(src: &str) -> PipelineTask {
        typecheck(&parse(src).unwrap()).unwrap()
    }

    /// top2's seven-conjunct invariant plus the two P-guarded agreement
    /// atoms that the lower bound picks out.
    pub fn top2_guarded_psi() -> Vec<&'static str> {
        let mut v = vec![
            "not (a1[0] > 90.0 and a1[1] > 90.0) or (a1[0] == a2[0] and a1[1] == a2[1])",
            "not (a2[0] > 90.0 and a2[1] > 90.0) or (a1[0] == a2[0] and a1[1] == a2[1])",
        ];
        v.extend_from_slice(crate::vcgen::tests::TOP2_INVARIANT);
        v
    }
}

#[cfg(test)]
mod tests {
    use super::testkit::*;
    use super::*;
    use crate::analysis::build_universes;
    use crate::fixtures::load;
    use crate::smt::SolverConfig;

    #[test]
    fn measure_counts_the_top_layer() {
        let mut w: BTreeSet<(Reverse<usize>, Conj)> = BTreeSet::new();
        assert_eq!(measure(&w), (0, 0));
        for q in [vec![0, 1], vec![0, 2], vec![1]] {
            w.insert((Reverse(q.len()), q));
        }
        assert_eq!(measure(&w), (2, 2));
        assert_eq!(w.first().unwrap().1, vec![0, 1]);
    }

    fn solve(name: &str) -> PushdownSolution {
        let t = load(name);
        let (_, u) = build_universes(&t);
        let mut s = Session::start(&SolverConfig::default(), &t).unwrap();
        let (out, _) = synthesize(&mut s, &t, &u, false).unwrap();
        out.solution().unwrap_or_else(|| panic!("{name}: {out:?}")).clone()
    }

    fn shown(ts: &[Term]) -> Vec<String> {
        ts.iter().map(|t| t.to_string()).collect()
    }

    #[test]
    fn top2_split_pushdown() {
        let sol = solve("top2");
        assert_eq!(shown(&sol.q_atoms), ["r[0] > 90.0"]);
        assert_eq!(shown(&sol.residual_atoms), ["not a[1] == -inf"]);
        assert_eq!(sol.mode, Mode::Split);
    }

    #[test]
    fn discount_exact_pushdown() {
        let sol = solve("discount");
        assert_eq!(shown(&sol.q_atoms), ["r[0] >= 1000.0"]);
        assert!(sol.residual.is_empty());
        assert_eq!(sol.mode, Mode::Exact);
    }

    #[test]
    fn count_has_no_pushdown() {
        let t = load("count");
        let (_, u) = build_universes(&t);
        let mut s = Session::start(&SolverConfig::default(), &t).unwrap();
        let (out, trace) = synthesize(&mut s, &t, &u, true).unwrap();
        assert!(matches!(out, SynthOutcome::Failed(FailReason::Exhausted, _)), "{out:?}");
        assert!(!out.stats().lift_guard);
        assert!(trace.iter().all(|e| e.event != "verdict" || !e.note.starts_with("solved")));
    }

    #[test]
    fn unrealizable_start_is_repaired() {
        let t = load("top2");
        let u = universe(&t, &["r[0] > 90.0", "r[0] > 95.0"], &["not a[1] == -inf"], &top2_guarded_psi());
        let mut s = Session::start(&SolverConfig::default(), &t).unwrap();
        let (out, trace) = synthesize(&mut s, &t, &u, true).unwrap();
        let sol = out.solution().unwrap();
        assert_eq!((sol.q.clone(), sol.residual.clone()), (vec![0], vec![0]));
        assert_eq!(sol.stats.psi_min_size, 2);
        let repair = trace.iter().find(|e| e.event == "repair").unwrap();
        assert_eq!((repair.q.clone(), repair.note.as_str()), (vec![0], "unrealizable, Stutter"));
    }

    #[test]
    fn solver_call_budget_fails_distinctly() {
        let t = load("top2");
        let (_, u) = build_universes(&t);
        let cfg = SolverConfig { max_calls: 3, ..SolverConfig::default() };
        let mut s = Session::start(&cfg, &t).unwrap();
        let (out, _) = synthesize(&mut s, &t, &u, false).unwrap();
        assert!(matches!(out, SynthOutcome::Failed(FailReason::Budget(_), _)), "{out:?}");
    }
}
