//! Weakest residual satisfying Final under a fixed invariant.

use super::{Conj, Engine};
use crate::smt::{Model, SmtError, Verdict};
use crate::term::{eq, Term, Var};
use std::collections::{BTreeSet, HashSet};

/// Why a residual candidate fails Final on a countermodel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Failure {
    MismatchOnAcceptance,
    FalseRejection,
    /// Atoms not yet in the candidate that reject the optimized state.
    SpuriousAcceptance(Vec<usize>),
}

impl Engine<'_> {
    pub(crate) fn res_terms(&self, p: &[usize]) -> Vec<Term> {
        p.iter().map(|&i| self.u.u_res[i].clone()).collect()
    }

    /// Early check with `P' = P`, then a min-cardinality search from the
    /// empty residual, strengthening only on spurious acceptances.
    pub fn find_residual(&mut self, psi: &[usize]) -> Result<Option<Conj>, SmtError> {
        let psi_t = self.psi_terms(psi);
        let post = self.task.post_clauses.clone();
        if !self.check(&self.vc.final_with(&psi_t, &post, &post))?.is_valid() {
            return Ok(None);
        }
        let mut work: BTreeSet<(usize, Conj)> = BTreeSet::from([(0, Vec::new())]);
        let mut visited: HashSet<Conj> = HashSet::new();
        while let Some((_, cand)) = work.pop_first() {
            if !visited.insert(cand.clone()) {
                continue;
            }
            let res = self.res_terms(&cand);
            match self.check(&self.vc.final_with(&psi_t, &post, &res))? {
                Verdict::Valid => return Ok(Some(cand)),
                Verdict::Invalid(m) => {
                    if let Failure::SpuriousAcceptance(extra) = self.classify_failure(&cand, &m) {
                        for p in extra {
                            let mut next = cand.clone();
                            next.push(p);
                            next.sort_unstable();
                            if !visited.contains(&next) {
                                work.insert((next.len(), next));
                            }
                        }
                    }
                }
                // skipped: the search may end with a stronger residual
                Verdict::Unknown(_) => {}
            }
        }
        Ok(None)
    }

    /// Mode of a Final countermodel, with the filters read through Lift.
    pub fn classify_failure(&self, cand: &[usize], m: &Model) -> Failure {
        let it = self.interp();
        let p1 = it.eval_bool(&self.vc.lifted(Var::Acc1, &self.task.post_clauses), &m.env);
        let p2 = it.eval_bool(&self.vc.lifted(Var::Acc2, &self.res_terms(cand)), &m.env);
        let same = it.eval_bool(&eq(Term::Var(Var::Acc1), Term::Var(Var::Acc2)), &m.env);
        match (p1, p2) {
            (true, true) => {
                debug_assert!(!same, "a model satisfying Final's first disjunct");
                Failure::MismatchOnAcceptance
            }
            (true, false) => Failure::FalseRejection,
            (false, true) => Failure::SpuriousAcceptance(
                (0..self.u.u_res.len())
                    .filter(|p| !cand.contains(p))
                    .filter(|&p| !it.eval_bool(&self.u.u_res[p].rename(Var::Acc, Var::Acc2), &m.env))
                    .collect(),
            ),
            // agrees with Final's second disjunct; only reachable if the
            // interpreter and the encoding disagree, so nothing is enqueued
            (false, false) => Failure::FalseRejection,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{build_universes, PredicateUniverse};
    use crate::dsl::PipelineTask;
    use crate::fixtures::load;
    use crate::smt::{Session, SolverConfig};
    use crate::synth::testkit::*;
    use crate::exec::interp::Env;
    use crate::value::Value;

    fn with_engine<R>(t: &PipelineTask, u: &PredicateUniverse, f: impl FnOnce(&mut Engine) -> R) -> R {
        let mut s = Session::start(&SolverConfig::default(), t).unwrap();
        let mut e = Engine::new(&mut s, t, u).unwrap();
        f(&mut e)
    }

    const SUM: &str = "x = (int,)\nI : (int,) = (0,)\ns = fold(x, I, lambda a, r: (a[0] + r[0],))\nout = filter(s, lambda a: a[0] > 0)\n";

    fn states(a1: i64, a2: i64) -> Model {
        let v = |n| Value::Tuple(vec![Value::int(n)]);
        Model { env: Env::new().with(Var::Acc1, v(a1)).with(Var::Acc2, v(a2)) }
    }

    #[test]
    fn top2_residual_is_non_emptiness_of_the_second_score() {
        let t = load("top2");
        let (_, full) = build_universes(&t);
        let u = PredicateUniverse { u_psi: atoms(&t, crate::vcgen::tests::TOP2_INVARIANT), ..full };
        with_engine(&t, &u, |e| {
            let res = e.find_residual(&(0..7).collect::<Vec<_>>()).unwrap().unwrap();
            let shown: Vec<String> = e.res_terms(&res).iter().map(|t| t.to_string()).collect();
            assert_eq!(shown, ["not a[1] == -inf"]);
        });
    }

    #[test]
    fn trivial_post_gives_empty_residual() {
        let mut t = load("top2");
        t.post_clauses.clear();
        let u = universe(&t, &[], &["not a[1] == -inf"], &["a1[0] == a2[0]", "a1[1] == a2[1]"]);
        with_engine(&t, &u, |e| assert_eq!(e.find_residual(&[0, 1]).unwrap(), Some(vec![])));
    }

    #[test]
    fn weakest_residual_over_two_atoms() {
        let t = program(SUM);
        let u = universe(&t, &[], &["a[0] > 0", "not a[0] == 0"], &["a1[0] == a2[0]"]);
        with_engine(&t, &u, |e| assert_eq!(e.find_residual(&[0]).unwrap(), Some(vec![0])));
    }

    #[test]
    fn too_weak_invariant_has_no_residual() {
        let t = program(SUM);
        let u = universe(&t, &[], &["a[0] > 0"], &["a1[0] > 0 or a2[0] > 0"]);
        with_engine(&t, &u, |e| assert_eq!(e.find_residual(&[0]).unwrap(), None));
    }

    #[test]
    fn failure_modes() {
        let t = program(SUM);
        let u = universe(&t, &[], &["a[0] > 0", "a[0] > 5", "a[0] < -5"], &[]);
        with_engine(&t, &u, |e| {
            assert!(!e.vc.lift_guard);
            assert_eq!(e.classify_failure(&[], &states(-1, 1)), Failure::SpuriousAcceptance(vec![1, 2]));
            assert_eq!(e.classify_failure(&[1], &states(3, 3)), Failure::FalseRejection);
            assert_eq!(e.classify_failure(&[], &states(3, 4)), Failure::MismatchOnAcceptance);
        });
    }
}
