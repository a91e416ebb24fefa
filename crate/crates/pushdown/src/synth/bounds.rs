//! Symbolic bounds on the invariant, unrealizability checks and repair.

use super::implicant::{Implicant, ImplicantError};
use super::{Conj, Diagnosis, Engine};
use crate::smt::{SmtError, Verdict};
use crate::term::{Term, Var};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolicBounds {
    /// Atoms every admissible invariant contains.
    pub psi_min: Conj,
    /// Atoms an admissible invariant may contain.
    pub psi_max: Conj,
}

impl SymbolicBounds {
    pub fn contains_min(&self) -> bool {
        self.psi_min.iter().all(|p| self.psi_max.contains(p))
    }
}

impl Engine<'_> {
    /// Keep the atoms of `q` that are false on a Sync row, true on a Stutter row.
    pub fn repair(&self, q: &[usize], d: &Diagnosis) -> Conj {
        let (row, want) = match d {
            Diagnosis::Sync(r) => (r, false),
            Diagnosis::Stutter(r) => (r, true),
        };
        q.iter().copied().filter(|&i| self.eval_row(&self.u.u_q[i], row) == want).collect()
    }

    /// Lower bound from the weakest implicant of the lifted Final with `P' = P`,
    /// computed once per task.
    pub fn psi_min(&mut self) -> Result<Conj, SmtError> {
        if let Some(m) = &self.cache.psi_min {
            return Ok(m.clone());
        }
        let post = self.task.post_clauses.clone();
        let phi = self.vc.outcome_agrees(&post, &post);
        let imp = match super::implicant::find_weakest_implicant(self.s, self.task, &self.u.u_psi, &phi) {
            Ok(imp) => imp,
            // no lower bound is known; every candidate keeps the trivial one
            Err(ImplicantError::Insufficient) => Implicant { atoms: Vec::new(), complete: false },
            Err(ImplicantError::Smt(e)) => return Err(e),
        };
        // a stalled search proves nothing about the atoms it collected
        let atoms = if imp.complete { imp.atoms } else { Vec::new() };
        self.stats.psi_min_complete = imp.complete;
        self.stats.psi_min_size = atoms.len();
        self.cache.psi_min = Some(atoms.clone());
        Ok(atoms)
    }

    /// Atoms holding at `(I, I)`; computed once per task.
    fn psi_init(&mut self) -> Conj {
        if let Some(m) = &self.cache.psi_init {
            return m.clone();
        }
        let i = self.task.init.clone();
        let env = crate::exec::interp::Env::new().with(Var::Acc1, i.clone()).with(Var::Acc2, i);
        let keep: Conj =
            (0..self.u.u_psi.len()).filter(|p| self.interp().eval_bool(&self.u.u_psi[*p], &env)).collect();
        self.cache.psi_init = Some(keep.clone());
        keep
    }

    pub fn trivial_bounds(&self) -> SymbolicBounds {
        SymbolicBounds { psi_min: Vec::new(), psi_max: (0..self.u.u_psi.len()).collect() }
    }

    /// The lower bound if still empty, then the Init pass, then Sync-based
    /// pruning of `psi_max∖psi_min` under `q` until stable. Stutter is never
    /// used here: `q` may still be stronger than any sound filter.
    pub fn refine_bounds(&mut self, q: &[usize], mut b: SymbolicBounds) -> Result<SymbolicBounds, SmtError> {
        if b.psi_min.is_empty() {
            b.psi_min = self.psi_min()?;
        }
        let init = self.psi_init();
        let min = b.psi_min.clone();
        b.psi_max.retain(|p| min.contains(p) || init.contains(p));
        let qt = self.q_terms(q);
        loop {
            let free: Vec<usize> = b.psi_max.iter().copied().filter(|p| !b.psi_min.contains(p)).collect();
            if free.is_empty() {
                break;
            }
            let ante = self.psi_terms(&b.psi_max);
            let cons = self.psi_terms(&free);
            match self.check(&self.vc.sync(&ante, &qt, &cons))? {
                Verdict::Valid => break,
                Verdict::Invalid(m) => {
                    let drop: Vec<usize> =
                        free.into_iter().filter(|&p| !self.holds_after(&self.u.u_psi[p], &m, false)).collect();
                    if drop.is_empty() {
                        break;
                    }
                    b.psi_max.retain(|p| !drop.contains(p));
                }
                // keep the atoms: dropping on an undecided check could lose invariants
                Verdict::Unknown(_) => break,
            }
        }
        Ok(b)
    }

    /// `psi_max` in the antecedent, `psi_min` in the consequent; an invalid
    /// Sync or Stutter instance refutes every invariant between the bounds.
    pub fn check_unrealizable(&mut self, q: &[usize], b: &SymbolicBounds) -> Result<Option<Diagnosis>, SmtError> {
        let qt = self.q_terms(q);
        let ante = self.psi_terms(&b.psi_max);
        let cons = self.psi_terms(&b.psi_min);
        if let Verdict::Invalid(m) = self.check(&self.vc.sync(&ante, &qt, &cons))? {
            return Ok(Some(Diagnosis::Sync(self.row_of(&m))));
        }
        if let Verdict::Invalid(m) = self.check(&self.vc.stutter(&ante, &qt, &cons))? {
            return Ok(Some(Diagnosis::Stutter(self.row_of(&m))));
        }
        Ok(None)
    }

    /// Alternate refinement and unrealizability checks, repairing `q` on each
    /// refutation. `None` when repairs bottom out at the empty filter.
    pub fn weaken_via_bounds(&mut self, q0: &[usize]) -> Result<Option<(Conj, SymbolicBounds)>, SmtError> {
        let mut q: Conj = q0.to_vec();
        let mut b = self.trivial_bounds();
        loop {
            if q.is_empty() {
                return Ok(None);
            }
            b = self.refine_bounds(&q, b)?;
            match self.check_unrealizable(&q, &b)? {
                None => return Ok(Some((q, b))),
                Some(d) => {
                    q = self.repair(&q, &d);
                    self.event("repair", &q, format!("unrealizable, {}", d.kind()));
                }
            }
        }
    }

    pub(crate) fn q_terms(&self, q: &[usize]) -> Vec<Term> {
        q.iter().map(|&i| self.u.u_q[i].clone()).collect()
    }

    pub(crate) fn psi_terms(&self, p: &[usize]) -> Vec<Term> {
        p.iter().map(|&i| self.u.u_psi[i].clone()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::PredicateUniverse;
    use crate::fixtures::load;
    use crate::smt::{Session, SolverConfig};
    use crate::synth::testkit::*;
    use crate::value::Value;

    fn row(x: i64) -> Value {
        Value::Tuple(vec![Value::real(x, 1)])
    }

    fn with_engine<R>(name: &str, u: &PredicateUniverse, f: impl FnOnce(&mut Engine) -> R) -> R {
        let t = load(name);
        let mut s = Session::start(&SolverConfig::default(), &t).unwrap();
        let mut e = Engine::new(&mut s, &t, u).unwrap();
        f(&mut e)
    }

    fn top2_q() -> PredicateUniverse {
        universe(&load("top2"), &["r[0] > 90.0", "r[0] > 95.0"], &[], &top2_guarded_psi())
    }

    #[test]
    fn repair_examples() {
        with_engine("top2", &top2_q(), |e| {
            assert_eq!(e.repair(&[0, 1], &Diagnosis::Stutter(row(92))), vec![0]);
            assert_eq!(e.repair(&[0], &Diagnosis::Sync(row(100))), Vec::<usize>::new());
            assert_eq!(e.repair(&[], &Diagnosis::Stutter(row(92))), Vec::<usize>::new());
        });
    }

    #[test]
    fn init_and_sync_prune_the_upper_bound() {
        let t = load("top2");
        let u = universe(
            &t,
            &["r[0] > 90.0"],
            &[],
            &["not a1[0] == -inf", "not a1[0] == -inf or a1[0] == a2[0]", "not a1[0] > 90.0"],
        );
        with_engine("top2", &u, |e| {
            assert_eq!(e.psi_init(), vec![1, 2]);
            let b = e.refine_bounds(&[0], e.trivial_bounds()).unwrap();
            assert_eq!(b.psi_max, vec![1]);
            assert!(b.contains_min());
            assert_eq!(e.refine_bounds(&[0], b.clone()).unwrap(), b);
        });
    }

    #[test]
    fn lower_bound_is_the_guarded_agreement() {
        with_engine("top2", &top2_q(), |e| {
            assert_eq!(e.psi_min().unwrap(), vec![0, 1]);
            assert!(e.stats.psi_min_complete);
        });
    }

    #[test]
    fn bounds_are_monotone() {
        with_engine("top2", &top2_q(), |e| {
            let b0 = e.trivial_bounds();
            let b1 = e.refine_bounds(&[0, 1], b0.clone()).unwrap();
            let b2 = e.refine_bounds(&[0], b1.clone()).unwrap();
            for (old, new) in [(&b0, &b1), (&b1, &b2)] {
                assert!(old.psi_min.iter().all(|p| new.psi_min.contains(p)));
                assert!(new.psi_max.iter().all(|p| old.psi_max.contains(p)));
            }
        });
    }

    #[test]
    fn stutter_refutes_the_strong_filter() {
        with_engine("top2", &top2_q(), |e| {
            let b = e.refine_bounds(&[0, 1], e.trivial_bounds()).unwrap();
            let d = e.check_unrealizable(&[0, 1], &b).unwrap().expect("unrealizable");
            assert_eq!(d.kind(), "Stutter");
            // a row the strong filter drops but that still changes the second score
            assert!(e.eval_row(&e.u.u_q[0], d.row()) && !e.eval_row(&e.u.u_q[1], d.row()), "{}", d.row());
            let b = e.refine_bounds(&[0], e.trivial_bounds()).unwrap();
            assert_eq!(e.check_unrealizable(&[0], &b).unwrap(), None);
        });
    }

    #[test]
    fn weaken_via_bounds_examples() {
        with_engine("top2", &top2_q(), |e| {
            let (q, b) = e.weaken_via_bounds(&[0, 1]).unwrap().unwrap();
            assert_eq!(q, vec![0]);
            assert!(b.contains_min());
            assert_eq!(e.weaken_via_bounds(&[0]).unwrap().unwrap().0, vec![0]);
            // the strong atom alone is refuted by a row it drops, so repair empties it
            assert_eq!(e.weaken_via_bounds(&[1]).unwrap(), None);
            assert_eq!(e.weaken_via_bounds(&[]).unwrap(), None);
        });
    }
}
