//! Strongest bisimulation invariant between the bounds, Houdini style.

use super::bounds::SymbolicBounds;
use super::{Conj, Diagnosis, Engine};
use crate::smt::{SmtError, Verdict};

#[derive(Clone, Debug, PartialEq)]
pub enum BisimOutcome {
    Found(Conj),
    /// An atom of the lower bound is not preserved on this row.
    Refuted(Diagnosis),
    /// An undecided check involved an atom of the lower bound.
    Inconclusive,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Guard {
    Sync,
    Stutter,
}

enum Pass {
    Stable,
    Shrunk,
    Abort(BisimOutcome),
}

impl Engine<'_> {
    /// Start from `psi_max` and alternate Sync and Stutter weakening passes
    /// until neither removes an atom.
    pub fn find_strongest_bisimulation(&mut self, q: &[usize], b: &SymbolicBounds) -> Result<BisimOutcome, SmtError> {
        let mut cand = b.psi_max.clone();
        loop {
            let mut changed = false;
            for g in [Guard::Sync, Guard::Stutter] {
                match self.weaken_via_vc(g, q, &b.psi_min, &mut cand)? {
                    Pass::Stable => {}
                    Pass::Shrunk => changed = true,
                    Pass::Abort(o) => return Ok(o),
                }
            }
            if !changed {
                return Ok(BisimOutcome::Found(cand));
            }
        }
    }

    /// Remove every atom of `cand` not preserved by one step under the guard,
    /// with `cand` itself as antecedent. A countermodel to the whole
    /// conjunction refutes each atom it falsifies after the step, so all of
    /// them go at once; an undecided batch falls back to one check per atom.
    fn weaken_via_vc(&mut self, g: Guard, q: &[usize], min: &[usize], cand: &mut Conj) -> Result<Pass, SmtError> {
        let qt = self.q_terms(q);
        let stutter = g == Guard::Stutter;
        let mut shrunk = false;
        loop {
            let psi = self.psi_terms(cand);
            let f = if stutter { self.vc.stutter(&psi, &qt, &psi) } else { self.vc.sync(&psi, &qt, &psi) };
            match self.check(&f)? {
                Verdict::Valid => return Ok(if shrunk { Pass::Shrunk } else { Pass::Stable }),
                Verdict::Invalid(m) => {
                    let failing: Vec<usize> =
                        cand.iter().copied().filter(|&p| !self.holds_after(&self.u.u_psi[p], &m, stutter)).collect();
                    if failing.iter().any(|p| min.contains(p)) {
                        let row = self.row_of(&m);
                        return Ok(Pass::Abort(BisimOutcome::Refuted(match g {
                            Guard::Sync => Diagnosis::Sync(row),
                            Guard::Stutter => Diagnosis::Stutter(row),
                        })));
                    }
                    if failing.is_empty() {
                        return self.weaken_one_by_one(g, &qt, min, cand, shrunk);
                    }
                    cand.retain(|p| !failing.contains(p));
                    shrunk = true;
                }
                Verdict::Unknown(_) => return self.weaken_one_by_one(g, &qt, min, cand, shrunk),
            }
        }
    }

    fn weaken_one_by_one(
        &mut self,
        g: Guard,
        qt: &[crate::term::Term],
        min: &[usize],
        cand: &mut Conj,
        mut shrunk: bool,
    ) -> Result<Pass, SmtError> {
        let stutter = g == Guard::Stutter;
        for p in cand.clone() {
            let psi = self.psi_terms(cand);
            let cons = [self.u.u_psi[p].clone()];
            let f = if stutter { self.vc.stutter(&psi, qt, &cons) } else { self.vc.sync(&psi, qt, &cons) };
            let v = self.check(&f)?;
            if v.is_valid() {
                continue;
            }
            if min.contains(&p) {
                return Ok(Pass::Abort(match v {
                    Verdict::Invalid(m) => {
                        let row = self.row_of(&m);
                        BisimOutcome::Refuted(if stutter { Diagnosis::Stutter(row) } else { Diagnosis::Sync(row) })
                    }
                    _ => BisimOutcome::Inconclusive,
                }));
            }
            cand.retain(|&x| x != p);
            shrunk = true;
        }
        Ok(if shrunk { Pass::Shrunk } else { Pass::Stable })
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
    use crate::term::{and_all, implies};

    fn with_engine<R>(t: &PipelineTask, u: &PredicateUniverse, f: impl FnOnce(&mut Engine) -> R) -> R {
        let mut s = Session::start(&SolverConfig::default(), t).unwrap();
        let mut e = Engine::new(&mut s, t, u).unwrap();
        f(&mut e)
    }

    #[test]
    fn top2_invariant_entails_the_seven_conjuncts() {
        let t = load("top2");
        let (_, u) = build_universes(&t);
        let q = vec![u.u_q.iter().position(|a| a.to_string() == "r[0] > 90.0").unwrap()];
        let psi = with_engine(&t, &u, |e| {
            let (q, b) = e.weaken_via_bounds(&q).unwrap().unwrap();
            match e.find_strongest_bisimulation(&q, &b).unwrap() {
                BisimOutcome::Found(p) => e.psi_terms(&p),
                o => panic!("{o:?}"),
            }
        });
        let mut s = Session::start(&SolverConfig::default(), &t).unwrap();
        for c in atoms(&t, crate::vcgen::tests::TOP2_INVARIANT) {
            assert!(s.check_valid(&implies(and_all(psi.iter().cloned()), c.clone())).unwrap().is_valid(), "{c}");
        }
    }

    #[test]
    fn empty_filter_keeps_synchronous_atoms() {
        let t = load("top2");
        let u = universe(&t, &[], &[], &["a1[0] == a2[0]", "a1[1] == a2[1]", "not a1[0] > 90.0"]);
        with_engine(&t, &u, |e| {
            let b = SymbolicBounds { psi_min: vec![], psi_max: vec![0, 1] };
            assert_eq!(e.find_strongest_bisimulation(&[], &b).unwrap(), BisimOutcome::Found(vec![0, 1]));
        });
    }

    #[test]
    fn lower_bound_atom_that_breaks_aborts_with_a_row() {
        let t = load("top2");
        let u = universe(&t, &["r[0] > 95.0"], &[], &["a1[0] == a2[0]", "a1[1] == a2[1]"]);
        with_engine(&t, &u, |e| {
            let b = SymbolicBounds { psi_min: vec![0], psi_max: vec![0, 1] };
            match e.find_strongest_bisimulation(&[0], &b).unwrap() {
                BisimOutcome::Refuted(d) => {
                    assert_eq!(d.kind(), "Stutter");
                    assert!(!e.eval_row(&e.u.u_q[0], d.row()), "{}", d.row());
                }
                o => panic!("{o:?}"),
            }
        });
    }

    #[test]
    fn fixed_point_is_unchanged() {
        let t = load("top2");
        let u = universe(&t, &["r[0] > 90.0"], &[], &top2_guarded_psi());
        with_engine(&t, &u, |e| {
            let (q, b) = e.weaken_via_bounds(&[0]).unwrap().unwrap();
            let BisimOutcome::Found(psi) = e.find_strongest_bisimulation(&q, &b).unwrap() else { panic!() };
            let tight = SymbolicBounds { psi_min: b.psi_min.clone(), psi_max: psi.clone() };
            assert_eq!(e.find_strongest_bisimulation(&q, &tight).unwrap(), BisimOutcome::Found(psi));
        });
    }
}
