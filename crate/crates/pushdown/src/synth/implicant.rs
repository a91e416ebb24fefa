//! Weakest conjunction over a universe that entails a target formula.

use crate::dsl::PipelineTask;
use crate::smt::{eval_atom, Model, Session, SmtError, Verdict};
use crate::term::{and_all, implies, not, or_all, Term, Var};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImplicantError {
    /// `⋀U ⇒ Φ` fails, so no subset of the universe implies the target.
    #[error("universe insufficient: its conjunction does not imply the target")]
    Insufficient,
    #[error(transparent)]
    Smt(#[from] SmtError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Implicant {
    /// Indices into the universe, ascending.
    pub atoms: Vec<usize>,
    /// False when the loop stalled before `atoms` entailed the target.
    pub complete: bool,
}

struct Ctx<'a> {
    task: &'a PipelineTask,
    universe: &'a [Term],
    vars: Vec<Var>,
}

impl Ctx<'_> {
    fn conj(&self, idx: &[usize]) -> Term {
        and_all(idx.iter().map(|&i| self.universe[i].clone()))
    }

    fn holds(&self, i: usize, m: &Model) -> bool {
        eval_atom(self.task, &self.universe[i], m)
    }

    /// A model of `f`, or `None` when `f` is unsatisfiable or undecided.
    fn model(&self, s: &mut Session, f: Term) -> Result<Option<Model>, SmtError> {
        Ok(match s.check_valid_over(&not(f), &self.vars)? {
            Verdict::Invalid(m) => Some(m),
            _ => None,
        })
    }
}

/// Atoms of `cands` entailed by `phi`. Each countermodel removes every
/// candidate it falsifies; undecided batches fall back to single checks, where
/// an undecided atom counts as not entailed.
fn entailed(s: &mut Session, cx: &Ctx, phi: &Term, cands: Vec<usize>) -> Result<Vec<usize>, SmtError> {
    let mut keep = cands;
    loop {
        if keep.is_empty() {
            return Ok(keep);
        }
        match s.check_valid_over(&implies(phi.clone(), cx.conj(&keep)), &cx.vars)? {
            Verdict::Valid => return Ok(keep),
            Verdict::Invalid(m) => keep.retain(|&i| cx.holds(i, &m)),
            Verdict::Unknown(_) => {
                let mut out = Vec::new();
                for i in keep {
                    if s.check_valid(&implies(phi.clone(), cx.universe[i].clone()))?.is_valid() {
                        out.push(i);
                    }
                }
                return Ok(out);
            }
        }
    }
}

/// Prune to the atoms `phi` entails, then conjoin, for each countermodel of
/// `chi => phi`, the pruned atoms it falsifies. The countermodel is grown
/// until its set of true atoms is maximal, so every atom conjoined lies in all
/// implicants whenever the intersection of implicants is itself one.
pub fn find_weakest_implicant(
    s: &mut Session,
    task: &PipelineTask,
    universe: &[Term],
    phi: &Term,
) -> Result<Implicant, ImplicantError> {
    let mut vars: BTreeSet<Var> = phi.free_vars();
    for u in universe {
        vars.extend(u.free_vars());
    }
    let cx = Ctx { task, universe, vars: vars.into_iter().collect() };
    let all: Vec<usize> = (0..universe.len()).collect();
    if !s.check_valid_over(&implies(cx.conj(&all), phi.clone()), &cx.vars)?.is_valid() {
        return Err(ImplicantError::Insufficient);
    }
    let pruned = entailed(s, &cx, phi, (0..universe.len()).collect())?;
    let mut chi: BTreeSet<usize> = BTreeSet::new();
    loop {
        let chi_v: Vec<usize> = chi.iter().copied().collect();
        let base = and_all([cx.conj(&chi_v), not(phi.clone())]);
        let Some(mut m) = cx.model(s, base.clone())? else {
            // unsat: chi entails phi; undecided: stop with what we have
            let done = s.check_valid(&implies(cx.conj(&chi_v), phi.clone()))?.is_valid();
            return Ok(Implicant { atoms: chi_v, complete: done });
        };
        loop {
            let (t, f): (Vec<usize>, Vec<usize>) = pruned.iter().partition(|&&i| cx.holds(i, &m));
            if f.is_empty() {
                break;
            }
            let grow = and_all([base.clone(), cx.conj(&t), or_all(f.iter().map(|&i| universe[i].clone()))]);
            match cx.model(s, grow)? {
                Some(m2) => m = m2,
                None => break,
            }
        }
        let falsified: Vec<usize> = pruned.iter().copied().filter(|&i| !cx.holds(i, &m)).collect();
        if falsified.is_empty() {
            return Ok(Implicant { atoms: chi_v, complete: false });
        }
        chi.extend(falsified);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse, parse_atom, typecheck};
    use crate::smt::SolverConfig;

    fn int_task() -> PipelineTask {
        let src = "x = (int, int,)\nI : (int,) = (0,)\nagg = fold(x, I, lambda a, r: (a[0] + r[0],))\nout = filter(agg, lambda a: a[0] > 0)\n";
        typecheck(&parse(src).unwrap()).unwrap()
    }

    fn run(u: &[&str], phi: &str) -> Implicant {
        let t = int_task();
        let mut s = Session::start(&SolverConfig::default(), &t).unwrap();
        let u: Vec<Term> = u.iter().map(|a| parse_atom(&t, a).unwrap()).collect();
        find_weakest_implicant(&mut s, &t, &u, &parse_atom(&t, phi).unwrap()).unwrap()
    }

    #[test]
    fn insufficient_universe_is_reported() {
        let t = int_task();
        let mut s = Session::start(&SolverConfig::default(), &t).unwrap();
        let u = vec![parse_atom(&t, "r[0] > 0").unwrap()];
        let phi = parse_atom(&t, "r[0] > 1").unwrap();
        assert!(matches!(find_weakest_implicant(&mut s, &t, &u, &phi), Err(ImplicantError::Insufficient)));
    }

    #[test]
    fn identity() {
        assert_eq!(run(&["r[0] > 0"], "r[0] > 0"), Implicant { atoms: vec![0], complete: true });
    }

    #[test]
    fn interval_prunes_hole() {
        let got = run(&["r[0] > 0", "r[0] < 10", "not r[0] == 5"], "r[0] > 0 and r[0] < 10");
        assert_eq!(got, Implicant { atoms: vec![0, 1], complete: true });
    }

    #[test]
    fn weaker_entailed_atom_is_not_conjoined() {
        // every model of not(r0 > 5) with r0 <= 0 also falsifies r0 > 0; growing
        // the model avoids conjoining it
        let got = run(&["r[0] > 5", "r[0] > 0"], "r[0] > 5");
        assert_eq!(got, Implicant { atoms: vec![0], complete: true });
    }

    #[test]
    fn stalls_when_pruned_universe_is_too_weak() {
        // {r0 > 0} is the only implicant, but the target does not entail it
        let got = run(&["r[0] > 0"], "r[0] > 0 or r[1] > 0");
        assert_eq!(got, Implicant { atoms: vec![], complete: false });
    }
}
