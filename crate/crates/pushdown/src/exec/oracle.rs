//! Exhaustive reference search over small universes.
//!
//! Pre-filters leave in the synthesizer's order (larger first, then the
//! lexicographically least index list). For each one the largest inductive
//! invariant is found by trying subsets from the top down; since a conjunction
//! of inductive invariants is inductive, the first hit is the unique maximum
//! and any residual that works at all works with it. Residuals are then tried
//! smallest first.

use crate::analysis::PredicateUniverse;
use crate::dsl::PipelineTask;
use crate::smt::{Session, SmtError, Verdict};
use crate::term::{and_all, Term, Var};
use crate::vcgen::VcGen;
use itertools::Itertools;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleCaps {
    pub q: usize,
    pub residual: usize,
    pub psi: usize,
}

impl Default for OracleCaps {
    fn default() -> OracleCaps {
        OracleCaps { q: 6, residual: 6, psi: 10 }
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("universe {which} has {size} atoms, cap is {cap}")]
    CapExceeded { which: &'static str, size: usize, cap: usize },
    #[error(transparent)]
    Smt(#[from] SmtError),
    #[error("undecided {0} query")]
    Undecided(&'static str),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleSolution {
    pub q: Vec<usize>,
    pub residual: Vec<usize>,
    pub psi: Vec<usize>,
}

/// Subsets of `items` of every size from `hi` down to `lo` (or up, when
/// `ascending`), each size in lexicographic order.
fn subsets(items: &[usize], ascending: bool) -> Vec<Vec<usize>> {
    let sizes: Vec<usize> = if ascending { (0..=items.len()).collect() } else { (0..=items.len()).rev().collect() };
    sizes.into_iter().flat_map(|k| items.iter().copied().combinations(k)).collect()
}

fn pick(u: &[Term], ix: &[usize]) -> Vec<Term> {
    ix.iter().map(|&i| u[i].clone()).collect()
}

fn valid(s: &mut Session, f: &Term, what: &'static str) -> Result<bool, OracleError> {
    match s.check_valid_over(f, &[Var::Acc1, Var::Acc2, Var::Row])? {
        Verdict::Valid => Ok(true),
        Verdict::Invalid(_) => Ok(false),
        Verdict::Unknown(_) => Err(OracleError::Undecided(what)),
    }
}

fn cap(which: &'static str, size: usize, cap: usize) -> Result<(), OracleError> {
    if size > cap {
        return Err(OracleError::CapExceeded { which, size, cap });
    }
    Ok(())
}

/// The first certified `(Q, P', ψ)` in synthesis order, `Q = ∅` included;
/// `None` when not even the empty pre-filter admits a residual.
pub fn brute_force_optimal(
    s: &mut Session,
    task: &PipelineTask,
    u: &PredicateUniverse,
    caps: OracleCaps,
) -> Result<Option<OracleSolution>, OracleError> {
    cap("U_Q", u.u_q.len(), caps.q)?;
    cap("U_residual", u.u_res.len(), caps.residual)?;
    cap("U_psi", u.u_psi.len(), caps.psi)?;
    let vc = VcGen::new(task, s)?;
    let mut init_ok = Vec::new();
    for (i, p) in u.u_psi.iter().enumerate() {
        if valid(s, &vc.init(std::slice::from_ref(p)), "Init")? {
            init_ok.push(i);
        }
    }
    let all_q: Vec<usize> = (0..u.u_q.len()).collect();
    let all_res: Vec<usize> = (0..u.u_res.len()).collect();
    for q in subsets(&all_q, false) {
        let qt = pick(&u.u_q, &q);
        let mut psi = None;
        for cand in subsets(&init_ok, false) {
            let pt = pick(&u.u_psi, &cand);
            if valid(s, &and_all([vc.sync(&pt, &qt, &pt), vc.stutter(&pt, &qt, &pt)]), "Sync/Stutter")? {
                psi = Some(cand);
                break;
            }
        }
        // the empty invariant is always inductive
        let psi = psi.expect("empty invariant");
        let pt = pick(&u.u_psi, &psi);
        for res in subsets(&all_res, true) {
            if valid(s, &vc.final_vc(&pt, &pick(&u.u_res, &res)), "Final")? {
                return Ok(Some(OracleSolution { q, residual: res, psi }));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_atom;
    use crate::fixtures::load;
    use crate::smt::SolverConfig;

    fn universe(t: &PipelineTask, q: &[&str], res: &[&str], psi: &[&str]) -> PredicateUniverse {
        let atoms = |xs: &[&str]| xs.iter().map(|x| parse_atom(t, x).unwrap()).collect();
        PredicateUniverse { u_q: atoms(q), u_res: atoms(res), u_psi: atoms(psi), dropped: vec![] }
    }

    #[test]
    fn subset_order() {
        assert_eq!(subsets(&[0, 1], false), vec![vec![0, 1], vec![0], vec![1], vec![]]);
        assert_eq!(subsets(&[3, 5], true), vec![vec![], vec![3], vec![5], vec![3, 5]]);
    }

    #[test]
    fn top2_two_atom_task() {
        let t = load("top2");
        let mut psi = crate::vcgen::tests::TOP2_INVARIANT.to_vec();
        psi.push("a1[0] == a2[0]");
        let u = universe(&t, &["r[0] > 90.0", "r[0] > 95.0"], &["not a[1] == -inf", "a[0] > 90.0"], &psi);
        let mut s = Session::start(&SolverConfig::default(), &t).unwrap();
        let sol = brute_force_optimal(&mut s, &t, &u, OracleCaps::default()).unwrap().unwrap();
        // both atoms together drop 92 in [92, 93]
        assert_eq!(sol.q, vec![0]);
        assert_eq!(sol.residual, vec![0]);
        assert_eq!(sol.psi, (0..7).collect::<Vec<_>>());
    }

    #[test]
    fn only_the_trivial_solution() {
        let t = load("top2");
        let post: Vec<String> = t.post_clauses.iter().map(|p| p.to_string()).collect();
        let post: Vec<&str> = post.iter().map(|x| x.as_str()).collect();
        let u = universe(&t, &["r[0] > 95.0"], &post, &["a1[0] == a2[0]", "a1[1] == a2[1]", "a1[0] > 95.0"]);
        let mut s = Session::start(&SolverConfig::default(), &t).unwrap();
        let sol = brute_force_optimal(&mut s, &t, &u, OracleCaps::default()).unwrap().unwrap();
        assert_eq!(sol, OracleSolution { q: vec![], residual: (0..post.len()).collect(), psi: vec![0, 1] });
    }

    #[test]
    fn missing_invariant_atoms_give_none() {
        let t = load("top2");
        let u = universe(&t, &["r[0] > 90.0"], &["not a[1] == -inf"], &["a1[0] > 90.0"]);
        let mut s = Session::start(&SolverConfig::default(), &t).unwrap();
        assert_eq!(brute_force_optimal(&mut s, &t, &u, OracleCaps::default()).unwrap(), None);
    }

    #[test]
    fn caps_are_enforced() {
        let t = load("top2");
        let u = universe(&t, &["r[0] > 1.0", "r[0] > 2.0"], &[], &[]);
        let mut s = Session::start(&SolverConfig::default(), &t).unwrap();
        let caps = OracleCaps { q: 1, ..OracleCaps::default() };
        assert!(matches!(
            brute_force_optimal(&mut s, &t, &u, caps),
            Err(OracleError::CapExceeded { which: "U_Q", size: 2, cap: 1 })
        ));
    }
}
