//! Random-dataframe check of the pushdown equation.

use super::gen::ValueGen;
use super::{both_sides, LiftResult};
use crate::dsl::PipelineTask;
use crate::term::Term;
use crate::value::Value;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Clone, Debug)]
pub struct DiffConfig {
    pub trials: usize,
    /// Dataframes have between 0 and `max_len` rows.
    pub max_len: usize,
    pub seed: u64,
    /// Stop after this many mismatches.
    pub keep: usize,
}

impl Default for DiffConfig {
    fn default() -> DiffConfig {
        DiffConfig { trials: 10_000, max_len: 8, seed: 0, keep: 5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Mismatch {
    pub rows: Vec<String>,
    pub original: String,
    pub optimized: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiffReport {
    pub trials: usize,
    pub mismatches: Vec<Mismatch>,
    pub seed: u64,
}

impl DiffReport {
    pub fn ok(&self) -> bool {
        self.mismatches.is_empty()
    }
}

fn show(r: &LiftResult) -> String {
    match r {
        LiftResult::Defined(v) => v.to_string(),
        LiftResult::Bottom => "⊥".into(),
    }
}

/// Sample dataframes from boundary-directed pools and compare
/// `Lift(P, F(x))` with `Lift(P', F(filter_Q(x)))`. Deterministic in the seed.
pub fn differential_check(task: &PipelineTask, q: &[Term], res: &[Term], cfg: &DiffConfig) -> DiffReport {
    let consts: Vec<Term> = q.iter().chain(res).cloned().collect();
    let mut g = ValueGen::with_terms(task, &consts, ChaCha8Rng::seed_from_u64(cfg.seed));
    let mut report = DiffReport { trials: 0, mismatches: Vec::new(), seed: cfg.seed };
    for _ in 0..cfg.trials {
        let n = g.rng.gen_range(0..=cfg.max_len);
        let rows: Vec<Value> = (0..n).map(|_| g.gen_row(&task.row_ty)).collect();
        report.trials += 1;
        let (original, optimized) = both_sides(task, q, res, &rows);
        if original != optimized {
            report.mismatches.push(Mismatch {
                rows: rows.iter().map(|r| r.to_string()).collect(),
                original: show(&original),
                optimized: show(&optimized),
            });
            if report.mismatches.len() >= cfg.keep {
                break;
            }
        }
    }
    report
}
