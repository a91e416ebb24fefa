//! Output records, one JSON object per line.

use pushdown::exec::diff::Mismatch;
use pushdown::synth::{Stats, TraceEvent};
use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Solved,
    Fail,
    Budget,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct DiffSummary {
    pub trials: usize,
    pub mismatches: usize,
    pub seed: u64,
    pub examples: Vec<Mismatch>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResultRecord {
    pub task: String,
    pub command: &'static str,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    pub q_atoms: Vec<String>,
    pub residual_atoms: Vec<String>,
    pub invariant_atoms: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stats: Option<Stats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_vc: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub screen: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_row: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diff: Option<DiffSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rewritten: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub universe: Option<Json>,
}

impl ResultRecord {
    pub fn new(task: &str, command: &'static str, status: Status) -> ResultRecord {
        ResultRecord {
            task: task.to_string(),
            command,
            status,
            mode: None,
            q_atoms: vec![],
            residual_atoms: vec![],
            invariant_atoms: vec![],
            stats: None,
            failed_vc: None,
            detail: None,
            screen: None,
            witness_row: None,
            diff: None,
            rewritten: None,
            universe: None,
        }
    }

    pub fn failed(task: &str, command: &'static str, detail: impl ToString) -> ResultRecord {
        ResultRecord { detail: Some(detail.to_string()), ..ResultRecord::new(task, command, Status::Fail) }
    }
}

/// The solution part of a record, as read back by `verify` and `diff`.
#[derive(Clone, Debug, Deserialize)]
pub struct Triple {
    #[serde(default)]
    pub q_atoms: Vec<String>,
    #[serde(default)]
    pub residual_atoms: Vec<String>,
    #[serde(default)]
    pub invariant_atoms: Vec<String>,
}

#[derive(Serialize)]
pub struct TraceLine<'a> {
    pub task: &'a str,
    #[serde(flatten)]
    pub event: &'a TraceEvent,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ModeCounts {
    pub exact: usize,
    pub partial: usize,
    pub split: usize,
    pub fail: usize,
}

/// Per-suite aggregates for `bench`.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Summary {
    pub tasks: usize,
    pub solved: usize,
    pub modes: ModeCounts,
    pub median_ms: f64,
    pub mean_ms: f64,
    pub avg_q: f64,
    pub avg_residual: f64,
    pub avg_invariant: f64,
    pub avg_solver_calls: f64,
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    match v.len() {
        0 => 0.0,
        n if n % 2 == 1 => v[n / 2],
        n => (v[n / 2 - 1] + v[n / 2]) / 2.0,
    }
}

impl Summary {
    /// Times cover every task; atom counts cover solved ones.
    pub fn of(records: &[ResultRecord]) -> Summary {
        let mut s = Summary { tasks: records.len(), ..Summary::default() };
        let times: Vec<f64> = records.iter().filter_map(|r| r.stats.as_ref()).map(|st| st.wall_ms as f64).collect();
        let solved: Vec<&ResultRecord> = records.iter().filter(|r| r.status == Status::Solved).collect();
        for r in records {
            match (r.status, r.mode.as_deref()) {
                (Status::Solved, Some("exact")) => s.modes.exact += 1,
                (Status::Solved, Some("partial")) => s.modes.partial += 1,
                (Status::Solved, Some("split")) => s.modes.split += 1,
                _ => s.modes.fail += 1,
            }
        }
        let avg = |f: &dyn Fn(&ResultRecord) -> usize| mean(&solved.iter().map(|r| f(r) as f64).collect::<Vec<_>>());
        s.solved = solved.len();
        s.median_ms = median(&times);
        s.mean_ms = mean(&times);
        s.avg_q = avg(&|r| r.q_atoms.len());
        s.avg_residual = avg(&|r| r.residual_atoms.len());
        s.avg_invariant = avg(&|r| r.invariant_atoms.len());
        s.avg_solver_calls =
            mean(&records.iter().filter_map(|r| r.stats.as_ref()).map(|st| st.solver_calls as f64).collect::<Vec<_>>());
        s
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        out.push_str("tasks  solved  exact  partial  split  fail  median_s  mean_s  |Q|   |P'|  |psi|\n");
        out.push_str(&format!(
            "{:<6} {:<7} {:<6} {:<8} {:<6} {:<5} {:<9.2} {:<7.2} {:<5.1} {:<5.1} {:.1}\n",
            self.tasks,
            self.solved,
            self.modes.exact,
            self.modes.partial,
            self.modes.split,
            self.modes.fail,
            self.median_ms / 1000.0,
            self.mean_ms / 1000.0,
            self.avg_q,
            self.avg_residual,
            self.avg_invariant
        ));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(median(&[]), 0.0);
    }

    #[test]
    fn summary_counts_modes() {
        let mut a = ResultRecord::new("a", "synth", Status::Solved);
        a.mode = Some("split".into());
        a.q_atoms = vec!["x".into(), "y".into()];
        a.stats = Some(Stats { wall_ms: 100, ..Stats::default() });
        let mut b = ResultRecord::new("b", "synth", Status::Fail);
        b.stats = Some(Stats { wall_ms: 300, ..Stats::default() });
        let s = Summary::of(&[a, b]);
        assert_eq!((s.tasks, s.solved, s.modes.split, s.modes.fail), (2, 1, 1, 1));
        assert_eq!((s.median_ms, s.avg_q), (200.0, 2.0));
    }
}
