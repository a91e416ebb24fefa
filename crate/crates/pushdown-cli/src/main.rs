//! `pushdown-synth`: synthesize, check and fuzz predicate pushdowns for
//! fold-style UDF pipelines.

mod record;

use clap::{Parser, Subcommand};
use pushdown::analysis::build_universes;
use pushdown::bmc::{self, ScreenVerdict};
use pushdown::dsl::{parse, parse_atom, typecheck, PipelineTask};
use pushdown::exec::{differential_check, emit_rewritten, DiffConfig};
use pushdown::smt::{Session, SmtError, SolverConfig};
use pushdown::synth::{synthesize, FailReason, SynthOutcome};
use pushdown::term::Term;
use pushdown::vcgen::{check_witness, classify_mode, VcGen, WitnessCheck};
use record::{DiffSummary, ResultRecord, Status, Summary, TraceLine, Triple};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

/// Wall-clock budget for one synthesis task.
const TASK_BUDGET: Duration = Duration::from_secs(600);

#[derive(Parser, Debug)]
#[command(name = "pushdown-synth", version, about = "Optimal predicate pushdown through fold UDFs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// SMT solver executable (SMT-LIB 2 on stdin).
    #[arg(long, global = true, default_value = "z3")]
    solver: PathBuf,
    /// Per-query solver timeout.
    #[arg(long, global = true, default_value_t = 20_000, value_parser = clap::value_parser!(u64).range(1..))]
    timeout_ms: u64,
    /// Seed for the solver and the fuzzer.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Rows in the bounded screen.
    #[arg(long, global = true, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..=bmc::MAX_ROWS as u64))]
    bmc_rows: u64,
    /// Write records here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Attach the predicate universes to each synth record.
    #[arg(long, global = true)]
    dump_universe: bool,
    /// Print each worklist event to stderr as a JSON line.
    #[arg(long, global = true)]
    trace: bool,
    /// Append the solver transcript to this file.
    #[arg(long, global = true)]
    smt_log: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Synthesize, re-check, fuzz and emit the rewritten pipeline.
    Synth {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Check a solution record against its task: TASK.pdsl SOLUTION.json pairs.
    Verify {
        #[arg(required = true, num_args = 2..)]
        files: Vec<PathBuf>,
    },
    /// Bounded feasibility screen.
    Screen {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Fuzz a solution record against its task: TASK.pdsl SOLUTION.json pairs.
    Diff {
        #[arg(required = true, num_args = 2..)]
        files: Vec<PathBuf>,
    },
    /// Synthesize every `.pdsl` file in the given directories and summarize.
    Bench {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
    },
}

/// Unreadable inputs are usage errors, not task failures.
struct Usage(String);

fn read(p: &Path) -> Result<String, Usage> {
    fs::read_to_string(p).map_err(|e| Usage(format!("{}: {e}", p.display())))
}

fn task_id(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| p.display().to_string())
}

fn load(p: &Path) -> Result<Result<PipelineTask, String>, Usage> {
    let src = read(p)?;
    let id = task_id(p);
    Ok(parse(&src)
        .and_then(|prog| typecheck(&prog))
        .map(|t| t.with_name(id))
        .map_err(|e| format!("{e}")))
}

fn pairs(files: &[PathBuf]) -> Result<Vec<(&PathBuf, &PathBuf)>, Usage> {
    if !files.len().is_multiple_of(2) {
        return Err(Usage("expected TASK.pdsl SOLUTION.json pairs".into()));
    }
    Ok(files.chunks(2).map(|c| (&c[0], &c[1])).collect())
}

fn shown(ts: &[Term]) -> Vec<String> {
    ts.iter().map(|t| t.to_string()).collect()
}

struct Runner {
    cli: Cli,
}

impl Runner {
    fn solver(&self, budget: bool) -> SolverConfig {
        SolverConfig {
            path: self.cli.solver.clone(),
            timeout_ms: self.cli.timeout_ms,
            seed: self.cli.seed,
            smt_log: self.cli.smt_log.clone(),
            deadline: budget.then(|| Instant::now() + TASK_BUDGET),
            ..SolverConfig::default()
        }
    }

    fn diff_cfg(&self) -> DiffConfig {
        DiffConfig { seed: self.cli.seed, ..DiffConfig::default() }
    }

    fn synth(&self, task: &PipelineTask) -> Result<ResultRecord, SmtError> {
        let (_, u) = build_universes(task);
        let mut s = Session::start(&self.solver(true), task)?;
        let (out, trace) = synthesize(&mut s, task, &u, self.cli.trace)?;
        if self.cli.trace {
            let mut err = std::io::stderr().lock();
            for e in &trace {
                let line = serde_json::to_string(&TraceLine { task: &task.name, event: e }).expect("trace serializes");
                let _ = writeln!(err, "{line}");
            }
        }
        let mut rec = match &out {
            SynthOutcome::Solved(sol) => {
                let report = differential_check(task, &sol.q_atoms, &sol.residual_atoms, &self.diff_cfg());
                let mut r = ResultRecord::new(&task.name, "synth", if report.ok() { Status::Solved } else { Status::Fail });
                if !report.ok() {
                    r.detail = Some("differential check found mismatches".into());
                }
                r.mode = Some(sol.mode.to_string());
                r.q_atoms = shown(&sol.q_atoms);
                r.residual_atoms = shown(&sol.residual_atoms);
                r.invariant_atoms = shown(&sol.psi_atoms);
                r.diff = Some(DiffSummary {
                    trials: report.trials,
                    mismatches: report.mismatches.len(),
                    seed: report.seed,
                    examples: report.mismatches,
                });
                r.rewritten = Some(emit_rewritten(task, &sol.q_atoms, &sol.residual_atoms));
                r
            }
            SynthOutcome::Failed(reason, _) => {
                let (status, detail) = match reason {
                    FailReason::Exhausted => (Status::Fail, "no pre-filter in the universe admits a pushdown".to_string()),
                    FailReason::Budget(what) => (Status::Budget, what.clone()),
                    FailReason::Witness(k) => (Status::Fail, format!("witness re-check failed at {k}")),
                    FailReason::Inconclusive(why) => (Status::Inconclusive, why.clone()),
                };
                let mut r = ResultRecord::new(&task.name, "synth", status);
                if let FailReason::Witness(k) = reason {
                    r.failed_vc = Some(k.to_string());
                }
                r.detail = Some(detail);
                r
            }
        };
        rec.stats = Some(out.stats().clone());
        if self.cli.dump_universe {
            rec.universe = Some(u.to_json());
        }
        Ok(rec)
    }

    fn triple(task: &PipelineTask, p: &Path) -> Result<Result<[Vec<Term>; 3], String>, Usage> {
        let t: Triple = match serde_json::from_str(&read(p)?) {
            Ok(t) => t,
            Err(e) => return Ok(Err(format!("{}: {e}", p.display()))),
        };
        let atoms = |xs: &[String]| -> Result<Vec<Term>, String> {
            xs.iter().map(|x| parse_atom(task, x).map_err(|e| format!("`{x}`: {e}"))).collect()
        };
        Ok((|| Ok([atoms(&t.q_atoms)?, atoms(&t.residual_atoms)?, atoms(&t.invariant_atoms)?]))())
    }

    fn verify(&self, task: &PipelineTask, [q, res, psi]: &[Vec<Term>; 3]) -> Result<ResultRecord, SmtError> {
        let mut s = Session::start(&self.solver(false), task)?;
        let vc = VcGen::new(task, &mut s)?;
        let verdict = check_witness(&mut s, &vc, q, res, psi)?;
        let mut r = ResultRecord::new(&task.name, "verify", Status::Solved);
        r.q_atoms = shown(q);
        r.residual_atoms = shown(res);
        r.invariant_atoms = shown(psi);
        match verdict {
            WitnessCheck::Certified => r.mode = Some(classify_mode(&mut s, task, res)?.to_string()),
            WitnessCheck::Failed(k, m) => {
                r.status = Status::Fail;
                r.failed_vc = Some(k.to_string());
                r.detail = Some(format!("countermodel: {}", m.env));
            }
            WitnessCheck::Inconclusive(k, why) => {
                r.status = Status::Inconclusive;
                r.failed_vc = Some(k.to_string());
                r.detail = Some(why);
            }
        }
        Ok(r)
    }

    fn diff(&self, task: &PipelineTask, [q, res, _]: &[Vec<Term>; 3]) -> ResultRecord {
        let report = differential_check(task, q, res, &self.diff_cfg());
        let mut r = ResultRecord::new(&task.name, "diff", if report.ok() { Status::Solved } else { Status::Fail });
        r.q_atoms = shown(q);
        r.residual_atoms = shown(res);
        r.diff = Some(DiffSummary {
            trials: report.trials,
            mismatches: report.mismatches.len(),
            seed: report.seed,
            examples: report.mismatches,
        });
        r
    }

    fn screen(&self, task: &PipelineTask) -> Result<ResultRecord, SmtError> {
        let mut s = Session::start(&self.solver(false), task)?;
        let v = bmc::screen(&mut s, task, self.cli.bmc_rows as usize)?;
        let mut r = ResultRecord::new(&task.name, "screen", Status::Solved);
        r.screen = Some(v.label());
        match v {
            ScreenVerdict::Feasible(w) => r.witness_row = Some(w.to_string()),
            ScreenVerdict::Infeasible => {}
            ScreenVerdict::Inconclusive(why) => {
                r.status = Status::Inconclusive;
                r.detail = Some(why);
            }
        }
        Ok(r)
    }

    fn run(&self) -> Result<Vec<ResultRecord>, Usage> {
        let mut out = Vec::new();
        let or_fail = |id: &str, cmd: &'static str, r: Result<ResultRecord, SmtError>| {
            r.unwrap_or_else(|e| ResultRecord::failed(id, cmd, e))
        };
        match &self.cli.cmd {
            Cmd::Synth { files } => {
                for f in files {
                    out.push(match load(f)? {
                        Ok(t) => or_fail(&t.name, "synth", self.synth(&t)),
                        Err(e) => ResultRecord::failed(&task_id(f), "synth", e),
                    });
                }
            }
            Cmd::Screen { files } => {
                for f in files {
                    out.push(match load(f)? {
                        Ok(t) => or_fail(&t.name, "screen", self.screen(&t)),
                        Err(e) => ResultRecord::failed(&task_id(f), "screen", e),
                    });
                }
            }
            Cmd::Verify { files } | Cmd::Diff { files } => {
                let verify = matches!(self.cli.cmd, Cmd::Verify { .. });
                let cmd = if verify { "verify" } else { "diff" };
                for (tf, sf) in pairs(files)? {
                    let rec = match load(tf)? {
                        Err(e) => ResultRecord::failed(&task_id(tf), cmd, e),
                        Ok(t) => match Self::triple(&t, sf)? {
                            Err(e) => ResultRecord::failed(&t.name, cmd, e),
                            Ok(tr) if verify => or_fail(&t.name, cmd, self.verify(&t, &tr)),
                            Ok(tr) => self.diff(&t, &tr),
                        },
                    };
                    out.push(rec);
                }
            }
            Cmd::Bench { dirs } => {
                let mut files = Vec::new();
                for d in dirs {
                    let entries = fs::read_dir(d).map_err(|e| Usage(format!("{}: {e}", d.display())))?;
                    for e in entries {
                        let p = e.map_err(|e| Usage(e.to_string()))?.path();
                        if p.extension().is_some_and(|x| x == "pdsl") {
                            files.push(p);
                        }
                    }
                }
                files.sort();
                for f in &files {
                    out.push(match load(f)? {
                        Ok(t) => or_fail(&t.name, "synth", self.synth(&t)),
                        Err(e) => ResultRecord::failed(&task_id(f), "synth", e),
                    });
                }
            }
        }
        Ok(out)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let bench = matches!(cli.cmd, Cmd::Bench { .. });
    let out_path = cli.out.clone();
    let runner = Runner { cli };
    let records = match runner.run() {
        Ok(r) => r,
        Err(Usage(msg)) => {
            eprintln!("pushdown-synth: {msg}");
            return ExitCode::from(2);
        }
    };
    let mut text = String::new();
    for r in &records {
        text.push_str(&serde_json::to_string(r).expect("record serializes"));
        text.push('\n');
    }
    if bench {
        let s = Summary::of(&records);
        eprint!("{}", s.table());
        text.push_str(&serde_json::to_string(&serde_json::json!({ "summary": s })).expect("summary serializes"));
        text.push('\n');
    }
    let written = match &out_path {
        Some(p) => fs::write(p, &text).map_err(|e| format!("{}: {e}", p.display())),
        None => std::io::stdout().lock().write_all(text.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        eprintln!("pushdown-synth: {e}");
        return ExitCode::from(2);
    }
    // an infeasible screen is an answer, not a failure
    if records.iter().all(|r| r.status == Status::Solved) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
