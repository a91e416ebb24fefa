//! A solver subprocess speaking SMT-LIB 2 over stdin/stdout.

use super::encode::{var_name, Encoder, DEFAULT_LIST_DEPTH};
use super::sexp::{self, Sexp};
use crate::dsl::PipelineTask;
use crate::exec::interp::Env;
use crate::term::{Term, Var};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::time::Instant;

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub path: PathBuf,
    /// Per-query timeout.
    pub timeout_ms: u64,
    pub seed: u64,
    pub smt_log: Option<PathBuf>,
    pub list_depth: usize,
    /// Cap on validity/satisfiability queries for the session.
    pub max_calls: u64,
    /// Wall-clock deadline for the session.
    pub deadline: Option<Instant>,
}

impl Default for SolverConfig {
    fn default() -> SolverConfig {
        SolverConfig {
            path: PathBuf::from("z3"),
            timeout_ms: 20_000,
            seed: 0,
            smt_log: None,
            list_depth: DEFAULT_LIST_DEPTH,
            max_calls: 20_000,
            deadline: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SmtError {
    #[error("cannot start solver `{0}`: {1}")]
    Spawn(String, String),
    #[error("solver handshake failed: {0}")]
    Handshake(String),
    #[error("solver i/o failure: {0}")]
    Io(String),
    #[error("solver rejected input: {0}")]
    Solver(String),
    #[error("unexpected solver output: {0}")]
    Protocol(String),
    #[error("budget exhausted: {0}")]
    Budget(&'static str),
}

/// A countermodel: values for the free variables of the refuted formula.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub env: Env,
}

impl Model {
    pub fn get(&self, v: Var) -> Option<&crate::value::Value> {
        self.env.get(v)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Valid,
    Invalid(Model),
    Unknown(String),
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid)
    }

    pub fn is_invalid(&self) -> bool {
        matches!(self, Verdict::Invalid(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SatResult {
    Sat,
    Unsat,
    Unknown(String),
}

pub struct Session {
    child: Child,
    stdin: ChildStdin,
    out: BufReader<ChildStdout>,
    log: Option<File>,
    pub enc: Encoder,
    cfg: SolverConfig,
    pub calls: u64,
    poisoned: bool,
}

impl Session {
    /// Spawn a solver with the task's datatypes and step function installed.
    pub fn start(cfg: &SolverConfig, task: &PipelineTask) -> Result<Session, SmtError> {
        let enc = Encoder::new(task.ctx(), task.uses_neg_inf, &task.strings, cfg.list_depth);
        let mut s = Session::spawn(cfg, enc)?;
        let mut prelude = s.enc.declarations();
        prelude.push(s.enc.define_step(&task.body));
        for cmd in prelude {
            s.send_ack(&cmd)?;
        }
        s.send("(set-option :print-success false)")?;
        Ok(s)
    }

    fn spawn(cfg: &SolverConfig, enc: Encoder) -> Result<Session, SmtError> {
        let path = cfg.path.display().to_string();
        let mut child = Command::new(&cfg.path)
            .args(["-in", "-smt2"])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| SmtError::Spawn(path.clone(), e.to_string()))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let out = BufReader::new(child.stdout.take().expect("piped stdout"));
        let log = match &cfg.smt_log {
            Some(p) => Some(
                File::options()
                    .create(true)
                    .append(true)
                    .open(p)
                    .map_err(|e| SmtError::Io(format!("{}: {e}", p.display())))?,
            ),
            None => None,
        };
        let mut s = Session { child, stdin, out, log, enc, cfg: cfg.clone(), calls: 0, poisoned: false };
        s.send("(set-option :print-success true)").map_err(|e| SmtError::Handshake(e.to_string()))?;
        for cmd in [
            "(set-option :produce-models true)".to_string(),
            format!("(set-option :random-seed {})", cfg.seed),
            "(set-logic ALL)".to_string(),
            format!("(set-option :timeout {})", cfg.timeout_ms),
        ] {
            match s.read_line() {
                Ok(l) if l == "success" => {}
                Ok(l) => return Err(SmtError::Handshake(l)),
                Err(e) => return Err(SmtError::Handshake(e.to_string())),
            }
            s.send(&cmd).map_err(|e| SmtError::Handshake(e.to_string()))?;
        }
        match s.read_line() {
            Ok(l) if l == "success" => Ok(s),
            Ok(l) => Err(SmtError::Handshake(l)),
            Err(e) => Err(SmtError::Handshake(e.to_string())),
        }
    }

    pub fn is_poisoned(&self) -> bool {
        self.poisoned
    }

    fn logln(&mut self, prefix: &str, line: &str) {
        if let Some(f) = &mut self.log {
            let _ = writeln!(f, "{prefix}{line}");
        }
    }

    fn send(&mut self, cmd: &str) -> Result<(), SmtError> {
        if self.poisoned {
            return Err(SmtError::Io("session poisoned by an earlier failure".into()));
        }
        self.logln("", cmd);
        let r = writeln!(self.stdin, "{cmd}").and_then(|_| self.stdin.flush());
        r.map_err(|e| {
            self.poisoned = true;
            SmtError::Io(e.to_string())
        })
    }

    fn send_ack(&mut self, cmd: &str) -> Result<(), SmtError> {
        self.send(cmd)?;
        let l = self.read_line()?;
        if l == "success" {
            Ok(())
        } else {
            Err(SmtError::Solver(format!("{l} (in `{cmd}`)")))
        }
    }

    fn read_line(&mut self) -> Result<String, SmtError> {
        let mut line = String::new();
        let n = self.out.read_line(&mut line).map_err(|e| {
            self.poisoned = true;
            SmtError::Io(e.to_string())
        })?;
        if n == 0 {
            self.poisoned = true;
            return Err(SmtError::Io("solver exited".into()));
        }
        let line = line.trim_end().to_string();
        self.logln("; <- ", &line);
        Ok(line)
    }

    fn read_sexp(&mut self) -> Result<Sexp, SmtError> {
        let mut buf = self.read_line()?;
        while sexp::depth_delta(&buf) > 0 {
            buf.push('\n');
            buf.push_str(&self.read_line()?);
        }
        sexp::parse(&buf).map_err(SmtError::Protocol)
    }

    fn charge(&mut self) -> Result<(), SmtError> {
        if self.calls >= self.cfg.max_calls {
            return Err(SmtError::Budget("solver call cap reached"));
        }
        if self.cfg.deadline.is_some_and(|d| Instant::now() >= d) {
            return Err(SmtError::Budget("wall-clock limit reached"));
        }
        self.calls += 1;
        Ok(())
    }

    /// `(check-sat)` after the commands already sent; errors printed on the way
    /// are collected.
    fn check_sat(&mut self) -> Result<SatResult, SmtError> {
        self.check_sat_with("(check-sat)")
    }

    fn check_sat_with(&mut self, cmd: &str) -> Result<SatResult, SmtError> {
        self.send(cmd)?;
        let mut errors = Vec::new();
        let res = loop {
            let l = self.read_line()?;
            match l.as_str() {
                "sat" => break SatResult::Sat,
                "unsat" => break SatResult::Unsat,
                "unknown" => break SatResult::Unknown(String::new()),
                _ if l.starts_with("(error") => errors.push(l),
                _ => return Err(SmtError::Protocol(l)),
            }
        };
        if !errors.is_empty() {
            self.send("(pop 1)")?;
            return Err(SmtError::Solver(errors.join("; ")));
        }
        if let SatResult::Unknown(_) = res {
            self.send("(get-info :reason-unknown)")?;
            let why = self.read_sexp()?;
            let reason = why.list().and_then(|xs| xs.get(1)).map(|x| match x {
                Sexp::Str(s) | Sexp::Atom(s) => s.clone(),
                other => other.to_string(),
            });
            let reason = match reason.as_deref() {
                Some("timeout") | Some("canceled") => "timeout".to_string(),
                Some(r) => format!("incomplete: {r}"),
                None => "incomplete".to_string(),
            };
            return Ok(SatResult::Unknown(reason));
        }
        Ok(res)
    }

    /// Decide validity of a closed-universal boolean formula over the task's
    /// variables. Each query runs in its own push/pop frame.
    pub fn check_valid(&mut self, f: &Term) -> Result<Verdict, SmtError> {
        self.check_valid_over(f, &[])
    }

    /// Like `check_valid`, with countermodels also assigning `extra`.
    pub fn check_valid_over(&mut self, f: &Term, extra: &[Var]) -> Result<Verdict, SmtError> {
        self.charge()?;
        let mut vars = f.free_vars();
        vars.extend(extra.iter().copied());
        let vars: Vec<Var> = vars.into_iter().collect();
        self.send("(push 1)")?;
        for v in &vars {
            let sort = self.enc.sort(self.enc.ctx.var(*v));
            self.send(&format!("(declare-const {} {sort})", var_name(*v)))?;
            if *v == Var::Row {
                if let Some(c) = self.enc.finite(var_name(*v), &self.enc.ctx.row) {
                    self.send(&format!("(assert {c})"))?;
                }
            }
        }
        let body = self.enc.formula(f, &|v| var_name(v).to_string());
        self.send(&format!("(assert (not {body}))"))?;
        let verdict = match self.check_sat()? {
            SatResult::Unsat => Verdict::Valid,
            SatResult::Unknown(r) => Verdict::Unknown(r),
            SatResult::Sat => {
                let mut env = Env::new();
                if !vars.is_empty() {
                    let names: Vec<&str> = vars.iter().map(|v| var_name(*v)).collect();
                    self.send(&format!("(get-value ({}))", names.join(" ")))?;
                    let reply = self.read_sexp()?;
                    let pairs = reply.list().ok_or_else(|| SmtError::Protocol(reply.to_string()))?;
                    for (v, pair) in vars.iter().zip(pairs) {
                        let val = pair
                            .list()
                            .and_then(|p| p.get(1))
                            .ok_or_else(|| SmtError::Protocol(pair.to_string()))?;
                        let ty = self.enc.ctx.var(*v).clone();
                        env.set(*v, self.enc.decode(val, &ty).map_err(SmtError::Protocol)?);
                    }
                }
                Verdict::Invalid(Model { env })
            }
        };
        self.send("(pop 1)")?;
        Ok(verdict)
    }

    /// Satisfiability of raw commands (declarations and assertions) in a
    /// frame, with the values of `exprs` on sat.
    /// The check runs the non-incremental core: inside a push frame the
    /// incremental one gives up on quantified queries it otherwise solves.
    pub fn check_sat_values(&mut self, commands: &[String], exprs: &[String]) -> Result<(SatResult, Vec<Sexp>), SmtError> {
        self.charge()?;
        self.send("(push 1)")?;
        for c in commands {
            self.send(c)?;
        }
        let r = self.check_sat_with("(check-sat-using smt)")?;
        let mut vals = Vec::new();
        if matches!(r, SatResult::Sat) && !exprs.is_empty() {
            self.send(&format!("(get-value ({}))", exprs.join(" ")))?;
            let reply = self.read_sexp()?;
            for pair in reply.list().ok_or_else(|| SmtError::Protocol(reply.to_string()))? {
                let v = pair.list().and_then(|p| p.get(1)).ok_or_else(|| SmtError::Protocol(pair.to_string()))?;
                vals.push(v.clone());
            }
        }
        self.send("(pop 1)")?;
        Ok((r, vals))
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        if !self.poisoned {
            let _ = writeln!(self.stdin, "(exit)");
            let _ = self.stdin.flush();
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
