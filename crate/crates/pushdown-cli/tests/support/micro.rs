//! Small pushdown tasks whose universes fit the exhaustive search.
//!
//! Each template is a one-field fold with a random threshold. The analysed
//! universes are extended with nearby comparisons on the same field, and the
//! invariant universe is cut to ten atoms, keeping whatever the synthesizer
//! used on the full one so the instances stay non-trivial.

use pushdown::analysis::{build_universes, PredicateUniverse};
use pushdown::dsl::parse_atom;
use pushdown::smt::{Session, SolverConfig};
use pushdown::synth::synthesize;
use pushdown::{parse, typecheck, PipelineTask};
use rand::seq::SliceRandom;
use rand::Rng;

pub const CAP_Q: usize = 4;
pub const CAP_RES: usize = 4;
pub const CAP_PSI: usize = 10;

pub struct Micro {
    pub name: String,
    pub task: PipelineTask,
    pub u: PredicateUniverse,
}

fn lit(c: i64, float: bool) -> String {
    if float {
        format!("{c}.0")
    } else {
        c.to_string()
    }
}

/// (name, source, float field, threshold).
fn template(k: usize, rng: &mut impl Rng) -> (String, String, bool, i64) {
    let c: i64 = rng.gen_range(1..=9);
    let head = |ty: &str, init: &str| format!("x = ({ty},)\nI : ({ty},) = ({init},)\n");
    let (name, body, float) = match k % 8 {
        0 => ("max", format!("{}m = fold(x, I, lambda a, r: (r[0],) if r[0] > a[0] else a)\nout = filter(m, lambda a: a[0] > {c}.0)\n", head("float", "-inf")), true),
        1 => ("min", format!("{}m = fold(x, I, lambda a, r: (r[0],) if r[0] < a[0] else a)\nout = filter(m, lambda a: a[0] < {c})\n", head("int", "1000")), false),
        2 => ("half_max", format!("{}m = fold(x, I, lambda a, r: (r[0] * 0.5,) if r[0] * 0.5 > a[0] else a)\nout = filter(m, lambda a: a[0] >= {c}.0)\n", head("float", "-inf")), true),
        3 => ("count", format!("{}m = fold(x, I, lambda a, r: (a[0] + 1,))\nout = filter(m, lambda a: a[0] > {c})\n", head("int", "0")), false),
        4 => {
            let d: i64 = rng.gen_range(-3..=3);
            ("count_if", format!("{}m = fold(x, I, lambda a, r: (a[0] + 1,) if r[0] > {d} else a)\nout = filter(m, lambda a: a[0] > {})\n", head("int", "0"), c % 4), false)
        }
        5 => ("sum_pos", format!("{}m = fold(x, I, lambda a, r: (a[0] + r[0],) if r[0] > 0 else a)\nout = filter(m, lambda a: a[0] > {c})\n", head("int", "0")), false),
        6 => ("last", format!("{}m = fold(x, I, lambda a, r: (r[0],))\nout = filter(m, lambda a: a[0] > {c})\n", head("int", "0")), false),
        _ => ("max_band", format!("{}m = fold(x, I, lambda a, r: (r[0],) if r[0] > a[0] else a)\nout = filter(m, lambda a: a[0] > {c}.0 and a[0] < {}.0)\n", head("float", "-inf"), c + 10), true),
    };
    (format!("{name}_{k}"), body, float, c)
}

fn extend(task: &PipelineTask, atoms: &mut Vec<pushdown::Term>, cap: usize, var: &str, c: i64, float: bool, rng: &mut impl Rng) {
    let ops = [">", ">=", "<", "<=", "=="];
    let mut tries = 0;
    while atoms.len() < cap && tries < 50 {
        tries += 1;
        let src = format!("{var}[0] {} {}", ops.choose(rng).unwrap(), lit(c + rng.gen_range(-2..=2), float));
        let t = parse_atom(task, &src).unwrap();
        if !atoms.contains(&t) {
            atoms.push(t);
        }
    }
}

pub fn generate(k: usize, rng: &mut impl Rng) -> Micro {
    let (name, src, float, c) = template(k, rng);
    let task = typecheck(&parse(&src).unwrap()).unwrap().with_name(&name);
    let (_, mut u) = build_universes(&task);
    let q_extra = rng.gen_range(1..=CAP_Q).max(u.u_q.len());
    let res_extra = rng.gen_range(u.u_res.len().min(CAP_RES)..=CAP_RES);
    extend(&task, &mut u.u_q, q_extra, "r", c, float, rng);
    extend(&task, &mut u.u_res, res_extra, "a", c, float, rng);
    u.u_q.truncate(CAP_Q);
    u.u_res.truncate(CAP_RES);
    if u.u_psi.len() > CAP_PSI {
        let mut s = Session::start(&SolverConfig::default(), &task).unwrap();
        let (out, _) = synthesize(&mut s, &task, &u, false).unwrap();
        let mut keep: Vec<usize> = out.solution().map(|sol| sol.psi.clone()).unwrap_or_default();
        keep.shuffle(rng);
        keep.truncate(CAP_PSI);
        let mut rest: Vec<usize> = (0..u.u_psi.len()).filter(|i| !keep.contains(i)).collect();
        rest.shuffle(rng);
        keep.extend(rest.into_iter().take(CAP_PSI - keep.len()));
        keep.sort();
        u.u_psi = keep.into_iter().map(|i| u.u_psi[i].clone()).collect();
    }
    Micro { name, task, u }
}
