//! Random implicant instances over integer row fields, with a grid oracle.
//!
//! Atoms compare one field of a three-int row against a constant in -3..=3,
//! so every truth assignment reachable over the integers is already reached
//! on -4..=4 in each field. Brute force over that grid is therefore exact.

use pushdown::dsl::parse_atom;
use pushdown::PipelineTask;
use pushdown::Term;
use rand::seq::SliceRandom;
use rand::Rng;

pub const SRC: &str = "\
x = (int, int, int,)
I : (int,) = (0,)
s = fold(x, I, lambda a, r: (a[0] + r[0],))
out = filter(s, lambda a: a[0] > 0)
";

const OPS: [&str; 6] = ["<", "<=", ">", ">=", "==", "!="];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Atom {
    pub field: usize,
    pub op: usize,
    pub c: i64,
}

impl Atom {
    fn random(rng: &mut impl Rng) -> Atom {
        Atom { field: rng.gen_range(0..3), op: rng.gen_range(0..OPS.len()), c: rng.gen_range(-3..=3) }
    }

    pub fn holds(&self, p: &[i64; 3]) -> bool {
        let x = p[self.field];
        match OPS[self.op] {
            "<" => x < self.c,
            "<=" => x <= self.c,
            ">" => x > self.c,
            ">=" => x >= self.c,
            "==" => x == self.c,
            _ => x != self.c,
        }
    }

    pub fn source(&self) -> String {
        match OPS[self.op] {
            "!=" => format!("not r[{}] == {}", self.field, self.c),
            op => format!("r[{}] {op} {}", self.field, self.c),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Formula {
    Atom(Atom),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn holds(&self, p: &[i64; 3]) -> bool {
        match self {
            Formula::Atom(a) => a.holds(p),
            Formula::Not(f) => !f.holds(p),
            Formula::And(f, g) => f.holds(p) && g.holds(p),
            Formula::Or(f, g) => f.holds(p) || g.holds(p),
        }
    }

    pub fn source(&self) -> String {
        match self {
            Formula::Atom(a) => format!("({})", a.source()),
            Formula::Not(f) => format!("(not {})", f.source()),
            Formula::And(f, g) => format!("({} and {})", f.source(), g.source()),
            Formula::Or(f, g) => format!("({} or {})", f.source(), g.source()),
        }
    }

    fn random(rng: &mut impl Rng, u: &[Atom], depth: usize) -> Formula {
        if depth == 0 || rng.gen_bool(0.3) {
            let a = if rng.gen_bool(0.6) { *u.choose(rng).unwrap() } else { Atom::random(rng) };
            return Formula::Atom(a);
        }
        let sub = |rng: &mut _| Box::new(Formula::random(rng, u, depth - 1));
        match rng.gen_range(0..5) {
            0 => Formula::Not(sub(rng)),
            1 | 2 => Formula::And(sub(rng), sub(rng)),
            _ => Formula::Or(sub(rng), sub(rng)),
        }
    }
}

pub struct Instance {
    pub u: Vec<Atom>,
    pub phi: Formula,
}

/// `phi = G or (conjunction of a few universe atoms)`, so the whole universe
/// entails it.
pub fn instance(rng: &mut impl Rng) -> Instance {
    let n = rng.gen_range(1..=12);
    let mut u: Vec<Atom> = Vec::new();
    while u.len() < n {
        let a = Atom::random(rng);
        if !u.contains(&a) {
            u.push(a);
        }
    }
    let g = Formula::random(rng, &u, 3);
    let k = rng.gen_range(1..=u.len().min(3));
    let mut s = u.choose_multiple(rng, k).copied();
    let first = Formula::Atom(s.next().unwrap());
    let conj = s.fold(first, |acc, a| Formula::And(Box::new(acc), Box::new(Formula::Atom(a))));
    Instance { u, phi: Formula::Or(Box::new(g), Box::new(conj)) }
}

fn grid() -> impl Iterator<Item = [i64; 3]> {
    (-4..=4).flat_map(|x| (-4..=4).flat_map(move |y| (-4..=4).map(move |z| [x, y, z])))
}

pub struct Expected {
    /// Atoms `phi` entails.
    pub pruned: Vec<usize>,
    /// Intersection of the implicants drawn from the pruned atoms; `None`
    /// when even all of them together miss `phi`.
    pub pruned_intersection: Option<Vec<usize>>,
    /// That intersection is itself an implicant.
    pub pruned_closed: bool,
    /// Intersection of the implicants over the whole universe.
    pub full_intersection: Vec<usize>,
}

fn bits(n: usize, m: u32) -> Vec<usize> {
    (0..n).filter(|&i| m & 1 << i != 0).collect()
}

/// Enumerate every subset of the universe and intersect the implicants.
pub fn brute_force(inst: &Instance) -> Expected {
    let n = inst.u.len();
    let mask = |p: &[i64; 3]| (0..n).filter(|&i| inst.u[i].holds(p)).fold(0u32, |m, i| m | 1 << i);
    let (mut bad, mut pruned) = (Vec::new(), (1u32 << n) - 1);
    for p in grid() {
        if inst.phi.holds(&p) {
            pruned &= mask(&p);
        } else {
            bad.push(mask(&p));
        }
    }
    let implies = |c: u32| bad.iter().all(|&m| m & c != c);
    let intersect = |within: u32| {
        let mut inter = None;
        for c in 0..=within {
            if c & within == c && implies(c) {
                inter = Some(inter.unwrap_or(within) & c);
            }
        }
        inter
    };
    let full = intersect((1u32 << n) - 1).expect("universe entails phi");
    let inter = intersect(pruned);
    Expected {
        pruned: bits(n, pruned),
        pruned_intersection: inter.map(|m| bits(n, m)),
        pruned_closed: inter.is_some_and(implies),
        full_intersection: bits(n, full),
    }
}

pub fn terms(task: &PipelineTask, inst: &Instance) -> (Vec<Term>, Term) {
    let u = inst.u.iter().map(|a| parse_atom(task, &a.source()).unwrap()).collect();
    (u, parse_atom(task, &inst.phi.source()).unwrap())
}
