//! Random values biased toward the constants a task mentions.

use crate::dsl::PipelineTask;
use crate::term::Term;
use crate::value::{Ty, Value};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

pub struct ValueGen {
    pub rng: ChaCha8Rng,
    ints: Vec<BigInt>,
    reals: Vec<BigRational>,
    labels: Vec<String>,
    /// Whether generated floats may be `-inf`.
    pub neg_inf: bool,
    /// Longest generated list.
    pub max_list: usize,
}

impl ValueGen {
    pub fn new(task: &PipelineTask, rng: ChaCha8Rng) -> ValueGen {
        ValueGen::with_terms(task, &[], rng)
    }

    /// Pools hold every numeric constant of the task and of `extra`, values
    /// just beside each, and the midpoint of each adjacent pair.
    pub fn with_terms(task: &PipelineTask, extra: &[Term], rng: ChaCha8Rng) -> ValueGen {
        let mut nums = BTreeSet::new();
        let mut collect = |t: &Term| {
            t.walk(&mut |x| {
                if let Term::Lit(v, _) = x {
                    match v {
                        Value::Int(n) => {
                            nums.insert(BigRational::from_integer(n.clone()));
                        }
                        Value::Real(r) => {
                            nums.insert(r.clone());
                        }
                        _ => {}
                    }
                }
            })
        };
        collect(&task.body);
        collect(&task.post);
        for t in extra {
            collect(t);
        }
        for (v, _) in task.consts.values() {
            collect(&Term::Lit(v.clone(), Ty::Bool));
        }
        nums.insert(BigRational::from_integer(0.into()));
        let mut ints = BTreeSet::new();
        let mut reals = BTreeSet::new();
        let half = BigRational::new(1.into(), 2.into());
        let one = BigRational::from_integer(1.into());
        let sorted: Vec<BigRational> = nums.iter().cloned().collect();
        for w in sorted.windows(2) {
            let mid = (&w[0] + &w[1]) / BigRational::from_integer(2.into());
            reals.insert(mid.clone());
            ints.insert(mid.floor().to_integer());
        }
        for n in &nums {
            for d in [-one.clone(), -half.clone(), BigRational::from_integer(0.into()), half.clone(), one.clone()] {
                reals.insert(n + d);
            }
            let f = n.floor().to_integer();
            for d in -1..=1 {
                ints.insert(&f + d);
            }
            ints.insert(n.ceil().to_integer());
        }
        let mut labels: Vec<String> = task.strings.iter().cloned().collect();
        labels.push("zz-unlisted".into());
        ValueGen {
            rng,
            ints: ints.into_iter().collect(),
            reals: reals.into_iter().collect(),
            labels,
            neg_inf: task.uses_neg_inf,
            max_list: 3,
        }
    }

    pub fn gen(&mut self, ty: &Ty) -> Value {
        match ty {
            Ty::Bool => Value::Bool(self.rng.gen()),
            Ty::Int => {
                if self.rng.gen_bool(0.6) {
                    Value::Int(self.ints.choose(&mut self.rng).unwrap().clone())
                } else {
                    Value::int(self.rng.gen_range(-20..=120))
                }
            }
            Ty::Float => {
                if self.neg_inf && self.rng.gen_bool(0.1) {
                    Value::NegInf
                } else if self.rng.gen_bool(0.6) {
                    Value::Real(self.reals.choose(&mut self.rng).unwrap().clone())
                } else {
                    Value::real(self.rng.gen_range(-200..=2400), self.rng.gen_range(1..=2))
                }
            }
            Ty::Str => Value::Str(self.labels.choose(&mut self.rng).unwrap().clone()),
            Ty::Opt(t) => {
                if self.rng.gen_bool(0.3) {
                    Value::None
                } else {
                    Value::some(self.gen(t))
                }
            }
            Ty::List(t) => {
                let n = self.rng.gen_range(0..=self.max_list);
                Value::List((0..n).map(|_| self.gen(t)).collect())
            }
            Ty::Tuple(ts) => Value::Tuple(ts.iter().map(|t| self.gen(t)).collect()),
        }
    }

    /// A row: like `gen`, but never `-inf`.
    pub fn gen_row(&mut self, ty: &Ty) -> Value {
        let keep = self.neg_inf;
        self.neg_inf = false;
        let v = self.gen(ty);
        self.neg_inf = keep;
        v
    }
}
