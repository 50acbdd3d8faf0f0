//! Seeded trace generators for benchmarks and tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::trace::{Step, Trace};

#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorKind {
    /// Every proposition holds with probability one half at every position.
    Random { aps: Vec<String> },
    /// Copies of one base trace with every proposition bit flipped with
    /// probability `flip`. The base is random unless `empty_base` is set.
    Perturbed {
        aps: Vec<String>,
        flip: f64,
        empty_base: bool,
    },
    /// Random input `i`; output `o` repeats the input from `c` steps earlier
    /// (false before that), with each output bit flipped with probability
    /// `noise`. Without noise the traces satisfy the formula for every `n`.
    BoundedObsDet { n: u32, c: u32, noise: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub count: usize,
    pub length: usize,
    pub seed: u64,
}

fn random_step(rng: &mut ChaCha8Rng, aps: &[String], p: f64) -> Step {
    aps.iter().filter(|_| rng.gen_bool(p)).cloned().collect()
}

impl GeneratorSpec {
    pub fn generate(&self) -> Vec<Trace> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        match &self.kind {
            GeneratorKind::Random { aps } => (0..self.count)
                .map(|id| {
                    let steps = (0..self.length).map(|_| random_step(&mut rng, aps, 0.5)).collect();
                    Trace::new(id, steps)
                })
                .collect(),
            GeneratorKind::Perturbed {
                aps,
                flip,
                empty_base,
            } => {
                assert!((0.0..=1.0).contains(flip), "flip probability must lie in [0, 1]");
                let base: Vec<Step> = (0..self.length)
                    .map(|_| {
                        if *empty_base {
                            Step::empty()
                        } else {
                            random_step(&mut rng, aps, 0.5)
                        }
                    })
                    .collect();
                (0..self.count)
                    .map(|id| {
                        let steps = base
                            .iter()
                            .map(|s| {
                                aps.iter()
                                    .filter(|a| s.contains(a) != rng.gen_bool(*flip))
                                    .cloned()
                                    .collect()
                            })
                            .collect();
                        Trace::new(id, steps)
                    })
                    .collect()
            }
            GeneratorKind::BoundedObsDet { c, noise, .. } => {
                assert!((0.0..=1.0).contains(noise), "noise must lie in [0, 1]");
                let c = *c as usize;
                (0..self.count)
                    .map(|id| {
                        let mut inputs = Vec::with_capacity(self.length);
                        let steps = (0..self.length)
                            .map(|t| {
                                let i = rng.gen_bool(0.5);
                                inputs.push(i);
                                let delayed = t >= c && inputs[t - c];
                                let o = delayed != rng.gen_bool(*noise);
                                let mut s = Step::empty();
                                if i {
                                    s.insert("i");
                                }
                                if o {
                                    s.insert("o");
                                }
                                s
                            })
                            .collect();
                        Trace::new(id, steps)
                    })
                    .collect()
            }
        }
    }

    /// The formula text belonging to a generator, if it has one.
    pub fn formula(&self) -> Option<String> {
        match self.kind {
            GeneratorKind::BoundedObsDet { n, c, .. } => Some(bounded_obsdet_formula(n, c)),
            _ => None,
        }
    }
}

/// Equal inputs for the first `n` steps force equal outputs for the first `n + c`.
pub fn bounded_obsdet_formula(n: u32, c: u32) -> String {
    format!(
        "forall p1. forall p2. G[<{n}] (i[p1] <-> i[p2]) -> G[<{}] (o[p1] <-> o[p2])\n",
        n + c
    )
}
