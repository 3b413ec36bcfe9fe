use rand::seq::{index, SliceRandom};
use rand::Rng;

use super::{Decision, Policy};
use crate::error::{Error, Result};
use crate::seed;

/// Uniform random move drawn from the state-seeded PRNG.
pub fn jump_index(n: usize, state_seed: u64) -> usize {
    seed::rng(state_seed).random_range(0..n)
}

/// Best improvement; lowest index among exact ties; random jump when no
/// move strictly improves.
pub fn bhc_plus_act(deltas: &[f64], state_seed: u64) -> usize {
    let mut best: Option<(usize, f64)> = None;
    for (i, &d) in deltas.iter().enumerate() {
        let gain = -d;
        if gain > 0.0 && best.is_none_or(|(_, g)| gain > g) {
            best = Some((i, gain));
        }
    }
    match best {
        Some((i, _)) => i,
        None => jump_index(deltas.len(), state_seed),
    }
}

/// First improvement in a state-seeded random order; random jump when no
/// move strictly improves.
pub fn fhc_plus_act(deltas: &[f64], state_seed: u64) -> usize {
    let n = deltas.len();
    if deltas.iter().all(|&d| d >= 0.0) {
        return jump_index(n, state_seed);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(state_seed));
    order
        .into_iter()
        .find(|&i| deltas[i] < 0.0)
        .expect("an improving move exists")
}

/// How the `(1, λ)` strategy draws its sample of moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampling {
    #[default]
    WithoutReplacement,
    WithReplacement,
}

/// Best of `λ` moves drawn from the state-seeded PRNG, accepted even when
/// it deteriorates. The first drawn move wins exact ties.
pub fn one_comma_lambda_act(deltas: &[f64], lambda: usize, state_seed: u64) -> Result<usize> {
    one_comma_lambda_act_with(deltas, lambda, state_seed, Sampling::WithoutReplacement)
}

pub fn one_comma_lambda_act_with(deltas: &[f64], lambda: usize, state_seed: u64, sampling: Sampling) -> Result<usize> {
    let n = deltas.len();
    if lambda == 0 || lambda > n {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} must lie in 1..={n}")));
    }
    let mut rng = seed::rng(state_seed);
    let drawn: Vec<usize> = match sampling {
        Sampling::WithoutReplacement => index::sample(&mut rng, n, lambda).into_vec(),
        Sampling::WithReplacement => (0..lambda).map(|_| rng.random_range(0..n)).collect(),
    };
    let mut best = drawn[0];
    for &i in &drawn[1..] {
        if deltas[i] < deltas[best] {
            best = i;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BestImprovement;

impl Policy for BestImprovement {
    fn name(&self) -> String {
        "BHC+".into()
    }

    fn act(&self, d: &Decision<'_>) -> Result<usize> {
        Ok(bhc_plus_act(d.deltas, d.state_seed))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FirstImprovement;

impl Policy for FirstImprovement {
    fn name(&self) -> String {
        "FHC+".into()
    }

    fn act(&self, d: &Decision<'_>) -> Result<usize> {
        Ok(fhc_plus_act(d.deltas, d.state_seed))
    }
}

/// `(1, λ)` evolution strategy used as a local search move. `lambda` is
/// clamped to the instance size so one policy can run on any dimension.
#[derive(Debug, Clone, Copy)]
pub struct OneCommaLambda {
    pub lambda: usize,
    pub sampling: Sampling,
}

impl OneCommaLambda {
    pub fn new(lambda: usize) -> Self {
        Self {
            lambda,
            sampling: Sampling::WithoutReplacement,
        }
    }
}

impl Policy for OneCommaLambda {
    fn name(&self) -> String {
        format!("(1,{})-ES", self.lambda)
    }

    fn act(&self, d: &Decision<'_>) -> Result<usize> {
        let lambda = self.lambda.min(d.deltas.len());
        one_comma_lambda_act_with(d.deltas, lambda, d.state_seed, self.sampling)
    }
}
