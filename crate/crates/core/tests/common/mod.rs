//! Reference implementations shared by several test targets.
#![allow(dead_code)]

use neurols::cmaes::{cma_ask, cma_init, cma_tell};
use neurols::instances::{generate_puboi, Family, Instance, NkInstance, PuboiParams, QuboInstance};
use neurols::search::{Landscape, Solution};
use neurols::seed;
use rand::Rng;

/// NK fitness straight from the definition: contribution `i` looks up the
/// table entry addressed by `x_i` followed by its linked bits.
pub fn nk_oracle(inst: &NkInstance, x: &[bool]) -> f64 {
    let mut total = 0.0;
    for i in 0..inst.n() {
        let mut idx = x[i] as usize;
        for (j, &l) in inst.links()[i].iter().enumerate() {
            idx += (x[l] as usize) * (1 << (j + 1));
        }
        total += inst.tables()[i][idx];
    }
    total / inst.n() as f64
}

/// `Σ_i Σ_j q_ij x_i x_j` with a plain double loop over the dense matrix.
pub fn qubo_oracle(q: &QuboInstance, x: &[bool]) -> f64 {
    let n = q.n();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if x[i] && x[j] {
                s += q.dense()[i * n + j];
            }
        }
    }
    s
}

pub fn oracle(inst: &Instance, x: &[bool]) -> f64 {
    match inst {
        Instance::Nk(nk) => nk_oracle(nk, x),
        Instance::Qubo(q) => qubo_oracle(q, x),
    }
}

pub fn flipped(x: &[bool], i: usize) -> Vec<bool> {
    let mut y = x.to_vec();
    y[i] = !y[i];
    y
}

pub fn random_instance(r: &mut impl Rng, s: u64) -> Instance {
    if r.random_bool(0.5) {
        let n = r.random_range(2..48);
        let k = r.random_range(0..n.min(9));
        NkInstance::generate(n, k, s).unwrap().into()
    } else {
        let n = r.random_range(8..48);
        let fam = [Family::Uniform, Family::Important, Family::ImportantConcentrated][r.random_range(0..3)];
        let params = PuboiParams::from_family(n, r.random_range(0.1..0.5), fam);
        generate_puboi(&params, Some(fam), s).unwrap().into()
    }
}

/// Largest deviation between incremental and brute-force fitness or deltas
/// over `count` random (instance, solution) pairs.
pub fn max_oracle_error(count: u64, stream: u64) -> f64 {
    let mut r = seed::rng(stream);
    let mut worst: f64 = 0.0;
    for t in 0..count {
        let inst = random_instance(&mut r, seed::mix64(t));
        let n = inst.n();
        let x = seed::random_bits(n, seed::mix64(t ^ 0xabc));
        let f = oracle(&inst, &x);
        worst = worst.max((inst.evaluate(&x) - f).abs());
        let cache = inst.prepare(&x);
        let mut deltas = vec![0.0; n];
        inst.deltas_into(&x, &cache, &mut deltas);
        for i in 0..n {
            let expect = f - oracle(&inst, &flipped(&x, i));
            worst = worst.max((deltas[i] - expect).abs());
        }
    }
    worst
}

/// Walks every state of small NK instances in Gray-code order and returns
/// the largest fitness deviation from the oracle.
pub fn exhaustive_nk_error() -> f64 {
    let mut worst: f64 = 0.0;
    for (n, k) in [(1, 0), (4, 1), (8, 3), (10, 5), (12, 2), (12, 8)] {
        let inst = NkInstance::generate(n, k, 100 + n as u64 + k as u64).unwrap();
        let mut sol = Solution::new(&inst, vec![false; n]).unwrap();
        worst = worst.max((sol.fitness() - nk_oracle(&inst, sol.bits())).abs());
        for step in 1u32..(1 << n) {
            sol.flip(&inst, step.trailing_zeros() as usize).unwrap();
            let expect = nk_oracle(&inst, sol.bits());
            worst = worst.max((sol.fitness() - expect).abs());
            worst = worst.max((inst.eval(sol.bits()).unwrap() - expect).abs());
        }
    }
    worst
}

/// Evaluations needed until the mean's norm drops below `tol` on
/// `f(v) = -|v|^2` in dimension 10, or `None` within `budget`.
pub fn sphere_evaluations(seed: u64, tol: f64, budget: usize) -> Option<usize> {
    let mut s = cma_init(10, vec![1.0; 10], 0.5, None, seed).unwrap();
    let mut used = 0;
    while used < budget {
        let c = cma_ask(&s);
        let scores: Vec<f64> = c.iter().map(|x| -x.iter().map(|v| v * v).sum::<f64>()).collect();
        used += c.len();
        cma_tell(&mut s, &c, &scores, true).unwrap();
        if s.mean.iter().map(|v| v * v).sum::<f64>().sqrt() < tol {
            return Some(used);
        }
    }
    None
}

fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Random (θ, observation, permutation) triples where permuting the rows
/// does not permute the scores or the argmax. Returns the failure count.
pub fn argmax_permutation_failures(count: u64, stream: u64) -> usize {
    use neurols::observations::{ObservationKind, ObservationMatrix};
    use neurols::policies::{MlpArchitecture, NeuroLsPolicy};
    use rand::seq::SliceRandom;
    let mut r = seed::rng(stream);
    let mut failures = 0;
    for t in 0..count {
        let kind = ObservationKind::ALL[(t % 4) as usize];
        let arch = MlpArchitecture::standard(kind.dim());
        let theta: Vec<f64> = (0..arch.parameter_count()).map(|_| r.random_range(-2.0..2.0)).collect();
        let p = NeuroLsPolicy::new(arch, theta, kind).unwrap();
        let rows = r.random_range(2..80);
        let data: Vec<f64> = (0..rows * kind.dim()).map(|_| r.random_range(-1.0..1.0)).collect();
        let obs = ObservationMatrix::from_data(kind, rows, data).unwrap();
        let mut perm: Vec<usize> = (0..rows).collect();
        perm.shuffle(&mut r);
        let s = p.scores(&obs).unwrap();
        let sp = p.scores(&obs.permuted(&perm)).unwrap();
        let scores_ok = perm.iter().enumerate().all(|(k, &pk)| sp[k] == s[pk]);
        if !scores_ok || perm[argmax(&sp)] != argmax(&s) {
            failures += 1;
        }
    }
    failures
}
