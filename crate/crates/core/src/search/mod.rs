//! One-flip local search: solutions with cached fitness, incremental move
//! evaluation, and trajectory execution.

mod trajectory;

pub use trajectory::{
    drive, run_trajectory, trajectory_reward, write_trace_csv, write_trace_csv_rows, StepEvent, StepRecord, TraceRow, TrajectoryRecord,
    TRACE_COLUMNS,
};

use crate::error::{Error, Result};

/// A pseudo-Boolean objective with incremental one-flip evaluation.
///
/// `Cache` holds whatever per-solution state makes [`Landscape::delta`]
/// cheap; it must always be the cache prepared for (and flipped along with)
/// the bits passed alongside it.
pub trait Landscape: Send + Sync {
    type Cache: Clone + Send;

    fn n(&self) -> usize;

    /// Full evaluation of `f(x)`. `x.len()` must equal `n()`.
    fn evaluate(&self, x: &[bool]) -> f64;

    fn prepare(&self, x: &[bool]) -> Self::Cache;

    /// `f(x) - f(flip_i(x))`.
    fn delta(&self, x: &[bool], cache: &Self::Cache, i: usize) -> f64;

    fn deltas_into(&self, x: &[bool], cache: &Self::Cache, out: &mut [f64]) {
        for (i, d) in out.iter_mut().enumerate() {
            *d = self.delta(x, cache, i);
        }
    }

    /// Update `cache` for flipping bit `i`; `x` is the solution before the
    /// flip.
    fn flip(&self, x: &[bool], cache: &mut Self::Cache, i: usize);
}

impl<L: Landscape + ?Sized> Landscape for &L {
    type Cache = L::Cache;

    fn n(&self) -> usize {
        (**self).n()
    }

    fn evaluate(&self, x: &[bool]) -> f64 {
        (**self).evaluate(x)
    }

    fn prepare(&self, x: &[bool]) -> Self::Cache {
        (**self).prepare(x)
    }

    #[inline]
    fn delta(&self, x: &[bool], cache: &Self::Cache, i: usize) -> f64 {
        (**self).delta(x, cache, i)
    }

    fn deltas_into(&self, x: &[bool], cache: &Self::Cache, out: &mut [f64]) {
        (**self).deltas_into(x, cache, out)
    }

    fn flip(&self, x: &[bool], cache: &mut Self::Cache, i: usize) {
        (**self).flip(x, cache, i)
    }
}

/// `factor * f` for any landscape.
#[derive(Debug, Clone)]
pub struct Scaled<L> {
    inner: L,
    factor: f64,
}

impl<L> Scaled<L> {
    pub fn new(inner: L, factor: f64) -> Self {
        Self { inner, factor }
    }
}

impl<L: Landscape> Landscape for Scaled<L> {
    type Cache = L::Cache;

    fn n(&self) -> usize {
        self.inner.n()
    }

    fn evaluate(&self, x: &[bool]) -> f64 {
        self.factor * self.inner.evaluate(x)
    }

    fn prepare(&self, x: &[bool]) -> Self::Cache {
        self.inner.prepare(x)
    }

    fn delta(&self, x: &[bool], cache: &Self::Cache, i: usize) -> f64 {
        self.factor * self.inner.delta(x, cache, i)
    }

    fn flip(&self, x: &[bool], cache: &mut Self::Cache, i: usize) {
        self.inner.flip(x, cache, i)
    }
}

/// A bit-vector with its fitness cached.
///
/// The fitness is maintained incrementally by [`Solution::flip`]; it stays
/// within rounding error of a full evaluation.
#[derive(Debug, Clone)]
pub struct Solution<C> {
    bits: Vec<bool>,
    fitness: f64,
    cache: C,
}

impl<C: Clone> Solution<C> {
    pub fn new<L: Landscape<Cache = C>>(inst: &L, bits: Vec<bool>) -> Result<Self> {
        Error::check_len(inst.n(), bits.len())?;
        let fitness = inst.evaluate(&bits);
        let cache = inst.prepare(&bits);
        Ok(Self { bits, fitness, cache })
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn fitness(&self) -> f64 {
        self.fitness
    }

    pub fn cache(&self) -> &C {
        &self.cache
    }

    pub fn into_bits(self) -> Vec<bool> {
        self.bits
    }

    /// Flip bit `i` in place and return the applied `Δ_i`.
    pub fn flip<L: Landscape<Cache = C>>(&mut self, inst: &L, i: usize) -> Result<f64> {
        let n = self.bits.len();
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, n });
        }
        let d = inst.delta(&self.bits, &self.cache, i);
        inst.flip(&self.bits, &mut self.cache, i);
        self.bits[i] = !self.bits[i];
        self.fitness -= d;
        Ok(d)
    }
}

/// `deltas[i] = f(x) - f(flip_i(x))`. Negative entries are improving moves
/// for maximization.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaVector(pub Vec<f64>);

impl DeltaVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Improvement value `δ_i = -Δ_i`.
    pub fn improvement(&self, i: usize) -> f64 {
        -self.0[i]
    }

    pub fn n_improving(&self) -> usize {
        count_improving(&self.0)
    }
}

pub(crate) fn count_improving(deltas: &[f64]) -> usize {
    deltas.iter().filter(|&&d| d < 0.0).count()
}

/// Rank of move `a` among all moves ordered by improvement, best first:
/// `1 + #{j : δ_j > δ_a}`.
pub fn improvement_rank(deltas: &[f64], a: usize) -> usize {
    let da = deltas[a];
    1 + deltas.iter().filter(|&&d| d < da).count()
}

pub fn compute_deltas<L: Landscape>(inst: &L, x: &Solution<L::Cache>) -> Result<DeltaVector> {
    Error::check_len(inst.n(), x.bits.len())?;
    let mut out = vec![0.0; inst.n()];
    inst.deltas_into(&x.bits, &x.cache, &mut out);
    Ok(DeltaVector(out))
}

/// `flip_i(x)` with its fitness updated incrementally.
pub fn apply_move<L: Landscape>(inst: &L, x: &Solution<L::Cache>, i: usize) -> Result<Solution<L::Cache>> {
    Error::check_len(inst.n(), x.bits.len())?;
    let mut next = x.clone();
    next.flip(inst, i)?;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{NkInstance, QuboInstance};

    #[test]
    fn qubo_hand_deltas() {
        let q = QuboInstance::from_dense(2, vec![1.0, 2.0, 2.0, 3.0]).unwrap();
        let x = Solution::new(&q, vec![true, true]).unwrap();
        assert_eq!(x.fitness(), 8.0);
        assert_eq!(compute_deltas(&q, &x).unwrap().0, vec![5.0, 7.0]);
    }

    #[test]
    fn move_twice_restores() {
        let inst = NkInstance::generate(20, 3, 8).unwrap();
        let x = Solution::new(&inst, crate::seed::random_bits(20, 1)).unwrap();
        let y = apply_move(&inst, &x, 4).unwrap();
        let z = apply_move(&inst, &y, 4).unwrap();
        assert_eq!(z.bits(), x.bits());
        assert!((z.fitness() - x.fitness()).abs() < 1e-15);
        let dx = compute_deltas(&inst, &x).unwrap();
        let dy = compute_deltas(&inst, &y).unwrap();
        assert_eq!(dy.0[4], -dx.0[4]);
    }

    #[test]
    fn k_zero_move_changes_one_term() {
        let inst = NkInstance::generate(8, 0, 2).unwrap();
        let x = Solution::new(&inst, vec![false; 8]).unwrap();
        let y = apply_move(&inst, &x, 3).unwrap();
        let t = &inst.tables()[3];
        assert!((x.fitness() - y.fitness() - (t[0] - t[1]) / 8.0).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_move() {
        let inst = NkInstance::generate(4, 1, 2).unwrap();
        let x = Solution::new(&inst, vec![false; 4]).unwrap();
        assert!(matches!(apply_move(&inst, &x, 4), Err(Error::IndexOutOfRange { index: 4, n: 4 })));
        assert!(Solution::new(&inst, vec![false; 5]).is_err());
    }

    #[test]
    fn rank_definition() {
        // δ = (0.1, 0.3, -0.2)
        let deltas = [-0.1, -0.3, 0.2];
        assert_eq!(improvement_rank(&deltas, 1), 1);
        assert_eq!(improvement_rank(&deltas, 0), 2);
        assert_eq!(improvement_rank(&deltas, 2), 3);
    }
}
