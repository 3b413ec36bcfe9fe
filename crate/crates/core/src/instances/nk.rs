use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::search::Landscape;
use crate::seed;

/// Largest supported `k`; tables hold `2^(k+1)` entries per variable.
pub const MAX_K: usize = 24;

/// Random NK landscape with uniformly drawn (non-adjacent) dependency links.
///
/// Variable `i` contributes `tables[i][idx]` where bit 0 of `idx` is `x[i]`
/// and bit `j + 1` is `x[links[i][j]]`. The fitness is the mean contribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NkRaw", into = "NkRaw")]
pub struct NkInstance {
    n: usize,
    k: usize,
    seed: u64,
    links: Vec<Vec<usize>>,
    tables: Vec<Vec<f64>>,
    /// For each variable `v`, every `(m, bit)` such that contribution `m`
    /// reads `v` at position `bit` (including `(v, 0)` itself).
    occurrences: Vec<Vec<(u32, u32)>>,
}

#[derive(Serialize, Deserialize)]
struct NkRaw {
    n: usize,
    k: usize,
    seed: u64,
    links: Vec<Vec<usize>>,
    tables: Vec<Vec<f64>>,
}

impl TryFrom<NkRaw> for NkInstance {
    type Error = Error;

    fn try_from(raw: NkRaw) -> Result<Self> {
        NkInstance::from_parts(raw.n, raw.k, raw.seed, raw.links, raw.tables)
    }
}

impl From<NkInstance> for NkRaw {
    fn from(inst: NkInstance) -> Self {
        NkRaw {
            n: inst.n,
            k: inst.k,
            seed: inst.seed,
            links: inst.links,
            tables: inst.tables,
        }
    }
}

impl NkInstance {
    /// Draws links without replacement from `{0..n} \ {i}` and table entries
    /// i.i.d. uniform on `[0, 1)`, all from a single stream seeded by `seed`.
    pub fn generate(n: usize, k: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be positive".into()));
        }
        if k >= n {
            return Err(Error::InvalidParameter(format!("k = {k} must be < n = {n}")));
        }
        if k > MAX_K {
            return Err(Error::InvalidParameter(format!("k = {k} exceeds {MAX_K}")));
        }
        let mut rng = seed::rng(seed);
        let mut links = Vec::with_capacity(n);
        for i in 0..n {
            // sample from the n - 1 other variables, then shift past i
            let picked = index::sample(&mut rng, n - 1, k);
            links.push(
                picked
                    .into_iter()
                    .map(|j| if j >= i { j + 1 } else { j })
                    .collect::<Vec<_>>(),
            );
        }
        let size = 1usize << (k + 1);
        let tables = (0..n)
            .map(|_| (0..size).map(|_| rng.random::<f64>()).collect())
            .collect();
        Self::from_parts(n, k, seed, links, tables)
    }

    /// Validates raw parts and builds the reverse-link index.
    pub fn from_parts(
        n: usize,
        k: usize,
        seed: u64,
        links: Vec<Vec<usize>>,
        tables: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if n == 0 || k >= n || k > MAX_K {
            return Err(Error::InvalidParameter(format!("invalid (n, k) = ({n}, {k})")));
        }
        Error::check_len(n, links.len())?;
        Error::check_len(n, tables.len())?;
        let size = 1usize << (k + 1);
        for (i, l) in links.iter().enumerate() {
            Error::check_len(k, l.len())?;
            for (a, &j) in l.iter().enumerate() {
                if j >= n || j == i || l[..a].contains(&j) {
                    return Err(Error::InvalidParameter(format!(
                        "links[{i}] must hold {k} distinct indices in 0..{n} other than {i}"
                    )));
                }
            }
        }
        for (i, t) in tables.iter().enumerate() {
            Error::check_len(size, t.len())?;
            if let Some(v) = t.iter().find(|v| !(0.0..1.0).contains(*v)) {
                return Err(Error::InvalidParameter(format!(
                    "tables[{i}] entry {v} outside [0, 1)"
                )));
            }
        }
        let mut occurrences = vec![Vec::with_capacity(k + 1); n];
        for i in 0..n {
            occurrences[i].push((i as u32, 0));
            for (p, &j) in links[i].iter().enumerate() {
                occurrences[j].push((i as u32, p as u32 + 1));
            }
        }
        Ok(Self {
            n,
            k,
            seed,
            links,
            tables,
            occurrences,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn links(&self) -> &[Vec<usize>] {
        &self.links
    }

    pub fn tables(&self) -> &[Vec<f64>] {
        &self.tables
    }

    #[inline]
    fn packed_index(&self, x: &[bool], i: usize) -> usize {
        let mut idx = x[i] as usize;
        for (p, &j) in self.links[i].iter().enumerate() {
            idx |= (x[j] as usize) << (p + 1);
        }
        idx
    }

    /// Mean contribution over all variables.
    pub fn eval(&self, x: &[bool]) -> Result<f64> {
        Error::check_len(self.n, x.len())?;
        Ok(self.eval_unchecked(x))
    }

    fn eval_unchecked(&self, x: &[bool]) -> f64 {
        let total: f64 = (0..self.n)
            .map(|i| self.tables[i][self.packed_index(x, i)])
            .sum();
        total / self.n as f64
    }
}

/// Packed table index of every contribution at the current solution.
#[derive(Debug, Clone)]
pub struct NkCache {
    index: Vec<u32>,
}

impl Landscape for NkInstance {
    type Cache = NkCache;

    fn n(&self) -> usize {
        self.n
    }

    fn evaluate(&self, x: &[bool]) -> f64 {
        self.eval_unchecked(x)
    }

    fn prepare(&self, x: &[bool]) -> NkCache {
        NkCache {
            index: (0..self.n).map(|i| self.packed_index(x, i) as u32).collect(),
        }
    }

    #[inline]
    fn delta(&self, _x: &[bool], cache: &NkCache, i: usize) -> f64 {
        let mut d = 0.0;
        for &(m, bit) in &self.occurrences[i] {
            let m = m as usize;
            let idx = cache.index[m] as usize;
            let t = &self.tables[m];
            d += t[idx] - t[idx ^ (1 << bit)];
        }
        d / self.n as f64
    }

    fn flip(&self, _x: &[bool], cache: &mut NkCache, i: usize) {
        for &(m, bit) in &self.occurrences[i] {
            cache.index[m as usize] ^= 1 << bit;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(NkInstance::generate(0, 0, 1).is_err());
        assert!(NkInstance::generate(4, 4, 1).is_err());
        assert!(NkInstance::generate(4, 3, 1).is_ok());
    }

    #[test]
    fn links_are_distinct_and_exclude_self() {
        let inst = NkInstance::generate(40, 7, 5).unwrap();
        for (i, l) in inst.links().iter().enumerate() {
            assert_eq!(l.len(), 7);
            assert!(!l.contains(&i));
            let mut s = l.clone();
            s.sort();
            s.dedup();
            assert_eq!(s.len(), 7);
        }
        assert!(inst.tables().iter().flatten().all(|v| (0.0..1.0).contains(v)));
    }

    #[test]
    fn k_zero_all_zeros_reads_first_entries() {
        let inst = NkInstance::generate(6, 0, 3).unwrap();
        let x = vec![false; 6];
        let expected: f64 = inst.tables().iter().map(|t| t[0]).sum::<f64>() / 6.0;
        assert_eq!(inst.eval(&x).unwrap(), expected);
        assert!(inst.tables().iter().all(|t| t.len() == 2));
    }

    #[test]
    fn same_seed_same_instance() {
        let a = NkInstance::generate(32, 1, 77).unwrap();
        let b = NkInstance::generate(32, 1, 77).unwrap();
        assert_eq!(a, b);
        let c = NkInstance::generate(32, 1, 78).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let inst = NkInstance::generate(8, 2, 1).unwrap();
        assert!(matches!(
            inst.eval(&[true; 7]),
            Err(Error::DimensionMismatch { expected: 8, actual: 7 })
        ));
    }

    #[test]
    fn from_parts_validates() {
        let ok = NkInstance::from_parts(2, 1, 0, vec![vec![1], vec![0]], vec![vec![0.1; 4]; 2]);
        assert!(ok.is_ok());
        let self_link = NkInstance::from_parts(2, 1, 0, vec![vec![0], vec![0]], vec![vec![0.1; 4]; 2]);
        assert!(self_link.is_err());
        let out_of_range = NkInstance::from_parts(2, 1, 0, vec![vec![1], vec![0]], vec![vec![1.0; 4]; 2]);
        assert!(out_of_range.is_err());
    }
}
