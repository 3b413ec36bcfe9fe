use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::search::Landscape;

/// Importance structure of a generated instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Uniform,
    Important,
    ImportantConcentrated,
}

impl Family {
    /// `(d, alpha)` used by each family.
    pub fn importance(self) -> (f64, f64) {
        match self {
            Family::Uniform => (1.0, 1.0),
            Family::Important => (10.0, 1.0),
            Family::ImportantConcentrated => (10.0, 1.09),
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Family::Uniform => "uni",
            Family::Important => "imp",
            Family::ImportantConcentrated => "ic",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uni" | "uniform" => Ok(Family::Uniform),
            "imp" | "important" => Ok(Family::Important),
            "ic" | "important-concentrated" => Ok(Family::ImportantConcentrated),
            other => Err(Error::InvalidParameter(format!("unknown family '{other}'"))),
        }
    }
}

/// Parameters a QUBO instance was generated with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuboMetadata {
    pub m: usize,
    pub d: f64,
    pub alpha: f64,
    pub family: Option<Family>,
    pub seed: u64,
}

/// `f(x) = x^T Q x` over a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboInstance {
    n: usize,
    dense: Vec<f64>,
    diag: Vec<f64>,
    /// Off-diagonal nonzeros of each row, sorted by column.
    rows: Vec<Vec<(u32, f64)>>,
    metadata: Option<QuboMetadata>,
}

impl QuboInstance {
    /// Builds from a row-major dense matrix; rejects any asymmetry.
    pub fn from_dense(n: usize, q: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be positive".into()));
        }
        Error::check_len(n * n, q.len())?;
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (q[i * n + j], q[j * n + i]);
                if a != b {
                    return Err(Error::Asymmetric { i, j, a, b });
                }
            }
        }
        let diag = (0..n).map(|i| q[i * n + i]).collect();
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| j != i && q[i * n + j] != 0.0)
                    .map(|j| (j as u32, q[i * n + j]))
                    .collect()
            })
            .collect();
        Ok(Self {
            n,
            dense: q,
            diag,
            rows,
            metadata: None,
        })
    }

    pub fn with_metadata(mut self, metadata: QuboMetadata) -> Self {
        self.metadata = Some(metadata);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.dense[i * self.n + j]
    }

    pub fn dense(&self) -> &[f64] {
        &self.dense
    }

    pub fn metadata(&self) -> Option<&QuboMetadata> {
        self.metadata.as_ref()
    }

    /// Count of nonzero coefficients in the upper triangle (diagonal included).
    pub fn upper_nnz(&self) -> usize {
        (0..self.n)
            .map(|i| (self.diag[i] != 0.0) as usize + self.rows[i].iter().filter(|(j, _)| *j as usize > i).count())
            .sum()
    }

    /// Fraction of nonzero off-diagonal coefficients.
    pub fn density(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let off: usize = self.rows.iter().map(Vec::len).sum();
        off as f64 / (self.n * (self.n - 1)) as f64
    }

    /// Same matrix multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let q = self.dense.iter().map(|v| v * factor).collect();
        let mut out = Self::from_dense(self.n, q).expect("scaling preserves symmetry");
        out.metadata = self.metadata.clone();
        out
    }

    pub fn eval(&self, x: &[bool]) -> Result<f64> {
        Error::check_len(self.n, x.len())?;
        Ok(self.eval_unchecked(x))
    }

    fn eval_unchecked(&self, x: &[bool]) -> f64 {
        let mut total = 0.0;
        for i in 0..self.n {
            if !x[i] {
                continue;
            }
            let mut row = self.diag[i];
            for &(j, q) in &self.rows[i] {
                if x[j as usize] {
                    row += q;
                }
            }
            total += row;
        }
        total
    }
}

/// Local field `g_i = sum_{j != i} q_ij x_j` at the current solution.
#[derive(Debug, Clone)]
pub struct QuboCache {
    field: Vec<f64>,
}

impl Landscape for QuboInstance {
    type Cache = QuboCache;

    fn n(&self) -> usize {
        self.n
    }

    fn evaluate(&self, x: &[bool]) -> f64 {
        self.eval_unchecked(x)
    }

    fn prepare(&self, x: &[bool]) -> QuboCache {
        let field = (0..self.n)
            .map(|i| {
                self.rows[i]
                    .iter()
                    .filter(|(j, _)| x[*j as usize])
                    .map(|(_, q)| q)
                    .sum()
            })
            .collect();
        QuboCache { field }
    }

    #[inline]
    fn delta(&self, x: &[bool], cache: &QuboCache, i: usize) -> f64 {
        // f(flip_i x) - f(x) = (1 - 2 x_i) (q_ii + 2 g_i)
        let gain = self.diag[i] + 2.0 * cache.field[i];
        if x[i] {
            gain
        } else {
            -gain
        }
    }

    fn flip(&self, x: &[bool], cache: &mut QuboCache, i: usize) {
        let was_set = x[i];
        for &(j, q) in &self.rows[i] {
            if was_set {
                cache.field[j as usize] -= q;
            } else {
                cache.field[j as usize] += q;
            }
        }
    }
}
