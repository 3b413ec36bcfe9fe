//! Observation functions: turn the one-flip neighborhood of the current
//! solution into an `N x d` matrix, one row per candidate move.
//!
//! Ranks follow the sign of `Δ_i = f(x) - f(flip_i(x))` as written: strictly
//! positive deltas are ranked ascending into `(0, 1]`, strictly negative
//! deltas descending into `[-1, 0)`, and zero deltas map to 0. For
//! `Δ = (1, 4, -2, -5, 0, -7)` this gives `(1/2, 1, -1/3, -2/3, 0, -1)`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObservationKind {
    /// `Δ_i`.
    #[serde(alias = "O1")]
    O1,
    /// `(f(x), f(flip_i(x)))`.
    #[serde(alias = "O2")]
    O2,
    /// Normalized signed rank of `Δ_i`.
    #[serde(alias = "O3")]
    O3,
    /// Normalized signed rank and z-score of `Δ_i`.
    #[serde(alias = "O4")]
    O4,
}

impl ObservationKind {
    pub const ALL: [ObservationKind; 4] = [Self::O1, Self::O2, Self::O3, Self::O4];

    /// Number of columns.
    pub fn dim(self) -> usize {
        match self {
            Self::O1 | Self::O3 => 1,
            Self::O2 | Self::O4 => 2,
        }
    }

    /// Whether the observation is invariant under positive rescaling of the
    /// objective.
    pub fn scale_free(self) -> bool {
        matches!(self, Self::O3 | Self::O4)
    }
}

impl fmt::Display for ObservationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::O1 => "o1",
            Self::O2 => "o2",
            Self::O3 => "o3",
            Self::O4 => "o4",
        };
        f.write_str(s)
    }
}

impl FromStr for ObservationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "o1" => Ok(Self::O1),
            "o2" => Ok(Self::O2),
            "o3" => Ok(Self::O3),
            "o4" => Ok(Self::O4),
            other => Err(Error::InvalidParameter(format!("unknown observation kind '{other}'"))),
        }
    }
}

/// Denominator of the standard deviation used by the z-score column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StdDev {
    /// Divide by `N`.
    #[default]
    Population,
    /// Divide by `N - 1`.
    Sample,
}

/// Row-major `N x d` observation.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationMatrix {
    kind: ObservationKind,
    rows: usize,
    data: Vec<f64>,
}

impl ObservationMatrix {
    pub fn zeros(kind: ObservationKind, rows: usize) -> Self {
        Self {
            kind,
            rows,
            data: vec![0.0; rows * kind.dim()],
        }
    }

    /// Wrap raw row-major data; `data.len()` must be `rows * kind.dim()`.
    pub fn from_data(kind: ObservationKind, rows: usize, data: Vec<f64>) -> crate::Result<Self> {
        Error::check_len(rows * kind.dim(), data.len())?;
        Ok(Self { kind, rows, data })
    }

    pub fn kind(&self) -> ObservationKind {
        self.kind
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.data[i * d..(i + 1) * d]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i)[c]).collect()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Rows reordered so that output row `r` is input row `perm[r]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let d = self.dim();
        let mut data = Vec::with_capacity(self.data.len());
        for &p in perm {
            data.extend_from_slice(&self.data[p * d..(p + 1) * d]);
        }
        Self {
            kind: self.kind,
            rows: self.rows,
            data,
        }
    }
}

pub fn obs_o1(deltas: &[f64]) -> ObservationMatrix {
    ObservationMatrix {
        kind: ObservationKind::O1,
        rows: deltas.len(),
        data: deltas.to_vec(),
    }
}

pub fn obs_o2(f_x: f64, neighbor_fitness: &[f64]) -> ObservationMatrix {
    let data = neighbor_fitness.iter().flat_map(|&fy| [f_x, fy]).collect();
    ObservationMatrix {
        kind: ObservationKind::O2,
        rows: neighbor_fitness.len(),
        data,
    }
}

pub fn obs_o3(deltas: &[f64], tiebreak_seed: u64) -> ObservationMatrix {
    let mut out = ObservationMatrix::zeros(ObservationKind::O3, deltas.len());
    signed_ranks_into(deltas, tiebreak_seed, &mut out.data, 1, 0);
    out
}

pub fn obs_o4(deltas: &[f64], tiebreak_seed: u64) -> ObservationMatrix {
    obs_o4_with(deltas, tiebreak_seed, StdDev::Population)
}

pub fn obs_o4_with(deltas: &[f64], tiebreak_seed: u64, sd: StdDev) -> ObservationMatrix {
    let mut out = ObservationMatrix::zeros(ObservationKind::O4, deltas.len());
    signed_ranks_into(deltas, tiebreak_seed, &mut out.data, 2, 0);
    z_scores_into(deltas, sd, &mut out.data, 2, 1);
    out
}

/// Refill `out` in place for the given state; `out.kind()` selects the
/// observation. `f_x` is only read by O2.
pub fn fill(out: &mut ObservationMatrix, deltas: &[f64], f_x: f64, tiebreak_seed: u64) {
    let n = deltas.len();
    if out.rows != n {
        *out = ObservationMatrix::zeros(out.kind, n);
    }
    match out.kind {
        ObservationKind::O1 => out.data.copy_from_slice(deltas),
        ObservationKind::O2 => {
            for (i, &d) in deltas.iter().enumerate() {
                out.data[2 * i] = f_x;
                out.data[2 * i + 1] = f_x - d;
            }
        }
        ObservationKind::O3 => signed_ranks_into(deltas, tiebreak_seed, &mut out.data, 1, 0),
        ObservationKind::O4 => {
            signed_ranks_into(deltas, tiebreak_seed, &mut out.data, 2, 0);
            z_scores_into(deltas, StdDev::Population, &mut out.data, 2, 1);
        }
    }
}

/// Build any observation from deltas and the current fitness.
pub fn observe(kind: ObservationKind, deltas: &[f64], f_x: f64, tiebreak_seed: u64) -> ObservationMatrix {
    let mut out = ObservationMatrix::zeros(kind, deltas.len());
    fill(&mut out, deltas, f_x, tiebreak_seed);
    out
}

/// Writes signed normalized ranks into column `col` of a row-major buffer
/// with `stride` columns.
fn signed_ranks_into(deltas: &[f64], tiebreak_seed: u64, out: &mut [f64], stride: usize, col: usize) {
    let mut positive: Vec<usize> = Vec::with_capacity(deltas.len());
    let mut negative: Vec<usize> = Vec::with_capacity(deltas.len());
    for (i, &d) in deltas.iter().enumerate() {
        out[i * stride + col] = 0.0;
        if d > 0.0 {
            positive.push(i);
        } else if d < 0.0 {
            negative.push(i);
        }
    }
    let mut tie_rng = None;

    // smallest positive first: rank 1 .. N+
    order_with_ties(&mut positive, deltas, false, tiebreak_seed, &mut tie_rng);
    let np = positive.len() as f64;
    for (r, &i) in positive.iter().enumerate() {
        out[i * stride + col] = (r + 1) as f64 / np;
    }

    // largest negative first: rank -1 .. -N-
    order_with_ties(&mut negative, deltas, true, tiebreak_seed, &mut tie_rng);
    let nn = negative.len() as f64;
    for (r, &i) in negative.iter().enumerate() {
        out[i * stride + col] = -((r + 1) as f64) / nn;
    }
}

/// Sort indices by delta (ascending, or descending when `desc`) and shuffle
/// each run of equal values with a PRNG drawn from `seed`.
fn order_with_ties(
    idx: &mut [usize],
    deltas: &[f64],
    desc: bool,
    tie_seed: u64,
    tie_rng: &mut Option<seed::Prng>,
) {
    idx.sort_by(|&a, &b| {
        let o = deltas[a].total_cmp(&deltas[b]);
        let o = if desc { o.reverse() } else { o };
        o.then(a.cmp(&b))
    });
    let mut start = 0;
    while start < idx.len() {
        let v = deltas[idx[start]];
        let mut end = start + 1;
        while end < idx.len() && deltas[idx[end]] == v {
            end += 1;
        }
        if end - start > 1 {
            let rng = tie_rng.get_or_insert_with(|| seed::rng(tie_seed));
            idx[start..end].shuffle(rng);
        }
        start = end;
    }
}

fn z_scores_into(deltas: &[f64], sd: StdDev, out: &mut [f64], stride: usize, col: usize) {
    let n = deltas.len();
    let constant = deltas.windows(2).all(|w| w[0] == w[1]);
    let denom = match sd {
        StdDev::Population => n as f64,
        StdDev::Sample => n.saturating_sub(1) as f64,
    };
    if n == 0 || constant || denom == 0.0 {
        for i in 0..n {
            out[i * stride + col] = 0.0;
        }
        return;
    }
    let mean = deltas.iter().sum::<f64>() / n as f64;
    let var = deltas.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / denom;
    let sigma = var.sqrt();
    if !(sigma > 0.0) {
        for i in 0..n {
            out[i * stride + col] = 0.0;
        }
        return;
    }
    for (i, &d) in deltas.iter().enumerate() {
        out[i * stride + col] = (d - mean) / sigma;
    }
}

/// Total order on rows used where a deterministic ordering of observation
/// rows is needed (e.g. response-curve export).
pub fn cmp_rows(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}
