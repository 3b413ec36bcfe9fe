//! PUBOi-style QUBO generator.
//!
//! The objective is a sum of `m` sub-functions, each a purely quadratic form
//! over four distinct variables. Written over spins `s = 2x - 1`, every
//! sub-function is `sum_{a<b} w_ab s_a s_b`; such forms are even in `s`, so
//! `f(x) = f(!x)` holds exactly. The constant part of the spin expansion is
//! dropped when accumulating into `Q`, which preserves that symmetry.
//!
//! Exact reproduction of published instance sets goes through file loading;
//! this generator only reproduces the structural knobs (density, importance
//! degree, co-appearance).

use rand::Rng;

use super::qubo::{Family, QuboInstance, QuboMetadata};
use crate::error::{Error, Result};
use crate::seed;

/// Spin couplings of the four sub-functions, in pair order
/// (0,1) (0,2) (0,3) (1,2) (1,3) (2,3).
///
/// `PHI[k-1]` has `2k` local maxima under one-flip moves, occurring in
/// complementary pairs (`PHI[3]`'s eight maxima are non-strict).
pub const PHI: [[i32; 6]; 4] = [
    [1, 1, 1, 1, 1, 1],
    [-1, 0, 0, 0, 0, -1],
    [-1, -1, -1, -1, -1, -1],
    [-2, -2, -2, -1, -1, -1],
];

const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Fraction of variables placed in the important class (at least one).
pub const IMPORTANT_FRACTION: f64 = 0.25;

/// Generator parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PuboiParams {
    pub n: usize,
    pub m: usize,
    /// Importance degree: relative selection weight of important variables.
    pub d: f64,
    /// Co-appearance boost applied to important variables once the current
    /// quadruple already holds one.
    pub alpha: f64,
}

impl PuboiParams {
    /// `m = round(frac * n (n - 1) / 2)`, with `(d, alpha)` from the family.
    pub fn from_family(n: usize, m_frac: f64, family: Family) -> Self {
        let (d, alpha) = family.importance();
        let m = (m_frac * (n * n.saturating_sub(1)) as f64 / 2.0).round() as usize;
        Self { n, m, d, alpha }
    }
}

pub fn important_count(n: usize) -> usize {
    ((n as f64 * IMPORTANT_FRACTION).round() as usize).clamp(1, n)
}

/// The generated quadruples and the sub-function each one uses.
#[derive(Debug, Clone)]
pub struct PuboiTerms {
    pub important: Vec<bool>,
    pub terms: Vec<([usize; 4], usize)>,
}

/// Draw the variable quadruples and sub-function choices.
pub fn draw_terms(params: &PuboiParams, seed: u64) -> Result<PuboiTerms> {
    let PuboiParams { n, m, d, alpha } = *params;
    if n < 4 {
        return Err(Error::InvalidParameter(format!("n = {n} must be at least 4")));
    }
    if m == 0 {
        return Err(Error::InvalidParameter("m must be positive".into()));
    }
    if !(d >= 1.0) || !(alpha >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "d = {d} and alpha = {alpha} must both be >= 1"
        )));
    }
    let mut rng = seed::rng(seed);

    let n_imp = important_count(n);
    let mut important = vec![false; n];
    for v in rand::seq::index::sample(&mut rng, n, n_imp) {
        important[v] = true;
    }

    let mut terms = Vec::with_capacity(m);
    let mut weights = vec![0.0; n];
    for _ in 0..m {
        let mut quad = [0usize; 4];
        let mut has_important = false;
        for slot in 0..4 {
            let boost = if has_important { alpha } else { 1.0 };
            let mut total = 0.0;
            for v in 0..n {
                let w = if quad[..slot].contains(&v) {
                    0.0
                } else if important[v] {
                    d * boost
                } else {
                    1.0
                };
                weights[v] = w;
                total += w;
            }
            let mut u = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (v, &w) in weights.iter().enumerate() {
                if w > 0.0 {
                    if u < w {
                        pick = v;
                        break;
                    }
                    u -= w;
                    pick = v;
                }
            }
            quad[slot] = pick;
            has_important |= important[pick];
        }
        let phi = rng.random_range(0..PHI.len());
        terms.push((quad, phi));
    }
    Ok(PuboiTerms { important, terms })
}

/// Generate a QUBO instance from PUBOi-style sub-functions.
pub fn generate_puboi(params: &PuboiParams, family: Option<Family>, seed: u64) -> Result<QuboInstance> {
    let drawn = draw_terms(params, seed)?;
    let n = params.n;
    let mut q = vec![0.0; n * n];
    for (quad, phi) in &drawn.terms {
        for (&(a, b), &w) in PAIRS.iter().zip(PHI[*phi].iter()) {
            if w == 0 {
                continue;
            }
            let w = w as f64;
            let (u, v) = (quad[a], quad[b]);
            // w s_u s_v = 4w x_u x_v - 2w x_u - 2w x_v + w
            q[u * n + v] += 2.0 * w;
            q[v * n + u] += 2.0 * w;
            q[u * n + u] -= 2.0 * w;
            q[v * n + v] -= 2.0 * w;
        }
    }
    let meta = QuboMetadata {
        m: params.m,
        d: params.d,
        alpha: params.alpha,
        family,
        seed,
    };
    Ok(QuboInstance::from_dense(n, q)?.with_metadata(meta))
}
