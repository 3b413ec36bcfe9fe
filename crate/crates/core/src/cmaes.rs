//! CMA-ES with an ask/tell interface.
//!
//! Standard parameterization (weighted recombination of the best half,
//! cumulative step-size adaptation, rank-one plus rank-mu covariance update).
//! The covariance is eigendecomposed after every update. Sampling for
//! generation `g` draws from a PRNG keyed by `(seed, g)`, so the state is
//! plain data and a checkpoint resumes bit-exactly.

use nalgebra::{DMatrix, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{self, Stream};

/// Smallest eigenvalue kept after repair.
pub const MIN_EIGENVALUE: f64 = 1e-14;

pub fn default_pop_size(dim: usize) -> usize {
    4 + (3.0 * (dim as f64).ln()).floor() as usize
}

/// Strategy constants derived from the dimension and population size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmaParams {
    pub dim: usize,
    pub pop_size: usize,
    pub mu: usize,
    pub weights: Vec<f64>,
    pub mu_eff: f64,
    pub c_sigma: f64,
    pub d_sigma: f64,
    pub c_c: f64,
    pub c_1: f64,
    pub c_mu: f64,
    pub chi_n: f64,
}

impl CmaParams {
    pub fn new(dim: usize, pop_size: usize) -> Self {
        let n = dim as f64;
        let mu = pop_size / 2;
        let raw: Vec<f64> = (1..=mu)
            .map(|i| ((pop_size as f64 + 1.0) / 2.0).ln() - (i as f64).ln())
            .collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        let c_sigma = (mu_eff + 2.0) / (n + mu_eff + 5.0);
        let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (n + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = (4.0 + mu_eff / n) / (n + 4.0 + 2.0 * mu_eff / n);
        let c_1 = 2.0 / ((n + 1.3).powi(2) + mu_eff);
        let c_mu = (1.0 - c_1).min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((n + 2.0).powi(2) + mu_eff));
        let chi_n = n.sqrt() * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
        Self {
            dim,
            pop_size,
            mu,
            weights,
            mu_eff,
            c_sigma,
            d_sigma,
            c_c,
            c_1,
            c_mu,
            chi_n,
        }
    }
}

/// Full optimizer state. Serializable as a checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmaState {
    pub params: CmaParams,
    pub mean: Vec<f64>,
    pub sigma: f64,
    /// Row-major `dim x dim`.
    pub cov: Vec<f64>,
    pub p_sigma: Vec<f64>,
    pub p_c: Vec<f64>,
    pub generation: u64,
    pub seed: u64,
    /// Eigenvectors of `cov`, column `j` pairs with `axis[j]`; row-major.
    basis: Vec<f64>,
    /// Square roots of the eigenvalues of `cov`.
    axis: Vec<f64>,
    /// Number of eigenvalue repairs performed so far.
    pub repairs: u64,
}

/// What happened during one `tell`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TellReport {
    /// Candidates whose score was NaN or infinite.
    pub non_finite: usize,
    /// Whether the new covariance needed eigenvalue clamping.
    pub repaired: bool,
}

pub fn cma_init(dim: usize, mean0: Vec<f64>, sigma0: f64, pop_size: Option<usize>, seed: u64) -> Result<CmaState> {
    CmaState::new(dim, mean0, sigma0, pop_size, seed)
}

pub fn cma_ask(state: &CmaState) -> Vec<Vec<f64>> {
    state.ask()
}

pub fn cma_tell(state: &mut CmaState, candidates: &[Vec<f64>], scores: &[f64], maximize: bool) -> Result<TellReport> {
    state.tell(candidates, scores, maximize)
}

impl CmaState {
    pub fn new(dim: usize, mean0: Vec<f64>, sigma0: f64, pop_size: Option<usize>, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        Error::check_len(dim, mean0.len())?;
        if !(sigma0 > 0.0) || !sigma0.is_finite() {
            return Err(Error::InvalidParameter(format!("sigma0 = {sigma0} must be positive")));
        }
        let pop_size = pop_size.unwrap_or_else(|| default_pop_size(dim));
        if pop_size < 2 {
            return Err(Error::InvalidParameter(format!("population size {pop_size} must be at least 2")));
        }
        let mut cov = vec![0.0; dim * dim];
        for i in 0..dim {
            cov[i * dim + i] = 1.0;
        }
        let mut state = Self {
            params: CmaParams::new(dim, pop_size),
            mean: mean0,
            sigma: sigma0,
            cov,
            p_sigma: vec![0.0; dim],
            p_c: vec![0.0; dim],
            generation: 0,
            seed,
            basis: Vec::new(),
            axis: Vec::new(),
            repairs: 0,
        };
        state.decompose();
        Ok(state)
    }

    /// Replace the covariance (symmetric, row-major) and refresh the
    /// decomposition.
    pub fn set_covariance(&mut self, cov: Vec<f64>) -> Result<()> {
        let n = self.params.dim;
        Error::check_len(n * n, cov.len())?;
        self.cov = cov;
        self.symmetrize();
        self.decompose();
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.params.dim
    }

    pub fn pop_size(&self) -> usize {
        self.params.pop_size
    }

    /// Eigenvalues of the covariance after repair.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.axis.iter().map(|a| a * a).collect()
    }

    /// Returns whether eigenvalues had to be clamped.
    fn decompose(&mut self) -> bool {
        let n = self.params.dim;
        let m = DMatrix::from_row_slice(n, n, &self.cov);
        let eig = SymmetricEigen::new(m);
        let mut repaired = false;
        self.axis = eig
            .eigenvalues
            .iter()
            .map(|&v| {
                if v.is_finite() && v >= MIN_EIGENVALUE {
                    v.sqrt()
                } else {
                    repaired = true;
                    MIN_EIGENVALUE.sqrt()
                }
            })
            .collect();
        self.basis = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| eig.eigenvectors[(i, j)])
            .collect();
        if repaired {
            self.repairs += 1;
            // rebuild C = B diag(axis^2) B^T from the clamped spectrum
            for i in 0..n {
                for j in 0..n {
                    let mut s = 0.0;
                    for k in 0..n {
                        s += self.basis[i * n + k] * self.axis[k] * self.axis[k] * self.basis[j * n + k];
                    }
                    self.cov[i * n + j] = s;
                }
            }
            self.symmetrize();
        }
        repaired
    }

    fn symmetrize(&mut self) {
        let n = self.params.dim;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (self.cov[i * n + j] + self.cov[j * n + i]);
                self.cov[i * n + j] = v;
                self.cov[j * n + i] = v;
            }
        }
    }

    /// Largest `|C_ij - C_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.params.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.cov[i * n + j] - self.cov[j * n + i]).abs());
            }
        }
        worst
    }

    /// Sample a population from `N(mean, sigma^2 C)`.
    pub fn ask(&self) -> Vec<Vec<f64>> {
        let n = self.params.dim;
        let mut rng = seed::rng(seed::derive(self.seed, Stream::CmaSampling, &[self.generation]));
        let mut scaled = vec![0.0; n];
        (0..self.params.pop_size)
            .map(|_| {
                for (k, s) in scaled.iter_mut().enumerate() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *s = self.axis[k] * z;
                }
                (0..n)
                    .map(|i| {
                        let row = &self.basis[i * n..(i + 1) * n];
                        let y: f64 = row.iter().zip(&scaled).map(|(b, s)| b * s).sum();
                        self.mean[i] + self.sigma * y
                    })
                    .collect()
            })
            .collect()
    }

    /// Update from scored candidates. Only the ranking of `scores` matters;
    /// non-finite scores rank last.
    pub fn tell(&mut self, candidates: &[Vec<f64>], scores: &[f64], maximize: bool) -> Result<TellReport> {
        let n = self.params.dim;
        Error::check_len(candidates.len(), scores.len())?;
        if candidates.len() < self.params.mu {
            return Err(Error::InvalidParameter(format!(
                "need at least {} candidates, got {}",
                self.params.mu,
                candidates.len()
            )));
        }
        for c in candidates {
            Error::check_len(n, c.len())?;
        }
        let non_finite = scores.iter().filter(|s| !s.is_finite()).count();
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| {
            let (sa, sb) = (scores[a], scores[b]);
            match (sa.is_finite(), sb.is_finite()) {
                (true, true) => {
                    let o = sa.total_cmp(&sb);
                    if maximize {
                        o.reverse()
                    } else {
                        o
                    }
                }
                (true, false) => std::cmp::Ordering::Less,
                (false, true) => std::cmp::Ordering::Greater,
                (false, false) => std::cmp::Ordering::Equal,
            }
            .then(a.cmp(&b))
        });

        let p = self.params.clone();
        let old_mean = self.mean.clone();
        let ys: Vec<Vec<f64>> = order[..p.mu]
            .iter()
            .map(|&k| {
                candidates[k]
                    .iter()
                    .zip(&old_mean)
                    .map(|(x, m)| (x - m) / self.sigma)
                    .collect()
            })
            .collect();
        let mut y_w = vec![0.0; n];
        for (w, y) in p.weights.iter().zip(&ys) {
            for i in 0..n {
                y_w[i] += w * y[i];
            }
        }
        for i in 0..n {
            self.mean[i] = old_mean[i] + self.sigma * y_w[i];
        }

        // C^{-1/2} y_w = B diag(1/axis) B^T y_w
        let mut bt_y = vec![0.0; n];
        for k in 0..n {
            let mut s = 0.0;
            for i in 0..n {
                s += self.basis[i * n + k] * y_w[i];
            }
            bt_y[k] = s / self.axis[k];
        }
        let cs = p.c_sigma;
        let norm_s = (cs * (2.0 - cs) * p.mu_eff).sqrt();
        for i in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += self.basis[i * n + k] * bt_y[k];
            }
            self.p_sigma[i] = (1.0 - cs) * self.p_sigma[i] + norm_s * s;
        }
        let ps_norm = self.p_sigma.iter().map(|v| v * v).sum::<f64>().sqrt();
        let gen = (self.generation + 1) as f64;
        let h_sigma = ps_norm / (1.0 - (1.0 - cs).powf(2.0 * gen)).sqrt() < (1.4 + 2.0 / (n as f64 + 1.0)) * p.chi_n;
        let h = if h_sigma { 1.0 } else { 0.0 };
        let cc = p.c_c;
        let norm_c = (cc * (2.0 - cc) * p.mu_eff).sqrt();
        for i in 0..n {
            self.p_c[i] = (1.0 - cc) * self.p_c[i] + h * norm_c * y_w[i];
        }

        let decay = 1.0 - p.c_1 - p.c_mu + (1.0 - h) * p.c_1 * cc * (2.0 - cc);
        for i in 0..n {
            for j in 0..n {
                let mut rank_mu = 0.0;
                for (w, y) in p.weights.iter().zip(&ys) {
                    rank_mu += w * y[i] * y[j];
                }
                let idx = i * n + j;
                self.cov[idx] = decay * self.cov[idx] + p.c_1 * self.p_c[i] * self.p_c[j] + p.c_mu * rank_mu;
            }
        }
        self.symmetrize();

        self.sigma *= ((cs / p.d_sigma) * (ps_norm / p.chi_n - 1.0)).exp();
        self.generation += 1;
        let repaired = self.decompose();
        Ok(TellReport { non_finite, repaired })
    }
}
