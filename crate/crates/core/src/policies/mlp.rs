use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-row regression network: tanh hidden layers, affine scalar output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpArchitecture {
    #[serde(rename = "d")]
    pub input_dim: usize,
    pub hidden: Vec<usize>,
}

impl MlpArchitecture {
    pub fn new(input_dim: usize, hidden: Vec<usize>) -> Result<Self> {
        if input_dim == 0 || hidden.iter().any(|&h| h == 0) {
            return Err(Error::InvalidParameter(format!(
                "layer sizes must be positive (d = {input_dim}, hidden = {hidden:?})"
            )));
        }
        Ok(Self { input_dim, hidden })
    }

    /// Two hidden layers of 10 and 5 units.
    pub fn standard(input_dim: usize) -> Self {
        Self {
            input_dim,
            hidden: vec![10, 5],
        }
    }

    /// Layer widths from input to the single output.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.hidden.len() + 2);
        w.push(self.input_dim);
        w.extend_from_slice(&self.hidden);
        w.push(1);
        w
    }

    /// `sum_h n_{h-1} n_h + n_h`.
    pub fn parameter_count(&self) -> usize {
        self.widths().windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }
}

/// Parameters bound to an architecture.
///
/// Layout of `theta`: for each layer in order, the `n_out x n_in` weight
/// matrix row-major, then its `n_out` biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    arch: MlpArchitecture,
    theta: Vec<f64>,
    widths: Vec<usize>,
    max_width: usize,
}

impl Mlp {
    pub fn new(arch: MlpArchitecture, theta: Vec<f64>) -> Result<Self> {
        Error::check_len(arch.parameter_count(), theta.len())?;
        let widths = arch.widths();
        let max_width = *widths.iter().max().unwrap_or(&1);
        Ok(Self {
            arch,
            theta,
            widths,
            max_width,
        })
    }

    pub fn arch(&self) -> &MlpArchitecture {
        &self.arch
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Scratch buffer large enough for [`Mlp::forward_with`].
    pub fn scratch(&self) -> Vec<f64> {
        vec![0.0; 2 * self.max_width]
    }

    pub fn forward(&self, row: &[f64]) -> Result<f64> {
        Error::check_len(self.arch.input_dim, row.len())?;
        let mut scratch = self.scratch();
        Ok(self.forward_with(row, &mut scratch))
    }

    /// Forward pass reusing `scratch` (from [`Mlp::scratch`]); `row` must have
    /// `input_dim` entries.
    #[inline]
    pub fn forward_with(&self, row: &[f64], scratch: &mut [f64]) -> f64 {
        let (a, b) = scratch.split_at_mut(self.max_width);
        let (mut cur, mut next) = (a, b);
        cur[..row.len()].copy_from_slice(row);
        let mut offset = 0;
        let layers = self.widths.len() - 1;
        for l in 0..layers {
            let (n_in, n_out) = (self.widths[l], self.widths[l + 1]);
            let w = &self.theta[offset..offset + n_in * n_out];
            let bias = &self.theta[offset + n_in * n_out..offset + n_in * n_out + n_out];
            offset += n_in * n_out + n_out;
            let last = l + 1 == layers;
            for k in 0..n_out {
                let wk = &w[k * n_in..(k + 1) * n_in];
                let mut z = bias[k];
                for (wi, xi) in wk.iter().zip(&cur[..n_in]) {
                    z += wi * xi;
                }
                next[k] = if last { z } else { z.tanh() };
            }
            std::mem::swap(&mut cur, &mut next);
        }
        cur[0]
    }
}

pub fn mlp_forward(arch: &MlpArchitecture, theta: &[f64], row: &[f64]) -> Result<f64> {
    Mlp::new(arch.clone(), theta.to_vec())?.forward(row)
}
