use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mlp::{Mlp, MlpArchitecture};
use super::{Decision, Policy};
use crate::error::{Error, Result};
use crate::observations::{ObservationKind, ObservationMatrix};
use crate::seed::{self, Stream};

/// Scores every observation row with the same network and flips the
/// highest-scoring bit. Exact score ties are broken uniformly by a PRNG
/// seeded from the state.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuroLsPolicy {
    mlp: Mlp,
    kind: ObservationKind,
    master_seed: u64,
}

impl NeuroLsPolicy {
    pub fn new(arch: MlpArchitecture, theta: Vec<f64>, kind: ObservationKind) -> Result<Self> {
        if arch.input_dim != kind.dim() {
            return Err(Error::DimensionMismatch {
                expected: kind.dim(),
                actual: arch.input_dim,
            });
        }
        Ok(Self {
            mlp: Mlp::new(arch, theta)?,
            kind,
            master_seed: 0,
        })
    }

    /// Standard `[10, 5]` architecture for `kind`.
    pub fn standard(kind: ObservationKind, theta: Vec<f64>) -> Result<Self> {
        Self::new(MlpArchitecture::standard(kind.dim()), theta, kind)
    }

    pub fn with_master_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn mlp(&self) -> &Mlp {
        &self.mlp
    }

    pub fn theta(&self) -> &[f64] {
        self.mlp.theta()
    }

    pub fn kind(&self) -> ObservationKind {
        self.kind
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// Network output for every row.
    pub fn scores(&self, obs: &ObservationMatrix) -> Result<Vec<f64>> {
        if obs.dim() != self.mlp.arch().input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.mlp.arch().input_dim,
                actual: obs.dim(),
            });
        }
        let mut scratch = self.mlp.scratch();
        Ok((0..obs.rows()).map(|i| self.mlp.forward_with(obs.row(i), &mut scratch)).collect())
    }

    pub fn to_file(&self) -> PolicyFile {
        PolicyFile {
            arch: self.mlp.arch().clone(),
            theta: self.mlp.theta().to_vec(),
            observation_kind: self.kind,
            master_seed: self.master_seed,
        }
    }

    pub fn from_file(file: PolicyFile) -> Result<Self> {
        Ok(Self::new(file.arch, file.theta, file.observation_kind)?.with_master_seed(file.master_seed))
    }
}

/// Argmax of `scores`, ties broken uniformly with a PRNG from `tiebreak_seed`.
/// NaN scores never win unless every score is NaN.
pub(crate) fn argmax_seeded(scores: &[f64], tiebreak_seed: u64) -> usize {
    let mut best = f64::NEG_INFINITY;
    let mut count = 0usize;
    for &s in scores {
        if s > best {
            best = s;
            count = 1;
        } else if s == best {
            count += 1;
        }
    }
    if count == 0 {
        // only NaN (or -inf) scores
        let n = scores.len();
        let ninf = scores.iter().filter(|&&s| s == f64::NEG_INFINITY).count();
        if ninf == 0 {
            return seed::rng(tiebreak_seed).random_range(0..n);
        }
        count = ninf;
    }
    let pick = if count == 1 {
        0
    } else {
        seed::rng(tiebreak_seed).random_range(0..count)
    };
    scores
        .iter()
        .enumerate()
        .filter(|(_, &s)| s == best)
        .nth(pick)
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// Apply the network to each row and return the argmax.
pub fn neuro_ls_act(mlp: &Mlp, obs: &ObservationMatrix, tiebreak_seed: u64) -> Result<usize> {
    if obs.dim() != mlp.arch().input_dim {
        return Err(Error::DimensionMismatch {
            expected: mlp.arch().input_dim,
            actual: obs.dim(),
        });
    }
    if obs.rows() == 0 {
        return Err(Error::InvalidParameter("empty observation".into()));
    }
    let mut scratch = mlp.scratch();
    let scores: Vec<f64> = (0..obs.rows()).map(|i| mlp.forward_with(obs.row(i), &mut scratch)).collect();
    Ok(argmax_seeded(&scores, tiebreak_seed))
}

impl Policy for NeuroLsPolicy {
    fn name(&self) -> String {
        format!("Neuro-LS[{}]", self.kind)
    }

    fn observation_kind(&self) -> Option<ObservationKind> {
        Some(self.kind)
    }

    fn act(&self, d: &Decision<'_>) -> Result<usize> {
        let obs = d
            .observation
            .ok_or_else(|| Error::InvalidParameter("neural policy needs an observation".into()))?;
        neuro_ls_act(&self.mlp, obs, seed::subseed(d.state_seed, Stream::ArgmaxTies))
    }
}

/// On-disk policy: `{arch: {d, hidden}, theta, observation_kind, master_seed}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyFile {
    pub arch: MlpArchitecture,
    pub theta: Vec<f64>,
    pub observation_kind: ObservationKind,
    pub master_seed: u64,
}

/// JSON text with `theta` written to 17 significant digits.
pub fn write_policy_file(file: &PolicyFile, provenance: Option<&str>) -> String {
    let mut s = String::from("{\n");
    if let Some(p) = provenance {
        let _ = writeln!(s, "  \"provenance\": {},", serde_json::Value::from(p));
    }
    let hidden: Vec<String> = file.arch.hidden.iter().map(usize::to_string).collect();
    let _ = writeln!(s, "  \"arch\": {{\"d\": {}, \"hidden\": [{}]}},", file.arch.input_dim, hidden.join(", "));
    let theta: Vec<String> = file.theta.iter().map(|v| format!("{v:.16e}")).collect();
    let _ = writeln!(s, "  \"theta\": [{}],", theta.join(", "));
    let _ = writeln!(s, "  \"observation_kind\": \"{}\",", file.observation_kind);
    let _ = writeln!(s, "  \"master_seed\": {}", file.master_seed);
    s.push_str("}\n");
    s
}

pub fn read_policy_file(path: &Path) -> Result<NeuroLsPolicy> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: PolicyFile = serde_json::from_str(&text).map_err(|e| Error::malformed(path, e.to_string()))?;
    NeuroLsPolicy::from_file(file).map_err(|e| Error::malformed(path, e.to_string()))
}

impl NeuroLsPolicy {
    pub fn save(&self, path: &Path, provenance: Option<&str>) -> Result<()> {
        fs::write(path, write_policy_file(&self.to_file(), provenance)).map_err(|e| Error::io(path, e))
    }
}
