//! Move-selection policies: the per-row neural policy and the hill-climbing
//! and evolution-strategy baselines.
//!
//! Every policy is deterministic and memoryless. Whatever randomness a
//! policy needs comes from `Decision::state_seed`, which the trajectory
//! engine derives from the current bits, so revisiting a state repeats the
//! decision.

mod baselines;
mod mlp;
mod neural;

pub use baselines::{
    bhc_plus_act, fhc_plus_act, jump_index, one_comma_lambda_act, one_comma_lambda_act_with, BestImprovement,
    FirstImprovement, OneCommaLambda, Sampling,
};
pub use mlp::{mlp_forward, Mlp, MlpArchitecture};
pub use neural::{neuro_ls_act, read_policy_file, write_policy_file, NeuroLsPolicy, PolicyFile};

pub use crate::seed::state_hash;

use crate::error::Result;
use crate::observations::{ObservationKind, ObservationMatrix};

/// Everything a policy may look at when choosing a move.
#[derive(Debug, Clone, Copy)]
pub struct Decision<'a> {
    pub bits: &'a [bool],
    pub fitness: f64,
    /// `Δ_i = f(x) - f(flip_i(x))`.
    pub deltas: &'a [f64],
    /// Present when the policy declares an observation kind.
    pub observation: Option<&'a ObservationMatrix>,
    /// Seed derived from the current state.
    pub state_seed: u64,
}

pub trait Policy: Send + Sync {
    fn name(&self) -> String;

    /// Observation the engine must build before calling [`Policy::act`].
    fn observation_kind(&self) -> Option<ObservationKind> {
        None
    }

    /// Index of the bit to flip, in `0..deltas.len()`.
    fn act(&self, decision: &Decision<'_>) -> Result<usize>;
}

impl<P: Policy + ?Sized> Policy for Box<P> {
    fn name(&self) -> String {
        (**self).name()
    }

    fn observation_kind(&self) -> Option<ObservationKind> {
        (**self).observation_kind()
    }

    fn act(&self, decision: &Decision<'_>) -> Result<usize> {
        (**self).act(decision)
    }
}

impl<P: Policy + ?Sized> Policy for &P {
    fn name(&self) -> String {
        (**self).name()
    }

    fn observation_kind(&self) -> Option<ObservationKind> {
        (**self).observation_kind()
    }

    fn act(&self, decision: &Decision<'_>) -> Result<usize> {
        (**self).act(decision)
    }
}

/// Whether a strategy is a learned policy or a reference heuristic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyClass {
    Learned,
    Baseline,
}

/// A named policy participating in an evaluation.
pub struct Strategy {
    pub name: String,
    pub class: StrategyClass,
    pub policy: Box<dyn Policy>,
}

impl Strategy {
    pub fn learned(name: impl Into<String>, policy: NeuroLsPolicy) -> Self {
        Self {
            name: name.into(),
            class: StrategyClass::Learned,
            policy: Box::new(policy),
        }
    }

    pub fn baseline(policy: impl Policy + 'static) -> Self {
        Self {
            name: policy.name(),
            class: StrategyClass::Baseline,
            policy: Box::new(policy),
        }
    }
}

impl std::fmt::Debug for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Strategy")
            .field("name", &self.name)
            .field("class", &self.class)
            .finish()
    }
}
