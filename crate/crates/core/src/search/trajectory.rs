use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{count_improving, improvement_rank, Landscape, Solution};
use crate::error::{Error, Result};
use crate::observations::{self, ObservationMatrix};
use crate::policies::{Decision, Policy};
use crate::seed::{self, Stream};

/// Diagnostics of one move.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub action: usize,
    /// Fitness after the move.
    pub fitness: f64,
    /// Number of improving moves available before the move.
    pub n_improving: usize,
    /// Rank of the chosen move by improvement, 1 = best, N = worst.
    pub chosen_rank: usize,
    /// `Δ` of the chosen move.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub horizon: usize,
    pub initial_fitness: f64,
    pub best_fitness: f64,
    pub steps: Vec<StepRecord>,
}

impl TrajectoryRecord {
    pub fn actions(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.action).collect()
    }
}

/// What [`drive`] reports to its observer after every move.
pub struct StepEvent<'a> {
    pub step: usize,
    pub bits_before: &'a [bool],
    pub deltas: &'a [f64],
    pub observation: Option<&'a ObservationMatrix>,
    pub record: StepRecord,
}

/// Execute exactly `horizon` moves of `policy` from `x0`, calling `observer`
/// after each one, and return the best fitness seen (including `x0`).
///
/// `hash_seed` keys the per-state seeds handed to the policy; identical
/// states always receive identical seeds. When `diagnostics` is false the
/// rank fields of the reported records are zero.
pub fn drive<L, P, F>(
    inst: &L,
    x0: &[bool],
    policy: &P,
    horizon: usize,
    hash_seed: u64,
    diagnostics: bool,
    mut observer: F,
) -> Result<f64>
where
    L: Landscape,
    P: Policy + ?Sized,
    F: FnMut(StepEvent<'_>),
{
    let n = inst.n();
    Error::check_len(n, x0.len())?;
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    let kind = policy.observation_kind();
    let mut solution = Solution::new(inst, x0.to_vec())?;
    let mut best = solution.fitness();
    let mut deltas = vec![0.0; n];
    let mut obs = kind.map(|k| ObservationMatrix::zeros(k, n));
    let mut before = if diagnostics { x0.to_vec() } else { Vec::new() };

    for step in 0..horizon {
        inst.deltas_into(solution.bits(), solution.cache(), &mut deltas);
        let state_seed = seed::state_hash(solution.bits(), hash_seed);
        if let Some(o) = obs.as_mut() {
            let ties = seed::subseed(state_seed, Stream::ObservationTies);
            observations::fill(o, &deltas, solution.fitness(), ties);
        }
        let action = policy.act(&Decision {
            bits: solution.bits(),
            fitness: solution.fitness(),
            deltas: &deltas,
            observation: obs.as_ref(),
            state_seed,
        })?;
        if action >= n {
            return Err(Error::IndexOutOfRange { index: action, n });
        }
        let (n_improving, chosen_rank) = if diagnostics {
            before.copy_from_slice(solution.bits());
            (count_improving(&deltas), improvement_rank(&deltas, action))
        } else {
            (0, 0)
        };
        let delta = solution.flip(inst, action)?;
        best = best.max(solution.fitness());
        observer(StepEvent {
            step,
            bits_before: &before,
            deltas: &deltas,
            observation: obs.as_ref(),
            record: StepRecord {
                action,
                fitness: solution.fitness(),
                n_improving,
                chosen_rank,
                delta,
            },
        });
    }
    Ok(best)
}

/// Reward `max f` over `x0..x_H`, without collecting diagnostics.
pub fn trajectory_reward<L, P>(inst: &L, x0: &[bool], policy: &P, horizon: usize, hash_seed: u64) -> Result<f64>
where
    L: Landscape,
    P: Policy + ?Sized,
{
    drive(inst, x0, policy, horizon, hash_seed, false, |_| {})
}

/// Run a trajectory and record every step.
pub fn run_trajectory<L, P>(
    inst: &L,
    x0: &[bool],
    policy: &P,
    horizon: usize,
    hash_seed: u64,
) -> Result<TrajectoryRecord>
where
    L: Landscape,
    P: Policy + ?Sized,
{
    Error::check_len(inst.n(), x0.len())?;
    let initial_fitness = inst.evaluate(x0);
    let mut steps = Vec::with_capacity(horizon);
    let best_fitness = drive(inst, x0, policy, horizon, hash_seed, true, |e| steps.push(e.record))?;
    Ok(TrajectoryRecord {
        horizon,
        initial_fitness,
        best_fitness,
        steps,
    })
}

pub const TRACE_COLUMNS: [&str; 6] = ["step", "action", "fitness", "n_improving", "chosen_rank", "delta_of_chosen"];

/// One row of the trace CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub action: usize,
    pub fitness: f64,
    pub n_improving: usize,
    pub chosen_rank: usize,
    pub delta_of_chosen: f64,
}

impl TraceRow {
    pub fn from_record(step: usize, r: &StepRecord) -> Self {
        Self {
            step,
            action: r.action,
            fitness: r.fitness,
            n_improving: r.n_improving,
            chosen_rank: r.chosen_rank,
            delta_of_chosen: r.delta,
        }
    }
}

/// Write trace rows as CSV with the columns of [`TRACE_COLUMNS`]; extra
/// leading columns (e.g. a trajectory id) are not part of this schema.
pub fn write_trace_csv<W: Write>(out: W, record: &TrajectoryRecord) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (t, s) in record.steps.iter().enumerate() {
        w.serialize(TraceRow::from_record(t, s))?;
    }
    w.flush().map_err(|e| Error::io("<trace>", e))?;
    Ok(())
}

/// Write already-built trace rows, preceded by an optional
/// `# provenance` comment line.
pub fn write_trace_csv_rows<W: Write>(mut out: W, rows: &[TraceRow], provenance: Option<&str>) -> Result<()> {
    if let Some(p) = provenance {
        writeln!(out, "# provenance {p}").map_err(|e| Error::io("<trace>", e))?;
    }
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<trace>", e))?;
    Ok(())
}
