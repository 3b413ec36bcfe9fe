//! Neuro-evolution of policy weights with CMA-ES.
//!
//! Each generation draws a fresh batch of training instances from a seed
//! keyed by the generation (not the run), scores every candidate on the
//! same `(instance, start)` pairs, and checks the generation's best
//! candidate on a fixed validation set. Scores are reduced in a fixed
//! order, so the worker count never changes a result.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cmaes::CmaState;
use crate::error::{Error, Result};
use crate::instances::{InstanceSet, Role};
use crate::observations::ObservationKind;
use crate::policies::{BestImprovement, MlpArchitecture, NeuroLsPolicy, OneCommaLambda, Policy, PolicyFile};
use crate::search::{trajectory_reward, Landscape};
use crate::seed::{self, Stream};

fn default_q() -> usize {
    10
}
fn default_r() -> usize {
    10
}
fn default_generations() -> usize {
    100
}
fn default_sigma() -> f64 {
    0.2
}
fn default_validation() -> usize {
    10
}
fn default_runs() -> usize {
    10
}
fn default_hidden() -> Vec<usize> {
    vec![10, 5]
}

/// How the final policy is chosen among all runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChampionSelection {
    /// Highest validation score over every logged generation of every run.
    #[default]
    BestLogged,
    /// Best validation score among each run's last generation.
    FinalGeneration,
}

/// Experiment configuration. `n`, `k`, `observation` and `master_seed` are
/// required; everything else has the protocol default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub n: usize,
    pub k: usize,
    pub observation: ObservationKind,
    pub master_seed: u64,
    /// Training instances per generation.
    #[serde(default = "default_q")]
    pub q: usize,
    /// Restarts per training instance.
    #[serde(default = "default_r")]
    pub r: usize,
    #[serde(default = "default_generations")]
    pub generations: usize,
    /// Move budget; `2n` when absent.
    #[serde(default)]
    pub horizon: Option<usize>,
    #[serde(default = "default_sigma")]
    pub sigma_init: f64,
    #[serde(default)]
    pub pop_size: Option<usize>,
    #[serde(default = "default_validation")]
    pub validation_instances: usize,
    #[serde(default = "default_validation")]
    pub validation_restarts: usize,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
    #[serde(default)]
    pub champion: ChampionSelection,
}

impl TrainConfig {
    pub fn new(n: usize, k: usize, observation: ObservationKind, master_seed: u64) -> Self {
        Self {
            n,
            k,
            observation,
            master_seed,
            q: default_q(),
            r: default_r(),
            generations: default_generations(),
            horizon: None,
            sigma_init: default_sigma(),
            pop_size: None,
            validation_instances: default_validation(),
            validation_restarts: default_validation(),
            runs: default_runs(),
            hidden: default_hidden(),
            champion: ChampionSelection::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.message().to_owned()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn horizon(&self) -> usize {
        self.horizon.unwrap_or(2 * self.n)
    }

    pub fn architecture(&self) -> Result<MlpArchitecture> {
        MlpArchitecture::new(self.observation.dim(), self.hidden.clone())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("n", self.n),
            ("q", self.q),
            ("r", self.r),
            ("generations", self.generations),
            ("validation_instances", self.validation_instances),
            ("validation_restarts", self.validation_restarts),
            ("runs", self.runs),
            ("horizon", self.horizon()),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if self.k >= self.n {
            return Err(Error::Config(format!("k = {} must be below n = {}", self.k, self.n)));
        }
        if !(self.sigma_init > 0.0) {
            return Err(Error::Config("sigma_init must be positive".into()));
        }
        self.architecture().map(|_| ())
    }

    /// The `q x r` training batch of generation `generation`.
    pub fn training_batch(&self, generation: usize) -> Result<InstanceSet> {
        let master = seed::derive(self.master_seed, Stream::TrainInstance, &[generation as u64]);
        InstanceSet::generate_nk(Role::Train, self.n, self.k, self.q, self.r, master)
    }

    pub fn validation_set(&self) -> Result<InstanceSet> {
        InstanceSet::generate_nk(
            Role::Validation,
            self.n,
            self.k,
            self.validation_instances,
            self.validation_restarts,
            self.master_seed,
        )
    }
}

/// Reward of every `(instance, restart)` pair of `set`, in set order.
/// `horizon` defaults to twice each instance's size.
pub fn score_vector<P: Policy + ?Sized>(policy: &P, set: &InstanceSet, horizon: Option<usize>) -> Result<Vec<f64>> {
    set.units()
        .into_par_iter()
        .map(|(i, j)| {
            let inst = &set.instances[i];
            let h = horizon.unwrap_or(2 * inst.n());
            trajectory_reward(inst, &set.start_points[i][j], policy, h, set.trajectory_seed(i, j))
        })
        .collect()
}

/// Mean reward over every pair of `set`.
pub fn empirical_score<P: Policy + ?Sized>(policy: &P, set: &InstanceSet, horizon: Option<usize>) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::InvalidParameter("empty instance batch".into()));
    }
    let scores = score_vector(policy, set, horizon)?;
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// One logged generation of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationLog {
    pub generation: usize,
    pub run: usize,
    /// Best training score in the population.
    pub train: f64,
    /// Validation score of that best candidate.
    pub valid: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub run: usize,
    pub generation: usize,
    pub train: f64,
    pub valid: f64,
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub best: Individual,
    pub last: Individual,
}

/// Summary over runs for one generation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationSummary {
    pub generation: usize,
    pub best_train: f64,
    pub best_valid: f64,
    pub min_valid: f64,
    pub max_valid: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub config: TrainConfig,
    pub logs: Vec<GenerationLog>,
    pub runs: Vec<RunSummary>,
    /// BHC+ score on the validation set.
    pub bhc_validation: f64,
    pub champion: Individual,
}

impl TrainReport {
    pub fn champion_policy(&self) -> Result<NeuroLsPolicy> {
        NeuroLsPolicy::new(self.config.architecture()?, self.champion.theta.clone(), self.config.observation)
            .map(|p| p.with_master_seed(self.config.master_seed))
    }

    pub fn champion_file(&self) -> Result<PolicyFile> {
        Ok(PolicyFile {
            arch: self.config.architecture()?,
            theta: self.champion.theta.clone(),
            observation_kind: self.config.observation,
            master_seed: self.config.master_seed,
        })
    }

    pub fn summary(&self) -> Vec<GenerationSummary> {
        (0..self.config.generations)
            .filter_map(|g| {
                let rows: Vec<&GenerationLog> = self.logs.iter().filter(|l| l.generation == g).collect();
                if rows.is_empty() {
                    return None;
                }
                let fold = |f: fn(f64, f64) -> f64, init: f64, pick: fn(&GenerationLog) -> f64| {
                    rows.iter().map(|l| pick(l)).fold(init, f)
                };
                Some(GenerationSummary {
                    generation: g,
                    best_train: fold(f64::max, f64::NEG_INFINITY, |l| l.train),
                    best_valid: fold(f64::max, f64::NEG_INFINITY, |l| l.valid),
                    min_valid: fold(f64::min, f64::INFINITY, |l| l.valid),
                    max_valid: fold(f64::max, f64::NEG_INFINITY, |l| l.valid),
                })
            })
            .collect()
    }

    /// Best validation score of a single run over its logged generations.
    pub fn best_run_validation(&self) -> f64 {
        self.runs.iter().map(|r| r.best.valid).fold(f64::NEG_INFINITY, f64::max)
    }

    /// CSV `generation,run,train_F,valid_F`.
    pub fn write_csv<W: Write>(&self, mut out: W, provenance: Option<&str>) -> Result<()> {
        if let Some(p) = provenance {
            writeln!(out, "# provenance {p}").map_err(|e| Error::io("<report>", e))?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["generation", "run", "train_F", "valid_F"])?;
        for l in &self.logs {
            w.write_record([
                l.generation.to_string(),
                l.run.to_string(),
                l.train.to_string(),
                l.valid.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<report>", e))?;
        Ok(())
    }
}

/// Checkpoint written after every generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Checkpoint {
    config: TrainConfig,
    bhc_validation: f64,
    logs: Vec<GenerationLog>,
    runs: Vec<RunSummary>,
    current: Option<RunProgress>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RunProgress {
    run: usize,
    cma: CmaState,
    best: Option<Individual>,
    last: Option<Individual>,
}

/// Knobs that affect speed and persistence but never results.
#[derive(Debug, Clone, Default)]
pub struct TrainOptions {
    /// Thread count; 0 uses the global pool.
    pub workers: usize,
    /// Written after every generation; resumed from when it already exists.
    pub checkpoint: Option<PathBuf>,
    /// Stop (leaving the checkpoint) after this many generations in this
    /// call. Used to exercise resumption.
    pub max_generations: Option<usize>,
}

pub fn train(config: &TrainConfig) -> Result<TrainReport> {
    train_with(config, &TrainOptions::default(), |_| {})?
        .ok_or_else(|| Error::InvalidParameter("training stopped early".into()))
}

/// Run training. Returns `None` when `max_generations` interrupted it.
pub fn train_with<F>(config: &TrainConfig, opts: &TrainOptions, mut progress: F) -> Result<Option<TrainReport>>
where
    F: FnMut(&GenerationLog) + Send,
{
    config.validate()?;
    if opts.workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.workers)
            .build()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        pool.install(|| train_inner(config, opts, &mut progress))
    } else {
        train_inner(config, opts, &mut progress)
    }
}

fn load_checkpoint(path: &Path, config: &TrainConfig) -> Result<Option<Checkpoint>> {
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let cp: Checkpoint = serde_json::from_str(&text).map_err(|e| Error::malformed(path, e.to_string()))?;
    if &cp.config != config {
        return Err(Error::malformed(path, "checkpoint was written for a different configuration"));
    }
    Ok(Some(cp))
}

fn save_checkpoint(path: &Path, cp: &Checkpoint) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, serde_json::to_string(cp)?).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn train_inner(
    config: &TrainConfig,
    opts: &TrainOptions,
    progress: &mut dyn FnMut(&GenerationLog),
) -> Result<Option<TrainReport>> {
    let arch = config.architecture()?;
    let dim = arch.parameter_count();
    let horizon = Some(config.horizon());
    let validation = config.validation_set()?;
    let kind = config.observation;
    let make = |theta: Vec<f64>| NeuroLsPolicy::new(arch.clone(), theta, kind).map(|p| p.with_master_seed(config.master_seed));

    let mut cp = match opts.checkpoint.as_deref() {
        Some(p) => load_checkpoint(p, config)?,
        None => None,
    }
    .map(Ok)
    .unwrap_or_else(|| -> Result<Checkpoint> {
        Ok(Checkpoint {
            config: config.clone(),
            bhc_validation: empirical_score(&BestImprovement, &validation, horizon)?,
            logs: Vec::new(),
            runs: Vec::new(),
            current: None,
        })
    })?;

    let mut done_here = 0usize;
    while cp.runs.len() < config.runs {
        let run = cp.runs.len();
        let mut state = match cp.current.take() {
            Some(p) => p,
            None => {
                let mut rng = seed::rng(seed::derive(config.master_seed, Stream::RunMean, &[run as u64]));
                let mean: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
                let cma_seed = seed::derive(config.master_seed, Stream::CmaSampling, &[run as u64]);
                RunProgress {
                    run,
                    cma: CmaState::new(dim, mean, config.sigma_init, config.pop_size, cma_seed)?,
                    best: None,
                    last: None,
                }
            }
        };

        while (state.cma.generation as usize) < config.generations {
            if opts.max_generations.is_some_and(|m| done_here >= m) {
                cp.current = Some(state);
                if let Some(p) = opts.checkpoint.as_deref() {
                    save_checkpoint(p, &cp)?;
                }
                return Ok(None);
            }
            let generation = state.cma.generation as usize;
            let batch = config.training_batch(generation)?;
            let candidates = state.cma.ask();
            let scores = candidates
                .par_iter()
                .map(|theta| empirical_score(&make(theta.clone())?, &batch, horizon))
                .collect::<Result<Vec<f64>>>()?;
            let mut best_idx = 0;
            for (i, &s) in scores.iter().enumerate() {
                if s > scores[best_idx] || scores[best_idx].is_nan() {
                    best_idx = i;
                }
            }
            let theta = candidates[best_idx].clone();
            let valid = empirical_score(&make(theta.clone())?, &validation, horizon)?;
            state.cma.tell(&candidates, &scores, true)?;

            let ind = Individual {
                run,
                generation,
                train: scores[best_idx],
                valid,
                theta,
            };
            if state.best.as_ref().is_none_or(|b| valid > b.valid) {
                state.best = Some(ind.clone());
            }
            state.last = Some(ind);
            let log = GenerationLog {
                generation,
                run,
                train: scores[best_idx],
                valid,
            };
            progress(&log);
            cp.logs.push(log);
            done_here += 1;

            if let Some(p) = opts.checkpoint.as_deref() {
                cp.current = Some(state.clone());
                save_checkpoint(p, &cp)?;
                cp.current = None;
            }
        }
        cp.runs.push(RunSummary {
            best: state.best.expect("at least one generation"),
            last: state.last.expect("at least one generation"),
        });
        if let Some(p) = opts.checkpoint.as_deref() {
            save_checkpoint(p, &cp)?;
        }
    }

    let pick = |r: &RunSummary| match config.champion {
        ChampionSelection::BestLogged => r.best.clone(),
        ChampionSelection::FinalGeneration => r.last.clone(),
    };
    let mut champion = pick(&cp.runs[0]);
    for r in &cp.runs[1..] {
        let c = pick(r);
        if c.valid > champion.valid {
            champion = c;
        }
    }
    Ok(Some(TrainReport {
        config: config.clone(),
        logs: cp.logs,
        runs: cp.runs,
        bhc_validation: cp.bhc_validation,
        champion,
    }))
}

/// Divisors of `n`, which always include 1 and `n`.
pub fn default_lambda_grid(n: usize) -> Vec<usize> {
    (1..=n).filter(|d| n % d == 0).collect()
}

/// Score of `(1, λ)-ES` for each grid value on a calibration batch, and the
/// best λ (smallest among ties).
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub lambda: usize,
    pub scores: Vec<(usize, f64)>,
}

pub fn calibrate_lambda(
    n: usize,
    k: usize,
    grid: &[usize],
    instances: usize,
    restarts: usize,
    master_seed: u64,
) -> Result<Calibration> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty lambda grid".into()));
    }
    if let Some(&bad) = grid.iter().find(|&&l| l == 0 || l > n) {
        return Err(Error::InvalidParameter(format!("lambda {bad} outside 1..={n}")));
    }
    let master = seed::derive(master_seed, Stream::CalibrationInstance, &[]);
    let batch = InstanceSet::generate_nk(Role::Train, n, k, instances, restarts, master)?;
    let mut sorted = grid.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut scores = Vec::with_capacity(sorted.len());
    let mut best = (sorted[0], f64::NEG_INFINITY);
    for &lambda in &sorted {
        let s = empirical_score(&OneCommaLambda::new(lambda), &batch, None)?;
        if s > best.1 {
            best = (lambda, s);
        }
        scores.push((lambda, s));
    }
    Ok(Calibration { lambda: best.0, scores })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> TrainConfig {
        let mut c = TrainConfig::new(12, 2, ObservationKind::O4, 5);
        c.q = 2;
        c.r = 2;
        c.generations = 3;
        c.runs = 2;
        c.validation_instances = 2;
        c.validation_restarts = 2;
        c
    }

    #[test]
    fn config_defaults_and_missing_fields() {
        let c = TrainConfig::from_toml("n = 64\nk = 8\nobservation = \"o4\"\nmaster_seed = 1\n").unwrap();
        assert_eq!((c.q, c.r, c.generations, c.runs), (10, 10, 100, 10));
        assert_eq!(c.horizon(), 128);
        assert_eq!(c.sigma_init, 0.2);
        let err = TrainConfig::from_toml("n = 64\nobservation = \"o4\"\nmaster_seed = 1\n").unwrap_err();
        assert!(err.to_string().contains("`k`"), "{err}");
        assert!(TrainConfig::from_toml("n = 4\nk = 1\nobservation = \"o1\"\nmaster_seed = 1\nq = 0\n").is_err());
        assert_eq!(TrainConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn one_generation_one_run() {
        let mut c = tiny();
        c.generations = 1;
        c.runs = 1;
        let rep = train(&c).unwrap();
        assert_eq!(rep.logs.len(), 1);
        assert_eq!(rep.champion.valid, rep.logs[0].valid);
        assert_eq!(rep.champion.generation, 0);
    }

    #[test]
    fn champion_is_max_logged_validation() {
        let rep = train(&tiny()).unwrap();
        let max = rep.logs.iter().map(|l| l.valid).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(rep.champion.valid, max);
        assert_eq!(rep.logs.len(), 6);
        assert_eq!(rep.summary().len(), 3);
    }

    #[test]
    fn single_pair_score_is_trajectory_reward() {
        let set = InstanceSet::generate_nk(Role::Test, 10, 1, 1, 1, 3).unwrap();
        let s = empirical_score(&BestImprovement, &set, Some(20)).unwrap();
        let direct = trajectory_reward(&set.instances[0], &set.start_points[0][0], &BestImprovement, 20, set.trajectory_seed(0, 0)).unwrap();
        assert_eq!(s, direct);
    }

    #[test]
    fn lambda_grid() {
        assert_eq!(default_lambda_grid(12), vec![1, 2, 3, 4, 6, 12]);
        let c = calibrate_lambda(8, 1, &[8], 2, 2, 1).unwrap();
        assert_eq!(c.lambda, 8);
        assert!(calibrate_lambda(8, 1, &[], 2, 2, 1).is_err());
        assert!(calibrate_lambda(8, 1, &[9], 2, 2, 1).is_err());
    }
}
