//! Head-to-head testing, Welch statistics, and trajectory analysis exports.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::{Instance, InstanceSet};
use crate::observations::ObservationMatrix;
use crate::policies::{NeuroLsPolicy, Policy, Strategy, StrategyClass};
use crate::search::{drive, run_trajectory, TraceRow, TrajectoryRecord};
use crate::search::Landscape;
use crate::training::score_vector;

/// Significance level for the underline flag.
pub const SIGNIFICANCE: f64 = 0.001;

const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + 7.5;
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Continued fraction for the incomplete beta (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=500 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn beta_reg(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Two-sided p-value of a Student t statistic.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if t.is_nan() || df.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    beta_reg(0.5 * df, 0.5, df / (df + t * t))
}

/// Welch statistic, Welch–Satterthwaite degrees of freedom and two-sided p.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchResult {
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let ss = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>();
    (m, ss / (n - 1.0))
}

/// Welch's unequal-variance t-test of `a` against `b`. When both samples
/// have zero variance the result is exact: equal means give `t = 0, p = 1`,
/// different means give an infinite `t` and `p = 0`.
pub fn welch_t(a: &[f64], b: &[f64]) -> Result<WelchResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidParameter("Welch test needs at least two values per sample".into()));
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (sa, sb) = (va / na, vb / nb);
    let se2 = sa + sb;
    if se2 == 0.0 {
        let df = na + nb - 2.0;
        return Ok(if ma == mb {
            WelchResult { t: 0.0, df, p: 1.0 }
        } else {
            WelchResult {
                t: if ma > mb { f64::INFINITY } else { f64::NEG_INFINITY },
                df,
                p: 0.0,
            }
        });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    Ok(WelchResult {
        t,
        df,
        p: student_t_two_sided(t, df),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyScores {
    pub name: String,
    pub learned: bool,
    pub mean: f64,
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub learned: String,
    pub baseline: String,
    pub welch: WelchResult,
}

/// Results of one test protocol on one instance set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub strategies: Vec<StrategyScores>,
    pub comparisons: Vec<Comparison>,
    /// Decimal places used by the text table.
    pub decimals: usize,
}

impl EvalReport {
    pub fn get(&self, name: &str) -> Option<&StrategyScores> {
        self.strategies.iter().find(|s| s.name == name)
    }

    pub fn comparison(&self, learned: &str, baseline: &str) -> Option<&WelchResult> {
        self.comparisons
            .iter()
            .find(|c| c.learned == learned && c.baseline == baseline)
            .map(|c| &c.welch)
    }

    /// Strategies sharing the highest mean.
    pub fn bold(&self, name: &str) -> bool {
        let best = self.strategies.iter().map(|s| s.mean).fold(f64::NEG_INFINITY, f64::max);
        self.get(name).is_some_and(|s| s.mean == best)
    }

    /// Learned strategy beating every baseline with `p < 0.001`.
    pub fn underline(&self, name: &str) -> bool {
        let Some(s) = self.get(name) else { return false };
        if !s.learned {
            return false;
        }
        let baselines: Vec<&StrategyScores> = self.strategies.iter().filter(|b| !b.learned).collect();
        !baselines.is_empty()
            && baselines.iter().all(|b| {
                s.mean > b.mean && self.comparison(name, &b.name).is_some_and(|w| w.p < SIGNIFICANCE)
            })
    }

    /// CSV `strategy,class,mean,bold,underline`.
    pub fn write_summary_csv<W: Write>(&self, mut out: W, provenance: Option<&str>) -> Result<()> {
        header(&mut out, provenance)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["strategy", "class", "mean", "bold", "underline"])?;
        for s in &self.strategies {
            w.write_record([
                s.name.clone(),
                class_name(s.learned).into(),
                s.mean.to_string(),
                self.bold(&s.name).to_string(),
                self.underline(&s.name).to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<report>", e))?;
        Ok(())
    }

    /// CSV `learned,baseline,t,df,p`.
    pub fn write_comparisons_csv<W: Write>(&self, mut out: W, provenance: Option<&str>) -> Result<()> {
        header(&mut out, provenance)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["learned", "baseline", "t", "df", "p"])?;
        for c in &self.comparisons {
            w.write_record([
                c.learned.clone(),
                c.baseline.clone(),
                c.welch.t.to_string(),
                c.welch.df.to_string(),
                c.welch.p.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<report>", e))?;
        Ok(())
    }

    /// CSV `strategy,unit,score`, one row per trajectory.
    pub fn write_scores_csv<W: Write>(&self, mut out: W, provenance: Option<&str>) -> Result<()> {
        header(&mut out, provenance)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["strategy", "unit", "score"])?;
        for s in &self.strategies {
            for (i, v) in s.scores.iter().enumerate() {
                w.write_record([s.name.clone(), i.to_string(), v.to_string()])?;
            }
        }
        w.flush().map_err(|e| Error::io("<report>", e))?;
        Ok(())
    }

    /// Fixed-width table; `*` marks bold and `_` marks underline.
    pub fn to_table(&self) -> String {
        let width = self.strategies.iter().map(|s| s.name.len()).max().unwrap_or(8).max(8);
        let mut out = format!("{:<width$}  {:>12}  bold  underline\n", "strategy", "mean");
        for s in &self.strategies {
            out.push_str(&format!(
                "{:<width$}  {:>12.prec$}  {:<4}  {}\n",
                s.name,
                s.mean,
                if self.bold(&s.name) { "*" } else { "" },
                if self.underline(&s.name) { "_" } else { "" },
                prec = self.decimals,
            ));
        }
        for c in &self.comparisons {
            out.push_str(&format!(
                "{} vs {}: t = {:.4}, df = {:.2}, p = {:.3e}\n",
                c.learned, c.baseline, c.welch.t, c.welch.df, c.welch.p
            ));
        }
        out
    }
}

fn class_name(learned: bool) -> &'static str {
    if learned {
        "learned"
    } else {
        "baseline"
    }
}

fn header<W: Write>(out: &mut W, provenance: Option<&str>) -> Result<()> {
    if let Some(p) = provenance {
        writeln!(out, "# provenance {p}").map_err(|e| Error::io("<report>", e))?;
    }
    Ok(())
}

/// Every strategy runs one trajectory per `(instance, start)` pair of
/// `set`; each learned strategy is Welch-tested against each baseline.
/// `horizon` defaults to twice each instance's size.
pub fn evaluate_testset(strategies: &[Strategy], set: &InstanceSet, horizon: Option<usize>) -> Result<EvalReport> {
    if strategies.is_empty() {
        return Err(Error::InvalidParameter("no strategies to evaluate".into()));
    }
    if set.is_empty() {
        return Err(Error::InvalidParameter("empty test set".into()));
    }
    let mut scored = Vec::with_capacity(strategies.len());
    for s in strategies {
        let scores = score_vector(&s.policy, set, horizon)?;
        scored.push(StrategyScores {
            name: s.name.clone(),
            learned: s.class == StrategyClass::Learned,
            mean: scores.iter().sum::<f64>() / scores.len() as f64,
            scores,
        });
    }
    let mut comparisons = Vec::new();
    for l in scored.iter().filter(|s| s.learned) {
        for b in scored.iter().filter(|s| !s.learned) {
            comparisons.push(Comparison {
                learned: l.name.clone(),
                baseline: b.name.clone(),
                welch: welch_t(&l.scores, &b.scores)?,
            });
        }
    }
    let decimals = if set.instances.iter().all(|i| matches!(i, Instance::Nk(_))) { 3 } else { 1 };
    Ok(EvalReport {
        strategies: scored,
        comparisons,
        decimals,
    })
}

/// [`evaluate_testset`] on each labelled set.
pub fn evaluate_ood(strategies: &[Strategy], sets: &[(String, InstanceSet)]) -> Result<Vec<(String, EvalReport)>> {
    sets.iter()
        .map(|(label, set)| Ok((label.clone(), evaluate_testset(strategies, set, None)?)))
        .collect()
}

/// Step-by-step trajectory with improvement counts and chosen-move ranks.
pub fn replay_with_diagnostics<P: Policy + ?Sized>(
    policy: &P,
    inst: &Instance,
    x0: &[bool],
    horizon: usize,
    hash_seed: u64,
) -> Result<Vec<TraceRow>> {
    let rec: TrajectoryRecord = run_trajectory(inst, x0, policy, horizon, hash_seed)?;
    Ok(rec.steps.iter().enumerate().map(|(t, s)| TraceRow::from_record(t, s)).collect())
}

/// `(observation row, network output)` pairs seen while replaying.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResponseCurve {
    pub dim: usize,
    pub inputs: Vec<Vec<f64>>,
    pub outputs: Vec<f64>,
}

impl ResponseCurve {
    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    /// Column names: `x,g` for one input, `x1,x2,g` for two.
    pub fn columns(&self) -> Vec<String> {
        let mut c: Vec<String> = if self.dim == 1 {
            vec!["x".into()]
        } else {
            (1..=self.dim).map(|i| format!("x{i}")).collect()
        };
        c.push("g".into());
        c
    }

    pub fn write_csv<W: Write>(&self, mut out: W, provenance: Option<&str>) -> Result<()> {
        header(&mut out, provenance)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.columns())?;
        for (x, g) in self.inputs.iter().zip(&self.outputs) {
            let mut row: Vec<String> = x.iter().map(f64::to_string).collect();
            row.push(g.to_string());
            w.write_record(row)?;
        }
        w.flush().map_err(|e| Error::io("<response>", e))?;
        Ok(())
    }
}

/// Everything [`analyze`] produces.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub traces: Vec<Vec<TraceRow>>,
    pub response: ResponseCurve,
}

/// Replay the first `trajectories` `(instance, start)` pairs of `set`,
/// recording traces and every observation row with its score.
pub fn analyze(policy: &NeuroLsPolicy, set: &InstanceSet, trajectories: usize, horizon: Option<usize>) -> Result<Analysis> {
    let dim = policy.kind().dim();
    if !(1..=2).contains(&dim) {
        return Err(Error::InvalidParameter(format!("response export needs d in 1..=2, got {dim}")));
    }
    if set.is_empty() {
        return Err(Error::InvalidParameter("empty instance set".into()));
    }
    let mut traces = Vec::new();
    let mut response = ResponseCurve {
        dim,
        ..Default::default()
    };
    for (i, j) in set.units().into_iter().take(trajectories) {
        let inst = &set.instances[i];
        let h = horizon.unwrap_or(2 * inst.n());
        let mut rows = Vec::with_capacity(h);
        let mut err = None;
        drive(inst, &set.start_points[i][j], policy, h, set.trajectory_seed(i, j), true, |e| {
            rows.push(TraceRow::from_record(e.step, &e.record));
            if let Some(obs) = e.observation {
                if let Err(x) = collect(policy, obs, &mut response) {
                    err.get_or_insert(x);
                }
            }
        })?;
        if let Some(e) = err {
            return Err(e);
        }
        traces.push(rows);
    }
    Ok(Analysis { traces, response })
}

fn collect(policy: &NeuroLsPolicy, obs: &ObservationMatrix, curve: &mut ResponseCurve) -> Result<()> {
    let scores = policy.scores(obs)?;
    for (r, g) in scores.into_iter().enumerate() {
        curve.inputs.push(obs.row(r).to_vec());
        curve.outputs.push(g);
    }
    Ok(())
}

/// Response curve over `trajectories` replays of `set`.
pub fn export_response(
    policy: &NeuroLsPolicy,
    set: &InstanceSet,
    trajectories: usize,
    horizon: Option<usize>,
) -> Result<ResponseCurve> {
    analyze(policy, set, trajectories, horizon).map(|a| a.response)
}
