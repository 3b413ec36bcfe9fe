use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use neurols::evaluation::{analyze, evaluate_testset};
use neurols::instances::{Family, InstanceSet, PuboiParams, Role};
use neurols::policies::{read_policy_file, BestImprovement, FirstImprovement, OneCommaLambda, Strategy};
use neurols::provenance::ExperimentManifest;
use neurols::search::write_trace_csv_rows;
use neurols::training::{calibrate_lambda, default_lambda_grid, train_with, TrainConfig, TrainOptions};
use neurols::ObservationKind;

#[derive(Parser)]
#[command(name = "neurols", version, about = "Neuro-evolved local search experiments")]
struct Cli {
    /// Thread count (0 = all cores). Never changes results.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Nk,
    Qubo,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    Neuro,
    Bhc,
    Fhc,
    Es,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance set with its manifest.
    Generate {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        n: usize,
        /// NK epistasis.
        #[arg(long, default_value_t = 0)]
        k: usize,
        /// QUBO density as a fraction of n(n-1)/2.
        #[arg(long, default_value_t = 0.2)]
        m_frac: f64,
        /// QUBO family: uni, imp or ic.
        #[arg(long, default_value = "uni")]
        family: Family,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        restarts: usize,
        #[arg(long, default_value = "test")]
        role: Role,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train policies from a TOML config; resumes from `<out>/checkpoint.json`.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `master_seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `observation`.
        #[arg(long)]
        obs: Option<ObservationKind>,
    },
    /// Compare strategies on a test set.
    Evaluate {
        #[arg(long)]
        test: PathBuf,
        /// Policy files; each becomes a learned strategy.
        #[arg(long = "policy")]
        policies: Vec<PathBuf>,
        /// Strategies to run (default: neuro for given policies, bhc, fhc, es when --lambda is set).
        #[arg(long = "strategy", value_enum, value_delimiter = ',')]
        strategies: Vec<StrategyArg>,
        #[arg(long)]
        lambda: Option<usize>,
        /// Move budget; twice the instance size when absent.
        #[arg(long)]
        horizon: Option<usize>,
        /// Accept sets mixing instance sizes.
        #[arg(long)]
        allow_mixed_sizes: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export traces and the response curve of a policy.
    Analyze {
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long, default_value_t = 10)]
        trajectories: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pick the `(1,λ)-ES` λ maximizing the mean score on a training batch.
    CalibrateLambda {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        /// Comma-separated grid; divisors of n by default.
        #[arg(long, value_delimiter = ',')]
        grid: Vec<usize>,
        /// Search every λ in 1..=n.
        #[arg(long)]
        full_range: bool,
        #[arg(long, default_value_t = 10)]
        instances: usize,
        #[arg(long, default_value_t = 10)]
        restarts: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn manifest(command: &str, config_path: Option<&Path>, config: String, out: &Path, seed: u64, workers: usize) -> ExperimentManifest {
    ExperimentManifest {
        command: command.into(),
        config_path: config_path.map(Path::to_path_buf),
        config,
        out_dir: out.to_path_buf(),
        master_seed: seed,
        workers,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if cli.workers > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(cli.workers).build_global()?;
    }
    match cli.command {
        Command::Generate {
            kind,
            n,
            k,
            m_frac,
            family,
            count,
            restarts,
            role,
            seed,
            out,
        } => {
            if count == 0 {
                bail!("count must be at least 1: an empty set is not a valid instance set");
            }
            let (set, config) = match kind {
                Kind::Nk => (
                    InstanceSet::generate_nk(role, n, k, count, restarts, seed)?,
                    format!("kind=nk n={n} k={k} count={count} restarts={restarts} role={role:?}"),
                ),
                Kind::Qubo => {
                    let params = PuboiParams::from_family(n, m_frac, family);
                    (
                        InstanceSet::generate_qubo(role, &params, Some(family), count, restarts, seed)?,
                        format!(
                            "kind=qubo n={n} m_frac={m_frac} family={} count={count} restarts={restarts} role={role:?}",
                            family.short_name()
                        ),
                    )
                }
            };
            let m = manifest("generate", None, config, &out, seed, cli.workers);
            let path = set.save(&out, Some(&m.header()))?;
            println!("wrote {} instances, manifest {}", set.len(), path.display());
        }
        Command::Train { config, out, seed, obs } => {
            let text = fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let mut cfg = TrainConfig::from_toml(&text).with_context(|| format!("in {}", config.display()))?;
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            if let Some(o) = obs {
                cfg.observation = o;
            }
            cfg.validate()?;
            fs::create_dir_all(&out)?;
            let m = manifest("train", Some(&config), cfg.to_toml(), &out, cfg.master_seed, cli.workers);
            let opts = TrainOptions {
                workers: 0,
                checkpoint: Some(out.join("checkpoint.json")),
                max_generations: None,
            };
            let report = train_with(&cfg, &opts, |l| {
                eprintln!("run {} generation {}: train {:.6} valid {:.6}", l.run, l.generation, l.train, l.valid);
            })?
            .context("training stopped before completion")?;
            let header = m.header();
            report.write_csv(create(&out.join("report.csv"))?, Some(&header))?;
            report.champion_policy()?.save(&out.join("champion.json"), Some(&header))?;
            println!(
                "champion: run {} generation {} validation {:.6} (BHC+ {:.6})",
                report.champion.run, report.champion.generation, report.champion.valid, report.bhc_validation
            );
        }
        Command::Evaluate {
            test,
            policies,
            strategies,
            lambda,
            horizon,
            allow_mixed_sizes,
            out,
        } => {
            let set = InstanceSet::load(&test)?;
            if !allow_mixed_sizes && set.dimensions().len() > 1 {
                bail!("test set mixes sizes {:?}; pass --allow-mixed-sizes to accept", set.dimensions());
            }
            let mut chosen = strategies.clone();
            if chosen.is_empty() {
                if !policies.is_empty() {
                    chosen.push(StrategyArg::Neuro);
                }
                chosen.extend([StrategyArg::Bhc, StrategyArg::Fhc]);
                if lambda.is_some() {
                    chosen.push(StrategyArg::Es);
                }
            }
            let mut list = Vec::new();
            for s in &chosen {
                match s {
                    StrategyArg::Neuro => {
                        if policies.is_empty() {
                            bail!("strategy neuro needs at least one --policy file");
                        }
                        for p in &policies {
                            let policy = read_policy_file(p)?;
                            let name = format!("Neuro-LS[{}] {}", policy.kind(), p.display());
                            list.push(Strategy::learned(name, policy));
                        }
                    }
                    StrategyArg::Bhc => list.push(Strategy::baseline(BestImprovement)),
                    StrategyArg::Fhc => list.push(Strategy::baseline(FirstImprovement)),
                    StrategyArg::Es => {
                        let l = lambda.context("strategy es needs --lambda")?;
                        list.push(Strategy::baseline(OneCommaLambda::new(l)));
                    }
                }
            }
            let mut config = format!("test={} strategies=", test.display());
            for s in &list {
                config.push_str(&s.name);
                config.push(';');
            }
            config.push_str(&format!(" horizon={horizon:?}"));
            let m = manifest("evaluate", None, config, &out, set.master_seed, cli.workers);
            let header = m.header();
            let report = evaluate_testset(&list, &set, horizon)?;
            fs::create_dir_all(&out)?;
            report.write_summary_csv(create(&out.join("summary.csv"))?, Some(&header))?;
            report.write_comparisons_csv(create(&out.join("welch.csv"))?, Some(&header))?;
            report.write_scores_csv(create(&out.join("scores.csv"))?, Some(&header))?;
            let table = report.to_table();
            fs::write(out.join("table.txt"), format!("# provenance {header}\n{table}"))?;
            print!("{table}");
        }
        Command::Analyze {
            policy,
            test,
            trajectories,
            out,
        } => {
            let set = InstanceSet::load(&test)?;
            let p = read_policy_file(&policy)?;
            let config = format!("policy={} test={} trajectories={trajectories}", policy.display(), test.display());
            let m = manifest("analyze", None, config, &out, set.master_seed, cli.workers);
            let header = m.header();
            let a = analyze(&p, &set, trajectories, None)?;
            fs::create_dir_all(&out)?;
            for (t, rows) in a.traces.iter().enumerate() {
                write_trace_csv_rows(create(&out.join(format!("trace_{t:03}.csv")))?, rows, Some(&header))?;
            }
            a.response.write_csv(create(&out.join("response.csv"))?, Some(&header))?;
            println!("wrote {} traces and {} response points", a.traces.len(), a.response.len());
        }
        Command::CalibrateLambda {
            n,
            k,
            grid,
            full_range,
            instances,
            restarts,
            seed,
            out,
        } => {
            let grid = if full_range {
                (1..=n).collect()
            } else if grid.is_empty() {
                default_lambda_grid(n)
            } else {
                grid
            };
            let c = calibrate_lambda(n, k, &grid, instances, restarts, seed)?;
            for (l, s) in &c.scores {
                println!("lambda {l}: {s:.6}");
            }
            println!("best lambda {}", c.lambda);
            if let Some(out) = out {
                fs::create_dir_all(&out)?;
                let config = format!("n={n} k={k} grid={grid:?} instances={instances} restarts={restarts}");
                let m = manifest("calibrate-lambda", None, config, &out, seed, cli.workers);
                let mut text = format!("# provenance {}\nlambda,score\n", m.header());
                for (l, s) in &c.scores {
                    text.push_str(&format!("{l},{s}\n"));
                }
                fs::write(out.join("calibration.csv"), text)?;
            }
        }
    }
    Ok(())
}
