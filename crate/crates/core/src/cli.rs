//! Command-line front end: `simulate`, `verify`, `minimax-sweep`.
//!
//! Exit codes: 0 success, 1 validation or I/O error, 2 a check failed.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::{ExperimentConfig, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::exp_family::BanditModel;
use crate::policies::PolicyKind;
use crate::report::{checks_csv, ensure_dir, fmt_f64, write_experiment, write_file};
use crate::simulator::{run_experiment, ActionLog, Execution, ExperimentPlan, NamedModel};
use crate::verification::{self, theorem1_bound, Check};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "banditkit", version, about = "kl-UCB++ bandit simulations and checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every cell of a JSON experiment config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        replications: Option<u64>,
        /// Force single-threaded execution.
        #[arg(long)]
        serial: bool,
    },
    /// Run a verification suite.
    Verify {
        suite: Suite,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Replace the variance bound used by the Pinsker suite.
        #[arg(long)]
        variance: Option<f64>,
    },
    /// kl-UCB++ regret on the hard instances against the minimax bound.
    MinimaxSweep {
        #[arg(long, value_delimiter = ',', required = true)]
        horizons: Vec<u64>,
        #[arg(long, value_delimiter = ',', required = true)]
        arms: Vec<usize>,
        #[arg(long)]
        replications: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Pinsker,
    Lemmas,
    Deviation,
    Bounds,
    All,
}

impl Suite {
    fn name(self) -> &'static str {
        match self {
            Suite::Pinsker => "pinsker",
            Suite::Lemmas => "lemmas",
            Suite::Deviation => "deviation",
            Suite::Bounds => "bounds",
            Suite::All => "all",
        }
    }
}

pub struct SimulateOverrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub replications: Option<u64>,
    pub serial: bool,
}

/// Loads the config, applies overrides, runs and writes outputs.
pub fn simulate(config: &Path, overrides: &SimulateOverrides) -> Result<Vec<PathBuf>> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(seed) = overrides.seed {
        cfg.master_seed = seed;
    }
    if let Some(r) = overrides.replications {
        cfg.replications = r;
    }
    if let Some(out) = &overrides.out {
        cfg.output_dir = out.clone();
    }
    let plan = cfg.plan()?;
    let execution = if overrides.serial {
        Execution::Serial
    } else {
        cfg.execution()
    };
    let outcomes = run_experiment(&plan, execution)?;
    write_experiment(&cfg.output_dir, &outcomes)
}

pub fn verify(suite: Suite, trials: u64, seed: u64, variance: Option<f64>) -> Result<Vec<Check>> {
    let exec = Execution::Parallel(None);
    Ok(match suite {
        Suite::Pinsker => verification::pinsker_suite(variance)?,
        Suite::Lemmas => verification::lemmas_suite(),
        Suite::Deviation => verification::deviation_suite(trials, seed, exec)?,
        Suite::Bounds => verification::bounds_suite()?,
        Suite::All => {
            let mut all = verification::pinsker_suite(variance)?;
            all.extend(verification::lemmas_suite());
            all.extend(verification::deviation_suite(trials, seed, exec)?);
            all.extend(verification::bounds_suite()?);
            all
        }
    })
}

pub fn format_checks(checks: &[Check]) -> String {
    let mut out = String::new();
    for c in checks {
        out.push_str(&format!(
            "[{}] {}: {} observed={} limit={}{}\n",
            if c.passed { "PASS" } else { "FAIL" },
            c.suite,
            c.name,
            fmt_f64(c.observed),
            fmt_f64(c.limit),
            if c.detail.is_empty() {
                String::new()
            } else {
                format!(" ({})", c.detail)
            }
        ));
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    out.push_str(&format!("{} checks, {} failed\n", checks.len(), failed));
    out
}

/// Hard instance: `K - 1` arms at `0.5 - sqrt(K/T)` followed by one arm at 0.5.
pub fn minimax_instance(horizon: u64, num_arms: usize) -> Result<BanditModel<f64>> {
    let gap = (num_arms as f64 / horizon as f64).sqrt();
    if !(gap < 0.5) {
        return Err(Error::Config(format!(
            "T={horizon}, K={num_arms}: gap sqrt(K/T) = {gap} leaves the Bernoulli range"
        )));
    }
    let mut means = vec![0.5 - gap; num_arms.saturating_sub(1)];
    means.push(0.5);
    BanditModel::bernoulli(&means)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub horizon: u64,
    pub num_arms: usize,
    pub gap: f64,
    pub replications: u64,
    pub mean_regret: f64,
    pub stderr_regret: f64,
    pub bound: f64,
}

pub fn minimax_sweep(
    horizons: &[u64],
    arms: &[usize],
    replications: u64,
    seed: u64,
    execution: Execution,
) -> Result<Vec<SweepRow>> {
    if horizons.is_empty() || arms.is_empty() {
        return Err(Error::Config("horizons and arms must be non-empty".into()));
    }
    let mut rows = Vec::new();
    for &k in arms {
        for &t in horizons {
            let model = minimax_instance(t, k)?;
            let bounds = *model.bounds();
            let plan = ExperimentPlan {
                models: vec![NamedModel {
                    id: format!("minimax_T{t}_K{k}"),
                    model,
                }],
                policies: vec![PolicyKind::KlUcbPlusPlus],
                horizons: vec![t],
                replications,
                master_seed: seed,
                action_log: ActionLog::Never,
                keep_traces: false,
            };
            let stats = run_experiment(&plan, execution)?.remove(0).stats;
            rows.push(SweepRow {
                horizon: t,
                num_arms: k,
                gap: (k as f64 / t as f64).sqrt(),
                replications,
                mean_regret: stats.mean_regret,
                stderr_regret: stats.stderr_regret,
                bound: theorem1_bound(t, k, bounds.variance, bounds.mu_minus, bounds.mu_plus),
            });
        }
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "schema_version,T,K,gap,replications,mean_regret,stderr_regret,theorem1_bound,regret_over_bound\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{SCHEMA_VERSION},{},{},{},{},{},{},{},{}\n",
            r.horizon,
            r.num_arms,
            fmt_f64(r.gap),
            r.replications,
            fmt_f64(r.mean_regret),
            fmt_f64(r.stderr_regret),
            fmt_f64(r.bound),
            fmt_f64(r.mean_regret / r.bound)
        ));
    }
    out
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Simulate {
            config,
            seed,
            out,
            replications,
            serial,
        } => {
            let written = simulate(
                &config,
                &SimulateOverrides {
                    seed,
                    out,
                    replications,
                    serial,
                },
            )?;
            println!("wrote {} files, aggregate at {}", written.len(), written[0].display());
            Ok(EXIT_OK)
        }
        Command::Verify {
            suite,
            trials,
            out,
            seed,
            variance,
        } => {
            let checks = verify(suite, trials, seed, variance)?;
            print!("{}", format_checks(&checks));
            if let Some(dir) = out {
                ensure_dir(&dir)?;
                write_file(&dir.join(format!("verify_{}.csv", suite.name())), &checks_csv(&checks))?;
            }
            Ok(if checks.iter().all(|c| c.passed) {
                EXIT_OK
            } else {
                EXIT_CHECK_FAILED
            })
        }
        Command::MinimaxSweep {
            horizons,
            arms,
            replications,
            out,
            seed,
        } => {
            let rows = minimax_sweep(&horizons, &arms, replications, seed, Execution::Parallel(None))?;
            ensure_dir(&out)?;
            let csv = sweep_csv(&rows);
            write_file(&out.join("minimax.csv"), &csv)?;
            print!("{csv}");
            Ok(if rows.iter().all(|r| r.mean_regret <= r.bound) {
                EXIT_OK
            } else {
                EXIT_CHECK_FAILED
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flags() {
        let cli = Cli::try_parse_from(["banditkit", "minimax-sweep", "--horizons", "1000,10000", "--arms", "2", "--replications", "5", "--out", "o"]).unwrap();
        match cli.command {
            Command::MinimaxSweep { horizons, arms, .. } => {
                assert_eq!(horizons, vec![1000, 10000]);
                assert_eq!(arms, vec![2]);
            }
            _ => panic!("wrong subcommand"),
        }
        assert!(Cli::try_parse_from(["banditkit", "verify", "nope"]).is_err());
        let cli = Cli::try_parse_from(["banditkit", "verify", "pinsker", "--variance", "0.1"]).unwrap();
        assert!(matches!(cli.command, Command::Verify { suite: Suite::Pinsker, variance: Some(v), .. } if v == 0.1));
    }

    #[test]
    fn hard_instance_layout() {
        let m = minimax_instance(10_000, 10).unwrap();
        let means = m.means();
        assert_eq!(means.len(), 10);
        assert_eq!(means[9], 0.5);
        assert_eq!(means[0], 0.5 - 0.001_f64.sqrt());
        assert_eq!(m.best_arm(), 9);
        assert!(minimax_instance(8, 2).is_err());
    }

    #[test]
    fn wrong_variance_fails_pinsker() {
        assert!(verify(Suite::Pinsker, 0, 0, None).unwrap().iter().all(|c| c.passed));
        assert!(verify(Suite::Pinsker, 0, 0, Some(0.1)).unwrap().iter().any(|c| !c.passed));
    }
}
