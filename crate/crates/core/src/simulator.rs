//! Seeded episodes and Monte Carlo aggregation of pseudo-regret.
//!
//! Pseudo-regret after `t` rounds is `sum_a gap(a) * N_a(t)`. Each replication
//! owns a ChaCha8 generator seeded by [`replication_seed`], so results do not
//! depend on execution order or thread count. Aggregates are merged from exact
//! integer moments of the pull counts, which makes the merge commutative and
//! associative bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exp_family::BanditModel;
use crate::index::ExplorationSchedule;
use crate::policies::{BanditPolicy, IndexPolicy, PolicyKind};
use crate::scalar::Real;

/// Horizons above this keep no action log unless asked to.
pub const ACTION_LOG_AUTO_LIMIT: u64 = 10_000;
const CHECKPOINT_STEPS: u32 = 20;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ActionLog {
    #[default]
    Auto,
    Always,
    Never,
}

impl ActionLog {
    pub fn enabled(self, horizon: u64) -> bool {
        match self {
            ActionLog::Auto => horizon <= ACTION_LOG_AUTO_LIMIT,
            ActionLog::Always => true,
            ActionLog::Never => false,
        }
    }
}

/// Rounds `ceil(T^(k/20))` for `k = 1..=20`, deduplicated, always ending at `T`.
pub fn checkpoint_rounds(horizon: u64) -> Vec<u64> {
    let t = horizon as f64;
    let mut rounds: Vec<u64> = (1..CHECKPOINT_STEPS)
        .map(|k| (t.powf(k as f64 / CHECKPOINT_STEPS as f64).ceil() as u64).clamp(1, horizon))
        .collect();
    rounds.push(horizon);
    rounds.dedup();
    rounds
}

/// splitmix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replication `rep` in cell `cell`:
/// `splitmix64(splitmix64(splitmix64(master) ^ cell) ^ rep)`.
pub fn replication_seed(master: u64, cell: u64, rep: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ cell) ^ rep)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Checkpoint<F> {
    pub round: u64,
    pub regret: F,
}

/// Record of one episode.
#[derive(Clone, Debug, PartialEq)]
pub struct RunTrace<F> {
    pub policy: String,
    pub model_id: String,
    pub horizon: u64,
    pub seed: u64,
    pub final_pull_counts: Vec<u64>,
    pub checkpoints: Vec<Checkpoint<F>>,
    pub actions: Option<Vec<u32>>,
}

impl<F: Real> RunTrace<F> {
    pub fn final_regret(&self) -> F {
        self.checkpoints.last().map_or_else(F::zero, |c| c.regret)
    }
}

fn gap_weighted<F: Real>(gaps: &[F], counts: &[u64]) -> F {
    gaps.iter()
        .zip(counts)
        .fold(F::zero(), |acc, (&g, &n)| acc + g * F::from_count(n))
}

/// Runs `policy` for `horizon` rounds on `model`, starting from a reset.
pub fn run_episode_with<F: Real, P: BanditPolicy<F> + ?Sized>(
    policy: &mut P,
    model: &BanditModel<F>,
    model_id: &str,
    horizon: u64,
    seed: u64,
    action_log: ActionLog,
) -> Result<RunTrace<F>> {
    let schedule = ExplorationSchedule::new(horizon, model.num_arms())?;
    policy.reset(schedule);
    let gaps = model.gaps();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let marks = checkpoint_rounds(horizon);
    let mut next_mark = marks.iter().copied().peekable();
    let mut checkpoints = Vec::with_capacity(marks.len());
    let mut actions = action_log
        .enabled(horizon)
        .then(|| Vec::with_capacity(horizon as usize));

    for t in 1..=horizon {
        let arm = policy.select();
        let reward = model.arm(arm).sample(&mut rng);
        policy.update(arm, reward)?;
        if let Some(log) = actions.as_mut() {
            log.push(arm as u32);
        }
        if next_mark.peek() == Some(&t) {
            next_mark.next();
            checkpoints.push(Checkpoint {
                round: t,
                regret: gap_weighted(&gaps, policy.state().pull_counts()),
            });
        }
    }

    Ok(RunTrace {
        policy: policy.name().to_string(),
        model_id: model_id.to_string(),
        horizon,
        seed,
        final_pull_counts: policy.state().pull_counts().to_vec(),
        checkpoints,
        actions,
    })
}

/// One seeded episode of a built-in policy.
pub fn run_episode<F: Real>(
    policy: PolicyKind,
    model: &BanditModel<F>,
    model_id: &str,
    horizon: u64,
    seed: u64,
    action_log: ActionLog,
) -> Result<RunTrace<F>> {
    if horizon < model.num_arms() as u64 {
        return Err(Error::HorizonTooShort {
            horizon,
            arms: model.num_arms(),
        });
    }
    let schedule = ExplorationSchedule::new(horizon, model.num_arms())?;
    let mut p = IndexPolicy::new(policy, model.family(), schedule);
    run_episode_with(&mut p, model, model_id, horizon, seed, action_log)
}

/// Integer sums of pull counts and of their pairwise products.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PullMoments {
    count: u64,
    sums: Vec<u128>,
    cross: Vec<u128>,
}

impl PullMoments {
    pub fn new(num_arms: usize) -> Self {
        Self {
            count: 0,
            sums: vec![0; num_arms],
            cross: vec![0; num_arms * num_arms],
        }
    }

    pub fn from_counts(counts: &[u64]) -> Self {
        let mut m = Self::new(counts.len());
        m.push(counts);
        m
    }

    pub fn push(&mut self, counts: &[u64]) {
        let k = self.sums.len();
        assert_eq!(counts.len(), k, "arm count mismatch");
        self.count += 1;
        for (a, &na) in counts.iter().enumerate() {
            self.sums[a] += na as u128;
            for (b, &nb) in counts.iter().enumerate() {
                self.cross[a * k + b] += na as u128 * nb as u128;
            }
        }
    }

    pub fn merge(mut self, other: &PullMoments) -> Self {
        assert_eq!(self.sums.len(), other.sums.len(), "arm count mismatch");
        self.count += other.count;
        self.sums.iter_mut().zip(&other.sums).for_each(|(s, o)| *s += o);
        self.cross.iter_mut().zip(&other.cross).for_each(|(s, o)| *s += o);
        self
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean_pulls<F: Real>(&self) -> Vec<F> {
        let r = F::from_count(self.count.max(1));
        self.sums.iter().map(|&s| F::lit(s as f64) / r).collect()
    }

    /// Sample variance of `sum_a gap(a) N_a` across replications.
    pub fn regret_variance<F: Real>(&self, gaps: &[F]) -> F {
        let r = self.count as i128;
        if r < 2 {
            return F::zero();
        }
        let k = self.sums.len();
        let denom = F::lit((r * (r - 1)) as f64);
        let mut var = F::zero();
        for a in 0..k {
            for b in 0..k {
                // R * S_ab - S_a * S_b is exact in i128
                let num = r * self.cross[a * k + b] as i128 - self.sums[a] as i128 * self.sums[b] as i128;
                var = var + gaps[a] * gaps[b] * F::lit(num as f64);
            }
        }
        (var / denom).max(F::zero())
    }
}

/// Per-cell summary over replications.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateStats<F> {
    pub policy: String,
    pub model_id: String,
    pub num_arms: usize,
    pub horizon: u64,
    pub replications: u64,
    pub mean_regret: F,
    pub stderr_regret: F,
    pub mean_pulls: Vec<F>,
}

impl<F: Real> AggregateStats<F> {
    pub fn from_moments(
        policy: &str,
        model_id: &str,
        horizon: u64,
        gaps: &[F],
        moments: &PullMoments,
    ) -> Self {
        let mean_pulls = moments.mean_pulls::<F>();
        let mean_regret = gap_weighted_mean(gaps, &mean_pulls);
        let r = F::from_count(moments.count().max(1));
        let stderr_regret = (moments.regret_variance(gaps) / r).sqrt();
        Self {
            policy: policy.to_string(),
            model_id: model_id.to_string(),
            num_arms: gaps.len(),
            horizon,
            replications: moments.count(),
            mean_regret,
            stderr_regret,
            mean_pulls,
        }
    }

    pub fn from_traces(gaps: &[F], traces: &[RunTrace<F>]) -> Option<Self> {
        let first = traces.first()?;
        let moments = traces
            .iter()
            .fold(PullMoments::new(gaps.len()), |mut m, t| {
                m.push(&t.final_pull_counts);
                m
            });
        Some(Self::from_moments(&first.policy, &first.model_id, first.horizon, gaps, &moments))
    }
}

fn gap_weighted_mean<F: Real>(gaps: &[F], mean_pulls: &[F]) -> F {
    gaps.iter()
        .zip(mean_pulls)
        .fold(F::zero(), |acc, (&g, &n)| acc + g * n)
}

#[derive(Clone, Debug)]
pub struct NamedModel<F> {
    pub id: String,
    pub model: BanditModel<F>,
}

/// In-memory description of a sweep.
#[derive(Clone, Debug)]
pub struct ExperimentPlan<F> {
    pub models: Vec<NamedModel<F>>,
    pub policies: Vec<PolicyKind>,
    pub horizons: Vec<u64>,
    pub replications: u64,
    pub master_seed: u64,
    pub action_log: ActionLog,
    /// Keep every [`RunTrace`] in the outcome; off for large sweeps.
    pub keep_traces: bool,
}

/// Position of a cell in the sweep; cells enumerate models, then policies,
/// then horizons.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cell {
    pub index: usize,
    pub model: usize,
    pub policy: PolicyKind,
    pub horizon: u64,
}

impl<F: Real> ExperimentPlan<F> {
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for (m, _) in self.models.iter().enumerate() {
            for &policy in &self.policies {
                for &horizon in &self.horizons {
                    cells.push(Cell {
                        index: cells.len(),
                        model: m,
                        policy,
                        horizon,
                    });
                }
            }
        }
        cells
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if self.models.is_empty() || self.policies.is_empty() || self.horizons.is_empty() {
            return Err(Error::Config("models, policies and horizons must be non-empty".into()));
        }
        let max_k = self.models.iter().map(|m| m.model.num_arms()).max().unwrap_or(0);
        if let Some(&t) = self.horizons.iter().find(|&&t| t < max_k as u64) {
            return Err(Error::HorizonTooShort { horizon: t, arms: max_k });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Serial,
    /// Worker count; `None` uses `BANDITKIT_THREADS` or the rayon default.
    Parallel(Option<usize>),
}

/// Worker cap from `BANDITKIT_THREADS`, if set to a positive integer.
pub fn env_threads() -> Option<usize> {
    std::env::var("BANDITKIT_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

#[derive(Clone, Debug)]
pub struct CellOutcome<F> {
    pub cell: Cell,
    pub stats: AggregateStats<F>,
    pub traces: Vec<RunTrace<F>>,
}

/// Runs `count` independent jobs, in index order or on a worker pool.
/// Results are always returned in index order.
pub fn run_indexed<T, G>(count: u64, execution: Execution, job: G) -> Result<Vec<T>>
where
    T: Send,
    G: Fn(u64) -> Result<T> + Sync + Send,
{
    match execution {
        Execution::Serial => (0..count).map(job).collect(),
        Execution::Parallel(threads) => {
            let threads = threads.or_else(env_threads).unwrap_or(0);
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            pool.install(|| (0..count).into_par_iter().map(&job).collect())
        }
    }
}

pub fn run_cell<F: Real>(
    plan: &ExperimentPlan<F>,
    cell: Cell,
    execution: Execution,
) -> Result<CellOutcome<F>> {
    let named = &plan.models[cell.model];
    let gaps = named.model.gaps();
    let traces = run_indexed(plan.replications, execution, |rep| {
        let seed = replication_seed(plan.master_seed, cell.index as u64, rep);
        run_episode(cell.policy, &named.model, &named.id, cell.horizon, seed, plan.action_log)
    })?;
    let moments = traces.iter().fold(PullMoments::new(gaps.len()), |mut m, t| {
        m.push(&t.final_pull_counts);
        m
    });
    let stats = AggregateStats::from_moments(cell.policy.name(), &named.id, cell.horizon, &gaps, &moments);
    Ok(CellOutcome {
        cell,
        stats,
        traces: if plan.keep_traces { traces } else { Vec::new() },
    })
}

/// Runs every cell of `plan`.
pub fn run_experiment<F: Real>(
    plan: &ExperimentPlan<F>,
    execution: Execution,
) -> Result<Vec<CellOutcome<F>>> {
    plan.validate()?;
    plan.cells()
        .into_iter()
        .map(|cell| run_cell(plan, cell, execution))
        .collect()
}
