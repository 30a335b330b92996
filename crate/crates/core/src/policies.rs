//! Index policies behind a common select/update contract.
//!
//! Every policy first pulls arms `0, 1, ..., K-1` once each, then plays the
//! arm with the largest index. Indices within [`TIE_TOL`] of the maximum are
//! tied and the lowest arm wins.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exp_family::Family;
use crate::index::{invert_unchecked, upper_bound, ExplorationSchedule};
use crate::scalar::{log_plus, Real};

pub const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PolicyKind {
    #[serde(rename = "klucb++", alias = "kl-ucb++", alias = "klucbpp")]
    KlUcbPlusPlus,
    #[serde(rename = "ucb1")]
    Ucb1,
    #[serde(rename = "moss")]
    Moss,
    #[serde(rename = "klucb", alias = "kl-ucb")]
    KlUcb,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [
        PolicyKind::KlUcbPlusPlus,
        PolicyKind::Ucb1,
        PolicyKind::Moss,
        PolicyKind::KlUcb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::KlUcbPlusPlus => "klucb++",
            PolicyKind::Ucb1 => "ucb1",
            PolicyKind::Moss => "moss",
            PolicyKind::KlUcb => "klucb",
        }
    }

    /// Whether an arm's index depends only on its own (mean, pulls) pair.
    fn is_round_free(self) -> bool {
        matches!(self, PolicyKind::KlUcbPlusPlus | PolicyKind::Moss)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "klucb++" | "kl-ucb++" | "klucbpp" => Ok(PolicyKind::KlUcbPlusPlus),
            "ucb1" => Ok(PolicyKind::Ucb1),
            "moss" => Ok(PolicyKind::Moss),
            "klucb" | "kl-ucb" => Ok(PolicyKind::KlUcb),
            other => Err(Error::Config(format!("unknown policy {other:?}"))),
        }
    }
}

/// Pull counts, reward sums and round counter of one episode.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyState<F> {
    family: Family<F>,
    schedule: ExplorationSchedule,
    pull_counts: Vec<u64>,
    reward_sums: Vec<F>,
    round: u64,
}

impl<F: Real> PolicyState<F> {
    pub fn new(family: Family<F>, schedule: ExplorationSchedule) -> Self {
        let k = schedule.num_arms();
        Self {
            family,
            schedule,
            pull_counts: vec![0; k],
            reward_sums: vec![F::zero(); k],
            round: 0,
        }
    }

    pub fn family(&self) -> &Family<F> {
        &self.family
    }

    pub fn schedule(&self) -> &ExplorationSchedule {
        &self.schedule
    }

    pub fn num_arms(&self) -> usize {
        self.pull_counts.len()
    }

    pub fn pull_counts(&self) -> &[u64] {
        &self.pull_counts
    }

    pub fn reward_sums(&self) -> &[F] {
        &self.reward_sums
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    /// Empirical mean of `arm`, `None` before its first pull.
    pub fn mean(&self, arm: usize) -> Option<F> {
        match self.pull_counts[arm] {
            0 => None,
            n => Some(self.reward_sums[arm] / F::from_count(n)),
        }
    }

    pub fn update(&mut self, arm: usize, reward: F) -> Result<()> {
        let k = self.num_arms();
        if arm >= k {
            return Err(Error::ArmOutOfRange { arm, arms: k });
        }
        self.pull_counts[arm] += 1;
        self.reward_sums[arm] = self.reward_sums[arm] + reward;
        self.round += 1;
        Ok(())
    }

    /// Empirical mean, clamped into the family domain against rounding.
    fn clamped_mean(&self, arm: usize) -> F {
        let m = self.mean(arm).unwrap_or_else(F::zero);
        match self.family {
            Family::Bernoulli => m.max(F::zero()).min(F::one()),
            Family::Gaussian { .. } => m,
        }
    }
}

/// klUCB exploration rate `log t + 3 log(max(e, log t))`.
pub fn klucb_rate<F: Real>(t: u64) -> F {
    let log_t = F::from_count(t.max(1)).ln();
    log_t + F::lit(3.0) * log_t.max(F::E()).ln()
}

/// Index of `arm` under `kind`; the arm must have been pulled at least once.
pub fn arm_index<F: Real>(kind: PolicyKind, state: &PolicyState<F>, arm: usize) -> F {
    let n = state.pull_counts[arm].max(1);
    let nf = F::from_count(n);
    let mu_hat = state.clamped_mean(arm);
    let family = &state.family;
    let v = family.default_variance();
    match kind {
        PolicyKind::KlUcbPlusPlus => upper_bound(family, mu_hat, state.schedule.budget(n)),
        PolicyKind::Ucb1 => {
            let log_t = F::from_count(state.round.max(1)).ln();
            mu_hat + (F::lit(2.0) * v * log_t / nf).sqrt()
        }
        PolicyKind::Moss => {
            let s = &state.schedule;
            let ratio = F::from_count(s.horizon()) / (F::from_count(s.num_arms() as u64) * nf);
            mu_hat + (v * log_plus(ratio) / nf).sqrt()
        }
        PolicyKind::KlUcb => invert_unchecked(family, mu_hat, klucb_rate::<F>(state.round) / nf),
    }
}

/// First index attaining the maximum up to [`TIE_TOL`].
pub fn argmax_lowest<F: Real>(values: &[F]) -> usize {
    let best = values.iter().copied().fold(F::neg_infinity(), F::max);
    let floor = best - F::lit(TIE_TOL);
    values.iter().position(|&v| v >= floor).unwrap_or(0)
}

/// Stateless selection from a [`PolicyState`].
pub fn select_arm<F: Real>(kind: PolicyKind, state: &PolicyState<F>) -> usize {
    let k = state.num_arms();
    if state.round < k as u64 {
        return state.round as usize;
    }
    let indices: Vec<F> = (0..k).map(|a| arm_index(kind, state, a)).collect();
    argmax_lowest(&indices)
}

/// kl-UCB++ arm choice.
pub fn klucbpp_select<F: Real>(state: &PolicyState<F>) -> usize {
    select_arm(PolicyKind::KlUcbPlusPlus, state)
}

pub fn baseline_select<F: Real>(kind: PolicyKind, state: &PolicyState<F>) -> usize {
    select_arm(kind, state)
}

/// Sequential decision contract shared by all policies.
pub trait BanditPolicy<F: Real>: Send {
    fn name(&self) -> &str;

    /// Clears all statistics and adopts a new schedule (and arm count).
    fn reset(&mut self, schedule: ExplorationSchedule);

    fn select(&self) -> usize;

    fn update(&mut self, arm: usize, reward: F) -> Result<()>;

    fn state(&self) -> &PolicyState<F>;
}

/// Index policy with per-arm index memoization for round-free indices.
#[derive(Clone, Debug)]
pub struct IndexPolicy<F> {
    kind: PolicyKind,
    state: PolicyState<F>,
    cached: Vec<F>,
}

impl<F: Real> IndexPolicy<F> {
    pub fn new(kind: PolicyKind, family: Family<F>, schedule: ExplorationSchedule) -> Self {
        Self {
            kind,
            state: PolicyState::new(family, schedule),
            cached: vec![F::infinity(); schedule.num_arms()],
        }
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }
}

impl<F: Real> BanditPolicy<F> for IndexPolicy<F> {
    fn name(&self) -> &str {
        self.kind.name()
    }

    fn reset(&mut self, schedule: ExplorationSchedule) {
        self.state = PolicyState::new(self.state.family, schedule);
        self.cached = vec![F::infinity(); schedule.num_arms()];
    }

    fn select(&self) -> usize {
        let k = self.state.num_arms();
        if self.state.round < k as u64 {
            return self.state.round as usize;
        }
        if self.kind.is_round_free() {
            argmax_lowest(&self.cached)
        } else {
            select_arm(self.kind, &self.state)
        }
    }

    fn update(&mut self, arm: usize, reward: F) -> Result<()> {
        self.state.update(arm, reward)?;
        if self.kind.is_round_free() {
            self.cached[arm] = arm_index(self.kind, &self.state, arm);
        }
        Ok(())
    }

    fn state(&self) -> &PolicyState<F> {
        &self.state
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn bern_state(t: u64, k: usize) -> PolicyState<f64> {
        PolicyState::new(Family::Bernoulli, ExplorationSchedule::new(t, k).unwrap())
    }

    #[test]
    fn initialization_is_round_robin() {
        let mut s = bern_state(100, 3);
        for expected in 0..3 {
            assert_eq!(klucbpp_select(&s), expected);
            s.update(expected, 0.0).unwrap();
        }
        assert_eq!(s.round(), 3);
        assert_eq!(s.pull_counts(), &[1, 1, 1]);
    }

    #[test]
    fn higher_mean_wins_at_equal_pulls() {
        let mut s = bern_state(100, 2);
        s.update(0, 0.9).unwrap();
        s.update(1, 0.1).unwrap();
        assert_eq!(klucbpp_select(&s), 0);
    }

    #[test]
    fn near_ties_go_to_lowest_arm() {
        assert_eq!(argmax_lowest(&[0.5, 0.5 + 1e-13]), 0);
        assert_eq!(argmax_lowest(&[0.5, 0.5 + 1e-9]), 1);
        let mut s = bern_state(100, 2);
        s.update(0, 1.0).unwrap();
        s.update(1, 1.0).unwrap();
        assert_eq!(klucbpp_select(&s), 0);
    }

    #[test]
    fn update_examples() {
        let mut s = bern_state(100, 3);
        s.update(0, 1.0).unwrap();
        assert_eq!(s.pull_counts(), &[1, 0, 0]);
        assert_eq!(s.mean(0), Some(1.0));
        assert_eq!(s.mean(1), None);
        s.update(0, 0.0).unwrap();
        assert_eq!(s.mean(0), Some(0.5));
        assert!(matches!(s.update(3, 1.0), Err(Error::ArmOutOfRange { arm: 3, arms: 3 })));
        assert_eq!(s.round(), 2);
    }

    #[test]
    fn ucb1_prefers_better_arm() {
        let mut s = bern_state(100, 2);
        s.update(0, 1.0).unwrap();
        s.update(1, 0.0).unwrap();
        assert_eq!(baseline_select(PolicyKind::Ucb1, &s), 0);
    }

    #[test]
    fn moss_bonus_vanishes_after_t_over_k() {
        let mut s = bern_state(10, 2);
        for _ in 0..5 {
            s.update(0, 1.0).unwrap();
        }
        s.update(0, 0.0).unwrap();
        s.update(1, 0.0).unwrap();
        assert_abs_diff_eq!(arm_index(PolicyKind::Moss, &s, 0), 5.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn klucb_rate_at_three() {
        // log 3 + 3 log(max(e, log 3)) = log 3 + 3, evaluated at 40 digits
        assert_abs_diff_eq!(klucb_rate::<f64>(3), 4.098_612_288_668_109_7, epsilon = 1e-12);
        let mut s = bern_state(100, 2);
        s.update(0, 1.0).unwrap();
        s.update(1, 0.0).unwrap();
        s.update(1, 0.0).unwrap();
        let expected = invert_unchecked(&Family::Bernoulli, 1.0, 4.098_612_288_668_109_7);
        assert_eq!(arm_index(PolicyKind::KlUcb, &s, 0), expected);
    }

    #[test]
    fn dominating_arm_has_larger_index() {
        for n in [1u64, 3, 10, 50] {
            let mut s = bern_state(1000, 2);
            for i in 0..n {
                s.update(0, if i % 10 < 7 { 1.0 } else { 0.0 }).unwrap();
                s.update(1, if i % 10 < 4 { 1.0 } else { 0.0 }).unwrap();
            }
            for kind in PolicyKind::ALL {
                assert!(arm_index(kind, &s, 0) >= arm_index(kind, &s, 1), "{kind} n={n}");
            }
        }
    }

    #[test]
    fn reset_clears_statistics() {
        let sched = ExplorationSchedule::new(50, 2).unwrap();
        let mut p = IndexPolicy::new(PolicyKind::KlUcbPlusPlus, Family::<f64>::Bernoulli, sched);
        p.update(0, 1.0).unwrap();
        p.reset(ExplorationSchedule::new(60, 3).unwrap());
        assert_eq!(p.state().pull_counts(), &[0, 0, 0]);
        assert_eq!(p.select(), 0);
    }

    proptest! {
        #[test]
        fn cached_policy_matches_stateless_selection(
            rewards in proptest::collection::vec(0.0f64..=1.0, 40..200),
            kind_ix in 0usize..4,
            k in 2usize..5,
        ) {
            let kind = PolicyKind::ALL[kind_ix];
            let sched = ExplorationSchedule::new(rewards.len() as u64, k).unwrap();
            let mut p = IndexPolicy::new(kind, Family::Bernoulli, sched);
            for &r in &rewards {
                let a = p.select();
                prop_assert_eq!(a, select_arm(kind, p.state()));
                p.update(a, (r * 4.0).round() / 4.0).unwrap();
            }
            prop_assert_eq!(p.state().pull_counts().iter().sum::<u64>(), rewards.len() as u64);
        }

        #[test]
        fn permuting_arms_permutes_choice(
            means in proptest::collection::vec(0.05f64..0.95, 3),
            pulls in proptest::collection::vec(1u64..40, 3),
            shift in 1usize..3,
        ) {
            let k = means.len();
            let total: u64 = pulls.iter().sum();
            let sched = ExplorationSchedule::new(10 * total, k).unwrap();
            let build = |perm: &dyn Fn(usize) -> usize| {
                let mut s = PolicyState::new(Family::Bernoulli, sched);
                for a in 0..k {
                    let src = perm(a);
                    for _ in 0..pulls[src] {
                        s.update(a, means[src]).unwrap();
                    }
                }
                s
            };
            let base = build(&|a| a);
            let idx: Vec<f64> = (0..k).map(|a| arm_index(PolicyKind::KlUcbPlusPlus, &base, a)).collect();
            let mut sorted = idx.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            prop_assume!(sorted.windows(2).all(|w| w[1] - w[0] > 1e-9));
            let permuted = build(&|a| (a + shift) % k);
            let chosen = klucbpp_select(&permuted);
            prop_assert_eq!((chosen + shift) % k, klucbpp_select(&base));
        }
    }
}
