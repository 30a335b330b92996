//! Exploration budget and upper confidence index of kl-UCB++.
//!
//! The index of an arm with empirical mean `mu_hat` after `n` pulls is the
//! largest mean `mu` with `kl(mu_hat, mu) <= g(n) / n`, where
//!
//! ```text
//! g(n) = log+( T/(K n) * (log+^2(T/(K n)) + 1) ),   log+(x) = max(log x, 0)
//! ```
//!
//! `g` vanishes once `n >= T/K`, at which point the index is the empirical mean.

use crate::error::{Error, Result};
use crate::exp_family::Family;
use crate::scalar::{log_plus, Real};

/// Absolute tolerance on the mean for [`invert_kl_upper`].
pub const BISECTION_TOL: f64 = 1e-10;
pub const BISECTION_MAX_ITER: usize = 100;
/// Top of the Bernoulli search bracket.
pub const BERNOULLI_BRACKET_TOP: f64 = 1.0 - 1e-15;

/// Horizon and arm count used by the exploration function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ExplorationSchedule {
    horizon: u64,
    num_arms: usize,
}

impl ExplorationSchedule {
    pub fn new(horizon: u64, num_arms: usize) -> Result<Self> {
        if num_arms < 2 {
            return Err(Error::InvalidModel(format!(
                "at least two arms are required, got {num_arms}"
            )));
        }
        if horizon < num_arms as u64 {
            return Err(Error::HorizonTooShort {
                horizon,
                arms: num_arms,
            });
        }
        Ok(Self { horizon, num_arms })
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn num_arms(&self) -> usize {
        self.num_arms
    }

    /// The exploration function `g(n)`; `n = 0` is treated as `n = 1`.
    pub fn g<F: Real>(&self, n: u64) -> F {
        let n = n.max(1);
        let kn = self.num_arms as u64 as u128 * n as u128;
        // integer test keeps the log+ kink exact: T/(Kn) <= 1 gives g = 0
        if kn >= self.horizon as u128 {
            return F::zero();
        }
        let ratio = F::from_count(self.horizon) / (F::from_count(self.num_arms as u64) * F::from_count(n));
        let l = log_plus(ratio);
        // log(x (1 + l^2)) with x > 1 split as l + log1p(l^2)
        l + (l * l).ln_1p()
    }

    /// Divergence budget `g(n) / n` of an arm pulled `n` times.
    pub fn budget<F: Real>(&self, n: u64) -> F {
        self.g::<F>(n) / F::from_count(n.max(1))
    }
}

/// `sup { mu >= mu_hat : kl(mu_hat, mu) <= threshold }` by bisection.
///
/// The map `mu -> kl(mu_hat, mu)` is increasing on `[mu_hat, sup)`. The search
/// stops once the bracket is narrower than [`BISECTION_TOL`] or after
/// [`BISECTION_MAX_ITER`] halvings and returns the feasible end. Bernoulli
/// searches `[mu_hat, 1 - 1e-15]`; a feasible bracket top is returned as is,
/// and `mu_hat = 1` returns 1. Gaussian brackets by doubling before bisecting.
pub fn invert_kl_upper<F: Real>(family: &Family<F>, mu_hat: F, threshold: F) -> Result<F> {
    if !threshold.is_finite() || threshold < F::zero() {
        return Err(Error::InvalidThreshold(threshold.as_f64()));
    }
    family.check_empirical_mean(mu_hat)?;
    Ok(invert_unchecked(family, mu_hat, threshold))
}

pub(crate) fn invert_unchecked<F: Real>(family: &Family<F>, mu_hat: F, threshold: F) -> F {
    if threshold == F::zero() {
        return mu_hat;
    }
    match family {
        Family::Bernoulli => {
            if mu_hat >= F::one() {
                return F::one();
            }
            let top = F::lit(BERNOULLI_BRACKET_TOP).max(mu_hat);
            if family.kl_unchecked(mu_hat, top) <= threshold {
                return top;
            }
            bisect(family, mu_hat, mu_hat, top, threshold)
        }
        Family::Gaussian { sigma2 } => {
            let mut step = sigma2.sqrt();
            let mut hi = mu_hat + step;
            while family.kl_unchecked(mu_hat, hi) <= threshold {
                step = step + step;
                hi = mu_hat + step;
            }
            bisect(family, mu_hat, mu_hat, hi, threshold)
        }
    }
}

fn bisect<F: Real>(family: &Family<F>, mu_hat: F, mut lo: F, mut hi: F, threshold: F) -> F {
    let tol = F::lit(BISECTION_TOL);
    let half = F::lit(0.5);
    for _ in 0..BISECTION_MAX_ITER {
        if hi - lo <= tol {
            break;
        }
        let mid = lo + (hi - lo) * half;
        if mid <= lo || mid >= hi {
            break;
        }
        if family.kl_unchecked(mu_hat, mid) <= threshold {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Upper confidence index of an arm with empirical mean `mu_hat` after `n`
/// pulls. Gaussian arms use the closed form `mu_hat + sqrt(2 sigma2 g(n)/n)`.
pub fn ucb_index<F: Real>(
    family: &Family<F>,
    mu_hat: F,
    n: u64,
    schedule: &ExplorationSchedule,
) -> Result<F> {
    if n == 0 {
        return Err(Error::Inadmissible {
            name: "n",
            value: 0.0,
            lo: 1.0,
            hi: f64::INFINITY,
        });
    }
    family.check_empirical_mean(mu_hat)?;
    Ok(upper_bound(family, mu_hat, schedule.budget(n)))
}

/// Index for a given divergence budget, closed form where one exists.
#[inline]
pub(crate) fn upper_bound<F: Real>(family: &Family<F>, mu_hat: F, budget: F) -> F {
    if budget == F::zero() {
        return mu_hat;
    }
    match *family {
        Family::Gaussian { sigma2 } => mu_hat + (F::lit(2.0) * sigma2 * budget).sqrt(),
        Family::Bernoulli => invert_unchecked(family, mu_hat, budget),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn sched(t: u64, k: usize) -> ExplorationSchedule {
        ExplorationSchedule::new(t, k).unwrap()
    }

    #[test]
    fn g_examples() {
        assert_eq!(sched(1000, 10).g::<f64>(100), 0.0);
        assert_eq!(sched(7, 7).g::<f64>(1), 0.0);
        // log(100 (log^2 100 + 1)) at 40 digits
        assert_abs_diff_eq!(sched(1000, 10).g::<f64>(1), 7.705_604_418_285_01, epsilon = 1e-5);
        assert!((sched(1000, 10).g::<f32>(1) - 7.705_604).abs() < 1e-4);
    }

    #[test]
    fn g_vanishes_past_t_over_k_and_is_monotone() {
        for &(t, k) in &[(1000u64, 10usize), (1000, 3), (100_000, 2), (17, 5), (10, 10)] {
            let s = sched(t, k);
            let upto = (2 * t / k as u64).max(2);
            let vals: Vec<f64> = (1..=upto).map(|n| s.g(n)).collect();
            assert!(vals.iter().all(|&v| v >= 0.0));
            assert!(vals.windows(2).all(|w| w[1] <= w[0]));
            for n in 1..=upto {
                if n * k as u64 >= t {
                    assert_eq!(vals[n as usize - 1], 0.0, "t={t} k={k} n={n}");
                }
            }
        }
    }

    #[test]
    fn schedule_validation() {
        assert!(ExplorationSchedule::new(5, 1).is_err());
        assert!(matches!(
            ExplorationSchedule::new(3, 4),
            Err(Error::HorizonTooShort { .. })
        ));
    }

    #[test]
    fn ucb_index_examples() {
        let s = sched(1000, 10);
        assert_eq!(ucb_index(&Family::Bernoulli, 0.5_f64, 100, &s).unwrap(), 0.5);
        let g = Family::gaussian(1.0_f64).unwrap();
        assert_abs_diff_eq!(upper_bound(&g, 0.0, 2.0), 2.0, epsilon = 1e-15);
        // kl(0, mu) = -log(1 - mu) = 1  =>  mu = 1 - 1/e
        let u = invert_kl_upper(&Family::Bernoulli, 0.0_f64, 1.0).unwrap();
        assert_abs_diff_eq!(u, 0.632_120_558_828_557_7, epsilon = 1e-8);
        assert!(ucb_index(&Family::Bernoulli, 1.5_f64, 1, &s).is_err());
        assert!(ucb_index(&Family::Bernoulli, 0.5_f64, 0, &s).is_err());
    }

    #[test]
    fn invert_examples() {
        let b = Family::<f64>::Bernoulli;
        assert_eq!(invert_kl_upper(&b, 0.37, 0.0).unwrap(), 0.37);
        let g = Family::gaussian(2.5_f64).unwrap();
        let got = invert_kl_upper(&g, -0.3, 0.07).unwrap();
        assert_abs_diff_eq!(got, -0.3 + (2.0 * 2.5 * 0.07_f64).sqrt(), epsilon = 1e-10);
        // largest mu with kl(0.3, mu) <= 0.05, root-polished at 40 digits
        assert_abs_diff_eq!(invert_kl_upper(&b, 0.3, 0.05).unwrap(), 0.454_596_833_835_863_4, epsilon = 2e-6);
        assert_eq!(invert_kl_upper(&b, 1.0, 0.5).unwrap(), 1.0);
        assert!(invert_kl_upper(&b, 0.3, f64::INFINITY).is_err());
        assert!(invert_kl_upper(&b, 0.3, -1.0).is_err());
    }

    #[test]
    fn huge_budget_returns_bracket_top() {
        let b = Family::<f64>::Bernoulli;
        let got = invert_kl_upper(&b, 0.5, 1e6).unwrap();
        assert_eq!(got, BERNOULLI_BRACKET_TOP);
    }

    proptest! {
        #[test]
        fn index_is_feasible_and_tight(mu_hat in 0.0f64..=1.0, n in 1u64..2000) {
            let s = sched(10_000, 3);
            let b = Family::Bernoulli;
            let budget: f64 = s.budget(n);
            let u = ucb_index(&b, mu_hat, n, &s).unwrap();
            prop_assert!(u >= mu_hat);
            prop_assert!(b.kl(mu_hat, u).unwrap() <= budget + 1e-9);
            if u + 1e-6 < BERNOULLI_BRACKET_TOP && budget > 0.0 {
                prop_assert!(b.kl(mu_hat, u + 1e-6).unwrap() > budget);
            }
        }

        #[test]
        fn index_decreases_with_pulls(mu_hat in 0.0f64..=1.0, n in 1u64..5000) {
            let s = sched(10_000, 2);
            let b = Family::Bernoulli;
            let a = ucb_index(&b, mu_hat, n, &s).unwrap();
            let c = ucb_index(&b, mu_hat, n + 1, &s).unwrap();
            prop_assert!(c <= a + 1e-10);
        }

        #[test]
        fn gaussian_bisection_matches_closed_form(
            mu_hat in -50.0f64..50.0,
            threshold in 0.0f64..20.0,
            sigma2 in 0.01f64..10.0,
        ) {
            let g = Family::gaussian(sigma2).unwrap();
            let bisected = invert_kl_upper(&g, mu_hat, threshold).unwrap();
            let closed = upper_bound(&g, mu_hat, threshold);
            prop_assert!((bisected - closed).abs() <= 1e-10);
        }
    }
}
