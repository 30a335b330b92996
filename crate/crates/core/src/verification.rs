//! Computable regret bounds, proof constants, and numerical checks of the
//! supporting inequalities.
//!
//! Grid checks are deterministic. Monte Carlo checks count how often a
//! deviation event occurs over independent reward streams and compare the
//! frequency against its exponential bound plus three binomial standard
//! errors.

use std::f64::consts::E;

use crate::error::{Error, Result};
use crate::exp_family::{ArmDistribution, BanditModel, Family};
use crate::scalar::Real;
use crate::simulator::{replication_seed, run_indexed, Execution};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Binomial standard errors allowed above a Monte Carlo bound.
pub const MC_SLACK_SIGMAS: f64 = 3.0;
/// Minimum number of streams for a maximal-inequality estimate.
pub const MIN_TRIALS: u64 = 10_000;
pub const PINSKER_TOL: f64 = 1e-12;
pub const GRID_POINTS: usize = 200;
pub const LEMMA_BETA_POINTS: usize = 10_000;
/// Relative tolerance on the endpoints of the admissible `delta` window.
pub const WINDOW_RTOL: f64 = 1e-12;

/// Minimax bound `76 sqrt(V K T) + (mu_plus - mu_minus) K`.
pub fn theorem1_bound<F: Real>(horizon: u64, num_arms: usize, variance: F, mu_minus: F, mu_plus: F) -> F {
    let k = F::from_count(num_arms as u64);
    let t = F::from_count(horizon);
    F::lit(76.0) * (variance * k * t).sqrt() + (mu_plus - mu_minus) * k
}

/// Exact constant in front of `sqrt(V K T)` before rounding up to 76.
pub fn theorem1_constant() -> f64 {
    let s22 = 22f64.sqrt();
    let c = 1.0 - 1.0 / 2f64.sqrt();
    2.0 * s22
        + 16.0 * E * E / s22 * (E * 11f64.sqrt()).ln()
        + 2.0 / s22
        + 16.0 / s22 * (E * (11.0f64 / 4.0).sqrt()).ln()
        + 2.0 / (s22 * c * c)
}

/// Terms of the explicit bound on `E[N_a(T)]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Theorem2Bound<F> {
    /// `kl(mu_a + delta, mu* - delta)`
    pub kl_shifted: F,
    /// `log T / kl`
    pub leading: F,
    /// `log((1 + log^2(T/K)) / K) / kl`
    pub log_correction: F,
    /// `(16 e^2 + 2) 2 V K / delta^2`
    pub constant_term: F,
    /// Sum of the three terms plus one.
    pub total: F,
}

/// Admissible window `[sqrt(22 V K / T), gap / 3]` for `delta`.
pub fn theorem2_window<F: Real>(model: &BanditModel<F>, arm: usize, horizon: u64) -> (F, F) {
    let v = model.bounds().variance;
    let k = F::from_count(model.num_arms() as u64);
    let lo = (F::lit(22.0) * v * k / F::from_count(horizon)).sqrt();
    let hi = (model.best_mean() - model.arm(arm).mean()) / F::lit(3.0);
    (lo, hi)
}

pub fn theorem2_bound<F: Real>(
    model: &BanditModel<F>,
    arm: usize,
    delta: F,
    horizon: u64,
) -> Result<Theorem2Bound<F>> {
    if arm >= model.num_arms() {
        return Err(Error::ArmOutOfRange {
            arm,
            arms: model.num_arms(),
        });
    }
    let (lo, hi) = theorem2_window(model, arm, horizon);
    // Endpoints like gap/3 rarely survive rounding exactly.
    let slack = F::lit(WINDOW_RTOL);
    if !(delta >= lo * (F::one() - slack) && delta <= hi * (F::one() + slack)) {
        return Err(Error::Inadmissible {
            name: "delta",
            value: delta.as_f64(),
            lo: lo.as_f64(),
            hi: hi.as_f64(),
        });
    }
    let family = model.family();
    let kl = family.kl(model.arm(arm).mean() + delta, model.best_mean() - delta)?;
    let t = F::from_count(horizon);
    let k = F::from_count(model.num_arms() as u64);
    let log_tk = (t / k).ln();
    let leading = t.ln() / kl;
    let log_correction = ((F::one() + log_tk * log_tk) / k).ln() / kl;
    let e2 = F::E() * F::E();
    let constant_term = (F::lit(16.0) * e2 + F::lit(2.0)) * F::lit(2.0) * model.bounds().variance * k / (delta * delta);
    Ok(Theorem2Bound {
        kl_shifted: kl,
        leading,
        log_correction,
        constant_term,
        total: leading + log_correction + constant_term + F::one(),
    })
}

/// Peeling and cut-off constants of the minimax argument at scale `u`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProofConstants<F> {
    pub u: F,
    /// `sqrt(22 V K / T)`
    pub delta0: F,
    /// `f(u) = 2V/u^2 log(T u^2 / (2 V K))`
    pub f_of_u: F,
    /// `ceil(8V/u^2 log(T u^2 / (8 V K)))`
    pub n_of_u: u64,
    /// `f(u) K / T`, at most `exp(-3/2)`
    pub f_ratio: F,
    /// `log(T / (K f(u)))`, at least `3/2`
    pub log_ratio: F,
    /// `C = log(x (1 + log^2 x))` with `x = T / (K f(u))`
    pub peeling_c: F,
    /// `C / (C - 1)`
    pub beta: F,
    /// `1 - 1/sqrt(2)`
    pub c: F,
}

pub fn delta0<F: Real>(horizon: u64, num_arms: usize, variance: F) -> F {
    (F::lit(22.0) * variance * F::from_count(num_arms as u64) / F::from_count(horizon)).sqrt()
}

pub fn f_of_u<F: Real>(horizon: u64, num_arms: usize, variance: F, u: F) -> F {
    let two_v = F::lit(2.0) * variance;
    two_v / (u * u) * (F::from_count(horizon) * u * u / (two_v * F::from_count(num_arms as u64))).ln()
}

pub fn n_of_u<F: Real>(horizon: u64, num_arms: usize, variance: F, u: F) -> u64 {
    let eight_v = F::lit(8.0) * variance;
    let x = eight_v / (u * u) * (F::from_count(horizon) * u * u / (eight_v * F::from_count(num_arms as u64))).ln();
    x.ceil().max(F::zero()).to_u64().unwrap_or(u64::MAX)
}

/// `ceil(log(T/K (1 + log^2(T/K))) / kl(mu_a + delta, mu* - delta))`.
pub fn n_of_delta<F: Real>(model: &BanditModel<F>, arm: usize, delta: F, horizon: u64) -> Result<u64> {
    let b = theorem2_bound(model, arm, delta, horizon)?;
    let tk = F::from_count(horizon) / F::from_count(model.num_arms() as u64);
    let l = tk.ln();
    let x = (tk * (F::one() + l * l)).ln() / b.kl_shifted;
    Ok(x.ceil().to_u64().unwrap_or(u64::MAX))
}

pub fn proof_constants<F: Real>(horizon: u64, num_arms: usize, variance: F, u: F) -> Result<ProofConstants<F>> {
    let d0 = delta0(horizon, num_arms, variance);
    if !(u >= d0) || !u.is_finite() {
        return Err(Error::Inadmissible {
            name: "u",
            value: u.as_f64(),
            lo: d0.as_f64(),
            hi: f64::INFINITY,
        });
    }
    let f = f_of_u(horizon, num_arms, variance, u);
    let t = F::from_count(horizon);
    let k = F::from_count(num_arms as u64);
    let f_ratio = f * k / t;
    let log_ratio = (t / (k * f)).ln();
    let peeling_c = log_ratio + (F::one() + log_ratio * log_ratio).ln();
    Ok(ProofConstants {
        u,
        delta0: d0,
        f_of_u: f,
        n_of_u: n_of_u(horizon, num_arms, variance, u),
        f_ratio,
        log_ratio,
        peeling_c,
        beta: peeling_c / (peeling_c - F::one()),
        c: F::one() - F::one() / F::SQRT_2(),
    })
}

/// `n` points `lo * (hi/lo)^(i/(n-1))`.
pub fn log_spaced_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// `n` evenly spaced points on `[lo, hi]`, endpoints included.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Outcome of checking `lhs(x) <= rhs(x)` over a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct InequalityReport {
    pub name: String,
    pub points: usize,
    pub violations: usize,
    /// Smallest `rhs - lhs` seen on the grid.
    pub min_slack: f64,
    pub worst_point: f64,
}

impl InequalityReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

pub fn check_inequality(
    name: &str,
    grid: &[f64],
    lhs: impl Fn(f64) -> f64,
    rhs: impl Fn(f64) -> f64,
) -> InequalityReport {
    let mut report = InequalityReport {
        name: name.to_string(),
        points: grid.len(),
        violations: 0,
        min_slack: f64::INFINITY,
        worst_point: f64::NAN,
    };
    for &x in grid {
        let slack = rhs(x) - lhs(x);
        if !(slack >= 0.0) {
            report.violations += 1;
        }
        if slack < report.min_slack || slack.is_nan() {
            report.min_slack = slack;
            report.worst_point = x;
        }
    }
    report
}

pub fn lemma_beta_lhs(beta: f64) -> f64 {
    1.0 / ((beta.ln() / beta).exp_m1())
}

pub fn lemma_beta_rhs(beta: f64) -> f64 {
    2.0 * beta.max(beta / (beta - 1.0))
}

/// `1/(exp(log(b)/b) - 1) <= 2 max(b, b/(b-1))` for every `b > 1` in `grid`.
pub fn check_lemma_beta(grid: &[f64]) -> InequalityReport {
    check_inequality("lemma_beta", grid, lemma_beta_lhs, lemma_beta_rhs)
}

/// The `10^4`-point log-spaced grid on `[1 + 1e-3, 1e3]`.
pub fn lemma_beta_grid() -> Vec<f64> {
    log_spaced_grid(1.0 + 1e-3, 1e3, LEMMA_BETA_POINTS)
}

/// Scalar inequalities used to close the regret arguments, each checked on
/// a log-spaced grid over its stated domain.
pub fn helper_inequalities() -> Vec<InequalityReport> {
    let l2 = |x: f64| x.ln().powi(2);
    let e15 = 1.5f64.exp();
    vec![
        check_inequality(
            "log(1+x^2) <= x, x >= 0",
            &[vec![0.0], log_spaced_grid(1e-6, 1e6, 2000)].concat(),
            |x| (x * x).ln_1p(),
            |x| x,
        ),
        check_inequality(
            "log(x(1+log^2 x))/(1+log^2 x) <= 1, x >= 1",
            &log_spaced_grid(1.0, 1e12, 2000),
            |x| (x * (1.0 + l2(x))).ln() / (1.0 + l2(x)),
            |_| 1.0,
        ),
        check_inequality(
            "h(x) = log(x/log x)/log x <= 1, x >= 11/4",
            &log_spaced_grid(11.0 / 4.0, 1e12, 2000),
            |x| (x / x.ln()).ln() / x.ln(),
            |_| 1.0,
        ),
        check_inequality(
            "log(x(1+log^2 x))/log x <= 2, x >= e^1.5",
            &log_spaced_grid(e15, 1e12, 2000),
            |x| (x * (1.0 + l2(x))).ln() / x.ln(),
            |_| 2.0,
        ),
        check_inequality(
            "log x/log(x/log x) <= 2, x >= e^1.5",
            &log_spaced_grid(e15, 1e12, 2000),
            |x| x.ln() / (x / x.ln()).ln(),
            |_| 2.0,
        ),
    ]
}

/// `kl(mu, mu') - (mu - mu')^2/(2V) >= -1e-12` over `grid x grid`.
pub fn check_pinsker<F: Real>(family: &Family<F>, variance: F, grid: &[F]) -> Result<InequalityReport> {
    let mut report = InequalityReport {
        name: format!("pinsker {} V={}", family.kind().name(), variance),
        points: grid.len() * grid.len(),
        violations: 0,
        min_slack: f64::INFINITY,
        worst_point: f64::NAN,
    };
    let two_v = F::lit(2.0) * variance;
    for &p in grid {
        for &q in grid {
            let d = p - q;
            let slack = (family.kl(p, q)? - d * d / two_v).as_f64();
            if slack < -PINSKER_TOL {
                report.violations += 1;
            }
            if slack < report.min_slack {
                report.min_slack = slack;
                report.worst_point = p.as_f64();
            }
        }
    }
    Ok(report)
}

/// Event whose probability is bounded by a maximal inequality.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DeviationEvent {
    /// `exists N <= n <= M : kl+(mu_hat_n, mu) >= gamma`, bound `exp(-N gamma)`.
    KlPlus { gamma: f64 },
    /// `exists N <= n <= M : mu_hat_n <= x` with `x <= mu`.
    Below { x: f64, variance: f64 },
    /// `exists N <= n <= M : mu_hat_n >= x` with `x >= mu`.
    Above { x: f64, variance: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaximalCase {
    pub name: String,
    pub arm: ArmDistribution<f64>,
    pub event: DeviationEvent,
    pub first: u64,
    pub last: u64,
}

impl MaximalCase {
    /// Logarithm of the theoretical bound.
    pub fn log_bound(&self) -> f64 {
        let n = self.first as f64;
        match self.event {
            DeviationEvent::KlPlus { gamma } => -n * gamma,
            DeviationEvent::Below { x, variance } | DeviationEvent::Above { x, variance } => {
                let d = x - self.arm.mean();
                -n * d * d / (2.0 * variance)
            }
        }
    }

    fn validate(&self, trials: u64) -> Result<()> {
        let bad = |name, value: f64, lo, hi| Err(Error::Inadmissible { name, value, lo, hi });
        if trials < MIN_TRIALS {
            return bad("trials", trials as f64, MIN_TRIALS as f64, f64::INFINITY);
        }
        if self.first < 1 || self.last < self.first {
            return bad("N", self.first as f64, 1.0, self.last as f64);
        }
        let mu = self.arm.mean();
        match self.event {
            DeviationEvent::KlPlus { gamma } if !(gamma > 0.0) => bad("gamma", gamma, 0.0, f64::INFINITY),
            DeviationEvent::Below { x, .. } if x > mu => bad("x", x, f64::NEG_INFINITY, mu),
            DeviationEvent::Above { x, .. } if x < mu => bad("x", x, mu, f64::INFINITY),
            _ => Ok(()),
        }
    }

    /// Whether one stream of `last` rewards hits the event.
    fn stream_hits(&self, rng: &mut ChaCha8Rng) -> bool {
        let family = self.arm.family();
        let mu = self.arm.mean();
        let mut sum = 0.0;
        for n in 1..=self.last {
            sum += self.arm.sample(rng);
            if n < self.first {
                continue;
            }
            let mean = sum / n as f64;
            let hit = match self.event {
                DeviationEvent::KlPlus { gamma } => {
                    let m = match family {
                        Family::Bernoulli => mean.clamp(0.0, 1.0),
                        Family::Gaussian { .. } => mean,
                    };
                    family.kl_plus_unchecked(m, mu) >= gamma
                }
                DeviationEvent::Below { x, .. } => mean <= x,
                DeviationEvent::Above { x, .. } => mean >= x,
            };
            if hit {
                return true;
            }
        }
        false
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaximalReport {
    pub name: String,
    pub trials: u64,
    pub hits: u64,
    pub empirical: f64,
    pub bound: f64,
    pub log_bound: f64,
    /// Three binomial standard errors at the bound.
    pub slack: f64,
}

impl MaximalReport {
    pub fn passed(&self) -> bool {
        self.empirical <= self.bound + self.slack
    }
}

/// Monte Carlo estimate of a maximal deviation probability.
pub fn mc_deviation(case: &MaximalCase, trials: u64, seed: u64, execution: Execution) -> Result<MaximalReport> {
    case.validate(trials)?;
    let hits = run_indexed(trials, execution, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(replication_seed(seed, 0, i));
        Ok(case.stream_hits(&mut rng))
    })?
    .into_iter()
    .filter(|&h| h)
    .count() as u64;
    let log_bound = case.log_bound();
    let bound = log_bound.exp();
    Ok(MaximalReport {
        name: case.name.clone(),
        trials,
        hits,
        empirical: hits as f64 / trials as f64,
        bound,
        log_bound,
        slack: MC_SLACK_SIGMAS * (bound * (1.0 - bound) / trials as f64).sqrt(),
    })
}

/// `P(exists N <= n <= M : kl+(mu_hat_n, mu) >= gamma)` against `exp(-N gamma)`.
#[allow(clippy::too_many_arguments)]
pub fn mc_maximal_inequality(
    arm: ArmDistribution<f64>,
    gamma: f64,
    first: u64,
    last: u64,
    trials: u64,
    seed: u64,
    execution: Execution,
) -> Result<MaximalReport> {
    let case = MaximalCase {
        name: format!("kl+ {} mu={} gamma={gamma}", arm.kind().name(), arm.mean()),
        arm,
        event: DeviationEvent::KlPlus { gamma },
        first,
        last,
    };
    mc_deviation(&case, trials, seed, execution)
}

/// Cases run by the deviation suite.
pub fn default_maximal_cases() -> Vec<MaximalCase> {
    let bern = |m| ArmDistribution::bernoulli(m).expect("valid mean");
    let gauss = |m, s2| ArmDistribution::gaussian(m, s2).expect("valid arm");
    vec![
        MaximalCase {
            name: "kl+ bernoulli mu=0.5 gamma=0.2 N=10 M=200".into(),
            arm: bern(0.5),
            event: DeviationEvent::KlPlus { gamma: 0.2 },
            first: 10,
            last: 200,
        },
        MaximalCase {
            name: "kl+ bernoulli mu=0.5 gamma=1.5 N=10 M=200".into(),
            arm: bern(0.5),
            event: DeviationEvent::KlPlus { gamma: 1.5 },
            first: 10,
            last: 200,
        },
        MaximalCase {
            name: "kl+ gaussian mu=0 s2=1 gamma=0.1 N=20 M=400".into(),
            arm: gauss(0.0, 1.0),
            event: DeviationEvent::KlPlus { gamma: 0.1 },
            first: 20,
            last: 400,
        },
        MaximalCase {
            name: "sub-gaussian below gaussian mu=0 V=1 x=-0.5 N=10 M=200".into(),
            arm: gauss(0.0, 1.0),
            event: DeviationEvent::Below { x: -0.5, variance: 1.0 },
            first: 10,
            last: 200,
        },
        MaximalCase {
            name: "sub-gaussian above bernoulli mu=0.3 V=1/4 x=0.45 N=20 M=300".into(),
            arm: bern(0.3),
            event: DeviationEvent::Above { x: 0.45, variance: 0.25 },
            first: 20,
            last: 300,
        },
    ]
}

/// One line of a verification report.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub passed: bool,
    pub observed: f64,
    pub limit: f64,
    pub detail: String,
}

impl Check {
    fn from_inequality(suite: &'static str, r: &InequalityReport) -> Self {
        Check {
            suite,
            name: r.name.clone(),
            passed: r.passed(),
            observed: r.violations as f64,
            limit: 0.0,
            detail: format!("points={} min_slack={:e} at {}", r.points, r.min_slack, r.worst_point),
        }
    }
}

/// Pinsker grid checks for both families, with `variance_override` replacing
/// the Bernoulli `V = 1/4` when given.
pub fn pinsker_suite(variance_override: Option<f64>) -> Result<Vec<Check>> {
    let bern_v = variance_override.unwrap_or(0.25);
    let bern = check_pinsker(&Family::Bernoulli, bern_v, &linear_grid(0.01, 0.99, GRID_POINTS))?;
    let sigma2 = variance_override.unwrap_or(2.0);
    let gauss = check_pinsker(&Family::gaussian(2.0)?, sigma2, &linear_grid(-3.0, 3.0, GRID_POINTS))?;
    Ok(vec![
        Check::from_inequality("pinsker", &bern),
        Check::from_inequality("pinsker", &gauss),
    ])
}

pub fn lemmas_suite() -> Vec<Check> {
    let mut checks = vec![Check::from_inequality("lemmas", &check_lemma_beta(&lemma_beta_grid()))];
    checks.extend(helper_inequalities().iter().map(|r| Check::from_inequality("lemmas", r)));
    checks
}

pub fn deviation_suite(trials: u64, seed: u64, execution: Execution) -> Result<Vec<Check>> {
    default_maximal_cases()
        .iter()
        .enumerate()
        .map(|(i, case)| {
            let r = mc_deviation(case, trials, replication_seed(seed, i as u64, u64::MAX), execution)?;
            Ok(Check {
                suite: "deviation",
                name: r.name.clone(),
                passed: r.passed(),
                observed: r.empirical,
                limit: r.bound + r.slack,
                detail: format!(
                    "hits={}/{} bound={:e} log_bound={} slack={:e}",
                    r.hits, r.trials, r.bound, r.log_bound, r.slack
                ),
            })
        })
        .collect()
}

/// Closed-form facts about the bounds and proof constants.
pub fn bounds_suite() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let c76 = theorem1_constant();
    checks.push(Check {
        suite: "bounds",
        name: "minimax constant <= 76".into(),
        passed: c76 <= 76.0,
        observed: c76,
        limit: 76.0,
        detail: String::new(),
    });

    let e_neg = (-1.5f64).exp();
    let mut worst_ratio = f64::NEG_INFINITY;
    let mut worst_log = f64::INFINITY;
    let mut worst_c = f64::INFINITY;
    let mut beta_ok = true;
    for &(t, k) in &[(1_000u64, 2usize), (10_000, 2), (10_000, 10), (100_000, 5), (1_000_000, 50)] {
        for v in [0.25, 1.0, 3.0] {
            let d0 = delta0(t, k, v);
            for scale in log_spaced_grid(1.0, 1e3, 200) {
                let pc = proof_constants(t, k, v, d0 * scale)?;
                worst_ratio = worst_ratio.max(pc.f_ratio);
                worst_log = worst_log.min(pc.log_ratio);
                worst_c = worst_c.min(pc.peeling_c);
                beta_ok &= pc.beta <= 2.0 * pc.peeling_c
                    && ((pc.beta / (pc.beta - 1.0)) - pc.peeling_c).abs() <= 1e-9 * pc.peeling_c;
            }
        }
    }
    checks.push(Check {
        suite: "bounds",
        name: "f(u) K/T <= exp(-3/2) for u >= delta0".into(),
        passed: worst_ratio <= e_neg,
        observed: worst_ratio,
        limit: e_neg,
        detail: String::new(),
    });
    checks.push(Check {
        suite: "bounds",
        name: "log(T/(K f(u))) >= 3/2 for u >= delta0".into(),
        passed: worst_log >= 1.5,
        observed: worst_log,
        limit: 1.5,
        detail: String::new(),
    });
    checks.push(Check {
        suite: "bounds",
        name: "C >= 3/2, beta <= 2C, beta/(beta-1) = C".into(),
        passed: worst_c >= 1.5 && beta_ok,
        observed: worst_c,
        limit: 1.5,
        detail: String::new(),
    });

    let model = BanditModel::<f64>::bernoulli(&[0.9, 0.8])?;
    let delta = 0.1 / 3.0;
    let b = theorem2_bound(&model, 1, delta, 100_000)?;
    let sum = b.leading + b.log_correction + b.constant_term + 1.0;
    checks.push(Check {
        suite: "bounds",
        name: "draw-count bound decomposition (0.9, 0.8), T=1e5".into(),
        passed: b.total == sum && b.total.is_finite() && b.total > 0.0,
        observed: b.total,
        limit: sum,
        detail: format!(
            "kl={:e} leading={} log_correction={} constant={}",
            b.kl_shifted, b.leading, b.log_correction, b.constant_term
        ),
    });
    checks.push(Check {
        suite: "bounds",
        name: "delta outside window rejected".into(),
        passed: theorem2_bound(&model, 1, 0.05, 100_000).is_err() && theorem2_bound(&model, 1, 1e-3, 100_000).is_err(),
        observed: 0.0,
        limit: 0.0,
        detail: "the explicit form carries K/delta^2 in its constant, the headline form loglog(T)/delta^2".into(),
    });
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn theorem1_examples() {
        for k in [2usize, 5, 10] {
            let b = theorem1_bound(k as u64, k, 0.25, 0.0, 1.0);
            assert_abs_diff_eq!(b, 38.0 * k as f64 + k as f64, epsilon = 1e-9);
        }
        // 76 sqrt(5000) + 2, evaluated at 40 digits
        assert_abs_diff_eq!(theorem1_bound(10_000, 2, 0.25, 0.0, 1.0), 5_376.011_537_017_761, epsilon = 1e-6);
        let a = theorem1_bound(4_000, 3, 0.7, 0.0, 0.0);
        let b = theorem1_bound(8_000, 3, 0.7, 0.0, 0.0);
        assert_relative_eq!(b / a, 2f64.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn minimax_constant_rounds_up_to_76() {
        let c = theorem1_constant();
        assert!(c > 75.0 && c <= 76.0, "{c}");
    }

    #[test]
    fn theorem2_examples() {
        let m = BanditModel::bernoulli(&[0.9, 0.3]).unwrap();
        let b = theorem2_bound(&m, 1, 0.2, 100_000).unwrap();
        // 40-digit scalar evaluation of the three terms
        assert_relative_eq!(b.leading, 132.064_259_301_257_45, max_relative = 1e-10);
        assert_relative_eq!(b.log_correction, 46.779_821_671_366_82, max_relative = 1e-10);
        assert_relative_eq!(b.constant_term, 3_005.622_439_572_26, max_relative = 1e-10);
        assert_relative_eq!(b.total, 3_185.466_520_544_884, max_relative = 1e-10);
        assert_eq!(b.total, b.leading + b.log_correction + b.constant_term + 1.0);
    }

    #[test]
    fn theorem2_leading_term_dominates() {
        let m = BanditModel::bernoulli(&[0.9, 0.3]).unwrap();
        let delta = 0.1;
        let kl = Family::Bernoulli.kl(0.4, 0.8).unwrap();
        let excess: Vec<f64> = [1e6f64, 1e9, 1e12, 1e15, 1e18]
            .iter()
            .map(|&t| {
                let b = theorem2_bound(&m, 1, delta, t as u64).unwrap();
                assert_relative_eq!(b.leading * kl, t.ln(), max_relative = 1e-12);
                b.total * kl / t.ln() - 1.0
            })
            .collect();
        assert!(excess.iter().all(|&x| x > 0.0));
        assert!(excess.windows(2).all(|w| w[1] < w[0]));
        // the non-leading part grows like log log T, so the excess decays like 1/log T
        assert!(excess[4] < 0.4 * excess[0]);
    }

    #[test]
    fn theorem2_constant_term_decreases_in_delta() {
        let m = BanditModel::bernoulli(&[0.9, 0.3]).unwrap();
        let terms: Vec<f64> = [0.05, 0.1, 0.15, 0.2]
            .iter()
            .map(|&d| theorem2_bound(&m, 1, d, 100_000).unwrap().constant_term)
            .collect();
        assert!(terms.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn theorem2_rejects_inadmissible_delta() {
        let m = BanditModel::bernoulli(&[0.9, 0.3]).unwrap();
        assert!(theorem2_bound(&m, 1, 0.21, 100_000).is_err());
        assert!(theorem2_bound(&m, 1, 0.001, 100_000).is_err());
        assert!(theorem2_bound(&m, 0, 0.01, 100_000).is_err());
        assert!(theorem2_bound(&m, 2, 0.1, 100_000).is_err());
    }

    #[test]
    fn lemma_beta_examples() {
        assert_abs_diff_eq!(lemma_beta_lhs(2.0), 1.0 / (2f64.sqrt() - 1.0), epsilon = 1e-12);
        assert_eq!(lemma_beta_rhs(2.0), 4.0);
        // lhs 1001.0004998..., rhs 2002 at 40 digits
        assert_abs_diff_eq!(lemma_beta_lhs(1.001), 1_001.000_499_833_499_8, epsilon = 1e-6);
        assert_abs_diff_eq!(lemma_beta_rhs(1.001), 2_002.0, epsilon = 1e-9);
        let r = check_lemma_beta(&lemma_beta_grid());
        assert_eq!(r.points, 10_000);
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn helper_inequalities_hold() {
        for r in helper_inequalities() {
            assert!(r.passed(), "{r:?}");
        }
    }

    #[test]
    fn check_inequality_flags_violations() {
        let r = check_inequality("x <= 1", &[0.5, 1.0, 2.0], |x| x, |_| 1.0);
        assert_eq!(r.violations, 1);
        assert_eq!(r.worst_point, 2.0);
    }

    #[test]
    fn pinsker_examples() {
        let g = Family::gaussian(1.5).unwrap();
        let grid = linear_grid(-2.0, 2.0, GRID_POINTS);
        let r = check_pinsker(&g, 1.5, &grid).unwrap();
        assert!(r.passed());
        assert!(r.min_slack.abs() <= 1e-12);
        let grid = linear_grid(0.01, 0.99, GRID_POINTS);
        assert!(check_pinsker(&Family::Bernoulli, 0.25, &grid).unwrap().passed());
        assert!(!check_pinsker(&Family::Bernoulli, 0.1, &grid).unwrap().passed());
    }

    #[test]
    fn proof_constants_at_boundary() {
        let (t, k, v) = (10_000u64, 4usize, 0.25);
        let d0 = delta0(t, k, v);
        let pc = proof_constants(t, k, v, d0).unwrap();
        assert_relative_eq!(pc.f_of_u, 2.0 * v / (d0 * d0) * 11f64.ln(), max_relative = 1e-12);
        assert_relative_eq!(pc.f_ratio, 11f64.ln() / 11.0, max_relative = 1e-12);
        assert!(pc.f_ratio <= (-1.5f64).exp());
        assert!(pc.peeling_c >= 1.5);
        assert!(pc.beta <= 2.0 * pc.peeling_c);
        assert_relative_eq!(pc.beta / (pc.beta - 1.0), pc.peeling_c, max_relative = 1e-12);
        assert_relative_eq!(pc.c, 1.0 - 1.0 / 2f64.sqrt());
        assert!(pc.n_of_u >= 1);
        assert!(proof_constants(t, k, v, d0 * 0.99).is_err());
    }

    #[test]
    fn n_of_delta_cuts_where_budget_meets_kl() {
        let m = BanditModel::bernoulli(&[0.9, 0.3]).unwrap();
        let n = n_of_delta(&m, 1, 0.2, 100_000).unwrap();
        let kl = Family::Bernoulli.kl(0.5, 0.7).unwrap();
        let budget = (50_000f64 * (1.0 + 50_000f64.ln().powi(2))).ln();
        assert!(budget / n as f64 <= kl);
        assert!(budget / (n - 1) as f64 > kl);
    }

    #[test]
    fn vanishing_bound_case_never_fires() {
        let case = &default_maximal_cases()[1];
        assert!(case.log_bound().exp() < 1e-6);
        let r = mc_deviation(case, MIN_TRIALS, 5, Execution::Serial).unwrap();
        assert_eq!(r.hits, 0);
    }

    #[test]
    fn maximal_inequality_small_run() {
        let arm = ArmDistribution::bernoulli(0.5).unwrap();
        let r = mc_maximal_inequality(arm, 0.2, 10, 200, MIN_TRIALS, 1, Execution::Serial).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_abs_diff_eq!(r.bound, (-2f64).exp(), epsilon = 1e-15);
        assert!(mc_maximal_inequality(arm, 0.2, 10, 200, 100, 1, Execution::Serial).is_err());
        assert!(mc_maximal_inequality(arm, 0.0, 10, 200, MIN_TRIALS, 1, Execution::Serial).is_err());
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_spaced_grid(1.001, 1000.0, 10_000);
        assert_eq!(g.len(), 10_000);
        assert_abs_diff_eq!(g[0], 1.001, epsilon = 1e-15);
        assert_eq!(g[9_999], 1000.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }
}
