//! Mean-parametrized one-parameter exponential families.
//!
//! Two instances are supported: Bernoulli arms and Gaussian arms with a known
//! common variance. Both are parametrized by their mean, and the divergence
//! between two members is written `kl(mu, mu')`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Bernoulli,
    #[serde(alias = "gaussian")]
    GaussianKnownVariance,
}

impl FamilyKind {
    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Bernoulli => "bernoulli",
            FamilyKind::GaussianKnownVariance => "gaussian",
        }
    }
}

/// A family together with its fixed nuisance parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Family<F> {
    Bernoulli,
    Gaussian { sigma2: F },
}

impl<F: Real> Family<F> {
    pub fn gaussian(sigma2: F) -> Result<Self> {
        if !(sigma2 > F::zero()) || !sigma2.is_finite() {
            return Err(Error::InvalidArm(format!(
                "gaussian variance must be positive and finite, got {sigma2}"
            )));
        }
        Ok(Family::Gaussian { sigma2 })
    }

    pub fn kind(&self) -> FamilyKind {
        match self {
            Family::Bernoulli => FamilyKind::Bernoulli,
            Family::Gaussian { .. } => FamilyKind::GaussianKnownVariance,
        }
    }

    pub fn sigma2(&self) -> Option<F> {
        match *self {
            Family::Bernoulli => None,
            Family::Gaussian { sigma2 } => Some(sigma2),
        }
    }

    /// Variance bound `V` used in the quadratic lower bound on `kl`.
    pub fn default_variance(&self) -> F {
        match *self {
            Family::Bernoulli => F::lit(0.25),
            Family::Gaussian { sigma2 } => sigma2,
        }
    }

    /// Closure of the mean domain: `[0, 1]` or `(-inf, inf)`.
    pub fn mean_domain(&self) -> (F, F) {
        match self {
            Family::Bernoulli => (F::zero(), F::one()),
            Family::Gaussian { .. } => (F::neg_infinity(), F::infinity()),
        }
    }

    /// Accepts any value an empirical mean can take.
    pub fn check_empirical_mean(&self, mu: F) -> Result<()> {
        let ok = match self {
            Family::Bernoulli => mu >= F::zero() && mu <= F::one(),
            Family::Gaussian { .. } => mu.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::MeanDomain {
                family: self.kind().name(),
                value: mu.as_f64(),
            })
        }
    }

    /// `kl(mu, mu_prime)`.
    ///
    /// Bernoulli uses `0 log 0 = 0`, so boundary values of `mu` are legal. A
    /// boundary `mu_prime` different from `mu` yields `+inf`; this is a value,
    /// not an error. Errors are reserved for arguments outside `[0, 1]`
    /// (Bernoulli) or non-finite arguments (Gaussian).
    pub fn kl(&self, mu: F, mu_prime: F) -> Result<F> {
        self.check_empirical_mean(mu)?;
        self.check_empirical_mean(mu_prime)?;
        Ok(self.kl_unchecked(mu, mu_prime))
    }

    /// `kl(p, q)` if `p <= q`, else 0.
    pub fn kl_plus(&self, mu: F, mu_prime: F) -> Result<F> {
        let kl = self.kl(mu, mu_prime)?;
        Ok(if mu <= mu_prime { kl } else { F::zero() })
    }

    #[inline]
    pub(crate) fn kl_unchecked(&self, mu: F, mu_prime: F) -> F {
        match *self {
            Family::Bernoulli => bernoulli_kl(mu, mu_prime),
            Family::Gaussian { sigma2 } => {
                let d = mu - mu_prime;
                d * d / (F::lit(2.0) * sigma2)
            }
        }
    }

    #[inline]
    pub(crate) fn kl_plus_unchecked(&self, mu: F, mu_prime: F) -> F {
        if mu <= mu_prime {
            self.kl_unchecked(mu, mu_prime)
        } else {
            F::zero()
        }
    }
}

#[inline]
fn bernoulli_kl<F: Real>(p: F, q: F) -> F {
    let (zero, one) = (F::zero(), F::one());
    if p == q {
        return zero;
    }
    if q <= zero || q >= one {
        return F::infinity();
    }
    let head = if p > zero { p * (p / q).ln() } else { zero };
    let tail = if p < one {
        (one - p) * ((one - p) / (one - q)).ln()
    } else {
        zero
    };
    (head + tail).max(zero)
}

/// One arm: a family member identified by its mean.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArmDistribution<F> {
    family: Family<F>,
    mean: F,
}

impl<F: Real> ArmDistribution<F> {
    pub fn bernoulli(mean: F) -> Result<Self> {
        if !(mean > F::zero() && mean < F::one()) {
            return Err(Error::InvalidArm(format!(
                "bernoulli mean must lie in (0, 1), got {mean}"
            )));
        }
        Ok(Self {
            family: Family::Bernoulli,
            mean,
        })
    }

    pub fn gaussian(mean: F, sigma2: F) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::InvalidArm(format!("gaussian mean must be finite, got {mean}")));
        }
        Ok(Self {
            family: Family::gaussian(sigma2)?,
            mean,
        })
    }

    pub fn new(family: Family<F>, mean: F) -> Result<Self> {
        match family {
            Family::Bernoulli => Self::bernoulli(mean),
            Family::Gaussian { sigma2 } => Self::gaussian(mean, sigma2),
        }
    }

    pub fn family(&self) -> Family<F> {
        self.family
    }

    pub fn kind(&self) -> FamilyKind {
        self.family.kind()
    }

    pub fn mean(&self) -> F {
        self.mean
    }

    /// Draws one reward and advances `rng`.
    ///
    /// Bernoulli compares one uniform `[0, 1)` draw against the mean. Gaussian
    /// scales a standard normal drawn with the ziggurat sampler of `rand_distr`,
    /// which is exact and consumes the generator deterministically.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> F {
        match self.family {
            Family::Bernoulli => {
                let u: f64 = rng.random();
                if u < self.mean.as_f64() {
                    F::one()
                } else {
                    F::zero()
                }
            }
            Family::Gaussian { sigma2 } => {
                let z: f64 = StandardNormal.sample(rng);
                self.mean + sigma2.sqrt() * F::lit(z)
            }
        }
    }
}

/// `[mu_minus, mu_plus]` range of the means and the variance bound `V`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FamilyBounds<F> {
    pub mu_minus: F,
    pub mu_plus: F,
    pub variance: F,
}

impl<F: Real> FamilyBounds<F> {
    pub fn new(mu_minus: F, mu_plus: F, variance: F) -> Result<Self> {
        if !(mu_minus < mu_plus) {
            return Err(Error::InvalidModel(format!(
                "bounds require mu_minus < mu_plus, got [{mu_minus}, {mu_plus}]"
            )));
        }
        if !(variance > F::zero()) || !variance.is_finite() {
            return Err(Error::InvalidModel(format!(
                "variance bound must be positive, got {variance}"
            )));
        }
        Ok(Self {
            mu_minus,
            mu_plus,
            variance,
        })
    }

    pub fn width(&self) -> F {
        self.mu_plus - self.mu_minus
    }

    pub fn contains(&self, mu: F) -> bool {
        mu >= self.mu_minus && mu <= self.mu_plus
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelStats<F> {
    pub best_mean: F,
    pub gaps: Vec<F>,
}

/// Ordered arms of a single family plus its declared bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct BanditModel<F> {
    arms: Vec<ArmDistribution<F>>,
    bounds: FamilyBounds<F>,
}

impl<F: Real> BanditModel<F> {
    /// Builds a model with default bounds.
    ///
    /// Bernoulli: `[0, 1]` and `V = 1/4`. Gaussian: the hull of the arm means
    /// and `V = sigma2`; if every mean coincides the hull is widened by one
    /// standard deviation on each side.
    pub fn new(arms: Vec<ArmDistribution<F>>) -> Result<Self> {
        let family = validate_arms(&arms)?;
        let bounds = match family {
            Family::Bernoulli => FamilyBounds::new(F::zero(), F::one(), F::lit(0.25))?,
            Family::Gaussian { sigma2 } => {
                let lo = arms.iter().map(|a| a.mean).fold(F::infinity(), F::min);
                let hi = arms.iter().map(|a| a.mean).fold(F::neg_infinity(), F::max);
                if lo < hi {
                    FamilyBounds::new(lo, hi, sigma2)?
                } else {
                    let sd = sigma2.sqrt();
                    FamilyBounds::new(lo - sd, hi + sd, sigma2)?
                }
            }
        };
        Ok(Self { arms, bounds })
    }

    pub fn with_bounds(arms: Vec<ArmDistribution<F>>, bounds: FamilyBounds<F>) -> Result<Self> {
        validate_arms(&arms)?;
        if let Some(a) = arms.iter().find(|a| !bounds.contains(a.mean)) {
            return Err(Error::InvalidModel(format!(
                "arm mean {} outside declared bounds [{}, {}]",
                a.mean, bounds.mu_minus, bounds.mu_plus
            )));
        }
        Ok(Self { arms, bounds })
    }

    pub fn bernoulli(means: &[F]) -> Result<Self> {
        let arms = means
            .iter()
            .map(|&m| ArmDistribution::bernoulli(m))
            .collect::<Result<Vec<_>>>()?;
        Self::new(arms)
    }

    pub fn gaussian(means: &[F], sigma2: F) -> Result<Self> {
        let arms = means
            .iter()
            .map(|&m| ArmDistribution::gaussian(m, sigma2))
            .collect::<Result<Vec<_>>>()?;
        Self::new(arms)
    }

    pub fn arms(&self) -> &[ArmDistribution<F>] {
        &self.arms
    }

    pub fn arm(&self, a: usize) -> &ArmDistribution<F> {
        &self.arms[a]
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn family(&self) -> Family<F> {
        self.arms[0].family
    }

    pub fn bounds(&self) -> &FamilyBounds<F> {
        &self.bounds
    }

    pub fn means(&self) -> Vec<F> {
        self.arms.iter().map(|a| a.mean).collect()
    }

    pub fn best_mean(&self) -> F {
        self.arms
            .iter()
            .map(|a| a.mean)
            .fold(F::neg_infinity(), F::max)
    }

    /// Lowest index among the arms attaining the best mean.
    pub fn best_arm(&self) -> usize {
        let best = self.best_mean();
        self.arms.iter().position(|a| a.mean == best).unwrap_or(0)
    }

    pub fn gaps(&self) -> Vec<F> {
        let best = self.best_mean();
        self.arms.iter().map(|a| best - a.mean).collect()
    }

    pub fn stats(&self) -> ModelStats<F> {
        ModelStats {
            best_mean: self.best_mean(),
            gaps: self.gaps(),
        }
    }
}

fn validate_arms<F: Real>(arms: &[ArmDistribution<F>]) -> Result<Family<F>> {
    if arms.len() < 2 {
        return Err(Error::InvalidModel(format!(
            "a model needs at least two arms, got {}",
            arms.len()
        )));
    }
    let family = arms[0].family;
    if arms.iter().any(|a| a.family != family) {
        return Err(Error::InvalidModel(
            "all arms must share one family (and one variance for gaussian arms)".into(),
        ));
    }
    Ok(family)
}
