//! The six decision rules for a thick null, each reducing a sample to
//! reject/retain. p-values are exposed so thresholds can be swept later.

use std::cell::Cell;
use std::fmt;

use crate::numerics::{student_t_cdf, student_t_quantile, student_t_sf, Integrator, Probability};
use crate::priors::{prior_expectation, Prior, ThickNull};
use crate::{Error, Real, Result};

/// Sufficient statistics of a one-sample problem. `sd` uses divisor `n - 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleStats<T> {
    n: usize,
    mean: T,
    sd: T,
}

impl<T: Real> SampleStats<T> {
    pub fn new(n: usize, mean: T, sd: T) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain(format!("sample size must be >= 2, got {n}")));
        }
        if !mean.is_finite() || !sd.is_finite() || sd < T::zero() {
            return Err(Error::domain(format!("need finite mean and sd >= 0, got mean={mean}, sd={sd}")));
        }
        Ok(Self { n, mean, sd })
    }

    /// Welford reduction of raw observations.
    pub fn from_sample(xs: &[T]) -> Result<Self> {
        let mut mean = T::zero();
        let mut m2 = T::zero();
        for (i, &x) in xs.iter().enumerate() {
            let delta = x - mean;
            mean = mean + delta / T::lit((i + 1) as f64);
            m2 = m2 + delta * (x - mean);
        }
        let n = xs.len();
        if n < 2 {
            return Err(Error::domain(format!("sample size must be >= 2, got {n}")));
        }
        Self::new(n, mean, (m2.max(T::zero()) / T::lit((n - 1) as f64)).sqrt())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> T {
        self.mean
    }

    pub fn sd(&self) -> T {
        self.sd
    }

    pub fn df(&self) -> T {
        T::lit((self.n - 1) as f64)
    }

    pub fn std_error(&self) -> T {
        self.sd / T::lit(self.n as f64).sqrt()
    }

    fn nondegenerate_se(&self) -> Result<T> {
        if self.sd > T::zero() {
            Ok(self.std_error())
        } else {
            Err(Error::DegenerateSample(format!("zero standard deviation (n={}, mean={})", self.n, self.mean)))
        }
    }
}

/// Significance levels of the p-value based rules and the interval rule's confidence level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionConfig<T> {
    pub alpha_conventional: Probability<T>,
    pub alpha_small: Probability<T>,
    pub alpha_thick: Probability<T>,
    pub ci_level: Probability<T>,
}

impl<T: Real> DecisionConfig<T> {
    pub fn new(alpha_conventional: T, alpha_small: T, alpha_thick: T, ci_level: T) -> Result<Self> {
        let open = |v: T, name: &str| {
            if v > T::zero() && v < T::one() {
                Probability::new(v)
            } else {
                Err(Error::domain(format!("{name} must lie in (0, 1), got {v}")))
            }
        };
        Ok(Self {
            alpha_conventional: open(alpha_conventional, "alpha_conventional")?,
            alpha_small: open(alpha_small, "alpha_small")?,
            alpha_thick: open(alpha_thick, "alpha_thick")?,
            ci_level: open(ci_level, "ci_level")?,
        })
    }
}

impl<T: Real> Default for DecisionConfig<T> {
    fn default() -> Self {
        Self::new(T::lit(0.05), T::lit(0.005), T::lit(0.05), T::lit(0.95)).expect("valid defaults")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MethodKind {
    Conventional,
    SmallAlpha,
    DistanceOnly,
    Mesp,
    IntervalBased,
    ThickT,
}

impl MethodKind {
    pub const ALL: [MethodKind; 6] = [
        MethodKind::Conventional,
        MethodKind::SmallAlpha,
        MethodKind::Mesp,
        MethodKind::DistanceOnly,
        MethodKind::IntervalBased,
        MethodKind::ThickT,
    ];

    pub fn label(self) -> &'static str {
        match self {
            MethodKind::Conventional => "conventional",
            MethodKind::SmallAlpha => "small_alpha",
            MethodKind::DistanceOnly => "distance_only",
            MethodKind::Mesp => "mesp",
            MethodKind::IntervalBased => "interval",
            MethodKind::ThickT => "thick_t",
        }
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict<T> {
    pub reject: bool,
    /// Absent for distance-only.
    pub p_value: Option<Probability<T>>,
    pub method: MethodKind,
}

/// Two-sided one-sample t-test p-value for the point null `mu = mu0`.
pub fn t_test_p<T: Real>(stats: &SampleStats<T>, mu0: T) -> Result<Probability<T>> {
    let se = stats.nondegenerate_se()?;
    let t = (stats.mean - mu0).abs() / se;
    Probability::saturating(T::lit(2.0) * student_t_sf(t, stats.df())?.get())
}

fn threshold<T: Real>(method: MethodKind, p: Probability<T>, alpha: Probability<T>) -> Verdict<T> {
    Verdict { reject: p.get() < alpha.get(), p_value: Some(p), method }
}

pub fn decide_conventional<T: Real>(stats: &SampleStats<T>, null: &ThickNull<T>, cfg: &DecisionConfig<T>) -> Result<Verdict<T>> {
    Ok(threshold(MethodKind::Conventional, t_test_p(stats, null.mu0())?, cfg.alpha_conventional))
}

pub fn decide_small_alpha<T: Real>(stats: &SampleStats<T>, null: &ThickNull<T>, cfg: &DecisionConfig<T>) -> Result<Verdict<T>> {
    Ok(threshold(MethodKind::SmallAlpha, t_test_p(stats, null.mu0())?, cfg.alpha_small))
}

/// Rejects when the observed distance `|mean - mu0|` is at least `mpsd`.
pub fn decide_distance<T: Real>(stats: &SampleStats<T>, null: &ThickNull<T>) -> Verdict<T> {
    Verdict {
        reject: (stats.mean - null.mu0()).abs() >= null.mpsd(),
        p_value: None,
        method: MethodKind::DistanceOnly,
    }
}

/// Conventional test AND distance-only. Carries the conventional p-value.
pub fn decide_mesp<T: Real>(stats: &SampleStats<T>, null: &ThickNull<T>, cfg: &DecisionConfig<T>) -> Result<Verdict<T>> {
    let conventional = decide_conventional(stats, null, cfg)?;
    let distance = decide_distance(stats, null);
    Ok(Verdict {
        reject: conventional.reject && distance.reject,
        p_value: conventional.p_value,
        method: MethodKind::Mesp,
    })
}

/// `t_{(1 + level)/2, df}`; infinite at `level = 1`, zero at `level = 0`.
pub fn interval_quantile<T: Real>(ci_level: T, df: T) -> Result<T> {
    if !(ci_level >= T::zero() && ci_level <= T::one()) {
        return Err(Error::domain(format!("confidence level must be in [0, 1], got {ci_level}")));
    }
    if ci_level == T::one() {
        return Ok(T::infinity());
    }
    if ci_level == T::zero() {
        return Ok(T::zero());
    }
    student_t_quantile(Probability::new((T::one() + ci_level) * T::lit(0.5))?, df)
}

/// `mean ± t_{(1+level)/2, n-1} * se`.
pub fn confidence_interval<T: Real>(stats: &SampleStats<T>, ci_level: T) -> Result<(T, T)> {
    let se = stats.nondegenerate_se()?;
    let half = interval_quantile(ci_level, stats.df())? * se;
    Ok((stats.mean - half, stats.mean + half))
}

/// Interval rule with a precomputed quantile: rejects only when the
/// confidence interval and the null interval are disjoint. Touching endpoints
/// count as intersecting.
pub fn interval_rejects<T: Real>(stats: &SampleStats<T>, null: &ThickNull<T>, quantile: T) -> Result<bool> {
    let se = stats.nondegenerate_se()?;
    if quantile.is_infinite() {
        return Ok(false);
    }
    let half = quantile * se;
    Ok(stats.mean - half > null.upper() || stats.mean + half < null.lower())
}

/// Smallest two-sided level at which the interval rule rejects:
/// `2 * P(T > (|mean - mu0| - mpsd) / se)`, or 1 when the mean is inside the null interval.
pub fn interval_p<T: Real>(stats: &SampleStats<T>, null: &ThickNull<T>) -> Result<Probability<T>> {
    let se = stats.nondegenerate_se()?;
    let excess = (stats.mean - null.mu0()).abs() - null.mpsd();
    if excess <= T::zero() {
        return Probability::new(T::one());
    }
    Probability::saturating(T::lit(2.0) * student_t_sf(excess / se, stats.df())?.get())
}

pub fn decide_interval<T: Real>(stats: &SampleStats<T>, null: &ThickNull<T>, cfg: &DecisionConfig<T>) -> Result<Verdict<T>> {
    let quantile = interval_quantile(cfg.ci_level.get(), stats.df())?;
    Ok(Verdict {
        reject: interval_rejects(stats, null, quantile)?,
        p_value: Some(interval_p(stats, null)?),
        method: MethodKind::IntervalBased,
    })
}

/// `P(|Xbar - mu0| > |xbar - mu0| | mu = mu_dot)` under the plug-in model
/// `(Xbar - mu_dot) / se ~ t_{n-1}`. Both tails use direct tail forms.
pub fn exceedance_probability<T: Real>(stats: &SampleStats<T>, null: &ThickNull<T>, mu_dot: T) -> Result<T> {
    let se = stats.nondegenerate_se()?;
    let d = (stats.mean - null.mu0()).abs();
    let shift = null.mu0() - mu_dot;
    let df = stats.df();
    let upper = student_t_sf((d + shift) / se, df)?.get();
    let lower = student_t_cdf((shift - d) / se, df)?.get();
    Ok(upper + lower)
}

/// Prior-predictive p-value of the thick t-test.
pub fn thick_p<T: Real>(
    stats: &SampleStats<T>,
    null: &ThickNull<T>,
    prior: &Prior<T>,
    integrator: &Integrator<T>,
) -> Result<Probability<T>> {
    stats.nondegenerate_se()?;
    let prior = prior.resolve(null, stats.mean);
    let d = (stats.mean - null.mu0()).abs();
    // g has its steepest change where mu_dot = mu0 ± d
    let breaks = [null.mu0() - d, null.mu0() + d];
    let failure: Cell<Option<Error>> = Cell::new(None);
    let value = prior_expectation(
        &prior,
        |mu| match exceedance_probability(stats, null, mu) {
            Ok(v) => v,
            Err(e) => {
                failure.set(Some(e));
                T::nan()
            }
        },
        null,
        integrator,
        &breaks,
    );
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Probability::saturating(value?)
}

/// `sup` of the exceedance probability over the null interval.
///
/// The exceedance probability is symmetric in `mu_dot` about `mu0` and
/// increasing in `|mu_dot - mu0|`, so the supremum sits at either endpoint.
/// When the mean lies outside the interval this is the endpoint nearest to it.
pub fn thick_p_supremum<T: Real>(stats: &SampleStats<T>, null: &ThickNull<T>) -> Result<Probability<T>> {
    let edge = if stats.mean >= null.mu0() { null.upper() } else { null.lower() };
    Probability::saturating(exceedance_probability(stats, null, edge)?)
}

pub fn decide_thick<T: Real>(
    stats: &SampleStats<T>,
    null: &ThickNull<T>,
    prior: &Prior<T>,
    cfg: &DecisionConfig<T>,
    integrator: &Integrator<T>,
) -> Result<Verdict<T>> {
    Ok(threshold(MethodKind::ThickT, thick_p(stats, null, prior, integrator)?, cfg.alpha_thick))
}

/// How a thick t-test integrates over the null interval.
#[derive(Debug, Clone, PartialEq)]
pub enum ThickVariant<T> {
    Prior(Prior<T>),
    Supremum,
}

/// A configured decision rule.
#[derive(Debug, Clone, PartialEq)]
pub enum Method<T> {
    Conventional,
    SmallAlpha,
    DistanceOnly,
    Mesp,
    IntervalBased,
    ThickT(ThickVariant<T>),
}

impl<T: Real> Method<T> {
    pub fn kind(&self) -> MethodKind {
        match self {
            Method::Conventional => MethodKind::Conventional,
            Method::SmallAlpha => MethodKind::SmallAlpha,
            Method::DistanceOnly => MethodKind::DistanceOnly,
            Method::Mesp => MethodKind::Mesp,
            Method::IntervalBased => MethodKind::IntervalBased,
            Method::ThickT(_) => MethodKind::ThickT,
        }
    }

    pub fn evaluate(
        &self,
        stats: &SampleStats<T>,
        null: &ThickNull<T>,
        cfg: &DecisionConfig<T>,
        integrator: &Integrator<T>,
    ) -> Result<Verdict<T>> {
        match self {
            Method::Conventional => decide_conventional(stats, null, cfg),
            Method::SmallAlpha => decide_small_alpha(stats, null, cfg),
            Method::DistanceOnly => Ok(decide_distance(stats, null)),
            Method::Mesp => decide_mesp(stats, null, cfg),
            Method::IntervalBased => decide_interval(stats, null, cfg),
            Method::ThickT(ThickVariant::Prior(prior)) => decide_thick(stats, null, prior, cfg, integrator),
            Method::ThickT(ThickVariant::Supremum) => {
                Ok(threshold(MethodKind::ThickT, thick_p_supremum(stats, null)?, cfg.alpha_thick))
            }
        }
    }
}
