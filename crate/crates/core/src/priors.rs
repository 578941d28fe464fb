//! The thick null interval and distributions of the mean restricted to it.

use std::sync::Arc;

use crate::numerics::{normal_cdf, Integrator, Probability};
use crate::{Error, Real, Result};

/// `H0: |mu - mu0| <= mpsd`, i.e. `mu` in `[mu0 - mpsd, mu0 + mpsd]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThickNull<T> {
    mu0: T,
    mpsd: T,
}

impl<T: Real> ThickNull<T> {
    pub fn new(mu0: T, mpsd: T) -> Result<Self> {
        if !mu0.is_finite() || !mpsd.is_finite() || mpsd < T::zero() {
            return Err(Error::domain(format!("thick null needs finite mu0 and mpsd >= 0, got mu0={mu0}, mpsd={mpsd}")));
        }
        Ok(Self { mu0, mpsd })
    }

    /// The null whose interval is `[lo, hi]`.
    pub fn from_interval(lo: T, hi: T) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::domain(format!("interval bounds reversed: [{lo}, {hi}]")));
        }
        let half = T::lit(0.5);
        Self::new((lo + hi) * half, (hi - lo) * half)
    }

    pub fn mu0(&self) -> T {
        self.mu0
    }

    pub fn mpsd(&self) -> T {
        self.mpsd
    }

    pub fn lower(&self) -> T {
        self.mu0 - self.mpsd
    }

    pub fn upper(&self) -> T {
        self.mu0 + self.mpsd
    }

    /// Point null (`mpsd == 0`).
    pub fn is_point(&self) -> bool {
        self.mpsd == T::zero()
    }

    pub fn contains(&self, mu: T) -> bool {
        (mu - self.mu0).abs() <= self.mpsd
    }

    /// The point of the interval nearest to `x`.
    pub fn clamp(&self, x: T) -> T {
        x.max(self.lower()).min(self.upper())
    }
}

/// Distribution of `mu` under the thick null. Variants carry only their shape;
/// the support is the interval of the [`ThickNull`] they are mixed against.
#[derive(Debug, Clone, PartialEq)]
pub enum Prior<T> {
    PointMass { location: T },
    /// Uniform on the grid `{k * step}` intersected with the interval.
    DiscreteUniform { step: T },
    ContinuousUniform,
    TruncatedNormal { location: T, scale: T },
    /// Gaussian KDE, truncated and renormalized to the interval.
    EmpiricalKde { sample: Arc<[T]>, bandwidth: T },
    /// Point mass at the interval point nearest the observed mean; see [`Prior::resolve`].
    NearestEdge,
}

impl<T: Real> Prior<T> {
    pub fn point_mass(location: T) -> Result<Self> {
        if !location.is_finite() {
            return Err(Error::domain("point mass location must be finite"));
        }
        Ok(Prior::PointMass { location })
    }

    pub fn discrete_uniform(step: T) -> Result<Self> {
        if !(step > T::zero()) || !step.is_finite() {
            return Err(Error::domain(format!("grid step must be > 0, got {step}")));
        }
        Ok(Prior::DiscreteUniform { step })
    }

    pub fn truncated_normal(location: T, scale: T) -> Result<Self> {
        if !location.is_finite() || !(scale > T::zero()) || !scale.is_finite() {
            return Err(Error::domain(format!("truncated normal needs finite location and scale > 0, got {location}, {scale}")));
        }
        Ok(Prior::TruncatedNormal { location, scale })
    }

    pub fn empirical_kde(sample: impl Into<Arc<[T]>>, bandwidth: T) -> Result<Self> {
        let sample = sample.into();
        if sample.is_empty() {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        if sample.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("KDE sample contains non-finite values"));
        }
        if !(bandwidth > T::zero()) || !bandwidth.is_finite() {
            return Err(Error::domain(format!("KDE bandwidth must be > 0, got {bandwidth}")));
        }
        Ok(Prior::EmpiricalKde { sample, bandwidth })
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self, Prior::ContinuousUniform | Prior::TruncatedNormal { .. } | Prior::EmpiricalKde { .. })
    }

    /// Replaces [`Prior::NearestEdge`] by a point mass at `clamp(observed_mean)`.
    pub fn resolve(&self, null: &ThickNull<T>, observed_mean: T) -> Prior<T> {
        match self {
            Prior::NearestEdge => Prior::PointMass { location: null.clamp(observed_mean) },
            other => other.clone(),
        }
    }

    /// Support points of a discrete uniform prior.
    pub fn grid_support(step: T, null: &ThickNull<T>) -> Vec<T> {
        let slack = T::epsilon() * T::lit(16.0);
        let first = (null.lower() / step * (T::one() - slack.copysign(null.lower()))).ceil();
        let last = (null.upper() / step * (T::one() + slack.copysign(null.upper()))).floor();
        let mut out = Vec::new();
        let mut k = first;
        while k <= last {
            let point = k * step;
            if null.contains(point) || (point - null.clamp(point)).abs() <= slack * point.abs().max(T::one()) {
                out.push(null.clamp(point));
            }
            k = k + T::one();
        }
        out
    }

    /// Normalized density over the interval for continuous variants; the
    /// normalizing constants are closed-form.
    pub fn density(&self, x: T, null: &ThickNull<T>) -> Result<T> {
        if !null.contains(x) {
            return Ok(T::zero());
        }
        let (lo, hi) = (null.lower(), null.upper());
        let sqrt_2pi = (T::lit(2.0) * T::PI()).sqrt();
        match self {
            Prior::ContinuousUniform => {
                if null.is_point() {
                    return Err(Error::DegeneratePrior("continuous prior on a zero-width interval".into()));
                }
                Ok((hi - lo).recip())
            }
            Prior::TruncatedNormal { location, scale } => {
                let mass = normal_cdf((hi - *location) / *scale)?.get() - normal_cdf((lo - *location) / *scale)?.get();
                if !(mass > T::zero()) {
                    return Err(Error::DegeneratePrior("truncated normal has no mass on the interval".into()));
                }
                let z = (x - *location) / *scale;
                Ok((-(z * z) * T::lit(0.5)).exp() / (*scale * sqrt_2pi * mass))
            }
            Prior::EmpiricalKde { sample, bandwidth } => {
                let h = *bandwidth;
                let mut mass = T::zero();
                let mut value = T::zero();
                for &xi in sample.iter() {
                    mass = mass + normal_cdf((hi - xi) / h)?.get() - normal_cdf((lo - xi) / h)?.get();
                    let z = (x - xi) / h;
                    value = value + (-(z * z) * T::lit(0.5)).exp();
                }
                if !(mass > T::zero()) {
                    return Err(Error::DegeneratePrior("kernel density has no mass on the interval".into()));
                }
                Ok(value / (h * sqrt_2pi * mass))
            }
            _ => Err(Error::domain("density is only defined for continuous priors")),
        }
    }

    /// Unnormalized log-weight used inside the mixing integral, shifted so that
    /// its maximum over the interval is near zero.
    fn log_weight_fn(&self, null: &ThickNull<T>) -> Box<dyn Fn(T) -> T + Send + Sync + '_> {
        let half = T::lit(0.5);
        match self {
            Prior::TruncatedNormal { location, scale } => {
                let (location, scale) = (*location, *scale);
                let z_near = (null.clamp(location) - location) / scale;
                let shift = z_near * z_near * half;
                Box::new(move |x| {
                    let z = (x - location) / scale;
                    shift - z * z * half
                })
            }
            Prior::EmpiricalKde { sample, bandwidth } => {
                let h = *bandwidth;
                let shift = sample
                    .iter()
                    .map(|&xi| {
                        let z = (null.clamp(xi) - xi) / h;
                        z * z * half
                    })
                    .fold(T::infinity(), T::min);
                Box::new(move |x| {
                    let s: T = sample
                        .iter()
                        .map(|&xi| {
                            let z = (x - xi) / h;
                            (shift - z * z * half).exp()
                        })
                        .sum();
                    s.ln()
                })
            }
            _ => Box::new(|_| T::zero()),
        }
    }
}

/// Expectation of `f(mu)` under `prior` restricted to the null interval.
///
/// `breaks` are optional interior points where `f` changes quickly; the
/// integral of continuous priors is split there.
pub fn prior_expectation<T: Real, F: FnMut(T) -> T>(
    prior: &Prior<T>,
    mut f: F,
    null: &ThickNull<T>,
    integrator: &Integrator<T>,
    breaks: &[T],
) -> Result<T> {
    match prior {
        Prior::PointMass { location } => {
            if !null.contains(*location) {
                return Err(Error::DegeneratePrior(format!(
                    "point mass at {location} lies outside [{}, {}]",
                    null.lower(),
                    null.upper()
                )));
            }
            Ok(f(*location))
        }
        Prior::NearestEdge => Err(Error::DegeneratePrior(
            "nearest-edge prior must be resolved against the observed mean first".into(),
        )),
        _ if null.is_point() => Ok(f(null.mu0())),
        Prior::DiscreteUniform { step } => {
            let support = Prior::grid_support(*step, null);
            if support.is_empty() {
                return Err(Error::DegeneratePrior(format!(
                    "no grid points of step {step} in [{}, {}]",
                    null.lower(),
                    null.upper()
                )));
            }
            let count = T::lit(support.len() as f64);
            Ok(support.into_iter().map(f).sum::<T>() / count)
        }
        Prior::ContinuousUniform | Prior::TruncatedNormal { .. } | Prior::EmpiricalKde { .. } => {
            let log_w = prior.log_weight_fn(null);
            let mut cuts = vec![null.lower()];
            let mut inner: Vec<T> = breaks.iter().copied().filter(|&b| b > null.lower() && b < null.upper()).collect();
            inner.sort_by(|a, b| a.partial_cmp(b).expect("finite break points"));
            inner.dedup();
            cuts.extend(inner);
            cuts.push(null.upper());
            let mut num = T::zero();
            let mut den = T::zero();
            for w in cuts.windows(2) {
                num = num + integrator.integrate(|x| log_w(x).exp() * f(x), w[0], w[1])?;
                den = den + integrator.integrate(|x| log_w(x).exp(), w[0], w[1])?;
            }
            if !(den > T::zero()) || !den.is_finite() {
                return Err(Error::DegeneratePrior("prior has no mass on the interval".into()));
            }
            Ok(num / den)
        }
    }
}

/// Mixes a tail-probability function against the prior.
pub fn prior_mix<T: Real, F: FnMut(T) -> T>(
    prior: &Prior<T>,
    f: F,
    null: &ThickNull<T>,
    integrator: &Integrator<T>,
) -> Result<Probability<T>> {
    Probability::saturating(prior_expectation(prior, f, null, integrator, &[])?)
}

fn mean_and_sd<T: Real>(xs: &[T]) -> (T, T) {
    let n = T::lit(xs.len() as f64);
    let mean = xs.iter().copied().sum::<T>() / n;
    let ss: T = xs.iter().map(|&x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - T::one())).sqrt())
}

/// Linear-interpolation sample quantile (Hyndman-Fan type 7) of sorted data.
fn sorted_quantile<T: Real>(sorted: &[T], q: T) -> T {
    let h = T::lit((sorted.len() - 1) as f64) * q;
    let lo = h.floor();
    let i = lo.to_usize().unwrap_or(0);
    if i + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    sorted[i] + (h - lo) * (sorted[i + 1] - sorted[i])
}

fn validate_effects<T: Real>(effects: &[T]) -> Result<()> {
    if effects.len() < 3 {
        return Err(Error::InsufficientData { needed: 3, got: effects.len() });
    }
    if effects.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain("effect sizes must be finite"));
    }
    Ok(())
}

/// Plug-in moment fit: location and scale are the sample mean and standard
/// deviation, the support is `bounds`.
pub fn fit_truncated_normal<T: Real>(effects: &[T], bounds: &ThickNull<T>) -> Result<Prior<T>> {
    validate_effects(effects)?;
    if let Some(x) = effects.iter().find(|&&x| !bounds.contains(x)) {
        return Err(Error::domain(format!(
            "effect {x} lies outside [{}, {}]",
            bounds.lower(),
            bounds.upper()
        )));
    }
    let (mean, sd) = mean_and_sd(effects);
    if !(sd > T::zero()) {
        return Err(Error::DegenerateData("effects have zero variance".into()));
    }
    Prior::truncated_normal(mean, sd)
}

/// Silverman's rule of thumb `0.9 * min(sd, iqr / 1.34) * m^(-1/5)`.
pub fn silverman_bandwidth<T: Real>(sd: T, iqr: T, m: usize) -> T {
    let spread = if iqr > T::zero() { sd.min(iqr / T::lit(1.34)) } else { sd };
    T::lit(0.9) * spread * T::lit(m as f64).powf(T::lit(-0.2))
}

/// Gaussian KDE with Silverman bandwidth. Every effect must lie in `bounds`.
pub fn fit_kde<T: Real>(effects: &[T], bounds: &ThickNull<T>) -> Result<Prior<T>> {
    validate_effects(effects)?;
    if let Some(x) = effects.iter().find(|&&x| !bounds.contains(x)) {
        return Err(Error::domain(format!(
            "effect {x} lies outside [{}, {}]",
            bounds.lower(),
            bounds.upper()
        )));
    }
    let (_, sd) = mean_and_sd(effects);
    if !(sd > T::zero()) {
        return Err(Error::DegenerateData("effects have zero variance".into()));
    }
    let mut sorted = effects.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite effects"));
    let iqr = sorted_quantile(&sorted, T::lit(0.75)) - sorted_quantile(&sorted, T::lit(0.25));
    let bandwidth = silverman_bandwidth(sd, iqr, effects.len());
    Prior::empirical_kde(sorted, bandwidth)
}
