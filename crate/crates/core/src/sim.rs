//! Seeded Monte Carlo engine.
//!
//! Every case draws from its own ChaCha8 stream keyed by `(seed, case_index)`,
//! so results do not depend on scheduling or worker count.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;

use crate::decisions::{DecisionConfig, Method, MethodKind, SampleStats, ThickVariant};
use crate::numerics::{normal_cdf, normal_quantile, Integrator, Probability, QuadratureSpec};
use crate::priors::{Prior, ThickNull};
use crate::{Error, Result};

/// Inclusive integer range `{lo, ..., hi}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntRange {
    pub lo: i64,
    pub hi: i64,
}

impl IntRange {
    pub const fn new(lo: i64, hi: i64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, v: i64) -> bool {
        (self.lo..=self.hi).contains(&v)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        rng.random_range(self.lo..=self.hi)
    }
}

/// Sampling law of the true mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuLaw {
    IntegerUniform(IntRange),
    /// Continuous draw; values are not rounded.
    Normal { mean: f64, sd: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub mu0: f64,
    pub mu_law: MuLaw,
    pub sigma_range: IntRange,
    pub n_range: IntRange,
    pub mpsd_range: IntRange,
    pub cases: usize,
    pub seed: u64,
    /// Level of the z-test behind nominal power.
    pub power_alpha: f64,
}

impl ScenarioConfig {
    /// The integer-uniform design: mu in {75..125}, sigma in {4..60}, n in {5..100}, mpsd in {2..20}.
    pub fn main(seed: u64) -> Self {
        Self {
            mu0: 100.0,
            mu_law: MuLaw::IntegerUniform(IntRange::new(75, 125)),
            sigma_range: IntRange::new(4, 60),
            n_range: IntRange::new(5, 100),
            mpsd_range: IntRange::new(2, 20),
            cases: 100_000,
            seed,
            power_alpha: 0.05,
        }
    }

    /// Same design with `mu ~ N(mu0, 50/sqrt(12))`, the sd of a continuous uniform on [75, 125].
    pub fn normal_mu(seed: u64) -> Self {
        Self { mu_law: MuLaw::Normal { mean: 100.0, sd: 50.0 / 12f64.sqrt() }, ..Self::main(seed) }
    }

    pub fn validate(&self) -> Result<()> {
        let ranges = [("sigma", self.sigma_range), ("n", self.n_range), ("mpsd", self.mpsd_range)];
        for (name, r) in ranges {
            if r.lo > r.hi {
                return Err(Error::domain(format!("{name} range is empty: [{}, {}]", r.lo, r.hi)));
            }
        }
        if self.sigma_range.lo <= 0 {
            return Err(Error::domain("sigma range must be positive"));
        }
        if self.n_range.lo < 2 {
            return Err(Error::domain("sample sizes must be at least 2"));
        }
        if self.mpsd_range.lo < 0 {
            return Err(Error::domain("mpsd range must be nonnegative"));
        }
        match self.mu_law {
            MuLaw::IntegerUniform(r) if r.lo > r.hi => {
                return Err(Error::domain(format!("mu range is empty: [{}, {}]", r.lo, r.hi)))
            }
            MuLaw::Normal { mean, sd } if !mean.is_finite() || !(sd > 0.0) => {
                return Err(Error::domain("normal mu law needs finite mean and sd > 0"))
            }
            _ => {}
        }
        if self.cases == 0 {
            return Err(Error::domain("cases must be >= 1"));
        }
        if !(self.power_alpha > 0.0 && self.power_alpha < 1.0) || !self.mu0.is_finite() {
            return Err(Error::domain("power_alpha must lie in (0, 1) and mu0 must be finite"));
        }
        Ok(())
    }
}

/// One simulated study `(mu, sigma, n, mpsd)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseSpec {
    pub mu: f64,
    pub sigma: f64,
    pub n: usize,
    pub mpsd: f64,
    pub case_index: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodOutcome {
    pub reject: bool,
    pub p_value: Option<f64>,
    /// Set when the sample was degenerate (zero sd) and the method retained by default.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseResult {
    pub spec: CaseSpec,
    pub null: ThickNull<f64>,
    /// `|mu - mu0| <= mpsd`.
    pub null_true: bool,
    pub stats: SampleStats<f64>,
    pub nominal_power: f64,
    /// `mpsd / sigma`.
    pub relative_mpsd: f64,
    /// One entry per configured method, in configuration order.
    pub outcomes: Vec<MethodOutcome>,
}

/// A decision rule under a display label.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSpec {
    pub label: String,
    pub method: Method<f64>,
}

impl MethodSpec {
    pub fn new(label: impl Into<String>, method: Method<f64>) -> Self {
        Self { label: label.into(), method }
    }

    /// The six rules with default labels; the thick t-test uses `thick_prior`.
    pub fn standard_set(thick_prior: Prior<f64>) -> Vec<MethodSpec> {
        vec![
            MethodSpec::new(MethodKind::Conventional.label(), Method::Conventional),
            MethodSpec::new(MethodKind::SmallAlpha.label(), Method::SmallAlpha),
            MethodSpec::new(MethodKind::Mesp.label(), Method::Mesp),
            MethodSpec::new(MethodKind::DistanceOnly.label(), Method::DistanceOnly),
            MethodSpec::new(MethodKind::IntervalBased.label(), Method::IntervalBased),
            MethodSpec::new(MethodKind::ThickT.label(), Method::ThickT(ThickVariant::Prior(thick_prior))),
        ]
    }
}

/// Everything needed to run a scenario.
#[derive(Debug, Clone)]
pub struct Study {
    pub scenario: ScenarioConfig,
    pub methods: Vec<MethodSpec>,
    pub decision: DecisionConfig<f64>,
    integrator: Integrator<f64>,
}

impl Study {
    pub fn new(
        scenario: ScenarioConfig,
        methods: Vec<MethodSpec>,
        decision: DecisionConfig<f64>,
        quadrature: QuadratureSpec<f64>,
    ) -> Result<Self> {
        scenario.validate()?;
        if methods.is_empty() {
            return Err(Error::domain("method list is empty"));
        }
        Ok(Self { scenario, methods, decision, integrator: Integrator::new(quadrature)? })
    }

    pub fn integrator(&self) -> &Integrator<f64> {
        &self.integrator
    }

    pub fn labels(&self) -> Vec<String> {
        self.methods.iter().map(|m| m.label.clone()).collect()
    }
}

/// The random stream of one case.
pub fn case_rng(seed: u64, case_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(case_index);
    rng
}

/// Two-sided one-sample z-test power against a shift of `mpsd`.
pub fn nominal_power(sigma: f64, n: usize, mpsd: f64, alpha: f64) -> Result<Probability<f64>> {
    if !(sigma > 0.0) || !(mpsd > 0.0) || n == 0 {
        return Err(Error::domain(format!("nominal power needs sigma > 0, mpsd > 0, n >= 1; got {sigma}, {mpsd}, {n}")));
    }
    let alpha = Probability::new(alpha)?;
    let delta = mpsd * (n as f64).sqrt() / sigma;
    let z = normal_quantile(Probability::new(1.0 - alpha.get() / 2.0)?)?;
    Probability::saturating(normal_cdf(delta - z)?.get() + normal_cdf(-delta - z)?.get())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PowerCategory {
    High,
    Medium,
    Low,
}

impl PowerCategory {
    pub const ALL: [PowerCategory; 3] = [PowerCategory::High, PowerCategory::Medium, PowerCategory::Low];

    pub fn label(self) -> &'static str {
        match self {
            PowerCategory::High => ">= 0.80",
            PowerCategory::Medium => "0.30 to 0.80",
            PowerCategory::Low => "< 0.30",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            PowerCategory::High => "high",
            PowerCategory::Medium => "medium",
            PowerCategory::Low => "low",
        }
    }
}

/// High for `>= 0.80`, Medium for `[0.30, 0.80)`, Low below.
pub fn power_category(power: f64) -> PowerCategory {
    if power >= 0.80 {
        PowerCategory::High
    } else if power >= 0.30 {
        PowerCategory::Medium
    } else {
        PowerCategory::Low
    }
}

/// Draws `(mu, sigma, n, mpsd)` in that order, each independently.
pub fn sample_case<R: Rng + ?Sized>(rng: &mut R, cfg: &ScenarioConfig, case_index: u64) -> CaseSpec {
    let mu = match cfg.mu_law {
        MuLaw::IntegerUniform(r) => r.sample(rng) as f64,
        MuLaw::Normal { mean, sd } => Normal::new(mean, sd).expect("validated normal law").sample(rng),
    };
    let sigma = cfg.sigma_range.sample(rng) as f64;
    let n = cfg.n_range.sample(rng) as usize;
    let mpsd = cfg.mpsd_range.sample(rng) as f64;
    CaseSpec { mu, sigma, n, mpsd, case_index }
}

/// Generates the sample of `spec` from `rng` and evaluates every method on it.
pub fn run_case<R: Rng + ?Sized>(rng: &mut R, spec: CaseSpec, study: &Study) -> Result<CaseResult> {
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..spec.n {
        let z: f64 = StandardNormal.sample(rng);
        let x = spec.mu + spec.sigma * z;
        let delta = x - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (x - mean);
    }
    let sd = (m2.max(0.0) / (spec.n - 1) as f64).sqrt();
    let stats = SampleStats::new(spec.n, mean, sd)?;
    let null = ThickNull::new(study.scenario.mu0, spec.mpsd)?;
    let outcomes = evaluate_methods(&stats, &null, study)?;
    let nominal_power = if spec.mpsd > 0.0 {
        nominal_power(spec.sigma, spec.n, spec.mpsd, study.scenario.power_alpha)?.get()
    } else {
        study.scenario.power_alpha
    };
    Ok(CaseResult {
        spec,
        null,
        null_true: null.contains(spec.mu),
        stats,
        nominal_power,
        relative_mpsd: spec.mpsd / spec.sigma,
        outcomes,
    })
}

/// Evaluates every configured method. A zero-sd sample makes each
/// sd-dependent method retain, with the outcome flagged.
pub fn evaluate_methods(stats: &SampleStats<f64>, null: &ThickNull<f64>, study: &Study) -> Result<Vec<MethodOutcome>> {
    study
        .methods
        .iter()
        .map(|m| match m.method.evaluate(stats, null, &study.decision, &study.integrator) {
            Ok(v) => Ok(MethodOutcome { reject: v.reject, p_value: v.p_value.map(|p| p.get()), flagged: false }),
            Err(Error::DegenerateSample(_)) => Ok(MethodOutcome { reject: false, p_value: None, flagged: true }),
            Err(e) => Err(e),
        })
        .collect()
}

/// Draws and evaluates the case with the given index.
pub fn simulate_case(study: &Study, case_index: u64) -> Result<CaseResult> {
    let mut rng = case_rng(study.scenario.seed, case_index);
    let spec = sample_case(&mut rng, &study.scenario, case_index);
    run_case(&mut rng, spec, study)
}

/// Runs all cases, ordered by case index. `workers = None` uses rayon's global pool.
pub fn run_study(study: &Study, workers: Option<usize>) -> Result<Vec<CaseResult>> {
    let job = || (0..study.scenario.cases as u64).into_par_iter().map(|i| simulate_case(study, i)).collect();
    match workers {
        None => job(),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::domain(format!("cannot build worker pool: {e}")))?
            .install(job),
    }
}
