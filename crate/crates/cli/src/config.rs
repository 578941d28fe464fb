//! TOML run configuration. See `configs/` in the repository for complete
//! examples; every section except `[scenario].seed` has defaults matching the
//! integer-uniform main design.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};
use thicknull_core::analytics::default_alpha_grid;
use thicknull_core::decisions::{DecisionConfig, Method, ThickVariant};
use thicknull_core::numerics::{QuadratureRule, QuadratureSpec};
use thicknull_core::priors::{fit_kde, Prior, ThickNull};
use thicknull_core::sim::{IntRange, MethodSpec, MuLaw, ScenarioConfig, Study};

use crate::effects::PriorFile;
use crate::{read_text, CliError, Result};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub decision: DecisionSection,
    #[serde(default)]
    pub quadrature: QuadratureSection,
    /// Prior of `thick_t` methods that do not name their own.
    #[serde(default = "default_thick_prior")]
    pub thick_prior: PriorSelector,
    /// Absent means the six standard methods.
    pub methods: Option<Vec<MethodEntry>>,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub seed: u64,
    #[serde(default = "default_cases")]
    pub cases: usize,
    #[serde(default = "default_mu0")]
    pub mu0: f64,
    #[serde(default = "default_mu_law")]
    pub mu: MuSelector,
    #[serde(default = "default_sigma")]
    pub sigma: [i64; 2],
    #[serde(default = "default_n")]
    pub n: [i64; 2],
    #[serde(default = "default_mpsd")]
    pub mpsd: [i64; 2],
    #[serde(default = "default_power_alpha")]
    pub power_alpha: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum MuSelector {
    IntegerUniform { lo: i64, hi: i64 },
    Normal { mean: f64, sd: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecisionSection {
    pub alpha_conventional: f64,
    pub alpha_small: f64,
    pub alpha_thick: f64,
    pub ci_level: f64,
}

impl Default for DecisionSection {
    fn default() -> Self {
        Self { alpha_conventional: 0.05, alpha_small: 0.005, alpha_thick: 0.05, ci_level: 0.95 }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum RuleName {
    GaussLegendre,
    AdaptiveSimpson,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSection {
    pub rule: RuleName,
    pub nodes: usize,
    pub abs_tol: f64,
}

impl Default for QuadratureSection {
    fn default() -> Self {
        Self { rule: RuleName::GaussLegendre, nodes: 64, abs_tol: 1e-10 }
    }
}

/// Prior on `mu` under the thick null. Locations are on the scale of `mu`.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorSelector {
    PointMass {
        location: f64,
    },
    DiscreteUniform {
        #[serde(default = "one")]
        step: f64,
    },
    ContinuousUniform,
    TruncatedNormal {
        location: f64,
        scale: f64,
    },
    /// Bandwidth defaults to Silverman's rule on `sample`.
    Kde {
        sample: Vec<f64>,
        bandwidth: Option<f64>,
    },
    NearestEdge,
    /// A file written by `fit-prior`, relative to the config file.
    Fitted {
        path: PathBuf,
        model: FittedModel,
    },
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum FittedModel {
    TruncatedNormal,
    Kde,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    Conventional,
    SmallAlpha,
    Mesp,
    DistanceOnly,
    Interval,
    ThickT,
    ThickTSupremum,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodEntry {
    pub kind: MethodName,
    pub label: Option<String>,
    pub prior: Option<PriorSelector>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub emit_raw_cases: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("thicknull-out"), emit_raw_cases: false }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    /// Worker threads; absent means one per core. Results do not depend on it.
    pub workers: Option<usize>,
    pub jitter_seed: u64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub alphas: Option<Vec<f64>>,
    /// Even grid `0, step, ..., 1`; ignored when `alphas` is given.
    pub step: Option<f64>,
}

fn one() -> f64 {
    1.0
}
fn default_cases() -> usize {
    100_000
}
fn default_mu0() -> f64 {
    100.0
}
fn default_mu_law() -> MuSelector {
    MuSelector::IntegerUniform { lo: 75, hi: 125 }
}
fn default_sigma() -> [i64; 2] {
    [4, 60]
}
fn default_n() -> [i64; 2] {
    [5, 100]
}
fn default_mpsd() -> [i64; 2] {
    [2, 20]
}
fn default_power_alpha() -> f64 {
    0.05
}
fn default_thick_prior() -> PriorSelector {
    PriorSelector::DiscreteUniform { step: 1.0 }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub cases: Option<usize>,
    pub output: Option<PathBuf>,
    pub workers: Option<usize>,
}

/// A validated configuration, ready to run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub study: Study,
    pub output_dir: PathBuf,
    pub emit_raw_cases: bool,
    pub workers: Option<usize>,
    pub jitter_seed: u64,
    pub alphas: Vec<f64>,
    pub config_path: Option<PathBuf>,
    /// Hex SHA-256 of the config file bytes.
    pub config_sha256: String,
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = read_text(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut cfg = Self::parse(&text, base, overrides)?;
        cfg.config_path = Some(path.to_path_buf());
        Ok(cfg)
    }

    /// Parses config text; relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path, overrides: &Overrides) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let mut cfg = raw.build(base)?;
        cfg.config_sha256 = hex::encode(Sha256::digest(text.as_bytes()));
        if let Some(seed) = overrides.seed {
            cfg.study.scenario.seed = seed;
        }
        if let Some(cases) = overrides.cases {
            if cases == 0 {
                return Err(CliError::Config("--cases must be at least 1".into()));
            }
            cfg.study.scenario.cases = cases;
        }
        if let Some(dir) = &overrides.output {
            cfg.output_dir = dir.clone();
        }
        if overrides.workers.is_some() {
            cfg.workers = overrides.workers;
        }
        Ok(cfg)
    }
}

fn range(name: &str, r: [i64; 2]) -> Result<IntRange> {
    if r[0] > r[1] {
        return Err(CliError::Config(format!("scenario.{name} = [{}, {}] is empty", r[0], r[1])));
    }
    Ok(IntRange::new(r[0], r[1]))
}

impl RawConfig {
    fn build(self, base: &Path) -> Result<RunConfig> {
        let s = &self.scenario;
        let scenario = ScenarioConfig {
            mu0: s.mu0,
            mu_law: match s.mu {
                MuSelector::IntegerUniform { lo, hi } => MuLaw::IntegerUniform(range("mu", [lo, hi])?),
                MuSelector::Normal { mean, sd } => MuLaw::Normal { mean, sd },
            },
            sigma_range: range("sigma", s.sigma)?,
            n_range: range("n", s.n)?,
            mpsd_range: range("mpsd", s.mpsd)?,
            cases: s.cases,
            seed: s.seed,
            power_alpha: s.power_alpha,
        };
        let d = &self.decision;
        let decision = DecisionConfig::new(d.alpha_conventional, d.alpha_small, d.alpha_thick, d.ci_level)?;
        let q = &self.quadrature;
        let rule = match q.rule {
            RuleName::GaussLegendre => QuadratureRule::GaussLegendre,
            RuleName::AdaptiveSimpson => QuadratureRule::AdaptiveSimpson,
        };
        let quadrature = QuadratureSpec::new(rule, q.nodes, q.abs_tol)?;
        let default_prior = self.thick_prior.resolve(base)?;
        let methods = match &self.methods {
            None => MethodSpec::standard_set(default_prior),
            Some(entries) if entries.is_empty() => return Err(CliError::Config("methods list is empty".into())),
            Some(entries) => entries
                .iter()
                .map(|e| e.build(&default_prior, base))
                .collect::<Result<Vec<_>>>()?,
        };
        let mut labels: Vec<&str> = methods.iter().map(|m| m.label.as_str()).collect();
        labels.sort_unstable();
        if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
            return Err(CliError::Config(format!("duplicate method label {:?}", w[0])));
        }
        let alphas = match (&self.sweep.alphas, self.sweep.step) {
            (Some(a), _) => a.clone(),
            (None, Some(step)) if step > 0.0 && step <= 1.0 => {
                let k = (1.0 / step).round() as usize;
                (0..=k).map(|i| (i as f64 * step).min(1.0)).collect()
            }
            (None, Some(step)) => return Err(CliError::Config(format!("sweep.step must lie in (0, 1], got {step}"))),
            (None, None) => default_alpha_grid(),
        };
        if let Some(a) = alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(CliError::Config(format!("sweep alpha {a} outside [0, 1]")));
        }
        if self.run.workers == Some(0) {
            return Err(CliError::Config("run.workers must be at least 1".into()));
        }
        Ok(RunConfig {
            study: Study::new(scenario, methods, decision, quadrature)?,
            output_dir: base.join(&self.output.dir),
            emit_raw_cases: self.output.emit_raw_cases,
            workers: self.run.workers,
            jitter_seed: self.run.jitter_seed,
            alphas,
            config_path: None,
            config_sha256: String::new(),
        })
    }
}

impl MethodEntry {
    fn build(&self, default_prior: &Prior<f64>, base: &Path) -> Result<MethodSpec> {
        let method = match self.kind {
            MethodName::Conventional => Method::Conventional,
            MethodName::SmallAlpha => Method::SmallAlpha,
            MethodName::Mesp => Method::Mesp,
            MethodName::DistanceOnly => Method::DistanceOnly,
            MethodName::Interval => Method::IntervalBased,
            MethodName::ThickT => {
                let prior = match &self.prior {
                    Some(sel) => sel.resolve(base)?,
                    None => default_prior.clone(),
                };
                Method::ThickT(ThickVariant::Prior(prior))
            }
            MethodName::ThickTSupremum => Method::ThickT(ThickVariant::Supremum),
        };
        if self.prior.is_some() && self.kind != MethodName::ThickT {
            return Err(CliError::Config(format!("method {:?} does not take a prior", self.kind)));
        }
        let label = match (&self.label, self.kind) {
            (Some(l), _) => l.clone(),
            (None, MethodName::ThickTSupremum) => "thick_t_supremum".into(),
            (None, _) => method.kind().label().to_string(),
        };
        if label.is_empty() || label.contains([',', '"', '\n']) {
            return Err(CliError::Config(format!("method label {label:?} must be nonempty without commas or quotes")));
        }
        Ok(MethodSpec::new(label, method))
    }
}

impl PriorSelector {
    pub fn resolve(&self, base: &Path) -> Result<Prior<f64>> {
        Ok(match self {
            PriorSelector::PointMass { location } => Prior::point_mass(*location)?,
            PriorSelector::DiscreteUniform { step } => Prior::discrete_uniform(*step)?,
            PriorSelector::ContinuousUniform => Prior::ContinuousUniform,
            PriorSelector::TruncatedNormal { location, scale } => Prior::truncated_normal(*location, *scale)?,
            PriorSelector::Kde { sample, bandwidth: Some(h) } => Prior::empirical_kde(sample.clone(), *h)?,
            PriorSelector::Kde { sample, bandwidth: None } => {
                let (lo, hi) = sample.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
                if !(lo <= hi) {
                    return Err(CliError::Config("kde prior needs a nonempty sample".into()));
                }
                fit_kde(sample, &ThickNull::from_interval(lo, hi)?)?
            }
            PriorSelector::NearestEdge => Prior::NearestEdge,
            PriorSelector::Fitted { path, model } => PriorFile::load(&base.join(path))?.prior(*model)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_is_the_main_design() {
        let cfg = RunConfig::parse("[scenario]\nseed = 9\n", Path::new("/base"), &Overrides::default()).unwrap();
        assert_eq!(cfg.study.scenario, ScenarioConfig::main(9));
        assert_eq!(cfg.study.labels(), ["conventional", "small_alpha", "mesp", "distance_only", "interval", "thick_t"]);
        assert_eq!(cfg.output_dir, Path::new("/base/thicknull-out"));
        assert_eq!(cfg.alphas.len(), 101);
        assert_eq!(cfg.config_sha256.len(), 64);
    }

    #[test]
    fn overrides_win() {
        let o = Overrides { seed: Some(3), cases: Some(10), output: Some("/x".into()), workers: Some(2) };
        let cfg = RunConfig::parse("[scenario]\nseed = 9\n", Path::new("."), &o).unwrap();
        assert_eq!((cfg.study.scenario.seed, cfg.study.scenario.cases), (3, 10));
        assert_eq!((cfg.output_dir.as_path(), cfg.workers), (Path::new("/x"), Some(2)));
    }

    #[test]
    fn method_entries() {
        let text = "thick_prior = { kind = \"continuous_uniform\" }\n[scenario]\nseed = 1\n\
                    [[methods]]\nkind = \"thick_t\"\n[[methods]]\nkind = \"thick_t_supremum\"\n\
                    [[methods]]\nkind = \"thick_t\"\nlabel = \"edge\"\nprior = { kind = \"nearest_edge\" }\n";
        let cfg = RunConfig::parse(text, Path::new("."), &Overrides::default()).unwrap();
        let m = &cfg.study.methods;
        assert_eq!(cfg.study.labels(), ["thick_t", "thick_t_supremum", "edge"]);
        assert_eq!(m[0].method, Method::ThickT(ThickVariant::Prior(Prior::ContinuousUniform)));
        assert_eq!(m[1].method, Method::ThickT(ThickVariant::Supremum));
        assert_eq!(m[2].method, Method::ThickT(ThickVariant::Prior(Prior::NearestEdge)));
    }

    #[test]
    fn invalid_configs() {
        let bad = [
            "[scenario]\n",
            "[scenario]\nseed = 1\n[decision]\nalpha_thick = 1.5\n",
            "[scenario]\nseed = 1\n[[methods]]\nkind = \"mesp\"\nprior = { kind = \"continuous_uniform\" }\n",
            "[scenario]\nseed = 1\n[[methods]]\nkind = \"mesp\"\n[[methods]]\nkind = \"mesp\"\n",
            "[scenario]\nseed = 1\n[sweep]\nalphas = [0.5, 2.0]\n",
            "[scenario]\nseed = 1\n[quadrature]\nnodes = 1\n",
        ];
        for text in bad {
            let err = RunConfig::parse(text, Path::new("."), &Overrides::default()).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{text}");
        }
    }
}
