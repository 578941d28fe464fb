//! Effect-size ingestion and the prior description written by `fit-prior`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thicknull_core::priors::{fit_kde, fit_truncated_normal, Prior, ThickNull};

use crate::config::FittedModel;
use crate::{read_text, CliError, Result, SCHEMA_VERSION};

/// Parses a single-column effect-size file. A non-numeric first line is taken
/// as a header; blank lines are skipped.
pub fn parse_effects(text: &str) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Input(format!("effect file: {e}")))?;
        let line = record.position().map_or(i as u64 + 1, |p| p.line());
        let fields: Vec<&str> = record.iter().filter(|f| !f.is_empty()).collect();
        match fields.as_slice() {
            [] => continue,
            [field] => match field.parse::<f64>() {
                Ok(v) if v.is_finite() => out.push(v),
                Ok(v) => return Err(CliError::Input(format!("effect file line {line}: non-finite value {v}"))),
                Err(_) if i == 0 => continue,
                Err(_) => return Err(CliError::Input(format!("effect file line {line}: cannot parse {field:?}"))),
            },
            _ => return Err(CliError::Input(format!("effect file line {line}: expected one value per record"))),
        }
    }
    Ok(out)
}

pub fn read_effects(path: &Path) -> Result<Vec<f64>> {
    parse_effects(&read_text(path)?)
}

/// Keeps the values strictly inside `(lo, hi)`.
pub fn filter_open(effects: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    effects.iter().copied().filter(|&d| lo < d && d < hi).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedNormalFit {
    pub location: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeFit {
    pub bandwidth: f64,
    pub sample: Vec<f64>,
}

/// Output of `fit-prior`. The fitted shapes are truncated to whatever null
/// interval they are later mixed against, so they are only meaningful on the
/// scale of the effect file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorFile {
    pub schema: String,
    pub source: String,
    pub records: usize,
    pub retained: usize,
    pub lower: f64,
    pub upper: f64,
    pub truncated_normal: TruncatedNormalFit,
    pub kde: KdeFit,
}

impl PriorFile {
    pub fn fit(source: &str, effects: &[f64], lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(CliError::Config(format!("bounds must satisfy lower < upper, got ({lo}, {hi})")));
        }
        let kept = filter_open(effects, lo, hi);
        let bounds = ThickNull::from_interval(lo, hi)?;
        let tn = fit_truncated_normal(&kept, &bounds).map_err(|e| {
            CliError::Input(format!("{e}; {} of {} records lie within ({lo}, {hi})", kept.len(), effects.len()))
        })?;
        let kde = fit_kde(&kept, &bounds)?;
        let (Prior::TruncatedNormal { location, scale }, Prior::EmpiricalKde { sample, bandwidth }) = (tn, kde) else {
            unreachable!("fitters return their own variants")
        };
        Ok(Self {
            schema: format!("thicknull-prior v{SCHEMA_VERSION}"),
            source: source.to_string(),
            records: effects.len(),
            retained: kept.len(),
            lower: lo,
            upper: hi,
            truncated_normal: TruncatedNormalFit { location, scale },
            kde: KdeFit { bandwidth, sample: sample.to_vec() },
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("prior file serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        toml::from_str(&read_text(path)?).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn bounds(&self) -> Result<ThickNull<f64>> {
        Ok(ThickNull::from_interval(self.lower, self.upper)?)
    }

    pub fn prior(&self, model: FittedModel) -> Result<Prior<f64>> {
        Ok(match model {
            FittedModel::TruncatedNormal => Prior::truncated_normal(self.truncated_normal.location, self.truncated_normal.scale)?,
            FittedModel::Kde => Prior::empirical_kde(self.kde.sample.clone(), self.kde.bandwidth)?,
        })
    }
}
