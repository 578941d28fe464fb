//! Table assembly and rendering. CSV files start with a `# thicknull <name> vN`
//! line and carry full precision; text files show percentages to one decimal.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thicknull_core::analytics::{
    decile_bins, error_rate_table, normalized_rates_by_power, power_category_counts, success_by_decile,
    success_by_power, DecileBinning, NormalizedRow, RateRow, StratumRow, SweepPoint,
};
use thicknull_core::sim::{CaseResult, PowerCategory};

use crate::{CliError, Result, SCHEMA_VERSION};

/// Everything the run command reports, computed once from the case stream.
#[derive(Debug, Clone)]
pub struct Tables {
    pub labels: Vec<String>,
    pub total: u64,
    pub null_true: u64,
    pub rates: Vec<RateRow>,
    pub power: Vec<StratumRow<PowerCategory>>,
    pub category_counts: [(PowerCategory, u64); 3],
    /// Absent for runs with fewer than ten cases.
    pub deciles: Option<(DecileBinning, Vec<StratumRow<u8>>)>,
    pub normalized: Vec<NormalizedRow>,
    pub sorted_relative_mpsd: Vec<f64>,
}

impl Tables {
    pub fn compute(results: &[CaseResult], labels: &[String], jitter_seed: u64) -> Result<Self> {
        let deciles = if results.len() >= 10 {
            let bins = decile_bins(results, jitter_seed)?;
            let rows = success_by_decile(results, &bins);
            Some((bins, rows))
        } else {
            None
        };
        let mut sorted: Vec<f64> = results.iter().map(|r| r.relative_mpsd).collect();
        sorted.sort_by(f64::total_cmp);
        Ok(Self {
            labels: labels.to_vec(),
            total: results.len() as u64,
            null_true: results.iter().filter(|r| r.null_true).count() as u64,
            rates: error_rate_table(results, labels),
            power: success_by_power(results),
            category_counts: power_category_counts(results),
            deciles,
            normalized: normalized_rates_by_power(results),
            sorted_relative_mpsd: sorted,
        })
    }
}

/// A named output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

pub fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, num)
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| format!("{:.1}%", 100.0 * v))
}

fn truth(null_true: bool) -> &'static str {
    if null_true {
        "within"
    } else {
        "beyond"
    }
}

pub fn csv_artifact(name: &str, header: &[String], rows: &[Vec<String>]) -> Artifact {
    let mut bytes = format!("# thicknull {name} v{SCHEMA_VERSION}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut bytes);
        w.write_record(header).expect("in-memory csv");
        for row in rows {
            w.write_record(row).expect("in-memory csv");
        }
        w.flush().expect("in-memory csv");
    }
    Artifact { name: format!("{name}.csv"), bytes }
}

fn text_artifact(name: &str, title: &str, header: &[String], rows: &[Vec<String>]) -> Artifact {
    let mut widths: Vec<usize> = header.iter().map(String::len).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = format!("{title}\n\n");
    let line = |out: &mut String, cells: &[String]| {
        let joined: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", joined.join("  ").trim_end());
    };
    line(&mut out, header);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    line(&mut out, &rule);
    for row in rows {
        line(&mut out, row);
    }
    Artifact { name: format!("{name}.txt"), bytes: out.into_bytes() }
}

fn with_labels(lead: &[&str], labels: &[String]) -> Vec<String> {
    lead.iter().map(|s| s.to_string()).chain(labels.iter().cloned()).collect()
}

/// Success by true location and nominal power.
pub fn table1(t: &Tables) -> [Artifact; 2] {
    let header = with_labels(&["null_true", "power_category", "cases"], &t.labels);
    let rows = |f: &dyn Fn(Option<f64>) -> String, key: &dyn Fn(PowerCategory) -> String| -> Vec<Vec<String>> {
        t.power
            .iter()
            .map(|r| {
                let mut row = vec![truth(r.null_true).to_string(), key(r.stratum), r.cases.to_string()];
                row.extend(r.success.iter().map(|s| f(*s)));
                row
            })
            .collect()
    };
    [
        csv_artifact("table1_power", &header, &rows(&opt, &|c| c.key().to_string())),
        text_artifact(
            "table1_power",
            "Inference success by true location and nominal power",
            &header,
            &rows(&pct, &|c| c.label().to_string()),
        ),
    ]
}

/// Success by true location and decile of mpsd / sigma.
pub fn table2(t: &Tables) -> Option<[Artifact; 2]> {
    let (bins, rows) = t.deciles.as_ref()?;
    let header = with_labels(&["null_true", "decile", "lower", "upper", "cases"], &t.labels);
    let render = |f: &dyn Fn(Option<f64>) -> String, bound: &dyn Fn(f64) -> String| -> Vec<Vec<String>> {
        rows.iter()
            .map(|r| {
                let (lo, hi) = bins.bounds[r.stratum as usize - 1];
                let mut row = vec![truth(r.null_true).to_string(), r.stratum.to_string(), bound(lo), bound(hi), r.cases.to_string()];
                row.extend(r.success.iter().map(|s| f(*s)));
                row
            })
            .collect()
    };
    Some([
        csv_artifact("table2_decile", &header, &render(&opt, &num)),
        text_artifact(
            "table2_decile",
            "Inference success by true location and decile of mpsd / sigma",
            &header,
            &render(&pct, &|v| format!("{v:.3}")),
        ),
    ])
}

pub const RATE_NAMES: [&str; 5] = ["fpr", "fnr", "fdr", "for", "success"];

pub fn rate_value(row: &RateRow, name: &str) -> Option<f64> {
    match name {
        "fpr" => row.fpr,
        "fnr" => row.fnr,
        "fdr" => row.fdr,
        "for" => row.for_,
        "success" => row.success,
        _ => None,
    }
}

/// Count-based error rates and success over all cases.
pub fn table3(t: &Tables) -> [Artifact; 2] {
    let header = with_labels(&["rate"], &t.labels);
    let render = |f: &dyn Fn(Option<f64>) -> String| -> Vec<Vec<String>> {
        RATE_NAMES
            .iter()
            .map(|&name| std::iter::once(name.to_string()).chain(t.rates.iter().map(|r| f(rate_value(r, name)))).collect())
            .collect()
    };
    let mut csv_rows = render(&opt);
    for (name, get) in [
        ("tp", (|c| c.tp) as fn(&thicknull_core::analytics::ConfusionCounts) -> u64),
        ("fp", |c| c.fp),
        ("tn", |c| c.tn),
        ("fn", |c| c.fn_),
    ] {
        csv_rows.push(std::iter::once(name.to_string()).chain(t.rates.iter().map(|r| get(&r.counts).to_string())).collect());
    }
    [
        csv_artifact("table3_error_rates", &header, &csv_rows),
        text_artifact("table3_error_rates", "Error rates and inference success", &header, &render(&pct)),
    ]
}

/// Rate-normalized FDR and FOR by nominal power.
pub fn table4(t: &Tables) -> [Artifact; 2] {
    let header = with_labels(&["measure", "power_category", "cases"], &t.labels);
    let render = |f: &dyn Fn(Option<f64>) -> String, key: &dyn Fn(PowerCategory) -> String| -> Vec<Vec<String>> {
        let mut rows = Vec::new();
        for measure in ["nfdr", "nfor"] {
            for r in &t.normalized {
                let vals = if measure == "nfdr" { &r.nfdr } else { &r.nfor };
                let mut row = vec![measure.to_string(), key(r.category), r.cases.to_string()];
                row.extend(vals.iter().map(|v| f(*v)));
                rows.push(row);
            }
        }
        rows
    };
    [
        csv_artifact("table4_normalized", &header, &render(&opt, &|c| c.key().to_string())),
        text_artifact(
            "table4_normalized",
            "Normalized false discovery and false omission rates by nominal power",
            &header,
            &render(&pct, &|c| c.label().to_string()),
        ),
    ]
}

pub fn table_artifacts(t: &Tables) -> Vec<Artifact> {
    let mut out: Vec<Artifact> = table1(t).into();
    out.extend(table2(t).into_iter().flatten());
    out.extend(table3(t));
    out.extend(table4(t));
    out
}

pub fn raw_cases(results: &[CaseResult], labels: &[String]) -> Artifact {
    let mut header: Vec<String> = [
        "case_index", "mu", "sigma", "n", "mpsd", "mean", "sd", "null_true", "nominal_power", "relative_mpsd",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for l in labels {
        header.push(format!("{l}_reject"));
        header.push(format!("{l}_p_value"));
    }
    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| {
            let mut row = vec![
                r.spec.case_index.to_string(),
                num(r.spec.mu),
                num(r.spec.sigma),
                r.spec.n.to_string(),
                num(r.spec.mpsd),
                num(r.stats.mean()),
                num(r.stats.sd()),
                r.null_true.to_string(),
                num(r.nominal_power),
                num(r.relative_mpsd),
            ];
            for o in &r.outcomes {
                row.push(o.reject.to_string());
                row.push(opt(o.p_value));
            }
            row
        })
        .collect();
    csv_artifact("raw_cases", &header, &rows)
}

pub fn sweep_artifact(points: &[SweepPoint]) -> Artifact {
    let header: Vec<String> = ["alpha", "method", "fpr", "tpr"].iter().map(|s| s.to_string()).collect();
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| vec![num(p.alpha), p.label.clone(), opt(p.fpr), opt(p.tpr)])
        .collect();
    csv_artifact("alpha_sweep", &header, &rows)
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub schema: String,
    pub command: String,
    pub version: String,
    pub config: String,
    pub config_sha256: String,
    pub seed: u64,
    pub cases: usize,
    pub jitter_seed: u64,
    pub methods: Vec<String>,
    /// SHA-256 of every file written alongside the manifest.
    pub files: std::collections::BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(command: &str, cfg: &crate::config::RunConfig, artifacts: &[Artifact]) -> Self {
        Self {
            schema: format!("thicknull-manifest v{SCHEMA_VERSION}"),
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: cfg.config_path.as_ref().map_or_else(String::new, |p| p.display().to_string()),
            config_sha256: cfg.config_sha256.clone(),
            seed: cfg.study.scenario.seed,
            cases: cfg.study.scenario.cases,
            jitter_seed: cfg.jitter_seed,
            methods: cfg.study.labels(),
            files: artifacts.iter().map(|a| (a.name.clone(), hex::encode(Sha256::digest(&a.bytes)))).collect(),
        }
    }

    pub fn artifact(&self, name: &str) -> Artifact {
        Artifact { name: name.to_string(), bytes: toml::to_string(self).expect("manifest serializes").into_bytes() }
    }
}

pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    for a in artifacts {
        let path = dir.join(&a.name);
        std::fs::write(&path, &a.bytes).map_err(|e| CliError::io(&path, e))?;
    }
    Ok(())
}
