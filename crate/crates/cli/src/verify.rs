//! Comparison of a run against stored reference cells.
//!
//! A reference file is a CSV with columns `table,row,column,value,tolerance`.
//! Rates are in percent. Recognized tables:
//!
//! | table           | row                          | column               |
//! |-----------------|------------------------------|----------------------|
//! | `rates`         | fpr, fnr, fdr, for, success  | method label         |
//! | `power`         | `within/high`, `beyond/low`… | method label         |
//! | `decile`        | `within/1` … `beyond/10`     | method label         |
//! | `decile_bounds` | 1 … 10                       | `lower`, `upper`     |
//! | `normalized`    | `nfdr/high`, `nfor/low`…     | method label         |
//! | `share`         | high, medium, low, null_true | `cases`              |

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use crate::report::{rate_value, Tables, RATE_NAMES};
use crate::{read_text, CliError, Result};

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ReferenceCell {
    pub table: String,
    pub row: String,
    pub column: String,
    pub value: f64,
    pub tolerance: f64,
}

pub type CellKey = (String, String, String);

/// An observed value plus the sampling tolerance used by [`Widening::Binomial`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observed {
    pub value: f64,
    pub sampling_tolerance: f64,
}

/// How reference tolerances are adapted to the run size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Widening {
    /// Stored tolerances as they are.
    #[default]
    None,
    /// `max(stored, 4 * sqrt(0.25 / n))` for a proportion over `n` cases, with
    /// the same four-standard-error rule propagated to derived cells.
    Binomial,
}

pub fn parse_reference(text: &str) -> Result<Vec<ReferenceCell>> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let cells = reader
        .deserialize()
        .collect::<std::result::Result<Vec<ReferenceCell>, _>>()
        .map_err(|e| CliError::Input(format!("reference file: {e}")))?;
    if let Some(c) = cells.iter().find(|c| !(c.tolerance >= 0.0) || !c.value.is_finite()) {
        return Err(CliError::Input(format!("reference cell {}/{}/{} has a bad value or tolerance", c.table, c.row, c.column)));
    }
    Ok(cells)
}

pub fn read_reference(path: &Path) -> Result<Vec<ReferenceCell>> {
    parse_reference(&read_text(path)?)
}

/// Four binomial standard errors at the worst case p = 1/2, in percent.
fn binomial_pp(n: u64) -> f64 {
    if n == 0 {
        f64::INFINITY
    } else {
        400.0 * (0.25 / n as f64).sqrt()
    }
}

fn key(t: &str, r: impl Into<String>, c: impl Into<String>) -> CellKey {
    (t.to_string(), r.into(), c.into())
}

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let idx = (p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64).round() as usize;
    sorted[idx]
}

/// Every cell the run can be compared on.
pub fn observed_cells(t: &Tables) -> BTreeMap<CellKey, Observed> {
    let mut out = BTreeMap::new();
    let mut put = |k: CellKey, value: Option<f64>, tol: f64| {
        if let Some(v) = value {
            out.insert(k, Observed { value: v, sampling_tolerance: tol });
        }
    };
    for (m, row) in t.rates.iter().enumerate() {
        let c = row.counts;
        let dens = [c.fp + c.tn, c.fn_ + c.tp, c.fp + c.tp, c.fn_ + c.tn, c.total()];
        for (name, den) in RATE_NAMES.iter().zip(dens) {
            put(key("rates", *name, &t.labels[m]), rate_value(row, name).map(|v| 100.0 * v), binomial_pp(den));
        }
    }
    let truth = |b: bool| if b { "within" } else { "beyond" };
    for r in &t.power {
        for (m, s) in r.success.iter().enumerate() {
            let row = format!("{}/{}", truth(r.null_true), r.stratum.key());
            put(key("power", row, &t.labels[m]), s.map(|v| 100.0 * v), binomial_pp(r.cases));
        }
    }
    for (cat, n) in t.category_counts {
        put(key("share", cat.key(), "cases"), Some(100.0 * n as f64 / t.total as f64), binomial_pp(t.total));
    }
    put(key("share", "null_true", "cases"), Some(100.0 * t.null_true as f64 / t.total as f64), binomial_pp(t.total));
    if let Some((bins, rows)) = &t.deciles {
        for r in rows {
            for (m, s) in r.success.iter().enumerate() {
                let row = format!("{}/{}", truth(r.null_true), r.stratum);
                put(key("decile", row, &t.labels[m]), s.map(|v| 100.0 * v), binomial_pp(r.cases));
            }
        }
        let sorted = &t.sorted_relative_mpsd;
        let spread = |p: f64| {
            let d = 4.0 * (p * (1.0 - p)).max(0.25 / sorted.len() as f64).sqrt() / (sorted.len() as f64).sqrt();
            let q = quantile_sorted(sorted, p);
            (quantile_sorted(sorted, p + d) - q).max(q - quantile_sorted(sorted, p - d))
        };
        for (i, (lo, hi)) in bins.bounds.iter().enumerate() {
            put(key("decile_bounds", (i + 1).to_string(), "lower"), Some(*lo), spread(i as f64 / 10.0));
            put(key("decile_bounds", (i + 1).to_string(), "upper"), Some(*hi), spread((i + 1) as f64 / 10.0));
        }
    }
    for r in &t.normalized {
        let count = |null_true: bool| {
            t.power.iter().find(|p| p.null_true == null_true && p.stratum == r.category).map_or(0, |p| p.cases)
        };
        let (n0, n1) = (count(true), count(false));
        for m in 0..t.labels.len() {
            let success = |null_true: bool| {
                t.power
                    .iter()
                    .find(|p| p.null_true == null_true && p.stratum == r.category)
                    .and_then(|p| p.success[m])
            };
            // nFDR = a / (a + b) with a = fpr over n0 nulls, b = tpr over n1 alternatives;
            // nFOR has a = fnr over n1, b = tnr over n0.
            let propagate = |a: f64, na: u64, b: f64, nb: u64| {
                let s = (a + b).powi(2);
                ((b / s * binomial_pp(na)).powi(2) + (a / s * binomial_pp(nb)).powi(2)).sqrt()
            };
            let (tnr, tpr) = (success(true), success(false));
            let tol_fdr = match (tnr, tpr) {
                (Some(tnr), Some(tpr)) => propagate(1.0 - tnr, n0, tpr, n1),
                _ => f64::INFINITY,
            };
            let tol_for = match (tnr, tpr) {
                (Some(tnr), Some(tpr)) => propagate(1.0 - tpr, n1, tnr, n0),
                _ => f64::INFINITY,
            };
            let cat = r.category.key();
            put(key("normalized", format!("nfdr/{cat}"), &t.labels[m]), r.nfdr[m].map(|v| 100.0 * v), tol_fdr);
            put(key("normalized", format!("nfor/{cat}"), &t.labels[m]), r.nfor[m].map(|v| 100.0 * v), tol_for);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellOutcome {
    pub reference: ReferenceCell,
    pub observed: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub cells: Vec<CellOutcome>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.cells.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CellOutcome> {
        self.cells.iter().filter(|c| !c.pass)
    }

    /// Restricts the report to the given tables.
    pub fn only(&self, tables: &[&str]) -> VerifyReport {
        VerifyReport { cells: self.cells.iter().filter(|c| tables.contains(&c.reference.table.as_str())).cloned().collect() }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.cells {
            let r = &c.reference;
            let got = c.observed.map_or_else(|| "missing".to_string(), |v| format!("{v:.4}"));
            let diff = c.observed.map_or_else(String::new, |v| format!("{:+.4}", v - r.value));
            let _ = writeln!(
                out,
                "{} {}/{}/{} expected {} got {} diff {} tol {:.4}",
                if c.pass { "ok  " } else { "FAIL" },
                r.table,
                r.row,
                r.column,
                r.value,
                got,
                diff,
                c.tolerance
            );
        }
        let failed = self.failures().count();
        let _ = writeln!(out, "{} cells, {} failed", self.cells.len(), failed);
        out
    }
}

pub fn compare(reference: &[ReferenceCell], observed: &BTreeMap<CellKey, Observed>, widening: Widening) -> VerifyReport {
    let cells = reference
        .iter()
        .map(|r| {
            let obs = observed.get(&(r.table.clone(), r.row.clone(), r.column.clone()));
            let tolerance = match (widening, obs) {
                (Widening::Binomial, Some(o)) => r.tolerance.max(o.sampling_tolerance),
                _ => r.tolerance,
            };
            // a small slack keeps decimal reference values from failing on representation error
            let pass = obs.is_some_and(|o| (o.value - r.value).abs() <= tolerance + 1e-9);
            CellOutcome { reference: r.clone(), observed: obs.map(|o| o.value), tolerance, pass }
        })
        .collect();
    VerifyReport { cells }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(value: f64, tolerance: f64) -> ReferenceCell {
        ReferenceCell { table: "rates".into(), row: "fpr".into(), column: "m".into(), value, tolerance }
    }

    #[test]
    fn tolerance_and_missing_cells() {
        let mut observed = BTreeMap::new();
        observed.insert(key("rates", "fpr", "m"), Observed { value: 10.0, sampling_tolerance: 5.0 });
        let report = compare(&[cell(10.9, 1.0), cell(12.0, 1.0)], &observed, Widening::None);
        assert_eq!(report.cells.iter().map(|c| c.pass).collect::<Vec<_>>(), [true, false]);
        assert!(compare(&[cell(12.0, 1.0)], &observed, Widening::Binomial).passed());
        let missing = ReferenceCell { column: "other".into(), ..cell(10.0, 1.0) };
        let report = compare(&[missing], &observed, Widening::Binomial);
        assert!(!report.passed());
        assert!(report.render().contains("got missing"));
    }

    #[test]
    fn reference_parsing() {
        let cells = parse_reference("# note\ntable,row,column,value,tolerance\nrates,fpr,m,1.5,0.5\n").unwrap();
        assert_eq!(cells, [cell(1.5, 0.5)]);
        assert!(parse_reference("table,row,column,value,tolerance\nrates,fpr,m,1.5,-1\n").is_err());
    }
}
