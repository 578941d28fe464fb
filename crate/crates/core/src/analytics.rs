//! Aggregation of simulated cases into confusion counts, stratified success
//! tables, normalized FDR/FOR and threshold sweeps.
//!
//! Positive means "reject the thick null". Ratios with a zero denominator are
//! `None`, never 0 or 1.

use std::collections::HashMap;
use std::ops::{Add, AddAssign};

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::decisions::{decide_distance, interval_quantile, interval_rejects, Method};
use crate::sim::{case_rng, power_category, CaseResult, MethodSpec, PowerCategory};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl ConfusionCounts {
    pub fn record(&mut self, null_true: bool, reject: bool) {
        match (null_true, reject) {
            (true, true) => self.fp += 1,
            (true, false) => self.tn += 1,
            (false, true) => self.tp += 1,
            (false, false) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn fpr(&self) -> Option<f64> {
        ratio(self.fp, self.fp + self.tn)
    }

    pub fn fnr(&self) -> Option<f64> {
        ratio(self.fn_, self.fn_ + self.tp)
    }

    pub fn tpr(&self) -> Option<f64> {
        ratio(self.tp, self.fn_ + self.tp)
    }

    pub fn tnr(&self) -> Option<f64> {
        ratio(self.tn, self.fp + self.tn)
    }

    pub fn fdr(&self) -> Option<f64> {
        ratio(self.fp, self.fp + self.tp)
    }

    pub fn false_omission_rate(&self) -> Option<f64> {
        ratio(self.fn_, self.fn_ + self.tn)
    }

    pub fn success(&self) -> Option<f64> {
        ratio(self.tp + self.tn, self.total())
    }

    /// `fpr / (fpr + tpr)`, insensitive to the share of true nulls.
    pub fn normalized_fdr(&self) -> Option<f64> {
        let (fpr, tpr) = (self.fpr()?, self.tpr()?);
        (fpr + tpr > 0.0).then(|| fpr / (fpr + tpr))
    }

    /// `fnr / (fnr + tnr)`.
    pub fn normalized_for(&self) -> Option<f64> {
        let (fnr, tnr) = (self.fnr()?, self.tnr()?);
        (fnr + tnr > 0.0).then(|| fnr / (fnr + tnr))
    }
}

impl Add for ConfusionCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self { tp: self.tp + o.tp, fp: self.fp + o.fp, tn: self.tn + o.tn, fn_: self.fn_ + o.fn_ }
    }
}

impl AddAssign for ConfusionCounts {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

/// Count-based rates of one method.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub label: String,
    pub counts: ConfusionCounts,
    pub fpr: Option<f64>,
    pub fnr: Option<f64>,
    pub fdr: Option<f64>,
    pub for_: Option<f64>,
    pub success: Option<f64>,
}

impl RateRow {
    pub fn from_counts(label: impl Into<String>, counts: ConfusionCounts) -> Self {
        Self {
            label: label.into(),
            counts,
            fpr: counts.fpr(),
            fnr: counts.fnr(),
            fdr: counts.fdr(),
            for_: counts.false_omission_rate(),
            success: counts.success(),
        }
    }
}

pub fn confusion<'a>(results: impl IntoIterator<Item = &'a CaseResult>, method: usize) -> ConfusionCounts {
    let mut c = ConfusionCounts::default();
    for r in results {
        c.record(r.null_true, r.outcomes[method].reject);
    }
    c
}

pub fn error_rates(results: &[CaseResult], method: usize, label: &str) -> RateRow {
    RateRow::from_counts(label, confusion(results, method))
}

pub fn error_rate_table(results: &[CaseResult], labels: &[String]) -> Vec<RateRow> {
    labels.iter().enumerate().map(|(i, l)| error_rates(results, i, l)).collect()
}

/// Success rates of every method within one stratum.
#[derive(Debug, Clone, PartialEq)]
pub struct StratumRow<K> {
    pub null_true: bool,
    pub stratum: K,
    pub cases: u64,
    pub success: Vec<Option<f64>>,
}

fn stratified_counts<K, F>(results: &[CaseResult], key: F) -> HashMap<(bool, K), Vec<ConfusionCounts>>
where
    K: std::hash::Hash + Eq + Copy,
    F: Fn(usize, &CaseResult) -> K,
{
    let mut map: HashMap<(bool, K), Vec<ConfusionCounts>> = HashMap::new();
    for (i, r) in results.iter().enumerate() {
        let counts = map.entry((r.null_true, key(i, r))).or_insert_with(|| vec![ConfusionCounts::default(); r.outcomes.len()]);
        for (c, o) in counts.iter_mut().zip(&r.outcomes) {
            c.record(r.null_true, o.reject);
        }
    }
    map
}

fn rows<K: std::hash::Hash + Eq + Copy>(
    map: &HashMap<(bool, K), Vec<ConfusionCounts>>,
    strata: &[K],
    n_methods: usize,
) -> Vec<StratumRow<K>> {
    let mut out = Vec::new();
    for null_true in [true, false] {
        for &k in strata {
            let counts = map.get(&(null_true, k));
            out.push(StratumRow {
                null_true,
                stratum: k,
                cases: counts.map_or(0, |c| c[0].total()),
                success: (0..n_methods).map(|m| counts.and_then(|c| c[m].success())).collect(),
            });
        }
    }
    out
}

fn method_count(results: &[CaseResult]) -> usize {
    results.first().map_or(0, |r| r.outcomes.len())
}

/// Success per (null truth, power category, method); within-null rows first.
pub fn success_by_power(results: &[CaseResult]) -> Vec<StratumRow<PowerCategory>> {
    let map = stratified_counts(results, |_, r| power_category(r.nominal_power));
    rows(&map, &PowerCategory::ALL, method_count(results))
}

/// Case counts per power category, ignoring null truth.
pub fn power_category_counts(results: &[CaseResult]) -> [(PowerCategory, u64); 3] {
    let mut out = PowerCategory::ALL.map(|c| (c, 0));
    for r in results {
        let cat = power_category(r.nominal_power);
        out.iter_mut().find(|(c, _)| *c == cat).expect("known category").1 += 1;
    }
    out
}

/// Equal-count deciles of the jittered relative MPSD.
#[derive(Debug, Clone, PartialEq)]
pub struct DecileBinning {
    pub jitter_seed: u64,
    pub jittered: Vec<f64>,
    /// 0-based decile of each case, in input order.
    pub decile: Vec<u8>,
    /// Min and max of the unjittered values in each decile.
    pub bounds: [(f64, f64); 10],
    pub sizes: [usize; 10],
}

/// Standard deviation of the tie-breaking jitter (variance 1e-10).
pub const JITTER_SD: f64 = 1e-5;

pub fn decile_bins(results: &[CaseResult], jitter_seed: u64) -> Result<DecileBinning> {
    let n = results.len();
    if n < 10 {
        return Err(Error::Binning(format!("need at least 10 cases for deciles, got {n}")));
    }
    let noise = Normal::new(0.0, JITTER_SD).expect("valid jitter law");
    let jittered: Vec<f64> = results
        .iter()
        .map(|r| r.relative_mpsd + noise.sample(&mut case_rng(jitter_seed, r.spec.case_index)))
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        jittered[a]
            .total_cmp(&jittered[b])
            .then(results[a].spec.case_index.cmp(&results[b].spec.case_index))
    });
    let mut decile = vec![0u8; n];
    let mut bounds = [(f64::INFINITY, f64::NEG_INFINITY); 10];
    let mut sizes = [0usize; 10];
    for (rank, &i) in order.iter().enumerate() {
        let d = rank * 10 / n;
        decile[i] = d as u8;
        sizes[d] += 1;
        let v = results[i].relative_mpsd;
        bounds[d] = (bounds[d].0.min(v), bounds[d].1.max(v));
    }
    Ok(DecileBinning { jitter_seed, jittered, decile, bounds, sizes })
}

/// Success per (null truth, decile, method). Deciles are 1-based in the output.
pub fn success_by_decile(results: &[CaseResult], bins: &DecileBinning) -> Vec<StratumRow<u8>> {
    let map = stratified_counts(results, |i, _| bins.decile[i] + 1);
    let strata: Vec<u8> = (1..=10).collect();
    rows(&map, &strata, method_count(results))
}

/// Normalized FDR and FOR of every method within one power category.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedRow {
    pub category: PowerCategory,
    pub cases: u64,
    pub nfdr: Vec<Option<f64>>,
    pub nfor: Vec<Option<f64>>,
}

pub fn normalized_rates_by_power(results: &[CaseResult]) -> Vec<NormalizedRow> {
    let n_methods = method_count(results);
    let mut per_cat: HashMap<PowerCategory, Vec<ConfusionCounts>> = HashMap::new();
    for r in results {
        let counts = per_cat
            .entry(power_category(r.nominal_power))
            .or_insert_with(|| vec![ConfusionCounts::default(); n_methods]);
        for (c, o) in counts.iter_mut().zip(&r.outcomes) {
            c.record(r.null_true, o.reject);
        }
    }
    PowerCategory::ALL
        .iter()
        .map(|&category| {
            let counts = per_cat.get(&category);
            NormalizedRow {
                category,
                cases: counts.map_or(0, |c| c.first().map_or(0, ConfusionCounts::total)),
                nfdr: (0..n_methods).map(|m| counts.and_then(|c| c[m].normalized_fdr())).collect(),
                nfor: (0..n_methods).map(|m| counts.and_then(|c| c[m].normalized_for())).collect(),
            }
        })
        .collect()
}

/// `{0, 0.01, ..., 1}`.
pub fn default_alpha_grid() -> Vec<f64> {
    (0..=100).map(|i| i as f64 / 100.0).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub alpha: f64,
    pub label: String,
    pub counts: ConfusionCounts,
    pub fpr: Option<f64>,
    pub tpr: Option<f64>,
}

/// Re-decides every case at each `alpha` from the stored statistics and
/// p-values, without re-simulating. The interval rule is re-run with
/// `ci_level = 1 - alpha`; distance-only does not depend on `alpha`.
pub fn alpha_sweep(results: &[CaseResult], methods: &[MethodSpec], alphas: &[f64]) -> Result<Vec<SweepPoint>> {
    if let Some(a) = alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(Error::domain(format!("alpha grid value {a} outside [0, 1]")));
    }
    let needs_interval = methods.iter().any(|m| matches!(m.method, Method::IntervalBased));
    let mut quantiles: HashMap<(usize, usize), f64> = HashMap::new();
    if needs_interval {
        let mut sizes: Vec<usize> = results.iter().map(|r| r.stats.n()).collect();
        sizes.sort_unstable();
        sizes.dedup();
        for (ai, &alpha) in alphas.iter().enumerate() {
            for &n in &sizes {
                quantiles.insert((ai, n), interval_quantile(1.0 - alpha, (n - 1) as f64)?);
            }
        }
    }
    let per_alpha: Result<Vec<Vec<ConfusionCounts>>> = alphas
        .par_iter()
        .enumerate()
        .map(|(ai, &alpha)| {
            let mut counts = vec![ConfusionCounts::default(); methods.len()];
            for r in results {
                for (mi, m) in methods.iter().enumerate() {
                    let outcome = &r.outcomes[mi];
                    let below = |p: Option<f64>| p.is_some_and(|p| p < alpha);
                    let reject = match &m.method {
                        Method::DistanceOnly => decide_distance(&r.stats, &r.null).reject,
                        Method::Mesp => below(outcome.p_value) && decide_distance(&r.stats, &r.null).reject,
                        Method::IntervalBased => {
                            !outcome.flagged && interval_rejects(&r.stats, &r.null, quantiles[&(ai, r.stats.n())])?
                        }
                        Method::Conventional | Method::SmallAlpha | Method::ThickT(_) => below(outcome.p_value),
                    };
                    counts[mi].record(r.null_true, reject);
                }
            }
            Ok(counts)
        })
        .collect();
    let mut out = Vec::with_capacity(alphas.len() * methods.len());
    for (&alpha, counts) in alphas.iter().zip(per_alpha?) {
        for (m, c) in methods.iter().zip(counts) {
            out.push(SweepPoint { alpha, label: m.label.clone(), counts: c, fpr: c.fpr(), tpr: c.tpr() });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decisions::{DecisionConfig, SampleStats};
    use crate::numerics::QuadratureSpec;
    use crate::priors::{Prior, ThickNull};
    use crate::sim::{run_study, CaseSpec, MethodOutcome, ScenarioConfig, Study};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn synthetic(index: u64, null_true: bool, rel: f64, power: f64, rejects: &[bool]) -> CaseResult {
        CaseResult {
            spec: CaseSpec { mu: 100.0, sigma: 10.0, n: 10, mpsd: rel * 10.0, case_index: index },
            null: ThickNull::new(100.0, rel * 10.0).unwrap(),
            null_true,
            stats: SampleStats::new(10, 100.0, 1.0).unwrap(),
            nominal_power: power,
            relative_mpsd: rel,
            outcomes: rejects.iter().map(|&reject| MethodOutcome { reject, p_value: None, flagged: false }).collect(),
        }
    }

    fn study(cases: usize) -> Study {
        Study::new(
            ScenarioConfig { cases, ..ScenarioConfig::main(2024) },
            MethodSpec::standard_set(Prior::discrete_uniform(1.0).unwrap()),
            DecisionConfig::default(),
            QuadratureSpec::default(),
        )
        .unwrap()
    }

    #[test]
    fn confusion_rates() {
        let c = ConfusionCounts { tp: 30, fp: 10, tn: 40, fn_: 20 };
        assert_abs_diff_eq!(c.fpr().unwrap(), 0.2);
        assert_abs_diff_eq!(c.fnr().unwrap(), 0.4);
        assert_abs_diff_eq!(c.fdr().unwrap(), 0.25);
        assert_abs_diff_eq!(c.false_omission_rate().unwrap(), 1.0 / 3.0);
        assert_abs_diff_eq!(c.success().unwrap(), 0.7);
        assert_abs_diff_eq!(c.normalized_fdr().unwrap(), 0.2 / (0.2 + 0.6));
        assert_abs_diff_eq!(c.normalized_for().unwrap(), 0.4 / (0.4 + 0.8));
    }

    #[test]
    fn zero_denominators_are_absent() {
        let only_nulls = ConfusionCounts { tp: 0, fp: 0, tn: 5, fn_: 0 };
        assert_eq!(only_nulls.fnr(), None);
        assert_eq!(only_nulls.fdr(), None);
        assert_eq!(only_nulls.fpr(), Some(0.0));
        assert_eq!(ConfusionCounts::default().success(), None);
    }

    #[test]
    fn perfect_stream() {
        let results: Vec<_> = (0..20).map(|i| synthetic(i, i % 2 == 0, 0.5, 0.9, &[i % 2 == 1])).collect();
        let row = error_rates(&results, 0, "oracle");
        assert_eq!((row.fpr, row.fnr, row.success), (Some(0.0), Some(0.0), Some(1.0)));
        let norm = normalized_rates_by_power(&results);
        assert_eq!(norm[0].nfdr[0], Some(0.0));
        assert_eq!(norm[0].nfor[0], Some(0.0));
    }

    #[test]
    fn single_case_success_is_binary() {
        let results = vec![synthetic(0, true, 0.5, 0.1, &[true])];
        let rows = success_by_power(&results);
        let filled: Vec<_> = rows.iter().filter(|r| r.cases > 0).collect();
        assert_eq!(filled.len(), 1);
        assert_eq!(filled[0].success[0], Some(0.0));
        assert!(rows.iter().filter(|r| r.cases == 0).all(|r| r.success[0].is_none()));
    }

    #[test]
    fn deciles_split_ties_evenly() {
        // heavy ties: only four distinct values
        let results: Vec<_> = (0..1003).map(|i| synthetic(i, true, [0.1, 0.2, 0.2, 0.7][i as usize % 4], 0.5, &[false])).collect();
        let bins = decile_bins(&results, 9).unwrap();
        let (min, max) = (bins.sizes.iter().min().unwrap(), bins.sizes.iter().max().unwrap());
        assert!(max - min <= 1, "{:?}", bins.sizes);
        assert!(bins.bounds.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 <= w[1].1));
        assert_eq!(bins, decile_bins(&results, 9).unwrap());
        assert!(decile_bins(&results[..9], 9).is_err());
    }

    #[test]
    fn uniform_verdicts_give_flat_decile_success() {
        let results: Vec<_> = (0..500).map(|i| synthetic(i, i % 3 == 0, (i % 37) as f64 / 10.0, 0.5, &[false])).collect();
        let bins = decile_bins(&results, 1).unwrap();
        for row in success_by_decile(&results, &bins) {
            let expected = if row.null_true { 1.0 } else { 0.0 };
            assert_eq!(row.success[0], Some(expected));
        }
    }

    #[test]
    fn sweep_rejects_bad_grid() {
        let results = run_study(&study(20), None).unwrap();
        assert!(alpha_sweep(&results, &study(20).methods, &[0.5, 1.5]).is_err());
    }

    #[test]
    fn sweep_reproduces_default_thresholds() {
        let s = study(3_000);
        let results = run_study(&s, None).unwrap();
        let table = error_rate_table(&results, &s.labels());
        let at_05 = alpha_sweep(&results, &s.methods, &[0.05]).unwrap();
        for (row, point) in table.iter().zip(&at_05) {
            if row.label != "small_alpha" {
                assert_eq!(row.counts, point.counts, "{}", row.label);
            }
        }
        let at_005 = alpha_sweep(&results, &s.methods, &[0.005]).unwrap();
        assert_eq!(table[1].counts, at_005[1].counts);
        // distance-only is flat in alpha; p-value rules reject whenever p < 1 at alpha = 1
        let ends = alpha_sweep(&results, &s.methods, &[0.0, 1.0]).unwrap();
        assert_eq!(ends[3].counts, ends[9].counts);
        assert_eq!(ends[0].counts.tp + ends[0].counts.fp, 0);
        let below_one = results.iter().filter(|r| r.outcomes[0].p_value.is_some_and(|p| p < 1.0)).count() as u64;
        assert_eq!(ends[6].counts.tp + ends[6].counts.fp, below_one);
    }

    proptest! {
        #[test]
        fn merging_counts_matches_single_pass(flags in prop::collection::vec((any::<bool>(), any::<bool>()), 0..200), split in 0usize..200) {
            let split = split.min(flags.len());
            let mut whole = ConfusionCounts::default();
            let mut left = ConfusionCounts::default();
            let mut right = ConfusionCounts::default();
            for (i, &(t, r)) in flags.iter().enumerate() {
                whole.record(t, r);
                if i < split { left.record(t, r) } else { right.record(t, r) }
            }
            prop_assert_eq!(left + right, whole);
            prop_assert_eq!(right + left, whole);
            prop_assert_eq!(whole.total() as usize, flags.len());
            if let Some(s) = whole.success() {
                prop_assert!((s - (1.0 - (whole.fp + whole.fn_) as f64 / whole.total() as f64)).abs() < 1e-12);
            }
        }
    }
}
