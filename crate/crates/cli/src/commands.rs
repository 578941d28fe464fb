//! The four subcommands as library functions.

use std::path::Path;

use thicknull_core::analytics::alpha_sweep;
use thicknull_core::sim::{run_study, CaseResult};

use crate::config::RunConfig;
use crate::effects::{read_effects, PriorFile};
use crate::report::{raw_cases, sweep_artifact, table_artifacts, write_artifacts, Artifact, Manifest, Tables};
use crate::verify::{compare, observed_cells, read_reference, VerifyReport, Widening};
use crate::{CliError, Result};

pub const MANIFEST: &str = "manifest.toml";
pub const SWEEP_MANIFEST: &str = "alpha_sweep.manifest.toml";

pub fn simulate(cfg: &RunConfig) -> Result<Vec<CaseResult>> {
    Ok(run_study(&cfg.study, cfg.workers)?)
}

#[derive(Debug)]
pub struct RunOutput {
    pub results: Vec<CaseResult>,
    pub tables: Tables,
    pub artifacts: Vec<Artifact>,
}

/// Runs the scenario and builds every artifact without touching the disk.
pub fn build_run(cfg: &RunConfig) -> Result<RunOutput> {
    let results = simulate(cfg)?;
    let labels = cfg.study.labels();
    let tables = Tables::compute(&results, &labels, cfg.jitter_seed)?;
    let mut artifacts = table_artifacts(&tables);
    if cfg.emit_raw_cases {
        artifacts.push(raw_cases(&results, &labels));
    }
    let manifest = Manifest::new("run", cfg, &artifacts).artifact(MANIFEST);
    artifacts.push(manifest);
    Ok(RunOutput { results, tables, artifacts })
}

pub fn cmd_run(cfg: &RunConfig) -> Result<RunOutput> {
    let out = build_run(cfg)?;
    write_artifacts(&cfg.output_dir, &out.artifacts)?;
    Ok(out)
}

pub fn build_sweep(cfg: &RunConfig, results: &[CaseResult]) -> Result<Vec<Artifact>> {
    let points = alpha_sweep(results, &cfg.study.methods, &cfg.alphas)?;
    let sweep = sweep_artifact(&points);
    let manifest = Manifest::new("alpha-sweep", cfg, std::slice::from_ref(&sweep)).artifact(SWEEP_MANIFEST);
    Ok(vec![sweep, manifest])
}

pub fn cmd_alpha_sweep(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let results = simulate(cfg)?;
    let artifacts = build_sweep(cfg, &results)?;
    write_artifacts(&cfg.output_dir, &artifacts)?;
    Ok(artifacts)
}

/// Fits both prior shapes to the effects strictly inside `(lower, upper)`.
/// Writes to `output` when given and returns the file contents.
pub fn cmd_fit_prior(effects: &Path, lower: f64, upper: f64, output: Option<&Path>) -> Result<PriorFile> {
    let values = read_effects(effects)?;
    let fit = PriorFile::fit(&effects.display().to_string(), &values, lower, upper)?;
    if let Some(path) = output {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        std::fs::write(path, fit.to_toml()).map_err(|e| CliError::io(path, e))?;
    }
    Ok(fit)
}

pub fn verify_tables(tables: &Tables, reference: &[crate::verify::ReferenceCell], widening: Widening) -> VerifyReport {
    compare(reference, &observed_cells(tables), widening)
}

pub fn cmd_verify(cfg: &RunConfig, reference: &Path, widening: Widening) -> Result<VerifyReport> {
    let cells = read_reference(reference)?;
    let results = simulate(cfg)?;
    let tables = Tables::compute(&results, &cfg.study.labels(), cfg.jitter_seed)?;
    Ok(verify_tables(&tables, &cells, widening))
}
