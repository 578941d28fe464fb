use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use thicknull::effects::PriorFile;
use thicknull_core::numerics::{Integrator, QuadratureSpec};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_thicknull"))
}

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, body).unwrap();
    path
}

const SMALL: &str = "
[scenario]
seed = 11
cases = 300

[output]
dir = \"out\"
emit_raw_cases = true
";

fn data_lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path).unwrap().lines().map(str::to_string).collect()
}

#[test]
fn run_writes_tables_and_manifest() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = run(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("out");
    for t in ["table1_power", "table2_decile", "table3_error_rates", "table4_normalized"] {
        let csv = data_lines(&dir.join(format!("{t}.csv")));
        assert_eq!(csv[0], format!("# thicknull {t} v1"));
        assert!(dir.join(format!("{t}.txt")).exists());
    }
    let rates = data_lines(&dir.join("table3_error_rates.csv"));
    assert_eq!(rates[1], "rate,conventional,small_alpha,mesp,distance_only,interval,thick_t");
    let manifest = std::fs::read_to_string(dir.join("manifest.toml")).unwrap();
    assert!(manifest.contains("seed = 11") && manifest.contains("cases = 300"), "{manifest}");
    assert!(manifest.contains("config_sha256 = "));
    let text = std::fs::read_to_string(dir.join("table3_error_rates.txt")).unwrap();
    assert!(text.lines().any(|l| l.starts_with("fpr") && l.contains('%')), "{text}");
}

#[test]
fn raw_cases_have_one_row_per_case() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = run(&["run", "--config", cfg.to_str().unwrap(), "--cases", "10"]);
    assert_eq!(code(&out), 0);
    let raw = data_lines(&tmp.path().join("out/raw_cases.csv"));
    assert_eq!(raw.len(), 12);
    assert!(raw[1].starts_with(
        "case_index,mu,sigma,n,mpsd,mean,sd,null_true,nominal_power,relative_mpsd,conventional_reject,conventional_p_value"
    ));
    // distance-only has no p-value
    let header: Vec<&str> = raw[1].split(',').collect();
    let col = header.iter().position(|h| *h == "distance_only_p_value").unwrap();
    assert!(raw[2..].iter().all(|r| r.split(',').nth(col) == Some("")));
}

#[test]
fn reruns_are_byte_identical_for_any_worker_count() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let cfg = cfg.to_str().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(code(&run(&["run", "--config", cfg, "--output", a.to_str().unwrap(), "--workers", "1"])), 0);
    assert_eq!(code(&run(&["run", "--config", cfg, "--output", b.to_str().unwrap(), "--workers", "3"])), 0);
    let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 10);
    for name in names {
        assert_eq!(std::fs::read(a.join(&name)).unwrap(), std::fs::read(b.join(&name)).unwrap(), "{name:?}");
    }
}

#[test]
fn seed_override_changes_results() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let cfg = cfg.to_str().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    run(&["run", "--config", cfg, "--output", a.to_str().unwrap()]);
    run(&["run", "--config", cfg, "--output", b.to_str().unwrap(), "--seed", "12"]);
    assert_ne!(std::fs::read(a.join("raw_cases.csv")).unwrap(), std::fs::read(b.join("raw_cases.csv")).unwrap());
    assert!(std::fs::read_to_string(b.join("manifest.toml")).unwrap().contains("seed = 12"));
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let missing = tmp.path().join("nope.toml");
    let out = run(&["run", "--config", missing.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.toml"));

    let bad = write_config(tmp.path(), "[scenario]\nseed = 1\nbogus = 2\n");
    assert_eq!(code(&run(&["run", "--config", bad.to_str().unwrap()])), 2);
    let empty = write_config(tmp.path(), "methods = []\n[scenario]\nseed = 1\n");
    assert_eq!(code(&run(&["run", "--config", empty.to_str().unwrap()])), 2);
    let range = write_config(tmp.path(), "[scenario]\nseed = 1\nn = [10, 5]\n");
    assert_eq!(code(&run(&["run", "--config", range.to_str().unwrap()])), 2);

    let cfg = write_config(tmp.path(), SMALL);
    let blocker = tmp.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let out = run(&["run", "--config", cfg.to_str().unwrap(), "--cases", "20", "--output", blocker.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
}

#[test]
fn alpha_sweep_rows_and_flat_distance_rule() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = run(&["alpha-sweep", "--config", cfg.to_str().unwrap(), "--cases", "500"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let lines = data_lines(&tmp.path().join("out/alpha_sweep.csv"));
    assert_eq!(lines[1], "alpha,method,fpr,tpr");
    assert_eq!(lines.len() - 2, 101 * 6);
    let distance: Vec<&str> = lines[2..]
        .iter()
        .filter(|l| l.split(',').nth(1) == Some("distance_only"))
        .map(|l| l.split_once("distance_only,").unwrap().1)
        .collect();
    assert_eq!(distance.len(), 101);
    assert!(distance.iter().all(|d| *d == distance[0]));
}

#[test]
fn fit_prior_filters_and_fits() {
    let tmp = TempDir::new().unwrap();
    // 164 effects: 159 symmetric about zero inside (-0.2, 0.2), five on or beyond the bounds
    let mut effects: Vec<f64> = (-79..=79).map(|k| 0.0025 * k as f64).collect();
    effects.extend([-0.2, 0.2, 0.25, -0.5, 1.0]);
    assert_eq!(effects.len(), 164);
    let inside = 159;
    let mut body = String::from("d\n");
    for (i, e) in effects.iter().enumerate() {
        body.push_str(&format!("{e}\n"));
        if i % 40 == 0 {
            body.push('\n');
        }
    }
    let file = tmp.path().join("effects.csv");
    std::fs::write(&file, body).unwrap();
    let prior = tmp.path().join("prior.toml");
    let out = run(&[
        "fit-prior", "--effects", file.to_str().unwrap(), "--lower", "-0.2", "--upper", "0.2", "--output",
        prior.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let fit = PriorFile::load(&prior).unwrap();
    assert_eq!((fit.records, fit.retained), (164, inside));
    assert_eq!(fit.kde.sample.len(), inside);
    // the retained effects are symmetric about zero
    assert!(fit.truncated_normal.location.abs() < 1e-9, "{}", fit.truncated_normal.location);

    let bounds = fit.bounds().unwrap();
    let integ = Integrator::new(QuadratureSpec::default()).unwrap();
    for model in [thicknull::config::FittedModel::TruncatedNormal, thicknull::config::FittedModel::Kde] {
        let p = fit.prior(model).unwrap();
        let mass = integ.integrate(|x| p.density(x, &bounds).unwrap(), bounds.lower(), bounds.upper()).unwrap();
        assert!((mass - 1.0).abs() < 1e-9, "{model:?}: {mass}");
    }

    // a fitted prior drives a run
    let cfg = write_config(
        tmp.path(),
        "[scenario]\nseed = 5\ncases = 50\nmu0 = 0\nmu = { law = \"normal\", mean = 0, sd = 0.2 }\nsigma = [1, 2]\nmpsd = [0, 0]\n\
         [[methods]]\nkind = \"thick_t\"\nprior = { kind = \"fitted\", path = \"prior.toml\", model = \"kde\" }\n",
    );
    let out = run(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn fit_prior_reports_insufficient_data() {
    let tmp = TempDir::new().unwrap();
    let file = tmp.path().join("few.csv");
    std::fs::write(&file, "0.1\n0.5\n-0.05\n0.9\n").unwrap();
    let out = run(&["fit-prior", "--effects", file.to_str().unwrap(), "--lower", "-0.2", "--upper", "0.2"]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("2 of 4"), "{err}");
}

#[test]
fn verify_fails_on_wrong_reference_with_diff() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let reference = tmp.path().join("ref.csv");
    std::fs::write(&reference, "table,row,column,value,tolerance\nrates,fpr,conventional,99.0,0.5\n").unwrap();
    let out = run(&["verify", "--config", cfg.to_str().unwrap(), "--reference", reference.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let report = String::from_utf8_lossy(&out.stdout);
    assert!(report.contains("FAIL rates/fpr/conventional expected 99") && report.contains("diff -"), "{report}");
}

#[test]
fn quick_verify_passes_with_binomial_tolerances() {
    let config = repo().join("configs/main.toml");
    let reference = repo().join("reference/main.csv");
    let tmp = TempDir::new().unwrap();
    let out = run(&[
        "verify",
        "--config",
        config.to_str().unwrap(),
        "--reference",
        reference.to_str().unwrap(),
        "--cases",
        "1000",
        "--output",
        tmp.path().to_str().unwrap(),
        "--binomial-tolerance",
    ]);
    let report = String::from_utf8_lossy(&out.stdout);
    assert_eq!(code(&out), 0, "{}", report.lines().filter(|l| l.starts_with("FAIL")).collect::<Vec<_>>().join("\n"));
    assert!(report.ends_with("246 cells, 0 failed\n"), "{report}");
}
