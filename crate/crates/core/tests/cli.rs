use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_orlicz-umd"))
        .args(args)
        .output()
        .unwrap();
    Run {
        code: out.status.code().unwrap(),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

/// Writes `space.csv` and `exp.toml` into a fresh directory.
fn setup(space: &str, config: &str) -> (TempDir, PathBuf) {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("space.csv"), space).unwrap();
    let cfg = dir.path().join("exp.toml");
    fs::write(
        &cfg,
        format!("space = \"space.csv\"\nout = \"out\"\n{config}"),
    )
    .unwrap();
    (dir, cfg)
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    rdr.records()
        .map(|r| r.unwrap().iter().map(str::to_owned).collect())
        .collect()
}

const TWO_EXPONENTS: &str = "atom_id,weight,p\na,0.5,1.5\nb,0.5,3\n";

#[test]
fn young_reports_power_and_variable_constants() {
    let (dir, cfg) = setup(
        "atom_id,weight\na,1\n",
        "family = \"power\"\nexponent = 2.0\n",
    );
    let r = run(&["young", "--config", cfg.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rows = csv_rows(&dir.path().join("out/delta2.csv"));
    assert_eq!(
        (
            rows[0][0].as_str(),
            rows[0][1].as_str(),
            rows[0][2].as_str()
        ),
        ("phi", "true", "4")
    );
    assert_eq!(rows[1][2], "4");
    for f in ["conjugate.csv", "young_margin.csv", "complement.csv"] {
        assert!(dir.path().join("out").join(f).exists());
    }

    let (dir, cfg) = setup(TWO_EXPONENTS, "family = \"variable_exponent\"\n");
    assert_eq!(run(&["young", "--config", cfg.to_str().unwrap()]).code, 0);
    let rows = csv_rows(&dir.path().join("out/delta2.csv"));
    assert_eq!(rows[0][2], "8");
    assert_eq!(rows[1][2], "8");
    let complement = csv_rows(&dir.path().join("out/complement.csv"));
    assert!(complement[0][1].parse::<f64>().unwrap() >= -1e-9);
}

#[test]
fn young_reports_failed_certificate_without_error() {
    let (dir, cfg) = setup(
        "atom_id,weight\na,1\n",
        "family = \"exp_minus_one\"\ngrid_max = 20.0\n",
    );
    let r = run(&["young", "--config", cfg.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rows = csv_rows(&dir.path().join("out/delta2.csv"));
    assert_eq!(rows[0][1], "false");
    assert!(!rows[0][8].is_empty());
}

#[test]
fn norm_rows() {
    let (dir, cfg) = setup(
        "atom_id,weight\na,1\n",
        "family = \"power\"\nexponent = 2.0\nfunction = \"f.csv\"\n",
    );
    fs::write(dir.path().join("f.csv"), "atom_id,unit,zero\na,1,0\n").unwrap();
    let r = run(&["norm", "--config", cfg.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rows = csv_rows(&dir.path().join("out/norms.csv"));
    let unit: Vec<f64> = rows[0][1..4].iter().map(|v| v.parse().unwrap()).collect();
    assert!((unit[0] - 1.0).abs() < 1e-12);
    assert!((unit[1] - 2.0).abs() < 1e-9 && (unit[2] - 2.0).abs() < 1e-9);
    assert_eq!(
        (
            rows[1][1].as_str(),
            rows[1][2].as_str(),
            rows[1][3].as_str()
        ),
        ("0", "0", "")
    );

    let (dir, cfg) = setup(
        "atom_id,weight\na,0.25\nb,0.25\nc,0.5\n",
        "family = \"variable_exponent\"\nexponents = [3.0, 3.0, 3.0]\nfunction = \"f.csv\"\n",
    );
    fs::write(dir.path().join("f.csv"), "atom_id,g\na,1\nb,-2\nc,0.5\n").unwrap();
    assert_eq!(run(&["norm", "--config", cfg.to_str().unwrap()]).code, 0);
    let rows = csv_rows(&dir.path().join("out/norms.csv"));
    let expected = (0.25 + 0.25 * 8.0 + 0.5 * 0.125_f64).cbrt();
    let lux: f64 = rows[0][1].parse().unwrap();
    let classical: f64 = rows[0][8].parse().unwrap();
    assert!((lux - expected).abs() < 1e-10 * expected);
    assert!((classical - expected).abs() < 1e-12 * expected);
}

#[test]
fn norm_rejects_mismatched_atoms() {
    let (dir, cfg) = setup(
        "atom_id,weight\na,1\n",
        "family = \"power\"\nexponent = 2.0\nfunction = \"f.csv\"\n",
    );
    fs::write(dir.path().join("f.csv"), "atom_id,g\nz,1\n").unwrap();
    let r = run(&["norm", "--config", cfg.to_str().unwrap()]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("schema"));
}

#[test]
fn mart_scalar_l2_and_replay() {
    let (dir, cfg) = setup(
        "atom_id,weight\na,1\n",
        "family = \"power\"\nexponent = 2.0\ndepth = 4\nbudget = \"3x20\"\nseed = 17\ndoob_trials = 20\nmain_trials = 10\n",
    );
    let cfg = cfg.to_str().unwrap();
    let r = run(&["mart", "--config", cfg]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let first = fs::read(dir.path().join("out/umd.json")).unwrap();
    let doc: Value = serde_json::from_slice(&first).unwrap();
    assert!((doc["estimate"]["best_ratio"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    for f in [
        "doob.csv",
        "umd_signs.csv",
        "best_martingale.csv",
        "main_estimate.csv",
    ] {
        assert!(dir.path().join("out").join(f).exists());
    }
    let other = dir.path().join("again");
    assert_eq!(
        run(&["mart", "--config", cfg, "--out", other.to_str().unwrap()]).code,
        0
    );
    assert_eq!(fs::read(other.join("umd.json")).unwrap(), first);
}

#[test]
fn zero_budget_and_missing_seed_are_usage_errors() {
    let (_dir, cfg) = setup(
        "atom_id,weight\na,1\n",
        "family = \"power\"\nexponent = 2.0\n",
    );
    let cfg = cfg.to_str().unwrap();
    assert_eq!(
        run(&["mart", "--config", cfg, "--seed", "1", "--budget", "0x5"]).code,
        1
    );
    let r = run(&["mart", "--config", cfg]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("seed"), "{}", r.stderr);
}

#[test]
fn malformed_config_names_the_line() {
    let (_dir, cfg) = setup(
        "atom_id,weight\na,1\n",
        "family = \"power\"\nexponent = = 2\n",
    );
    let r = run(&["young", "--config", cfg.to_str().unwrap()]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("line 4"), "{}", r.stderr);
}

#[test]
fn certify_exit_codes_and_verification() {
    let common =
        "family = \"variable_exponent\"\ndepth = 3\nbudget = \"2x10\"\nseed = 5\np = 2.0\n";
    let (dir, cfg) = setup(TWO_EXPONENTS, common);
    let r = run(&["certify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("certified"));
    let report = dir.path().join("out/certify.json");
    let doc: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(doc["payload"]["constants"]["k_phi"], 8.0);
    assert_eq!(doc["payload"]["constants"]["m"], 9);
    assert!(dir.path().join("out/constants.txt").exists());
    assert_eq!(
        run(&["certify", "--verify", report.to_str().unwrap()]).code,
        0
    );

    let text = fs::read_to_string(&report).unwrap();
    let tampered = text.replacen("\"best_ratio\": 1", "\"best_ratio\": 2", 1);
    assert_ne!(tampered, text);
    fs::write(&report, tampered).unwrap();
    let r = run(&["certify", "--verify", report.to_str().unwrap()]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("checksum"), "{}", r.stderr);

    let (dir, cfg) = setup("atom_id,weight,p\na,0.5,1.5\nb,0.5,1\n", common);
    let r = run(&["certify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(r.code, 2, "{}", r.stderr);
    let doc: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/certify.json")).unwrap())
            .unwrap();
    assert!(doc["payload"]["hypotheses"].is_string());
}
