use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const SMALL: &str = "\
domain = rotated_ellipse
mesh_h = 0.1
J = 10
n_list = 30, 60
seeds = 1, 2
replicates = 50
interval_draws = 200
samples = 3
";

fn heatbayes(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heatbayes"))
        .args(args)
        .current_dir(dir)
        .env("HEATBAYES_THREADS", "2")
        .output()
        .unwrap()
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("small.cfg");
    std::fs::write(&path, SMALL).unwrap();
    path.to_str().unwrap().to_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn help_and_version_exit_zero() {
    let tmp = TempDir::new().unwrap();
    let help = heatbayes(&["--help"], tmp.path());
    assert_eq!(code(&help), 0);
    let text = String::from_utf8_lossy(&help.stdout);
    for sub in ["mesh", "eigen", "table1", "coverage", "cross-section", "posterior"] {
        assert!(text.contains(sub), "help lacks {sub}");
    }
    let version = heatbayes(&["--version"], tmp.path());
    assert_eq!(code(&version), 0);
    assert!(String::from_utf8_lossy(&version.stdout).contains(env!("CARGO_PKG_VERSION")));
    let sub_help = heatbayes(&["table1", "--help"], tmp.path());
    assert_eq!(code(&sub_help), 0);
    assert!(String::from_utf8_lossy(&sub_help.stdout).contains("--config"));
}

#[test]
fn usage_and_config_errors_exit_one() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&heatbayes(&["frobnicate"], tmp.path())), 1);
    assert_eq!(code(&heatbayes(&[], tmp.path())), 1);
    assert_eq!(code(&heatbayes(&["mesh", "--seed", "x"], tmp.path())), 1);

    let missing = heatbayes(&["mesh", "--config", "nowhere.cfg"], tmp.path());
    assert_eq!(code(&missing), 1);
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nowhere.cfg"));

    let bad = tmp.path().join("bad.cfg");
    std::fs::write(&bad, "sigma = -1\n").unwrap();
    assert_eq!(
        code(&heatbayes(&["mesh", "--config", bad.to_str().unwrap()], tmp.path())),
        1
    );
    std::fs::write(&bad, "colour = blue\n").unwrap();
    let unknown = heatbayes(&["mesh", "--config", bad.to_str().unwrap()], tmp.path());
    assert_eq!(code(&unknown), 1);
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("colour"));

    let cfg = small_config(tmp.path());
    let few = heatbayes(&["coverage", "--config", &cfg, "--replicates", "10"], tmp.path());
    assert_eq!(code(&few), 1);

    let threads = Command::new(env!("CARGO_BIN_EXE_heatbayes"))
        .args(["mesh", "--config", &cfg])
        .current_dir(tmp.path())
        .env("HEATBAYES_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&threads), 1);
}

#[test]
fn numerical_failure_exits_two() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("huge.cfg");
    std::fs::write(&cfg, "mesh_h = 0.3\nJ = 500\n").unwrap();
    let out = heatbayes(&["eigen", "--config", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn every_subcommand_writes_its_file() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path());
    let out = tmp.path().join("out");
    let out_s = out.to_str().unwrap();
    for (sub, file) in [
        ("mesh", "mesh.txt"),
        ("eigen", "eigenvalues.csv"),
        ("table1", "table1.csv"),
        ("coverage", "coverage.csv"),
        ("cross-section", "cross_section.csv"),
        ("posterior", "posterior.json"),
    ] {
        let run = heatbayes(&[sub, "--config", &cfg, "--out", out_s], tmp.path());
        assert_eq!(code(&run), 0, "{sub}: {}", String::from_utf8_lossy(&run.stderr));
        assert!(out.join(file).exists(), "{sub} did not write {file}");
    }

    let table = std::fs::read_to_string(out.join("table1.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert!(lines[0].starts_with("# config_sha256="));
    assert_eq!(lines[1], "n,mean_l2,mean_rel,std_l2,seeds");
    assert_eq!(lines.len(), 4);

    let coverage = std::fs::read_to_string(out.join("coverage.csv")).unwrap();
    let row: Vec<&str> = coverage.lines().nth(2).unwrap().split(',').collect();
    assert_eq!(row[2], "50");
    let cov: f64 = row[3].parse().unwrap();
    assert!((0.0..=1.0).contains(&cov));

    let section = std::fs::read_to_string(out.join("cross_section.csv")).unwrap();
    assert!(section.lines().nth(1).unwrap().ends_with("sample_1,sample_2,sample_3"));
    assert_eq!(section.lines().count(), 2 + 2 * 101);

    let post: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("posterior.json")).unwrap()).unwrap();
    assert_eq!(post["J"], 10);
    assert_eq!(post["mean"].as_array().unwrap().len(), 10);
    assert_eq!(post["covariance"].as_array().unwrap().len(), 10);

    let eig = std::fs::read_to_string(out.join("eigenvalues.csv")).unwrap();
    assert_eq!(eig.lines().count(), 2 + 10);
}

#[test]
fn seed_flag_replaces_the_seed_list_and_runs_repeat_exactly() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path());
    let run = |dir: &str, seed: &str| {
        let out = tmp.path().join(dir);
        let res = heatbayes(
            &[
                "table1",
                "--config",
                &cfg,
                "--seed",
                seed,
                "--out",
                out.to_str().unwrap(),
            ],
            tmp.path(),
        );
        assert_eq!(code(&res), 0);
        std::fs::read(out.join("table1.csv")).unwrap()
    };
    let a = run("a", "7");
    let b = run("b", "7");
    let c = run("c", "8");
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(String::from_utf8_lossy(&a).lines().next().unwrap().ends_with("seeds=7"));
}
