use std::process::Command;

use heatbayes::experiments::{ErrorRow, ExperimentConfig, Study, Table1Writer, SECTION_POINTS};
use tempfile::TempDir;

fn small() -> ExperimentConfig {
    ExperimentConfig::parse("mesh_h = 0.08\nJ = 12\nn_list = 40, 80\nseeds = 1, 2, 3\ninterval_draws = 500\n").unwrap()
}

#[test]
fn cross_section_mean_sits_inside_the_sample_envelope() {
    let study = Study::new(&small()).unwrap();
    let cs = study.run_cross_section(1000).unwrap();
    assert_eq!(cs.axes.len(), 2);
    for axis in &cs.axes {
        assert_eq!(axis.s.len(), SECTION_POINTS);
        assert_eq!(axis.samples.len(), 1000);
        let inside = (0..SECTION_POINTS)
            .filter(|&i| {
                let lo = axis.samples.iter().map(|s| s[i]).fold(f64::INFINITY, f64::min);
                let hi = axis.samples.iter().map(|s| s[i]).fold(f64::NEG_INFINITY, f64::max);
                (lo..=hi).contains(&axis.fbar[i])
            })
            .count();
        assert!(inside as f64 >= 0.95 * SECTION_POINTS as f64, "{}: {inside}", axis.name);
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        assert!(finite(&axis.s) && finite(&axis.f0) && finite(&axis.fbar));
        assert!(axis.samples.iter().all(|s| finite(s)));
        // symmetric abscissa through the centre
        assert!((axis.s[0] + axis.s[SECTION_POINTS - 1]).abs() < 1e-12);
    }
    assert_eq!(study.run_cross_section(1).unwrap().axes[0].samples.len(), 1);
    assert!(study.run_cross_section(0).is_err());
}

#[test]
fn table_rows_follow_the_config_and_repeat_bitwise() {
    let mut cfg = small();
    cfg.n_list = vec![60];
    cfg.seeds = vec![4];
    let study = Study::new(&cfg).unwrap();
    let a = study.run_table1().unwrap();
    let b = Study::new(&cfg).unwrap().run_table1().unwrap();
    assert_eq!(a.rows.len(), 1);
    assert_eq!(a.rows[0].seeds, 1);
    assert_eq!(a.rows[0].std_l2, 0.0);
    assert_eq!(a.rows[0].mean_l2.to_bits(), b.rows[0].mean_l2.to_bits());
    assert!((a.rows[0].mean_rel * study.truth().l2_norm() - a.rows[0].mean_l2).abs() < 1e-12);
}

#[test]
fn coverage_requires_fifty_replicates() {
    let study = Study::new(&small()).unwrap();
    assert!(study.run_coverage(49).is_err());
    let r = study.run_coverage(50).unwrap();
    assert!((0.0..=1.0).contains(&r.coverage));
    assert!((r.truth - study.truth_functional()).abs() == 0.0);
}

#[test]
fn table_rows_reach_disk_before_the_writer_is_dropped() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("table1.csv");
    let cfg = small();
    let mut w = Table1Writer::create(&path, &cfg).unwrap();
    w.row(&ErrorRow {
        n: 40,
        n_target: 40,
        mean_l2: 0.5,
        mean_rel: 0.25,
        std_l2: 0.01,
        seeds: 3,
    })
    .unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().nth(2).unwrap().starts_with("40,5.0000000000000000e-1,"));
    drop(w);
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("small.cfg");
    std::fs::write(&cfg, small().canonical()).unwrap();
    let run = |threads: &str, sub: &str, file: &str| {
        let out = tmp.path().join(format!("{sub}-{threads}"));
        let status = Command::new(env!("CARGO_BIN_EXE_heatbayes"))
            .args([sub, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
            .env("HEATBAYES_THREADS", threads)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(out.join(file)).unwrap()
    };
    for (sub, file) in [
        ("table1", "table1.csv"),
        ("coverage", "coverage.csv"),
        ("posterior", "posterior.json"),
    ] {
        assert_eq!(run("1", sub, file), run("3", sub, file), "{sub}");
    }
}
