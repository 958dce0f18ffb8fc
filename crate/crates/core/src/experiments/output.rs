use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::inference::PosteriorRecord;

use super::{CoverageReport, CrossSection, ErrorRow, ExperimentConfig, ExperimentError};

/// 17 significant digits in scientific notation.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// `# config_sha256=<hex> seeds=<list>`
pub fn provenance_line(config: &ExperimentConfig) -> String {
    let seeds: Vec<String> = config.seeds.iter().map(u64::to_string).collect();
    format!("# config_sha256={} seeds={}", config.hash(), seeds.join(","))
}

fn create(path: &Path) -> Result<BufWriter<File>, ExperimentError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| ExperimentError::io(path, e))
}

fn write_all(path: &Path, text: &str) -> Result<(), ExperimentError> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| ExperimentError::io(path, e))
}

/// Streams `table1.csv` rows to disk as they are produced.
pub struct Table1Writer {
    path: PathBuf,
    out: BufWriter<File>,
}

impl Table1Writer {
    pub fn create(path: &Path, config: &ExperimentConfig) -> Result<Self, ExperimentError> {
        let mut w = Self {
            path: path.to_path_buf(),
            out: create(path)?,
        };
        let header = format!("{}\nn,mean_l2,mean_rel,std_l2,seeds\n", provenance_line(config));
        w.put(&header)?;
        Ok(w)
    }

    fn put(&mut self, s: &str) -> Result<(), ExperimentError> {
        self.out
            .write_all(s.as_bytes())
            .and_then(|_| self.out.flush())
            .map_err(|e| ExperimentError::io(&self.path, e))
    }

    pub fn row(&mut self, r: &ErrorRow) -> Result<(), ExperimentError> {
        let line = format!(
            "{},{},{},{},{}\n",
            r.n,
            fmt_float(r.mean_l2),
            fmt_float(r.mean_rel),
            fmt_float(r.std_l2),
            r.seeds
        );
        self.put(&line)
    }
}

pub fn write_coverage(path: &Path, config: &ExperimentConfig, r: &CoverageReport) -> Result<(), ExperimentError> {
    let text = format!(
        "{}\ngamma,n,replicates,coverage,mean_radius,mean_exact_radius,truth\n{},{},{},{},{},{},{}\n",
        provenance_line(config),
        fmt_float(r.gamma),
        r.n,
        r.replicates,
        fmt_float(r.coverage),
        fmt_float(r.mean_radius),
        fmt_float(r.mean_exact_radius),
        fmt_float(r.truth)
    );
    write_all(path, &text)
}

pub fn write_cross_section(path: &Path, config: &ExperimentConfig, cs: &CrossSection) -> Result<(), ExperimentError> {
    let m = cs.axes.first().map_or(0, |a| a.samples.len());
    let mut text = provenance_line(config);
    text.push_str("\naxis,s,f0,fbar");
    for k in 1..=m {
        text.push_str(&format!(",sample_{k}"));
    }
    text.push('\n');
    for axis in &cs.axes {
        for i in 0..axis.s.len() {
            text.push_str(axis.name);
            for x in [axis.s[i], axis.f0[i], axis.fbar[i]] {
                text.push(',');
                text.push_str(&fmt_float(x));
            }
            for sample in &axis.samples {
                text.push(',');
                text.push_str(&fmt_float(sample[i]));
            }
            text.push('\n');
        }
    }
    write_all(path, &text)
}

pub fn write_eigenvalues(path: &Path, config: &ExperimentConfig, eigenvalues: &[f64]) -> Result<(), ExperimentError> {
    let mut text = format!("{}\nj,lambda,lambda_over_j\n", provenance_line(config));
    for (k, l) in eigenvalues.iter().enumerate() {
        let j = k + 1;
        text.push_str(&format!("{j},{},{}\n", fmt_float(*l), fmt_float(l / j as f64)));
    }
    write_all(path, &text)
}

pub fn write_posterior(path: &Path, record: &PosteriorRecord) -> Result<(), ExperimentError> {
    let mut text = serde_json::to_string_pretty(record)
        .map_err(|e| ExperimentError::InvalidArgument(format!("cannot serialise posterior: {e}")))?;
    text.push('\n');
    write_all(path, &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_has_17_significant_digits() {
        assert_eq!(fmt_float(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_float(-2.0), "-2.0000000000000000e0");
        for x in [std::f64::consts::PI, 1e-300, 123456.789] {
            assert_eq!(fmt_float(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn provenance_mentions_hash_and_seeds() {
        let cfg = ExperimentConfig::default();
        let line = provenance_line(&cfg);
        assert!(line.starts_with("# config_sha256="));
        assert!(line.ends_with("seeds=1,2,3,4,5"));
        assert!(line.contains(&cfg.hash()));
    }
}
