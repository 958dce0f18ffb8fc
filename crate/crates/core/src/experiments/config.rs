//! Flat `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::mesh::DomainSpec;
use crate::prior::default_truncation;

use super::builtins;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown key `{key}` on line {line}")]
    UnknownKey { key: String, line: usize },
    #[error("key `{key}` given twice (line {line})")]
    DuplicateKey { key: String, line: usize },
    #[error("invalid value for `{key}`: {msg}")]
    InvalidValue { key: String, msg: String },
}

/// Truncation level: fixed or chosen per sample size by the cut-off rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Truncation {
    Fixed(usize),
    Auto,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub domain: DomainSpec,
    pub truth: String,
    pub conductivity: String,
    pub psi: String,
    pub t: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub j: Truncation,
    pub n_list: Vec<usize>,
    pub seeds: Vec<u64>,
    pub mesh_h: f64,
    /// `None` selects the default step rule.
    pub heat_steps: Option<usize>,
    /// Data are generated on a mesh with spacing `mesh_h / data_refinement`.
    pub data_refinement: usize,
    pub gamma: f64,
    pub replicates: usize,
    /// Sample size of the coverage and cross-section runs; defaults to the largest in `n_list`.
    pub study_n: Option<usize>,
    /// Posterior draws per credible interval.
    pub interval_draws: usize,
    /// Posterior sample curves in the cross-section output.
    pub samples: usize,
    pub output_dir: PathBuf,
    pub cache_dir: Option<PathBuf>,
}

const KEYS: &[&str] = &[
    "domain",
    "domain_a",
    "domain_b",
    "domain_theta",
    "polygon",
    "truth",
    "conductivity",
    "psi",
    "T",
    "sigma",
    "alpha",
    "J",
    "n_list",
    "seeds",
    "mesh_h",
    "heat_steps",
    "data_refinement",
    "gamma",
    "replicates",
    "study_n",
    "interval_draws",
    "samples",
    "output_dir",
    "cache_dir",
];

impl Default for ExperimentConfig {
    /// Settings of the rotated-ellipse simulation study.
    fn default() -> Self {
        Self {
            domain: DomainSpec::study_ellipse(),
            truth: "gaussian_bump".into(),
            conductivity: "gaussian_dip".into(),
            psi: "bump_psi".into(),
            t: 0.01,
            sigma: 0.05,
            alpha: 0.5,
            j: Truncation::Fixed(84),
            n_list: vec![100, 250, 500, 1000],
            seeds: vec![1, 2, 3, 4, 5],
            mesh_h: 0.025,
            heat_steps: None,
            data_refinement: 2,
            gamma: 0.1,
            replicates: 200,
            study_n: None,
            interval_draws: 10_000,
            samples: 1000,
            output_dir: PathBuf::from("."),
            cache_dir: None,
        }
    }
}

fn invalid(key: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.into(),
        msg: msg.into(),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| invalid(key, format!("`{v}`: {e}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Parses `key = value` lines; `#` starts a comment. Missing keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut kv: BTreeMap<String, String> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                msg: format!("expected `key = value`, found `{content}`"),
            })?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey { key: key.into(), line });
            }
            if kv.insert(key.into(), value.trim().into()).is_some() {
                return Err(ConfigError::DuplicateKey { key: key.into(), line });
            }
        }
        let mut cfg = Self::default();
        let get = |k: &str| kv.get(k).map(String::as_str);

        if let Some(kind) = get("domain") {
            cfg.domain = match kind {
                "rotated_ellipse" => {
                    let a = get("domain_a").map_or(Ok(1.0), |v| parse_num("domain_a", v))?;
                    let b = get("domain_b").map_or(Ok(0.75), |v| parse_num("domain_b", v))?;
                    let theta =
                        get("domain_theta").map_or(Ok(std::f64::consts::PI / 6.0), |v| parse_num("domain_theta", v))?;
                    DomainSpec::RotatedEllipse { a, b, theta }
                }
                "unit_square" => DomainSpec::UnitSquare,
                "unit_disk" => DomainSpec::UnitDisk,
                "polygon" => {
                    let v = get("polygon").ok_or_else(|| invalid("polygon", "required for polygon domains"))?;
                    let vertices = v
                        .split(';')
                        .map(|pair| {
                            let xy: Vec<f64> = pair
                                .split_whitespace()
                                .map(|s| parse_num("polygon", s))
                                .collect::<Result<_, _>>()?;
                            match xy.as_slice() {
                                [x, y] => Ok([*x, *y]),
                                _ => Err(invalid("polygon", format!("expected `x y`, found `{}`", pair.trim()))),
                            }
                        })
                        .collect::<Result<_, _>>()?;
                    DomainSpec::Polygon { vertices }
                }
                other => return Err(invalid("domain", format!("unknown domain kind `{other}`"))),
            };
        }
        for key in ["domain_a", "domain_b", "domain_theta"] {
            if get(key).is_some() && !matches!(cfg.domain, DomainSpec::RotatedEllipse { .. }) {
                return Err(invalid(key, "only applies to rotated_ellipse domains"));
            }
        }
        if get("polygon").is_some() && !matches!(cfg.domain, DomainSpec::Polygon { .. }) {
            return Err(invalid("polygon", "only applies to polygon domains"));
        }

        if let Some(v) = get("truth") {
            cfg.truth = builtins::canonical_id(v).into();
        }
        if let Some(v) = get("conductivity") {
            cfg.conductivity = builtins::canonical_id(v).into();
        }
        if let Some(v) = get("psi") {
            cfg.psi = builtins::canonical_id(v).into();
        }
        if let Some(v) = get("T") {
            cfg.t = parse_num("T", v)?;
        }
        if let Some(v) = get("sigma") {
            cfg.sigma = parse_num("sigma", v)?;
        }
        if let Some(v) = get("alpha") {
            cfg.alpha = parse_num("alpha", v)?;
        }
        if let Some(v) = get("J") {
            cfg.j = if v == "auto" {
                Truncation::Auto
            } else {
                Truncation::Fixed(parse_num("J", v)?)
            };
        }
        if let Some(v) = get("n_list") {
            cfg.n_list = parse_list("n_list", v)?;
        }
        if let Some(v) = get("seeds") {
            cfg.seeds = parse_list("seeds", v)?;
        }
        if let Some(v) = get("mesh_h") {
            cfg.mesh_h = parse_num("mesh_h", v)?;
        }
        if let Some(v) = get("heat_steps") {
            cfg.heat_steps = if v == "auto" {
                None
            } else {
                Some(parse_num("heat_steps", v)?)
            };
        }
        if let Some(v) = get("data_refinement") {
            cfg.data_refinement = parse_num("data_refinement", v)?;
        }
        if let Some(v) = get("gamma") {
            cfg.gamma = parse_num("gamma", v)?;
        }
        if let Some(v) = get("replicates") {
            cfg.replicates = parse_num("replicates", v)?;
        }
        if let Some(v) = get("study_n") {
            cfg.study_n = Some(parse_num("study_n", v)?);
        }
        if let Some(v) = get("interval_draws") {
            cfg.interval_draws = parse_num("interval_draws", v)?;
        }
        if let Some(v) = get("samples") {
            cfg.samples = parse_num("samples", v)?;
        }
        if let Some(v) = get("output_dir") {
            cfg.output_dir = PathBuf::from(v);
        }
        if let Some(v) = get("cache_dir") {
            cfg.cache_dir = Some(PathBuf::from(v));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.domain.validate().map_err(|e| invalid("domain", e.to_string()))?;
        for (key, id) in [
            ("truth", &self.truth),
            ("conductivity", &self.conductivity),
            ("psi", &self.psi),
        ] {
            if builtins::lookup(id).is_none() {
                return Err(invalid(
                    key,
                    format!("unknown expression id `{id}` (known: {})", builtins::IDS.join(", ")),
                ));
            }
        }
        let positive = [("T", self.t), ("sigma", self.sigma), ("mesh_h", self.mesh_h)];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(key, format!("must be positive, got {v}")));
            }
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(invalid("alpha", format!("must be non-negative, got {}", self.alpha)));
        }
        if self.j == Truncation::Fixed(0) {
            return Err(invalid("J", "must be at least 1"));
        }
        if self.n_list.is_empty() {
            return Err(invalid("n_list", "must not be empty"));
        }
        if self.n_list.contains(&0) || self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("n_list", "must be positive and strictly ascending"));
        }
        if self.seeds.is_empty() {
            return Err(invalid("seeds", "must not be empty"));
        }
        if self.heat_steps == Some(0) {
            return Err(invalid("heat_steps", "must be at least 1"));
        }
        if self.data_refinement == 0 {
            return Err(invalid("data_refinement", "must be at least 1"));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(invalid("gamma", format!("must lie in (0,1), got {}", self.gamma)));
        }
        if self.study_n == Some(0) {
            return Err(invalid("study_n", "must be positive"));
        }
        if self.interval_draws < 100 {
            return Err(invalid("interval_draws", "must be at least 100"));
        }
        if self.samples == 0 {
            return Err(invalid("samples", "must be at least 1"));
        }
        Ok(())
    }

    /// Sample size for coverage, cross-section and posterior export.
    pub fn study_n(&self) -> usize {
        self.study_n
            .unwrap_or_else(|| *self.n_list.last().expect("validated non-empty"))
    }

    /// Truncation level used for target sample size `n`.
    pub fn truncation_for(&self, n: usize) -> usize {
        match self.j {
            Truncation::Fixed(j) => j,
            Truncation::Auto => default_truncation(n, self.alpha, 2),
        }
    }

    /// Largest truncation level any experiment of this config needs.
    pub fn max_truncation(&self) -> usize {
        self.n_list
            .iter()
            .chain(self.study_n.iter())
            .map(|&n| self.truncation_for(n))
            .max()
            .expect("validated non-empty n_list")
    }

    /// Normalised `key = value` rendering; parsing it yields an equal config.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            writeln!(s, "{k} = {v}").expect("write to string");
        };
        match &self.domain {
            DomainSpec::RotatedEllipse { a, b, theta } => {
                put("domain", "rotated_ellipse".into());
                put("domain_a", format!("{a:?}"));
                put("domain_b", format!("{b:?}"));
                put("domain_theta", format!("{theta:?}"));
            }
            DomainSpec::UnitSquare => put("domain", "unit_square".into()),
            DomainSpec::UnitDisk => put("domain", "unit_disk".into()),
            DomainSpec::Polygon { vertices } => {
                put("domain", "polygon".into());
                let v: Vec<String> = vertices.iter().map(|p| format!("{:?} {:?}", p[0], p[1])).collect();
                put("polygon", v.join("; "));
            }
        }
        put("truth", self.truth.clone());
        put("conductivity", self.conductivity.clone());
        put("psi", self.psi.clone());
        put("T", format!("{:?}", self.t));
        put("sigma", format!("{:?}", self.sigma));
        put("alpha", format!("{:?}", self.alpha));
        put(
            "J",
            match self.j {
                Truncation::Fixed(j) => j.to_string(),
                Truncation::Auto => "auto".into(),
            },
        );
        put("n_list", join(&self.n_list));
        put("seeds", join(&self.seeds));
        put("mesh_h", format!("{:?}", self.mesh_h));
        put("heat_steps", self.heat_steps.map_or("auto".into(), |s| s.to_string()));
        put("data_refinement", self.data_refinement.to_string());
        put("gamma", format!("{:?}", self.gamma));
        put("replicates", self.replicates.to_string());
        if let Some(n) = self.study_n {
            put("study_n", n.to_string());
        }
        put("interval_draws", self.interval_draws.to_string());
        put("samples", self.samples.to_string());
        s
    }

    /// Hex SHA-256 of [`canonical`](Self::canonical). Output and cache paths do
    /// not enter the hash.
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_study_defaults() {
        let cfg = ExperimentConfig::parse("# nothing\n\n").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.study_n(), 1000);
    }

    #[test]
    fn parses_values_and_comments() {
        let cfg = ExperimentConfig::parse(
            "domain = unit_square  # square\nJ = auto\nn_list = 10, 20\nseeds = 7\nheat_steps = 50\n",
        )
        .unwrap();
        assert_eq!(cfg.domain, DomainSpec::UnitSquare);
        assert_eq!(cfg.j, Truncation::Auto);
        assert_eq!(cfg.n_list, vec![10, 20]);
        assert_eq!(cfg.seeds, vec![7]);
        assert_eq!(cfg.heat_steps, Some(50));
    }

    #[test]
    fn expression_aliases_share_a_hash() {
        let old = ExperimentConfig::parse("truth = f0_paper\nconductivity = s_paper\n").unwrap();
        let new = ExperimentConfig::parse("truth = gaussian_bump\nconductivity = gaussian_dip\n").unwrap();
        assert_eq!(old.truth, "gaussian_bump");
        assert_eq!(old.hash(), new.hash());
    }

    #[test]
    fn polygon_domain() {
        let cfg = ExperimentConfig::parse("domain = polygon\npolygon = 0 0; 2 0; 2 1; 0 1\n").unwrap();
        assert_eq!(
            cfg.domain,
            DomainSpec::Polygon {
                vertices: vec![[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.0]]
            }
        );
    }

    #[test]
    fn rejects_bad_input() {
        let cases = [
            "sigma 0.05",
            "bogus = 1",
            "T = 1\nT = 2",
            "sigma = -1",
            "n_list = 500, 100",
            "n_list =",
            "seeds =",
            "truth = nope",
            "gamma = 1.5",
            "domain = hexagon",
            "domain = unit_square\ndomain_a = 2",
            "J = 0",
            "mesh_h = abc",
        ];
        for text in cases {
            assert!(ExperimentConfig::parse(text).is_err(), "accepted {text:?}");
        }
        match ExperimentConfig::parse("\n\nbogus = 1") {
            Err(ConfigError::UnknownKey { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn canonical_round_trip_and_hash() {
        let cfg = ExperimentConfig {
            seeds: vec![3, 9],
            study_n: Some(250),
            ..Default::default()
        };
        let back = ExperimentConfig::parse(&cfg.canonical()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        assert_ne!(ExperimentConfig::default().hash(), cfg.hash());
        assert_eq!(cfg.hash().len(), 64);
    }

    #[test]
    fn missing_file_names_the_path() {
        let err = ExperimentConfig::from_file(Path::new("/no/such/dir/x.cfg")).unwrap_err();
        assert!(err.to_string().contains("/no/such/dir/x.cfg"));
    }
}
