//! Flat `key = value` run configurations.
//!
//! Blank lines and lines starting with `#` are ignored, as is anything after
//! ` #` on a line. Keys may appear once. The schema is documented in the
//! README.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::ipc::{OracleKind, OutputIndexRange};
use crate::linalg::Vector;

/// Environment variable naming the directory for trace CSVs whose path is
/// not absolute.
pub const OUTPUT_DIR_ENV: &str = "IPC_OUTPUT_DIR";

pub const KNOWN_KEYS: &[&str] = &[
    "problem",
    "dataset",
    "dataset_format",
    "model",
    "label_column",
    "group_column",
    "group_feature",
    "c",
    "alpha",
    "l1_radius",
    "np_classes",
    "np_r",
    "np_radius",
    "synthetic_n",
    "synthetic_d",
    "synthetic_minority",
    "synthetic_separation",
    "synthetic_group_shift",
    "synthetic_seed",
    "epsilon",
    "delta",
    "rho_hat",
    "rho",
    "eps_hat",
    "T",
    "K",
    "oracle",
    "baseline",
    "seed",
    "output",
    "output_range",
    "stationarity_every",
    "meter_eps",
    "meter_budget",
    "sigma_eps",
    "rho_eps",
    "x0",
    "restore_budget",
    "restore_K",
    "validate_samples",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    SimpleExample,
    SyntheticFairness,
    SyntheticNeymanPearson,
    DoubleWell,
}

impl Builtin {
    pub fn name(self) -> &'static str {
        match self {
            Self::SimpleExample => "simple_example",
            Self::SyntheticFairness => "synthetic_fairness",
            Self::SyntheticNeymanPearson => "synthetic_neyman_pearson",
            Self::DoubleWell => "double_well",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "simple_example" => Ok(Self::SimpleExample),
            "synthetic_fairness" => Ok(Self::SyntheticFairness),
            "synthetic_neyman_pearson" => Ok(Self::SyntheticNeymanPearson),
            "double_well" => Ok(Self::DoubleWell),
            _ => Err(Error::Config(format!(
                "unknown builtin problem '{s}' (expected simple_example, synthetic_fairness, synthetic_neyman_pearson or double_well)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Fairness,
    NeymanPearson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    Libsvm,
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSource {
    Builtin(Builtin),
    /// One file for a fairness model with the same data for both sums, two
    /// for `train,unlabeled`; one file per class for Neyman–Pearson.
    Dataset {
        model: Model,
        paths: Vec<PathBuf>,
        format: Option<DatasetFormat>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsHatSetting {
    Value(f64),
    /// Computed from the Slater constants.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerIterations {
    Fixed(usize),
    /// `ceil(1/eps_hat^2)` once `eps_hat` is known.
    InverseSquare,
    /// The switching oracle's theoretical count.
    Theory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataOptions {
    pub label_column: Option<String>,
    pub group_column: Option<String>,
    /// 1-based feature index; a nonzero value marks a minority row.
    pub group_feature: Option<usize>,
    pub c: f64,
    pub alpha: f64,
    pub l1_radius: f64,
    pub np_classes: usize,
    pub np_r: Vec<f64>,
    pub np_radius: f64,
    pub synthetic_n: usize,
    pub synthetic_d: usize,
    pub synthetic_minority: f64,
    pub synthetic_separation: f64,
    pub synthetic_group_shift: f64,
    pub synthetic_seed: Option<u64>,
}

impl Default for DataOptions {
    fn default() -> Self {
        Self {
            label_column: None,
            group_column: None,
            group_feature: None,
            c: 0.2,
            alpha: 2.0,
            l1_radius: 20.0,
            np_classes: 3,
            np_r: vec![1.5],
            np_radius: 5.0,
            synthetic_n: 2000,
            synthetic_d: 20,
            synthetic_minority: 0.3,
            synthetic_separation: 1.0,
            synthetic_group_shift: 0.0,
            synthetic_seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Used for the default output file name.
    pub name: String,
    pub source: ProblemSource,
    pub data: DataOptions,
    pub epsilon: f64,
    pub delta: f64,
    pub rho_hat: Option<f64>,
    pub rho: Option<f64>,
    pub eps_hat: EpsHatSetting,
    pub t_override: Option<usize>,
    pub inner: InnerIterations,
    pub oracle: OracleKind,
    pub baseline: bool,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub output_range: OutputIndexRange,
    pub stationarity_every: Option<usize>,
    pub meter_eps: Option<f64>,
    pub meter_budget: f64,
    pub sigma_eps: Option<f64>,
    pub rho_eps: Option<f64>,
    pub x0: Option<Vector>,
    pub restore_budget: usize,
    pub restore_k: Option<usize>,
    pub validate_samples: usize,
}

/// `ceil(1/eps_hat^2)`, ignoring rounding noise just above an integer.
pub fn inverse_square_count(eps_hat: f64) -> usize {
    let v = 1.0 / (eps_hat * eps_hat);
    let r = v.round();
    let k = if (v - r).abs() <= 1e-9 * v { r } else { v.ceil() };
    (k as usize).max(1)
}

impl RunConfig {
    /// `K` when it is known without the problem; `None` for the theoretical
    /// count or an `auto` `eps_hat`.
    pub fn inner_iterations(&self) -> Option<usize> {
        match self.inner {
            InnerIterations::Fixed(k) => Some(k),
            _ => None,
        }
    }

    /// The trace CSV path: `output` if set, else `<name>.csv`; relative paths
    /// are placed under `$IPC_OUTPUT_DIR` when it is set.
    pub fn output_path(&self) -> PathBuf {
        let p = self
            .output
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("{}.csv", self.name)));
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(dir) if p.is_relative() && !dir.is_empty() => PathBuf::from(dir).join(p),
            _ => p,
        }
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    let mut cfg = parse_config_named(&text, Some(path), &name)?;
    // dataset paths are relative to the config file
    if let ProblemSource::Dataset { paths, .. } = &mut cfg.source {
        let base = path.parent().unwrap_or(Path::new(""));
        for p in paths.iter_mut() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
    Ok(cfg)
}

/// Parses a configuration held in memory; the run is named after the problem.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_named(text, None, "")
}

fn parse_config_named(text: &str, origin: Option<&Path>, name: &str) -> Result<RunConfig> {
    let kv = parse_pairs(text, origin)?;
    let mut r = Reader { kv };
    let problem = r.take("problem");
    let dataset = r.take("dataset");
    let model = r.take("model");
    let format = r.take("dataset_format");
    let source = match (problem, dataset) {
        (Some(_), Some(_)) => {
            return Err(Error::Config(
                "both 'problem' and 'dataset' are set; a run needs exactly one problem source".into(),
            ))
        }
        (None, None) => return Err(Error::Config("missing problem: set 'problem' or 'dataset'".into())),
        (Some(p), None) => {
            if model.is_some() {
                return Err(Error::Config("'model' applies to 'dataset' runs only".into()));
            }
            if format.is_some() {
                return Err(Error::Config("'dataset_format' applies to 'dataset' runs only".into()));
            }
            ProblemSource::Builtin(Builtin::parse(&p)?)
        }
        (None, Some(d)) => {
            let model = match model.as_deref() {
                Some("fairness") => Model::Fairness,
                Some("neyman_pearson") => Model::NeymanPearson,
                Some(m) => {
                    return Err(Error::Config(format!(
                        "unknown model '{m}' (expected fairness or neyman_pearson)"
                    )))
                }
                None => return Err(Error::Config("'dataset' needs 'model'".into())),
            };
            let format = match format.as_deref() {
                None => None,
                Some("libsvm") => Some(DatasetFormat::Libsvm),
                Some("csv") => Some(DatasetFormat::Csv),
                Some(f) => return Err(Error::Config(format!("unknown dataset_format '{f}'"))),
            };
            let paths: Vec<PathBuf> = d.split(',').map(|s| PathBuf::from(s.trim())).collect();
            if paths.iter().any(|p| p.as_os_str().is_empty()) {
                return Err(Error::Config("empty path in 'dataset'".into()));
            }
            ProblemSource::Dataset { model, paths, format }
        }
    };

    let defaults = DataOptions::default();
    let data = DataOptions {
        label_column: r.take("label_column"),
        group_column: r.take("group_column"),
        group_feature: r.parse_opt("group_feature")?,
        c: r.parse_or("c", defaults.c)?,
        alpha: r.parse_or("alpha", defaults.alpha)?,
        l1_radius: r.parse_or("l1_radius", defaults.l1_radius)?,
        np_classes: r.parse_or("np_classes", defaults.np_classes)?,
        np_r: match r.take("np_r") {
            Some(s) => parse_list(&s, "np_r")?,
            None => defaults.np_r,
        },
        np_radius: r.parse_or("np_radius", defaults.np_radius)?,
        synthetic_n: r.parse_or("synthetic_n", defaults.synthetic_n)?,
        synthetic_d: r.parse_or("synthetic_d", defaults.synthetic_d)?,
        synthetic_minority: r.parse_or("synthetic_minority", defaults.synthetic_minority)?,
        synthetic_separation: r.parse_or("synthetic_separation", defaults.synthetic_separation)?,
        synthetic_group_shift: r.parse_or("synthetic_group_shift", defaults.synthetic_group_shift)?,
        synthetic_seed: r.parse_opt("synthetic_seed")?,
    };
    if data.group_column.is_some() && data.group_feature.is_some() {
        return Err(Error::Config("set at most one of 'group_column' and 'group_feature'".into()));
    }
    if data.group_feature == Some(0) {
        return Err(Error::Config("'group_feature' is a 1-based index".into()));
    }

    let eps_hat = match r.take("eps_hat").as_deref() {
        None => EpsHatSetting::Value(0.01),
        Some("auto") => EpsHatSetting::Auto,
        Some(s) => EpsHatSetting::Value(parse_value(s, "eps_hat")?),
    };
    if let EpsHatSetting::Value(e) = eps_hat {
        if !(e > 0.0) {
            return Err(Error::Config(format!("eps_hat must be positive, got {e}")));
        }
    }
    let baseline: bool = r.parse_or("baseline", false)?;
    let oracle = match r.take("oracle").as_deref() {
        None if baseline => OracleKind::Stochastic,
        None => OracleKind::Switching,
        Some("switching") if baseline => {
            return Err(Error::Config(
                "baseline runs use the stochastic method on the original problem; oracle = switching conflicts".into(),
            ))
        }
        Some("switching") => OracleKind::Switching,
        Some("stochastic") => OracleKind::Stochastic,
        Some(o) => return Err(Error::Config(format!("unknown oracle '{o}' (expected switching or stochastic)"))),
    };
    let inner = match r.take("K").as_deref() {
        Some("theory") if oracle == OracleKind::Stochastic => {
            return Err(Error::Config("K = theory is available for the switching oracle only".into()))
        }
        Some("theory") => InnerIterations::Theory,
        Some(s) => {
            let k: usize = parse_value(s, "K")?;
            if k == 0 {
                return Err(Error::Config("K must be at least 1".into()));
            }
            InnerIterations::Fixed(k)
        }
        None => match eps_hat {
            EpsHatSetting::Value(e) => InnerIterations::Fixed(inverse_square_count(e)),
            EpsHatSetting::Auto => InnerIterations::InverseSquare,
        },
    };
    let t_override: Option<usize> = r.parse_opt("T")?;
    if t_override == Some(0) {
        return Err(Error::Config("T must be at least 1".into()));
    }
    let epsilon = r.parse_or("epsilon", 0.1)?;
    if !(epsilon > 0.0) {
        return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
    }
    let delta = r.parse_or("delta", 0.1)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Config(format!("delta must lie in (0, 1), got {delta}")));
    }
    let rho_hat: Option<f64> = r.parse_opt("rho_hat")?;
    let rho: Option<f64> = r.parse_opt("rho")?;
    if let (Some(rh), Some(rr)) = (rho_hat, rho) {
        if !(rh > rr) {
            return Err(Error::Modulus { rho_hat: rh, rho: rr });
        }
    }
    if matches!(rho, Some(v) if !(v >= 0.0)) {
        return Err(Error::Config("rho must be nonnegative".into()));
    }
    let output_range = match r.take("output_range").as_deref() {
        None | Some("analysis") => OutputIndexRange::Analysis,
        Some("printed") => OutputIndexRange::Printed,
        Some(o) => return Err(Error::Config(format!("unknown output_range '{o}' (expected analysis or printed)"))),
    };
    let x0 = match r.take("x0") {
        Some(s) => Some(parse_list(&s, "x0")?),
        None => None,
    };
    let cfg = RunConfig {
        name: String::new(),
        source,
        data,
        epsilon,
        delta,
        rho_hat,
        rho,
        eps_hat,
        t_override,
        inner,
        oracle,
        baseline,
        seed: r.parse_or("seed", 0)?,
        output: r.take("output").map(PathBuf::from),
        output_range,
        stationarity_every: r.parse_opt("stationarity_every")?,
        meter_eps: r.parse_opt("meter_eps")?,
        meter_budget: r.parse_or("meter_budget", 4.0)?,
        sigma_eps: r.parse_opt("sigma_eps")?,
        rho_eps: r.parse_opt("rho_eps")?,
        x0,
        restore_budget: r.parse_or("restore_budget", 100)?,
        restore_k: r.parse_opt("restore_K")?,
        validate_samples: r.parse_or("validate_samples", 10_000)?,
    };
    let name = if name.is_empty() {
        match &cfg.source {
            ProblemSource::Builtin(b) => b.name().to_string(),
            ProblemSource::Dataset { model: Model::Fairness, .. } => "fairness".into(),
            ProblemSource::Dataset {
                model: Model::NeymanPearson,
                ..
            } => "neyman_pearson".into(),
        }
    } else {
        name.to_string()
    };
    Ok(RunConfig { name, ..cfg })
}

fn parse_pairs(text: &str, origin: Option<&Path>) -> Result<BTreeMap<String, String>> {
    let origin = origin.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("<config>"));
    let mut kv = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = match raw.find(" #") {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: origin.clone(),
            line: i + 1,
            message,
        };
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected 'key = value', got '{line}'")))?;
        let (k, v) = (k.trim(), v.trim());
        if !KNOWN_KEYS.contains(&k) {
            return Err(err(format!("unknown key '{k}'")));
        }
        if v.is_empty() {
            return Err(err(format!("key '{k}' has no value")));
        }
        if kv.insert(k.to_string(), v.to_string()).is_some() {
            return Err(err(format!("key '{k}' is set twice")));
        }
    }
    Ok(kv)
}

struct Reader {
    kv: BTreeMap<String, String>,
}

impl Reader {
    fn take(&mut self, key: &str) -> Option<String> {
        self.kv.remove(key)
    }

    fn parse_opt<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        self.take(key).map(|v| parse_value(&v, key)).transpose()
    }

    fn parse_or<T: std::str::FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        Ok(self.parse_opt(key)?.unwrap_or(default))
    }
}

fn parse_value<T: std::str::FromStr>(v: &str, key: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("invalid value '{v}' for '{key}'")))
}

/// Comma- or whitespace-separated numbers.
pub fn parse_list(s: &str, key: &str) -> Result<Vector> {
    let v: Vector = s
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| parse_value::<f64>(t, key))
        .collect::<Result<_>>()?;
    if v.is_empty() {
        return Err(Error::Config(format!("'{key}' is empty")));
    }
    Ok(v)
}
