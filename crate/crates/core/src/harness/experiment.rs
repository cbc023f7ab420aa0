//! Building problems from configurations and running them to trace CSVs.

use std::fs::File;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::harness::config::{
    inverse_square_count, Builtin, DatasetFormat, EpsHatSetting, InnerIterations, Model, ProblemSource, RunConfig,
};
use crate::ipc::{
    compute_eps_hat, feasibility_restore_with, required_t, run_ipc, IpcConfig, Restoration, RestoreOptions,
};
use crate::library::data::{load_csv, load_libsvm, load_libsvm_with_dim, Dataset};
use crate::library::fairness::{build_fairness_problem, fairness_start, FairnessSpec};
use crate::library::neyman_pearson::{build_neyman_pearson, NeymanPearsonSpec};
use crate::library::simple::{build_simple_example_with, SimpleExampleSpec};
use crate::library::synthetic::{generate_synthetic, SyntheticKind};
use crate::library::toy::build_double_well;
use crate::linalg::Vector;
use crate::problem::{validate_problem, ConstrainedProblem, Slater, ValidationReport};
use crate::prox::ProxCenter;
use crate::report::Usage;
use crate::stationarity::{measure, MeterConfig, StationarityReport};
use crate::stochastic::{stochastic_step, QueueState};

pub const CSV_HEADER: [&str; 7] = [
    "iter",
    "data_passes",
    "wall_seconds",
    "f_value",
    "g_value",
    "oracle_Fgap_bound",
    "stationarity_estimate",
];

/// One CSV row; absent values are written as empty cells.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub data_passes: f64,
    pub wall_seconds: f64,
    pub f_value: f64,
    pub g_value: Option<f64>,
    pub oracle_fgap_bound: Option<f64>,
    pub stationarity_estimate: Option<f64>,
}

/// A problem with its default starting point.
#[derive(Debug, Clone)]
pub struct Instance {
    pub problem: ConstrainedProblem,
    pub x0: Vector,
}

/// Solver parameters after filling in problem-dependent defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub rho: f64,
    pub rho_hat: f64,
    pub eps_hat: f64,
    pub outer: usize,
    /// `None` selects the switching oracle's theoretical count.
    pub inner: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct ExperimentSummary {
    pub output: PathBuf,
    pub rows: Vec<TraceRow>,
    pub resolved: Resolved,
    pub x_r: Vector,
    pub x_last: Vector,
    pub warnings: Vec<String>,
}

fn is_csv(path: &Path, format: Option<DatasetFormat>) -> bool {
    match format {
        Some(f) => f == DatasetFormat::Csv,
        None => path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")),
    }
}

fn load_one(path: &Path, cfg: &RunConfig, format: Option<DatasetFormat>) -> Result<Dataset> {
    let mut d = if is_csv(path, format) {
        load_csv(path, cfg.data.label_column.as_deref(), cfg.data.group_column.as_deref())?
    } else {
        load_libsvm(path)?
    };
    if let Some(k) = cfg.data.group_feature {
        if k > d.dim() {
            return Err(Error::Schema(format!(
                "group_feature {k} exceeds the dimension {} of {}",
                d.dim(),
                path.display()
            )));
        }
        let mask = (0..d.len()).map(|i| d.features.row_dense(i)[k - 1] != 0.0).collect();
        d.group_mask = Some(mask);
    }
    Ok(d)
}

/// Loads LIBSVM files to a common dimension.
fn load_all(paths: &[PathBuf], cfg: &RunConfig, format: Option<DatasetFormat>) -> Result<Vec<Dataset>> {
    let mut out: Vec<Dataset> = paths.iter().map(|p| load_one(p, cfg, format)).collect::<Result<_>>()?;
    let dim = out.iter().map(Dataset::dim).max().unwrap_or(0);
    for (d, p) in out.iter_mut().zip(paths) {
        if d.dim() < dim && !is_csv(p, format) {
            let mask = d.group_mask.take();
            *d = load_libsvm_with_dim(p, dim)?;
            d.group_mask = mask;
        }
    }
    Ok(out)
}

fn fairness_spec(cfg: &RunConfig) -> FairnessSpec {
    FairnessSpec {
        alpha: cfg.data.alpha,
        c: cfg.data.c,
        l1_radius: cfg.data.l1_radius,
    }
}

fn np_spec(cfg: &RunConfig) -> Result<NeymanPearsonSpec> {
    let k = cfg.data.np_classes;
    if k < 2 {
        return Err(Error::Config(format!("np_classes must be at least 2, got {k}")));
    }
    let r = match cfg.data.np_r.len() {
        1 => vec![cfg.data.np_r[0]; k - 1],
        n if n == k - 1 => cfg.data.np_r.clone(),
        n => {
            return Err(Error::Config(format!(
                "np_r has {n} values; give one or np_classes - 1 = {}",
                k - 1
            )))
        }
    };
    Ok(NeymanPearsonSpec {
        classes: k,
        r,
        radius: cfg.data.np_radius,
        alpha: cfg.data.alpha,
    })
}

/// Builds the configured problem and its starting point, applying the
/// `sigma_eps` / `rho_eps` overrides.
pub fn build_instance(cfg: &RunConfig) -> Result<Instance> {
    let (mut problem, default_x0) = match &cfg.source {
        ProblemSource::Builtin(Builtin::SimpleExample) => {
            let spec = SimpleExampleSpec {
                rho_eps: cfg.rho_eps.unwrap_or(SimpleExampleSpec::default().rho_eps),
            };
            (build_simple_example_with(spec)?, vec![0.0, 0.5])
        }
        ProblemSource::Builtin(Builtin::SyntheticFairness) => {
            let kind = SyntheticKind::Fairness {
                minority_fraction: cfg.data.synthetic_minority,
                separation: cfg.data.synthetic_separation,
                group_shift: cfg.data.synthetic_group_shift,
            };
            let seed = cfg.data.synthetic_seed.unwrap_or(cfg.seed);
            let d = generate_synthetic(cfg.data.synthetic_n, cfg.data.synthetic_d, seed, kind)?.into_single()?;
            let spec = fairness_spec(cfg);
            (build_fairness_problem(&d, &d, spec)?, fairness_start(d.dim(), &spec))
        }
        ProblemSource::Builtin(Builtin::SyntheticNeymanPearson) => {
            let spec = np_spec(cfg)?;
            let kind = SyntheticKind::NeymanPearson {
                classes: spec.classes,
                separation: cfg.data.synthetic_separation,
            };
            let seed = cfg.data.synthetic_seed.unwrap_or(cfg.seed);
            let classes = generate_synthetic(cfg.data.synthetic_n, cfg.data.synthetic_d, seed, kind)?.into_classes()?;
            let p = build_neyman_pearson(&classes, &spec)?;
            let dim = p.dim();
            (p, vec![0.0; dim])
        }
        ProblemSource::Builtin(Builtin::DoubleWell) => (build_double_well(), vec![2.0]),
        ProblemSource::Dataset {
            model: Model::Fairness,
            paths,
            format,
        } => {
            if paths.len() > 2 {
                return Err(Error::Config("a fairness dataset is 'train' or 'train,unlabeled'".into()));
            }
            let data = load_all(paths, cfg, *format)?;
            let spec = fairness_spec(cfg);
            let unlabeled = data.last().expect("at least one path");
            (build_fairness_problem(&data[0], unlabeled, spec)?, fairness_start(data[0].dim(), &spec))
        }
        ProblemSource::Dataset {
            model: Model::NeymanPearson,
            paths,
            format,
        } => {
            let data = load_all(paths, cfg, *format)?;
            let p = build_neyman_pearson(&data, &np_spec(cfg)?)?;
            let dim = p.dim();
            (p, vec![0.0; dim])
        }
    };
    let builtin_simple = cfg.source == ProblemSource::Builtin(Builtin::SimpleExample);
    match (cfg.sigma_eps, cfg.rho_eps) {
        (Some(s), r) => {
            let r = r.or(problem.slater().map(|s| s.rho_eps)).ok_or_else(|| {
                Error::Config("sigma_eps needs rho_eps for problems without built-in Slater constants".into())
            })?;
            problem = problem.with_slater(Slater::new(s, r)?);
        }
        (None, Some(_)) if !builtin_simple => {
            return Err(Error::Config(
                "rho_eps needs sigma_eps for problems without built-in Slater constants".into(),
            ))
        }
        _ => {}
    }
    let x0 = match &cfg.x0 {
        Some(x) if x.len() != problem.dim() => {
            return Err(Error::Dimension {
                expected: problem.dim(),
                got: x.len(),
            })
        }
        Some(x) => x.clone(),
        None => default_x0,
    };
    Ok(Instance { problem, x0 })
}

/// Fills `rho_hat` (default `2 rho`, or 1 when `rho = 0`), `eps_hat`, `T`
/// and `K`.
pub fn resolve(cfg: &RunConfig, inst: &Instance) -> Result<Resolved> {
    let p = &inst.problem;
    let rho = cfg.rho.unwrap_or(p.rho());
    let rho_hat = cfg.rho_hat.unwrap_or(if rho > 0.0 { 2.0 * rho } else { 1.0 });
    if !(rho_hat > rho) {
        return Err(Error::Modulus { rho_hat, rho });
    }
    let eps_hat = match cfg.eps_hat {
        EpsHatSetting::Value(e) => e,
        EpsHatSetting::Auto => {
            let s = p.slater().ok_or_else(|| {
                Error::Config("eps_hat = auto needs Slater constants; set sigma_eps and rho_eps".into())
            })?;
            compute_eps_hat(cfg.epsilon, p.lipschitz(), rho_hat, rho, p.diameter(), s.sigma_eps)?
        }
    };
    let outer = match cfg.t_override {
        Some(t) => t,
        None => {
            let f_lb = p
                .f_lb()
                .ok_or_else(|| Error::Config("T cannot be derived without a lower bound on f; set T".into()))?;
            required_t(p.objective_value(&inst.x0), f_lb, cfg.epsilon, rho_hat, rho)?
        }
    };
    let inner = match cfg.inner {
        InnerIterations::Fixed(k) => Some(k),
        InnerIterations::InverseSquare => Some(inverse_square_count(eps_hat)),
        InnerIterations::Theory => None,
    };
    if cfg.baseline && inner.is_none() {
        return Err(Error::Config("baseline runs need a numeric K".into()));
    }
    Ok(Resolved {
        rho,
        rho_hat,
        eps_hat,
        outer,
        inner,
    })
}

pub fn ipc_config(cfg: &RunConfig, r: &Resolved) -> IpcConfig {
    let mut ic = IpcConfig::new(cfg.epsilon, r.rho_hat);
    ic.delta = cfg.delta;
    ic.assumed_rho = Some(r.rho);
    ic.t_override = Some(r.outer);
    ic.eps_hat_override = Some(r.eps_hat);
    ic.oracle = cfg.oracle;
    ic.k_override = r.inner;
    ic.seed = cfg.seed;
    ic.stationarity_every = cfg.stationarity_every;
    ic.meter_eps = cfg.meter_eps;
    ic.meter_budget_multiplier = cfg.meter_budget;
    ic.output_range = cfg.output_range;
    ic
}

/// Runs the configured experiment and returns the rows without writing them.
pub fn run_trace(cfg: &RunConfig) -> Result<ExperimentSummary> {
    let inst = build_instance(cfg)?;
    let resolved = resolve(cfg, &inst)?;
    if cfg.baseline {
        let k = resolved.inner.expect("checked in resolve");
        let (rows, x_last) = run_baseline(&inst.problem, &inst.x0, resolved.outer, k, cfg.seed)?;
        return Ok(ExperimentSummary {
            output: cfg.output_path(),
            rows,
            resolved,
            x_r: x_last.clone(),
            x_last,
            warnings: Vec::new(),
        });
    }
    let out = run_ipc(&inst.problem, &inst.x0, &ipc_config(cfg, &resolved))?;
    let rows = out
        .trace
        .entries
        .iter()
        .map(|e| TraceRow {
            iter: e.t,
            data_passes: e.data_passes,
            wall_seconds: e.wall_seconds,
            f_value: e.f_value,
            g_value: e.g_value,
            oracle_fgap_bound: e.oracle.as_ref().and_then(|o| o.f_gap_bound),
            stationarity_estimate: e.stationarity,
        })
        .collect();
    Ok(ExperimentSummary {
        output: cfg.output_path(),
        rows,
        resolved,
        x_r: out.x_r,
        x_last: out.trace.x_last,
        warnings: out.trace.warnings,
    })
}

/// Runs the experiment and writes its trace CSV.
pub fn run_experiment(cfg: &RunConfig) -> Result<ExperimentSummary> {
    let summary = run_trace(cfg)?;
    write_trace_csv(&summary.output, &summary.rows)?;
    Ok(summary)
}

/// The stochastic method applied directly to the original problem for `T K`
/// iterations; row `t` reports the average of the first `t K` iterates.
pub fn run_baseline(
    p: &ConstrainedProblem,
    x0: &[f64],
    outer: usize,
    k: usize,
    seed: u64,
) -> Result<(Vec<TraceRow>, Vector)> {
    let start = Instant::now();
    let horizon = outer
        .checked_mul(k)
        .ok_or_else(|| Error::Config("T K overflows".into()))?;
    if !p.domain().contains(x0, 1e-9) {
        return Err(Error::Config("x0 must be a point of the domain".into()));
    }
    let m = p.num_constraints();
    let center = ProxCenter::unshifted(x0.to_vec());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = QueueState::new(m, horizon);
    let mut z = x0.to_vec();
    let mut sum = vec![0.0; z.len()];
    let mut avg = z.clone();
    let sizes = p.data_sizes();
    let mut usage = Usage {
        samples: vec![0; m + 1],
        ..Default::default()
    };
    let mut rows = vec![TraceRow {
        iter: 0,
        data_passes: 0.0,
        wall_seconds: start.elapsed().as_secs_f64(),
        f_value: p.objective_value(x0),
        g_value: p.constraint_value(x0),
        oracle_fgap_bound: None,
        stationarity_estimate: None,
    }];
    for t in 1..=outer {
        for _ in 0..k {
            for (s, zi) in sum.iter_mut().zip(&z) {
                *s += zi;
            }
            let (z_next, q_next) = stochastic_step(p, &center, &z, &q, &mut rng)?;
            z = z_next;
            q = q_next;
            for s in usage.samples.iter_mut() {
                *s += 1;
            }
        }
        let n = (t * k) as f64;
        avg = sum.iter().map(|s| s / n).collect();
        rows.push(TraceRow {
            iter: t,
            data_passes: usage.data_passes(&sizes),
            wall_seconds: start.elapsed().as_secs_f64(),
            f_value: p.objective_value(&avg),
            g_value: p.constraint_value(&avg),
            oracle_fgap_bound: None,
            stationarity_estimate: None,
        });
    }
    Ok((rows, avg))
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_trace_csv(path: &Path, rows: &[TraceRow]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let mut w = csv::Writer::from_writer(File::create(path)?);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.iter.to_string(),
            r.data_passes.to_string(),
            r.wall_seconds.to_string(),
            r.f_value.to_string(),
            cell(r.g_value),
            cell(r.oracle_fgap_bound),
            cell(r.stationarity_estimate),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a trace CSV back, checking the header.
pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(Error::Schema(format!("unexpected header {header:?}")));
    }
    let num = |s: &str, line: usize| -> Result<f64> {
        s.parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("invalid number '{s}'"),
        })
    };
    let opt = |s: &str, line: usize| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            num(s, line).map(Some)
        }
    };
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != CSV_HEADER.len() {
            return Err(Error::Schema(format!("line {line} has {} fields", rec.len())));
        }
        rows.push(TraceRow {
            iter: rec[0].parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("invalid iteration '{}'", &rec[0]),
            })?,
            data_passes: num(&rec[1], line)?,
            wall_seconds: num(&rec[2], line)?,
            f_value: num(&rec[3], line)?,
            g_value: opt(&rec[4], line)?,
            oracle_fgap_bound: opt(&rec[5], line)?,
            stationarity_estimate: opt(&rec[6], line)?,
        });
    }
    Ok(rows)
}

/// Feasibility restoration from the configured starting point with
/// tolerance `epsilon^2`.
pub fn feascheck(cfg: &RunConfig) -> Result<Restoration> {
    let inst = build_instance(cfg)?;
    let opts = RestoreOptions {
        rho_hat: cfg.rho_hat,
        k_override: cfg.restore_k,
    };
    feasibility_restore_with(&inst.problem, &inst.x0, cfg.epsilon, cfg.restore_budget, &opts)
}

/// Comma- or whitespace-separated coordinates.
pub fn read_point(path: &Path) -> Result<Vector> {
    let text = std::fs::read_to_string(path)?;
    crate::harness::config::parse_list(&text, "point")
}

/// Stationarity meter at `x` with the configured `rho_hat` and `meter_eps`
/// (default `epsilon / 10`).
pub fn measure_point(cfg: &RunConfig, x: &[f64]) -> Result<StationarityReport> {
    let inst = build_instance(cfg)?;
    let p = &inst.problem;
    if x.len() != p.dim() {
        return Err(Error::Dimension {
            expected: p.dim(),
            got: x.len(),
        });
    }
    let rho = cfg.rho.unwrap_or(p.rho());
    let rho_hat = cfg.rho_hat.unwrap_or(if rho > 0.0 { 2.0 * rho } else { 1.0 });
    let mc = MeterConfig {
        rho_hat,
        assumed_rho: Some(rho),
        eps_meter: cfg.meter_eps.unwrap_or(cfg.epsilon / 10.0),
        budget_multiplier: cfg.meter_budget,
        k_base: None,
    };
    measure(p, x, &mc)
}

pub fn validate(cfg: &RunConfig) -> Result<ValidationReport> {
    let inst = build_instance(cfg)?;
    Ok(validate_problem(&inst.problem, cfg.validate_samples, cfg.seed))
}
