//! Command-line front end: config resolution, dispatch, CSV and metadata
//! emission. The `ceo-rd` binary is a thin wrapper around [`run`].

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::classify::{self, BinaryCeoParams, ClassificationParams, RegionGrid};
use crate::dm_ceo::{self, BaConfig};
use crate::error::{Error, Result};
use crate::gauss_ba::{self, GaussBaConfig};
use crate::gauss_model::{GaussCeoModel, OmegaSet, SubsetSpec};
use crate::probcore::JointSourcePmf;
use crate::region::Permutation;
use crate::region_analytic::{self as ra, OmegaObjective, OmegaSolverConfig, RateBudget};

pub const THREADS_ENV: &str = "CEO_RD_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    DmRegion,
    GaussBaRegion,
    GaussDirectRegion,
    IbCurve,
    DetCheck,
    ClassifyBound,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::DmRegion => "dm-region",
            CommandKind::GaussBaRegion => "gauss-ba-region",
            CommandKind::GaussDirectRegion => "gauss-direct-region",
            CommandKind::IbCurve => "ib-curve",
            CommandKind::DetCheck => "det-check",
            CommandKind::ClassifyBound => "classify-bound",
        }
    }

    /// Config fields the command reads; anything else set is a usage error.
    fn fields(self) -> Vec<&'static str> {
        const COMMON: [&str; 4] = ["command", "out", "seed", "unit"];
        const BA: [&str; 4] = ["tol", "max_iter", "restarts", "u_card"];
        let own: &'static [&'static str] = match self {
            CommandKind::DmRegion => &["model", "example", "alpha", "beta", "p", "s1_grid", "s2_grid", "hull_out"],
            CommandKind::GaussBaRegion => &["model", "example", "dims", "s1_grid", "s2_grid"],
            CommandKind::GaussDirectRegion => &["model", "example", "dims", "rsum_grid", "tol", "max_iter"],
            CommandKind::IbCurve => &["model", "example", "dims", "r_grid"],
            CommandKind::DetCheck => &["model", "example", "dims", "omega", "ddet", "rates"],
            CommandKind::ClassifyBound => &["model", "example", "p", "r_grid", "s1_grid", "s2_grid"],
        };
        let ba: &'static [&'static str] = match self {
            CommandKind::DmRegion | CommandKind::GaussBaRegion | CommandKind::ClassifyBound => &BA,
            _ => &[],
        };
        [&COMMON[..], own, ba].concat()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    #[default]
    Bits,
    Nats,
}

impl Unit {
    pub fn suffix(self) -> &'static str {
        match self {
            Unit::Bits => "bits",
            Unit::Nats => "nats",
        }
    }

    /// Nats to this unit.
    pub fn from_nats(self, v: f64) -> f64 {
        match self {
            Unit::Bits => v / std::f64::consts::LN_2,
            Unit::Nats => v,
        }
    }

    pub fn to_nats(self, v: f64) -> f64 {
        match self {
            Unit::Bits => v * std::f64::consts::LN_2,
            Unit::Nats => v,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ExampleKind {
    /// Binary CEO source (--alpha, --beta).
    Binary,
    /// Four-class attribute source (--p).
    Classification,
    /// Seeded Gaussian network (--dims, --seed).
    Gauss,
}

/// Everything a run needs. Loaded from `--config` (JSON) and overridden
/// field by field by command-line flags. Rate-valued inputs are read in
/// `unit`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<CommandKind>,
    /// Model file: joint pmf JSON (discrete) or Gaussian model JSON.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub example: Option<ExampleKind>,
    #[arg(long, num_args = 2, value_names = ["A1", "A2"])]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// n_x n_0 n_1 n_2 for the Gaussian example.
    #[arg(long, num_args = 4, value_names = ["NX", "N0", "N1", "N2"])]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
    /// Count (default log grid), `lo:hi:step`, or comma list.
    #[arg(long, alias = "s1")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s1_grid: Option<String>,
    #[arg(long, alias = "s2")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s2_grid: Option<String>,
    /// `lo:hi:step` or comma list, in `unit`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_grid: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rsum_grid: Option<String>,
    /// Ω set JSON: {"omegas": [[[..]], ..]}.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<PathBuf>,
    /// Determinant distortion D_det > 0.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ddet: Option<f64>,
    #[arg(long, num_args = 1.., value_name = "R")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rates: Option<Vec<f64>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    /// Auxiliary cardinalities (discrete) or dimensions (Gaussian).
    #[arg(long, num_args = 2, value_names = ["U1", "U2"])]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u_card: Option<Vec<usize>>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Lower-hull facets as JSON.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hull_out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unit: Option<Unit>,
}

macro_rules! overlay {
    ($base:expr, $over:expr; $($f:ident),*) => {
        RunConfig { $($f: $over.$f.or($base.$f)),* }
    };
}

impl RunConfig {
    /// `over` wins wherever it sets a field.
    pub fn overlay(self, over: RunConfig) -> RunConfig {
        overlay!(self, over; command, model, example, alpha, beta, p, dims, s1_grid, s2_grid, r_grid, rsum_grid,
            omega, ddet, rates, tol, max_iter, restarts, u_card, out, hull_out, seed, unit)
    }

    pub fn from_json_file(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path).map_err(|e| Error::Usage(format!("config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Usage(format!("config {}: {e}", path.display())))
    }

    pub fn command(&self) -> Result<CommandKind> {
        self.command.ok_or_else(|| Error::Usage("no command given (subcommand or `command` in the config)".into()))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn unit(&self) -> Unit {
        self.unit.unwrap_or_default()
    }

    /// Checks that only fields the command reads are set and that exactly
    /// one input source is given.
    pub fn validate(&self) -> Result<()> {
        let cmd = self.command()?;
        let allowed = cmd.fields();
        if let Value::Object(m) = serde_json::to_value(self)? {
            for key in m.keys() {
                if !allowed.contains(&key.as_str()) {
                    return Err(Error::Usage(format!("field `{key}` does not apply to {}", cmd.name())));
                }
            }
        }
        match (&self.model, self.example) {
            (Some(_), Some(_)) => return Err(Error::Usage("fields `model` and `example` are mutually exclusive".into())),
            (None, None) if cmd != CommandKind::ClassifyBound => return Err(Error::Usage("one of `model` or `example` is required".into())),
            _ => {}
        }
        let want = match cmd {
            CommandKind::DmRegion => &[ExampleKind::Binary, ExampleKind::Classification][..],
            CommandKind::ClassifyBound => &[ExampleKind::Classification][..],
            _ => &[ExampleKind::Gauss][..],
        };
        if let Some(e) = self.example {
            if !want.contains(&e) {
                return Err(Error::Usage(format!("field `example`: {e:?} is not available for {}", cmd.name())));
            }
        }
        if let (Some(ExampleKind::Binary), Some(_)) = (self.example, self.p) {
            return Err(Error::Usage("field `p` belongs to the classification example".into()));
        }
        if self.example == Some(ExampleKind::Classification) && (self.alpha.is_some() || self.beta.is_some()) {
            return Err(Error::Usage("fields `alpha`/`beta` belong to the binary example".into()));
        }
        if self.model.is_some() && (self.alpha.is_some() || self.beta.is_some() || self.p.is_some() || self.dims.is_some()) {
            return Err(Error::Usage("example parameters given together with `model`".into()));
        }
        Ok(())
    }
}

#[derive(Parser, Debug)]
#[command(name = "ceo-rd", version, about = "Rate-distortion and information-bottleneck regions of the CEO problem")]
struct Cli {
    /// JSON run config; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Option<Cmd>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// BA sweep over (s1, s2) for a discrete source, both decoding orders.
    DmRegion(RunConfig),
    /// Gaussian BA sweep over (s1, s2).
    GaussBaRegion(RunConfig),
    /// Direct Ω optimization on a sum-rate grid.
    GaussDirectRegion(RunConfig),
    /// Centralized relevance-rate curve.
    IbCurve(RunConfig),
    /// Determinant constraint versus its log-loss counterpart for every subset.
    DetCheck(RunConfig),
    /// Misclassification bound against a symmetric rate.
    ClassifyBound(RunConfig),
}

/// A finished run: CSV table plus metadata extras.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub extra: serde_json::Map<String, Value>,
}

impl Table {
    fn new(header: Vec<String>) -> Table {
        Table { header, rows: Vec::new(), extra: serde_json::Map::new() }
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn num(v: f64) -> String {
    format!("{v}")
}

/// `N` (count, only where a default grid exists), `lo:hi:step` (inclusive)
/// or `a,b,c`.
pub fn parse_grid(spec: &str, field: &str, default_of_count: Option<fn(usize) -> Vec<f64>>) -> Result<Vec<f64>> {
    let bad = |why: &str| Error::Usage(format!("field `{field}`: {why} in `{spec}`"));
    let spec = spec.trim();
    let grid = if spec.contains(':') {
        let parts: Vec<f64> = spec.split(':').map(|s| s.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| bad("bad number"))?;
        let [lo, hi, step] = parts[..] else { return Err(bad("need lo:hi:step")) };
        if !(step > 0.0 && hi >= lo && lo.is_finite() && hi.is_finite()) {
            return Err(bad("need step > 0 and hi ≥ lo"));
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        if n > 1_000_000 {
            return Err(bad("too many points"));
        }
        (0..n).map(|i| lo + i as f64 * step).collect()
    } else if spec.contains(',') {
        spec.split(',').map(|s| s.trim().parse::<f64>()).collect::<std::result::Result<Vec<_>, _>>().map_err(|_| bad("bad number"))?
    } else if let (Ok(n), Some(f)) = (spec.parse::<usize>(), default_of_count) {
        if n == 0 {
            return Err(bad("empty grid"));
        }
        f(n)
    } else {
        vec![spec.parse::<f64>().map_err(|_| bad("bad number"))?]
    };
    if grid.is_empty() || grid.iter().any(|v| !v.is_finite()) {
        return Err(bad("grid values must be finite"));
    }
    Ok(grid)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Usage(format!("{what} {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Usage(format!("{what} {}: {e}", path.display())))
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn ba_config(cfg: &RunConfig) -> Result<BaConfig> {
    let d = BaConfig::default();
    Ok(BaConfig {
        u_card: pair_opt(&cfg.u_card)?,
        tol: cfg.tol.unwrap_or(d.tol),
        max_iter: cfg.max_iter.unwrap_or(d.max_iter),
        restarts: cfg.restarts.unwrap_or(d.restarts),
        seed: cfg.seed(),
    })
}

fn pair_opt(v: &Option<Vec<usize>>) -> Result<[Option<usize>; 2]> {
    match v.as_deref() {
        None => Ok([None, None]),
        Some([a, b]) => Ok([Some(*a), Some(*b)]),
        Some(_) => Err(Error::Usage("field `u_card` needs two values".into())),
    }
}

fn discrete_joint(cfg: &RunConfig) -> Result<JointSourcePmf> {
    if let Some(path) = &cfg.model {
        return read_json(path, "model");
    }
    match cfg.example {
        Some(ExampleKind::Binary) => {
            let a = cfg.alpha.clone().unwrap_or(vec![0.25, 0.25]);
            let [alpha1, alpha2] = a[..] else { return Err(Error::Usage("field `alpha` needs two values".into())) };
            classify::binary_ceo_joint(BinaryCeoParams { alpha1, alpha2, beta: cfg.beta.unwrap_or(0.25) })
        }
        _ => classify::classification_joint(ClassificationParams { p: cfg.p.unwrap_or(0.25) }),
    }
}

fn gauss_model(cfg: &RunConfig) -> Result<GaussCeoModel> {
    if let Some(path) = &cfg.model {
        return read_json(path, "model");
    }
    let d = cfg.dims.clone().unwrap_or(vec![3, 4, 4, 4]);
    let [nx, n0, n1, n2] = d[..] else { return Err(Error::Usage("field `dims` needs four values".into())) };
    classify::gauss_example_instance(cfg.seed(), nx, n0, n1, n2)
}

fn rate_cols(prefix: &str, k: usize, u: Unit) -> Vec<String> {
    (1..=k).map(|i| format!("{prefix}{i}_{}", u.suffix())).collect()
}

fn dm_region(cfg: &RunConfig) -> Result<Table> {
    let u = cfg.unit();
    let joint = discrete_joint(cfg)?;
    let ba = ba_config(cfg)?;
    let s1 = parse_grid(cfg.s1_grid.as_deref().unwrap_or("20"), "s1_grid", Some(dm_ceo::default_s1_grid))?;
    let s2 = parse_grid(cfg.s2_grid.as_deref().unwrap_or("20"), "s2_grid", Some(dm_ceo::default_s2_grid))?;
    let mut t = Table::new(
        ["source", "s1", "s2"].iter().map(|s| s.to_string()).chain(rate_cols("R", 2, u)).chain([format!("D_{}", u.suffix()), "iterations".into(), "converged".into()]).collect(),
    );
    let mut failed = Vec::new();
    let mut pts = [Vec::new(), Vec::new()];
    for (slot, perm) in [Permutation::Rd1, Permutation::Rd2].into_iter().enumerate() {
        let cells = dm_ceo::sweep(&joint, &s1, &s2, &ba, perm)?;
        for c in &cells {
            match &c.outcome {
                Ok(r) => {
                    let p = &r.point;
                    t.rows.push(vec![perm.label().into(), num(c.s.s1), num(c.s.s2), num(u.from_nats(p.rates[0])), num(u.from_nats(p.rates[1])), num(u.from_nats(p.value)), r.iterations.to_string(), r.converged.to_string()]);
                }
                Err(e) => failed.push(json!({"permutation": perm.label(), "s1": c.s.s1, "s2": c.s.s2, "error": e.to_string()})),
            }
        }
        pts[slot] = dm_ceo::sweep_points(&cells);
    }
    let anchors = dm_ceo::anchor_points(&joint)?;
    for p in &anchors {
        t.rows.push(vec!["anchor".into(), String::new(), String::new(), num(u.from_nats(p.rates[0])), num(u.from_nats(p.rates[1])), num(u.from_nats(p.value)), "0".into(), "true".into()]);
    }
    if let Some(path) = &cfg.hull_out {
        pts[0].extend(anchors);
        let hull = dm_ceo::assemble_region(&pts[0], &pts[1])?;
        fs::write(path, serde_json::to_string_pretty(&hull.to_json())? + "\n")?;
    }
    t.extra.insert("failed_cells".into(), Value::Array(failed));
    Ok(t)
}

fn gauss_ba_region(cfg: &RunConfig) -> Result<Table> {
    let u = cfg.unit();
    let model = gauss_model(cfg)?;
    let d = GaussBaConfig::default();
    let ba = GaussBaConfig {
        u_dims: pair_opt(&cfg.u_card)?,
        tol: cfg.tol.unwrap_or(d.tol),
        max_iter: cfg.max_iter.unwrap_or(d.max_iter),
        restarts: cfg.restarts.unwrap_or(d.restarts),
        seed: cfg.seed(),
    };
    let s1 = parse_grid(cfg.s1_grid.as_deref().unwrap_or("10"), "s1_grid", Some(dm_ceo::default_s1_grid))?;
    let s2 = parse_grid(cfg.s2_grid.as_deref().unwrap_or("10"), "s2_grid", Some(dm_ceo::default_s2_grid))?;
    let k = model.k();
    let mut t = Table::new(
        ["source", "s1", "s2"]
            .iter()
            .map(|s| s.to_string())
            .chain(rate_cols("R", k, u))
            .chain([format!("D_{}", u.suffix()), format!("Delta_{}", u.suffix()), "iterations".into(), "converged".into(), "floored_steps".into()])
            .collect(),
    );
    let perms: &[Permutation] = if k == 2 { &[Permutation::Rd1, Permutation::Rd2] } else { &[Permutation::Rd1] };
    let mut failed = Vec::new();
    for &perm in perms {
        for c in gauss_ba::sweep(&model, &s1, &s2, &ba, perm)? {
            match c.outcome {
                Ok(r) => {
                    let mut row = vec![perm.label().to_string(), num(c.s.s1), num(c.s.s2)];
                    row.extend(r.point.rates.iter().map(|&v| num(u.from_nats(v))));
                    row.extend([num(u.from_nats(r.point.value)), num(u.from_nats(r.relevance)), r.iterations.to_string(), r.converged.to_string(), r.floored_steps.to_string()]);
                    t.rows.push(row);
                }
                Err(e) => failed.push(json!({"permutation": perm.label(), "s1": c.s.s1, "s2": c.s.s2, "error": e.to_string()})),
            }
        }
    }
    t.extra.insert("failed_cells".into(), Value::Array(failed));
    Ok(t)
}

fn gauss_direct_region(cfg: &RunConfig) -> Result<Table> {
    let u = cfg.unit();
    let model = gauss_model(cfg)?;
    let d = OmegaSolverConfig::default();
    let solver = OmegaSolverConfig { tol: cfg.tol.unwrap_or(d.tol), max_iter: cfg.max_iter.unwrap_or(d.max_iter), ..d };
    let grid = parse_grid(cfg.rsum_grid.as_deref().unwrap_or("0:8:0.5"), "rsum_grid", None)?;
    let k = model.k();
    let mut t = Table::new(
        std::iter::once(format!("Rsum_{}", u.suffix()))
            .chain(rate_cols("R", k, u))
            .chain([format!("Delta_{}", u.suffix()), format!("D_{}", u.suffix()), "iterations".into(), "proj_grad_norm".into(), "converged".into()])
            .collect(),
    );
    let sols: Vec<Result<ra::OmegaSolution>> = grid.par_iter().map(|&r| optimize_sum(&model, u.to_nats(r), &solver)).collect();
    for (r, sol) in grid.iter().zip(sols) {
        let s = sol?;
        let mut row = vec![num(*r)];
        row.extend(s.rates.iter().map(|&v| num(u.from_nats(v))));
        row.extend([num(u.from_nats(s.relevance)), num(u.from_nats(s.distortion)), s.iterations.to_string(), num(s.proj_grad_norm), s.converged.to_string()]);
        t.rows.push(row);
    }
    Ok(t)
}

fn optimize_sum(model: &GaussCeoModel, total: f64, cfg: &OmegaSolverConfig) -> Result<ra::OmegaSolution> {
    if total < 0.0 {
        return Err(Error::Usage(format!("field `rsum_grid`: negative budget {total}")));
    }
    ra::optimize_omega(model, OmegaObjective::MaxRelevance, &RateBudget::SumRate(total), cfg)
}

fn ib_curve(cfg: &RunConfig) -> Result<Table> {
    let u = cfg.unit();
    let model = gauss_model(cfg)?;
    let grid = parse_grid(cfg.r_grid.as_deref().unwrap_or("0:8:0.25"), "r_grid", None)?;
    if grid.iter().any(|&r| r < 0.0) {
        return Err(Error::Usage("field `r_grid`: rates must be ≥ 0".into()));
    }
    let nats: Vec<f64> = grid.iter().map(|&r| u.to_nats(r)).collect();
    let mut t = Table::new(vec![format!("R_{}", u.suffix()), format!("Delta_{}", u.suffix())]);
    for (r, (_, delta)) in grid.iter().zip(ra::centralized_ib(&model, &nats)?) {
        t.rows.push(vec![num(*r), num(u.from_nats(delta))]);
    }
    Ok(t)
}

fn subset_label(s: &SubsetSpec) -> String {
    let m = s.in_set();
    if m.is_empty() {
        "{}".into()
    } else {
        format!("{{{}}}", m.iter().map(|k| (k + 1).to_string()).collect::<Vec<_>>().join(","))
    }
}

fn det_check(cfg: &RunConfig) -> Result<Table> {
    let u = cfg.unit();
    let model = gauss_model(cfg)?;
    let omega = match &cfg.omega {
        Some(p) => read_json::<OmegaSet>(p, "omega")?,
        None => OmegaSet::zeros(&model),
    };
    omega.check_admissible(&model)?;
    let ddet = cfg.ddet.ok_or_else(|| Error::Usage("field `ddet` is required".into()))?;
    let rates: Vec<f64> = cfg.rates.clone().unwrap_or(vec![0.0; model.k()]).iter().map(|&r| u.to_nats(r)).collect();
    if rates.len() != model.k() {
        return Err(Error::Usage(format!("field `rates`: need {} values", model.k())));
    }
    let d_log = ra::det_to_log_loss(model.nx(), ddet);
    let mut t = Table::new(vec![
        "subset".into(),
        "det_satisfied".into(),
        format!("det_slack_{}", u.suffix()),
        format!("D_log_{}", u.suffix()),
        "log_satisfied".into(),
        format!("log_slack_{}", u.suffix()),
    ]);
    let mut agree = true;
    for s in SubsetSpec::all(model.k()) {
        let det = ra::det_region_bound(&model, &omega, &s, &rates, ddet)?;
        let log_slack = ra::eval_rd_bound(&model, &omega, &s)?.slack(&rates, d_log);
        agree &= det.satisfied == (log_slack >= 0.0);
        t.rows.push(vec![
            subset_label(&s),
            det.satisfied.to_string(),
            num(u.from_nats(det.slack)),
            num(u.from_nats(d_log)),
            (log_slack >= 0.0).to_string(),
            num(u.from_nats(log_slack)),
        ]);
    }
    t.extra.insert("det_log_agree".into(), Value::Bool(agree));
    Ok(t)
}

fn classify_bound(cfg: &RunConfig) -> Result<Table> {
    let u = cfg.unit();
    let joint = match &cfg.model {
        Some(path) => read_json::<JointSourcePmf>(path, "model")?,
        None => classify::classification_joint(ClassificationParams { p: cfg.p.unwrap_or(0.25) })?,
    };
    let grid = parse_grid(cfg.r_grid.as_deref().unwrap_or("0:2:0.25"), "r_grid", None)?;
    if grid.iter().any(|&r| r < 0.0) {
        return Err(Error::Usage("field `r_grid`: rates must be ≥ 0".into()));
    }
    let region = RegionGrid {
        s1: parse_grid(cfg.s1_grid.as_deref().unwrap_or("20"), "s1_grid", Some(dm_ceo::default_s1_grid))?,
        s2: parse_grid(cfg.s2_grid.as_deref().unwrap_or("20"), "s2_grid", Some(dm_ceo::default_s2_grid))?,
    };
    let nats: Vec<f64> = grid.iter().map(|&r| u.to_nats(r)).collect();
    let curve = classify::bound_curve_for_joint(&joint, &nats, &region, &ba_config(cfg)?)?;
    let mut header = vec![format!("R_{}", u.suffix()), format!("D_{}", u.suffix())];
    if u == Unit::Bits {
        header.push("D_nats".into());
    }
    header.push("bound".into());
    let mut t = Table::new(header);
    for (r, b) in grid.iter().zip(curve) {
        let mut row = vec![num(*r), num(u.from_nats(b.d_star_nats))];
        if u == Unit::Bits {
            row.push(num(b.d_star_nats));
        }
        row.push(num(b.bound));
        t.rows.push(row);
    }
    Ok(t)
}

/// Runs a validated config on the current rayon pool.
pub fn dispatch(cfg: &RunConfig) -> Result<Table> {
    cfg.validate()?;
    match cfg.command()? {
        CommandKind::DmRegion => dm_region(cfg),
        CommandKind::GaussBaRegion => gauss_ba_region(cfg),
        CommandKind::GaussDirectRegion => gauss_direct_region(cfg),
        CommandKind::IbCurve => ib_curve(cfg),
        CommandKind::DetCheck => det_check(cfg),
        CommandKind::ClassifyBound => classify_bound(cfg),
    }
}

fn thread_cap() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Usage(format!("{THREADS_ENV}={v} is not a positive integer"))),
        },
    }
}

fn error_name(e: &Error) -> &'static str {
    match e {
        Error::InvalidPmf(_) => "InvalidPmf",
        Error::EmptyAxisSet => "EmptyAxisSet",
        Error::AxisOutOfRange { .. } => "AxisOutOfRange",
        Error::RepeatedAxis(_) => "RepeatedAxis",
        Error::ShapeMismatch(_) => "ShapeMismatch",
        Error::TooLarge(_) => "TooLarge",
        Error::InfinitePsi { .. } => "InfinitePsi",
        Error::NotMarkov(_) => "NotMarkov",
        Error::InvalidParam(_) => "InvalidParam",
        Error::OracleTooLarge { .. } => "OracleTooLarge",
        Error::Singular { .. } => "Singular",
        Error::InadmissibleOmega { .. } => "InadmissibleOmega",
        Error::InvalidModel(_) => "InvalidModel",
        Error::Diverged { .. } => "Diverged",
        Error::Usage(_) => "Usage",
        Error::Io(_) => "Io",
        Error::Json(_) => "Json",
    }
}

fn resolve(cli: Cli) -> Result<RunConfig> {
    let base = match &cli.config {
        Some(p) => RunConfig::from_json_file(p)?,
        None => RunConfig::default(),
    };
    let over = match cli.cmd {
        None => RunConfig::default(),
        Some(cmd) => {
            let (kind, mut c) = match cmd {
                Cmd::DmRegion(c) => (CommandKind::DmRegion, c),
                Cmd::GaussBaRegion(c) => (CommandKind::GaussBaRegion, c),
                Cmd::GaussDirectRegion(c) => (CommandKind::GaussDirectRegion, c),
                Cmd::IbCurve(c) => (CommandKind::IbCurve, c),
                Cmd::DetCheck(c) => (CommandKind::DetCheck, c),
                Cmd::ClassifyBound(c) => (CommandKind::ClassifyBound, c),
            };
            if base.command.is_some_and(|b| b != kind) {
                return Err(Error::Usage(format!("field `command`: config says {}, command line says {}", base.command.unwrap().name(), kind.name())));
            }
            c.command = Some(kind);
            c
        }
    };
    Ok(base.overlay(over))
}

fn execute(cfg: RunConfig) -> Result<()> {
    let started = SystemTime::now();
    let clock = Instant::now();
    cfg.validate()?;
    let threads = thread_cap()?;
    let table = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Usage(format!("{THREADS_ENV}: {e}")))?
            .install(|| dispatch(&cfg))?,
        None => dispatch(&cfg)?,
    };
    let body = table.to_csv()?;
    let config_json = serde_json::to_string(&cfg)?;
    let mut meta = json!({
        "command": cfg.command()?.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.seed(),
        "unit": cfg.unit().suffix(),
        "config": cfg,
        "config_sha256": sha256_hex(config_json.as_bytes()),
        "csv_sha256": sha256_hex(&body),
        "rows": table.rows.len(),
        "threads": threads.unwrap_or_else(rayon::current_num_threads),
        "started_unix_s": started.duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        "wall_time_s": clock.elapsed().as_secs_f64(),
    });
    if let Some(path) = &cfg.model {
        meta["model_sha256"] = Value::String(sha256_hex(&fs::read(path)?));
    }
    for (k, v) in table.extra {
        meta[k] = v;
    }
    match &cfg.out {
        Some(path) => {
            fs::write(path, &body)?;
            let mut side = path.clone().into_os_string();
            side.push(".meta.json");
            fs::write(PathBuf::from(side), serde_json::to_string_pretty(&meta)? + "\n")?;
        }
        None => {
            std::io::stdout().write_all(&body)?;
            eprintln!("{}", serde_json::to_string(&meta)?);
        }
    }
    Ok(())
}

/// Parses `args` (including the program name), runs, and returns the
/// process exit code: 0 on success, 2 on usage errors, 1 otherwise.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match resolve(cli).and_then(execute) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error[{}]: {e}", error_name(&e));
            if matches!(e, Error::Usage(_)) {
                2
            } else {
                1
            }
        }
    }
}
