//! Run configuration, error metrics, convergence sweeps, result files, and
//! the command-line driver behind the `schrotbc` binary.
//!
//! A run is described by a JSON [`RunConfig`] (or assembled from CLI flags),
//! resolved into the solver's domain/grid/scheme types, executed through
//! [`crate::evolve::run`], and written out as `errors.csv`, `summary.json`,
//! `timings.json`, and optional binary field snapshots.  Sweeps repeat a
//! run over a set of time grids and fit the convergence slope.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convquad::OneStepMethod;
use crate::evolve::{
    self, CoeffField, DomainSpec, Evolution, GridSpec, RunResult, SchemeSpec, TimeGrid,
};
use crate::exact::{profile_preset, ProfileEvaluator, ProfileFamily, ProfileVariant, TermShape};
use crate::tbc_maps::MapFamily;
use crate::{Error, Result};

/// Axial interval of the published protocols.
pub const PROTOCOL_X_SPAN: (f64, f64) = (-10.0, 10.0);
/// Final time of the published protocols.
pub const PROTOCOL_TMAX: f64 = 5.0;
/// Time samples of the published evolution protocols (step 1e-3).
pub const PROTOCOL_NT: usize = 5001;
/// Points per direction of the published 2D protocol.
pub const FULL_POINTS_2D: usize = 200;
/// Points per direction of the published 3D protocol.
pub const FULL_POINTS_3D: usize = 100;
/// Desk-scale points per direction in 2D.
pub const DESK_POINTS_2D: usize = 64;
/// Desk-scale points per direction in 3D.
pub const DESK_POINTS_3D: usize = 32;
/// Desk-scale default number of time samples.
pub const DESK_NT: usize = 257;

/// Desk-scale sweep sample counts `{2^8, ..., 2^12}`.
pub fn desk_sweep_nts() -> Vec<usize> {
    (8..=12).map(|k| 1usize << k).collect()
}

/// Full published sweep sample counts `{2^8, ..., 2^16}`.
pub fn full_sweep_nts() -> Vec<usize> {
    (8..=16).map(|k| 1usize << k).collect()
}

/// Physical domain block of a run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub x_l: f64,
    pub x_r: f64,
    pub half_widths: Vec<f64>,
    #[serde(default = "default_beta")]
    pub beta: f64,
}

fn default_beta() -> f64 {
    1.0
}

/// Grid sizes as points per direction (axial first).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub points: Vec<usize>,
}

/// Initial-profile block of a run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    /// Profile family label: `FCG` or `FHG`.
    pub family: String,
    /// Parameter-set label: `I` or `II`.
    pub variant: String,
    /// Carrier speed.
    #[serde(default = "default_c0")]
    pub c0: f64,
}

fn default_c0() -> f64 {
    4.0
}

/// Complete description of a simulation or sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Boundary-map label: `CQ`, `NP<order>`, `CP<order>`, or `HF`.
    pub scheme: String,
    /// One-step method label: `BDF1` or `TR`.
    pub method: String,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default)]
    pub domain: Option<DomainConfig>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default = "default_tmax")]
    pub tmax: f64,
    /// Time samples of a single run.
    #[serde(default)]
    pub nt: Option<usize>,
    /// Time-sample set of a convergence sweep.
    #[serde(default)]
    pub nt_set: Option<Vec<usize>>,
    pub profile: ProfileConfig,
    #[serde(default)]
    pub out_dir: Option<String>,
    /// Write a field snapshot every this many samples.
    #[serde(default)]
    pub snapshot_every: Option<usize>,
}

fn default_dim() -> usize {
    2
}

fn default_tmax() -> f64 {
    PROTOCOL_TMAX
}

/// Parses a boundary-map label.
pub fn parse_scheme(label: &str) -> Result<MapFamily> {
    let order_of = |digits: &str| -> Result<usize> {
        digits
            .parse::<usize>()
            .ok()
            .filter(|n| *n >= 1)
            .ok_or_else(|| Error::Config(format!("invalid approximation order in '{label}'")))
    };
    match label {
        "CQ" => Ok(MapFamily::Quadrature),
        "HF" => Ok(MapFamily::HighFrequency),
        _ => {
            if let Some(digits) = label.strip_prefix("NP") {
                Ok(MapFamily::SharedPade(order_of(digits)?))
            } else if let Some(digits) = label.strip_prefix("CP") {
                Ok(MapFamily::PerModePade(order_of(digits)?))
            } else {
                Err(Error::Config(format!(
                    "unknown scheme '{label}' (expected CQ, NP<order>, CP<order>, or HF)"
                )))
            }
        }
    }
}

/// Parses a one-step method label.
pub fn parse_method(label: &str) -> Result<OneStepMethod> {
    match label {
        "BDF1" => Ok(OneStepMethod::Bdf1),
        "TR" => Ok(OneStepMethod::Trapezoidal),
        _ => Err(Error::Config(format!(
            "unknown method '{label}' (expected BDF1 or TR)"
        ))),
    }
}

fn parse_family(label: &str) -> Result<ProfileFamily> {
    match label {
        "FCG" => Ok(ProfileFamily::ChirpedGaussian),
        "FHG" => Ok(ProfileFamily::HermiteGaussian),
        _ => Err(Error::Config(format!(
            "unknown profile family '{label}' (expected FCG or FHG)"
        ))),
    }
}

fn parse_variant(label: &str) -> Result<ProfileVariant> {
    match label {
        "I" => Ok(ProfileVariant::TypeI),
        "II" => Ok(ProfileVariant::TypeII),
        _ => Err(Error::Config(format!(
            "unknown profile variant '{label}' (expected I or II)"
        ))),
    }
}

/// A configuration resolved into solver types, ready to execute.
pub struct ResolvedRun {
    pub domain: DomainSpec,
    pub grid: GridSpec,
    pub scheme: SchemeSpec,
    pub evaluator: ProfileEvaluator,
    pub tmax: f64,
}

impl RunConfig {
    /// An unset configuration to be filled from CLI flags.
    pub fn empty() -> Self {
        Self {
            scheme: String::new(),
            method: String::new(),
            dim: 2,
            domain: None,
            grid: None,
            tmax: PROTOCOL_TMAX,
            nt: None,
            nt_set: None,
            profile: ProfileConfig {
                family: String::new(),
                variant: String::new(),
                c0: default_c0(),
            },
            out_dir: None,
            snapshot_every: None,
        }
    }

    /// Reads a configuration from a JSON file.
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Default points per direction for the configured dimension.
    fn default_points(&self) -> Vec<usize> {
        match self.dim {
            3 => vec![DESK_POINTS_3D; 3],
            _ => vec![DESK_POINTS_2D; 2],
        }
    }

    /// Validates the configuration and builds the solver inputs.
    pub fn resolve(&self) -> Result<ResolvedRun> {
        if self.dim != 2 && self.dim != 3 {
            return Err(Error::Config(format!(
                "dimension must be 2 or 3, got {}",
                self.dim
            )));
        }
        if self.scheme.is_empty() {
            return Err(Error::Config("no scheme given".into()));
        }
        if self.method.is_empty() {
            return Err(Error::Config("no method given".into()));
        }
        let family = parse_scheme(&self.scheme)?;
        let method = parse_method(&self.method)?;
        if self.dim == 3 && !matches!(family, MapFamily::SharedPade(_)) {
            return Err(Error::Config(format!(
                "scheme {} is not available in three dimensions (use NP<order>)",
                self.scheme
            )));
        }
        let scheme = SchemeSpec { family, method };

        let domain = match &self.domain {
            Some(d) => DomainSpec::new(self.dim, (d.x_l, d.x_r), d.half_widths.clone(), d.beta),
            None => DomainSpec::new(
                self.dim,
                PROTOCOL_X_SPAN,
                vec![std::f64::consts::PI; self.dim - 1],
                1.0,
            ),
        }
        .map_err(|e| Error::Config(e.to_string()))?;

        let points = match &self.grid {
            Some(g) => g.points.clone(),
            None => self.default_points(),
        };
        if points.len() != self.dim {
            return Err(Error::Config(format!(
                "grid lists {} sizes but the domain has {} directions",
                points.len(),
                self.dim
            )));
        }
        if points[0] < 5 {
            return Err(Error::Config(format!(
                "need at least 5 axial points, got {}",
                points[0]
            )));
        }
        let grid = GridSpec::new(points[0] - 1, points[1..].to_vec())
            .map_err(|e| Error::Config(e.to_string()))?;

        if self.profile.family.is_empty() || self.profile.variant.is_empty() {
            return Err(Error::Config("no profile given".into()));
        }
        if !self.profile.c0.is_finite() || self.profile.c0 <= 0.0 {
            return Err(Error::Config(format!(
                "carrier speed must be positive, got {}",
                self.profile.c0
            )));
        }
        let spec = profile_preset(
            parse_family(&self.profile.family)?,
            parse_variant(&self.profile.variant)?,
            self.profile.c0,
            self.dim,
        )
        .map_err(|e| Error::Config(e.to_string()))?;
        // every transverse carrier must be representable on the grid
        for term in spec.terms() {
            for (axis, &n) in grid.n_perp().iter().enumerate() {
                if term.wavenumber.unsigned_abs() as usize >= n / 2 {
                    return Err(Error::Config(format!(
                        "profile wavenumber {} does not fit a transverse grid of {} points \
                         on axis {}",
                        term.wavenumber, n, axis
                    )));
                }
            }
        }
        let evaluator = spec
            .evaluator(domain.half_widths())
            .map_err(|e| Error::Config(e.to_string()))?;

        if !self.tmax.is_finite() || self.tmax <= 0.0 {
            return Err(Error::Config(format!(
                "final time must be positive, got {}",
                self.tmax
            )));
        }
        if let Some(k) = self.snapshot_every {
            if k == 0 {
                return Err(Error::Config("snapshot cadence must be at least 1".into()));
            }
        }
        Ok(ResolvedRun {
            domain,
            grid,
            scheme,
            evaluator,
            tmax: self.tmax,
        })
    }
}

/// Walks the quadrature grid of an evolution, handing each point's flat
/// index, physical coordinates, and quadrature weight to `f`.
fn for_each_grid_point(evo: &Evolution, mut f: impl FnMut(usize, &[f64], f64)) {
    let xs = evo.axial_points();
    let ws = evo.axial_weights();
    match evo.domain().dim() {
        2 => {
            let p2 = evo.perp_points(0);
            let w2 = evo.perp_weight(0);
            let n2 = p2.len();
            for (i, (&x1, &w1)) in xs.iter().zip(&ws).enumerate() {
                for (j2, &x2) in p2.iter().enumerate() {
                    f(i * n2 + j2, &[x1, x2], w1 * w2);
                }
            }
        }
        _ => {
            let p2 = evo.perp_points(0);
            let p3 = evo.perp_points(1);
            let w23 = evo.perp_weight(0) * evo.perp_weight(1);
            let (n2, n3) = (p2.len(), p3.len());
            for (i, (&x1, &w1)) in xs.iter().zip(&ws).enumerate() {
                for (j2, &x2) in p2.iter().enumerate() {
                    for (j3, &x3) in p3.iter().enumerate() {
                        f(i * n2 * n3 + j2 * n3 + j3, &[x1, x2, x3], w1 * w23);
                    }
                }
            }
        }
    }
}

/// Quadrature of `|reference(t)|^2` over the evolution's grid.
pub fn reference_norm_sq(evo: &Evolution, reference: &ProfileEvaluator, t: f64) -> f64 {
    let mut acc = 0.0;
    for_each_grid_point(evo, |_, x, w| {
        acc += w * reference.eval(x, t).norm_sqr();
    });
    acc
}

/// Relative error of a coefficient field against the reference solution at
/// time `t`, normalized by the reference's initial norm.
pub fn relative_error(
    evo: &Evolution,
    field: &CoeffField,
    reference: &ProfileEvaluator,
    t: f64,
) -> Result<f64> {
    let values = evo.synthesize_field(field)?;
    let mut diff = 0.0;
    for_each_grid_point(evo, |idx, x, w| {
        diff += w * (values[idx] - reference.eval(x, t)).norm_sqr();
    });
    let denom = reference_norm_sq(evo, reference, 0.0);
    if denom <= 0.0 {
        return Err(Error::Contract(
            "reference initial data has zero norm on this grid".into(),
        ));
    }
    Ok((diff / denom).sqrt())
}

/// Least-squares slope of `log e` against `log dt`, excluding plateau
/// points.
///
/// Points with `e > 10 x min(e)` are kept; if fewer than two survive, all
/// points enter the fit.  Returns the slope and the per-point keep mask.
pub fn fit_slope(dts: &[f64], errors: &[f64]) -> Result<(f64, Vec<bool>)> {
    if dts.len() != errors.len() || dts.len() < 2 {
        return Err(Error::Contract(
            "slope fit needs matching dt and error lists with at least two entries".into(),
        ));
    }
    if dts.iter().chain(errors).any(|v| !v.is_finite() || *v <= 0.0) {
        return Err(Error::Contract(
            "slope fit needs positive finite step sizes and errors".into(),
        ));
    }
    let min = errors.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut keep: Vec<bool> = errors.iter().map(|e| *e > 10.0 * min).collect();
    if keep.iter().filter(|k| **k).count() < 2 {
        keep = vec![true; errors.len()];
    }
    let pairs: Vec<(f64, f64)> = dts
        .iter()
        .zip(errors)
        .zip(&keep)
        .filter(|(_, k)| **k)
        .map(|((d, e), _)| (d.ln(), e.ln()))
        .collect();
    let n = pairs.len() as f64;
    let mean_x = pairs.iter().map(|(x, _)| x).sum::<f64>() / n;
    let mean_y = pairs.iter().map(|(_, y)| y).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in &pairs {
        num += (x - mean_x) * (y - mean_y);
        den += (x - mean_x) * (x - mean_x);
    }
    if den == 0.0 {
        return Err(Error::Contract("slope fit needs distinct step sizes".into()));
    }
    Ok((num / den, keep))
}

/// One resolved time grid of a convergence sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub nt: usize,
    pub dt: f64,
    pub max_error: f64,
    #[serde(skip)]
    pub wall_seconds: f64,
}

/// Outcome of a convergence sweep.
#[derive(Debug, Clone)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
    pub slope: f64,
    /// Which points entered the slope fit.
    pub kept: Vec<bool>,
}

/// Runs the configuration once per entry of its time-sample set (in
/// parallel) and fits the convergence slope of the maximum errors.
pub fn convergence_sweep(config: &RunConfig) -> Result<SweepReport> {
    let nts = match &config.nt_set {
        Some(set) => set.clone(),
        None => desk_sweep_nts(),
    };
    if nts.len() < 3 {
        return Err(Error::Config(
            "a convergence sweep needs at least three time grids".into(),
        ));
    }
    if nts.iter().any(|nt| *nt < 2) {
        return Err(Error::Config(
            "sweep time grids need at least two samples each".into(),
        ));
    }
    config.resolve()?;
    let results: Vec<RunResult> = nts
        .par_iter()
        .map(|&nt| {
            let r = config.resolve()?;
            evolve::run(
                r.domain,
                r.grid,
                TimeGrid::new(r.tmax, nt)?,
                r.scheme,
                &r.evaluator,
            )
        })
        .collect::<Result<_>>()?;
    let points: Vec<SweepPoint> = nts
        .iter()
        .zip(&results)
        .map(|(&nt, res)| SweepPoint {
            nt,
            dt: config.tmax / (nt - 1) as f64,
            max_error: res.max_error,
            wall_seconds: res.wall_seconds,
        })
        .collect();
    let dts: Vec<f64> = points.iter().map(|p| p.dt).collect();
    let errs: Vec<f64> = points.iter().map(|p| p.max_error).collect();
    let (slope, kept) = fit_slope(&dts, &errs)?;
    if let Some(dir) = &config.out_dir {
        let root = PathBuf::from(dir);
        fs::create_dir_all(&root)?;
        for (&nt, res) in nts.iter().zip(&results) {
            let sub = root.join(format!("nt_{nt:06}"));
            fs::create_dir_all(&sub)?;
            write_errors_csv(&sub, res)?;
        }
        let summary = SweepSummary {
            config,
            points: &points,
            slope,
            kept: &kept,
        };
        write_json(&root.join("summary.json"), &summary)?;
        let timings = SweepTimings {
            per_point: nts
                .iter()
                .zip(&results)
                .map(|(&nt, r)| PointTiming {
                    nt,
                    wall_seconds: r.wall_seconds,
                })
                .collect(),
            total_seconds: results.iter().map(|r| r.wall_seconds).sum(),
        };
        write_json(&root.join("timings.json"), &timings)?;
    }
    Ok(SweepReport { points, slope, kept })
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    config: &'a RunConfig,
    points: &'a [SweepPoint],
    slope: f64,
    kept: &'a [bool],
}

#[derive(Serialize)]
struct PointTiming {
    nt: usize,
    wall_seconds: f64,
}

#[derive(Serialize)]
struct SweepTimings {
    per_point: Vec<PointTiming>,
    total_seconds: f64,
}

#[derive(Serialize)]
struct RunSummary<'a> {
    config: &'a RunConfig,
    nt: usize,
    dt: f64,
    max_error: f64,
    robin_residual: f64,
    trace_warning: bool,
}

#[derive(Serialize)]
struct RunTimings {
    wall_seconds: f64,
}

#[derive(Serialize)]
struct SnapshotMeta {
    step: usize,
    time: f64,
    dtype: &'static str,
    byte_order: &'static str,
    layout: &'static str,
    shape: Vec<usize>,
    axial_points: Vec<f64>,
    transverse_points: Vec<Vec<f64>>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Writes the `t,e,E` series with 17 significant digits per value.
pub fn write_errors_csv(dir: &Path, result: &RunResult) -> Result<()> {
    let mut text = String::from("t,e,E\n");
    for ((t, e), energy) in result.times.iter().zip(&result.errors).zip(&result.energy) {
        writeln!(text, "{t:.16e},{e:.16e},{energy:.16e}").expect("string write");
    }
    fs::write(dir.join("errors.csv"), text)?;
    Ok(())
}

fn write_snapshot(dir: &Path, j: usize, evo: &Evolution) -> Result<()> {
    let values = evo.synthesize()?;
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in &values {
        bytes.extend_from_slice(&(v.re as f32).to_le_bytes());
        bytes.extend_from_slice(&(v.im as f32).to_le_bytes());
    }
    fs::write(dir.join(format!("snapshot_{j:06}.bin")), bytes)?;
    let mut shape = vec![evo.grid().order() + 1];
    shape.extend_from_slice(evo.grid().n_perp());
    let transverse_points = (0..evo.grid().n_perp().len())
        .map(|axis| evo.perp_points(axis))
        .collect();
    let meta = SnapshotMeta {
        step: j,
        time: evo.current_time(),
        dtype: "complex64",
        byte_order: "little-endian",
        layout: "axial-major",
        shape,
        axial_points: evo.axial_points(),
        transverse_points,
    };
    write_json(&dir.join(format!("snapshot_{j:06}.json")), &meta)
}

/// Executes a single run, writing result files when an output directory is
/// configured.
pub fn execute_run(config: &RunConfig) -> Result<RunResult> {
    let r = config.resolve()?;
    let nt = config.nt.unwrap_or(DESK_NT);
    if nt == 0 {
        return Err(Error::Config("need at least one time sample".into()));
    }
    let time = TimeGrid::new(r.tmax, nt).map_err(|e| Error::Config(e.to_string()))?;
    let out = match &config.out_dir {
        Some(dir) => {
            let path = PathBuf::from(dir);
            fs::create_dir_all(&path)?;
            Some(path)
        }
        None => None,
    };
    let cadence = config.snapshot_every;
    let result = evolve::run_observed(r.domain, r.grid, time, r.scheme, &r.evaluator, |j, evo| {
        if let (Some(dir), Some(k)) = (&out, cadence) {
            if j % k == 0 {
                write_snapshot(dir, j, evo)?;
            }
        }
        Ok(())
    })?;
    if let Some(dir) = &out {
        write_errors_csv(dir, &result)?;
        let summary = RunSummary {
            config,
            nt,
            dt: if nt > 1 { r.tmax / (nt - 1) as f64 } else { 0.0 },
            max_error: result.max_error,
            robin_residual: result.robin_residual,
            trace_warning: result.trace_warning,
        };
        write_json(&dir.join("summary.json"), &summary)?;
        write_json(
            &dir.join("timings.json"),
            &RunTimings {
                wall_seconds: result.wall_seconds,
            },
        )?;
    }
    Ok(result)
}

/// Maps an error to the process exit code of the CLI contract.
pub fn exit_code_for(error: &Error) -> i32 {
    match error {
        Error::Unstable { .. } | Error::NonFinite { .. } => 3,
        Error::Config(_) | Error::Contract(_) | Error::Json(_) => 2,
        _ => 1,
    }
}

#[derive(Parser)]
#[command(
    name = "schrotbc",
    version,
    about = "Schrödinger solver on a periodic strip/duct with transparent walls"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one simulation and record its error evolution
    Run(RunArgs),
    /// Run a convergence sweep over a set of time grids
    Sweep(RunArgs),
    /// Print a standard parameter table (I, II, III, IV, or V)
    Presets(PresetArgs),
}

#[derive(Args)]
struct PresetArgs {
    /// Which table to print
    #[arg(long)]
    table: String,
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration file; flags below override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// Boundary-map label: CQ, NP<order>, CP<order>, or HF
    #[arg(long)]
    scheme: Option<String>,
    /// One-step method: BDF1 or TR
    #[arg(long)]
    method: Option<String>,
    /// Rational approximation order, applied to an NP/CP scheme label
    #[arg(long)]
    pade_order: Option<usize>,
    /// Number of time samples
    #[arg(long)]
    nt: Option<usize>,
    /// Comma-separated time-sample counts for sweeps
    #[arg(long)]
    nt_set: Option<String>,
    /// Final time
    #[arg(long)]
    tmax: Option<f64>,
    /// Points per direction
    #[arg(long)]
    grid: Option<usize>,
    /// Profile label: fcg-i, fcg-ii, fhg-i, or fhg-ii
    #[arg(long)]
    profile: Option<String>,
    /// Carrier speed of the profile
    #[arg(long)]
    c0: Option<f64>,
    /// Spatial dimension: 2 or 3
    #[arg(long)]
    dim: Option<usize>,
    /// Output directory for errors.csv, summary.json, and snapshots
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a field snapshot every this many samples
    #[arg(long)]
    snapshot_every: Option<usize>,
    /// Use the published full-scale grids and step counts
    #[arg(long)]
    full_scale: bool,
}

fn merge_config(args: &RunArgs, sweep: bool) -> Result<RunConfig> {
    let mut config = match &args.config {
        Some(path) => RunConfig::from_json_file(path)?,
        None => RunConfig::empty(),
    };
    if let Some(dim) = args.dim {
        config.dim = dim;
    }
    if args.full_scale {
        let points = match config.dim {
            3 => vec![FULL_POINTS_3D; 3],
            _ => vec![FULL_POINTS_2D; 2],
        };
        config.grid = Some(GridConfig { points });
        if config.nt.is_none() {
            config.nt = Some(PROTOCOL_NT);
        }
        if sweep && config.nt_set.is_none() {
            config.nt_set = Some(full_sweep_nts());
        }
    }
    if let Some(n) = args.grid {
        config.grid = Some(GridConfig {
            points: vec![n; config.dim],
        });
    }
    if let Some(scheme) = &args.scheme {
        config.scheme = scheme.clone();
    }
    if let Some(order) = args.pade_order {
        let prefix = &config.scheme[..config.scheme.len().min(2)];
        if prefix == "NP" || prefix == "CP" {
            config.scheme = format!("{prefix}{order}");
        } else {
            return Err(Error::Config(
                "--pade-order applies only to NP/CP schemes".into(),
            ));
        }
    }
    if let Some(method) = &args.method {
        config.method = method.clone();
    }
    if let Some(profile) = &args.profile {
        let (family, variant) = match profile.as_str() {
            "fcg-i" => ("FCG", "I"),
            "fcg-ii" => ("FCG", "II"),
            "fhg-i" => ("FHG", "I"),
            "fhg-ii" => ("FHG", "II"),
            other => {
                return Err(Error::Config(format!(
                    "unknown profile '{other}' (expected fcg-i, fcg-ii, fhg-i, or fhg-ii)"
                )))
            }
        };
        config.profile.family = family.into();
        config.profile.variant = variant.into();
    }
    if let Some(c0) = args.c0 {
        config.profile.c0 = c0;
    }
    if let Some(tmax) = args.tmax {
        config.tmax = tmax;
    }
    if let Some(nt) = args.nt {
        config.nt = Some(nt);
    }
    if let Some(set) = &args.nt_set {
        let parsed: std::result::Result<Vec<usize>, _> =
            set.split(',').map(|s| s.trim().parse::<usize>()).collect();
        config.nt_set = Some(parsed.map_err(|_| {
            Error::Config(format!("cannot parse time-sample set '{set}'"))
        })?);
    }
    if let Some(out) = &args.out {
        config.out_dir = Some(out.display().to_string());
    }
    if let Some(k) = args.snapshot_every {
        config.snapshot_every = Some(k);
    }
    Ok(config)
}

fn init_threads() {
    if let Ok(value) = std::env::var("SCHROTBC_THREADS") {
        if let Ok(n) = value.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn run_command(args: &RunArgs) -> Result<()> {
    let config = merge_config(args, false)?;
    let result = execute_run(&config)?;
    println!(
        "{}-{}: {} samples, max error {:.6e}, Robin residual {:.3e}",
        config.scheme,
        config.method,
        result.times.len(),
        result.max_error,
        result.robin_residual
    );
    if let Some(dir) = &config.out_dir {
        println!("results written to {dir}");
    }
    Ok(())
}

fn sweep_command(args: &RunArgs) -> Result<()> {
    let config = merge_config(args, true)?;
    let report = convergence_sweep(&config)?;
    for (point, kept) in report.points.iter().zip(&report.kept) {
        println!(
            "nt {:>7}  dt {:.6e}  max error {:.6e}{}",
            point.nt,
            point.dt,
            point.max_error,
            if *kept { "" } else { "  (plateau)" }
        );
    }
    println!("fitted slope: {:.4}", report.slope);
    if let Some(dir) = &config.out_dir {
        println!("results written to {dir}");
    }
    Ok(())
}

fn format_profile_table(family: ProfileFamily) -> String {
    let mut text = String::new();
    let label = match family {
        ProfileFamily::ChirpedGaussian => "Fourier-chirped-Gaussian",
        ProfileFamily::HermiteGaussian => "Fourier-Hermite-Gaussian",
    };
    writeln!(text, "{label} profiles (amplitude 2, speeds c0 in {{4, 8, 12, 16}})").unwrap();
    writeln!(text, "per-term carrier speed c_j = s_j * c0").unwrap();
    for (variant, name) in [(ProfileVariant::TypeI, "I"), (ProfileVariant::TypeII, "II")] {
        let spec = profile_preset(family, variant, 4.0, 2).expect("preset");
        writeln!(text, "  Type {name}:").unwrap();
        for (j, term) in spec.terms().iter().enumerate() {
            let shape = match term.shape {
                TermShape::Chirp(b) => format!("chirp b = {b}"),
                TermShape::HermiteOrder(m) => format!("order m = {m}"),
            };
            writeln!(
                text,
                "    term {}: a = {:.6}, {}, s = {:+}, K = {:+}",
                j + 1,
                term.width,
                shape,
                term.direction,
                term.wavenumber
            )
            .unwrap();
        }
    }
    text
}

fn presets_command(table: &str) -> Result<()> {
    let text = match table {
        "I" => format_profile_table(ProfileFamily::ChirpedGaussian),
        "II" => format_profile_table(ProfileFamily::HermiteGaussian),
        "III" => format!(
            "2D evolution protocol\n\
             \x20 domain : (-10, 10) x [-pi, pi)\n\
             \x20 Tmax   : 5\n\
             \x20 Nt     : {PROTOCOL_NT} (dt = 1e-3)\n\
             \x20 points : {FULL_POINTS_2D} x {FULL_POINTS_2D} \
             (desk scale: {DESK_POINTS_2D} x {DESK_POINTS_2D}, Nt = {DESK_NT})\n\
             \x20 schemes: CQ, NP20, NP50, CP20, CP50, HF with BDF1 and TR\n"
        ),
        "IV" => format!(
            "2D convergence protocol\n\
             \x20 domain : (-10, 10) x [-pi, pi)\n\
             \x20 Tmax   : 5\n\
             \x20 Nt set : {{2^8, ..., 2^16}} (desk scale: {{2^8, ..., 2^12}})\n\
             \x20 points : {FULL_POINTS_2D} x {FULL_POINTS_2D} \
             (desk scale: {DESK_POINTS_2D} x {DESK_POINTS_2D})\n"
        ),
        "V" => format!(
            "3D evolution protocol\n\
             \x20 domain : (-10, 10) x [-pi, pi) x [-pi, pi)\n\
             \x20 Tmax   : 5\n\
             \x20 Nt     : {PROTOCOL_NT} (dt = 1e-3)\n\
             \x20 points : {FULL_POINTS_3D}^3 (desk scale: {DESK_POINTS_3D}^3, Nt = {DESK_NT})\n\
             \x20 schemes: NP20, NP50 with BDF1 and TR\n"
        ),
        other => {
            return Err(Error::Config(format!(
                "unknown table '{other}' (expected I, II, III, IV, or V)"
            )))
        }
    };
    print!("{text}");
    Ok(())
}

/// Entry point of the `schrotbc` binary; returns the process exit code.
pub fn cli_main<I>(args: I) -> i32
where
    I: IntoIterator<Item = String>,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    init_threads();
    let outcome = match &cli.command {
        Cmd::Run(args) => run_command(args),
        Cmd::Sweep(args) => sweep_command(args),
        Cmd::Presets(args) => presets_command(&args.table),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}
