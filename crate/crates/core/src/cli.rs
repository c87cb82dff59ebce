//! Batch front end: JSON scenario configs, built-in scenarios, CSV traces and
//! JSON reports.
//!
//! A config is `{"scenarios": [{"name": .., "description": .., "analysis": {"op": .., ..}}]}`.
//! Each scenario writes `<slug>.json` plus one `<slug>.<trace>.csv` per trace
//! into the output directory; the report names its traces by relative path.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::compactness::{
    attainment_check, max_chebyshev_check, maximizing_battery, partial_compactness_battery, x_ab_compact_verdict,
    x_compact_verdict, z1_battery, z2_max_chebyshev_battery, BatteryReport,
};
use crate::error::{Error, Result};
use crate::gauge::{
    gauge_soundness_battery, remotality_hypothesis_div, remotality_hypothesis_ratio, GaugeSpec, HypothesisReport,
    RemotalityProbe, DEFAULT_CONVERGENCE_EPS,
};
use crate::geometry::{
    chebyshev_center, default_delta_unique, default_eps_far, default_grid_resolution, farthest_distance,
    farthest_points_with, BoundedSet, NormedSpace, Point,
};
use crate::seqlab::{
    ab_stat_converges, ab_stat_diverges_to_inf, is_ab_stat_maximizing, is_maximizing, partial_ab_stat_continuity, sign,
    LabSequence, VecSequence, DEFAULT_BOUND_GRID, DEFAULT_C,
};
use crate::windows::{default_trend_window, DensityTrace, ScanParams, WindowPair, DEFAULT_ENUMERATION_CAP};

pub const CAP_ENV: &str = "REMOTAL_LAB_CAP";

#[derive(Debug, Parser)]
#[command(name = "remotal-lab", version, about = "Farthest points, remotal sets and window-statistical convergence")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run config files or built-in scenarios (`paper:<name>`, or `paper:all`)
    Run {
        #[arg(required = true)]
        targets: Vec<String>,
        /// Output directory
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Scenarios run in parallel
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Seed override for randomized batteries
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List built-in scenarios
    List,
    /// Parse and check a config without running it
    ValidateConfig { path: PathBuf },
}

// ---------------------------------------------------------------------------
// Config schema
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenarios: Vec<RawScenario>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    #[serde(default)]
    description: String,
    analysis: Value,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PSpec {
    Number(f64),
    Name(String),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub dim: usize,
    /// A number `>= 1`, or `"inf"`.
    pub p: PSpec,
}

impl SpaceSpec {
    pub fn build(&self) -> Result<NormedSpace> {
        let p = match &self.p {
            PSpec::Number(p) => *p,
            PSpec::Name(s) if matches!(s.as_str(), "inf" | "infinity") => f64::INFINITY,
            PSpec::Name(s) => return Err(Error::invalid(format!("unknown norm exponent {s:?}"))),
        };
        NormedSpace::new(self.dim, p)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum WindowSpec {
    Classical,
    PolyWindow { a: f64, b_exp: u32 },
    Shifted { alpha_exp: u32, len_exp: u32 },
    Diagonal,
    Table { alpha: Vec<f64>, beta: Vec<f64> },
}

impl WindowSpec {
    pub fn build(&self) -> Result<WindowPair> {
        Ok(match self {
            WindowSpec::Classical => WindowPair::classical(),
            WindowSpec::PolyWindow { a, b_exp } => WindowPair::poly(*a, *b_exp),
            WindowSpec::Shifted { alpha_exp, len_exp } => WindowPair::shifted(*alpha_exp, *len_exp),
            WindowSpec::Diagonal => WindowPair::diagonal(),
            WindowSpec::Table { alpha, beta } => WindowPair::table(alpha.clone(), beta.clone())?,
        })
    }
}

fn default_c() -> f64 {
    DEFAULT_C
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum SequenceSpec {
    PaperSignProbe {
        #[serde(default = "default_c")]
        c: f64,
    },
    PaperMixedMaximizing {
        #[serde(default = "default_c")]
        c: f64,
    },
    PaperDivergence,
    SquareIndicator,
    Constant {
        value: f64,
    },
    Alternating,
    Harmonic {
        center: f64,
        scale: f64,
    },
    Linear,
    Table {
        values: Vec<f64>,
    },
}

impl SequenceSpec {
    pub fn build(&self) -> Result<LabSequence> {
        Ok(match self {
            SequenceSpec::PaperSignProbe { c } => LabSequence::paper_sign_probe(*c)?,
            SequenceSpec::PaperMixedMaximizing { c } => LabSequence::paper_mixed_maximizing(*c)?,
            SequenceSpec::PaperDivergence => LabSequence::paper_divergence(),
            SequenceSpec::SquareIndicator => LabSequence::square_indicator(),
            SequenceSpec::Constant { value } => LabSequence::constant(*value),
            SequenceSpec::Alternating => LabSequence::alternating(),
            SequenceSpec::Harmonic { center, scale } => LabSequence::harmonic(*center, *scale),
            SequenceSpec::Linear => LabSequence::linear(),
            SequenceSpec::Table { values } => LabSequence::table(values.clone())?,
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum VecSequenceSpec {
    /// A scalar family as a sequence in `R^1`.
    Scalar {
        sequence: SequenceSpec,
    },
    Constant {
        point: Point,
    },
    /// `target + direction / n`
    Converging {
        target: Point,
        direction: Point,
    },
}

impl VecSequenceSpec {
    pub fn build(&self) -> Result<VecSequence> {
        Ok(match self {
            VecSequenceSpec::Scalar { sequence } => VecSequence::from_scalar(&sequence.build()?),
            VecSequenceSpec::Constant { point } => VecSequence::constant(point.clone()),
            VecSequenceSpec::Converging { target, direction } => {
                if target.len() != direction.len() {
                    return Err(Error::invalid("target and direction lengths differ"));
                }
                VecSequence::converging(target.clone(), direction.clone())
            }
        })
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionSpec {
    Sign,
    Identity,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub horizon: u64,
    pub tolerance: Option<f64>,
    pub trend_window: Option<usize>,
}

impl ScanSpec {
    pub fn build(&self, cap: u64) -> Result<ScanParams> {
        if self.horizon > cap {
            return Err(Error::invalid(format!("horizon {} exceeds the global cap {cap}", self.horizon)));
        }
        let mut p = ScanParams::new(self.horizon).with_cap(cap);
        if let Some(t) = self.tolerance {
            p = p.with_tolerance(t);
        }
        p = p.with_trend_window(self.trend_window.unwrap_or_else(|| default_trend_window(self.horizon)));
        Ok(p)
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatteryKind {
    Z1,
    Maximizing,
    Z2MaxChebyshev,
    PartialCompactness,
    GaugeSoundness,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceArgs {
    pub sequence: SequenceSpec,
    pub limit: f64,
    pub eps: f64,
    pub window: WindowSpec,
    pub scan: ScanSpec,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DivergenceArgs {
    pub sequence: SequenceSpec,
    pub bounds: Option<Vec<f64>>,
    pub window: WindowSpec,
    pub scan: ScanSpec,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuityArgs {
    pub function: FunctionSpec,
    pub x: f64,
    pub probe: SequenceSpec,
    pub window: WindowSpec,
    pub eps: f64,
    pub scan: ScanSpec,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaximizingArgs {
    pub sequence: VecSequenceSpec,
    pub x: Point,
    pub set: BoundedSet,
    pub space: SpaceSpec,
    pub eps: f64,
    pub window: WindowSpec,
    pub scan: ScanSpec,
    /// Horizon of the ordinary maximizing check; defaults to the scan horizon.
    pub maximizing_horizon: Option<u64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FarthestArgs {
    pub x: Point,
    pub set: BoundedSet,
    pub space: SpaceSpec,
    pub eps_far: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChebyshevArgs {
    pub set: BoundedSet,
    pub space: SpaceSpec,
    pub grid_resolution: Option<usize>,
    pub refine_iters: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompactnessArgs {
    pub x: Point,
    pub set: BoundedSet,
    pub space: SpaceSpec,
    pub t_sequence: SequenceSpec,
    pub window: WindowSpec,
    pub eps: f64,
    pub scan: ScanSpec,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeArgs {
    pub gauge: GaugeSpec,
    pub x_sequence: VecSequenceSpec,
    pub x: Point,
    pub y: Point,
    pub set: BoundedSet,
    pub space: SpaceSpec,
    pub window: WindowSpec,
    pub scan: ScanSpec,
    /// Divergence checker only.
    pub bounds: Option<Vec<f64>>,
    /// Ratio checker only.
    pub eps: Option<f64>,
    pub convergence_eps: Option<f64>,
    pub eps_far: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatteryArgs {
    pub battery: BatteryKind,
    pub seed: u64,
    pub instances: usize,
}

#[derive(Clone, Debug)]
pub enum Analysis {
    Convergence(ConvergenceArgs),
    Divergence(DivergenceArgs),
    Continuity(ContinuityArgs),
    Maximizing(MaximizingArgs),
    Farthest(FarthestArgs),
    Chebyshev(ChebyshevArgs),
    Compactness(CompactnessArgs),
    GaugeDiv(GaugeArgs),
    GaugeRatio(GaugeArgs),
    Battery(BatteryArgs),
}

pub const OPS: [&str; 10] = [
    "convergence",
    "divergence",
    "continuity",
    "maximizing",
    "farthest",
    "chebyshev",
    "compactness",
    "gauge_div",
    "gauge_ratio",
    "battery",
];

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    /// The analysis exactly as configured, echoed into the report.
    pub config: Value,
    pub analysis: Analysis,
}

fn join_path(prefix: &str, inner: &serde_path_to_error::Path) -> String {
    let inner = inner.to_string();
    if inner == "." || inner.is_empty() {
        prefix.to_owned()
    } else if inner.starts_with('[') {
        format!("{prefix}{inner}")
    } else {
        format!("{prefix}.{inner}")
    }
}

fn from_value<T: DeserializeOwned>(value: Value, prefix: &str) -> Result<T> {
    serde_path_to_error::deserialize(value)
        .map_err(|e| Error::Config { path: join_path(prefix, e.path()), message: e.inner().to_string() })
}

fn parse_analysis(mut value: Value, prefix: &str) -> Result<Analysis> {
    let map = value
        .as_object_mut()
        .ok_or_else(|| Error::Config { path: prefix.to_owned(), message: "expected an object".into() })?;
    let op = match map.remove("op") {
        Some(Value::String(op)) => op,
        Some(_) => return Err(Error::Config { path: format!("{prefix}.op"), message: "expected a string".into() }),
        None => return Err(Error::Config { path: format!("{prefix}.op"), message: "missing field `op`".into() }),
    };
    Ok(match op.as_str() {
        "convergence" => Analysis::Convergence(from_value(value, prefix)?),
        "divergence" => Analysis::Divergence(from_value(value, prefix)?),
        "continuity" => Analysis::Continuity(from_value(value, prefix)?),
        "maximizing" => Analysis::Maximizing(from_value(value, prefix)?),
        "farthest" => Analysis::Farthest(from_value(value, prefix)?),
        "chebyshev" => Analysis::Chebyshev(from_value(value, prefix)?),
        "compactness" => Analysis::Compactness(from_value(value, prefix)?),
        "gauge_div" => Analysis::GaugeDiv(from_value(value, prefix)?),
        "gauge_ratio" => Analysis::GaugeRatio(from_value(value, prefix)?),
        "battery" => Analysis::Battery(from_value(value, prefix)?),
        other => {
            return Err(Error::Config {
                path: format!("{prefix}.op"),
                message: format!("unknown op `{other}`, expected one of {}", OPS.join(", ")),
            })
        }
    })
}

/// Parses a config document; errors name the failing key path.
pub fn parse_config(text: &str) -> Result<Vec<Scenario>> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(de)
        .map_err(|e| Error::Config { path: e.path().to_string(), message: e.inner().to_string() })?;
    raw.scenarios
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let prefix = format!("scenarios[{i}].analysis");
            Ok(Scenario {
                name: s.name,
                description: s.description,
                config: s.analysis.clone(),
                analysis: parse_analysis(s.analysis, &prefix)?,
            })
        })
        .collect()
}

/// Builds every family referenced by a scenario without running it.
pub fn check_scenario(s: &Scenario, cap: u64) -> Result<()> {
    match &s.analysis {
        Analysis::Convergence(a) => {
            a.sequence.build()?;
            a.window.build()?;
            a.scan.build(cap)?;
        }
        Analysis::Divergence(a) => {
            a.sequence.build()?;
            a.window.build()?;
            a.scan.build(cap)?;
        }
        Analysis::Continuity(a) => {
            a.probe.build()?;
            a.window.build()?;
            a.scan.build(cap)?;
        }
        Analysis::Maximizing(a) => {
            a.sequence.build()?;
            a.set.validate()?;
            a.space.build()?;
            a.window.build()?;
            a.scan.build(cap)?;
        }
        Analysis::Farthest(a) => {
            a.set.validate()?;
            a.space.build()?;
        }
        Analysis::Chebyshev(a) => {
            a.set.validate()?;
            a.space.build()?;
        }
        Analysis::Compactness(a) => {
            a.t_sequence.build()?;
            a.set.validate()?;
            a.space.build()?;
            a.window.build()?;
            a.scan.build(cap)?;
        }
        Analysis::GaugeDiv(a) | Analysis::GaugeRatio(a) => {
            a.gauge.build()?;
            a.x_sequence.build()?;
            a.set.validate()?;
            a.space.build()?;
            a.window.build()?;
            a.scan.build(cap)?;
        }
        Analysis::Battery(_) => {}
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Built-in scenarios
// ---------------------------------------------------------------------------

fn interval_json() -> Value {
    json!({"box": {"lo": [-1.0], "hi": [1.0]}})
}

fn battery_json(battery: &str, instances: usize) -> Value {
    json!({"op": "battery", "battery": battery, "seed": 20240501, "instances": instances})
}

/// Built-in scenarios in listing order: `(name, description, analysis)`.
pub fn builtin_scenarios() -> Vec<(&'static str, &'static str, Value)> {
    let line = json!({"dim": 1, "p": 2.0});
    vec![
        (
            "paper:example-sign-continuity",
            "sign function at 0 along x_n = -1 + c^n on powers of 2, windows [1, n^2]",
            json!({
                "op": "continuity",
                "function": "sign",
                "x": 0.0,
                "probe": {"family": "paper_sign_probe", "c": 0.5},
                "window": {"family": "poly_window", "a": 1.0, "b_exp": 2},
                "eps": 0.5,
                "scan": {"horizon": 200, "tolerance": 0.01}
            }),
        ),
        (
            "paper:example-divergence",
            "x_n = 0 on powers of 2 else n, windows [n^3, n^3 + n^2], bounds 1, 10, 100",
            json!({
                "op": "divergence",
                "sequence": {"family": "paper_divergence"},
                "bounds": [1.0, 10.0, 100.0],
                "window": {"family": "shifted", "alpha_exp": 3, "len_exp": 2},
                "scan": {"horizon": 60, "tolerance": 0.01}
            }),
        ),
        (
            "paper:example-maximizing",
            "mixed sequence in [-1, 1] seen from 0: not maximizing, window-statistically maximizing under [1, n^2]",
            json!({
                "op": "maximizing",
                "sequence": {"family": "scalar", "sequence": {"family": "paper_mixed_maximizing", "c": 0.5}},
                "x": [0.0],
                "set": interval_json(),
                "space": line,
                "eps": 0.5,
                "window": {"family": "poly_window", "a": 1.0, "b_exp": 2},
                "scan": {"horizon": 200, "tolerance": 0.01},
                "maximizing_horizon": 500
            }),
        ),
        (
            "paper:example-compactness",
            "[-1, 1] at 0 with t_n = 1 on squares else 0: 0-ab-compact under [1, n^2], not 0-compact",
            json!({
                "op": "compactness",
                "x": [0.0],
                "set": interval_json(),
                "space": line,
                "t_sequence": {"family": "square_indicator"},
                "window": {"family": "poly_window", "a": 1.0, "b_exp": 2},
                "eps": 0.5,
                "scan": {"horizon": 400, "tolerance": 0.01}
            }),
        ),
        (
            "paper:theorem-z1-battery",
            "x-compact implies x-ab-compact along t_n = 1/n, three window pairs, 50 instances",
            battery_json("z1", 50),
        ),
        (
            "paper:theorem-maximizing-battery",
            "maximizing implies ab-statistically maximizing, three window pairs, 50 instances",
            battery_json("maximizing", 50),
        ),
        (
            "paper:theorem-z2-max-chebyshev-battery",
            "x-ab-compact implies attainment and a unique farthest point; degenerate witnesses reported",
            battery_json("z2_max_chebyshev", 50),
        ),
        (
            "paper:theorem-partial-compactness-battery",
            "partial x-ab-compactness iff attainment, H = first attainer, 50 instances",
            battery_json("partial_compactness", 50),
        ),
        (
            "paper:gauge-div-battery",
            "gauge divergence hypothesis with margin >= 1 implies y attains delta, 100 instances",
            battery_json("gauge_soundness", 100),
        ),
        (
            "paper:gauge-ratio-sign-subtlety",
            "ratio hypothesis on E = {0, 2}, x = y = 0, x_n = 0: hypothesis holds, conclusion fails (reported)",
            json!({
                "op": "gauge_ratio",
                "gauge": {"gauge": "power", "p": 1.0},
                "x_sequence": {"family": "constant", "point": [0.0]},
                "x": [0.0],
                "y": [0.0],
                "set": {"cloud": [[0.0], [2.0]]},
                "space": line,
                "window": {"family": "classical"},
                "scan": {"horizon": 200, "tolerance": 0.01},
                "eps": 0.1
            }),
        ),
    ]
}

fn builtin(name: &str) -> Option<Scenario> {
    builtin_scenarios().into_iter().find(|s| s.0 == name).map(|(name, description, analysis)| {
        let parsed = parse_analysis(analysis.clone(), name).expect("built-in scenarios parse");
        Scenario { name: name.to_owned(), description: description.to_owned(), config: analysis, analysis: parsed }
    })
}

/// Resolves `paper:<name>`, `paper:all` or a config path.
pub fn resolve_target(target: &str) -> Result<Vec<Scenario>> {
    if target == "paper:all" {
        return Ok(builtin_scenarios().iter().map(|s| builtin(s.0).expect("listed")).collect());
    }
    if let Some(s) = builtin(target) {
        return Ok(vec![s]);
    }
    let path = Path::new(target);
    if target.starts_with("paper:") && !path.exists() {
        return Err(Error::invalid(format!("unknown built-in scenario `{target}`; see `remotal-lab list`")));
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

/// `REMOTAL_LAB_CAP`, or the default enumeration cap.
pub fn global_cap() -> Result<u64> {
    match std::env::var(CAP_ENV) {
        Ok(v) => v.trim().parse::<u64>().ok().filter(|c| *c > 0).ok_or_else(|| Error::Config {
            path: CAP_ENV.into(),
            message: format!("expected a positive integer, got {v:?}"),
        }),
        Err(_) => Ok(DEFAULT_ENUMERATION_CAP),
    }
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

/// Report plus CSV traces of one scenario, before anything is written.
#[derive(Clone, Debug)]
pub struct ScenarioOutput {
    pub report: Value,
    pub traces: Vec<(String, Vec<u8>)>,
    /// `Some(false)` when a battery failed.
    pub battery_passed: Option<bool>,
}

fn density_csv(trace: &DensityTrace) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    trace.write_csv(&mut buf)?;
    Ok(buf)
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn bound_key(bound: f64) -> String {
    format!("bound-{bound}")
}

fn hypothesis_json(rep: &HypothesisReport) -> Value {
    let per_z: BTreeMap<String, Value> = rep.per_z.iter().map(|z| (z.z_index.to_string(), to_json(z))).collect();
    json!({
        "status": to_json(&rep.status),
        "hypothesis_holds": rep.hypothesis_holds(),
        "per_z": per_z,
        "skipped_z": rep.skipped_z,
        "delta": rep.delta,
        "y_distance": rep.y_distance,
        "min_margin": rep.min_margin(),
    })
}

fn battery_json_report(rep: &BatteryReport) -> Value {
    to_json(rep)
}

pub fn execute(s: &Scenario, cap: u64, seed: Option<u64>) -> Result<ScenarioOutput> {
    let mut traces = Vec::new();
    let mut battery_passed = None;
    let result = match &s.analysis {
        Analysis::Convergence(a) => {
            let c = ab_stat_converges(&a.sequence.build()?, a.limit, a.eps, &a.window.build()?, &a.scan.build(cap)?)?;
            traces.push(("density".to_owned(), density_csv(&c.trace)?));
            json!({"verdict": to_json(&c.verdict)})
        }
        Analysis::Divergence(a) => {
            let bounds = a.bounds.clone().unwrap_or_else(|| DEFAULT_BOUND_GRID.to_vec());
            let rep = ab_stat_diverges_to_inf(&a.sequence.build()?, &bounds, &a.window.build()?, &a.scan.build(cap)?)?;
            let mut per_bound = Vec::new();
            for b in &rep.per_bound {
                traces.push((bound_key(b.bound), density_csv(&b.classification.trace)?));
                per_bound.push(json!({"bound": b.bound, "verdict": to_json(&b.classification.verdict)}));
            }
            json!({
                "per_bound": per_bound,
                "aggregate": to_json(&rep.aggregate),
                "tail_infimum": rep.tail_infimum,
            })
        }
        Analysis::Continuity(a) => {
            let f = match a.function {
                FunctionSpec::Sign => sign as fn(f64) -> f64,
                FunctionSpec::Identity => |t| t,
            };
            let w =
                partial_ab_stat_continuity(f, a.x, &a.probe.build()?, &a.window.build()?, a.eps, &a.scan.build(cap)?)?;
            traces.push(("preimage".to_owned(), density_csv(&w.preimage.trace)?));
            traces.push(("image".to_owned(), density_csv(&w.image.trace)?));
            json!({
                "preimage": to_json(&w.preimage.verdict),
                "image": to_json(&w.image.verdict),
                "continuous": w.continuous,
                "both_converge": w.both_converge(),
            })
        }
        Analysis::Maximizing(a) => {
            let (seq, space, pair, params) =
                (a.sequence.build()?, a.space.build()?, a.window.build()?, a.scan.build(cap)?);
            let ordinary =
                is_maximizing(&seq, &a.x, &a.set, &space, a.eps, a.maximizing_horizon.unwrap_or(params.horizon))?;
            let stat = is_ab_stat_maximizing(&seq, &a.x, &a.set, &space, a.eps, &pair, &params)?;
            traces.push(("density".to_owned(), density_csv(&stat.classification.trace)?));
            json!({
                "delta": stat.delta,
                "maximizing": to_json(&ordinary),
                "ab_stat_maximizing": to_json(&stat.classification.verdict),
            })
        }
        Analysis::Farthest(a) => {
            let space = a.space.build()?;
            let delta = farthest_distance(&a.x, &a.set, &space)?;
            let eps_far = a.eps_far.unwrap_or_else(|| default_eps_far(delta));
            to_json(&farthest_points_with(&a.x, &a.set, &space, eps_far, default_delta_unique(delta))?)
        }
        Analysis::Chebyshev(a) => {
            let space = a.space.build()?;
            let res = a.grid_resolution.unwrap_or_else(|| default_grid_resolution(a.set.dim()));
            to_json(&chebyshev_center(&a.set, &space, res, a.refine_iters.unwrap_or(60))?)
        }
        Analysis::Compactness(a) => {
            let (space, t_seq, pair, params) =
                (a.space.build()?, a.t_sequence.build()?, a.window.build()?, a.scan.build(cap)?);
            let ab = x_ab_compact_verdict(&a.x, &a.set, &space, &t_seq, &pair, a.eps, &params)?;
            let plain = x_compact_verdict(&a.x, &a.set, &space, &params)?;
            let delta = farthest_distance(&a.x, &a.set, &space)?;
            let att = attainment_check(&a.x, &a.set, &space, &ab, default_eps_far(delta))?;
            let unique = max_chebyshev_check(&a.x, &a.set, &space, &ab, default_delta_unique(delta))?;
            let mut buf = Vec::new();
            ab.slab_trace.write_csv(&mut buf)?;
            traces.push(("slab".to_owned(), buf));
            if let Some(t) = &ab.t_density {
                traces.push(("t-density".to_owned(), density_csv(t)?));
            }
            if let Some(t) = &ab.diam_density {
                traces.push(("diam-density".to_owned(), density_csv(t)?));
            }
            let mut buf = Vec::new();
            plain.slab_trace.write_csv(&mut buf)?;
            traces.push(("x-compact-slab".to_owned(), buf));
            json!({
                "x_ab_compact": to_json(&ab.summary()),
                "x_compact": to_json(&plain.summary()),
                "attainment": to_json(&att),
                "max_chebyshev": unique,
            })
        }
        Analysis::GaugeDiv(a) | Analysis::GaugeRatio(a) => {
            let (gauge, x_seq, space, pair, params) =
                (a.gauge.build()?, a.x_sequence.build()?, a.space.build()?, a.window.build()?, a.scan.build(cap)?);
            let delta = farthest_distance(&a.x, &a.set, &space)?;
            let probe = RemotalityProbe {
                gauge: &gauge,
                x_seq: &x_seq,
                x: &a.x,
                y: &a.y,
                set: &a.set,
                space: &space,
                pair: &pair,
                params,
                convergence_eps: a.convergence_eps.unwrap_or(DEFAULT_CONVERGENCE_EPS),
                eps_far: a.eps_far.unwrap_or_else(|| default_eps_far(delta)),
            };
            let rep = if matches!(s.analysis, Analysis::GaugeDiv(_)) {
                let bounds = a.bounds.clone().unwrap_or_else(|| DEFAULT_BOUND_GRID.to_vec());
                remotality_hypothesis_div(&probe, &bounds)?
            } else {
                let eps = a.eps.ok_or_else(|| Error::Config {
                    path: format!("{}.eps", s.name),
                    message: "gauge_ratio needs `eps`".into(),
                })?;
                remotality_hypothesis_ratio(&probe, eps)?
            };
            hypothesis_json(&rep)
        }
        Analysis::Battery(a) => {
            let seed = seed.unwrap_or(a.seed);
            let rep = match a.battery {
                BatteryKind::Z1 => z1_battery(seed, a.instances)?,
                BatteryKind::Maximizing => maximizing_battery(seed, a.instances)?,
                BatteryKind::Z2MaxChebyshev => z2_max_chebyshev_battery(seed, a.instances)?,
                BatteryKind::PartialCompactness => partial_compactness_battery(seed, a.instances)?,
                BatteryKind::GaugeSoundness => gauge_soundness_battery(seed, a.instances)?,
            };
            battery_passed = Some(rep.passed);
            battery_json_report(&rep)
        }
    };
    Ok(ScenarioOutput {
        report: json!({
            "scenario": s.name,
            "description": s.description,
            "config": s.config,
            "result": result,
        }),
        traces,
        battery_passed,
    })
}

/// File-name stem for a scenario name.
pub fn slug(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

/// Writes the report and traces; returns the report path.
pub fn write_output(out_dir: &Path, name: &str, output: &ScenarioOutput) -> Result<PathBuf> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let stem = slug(name);
    let mut files = BTreeMap::new();
    for (key, bytes) in &output.traces {
        let file = format!("{stem}.{key}.csv");
        let path = out_dir.join(&file);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        files.insert(key.clone(), Value::String(file));
    }
    let mut report = output.report.clone();
    report["traces"] = Value::Object(files.into_iter().collect());
    let path = out_dir.join(format!("{stem}.json"));
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Runs scenarios on up to `jobs` threads; results keep input order.
pub fn run_all(scenarios: &[Scenario], cap: u64, seed: Option<u64>, jobs: usize) -> Vec<Result<ScenarioOutput>> {
    let slots: Vec<Mutex<Option<Result<ScenarioOutput>>>> = scenarios.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, scenarios.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= scenarios.len() {
                    break;
                }
                let r = execute(&scenarios[i], cap, seed);
                *slots[i].lock().expect("slot lock") = Some(r);
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().expect("slot lock").expect("every slot filled")).collect()
}

/// Exit codes: 0 success, 1 battery failure, 2 usage, config or run error.
pub fn main_with(cli: Cli) -> u8 {
    match dispatch(cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::List => {
            for (name, description, _) in builtin_scenarios() {
                println!("{name}\t{description}");
            }
            Ok(true)
        }
        Command::ValidateConfig { path } => {
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let scenarios = parse_config(&text)?;
            let cap = global_cap()?;
            for s in &scenarios {
                check_scenario(s, cap)?;
            }
            println!("{}: {} scenario(s) ok", path.display(), scenarios.len());
            Ok(true)
        }
        Command::Run { targets, out, jobs, seed } => {
            let cap = global_cap()?;
            let mut scenarios = Vec::new();
            for t in &targets {
                scenarios.extend(resolve_target(t)?);
            }
            for s in &scenarios {
                check_scenario(s, cap)?;
            }
            let mut all_passed = true;
            let mut first_err = None;
            for (s, r) in scenarios.iter().zip(run_all(&scenarios, cap, seed, jobs)) {
                match r {
                    Ok(output) => {
                        let path = write_output(&out, &s.name, &output)?;
                        let status = match output.battery_passed {
                            Some(false) => {
                                all_passed = false;
                                "FAILED"
                            }
                            _ => "ok",
                        };
                        println!("{}: {status} -> {}", s.name, path.display());
                    }
                    Err(e) => {
                        eprintln!("{}: error: {e}", s.name);
                        first_err.get_or_insert(e);
                    }
                }
            }
            match first_err {
                Some(e) => Err(e),
                None => Ok(all_passed),
            }
        }
    }
}
