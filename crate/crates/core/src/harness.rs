//! Experiment configs, campaign runners and report files.
//!
//! A config is a TOML file; see `docs/config.md` for the grammar. Every
//! command writes `manifest.json` first, then one CSV (each row carrying the
//! config hash), a TSV of plot data and a plain-text summary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::geometry::{GeometryError, ScalingLaw, SectionFamily, TubeDomain};
use crate::graph::{EdgeId, EdgeSpec, GraphError, GraphPoint, MetricGraph, VertexId};
use crate::limits::{edge_length_levels, exit_edge_probability, kappa, mean_exit_scale, timescale_ladder, LimitError};
use crate::predictor::{
    fiber_sample, first_timescale, intermediate_time, localization_run, mc_probes, predict_first_critical,
    predict_intermediate, McEstimate, Observable, PredictError, PredictionReport, Probe,
};
use crate::sde::{
    default_delta, default_start, run_cycles, run_ensemble, run_until_sections, write_event_log, CycleEvent,
    ExitRecord, SimConfig, SimError, Start, StepPolicy,
};
use crate::stats::{
    conditional_mean_exit_time, exit_place_distribution, independence_test, ks_exponential, mean_exit_time,
    EdgeFrequency, EnsembleSummary, ExitEnsemble, StatsError, TestReport,
};
use crate::vec3::Vec3;

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "NARROW_TUBE_WORKERS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_SIMULATION: i32 = 4;
pub const EXIT_ACCEPTANCE: i32 = 5;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("simulation failed: {0}")]
    Simulation(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => EXIT_CONFIG,
            HarnessError::Infeasible(_) => EXIT_INFEASIBLE,
            HarnessError::Simulation(_) | HarnessError::Io { .. } => EXIT_SIMULATION,
        }
    }
}

impl From<GeometryError> for HarnessError {
    fn from(e: GeometryError) -> Self {
        match e {
            GeometryError::Graph(g) => HarnessError::Config(g.to_string()),
            other => HarnessError::Infeasible(other.to_string()),
        }
    }
}

impl From<GraphError> for HarnessError {
    fn from(e: GraphError) -> Self {
        HarnessError::Config(e.to_string())
    }
}

impl From<LimitError> for HarnessError {
    fn from(e: LimitError) -> Self {
        HarnessError::Infeasible(e.to_string())
    }
}

impl From<SimError> for HarnessError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(m) => HarnessError::Config(m),
            SimError::Geometry(g) => g.into(),
            other => HarnessError::Simulation(other.to_string()),
        }
    }
}

impl From<StatsError> for HarnessError {
    fn from(e: StatsError) -> Self {
        HarnessError::Simulation(e.to_string())
    }
}

impl From<PredictError> for HarnessError {
    fn from(e: PredictError) -> Self {
        match e {
            PredictError::Sim(s) => s.into(),
            PredictError::Limit(l) => l.into(),
            PredictError::Geometry(g) => g.into(),
            PredictError::Graph(g) => g.into(),
            PredictError::Argument(m) => HarnessError::Config(m),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    ExitStats,
    MetastableIntermediate,
    CtmcCompare,
    Pde,
    Localization,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::ExitStats => "exit-stats",
            Kind::MetastableIntermediate => "metastable-intermediate",
            Kind::CtmcCompare => "ctmc-compare",
            Kind::Pde => "pde",
            Kind::Localization => "localization",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub dim: usize,
    pub eps: Vec<f64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub workers: Option<usize>,
    pub graph: GraphSpec,
    pub scaling: ScalingSpec,
    #[serde(default)]
    pub sim: SimSpec,
    #[serde(default)]
    pub exit_stats: Option<ExitStatsSpec>,
    #[serde(default)]
    pub metastable: Option<MetastableSpec>,
    #[serde(default)]
    pub ctmc_compare: Option<CtmcSpec>,
    #[serde(default)]
    pub pde: Option<PdeSpec>,
    #[serde(default)]
    pub localization: Option<LocalizationSpec>,
}

fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub vertices: Vec<Vec<f64>>,
    pub edges: Vec<EdgeEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeEntry {
    pub ends: [usize; 2],
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerVertex {
    All(f64),
    Each(Vec<f64>),
}

impl PerVertex {
    fn expand(&self, n: usize) -> Vec<f64> {
        match self {
            PerVertex::All(x) => vec![*x; n],
            PerVertex::Each(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingSpec {
    #[serde(default = "unit_constant")]
    pub c: PerVertex,
    pub beta: PerVertex,
}

fn unit_constant() -> PerVertex {
    PerVertex::All(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicySpec {
    Adaptive,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    #[serde(default = "default_step_coefficient")]
    pub step_coefficient: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: u64,
    #[serde(default = "default_policy")]
    pub policy: PolicySpec,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
}

fn default_step_coefficient() -> f64 {
    SimConfig::default().step_coefficient
}
fn default_max_steps() -> u64 {
    SimConfig::default().max_steps
}
fn default_policy() -> PolicySpec {
    PolicySpec::Adaptive
}
fn default_kappa() -> f64 {
    6.0
}

impl Default for SimSpec {
    fn default() -> Self {
        SimSpec {
            step_coefficient: default_step_coefficient(),
            max_steps: default_max_steps(),
            policy: default_policy(),
            kappa: default_kappa(),
        }
    }
}

impl SimSpec {
    pub fn to_config(&self, seed: u64) -> Result<SimConfig, HarnessError> {
        let policy = match self.policy {
            PolicySpec::Adaptive => StepPolicy::Adaptive { kappa: self.kappa },
            PolicySpec::Fixed => StepPolicy::Fixed,
        };
        Ok(SimConfig::new(self.step_coefficient, self.max_steps, seed, policy)?)
    }
}

/// Exit levels on the edges at a vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LevelsSpec {
    /// `"auto"`: stop short of the neighbouring balls; `"lengths"`: full edge lengths.
    Named(String),
    /// One level per incident edge, in ascending edge order.
    List(Vec<f64>),
}

impl Default for LevelsSpec {
    fn default() -> Self {
        LevelsSpec::Named("auto".into())
    }
}

impl LevelsSpec {
    fn check(&self) -> Result<(), HarnessError> {
        match self {
            LevelsSpec::Named(s) if s != "auto" && s != "lengths" => {
                Err(HarnessError::Config(format!("levels must be \"auto\", \"lengths\" or a list, got \"{s}\"")))
            }
            _ => Ok(()),
        }
    }

    pub fn resolve(&self, domain: &TubeDomain, j: VertexId) -> Result<SectionFamily, HarnessError> {
        let g = domain.graph();
        match self {
            LevelsSpec::Named(s) if s == "auto" => Ok(SectionFamily::exit_levels(domain, j)?),
            LevelsSpec::Named(s) if s == "lengths" => Ok(SectionFamily::new(g, j, edge_length_levels(g, j))?),
            LevelsSpec::Named(s) => Err(HarnessError::Config(format!("unknown levels \"{s}\""))),
            LevelsSpec::List(v) => {
                let inc = g.incident(j);
                if v.len() != inc.len() {
                    return Err(HarnessError::Config(format!(
                        "levels list has {} entries but {j} has {} edges",
                        v.len(),
                        inc.len()
                    )));
                }
                Ok(SectionFamily::new(g, j, inc.iter().copied().zip(v.iter().copied()).collect())?)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartSpec {
    /// On-axis point of the restart section on the least-index edge.
    Collar,
    /// Uniform over the restart sections.
    RandomCollar,
    /// The vertex centre.
    Center,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExitStatsSpec {
    pub vertex: usize,
    #[serde(default)]
    pub levels: LevelsSpec,
    pub n: u64,
    #[serde(default = "default_start_spec")]
    pub start: StartSpec,
    /// Run the cycle decomposition with this inner level (`"auto"` picks a default).
    #[serde(default)]
    pub delta: Option<DeltaSpec>,
}

fn default_start_spec() -> StartSpec {
    StartSpec::Collar
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeltaSpec {
    Auto(String),
    Value(f64),
}

/// A graph point: `{ vertex = 2 }` or `{ edge = 1, distance = 0.3, from = 1 }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSpec {
    #[serde(default)]
    pub vertex: Option<usize>,
    #[serde(default)]
    pub edge: Option<usize>,
    /// Distance along the edge from `from` (default: its lower endpoint).
    #[serde(default)]
    pub distance: Option<f64>,
    #[serde(default)]
    pub from: Option<usize>,
}

impl PointSpec {
    pub fn resolve(&self, graph: &MetricGraph) -> Result<GraphPoint, HarnessError> {
        match (self.vertex, self.edge, self.distance) {
            (Some(j), None, None) => {
                graph.vertex(VertexId(j))?;
                Ok(GraphPoint::Vertex(VertexId(j)))
            }
            (None, Some(k), Some(d)) => {
                let e = graph.edge(EdgeId(k))?;
                let from = VertexId(self.from.unwrap_or(e.lower().0));
                if !e.is_incident(from) {
                    return Err(HarnessError::Config(format!("{from} is not an endpoint of {}", EdgeId(k))));
                }
                let p = graph.point_from(from, EdgeId(k), d)?;
                graph.check_point(&p)?;
                Ok(graph.normalize(p))
            }
            _ => Err(HarnessError::Config(
                "a point is either { vertex = j } or { edge = k, distance = s [, from = j] }".into(),
            )),
        }
    }
}

fn point_label(p: &GraphPoint) -> String {
    match p {
        GraphPoint::Vertex(j) => j.to_string(),
        GraphPoint::OnEdge { edge, arclength } => format!("{edge}@{arclength}"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum ObservableSpec {
    Bump(usize),
    Constant(f64),
    Coordinate(usize),
    Values(Vec<f64>),
}

impl ObservableSpec {
    pub fn to_observable(&self, graph: &MetricGraph) -> Result<Observable, HarnessError> {
        let f = match self {
            ObservableSpec::Bump(j) => Observable::Bump(VertexId(*j)),
            ObservableSpec::Constant(c) => Observable::Constant(*c),
            ObservableSpec::Coordinate(a) => Observable::Coordinate(*a),
            ObservableSpec::Values(v) => Observable::Values(v.clone()),
        };
        f.check(graph)?;
        Ok(f)
    }
}

/// Test time: `"geometric-mean"` (`sqrt(T^i T^{i+1})`), `{ fixed = t }`, or
/// `{ first-critical = s }` (`s T^1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum TimeRule {
    GeometricMean,
    Fixed(f64),
    FirstCritical(f64),
}

impl TimeRule {
    pub fn label(&self) -> String {
        match self {
            TimeRule::GeometricMean => "geometric-mean".into(),
            TimeRule::Fixed(t) => format!("fixed({t})"),
            TimeRule::FirstCritical(s) => format!("first-critical({s})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetastableSpec {
    #[serde(default = "one")]
    pub i: usize,
    pub x: PointSpec,
    pub observables: Vec<ObservableSpec>,
    #[serde(default = "geometric_mean")]
    pub t_rule: TimeRule,
    pub n: u64,
    /// Extra random points of the fiber over `x` besides the axis point.
    #[serde(default)]
    pub fiber: usize,
    #[serde(default = "three")]
    pub tolerance_se: f64,
}

fn one() -> usize {
    1
}
fn three() -> f64 {
    3.0
}
fn geometric_mean() -> TimeRule {
    TimeRule::GeometricMean
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CtmcSpec {
    pub s: Vec<f64>,
    /// Defaults to the smallest vertex.
    #[serde(default)]
    pub x: Option<PointSpec>,
    pub observables: Vec<ObservableSpec>,
    #[serde(default)]
    pub levels: LevelsSpec,
    pub n: u64,
    #[serde(default)]
    pub fiber: usize,
    #[serde(default = "three")]
    pub tolerance_se: f64,
    #[serde(default = "default_tolerance_abs")]
    pub tolerance_abs: f64,
}

fn default_tolerance_abs() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeSpec {
    #[serde(default = "one")]
    pub i: usize,
    pub x: PointSpec,
    pub phi: Vec<ObservableSpec>,
    pub t_rules: Vec<TimeRule>,
    #[serde(default)]
    pub levels: LevelsSpec,
    pub n: u64,
    #[serde(default)]
    pub fiber: usize,
    #[serde(default = "three")]
    pub tolerance_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalizationSpec {
    pub s: Vec<f64>,
    /// Absolute distance; overrides `delta_fraction`.
    #[serde(default)]
    pub delta: Option<f64>,
    /// Fraction of the smallest exit level `L^eps` at the smallest vertex.
    #[serde(default = "quarter")]
    pub delta_fraction: f64,
    pub n: u64,
    #[serde(default = "default_tolerance_abs")]
    pub threshold: f64,
}

fn quarter() -> f64 {
    0.25
}

/// Parses a config, reporting TOML errors with their line and column.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, HarnessError> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(cfg)
}

pub fn config_hash(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Derived sub-seed for a named stream, so different parts of an experiment
/// never share random numbers.
pub fn sub_seed(seed: u64, tag: &str, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(tag.as_bytes());
    h.update(index.to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

/// A config with its graph, scaling law and one domain per `eps`.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: ExperimentConfig,
    pub hash: String,
    pub graph: MetricGraph,
    pub scaling: ScalingLaw,
    pub domains: Vec<TubeDomain>,
}

pub fn build_graph(cfg: &ExperimentConfig) -> Result<MetricGraph, HarnessError> {
    if cfg.dim != 2 && cfg.dim != 3 {
        return Err(HarnessError::Config(format!("dim must be 2 or 3, got {}", cfg.dim)));
    }
    let positions = cfg
        .graph
        .vertices
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if c.len() != cfg.dim {
                return Err(HarnessError::Config(format!(
                    "vertex {} has {} coordinates, expected {}",
                    i + 1,
                    c.len(),
                    cfg.dim
                )));
            }
            Ok(Vec3::from_slice(c).expect("length checked"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let edges = cfg.graph.edges.iter().map(|e| EdgeSpec::new(e.ends[0], e.ends[1], e.lambda)).collect();
    Ok(MetricGraph::new(cfg.dim, positions, edges)?)
}

pub fn prepare(text: &str) -> Result<Prepared, HarnessError> {
    let config = parse_config(text)?;
    prepare_config(config, config_hash(text))
}

pub fn prepare_config(config: ExperimentConfig, hash: String) -> Result<Prepared, HarnessError> {
    let graph = build_graph(&config)?;
    let n = graph.vertex_count();
    let c = config.scaling.c.expand(n);
    let beta = config.scaling.beta.expand(n);
    let scaling = ScalingLaw::new(c, beta, config.dim)?;
    if config.eps.is_empty() {
        return Err(HarnessError::Config("eps list is empty".into()));
    }
    config.sim.to_config(config.seed)?;
    let domains =
        config.eps.iter().map(|&e| TubeDomain::build(graph.clone(), scaling.clone(), e)).collect::<Result<_, _>>()?;
    let p = Prepared { config, hash, graph, scaling, domains };
    check_kind(&p)?;
    Ok(p)
}

fn missing(kind: Kind, section: &str) -> HarnessError {
    HarnessError::Config(format!("kind \"{}\" needs a [{section}] section", kind.as_str()))
}

fn check_observables(g: &MetricGraph, obs: &[ObservableSpec]) -> Result<Vec<Observable>, HarnessError> {
    if obs.is_empty() {
        return Err(HarnessError::Config("observable list is empty".into()));
    }
    obs.iter().map(|o| o.to_observable(g)).collect()
}

fn smallest_vertex(p: &Prepared) -> Result<VertexId, HarnessError> {
    let ladder = timescale_ladder(&p.scaling, p.config.dim);
    let first = ladder.group(1);
    if first.members.len() != 1 {
        return Err(LimitError::MinimalNotUnique(first.members.len()).into());
    }
    Ok(first.members[0])
}

/// Kind-specific checks that need the built graph and domains.
fn check_kind(p: &Prepared) -> Result<(), HarnessError> {
    let g = &p.graph;
    let kind = p.config.kind;
    match kind {
        Kind::ExitStats => {
            let s = p.config.exit_stats.as_ref().ok_or_else(|| missing(kind, "exit_stats"))?;
            let j = VertexId(s.vertex);
            g.vertex(j)?;
            s.levels.check()?;
            for d in &p.domains {
                s.levels.resolve(d, j)?;
            }
        }
        Kind::MetastableIntermediate => {
            let s = p.config.metastable.as_ref().ok_or_else(|| missing(kind, "metastable"))?;
            s.x.resolve(g)?;
            check_observables(g, &s.observables)?;
            intermediate_time(&p.scaling, p.config.dim, s.i, p.config.eps[0])?;
        }
        Kind::CtmcCompare => {
            let s = p.config.ctmc_compare.as_ref().ok_or_else(|| missing(kind, "ctmc_compare"))?;
            if let Some(x) = &s.x {
                x.resolve(g)?;
            }
            check_observables(g, &s.observables)?;
            s.levels.check()?;
            let j1 = smallest_vertex(p)?;
            for d in &p.domains {
                s.levels.resolve(d, j1)?;
            }
        }
        Kind::Pde => {
            let s = p.config.pde.as_ref().ok_or_else(|| missing(kind, "pde"))?;
            s.x.resolve(g)?;
            check_observables(g, &s.phi)?;
            if s.t_rules.is_empty() {
                return Err(HarnessError::Config("t_rules is empty".into()));
            }
            for r in &s.t_rules {
                match r {
                    TimeRule::GeometricMean | TimeRule::Fixed(_) => {
                        intermediate_time(&p.scaling, p.config.dim, s.i, p.config.eps[0])?;
                    }
                    TimeRule::FirstCritical(_) => {
                        let j1 = smallest_vertex(p)?;
                        for d in &p.domains {
                            s.levels.resolve(d, j1)?;
                        }
                    }
                }
            }
        }
        Kind::Localization => {
            p.config.localization.as_ref().ok_or_else(|| missing(kind, "localization"))?;
            smallest_vertex(p)?;
        }
    }
    Ok(())
}

/// A header plus string rows.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    /// CSV with the config hash as first column.
    pub fn to_csv(&self, hash: &str) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["config_hash".to_string()];
        header.extend(self.header.iter().cloned());
        w.write_record(&header).expect("in-memory write");
        for r in &self.rows {
            let mut row = vec![hash.to_string()];
            row.extend(r.iter().cloned());
            w.write_record(&row).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    pub fn to_tsv(&self) -> String {
        let mut s = self.header.join("\t");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join("\t"));
            s.push('\n');
        }
        s
    }
}

fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x}")
    }
}

/// Results of a command, ready to be written.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub csv: Table,
    pub plot: Table,
    pub summary: String,
    pub censoring: Vec<(f64, f64)>,
    pub pass: bool,
    /// Additional named files (event logs).
    pub extra: Vec<(String, Vec<u8>)>,
}

/// Per-`eps` results of the exit statistics campaign.
#[derive(Debug, Clone)]
pub struct ExitStatsEps {
    pub eps: f64,
    pub ensemble: ExitEnsemble,
    pub frequencies: Vec<EdgeFrequency>,
    pub limit_p: Vec<f64>,
    pub mean: (f64, f64),
    pub conditional: Vec<Option<(f64, f64)>>,
    pub scale: f64,
    pub ks: Option<TestReport>,
    pub independence: Option<TestReport>,
    pub events: Vec<(u64, Vec<CycleEvent>)>,
}

impl ExitStatsEps {
    pub fn ratio(&self) -> f64 {
        self.mean.0 / self.scale
    }
}

fn exit_start(spec: StartSpec, domain: &TubeDomain, j: VertexId) -> Result<Start, HarnessError> {
    Ok(match spec {
        StartSpec::Collar => Start::Point(default_start(domain, j)?),
        StartSpec::RandomCollar => Start::RandomCollar(j),
        StartSpec::Center => Start::Point(domain.graph().position(j)),
    })
}

pub fn exit_stats_eps(
    domain: &TubeDomain,
    spec: &ExitStatsSpec,
    sim: &SimConfig,
    workers: usize,
) -> Result<ExitStatsEps, HarnessError> {
    let j = VertexId(spec.vertex);
    let g = domain.graph();
    let family = spec.levels.resolve(domain, j)?;
    let start = exit_start(spec.start, domain, j)?;
    let delta = match &spec.delta {
        None => None,
        Some(DeltaSpec::Value(d)) => Some(*d),
        Some(DeltaSpec::Auto(s)) if s == "auto" => Some(default_delta(domain, &family)),
        Some(DeltaSpec::Auto(s)) => {
            return Err(HarnessError::Config(format!("delta must be a number or \"auto\", got \"{s}\"")))
        }
    };
    let runs = run_ensemble(spec.n, workers, |i| -> Result<(ExitRecord, Vec<CycleEvent>), SimError> {
        match delta {
            Some(d) => run_cycles(domain, start, d, &family, sim, i),
            None => Ok((run_until_sections(domain, start, std::slice::from_ref(&family), sim, i)?, Vec::new())),
        }
    });
    let mut records = Vec::with_capacity(runs.len());
    let mut events = Vec::new();
    for (i, r) in runs.into_iter().enumerate() {
        let (rec, ev) = r?;
        records.push(rec);
        if delta.is_some() {
            events.push((i as u64, ev));
        }
    }
    let summary = EnsembleSummary { eps: domain.eps(), vertex: j, levels: family.levels.clone(), delta };
    let ensemble = ExitEnsemble::new(records, summary)?;
    let frequencies = exit_place_distribution(&ensemble)?;
    let limit_p = exit_edge_probability(g, j, &family.levels)?.into_iter().map(|(_, p)| p).collect();
    let mean = mean_exit_time(&ensemble)?;
    let conditional = family.levels.iter().map(|&(k, _)| conditional_mean_exit_time(&ensemble, k).ok()).collect();
    let scale = mean_exit_scale(g, j, &family.levels, domain.radius(j), domain.eps())?;
    let big = ensemble.uncensored_count() >= 500;
    let ks = if big { Some(ks_exponential(&ensemble, scale)?) } else { None };
    let independence = if big && family.levels.len() >= 2 { Some(independence_test(&ensemble)?) } else { None };
    Ok(ExitStatsEps {
        eps: domain.eps(),
        ensemble,
        frequencies,
        limit_p,
        mean,
        conditional,
        scale,
        ks,
        independence,
        events,
    })
}

pub fn run_exit_stats(p: &Prepared, seed: u64, workers: usize) -> Result<(Vec<ExitStatsEps>, RunOutput), HarnessError> {
    let spec = p.config.exit_stats.as_ref().ok_or_else(|| missing(Kind::ExitStats, "exit_stats"))?;
    let sim = p.config.sim.to_config(seed)?;
    let mut per = Vec::new();
    for d in &p.domains {
        per.push(exit_stats_eps(d, spec, &sim, workers)?);
    }
    let mut csv = Table::new(&[
        "eps",
        "edge",
        "empirical_p",
        "wilson_lo",
        "wilson_hi",
        "limit_p",
        "mean_time",
        "se",
        "limit_scale",
        "ratio",
        "conditional_mean",
        "conditional_se",
        "ks_d",
        "chi2_p",
        "n",
        "censored",
    ]);
    let mut plot = Table::new(&["eps", "ratio", "ks_d", "chi2_p", "max_abs_p_error"]);
    let mut out = RunOutput { pass: true, ..Default::default() };
    for r in &per {
        let ks = r.ks.as_ref().map_or(f64::NAN, |t| t.value);
        let chi = r.independence.as_ref().map_or(f64::NAN, |t| t.value);
        let mut worst = 0.0f64;
        for ((f, lp), cm) in r.frequencies.iter().zip(&r.limit_p).zip(&r.conditional) {
            worst = worst.max((f.frequency - lp).abs());
            out.pass &= f.covers(*lp);
            let (cmean, cse) = cm.unwrap_or((f64::NAN, f64::NAN));
            csv.rows.push(vec![
                num(r.eps),
                f.edge.0.to_string(),
                num(f.frequency),
                num(f.lo),
                num(f.hi),
                num(*lp),
                num(r.mean.0),
                num(r.mean.1),
                num(r.scale),
                num(r.ratio()),
                num(cmean),
                num(cse),
                num(ks),
                num(chi),
                r.ensemble.uncensored_count().to_string(),
                r.ensemble.censored_count().to_string(),
            ]);
        }
        out.pass &= r.ks.as_ref().is_none_or(|t| t.pass) && r.independence.as_ref().is_none_or(|t| t.pass);
        plot.rows.push(vec![num(r.eps), num(r.ratio()), num(ks), num(chi), num(worst)]);
        out.censoring.push((r.eps, r.ensemble.censoring_rate()));
        let _ = writeln!(
            out.summary,
            "eps = {}: mean {:.5} +- {:.5}, scale {:.5}, ratio {:.4}",
            r.eps,
            r.mean.0,
            r.mean.1,
            r.scale,
            r.ratio()
        );
        for (f, lp) in r.frequencies.iter().zip(&r.limit_p) {
            let _ = writeln!(
                out.summary,
                "  {}: p = {:.4} [{:.4}, {:.4}] vs {:.4} {}",
                f.edge,
                f.frequency,
                f.lo,
                f.hi,
                lp,
                if f.covers(*lp) { "covered" } else { "missed" }
            );
        }
        for t in r.ks.iter().chain(&r.independence) {
            let _ = writeln!(out.summary, "  {t}");
        }
        if !r.events.is_empty() {
            let mut buf = Vec::new();
            write_event_log(&mut buf, &r.events).map_err(|e| HarnessError::Simulation(e.to_string()))?;
            out.extra.push((format!("events_eps{}.csv", r.eps), buf));
        }
    }
    out.csv = csv;
    out.plot = plot;
    Ok((per, out))
}

fn start_points(domain: &TubeDomain, x: &GraphPoint, fiber: usize, seed: u64) -> Vec<Vec3> {
    fiber_sample(domain, x, fiber, sub_seed(seed, "fiber", 0))
}

pub fn run_metastable(p: &Prepared, seed: u64, workers: usize) -> Result<RunOutput, HarnessError> {
    let spec = p.config.metastable.as_ref().ok_or_else(|| missing(Kind::MetastableIntermediate, "metastable"))?;
    let g = &p.graph;
    let x = spec.x.resolve(g)?;
    let obs = check_observables(g, &spec.observables)?;
    let probes: Vec<Probe> = obs.iter().cloned().map(Probe::Observable).collect();
    let mut csv = Table::new(&[
        "eps",
        "i",
        "t_rule",
        "t",
        "x",
        "z_index",
        "observable",
        "mc",
        "se",
        "limit",
        "discrepancy_se",
        "verdict",
    ]);
    let mut plot = Table::new(&["eps", "observable", "mc", "se", "limit"]);
    let mut out = RunOutput { pass: true, ..Default::default() };
    for (ei, d) in p.domains.iter().enumerate() {
        let t = match spec.t_rule {
            TimeRule::GeometricMean => intermediate_time(&p.scaling, p.config.dim, spec.i, d.eps())?,
            TimeRule::Fixed(t) => t,
            TimeRule::FirstCritical(s) => s * first_timescale(&p.scaling, p.config.dim, d.eps()),
        };
        let sim = p.config.sim.to_config(sub_seed(seed, "metastable", ei as u64))?;
        let mut worst_censoring = 0.0f64;
        for (zi, z) in start_points(d, &x, spec.fiber, seed).into_iter().enumerate() {
            let sim = SimConfig { seed: sub_seed(sim.seed, "point", zi as u64), ..sim };
            let est = &mc_probes(d, Start::Point(z), &[t], &probes, spec.n, &sim, workers)?[0];
            for (f, e) in obs.iter().zip(est) {
                let limit = predict_intermediate(g, &p.scaling, spec.i, &x, f)?;
                let rep = PredictionReport::new("metastable", e, limit, spec.tolerance_se, 0.0);
                out.pass &= rep.pass;
                worst_censoring = worst_censoring.max(e.censoring_rate());
                csv.rows.push(vec![
                    num(d.eps()),
                    spec.i.to_string(),
                    spec.t_rule.label(),
                    num(t),
                    point_label(&x),
                    zi.to_string(),
                    f.label(),
                    num(e.mean),
                    num(e.se),
                    num(limit),
                    num(rep.discrepancy),
                    rep.verdict().into(),
                ]);
                if zi == 0 {
                    plot.rows.push(vec![num(d.eps()), f.label(), num(e.mean), num(e.se), num(limit)]);
                }
                let _ = writeln!(
                    out.summary,
                    "eps {} t {:.4} z#{zi} {}: {:.4} +- {:.4} vs {:.4} ({})",
                    d.eps(),
                    t,
                    f.label(),
                    e.mean,
                    e.se,
                    limit,
                    rep.verdict()
                );
            }
        }
        out.censoring.push((d.eps(), worst_censoring));
    }
    out.csv = csv;
    out.plot = plot;
    Ok(out)
}

fn is_dumbbell(g: &MetricGraph) -> bool {
    g.vertex_count() == 2 && g.edge_count() == 1
}

/// Result rows of the first-critical comparison at one `eps`.
#[derive(Debug, Clone)]
pub struct CtmcRow {
    pub eps: f64,
    pub s: f64,
    pub t: f64,
    pub z_index: usize,
    pub probe: Probe,
    pub estimate: McEstimate,
    pub limit: f64,
    pub report: PredictionReport,
    pub analytic: Option<f64>,
}

pub fn ctmc_compare_rows(p: &Prepared, seed: u64, workers: usize) -> Result<Vec<CtmcRow>, HarnessError> {
    let spec = p.config.ctmc_compare.as_ref().ok_or_else(|| missing(Kind::CtmcCompare, "ctmc_compare"))?;
    let g = &p.graph;
    let j1 = smallest_vertex(p)?;
    let x = match &spec.x {
        Some(x) => x.resolve(g)?,
        None => GraphPoint::Vertex(j1),
    };
    let obs = check_observables(g, &spec.observables)?;
    let mut probes: Vec<Probe> = obs.iter().cloned().map(Probe::Observable).collect();
    probes.push(Probe::Collar(j1));
    let mut s_sorted = spec.s.clone();
    s_sorted.sort_by(f64::total_cmp);
    let mut rows = Vec::new();
    for (ei, d) in p.domains.iter().enumerate() {
        let family = spec.levels.resolve(d, j1)?;
        let k = kappa(g, j1, &family.levels)?;
        let t1 = first_timescale(&p.scaling, p.config.dim, d.eps());
        let times: Vec<f64> = s_sorted.iter().map(|s| s * t1).collect();
        let base = sub_seed(seed, "ctmc", ei as u64);
        for (zi, z) in start_points(d, &x, spec.fiber, seed).into_iter().enumerate() {
            let sim = p.config.sim.to_config(sub_seed(base, "point", zi as u64))?;
            let est = mc_probes(d, Start::Point(z), &times, &probes, spec.n, &sim, workers)?;
            for ((&s, &t), row) in s_sorted.iter().zip(&times).zip(est) {
                for (probe, e) in probes.iter().zip(row) {
                    // the collar indicator is compared with P(Y(s) = O_j1)
                    let f = match probe {
                        Probe::Observable(f) => f.clone(),
                        Probe::Collar(j) => Observable::Bump(*j),
                    };
                    let limit = predict_first_critical(g, &p.scaling, &family, &x, s, &f)?;
                    let analytic = (is_dumbbell(g) && x == GraphPoint::Vertex(j1)).then(|| (-k * s).exp());
                    let report =
                        PredictionReport::new("ctmc-compare", &e, limit, spec.tolerance_se, spec.tolerance_abs);
                    rows.push(CtmcRow {
                        eps: d.eps(),
                        s,
                        t,
                        z_index: zi,
                        probe: probe.clone(),
                        estimate: e,
                        limit,
                        report,
                        analytic,
                    });
                }
            }
        }
    }
    Ok(rows)
}

pub fn run_ctmc_compare(p: &Prepared, seed: u64, workers: usize) -> Result<RunOutput, HarnessError> {
    let rows = ctmc_compare_rows(p, seed, workers)?;
    let x = match p.config.ctmc_compare.as_ref().and_then(|s| s.x.as_ref()) {
        Some(x) => point_label(&x.resolve(&p.graph)?),
        None => smallest_vertex(p)?.to_string(),
    };
    let mut csv = Table::new(&[
        "eps",
        "s",
        "t",
        "x",
        "z_index",
        "observable",
        "mc",
        "se",
        "ctmc_limit",
        "discrepancy_se",
        "verdict",
        "analytic_exp_minus_kappa_s",
    ]);
    let mut plot = Table::new(&["eps", "s", "observable", "mc", "se", "ctmc_limit"]);
    let mut out = RunOutput { pass: true, ..Default::default() };
    for r in &rows {
        out.pass &= r.report.pass;
        csv.rows.push(vec![
            num(r.eps),
            num(r.s),
            num(r.t),
            x.clone(),
            r.z_index.to_string(),
            r.probe.label(),
            num(r.estimate.mean),
            num(r.estimate.se),
            num(r.limit),
            num(r.report.discrepancy),
            r.report.verdict().into(),
            r.analytic.map_or(String::new(), num),
        ]);
        if r.z_index == 0 {
            plot.rows.push(vec![
                num(r.eps),
                num(r.s),
                r.probe.label(),
                num(r.estimate.mean),
                num(r.estimate.se),
                num(r.limit),
            ]);
        }
        let _ = writeln!(
            out.summary,
            "eps {} s {} z#{} {}: {:.4} +- {:.4} vs {:.4} ({})",
            r.eps,
            r.s,
            r.z_index,
            r.probe.label(),
            r.estimate.mean,
            r.estimate.se,
            r.limit,
            r.report.verdict()
        );
    }
    for d in &p.domains {
        let worst = rows.iter().filter(|r| r.eps == d.eps()).map(|r| r.estimate.censoring_rate()).fold(0.0, f64::max);
        out.censoring.push((d.eps(), worst));
    }
    out.csv = csv;
    out.plot = plot;
    Ok(out)
}

pub fn run_pde(p: &Prepared, seed: u64, workers: usize) -> Result<RunOutput, HarnessError> {
    let spec = p.config.pde.as_ref().ok_or_else(|| missing(Kind::Pde, "pde"))?;
    let g = &p.graph;
    let x = spec.x.resolve(g)?;
    let phi = check_observables(g, &spec.phi)?;
    let probes: Vec<Probe> = phi.iter().cloned().map(Probe::Observable).collect();
    let mut csv = Table::new(&[
        "eps",
        "t_rule",
        "t",
        "x",
        "z_index",
        "phi",
        "estimate",
        "se",
        "limit",
        "discrepancy_se",
        "verdict",
    ]);
    let mut plot = Table::new(&["eps", "t_rule", "phi", "estimate", "se", "limit"]);
    let mut out = RunOutput { pass: true, ..Default::default() };
    for (ei, d) in p.domains.iter().enumerate() {
        let mut worst = 0.0f64;
        for (ri, rule) in spec.t_rules.iter().enumerate() {
            let (t, limits): (f64, Vec<f64>) = match rule {
                TimeRule::GeometricMean | TimeRule::Fixed(_) => {
                    let t = match rule {
                        TimeRule::Fixed(t) => *t,
                        _ => intermediate_time(&p.scaling, p.config.dim, spec.i, d.eps())?,
                    };
                    let l = phi
                        .iter()
                        .map(|f| predict_intermediate(g, &p.scaling, spec.i, &x, f))
                        .collect::<Result<_, _>>()?;
                    (t, l)
                }
                TimeRule::FirstCritical(s) => {
                    let j1 = smallest_vertex(p)?;
                    let family = spec.levels.resolve(d, j1)?;
                    let t = s * first_timescale(&p.scaling, p.config.dim, d.eps());
                    let l = phi
                        .iter()
                        .map(|f| predict_first_critical(g, &p.scaling, &family, &x, *s, f))
                        .collect::<Result<_, _>>()?;
                    (t, l)
                }
            };
            let base = sub_seed(seed, "pde", (ei * spec.t_rules.len() + ri) as u64);
            for (zi, z) in start_points(d, &x, spec.fiber, seed).into_iter().enumerate() {
                let sim = p.config.sim.to_config(sub_seed(base, "point", zi as u64))?;
                let est = &mc_probes(d, Start::Point(z), &[t], &probes, spec.n, &sim, workers)?[0];
                for ((f, e), &limit) in phi.iter().zip(est).zip(&limits) {
                    let rep = PredictionReport::new("pde", e, limit, spec.tolerance_se, 0.0);
                    out.pass &= rep.pass;
                    worst = worst.max(e.censoring_rate());
                    csv.rows.push(vec![
                        num(d.eps()),
                        rule.label(),
                        num(t),
                        point_label(&x),
                        zi.to_string(),
                        f.label(),
                        num(e.mean),
                        num(e.se),
                        num(limit),
                        num(rep.discrepancy),
                        rep.verdict().into(),
                    ]);
                    if zi == 0 {
                        plot.rows.push(vec![num(d.eps()), rule.label(), f.label(), num(e.mean), num(e.se), num(limit)]);
                    }
                    let _ = writeln!(
                        out.summary,
                        "eps {} {} (t {:.4}) z#{zi} {}: {:.4} +- {:.4} vs {:.4} ({})",
                        d.eps(),
                        rule.label(),
                        t,
                        f.label(),
                        e.mean,
                        e.se,
                        limit,
                        rep.verdict()
                    );
                }
            }
        }
        out.censoring.push((d.eps(), worst));
    }
    out.csv = csv;
    out.plot = plot;
    Ok(out)
}

pub fn run_localization(p: &Prepared, seed: u64, workers: usize) -> Result<RunOutput, HarnessError> {
    let spec = p.config.localization.as_ref().ok_or_else(|| missing(Kind::Localization, "localization"))?;
    let j1 = smallest_vertex(p)?;
    let mut csv = Table::new(&[
        "eps",
        "s",
        "t",
        "delta",
        "far_probability",
        "not_escaped",
        "n",
        "censored",
        "threshold",
        "verdict",
    ]);
    let mut plot = Table::new(&["eps", "s", "far_probability"]);
    let mut out = RunOutput { pass: true, ..Default::default() };
    for (ei, d) in p.domains.iter().enumerate() {
        let delta = match spec.delta {
            Some(x) => x,
            None => {
                let fam = SectionFamily::exit_levels(d, j1)?;
                spec.delta_fraction * fam.levels.iter().map(|&(_, l)| l).fold(f64::INFINITY, f64::min)
            }
        };
        let sim = p.config.sim.to_config(sub_seed(seed, "localization", ei as u64))?;
        let t1 = first_timescale(&p.scaling, p.config.dim, d.eps());
        let mut s_sorted = spec.s.clone();
        s_sorted.sort_by(f64::total_cmp);
        let loc = localization_run(d, j1, &s_sorted, delta, spec.n, &sim, workers)?;
        for l in &loc {
            let pass = l.far < spec.threshold;
            out.pass &= pass;
            csv.rows.push(vec![
                num(d.eps()),
                num(l.s),
                num(l.s * t1),
                num(delta),
                num(l.far),
                num(l.inside),
                l.n.to_string(),
                l.censored.to_string(),
                num(spec.threshold),
                if pass { "pass" } else { "fail" }.into(),
            ]);
            plot.rows.push(vec![num(d.eps()), num(l.s), num(l.far)]);
            let _ = writeln!(out.summary, "eps {} s {}: far {:.4} (not escaped {:.4})", d.eps(), l.s, l.far, l.inside);
        }
        let rate = loc.first().map_or(0.0, |l| l.censored as f64 / (l.n + l.censored).max(1) as f64);
        out.censoring.push((d.eps(), rate));
    }
    out.csv = csv;
    out.plot = plot;
    Ok(out)
}

/// Runs the campaign named by the config's kind.
pub fn run_kind(p: &Prepared, seed: u64, workers: usize) -> Result<RunOutput, HarnessError> {
    match p.config.kind {
        Kind::ExitStats => run_exit_stats(p, seed, workers).map(|(_, o)| o),
        Kind::MetastableIntermediate => run_metastable(p, seed, workers),
        Kind::CtmcCompare => run_ctmc_compare(p, seed, workers),
        Kind::Pde => run_pde(p, seed, workers),
        Kind::Localization => run_localization(p, seed, workers),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensoringEntry {
    pub eps: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub code_version: String,
    pub kind: String,
    pub seed: u64,
    pub workers: usize,
    pub started_unix: u64,
    pub finished_unix: Option<u64>,
    pub censoring: Vec<CensoringEntry>,
    pub files: Vec<String>,
    pub status: String,
}

fn now_unix() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    fs::write(path, bytes).map_err(io_err(path))
}

fn write_manifest(out: &Path, m: &RunManifest) -> Result<(), HarnessError> {
    let json = serde_json::to_string_pretty(m).expect("manifest serializes");
    write_file(&out.join("manifest.json"), json.as_bytes())
}

/// Worker count: explicit value, else the environment variable, else all cores.
pub fn resolve_workers(cli: Option<usize>, config: Option<usize>) -> usize {
    cli.or(config).or_else(|| std::env::var(WORKERS_ENV).ok().and_then(|v| v.trim().parse().ok())).unwrap_or(0)
}

/// Executes a campaign and writes its files into `out`. Returns the exit code.
pub fn execute(
    expected: Kind,
    text: &str,
    out: &Path,
    workers: Option<usize>,
    seed: Option<u64>,
) -> Result<i32, HarnessError> {
    let p = prepare(text)?;
    if p.config.kind != expected {
        return Err(HarnessError::Config(format!(
            "config kind is \"{}\" but the command runs \"{}\"",
            p.config.kind.as_str(),
            expected.as_str()
        )));
    }
    let seed = seed.unwrap_or(p.config.seed);
    let workers = resolve_workers(workers, p.config.workers);
    fs::create_dir_all(out).map_err(io_err(out))?;
    let stem = p.config.kind.as_str();
    let mut manifest = RunManifest {
        config_hash: p.hash.clone(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        kind: stem.to_string(),
        seed,
        workers,
        started_unix: now_unix(),
        finished_unix: None,
        censoring: Vec::new(),
        files: Vec::new(),
        status: "running".into(),
    };
    write_manifest(out, &manifest)?;
    let result = run_kind(&p, seed, workers)?;
    let mut files = vec![format!("{stem}.csv"), format!("{stem}.tsv"), "summary.txt".to_string()];
    write_file(&out.join(&files[0]), &result.csv.to_csv(&p.hash))?;
    write_file(&out.join(&files[1]), result.plot.to_tsv().as_bytes())?;
    write_file(&out.join(&files[2]), result.summary.as_bytes())?;
    for (name, bytes) in &result.extra {
        write_file(&out.join(name), bytes)?;
        files.push(name.clone());
    }
    manifest.finished_unix = Some(now_unix());
    manifest.censoring = result.censoring.iter().map(|&(eps, rate)| CensoringEntry { eps, rate }).collect();
    manifest.files = files;
    manifest.status = if result.pass { "pass" } else { "fail" }.into();
    write_manifest(out, &manifest)?;
    print!("{}", result.summary);
    Ok(if result.pass { EXIT_OK } else { EXIT_ACCEPTANCE })
}

/// Parses the config and builds every domain; prints a short description.
pub fn validate(text: &str) -> Result<String, HarnessError> {
    let p = prepare(text)?;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "config ok: kind {}, d = {}, {} vertices, {} edges, hash {}",
        p.config.kind.as_str(),
        p.config.dim,
        p.graph.vertex_count(),
        p.graph.edge_count(),
        &p.hash[..12]
    );
    for d in &p.domains {
        let radii: Vec<String> = d.radii().iter().map(|r| format!("{r:.4}")).collect();
        let _ = writeln!(s, "  eps = {}: radii [{}], feasible", d.eps(), radii.join(", "));
    }
    Ok(s)
}
