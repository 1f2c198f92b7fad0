//! Monte Carlo observables of the full process set against the limiting
//! predictions on the graph: the frozen-vertex chains of the intermediate
//! scales and the continuous-time chain of the first critical scale.

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{GeometryError, ScalingLaw, SectionFamily, TubeDomain};
use crate::graph::{GraphError, GraphPoint, MetricGraph, VertexId};
use crate::limits::{
    absorption_distribution, ctmc_build, ctmc_law_at, hitting_weights, intermediate_chain, mu_extended,
    timescale_ladder, LimitError,
};
use crate::sde::{observe, run_ensemble, trajectory_rng, uniform_transverse, SimConfig, SimError, Start};
use crate::stats::{Criterion, TestReport};
use crate::vec3::Vec3;

/// Largest censoring rate for which an estimate counts as valid.
pub const MAX_CENSORING: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PredictError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Limit(#[from] LimitError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{0}")]
    Argument(String),
}

/// A continuous function on the graph: values at the vertices, linear along edges.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Observable {
    /// 1 at the vertex, 0 at all others.
    Bump(VertexId),
    Constant(f64),
    /// An embedded coordinate axis (0 = x, 1 = y, 2 = z).
    Coordinate(usize),
    Values(Vec<f64>),
}

impl Observable {
    pub fn check(&self, graph: &MetricGraph) -> Result<(), PredictError> {
        match self {
            Observable::Bump(j) => {
                graph.vertex(*j)?;
            }
            Observable::Constant(c) if !c.is_finite() => {
                return Err(PredictError::Argument(format!("constant {c} is not finite")));
            }
            Observable::Coordinate(a) if *a >= graph.dim() => {
                return Err(PredictError::Argument(format!("coordinate axis {a} outside dimension {}", graph.dim())));
            }
            Observable::Values(v) if v.len() != graph.vertex_count() || v.iter().any(|x| !x.is_finite()) => {
                return Err(PredictError::Argument(format!(
                    "observable needs {} finite vertex values, got {}",
                    graph.vertex_count(),
                    v.len()
                )));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn at_vertex(&self, graph: &MetricGraph, j: VertexId) -> f64 {
        match self {
            Observable::Bump(b) => f64::from(u8::from(*b == j)),
            Observable::Constant(c) => *c,
            Observable::Coordinate(a) => graph.position(j).component(*a),
            Observable::Values(v) => v[j.index()],
        }
    }

    pub fn eval(&self, graph: &MetricGraph, p: &GraphPoint) -> f64 {
        match graph.normalize(*p) {
            GraphPoint::Vertex(j) => self.at_vertex(graph, j),
            GraphPoint::OnEdge { edge, arclength } => {
                if let Observable::Constant(c) = self {
                    return *c;
                }
                let e = &graph.edges()[edge.index()];
                let t = arclength / e.length;
                (1.0 - t) * self.at_vertex(graph, e.lower()) + t * self.at_vertex(graph, e.upper())
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            Observable::Bump(j) => format!("bump({j})"),
            Observable::Constant(c) => format!("const({c})"),
            Observable::Coordinate(a) => format!("coord({a})"),
            Observable::Values(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                format!("values({})", parts.join(";"))
            }
        }
    }
}

/// Sample mean of an observable over independent trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
    pub censored: usize,
}

impl McEstimate {
    pub fn censoring_rate(&self) -> f64 {
        let total = self.n + self.censored;
        if total == 0 {
            0.0
        } else {
            self.censored as f64 / total as f64
        }
    }

    pub fn valid(&self) -> bool {
        self.censoring_rate() <= MAX_CENSORING
    }

    fn from_values(values: &[f64], censored: usize) -> Self {
        let n = values.len();
        if n == 0 {
            return McEstimate { mean: f64::NAN, se: f64::NAN, n, censored };
        }
        let nf = n as f64;
        let mean = values.iter().sum::<f64>() / nf;
        let se = if n > 1 {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (nf - 1.0);
            (var / nf).sqrt()
        } else {
            0.0
        };
        McEstimate { mean, se, n, censored }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionReport {
    pub experiment: String,
    pub estimate: f64,
    pub se: f64,
    pub prediction: f64,
    /// `(estimate - prediction) / se`; infinite when se is 0 and they differ.
    pub discrepancy: f64,
    /// Allowed discrepancy in SE units.
    pub tolerance_se: f64,
    /// Absolute slack added on top: the pass band is `max(tolerance_se * se, tolerance_abs)`.
    pub tolerance_abs: f64,
    pub n: usize,
    pub censored: usize,
    pub valid: bool,
    pub pass: bool,
}

impl PredictionReport {
    pub fn new(experiment: &str, est: &McEstimate, prediction: f64, tolerance_se: f64, tolerance_abs: f64) -> Self {
        let diff = est.mean - prediction;
        let discrepancy = if est.se > 0.0 {
            diff / est.se
        } else if diff.abs() <= 1e-12 {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        };
        let band = (tolerance_se * est.se).max(tolerance_abs).max(1e-12);
        let valid = est.valid() && est.n > 0;
        PredictionReport {
            experiment: experiment.to_string(),
            estimate: est.mean,
            se: est.se,
            prediction,
            discrepancy,
            tolerance_se,
            tolerance_abs,
            n: est.n,
            censored: est.censored,
            valid,
            pass: valid && diff.abs() <= band,
        }
    }

    pub fn verdict(&self) -> &'static str {
        match (self.valid, self.pass) {
            (false, _) => "invalid",
            (true, true) => "pass",
            (true, false) => "fail",
        }
    }
}

fn check_n(n: u64) -> Result<(), PredictError> {
    if n < 100 {
        return Err(PredictError::Argument(format!("need at least 100 trajectories, got {n}")));
    }
    Ok(())
}

/// A quantity read off a path position.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Probe {
    /// `F(Pi_eps(z))`.
    Observable(Observable),
    /// Indicator that `z` lies within the restart section of the vertex,
    /// i.e. `d(Pi(z), O_j) <= r_j + 3 eps`.
    Collar(VertexId),
}

impl Probe {
    pub fn label(&self) -> String {
        match self {
            Probe::Observable(f) => f.label(),
            Probe::Collar(j) => format!("collar({j})"),
        }
    }

    fn check(&self, graph: &MetricGraph) -> Result<(), PredictError> {
        match self {
            Probe::Observable(f) => f.check(graph),
            Probe::Collar(j) => graph.vertex(*j).map(|_| ()).map_err(PredictError::from),
        }
    }

    pub fn value(&self, domain: &TubeDomain, z: Vec3) -> Result<f64, PredictError> {
        Ok(match self {
            Probe::Observable(f) => f.eval(domain.graph(), &domain.continuous_projection(z)?),
            Probe::Collar(j) => {
                let d = domain.graph().distance_to_vertex(&domain.nearest_projection(z), *j);
                f64::from(u8::from(d <= domain.collar_level(*j)))
            }
        })
    }
}

/// Estimates of every probe at each of the sorted `times`, all from the same
/// `n` trajectories. Indexed `[time][probe]`.
pub fn mc_probes(
    domain: &TubeDomain,
    start: Start,
    times: &[f64],
    probes: &[Probe],
    n: u64,
    config: &SimConfig,
    workers: usize,
) -> Result<Vec<Vec<McEstimate>>, PredictError> {
    check_n(n)?;
    for p in probes {
        p.check(domain.graph())?;
    }
    let runs = run_ensemble(n, workers, |i| -> Result<Option<Vec<f64>>, PredictError> {
        let obs = observe(domain, start, times, None, config, i)?;
        if obs.censored {
            return Ok(None);
        }
        let mut v = Vec::with_capacity(times.len() * probes.len());
        for &z in &obs.positions {
            for p in probes {
                v.push(p.value(domain, z)?);
            }
        }
        Ok(Some(v))
    });
    let cols = times.len() * probes.len();
    let mut values = vec![Vec::with_capacity(n as usize); cols];
    let mut censored = 0;
    for r in runs {
        match r? {
            Some(v) => {
                for (col, x) in values.iter_mut().zip(v) {
                    col.push(x);
                }
            }
            None => censored += 1,
        }
    }
    let est: Vec<McEstimate> = values.iter().map(|v| McEstimate::from_values(v, censored)).collect();
    Ok(est.chunks(probes.len().max(1)).map(|c| c.to_vec()).collect())
}

/// Estimates of `E F(Pi_eps(Z(t)))` at each of the sorted `times`.
pub fn mc_observable_times(
    domain: &TubeDomain,
    start: Start,
    times: &[f64],
    f: &Observable,
    n: u64,
    config: &SimConfig,
    workers: usize,
) -> Result<Vec<McEstimate>, PredictError> {
    let est = mc_probes(domain, start, times, &[Probe::Observable(f.clone())], n, config, workers)?;
    Ok(est.into_iter().map(|row| row[0]).collect())
}

/// `E_z F(Pi_eps(Z(t)))` over `n` trajectories.
pub fn mc_observable(
    domain: &TubeDomain,
    start: Start,
    t: f64,
    f: &Observable,
    n: u64,
    config: &SimConfig,
    workers: usize,
) -> Result<McEstimate, PredictError> {
    if !(t >= 0.0) {
        return Err(PredictError::Argument(format!("time must be nonnegative, got {t}")));
    }
    Ok(mc_observable_times(domain, start, &[t], f, n, config, workers)?[0])
}

/// Neumann heat solution `E_z phi(Z(t))` for initial data `phi = F o Pi_eps`.
pub fn pde_solution(
    domain: &TubeDomain,
    start: Start,
    t: f64,
    phi: &Observable,
    n: u64,
    config: &SimConfig,
    workers: usize,
) -> Result<McEstimate, PredictError> {
    mc_observable(domain, start, t, phi, n, config, workers)
}

/// `sum_j' F(O_j') mu^i(x, O_j')`.
pub fn predict_intermediate(
    graph: &MetricGraph,
    scaling: &ScalingLaw,
    i: usize,
    x: &GraphPoint,
    f: &Observable,
) -> Result<f64, PredictError> {
    f.check(graph)?;
    graph.check_point(x)?;
    let dist = absorption_distribution(&intermediate_chain(graph, scaling, i)?)?;
    let mu = mu_extended(&dist, graph, x);
    Ok(graph.vertex_ids().map(|j| f.at_vertex(graph, j) * mu[j.index()]).sum())
}

/// `sum_j p(x, O_j) E_{O_j} F(Y(s))` for the chain built on `levels`.
pub fn predict_first_critical(
    graph: &MetricGraph,
    scaling: &ScalingLaw,
    levels: &SectionFamily,
    x: &GraphPoint,
    s: f64,
    f: &Observable,
) -> Result<f64, PredictError> {
    if !(s >= 0.0) {
        return Err(PredictError::Argument(format!("s must be nonnegative, got {s}")));
    }
    f.check(graph)?;
    graph.check_point(x)?;
    let ctmc = ctmc_build(graph, scaling, levels)?;
    let mut total = 0.0;
    for (j, w) in hitting_weights(graph, x) {
        let law = ctmc_law_at(&ctmc, j, s);
        total += w * graph.vertex_ids().map(|v| law[v.index()] * f.at_vertex(graph, v)).sum::<f64>();
    }
    Ok(total)
}

/// Default intermediate test time `sqrt(T^i T^{i+1})`.
pub fn intermediate_time(scaling: &ScalingLaw, dim: usize, i: usize, eps: f64) -> Result<f64, PredictError> {
    let ladder = timescale_ladder(scaling, dim);
    if i == 0 || i >= ladder.len() {
        return Err(PredictError::Limit(LimitError::Index { index: i, max: ladder.len().saturating_sub(1) }));
    }
    Ok((ladder.timescale(i, eps) * ladder.timescale(i + 1, eps)).sqrt())
}

/// `T^1 = r_(1)^d / eps^(d-1)`.
pub fn first_timescale(scaling: &ScalingLaw, dim: usize, eps: f64) -> f64 {
    timescale_ladder(scaling, dim).timescale(1, eps)
}

/// The on-axis point over `x` followed by `extra` random points of its fiber
/// `{z : Pi_eps(z) = x}`. Vertex fibers are sampled in the ball of radius `r - 2 eps`.
pub fn fiber_sample(domain: &TubeDomain, x: &GraphPoint, extra: usize, seed: u64) -> Vec<Vec3> {
    let g = domain.graph();
    let x = g.normalize(*x);
    let mut rng = trajectory_rng(seed, u64::MAX);
    let mut out = vec![domain.fiber_point(&x, &[0.0, 0.0])];
    for _ in 0..extra {
        let z = match x {
            GraphPoint::Vertex(j) => {
                let rho = (domain.radius(j) - 2.0 * domain.eps()).max(0.0);
                g.position(j) + uniform_ball(&mut rng, domain.dim()) * rho
            }
            GraphPoint::OnEdge { edge, .. } => {
                let y = uniform_transverse(&mut rng, domain.dim(), domain.half_width(edge));
                domain.fiber_point(&x, &y)
            }
        };
        out.push(z);
    }
    out
}

fn uniform_ball<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec3 {
    loop {
        let v = Vec3::new(
            2.0 * rng.random::<f64>() - 1.0,
            2.0 * rng.random::<f64>() - 1.0,
            if dim == 3 { 2.0 * rng.random::<f64>() - 1.0 } else { 0.0 },
        );
        if v.norm_sq() <= 1.0 {
            return v;
        }
    }
}

/// Outcome of the localization experiment at each time `s T^1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Localization {
    pub s: f64,
    /// `P(d(Pi(Z), O_j1) >= delta, not yet escaped)`.
    pub far: f64,
    /// `P(not yet escaped)`.
    pub inside: f64,
    pub n: usize,
    pub censored: usize,
}

/// Runs `n` paths from the collar of `j1` and records, at each `s T^1`,
/// whether the path has not yet reached the exit levels `L^eps` and sits at
/// graph distance at least `delta` from `O_j1`.
pub fn localization_run(
    domain: &TubeDomain,
    j1: VertexId,
    s: &[f64],
    delta: f64,
    n: u64,
    config: &SimConfig,
    workers: usize,
) -> Result<Vec<Localization>, PredictError> {
    check_n(n)?;
    let scaling = domain
        .scaling()
        .ok_or_else(|| PredictError::Argument("localization needs a domain built from a scaling law".into()))?;
    if !(delta > 0.0) {
        return Err(PredictError::Argument(format!("delta must be positive, got {delta}")));
    }
    let t1 = first_timescale(scaling, domain.dim(), domain.eps());
    let times: Vec<f64> = s.iter().map(|s| s * t1).collect();
    let watch = SectionFamily::exit_levels(domain, j1)?;
    let g = domain.graph();
    let runs = run_ensemble(n, workers, |i| -> Result<Option<Vec<(bool, bool)>>, PredictError> {
        let obs = observe(domain, Start::RandomCollar(j1), &times, Some(&watch), config, i)?;
        if obs.censored {
            return Ok(None);
        }
        Ok(Some(
            obs.positions
                .iter()
                .zip(&times)
                .map(|(&z, &t)| {
                    let inside = obs.first_exit.is_none_or(|(te, _)| te > t);
                    let far = g.distance_to_vertex(&domain.nearest_projection(z), j1) >= delta;
                    (inside, inside && far)
                })
                .collect(),
        ))
    });
    let mut inside = vec![0usize; times.len()];
    let mut far = vec![0usize; times.len()];
    let mut done = 0;
    let mut censored = 0;
    for r in runs {
        match r? {
            Some(v) => {
                done += 1;
                for (c, (a, b)) in v.into_iter().enumerate() {
                    inside[c] += usize::from(a);
                    far[c] += usize::from(b);
                }
            }
            None => censored += 1,
        }
    }
    let nf = done.max(1) as f64;
    Ok(s.iter()
        .enumerate()
        .map(|(c, &s)| Localization { s, far: far[c] as f64 / nf, inside: inside[c] as f64 / nf, n: done, censored })
        .collect())
}

/// Localization verdict at a single `s`: passes when the far probability is below `threshold`.
#[allow(clippy::too_many_arguments)]
pub fn localization_check(
    domain: &TubeDomain,
    j1: VertexId,
    s: f64,
    delta: f64,
    n: u64,
    config: &SimConfig,
    workers: usize,
    threshold: f64,
) -> Result<TestReport, PredictError> {
    let loc = &localization_run(domain, j1, &[s], delta, n, config, workers)?[0];
    Ok(TestReport::new("localization_far", loc.far, threshold, Criterion::Below, loc.n, loc.censored)
        .with_notes(format!("s {s}; delta {delta}; eps {}; not escaped {:.4}", domain.eps(), loc.inside)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_domain;
    use crate::graph::shapes;
    use crate::graph::EdgeId;
    use crate::limits::{ctmc_sample, kappa};

    fn path_setup() -> (MetricGraph, ScalingLaw) {
        let g = shapes::path(&[1.0, 2.0], &[1.0, 1.0]);
        let s = ScalingLaw::new(vec![1.0; 3], vec![0.3, 0.45, 0.3], 2).unwrap();
        (g, s)
    }

    #[test]
    fn observable_interpolates() {
        let g = shapes::path(&[1.0, 2.0], &[1.0, 1.0]);
        let f = Observable::Values(vec![1.0, 3.0, -1.0]);
        let x = GraphPoint::OnEdge { edge: EdgeId(2), arclength: 0.5 };
        assert!((f.eval(&g, &x) - 2.0).abs() < 1e-15);
        let c = Observable::Coordinate(0);
        let x = GraphPoint::OnEdge { edge: EdgeId(1), arclength: 0.25 };
        assert!((c.eval(&g, &x) - g.embed(&x).x).abs() < 1e-15);
        assert!(Observable::Values(vec![1.0]).check(&g).is_err());
        assert!(Observable::Bump(VertexId(4)).check(&g).is_err());
    }

    #[test]
    fn intermediate_path_weights() {
        let (g, s) = path_setup();
        let f = Observable::Values(vec![2.0, 7.0, -1.0]);
        let v = predict_intermediate(&g, &s, 1, &GraphPoint::Vertex(VertexId(2)), &f).unwrap();
        assert!((v - (2.0 / 3.0 * 2.0 - 1.0 / 3.0)).abs() < 1e-12);
        // absorbing start returns F(x)
        let v = predict_intermediate(&g, &s, 1, &GraphPoint::Vertex(VertexId(3)), &f).unwrap();
        assert!((v + 1.0).abs() < 1e-15);
        let v = predict_intermediate(&g, &s, 1, &GraphPoint::Vertex(VertexId(2)), &Observable::Constant(4.5)).unwrap();
        assert!((v - 4.5).abs() < 1e-12);
        // linearity
        let a = Observable::Values(vec![1.0, 0.0, 2.0]);
        let b = Observable::Values(vec![0.5, 3.0, -1.0]);
        let ab = Observable::Values(vec![1.5, 3.0, 1.0]);
        let x = GraphPoint::OnEdge { edge: EdgeId(2), arclength: 0.7 };
        let sum = predict_intermediate(&g, &s, 1, &x, &a).unwrap() + predict_intermediate(&g, &s, 1, &x, &b).unwrap();
        assert!((sum - predict_intermediate(&g, &s, 1, &x, &ab).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn first_critical_dumbbell() {
        let g = shapes::dumbbell(2.0, 1.0);
        let s = ScalingLaw::new(vec![1.0; 2], vec![0.45, 0.3], 2).unwrap();
        let levels = SectionFamily::uniform(&g, VertexId(1), 1.7).unwrap();
        let k = kappa(&g, VertexId(1), &levels.levels).unwrap();
        let bump = Observable::Bump(VertexId(1));
        let o1 = GraphPoint::Vertex(VertexId(1));
        for t in [0.0, 0.5, 2.0] {
            let v = predict_first_critical(&g, &s, &levels, &o1, t, &bump).unwrap();
            assert!((v - (-k * t).exp()).abs() < 1e-10);
        }
        let f = Observable::Values(vec![3.0, -2.0]);
        let mid = GraphPoint::OnEdge { edge: EdgeId(1), arclength: 1.0 };
        let t = 1.3;
        let e = (-k * t).exp();
        let want = 0.5 * (e * 3.0 + (1.0 - e) * -2.0) + 0.5 * -2.0;
        let got = predict_first_critical(&g, &s, &levels, &mid, t, &f).unwrap();
        assert!((got - want).abs() < 1e-10);

        // chain Monte Carlo oracle
        let ctmc = ctmc_build(&g, &s, &levels).unwrap();
        let mut rng = trajectory_rng(4, 0);
        let n = 20_000;
        let mut acc = 0.0;
        for i in 0..n {
            let start = if i % 2 == 0 { VertexId(1) } else { VertexId(2) };
            acc += f.at_vertex(&g, ctmc_sample(&ctmc, start, t, &mut rng));
        }
        let mc = acc / n as f64;
        // values in [-2, 3] give variance at most 6.25
        assert!((mc - want).abs() < 3.0 * (6.25 / n as f64).sqrt());

        assert_eq!(predict_first_critical(&g, &s, &levels, &mid, 0.0, &Observable::Constant(2.0)).unwrap(), 2.0);
    }

    #[test]
    fn constant_observable_and_zero_time() {
        let (g, s) = path_setup();
        let d = build_domain(&g, &s, 0.04).unwrap();
        let cfg = SimConfig::with_seed(1);
        let start = Start::Point(g.position(VertexId(2)));
        let est = mc_observable(&d, start, 0.05, &Observable::Constant(1.0), 100, &cfg, 1).unwrap();
        assert_eq!((est.mean, est.se), (1.0, 0.0));
        let x = GraphPoint::OnEdge { edge: EdgeId(2), arclength: 1.0 };
        let z = d.fiber_point(&x, &[0.01, 0.0]);
        let est = mc_observable(&d, Start::Point(z), 0.0, &Observable::Coordinate(0), 100, &cfg, 1).unwrap();
        let want = Observable::Coordinate(0).eval(&g, &d.continuous_projection(z).unwrap());
        assert_eq!((est.mean, est.se), (want, 0.0));
        assert!(mc_observable(&d, start, 0.1, &Observable::Constant(1.0), 10, &cfg, 1).is_err());
    }

    #[test]
    fn fiber_points_project_to_x() {
        let (g, s) = path_setup();
        let d = build_domain(&g, &s, 0.02).unwrap();
        let x = GraphPoint::OnEdge { edge: EdgeId(2), arclength: 0.9 };
        let pts = fiber_sample(&d, &x, 8, 3);
        assert_eq!(pts.len(), 9);
        for z in pts {
            assert!(d.contains(z));
            let p = d.continuous_projection(z).unwrap();
            assert!(g.distance(&p, &x).unwrap() < 1e-12);
        }
        for z in fiber_sample(&d, &GraphPoint::Vertex(VertexId(1)), 8, 3) {
            assert_eq!(d.continuous_projection(z).unwrap(), GraphPoint::Vertex(VertexId(1)));
        }
    }

    #[test]
    fn report_bands() {
        let est = McEstimate { mean: 0.7, se: 0.01, n: 1000, censored: 0 };
        assert!(PredictionReport::new("a", &est, 0.68, 3.0, 0.0).pass);
        assert!(!PredictionReport::new("a", &est, 0.6, 3.0, 0.0).pass);
        assert!(PredictionReport::new("a", &est, 0.66, 3.0, 0.05).pass);
        let bad = McEstimate { mean: 0.7, se: 0.01, n: 980, censored: 20 };
        assert_eq!(PredictionReport::new("a", &bad, 0.7, 3.0, 0.0).verdict(), "invalid");
    }
}
