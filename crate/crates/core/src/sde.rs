//! Euler simulation of normally reflected Brownian motion `dZ = sqrt(2) dB + nu dphi`
//! in a tube domain, with first-hit detection on cross-sections.
//!
//! Proposals that leave the domain are mirrored across the tangent plane at
//! the nearest boundary point, up to eight times; if that does not bring the
//! point back, the step is redrawn with a quarter of the step size.
//!
//! With [`StepPolicy::Adaptive`] the step grows with the distance to the
//! nearest boundary or section plane, and in planar tubes away from the balls
//! the transverse reflection is done exactly by folding.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{GeometryError, Region, SectionFamily, TubeDomain};
use crate::graph::{EdgeId, GraphPoint, VertexId};
use crate::vec3::Vec3;

pub const MAX_REFLECTIONS: usize = 8;
pub const MAX_RETRIES: usize = 4;
/// Upper bound on `c_h`.
pub const MAX_STEP_COEFFICIENT: f64 = 0.05;
/// Upper bound on the RMS free step relative to the thinnest tube.
pub const MAX_RMS_FRACTION: f64 = 0.15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("start point {0:?} is outside the domain")]
    StartOutside(Vec3),
    #[error("reflection failed at {position:?} (t = {time}, step {step}) after {MAX_RETRIES} retries with h = {h}")]
    Reflection { position: Vec3, time: f64, step: u64, h: f64 },
    #[error("step budget of {0} exhausted")]
    MaxSteps(u64),
    #[error("invalid argument: {0}")]
    Argument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum StepPolicy {
    /// Every step uses the base step `h = c_h * w_min^2`.
    Fixed,
    /// Step `max(h, D^2 / (2 kappa^2))` with `D` a certified distance to the
    /// boundary and to every active section plane.
    Adaptive { kappa: f64 },
}

impl Default for StepPolicy {
    fn default() -> Self {
        StepPolicy::Adaptive { kappa: 6.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub step_coefficient: f64,
    pub max_steps: u64,
    pub seed: u64,
    pub policy: StepPolicy,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { step_coefficient: 0.01, max_steps: 500_000_000, seed: 0, policy: StepPolicy::default() }
    }
}

impl SimConfig {
    pub fn new(step_coefficient: f64, max_steps: u64, seed: u64, policy: StepPolicy) -> Result<Self, SimError> {
        let c = SimConfig { step_coefficient, max_steps, seed, policy };
        c.validate()?;
        Ok(c)
    }

    pub fn with_seed(seed: u64) -> Self {
        SimConfig { seed, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let c = self.step_coefficient;
        if !(c > 0.0 && c <= MAX_STEP_COEFFICIENT) {
            return Err(SimError::Config(format!("step coefficient {c} outside (0, {MAX_STEP_COEFFICIENT}]")));
        }
        if (2.0 * c).sqrt() > MAX_RMS_FRACTION {
            return Err(SimError::Config(format!(
                "step coefficient {c} gives an RMS step of {:.4} tube half-widths, above {MAX_RMS_FRACTION}",
                (2.0 * c).sqrt()
            )));
        }
        if self.max_steps == 0 {
            return Err(SimError::Config("max_steps must be positive".into()));
        }
        if let StepPolicy::Adaptive { kappa } = self.policy {
            if !(kappa >= 3.0) {
                return Err(SimError::Config(format!("adaptive kappa {kappa} below 3")));
            }
        }
        Ok(())
    }

    /// Base step `c_h * w^2` with `w` the thinnest tube half-width (the
    /// smallest ball radius when there are no tubes).
    pub fn base_step(&self, domain: &TubeDomain) -> f64 {
        let w = if domain.graph().edge_count() > 0 {
            domain.min_half_width()
        } else {
            domain.radii().iter().copied().fold(f64::INFINITY, f64::min)
        };
        self.step_coefficient * w * w
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkerState {
    pub position: Vec3,
    pub time: f64,
}

/// Mirrors `z` across the tangent plane at its nearest boundary point until it
/// is inside, at most [`MAX_REFLECTIONS`] times.
fn reflect_into(domain: &TubeDomain, mut z: Vec3, from: Region) -> Option<(Vec3, Region)> {
    for _ in 0..MAX_REFLECTIONS {
        let b = domain.reflect_data_near(z, from);
        z += b.normal * (2.0 * (b.point - z).dot(b.normal));
        if let Some(r) = domain.locate(z, Some(from)) {
            return Some((z, r));
        }
    }
    None
}

/// One Euler proposal `z + sqrt(2h) xi` with specular reflection. `None`
/// means the reflection did not return inside and the step must be redrawn.
pub fn step(domain: &TubeDomain, state: &WalkerState, xi: Vec3, h: f64) -> Option<WalkerState> {
    let region = domain.locate(state.position, None)?;
    let z = state.position + xi * (2.0 * h).sqrt();
    let next = match domain.locate(z, Some(region)) {
        Some(_) => z,
        None => reflect_into(domain, z, region)?.0,
    };
    Some(WalkerState { position: next, time: state.time + h })
}

/// Folds `y` into `[-w, w]` by repeated reflection at both walls.
#[inline]
pub fn fold(y: f64, w: f64) -> f64 {
    if y.abs() <= w {
        return y;
    }
    let u = (y + w).rem_euclid(4.0 * w);
    (if u > 2.0 * w { 4.0 * w - u } else { u }) - w
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Trigger {
    /// Fires once the abscissa from the vertex reaches the level.
    Outward,
    /// Fires once the abscissa drops to the level.
    Inward,
}

/// A section `{ d(Pi(z), O_j) = level }` on one edge, with a crossing direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    pub vertex: VertexId,
    pub edge: EdgeId,
    pub level: f64,
    pub trigger: Trigger,
}

impl Target {
    fn fires(&self, a: f64) -> bool {
        match self.trigger {
            Trigger::Outward => a >= self.level,
            Trigger::Inward => a <= self.level,
        }
    }
}

pub fn family_targets(family: &SectionFamily, trigger: Trigger) -> Vec<Target> {
    family.levels.iter().map(|&(edge, level)| Target { vertex: family.vertex, edge, level, trigger }).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Advance {
    Hit { target: usize, time: f64, point: Vec3, abscissa: f64 },
    Deadline,
    Censored,
}

/// Where a trajectory starts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Start {
    Point(Vec3),
    /// Uniform over the restart section `r_j + 3 eps` of `j`, the edge picked
    /// with probability proportional to `lambda^{d-1}`.
    RandomCollar(VertexId),
    /// Uniform over the transverse disk over a graph point.
    RandomFiber(GraphPoint),
}

/// On-axis point of the restart section of `j` on edge `k`.
pub fn collar_start(domain: &TubeDomain, j: VertexId, k: EdgeId) -> Result<Vec3, SimError> {
    Ok(domain.axis_point(j, k, domain.collar_level(j))?)
}

/// Default start: restart section of `j` on its least-index edge.
pub fn default_start(domain: &TubeDomain, j: VertexId) -> Result<Vec3, SimError> {
    let k =
        *domain.graph().incident(j).first().ok_or_else(|| SimError::Argument(format!("vertex {j} has no edges")))?;
    collar_start(domain, j, k)
}

/// Uniform point of the centered `(d-1)`-disk of radius `w`.
pub fn uniform_transverse<R: Rng + ?Sized>(rng: &mut R, dim: usize, w: f64) -> [f64; 2] {
    if dim == 2 {
        [w * (2.0 * rng.random::<f64>() - 1.0), 0.0]
    } else {
        let rho = w * rng.random::<f64>().sqrt();
        let phi = std::f64::consts::TAU * rng.random::<f64>();
        [rho * phi.cos(), rho * phi.sin()]
    }
}

fn sample_start<R: Rng + ?Sized>(domain: &TubeDomain, start: Start, rng: &mut R) -> Result<Vec3, SimError> {
    match start {
        Start::Point(z) => Ok(z),
        Start::RandomCollar(j) => {
            let g = domain.graph();
            let inc = g.incident(j);
            if inc.is_empty() {
                return Err(SimError::Argument(format!("vertex {j} has no edges")));
            }
            let d = domain.dim() as i32;
            let w: Vec<f64> = inc.iter().map(|&k| g.edges()[k.index()].lambda.powi(d - 1)).collect();
            let mut u = rng.random::<f64>() * w.iter().sum::<f64>();
            let mut pick = inc[inc.len() - 1];
            for (&k, &wk) in inc.iter().zip(&w) {
                if u < wk {
                    pick = k;
                    break;
                }
                u -= wk;
            }
            let s = g.arclength_from(pick, j, domain.collar_level(j));
            let y = uniform_transverse(rng, domain.dim(), domain.half_width(pick));
            Ok(domain.fiber_point(&GraphPoint::OnEdge { edge: pick, arclength: s }, &y))
        }
        Start::RandomFiber(x) => match domain.graph().normalize(x) {
            GraphPoint::Vertex(j) => Ok(domain.graph().position(j)),
            p @ GraphPoint::OnEdge { edge, .. } => {
                let y = uniform_transverse(rng, domain.dim(), domain.half_width(edge));
                Ok(domain.fiber_point(&p, &y))
            }
        },
    }
}

/// Random stream for one trajectory: seed selects the key, the trajectory
/// index selects the stream, so every trajectory is replayable on its own.
pub fn trajectory_rng(seed: u64, trajectory: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trajectory);
    rng
}

/// A single reflected Brownian path.
pub struct Walker<'a> {
    domain: &'a TubeDomain,
    pos: Vec3,
    time: f64,
    region: Region,
    steps: u64,
    rng: ChaCha8Rng,
    h_base: f64,
    policy: StepPolicy,
    max_steps: u64,
    retries: u64,
}

impl<'a> Walker<'a> {
    pub fn new(domain: &'a TubeDomain, start: Start, config: &SimConfig, trajectory: u64) -> Result<Self, SimError> {
        config.validate()?;
        let mut rng = trajectory_rng(config.seed, trajectory);
        let pos = sample_start(domain, start, &mut rng)?;
        let region = domain.locate(pos, None).ok_or(SimError::StartOutside(pos))?;
        Ok(Walker {
            domain,
            pos,
            time: 0.0,
            region,
            steps: 0,
            rng,
            h_base: config.base_step(domain),
            policy: config.policy,
            max_steps: config.max_steps,
            retries: 0,
        })
    }

    pub fn position(&self) -> Vec3 {
        self.pos
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn state(&self) -> WalkerState {
        WalkerState { position: self.pos, time: self.time }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn region(&self) -> Region {
        self.region
    }

    /// Number of redrawn steps so far.
    pub fn retries(&self) -> u64 {
        self.retries
    }

    pub fn base_step(&self) -> f64 {
        self.h_base
    }

    /// Projection of the current position onto the graph.
    pub fn projection(&self) -> GraphPoint {
        self.domain.project_in(self.pos, self.region)
    }

    fn gaussian(&mut self) -> Vec3 {
        let x: f64 = self.rng.sample(StandardNormal);
        let y: f64 = self.rng.sample(StandardNormal);
        let z: f64 = if self.domain.dim() == 3 { self.rng.sample(StandardNormal) } else { 0.0 };
        Vec3::new(x, y, z)
    }

    fn abscissa(&self, p: GraphPoint, t: &Target) -> Option<f64> {
        let g = self.domain.graph();
        match p {
            GraphPoint::Vertex(v) => {
                if v == t.vertex {
                    Some(0.0)
                } else if g.edges()[t.edge.index()].other_end(t.vertex) == Some(v) {
                    Some(g.edges()[t.edge.index()].length)
                } else {
                    None
                }
            }
            GraphPoint::OnEdge { edge, arclength } => {
                (edge == t.edge).then(|| g.arclength_from(edge, t.vertex, arclength))
            }
        }
    }

    /// Distance from the current point to the nearest active section plane.
    fn target_clearance(&self, targets: &[Target]) -> f64 {
        targets
            .iter()
            .map(|t| (self.domain.axial_from(self.pos, t.vertex, t.edge) - t.level).abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// Step size and, for planar tubes away from the balls, the strip frame
    /// allowing an exact fold step. The fold is only used when the axial
    /// reach of the step stays inside the strip; near the mouths the walls
    /// end and a plain reflected Euler step is taken instead.
    fn plan(&self, targets: &[Target]) -> (f64, Option<EdgeId>) {
        let StepPolicy::Adaptive { kappa } = self.policy else { return (self.h_base, None) };
        let d = self.domain;
        let to_target = self.target_clearance(targets);
        let scale = 2.0 * kappa * kappa;
        let clear = match self.region {
            Region::Ball(j) => d.radius(j) - (self.pos - d.graph().position(j)).norm(),
            Region::Tube(k) => {
                let s = d.strip(k);
                let v = self.pos - s.origin;
                let t = v.dot(s.dir);
                if d.dim() == 2 {
                    let axial = (t - s.start).min(s.end - t).min(to_target);
                    let h = axial * axial / scale;
                    if h >= self.h_base {
                        return (h, Some(k));
                    }
                }
                s.half_width - (v - s.dir * t).norm()
            }
        };
        let clear = clear.min(to_target);
        ((clear * clear / scale).max(self.h_base), None)
    }

    /// Draws one accepted move of size `h`; returns the new point, its region,
    /// and the step actually used.
    fn propose(&mut self, h: f64, strip: Option<EdgeId>) -> Result<(Vec3, Region, f64), SimError> {
        if let Some(k) = strip {
            let s = self.domain.strip(k);
            let v = self.pos - s.origin;
            let t = v.dot(s.dir);
            let y = v.dot(s.normal);
            let sd = (2.0 * h).sqrt();
            let xi = self.gaussian();
            let t1 = t + sd * xi.x;
            let y1 = fold(y + sd * xi.y, s.half_width);
            let z = s.origin + s.dir * t1 + s.normal * y1;
            if t1 > s.start && t1 < s.end {
                return Ok((z, Region::Tube(k), h));
            }
            if let Some(r) = self.domain.locate(z, Some(self.region)) {
                return Ok((z, r, h));
            }
        }
        let mut h = h;
        for attempt in 0..=MAX_RETRIES {
            let xi = self.gaussian();
            let z = self.pos + xi * (2.0 * h).sqrt();
            if let Some(r) = self.domain.locate(z, Some(self.region)) {
                return Ok((z, r, h));
            }
            if let Some((z, r)) = reflect_into(self.domain, z, self.region) {
                return Ok((z, r, h));
            }
            if attempt < MAX_RETRIES {
                self.retries += 1;
                h *= 0.25;
            }
        }
        Err(SimError::Reflection { position: self.pos, time: self.time, step: self.steps, h })
    }

    /// Runs until one of `targets` fires, `deadline` is reached exactly, or the
    /// step budget is exhausted. A target that already holds at the current
    /// point fires immediately.
    pub fn advance(&mut self, targets: &[Target], deadline: Option<f64>) -> Result<Advance, SimError> {
        let p = self.projection();
        let mut prev: Vec<Option<f64>> = targets.iter().map(|t| self.abscissa(p, t)).collect();
        for (i, (t, a)) in targets.iter().zip(&prev).enumerate() {
            if let Some(a) = *a {
                if t.fires(a) {
                    return Ok(Advance::Hit { target: i, time: self.time, point: self.pos, abscissa: a });
                }
            }
        }
        loop {
            if let Some(dl) = deadline {
                if self.time >= dl {
                    return Ok(Advance::Deadline);
                }
            }
            if self.steps >= self.max_steps {
                return Ok(Advance::Censored);
            }
            let (mut h, strip) = self.plan(targets);
            let mut lands_on_deadline = false;
            if let Some(dl) = deadline {
                if h >= dl - self.time {
                    h = dl - self.time;
                    lands_on_deadline = true;
                }
            }
            let (z, region, used) = self.propose(h, strip)?;
            let z0 = self.pos;
            let t0 = self.time;
            self.pos = z;
            self.region = region;
            self.steps += 1;
            self.time = if lands_on_deadline && used == h { deadline.expect("set") } else { t0 + used };
            if targets.is_empty() {
                continue;
            }
            let p = self.projection();
            let mut best: Option<(f64, usize, f64)> = None;
            for (i, t) in targets.iter().enumerate() {
                let Some(a) = self.abscissa(p, t) else {
                    prev[i] = None;
                    continue;
                };
                if t.fires(a) {
                    let f = match prev[i] {
                        Some(a0) if a != a0 => ((t.level - a0) / (a - a0)).clamp(0.0, 1.0),
                        _ => 1.0,
                    };
                    if best.is_none_or(|(bf, _, _)| f < bf) {
                        best = Some((f, i, a));
                    }
                }
                prev[i] = Some(a);
            }
            if let Some((f, i, _)) = best {
                let point = z0 + (z - z0) * f;
                return Ok(Advance::Hit {
                    target: i,
                    time: t0 + f * (self.time - t0),
                    point,
                    abscissa: targets[i].level,
                });
            }
        }
    }
}

/// One trajectory's first passage through a set of sections.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExitRecord {
    pub exit_time: f64,
    /// `None` when the trajectory was censored.
    pub exit_edge: Option<EdgeId>,
    /// Vertex whose section family was hit.
    pub exit_vertex: Option<VertexId>,
    pub exit_point: Vec3,
    /// Completed excursions to the inner section before exit.
    pub cycles: u64,
    pub steps: u64,
    pub censored: bool,
}

impl ExitRecord {
    fn censored(w: &Walker) -> Self {
        ExitRecord {
            exit_time: w.time(),
            exit_edge: None,
            exit_vertex: None,
            exit_point: w.position(),
            cycles: 0,
            steps: w.steps(),
            censored: true,
        }
    }
}

/// Runs from `start` to the first hit of any of the section families.
pub fn run_until_sections(
    domain: &TubeDomain,
    start: Start,
    sections: &[SectionFamily],
    config: &SimConfig,
    trajectory: u64,
) -> Result<ExitRecord, SimError> {
    let targets: Vec<Target> = sections.iter().flat_map(|f| family_targets(f, Trigger::Outward)).collect();
    let mut w = Walker::new(domain, start, config, trajectory)?;
    match w.advance(&targets, None)? {
        Advance::Hit { target, time, point, .. } => Ok(ExitRecord {
            exit_time: time,
            exit_edge: Some(targets[target].edge),
            exit_vertex: Some(targets[target].vertex),
            exit_point: point,
            cycles: 0,
            steps: w.steps(),
            censored: false,
        }),
        Advance::Censored => Ok(ExitRecord::censored(&w)),
        Advance::Deadline => unreachable!("no deadline set"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CycleKind {
    Tau,
    SigmaReturn,
    SigmaExit,
}

impl CycleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CycleKind::Tau => "tau",
            CycleKind::SigmaReturn => "sigma_return",
            CycleKind::SigmaExit => "sigma_exit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CycleEvent {
    pub kind: CycleKind,
    pub time: f64,
    pub edge: EdgeId,
    pub abscissa: f64,
}

/// Default inner level: `max(2 (r_j + 3 eps), 0.1 min_k L_k)`.
pub fn default_delta(domain: &TubeDomain, levels: &SectionFamily) -> f64 {
    let min_l = levels.levels.iter().map(|&(_, l)| l).fold(f64::INFINITY, f64::min);
    (2.0 * domain.collar_level(levels.vertex)).max(0.1 * min_l)
}

/// Alternates between the inner section at `delta` and the pair
/// {restart section, exit sections} until an exit section is hit.
pub fn run_cycles(
    domain: &TubeDomain,
    start: Start,
    delta: f64,
    levels: &SectionFamily,
    config: &SimConfig,
    trajectory: u64,
) -> Result<(ExitRecord, Vec<CycleEvent>), SimError> {
    let j = levels.vertex;
    let collar = domain.collar_level(j);
    let min_l = levels.levels.iter().map(|&(_, l)| l).fold(f64::INFINITY, f64::min);
    if !(delta > collar && delta < min_l) {
        return Err(SimError::Argument(format!("delta = {delta} must lie in ({collar}, {min_l})")));
    }
    let inner = family_targets(&SectionFamily::uniform(domain.graph(), j, delta)?, Trigger::Outward);
    let mut sigma = family_targets(levels, Trigger::Outward);
    let n_exit = sigma.len();
    sigma.extend(family_targets(&SectionFamily::uniform(domain.graph(), j, collar)?, Trigger::Inward));

    let mut w = Walker::new(domain, start, config, trajectory)?;
    let mut events = Vec::new();
    let mut taus = 0;
    loop {
        match w.advance(&inner, None)? {
            Advance::Hit { target, time, abscissa, .. } => {
                taus += 1;
                events.push(CycleEvent { kind: CycleKind::Tau, time, edge: inner[target].edge, abscissa });
            }
            Advance::Censored => return Ok((ExitRecord::censored(&w), events)),
            Advance::Deadline => unreachable!("no deadline set"),
        }
        match w.advance(&sigma, None)? {
            Advance::Hit { target, time, point, abscissa } => {
                let edge = sigma[target].edge;
                if target < n_exit {
                    events.push(CycleEvent { kind: CycleKind::SigmaExit, time, edge, abscissa });
                    let rec = ExitRecord {
                        exit_time: time,
                        exit_edge: Some(edge),
                        exit_vertex: Some(j),
                        exit_point: point,
                        cycles: taus,
                        steps: w.steps(),
                        censored: false,
                    };
                    return Ok((rec, events));
                }
                events.push(CycleEvent { kind: CycleKind::SigmaReturn, time, edge, abscissa });
            }
            Advance::Censored => {
                let mut rec = ExitRecord::censored(&w);
                rec.cycles = taus;
                return Ok((rec, events));
            }
            Advance::Deadline => unreachable!("no deadline set"),
        }
    }
}

/// Checks that an event log alternates tau / sigma and ends with at most one exit.
pub fn events_alternate(events: &[CycleEvent]) -> bool {
    events.iter().enumerate().all(|(i, e)| {
        let tau_slot = i % 2 == 0;
        match e.kind {
            CycleKind::Tau => tau_slot,
            CycleKind::SigmaReturn => !tau_slot,
            CycleKind::SigmaExit => !tau_slot && i == events.len() - 1,
        }
    })
}

/// Positions at a list of increasing times, plus the first hit of an
/// optional watched family (the path continues past it).
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub positions: Vec<Vec3>,
    pub first_exit: Option<(f64, EdgeId)>,
    pub steps: u64,
    pub censored: bool,
}

pub fn observe(
    domain: &TubeDomain,
    start: Start,
    times: &[f64],
    watch: Option<&SectionFamily>,
    config: &SimConfig,
    trajectory: u64,
) -> Result<Observation, SimError> {
    if times.windows(2).any(|p| p[1] < p[0]) || times.iter().any(|t| !(*t >= 0.0)) {
        return Err(SimError::Argument("observation times must be nonnegative and sorted".into()));
    }
    let mut w = Walker::new(domain, start, config, trajectory)?;
    let mut targets = watch.map(|f| family_targets(f, Trigger::Outward)).unwrap_or_default();
    let mut first_exit = None;
    let mut positions = Vec::with_capacity(times.len());
    for &t in times {
        loop {
            match w.advance(&targets, Some(t))? {
                Advance::Deadline => break,
                Advance::Hit { target, time, .. } => {
                    first_exit = Some((time, targets[target].edge));
                    targets.clear();
                }
                Advance::Censored => {
                    return Ok(Observation { positions, first_exit, steps: w.steps(), censored: true });
                }
            }
        }
        positions.push(w.position());
    }
    Ok(Observation { positions, first_exit, steps: w.steps(), censored: false })
}

/// State of the walker at time `t` (landing on `t` exactly).
pub fn position_at(
    domain: &TubeDomain,
    start: Start,
    t: f64,
    config: &SimConfig,
    trajectory: u64,
) -> Result<Vec3, SimError> {
    let obs = observe(domain, start, &[t], None, config, trajectory)?;
    if obs.censored {
        return Err(SimError::MaxSteps(config.max_steps));
    }
    Ok(obs.positions[0])
}

/// Maps `f` over trajectory indices `0..n` on a pool of `workers` threads
/// (0 = rayon default). Output order follows the index.
pub fn run_ensemble<T, F>(n: u64, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().expect("thread pool");
    pool.install(|| (0..n).into_par_iter().map(&f).collect())
}

/// Writes event logs as CSV rows `(trajectory, event_kind, time, edge, abscissa)`.
pub fn write_event_log<W: Write>(out: W, logs: &[(u64, Vec<CycleEvent>)]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["trajectory", "event_kind", "time", "edge", "abscissa"])?;
    for (traj, events) in logs {
        for e in events {
            w.write_record([
                traj.to_string(),
                e.kind.as_str().to_string(),
                format!("{:.12e}", e.time),
                e.edge.0.to_string(),
                format!("{:.12e}", e.abscissa),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
