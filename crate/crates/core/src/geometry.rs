//! The narrow tube domain around a metric graph.
//!
//! The domain is the exact union of closed vertex balls `B(O_j, r_j)` and
//! flat-ended cylinders of radius `lambda_k * eps` around every edge. No
//! smoothing is applied at the ball/cylinder junctions; the reflection code
//! copes with the resulting corners.

use std::fmt;

use thiserror::Error;

use crate::graph::{Edge, EdgeId, GraphError, GraphPoint, MetricGraph, VertexId};
use crate::vec3::{orthonormal_complement, Vec3};

/// Offset of the default restart sections beyond the vertex ball, in units of `eps`.
pub const COLLAR_OFFSET: f64 = 3.0;

const TIE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("vertex {vertex}: exponent beta = {beta} violates r(eps) >> eps^((d-1)/d), need 0 < beta < {bound}")]
    Exponent { vertex: VertexId, beta: f64, bound: f64 },
    #[error("vertex {vertex}: scaling constant must be positive, got {c}")]
    Constant { vertex: VertexId, c: f64 },
    #[error("scaling law has {got} entries for {expected} vertices")]
    ScalingLength { got: usize, expected: usize },
    #[error("eps must be positive and finite, got {0}")]
    Epsilon(f64),
    #[error("vertex {vertex}: radius must be positive, got {radius}")]
    Radius { vertex: VertexId, radius: f64 },
    #[error("tube {edge} half-width {half_width} is not thinner than ball {vertex} radius {radius}")]
    TubeTooWide { vertex: VertexId, edge: EdgeId, half_width: f64, radius: f64 },
    #[error("ball {vertex} swallows {edge}: 2r + 2w = {need} >= length {length}")]
    BallSwallowsEdge { vertex: VertexId, edge: EdgeId, need: f64, length: f64 },
    #[error("collar sections on {edge} overlap: r + r' + 6 eps = {need} >= length {length}")]
    CollarsOverlap { edge: EdgeId, need: f64, length: f64 },
    #[error("ball {vertex} comes within {distance} of non-incident {edge}")]
    BallNearEdge { vertex: VertexId, edge: EdgeId, distance: f64 },
    #[error("balls {a} and {b} overlap")]
    BallsOverlap { a: VertexId, b: VertexId },
    #[error("tubes {a} and {b} come within {distance} of each other")]
    TubesTooClose { a: EdgeId, b: EdgeId, distance: f64 },
    #[error("tubes {a} and {b} meet at {vertex} at too sharp an angle for radius {radius}")]
    SharpJunction { vertex: VertexId, a: EdgeId, b: EdgeId, radius: f64 },
    #[error("point {0:?} is outside the domain")]
    Outside(Vec3),
    #[error("projection is the vertex {0}; the transverse frame is undefined there")]
    ProjectionAtVertex(VertexId),
    #[error("section level {level} on {edge} outside (0, {length})")]
    Level { edge: EdgeId, level: f64, length: f64 },
    #[error("section family at {vertex} must list each incident edge exactly once")]
    Family { vertex: VertexId },
}

/// Power-law vertex radii `r_j(eps) = c_j * eps^beta_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingLaw {
    c: Vec<f64>,
    beta: Vec<f64>,
}

impl ScalingLaw {
    pub fn new(c: Vec<f64>, beta: Vec<f64>, dim: usize) -> Result<Self, GeometryError> {
        if c.len() != beta.len() {
            return Err(GeometryError::ScalingLength { got: c.len(), expected: beta.len() });
        }
        let bound = (dim as f64 - 1.0) / dim as f64;
        for (i, (&cj, &bj)) in c.iter().zip(&beta).enumerate() {
            let vertex = VertexId::from_index(i);
            if !(cj > 0.0 && cj.is_finite()) {
                return Err(GeometryError::Constant { vertex, c: cj });
            }
            if !(bj > 0.0 && bj < bound) {
                return Err(GeometryError::Exponent { vertex, beta: bj, bound });
            }
        }
        Ok(ScalingLaw { c, beta })
    }

    /// Same `(c, beta)` at every one of `n` vertices.
    pub fn uniform(n: usize, c: f64, beta: f64, dim: usize) -> Result<Self, GeometryError> {
        Self::new(vec![c; n], vec![beta; n], dim)
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    pub fn c(&self, j: VertexId) -> f64 {
        self.c[j.index()]
    }

    pub fn beta(&self, j: VertexId) -> f64 {
        self.beta[j.index()]
    }

    pub fn radius(&self, j: VertexId, eps: f64) -> f64 {
        self.c[j.index()] * eps.powf(self.beta[j.index()])
    }
}

/// The three-branch continuous projection applied to a graph distance `a`
/// from a vertex with ball radius `r`: identity beyond `r + 2 eps`, collapse
/// to the vertex inside `r - 2 eps`, affine in between.
pub fn collar_map(r: f64, eps: f64, a: f64) -> f64 {
    if a >= r + 2.0 * eps {
        a
    } else if a <= r - 2.0 * eps {
        0.0
    } else {
        (r + 2.0 * eps) / (4.0 * eps) * a - (r * r - 4.0 * eps * eps) / (4.0 * eps)
    }
}

/// Which piece of the domain a point lies in. Balls take precedence over tubes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Ball(VertexId),
    Tube(EdgeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feature {
    Sphere(VertexId),
    Wall(EdgeId),
    /// Circle (or point pair in the plane) where tube `k` leaves ball `j`.
    Rim(VertexId, EdgeId),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub point: Vec3,
    /// Inward unit normal.
    pub normal: Vec3,
    pub feature: Feature,
}

/// `(j, k, x_tilde, y_tilde)`: abscissa along `e_{j,k}` and transverse offsets
/// in the frame `n^l_{j,k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalCoordinate {
    pub vertex: VertexId,
    pub edge: EdgeId,
    pub x_tilde: f64,
    pub y_tilde: Vec<f64>,
}

impl LocalCoordinate {
    pub fn reconstruct(&self, domain: &TubeDomain) -> Vec3 {
        let (e, frame) = domain.frame(self.vertex, self.edge);
        let mut z = domain.graph.position(self.vertex) + e * self.x_tilde;
        for (y, n) in self.y_tilde.iter().zip(frame) {
            z += n * *y;
        }
        z
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossSection {
    pub vertex: VertexId,
    pub edge: EdgeId,
    pub level: f64,
}

impl CrossSection {
    pub fn new(graph: &MetricGraph, vertex: VertexId, edge: EdgeId, level: f64) -> Result<Self, GeometryError> {
        let e = graph.edge(edge)?;
        if !e.is_incident(vertex) {
            return Err(GraphError::NotIncident { vertex, edge }.into());
        }
        if !(level > 0.0 && level < e.length) {
            return Err(GeometryError::Level { edge, level, length: e.length });
        }
        Ok(CrossSection { vertex, edge, level })
    }
}

/// One section level per edge incident to a vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionFamily {
    pub vertex: VertexId,
    pub levels: Vec<(EdgeId, f64)>,
}

impl SectionFamily {
    pub fn new(graph: &MetricGraph, vertex: VertexId, mut levels: Vec<(EdgeId, f64)>) -> Result<Self, GeometryError> {
        graph.vertex(vertex)?;
        levels.sort_by_key(|&(k, _)| k);
        let edges: Vec<EdgeId> = levels.iter().map(|&(k, _)| k).collect();
        if edges != graph.incident(vertex) {
            return Err(GeometryError::Family { vertex });
        }
        for &(k, level) in &levels {
            CrossSection::new(graph, vertex, k, level)?;
        }
        Ok(SectionFamily { vertex, levels })
    }

    /// Same level on every incident edge.
    pub fn uniform(graph: &MetricGraph, vertex: VertexId, level: f64) -> Result<Self, GeometryError> {
        let levels = graph.incident(vertex).iter().map(|&k| (k, level)).collect();
        Self::new(graph, vertex, levels)
    }

    /// Exit levels stopping just short of the neighbouring balls:
    /// `L_k = |I_k| - (r_{j'} + 3 eps)`.
    pub fn exit_levels(domain: &TubeDomain, vertex: VertexId) -> Result<Self, GeometryError> {
        let g = domain.graph();
        let levels = g
            .incident(vertex)
            .iter()
            .map(|&k| {
                let e = &g.edges()[k.index()];
                let other = e.other_end(vertex).expect("incident");
                (k, e.length - domain.collar_level(other))
            })
            .collect();
        Self::new(g, vertex, levels)
    }

    /// The restart sections `r_j + 3 eps` around the ball.
    pub fn collar(domain: &TubeDomain, vertex: VertexId) -> Result<Self, GeometryError> {
        Self::uniform(domain.graph(), vertex, domain.collar_level(vertex))
    }

    pub fn level(&self, k: EdgeId) -> Option<f64> {
        self.levels.iter().find(|&&(e, _)| e == k).map(|&(_, l)| l)
    }
}

#[derive(Debug, Clone)]
struct Axis {
    origin: Vec3,
    dir: Vec3,
    len: f64,
    frame: [Vec3; 2],
    // sqrt(r^2 - w^2) at the lower and upper end
    opening: [f64; 2],
}

/// The domain for one value of `eps`.
#[derive(Debug, Clone)]
pub struct TubeDomain {
    graph: MetricGraph,
    scaling: Option<ScalingLaw>,
    eps: f64,
    radii: Vec<f64>,
    widths: Vec<f64>,
    axes: Vec<Axis>,
    local_features: Vec<Vec<Feature>>,
}

impl fmt::Display for TubeDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "tube domain: d = {}, eps = {}, {} balls, {} tubes",
            self.dim(),
            self.eps,
            self.radii.len(),
            self.widths.len()
        )
    }
}

/// Instantiates the domain for `eps` with radii from `scaling`.
pub fn build_domain(graph: &MetricGraph, scaling: &ScalingLaw, eps: f64) -> Result<TubeDomain, GeometryError> {
    TubeDomain::build(graph.clone(), scaling.clone(), eps)
}

impl TubeDomain {
    pub fn build(graph: MetricGraph, scaling: ScalingLaw, eps: f64) -> Result<Self, GeometryError> {
        if scaling.len() != graph.vertex_count() {
            return Err(GeometryError::ScalingLength { got: scaling.len(), expected: graph.vertex_count() });
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(GeometryError::Epsilon(eps));
        }
        let radii = graph.vertex_ids().map(|j| scaling.radius(j, eps)).collect();
        let mut d = Self::with_radii(graph, radii, eps)?;
        d.scaling = Some(scaling);
        Ok(d)
    }

    /// Domain with explicitly given ball radii.
    pub fn with_radii(graph: MetricGraph, radii: Vec<f64>, eps: f64) -> Result<Self, GeometryError> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(GeometryError::Epsilon(eps));
        }
        if radii.len() != graph.vertex_count() {
            return Err(GeometryError::ScalingLength { got: radii.len(), expected: graph.vertex_count() });
        }
        let report = graph.validate();
        if !report.is_valid() {
            return Err(GraphError::Invalid(report).into());
        }
        for (i, &r) in radii.iter().enumerate() {
            if !(r > 0.0 && r.is_finite()) {
                return Err(GeometryError::Radius { vertex: VertexId::from_index(i), radius: r });
            }
        }
        let widths: Vec<f64> = graph.edges().iter().map(|e| e.lambda * eps).collect();
        let axes = graph
            .edges()
            .iter()
            .map(|e| {
                let origin = graph.position(e.lower());
                let dir = (graph.position(e.upper()) - origin) * (1.0 / e.length);
                let w = widths[e.id.index()];
                let open = |j: VertexId| {
                    let r: f64 = radii[j.index()];
                    (r * r - w * w).max(0.0).sqrt()
                };
                Axis {
                    origin,
                    dir,
                    len: e.length,
                    frame: orthonormal_complement(dir, graph.dim()),
                    opening: [open(e.lower()), open(e.upper())],
                }
            })
            .collect();
        let local_features = graph
            .vertex_ids()
            .map(|j| {
                let mut f = vec![Feature::Sphere(j)];
                f.extend(graph.incident(j).iter().map(|&k| Feature::Rim(j, k)));
                f.extend(graph.incident(j).iter().map(|&k| Feature::Wall(k)));
                f
            })
            .collect();
        let d = TubeDomain { graph, scaling: None, eps, radii, widths, axes, local_features };
        d.check_feasible()?;
        Ok(d)
    }

    fn check_feasible(&self) -> Result<(), GeometryError> {
        let g = &self.graph;
        let eps = self.eps;
        for e in g.edges() {
            let w = self.widths[e.id.index()];
            for j in [e.ends.0, e.ends.1] {
                let r = self.radius(j);
                if w >= r {
                    return Err(GeometryError::TubeTooWide { vertex: j, edge: e.id, half_width: w, radius: r });
                }
                let need = 2.0 * r + 2.0 * w;
                if need >= e.length {
                    return Err(GeometryError::BallSwallowsEdge { vertex: j, edge: e.id, need, length: e.length });
                }
            }
            let need = self.radius(e.ends.0) + self.radius(e.ends.1) + 2.0 * COLLAR_OFFSET * eps;
            if need >= e.length {
                return Err(GeometryError::CollarsOverlap { edge: e.id, need, length: e.length });
            }
        }
        for j in g.vertex_ids() {
            let o = g.position(j);
            let r = self.radius(j);
            for e in g.edges() {
                if e.is_incident(j) {
                    continue;
                }
                let a = &self.axes[e.id.index()];
                let distance = point_segment_distance(o, a.origin, a.dir, a.len);
                if distance <= 2.0 * r + self.widths[e.id.index()] {
                    return Err(GeometryError::BallNearEdge { vertex: j, edge: e.id, distance });
                }
            }
            for i in g.vertex_ids().take_while(|&i| i < j) {
                if o.distance(g.position(i)) <= r + self.radius(i) {
                    return Err(GeometryError::BallsOverlap { a: i, b: j });
                }
            }
            let inc = g.incident(j);
            for (x, &a) in inc.iter().enumerate() {
                for &b in &inc[x + 1..] {
                    let ea = g.edge_direction(j, a)?;
                    let eb = g.edge_direction(j, b)?;
                    let half = 0.5 * ea.dot(eb).clamp(-1.0, 1.0).acos();
                    let wmax = self.widths[a.index()].max(self.widths[b.index()]);
                    let s = half.sin();
                    if s <= 0.0 || wmax * (1.0 + 1.0 / (s * s)).sqrt() >= r {
                        return Err(GeometryError::SharpJunction { vertex: j, a, b, radius: r });
                    }
                }
            }
        }
        let edges = g.edges();
        for (x, ea) in edges.iter().enumerate() {
            for eb in &edges[x + 1..] {
                if ea.is_incident(eb.ends.0) || ea.is_incident(eb.ends.1) {
                    continue;
                }
                let (a, b) = (&self.axes[ea.id.index()], &self.axes[eb.id.index()]);
                let distance = segment_distance(a.origin, a.origin + a.dir * a.len, b.origin, b.origin + b.dir * b.len);
                if distance <= 2.0 * (self.widths[ea.id.index()] + self.widths[eb.id.index()]) {
                    return Err(GeometryError::TubesTooClose { a: ea.id, b: eb.id, distance });
                }
            }
        }
        Ok(())
    }

    pub fn graph(&self) -> &MetricGraph {
        &self.graph
    }

    pub fn scaling(&self) -> Option<&ScalingLaw> {
        self.scaling.as_ref()
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn dim(&self) -> usize {
        self.graph.dim()
    }

    pub fn radius(&self, j: VertexId) -> f64 {
        self.radii[j.index()]
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn half_width(&self, k: EdgeId) -> f64 {
        self.widths[k.index()]
    }

    pub fn min_half_width(&self) -> f64 {
        self.widths.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Level of the restart section `r_j + 3 eps`.
    pub fn collar_level(&self, j: VertexId) -> f64 {
        self.radius(j) + COLLAR_OFFSET * self.eps
    }

    fn edge_rec(&self, k: EdgeId) -> &Edge {
        &self.graph.edges()[k.index()]
    }

    /// `e_{j,k}` and the transverse frame `n^l_{j,k}`.
    pub fn frame(&self, j: VertexId, k: EdgeId) -> (Vec3, [Vec3; 2]) {
        let a = &self.axes[k.index()];
        if j == self.edge_rec(k).lower() {
            (a.dir, a.frame)
        } else {
            let e = -a.dir;
            (e, orthonormal_complement(e, self.dim()))
        }
    }

    #[inline]
    fn in_ball(&self, z: Vec3, j: VertexId) -> bool {
        let r = self.radii[j.index()];
        (z - self.graph.position(j)).norm_sq() <= r * r
    }

    #[inline]
    fn in_tube(&self, z: Vec3, k: EdgeId) -> bool {
        let a = &self.axes[k.index()];
        let v = z - a.origin;
        let t = v.dot(a.dir);
        if !(0.0..=a.len).contains(&t) {
            return false;
        }
        let w = self.widths[k.index()];
        (v - a.dir * t).norm_sq() <= w * w
    }

    /// Closed-set membership.
    pub fn contains(&self, z: Vec3) -> bool {
        self.locate(z, None).is_some()
    }

    /// Region containing `z`, searching near `hint` first.
    pub fn locate(&self, z: Vec3, hint: Option<Region>) -> Option<Region> {
        match hint {
            Some(Region::Ball(j)) => {
                if self.in_ball(z, j) {
                    return Some(Region::Ball(j));
                }
                for &k in self.graph.incident(j) {
                    let other = self.edge_rec(k).other_end(j).expect("incident");
                    if self.in_ball(z, other) {
                        return Some(Region::Ball(other));
                    }
                }
                for &k in self.graph.incident(j) {
                    if self.in_tube(z, k) {
                        return Some(Region::Tube(k));
                    }
                }
            }
            Some(Region::Tube(k)) => {
                let e = self.edge_rec(k);
                for j in [e.ends.0, e.ends.1] {
                    if self.in_ball(z, j) {
                        return Some(Region::Ball(j));
                    }
                }
                if self.in_tube(z, k) {
                    return Some(Region::Tube(k));
                }
                for j in [e.ends.0, e.ends.1] {
                    for &l in self.graph.incident(j) {
                        if l != k && self.in_tube(z, l) {
                            return Some(Region::Tube(l));
                        }
                    }
                }
            }
            None => {}
        }
        if let Some(j) = self.graph.vertex_ids().find(|&j| self.in_ball(z, j)) {
            return Some(Region::Ball(j));
        }
        (0..self.widths.len()).map(EdgeId::from_index).find(|&k| self.in_tube(z, k)).map(Region::Tube)
    }

    /// Nearest point of the graph, ties to the least edge index.
    pub fn nearest_projection(&self, z: Vec3) -> GraphPoint {
        nearest_projection(&self.graph, z)
    }

    /// Projection restricted to the edges that can be nearest for a point in `region`.
    pub(crate) fn project_in(&self, z: Vec3, region: Region) -> GraphPoint {
        let mut best: Option<(f64, EdgeId, f64)> = None;
        let mut consider = |k: EdgeId| {
            let a = &self.axes[k.index()];
            let (t, d2) = segment_foot(z, a.origin, a.dir, a.len);
            let d = d2.sqrt();
            match best {
                Some((bd, bk, _)) if !(d < bd - TIE || (d <= bd + TIE && k < bk)) => {}
                _ => best = Some((d, k, t)),
            }
        };
        match region {
            Region::Ball(j) => self.graph.incident(j).iter().for_each(|&k| consider(k)),
            Region::Tube(k) => {
                let e = self.edge_rec(k);
                for j in [e.ends.0, e.ends.1] {
                    self.graph.incident(j).iter().for_each(|&l| consider(l));
                }
            }
        }
        match best {
            Some((_, k, t)) => self.graph.normalize(GraphPoint::OnEdge { edge: k, arclength: t }),
            None => match region {
                Region::Ball(j) => GraphPoint::Vertex(j),
                Region::Tube(_) => unreachable!("a tube has an edge"),
            },
        }
    }

    /// The continuous projection: identity away from the balls, collapsed to
    /// the vertex deep inside, affine across the `2 eps` collars.
    pub fn continuous_projection(&self, z: Vec3) -> Result<GraphPoint, GeometryError> {
        let region = self.locate(z, None).ok_or(GeometryError::Outside(z))?;
        Ok(self.continuous_projection_of(self.project_in(z, region)))
    }

    /// Applies the collar map to an already projected point.
    pub fn continuous_projection_of(&self, p: GraphPoint) -> GraphPoint {
        let GraphPoint::OnEdge { edge, arclength } = p else { return p };
        let e = self.edge_rec(edge);
        let lo = e.lower();
        let hi = e.upper();
        let to_hi = e.length - arclength;
        let (j, a) = if arclength <= to_hi { (lo, arclength) } else { (hi, to_hi) };
        let mapped = collar_map(self.radius(j), self.eps, a);
        if mapped <= 0.0 {
            return GraphPoint::Vertex(j);
        }
        let s = if j == lo { mapped } else { e.length - mapped };
        self.graph.normalize(GraphPoint::OnEdge { edge, arclength: s })
    }

    /// `(j, k, x_tilde, y_tilde)` relative to the nearer endpoint of the projected edge.
    pub fn local_coordinates(&self, z: Vec3) -> Result<LocalCoordinate, GeometryError> {
        let region = self.locate(z, None).ok_or(GeometryError::Outside(z))?;
        let (edge, arclength) = match self.project_in(z, region) {
            GraphPoint::Vertex(j) => return Err(GeometryError::ProjectionAtVertex(j)),
            GraphPoint::OnEdge { edge, arclength } => (edge, arclength),
        };
        let e = self.edge_rec(edge);
        let vertex = if arclength <= e.length - arclength { e.lower() } else { e.upper() };
        let (dir, frame) = self.frame(vertex, edge);
        let v = z - self.graph.position(vertex);
        let y_tilde = frame[..self.dim() - 1].iter().map(|n| v.dot(*n)).collect();
        Ok(LocalCoordinate { vertex, edge, x_tilde: v.dot(dir), y_tilde })
    }

    /// Edge and graph distance from `O_j` of the projection of `z`, when the
    /// projection lies on an edge incident to `j` (or at `j` itself).
    pub fn section_coordinate(&self, z: Vec3, j: VertexId) -> Option<(EdgeId, f64)> {
        let region = self.locate(z, None)?;
        self.section_coordinate_of(self.project_in(z, region), j)
    }

    pub(crate) fn section_coordinate_of(&self, p: GraphPoint, j: VertexId) -> Option<(EdgeId, f64)> {
        match p {
            GraphPoint::Vertex(v) if v == j => self.graph.incident(j).first().map(|&k| (k, 0.0)),
            GraphPoint::Vertex(v) => self
                .graph
                .incident(j)
                .iter()
                .find(|&&k| self.edge_rec(k).other_end(j) == Some(v))
                .map(|&k| (k, self.edge_rec(k).length)),
            GraphPoint::OnEdge { edge, arclength } => {
                let e = self.edge_rec(edge);
                if !e.is_incident(j) {
                    return None;
                }
                Some((edge, self.graph.arclength_from(edge, j, arclength)))
            }
        }
    }

    /// Signed abscissa `(z - O_j) . e_{j,k}` along the axis of `k`.
    #[inline]
    pub(crate) fn axial_from(&self, z: Vec3, j: VertexId, k: EdgeId) -> f64 {
        let a = &self.axes[k.index()];
        let t = (z - a.origin).dot(a.dir);
        if j == self.edge_rec(k).lower() {
            t
        } else {
            a.len - t
        }
    }

    /// Nearest boundary point and inward normal, searching every feature.
    pub fn boundary_reflect_data(&self, z: Vec3) -> BoundaryPoint {
        let all: Vec<Feature> = self.local_features.iter().flatten().copied().collect();
        self.nearest_feature(z, &all, self.contains(z))
    }

    /// Same as [`TubeDomain::boundary_reflect_data`] but limited to the
    /// features around `region`; `z` is assumed to be outside the domain.
    pub(crate) fn reflect_data_near(&self, z: Vec3, region: Region) -> BoundaryPoint {
        match region {
            Region::Ball(j) => self.nearest_feature(z, &self.local_features[j.index()], false),
            Region::Tube(k) => {
                let e = self.edge_rec(k);
                let a = self.nearest_feature(z, &self.local_features[e.ends.0.index()], false);
                let b = self.nearest_feature(z, &self.local_features[e.ends.1.index()], false);
                if (b.point - z).norm() < (a.point - z).norm() - TIE {
                    b
                } else {
                    a
                }
            }
        }
    }

    fn nearest_feature(&self, z: Vec3, features: &[Feature], inside: bool) -> BoundaryPoint {
        // spheres first so that they win exact ties
        let rank = |f: &Feature| match f {
            Feature::Sphere(_) => 0,
            Feature::Rim(..) => 1,
            Feature::Wall(_) => 2,
        };
        let mut ordered: Vec<&Feature> = features.iter().collect();
        ordered.sort_by_key(|f| rank(f));
        let mut best: Option<(f64, BoundaryPoint)> = None;
        for f in ordered {
            let Some(bp) = self.feature_point(z, *f, inside) else { continue };
            let d = (bp.point - z).norm();
            if best.as_ref().is_none_or(|(bd, _)| d < bd - TIE) {
                best = Some((d, bp));
            }
        }
        best.expect("every ball contributes a sphere feature").1
    }

    fn feature_point(&self, z: Vec3, f: Feature, inside: bool) -> Option<BoundaryPoint> {
        match f {
            Feature::Sphere(j) => {
                let o = self.graph.position(j);
                let r = self.radius(j);
                let u = (z - o).normalized().unwrap_or_else(|| self.any_direction(j));
                let p = o + u * r;
                let covered = self.graph.incident(j).iter().any(|&k| self.strictly_in_tube(p, k));
                (!covered).then_some(BoundaryPoint { point: p, normal: -u, feature: f })
            }
            Feature::Wall(k) => {
                let a = &self.axes[k.index()];
                let w = self.widths[k.index()];
                let v = z - a.origin;
                let t = v.dot(a.dir).clamp(0.0, a.len);
                let foot = a.origin + a.dir * t;
                let u = (z - foot).normalized().unwrap_or(a.frame[0]);
                let p = foot + u * w;
                let e = self.edge_rec(k);
                let covered = [e.ends.0, e.ends.1].iter().any(|&j| self.strictly_in_ball(p, j));
                (!covered).then_some(BoundaryPoint { point: p, normal: -u, feature: f })
            }
            Feature::Rim(j, k) => {
                let o = self.graph.position(j);
                let (e, frame) = self.frame(j, k);
                let a = &self.axes[k.index()];
                let end = if j == self.edge_rec(k).lower() { 0 } else { 1 };
                let c = o + e * a.opening[end];
                let v = z - c;
                let perp = v - e * v.dot(e);
                let u = perp.normalized().unwrap_or(frame[0]);
                let p = c + u * self.widths[k.index()];
                let sphere_normal = (o - p) * (1.0 / self.radius(j));
                let normal = if inside { sphere_normal } else { (p - z).normalized().unwrap_or(sphere_normal) };
                Some(BoundaryPoint { point: p, normal, feature: f })
            }
        }
    }

    fn any_direction(&self, j: VertexId) -> Vec3 {
        match self.graph.incident(j).first() {
            // away from the tube openings
            Some(&k) => -self.frame(j, k).0,
            None => Vec3::new(1.0, 0.0, 0.0),
        }
    }

    fn strictly_in_ball(&self, p: Vec3, j: VertexId) -> bool {
        let r = self.radius(j);
        (p - self.graph.position(j)).norm() < r - TIE * r.max(1.0)
    }

    fn strictly_in_tube(&self, p: Vec3, k: EdgeId) -> bool {
        let a = &self.axes[k.index()];
        let v = p - a.origin;
        let t = v.dot(a.dir);
        let w = self.widths[k.index()];
        t > 0.0 && t < a.len && (v - a.dir * t).norm() < w - TIE
    }

    /// Axial position from the lower end, signed transverse offset (planar
    /// only), and the clean-strip limits of tube `k`.
    pub(crate) fn strip(&self, k: EdgeId) -> StripInfo {
        let a = &self.axes[k.index()];
        StripInfo {
            origin: a.origin,
            dir: a.dir,
            normal: a.frame[0],
            half_width: self.widths[k.index()],
            start: a.opening[0],
            end: a.len - a.opening[1],
        }
    }

    /// On-axis point at distance `s` from `O_j` along `k`.
    pub fn axis_point(&self, j: VertexId, k: EdgeId, s: f64) -> Result<Vec3, GeometryError> {
        Ok(self.graph.point_at(j, k, s)?)
    }

    /// The point over graph point `x` offset by `y` in the transverse frame of its edge.
    pub fn fiber_point(&self, x: &GraphPoint, y: &[f64]) -> Vec3 {
        match *x {
            GraphPoint::Vertex(j) => self.graph.position(j),
            GraphPoint::OnEdge { edge, arclength } => {
                let a = &self.axes[edge.index()];
                let mut z = a.origin + a.dir * arclength;
                for (yl, n) in y.iter().zip(a.frame) {
                    z += n * *yl;
                }
                z
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct StripInfo {
    pub origin: Vec3,
    pub dir: Vec3,
    pub normal: Vec3,
    pub half_width: f64,
    pub start: f64,
    pub end: f64,
}

/// Foot parameter on segment `origin + t dir, t in [0, len]` and squared distance.
#[inline]
fn segment_foot(z: Vec3, origin: Vec3, dir: Vec3, len: f64) -> (f64, f64) {
    let v = z - origin;
    let t = v.dot(dir).clamp(0.0, len);
    (t, (v - dir * t).norm_sq())
}

fn point_segment_distance(z: Vec3, origin: Vec3, dir: Vec3, len: f64) -> f64 {
    segment_foot(z, origin, dir, len).1.sqrt()
}

/// Distance between segments `[p0, p1]` and `[q0, q1]`.
pub fn segment_distance(p0: Vec3, p1: Vec3, q0: Vec3, q1: Vec3) -> f64 {
    let d1 = p1 - p0;
    let d2 = q1 - q0;
    let r = p0 - q0;
    let a = d1.norm_sq();
    let e = d2.norm_sq();
    let f = d2.dot(r);
    let c = d1.dot(r);
    let b = d1.dot(d2);
    let denom = a * e - b * b;
    let mut s = if denom > 1e-14 * a * e { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
    let mut t = (b * s + f) / e;
    if t < 0.0 {
        t = 0.0;
        s = (-c / a).clamp(0.0, 1.0);
    } else if t > 1.0 {
        t = 1.0;
        s = ((b - c) / a).clamp(0.0, 1.0);
    }
    ((p0 + d1 * s) - (q0 + d2 * t)).norm()
}

/// Nearest point of `graph` to `z`; ties go to the least edge index. A graph
/// without edges projects onto its nearest vertex.
pub fn nearest_projection(graph: &MetricGraph, z: Vec3) -> GraphPoint {
    let mut best: Option<(f64, EdgeId, f64)> = None;
    for e in graph.edges() {
        let o = graph.position(e.lower());
        let dir = (graph.position(e.upper()) - o) * (1.0 / e.length);
        let (t, d2) = segment_foot(z, o, dir, e.length);
        let d = d2.sqrt();
        if best.is_none_or(|(bd, _, _)| d < bd - TIE) {
            best = Some((d, e.id, t));
        }
    }
    match best {
        Some((_, edge, t)) => graph.normalize(GraphPoint::OnEdge { edge, arclength: t }),
        None => {
            let j = graph
                .vertex_ids()
                .min_by(|&a, &b| z.distance(graph.position(a)).total_cmp(&z.distance(graph.position(b))))
                .expect("graph has a vertex");
            GraphPoint::Vertex(j)
        }
    }
}
