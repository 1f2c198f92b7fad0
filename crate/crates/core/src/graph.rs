//! Finite metric graphs embedded in the plane or in space.
//!
//! Vertices and edges carry 1-based ids, matching the numbering used in
//! experiment configs. Edges are straight segments; the arclength of a
//! point on an edge is always measured from the lower-indexed endpoint.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vec3::Vec3;

/// Relative tolerance for stored-vs-Euclidean edge lengths.
pub const LENGTH_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VertexId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeId(pub usize);

impl VertexId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 - 1
    }

    #[inline]
    pub fn from_index(i: usize) -> Self {
        VertexId(i + 1)
    }
}

impl EdgeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 - 1
    }

    #[inline]
    pub fn from_index(i: usize) -> Self {
        EdgeId(i + 1)
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "O{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "I{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub id: VertexId,
    pub position: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: EdgeId,
    pub ends: (VertexId, VertexId),
    pub length: f64,
    /// Tube half-width coefficient: the tube around this edge has radius `lambda * eps`.
    pub lambda: f64,
}

impl Edge {
    pub fn lower(&self) -> VertexId {
        self.ends.0.min(self.ends.1)
    }

    pub fn upper(&self) -> VertexId {
        self.ends.0.max(self.ends.1)
    }

    pub fn is_incident(&self, j: VertexId) -> bool {
        self.ends.0 == j || self.ends.1 == j
    }

    pub fn other_end(&self, j: VertexId) -> Option<VertexId> {
        if self.ends.0 == j {
            Some(self.ends.1)
        } else if self.ends.1 == j {
            Some(self.ends.0)
        } else {
            None
        }
    }
}

/// Edge description used when assembling a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSpec {
    pub ends: (usize, usize),
    pub lambda: f64,
    /// Stored length; derived from the endpoint positions when absent.
    pub length: Option<f64>,
}

impl EdgeSpec {
    pub fn new(a: usize, b: usize, lambda: f64) -> Self {
        EdgeSpec { ends: (a, b), lambda, length: None }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("dimension must be 2 or 3, got {0}")]
    Dimension(usize),
    #[error("vertex {index} has {got} coordinates, expected {dim}")]
    Coordinates { index: usize, got: usize, dim: usize },
    #[error("edge {edge} references unknown vertex id {vertex}")]
    UnknownVertex { edge: usize, vertex: usize },
    #[error("unknown vertex id {0}")]
    NoSuchVertex(usize),
    #[error("unknown edge id {0}")]
    NoSuchEdge(usize),
    #[error("edge {edge} is not incident to vertex {vertex}")]
    NotIncident { vertex: VertexId, edge: EdgeId },
    #[error("abscissa {s} outside [0, {length}] on edge {edge}")]
    OutOfRange { edge: EdgeId, s: f64, length: f64 },
    #[error("invalid graph: {0}")]
    Invalid(ValidationReport),
}

/// A single violated graph invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphIssue {
    Disconnected { unreachable: Vec<VertexId> },
    LengthMismatch { edge: EdgeId, stored: f64, euclidean: f64 },
    DuplicateEdge { first: EdgeId, second: EdgeId },
    NonPositiveLambda { edge: EdgeId, lambda: f64 },
    SelfLoop { edge: EdgeId },
    CoincidentVertices { a: VertexId, b: VertexId },
}

impl fmt::Display for GraphIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphIssue::Disconnected { unreachable } => {
                let ids: Vec<String> = unreachable.iter().map(|v| v.to_string()).collect();
                write!(f, "graph is disconnected; unreachable from O1: {}", ids.join(", "))
            }
            GraphIssue::LengthMismatch { edge, stored, euclidean } => {
                write!(f, "length mismatch on {edge}: stored {stored}, endpoint distance {euclidean}")
            }
            GraphIssue::DuplicateEdge { first, second } => {
                write!(f, "duplicate edge: {second} repeats {first}")
            }
            GraphIssue::NonPositiveLambda { edge, lambda } => {
                write!(f, "lambda must be positive on {edge}, got {lambda}")
            }
            GraphIssue::SelfLoop { edge } => write!(f, "{edge} is a self-loop"),
            GraphIssue::CoincidentVertices { a, b } => {
                write!(f, "vertices {a} and {b} share a position")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub issues: Vec<GraphIssue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn has(&self, pred: impl Fn(&GraphIssue) -> bool) -> bool {
        self.issues.iter().any(pred)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.issues.is_empty() {
            return write!(f, "valid");
        }
        let parts: Vec<String> = self.issues.iter().map(|i| i.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// A point of the graph: either a vertex or a point in the relative interior
/// (or at an end) of an edge, addressed by arclength from the lower-indexed
/// endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GraphPoint {
    Vertex(VertexId),
    OnEdge { edge: EdgeId, arclength: f64 },
}

/// Simple, finite, connected graph with straight edges.
#[derive(Debug, Clone)]
pub struct MetricGraph {
    dim: usize,
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<EdgeId>>,
    // all-pairs vertex distances along the graph
    vertex_dist: Vec<Vec<f64>>,
}

impl MetricGraph {
    /// Assembles a graph without checking the metric invariants; see
    /// [`MetricGraph::validate`]. Only structural problems (bad dimension,
    /// dangling endpoint ids) are rejected here.
    pub fn from_parts(dim: usize, positions: Vec<Vec3>, edges: Vec<EdgeSpec>) -> Result<Self, GraphError> {
        if dim != 2 && dim != 3 {
            return Err(GraphError::Dimension(dim));
        }
        let vertices: Vec<Vertex> = positions
            .into_iter()
            .enumerate()
            .map(|(i, p)| {
                let position = if dim == 2 { Vec3::planar(p.x, p.y) } else { p };
                Vertex { id: VertexId::from_index(i), position }
            })
            .collect();
        let n = vertices.len();
        let mut built = Vec::with_capacity(edges.len());
        let mut adjacency = vec![Vec::new(); n];
        for (i, spec) in edges.into_iter().enumerate() {
            let id = EdgeId::from_index(i);
            for v in [spec.ends.0, spec.ends.1] {
                if v == 0 || v > n {
                    return Err(GraphError::UnknownVertex { edge: id.0, vertex: v });
                }
            }
            let a = VertexId(spec.ends.0);
            let b = VertexId(spec.ends.1);
            let euclid = vertices[a.index()].position.distance(vertices[b.index()].position);
            let length = spec.length.unwrap_or(euclid);
            adjacency[a.index()].push(id);
            if b != a {
                adjacency[b.index()].push(id);
            }
            built.push(Edge { id, ends: (a, b), length, lambda: spec.lambda });
        }
        let mut g = MetricGraph { dim, vertices, edges: built, adjacency, vertex_dist: Vec::new() };
        g.vertex_dist = (0..n).map(|s| g.dijkstra(VertexId::from_index(s))).collect();
        Ok(g)
    }

    /// Assembles and validates a graph; edge lengths are derived from positions.
    pub fn new(dim: usize, positions: Vec<Vec3>, edges: Vec<EdgeSpec>) -> Result<Self, GraphError> {
        let g = Self::from_parts(dim, positions, edges)?;
        let report = g.validate();
        if report.is_valid() {
            Ok(g)
        } else {
            Err(GraphError::Invalid(report))
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_ids(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.vertices.len()).map(VertexId::from_index)
    }

    pub fn vertex(&self, j: VertexId) -> Result<&Vertex, GraphError> {
        if j.0 == 0 {
            return Err(GraphError::NoSuchVertex(j.0));
        }
        self.vertices.get(j.index()).ok_or(GraphError::NoSuchVertex(j.0))
    }

    pub fn edge(&self, k: EdgeId) -> Result<&Edge, GraphError> {
        if k.0 == 0 {
            return Err(GraphError::NoSuchEdge(k.0));
        }
        self.edges.get(k.index()).ok_or(GraphError::NoSuchEdge(k.0))
    }

    #[inline]
    pub fn position(&self, j: VertexId) -> Vec3 {
        self.vertices[j.index()].position
    }

    /// Edges incident to `j`, in increasing id order.
    pub fn incident(&self, j: VertexId) -> &[EdgeId] {
        &self.adjacency[j.index()]
    }

    /// Checks every graph invariant and lists the violations.
    pub fn validate(&self) -> ValidationReport {
        let mut issues = Vec::new();
        for e in &self.edges {
            if e.ends.0 == e.ends.1 {
                issues.push(GraphIssue::SelfLoop { edge: e.id });
                continue;
            }
            if !(e.lambda > 0.0) {
                issues.push(GraphIssue::NonPositiveLambda { edge: e.id, lambda: e.lambda });
            }
            let euclidean = self.position(e.ends.0).distance(self.position(e.ends.1));
            if (e.length - euclidean).abs() > LENGTH_TOLERANCE * euclidean.max(1.0) {
                issues.push(GraphIssue::LengthMismatch { edge: e.id, stored: e.length, euclidean });
            }
        }
        for (i, e) in self.edges.iter().enumerate() {
            for f in &self.edges[..i] {
                if (f.lower(), f.upper()) == (e.lower(), e.upper()) {
                    issues.push(GraphIssue::DuplicateEdge { first: f.id, second: e.id });
                    break;
                }
            }
        }
        for (i, v) in self.vertices.iter().enumerate() {
            for w in &self.vertices[..i] {
                if v.position == w.position {
                    issues.push(GraphIssue::CoincidentVertices { a: w.id, b: v.id });
                }
            }
        }
        if !self.vertices.is_empty() {
            let unreachable: Vec<VertexId> = self.vertex_dist[0]
                .iter()
                .enumerate()
                .filter(|(_, d)| !d.is_finite())
                .map(|(i, _)| VertexId::from_index(i))
                .collect();
            if !unreachable.is_empty() {
                issues.push(GraphIssue::Disconnected { unreachable });
            }
        }
        ValidationReport { issues }
    }

    fn incident_edge(&self, j: VertexId, k: EdgeId) -> Result<&Edge, GraphError> {
        self.vertex(j)?;
        let e = self.edge(k)?;
        if e.is_incident(j) {
            Ok(e)
        } else {
            Err(GraphError::NotIncident { vertex: j, edge: k })
        }
    }

    /// Unit vector pointing from `j` along edge `k`.
    pub fn edge_direction(&self, j: VertexId, k: EdgeId) -> Result<Vec3, GraphError> {
        let e = self.incident_edge(j, k)?;
        let other = e.other_end(j).expect("incident");
        let d = self.position(other) - self.position(j);
        Ok(d * (1.0 / d.norm()))
    }

    /// The point at distance `s` from `j` along edge `k`.
    pub fn point_at(&self, j: VertexId, k: EdgeId, s: f64) -> Result<Vec3, GraphError> {
        let e = self.incident_edge(j, k)?;
        if !(0.0..=e.length).contains(&s) {
            return Err(GraphError::OutOfRange { edge: k, s, length: e.length });
        }
        Ok(self.position(j) + self.edge_direction(j, k)? * s)
    }

    /// Converts a distance measured from endpoint `j` into arclength from the
    /// lower endpoint.
    pub fn arclength_from(&self, k: EdgeId, j: VertexId, dist: f64) -> f64 {
        let e = &self.edges[k.index()];
        if j == e.lower() {
            dist
        } else {
            e.length - dist
        }
    }

    /// Graph point at distance `dist` from `j` along `k`, collapsed to a
    /// vertex at either end.
    pub fn point_from(&self, j: VertexId, k: EdgeId, dist: f64) -> Result<GraphPoint, GraphError> {
        let e = self.incident_edge(j, k)?;
        if !(0.0..=e.length).contains(&dist) {
            return Err(GraphError::OutOfRange { edge: k, s: dist, length: e.length });
        }
        Ok(self.normalize(GraphPoint::OnEdge { edge: k, arclength: self.arclength_from(k, j, dist) }))
    }

    /// Maps edge endpoints to the corresponding vertex variant.
    pub fn normalize(&self, p: GraphPoint) -> GraphPoint {
        match p {
            GraphPoint::OnEdge { edge, arclength } => {
                let e = &self.edges[edge.index()];
                if arclength <= 0.0 {
                    GraphPoint::Vertex(e.lower())
                } else if arclength >= e.length {
                    GraphPoint::Vertex(e.upper())
                } else {
                    p
                }
            }
            v => v,
        }
    }

    pub fn check_point(&self, p: &GraphPoint) -> Result<(), GraphError> {
        match *p {
            GraphPoint::Vertex(j) => self.vertex(j).map(|_| ()),
            GraphPoint::OnEdge { edge, arclength } => {
                let e = self.edge(edge)?;
                if (0.0..=e.length).contains(&arclength) {
                    Ok(())
                } else {
                    Err(GraphError::OutOfRange { edge, s: arclength, length: e.length })
                }
            }
        }
    }

    /// Euclidean position of a graph point.
    pub fn embed(&self, p: &GraphPoint) -> Vec3 {
        match *p {
            GraphPoint::Vertex(j) => self.position(j),
            GraphPoint::OnEdge { edge, arclength } => {
                let e = &self.edges[edge.index()];
                let a = self.position(e.lower());
                let b = self.position(e.upper());
                a + (b - a) * (arclength / e.length)
            }
        }
    }

    /// `(vertex, offset)` pairs through which a shortest path may leave `p`.
    fn exits(&self, p: &GraphPoint) -> [(VertexId, f64); 2] {
        match *p {
            GraphPoint::Vertex(j) => [(j, 0.0), (j, 0.0)],
            GraphPoint::OnEdge { edge, arclength } => {
                let e = &self.edges[edge.index()];
                [(e.lower(), arclength), (e.upper(), e.length - arclength)]
            }
        }
    }

    /// Shortest-path distance between two graph points.
    pub fn distance(&self, x: &GraphPoint, y: &GraphPoint) -> Result<f64, GraphError> {
        self.check_point(x)?;
        self.check_point(y)?;
        if let (GraphPoint::OnEdge { edge: kx, arclength: sx }, GraphPoint::OnEdge { edge: ky, arclength: sy }) = (x, y)
        {
            if kx == ky {
                return Ok((sx - sy).abs());
            }
        }
        let mut best = f64::INFINITY;
        for (vx, ox) in self.exits(x) {
            for (vy, oy) in self.exits(y) {
                let d = ox + self.vertex_dist[vx.index()][vy.index()] + oy;
                if d < best {
                    best = d;
                }
            }
        }
        Ok(best)
    }

    /// Graph distance between two vertices.
    pub fn vertex_distance(&self, a: VertexId, b: VertexId) -> f64 {
        self.vertex_dist[a.index()][b.index()]
    }

    /// Graph distance from a point to a vertex.
    pub fn distance_to_vertex(&self, x: &GraphPoint, j: VertexId) -> f64 {
        self.exits(x).iter().map(|&(v, o)| o + self.vertex_dist[v.index()][j.index()]).fold(f64::INFINITY, f64::min)
    }

    fn dijkstra(&self, source: VertexId) -> Vec<f64> {
        #[derive(PartialEq)]
        struct Item(f64, usize);
        impl Eq for Item {}
        impl PartialOrd for Item {
            fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
                Some(self.cmp(o))
            }
        }
        impl Ord for Item {
            fn cmp(&self, o: &Self) -> Ordering {
                // min-heap on distance, then index
                o.0.total_cmp(&self.0).then_with(|| o.1.cmp(&self.1))
            }
        }

        let n = self.vertices.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut heap = BinaryHeap::new();
        dist[source.index()] = 0.0;
        heap.push(Item(0.0, source.index()));
        while let Some(Item(d, u)) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for k in &self.adjacency[u] {
                let e = &self.edges[k.index()];
                let Some(v) = e.other_end(VertexId::from_index(u)) else { continue };
                let nd = d + e.length;
                if nd < dist[v.index()] {
                    dist[v.index()] = nd;
                    heap.push(Item(nd, v.index()));
                }
            }
        }
        dist
    }
}

/// Convenience builders for the graphs used throughout the examples and tests.
pub mod shapes {
    use super::*;

    /// Star in the plane: center `O1` at the origin and one leaf per entry of
    /// `arms`, given as `(length, lambda)`, spread at equal angles.
    pub fn star(arms: &[(f64, f64)]) -> MetricGraph {
        let m = arms.len();
        let mut positions = vec![Vec3::ZERO];
        let mut edges = Vec::new();
        for (i, &(len, lambda)) in arms.iter().enumerate() {
            let theta = std::f64::consts::TAU * i as f64 / m as f64;
            positions.push(Vec3::planar(len * theta.cos(), len * theta.sin()));
            edges.push(EdgeSpec::new(1, i + 2, lambda));
        }
        MetricGraph::new(2, positions, edges).expect("star graph is valid")
    }

    /// Path `O1 - O2 - ... ` along the x axis with the given edge lengths and widths.
    pub fn path(lengths: &[f64], lambdas: &[f64]) -> MetricGraph {
        assert_eq!(lengths.len(), lambdas.len());
        let mut x = 0.0;
        let mut positions = vec![Vec3::ZERO];
        let mut edges = Vec::new();
        for (i, (&len, &lambda)) in lengths.iter().zip(lambdas).enumerate() {
            x += len;
            positions.push(Vec3::planar(x, 0.0));
            edges.push(EdgeSpec::new(i + 1, i + 2, lambda));
        }
        MetricGraph::new(2, positions, edges).expect("path graph is valid")
    }

    /// Two vertices joined by one edge of the given length.
    pub fn dumbbell(length: f64, lambda: f64) -> MetricGraph {
        path(&[length], &[lambda])
    }
}
