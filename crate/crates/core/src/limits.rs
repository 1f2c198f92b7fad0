//! Closed-form limits: exit-edge laws, exit-time scales, the timescale
//! ladder, the absorbing chains of the intermediate scales, and the
//! continuous-time chain of the first critical scale.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use thiserror::Error;

use crate::geometry::{ScalingLaw, SectionFamily};
use crate::graph::{EdgeId, GraphPoint, MetricGraph, VertexId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LimitError {
    #[error("vertex {0} has no incident edges")]
    Isolated(VertexId),
    #[error("level on {edge} must be positive, got {level}")]
    Level { edge: EdgeId, level: f64 },
    #[error("level map at {vertex} does not match its incident edges")]
    Levels { vertex: VertexId },
    #[error("chain index {index} outside 1..={max}")]
    Index { index: usize, max: usize },
    #[error("chain {0} has no absorbing state")]
    NoAbsorbing(usize),
    #[error("transient state {0} cannot reach an absorbing state")]
    Singular(VertexId),
    #[error("the smallest radius class has {0} vertices; the continuous-time limit needs a unique smallest vertex")]
    MinimalNotUnique(usize),
    #[error("level map is attached to {got}, but the smallest vertex is {expected}")]
    WrongVertex { got: VertexId, expected: VertexId },
}

/// Volume of the unit ball in dimension `d` (1, 2 or 3).
pub fn ball_volume(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => panic!("unit ball volume only tabulated for d = 1, 2, 3"),
    }
}

fn weights(graph: &MetricGraph, j: VertexId, levels: &[(EdgeId, f64)]) -> Result<Vec<(EdgeId, f64)>, LimitError> {
    let inc = graph.incident(j);
    if inc.is_empty() {
        return Err(LimitError::Isolated(j));
    }
    let d = graph.dim() as i32;
    inc.iter()
        .map(|&k| {
            let level =
                levels.iter().find(|&&(e, _)| e == k).map(|&(_, l)| l).ok_or(LimitError::Levels { vertex: j })?;
            if !(level > 0.0) {
                return Err(LimitError::Level { edge: k, level });
            }
            let lambda = graph.edges()[k.index()].lambda;
            Ok((k, lambda.powi(d - 1) / level))
        })
        .collect()
}

/// `p_k = (lambda_k^{d-1} / L_k) / sum_l (lambda_l^{d-1} / L_l)` over the edges at `j`.
pub fn exit_edge_probability(
    graph: &MetricGraph,
    j: VertexId,
    levels: &[(EdgeId, f64)],
) -> Result<Vec<(EdgeId, f64)>, LimitError> {
    let w = weights(graph, j, levels)?;
    let total: f64 = w.iter().map(|&(_, x)| x).sum();
    Ok(w.into_iter().map(|(k, x)| (k, x / total)).collect())
}

/// Level map with `L_k = |I_k|` for every edge at `j`.
pub fn edge_length_levels(graph: &MetricGraph, j: VertexId) -> Vec<(EdgeId, f64)> {
    graph.incident(j).iter().map(|&k| (k, graph.edges()[k.index()].length)).collect()
}

fn lambda_sum(graph: &MetricGraph, j: VertexId) -> f64 {
    let d = graph.dim() as i32;
    graph.incident(j).iter().map(|&k| graph.edges()[k.index()].lambda.powi(d - 1)).sum()
}

/// Ball-to-tube volume ratio `r^d V_d / (sum_k lambda_k^{d-1} eps^{d-1} V_{d-1})`.
pub fn alpha(dim: usize, r: f64, eps: f64, lambdas: &[f64]) -> f64 {
    let d = dim as i32;
    let s: f64 = lambdas.iter().map(|l| l.powi(d - 1)).sum();
    r.powi(d) * ball_volume(dim) / (s * eps.powi(d - 1) * ball_volume(dim - 1))
}

/// `alpha` for vertex `j` with ball radius `r`.
pub fn alpha_at(graph: &MetricGraph, j: VertexId, r: f64, eps: f64) -> f64 {
    let lambdas: Vec<f64> = graph.incident(j).iter().map(|&k| graph.edges()[k.index()].lambda).collect();
    alpha(graph.dim(), r, eps, &lambdas)
}

/// Limiting mean exit time `alpha * sum lambda^{d-1} / sum (lambda^{d-1} / L)`.
pub fn mean_exit_scale(
    graph: &MetricGraph,
    j: VertexId,
    levels: &[(EdgeId, f64)],
    r: f64,
    eps: f64,
) -> Result<f64, LimitError> {
    let w: f64 = weights(graph, j, levels)?.iter().map(|&(_, x)| x).sum();
    Ok(alpha_at(graph, j, r, eps) * lambda_sum(graph, j) / w)
}

/// Rate `V_{d-1} sum (lambda^{d-1} / L) / V_d` of the first critical chain.
pub fn kappa(graph: &MetricGraph, j: VertexId, levels: &[(EdgeId, f64)]) -> Result<f64, LimitError> {
    let w: f64 = weights(graph, j, levels)?.iter().map(|&(_, x)| x).sum();
    let d = graph.dim();
    Ok(ball_volume(d - 1) * w / ball_volume(d))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderGroup {
    pub beta: f64,
    pub members: Vec<VertexId>,
    /// Smallest constant `c_j` in the group; the group's radius is `c * eps^beta`.
    pub c: f64,
}

/// Vertices grouped by radius order, smallest radius first.
#[derive(Debug, Clone, PartialEq)]
pub struct TimescaleLadder {
    pub dim: usize,
    pub groups: Vec<LadderGroup>,
}

impl TimescaleLadder {
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Group `i` (1-based).
    pub fn group(&self, i: usize) -> &LadderGroup {
        &self.groups[i - 1]
    }

    pub fn radius(&self, i: usize, eps: f64) -> f64 {
        let g = self.group(i);
        g.c * eps.powf(g.beta)
    }

    /// `T^i = r_(i)^d / eps^{d-1}`.
    pub fn timescale(&self, i: usize, eps: f64) -> f64 {
        let d = self.dim as i32;
        self.radius(i, eps).powi(d) / eps.powi(d - 1)
    }

    /// Index of the group containing `j`.
    pub fn group_of(&self, j: VertexId) -> usize {
        1 + self.groups.iter().position(|g| g.members.contains(&j)).expect("every vertex is grouped")
    }
}

pub fn timescale_ladder(scaling: &ScalingLaw, dim: usize) -> TimescaleLadder {
    let mut groups: Vec<LadderGroup> = Vec::new();
    for i in 0..scaling.len() {
        let j = VertexId::from_index(i);
        let beta = scaling.beta(j);
        match groups.iter_mut().find(|g| g.beta == beta) {
            Some(g) => {
                g.members.push(j);
                g.c = g.c.min(scaling.c(j));
            }
            None => groups.push(LadderGroup { beta, members: vec![j], c: scaling.c(j) }),
        }
    }
    groups.sort_by(|a, b| b.beta.total_cmp(&a.beta));
    TimescaleLadder { dim, groups }
}

/// Discrete chain of the `i`-th intermediate scale.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorbingChain {
    pub index: usize,
    /// Row-stochastic matrix indexed by vertex index.
    pub p: Vec<Vec<f64>>,
    pub absorbing: Vec<bool>,
}

impl AbsorbingChain {
    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn is_absorbing(&self, j: VertexId) -> bool {
        self.absorbing[j.index()]
    }
}

/// Row of jump probabilities from `j` to its neighbours using `L_k = |I_k|`.
fn neighbour_row(graph: &MetricGraph, j: VertexId, levels: &[(EdgeId, f64)]) -> Result<Vec<f64>, LimitError> {
    let mut row = vec![0.0; graph.vertex_count()];
    for (k, p) in exit_edge_probability(graph, j, levels)? {
        let other = graph.edges()[k.index()].other_end(j).expect("incident");
        row[other.index()] += p;
    }
    Ok(row)
}

/// Vertices whose radius order exceeds that of group `i` are frozen
/// (absorbing); every other vertex jumps to a neighbour with the exit-edge law.
pub fn intermediate_chain(graph: &MetricGraph, scaling: &ScalingLaw, i: usize) -> Result<AbsorbingChain, LimitError> {
    let ladder = timescale_ladder(scaling, graph.dim());
    if ladder.len() < 2 || i == 0 || i > ladder.len() - 1 {
        return Err(LimitError::Index { index: i, max: ladder.len().saturating_sub(1) });
    }
    let beta_i = ladder.group(i).beta;
    let n = graph.vertex_count();
    let absorbing: Vec<bool> = graph.vertex_ids().map(|j| scaling.beta(j) < beta_i).collect();
    if !absorbing.iter().any(|&a| a) {
        return Err(LimitError::NoAbsorbing(i));
    }
    let mut p = vec![vec![0.0; n]; n];
    for j in graph.vertex_ids() {
        if absorbing[j.index()] {
            p[j.index()][j.index()] = 1.0;
        } else {
            p[j.index()] = neighbour_row(graph, j, &edge_length_levels(graph, j))?;
        }
    }
    Ok(AbsorbingChain { index: i, p, absorbing })
}

/// Absorption law `mu(source, target)`, rows indexed by vertex index.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorptionDistribution {
    pub mu: Vec<Vec<f64>>,
}

impl AbsorptionDistribution {
    pub fn row(&self, j: VertexId) -> &[f64] {
        &self.mu[j.index()]
    }

    pub fn get(&self, source: VertexId, target: VertexId) -> f64 {
        self.mu[source.index()][target.index()]
    }
}

/// Solves `A x = B` in place (`B` with several right-hand sides) by Gaussian
/// elimination with partial pivoting. Returns the failing pivot row on singularity.
#[allow(clippy::needless_range_loop)]
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>, usize> {
    let n = a.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).expect("nonempty");
        if a[piv][col].abs() < 1e-13 {
            return Err(col);
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                a[row][c] -= f * a[col][c];
            }
            for c in 0..b[row].len() {
                b[row][c] -= f * b[col][c];
            }
        }
    }
    for row in (0..n).rev() {
        for c in 0..b[row].len() {
            let mut s = b[row][c];
            for k in row + 1..n {
                s -= a[row][k] * b[k][c];
            }
            b[row][c] = s / a[row][row];
        }
    }
    Ok(b)
}

/// `(I - Q)^{-1} R` in canonical form; absorbing sources map to themselves.
pub fn absorption_distribution(chain: &AbsorbingChain) -> Result<AbsorptionDistribution, LimitError> {
    let n = chain.len();
    let transient: Vec<usize> = (0..n).filter(|&i| !chain.absorbing[i]).collect();
    let absorbing: Vec<usize> = (0..n).filter(|&i| chain.absorbing[i]).collect();
    let mut mu = vec![vec![0.0; n]; n];
    for &a in &absorbing {
        mu[a][a] = 1.0;
    }
    if transient.is_empty() {
        return Ok(AbsorptionDistribution { mu });
    }
    let m = transient.len();
    let mut lhs = vec![vec![0.0; m]; m];
    let mut rhs = vec![vec![0.0; absorbing.len()]; m];
    for (x, &i) in transient.iter().enumerate() {
        for (y, &j) in transient.iter().enumerate() {
            lhs[x][y] = if x == y { 1.0 } else { 0.0 } - chain.p[i][j];
        }
        for (y, &j) in absorbing.iter().enumerate() {
            rhs[x][y] = chain.p[i][j];
        }
    }
    let sol = solve(lhs, rhs).map_err(|c| LimitError::Singular(VertexId::from_index(transient[c])))?;
    for (x, &i) in transient.iter().enumerate() {
        for (y, &j) in absorbing.iter().enumerate() {
            mu[i][j] = sol[x][y].max(0.0);
        }
        let s: f64 = mu[i].iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(LimitError::Singular(VertexId::from_index(i)));
        }
    }
    Ok(AbsorptionDistribution { mu })
}

/// One-dimensional hitting weight `p(x, O_j) = d(x, O_{j'}) / |I_k|` for `x`
/// on edge `k = (j, j')`; zero when `j` is not an endpoint.
pub fn hitting_weight(graph: &MetricGraph, x: &GraphPoint, j: VertexId) -> f64 {
    match graph.normalize(*x) {
        GraphPoint::Vertex(v) => f64::from(u8::from(v == j)),
        GraphPoint::OnEdge { edge, arclength } => {
            let e = &graph.edges()[edge.index()];
            if j == e.lower() {
                (e.length - arclength) / e.length
            } else if j == e.upper() {
                arclength / e.length
            } else {
                0.0
            }
        }
    }
}

/// `(vertex, weight)` pairs with nonzero hitting weight from `x`.
pub fn hitting_weights(graph: &MetricGraph, x: &GraphPoint) -> Vec<(VertexId, f64)> {
    match graph.normalize(*x) {
        GraphPoint::Vertex(v) => vec![(v, 1.0)],
        GraphPoint::OnEdge { edge, .. } => {
            let e = &graph.edges()[edge.index()];
            [e.lower(), e.upper()].into_iter().map(|j| (j, hitting_weight(graph, x, j))).collect()
        }
    }
}

/// `mu(x, .) = sum_j p(x, O_j) mu(O_j, .)`.
pub fn mu_extended(dist: &AbsorptionDistribution, graph: &MetricGraph, x: &GraphPoint) -> Vec<f64> {
    let mut row = vec![0.0; graph.vertex_count()];
    for (j, w) in hitting_weights(graph, x) {
        for (r, m) in row.iter_mut().zip(dist.row(j)) {
            *r += w * m;
        }
    }
    row
}

/// Continuous-time chain on the vertices: only the smallest vertex jumps.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexCtmc {
    pub rates: Vec<f64>,
    pub jumps: Vec<Vec<f64>>,
    pub minimal: VertexId,
}

/// The chain of the first critical scale with rate `kappa(L)` at the unique
/// smallest vertex. `levels` is the level map at that vertex.
pub fn ctmc_build(graph: &MetricGraph, scaling: &ScalingLaw, levels: &SectionFamily) -> Result<VertexCtmc, LimitError> {
    let ladder = timescale_ladder(scaling, graph.dim());
    let first = ladder.group(1);
    if first.members.len() != 1 {
        return Err(LimitError::MinimalNotUnique(first.members.len()));
    }
    let j1 = first.members[0];
    if levels.vertex != j1 {
        return Err(LimitError::WrongVertex { got: levels.vertex, expected: j1 });
    }
    let n = graph.vertex_count();
    let mut rates = vec![0.0; n];
    let mut jumps = vec![vec![0.0; n]; n];
    for j in graph.vertex_ids() {
        if j == j1 {
            rates[j.index()] = kappa(graph, j, &levels.levels)?;
            jumps[j.index()] = neighbour_row(graph, j, &levels.levels)?;
        } else {
            jumps[j.index()] = neighbour_row(graph, j, &edge_length_levels(graph, j))?;
        }
    }
    Ok(VertexCtmc { rates, jumps, minimal: j1 })
}

/// Law of `Y(s)` from `start` by uniformization.
pub fn ctmc_law_at(ctmc: &VertexCtmc, start: VertexId, s: f64) -> Vec<f64> {
    let n = ctmc.rates.len();
    let mut v = vec![0.0; n];
    v[start.index()] = 1.0;
    let big = ctmc.rates.iter().copied().fold(0.0, f64::max);
    if big == 0.0 || s == 0.0 {
        return v;
    }
    // P = I + Q / big
    let step = |v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; n];
        for i in 0..n {
            let q = ctmc.rates[i] / big;
            out[i] += v[i] * (1.0 - q);
            if q > 0.0 {
                for (o, p) in out.iter_mut().zip(&ctmc.jumps[i]) {
                    *o += v[i] * q * p;
                }
            }
        }
        out
    };
    let m = big * s;
    let mut law = vec![0.0; n];
    let mut log_fact = 0.0;
    let mut mass = 0.0;
    let mut k = 0usize;
    loop {
        let w = (-m + k as f64 * m.ln() - log_fact).exp();
        for (l, x) in law.iter_mut().zip(&v) {
            *l += w * x;
        }
        mass += w;
        if k as f64 > m && 1.0 - mass < 1e-13 {
            break;
        }
        k += 1;
        log_fact += (k as f64).ln();
        v = step(&v);
        if k > 100_000 + (20.0 * m) as usize {
            break;
        }
    }
    law
}

/// Exact simulation of `Y(s)` with exponential holding times.
pub fn ctmc_sample<R: Rng + ?Sized>(ctmc: &VertexCtmc, start: VertexId, s: f64, rng: &mut R) -> VertexId {
    let mut state = start;
    let mut t = 0.0;
    loop {
        let rate = ctmc.rates[state.index()];
        if rate <= 0.0 {
            return state;
        }
        t += Exp::new(rate).expect("positive rate").sample(rng);
        if t > s {
            return state;
        }
        let u: f64 = rng.random();
        let row = &ctmc.jumps[state.index()];
        let mut acc = 0.0;
        let mut next = row.iter().rposition(|&p| p > 0.0).expect("jump row has mass");
        for (i, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                next = i;
                break;
            }
        }
        state = VertexId::from_index(next);
    }
}
