#![allow(dead_code)]

use narrow_tube::geometry::ScalingLaw;
use narrow_tube::graph::{EdgeSpec, MetricGraph};
use narrow_tube::vec3::Vec3;
use rand::Rng;

/// Connected planar graph on `n` random vertices: a random spanning tree plus
/// a few extra chords. Edges may cross; only the metric structure matters.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize) -> MetricGraph {
    let positions: Vec<Vec3> =
        (0..n).map(|_| Vec3::planar(4.0 * rng.random::<f64>(), 4.0 * rng.random::<f64>())).collect();
    let mut edges = Vec::new();
    let mut pairs = Vec::new();
    for v in 1..n {
        let u = rng.random_range(0..v);
        pairs.push((u, v));
    }
    for _ in 0..rng.random_range(0..=n) {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        let (a, b) = (a.min(b), a.max(b));
        if a != b && !pairs.contains(&(a, b)) {
            pairs.push((a, b));
        }
    }
    for (a, b) in pairs {
        edges.push(EdgeSpec::new(a + 1, b + 1, 0.5 + rng.random::<f64>()));
    }
    MetricGraph::new(2, positions, edges).expect("random graph is valid")
}

/// Exponents drawn from a few classes, so ladders have ties; at least two classes.
pub fn random_scaling<R: Rng>(rng: &mut R, n: usize) -> ScalingLaw {
    let classes = [0.2, 0.3, 0.4];
    loop {
        let beta: Vec<f64> = (0..n).map(|_| classes[rng.random_range(0..classes.len())]).collect();
        if beta.iter().any(|&b| b != beta[0]) {
            return ScalingLaw::new(vec![1.0; n], beta, 2).expect("valid exponents");
        }
    }
}
