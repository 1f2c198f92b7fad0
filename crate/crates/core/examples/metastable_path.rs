//! Intermediate-scale behaviour on a path with a small middle ball: started at
//! O2, the process should settle in O1 with probability 2/3 on the scale
//! between T^1 and T^2.
//!
//! cargo run --release --example metastable_path

use narrow_tube::geometry::{build_domain, ScalingLaw};
use narrow_tube::graph::{shapes, GraphPoint, VertexId};
use narrow_tube::predictor::{
    fiber_sample, intermediate_time, mc_observable, predict_intermediate, Observable, PredictionReport,
};
use narrow_tube::sde::{SimConfig, Start};

fn main() {
    let graph = shapes::path(&[1.0, 2.0], &[1.0, 1.0]);
    let scaling = ScalingLaw::new(vec![1.0; 3], vec![0.3, 0.45, 0.3], 2).unwrap();
    let x = GraphPoint::Vertex(VertexId(2));
    let bump = Observable::Bump(VertexId(1));
    let limit = predict_intermediate(&graph, &scaling, 1, &x, &bump).unwrap();
    println!("limit mu(O2, O1) = {limit:.4}");

    for eps in [0.04, 0.02] {
        let domain = build_domain(&graph, &scaling, eps).unwrap();
        let t = intermediate_time(&scaling, 2, 1, eps).unwrap();
        let z = fiber_sample(&domain, &x, 0, 0)[0];
        let est = mc_observable(&domain, Start::Point(z), t, &bump, 400, &SimConfig::with_seed(5), 0).unwrap();
        let rep = PredictionReport::new("bump at O1", &est, limit, 3.0, 0.0);
        println!(
            "eps {eps}: t = {t:.3}, E F(Pi_eps Z(t)) = {:.4} +- {:.4} ({:+.1} SE, {})",
            est.mean,
            est.se,
            rep.discrepancy,
            rep.verdict()
        );
    }
}
