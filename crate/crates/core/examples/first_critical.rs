//! First critical scale on a dumbbell: the small ball empties at rate kappa,
//! and paths that have not left stay close to its centre.
//!
//! cargo run --release --example first_critical

use narrow_tube::geometry::{build_domain, ScalingLaw, SectionFamily};
use narrow_tube::graph::{shapes, GraphPoint, VertexId};
use narrow_tube::limits::kappa;
use narrow_tube::predictor::{first_timescale, localization_run, mc_probes, predict_first_critical, Observable, Probe};
use narrow_tube::sde::{SimConfig, Start};

fn main() {
    let eps = 0.04;
    let graph = shapes::dumbbell(2.0, 1.0);
    let scaling = ScalingLaw::new(vec![1.0; 2], vec![0.45, 0.3], 2).unwrap();
    let domain = build_domain(&graph, &scaling, eps).unwrap();
    let j1 = VertexId(1);
    let levels = SectionFamily::exit_levels(&domain, j1).unwrap();
    let k = kappa(&graph, j1, &levels.levels).unwrap();
    let t1 = first_timescale(&scaling, 2, eps);
    println!("L_eps = {:.4}, kappa = {k:.4}, T^1 = {t1:.4}", levels.levels[0].1);

    let s = [0.5, 1.0, 2.0];
    let times: Vec<f64> = s.iter().map(|s| s * t1).collect();
    let probes = [Probe::Observable(Observable::Bump(j1)), Probe::Collar(j1)];
    let config = SimConfig::with_seed(9);
    let est = mc_probes(&domain, Start::Point(graph.position(j1)), &times, &probes, 400, &config, 0).unwrap();
    for (si, row) in s.iter().zip(&est) {
        let limit =
            predict_first_critical(&graph, &scaling, &levels, &GraphPoint::Vertex(j1), *si, &Observable::Bump(j1))
                .unwrap();
        println!(
            "s {si}: bump {:.4} +- {:.4}, collar {:.4} +- {:.4}, limit {limit:.4}",
            row[0].mean, row[0].se, row[1].mean, row[1].se
        );
    }

    let delta = 0.25 * levels.levels[0].1;
    for l in localization_run(&domain, j1, &s, delta, 400, &config, 0).unwrap() {
        println!("s {}: P(far from O1, not escaped) = {:.4}, P(not escaped) = {:.4}", l.s, l.far, l.inside);
    }
}
