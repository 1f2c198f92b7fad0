//! Exit place and exit time statistics from the centre of a three-arm star,
//! compared with the limiting exit law.
//!
//! cargo run --release --example exit_statistics

use narrow_tube::geometry::{build_domain, ScalingLaw, SectionFamily};
use narrow_tube::graph::{shapes, EdgeId, VertexId};
use narrow_tube::limits::{exit_edge_probability, mean_exit_scale};
use narrow_tube::sde::{run_ensemble, run_until_sections, SimConfig, Start};
use narrow_tube::stats::{
    conditional_mean_exit_time, exit_place_distribution, format_reports, independence_test, ks_exponential,
    mean_exit_time, EnsembleSummary, ExitEnsemble,
};

fn main() {
    let eps = 0.04;
    let n = 1000;
    let graph = shapes::star(&[(1.5, 1.0), (1.5, 2.0), (2.5, 1.0)]);
    let scaling = ScalingLaw::uniform(4, 1.0, 0.4, 2).unwrap();
    let domain = build_domain(&graph, &scaling, eps).unwrap();
    let j = VertexId(1);
    let levels = SectionFamily::new(&graph, j, vec![(EdgeId(1), 1.0), (EdgeId(2), 1.0), (EdgeId(3), 2.0)]).unwrap();
    let config = SimConfig::with_seed(3);
    let start = Start::Point(graph.position(j));

    let records =
        run_ensemble(n, 0, |i| run_until_sections(&domain, start, std::slice::from_ref(&levels), &config, i).unwrap());
    let summary = EnsembleSummary { eps, vertex: j, levels: levels.levels.clone(), delta: None };
    let ens = ExitEnsemble::new(records, summary).unwrap();

    let limit = exit_edge_probability(&graph, j, &levels.levels).unwrap();
    for (f, (_, p)) in exit_place_distribution(&ens).unwrap().iter().zip(&limit) {
        println!("{}: {:.4} in [{:.4}, {:.4}], limit {:.4}", f.edge, f.frequency, f.lo, f.hi, p);
    }

    let scale = mean_exit_scale(&graph, j, &levels.levels, domain.radius(j), eps).unwrap();
    let (m, se) = mean_exit_time(&ens).unwrap();
    println!("mean exit time {m:.4} +- {se:.4}, limit scale {scale:.4}, ratio {:.3}", m / scale);
    for &(k, _) in &levels.levels {
        if let Ok((mk, sk)) = conditional_mean_exit_time(&ens, k) {
            println!("  given exit through {k}: {mk:.4} +- {sk:.4}");
        }
    }

    let reports = vec![ks_exponential(&ens, scale).unwrap(), independence_test(&ens).unwrap()];
    print!("{}", format_reports(&reports));
}
