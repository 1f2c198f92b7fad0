//! Follows single reflected paths: positions at fixed times, the first exit
//! through a set of sections, and the cycle decomposition between the inner
//! section and the restart/exit sections.
//!
//! cargo run --release --example reflected_path

use narrow_tube::geometry::{build_domain, ScalingLaw, SectionFamily};
use narrow_tube::graph::{shapes, VertexId};
use narrow_tube::sde::{
    default_delta, default_start, events_alternate, observe, run_cycles, run_until_sections, write_event_log,
    SimConfig, Start, Walker,
};

fn main() {
    let graph = shapes::star(&[(1.5, 1.0), (1.5, 2.0), (2.5, 1.0)]);
    let scaling = ScalingLaw::uniform(4, 1.0, 0.4, 2).unwrap();
    let domain = build_domain(&graph, &scaling, 0.04).unwrap();
    let config = SimConfig::with_seed(42);
    let j = VertexId(1);

    let walker = Walker::new(&domain, Start::Point(graph.position(j)), &config, 0).unwrap();
    println!("base step {:.3e}", walker.base_step());

    let times = [0.01, 0.1, 0.5, 1.0];
    let obs = observe(&domain, Start::Point(graph.position(j)), &times, None, &config, 0).unwrap();
    for (t, z) in times.iter().zip(&obs.positions) {
        println!("t = {t:<5} z = ({:+.4}, {:+.4})  Pi_eps = {:?}", z.x, z.y, domain.continuous_projection(*z).unwrap());
    }
    println!("{} steps", obs.steps);

    let levels = SectionFamily::exit_levels(&domain, j).unwrap();
    let start = Start::Point(default_start(&domain, j).unwrap());
    for traj in 0..5 {
        let rec = run_until_sections(&domain, start, std::slice::from_ref(&levels), &config, traj).unwrap();
        println!(
            "path {traj}: exit through {} at t = {:.4} after {} steps",
            rec.exit_edge.unwrap(),
            rec.exit_time,
            rec.steps
        );
    }

    let delta = default_delta(&domain, &levels);
    let (rec, events) = run_cycles(&domain, start, delta, &levels, &config, 7).unwrap();
    println!(
        "cycles with delta = {delta:.3}: {} excursions, exit through {} at t = {:.4}, alternating: {}",
        rec.cycles,
        rec.exit_edge.unwrap(),
        rec.exit_time,
        events_alternate(&events)
    );
    let mut log = Vec::new();
    write_event_log(&mut log, &[(7, events)]).unwrap();
    let text = String::from_utf8(log).unwrap();
    for line in text.lines().take(6) {
        println!("  {line}");
    }
}
