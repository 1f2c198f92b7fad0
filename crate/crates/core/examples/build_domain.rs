//! Builds a star-shaped tube domain, checks feasibility, and projects a few
//! points back onto the graph.
//!
//! cargo run --example build_domain

use narrow_tube::geometry::{ScalingLaw, TubeDomain};
use narrow_tube::graph::{shapes, EdgeId, GraphPoint, VertexId};
use narrow_tube::vec3::Vec3;

fn main() {
    // three arms: (length, lambda)
    let graph = shapes::star(&[(1.5, 1.0), (1.5, 2.0), (2.5, 1.0)]);
    let scaling = ScalingLaw::uniform(graph.vertex_count(), 1.0, 0.4, 2).unwrap();

    for eps in [0.08, 0.04, 0.02] {
        let domain = TubeDomain::build(graph.clone(), scaling.clone(), eps).unwrap();
        println!(
            "eps {eps}: ball radius {:.4}, half-widths {:?}, collar level {:.4}",
            domain.radius(VertexId(1)),
            graph.edges().iter().map(|e| e.lambda * eps).collect::<Vec<_>>(),
            domain.collar_level(VertexId(1)),
        );
    }

    // an exponent at or above (d-1)/d is rejected
    let bad = ScalingLaw::uniform(graph.vertex_count(), 1.0, 0.6, 2);
    println!("beta = 0.6: {}", bad.unwrap_err());

    // too wide for the arm lengths
    match TubeDomain::build(graph.clone(), scaling.clone(), 0.5) {
        Ok(_) => println!("eps 0.5 unexpectedly feasible"),
        Err(e) => println!("eps 0.5: {e}"),
    }

    let domain = TubeDomain::build(graph.clone(), scaling, 0.04).unwrap();
    let r = domain.radius(VertexId(1));
    let probes = [
        Vec3::planar(0.05, 0.02),
        Vec3::planar(r - 0.05, 0.0),
        Vec3::planar(r + 0.01, 0.01),
        Vec3::planar(0.9, -0.03),
        Vec3::planar(0.9, 0.3),
    ];
    for z in probes {
        if !domain.contains(z) {
            println!("{:?}: outside", (z.x, z.y));
            continue;
        }
        let nearest = domain.nearest_projection(z);
        let smooth = domain.continuous_projection(z).unwrap();
        println!("{:?}: Pi = {nearest:?}, Pi_eps = {smooth:?}", (z.x, z.y));
    }

    let x = GraphPoint::OnEdge { edge: EdgeId(2), arclength: 0.7 };
    let z = domain.fiber_point(&x, &[0.05, 0.0]);
    let loc = domain.local_coordinates(z).unwrap();
    println!("fiber point over {x:?}: local coordinates {loc:?}");
    println!("reconstructed: {:?}", loc.reconstruct(&domain));
}
