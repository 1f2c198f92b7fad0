use narrow_tube::geometry::{segment_distance, ScalingLaw, TubeDomain};
use narrow_tube::graph::{shapes, GraphPoint, MetricGraph, VertexId};
use narrow_tube::vec3::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn star_domain(eps: f64) -> TubeDomain {
    let g = shapes::star(&[(1.5, 1.0), (1.5, 2.0), (2.5, 1.0)]);
    TubeDomain::build(g, ScalingLaw::uniform(4, 1.0, 0.4, 2).unwrap(), eps).unwrap()
}

// membership straight from the definition: union of closed balls and cylinders
fn brute_contains(d: &TubeDomain, z: Vec3) -> bool {
    let g = d.graph();
    g.vertex_ids().any(|j| z.distance(g.position(j)) <= d.radius(j))
        || g.edges()
            .iter()
            .any(|e| segment_distance(z, z, g.position(e.lower()), g.position(e.upper())) <= d.half_width(e.id))
}

fn brute_nearest_distance(g: &MetricGraph, z: Vec3) -> f64 {
    g.edges()
        .iter()
        .map(|e| {
            let a = g.position(e.lower());
            let b = g.position(e.upper());
            (0..=4000).map(|i| z.distance(a + (b - a) * (i as f64 / 4000.0))).fold(f64::INFINITY, f64::min)
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn membership_matches_dense_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for eps in [0.08, 0.02] {
        let d = star_domain(eps);
        let mut inside = 0;
        for _ in 0..200_000 {
            let z = Vec3::planar(-1.5 + 3.2 * rng.random::<f64>(), -2.4 + 3.8 * rng.random::<f64>());
            let c = d.contains(z);
            assert_eq!(c, brute_contains(&d, z), "eps {eps}, z {z:?}");
            inside += c as usize;
        }
        assert!(inside > 1000);
    }
}

#[test]
fn membership_near_the_walls() {
    // points a hair inside and outside each tube wall and ball rim
    let d = star_domain(0.04);
    let g = d.graph().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for e in g.edges() {
        let a = g.position(e.lower());
        let b = g.position(e.upper());
        let dir = (b - a) * (1.0 / e.length);
        let normal = Vec3::planar(-dir.y, dir.x);
        let w = d.half_width(e.id);
        for _ in 0..500 {
            let s = d.radius(e.lower())
                + 0.05
                + rng.random::<f64>() * (e.length - d.radius(e.lower()) - d.radius(e.upper()) - 0.1);
            let side = if rng.random::<bool>() { 1.0 } else { -1.0 };
            assert!(d.contains(a + dir * s + normal * (side * w * (1.0 - 1e-9))));
            assert!(!d.contains(a + dir * s + normal * (side * w * (1.0 + 1e-6))));
        }
    }
    let j = VertexId(1);
    let r = d.radius(j);
    for i in 0..360 {
        let t = (i as f64).to_radians();
        let u = Vec3::planar(t.cos(), t.sin());
        assert!(d.contains(u * (r * (1.0 - 1e-9))));
        assert_eq!(d.contains(u * (r * (1.0 + 1e-6))), brute_contains(&d, u * (r * (1.0 + 1e-6))));
    }
}

#[test]
fn reflect_data_points_at_the_boundary() {
    let d = star_domain(0.04);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0;
    while checked < 2000 {
        let z = Vec3::planar(-1.5 + 3.2 * rng.random::<f64>(), -2.4 + 3.8 * rng.random::<f64>());
        if !d.contains(z) && brute_nearest_distance(d.graph(), z) > 0.3 {
            continue;
        }
        let b = d.boundary_reflect_data(z);
        assert!((b.normal.norm() - 1.0).abs() < 1e-9);
        // a small step along the inward normal lands inside, against it outside
        assert!(d.contains(b.point + b.normal * 1e-6), "{z:?} -> {b:?}");
        assert!(!d.contains(b.point - b.normal * 1e-6), "{z:?} -> {b:?}");
        checked += 1;
    }
}

#[test]
fn nearest_projection_matches_dense_sampling() {
    let d = star_domain(0.04);
    let g = d.graph().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..300 {
        let z = Vec3::planar(-1.5 + 3.2 * rng.random::<f64>(), -2.4 + 3.8 * rng.random::<f64>());
        let p = d.nearest_projection(z);
        let got = z.distance(g.embed(&p));
        let brute = brute_nearest_distance(&g, z);
        assert!(got <= brute + 1e-12 && got >= brute - 2e-3, "{got} vs {brute}");
    }
}

#[test]
fn continuous_projection_is_identity_outside_the_collars() {
    let d = star_domain(0.02);
    let g = d.graph().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for e in g.edges() {
        let lo = d.radius(e.lower()) + 2.0 * d.eps();
        let hi = e.length - d.radius(e.upper()) - 2.0 * d.eps();
        for _ in 0..200 {
            let s = lo + rng.random::<f64>() * (hi - lo);
            let x = GraphPoint::OnEdge { edge: e.id, arclength: s };
            let z = d.fiber_point(&x, &[(2.0 * rng.random::<f64>() - 1.0) * d.half_width(e.id) * 0.99, 0.0]);
            match d.continuous_projection(z).unwrap() {
                GraphPoint::OnEdge { edge, arclength } => {
                    assert_eq!(edge, e.id);
                    assert!((arclength - s).abs() < 1e-9);
                }
                other => panic!("{other:?}"),
            }
        }
    }
    // deep inside a ball everything collapses onto the vertex
    for _ in 0..200 {
        let rho = (d.radius(VertexId(1)) - 2.0 * d.eps()) * rng.random::<f64>();
        let t = std::f64::consts::TAU * rng.random::<f64>();
        assert_eq!(
            d.continuous_projection(Vec3::planar(rho * t.cos(), rho * t.sin())).unwrap(),
            GraphPoint::Vertex(VertexId(1))
        );
    }
}

#[test]
fn local_coordinates_reconstruct_the_point() {
    let d = star_domain(0.04);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut n = 0;
    while n < 1000 {
        let z = Vec3::planar(-1.5 + 3.2 * rng.random::<f64>(), -2.4 + 3.8 * rng.random::<f64>());
        if !d.contains(z) {
            continue;
        }
        if let Ok(loc) = d.local_coordinates(z) {
            assert!(loc.reconstruct(&d).distance(z) < 1e-10);
            n += 1;
        }
    }
}

#[test]
fn three_dimensional_domain() {
    let g = MetricGraph::new(
        3,
        vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 1.0, 1.0), Vec3::new(-1.0, 1.0, -1.0)],
        vec![narrow_tube::graph::EdgeSpec::new(1, 2, 1.0), narrow_tube::graph::EdgeSpec::new(1, 3, 0.5)],
    )
    .unwrap();
    let d = TubeDomain::build(g, ScalingLaw::uniform(3, 1.0, 0.5, 3).unwrap(), 0.01).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100_000 {
        let z = Vec3::new(
            -1.2 + 2.4 * rng.random::<f64>(),
            -0.2 + 1.4 * rng.random::<f64>(),
            -1.2 + 2.4 * rng.random::<f64>(),
        );
        assert_eq!(d.contains(z), brute_contains(&d, z));
    }
}
