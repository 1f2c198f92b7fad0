//! Monte Carlo checks of the path engine against classical Brownian results.

use narrow_tube::geometry::{ScalingLaw, SectionFamily, TubeDomain};
use narrow_tube::graph::{shapes, EdgeId, EdgeSpec, GraphPoint, MetricGraph, VertexId};
use narrow_tube::sde::{
    default_delta, events_alternate, observe, position_at, run_cycles, run_ensemble, run_until_sections, SimConfig,
    Start,
};
use narrow_tube::vec3::Vec3;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

fn wide_ball(dim: usize) -> TubeDomain {
    let g = if dim == 2 {
        shapes::dumbbell(3.0, 1.0)
    } else {
        MetricGraph::new(3, vec![Vec3::ZERO, Vec3::new(3.0, 0.0, 0.0)], vec![EdgeSpec::new(1, 2, 1.0)]).unwrap()
    };
    TubeDomain::with_radii(g, vec![1.0, 0.3], 0.05).unwrap()
}

#[test]
fn mean_squared_displacement_is_2d_per_unit_time() {
    // well inside a unit ball the wall is five standard deviations away
    for dim in [2, 3] {
        let d = wide_ball(dim);
        let config = SimConfig::with_seed(11);
        let t = 0.02;
        let sq: Vec<f64> =
            run_ensemble(4000, 0, |i| position_at(&d, Start::Point(Vec3::ZERO), t, &config, i).unwrap().norm_sq());
        let (m, se) = mean_se(&sq);
        let expected = 2.0 * dim as f64 * t;
        assert!((m - expected).abs() < 4.0 * se, "d = {dim}: {m} +- {se} vs {expected}");
        assert!((m - expected).abs() < 0.05 * expected);
    }
}

#[test]
fn axial_exit_from_an_interval_in_a_tube() {
    // generator d^2/dx^2 along the axis: from the middle of (x - L, x + L) the
    // mean exit time is L^2 / 2, and the exit side is a fair coin
    let g = shapes::dumbbell(3.0, 1.0);
    let d = TubeDomain::with_radii(g.clone(), vec![0.3, 0.3], 0.05).unwrap();
    let config = SimConfig::with_seed(12);
    for (x0, lo, hi) in [(1.5, 1.0, 2.0), (1.2, 1.0, 2.0)] {
        let sections = [
            SectionFamily::new(&g, VertexId(1), vec![(EdgeId(1), hi)]).unwrap(),
            SectionFamily::new(&g, VertexId(2), vec![(EdgeId(1), 3.0 - lo)]).unwrap(),
        ];
        let start = d.fiber_point(&GraphPoint::OnEdge { edge: EdgeId(1), arclength: x0 }, &[0.02, 0.0]);
        let recs =
            run_ensemble(4000, 0, |i| run_until_sections(&d, Start::Point(start), &sections, &config, i).unwrap());
        let times: Vec<f64> = recs.iter().map(|r| r.exit_time).collect();
        let (m, se) = mean_se(&times);
        let expected = (x0 - lo) * (hi - x0) / 2.0;
        assert!((m - expected).abs() < 3.0 * se, "x0 {x0}: {m} +- {se} vs {expected}");
        let far = recs.iter().filter(|r| r.exit_vertex == Some(VertexId(1))).count() as f64 / recs.len() as f64;
        let p = (x0 - lo) / (hi - lo);
        let sd = (p * (1.0 - p) / recs.len() as f64).sqrt();
        assert!((far - p).abs() < 3.0 * sd, "x0 {x0}: P(far side) {far} vs {p}");
    }
}

#[test]
fn symmetric_junction_is_a_fair_coin() {
    // straight path through a ball with equal tubes and equal levels
    let g = shapes::path(&[1.0, 1.0], &[1.0, 1.0]);
    let d = TubeDomain::with_radii(g.clone(), vec![0.2, 0.1, 0.2], 0.02).unwrap();
    let config = SimConfig::with_seed(13);
    let levels = SectionFamily::uniform(&g, VertexId(2), 0.4).unwrap();
    let recs = run_ensemble(3000, 0, |i| {
        run_until_sections(&d, Start::Point(g.position(VertexId(2))), std::slice::from_ref(&levels), &config, i)
            .unwrap()
    });
    let got = recs.iter().filter(|r| r.exit_edge == Some(EdgeId(1))).count() as f64 / recs.len() as f64;
    let sd = (0.25 / recs.len() as f64).sqrt();
    assert!((got - 0.5).abs() < 3.0 * sd, "{got}");
}

#[test]
fn long_run_is_uniform_over_a_ball() {
    let g = shapes::dumbbell(3.0, 1.0);
    let r = 0.5;
    let d = TubeDomain::with_radii(g, vec![r, 0.3], 0.02).unwrap();
    let config = SimConfig::with_seed(14);
    let shells = 5;
    let pts = run_ensemble(3000, 0, |i| position_at(&d, Start::Point(Vec3::ZERO), 0.5, &config, i).unwrap());
    let mut counts = vec![0.0; shells];
    for z in pts.iter().filter(|z| z.norm() <= r) {
        // equal-area shells
        let k = ((z.norm() / r).powi(2) * shells as f64).floor() as usize;
        counts[k.min(shells - 1)] += 1.0;
    }
    let n: f64 = counts.iter().sum();
    assert!(n > 2800.0, "too many paths left the ball: {n}");
    let e = n / shells as f64;
    let chi2: f64 = counts.iter().map(|c| (c - e) * (c - e) / e).sum();
    let p = ChiSquared::new((shells - 1) as f64).unwrap().sf(chi2);
    assert!(p > 0.001, "counts {counts:?}, p = {p}");
}

#[test]
fn cycles_alternate_and_end_at_an_exit() {
    let g = shapes::star(&[(1.5, 1.0), (1.5, 2.0), (2.5, 1.0)]);
    let d = TubeDomain::build(g.clone(), ScalingLaw::uniform(4, 1.0, 0.4, 2).unwrap(), 0.04).unwrap();
    let levels = SectionFamily::exit_levels(&d, VertexId(1)).unwrap();
    let delta = default_delta(&d, &levels);
    let config = SimConfig::with_seed(15);
    for i in 0..50 {
        let (rec, events) = run_cycles(&d, Start::RandomCollar(VertexId(1)), delta, &levels, &config, i).unwrap();
        assert!(!rec.censored);
        assert!(events_alternate(&events));
        assert!(events.windows(2).all(|w| w[0].time <= w[1].time));
        let last = events.last().unwrap();
        assert_eq!(Some(last.edge), rec.exit_edge);
        assert!((last.time - rec.exit_time).abs() < 1e-12);
        // the exit lies at the exit level of its edge
        let (k, s) = d.section_coordinate(rec.exit_point, VertexId(1)).unwrap();
        assert_eq!(Some(k), rec.exit_edge);
        assert!((s - levels.level(k).unwrap()).abs() < 1e-9, "{s}");
    }
}

#[test]
fn results_do_not_depend_on_the_worker_count() {
    let g = shapes::star(&[(1.5, 1.0), (1.5, 2.0), (2.5, 1.0)]);
    let d = TubeDomain::build(g, ScalingLaw::uniform(4, 1.0, 0.4, 2).unwrap(), 0.04).unwrap();
    let config = SimConfig::with_seed(16);
    let run = |workers| {
        run_ensemble(64, workers, |i| {
            observe(&d, Start::RandomCollar(VertexId(1)), &[0.1, 0.3], None, &config, i).unwrap()
        })
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn zero_time_is_the_start() {
    let g = shapes::dumbbell(3.0, 1.0);
    let d = TubeDomain::with_radii(g, vec![0.5, 0.3], 0.05).unwrap();
    let z = Vec3::planar(0.1, -0.2);
    assert_eq!(position_at(&d, Start::Point(z), 0.0, &SimConfig::with_seed(1), 0).unwrap(), z);
}
