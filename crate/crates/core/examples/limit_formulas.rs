//! The closed-form side: exit law and time scale at a vertex, the ladder of
//! time scales, the absorbing chain of an intermediate scale and the law of
//! the continuous-time chain of the first critical scale.
//!
//! cargo run --example limit_formulas

use narrow_tube::geometry::{ScalingLaw, SectionFamily};
use narrow_tube::graph::{shapes, EdgeId, GraphPoint, VertexId};
use narrow_tube::limits::{
    absorption_distribution, alpha_at, ctmc_build, ctmc_law_at, exit_edge_probability, intermediate_chain, kappa,
    mean_exit_scale, mu_extended, timescale_ladder,
};

fn main() {
    let star = shapes::star(&[(1.5, 1.0), (1.5, 2.0), (2.5, 1.0)]);
    let levels = [(EdgeId(1), 1.0), (EdgeId(2), 1.0), (EdgeId(3), 2.0)];
    let p = exit_edge_probability(&star, VertexId(1), &levels).unwrap();
    println!("exit law at the star centre: {p:?}");
    for eps in [0.04_f64, 0.02, 0.01] {
        let r = eps.powf(0.4);
        println!(
            "eps {eps}: alpha {:.4}, mean exit scale {:.4}",
            alpha_at(&star, VertexId(1), r, eps),
            mean_exit_scale(&star, VertexId(1), &levels, r, eps).unwrap()
        );
    }

    // path O1 - O2 - O3 with a small middle ball
    let path = shapes::path(&[1.0, 2.0], &[1.0, 1.0]);
    let scaling = ScalingLaw::new(vec![1.0; 3], vec![0.3, 0.45, 0.3], 2).unwrap();
    let ladder = timescale_ladder(&scaling, 2);
    for i in 1..=ladder.len() {
        let g = ladder.group(i);
        println!("T^{i}: beta {} members {:?}, at eps 0.01: {:.4}", g.beta, g.members, ladder.timescale(i, 0.01));
    }
    let chain = intermediate_chain(&path, &scaling, 1).unwrap();
    let mu = absorption_distribution(&chain).unwrap();
    println!("mu(O2, .) = {:?}", mu.row(VertexId(2)));
    let x = GraphPoint::OnEdge { edge: EdgeId(2), arclength: 0.5 };
    println!("mu(x, .) for x a quarter along the long edge: {:?}", mu_extended(&mu, &path, &x));

    // dumbbell: the small ball empties at rate kappa
    let dumbbell = shapes::dumbbell(2.0, 1.0);
    let scaling = ScalingLaw::new(vec![1.0; 2], vec![0.45, 0.3], 2).unwrap();
    let family = SectionFamily::uniform(&dumbbell, VertexId(1), 1.72).unwrap();
    let ctmc = ctmc_build(&dumbbell, &scaling, &family).unwrap();
    let k = kappa(&dumbbell, VertexId(1), &family.levels).unwrap();
    for s in [0.5, 1.0, 2.0] {
        let law = ctmc_law_at(&ctmc, VertexId(1), s);
        println!("s {s}: law {law:?}, exp(-kappa s) = {:.6}", (-k * s).exp());
    }
}
