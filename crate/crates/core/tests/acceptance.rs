//! Acceptance suite: one line per criterion AC-1 .. AC-11.
//!
//! Runs the full experiments (several minutes on one core). The process exits
//! 0 even when criteria fail so that the workspace test run stays usable; set
//! `ACCEPTANCE_STRICT=1` to turn any failure into a nonzero exit. Pass
//! criterion ids (`-- AC-6 AC-10`) to run a subset; criteria computed from a
//! shared run come along together (AC-1/2/11, AC-3/4/5).

mod common;

use std::time::Instant;

use narrow_tube::geometry::{collar_map, ScalingLaw, SectionFamily, TubeDomain};
use narrow_tube::graph::{shapes, EdgeId, GraphPoint, VertexId};
use narrow_tube::harness::{self, ctmc_compare_rows, prepare, resolve_workers, run_exit_stats, ExitStatsEps};
use narrow_tube::limits::{
    absorption_distribution, ctmc_build, ctmc_law_at, exit_edge_probability, hitting_weights, intermediate_chain,
    kappa, mu_extended, timescale_ladder, AbsorbingChain,
};
use narrow_tube::predictor::{
    fiber_sample, intermediate_time, localization_run, mc_probes, predict_intermediate, Observable, Probe,
};
use narrow_tube::sde::{trajectory_rng, Start};
use narrow_tube::stats::{chi_square_edge_time, conditional_mean_exit_time};
use narrow_tube::vec3::Vec3;
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

const STAR_EXIT: &str = include_str!("../../../configs/star_exit.toml");
const STAR_EXPONENTIAL: &str = include_str!("../../../configs/star_exponential.toml");
const PATH_METASTABLE: &str = include_str!("../../../configs/path_metastable.toml");
const PATH_PDE: &str = include_str!("../../../configs/path_pde.toml");
const DUMBBELL_CTMC: &str = include_str!("../../../configs/dumbbell_ctmc.toml");
const DUMBBELL_LOCALIZATION: &str = include_str!("../../../configs/dumbbell_localization.toml");

struct Outcome {
    id: &'static str,
    pass: bool,
    detail: String,
}

struct Suite {
    outcomes: Vec<Outcome>,
    workers: usize,
}

impl Suite {
    fn record(&mut self, id: &'static str, pass: bool, detail: String, started: Instant) {
        println!(
            "{id:<6} {}  {detail}  ({:.1} s)",
            if pass { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64()
        );
        self.outcomes.push(Outcome { id, pass, detail });
    }

    fn error(&mut self, id: &'static str, e: impl std::fmt::Display, started: Instant) {
        self.record(id, false, format!("error: {e}"), started);
    }
}

fn by_eps(per: &[ExitStatsEps], eps: f64) -> &ExitStatsEps {
    per.iter().find(|r| r.eps == eps).expect("eps in config")
}

/// Chi-square test that two multinomial samples share one law; rows are categories.
fn homogeneity_p(counts: &[[f64; 2]]) -> f64 {
    let cols = [counts.iter().map(|c| c[0]).sum::<f64>(), counts.iter().map(|c| c[1]).sum::<f64>()];
    let total = cols[0] + cols[1];
    let mut stat = 0.0;
    for row in counts {
        let rs = row[0] + row[1];
        for (o, col) in row.iter().zip(cols) {
            let e = rs * col / total;
            if e > 0.0 {
                stat += (o - e) * (o - e) / e;
            }
        }
    }
    ChiSquared::new((counts.len() - 1) as f64).unwrap().sf(stat)
}

fn ac1_ac2_ac11(suite: &mut Suite) {
    let started = Instant::now();
    let p = match prepare(STAR_EXIT) {
        Ok(p) => p,
        Err(e) => {
            suite.error("AC-1", &e, started);
            suite.error("AC-2", &e, started);
            suite.error("AC-11", &e, started);
            return;
        }
    };
    let seed = p.config.seed;
    let (per, out) = match run_exit_stats(&p, seed, 1) {
        Ok(r) => r,
        Err(e) => {
            suite.error("AC-1", &e, started);
            suite.error("AC-2", &e, started);
            suite.error("AC-11", &e, started);
            return;
        }
    };

    let r = by_eps(&per, 0.02);
    let target = [2.0 / 7.0, 4.0 / 7.0, 1.0 / 7.0];
    let formula_ok = r.limit_p.iter().zip(target).all(|(a, b)| (a - b).abs() < 1e-12);
    let covered = r.frequencies.iter().zip(target).all(|(f, t)| f.covers(t));
    let freqs: Vec<String> = r
        .frequencies
        .iter()
        .zip(target)
        .map(|(f, t)| format!("{}: {:.4} [{:.4}, {:.4}] vs {:.4}", f.edge, f.frequency, f.lo, f.hi, t))
        .collect();
    // same ensemble size started uniformly over the restart sections
    let random_text = STAR_EXIT
        .replace("start = \"collar\"", "start = \"random-collar\"")
        .replace("eps = [0.04, 0.02]", "eps = [0.02]");
    let random = prepare(&random_text).and_then(|q| run_exit_stats(&q, seed, suite.workers)).map(|(per, _)| per);
    let comparison = match random {
        Ok(per) => {
            let q = by_eps(&per, 0.02);
            let counts: Vec<[f64; 2]> =
                r.frequencies.iter().zip(&q.frequencies).map(|(a, b)| [a.count as f64, b.count as f64]).collect();
            let alt: Vec<String> = q.frequencies.iter().map(|f| format!("{:.4}", f.frequency)).collect();
            format!("; random-collar start [{}], agreement p = {:.2e}", alt.join(", "), homogeneity_p(&counts))
        }
        Err(e) => format!("; random-collar start failed: {e}"),
    };
    suite.record(
        "AC-1",
        formula_ok && covered && r.ensemble.uncensored_count() == 5000,
        format!(
            "eps 0.02, N {} (censored {}): {}{comparison}",
            r.ensemble.uncensored_count(),
            r.ensemble.censored_count(),
            freqs.join("; ")
        ),
        started,
    );

    let started = Instant::now();
    let coarse = by_eps(&per, 0.04);
    let fine = by_eps(&per, 0.02);
    let (rc, rf) = (coarse.ratio(), fine.ratio());
    suite.record(
        "AC-2",
        (0.75..=1.25).contains(&rc) && (rf - 1.0).abs() < (rc - 1.0).abs(),
        format!(
            "ratio mean/scale: eps 0.04 -> {rc:.4} ({:.4} +- {:.4} / {:.4}), eps 0.02 -> {rf:.4} ({:.4} +- {:.4} / {:.4}); need [0.75, 1.25] then closer to 1",
            coarse.mean.0, coarse.mean.1, coarse.scale, fine.mean.0, fine.mean.1, fine.scale
        ),
        started,
    );

    let started = Instant::now();
    let body = out.csv.to_csv(&p.hash);
    let mut same = true;
    let mut notes = vec!["1".to_string()];
    for w in [4usize, 8] {
        match run_exit_stats(&p, seed, w) {
            Ok((_, o)) => {
                let eq = o.csv.to_csv(&p.hash) == body;
                same &= eq;
                notes.push(format!("{w}{}", if eq { "" } else { " (differs)" }));
            }
            Err(e) => {
                suite.error("AC-11", e, started);
                return;
            }
        }
    }
    suite.record(
        "AC-11",
        same,
        format!("exit-stats CSV bodies ({} bytes) identical across workers {}", body.len(), notes.join(", ")),
        started,
    );
}

fn ac3_ac4_ac5(suite: &mut Suite) {
    let started = Instant::now();
    let result = prepare(STAR_EXPONENTIAL).and_then(|p| {
        let seed = p.config.seed;
        run_exit_stats(&p, seed, suite.workers).map(|r| r.0)
    });
    let per = match result {
        Ok(per) => per,
        Err(e) => {
            suite.error("AC-3", &e, started);
            suite.error("AC-4", &e, started);
            suite.error("AC-5", &e, started);
            return;
        }
    };
    let fine = by_eps(&per, 0.01);
    let coarse = by_eps(&per, 0.04);
    let d_fine = fine.ks.as_ref().map_or(f64::NAN, |t| t.value);
    let d_coarse = coarse.ks.as_ref().map_or(f64::NAN, |t| t.value);
    suite.record(
        "AC-3",
        fine.ensemble.uncensored_count() >= 2000 && d_fine < 0.06 && d_fine < d_coarse,
        format!(
            "KS D vs Exp(scale): eps 0.01 -> {d_fine:.4} (N {}, scale {:.4}), eps 0.04 -> {d_coarse:.4}; need < 0.06 and decreasing",
            fine.ensemble.uncensored_count(),
            fine.scale
        ),
        started,
    );

    let started = Instant::now();
    let uncond = fine.mean;
    let mut cond = Vec::new();
    let mut ok = true;
    for &(k, _) in &fine.ensemble.summary.levels {
        match conditional_mean_exit_time(&fine.ensemble, k) {
            Ok(m) => cond.push((k, m)),
            Err(e) => {
                ok = false;
                cond.push((k, (f64::NAN, f64::NAN)));
                eprintln!("AC-4: {k}: {e}");
            }
        }
    }
    let mut worst = 0.0f64;
    for (i, &(_, a)) in cond.iter().enumerate() {
        let z = (a.0 - uncond.0).abs() / (a.1 * a.1 + uncond.1 * uncond.1).sqrt();
        worst = worst.max(z);
        for &(_, b) in &cond[i + 1..] {
            worst = worst.max((a.0 - b.0).abs() / (a.1 * a.1 + b.1 * b.1).sqrt());
        }
    }
    let parts: Vec<String> = cond.iter().map(|(k, m)| format!("{k}: {:.4} +- {:.4}", m.0, m.1)).collect();
    suite.record(
        "AC-4",
        ok && worst <= 3.0,
        format!(
            "eps 0.01 conditional means {} vs overall {:.4} +- {:.4}; largest gap {worst:.2} pooled SE (need <= 3)",
            parts.join(", "),
            uncond.0,
            uncond.1
        ),
        started,
    );

    let started = Instant::now();
    let p_real = fine.independence.as_ref().map_or(f64::NAN, |t| t.value);
    let coupled: Vec<(EdgeId, f64)> = fine
        .ensemble
        .uncensored()
        .map(|r| {
            let k = r.exit_edge.expect("uncensored");
            (k, if k == EdgeId(1) { 2.0 * r.exit_time } else { r.exit_time })
        })
        .collect();
    let p_coupled = chi_square_edge_time(&coupled).map_or(f64::NAN, |c| c.p_value);
    suite.record(
        "AC-5",
        p_real > 0.01 && p_coupled < 0.001,
        format!("chi-square p: eps 0.01 -> {p_real:.4} (need > 0.01); edge-1 times doubled -> {p_coupled:.3e} (need < 0.001)"),
        started,
    );
}

/// Absorption law from `from` by direct simulation of the chain.
fn simulate_chain<R: Rng>(chain: &AbsorbingChain, from: usize, walks: usize, rng: &mut R) -> Vec<f64> {
    let n = chain.len();
    let mut hits = vec![0usize; n];
    for _ in 0..walks {
        let mut s = from;
        while !chain.absorbing[s] {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut next = n - 1;
            for (j, &p) in chain.p[s].iter().enumerate() {
                acc += p;
                if u < acc {
                    next = j;
                    break;
                }
            }
            s = next;
        }
        hits[s] += 1;
    }
    hits.iter().map(|&h| h as f64 / walks as f64).collect()
}

fn ac6(suite: &mut Suite) {
    let started = Instant::now();
    let run = || -> Result<(bool, String), Box<dyn std::error::Error>> {
        let p = prepare(PATH_METASTABLE)?;
        let d = &p.domains[0];
        let g = &p.graph;
        let o2 = GraphPoint::Vertex(VertexId(2));
        let bump = Observable::Bump(VertexId(1));
        let mu = predict_intermediate(g, &p.scaling, 1, &o2, &bump)?;
        let chain = intermediate_chain(g, &p.scaling, 1)?;
        let walks = 200_000;
        let sim = simulate_chain(&chain, 1, walks, &mut trajectory_rng(p.config.seed, 1 << 40))[0];
        let sim_se = (mu * (1.0 - mu) / walks as f64).sqrt();
        let oracle_ok = (mu - 2.0 / 3.0).abs() < 1e-12 && (sim - mu).abs() < 3.0 * sim_se;

        let t = intermediate_time(&p.scaling, 2, 1, d.eps())?;
        let cfg = p.config.sim.to_config(p.config.seed)?;
        let z = fiber_sample(d, &o2, 0, 0)[0];
        let n = p.config.metastable.as_ref().expect("section").n;
        let est = mc_probes(d, Start::Point(z), &[t], &[Probe::Observable(bump)], n, &cfg, suite.workers)?[0][0];
        let pass = oracle_ok && est.valid() && (est.mean - mu).abs() <= 3.0 * est.se;
        Ok((
            pass,
            format!(
                "eps 0.01, t = sqrt(T1 T2) = {t:.4}: MC {:.4} +- {:.4} (N {}, censored {}) vs mu(O2,O1) {mu:.6}; chain walks {sim:.4} +- {sim_se:.4}; need within 3 SE",
                est.mean, est.se, est.n, est.censored
            ),
        ))
    };
    match run() {
        Ok((pass, detail)) => suite.record("AC-6", pass, detail, started),
        Err(e) => suite.error("AC-6", e, started),
    }
}

fn ac7(suite: &mut Suite) {
    let started = Instant::now();
    let p = match prepare(DUMBBELL_CTMC) {
        Ok(p) => p,
        Err(e) => return suite.error("AC-7", e, started),
    };
    let rows = match ctmc_compare_rows(&p, p.config.seed, suite.workers) {
        Ok(r) => r,
        Err(e) => return suite.error("AC-7", e, started),
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for r in rows.iter().filter(|r| matches!(r.probe, Probe::Collar(_))) {
        let exact = r.analytic.expect("dumbbell from O1");
        let ok = r.report.valid && (r.estimate.mean - exact).abs() <= (3.0 * r.estimate.se).max(0.05);
        pass &= ok && (r.limit - exact).abs() < 1e-10;
        let bump = rows
            .iter()
            .find(|b| b.s == r.s && matches!(b.probe, Probe::Observable(_)))
            .map_or(f64::NAN, |b| b.estimate.mean);
        parts.push(format!(
            "s {}: {:.4} +- {:.4} vs {:.4}{} [bump {:.4}]",
            r.s,
            r.estimate.mean,
            r.estimate.se,
            exact,
            if ok { "" } else { " miss" },
            bump
        ));
    }
    let d = &p.domains[0];
    let fam = SectionFamily::exit_levels(d, VertexId(1)).expect("levels");
    let k = kappa(&p.graph, VertexId(1), &fam.levels).unwrap_or(f64::NAN);
    suite.record(
        "AC-7",
        pass,
        format!(
            "eps 0.01, L_eps {:.4}, kappa {k:.4}, P(collar of O1) vs exp(-kappa s): {}",
            fam.levels[0].1,
            parts.join("; ")
        ),
        started,
    );
}

fn ac8(suite: &mut Suite) {
    let started = Instant::now();
    let run = || -> Result<(bool, String), Box<dyn std::error::Error>> {
        let p = prepare(DUMBBELL_LOCALIZATION)?;
        let spec = p.config.localization.as_ref().expect("section");
        let mut per = Vec::new();
        for (i, d) in p.domains.iter().enumerate() {
            let fam = SectionFamily::exit_levels(d, VertexId(1))?;
            let delta = spec.delta_fraction * fam.levels[0].1;
            let cfg = p.config.sim.to_config(harness::sub_seed(p.config.seed, "localization", i as u64))?;
            per.push((d.eps(), delta, localization_run(d, VertexId(1), &spec.s, delta, spec.n, &cfg, suite.workers)?));
        }
        let fine = per.iter().find(|r| r.0 == 0.01).expect("eps 0.01");
        let coarse = per.iter().find(|r| r.0 == 0.04).expect("eps 0.04");
        let mut pass = true;
        let mut parts = Vec::new();
        for (f, c) in fine.2.iter().zip(&coarse.2) {
            pass &= f.far < 0.05 && f.far < c.far;
            parts.push(format!("s {}: {:.4} (eps 0.04: {:.4})", f.s, f.far, c.far));
        }
        Ok((
            pass,
            format!(
                "P(d(Pi Z, O1) >= delta, not escaped) at eps 0.01 (delta {:.4}): {}; need < 0.05 and below eps 0.04",
                fine.1,
                parts.join("; ")
            ),
        ))
    };
    match run() {
        Ok((pass, detail)) => suite.record("AC-8", pass, detail, started),
        Err(e) => suite.error("AC-8", e, started),
    }
}

fn ac9(suite: &mut Suite) {
    let started = Instant::now();
    let run = || -> Result<(bool, String), Box<dyn std::error::Error>> {
        let p = prepare(PATH_PDE)?;
        let d = &p.domains[0];
        let g = &p.graph;
        let o2 = GraphPoint::Vertex(VertexId(2));
        let bump = Observable::Bump(VertexId(1));
        let c = 2.5;
        let mu = predict_intermediate(g, &p.scaling, 1, &o2, &bump)?;
        let n = p.config.pde.as_ref().expect("section").n;
        let t_mid = intermediate_time(&p.scaling, 2, 1, d.eps())?;
        let times = [0.05, t_mid];
        let z = fiber_sample(d, &o2, 0, 0)[0];
        let cfg = p.config.sim.to_config(p.config.seed)?;
        let probes = [Probe::Observable(bump), Probe::Observable(Observable::Constant(c))];
        let est = mc_probes(d, Start::Point(z), &times, &probes, n, &cfg, suite.workers)?;
        let conserved = est.iter().all(|row| (row[1].mean - c).abs() <= row[1].se.max(1e-12));
        let e = est[1][0];
        let pass = conserved && e.valid() && (e.mean - mu).abs() <= 3.0 * e.se;
        Ok((
            pass,
            format!(
                "rho_eps(t = {t_mid:.4}, O2) for phi = bump(O1): {:.4} +- {:.4} vs mu(O2,O1) {mu:.4}; constant {c} at t = {:?}: {:?}",
                e.mean,
                e.se,
                times,
                est.iter().map(|r| r[1].mean).collect::<Vec<_>>()
            ),
        ))
    };
    match run() {
        Ok((pass, detail)) => suite.record("AC-9", pass, detail, started),
        Err(e) => suite.error("AC-9", e, started),
    }
}

fn row_sum_error(row: &[f64]) -> f64 {
    (row.iter().sum::<f64>() - 1.0).abs()
}

fn ac10(suite: &mut Suite) {
    let started = Instant::now();
    let mut rng = trajectory_rng(10, 0);

    // (a) probability rows
    let mut worst_a = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(3..=8);
        let g = common::random_graph(&mut rng, n);
        let s = common::random_scaling(&mut rng, n);
        for j in g.vertex_ids() {
            let levels: Vec<(EdgeId, f64)> = g
                .incident(j)
                .iter()
                .map(|&k| (k, g.edges()[k.index()].length * rng.random::<f64>().max(0.05)))
                .collect();
            let p: Vec<f64> = exit_edge_probability(&g, j, &levels).expect("row").into_iter().map(|x| x.1).collect();
            worst_a = worst_a.max(row_sum_error(&p));
        }
        let ladder = timescale_ladder(&s, 2);
        for i in 1..ladder.len() {
            let chain = intermediate_chain(&g, &s, i).expect("chain");
            for row in &chain.p {
                worst_a = worst_a.max(row_sum_error(row));
            }
            let mu = absorption_distribution(&chain).expect("absorption");
            for row in &mu.mu {
                worst_a = worst_a.max(row_sum_error(row));
            }
            let k = EdgeId(rng.random_range(1..=g.edge_count()));
            let x = GraphPoint::OnEdge { edge: k, arclength: g.edges()[k.index()].length * rng.random::<f64>() };
            worst_a = worst_a.max(row_sum_error(&mu_extended(&mu, &g, &x)));
            worst_a = worst_a.max(row_sum_error(&hitting_weights(&g, &x).iter().map(|w| w.1).collect::<Vec<_>>()));
        }
        if ladder.group(1).members.len() == 1 {
            let j1 = ladder.group(1).members[0];
            let fam = SectionFamily::new(
                &g,
                j1,
                g.incident(j1).iter().map(|&k| (k, 0.5 * g.edges()[k.index()].length)).collect(),
            )
            .expect("levels");
            let ctmc = ctmc_build(&g, &s, &fam).expect("ctmc");
            for v in g.vertex_ids() {
                worst_a = worst_a.max(row_sum_error(&ctmc_law_at(&ctmc, v, 3.0 * rng.random::<f64>())));
            }
        }
    }
    let ok_a = worst_a < 1e-12;

    // (b) absorption against chain simulation
    let walks = 1_000_000;
    let mut worst_b = 0.0f64;
    for _ in 0..20 {
        let n = rng.random_range(3..=6);
        let g = common::random_graph(&mut rng, n);
        let s = common::random_scaling(&mut rng, n);
        let chain = intermediate_chain(&g, &s, 1).expect("chain");
        let mu = absorption_distribution(&chain).expect("absorption");
        let from = (0..n).find(|&i| !chain.absorbing[i]).expect("transient state");
        let sim = simulate_chain(&chain, from, walks, &mut rng);
        for (m, x) in mu.mu[from].iter().zip(&sim) {
            let se = (m * (1.0 - m) / walks as f64).sqrt().max(1e-9);
            worst_b = worst_b.max((m - x).abs() / se);
        }
    }
    let ok_b = worst_b <= 3.0;

    // (c) closed forms
    let mut worst_c = 0.0f64;
    let g = shapes::dumbbell(2.0, 1.0);
    let s = ScalingLaw::new(vec![1.0; 2], vec![0.45, 0.3], 2).expect("scaling");
    let fam = SectionFamily::uniform(&g, VertexId(1), 1.7).expect("levels");
    let ctmc = ctmc_build(&g, &s, &fam).expect("ctmc");
    let k = kappa(&g, VertexId(1), &fam.levels).expect("kappa");
    for t in [0.0, 0.3, 1.0, 2.0, 5.0, 20.0] {
        let law = ctmc_law_at(&ctmc, VertexId(1), t);
        worst_c = worst_c.max((law[0] - (-k * t).exp()).abs()).max((law[1] - (1.0 - (-k * t).exp())).abs());
    }
    let star = shapes::star(&[(1.5, 1.0), (1.5, 2.0), (2.5, 1.0)]);
    let s = ScalingLaw::new(vec![1.0; 4], vec![0.45, 0.3, 0.3, 0.3], 2).expect("scaling");
    let levels = vec![(EdgeId(1), 1.0), (EdgeId(2), 1.0), (EdgeId(3), 2.0)];
    let fam = SectionFamily::new(&star, VertexId(1), levels.clone()).expect("levels");
    let ctmc = ctmc_build(&star, &s, &fam).expect("ctmc");
    let k = kappa(&star, VertexId(1), &levels).expect("kappa");
    let p = exit_edge_probability(&star, VertexId(1), &levels).expect("p");
    for t in [0.0, 0.5, 1.5, 4.0] {
        let law = ctmc_law_at(&ctmc, VertexId(1), t);
        let e = (-k * t).exp();
        worst_c = worst_c.max((law[0] - e).abs());
        for (leaf, (_, pk)) in p.iter().enumerate() {
            worst_c = worst_c.max((law[leaf + 1] - pk * (1.0 - e)).abs());
        }
    }
    let ok_c = worst_c < 1e-10;

    // (d) continuity of the projection across both collar levels
    let mut worst_d = 0.0f64;
    for _ in 0..50 {
        let eps = 0.005 + 0.05 * rng.random::<f64>();
        let r = 5.0 * eps + rng.random::<f64>();
        for a in [r - 2.0 * eps, r + 2.0 * eps] {
            let h = 1e-12;
            worst_d = worst_d.max((collar_map(r, eps, a - h) - collar_map(r, eps, a + h)).abs());
        }
        worst_d = worst_d.max(collar_map(r, eps, r - 2.0 * eps).abs());
        worst_d = worst_d.max((collar_map(r, eps, r + 2.0 * eps) - (r + 2.0 * eps)).abs());
    }
    // and through a domain, along the axis of a dumbbell edge
    let g = shapes::dumbbell(2.0, 1.0);
    let d =
        TubeDomain::build(g, ScalingLaw::new(vec![1.0; 2], vec![0.4, 0.4], 2).expect("scaling"), 0.02).expect("domain");
    let r = d.radius(VertexId(1));
    for a in [r - 2.0 * d.eps(), r + 2.0 * d.eps()] {
        let h = 1e-12;
        let lo = d.continuous_projection(Vec3::planar(a - h, 0.0)).expect("inside");
        let hi = d.continuous_projection(Vec3::planar(a + h, 0.0)).expect("inside");
        worst_d = worst_d.max(d.graph().distance(&lo, &hi).expect("points"));
    }
    let ok_d = worst_d < 1e-10;

    suite.record(
        "AC-10",
        ok_a && ok_b && ok_c && ok_d,
        format!(
            "(a) worst row-sum error {worst_a:.1e}; (b) worst |mu - walks| {worst_b:.2} sigma over 20 graphs; (c) worst closed-form error {worst_c:.1e}; (d) worst jump {worst_d:.1e}"
        ),
        started,
    );
}

fn main() {
    // cargo passes harness flags such as --nocapture and any test filter.
    // Criterion ids (AC-6) select criteria; another filter that does not
    // mention "acceptance" skips the suite.
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with("--")).collect();
    let (ids, other): (Vec<String>, Vec<String>) = args.into_iter().partition(|a| a.starts_with("AC-"));
    if !other.is_empty() && !other.iter().any(|a| "acceptance".contains(a.as_str())) {
        return;
    }
    let wanted = |group: &[&str]| ids.is_empty() || group.iter().any(|g| ids.iter().any(|a| a == g));
    let workers = resolve_workers(None, None);
    let mut suite = Suite { outcomes: Vec::new(), workers };
    let started = Instant::now();
    println!(
        "acceptance suite (workers: {})",
        if workers == 0 { "all cores".to_string() } else { workers.to_string() }
    );
    if wanted(&["AC-10"]) {
        ac10(&mut suite);
    }
    if wanted(&["AC-1", "AC-2", "AC-11"]) {
        ac1_ac2_ac11(&mut suite);
    }
    if wanted(&["AC-3", "AC-4", "AC-5"]) {
        ac3_ac4_ac5(&mut suite);
    }
    if wanted(&["AC-6"]) {
        ac6(&mut suite);
    }
    if wanted(&["AC-7"]) {
        ac7(&mut suite);
    }
    if wanted(&["AC-8"]) {
        ac8(&mut suite);
    }
    if wanted(&["AC-9"]) {
        ac9(&mut suite);
    }

    let order = ["AC-1", "AC-2", "AC-3", "AC-4", "AC-5", "AC-6", "AC-7", "AC-8", "AC-9", "AC-10", "AC-11"];
    let passed = suite.outcomes.iter().filter(|o| o.pass).count();
    println!("\nsummary ({:.0} s):", started.elapsed().as_secs_f64());
    for id in order {
        if let Some(o) = suite.outcomes.iter().find(|o| o.id == id) {
            println!("{:<6} {}  {}", o.id, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        }
    }
    println!("{passed}/{} criteria pass", suite.outcomes.len());
    if passed < suite.outcomes.len() && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
