mod common;

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeSet, HashMap};
use std::hash::{Hash, Hasher};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use liouville_core::counterexamples::build_example2;
use liouville_core::model::{l1_evidence_general, model_green};
use liouville_core::subgraph::fixtures::{half_line, three_rays, two_half_lines};
use liouville_core::subgraph::{dirichlet_exit, dirichlet_green_subgraph, domination_check, exit_green_identity};
use liouville_core::{
    classify, curvature_dominance, heat_kernel, mean_exit, transplant_exit_check, Answer, BallSystem, Direction,
    FiniteGraph, GraphSpec, HeatMode, Label, LambdaSq, RadialModel, Sequence, SolverMode, SubgraphProblem, Verdict,
    VertexId,
};

use common::{eccentricity, random_graph};

fn graph_from(seed: u64, max_n: usize) -> FiniteGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(3..=max_n);
    let extra = rng.gen_range(0..=n);
    random_graph(&mut rng, n, extra)
}

/// Random graph whose root has eccentricity at least 2.
fn deep_graph(seed: u64, max_n: usize) -> FiniteGraph {
    (0..)
        .map(|i| graph_from(seed.wrapping_add(i * 0x9e37), max_n))
        .find(|g| eccentricity(g, VertexId(0)) >= 2)
        .unwrap()
}

fn sequence(kind: u8, a: f64) -> Sequence {
    match kind % 3 {
        0 => Sequence::Const(a),
        1 => Sequence::Power {
            coeff: 1.0,
            offset: 1.0,
            exponent: a,
            add: 0.0,
        },
        _ => Sequence::geometric(1.0 + a / 2.0),
    }
}

fn model_strategy() -> impl Strategy<Value = RadialModel> {
    (0u8..3, 0.5f64..3.0, 0u8..3, 0.5f64..4.0).prop_map(|(km, a, kb, b)| RadialModel::new(sequence(km, a), sequence(kb, b)))
}

fn sorted_vertices(g: &FiniteGraph) -> Vec<(Label, u64, bool)> {
    let mut v: Vec<_> = g.vertices().map(|x| (g.label(x), g.measure(x).to_bits(), g.is_frontier(x))).collect();
    v.sort();
    v
}

fn sorted_edges(g: &FiniteGraph) -> Vec<(Label, Label, u64)> {
    let mut e: Vec<_> = g
        .edges()
        .map(|(a, b, w)| {
            let (la, lb) = (g.label(a), g.label(b));
            (la.min(lb), la.max(lb), w.to_bits())
        })
        .collect();
    e.sort();
    e
}

fn spec_families() -> Vec<GraphSpec> {
    vec![
        half_line(),
        GraphSpec::Model(RadialModel::new(Sequence::Const(1.0), Sequence::shifted_power(2.0))),
        GraphSpec::Antitree(Sequence::shifted_power(2.0)),
        two_half_lines(),
        three_rays(),
        GraphSpec::conformal(GraphSpec::Antitree(Sequence::shifted_power(1.0)), LambdaSq::Const(2.0)),
        GraphSpec::Model(RadialModel::section4_tilde()),
    ]
}

fn hashed(label: &Label, seed: u64) -> u64 {
    let mut h = DefaultHasher::new();
    (label, seed).hash(&mut h);
    h.finish()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn weights_are_symmetric_and_spheres_partition(seed in any::<u64>()) {
        let g = graph_from(seed, 50);
        for (a, b, w) in g.edges() {
            prop_assert_eq!(g.weight(a, b), w);
            prop_assert_eq!(g.weight(b, a), w);
        }
        let dec = g.sphere_decompose(VertexId(0)).unwrap();
        let mut seen = BTreeSet::new();
        for r in 0..=dec.max_radius() {
            for &x in dec.sphere(r) {
                prop_assert!(seen.insert(x));
            }
        }
        prop_assert_eq!(seen.len(), g.len());
        prop_assert_eq!(dec.sphere_sizes().iter().sum::<usize>(), dec.ball(dec.max_radius()).len());
    }

    #[test]
    fn laplacian_matches_edge_sum(seed in any::<u64>()) {
        let g = graph_from(seed, 50);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let f: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let mut acc = vec![0.0; g.len()];
        let mut deg = vec![0.0; g.len()];
        for (a, b, w) in g.edges() {
            acc[a.index()] += w * f[b.index()];
            acc[b.index()] += w * f[a.index()];
            deg[a.index()] += w;
            deg[b.index()] += w;
        }
        for x in g.vertices() {
            let m = g.measure(x);
            let expect = deg[x.index()] / m * f[x.index()] - acc[x.index()] / m;
            let got = g.laplacian_apply(|y| Some(f[y.index()]), x).unwrap().value;
            prop_assert!((got - expect).abs() <= 1e-9 * (1.0 + expect.abs()), "{} vs {}", got, expect);
            prop_assert!((g.laplacian_at(&f, x) - got).abs() <= 1e-12 * (1.0 + got.abs()));
        }
    }

    #[test]
    fn antitree_curvatures_are_neighbour_sphere_sizes(p in 0u8..4, radius in 2usize..6) {
        let sizes = Sequence::Power { coeff: 1.0, offset: 1.0, exponent: p as f64, add: 0.0 };
        let g = GraphSpec::Antitree(sizes).materialize(radius).unwrap();
        let dec = g.sphere_decompose(VertexId(0)).unwrap();
        let counts = dec.sphere_sizes();
        for x in g.vertices().filter(|&x| !g.is_frontier(x)) {
            let r = dec.radius_of(x);
            let c = g.curvature(&dec, x).unwrap();
            prop_assert_eq!(c.k_plus, counts[r + 1] as f64);
            prop_assert_eq!(c.k_minus, if r == 0 { 0.0 } else { counts[r - 1] as f64 });
            let deg = g.degree(x).unwrap().value;
            prop_assert!((c.k_plus + c.k_minus - deg).abs() <= 1e-12 * deg);
        }
    }

    #[test]
    fn radial_compatibility(model in model_strategy()) {
        let t = model.tabulate(100).unwrap();
        for r in 1..=100 {
            let lhs = t.k_plus(r - 1) * t.sphere_measure[r - 1];
            let rhs = t.k_minus(r) * t.sphere_measure[r];
            prop_assert!((lhs - rhs).abs() <= 1e-12 * t.boundary[r - 1], "r = {}", r);
        }
    }

    #[test]
    fn green_is_symmetric_and_represents_exit(seed in any::<u64>()) {
        let g = deep_graph(seed, 40);
        let radius = (eccentricity(&g, VertexId(0)) - 1).min(6);
        let sys = BallSystem::new(&g, VertexId(0), radius, SolverMode::Auto).unwrap();
        let interior = sys.system.interior().to_vec();
        let rows: HashMap<VertexId, Vec<f64>> =
            interior.iter().map(|&x| (x, sys.green_values(x).unwrap())).collect();
        let e = sys.exit_values().unwrap();
        let ball = sys.ball.vertices();
        for &x in &interior {
            for &y in &interior {
                let (a, b) = (rows[&x][y.index()], rows[&y][x.index()]);
                prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "{} vs {}", a, b);
            }
            let sum: f64 = ball.iter().map(|y| rows[&x][y.index()] * g.measure(*y)).sum();
            prop_assert!((sum - e[x.index()]).abs() <= 1e-10 * e[x.index()].max(1.0));
        }
    }

    #[test]
    fn green_and_exit_grow_with_radius(seed in any::<u64>()) {
        let g = (0..).map(|i| graph_from(seed.wrapping_add(i), 50)).find(|g| eccentricity(g, VertexId(0)) >= 3).unwrap();
        let top = eccentricity(&g, VertexId(0)) - 1;
        let solve = |r: usize| {
            let sys = BallSystem::new(&g, VertexId(0), r, SolverMode::Auto).unwrap();
            (sys.green_values(VertexId(0)).unwrap(), sys.exit_values().unwrap())
        };
        let mut prev = solve(1);
        for r in 2..=top {
            let next = solve(r);
            let inner = g.sphere_decompose(VertexId(0)).unwrap().ball(r - 1);
            for &x in &inner {
                prop_assert!(prev.0[x.index()] <= next.0[x.index()] + 1e-10);
                prop_assert!(prev.1[x.index()] <= next.1[x.index()] + 1e-10);
            }
            prev = next;
        }
    }

    #[test]
    fn conformal_rescale_keeps_green_and_edges(seed in any::<u64>()) {
        let g = deep_graph(seed, 40);
        let radius = eccentricity(&g, VertexId(0)) - 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 9);
        let values: HashMap<Label, f64> = g.labels().iter().map(|l| (*l, rng.gen_range(1.0..=100.0))).collect();
        let base = GraphSpec::explicit(g.clone(), Label::named(0)).unwrap();
        let scaled = GraphSpec::conformal(base.clone(), LambdaSq::Table { values, default: 1.0 });
        let (a, b) = (base.materialize(radius).unwrap(), scaled.materialize(radius).unwrap());
        prop_assert_eq!(sorted_edges(&a), sorted_edges(&b));
        let ga = BallSystem::new(&a, VertexId(0), radius, SolverMode::Auto).unwrap().green(VertexId(0)).unwrap();
        let x0 = b.find(&Label::named(0)).unwrap();
        let gb = BallSystem::new(&b, x0, radius, SolverMode::Auto).unwrap().green(x0).unwrap();
        for (l, v) in ga.table.labels.iter().zip(&ga.table.values) {
            prop_assert!((gb.table.get(l).unwrap() - v).abs() <= 1e-9);
        }
    }

    #[test]
    fn restriction_commutes_with_materialization(family in 0usize..7, big in 3usize..=12, cut in 1usize..12) {
        let spec = &spec_families()[family];
        let small = cut.min(big - 1);
        let full = spec.materialize(big).unwrap();
        let root = full.find(&spec.root()).unwrap();
        let restricted = full.restrict_ball(root, small).unwrap();
        let direct = spec.materialize(small).unwrap();
        prop_assert_eq!(sorted_vertices(&restricted), sorted_vertices(&direct));
        prop_assert_eq!(sorted_edges(&restricted), sorted_edges(&direct));
    }

    #[test]
    fn subgraph_identity_domination_and_monotonicity(seed in any::<u64>(), radius in 2usize..6) {
        let p = SubgraphProblem::new(GraphSpec::Antitree(Sequence::shifted_power(1.0)), move |l: &Label| {
            *l == Label::grid(0, 0) || hashed(l, seed) % 4 != 0
        });
        let Ok(identity) = exit_green_identity(&p, radius) else {
            // every vertex of Ω_R touched the complement of W
            return Ok(());
        };
        prop_assert!(identity <= 1e-10);
        prop_assert!(domination_check(&p, radius).unwrap().min_slack >= -1e-10);
        let e = dirichlet_exit(&p, radius).unwrap();
        let e2 = dirichlet_exit(&p, radius + 1).unwrap();
        for (l, v) in e.table.labels.iter().zip(&e.table.values) {
            prop_assert!(*v <= e2.table.get(l).unwrap() + 1e-10);
        }
        if let Ok(g) = dirichlet_green_subgraph(&p, &Label::grid(0, 0), radius) {
            let g2 = dirichlet_green_subgraph(&p, &Label::grid(0, 0), radius + 1).unwrap();
            for (l, v) in g.table.labels.iter().zip(&g.table.values) {
                prop_assert!(*v <= g2.table.get(l).unwrap() + 1e-10);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn decisive_verdicts_agree(model in model_strategy()) {
        let c = classify(&model, 20_000, &[]).unwrap();
        let (sc, l1) = (c.summary.stochastically_complete, c.summary.l1_liouville);
        if sc != Answer::Unknown && l1 != Answer::Unknown {
            prop_assert_eq!(sc, l1, "{}", c.model);
        }
        if c.summary.parabolic == Answer::Yes {
            prop_assert_eq!(c.stochastically_complete.verdict.converges(), Some(false));
            prop_assert_eq!(c.l1_liouville.verdict.converges(), Some(false));
        }
    }

    #[test]
    fn dominance_is_antisymmetric(a in model_strategy(), b in model_strategy()) {
        let (sa, sb) = (GraphSpec::Model(a.clone()), GraphSpec::Model(b.clone()));
        let root = Label::grid(0, 0);
        let ab = curvature_dominance(&sa, &b, &root, 15).unwrap();
        let ba = curvature_dominance(&sb, &a, &root, 15).unwrap();
        prop_assert!(!(ab.direction == Direction::Stronger && ba.direction == Direction::Stronger));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn heat_mass_decreases(seed in any::<u64>()) {
        let g = deep_graph(seed, 20);
        let radius = (eccentricity(&g, VertexId(0)) - 1).min(3);
        let times: Vec<f64> = (1..=20).map(|i| i as f64 * 0.5).collect();
        let h = heat_kernel(&g, VertexId(0), radius, &times, HeatMode::Implicit).unwrap();
        prop_assert!(h.mass.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        prop_assert!(h.mass.iter().all(|&m| m <= 1.0 + 1e-8));
    }

    #[test]
    // quartic sizes leave exact f64 integers before the series tail is tabulated
    fn rescaled_antitree_function_is_bounded(radius in 4usize..9) {
        let sizes = Sequence::shifted_power(3.0);
        let ex = build_example2(&sizes, radius, None).unwrap();
        let r = &ex.report;
        let g = ex.spec.materialize(radius).unwrap();
        for l in g.labels() {
            let f = ex.test_function(l);
            prop_assert!(f <= r.f_star);
            if l.part() == 0 && matches!(l, Label::Grid { index: 0, .. }) && l.shell().unwrap() as usize + 1 >= r.n {
                prop_assert_eq!(f, r.f_star - r.epsilon);
            }
        }
        let dec = g.sphere_decompose(VertexId(0)).unwrap();
        let s = dec.sphere_sizes();
        for l in 0..radius {
            let ball: usize = s[..=l].iter().sum();
            let brute = ball as f64 / (s[l] * s[l + 1]) as f64;
            prop_assert!((r.a[l] - brute).abs() <= 1e-12 * brute);
        }
    }
}

#[test]
fn evidence_equals_mean_exit() {
    for spec in [half_line(), GraphSpec::Antitree(Sequence::shifted_power(2.0)), two_half_lines()] {
        let root = spec.root();
        let ev = l1_evidence_general(&spec, &root, 8).unwrap();
        for (&r, &mass) in ev.radii.iter().zip(&ev.green_mass) {
            let g = spec.materialize(r).unwrap();
            let x = g.find(&root).unwrap();
            let e = mean_exit(&g, x, r).unwrap();
            let v = e.table.get(&root).unwrap();
            assert!((v - mass).abs() <= 1e-9 * v.max(1.0), "R = {r}: {v} vs {mass}");
        }
    }
}

#[test]
fn model_green_steps_by_inverse_boundary() {
    for b in [Sequence::shifted_power(2.0), Sequence::shifted_power(3.0), Sequence::geometric(2.0)] {
        let m = RadialModel::new(Sequence::Const(1.0), b.clone());
        for r in [0usize, 1, 5, 20] {
            let partial = |r| match model_green(&m, r, 2000).unwrap().verdict {
                Verdict::ConvergesTo { partial_sum, .. } => partial_sum,
                v => panic!("{v:?}"),
            };
            let step = partial(r) - partial(r + 1);
            let expect = 1.0 / b.value(r).unwrap();
            assert!((step - expect).abs() <= 1e-15 + 4.0 * f64::EPSILON * partial(r), "{r}: {step} vs {expect}");
        }
    }
}

#[test]
fn exit_majorant_dominates_mean_exit() {
    let (tilde, g) = (RadialModel::section4_tilde(), RadialModel::section4());
    let spec = GraphSpec::Model(g);
    for radius in [5, 20, 60] {
        let rep = transplant_exit_check(&spec, &tilde, &Label::grid(0, 0), radius, 1).unwrap();
        assert_eq!(rep.bound_holds, Some(true), "R = {radius}");
        assert!(rep.min_bound_slack.unwrap() >= -1e-10);
    }
}
