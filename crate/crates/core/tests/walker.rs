mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use liouville_core::dirichlet::Ball;
use liouville_core::walker::{exit_samples, survival_curve};
use liouville_core::{heat_kernel, mean_exit, simulate_exit, FiniteGraph, HeatMode, VertexId, WalkConfig};

use common::{eccentricity, random_graph};

fn instance(seed: u64) -> (FiniteGraph, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let n = rng.gen_range(4..=12);
        let extra = rng.gen_range(0..=n / 2);
        let g = random_graph(&mut rng, n, extra);
        let ecc = eccentricity(&g, VertexId(0));
        if ecc >= 2 {
            return (g, (ecc - 1).min(3));
        }
    }
}

fn config(g: &FiniteGraph, radius: usize, n: usize, seed: u64) -> WalkConfig {
    let ball = Ball::new(g, VertexId(0), radius).unwrap();
    WalkConfig {
        start: VertexId(0),
        absorbing: ball.boundary,
        t_max: 1e9,
        n_samples: n,
        seed,
    }
}

#[test]
fn sampled_exit_times_match_the_solver() {
    for seed in 0..10 {
        let (g, radius) = instance(seed);
        let exact = mean_exit(&g, VertexId(0), radius).unwrap();
        let want = exact.table.get(&g.label(VertexId(0))).unwrap();
        let s = simulate_exit(&g, &config(&g, radius, 20_000, seed + 100)).unwrap();
        assert_eq!(s.count_censored, 0);
        assert!(
            (s.mean - want).abs() < 4.0 * s.standard_error,
            "seed {seed}: {} ± {} vs {want}",
            s.mean,
            s.standard_error
        );
    }
}

#[test]
fn survival_tracks_heat_mass() {
    for seed in [3, 17] {
        let (g, radius) = instance(seed);
        let times = [0.25, 0.5, 1.0, 2.0, 4.0];
        let heat = heat_kernel(&g, VertexId(0), radius, &times, HeatMode::Implicit).unwrap();
        let curve = survival_curve(&g, VertexId(0), radius, &times, 40_000, seed).unwrap();
        for s in &curve {
            let i = heat.times.iter().position(|&t| t == s.t).unwrap();
            let tol = 4.0 * s.standard_error + 1e-6;
            assert!((s.estimate - heat.mass[i]).abs() < tol, "seed {seed}, t {}: {} vs {}", s.t, s.estimate, heat.mass[i]);
        }
        assert!(curve.windows(2).all(|w| w[1].estimate <= w[0].estimate));
    }
}

#[test]
fn seeds_fix_the_samples() {
    let (g, radius) = instance(5);
    let cfg = config(&g, radius, 2_000, 42);
    let a = exit_samples(&g, &cfg).unwrap();
    assert_eq!(a, exit_samples(&g, &cfg).unwrap());
    let b = exit_samples(&g, &WalkConfig { seed: 43, ..cfg }).unwrap();
    assert_ne!(a, b);
}

#[test]
fn short_horizons_censor() {
    let (g, radius) = instance(9);
    let s = simulate_exit(&g, &WalkConfig { t_max: 1e-9, ..config(&g, radius, 500, 1) }).unwrap();
    assert_eq!(s.count_censored, 500);
    assert_eq!(s.censored_fraction(), 1.0);
}
