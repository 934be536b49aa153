//! Monte Carlo for the minimal continuous-time walk on a materialized ball.
//!
//! The walk holds at `x` for an exponential time of rate `Deg(x)` and then jumps to `y`
//! with probability `b(x,y) / Σ_z b(x,z)`. Sample `i` draws from the ChaCha stream `i`
//! of the seed, so results do not depend on scheduling or thread count.

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dirichlet::Ball;
use crate::error::{Error, Result};
use crate::graph::{FiniteGraph, VertexId};
use crate::model::Compensated;

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "LIOUVILLE_LAB_THREADS";

/// Largest censored share accepted for exit-time comparisons.
pub const MAX_CENSORED_FRACTION: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct WalkConfig {
    pub start: VertexId,
    pub absorbing: Vec<VertexId>,
    pub t_max: f64,
    pub n_samples: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub time: f64,
    pub absorbed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkStats {
    pub n_samples: usize,
    /// Mean exit time over absorbed samples; `0` when none was absorbed.
    pub mean: f64,
    pub variance: f64,
    pub standard_error: f64,
    pub count_absorbed: usize,
    pub count_censored: usize,
}

impl WalkStats {
    pub fn censored_fraction(&self) -> f64 {
        self.count_censored as f64 / self.n_samples as f64
    }

    pub fn from_samples(samples: &[Sample]) -> Self {
        let done: Vec<f64> = samples.iter().filter(|s| s.absorbed).map(|s| s.time).collect();
        let k = done.len();
        let mut sum = Compensated::default();
        for &t in &done {
            sum.add(t);
        }
        let mean = if k > 0 { sum.value() / k as f64 } else { 0.0 };
        let mut ss = Compensated::default();
        for &t in &done {
            ss.add((t - mean) * (t - mean));
        }
        let variance = if k > 1 { ss.value() / (k - 1) as f64 } else { 0.0 };
        WalkStats {
            n_samples: samples.len(),
            mean,
            variance,
            standard_error: if k > 0 { (variance / k as f64).sqrt() } else { 0.0 },
            count_absorbed: k,
            count_censored: samples.len() - k,
        }
    }
}

/// Runs `f` on a pool capped by [`THREADS_ENV`] when it is set.
pub fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    let threads = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok());
    match threads {
        Some(n) if n > 0 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        _ => f(),
    }
}

struct Chain {
    absorbing: Vec<bool>,
    holding: Vec<Option<Exp<f64>>>,
    jumps: Vec<Option<WeightedIndex<f64>>>,
    targets: Vec<Vec<VertexId>>,
}

impl Chain {
    fn new(g: &FiniteGraph, start: VertexId, absorbing: &[VertexId]) -> Result<Self> {
        let absorbing = g.mask(absorbing);
        // the walk must not see the missing edges of frontier vertices
        let mut seen = vec![false; g.len()];
        let mut stack = vec![start];
        seen[start.index()] = true;
        while let Some(x) = stack.pop() {
            if absorbing[x.index()] {
                continue;
            }
            if g.is_frontier(x) {
                return Err(Error::Precondition(format!(
                    "frontier vertex {} is reachable without absorption",
                    g.label(x)
                )));
            }
            for (y, _) in g.neighbors(x) {
                if !seen[y.index()] {
                    seen[y.index()] = true;
                    stack.push(y);
                }
            }
        }
        let mut holding = Vec::with_capacity(g.len());
        let mut jumps = Vec::with_capacity(g.len());
        let mut targets = Vec::with_capacity(g.len());
        for x in g.vertices() {
            let (ys, ws): (Vec<VertexId>, Vec<f64>) = g.neighbors(x).unzip();
            let rate = ws.iter().sum::<f64>() / g.measure(x);
            if seen[x.index()] && rate > 0.0 && !absorbing[x.index()] {
                holding.push(Some(Exp::new(rate).map_err(|e| Error::Internal(e.to_string()))?));
                jumps.push(Some(WeightedIndex::new(&ws).map_err(|e| Error::Internal(e.to_string()))?));
            } else {
                holding.push(None);
                jumps.push(None);
            }
            targets.push(ys);
        }
        Ok(Chain {
            absorbing,
            holding,
            jumps,
            targets,
        })
    }

    fn run(&self, start: VertexId, t_max: f64, rng: &mut ChaCha8Rng) -> Sample {
        let mut x = start;
        let mut t = 0.0;
        loop {
            if self.absorbing[x.index()] {
                return Sample { time: t, absorbed: true };
            }
            let Some(hold) = &self.holding[x.index()] else {
                return Sample { time: t_max, absorbed: false };
            };
            t += hold.sample(rng);
            if t > t_max {
                return Sample { time: t_max, absorbed: false };
            }
            let j = self.jumps[x.index()].as_ref().expect("jump law exists").sample(rng);
            x = self.targets[x.index()][j];
        }
    }
}

fn validate(g: &FiniteGraph, cfg: &WalkConfig) -> Result<()> {
    if cfg.n_samples == 0 {
        return Err(Error::Precondition("n_samples must be at least 1".into()));
    }
    if !(cfg.t_max > 0.0) {
        return Err(Error::Precondition("t_max must be positive".into()));
    }
    if cfg.absorbing.is_empty() && cfg.t_max.is_infinite() {
        return Err(Error::Precondition("an empty absorbing set needs a finite t_max".into()));
    }
    if !g.contains(cfg.start) || cfg.absorbing.iter().any(|&v| !g.contains(v)) {
        return Err(Error::Precondition("vertex outside the graph".into()));
    }
    Ok(())
}

/// One exit sample per stream, in sample order.
pub fn exit_samples(g: &FiniteGraph, cfg: &WalkConfig) -> Result<Vec<Sample>> {
    validate(g, cfg)?;
    let chain = Chain::new(g, cfg.start, &cfg.absorbing)?;
    Ok(with_pool(|| {
        (0..cfg.n_samples as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(i);
                chain.run(cfg.start, cfg.t_max, &mut rng)
            })
            .collect()
    }))
}

pub fn simulate_exit(g: &FiniteGraph, cfg: &WalkConfig) -> Result<WalkStats> {
    Ok(WalkStats::from_samples(&exit_samples(g, cfg)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Survival {
    pub t: f64,
    pub estimate: f64,
    pub standard_error: f64,
}

/// Share of walks from `x0` still inside `int B_R` at each time; estimates
/// `Σ_y p_t^R(x0, y) m(y)`. The same paths serve every time, so the curve is monotone.
pub fn survival_curve(g: &FiniteGraph, x0: VertexId, radius: usize, times: &[f64], n: usize, seed: u64) -> Result<Vec<Survival>> {
    if times.iter().any(|&t| !(t >= 0.0 && t.is_finite())) {
        return Err(Error::Precondition("times must be finite and nonnegative".into()));
    }
    let ball = Ball::new(g, x0, radius)?;
    let t_max = times.iter().copied().fold(0.0, f64::max);
    let samples = if t_max > 0.0 {
        let cfg = WalkConfig {
            start: x0,
            absorbing: ball.boundary.clone(),
            t_max,
            n_samples: n,
            seed,
        };
        exit_samples(g, &cfg)?
    } else {
        vec![Sample { time: 0.0, absorbed: false }; n.max(1)]
    };
    Ok(times
        .iter()
        .map(|&t| {
            let alive = samples.iter().filter(|s| !s.absorbed || s.time > t).count();
            let p = alive as f64 / samples.len() as f64;
            Survival {
                t,
                estimate: p,
                standard_error: (p * (1.0 - p) / samples.len() as f64).sqrt(),
            }
        })
        .collect())
}

pub fn survival_probability(g: &FiniteGraph, x0: VertexId, radius: usize, t: f64, n: usize, seed: u64) -> Result<Survival> {
    Ok(survival_curve(g, x0, radius, &[t], n, seed)?[0])
}
