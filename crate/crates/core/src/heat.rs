//! Dirichlet heat kernels on balls and Green functions by time integration.
//!
//! On `int B_R` the kernel `p_t(x0, ·)` solves `M p' = -A p` where `A` is the
//! `m`-weighted Dirichlet matrix and `M = diag(m)`, with `p_0 = δ_{x0}/m(x0)`.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::dirichlet::{Ball, DirichletSystem, GreenTable, VertexTable};
use crate::error::{Error, Result};
use crate::graph::{FiniteGraph, Label, VertexId};
use crate::solver::{LinearSolver, SolverMode, SymMatrix};

/// Largest interior handled by [`HeatMode::Spectral`].
pub const SPECTRAL_LIMIT: usize = 2000;

/// Default local error budget per unit time, relative to `1/m(x0)`.
pub const HEAT_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeatMode {
    /// TR-BDF2 with step-doubling error control.
    #[default]
    Implicit,
    /// Dense eigendecomposition of the symmetrized generator.
    Spectral,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HeatCurve {
    pub source: Label,
    pub radius: usize,
    /// Output times, starting at `0`.
    pub times: Vec<f64>,
    /// Ball vertices ordered by radius, then label.
    pub labels: Vec<Label>,
    pub radii: Vec<usize>,
    pub measure: Vec<f64>,
    /// `kernel[i][j] = p_{times[i]}(source, labels[j])`.
    pub kernel: Vec<Vec<f64>>,
    /// `Σ_y p_t(source, y) m(y)` per output time.
    pub mass: Vec<f64>,
    /// Largest relative residual of the linear solves.
    pub residual: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl HeatCurve {
    pub fn value(&self, i: usize, label: &Label) -> Option<f64> {
        let j = self.labels.iter().position(|l| l == label)?;
        Some(self.kernel[i][j])
    }

    /// Rows `(t, label, value)` in time order, then ball order.
    pub fn rows(&self) -> Vec<(f64, Label, f64)> {
        let mut out = Vec::with_capacity(self.times.len() * self.labels.len());
        for (i, &t) in self.times.iter().enumerate() {
            for (j, l) in self.labels.iter().enumerate() {
                out.push((t, *l, self.kernel[i][j]));
            }
        }
        out
    }
}

const GAMMA: f64 = 2.0 - std::f64::consts::SQRT_2;

struct Stepper<'a> {
    a: &'a SymMatrix,
    m: Vec<f64>,
    cache: HashMap<u64, Arc<LinearSolver>>,
    residual: f64,
}

impl<'a> Stepper<'a> {
    /// Factor of `M + (γh/2) A`, shared by both stages.
    fn solver(&mut self, h: f64) -> Result<Arc<LinearSolver>> {
        if let Some(s) = self.cache.get(&h.to_bits()) {
            return Ok(s.clone());
        }
        let d = 0.5 * GAMMA * h;
        let rows = (0..self.a.dim())
            .map(|i| {
                self.a
                    .row(i)
                    .map(|(j, v)| (j, if i == j { self.m[i] + d * v } else { d * v }))
                    .collect()
            })
            .collect();
        let s = Arc::new(LinearSolver::new(SymMatrix::from_rows(rows), SolverMode::Auto)?);
        // remainder steps towards output times are not powers of two and are not reused
        if h.log2().fract() == 0.0 {
            self.cache.insert(h.to_bits(), s.clone());
        }
        Ok(s)
    }

    fn solve(&mut self, s: &LinearSolver, b: &[f64]) -> Result<Vec<f64>> {
        let (x, r) = s.solve(b)?;
        self.residual = self.residual.max(r);
        Ok(x)
    }

    fn step(&mut self, y: &[f64], h: f64) -> Result<Vec<f64>> {
        let s = self.solver(h)?;
        let d = 0.5 * GAMMA * h;
        let mut ay = vec![0.0; y.len()];
        self.a.mul_vec(y, &mut ay);
        let b1: Vec<f64> = (0..y.len()).map(|i| self.m[i] * y[i] - d * ay[i]).collect();
        let yg = self.solve(&s, &b1)?;
        let c = 1.0 / (GAMMA * (2.0 - GAMMA));
        let c0 = (1.0 - GAMMA) * (1.0 - GAMMA) * c;
        let b2: Vec<f64> = (0..y.len()).map(|i| self.m[i] * (c * yg[i] - c0 * y[i])).collect();
        self.solve(&s, &b2)
    }
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, |m, d| if d.is_nan() { f64::INFINITY } else { m.max(d) })
}

fn integrate_implicit(
    system: &DirichletSystem<'_>,
    p0: Vec<f64>,
    times: &[f64],
    tol: f64,
    stats: &mut (usize, usize, f64),
) -> Result<Vec<Vec<f64>>> {
    let g = system.graph();
    let mut st = Stepper {
        a: system.matrix(),
        m: system.interior().iter().map(|&x| g.measure(x)).collect(),
        cache: HashMap::new(),
        residual: 0.0,
    };
    let scale = p0.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let mut out = vec![p0.clone()];
    let mut y = p0;
    let mut t = 0.0;
    let mut h = 2f64.powi(-8);
    for &target in &times[1..] {
        while t < target {
            let rest = target - t;
            let last = h >= rest;
            let hs = if last { rest } else { h };
            let big = st.step(&y, hs)?;
            let mid = st.step(&y, 0.5 * hs)?;
            let small = st.step(&mid, 0.5 * hs)?;
            let err = sup_diff(&big, &small) / 3.0;
            let budget = tol * hs * scale;
            if err <= budget {
                y = small;
                t = if last { target } else { t + hs };
                stats.0 += 1;
                if !last && err * 16.0 < budget {
                    h *= 2.0;
                }
            } else {
                stats.1 += 1;
                h = if last { 2f64.powi(rest.log2().floor() as i32 - 1) } else { 0.5 * h };
                if h < 1e-13 * target.max(1.0) {
                    return Err(Error::Integration {
                        t,
                        reason: "step size underflow; use a smaller ball or the spectral mode".into(),
                    });
                }
            }
        }
        out.push(y.clone());
    }
    stats.2 = stats.2.max(st.residual);
    Ok(out)
}

fn integrate_spectral(system: &DirichletSystem<'_>, p0: &[f64], times: &[f64]) -> Result<Vec<Vec<f64>>> {
    let g = system.graph();
    let n = system.interior().len();
    if n > SPECTRAL_LIMIT {
        return Err(Error::Precondition(format!(
            "spectral mode handles at most {SPECTRAL_LIMIT} interior vertices, got {n}"
        )));
    }
    let sq: Vec<f64> = system.interior().iter().map(|&x| g.measure(x).sqrt()).collect();
    let a = system.matrix();
    let mut s = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for (j, v) in a.row(i) {
            s[(i, j)] = v / (sq[i] * sq[j]);
        }
    }
    let eig = SymmetricEigen::new(s);
    let w = DVector::from_iterator(n, (0..n).map(|i| sq[i] * p0[i]));
    let coeff = eig.eigenvectors.transpose() * w;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let decayed = DVector::from_iterator(
            n,
            (0..n).map(|k| coeff[k] * (-eig.eigenvalues[k].max(0.0) * t).exp()),
        );
        let z = &eig.eigenvectors * decayed;
        out.push((0..n).map(|i| z[i] / sq[i]).collect());
    }
    Ok(out)
}

/// Heat kernel `p_t^R(x0, ·)` on `B_R(x0)` at `times` (the curve also holds `t = 0`).
pub fn heat_kernel(g: &FiniteGraph, x0: VertexId, radius: usize, times: &[f64], mode: HeatMode) -> Result<HeatCurve> {
    heat_kernel_with(g, x0, x0, radius, times, mode, HEAT_TOL)
}

/// As [`heat_kernel`] on the ball `B_R(center)` with source `x0`.
pub fn heat_kernel_with(
    g: &FiniteGraph,
    center: VertexId,
    x0: VertexId,
    radius: usize,
    times: &[f64],
    mode: HeatMode,
    tol: f64,
) -> Result<HeatCurve> {
    if times.iter().any(|t| !(t.is_finite() && *t > 0.0)) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("times must be positive and increasing".into()));
    }
    let ball = Ball::new(g, center, radius)?;
    let system = DirichletSystem::new(g, &ball.interior, &ball.boundary, SolverMode::Auto)?;
    let Some(slot) = system.slot(x0) else {
        return Err(Error::Precondition(format!("source {} is not an interior vertex", g.label(x0))));
    };
    let mut p0 = vec![0.0; system.interior().len()];
    p0[slot] = 1.0 / g.measure(x0);
    let mut all = vec![0.0];
    all.extend_from_slice(times);
    let mut stats = (0, 0, 0.0);
    let states = match mode {
        HeatMode::Implicit => integrate_implicit(&system, p0, &all, tol, &mut stats)?,
        HeatMode::Spectral => integrate_spectral(&system, &p0, &all)?,
    };
    let mut ids = ball.vertices();
    ids.sort_by_key(|&v| (ball.dec.radius_of(v), g.label(v)));
    let measure: Vec<f64> = ids.iter().map(|&v| g.measure(v)).collect();
    let mut kernel = Vec::with_capacity(states.len());
    let mut mass = Vec::with_capacity(states.len());
    for s in &states {
        let row: Vec<f64> = ids
            .iter()
            .map(|&v| system.slot(v).map_or(0.0, |i| s[i]))
            .collect();
        mass.push(row.iter().zip(&measure).map(|(p, m)| p * m).sum());
        kernel.push(row);
    }
    Ok(HeatCurve {
        source: g.label(x0),
        radius,
        times: all,
        labels: ids.iter().map(|&v| g.label(v)).collect(),
        radii: ids.iter().map(|&v| ball.dec.radius_of(v)).collect(),
        measure,
        kernel,
        mass,
        residual: stats.2,
        accepted_steps: stats.0,
        rejected_steps: stats.1,
    })
}

/// Green function recovered from a heat curve.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TimeIntegratedGreen {
    pub green: GreenTable,
    /// Decay rate fitted on the last decade of times.
    pub decay_rate: f64,
    /// Largest share of a value coming from the extrapolated tail.
    pub tail_share: f64,
}

/// `∫_0^∞ p_t dt` by the trapezoid rule on the curve's grid plus an exponential tail
/// `p_T/λ`, with `λ` fitted on `ln mass` over `[T/10, T]`.
pub fn green_via_time_integration(curve: &HeatCurve) -> Result<TimeIntegratedGreen> {
    let t_end = *curve.times.last().unwrap();
    let late: Vec<usize> = (0..curve.times.len())
        .filter(|&i| curve.times[i] > 0.0 && curve.times[i] >= t_end / 10.0)
        .collect();
    let unstable = |reason: String| Error::Integration { t: t_end, reason };
    if late.len() < 3 {
        return Err(unstable("fewer than three times in the last decade".into()));
    }
    for w in late.windows(2) {
        let (a, b) = (curve.mass[w[0]], curve.mass[w[1]]);
        if !(b > 0.0 && b <= a) {
            return Err(unstable(format!("late-time mass is not decreasing ({a} -> {b})")));
        }
    }
    let xs: Vec<f64> = late.iter().map(|&i| curve.times[i]).collect();
    let ys: Vec<f64> = late.iter().map(|&i| curve.mass[i].ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let rate = -sxy / sxx;
    if !(rate.is_finite() && rate > 0.0) {
        return Err(unstable(format!("fitted decay rate {rate} is not positive")));
    }
    let last = curve.kernel.last().unwrap();
    let mut tail_share: f64 = 0.0;
    let values: Vec<f64> = (0..curve.labels.len())
        .map(|j| {
            let mut s = 0.0;
            for i in 1..curve.times.len() {
                let dt = curve.times[i] - curve.times[i - 1];
                s += 0.5 * dt * (curve.kernel[i - 1][j] + curve.kernel[i][j]);
            }
            let tail = last[j] / rate;
            if s + tail > 0.0 {
                tail_share = tail_share.max(tail / (s + tail));
            }
            s + tail
        })
        .collect();
    Ok(TimeIntegratedGreen {
        green: GreenTable {
            source: curve.source,
            radius: curve.radius,
            table: VertexTable::new(curve.labels.clone(), curve.radii.clone(), values),
            residual: curve.residual,
        },
        decay_rate: rate,
        tail_share,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirichlet::dirichlet_green;
    use crate::graph::tests_support::path;

    #[test]
    fn scalar_decay_on_one_vertex_ball() {
        let g = path(&[1.0, 1.0, 1.0], &[1.0; 4]);
        let times: Vec<f64> = (1..=40).map(|i| i as f64 * 0.25).collect();
        for mode in [HeatMode::Implicit, HeatMode::Spectral] {
            let c = heat_kernel(&g, VertexId(0), 1, &times, mode).unwrap();
            assert_eq!(c.kernel[0][0], 1.0);
            for (i, &t) in c.times.iter().enumerate() {
                assert!((c.kernel[i][0] - (-t).exp()).abs() < 1e-6, "{mode:?} t={t}");
                assert!((c.mass[i] - (-t).exp()).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn time_integration_recovers_green() {
        let g = path(&[1.0; 4], &[1.0; 5]);
        let times: Vec<f64> = (1..=6000).map(|i| i as f64 * 0.01).collect();
        let c = heat_kernel(&g, VertexId(0), 3, &times, HeatMode::Implicit).unwrap();
        let tg = green_via_time_integration(&c).unwrap();
        let direct = dirichlet_green(&g, VertexId(0), 3).unwrap();
        for (l, v) in direct.table.labels.iter().zip(&direct.table.values) {
            let w = tg.green.table.get(l).unwrap();
            assert!((w - v).abs() <= 1e-4 * v.max(1e-300), "{l}: {w} vs {v}");
        }
    }

    #[test]
    fn rejects_bad_times_and_short_curves() {
        let g = path(&[1.0; 3], &[1.0; 4]);
        assert!(heat_kernel(&g, VertexId(0), 2, &[1.0, 0.5], HeatMode::Implicit).is_err());
        assert!(heat_kernel(&g, VertexId(0), 2, &[0.0], HeatMode::Implicit).is_err());
        let c = heat_kernel(&g, VertexId(0), 2, &[1.0], HeatMode::Implicit).unwrap();
        assert!(green_via_time_integration(&c).is_err());
    }
}
