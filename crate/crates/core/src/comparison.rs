//! Curvature-growth comparison with a radial model and the transplantation of model
//! functions onto a graph.
//!
//! `G` has stronger curvature growth than the model outside `B_{R0}` when
//! `k_+(x) ≥ k̃_+(r)` and `k_-(x) ≤ k̃_-(r)` for every `x ∈ S_r(x0)`, `r ≥ R0`.
//! Transplanting the model Green function `g̃(r(x))` or the exit majorant
//! `F_R(r) = Σ_{k=r}^{R-1} m̃(B_k)/∂B̃(k)` then yields super-harmonic functions on `G`.

use serde::{Deserialize, Serialize};

use crate::dirichlet::BallSystem;
use crate::error::{Error, Result};
use crate::generators::{GraphSpec, RadialModel};
use crate::graph::{FiniteGraph, Label, VertexId};
use crate::model::{classify, model_green, Answer, Compensated, Verdict, DEFAULT_N_MAX};
use crate::solver::SolverMode;

/// Relative tolerance of each curvature comparison.
pub const DOMINANCE_TOL: f64 = 1e-12;
/// Normalized slack tolerance of the transplanted inequalities.
pub const TRANSPLANT_TOL: f64 = 1e-10;

const MAX_WITNESSES: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Stronger,
    Weaker,
    Neither,
    Equal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Inequality {
    /// `k_+(x) ≥ k̃_+(r)` (stronger) or `≤` (weaker)
    OuterCurvature,
    /// `k_-(x) ≤ k̃_-(r)` (stronger) or `≥` (weaker)
    InnerCurvature,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Violation {
    pub radius: usize,
    pub vertex: Label,
    pub inequality: Inequality,
    /// Relative slack; negative means violated.
    pub slack: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DominanceReport {
    pub direction: Direction,
    /// `R0` of `direction`: the inequalities hold on `R0 ≤ r ≤ checked_radius`.
    pub threshold_radius: Option<usize>,
    pub stronger_from: Option<usize>,
    pub weaker_from: Option<usize>,
    pub equal_from: Option<usize>,
    pub checked_radius: usize,
    /// Violations of `direction` (of the stronger inequalities when `Neither`).
    pub violations: Vec<Violation>,
    pub violations_truncated: bool,
    /// `m(S_r(x0)) / m̃(S_r)` for `r ≤ checked_radius`.
    pub volume_ratio: Vec<f64>,
    /// Largest volume ratio over `r ≥ R0` and where it occurs.
    pub volume_constant: Option<(f64, usize)>,
}

/// `(a - b)` relative to the larger of `|a|, |b|`.
fn rel(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b) / s
    }
}

struct RadiusSlack {
    plus_ge: f64,
    plus_le: f64,
    minus_ge: f64,
    minus_le: f64,
}

fn first_holding(ok: &[bool]) -> Option<usize> {
    let mut from = None;
    for r in (0..ok.len()).rev() {
        if ok[r] {
            from = Some(r);
        } else {
            break;
        }
    }
    from
}

/// Compares curvatures of `spec` around `x0` with `model` on `0 ≤ r ≤ R`.
pub fn curvature_dominance(spec: &GraphSpec, model: &RadialModel, x0: &Label, radius: usize) -> Result<DominanceReport> {
    let g = spec.ball_around(x0, radius + 1)?;
    let center = g.find(x0).ok_or_else(|| Error::UnknownVertex(x0.to_string()))?;
    dominance_on(&g, center, model, radius)
}

/// As [`curvature_dominance`] on an already materialized `B_{R+1}(center)`.
pub fn dominance_on(g: &FiniteGraph, center: VertexId, model: &RadialModel, radius: usize) -> Result<DominanceReport> {
    let dec = g.sphere_decompose(center)?;
    let t = model.tabulate(radius)?;
    let mut slacks = Vec::with_capacity(radius + 1);
    let mut per_vertex: Vec<Vec<(VertexId, f64, f64, bool)>> = Vec::with_capacity(radius + 1);
    let mut volume_ratio = Vec::with_capacity(radius + 1);
    for r in 0..=radius {
        let (kp_model, km_model) = (t.k_plus(r), t.k_minus(r));
        let mut s = RadiusSlack {
            plus_ge: f64::INFINITY,
            plus_le: f64::INFINITY,
            minus_ge: f64::INFINITY,
            minus_le: f64::INFINITY,
        };
        let sphere = if r <= dec.max_radius() { dec.sphere(r) } else { &[] };
        let mut rows = Vec::with_capacity(sphere.len());
        let mut vol = Compensated::default();
        for &x in sphere {
            vol.add(g.measure(x));
            let c = g.curvature(&dec, x)?;
            if c.k_plus_trusted {
                s.plus_ge = s.plus_ge.min(rel(c.k_plus, kp_model));
                s.plus_le = s.plus_le.min(rel(kp_model, c.k_plus));
            }
            s.minus_ge = s.minus_ge.min(rel(c.k_minus, km_model));
            s.minus_le = s.minus_le.min(rel(km_model, c.k_minus));
            rows.push((x, c.k_plus, c.k_minus, c.k_plus_trusted));
        }
        volume_ratio.push(vol.value() / t.sphere_measure[r]);
        slacks.push(s);
        per_vertex.push(rows);
    }
    let tol = -DOMINANCE_TOL;
    let stronger: Vec<bool> = slacks.iter().map(|s| s.plus_ge >= tol && s.minus_le >= tol).collect();
    let weaker: Vec<bool> = slacks.iter().map(|s| s.plus_le >= tol && s.minus_ge >= tol).collect();
    let equal: Vec<bool> = stronger.iter().zip(&weaker).map(|(a, b)| *a && *b).collect();
    let (stronger_from, weaker_from, equal_from) =
        (first_holding(&stronger), first_holding(&weaker), first_holding(&equal));
    let candidates = [
        (Direction::Equal, equal_from),
        (Direction::Stronger, stronger_from),
        (Direction::Weaker, weaker_from),
    ];
    let (direction, threshold_radius) = candidates
        .iter()
        .filter_map(|&(d, r)| r.map(|r| (d, r)))
        .min_by_key(|&(_, r)| r)
        .map_or((Direction::Neither, None), |(d, r)| (d, Some(r)));

    let stronger_sense = !matches!(direction, Direction::Weaker);
    let mut violations = Vec::new();
    let mut truncated = false;
    'outer: for (r, rows) in per_vertex.iter().enumerate() {
        let (kp_model, km_model) = (t.k_plus(r), t.k_minus(r));
        for &(x, kp, km, trusted) in rows {
            let checks = [
                (Inequality::OuterCurvature, trusted, if stronger_sense { rel(kp, kp_model) } else { rel(kp_model, kp) }),
                (Inequality::InnerCurvature, true, if stronger_sense { rel(km_model, km) } else { rel(km, km_model) }),
            ];
            for (inequality, applies, slack) in checks {
                let fails = match direction {
                    Direction::Equal => applies && slack.abs() > DOMINANCE_TOL,
                    _ => applies && slack < tol,
                };
                if fails {
                    if violations.len() == MAX_WITNESSES {
                        truncated = true;
                        break 'outer;
                    }
                    violations.push(Violation {
                        radius: r,
                        vertex: g.label(x),
                        inequality,
                        slack,
                    });
                }
            }
        }
    }
    let from = threshold_radius.unwrap_or(0);
    let volume_constant = volume_ratio
        .iter()
        .enumerate()
        .skip(from)
        .fold(None, |best: Option<(f64, usize)>, (r, &v)| match best {
            Some((b, _)) if b >= v => best,
            _ => Some((v, r)),
        });
    Ok(DominanceReport {
        direction,
        threshold_radius,
        stronger_from,
        weaker_from,
        equal_from,
        checked_radius: radius,
        violations,
        violations_truncated: truncated,
        volume_ratio,
        volume_constant,
    })
}

fn require_stronger(report: &DominanceReport, r0: usize) -> Result<()> {
    match report.stronger_from {
        Some(s) if s <= r0 => Ok(()),
        other => Err(Error::Precondition(format!(
            "stronger curvature growth outside B_{r0} is not established (holds from {other:?}, direction {:?}); run curvature_dominance first",
            report.direction
        ))),
    }
}

/// Minimum of `Δf / scale(x)` over `xs`, where `scale(x)` is the size of the terms of
/// `Δf(x)`, together with the raw minimum and the witnesses.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct LaplacianBound {
    pub checked: usize,
    pub min_value: f64,
    pub min_value_at: Option<Label>,
    pub min_slack: f64,
    pub min_slack_at: Option<Label>,
}

fn laplacian_bound(g: &FiniteGraph, f: &[f64], xs: impl Iterator<Item = VertexId>, target: f64) -> LaplacianBound {
    let mut out = LaplacianBound {
        checked: 0,
        min_value: f64::INFINITY,
        min_value_at: None,
        min_slack: f64::INFINITY,
        min_slack_at: None,
    };
    for x in xs {
        let lap = g.laplacian_at(f, x);
        let fx = f[x.index()];
        let scale: f64 = g.neighbors(x).map(|(y, w)| w * (fx - f[y.index()]).abs()).sum::<f64>() / g.measure(x);
        let slack = (lap - target) / scale.max(target.abs()).max(f64::MIN_POSITIVE);
        out.checked += 1;
        if lap < out.min_value {
            out.min_value = lap;
            out.min_value_at = Some(g.label(x));
        }
        if slack < out.min_slack {
            out.min_slack = slack;
            out.min_slack_at = Some(g.label(x));
        }
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GreenTransplantReport {
    pub radius: usize,
    pub r0: usize,
    /// `Δv` over non-frontier `x` with `max(R0, 1) ≤ r(x) ≤ R`.
    pub v_checked_from: usize,
    pub laplacian_v: LaplacianBound,
    /// `Δu` over every non-frontier vertex of `B_R`.
    pub laplacian_u: LaplacianBound,
    /// `Σ_{B_R} u m`
    pub u_mass: f64,
    /// `Σ_{R0 ≤ r ≤ R} g̃(r) m̃(S_r)`
    pub model_mass: f64,
    /// `Σ_{r < R0} u m(S_r)`
    pub inner_mass: f64,
    pub volume_constant: f64,
    pub volume_constant_at: usize,
    /// `C · model_mass + inner_mass`
    pub mass_bound: f64,
    pub mass_bounded: bool,
    /// The model's `Σ g̃(r) m̃(S_r)` over all radii.
    pub model_l1_series: Verdict,
    pub passed: bool,
}

/// Transplants `v(x) = g̃(r(x))` and `u = min(v, g̃(R0+1))` onto `B_R(x0)` and checks
/// super-harmonicity and the volume comparison of `Σ u m`.
pub fn transplant_green_check(
    spec: &GraphSpec,
    model: &RadialModel,
    x0: &Label,
    radius: usize,
    r0: usize,
) -> Result<GreenTransplantReport> {
    if r0 >= radius {
        return Err(Error::Precondition(format!("R0 = {r0} must be below R = {radius}")));
    }
    let tail = model_green(model, radius + 1, DEFAULT_N_MAX)?;
    let Verdict::ConvergesTo { value: g_tail, .. } = tail.verdict else {
        return Err(Error::Precondition(format!(
            "the model {} is not certified non-parabolic",
            model.label()
        )));
    };
    let g = spec.ball_around(x0, radius + 1)?;
    let center = g.find(x0).ok_or_else(|| Error::UnknownVertex(x0.to_string()))?;
    let dom = dominance_on(&g, center, model, radius)?;
    require_stronger(&dom, r0)?;
    let t = model.tabulate(radius + 1)?;
    let mut gt = vec![0.0; radius + 2];
    gt[radius + 1] = g_tail;
    for r in (0..=radius).rev() {
        gt[r] = gt[r + 1] + 1.0 / t.boundary[r];
    }
    let dec = g.sphere_decompose(center)?;
    let cap = gt[r0 + 1];
    let mut v = vec![0.0; g.len()];
    let mut u = vec![0.0; g.len()];
    for x in g.vertices() {
        let r = dec.radius_of(x);
        v[x.index()] = gt[r];
        u[x.index()] = gt[r].min(cap);
    }
    let from = r0.max(1);
    let inside = |lo: usize| {
        let dec = &dec;
        let g = &g;
        g.vertices().filter(move |&x| {
            let r = dec.radius_of(x);
            !g.is_frontier(x) && r >= lo && r <= radius
        })
    };
    let laplacian_v = laplacian_bound(&g, &v, inside(from), 0.0);
    let laplacian_u = laplacian_bound(&g, &u, inside(0), 0.0);

    let (volume_constant, volume_constant_at) = dom.volume_ratio[r0..]
        .iter()
        .enumerate()
        .fold((0.0f64, r0), |(b, at), (i, &c)| if c > b { (c, r0 + i) } else { (b, at) });
    let mut u_mass = Compensated::default();
    let mut inner = Compensated::default();
    for r in 0..=radius {
        for &x in dec.sphere(r) {
            let w = u[x.index()] * g.measure(x);
            u_mass.add(w);
            if r < r0 {
                inner.add(w);
            }
        }
    }
    let mut model_mass = Compensated::default();
    for r in r0..=radius {
        model_mass.add(gt[r] * t.sphere_measure[r]);
    }
    let (u_mass, inner_mass, model_mass) = (u_mass.value(), inner.value(), model_mass.value());
    let mass_bound = volume_constant * model_mass + inner_mass;
    let mass_bounded = u_mass <= mass_bound * (1.0 + TRANSPLANT_TOL);
    let model_l1_series = classify(model, DEFAULT_N_MAX, &[])?.l1_liouville.verdict;
    let passed = laplacian_v.min_slack >= -TRANSPLANT_TOL && laplacian_u.min_slack >= -TRANSPLANT_TOL && mass_bounded;
    Ok(GreenTransplantReport {
        radius,
        r0,
        v_checked_from: from,
        laplacian_v,
        laplacian_u,
        u_mass,
        model_mass,
        inner_mass,
        volume_constant,
        volume_constant_at,
        mass_bound,
        mass_bounded,
        model_l1_series,
        passed,
    })
}

/// `F_R(r) = Σ_{k=r}^{R-1} m̃(B_k)/∂B̃(k)` for `0 ≤ r ≤ R`.
pub fn exit_majorant(model: &RadialModel, radius: usize) -> Result<Vec<f64>> {
    let t = model.tabulate(radius)?;
    let mut ball = Compensated::default();
    let terms: Vec<f64> = (0..=radius)
        .map(|k| {
            ball.add(t.sphere_measure[k]);
            ball.value() / t.boundary[k]
        })
        .collect();
    let mut f = vec![0.0; radius + 1];
    let mut acc = Compensated::default();
    for r in (0..radius).rev() {
        acc.add(terms[r]);
        f[r] = acc.value();
    }
    Ok(f)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExitTransplantReport {
    pub radius: usize,
    /// Curvature inequalities are used on `r ≥ checked_from` only.
    pub checked_from: usize,
    /// `ΔF_R(r(x)) - 1` over interior `x` with `r(x) ≥ checked_from`.
    pub laplacian: LaplacianBound,
    /// `c ≥ 1` making `Δ(c F_R) ≥ 1` inside `B_{checked_from}` as well; `None` when
    /// `ΔF_R ≤ 0` somewhere there.
    pub scale: Option<f64>,
    /// `min_x c F_R(r(x)) - E_R(x)` over `B_R`.
    pub min_bound_slack: Option<f64>,
    pub min_bound_slack_at: Option<Label>,
    pub bound_holds: Option<bool>,
    pub passed: bool,
}

/// Transplants the exit majorant `F_R` onto `B_R(x0)`, checks `ΔF_R ≥ 1` and compares
/// with the mean exit time `E_R`. With `from > 0` the curvature inequalities are only
/// assumed on `r ≥ from`, and `F_R` is rescaled to cover the finite exceptional set.
pub fn transplant_exit_check(
    spec: &GraphSpec,
    model: &RadialModel,
    x0: &Label,
    radius: usize,
    from: usize,
) -> Result<ExitTransplantReport> {
    if radius == 0 || from >= radius {
        return Err(Error::Precondition(format!("need 0 ≤ from < R, got from = {from}, R = {radius}")));
    }
    let c = classify(model, DEFAULT_N_MAX, &[])?;
    if c.summary.stochastically_complete != Answer::No {
        return Err(Error::Precondition(format!(
            "the model {} is not certified stochastically incomplete",
            model.label()
        )));
    }
    let wide = spec.ball_around(x0, radius + 1)?;
    let wc = wide.find(x0).ok_or_else(|| Error::UnknownVertex(x0.to_string()))?;
    let dom = dominance_on(&wide, wc, model, radius)?;
    require_stronger(&dom, from)?;

    let g = spec.ball_around(x0, radius)?;
    let center = g.find(x0).ok_or_else(|| Error::UnknownVertex(x0.to_string()))?;
    let sys = BallSystem::new(&g, center, radius, SolverMode::Auto)?;
    let f_model = exit_majorant(model, radius)?;
    let dec = &sys.ball.dec;
    let mut f = vec![0.0; g.len()];
    for x in g.vertices() {
        f[x.index()] = f_model[dec.radius_of(x)];
    }
    let interior = sys.system.interior().to_vec();
    let laplacian = laplacian_bound(
        &g,
        &f,
        interior.iter().copied().filter(|&x| dec.radius_of(x) >= from),
        1.0,
    );
    let mut scale = Some(1.0f64);
    for &x in interior.iter().filter(|&&x| dec.radius_of(x) < from) {
        let lap = g.laplacian_at(&f, x);
        scale = match scale {
            Some(s) if lap > 0.0 => Some(s.max(1.0 / lap)),
            _ => None,
        };
    }
    let laplacian_ok = laplacian.min_slack >= -TRANSPLANT_TOL;
    let (mut min_bound_slack, mut min_at, mut bound_holds) = (None, None, None);
    if let Some(s) = scale {
        let e = sys.exit_values()?;
        let mut best = f64::INFINITY;
        let mut at = None;
        let mut holds = true;
        for x in sys.ball.vertices() {
            let (fx, ex) = (s * f[x.index()], e[x.index()]);
            let slack = fx - ex;
            if slack < best {
                best = slack;
                at = Some(g.label(x));
            }
            if slack < -TRANSPLANT_TOL * ex.abs().max(1.0) {
                holds = false;
            }
        }
        min_bound_slack = Some(best);
        min_at = at;
        bound_holds = Some(holds);
    }
    Ok(ExitTransplantReport {
        radius,
        checked_from: from,
        laplacian,
        scale,
        min_bound_slack,
        min_bound_slack_at: min_at,
        bound_holds,
        passed: laplacian_ok && bound_holds != Some(false),
    })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CompatibilityReport {
    pub radius: usize,
    /// `max_r |k̃_+(r-1) m̃(S_{r-1}) - k̃_-(r) m̃(S_r)| / ∂B̃(r-1)` over `1 ≤ r ≤ R`.
    pub max_violation: f64,
    pub at: Option<usize>,
}

/// Checks that the model's curvatures and sphere measures describe the same boundary
/// weights.
pub fn compatibility_check(model: &RadialModel, radius: usize) -> Result<CompatibilityReport> {
    let mut worst = 0.0;
    let mut at = None;
    for r in 1..=radius {
        let lhs = model.k_plus(r - 1)? * model.sphere_measure(r - 1)?;
        let rhs = model.k_minus(r)? * model.sphere_measure(r)?;
        let v = (lhs - rhs).abs() / model.boundary(r - 1)?;
        if v > worst || at.is_none() {
            worst = v;
            at = Some(r);
        }
    }
    Ok(CompatibilityReport {
        radius,
        max_violation: worst,
        at,
    })
}

/// Closed-form comparison of two radial models on `from ≤ r ≤ to`; slacks are relative.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RadialScan {
    pub from: usize,
    pub to: usize,
    /// `max |k_-(r) - k̃_-(r)|`
    pub k_minus_max_gap: f64,
    /// `min (k_+(r) - k̃_+(r))`
    pub k_plus_min_slack: f64,
    /// `min (m̃(S_r) - m(S_r))`
    pub measure_min_slack: f64,
    /// `k̃_- = k_-`, `k̃_+ ≤ k_+` and `m̃ ≥ m` on the whole range.
    pub holds: bool,
}

/// Scans the curvatures of `g` against `tilde` through their closed forms.
pub fn radial_scan(g: &RadialModel, tilde: &RadialModel, from: usize, to: usize) -> Result<RadialScan> {
    if from > to {
        return Err(Error::Precondition(format!("empty range {from}..={to}")));
    }
    let (a, b) = (g.tabulate(to)?, tilde.tabulate(to)?);
    let mut scan = RadialScan {
        from,
        to,
        k_minus_max_gap: 0.0,
        k_plus_min_slack: f64::INFINITY,
        measure_min_slack: f64::INFINITY,
        holds: true,
    };
    for r in from..=to {
        scan.k_minus_max_gap = scan.k_minus_max_gap.max(rel(a.k_minus(r), b.k_minus(r)).abs());
        scan.k_plus_min_slack = scan.k_plus_min_slack.min(rel(a.k_plus(r), b.k_plus(r)));
        scan.measure_min_slack = scan.measure_min_slack.min(rel(b.sphere_measure[r], a.sphere_measure[r]));
    }
    scan.holds = scan.k_minus_max_gap <= DOMINANCE_TOL
        && scan.k_plus_min_slack >= -DOMINANCE_TOL
        && scan.measure_min_slack >= -DOMINANCE_TOL;
    Ok(scan)
}
