//! Stochastically incomplete graphs that are L¹-Liouville, built by conformal changes
//! of the measure that keep the Green function.
//!
//! * Gluing: an infinite-volume graph `M1` joined by one edge to a stochastically
//!   incomplete model `M2`, with `λ² = max(1, 1/g_R(x1, ·))` on `M1`.
//! * Antitree: a stochastically incomplete antitree with `λ² = max(1, 1/g_R(x0, ·))` on a
//!   ray `γ`, and a bounded function violating the weak Omori–Yau principle.
//!
//! Antitree balls grow like `R⁴` vertices and `R⁷` edges, so antitree computations use
//! the quotient by the sphere symmetries fixing `γ`: per sphere one node for the ray
//! vertex `(r, 0)` and one for the class `S_r \ γ`, labelled `(r, 1)`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dirichlet::BallSystem;
use crate::error::{Error, Result};
use crate::fit::{classify_growth, Growth};
use crate::generators::{GraphSpec, LambdaSq, RadialModel};
use crate::graph::{FiniteGraph, GraphBuilder, Label, VertexId};
use crate::model::{classify, Answer, Compensated, Verdict, DEFAULT_N_MAX};
use crate::sequence::Sequence;
use crate::solver::SolverMode;

/// Tolerance of the Green-preservation and minorant checks.
pub const CERTIFY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Example1Report {
    pub radius: usize,
    /// `m(B_r)` of `M1` for `r ≤ R`.
    pub m1_volume: Vec<f64>,
    pub m1_volume_growth: Growth,
    pub m2_series: Verdict,
    pub lambda_sq_min: f64,
    pub lambda_sq_max: f64,
    /// `max |g̃_R(x1, ·) - g_R(x1, ·)|` over `B_R`.
    pub green_preservation: f64,
    /// `Σ_{V1 ∩ B_R} g̃_R m̃`
    pub rescaled_mass_v1: f64,
    /// `Σ_{B_R} g̃_R m̃`
    pub rescaled_mass: f64,
    /// `Σ_{V1 ∩ B_R} g_R m`, the same sum without rescaling.
    pub unscaled_mass_v1: f64,
    /// `m(V1 ∩ int B_R)`: there `λ² g_R ≥ 1`.
    pub minorant: f64,
    /// `m(V1 ∩ B_R)`
    pub v1_volume: f64,
    pub minorant_holds: bool,
}

fn volume_profile(g: &FiniteGraph, root: VertexId, radius: usize) -> Result<Vec<f64>> {
    let dec = g.sphere_decompose(root)?;
    let mut acc = Compensated::default();
    Ok((0..=radius)
        .map(|r| {
            if r <= dec.max_radius() {
                for &x in dec.sphere(r) {
                    acc.add(g.measure(x));
                }
            }
            acc.value()
        })
        .collect())
}

/// Glues `m1` (at its root) to the model `m2` (at its root) by a unit edge and rescales
/// the measure on `M1` so that `Σ_{V1} g̃ m̃ ≥ m(V1)`.
pub fn build_example1(m1: &GraphSpec, m2: &RadialModel, radius: usize) -> Result<(GraphSpec, Example1Report)> {
    if radius < 2 {
        return Err(Error::Precondition("R must be at least 2".into()));
    }
    let c = classify(m2, DEFAULT_N_MAX, &[])?;
    if c.summary.stochastically_complete != Answer::No {
        return Err(Error::Precondition(format!(
            "{} is not certified stochastically incomplete",
            m2.label()
        )));
    }
    let g1 = m1.materialize(radius)?;
    let root1 = g1.find(&m1.root()).expect("root is materialized");
    let m1_volume = volume_profile(&g1, root1, radius)?;
    let radii: Vec<f64> = (1..=radius).map(|r| r as f64).collect();
    let m1_volume_growth = classify_growth(&radii, &m1_volume[1..]);
    if !m1_volume_growth.is_unbounded() {
        return Err(Error::Precondition(format!(
            "no evidence of infinite volume for M1: balls grow as {m1_volume_growth}"
        )));
    }

    let parts1 = m1.parts();
    let in_v1 = move |l: &Label| l.part() < parts1;
    let glued = GraphSpec::glue(m1.clone(), GraphSpec::Model(m2.clone()), m1.root(), Label::grid(0, 0), 1.0)?;
    let x1 = glued.root();
    let g = glued.materialize(radius)?;
    let center = g.find(&x1).expect("root is materialized");
    let sys = BallSystem::new(&g, center, radius, SolverMode::Auto)?;
    let green = sys.green_values(center)?;
    let mut values = std::collections::HashMap::new();
    for &x in sys.system.interior() {
        let l = g.label(x);
        if in_v1(&l) {
            values.insert(l, (1.0 / green[x.index()]).max(1.0));
        }
    }
    let (lambda_sq_min, lambda_sq_max) = values
        .values()
        .fold((1.0f64, 1.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    let spec = GraphSpec::conformal(glued, LambdaSq::Table { values, default: 1.0 });

    let gt = spec.materialize(radius)?;
    let ct = gt.find(&x1).expect("root is materialized");
    let sys_t = BallSystem::new(&gt, ct, radius, SolverMode::Auto)?;
    let green_t = sys_t.green_values(ct)?;
    let mut preservation: f64 = 0.0;
    let (mut mass_v1, mut mass, mut plain_v1) = (Compensated::default(), Compensated::default(), Compensated::default());
    let (mut minorant, mut v1_volume) = (Compensated::default(), Compensated::default());
    let interior_t = gt.mask(sys_t.system.interior());
    for y in sys_t.ball.vertices() {
        let l = gt.label(y);
        let yo = g.find(&l).expect("same vertex set");
        let (gv, gtv) = (green[yo.index()], green_t[y.index()]);
        preservation = preservation.max((gv - gtv).abs());
        let w = gtv * gt.measure(y);
        mass.add(w);
        if in_v1(&l) {
            mass_v1.add(w);
            plain_v1.add(gv * g.measure(yo));
            v1_volume.add(g.measure(yo));
            if interior_t[y.index()] {
                minorant.add(g.measure(yo));
            }
        }
    }
    let (rescaled_mass_v1, minorant) = (mass_v1.value(), minorant.value());
    let report = Example1Report {
        radius,
        m1_volume,
        m1_volume_growth,
        m2_series: c.stochastically_complete.verdict,
        lambda_sq_min,
        lambda_sq_max,
        green_preservation: preservation,
        rescaled_mass_v1,
        rescaled_mass: mass.value(),
        unscaled_mass_v1: plain_v1.value(),
        minorant,
        v1_volume: v1_volume.value(),
        minorant_holds: rescaled_mass_v1 >= minorant - CERTIFY_TOL,
    };
    Ok((spec, report))
}

fn sphere_sizes(sizes: &Sequence, upto: usize) -> Result<Vec<u64>> {
    let m = RadialModel::antitree(sizes.clone());
    (0..=upto).map(|r| m.sphere_count(r).expect("antitree has counts")).collect()
}

/// Quotient of the rescaled antitree ball `B_R` by the permutations of each `S_r \ γ`.
/// `λ²` must be constant on every such class.
pub fn lumped_antitree(sizes: &Sequence, radius: usize, lambda_sq: &LambdaSq) -> Result<FiniteGraph> {
    let n = sphere_sizes(sizes, radius)?;
    if n[0] != 1 {
        return Err(Error::Precondition("an antitree root sphere has one vertex".into()));
    }
    let mut b = GraphBuilder::new();
    let mut ray = Vec::with_capacity(radius + 1);
    let mut rest: Vec<Option<VertexId>> = Vec::with_capacity(radius + 1);
    for r in 0..=radius {
        let lg = Label::grid(r as u32, 0);
        let v = b.add_vertex(lg, lambda_sq.eval(&lg))?;
        ray.push(v);
        let class = if n[r] > 1 {
            let lr = Label::grid(r as u32, 1);
            let s = lambda_sq.eval(&lr);
            // every other class member must carry the same factor
            for i in 2..n[r] {
                let li = Label::grid(r as u32, i);
                if lambda_sq.eval(&li) != s {
                    return Err(Error::Precondition(format!(
                        "conformal factor is not constant on S_{r} off the ray ({li})"
                    )));
                }
            }
            Some(b.add_vertex(lr, s * (n[r] - 1) as f64)?)
        } else {
            None
        };
        rest.push(class);
        if r == radius {
            b.set_frontier(v);
            if let Some(c) = class {
                b.set_frontier(c);
            }
        }
    }
    for r in 0..radius {
        let (a, c) = ((n[r] - 1) as f64, (n[r + 1] - 1) as f64);
        b.add_edge(ray[r], ray[r + 1], 1.0)?;
        if let Some(next) = rest[r + 1] {
            b.add_edge(ray[r], next, c)?;
        }
        if let Some(cur) = rest[r] {
            b.add_edge(cur, ray[r + 1], a)?;
            if let Some(next) = rest[r + 1] {
                b.add_edge(cur, next, a * c)?;
            }
        }
    }
    b.build()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionCheck {
    /// Holds for every index by a closed form.
    Certified,
    /// Holds on the scanned indices only.
    RangeChecked { upto: usize },
    Fails,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OmoriYauReport {
    pub radius: usize,
    pub epsilon: f64,
    pub n: usize,
    /// `Σ_{l<n} a_l`
    pub alpha: f64,
    /// `Σ_l a_l` and the certified error of this value.
    pub f_star: f64,
    pub f_star_error: f64,
    /// `a_l = |B_l| / (|S_l| |S_{l+1}|)` for `l ≤ R`.
    pub a: Vec<f64>,
    /// `-1 + 3ε < 0`
    pub condition_1: bool,
    /// `a_r - a_{r-1} < ε` for `r ≥ n - 1`
    pub condition_2: ConditionCheck,
    /// `f* - Σ_{l ≤ n-2} a_l < ε`
    pub condition_3: bool,
    /// The checked set: every `x ∉ γ` with `n - 1 ≤ r(x) ≤ R`.
    pub omega_radii: (usize, usize),
    pub omega_vertices: u64,
    /// Vertices of `{f > α}` in `B_R`; all lie in the checked set.
    pub superlevel_vertices: u64,
    pub max_laplacian_on_omega: f64,
    pub max_laplacian_at: Label,
    /// `-1 + 3ε`
    pub bound: f64,
    /// Every evaluated `f` is at most `f*`.
    pub f_bounded: bool,
    pub certified: bool,
}

/// The rescaled antitree together with its Omori–Yau certificate.
#[derive(Clone, Debug)]
pub struct Example2 {
    pub sizes: Sequence,
    pub radius: usize,
    /// `g_R(x0, x_r)` for `r ≤ R`.
    pub green_on_ray: Vec<f64>,
    /// `λ²(x_r)` for `r ≤ R`.
    pub lambda_sq_on_ray: Vec<f64>,
    pub spec: GraphSpec,
    pub report: OmoriYauReport,
}

/// The ray `γ`: the first vertex `(r, 0)` of every sphere.
pub fn on_ray(label: &Label) -> bool {
    matches!(label, Label::Grid { part: 0, index: 0, .. })
}

fn feasible_lower(a: &[f64], f_star_hi: f64, n: usize, radius: usize) -> f64 {
    let head: f64 = a[..n - 1].iter().sum();
    let tail = f_star_hi - head;
    let mut sup = f64::NEG_INFINITY;
    for r in (n - 1).max(1)..=radius {
        sup = sup.max(a[r] - a[r - 1]);
    }
    tail.max(sup).max(0.0)
}

fn shifted_cube(sizes: &Sequence) -> bool {
    *sizes == Sequence::shifted_power(3.0)
}

/// Builds the rescaled antitree with sphere sizes `sizes` and certifies on `B_R` that
/// the Omori–Yau test function has `Δ̃f ≤ -1 + 3ε < 0` on `{f > α}`. `choice` fixes
/// `(ε, n)`; otherwise the smallest feasible `n` is taken with `ε` in the middle of its
/// feasible interval.
pub fn build_example2(sizes: &Sequence, radius: usize, choice: Option<(f64, usize)>) -> Result<Example2> {
    if radius < 2 {
        return Err(Error::Precondition("R must be at least 2".into()));
    }
    let model = RadialModel::antitree(sizes.clone());
    let c = classify(&model, DEFAULT_N_MAX, &[])?;
    let (f_star, f_star_error) = match c.stochastically_complete.verdict {
        Verdict::ConvergesTo { value, error, .. } if c.summary.stochastically_complete == Answer::No => (value, error),
        ref v => {
            return Err(Error::Precondition(format!(
                "the antitree {sizes} is not certified stochastically incomplete ({v:?})"
            )))
        }
    };
    let n_sz = sphere_sizes(sizes, radius + 1)?;
    let mut ball: u64 = 0;
    let a: Vec<f64> = (0..=radius)
        .map(|l| {
            ball += n_sz[l];
            ball as f64 / (n_sz[l] as f64 * n_sz[l + 1] as f64)
        })
        .collect();
    let f_hi = f_star + f_star_error;
    let third = 1.0 / 3.0;
    let (epsilon, n) = match choice {
        Some(p) => p,
        None => {
            let n = (2..=50.min(radius))
                .find(|&n| feasible_lower(&a, f_hi, n, radius) < third)
                .ok_or_else(|| {
                    Error::Precondition(format!(
                        "no feasible (epsilon, n) with n ≤ {}; lower bounds {:?}",
                        50.min(radius),
                        (2..=50.min(radius).min(6)).map(|n| feasible_lower(&a, f_hi, n, radius)).collect::<Vec<_>>()
                    ))
                })?;
            (0.5 * (feasible_lower(&a, f_hi, n, radius) + third), n)
        }
    };
    if n < 2 || n > radius {
        return Err(Error::Precondition(format!("n = {n} must satisfy 2 ≤ n ≤ R")));
    }
    let condition_1 = -1.0 + 3.0 * epsilon < 0.0 && epsilon > 0.0;
    let closed_form = shifted_cube(sizes)
        && a
            .iter()
            .enumerate()
            .all(|(l, &v)| (v - 0.25 / ((l + 1) as f64 * (l + 2) as f64)).abs() <= 1e-12 * v);
    let range_ok = ((n - 1).max(1)..=radius).all(|r| a[r] - a[r - 1] < epsilon);
    let condition_2 = match (range_ok, closed_form) {
        (false, _) => ConditionCheck::Fails,
        // a_l = 1/(4(l+1)(l+2)) is decreasing
        (true, true) => ConditionCheck::Certified,
        (true, false) => ConditionCheck::RangeChecked { upto: radius },
    };
    let head: f64 = a[..n - 1].iter().sum();
    let condition_3 = f_hi - head < epsilon;
    if !(condition_1 && condition_2 != ConditionCheck::Fails && condition_3) {
        return Err(Error::Precondition(format!(
            "(epsilon, n) = ({epsilon}, {n}) violates the conditions: (1) {condition_1}, (2) {condition_2:?}, (3) {condition_3}"
        )));
    }
    let alpha: f64 = a[..n].iter().sum();

    // radial Green function of the base antitree from the quotient half-line
    let q = model.quotient(radius)?;
    let sys = BallSystem::new(&q, VertexId(0), radius, SolverMode::Auto)?;
    let gq = sys.green_values(VertexId(0))?;
    let green_on_ray: Vec<f64> = (0..=radius)
        .map(|r| gq[q.find(&Label::grid(r as u32, 0)).unwrap().index()])
        .collect();
    // beyond int B_R, λ² = ∂B(r) = 1/g_{r+1}(x0, x_r) ≤ 1/g(x0, x_r)
    let inner: Vec<f64> = green_on_ray[..radius].iter().map(|g| (1.0 / g).max(1.0)).collect();
    let sizes_for_lambda = sizes.clone();
    let inner_for_lambda = inner.clone();
    let lambda = LambdaSq::Fn(Arc::new(move |l: &Label| match l {
        Label::Grid { part: 0, shell, index: 0 } => {
            let r = *shell as usize;
            if r < inner_for_lambda.len() {
                inner_for_lambda[r]
            } else {
                let s = |k| sizes_for_lambda.value(k).unwrap_or(1.0);
                (s(r) * s(r + 1)).max(1.0)
            }
        }
        _ => 1.0,
    }));
    let lambda_sq_on_ray: Vec<f64> = (0..=radius).map(|r| lambda.eval(&Label::grid(r as u32, 0))).collect();
    let spec = GraphSpec::conformal(GraphSpec::Antitree(sizes.clone()), lambda.clone());

    // f is constant on S_r \ γ and on the ray vertex of S_r
    let prefix: Vec<f64> = std::iter::once(0.0)
        .chain(a.iter().scan(Compensated::default(), |acc, &v| {
            acc.add(v);
            Some(acc.value())
        }))
        .collect();
    let f_off = |r: usize| prefix[r];
    let f_ray = |r: usize| if r + 1 >= n { f_star - epsilon } else { 0.0 };
    let f_of = |l: &Label| -> f64 {
        match l {
            Label::Grid { shell, index, .. } => {
                if *index == 0 {
                    f_ray(*shell as usize)
                } else {
                    f_off(*shell as usize)
                }
            }
            Label::Named { .. } => f64::NAN,
        }
    };
    // Σ_{y ∈ S_s} (f(x) - f(y)) from the sphere aggregates
    let pull = |fx: f64, s: usize| -> f64 {
        (n_sz[s] - 1) as f64 * (fx - f_off(s)) + (fx - f_ray(s))
    };
    let mut worst = f64::NEG_INFINITY;
    let mut worst_at = Label::grid(0, 0);
    let mut count = 0u64;
    let mut superlevel = 0u64;
    let mut f_bounded = true;
    let first = (n - 1).max(1);
    for r in first..=radius {
        for i in 1..n_sz[r] {
            let l = Label::grid(r as u32, i);
            let fx = f_of(&l);
            let lap = (pull(fx, r - 1) + pull(fx, r + 1)) / lambda.eval(&l);
            count += 1;
            if fx > alpha {
                superlevel += 1;
            }
            f_bounded &= fx <= f_star + f_star_error;
            if lap > worst {
                worst = lap;
                worst_at = l;
            }
        }
        f_bounded &= f_ray(r) <= f_star;
    }
    for r in 0..first {
        f_bounded &= f_ray(r) <= f_star && f_off(r) <= f_star + f_star_error;
        if f_off(r) > alpha && n_sz[r] > 1 {
            superlevel += n_sz[r] - 1;
        }
    }
    let bound = -1.0 + 3.0 * epsilon;
    let certified = worst <= bound + 1e-10 && worst < 0.0 && f_bounded;
    let report = OmoriYauReport {
        radius,
        epsilon,
        n,
        alpha,
        f_star,
        f_star_error,
        a,
        condition_1,
        condition_2,
        condition_3,
        omega_radii: (first, radius),
        omega_vertices: count,
        superlevel_vertices: superlevel,
        max_laplacian_on_omega: worst,
        max_laplacian_at: worst_at,
        bound,
        f_bounded,
        certified,
    };
    Ok(Example2 {
        sizes: sizes.clone(),
        radius,
        green_on_ray,
        lambda_sq_on_ray,
        spec,
        report,
    })
}

impl Example2 {
    /// The Omori–Yau test function at `label`.
    pub fn test_function(&self, label: &Label) -> f64 {
        let rep = &self.report;
        match label {
            Label::Grid { shell, index, .. } => {
                let r = *shell as usize;
                if *index == 0 {
                    if r + 1 >= rep.n {
                        rep.f_star - rep.epsilon
                    } else {
                        0.0
                    }
                } else {
                    rep.a[..r].iter().sum()
                }
            }
            Label::Named { .. } => f64::NAN,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct L1Row {
    pub radius: usize,
    /// `Σ_{B_R} g̃_R(x0, ·) m̃`
    pub partial_sum: f64,
    /// `Σ_{γ ∩ int B_R} m`
    pub minorant: f64,
    pub holds: bool,
    /// Solved on the sphere-symmetry quotient.
    pub lumped: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct L1Certificate {
    pub rows: Vec<L1Row>,
    pub growth: Growth,
    pub all_hold: bool,
}

fn base_measure(spec: &GraphSpec, g: &FiniteGraph, y: VertexId) -> f64 {
    match spec {
        GraphSpec::Conformal { lambda_sq, .. } => g.measure(y) / lambda_sq.eval(&g.label(y)),
        _ => g.measure(y),
    }
}

/// Partial sums `Σ_{B_R} g̃_R(x0, ·) m̃` of a conformally rescaled graph over the radius
/// schedule, against the minorant `Σ_{γ ∩ int B_R} m` where `γ` is given by `ray`.
pub fn certify_l1_after_rescale(
    spec: &GraphSpec,
    x0: &Label,
    schedule: &[usize],
    ray: &dyn Fn(&Label) -> bool,
) -> Result<L1Certificate> {
    let GraphSpec::Conformal { base, lambda_sq } = spec else {
        return Err(Error::Precondition("expected a conformally rescaled spec".into()));
    };
    let mut rows = Vec::with_capacity(schedule.len());
    for &radius in schedule {
        let lumped = match (base.as_ref(), *x0 == spec.root()) {
            (GraphSpec::Antitree(sizes), true) => match lumped_antitree(sizes, radius, lambda_sq) {
                Ok(g) => Some((g, sizes.clone())),
                Err(Error::Precondition(_)) => None,
                Err(e) => return Err(e),
            },
            _ => None,
        };
        let row = if let Some((g, sizes)) = lumped {
            let sys = BallSystem::new(&g, VertexId(0), radius, SolverMode::Auto)?;
            let gv = sys.green_values(VertexId(0))?;
            let n_sz = sphere_sizes(&sizes, radius)?;
            let mut sum = Compensated::default();
            let mut minorant = Compensated::default();
            let interior = g.mask(sys.system.interior());
            for y in sys.ball.vertices() {
                sum.add(gv[y.index()] * g.measure(y));
                let l = g.label(y);
                if interior[y.index()] {
                    // class (r, 1) stands for |S_r| - 1 vertices of base measure 1
                    let members = if on_ray(&l) { 1 } else { n_sz[l.shell().unwrap() as usize] - 1 };
                    for i in 0..members {
                        let li = if on_ray(&l) { l } else { Label::grid(l.shell().unwrap(), i + 1) };
                        if ray(&li) {
                            minorant.add(1.0);
                        }
                    }
                }
            }
            (sum.value(), minorant.value(), true)
        } else {
            let g = spec.ball_around(x0, radius)?;
            let c = g.find(x0).ok_or_else(|| Error::UnknownVertex(x0.to_string()))?;
            let sys = BallSystem::new(&g, c, radius, SolverMode::Auto)?;
            let gv = sys.green_values(c)?;
            let mut sum = Compensated::default();
            let mut minorant = Compensated::default();
            let interior = g.mask(sys.system.interior());
            for y in sys.ball.vertices() {
                sum.add(gv[y.index()] * g.measure(y));
                if interior[y.index()] && ray(&g.label(y)) {
                    minorant.add(base_measure(spec, &g, y));
                }
            }
            (sum.value(), minorant.value(), false)
        };
        rows.push(L1Row {
            radius,
            partial_sum: row.0,
            minorant: row.1,
            holds: row.0 >= row.1 - CERTIFY_TOL,
            lumped: row.2,
        });
    }
    let radii: Vec<f64> = rows.iter().map(|r| r.radius as f64).collect();
    let sums: Vec<f64> = rows.iter().map(|r| r.partial_sum).collect();
    Ok(L1Certificate {
        all_hold: rows.iter().all(|r| r.holds),
        growth: classify_growth(&radii, &sums),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube() -> Sequence {
        Sequence::shifted_power(3.0)
    }

    #[test]
    fn example2_cubic_antitree_parameters() {
        let ex = build_example2(&cube(), 20, Some((0.3, 2))).unwrap();
        let r = &ex.report;
        assert!((r.alpha - 1.0 / 6.0).abs() < 1e-15);
        assert!((r.f_star - 0.25).abs() < 1e-9);
        assert_eq!(r.condition_2, ConditionCheck::Certified);
        assert!(r.certified);
        assert!(r.max_laplacian_on_omega <= -0.1);
        let auto = build_example2(&cube(), 20, None).unwrap();
        assert_eq!(auto.report.n, 2);
        assert!(auto.report.epsilon > 0.125 && auto.report.epsilon < 1.0 / 3.0);
    }

    #[test]
    fn complete_antitree_is_rejected() {
        assert!(matches!(
            build_example2(&Sequence::shifted_power(1.0), 10, None),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn lumped_quotient_matches_full_ball() {
        let ex = build_example2(&cube(), 4, Some((0.3, 2))).unwrap();
        let full = ex.spec.materialize(4).unwrap();
        let sys = BallSystem::new(&full, VertexId(0), 4, SolverMode::Direct).unwrap();
        let gv = sys.green_values(VertexId(0)).unwrap();
        let total: f64 = sys.ball.vertices().iter().map(|&y| gv[y.index()] * full.measure(y)).sum();
        let cert = certify_l1_after_rescale(&ex.spec, &Label::grid(0, 0), &[4], &on_ray).unwrap();
        assert!(cert.rows[0].lumped);
        assert!((cert.rows[0].partial_sum - total).abs() < 1e-10 * total);
        assert_eq!(cert.rows[0].minorant, 4.0);
    }

    #[test]
    fn sweep_matches_direct_laplacian() {
        let radius = 5;
        let ex = build_example2(&cube(), radius, Some((0.3, 2))).unwrap();
        let g = ex.spec.materialize(radius + 1).unwrap();
        let f: Vec<f64> = g.vertices().map(|v| ex.test_function(&g.label(v))).collect();
        let dec = g.sphere_decompose(VertexId(0)).unwrap();
        let mut worst = f64::NEG_INFINITY;
        for v in g.vertices() {
            let r = dec.radius_of(v);
            if r >= 1 && r <= radius && !on_ray(&g.label(v)) {
                worst = worst.max(g.laplacian_at(&f, v));
            }
        }
        assert!((worst - ex.report.max_laplacian_on_omega).abs() < 1e-12);
    }

    #[test]
    fn example1_glued_half_line() {
        let half_line = GraphSpec::Model(RadialModel::new(Sequence::Const(1.0), Sequence::Const(1.0)));
        let m2 = RadialModel::new(Sequence::Const(1.0), cube());
        let (_, rep) = build_example1(&half_line, &m2, 20).unwrap();
        assert!(rep.green_preservation <= 1e-9);
        assert_eq!(rep.minorant, 20.0);
        assert_eq!(rep.v1_volume, 21.0);
        assert!(rep.rescaled_mass_v1 >= rep.v1_volume);
        assert!(rep.unscaled_mass_v1 < rep.rescaled_mass_v1);
        let complete = RadialModel::new(Sequence::Const(1.0), Sequence::shifted_power(1.0));
        assert!(build_example1(&half_line, &complete, 10).is_err());
    }
}
