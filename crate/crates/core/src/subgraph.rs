//! Dirichlet problems on infinite subgraphs `N = (W, b|_W, m|_W)` and ends.
//!
//! `int N` is the set of vertices of `W` without neighbours outside `W`, `∂N = W \ int N`.
//! The exhaustion is `Ω_R = W ∩ B_R` around the ambient root, with zero data on
//! `∂N ∩ B_R` and on the frontier cut `W ∩ S_R`.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dirichlet::{Ball, BallSystem, DirichletSystem, ExitTable, GreenTable, VertexTable};
use crate::error::{Error, Result};
use crate::fit::{classify_growth, Growth};
use crate::generators::GraphSpec;
use crate::graph::{FiniteGraph, Label, VertexId};
use crate::model::Compensated;
use crate::solver::SolverMode;

/// Tolerance of the identity, domination and additivity checks.
pub const SUBGRAPH_TOL: f64 = 1e-10;

type Member = Arc<dyn Fn(&Label) -> bool + Send + Sync>;

#[derive(Clone)]
pub struct SubgraphProblem {
    pub ambient: GraphSpec,
    pub member: Member,
}

impl fmt::Debug for SubgraphProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SubgraphProblem").field("ambient", &self.ambient).finish_non_exhaustive()
    }
}

impl SubgraphProblem {
    pub fn new(ambient: GraphSpec, member: impl Fn(&Label) -> bool + Send + Sync + 'static) -> Self {
        SubgraphProblem {
            ambient,
            member: Arc::new(member),
        }
    }

    /// `W = V`
    pub fn whole(ambient: GraphSpec) -> Self {
        Self::new(ambient, |_| true)
    }

    /// `W = V \ K`
    pub fn complement(ambient: GraphSpec, k: &[Label]) -> Self {
        let k: HashSet<Label> = k.iter().copied().collect();
        Self::new(ambient, move |l| !k.contains(l))
    }

    /// `W` given as a finite label set.
    pub fn finite(ambient: GraphSpec, w: &[Label]) -> Self {
        let w: HashSet<Label> = w.iter().copied().collect();
        Self::new(ambient, move |l| w.contains(l))
    }

    pub fn contains(&self, l: &Label) -> bool {
        (self.member)(l)
    }
}

/// `Ω_R` on a materialized ball.
#[derive(Debug)]
pub struct Exhaustion {
    pub graph: FiniteGraph,
    pub ball: Ball,
    /// `W ∩ B_R`
    pub omega: Vec<VertexId>,
    pub interior: Vec<VertexId>,
    pub boundary: Vec<VertexId>,
    /// Number of connected components of `Ω_R`.
    pub components: usize,
}

impl Exhaustion {
    pub fn new(p: &SubgraphProblem, radius: usize) -> Result<Self> {
        if radius == 0 {
            return Err(Error::Precondition("radius must be at least 1".into()));
        }
        let graph = p.ambient.materialize(radius)?;
        let center = graph.find(&p.ambient.root()).expect("root is materialized");
        let ball = Ball::new(&graph, center, radius)?;
        let omega: Vec<VertexId> = ball.vertices().into_iter().filter(|&v| p.contains(&graph.label(v))).collect();
        let (interior, boundary) = graph.boundary_split(&omega);
        let components = graph.components(&graph.mask(&omega)).len();
        Ok(Exhaustion {
            graph,
            ball,
            omega,
            interior,
            boundary,
            components,
        })
    }

    pub fn system(&self) -> Result<DirichletSystem<'_>> {
        if self.interior.is_empty() {
            return Err(Error::Precondition("int Ω_R is empty".into()));
        }
        DirichletSystem::new(&self.graph, &self.interior, &self.boundary, SolverMode::Auto)
    }

    fn table(&self, values: &[f64]) -> VertexTable {
        let mut ids = self.omega.clone();
        ids.sort_by_key(|&v| (self.ball.dec.radius_of(v), self.graph.label(v)));
        VertexTable::new(
            ids.iter().map(|&v| self.graph.label(v)).collect(),
            ids.iter().map(|&v| self.ball.dec.radius_of(v)).collect(),
            ids.iter().map(|&v| values[v.index()]).collect(),
        )
    }

    fn interior_vertex(&self, x0: &Label) -> Result<VertexId> {
        let x = self.graph.find(x0).ok_or_else(|| Error::UnknownVertex(x0.to_string()))?;
        if self.interior.binary_search(&x).is_err() {
            let why = if self.omega.contains(&x) { "lies on ∂Ω_R" } else { "is not in W" };
            return Err(Error::Precondition(format!("{x0} {why}")));
        }
        Ok(x)
    }
}

/// `ᴰg_R(x0, ·)` on `Ω_R`.
pub fn dirichlet_green_subgraph(p: &SubgraphProblem, x0: &Label, radius: usize) -> Result<GreenTable> {
    let ex = Exhaustion::new(p, radius)?;
    let x = ex.interior_vertex(x0)?;
    let sol = ex.system()?.green(x)?;
    Ok(GreenTable {
        source: *x0,
        radius,
        table: ex.table(&sol.values),
        residual: sol.residual,
    })
}

/// `ᴰE_R` on `Ω_R`.
pub fn dirichlet_exit(p: &SubgraphProblem, radius: usize) -> Result<ExitTable> {
    let ex = Exhaustion::new(p, radius)?;
    let sol = ex.system()?.exit()?;
    Ok(ExitTable {
        radius,
        table: ex.table(&sol.values),
        residual: sol.residual,
    })
}

/// `max_x |ᴰE_R(x) - Σ_y ᴰg_R(x, y) m(y)|` over `int Ω_R`.
pub fn exit_green_identity(p: &SubgraphProblem, radius: usize) -> Result<f64> {
    let ex = Exhaustion::new(p, radius)?;
    let sys = ex.system()?;
    let e = sys.exit()?.values;
    let g = &ex.graph;
    // ᴰg_R is symmetric, so Σ_y ᴰg_R(x, y) m(y) collects the solves with source y
    let mut sums = vec![Compensated::default(); g.len()];
    for &y in &ex.interior {
        let col = sys.green(y)?.values;
        for &x in &ex.interior {
            sums[x.index()].add(col[x.index()] * g.measure(y));
        }
    }
    Ok(ex
        .interior
        .iter()
        .map(|x| (e[x.index()] - sums[x.index()].value()).abs())
        .fold(0.0, f64::max))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DominationReport {
    pub radius: usize,
    /// `min_{Ω_R} (E_R - ᴰE_R)`
    pub min_slack: f64,
    pub at: Label,
    pub holds: bool,
}

/// Checks `E_R ≥ ᴰE_R` on `Ω_R`.
pub fn domination_check(p: &SubgraphProblem, radius: usize) -> Result<DominationReport> {
    let ex = Exhaustion::new(p, radius)?;
    let de = ex.system()?.exit()?.values;
    let sys = BallSystem::new(&ex.graph, ex.ball.center, radius, SolverMode::Auto)?;
    let e = sys.exit_values()?;
    let mut min_slack = f64::INFINITY;
    let mut at = ex.graph.label(ex.ball.center);
    for &x in &ex.omega {
        let s = e[x.index()] - de[x.index()];
        if s < min_slack {
            min_slack = s;
            at = ex.graph.label(x);
        }
    }
    Ok(DominationReport {
        radius,
        min_slack,
        at,
        holds: min_slack >= -SUBGRAPH_TOL,
    })
}

/// Growth of `Σ ᴰg_R(x0, ·) m` on `N` and of `Σ g_R(x0, ·) m` on the ambient graph over
/// the schedule.
pub fn perturbation_trend(p: &SubgraphProblem, x0: &Label, schedule: &[usize]) -> Result<(Growth, Growth)> {
    let mut sub = Vec::with_capacity(schedule.len());
    let mut full = Vec::with_capacity(schedule.len());
    for &r in schedule {
        let ex = Exhaustion::new(p, r)?;
        let x = ex.interior_vertex(x0)?;
        let dg = ex.system()?.green(x)?.values;
        let sys = BallSystem::new(&ex.graph, ex.ball.center, r, SolverMode::Auto)?;
        let g = sys.green_values(x)?;
        let mass = |vals: &[f64], set: &[VertexId]| {
            let mut acc = Compensated::default();
            for &y in set {
                acc.add(vals[y.index()] * ex.graph.measure(y));
            }
            acc.value()
        };
        sub.push(mass(&dg, &ex.omega));
        full.push(mass(&g, &ex.ball.vertices()));
    }
    let radii: Vec<f64> = schedule.iter().map(|&r| r as f64).collect();
    Ok((classify_growth(&radii, &sub), classify_growth(&radii, &full)))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EndsReport {
    pub k: Vec<Label>,
    pub radius: usize,
    pub radius2: usize,
    /// Components of `B_R \ K` as label lists.
    pub components: Vec<Vec<Label>>,
    /// Per component: touches the frontier of `B_R`.
    pub unbounded: Vec<bool>,
    pub unbounded_count: usize,
    /// Components and flags agree with those at `R2`; otherwise the count is inconclusive.
    pub stable: bool,
}

fn split_ends(spec: &GraphSpec, k: &HashSet<Label>, radius: usize) -> Result<(FiniteGraph, Vec<Vec<VertexId>>, Vec<bool>)> {
    let g = spec.materialize(radius)?;
    let mask: Vec<bool> = g.vertices().map(|v| !k.contains(&g.label(v))).collect();
    let comps = g.components(&mask);
    let flags = comps.iter().map(|c| c.iter().any(|&v| g.is_frontier(v))).collect();
    Ok((g, comps, flags))
}

/// Components of `B_R \ K`, flagged unbounded when they reach the frontier, and
/// re-derived at `R2` to detect merging beyond the horizon.
pub fn ends(spec: &GraphSpec, k: &[Label], radius: usize, radius2: usize) -> Result<EndsReport> {
    if radius2 <= radius {
        return Err(Error::Precondition("R2 must exceed R".into()));
    }
    let g0 = spec.materialize(radius)?;
    let root = g0.find(&spec.root()).expect("root is materialized");
    let dec = g0.sphere_decompose(root)?;
    for l in k {
        let v = g0.find(l).ok_or_else(|| Error::UnknownVertex(l.to_string()))?;
        if dec.radius_of(v) + 2 > radius {
            return Err(Error::Precondition(format!("{l} is not in B_(R-2)")));
        }
    }
    let kset: HashSet<Label> = k.iter().copied().collect();
    let (g, comps, flags) = split_ends(spec, &kset, radius)?;
    let (g2, comps2, flags2) = split_ends(spec, &kset, radius2)?;
    let mut owner = vec![usize::MAX; g2.len()];
    for (i, c) in comps2.iter().enumerate() {
        for &v in c {
            owner[v.index()] = i;
        }
    }
    let mut hit = vec![0usize; comps2.len()];
    let mut stable = true;
    for (c, &unbounded) in comps.iter().zip(&flags) {
        let j = owner[g2.find(&g.label(c[0])).expect("balls are nested").index()];
        hit[j] += 1;
        // a bounded component must reappear unchanged
        stable &= flags2[j] == unbounded && (unbounded || comps2[j].len() == c.len());
    }
    stable &= hit.iter().all(|&h| h <= 1) && comps.len() == comps2.len();
    let components: Vec<Vec<Label>> = comps.iter().map(|c| c.iter().map(|&v| g.label(v)).collect()).collect();
    Ok(EndsReport {
        k: k.to_vec(),
        radius,
        radius2,
        unbounded_count: flags.iter().filter(|&&f| f).count(),
        components,
        unbounded: flags,
        stable,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdditivityReport {
    pub radius: usize,
    pub pieces: usize,
    /// `max |ᴰE_{G \ K} - Σ_i ᴰE_{F_i}|` over `B_R \ K`.
    pub max_discrepancy: f64,
    pub holds: bool,
}

/// Compares `ᴰE` on `W = V \ K` with the sum of `ᴰE` on the components of `B_R \ K`,
/// each extended by zero.
pub fn end_additivity_check(spec: &GraphSpec, k: &[Label], radius: usize) -> Result<AdditivityReport> {
    let kset: HashSet<Label> = k.iter().copied().collect();
    let (g, comps, _) = split_ends(spec, &kset, radius)?;
    let joint = dirichlet_exit(&SubgraphProblem::complement(spec.clone(), k), radius)?;
    let pieces: Vec<Vec<Label>> = comps.iter().map(|c| c.iter().map(|&v| g.label(v)).collect()).collect();
    let parts: Vec<Option<ExitTable>> = pieces
        .par_iter()
        .map(|w| match dirichlet_exit(&SubgraphProblem::finite(spec.clone(), w), radius) {
            Ok(t) => Ok(Some(t)),
            // a piece without interior contributes zero
            Err(Error::Precondition(_)) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    for (l, _, v) in joint.table.rows() {
        let sum: f64 = parts.iter().flatten().filter_map(|t| t.table.get(&l)).sum();
        worst = worst.max((v - sum).abs());
    }
    Ok(AdditivityReport {
        radius,
        pieces: pieces.len(),
        max_discrepancy: worst,
        holds: worst <= SUBGRAPH_TOL,
    })
}

/// Test fixtures shared with the integration suites.
pub mod fixtures {
    use crate::generators::{GraphSpec, RadialModel};
    use crate::graph::Label;
    use crate::sequence::Sequence;

    pub fn half_line() -> GraphSpec {
        GraphSpec::Model(RadialModel::new(Sequence::Const(1.0), Sequence::Const(1.0)).named("halfline_unit"))
    }

    /// Two half-lines whose roots are joined by a unit edge; `K = {0.0}` leaves two ends.
    pub fn two_half_lines() -> GraphSpec {
        GraphSpec::glue(half_line(), half_line(), Label::grid(0, 0), Label::grid(0, 0), 1.0).unwrap()
    }

    /// Three half-lines at the hub `0.0`.
    pub fn three_rays() -> GraphSpec {
        GraphSpec::glue(two_half_lines(), half_line(), Label::grid(0, 0), Label::grid(0, 0), 1.0).unwrap()
    }
}
