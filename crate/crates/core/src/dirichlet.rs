//! Dirichlet problems on finite vertex sets: Green kernels, mean exit times and their
//! monotone limits along exhaustions.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{classify_growth, Growth};
use crate::generators::GraphSpec;
use crate::graph::{FiniteGraph, Label, SphereDecomposition, VertexId};
use crate::solver::{LinearSolver, SolverMode, SymMatrix};

const NONE: u32 = u32::MAX;

/// Solution of a Dirichlet problem, indexed by vertex of the graph it was solved on.
/// Vertices outside `interior ∪ boundary` hold `NaN`.
#[derive(Clone, Debug)]
pub struct DirichletSolution {
    pub values: Vec<f64>,
    pub residual: f64,
}

/// A validated and factored Dirichlet system `Δf = rhs` on `interior`, `f = bval` on
/// `boundary`. Rows are multiplied by `m(x)`, which makes the matrix symmetric.
#[derive(Debug)]
pub struct DirichletSystem<'g> {
    graph: &'g FiniteGraph,
    interior: Vec<VertexId>,
    boundary: Vec<VertexId>,
    slot: Vec<u32>,
    solver: LinearSolver,
}

impl<'g> DirichletSystem<'g> {
    pub fn new(
        graph: &'g FiniteGraph,
        interior: &[VertexId],
        boundary: &[VertexId],
        mode: SolverMode,
    ) -> Result<Self> {
        let n = graph.len();
        let mut slot = vec![NONE; n];
        let mut in_boundary = vec![false; n];
        let mut interior = interior.to_vec();
        interior.sort_unstable();
        interior.dedup();
        for &b in boundary {
            in_boundary[b.index()] = true;
        }
        for (i, &x) in interior.iter().enumerate() {
            if graph.is_frontier(x) {
                return Err(Error::InteriorTouchesFrontier(graph.label(x)));
            }
            if in_boundary[x.index()] {
                return Err(Error::Overlap(graph.label(x)));
            }
            slot[x.index()] = i as u32;
        }
        let mut rows = Vec::with_capacity(interior.len());
        for &x in &interior {
            let mut row = Vec::with_capacity(graph.neighbor_count(x) + 1);
            let mut diag = 0.0;
            for (y, w) in graph.neighbors(x) {
                diag += w;
                if slot[y.index()] != NONE {
                    row.push((slot[y.index()] as usize, -w));
                } else if !in_boundary[y.index()] {
                    return Err(Error::OpenBoundary {
                        interior: graph.label(x),
                        neighbor: graph.label(y),
                    });
                }
            }
            row.push((slot[x.index()] as usize, diag));
            rows.push(row);
        }
        let mut boundary = boundary.to_vec();
        boundary.sort_unstable();
        boundary.dedup();
        let solver = LinearSolver::new(SymMatrix::from_rows(rows), mode)?;
        Ok(DirichletSystem {
            graph,
            interior,
            boundary,
            slot,
            solver,
        })
    }

    pub fn graph(&self) -> &FiniteGraph {
        self.graph
    }

    pub fn interior(&self) -> &[VertexId] {
        &self.interior
    }

    pub fn boundary(&self) -> &[VertexId] {
        &self.boundary
    }

    pub fn contains_interior(&self, x: VertexId) -> bool {
        self.slot[x.index()] != NONE
    }

    /// The `m`-weighted Dirichlet matrix on [`interior`](Self::interior) order.
    pub fn matrix(&self) -> &SymMatrix {
        self.solver.matrix()
    }

    /// Position of `x` in the interior ordering.
    pub fn slot(&self, x: VertexId) -> Option<usize> {
        let s = self.slot[x.index()];
        (s != NONE).then_some(s as usize)
    }

    pub fn uses_direct_solver(&self) -> bool {
        self.solver.is_direct()
    }

    pub fn solve(
        &self,
        rhs: impl Fn(VertexId) -> f64,
        bval: impl Fn(VertexId) -> f64,
    ) -> Result<DirichletSolution> {
        let g = self.graph;
        let mut values = vec![f64::NAN; g.len()];
        for &b in &self.boundary {
            values[b.index()] = bval(b);
        }
        let b: Vec<f64> = self
            .interior
            .iter()
            .map(|&x| {
                let mut v = g.measure(x) * rhs(x);
                for (y, w) in g.neighbors(x) {
                    if self.slot[y.index()] == NONE {
                        v += w * values[y.index()];
                    }
                }
                v
            })
            .collect();
        let (x, residual) = if self.interior.is_empty() {
            (Vec::new(), 0.0)
        } else {
            self.solver.solve(&b)?
        };
        for (&v, xi) in self.interior.iter().zip(x) {
            values[v.index()] = xi;
        }
        Ok(DirichletSolution { values, residual })
    }

    /// `Δ_y g(x0, y) = δ_{x0}(y)/m(x0)` with zero boundary data.
    pub fn green(&self, source: VertexId) -> Result<DirichletSolution> {
        if !self.contains_interior(source) {
            return Err(Error::Precondition(format!(
                "source {} is not an interior vertex",
                self.graph.label(source)
            )));
        }
        let m0 = self.graph.measure(source);
        self.solve(|y| if y == source { 1.0 / m0 } else { 0.0 }, |_| 0.0)
    }

    /// `ΔE = 1` with zero boundary data.
    pub fn exit(&self) -> Result<DirichletSolution> {
        self.solve(|_| 1.0, |_| 0.0)
    }
}

/// Solves `Δf = rhs` on `interior`, `f = bval` on `boundary`, with the automatic solver.
pub fn solve_dirichlet(
    g: &FiniteGraph,
    interior: &[VertexId],
    boundary: &[VertexId],
    rhs: impl Fn(VertexId) -> f64,
    bval: impl Fn(VertexId) -> f64,
) -> Result<DirichletSolution> {
    DirichletSystem::new(g, interior, boundary, SolverMode::Auto)?.solve(rhs, bval)
}

/// Per-vertex values on a ball, with labels and radii for export.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VertexTable {
    pub labels: Vec<Label>,
    pub radii: Vec<usize>,
    pub values: Vec<f64>,
    #[serde(skip)]
    index: HashMap<Label, usize>,
}

impl VertexTable {
    pub fn new(labels: Vec<Label>, radii: Vec<usize>, values: Vec<f64>) -> Self {
        let index = labels.iter().enumerate().map(|(i, l)| (*l, i)).collect();
        VertexTable {
            labels,
            radii,
            values,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, label: &Label) -> Option<f64> {
        self.index.get(label).map(|&i| self.values[i])
    }

    /// Rows `(label, radius, value)` ordered by radius, then label.
    pub fn rows(&self) -> Vec<(Label, usize, f64)> {
        let mut rows: Vec<_> = (0..self.len())
            .map(|i| (self.labels[i], self.radii[i], self.values[i]))
            .collect();
        rows.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
        rows
    }

    pub(crate) fn from_ball(g: &FiniteGraph, ball: &Ball, values: &[f64]) -> Self {
        let mut ids = ball.vertices();
        ids.sort_by_key(|&v| (ball.dec.radius_of(v), g.label(v)));
        VertexTable::new(
            ids.iter().map(|&v| g.label(v)).collect(),
            ids.iter().map(|&v| ball.dec.radius_of(v)).collect(),
            ids.iter().map(|&v| values[v.index()]).collect(),
        )
    }
}

/// `g_R(source, ·)` on `B_R`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GreenTable {
    pub source: Label,
    pub radius: usize,
    pub table: VertexTable,
    pub residual: f64,
}

/// `E_R` on `B_R`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExitTable {
    pub radius: usize,
    pub table: VertexTable,
    pub residual: f64,
}

/// `B_R(center)` split into `int B_R` and `∂B_R`.
#[derive(Clone, Debug)]
pub struct Ball {
    pub center: VertexId,
    pub radius: usize,
    pub dec: SphereDecomposition,
    pub interior: Vec<VertexId>,
    pub boundary: Vec<VertexId>,
}

impl Ball {
    pub fn new(g: &FiniteGraph, center: VertexId, radius: usize) -> Result<Ball> {
        let dec = g.sphere_decompose(center)?;
        let (interior, boundary) = g.boundary_split(&dec.ball(radius));
        Ok(Ball {
            center,
            radius,
            dec,
            interior,
            boundary,
        })
    }

    pub fn vertices(&self) -> Vec<VertexId> {
        self.dec.ball(self.radius)
    }
}

/// A ball together with its factored Dirichlet system; solves for several sources
/// share one factorization.
#[derive(Debug)]
pub struct BallSystem<'g> {
    pub ball: Ball,
    pub system: DirichletSystem<'g>,
}

impl<'g> BallSystem<'g> {
    pub fn new(g: &'g FiniteGraph, center: VertexId, radius: usize, mode: SolverMode) -> Result<Self> {
        if radius == 0 {
            return Err(Error::Precondition("radius must be at least 1".into()));
        }
        let ball = Ball::new(g, center, radius)?;
        let system = DirichletSystem::new(g, &ball.interior, &ball.boundary, mode)?;
        Ok(BallSystem { ball, system })
    }

    pub fn green(&self, source: VertexId) -> Result<GreenTable> {
        let sol = self.system.green(source)?;
        let g = self.system.graph();
        Ok(GreenTable {
            source: g.label(source),
            radius: self.ball.radius,
            table: VertexTable::from_ball(g, &self.ball, &sol.values),
            residual: sol.residual,
        })
    }

    pub fn exit(&self) -> Result<ExitTable> {
        let sol = self.system.exit()?;
        let g = self.system.graph();
        Ok(ExitTable {
            radius: self.ball.radius,
            table: VertexTable::from_ball(g, &self.ball, &sol.values),
            residual: sol.residual,
        })
    }

    /// Raw solutions indexed by graph vertex.
    pub fn green_values(&self, source: VertexId) -> Result<Vec<f64>> {
        Ok(self.system.green(source)?.values)
    }

    pub fn exit_values(&self) -> Result<Vec<f64>> {
        Ok(self.system.exit()?.values)
    }
}

/// Dirichlet Green function `g_R(x0, ·)` on `B_R(x0)`.
pub fn dirichlet_green(g: &FiniteGraph, x0: VertexId, radius: usize) -> Result<GreenTable> {
    BallSystem::new(g, x0, radius, SolverMode::Auto)?.green(x0)
}

/// Mean exit time `E_R` from `B_R(x0)`.
pub fn mean_exit(g: &FiniteGraph, x0: VertexId, radius: usize) -> Result<ExitTable> {
    BallSystem::new(g, x0, radius, SolverMode::Auto)?.exit()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum LimitVerdict {
    /// Increments fell below the tolerance at `radius`; for radial models the certified
    /// tail `Σ_{k≥R} 1/∂B(k)` is at most `tail`.
    Converged {
        radius: usize,
        value: f64,
        tail: Option<f64>,
    },
    StillGrowing {
        growth: Growth,
        last_increment: f64,
        value: f64,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GreenLimit {
    pub source: Label,
    pub tables: Vec<GreenTable>,
    /// `g_R(x0, x0)` per radius.
    pub trajectory: Vec<(usize, f64)>,
    pub verdict: LimitVerdict,
}

/// Computes `g_R(x0, ·)` on `B_R(root)` for `R = 2..=r_max`, checks monotonicity in `R`
/// and reports convergence or growth.
pub fn green_limit(spec: &GraphSpec, x0: &Label, r_max: usize, tol: f64) -> Result<GreenLimit> {
    green_limit_with(spec, x0, r_max, tol, true)
}

/// As [`green_limit`]; `keep_tables = false` drops the per-radius tables.
pub fn green_limit_with(
    spec: &GraphSpec,
    x0: &Label,
    r_max: usize,
    tol: f64,
    keep_tables: bool,
) -> Result<GreenLimit> {
    if r_max < 2 {
        return Err(Error::Precondition("R_max must be at least 2".into()));
    }
    let model = spec.radial_model();
    let root_label = spec.root();
    let mut tables = Vec::new();
    let mut trajectory = Vec::new();
    let mut prev: Option<GreenTable> = None;
    let mut last_increment = f64::INFINITY;
    for radius in 2..=r_max {
        let g = spec.materialize(radius)?;
        let root = g.find(&root_label).expect("root is materialized");
        let source = g
            .find(x0)
            .ok_or_else(|| Error::NotFound(x0.to_string(), radius))?;
        let sys = BallSystem::new(&g, root, radius, SolverMode::Auto)?;
        if !sys.system.contains_interior(source) {
            continue;
        }
        let table = sys.green(source)?;
        let mut increment: f64 = 0.0;
        if let Some(p) = &prev {
            for (i, l) in p.table.labels.iter().enumerate() {
                let old = p.table.values[i];
                let new = table.table.get(l).unwrap_or(0.0);
                let slack = 1e-10 * old.abs().max(1.0);
                if new < old - slack {
                    return Err(Error::Internal(format!(
                        "Green kernel decreased at {l} between R = {} and R = {radius}: {old} -> {new}",
                        p.radius
                    )));
                }
                increment = increment.max(new - old);
            }
        }
        let value = table.table.get(x0).unwrap_or(0.0);
        trajectory.push((radius, value));
        let tail = model
            .as_ref()
            .and_then(|m| crate::model::green_tail_bounds(m, radius))
            .map(|(_, hi)| hi);
        if prev.is_some() {
            last_increment = increment;
        }
        let converged = prev.is_some()
            && increment < tol
            && match (&model, tail) {
                (Some(_), Some(t)) => t <= tol,
                (Some(_), None) => false,
                (None, _) => true,
            };
        prev = Some(table.clone());
        if keep_tables {
            tables.push(table);
        }
        if converged {
            return Ok(GreenLimit {
                source: *x0,
                tables,
                trajectory,
                verdict: LimitVerdict::Converged {
                    radius,
                    value,
                    tail,
                },
            });
        }
    }
    let radii: Vec<f64> = trajectory.iter().map(|&(r, _)| r as f64).collect();
    let values: Vec<f64> = trajectory.iter().map(|&(_, v)| v).collect();
    let value = values.last().copied().unwrap_or(0.0);
    Ok(GreenLimit {
        source: *x0,
        tables,
        verdict: LimitVerdict::StillGrowing {
            growth: classify_growth(&radii, &values),
            last_increment,
            value,
        },
        trajectory,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum MinPrinciple {
    Pass,
    /// `f` is constant, so the principle makes no claim.
    Vacuous,
    /// `Δf ≥ 0` inside or `f ≥ 0` on the boundary fails at `witness`.
    HypothesisViolated { witness: Label, value: f64 },
    /// Hypotheses hold but `f ≤ 0` at the interior vertex `witness`.
    Fail { witness: Label, value: f64 },
}

/// Strong minimum principle check: super-harmonic `f ≥ 0` on the boundary of `interior`
/// and non-constant must be positive inside.
pub fn check_min_principle(g: &FiniteGraph, f: &[f64], interior: &[VertexId], tol: f64) -> MinPrinciple {
    let mask = g.mask(interior);
    let mut boundary: Vec<VertexId> = interior
        .iter()
        .flat_map(|&x| g.neighbors(x).map(|(y, _)| y))
        .filter(|y| !mask[y.index()])
        .collect();
    boundary.sort_unstable();
    boundary.dedup();
    let all: Vec<f64> = interior.iter().chain(&boundary).map(|v| f[v.index()]).collect();
    let (lo, hi) = all
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if hi - lo <= tol {
        return MinPrinciple::Vacuous;
    }
    for &x in interior {
        let lap = g.laplacian_at(f, x);
        if lap < -tol {
            return MinPrinciple::HypothesisViolated {
                witness: g.label(x),
                value: lap,
            };
        }
    }
    for &y in &boundary {
        if f[y.index()] < -tol {
            return MinPrinciple::HypothesisViolated {
                witness: g.label(y),
                value: f[y.index()],
            };
        }
    }
    for &x in interior {
        if f[x.index()] <= 0.0 {
            return MinPrinciple::Fail {
                witness: g.label(x),
                value: f[x.index()],
            };
        }
    }
    MinPrinciple::Pass
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::RadialModel;
    use crate::sequence::Sequence;

    fn unit_half_line() -> GraphSpec {
        GraphSpec::Model(
            RadialModel::new(Sequence::Const(1.0), Sequence::Const(1.0))
                .with_sphere_count(Sequence::Const(1.0)),
        )
    }

    fn values_by_radius(t: &VertexTable) -> Vec<f64> {
        t.rows().into_iter().map(|(_, _, v)| v).collect()
    }

    #[test]
    fn hand_solves_on_half_line() {
        let g = unit_half_line().materialize(5).unwrap();
        let o = g.find(&Label::grid(0, 0)).unwrap();
        let green = dirichlet_green(&g, o, 2).unwrap();
        let exit = mean_exit(&g, o, 2).unwrap();
        for (a, b) in values_by_radius(&green.table).iter().zip([2.0, 1.0, 0.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in values_by_radius(&exit.table).iter().zip([3.0, 2.0, 0.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        let g3 = dirichlet_green(&g, o, 3).unwrap();
        for (a, b) in values_by_radius(&g3.table).iter().zip([3.0, 2.0, 1.0, 0.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        let e1 = mean_exit(&g, o, 1).unwrap();
        assert!((e1.table.get(&Label::grid(0, 0)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constants_are_harmonic() {
        let g = unit_half_line().materialize(4).unwrap();
        let ball = Ball::new(&g, VertexId(0), 3).unwrap();
        let sol = solve_dirichlet(&g, &ball.interior, &ball.boundary, |_| 0.0, |_| 2.5).unwrap();
        for v in ball.vertices() {
            assert!((sol.values[v.index()] - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn validation_errors() {
        let g = unit_half_line().materialize(2).unwrap();
        let v = |r| g.find(&Label::grid(r, 0)).unwrap();
        assert!(matches!(
            solve_dirichlet(&g, &[v(0), v(2)], &[v(1)], |_| 0.0, |_| 0.0),
            Err(Error::InteriorTouchesFrontier(_))
        ));
        assert!(matches!(
            solve_dirichlet(&g, &[v(0)], &[v(0), v(1)], |_| 0.0, |_| 0.0),
            Err(Error::Overlap(_))
        ));
        assert!(matches!(
            solve_dirichlet(&g, &[v(0), v(1)], &[], |_| 0.0, |_| 0.0),
            Err(Error::OpenBoundary { .. })
        ));
        assert!(BallSystem::new(&g, v(0), 0, SolverMode::Auto).is_err());
    }

    #[test]
    fn geometric_model_green_matches_partial_sums() {
        let spec = GraphSpec::Model(RadialModel::new(Sequence::Const(1.0), Sequence::geometric(2.0)));
        let g = spec.materialize(20).unwrap();
        let t = dirichlet_green(&g, VertexId(0), 20).unwrap();
        for (label, r, v) in t.table.rows() {
            let expect: f64 = (r..20).map(|k| 2f64.powi(-(k as i32))).sum();
            assert!((v - expect).abs() < 1e-12, "{label}");
        }
        assert!((t.table.get(&Label::grid(0, 0)).unwrap() - (2.0 - 2f64.powi(-19))).abs() < 1e-12);
    }

    #[test]
    fn green_limit_verdicts() {
        let lim = green_limit(&unit_half_line(), &Label::grid(0, 0), 12, 1e-9).unwrap();
        match lim.verdict {
            LimitVerdict::StillGrowing { growth, value, .. } => {
                assert!((value - 12.0).abs() < 1e-9);
                assert!(matches!(growth, Growth::Power { exponent } if (exponent - 1.0).abs() < 0.1));
            }
            v => panic!("{v:?}"),
        }
        let geo = GraphSpec::Model(RadialModel::new(Sequence::Const(1.0), Sequence::geometric(2.0)));
        let lim = green_limit_with(&geo, &Label::grid(0, 0), 40, 1e-9, false).unwrap();
        match lim.verdict {
            LimitVerdict::Converged { radius, value, .. } => {
                assert!(radius <= 35);
                assert!((value - 2.0).abs() < 1e-9);
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn min_principle_cases() {
        let g = unit_half_line().materialize(6).unwrap();
        let o = VertexId(0);
        let sys = BallSystem::new(&g, o, 3, SolverMode::Auto).unwrap();
        let f = sys.green_values(o).unwrap();
        assert_eq!(check_min_principle(&g, &f, &sys.ball.interior, 1e-10), MinPrinciple::Pass);
        let zero = vec![0.0; g.len()];
        assert_eq!(check_min_principle(&g, &zero, &sys.ball.interior, 1e-10), MinPrinciple::Vacuous);

        let path = crate::graph::tests_support::path(&[1.0, 1.0], &[1.0; 3]);
        let f = [1.0, -1.0, 0.0];
        assert!(matches!(
            check_min_principle(&path, &f, &[VertexId(1)], 1e-10),
            MinPrinciple::HypothesisViolated { .. }
        ));
    }
}
