//! Lazy descriptions of infinite graph families and their materialization to balls.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{FiniteGraph, GraphBuilder, GraphDocument, Label, VertexId};
use crate::sequence::{Envelope, Sequence};

/// Smallest admissible conformal factor `λ²`.
pub const MIN_LAMBDA_SQ: f64 = 1e-12;

/// How the radial data of a model is given.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelKind {
    /// `m(S_r)`, `∂B(r)` and optionally `|S_r|`.
    Sequences {
        sphere_measure: Sequence,
        boundary_weight: Sequence,
        sphere_count: Option<Sequence>,
    },
    /// Antitree with the given sphere sizes, `m ≡ 1` and unit weights.
    Antitree { sizes: Sequence },
    /// Curvatures `k_±(r)` and `m(S_0)`; sphere measures follow from
    /// `m(S_r) = m(S_{r-1}) k_+(r-1) / k_-(r)`.
    Curvatures {
        k_plus: Sequence,
        k_minus: Sequence,
        root_measure: f64,
    },
}

/// A weakly spherically symmetric graph described through its radial sequences.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialModel {
    pub kind: ModelKind,
    pub name: Option<String>,
}

/// Radial sequences tabulated on `0..=n`.
#[derive(Clone, Debug)]
pub struct RadialTable {
    pub sphere_measure: Vec<f64>,
    pub boundary: Vec<f64>,
    pub ln_sphere_measure: Vec<f64>,
    pub ln_boundary: Vec<f64>,
}

impl RadialTable {
    pub fn len(&self) -> usize {
        self.boundary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boundary.is_empty()
    }

    pub fn k_plus(&self, r: usize) -> f64 {
        self.boundary[r] / self.sphere_measure[r]
    }

    pub fn k_minus(&self, r: usize) -> f64 {
        if r == 0 {
            0.0
        } else {
            self.boundary[r - 1] / self.sphere_measure[r]
        }
    }
}

impl RadialModel {
    pub fn new(sphere_measure: Sequence, boundary_weight: Sequence) -> Self {
        RadialModel {
            kind: ModelKind::Sequences {
                sphere_measure,
                boundary_weight,
                sphere_count: None,
            },
            name: None,
        }
    }

    pub fn with_sphere_count(mut self, count: Sequence) -> Self {
        if let ModelKind::Sequences { sphere_count, .. } = &mut self.kind {
            *sphere_count = Some(count);
        }
        self
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = Some(name.to_string());
        self
    }

    pub fn antitree(sizes: Sequence) -> Self {
        RadialModel {
            kind: ModelKind::Antitree { sizes },
            name: None,
        }
    }

    pub fn from_curvatures(k_plus: Sequence, k_minus: Sequence, root_measure: f64) -> Self {
        RadialModel {
            kind: ModelKind::Curvatures {
                k_plus,
                k_minus,
                root_measure,
            },
            name: None,
        }
    }

    /// The half-line `G̃` of the comparison example: `m̃(0)=1`, `m̃(r)=e^{-r}+2`,
    /// `b̃(r,r+1)=(r+1)^3`.
    pub fn section4_tilde() -> Self {
        RadialModel::new(Sequence::HalfLineTildeMeasure, Sequence::shifted_power(3.0))
            .with_sphere_count(Sequence::Const(1.0))
            .named("section4_Gtilde")
    }

    /// The half-line `G` of the comparison example.
    pub fn section4() -> Self {
        RadialModel::new(Sequence::HalfLineMeasure, Sequence::HalfLineWeight)
            .with_sphere_count(Sequence::Const(1.0))
            .named("section4_G")
    }

    fn checked(&self, what: &str, r: usize, v: f64) -> Result<f64> {
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Sequence {
                name: format!("{}.{what}", self.label()),
                index: r,
                reason: format!("value {v} is not finite and positive"),
            })
        }
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| match &self.kind {
            ModelKind::Sequences {
                sphere_measure,
                boundary_weight,
                ..
            } => format!("model(m={sphere_measure}, b={boundary_weight})"),
            ModelKind::Antitree { sizes } => format!("antitree({sizes})"),
            ModelKind::Curvatures { k_plus, k_minus, .. } => {
                format!("model(k+={k_plus}, k-={k_minus})")
            }
        })
    }

    /// `m(S_r)`.
    pub fn sphere_measure(&self, r: usize) -> Result<f64> {
        let v = match &self.kind {
            ModelKind::Sequences { sphere_measure, .. } => sphere_measure.value(r)?,
            ModelKind::Antitree { sizes } => antitree_size(sizes, r)? as f64,
            ModelKind::Curvatures { .. } => return Ok(self.tabulate(r)?.sphere_measure[r]),
        };
        self.checked("sphere_measure", r, v)
    }

    /// `∂B(r)`, the total weight between `S_r` and `S_{r+1}`.
    pub fn boundary(&self, r: usize) -> Result<f64> {
        let v = match &self.kind {
            ModelKind::Sequences {
                boundary_weight, ..
            } => boundary_weight.value(r)?,
            ModelKind::Antitree { sizes } => {
                antitree_size(sizes, r)? as f64 * antitree_size(sizes, r + 1)? as f64
            }
            ModelKind::Curvatures { .. } => return Ok(self.tabulate(r)?.boundary[r]),
        };
        self.checked("boundary_weight", r, v)
    }

    /// `|S_r|` when the model has a vertex realization.
    pub fn sphere_count(&self, r: usize) -> Option<Result<u64>> {
        match &self.kind {
            ModelKind::Sequences {
                sphere_count: Some(c),
                ..
            } => Some(antitree_size(c, r)),
            ModelKind::Antitree { sizes } => Some(antitree_size(sizes, r)),
            _ => None,
        }
    }

    pub fn k_plus(&self, r: usize) -> Result<f64> {
        Ok(self.boundary(r)? / self.sphere_measure(r)?)
    }

    pub fn k_minus(&self, r: usize) -> Result<f64> {
        if r == 0 {
            return Ok(0.0);
        }
        Ok(self.boundary(r - 1)? / self.sphere_measure(r)?)
    }

    /// Tabulates `m(S_r)` and `∂B(r)` for `r ≤ n`.
    pub fn tabulate(&self, n: usize) -> Result<RadialTable> {
        self.table(n, true)
    }

    /// Data of the ball `B_n`: `m(S_r)` for `r ≤ n`, `∂B(r)` for `r < n`.
    fn ball_table(&self, n: usize) -> Result<RadialTable> {
        self.table(n, false)
    }

    fn table(&self, n: usize, last_boundary: bool) -> Result<RadialTable> {
        let mut t = RadialTable {
            sphere_measure: Vec::with_capacity(n + 1),
            boundary: Vec::with_capacity(n + 1),
            ln_sphere_measure: Vec::with_capacity(n + 1),
            ln_boundary: Vec::with_capacity(n + 1),
        };
        match &self.kind {
            ModelKind::Curvatures {
                k_plus,
                k_minus,
                root_measure,
            } => {
                let mut ln_m = root_measure.ln();
                for r in 0..=n {
                    if r > 0 {
                        let kp = self.checked("k_plus", r - 1, k_plus.value(r - 1)?)?;
                        let km = self.checked("k_minus", r, k_minus.value(r)?)?;
                        ln_m += kp.ln() - km.ln();
                    }
                    t.ln_sphere_measure.push(ln_m);
                    t.sphere_measure.push(self.checked("sphere_measure", r, ln_m.exp())?);
                    if r < n || last_boundary {
                        let kp = self.checked("k_plus", r, k_plus.value(r)?)?;
                        t.ln_boundary.push(ln_m + kp.ln());
                        t.boundary.push(self.checked("boundary", r, (ln_m + kp.ln()).exp())?);
                    }
                }
            }
            ModelKind::Sequences {
                sphere_measure,
                boundary_weight,
                ..
            } => {
                for r in 0..=n {
                    let lm = sphere_measure.ln_value(r)?;
                    let lb = if r < n || last_boundary {
                        boundary_weight.ln_value(r)?
                    } else {
                        0.0
                    };
                    t.ln_sphere_measure.push(lm);
                    t.sphere_measure.push(lm.exp());
                    if r < n || last_boundary {
                        t.ln_boundary.push(lb);
                        t.boundary.push(lb.exp());
                    }
                    if !(lm.is_finite() && lb.is_finite()) {
                        return Err(Error::Sequence {
                            name: self.label(),
                            index: r,
                            reason: "sequence value is not finite and positive".into(),
                        });
                    }
                }
            }
            ModelKind::Antitree { .. } => {
                for r in 0..=n {
                    let m = self.sphere_measure(r)?;
                    t.ln_sphere_measure.push(m.ln());
                    t.sphere_measure.push(m);
                    if r < n || last_boundary {
                        let b = self.boundary(r)?;
                        t.ln_boundary.push(b.ln());
                        t.boundary.push(b);
                    }
                }
            }
        }
        Ok(t)
    }

    /// Closed-form envelopes of `(m(S_r), ∂B(r))`, when available; constants are
    /// sharpest from `at` on.
    pub fn envelopes(&self, at: usize) -> (Option<Envelope>, Option<Envelope>) {
        match &self.kind {
            ModelKind::Sequences {
                sphere_measure,
                boundary_weight,
                ..
            } => (sphere_measure.envelope(), boundary_weight.envelope()),
            ModelKind::Antitree { sizes } => {
                let e = sizes.envelope();
                (e, e.map(|e| e.mul(e.shift_one(at))))
            }
            ModelKind::Curvatures { .. } => (None, None),
        }
    }

    /// Quotient half-line: one vertex per radius, `m(r) = m(S_r)`, `b(r,r+1) = ∂B(r)`.
    pub fn quotient(&self, radius: usize) -> Result<FiniteGraph> {
        let t = self.ball_table(radius)?;
        let mut b = GraphBuilder::trusted();
        let mut prev = None;
        for r in 0..=radius {
            let v = b.add_vertex(Label::grid(r as u32, 0), t.sphere_measure[r])?;
            if let Some(p) = prev {
                b.add_edge(p, v, t.boundary[r - 1])?;
            }
            prev = Some(v);
        }
        b.set_frontier(prev.unwrap());
        b.build()
    }

    /// Vertex realization with `|S_r|` vertices of measure `m(S_r)/|S_r|` per sphere and
    /// complete bipartite weights `∂B(r)/(|S_r||S_{r+1}|)`. Falls back to the quotient
    /// when no sphere counts are known.
    pub fn realize(&self, radius: usize) -> Result<FiniteGraph> {
        if self.sphere_count(0).is_none() {
            return self.quotient(radius);
        }
        let t = self.ball_table(radius)?;
        let counts: Vec<u64> = (0..=radius)
            .map(|r| self.sphere_count(r).unwrap())
            .collect::<Result<_>>()?;
        if counts[0] != 1 {
            return Err(Error::Sequence {
                name: format!("{}.sphere_count", self.label()),
                index: 0,
                reason: "the root sphere must contain exactly one vertex".into(),
            });
        }
        let mut b = GraphBuilder::trusted();
        let mut spheres: Vec<Vec<VertexId>> = Vec::with_capacity(radius + 1);
        for (r, &c) in counts.iter().enumerate() {
            let m = t.sphere_measure[r] / c as f64;
            let ids = (0..c)
                .map(|i| b.add_vertex(Label::grid(r as u32, i), m))
                .collect::<Result<Vec<_>>>()?;
            if r == radius {
                for &v in &ids {
                    b.set_frontier(v);
                }
            }
            spheres.push(ids);
        }
        for r in 0..radius {
            let w = t.boundary[r] / (counts[r] as f64 * counts[r + 1] as f64);
            for &u in &spheres[r] {
                for &v in &spheres[r + 1] {
                    b.add_edge(u, v, w)?;
                }
            }
        }
        b.build()
    }
}

fn antitree_size(sizes: &Sequence, r: usize) -> Result<u64> {
    let v = sizes.value(r)?;
    if v >= 1.0 && (v - v.round()).abs() <= 1e-9 * v && v < 9.0e15 {
        Ok(v.round() as u64)
    } else {
        Err(Error::Sequence {
            name: sizes.to_string(),
            index: r,
            reason: format!("sphere size {v} is not a positive integer"),
        })
    }
}

/// Antitree ball `B_R`: `m ≡ 1`, unit weights, complete bipartite between consecutive
/// spheres and no edges inside a sphere.
pub fn build_antitree(sizes: &Sequence, radius: usize) -> Result<FiniteGraph> {
    RadialModel::antitree(sizes.clone()).realize(radius)
}

/// The two half-line models `(G̃, G)` of the curvature comparison example.
pub fn section4_example() -> (RadialModel, RadialModel) {
    (RadialModel::section4_tilde(), RadialModel::section4())
}

/// Conformal factor `λ²` as a function of vertex labels.
#[derive(Clone)]
pub enum LambdaSq {
    Const(f64),
    Table {
        values: HashMap<Label, f64>,
        default: f64,
    },
    Fn(Arc<dyn Fn(&Label) -> f64 + Send + Sync>),
}

impl LambdaSq {
    pub fn eval(&self, label: &Label) -> f64 {
        match self {
            LambdaSq::Const(c) => *c,
            LambdaSq::Table { values, default } => values.get(label).copied().unwrap_or(*default),
            LambdaSq::Fn(f) => f(label),
        }
    }
}

impl fmt::Debug for LambdaSq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaSq::Const(c) => write!(f, "Const({c})"),
            LambdaSq::Table { values, default } => {
                write!(f, "Table({} entries, default {default})", values.len())
            }
            LambdaSq::Fn(_) => f.write_str("Fn(..)"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Glue {
    pub a: GraphSpec,
    pub b: GraphSpec,
    pub xa: Label,
    /// Label inside `b`, before the part shift applied by gluing.
    pub xb: Label,
    pub weight: f64,
}

/// Lazy description of an infinite (or finite) rooted graph.
#[derive(Clone, Debug)]
pub enum GraphSpec {
    Model(RadialModel),
    Antitree(Sequence),
    Glue(Box<Glue>),
    Conformal {
        base: Box<GraphSpec>,
        lambda_sq: LambdaSq,
    },
    Explicit {
        graph: Arc<FiniteGraph>,
        root: Label,
    },
}

impl GraphSpec {
    pub fn glue(a: GraphSpec, b: GraphSpec, xa: Label, xb: Label, weight: f64) -> Result<Self> {
        if !(weight >= crate::graph::MIN_WEIGHT && weight.is_finite()) {
            return Err(Error::InvalidWeight {
                u: xa.to_string(),
                v: xb.to_string(),
                value: weight,
            });
        }
        Ok(GraphSpec::Glue(Box::new(Glue {
            a,
            b,
            xa,
            xb,
            weight,
        })))
    }

    pub fn conformal(base: GraphSpec, lambda_sq: LambdaSq) -> Self {
        GraphSpec::Conformal {
            base: Box::new(base),
            lambda_sq,
        }
    }

    pub fn explicit(graph: FiniteGraph, root: Label) -> Result<Self> {
        if graph.find(&root).is_none() {
            return Err(Error::UnknownVertex(root.to_string()));
        }
        Ok(GraphSpec::Explicit {
            graph: Arc::new(graph),
            root,
        })
    }

    /// Label of the root the ball `B_R` is centered at.
    pub fn root(&self) -> Label {
        match self {
            GraphSpec::Model(_) | GraphSpec::Antitree(_) => Label::grid(0, 0),
            GraphSpec::Glue(g) => g.a.root(),
            GraphSpec::Conformal { base, .. } => base.root(),
            GraphSpec::Explicit { root, .. } => *root,
        }
    }

    /// Number of label parts used by this spec.
    pub fn parts(&self) -> u32 {
        match self {
            GraphSpec::Glue(g) => g.a.parts() + g.b.parts(),
            GraphSpec::Conformal { base, .. } => base.parts(),
            _ => 1,
        }
    }

    /// The radial model, for specs that are one.
    pub fn radial_model(&self) -> Option<RadialModel> {
        match self {
            GraphSpec::Model(m) => Some(m.clone()),
            GraphSpec::Antitree(s) => Some(RadialModel::antitree(s.clone())),
            _ => None,
        }
    }

    /// Materializes `B_R(root)` with every internal edge; `S_R` is flagged frontier.
    pub fn materialize(&self, radius: usize) -> Result<FiniteGraph> {
        match self {
            GraphSpec::Model(m) => m.realize(radius),
            GraphSpec::Antitree(sizes) => build_antitree(sizes, radius),
            GraphSpec::Conformal { base, lambda_sq } => {
                let g = base.materialize(radius)?;
                let measure = g
                    .vertices()
                    .map(|v| {
                        let l = g.label(v);
                        let s = lambda_sq.eval(&l);
                        if s >= MIN_LAMBDA_SQ && s.is_finite() {
                            Ok(s * g.measure(v))
                        } else {
                            Err(Error::InvalidMeasure {
                                vertex: l.to_string(),
                                value: s,
                            })
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                g.with_measure(measure)
            }
            GraphSpec::Explicit { graph, root } => {
                let r = graph.find(root).ok_or(Error::UnknownVertex(root.to_string()))?;
                graph.restrict_ball(r, radius)
            }
            GraphSpec::Glue(glue) => glue.materialize(radius),
        }
    }

    /// `B_R(x0)` with every internal edge; `S_R(x0)` is frontier.
    pub fn ball_around(&self, x0: &Label, radius: usize) -> Result<FiniteGraph> {
        if *x0 == self.root() {
            return self.materialize(radius);
        }
        let d = self.locate(x0, LOCATE_LIMIT)?;
        let g = self.materialize(radius + d)?;
        let c = g.find(x0).ok_or_else(|| Error::NotFound(x0.to_string(), radius + d))?;
        g.restrict_ball(c, radius)
    }

    /// Combinatorial distance from the root to `label`, searching radii up to `limit`.
    pub fn locate(&self, label: &Label, limit: usize) -> Result<usize> {
        if let (GraphSpec::Model(_) | GraphSpec::Antitree(_), Label::Grid { part: 0, shell, .. }) =
            (self, label)
        {
            let r = *shell as usize;
            let g = self.materialize(r)?;
            return g.find(label).map(|_| r).ok_or(Error::NotFound(label.to_string(), r));
        }
        let mut radius = 1;
        loop {
            let g = self.materialize(radius)?;
            if let Some(v) = g.find(label) {
                let root = g.find(&self.root()).expect("root is materialized");
                let dec = g.sphere_decompose(root)?;
                return Ok(dec.radius_of(v));
            }
            // a graph that stopped growing cannot contain the label further out
            if g.frontier().is_empty() || radius >= limit {
                return Err(Error::NotFound(label.to_string(), radius));
            }
            radius = (radius * 2).min(limit);
        }
    }
}

const LOCATE_LIMIT: usize = 4096;

impl Glue {
    fn materialize(&self, radius: usize) -> Result<FiniteGraph> {
        let da = self.a.locate(&self.xa, LOCATE_LIMIT)?;
        let ga = self.a.materialize(radius.max(da))?;
        let offset = self.a.parts();
        let mut b = GraphBuilder::trusted();
        let mut map_a = Vec::with_capacity(ga.len());
        for v in ga.vertices() {
            let id = b.add_vertex(ga.label(v), ga.measure(v))?;
            if ga.is_frontier(v) {
                b.set_frontier(id);
            }
            map_a.push(id);
        }
        for (u, v, w) in ga.edges() {
            b.add_edge(map_a[u.index()], map_a[v.index()], w)?;
        }
        // vertices of B within reach: d(y) = d_A + 1 + d_B(x_B, y) ≤ R
        if radius > da {
            let db = self.b.locate(&self.xb, LOCATE_LIMIT)?;
            let gb = self.b.materialize(db + radius - 1 - da)?;
            let mut map_b = Vec::with_capacity(gb.len());
            for v in gb.vertices() {
                let id = b.add_vertex(gb.label(v).shifted(offset), gb.measure(v))?;
                if gb.is_frontier(v) {
                    b.set_frontier(id);
                }
                map_b.push(id);
            }
            for (u, v, w) in gb.edges() {
                b.add_edge(map_b[u.index()], map_b[v.index()], w)?;
            }
            let xa = ga.find(&self.xa).expect("located");
            let xb = gb
                .find(&self.xb)
                .ok_or_else(|| Error::NotFound(self.xb.to_string(), db))?;
            b.add_edge(map_a[xa.index()], map_b[xb.index()], self.weight)?;
        }
        let joined = b.build()?;
        let root = joined
            .find(&self.a.root())
            .ok_or_else(|| Error::UnknownVertex(self.a.root().to_string()))?;
        joined.restrict_ball(root, radius)
    }
}

/// JSON form of a [`GraphSpec`], discriminated by `kind`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpecDocument {
    Model {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        preset: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sphere_measure: Option<Sequence>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        boundary_weight: Option<Sequence>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sphere_count: Option<Sequence>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k_plus: Option<Sequence>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k_minus: Option<Sequence>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        root_measure: Option<f64>,
    },
    Antitree {
        sizes: Sequence,
    },
    Glue {
        a: Box<SpecDocument>,
        b: Box<SpecDocument>,
        xa: VertexRef,
        xb: VertexRef,
        #[serde(default = "unit_weight")]
        weight: f64,
    },
    Conformal {
        base: Box<SpecDocument>,
        lambda_sq: LambdaDocument,
    },
    Explicit {
        graph: GraphDocument,
        root: VertexRef,
    },
}

fn unit_weight() -> f64 {
    1.0
}

/// A vertex given either as an explicit integer id or as label text.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VertexRef {
    Id(u64),
    Text(String),
}

impl VertexRef {
    fn resolve(&self, spec: &GraphSpec) -> Result<Label> {
        match self {
            VertexRef::Id(id) => Ok(match spec {
                GraphSpec::Explicit { .. } => Label::named(*id),
                _ => Label::grid(*id as u32, 0),
            }),
            VertexRef::Text(t) => t.parse(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum LambdaDocument {
    Const(f64),
    Table {
        values: HashMap<String, f64>,
        #[serde(default = "unit_weight")]
        default: f64,
    },
}

impl TryFrom<SpecDocument> for GraphSpec {
    type Error = Error;

    fn try_from(doc: SpecDocument) -> Result<Self> {
        Ok(match doc {
            SpecDocument::Model {
                preset,
                name,
                sphere_measure,
                boundary_weight,
                sphere_count,
                k_plus,
                k_minus,
                root_measure,
            } => {
                let mut model = match (preset.as_deref(), sphere_measure, boundary_weight, k_plus, k_minus)
                {
                    (Some("section4_G"), None, None, None, None) => RadialModel::section4(),
                    (Some("section4_Gtilde"), None, None, None, None) => RadialModel::section4_tilde(),
                    (Some(p), ..) => {
                        return Err(Error::InvalidSpec(format!(
                            "unknown model preset `{p}` or preset mixed with sequences"
                        )))
                    }
                    (None, Some(m), Some(b), None, None) => RadialModel {
                        kind: ModelKind::Sequences {
                            sphere_measure: m,
                            boundary_weight: b,
                            sphere_count,
                        },
                        name: None,
                    },
                    (None, None, None, Some(kp), Some(km)) => {
                        RadialModel::from_curvatures(kp, km, root_measure.unwrap_or(1.0))
                    }
                    _ => {
                        return Err(Error::InvalidSpec(
                            "model needs `preset`, `sphere_measure`+`boundary_weight`, or `k_plus`+`k_minus`"
                                .into(),
                        ))
                    }
                };
                if name.is_some() {
                    model.name = name;
                }
                GraphSpec::Model(model)
            }
            SpecDocument::Antitree { sizes } => GraphSpec::Antitree(sizes),
            SpecDocument::Glue { a, b, xa, xb, weight } => {
                let a = GraphSpec::try_from(*a)?;
                let b = GraphSpec::try_from(*b)?;
                let xa = xa.resolve(&a)?;
                let xb = xb.resolve(&b)?;
                GraphSpec::glue(a, b, xa, xb, weight)?
            }
            SpecDocument::Conformal { base, lambda_sq } => {
                let base = GraphSpec::try_from(*base)?;
                let lambda_sq = match lambda_sq {
                    LambdaDocument::Const(c) => LambdaSq::Const(c),
                    LambdaDocument::Table { values, default } => LambdaSq::Table {
                        values: values
                            .into_iter()
                            .map(|(k, v)| Ok((k.parse::<Label>()?, v)))
                            .collect::<Result<_>>()?,
                        default,
                    },
                };
                GraphSpec::conformal(base, lambda_sq)
            }
            SpecDocument::Explicit { graph, root } => {
                let graph = graph.into_graph()?;
                let root = match root {
                    VertexRef::Id(id) => Label::named(id),
                    VertexRef::Text(t) => t.parse()?,
                };
                GraphSpec::explicit(graph, root)?
            }
        })
    }
}

impl GraphSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SpecDocument = serde_json::from_str(text)?;
        GraphSpec::try_from(doc)
    }

    /// JSON form; closures in conformal factors cannot be serialized.
    pub fn to_document(&self) -> Result<SpecDocument> {
        Ok(match self {
            GraphSpec::Model(m) => {
                let mut doc = SpecDocument::Model {
                    preset: None,
                    name: m.name.clone(),
                    sphere_measure: None,
                    boundary_weight: None,
                    sphere_count: None,
                    k_plus: None,
                    k_minus: None,
                    root_measure: None,
                };
                if let Some(n @ ("section4_G" | "section4_Gtilde")) = m.name.as_deref() {
                    if *m == named_preset(n) {
                        if let SpecDocument::Model { preset, name, .. } = &mut doc {
                            *preset = Some(n.to_string());
                            *name = None;
                        }
                        return Ok(doc);
                    }
                }
                let SpecDocument::Model {
                    sphere_measure: sm,
                    boundary_weight: bw,
                    sphere_count: sc,
                    k_plus: kp,
                    k_minus: km,
                    root_measure: rm,
                    ..
                } = &mut doc
                else {
                    unreachable!()
                };
                match &m.kind {
                    ModelKind::Sequences {
                        sphere_measure,
                        boundary_weight,
                        sphere_count,
                    } => {
                        *sm = Some(sphere_measure.clone());
                        *bw = Some(boundary_weight.clone());
                        *sc = sphere_count.clone();
                    }
                    ModelKind::Antitree { sizes } => {
                        return Ok(SpecDocument::Antitree {
                            sizes: sizes.clone(),
                        })
                    }
                    ModelKind::Curvatures {
                        k_plus,
                        k_minus,
                        root_measure,
                    } => {
                        *kp = Some(k_plus.clone());
                        *km = Some(k_minus.clone());
                        *rm = Some(*root_measure);
                    }
                }
                doc
            }
            GraphSpec::Antitree(s) => SpecDocument::Antitree { sizes: s.clone() },
            GraphSpec::Glue(g) => SpecDocument::Glue {
                a: Box::new(g.a.to_document()?),
                b: Box::new(g.b.to_document()?),
                xa: VertexRef::Text(g.xa.to_string()),
                xb: VertexRef::Text(g.xb.to_string()),
                weight: g.weight,
            },
            GraphSpec::Conformal { base, lambda_sq } => SpecDocument::Conformal {
                base: Box::new(base.to_document()?),
                lambda_sq: match lambda_sq {
                    LambdaSq::Const(c) => LambdaDocument::Const(*c),
                    LambdaSq::Table { values, default } => LambdaDocument::Table {
                        values: values.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
                        default: *default,
                    },
                    LambdaSq::Fn(_) => {
                        return Err(Error::InvalidSpec(
                            "conformal factor given as a closure has no JSON form".into(),
                        ))
                    }
                },
            },
            GraphSpec::Explicit { graph, root } => SpecDocument::Explicit {
                graph: graph.to_document(),
                root: VertexRef::Text(root.to_string()),
            },
        })
    }
}

fn named_preset(n: &str) -> RadialModel {
    if n == "section4_G" {
        RadialModel::section4()
    } else {
        RadialModel::section4_tilde()
    }
}
