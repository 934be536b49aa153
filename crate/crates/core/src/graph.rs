//! Finite weighted graphs `(V, b, m)` with a truncation frontier.
//!
//! A [`FiniteGraph`] is either a genuinely finite graph or a ball `B_R` cut out of an
//! infinite one. In the latter case the vertices of the outermost sphere are marked as
//! *frontier*: their neighbor lists are incomplete, so every local quantity evaluated
//! there (degree, Laplacian, outer curvature) is returned with an untrusted flag.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Edge weights below this value are treated as absent edges.
pub const MIN_WEIGHT: f64 = 1e-15;

/// Dense handle of a vertex inside one [`FiniteGraph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexId(pub u32);

impl VertexId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Stable structured name of a vertex.
///
/// Generated families use `Grid` labels (sphere index and index within the sphere,
/// counted from the root of the family); explicit graphs use `Named` labels carrying
/// the caller's id. `part` separates the pieces of a glued graph.
///
/// Text form: `shell.index` or `#id`, optionally prefixed by `part/`. A bare integer
/// `n` parses as `n.0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Label {
    Grid { part: u32, shell: u32, index: u64 },
    Named { part: u32, id: u64 },
}

impl Label {
    pub fn grid(shell: u32, index: u64) -> Self {
        Label::Grid {
            part: 0,
            shell,
            index,
        }
    }

    pub fn named(id: u64) -> Self {
        Label::Named { part: 0, id }
    }

    pub fn part(&self) -> u32 {
        match *self {
            Label::Grid { part, .. } | Label::Named { part, .. } => part,
        }
    }

    pub fn shell(&self) -> Option<u32> {
        match *self {
            Label::Grid { shell, .. } => Some(shell),
            Label::Named { .. } => None,
        }
    }

    /// Same label moved `offset` parts up; used when gluing.
    pub fn shifted(self, offset: u32) -> Self {
        match self {
            Label::Grid { part, shell, index } => Label::Grid {
                part: part + offset,
                shell,
                index,
            },
            Label::Named { part, id } => Label::Named {
                part: part + offset,
                id,
            },
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let part = self.part();
        if part > 0 {
            write!(f, "{part}/")?;
        }
        match *self {
            Label::Grid { shell, index, .. } => write!(f, "{shell}.{index}"),
            Label::Named { id, .. } => write!(f, "#{id}"),
        }
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidSpec(format!("malformed vertex label `{s}`"));
        let s = s.trim();
        let (part, rest) = match s.split_once('/') {
            Some((p, r)) => (p.parse::<u32>().map_err(|_| bad())?, r),
            None => (0, s),
        };
        if let Some(id) = rest.strip_prefix('#') {
            let id = id.parse().map_err(|_| bad())?;
            return Ok(Label::Named { part, id });
        }
        let (shell, index) = match rest.split_once('.') {
            Some((a, b)) => (
                a.parse().map_err(|_| bad())?,
                b.parse().map_err(|_| bad())?,
            ),
            None => (rest.parse().map_err(|_| bad())?, 0),
        };
        Ok(Label::Grid { part, shell, index })
    }
}

impl From<Label> for String {
    fn from(l: Label) -> String {
        l.to_string()
    }
}

impl TryFrom<String> for Label {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// A value computed at a vertex together with whether it can be trusted.
///
/// Values computed at frontier vertices depend on edges beyond the truncation and are
/// returned with `trusted == false`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Flagged<T> {
    pub value: T,
    pub trusted: bool,
}

impl<T> Flagged<T> {
    pub fn trusted(value: T) -> Self {
        Flagged {
            value,
            trusted: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvaturePair {
    pub k_minus: f64,
    pub k_plus: f64,
    /// False at frontier vertices, where part of `S_{r+1}` is not materialized.
    pub k_plus_trusted: bool,
}

/// BFS layering `S_0, S_1, ...` around a root.
#[derive(Clone, Debug)]
pub struct SphereDecomposition {
    pub root: VertexId,
    pub spheres: Vec<Vec<VertexId>>,
    radius_of: Vec<u32>,
}

impl SphereDecomposition {
    pub fn radius_of(&self, x: VertexId) -> usize {
        self.radius_of[x.index()] as usize
    }

    pub fn max_radius(&self) -> usize {
        self.spheres.len().saturating_sub(1)
    }

    pub fn sphere(&self, r: usize) -> &[VertexId] {
        self.spheres.get(r).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn sphere_sizes(&self) -> Vec<usize> {
        self.spheres.iter().map(Vec::len).collect()
    }

    /// Vertices of `B_r`, ordered by sphere.
    pub fn ball(&self, r: usize) -> Vec<VertexId> {
        self.spheres.iter().take(r + 1).flatten().copied().collect()
    }
}

/// Immutable finite weighted graph with symmetric weights and a positive measure.
#[derive(Clone, Debug)]
pub struct FiniteGraph {
    labels: Vec<Label>,
    measure: Vec<f64>,
    frontier: Vec<bool>,
    // one entry per unordered pair, `u < v`
    edges: Vec<(u32, u32, f64)>,
    // CSR adjacency: neighbor and index into `edges`
    offsets: Vec<usize>,
    adjacency: Vec<(u32, u32)>,
    index: HashMap<Label, VertexId>,
}

/// Incremental constructor for [`FiniteGraph`].
#[derive(Debug, Default)]
pub struct GraphBuilder {
    labels: Vec<Label>,
    measure: Vec<f64>,
    frontier: Vec<bool>,
    edges: Vec<(u32, u32, f64)>,
    seen: HashSet<(u32, u32)>,
    check_duplicates: bool,
    index: HashMap<Label, VertexId>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        GraphBuilder {
            check_duplicates: true,
            ..Default::default()
        }
    }

    /// Builder for generators that emit each pair once by construction.
    pub(crate) fn trusted() -> Self {
        GraphBuilder::default()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn add_vertex(&mut self, label: Label, m: f64) -> Result<VertexId> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::InvalidMeasure {
                vertex: label.to_string(),
                value: m,
            });
        }
        if self.index.contains_key(&label) {
            return Err(Error::DuplicateVertex(label.to_string()));
        }
        let id = VertexId(self.labels.len() as u32);
        self.labels.push(label);
        self.measure.push(m);
        self.frontier.push(false);
        self.index.insert(label, id);
        Ok(id)
    }

    pub fn vertex(&self, label: &Label) -> Option<VertexId> {
        self.index.get(label).copied()
    }

    pub fn set_frontier(&mut self, v: VertexId) {
        self.frontier[v.index()] = true;
    }

    /// Adds the symmetric edge `b(u,v) = b(v,u) = w`. Weights below [`MIN_WEIGHT`] are
    /// dropped.
    pub fn add_edge(&mut self, u: VertexId, v: VertexId, w: f64) -> Result<()> {
        let n = self.labels.len();
        for x in [u, v] {
            if x.index() >= n {
                return Err(Error::UnknownVertex(format!("{}", x.0)));
            }
        }
        if u == v {
            return Err(Error::SelfLoop(self.labels[u.index()].to_string()));
        }
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::InvalidWeight {
                u: self.labels[u.index()].to_string(),
                v: self.labels[v.index()].to_string(),
                value: w,
            });
        }
        if w < MIN_WEIGHT {
            return Ok(());
        }
        let (a, b) = if u < v { (u.0, v.0) } else { (v.0, u.0) };
        if self.check_duplicates && !self.seen.insert((a, b)) {
            return Err(Error::DuplicateEdge(
                self.labels[a as usize].to_string(),
                self.labels[b as usize].to_string(),
            ));
        }
        self.edges.push((a, b, w));
        Ok(())
    }

    /// Finishes construction; rejects disconnected input.
    pub fn build(self) -> Result<FiniteGraph> {
        let g = self.assemble()?;
        let reached = g.reachable_from(VertexId(0), |_| true);
        if reached < g.len() {
            return Err(Error::Disconnected {
                start: g.labels[0].to_string(),
                reached,
                total: g.len(),
            });
        }
        Ok(g)
    }

    fn assemble(self) -> Result<FiniteGraph> {
        let n = self.labels.len();
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut counts = vec![0usize; n + 1];
        for &(a, b, _) in &self.edges {
            counts[a as usize + 1] += 1;
            counts[b as usize + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let offsets = counts.clone();
        let mut fill = counts;
        let mut adjacency = vec![(0u32, 0u32); 2 * self.edges.len()];
        for (e, &(a, b, _)) in self.edges.iter().enumerate() {
            adjacency[fill[a as usize]] = (b, e as u32);
            fill[a as usize] += 1;
            adjacency[fill[b as usize]] = (a, e as u32);
            fill[b as usize] += 1;
        }
        for v in 0..n {
            adjacency[offsets[v]..offsets[v + 1]].sort_unstable();
        }
        Ok(FiniteGraph {
            labels: self.labels,
            measure: self.measure,
            frontier: self.frontier,
            edges: self.edges,
            offsets,
            adjacency,
            index: self.index,
        })
    }
}

impl FiniteGraph {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> impl ExactSizeIterator<Item = VertexId> {
        (0..self.labels.len() as u32).map(VertexId)
    }

    /// Each unordered pair once, as `(u, v, b(u,v))` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId, f64)> + '_ {
        self.edges
            .iter()
            .map(|&(a, b, w)| (VertexId(a), VertexId(b), w))
    }

    pub fn label(&self, v: VertexId) -> Label {
        self.labels[v.index()]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn measure(&self, v: VertexId) -> f64 {
        self.measure[v.index()]
    }

    pub fn measures(&self) -> &[f64] {
        &self.measure
    }

    pub fn is_frontier(&self, v: VertexId) -> bool {
        self.frontier[v.index()]
    }

    pub fn frontier(&self) -> Vec<VertexId> {
        self.vertices().filter(|&v| self.is_frontier(v)).collect()
    }

    pub fn find(&self, label: &Label) -> Option<VertexId> {
        self.index.get(label).copied()
    }

    /// Resolves a textual label. A bare integer that names no `Grid` vertex falls back
    /// to the explicit id `#n`.
    pub fn resolve(&self, text: &str) -> Result<VertexId> {
        let label: Label = text.parse()?;
        if let Some(v) = self.find(&label) {
            return Ok(v);
        }
        if let Ok(id) = text.trim().parse::<u64>() {
            if let Some(v) = self.find(&Label::named(id)) {
                return Ok(v);
            }
        }
        Err(Error::UnknownVertex(text.to_string()))
    }

    pub fn contains(&self, v: VertexId) -> bool {
        v.index() < self.labels.len()
    }

    fn check(&self, v: VertexId) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::UnknownVertex(format!("{}", v.0)))
        }
    }

    /// Neighbors `y` of `x` with `b(x,y)`.
    pub fn neighbors(&self, x: VertexId) -> impl Iterator<Item = (VertexId, f64)> + '_ {
        let range = self.offsets[x.index()]..self.offsets[x.index() + 1];
        self.adjacency[range]
            .iter()
            .map(move |&(y, e)| (VertexId(y), self.edges[e as usize].2))
    }

    pub fn neighbor_count(&self, x: VertexId) -> usize {
        self.offsets[x.index() + 1] - self.offsets[x.index()]
    }

    /// `b(x,y)`, zero when `x` and `y` are not neighbors.
    pub fn weight(&self, x: VertexId, y: VertexId) -> f64 {
        let range = self.offsets[x.index()]..self.offsets[x.index() + 1];
        let adj = &self.adjacency[range];
        match adj.binary_search_by_key(&y.0, |&(n, _)| n) {
            Ok(i) => self.edges[adj[i].1 as usize].2,
            Err(_) => 0.0,
        }
    }

    /// Total weight `Σ_y b(x,y)`.
    pub fn weighted_degree(&self, x: VertexId) -> f64 {
        self.neighbors(x).map(|(_, w)| w).sum()
    }

    /// `Deg(x) = (1/m(x)) Σ_y b(x,y)`.
    pub fn degree(&self, x: VertexId) -> Result<Flagged<f64>> {
        self.check(x)?;
        Ok(Flagged {
            value: self.weighted_degree(x) / self.measure(x),
            trusted: !self.is_frontier(x),
        })
    }

    /// `Δf(x) = (1/m(x)) Σ_y b(x,y) (f(x) - f(y))` for a partially defined `f`.
    pub fn laplacian_apply<F>(&self, f: F, x: VertexId) -> Result<Flagged<f64>>
    where
        F: Fn(VertexId) -> Option<f64>,
    {
        self.check(x)?;
        let fx = f(x).ok_or(Error::MissingValue(self.label(x)))?;
        let mut acc = 0.0;
        for (y, w) in self.neighbors(x) {
            let fy = f(y).ok_or(Error::MissingValue(self.label(y)))?;
            acc += w * (fx - fy);
        }
        Ok(Flagged {
            value: acc / self.measure(x),
            trusted: !self.is_frontier(x),
        })
    }

    /// Laplacian of a function given on every vertex.
    pub fn laplacian_at(&self, f: &[f64], x: VertexId) -> f64 {
        let fx = f[x.index()];
        let acc: f64 = self.neighbors(x).map(|(y, w)| w * (fx - f[y.index()])).sum();
        acc / self.measure(x)
    }

    /// BFS sphere decomposition around `root`.
    pub fn sphere_decompose(&self, root: VertexId) -> Result<SphereDecomposition> {
        self.check(root)?;
        let mut radius_of = vec![u32::MAX; self.len()];
        let mut spheres: Vec<Vec<VertexId>> = vec![vec![root]];
        radius_of[root.index()] = 0;
        loop {
            let r = spheres.len() as u32;
            let mut next = Vec::new();
            for &x in spheres.last().unwrap() {
                for (y, _) in self.neighbors(x) {
                    if radius_of[y.index()] == u32::MAX {
                        radius_of[y.index()] = r;
                        next.push(y);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            next.sort_unstable_by_key(|&v| self.label(v));
            spheres.push(next);
        }
        Ok(SphereDecomposition {
            root,
            spheres,
            radius_of,
        })
    }

    /// Inner and outer curvature `k_±(x) = (1/m(x)) Σ_{y ∈ S_{r±1}} b(x,y)`.
    pub fn curvature(&self, dec: &SphereDecomposition, x: VertexId) -> Result<CurvaturePair> {
        self.check(x)?;
        let r = dec.radius_of[x.index()];
        if r == u32::MAX {
            return Err(Error::UnknownVertex(self.label(x).to_string()));
        }
        let (mut minus, mut plus) = (0.0, 0.0);
        for (y, w) in self.neighbors(x) {
            let ry = dec.radius_of[y.index()];
            if ry + 1 == r {
                minus += w;
            } else if ry == r + 1 {
                plus += w;
            }
        }
        let m = self.measure(x);
        Ok(CurvaturePair {
            k_minus: minus / m,
            k_plus: plus / m,
            k_plus_trusted: !self.is_frontier(x),
        })
    }

    /// Splits `set` into its interior (no neighbor outside `set`, not frontier) and its
    /// inner boundary. Both outputs are sorted.
    pub fn boundary_split(&self, set: &[VertexId]) -> (Vec<VertexId>, Vec<VertexId>) {
        let mask = self.mask(set);
        let mut interior = Vec::new();
        let mut boundary = Vec::new();
        let mut members: Vec<VertexId> = set.to_vec();
        members.sort_unstable();
        members.dedup();
        for x in members {
            let closed =
                !self.is_frontier(x) && self.neighbors(x).all(|(y, _)| mask[y.index()]);
            if closed {
                interior.push(x);
            } else {
                boundary.push(x);
            }
        }
        (interior, boundary)
    }

    /// Membership mask of a vertex list.
    pub fn mask(&self, set: &[VertexId]) -> Vec<bool> {
        let mut mask = vec![false; self.len()];
        for v in set {
            mask[v.index()] = true;
        }
        mask
    }

    /// Number of vertices reachable from `start` through vertices accepted by `allow`.
    pub(crate) fn reachable_from<F: Fn(VertexId) -> bool>(&self, start: VertexId, allow: F) -> usize {
        let mut seen = vec![false; self.len()];
        let mut queue = VecDeque::from([start]);
        seen[start.index()] = true;
        let mut count = 0;
        while let Some(x) = queue.pop_front() {
            count += 1;
            for (y, _) in self.neighbors(x) {
                if !seen[y.index()] && allow(y) {
                    seen[y.index()] = true;
                    queue.push_back(y);
                }
            }
        }
        count
    }

    /// Connected components of the subgraph induced by `mask`, each sorted.
    pub fn components(&self, mask: &[bool]) -> Vec<Vec<VertexId>> {
        let mut seen = vec![false; self.len()];
        let mut out = Vec::new();
        for s in self.vertices() {
            if !mask[s.index()] || seen[s.index()] {
                continue;
            }
            let mut comp = vec![s];
            seen[s.index()] = true;
            let mut head = 0;
            while head < comp.len() {
                let x = comp[head];
                head += 1;
                for (y, _) in self.neighbors(x) {
                    if mask[y.index()] && !seen[y.index()] {
                        seen[y.index()] = true;
                        comp.push(y);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Induced subgraph on `B_radius(root)`; `S_radius` joins the frontier.
    pub fn restrict_ball(&self, root: VertexId, radius: usize) -> Result<FiniteGraph> {
        let dec = self.sphere_decompose(root)?;
        let keep: Vec<VertexId> = dec.ball(radius);
        let mut b = GraphBuilder::trusted();
        let mut map = vec![u32::MAX; self.len()];
        let mut order = keep;
        order.sort_unstable_by_key(|&v| self.label(v));
        for &v in &order {
            let id = b.add_vertex(self.label(v), self.measure(v))?;
            map[v.index()] = id.0;
            if self.is_frontier(v) || dec.radius_of(v) == radius {
                b.set_frontier(id);
            }
        }
        for &(a, c, w) in &self.edges {
            let (ma, mc) = (map[a as usize], map[c as usize]);
            if ma != u32::MAX && mc != u32::MAX {
                b.add_edge(VertexId(ma), VertexId(mc), w)?;
            }
        }
        b.build()
    }

    /// Same vertices, edges and frontier with a replaced measure.
    pub fn with_measure(&self, measure: Vec<f64>) -> Result<FiniteGraph> {
        assert_eq!(measure.len(), self.len());
        for (v, &m) in measure.iter().enumerate() {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::InvalidMeasure {
                    vertex: self.labels[v].to_string(),
                    value: m,
                });
            }
        }
        let mut g = self.clone();
        g.measure = measure;
        Ok(g)
    }

    /// Parses the explicit JSON graph document.
    pub fn from_json(text: &str) -> Result<FiniteGraph> {
        let doc: GraphDocument = serde_json::from_str(text)?;
        doc.into_graph()
    }

    pub fn to_document(&self) -> GraphDocument {
        let id_of = |v: VertexId| match self.label(v) {
            Label::Named { id, .. } => id,
            _ => v.0 as u64,
        };
        GraphDocument {
            vertices: self
                .vertices()
                .map(|v| VertexEntry {
                    id: id_of(v),
                    m: self.measure(v),
                })
                .collect(),
            edges: self
                .edges()
                .map(|(u, v, b)| EdgeEntry {
                    u: id_of(u),
                    v: id_of(v),
                    b,
                })
                .collect(),
            frontier: self.frontier().into_iter().map(id_of).collect(),
        }
    }
}

/// Wire format of an explicit graph:
/// `{"vertices":[{"id":..,"m":..}],"edges":[{"u":..,"v":..,"b":..}],"frontier":[ids]}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GraphDocument {
    pub vertices: Vec<VertexEntry>,
    pub edges: Vec<EdgeEntry>,
    #[serde(default)]
    pub frontier: Vec<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct VertexEntry {
    pub id: u64,
    pub m: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EdgeEntry {
    pub u: u64,
    pub v: u64,
    pub b: f64,
}

impl GraphDocument {
    pub fn into_graph(self) -> Result<FiniteGraph> {
        let mut b = GraphBuilder::new();
        let mut ids = HashMap::new();
        for entry in &self.vertices {
            let v = b.add_vertex(Label::named(entry.id), entry.m)?;
            ids.insert(entry.id, v);
        }
        let lookup = |id: u64| {
            ids.get(&id)
                .copied()
                .ok_or_else(|| Error::UnknownVertex(format!("#{id}")))
        };
        for e in &self.edges {
            b.add_edge(lookup(e.u)?, lookup(e.v)?, e.b)?;
        }
        for &f in &self.frontier {
            b.set_frontier(lookup(f)?);
        }
        b.build()
    }
}

#[cfg(test)]
pub(crate) mod tests_support {
    use super::*;

    /// Path `0 - 1 - ... - n` with the given weights and measure, labels `i.0`.
    pub(crate) fn path(weights: &[f64], measure: &[f64]) -> FiniteGraph {
        let mut b = GraphBuilder::new();
        let vs: Vec<_> = measure
            .iter()
            .enumerate()
            .map(|(i, &m)| b.add_vertex(Label::grid(i as u32, 0), m).unwrap())
            .collect();
        for (i, &w) in weights.iter().enumerate() {
            b.add_edge(vs[i], vs[i + 1], w).unwrap();
        }
        b.build().unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::tests_support::path;
    use super::*;

    #[test]
    fn degree_sums_weights_over_measure() {
        let mut b = GraphBuilder::new();
        let x = b.add_vertex(Label::named(0), 2.0).unwrap();
        let y = b.add_vertex(Label::named(1), 1.0).unwrap();
        let z = b.add_vertex(Label::named(2), 1.0).unwrap();
        b.add_edge(x, y, 3.0).unwrap();
        b.add_edge(x, z, 5.0).unwrap();
        let g = b.build().unwrap();
        assert_eq!(g.degree(x).unwrap().value, 4.0);
        assert!(g.degree(x).unwrap().trusted);
    }

    #[test]
    fn laplacian_on_path() {
        let g = path(&[1.0, 1.0], &[1.0, 1.0, 1.0]);
        let f = [0.0, 1.0, 4.0];
        let v = g.laplacian_apply(|x| Some(f[x.index()]), VertexId(1)).unwrap();
        assert_eq!(v.value, -2.0);
        let h = [2.0, 1.0, 0.0];
        assert_eq!(g.laplacian_at(&h, VertexId(1)), 0.0);
    }

    #[test]
    fn laplacian_reports_missing_neighbor_value() {
        let g = path(&[1.0, 1.0], &[1.0, 1.0, 1.0]);
        let err = g
            .laplacian_apply(|x| (x.0 != 2).then_some(1.0), VertexId(1))
            .unwrap_err();
        assert!(matches!(err, Error::MissingValue(l) if l == Label::grid(2, 0)));
    }

    #[test]
    fn spheres_of_path_rooted_in_middle() {
        let g = path(&[1.0, 1.0], &[1.0, 1.0, 1.0]);
        let dec = g.sphere_decompose(VertexId(1)).unwrap();
        assert_eq!(dec.spheres, vec![vec![VertexId(1)], vec![VertexId(0), VertexId(2)]]);
    }

    #[test]
    fn root_has_no_inner_curvature() {
        let g = path(&[2.0, 1.0], &[1.0, 1.0, 1.0]);
        let dec = g.sphere_decompose(VertexId(0)).unwrap();
        let k = g.curvature(&dec, VertexId(0)).unwrap();
        assert_eq!(k.k_minus, 0.0);
        assert_eq!(k.k_plus, 2.0);
    }

    #[test]
    fn rejects_disconnected_duplicate_and_bad_data() {
        let mut b = GraphBuilder::new();
        let x = b.add_vertex(Label::named(0), 1.0).unwrap();
        let y = b.add_vertex(Label::named(1), 1.0).unwrap();
        b.add_vertex(Label::named(2), 1.0).unwrap();
        b.add_edge(x, y, 1.0).unwrap();
        assert!(matches!(b.add_edge(y, x, 1.0), Err(Error::DuplicateEdge(..))));
        assert!(matches!(b.add_edge(x, x, 1.0), Err(Error::SelfLoop(_))));
        assert!(matches!(b.add_edge(x, y, -1.0), Err(Error::InvalidWeight { .. })));
        assert!(matches!(b.build(), Err(Error::Disconnected { reached: 2, total: 3, .. })));

        let mut b = GraphBuilder::new();
        assert!(b.add_vertex(Label::named(0), 0.0).is_err());
    }

    #[test]
    fn tiny_weights_are_absent_edges() {
        let mut b = GraphBuilder::new();
        let x = b.add_vertex(Label::named(0), 1.0).unwrap();
        let y = b.add_vertex(Label::named(1), 1.0).unwrap();
        b.add_edge(x, y, 1e-16).unwrap();
        assert!(b.build().is_err());
    }

    #[test]
    fn boundary_split_cases() {
        let g = path(&[1.0; 5], &[1.0; 6]);
        let ball: Vec<_> = (0..3).map(VertexId).collect();
        let (int, bnd) = g.boundary_split(&ball);
        assert_eq!(int, vec![VertexId(0), VertexId(1)]);
        assert_eq!(bnd, vec![VertexId(2)]);

        let small = path(&[1.0, 1.0], &[1.0; 3]);
        let all: Vec<_> = small.vertices().collect();
        let (int, bnd) = small.boundary_split(&all);
        assert_eq!(int.len(), 3);
        assert!(bnd.is_empty());

        let tail: Vec<_> = (1..6).map(VertexId).collect();
        let (_, bnd) = g.boundary_split(&tail);
        assert_eq!(bnd, vec![VertexId(1)]);
    }

    #[test]
    fn frontier_flags_propagate() {
        let g = path(&[1.0; 3], &[1.0; 4]);
        let ball = g.restrict_ball(VertexId(0), 2).unwrap();
        assert_eq!(ball.len(), 3);
        let last = ball.find(&Label::grid(2, 0)).unwrap();
        assert!(ball.is_frontier(last));
        assert!(!ball.degree(last).unwrap().trusted);
        let (_, bnd) = ball.boundary_split(&ball.vertices().collect::<Vec<_>>());
        assert_eq!(bnd, vec![last]);
    }

    #[test]
    fn label_text_round_trip() {
        for s in ["0.0", "3.17", "2/5.1", "#42", "1/#7"] {
            let l: Label = s.parse().unwrap();
            assert_eq!(l.to_string(), s);
        }
        assert_eq!("4".parse::<Label>().unwrap(), Label::grid(4, 0));
        assert!("x.y".parse::<Label>().is_err());
    }

    #[test]
    fn json_document_ingest() {
        let text = r#"{"vertices":[{"id":0,"m":1},{"id":1,"m":2}],"edges":[{"u":0,"v":1,"b":3}],"frontier":[1]}"#;
        let g = FiniteGraph::from_json(text).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.weight(VertexId(0), VertexId(1)), 3.0);
        assert_eq!(g.weight(VertexId(1), VertexId(0)), 3.0);
        assert!(g.is_frontier(g.resolve("1").unwrap()));
        let dup = r#"{"vertices":[{"id":0,"m":1},{"id":1,"m":2}],"edges":[{"u":0,"v":1,"b":3},{"u":1,"v":0,"b":3}]}"#;
        assert!(matches!(FiniteGraph::from_json(dup), Err(Error::DuplicateEdge(..))));
        let bad_field = r#"{"vertices":[{"id":0,"mass":1}],"edges":[]}"#;
        assert!(FiniteGraph::from_json(bad_field).is_err());
    }
}
