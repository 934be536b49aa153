#![allow(dead_code)]

use liouville_core::{FiniteGraph, GraphBuilder, Label, VertexId};
use rand::Rng;

/// Connected graph on `n` vertices: a random spanning tree plus `extra` random edges,
/// weights and measures drawn from `[0.1, 10]`.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize, extra: usize) -> FiniteGraph {
    let mut b = GraphBuilder::new();
    let ids: Vec<VertexId> = (0..n as u64)
        .map(|i| b.add_vertex(Label::named(i), rng.gen_range(0.1..10.0)).unwrap())
        .collect();
    let mut edges = std::collections::HashSet::new();
    for i in 1..n {
        let j = rng.gen_range(0..i);
        edges.insert((j, i));
    }
    for _ in 0..extra {
        let (a, c) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a != c {
            edges.insert((a.min(c), a.max(c)));
        }
    }
    let mut edges: Vec<_> = edges.into_iter().collect();
    edges.sort_unstable();
    for (a, c) in edges {
        b.add_edge(ids[a], ids[c], rng.gen_range(0.1..10.0)).unwrap();
    }
    b.build().unwrap()
}

/// Largest radius around `x` with a nonempty sphere; Dirichlet balls need a smaller one.
pub fn eccentricity(g: &FiniteGraph, x: VertexId) -> usize {
    g.sphere_decompose(x).unwrap().max_radius()
}
