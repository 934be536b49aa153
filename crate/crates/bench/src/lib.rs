//! Criterion benchmarks for the solver, classifier, sweep and walker; see `benches/`.

use liouville_core::{build_antitree, FiniteGraph, Sequence};

/// Antitree with sphere sizes `(r+1)^2`, materialized to radius `r`.
pub fn antitree_ball(r: usize) -> FiniteGraph {
    build_antitree(&Sequence::shifted_power(2.0), r).expect("valid sizes")
}
