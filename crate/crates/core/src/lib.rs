//! Potential theory on infinite weighted graphs through finite exhaustions.
//!
//! The crate materializes balls of lazily described graph families, solves Dirichlet
//! problems on them, classifies radial models through their closed-form series and
//! checks the comparison and transplantation arguments numerically.

pub mod comparison;
pub mod counterexamples;
pub mod dirichlet;
pub mod error;
pub mod fit;
pub mod generators;
pub mod graph;
pub mod heat;
pub mod model;
pub mod sequence;
pub mod solver;
pub mod subgraph;
pub mod walker;

pub use comparison::{
    curvature_dominance, radial_scan, transplant_exit_check, transplant_green_check, Direction, DominanceReport,
};
pub use counterexamples::{build_example1, build_example2, certify_l1_after_rescale, Example2, OmoriYauReport};
pub use dirichlet::{dirichlet_green, mean_exit, Ball, BallSystem, DirichletSystem, ExitTable, GreenTable, VertexTable};
pub use error::{Error, Result};
pub use fit::{classify_growth, Growth};
pub use generators::{build_antitree, section4_example, GraphSpec, LambdaSq, RadialModel};
pub use graph::{CurvaturePair, FiniteGraph, Flagged, GraphBuilder, Label, SphereDecomposition, VertexId};
pub use heat::{heat_kernel, HeatCurve, HeatMode};
pub use model::{classify, Answer, Classification, Verdict, DEFAULT_N_MAX};
pub use sequence::{Envelope, Extension, Sequence};
pub use solver::SolverMode;
pub use subgraph::{EndsReport, SubgraphProblem};
pub use walker::{simulate_exit, survival_probability, WalkConfig, WalkStats};
