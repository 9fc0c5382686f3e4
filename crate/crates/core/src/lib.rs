//! Probabilistic causation for cumulative binary data: prima facie filtering,
//! tree and DAG progression reconstruction, confidence estimation, synthetic
//! data generation, and structural comparison.

pub mod caprese;
pub mod capri;
pub mod confidence;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod export;
pub mod patterns;
pub mod rng;
pub mod sbcn;
pub mod suppes;
pub mod synthgen;

pub use caprese::{reconstruct_tree, TreeModel, TreeSelection};
pub use capri::{reconstruct, CapriParams, CapriResult, ProgressionModel, Regularizer};
pub use confidence::{Algo, BootstrapKind, BootstrapReport};
pub use dataset::{BitColumn, ConsolidationReport, EventId, EventMeta, GenotypeMatrix, MatrixFormat};
pub use error::{Error, Result};
pub use eval::{EdgeSet, EvalReport};
pub use export::ModelDoc;
pub use patterns::{lift, Formula, Hypothesis, LiftedMatrix, Op, TargetSelector};
pub use sbcn::{Sbcn, WalkScores};
pub use suppes::{PrimaFacieGraph, PfEdge};
pub use synthgen::{GroundTruth, StructureKind, TopologySpec};
