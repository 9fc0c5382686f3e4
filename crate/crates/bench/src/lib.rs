//! Shared fixtures for the benchmarks in `benches/`.

use suppes_core::synthgen::{random_dag, random_tree, sample_dataset};
use suppes_core::{GenotypeMatrix, GroundTruth, TopologySpec};

/// A random tree over `n` events and `m` rows sampled from it.
pub fn tree_data(n: usize, m: usize, seed: u64) -> (GroundTruth, GenotypeMatrix) {
    let gt = random_tree(&TopologySpec::tree(n, seed)).expect("valid spec");
    let data = sample_dataset(&gt, m, seed).expect("rows > 0");
    (gt, data)
}

/// A random connected DAG with at most three parents per event.
pub fn dag_data(n: usize, m: usize, seed: u64) -> (GroundTruth, GenotypeMatrix) {
    let gt = random_dag(&TopologySpec::dag(n, 3, seed)).expect("valid spec");
    let data = sample_dataset(&gt, m, seed).expect("rows > 0");
    (gt, data)
}
