//! Exact clustering for perturbation-resilient metric instances.
//!
//! The solver builds a minimum spanning tree of the metric, binarizes it,
//! and runs a dynamic program that finds the cheapest partition into `k`
//! center-assigned subtrees. On 2-metric-perturbation-resilient instances
//! this partition is the global optimum for any natural center-based
//! objective; exhaustive oracles and a resilience verification toolkit are
//! included for validating that claim at small `n`.

// Index-based loops are the norm here: most hot loops walk flat n x n
// matrices and parallel tables where iterator chains obscure the indexing.
#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod io;
pub mod metric;
pub mod mst;
pub mod objective;
pub mod oracle;
pub mod resilience;
pub mod tree_dp;

pub use error::{Error, Result};
pub use metric::{
    adversarial_perturbation, metric_closure, random_metric_perturbation, validate_metric,
    MetricSpace, Norm, PerturbationMode, PerturbationSpec, ValidationReport,
};
pub use mst::{is_subtree_connected, kruskal, MstEdge, SpanningTree};
pub use objective::{
    cluster_cost, clustering_cost, cost_with_centers, lloyd_improvement, Clustering, Mode,
    Objective,
};
pub use oracle::{
    brute_force_optimal, center_enumeration_optimal, tree_partition_optimal, OracleResult,
};
pub use resilience::{
    adversarial_witness, check_center_proximity, check_closer_to_own_center,
    generate_resilient_instance, probe_resilience, single_linkage_baseline, ProximityReport,
    ResilienceProbeReport,
};
pub use tree_dp::{cluster, dp_cluster, dp_cost_only, root_and_binarize, RootedBinaryTree};
