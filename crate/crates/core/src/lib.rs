//! Identification of custom instruction candidates in basic-block data
//! dependency graphs, clustering with recomputation of common operations,
//! and removal of candidates that are special cases of others.

pub mod candidate;
pub mod cluster;
pub mod clustering;
pub mod corpus;
pub mod extract;
pub mod ir;
pub mod report;
pub mod smt;
pub mod subsume;

pub use candidate::{
    cluster_to_function, dedupe_structural, emit_term, eval_fn, parse_functions, CandidateError,
    CandidateInstruction,
};
pub use cluster::{Cluster, ClusterError, ClusterGraph, CoverError};
pub use clustering::{
    can_combine, clone_and_combine, combine_pass, combine_subgraphs, singleton_clusters, Clustered,
};
pub use extract::{cluster_inputs, is_legal_body, is_legal_miso, max_miso, ArchConstraints};
pub use ir::{eval_ddg, parse_ddg, Ddg, NodeId, OpKind};
pub use report::{code_size, sweep, CoverReport, SetReport};
pub use smt::{SolverSession, SolverVerdict};
pub use subsume::{
    minimize_set, subsume, BruteOracle, Oracle, SmtOracle, SubsumeConfig, SubsumeVerdict, Witness,
};
