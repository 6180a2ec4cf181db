//! Worst-case optimal selection of reachability questions over DAGs.
//!
//! A hidden target node (or an antichain of target nodes) sits somewhere in a
//! DAG. Asking a question at node `u` reveals whether some target is
//! reachable from `u`. Given a budget, the solvers pick the question set that
//! minimises the largest set of nodes still indistinguishable from the truth.

mod dp;
pub mod error;
pub mod graph;
pub mod harness;
pub mod io;
pub mod multi;
pub mod oracle;
pub mod plan;
pub mod semantics;
pub mod single_bounded;
pub mod single_unlimited;

pub use error::{Error, Result};
pub use graph::{
    augment_forest, build_dag, induced_candidate_graph, induced_subgraph, reverse, AugmentedTree,
    Dag, Direction, Forest, Induced, NodeId, StructureClass,
};
pub use plan::{Method, Mode, Plan, PlanRecord};
pub use semantics::{
    ask, candidate_one, candidate_set, check_consistency, ip, simulate, wcase_multi, wcase_single,
    Answer, AnswerSet, CandidateSet, Response, TargetSet, Variant,
};
