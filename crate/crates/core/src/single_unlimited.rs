//! Smallest question sets that always pin down a single target.

use crate::error::{Error, Result};
use crate::graph::{Dag, Direction, Forest, NodeId};
use crate::plan::{Method, Plan};
use crate::semantics::Variant;
use crate::single_bounded::{brute_force_with, Limits};

/// Downward forests: every node except the first tree root.
pub fn solve_down_forest_unlimited(forest: &Dag) -> Result<Plan> {
    let view = Forest::new(forest, Direction::Down)?;
    let skip = view.roots().first().copied();
    let questions = forest.nodes().filter(|&v| Some(v) != skip).collect();
    Ok(Plan::unlimited(
        Variant::Single,
        Method::DownForestUnlimited,
        forest.n().min(1),
        questions,
    ))
}

/// Upward forests: every leaf and every node with exactly one child. One leaf
/// may go unasked when its parent does not have exactly two children (or it
/// has no parent); the lowest-index such leaf is skipped.
pub fn solve_up_forest_unlimited(forest: &Dag) -> Result<Plan> {
    let view = Forest::new(forest, Direction::Up)?;
    let exempt = forest
        .nodes()
        .find(|&v| view.is_leaf(v) && view.parent(v).is_none_or(|p| view.children(p).len() != 2));
    let questions: Vec<NodeId> = forest
        .nodes()
        .filter(|&v| Some(v) != exempt)
        .filter(|&v| view.is_leaf(v) || view.children(v).len() == 1)
        .collect();
    Ok(Plan::unlimited(
        Variant::Single,
        Method::UpForestUnlimited,
        forest.n().min(1),
        questions,
    ))
}

/// General DAGs: the smallest budget whose exhaustive optimum reaches 1.
pub fn solve_dag_unlimited(dag: &Dag) -> Result<Plan> {
    solve_dag_unlimited_with(dag, &Limits::default())
}

pub fn solve_dag_unlimited_with(dag: &Dag, limits: &Limits) -> Result<Plan> {
    if dag.n() > limits.single_nodes {
        return Err(Error::TooLarge {
            what: "Single-Unlimited search",
            size: dag.n(),
            limit: limits.single_nodes,
        });
    }
    for k in 0..=dag.n() {
        let plan = brute_force_with(dag, k, limits)?;
        if plan.wcase <= 1 {
            return Ok(Plan::unlimited(
                Variant::Single,
                Method::DagUnlimited,
                plan.wcase,
                plan.questions,
            ));
        }
    }
    unreachable!("asking every node separates all targets")
}

/// Dispatches Single-Unlimited by structure.
pub fn solve_unlimited(dag: &Dag) -> Result<Plan> {
    if dag.is_down_forest() {
        solve_down_forest_unlimited(dag)
    } else if dag.is_up_forest() {
        solve_up_forest_unlimited(dag)
    } else {
        solve_dag_unlimited(dag).map_err(|_| Error::NoSolverApplicable {
            structure: dag.classify().to_string(),
            n: dag.n(),
        })
    }
}
