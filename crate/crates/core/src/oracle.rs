//! Exhaustive reference answers computed straight from the definitions.
//!
//! Nothing here calls into the solvers or the semantics module: reachability
//! is recomputed by depth-first search and every candidate set is rebuilt from
//! the one-question pruning rules, so a disagreement always points at the
//! solver under test.

use std::collections::HashMap;

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Dag, NodeId};
use crate::plan::{Method, Mode, Plan};
use crate::semantics::Variant;

/// Exhaustive-search limits; acceptance suites may widen them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    /// Largest graph whose antichains are enumerated.
    pub antichain_nodes: usize,
    pub single_nodes: usize,
    pub multi_bounded_nodes: usize,
    pub multi_unlimited_nodes: usize,
    /// Largest number of question sets tried for one budget.
    pub subsets: u64,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            antichain_nodes: 16,
            single_nodes: 14,
            multi_bounded_nodes: 12,
            multi_unlimited_nodes: 10,
            subsets: 3432,
        }
    }
}

/// Reachability rows as bit masks, rebuilt by depth-first search.
struct SmallReach {
    n: usize,
    /// `down[u]`: nodes reachable from `u`, including `u`.
    down: Vec<u64>,
}

impl SmallReach {
    fn new(dag: &Dag) -> SmallReach {
        let n = dag.n();
        assert!(n <= 64);
        let down = dag.nodes().map(|u| dfs_mask(dag, u)).collect();
        SmallReach { n, down }
    }

    fn reaches(&self, a: usize, b: usize) -> bool {
        self.down[a] >> b & 1 == 1
    }

    fn full(&self) -> u64 {
        if self.n == 64 {
            u64::MAX
        } else {
            (1u64 << self.n) - 1
        }
    }

    fn independent(&self, set: u64) -> bool {
        let mut rest = set;
        while rest != 0 {
            let u = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            if self.down[u] & set & !(1u64 << u) != 0 {
                return false;
            }
        }
        true
    }

    /// Candidate mask of a target set, intersecting one-question prunings.
    fn multi_candidates(&self, questions: &[usize], targets: u64) -> u64 {
        let mut cand = self.full();
        for &q in questions {
            if self.down[q] & targets != 0 {
                // YES: drop the nodes that strictly reach q.
                for v in 0..self.n {
                    if v != q && self.reaches(v, q) {
                        cand &= !(1u64 << v);
                    }
                }
            } else {
                cand &= !self.down[q];
            }
        }
        cand
    }
}

fn dfs_mask(dag: &Dag, u: NodeId) -> u64 {
    let mut seen = 1u64 << u.0;
    let mut stack = vec![u];
    while let Some(x) = stack.pop() {
        for &y in dag.successors(x) {
            if seen >> y.0 & 1 == 0 {
                seen |= 1 << y.0;
                stack.push(y);
            }
        }
    }
    seen
}

fn dfs_set(dag: &Dag, u: NodeId, seen: &mut [bool], stack: &mut Vec<NodeId>) {
    seen.iter_mut().for_each(|s| *s = false);
    seen[u.0] = true;
    stack.clear();
    stack.push(u);
    while let Some(x) = stack.pop() {
        for &y in dag.successors(x) {
            if !seen[y.0] {
                seen[y.0] = true;
                stack.push(y);
            }
        }
    }
}

fn mask_nodes(mask: u64) -> Vec<NodeId> {
    let mut out = Vec::new();
    let mut rest = mask;
    while rest != 0 {
        out.push(NodeId(rest.trailing_zeros() as usize));
        rest &= rest - 1;
    }
    out
}

/// Every non-empty independent set, ordered by its bit mask (node `i` is bit
/// `i`), so `{a}, {b}, {c}, {b, c}` for a star rooted at `a`.
pub fn enumerate_antichains(dag: &Dag) -> Result<impl Iterator<Item = Vec<NodeId>>> {
    enumerate_antichains_with(dag, &OracleLimits::default())
}

pub fn enumerate_antichains_with(
    dag: &Dag,
    limits: &OracleLimits,
) -> Result<impl Iterator<Item = Vec<NodeId>>> {
    let n = dag.n();
    let limit = limits.antichain_nodes.min(30);
    if n > limit {
        return Err(Error::TooLarge {
            what: "antichain enumeration",
            size: n,
            limit,
        });
    }
    let reach = SmallReach::new(dag);
    Ok((1u64..(1u64 << n))
        .filter(move |&m| reach.independent(m))
        .map(mask_nodes))
}

/// Per-target candidate sizes under Single: a target's candidate set is every
/// node answering all questions the same way.
fn single_class_sizes(dag: &Dag, questions: &[NodeId]) -> Vec<usize> {
    let n = dag.n();
    let mut seen = vec![false; n];
    let mut stack = Vec::new();
    let words = questions.len().div_ceil(64).max(1);
    let mut sig = vec![vec![0u64; words]; n];
    for (i, &q) in questions.iter().enumerate() {
        dfs_set(dag, q, &mut seen, &mut stack);
        for v in 0..n {
            if seen[v] {
                sig[v][i / 64] |= 1 << (i % 64);
            }
        }
    }
    let mut count: HashMap<&[u64], usize> = HashMap::new();
    for s in &sig {
        *count.entry(s.as_slice()).or_default() += 1;
    }
    sig.iter().map(|s| count[s.as_slice()]).collect()
}

fn single_wcase(dag: &Dag, questions: &[NodeId]) -> usize {
    single_class_sizes(dag, questions)
        .into_iter()
        .max()
        .unwrap_or(0)
}

fn multi_wcase(reach: &SmallReach, questions: &[usize]) -> (usize, u64) {
    let mut worst = (0usize, 0u64);
    for set in 1u64..(1u64 << reach.n) {
        if !reach.independent(set) {
            continue;
        }
        let size = reach.multi_candidates(questions, set).count_ones() as usize;
        if size > worst.0 {
            worst = (size, set);
        }
    }
    worst
}

fn check_nodes(n: usize, limit: usize, what: &'static str) -> Result<()> {
    if n > limit {
        return Err(Error::TooLarge {
            what,
            size: n,
            limit,
        });
    }
    Ok(())
}

fn subsets(n: usize, k: usize) -> u64 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128) as u64
}

/// Best question set of exactly `take` nodes, first minimum in lexicographic
/// order, errors when the enumeration would exceed the limits.
fn best_of_size(
    dag: &Dag,
    take: usize,
    limits: &OracleLimits,
    score: &(dyn Fn(&[NodeId]) -> usize + Sync),
) -> Result<(usize, Vec<NodeId>)> {
    let count = subsets(dag.n(), take);
    if count > limits.subsets {
        return Err(Error::TooLarge {
            what: "oracle question sets",
            size: count as usize,
            limit: limits.subsets as usize,
        });
    }
    let sets: Vec<Vec<NodeId>> = dag.nodes().combinations(take).collect();
    let scores: Vec<usize> = sets.par_iter().map(|s| score(s)).collect();
    let best = (0..sets.len())
        .min_by_key(|&i| (scores[i], i))
        .expect("at least one set");
    Ok((scores[best], sets[best].clone()))
}

/// True optimum for any variant and mode by exhaustive search.
pub fn oracle_optimal(dag: &Dag, k: usize, variant: Variant, mode: Mode) -> Result<Plan> {
    oracle_optimal_with(dag, k, variant, mode, &OracleLimits::default())
}

pub fn oracle_optimal_with(
    dag: &Dag,
    k: usize,
    variant: Variant,
    mode: Mode,
    limits: &OracleLimits,
) -> Result<Plan> {
    let n = dag.n();
    let plan = |wcase, questions, k| Plan {
        variant,
        mode,
        k,
        method: Method::Oracle,
        slack: 0,
        wcase,
        questions,
    };
    match (variant, mode) {
        (Variant::Single, Mode::Bounded) => {
            check_nodes(n, limits.single_nodes, "oracle Single")?;
            let score = |s: &[NodeId]| single_wcase(dag, s);
            let (w, q) = best_of_size(dag, k.min(n), limits, &score)?;
            Ok(plan(w, q, Some(k)))
        }
        (Variant::Single, Mode::Unlimited) => {
            check_nodes(n, limits.single_nodes, "oracle Single")?;
            let score = |s: &[NodeId]| single_wcase(dag, s);
            for take in 0..=n {
                let (w, q) = best_of_size(dag, take, limits, &score)?;
                if w <= 1 {
                    return Ok(plan(w, q, None));
                }
            }
            unreachable!("asking every node separates all targets")
        }
        (Variant::Multi, Mode::Bounded) => {
            check_nodes(n, limits.multi_bounded_nodes, "oracle Multi")?;
            let reach = SmallReach::new(dag);
            let score = |s: &[NodeId]| {
                let qs: Vec<usize> = s.iter().map(|q| q.0).collect();
                multi_wcase(&reach, &qs).0
            };
            let (w, q) = best_of_size(dag, k.min(n), limits, &score)?;
            Ok(plan(w, q, Some(k)))
        }
        (Variant::Multi, Mode::Unlimited) => {
            check_nodes(n, limits.multi_unlimited_nodes, "oracle Multi")?;
            let reach = SmallReach::new(dag);
            let antichains: Vec<u64> = (1u64..(1u64 << n))
                .filter(|&m| reach.independent(m))
                .collect();
            for take in 0..=n {
                for set in dag.nodes().combinations(take) {
                    let qs: Vec<usize> = set.iter().map(|q| q.0).collect();
                    let exact = antichains
                        .iter()
                        .all(|&u| reach.multi_candidates(&qs, u) == u);
                    if exact {
                        let w = antichains.iter().map(|u| u.count_ones()).max().unwrap_or(0);
                        return Ok(plan(w as usize, set, None));
                    }
                }
            }
            unreachable!("asking every node identifies every target set")
        }
    }
}

/// Whether a plan's stated worst case holds, with a target set attaining the
/// recomputed worst case.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub pass: bool,
    pub expected_wcase: usize,
    pub found_wcase: usize,
    pub witness_targets: Vec<String>,
}

/// Recomputes the worst case of `plan.questions` from scratch. Single plans
/// scale to large graphs; Multi plans need antichain enumeration.
pub fn verify_plan(dag: &Dag, plan: &Plan, variant: Variant) -> Result<VerifyReport> {
    verify_plan_with(dag, plan, variant, &OracleLimits::default())
}

pub fn verify_plan_with(
    dag: &Dag,
    plan: &Plan,
    variant: Variant,
    limits: &OracleLimits,
) -> Result<VerifyReport> {
    let (found, witness) = match variant {
        Variant::Single => {
            let sizes = single_class_sizes(dag, &plan.questions);
            let mut best: Option<(usize, usize)> = None;
            for (t, &s) in sizes.iter().enumerate() {
                if best.is_none_or(|(b, _)| s > b) {
                    best = Some((s, t));
                }
            }
            match best {
                Some((s, t)) => (s, vec![NodeId(t)]),
                None => (0, Vec::new()),
            }
        }
        Variant::Multi => {
            check_nodes(
                dag.n(),
                limits.antichain_nodes.min(30),
                "Multi verification",
            )?;
            let reach = SmallReach::new(dag);
            let qs: Vec<usize> = plan.questions.iter().map(|q| q.0).collect();
            let (w, set) = multi_wcase(&reach, &qs);
            (w, mask_nodes(set))
        }
    };
    Ok(VerifyReport {
        pass: found == plan.wcase && plan.k.is_none_or(|k| plan.questions.len() <= k),
        expected_wcase: plan.wcase,
        found_wcase: found,
        witness_targets: witness.iter().map(|&v| dag.name(v).to_owned()).collect(),
    })
}
