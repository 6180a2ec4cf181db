//! Budgeted bottom-up dynamic programming over a rooted tree whose root is a
//! weight-zero node that can never be asked.
//!
//! Each real node keeps, per budget, a set of summaries of its subtree; the
//! children of a node are folded left to right into partial states before the
//! node itself is closed as asked or not asked. Summaries are compared by
//! dominance, so only Pareto-minimal ones survive when pruning is on.

use crate::graph::{Forest, NodeId};

pub(crate) trait TreeRules {
    type Part: Clone;
    type Sum: Clone;

    /// Partial state of a node before any child is folded in.
    fn start(&self) -> Self::Part;
    fn absorb(&self, part: &Self::Part, child: &Self::Sum) -> Self::Part;
    fn close(&self, part: &Self::Part, asked: bool) -> Self::Sum;
    /// Worst case at the root, given its folded children.
    fn finish(&self, part: &Self::Part) -> usize;
    /// `a` is no worse than `b` for every completion. Only called on states
    /// of the same class.
    fn part_dominates(&self, a: &Self::Part, b: &Self::Part) -> bool;
    fn sum_dominates(&self, a: &Self::Sum, b: &Self::Sum) -> bool;
    fn part_class(&self, _part: &Self::Part) -> u8 {
        0
    }
    fn sum_class(&self, _sum: &Self::Sum) -> u8 {
        0
    }
}

#[derive(Clone, Copy)]
struct Back {
    prev: u32,
    prev_budget: u32,
    child_budget: u32,
    child: u32,
}

struct PartEntry<P> {
    part: P,
    back: Back,
}

pub(crate) struct SumEntry<S> {
    pub sum: S,
    pub asked: bool,
    /// Budget spent strictly below the node.
    pub below: usize,
    part: u32,
}

/// `stages[s][j]`: partial states after `s` children with budget `j`.
type Stages<P> = Vec<Vec<Vec<PartEntry<P>>>>;

pub(crate) struct DpResult {
    pub value: usize,
    pub asked: Vec<NodeId>,
}

fn keep_minimal<T>(
    items: Vec<T>,
    class: impl Fn(&T) -> u8,
    dominates: impl Fn(&T, &T) -> bool,
) -> Vec<T> {
    let mut kept: Vec<T> = Vec::with_capacity(items.len());
    for item in items {
        let c = class(&item);
        if kept.iter().any(|k| class(k) == c && dominates(k, &item)) {
            continue;
        }
        kept.retain(|k| class(k) != c || !dominates(&item, k));
        kept.push(item);
    }
    kept
}

/// Minimises the root objective over question sets of at most `k` nodes,
/// excluding `root`. Among equal objectives the smallest budget wins.
pub(crate) fn optimise<R: TreeRules>(
    rules: &R,
    tree: &Forest,
    root: NodeId,
    k: usize,
    prune: bool,
) -> DpResult {
    let n = tree.len();
    let mut tables: Vec<Vec<Vec<SumEntry<R::Sum>>>> = (0..n).map(|_| Vec::new()).collect();
    let mut stages: Vec<Stages<R::Part>> = (0..n).map(|_| Vec::new()).collect();

    for &x in tree.preorder().iter().rev() {
        let node_stages = fold_children(rules, tree, x, k, &tables, prune);
        if x != root {
            let last = node_stages.last().expect("stage zero exists");
            let len = (last.len() + 1).min(k + 1);
            let mut finals: Vec<Vec<SumEntry<R::Sum>>> = (0..len).map(|_| Vec::new()).collect();
            for (j, parts) in last.iter().enumerate() {
                for (pi, p) in parts.iter().enumerate() {
                    finals[j].push(SumEntry {
                        sum: rules.close(&p.part, false),
                        asked: false,
                        below: j,
                        part: pi as u32,
                    });
                    if j < k {
                        finals[j + 1].push(SumEntry {
                            sum: rules.close(&p.part, true),
                            asked: true,
                            below: j,
                            part: pi as u32,
                        });
                    }
                }
            }
            while finals.last().is_some_and(|f| f.is_empty()) {
                finals.pop();
            }
            if prune {
                finals = finals
                    .into_iter()
                    .map(|f| {
                        keep_minimal(
                            f,
                            |e| rules.sum_class(&e.sum),
                            |a, b| rules.sum_dominates(&a.sum, &b.sum),
                        )
                    })
                    .collect();
            }
            tables[x.0] = finals;
        }
        stages[x.0] = node_stages;
    }

    let root_last = stages[root.0].last().expect("stage zero exists");
    let mut best: Option<(usize, usize, usize)> = None;
    for (j, parts) in root_last.iter().enumerate() {
        for (pi, p) in parts.iter().enumerate() {
            let v = rules.finish(&p.part);
            if best.is_none_or(|(bv, _, _)| v < bv) {
                best = Some((v, j, pi));
            }
        }
    }
    let (value, j, pi) = best.expect("budget zero is always feasible");

    let mut asked = Vec::new();
    let mut pending: Vec<(NodeId, usize, usize)> = Vec::new();
    trace_parts(tree, &stages, root, j, pi, &mut pending);
    while let Some((x, budget, idx)) = pending.pop() {
        let e = &tables[x.0][budget][idx];
        if e.asked {
            asked.push(x);
        }
        trace_parts(tree, &stages, x, e.below, e.part as usize, &mut pending);
    }
    asked.sort_unstable();
    DpResult { value, asked }
}

fn fold_children<R: TreeRules>(
    rules: &R,
    tree: &Forest,
    x: NodeId,
    k: usize,
    tables: &[Vec<Vec<SumEntry<R::Sum>>>],
    prune: bool,
) -> Stages<R::Part> {
    let origin = Back {
        prev: 0,
        prev_budget: 0,
        child_budget: 0,
        child: 0,
    };
    let mut out: Stages<R::Part> = vec![vec![vec![PartEntry {
        part: rules.start(),
        back: origin,
    }]]];
    for &c in tree.children(x) {
        let prev = out.last().expect("stage zero exists");
        let child = &tables[c.0];
        let cap = (prev.len() - 1 + child.len() - 1).min(k);
        let mut next: Vec<Vec<PartEntry<R::Part>>> = (0..=cap).map(|_| Vec::new()).collect();
        for (j1, parts) in prev.iter().enumerate() {
            for (j2, sums) in child.iter().enumerate() {
                if j1 + j2 > k {
                    break;
                }
                for (pi, p) in parts.iter().enumerate() {
                    for (si, s) in sums.iter().enumerate() {
                        next[j1 + j2].push(PartEntry {
                            part: rules.absorb(&p.part, &s.sum),
                            back: Back {
                                prev: pi as u32,
                                prev_budget: j1 as u32,
                                child_budget: j2 as u32,
                                child: si as u32,
                            },
                        });
                    }
                }
            }
        }
        if prune {
            next = next
                .into_iter()
                .map(|v| {
                    keep_minimal(
                        v,
                        |e| rules.part_class(&e.part),
                        |a, b| rules.part_dominates(&a.part, &b.part),
                    )
                })
                .collect();
        }
        out.push(next);
    }
    out
}

fn trace_parts<P>(
    tree: &Forest,
    stages: &[Stages<P>],
    x: NodeId,
    mut budget: usize,
    mut idx: usize,
    pending: &mut Vec<(NodeId, usize, usize)>,
) {
    let kids = tree.children(x);
    for s in (1..=kids.len()).rev() {
        let back = stages[x.0][s][budget][idx].back;
        pending.push((kids[s - 1], back.child_budget as usize, back.child as usize));
        budget = back.prev_budget as usize;
        idx = back.prev as usize;
    }
}

/// Root objective for a fixed question set, one summary per node.
pub(crate) fn evaluate<R: TreeRules>(
    rules: &R,
    tree: &Forest,
    root: NodeId,
    asked: &[bool],
) -> usize {
    rules.finish(&evaluate_part(rules, tree, root, asked))
}

/// Folded children of the root for a fixed question set.
pub(crate) fn evaluate_part<R: TreeRules>(
    rules: &R,
    tree: &Forest,
    root: NodeId,
    asked: &[bool],
) -> R::Part {
    let mut sums: Vec<Option<R::Sum>> = vec![None; tree.len()];
    for &x in tree.preorder().iter().rev() {
        let mut part = rules.start();
        for &c in tree.children(x) {
            part = rules.absorb(&part, sums[c.0].as_ref().expect("children first"));
        }
        if x == root {
            return part;
        }
        sums[x.0] = Some(rules.close(&part, asked[x.0]));
    }
    unreachable!("root is part of the tree")
}

/// `None` sorts below every value: an impossible state never raises a maximum.
pub(crate) fn opt_add(a: Option<usize>, b: Option<usize>) -> Option<usize> {
    Some(a? + b?)
}

pub(crate) fn opt_le(a: Option<usize>, b: Option<usize>) -> bool {
    match (a, b) {
        (None, _) => true,
        (Some(_), None) => false,
        (Some(x), Some(y)) => x <= y,
    }
}
