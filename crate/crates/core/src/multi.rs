//! Multi-target question selection.

use itertools::Itertools;
use rayon::prelude::*;

use crate::dp::{self, opt_add, opt_le, TreeRules};
use crate::error::{Error, Result};
use crate::graph::{
    augment_forest, induced_subgraph, reverse, Dag, Direction, Forest, NodeId, StructureClass,
};
use crate::plan::{Method, Plan};
use crate::semantics::{wcase_multi_with_limit, AnswerSet, Variant};
use crate::single_bounded::{binomial, in_balanced_regime, Limits};

/// Subtree summary for the Multi program: the worst number of surviving
/// nodes in the subtree, split by whether an asked node below "fires".
///
/// On downward trees a subtree is active when some question inside it
/// answers YES; on upward trees when some question inside it answers NO. An
/// active subtree excludes its root unless the root itself was asked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MultiDpTuple {
    /// `None` when no question lies in the subtree.
    pub active: Option<usize>,
    pub passive: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct MultiPart {
    /// Some folded child is active.
    any_active: Option<usize>,
    /// Every folded child is passive.
    all_passive: usize,
}

pub(crate) struct MultiRules {
    pub direction: Direction,
}

impl TreeRules for MultiRules {
    type Part = MultiPart;
    type Sum = MultiDpTuple;

    fn start(&self) -> MultiPart {
        MultiPart {
            any_active: None,
            all_passive: 0,
        }
    }

    fn absorb(&self, p: &MultiPart, c: &MultiDpTuple) -> MultiPart {
        let widest = c.active.map_or(c.passive, |a| a.max(c.passive));
        let via_prev = p.any_active.map(|a| a + widest);
        let via_child = opt_add(Some(p.all_passive), c.active);
        MultiPart {
            any_active: via_prev.max(via_child),
            all_passive: p.all_passive + c.passive,
        }
    }

    fn close(&self, p: &MultiPart, asked: bool) -> MultiDpTuple {
        if !asked {
            return MultiDpTuple {
                active: p.any_active,
                passive: 1 + p.all_passive,
            };
        }
        match self.direction {
            Direction::Down => MultiDpTuple {
                active: Some((1 + p.all_passive).max(p.any_active.unwrap_or(0))),
                passive: 0,
            },
            Direction::Up => MultiDpTuple {
                active: Some(p.all_passive.max(p.any_active.unwrap_or(0))),
                passive: 1,
            },
        }
    }

    fn finish(&self, p: &MultiPart) -> usize {
        p.all_passive.max(p.any_active.unwrap_or(0))
    }

    fn part_dominates(&self, a: &MultiPart, b: &MultiPart) -> bool {
        opt_le(a.any_active, b.any_active) && a.all_passive <= b.all_passive
    }

    fn sum_dominates(&self, a: &MultiDpTuple, b: &MultiDpTuple) -> bool {
        opt_le(a.active, b.active) && a.passive <= b.passive
    }
}

fn forest_direction(dag: &Dag) -> Result<Direction> {
    if dag.is_down_forest() {
        Ok(Direction::Down)
    } else if dag.is_up_forest() {
        Ok(Direction::Up)
    } else {
        Err(Error::WrongStructure {
            expected: "downward or upward forest",
        })
    }
}

/// Exact Multi-Bounded on downward or upward forests, each orientation
/// solved natively over the forest joined under a never-asked virtual root.
pub fn solve_multi_forest(forest: &Dag, k: usize) -> Result<Plan> {
    let direction = forest_direction(forest)?;
    let aug = augment_forest(forest, direction)?;
    let tree = Forest::new(&aug.tree, direction)?;
    let out = dp::optimise(
        &MultiRules { direction },
        &tree,
        aug.virtual_root,
        k.min(forest.n()),
        true,
    );
    let questions = out
        .asked
        .into_iter()
        .filter_map(|q| aug.to_forest(q))
        .collect();
    Ok(Plan::bounded(
        Variant::Multi,
        k,
        Method::MultiForest,
        out.value,
        questions,
    ))
}

/// Multi worst case of a fixed question set on a forest, in linear time.
pub fn wcase_multi_forest(forest: &Dag, questions: &[NodeId]) -> Result<usize> {
    let (a, p) = forest_summary(forest, questions)?;
    Ok(a.unwrap_or(0).max(p))
}

/// `(worst with a firing question, worst without)` over the whole forest.
fn forest_summary(forest: &Dag, questions: &[NodeId]) -> Result<(Option<usize>, usize)> {
    let direction = forest_direction(forest)?;
    let aug = augment_forest(forest, direction)?;
    let tree = Forest::new(&aug.tree, direction)?;
    let mut asked = vec![false; tree.len()];
    for q in questions {
        asked[q.0] = true;
    }
    let rules = MultiRules { direction };
    let part = dp::evaluate_part(&rules, &tree, aug.virtual_root, &asked);
    Ok((part.any_active, part.all_passive))
}

/// Reverses every edge and complements every answer.
pub fn transform_equivalence(tree: &Dag, answers: &AnswerSet) -> (Dag, AnswerSet) {
    let flipped = answers
        .iter()
        .map(|mut a| {
            a.value = a.value.complement();
            a
        })
        .collect();
    (reverse(tree), flipped)
}

/// Exact minimum of the Multi worst case over all question sets of size
/// `min(k, n)`, by antichain enumeration; the first minimum in lexicographic
/// order wins.
pub fn brute_force_multi(dag: &Dag, k: usize) -> Result<Plan> {
    brute_force_multi_with(dag, k, &Limits::default())
}

pub fn brute_force_multi_with(dag: &Dag, k: usize, limits: &Limits) -> Result<Plan> {
    let n = dag.n();
    let take = k.min(n);
    if n > limits.multi_nodes {
        return Err(Error::TooLarge {
            what: "Multi brute force (nodes)",
            size: n,
            limit: limits.multi_nodes,
        });
    }
    let subsets = binomial(n, take);
    if subsets > limits.multi_subsets {
        return Err(Error::TooLarge {
            what: "Multi brute force (question sets)",
            size: subsets as usize,
            limit: limits.multi_subsets as usize,
        });
    }
    let sets: Vec<Vec<NodeId>> = dag.nodes().combinations(take).collect();
    let scores = sets
        .par_iter()
        .map(|s| wcase_multi_with_limit(dag, s, limits.multi_nodes))
        .collect::<Result<Vec<usize>>>()?;
    let (best, &wcase) = scores
        .iter()
        .enumerate()
        .min_by_key(|&(i, w)| (*w, i))
        .expect("at least the empty set is tried");
    Ok(Plan::bounded(
        Variant::Multi,
        k,
        Method::MultiBruteForce,
        wcase,
        sets[best].clone(),
    ))
}

/// Largest antichain of the reachability order (Dilworth: `n` minus a
/// maximum matching between strict comparabilities).
pub fn poset_width(dag: &Dag) -> usize {
    let n = dag.n();
    if dag.is_down_forest() || dag.is_up_forest() {
        let dir = if dag.is_down_forest() {
            Direction::Down
        } else {
            Direction::Up
        };
        let view = Forest::new(dag, dir).expect("checked forest");
        return dag.nodes().filter(|&v| view.is_leaf(v)).count();
    }
    let above: Vec<Vec<usize>> = dag
        .nodes()
        .map(|u| {
            dag.nodes()
                .filter(|&v| v != u && dag.reaches(u, v))
                .map(|v| v.0)
                .collect()
        })
        .collect();
    let mut mate: Vec<Option<usize>> = vec![None; n];
    let mut matched = 0;
    for u in 0..n {
        let mut seen = vec![false; n];
        if augment(u, &above, &mut mate, &mut seen) {
            matched += 1;
        }
    }
    n - matched
}

fn augment(u: usize, adj: &[Vec<usize>], mate: &mut [Option<usize>], seen: &mut [bool]) -> bool {
    for &v in &adj[u] {
        if seen[v] {
            continue;
        }
        seen[v] = true;
        if mate[v].is_none_or(|w| augment(w, adj, mate, seen)) {
            mate[v] = Some(u);
            return true;
        }
    }
    false
}

/// Multi-Unlimited: asking every node pins every target set, so the worst
/// case is the width. Smaller sets can also suffice: a node that reaches
/// every other node always answers YES and need not be asked.
pub fn solve_multi_unlimited(dag: &Dag) -> Plan {
    Plan::unlimited(
        Variant::Multi,
        Method::MultiUnlimited,
        poset_width(dag),
        dag.nodes().collect(),
    )
}

fn balanced_tree_shape(dag: &Dag) -> Result<(usize, usize, Direction)> {
    match dag.classify() {
        StructureClass::BalancedDownTree { arity, depth } => Ok((arity, depth, Direction::Down)),
        StructureClass::BalancedUpTree { arity, depth } => Ok((arity, depth, Direction::Up)),
        _ => Err(Error::WrongStructure {
            expected: "balanced tree",
        }),
    }
}

/// `k ≤ m^(d/2)`, i.e. `k² ≤ m^d`.
pub fn in_multi_balanced_regime(arity: usize, depth: usize, k: usize) -> bool {
    k == 0 || in_balanced_regime(arity, depth, k) || {
        let kk = (k as u128) * (k as u128);
        (arity as u128).checked_pow(depth as u32) == Some(kk)
    }
}

/// Balanced trees: spread `k` questions over the subtrees at depth
/// `floor(log_m k)`, in digit-reversed order, then slide each one down its
/// subtree (through the least-used child) to the depth that minimises the
/// worst case so far. Deeper wins ties.
pub fn solve_multi_balanced_tree(tree: &Dag, k: usize) -> Result<Plan> {
    let (m, d, _) = balanced_tree_shape(tree)?;
    if !in_multi_balanced_regime(m, d, k) {
        return Err(Error::BudgetTooLarge { k, limit: k });
    }
    place(tree, k)
}

fn spread_level(m: usize, k: usize) -> usize {
    let mut level = 0usize;
    let mut width = 1usize;
    while m >= 2 && width * m <= k {
        width *= m;
        level += 1;
    }
    level
}

fn place(tree: &Dag, k: usize) -> Result<Plan> {
    let (m, d, dir) = balanced_tree_shape(tree)?;
    let view = Forest::new(tree, dir)?;
    let mut questions = Vec::new();
    if k > 0 && m >= 2 {
        let level = spread_level(m, k);
        let starts: Vec<NodeId> = view
            .preorder()
            .iter()
            .copied()
            .filter(|&v| view.depth(v) == level)
            .collect();
        let mut order: Vec<(usize, NodeId)> = starts
            .iter()
            .enumerate()
            .map(|(i, &v)| (digit_reverse(i, m, level), v))
            .collect();
        order.sort_unstable();
        for &(_, v) in order.iter().cycle().take(k) {
            let mut path = vec![v];
            let mut x = v;
            while view.depth(x) < d {
                let kids = view.children(x);
                let used = questions
                    .iter()
                    .filter(|q| view_ancestor(&view, x, **q))
                    .count();
                x = kids[used.min(kids.len() - 1)];
                path.push(x);
            }
            let mut best = (usize::MAX, v);
            for &c in path.iter().filter(|c| !questions.contains(*c)) {
                let mut trial = questions.clone();
                trial.push(c);
                let w = wcase_multi_forest(tree, &trial)?;
                if w <= best.0 {
                    best = (w, c);
                }
            }
            questions.push(best.1);
        }
        questions.sort_unstable();
        questions.dedup();
    }
    let wcase = wcase_multi_forest(tree, &questions)?;
    Ok(Plan::bounded(
        Variant::Multi,
        k,
        Method::MultiBalancedTree,
        wcase,
        questions,
    ))
}

fn view_ancestor(view: &Forest, a: NodeId, mut b: NodeId) -> bool {
    loop {
        if a == b {
            return true;
        }
        match view.parent(b) {
            Some(p) => b = p,
            None => return false,
        }
    }
}

fn digit_reverse(mut i: usize, m: usize, digits: usize) -> usize {
    let mut r = 0;
    for _ in 0..digits {
        r = r * m + i % m;
        i /= m;
    }
    r
}

/// Forests of balanced trees: plan each tree for every budget, then split the
/// budget across trees by a knapsack over the per-tree worst cases.
pub fn solve_multi_balanced_forest(forest: &Dag, k: usize) -> Result<Plan> {
    let direction = forest_direction(forest)?;
    let view = Forest::new(forest, direction)?;
    let mut members: Vec<Vec<NodeId>> = Vec::new();
    let mut current = None;
    for &v in view.preorder() {
        if view.parent(v).is_none() {
            members.push(Vec::new());
            current = Some(members.len() - 1);
        }
        members[current.expect("roots come first")].push(v);
    }

    // options[t][j]: (summary, questions in original ids) of tree t with j questions.
    let mut options: Vec<Vec<(MultiDpTuple, Vec<NodeId>)>> = Vec::new();
    for nodes in &members {
        let sub = induced_subgraph(forest, nodes)?;
        let cap = k.min(sub.dag.n());
        let mut per_budget = Vec::with_capacity(cap + 1);
        for j in 0..=cap {
            let plan = match balanced_tree_shape(&sub.dag) {
                Ok((m, d, _)) if m >= 2 && in_multi_balanced_regime(m, d, j) => {
                    solve_multi_balanced_tree(&sub.dag, j)?
                }
                Ok(_) => solve_multi_forest(&sub.dag, j)?,
                Err(_) => {
                    return Err(Error::WrongStructure {
                        expected: "forest of balanced trees",
                    })
                }
            };
            let (active, passive) = forest_summary(&sub.dag, &plan.questions)?;
            let original = plan.questions.iter().map(|q| sub.origin[q.0]).collect();
            per_budget.push((MultiDpTuple { active, passive }, original));
        }
        options.push(per_budget);
    }

    let rules = MultiRules { direction };
    // table[j]: Pareto-minimal (partial, choice trail) after the trees so far.
    let mut table: Vec<Vec<(MultiPart, Vec<usize>)>> = vec![vec![(rules.start(), Vec::new())]];
    for per_budget in &options {
        let cap = (table.len() - 1 + per_budget.len() - 1).min(k);
        let mut next: Vec<Vec<(MultiPart, Vec<usize>)>> = vec![Vec::new(); cap + 1];
        for (j1, entries) in table.iter().enumerate() {
            for (j2, (sum, _)) in per_budget.iter().enumerate() {
                if j1 + j2 > k {
                    break;
                }
                for (part, trail) in entries {
                    let mut t = trail.clone();
                    t.push(j2);
                    next[j1 + j2].push((rules.absorb(part, sum), t));
                }
            }
        }
        table = next
            .into_iter()
            .map(|v| {
                let mut kept: Vec<(MultiPart, Vec<usize>)> = Vec::new();
                for e in v {
                    if kept.iter().any(|q| rules.part_dominates(&q.0, &e.0)) {
                        continue;
                    }
                    kept.retain(|q| !rules.part_dominates(&e.0, &q.0));
                    kept.push(e);
                }
                kept
            })
            .collect();
    }
    let mut best: Option<(usize, &Vec<usize>)> = None;
    for entries in &table {
        for (part, trail) in entries {
            let v = rules.finish(part);
            if best.is_none_or(|(b, _)| v < b) {
                best = Some((v, trail));
            }
        }
    }
    let (wcase, trail) = best.expect("budget zero is always feasible");
    let questions = trail
        .iter()
        .zip(&options)
        .flat_map(|(&j, per_budget)| per_budget[j].1.iter().copied())
        .collect();
    Ok(Plan::bounded(
        Variant::Multi,
        k,
        Method::MultiBalancedForest,
        wcase,
        questions,
    ))
}

/// Dispatches Multi-Bounded: forests get the exact program, other graphs the
/// exhaustive search within its limits.
pub fn solve_multi(dag: &Dag, k: usize) -> Result<Plan> {
    solve_multi_with(dag, k, &Limits::default())
}

pub fn solve_multi_with(dag: &Dag, k: usize, limits: &Limits) -> Result<Plan> {
    if dag.is_down_forest() || dag.is_up_forest() {
        return solve_multi_forest(dag, k);
    }
    brute_force_multi_with(dag, k, limits).map_err(|_| Error::NoSolverApplicable {
        structure: dag.classify().to_string(),
        n: dag.n(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_dag;
    use crate::harness::gen_balanced;
    use crate::semantics::{candidate_set, wcase_multi, Answer, Response};

    fn star() -> Dag {
        build_dag(&["a", "b", "c"], &[("a", "b"), ("a", "c")]).unwrap()
    }

    #[test]
    fn star_k1() {
        let g = star();
        let p = solve_multi_forest(&g, 1).unwrap();
        assert_eq!(p.wcase, 2);
        assert_eq!(p.wcase, wcase_multi(&g, &p.questions).unwrap());
        let b = brute_force_multi(&g, 1).unwrap();
        assert_eq!((b.wcase, b.questions), (2, vec![NodeId(1)]));
        assert_eq!(solve_multi_forest(&g, 0).unwrap().wcase, 3);
    }

    #[test]
    fn evaluator_matches_enumeration() {
        for dir in [Direction::Down, Direction::Up] {
            let t = gen_balanced(2, 2, dir, usize::MAX).unwrap();
            for k in 0..=3 {
                for qs in t.nodes().combinations(k) {
                    assert_eq!(
                        wcase_multi_forest(&t, &qs).unwrap(),
                        wcase_multi(&t, &qs).unwrap(),
                        "{dir:?} {qs:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn path_of_four() {
        let g = build_dag(&["a", "b", "c", "d"], &[("a", "b"), ("b", "c"), ("c", "d")]).unwrap();
        let b = brute_force_multi(&g, 2).unwrap();
        assert_eq!(solve_multi_forest(&g, 2).unwrap().wcase, b.wcase);
    }

    #[test]
    fn transform_round_trip() {
        let g = build_dag(&["a", "b", "c"], &[("a", "b"), ("b", "c")]).unwrap();
        let answers: AnswerSet = [Answer {
            node: NodeId(1),
            value: Response::Yes,
        }]
        .into_iter()
        .collect();
        let (t, flipped) = transform_equivalence(&g, &answers);
        assert_eq!(flipped.get(NodeId(1)), Some(Response::No));
        assert!(t.reaches(NodeId(2), NodeId(0)));
        let (back, again) = transform_equivalence(&t, &flipped);
        assert_eq!(back, g);
        assert_eq!(again, answers);
        // The one-way transform keeps only the unasked nodes' membership.
        let before = candidate_set(&g, &answers, Variant::Multi).unwrap();
        let after = candidate_set(&t, &flipped, Variant::Multi).unwrap();
        assert_eq!(before.to_vec(), vec![NodeId(1), NodeId(2)]);
        assert_eq!(after.to_vec(), vec![NodeId(2)]);
    }

    #[test]
    fn unlimited_is_all_nodes() {
        let g = star();
        let p = solve_multi_unlimited(&g);
        assert_eq!(p.questions.len(), 3);
        assert_eq!(p.wcase, 2);
        assert_eq!(p.wcase, wcase_multi(&g, &p.questions).unwrap());
        let diamond = build_dag(
            &["a", "b", "c", "d"],
            &[("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")],
        )
        .unwrap();
        assert_eq!(poset_width(&diamond), 2);
    }

    #[test]
    fn balanced_tree_examples() {
        for (m, d, k) in [(2, 2, 1), (2, 3, 2), (3, 2, 3)] {
            let t = gen_balanced(m, d, Direction::Down, usize::MAX).unwrap();
            let a = solve_multi_balanced_tree(&t, k).unwrap();
            let b = solve_multi_forest(&t, k).unwrap();
            assert_eq!(a.wcase, b.wcase, "m={m} d={d} k={k}");
        }
    }

    #[test]
    fn balanced_forest_two_trees() {
        let a = gen_balanced(2, 2, Direction::Down, usize::MAX).unwrap();
        let names: Vec<String> = (0..14).map(|i| format!("v{i}")).collect();
        let edges: Vec<(usize, usize)> = a
            .edges()
            .flat_map(|(x, y)| [(x.0, y.0), (x.0 + 7, y.0 + 7)])
            .collect();
        let f = Dag::from_indices(names, edges).unwrap();
        for k in 0..=4 {
            let p = solve_multi_balanced_forest(&f, k).unwrap();
            assert_eq!(p.wcase, wcase_multi_forest(&f, &p.questions).unwrap());
            assert_eq!(p.wcase, solve_multi_forest(&f, k).unwrap().wcase, "k={k}");
        }
        assert_eq!(solve_multi_balanced_forest(&f, 0).unwrap().wcase, 14);
    }
}
