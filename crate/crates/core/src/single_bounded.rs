//! Single-target, bounded-budget question selection.

use itertools::Itertools;
use rayon::prelude::*;

use crate::dp::{self, TreeRules};
use crate::error::{Error, Result};
use crate::graph::{augment_forest, Dag, Direction, Forest, NodeId, StructureClass};
use crate::plan::{Method, Plan};
use crate::semantics::{wcase_single, Variant};

/// Work limits for the exhaustive solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    /// Largest graph searched exhaustively under Single.
    pub single_nodes: usize,
    /// Largest number of question sets tried under Single.
    pub single_subsets: u64,
    /// Largest graph searched exhaustively under Multi.
    pub multi_nodes: usize,
    /// Largest number of question sets tried under Multi.
    pub multi_subsets: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            single_nodes: 14,
            single_subsets: 3432,
            multi_nodes: 12,
            multi_subsets: 220,
        }
    }
}

/// `C(n, k)`, saturating.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Exact minimum over every question set of size `min(k, n)`; the first
/// minimum in lexicographic order wins.
pub fn brute_force(dag: &Dag, k: usize) -> Result<Plan> {
    brute_force_with(dag, k, &Limits::default())
}

pub fn brute_force_with(dag: &Dag, k: usize, limits: &Limits) -> Result<Plan> {
    let n = dag.n();
    let take = k.min(n);
    if n > limits.single_nodes {
        return Err(Error::TooLarge {
            what: "Single brute force (nodes)",
            size: n,
            limit: limits.single_nodes,
        });
    }
    let subsets = binomial(n, take);
    if subsets > limits.single_subsets {
        return Err(Error::TooLarge {
            what: "Single brute force (question sets)",
            size: subsets as usize,
            limit: limits.single_subsets as usize,
        });
    }
    let sets: Vec<Vec<NodeId>> = dag.nodes().combinations(take).collect();
    let scores: Vec<usize> = sets.par_iter().map(|s| wcase_single(dag, s)).collect();
    let (best, &wcase) = scores
        .iter()
        .enumerate()
        .min_by_key(|&(i, w)| (*w, i))
        .expect("at least the empty set is tried");
    Ok(Plan::bounded(
        Variant::Single,
        k,
        Method::BruteForce,
        wcase,
        sets[best].clone(),
    ))
}

/// Blocks of the partition induced by asked nodes on a downward forest: each
/// asked node owns the nodes whose nearest asked ancestor-or-self it is, and
/// the remainder (no asked ancestor) forms one more block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partitioning {
    pub blocks: Vec<Vec<NodeId>>,
    /// Owner of each block; `None` for the remainder.
    pub owners: Vec<Option<NodeId>>,
}

pub fn partition_of(forest: &Dag, questions: &[NodeId]) -> Result<Partitioning> {
    let view = Forest::new(forest, Direction::Down)?;
    let n = forest.n();
    let mut asked = vec![false; n];
    for q in questions {
        asked[q.0] = true;
    }
    let mut owner: Vec<Option<NodeId>> = vec![None; n];
    for &v in view.preorder() {
        owner[v.0] = if asked[v.0] {
            Some(v)
        } else {
            view.parent(v).and_then(|p| owner[p.0])
        };
    }
    let mut owners: Vec<Option<NodeId>> = (0..n)
        .filter(|&v| asked[v])
        .map(|v| Some(NodeId(v)))
        .collect();
    if owner.iter().any(Option::is_none) {
        owners.push(None);
    }
    let blocks = owners
        .iter()
        .map(|o| (0..n).filter(|&v| owner[v] == *o).map(NodeId).collect())
        .collect();
    Ok(Partitioning { blocks, owners })
}

/// Minimum number of edges whose removal leaves every component of weight at
/// most `bound`, greedily removing the heaviest child components first.
/// Returns `None` once more than `budget` cuts are needed.
fn min_cuts(
    tree: &Forest,
    weight: &[usize],
    bound: usize,
    budget: usize,
    mut cut: Option<&mut Vec<NodeId>>,
) -> Option<usize> {
    let mut comp = vec![0usize; tree.len()];
    let mut cuts = 0;
    let mut kids: Vec<NodeId> = Vec::new();
    for &v in tree.preorder().iter().rev() {
        let mut total = weight[v.0];
        for &c in tree.children(v) {
            total += comp[c.0];
        }
        if total > bound {
            kids.clear();
            kids.extend_from_slice(tree.children(v));
            kids.sort_unstable_by(|a, b| comp[b.0].cmp(&comp[a.0]).then(a.cmp(b)));
            for &c in &kids {
                if total <= bound {
                    break;
                }
                total -= comp[c.0];
                cuts += 1;
                if let Some(out) = cut.as_deref_mut() {
                    out.push(c);
                }
            }
            if cuts > budget {
                return None;
            }
        }
        comp[v.0] = total;
    }
    Some(cuts)
}

/// Downward forests: asking a node cuts the edge above it, so the best plan
/// is a minimum-bottleneck tree partition. The trees are joined under a
/// weight-zero virtual root, which makes the result exact.
pub fn solve_down_forest(forest: &Dag, k: usize) -> Result<Plan> {
    let aug = augment_forest(forest, Direction::Down)?;
    let n = forest.n();
    let tree = Forest::new(&aug.tree, Direction::Down)?;
    let mut weight = vec![1usize; n + 1];
    weight[aug.virtual_root.0] = 0;
    let budget = k.min(n);

    let (mut lo, mut hi) = (n.min(1), n);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if min_cuts(&tree, &weight, mid, budget, None).is_some() {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let mut questions = Vec::new();
    min_cuts(&tree, &weight, lo, budget, Some(&mut questions)).expect("bound is feasible");
    let questions = questions
        .into_iter()
        .filter_map(|q| aug.to_forest(q))
        .collect();
    Ok(Plan::bounded(
        Variant::Single,
        k,
        Method::DownForest,
        lo,
        questions,
    ))
}

/// Subtree summary for the upward-forest program. A node is marked when its
/// subtree holds a question; the targets sharing one answer vector are all
/// unmarked nodes together, or a vertical run of marked nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DpTuple {
    pub marked: bool,
    /// Length of the run still open at the subtree root.
    pub open: usize,
    /// Longest run already closed below.
    pub closed: usize,
    /// Unmarked nodes in the subtree.
    pub unmarked: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct UpPart {
    /// Marked children so far, saturating at 2.
    marked: u8,
    open: usize,
    closed: usize,
    unmarked: usize,
}

pub(crate) struct SingleUpRules;

impl TreeRules for SingleUpRules {
    type Part = UpPart;
    type Sum = DpTuple;

    fn start(&self) -> UpPart {
        UpPart {
            marked: 0,
            open: 0,
            closed: 0,
            unmarked: 0,
        }
    }

    fn absorb(&self, p: &UpPart, c: &DpTuple) -> UpPart {
        let unmarked = p.unmarked + c.unmarked;
        if !c.marked {
            return UpPart { unmarked, ..*p };
        }
        match p.marked {
            0 => UpPart {
                marked: 1,
                open: c.open,
                closed: p.closed.max(c.closed),
                unmarked,
            },
            1 => UpPart {
                marked: 2,
                open: 0,
                closed: p.closed.max(c.closed).max(p.open).max(c.open),
                unmarked,
            },
            _ => UpPart {
                marked: 2,
                open: 0,
                closed: p.closed.max(c.closed).max(c.open),
                unmarked,
            },
        }
    }

    fn close(&self, p: &UpPart, asked: bool) -> DpTuple {
        match (asked, p.marked) {
            (false, 0) => DpTuple {
                marked: false,
                open: 0,
                closed: 0,
                unmarked: p.unmarked + 1,
            },
            (false, 1) => DpTuple {
                marked: true,
                open: p.open + 1,
                closed: p.closed,
                unmarked: p.unmarked,
            },
            _ => DpTuple {
                marked: true,
                open: 1,
                closed: p.closed.max(p.open),
                unmarked: p.unmarked,
            },
        }
    }

    fn finish(&self, p: &UpPart) -> usize {
        p.unmarked.max(p.closed).max(p.open)
    }

    fn part_dominates(&self, a: &UpPart, b: &UpPart) -> bool {
        a.open <= b.open && a.closed <= b.closed && a.unmarked <= b.unmarked
    }

    fn sum_dominates(&self, a: &DpTuple, b: &DpTuple) -> bool {
        a.open <= b.open && a.closed <= b.closed && a.unmarked <= b.unmarked
    }

    fn part_class(&self, p: &UpPart) -> u8 {
        p.marked
    }

    fn sum_class(&self, s: &DpTuple) -> u8 {
        s.marked as u8
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UpDpOptions {
    /// Drop dominated summaries; never changes the optimum.
    pub prune: bool,
}

impl Default for UpDpOptions {
    fn default() -> Self {
        UpDpOptions { prune: true }
    }
}

/// Upward forests: exact bottom-up program over the forest joined under a
/// weight-zero virtual root that is never asked.
pub fn solve_up_forest(forest: &Dag, k: usize) -> Result<Plan> {
    solve_up_forest_with(forest, k, UpDpOptions::default())
}

pub fn solve_up_forest_with(forest: &Dag, k: usize, options: UpDpOptions) -> Result<Plan> {
    let aug = augment_forest(forest, Direction::Up)?;
    let tree = Forest::new(&aug.tree, Direction::Up)?;
    let out = dp::optimise(
        &SingleUpRules,
        &tree,
        aug.virtual_root,
        k.min(forest.n()),
        options.prune,
    );
    let questions = out
        .asked
        .into_iter()
        .filter_map(|q| aug.to_forest(q))
        .collect();
    Ok(Plan::bounded(
        Variant::Single,
        k,
        Method::UpForest,
        out.value,
        questions,
    ))
}

/// Worst case of a fixed question set on an upward forest, in linear time.
pub fn wcase_up_forest(forest: &Dag, questions: &[NodeId]) -> Result<usize> {
    let aug = augment_forest(forest, Direction::Up)?;
    let tree = Forest::new(&aug.tree, Direction::Up)?;
    let mut asked = vec![false; tree.len()];
    for q in questions {
        asked[q.0] = true;
    }
    Ok(dp::evaluate(
        &SingleUpRules,
        &tree,
        aug.virtual_root,
        &asked,
    ))
}

fn balanced_shape(dag: &Dag, up: bool) -> Result<(usize, usize)> {
    match (dag.classify(), up) {
        (StructureClass::BalancedDownTree { arity, depth }, false)
        | (StructureClass::BalancedUpTree { arity, depth }, true) => Ok((arity, depth)),
        _ => Err(Error::WrongStructure {
            expected: if up {
                "balanced upward tree"
            } else {
                "balanced downward tree"
            },
        }),
    }
}

/// `k < m^(d/2)`, i.e. `k² < m^d`.
pub fn in_balanced_regime(arity: usize, depth: usize, k: usize) -> bool {
    let kk = (k as u128) * (k as u128);
    let mut p: u128 = 1;
    for _ in 0..depth {
        p = p.saturating_mul(arity as u128);
        if p > kk {
            return true;
        }
    }
    kk < p
}

/// Balanced downward trees: every node at one depth cuts the same number of
/// children, found by binary search on the largest block. Equivalent to the
/// general partition greedy on these trees, in `O(d log n)` arithmetic, and
/// exact for every budget.
pub fn solve_balanced_down(tree: &Dag, k: usize) -> Result<Plan> {
    let (m, d) = balanced_shape(tree, false)?;
    let n = tree.n();
    let level_cuts = |bound: usize| -> (u128, Vec<usize>) {
        let mut per_node = vec![0usize; d + 1];
        let mut weight = 1usize;
        let mut total: u128 = 0;
        for t in (0..d).rev() {
            let full = 1 + m * weight;
            let c = if full > bound {
                (full - bound).div_ceil(weight)
            } else {
                0
            };
            per_node[t] = c;
            total += (c as u128) * (m as u128).pow(t as u32);
            weight = full - c * weight;
        }
        (total, per_node)
    };
    let (mut lo, mut hi) = (1usize, n);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if level_cuts(mid).0 <= k as u128 {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let (_, per_node) = level_cuts(lo);
    let view = Forest::new(tree, Direction::Down)?;
    let mut questions = Vec::new();
    for v in view.preorder() {
        let c = per_node[view.depth(*v)];
        questions.extend_from_slice(&view.children(*v)[..c]);
    }
    Ok(Plan::bounded(
        Variant::Single,
        k,
        Method::BalancedDown,
        lo,
        questions,
    ))
}

/// Blanket construction on balanced downward trees, kept for comparison:
/// ask every node at depth `floor(log_m k)`, then the first
/// `floor((k - m^l) / m^l)` children of each of them.
pub fn balanced_down_blanket(tree: &Dag, k: usize) -> Result<Plan> {
    let (m, d) = balanced_shape(tree, false)?;
    let view = Forest::new(tree, Direction::Down)?;
    let mut questions = Vec::new();
    if k > 0 && m >= 2 {
        let mut level = 0usize;
        let mut width = 1usize;
        while width * m <= k && level < d {
            width *= m;
            level += 1;
        }
        let extra = (k - width) / width;
        for &v in view.preorder() {
            if view.depth(v) == level {
                questions.push(v);
                let kids = view.children(v);
                questions.extend_from_slice(&kids[..extra.min(kids.len())]);
            }
        }
    }
    let wcase = wcase_single(tree, &questions);
    Ok(Plan::bounded(
        Variant::Single,
        k,
        Method::BalancedDown,
        wcase,
        questions,
    ))
}

/// Balanced upward trees: with `α` the smallest depth holding at least `k`
/// nodes, ask one leaf below each of `k` depth-`α` nodes spread across the
/// tree (taken in base-`m` digit-reversed order).
pub fn solve_balanced_up(tree: &Dag, k: usize) -> Result<Plan> {
    let (m, d) = balanced_shape(tree, true)?;
    let view = Forest::new(tree, Direction::Up)?;
    let mut questions = Vec::new();
    if k > 0 {
        if m < 2 {
            return Err(Error::BudgetTooLarge { k, limit: 1 });
        }
        let mut alpha = 0usize;
        let mut width = 1usize;
        while width < k {
            width = width.saturating_mul(m);
            alpha += 1;
        }
        if alpha > d {
            return Err(Error::BudgetTooLarge {
                k,
                limit: m.pow(d as u32),
            });
        }
        let level: Vec<NodeId> = view
            .preorder()
            .iter()
            .copied()
            .filter(|&v| view.depth(v) == alpha)
            .collect();
        let mut order: Vec<(usize, NodeId)> = level
            .iter()
            .enumerate()
            .map(|(i, &v)| (digit_reverse(i, m, alpha), v))
            .collect();
        order.sort_unstable();
        for &(_, v) in order.iter().take(k) {
            let mut leaf = v;
            while let Some(&c) = view.children(leaf).first() {
                leaf = c;
            }
            questions.push(leaf);
        }
    }
    let wcase = wcase_single(tree, &questions);
    Ok(Plan::bounded(
        Variant::Single,
        k,
        Method::BalancedUp,
        wcase,
        questions,
    ))
}

fn digit_reverse(mut i: usize, m: usize, digits: usize) -> usize {
    let mut r = 0;
    for _ in 0..digits {
        r = r * m + i % m;
        i /= m;
    }
    r
}

/// Dispatches on the structure of `dag`; `Plan::method` records the path.
pub fn solve(dag: &Dag, k: usize) -> Result<Plan> {
    solve_with(dag, k, &Limits::default())
}

pub fn solve_with(dag: &Dag, k: usize, limits: &Limits) -> Result<Plan> {
    let class = dag.classify();
    match class {
        StructureClass::BalancedDownTree { arity, .. } if arity >= 2 => solve_balanced_down(dag, k),
        StructureClass::BalancedUpTree { arity, depth }
            if arity >= 2 && k >= 1 && in_balanced_regime(arity, depth, k) =>
        {
            solve_balanced_up(dag, k)
        }
        c if c.is_down_forest() => solve_down_forest(dag, k),
        c if c.is_up_forest() => solve_up_forest(dag, k),
        _ => brute_force_with(dag, k, limits).map_err(|_| Error::NoSolverApplicable {
            structure: class.to_string(),
            n: dag.n(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_dag;
    use crate::harness::gen_balanced;

    fn chain() -> Dag {
        build_dag(&["a", "b", "c"], &[("a", "b"), ("b", "c")]).unwrap()
    }

    fn names(dag: &Dag, plan: &Plan) -> Vec<String> {
        plan.questions
            .iter()
            .map(|&q| dag.name(q).to_owned())
            .collect()
    }

    #[test]
    fn brute_force_chain() {
        let g = chain();
        let p = brute_force(&g, 1).unwrap();
        assert_eq!((names(&g, &p), p.wcase), (vec!["b".to_owned()], 2));
        assert_eq!(brute_force(&g, 0).unwrap().wcase, 3);
        assert_eq!(brute_force(&g, 5).unwrap().wcase, 1);
    }

    #[test]
    fn brute_force_limit() {
        let names: Vec<String> = (0..15).map(|i| format!("v{i}")).collect();
        let g = Dag::from_indices(names, Vec::new()).unwrap();
        assert!(matches!(brute_force(&g, 1), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(14, 7), 3432);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(200, 100), u64::MAX);
    }

    #[test]
    fn down_forest_examples() {
        let g = chain();
        assert_eq!(solve_down_forest(&g, 1).unwrap().wcase, 2);
        let t = gen_balanced(2, 2, Direction::Down, usize::MAX).unwrap();
        let p = solve_down_forest(&t, 2).unwrap();
        assert_eq!(p.wcase, 3);
        assert_eq!(p.questions, vec![NodeId(1), NodeId(2)]);
        assert_eq!(solve_down_forest(&t, 6).unwrap().wcase, 1);
        assert_eq!(solve_down_forest(&t, 0).unwrap().wcase, 7);
        assert!(matches!(
            solve_down_forest(&crate::graph::reverse(&t), 1),
            Err(Error::WrongStructure { .. })
        ));
    }

    #[test]
    fn down_forest_skips_roots_of_small_trees() {
        let g = build_dag(&["a", "b", "c", "x"], &[("a", "b"), ("b", "c")]).unwrap();
        let p = solve_down_forest(&g, 1).unwrap();
        assert_eq!(p.wcase, 2);
        assert_eq!(wcase_single(&g, &p.questions), 2);
    }

    #[test]
    fn partition_blocks() {
        let g = crate::graph::tests::vehicles();
        let car = g.node("car").unwrap();
        let nissan = g.node("nissan").unwrap();
        let p = partition_of(&g, &[car, nissan]).unwrap();
        assert_eq!(p.owners, vec![Some(car), Some(nissan), None]);
        assert_eq!(
            p.blocks.iter().map(Vec::len).collect::<Vec<_>>(),
            vec![2, 3, 1]
        );
        let all = partition_of(&g, &[g.node("vehicle").unwrap()]).unwrap();
        assert_eq!(all.blocks.len(), 1);
    }

    #[test]
    fn up_forest_examples() {
        let t = gen_balanced(2, 2, Direction::Up, usize::MAX).unwrap();
        let p = solve_up_forest(&t, 2).unwrap();
        assert_eq!(p.wcase, 2);
        assert_eq!(wcase_single(&t, &p.questions), 2);
        let view = Forest::new(&t, Direction::Up).unwrap();
        assert!(p.questions.iter().all(|&q| view.is_leaf(q)));
        let tops: Vec<NodeId> = p
            .questions
            .iter()
            .map(|&q| view.parent(q).unwrap())
            .collect();
        assert_ne!(tops[0], tops[1]);

        let c = build_dag(&["c", "b", "a"], &[("c", "b"), ("b", "a")]).unwrap();
        let p = solve_up_forest(&c, 1).unwrap();
        assert_eq!(p.wcase, 2);
        assert_eq!(solve_up_forest(&c, 0).unwrap().wcase, 3);
    }

    #[test]
    fn up_evaluator_matches_semantics() {
        let t = gen_balanced(3, 2, Direction::Up, usize::MAX).unwrap();
        for qs in t.nodes().combinations(2) {
            assert_eq!(wcase_up_forest(&t, &qs).unwrap(), wcase_single(&t, &qs));
        }
    }

    #[test]
    fn pruning_is_neutral() {
        let t = gen_balanced(2, 3, Direction::Up, usize::MAX).unwrap();
        for k in 0..4 {
            let a = solve_up_forest_with(&t, k, UpDpOptions { prune: true }).unwrap();
            let b = solve_up_forest_with(&t, k, UpDpOptions { prune: false }).unwrap();
            assert_eq!(a.wcase, b.wcase);
        }
    }

    #[test]
    fn balanced_down_matches_partition_solver() {
        for (m, d) in [(2, 2), (2, 3), (2, 4), (3, 2), (3, 3), (3, 4), (4, 4)] {
            let t = gen_balanced(m, d, Direction::Down, usize::MAX).unwrap();
            for k in 0..t.n() {
                let a = solve_balanced_down(&t, k).unwrap();
                let b = solve_down_forest(&t, k).unwrap();
                assert_eq!(a.wcase, b.wcase, "m={m} d={d} k={k}");
                assert_eq!(wcase_single(&t, &a.questions), a.wcase);
                assert!(a.questions.len() <= k);
            }
        }
    }

    #[test]
    fn balanced_down_small() {
        let t = gen_balanced(2, 2, Direction::Down, usize::MAX).unwrap();
        let p = solve_balanced_down(&t, 2).unwrap();
        assert_eq!(
            (p.wcase, p.questions.clone()),
            (3, vec![NodeId(1), NodeId(2)])
        );
        let blanket = balanced_down_blanket(&t, 2).unwrap();
        assert_eq!(blanket.questions, vec![NodeId(1), NodeId(2)]);
    }

    #[test]
    fn blanket_wastes_budget() {
        let t = gen_balanced(2, 4, Direction::Down, usize::MAX).unwrap();
        assert_eq!(balanced_down_blanket(&t, 3).unwrap().wcase, 15);
        assert_eq!(solve_balanced_down(&t, 3).unwrap().wcase, 9);
    }

    #[test]
    fn balanced_up_small() {
        let t = gen_balanced(2, 2, Direction::Up, usize::MAX).unwrap();
        let p = solve_balanced_up(&t, 2).unwrap();
        assert_eq!(p.wcase, 2);
        assert_eq!(p.wcase, brute_force(&t, 2).unwrap().wcase);
        let p1 = solve_balanced_up(&t, 1).unwrap();
        assert_eq!(p1.wcase, brute_force(&t, 1).unwrap().wcase);
        assert_eq!(digit_reverse(1, 2, 2), 2);
    }

    #[test]
    fn dispatch() {
        let g = crate::graph::tests::vehicles();
        assert_eq!(solve(&g, 2).unwrap().method, Method::DownForest);
        let t = gen_balanced(2, 4, Direction::Down, usize::MAX).unwrap();
        assert_eq!(solve(&t, 2).unwrap().method, Method::BalancedDown);
        assert_eq!(solve(&t, 9).unwrap().method, Method::BalancedDown);
        let u = gen_balanced(2, 4, Direction::Up, usize::MAX).unwrap();
        assert_eq!(solve(&u, 9).unwrap().method, Method::UpForest);
        let diamond = build_dag(
            &["a", "b", "c", "d"],
            &[("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")],
        )
        .unwrap();
        assert_eq!(solve(&diamond, 1).unwrap().method, Method::BruteForce);
    }
}
