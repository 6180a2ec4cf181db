//! Immutable DAGs with constant-time reachability queries.
//!
//! Forests (every node has in-degree ≤ 1, or every node has out-degree ≤ 1)
//! are indexed with pre-order intervals so that graphs with hundreds of
//! thousands of nodes stay cheap. Every other DAG stores its transitive
//! closure as one bit-vector per node.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest general (non-forest) DAG for which a transitive closure is built.
pub const MAX_CLOSURE_NODES: usize = 20_000;

/// Dense node index, assigned in declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub usize);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Edge orientation of a forest: `Down` means parent→child, `Up` child→parent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Down,
    Up,
}

/// Most specific structural class of a DAG.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StructureClass {
    GeneralDag,
    DownwardForest,
    UpwardForest,
    BalancedDownTree { arity: usize, depth: usize },
    BalancedUpTree { arity: usize, depth: usize },
}

impl StructureClass {
    pub fn is_down_forest(self) -> bool {
        matches!(
            self,
            StructureClass::DownwardForest | StructureClass::BalancedDownTree { .. }
        )
    }

    pub fn is_up_forest(self) -> bool {
        matches!(
            self,
            StructureClass::UpwardForest | StructureClass::BalancedUpTree { .. }
        )
    }
}

impl fmt::Display for StructureClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StructureClass::GeneralDag => write!(f, "general DAG"),
            StructureClass::DownwardForest => write!(f, "downward forest"),
            StructureClass::UpwardForest => write!(f, "upward forest"),
            StructureClass::BalancedDownTree { arity, depth } => {
                write!(f, "balanced downward tree (m={arity}, d={depth})")
            }
            StructureClass::BalancedUpTree { arity, depth } => {
                write!(f, "balanced upward tree (m={arity}, d={depth})")
            }
        }
    }
}

#[derive(Debug, Clone)]
enum Reach {
    Closure(Vec<FixedBitSet>),
    Forest(ForestIndex),
}

/// Pre-order interval labelling of a forest seen as rooted trees.
#[derive(Debug, Clone)]
struct ForestIndex {
    direction: Direction,
    parent: Vec<Option<NodeId>>,
    pre: Vec<usize>,
    size: Vec<usize>,
    order: Vec<NodeId>,
}

impl ForestIndex {
    fn build(succ: &[Vec<NodeId>], pred: &[Vec<NodeId>], direction: Direction) -> Self {
        let n = succ.len();
        let (children, up): (&[Vec<NodeId>], &[Vec<NodeId>]) = match direction {
            Direction::Down => (succ, pred),
            Direction::Up => (pred, succ),
        };
        let parent: Vec<Option<NodeId>> = up.iter().map(|p| p.first().copied()).collect();
        let mut pre = vec![0; n];
        let mut order = Vec::with_capacity(n);
        let mut stack = Vec::new();
        for root in (0..n).filter(|&v| parent[v].is_none()) {
            stack.push(NodeId(root));
            while let Some(v) = stack.pop() {
                pre[v.0] = order.len();
                order.push(v);
                stack.extend(children[v.0].iter().rev().copied());
            }
        }
        let mut size = vec![1; n];
        for &v in order.iter().rev() {
            if let Some(p) = parent[v.0] {
                size[p.0] += size[v.0];
            }
        }
        ForestIndex {
            direction,
            parent,
            pre,
            size,
            order,
        }
    }

    /// `a` is a tree-ancestor of `b` (or equal).
    #[inline]
    fn is_ancestor(&self, a: NodeId, b: NodeId) -> bool {
        let (pa, pb) = (self.pre[a.0], self.pre[b.0]);
        pa <= pb && pb < pa + self.size[a.0]
    }

    fn subtree(&self, u: NodeId) -> &[NodeId] {
        let start = self.pre[u.0];
        &self.order[start..start + self.size[u.0]]
    }

    fn ancestors(&self, u: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        std::iter::successors(self.parent[u.0], move |p| self.parent[p.0])
    }
}

/// Immutable directed acyclic graph with a reachability index.
#[derive(Debug, Clone)]
pub struct Dag {
    names: Vec<String>,
    lookup: HashMap<String, NodeId>,
    succ: Vec<Vec<NodeId>>,
    pred: Vec<Vec<NodeId>>,
    topo: Vec<NodeId>,
    reach: Reach,
}

impl PartialEq for Dag {
    fn eq(&self, other: &Self) -> bool {
        self.names == other.names && self.succ == other.succ
    }
}

impl Eq for Dag {}

/// Builds a DAG from node names and `(src, dst)` name pairs.
pub fn build_dag<S: AsRef<str>>(nodes: &[S], edges: &[(S, S)]) -> Result<Dag> {
    let names: Vec<String> = nodes.iter().map(|s| s.as_ref().to_owned()).collect();
    let mut lookup = HashMap::with_capacity(names.len());
    for (i, name) in names.iter().enumerate() {
        if lookup.insert(name.as_str(), i).is_some() {
            return Err(Error::DuplicateNode(name.clone()));
        }
    }
    let mut indexed = Vec::with_capacity(edges.len());
    for (src, dst) in edges {
        let find = |s: &S| {
            lookup
                .get(s.as_ref())
                .copied()
                .ok_or_else(|| Error::UnknownNode(s.as_ref().to_owned()))
        };
        indexed.push((find(src)?, find(dst)?));
    }
    Dag::from_indices(names, indexed)
}

impl Dag {
    /// Builds a DAG from names and index pairs. Parallel edges are merged.
    pub fn from_indices<I>(names: Vec<String>, edges: I) -> Result<Dag>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let n = names.len();
        let mut lookup = HashMap::with_capacity(n);
        for (i, name) in names.iter().enumerate() {
            if lookup.insert(name.clone(), NodeId(i)).is_some() {
                return Err(Error::DuplicateNode(name.clone()));
            }
        }
        let mut succ: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        for (a, b) in edges {
            if a >= n {
                return Err(Error::UnknownNode(format!("#{a}")));
            }
            if b >= n {
                return Err(Error::UnknownNode(format!("#{b}")));
            }
            if a == b {
                return Err(Error::CycleDetected(names[a].clone()));
            }
            succ[a].push(NodeId(b));
        }
        let mut pred: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        for (a, out) in succ.iter_mut().enumerate() {
            out.sort_unstable();
            out.dedup();
            for &b in out.iter() {
                pred[b.0].push(NodeId(a));
            }
        }

        // Kahn's algorithm, smallest index first among ready nodes.
        let mut indeg: Vec<usize> = pred.iter().map(Vec::len).collect();
        let mut ready: VecDeque<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut topo = Vec::with_capacity(n);
        while let Some(v) = ready.pop_front() {
            topo.push(NodeId(v));
            for &w in &succ[v] {
                indeg[w.0] -= 1;
                if indeg[w.0] == 0 {
                    ready.push_back(w.0);
                }
            }
        }
        if topo.len() < n {
            let stuck = (0..n).find(|&v| indeg[v] > 0).unwrap_or(0);
            return Err(Error::CycleDetected(names[stuck].clone()));
        }

        let reach = if pred.iter().all(|p| p.len() <= 1) {
            Reach::Forest(ForestIndex::build(&succ, &pred, Direction::Down))
        } else if succ.iter().all(|s| s.len() <= 1) {
            Reach::Forest(ForestIndex::build(&succ, &pred, Direction::Up))
        } else {
            if n > MAX_CLOSURE_NODES {
                return Err(Error::TooLarge {
                    what: "transitive closure of a general DAG",
                    size: n,
                    limit: MAX_CLOSURE_NODES,
                });
            }
            let mut closure = vec![FixedBitSet::with_capacity(n); n];
            for &v in topo.iter().rev() {
                let mut row = FixedBitSet::with_capacity(n);
                row.insert(v.0);
                for &w in &succ[v.0] {
                    row.union_with(&closure[w.0]);
                }
                closure[v.0] = row;
            }
            Reach::Closure(closure)
        };

        Ok(Dag {
            names,
            lookup,
            succ,
            pred,
            topo,
            reach,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.names.len()
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = NodeId> {
        (0..self.n()).map(NodeId)
    }

    pub fn name(&self, u: NodeId) -> &str {
        &self.names[u.0]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn node(&self, name: &str) -> Option<NodeId> {
        self.lookup.get(name).copied()
    }

    pub fn successors(&self, u: NodeId) -> &[NodeId] {
        &self.succ[u.0]
    }

    pub fn predecessors(&self, u: NodeId) -> &[NodeId] {
        &self.pred[u.0]
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.succ
            .iter()
            .enumerate()
            .flat_map(|(a, out)| out.iter().map(move |&b| (NodeId(a), b)))
    }

    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    /// Topological order; ties resolved by smallest index.
    pub fn topo_order(&self) -> &[NodeId] {
        &self.topo
    }

    /// Every node has in-degree ≤ 1.
    pub fn is_down_forest(&self) -> bool {
        self.pred.iter().all(|p| p.len() <= 1)
    }

    /// Every node has out-degree ≤ 1.
    pub fn is_up_forest(&self) -> bool {
        self.succ.iter().all(|s| s.len() <= 1)
    }

    /// `b ∈ rset(a)`: a directed path leads from `a` to `b`, or `a == b`.
    #[inline]
    pub fn reaches(&self, a: NodeId, b: NodeId) -> bool {
        match &self.reach {
            Reach::Closure(rows) => rows[a.0].contains(b.0),
            Reach::Forest(idx) => match idx.direction {
                Direction::Down => idx.is_ancestor(a, b),
                Direction::Up => idx.is_ancestor(b, a),
            },
        }
    }

    /// Reachable set of `u`, including `u`, in ascending index order.
    pub fn rset(&self, u: NodeId) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = match &self.reach {
            Reach::Closure(rows) => rows[u.0].ones().map(NodeId).collect(),
            Reach::Forest(idx) => match idx.direction {
                Direction::Down => idx.subtree(u).to_vec(),
                Direction::Up => std::iter::once(u).chain(idx.ancestors(u)).collect(),
            },
        };
        out.sort_unstable();
        out
    }

    /// Preceding set of `u`: every `v != u` that reaches `u`.
    pub fn pset(&self, u: NodeId) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = match &self.reach {
            Reach::Closure(rows) => (0..self.n())
                .filter(|&v| v != u.0 && rows[v].contains(u.0))
                .map(NodeId)
                .collect(),
            Reach::Forest(idx) => match idx.direction {
                Direction::Down => idx.ancestors(u).collect(),
                Direction::Up => idx.subtree(u)[1..].to_vec(),
            },
        };
        out.sort_unstable();
        out
    }

    /// `rset(u)` as a bit-set over node indices.
    pub fn rset_bits(&self, u: NodeId) -> FixedBitSet {
        match &self.reach {
            Reach::Closure(rows) => rows[u.0].clone(),
            Reach::Forest(_) => self.to_bits(self.rset(u)),
        }
    }

    /// `pset(u)` as a bit-set over node indices.
    pub fn pset_bits(&self, u: NodeId) -> FixedBitSet {
        self.to_bits(self.pset(u))
    }

    fn to_bits(&self, nodes: Vec<NodeId>) -> FixedBitSet {
        let mut bits = FixedBitSet::with_capacity(self.n());
        for v in nodes {
            bits.insert(v.0);
        }
        bits
    }

    /// Most specific structural class. A graph that is both a downward and an
    /// upward forest (isolated nodes, disjoint chains) reports as downward.
    pub fn classify(&self) -> StructureClass {
        if self.is_down_forest() {
            match balanced_shape(self, Direction::Down) {
                Some((arity, depth)) => StructureClass::BalancedDownTree { arity, depth },
                None => StructureClass::DownwardForest,
            }
        } else if self.is_up_forest() {
            match balanced_shape(self, Direction::Up) {
                Some((arity, depth)) => StructureClass::BalancedUpTree { arity, depth },
                None => StructureClass::UpwardForest,
            }
        } else {
            StructureClass::GeneralDag
        }
    }

    /// Rooted-tree view of a forest in the given orientation.
    pub fn forest(&self, direction: Direction) -> Result<Forest> {
        Forest::new(self, direction)
    }
}

/// `(arity, depth)` when the graph is a single balanced tree in `direction`.
fn balanced_shape(dag: &Dag, direction: Direction) -> Option<(usize, usize)> {
    let forest = Forest::new(dag, direction).ok()?;
    if forest.roots().len() != 1 {
        return None;
    }
    if dag.n() == 1 {
        return Some((0, 0));
    }
    let mut arity = None;
    let mut leaf_depth = None;
    for v in dag.nodes() {
        let kids = forest.children(v).len();
        if kids == 0 {
            match leaf_depth {
                None => leaf_depth = Some(forest.depth(v)),
                Some(d) if d != forest.depth(v) => return None,
                _ => {}
            }
        } else {
            match arity {
                None => arity = Some(kids),
                Some(m) if m != kids => return None,
                _ => {}
            }
        }
    }
    Some((arity?, leaf_depth?))
}

/// A forest viewed as rooted trees: `parent` is the tree parent regardless of
/// edge orientation (the unique predecessor for downward forests, the unique
/// successor for upward forests).
#[derive(Debug, Clone)]
pub struct Forest {
    direction: Direction,
    parent: Vec<Option<NodeId>>,
    children: Vec<Vec<NodeId>>,
    roots: Vec<NodeId>,
    preorder: Vec<NodeId>,
    depth: Vec<usize>,
    size: Vec<usize>,
}

impl Forest {
    pub fn new(dag: &Dag, direction: Direction) -> Result<Forest> {
        let ok = match direction {
            Direction::Down => dag.is_down_forest(),
            Direction::Up => dag.is_up_forest(),
        };
        if !ok {
            return Err(Error::WrongStructure {
                expected: match direction {
                    Direction::Down => "downward forest",
                    Direction::Up => "upward forest",
                },
            });
        }
        let n = dag.n();
        let (children, parent): (Vec<Vec<NodeId>>, Vec<Option<NodeId>>) = match direction {
            Direction::Down => (
                dag.succ.clone(),
                dag.pred.iter().map(|p| p.first().copied()).collect(),
            ),
            Direction::Up => (
                dag.pred.clone(),
                dag.succ.iter().map(|s| s.first().copied()).collect(),
            ),
        };
        let roots: Vec<NodeId> = (0..n)
            .filter(|&v| parent[v].is_none())
            .map(NodeId)
            .collect();
        let mut preorder = Vec::with_capacity(n);
        let mut depth = vec![0; n];
        let mut stack: Vec<NodeId> = roots.iter().rev().copied().collect();
        while let Some(v) = stack.pop() {
            preorder.push(v);
            for &c in children[v.0].iter().rev() {
                depth[c.0] = depth[v.0] + 1;
                stack.push(c);
            }
        }
        let mut size = vec![1; n];
        for &v in preorder.iter().rev() {
            if let Some(p) = parent[v.0] {
                size[p.0] += size[v.0];
            }
        }
        Ok(Forest {
            direction,
            parent,
            children,
            roots,
            preorder,
            depth,
            size,
        })
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        self.parent[v.0]
    }

    pub fn children(&self, v: NodeId) -> &[NodeId] {
        &self.children[v.0]
    }

    /// Tree roots in ascending index order.
    pub fn roots(&self) -> &[NodeId] {
        &self.roots
    }

    /// Parents before children; trees in root order, children in index order.
    pub fn preorder(&self) -> &[NodeId] {
        &self.preorder
    }

    pub fn depth(&self, v: NodeId) -> usize {
        self.depth[v.0]
    }

    /// Number of nodes in the subtree rooted at `v`.
    pub fn size(&self, v: NodeId) -> usize {
        self.size[v.0]
    }

    pub fn is_leaf(&self, v: NodeId) -> bool {
        self.children[v.0].is_empty()
    }
}

/// A forest with one extra root joining its trees.
#[derive(Debug, Clone)]
pub struct AugmentedTree {
    pub tree: Dag,
    pub virtual_root: NodeId,
    /// `origin[i]` is the forest node behind augmented node `i`; the virtual
    /// root (always the last index) has no entry.
    pub origin: Vec<NodeId>,
}

impl AugmentedTree {
    pub fn to_forest(&self, u: NodeId) -> Option<NodeId> {
        self.origin.get(u.0).copied()
    }
}

/// Joins the trees of a forest under a new virtual root appended as index `n`.
/// Downward forests gain edges root→tree-root, upward forests tree-root→root.
pub fn augment_forest(forest: &Dag, direction: Direction) -> Result<AugmentedTree> {
    let view = Forest::new(forest, direction)?;
    let n = forest.n();
    let mut root_name = String::from("__virtual_root__");
    while forest.node(&root_name).is_some() {
        root_name.push('_');
    }
    let mut names = forest.names.clone();
    names.push(root_name);
    let mut edges: Vec<(usize, usize)> = forest.edges().map(|(a, b)| (a.0, b.0)).collect();
    for &r in view.roots() {
        edges.push(match direction {
            Direction::Down => (n, r.0),
            Direction::Up => (r.0, n),
        });
    }
    let tree = Dag::from_indices(names, edges)?;
    Ok(AugmentedTree {
        tree,
        virtual_root: NodeId(n),
        origin: (0..n).map(NodeId).collect(),
    })
}

/// Same nodes, every edge reversed.
pub fn reverse(dag: &Dag) -> Dag {
    Dag::from_indices(dag.names.clone(), dag.edges().map(|(a, b)| (b.0, a.0)))
        .expect("reversing a DAG keeps it acyclic")
}

/// Graph over a subset of nodes, with the node each one came from.
#[derive(Debug, Clone)]
pub struct Induced {
    pub dag: Dag,
    /// `origin[i]` is the node of the parent graph behind induced node `i`.
    pub origin: Vec<NodeId>,
}

impl Induced {
    /// Index of an original node in the induced graph, if it was kept.
    pub fn position(&self, original: NodeId) -> Option<NodeId> {
        self.origin.binary_search(&original).ok().map(NodeId)
    }
}

/// Restricts the reachability relation to `members` and keeps only its
/// transitive reduction as edges.
pub fn induced_subgraph(dag: &Dag, members: &[NodeId]) -> Result<Induced> {
    if members.is_empty() {
        return Err(Error::EmptyCandidateSet);
    }
    let mut origin = members.to_vec();
    origin.sort_unstable();
    origin.dedup();
    let n = dag.n();
    let mut position = vec![usize::MAX; n];
    for (i, v) in origin.iter().enumerate() {
        position[v.0] = i;
    }
    let mut edges = Vec::new();
    match &dag.reach {
        Reach::Forest(idx) => {
            // nearest[v]: closest strict tree-ancestor of v that is kept.
            let mut nearest: Vec<Option<NodeId>> = vec![None; n];
            for &v in &idx.order {
                if let Some(p) = idx.parent[v.0] {
                    nearest[v.0] = if position[p.0] != usize::MAX {
                        Some(p)
                    } else {
                        nearest[p.0]
                    };
                }
            }
            for &v in &origin {
                if let Some(a) = nearest[v.0] {
                    let (pa, pv) = (position[a.0], position[v.0]);
                    edges.push(match idx.direction {
                        Direction::Down => (pa, pv),
                        Direction::Up => (pv, pa),
                    });
                }
            }
        }
        Reach::Closure(rows) => {
            let mut keep = FixedBitSet::with_capacity(n);
            for v in &origin {
                keep.insert(v.0);
            }
            for &v in &origin {
                let mut below = rows[v.0].clone();
                below.intersect_with(&keep);
                below.set(v.0, false);
                let mut covered = FixedBitSet::with_capacity(n);
                for x in below.ones() {
                    let mut strict = rows[x].clone();
                    strict.set(x, false);
                    covered.union_with(&strict);
                }
                below.difference_with(&covered);
                for w in below.ones() {
                    edges.push((position[v.0], position[w]));
                }
            }
        }
    }
    let names = origin.iter().map(|&v| dag.names[v.0].clone()).collect();
    Ok(Induced {
        dag: Dag::from_indices(names, edges)?,
        origin,
    })
}

/// Graph over a candidate set; see [`induced_subgraph`].
pub fn induced_candidate_graph(
    dag: &Dag,
    cand: &crate::semantics::CandidateSet,
) -> Result<Induced> {
    induced_subgraph(dag, &cand.to_vec())
}
