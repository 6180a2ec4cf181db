//! Question semantics: answers, candidate sets and worst-case evaluation.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Dag, NodeId};

/// Default node limit for exact Multi evaluation by antichain enumeration.
pub const DEFAULT_ENUMERATION_LIMIT: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Exactly one target node.
    Single,
    /// A non-empty set of pairwise unrelated target nodes.
    Multi,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Single => "single",
            Variant::Multi => "multi",
        })
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "single" => Ok(Variant::Single),
            "multi" => Ok(Variant::Multi),
            other => Err(format!("unknown variant `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Response {
    #[serde(rename = "YES")]
    Yes,
    #[serde(rename = "NO")]
    No,
}

impl Response {
    pub fn from_bool(yes: bool) -> Self {
        if yes {
            Response::Yes
        } else {
            Response::No
        }
    }

    pub fn is_yes(self) -> bool {
        self == Response::Yes
    }

    pub fn complement(self) -> Self {
        match self {
            Response::Yes => Response::No,
            Response::No => Response::Yes,
        }
    }
}

impl fmt::Display for Response {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Response::Yes => "YES",
            Response::No => "NO",
        })
    }
}

impl FromStr for Response {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "YES" => Ok(Response::Yes),
            "NO" => Ok(Response::No),
            other => Err(format!("expected YES or NO, found `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Answer {
    pub node: NodeId,
    pub value: Response,
}

/// Non-empty set of pairwise unrelated target nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetSet {
    nodes: Vec<NodeId>,
}

impl TargetSet {
    pub fn new(dag: &Dag, nodes: &[NodeId], variant: Variant) -> Result<Self> {
        let mut nodes = nodes.to_vec();
        nodes.sort_unstable();
        nodes.dedup();
        if nodes.is_empty() {
            return Err(Error::InvalidTargets("target set is empty".into()));
        }
        if variant == Variant::Single && nodes.len() != 1 {
            return Err(Error::InvalidTargets(format!(
                "single variant needs one target, got {}",
                nodes.len()
            )));
        }
        if let Some(&v) = nodes.iter().find(|v| v.0 >= dag.n()) {
            return Err(Error::InvalidTargets(format!("node {v} is out of range")));
        }
        if !ip(dag, &nodes) {
            return Err(Error::InvalidTargets("targets are related".into()));
        }
        Ok(TargetSet { nodes })
    }

    pub fn single(u: NodeId) -> Self {
        TargetSet { nodes: vec![u] }
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }
}

/// Answers keyed by the asked node; the keys form the question set.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnswerSet {
    answers: BTreeMap<NodeId, Response>,
}

impl AnswerSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records an answer, replacing any earlier answer for the same node.
    pub fn insert(&mut self, node: NodeId, value: Response) -> Option<Response> {
        self.answers.insert(node, value)
    }

    pub fn get(&self, node: NodeId) -> Option<Response> {
        self.answers.get(&node).copied()
    }

    pub fn len(&self) -> usize {
        self.answers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.answers.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = Answer> + '_ {
        self.answers
            .iter()
            .map(|(&node, &value)| Answer { node, value })
    }

    pub fn question_set(&self) -> Vec<NodeId> {
        self.answers.keys().copied().collect()
    }
}

impl FromIterator<Answer> for AnswerSet {
    fn from_iter<T: IntoIterator<Item = Answer>>(iter: T) -> Self {
        AnswerSet {
            answers: iter.into_iter().map(|a| (a.node, a.value)).collect(),
        }
    }
}

/// Nodes that cannot be told apart from the targets given the answers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSet {
    bits: FixedBitSet,
}

impl CandidateSet {
    pub fn full(n: usize) -> Self {
        let mut bits = FixedBitSet::with_capacity(n);
        bits.insert_range(..);
        CandidateSet { bits }
    }

    pub fn from_nodes(n: usize, nodes: &[NodeId]) -> Self {
        let mut bits = FixedBitSet::with_capacity(n);
        for v in nodes {
            bits.insert(v.0);
        }
        CandidateSet { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    pub fn contains(&self, u: NodeId) -> bool {
        self.bits.contains(u.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.bits.ones().map(NodeId)
    }

    pub fn to_vec(&self) -> Vec<NodeId> {
        self.iter().collect()
    }

    pub fn intersect(&mut self, other: &CandidateSet) {
        self.bits.intersect_with(&other.bits);
    }

    /// Member names in lexicographic order.
    pub fn sorted_names<'a>(&self, dag: &'a Dag) -> Vec<&'a str> {
        let mut names: Vec<&str> = self.iter().map(|v| dag.name(v)).collect();
        names.sort_unstable();
        names
    }
}

/// Independence property: no member reaches another.
pub fn ip(dag: &Dag, nodes: &[NodeId]) -> bool {
    nodes.iter().enumerate().all(|(i, &u)| {
        nodes[i + 1..]
            .iter()
            .all(|&v| u != v && !dag.reaches(u, v) && !dag.reaches(v, u))
    })
}

/// YES iff some target is reachable from `u` (including `u` itself).
pub fn ask(dag: &Dag, targets: &TargetSet, u: NodeId) -> Response {
    Response::from_bool(targets.nodes.iter().any(|&t| dag.reaches(u, t)))
}

/// Truthful answers of the given targets at every question node.
pub fn simulate(dag: &Dag, targets: &TargetSet, questions: &[NodeId]) -> AnswerSet {
    questions
        .iter()
        .map(|&u| Answer {
            node: u,
            value: ask(dag, targets, u),
        })
        .collect()
}

/// Candidate set left by a single answer at `u`.
pub fn candidate_one(dag: &Dag, u: NodeId, value: Response, variant: Variant) -> CandidateSet {
    let bits = match (value, variant) {
        (Response::No, _) => {
            let mut b = dag.rset_bits(u);
            b.toggle_range(..);
            b
        }
        (Response::Yes, Variant::Multi) => {
            let mut b = dag.pset_bits(u);
            b.toggle_range(..);
            b
        }
        (Response::Yes, Variant::Single) => dag.rset_bits(u),
    };
    CandidateSet { bits }
}

/// No node answered NO while reaching a node that answered YES.
pub fn check_consistency(dag: &Dag, answers: &AnswerSet) -> bool {
    find_violation(dag, answers).is_none()
}

fn find_violation(dag: &Dag, answers: &AnswerSet) -> Option<(NodeId, NodeId)> {
    let (yes, no): (Vec<Answer>, Vec<Answer>) = answers.iter().partition(|a| a.value.is_yes());
    for n in &no {
        for y in &yes {
            if dag.reaches(n.node, y.node) {
                return Some((n.node, y.node));
            }
        }
    }
    None
}

/// Intersection of the single-answer candidate sets.
pub fn candidate_set(dag: &Dag, answers: &AnswerSet, variant: Variant) -> Result<CandidateSet> {
    if let Some((no, yes)) = find_violation(dag, answers) {
        return Err(Error::InconsistentAnswers(format!(
            "`{}` answered NO but reaches `{}`, which answered YES",
            dag.name(no),
            dag.name(yes)
        )));
    }
    let mut cand = CandidateSet::full(dag.n());
    for a in answers.iter() {
        cand.intersect(&candidate_one(dag, a.node, a.value, variant));
    }
    if cand.is_empty() {
        return Err(Error::InconsistentAnswers(
            "no target set matches every answer".into(),
        ));
    }
    Ok(cand)
}

/// Worst-case candidate size over every single target.
///
/// Targets with identical answer vectors share a candidate set, so the
/// intersection is evaluated once per distinct vector.
pub fn wcase_single(dag: &Dag, questions: &[NodeId]) -> usize {
    if questions.is_empty() {
        return dag.n();
    }
    let mut seen: HashMap<Vec<u64>, NodeId> = HashMap::new();
    for t in dag.nodes() {
        let mut key = vec![0u64; questions.len().div_ceil(64)];
        for (i, &q) in questions.iter().enumerate() {
            if dag.reaches(q, t) {
                key[i / 64] |= 1 << (i % 64);
            }
        }
        seen.entry(key).or_insert(t);
    }
    let rsets: Vec<FixedBitSet> = questions.iter().map(|&q| dag.rset_bits(q)).collect();
    let mut worst = 0;
    for (key, _) in seen {
        let mut cand = FixedBitSet::with_capacity(dag.n());
        cand.insert_range(..);
        for (i, r) in rsets.iter().enumerate() {
            if key[i / 64] >> (i % 64) & 1 == 1 {
                cand.intersect_with(r);
            } else {
                cand.difference_with(r);
            }
        }
        worst = worst.max(cand.count_ones(..));
    }
    worst
}

/// Worst-case candidate size over every non-empty independent target set,
/// by enumerating antichains. Exponential; refuses graphs above `limit` nodes.
pub fn wcase_multi_with_limit(dag: &Dag, questions: &[NodeId], limit: usize) -> Result<usize> {
    let n = dag.n();
    let limit = limit.min(63);
    if n > limit {
        return Err(Error::TooLarge {
            what: "exact Multi evaluation",
            size: n,
            limit,
        });
    }
    if questions.is_empty() {
        return Ok(n);
    }
    let masks = MaskIndex::new(dag);
    let full: u64 = (1u64 << n) - 1;
    let mut worst = 0;
    masks.for_each_antichain(|set| {
        let mut excluded = 0u64;
        for &q in questions {
            if masks.rset[q.0] & set != 0 {
                excluded |= masks.pset[q.0];
            } else {
                excluded |= masks.rset[q.0];
            }
        }
        worst = worst.max((full & !excluded).count_ones() as usize);
    });
    Ok(worst)
}

pub fn wcase_multi(dag: &Dag, questions: &[NodeId]) -> Result<usize> {
    wcase_multi_with_limit(dag, questions, DEFAULT_ENUMERATION_LIMIT)
}

/// `rset`/`pset` as 64-bit masks for small graphs.
pub(crate) struct MaskIndex {
    pub rset: Vec<u64>,
    pub pset: Vec<u64>,
}

impl MaskIndex {
    #[allow(clippy::needless_range_loop)]
    pub fn new(dag: &Dag) -> Self {
        let n = dag.n();
        assert!(n <= 64, "mask index needs at most 64 nodes");
        let mut rset = vec![0u64; n];
        let mut pset = vec![0u64; n];
        for a in 0..n {
            for b in 0..n {
                if dag.reaches(NodeId(a), NodeId(b)) {
                    rset[a] |= 1 << b;
                    if a != b {
                        pset[b] |= 1 << a;
                    }
                }
            }
        }
        MaskIndex { rset, pset }
    }

    /// Visits every non-empty antichain by extending sets in index order.
    #[allow(clippy::needless_range_loop)]
    pub fn for_each_antichain(&self, mut visit: impl FnMut(u64)) {
        let n = self.rset.len();
        let related: Vec<u64> = (0..n).map(|v| self.rset[v] | self.pset[v]).collect();
        // stack of (set, blocked, next index to try)
        let mut stack: Vec<(u64, u64, usize)> = vec![(0, 0, 0)];
        while let Some((set, blocked, from)) = stack.pop() {
            for v in from..n {
                if blocked >> v & 1 == 0 {
                    let next = set | 1 << v;
                    visit(next);
                    stack.push((next, blocked | related[v], v + 1));
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_dag;

    fn vehicles() -> Dag {
        build_dag(
            &["vehicle", "car", "nissan", "maxima", "sentra", "mercedes"],
            &[
                ("vehicle", "car"),
                ("car", "nissan"),
                ("car", "mercedes"),
                ("nissan", "maxima"),
                ("nissan", "sentra"),
            ],
        )
        .unwrap()
    }

    fn chain3() -> Dag {
        build_dag(&["a", "b", "c"], &[("a", "b"), ("b", "c")]).unwrap()
    }

    fn star() -> Dag {
        build_dag(&["a", "b", "c"], &[("a", "b"), ("a", "c")]).unwrap()
    }

    fn id(g: &Dag, s: &str) -> NodeId {
        g.node(s).unwrap()
    }

    #[test]
    fn independence() {
        let g = vehicles();
        assert!(ip(&g, &[id(&g, "nissan"), id(&g, "mercedes")]));
        assert!(!ip(&g, &[id(&g, "car"), id(&g, "nissan")]));
    }

    #[test]
    fn asking_questions() {
        let g = vehicles();
        let t = TargetSet::single(id(&g, "nissan"));
        assert_eq!(ask(&g, &t, id(&g, "car")), Response::Yes);
        assert_eq!(ask(&g, &t, id(&g, "vehicle")), Response::Yes);
        assert_eq!(ask(&g, &t, id(&g, "maxima")), Response::No);
        assert_eq!(ask(&g, &t, id(&g, "nissan")), Response::Yes);

        let c = chain3();
        let t = TargetSet::single(NodeId(2));
        for u in c.nodes() {
            assert_eq!(ask(&c, &t, u), Response::Yes);
        }
    }

    #[test]
    fn target_validation() {
        let g = vehicles();
        assert!(TargetSet::new(&g, &[], Variant::Multi).is_err());
        assert!(TargetSet::new(&g, &[id(&g, "car"), id(&g, "nissan")], Variant::Multi).is_err());
        assert!(
            TargetSet::new(&g, &[id(&g, "maxima"), id(&g, "mercedes")], Variant::Single).is_err()
        );
        assert!(
            TargetSet::new(&g, &[id(&g, "maxima"), id(&g, "mercedes")], Variant::Multi).is_ok()
        );
    }

    #[test]
    fn single_question_candidates() {
        let g = vehicles();
        let merc = id(&g, "mercedes");
        let cand = candidate_one(&g, merc, Response::No, Variant::Single);
        assert_eq!(cand.len(), 5);
        assert!(!cand.contains(merc));

        let s = star();
        let cand = candidate_one(&s, NodeId(1), Response::Yes, Variant::Multi);
        assert_eq!(cand.to_vec(), vec![NodeId(1), NodeId(2)]);

        let c = chain3();
        assert!(candidate_one(&c, NodeId(0), Response::No, Variant::Single).is_empty());
    }

    #[test]
    fn worked_example_candidate_set() {
        let g = vehicles();
        let answers: AnswerSet = [
            ("car", Response::Yes),
            ("nissan", Response::Yes),
            ("mercedes", Response::No),
        ]
        .iter()
        .map(|&(s, value)| Answer {
            node: id(&g, s),
            value,
        })
        .collect();
        let cand = candidate_set(&g, &answers, Variant::Single).unwrap();
        assert_eq!(cand.sorted_names(&g), ["maxima", "nissan", "sentra"]);

        let t = TargetSet::single(id(&g, "maxima"));
        let sim = simulate(&g, &t, &answers.question_set());
        assert_eq!(sim, answers);

        let none = candidate_set(&g, &AnswerSet::new(), Variant::Single).unwrap();
        assert_eq!(none.len(), 6);
    }

    #[test]
    fn consistency() {
        let c = chain3();
        let mut answers = AnswerSet::new();
        answers.insert(NodeId(0), Response::No);
        assert!(check_consistency(&c, &answers));
        answers.insert(NodeId(1), Response::Yes);
        assert!(!check_consistency(&c, &answers));
        assert!(matches!(
            candidate_set(&c, &answers, Variant::Single),
            Err(Error::InconsistentAnswers(_))
        ));
    }

    #[test]
    fn empty_intersection_is_inconsistent() {
        // two unrelated YES answers cannot both hold for a single target
        let s = star();
        let mut answers = AnswerSet::new();
        answers.insert(NodeId(1), Response::Yes);
        answers.insert(NodeId(2), Response::Yes);
        assert!(candidate_set(&s, &answers, Variant::Single).is_err());
        let multi = candidate_set(&s, &answers, Variant::Multi).unwrap();
        assert_eq!(multi.to_vec(), vec![NodeId(1), NodeId(2)]);
    }

    #[test]
    fn worst_case_single() {
        let c = chain3();
        assert_eq!(wcase_single(&c, &[NodeId(1)]), 2);
        assert_eq!(wcase_single(&c, &[]), 3);
        assert_eq!(wcase_single(&c, &[NodeId(0), NodeId(1), NodeId(2)]), 1);
    }

    #[test]
    fn worst_case_multi() {
        let s = star();
        assert_eq!(wcase_multi(&s, &[NodeId(1)]).unwrap(), 2);
        assert_eq!(wcase_multi(&s, &[]).unwrap(), 3);
        let all: Vec<NodeId> = s.nodes().collect();
        assert_eq!(wcase_multi(&s, &all).unwrap(), 2);

        let names: Vec<String> = (0..17).map(|i| i.to_string()).collect();
        let big = Dag::from_indices(names, []).unwrap();
        assert!(matches!(
            wcase_multi(&big, &[NodeId(0)]),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn antichain_walk_covers_star() {
        let s = star();
        let masks = MaskIndex::new(&s);
        let mut seen = Vec::new();
        masks.for_each_antichain(|m| seen.push(m));
        seen.sort_unstable();
        assert_eq!(seen, vec![0b001, 0b010, 0b100, 0b110]);
    }
}
