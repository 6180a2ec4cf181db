//! Phase-based search experiments: generators, answer simulation, baselines
//! and per-phase candidate-size metrics.

use std::collections::VecDeque;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{induced_subgraph, Dag, Direction, Forest, NodeId};
use crate::io::read_graph;
use crate::semantics::{candidate_set, simulate, AnswerSet, TargetSet, Variant};
use crate::single_bounded::{solve, solve_down_forest};

/// Node cap for generated balanced trees.
pub const DEFAULT_NODE_CAP: usize = 4_000_000;

/// Complete `m`-ary tree of depth `d`, nodes named `v<i>` in breadth-first
/// order from the root.
pub fn gen_balanced(m: usize, d: usize, direction: Direction, cap: usize) -> Result<Dag> {
    let mut n: usize = 0;
    let mut layer: usize = 1;
    for _ in 0..=d {
        n = n
            .checked_add(layer)
            .filter(|&n| n <= cap)
            .ok_or(Error::TooLarge {
                what: "balanced tree nodes",
                size: usize::MAX,
                limit: cap,
            })?;
        layer = layer.saturating_mul(m);
    }
    let names = (0..n).map(|i| format!("v{i}")).collect();
    let internal = if m == 0 { 0 } else { n - layer_count(m, d) };
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    for p in 0..internal {
        for j in 1..=m {
            let c = p * m + j;
            edges.push(match direction {
                Direction::Down => (p, c),
                Direction::Up => (c, p),
            });
        }
    }
    Dag::from_indices(names, edges)
}

fn layer_count(m: usize, d: usize) -> usize {
    m.pow(d as u32)
}

/// Random recursive tree: node `i` attaches below a uniformly chosen earlier
/// node that still has fewer than `max_children` children (`0` means no cap).
pub fn gen_random_tree(n: usize, max_children: usize, seed: u64) -> Dag {
    let n = n.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut open: Vec<usize> = vec![0];
    let mut kids = vec![0usize; n];
    let mut edges = Vec::with_capacity(n - 1);
    for i in 1..n {
        let slot = rng.gen_range(0..open.len());
        let p = open[slot];
        edges.push((p, i));
        kids[p] += 1;
        if max_children > 0 && kids[p] >= max_children {
            open.swap_remove(slot);
        }
        open.push(i);
    }
    let names = (0..n).map(|i| format!("v{i}")).collect();
    Dag::from_indices(names, edges).expect("attachment edges point forward")
}

/// Random forest of `trees` random recursive trees over `n` nodes in total;
/// edges point from parent to child, node indices are shuffled.
pub fn gen_random_forest(n: usize, trees: usize, max_children: usize, seed: u64) -> Dag {
    let n = n.max(1);
    let trees = trees.clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut label: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        label.swap(i, rng.gen_range(0..=i));
    }
    let mut open: Vec<usize> = Vec::new();
    let mut kids = vec![0usize; n];
    let mut edges = Vec::with_capacity(n);
    for i in 0..n {
        if i >= trees {
            let slot = rng.gen_range(0..open.len());
            let p = open[slot];
            edges.push((label[p], label[i]));
            kids[p] += 1;
            if max_children > 0 && kids[p] >= max_children {
                open.swap_remove(slot);
            }
        }
        open.push(i);
    }
    let names = (0..n).map(|i| format!("v{i}")).collect();
    Dag::from_indices(names, edges).expect("attachment edges point forward")
}

/// Random DAG: each pair `i < j` of a hidden random order is joined with
/// probability `edge_prob`, from the earlier node to the later one.
pub fn gen_random_dag(n: usize, edge_prob: f64, seed: u64) -> Dag {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(edge_prob) {
                edges.push((order[i], order[j]));
            }
        }
    }
    let names = (0..n).map(|i| format!("v{i}")).collect();
    Dag::from_indices(names, edges).expect("edges follow a total order")
}

/// Truthful answers of `targets` at every node of `questions`.
pub fn simulate_answers(dag: &Dag, targets: &TargetSet, questions: &[NodeId]) -> AnswerSet {
    simulate(dag, targets, questions)
}

/// `min(k, n)` distinct nodes drawn uniformly, sorted.
pub fn baseline_random(dag: &Dag, k: usize, seed: u64) -> Vec<NodeId> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<NodeId> = sample(&mut rng, dag.n(), k.min(dag.n()))
        .into_iter()
        .map(NodeId)
        .collect();
    picked.sort_unstable();
    picked
}

/// First `k` nodes of a breadth-first walk, children in index order. A single
/// tree starts below its root; a forest starts at its tree roots, as if they
/// hung under a virtual root.
pub fn baseline_general_first(dag: &Dag, k: usize) -> Result<Vec<NodeId>> {
    let direction = if dag.is_down_forest() {
        Direction::Down
    } else if dag.is_up_forest() {
        Direction::Up
    } else {
        return Err(Error::WrongStructure {
            expected: "rooted tree or forest",
        });
    };
    let view = Forest::new(dag, direction)?;
    let mut queue: VecDeque<NodeId> = VecDeque::new();
    match view.roots() {
        [root] => queue.extend(view.children(*root)),
        roots => queue.extend(roots),
    }
    let mut out = Vec::with_capacity(k);
    while let Some(v) = queue.pop_front() {
        if out.len() == k {
            break;
        }
        out.push(v);
        queue.extend(view.children(v));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Humangs,
    Random,
    GeneralFirst,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Humangs => "humangs",
            Algorithm::Random => "random",
            Algorithm::GeneralFirst => "general_first",
        })
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "humangs" => Ok(Algorithm::Humangs),
            "random" => Ok(Algorithm::Random),
            "general_first" | "general-first" => Ok(Algorithm::GeneralFirst),
            other => Err(format!(
                "unknown algorithm `{other}` (expected humangs, random or general_first)"
            )),
        }
    }
}

/// Where the experiment graph comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphSource {
    File(PathBuf),
    Balanced {
        arity: usize,
        depth: usize,
        direction: Direction,
    },
    RandomTree {
        n: usize,
        max_children: usize,
    },
}

impl GraphSource {
    /// Generated graphs use `seed` where randomness is involved.
    pub fn load(&self, seed: u64) -> Result<Dag> {
        match self {
            GraphSource::File(path) => read_graph(path),
            GraphSource::Balanced {
                arity,
                depth,
                direction,
            } => gen_balanced(*arity, *depth, *direction, DEFAULT_NODE_CAP),
            GraphSource::RandomTree { n, max_children } => {
                Ok(gen_random_tree(*n, *max_children, seed))
            }
        }
    }
}

impl FromStr for GraphSource {
    type Err = String;

    /// `balanced:<m>:<d>[:up]` or `random:<n>:<max_children>`.
    fn from_str(spec: &str) -> std::result::Result<Self, Self::Err> {
        let parts: Vec<&str> = spec.split(':').collect();
        let num = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| format!("`{s}` is not a non-negative integer in `{spec}`"))
        };
        match parts.as_slice() {
            ["balanced", m, d] => Ok(GraphSource::Balanced {
                arity: num(m)?,
                depth: num(d)?,
                direction: Direction::Down,
            }),
            ["balanced", m, d, "up"] => Ok(GraphSource::Balanced {
                arity: num(m)?,
                depth: num(d)?,
                direction: Direction::Up,
            }),
            ["random", n, c] => Ok(GraphSource::RandomTree {
                n: num(n)?,
                max_children: num(c)?,
            }),
            _ => Err(format!(
                "bad generator `{spec}` (expected balanced:<m>:<d>[:up] or random:<n>:<max_children>)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentConfig {
    pub source: GraphSource,
    pub algorithm: Algorithm,
    /// Questions per phase.
    pub k: usize,
    /// Largest number of phases.
    pub phases: usize,
    pub trials: usize,
    /// Repetitions averaged for the random baseline.
    pub random_runs: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(source: GraphSource, algorithm: Algorithm, k: usize) -> Self {
        ExperimentConfig {
            source,
            algorithm,
            k,
            phases: 1,
            trials: 100,
            random_runs: 10,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 || self.k == 0 || self.phases == 0 || self.random_runs == 0 {
            return Err(Error::InvalidTargets(
                "trials, k, phases and random runs must all be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// One phase of one trial.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseTrace {
    pub trial: usize,
    /// Starts at 1.
    pub phase: usize,
    /// Names of the nodes asked in this phase.
    pub questions: Vec<String>,
    pub candidate_size: usize,
}

/// Independent 64-bit stream for a tuple of indices.
fn mix(seed: u64, parts: &[u64]) -> u64 {
    let mut x = seed;
    for &p in parts {
        x = splitmix(x ^ splitmix(p.wrapping_add(0x9e37_79b9_7f4a_7c15)));
    }
    x
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn pick_questions(dag: &Dag, cfg: &ExperimentConfig, seed: u64) -> Result<Vec<NodeId>> {
    match cfg.algorithm {
        Algorithm::Humangs if dag.is_down_forest() => Ok(solve_down_forest(dag, cfg.k)?.questions),
        Algorithm::Humangs => Ok(solve(dag, cfg.k)?.questions),
        Algorithm::Random => Ok(baseline_random(dag, cfg.k, seed)),
        Algorithm::GeneralFirst => baseline_general_first(dag, cfg.k),
    }
}

/// Runs the phase loop for one target: plan on the current graph, answer
/// truthfully, shrink to the induced candidate graph. Stops once the target
/// is isolated or `cfg.phases` phases have run.
pub fn run_phases(
    dag: &Dag,
    target: &TargetSet,
    cfg: &ExperimentConfig,
    trial: usize,
    run: usize,
) -> Result<Vec<PhaseTrace>> {
    let mut current = dag.clone();
    let mut targets: Vec<NodeId> = target.nodes().to_vec();
    let mut traces = Vec::new();
    for phase in 1..=cfg.phases {
        if current.n() <= 1 {
            break;
        }
        let seed = mix(cfg.seed, &[trial as u64, run as u64, phase as u64]);
        let questions = pick_questions(&current, cfg, seed)?;
        let here = TargetSet::new(&current, &targets, Variant::Single)?;
        let answers = simulate_answers(&current, &here, &questions);
        let cand = candidate_set(&current, &answers, Variant::Single)?;
        let next = induced_subgraph(&current, &cand.to_vec())?;
        traces.push(PhaseTrace {
            trial,
            phase,
            questions: questions
                .iter()
                .map(|&q| current.name(q).to_owned())
                .collect(),
            candidate_size: cand.len(),
        });
        targets = targets
            .iter()
            .map(|&t| next.position(t).expect("truthful answers keep the target"))
            .collect();
        current = next.dag;
    }
    Ok(traces)
}

/// Per-trial row of the experiment output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub algorithm: Algorithm,
    pub phase: usize,
    pub k: usize,
    pub trial: usize,
    /// Mean over runs for the random baseline; a whole number otherwise.
    pub candidate_size: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub algorithm: Algorithm,
    pub phase: usize,
    pub k: usize,
    pub mean_candidate_size: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub rows: Vec<ExperimentRow>,
    pub aggregate: Vec<AggregateRow>,
}

pub const ROWS_HEADER: &str = "algorithm,phase,k,trial,candidate_size";
pub const AGGREGATE_HEADER: &str = "algorithm,phase,k,mean_candidate_size";

impl ExperimentOutput {
    pub fn rows_csv(&self) -> String {
        let mut out = String::from(ROWS_HEADER);
        out.push('\n');
        for r in &self.rows {
            let size = if r.algorithm == Algorithm::Random {
                format!("{:.4}", r.candidate_size)
            } else {
                format!("{}", r.candidate_size as u64)
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.algorithm, r.phase, r.k, r.trial, size
            );
        }
        out
    }

    pub fn aggregate_csv(&self) -> String {
        let mut out = String::from(AGGREGATE_HEADER);
        out.push('\n');
        for r in &self.aggregate {
            let _ = writeln!(
                out,
                "{},{},{},{:.4}",
                r.algorithm, r.phase, r.k, r.mean_candidate_size
            );
        }
        out
    }

    /// Writes the rows to `path` and the aggregate next to it as
    /// `<stem>_aggregate.csv`.
    pub fn write(&self, path: &Path) -> Result<PathBuf> {
        std::fs::write(path, self.rows_csv())?;
        let agg = aggregate_path(path);
        std::fs::write(&agg, self.aggregate_csv())?;
        Ok(agg)
    }

    /// Mean candidate size after each phase, from phase 1.
    pub fn phase_means(&self) -> Vec<f64> {
        self.aggregate
            .iter()
            .map(|r| r.mean_candidate_size)
            .collect()
    }
}

pub fn aggregate_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "experiment".into());
    path.with_file_name(format!("{stem}_aggregate.csv"))
}

/// Runs every trial of `cfg` on its source graph.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let dag = cfg.source.load(cfg.seed)?;
    run_experiment_on(&dag, cfg)
}

/// Targets are drawn uniformly from all nodes, one per trial, from a stream
/// that depends only on the seed and trial index, so every algorithm faces
/// the same targets. A trial that isolates its target early repeats the final
/// size for the remaining phases.
pub fn run_experiment_on(dag: &Dag, cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    if dag.n() == 0 {
        return Err(Error::EmptyCandidateSet);
    }
    let runs = if cfg.algorithm == Algorithm::Random {
        cfg.random_runs
    } else {
        1
    };
    let per_trial: Vec<Vec<f64>> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix(cfg.seed, &[trial as u64, u64::MAX]));
            let target = TargetSet::single(NodeId(rng.gen_range(0..dag.n())));
            let mut sums = vec![0.0f64; cfg.phases];
            for run in 0..runs {
                let traces = run_phases(dag, &target, cfg, trial, run)?;
                let mut last = dag.n();
                for (p, slot) in sums.iter_mut().enumerate() {
                    if let Some(t) = traces.get(p) {
                        last = t.candidate_size;
                    }
                    *slot += last as f64;
                }
            }
            Ok(sums.into_iter().map(|s| s / runs as f64).collect())
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(cfg.trials * cfg.phases);
    let mut aggregate = Vec::with_capacity(cfg.phases);
    for phase in 0..cfg.phases {
        let mut total = 0.0;
        for (trial, sizes) in per_trial.iter().enumerate() {
            total += sizes[phase];
            rows.push(ExperimentRow {
                algorithm: cfg.algorithm,
                phase: phase + 1,
                k: cfg.k,
                trial,
                candidate_size: sizes[phase],
            });
        }
        aggregate.push(AggregateRow {
            algorithm: cfg.algorithm,
            phase: phase + 1,
            k: cfg.k,
            mean_candidate_size: total / cfg.trials as f64,
        });
    }
    rows.sort_by_key(|r| (r.trial, r.phase));
    Ok(ExperimentOutput { rows, aggregate })
}
