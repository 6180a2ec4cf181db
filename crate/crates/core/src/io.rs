//! Line-oriented text formats for graphs, answers and candidate sets.
//!
//! Graph files hold `n<TAB>name` node lines and `e<TAB>src<TAB>dst` edge
//! lines; answer files hold `name<TAB>YES|NO` lines. Blank lines and lines
//! starting with `#` are skipped in both.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{build_dag, Dag};
use crate::semantics::{AnswerSet, CandidateSet, Response};

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

fn parse_error(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

pub fn parse_graph(text: &str) -> Result<Dag> {
    let mut nodes: Vec<&str> = Vec::new();
    let mut edges: Vec<(&str, &str)> = Vec::new();
    for (line, content) in content_lines(text) {
        let fields: Vec<&str> = content.split('\t').collect();
        match fields.as_slice() {
            ["n", name] if !name.is_empty() => nodes.push(name),
            ["e", src, dst] => edges.push((src, dst)),
            _ => {
                return Err(parse_error(
                    line,
                    format!("expected `n<TAB>name` or `e<TAB>src<TAB>dst`, found `{content}`"),
                ))
            }
        }
    }
    build_dag(&nodes, &edges)
}

pub fn read_graph(path: &Path) -> Result<Dag> {
    parse_graph(&std::fs::read_to_string(path)?)
}

pub fn format_graph(dag: &Dag) -> String {
    let mut out = String::new();
    for v in dag.nodes() {
        let _ = writeln!(out, "n\t{}", dag.name(v));
    }
    for (a, b) in dag.edges() {
        let _ = writeln!(out, "e\t{}\t{}", dag.name(a), dag.name(b));
    }
    out
}

/// Parses an answer file against `dag`. Repeating a node is allowed only
/// with the same value.
pub fn parse_answers(text: &str, dag: &Dag) -> Result<AnswerSet> {
    let mut answers = AnswerSet::new();
    for (line, content) in content_lines(text) {
        let Some((name, value)) = content.split_once('\t') else {
            return Err(parse_error(
                line,
                format!("expected `name<TAB>YES|NO`, found `{content}`"),
            ));
        };
        let node = dag
            .node(name)
            .ok_or_else(|| Error::UnknownNode(name.to_owned()))?;
        let value: Response = value
            .trim()
            .parse()
            .map_err(|e: String| parse_error(line, e))?;
        if let Some(old) = answers.insert(node, value) {
            if old != value {
                return Err(parse_error(
                    line,
                    format!("conflicting answers for `{name}`"),
                ));
            }
        }
    }
    Ok(answers)
}

pub fn read_answers(path: &Path, dag: &Dag) -> Result<AnswerSet> {
    parse_answers(&std::fs::read_to_string(path)?, dag)
}

pub fn format_answers(dag: &Dag, answers: &AnswerSet) -> String {
    let mut out = String::new();
    for a in answers.iter() {
        let _ = writeln!(out, "{}\t{}", dag.name(a.node), a.value);
    }
    out
}

/// Candidate names sorted, one per line.
pub fn format_candidates(dag: &Dag, cand: &CandidateSet) -> String {
    let mut out = String::new();
    for name in cand.sorted_names(dag) {
        out.push_str(name);
        out.push('\n');
    }
    out
}
