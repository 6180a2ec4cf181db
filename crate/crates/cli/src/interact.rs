//! Terminal question loop: plan a phase on the current candidate graph, read
//! one answer per question, shrink, repeat.

use std::io::{BufRead, Write};

use graphquest_core::multi::solve_multi;
use graphquest_core::single_bounded::solve;
use graphquest_core::{candidate_set, induced_candidate_graph, AnswerSet, Dag, Response, Variant};

use crate::{read_line, CliResult, Failure};

const MAX_TRIES: usize = 3;

enum Reply {
    Answer(Response),
    Quit,
}

fn parse_reply(line: &str) -> Option<Reply> {
    match line.to_ascii_uppercase().as_str() {
        "YES" | "Y" => Some(Reply::Answer(Response::Yes)),
        "NO" | "N" => Some(Reply::Answer(Response::No)),
        "QUIT" | "Q" => Some(Reply::Quit),
        _ => None,
    }
}

fn ask(name: &str, input: &mut impl BufRead, out: &mut impl Write) -> CliResult<Reply> {
    for _ in 0..MAX_TRIES {
        write!(out, "{name}? [YES/NO] ")?;
        out.flush()?;
        let Some(line) = read_line(input)? else {
            return Ok(Reply::Quit);
        };
        match parse_reply(&line) {
            Some(reply) => return Ok(reply),
            None => writeln!(out, "please answer YES or NO (or QUIT)")?,
        }
    }
    Err(Failure::new(
        5,
        format!("no valid answer after {MAX_TRIES} tries"),
    ))
}

fn print_names(out: &mut impl Write, label: &str, dag: &Dag) -> CliResult<()> {
    let mut names: Vec<&str> = dag.names().iter().map(String::as_str).collect();
    names.sort_unstable();
    writeln!(out, "{label} ({}): {}", names.len(), names.join(", "))?;
    Ok(())
}

pub(crate) fn session(
    dag: &Dag,
    variant: Variant,
    k: usize,
    mut input: impl BufRead,
    mut out: impl Write,
) -> CliResult<()> {
    let mut current = dag.clone();
    let mut phase = 0usize;
    while current.n() > 1 {
        let plan = match variant {
            Variant::Single => solve(&current, k)?,
            Variant::Multi => solve_multi(&current, k)?,
        };
        if plan.questions.is_empty() {
            break;
        }
        phase += 1;
        writeln!(out, "phase {phase}")?;
        let mut answers = AnswerSet::new();
        let mut quit = false;
        for &q in &plan.questions {
            match ask(current.name(q), &mut input, &mut out)? {
                Reply::Answer(value) => {
                    answers.insert(q, value);
                }
                Reply::Quit => {
                    quit = true;
                    break;
                }
            }
        }
        let cand = candidate_set(&current, &answers, variant)?;
        let shrunk = cand.len() < current.n();
        current = induced_candidate_graph(&current, &cand)?.dag;
        if quit || !shrunk {
            break;
        }
        print_names(&mut out, "candidates", &current)?;
    }
    match (variant, current.n()) {
        (Variant::Single, 1) => {
            writeln!(out, "target: {}", current.name(graphquest_core::NodeId(0)))?
        }
        _ => print_names(&mut out, "final candidates", &current)?,
    }
    Ok(())
}
