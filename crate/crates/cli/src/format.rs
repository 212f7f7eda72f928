//! Text formats for graphs and operation streams.
//!
//! Graph files hold `vertices <id>...` lines (repeatable) and `edge+ <u> <v>`
//! lines; every pair not listed as `edge+` is negative. Operation files hold
//! one of `flip <u> <v>`, `add <v>` or `del <v>` per line. In both, `#` starts
//! a comment and blank lines are ignored.

use std::collections::BTreeSet;

use dyncc::{Operation, SignedGraph, VertexId};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("line {line}: vertex {vertex} is not declared")]
    UnknownVertex { line: usize, vertex: VertexId },
    #[error("line {line}: edge {u} {v} is listed twice")]
    DuplicateEdge {
        line: usize,
        u: VertexId,
        v: VertexId,
    },
}

fn parse_error(line: usize, reason: impl Into<String>) -> FormatError {
    FormatError::Parse {
        line,
        reason: reason.into(),
    }
}

/// Non-empty lines with comments stripped, numbered from 1.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let body = raw.split('#').next().unwrap_or("");
        let words: Vec<&str> = body.split_whitespace().collect();
        (!words.is_empty()).then_some((i + 1, words))
    })
}

fn parse_id(line: usize, word: &str) -> Result<VertexId, FormatError> {
    word.parse()
        .map_err(|_| parse_error(line, format!("'{word}' is not a vertex id")))
}

fn arity(line: usize, words: &[&str], n: usize) -> Result<(), FormatError> {
    if words.len() != n + 1 {
        return Err(parse_error(
            line,
            format!(
                "'{}' takes {n} argument(s), found {}",
                words[0],
                words.len() - 1
            ),
        ));
    }
    Ok(())
}

pub fn parse_graph(text: &str) -> Result<SignedGraph, FormatError> {
    let mut g = SignedGraph::new();
    for (line, words) in content_lines(text) {
        match words[0] {
            "vertices" => {
                for w in &words[1..] {
                    let v = parse_id(line, w)?;
                    g.add_vertex(v)
                        .map_err(|_| parse_error(line, format!("vertex {v} declared twice")))?;
                }
            }
            "edge+" => {
                arity(line, &words, 2)?;
                let u = parse_id(line, words[1])?;
                let v = parse_id(line, words[2])?;
                if u == v {
                    return Err(parse_error(line, format!("self-loop on {u}")));
                }
                for x in [u, v] {
                    if !g.contains_vertex(x) {
                        return Err(FormatError::UnknownVertex { line, vertex: x });
                    }
                }
                if !g.set_positive(u, v).expect("endpoints checked") {
                    return Err(FormatError::DuplicateEdge { line, u, v });
                }
            }
            other => return Err(parse_error(line, format!("unknown directive '{other}'"))),
        }
    }
    Ok(g)
}

/// Canonical text: one `vertices` line, then edges with `u < v` in
/// lexicographic order.
pub fn serialize_graph(g: &SignedGraph) -> String {
    let mut out = String::new();
    if !g.is_empty() {
        out.push_str("vertices");
        for v in g.vertices() {
            out.push_str(&format!(" {v}"));
        }
        out.push('\n');
    }
    for e in g.positive_edges() {
        out.push_str(&format!("edge+ {} {}\n", e.lo, e.hi));
    }
    out
}

pub fn parse_ops(text: &str) -> Result<Vec<Operation>, FormatError> {
    let mut ops = Vec::new();
    for (line, words) in content_lines(text) {
        let op = match words[0] {
            "flip" => {
                arity(line, &words, 2)?;
                let u = parse_id(line, words[1])?;
                let v = parse_id(line, words[2])?;
                if u == v {
                    return Err(parse_error(line, format!("self-loop on {u}")));
                }
                Operation::FlipSign { u, v }
            }
            "add" => {
                arity(line, &words, 1)?;
                Operation::AddVertex {
                    v: parse_id(line, words[1])?,
                }
            }
            "del" => {
                arity(line, &words, 1)?;
                Operation::DeleteVertex {
                    v: parse_id(line, words[1])?,
                }
            }
            other => return Err(parse_error(line, format!("unknown operation '{other}'"))),
        };
        ops.push(op);
    }
    Ok(ops)
}

pub fn serialize_ops(ops: &[Operation]) -> String {
    ops.iter().map(|op| format!("{op}\n")).collect()
}

/// Vertices referenced by `ops` that are neither in `g` nor added earlier.
/// Such operations are still valid input; the engine rejects them.
pub fn unknown_references(g: &SignedGraph, ops: &[Operation]) -> BTreeSet<VertexId> {
    let mut known: BTreeSet<VertexId> = g.vertices().collect();
    let mut unknown = BTreeSet::new();
    for op in ops {
        match *op {
            Operation::FlipSign { u, v } => {
                unknown.extend([u, v].into_iter().filter(|x| !known.contains(x)));
            }
            Operation::AddVertex { v } => {
                known.insert(v);
            }
            Operation::DeleteVertex { v } => {
                if !known.contains(&v) {
                    unknown.insert(v);
                }
            }
        }
    }
    unknown
}
