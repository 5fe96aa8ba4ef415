//! The XPath subset used by genome routes: child and descendant steps over
//! tag names, optional cardinal predicates, absolute or relative paths, and
//! the bare self route ".".
//!
//! Grammar: `"." | ["/"] step (("/" | "//") step)*` where
//! `step = name ["[" int "]"]`. A `//` separator marks the step after it as
//! descendant-axis. A leading `//` is not part of the subset.

use std::fmt;
use thiserror::Error;

use crate::xml::{Document, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    Child,
    Descendant,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Step {
    pub axis: Axis,
    pub name: String,
    /// 1-based positional filter, applied per context node.
    pub predicate: Option<u32>,
}

impl Step {
    pub fn child(name: impl Into<String>) -> Step {
        Step {
            axis: Axis::Child,
            name: name.into(),
            predicate: None,
        }
    }

    pub fn descendant(name: impl Into<String>) -> Step {
        Step {
            axis: Axis::Descendant,
            name: name.into(),
            predicate: None,
        }
    }

    pub fn with_predicate(mut self, k: u32) -> Step {
        debug_assert!(k >= 1);
        self.predicate = Some(k);
        self
    }
}

/// A route. The bare self route "." is the empty relative path; absolute
/// routes have at least one step and start child-axis from the root.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PathExpr {
    pub absolute: bool,
    pub steps: Vec<Step>,
}

impl PathExpr {
    pub fn self_node() -> PathExpr {
        PathExpr {
            absolute: false,
            steps: Vec::new(),
        }
    }

    pub fn relative(steps: Vec<Step>) -> PathExpr {
        PathExpr {
            absolute: false,
            steps,
        }
    }

    pub fn absolute(steps: Vec<Step>) -> PathExpr {
        debug_assert!(!steps.is_empty());
        debug_assert_eq!(steps[0].axis, Axis::Child);
        PathExpr {
            absolute: true,
            steps,
        }
    }

    pub fn is_self(&self) -> bool {
        !self.absolute && self.steps.is_empty()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// The same route with every cardinal predicate removed.
    pub fn without_predicates(&self) -> PathExpr {
        PathExpr {
            absolute: self.absolute,
            steps: self
                .steps
                .iter()
                .map(|s| Step {
                    axis: s.axis,
                    name: s.name.clone(),
                    predicate: None,
                })
                .collect(),
        }
    }

    pub fn has_predicate(&self) -> bool {
        self.steps.iter().any(|s| s.predicate.is_some())
    }

    pub fn has_descendant_step(&self) -> bool {
        self.steps.iter().any(|s| s.axis == Axis::Descendant)
    }

    /// Convenience for building an absolute path from plain tag names.
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> PathExpr {
        PathExpr::absolute(names.iter().map(|n| Step::child(n.as_ref())).collect())
    }
}

impl fmt::Display for PathExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_path(self))
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid route {text:?}: {message}")]
pub struct PathError {
    pub text: String,
    pub message: String,
}

/// Renders a route in the canonical syntax accepted by `parse_path`.
pub fn render_path(expr: &PathExpr) -> String {
    if expr.is_self() {
        return ".".to_string();
    }
    let mut out = String::new();
    for (i, step) in expr.steps.iter().enumerate() {
        if i == 0 {
            if expr.absolute {
                out.push('/');
            }
        } else {
            out.push_str(match step.axis {
                Axis::Child => "/",
                Axis::Descendant => "//",
            });
        }
        out.push_str(&step.name);
        if let Some(k) = step.predicate {
            out.push('[');
            out.push_str(&k.to_string());
            out.push(']');
        }
    }
    out
}

/// Parses a route. `render_path(parse_path(t))` is the normalized form of
/// `t` (normalization is the identity on everything this system emits).
pub fn parse_path(text: &str) -> Result<PathExpr, PathError> {
    let err = |message: &str| -> PathError {
        PathError {
            text: text.to_string(),
            message: message.to_string(),
        }
    };
    if text.is_empty() {
        return Err(err("empty route"));
    }
    if text == "." {
        return Ok(PathExpr::self_node());
    }
    let (absolute, mut rest) = if let Some(r) = text.strip_prefix("//") {
        let _ = r;
        return Err(err("route may not start with a descendant step"));
    } else if let Some(r) = text.strip_prefix('/') {
        (true, r)
    } else {
        (false, text)
    };
    let mut steps = Vec::new();
    let mut axis = Axis::Child;
    loop {
        let (step, remaining) = parse_step(rest, axis).map_err(|m| err(&m))?;
        steps.push(step);
        if remaining.is_empty() {
            break;
        }
        if let Some(r) = remaining.strip_prefix("//") {
            axis = Axis::Descendant;
            rest = r;
        } else if let Some(r) = remaining.strip_prefix('/') {
            axis = Axis::Child;
            rest = r;
        } else {
            return Err(err("unexpected characters after a step"));
        }
        if rest.is_empty() {
            return Err(err("route ends with a separator"));
        }
    }
    Ok(PathExpr { absolute, steps })
}

fn parse_step(input: &str, axis: Axis) -> Result<(Step, &str), String> {
    let bytes = input.as_bytes();
    let mut i = 0;
    match bytes.first() {
        Some(b) if b.is_ascii_alphabetic() || *b == b'_' => i += 1,
        _ => return Err("expected a tag name".to_string()),
    }
    while i < bytes.len()
        && (bytes[i].is_ascii_alphanumeric() || matches!(bytes[i], b'_' | b'-' | b':'))
    {
        i += 1;
    }
    let name = input[..i].to_string();
    let mut rest = &input[i..];
    let mut predicate = None;
    if let Some(r) = rest.strip_prefix('[') {
        let close = r
            .find(']')
            .ok_or_else(|| format!("unterminated predicate on step {name}"))?;
        let num = &r[..close];
        let k: u32 = num
            .parse()
            .map_err(|_| format!("predicate on step {name} is not a positive integer"))?;
        if k < 1 {
            return Err(format!("predicate on step {name} must be at least 1"));
        }
        predicate = Some(k);
        rest = &r[close + 1..];
    }
    Ok((
        Step {
            axis,
            name,
            predicate,
        },
        rest,
    ))
}

/// Evaluates a route. Absolute routes start at the document root (the first
/// step matches the root element itself); relative routes start at `context`;
/// "." returns the context. Results are element nodes in document order,
/// duplicate-free. Cardinal predicates select per context node.
pub fn evaluate(expr: &PathExpr, context: NodeId, doc: &Document) -> Vec<NodeId> {
    if expr.is_self() {
        return vec![context];
    }
    let mut current: Vec<NodeId>;
    let steps: &[Step];
    if expr.absolute {
        let first = &expr.steps[0];
        // the virtual document node has the root element as its only child
        let matched: Vec<NodeId> = match first.axis {
            Axis::Child => {
                if doc.name(doc.root()) == Some(first.name.as_str()) {
                    vec![doc.root()]
                } else {
                    Vec::new()
                }
            }
            Axis::Descendant => {
                let mut all = vec![doc.root()];
                all.extend(doc.descendants(doc.root()));
                all.retain(|&n| doc.name(n) == Some(first.name.as_str()));
                all
            }
        };
        current = apply_predicate(matched, first.predicate);
        steps = &expr.steps[1..];
    } else {
        current = vec![context];
        steps = &expr.steps[..];
    }
    for step in steps {
        let mut next: Vec<NodeId> = Vec::new();
        for &ctx in &current {
            let matched: Vec<NodeId> = match step.axis {
                Axis::Child => doc
                    .children(ctx)
                    .iter()
                    .copied()
                    .filter(|&c| doc.name(c) == Some(step.name.as_str()))
                    .collect(),
                Axis::Descendant => doc
                    .descendants(ctx)
                    .into_iter()
                    .filter(|&c| doc.name(c) == Some(step.name.as_str()))
                    .collect(),
            };
            next.extend(apply_predicate(matched, step.predicate));
        }
        next.sort();
        next.dedup();
        current = next;
    }
    current
}

fn apply_predicate(set: Vec<NodeId>, predicate: Option<u32>) -> Vec<NodeId> {
    match predicate {
        None => set,
        Some(k) => set
            .into_iter()
            .nth(k as usize - 1)
            .map(|n| vec![n])
            .unwrap_or_default(),
    }
}

/// The relative route from `base` to `target`, both absolute; `base` must be
/// a step-name prefix of `target` (predicates ignored for the prefix test).
/// Equal routes give the self route. Returns `None` when not applicable.
pub fn relative_between(base: &PathExpr, target: &PathExpr) -> Option<PathExpr> {
    if !base.absolute || !target.absolute || base.len() > target.len() {
        return None;
    }
    if base
        .steps
        .iter()
        .zip(&target.steps)
        .any(|(b, t)| b.name != t.name)
    {
        return None;
    }
    if base.len() == target.len() {
        return Some(PathExpr::self_node());
    }
    Some(PathExpr::relative(target.steps[base.len()..].to_vec()))
}
