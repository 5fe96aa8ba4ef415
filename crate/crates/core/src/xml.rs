//! XML document model, parser for the supported subset, canonical line
//! serialization, and the line diff underlying the fitness function.
//!
//! Documents are stored in an arena: nodes live in a `Vec` in document
//! (preorder) order, so `NodeId` comparison doubles as document-order
//! comparison. Everything is immutable after construction.
//!
//! The parser normalizes aggressively: inter-element whitespace is dropped,
//! text is split into lines and trimmed, comments are stripped, attributes
//! are kept on the node but excluded from matching, serialization, and
//! diffing. This keeps line counts a function of content rather than of the
//! source file's indentation style.

use std::fmt;
use thiserror::Error;

/// Index of a node in its document's arena. Ordering is document order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeKind {
    Element {
        name: String,
        attrs: Vec<(String, String)>,
    },
    Text {
        content: String,
    },
}

#[derive(Debug, Clone)]
pub struct NodeData {
    pub kind: NodeKind,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
}

/// A rooted ordered tree of elements and text.
#[derive(Debug, Clone)]
pub struct Document {
    nodes: Vec<NodeData>,
    root: NodeId,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("{message} at line {line}, column {column}")]
pub struct ParseError {
    pub message: String,
    pub line: usize,
    pub column: usize,
}

impl Document {
    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &NodeData {
        &self.nodes[id.index()]
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.node(id).children
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.node(id).parent
    }

    pub fn name(&self, id: NodeId) -> Option<&str> {
        match &self.node(id).kind {
            NodeKind::Element { name, .. } => Some(name),
            NodeKind::Text { .. } => None,
        }
    }

    pub fn text(&self, id: NodeId) -> Option<&str> {
        match &self.node(id).kind {
            NodeKind::Text { content } => Some(content),
            NodeKind::Element { .. } => None,
        }
    }

    pub fn is_element(&self, id: NodeId) -> bool {
        matches!(self.node(id).kind, NodeKind::Element { .. })
    }

    pub fn attr(&self, id: NodeId, name: &str) -> Option<&str> {
        match &self.node(id).kind {
            NodeKind::Element { attrs, .. } => attrs
                .iter()
                .find(|(k, _)| k == name)
                .map(|(_, v)| v.as_str()),
            NodeKind::Text { .. } => None,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Proper descendants of `id` in document order.
    pub fn descendants(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack: Vec<NodeId> = self.children(id).iter().rev().copied().collect();
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.children(n).iter().rev().copied());
        }
        out
    }

    /// Element names from the root down to `id`, inclusive.
    pub fn ancestor_names(&self, id: NodeId) -> Vec<&str> {
        let mut chain = Vec::new();
        let mut cur = Some(id);
        while let Some(n) = cur {
            if let Some(name) = self.name(n) {
                chain.push(name);
            }
            cur = self.parent(n);
        }
        chain.reverse();
        chain
    }

    /// Maximum nesting depth; the root element counts as 1.
    pub fn depth(&self) -> usize {
        fn walk(doc: &Document, id: NodeId, d: usize) -> usize {
            doc.children(id)
                .iter()
                .map(|&c| walk(doc, c, d + 1))
                .max()
                .unwrap_or(d)
        }
        walk(self, self.root, 1)
    }

    /// Concatenated text content of the subtree, XPath string-value style:
    /// descendant text fragments in document order joined by single spaces.
    pub fn string_value(&self, id: NodeId) -> String {
        let mut parts: Vec<&str> = Vec::new();
        let mut stack = vec![id];
        let mut ordered = Vec::new();
        while let Some(n) = stack.pop() {
            ordered.push(n);
            stack.extend(self.children(n).iter().rev().copied());
        }
        for n in ordered {
            if let Some(t) = self.text(n) {
                let t = t.trim();
                if !t.is_empty() {
                    parts.push(t);
                }
            }
        }
        parts.join(" ")
    }

    /// Deterministic line serialization: one line per start tag, one per
    /// non-empty trimmed text node, one per end tag. No declaration, no
    /// indentation. Attributes are omitted.
    pub fn canonical_lines(&self) -> Vec<String> {
        let mut lines = Vec::new();
        self.lines_rec(self.root, &mut lines);
        lines
    }

    fn lines_rec(&self, id: NodeId, lines: &mut Vec<String>) {
        match &self.node(id).kind {
            NodeKind::Element { name, .. } => {
                lines.push(format!("<{name}>"));
                for &c in self.children(id) {
                    self.lines_rec(c, lines);
                }
                lines.push(format!("</{name}>"));
            }
            NodeKind::Text { content } => {
                let t = content.trim();
                if !t.is_empty() {
                    lines.push(escape_text(t));
                }
            }
        }
    }

    /// Canonical lines joined with LF, with a trailing newline.
    pub fn canonical_string(&self) -> String {
        let mut s = self.canonical_lines().join("\n");
        s.push('\n');
        s
    }

    /// Tree equality on kinds, names, and text; attributes are excluded
    /// from matching and therefore from structural comparison too.
    pub fn structural_eq(&self, other: &Document) -> bool {
        fn eq(a: &Document, an: NodeId, b: &Document, bn: NodeId) -> bool {
            match (&a.node(an).kind, &b.node(bn).kind) {
                (NodeKind::Text { content: ta }, NodeKind::Text { content: tb }) => ta == tb,
                (NodeKind::Element { name: na, .. }, NodeKind::Element { name: nb, .. }) => {
                    na == nb
                        && a.children(an).len() == b.children(bn).len()
                        && a.children(an)
                            .iter()
                            .zip(b.children(bn))
                            .all(|(&ca, &cb)| eq(a, ca, b, cb))
                }
                _ => false,
            }
        }
        eq(self, self.root, other, other.root)
    }
}

pub fn escape_text(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            _ => out.push(ch),
        }
    }
    out
}

/// Incremental construction of a document, used by the transform engine.
/// Nodes must be appended in document order.
#[derive(Debug)]
pub struct DocumentBuilder {
    nodes: Vec<NodeData>,
}

impl DocumentBuilder {
    /// Starts a document whose root element carries `root_name`.
    pub fn new(root_name: &str) -> Self {
        DocumentBuilder {
            nodes: vec![NodeData {
                kind: NodeKind::Element {
                    name: root_name.to_string(),
                    attrs: Vec::new(),
                },
                parent: None,
                children: Vec::new(),
            }],
        }
    }

    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn add_element(&mut self, parent: NodeId, name: &str) -> NodeId {
        self.push(
            parent,
            NodeKind::Element {
                name: name.to_string(),
                attrs: Vec::new(),
            },
        )
    }

    pub fn add_text(&mut self, parent: NodeId, content: &str) -> NodeId {
        self.push(
            parent,
            NodeKind::Text {
                content: content.to_string(),
            },
        )
    }

    fn push(&mut self, parent: NodeId, kind: NodeKind) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(NodeData {
            kind,
            parent: Some(parent),
            children: Vec::new(),
        });
        self.nodes[parent.index()].children.push(id);
        id
    }

    pub fn finish(self) -> Document {
        Document {
            nodes: self.nodes,
            root: NodeId(0),
        }
    }
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

/// Parses a UTF-8 XML document restricted to the supported subset: optional
/// declaration, elements (attributes tolerated), character data, comments
/// (stripped), CDATA (treated as text). Inter-element whitespace is dropped;
/// text is split per line and trimmed.
pub fn parse_document(input: &str) -> Result<Document, ParseError> {
    Parser::new(input).parse()
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    line: usize,
    column: usize,
}

impl<'a> Parser<'a> {
    fn new(input: &'a str) -> Self {
        let input = input.strip_prefix('\u{feff}').unwrap_or(input);
        Parser {
            bytes: input.as_bytes(),
            pos: 0,
            line: 1,
            column: 1,
        }
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            message: message.into(),
            line: self.line,
            column: self.column,
        })
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn starts_with(&self, s: &str) -> bool {
        self.bytes[self.pos..].starts_with(s.as_bytes())
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek()?;
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(b)
    }

    fn bump_n(&mut self, n: usize) {
        for _ in 0..n {
            self.bump();
        }
    }

    fn skip_whitespace(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\r' | b'\n')) {
            self.bump();
        }
    }

    /// Skips over the text of a construct up to and including `end`.
    fn skip_until(&mut self, end: &str, what: &str) -> Result<(), ParseError> {
        while self.pos < self.bytes.len() {
            if self.starts_with(end) {
                self.bump_n(end.len());
                return Ok(());
            }
            self.bump();
        }
        self.err(format!("unterminated {what}"))
    }

    fn parse(&mut self) -> Result<Document, ParseError> {
        self.skip_prolog()?;
        let mut nodes = Vec::new();
        let root = self.parse_element(&mut nodes, None)?;
        // anything but whitespace/comments after the root is an error
        loop {
            self.skip_whitespace();
            if self.starts_with("<!--") {
                self.bump_n(4);
                self.skip_until("-->", "comment")?;
                continue;
            }
            break;
        }
        match self.peek() {
            None => Ok(Document { nodes, root }),
            Some(b'<') => self.err("multiple root elements"),
            Some(_) => self.err("content outside the root element"),
        }
    }

    fn skip_prolog(&mut self) -> Result<(), ParseError> {
        loop {
            self.skip_whitespace();
            if self.starts_with("<?xml") {
                self.bump_n(5);
                self.skip_until("?>", "XML declaration")?;
            } else if self.starts_with("<?") {
                return self.err("processing instructions are not supported");
            } else if self.starts_with("<!--") {
                self.bump_n(4);
                self.skip_until("-->", "comment")?;
            } else if self.starts_with("<!DOCTYPE") {
                return self.err("DOCTYPE declarations are not supported");
            } else if self.peek() == Some(b'<') {
                return Ok(());
            } else if self.peek().is_none() {
                return self.err("document has no root element");
            } else {
                return self.err("content before the root element");
            }
        }
    }

    fn parse_name(&mut self) -> Result<String, ParseError> {
        let start = self.pos;
        match self.peek() {
            Some(b) if b.is_ascii_alphabetic() || b == b'_' => {
                self.bump();
            }
            _ => return self.err("expected a name"),
        }
        while let Some(b) = self.peek() {
            if b.is_ascii_alphanumeric() || matches!(b, b'_' | b'-' | b'.' | b':') {
                self.bump();
            } else {
                break;
            }
        }
        Ok(String::from_utf8_lossy(&self.bytes[start..self.pos]).into_owned())
    }

    /// Parses an element (cursor on its `<`), appending nodes in preorder.
    fn parse_element(
        &mut self,
        nodes: &mut Vec<NodeData>,
        parent: Option<NodeId>,
    ) -> Result<NodeId, ParseError> {
        debug_assert_eq!(self.peek(), Some(b'<'));
        self.bump();
        let name = self.parse_name()?;
        let attrs = self.parse_attrs()?;
        let id = NodeId(nodes.len() as u32);
        nodes.push(NodeData {
            kind: NodeKind::Element { name: name.clone(), attrs },
            parent,
            children: Vec::new(),
        });
        if let Some(p) = parent {
            nodes[p.index()].children.push(id);
        }
        if self.starts_with("/>") {
            self.bump_n(2);
            return Ok(id);
        }
        if self.peek() != Some(b'>') {
            return self.err(format!("malformed start tag <{name}>"));
        }
        self.bump();

        let mut pending_text = String::new();
        loop {
            if self.peek().is_none() {
                return self.err(format!("unexpected end of input inside <{name}>"));
            }
            if self.starts_with("<!--") {
                self.bump_n(4);
                self.skip_until("-->", "comment")?;
                continue;
            }
            if self.starts_with("<![CDATA[") {
                self.bump_n(9);
                let start = self.pos;
                while self.pos < self.bytes.len() && !self.starts_with("]]>") {
                    self.bump();
                }
                if !self.starts_with("]]>") {
                    return self.err("unterminated CDATA section");
                }
                pending_text.push_str(&String::from_utf8_lossy(&self.bytes[start..self.pos]));
                self.bump_n(3);
                continue;
            }
            if self.starts_with("</") {
                self.flush_text(&mut pending_text, nodes, id);
                self.bump_n(2);
                let end_name = self.parse_name()?;
                if end_name != name {
                    return self.err(format!("mismatched end tag </{end_name}>, expected </{name}>"));
                }
                self.skip_whitespace();
                if self.peek() != Some(b'>') {
                    return self.err(format!("malformed end tag </{end_name}>"));
                }
                self.bump();
                return Ok(id);
            }
            if self.starts_with("<?") {
                return self.err("processing instructions are not supported");
            }
            if self.peek() == Some(b'<') {
                self.flush_text(&mut pending_text, nodes, id);
                self.parse_element(nodes, Some(id))?;
                continue;
            }
            // character data, possibly containing entity references
            let start = self.pos;
            while let Some(b) = self.peek() {
                if b == b'<' || b == b'&' {
                    break;
                }
                self.bump();
            }
            pending_text.push_str(&String::from_utf8_lossy(&self.bytes[start..self.pos]));
            if self.peek() == Some(b'&') {
                pending_text.push(self.parse_entity()?);
            }
        }
    }

    fn parse_attrs(&mut self) -> Result<Vec<(String, String)>, ParseError> {
        let mut attrs = Vec::new();
        loop {
            self.skip_whitespace();
            match self.peek() {
                Some(b'>') | Some(b'/') | None => return Ok(attrs),
                _ => {}
            }
            let name = self.parse_name()?;
            self.skip_whitespace();
            if self.peek() != Some(b'=') {
                return self.err(format!("attribute {name} is missing '='"));
            }
            self.bump();
            self.skip_whitespace();
            let quote = match self.peek() {
                Some(q @ (b'"' | b'\'')) => q,
                _ => return self.err(format!("attribute {name} is missing a quoted value")),
            };
            self.bump();
            let mut value = String::new();
            loop {
                match self.peek() {
                    None => return self.err(format!("unterminated value for attribute {name}")),
                    Some(b) if b == quote => {
                        self.bump();
                        break;
                    }
                    Some(b'&') => value.push(self.parse_entity()?),
                    Some(_) => {
                        let b = self.bump().unwrap();
                        value.push(b as char);
                    }
                }
            }
            attrs.push((name, value));
        }
    }

    fn parse_entity(&mut self) -> Result<char, ParseError> {
        debug_assert_eq!(self.peek(), Some(b'&'));
        self.bump();
        let start = self.pos;
        while let Some(b) = self.peek() {
            if b == b';' {
                break;
            }
            self.bump();
        }
        if self.peek() != Some(b';') {
            return self.err("unterminated entity reference");
        }
        let entity = String::from_utf8_lossy(&self.bytes[start..self.pos]).into_owned();
        self.bump();
        match entity.as_str() {
            "amp" => Ok('&'),
            "lt" => Ok('<'),
            "gt" => Ok('>'),
            "apos" => Ok('\''),
            "quot" => Ok('"'),
            _ if entity.starts_with("#x") || entity.starts_with("#X") => {
                u32::from_str_radix(&entity[2..], 16)
                    .ok()
                    .and_then(char::from_u32)
                    .map(Ok)
                    .unwrap_or_else(|| self.err(format!("invalid character reference &{entity};")))
            }
            _ if entity.starts_with('#') => entity[1..]
                .parse::<u32>()
                .ok()
                .and_then(char::from_u32)
                .map(Ok)
                .unwrap_or_else(|| self.err(format!("invalid character reference &{entity};"))),
            _ => self.err(format!("unknown entity &{entity};")),
        }
    }

    /// Turns accumulated character data into text nodes: one node per
    /// non-empty trimmed line. Text nodes therefore never contain newlines.
    fn flush_text(&mut self, pending: &mut String, nodes: &mut Vec<NodeData>, parent: NodeId) {
        if pending.is_empty() {
            return;
        }
        for piece in pending.split('\n') {
            let piece = piece.trim();
            if piece.is_empty() {
                continue;
            }
            let id = NodeId(nodes.len() as u32);
            nodes.push(NodeData {
                kind: NodeKind::Text {
                    content: piece.to_string(),
                },
                parent: Some(parent),
                children: Vec::new(),
            });
            nodes[parent.index()].children.push(id);
        }
        pending.clear();
    }
}

// ---------------------------------------------------------------------------
// Line diff
// ---------------------------------------------------------------------------

/// Outcome of comparing two line sequences via their longest common
/// subsequence. `d` is the insert/delete edit distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiffStats {
    pub common: usize,
    pub only_left: usize,
    pub only_right: usize,
    pub d: usize,
}

impl fmt::Display for DiffStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "common={} only_left={} only_right={} d={}",
            self.common, self.only_left, self.only_right, self.d
        )
    }
}

/// Counts differing lines between two sequences using Myers' O(ND) greedy
/// shortest-edit-script search. `d` equals the minimal number of line
/// insertions plus deletions turning `left` into `right`.
pub fn diff_count<S: AsRef<str>>(left: &[S], right: &[S]) -> DiffStats {
    let n = left.len();
    let m = right.len();
    let max = n + m;
    if max == 0 {
        return DiffStats {
            common: 0,
            only_left: 0,
            only_right: 0,
            d: 0,
        };
    }
    // v[k + max] = furthest x on diagonal k
    let mut v = vec![0usize; 2 * max + 1];
    let mut d_found = max;
    'outer: for d in 0..=max {
        let mut k = -(d as isize);
        while k <= d as isize {
            let ki = (k + max as isize) as usize;
            let mut x = if k == -(d as isize)
                || (k != d as isize && v[ki - 1] < v[ki + 1])
            {
                v[ki + 1]
            } else {
                v[ki - 1] + 1
            };
            let mut y = (x as isize - k) as usize;
            while x < n && y < m && left[x].as_ref() == right[y].as_ref() {
                x += 1;
                y += 1;
            }
            v[ki] = x;
            if x >= n && y >= m {
                d_found = d;
                break 'outer;
            }
            k += 2;
        }
    }
    let common = (n + m - d_found) / 2;
    DiffStats {
        common,
        only_left: n - common,
        only_right: m - common,
        d: d_found,
    }
}
