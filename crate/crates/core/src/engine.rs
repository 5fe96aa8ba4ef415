//! Interpreter for the three-instruction XSLT subset, plus rendering of
//! stylesheets to standard XSLT 1.0 text and re-import of such files.
//!
//! The interpreter implements XSLT 1.0 built-in template rules (elements
//! recurse into their children, text nodes copy their text): untemplated
//! nodes leak text through them, and that leakage shapes which stylesheets
//! score well, exactly as under a conformant external processor.

use thiserror::Error;

use crate::xml::{escape_text, parse_document, Document, DocumentBuilder, NodeId, ParseError};
use crate::xpath::{evaluate, parse_path, render_path, PathError, PathExpr};

pub const XSL_NS: &str = "http://www.w3.org/1999/XSL/Transform";

/// Recursion limit factor: template dispatch deeper than this multiple of
/// the input document depth marks the stylesheet degenerate.
pub const RECURSION_FACTOR: usize = 10;

/// Output node cap; runaway emission marks the stylesheet degenerate.
pub const OUTPUT_NODE_CAP: usize = 2000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instruction {
    Apply { select: PathExpr },
    ValueOf { select: PathExpr },
    Text { literal: String },
}

impl Instruction {
    pub fn select(&self) -> Option<&PathExpr> {
        match self {
            Instruction::Apply { select } | Instruction::ValueOf { select } => Some(select),
            Instruction::Text { .. } => None,
        }
    }

    pub fn select_mut(&mut self) -> Option<&mut PathExpr> {
        match self {
            Instruction::Apply { select } | Instruction::ValueOf { select } => Some(select),
            Instruction::Text { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MatchPattern {
    /// Pattern "/": the document node. Matched once, at transform start.
    Root,
    /// A bare tag name; matches any element of that name.
    Name(String),
    /// An absolute predicate-free path; matches an element whose ancestor
    /// name chain from the root equals the path.
    Path(PathExpr),
}

impl MatchPattern {
    pub fn render(&self) -> String {
        match self {
            MatchPattern::Root => "/".to_string(),
            MatchPattern::Name(n) => n.clone(),
            MatchPattern::Path(p) => render_path(p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub pattern: MatchPattern,
    pub body: Vec<Instruction>,
}

/// An ordered list of templates; the first is the root template.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stylesheet {
    pub templates: Vec<Template>,
}

impl Stylesheet {
    /// Name of the literal element wrapping the root template's output,
    /// derived from the first apply-templates route: absolute routes all
    /// start at the input document's root tag.
    pub fn wrapper_name(&self) -> Option<&str> {
        let root = self.templates.first()?;
        root.body.iter().find_map(|i| match i {
            Instruction::Apply { select } if select.absolute => {
                Some(select.steps[0].name.as_str())
            }
            _ => None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("template recursion exceeded {0} levels")]
    RecursionDepth(usize),
    #[error("output exceeded {0} nodes")]
    OutputSize(usize),
}

/// Applies a stylesheet to a document. The output root element always
/// carries the input root's name; the root template's body then runs with
/// the input root as context. Degenerate stylesheets (runaway recursion or
/// output) abort with an error the fitness function scores as worst-case.
pub fn transform(sheet: &Stylesheet, doc: &Document) -> Result<Document, TransformError> {
    let root_name = doc.name(doc.root()).expect("document root is an element");
    let mut exec = Executor {
        sheet,
        doc,
        out: DocumentBuilder::new(root_name),
        nodes_emitted: 1,
        max_depth: RECURSION_FACTOR * doc.depth(),
    };
    let out_root = exec.out.root();
    if let Some(root_template) = sheet.templates.first() {
        exec.run_body(&root_template.body, doc.root(), out_root, 0)?;
    }
    Ok(exec.out.finish())
}

struct Executor<'a> {
    sheet: &'a Stylesheet,
    doc: &'a Document,
    out: DocumentBuilder,
    nodes_emitted: usize,
    max_depth: usize,
}

impl Executor<'_> {
    fn run_body(
        &mut self,
        body: &[Instruction],
        context: NodeId,
        out_parent: NodeId,
        depth: usize,
    ) -> Result<(), TransformError> {
        for instr in body {
            match instr {
                Instruction::Apply { select } => {
                    for node in evaluate(select, context, self.doc) {
                        self.dispatch(node, out_parent, depth + 1)?;
                    }
                }
                Instruction::ValueOf { select } => {
                    if let Some(&first) = evaluate(select, context, self.doc).first() {
                        let value = self.doc.string_value(first);
                        self.emit_text(&value, out_parent)?;
                    }
                }
                Instruction::Text { literal } => {
                    self.emit_text(literal, out_parent)?;
                }
            }
        }
        Ok(())
    }

    /// Runs the best-matching template for `node`, or the built-in rules.
    fn dispatch(
        &mut self,
        node: NodeId,
        out_parent: NodeId,
        depth: usize,
    ) -> Result<(), TransformError> {
        if depth > self.max_depth {
            return Err(TransformError::RecursionDepth(self.max_depth));
        }
        match resolve_template(node, self.sheet, self.doc) {
            Some(t) => self.run_body(&t.body, node, out_parent, depth),
            None => {
                // built-in rules: elements recurse, text copies through
                if self.doc.is_element(node) {
                    for &child in self.doc.children(node) {
                        self.dispatch(child, out_parent, depth + 1)?;
                    }
                } else if let Some(text) = self.doc.text(node) {
                    let text = text.to_string();
                    self.emit_text(&text, out_parent)?;
                }
                Ok(())
            }
        }
    }

    /// Appends text content, one node per non-empty trimmed line, keeping
    /// the output's single-line text invariant.
    fn emit_text(&mut self, content: &str, out_parent: NodeId) -> Result<(), TransformError> {
        for line in content.split('\n') {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            self.nodes_emitted += 1;
            if self.nodes_emitted > OUTPUT_NODE_CAP {
                return Err(TransformError::OutputSize(OUTPUT_NODE_CAP));
            }
            self.out.add_text(out_parent, line);
        }
        Ok(())
    }
}

/// Finds the template matching `node`. When several templates match, the
/// last one in stylesheet order wins. The root pattern matches no dispatched
/// node: the root template runs exactly once, at transform start.
pub fn resolve_template<'a>(
    node: NodeId,
    sheet: &'a Stylesheet,
    doc: &Document,
) -> Option<&'a Template> {
    let mut winner = None;
    for t in &sheet.templates {
        let matches = match &t.pattern {
            MatchPattern::Root => false,
            MatchPattern::Name(n) => doc.name(node) == Some(n.as_str()),
            MatchPattern::Path(p) => {
                doc.is_element(node) && {
                    let chain = doc.ancestor_names(node);
                    chain.len() == p.steps.len()
                        && chain.iter().zip(&p.steps).all(|(c, s)| *c == s.name)
                }
            }
        };
        if matches {
            winner = Some(t);
        }
    }
    winner
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

fn escape_attr(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(ch),
        }
    }
    out
}

fn escape_literal(s: &str) -> String {
    escape_text(s).replace('\n', "&#10;")
}

/// Renders a stylesheet as an XSLT 1.0 document, one element per line,
/// 2-space indentation. A literal wrapper element named after the input
/// root encloses the root template's output, and an explicit newline
/// `xsl:text` follows every apply-templates and value-of so external
/// processors produce line-per-value output too. The fitness term L2 is
/// the line count of this rendering.
pub fn render_stylesheet(sheet: &Stylesheet) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\"?>\n");
    out.push_str(&format!(
        "<xsl:stylesheet version=\"1.0\" xmlns:xsl=\"{XSL_NS}\">\n"
    ));
    out.push_str("  <xsl:output indent=\"no\" method=\"xml\"/>\n");
    for (i, t) in sheet.templates.iter().enumerate() {
        out.push_str(&format!(
            "  <xsl:template match=\"{}\">\n",
            escape_attr(&t.pattern.render())
        ));
        let wrapper = if i == 0 { sheet.wrapper_name() } else { None };
        let indent = if let Some(name) = wrapper {
            out.push_str(&format!("    <{name}>\n"));
            "      "
        } else {
            "    "
        };
        for instr in &t.body {
            match instr {
                Instruction::Apply { select } => {
                    out.push_str(&format!(
                        "{indent}<xsl:apply-templates select=\"{}\"/>\n",
                        escape_attr(&render_path(select))
                    ));
                    out.push_str(&format!("{indent}<xsl:text>&#10;</xsl:text>\n"));
                }
                Instruction::ValueOf { select } => {
                    out.push_str(&format!(
                        "{indent}<xsl:value-of select=\"{}\"/>\n",
                        escape_attr(&render_path(select))
                    ));
                    out.push_str(&format!("{indent}<xsl:text>&#10;</xsl:text>\n"));
                }
                Instruction::Text { literal } => {
                    out.push_str(&format!(
                        "{indent}<xsl:text>{}</xsl:text>\n",
                        escape_literal(literal)
                    ));
                }
            }
        }
        if let Some(name) = wrapper {
            out.push_str(&format!("    </{name}>\n"));
        }
        out.push_str("  </xsl:template>\n");
    }
    out.push_str("</xsl:stylesheet>\n");
    out
}

/// Number of lines of the rendered stylesheet (the L2 fitness term).
pub fn rendered_line_count(sheet: &Stylesheet) -> usize {
    render_stylesheet(sheet).lines().count()
}

// ---------------------------------------------------------------------------
// Import
// ---------------------------------------------------------------------------

#[derive(Debug, Error)]
pub enum ImportError {
    #[error("stylesheet is not well-formed: {0}")]
    Xml(#[from] ParseError),
    #[error("root element is {0}, expected xsl:stylesheet")]
    NotAStylesheet(String),
    #[error("unsupported instruction {0}")]
    UnsupportedInstruction(String),
    #[error("{element} is missing its {attribute} attribute")]
    MissingAttribute {
        element: &'static str,
        attribute: &'static str,
    },
    #[error("bad route in {attribute}: {source}")]
    BadRoute {
        attribute: &'static str,
        source: PathError,
    },
    #[error("unsupported match pattern {0:?}")]
    BadMatchPattern(String),
    #[error("{0}")]
    BadStructure(String),
}

/// Re-imports a stylesheet restricted to the supported subset. Inverse of
/// `render_stylesheet` up to whitespace: the literal wrapper element in the
/// root template is unwrapped and whitespace-only `xsl:text` separators are
/// dropped, so render → parse round-trips exactly.
pub fn parse_stylesheet(text: &str) -> Result<Stylesheet, ImportError> {
    let doc = parse_document(text)?;
    let root = doc.root();
    let root_name = doc.name(root).unwrap_or_default();
    if root_name != "xsl:stylesheet" {
        return Err(ImportError::NotAStylesheet(root_name.to_string()));
    }
    let mut templates = Vec::new();
    for &child in doc.children(root) {
        let Some(name) = doc.name(child) else {
            return Err(ImportError::BadStructure(
                "text content directly under xsl:stylesheet".to_string(),
            ));
        };
        match name {
            "xsl:output" => continue,
            "xsl:template" => {
                let is_first = templates.is_empty();
                templates.push(parse_template(&doc, child, is_first)?);
            }
            other => return Err(ImportError::UnsupportedInstruction(other.to_string())),
        }
    }
    if templates.is_empty() {
        return Err(ImportError::BadStructure("stylesheet has no templates".to_string()));
    }
    if templates[0].pattern != MatchPattern::Root {
        return Err(ImportError::BadStructure(
            "first template must match \"/\"".to_string(),
        ));
    }
    Ok(Stylesheet { templates })
}

fn parse_template(doc: &Document, node: NodeId, is_root: bool) -> Result<Template, ImportError> {
    let pattern_text = doc.attr(node, "match").ok_or(ImportError::MissingAttribute {
        element: "xsl:template",
        attribute: "match",
    })?;
    let pattern = parse_match_pattern(pattern_text)?;
    let mut children = doc.children(node).to_vec();
    if is_root {
        // unwrap the literal wrapper element, if present
        if children.len() == 1 {
            let only = children[0];
            if let Some(name) = doc.name(only) {
                if !name.starts_with("xsl:") {
                    children = doc.children(only).to_vec();
                }
            }
        }
    }
    let mut body = Vec::new();
    for child in children {
        if let Some(text) = doc.text(child) {
            body.push(Instruction::Text {
                literal: text.to_string(),
            });
            continue;
        }
        let name = doc.name(child).unwrap();
        match name {
            "xsl:apply-templates" => body.push(Instruction::Apply {
                select: parse_select(doc, child, "xsl:apply-templates")?,
            }),
            "xsl:value-of" => body.push(Instruction::ValueOf {
                select: parse_select(doc, child, "xsl:value-of")?,
            }),
            "xsl:text" => {
                // the parser already dropped whitespace-only content, so an
                // empty xsl:text here was a line separator
                let literal: Vec<&str> = doc
                    .children(child)
                    .iter()
                    .filter_map(|&c| doc.text(c))
                    .collect();
                if !literal.is_empty() {
                    body.push(Instruction::Text {
                        literal: literal.join("\n"),
                    });
                }
            }
            other if other.starts_with("xsl:") => {
                return Err(ImportError::UnsupportedInstruction(other.to_string()))
            }
            other => {
                return Err(ImportError::BadStructure(format!(
                    "literal element <{other}> outside the root template wrapper"
                )))
            }
        }
    }
    Ok(Template { pattern, body })
}

fn parse_select(
    doc: &Document,
    node: NodeId,
    element: &'static str,
) -> Result<PathExpr, ImportError> {
    let text = doc.attr(node, "select").ok_or(ImportError::MissingAttribute {
        element,
        attribute: "select",
    })?;
    parse_path(text).map_err(|source| ImportError::BadRoute {
        attribute: "select",
        source,
    })
}

fn parse_match_pattern(text: &str) -> Result<MatchPattern, ImportError> {
    if text == "/" {
        return Ok(MatchPattern::Root);
    }
    let bad = || ImportError::BadMatchPattern(text.to_string());
    let path = parse_path(text).map_err(|_| bad())?;
    if path.is_self() || path.has_predicate() || path.has_descendant_step() {
        return Err(bad());
    }
    if path.absolute {
        Ok(MatchPattern::Path(path))
    } else if path.len() == 1 {
        Ok(MatchPattern::Name(path.steps[0].name.clone()))
    } else {
        Err(bad())
    }
}
