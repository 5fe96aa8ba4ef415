//! Genome representation: a stylesheet tagged with its structure type, the
//! input-document profile that keeps every route anchored to real tags,
//! random initialization, and the structural validator.
//!
//! The three structure types are fixed schemas the operators never leave:
//!
//! * Type 1: the root template holds a single `apply-templates` selecting
//!   `/<root>`; all other templates match bare tag names and their children
//!   hold routes relative to the tag (`value-of` exactly when the route is
//!   the self node, `apply-templates` otherwise).
//! * Type 2: the root template holds `apply-templates` instructions with
//!   absolute predicate-free routes; each is paired, in order, with one
//!   template whose match equals its route; template children are all
//!   `value-of` with relative routes; a template at a max-depth path holds
//!   `value-of` of the self node.
//! * Type 3: as Type 2, but template children are `apply-templates` except
//!   for self routes, which stay `value-of`.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{Instruction, MatchPattern, Stylesheet, Template};
use crate::xml::Document;
use crate::xpath::{Axis, PathExpr, Step};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StructureType {
    Type1,
    Type2,
    Type3,
}

impl StructureType {
    pub const ALL: [StructureType; 3] = [
        StructureType::Type1,
        StructureType::Type2,
        StructureType::Type3,
    ];

    /// Types 2 and 3 share the paired root-apply/template layout.
    pub fn is_paired(self) -> bool {
        !matches!(self, StructureType::Type1)
    }
}

impl fmt::Display for StructureType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StructureType::Type1 => f.write_str("type1"),
            StructureType::Type2 => f.write_str("type2"),
            StructureType::Type3 => f.write_str("type3"),
        }
    }
}

impl std::str::FromStr for StructureType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" | "type1" => Ok(StructureType::Type1),
            "2" | "type2" => Ok(StructureType::Type2),
            "3" | "type3" => Ok(StructureType::Type3),
            other => Err(format!("unknown structure type {other:?} (expected 1, 2 or 3)")),
        }
    }
}

/// The input document's tag-path hierarchy. Paths are absolute,
/// predicate-free, prefix-closed, and listed in document order of first
/// occurrence; index 0 is the root path.
#[derive(Debug, Clone)]
pub struct DocProfile {
    pub root_name: String,
    pub paths: Vec<PathExpr>,
    children: Vec<Vec<String>>,
    /// distinct tag name → index of its first (shallowest-first-seen) path
    tags: Vec<(String, usize)>,
}

pub fn build_profile(doc: &Document) -> DocProfile {
    let root_name = doc.name(doc.root()).expect("root is an element").to_string();
    let mut paths: Vec<Vec<String>> = Vec::new();
    let mut children: Vec<Vec<String>> = Vec::new();
    let mut stack = vec![(doc.root(), vec![root_name.clone()])];
    while let Some((node, chain)) = stack.pop() {
        let idx = match paths.iter().position(|p| *p == chain) {
            Some(i) => i,
            None => {
                paths.push(chain.clone());
                children.push(Vec::new());
                paths.len() - 1
            }
        };
        // reversed push keeps document order on the stack pops
        for &child in doc.children(node).iter().rev() {
            if let Some(name) = doc.name(child) {
                if !children[idx].iter().any(|c| c == name) {
                    children[idx].push(name.to_string());
                }
                let mut next = chain.clone();
                next.push(name.to_string());
                stack.push((child, next));
            }
        }
    }
    // the reversed stack pushes recorded child names in reverse; restore
    for kids in &mut children {
        kids.reverse();
    }
    let mut tags: Vec<(String, usize)> = Vec::new();
    for (i, p) in paths.iter().enumerate() {
        let tag = p.last().unwrap();
        if !tags.iter().any(|(t, _)| t == tag) {
            tags.push((tag.clone(), i));
        }
    }
    DocProfile {
        root_name,
        paths: paths.iter().map(|p| PathExpr::from_names(p)).collect(),
        children,
        tags,
    }
}

impl DocProfile {
    /// Index of an absolute child-axis path, compared by step names.
    pub fn find(&self, path: &PathExpr) -> Option<usize> {
        if !path.absolute || path.has_descendant_step() {
            return None;
        }
        self.paths.iter().position(|p| {
            p.len() == path.len()
                && p.steps
                    .iter()
                    .zip(&path.steps)
                    .all(|(a, b)| a.name == b.name)
        })
    }

    pub fn contains(&self, path: &PathExpr) -> bool {
        self.find(path).is_some()
    }

    pub fn children_of(&self, idx: usize) -> &[String] {
        &self.children[idx]
    }

    pub fn is_max_depth_idx(&self, idx: usize) -> bool {
        self.children[idx].is_empty()
    }

    pub fn is_max_depth(&self, path: &PathExpr) -> bool {
        self.find(path).map(|i| self.is_max_depth_idx(i)).unwrap_or(false)
    }

    /// Canonical absolute path for a bare tag name: the first profile path
    /// ending at that tag. This is the base Type-1 relative routes resolve
    /// against.
    pub fn tag_base(&self, tag: &str) -> Option<&PathExpr> {
        self.tags
            .iter()
            .find(|(t, _)| t == tag)
            .map(|&(_, i)| &self.paths[i])
    }

    pub fn tag_names(&self) -> impl Iterator<Item = &str> {
        self.tags.iter().map(|(t, _)| t.as_str())
    }

    /// Draws a tag name with weight 2^(-depth): shallower tags are
    /// proportionally more likely.
    pub fn random_tag_weighted(&self, rng: &mut impl Rng) -> &str {
        let weights: Vec<f64> = self
            .tags
            .iter()
            .map(|&(_, i)| 2f64.powi(-(self.paths[i].len() as i32)))
            .collect();
        let total: f64 = weights.iter().sum();
        let mut u = rng.gen::<f64>() * total;
        for (k, w) in weights.iter().enumerate() {
            if u < *w {
                return &self.tags[k].0;
            }
            u -= w;
        }
        &self.tags.last().unwrap().0
    }

    pub fn random_path(&self, rng: &mut impl Rng) -> &PathExpr {
        &self.paths[rng.gen_range(0..self.paths.len())]
    }

    /// All profile paths a route can land on when resolved from the path at
    /// `base_idx`. Predicates are ignored (they filter instances, not
    /// tags); descendant steps may skip any number of levels. An empty
    /// result means the route leaves the input hierarchy.
    pub fn route_endpoints(&self, base_idx: usize, route: &PathExpr) -> Vec<usize> {
        if route.is_self() {
            return vec![base_idx];
        }
        debug_assert!(!route.absolute);
        let mut current = vec![base_idx];
        for step in &route.steps {
            let mut next = Vec::new();
            for &p in &current {
                match step.axis {
                    Axis::Child => {
                        if self.children[p].iter().any(|c| *c == step.name) {
                            let mut names: Vec<&str> =
                                self.paths[p].steps.iter().map(|s| s.name.as_str()).collect();
                            names.push(&step.name);
                            if let Some(q) = self.find_names(&names) {
                                next.push(q);
                            }
                        }
                    }
                    Axis::Descendant => {
                        for (q, qp) in self.paths.iter().enumerate() {
                            if self.extends(q, p) && qp.steps.last().unwrap().name == step.name {
                                next.push(q);
                            }
                        }
                    }
                }
            }
            next.sort_unstable();
            next.dedup();
            current = next;
            if current.is_empty() {
                break;
            }
        }
        current
    }

    pub fn route_valid_from(&self, base_idx: usize, route: &PathExpr) -> bool {
        !self.route_endpoints(base_idx, route).is_empty()
    }

    /// Indices of the path at `base_idx` and every path extending it.
    pub fn subtree_of(&self, base_idx: usize) -> Vec<usize> {
        (0..self.paths.len())
            .filter(|&q| q == base_idx || self.extends(q, base_idx))
            .collect()
    }

    fn find_names(&self, names: &[&str]) -> Option<usize> {
        self.paths.iter().position(|p| {
            p.len() == names.len()
                && p.steps.iter().zip(names).all(|(s, n)| s.name == *n)
        })
    }

    /// Whether path `q` strictly extends path `p`.
    fn extends(&self, q: usize, p: usize) -> bool {
        let (qp, pp) = (&self.paths[q], &self.paths[p]);
        qp.len() > pp.len()
            && pp
                .steps
                .iter()
                .zip(&qp.steps)
                .all(|(a, b)| a.name == b.name)
    }
}

/// Parameters for random genome construction and fresh-route generation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitParams {
    /// Upper bound on the initial non-root template count.
    pub init_templates: usize,
    /// Upper bound on the initial per-template child count.
    pub init_children: usize,
    /// Probability that a fresh route is the self node (when allowed).
    pub p_self: f64,
    /// Maximum number of steps in a fresh relative route.
    pub max_route_len: usize,
    /// Per-step probability of a cardinal filter on a fresh route.
    pub p_filter: f64,
    /// Cardinal filters are drawn from [1, max_filter].
    pub max_filter: u32,
}

impl Default for InitParams {
    fn default() -> Self {
        InitParams {
            init_templates: 4,
            init_children: 3,
            p_self: 0.2,
            max_route_len: 3,
            p_filter: 0.1,
            max_filter: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Genome {
    pub sheet: Stylesheet,
    pub stype: StructureType,
}

impl Genome {
    /// The absolute base path the given template's relative routes resolve
    /// against. None for the root template.
    pub fn template_base(&self, idx: usize, profile: &DocProfile) -> Option<PathExpr> {
        match &self.sheet.templates.get(idx)?.pattern {
            MatchPattern::Root => None,
            MatchPattern::Name(tag) => profile.tag_base(tag).cloned(),
            MatchPattern::Path(p) => Some(p.clone()),
        }
    }
}

/// A relative route downward from `base`, built by walking the profile's
/// child map. Max-depth bases always give the self route; otherwise the
/// self route appears with probability `p_self`, and each step may carry a
/// cardinal filter.
pub fn random_relative_route(
    profile: &DocProfile,
    base: &PathExpr,
    params: &InitParams,
    rng: &mut impl Rng,
) -> PathExpr {
    let base_idx = profile.find(base).expect("base route is in the profile");
    if profile.is_max_depth_idx(base_idx) || rng.gen_bool(params.p_self) {
        return PathExpr::self_node();
    }
    let want = rng.gen_range(1..=params.max_route_len.max(1));
    let mut steps = Vec::new();
    let mut cur = base_idx;
    for _ in 0..want {
        let kids = profile.children_of(cur);
        if kids.is_empty() {
            break;
        }
        let name = kids.choose(rng).unwrap().clone();
        let mut step = Step::child(name.as_str());
        if rng.gen_bool(params.p_filter) {
            step.predicate = Some(rng.gen_range(1..=params.max_filter));
        }
        let mut names: Vec<&str> = profile.paths[cur]
            .steps
            .iter()
            .map(|s| s.name.as_str())
            .collect();
        names.push(&name);
        cur = profile.find_names(&names).expect("child paths are in the profile");
        steps.push(step);
    }
    PathExpr::relative(steps)
}

/// The fixed Type-1 root template: a single apply-templates of /<root>.
pub fn type1_root_template(profile: &DocProfile) -> Template {
    Template {
        pattern: MatchPattern::Root,
        body: vec![Instruction::Apply {
            select: PathExpr::from_names(&[profile.root_name.as_str()]),
        }],
    }
}

/// Child instruction kind forced by the structure type: Type 1 and Type 3
/// use apply-templates except for self routes; Type 2 always uses value-of.
pub fn forced_child(stype: StructureType, route: PathExpr) -> Instruction {
    let self_route = route.is_self();
    match stype {
        StructureType::Type2 => Instruction::ValueOf { select: route },
        StructureType::Type1 | StructureType::Type3 => {
            if self_route {
                Instruction::ValueOf { select: route }
            } else {
                Instruction::Apply { select: route }
            }
        }
    }
}

/// Fresh template body for a template based at `base`: max-depth bases get
/// the single `value-of` of self, everything else 1..=init_children fresh
/// routes with type-forced kinds.
pub fn random_body(
    stype: StructureType,
    profile: &DocProfile,
    base: &PathExpr,
    params: &InitParams,
    rng: &mut impl Rng,
) -> Vec<Instruction> {
    if stype.is_paired() && profile.is_max_depth(base) {
        return vec![Instruction::ValueOf {
            select: PathExpr::self_node(),
        }];
    }
    let count = rng.gen_range(1..=params.init_children.max(1));
    (0..count)
        .map(|_| forced_child(stype, random_relative_route(profile, base, params, rng)))
        .collect()
}

pub fn random_genome(
    stype: StructureType,
    profile: &DocProfile,
    params: &InitParams,
    rng: &mut impl Rng,
) -> Genome {
    let mut templates = Vec::new();
    match stype {
        StructureType::Type1 => {
            templates.push(type1_root_template(profile));
            let count = rng.gen_range(1..=params.init_templates.max(1));
            for _ in 0..count {
                let tag = profile.random_tag_weighted(rng).to_string();
                let base = profile.tag_base(&tag).unwrap().clone();
                templates.push(Template {
                    pattern: MatchPattern::Name(tag),
                    body: random_body(stype, profile, &base, params, rng),
                });
            }
        }
        StructureType::Type2 | StructureType::Type3 => {
            let count = rng.gen_range(1..=params.init_templates.max(1));
            let routes: Vec<PathExpr> =
                (0..count).map(|_| profile.random_path(rng).clone()).collect();
            templates.push(Template {
                pattern: MatchPattern::Root,
                body: routes
                    .iter()
                    .map(|r| Instruction::Apply { select: r.clone() })
                    .collect(),
            });
            for route in routes {
                let body = random_body(stype, profile, &route, params, rng);
                templates.push(Template {
                    pattern: MatchPattern::Path(route),
                    body,
                });
            }
        }
    }
    Genome {
        sheet: Stylesheet { templates },
        stype,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub template: usize,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "template {}: {}", self.template, self.rule)
    }
}

/// Checks every structural invariant of the genome's type. An empty result
/// means the genome is valid. The variation operators are closed over this
/// predicate: valid in, valid out.
pub fn validate(genome: &Genome, profile: &DocProfile) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut bad = |template: usize, rule: &str| {
        out.push(Violation {
            template,
            rule: rule.to_string(),
        });
    };
    let templates = &genome.sheet.templates;
    let Some(root) = templates.first() else {
        return vec![Violation {
            template: 0,
            rule: "stylesheet has no templates".to_string(),
        }];
    };
    if root.pattern != MatchPattern::Root {
        bad(0, "first template must match \"/\"");
    }
    match genome.stype {
        StructureType::Type1 => {
            let expected = type1_root_template(profile);
            if *root != expected {
                bad(0, "root template body must be a single apply-templates of the root path");
            }
            for (i, t) in templates.iter().enumerate().skip(1) {
                let MatchPattern::Name(tag) = &t.pattern else {
                    bad(i, "match must be a bare input tag name");
                    continue;
                };
                let Some(base) = profile.tag_base(tag) else {
                    bad(i, "match tag does not occur in the input document");
                    continue;
                };
                let base_idx = profile.find(base).unwrap();
                if t.body.is_empty() {
                    bad(i, "template body is empty");
                }
                for instr in &t.body {
                    check_relative_child(genome.stype, profile, base_idx, instr, i, &mut bad);
                }
            }
        }
        StructureType::Type2 | StructureType::Type3 => {
            let mut routes = Vec::new();
            for instr in &root.body {
                match instr {
                    Instruction::Apply { select } => {
                        if !select.absolute {
                            bad(0, "root routes must be absolute");
                        } else if select.has_predicate() {
                            bad(0, "root routes must be predicate-free");
                        } else if !profile.contains(select) {
                            bad(0, "root route is not an input hierarchy path");
                        }
                        routes.push(select.clone());
                    }
                    _ => bad(0, "root children must all be apply-templates"),
                }
            }
            if routes.len() != templates.len() - 1 {
                bad(0, "pairing count: one template per root apply-templates");
            }
            for (i, t) in templates.iter().enumerate().skip(1) {
                let MatchPattern::Path(path) = &t.pattern else {
                    bad(i, "match must be an absolute input route");
                    continue;
                };
                let Some(base_idx) = profile.find(path) else {
                    bad(i, "match is not an input hierarchy path");
                    continue;
                };
                if let Some(route) = routes.get(i - 1) {
                    if profile.find(route) != Some(base_idx) {
                        bad(i, "pairing order: match must equal its root apply-templates route");
                    }
                }
                if t.body.is_empty() {
                    bad(i, "template body is empty");
                }
                if profile.is_max_depth_idx(base_idx) {
                    let all_self_value = t.body.iter().all(|instr| {
                        matches!(instr, Instruction::ValueOf { select } if select.is_self())
                    });
                    if !all_self_value {
                        bad(i, "max-depth template children must be value-of of self");
                    }
                } else {
                    for instr in &t.body {
                        check_relative_child(genome.stype, profile, base_idx, instr, i, &mut bad);
                    }
                }
            }
        }
    }
    out
}

fn check_relative_child(
    stype: StructureType,
    profile: &DocProfile,
    base_idx: usize,
    instr: &Instruction,
    template: usize,
    bad: &mut impl FnMut(usize, &str),
) {
    let Some(select) = instr.select() else {
        bad(template, "text instructions do not occur in genome bodies");
        return;
    };
    if select.absolute {
        bad(template, "child routes must be relative");
        return;
    }
    let is_self = select.is_self();
    match (stype, instr, is_self) {
        (StructureType::Type2, Instruction::ValueOf { .. }, _) => {}
        (StructureType::Type2, _, _) => bad(template, "children must be value-of"),
        (_, Instruction::ValueOf { .. }, true) | (_, Instruction::Apply { .. }, false) => {}
        (_, _, true) => bad(template, "self route must be value-of"),
        (_, _, false) => bad(template, "non-self route must be apply-templates"),
    }
    if !profile.route_valid_from(base_idx, select) {
        bad(template, "route leaves the input hierarchy");
    }
}
