//! Genetic operators and the priority roulette that selects them.
//!
//! Operators come in two groups. The XPath group rewrites a single route in
//! place (shorten, extend, elide to a descendant step, or touch a cardinal
//! filter) and is shared by all structure types. The structure group edits
//! the template tree (crossover, template and child insertion/removal,
//! child mutation) and is parameterized by structure type so every
//! offspring stays inside its type's schema.
//!
//! For Types 2 and 3, mutating a root apply-templates route drags the
//! paired template along: its match is rewritten to the new route and body
//! children that no longer resolve below the new base are regenerated.
//! Operators that cannot apply to the drawn target return the parent
//! unchanged and report `applied = false`.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{Instruction, MatchPattern, Template};
use crate::genome::{
    forced_child, random_body, random_relative_route, DocProfile, Genome, InitParams,
    StructureType,
};
use crate::xpath::{Axis, PathExpr};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorId {
    SetSelf,
    SetDescendant,
    RemoveBranch,
    AddBranch,
    AddFilter,
    MutateFilter,
    RemoveFilter,
    Crossover,
    AddTemplate,
    MutateTemplate,
    RemoveTemplate,
    AddApply,
    MutateApply1,
    MutateApply2,
    RemoveApply,
    SetTemplateNull,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorGroup {
    XPath,
    Structure,
}

impl OperatorId {
    pub fn group(self) -> OperatorGroup {
        match self {
            OperatorId::SetSelf
            | OperatorId::SetDescendant
            | OperatorId::RemoveBranch
            | OperatorId::AddBranch
            | OperatorId::AddFilter
            | OperatorId::MutateFilter
            | OperatorId::RemoveFilter => OperatorGroup::XPath,
            _ => OperatorGroup::Structure,
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            OperatorId::SetSelf => "set_self",
            OperatorId::SetDescendant => "set_descendant",
            OperatorId::RemoveBranch => "remove_branch",
            OperatorId::AddBranch => "add_branch",
            OperatorId::AddFilter => "add_filter",
            OperatorId::MutateFilter => "mutate_filter",
            OperatorId::RemoveFilter => "remove_filter",
            OperatorId::Crossover => "crossover",
            OperatorId::AddTemplate => "add_template",
            OperatorId::MutateTemplate => "mutate_template",
            OperatorId::RemoveTemplate => "remove_template",
            OperatorId::AddApply => "add_apply",
            OperatorId::MutateApply1 => "mutate_apply1",
            OperatorId::MutateApply2 => "mutate_apply2",
            OperatorId::RemoveApply => "remove_apply",
            OperatorId::SetTemplateNull => "set_template_null",
        }
    }

    pub const ALL: [OperatorId; 16] = [
        OperatorId::SetSelf,
        OperatorId::SetDescendant,
        OperatorId::RemoveBranch,
        OperatorId::AddBranch,
        OperatorId::AddFilter,
        OperatorId::MutateFilter,
        OperatorId::RemoveFilter,
        OperatorId::Crossover,
        OperatorId::AddTemplate,
        OperatorId::MutateTemplate,
        OperatorId::RemoveTemplate,
        OperatorId::AddApply,
        OperatorId::MutateApply1,
        OperatorId::MutateApply2,
        OperatorId::RemoveApply,
        OperatorId::SetTemplateNull,
    ];

    pub fn from_key(key: &str) -> Option<OperatorId> {
        OperatorId::ALL.iter().copied().find(|op| op.key() == key)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RouletteMode {
    /// Priorities are ascending cumulative thresholds; a draw u in
    /// [0, last) selects the first entry whose threshold is at least u.
    Cumulative,
    /// Priorities are plain weights.
    Normalized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupTable {
    pub mode: RouletteMode,
    pub entries: Vec<(OperatorId, f64)>,
}

impl GroupTable {
    pub fn validate(&self, name: &str) -> Result<(), String> {
        if self.entries.is_empty() {
            return Err(format!("{name}: no operator entries"));
        }
        match self.mode {
            RouletteMode::Cumulative => {
                let mut prev = 0.0;
                for &(op, p) in &self.entries {
                    if p <= prev {
                        return Err(format!(
                            "{name}: cumulative priorities must be strictly increasing, {} at {p} follows {prev}",
                            op.key()
                        ));
                    }
                    prev = p;
                }
                if prev > 1.0 {
                    return Err(format!("{name}: last cumulative priority {prev} exceeds 1"));
                }
            }
            RouletteMode::Normalized => {
                for &(op, p) in &self.entries {
                    if p <= 0.0 {
                        return Err(format!("{name}: weight for {} must be positive", op.key()));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn draw(&self, rng: &mut impl Rng) -> OperatorId {
        match self.mode {
            RouletteMode::Cumulative => {
                let last = self.entries.last().unwrap().1;
                let u = rng.gen::<f64>() * last;
                self.entries
                    .iter()
                    .find(|&&(_, p)| p >= u)
                    .unwrap_or(self.entries.last().unwrap())
                    .0
            }
            RouletteMode::Normalized => {
                let total: f64 = self.entries.iter().map(|&(_, p)| p).sum();
                let mut u = rng.gen::<f64>() * total;
                for &(op, p) in &self.entries {
                    if u < p {
                        return op;
                    }
                    u -= p;
                }
                self.entries.last().unwrap().0
            }
        }
    }

    /// Selection probability of each entry under this mode.
    pub fn probabilities(&self) -> Vec<(OperatorId, f64)> {
        match self.mode {
            RouletteMode::Cumulative => {
                let last = self.entries.last().unwrap().1;
                let mut prev = 0.0;
                self.entries
                    .iter()
                    .map(|&(op, p)| {
                        let q = (p - prev) / last;
                        prev = p;
                        (op, q)
                    })
                    .collect()
            }
            RouletteMode::Normalized => {
                let total: f64 = self.entries.iter().map(|&(_, p)| p).sum();
                self.entries.iter().map(|&(op, p)| (op, p / total)).collect()
            }
        }
    }
}

/// Per-type operator priorities; defaults mirror the published table. The
/// XPath group uses cumulative thresholds (its printed values are monotone
/// once AddBranch sits last), the structure group plain weights.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorTable {
    xpath: [GroupTable; 3],
    structure: [GroupTable; 3],
    pub p_xpath_group: f64,
}

fn type_index(stype: StructureType) -> usize {
    match stype {
        StructureType::Type1 => 0,
        StructureType::Type2 => 1,
        StructureType::Type3 => 2,
    }
}

impl Default for OperatorTable {
    fn default() -> Self {
        let xpath1 = GroupTable {
            mode: RouletteMode::Cumulative,
            entries: vec![
                (OperatorId::SetSelf, 0.10),
                (OperatorId::SetDescendant, 0.24),
                (OperatorId::RemoveBranch, 0.39),
                (OperatorId::AddFilter, 0.53),
                (OperatorId::MutateFilter, 0.69),
                (OperatorId::RemoveFilter, 0.83),
                (OperatorId::AddBranch, 0.99),
            ],
        };
        let xpath23 = GroupTable {
            mode: RouletteMode::Cumulative,
            entries: vec![
                (OperatorId::SetSelf, 0.10),
                (OperatorId::RemoveBranch, 0.27),
                (OperatorId::AddFilter, 0.45),
                (OperatorId::MutateFilter, 0.64),
                (OperatorId::RemoveFilter, 0.83),
                (OperatorId::AddBranch, 0.99),
            ],
        };
        let structure = |crossover: f64| GroupTable {
            mode: RouletteMode::Normalized,
            entries: vec![
                (OperatorId::Crossover, crossover),
                (OperatorId::AddTemplate, 0.13),
                (OperatorId::MutateTemplate, 0.11),
                (OperatorId::RemoveTemplate, 0.13),
                (OperatorId::AddApply, 0.11),
                (OperatorId::MutateApply1, 0.11),
                (OperatorId::MutateApply2, 0.11),
                (OperatorId::RemoveApply, 0.15),
                (OperatorId::SetTemplateNull, 0.04),
            ],
        };
        OperatorTable {
            xpath: [xpath1, xpath23.clone(), xpath23],
            structure: [structure(0.61), structure(0.11), structure(0.11)],
            p_xpath_group: 0.5,
        }
    }
}

impl OperatorTable {
    pub fn xpath_group(&self, stype: StructureType) -> &GroupTable {
        &self.xpath[type_index(stype)]
    }

    pub fn structure_group(&self, stype: StructureType) -> &GroupTable {
        &self.structure[type_index(stype)]
    }

    pub fn set_mode(&mut self, group: OperatorGroup, mode: RouletteMode) {
        let tables = match group {
            OperatorGroup::XPath => &mut self.xpath,
            OperatorGroup::Structure => &mut self.structure,
        };
        for t in tables {
            t.mode = mode;
        }
    }

    /// Overrides one operator's priority for one structure type.
    pub fn set_priority(
        &mut self,
        stype: StructureType,
        op: OperatorId,
        value: f64,
    ) -> Result<(), String> {
        let i = type_index(stype);
        let table = match op.group() {
            OperatorGroup::XPath => &mut self.xpath[i],
            OperatorGroup::Structure => &mut self.structure[i],
        };
        match table.entries.iter_mut().find(|(o, _)| *o == op) {
            Some(entry) => {
                entry.1 = value;
                Ok(())
            }
            None => Err(format!("operator {} is not available for {stype}", op.key())),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.p_xpath_group) {
            return Err(format!(
                "p_xpath_group {} outside [0, 1]",
                self.p_xpath_group
            ));
        }
        for stype in StructureType::ALL {
            let i = type_index(stype);
            self.xpath[i].validate(&format!("{stype} xpath group"))?;
            self.structure[i].validate(&format!("{stype} structure group"))?;
        }
        Ok(())
    }
}

pub fn select_operator(
    table: &OperatorTable,
    stype: StructureType,
    group: OperatorGroup,
    rng: &mut impl Rng,
) -> OperatorId {
    match group {
        OperatorGroup::XPath => table.xpath_group(stype).draw(rng),
        OperatorGroup::Structure => table.structure_group(stype).draw(rng),
    }
}

// ---------------------------------------------------------------------------
// Route-level operators
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterMode {
    Add,
    Change,
    Remove,
}

/// Adds, changes, or removes one cardinal filter on a uniformly chosen
/// eligible step. None when no step is eligible.
pub fn mutate_route_filter(
    route: &PathExpr,
    mode: FilterMode,
    params: &InitParams,
    rng: &mut impl Rng,
) -> Option<PathExpr> {
    let eligible: Vec<usize> = route
        .steps
        .iter()
        .enumerate()
        .filter(|(_, s)| match mode {
            FilterMode::Add => s.predicate.is_none(),
            FilterMode::Change | FilterMode::Remove => s.predicate.is_some(),
        })
        .map(|(i, _)| i)
        .collect();
    let &i = eligible.choose(rng)?;
    let mut out = route.clone();
    out.steps[i].predicate = match mode {
        FilterMode::Add | FilterMode::Change => Some(rng.gen_range(1..=params.max_filter)),
        FilterMode::Remove => None,
    };
    Some(out)
}

/// Drops the last step: the deepest tag becomes the context itself. A
/// one-step relative route collapses to self; absolute routes keep at
/// least one step. SetSelf and RemoveBranch coincide in this route model.
pub fn shorten_route(route: &PathExpr) -> Option<PathExpr> {
    if route.is_self() || (route.absolute && route.len() < 2) {
        return None;
    }
    let mut out = route.clone();
    out.steps.pop();
    Some(out)
}

/// Appends one child tag drawn from the profile at the route's endpoint.
/// `base_idx` anchors relative routes; absolute routes resolve themselves.
/// None when the endpoint has no children (or the route dangles).
pub fn grow_route(
    route: &PathExpr,
    profile: &DocProfile,
    base_idx: Option<usize>,
    rng: &mut impl Rng,
) -> Option<PathExpr> {
    let endpoints: Vec<usize> = if route.absolute {
        profile.find(route).into_iter().collect()
    } else {
        profile.route_endpoints(base_idx?, route)
    };
    let &endpoint = endpoints.choose(rng)?;
    let kids = profile.children_of(endpoint);
    if kids.is_empty() {
        return None;
    }
    let kid = kids.choose(rng).unwrap();
    let mut out = route.clone();
    out.steps.push(crate::xpath::Step::child(kid.as_str()));
    Some(out)
}

/// Elides one intermediate step, marking its successor descendant-axis:
/// a/b/c becomes a//c. Needs three steps (an interior one to remove) and
/// no existing descendant step.
pub fn set_descendant(route: &PathExpr, rng: &mut impl Rng) -> Option<PathExpr> {
    if route.len() < 3 || route.has_descendant_step() {
        return None;
    }
    let i = rng.gen_range(1..route.len() - 1);
    let mut out = route.clone();
    out.steps.remove(i);
    out.steps[i].axis = Axis::Descendant;
    Some(out)
}

// ---------------------------------------------------------------------------
// Whole-genome application
// ---------------------------------------------------------------------------

/// A mutable route position inside a genome: a root-template
/// apply-templates entry (Types 2/3) or a child instruction of a non-root
/// template.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RouteSlot {
    RootApply(usize),
    Child { template: usize, child: usize },
}

fn route_slots(genome: &Genome) -> Vec<RouteSlot> {
    let mut slots = Vec::new();
    if genome.stype.is_paired() {
        for c in 0..genome.sheet.templates[0].body.len() {
            slots.push(RouteSlot::RootApply(c));
        }
    }
    for (i, t) in genome.sheet.templates.iter().enumerate().skip(1) {
        for c in 0..t.body.len() {
            if t.body[c].select().is_some() {
                slots.push(RouteSlot::Child { template: i, child: c });
            }
        }
    }
    slots
}

fn apply_route_op(
    op: OperatorId,
    route: &PathExpr,
    profile: &DocProfile,
    base_idx: Option<usize>,
    params: &InitParams,
    rng: &mut impl Rng,
) -> Option<PathExpr> {
    match op {
        OperatorId::SetSelf | OperatorId::RemoveBranch => shorten_route(route),
        OperatorId::AddBranch => grow_route(route, profile, base_idx, rng),
        OperatorId::SetDescendant => set_descendant(route, rng),
        OperatorId::AddFilter => mutate_route_filter(route, FilterMode::Add, params, rng),
        OperatorId::MutateFilter => mutate_route_filter(route, FilterMode::Change, params, rng),
        OperatorId::RemoveFilter => mutate_route_filter(route, FilterMode::Remove, params, rng),
        _ => None,
    }
}

/// Rewrites root apply `pair` to `route` and drags the paired template
/// along: new match, and body children that no longer resolve below the
/// new base are regenerated (a max-depth base forces the single self
/// value-of).
fn rebase_pair(
    genome: &mut Genome,
    pair: usize,
    route: PathExpr,
    profile: &DocProfile,
    params: &InitParams,
    rng: &mut impl Rng,
) {
    let base_idx = profile.find(&route).expect("rebased route stays in the profile");
    genome.sheet.templates[0].body[pair] = Instruction::Apply {
        select: route.clone(),
    };
    let stype = genome.stype;
    let t = &mut genome.sheet.templates[pair + 1];
    t.pattern = MatchPattern::Path(route.clone());
    if profile.is_max_depth_idx(base_idx) {
        t.body = vec![Instruction::ValueOf {
            select: PathExpr::self_node(),
        }];
        return;
    }
    for instr in &mut t.body {
        let keep = instr
            .select()
            .map(|s| !s.absolute && profile.route_valid_from(base_idx, s))
            .unwrap_or(false);
        if !keep {
            *instr = forced_child(stype, random_relative_route(profile, &route, params, rng));
        }
    }
}

fn apply_xpath_operator(
    op: OperatorId,
    parent: &Genome,
    profile: &DocProfile,
    params: &InitParams,
    rng: &mut impl Rng,
) -> Option<Genome> {
    let slots = route_slots(parent);
    let &slot = slots.choose(rng)?;
    match slot {
        RouteSlot::RootApply(pair) => {
            // root routes stay predicate-free and inside the profile, so
            // filter and descendant rewrites cannot target them
            if !matches!(
                op,
                OperatorId::SetSelf | OperatorId::RemoveBranch | OperatorId::AddBranch
            ) {
                return None;
            }
            let route = parent.sheet.templates[0].body[pair].select().unwrap();
            let new_route = apply_route_op(op, route, profile, None, params, rng)?;
            let mut out = parent.clone();
            rebase_pair(&mut out, pair, new_route, profile, params, rng);
            Some(out)
        }
        RouteSlot::Child { template, child } => {
            let base = parent.template_base(template, profile)?;
            let base_idx = profile.find(&base)?;
            let route = parent.sheet.templates[template].body[child].select().unwrap();
            let new_route = apply_route_op(op, route, profile, Some(base_idx), params, rng)?;
            let mut out = parent.clone();
            out.sheet.templates[template].body[child] = forced_child(out.stype, new_route);
            Some(out)
        }
    }
}

/// Swaps one uniformly chosen non-root template between the parents; for
/// Types 2/3 the paired root apply travels with its template, preserving
/// pairing order on both sides.
pub fn crossover_templates(
    g1: &Genome,
    g2: &Genome,
    rng: &mut impl Rng,
) -> Option<(Genome, Genome)> {
    if g1.stype != g2.stype {
        return None;
    }
    if g1.sheet.templates.len() < 2 || g2.sheet.templates.len() < 2 {
        return None;
    }
    let i = rng.gen_range(1..g1.sheet.templates.len());
    let j = rng.gen_range(1..g2.sheet.templates.len());
    let mut a = g1.clone();
    let mut b = g2.clone();
    std::mem::swap(&mut a.sheet.templates[i], &mut b.sheet.templates[j]);
    if g1.stype.is_paired() {
        let (ra, rb) = (
            a.sheet.templates[i].pattern.clone(),
            b.sheet.templates[j].pattern.clone(),
        );
        let route_of = |p: &MatchPattern| match p {
            MatchPattern::Path(p) => p.clone(),
            _ => unreachable!("paired templates match absolute paths"),
        };
        a.sheet.templates[0].body[i - 1] = Instruction::Apply { select: route_of(&ra) };
        b.sheet.templates[0].body[j - 1] = Instruction::Apply { select: route_of(&rb) };
    }
    Some((a, b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemplateMode {
    Add,
    Mutate,
    Remove,
}

/// Inserts, regenerates, or removes one template. Insertion draws a
/// depth-weighted tag (Type 1) or a uniform profile path (Types 2/3, with
/// the paired root apply). Removal keeps at least one non-root template.
pub fn template_op(
    parent: &Genome,
    mode: TemplateMode,
    profile: &DocProfile,
    params: &InitParams,
    rng: &mut impl Rng,
) -> Option<Genome> {
    let mut out = parent.clone();
    let n = out.sheet.templates.len();
    match mode {
        TemplateMode::Add => {
            if out.stype.is_paired() {
                let route = profile.random_path(rng).clone();
                let pos = rng.gen_range(0..=out.sheet.templates[0].body.len());
                let body = random_body(out.stype, profile, &route, params, rng);
                out.sheet.templates[0].body.insert(
                    pos,
                    Instruction::Apply {
                        select: route.clone(),
                    },
                );
                out.sheet.templates.insert(
                    pos + 1,
                    Template {
                        pattern: MatchPattern::Path(route),
                        body,
                    },
                );
            } else {
                let tag = profile.random_tag_weighted(rng).to_string();
                let base = profile.tag_base(&tag).unwrap().clone();
                let body = random_body(out.stype, profile, &base, params, rng);
                let pos = rng.gen_range(1..=n);
                out.sheet.templates.insert(
                    pos,
                    Template {
                        pattern: MatchPattern::Name(tag),
                        body,
                    },
                );
            }
        }
        TemplateMode::Mutate => {
            if n < 2 {
                return None;
            }
            let i = rng.gen_range(1..n);
            let base = out.template_base(i, profile)?;
            out.sheet.templates[i].body = random_body(out.stype, profile, &base, params, rng);
        }
        TemplateMode::Remove => {
            if n < 3 {
                return None;
            }
            let i = rng.gen_range(1..n);
            out.sheet.templates.remove(i);
            if out.stype.is_paired() {
                out.sheet.templates[0].body.remove(i - 1);
            }
        }
    }
    Some(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChildMode {
    Add,
    Remove,
}

/// Adds or removes one child of a uniformly chosen non-root template.
/// Removing the last child removes the template too (with its pairing
/// entry), unless it is the only non-root template left.
pub fn apply_child_op(
    parent: &Genome,
    mode: ChildMode,
    profile: &DocProfile,
    params: &InitParams,
    rng: &mut impl Rng,
) -> Option<Genome> {
    let n = parent.sheet.templates.len();
    if n < 2 {
        return None;
    }
    let i = rng.gen_range(1..n);
    let mut out = parent.clone();
    match mode {
        ChildMode::Add => {
            let base = out.template_base(i, profile)?;
            let child = forced_child(
                out.stype,
                random_relative_route(profile, &base, params, rng),
            );
            let body = &mut out.sheet.templates[i].body;
            let pos = rng.gen_range(0..=body.len());
            body.insert(pos, child);
        }
        ChildMode::Remove => {
            let body_len = out.sheet.templates[i].body.len();
            if body_len == 0 {
                return None;
            }
            if body_len == 1 {
                if n < 3 {
                    // emptying the single remaining template is not allowed
                    return None;
                }
                out.sheet.templates.remove(i);
                if out.stype.is_paired() {
                    out.sheet.templates[0].body.remove(i - 1);
                }
            } else {
                let c = rng.gen_range(0..body_len);
                out.sheet.templates[i].body.remove(c);
            }
        }
    }
    Some(out)
}

/// Variant 1 gives the child a fresh random route. Variant 2 re-anchors
/// it: a new endpoint is drawn inside the template's subtree and the child
/// becomes the relative route from the template base to that endpoint.
pub fn mutate_apply(
    parent: &Genome,
    variant: u8,
    profile: &DocProfile,
    params: &InitParams,
    rng: &mut impl Rng,
) -> Option<Genome> {
    let n = parent.sheet.templates.len();
    if n < 2 {
        return None;
    }
    let i = rng.gen_range(1..n);
    let body_len = parent.sheet.templates[i].body.len();
    if body_len == 0 {
        return None;
    }
    let c = rng.gen_range(0..body_len);
    let mut out = parent.clone();
    let base = out.template_base(i, profile)?;
    let base_idx = profile.find(&base)?;
    let route = match variant {
        1 => random_relative_route(profile, &base, params, rng),
        2 => {
            let subtree = profile.subtree_of(base_idx);
            let &target = subtree.choose(rng)?;
            crate::xpath::relative_between(&base, &profile.paths[target])?
        }
        _ => return None,
    };
    out.sheet.templates[i].body[c] = forced_child(out.stype, route);
    Some(out)
}

/// Replaces a uniformly chosen non-root template's body with the single
/// instruction value-of select=".".
pub fn set_template_null(parent: &Genome, rng: &mut impl Rng) -> Option<Genome> {
    let n = parent.sheet.templates.len();
    if n < 2 {
        return None;
    }
    let i = rng.gen_range(1..n);
    let mut out = parent.clone();
    out.sheet.templates[i].body = vec![Instruction::ValueOf {
        select: PathExpr::self_node(),
    }];
    Some(out)
}

/// Applies one named operator. Crossover needs a partner of the same type
/// and returns a second offspring; everything else ignores the partner.
/// None means the operator was not applicable to the drawn target.
pub fn apply_operator(
    op: OperatorId,
    parent: &Genome,
    partner: Option<&Genome>,
    profile: &DocProfile,
    params: &InitParams,
    rng: &mut impl Rng,
) -> Option<(Genome, Option<Genome>)> {
    match op.group() {
        OperatorGroup::XPath => {
            apply_xpath_operator(op, parent, profile, params, rng).map(|g| (g, None))
        }
        OperatorGroup::Structure => match op {
            OperatorId::Crossover => {
                crossover_templates(parent, partner?, rng).map(|(a, b)| (a, Some(b)))
            }
            OperatorId::AddTemplate => {
                template_op(parent, TemplateMode::Add, profile, params, rng).map(|g| (g, None))
            }
            OperatorId::MutateTemplate => {
                template_op(parent, TemplateMode::Mutate, profile, params, rng).map(|g| (g, None))
            }
            OperatorId::RemoveTemplate => {
                template_op(parent, TemplateMode::Remove, profile, params, rng).map(|g| (g, None))
            }
            OperatorId::AddApply => {
                apply_child_op(parent, ChildMode::Add, profile, params, rng).map(|g| (g, None))
            }
            OperatorId::RemoveApply => {
                apply_child_op(parent, ChildMode::Remove, profile, params, rng).map(|g| (g, None))
            }
            OperatorId::MutateApply1 => {
                mutate_apply(parent, 1, profile, params, rng).map(|g| (g, None))
            }
            OperatorId::MutateApply2 => {
                mutate_apply(parent, 2, profile, params, rng).map(|g| (g, None))
            }
            OperatorId::SetTemplateNull => set_template_null(parent, rng).map(|g| (g, None)),
            _ => None,
        },
    }
}

#[derive(Debug, Clone)]
pub struct VariationOutcome {
    pub offspring: Genome,
    /// Crossover's second offspring.
    pub second: Option<Genome>,
    pub applied: bool,
    pub operator: OperatorId,
}

/// One variation step: pick the group (probability `p_xpath_group` for the
/// XPath group), roulette an operator, apply it. A crossover drawn with no
/// partner available is re-drawn among the other structure operators.
/// Not-applicable draws return the parent unchanged with `applied = false`.
pub fn vary(
    parent: &Genome,
    partner: Option<&Genome>,
    table: &OperatorTable,
    profile: &DocProfile,
    params: &InitParams,
    rng: &mut impl Rng,
) -> VariationOutcome {
    let stype = parent.stype;
    let op = if rng.gen_bool(table.p_xpath_group) {
        select_operator(table, stype, OperatorGroup::XPath, rng)
    } else {
        let mut op = select_operator(table, stype, OperatorGroup::Structure, rng);
        if op == OperatorId::Crossover && partner.is_none() {
            let others: Vec<OperatorId> = table
                .structure_group(stype)
                .entries
                .iter()
                .map(|&(o, _)| o)
                .filter(|&o| o != OperatorId::Crossover)
                .collect();
            if others.is_empty() {
                return VariationOutcome {
                    offspring: parent.clone(),
                    second: None,
                    applied: false,
                    operator: op,
                };
            }
            for _ in 0..1000 {
                op = select_operator(table, stype, OperatorGroup::Structure, rng);
                if op != OperatorId::Crossover {
                    break;
                }
            }
            if op == OperatorId::Crossover {
                op = others[0];
            }
        }
        op
    };
    match apply_operator(op, parent, partner, profile, params, rng) {
        Some((offspring, second)) => VariationOutcome {
            offspring,
            second,
            applied: true,
            operator: op,
        },
        None => VariationOutcome {
            offspring: parent.clone(),
            second: None,
            applied: false,
            operator: op,
        },
    }
}
