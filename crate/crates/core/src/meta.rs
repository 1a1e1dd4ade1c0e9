//! Validation of condensed grammars against the meta-grammar of
//! entities, groups, relations and collections.
//!
//! The meta-grammar is S-attributed: name lists are synthesised bottom-up
//! over the rule list and every semantic constraint is a membership or
//! subset test, so validation is a single pass collecting the lists
//! followed by the checks. Meta-rules are numbered:
//!
//! | # | constraint |
//! |---|------------|
//! | 1 | names referenced by the root rule are defined (`eL' ⊆ eL`, ...) |
//! | 2 | the grammar opens with exactly one root rule `ROOT -> ...` |
//! | 3 | root symbols are ENT/GROUP/REL/COLL non-terminals without `+` |
//! | 4–8 | no ENT / GROUP / REL / group-COLL / relation-COLL name twice in the root rule |
//! | 9 | every other rule defines an ENT/GROUP/REL/COLL; ENT names defined once |
//! | 10 | GROUP names defined once |
//! | 11 | REL names defined once; their groups are defined |
//! | 12 | COLL names defined once; their member is defined |
//! | 13 | `GROUP_n -> ENT_a ENT_b ...` (non-empty entity list) |
//! | 14 | `COLL_n -> GROUP_g+` |
//! | 15 | `COLL_n -> REL_r+` |
//! | 16 | `REL_n -> GROUP_a GROUP_b` with `a ≠ b` |
//! | 17–18 | entity names in one group are pairwise distinct |
//! | 19 | `ENT_n -> <data>` |

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::grammar::{CondensedGrammar, Rule, Symbol, DATA_SYMBOL};
use crate::tree::{NodeLabel, Position, Tree, ROOT_NAME};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MetaAttributes {
    pub e_l: BTreeSet<String>,
    pub g_l: BTreeSet<String>,
    pub r_l: BTreeSet<String>,
    pub cg_l: BTreeSet<String>,
    pub cr_l: BTreeSet<String>,
    /// Names referenced by the root rule.
    pub e_l_root: BTreeSet<String>,
    pub g_l_root: BTreeSet<String>,
    pub r_l_root: BTreeSet<String>,
    pub cg_l_root: BTreeSet<String>,
    pub cr_l_root: BTreeSet<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub meta_rule: u8,
    pub message: String,
    /// 1-based index of the offending rule, if any.
    pub rule: Option<usize>,
    pub lhs: Option<String>,
    /// Offending right-hand-side symbol, if one is to blame.
    pub symbol: Option<String>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "meta-rule {}: {}", self.meta_rule, self.message)?;
        if let Some(k) = self.rule {
            write!(f, " (rule {k})")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub attributes: MetaAttributes,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    /// Distinct meta-rule numbers violated.
    pub fn meta_rules(&self) -> BTreeSet<u8> {
        self.violations.iter().map(|v| v.meta_rule).collect()
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum CollKind {
    Groups,
    Relations,
}

struct Checker<'g> {
    rules: &'g [Rule],
    out: Vec<Violation>,
}

impl<'g> Checker<'g> {
    fn flag(&mut self, meta_rule: u8, idx: Option<usize>, symbol: Option<&Symbol>, message: String) {
        self.out.push(Violation {
            meta_rule,
            message,
            rule: idx.map(|i| i + 1),
            lhs: idx.map(|i| self.rules[i].lhs.clone()),
            symbol: symbol.map(|s| s.name.clone()),
        });
    }
}

pub fn validate(grammar: &CondensedGrammar) -> ValidationReport {
    let rules = grammar.rules.as_slice();
    let mut c = Checker { rules, out: Vec::new() };
    let mut attrs = MetaAttributes::default();

    if rules.is_empty() {
        c.flag(2, None, None, "grammar has no root rule".into());
        return ValidationReport { violations: c.out, attributes: attrs };
    }
    let root_idx = rules.iter().position(Rule::is_root);
    match root_idx {
        None => c.flag(2, Some(0), None, format!("first rule must have left-hand side {ROOT_NAME}")),
        Some(i) if i != 0 => c.flag(2, Some(i), None, "root rule must come first".into()),
        _ => {}
    }
    for (i, r) in rules.iter().enumerate() {
        if r.is_root() && Some(i) != root_idx {
            c.flag(2, Some(i), None, "more than one root rule".into());
        }
    }

    // synthesise the defined-name lists from the rule list
    let mut coll_kind: BTreeMap<String, CollKind> = BTreeMap::new();
    let mut well_formed = vec![false; rules.len()];
    for (i, r) in rules.iter().enumerate() {
        if r.is_root() {
            continue;
        }
        match r.lhs_label() {
            NodeLabel::Entity(name) => {
                if !attrs.e_l.insert(name.clone()) {
                    c.flag(9, Some(i), None, format!("entity {name} defined twice"));
                }
                if r.rhs.len() == 1 && r.rhs[0].name == DATA_SYMBOL && !r.rhs[0].plus {
                    well_formed[i] = true;
                } else {
                    c.flag(19, Some(i), r.rhs.first(), format!("entity rule must be `ENT_{name} -> {DATA_SYMBOL}`"));
                }
            }
            NodeLabel::Group(name) => {
                if !attrs.g_l.insert(name.clone()) {
                    c.flag(10, Some(i), None, format!("group {name} defined twice"));
                }
                well_formed[i] = check_group(&mut c, i, r);
            }
            NodeLabel::Rel(name) => {
                if !attrs.r_l.insert(name.clone()) {
                    c.flag(11, Some(i), None, format!("relation {name} defined twice"));
                }
                well_formed[i] = check_relation(&mut c, i, r);
            }
            NodeLabel::Coll(name) => {
                let kind = check_collection(&mut c, i, r);
                well_formed[i] = kind.is_some();
                let kind = kind.unwrap_or(match r.rhs.first().map(Symbol::label) {
                    Some(NodeLabel::Rel(_)) => CollKind::Relations,
                    _ => CollKind::Groups,
                });
                if coll_kind.insert(name.clone(), kind).is_some() {
                    c.flag(12, Some(i), None, format!("collection {name} defined twice"));
                } else {
                    match kind {
                        CollKind::Groups => attrs.cg_l.insert(name),
                        CollKind::Relations => attrs.cr_l.insert(name),
                    };
                }
            }
            _ => c.flag(
                9,
                Some(i),
                None,
                format!("`{}` is not an ENT, GROUP, REL or COLL non-terminal", r.lhs),
            ),
        }
    }
    // entity rule bodies are implicit: referenced entities count as defined
    for (i, r) in rules.iter().enumerate() {
        if well_formed[i] || r.is_root() {
            for s in &r.rhs {
                if let NodeLabel::Entity(e) = s.label() {
                    attrs.e_l.insert(e);
                }
            }
        }
    }

    // closure of the rule bodies
    for (i, r) in rules.iter().enumerate() {
        if !well_formed[i] {
            continue;
        }
        match r.lhs_label() {
            NodeLabel::Rel(name) => {
                for s in &r.rhs {
                    if let NodeLabel::Group(g) = s.label() {
                        if !attrs.g_l.contains(&g) {
                            c.flag(11, Some(i), Some(s), format!("relation {name} uses undefined group {g}"));
                        }
                    }
                }
            }
            NodeLabel::Coll(name) => {
                let s = &r.rhs[0];
                let defined = match s.label() {
                    NodeLabel::Group(g) => attrs.g_l.contains(&g),
                    NodeLabel::Rel(x) => attrs.r_l.contains(&x),
                    _ => true,
                };
                if !defined {
                    c.flag(12, Some(i), Some(s), format!("collection {name} repeats undefined {}", s.name));
                }
            }
            _ => {}
        }
    }

    if let Some(ri) = root_idx {
        check_root(&mut c, ri, &rules[ri], &coll_kind, &mut attrs);
    }
    ValidationReport { violations: c.out, attributes: attrs }
}

fn check_group(c: &mut Checker<'_>, i: usize, r: &Rule) -> bool {
    if r.rhs.is_empty() {
        c.flag(13, Some(i), None, format!("group {} has no entities", r.lhs));
        return false;
    }
    if let Some(s) = r.rhs.iter().find(|s| !s.label().is_entity() || s.plus) {
        c.flag(13, Some(i), Some(s), format!("group {} may only list entities, found {s}", r.lhs));
        return false;
    }
    let mut seen = BTreeSet::new();
    for s in &r.rhs {
        if !seen.insert(&s.name) {
            c.flag(18, Some(i), Some(s), format!("entity {} repeated in group {}", s.name, r.lhs));
            return false;
        }
    }
    true
}

fn check_relation(c: &mut Checker<'_>, i: usize, r: &Rule) -> bool {
    let groups = r.rhs.len() == 2 && r.rhs.iter().all(|s| s.label().is_group() && !s.plus);
    if !groups {
        let culprit = r.rhs.iter().find(|s| !s.label().is_group() || s.plus).or(r.rhs.get(2));
        c.flag(
            16,
            Some(i),
            culprit,
            format!("relation {} must link exactly two groups, found {} symbols", r.lhs, r.rhs.len()),
        );
        return false;
    }
    if r.rhs[0].name == r.rhs[1].name {
        c.flag(16, Some(i), Some(&r.rhs[1]), format!("relation {} links {} to itself", r.lhs, r.rhs[0].name));
        return false;
    }
    true
}

fn check_collection(c: &mut Checker<'_>, i: usize, r: &Rule) -> Option<CollKind> {
    match r.rhs.as_slice() {
        [s] if s.plus && s.label().is_group() => Some(CollKind::Groups),
        [s] if s.plus && s.label().is_rel() => Some(CollKind::Relations),
        rhs => {
            let rel = matches!(rhs.first().map(Symbol::label), Some(NodeLabel::Rel(_)));
            let (n, what) = if rel { (15, "REL_r+") } else { (14, "GROUP_g+") };
            c.flag(n, Some(i), rhs.first(), format!("collection {} must be `{} -> {what}`", r.lhs, r.lhs));
            None
        }
    }
}

fn check_root(
    c: &mut Checker<'_>,
    i: usize,
    r: &Rule,
    coll_kind: &BTreeMap<String, CollKind>,
    attrs: &mut MetaAttributes,
) {
    for s in &r.rhs {
        let label = s.label();
        if !label.is_categorized() || s.plus {
            c.flag(3, Some(i), Some(s), format!("root may only list ENT, GROUP, REL or COLL names, found {s}"));
            continue;
        }
        let name = label.name().unwrap_or_default().to_string();
        let (meta, list, kind) = match &label {
            NodeLabel::Entity(_) => (4, &mut attrs.e_l_root, "entity"),
            NodeLabel::Group(_) => (5, &mut attrs.g_l_root, "group"),
            NodeLabel::Rel(_) => (6, &mut attrs.r_l_root, "relation"),
            _ => match coll_kind.get(&name) {
                Some(CollKind::Relations) => (8, &mut attrs.cr_l_root, "collection"),
                Some(CollKind::Groups) => (7, &mut attrs.cg_l_root, "collection"),
                None => {
                    c.flag(1, Some(i), Some(s), format!("root references undefined collection {name}"));
                    continue;
                }
            },
        };
        if !list.insert(name.clone()) {
            c.flag(meta, Some(i), Some(s), format!("{kind} {name} listed twice in the root rule"));
        }
    }
    let undefined = |root: &BTreeSet<String>, defined: &BTreeSet<String>| -> Vec<String> {
        root.difference(defined).cloned().collect()
    };
    for (root, defined, prefix) in [
        (&attrs.g_l_root, &attrs.g_l, "GROUP_"),
        (&attrs.r_l_root, &attrs.r_l, "REL_"),
    ] {
        for n in undefined(root, defined) {
            let sym = r.rhs.iter().find(|s| s.name == format!("{prefix}{n}"));
            c.flag(1, Some(i), sym, format!("root references undefined {prefix}{n}"));
        }
    }
}

/// Positions of `instance` that keep its grammar from validating: every
/// uncategorized internal node, plus nodes whose label takes part in a
/// violated constraint.
pub fn validity_frontier(grammar: &CondensedGrammar, instance: &Tree) -> BTreeSet<Position> {
    let report = validate(grammar);
    frontier_from_report(&report, instance)
}

pub fn frontier_from_report(report: &ValidationReport, instance: &Tree) -> BTreeSet<Position> {
    let mut out = BTreeSet::new();
    let nodes = instance.preorder();
    for (p, n) in &nodes {
        if !p.is_root() && !n.is_leaf() && n.label().is_uncategorized() {
            out.insert(p.clone());
        }
    }
    for v in &report.violations {
        let Some(lhs) = &v.lhs else { continue };
        for (p, n) in &nodes {
            if n.label().to_string() != *lhs {
                continue;
            }
            match &v.symbol {
                None if !p.is_root() => {
                    out.insert(p.clone());
                }
                None => {}
                Some(sym) => {
                    for (i, ch) in n.children().iter().enumerate() {
                        if ch.label().to_string() == *sym {
                            out.insert(p.child(i));
                        }
                    }
                }
            }
        }
    }
    out
}
