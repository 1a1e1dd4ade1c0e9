//! Tree rewrite rules with hedge variables.
//!
//! A rule `l → r` matches the pattern `l` against the node at a position;
//! hedge variables bind to (possibly empty) runs of siblings and label
//! variables bind to single labels. A guard may inspect the bindings.
//! The matched node is then replaced by the hedge obtained by
//! instantiating `r`.

use std::collections::BTreeMap;
use std::fmt;

use super::{NodeLabel, Position, Tree};

pub type Hedge = Vec<Tree>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LabelPattern {
    Exact(NodeLabel),
    /// Binds the label; repeated occurrences must bind the same label.
    Var(String),
    Any,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Pattern {
    Node { label: LabelPattern, children: Vec<Pattern> },
    /// A hedge variable; repeated occurrences must bind equal hedges.
    Hedge(String),
}

impl Pattern {
    pub fn node(label: LabelPattern, children: Vec<Pattern>) -> Self {
        Pattern::Node { label, children }
    }

    pub fn exact(label: NodeLabel, children: Vec<Pattern>) -> Self {
        Pattern::Node { label: LabelPattern::Exact(label), children }
    }

    pub fn var(name: &str, children: Vec<Pattern>) -> Self {
        Pattern::Node { label: LabelPattern::Var(name.to_string()), children }
    }

    pub fn hedge(name: &str) -> Self {
        Pattern::Hedge(name.to_string())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution {
    labels: BTreeMap<String, NodeLabel>,
    hedges: BTreeMap<String, Hedge>,
}

impl Substitution {
    pub fn label(&self, var: &str) -> Option<&NodeLabel> {
        self.labels.get(var)
    }

    pub fn hedge(&self, var: &str) -> Option<&[Tree]> {
        self.hedges.get(var).map(Vec::as_slice)
    }
}

type Guard = Box<dyn Fn(&Substitution) -> bool + Send + Sync>;

pub struct RewriteRule {
    lhs: Pattern,
    rhs: Vec<Pattern>,
    guard: Option<Guard>,
}

impl fmt::Debug for RewriteRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RewriteRule")
            .field("lhs", &self.lhs)
            .field("rhs", &self.rhs)
            .field("guarded", &self.guard.is_some())
            .finish()
    }
}

impl RewriteRule {
    /// `lhs` must be a node pattern; `rhs` is the replacement hedge.
    pub fn new(lhs: Pattern, rhs: Vec<Pattern>) -> Self {
        assert!(matches!(lhs, Pattern::Node { .. }), "left-hand side must match a node");
        RewriteRule { lhs, rhs, guard: None }
    }

    pub fn with_guard(mut self, guard: impl Fn(&Substitution) -> bool + Send + Sync + 'static) -> Self {
        self.guard = Some(Box::new(guard));
        self
    }

    /// `p[c[z]] → c[z]`: removes a unary node, keeping its only child.
    pub fn collapse_unary() -> Self {
        RewriteRule::new(
            Pattern::var("p", vec![Pattern::var("c", vec![Pattern::hedge("z")])]),
            vec![Pattern::var("c", vec![Pattern::hedge("z")])],
        )
    }

    /// `p[x] → x`: deletes a node and promotes its children.
    pub fn dissolve() -> Self {
        RewriteRule::new(Pattern::var("p", vec![Pattern::hedge("x")]), vec![Pattern::hedge("x")])
    }

    /// Finds the first substitution (hedges tried shortest first) that
    /// matches `node` and satisfies the guard.
    pub fn matches(&self, node: &Tree) -> Option<Substitution> {
        let mut found = None;
        let mut subst = Substitution::default();
        match_node(&self.lhs, node, &mut subst, &mut |s| {
            if self.guard.as_ref().is_none_or(|g| g(s)) {
                found = Some(s.clone());
                true
            } else {
                false
            }
        });
        found
    }

    pub fn instantiate(&self, subst: &Substitution) -> Hedge {
        let mut out = Vec::new();
        for p in &self.rhs {
            instantiate(p, subst, &mut out);
        }
        out
    }
}

/// Applies `rule` at position `at`. Returns `None` when the pattern or
/// guard fails, or when the root would be replaced by anything but a
/// single tree.
pub fn apply_rule(tree: &Tree, at: &Position, rule: &RewriteRule) -> Option<Tree> {
    let node = tree.get(at)?;
    let subst = rule.matches(node)?;
    let mut hedge = rule.instantiate(&subst);
    if at.is_root() {
        if hedge.len() != 1 {
            return None;
        }
        return Some(hedge.pop().unwrap());
    }
    tree.replace_with_hedge(at, hedge).ok()
}

fn instantiate(p: &Pattern, s: &Substitution, out: &mut Vec<Tree>) {
    match p {
        Pattern::Hedge(v) => {
            out.extend(s.hedges.get(v).cloned().unwrap_or_default());
        }
        Pattern::Node { label, children } => {
            let label = match label {
                LabelPattern::Exact(l) => l.clone(),
                LabelPattern::Var(v) => s.labels.get(v).cloned().expect("label variable bound by lhs"),
                LabelPattern::Any => NodeLabel::unlabeled(),
            };
            let mut kids = Vec::new();
            for c in children {
                instantiate(c, s, &mut kids);
            }
            out.push(Tree::new(label, kids));
        }
    }
}

/// Continuation-passing matcher: `k` is called for every complete match
/// and returns `true` to stop the search.
fn match_node(
    p: &Pattern,
    t: &Tree,
    s: &mut Substitution,
    k: &mut dyn FnMut(&Substitution) -> bool,
) -> bool {
    let Pattern::Node { label, children } = p else {
        unreachable!("hedge patterns are matched by match_seq")
    };
    let mut bound = None;
    match label {
        LabelPattern::Any => {}
        LabelPattern::Exact(l) => {
            if l != t.label() {
                return false;
            }
        }
        LabelPattern::Var(v) => match s.labels.get(v) {
            Some(l) if l != t.label() => return false,
            Some(_) => {}
            None => {
                s.labels.insert(v.clone(), t.label().clone());
                bound = Some(v.clone());
            }
        },
    }
    let done = match_seq(children, t.children(), s, k);
    if let Some(v) = bound {
        s.labels.remove(&v);
    }
    done
}

fn match_seq(
    ps: &[Pattern],
    ts: &[Tree],
    s: &mut Substitution,
    k: &mut dyn FnMut(&Substitution) -> bool,
) -> bool {
    let Some((first, rest)) = ps.split_first() else {
        return ts.is_empty() && k(s);
    };
    match first {
        Pattern::Node { .. } => {
            let Some((t0, trest)) = ts.split_first() else {
                return false;
            };
            match_node(first, t0, s, &mut |s2| {
                let mut s3 = s2.clone();
                match_seq(rest, trest, &mut s3, k)
            })
        }
        Pattern::Hedge(v) => {
            if let Some(h) = s.hedges.get(v).cloned() {
                return ts.len() >= h.len()
                    && ts[..h.len()] == h[..]
                    && match_seq(rest, &ts[h.len()..], s, k);
            }
            for n in 0..=ts.len() {
                s.hedges.insert(v.clone(), ts[..n].to_vec());
                if match_seq(rest, &ts[n..], s, k) {
                    s.hedges.remove(v);
                    return true;
                }
            }
            s.hedges.remove(v);
            false
        }
    }
}
