//! Ordered labeled trees.
//!
//! A [`Tree`] stores its children as an ordered vector, so the position
//! domain (the set of child-index paths) is prefix-closed and
//! left-sibling-closed by construction: removing a child shifts its right
//! siblings left, inserting shifts them right. Every edit returns a new
//! tree; inputs are never mutated.

mod label;
mod position;
pub mod rule;

use std::collections::BTreeSet;

pub use label::{AuxKind, NodeLabel, ROOT_NAME, UNLABELED_TAG};
pub use position::{ParsePositionError, Position};
pub use rule::{Hedge, LabelPattern, Pattern, RewriteRule, Substitution};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TreeError {
    #[error("position {0} is not in the tree domain")]
    PositionNotInDomain(Position),
    #[error("ancestor {requested} requested for a sub-tree of depth {depth}")]
    AncestorOutOfRange { requested: usize, depth: usize },
    #[error("the root position cannot be replaced by a hedge")]
    RootReplacement,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Tree {
    label: NodeLabel,
    children: Vec<Tree>,
}

impl Tree {
    pub fn new(label: NodeLabel, children: Vec<Tree>) -> Self {
        Tree { label, children }
    }

    pub fn leaf(label: NodeLabel) -> Self {
        Tree { label, children: Vec::new() }
    }

    pub fn token(text: impl Into<String>) -> Self {
        Tree::leaf(NodeLabel::token(text))
    }

    /// A λ-rooted tree over the given children.
    pub fn root(children: Vec<Tree>) -> Self {
        Tree { label: NodeLabel::Root, children }
    }

    /// The empty instance `({ε}, ε ↦ λ)`.
    pub fn empty() -> Self {
        Tree::root(Vec::new())
    }

    pub fn label(&self) -> &NodeLabel {
        &self.label
    }

    pub fn children(&self) -> &[Tree] {
        &self.children
    }

    pub fn into_parts(self) -> (NodeLabel, Vec<Tree>) {
        (self.label, self.children)
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// `true` for a bare root with no children.
    pub fn is_empty_instance(&self) -> bool {
        self.label.is_root() && self.children.is_empty()
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(Tree::size).sum::<usize>()
    }

    pub fn height(&self) -> usize {
        self.children.iter().map(|c| 1 + c.height()).max().unwrap_or(0)
    }

    pub fn get(&self, at: &Position) -> Option<&Tree> {
        let mut node = self;
        for &i in at.indices() {
            node = node.children.get(i)?;
        }
        Some(node)
    }

    pub(crate) fn get_mut(&mut self, at: &Position) -> Option<&mut Tree> {
        let mut node = self;
        for &i in at.indices() {
            node = node.children.get_mut(i)?;
        }
        Some(node)
    }

    pub fn contains(&self, at: &Position) -> bool {
        self.get(at).is_some()
    }

    pub fn label_at(&self, at: &Position) -> Option<&NodeLabel> {
        self.get(at).map(|n| &n.label)
    }

    /// All `(position, node)` pairs in preorder, which is ascending
    /// position order.
    pub fn preorder(&self) -> Vec<(Position, &Tree)> {
        let mut out = Vec::with_capacity(self.size());
        let mut stack = vec![(Position::root(), self)];
        while let Some((p, n)) = stack.pop() {
            for (i, c) in n.children.iter().enumerate().rev() {
                stack.push((p.child(i), c));
            }
            out.push((p, n));
        }
        out
    }

    pub fn positions(&self) -> Vec<Position> {
        self.preorder().into_iter().map(|(p, _)| p).collect()
    }

    pub fn domain(&self) -> BTreeSet<Position> {
        self.positions().into_iter().collect()
    }

    /// Leaf positions from left to right.
    pub fn leaf_positions(&self) -> Vec<Position> {
        self.preorder()
            .into_iter()
            .filter(|(_, n)| n.is_leaf())
            .map(|(p, _)| p)
            .collect()
    }

    /// Token texts from left to right.
    pub fn tokens(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_tokens(&mut out);
        out
    }

    fn collect_tokens<'a>(&'a self, out: &mut Vec<&'a str>) {
        if let NodeLabel::Token(t) = &self.label {
            out.push(t);
        }
        for c in &self.children {
            c.collect_tokens(out);
        }
    }

    /// The sub-tree fragment at `at`.
    pub fn subtree(&self, at: &Position) -> Result<SubTree<'_>, TreeError> {
        SubTree::new(self, at.clone())
    }

    /// Returns a copy with the children of `at` replaced by `hedge`.
    pub fn splice_children(&self, at: &Position, hedge: Vec<Tree>) -> Result<Tree, TreeError> {
        let mut out = self.clone();
        let node = out
            .get_mut(at)
            .ok_or_else(|| TreeError::PositionNotInDomain(at.clone()))?;
        node.children = hedge;
        Ok(out)
    }

    /// Returns a copy with the node at `at` replaced by the trees of
    /// `hedge`, spliced into the parent's child list in its place.
    pub fn replace_with_hedge(&self, at: &Position, hedge: Vec<Tree>) -> Result<Tree, TreeError> {
        let mut out = self.clone();
        out.replace_with_hedge_in_place(at, hedge)?;
        Ok(out)
    }

    pub(crate) fn replace_with_hedge_in_place(
        &mut self,
        at: &Position,
        hedge: Vec<Tree>,
    ) -> Result<(), TreeError> {
        let parent = at.parent().ok_or(TreeError::RootReplacement)?;
        let idx = at.last().expect("non-root position");
        let node = self
            .get_mut(&parent)
            .filter(|n| idx < n.children.len())
            .ok_or_else(|| TreeError::PositionNotInDomain(at.clone()))?;
        node.children.splice(idx..=idx, hedge);
        Ok(())
    }

    /// Returns a copy with the node at `at` replaced by `replacement`.
    pub fn replace(&self, at: &Position, replacement: Tree) -> Result<Tree, TreeError> {
        let mut out = self.clone();
        *out
            .get_mut(at)
            .ok_or_else(|| TreeError::PositionNotInDomain(at.clone()))? = replacement;
        Ok(out)
    }

    pub fn relabel(&self, at: &Position, label: NodeLabel) -> Result<Tree, TreeError> {
        let mut out = self.clone();
        out.get_mut(at)
            .ok_or_else(|| TreeError::PositionNotInDomain(at.clone()))?
            .label = label;
        Ok(out)
    }

    pub(crate) fn set_label(&mut self, label: NodeLabel) {
        self.label = label;
    }

    pub(crate) fn children_mut(&mut self) -> &mut Vec<Tree> {
        &mut self.children
    }

    /// Checks the label invariants: λ never below the root and tokens only
    /// at leaves. Returns the first offending position.
    pub fn check_labels(&self) -> Result<(), Position> {
        for (p, n) in self.preorder() {
            if !p.is_root() && n.label.is_root() {
                return Err(p);
            }
            if n.label.is_token() && !n.is_leaf() {
                return Err(p);
            }
        }
        Ok(())
    }

    /// Entity names occurring in this sub-tree, in preorder.
    pub fn entity_names(&self) -> Vec<&str> {
        self.preorder()
            .into_iter()
            .filter_map(|(_, n)| match &n.label {
                NodeLabel::Entity(e) => Some(e.as_str()),
                _ => None,
            })
            .collect()
    }

    pub fn has_entity(&self) -> bool {
        self.label.is_entity() || self.children.iter().any(Tree::has_entity)
    }
}

/// A sub-tree `T|_u` together with the tree it belongs to, so that its
/// tree-ancestors can be reached.
#[derive(Clone, Debug)]
pub struct SubTree<'a> {
    tree: &'a Tree,
    at: Position,
}

impl<'a> SubTree<'a> {
    pub fn new(tree: &'a Tree, at: Position) -> Result<Self, TreeError> {
        if tree.contains(&at) {
            Ok(SubTree { tree, at })
        } else {
            Err(TreeError::PositionNotInDomain(at))
        }
    }

    pub fn tree(&self) -> &'a Tree {
        self.tree
    }

    pub fn at(&self) -> &Position {
        &self.at
    }

    pub fn depth(&self) -> usize {
        self.at.depth()
    }

    pub fn node(&self) -> &'a Tree {
        self.tree.get(&self.at).expect("position checked on construction")
    }

    /// The `i`th tree-ancestor `P_i`.
    pub fn ancestor(&self, i: usize) -> Result<SubTree<'a>, TreeError> {
        let at = self.at.ancestor(i).ok_or(TreeError::AncestorOutOfRange {
            requested: i,
            depth: self.at.depth(),
        })?;
        Ok(SubTree { tree: self.tree, at })
    }

    /// Absolute positions of the fragment, all prefixed by `at`.
    pub fn positions(&self) -> Vec<Position> {
        self.node()
            .positions()
            .into_iter()
            .map(|p| self.at.concat(&p))
            .collect()
    }
}

impl Tree {
    pub fn at(&self, at: Position) -> Result<SubTree<'_>, TreeError> {
        SubTree::new(self, at)
    }
}

/// Checks prefix closure and left-sibling closure of a position set by
/// scanning it; used to assert domain invariants after edits.
pub fn is_tree_domain(domain: &BTreeSet<Position>) -> bool {
    if !domain.contains(&Position::root()) {
        return false;
    }
    domain.iter().all(|p| match (p.parent(), p.last()) {
        (None, _) => true,
        (Some(parent), Some(i)) => {
            domain.contains(&parent) && (0..i).all(|j| domain.contains(&parent.child(j)))
        }
        (Some(_), None) => unreachable!(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bracket::parse_tree;
    use crate::pos;

    fn sample_tree() -> Tree {
        // D = {ε, 0, 1, 1.0, 1.1}
        Tree::new(
            NodeLabel::Root,
            vec![
                Tree::leaf(NodeLabel::syntactic("child1")),
                Tree::new(
                    NodeLabel::syntactic("child2"),
                    vec![
                        Tree::leaf(NodeLabel::syntactic("grandchildren1")),
                        Tree::leaf(NodeLabel::syntactic("grandchildren")),
                    ],
                ),
            ],
        )
    }

    #[test]
    fn subtree_fragment_keeps_absolute_positions() {
        let t = sample_tree();
        let st = t.at(pos!("1")).unwrap();
        let positions: Vec<String> = st.positions().iter().map(|p| p.to_string()).collect();
        assert_eq!(positions, ["1", "1.0", "1.1"]);
        let labels: Vec<String> = st.node().preorder().iter().map(|(_, n)| n.label().to_string()).collect();
        assert_eq!(labels, ["child2", "grandchildren1", "grandchildren"]);
        // not a tree domain on its own: ε is missing
        assert!(!is_tree_domain(&st.positions().into_iter().collect()));
    }

    #[test]
    fn subtree_at_root_is_whole_tree() {
        let t = sample_tree();
        assert_eq!(t.at(Position::root()).unwrap().node(), &t);
    }

    #[test]
    fn subtree_outside_domain_is_an_error() {
        let t = sample_tree();
        assert_eq!(t.subtree(&pos!("2")).unwrap_err(), TreeError::PositionNotInDomain(pos!("2")));
        assert!(t.at(pos!("0.0")).is_err());
    }

    #[test]
    fn ancestor_of_position_one_is_whole_tree() {
        let t = sample_tree();
        let st = t.at(pos!("1")).unwrap();
        assert_eq!(st.ancestor(1).unwrap().node(), &t);
        assert_eq!(st.ancestor(0).unwrap().at(), st.at());
        assert!(matches!(st.ancestor(2), Err(TreeError::AncestorOutOfRange { .. })));
    }

    #[test]
    fn ancestor_two_levels_up() {
        let t = parse_tree("(ROOT (A (B (C x) (D y))) (E (F (G z) (H w))))").unwrap();
        let st = t.at(pos!("1.0.1")).unwrap();
        assert_eq!(st.ancestor(2).unwrap().at(), &pos!("1"));
    }

    #[test]
    fn subtree_at_zero() {
        let t = parse_tree("(ROOT (X a b) (X b c) (Y a))").unwrap();
        let st = t.at(pos!("0")).unwrap();
        assert_eq!(st.node().label(), &NodeLabel::syntactic("X"));
        assert_eq!(st.node().tokens(), ["a", "b"]);
    }

    #[test]
    fn splice_children_cases() {
        let t = parse_tree("(ROOT (X a) (Y b c))").unwrap();
        let emptied = t.splice_children(&Position::root(), vec![]).unwrap();
        assert_eq!(emptied.size(), 1);

        let kids = t.children().to_vec();
        let swapped = t
            .splice_children(&Position::root(), vec![kids[1].clone(), kids[0].clone()])
            .unwrap();
        assert_eq!(swapped.tokens(), ["b", "c", "a"]);
        assert_eq!(swapped.leaf_positions().len(), t.leaf_positions().len());

        let doubled = t
            .splice_children(&Position::root(), vec![kids[0].clone(), kids[1].clone(), kids[1].clone()])
            .unwrap();
        assert_eq!(doubled.leaf_positions().len(), 5);
        assert!(is_tree_domain(&doubled.domain()));

        assert!(t.splice_children(&pos!("5"), vec![]).is_err());
    }

    #[test]
    fn replace_with_hedge_renumbers_right_siblings() {
        let t = parse_tree("(ROOT (A a) (B b) (C c))").unwrap();
        let out = t.replace_with_hedge(&pos!("0"), vec![]).unwrap();
        assert_eq!(out.label_at(&pos!("0")), Some(&NodeLabel::syntactic("B")));
        assert_eq!(out.label_at(&pos!("1")), Some(&NodeLabel::syntactic("C")));
        assert!(!out.contains(&pos!("2")));
        assert!(is_tree_domain(&out.domain()));
        assert_eq!(t.children().len(), 3);
    }

    #[test]
    fn label_invariants() {
        let t = parse_tree("(ROOT (NP (NN heart)))").unwrap();
        assert!(t.check_labels().is_ok());
        let bad = Tree::root(vec![Tree::new(NodeLabel::token("x"), vec![Tree::token("y")])]);
        assert_eq!(bad.check_labels(), Err(pos!("0")));
        let nested_root = Tree::root(vec![Tree::root(vec![])]);
        assert_eq!(nested_root.check_labels(), Err(pos!("0")));
    }
}
