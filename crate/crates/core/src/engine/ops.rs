//! The rewriting operations of the structuring loop. Each returns the
//! rewritten instance, or `None` when it does not apply.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use itertools::Itertools;
use rayon::prelude::*;

use super::registry::{group_shape, NameRegistry};
use crate::grammar::ordered_merge;
use crate::similarity::{Partition, SimIndex, SimParams};
use crate::tree::{NodeLabel, Position, Tree};

/// Internal node that has no schema category yet.
pub fn is_open(t: &Tree) -> bool {
    t.label().is_uncategorized() && !t.is_leaf()
}

/// Non-root positions that take part in similarity: everything except
/// tokens and entity sub-trees, in preorder.
pub fn scope(tree: &Tree) -> Vec<Position> {
    fn walk(t: &Tree, p: &Position, out: &mut Vec<Position>) {
        for (i, c) in t.children().iter().enumerate() {
            if c.label().is_token() || c.label().is_entity() {
                continue;
            }
            let q = p.child(i);
            out.push(q.clone());
            walk(c, &q, out);
        }
    }
    let mut out = Vec::new();
    walk(tree, &Position::root(), &mut out);
    out
}

/// No GROUP, REL or COLL anywhere below.
fn pure(t: &Tree) -> bool {
    t.children()
        .iter()
        .all(|c| c.label().is_entity() || c.label().is_token() || (c.label().is_uncategorized() && pure(c)))
}

fn entity_hedge(t: &Tree, out: &mut Vec<Tree>) {
    for c in t.children() {
        if c.label().is_entity() {
            out.push(c.clone());
        } else {
            entity_hedge(c, out);
        }
    }
}

/// Label structure without tokens, used to share candidate verdicts
/// between identical sub-trees.
fn skeleton(t: &Tree) -> String {
    let mut s = t.label().to_string();
    if !t.label().is_entity() && t.children().iter().any(|c| !c.label().is_token()) {
        s.push('(');
        for c in t.children().iter().filter(|c| !c.label().is_token()) {
            s.push_str(&skeleton(c));
            s.push(' ');
        }
        s.push(')');
    }
    s
}

/// Classes of the current iteration plus the similarity used to score
/// hypothetical rewrites.
pub struct SupportCtx<'a> {
    pub partition: &'a Partition,
    pub params: SimParams,
}

impl SupportCtx<'_> {
    /// Size of the class holding `p`.
    pub fn of(&self, p: &Position) -> usize {
        self.partition.class_of(p).map_or(1, |c| self.partition.support(c))
    }

    /// Support of the node at `at` in the rewritten tree `cand`, where
    /// the sub-tree at `region` is new: one for the node itself plus every
    /// class member, outside the region, of a node it is τ-similar to.
    pub fn candidate(&self, cand: &Tree, at: &Position, region: &Position) -> usize {
        let index = SimIndex::new(cand, self.params.kind);
        let me = index.rank(at).expect("candidate node in tree");
        let outside: Vec<Position> = scope(cand).into_iter().filter(|y| !region.is_prefix_of(y)).collect();
        let close: Vec<&Position> = outside
            .par_iter()
            .filter(|y| index.sim(me, index.rank(y).unwrap()) >= self.params.tau)
            .collect();
        let mut members: BTreeSet<&Position> = BTreeSet::new();
        for y in close {
            match self.partition.class_of(y) {
                Some(c) => members.extend(self.partition.block(c).iter().filter(|q| !region.is_prefix_of(q))),
                None => {
                    members.insert(y);
                }
            }
        }
        1 + members.len()
    }
}

/// Relabels the members of frequent classes of entity parents as groups.
///
/// Classes with at least `min_support` members are handled by decreasing
/// depth of their shallowest member, ties by smallest position. A member
/// qualifies when it is uncategorized, has an entity child and nothing
/// categorized below it besides entities; a qualifying member's
/// intermediate nodes are dissolved so only entities remain under it.
pub fn find_groups(tree: &Tree, partition: &Partition, min_support: usize, registry: &mut NameRegistry) -> Option<Tree> {
    let mut classes: Vec<&[Position]> =
        partition.blocks().iter().map(Vec::as_slice).filter(|b| b.len() >= min_support).collect();
    classes.sort_by_key(|b| {
        let shallowest = b.iter().map(Position::depth).min().unwrap_or(0);
        (std::cmp::Reverse(shallowest), b[0].clone())
    });

    let mut out = tree.clone();
    let mut claimed: Vec<&Position> = Vec::new();
    for block in classes {
        let mut members: Vec<&Position> = block.iter().collect();
        members.sort();
        // an ancestor and its descendant may share a class: keep the ancestor
        let mut eligible: Vec<&Position> = Vec::new();
        for p in members {
            let n = tree.get(p).expect("class member in tree");
            let free = !claimed.iter().chain(&eligible).any(|q| q.is_prefix_of(p) || p.is_prefix_of(q));
            if free && is_open(n) && n.children().iter().any(|c| c.label().is_entity()) && pure(n) {
                eligible.push(p);
            }
        }
        if eligible.is_empty() {
            continue;
        }
        let existing = block
            .iter()
            .filter_map(|p| match tree.label_at(p) {
                Some(NodeLabel::Group(g)) => Some(g.clone()),
                _ => None,
            })
            .min();
        let shapes: Vec<String> = eligible.iter().map(|p| group_shape(tree.get(p).unwrap())).collect();
        let id = match existing {
            Some(g) => {
                registry.claim_shapes(&shapes, &g);
                g
            }
            None => registry.group_id(&shapes),
        };
        let hedges: Vec<Vec<Tree>> = eligible
            .iter()
            .map(|p| {
                let mut ents = Vec::new();
                entity_hedge(tree.get(p).unwrap(), &mut ents);
                ents
            })
            .collect();
        let rank = entity_rank(&hedges);
        for (p, mut ents) in eligible.into_iter().zip(hedges) {
            ents.sort_by_key(|e| rank[&e.label().to_string()]);
            *out.get_mut(p).unwrap() = Tree::new(NodeLabel::group(&id), ents);
            claimed.push(p);
        }
    }
    (out != *tree).then_some(out)
}

/// Position of each entity label in the common order of a class's
/// groups: the order all hedges agree on, else mean relative position
/// with first appearance breaking ties.
fn entity_rank(hedges: &[Vec<Tree>]) -> HashMap<String, usize> {
    let seqs: Vec<Vec<String>> =
        hedges.iter().map(|h| h.iter().map(|e| e.label().to_string()).collect()).collect();
    let order = ordered_merge(&seqs).unwrap_or_else(|| {
        let mut score: Vec<(String, f64, usize)> = Vec::new();
        for seq in &seqs {
            let span = seq.len().saturating_sub(1).max(1) as f64;
            for (i, name) in seq.iter().enumerate() {
                match score.iter_mut().find(|(n, _, _)| n == name) {
                    Some(entry) => {
                        entry.1 += i as f64 / span;
                        entry.2 += 1;
                    }
                    None => score.push((name.clone(), i as f64 / span, 1)),
                }
            }
        }
        let mut ranked: Vec<(usize, String, f64)> =
            score.into_iter().enumerate().map(|(first, (n, sum, k))| (first, n, sum / k as f64)).collect();
        ranked.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)));
        ranked.into_iter().map(|(_, n, _)| n).collect()
    });
    order.into_iter().enumerate().map(|(i, n)| (n, i)).collect()
}

/// Replacements of an all-entity node by `_[GROUP(subset), rest...]`,
/// largest subsets first, then lexicographic.
pub fn subgroup_candidates(node: &Tree, registry: &NameRegistry) -> Vec<Tree> {
    let kids = node.children();
    let mut out = Vec::new();
    for size in (1..kids.len()).rev() {
        for combo in (0..kids.len()).combinations(size) {
            let inner: Vec<Tree> = combo.iter().map(|&i| kids[i].clone()).collect();
            let mut group = Tree::new(NodeLabel::group("?"), inner);
            group = Tree::new(NodeLabel::group(registry.peek_group(&group_shape(&group))), group.into_parts().1);
            let mut children = vec![group];
            children.extend((0..kids.len()).filter(|i| !combo.contains(i)).map(|i| kids[i].clone()));
            out.push(Tree::new(NodeLabel::unlabeled(), children));
        }
    }
    out
}

fn all_entities(t: &Tree) -> bool {
    t.children().len() >= 2 && t.children().iter().all(|c| c.label().is_entity())
}

/// Splits off a more frequent group from a group (or an uncategorized
/// node of entities). The first improving candidate of the first such
/// node in preorder is applied to that node and to every node of its
/// class with the same shape.
pub fn find_subgroups(tree: &Tree, ctx: &SupportCtx<'_>, registry: &mut NameRegistry) -> Option<Tree> {
    let mut seen = HashSet::new();
    for p in scope(tree) {
        let node = tree.get(&p).unwrap();
        if !(node.label().is_group() || is_open(node)) || !all_entities(node) {
            continue;
        }
        if !seen.insert((ctx.partition.class_of(&p), skeleton(node))) {
            continue;
        }
        let base = ctx.of(&p);
        let cands = subgroup_candidates(node, registry);
        let at = p.child(0);
        let hit = cands.par_iter().position_first(|u| {
            let t = tree.replace(&p, u.clone()).unwrap();
            ctx.candidate(&t, &at, &p) > base
        });
        if let Some(i) = hit {
            let id = registry.group_id(&[group_shape(&cands[i].children()[0])]);
            let mut out = tree.clone();
            for q in equivalent_sites(tree, ctx.partition, &p) {
                let mut u = subgroup_candidates(tree.get(&q).unwrap(), registry).swap_remove(i);
                u.children_mut()[0].set_label(NodeLabel::group(&id));
                out = out.replace(&q, u).ok()?;
            }
            return Some(out);
        }
    }
    None
}

/// `at` and every other scope node of its class with the same skeleton,
/// in reverse preorder so earlier rewrites keep later positions valid.
fn equivalent_sites(tree: &Tree, partition: &Partition, at: &Position) -> Vec<Position> {
    let class = partition.class_of(at);
    let shape = skeleton(tree.get(at).unwrap());
    let mut out: Vec<Position> = scope(tree)
        .into_iter()
        .filter(|q| q == at || (partition.class_of(q) == class && skeleton(tree.get(q).unwrap()) == shape))
        .collect();
    out.reverse();
    out
}

/// Sibling combinations tried by `merge_groups`, largest first: subsets
/// of the group and entity children holding at least one group and no
/// two groups of one class, from `|groups/≡| + |entities|` down to 2.
pub fn merge_combinations(groups: &[(usize, Option<usize>)], entities: &[usize]) -> Vec<Vec<usize>> {
    let distinct: BTreeSet<Option<usize>> = groups.iter().map(|g| g.1).collect();
    let class: BTreeMap<usize, Option<usize>> = groups.iter().copied().collect();
    let max = distinct.len() + entities.len();
    let all: Vec<usize> = class.keys().copied().chain(entities.iter().copied()).sorted().collect();
    let mut out = Vec::new();
    for size in (2..=max.min(all.len())).rev() {
        for combo in all.iter().copied().combinations(size) {
            let gs: Vec<Option<usize>> = combo.iter().filter_map(|i| class.get(i).copied()).collect();
            if gs.is_empty() {
                continue;
            }
            let unique = gs.iter().enumerate().all(|(a, x)| x.is_none() || !gs[..a].contains(x));
            if unique {
                out.push(combo);
            }
        }
    }
    out
}

/// Merges sibling groups and entities of an uncategorized node into one
/// larger group when the result is strictly more frequent than every
/// group it absorbs. The merged group comes first among the siblings; if
/// it absorbs them all, it takes the node's place. Like `find_subgroups`,
/// the winning merge is applied to all equivalent nodes at once.
pub fn merge_groups(tree: &Tree, ctx: &SupportCtx<'_>, registry: &mut NameRegistry) -> Option<Tree> {
    let mut seen = HashSet::new();
    for p in scope(tree) {
        let node = tree.get(&p).unwrap();
        if !is_open(node) {
            continue;
        }
        let kids = node.children();
        let groups: Vec<(usize, Option<usize>)> = (0..kids.len())
            .filter(|&i| kids[i].label().is_group())
            .map(|i| (i, ctx.partition.class_of(&p.child(i))))
            .collect();
        let ents: Vec<usize> = (0..kids.len()).filter(|&i| kids[i].label().is_entity()).collect();
        if groups.is_empty() || groups.len() + ents.len() < 2 {
            continue;
        }
        if !seen.insert((ctx.partition.class_of(&p), skeleton(node))) {
            continue;
        }
        let combos = merge_combinations(&groups, &ents);
        let hit = combos.par_iter().position_first(|combo| {
            let base = combo
                .iter()
                .filter(|&&i| kids[i].label().is_group())
                .map(|&i| ctx.of(&p.child(i)))
                .max()
                .unwrap_or(0);
            let (sub, at) = merged(node, &p, combo, registry.peek_group(&combo_shape(node, combo)));
            let t = tree.replace(&p, sub).unwrap();
            ctx.candidate(&t, &at, &p) > base
        });
        if let Some(i) = hit {
            let combo = &combos[i];
            let id = registry.group_id(&[combo_shape(node, combo)]);
            let mut out = tree.clone();
            for q in equivalent_sites(tree, ctx.partition, &p) {
                let (sub, _) = merged(tree.get(&q).unwrap(), &q, combo, id.clone());
                out = out.replace(&q, sub).ok()?;
            }
            return Some(out);
        }
    }
    None
}

fn combo_shape(node: &Tree, combo: &[usize]) -> String {
    let kids = node.children();
    let mut names: Vec<&str> = combo.iter().flat_map(|&i| kids[i].entity_names()).collect();
    names.sort_unstable();
    names.dedup();
    names.join(" ")
}

/// `node` at `p` with the children in `combo` merged into one group;
/// also returns the merged group's position.
fn merged(node: &Tree, p: &Position, combo: &[usize], id: String) -> (Tree, Position) {
    let kids = node.children();
    let mut inner = Vec::new();
    for &i in combo {
        if kids[i].label().is_entity() {
            inner.push(kids[i].clone());
        } else {
            inner.extend(kids[i].children().iter().cloned());
        }
    }
    let group = Tree::new(NodeLabel::group(id), inner);
    if combo.len() == kids.len() {
        return (group, p.clone());
    }
    let mut children = vec![group];
    children.extend((0..kids.len()).filter(|i| !combo.contains(i)).map(|i| kids[i].clone()));
    (Tree::new(node.label().clone(), children), p.child(0))
}

/// Labels uncategorized nodes that link exactly two distinct groups as
/// relations, and distributes a group over a sibling collection of
/// groups, one relation per collection member.
pub fn find_relations(tree: &Tree, registry: &mut NameRegistry) -> Option<Tree> {
    let mut out = tree.clone();
    for p in scope(tree) {
        let node = tree.get(&p).unwrap();
        if !is_open(node) {
            continue;
        }
        let [a, b] = node.children() else { continue };
        let (la, lb) = (a.label(), b.label());
        if la.is_group() && lb.is_group() {
            if la != lb {
                let id = registry.rel_id(la, lb);
                out.get_mut(&p).unwrap().set_label(NodeLabel::rel(id));
            }
            continue;
        }
        let (group, coll, group_first) = match (la.is_group(), lb.is_group()) {
            (true, false) => (a, b, true),
            (false, true) => (b, a, false),
            _ => continue,
        };
        let members = coll.children();
        let ok = coll.label().is_coll()
            && !members.is_empty()
            && members.iter().all(|m| m.label().is_group() && m.label() != group.label());
        if !ok {
            continue;
        }
        let rels = members
            .iter()
            .map(|m| {
                let (x, y) = if group_first { (group, m) } else { (m, group) };
                let id = registry.rel_id(x.label(), y.label());
                Tree::new(NodeLabel::rel(id), vec![x.clone(), y.clone()])
            })
            .collect();
        *out.get_mut(&p).unwrap().children_mut() = rels;
    }
    (out != *tree).then_some(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CollectionKind {
    Groups,
    Relations,
}

impl CollectionKind {
    fn wants(self, l: &NodeLabel) -> bool {
        match self {
            CollectionKind::Groups => l.is_group(),
            CollectionKind::Relations => l.is_rel(),
        }
    }
}

type MemberKey = (Option<usize>, NodeLabel);

/// Wraps equivalent sibling groups (or relations) of the root and of
/// uncategorized nodes into collections: equivalent siblings are
/// collected, collections of equivalent members are merged and stray
/// equivalent siblings join their collection. Equivalent means same class
/// and same label. Untouched siblings keep their order and are followed
/// by the collections, ordered by first member.
pub fn find_collections(
    tree: &Tree,
    partition: &Partition,
    kind: CollectionKind,
    registry: &mut NameRegistry,
) -> Option<Tree> {
    let mut targets = vec![Position::root()];
    targets.extend(scope(tree).into_iter().filter(|p| is_open(tree.get(p).unwrap())));
    let mut out = tree.clone();
    for p in targets.into_iter().rev() {
        let kids = out.get(&p).unwrap().children().to_vec();
        let key = |q: Position, t: &Tree| -> Option<MemberKey> {
            kind.wants(t.label()).then(|| (partition.class_of(&q), t.label().clone()))
        };
        let mut direct: BTreeMap<MemberKey, Vec<usize>> = BTreeMap::new();
        let mut colls: BTreeMap<MemberKey, Vec<usize>> = BTreeMap::new();
        for (i, c) in kids.iter().enumerate() {
            let q = p.child(i);
            if let Some(k) = key(q.clone(), c) {
                direct.entry(k).or_default().push(i);
            } else if c.label().is_coll() && !c.is_leaf() {
                let ks: Vec<Option<MemberKey>> =
                    c.children().iter().enumerate().map(|(j, m)| key(q.child(j), m)).collect();
                if let Some(Some(k)) = ks.first() {
                    if ks.iter().all(|x| x.as_ref() == Some(k)) {
                        colls.entry(k.clone()).or_default().push(i);
                    }
                }
            }
        }
        let mut used = BTreeSet::new();
        let mut made: Vec<(usize, Tree)> = Vec::new();
        let keys: BTreeSet<&MemberKey> = direct.keys().chain(colls.keys()).collect();
        for k in keys {
            let d = direct.get(k).map_or(&[][..], Vec::as_slice);
            let c = colls.get(k).map_or(&[][..], Vec::as_slice);
            if !(d.len() >= 2 || (!c.is_empty() && !d.is_empty()) || c.len() >= 2) {
                continue;
            }
            let mut idx: Vec<usize> = d.iter().chain(c).copied().collect();
            idx.sort_unstable();
            let mut members = Vec::new();
            for &i in &idx {
                used.insert(i);
                if kids[i].label().is_coll() {
                    members.extend(kids[i].children().iter().cloned());
                } else {
                    members.push(kids[i].clone());
                }
            }
            let id = registry.coll_id(&k.1);
            made.push((idx[0], Tree::new(NodeLabel::coll(id), members)));
        }
        if made.is_empty() {
            continue;
        }
        made.sort_by_key(|m| m.0);
        let mut children: Vec<Tree> =
            kids.iter().enumerate().filter(|(i, _)| !used.contains(i)).map(|(_, c)| c.clone()).collect();
        children.extend(made.into_iter().map(|m| m.1));
        *out.get_mut(&p).unwrap().children_mut() = children;
    }
    (out != *tree).then_some(out)
}

/// Dissolves, bottom-up, every non-root uncategorized node that has an
/// entity child, promoting its children.
pub fn reduce_bottom(tree: &Tree) -> Option<Tree> {
    fn go(t: &Tree, root: bool) -> Vec<Tree> {
        if t.is_leaf() || t.label().is_entity() || t.label().is_categorized() {
            return vec![t.clone()];
        }
        let children: Vec<Tree> = t.children().iter().flat_map(|c| go(c, false)).collect();
        if !root && t.label().is_uncategorized() && children.iter().any(|c| c.label().is_entity()) {
            return children;
        }
        vec![Tree::new(t.label().clone(), children)]
    }
    let out = go(tree, true).pop().unwrap();
    (out != *tree).then_some(out)
}

/// Deletes every remaining non-root uncategorized node, promoting its
/// children. Applies only once no uncategorized node holds an entity.
pub fn reduce_top(tree: &Tree) -> Option<Tree> {
    let stray = scope(tree).into_iter().any(|p| {
        let n = tree.get(&p).unwrap();
        n.label().is_uncategorized() && n.children().iter().any(|c| c.label().is_entity())
    });
    if stray {
        return None;
    }
    fn go(t: &Tree, root: bool) -> Vec<Tree> {
        if t.is_leaf() || t.label().is_entity() {
            return vec![t.clone()];
        }
        let children: Vec<Tree> = t.children().iter().flat_map(|c| go(c, false)).collect();
        if !root && t.label().is_uncategorized() {
            return children;
        }
        vec![Tree::new(t.label().clone(), children)]
    }
    let out = go(tree, true).pop().unwrap();
    (out != *tree).then_some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bracket::parse_tree;
    use crate::similarity::equivalence_classes;

    fn t(s: &str) -> Tree {
        parse_tree(s).unwrap()
    }

    fn blocks(xs: &[&[&str]]) -> Partition {
        Partition::from_blocks(xs.iter().map(|b| b.iter().map(|p| p.parse().unwrap()).collect()).collect())
    }

    const NESTED_ENTITIES: &str = "(ROOT (A (B (ENT_E2 t2)) (C (D (ENT_E3 t3)) (ENT_E4 t4))) \
                        (F (ENT_E5 t5) (G (H (I (ENT_E6 t6)) (ENT_E7 t7)) (J (ENT_E8 t8)))))";

    fn nested_partition() -> Partition {
        blocks(&[&["0"], &["1"], &["00", "110"], &["01"], &["010", "111"], &["11"], &["1100"]])
    }

    #[test]
    fn find_groups_golden() {
        let mut reg = NameRegistry::new();
        let out = find_groups(&t(NESTED_ENTITIES), &nested_partition(), 2, &mut reg).unwrap();
        let expected = t("(ROOT (A (GROUP_1 (ENT_E2 t2)) (C (GROUP_0 (ENT_E3 t3)) (ENT_E4 t4))) \
                          (F (ENT_E5 t5) (G (GROUP_1 (ENT_E6 t6) (ENT_E7 t7)) (GROUP_0 (ENT_E8 t8)))))");
        assert_eq!(out, expected);
        assert!(out.get(&"1100".parse().unwrap()).unwrap().label().is_entity());
    }

    #[test]
    fn find_groups_no_change_cases() {
        let mut reg = NameRegistry::new();
        assert!(find_groups(&t(NESTED_ENTITIES), &nested_partition(), 3, &mut reg).is_none());
        let all = t("(ROOT (GROUP_0 (ENT_A a)) (GROUP_0 (ENT_A b)))");
        let p = equivalence_classes(&all, &scope(&all), &SimParams::default());
        assert!(find_groups(&all, &p, 1, &mut reg).is_none());
    }

    #[test]
    fn find_groups_nested_members_keep_ancestor() {
        let tree = t("(ROOT (S (NP (ENT_A a) (ENT_B b)) (ENT_C c)) (S (NP (ENT_A d) (ENT_B e)) (ENT_C f)))");
        let pos = |s: &str| s.parse::<Position>().unwrap();
        let p = Partition::from_blocks(vec![vec![pos("0"), pos("00"), pos("1"), pos("10")]]);
        let out = find_groups(&tree, &p, 2, &mut NameRegistry::new()).unwrap();
        assert_eq!(
            out,
            t("(ROOT (GROUP_0 (ENT_A a) (ENT_B b) (ENT_C c)) (GROUP_0 (ENT_A d) (ENT_B e) (ENT_C f)))")
        );
    }

    #[test]
    fn subgroup_candidate_shapes() {
        let node = t("(GROUP_0 (ENT_E1 a) (ENT_E2 b) (ENT_E3 c))");
        let got: Vec<String> = subgroup_candidates(&node, &NameRegistry::new())
            .iter()
            .map(crate::bracket::write_tree)
            .collect();
        assert_eq!(
            &got[..3],
            [
                "(_ (GROUP_0 (ENT_E1 a) (ENT_E2 b)) (ENT_E3 c))",
                "(_ (GROUP_0 (ENT_E1 a) (ENT_E3 c)) (ENT_E2 b))",
                "(_ (GROUP_0 (ENT_E2 b) (ENT_E3 c)) (ENT_E1 a))",
            ]
        );
        assert_eq!(got.len(), 6);
        assert!(subgroup_candidates(&t("(GROUP_0 (ENT_A a))"), &NameRegistry::new()).is_empty());
    }

    #[test]
    fn subgroup_split_when_more_frequent() {
        let tree = t("(ROOT (S (GROUP_0 (ENT_A a) (ENT_B b))) (S (GROUP_0 (ENT_A a) (ENT_B b))) \
                      (S (GROUP_0 (ENT_A a) (ENT_B b))) (S (GROUP_1 (ENT_A a) (ENT_B b) (ENT_C c))))");
        let params = SimParams { tau: 0.8, ..SimParams::default() };
        let p = equivalence_classes(&tree, &scope(&tree), &params);
        let lone: Position = "30".parse().unwrap();
        assert_eq!(p.support(p.class_of(&lone).unwrap()), 2);
        let mut reg = NameRegistry::for_instance(&tree);
        let ctx = SupportCtx { partition: &p, params };
        let out = find_subgroups(&tree, &ctx, &mut reg).unwrap();
        assert_eq!(
            crate::bracket::write_tree(out.get(&lone).unwrap()),
            "(_ (GROUP_0 (ENT_A a) (ENT_B b)) (ENT_C c))"
        );
        assert_eq!(out.entity_names(), tree.entity_names());
    }

    #[test]
    fn subgroup_no_change_without_gain() {
        let tree = t("(ROOT (S (GROUP_0 (ENT_A a) (ENT_B b))) (S (GROUP_0 (ENT_A a) (ENT_B b))))");
        let params = SimParams::default();
        let p = equivalence_classes(&tree, &scope(&tree), &params);
        let ctx = SupportCtx { partition: &p, params };
        assert!(find_subgroups(&tree, &ctx, &mut NameRegistry::for_instance(&tree)).is_none());
    }

    #[test]
    fn merge_combinations_golden() {
        // u0 and u2 are equivalent groups, u3 and u4 entities
        let groups = [(0, Some(0)), (1, Some(1)), (2, Some(0))];
        let combos = merge_combinations(&groups, &[3, 4]);
        let of = |n: usize| combos.iter().filter(|c| c.len() == n).cloned().collect::<Vec<_>>();
        assert_eq!(of(4), vec![vec![0, 1, 3, 4], vec![1, 2, 3, 4]]);
        assert_eq!(
            of(3),
            vec![vec![0, 1, 3], vec![0, 1, 4], vec![0, 3, 4], vec![1, 2, 3], vec![1, 2, 4], vec![1, 3, 4], vec![2, 3, 4]]
        );
        assert!(combos.iter().all(|c| c.len() >= 2));
        assert!(merge_combinations(&[(0, Some(0))], &[]).is_empty());
    }

    #[test]
    fn merge_groups_absorbs_sibling_entity() {
        let tree = t("(ROOT (S (GROUP_0 (ENT_A a) (ENT_B b) (ENT_C c))) (S (GROUP_0 (ENT_A a) (ENT_B b) (ENT_C c))) \
                      (S (GROUP_0 (ENT_A a) (ENT_B b) (ENT_C c))) (S (GROUP_1 (ENT_A a) (ENT_B b)) (ENT_C c)))");
        let params = SimParams { tau: 0.9, ..SimParams::default() };
        let p = equivalence_classes(&tree, &scope(&tree), &params);
        let mut reg = NameRegistry::for_instance(&tree);
        let ctx = SupportCtx { partition: &p, params };
        let out = merge_groups(&tree, &ctx, &mut reg).unwrap();
        assert_eq!(
            crate::bracket::write_tree(out.get(&"3".parse().unwrap()).unwrap()),
            "(GROUP_0 (ENT_A a) (ENT_B b) (ENT_C c))"
        );
    }

    #[test]
    fn merge_groups_no_change_cases() {
        let tree = t("(ROOT (S (GROUP_0 (ENT_A a) (ENT_B b))) (S (GROUP_0 (ENT_A a) (ENT_B b))))");
        let params = SimParams::default();
        let p = equivalence_classes(&tree, &scope(&tree), &params);
        let ctx = SupportCtx { partition: &p, params };
        assert!(merge_groups(&tree, &ctx, &mut NameRegistry::for_instance(&tree)).is_none());
    }

    #[test]
    fn relation_between_two_groups() {
        let tree = t("(ROOT (X (GROUP_1 (ENT_A a)) (GROUP_2 (ENT_B b))) (Y (GROUP_1 (ENT_A a)) (GROUP_1 (ENT_A c))))");
        let mut reg = NameRegistry::new();
        let out = find_relations(&tree, &mut reg).unwrap();
        assert_eq!(
            out,
            t("(ROOT (REL_0 (GROUP_1 (ENT_A a)) (GROUP_2 (ENT_B b))) (Y (GROUP_1 (ENT_A a)) (GROUP_1 (ENT_A c))))")
        );
        assert!(find_relations(&out, &mut reg).is_none());
    }

    #[test]
    fn relation_distributes_over_collection() {
        let tree = t("(ROOT (X (GROUP_1 (ENT_A a)) (COLL_0 (GROUP_2 (ENT_B b)) (GROUP_2 (ENT_B c)))))");
        let out = find_relations(&tree, &mut NameRegistry::new()).unwrap();
        assert_eq!(
            out,
            t("(ROOT (X (REL_0 (GROUP_1 (ENT_A a)) (GROUP_2 (ENT_B b))) (REL_0 (GROUP_1 (ENT_A a)) (GROUP_2 (ENT_B c)))))")
        );
    }

    #[test]
    fn collections_three_steps() {
        let tree = t("(ROOT (X (GROUP_1 (ENT_A a)) (GROUP_2 (ENT_B b)) (GROUP_2 (ENT_B c)) (GROUP_3 (ENT_C d)) \
                      (COLL_0 (GROUP_1 (ENT_A e)) (GROUP_1 (ENT_A f)))))");
        let p = equivalence_classes(&tree, &scope(&tree), &SimParams::default());
        let mut reg = NameRegistry::for_instance(&tree);
        let out = find_collections(&tree, &p, CollectionKind::Groups, &mut reg).unwrap();
        assert_eq!(
            out,
            t("(ROOT (X (GROUP_3 (ENT_C d)) (COLL_0 (GROUP_1 (ENT_A a)) (GROUP_1 (ENT_A e)) (GROUP_1 (ENT_A f))) \
               (COLL_1 (GROUP_2 (ENT_B b)) (GROUP_2 (ENT_B c)))))")
        );
        let p = equivalence_classes(&out, &scope(&out), &SimParams::default());
        assert!(find_collections(&out, &p, CollectionKind::Groups, &mut reg).is_none());
        assert!(find_collections(&tree, &p, CollectionKind::Relations, &mut reg).is_none());
    }

    #[test]
    fn collections_at_root_and_distinct_classes() {
        let tree = t("(ROOT (REL_0 (GROUP_0 (ENT_A a)) (GROUP_1 (ENT_B b))) (REL_0 (GROUP_0 (ENT_A c)) (GROUP_1 (ENT_B d))))");
        let p = equivalence_classes(&tree, &scope(&tree), &SimParams::default());
        let out = find_collections(&tree, &p, CollectionKind::Relations, &mut NameRegistry::new()).unwrap();
        assert_eq!(out.children().len(), 1);
        assert_eq!(out.children()[0].label(), &NodeLabel::coll("0"));
        let distinct = t("(ROOT (X (GROUP_0 (ENT_A a)) (GROUP_1 (ENT_B b)) (GROUP_2 (ENT_C c))))");
        let p = equivalence_classes(&distinct, &scope(&distinct), &SimParams::default());
        assert!(find_collections(&distinct, &p, CollectionKind::Groups, &mut NameRegistry::new()).is_none());
    }

    #[test]
    fn reductions() {
        let chain = t("(ROOT (S (X (ENT_A a))))");
        assert_eq!(reduce_bottom(&chain).unwrap(), t("(ROOT (ENT_A a))"));
        assert!(reduce_top(&chain).is_none());
        let done = t("(ROOT (COLL_0 (GROUP_0 (ENT_A a)) (GROUP_0 (ENT_A b))))");
        assert!(reduce_bottom(&done).is_none());
        assert!(reduce_top(&done).is_none());
        let upper = t("(ROOT (S (GROUP_0 (ENT_A a)) (GROUP_1 (ENT_B b))))");
        assert!(reduce_bottom(&upper).is_none());
        let out = reduce_top(&upper).unwrap();
        assert_eq!(out, t("(ROOT (GROUP_0 (ENT_A a)) (GROUP_1 (ENT_B b)))"));
        assert!(crate::tree::is_tree_domain(&out.domain()));
    }

    #[test]
    fn scope_skips_entities_tokens_and_root() {
        let tree = t("(ROOT (S (ENT_A (NN a)) (NP (ENT_B b) x)))");
        let got: Vec<String> = scope(&tree).iter().map(ToString::to_string).collect();
        assert_eq!(got, ["0", "0.1"]);
    }
}
