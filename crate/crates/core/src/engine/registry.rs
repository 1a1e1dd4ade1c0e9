use std::collections::BTreeMap;

use crate::tree::{NodeLabel, Tree};

/// Hands out GROUP/REL/COLL ids. Groups are keyed by the entity-name set
/// of their instances, relations by their pair of group labels and
/// collections by their member label. Ids are dense naturals in creation
/// order and a key never changes id.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NameRegistry {
    next_group: usize,
    next_rel: usize,
    next_coll: usize,
    groups: BTreeMap<String, String>,
    rels: BTreeMap<(String, String), String>,
    colls: BTreeMap<String, String>,
}

/// Sorted, duplicate-free entity names of a sub-tree, space separated.
pub fn group_shape(t: &Tree) -> String {
    let mut names = t.entity_names();
    names.sort_unstable();
    names.dedup();
    names.join(" ")
}

fn bump(next: &mut usize, name: &str) {
    if let Ok(n) = name.parse::<usize>() {
        *next = (*next).max(n + 1);
    }
}

impl NameRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// A registry that knows the labels already present in `tree`, so
    /// fresh ids never collide with them.
    pub fn for_instance(tree: &Tree) -> Self {
        let mut r = Self::new();
        for (_, n) in tree.preorder() {
            match n.label() {
                NodeLabel::Group(g) => {
                    bump(&mut r.next_group, g);
                    r.groups.entry(group_shape(n)).or_insert_with(|| g.clone());
                }
                NodeLabel::Rel(x) => {
                    bump(&mut r.next_rel, x);
                    if let [a, b] = n.children() {
                        let key = (a.label().to_string(), b.label().to_string());
                        r.rels.entry(key).or_insert_with(|| x.clone());
                    }
                }
                NodeLabel::Coll(c) => {
                    bump(&mut r.next_coll, c);
                    if let Some(m) = n.children().first() {
                        r.colls.entry(m.label().to_string()).or_insert_with(|| c.clone());
                    }
                }
                _ => {}
            }
        }
        r
    }

    /// The id `group_id(&[shape])` would return, without registering.
    pub fn peek_group(&self, shape: &str) -> String {
        self.groups.get(shape).cloned().unwrap_or_else(|| self.next_group.to_string())
    }

    /// Id for a class of group instances with the given shapes: the id of
    /// the first already known shape, else a fresh one. Unknown shapes are
    /// registered under the result.
    pub fn group_id(&mut self, shapes: &[String]) -> String {
        let id = match shapes.iter().find_map(|s| self.groups.get(s)) {
            Some(id) => id.clone(),
            None => {
                self.next_group += 1;
                (self.next_group - 1).to_string()
            }
        };
        self.claim_shapes(shapes, &id);
        id
    }

    pub(crate) fn claim_shapes(&mut self, shapes: &[String], id: &str) {
        for s in shapes {
            self.groups.entry(s.clone()).or_insert_with(|| id.to_string());
        }
    }

    pub fn rel_id(&mut self, a: &NodeLabel, b: &NodeLabel) -> String {
        let next = &mut self.next_rel;
        self.rels
            .entry((a.to_string(), b.to_string()))
            .or_insert_with(|| {
                *next += 1;
                (*next - 1).to_string()
            })
            .clone()
    }

    pub fn coll_id(&mut self, member: &NodeLabel) -> String {
        let next = &mut self.next_coll;
        self.colls
            .entry(member.to_string())
            .or_insert_with(|| {
                *next += 1;
                (*next - 1).to_string()
            })
            .clone()
    }
}
