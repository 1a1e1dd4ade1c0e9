use std::collections::{BTreeMap, BTreeSet};

use super::{CondensedGrammar, Rule, Symbol};
use crate::similarity::{label_classes, Partition};
use crate::tree::{NodeLabel, Position, Tree};

/// Classes holding at least one child of a member of `block`.
pub fn succ(tree: &Tree, partition: &Partition, block: usize) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for u in partition.block(block) {
        if let Some(n) = tree.get(u) {
            for i in 0..n.children().len() {
                if let Some(c) = partition.class_of(&u.child(i)) {
                    out.insert(c);
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuotientNode {
    pub class: usize,
    pub label: NodeLabel,
    /// Set when two members of this node share a parent (`+`).
    pub repeated: bool,
    /// Instance positions summarised by this node.
    pub members: Vec<Position>,
    pub children: Vec<QuotientNode>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuotientTree {
    pub root: QuotientNode,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no class of the partition contains the root position")]
pub struct MissingRootClass;

impl QuotientTree {
    /// Quotient nodes with their positions, in preorder.
    pub fn nodes(&self) -> Vec<(Position, &QuotientNode)> {
        let mut out = Vec::new();
        let mut stack = vec![(Position::root(), &self.root)];
        while let Some((p, n)) = stack.pop() {
            for (i, c) in n.children.iter().enumerate().rev() {
                stack.push((p.child(i), c));
            }
            out.push((p, n));
        }
        out
    }

    pub fn repeated(&self) -> BTreeSet<Position> {
        self.nodes()
            .into_iter()
            .filter(|(_, n)| n.repeated)
            .map(|(p, _)| p)
            .collect()
    }

    /// The quotient as a plain labeled tree (`+` marks dropped).
    pub fn to_tree(&self) -> Tree {
        fn conv(n: &QuotientNode) -> Tree {
            Tree::new(n.label.clone(), n.children.iter().map(conv).collect())
        }
        conv(&self.root)
    }
}

/// Builds the quotient tree of `tree` under `partition`.
///
/// Each quotient node stands for a set of instance positions of one class;
/// its children group the instance children of those positions by class,
/// ordered by smallest member position. A class reached from several
/// parents is therefore duplicated under each of them.
pub fn quotient(tree: &Tree, partition: &Partition) -> Result<QuotientTree, MissingRootClass> {
    let root_class = partition.class_of(&Position::root()).ok_or(MissingRootClass)?;
    Ok(QuotientTree { root: expand(tree, partition, root_class, vec![Position::root()], false) })
}

fn expand(tree: &Tree, partition: &Partition, class: usize, members: Vec<Position>, repeated: bool) -> QuotientNode {
    let mut groups: BTreeMap<usize, Vec<Position>> = BTreeMap::new();
    for u in &members {
        let n = tree.get(u).expect("member in tree");
        for i in 0..n.children().len() {
            let c = u.child(i);
            if let Some(k) = partition.class_of(&c) {
                groups.entry(k).or_default().push(c);
            }
        }
    }
    let mut groups: Vec<(usize, Vec<Position>)> = groups.into_iter().collect();
    for (_, g) in groups.iter_mut() {
        g.sort();
    }
    groups.sort_by(|a, b| a.1[0].cmp(&b.1[0]));
    let children = groups
        .into_iter()
        .map(|(k, g)| {
            let rep = has_shared_parent(&g);
            expand(tree, partition, k, g, rep)
        })
        .collect();
    let label = tree.label_at(&members[0]).expect("member in tree").clone();
    QuotientNode { class, label, repeated, members, children }
}

fn has_shared_parent(g: &[Position]) -> bool {
    let mut seen = BTreeSet::new();
    g.iter().any(|p| !seen.insert(p.parent()))
}

/// Extracts the condensed grammar of an instance.
///
/// One rule per distinct internal label, in order of first appearance;
/// entity sub-trees are terminals and yield no rule. A rule's right-hand
/// side is a supersequence of the run-compressed child label sequences of
/// all nodes with that label, so every node realises a subsequence of it:
/// the repeat-free order they agree on if there is one, else a pairwise
/// shortest common supersequence. `+` marks come from the quotient tree,
/// and collection rules always repeat their member.
pub fn extract_grammar(tree: &Tree) -> CondensedGrammar {
    let partition = label_classes(tree);
    let q = quotient(tree, &partition).expect("label classes cover the root");

    let mut plus: BTreeSet<(String, String)> = BTreeSet::new();
    for (_, n) in q.nodes() {
        for c in &n.children {
            if c.repeated {
                plus.insert((n.label.to_string(), c.label.to_string()));
            }
        }
    }

    let mut order: Vec<String> = Vec::new();
    let mut seqs: BTreeMap<String, Vec<Vec<String>>> = BTreeMap::new();
    let mut is_coll: BTreeSet<String> = BTreeSet::new();
    collect(tree, &mut order, &mut seqs, &mut is_coll);

    let rules = order
        .into_iter()
        .map(|lhs| {
            let runs = &seqs[&lhs];
            let body = ordered_merge(runs).unwrap_or_else(|| {
                runs[1..].iter().fold(runs[0].clone(), |acc, r| supersequence(&acc, r))
            });
            let rhs = body
                .into_iter()
                .map(|name| {
                    let p = is_coll.contains(&lhs) || plus.contains(&(lhs.clone(), name.clone()));
                    Symbol { name, plus: p }
                })
                .collect();
            Rule::new(lhs, rhs)
        })
        .collect();
    CondensedGrammar::new(rules)
}

fn collect(
    t: &Tree,
    order: &mut Vec<String>,
    seqs: &mut BTreeMap<String, Vec<Vec<String>>>,
    is_coll: &mut BTreeSet<String>,
) {
    if t.is_leaf() || t.label().is_entity() {
        return;
    }
    let lhs = t.label().to_string();
    let mut run: Vec<String> = Vec::new();
    for c in t.children() {
        let name = c.label().to_string();
        if run.last() != Some(&name) {
            run.push(name);
        }
    }
    match seqs.get_mut(&lhs) {
        Some(all) => {
            if !all.contains(&run) {
                all.push(run);
            }
        }
        None => {
            order.push(lhs.clone());
            if t.label().is_coll() {
                is_coll.insert(lhs.clone());
            }
            seqs.insert(lhs, vec![run]);
        }
    }
    for c in t.children() {
        collect(c, order, seqs, is_coll);
    }
}

/// A repeat-free sequence containing every input as a subsequence, if
/// one exists: the inputs must be repeat-free and agree on the relative
/// order of shared symbols. Ties go to the earliest first appearance.
pub(crate) fn ordered_merge(seqs: &[Vec<String>]) -> Option<Vec<String>> {
    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    let mut names: Vec<&str> = Vec::new();
    for seq in seqs {
        let distinct: BTreeSet<&String> = seq.iter().collect();
        if distinct.len() != seq.len() {
            return None;
        }
        for s in seq {
            index.entry(s).or_insert_with(|| {
                names.push(s);
                names.len() - 1
            });
        }
    }
    let mut succ: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); names.len()];
    for seq in seqs {
        for w in seq.windows(2) {
            succ[index[w[0].as_str()]].insert(index[w[1].as_str()]);
        }
    }
    let mut indegree = vec![0usize; names.len()];
    for s in succ.iter().flatten() {
        indegree[*s] += 1;
    }
    let mut ready: BTreeSet<usize> = (0..names.len()).filter(|&i| indegree[i] == 0).collect();
    let mut out = Vec::with_capacity(names.len());
    while let Some(i) = ready.pop_first() {
        out.push(names[i].to_string());
        for &j in &succ[i] {
            indegree[j] -= 1;
            if indegree[j] == 0 {
                ready.insert(j);
            }
        }
    }
    (out.len() == names.len()).then_some(out)
}

/// Shortest common supersequence via longest common subsequence; ties
/// keep elements of `a` first.
fn supersequence(a: &[String], b: &[String]) -> Vec<String> {
    let (n, m) = (a.len(), b.len());
    let mut lcs = vec![vec![0usize; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            lcs[i][j] = if a[i] == b[j] {
                lcs[i + 1][j + 1] + 1
            } else {
                lcs[i + 1][j].max(lcs[i][j + 1])
            };
        }
    }
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::with_capacity(n + m - lcs[0][0]);
    while i < n && j < m {
        if a[i] == b[j] {
            out.push(a[i].clone());
            i += 1;
            j += 1;
        } else if lcs[i + 1][j] >= lcs[i][j + 1] {
            out.push(a[i].clone());
            i += 1;
        } else {
            out.push(b[j].clone());
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}
