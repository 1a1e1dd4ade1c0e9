//! Contextual sub-tree similarity and τ-equivalence classes.
//!
//! `sim_f(x, y)` averages a base similarity `f` over the tree-ancestors
//! of `x` and `y` with harmonic weights `1/(i+1)`. Two sub-trees are
//! τ-equivalent when a chain of pairs with `sim_f ≥ τ` connects them,
//! which is exactly single-link clustering cut at τ.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;

use petgraph::unionfind::UnionFind;
use rayon::prelude::*;

use crate::tree::{NodeLabel, Position, Tree};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum SimilarityKind {
    /// Jaccard index over the set of entity names in each sub-tree.
    #[default]
    JaccardEntityNames,
    /// Jaccard index over the multiset of entity names.
    LabelMultisetJaccard,
    /// `1 - d / max(|x|, |y|)` with `d` the unit-cost tree edit distance.
    TreeEditSimilarity,
}

impl fmt::Display for SimilarityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SimilarityKind::JaccardEntityNames => "jaccard",
            SimilarityKind::LabelMultisetJaccard => "jaccard-multiset",
            SimilarityKind::TreeEditSimilarity => "tree-edit",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown similarity `{0}` (expected jaccard, jaccard-multiset or tree-edit)")]
pub struct UnknownSimilarity(String);

impl FromStr for SimilarityKind {
    type Err = UnknownSimilarity;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "jaccard" => Ok(SimilarityKind::JaccardEntityNames),
            "jaccard-multiset" => Ok(SimilarityKind::LabelMultisetJaccard),
            "tree-edit" => Ok(SimilarityKind::TreeEditSimilarity),
            other => Err(UnknownSimilarity(other.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimParams {
    pub kind: SimilarityKind,
    pub tau: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams { kind: SimilarityKind::default(), tau: 0.7 }
    }
}

/// Weighted average of per-level similarities `f(i)` for
/// `i = 0..=depth_min`, with weights `1/(i+1)`.
pub fn contextual_similarity(depth_min: usize, mut f: impl FnMut(usize) -> f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..=depth_min {
        let w = 1.0 / (i as f64 + 1.0);
        num += w * f(i);
        den += w;
    }
    num / den
}

/// Jaccard index of two sorted slices; 1 when both are empty.
///
/// With duplicate-free input this is the set Jaccard index; with repeats
/// the merge counts `Σ min / Σ max`, the multiset variant.
pub fn jaccard_sorted<T: Ord>(a: &[T], b: &[T]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let (mut i, mut j, mut inter) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    inter as f64 / (a.len() + b.len() - inter) as f64
}

/// Per-node features of one tree, indexed by preorder rank.
pub struct SimIndex<'t> {
    tree: &'t Tree,
    kind: SimilarityKind,
    positions: Vec<Position>,
    rank: HashMap<Position, usize>,
    parent: Vec<Option<usize>>,
    names: Vec<Vec<u32>>,
    bags: Vec<Vec<u32>>,
    ted_cache: Mutex<HashMap<(usize, usize), f64>>,
}

impl<'t> SimIndex<'t> {
    pub fn new(tree: &'t Tree, kind: SimilarityKind) -> Self {
        let nodes = tree.preorder();
        let positions: Vec<Position> = nodes.iter().map(|(p, _)| p.clone()).collect();
        let rank: HashMap<Position, usize> = positions.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
        let parent = positions.iter().map(|p| p.parent().map(|q| rank[&q])).collect();

        let mut ids: BTreeMap<&str, u32> = BTreeMap::new();
        for (_, n) in &nodes {
            if let NodeLabel::Entity(e) = n.label() {
                let next = ids.len() as u32;
                ids.entry(e.as_str()).or_insert(next);
            }
        }
        // entity names per node, accumulated bottom-up (reverse preorder)
        let mut bags: Vec<Vec<u32>> = vec![Vec::new(); positions.len()];
        for i in (0..positions.len()).rev() {
            if let NodeLabel::Entity(e) = nodes[i].1.label() {
                bags[i].push(ids[e.as_str()]);
            }
            bags[i].sort_unstable();
            if let Some(p) = positions[i].parent() {
                let own = std::mem::take(&mut bags[i]);
                bags[rank[&p]].extend_from_slice(&own);
                bags[i] = own;
            }
        }
        let names = bags
            .iter()
            .map(|b| {
                let mut s = b.clone();
                s.dedup();
                s
            })
            .collect();
        SimIndex { tree, kind, positions, rank, parent, names, bags, ted_cache: Mutex::new(HashMap::new()) }
    }

    pub fn tree(&self) -> &'t Tree {
        self.tree
    }

    pub fn rank(&self, p: &Position) -> Option<usize> {
        self.rank.get(p).copied()
    }

    pub fn position(&self, rank: usize) -> &Position {
        &self.positions[rank]
    }

    /// Base similarity `f` between the nodes of rank `a` and `b`.
    pub fn f(&self, a: usize, b: usize) -> f64 {
        if a == b {
            return 1.0;
        }
        match self.kind {
            SimilarityKind::JaccardEntityNames => jaccard_sorted(&self.names[a], &self.names[b]),
            SimilarityKind::LabelMultisetJaccard => jaccard_sorted(&self.bags[a], &self.bags[b]),
            SimilarityKind::TreeEditSimilarity => {
                let key = (a.min(b), a.max(b));
                if let Some(&v) = self.ted_cache.lock().unwrap().get(&key) {
                    return v;
                }
                let x = self.tree.get(&self.positions[a]).unwrap();
                let y = self.tree.get(&self.positions[b]).unwrap();
                let v = ted::similarity(x, y);
                self.ted_cache.lock().unwrap().insert(key, v);
                v
            }
        }
    }

    /// `sim_f` between the nodes of rank `a` and `b`.
    pub fn sim(&self, a: usize, b: usize) -> f64 {
        let da = self.positions[a].depth();
        let db = self.positions[b].depth();
        let d = da.min(db);
        let (mut x, mut y) = (a, b);
        let mut levels = Vec::with_capacity(d + 1);
        for i in 0..=d {
            if x == y {
                // identical ancestors from here up
                levels.resize(d + 1, 1.0);
                break;
            }
            levels.push(self.f(x, y));
            if i < d {
                x = self.parent[x].unwrap();
                y = self.parent[y].unwrap();
            }
        }
        contextual_similarity(d, |i| levels[i])
    }

    pub fn sim_positions(&self, x: &Position, y: &Position) -> Option<f64> {
        Some(self.sim(self.rank(x)?, self.rank(y)?))
    }
}

/// `sim_f(T|_x, T|_y)`.
pub fn sim(tree: &Tree, x: &Position, y: &Position, kind: SimilarityKind) -> Option<f64> {
    SimIndex::new(tree, kind).sim_positions(x, y)
}

/// Jaccard over the entity-name sets of two sub-trees.
pub fn jaccard_entity_names(x: &Tree, y: &Tree) -> f64 {
    let mut a: Vec<&str> = x.entity_names();
    let mut b: Vec<&str> = y.entity_names();
    a.sort_unstable();
    a.dedup();
    b.sort_unstable();
    b.dedup();
    jaccard_sorted(&a, &b)
}

/// A partition of a set of positions into non-empty disjoint blocks.
/// Blocks are sorted by their smallest member and members are sorted.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Partition {
    blocks: Vec<Vec<Position>>,
    class_of: BTreeMap<Position, usize>,
}

impl Partition {
    pub fn from_blocks(blocks: Vec<Vec<Position>>) -> Self {
        let mut blocks: Vec<Vec<Position>> = blocks
            .into_iter()
            .filter(|b| !b.is_empty())
            .map(|mut b| {
                b.sort();
                b
            })
            .collect();
        blocks.sort();
        let mut class_of = BTreeMap::new();
        for (i, b) in blocks.iter().enumerate() {
            for p in b {
                let prev = class_of.insert(p.clone(), i);
                assert!(prev.is_none(), "position {p} occurs in two blocks");
            }
        }
        Partition { blocks, class_of }
    }

    pub fn blocks(&self) -> &[Vec<Position>] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &[Position] {
        &self.blocks[i]
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn class_of(&self, p: &Position) -> Option<usize> {
        self.class_of.get(p).copied()
    }

    pub fn same_class(&self, a: &Position, b: &Position) -> bool {
        matches!((self.class_of(a), self.class_of(b)), (Some(x), Some(y)) if x == y)
    }

    /// Number of members of the class (its support).
    pub fn support(&self, class: usize) -> usize {
        self.blocks[class].len()
    }

    pub fn covered(&self) -> impl Iterator<Item = &Position> {
        self.class_of.keys()
    }

    /// `true` when every block of `self` lies inside a block of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        self.blocks.iter().all(|b| {
            let c = coarser.class_of(&b[0]);
            c.is_some() && b.iter().all(|p| coarser.class_of(p) == c)
        })
    }
}

/// Single-link clustering of `0..n` cut at `tau`: indices end up in the
/// same block iff a chain of pairs with `sim ≥ tau` links them. Blocks
/// are sorted by smallest member.
pub fn cluster(n: usize, tau: f64, sim: impl Fn(usize, usize) -> f64 + Sync) -> Vec<Vec<usize>> {
    let edges: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| ((i + 1)..n).filter(|&j| sim(i, j) >= tau).collect())
        .collect();
    let mut uf = UnionFind::<usize>::new(n);
    for (i, js) in edges.iter().enumerate() {
        for &j in js {
            uf.union(i, j);
        }
    }
    let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut order = Vec::new();
    for i in 0..n {
        let r = uf.find(i);
        let e = by_root.entry(r).or_default();
        if e.is_empty() {
            order.push(r);
        }
        e.push(i);
    }
    order.into_iter().map(|r| by_root.remove(&r).unwrap()).collect()
}

/// τ-equivalence classes over `scope`.
pub fn equivalence_classes(tree: &Tree, scope: &[Position], params: &SimParams) -> Partition {
    let index = SimIndex::new(tree, params.kind);
    equivalence_classes_with(&index, scope, params.tau)
}

pub fn equivalence_classes_with(index: &SimIndex<'_>, scope: &[Position], tau: f64) -> Partition {
    let mut scope: Vec<Position> = scope.to_vec();
    scope.sort();
    scope.dedup();
    let ranks: Vec<usize> = scope
        .iter()
        .map(|p| index.rank(p).expect("scope position in tree"))
        .collect();
    let blocks = cluster(ranks.len(), tau, |i, j| index.sim(ranks[i], ranks[j]));
    Partition::from_blocks(
        blocks
            .into_iter()
            .map(|b| b.into_iter().map(|i| scope[i].clone()).collect())
            .collect(),
    )
}

/// Partition of the whole domain by label equality.
pub fn label_classes(tree: &Tree) -> Partition {
    let mut by_label: BTreeMap<&NodeLabel, Vec<Position>> = BTreeMap::new();
    for (p, n) in tree.preorder() {
        by_label.entry(n.label()).or_default().push(p);
    }
    Partition::from_blocks(by_label.into_values().collect())
}

mod ted {
    //! Zhang-Shasha tree edit distance with unit costs.

    use crate::tree::{NodeLabel, Tree};

    struct Postorder<'a> {
        labels: Vec<&'a NodeLabel>,
        /// leftmost leaf descendant of each node, in postorder numbering
        lml: Vec<usize>,
        keyroots: Vec<usize>,
    }

    fn postorder(t: &Tree) -> Postorder<'_> {
        fn walk<'a>(t: &'a Tree, labels: &mut Vec<&'a NodeLabel>, lml: &mut Vec<usize>) -> usize {
            let mut first = None;
            for c in t.children() {
                let l = walk(c, labels, lml);
                first.get_or_insert(l);
            }
            let me = labels.len();
            labels.push(t.label());
            let l = first.unwrap_or(me);
            lml.push(l);
            l
        }
        let mut labels = Vec::new();
        let mut lml = Vec::new();
        walk(t, &mut labels, &mut lml);
        let n = labels.len();
        let mut keyroots = Vec::new();
        for i in 0..n {
            if !(i + 1..n).any(|j| lml[j] == lml[i]) {
                keyroots.push(i);
            }
        }
        Postorder { labels, lml, keyroots }
    }

    pub fn distance(a: &Tree, b: &Tree) -> usize {
        let x = postorder(a);
        let y = postorder(b);
        let (n, m) = (x.labels.len(), y.labels.len());
        let mut td = vec![vec![0usize; m]; n];
        for &i in &x.keyroots {
            for &j in &y.keyroots {
                let (li, lj) = (x.lml[i], y.lml[j]);
                let rows = i - li + 2;
                let cols = j - lj + 2;
                let mut fd = vec![vec![0usize; cols]; rows];
                for di in 1..rows {
                    fd[di][0] = fd[di - 1][0] + 1;
                }
                for dj in 1..cols {
                    fd[0][dj] = fd[0][dj - 1] + 1;
                }
                for di in 1..rows {
                    let i1 = li + di - 1;
                    for dj in 1..cols {
                        let j1 = lj + dj - 1;
                        let del = fd[di - 1][dj] + 1;
                        let ins = fd[di][dj - 1] + 1;
                        if x.lml[i1] == li && y.lml[j1] == lj {
                            let cost = usize::from(x.labels[i1] != y.labels[j1]);
                            fd[di][dj] = del.min(ins).min(fd[di - 1][dj - 1] + cost);
                            td[i1][j1] = fd[di][dj];
                        } else {
                            let pi = x.lml[i1] - li;
                            let pj = y.lml[j1] - lj;
                            fd[di][dj] = del.min(ins).min(fd[pi][pj] + td[i1][j1]);
                        }
                    }
                }
            }
        }
        td[n - 1][m - 1]
    }

    pub fn similarity(a: &Tree, b: &Tree) -> f64 {
        let d = distance(a, b);
        1.0 - d as f64 / a.size().max(b.size()) as f64
    }

}
