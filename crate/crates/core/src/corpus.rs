//! Corpus ingestion: bracketed sentence trees plus entity annotations,
//! merged under a common root and enriched into the initial instance.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;

use crate::bracket::{self, ParseError};
use crate::tree::{AuxKind, NodeLabel, Position, Tree};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("trees file: {0}")]
    Parse(#[from] ParseError),
    #[error("entities file: expected header `sentence\\tentity\\tstart\\tend`")]
    MissingHeader,
    #[error("entities file line {line}: {message}")]
    EntityLine { line: usize, message: String },
    #[error("entities file line {line}: unknown sentence `{sentence}`")]
    UnknownSentence { line: usize, sentence: String },
    #[error("entities file line {line}: tokens {start}..={end} out of range for sentence `{sentence}` with {len} tokens")]
    RangeOutOfBounds { line: usize, sentence: String, start: usize, end: usize, len: usize },
    #[error("trees file line {line}: duplicate sentence id `{id}`")]
    DuplicateId { line: usize, id: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NamedEntity {
    pub name: String,
    pub start: usize,
    pub end: usize,
}

impl NamedEntity {
    pub fn new(name: impl Into<String>, start: usize, end: usize) -> Self {
        assert!(start <= end, "entity range must be non-empty");
        NamedEntity { name: name.into(), start, end }
    }

    pub fn token_count(&self) -> usize {
        self.end - self.start + 1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnnotatedSentence {
    pub id: String,
    pub tree: Tree,
    pub entities: Vec<NamedEntity>,
}

impl AnnotatedSentence {
    /// Maps token index to leaf position, left to right.
    pub fn token_positions(&self) -> Vec<Position> {
        token_positions(&self.tree)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusConfig {
    /// Tags that always denote a coordination phrase.
    pub conjunction_tags: BTreeSet<String>,
    /// A phrase with a child carrying one of these tags is a coordination.
    pub coordinator_tags: BTreeSet<String>,
    /// Labels never collapsed by the unary reduction.
    pub keep_tags: BTreeSet<String>,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            conjunction_tags: ["CONJ".to_string()].into(),
            coordinator_tags: ["CC".to_string()].into(),
            keep_tags: BTreeSet::new(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Corpus {
    pub sentences: Vec<AnnotatedSentence>,
}

impl Corpus {
    /// The raw forest `I₀`: every sentence tree under one root, in file order.
    pub fn forest(&self) -> Tree {
        Tree::root(self.sentences.iter().map(|s| s.tree.clone()).collect())
    }

    /// The enriched and simplified instance `I`.
    pub fn instance(&self, config: &CorpusConfig) -> Tree {
        let sentences = self
            .sentences
            .iter()
            .map(|s| {
                let t = flatten_conjunctions(&s.tree, config);
                let t = insert_entities(&t, &s.entities);
                unnest_entities(&t)
            })
            .collect();
        simplify(&Tree::root(sentences), config)
    }
}

fn read(path: &Path) -> Result<String, CorpusError> {
    fs::read_to_string(path).map_err(|source| CorpusError::Io { path: path.to_path_buf(), source })
}

pub fn read_corpus(trees: &Path, entities: Option<&Path>) -> Result<Corpus, CorpusError> {
    let trees = read(trees)?;
    let entities = entities.map(read).transpose()?;
    parse_corpus(&trees, entities.as_deref())
}

/// Parses a trees file and an optional entities TSV.
///
/// Sentences are identified by an explicit `id<TAB>` prefix when present,
/// otherwise by their 0-based order in the file.
pub fn parse_corpus(trees: &str, entities: Option<&str>) -> Result<Corpus, CorpusError> {
    let mut sentences = Vec::new();
    let mut index = BTreeMap::new();
    for (n, line) in bracket::parse_tree_lines(trees)?.into_iter().enumerate() {
        let id = line.id.unwrap_or_else(|| n.to_string());
        if index.insert(id.clone(), sentences.len()).is_some() {
            return Err(CorpusError::DuplicateId { line: line.line, id });
        }
        sentences.push(AnnotatedSentence { id, tree: strip_wrapper(line.tree), entities: Vec::new() });
    }
    if let Some(text) = entities {
        for (line, sentence, entity) in parse_entities(text)? {
            let &i = index
                .get(&sentence)
                .ok_or_else(|| CorpusError::UnknownSentence { line, sentence: sentence.clone() })?;
            let len = token_positions(&sentences[i].tree).len();
            if entity.end >= len {
                return Err(CorpusError::RangeOutOfBounds {
                    line,
                    sentence,
                    start: entity.start,
                    end: entity.end,
                    len,
                });
            }
            sentences[i].entities.push(entity);
        }
    }
    Ok(Corpus { sentences })
}

/// `(ROOT (S ...))` and `( (S ...))` become `(S ...)`.
fn strip_wrapper(t: Tree) -> Tree {
    if t.label().is_root() && t.children().len() == 1 {
        t.into_parts().1.pop().unwrap()
    } else if t.label().is_root() {
        let (_, children) = t.into_parts();
        Tree::new(NodeLabel::syntactic(crate::tree::ROOT_NAME), children)
    } else {
        t
    }
}

fn parse_entities(text: &str) -> Result<Vec<(usize, String, NamedEntity)>, CorpusError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let header_ok = lines.next().is_some_and(|(_, h)| {
        h.split('\t').map(str::trim).eq(["sentence", "entity", "start", "end"])
    });
    if !header_ok {
        return Err(CorpusError::MissingHeader);
    }
    let mut out = Vec::new();
    for (line, l) in lines {
        let cols: Vec<&str> = l.split('\t').map(str::trim).collect();
        let bad = |message: String| CorpusError::EntityLine { line, message };
        if cols.len() != 4 {
            return Err(bad(format!("expected 4 columns, found {}", cols.len())));
        }
        if cols[1].is_empty() {
            return Err(bad("empty entity name".into()));
        }
        let num = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("`{s}` is not a token index")));
        let (start, end) = (num(cols[2])?, num(cols[3])?);
        if start > end {
            return Err(bad(format!("start {start} after end {end}")));
        }
        out.push((line, cols[0].to_string(), NamedEntity::new(cols[1], start, end)));
    }
    Ok(out)
}

pub fn token_positions(tree: &Tree) -> Vec<Position> {
    tree.preorder()
        .into_iter()
        .filter(|(_, n)| n.label().is_token())
        .map(|(p, _)| p)
        .collect()
}

fn is_coordination(t: &Tree, config: &CorpusConfig) -> bool {
    let NodeLabel::Syntactic(tag) = t.label() else {
        return false;
    };
    config.conjunction_tags.contains(tag)
        || t.children().iter().any(|c| match c.label() {
            NodeLabel::Syntactic(ct) => config.coordinator_tags.contains(ct),
            _ => false,
        })
}

/// Splices nested coordinations of the same label into their parent,
/// so `(CONJ A (CONJ B C))` becomes `(CONJ A B C)`.
pub fn flatten_conjunctions(tree: &Tree, config: &CorpusConfig) -> Tree {
    let children: Vec<Tree> = tree.children().iter().map(|c| flatten_conjunctions(c, config)).collect();
    let mut out = Tree::new(tree.label().clone(), children);
    if is_coordination(&out, config) {
        let mut flat = Vec::new();
        for c in out.children() {
            if c.label() == out.label() && is_coordination(c, config) {
                flat.extend(c.children().iter().cloned());
            } else {
                flat.push(c.clone());
            }
        }
        *out.children_mut() = flat;
    }
    out
}

/// Inserts one ENT node per entity, longest spans first so that nested
/// entities end up inside their encompassing entity.
pub fn insert_entities(tree: &Tree, entities: &[NamedEntity]) -> Tree {
    let mut order: Vec<&NamedEntity> = Vec::new();
    for e in entities {
        if order.contains(&e) {
            warn!("duplicate entity {} {}..={} ignored", e.name, e.start, e.end);
        } else {
            order.push(e);
        }
    }
    order.sort_by_key(|e| (std::cmp::Reverse(e.token_count()), e.start));
    let mut t = tree.clone();
    for e in order {
        match insert_entity(&t, e) {
            Some(next) => t = next,
            None => warn!(
                "entity {} {}..={} crosses an existing entity boundary; skipped",
                e.name, e.start, e.end
            ),
        }
    }
    t
}

fn common_prefix(a: &Position, b: &Position) -> Position {
    let n = a
        .indices()
        .iter()
        .zip(b.indices())
        .take_while(|(x, y)| x == y)
        .count();
    Position::from_indices(a.indices()[..n].to_vec())
}

fn insert_entity(tree: &Tree, e: &NamedEntity) -> Option<Tree> {
    let leaves = token_positions(tree);
    let span = &leaves[e.start..=e.end];
    let u = span
        .iter()
        .map(|p| p.parent().expect("a token is never the root"))
        .reduce(|a, b| common_prefix(&a, &b))?;
    let mut t = tree.clone();
    loop {
        let node = t.get(&u)?;
        // token index range of every child of u
        let mut next = leaves_before(&t, &u);
        let mut overlap = Vec::new();
        let mut crossing = None;
        for (i, c) in node.children().iter().enumerate() {
            let n = c.tokens().len();
            let (lo, hi) = (next, next + n);
            next = hi;
            if n == 0 || hi <= e.start || lo > e.end {
                continue;
            }
            overlap.push(i);
            if lo < e.start || hi - 1 > e.end {
                crossing = Some(i);
                break;
            }
        }
        if let Some(i) = crossing {
            let child = &node.children()[i];
            if !child.label().is_uncategorized() || matches!(child.label(), NodeLabel::Aux(_)) {
                return None;
            }
            let hedge = child.children().to_vec();
            t = t.replace_with_hedge(&u.child(i), hedge).ok()?;
            continue;
        }
        let (first, last) = (*overlap.first()?, *overlap.last()?);
        let node = t.get_mut(&u)?;
        let run: Vec<Tree> = node.children_mut().drain(first..=last).collect();
        node.children_mut()
            .insert(first, Tree::new(NodeLabel::entity(&e.name), run));
        return Some(t);
    }
}

/// Number of tokens to the left of the sub-tree at `u`.
fn leaves_before(t: &Tree, u: &Position) -> usize {
    let mut count = 0;
    let mut node = t;
    for &i in u.indices() {
        count += node.children()[..i].iter().map(|c| c.tokens().len()).sum::<usize>();
        node = &node.children()[i];
    }
    count
}

/// Rewrites every entity that contains other entities into
/// `ER[ENT'(all tokens), EC[inner entities]]`, innermost first.
pub fn unnest_entities(tree: &Tree) -> Tree {
    let children: Vec<Tree> = tree.children().iter().map(unnest_entities).collect();
    let node = Tree::new(tree.label().clone(), children);
    if !node.label().is_entity() {
        return node;
    }
    let mut inner = Vec::new();
    let outer_children: Vec<Tree> = node
        .children()
        .iter()
        .flat_map(|c| inline_inner(c, &mut inner))
        .collect();
    if inner.is_empty() {
        return node;
    }
    Tree::new(
        NodeLabel::Aux(AuxKind::Er),
        vec![
            Tree::new(node.label().clone(), outer_children),
            Tree::new(NodeLabel::Aux(AuxKind::Ec), inner),
        ],
    )
}

/// Replaces top-most inner ENT/ER structures by their token content and
/// collects them in `inner`.
fn inline_inner(t: &Tree, inner: &mut Vec<Tree>) -> Vec<Tree> {
    match t.label() {
        NodeLabel::Entity(_) => {
            inner.push(t.clone());
            t.children().to_vec()
        }
        NodeLabel::Aux(AuxKind::Er) => {
            inner.push(t.clone());
            t.children()[0].children().to_vec()
        }
        _ => {
            let children = t.children().iter().flat_map(|c| inline_inner(c, inner)).collect();
            vec![Tree::new(t.label().clone(), children)]
        }
    }
}

/// Two-step simplification: drop entity-free sub-trees, then collapse
/// unary non-entity nodes to a fixpoint.
pub fn simplify(tree: &Tree, config: &CorpusConfig) -> Tree {
    match prune(tree) {
        Some(t) => collapse(&t, config),
        None => Tree::empty(),
    }
}

fn prune(t: &Tree) -> Option<Tree> {
    if !t.has_entity() {
        return t.label().is_root().then(Tree::empty);
    }
    if t.label().is_entity() {
        return Some(t.clone());
    }
    let children = t.children().iter().filter_map(prune).collect();
    Some(Tree::new(t.label().clone(), children))
}

fn collapsible(t: &Tree, config: &CorpusConfig) -> bool {
    match t.label() {
        NodeLabel::Syntactic(tag) => t.children().len() == 1 && !config.keep_tags.contains(tag),
        _ => false,
    }
}

fn collapse(t: &Tree, config: &CorpusConfig) -> Tree {
    let children: Vec<Tree> = t.children().iter().map(|c| collapse(c, config)).collect();
    let mut node = Tree::new(t.label().clone(), children);
    if node.label().is_root() {
        return node;
    }
    while collapsible(&node, config) {
        let (label, mut children) = node.into_parts();
        let child = children.pop().unwrap();
        let keep_parent = matches!(child.label(), NodeLabel::Syntactic(tag)
            if !child.is_leaf() && !config.keep_tags.contains(tag));
        node = if keep_parent {
            Tree::new(label, child.into_parts().1)
        } else {
            child
        };
    }
    node
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bracket::{parse_tree, write_tree};

    const VITALS_TREE: &str = "(S (NP (DT The) (NN heart) (NN rate)) (VP (VBD was) (NP (CD 100) (NN bpm))))";

    fn vitals_entities() -> Vec<NamedEntity> {
        vec![
            NamedEntity::new("SOSY", 1, 2),
            NamedEntity::new("VALUE", 4, 4),
            NamedEntity::new("UNIT", 5, 5),
        ]
    }

    #[test]
    fn single_sentence_forest() {
        let c = parse_corpus(VITALS_TREE, None).unwrap();
        let f = c.forest();
        assert!(f.label().is_root());
        assert_eq!(f.children().len(), 1);
        assert_eq!(write_tree(&f.children()[0]), VITALS_TREE);
    }

    #[test]
    fn empty_corpus_is_empty_tree() {
        let c = parse_corpus("# nothing\n", Some("sentence\tentity\tstart\tend\n")).unwrap();
        assert!(c.forest().is_empty_instance());
        assert!(c.instance(&CorpusConfig::default()).is_empty_instance());
    }

    #[test]
    fn two_one_leaf_sentences() {
        let c = parse_corpus("(A x)\n(B y)\n", None).unwrap();
        assert_eq!(c.forest().children().len(), 2);
    }

    #[test]
    fn enrichment_inserts_entities() {
        let t = parse_tree(VITALS_TREE).unwrap();
        let enriched = insert_entities(&t, &vitals_entities());
        assert_eq!(
            write_tree(&enriched),
            "(S (NP (DT The) (ENT_SOSY (NN heart) (NN rate))) (VP (VBD was) (NP (CD (ENT_VALUE 100)) (NN (ENT_UNIT bpm)))))"
        );
    }

    #[test]
    fn no_entities_leaves_tree_unchanged() {
        let t = parse_tree(VITALS_TREE).unwrap();
        assert_eq!(insert_entities(&t, &[]), t);
    }

    #[test]
    fn whole_one_word_sentence() {
        let t = parse_tree("(NN aspirin)").unwrap();
        let e = insert_entities(&t, &[NamedEntity::new("DRUG", 0, 0)]);
        assert_eq!(write_tree(&e), "(NN (ENT_DRUG aspirin))");
    }

    #[test]
    fn span_at_different_depths_dissolves_intervening_nodes() {
        let t = parse_tree("(S (NP (JJ high) (NN blood)) (NN pressure) (VP (VBZ is)))").unwrap();
        let e = insert_entities(&t, &[NamedEntity::new("SOSY", 1, 2)]);
        assert_eq!(write_tree(&e), "(S (JJ high) (ENT_SOSY (NN blood) (NN pressure)) (VP (VBZ is)))");
    }

    #[test]
    fn crossing_an_entity_is_skipped() {
        let t = parse_tree("(S (A a) (B b) (C c))").unwrap();
        let e = insert_entities(
            &t,
            &[NamedEntity::new("X", 0, 1), NamedEntity::new("Y", 1, 2)],
        );
        assert_eq!(write_tree(&e), "(S (ENT_X (A a) (B b)) (C c))");
    }

    #[test]
    fn unnest_lifts_nested_entities() {
        // U[x0, ENT[z0, ENT0[y0], z1, ENT1[y1], z2], x1]
        let t = parse_tree("(U (x0 p) (ENT_O (z0 a) (ENT_E0 (y0 b)) (z1 c) (ENT_E1 (y1 d)) (z2 e)) (x1 q))").unwrap();
        let out = unnest_entities(&t);
        let expected = parse_tree(
            "(U (x0 p) (ER (ENT_O (z0 a) (y0 b) (z1 c) (y1 d) (z2 e)) (EC (ENT_E0 (y0 b)) (ENT_E1 (y1 d)))) (x1 q))",
        )
        .unwrap();
        assert_eq!(out, expected);
    }

    #[test]
    fn unnest_without_nesting_is_identity() {
        let t = parse_tree("(S (ENT_A x) (ENT_B y))").unwrap();
        assert_eq!(unnest_entities(&t), t);
    }

    #[test]
    fn triple_nesting_gives_two_er_layers() {
        let t = parse_tree("(S (ENT_A p (ENT_B q (ENT_C r))))").unwrap();
        let out = unnest_entities(&t);
        // innermost first: B ⊃ C becomes ER[B', EC[C]]; then A wraps it
        let b_layer = "(ER (ENT_B q r) (EC (ENT_C r)))";
        let expected = format!("(S (ER (ENT_A p q r) (EC {b_layer})))");
        assert_eq!(write_tree(&out), expected);
    }

    #[test]
    fn nested_entities_from_annotations() {
        let t = parse_tree("(NP (NN blood) (NN pressure) (NN level))").unwrap();
        let e = insert_entities(
            &t,
            &[NamedEntity::new("BP", 0, 1), NamedEntity::new("MEASURE", 0, 2)],
        );
        assert_eq!(
            write_tree(&e),
            "(NP (ENT_MEASURE (ENT_BP (NN blood) (NN pressure)) (NN level)))"
        );
        assert_eq!(
            write_tree(&unnest_entities(&e)),
            "(NP (ER (ENT_MEASURE (NN blood) (NN pressure) (NN level)) (EC (ENT_BP (NN blood) (NN pressure)))))"
        );
    }

    #[test]
    fn conjunction_flattening() {
        let cfg = CorpusConfig::default();
        let t = parse_tree("(CONJ (A a) (CONJ (B b) (C c)))").unwrap();
        assert_eq!(write_tree(&flatten_conjunctions(&t, &cfg)), "(CONJ (A a) (B b) (C c))");
        let flat = parse_tree("(CONJ (A a) (B b) (C c))").unwrap();
        assert_eq!(flatten_conjunctions(&flat, &cfg), flat);
        let plain = parse_tree(VITALS_TREE).unwrap();
        assert_eq!(flatten_conjunctions(&plain, &cfg), plain);
        let cc = parse_tree("(NP (NP a) (CC and) (NP (NP b) (CC or) (NP c)))").unwrap();
        assert_eq!(
            write_tree(&flatten_conjunctions(&cc, &cfg)),
            "(NP (NP a) (CC and) (NP b) (CC or) (NP c))"
        );
    }

    #[test]
    fn simplification_prunes_and_collapses() {
        let cfg = CorpusConfig::default();
        let enriched = Tree::root(vec![insert_entities(&parse_tree(VITALS_TREE).unwrap(), &vitals_entities())]);
        let pruned = prune(&enriched).unwrap();
        assert_eq!(
            write_tree(&pruned),
            "(ROOT (S (NP (ENT_SOSY (NN heart) (NN rate))) (VP (NP (CD (ENT_VALUE 100)) (NN (ENT_UNIT bpm))))))"
        );
        let reduced = simplify(&enriched, &cfg);
        assert_eq!(
            write_tree(&reduced),
            "(ROOT (S (ENT_SOSY heart rate) (VP (ENT_VALUE 100) (ENT_UNIT bpm))))"
        );
        assert_eq!(simplify(&reduced, &cfg), reduced);
    }

    #[test]
    fn no_entities_simplifies_to_empty() {
        let t = Tree::root(vec![parse_tree(VITALS_TREE).unwrap()]);
        assert!(simplify(&t, &CorpusConfig::default()).is_empty_instance());
    }

    #[test]
    fn keep_tags_survive_reduction() {
        let cfg = CorpusConfig { keep_tags: ["NP".to_string()].into(), ..Default::default() };
        let t = parse_tree("(ROOT (S (NP (ENT_A x)) (ENT_B y)))").unwrap();
        assert_eq!(write_tree(&simplify(&t, &cfg)), "(ROOT (S (NP (ENT_A x)) (ENT_B y)))");
    }

    #[test]
    fn entity_file_errors() {
        let trees = "(S (A a) (B b))\n";
        assert!(matches!(parse_corpus(trees, Some("0\tX\t0\t0\n")), Err(CorpusError::MissingHeader)));
        let hdr = "sentence\tentity\tstart\tend\n";
        assert!(matches!(
            parse_corpus(trees, Some(&format!("{hdr}0\tX\t0\t2\n"))),
            Err(CorpusError::RangeOutOfBounds { .. })
        ));
        assert!(matches!(
            parse_corpus(trees, Some(&format!("{hdr}3\tX\t0\t0\n"))),
            Err(CorpusError::UnknownSentence { .. })
        ));
        assert!(matches!(
            parse_corpus("a\t(S x)\na\t(S y)\n", None),
            Err(CorpusError::DuplicateId { .. })
        ));
        let ok = parse_corpus(trees, Some(&format!("{hdr}0\tX\t0\t1\n"))).unwrap();
        assert_eq!(ok.sentences[0].entities, [NamedEntity::new("X", 0, 1)]);
        assert_eq!(ok.sentences[0].token_positions().len(), 2);
    }
}
