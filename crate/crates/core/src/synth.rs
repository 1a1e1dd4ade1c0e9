//! Synthetic annotated corpora generated from a planted schema.
//!
//! Schema files are line oriented; `#` starts a comment.
//!
//! ```text
//! group G0 DRUG DOSE FREQ      # group id followed by its entity names
//! relation R0 G0 G1            # relation id and its two groups
//! template R0 3                # sentence template: target and weight
//! noise dropout 0.1            # per-entity omission probability
//! noise depth 0.2              # chance of each extra phrase level (at most 3)
//! noise shuffle 0.1            # chance a group phrase is reordered
//! ```
//!
//! Without `template` lines every relation gets weight 1, or every group
//! when there are no relations.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;
use std::str::FromStr;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bracket::{write_instance, write_tree};
use crate::grammar::{extract_grammar, CondensedGrammar};
use crate::tree::{NodeLabel, Tree};

const MAX_EXTRA_DEPTH: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SchemaError {
    #[error("schema line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("schema: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlantedGroup {
    pub id: String,
    pub entities: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlantedRelation {
    pub id: String,
    pub left: String,
    pub right: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Template {
    /// A group or relation id.
    pub target: String,
    pub weight: u32,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Noise {
    pub dropout: f64,
    pub depth: f64,
    pub shuffle: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PlantedSchema {
    pub groups: Vec<PlantedGroup>,
    pub relations: Vec<PlantedRelation>,
    pub templates: Vec<Template>,
    pub noise: Noise,
}

fn valid_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

impl PlantedSchema {
    /// Four disjoint three-entity groups joined pairwise by two relations.
    pub fn four_groups_two_relations() -> Self {
        let group = |id: &str, e: [&str; 3]| PlantedGroup {
            id: id.into(),
            entities: e.iter().map(|s| s.to_string()).collect(),
        };
        let rel = |id: &str, l: &str, r: &str| PlantedRelation { id: id.into(), left: l.into(), right: r.into() };
        PlantedSchema {
            groups: vec![
                group("G0", ["DRUG", "DOSE", "FREQ"]),
                group("G1", ["DISORDER", "SITE", "GRADE"]),
                group("G2", ["EXAM", "VALUE", "UNIT"]),
                group("G3", ["SIGN", "ONSET", "DURATION"]),
            ],
            relations: vec![rel("R0", "G0", "G1"), rel("R1", "G2", "G3")],
            templates: Vec::new(),
            noise: Noise::default(),
        }
    }

    pub fn with_noise(mut self, noise: Noise) -> Self {
        self.noise = noise;
        self
    }

    fn group_index(&self, id: &str) -> Option<usize> {
        self.groups.iter().position(|g| g.id == id)
    }

    fn relation_index(&self, id: &str) -> Option<usize> {
        self.relations.iter().position(|r| r.id == id)
    }

    pub fn check(&self) -> Result<(), SchemaError> {
        let bad = |m: String| Err(SchemaError::Invalid(m));
        if self.groups.is_empty() {
            return bad("no groups declared".into());
        }
        let mut ids = BTreeMap::new();
        for id in self.groups.iter().map(|g| &g.id).chain(self.relations.iter().map(|r| &r.id)) {
            if !valid_name(id) {
                return bad(format!("invalid id `{id}`"));
            }
            if ids.insert(id.as_str(), ()).is_some() {
                return bad(format!("id `{id}` declared twice"));
            }
        }
        for g in &self.groups {
            if g.entities.is_empty() {
                return bad(format!("group `{}` has no entities", g.id));
            }
            if let Some(e) = g.entities.iter().find(|e| !valid_name(e)) {
                return bad(format!("invalid entity name `{e}`"));
            }
            let mut sorted = g.entities.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != g.entities.len() {
                return bad(format!("group `{}` repeats an entity", g.id));
            }
        }
        for r in &self.relations {
            for side in [&r.left, &r.right] {
                if self.group_index(side).is_none() {
                    return bad(format!("relation `{}` references undefined group `{side}`", r.id));
                }
            }
            if r.left == r.right {
                return bad(format!("relation `{}` links a group to itself", r.id));
            }
        }
        for t in &self.templates {
            if self.group_index(&t.target).is_none() && self.relation_index(&t.target).is_none() {
                return bad(format!("template targets undefined id `{}`", t.target));
            }
        }
        if !self.templates.is_empty() && self.templates.iter().all(|t| t.weight == 0) {
            return bad("all template weights are zero".into());
        }
        let Noise { dropout, depth, shuffle } = self.noise;
        if !(0.0..1.0).contains(&dropout) {
            return bad(format!("dropout {dropout} outside [0, 1)"));
        }
        for (name, p) in [("depth", depth), ("shuffle", shuffle)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} probability {p} outside [0, 1]"));
            }
        }
        Ok(())
    }

    fn effective_templates(&self) -> Vec<Template> {
        if !self.templates.is_empty() {
            return self.templates.clone();
        }
        let targets: Vec<&String> = if self.relations.is_empty() {
            self.groups.iter().map(|g| &g.id).collect()
        } else {
            self.relations.iter().map(|r| &r.id).collect()
        };
        targets.into_iter().map(|t| Template { target: t.clone(), weight: 1 }).collect()
    }
}

impl FromStr for PlantedSchema {
    type Err = SchemaError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut s = PlantedSchema::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| SchemaError::Line { line: n + 1, message };
            let words: Vec<&str> = line.split_whitespace().collect();
            match words.as_slice() {
                ["group", id, entities @ ..] if !entities.is_empty() => s.groups.push(PlantedGroup {
                    id: id.to_string(),
                    entities: entities.iter().map(|e| e.to_string()).collect(),
                }),
                ["relation", id, left, right] => s.relations.push(PlantedRelation {
                    id: id.to_string(),
                    left: left.to_string(),
                    right: right.to_string(),
                }),
                ["template", target, weight] => {
                    let weight = weight.parse().map_err(|_| err(format!("bad weight `{weight}`")))?;
                    s.templates.push(Template { target: target.to_string(), weight });
                }
                ["template", target] => s.templates.push(Template { target: target.to_string(), weight: 1 }),
                ["noise", kind, p] => {
                    let p: f64 = p.parse().map_err(|_| err(format!("bad probability `{p}`")))?;
                    match *kind {
                        "dropout" => s.noise.dropout = p,
                        "depth" => s.noise.depth = p,
                        "shuffle" => s.noise.shuffle = p,
                        other => return Err(err(format!("unknown noise kind `{other}`"))),
                    }
                }
                _ => return Err(err(format!("cannot parse `{line}`"))),
            }
        }
        s.check()?;
        Ok(s)
    }
}

/// Generated corpus plus the structure it was planted from.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticCorpus {
    /// Trees file, one `id<TAB>(tree)` line per sentence.
    pub trees: String,
    /// Entities TSV.
    pub entities: String,
    /// The categorized instance the sentences realise, with entities in
    /// schema order.
    pub planted: Tree,
    pub grammar: CondensedGrammar,
}

impl SyntheticCorpus {
    /// Writes `trees.txt`, `entities.tsv`, `grammar.txt` and `planted.txt`.
    pub fn write_to(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("trees.txt"), &self.trees)?;
        fs::write(dir.join("entities.tsv"), &self.entities)?;
        fs::write(dir.join("grammar.txt"), self.grammar.to_string())?;
        fs::write(dir.join("planted.txt"), write_instance(&self.planted))
    }
}

struct Sentence {
    tree: Tree,
    entities: Vec<(String, usize, usize)>,
    target: usize,
    planted: Tree,
}

struct Builder<'s> {
    schema: &'s PlantedSchema,
    rng: ChaCha8Rng,
    next_token: usize,
    entities: Vec<(String, usize, usize)>,
}

fn pre(tag: &str, word: String) -> Tree {
    Tree::new(NodeLabel::syntactic(tag), vec![Tree::token(word)])
}

fn node(tag: &str, children: Vec<Tree>) -> Tree {
    Tree::new(NodeLabel::syntactic(tag), children)
}

fn np(children: Vec<Tree>) -> Tree {
    node("NP", children)
}

impl Builder<'_> {
    fn word(&mut self, tag: &str, text: String) -> Tree {
        self.next_token += 1;
        pre(tag, text)
    }

    /// Surface phrase and planted GROUP node for one group instance.
    fn group_phrase(&mut self, gi: usize) -> (Tree, Tree) {
        let group = &self.schema.groups[gi];
        let noise = self.schema.noise;
        let floor = group.entities.len().min(2);
        let mut kept: Vec<bool> = group.entities.iter().map(|_| !self.rng.gen_bool(noise.dropout)).collect();
        // never thin a group below two entities
        let mut missing = floor.saturating_sub(kept.iter().filter(|&&k| k).count());
        for k in kept.iter_mut() {
            if missing > 0 && !*k {
                *k = true;
                missing -= 1;
            }
        }
        let mut order: Vec<usize> = (0..group.entities.len()).filter(|&i| kept[i]).collect();
        if order.len() > 1 && self.rng.gen_bool(noise.shuffle) {
            order.shuffle(&mut self.rng);
        }
        let mut chunks = vec![self.word("DT", "the".into())];
        let mut spans = BTreeMap::new();
        for &i in &order {
            let name = &group.entities[i];
            let lower = name.to_lowercase();
            let len = if self.rng.gen_bool(0.3) { 2 } else { 1 };
            let start = self.next_token;
            let words: Vec<Tree> = (0..len)
                .map(|_| {
                    let n = self.rng.gen_range(0..100);
                    self.word("NN", format!("{lower}{n}"))
                })
                .collect();
            let end = self.next_token - 1;
            self.entities.push((name.clone(), start, end));
            spans.insert(i, words.iter().map(|w| w.children()[0].clone()).collect::<Vec<_>>());
            chunks.push(np(words));
        }
        let mut levels = 0;
        while levels < MAX_EXTRA_DEPTH && self.rng.gen_bool(noise.depth) {
            levels += 1;
            if chunks.len() >= 3 {
                let last = chunks.pop().unwrap();
                chunks = vec![np(chunks), last];
            }
        }
        let planted = Tree::new(
            NodeLabel::group(gi.to_string()),
            spans
                .into_iter()
                .map(|(i, tokens)| Tree::new(NodeLabel::entity(group.entities[i].clone()), tokens))
                .collect(),
        );
        let tag = ["NP", "NP", "NML", "NX"][self.rng.gen_range(0..4)];
        (node(tag, chunks), planted)
    }

    fn sentence(mut self, target: usize) -> Sentence {
        let s = self.schema;
        let (tree, planted) = if target < s.relations.len() {
            let r = &s.relations[target];
            let (a, b) = (s.group_index(&r.left).unwrap(), s.group_index(&r.right).unwrap());
            let (tree, pa, pb) = self.relation_frame(a, b);
            (tree, Tree::new(NodeLabel::rel(target.to_string()), vec![pa, pb]))
        } else {
            self.group_frame(target - s.relations.len())
        };
        Sentence { tree, entities: self.entities, target, planted }
    }

    /// One of a fixed inventory of clause shapes around the two group
    /// phrases, left group first.
    fn relation_frame(&mut self, a: usize, b: usize) -> (Tree, Tree, Tree) {
        match self.rng.gen_range(0..7) {
            0 => {
                let (left, pa) = self.group_phrase(a);
                let verb = self.word("VBZ", "links".into());
                let (right, pb) = self.group_phrase(b);
                (node("S", vec![left, node("VP", vec![verb, right])]), pa, pb)
            }
            1 => {
                let (left, pa) = self.group_phrase(a);
                let was = self.word("VBD", "was".into());
                let given = self.word("VBN", "given".into());
                let for_ = self.word("IN", "for".into());
                let (right, pb) = self.group_phrase(b);
                let pp = node("PP", vec![for_, right]);
                (node("S", vec![left, node("VP", vec![was, node("VP", vec![given, pp])])]), pa, pb)
            }
            2 => {
                let with = self.word("IN", "with".into());
                let (left, pa) = self.group_phrase(a);
                let came = self.word("VBD", "came".into());
                let (right, pb) = self.group_phrase(b);
                (node("SINV", vec![node("PP", vec![with, left]), node("VP", vec![came]), right]), pa, pb)
            }
            3 => {
                let (left, pa) = self.group_phrase(a);
                let of = self.word("IN", "of".into());
                let (right, pb) = self.group_phrase(b);
                (node("FRAG", vec![np(vec![left, node("PP", vec![of, right])])]), pa, pb)
            }
            4 => {
                let (left, pa) = self.group_phrase(a);
                let which = node("WHNP", vec![self.word("WDT", "which".into())]);
                let involves = self.word("VBZ", "involves".into());
                let (right, pb) = self.group_phrase(b);
                let sbar = node("SBAR", vec![which, node("S", vec![node("VP", vec![involves, right])])]);
                let resolved = node("VP", vec![self.word("VBD", "resolved".into())]);
                (node("S", vec![np(vec![left, sbar]), resolved]), pa, pb)
            }
            5 => {
                let (left, pa) = self.group_phrase(a);
                let open = self.word("-LRB-", "-LRB-".into());
                let (right, pb) = self.group_phrase(b);
                let close = self.word("-RRB-", "-RRB-".into());
                (node("S", vec![np(vec![left, node("PRN", vec![open, right, close])])]), pa, pb)
            }
            _ => {
                let (left, pa) = self.group_phrase(a);
                let may = self.word("MD", "may".into());
                let cause = self.word("VB", "cause".into());
                let (right, pb) = self.group_phrase(b);
                (node("S", vec![left, node("VP", vec![may, node("VP", vec![cause, right])])]), pa, pb)
            }
        }
    }

    fn group_frame(&mut self, g: usize) -> (Tree, Tree) {
        if self.rng.gen_bool(0.5) {
            let (subject, planted) = self.group_phrase(g);
            let vp = node("VP", vec![self.word("VBD", "was".into()), self.word("VBN", "noted".into())]);
            (node("S", vec![subject, vp]), planted)
        } else {
            let (phrase, planted) = self.group_phrase(g);
            let dot = self.word(".", ".".into());
            (node("FRAG", vec![phrase, dot]), planted)
        }
    }
}

/// Generates `n` sentences. Sentence `i` draws from its own ChaCha stream
/// of `seed`, so output is identical however the work is scheduled.
pub fn generate(schema: &PlantedSchema, n: usize, seed: u64) -> Result<SyntheticCorpus, SchemaError> {
    schema.check()?;
    if n == 0 {
        return Err(SchemaError::Invalid("at least one sentence is required".into()));
    }
    let templates = schema.effective_templates();
    // relations first, then groups
    let targets: Vec<usize> = templates
        .iter()
        .map(|t| match schema.relation_index(&t.target) {
            Some(r) => r,
            None => schema.relations.len() + schema.group_index(&t.target).unwrap(),
        })
        .collect();
    let pick = WeightedIndex::new(templates.iter().map(|t| t.weight))
        .map_err(|e| SchemaError::Invalid(format!("template weights: {e}")))?;

    let sentences: Vec<Sentence> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let target = targets[pick.sample(&mut rng)];
            Builder { schema, rng, next_token: 0, entities: Vec::new() }.sentence(target)
        })
        .collect();

    let mut trees = String::new();
    let mut entities = String::from("sentence\tentity\tstart\tend\n");
    for (i, s) in sentences.iter().enumerate() {
        let _ = writeln!(trees, "s{i}\t{}", write_tree(&s.tree));
        for (name, start, end) in &s.entities {
            let _ = writeln!(entities, "s{i}\t{name}\t{start}\t{end}");
        }
    }

    let mut by_target: Vec<(usize, Vec<Tree>)> = Vec::new();
    for s in sentences {
        match by_target.iter_mut().find(|(t, _)| *t == s.target) {
            Some((_, units)) => units.push(s.planted),
            None => by_target.push((s.target, vec![s.planted])),
        }
    }
    let mut next_coll = 0;
    let root = by_target
        .into_iter()
        .map(|(_, mut units)| {
            if units.len() == 1 {
                units.pop().unwrap()
            } else {
                next_coll += 1;
                Tree::new(NodeLabel::coll((next_coll - 1).to_string()), units)
            }
        })
        .collect();
    let planted = Tree::root(root);
    let grammar = extract_grammar(&planted);
    Ok(SyntheticCorpus { trees, entities, planted, grammar })
}
