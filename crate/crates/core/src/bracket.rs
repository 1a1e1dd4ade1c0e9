//! Bracketed s-expression trees (Penn Treebank style).
//!
//! `(NP (DT the) (NN heart))` is a node labeled `NP`; bare atoms are
//! tokens. A parenthesised label with no children, `(X)`, is a labeled
//! leaf. Labels are classified with [`NodeLabel::from_internal`], so
//! `ENT_Drug`, `GROUP_0`, `ER` and friends read back as what they render
//! from.

use std::fmt::Write as _;

use crate::tree::{NodeLabel, Tree};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok<'a> {
    Open,
    Close,
    Atom(&'a str),
}

struct Lexer<'a> {
    toks: Vec<(Tok<'a>, usize)>,
    i: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str, first_line: usize) -> Self {
        let mut toks = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line_no = first_line + n;
            if line.trim_start().starts_with('#') {
                continue;
            }
            let bytes = line.as_bytes();
            let mut start = None;
            for (j, &b) in bytes.iter().enumerate() {
                let delim = b == b'(' || b == b')' || b.is_ascii_whitespace();
                if delim {
                    if let Some(s) = start.take() {
                        toks.push((Tok::Atom(&line[s..j]), line_no));
                    }
                    if b == b'(' {
                        toks.push((Tok::Open, line_no));
                    } else if b == b')' {
                        toks.push((Tok::Close, line_no));
                    }
                } else if start.is_none() {
                    start = Some(j);
                }
            }
            if let Some(s) = start {
                toks.push((Tok::Atom(&line[s..]), line_no));
            }
        }
        Lexer { toks, i: 0 }
    }

    fn peek(&self) -> Option<&Tok<'a>> {
        self.toks.get(self.i).map(|(t, _)| t)
    }

    fn line(&self) -> usize {
        self.toks
            .get(self.i)
            .or_else(|| self.toks.last())
            .map_or(1, |(_, l)| *l)
    }

    fn next(&mut self) -> Option<Tok<'a>> {
        let t = self.toks.get(self.i).map(|(t, _)| t.clone());
        self.i += 1;
        t
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError { line: self.line(), message: message.into() }
    }

    fn parse_node(&mut self, top: bool) -> Result<Tree, ParseError> {
        match self.next() {
            Some(Tok::Atom(a)) => Ok(Tree::token(a)),
            Some(Tok::Close) => Err(self.err("unexpected `)`")),
            None => Err(self.err("unexpected end of input")),
            Some(Tok::Open) => {
                let label = match self.peek() {
                    Some(Tok::Atom(a)) => {
                        let a = *a;
                        self.i += 1;
                        NodeLabel::from_internal(a)
                    }
                    // `( (S ...))`: the unlabeled treebank wrapper
                    Some(Tok::Open) if top => NodeLabel::Root,
                    Some(Tok::Open) => return Err(self.err("missing node label")),
                    Some(Tok::Close) => return Err(self.err("empty node `()`")),
                    None => return Err(self.err("unexpected end of input")),
                };
                if label.is_root() && !top {
                    return Err(self.err("ROOT label below the top of a tree"));
                }
                let mut children = Vec::new();
                loop {
                    match self.peek() {
                        Some(Tok::Close) => {
                            self.i += 1;
                            break;
                        }
                        None => return Err(self.err("unbalanced parentheses: missing `)`")),
                        _ => children.push(self.parse_node(false)?),
                    }
                }
                Ok(Tree::new(label, children))
            }
        }
    }
}

/// Parses exactly one tree from `text`, which may span several lines.
pub fn parse_tree(text: &str) -> Result<Tree, ParseError> {
    parse_tree_at(text, 1)
}

fn parse_tree_at(text: &str, first_line: usize) -> Result<Tree, ParseError> {
    let mut lx = Lexer::new(text, first_line);
    if lx.peek().is_none() {
        return Err(lx.err("no tree found"));
    }
    let t = lx.parse_node(true)?;
    if lx.peek().is_some() {
        return Err(lx.err("trailing input after tree"));
    }
    Ok(t)
}

/// One parsed line of a trees file.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeLine {
    /// Explicit id from an `id<TAB>(tree)` line, if present.
    pub id: Option<String>,
    pub line: usize,
    pub tree: Tree,
}

/// Parses a one-tree-per-line file. Blank and `#` lines are skipped.
pub fn parse_tree_lines(text: &str) -> Result<Vec<TreeLine>, ParseError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (id, body) = match raw.split_once('\t') {
            Some((id, body)) if !id.trim().is_empty() && !id.contains('(') => {
                (Some(id.trim().to_string()), body)
            }
            _ => (None, raw),
        };
        let tree = parse_tree_at(body, line)?;
        out.push(TreeLine { id, line, tree });
    }
    Ok(out)
}

/// Single-line bracketed rendering.
pub fn write_tree(tree: &Tree) -> String {
    let mut s = String::new();
    write_into(tree, &mut s);
    s
}

fn write_into(t: &Tree, out: &mut String) {
    if t.is_leaf() && t.label().is_token() {
        out.push_str(&t.label().to_string());
        return;
    }
    let _ = write!(out, "({}", t.label());
    for c in t.children() {
        out.push(' ');
        write_into(c, out);
    }
    out.push(')');
}

/// Multi-line rendering: each child of the root on its own line.
pub fn write_instance(tree: &Tree) -> String {
    if tree.is_leaf() {
        return format!("{}\n", write_tree(tree));
    }
    let mut s = format!("({}", tree.label());
    for c in tree.children() {
        s.push_str("\n  ");
        write_into(c, &mut s);
    }
    s.push_str(")\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::AuxKind;

    #[test]
    fn parses_ptb_sentence() {
        let t = parse_tree("(S (NP (DT The) (NN heart)) (VP (VBD was)))").unwrap();
        assert_eq!(t.label(), &NodeLabel::syntactic("S"));
        assert_eq!(t.tokens(), ["The", "heart", "was"]);
        assert_eq!(t.size(), 9);
    }

    #[test]
    fn classifies_labels() {
        let t = parse_tree("(ROOT (COLL_1 (REL_1 (GROUP_1 (ENT_A x)) (ER (EC)))))").unwrap();
        assert!(t.label().is_root());
        let coll = &t.children()[0];
        assert_eq!(coll.label(), &NodeLabel::coll("1"));
        let rel = &coll.children()[0];
        assert_eq!(rel.children()[0].children()[0].label(), &NodeLabel::entity("A"));
        assert_eq!(rel.children()[1].label(), &NodeLabel::Aux(AuxKind::Er));
        assert!(rel.children()[1].children()[0].is_leaf());
    }

    #[test]
    fn round_trip() {
        for s in [
            "(ROOT (X a b) (X b c) (Y a))",
            "(S (NP (ENT_SOSY (NN heart) (NN rate))) (X))",
            "(ROOT)",
            "tok",
        ] {
            assert_eq!(write_tree(&parse_tree(s).unwrap()), s);
        }
        let t = parse_tree("(ROOT (X a b) (Y (Z c)))").unwrap();
        assert_eq!(parse_tree(&write_instance(&t)).unwrap(), t);
    }

    #[test]
    fn unlabeled_wrapper_is_root() {
        let t = parse_tree("( (S (NN x)))").unwrap();
        assert!(t.label().is_root());
    }

    #[test]
    fn errors() {
        assert!(parse_tree("(S (NP x)").is_err());
        assert!(parse_tree("(S x))").is_err());
        assert!(parse_tree("").is_err());
        assert!(parse_tree("(S (ROOT x))").is_err());
        assert!(parse_tree("(S ())").is_err());
        let e = parse_tree_lines("(A x)\n\n(B (C y)").unwrap_err();
        assert_eq!(e.line, 3);
    }

    #[test]
    fn tree_lines_with_ids_and_comments() {
        let lines = parse_tree_lines("# header\n7\t(A x)\n(B y)\n").unwrap();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0].id.as_deref(), Some("7"));
        assert_eq!(lines[1].id, None);
        assert_eq!(lines[1].line, 3);
    }
}
