//! Condensed context-free grammars: rules `X → α` whose right-hand
//! symbols may carry a `+` repetition mark.
//!
//! Text form is one rule per line, `LHS -> S1 S2+ ...`, with `#` comments.
//! The start symbol λ is written `ROOT`.

mod accept;
mod quotient;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

pub use accept::accepts;
pub use quotient::{extract_grammar, quotient, succ, QuotientNode, QuotientTree};
pub(crate) use quotient::ordered_merge;

use crate::tree::{NodeLabel, ROOT_NAME};

/// Body placeholder of entity rules, `ENT_x -> <data>`.
pub const DATA_SYMBOL: &str = "<data>";

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol {
    pub name: String,
    pub plus: bool,
}

impl Symbol {
    pub fn new(name: impl Into<String>) -> Self {
        Symbol { name: name.into(), plus: false }
    }

    pub fn plus(name: impl Into<String>) -> Self {
        Symbol { name: name.into(), plus: true }
    }

    pub fn label(&self) -> NodeLabel {
        NodeLabel::from_internal(&self.name)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.name, if self.plus { "+" } else { "" })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rule {
    pub lhs: String,
    pub rhs: Vec<Symbol>,
}

impl Rule {
    pub fn new(lhs: impl Into<String>, rhs: Vec<Symbol>) -> Self {
        Rule { lhs: lhs.into(), rhs }
    }

    pub fn lhs_label(&self) -> NodeLabel {
        NodeLabel::from_internal(&self.lhs)
    }

    pub fn is_root(&self) -> bool {
        self.lhs == ROOT_NAME
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ->", self.lhs)?;
        for s in &self.rhs {
            write!(f, " {s}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct CondensedGrammar {
    pub rules: Vec<Rule>,
}

impl CondensedGrammar {
    pub fn new(rules: Vec<Rule>) -> Self {
        CondensedGrammar { rules }
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn rule(&self, lhs: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.lhs == lhs)
    }

    pub fn root_rule(&self) -> Option<&Rule> {
        self.rule(ROOT_NAME)
    }
}

/// Renders one rule per line with a trailing newline; the empty grammar
/// renders as the empty string.
impl fmt::Display for CondensedGrammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

impl CondensedGrammar {
    /// The grammar with GROUP, REL and COLL ids renumbered 0, 1, ... in
    /// order of first appearance along a depth-first walk from `ROOT`.
    /// Rules are emitted in walk order; unreachable rules follow in their
    /// original order.
    pub fn canonical(&self) -> CondensedGrammar {
        let mut names: BTreeMap<String, String> = BTreeMap::new();
        let mut counters = [0usize; 3];
        let mut rename = |name: &str| -> String {
            if let Some(n) = names.get(name) {
                return n.clone();
            }
            let (slot, prefix) = match NodeLabel::from_internal(name) {
                NodeLabel::Group(_) => (0, "GROUP"),
                NodeLabel::Rel(_) => (1, "REL"),
                NodeLabel::Coll(_) => (2, "COLL"),
                _ => return name.to_string(),
            };
            let fresh = format!("{prefix}_{}", counters[slot]);
            counters[slot] += 1;
            names.insert(name.to_string(), fresh.clone());
            fresh
        };
        let mut order = Vec::new();
        let mut seen = vec![false; self.rules.len()];
        let mut stack: Vec<&str> = vec![ROOT_NAME];
        while let Some(sym) = stack.pop() {
            let Some(i) = self.rules.iter().position(|r| r.lhs == sym) else { continue };
            if std::mem::replace(&mut seen[i], true) {
                continue;
            }
            order.push(i);
            stack.extend(self.rules[i].rhs.iter().rev().map(|s| s.name.as_str()));
        }
        order.extend((0..self.rules.len()).filter(|&i| !seen[i]));
        let rules = order
            .into_iter()
            .map(|i| {
                let r = &self.rules[i];
                let lhs = rename(&r.lhs);
                let rhs = r.rhs.iter().map(|s| Symbol { name: rename(&s.name), plus: s.plus }).collect();
                Rule::new(lhs, rhs)
            })
            .collect();
        CondensedGrammar { rules }
    }

    pub fn equivalent_up_to_renaming(&self, other: &CondensedGrammar) -> bool {
        self.canonical() == other.canonical()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("grammar line {line}: {message}")]
pub struct GrammarParseError {
    pub line: usize,
    pub message: String,
}

impl FromStr for CondensedGrammar {
    type Err = GrammarParseError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut rules = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: &str| GrammarParseError { line: n + 1, message: message.to_string() };
            let (lhs, rhs) = line.split_once("->").ok_or_else(|| err("expected `LHS -> symbols`"))?;
            let lhs = lhs.trim();
            if lhs.is_empty() || lhs.contains(char::is_whitespace) {
                return Err(err("left-hand side must be a single symbol"));
            }
            if lhs.ends_with('+') {
                return Err(err("`+` is not allowed on a left-hand side"));
            }
            let mut symbols = Vec::new();
            for tok in rhs.split_whitespace() {
                let (name, plus) = match tok.strip_suffix('+') {
                    Some(name) => (name, true),
                    None => (tok, false),
                };
                if name.is_empty() || name.contains('+') || name.contains("->") {
                    return Err(err(&format!("malformed symbol `{tok}`")));
                }
                symbols.push(Symbol { name: name.to_string(), plus });
            }
            rules.push(Rule::new(lhs, symbols));
        }
        Ok(CondensedGrammar { rules })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const REL_COLL: &str = "ROOT -> COLL_1\nCOLL_1 -> REL_1+\nREL_1 -> GROUP_1 GROUP_2\nGROUP_1 -> ENT_1 ENT_2\nGROUP_2 -> ENT_3\n";

    #[test]
    fn text_round_trip() {
        let g: CondensedGrammar = REL_COLL.parse().unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(g.rules[1].rhs, vec![Symbol::plus("REL_1")]);
        assert_eq!(g.to_string(), REL_COLL);
        let with_data: CondensedGrammar = "# comment\n\nENT_A -> <data>\n".parse().unwrap();
        assert_eq!(with_data.to_string(), "ENT_A -> <data>\n");
        assert_eq!(CondensedGrammar::default().to_string(), "");
    }

    #[test]
    fn renaming_equivalence() {
        let a: CondensedGrammar = REL_COLL.parse().unwrap();
        let b: CondensedGrammar =
            "ROOT -> COLL_9\nGROUP_4 -> ENT_3\nCOLL_9 -> REL_2+\nREL_2 -> GROUP_7 GROUP_4\nGROUP_7 -> ENT_1 ENT_2\n"
                .parse()
                .unwrap();
        assert!(a.equivalent_up_to_renaming(&b));
        assert_eq!(
            b.canonical().to_string(),
            "ROOT -> COLL_0\nCOLL_0 -> REL_0+\nREL_0 -> GROUP_0 GROUP_1\nGROUP_0 -> ENT_1 ENT_2\nGROUP_1 -> ENT_3\n"
        );
        let swapped: CondensedGrammar = REL_COLL.replace("GROUP_1 GROUP_2", "GROUP_2 GROUP_1").parse().unwrap();
        assert!(!a.equivalent_up_to_renaming(&swapped));
        let renamed_ent: CondensedGrammar = REL_COLL.replace("ENT_3", "ENT_9").parse().unwrap();
        assert!(!a.equivalent_up_to_renaming(&renamed_ent));
    }

    #[test]
    fn parse_errors() {
        for bad in ["ROOT COLL_1", " -> A", "A B -> C", "A -> B ++", "A+ -> B", "A -> + B"] {
            assert!(bad.parse::<CondensedGrammar>().is_err(), "{bad}");
        }
        let e = "ROOT -> A\nnonsense\n".parse::<CondensedGrammar>().unwrap_err();
        assert_eq!(e.line, 2);
    }
}
