use std::collections::HashMap;

use super::{CondensedGrammar, Symbol};
use crate::tree::Tree;

/// `true` iff `tree` is a derivation of `grammar`.
///
/// Every internal node outside entity sub-trees needs a rule for its label
/// whose right-hand side its children realise: a `+` symbol covers one or
/// more consecutive children with that label, a plain symbol exactly one.
/// With `allow_missing`, any symbol may also be realised zero times.
/// A leaf with a rule realises the empty sequence.
pub fn accepts(grammar: &CondensedGrammar, tree: &Tree, allow_missing: bool) -> bool {
    let rules: HashMap<&str, &[Symbol]> = grammar
        .rules
        .iter()
        .map(|r| (r.lhs.as_str(), r.rhs.as_slice()))
        .collect();
    node_ok(&rules, tree, allow_missing)
}

fn node_ok(rules: &HashMap<&str, &[Symbol]>, t: &Tree, allow_missing: bool) -> bool {
    if t.label().is_entity() || t.label().is_token() {
        return true;
    }
    let name = t.label().to_string();
    let children: Vec<String> = t.children().iter().map(|c| c.label().to_string()).collect();
    let ok = match rules.get(name.as_str()) {
        Some(rhs) => realises(&children, rhs, allow_missing),
        None => t.is_leaf(),
    };
    ok && t.children().iter().all(|c| node_ok(rules, c, allow_missing))
}

fn realises(children: &[String], rhs: &[Symbol], allow_missing: bool) -> bool {
    let (n, m) = (children.len(), rhs.len());
    // reach[j][i]: first j symbols can produce the first i children
    let mut reach = vec![vec![false; n + 1]; m + 1];
    reach[0][0] = true;
    for j in 0..m {
        let s = &rhs[j];
        for i in 0..=n {
            if !reach[j][i] {
                continue;
            }
            if allow_missing {
                reach[j + 1][i] = true;
            }
            let mut k = i;
            while k < n && children[k] == s.name {
                k += 1;
                reach[j + 1][k] = true;
                if !s.plus {
                    break;
                }
            }
        }
    }
    reach[m][n]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bracket::parse_tree;
    use crate::grammar::extract_grammar;
    use crate::tree::Tree;

    fn xy_grammar() -> CondensedGrammar {
        "ROOT -> X+ Y\nX -> a b c\nY -> a\n".parse().unwrap()
    }

    #[test]
    fn incomplete_derivations() {
        let t = parse_tree("(ROOT (X a b) (X b c) (Y a))").unwrap();
        assert!(accepts(&xy_grammar(), &t, true));
        assert!(!accepts(&xy_grammar(), &t, false));
        let full = parse_tree("(ROOT (X a b c) (X a b c) (Y a))").unwrap();
        assert!(accepts(&xy_grammar(), &full, false));
    }

    #[test]
    fn empty_grammar_accepts_single_node() {
        assert!(accepts(&CondensedGrammar::default(), &Tree::empty(), false));
        assert!(!accepts(&CondensedGrammar::default(), &parse_tree("(ROOT (X a))").unwrap(), true));
    }

    #[test]
    fn plus_and_order() {
        let g = xy_grammar();
        // Y before X violates the order
        assert!(!accepts(&g, &parse_tree("(ROOT (Y a) (X a))").unwrap(), true));
        // a non-repeated symbol cannot be realised twice
        assert!(!accepts(&g, &parse_tree("(ROOT (X a a))").unwrap(), true));
        assert!(accepts(&g, &parse_tree("(ROOT (X a) (X c) (X b))").unwrap(), true));
    }

    #[test]
    fn entity_contents_are_data() {
        let t = parse_tree("(ROOT (GROUP_0 (ENT_A (NN x) y)))").unwrap();
        let g = extract_grammar(&t);
        assert_eq!(g.to_string(), "ROOT -> GROUP_0\nGROUP_0 -> ENT_A\n");
        assert!(accepts(&g, &t, false));
    }
}
