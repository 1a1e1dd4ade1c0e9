use std::fmt;

/// Auxiliary nodes introduced when nested entities are unnested.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AuxKind {
    /// Entity relation: the outer entity paired with its contained entities.
    Er,
    /// Entity collection: the contained entities.
    Ec,
}

/// Label of a tree node.
///
/// `Syntactic` covers parser tags and the anonymous nodes created while
/// rewriting; together with `Aux` these are the "uncategorized" labels the
/// structuring loop tries to eliminate.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeLabel {
    Root,
    Syntactic(String),
    Entity(String),
    Group(String),
    Rel(String),
    Coll(String),
    Token(String),
    Aux(AuxKind),
}

/// Tag given to intermediate nodes created by the rewrite engine.
pub const UNLABELED_TAG: &str = "_";

pub const ROOT_NAME: &str = "ROOT";

impl NodeLabel {
    pub fn syntactic(tag: impl Into<String>) -> Self {
        NodeLabel::Syntactic(tag.into())
    }

    pub fn entity(name: impl Into<String>) -> Self {
        NodeLabel::Entity(name.into())
    }

    pub fn group(id: impl Into<String>) -> Self {
        NodeLabel::Group(id.into())
    }

    pub fn rel(id: impl Into<String>) -> Self {
        NodeLabel::Rel(id.into())
    }

    pub fn coll(id: impl Into<String>) -> Self {
        NodeLabel::Coll(id.into())
    }

    pub fn token(text: impl Into<String>) -> Self {
        NodeLabel::Token(text.into())
    }

    pub fn unlabeled() -> Self {
        NodeLabel::Syntactic(UNLABELED_TAG.to_string())
    }

    /// ENT, GROUP, REL or COLL: a concept of the target schema.
    pub fn is_categorized(&self) -> bool {
        matches!(
            self,
            NodeLabel::Entity(_) | NodeLabel::Group(_) | NodeLabel::Rel(_) | NodeLabel::Coll(_)
        )
    }

    /// Syntactic or auxiliary: an internal node that still needs structuring.
    pub fn is_uncategorized(&self) -> bool {
        matches!(self, NodeLabel::Syntactic(_) | NodeLabel::Aux(_))
    }

    pub fn is_entity(&self) -> bool {
        matches!(self, NodeLabel::Entity(_))
    }

    pub fn is_group(&self) -> bool {
        matches!(self, NodeLabel::Group(_))
    }

    pub fn is_rel(&self) -> bool {
        matches!(self, NodeLabel::Rel(_))
    }

    pub fn is_coll(&self) -> bool {
        matches!(self, NodeLabel::Coll(_))
    }

    pub fn is_token(&self) -> bool {
        matches!(self, NodeLabel::Token(_))
    }

    pub fn is_root(&self) -> bool {
        matches!(self, NodeLabel::Root)
    }

    /// The name or id carried by the label, if any.
    pub fn name(&self) -> Option<&str> {
        match self {
            NodeLabel::Syntactic(s)
            | NodeLabel::Entity(s)
            | NodeLabel::Group(s)
            | NodeLabel::Rel(s)
            | NodeLabel::Coll(s)
            | NodeLabel::Token(s) => Some(s),
            NodeLabel::Root | NodeLabel::Aux(_) => None,
        }
    }

    /// Classifies a rendered internal-node label. Inverse of `Display` for
    /// everything except tokens, which are only recognisable by position.
    pub fn from_internal(text: &str) -> NodeLabel {
        if text == ROOT_NAME {
            return NodeLabel::Root;
        }
        if text == "ER" {
            return NodeLabel::Aux(AuxKind::Er);
        }
        if text == "EC" {
            return NodeLabel::Aux(AuxKind::Ec);
        }
        for (prefix, make) in [
            ("ENT_", NodeLabel::Entity as fn(String) -> NodeLabel),
            ("GROUP_", NodeLabel::Group),
            ("REL_", NodeLabel::Rel),
            ("COLL_", NodeLabel::Coll),
        ] {
            if let Some(rest) = text.strip_prefix(prefix) {
                if !rest.is_empty() {
                    return make(rest.to_string());
                }
            }
        }
        NodeLabel::Syntactic(text.to_string())
    }
}

impl fmt::Display for NodeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeLabel::Root => f.write_str(ROOT_NAME),
            NodeLabel::Syntactic(s) | NodeLabel::Token(s) => f.write_str(s),
            NodeLabel::Entity(s) => write!(f, "ENT_{s}"),
            NodeLabel::Group(s) => write!(f, "GROUP_{s}"),
            NodeLabel::Rel(s) => write!(f, "REL_{s}"),
            NodeLabel::Coll(s) => write!(f, "COLL_{s}"),
            NodeLabel::Aux(AuxKind::Er) => f.write_str("ER"),
            NodeLabel::Aux(AuxKind::Ec) => f.write_str("EC"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rendering_round_trips_for_internal_labels() {
        for l in [
            NodeLabel::Root,
            NodeLabel::syntactic("NP"),
            NodeLabel::entity("SOSY"),
            NodeLabel::group("3"),
            NodeLabel::rel("0"),
            NodeLabel::coll("12"),
            NodeLabel::Aux(AuxKind::Er),
            NodeLabel::Aux(AuxKind::Ec),
        ] {
            assert_eq!(NodeLabel::from_internal(&l.to_string()), l);
        }
    }

    #[test]
    fn bare_prefix_is_syntactic() {
        assert_eq!(NodeLabel::from_internal("ENT_"), NodeLabel::syntactic("ENT_"));
    }
}
