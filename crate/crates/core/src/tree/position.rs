use std::fmt;
use std::str::FromStr;

/// A node address: the sequence of child indices from the root.
///
/// The empty sequence is the root. Ordering is lexicographic on the
/// sequence, so a prefix sorts before every position below it and
/// preorder traversal yields positions in ascending order.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Position(Vec<usize>);

impl Position {
    pub fn root() -> Self {
        Position(Vec::new())
    }

    pub fn from_indices(indices: Vec<usize>) -> Self {
        Position(indices)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, i: usize) -> Position {
        let mut v = self.0.clone();
        v.push(i);
        Position(v)
    }

    pub fn parent(&self) -> Option<Position> {
        if self.0.is_empty() {
            None
        } else {
            Some(Position(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    /// Index of this node among its siblings.
    pub fn last(&self) -> Option<usize> {
        self.0.last().copied()
    }

    /// The prefix obtained by dropping the last `i` indices.
    pub fn ancestor(&self, i: usize) -> Option<Position> {
        if i > self.0.len() {
            None
        } else {
            Some(Position(self.0[..self.0.len() - i].to_vec()))
        }
    }

    /// `true` when `self` is a (non-strict) prefix of `other`.
    pub fn is_prefix_of(&self, other: &Position) -> bool {
        other.0.len() >= self.0.len() && other.0[..self.0.len()] == self.0[..]
    }

    pub fn concat(&self, suffix: &Position) -> Position {
        let mut v = self.0.clone();
        v.extend_from_slice(&suffix.0);
        Position(v)
    }

    /// The part of `self` below `prefix`, if `prefix` is a prefix of it.
    pub fn strip_prefix(&self, prefix: &Position) -> Option<Position> {
        if prefix.is_prefix_of(self) {
            Some(Position(self.0[prefix.0.len()..].to_vec()))
        } else {
            None
        }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "ε");
        }
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        write!(f, "{}", parts.join("."))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid position `{0}`")]
pub struct ParsePositionError(String);

/// Accepts `ε` (or the empty string) for the root, dotted form `1.0.12`,
/// or compact single-digit form `1100`.
impl FromStr for Position {
    type Err = ParsePositionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() || s == "ε" || s == "eps" {
            return Ok(Position::root());
        }
        let err = || ParsePositionError(s.to_string());
        if s.contains('.') {
            s.split('.')
                .map(|p| p.parse::<usize>().map_err(|_| err()))
                .collect::<Result<Vec<_>, _>>()
                .map(Position)
        } else {
            s.chars()
                .map(|c| c.to_digit(10).map(|d| d as usize).ok_or_else(err))
                .collect::<Result<Vec<_>, _>>()
                .map(Position)
        }
    }
}

/// Shorthand for building positions in tests and examples.
///
/// `pos!("1100")`, `pos!("1.0.1")` and `pos!("")` all work.
#[macro_export]
macro_rules! pos {
    ($s:expr) => {
        $s.parse::<$crate::tree::Position>().expect("valid position literal")
    };
}
