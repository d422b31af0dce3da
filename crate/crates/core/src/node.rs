//! Nodes (finite sequences of non-negative integers), the prefix order, and
//! orchard/tree predicates on finite node sets.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

/// A finite sequence of non-negative integers.  The empty sequence is the
/// root.  `Ord` is lexicographic with shorter-prefix-first, which makes
/// ancestors sort before descendants.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Node(pub Vec<u32>);

impl Node {
    pub fn root() -> Self {
        Node(Vec::new())
    }

    pub fn from_slice(s: &[u32]) -> Self {
        Node(s.to_vec())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    /// Immediate parent; None for the root.
    pub fn parent(&self) -> Option<Node> {
        if self.0.is_empty() {
            None
        } else {
            Some(Node(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    pub fn child(&self, i: u32) -> Node {
        let mut v = self.0.clone();
        v.push(i);
        Node(v)
    }

    /// True when self is a (not necessarily proper) prefix of other.
    pub fn is_prefix_of(&self, other: &Node) -> bool {
        other.0.len() >= self.0.len() && other.0[..self.0.len()] == self.0[..]
    }

    pub fn is_proper_prefix_of(&self, other: &Node) -> bool {
        self.0.len() < other.0.len() && self.is_prefix_of(other)
    }

    pub fn comparable(&self, other: &Node) -> bool {
        self.is_prefix_of(other) || other.is_prefix_of(self)
    }

    /// All proper non-root ancestors, shortest first.
    pub fn proper_ancestors(&self) -> impl Iterator<Item = Node> + '_ {
        (1..self.0.len()).map(move |l| Node(self.0[..l].to_vec()))
    }

    /// Prefixes of self (including self) that lie in `set`, shortest first.
    pub fn prefixes_in<'a>(&'a self, set: &'a BTreeSet<Node>) -> impl Iterator<Item = Node> + 'a {
        (1..=self.0.len())
            .map(move |l| Node(self.0[..l].to_vec()))
            .filter(move |n| set.contains(n))
    }
}

impl fmt::Debug for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "()");
        }
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

/// An orchard: a finite node set, root excluded, closed under non-root
/// ancestors (so adding the root yields a tree).
pub fn is_orchard(nodes: &BTreeSet<Node>) -> bool {
    nodes.iter().all(|n| {
        !n.is_root() && n.proper_ancestors().all(|a| nodes.contains(&a))
    })
}

/// A tree: contains the root and is closed under parents.
pub fn is_tree(nodes: &BTreeSet<Node>) -> bool {
    nodes.contains(&Node::root())
        && nodes
            .iter()
            .all(|n| n.parent().map_or(true, |p| nodes.contains(&p)))
}

/// Children of `parent` within `nodes`.
pub fn children_in<'a>(nodes: &'a BTreeSet<Node>, parent: &'a Node) -> Vec<&'a Node> {
    nodes
        .iter()
        .filter(|n| n.len() == parent.len() + 1 && parent.is_prefix_of(n))
        .collect()
}

/// Nodes of `nodes` with no children inside `nodes`.
pub fn leaves(nodes: &BTreeSet<Node>) -> Vec<&Node> {
    nodes
        .iter()
        .filter(|n| children_in(nodes, n).is_empty())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(s: &[u32]) -> Node {
        Node::from_slice(s)
    }

    #[test]
    fn prefix_order() {
        assert!(n(&[0]).is_prefix_of(&n(&[0, 1])));
        assert!(!n(&[0, 1]).is_prefix_of(&n(&[0])));
        assert!(Node::root().is_prefix_of(&n(&[3])));
        assert!(!n(&[0]).comparable(&n(&[1])));
        assert_eq!(n(&[0, 1]).parent(), Some(n(&[0])));
        assert_eq!(Node::root().parent(), None);
    }

    #[test]
    fn ordering_puts_ancestors_first() {
        let mut v = vec![n(&[0, 1]), n(&[0]), n(&[1]), Node::root()];
        v.sort();
        assert_eq!(v, vec![Node::root(), n(&[0]), n(&[0, 1]), n(&[1])]);
    }

    #[test]
    fn orchard_and_tree_predicates() {
        let orchard: BTreeSet<Node> =
            [n(&[0]), n(&[0, 0]), n(&[1])].into_iter().collect();
        assert!(is_orchard(&orchard));
        assert!(!is_tree(&orchard));
        let broken: BTreeSet<Node> = [n(&[0, 0])].into_iter().collect();
        assert!(!is_orchard(&broken));
        let mut tree = orchard.clone();
        tree.insert(Node::root());
        assert!(is_tree(&tree));
        let empty: BTreeSet<Node> = BTreeSet::new();
        assert!(is_orchard(&empty));
    }

    #[test]
    fn children_and_leaves() {
        let set: BTreeSet<Node> = [n(&[0]), n(&[0, 0]), n(&[0, 2]), n(&[1])]
            .into_iter()
            .collect();
        let parent = n(&[0]);
        let kids = children_in(&set, &parent);
        assert_eq!(kids, vec![&n(&[0, 0]), &n(&[0, 2])]);
        let lv = leaves(&set);
        assert_eq!(lv, vec![&n(&[0, 0]), &n(&[0, 2]), &n(&[1])]);
    }
}
