//! Ternary trie over the patterns of one layer, answering "which stored
//! regions intersect `B(q)`" without scanning the whole layer.
//!
//! The trie consumes trits from the last position to the first. Sequential
//! stripping removes controls left to right, so stored patterns and queries
//! tend to be concrete on the right, which keeps descents narrow.

use crate::pattern::{ControlPattern, Trit};

#[derive(Debug, Clone, Copy, Default)]
struct Node {
    children: [u32; 3],
    count: u32,
}

#[derive(Debug, Clone)]
pub struct RegionIndex {
    len: usize,
    nodes: Vec<Node>,
}

fn slot(trit: Trit) -> usize {
    match trit {
        Trit::Zero => 0,
        Trit::One => 1,
        Trit::Empty => 2,
    }
}

impl RegionIndex {
    pub fn new(len: usize) -> Self {
        RegionIndex {
            len,
            nodes: vec![Node::default()],
        }
    }

    pub fn from_patterns<'a>(len: usize, patterns: impl IntoIterator<Item = &'a ControlPattern>) -> Self {
        let mut index = RegionIndex::new(len);
        for p in patterns {
            index.insert(p);
        }
        index
    }

    pub fn len(&self) -> usize {
        self.nodes[0].count as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn insert(&mut self, pattern: &ControlPattern) {
        assert_eq!(pattern.len(), self.len, "pattern length does not match index");
        let mut node = 0usize;
        self.nodes[0].count += 1;
        for pos in (0..self.len).rev() {
            let s = slot(pattern.trit(pos));
            let mut child = self.nodes[node].children[s] as usize;
            if child == 0 {
                child = self.nodes.len();
                self.nodes.push(Node::default());
                self.nodes[node].children[s] = child as u32;
            }
            self.nodes[child].count += 1;
            node = child;
        }
    }

    /// Removes one copy of `pattern`; returns false if it was not stored.
    pub fn remove(&mut self, pattern: &ControlPattern) -> bool {
        if pattern.len() != self.len {
            return false;
        }
        let mut path = Vec::with_capacity(self.len + 1);
        let mut node = 0usize;
        path.push(node);
        for pos in (0..self.len).rev() {
            let child = self.nodes[node].children[slot(pattern.trit(pos))] as usize;
            if child == 0 || self.nodes[child].count == 0 {
                return false;
            }
            path.push(child);
            node = child;
        }
        if self.nodes[node].count == 0 {
            return false;
        }
        for n in path {
            self.nodes[n].count -= 1;
        }
        true
    }

    fn search(&self, query: &ControlPattern, first_only: bool) -> Vec<ControlPattern> {
        let mut found = Vec::new();
        if query.len() != self.len || self.nodes[0].count == 0 {
            return found;
        }
        // (node, depth, mask, value)
        let mut stack = vec![(0usize, 0usize, 0u64, 0u64)];
        while let Some((node, depth, mask, value)) = stack.pop() {
            if depth == self.len {
                found.push(ControlPattern::from_parts(self.len, mask, value).expect("length checked"));
                if first_only {
                    break;
                }
                continue;
            }
            let allowed: &[Trit] = match query.trit(self.len - 1 - depth) {
                Trit::Empty => &[Trit::Empty, Trit::One, Trit::Zero],
                Trit::Zero => &[Trit::Empty, Trit::Zero],
                Trit::One => &[Trit::Empty, Trit::One],
            };
            for &t in allowed {
                let child = self.nodes[node].children[slot(t)] as usize;
                if child != 0 && self.nodes[child].count > 0 {
                    let bit = 1u64 << depth;
                    let (m, v) = match t {
                        Trit::Zero => (mask | bit, value),
                        Trit::One => (mask | bit, value | bit),
                        Trit::Empty => (mask, value),
                    };
                    stack.push((child, depth + 1, m, v));
                }
            }
        }
        found
    }

    /// Some stored pattern whose region intersects `B(query)`.
    pub fn first_overlap(&self, query: &ControlPattern) -> Option<ControlPattern> {
        self.search(query, true).pop()
    }

    pub fn any_overlap(&self, query: &ControlPattern) -> bool {
        self.first_overlap(query).is_some()
    }

    /// Every stored pattern whose region intersects `B(query)`.
    pub fn overlapping(&self, query: &ControlPattern) -> Vec<ControlPattern> {
        self.search(query, false)
    }

    /// The stored pattern covering the concrete prefix `bits`, if any.
    pub fn covering(&self, bits: u64) -> Option<ControlPattern> {
        self.first_overlap(&ControlPattern::concrete(bits, self.len))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(s: &str) -> ControlPattern {
        s.parse().unwrap()
    }

    #[test]
    fn finds_overlaps_and_covers() {
        let mut idx = RegionIndex::new(3);
        idx.insert(&p("0e0"));
        idx.insert(&p("110"));
        assert!(idx.any_overlap(&p("1e0")));
        assert_eq!(idx.overlapping(&p("ee0")).len(), 2);
        assert_eq!(idx.covering(0b010), Some(p("0e0")));
        assert_eq!(idx.covering(0b111), None);
        assert!(idx.remove(&p("110")));
        assert!(!idx.remove(&p("110")));
        assert!(!idx.any_overlap(&p("1e0")));
        assert_eq!(idx.len(), 1);
    }

    #[test]
    fn zero_length_layer() {
        let mut idx = RegionIndex::new(0);
        assert_eq!(idx.covering(0), None);
        idx.insert(&ControlPattern::uncontrolled(0));
        assert_eq!(idx.covering(0), Some(ControlPattern::uncontrolled(0)));
    }

    fn arb_pattern(len: usize) -> impl Strategy<Value = ControlPattern> {
        proptest::collection::vec(0u8..3, len).prop_map(move |ts| {
            let s: String = ts.iter().map(|t| ['0', '1', 'e'][*t as usize]).collect();
            s.parse().unwrap()
        })
    }

    proptest! {
        #[test]
        fn agrees_with_linear_scan(
            stored in proptest::collection::vec(arb_pattern(5), 0..12),
            query in arb_pattern(5),
        ) {
            let idx = RegionIndex::from_patterns(5, &stored);
            let mut expect: Vec<_> = stored.iter().filter(|s| s.overlaps(&query)).copied().collect();
            let mut got = idx.overlapping(&query);
            expect.sort();
            expect.dedup();
            got.sort();
            got.dedup();
            prop_assert_eq!(got, expect);
        }
    }
}
