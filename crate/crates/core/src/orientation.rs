//! Edge-orientation constraints as a parity union-find with an undo trail.
//!
//! Variable `3p + i` is the arrow on edge `i` of prototile `p`: `false` means the arrow
//! starts at `V_{i+1}` (the counterclockwise reading), `true` that it starts at `V_{i+2}`.
//! Each shared edge contributes `x ^ y = c`. Path compression is skipped so that every
//! union is undone by resetting a single parent pointer.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrientationStore {
    parent: Vec<u32>,
    /// Parity of a node relative to its parent.
    parity: Vec<bool>,
    size: Vec<u32>,
    /// Roots attached by successful unions, most recent last.
    trail: Vec<u32>,
}

impl OrientationStore {
    pub fn new(vars: usize) -> Self {
        OrientationStore {
            parent: (0..vars as u32).collect(),
            parity: vec![false; vars],
            size: vec![1; vars],
            trail: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// Root and parity of `v` relative to it.
    pub fn find(&self, mut v: usize) -> (usize, bool) {
        let mut p = false;
        while self.parent[v] as usize != v {
            p ^= self.parity[v];
            v = self.parent[v] as usize;
        }
        (v, p)
    }

    /// Adds `x_a ^ x_b = c`; returns `false` and leaves the store unchanged on contradiction.
    pub fn union(&mut self, a: usize, b: usize, c: bool) -> bool {
        let (ra, pa) = self.find(a);
        let (rb, pb) = self.find(b);
        if ra == rb {
            return pa ^ pb == c;
        }
        let (small, large) = if self.size[ra] < self.size[rb] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[small] = large as u32;
        self.parity[small] = pa ^ pb ^ c;
        self.size[large] += self.size[small];
        self.trail.push(small as u32);
        true
    }

    /// Relation between two variables if it is determined.
    pub fn relation(&self, a: usize, b: usize) -> Option<bool> {
        let (ra, pa) = self.find(a);
        let (rb, pb) = self.find(b);
        (ra == rb).then_some(pa ^ pb)
    }

    pub fn mark(&self) -> usize {
        self.trail.len()
    }

    pub fn rollback(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let s = self.trail.pop().expect("trail entry") as usize;
            let r = self.parent[s] as usize;
            self.size[r] -= self.size[s];
            self.parent[s] = s as u32;
            self.parity[s] = false;
        }
    }

    /// Whether a total assignment satisfies every recorded relation.
    pub fn satisfied_by(&self, x: &[bool]) -> bool {
        (0..self.len()).all(|v| {
            let (r, p) = self.find(v);
            x[v] == x[r] ^ p
        })
    }
}
