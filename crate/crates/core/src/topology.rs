//! Edge-incidence checks shared by the hand model and the collision mesh.

use std::collections::BTreeMap;

/// An undirected edge that is not shared by exactly two faces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BadEdge {
    pub a: usize,
    pub b: usize,
    pub incidence: usize,
}

impl std::fmt::Display for BadEdge {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "edge ({}, {}) is shared by {} face(s), expected 2",
            self.a, self.b, self.incidence
        )
    }
}

/// Returns the first edge (in sorted order) whose face incidence is not 2.
pub fn find_non_manifold_edge(faces: &[[usize; 3]]) -> Option<BadEdge> {
    let mut counts: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for f in faces {
        for (i, j) in [(0, 1), (1, 2), (2, 0)] {
            let (a, b) = (f[i].min(f[j]), f[i].max(f[j]));
            *counts.entry((a, b)).or_insert(0) += 1;
        }
    }
    counts
        .into_iter()
        .find(|&(_, n)| n != 2)
        .map(|((a, b), incidence)| BadEdge { a, b, incidence })
}
