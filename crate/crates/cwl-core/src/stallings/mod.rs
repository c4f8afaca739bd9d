//! Stallings foldings for finitely generated subgroups of free groups.
//!
//! A subgroup H = <w_1, .., w_k> of F_r is represented by its folded core
//! graph: the wedge of loops spelling the generators, folded until no vertex
//! carries two equal-label edges in the same direction, then trimmed of
//! dangling non-basepoint vertices. Words are accepted exactly when they
//! read a loop at the basepoint, which decides membership in H.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::group::word;

#[derive(Debug, Error)]
pub enum StallingsError {
    #[error("the free group must have rank at least 1")]
    EmptyAlphabet,
    #[error("generator word {index} uses a letter outside rank {rank}")]
    LetterOutOfRange { index: usize, rank: usize },
}

/// Folded core automaton of a finitely generated subgroup of F_r.
///
/// Vertices are numbered canonically: breadth-first from the basepoint,
/// transitions explored in signed-letter order (a, a^-1, b, b^-1, ..).
#[derive(Debug, Clone)]
pub struct StallingsGraph {
    rank: usize,
    /// trans[v][slot(x)] = target of the x-edge at v, if present.
    trans: Vec<Vec<Option<u32>>>,
}

/// Subgroup index: vertex count of a complete automaton, or infinite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Index {
    Finite(u64),
    Infinite,
}

/// Trichotomy of the free-group classification: a finitely generated
/// subgroup admits the subexponential-weight convolution inequality exactly
/// when it has finite index, or is trivial or infinite cyclic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FreePairVerdict {
    SlcYesFiniteIndex,
    SlcYesTrivialOrZ,
    SlcNoRankGe2InfiniteIndex,
}

#[inline]
fn slot(letter: i8) -> usize {
    let base = (letter.unsigned_abs() as usize - 1) * 2;
    if letter > 0 {
        base
    } else {
        base + 1
    }
}

impl StallingsGraph {
    /// Folds the wedge of loops spelling `generators` (reduced words over
    /// rank `r`).
    pub fn fold(rank: usize, generators: &[Vec<i8>]) -> Result<Self, StallingsError> {
        if rank == 0 {
            return Err(StallingsError::EmptyAlphabet);
        }
        for (index, w) in generators.iter().enumerate() {
            if w.iter().any(|&x| x == 0 || x.unsigned_abs() as usize > rank) {
                return Err(StallingsError::LetterOutOfRange { index, rank });
            }
        }

        // wedge of loops: edges (u, letter, v) with positive letters
        let mut edges: Vec<(u32, i8, u32)> = Vec::new();
        let mut n_vertices = 1u32;
        for w in generators {
            let w = word::reduce(w);
            if w.is_empty() {
                continue;
            }
            let mut prev = 0u32;
            for (i, &x) in w.iter().enumerate() {
                let next = if i + 1 == w.len() {
                    0
                } else {
                    n_vertices += 1;
                    n_vertices - 1
                };
                if x > 0 {
                    edges.push((prev, x, next));
                } else {
                    edges.push((next, -x, prev));
                }
                prev = next;
            }
        }

        // fold: repeatedly merge targets of equal-label edges at a vertex
        let mut uf = UnionFind::new(n_vertices as usize);
        loop {
            let mut seen: BTreeMap<(u32, i8, bool), u32> = BTreeMap::new();
            let mut merge: Option<(u32, u32)> = None;
            'scan: for &(u, x, v) in &edges {
                let (u, v) = (uf.find(u), uf.find(v));
                for (key, far) in [((u, x, true), v), ((v, x, false), u)] {
                    if let Some(&other) = seen.get(&key) {
                        if other != far {
                            merge = Some((other.min(far), other.max(far)));
                            break 'scan;
                        }
                    } else {
                        seen.insert(key, far);
                    }
                }
            }
            match merge {
                Some((a, b)) => uf.union(a, b),
                None => break,
            }
        }

        // collapse edges through the union-find and dedup
        let mut folded: Vec<(u32, i8, u32)> = edges
            .iter()
            .map(|&(u, x, v)| (uf.find(u), x, uf.find(v)))
            .collect();
        folded.sort();
        folded.dedup();

        // trim non-basepoint vertices of degree <= 1
        let base = uf.find(0);
        loop {
            let mut degree: BTreeMap<u32, u32> = BTreeMap::new();
            for &(u, _, v) in &folded {
                *degree.entry(u).or_default() += 1;
                *degree.entry(v).or_default() += 1;
            }
            let before = folded.len();
            folded.retain(|&(u, _, v)| {
                let keep = |w: u32| w == base || degree.get(&w).copied().unwrap_or(0) >= 2;
                keep(u) && keep(v)
            });
            if folded.len() == before {
                break;
            }
        }

        // canonical renumbering: BFS from the basepoint in slot order
        let mut adj: BTreeMap<u32, Vec<Option<u32>>> = BTreeMap::new();
        adj.insert(base, vec![None; 2 * rank]);
        for &(u, x, v) in &folded {
            adj.entry(u).or_insert_with(|| vec![None; 2 * rank])[slot(x)] = Some(v);
            adj.entry(v).or_insert_with(|| vec![None; 2 * rank])[slot(-x)] = Some(u);
        }
        let mut order: BTreeMap<u32, u32> = BTreeMap::new();
        order.insert(base, 0);
        let mut queue = std::collections::VecDeque::from([base]);
        while let Some(v) = queue.pop_front() {
            for s in 0..2 * rank {
                if let Some(t) = adj[&v][s] {
                    if !order.contains_key(&t) {
                        order.insert(t, order.len() as u32);
                        queue.push_back(t);
                    }
                }
            }
        }
        let mut trans = vec![vec![None; 2 * rank]; order.len()];
        for (old, slots) in &adj {
            let Some(&new) = order.get(old) else { continue };
            for (s, t) in slots.iter().enumerate() {
                trans[new as usize][s] = t.and_then(|t| order.get(&t).copied());
            }
        }
        Ok(StallingsGraph { rank, trans })
    }

    pub fn rank_of_free_group(&self) -> usize {
        self.rank
    }

    pub fn vertex_count(&self) -> usize {
        self.trans.len()
    }

    pub fn edge_count(&self) -> usize {
        self.trans
            .iter()
            .map(|slots| {
                (0..self.rank)
                    .filter(|&i| slots[2 * i].is_some())
                    .count()
            })
            .sum()
    }

    /// Follows the x-edge from vertex v, if defined.
    pub fn step(&self, v: u32, letter: i8) -> Option<u32> {
        self.trans[v as usize][slot(letter)]
    }

    /// True when the reduced word reads a loop at the basepoint.
    pub fn accepts(&self, w: &[i8]) -> bool {
        let mut v = 0u32;
        for &x in w {
            match self.step(v, x) {
                Some(t) => v = t,
                None => return false,
            }
        }
        v == 0
    }

    /// Subgroup rank (E - V + 1 of the core) and index ([F_r : H] equals the
    /// vertex count exactly when the automaton is complete).
    pub fn rank_index(&self) -> (usize, Index) {
        let e = self.edge_count();
        let v = self.vertex_count();
        let rank = e + 1 - v;
        let complete = self
            .trans
            .iter()
            .all(|slots| slots.iter().all(|t| t.is_some()));
        let index = if complete {
            Index::Finite(v as u64)
        } else {
            Index::Infinite
        };
        (rank, index)
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph stallings {\n  rankdir=LR;\n  0 [shape=doublecircle];\n");
        for (v, slots) in self.trans.iter().enumerate() {
            for i in 0..self.rank {
                if let Some(t) = slots[2 * i] {
                    out.push_str(&format!(
                        "  {v} -> {t} [label=\"{}\"];\n",
                        word::letter_name((i + 1) as i8)
                    ));
                }
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Classification of the pair (F_n, H) from the folded graph of H.
pub fn classify_pair_free(
    rank: usize,
    generators: &[Vec<i8>],
) -> Result<(FreePairVerdict, StallingsGraph), StallingsError> {
    let graph = StallingsGraph::fold(rank, generators)?;
    let (h_rank, index) = graph.rank_index();
    let verdict = match (h_rank, index) {
        (_, Index::Finite(_)) => FreePairVerdict::SlcYesFiniteIndex,
        (0 | 1, Index::Infinite) => FreePairVerdict::SlcYesTrivialOrZ,
        (_, Index::Infinite) => FreePairVerdict::SlcNoRankGe2InfiniteIndex,
    };
    Ok((verdict, graph))
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
        }
    }

    fn find(&mut self, x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        let mut cur = x;
        while cur != root {
            let next = self.parent[cur as usize];
            self.parent[cur as usize] = root;
            cur = next;
        }
        root
    }

    /// Merges, keeping the smaller id as representative (deterministic).
    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi as usize] = lo;
        }
    }
}
