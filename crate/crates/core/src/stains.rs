//! Stains of an elimination forest in a tree decomposition, the conflict
//! graph they induce, and its colouring.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::bitset::{BitSet, NodeSet, VertexSet};
use crate::decomp::{EliminationForest, TreeDecomposition};
use crate::error::{Error, Result};
use crate::factors::{maximal_factorization, Factor};
use crate::hypergraph::Hypergraph;

/// `mn(u)`: the node whose margin holds `u`.
pub fn mn(t: &TreeDecomposition, u: usize) -> usize {
    t.margin_node(u)
        .expect("every vertex lies in some margin of a valid decomposition")
}

/// `{mn(u)}` plus the tree paths from `mn(u)` to `mn(v)` for each child `v` of `u`.
pub fn stain(t: &TreeDecomposition, f: &EliminationForest, u: usize) -> NodeSet {
    let m = mn(t, u);
    f.children(u)
        .iter()
        .fold(BitSet::singleton(m), |s, &v| s | t.path(m, mn(t, v)))
}

pub fn stains(t: &TreeDecomposition, f: &EliminationForest) -> Vec<NodeSet> {
    (0..f.len()).map(|u| stain(t, f, u)).collect()
}

/// Vertices of `H`, adjacent when their stains meet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConflictGraph {
    pub stains: Vec<NodeSet>,
    pub adj: Vec<VertexSet>,
}

impl ConflictGraph {
    pub fn new(t: &TreeDecomposition, f: &EliminationForest) -> Self {
        let stains = stains(t, f);
        let n = stains.len();
        let adj = (0..n)
            .map(|u| {
                (0..n)
                    .filter(|&v| v != u && stains[u].intersects(stains[v]))
                    .collect()
            })
            .collect();
        ConflictGraph { stains, adj }
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.len() {
            for v in self.adj[u].iter().filter(|&v| v > u) {
                out.push((u, v));
            }
        }
        out
    }

    /// Maximum cardinality search order (visit order).
    pub fn mcs_order(&self) -> Vec<usize> {
        let n = self.len();
        let mut weight = vec![0usize; n];
        let mut done = BitSet::EMPTY;
        let mut order = Vec::with_capacity(n);
        for _ in 0..n {
            let v = (0..n)
                .filter(|&v| !done.contains(v))
                .max_by_key(|&v| (weight[v], usize::MAX - v))
                .unwrap();
            done.insert(v);
            order.push(v);
            for w in self.adj[v] - done {
                weight[w] += 1;
            }
        }
        order
    }

    /// A perfect elimination ordering, if the graph is chordal.
    pub fn perfect_elimination_order(&self) -> Option<Vec<usize>> {
        let mut peo = self.mcs_order();
        peo.reverse();
        let mut pos = vec![0; self.len()];
        for (i, &v) in peo.iter().enumerate() {
            pos[v] = i;
        }
        for &v in &peo {
            let later: VertexSet = self.adj[v].iter().filter(|&w| pos[w] > pos[v]).collect();
            if let Some(p) = later.iter().min_by_key(|&w| pos[w]) {
                if !(later.without(p)).is_subset(self.adj[p]) {
                    return None;
                }
            }
        }
        Some(peo)
    }

    pub fn is_chordal(&self) -> bool {
        self.perfect_elimination_order().is_some()
    }

    /// Exact chromatic number and an optimal colouring, by greedy colouring
    /// along a reversed perfect elimination order.
    pub fn chromatic_number(&self) -> Result<(usize, Vec<usize>)> {
        let peo = self
            .perfect_elimination_order()
            .ok_or_else(|| Error::Invariant("conflict graph is not chordal".into()))?;
        let mut colour = vec![usize::MAX; self.len()];
        for &v in peo.iter().rev() {
            let used: u64 = self.adj[v]
                .iter()
                .filter(|&w| colour[w] != usize::MAX)
                .fold(0, |a, w| a | 1 << colour[w]);
            colour[v] = (!used).trailing_zeros() as usize;
        }
        let k = colour.iter().map(|&c| c + 1).max().unwrap_or(0);
        Ok((k, colour))
    }

    /// Largest clique, read off the perfect elimination order.
    pub fn clique_number(&self) -> Result<usize> {
        let peo = self
            .perfect_elimination_order()
            .ok_or_else(|| Error::Invariant("conflict graph is not chordal".into()))?;
        let mut pos = vec![0; self.len()];
        for (i, &v) in peo.iter().enumerate() {
            pos[v] = i;
        }
        Ok(peo
            .iter()
            .map(|&v| self.adj[v].iter().filter(|&w| pos[w] > pos[v]).count() + 1)
            .max()
            .unwrap_or(0))
    }

    /// All maximal cliques (Bron-Kerbosch with pivoting).
    pub fn maximal_cliques(&self) -> Vec<VertexSet> {
        fn bk(
            adj: &[VertexSet],
            r: VertexSet,
            p: VertexSet,
            x: VertexSet,
            out: &mut Vec<VertexSet>,
        ) {
            if p.is_empty() && x.is_empty() {
                out.push(r);
                return;
            }
            let pivot = (p | x).iter().max_by_key(|&u| (adj[u] & p).len()).unwrap();
            let (mut p, mut x) = (p, x);
            for v in (p - adj[pivot]).iter() {
                bk(adj, r.with(v), p & adj[v], x & adj[v], out);
                p.remove(v);
                x.insert(v);
            }
        }
        let mut out = Vec::new();
        if !self.is_empty() {
            bk(
                &self.adj,
                BitSet::EMPTY,
                BitSet::full(self.len()),
                BitSet::EMPTY,
                &mut out,
            );
        }
        out
    }

    /// A maximal clique whose stains have no common node, if any.
    pub fn helly_violation(&self) -> Option<VertexSet> {
        self.maximal_cliques().into_iter().find(|c| {
            c.iter()
                .fold(BitSet(u64::MAX), |a, u| a & self.stains[u])
                .is_empty()
        })
    }
}

/// Edges `(x, u)` of the stain intersection graph: node `x` lies in `Stain(u)`.
pub fn stain_intersection_graph(
    t: &TreeDecomposition,
    f: &EliminationForest,
) -> Vec<(usize, usize)> {
    let st = stains(t, f);
    let mut out = Vec::new();
    for x in 0..t.num_nodes() {
        for (u, s) in st.iter().enumerate() {
            if s.contains(x) {
                out.push((x, u));
            }
        }
    }
    out
}

/// Degree of each node in the stain intersection graph.
pub fn sg_degrees(t: &TreeDecomposition, f: &EliminationForest) -> Vec<usize> {
    let st = stains(t, f);
    (0..t.num_nodes())
        .map(|x| st.iter().filter(|s| s.contains(x)).count())
        .collect()
}

/// Which block of the characteristic partition a factor came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Block {
    Margin,
    Outside,
    Child(usize),
}

/// `{mrg(x), V(H) \ cmp(x)} ∪ {cmp(y) : y child of x}`, empty blocks dropped.
pub fn characteristic_partition(
    h: &Hypergraph,
    t: &TreeDecomposition,
    x: usize,
) -> Vec<(Block, VertexSet)> {
    let mut out = vec![
        (Block::Margin, t.margin(x)),
        (Block::Outside, h.vertices() - t.component(x)),
    ];
    out.extend(
        t.children(x)
            .iter()
            .map(|&y| (Block::Child(y), t.component(y))),
    );
    out.retain(|(_, s)| !s.is_empty());
    out
}

/// `MF` of every block of the characteristic partition of `x`.
pub fn characteristic_factorization(
    h: &Hypergraph,
    t: &TreeDecomposition,
    f: &EliminationForest,
    x: usize,
) -> Vec<(Block, Factor)> {
    let mut out = Vec::new();
    for (b, s) in characteristic_partition(h, t, x) {
        out.extend(maximal_factorization(f, s).into_iter().map(|fac| (b, fac)));
    }
    out
}

/// Context factors of the characteristic factorization outside the margin.
pub fn non_margin_contexts(
    h: &Hypergraph,
    t: &TreeDecomposition,
    f: &EliminationForest,
    x: usize,
) -> Vec<Factor> {
    characteristic_factorization(h, t, f, x)
        .into_iter()
        .filter(|(b, fac)| *b != Block::Margin && fac.is_context())
        .map(|(_, fac)| fac)
        .collect()
}

/// Checks that every stain-graph edge `(x, u)` with `mn(u) != x` has `u` as
/// the appendix parent of a non-margin context factor at `x`.
pub fn check_non_margin_edges(
    h: &Hypergraph,
    t: &TreeDecomposition,
    f: &EliminationForest,
) -> Result<()> {
    for (x, u) in stain_intersection_graph(t, f) {
        if mn(t, u) == x {
            continue;
        }
        let ok = non_margin_contexts(h, t, f, x)
            .into_iter()
            .any(|fac| match fac {
                Factor::Context { appendices, .. } => {
                    appendices.iter().any(|w| f.parent(w) == Some(u))
                }
                _ => false,
            });
        if !ok {
            return Err(Error::Invariant(format!(
                "stain of vertex {} crosses node {} without a context factor",
                h.label(u),
                x + 1
            )));
        }
    }
    Ok(())
}
