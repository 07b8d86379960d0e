use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::bitset::{BitSet, VertexSet};
use crate::error::{Error, Result};
use crate::hypergraph::Hypergraph;
use crate::rational::Rational;
use crate::widths::WidthCache;

use super::TreeDecomposition;

/// A rooted forest on the vertices `0..n`, stored as a parent map.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EliminationForest {
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    depth: Vec<usize>,
    sub: Vec<VertexSet>,
    anc: Vec<VertexSet>,
}

impl EliminationForest {
    /// Checks that `parent` is acyclic. Ancestry of edges is checked by [`EliminationForest::validate`].
    pub fn new(parent: Vec<Option<usize>>) -> Result<Self> {
        let n = parent.len();
        if n > BitSet::CAPACITY {
            return Err(Error::InvalidForest(format!(
                "more than {} vertices",
                BitSet::CAPACITY
            )));
        }
        let mut children = vec![Vec::new(); n];
        for (u, p) in parent.iter().enumerate() {
            if let Some(p) = *p {
                if p >= n || p == u {
                    return Err(Error::InvalidForest(format!(
                        "vertex index {u} has a bad parent"
                    )));
                }
                children[p].push(u);
            }
        }
        let mut depth = vec![0; n];
        let mut anc = vec![BitSet::EMPTY; n];
        let mut order = Vec::with_capacity(n);
        let mut stack: Vec<usize> = (0..n).rev().filter(|&u| parent[u].is_none()).collect();
        while let Some(u) = stack.pop() {
            order.push(u);
            for &c in children[u].iter().rev() {
                depth[c] = depth[u] + 1;
                anc[c] = anc[u].with(u);
                stack.push(c);
            }
        }
        if order.len() != n {
            return Err(Error::InvalidForest("parent map has a cycle".into()));
        }
        let mut sub = vec![BitSet::EMPTY; n];
        for &u in order.iter().rev() {
            let mut s = BitSet::singleton(u);
            for &c in &children[u] {
                s |= sub[c];
            }
            sub[u] = s;
        }
        Ok(EliminationForest {
            parent,
            children,
            depth,
            sub,
            anc,
        })
    }

    /// [`EliminationForest::new`] followed by [`EliminationForest::validate`].
    pub fn for_hypergraph(h: &Hypergraph, parent: Vec<Option<usize>>) -> Result<Self> {
        if parent.len() != h.num_vertices() {
            return Err(Error::InvalidForest(
                "parent map size differs from vertex count".into(),
            ));
        }
        let f = Self::new(parent)?;
        f.validate(h)?;
        Ok(f)
    }

    /// Every edge must be totally ordered by the ancestor relation.
    /// Forest of an elimination order: each vertex hangs below its first
    /// later neighbour in the fill-in graph.
    pub fn from_order(h: &Hypergraph, order: &[usize]) -> Result<Self> {
        let n = h.num_vertices();
        let mut nb: Vec<VertexSet> = (0..n).map(|v| h.neighbours(v)).collect();
        let mut pos = vec![usize::MAX; n];
        for (i, &v) in order.iter().enumerate() {
            pos[v] = i;
        }
        if order.len() != n || pos.contains(&usize::MAX) {
            return Err(Error::InvalidForest(
                "elimination order is not a permutation of the vertices".into(),
            ));
        }
        let mut parent = vec![None; n];
        for &v in order {
            let later: VertexSet = nb[v].iter().filter(|&w| pos[w] > pos[v]).collect();
            for w in later {
                nb[w] = nb[w] | later.without(w);
            }
            parent[v] = later.iter().min_by_key(|&w| pos[w]);
        }
        Self::for_hypergraph(h, parent)
    }

    pub fn validate(&self, h: &Hypergraph) -> Result<()> {
        if self.len() != h.num_vertices() {
            return Err(Error::InvalidForest(
                "forest size differs from vertex count".into(),
            ));
        }
        for (i, &e) in h.edges().iter().enumerate() {
            for a in e {
                for b in e {
                    if a < b && !self.comparable(a, b) {
                        return Err(Error::InvalidForest(format!(
                            "edge {} contains incomparable vertices {} and {}",
                            h.edge_name(i),
                            h.label(a),
                            h.label(b)
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.parent.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    #[inline]
    pub fn parent(&self, u: usize) -> Option<usize> {
        self.parent[u]
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parent
    }

    #[inline]
    pub fn children(&self, u: usize) -> &[usize] {
        &self.children[u]
    }

    pub fn roots(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&u| self.parent[u].is_none())
            .collect()
    }

    #[inline]
    pub fn depth(&self, u: usize) -> usize {
        self.depth[u]
    }

    /// `F_u`: `u` and all its descendants.
    #[inline]
    pub fn subtree(&self, u: usize) -> VertexSet {
        self.sub[u]
    }

    /// Strict ancestors of `u`.
    #[inline]
    pub fn ancestors(&self, u: usize) -> VertexSet {
        self.anc[u]
    }

    /// Reflexive.
    #[inline]
    pub fn is_ancestor(&self, a: usize, b: usize) -> bool {
        a == b || self.anc[b].contains(a)
    }

    #[inline]
    pub fn comparable(&self, a: usize, b: usize) -> bool {
        self.is_ancestor(a, b) || self.is_ancestor(b, a)
    }

    /// The vertices from `top` down to `bottom`, top first. `top` must be an ancestor of `bottom`.
    pub fn path_down(&self, top: usize, bottom: usize) -> Vec<usize> {
        let mut p = vec![bottom];
        let mut z = bottom;
        while z != top {
            z = self.parent[z].expect("top is an ancestor of bottom");
            p.push(z);
        }
        p.reverse();
        p
    }

    /// Siblings share a parent; roots are siblings of each other.
    pub fn siblings(&self, u: usize) -> Vec<usize> {
        match self.parent[u] {
            Some(p) => self.children[p].clone(),
            None => self.roots(),
        }
    }

    /// `{u}` plus the strict ancestors adjacent to `F_u`.
    pub fn bag(&self, h: &Hypergraph, u: usize) -> VertexSet {
        let sub = self.sub[u];
        let mut b = BitSet::singleton(u);
        for v in self.anc[u] {
            if h.adjacent_to_set(v, sub) {
                b.insert(v);
            }
        }
        b
    }

    pub fn bags(&self, h: &Hypergraph) -> Vec<VertexSet> {
        (0..self.len()).map(|u| self.bag(h, u)).collect()
    }

    /// The decomposition with one node per vertex. Extra roots hang below the
    /// first root, which keeps every bag condition (their bags are disjoint).
    pub fn induced_td(&self, h: &Hypergraph) -> TreeDecomposition {
        if self.is_empty() {
            return TreeDecomposition::new(vec![None], vec![BitSet::EMPTY]).unwrap();
        }
        let roots = self.roots();
        let mut parent = self.parent.clone();
        for &r in &roots[1..] {
            parent[r] = Some(roots[0]);
        }
        TreeDecomposition::new(parent, self.bags(h)).expect("forest parent map is acyclic")
    }

    pub fn fwidth(&self, h: &Hypergraph, f: &WidthCache<'_>) -> Rational {
        f.max_over((0..self.len()).map(|u| self.bag(h, u)))
    }

    /// Every child `v` of every `u` has `u` adjacent to `F_v`.
    pub fn is_reduced(&self, h: &Hypergraph) -> bool {
        self.first_unreduced(h).is_none()
    }

    fn first_unreduced(&self, h: &Hypergraph) -> Option<(usize, usize)> {
        for u in 0..self.len() {
            for &v in &self.children[u] {
                if !h.adjacent_to_set(u, self.sub[v]) {
                    return Some((u, v));
                }
            }
        }
        None
    }

    /// Lifts offending subtrees until the forest is reduced. Bags never grow.
    pub fn reduce(&self, h: &Hypergraph) -> EliminationForest {
        let mut f = self.clone();
        while let Some((u, v)) = f.first_unreduced(h) {
            let mut parent = f.parent.clone();
            parent[v] = f.parent[u];
            f = EliminationForest::new(parent).expect("lifting keeps the map acyclic");
        }
        f
    }

    /// A copy with the given parent changes applied.
    pub fn with_parents(&self, changes: &[(usize, Option<usize>)]) -> Result<EliminationForest> {
        let mut parent = self.parent.clone();
        for &(u, p) in changes {
            parent[u] = p;
        }
        EliminationForest::new(parent)
    }
}
