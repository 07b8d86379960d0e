use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::bitset::{BitSet, NodeSet, VertexSet};
use crate::error::{Error, Result};
use crate::hypergraph::Hypergraph;
use crate::rational::Rational;
use crate::widths::WidthCache;

/// A rooted tree of bags. Nodes are `0..num_nodes()`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeDecomposition {
    parent: Vec<Option<usize>>,
    bags: Vec<VertexSet>,
    children: Vec<Vec<usize>>,
    root: usize,
    preorder: Vec<usize>,
    depth: Vec<usize>,
    comps: Vec<VertexSet>,
}

impl TreeDecomposition {
    /// Checks the tree shape only; see [`TreeDecomposition::validate`] for the bag conditions.
    pub fn new(parent: Vec<Option<usize>>, bags: Vec<VertexSet>) -> Result<Self> {
        let n = parent.len();
        if n == 0 {
            return Err(Error::InvalidDecomposition("no nodes".into()));
        }
        if bags.len() != n {
            return Err(Error::InvalidDecomposition(
                "bag count differs from node count".into(),
            ));
        }
        if n > BitSet::CAPACITY {
            return Err(Error::InvalidDecomposition(format!(
                "more than {} nodes",
                BitSet::CAPACITY
            )));
        }
        let roots: Vec<usize> = (0..n).filter(|&x| parent[x].is_none()).collect();
        if roots.len() != 1 {
            return Err(Error::InvalidDecomposition(format!(
                "expected one root, found {}",
                roots.len()
            )));
        }
        let mut children = vec![Vec::new(); n];
        for x in 0..n {
            if let Some(p) = parent[x] {
                if p >= n || p == x {
                    return Err(Error::InvalidDecomposition(format!(
                        "node {} has a bad parent",
                        x + 1
                    )));
                }
                children[p].push(x);
            }
        }
        let root = roots[0];
        let mut preorder = Vec::with_capacity(n);
        let mut depth = vec![0; n];
        let mut stack = vec![root];
        while let Some(x) = stack.pop() {
            preorder.push(x);
            for &c in children[x].iter().rev() {
                depth[c] = depth[x] + 1;
                stack.push(c);
            }
        }
        if preorder.len() != n {
            return Err(Error::InvalidDecomposition("parent map has a cycle".into()));
        }
        let mut td = TreeDecomposition {
            parent,
            bags,
            children,
            root,
            preorder,
            depth,
            comps: vec![BitSet::EMPTY; n],
        };
        for &x in td.preorder.clone().iter().rev() {
            let mut c = td.margin(x);
            for &y in &td.children[x] {
                c |= td.comps[y];
            }
            td.comps[x] = c;
        }
        Ok(td)
    }

    /// Builds from undirected tree edges, rooted at `root`.
    pub fn from_edges(bags: Vec<VertexSet>, edges: &[(usize, usize)], root: usize) -> Result<Self> {
        let n = bags.len();
        if edges.len() + 1 != n {
            return Err(Error::InvalidDecomposition(format!(
                "{} nodes need {} tree edges, got {}",
                n,
                n.saturating_sub(1),
                edges.len()
            )));
        }
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n || a == b {
                return Err(Error::InvalidDecomposition(
                    "tree edge mentions an unknown node".into(),
                ));
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut parent = vec![None; n];
        let mut seen = vec![false; n];
        let mut stack = vec![root];
        seen[root] = true;
        while let Some(x) = stack.pop() {
            for &y in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    parent[y] = Some(x);
                    stack.push(y);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidDecomposition(
                "tree edges do not connect all nodes".into(),
            ));
        }
        Self::new(parent, bags)
    }

    /// One node holding every vertex.
    pub fn single_bag(h: &Hypergraph) -> Self {
        Self::new(vec![None], vec![h.vertices()]).unwrap()
    }

    /// Edge coverage, vertex coverage and connectedness of occurrences.
    pub fn validate(&self, h: &Hypergraph) -> Result<()> {
        let all = h.vertices();
        for (x, b) in self.bags.iter().enumerate() {
            if !b.is_subset(all) {
                return Err(Error::InvalidDecomposition(format!(
                    "bag of node {} mentions an unknown vertex",
                    x + 1
                )));
            }
        }
        for (i, &e) in h.edges().iter().enumerate() {
            if !self.bags.iter().any(|b| e.is_subset(*b)) {
                return Err(Error::InvalidDecomposition(format!(
                    "edge {} is in no bag",
                    h.edge_name(i)
                )));
            }
        }
        for v in all {
            // occurrences form a subtree iff exactly one occurrence has its parent outside
            let tops = (0..self.num_nodes())
                .filter(|&x| {
                    self.bags[x].contains(v)
                        && self.parent[x].is_none_or(|p| !self.bags[p].contains(v))
                })
                .count();
            if tops != 1 {
                return Err(Error::InvalidDecomposition(format!(
                    "occurrences of vertex {} are not connected",
                    h.label(v)
                )));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn num_nodes(&self) -> usize {
        self.parent.len()
    }

    #[inline]
    pub fn root(&self) -> usize {
        self.root
    }

    #[inline]
    pub fn parent(&self, x: usize) -> Option<usize> {
        self.parent[x]
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parent
    }

    #[inline]
    pub fn children(&self, x: usize) -> &[usize] {
        &self.children[x]
    }

    #[inline]
    pub fn bag(&self, x: usize) -> VertexSet {
        self.bags[x]
    }

    pub fn bags(&self) -> &[VertexSet] {
        &self.bags
    }

    pub fn depth(&self, x: usize) -> usize {
        self.depth[x]
    }

    /// Root first; every parent precedes its children.
    pub fn preorder(&self) -> &[usize] {
        &self.preorder
    }

    /// Children before parents.
    pub fn postorder(&self) -> Vec<usize> {
        let mut v = self.preorder.clone();
        v.reverse();
        v
    }

    /// Whether `y` lies in the subtree of `x` (reflexive).
    pub fn is_descendant(&self, y: usize, x: usize) -> bool {
        let mut z = y;
        loop {
            if z == x {
                return true;
            }
            match self.parent[z] {
                Some(p) => z = p,
                None => return false,
            }
        }
    }

    pub fn subtree(&self, x: usize) -> NodeSet {
        let mut s = BitSet::singleton(x);
        let mut stack = vec![x];
        while let Some(z) = stack.pop() {
            for &c in &self.children[z] {
                s.insert(c);
                stack.push(c);
            }
        }
        s
    }

    /// `bag(x) ∩ bag(parent(x))`; empty at the root.
    pub fn adhesion(&self, x: usize) -> VertexSet {
        match self.parent[x] {
            Some(p) => self.bags[x] & self.bags[p],
            None => BitSet::EMPTY,
        }
    }

    /// `bag(x) \ adh(x)`.
    pub fn margin(&self, x: usize) -> VertexSet {
        self.bags[x] - self.adhesion(x)
    }

    /// Union of the margins in the subtree of `x`.
    pub fn component(&self, x: usize) -> VertexSet {
        self.comps[x]
    }

    /// The distinct components `cmp(x)`, in preorder of first appearance.
    pub fn target_sets(&self) -> Vec<VertexSet> {
        let mut out: Vec<VertexSet> = Vec::new();
        for &x in &self.preorder {
            if !out.contains(&self.comps[x]) {
                out.push(self.comps[x]);
            }
        }
        out
    }

    /// The unique node whose margin contains `u`.
    pub fn margin_node(&self, u: usize) -> Option<usize> {
        (0..self.num_nodes()).find(|&x| self.margin(x).contains(u))
    }

    /// Nodes on the tree path between `x` and `y`, both included.
    pub fn path(&self, x: usize, y: usize) -> NodeSet {
        let (mut a, mut b) = (x, y);
        let mut s = BitSet::singleton(a).with(b);
        while a != b {
            if self.depth[a] >= self.depth[b] {
                a = self.parent[a].unwrap();
                s.insert(a);
            } else {
                b = self.parent[b].unwrap();
                s.insert(b);
            }
        }
        s
    }

    /// `max_x f(bag(x))`.
    pub fn fwidth(&self, f: &WidthCache<'_>) -> Rational {
        f.max_over(self.bags.iter().copied())
    }

    /// Largest bag size minus one.
    pub fn treewidth(&self) -> usize {
        self.bags
            .iter()
            .map(|b| b.len())
            .max()
            .unwrap_or(1)
            .saturating_sub(1)
    }
}
