//! Finite hypergraphs without isolated vertices.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::bitset::{BitSet, VertexSet};
use crate::error::{cap, Error, Result};

/// Vertices are dense indices `0..n`; every vertex carries an external
/// positive label. Edges are distinct non-empty vertex sets.
#[derive(Clone, Debug)]
pub struct Hypergraph {
    labels: Vec<u32>,
    edges: Vec<VertexSet>,
    edge_names: Vec<String>,
    nbrs: Vec<VertexSet>,
}

impl PartialEq for Hypergraph {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels && self.sorted_edges() == other.sorted_edges()
    }
}

impl Eq for Hypergraph {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HypergraphStats {
    pub rank: usize,
    /// Largest number of edges at one vertex.
    pub degree: usize,
    pub component_count: usize,
    pub vertex_count: usize,
    pub edge_count: usize,
}

/// Result of restricting a hypergraph to a vertex subset.
#[derive(Clone, Debug)]
pub struct Induced {
    pub hypergraph: Hypergraph,
    /// `vertex_map[i]` is the original index of new vertex `i`.
    pub vertex_map: Vec<usize>,
    /// Vertices of `U` that ended up isolated (always empty for valid input).
    pub dropped: VertexSet,
}

impl Hypergraph {
    /// Vertices labelled `1..=n`; edges named `e1..em`. Duplicate edges collapse.
    pub fn new(n: usize, edges: impl IntoIterator<Item = VertexSet>) -> Result<Self> {
        let labels = (1..=n as u32).collect();
        Self::with_labels(labels, edges.into_iter().collect(), None)
    }

    /// Builds from edge lists over external labels; vertices are indexed in
    /// order of first occurrence.
    pub fn from_edge_lists<E: AsRef<[u32]>>(edges: &[E]) -> Result<Self> {
        let mut labels: Vec<u32> = Vec::new();
        let mut sets = Vec::with_capacity(edges.len());
        for e in edges {
            let mut s = BitSet::EMPTY;
            for &l in e.as_ref() {
                let i = match labels.iter().position(|&x| x == l) {
                    Some(i) => i,
                    None => {
                        labels.push(l);
                        labels.len() - 1
                    }
                };
                if i >= BitSet::CAPACITY {
                    return Err(Error::InvalidHypergraph(format!(
                        "more than {} vertices",
                        BitSet::CAPACITY
                    )));
                }
                s.insert(i);
            }
            sets.push(s);
        }
        Self::with_labels(labels, sets, None)
    }

    pub fn with_labels(
        labels: Vec<u32>,
        edges: Vec<VertexSet>,
        names: Option<Vec<String>>,
    ) -> Result<Self> {
        let n = labels.len();
        if n > BitSet::CAPACITY {
            return Err(Error::InvalidHypergraph(format!(
                "{n} vertices exceed the limit of {}",
                BitSet::CAPACITY
            )));
        }
        if labels.iter().any(|&l| l == 0) {
            return Err(Error::InvalidHypergraph(
                "vertex labels must be positive".into(),
            ));
        }
        let distinct: BTreeSet<u32> = labels.iter().copied().collect();
        if distinct.len() != n {
            return Err(Error::InvalidHypergraph("duplicate vertex label".into()));
        }
        if let Some(names) = &names {
            if names.len() != edges.len() {
                return Err(Error::InvalidHypergraph("edge name count mismatch".into()));
            }
            let d: BTreeSet<&String> = names.iter().collect();
            if d.len() != names.len() {
                return Err(Error::InvalidHypergraph("duplicate edge name".into()));
            }
        }
        let all = BitSet::full(n);
        let mut kept = Vec::new();
        let mut kept_names = Vec::new();
        let mut seen = BTreeSet::new();
        for (i, &e) in edges.iter().enumerate() {
            if e.is_empty() {
                return Err(Error::InvalidHypergraph(format!("edge {} is empty", i + 1)));
            }
            if !e.is_subset(all) {
                return Err(Error::InvalidHypergraph(format!(
                    "edge {} mentions an unknown vertex",
                    i + 1
                )));
            }
            if seen.insert(e) {
                kept.push(e);
                kept_names.push(match &names {
                    Some(ns) => ns[i].clone(),
                    None => format!("e{}", kept.len()),
                });
            }
        }
        let covered = kept.iter().fold(BitSet::EMPTY, |a, &e| a | e);
        if covered != all {
            let v = (all - covered).first().unwrap();
            return Err(Error::InvalidHypergraph(format!(
                "vertex {} is isolated",
                labels[v]
            )));
        }
        let mut nbrs = vec![BitSet::EMPTY; n];
        for &e in &kept {
            for v in e {
                nbrs[v] |= e;
            }
        }
        for (v, nb) in nbrs.iter_mut().enumerate() {
            nb.remove(v);
        }
        Ok(Hypergraph {
            labels,
            edges: kept,
            edge_names: kept_names,
            nbrs,
        })
    }

    pub fn empty() -> Self {
        Hypergraph {
            labels: Vec::new(),
            edges: Vec::new(),
            edge_names: Vec::new(),
            nbrs: Vec::new(),
        }
    }

    #[inline]
    pub fn num_vertices(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    #[inline]
    pub fn vertices(&self) -> VertexSet {
        BitSet::full(self.labels.len())
    }

    #[inline]
    pub fn edges(&self) -> &[VertexSet] {
        &self.edges
    }

    pub fn edge_name(&self, i: usize) -> &str {
        &self.edge_names[i]
    }

    pub fn edge_names(&self) -> &[String] {
        &self.edge_names
    }

    #[inline]
    pub fn label(&self, v: usize) -> u32 {
        self.labels[v]
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn vertex_of_label(&self, l: u32) -> Option<usize> {
        self.labels.iter().position(|&x| x == l)
    }

    pub fn sorted_edges(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self.edges.iter().map(|e| e.bits()).collect();
        v.sort_unstable();
        v
    }

    /// Vertices sharing an edge with `v`, without `v` itself.
    #[inline]
    pub fn neighbours(&self, v: usize) -> VertexSet {
        self.nbrs[v]
    }

    #[inline]
    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        self.nbrs[u].contains(v)
    }

    /// Whether `v` shares an edge with some vertex of `s` other than itself.
    #[inline]
    pub fn adjacent_to_set(&self, v: usize, s: VertexSet) -> bool {
        self.nbrs[v].intersects(s)
    }

    /// Union of neighbourhoods of `s`, minus `s`.
    pub fn neighbourhood(&self, s: VertexSet) -> VertexSet {
        s.iter().fold(BitSet::EMPTY, |a, v| a | self.nbrs[v]) - s
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.contains(v)).count()
    }

    pub fn rank(&self) -> usize {
        self.edges.iter().map(|e| e.len()).max().unwrap_or(0)
    }

    pub fn max_degree(&self) -> usize {
        (0..self.num_vertices())
            .map(|v| self.degree(v))
            .max()
            .unwrap_or(0)
    }

    /// Connected components of the primal graph restricted to `s`, ordered by least vertex.
    pub fn components(&self, s: VertexSet) -> Vec<VertexSet> {
        let mut rest = s;
        let mut out = Vec::new();
        while let Some(v) = rest.first() {
            let mut comp = BitSet::singleton(v);
            let mut frontier = comp;
            while !frontier.is_empty() {
                let grown = frontier.iter().fold(BitSet::EMPTY, |a, w| a | self.nbrs[w]) & s;
                frontier = grown - comp;
                comp |= grown;
            }
            rest = rest - comp;
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components(self.vertices()).len() <= 1
    }

    pub fn stats(&self) -> HypergraphStats {
        HypergraphStats {
            rank: self.rank(),
            degree: self.max_degree(),
            component_count: self.components(self.vertices()).len(),
            vertex_count: self.num_vertices(),
            edge_count: self.num_edges(),
        }
    }

    /// `H[U]`: edges `{U ∩ e : U ∩ e ≠ ∅}` with duplicates merged.
    pub fn induced(&self, u: VertexSet) -> Result<Induced> {
        if !u.is_subset(self.vertices()) {
            return Err(Error::Precondition(
                "induced set is not a subset of V(H)".into(),
            ));
        }
        let vertex_map: Vec<usize> = u.iter().collect();
        let mut index = [usize::MAX; 64];
        for (i, &v) in vertex_map.iter().enumerate() {
            index[v] = i;
        }
        let mut edges = Vec::new();
        for &e in &self.edges {
            let t = e & u;
            if !t.is_empty() {
                edges.push(t.map(|v| index[v]));
            }
        }
        let covered = edges.iter().fold(BitSet::EMPTY, |a, &e| a | e);
        let full = BitSet::full(vertex_map.len());
        let dropped = (full - covered).map(|i| vertex_map[i]);
        let labels = vertex_map.iter().map(|&v| self.labels[v]).collect();
        let hypergraph = if dropped.is_empty() {
            Hypergraph::with_labels(labels, edges, None)?
        } else {
            let keep: Vec<usize> = covered.iter().collect();
            let mut idx2 = [usize::MAX; 64];
            for (i, &v) in keep.iter().enumerate() {
                idx2[v] = i;
            }
            let edges = edges.iter().map(|e| e.map(|v| idx2[v])).collect();
            let labels = keep.iter().map(|&i| self.labels[vertex_map[i]]).collect();
            Hypergraph::with_labels(labels, edges, None)?
        };
        let vertex_map = if dropped.is_empty() {
            vertex_map
        } else {
            vertex_map
                .into_iter()
                .filter(|v| !dropped.contains(*v))
                .collect()
        };
        Ok(Induced {
            hypergraph,
            vertex_map,
            dropped,
        })
    }

    /// Edge masks after relabelling vertices by `perm` (`perm[old] = new`), sorted.
    fn permuted_edges(&self, perm: &[usize]) -> Vec<u64> {
        let mut v: Vec<u64> = self
            .edges
            .iter()
            .map(|e| e.map(|i| perm[i]).bits())
            .collect();
        v.sort_unstable();
        v
    }

    /// Isomorphism-invariant per-vertex signature: degree, then sorted sizes of incident edges.
    fn vertex_invariant(&self, v: usize) -> Vec<usize> {
        let mut sizes: Vec<usize> = self
            .edges
            .iter()
            .filter(|e| e.contains(v))
            .map(|e| e.len())
            .collect();
        sizes.sort_unstable();
        let mut inv = vec![sizes.len(), self.nbrs[v].len()];
        inv.extend(sizes);
        inv
    }

    /// Vertices grouped into cells of equal invariant, cells in invariant order.
    fn invariant_cells(&self) -> Vec<(Vec<usize>, Vec<usize>)> {
        let mut cells: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
        for v in 0..self.num_vertices() {
            let inv = self.vertex_invariant(v);
            match cells.iter_mut().find(|c| c.0 == inv) {
                Some(c) => c.1.push(v),
                None => cells.push((inv, vec![v])),
            }
        }
        cells.sort();
        cells
    }

    /// Byte string equal for two hypergraphs iff they are isomorphic.
    pub fn canonical_form(&self, max_vertices: usize) -> Result<Vec<u8>> {
        cap(
            "canonical form vertex count",
            self.num_vertices(),
            max_vertices,
        )?;
        let cells = self.invariant_cells();
        let n = self.num_vertices();
        let mut best: Option<Vec<u64>> = None;
        let mut perm = vec![0usize; n];
        for_each_cell_permutation(&cells, &mut perm, &mut |perm| {
            let enc = self.permuted_edges(perm);
            if best.as_ref().is_none_or(|b| enc < *b) {
                best = Some(enc);
            }
        });
        let best = best.unwrap_or_default();
        let mut out = Vec::with_capacity(2 + 8 * best.len());
        out.push(n as u8);
        out.push(best.len().min(255) as u8);
        for (inv, vs) in &cells {
            out.push(vs.len() as u8);
            out.extend(inv.iter().map(|&x| x as u8));
            out.push(0xff);
        }
        for e in best {
            out.extend_from_slice(&e.to_le_bytes());
        }
        Ok(out)
    }

    /// A vertex bijection `self -> other` preserving edges, if one exists.
    pub fn isomorphism(
        &self,
        other: &Hypergraph,
        max_vertices: usize,
    ) -> Result<Option<Vec<usize>>> {
        cap(
            "isomorphism vertex count",
            self.num_vertices().max(other.num_vertices()),
            max_vertices,
        )?;
        if self.num_vertices() != other.num_vertices() || self.num_edges() != other.num_edges() {
            return Ok(None);
        }
        let a = self.invariant_cells();
        let b = other.invariant_cells();
        if a.len() != b.len()
            || a.iter()
                .zip(&b)
                .any(|(x, y)| x.0 != y.0 || x.1.len() != y.1.len())
        {
            return Ok(None);
        }
        let target = other.sorted_edges();
        // map a's cells onto b's cells positionally: first canonicalise both sides to positions
        let n = self.num_vertices();
        let mut pos_b = vec![0usize; n];
        let mut k = 0;
        for (_, vs) in &b {
            for &v in vs {
                pos_b[k] = v;
                k += 1;
            }
        }
        let mut found = None;
        let mut perm = vec![0usize; n];
        for_each_cell_permutation(&a, &mut perm, &mut |perm| {
            if found.is_some() {
                return;
            }
            let mapping: Vec<usize> = perm.iter().map(|&p| pos_b[p]).collect();
            if self.permuted_edges(&mapping) == target {
                found = Some(mapping);
            }
        });
        Ok(found)
    }

    pub fn is_isomorphic(&self, other: &Hypergraph, max_vertices: usize) -> Result<bool> {
        Ok(self.isomorphism(other, max_vertices)?.is_some())
    }
}

/// Calls `f` with every `perm` (old index -> position) that sends the
/// vertices of cell `c` onto the positions reserved for cell `c`.
fn for_each_cell_permutation(
    cells: &[(Vec<usize>, Vec<usize>)],
    perm: &mut [usize],
    f: &mut dyn FnMut(&[usize]),
) {
    fn rec(
        cells: &[(Vec<usize>, Vec<usize>)],
        ci: usize,
        base: usize,
        perm: &mut [usize],
        f: &mut dyn FnMut(&[usize]),
    ) {
        if ci == cells.len() {
            f(perm);
            return;
        }
        let mut vs = cells[ci].1.clone();
        let len = vs.len();
        // Heap's algorithm over the cell
        let mut c = vec![0usize; len];
        let assign = |vs: &[usize], perm: &mut [usize]| {
            for (j, &v) in vs.iter().enumerate() {
                perm[v] = base + j;
            }
        };
        assign(&vs, perm);
        rec(cells, ci + 1, base + len, perm, f);
        let mut i = 0;
        while i < len {
            if c[i] < i {
                if i % 2 == 0 {
                    vs.swap(0, i);
                } else {
                    vs.swap(c[i], i);
                }
                assign(&vs, perm);
                rec(cells, ci + 1, base + len, perm, f);
                c[i] += 1;
                i = 0;
            } else {
                c[i] = 0;
                i += 1;
            }
        }
    }
    rec(cells, 0, 0, perm, f);
}
