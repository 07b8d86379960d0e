//! Finite relational structures and the encodings of hypergraphs with a
//! tree decomposition or an elimination forest.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::bitset::BitSet;
use crate::decomp::{EliminationForest, TreeDecomposition};
use crate::error::{Error, Result};
use crate::hypergraph::Hypergraph;

pub const MAX_UNIVERSE: usize = BitSet::CAPACITY;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Relation {
    pub arity: usize,
    pub tuples: BTreeSet<Vec<usize>>,
}

/// Universe `0..size`; each element carries an external label.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Structure {
    labels: Vec<u32>,
    relations: BTreeMap<String, Relation>,
}

impl Structure {
    /// Elements labelled `1..=size`.
    pub fn new(size: usize) -> Result<Self> {
        Self::with_labels((1..=size as u32).collect())
    }

    pub fn with_labels(labels: Vec<u32>) -> Result<Self> {
        if labels.len() > MAX_UNIVERSE {
            return Err(Error::CapExceeded {
                what: "structure universe",
                size: labels.len(),
                cap: MAX_UNIVERSE,
            });
        }
        let distinct: BTreeSet<u32> = labels.iter().copied().collect();
        if distinct.len() != labels.len() {
            return Err(Error::Formula("duplicate element label".into()));
        }
        Ok(Structure {
            labels,
            relations: BTreeMap::new(),
        })
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn universe(&self) -> BitSet {
        BitSet::full(self.size())
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn element_of_label(&self, l: u32) -> Option<usize> {
        self.labels.iter().position(|&x| x == l)
    }

    pub fn declare(&mut self, name: &str, arity: usize) -> Result<()> {
        match self.relations.get(name) {
            Some(r) if r.arity != arity => Err(Error::Formula(format!(
                "relation {name} redeclared with arity {arity}"
            ))),
            Some(_) => Ok(()),
            None => {
                self.relations.insert(
                    name.to_string(),
                    Relation {
                        arity,
                        tuples: BTreeSet::new(),
                    },
                );
                Ok(())
            }
        }
    }

    pub fn insert(&mut self, name: &str, tuple: Vec<usize>) -> Result<()> {
        if let Some(&x) = tuple.iter().find(|&&x| x >= self.size()) {
            return Err(Error::Formula(format!("element {x} outside the universe")));
        }
        self.declare(name, tuple.len())?;
        self.relations.get_mut(name).unwrap().tuples.insert(tuple);
        Ok(())
    }

    /// Replaces (or adds) a unary relation.
    pub fn set_unary(&mut self, name: &str, set: BitSet) -> Result<()> {
        if !set.is_subset(self.universe()) {
            return Err(Error::Formula(format!(
                "{name} has elements outside the universe"
            )));
        }
        let tuples = set.iter().map(|x| vec![x]).collect();
        self.relations
            .insert(name.to_string(), Relation { arity: 1, tuples });
        Ok(())
    }

    pub fn remove(&mut self, name: &str) -> Option<Relation> {
        self.relations.remove(name)
    }

    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.relations.get(name)
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, &Relation)> {
        self.relations.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn signature(&self) -> BTreeMap<String, usize> {
        self.relations
            .iter()
            .map(|(k, v)| (k.clone(), v.arity))
            .collect()
    }

    pub fn has_signature(&self, sig: &[(&str, usize)]) -> bool {
        sig.iter()
            .all(|&(n, a)| self.relation(n).is_some_and(|r| r.arity == a))
    }

    /// Elements of a unary relation (empty when absent).
    pub fn unary(&self, name: &str) -> BitSet {
        self.relations
            .get(name)
            .map_or(BitSet::EMPTY, |r| r.tuples.iter().map(|t| t[0]).collect())
    }

    /// Out-neighbour rows of a binary relation (empty when absent).
    pub fn binary_rows(&self, name: &str) -> Vec<BitSet> {
        let mut rows = vec![BitSet::EMPTY; self.size()];
        if let Some(r) = self.relations.get(name) {
            for t in &r.tuples {
                rows[t[0]].insert(t[1]);
            }
        }
        rows
    }

    pub fn holds(&self, name: &str, tuple: &[usize]) -> bool {
        self.relations
            .get(name)
            .is_some_and(|r| r.tuples.contains(tuple))
    }

    /// Substructure on `keep`, elements renumbered in order, labels kept.
    pub fn restrict(&self, keep: BitSet) -> Structure {
        let old: Vec<usize> = keep.iter().filter(|&x| x < self.size()).collect();
        let mut index = vec![usize::MAX; self.size()];
        for (i, &x) in old.iter().enumerate() {
            index[x] = i;
        }
        let mut out = Structure {
            labels: old.iter().map(|&x| self.labels[x]).collect(),
            relations: BTreeMap::new(),
        };
        for (name, r) in &self.relations {
            let tuples = r
                .tuples
                .iter()
                .filter(|t| t.iter().all(|&x| index[x] != usize::MAX))
                .map(|t| t.iter().map(|&x| index[x]).collect())
                .collect();
            out.relations.insert(
                name.clone(),
                Relation {
                    arity: r.arity,
                    tuples,
                },
            );
        }
        out
    }
}

pub const TAU_TD: [(&str, usize); 6] = [
    ("Vertex", 1),
    ("Edge", 1),
    ("Node", 1),
    ("Bag", 2),
    ("Adjacent", 2),
    ("Descendant", 2),
];
pub const TAU_EF: [(&str, usize); 4] = [("Vertex", 1), ("Edge", 1), ("Child", 2), ("Adjacent", 2)];

fn incidence(h: &Hypergraph, m: &mut Structure) -> Result<()> {
    let n = h.num_vertices();
    for name in ["Vertex", "Edge"] {
        m.declare(name, 1)?;
    }
    m.declare("Adjacent", 2)?;
    for v in 0..n {
        m.insert("Vertex", vec![v])?;
    }
    for (j, e) in h.edges().iter().enumerate() {
        m.insert("Edge", vec![n + j])?;
        for v in e.iter() {
            m.insert("Adjacent", vec![v, n + j])?;
        }
    }
    Ok(())
}

/// `M(H, t)`: vertices, then edges, then nodes. `Bag(x, v)` for `v` in the
/// bag of node `x`; `Descendant(x, y)` when `y` is in the subtree of `x`.
pub fn encode_td(h: &Hypergraph, t: &TreeDecomposition) -> Result<Structure> {
    t.validate(h)?;
    let (n, m) = (h.num_vertices(), h.num_edges());
    let mut s = Structure::new(n + m + t.num_nodes())?;
    incidence(h, &mut s)?;
    s.declare("Node", 1)?;
    s.declare("Bag", 2)?;
    s.declare("Descendant", 2)?;
    for x in 0..t.num_nodes() {
        s.insert("Node", vec![n + m + x])?;
        for v in t.bag(x).iter() {
            s.insert("Bag", vec![n + m + x, v])?;
        }
        for y in t.subtree(x).iter() {
            s.insert("Descendant", vec![n + m + x, n + m + y])?;
        }
    }
    Ok(s)
}

/// `M(H, F)`: vertices, then edges; `Child(parent, child)`.
pub fn encode_ef(h: &Hypergraph, f: &EliminationForest) -> Result<Structure> {
    f.validate(h)?;
    let mut s = Structure::new(h.num_vertices() + h.num_edges())?;
    incidence(h, &mut s)?;
    s.declare("Child", 2)?;
    for v in 0..f.len() {
        if let Some(p) = f.parent(v) {
            s.insert("Child", vec![p, v])?;
        }
    }
    Ok(s)
}

/// `H(M)` with its vertices in element order; returns the vertex elements too.
pub fn decode_hypergraph(m: &Structure) -> Result<(Hypergraph, Vec<usize>)> {
    let verts: Vec<usize> = m.unary("Vertex").iter().collect();
    let mut index = vec![usize::MAX; m.size()];
    for (i, &v) in verts.iter().enumerate() {
        index[v] = i;
    }
    let rows = m.binary_rows("Adjacent");
    let mut edges = vec![BitSet::EMPTY; m.size()];
    for (v, row) in rows.iter().enumerate() {
        for e in row.iter() {
            if index[v] == usize::MAX || !m.unary("Edge").contains(e) {
                return Err(Error::Formula(
                    "Adjacent must pair a vertex with an edge".into(),
                ));
            }
            edges[e].insert(index[v]);
        }
    }
    let edges: Vec<BitSet> = m
        .unary("Edge")
        .iter()
        .map(|e| edges[e])
        .filter(|e| !e.is_empty())
        .collect();
    Ok((Hypergraph::new(verts.len(), edges)?, verts))
}

/// `F(M)` over the vertices of `H(M)`.
pub fn decode_forest(m: &Structure) -> Result<EliminationForest> {
    let (_, verts) = decode_hypergraph(m)?;
    let mut index = vec![usize::MAX; m.size()];
    for (i, &v) in verts.iter().enumerate() {
        index[v] = i;
    }
    let mut parent = vec![None; verts.len()];
    if let Some(r) = m.relation("Child") {
        for t in &r.tuples {
            let (p, c) = (index[t[0]], index[t[1]]);
            if p == usize::MAX || c == usize::MAX {
                return Err(Error::InvalidForest("Child relates a non-vertex".into()));
            }
            if parent[c].replace(p).is_some() {
                return Err(Error::InvalidForest(format!(
                    "element {} has two parents",
                    m.labels()[t[1]]
                )));
            }
        }
    }
    EliminationForest::new(parent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;

    #[test]
    fn ef_encoding_of_f0() {
        let m = encode_ef(&h0(), &f0()).unwrap();
        assert_eq!(m.size(), 8);
        assert_eq!(m.relation("Child").unwrap().tuples.len(), 4);
        assert!(m.has_signature(&TAU_EF));
        let (h, _) = decode_hypergraph(&m).unwrap();
        assert_eq!(h.sorted_edges(), h0().sorted_edges());
        assert_eq!(decode_forest(&m).unwrap(), f0());
    }

    #[test]
    fn td_encoding_of_td0() {
        let m = encode_td(&h0(), &td0()).unwrap();
        assert!(m.has_signature(&TAU_TD));
        assert_eq!(m.relation("Bag").unwrap().tuples.len(), 10);
        assert_eq!(m.unary("Node").len(), 5);
        // reflexive descendant relation over nodes
        assert!(m.holds("Descendant", &[8, 8]));
    }

    #[test]
    fn restriction_keeps_labels() {
        let m = encode_td(&h0(), &td0()).unwrap();
        let r = m.restrict(m.unary("Vertex"));
        assert_eq!(r.size(), 5);
        assert_eq!(r.labels(), [1, 2, 3, 4, 5]);
        assert!(r.relation("Bag").unwrap().tuples.is_empty());
    }
}
