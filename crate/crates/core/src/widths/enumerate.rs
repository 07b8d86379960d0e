//! Bounded hypergraph families and the manageability checks.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::bitset::{BitSet, VertexSet};
use crate::budget::Budget;
use crate::error::{cap, Error, Result};
use crate::hypergraph::Hypergraph;
use crate::rational::Rational;
use crate::widths::WidthFunction;

#[derive(Debug, Clone, Copy)]
pub struct EnumerationOptions {
    /// Whether the hypergraph with no vertices belongs to the family.
    pub include_empty: bool,
    pub budget: Budget,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        EnumerationOptions {
            include_empty: false,
            budget: Budget::default(),
        }
    }
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// One representative per isomorphism class of hypergraphs `H` with
/// `|V(H)| <= beta(k, r)`, rank at most `r` and `f_H(V(H)) <= k`.
/// Ordered by vertex count, then canonical form.
pub fn enumerate_bounded_hypergraphs(
    f: &dyn WidthFunction,
    k: &Rational,
    r: usize,
    opts: &EnumerationOptions,
) -> Result<Vec<Hypergraph>> {
    let beta = f.size_bound(k, r);
    if beta > opts.budget.enumeration_beta {
        return Err(Error::CapExceeded {
            what: "family vertex bound beta(k, r)",
            size: beta,
            cap: opts.budget.enumeration_beta,
        });
    }
    let mut out = Vec::new();
    if opts.include_empty && Rational::from_integer(0.into()) <= *k {
        out.push(Hypergraph::empty());
    }
    for n in 1..=beta {
        let candidates: Vec<VertexSet> = BitSet::full(n)
            .subsets()
            .filter(|s| !s.is_empty() && s.len() <= r)
            .collect();
        let expected: usize = (1..=r.min(n)).map(|j| binomial(n, j)).sum();
        debug_assert_eq!(candidates.len(), expected);
        if candidates.len() > opts.budget.enumeration_edges {
            return Err(Error::CapExceeded {
                what: "candidate edges for beta(k, r) vertices",
                size: candidates.len(),
                cap: opts.budget.enumeration_edges,
            });
        }
        let full = BitSet::full(n);
        let mut seen: BTreeMap<Vec<u8>, Hypergraph> = BTreeMap::new();
        for pick in 1u64..(1u64 << candidates.len()) {
            let edges: Vec<VertexSet> = BitSet(pick).iter().map(|i| candidates[i]).collect();
            let covered = edges.iter().fold(BitSet::EMPTY, |a, &e| a | e);
            if covered != full {
                continue;
            }
            // every class has a labelling with non-increasing degrees
            let deg = |v: usize| edges.iter().filter(|e| e.contains(v)).count();
            if (1..n).any(|v| deg(v - 1) < deg(v)) {
                continue;
            }
            let h = Hypergraph::new(n, edges)?;
            let cf = h.canonical_form(opts.budget.canonical_vertices.max(n))?;
            if seen.contains_key(&cf) {
                continue;
            }
            seen.insert(cf, h);
        }
        for (_, h) in seen {
            if f.evaluate(&h, h.vertices()) <= *k {
                out.push(h);
            }
        }
    }
    Ok(out)
}

/// `Val_{f,k,r}`: the distinct values `f_H(V(H))` over the bounded family, ascending.
pub fn value_set(
    f: &dyn WidthFunction,
    k: &Rational,
    r: usize,
    opts: &EnumerationOptions,
) -> Result<Vec<Rational>> {
    let fam = enumerate_bounded_hypergraphs(f, k, r, opts)?;
    let vals: BTreeSet<Rational> = fam.iter().map(|h| f.evaluate(h, h.vertices())).collect();
    Ok(vals.into_iter().collect())
}

/// Witnesses against the three manageability properties; `None` means the property held.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ManageabilityReport {
    /// Disjoint, non-adjacent `U1`, `U2` with `f(U1 ∪ U2) != f(U1) + f(U2)`.
    pub additivity: Option<(VertexSet, VertexSet)>,
    /// `U` with `|U| > beta(f(U), rank)`.
    pub bounded_size: Option<VertexSet>,
    /// `U` with `f_H(U) != f_{H[U]}(V(H[U]))`.
    pub locality: Option<VertexSet>,
}

impl ManageabilityReport {
    pub fn passed(&self) -> bool {
        self.additivity.is_none() && self.bounded_size.is_none() && self.locality.is_none()
    }
}

/// Exhaustive check of additivity, bounded size and invariant locality on one hypergraph.
pub fn check_manageability(
    f: &dyn WidthFunction,
    h: &Hypergraph,
    budget: &Budget,
) -> Result<ManageabilityReport> {
    cap(
        "manageability vertex count",
        h.num_vertices(),
        budget.manageability_vertices,
    )?;
    let all = h.vertices();
    let sets: Vec<VertexSet> = all.subsets().collect();
    let vals: BTreeMap<VertexSet, Rational> = sets.iter().map(|&u| (u, f.evaluate(h, u))).collect();
    let mut rep = ManageabilityReport::default();
    let rank = h.rank();
    'outer: for &u1 in &sets {
        let rest = all - u1 - h.neighbourhood(u1);
        for u2 in rest.subsets() {
            let lhs = &vals[&(u1 | u2)];
            if *lhs != &vals[&u1] + &vals[&u2] {
                rep.additivity = Some((u1, u2));
                break 'outer;
            }
        }
    }
    for &u in &sets {
        if rep.bounded_size.is_none() && u.len() > f.size_bound(&vals[&u], rank) {
            rep.bounded_size = Some(u);
        }
        if rep.locality.is_none() {
            let ind = h.induced(u)?;
            let g = &ind.hypergraph;
            if f.evaluate(g, g.vertices()) != vals[&u] {
                rep.locality = Some(u);
            }
        }
    }
    Ok(rep)
}
