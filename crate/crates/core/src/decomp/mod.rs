//! Tree decompositions, elimination forests and exact f-width.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Zero;

use crate::bitset::{BitSet, VertexSet};
use crate::budget::Budget;
use crate::error::{cap, Result};
use crate::hypergraph::Hypergraph;
use crate::rational::Rational;
use crate::widths::{WidthCache, WidthFunction};

mod forest;
mod td;

pub use forest::EliminationForest;
pub use td::TreeDecomposition;

/// Calls `visit` once for every elimination forest of `h` (as a parent map).
///
/// A forest on a vertex set `S` splits into trees, each a union of
/// components of `H[S]`; a tree is a root plus a forest on the rest.
/// Trees are chosen by the component holding the least remaining vertex,
/// which makes each forest appear exactly once.
pub fn for_each_elimination_forest(
    h: &Hypergraph,
    budget: &Budget,
    visit: &mut dyn FnMut(&[Option<usize>]),
) -> Result<()> {
    cap(
        "forest enumeration vertex count",
        h.num_vertices(),
        budget.forest_vertices,
    )?;
    let mut parent = vec![None; h.num_vertices()];
    let mut tasks = vec![(h.vertices(), None)];
    expand(h, &mut tasks, &mut parent, visit);
    Ok(())
}

fn expand(
    h: &Hypergraph,
    tasks: &mut Vec<(VertexSet, Option<usize>)>,
    parent: &mut [Option<usize>],
    visit: &mut dyn FnMut(&[Option<usize>]),
) {
    let Some((set, above)) = tasks.pop() else {
        visit(parent);
        return;
    };
    if set.is_empty() {
        expand(h, tasks, parent, visit);
        tasks.push((set, above));
        return;
    }
    let comps = h.components(set);
    let (first, others) = comps.split_first().unwrap();
    // which other components share the first one's tree
    for pick in BitSet::full(others.len()).subsets() {
        let block = pick.iter().fold(*first, |a, i| a | others[i]);
        for r in block {
            parent[r] = above;
            tasks.push((set - block, above));
            tasks.push((block.without(r), Some(r)));
            expand(h, tasks, parent, visit);
            tasks.pop();
            tasks.pop();
        }
    }
    tasks.push((set, above));
}

pub fn enumerate_elimination_forests(
    h: &Hypergraph,
    budget: &Budget,
) -> Result<Vec<EliminationForest>> {
    let mut out = Vec::new();
    for_each_elimination_forest(h, budget, &mut |p| {
        out.push(EliminationForest::new(p.to_vec()).unwrap())
    })?;
    out.sort();
    Ok(out)
}

/// Minimum f-width over all elimination forests, with the lexicographically
/// least optimal parent map.
pub fn exact_fwidth(
    h: &Hypergraph,
    f: &dyn WidthFunction,
    budget: &Budget,
) -> Result<(Rational, EliminationForest)> {
    let cache = WidthCache::new(f, h);
    let mut best: Option<(Rational, Vec<Option<usize>>)> = None;
    for_each_elimination_forest(h, budget, &mut |p| {
        let forest = EliminationForest::new(p.to_vec()).unwrap();
        let mut w = Rational::zero();
        for u in 0..forest.len() {
            let b = cache.get(forest.bag(h, u));
            if let Some((bw, _)) = &best {
                if b > *bw {
                    return;
                }
            }
            if b > w {
                w = b;
            }
        }
        let better = match &best {
            None => true,
            Some((bw, bp)) => w < *bw || (w == *bw && p < bp.as_slice()),
        };
        if better {
            best = Some((w, p.to_vec()));
        }
    })?;
    let (w, p) = best.unwrap_or((Rational::zero(), Vec::new()));
    Ok((w, EliminationForest::new(p)?))
}

/// f-width by a search over decompositions in component normal form:
/// a node covering component `C` (with neighbourhood `N`) takes a bag `B`
/// with `N ⊆ B ⊆ C ∪ N` meeting `C`, and recurses into the components of
/// `C \ B`. Shares no code with the forest enumeration.
pub fn oracle_fwidth_td(
    h: &Hypergraph,
    f: &dyn WidthFunction,
    budget: &Budget,
) -> Result<Rational> {
    cap(
        "decomposition oracle vertex count",
        h.num_vertices(),
        budget.td_oracle_vertices,
    )?;
    let cache = WidthCache::new(f, h);
    let kmax = cache.get(h.vertices());
    let max_bag = f.size_bound(&kmax, h.rank());
    let mut memo = BTreeMap::new();
    let mut w = Rational::zero();
    for c in h.components(h.vertices()) {
        let b = best_for_component(h, &cache, c, max_bag, &mut memo);
        if b > w {
            w = b;
        }
    }
    Ok(w)
}

fn best_for_component(
    h: &Hypergraph,
    f: &WidthCache<'_>,
    c: VertexSet,
    max_bag: usize,
    memo: &mut BTreeMap<VertexSet, Rational>,
) -> Rational {
    if let Some(v) = memo.get(&c) {
        return v.clone();
    }
    let nb = h.neighbourhood(c);
    let mut best: Option<Rational> = None;
    for inner in c.subsets() {
        if inner.is_empty() || inner.len() + nb.len() > max_bag {
            continue;
        }
        let bag = inner | nb;
        let mut w = f.get(bag);
        if best.as_ref().is_some_and(|b| w >= *b) {
            continue;
        }
        for sub in h.components(c - inner) {
            let s = best_for_component(h, f, sub, max_bag, memo);
            if s > w {
                w = s;
            }
            if best.as_ref().is_some_and(|b| w >= *b) {
                break;
            }
        }
        if best.as_ref().is_none_or(|b| w < *b) {
            best = Some(w);
        }
    }
    let best = best.expect("the bag C ∪ N(C) is always available");
    memo.insert(c, best.clone());
    best
}
