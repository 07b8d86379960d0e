//! Tree, forest and context factors of an elimination forest.

use alloc::vec::Vec;

use crate::bitset::{BitSet, VertexSet};
use crate::decomp::{EliminationForest, TreeDecomposition};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FactorKind {
    Tree,
    Forest,
    Context,
}

/// A factor is identified by its roots (and, for a context, its appendices).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Factor {
    /// `F_root`.
    Tree { root: usize },
    /// Union of `F_r` over at least two sibling roots.
    Forest { roots: VertexSet },
    /// `F_root` minus `F_w` for every appendix `w`; appendices are siblings
    /// strictly below `root`.
    Context { root: usize, appendices: VertexSet },
}

impl Factor {
    pub fn kind(&self) -> FactorKind {
        match self {
            Factor::Tree { .. } => FactorKind::Tree,
            Factor::Forest { .. } => FactorKind::Forest,
            Factor::Context { .. } => FactorKind::Context,
        }
    }

    pub fn is_context(&self) -> bool {
        matches!(self, Factor::Context { .. })
    }

    /// Tree or forest over the given sibling roots.
    pub fn over_roots(roots: VertexSet) -> Factor {
        if roots.len() == 1 {
            Factor::Tree {
                root: roots.first().unwrap(),
            }
        } else {
            Factor::Forest { roots }
        }
    }

    pub fn vertices(&self, f: &EliminationForest) -> VertexSet {
        match *self {
            Factor::Tree { root } => f.subtree(root),
            Factor::Forest { roots } => roots.iter().fold(BitSet::EMPTY, |a, r| a | f.subtree(r)),
            Factor::Context { root, appendices } => appendices
                .iter()
                .fold(f.subtree(root), |a, w| a - f.subtree(w)),
        }
    }

    /// Least vertex; used for ordering factorizations.
    pub fn anchor(&self, f: &EliminationForest) -> usize {
        self.vertices(f).first().unwrap_or(usize::MAX)
    }
}

/// Root, spine and appendices of a context factor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContextParts {
    pub root: usize,
    /// `pr(B)`: the common parent of the appendices.
    pub appendix_parent: usize,
    /// Path from `root` to `appendix_parent`, root first.
    pub spine: Vec<usize>,
    pub appendices: VertexSet,
}

pub fn context_parts(f: &EliminationForest, root: usize, appendices: VertexSet) -> ContextParts {
    let w = appendices.first().expect("context factors have appendices");
    let pr = f
        .parent(w)
        .expect("appendices are strict descendants of the root");
    ContextParts {
        root,
        appendix_parent: pr,
        spine: f.path_down(root, pr),
        appendices,
    }
}

/// `Cont_F(P, W)`: the path, the subtrees hanging off it, and the children
/// of its last vertex other than `W`.
pub fn context_from_path(f: &EliminationForest, path: &[usize], w: VertexSet) -> VertexSet {
    let mut s = BitSet::EMPTY;
    for (i, &p) in path.iter().enumerate() {
        s.insert(p);
        for &c in f.children(p) {
            let skip = if i + 1 < path.len() {
                c == path[i + 1]
            } else {
                w.contains(c)
            };
            if !skip {
                s |= f.subtree(c);
            }
        }
    }
    s
}

/// The most specific factor whose vertex set is exactly `s`, if any.
pub fn factor_of_set(f: &EliminationForest, s: VertexSet) -> Option<Factor> {
    if s.is_empty() {
        return None;
    }
    let tops: VertexSet = s
        .iter()
        .filter(|&v| f.parent(v).is_none_or(|p| !s.contains(p)))
        .collect();
    if tops.len() >= 2 {
        let p0 = f.parent(tops.first().unwrap());
        if tops.iter().any(|t| f.parent(t) != p0) {
            return None;
        }
        let fac = Factor::Forest { roots: tops };
        return (fac.vertices(f) == s).then_some(fac);
    }
    let x = tops.first().unwrap();
    let sub = f.subtree(x);
    if sub == s {
        return Some(Factor::Tree { root: x });
    }
    if !s.is_subset(sub) {
        return None;
    }
    let rem = sub - s;
    let wtops: VertexSet = rem
        .iter()
        .filter(|&v| !rem.contains(f.parent(v).unwrap()))
        .collect();
    let pr = f.parent(wtops.first().unwrap());
    if wtops.iter().any(|w| f.parent(w) != pr) {
        return None;
    }
    let fac = Factor::Context {
        root: x,
        appendices: wtops,
    };
    (fac.vertices(f) == s).then_some(fac)
}

/// Every factor of `f`. Exponential in the branching degree.
pub fn all_factors(f: &EliminationForest) -> Vec<Factor> {
    let n = f.len();
    let mut out = Vec::new();
    for x in 0..n {
        out.push(Factor::Tree { root: x });
    }
    let mut groups: Vec<VertexSet> = (0..n)
        .map(|p| f.children(p).iter().copied().collect())
        .collect();
    groups.push(f.roots().into_iter().collect());
    for g in groups {
        for roots in g.subsets() {
            if roots.len() >= 2 {
                out.push(Factor::Forest { roots });
            }
        }
    }
    for x in 0..n {
        for pr in f.subtree(x) {
            let kids: VertexSet = f.children(pr).iter().copied().collect();
            for w in kids.subsets() {
                if !w.is_empty() {
                    out.push(Factor::Context {
                        root: x,
                        appendices: w,
                    });
                }
            }
        }
    }
    out
}

/// `MF(X)`: the inclusion-maximal factors inside `x`. They partition `x`.
/// Ordered by least vertex.
pub fn maximal_factorization(f: &EliminationForest, x: VertexSet) -> Vec<Factor> {
    let n = f.len();
    let mut cands: Vec<(VertexSet, Factor)> = Vec::new();
    let mut groups: Vec<Vec<usize>> = (0..n).map(|p| f.children(p).to_vec()).collect();
    groups.push(f.roots());
    for g in &groups {
        let roots: VertexSet = g
            .iter()
            .copied()
            .filter(|&c| f.subtree(c).is_subset(x))
            .collect();
        if !roots.is_empty() {
            let fac = Factor::over_roots(roots);
            cands.push((fac.vertices(f), fac));
        }
    }
    for r in x {
        let bad = f.subtree(r) - x;
        if bad.is_empty() {
            continue;
        }
        // deepest common strict ancestor of every vertex outside x
        let b0 = bad.first().unwrap();
        let mut lca = b0;
        while !bad.iter().all(|b| f.is_ancestor(lca, b)) {
            lca = f.parent(lca).unwrap();
        }
        let pr = if bad.contains(lca) {
            f.parent(lca).unwrap()
        } else {
            lca
        };
        let appendices: VertexSet = f
            .children(pr)
            .iter()
            .copied()
            .filter(|&c| f.subtree(c).intersects(bad))
            .collect();
        let fac = Factor::Context {
            root: r,
            appendices,
        };
        cands.push((fac.vertices(f), fac));
    }
    cands.sort();
    cands.dedup_by_key(|c| c.0);
    let mut out: Vec<Factor> = cands
        .iter()
        .filter(|(s, _)| !cands.iter().any(|(t, _)| t != s && s.is_subset(*t)))
        .map(|c| c.1)
        .collect();
    out.sort_by_key(|fac| fac.anchor(f));
    out
}

/// No context factor in `MF(u)`.
pub fn is_well_formed(f: &EliminationForest, u: VertexSet) -> bool {
    !maximal_factorization(f, u).iter().any(Factor::is_context)
}

/// `max |MF(U)|` over the target sets of `t`.
pub fn split(t: &TreeDecomposition, f: &EliminationForest) -> usize {
    t.target_sets()
        .into_iter()
        .map(|u| maximal_factorization(f, u).len())
        .max()
        .unwrap_or(0)
}

/// Children `y` of `x` with `cmp(y)` not well-formed.
pub fn irregularity(t: &TreeDecomposition, f: &EliminationForest, x: usize) -> usize {
    t.children(x)
        .iter()
        .filter(|&&y| !is_well_formed(f, t.component(y)))
        .count()
}

/// Maximum irregularity over the nodes of `t`.
pub fn mir(t: &TreeDecomposition, f: &EliminationForest) -> usize {
    (0..t.num_nodes())
        .map(|x| irregularity(t, f, x))
        .max()
        .unwrap_or(0)
}
