//! Width functions on vertex sets: `rho`, `rho*` and the treewidth cardinality.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::cell::RefCell;

use num_traits::Zero;

use crate::bitset::VertexSet;
use crate::error::{Error, Result};
use crate::hypergraph::Hypergraph;
use crate::rational::{self, int, Rational};

pub mod enumerate;
pub mod lp;

pub use enumerate::{
    check_manageability, enumerate_bounded_hypergraphs, value_set, EnumerationOptions,
    ManageabilityReport,
};

/// A width function `f_H(U)` with its size bound `beta(k, r)`.
pub trait WidthFunction {
    fn name(&self) -> &str;
    fn evaluate(&self, h: &Hypergraph, u: VertexSet) -> Rational;
    /// Every `U` with `f(U) <= k` in a rank-`r` hypergraph has `|U| <= size_bound(k, r)`.
    fn size_bound(&self, k: &Rational, rank: usize) -> usize;
    /// A form of `f` that is additive on disjoint non-adjacent sets and
    /// differs from `evaluate` by a constant on non-empty sets.
    fn additive_evaluate(&self, h: &Hypergraph, u: VertexSet) -> Rational {
        self.evaluate(h, u)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Width {
    /// Integral edge cover number; gives generalized hypertree width.
    Ghw,
    /// Fractional edge cover number; gives fractional hypertree width.
    Fhw,
    /// `|U| - 1`; gives treewidth.
    Tw,
}

impl Width {
    pub const ALL: [Width; 3] = [Width::Ghw, Width::Fhw, Width::Tw];

    pub fn from_name(s: &str) -> Result<Width> {
        match s {
            "ghw" | "ghw-rho" | "rho" => Ok(Width::Ghw),
            "fhw" | "fhw-rho-star" | "rho-star" => Ok(Width::Fhw),
            "tw" | "tw-card" => Ok(Width::Tw),
            _ => Err(Error::UnknownFunction(s.into())),
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Width::Ghw => "ghw",
            Width::Fhw => "fhw",
            Width::Tw => "tw",
        }
    }
}

impl WidthFunction for Width {
    fn name(&self) -> &str {
        match self {
            Width::Ghw => "ghw-rho",
            Width::Fhw => "fhw-rho-star",
            Width::Tw => "tw-card",
        }
    }

    fn evaluate(&self, h: &Hypergraph, u: VertexSet) -> Rational {
        match self {
            Width::Ghw => int(edge_cover_number(h, u) as i64),
            Width::Fhw => lp::fractional_cover_simplex(h, u),
            Width::Tw => int(u.len().saturating_sub(1) as i64),
        }
    }

    fn size_bound(&self, k: &Rational, rank: usize) -> usize {
        match self {
            Width::Ghw | Width::Fhw => beta(k, rank),
            Width::Tw => {
                if k < &Rational::zero() {
                    0
                } else {
                    rational::floor_usize(k).saturating_add(1)
                }
            }
        }
    }

    fn additive_evaluate(&self, h: &Hypergraph, u: VertexSet) -> Rational {
        match self {
            // |U| - 1 is not additive; the bag size is
            Width::Tw => int(u.len() as i64),
            _ => self.evaluate(h, u),
        }
    }
}

/// `floor(k * r)`.
pub fn beta(k: &Rational, r: usize) -> usize {
    rational::floor_usize(&(k * int(r as i64)))
}

/// Minimum number of edges covering `u` (branch and bound).
pub fn edge_cover_number(h: &Hypergraph, u: VertexSet) -> usize {
    if u.is_empty() {
        return 0;
    }
    let mut ts = lp::traces(h, u);
    // drop traces strictly inside another
    let all = ts.clone();
    ts.retain(|&t| !all.iter().any(|&s| s != t && t.is_subset(s)));
    let max_size = ts.iter().map(|t| t.len()).max().unwrap_or(1);

    // greedy start
    let mut best = 0;
    let mut rest = u;
    while !rest.is_empty() {
        let t = ts.iter().max_by_key(|t| (**t & rest).len()).unwrap();
        rest = rest - *t;
        best += 1;
    }

    fn dfs(ts: &[VertexSet], max_size: usize, uncovered: VertexSet, used: usize, best: &mut usize) {
        if uncovered.is_empty() {
            *best = (*best).min(used);
            return;
        }
        let lower = uncovered.len().div_ceil(max_size);
        if used + lower >= *best {
            return;
        }
        let v = uncovered
            .iter()
            .min_by_key(|&v| ts.iter().filter(|t| t.contains(v)).count())
            .unwrap();
        let mut opts: Vec<VertexSet> = ts.iter().copied().filter(|t| t.contains(v)).collect();
        opts.sort_by_key(|t| core::cmp::Reverse((*t & uncovered).len()));
        for t in opts {
            dfs(ts, max_size, uncovered - t, used + 1, best);
        }
    }
    dfs(&ts, max_size, u, 0, &mut best);
    best
}

/// Memoised evaluation of one width function on one hypergraph.
pub struct WidthCache<'a> {
    f: &'a dyn WidthFunction,
    h: &'a Hypergraph,
    memo: RefCell<BTreeMap<VertexSet, Rational>>,
}

impl<'a> WidthCache<'a> {
    pub fn new(f: &'a dyn WidthFunction, h: &'a Hypergraph) -> Self {
        WidthCache {
            f,
            h,
            memo: RefCell::new(BTreeMap::new()),
        }
    }

    pub fn get(&self, u: VertexSet) -> Rational {
        if let Some(r) = self.memo.borrow().get(&u) {
            return r.clone();
        }
        let r = self.f.evaluate(self.h, u);
        self.memo.borrow_mut().insert(u, r.clone());
        r
    }

    pub fn function(&self) -> &'a dyn WidthFunction {
        self.f
    }

    pub fn hypergraph(&self) -> &'a Hypergraph {
        self.h
    }

    /// Maximum over the given sets (0 when empty).
    pub fn max_over(&self, sets: impl IntoIterator<Item = VertexSet>) -> Rational {
        sets.into_iter()
            .map(|s| self.get(s))
            .max()
            .unwrap_or_else(Rational::zero)
    }
}
