//! Explicit numeric bounds. All arithmetic saturates at `u64::MAX`.

use crate::hypergraph::Hypergraph;
use crate::rational::Rational;
use crate::widths::{enumerate, WidthFunction};

fn sat_pow(b: u64, e: usize) -> u64 {
    let mut r: u64 = 1;
    for _ in 0..e {
        r = r.saturating_mul(b);
    }
    r
}

/// Bound on the number of peaks of a context factor spine:
/// `p * (|X| * Σ_{i=0}^{p-1} Δ^{p-1})^p` with `p = beta(fw, r)`.
/// The inner sum is taken literally, so it equals `p * Δ^{p-1}`.
pub fn kappa0(x: usize, fw: &Rational, f: &dyn WidthFunction, r: usize, delta: usize) -> u64 {
    let p = f.size_bound(fw, r);
    if p == 0 {
        return 0;
    }
    let term = sat_pow(delta as u64, p - 1);
    let sum = (p as u64).saturating_mul(term);
    let inner = (x as u64).saturating_mul(sum);
    (p as u64).saturating_mul(sat_pow(inner, p))
}

/// `|Val_{f,fw,r}|`, and whether it is exact. Falls back to the number of
/// labelled rank-`r` hypergraphs on at most `beta` vertices when the
/// family is too large to enumerate.
pub fn kappa2(
    f: &dyn WidthFunction,
    fw: &Rational,
    r: usize,
    opts: &enumerate::EnumerationOptions,
) -> (u64, bool) {
    match enumerate::value_set(f, fw, r, opts) {
        Ok(v) => (v.len() as u64, true),
        Err(_) => {
            let beta = f.size_bound(fw, r);
            let mut total: u64 = 0;
            for n in 0..=beta {
                let edges: u64 = (1..=r.min(n))
                    .map(|j| binomial(n, j))
                    .fold(0u64, |a, b| a.saturating_add(b));
                let count = if edges >= 64 { u64::MAX } else { 1u64 << edges };
                total = total.saturating_add(count);
            }
            (total, false)
        }
    }
}

fn binomial(n: usize, k: usize) -> u64 {
    (0..k).fold(1u64, |acc, i| {
        acc.saturating_mul((n - i) as u64) / (i as u64 + 1)
    })
}

/// `kappa1 = 4 * kappa2`.
pub fn kappa1(kappa2: u64) -> u64 {
    kappa2.saturating_mul(4)
}

/// Colour intervals a context factor may keep after local dealternation: `kappa1 * kappa0`.
pub fn kappa(kappa0: u64, kappa2: u64) -> u64 {
    kappa1(kappa2).saturating_mul(kappa0)
}

/// Bound on split and maximum irregularity after dealternation, for a
/// decomposition of treewidth `tw`:
///
/// * an adhesion has at most `tw + 1` vertices, so `|MF(Red ∪ Blue)| <= 9 + 3(tw + 1)`
///   by the monotone factor bound with `W1 = V(H)`;
/// * splitting non-monochromatic forest factors at most doubles that;
/// * each context factor falls apart into at most `kappa` interval factors,
///   so `split <= s = 2 (9 + 3(tw + 1)) (1 + kappa)`;
/// * a node sees at most `9 s + 3 (tw + 1)` context factors below its
///   margin, each met by at most `beta(fw, r)` irregular children.
pub fn gamma(tw: usize, kappa: u64, beta: usize) -> u64 {
    let a = (tw as u64).saturating_add(1);
    let base = 9u64.saturating_add(a.saturating_mul(3)).saturating_mul(2);
    let s = base.saturating_mul(kappa.saturating_add(1));
    let m = (beta as u64).saturating_mul(s.saturating_mul(9).saturating_add(a.saturating_mul(3)));
    s.max(m)
}

/// Colours needed for the conflict graph: `(tw + 1) + mir * split + 3 * split`.
pub fn eta(split: u64, mir: u64, tw: usize) -> u64 {
    (tw as u64)
        .saturating_add(1)
        .saturating_add(mir.saturating_mul(split))
        .saturating_add(split.saturating_mul(3))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundSet {
    pub beta: usize,
    pub kappa0: u64,
    pub kappa2: u64,
    pub kappa2_exact: bool,
    pub kappa1: u64,
    pub kappa: u64,
    pub gamma: u64,
    pub eta: u64,
}

/// All bounds for width `fw` on `h`, given a decomposition of treewidth `tw`.
pub fn bounds(
    h: &Hypergraph,
    f: &dyn WidthFunction,
    fw: &Rational,
    tw: usize,
    opts: &enumerate::EnumerationOptions,
) -> BoundSet {
    let r = h.rank();
    let beta = f.size_bound(fw, r);
    let k0 = kappa0(tw + 1, fw, f, r, h.max_degree());
    let (k2, exact) = kappa2(f, fw, r, opts);
    let k = kappa(k0, k2);
    let g = gamma(tw, k, beta);
    BoundSet {
        beta,
        kappa0: k0,
        kappa2: k2,
        kappa2_exact: exact,
        kappa1: kappa1(k2),
        kappa: k,
        gamma: g,
        eta: eta(g, g, tw),
    }
}
