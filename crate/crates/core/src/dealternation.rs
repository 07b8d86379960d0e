//! Red/blue partitions, colour intervals, interval swaps and dealternation.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::bitset::{BitSet, VertexSet};
use crate::bounds;
use crate::decomp::{EliminationForest, TreeDecomposition};
use crate::error::{Error, Result};
use crate::factors::{
    self, all_factors, context_parts, factor_of_set, maximal_factorization, Factor, FactorKind,
};
use crate::hypergraph::Hypergraph;
use crate::rational::Rational;
use crate::widths::{enumerate::EnumerationOptions, WidthCache};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Colour {
    Red,
    X,
    Blue,
}

/// A partition `(Red, X, Blue)` of `V(H)` with no edge meeting both Red and Blue.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RbxPartition {
    pub red: VertexSet,
    pub x: VertexSet,
    pub blue: VertexSet,
}

impl RbxPartition {
    pub fn new(h: &Hypergraph, red: VertexSet, x: VertexSet, blue: VertexSet) -> Result<Self> {
        if red.intersects(x)
            || red.intersects(blue)
            || x.intersects(blue)
            || (red | x | blue) != h.vertices()
        {
            return Err(Error::Precondition(
                "red, X and blue must partition V(H)".into(),
            ));
        }
        if let Some(i) = h
            .edges()
            .iter()
            .position(|e| e.intersects(red) && e.intersects(blue))
        {
            return Err(Error::Precondition(format!(
                "edge {} meets both red and blue",
                h.edge_name(i)
            )));
        }
        Ok(RbxPartition { red, x, blue })
    }

    /// `(cmp(x), adh(x), rest)` at a node of a valid decomposition.
    pub fn canonical(h: &Hypergraph, t: &TreeDecomposition, node: usize) -> Result<Self> {
        let red = t.component(node);
        let x = t.adhesion(node);
        Self::new(h, red, x, h.vertices() - red - x)
    }

    pub fn colour(&self, v: usize) -> Colour {
        if self.red.contains(v) {
            Colour::Red
        } else if self.blue.contains(v) {
            Colour::Blue
        } else {
            Colour::X
        }
    }

    fn class(&self, c: Colour) -> VertexSet {
        match c {
            Colour::Red => self.red,
            Colour::Blue => self.blue,
            Colour::X => self.x,
        }
    }

    fn opposite(&self, c: Colour) -> VertexSet {
        match c {
            Colour::Red => self.blue,
            Colour::Blue => self.red,
            Colour::X => BitSet::EMPTY,
        }
    }

    pub fn is_monochromatic(&self, s: VertexSet) -> bool {
        s.is_subset(self.red) || s.is_subset(self.blue)
    }
}

/// Split of `bag_F(u)` by colour relative to `u`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BagClasses {
    pub x_bag: VertexSet,
    pub native_bag: VertexSet,
    pub foreign_bag: VertexSet,
}

pub fn classify_bag(
    h: &Hypergraph,
    f: &EliminationForest,
    rbx: &RbxPartition,
    u: usize,
) -> Result<BagClasses> {
    let c = rbx.colour(u);
    if c == Colour::X {
        return Err(Error::Precondition(
            "bag classes are defined for red or blue vertices".into(),
        ));
    }
    let bag = f.bag(h, u);
    Ok(BagClasses {
        x_bag: bag & rbx.x,
        native_bag: bag & rbx.class(c),
        foreign_bag: bag & rbx.opposite(c),
    })
}

/// Split of `bag_F(u)` into unions of components of `H[bag]`: those touching
/// X, the remaining ones of `u`'s colour, and the rest.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Balls {
    pub x_ball: VertexSet,
    pub native_ball: VertexSet,
    pub foreign_ball: VertexSet,
}

pub fn classify_balls(
    h: &Hypergraph,
    f: &EliminationForest,
    rbx: &RbxPartition,
    u: usize,
) -> Result<Balls> {
    let c = rbx.colour(u);
    if c == Colour::X {
        return Err(Error::Precondition(
            "balls are defined for red or blue vertices".into(),
        ));
    }
    let bag = f.bag(h, u);
    let mut b = Balls {
        x_ball: BitSet::EMPTY,
        native_ball: BitSet::EMPTY,
        foreign_ball: BitSet::EMPTY,
    };
    for comp in h.components(bag) {
        if comp.intersects(rbx.x) {
            b.x_ball |= comp;
        } else if comp.is_subset(rbx.class(c)) {
            b.native_ball |= comp;
        } else {
            b.foreign_ball |= comp;
        }
    }
    Ok(b)
}

/// A maximal monochromatic stretch of a context factor's spine.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    /// Spine vertices, top first.
    pub vertices: Vec<usize>,
    pub colour: Colour,
    /// `W_i`: the first vertex of the next interval, or the factor's appendices for the last one.
    pub local_appendices: VertexSet,
}

impl Interval {
    pub fn first(&self) -> usize {
        self.vertices[0]
    }

    pub fn last(&self) -> usize {
        *self.vertices.last().unwrap()
    }

    /// `Cont_F(P_i, W_i)`.
    pub fn factor_vertices(&self, f: &EliminationForest) -> VertexSet {
        factors::context_from_path(f, &self.vertices, self.local_appendices)
    }
}

/// Colour intervals of the context factor `(root, appendices)`, which must avoid X.
pub fn colour_intervals(
    f: &EliminationForest,
    rbx: &RbxPartition,
    root: usize,
    appendices: VertexSet,
) -> Result<Vec<Interval>> {
    let fac = Factor::Context { root, appendices };
    if fac.vertices(f).intersects(rbx.x) {
        return Err(Error::Precondition("context factor meets X".into()));
    }
    let parts = context_parts(f, root, appendices);
    let mut out: Vec<Interval> = Vec::new();
    for &v in &parts.spine {
        let c = rbx.colour(v);
        match out.last_mut() {
            Some(iv) if iv.colour == c => iv.vertices.push(v),
            _ => out.push(Interval {
                vertices: vec![v],
                colour: c,
                local_appendices: BitSet::EMPTY,
            }),
        }
    }
    let q = out.len();
    for i in 0..q {
        out[i].local_appendices = if i + 1 < q {
            BitSet::singleton(out[i + 1].first())
        } else {
            appendices
        };
    }
    Ok(out)
}

/// A maximal stretch of the spine on which the X-ball is constant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct XInterval {
    /// Spine index range `start..=end`.
    pub start: usize,
    pub end: usize,
    pub x_ball: VertexSet,
    pub peak: bool,
}

pub fn x_intervals(
    h: &Hypergraph,
    f: &EliminationForest,
    rbx: &RbxPartition,
    root: usize,
    appendices: VertexSet,
) -> Result<Vec<XInterval>> {
    let parts = context_parts(f, root, appendices);
    let mut out: Vec<XInterval> = Vec::new();
    for (i, &v) in parts.spine.iter().enumerate() {
        let xb = classify_balls(h, f, rbx, v)?.x_ball;
        match out.last_mut() {
            Some(iv) if iv.x_ball == xb => iv.end = i,
            _ => out.push(XInterval {
                start: i,
                end: i,
                x_ball: xb,
                peak: false,
            }),
        }
    }
    for i in 0..out.len() {
        out[i].peak = i + 1 == out.len() || !(out[i].x_ball - out[i + 1].x_ball).is_empty();
    }
    Ok(out)
}

/// Swaps intervals `i` and `i + 1` (0-based) of the context factor, for
/// `1 <= i <= q - 3`. With `(u1,u2)`, `(v1,v2)`, `(w1,w2)` the forest edges
/// entering intervals `i`, `i+1`, `i+2`, these are replaced by
/// `(u1,v2)`, `(w1,u2)`, `(v1,w2)`.
pub fn swap(
    f: &EliminationForest,
    rbx: &RbxPartition,
    root: usize,
    appendices: VertexSet,
    i: usize,
) -> Result<EliminationForest> {
    let iv = colour_intervals(f, rbx, root, appendices)?;
    let q = iv.len();
    if i < 1 || i + 3 > q {
        return Err(Error::Precondition(format!(
            "swap index {i} outside 1..={} for {q} intervals",
            q.saturating_sub(3)
        )));
    }
    let u1 = iv[i - 1].last();
    let u2 = iv[i].first();
    let v1 = iv[i].last();
    let v2 = iv[i + 1].first();
    let w1 = iv[i + 1].last();
    let w2 = iv[i + 2].first();
    f.with_parents(&[(v2, Some(u1)), (u2, Some(w1)), (w2, Some(v1))])
}

/// Least `i` with `s[i+2] >= s[i]` and `s[i+1] >= s[i+3]`.
pub fn find_mutable_quadruple<T: Ord>(s: &[T]) -> Option<usize> {
    (0..s.len().saturating_sub(3)).find(|&i| s[i + 2] >= s[i] && s[i + 1] >= s[i + 3])
}

pub fn is_neutral(
    h: &Hypergraph,
    before: &EliminationForest,
    after: &EliminationForest,
    f: &WidthCache<'_>,
) -> bool {
    after.fwidth(h, f) <= before.fwidth(h, f)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Phase {
    /// Found from a mutable quadruple of foreign widths inside an X-interval.
    Structural = 1,
    /// Found by trying every admissible index.
    Scan = 2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SwapChoice {
    pub index: usize,
    pub phase: Phase,
}

/// Foreign width of a spine stretch: the largest additive width of the
/// foreign ball over its vertices.
fn foreign_width(
    h: &Hypergraph,
    f: &EliminationForest,
    rbx: &RbxPartition,
    w: &WidthCache<'_>,
    vs: &[usize],
) -> Result<Rational> {
    let mut best = Rational::from_integer(0.into());
    for &u in vs {
        let b = classify_balls(h, f, rbx, u)?;
        let x = w.function().additive_evaluate(h, b.foreign_ball);
        if x > best {
            best = x;
        }
    }
    Ok(best)
}

/// The swap index proposed by the structural strategy: inside each
/// X-interval, look for a mutable quadruple among the foreign widths of
/// the colour intervals and swap its middle pair.
pub fn structural_swap_candidate(
    h: &Hypergraph,
    f: &EliminationForest,
    rbx: &RbxPartition,
    w: &WidthCache<'_>,
    root: usize,
    appendices: VertexSet,
) -> Result<Option<usize>> {
    let iv = colour_intervals(f, rbx, root, appendices)?;
    let spine = context_parts(f, root, appendices).spine;
    // interval index of each spine position
    let mut owner = vec![0usize; spine.len()];
    let mut k = 0;
    for (i, it) in iv.iter().enumerate() {
        for _ in &it.vertices {
            owner[k] = i;
            k += 1;
        }
    }
    for xi in x_intervals(h, f, rbx, root, appendices)? {
        // colour intervals cut to this X-interval: (global index, vertices)
        let mut pieces: Vec<(usize, Vec<usize>)> = Vec::new();
        for p in xi.start..=xi.end {
            match pieces.last_mut() {
                Some((g, vs)) if *g == owner[p] => vs.push(spine[p]),
                _ => pieces.push((owner[p], vec![spine[p]])),
            }
        }
        if pieces.len() < 4 {
            continue;
        }
        let mut fw = Vec::with_capacity(pieces.len());
        for (_, vs) in &pieces {
            fw.push(foreign_width(h, f, rbx, w, vs)?);
        }
        if let Some(j) = find_mutable_quadruple(&fw) {
            return Ok(Some(pieces[j + 1].0));
        }
    }
    Ok(None)
}

/// Every admissible index whose swap does not raise the f-width, in order.
pub fn neutral_swaps_by_scan(
    h: &Hypergraph,
    f: &EliminationForest,
    rbx: &RbxPartition,
    w: &WidthCache<'_>,
    root: usize,
    appendices: VertexSet,
) -> Result<Vec<usize>> {
    let q = colour_intervals(f, rbx, root, appendices)?.len();
    let mut out = Vec::new();
    for i in 1..q.saturating_sub(2) {
        let g = swap(f, rbx, root, appendices, i)?;
        if is_neutral(h, f, &g, w) {
            out.push(i);
        }
    }
    Ok(out)
}

/// A neutral swap for the context factor, structural strategy first.
/// A structural proposal is only returned after its neutrality is confirmed.
pub fn find_neutral_swap(
    h: &Hypergraph,
    f: &EliminationForest,
    rbx: &RbxPartition,
    w: &WidthCache<'_>,
    root: usize,
    appendices: VertexSet,
) -> Result<Option<SwapChoice>> {
    if let Some(i) = structural_swap_candidate(h, f, rbx, w, root, appendices)? {
        let g = swap(f, rbx, root, appendices, i)?;
        if is_neutral(h, f, &g, w) {
            return Ok(Some(SwapChoice {
                index: i,
                phase: Phase::Structural,
            }));
        }
    }
    Ok(neutral_swaps_by_scan(h, f, rbx, w, root, appendices)?
        .first()
        .map(|&i| SwapChoice {
            index: i,
            phase: Phase::Scan,
        }))
}

/// Outcome of checking one swap against the single-swap properties.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SwapCheck {
    /// First failure per property; `None` means it held.
    pub reduced: Option<String>,
    pub monochromatic_factors: Option<String>,
    pub other_contexts: Option<String>,
    pub swapped_factor: Option<String>,
}

impl SwapCheck {
    pub fn passed(&self) -> bool {
        self.reduced.is_none()
            && self.monochromatic_factors.is_none()
            && self.other_contexts.is_none()
            && self.swapped_factor.is_none()
    }
}

/// Checks the four single-swap properties for `after = swap(before, B, i)`.
pub fn check_single_swap(
    h: &Hypergraph,
    before: &EliminationForest,
    after: &EliminationForest,
    rbx: &RbxPartition,
    root: usize,
    appendices: VertexSet,
) -> Result<SwapCheck> {
    let mut c = SwapCheck::default();
    if after.validate(h).is_err() || !after.is_reduced(h) {
        c.reduced = Some("result is not a reduced elimination forest".into());
    }
    let b_set = Factor::Context { root, appendices }.vertices(before);
    for fac in all_factors(before) {
        let s = fac.vertices(before);
        if rbx.is_monochromatic(s) {
            let kept = factor_of_set(after, s).map(|g| g.kind());
            if kept != Some(fac.kind()) && c.monochromatic_factors.is_none() {
                c.monochromatic_factors = Some(format!("{fac:?} became {kept:?}"));
            }
        }
        if let Factor::Context {
            root: r,
            appendices: a,
        } = fac
        {
            if !s.intersects(b_set) && c.other_contexts.is_none() {
                let same = factor_of_set(after, s) == Some(fac)
                    && context_parts(after, r, a).spine == context_parts(before, r, a).spine;
                if !same {
                    c.other_contexts = Some(format!("{fac:?} changed"));
                }
            }
        }
    }
    let q0 = colour_intervals(before, rbx, root, appendices)?.len();
    match factor_of_set(after, b_set) {
        Some(Factor::Context {
            root: r,
            appendices: a,
        }) if r == root && a == appendices => {
            let q1 = colour_intervals(after, rbx, root, appendices)?.len();
            if q1 + 2 != q0 {
                c.swapped_factor = Some(format!("interval count went from {q0} to {q1}"));
            }
        }
        other => c.swapped_factor = Some(format!("swapped factor became {other:?}")),
    }
    Ok(c)
}

/// A context factor tracked through dealternation by root and appendices.
pub type TrackedContext = (usize, VertexSet);

/// Outcome of checking a replacement `before -> after` for one partition.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ReplacementCheck {
    pub width: Option<String>,
    pub monochromatic_factors: Option<String>,
    pub tracked_contexts: Option<String>,
}

impl ReplacementCheck {
    pub fn passed(&self) -> bool {
        self.width.is_none()
            && self.monochromatic_factors.is_none()
            && self.tracked_contexts.is_none()
    }
}

pub fn check_replacement(
    h: &Hypergraph,
    before: &EliminationForest,
    after: &EliminationForest,
    rbx: &RbxPartition,
    w: &WidthCache<'_>,
    tracked: &[TrackedContext],
) -> ReplacementCheck {
    let mut c = ReplacementCheck::default();
    let (wb, wa) = (before.fwidth(h, w), after.fwidth(h, w));
    if wa > wb {
        c.width = Some(format!("width rose from {wb} to {wa}"));
    }
    for fac in all_factors(before) {
        let s = fac.vertices(before);
        if rbx.is_monochromatic(s) && factor_of_set(after, s).map(|g| g.kind()) != Some(fac.kind())
        {
            c.monochromatic_factors = Some(format!("{fac:?} lost"));
            break;
        }
    }
    for &(r, a) in tracked {
        let s = Factor::Context {
            root: r,
            appendices: a,
        }
        .vertices(before);
        if factor_of_set(after, s).map(|g| g.kind()) != Some(FactorKind::Context) {
            c.tracked_contexts = Some(format!("context at {r} lost"));
            break;
        }
    }
    c
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SwapRecord {
    /// Root of the context factor.
    pub factor: usize,
    pub index: usize,
    pub width_before: Rational,
    pub width_after: Rational,
    pub phase: Phase,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LocalConfig {
    /// Swap while a tracked context factor has more colour intervals than this.
    pub threshold: u64,
    /// Interval count the theory guarantees; being stuck above it is an invariant failure.
    pub proven: u64,
}

#[derive(Clone, Debug)]
pub struct LocalOutcome {
    pub forest: EliminationForest,
    pub swaps: Vec<SwapRecord>,
    /// Context factors left above the threshold for lack of a neutral swap.
    pub stuck: Vec<(TrackedContext, usize)>,
    /// Context factors of the starting factorization.
    pub tracked: Vec<TrackedContext>,
    /// Structural proposals that failed the neutrality check.
    pub rejected_structural: usize,
}

/// The starting factorization: `MF(Red ∪ Blue)` with every two-coloured
/// forest factor split by root colour.
pub fn initial_factorization(f: &EliminationForest, rbx: &RbxPartition) -> Vec<Factor> {
    let mut out = Vec::new();
    for fac in maximal_factorization(f, rbx.red | rbx.blue) {
        match fac {
            Factor::Forest { roots } if !rbx.is_monochromatic(fac.vertices(f)) => {
                for part in [roots & rbx.red, roots & rbx.blue] {
                    if !part.is_empty() {
                        out.push(Factor::over_roots(part));
                    }
                }
            }
            _ => out.push(fac),
        }
    }
    out
}

/// Neutral swaps on the context factors of the starting factorization until
/// each has at most `threshold` colour intervals (or no neutral swap exists).
pub fn local_dealternate(
    h: &Hypergraph,
    f: &EliminationForest,
    rbx: &RbxPartition,
    w: &WidthCache<'_>,
    cfg: LocalConfig,
) -> Result<LocalOutcome> {
    f.validate(h)?;
    if !f.is_reduced(h) {
        return Err(Error::Precondition(
            "local dealternation needs a reduced forest".into(),
        ));
    }
    let tracked: Vec<TrackedContext> = initial_factorization(f, rbx)
        .into_iter()
        .filter_map(|fac| match fac {
            Factor::Context { root, appendices } => Some((root, appendices)),
            _ => None,
        })
        .collect();
    let mut cur = f.clone();
    let mut swaps = Vec::new();
    let mut stuck = Vec::new();
    let mut rejected = 0;
    let mut open: Vec<TrackedContext> = tracked.clone();
    loop {
        let mut worst: Option<(usize, TrackedContext)> = None;
        for &(r, a) in &open {
            let q = colour_intervals(&cur, rbx, r, a)?.len();
            if q as u64 > cfg.threshold
                && worst.is_none_or(|(wq, (wr, _))| q > wq || (q == wq && r < wr))
            {
                worst = Some((q, (r, a)));
            }
        }
        let Some((q, (r, a))) = worst else { break };
        if structural_swap_candidate(h, &cur, rbx, w, r, a)?.is_some_and(|i| {
            let g = swap(&cur, rbx, r, a, i).unwrap();
            !is_neutral(h, &cur, &g, w)
        }) {
            rejected += 1;
        }
        match find_neutral_swap(h, &cur, rbx, w, r, a)? {
            Some(choice) => {
                let next = swap(&cur, rbx, r, a, choice.index)?;
                swaps.push(SwapRecord {
                    factor: r,
                    index: choice.index,
                    width_before: cur.fwidth(h, w),
                    width_after: next.fwidth(h, w),
                    phase: choice.phase,
                });
                cur = next;
            }
            None => {
                if q as u64 > cfg.proven {
                    return Err(Error::Invariant(format!(
                        "context factor at vertex {} keeps {q} colour intervals with no neutral swap (bound {})",
                        h.label(r),
                        cfg.proven
                    )));
                }
                stuck.push(((r, a), q));
                open.retain(|&t| t != (r, a));
            }
        }
    }
    Ok(LocalOutcome {
        forest: cur,
        swaps,
        stuck,
        tracked,
        rejected_structural: rejected,
    })
}

#[derive(Clone, Copy, Debug, Default)]
pub struct DealternationConfig {
    /// Swap down to this many intervals instead of the proven bound, to
    /// exercise the swap machinery.
    pub probe_threshold: Option<u64>,
    pub enumeration: EnumerationOptions,
}

#[derive(Clone, Debug)]
pub struct DealternationOutcome {
    pub forest: EliminationForest,
    /// `(node, swap)` in application order.
    pub swaps: Vec<(usize, SwapRecord)>,
    pub width_before: Rational,
    pub width_after: Rational,
    pub split: usize,
    pub mir: usize,
    pub bounds: bounds::BoundSet,
    pub rejected_structural: usize,
}

/// Local dealternation at every node of `t`, children before parents, with
/// the canonical partition `(cmp(x), adh(x), rest)`.
pub fn dealternate(
    h: &Hypergraph,
    t: &TreeDecomposition,
    f: &EliminationForest,
    w: &WidthCache<'_>,
    cfg: &DealternationConfig,
) -> Result<DealternationOutcome> {
    t.validate(h)?;
    f.validate(h)?;
    if !f.is_reduced(h) {
        return Err(Error::Precondition(
            "dealternation needs a reduced forest".into(),
        ));
    }
    let width_before = f.fwidth(h, w);
    let bs = bounds::bounds(
        h,
        w.function(),
        &width_before,
        t.treewidth(),
        &cfg.enumeration,
    );
    let mut cur = f.clone();
    let mut swaps = Vec::new();
    let mut rejected = 0;
    for x in t.postorder() {
        let rbx = RbxPartition::canonical(h, t, x)?;
        let k = bounds::kappa(
            bounds::kappa0(
                rbx.x.len(),
                &width_before,
                w.function(),
                h.rank(),
                h.max_degree(),
            ),
            bs.kappa2,
        );
        let lc = LocalConfig {
            threshold: cfg.probe_threshold.unwrap_or(k).min(k),
            proven: k,
        };
        let out = local_dealternate(h, &cur, &rbx, w, lc)?;
        let chk = check_replacement(h, &cur, &out.forest, &rbx, w, &out.tracked);
        if !chk.passed() {
            return Err(Error::Invariant(format!(
                "replacement at node {} failed: {chk:?}",
                x + 1
            )));
        }
        rejected += out.rejected_structural;
        swaps.extend(out.swaps.into_iter().map(|s| (x, s)));
        cur = out.forest;
    }
    let width_after = cur.fwidth(h, w);
    let split = factors::split(t, &cur);
    let mir = factors::mir(t, &cur);
    Ok(DealternationOutcome {
        forest: cur,
        swaps,
        width_before,
        width_after,
        split,
        mir,
        bounds: bs,
        rejected_structural: rejected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;
    use crate::widths::{Width, WidthFunction};
    use proptest::prelude::*;

    /// Spine r1 b1 r2 b2 .. above an X vertex; red and blue vertices pair up
    /// with the next one of the same colour.
    pub(crate) fn alternating(len: usize) -> (Hypergraph, EliminationForest, RbxPartition) {
        let n = len + 1;
        let xv = len;
        let mut edges: Vec<VertexSet> = (0..len.saturating_sub(2))
            .map(|i| set(&[i, i + 2]))
            .collect();
        edges.push(set(&[len - 2, xv]));
        edges.push(set(&[len - 1, xv]));
        let h = Hypergraph::new(n, edges).unwrap();
        let parent = (0..n)
            .map(|v| if v == 0 { None } else { Some(v - 1) })
            .collect();
        let f = EliminationForest::for_hypergraph(&h, parent).unwrap();
        let red: VertexSet = (0..len).step_by(2).collect();
        let blue: VertexSet = (1..len).step_by(2).collect();
        let rbx = RbxPartition::new(&h, red, BitSet::singleton(xv), blue).unwrap();
        (h, f, rbx)
    }

    #[test]
    fn rbx_rejects_crossing_edge() {
        let h = h0();
        assert!(RbxPartition::new(&h, set(&[0]), set(&[2, 3, 4]), set(&[1])).is_err());
        assert!(RbxPartition::new(&h, set(&[1]), set(&[0]), set(&[2, 3, 4])).is_ok());
    }

    #[test]
    fn balls_partition_the_bag() {
        let (h, f) = (h0(), f0());
        let rbx = RbxPartition::new(&h, set(&[1]), set(&[0]), set(&[2, 3, 4])).unwrap();
        for u in [1, 2, 3, 4] {
            let b = classify_balls(&h, &f, &rbx, u).unwrap();
            let bag = f.bag(&h, u);
            assert_eq!(b.x_ball | b.native_ball | b.foreign_ball, bag);
            let bc = classify_bag(&h, &f, &rbx, u).unwrap();
            assert_eq!(bc.x_bag | bc.native_bag | bc.foreign_bag, bag);
            for wf in Width::ALL {
                let add = |s| wf.additive_evaluate(&h, s);
                assert_eq!(
                    add(bag),
                    add(b.x_ball) + add(b.native_ball) + add(b.foreign_ball)
                );
            }
        }
        assert!(classify_balls(&h, &f, &rbx, 0).is_err());
    }

    #[test]
    fn intervals_of_alternating_spine() {
        let (_, f, rbx) = alternating(4);
        let iv = colour_intervals(&f, &rbx, 0, set(&[4])).unwrap();
        assert_eq!(iv.len(), 4);
        assert_eq!(iv[0].local_appendices, set(&[1]));
        assert_eq!(iv[3].local_appendices, set(&[4]));
        assert_eq!(iv[1].factor_vertices(&f), set(&[1]));
    }

    #[test]
    fn single_swap_on_four_intervals() {
        let (h, f, rbx) = alternating(4);
        let g = swap(&f, &rbx, 0, set(&[4]), 1).unwrap();
        // r1 r2 b1 b2 x
        assert_eq!(g.parents(), [None, Some(2), Some(0), Some(1), Some(3)]);
        let chk = check_single_swap(&h, &f, &g, &rbx, 0, set(&[4])).unwrap();
        assert!(chk.passed(), "{chk:?}");
        assert!(swap(&f, &rbx, 0, set(&[4]), 0).is_err());
        assert!(swap(&f, &rbx, 0, set(&[4]), 2).is_err());
    }

    #[test]
    fn swap_checks_on_longer_spines() {
        for len in 4..=7 {
            let (h, f, rbx) = alternating(len);
            let app = BitSet::singleton(len);
            let q = colour_intervals(&f, &rbx, 0, app).unwrap().len();
            for i in 1..q - 2 {
                let g = swap(&f, &rbx, 0, app, i).unwrap();
                let chk = check_single_swap(&h, &f, &g, &rbx, 0, app).unwrap();
                assert!(chk.passed(), "len {len} i {i}: {chk:?}");
            }
        }
    }

    #[test]
    fn mutable_quadruples() {
        assert_eq!(find_mutable_quadruple(&[5, 3, 7, 2]), Some(0));
        assert_eq!(find_mutable_quadruple(&[1, 2, 3, 4]), None);
        assert_eq!(find_mutable_quadruple::<u8>(&[]), None);
    }

    /// Every sequence of length `4 |I|` over `I` has a mutable quadruple.
    #[test]
    fn mutable_quadruple_exists_in_long_sequences() {
        for k in 1..=3u32 {
            let len = 4 * k as usize;
            let total = k.pow(len as u32);
            for code in 0..total {
                let mut c = code;
                let s: Vec<u32> = (0..len)
                    .map(|_| {
                        let d = c % k;
                        c /= k;
                        d
                    })
                    .collect();
                assert!(find_mutable_quadruple(&s).is_some(), "{s:?}");
            }
        }
    }

    #[test]
    fn local_dealternation_reaches_probe_threshold() {
        for len in 4..=7 {
            let (h, f, rbx) = alternating(len);
            for wf in Width::ALL {
                let w = WidthCache::new(&wf, &h);
                let out = local_dealternate(
                    &h,
                    &f,
                    &rbx,
                    &w,
                    LocalConfig {
                        threshold: 2,
                        proven: u64::MAX,
                    },
                )
                .unwrap();
                assert!(out.forest.is_reduced(&h));
                assert!(!out.swaps.is_empty(), "len {len} {wf:?}: {:?}", out.stuck);
                assert!(out.forest.fwidth(&h, &w) <= f.fwidth(&h, &w));
                for &(r, a) in &out.tracked {
                    let q = colour_intervals(&out.forest, &rbx, r, a).unwrap().len();
                    assert!(q <= 2 || out.stuck.iter().any(|s| s.0 == (r, a)));
                }
                let chk = check_replacement(&h, &f, &out.forest, &rbx, &w, &out.tracked);
                assert!(chk.passed(), "{chk:?}");
                for s in &out.swaps {
                    assert!(s.width_after <= s.width_before);
                }
            }
        }
    }

    #[test]
    fn x_intervals_end_in_a_peak() {
        let (h, f, rbx) = alternating(6);
        let xs = x_intervals(&h, &f, &rbx, 0, set(&[6])).unwrap();
        assert!(xs.last().unwrap().peak);
        let peaks: Vec<VertexSet> = xs.iter().filter(|x| x.peak).map(|x| x.x_ball).collect();
        for (i, a) in peaks.iter().enumerate() {
            assert!(!peaks[i + 1..].contains(a));
        }
    }

    #[test]
    fn dealternate_td0() {
        let (h, f, t) = (h0(), f0(), td0());
        let w = WidthCache::new(&Width::Ghw, &h);
        let out = dealternate(&h, &t, &f, &w, &DealternationConfig::default()).unwrap();
        assert!(out.width_after <= out.width_before);
        assert!(out.split as u64 <= out.bounds.gamma && out.mir as u64 <= out.bounds.gamma);
    }

    #[test]
    fn bag_classes_on_h0() {
        let (h, f) = (h0(), f0());
        let rbx = RbxPartition::new(&h, set(&[1]), set(&[0, 2]), set(&[3, 4])).unwrap();
        let c = classify_bag(&h, &f, &rbx, 3).unwrap();
        assert_eq!(
            (c.x_bag, c.native_bag, c.foreign_bag),
            (set(&[0, 2]), set(&[3]), BitSet::EMPTY)
        );
        let c = classify_bag(&h, &f, &rbx, 1).unwrap();
        assert_eq!(
            (c.x_bag, c.native_bag, c.foreign_bag),
            (set(&[0]), set(&[1]), BitSet::EMPTY)
        );
        let b = classify_balls(&h, &f, &rbx, 3).unwrap();
        assert_eq!(
            (b.x_ball, b.native_ball, b.foreign_ball),
            (set(&[0, 2, 3]), BitSet::EMPTY, BitSet::EMPTY)
        );
        assert_eq!(Width::Ghw.evaluate(&h, b.x_ball), crate::rational::int(1));
        assert!(classify_bag(&h, &f, &rbx, 0).is_err());
    }

    #[test]
    fn swap_is_undone_by_restoring_the_three_edges() {
        let (_, f, rbx) = alternating(6);
        let app = set(&[6]);
        let iv = colour_intervals(&f, &rbx, 0, app).unwrap();
        for i in 1..iv.len() - 2 {
            let g = swap(&f, &rbx, 0, app, i).unwrap();
            let back = g
                .with_parents(&[
                    (iv[i].first(), Some(iv[i - 1].last())),
                    (iv[i + 1].first(), Some(iv[i].last())),
                    (iv[i + 2].first(), Some(iv[i + 1].last())),
                ])
                .unwrap();
            assert_eq!(back, f);
        }
    }

    #[test]
    fn replacement_check_catches_a_moved_leaf() {
        // spine r b r b over x, with a red leaf below the first red vertex
        let h = Hypergraph::new(
            6,
            [
                set(&[0, 2]),
                set(&[1, 3]),
                set(&[2, 4]),
                set(&[3, 4]),
                set(&[0, 5]),
            ],
        )
        .unwrap();
        let f = EliminationForest::for_hypergraph(
            &h,
            vec![None, Some(0), Some(1), Some(2), Some(3), Some(0)],
        )
        .unwrap();
        let rbx = RbxPartition::new(&h, set(&[0, 2, 5]), set(&[4]), set(&[1, 3])).unwrap();
        let w = WidthCache::new(&Width::Ghw, &h);
        assert!(check_replacement(&h, &f, &f, &rbx, &w, &[]).passed());
        let g = f.with_parents(&[(5, Some(2))]).unwrap();
        let chk = check_replacement(&h, &f, &g, &rbx, &w, &[]);
        assert!(chk.monochromatic_factors.is_some(), "{chk:?}");
    }

    #[test]
    fn some_swap_is_not_neutral() {
        // spine r b b b r b over x with hanging leaves
        let e = |v: &[usize]| set(v);
        let edges = [
            e(&[0, 4]),
            e(&[1, 2]),
            e(&[2, 3]),
            e(&[3, 5]),
            e(&[4, 6]),
            e(&[5, 6]),
            e(&[1, 7]),
            e(&[2, 8]),
            e(&[1, 8]),
            e(&[4, 9]),
            e(&[0, 9]),
            e(&[1, 2, 3]),
            e(&[0, 6]),
        ];
        let h = Hypergraph::new(10, edges).unwrap();
        let parent = vec![
            None,
            Some(0),
            Some(1),
            Some(2),
            Some(3),
            Some(4),
            Some(5),
            Some(1),
            Some(2),
            Some(4),
        ];
        let f = EliminationForest::for_hypergraph(&h, parent).unwrap();
        assert!(f.is_reduced(&h));
        let rbx =
            RbxPartition::new(&h, set(&[0, 4, 9]), set(&[6]), set(&[1, 2, 3, 5, 7, 8])).unwrap();
        let w = WidthCache::new(&Width::Tw, &h);
        let g = swap(&f, &rbx, 0, set(&[6]), 1).unwrap();
        assert_eq!(
            (f.fwidth(&h, &w), g.fwidth(&h, &w)),
            (crate::rational::int(3), crate::rational::int(4))
        );
        assert!(!is_neutral(&h, &f, &g, &w));
        assert!(check_single_swap(&h, &f, &g, &rbx, 0, set(&[6]))
            .unwrap()
            .passed());
    }

    /// Red is a random set, X its open neighbourhood, blue the rest.
    fn partition(h: &Hypergraph, red: u64) -> RbxPartition {
        let red = BitSet(red) & h.vertices();
        let x = h.neighbourhood(red) - red;
        RbxPartition::new(h, red, x, h.vertices() - red - x).unwrap()
    }

    fn spine_instance(
        cols: &[bool],
        leaves: &[bool],
        chords: &[(usize, usize, usize)],
    ) -> (Hypergraph, EliminationForest, RbxPartition) {
        let len = cols.len();
        let x = len;
        let mut parent: Vec<Option<usize>> = (0..=len).map(|v| v.checked_sub(1)).collect();
        let mut edges = Vec::new();
        for i in 0..len {
            let next = (i + 1..len).find(|&j| cols[j] == cols[i]).unwrap_or(x);
            edges.push(set(&[i, next]));
        }
        let mut red = BitSet::EMPTY;
        let mut blue = BitSet::EMPTY;
        for i in 0..len {
            if cols[i] {
                red.insert(i)
            } else {
                blue.insert(i)
            }
        }
        for i in 0..len {
            if leaves[i] {
                let l = parent.len();
                parent.push(Some(i));
                edges.push(set(&[i, l]));
                if cols[i] {
                    red.insert(l)
                } else {
                    blue.insert(l)
                }
            }
        }
        // chords are chains of the forest, monochromatic apart from X
        let n = parent.len();
        let bare = EliminationForest::new(parent.clone()).unwrap();
        for &(a, b, c) in chords {
            let e = set(&[a % n, b % n, c % n]);
            let chain = e.iter().all(|u| e.iter().all(|v| bare.comparable(u, v)));
            let rest = e.without(x);
            if chain && (rest.is_subset(red) || rest.is_subset(blue)) {
                edges.push(e);
            }
        }
        let h = Hypergraph::new(n, edges).unwrap();
        let f = EliminationForest::for_hypergraph(&h, parent).unwrap();
        let rbx = RbxPartition::new(&h, red, BitSet::singleton(x), blue).unwrap();
        (h, f, rbx)
    }

    /// Random spine over an X vertex: colours from `cols`, each spine vertex
    /// joined to the next one of its colour (or to X), plus same-coloured
    /// leaves hanging off the spine and extra chords of rank at most 3.
    fn arb_spine() -> impl Strategy<Value = (Hypergraph, EliminationForest, RbxPartition)> {
        (
            proptest::collection::vec(any::<bool>(), 4..=10),
            proptest::collection::vec(any::<bool>(), 10),
            proptest::collection::vec((0usize..20, 0usize..20, 0usize..20), 0..6),
        )
            .prop_map(|(cols, leaves, chords)| spine_instance(&cols, &leaves, &chords))
    }

    /// Context factors of the starting factorization and their interval counts.
    fn contexts(f: &EliminationForest, rbx: &RbxPartition) -> Vec<(usize, VertexSet, usize)> {
        initial_factorization(f, rbx)
            .into_iter()
            .filter_map(|fac| match fac {
                Factor::Context { root, appendices } => Some((
                    root,
                    appendices,
                    colour_intervals(f, rbx, root, appendices).unwrap().len(),
                )),
                _ => None,
            })
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn spine_swaps_satisfy_the_swap_properties((h, f, rbx) in arb_spine()) {
            prop_assume!(f.is_reduced(&h));
            for (root, appendices, q) in contexts(&f, &rbx) {
                for i in 1..q.saturating_sub(2) {
                    let g = swap(&f, &rbx, root, appendices, i).unwrap();
                    let chk = check_single_swap(&h, &f, &g, &rbx, root, appendices).unwrap();
                    prop_assert!(chk.passed(), "i {}: {:?}", i, chk);
                }
            }
        }

        #[test]
        fn spine_local_dealternation((h, f, rbx) in arb_spine()) {
            prop_assume!(f.is_reduced(&h));
            for wf in Width::ALL {
                let w = WidthCache::new(&wf, &h);
                let out = local_dealternate(&h, &f, &rbx, &w, LocalConfig { threshold: 2, proven: u64::MAX }).unwrap();
                let chk = check_replacement(&h, &f, &out.forest, &rbx, &w, &out.tracked);
                prop_assert!(chk.passed(), "{:?}", chk);
                prop_assert!(out.forest.is_reduced(&h));
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn every_admissible_swap_satisfies_the_lemma((h, order) in arb_instance(9), red in any::<u64>()) {
            let f = forest_from_order(&h, &order).reduce(&h);
            let rbx = partition(&h, red);
            for fac in initial_factorization(&f, &rbx) {
                let Factor::Context { root, appendices } = fac else { continue };
                let q = colour_intervals(&f, &rbx, root, appendices).unwrap().len();
                for i in 1..q.saturating_sub(2) {
                    let g = swap(&f, &rbx, root, appendices, i).unwrap();
                    let chk = check_single_swap(&h, &f, &g, &rbx, root, appendices).unwrap();
                    prop_assert!(chk.passed(), "{:?}", chk);
                }
            }
        }

        #[test]
        fn local_dealternation_is_a_replacement((h, order) in arb_instance(9), red in any::<u64>()) {
            let f = forest_from_order(&h, &order).reduce(&h);
            let rbx = partition(&h, red);
            let w = WidthCache::new(&Width::Fhw, &h);
            let out = local_dealternate(&h, &f, &rbx, &w, LocalConfig { threshold: 1, proven: u64::MAX }).unwrap();
            let chk = check_replacement(&h, &f, &out.forest, &rbx, &w, &out.tracked);
            prop_assert!(chk.passed(), "{:?}", chk);
            prop_assert!(out.forest.is_reduced(&h));
        }

        #[test]
        fn spine_invariants((h, f, rbx) in arb_spine()) {
            prop_assume!(f.is_reduced(&h));
            let rb = rbx.red | rbx.blue;
            for u in 0..h.num_vertices() {
                let s = f.subtree(u);
                if s.is_subset(rb) {
                    prop_assert!(rbx.is_monochromatic(s));
                }
                for &v in f.children(u) {
                    let s = f.subtree(v).with(u);
                    if s.is_subset(rb) {
                        prop_assert!(rbx.is_monochromatic(s));
                    }
                }
            }
            for wf in Width::ALL {
                let w = WidthCache::new(&wf, &h);
                let fw = f.fwidth(&h, &w);
                let p = wf.size_bound(&fw, h.rank());
                for u in rb.iter() {
                    let xb = classify_balls(&h, &f, &rbx, u).unwrap().x_ball;
                    for v in xb.iter() {
                        prop_assert!(distance_to(&h, xb, v, rbx.x) < p.max(1));
                    }
                }
                for (r, a, _) in contexts(&f, &rbx) {
                    for iv in colour_intervals(&f, &rbx, r, a).unwrap() {
                        prop_assert!(rbx.is_monochromatic(iv.factor_vertices(&f)));
                        let fb = classify_bag(&h, &f, &rbx, iv.first()).unwrap().foreign_bag;
                        for &u in &iv.vertices {
                            prop_assert_eq!(classify_bag(&h, &f, &rbx, u).unwrap().foreign_bag, fb);
                        }
                    }
                    let xs = x_intervals(&h, &f, &rbx, r, a).unwrap();
                    let k0 = bounds::kappa0(rbx.x.len(), &fw, &wf, h.rank(), h.max_degree());
                    prop_assert!(xs.len() as u64 <= k0);
                    let peaks: Vec<VertexSet> = xs.iter().filter(|x| x.peak).map(|x| x.x_ball).collect();
                    for (i, b) in peaks.iter().enumerate() {
                        prop_assert!(!peaks[i + 1..].contains(b));
                    }
                    if let Some(i) = structural_swap_candidate(&h, &f, &rbx, &w, r, a).unwrap() {
                        let g = swap(&f, &rbx, r, a, i).unwrap();
                        prop_assert!(is_neutral(&h, &f, &g, &w), "{:?} i {}: {} -> {}", wf, i, fw, g.fwidth(&h, &w));
                    }
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn full_dealternation((h, order) in arb_instance(7), (_, order2) in arb_instance(7)) {
            let f = forest_from_order(&h, &order).reduce(&h);
            let n = h.num_vertices();
            let o2: Vec<usize> = order2.into_iter().filter(|&v| v < n).chain(0..n).collect::<Vec<_>>();
            let mut seen = BitSet::EMPTY;
            let o2: Vec<usize> = o2.into_iter().filter(|&v| !seen.contains(v) && { seen.insert(v); true }).collect();
            let t = forest_from_order(&h, &o2).induced_td(&h);
            for wf in Width::ALL {
                let w = WidthCache::new(&wf, &h);
                let out = dealternate(&h, &t, &f, &w, &DealternationConfig { probe_threshold: Some(2), ..Default::default() }).unwrap();
                prop_assert!(out.width_after <= out.width_before);
                prop_assert!(out.forest.is_reduced(&h));
                out.forest.validate(&h).unwrap();
                prop_assert!(out.split as u64 <= out.bounds.gamma);
                prop_assert!(out.mir as u64 <= out.bounds.gamma);
            }
        }
    }

    /// Hop distance from `v` to `target` inside `H[within]`.
    fn distance_to(h: &Hypergraph, within: VertexSet, v: usize, target: VertexSet) -> usize {
        let mut seen = BitSet::singleton(v);
        let mut frontier = seen;
        let mut d = 0;
        while !frontier.intersects(target) {
            let next = frontier
                .iter()
                .fold(BitSet::EMPTY, |a, u| a | (h.neighbours(u) & within))
                - seen;
            if next.is_empty() {
                return usize::MAX;
            }
            seen |= next;
            frontier = next;
            d += 1;
        }
        d
    }
}
