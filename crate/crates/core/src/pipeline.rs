//! Exact treewidth and the end-to-end width check: a decomposition of
//! small treewidth, the forest transduction over it, and width filters for
//! the candidate values in ascending order.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::bitset::{BitSet, VertexSet};
use crate::bounds::{self, BoundSet};
use crate::budget::Budget;
use crate::dealternation::{dealternate, DealternationConfig};
use crate::decomp::{exact_fwidth, EliminationForest, TreeDecomposition};
use crate::error::{cap, Error, Result};
use crate::hypergraph::Hypergraph;
use crate::mso::build::{phi_star, phi_star_local, FamilySource};
use crate::mso::structure::{decode_forest, encode_td};
use crate::mso::Structure;
use crate::rational::{self, Rational};
use crate::stains::ConflictGraph;
use crate::transduction::{
    apply, apply_elementary, build_forest_transduction, witness_tuple, Elementary, Mode, RunStats,
    Step,
};
use crate::widths::{value_set, EnumerationOptions, WidthCache, WidthFunction};

/// Vertices reachable from `v` through `eliminated`, outside it: the
/// neighbours of `v` once `eliminated` has been eliminated.
fn eliminated_neighbours(adj: &[VertexSet], eliminated: VertexSet, v: usize) -> VertexSet {
    let mut seen = BitSet::singleton(v);
    let mut frontier = seen;
    let mut out = BitSet::EMPTY;
    while !frontier.is_empty() {
        let next = frontier.iter().fold(BitSet::EMPTY, |a, w| a | adj[w]) - seen;
        seen |= next;
        out |= next - eliminated;
        frontier = next & eliminated;
    }
    out
}

/// An elimination order in which every vertex has at most `bound`
/// neighbours when eliminated, by depth-first search over the set of
/// eliminated vertices. Sets known to be dead ends are remembered.
fn order_within(h: &Hypergraph, bound: usize, budget: &Budget) -> Result<Option<Vec<usize>>> {
    let n = h.num_vertices();
    cap("vertices for exact treewidth", n, budget.treewidth_vertices)?;
    let adj: Vec<VertexSet> = (0..n).map(|v| h.neighbours(v)).collect();
    let mut dead = BTreeSet::new();
    let mut order = Vec::new();
    fn search(
        adj: &[VertexSet],
        all: VertexSet,
        done: VertexSet,
        bound: usize,
        dead: &mut BTreeSet<u64>,
        order: &mut Vec<usize>,
    ) -> bool {
        let rest = all - done;
        if rest.len() <= bound + 1 {
            order.extend(rest.iter());
            return true;
        }
        if dead.contains(&done.bits()) {
            return false;
        }
        for v in rest.iter() {
            if eliminated_neighbours(adj, done, v).len() <= bound {
                order.push(v);
                if search(adj, all, done.with(v), bound, dead, order) {
                    return true;
                }
                order.pop();
            }
        }
        dead.insert(done.bits());
        false
    }
    Ok(search(
        &adj,
        h.vertices(),
        BitSet::EMPTY,
        bound,
        &mut dead,
        &mut order,
    )
    .then_some(order))
}

/// A tree decomposition of width at most `bound`, or `None` when the
/// treewidth of `h` exceeds `bound`.
pub fn exact_treewidth(
    h: &Hypergraph,
    bound: usize,
    budget: &Budget,
) -> Result<Option<TreeDecomposition>> {
    let Some(order) = order_within(h, bound, budget)? else {
        return Ok(None);
    };
    let t = EliminationForest::from_order(h, &order)?.induced_td(h);
    if t.treewidth() > bound {
        return Err(Error::Invariant(format!(
            "elimination order gave width {} above {bound}",
            t.treewidth()
        )));
    }
    Ok(Some(t))
}

/// The treewidth of `h` with an optimal decomposition.
pub fn treewidth(h: &Hypergraph, budget: &Budget) -> Result<(usize, TreeDecomposition)> {
    for b in 0..h.num_vertices().max(1) {
        if let Some(t) = exact_treewidth(h, b, budget)? {
            return Ok((b, t));
        }
    }
    Err(Error::Invariant("no elimination order found".into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum CheckMode {
    Pipeline,
    Oracle,
    Both,
}

impl CheckMode {
    pub fn from_name(s: &str) -> Result<CheckMode> {
        match s {
            "pipeline" => Ok(CheckMode::Pipeline),
            "oracle" => Ok(CheckMode::Oracle),
            "both" => Ok(CheckMode::Both),
            _ => Err(Error::Precondition(format!("unknown mode `{s}`"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CheckMode::Pipeline => "pipeline",
            CheckMode::Oracle => "oracle",
            CheckMode::Both => "both",
        }
    }
}

/// How the pipeline runs the forest transduction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Execution {
    /// Colourings taken from the tuple of an optimal forest.
    Guided,
    /// Every colouring.
    Exhaustive,
    /// Exhaustive within the budget, guided otherwise.
    Auto,
}

impl Execution {
    pub fn from_name(s: &str) -> Result<Execution> {
        match s {
            "guided" => Ok(Execution::Guided),
            "exhaustive" => Ok(Execution::Exhaustive),
            "auto" => Ok(Execution::Auto),
            _ => Err(Error::Precondition(format!("unknown execution `{s}`"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Execution::Guided => "guided",
            Execution::Exhaustive => "exhaustive",
            Execution::Auto => "auto",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ValueSource {
    /// `Val` of the bounded family.
    Bounded,
    /// Widths of vertex sets of the input; used when the family is too large.
    Local,
}

/// What the pipeline did.
#[derive(Clone, Debug)]
pub struct PipelineTrace {
    /// `p = beta(k, rank)`.
    pub size_bound: usize,
    /// Width of the decomposition the transduction runs on.
    pub treewidth: Option<usize>,
    pub values: Vec<Rational>,
    pub value_source: ValueSource,
    pub bounds: Option<BoundSet>,
    /// Colours used: the chromatic number of the conflict graph.
    pub q: usize,
    pub swaps: usize,
    pub execution: Option<Execution>,
    pub stats: RunStats,
    /// Per tried value: the family behind the filter and the output count.
    pub tried: Vec<(Rational, FamilySource, usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Accepted {
    pub value: Rational,
    pub forest: EliminationForest,
    pub td: TreeDecomposition,
}

#[derive(Clone, Debug)]
pub struct WidthReport {
    pub mode: CheckMode,
    pub function: String,
    pub k: Rational,
    /// `None` is a reject.
    pub accepted: Option<Accepted>,
    pub trace: Option<PipelineTrace>,
    /// Optimal width found by the oracle, when it ran.
    pub oracle_value: Option<Rational>,
}

impl WidthReport {
    /// `result accept value=p/q mode=m` or `result reject mode=m`.
    pub fn result_line(&self) -> String {
        match &self.accepted {
            Some(a) => format!(
                "result accept value={} mode={}",
                rational::to_string(&a.value),
                self.mode.name()
            ),
            None => format!("result reject mode={}", self.mode.name()),
        }
    }
}

pub struct CheckOptions {
    pub mode: CheckMode,
    pub execution: Execution,
    pub budget: Budget,
}

fn oracle(
    h: &Hypergraph,
    f: &dyn WidthFunction,
    k: &Rational,
    budget: &Budget,
) -> Result<(Rational, Option<Accepted>)> {
    let (w, forest) = exact_fwidth(h, f, budget)?;
    let acc = (w <= *k).then(|| Accepted {
        value: w.clone(),
        td: forest.induced_td(h),
        forest,
    });
    Ok((w, acc))
}

/// Candidate values up to `k`, ascending.
fn candidate_values(
    h: &Hypergraph,
    f: &dyn WidthFunction,
    k: &Rational,
    budget: &Budget,
) -> Result<(Vec<Rational>, ValueSource)> {
    let opts = EnumerationOptions {
        include_empty: false,
        budget: *budget,
    };
    match value_set(f, k, h.rank(), &opts) {
        Ok(v) => Ok((v, ValueSource::Bounded)),
        Err(Error::CapExceeded { .. }) => {
            cap(
                "vertices for local values",
                h.num_vertices(),
                budget.canonical_vertices,
            )?;
            let w = WidthCache::new(f, h);
            let vals: BTreeSet<Rational> = h
                .vertices()
                .subsets()
                .filter(|u| !u.is_empty())
                .map(|u| w.get(u))
                .filter(|v| v <= k)
                .collect();
            Ok((vals.into_iter().collect(), ValueSource::Local))
        }
        Err(e) => Err(e),
    }
}

fn width_filter(
    h: &Hypergraph,
    f: &dyn WidthFunction,
    a: &Rational,
    budget: &Budget,
) -> Result<(Elementary, FamilySource)> {
    let p = match phi_star(f, a, h.rank(), budget) {
        Ok(p) => p,
        Err(Error::CapExceeded { .. }) => phi_star_local(h, f, a, budget)?,
        Err(e) => return Err(e),
    };
    Ok((
        Elementary::new("width", Step::Filtering(p.formula)),
        p.source,
    ))
}

fn pipeline(
    h: &Hypergraph,
    f: &dyn WidthFunction,
    k: &Rational,
    opts: &CheckOptions,
) -> Result<(Option<Accepted>, PipelineTrace)> {
    let budget = &opts.budget;
    let r = h.rank();
    let p = f.size_bound(k, r);
    let mut trace = PipelineTrace {
        size_bound: p,
        treewidth: None,
        values: Vec::new(),
        value_source: ValueSource::Bounded,
        bounds: None,
        q: 0,
        swaps: 0,
        execution: None,
        stats: RunStats::default(),
        tried: Vec::new(),
    };
    // a bag of width at most k has at most p vertices
    let Some(t) = (if p == 0 {
        None
    } else {
        exact_treewidth(h, p - 1, budget)?
    }) else {
        return Ok((None, trace));
    };
    let tw = t.treewidth();
    trace.treewidth = Some(tw);
    let eopts = EnumerationOptions {
        include_empty: false,
        budget: *budget,
    };
    trace.bounds = Some(bounds::bounds(h, f, k, tw, &eopts));
    let (values, source) = candidate_values(h, f, k, budget)?;
    trace.values = values.clone();
    trace.value_source = source;
    if values.is_empty() {
        return Ok((None, trace));
    }

    // the tuple of a reduced optimal forest after dealternation fixes q
    let w = WidthCache::new(f, h);
    let (_, best) = exact_fwidth(h, f, budget)?;
    let cfg = DealternationConfig {
        probe_threshold: None,
        enumeration: eopts,
    };
    let dealt = dealternate(h, &t, &best.reduce(h), &w, &cfg)?;
    trace.swaps = dealt.swaps.len();
    let (q, colouring) = ConflictGraph::new(&t, &dealt.forest).chromatic_number()?;
    trace.q = q;
    let tuple = witness_tuple(h, &t, &dealt.forest, &colouring)?;
    let witness = tuple.witness(h, q)?;

    let execution = match opts.execution {
        Execution::Auto
            if h.num_vertices() <= budget.exhaustive_universe && q <= budget.exhaustive_colours =>
        {
            Execution::Exhaustive
        }
        Execution::Auto => Execution::Guided,
        e => e,
    };
    if execution == Execution::Exhaustive {
        cap(
            "vertices for an exhaustive run",
            h.num_vertices(),
            budget.exhaustive_universe,
        )?;
        cap(
            "colours for an exhaustive run",
            q,
            budget.exhaustive_colours,
        )?;
    }
    trace.execution = Some(execution);
    let m = encode_td(h, &t)?;
    let tr = build_forest_transduction(q)?;
    let mode = if execution == Execution::Guided {
        Mode::Guided(&witness)
    } else {
        Mode::Exhaustive
    };
    let (outputs, stats) = apply(&tr, &m, mode, budget)?;
    trace.stats = stats;
    let sig = tr.output_signature().clone();
    for a in &values {
        // Tr*_a = Tr followed by the width filter for a
        let (filter, fam) = width_filter(h, f, a, budget)?;
        let mut kept: Vec<Structure> = Vec::new();
        for out in &outputs {
            kept.extend(apply_elementary(&filter, &sig, out, budget)?);
        }
        trace.tried.push((a.clone(), fam, kept.len()));
        let Some(first) = kept.first() else { continue };
        let forest = decode_forest(first)?;
        forest.validate(h)?;
        let value = forest.fwidth(h, &w);
        if value != *a {
            return Err(Error::Invariant(format!(
                "pipeline.first_value: forest accepted at {} has width {}",
                rational::to_string(a),
                rational::to_string(&value)
            )));
        }
        return Ok((
            Some(Accepted {
                value,
                td: forest.induced_td(h),
                forest,
            }),
            trace,
        ));
    }
    Ok((None, trace))
}

/// Decides whether `h` has `f`-width at most `k`, returning an optimal
/// decomposition when it does.
pub fn width_check(
    h: &Hypergraph,
    f: &dyn WidthFunction,
    k: &Rational,
    opts: &CheckOptions,
) -> Result<WidthReport> {
    if h.num_vertices() == 0 {
        return Err(Error::Precondition("the hypergraph has no vertices".into()));
    }
    let mut report = WidthReport {
        mode: opts.mode,
        function: f.name().into(),
        k: k.clone(),
        accepted: None,
        trace: None,
        oracle_value: None,
    };
    if opts.mode != CheckMode::Pipeline {
        let (w, acc) = oracle(h, f, k, &opts.budget)?;
        report.oracle_value = Some(w);
        report.accepted = acc;
    }
    if opts.mode != CheckMode::Oracle {
        let (acc, trace) = pipeline(h, f, k, opts)?;
        report.trace = Some(trace);
        if opts.mode == CheckMode::Both {
            let pv = acc.as_ref().map(|a| &a.value);
            let ov = report.accepted.as_ref().map(|a| &a.value);
            if pv != ov {
                let show = |v: Option<&Rational>| v.map_or("reject".into(), rational::to_string);
                return Err(Error::Invariant(format!(
                    "pipeline.oracle: pipeline gives {}, oracle gives {}",
                    show(pv),
                    show(ov)
                )));
            }
        }
        report.accepted = acc;
    }
    if let Some(a) = &report.accepted {
        a.td.validate(h)?;
        let w = WidthCache::new(f, h);
        if a.td.fwidth(&w) != a.value {
            return Err(Error::Invariant(
                "pipeline.returned_width: decomposition width differs from the value".into(),
            ));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;
    use crate::rational::{int, ratio};
    use crate::widths::Width;
    use proptest::prelude::*;

    fn opts(mode: CheckMode, execution: Execution) -> CheckOptions {
        CheckOptions {
            mode,
            execution,
            budget: Budget::default(),
        }
    }

    /// Treewidth by trying every elimination order.
    fn tw_brute(h: &Hypergraph) -> usize {
        let n = h.num_vertices();
        let mut best = usize::MAX;
        let mut order: Vec<usize> = (0..n).collect();
        permute(&mut order, 0, &mut |o| {
            let w = EliminationForest::from_order(h, o)
                .unwrap()
                .induced_td(h)
                .treewidth();
            best = best.min(w);
        });
        best
    }

    fn permute(xs: &mut Vec<usize>, i: usize, visit: &mut dyn FnMut(&[usize])) {
        if i == xs.len() {
            visit(xs);
            return;
        }
        for j in i..xs.len() {
            xs.swap(i, j);
            permute(xs, i + 1, visit);
            xs.swap(i, j);
        }
    }

    #[test]
    fn treewidth_examples() {
        let b = Budget::default();
        let t = exact_treewidth(&k3(), 2, &b).unwrap().unwrap();
        assert_eq!(t.treewidth(), 2);
        t.validate(&k3()).unwrap();
        assert!(exact_treewidth(&k3(), 1, &b).unwrap().is_none());
        let t = exact_treewidth(&h0(), 2, &b).unwrap().unwrap();
        t.validate(&h0()).unwrap();
        assert!(t.treewidth() <= 2);
        assert_eq!(treewidth(&cycle(4), &b).unwrap().0, 2);
        assert_eq!(treewidth(&path(4), &b).unwrap().0, 1);
    }

    #[test]
    fn treewidth_cap() {
        let b = Budget {
            treewidth_vertices: 3,
            ..Budget::default()
        };
        assert!(matches!(
            exact_treewidth(&cycle(4), 2, &b),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn oracle_examples() {
        let o = opts(CheckMode::Oracle, Execution::Guided);
        let v = |h: &Hypergraph, f: Width, k: Rational| {
            width_check(h, &f, &k, &o)
                .unwrap()
                .accepted
                .map(|a| a.value)
        };
        assert_eq!(v(&h0(), Width::Ghw, int(1)), Some(int(1)));
        assert_eq!(v(&k3(), Width::Ghw, int(1)), None);
        assert_eq!(v(&k3(), Width::Ghw, int(2)), Some(int(2)));
        assert_eq!(v(&k3(), Width::Fhw, ratio(3, 2)), Some(ratio(3, 2)));
        let r = width_check(&k3(), &Width::Ghw, &int(2), &o).unwrap();
        assert_eq!(r.result_line(), "result accept value=2/1 mode=oracle");
    }

    #[test]
    fn pipeline_matches_oracle_on_examples() {
        for (h, f, k) in [
            (h0(), Width::Ghw, int(1)),
            (k3(), Width::Ghw, int(1)),
            (k3(), Width::Ghw, int(2)),
            (k3(), Width::Fhw, ratio(3, 2)),
            (cycle(4), Width::Tw, int(2)),
        ] {
            let r = width_check(&h, &f, &k, &opts(CheckMode::Both, Execution::Guided)).unwrap();
            let t = r.trace.unwrap();
            if r.accepted.is_some() {
                assert_eq!(t.execution, Some(Execution::Guided));
                assert!(t.q >= 1);
            }
        }
    }

    #[test]
    fn pipeline_rejects_on_treewidth() {
        // tw(K4) = 3 but beta(1, 2) = 2
        let k4 = Hypergraph::from_edge_lists(&[[1u32, 2], [1, 3], [1, 4], [2, 3], [2, 4], [3, 4]])
            .unwrap();
        let r = width_check(
            &k4,
            &Width::Ghw,
            &int(1),
            &opts(CheckMode::Pipeline, Execution::Guided),
        )
        .unwrap();
        assert!(r.accepted.is_none());
        assert_eq!(r.result_line(), "result reject mode=pipeline");
        assert_eq!(r.trace.unwrap().treewidth, None);
    }

    #[test]
    fn exhaustive_pipeline_on_small_inputs() {
        for (h, f, k) in [(path(3), Width::Ghw, int(1)), (k3(), Width::Ghw, int(2))] {
            let r = width_check(&h, &f, &k, &opts(CheckMode::Both, Execution::Exhaustive)).unwrap();
            assert_eq!(r.trace.unwrap().execution, Some(Execution::Exhaustive));
            assert!(r.accepted.is_some());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn treewidth_matches_brute_force((h, _) in arb_instance(6)) {
            let b = Budget::default();
            let (tw, t) = treewidth(&h, &b).unwrap();
            t.validate(&h).unwrap();
            prop_assert_eq!(t.treewidth(), tw);
            prop_assert_eq!(tw, tw_brute(&h));
        }

        #[test]
        fn pipeline_agrees_with_oracle((h, _) in arb_instance(5), f in 0usize..3, k2 in 1i64..7) {
            let f = Width::ALL[f];
            let k = ratio(k2, 2);
            // Both mode fails on any disagreement
            let r = width_check(&h, &f, &k, &opts(CheckMode::Both, Execution::Guided)).unwrap();
            if let Some(a) = r.accepted {
                prop_assert!(a.value <= k);
                a.td.validate(&h).unwrap();
            }
        }
    }
}
