//! MSO transductions: elementary steps, sequential composition, and the
//! transduction that guesses an elimination forest on top of a tree
//! decomposition, together with the tuple that drives it.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::cell::{Ref, RefCell};
use core::fmt;

use crate::bitset::{BitSet, NodeSet, VertexSet};
use crate::budget::Budget;
use crate::decomp::{EliminationForest, TreeDecomposition};
use crate::error::{Error, Result};
use crate::hypergraph::Hypergraph;
use crate::mso::build::{phi_star, phi_star_for_family, PhiStar, PhiVariant};
use crate::mso::structure::TAU_TD;
use crate::mso::*;
use crate::rational::Rational;
use crate::stains::{mn, stain, ConflictGraph};
use crate::widths::WidthFunction;

pub type Signature = BTreeMap<String, usize>;

pub fn signature(rels: &[(&str, usize)]) -> Signature {
    rels.iter().map(|&(n, a)| (n.to_string(), a)).collect()
}

/// One output relation of an interpretation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Definition {
    pub relation: String,
    pub vars: Vec<String>,
    pub formula: Formula,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    /// Adds a unary relation, guessed.
    Colouring(String),
    /// Replaces all relations; the universe is kept.
    Interpretation(Vec<Definition>),
    Filtering(Formula),
    /// Keeps the elements satisfying the formula in the named variable.
    UniverseRestriction(String, Formula),
    /// Never accepted by `Transduction::new`.
    Copying,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Elementary {
    pub label: String,
    pub step: Step,
}

impl Elementary {
    pub fn new(label: &str, step: Step) -> Self {
        Elementary {
            label: label.into(),
            step,
        }
    }

    /// A colouring counts one; every other step counts its formulas.
    pub fn size(&self) -> usize {
        match &self.step {
            Step::Colouring(_) => 1,
            Step::Interpretation(ds) => ds.iter().map(|d| d.formula.size()).sum(),
            Step::Filtering(f) | Step::UniverseRestriction(_, f) => f.size(),
            Step::Copying => 0,
        }
    }

    pub fn output_signature(&self, input: &Signature) -> Result<Signature> {
        let check = |f: &Formula, free: &[String]| -> Result<()> {
            for (r, a) in f.relations() {
                match input.get(&r) {
                    Some(&b) if a == b => {}
                    Some(&b) => {
                        return Err(Error::Formula(format!(
                            "{}: relation {r} has arity {b}, used with {a}",
                            self.label
                        )))
                    }
                    None => {
                        return Err(Error::Formula(format!(
                            "{}: relation {r} is not in the input signature",
                            self.label
                        )))
                    }
                }
            }
            if f.uses_decomposition_atoms()
                && !TAU_TD.iter().all(|&(n, a)| input.get(n) == Some(&a))
            {
                return Err(Error::Formula(format!(
                    "{}: decomposition atoms need the tree decomposition signature",
                    self.label
                )));
            }
            for (v, s) in f.free_variables() {
                if s == Sort::Set || !free.contains(&v) {
                    return Err(Error::Formula(format!("{}: free variable {v}", self.label)));
                }
            }
            Ok(())
        };
        match &self.step {
            Step::Colouring(name) => {
                if input.contains_key(name) {
                    return Err(Error::Formula(format!(
                        "{}: relation {name} already exists",
                        self.label
                    )));
                }
                let mut out = input.clone();
                out.insert(name.clone(), 1);
                Ok(out)
            }
            Step::Interpretation(ds) => {
                let mut out = Signature::new();
                for d in ds {
                    let distinct: BTreeSet<&String> = d.vars.iter().collect();
                    if distinct.len() != d.vars.len() {
                        return Err(Error::Formula(format!(
                            "{}: repeated variable in {}",
                            self.label, d.relation
                        )));
                    }
                    check(&d.formula, &d.vars)?;
                    if out.insert(d.relation.clone(), d.vars.len()).is_some() {
                        return Err(Error::Formula(format!(
                            "{}: {} defined twice",
                            self.label, d.relation
                        )));
                    }
                }
                Ok(out)
            }
            Step::Filtering(f) => {
                check(f, &[])?;
                Ok(input.clone())
            }
            Step::UniverseRestriction(x, f) => {
                check(f, core::slice::from_ref(x))?;
                Ok(input.clone())
            }
            Step::Copying => Err(Error::Formula(format!(
                "{}: copying transductions are not supported",
                self.label
            ))),
        }
    }
}

/// Elementary steps applied left to right.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transduction {
    pub input: Signature,
    pub steps: Vec<Elementary>,
    signatures: Vec<Signature>,
}

impl Transduction {
    pub fn new(input: Signature, steps: Vec<Elementary>) -> Result<Self> {
        let mut signatures = vec![input.clone()];
        for s in &steps {
            let next = s.output_signature(signatures.last().unwrap())?;
            signatures.push(next);
        }
        Ok(Transduction {
            input,
            steps,
            signatures,
        })
    }

    pub fn size(&self) -> usize {
        self.steps.iter().map(Elementary::size).sum()
    }

    pub fn output_signature(&self) -> &Signature {
        self.signatures.last().unwrap()
    }

    /// Signature before step `i`.
    pub fn signature_before(&self, i: usize) -> &Signature {
        &self.signatures[i]
    }

    pub fn then(&self, step: Elementary) -> Result<Self> {
        let mut steps = self.steps.clone();
        steps.push(step);
        Transduction::new(self.input.clone(), steps)
    }

    /// `self` followed by `other`.
    pub fn compose(&self, other: &Transduction) -> Result<Self> {
        if &other.input != self.output_signature() {
            return Err(Error::Formula(
                "composed transductions have mismatched signatures".into(),
            ));
        }
        let mut steps = self.steps.clone();
        steps.extend(other.steps.iter().cloned());
        Transduction::new(self.input.clone(), steps)
    }

    pub fn colouring_names(&self) -> Vec<&str> {
        self.steps
            .iter()
            .filter_map(|s| match &s.step {
                Step::Colouring(n) => Some(n.as_str()),
                _ => None,
            })
            .collect()
    }
}

/// `(transduction (signature (Vertex 1) ..) (colour c1 C1) (filter c* φ) ..)`
impl fmt::Display for Transduction {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(out, "(transduction (signature")?;
        for (n, a) in &self.input {
            write!(out, " ({n} {a})")?;
        }
        write!(out, ")")?;
        for s in &self.steps {
            write!(out, "\n  ")?;
            match &s.step {
                Step::Colouring(n) => write!(out, "(colour {} {n})", s.label)?,
                Step::Filtering(f) => write!(out, "(filter {} {f})", s.label)?,
                Step::UniverseRestriction(x, f) => write!(out, "(restrict {} {x} {f})", s.label)?,
                Step::Interpretation(ds) => {
                    write!(out, "(interpret {}", s.label)?;
                    for d in ds {
                        write!(
                            out,
                            " (define {} ({}) {})",
                            d.relation,
                            d.vars.join(" "),
                            d.formula
                        )?;
                    }
                    write!(out, ")")?;
                }
                Step::Copying => write!(out, "(copy {})", s.label)?,
            }
        }
        write!(out, ")")
    }
}

fn check_input(m: &Structure, sig: &Signature) -> Result<()> {
    for (n, &a) in sig {
        match m.relation(n) {
            Some(r) if r.arity == a => {}
            _ => {
                return Err(Error::Formula(format!(
                    "input structure lacks relation {n}/{a}"
                )))
            }
        }
    }
    Ok(())
}

/// Applies one non-colouring step.
fn apply_deterministic(
    e: &Elementary,
    m: &Structure,
    budget: &Budget,
) -> Result<Option<Structure>> {
    let ev = Evaluator::new(m, budget);
    match &e.step {
        Step::Filtering(f) => Ok(if ev.evaluate(f, &Assignment::new())? {
            Some(m.clone())
        } else {
            None
        }),
        Step::UniverseRestriction(x, f) => {
            Ok(Some(m.restrict(ev.define(f, x, &Assignment::new())?)))
        }
        Step::Interpretation(ds) => {
            let mut out = Structure::with_labels(m.labels().to_vec())?;
            for d in ds {
                out.declare(&d.relation, d.vars.len())?;
                for t in ev.tuples(&d.formula, &d.vars)? {
                    out.insert(&d.relation, t)?;
                }
            }
            Ok(Some(out))
        }
        Step::Colouring(_) | Step::Copying => unreachable!(),
    }
}

/// All outputs of one elementary step.
pub fn apply_elementary(
    e: &Elementary,
    input: &Signature,
    m: &Structure,
    budget: &Budget,
) -> Result<Vec<Structure>> {
    e.output_signature(input)?;
    check_input(m, input)?;
    match &e.step {
        Step::Colouring(name) => {
            crate::error::cap("universe for a colouring", m.size(), budget.mso_universe)?;
            Ok(m.universe()
                .subsets()
                .map(|s| {
                    let mut c = m.clone();
                    c.set_unary(name, s).unwrap();
                    c
                })
                .collect())
        }
        _ => Ok(apply_deterministic(e, m, budget)?.into_iter().collect()),
    }
}

/// How colourings are chosen.
#[derive(Clone, Copy, Debug)]
pub enum Mode<'w> {
    /// Every subset; outputs are deduplicated.
    Exhaustive,
    /// The given relation for each colouring, by name.
    Guided(&'w BTreeMap<String, BitSet>),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunStats {
    /// Colouring choices visited.
    pub branches: u64,
    /// Branches cut by an early check.
    pub pruned: u64,
}

/// A maximal run of colourings and filters. Such steps commute, so the
/// colourings are chosen in an order that lets filter conjuncts cut
/// early, and conjuncts are read three-valued while some colourings are
/// still open. Colourings that share no conjunct, even indirectly, are
/// solved separately and their solutions combined afterwards.
struct Segment<'t> {
    end: usize,
    /// Colourings in the order they are chosen.
    order: Vec<&'t str>,
    /// Per chosen colouring: unary relations that must contain it.
    domain: Vec<Vec<&'t str>>,
    /// Filter conjuncts with the positions in `order` of the colourings they read.
    checks: Vec<(&'t Formula, Vec<usize>)>,
    /// Positions in `order` linked through shared conjuncts, ascending.
    clusters: Vec<Vec<usize>>,
}

fn segment(tr: &Transduction, start: usize) -> Segment<'_> {
    let end = (start..tr.steps.len())
        .find(|&j| !matches!(tr.steps[j].step, Step::Colouring(_) | Step::Filtering(_)))
        .unwrap_or(tr.steps.len());
    let names: Vec<&str> = tr.steps[start..end]
        .iter()
        .filter_map(|s| match &s.step {
            Step::Colouring(n) => Some(n.as_str()),
            _ => None,
        })
        .collect();
    let conjuncts: Vec<(&Formula, BTreeSet<&str>)> = tr.steps[start..end]
        .iter()
        .filter_map(|s| match &s.step {
            Step::Filtering(f) => Some(f.conjuncts()),
            _ => None,
        })
        .flatten()
        .map(|c| {
            let rels = c.relations();
            let used = names
                .iter()
                .copied()
                .filter(|n| rels.iter().any(|(r, _)| r == n))
                .collect();
            (c, used)
        })
        .collect();
    // first colouring, then whichever shares a conjunct with those already chosen
    let mut order: Vec<&str> = Vec::new();
    while order.len() < names.len() {
        let open = || names.iter().copied().filter(|n| !order.contains(n));
        let linked = open().find(|n| {
            conjuncts
                .iter()
                .any(|(_, u)| u.contains(n) && order.iter().any(|o| u.contains(o)))
        });
        let next = linked.or_else(|| open().next()).unwrap();
        order.push(next);
    }
    let base = tr.signature_before(start);
    let mut domain = vec![Vec::new(); order.len()];
    for (c, _) in &conjuncts {
        let Some((r, p)) = guard(c) else { continue };
        let Some(i) = order.iter().position(|n| *n == r) else {
            continue;
        };
        let ok = match order.iter().position(|n| *n == p) {
            Some(j) => j < i,
            None => base.get(p) == Some(&1),
        };
        if ok && !domain[i].contains(&p) {
            domain[i].push(p);
        }
    }
    let checks: Vec<(&Formula, Vec<usize>)> = conjuncts
        .into_iter()
        .map(|(c, u)| {
            (
                c,
                u.iter()
                    .map(|n| order.iter().position(|o| o == n).unwrap())
                    .collect(),
            )
        })
        .collect();
    let mut cluster: Vec<usize> = (0..order.len()).collect();
    let mut merged = true;
    while merged {
        merged = false;
        for (_, uses) in &checks {
            let uses: &Vec<usize> = uses;
            let low = uses.iter().map(|&u| cluster[u]).min().unwrap_or(0);
            for &u in uses {
                let c = cluster[u];
                if c != low {
                    cluster
                        .iter_mut()
                        .filter(|x| **x == c)
                        .for_each(|x| *x = low);
                    merged = true;
                }
            }
        }
    }
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in 0..order.len() {
        match clusters.iter_mut().find(|c| cluster[c[0]] == cluster[i]) {
            Some(c) => c.push(i),
            None => clusters.push(vec![i]),
        }
    }
    Segment {
        end,
        order,
        domain,
        checks,
        clusters,
    }
}

/// `∀x (R(x) → P(x))` with unary `R`, `P`.
fn guard(f: &Formula) -> Option<(&str, &str)> {
    fn strip(mut f: &Formula) -> &Formula {
        while let Formula::Tagged(_, g) = f {
            f = g;
        }
        f
    }
    let Formula::Forall1(x, body) = strip(f) else {
        return None;
    };
    let Formula::Implies(a, b) = strip(body) else {
        return None;
    };
    match (strip(a), strip(b)) {
        (Formula::Rel(r, ra), Formula::Rel(p, pa))
            if ra.len() == 1 && pa.len() == 1 && &ra[0] == x && &pa[0] == x =>
        {
            Some((r.as_str(), p.as_str()))
        }
        _ => None,
    }
}

/// Per step: its segment if one starts there, and its formulas compiled
/// on first use.
struct Prepared<'t> {
    tr: &'t Transduction,
    segments: Vec<Option<Segment<'t>>>,
    compiled: Vec<RefCell<Option<Vec<Compiled>>>>,
}

impl<'t> Prepared<'t> {
    fn new(tr: &'t Transduction) -> Self {
        let mut segments = Vec::new();
        let mut i = 0;
        while i < tr.steps.len() {
            if let Step::Colouring(_) | Step::Filtering(_) = tr.steps[i].step {
                let seg = segment(tr, i);
                let end = seg.end;
                segments.push(Some(seg));
                segments.resize_with(end, || None);
                i = end;
            } else {
                segments.push(None);
                i += 1;
            }
        }
        let compiled = (0..tr.steps.len()).map(|_| RefCell::new(None)).collect();
        Prepared {
            tr,
            segments,
            compiled,
        }
    }

    fn compiled(&self, i: usize, ev: &Evaluator<'_>) -> Result<Ref<'_, Vec<Compiled>>> {
        let cell = &self.compiled[i];
        let stale = match &*cell.borrow() {
            None => true,
            Some(cs) => cs.first().is_some_and(|c| !ev.fits(c)),
        };
        if stale {
            let cs = match (&self.segments[i], &self.tr.steps[i].step) {
                (Some(seg), _) => seg
                    .checks
                    .iter()
                    .map(|(c, _)| ev.compile_sentence(c))
                    .collect::<Result<Vec<_>>>()?,
                (None, Step::UniverseRestriction(x, f)) => {
                    vec![ev.compile_tuples(f, core::slice::from_ref(x))?]
                }
                (None, Step::Interpretation(ds)) => ds
                    .iter()
                    .map(|d| ev.compile_tuples(&d.formula, &d.vars))
                    .collect::<Result<Vec<_>>>()?,
                _ => Vec::new(),
            };
            *cell.borrow_mut() = Some(cs);
        }
        Ok(Ref::map(cell.borrow(), |c| c.as_ref().unwrap()))
    }
}

struct Run<'a> {
    prep: &'a Prepared<'a>,
    mode: Mode<'a>,
    budget: &'a Budget,
    stats: RunStats,
    out: BTreeSet<Structure>,
}

impl Run<'_> {
    fn go(&mut self, i: usize, m: Structure) -> Result<()> {
        let prep = self.prep;
        if i == prep.tr.steps.len() {
            self.out.insert(m);
            return Ok(());
        }
        if let Some(seg) = &prep.segments[i] {
            let mut m = m;
            for n in &seg.order {
                m.set_unary(n, BitSet::EMPTY)?;
            }
            if !self.check(i, &[], &m)? {
                return Ok(());
            }
            let mut solutions = Vec::new();
            for c in &seg.clusters {
                let mut found = Vec::new();
                self.solve(i, c, 0, &mut m, &mut found)?;
                if found.is_empty() {
                    return Ok(());
                }
                solutions.push(found);
            }
            return self.combine(i, &solutions, 0, &mut m);
        }
        let ev = Evaluator::new(&m, self.budget);
        let cs = prep.compiled(i, &ev)?;
        let next = match &prep.tr.steps[i].step {
            Step::UniverseRestriction(..) => {
                m.restrict(ev.run_tuples(&cs[0])?.into_iter().map(|t| t[0]).collect())
            }
            Step::Interpretation(ds) => {
                let mut out = Structure::with_labels(m.labels().to_vec())?;
                for (d, c) in ds.iter().zip(cs.iter()) {
                    out.declare(&d.relation, d.vars.len())?;
                    for t in ev.run_tuples(c)? {
                        out.insert(&d.relation, t)?;
                    }
                }
                out
            }
            _ => unreachable!(),
        };
        drop(cs);
        self.go(i + 1, next)
    }

    /// Conjuncts of the segment at `at` that read the last colouring of
    /// `chosen` (or no colouring when it is empty), with every colouring
    /// outside `chosen` still open.
    fn check(&self, at: usize, chosen: &[usize], m: &Structure) -> Result<bool> {
        let seg = self.prep.segments[at].as_ref().unwrap();
        let open: Vec<&str> = (0..seg.order.len())
            .filter(|i| !chosen.contains(i))
            .map(|i| seg.order[i])
            .collect();
        let ev = Evaluator::with_unknown(m, self.budget, &open);
        let cs = self.prep.compiled(at, &ev)?;
        for ((_, uses), c) in seg.checks.iter().zip(cs.iter()) {
            let relevant = match chosen.last() {
                Some(d) => uses.contains(d),
                None => uses.is_empty(),
            };
            if !relevant {
                continue;
            }
            match ev.run(c)? {
                Some(true) => {}
                Some(false) => return Ok(false),
                None if uses.iter().all(|u| chosen.contains(u)) => {
                    return Err(Error::Invariant(
                        "filter left undecided with every colouring chosen".into(),
                    ));
                }
                None => {}
            }
        }
        Ok(true)
    }

    /// Every assignment of the colourings in `cluster` passing its conjuncts.
    fn solve(
        &mut self,
        at: usize,
        cluster: &[usize],
        j: usize,
        m: &mut Structure,
        found: &mut Vec<Vec<BitSet>>,
    ) -> Result<()> {
        let seg = self.prep.segments[at].as_ref().unwrap();
        if j == cluster.len() {
            found.push(cluster.iter().map(|&d| m.unary(seg.order[d])).collect());
            return Ok(());
        }
        let d = cluster[j];
        let name = seg.order[d];
        let choices: Vec<BitSet> = match self.mode {
            Mode::Guided(w) => {
                let s = *w
                    .get(name)
                    .ok_or_else(|| Error::Formula(format!("witness has no relation {name}")))?;
                if !s.is_subset(m.universe()) {
                    return Err(Error::Formula(format!(
                        "witness relation {name} leaves the universe"
                    )));
                }
                vec![s]
            }
            Mode::Exhaustive => {
                crate::error::cap(
                    "universe for a colouring",
                    m.size(),
                    self.budget.mso_universe,
                )?;
                seg.domain[d]
                    .iter()
                    .fold(m.universe(), |acc, p| acc & m.unary(p))
                    .subsets()
                    .collect()
            }
        };
        for s in choices {
            self.stats.branches += 1;
            if self.stats.branches > self.budget.exhaustive_branches {
                return Err(Error::CapExceeded {
                    what: "transduction branches",
                    size: self.stats.branches as usize,
                    cap: self.budget.exhaustive_branches as usize,
                });
            }
            m.set_unary(name, s)?;
            if !self.check(at, &cluster[..=j], m)? {
                self.stats.pruned += 1;
                continue;
            }
            self.solve(at, cluster, j + 1, m, found)?;
        }
        Ok(())
    }

    fn combine(
        &mut self,
        at: usize,
        solutions: &[Vec<Vec<BitSet>>],
        c: usize,
        m: &mut Structure,
    ) -> Result<()> {
        let seg = self.prep.segments[at].as_ref().unwrap();
        if c == solutions.len() {
            return self.go(seg.end, m.clone());
        }
        for sol in &solutions[c] {
            for (&d, &s) in seg.clusters[c].iter().zip(sol) {
                m.set_unary(seg.order[d], s)?;
            }
            self.combine(at, solutions, c + 1, m)?;
        }
        Ok(())
    }
}

/// All outputs of `tr` on `m` in structure order.
pub fn apply(
    tr: &Transduction,
    m: &Structure,
    mode: Mode<'_>,
    budget: &Budget,
) -> Result<(Vec<Structure>, RunStats)> {
    check_input(m, &tr.input)?;
    if let Mode::Guided(w) = mode {
        let names: BTreeSet<&str> = tr.colouring_names().into_iter().collect();
        if let Some(extra) = w.keys().find(|k| !names.contains(k.as_str())) {
            return Err(Error::Formula(format!(
                "witness relation {extra} is not coloured by the transduction"
            )));
        }
    }
    let prep = Prepared::new(tr);
    let mut run = Run {
        prep: &prep,
        mode,
        budget,
        stats: RunStats::default(),
        out: BTreeSet::new(),
    };
    run.go(0, m.clone())?;
    Ok((run.out.into_iter().collect(), run.stats))
}

pub fn c_name(i: usize) -> String {
    format!("C{i}")
}

pub fn d_name(i: usize) -> String {
    format!("D{i}")
}

pub fn k_names(i: usize) -> (String, String) {
    (format!("K0_{i}"), format!("K1_{i}"))
}

/// `r1 .. rk` weakly partition `domain` (disjoint, covering, possibly
/// empty). Disjointness goes through the prefix unions `S_i`, so the
/// formula grows linearly with `k`.
pub fn weak_partition(rels: &[String], domain: &str) -> Formula {
    let mut cs: Vec<Formula> = rels
        .iter()
        .map(|r| forall("x", implies(rel(r, &["x"]), rel(domain, &["x"]))))
        .collect();
    let s = |i: usize| format!("S{i}");
    let mut inner = forall(
        "x",
        implies(rel(domain, &["x"]), member("x", &s(rels.len()))),
    );
    for i in (1..=rels.len()).rev() {
        let r = &rels[i - 1];
        let def = if i == 1 {
            forall("x", iff(member("x", &s(1)), rel(r, &["x"])))
        } else {
            forall(
                "x",
                iff(
                    member("x", &s(i)),
                    or(vec![member("x", &s(i - 1)), rel(r, &["x"])]),
                ),
            )
        };
        let mut parts = vec![def];
        if i > 1 {
            parts.push(forall(
                "x",
                not(and(vec![member("x", &s(i - 1)), rel(r, &["x"])])),
            ));
        }
        parts.push(inner);
        inner = exists_set(&s(i), and(parts));
    }
    if rels.is_empty() {
        inner = forall("x", not(rel(domain, &["x"])));
    }
    cs.push(tag("Partition", inner));
    tag("WeakPartition", and(cs))
}

/// `p` is the parent of `x` in the decomposition tree.
pub fn tree_parent(p: &str, x: &str) -> Formula {
    tag(
        "Parent",
        and(vec![
            rel("Node", &[p]),
            rel("Descendant", &[p, x]),
            neq(p, x),
            forall(
                "z",
                implies(
                    and(vec![
                        rel("Node", &["z"]),
                        rel("Descendant", &[p, "z"]),
                        rel("Descendant", &["z", x]),
                    ]),
                    or(vec![eq("z", p), eq("z", x)]),
                ),
            ),
        ]),
    )
}

/// Binds set variables to unary relations: `∃X (∀x (x ∈ X ↔ R(x)) ∧ body)`.
fn with_sets(binds: &[(&str, &str)], body: Formula) -> Formula {
    binds.iter().rev().fold(body, |acc, &(set, r)| {
        exists_set(
            set,
            and(vec![
                forall("x", iff(member("x", set), rel(r, &["x"]))),
                acc,
            ]),
        )
    })
}

/// `F(M)` is an elimination forest of `H(M)`.
pub fn forest_filter() -> Formula {
    tag(
        "IsEliminationForest",
        and(vec![
            forall(
                "x",
                forall(
                    "y",
                    implies(
                        rel("Child", &["x", "y"]),
                        and(vec![rel("Vertex", &["x"]), rel("Vertex", &["y"])]),
                    ),
                ),
            ),
            forall(
                "y",
                forall(
                    "a",
                    forall(
                        "b",
                        implies(
                            and(vec![rel("Child", &["a", "y"]), rel("Child", &["b", "y"])]),
                            eq("a", "b"),
                        ),
                    ),
                ),
            ),
            forall(
                "x",
                forall(
                    "y",
                    implies(rel("Child", &["x", "y"]), not(reach("Child", "y", "x"))),
                ),
            ),
            forall(
                "e",
                implies(
                    rel("Edge", &["e"]),
                    forall(
                        "v",
                        forall(
                            "w",
                            implies(
                                and(vec![
                                    rel("Adjacent", &["v", "e"]),
                                    rel("Adjacent", &["w", "e"]),
                                ]),
                                or(vec![reach("Child", "v", "w"), reach("Child", "w", "v")]),
                            ),
                        ),
                    ),
                ),
            ),
        ]),
    )
}

/// The forest-guessing transduction for `q` colours: colourings `C1..Cq`,
/// their filter, `D0..Dq`, their filter, `K0_i, K1_i`, their filter, the
/// interpretation into the forest signature and the forest filter.
pub fn build_forest_transduction(q: usize) -> Result<Transduction> {
    if q == 0 {
        return Err(Error::Precondition(
            "the forest transduction needs q >= 1".into(),
        ));
    }
    let cs: Vec<String> = (1..=q).map(c_name).collect();
    let ds: Vec<String> = (0..=q).map(d_name).collect();
    let mut steps = Vec::new();
    for c in &cs {
        steps.push(Elementary::new(
            &c.to_lowercase(),
            Step::Colouring(c.clone()),
        ));
    }
    steps.push(Elementary::new(
        "c*",
        Step::Filtering(weak_partition(&cs, "Vertex")),
    ));
    for d in &ds {
        steps.push(Elementary::new(
            &d.to_lowercase(),
            Step::Colouring(d.clone()),
        ));
    }
    steps.push(Elementary::new(
        "d*",
        Step::Filtering(weak_partition(&ds, "Vertex")),
    ));
    let mut kconds = Vec::new();
    for i in 1..=q {
        let (k0, k1) = k_names(i);
        steps.push(Elementary::new(
            &format!("k0_{i}"),
            Step::Colouring(k0.clone()),
        ));
        steps.push(Elementary::new(
            &format!("k1_{i}"),
            Step::Colouring(k1.clone()),
        ));
        kconds.push(forall("x", implies(rel(&k0, &["x"]), rel("Node", &["x"]))));
        kconds.push(forall("x", implies(rel(&k1, &["x"]), rel(&k0, &["x"]))));
        kconds.push(forall(
            "x",
            implies(
                rel(&k1, &["x"]),
                exists("p", and(vec![tree_parent("p", "x"), rel(&k0, &["p"])])),
            ),
        ));
        kconds.push(with_sets(
            &[("C", &cs[i - 1]), ("A", &k0), ("B", &k1)],
            Formula::MnBijection("C".into(), "A".into(), "B".into()),
        ));
    }
    steps.push(Elementary::new(
        "k*",
        Step::Filtering(tag("Components", and(kconds))),
    ));
    let mut child = vec![
        rel("Vertex", &["x"]),
        rel("Vertex", &["y"]),
        implies(rel(&ds[0], &["y"]), Formula::False),
    ];
    for i in 1..=q {
        let (k0, k1) = k_names(i);
        let comp = with_sets(
            &[("A", &k0), ("B", &k1)],
            Formula::MnComponent("A".into(), "B".into(), "x".into(), "y".into()),
        );
        child.push(implies(
            rel(&ds[i], &["y"]),
            and(vec![rel(&cs[i - 1], &["x"]), comp]),
        ));
    }
    let copy = |r: &str, vars: &[&str]| Definition {
        relation: r.into(),
        vars: vars.iter().map(|v| v.to_string()).collect(),
        formula: rel(r, vars),
    };
    steps.push(Elementary::new(
        "x0",
        Step::Interpretation(vec![
            copy("Vertex", &["x"]),
            copy("Edge", &["x"]),
            copy("Adjacent", &["x", "y"]),
            Definition {
                relation: "Child".into(),
                vars: vec!["x".into(), "y".into()],
                formula: tag("Child", and(child)),
            },
        ]),
    ));
    steps.push(Elementary::new("x1", Step::Filtering(forest_filter())));
    Transduction::new(signature(&TAU_TD), steps)
}

/// Filter keeping forests whose bags all have width at most `a`.
pub fn build_width_filter(
    f: &dyn WidthFunction,
    a: &Rational,
    r: usize,
    budget: &Budget,
) -> Result<(Elementary, PhiStar)> {
    let p = phi_star(f, a, r, budget)?;
    Ok((
        Elementary::new("width", Step::Filtering(p.formula.clone())),
        p,
    ))
}

pub fn width_filter_for_family(family: &[Hypergraph]) -> Elementary {
    Elementary::new(
        "width",
        Step::Filtering(phi_star_for_family(family, PhiVariant::default())),
    )
}

/// Colour classes `C`, child sets `D` (`D[0]` the roots, `D[i]` the
/// children of `C[i - 1]`), and per class the node set `K0` with the nodes
/// `K1` cut from their parents. `f` maps `C[i - 1]` to `D[i]`; the
/// subgraph `g(C[i - 1])` is `T[K0]` without the parent edges of `K1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransductionTuple {
    pub colours: Vec<VertexSet>,
    pub children: Vec<VertexSet>,
    pub k0: Vec<NodeSet>,
    pub k1: Vec<NodeSet>,
}

impl TransductionTuple {
    pub fn q(&self) -> usize {
        self.colours.len()
    }

    /// Component label in `g(C[i])` of each node of `K0[i]`.
    pub fn components(&self, t: &TreeDecomposition, i: usize) -> Vec<Option<usize>> {
        let (k0, k1) = (self.k0[i], self.k1[i]);
        let top = |mut x: usize| {
            while let Some(p) = t.parent(x) {
                if !k0.contains(p) || k1.contains(x) {
                    break;
                }
                x = p;
            }
            x
        };
        let mut tops = Vec::new();
        let mut out = vec![None; t.num_nodes()];
        for x in k0.iter() {
            let r = top(x);
            let j = tops.iter().position(|&y| y == r).unwrap_or_else(|| {
                tops.push(r);
                tops.len() - 1
            });
            out[x] = Some(j);
        }
        out
    }

    /// `h_C(u)`: the component of `g(C(u))` holding `mn(u)`.
    pub fn component_of(&self, t: &TreeDecomposition, u: usize) -> Option<NodeSet> {
        let i = self.colours.iter().position(|c| c.contains(u))?;
        let comp = self.components(t, i);
        let c = comp[mn(t, u)]?;
        Some((0..t.num_nodes()).filter(|&x| comp[x] == Some(c)).collect())
    }

    /// Colouring relations for a guided run over `encode_td(h, t)`.
    pub fn witness(&self, h: &Hypergraph, q: usize) -> Result<BTreeMap<String, BitSet>> {
        if q < self.q() {
            return Err(Error::Precondition(format!(
                "the tuple has {} colours, more than q = {q}",
                self.q()
            )));
        }
        let off = h.num_vertices() + h.num_edges();
        let nodes = |s: NodeSet| s.iter().map(|x| x + off).collect::<BitSet>();
        let mut w = BTreeMap::new();
        for i in 1..=q {
            w.insert(
                c_name(i),
                self.colours.get(i - 1).copied().unwrap_or_default(),
            );
            let (k0, k1) = k_names(i);
            w.insert(k0, nodes(self.k0.get(i - 1).copied().unwrap_or_default()));
            w.insert(k1, nodes(self.k1.get(i - 1).copied().unwrap_or_default()));
        }
        for i in 0..=q {
            w.insert(d_name(i), self.children.get(i).copied().unwrap_or_default());
        }
        Ok(w)
    }
}

/// The tuple of `(t, F)` for a proper colouring of the conflict graph
/// (`colouring[u]` is the colour of `u`, starting at 0).
pub fn witness_tuple(
    h: &Hypergraph,
    t: &TreeDecomposition,
    f: &EliminationForest,
    colouring: &[usize],
) -> Result<TransductionTuple> {
    t.validate(h)?;
    f.validate(h)?;
    let n = h.num_vertices();
    if colouring.len() != n {
        return Err(Error::Precondition(
            "colouring length differs from the vertex count".into(),
        ));
    }
    let cg = ConflictGraph::new(t, f);
    if let Some((u, v)) = cg
        .edges()
        .into_iter()
        .find(|&(u, v)| colouring[u] == colouring[v])
    {
        return Err(Error::Precondition(format!(
            "colouring is not proper: {} and {} share colour {}",
            u + 1,
            v + 1,
            colouring[u]
        )));
    }
    let q = colouring.iter().map(|&c| c + 1).max().unwrap_or(0);
    let colours: Vec<VertexSet> = (0..q)
        .map(|c| (0..n).filter(|&u| colouring[u] == c).collect())
        .collect();
    let mut children = vec![f.roots().into_iter().collect::<VertexSet>()];
    let mut k0 = Vec::new();
    let mut k1 = Vec::new();
    for c in &colours {
        children.push(
            c.iter()
                .flat_map(|u| f.children(u).iter().copied())
                .collect(),
        );
        let st: Vec<NodeSet> = c.iter().map(|u| stain(t, f, u)).collect();
        let all = st.iter().fold(BitSet::EMPTY, |a, &s| a | s);
        let owner = |x: usize| st.iter().position(|s| s.contains(x));
        let cut = all
            .iter()
            .filter(|&x| {
                t.parent(x)
                    .is_some_and(|p| all.contains(p) && owner(p) != owner(x))
            })
            .collect();
        k0.push(all);
        k1.push(cut);
    }
    Ok(TransductionTuple {
        colours,
        children,
        k0,
        k1,
    })
}

/// `child(u, v)` when `v` is in `f(C(u))` and `mn(v)` lies in `h_C(u)`.
pub fn reconstruct_forest(
    t: &TreeDecomposition,
    tuple: &TransductionTuple,
    n: usize,
) -> Result<EliminationForest> {
    let q = tuple.q();
    if tuple.children.len() != q + 1 || tuple.k0.len() != q || tuple.k1.len() != q {
        return Err(Error::Precondition(
            "transduction tuple has inconsistent lengths".into(),
        ));
    }
    let mut parent = vec![None; n];
    for i in 0..q {
        let comp = tuple.components(t, i);
        for u in tuple.colours[i].iter() {
            let Some(cu) = comp[mn(t, u)] else { continue };
            for v in tuple.children[i + 1].iter() {
                if v != u && comp[mn(t, v)] == Some(cu) {
                    if let Some(p) = parent[v].replace(u) {
                        return Err(Error::Precondition(format!(
                            "vertex {} gets two parents, {} and {}",
                            v + 1,
                            p + 1,
                            u + 1
                        )));
                    }
                }
            }
        }
    }
    EliminationForest::new(parent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;
    use crate::mso::structure::{decode_forest, decode_hypergraph, encode_td, TAU_EF};
    use crate::rational::int;
    use crate::widths::Width;
    use proptest::prelude::*;

    fn b() -> Budget {
        Budget::default()
    }

    #[test]
    fn colouring_and_filtering() {
        let mut m = Structure::new(2).unwrap();
        m.declare("P", 1).unwrap();
        let sig = signature(&[("P", 1)]);
        let col = Elementary::new("c", Step::Colouring("C1".into()));
        assert_eq!(apply_elementary(&col, &sig, &m, &b()).unwrap().len(), 4);
        let no = Elementary::new("f", Step::Filtering(Formula::False));
        assert!(apply_elementary(&no, &sig, &m, &b()).unwrap().is_empty());
        let yes = Transduction::new(
            sig.clone(),
            vec![Elementary::new("f", Step::Filtering(Formula::True))],
        )
        .unwrap();
        assert_eq!(
            apply(&yes, &m, Mode::Exhaustive, &b()).unwrap().0,
            [m.clone()]
        );
        let one = Structure::new(1).unwrap();
        let tr = Transduction::new(
            Signature::new(),
            vec![
                col.clone(),
                Elementary::new("f", Step::Filtering(exists("x", rel("C1", &["x"])))),
            ],
        )
        .unwrap();
        assert_eq!(apply(&tr, &one, Mode::Exhaustive, &b()).unwrap().0.len(), 1);
    }

    #[test]
    fn restriction_to_vertices() {
        let m = encode_td(&h0(), &td0()).unwrap();
        let e = Elementary::new(
            "r",
            Step::UniverseRestriction("x".into(), rel("Vertex", &["x"])),
        );
        let out = apply_elementary(&e, &signature(&TAU_TD), &m, &b()).unwrap();
        assert_eq!(out[0].size(), 5);
    }

    #[test]
    fn signature_errors() {
        let sig = signature(&TAU_EF);
        assert!(Transduction::new(sig.clone(), vec![Elementary::new("x", Step::Copying)]).is_err());
        assert!(Transduction::new(
            sig.clone(),
            vec![Elementary::new(
                "f",
                Step::Filtering(exists("x", rel("Node", &["x"])))
            )]
        )
        .is_err());
        assert!(Transduction::new(
            sig.clone(),
            vec![Elementary::new("f", Step::Filtering(rel("Vertex", &["x"])))]
        )
        .is_err());
        assert!(Transduction::new(
            sig,
            vec![Elementary::new("c", Step::Colouring("Vertex".into()))]
        )
        .is_err());
    }

    #[test]
    fn size_is_linear_in_q() {
        let s: Vec<usize> = [1, 2, 3, 4, 6, 9]
            .iter()
            .map(|&q| build_forest_transduction(q).unwrap().size())
            .collect();
        assert_eq!(s[1] - s[0], s[2] - s[1]);
        assert_eq!(s[3] - s[1], s[4] - s[3]);
        assert_eq!(s[4] - s[2], s[5] - s[4]);
        assert_eq!(
            build_forest_transduction(2)
                .unwrap()
                .colouring_names()
                .len(),
            4 * 2 + 1
        );
    }

    #[test]
    fn composition_is_associative() {
        let m = encode_td(
            &path(2),
            &forest_from_order(&path(2), &[0, 1]).induced_td(&path(2)),
        )
        .unwrap();
        // the two stains meet, so two colours are needed
        let full = build_forest_transduction(2).unwrap();
        let (head, tail) = full.steps.split_at(4);
        let a = Transduction::new(full.input.clone(), head.to_vec()).unwrap();
        let rest = Transduction::new(a.output_signature().clone(), tail.to_vec()).unwrap();
        let composed = a.compose(&rest).unwrap();
        assert_eq!(composed, full);
        let direct = apply(&full, &m, Mode::Exhaustive, &b()).unwrap().0;
        let mut staged = BTreeSet::new();
        for mid in apply(&a, &m, Mode::Exhaustive, &b()).unwrap().0 {
            staged.extend(apply(&rest, &mid, Mode::Exhaustive, &b()).unwrap().0);
        }
        assert_eq!(direct, staged.into_iter().collect::<Vec<_>>());
        assert!(!direct.is_empty());
    }

    fn pair(h: &Hypergraph, order: &[usize]) -> (TreeDecomposition, EliminationForest) {
        let f = forest_from_order(h, order).reduce(h);
        (f.induced_td(h), f)
    }

    #[test]
    fn witness_tuple_of_f0() {
        let (h, f) = (h0(), f0());
        let t = td0();
        let (chi, col) = ConflictGraph::new(&t, &f).chromatic_number().unwrap();
        assert_eq!(chi, 2);
        let tup = witness_tuple(&h, &t, &f, &col).unwrap();
        assert_eq!(tup.children[0], BitSet::singleton(0));
        assert_eq!(reconstruct_forest(&t, &tup, 5).unwrap(), f);
        for u in 0..5 {
            assert_eq!(tup.component_of(&t, u).unwrap(), stain(&t, &f, u));
        }
        let bad = vec![0; 5];
        assert!(matches!(
            witness_tuple(&h, &t, &f, &bad),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn single_vertex() {
        let h = Hypergraph::from_edge_lists(&[[1u32]]).unwrap();
        let f = EliminationForest::new(vec![None]).unwrap();
        let t = f.induced_td(&h);
        let tup = witness_tuple(&h, &t, &f, &[0]).unwrap();
        assert_eq!(tup.colours, [BitSet::singleton(0)]);
        assert_eq!(tup.children, [BitSet::singleton(0), BitSet::EMPTY]);
        assert_eq!(reconstruct_forest(&t, &tup, 1).unwrap(), f);
    }

    #[test]
    fn guided_run_reproduces_f0() {
        let (h, f, t) = (h0(), f0(), td0());
        let (chi, col) = ConflictGraph::new(&t, &f).chromatic_number().unwrap();
        let m = encode_td(&h, &t).unwrap();
        for q in chi..=chi + 1 {
            let tr = build_forest_transduction(q).unwrap();
            let w = witness_tuple(&h, &t, &f, &col)
                .unwrap()
                .witness(&h, q)
                .unwrap();
            let (out, _) = apply(&tr, &m, Mode::Guided(&w), &b()).unwrap();
            assert_eq!(out.len(), 1);
            assert_eq!(decode_forest(&out[0]).unwrap(), f);
        }
    }

    #[test]
    fn width_filter_on_k3_and_h0() {
        let k3 = k3();
        let (t, f) = pair(&k3, &[0, 1, 2]);
        let m = encode_td(&k3, &t).unwrap();
        let (chi, col) = ConflictGraph::new(&t, &f).chromatic_number().unwrap();
        let w = witness_tuple(&k3, &t, &f, &col)
            .unwrap()
            .witness(&k3, chi)
            .unwrap();
        let tr = build_forest_transduction(chi).unwrap();
        for (a, nonempty) in [(2, true), (1, false)] {
            let (filter, _) = build_width_filter(&Width::Ghw, &int(a), 2, &b()).unwrap();
            let out = apply(&tr.then(filter).unwrap(), &m, Mode::Exhaustive, &b())
                .unwrap()
                .0;
            assert_eq!(!out.is_empty(), nonempty, "a = {a}");
            let guided = apply(
                &tr.then(build_width_filter(&Width::Ghw, &int(a), 2, &b()).unwrap().0)
                    .unwrap(),
                &m,
                Mode::Guided(&w),
                &b(),
            )
            .unwrap()
            .0;
            assert_eq!(!guided.is_empty(), nonempty);
        }
        let (h, f0, t0) = (h0(), f0(), td0());
        let (chi, col) = ConflictGraph::new(&t0, &f0).chromatic_number().unwrap();
        let w = witness_tuple(&h, &t0, &f0, &col)
            .unwrap()
            .witness(&h, chi)
            .unwrap();
        let (filter, _) = build_width_filter(&Width::Ghw, &int(1), 3, &b()).unwrap();
        let out = apply(
            &build_forest_transduction(chi)
                .unwrap()
                .then(filter)
                .unwrap(),
            &encode_td(&h, &t0).unwrap(),
            Mode::Guided(&w),
            &b(),
        )
        .unwrap()
        .0;
        assert_eq!(out.len(), 1);
        let g = decode_forest(&out[0]).unwrap();
        assert_eq!(
            g.fwidth(&h, &crate::widths::WidthCache::new(&Width::Ghw, &h)),
            int(1)
        );
    }

    #[test]
    fn corrupted_tuple_is_caught() {
        let (h, f, t) = (h0(), f0(), td0());
        let (_, col) = ConflictGraph::new(&t, &f).chromatic_number().unwrap();
        let mut tup = witness_tuple(&h, &t, &f, &col).unwrap();
        // move vertex 3 to the other class
        let c = tup.colours.iter().position(|c| c.contains(2)).unwrap();
        tup.colours[c].remove(2);
        tup.colours[1 - c].insert(2);
        match reconstruct_forest(&t, &tup, 5) {
            Ok(g) => assert_ne!(g, f),
            Err(_) => {}
        }
    }

    #[test]
    fn exhaustive_outputs_are_forests() {
        for h in [
            path(2),
            path(3),
            k3(),
            Hypergraph::from_edge_lists(&[&[1u32, 2, 3][..], &[3, 4]]).unwrap(),
        ] {
            let f = forest_from_order(&h, &(0..h.num_vertices()).collect::<Vec<_>>()).reduce(&h);
            let t = f.induced_td(&h);
            let m = encode_td(&h, &t).unwrap();
            let (chi, col) = ConflictGraph::new(&t, &f).chromatic_number().unwrap();
            for q in 1..=2 {
                let tr = build_forest_transduction(q).unwrap();
                let (out, _) = apply(&tr, &m, Mode::Exhaustive, &b()).unwrap();
                for o in &out {
                    let (g, _) = decode_hypergraph(o).unwrap();
                    assert_eq!(g.sorted_edges(), h.sorted_edges());
                    decode_forest(o).unwrap().validate(&h).unwrap();
                }
                if q >= chi {
                    let _ = &col;
                    assert!(out.iter().any(|o| decode_forest(o).unwrap() == f));
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn reconstruction_identity((h, order) in arb_instance(6)) {
            let (t, f) = pair(&h, &order);
            let cg = ConflictGraph::new(&t, &f);
            let (_, col) = cg.chromatic_number().unwrap();
            let tup = witness_tuple(&h, &t, &f, &col).unwrap();
            prop_assert_eq!(reconstruct_forest(&t, &tup, h.num_vertices()).unwrap(), f.clone());
            for u in 0..h.num_vertices() {
                prop_assert_eq!(tup.component_of(&t, u).unwrap(), stain(&t, &f, u));
            }
            // the guided run agrees with the direct reconstruction
            let q = tup.q();
            let w = tup.witness(&h, q).unwrap();
            let m = encode_td(&h, &t).unwrap();
            let (out, _) = apply(&build_forest_transduction(q).unwrap(), &m, Mode::Guided(&w), &Budget::default()).unwrap();
            prop_assert_eq!(out.len(), 1);
            prop_assert_eq!(decode_forest(&out[0]).unwrap(), f);
        }
    }
}
