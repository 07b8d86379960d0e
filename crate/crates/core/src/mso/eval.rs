//! Evaluation of formulas on a structure.
//!
//! Formulas are compiled against the structure first: variables become
//! slots and relations become indices. Chains of existential element
//! quantifiers over a conjunction check each conjunct as soon as its
//! variables are bound, and unary conjuncts on a quantified variable, or
//! binary ones linking it to a bound variable, restrict its range.
//! Universal chains `∀x̄ (G → R)` are treated the same way with the
//! conjuncts of `G`. A set quantifier whose body starts by defining the
//! set pointwise (`∀v (v ∈ U ↔ θ)`) computes the set instead of guessing it.
//!
//! Relations may be declared unknown. Truth values are then three-valued
//! (Kleene): `None` means the value depends on how the unknown relations
//! are filled in.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::cell::{OnceCell, Ref, RefCell};

use super::structure::Structure;
use super::{Formula, Sort};
use crate::bitset::BitSet;
use crate::budget::Budget;
use crate::error::{Error, Result};

/// Values for the free variables of a formula.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Assignment {
    pub elements: Vec<(String, usize)>,
    pub sets: Vec<(String, BitSet)>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn element(mut self, name: &str, x: usize) -> Self {
        self.elements.push((name.into(), x));
        self
    }

    pub fn set(mut self, name: &str, s: BitSet) -> Self {
        self.sets.push((name.into(), s));
        self
    }
}

/// Truth value of `phi` on `m` under `asg`.
pub fn evaluate(m: &Structure, phi: &Formula, asg: &Assignment, budget: &Budget) -> Result<bool> {
    Evaluator::new(m, budget).evaluate(phi, asg)
}

type Truth = Option<bool>;

fn and3(a: Truth, b: Truth) -> Truth {
    match (a, b) {
        (Some(false), _) | (_, Some(false)) => Some(false),
        (Some(true), Some(true)) => Some(true),
        _ => None,
    }
}

fn or3(a: Truth, b: Truth) -> Truth {
    match (a, b) {
        (Some(true), _) | (_, Some(true)) => Some(true),
        (Some(false), Some(false)) => Some(false),
        _ => None,
    }
}

fn not3(a: Truth) -> Truth {
    a.map(|b| !b)
}

#[derive(Clone, Copy, Debug)]
enum Dom {
    Rel(usize),
    Set(usize),
    /// `R(a, x)` with `a` in the given slot.
    Row(usize, usize),
    /// `R(x, a)`.
    Col(usize, usize),
}

#[derive(Debug)]
struct Definition {
    var: usize,
    theta: Box<Node>,
    /// Slot in the per-run cache, when `θ` reads no other variable.
    cache: Option<usize>,
}

#[derive(Debug)]
struct Chain {
    slots: Vec<usize>,
    domains: Vec<Vec<Dom>>,
    /// `levels[0]` is checked before binding, `levels[i + 1]` right after `slots[i]`.
    levels: Vec<Vec<Node>>,
}

#[derive(Debug)]
enum Node {
    Const(bool),
    Unary(usize, usize),
    Binary(usize, usize, usize),
    Nary(usize, Vec<usize>),
    Eq(usize, usize),
    In(usize, usize),
    Not(Box<Node>),
    And(Vec<Node>),
    Or(Vec<Node>),
    Imp(Box<Node>, Box<Node>),
    Iff(Box<Node>, Box<Node>),
    Exists(Chain),
    /// The chain holds the guard; the body is checked once all are bound.
    Forall(Chain, Box<Node>),
    ExistsSet {
        slot: usize,
        definition: Option<Definition>,
        body: Box<Node>,
    },
    ForallSet {
        slot: usize,
        body: Box<Node>,
    },
    Reach(usize, usize, usize),
    MnComponent(usize, usize, usize, usize),
    MnBijection(usize, usize, usize),
}

/// Decomposition tree read off `Node` and `Descendant`, and `mn` read off `Bag`.
struct TdView {
    parent: Vec<Option<usize>>,
    mn: Vec<Option<usize>>,
}

/// A formula compiled by an [`Evaluator`].
#[derive(Debug)]
pub struct Compiled {
    node: Node,
    shape: [usize; 2],
    defs: usize,
    tuple: bool,
    key: (Vec<(String, usize)>, usize),
}

impl Compiled {
    fn env(&self) -> Env {
        Env::new(self.shape, self.defs)
    }
}

fn undecided() -> Error {
    Error::Formula("truth value depends on unknown relations".into())
}

pub struct Evaluator<'a> {
    m: &'a Structure,
    budget: Budget,
    rel_names: Vec<String>,
    arity: Vec<usize>,
    unknown: Vec<bool>,
    unary: Vec<BitSet>,
    rows: Vec<Vec<BitSet>>,
    cols: Vec<Vec<BitSet>>,
    closures: Vec<OnceCell<Vec<BitSet>>>,
    components: RefCell<BTreeMap<(BitSet, BitSet), Vec<Option<usize>>>>,
    td: OnceCell<TdView>,
}

struct Scope {
    vars: Vec<(String, Sort, usize)>,
    next: [usize; 2],
    defs: usize,
}

impl Scope {
    fn new() -> Self {
        Scope {
            vars: Vec::new(),
            next: [0, 0],
            defs: 0,
        }
    }

    fn lookup(&self, name: &str, sort: Sort) -> Result<usize> {
        self.vars
            .iter()
            .rev()
            .find(|(n, s, _)| n == name && *s == sort)
            .map(|v| v.2)
            .ok_or_else(|| {
                Error::Formula(format!(
                    "unbound {} variable {name}",
                    if sort == Sort::Set { "set" } else { "element" }
                ))
            })
    }

    fn bind(&mut self, name: &str, sort: Sort) -> usize {
        let k = sort as usize;
        let slot = self.next[k];
        self.next[k] += 1;
        self.vars.push((name.to_string(), sort, slot));
        slot
    }
}

/// Sets carry lower and upper bounds; they differ only for sets defined
/// from unknown relations.
struct Env {
    el: Vec<usize>,
    lo: Vec<BitSet>,
    hi: Vec<BitSet>,
    defs: Vec<Option<(BitSet, BitSet)>>,
}

impl Env {
    fn new(shape: [usize; 2], defs: usize) -> Self {
        Env {
            el: vec![0; shape[0]],
            lo: vec![BitSet::EMPTY; shape[1]],
            hi: vec![BitSet::EMPTY; shape[1]],
            defs: vec![None; defs],
        }
    }

    fn exact(&self, s: usize) -> Option<BitSet> {
        (self.lo[s] == self.hi[s]).then_some(self.lo[s])
    }
}

fn strip(f: &Formula) -> &Formula {
    match f {
        Formula::Tagged(_, g) => strip(g),
        other => other,
    }
}

/// `∀v (v ∈ set ↔ θ)` or `∀v (θ ↔ v ∈ set)` with `set` not free in `θ`.
fn definition<'f>(f: &'f Formula, set: &str) -> Option<(&'f str, &'f Formula)> {
    let Formula::Forall1(v, body) = strip(f) else {
        return None;
    };
    let Formula::Iff(a, b) = strip(body) else {
        return None;
    };
    for (lhs, theta) in [(a, b), (b, a)] {
        if let Formula::In(x, s) = strip(lhs) {
            if x == v
                && s == set
                && !theta
                    .free_variables()
                    .iter()
                    .any(|(n, k)| n == set && *k == Sort::Set)
            {
                return Some((v, theta));
            }
        }
    }
    None
}

impl<'a> Evaluator<'a> {
    pub fn new(m: &'a Structure, budget: &Budget) -> Self {
        Self::with_unknown(m, budget, &[])
    }

    /// Treats the named relations as not yet known.
    pub fn with_unknown(m: &'a Structure, budget: &Budget, unknown: &[&str]) -> Self {
        let mut rel_names = Vec::new();
        let mut unary = Vec::new();
        let mut rows = Vec::new();
        let mut unk = Vec::new();
        let mut arity = Vec::new();
        for (name, r) in m.relations() {
            rel_names.push(name.to_string());
            arity.push(r.arity);
            unk.push(unknown.contains(&name));
            unary.push(if r.arity == 1 {
                m.unary(name)
            } else {
                BitSet::EMPTY
            });
            rows.push(if r.arity == 2 {
                m.binary_rows(name)
            } else {
                Vec::new()
            });
        }
        let n = m.size();
        let cols = rows
            .iter()
            .map(|r| {
                let mut c = vec![BitSet::EMPTY; if r.is_empty() { 0 } else { n }];
                for (x, row) in r.iter().enumerate() {
                    for y in row.iter() {
                        c[y].insert(x);
                    }
                }
                c
            })
            .collect();
        let closures = rel_names.iter().map(|_| OnceCell::new()).collect();
        Evaluator {
            m,
            budget: *budget,
            rel_names,
            arity,
            unknown: unk,
            unary,
            rows,
            cols,
            closures,
            components: RefCell::new(BTreeMap::new()),
            td: OnceCell::new(),
        }
    }

    pub fn structure(&self) -> &Structure {
        self.m
    }

    fn prepare(
        &self,
        phi: &Formula,
        asg: &Assignment,
        extra: &[String],
    ) -> Result<(Compiled, Env)> {
        let mut scope = Scope::new();
        let mut values = Vec::new();
        for (name, x) in &asg.elements {
            if *x >= self.m.size() {
                return Err(Error::Formula(format!(
                    "{name} is assigned an element outside the universe"
                )));
            }
            scope.bind(name, Sort::Element);
            values.push(*x);
        }
        let mut sets = Vec::new();
        for (name, s) in &asg.sets {
            if !s.is_subset(self.m.universe()) {
                return Err(Error::Formula(format!(
                    "{name} is assigned a set outside the universe"
                )));
            }
            scope.bind(name, Sort::Set);
            sets.push(*s);
        }
        let node = if extra.is_empty() {
            self.compile(phi, &mut scope)?
        } else {
            let names: Vec<&str> = extra.iter().map(String::as_str).collect();
            Node::Exists(self.compile_chain(&names, phi, &mut scope, None)?.0)
        };
        let c = Compiled {
            node,
            shape: scope.next,
            defs: scope.defs,
            tuple: !extra.is_empty(),
            key: (
                self.rel_names
                    .iter()
                    .cloned()
                    .zip(self.arity.iter().copied())
                    .collect(),
                self.m.size(),
            ),
        };
        let mut env = c.env();
        env.el[..values.len()].copy_from_slice(&values);
        env.lo[..sets.len()].copy_from_slice(&sets);
        env.hi[..sets.len()].copy_from_slice(&sets);
        Ok((c, env))
    }

    /// Compiles a sentence for repeated use on structures with the same
    /// signature and universe size.
    pub fn compile_sentence(&self, phi: &Formula) -> Result<Compiled> {
        Ok(self.prepare(phi, &Assignment::new(), &[])?.0)
    }

    /// Compiles `phi` with free element variables `vars` for [`Evaluator::run_tuples`].
    pub fn compile_tuples(&self, phi: &Formula, vars: &[String]) -> Result<Compiled> {
        if vars.is_empty() {
            return self.compile_sentence(phi);
        }
        Ok(self.prepare(phi, &Assignment::new(), vars)?.0)
    }

    /// Whether `c` was compiled for this signature and universe size.
    pub fn fits(&self, c: &Compiled) -> bool {
        c.key.1 == self.m.size()
            && c.key.0.len() == self.rel_names.len()
            && c.key
                .0
                .iter()
                .zip(self.rel_names.iter().zip(&self.arity))
                .all(|((n, a), (m, b))| n == m && a == b)
    }

    fn check_fit(&self, c: &Compiled) -> Result<()> {
        if !self.fits(c) {
            return Err(Error::Formula(
                "formula was compiled for another signature".into(),
            ));
        }
        Ok(())
    }

    /// Three-valued truth of a compiled sentence.
    pub fn run(&self, c: &Compiled) -> Result<Option<bool>> {
        self.check_fit(c)?;
        if c.tuple {
            return Err(Error::Formula("formula has free variables".into()));
        }
        Ok(self.eval(&c.node, &mut c.env()))
    }

    /// Three-valued truth of `phi`; `None` only when unknown relations matter.
    pub fn evaluate3(&self, phi: &Formula, asg: &Assignment) -> Result<Option<bool>> {
        let (c, mut env) = self.prepare(phi, asg, &[])?;
        Ok(self.eval(&c.node, &mut env))
    }

    pub fn evaluate(&self, phi: &Formula, asg: &Assignment) -> Result<bool> {
        self.evaluate3(phi, asg)?.ok_or_else(undecided)
    }

    /// All tuples over the universe satisfying `phi`, with `vars` bound in
    /// order, in lexicographic order.
    pub fn tuples(&self, phi: &Formula, vars: &[String]) -> Result<Vec<Vec<usize>>> {
        self.run_tuples(&self.compile_tuples(phi, vars)?)
    }

    pub fn run_tuples(&self, c: &Compiled) -> Result<Vec<Vec<usize>>> {
        self.check_fit(c)?;
        let mut env = c.env();
        let Node::Exists(chain) = &c.node else {
            return Ok(match self.eval(&c.node, &mut env) {
                Some(true) => vec![Vec::new()],
                Some(false) => Vec::new(),
                None => return Err(undecided()),
            });
        };
        if !c.tuple {
            return Err(Error::Formula("formula has no free variables".into()));
        }
        let mut out = Vec::new();
        let mut open = false;
        if chain.levels[0]
            .iter()
            .all(|n| self.eval(n, &mut env) == Some(true))
        {
            self.solutions(chain, 0, &mut env, &mut out, &mut open);
        }
        if open {
            return Err(undecided());
        }
        Ok(out)
    }

    /// The set `{x : phi(x)}` for a formula with one free element variable.
    pub fn define(&self, phi: &Formula, var: &str, asg: &Assignment) -> Result<BitSet> {
        if asg.elements.is_empty() && asg.sets.is_empty() {
            return Ok(self
                .tuples(phi, &[var.to_string()])?
                .into_iter()
                .map(|t| t[0])
                .collect());
        }
        let mut out = BitSet::EMPTY;
        for x in 0..self.m.size() {
            if self.evaluate(phi, &asg.clone().element(var, x))? {
                out.insert(x);
            }
        }
        Ok(out)
    }

    fn rel_index(&self, name: &str, arity: usize) -> Result<usize> {
        let i = self
            .rel_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Formula(format!("relation {name} is not in the structure")))?;
        let a = self.m.relation(name).unwrap().arity;
        if a != arity {
            return Err(Error::Formula(format!(
                "relation {name} has arity {a}, used with {arity}"
            )));
        }
        Ok(i)
    }

    fn compile(&self, f: &Formula, sc: &mut Scope) -> Result<Node> {
        use Formula as F;
        Ok(match f {
            F::True => Node::Const(true),
            F::False => Node::Const(false),
            F::Rel(r, args) => {
                let i = self.rel_index(r, args.len())?;
                let s: Vec<usize> = args
                    .iter()
                    .map(|a| sc.lookup(a, Sort::Element))
                    .collect::<Result<_>>()?;
                match s.len() {
                    1 => Node::Unary(i, s[0]),
                    2 => Node::Binary(i, s[0], s[1]),
                    _ => Node::Nary(i, s),
                }
            }
            F::Eq(x, y) => Node::Eq(sc.lookup(x, Sort::Element)?, sc.lookup(y, Sort::Element)?),
            F::In(x, s) => Node::In(sc.lookup(x, Sort::Element)?, sc.lookup(s, Sort::Set)?),
            F::Not(g) => Node::Not(Box::new(self.compile(g, sc)?)),
            F::And(gs) => Node::And(
                gs.iter()
                    .map(|g| self.compile(g, sc))
                    .collect::<Result<_>>()?,
            ),
            F::Or(gs) => Node::Or(
                gs.iter()
                    .map(|g| self.compile(g, sc))
                    .collect::<Result<_>>()?,
            ),
            F::Implies(a, b) => Node::Imp(
                Box::new(self.compile(a, sc)?),
                Box::new(self.compile(b, sc)?),
            ),
            F::Iff(a, b) => Node::Iff(
                Box::new(self.compile(a, sc)?),
                Box::new(self.compile(b, sc)?),
            ),
            F::Tagged(_, g) => self.compile(g, sc)?,
            F::Exists1(..) => {
                let mut names = Vec::new();
                let mut body = f;
                while let Formula::Exists1(x, g) = strip(body) {
                    names.push(x.as_str());
                    body = g;
                }
                Node::Exists(self.compile_chain(&names, body, sc, None)?.0)
            }
            F::Forall1(..) => {
                let mut names = Vec::new();
                let mut body = f;
                while let Formula::Forall1(x, g) = strip(body) {
                    names.push(x.as_str());
                    body = g;
                }
                let (guard, rest) = match strip(body) {
                    F::Implies(guard, rest) => (&**guard, &**rest),
                    _ => (&F::True, body),
                };
                let (chain, rest) = self.compile_chain(&names, guard, sc, Some(rest))?;
                Node::Forall(chain, Box::new(rest.unwrap()))
            }
            F::ExistsSet(x, body) => {
                let mark = sc.vars.len();
                let cs = body.conjuncts();
                let def = cs
                    .iter()
                    .enumerate()
                    .find_map(|(i, c)| definition(c, x).map(|d| (i, d)));
                let node = match def {
                    Some((i, (v, theta))) => {
                        let closed = theta
                            .free_variables()
                            .iter()
                            .all(|(n, s)| n == v && *s == Sort::Element);
                        let vm = sc.vars.len();
                        let var = sc.bind(v, Sort::Element);
                        let theta = Box::new(self.compile(theta, sc)?);
                        sc.vars.truncate(vm);
                        let slot = sc.bind(x, Sort::Set);
                        let rest: Vec<Node> = cs
                            .iter()
                            .enumerate()
                            .filter(|&(j, _)| j != i)
                            .map(|(_, c)| self.compile(c, sc))
                            .collect::<Result<_>>()?;
                        let cache = closed.then(|| {
                            sc.defs += 1;
                            sc.defs - 1
                        });
                        let definition = Definition { var, theta, cache };
                        Node::ExistsSet {
                            slot,
                            definition: Some(definition),
                            body: Box::new(Node::And(rest)),
                        }
                    }
                    None => {
                        self.check_set_budget()?;
                        let slot = sc.bind(x, Sort::Set);
                        Node::ExistsSet {
                            slot,
                            definition: None,
                            body: Box::new(self.compile(body, sc)?),
                        }
                    }
                };
                sc.vars.truncate(mark);
                node
            }
            F::ForallSet(x, body) => {
                self.check_set_budget()?;
                let mark = sc.vars.len();
                let slot = sc.bind(x, Sort::Set);
                let body = self.compile(body, sc)?;
                sc.vars.truncate(mark);
                Node::ForallSet {
                    slot,
                    body: Box::new(body),
                }
            }
            F::Reach(r, x, y) => Node::Reach(
                self.rel_index(r, 2)?,
                sc.lookup(x, Sort::Element)?,
                sc.lookup(y, Sort::Element)?,
            ),
            F::MnComponent(k0, k1, x, y) => {
                self.require_td()?;
                Node::MnComponent(
                    sc.lookup(k0, Sort::Set)?,
                    sc.lookup(k1, Sort::Set)?,
                    sc.lookup(x, Sort::Element)?,
                    sc.lookup(y, Sort::Element)?,
                )
            }
            F::MnBijection(c, k0, k1) => {
                self.require_td()?;
                Node::MnBijection(
                    sc.lookup(c, Sort::Set)?,
                    sc.lookup(k0, Sort::Set)?,
                    sc.lookup(k1, Sort::Set)?,
                )
            }
        })
    }

    fn check_set_budget(&self) -> Result<()> {
        if self.m.size() > self.budget.mso_universe {
            return Err(Error::CapExceeded {
                what: "universe for set quantification",
                size: self.m.size(),
                cap: self.budget.mso_universe,
            });
        }
        Ok(())
    }

    fn require_td(&self) -> Result<()> {
        for (r, a) in [("Node", 1), ("Bag", 2), ("Descendant", 2)] {
            self.rel_index(r, a)?;
        }
        Ok(())
    }

    /// `R(x)`, `x ∈ S`, `R(a, x)` or `R(x, a)` for the element in `slot`,
    /// where `a` is bound before it.
    fn range_atom(&self, c: &Formula, slot: usize, sc: &Scope) -> Result<Option<Dom>> {
        Ok(match strip(c) {
            Formula::Rel(r, args)
                if args.len() == 1 && sc.lookup(&args[0], Sort::Element).ok() == Some(slot) =>
            {
                Some(Dom::Rel(self.rel_index(r, 1)?))
            }
            Formula::Rel(r, args) if args.len() == 2 => {
                let (a, b) = (
                    sc.lookup(&args[0], Sort::Element)?,
                    sc.lookup(&args[1], Sort::Element)?,
                );
                if b == slot && a < slot {
                    Some(Dom::Row(self.rel_index(r, 2)?, a))
                } else if a == slot && b < slot {
                    Some(Dom::Col(self.rel_index(r, 2)?, b))
                } else {
                    None
                }
            }
            Formula::In(x, s) if sc.lookup(x, Sort::Element).ok() == Some(slot) => {
                Some(Dom::Set(sc.lookup(s, Sort::Set)?))
            }
            _ => None,
        })
    }

    /// `∃names (body)` with the conjuncts of `body` placed at the first
    /// level where their variables are bound; `tail` is compiled with all
    /// of `names` in scope.
    fn compile_chain(
        &self,
        names: &[&str],
        body: &Formula,
        sc: &mut Scope,
        tail: Option<&Formula>,
    ) -> Result<(Chain, Option<Node>)> {
        let mark = sc.vars.len();
        let slots: Vec<usize> = names.iter().map(|x| sc.bind(x, Sort::Element)).collect();
        let k = slots.len();
        let mut domains = vec![Vec::new(); k];
        let mut levels: Vec<Vec<Node>> = (0..=k).map(|_| Vec::new()).collect();
        // chain variables not shadowed by a later one
        let visible: Vec<(usize, &str)> = (0..k)
            .filter(|&i| !names[i + 1..].contains(&names[i]))
            .map(|i| (i, names[i]))
            .collect();
        for c in body.conjuncts() {
            let fv = c.free_variables();
            let level = visible
                .iter()
                .filter(|(_, n)| fv.iter().any(|(m, s)| m == n && *s == Sort::Element))
                .map(|&(i, _)| i + 1)
                .max()
                .unwrap_or(0);
            if level > 0 {
                if let Some(d) = self.range_atom(c, slots[level - 1], sc)? {
                    domains[level - 1].push(d);
                    continue;
                }
            }
            levels[level].push(self.compile(c, sc)?);
        }
        let tail = tail.map(|t| self.compile(t, sc)).transpose()?;
        sc.vars.truncate(mark);
        Ok((
            Chain {
                slots,
                domains,
                levels,
            },
            tail,
        ))
    }

    /// Candidates for a quantified element, and the truth of membership
    /// for one candidate.
    fn range(&self, ds: &[Dom], env: &Env) -> BitSet {
        ds.iter().fold(self.m.universe(), |acc, d| {
            acc & match *d {
                Dom::Rel(r) if self.unknown[r] => self.m.universe(),
                Dom::Rel(r) => self.unary[r],
                Dom::Set(s) => env.hi[s],
                Dom::Row(r, _) | Dom::Col(r, _) if self.unknown[r] => self.m.universe(),
                Dom::Row(r, a) => self.rows[r][env.el[a]],
                Dom::Col(r, a) => self.cols[r][env.el[a]],
            }
        })
    }

    fn in_range(&self, ds: &[Dom], x: usize, env: &Env) -> Truth {
        let mut t = Some(true);
        for d in ds {
            let sure = match *d {
                Dom::Rel(r) | Dom::Row(r, _) | Dom::Col(r, _) => !self.unknown[r],
                Dom::Set(s) => env.lo[s].contains(x),
            };
            if !sure {
                t = None;
            }
        }
        t
    }

    fn eval(&self, n: &Node, env: &mut Env) -> Truth {
        match n {
            Node::Const(b) => Some(*b),
            Node::Unary(r, x) => (!self.unknown[*r]).then(|| self.unary[*r].contains(env.el[*x])),
            Node::Binary(r, x, y) => {
                (!self.unknown[*r]).then(|| self.rows[*r][env.el[*x]].contains(env.el[*y]))
            }
            Node::Nary(r, xs) => {
                let t: Vec<usize> = xs.iter().map(|&x| env.el[x]).collect();
                (!self.unknown[*r]).then(|| self.m.holds(&self.rel_names[*r], &t))
            }
            Node::Eq(x, y) => Some(env.el[*x] == env.el[*y]),
            Node::In(x, s) => {
                let v = env.el[*x];
                if env.lo[*s].contains(v) {
                    Some(true)
                } else if !env.hi[*s].contains(v) {
                    Some(false)
                } else {
                    None
                }
            }
            Node::Not(g) => not3(self.eval(g, env)),
            Node::And(gs) => {
                let mut acc = Some(true);
                for g in gs {
                    match self.eval(g, env) {
                        Some(false) => return Some(false),
                        None => acc = None,
                        _ => {}
                    }
                }
                acc
            }
            Node::Or(gs) => {
                let mut acc = Some(false);
                for g in gs {
                    match self.eval(g, env) {
                        Some(true) => return Some(true),
                        None => acc = None,
                        _ => {}
                    }
                }
                acc
            }
            Node::Imp(a, b) => {
                let a = self.eval(a, env);
                if a == Some(false) {
                    return Some(true);
                }
                or3(not3(a), self.eval(b, env))
            }
            Node::Iff(a, b) => {
                let (a, b) = (self.eval(a, env), self.eval(b, env));
                Some(a? == b?)
            }
            Node::Exists(chain) => {
                let mut pre = Some(true);
                for c in &chain.levels[0] {
                    pre = and3(pre, self.eval(c, env));
                    if pre == Some(false) {
                        return pre;
                    }
                }
                and3(pre, self.exists_level(chain, 0, env))
            }
            Node::Forall(chain, body) => {
                let mut pre = Some(true);
                for c in &chain.levels[0] {
                    pre = and3(pre, self.eval(c, env));
                    if pre == Some(false) {
                        return Some(true);
                    }
                }
                or3(not3(pre), self.forall_level(chain, body, 0, env))
            }
            Node::ExistsSet {
                slot,
                definition: Some(d),
                body,
            } => {
                let (lo, hi) = match d.cache {
                    Some(c) => match env.defs[c] {
                        Some(v) => v,
                        None => {
                            let v = self.define_set(d, env);
                            env.defs[c] = Some(v);
                            v
                        }
                    },
                    None => self.define_set(d, env),
                };
                env.lo[*slot] = lo;
                env.hi[*slot] = hi;
                self.eval(body, env)
            }
            Node::ExistsSet {
                slot,
                definition: None,
                body,
            } => self.gray(*slot, body, env, true),
            Node::ForallSet { slot, body } => self.gray(*slot, body, env, false),
            Node::Reach(r, x, y) => {
                (!self.unknown[*r]).then(|| self.closure(*r)[env.el[*x]].contains(env.el[*y]))
            }
            Node::MnComponent(k0, k1, x, y) => {
                let (k0, k1) = (env.exact(*k0)?, env.exact(*k1)?);
                let td = self.td_view();
                Some(match (td.mn[env.el[*x]], td.mn[env.el[*y]]) {
                    (Some(a), Some(b)) => {
                        let comp = self.components(k0, k1);
                        comp[a].is_some() && comp[a] == comp[b]
                    }
                    _ => false,
                })
            }
            Node::MnBijection(c, k0, k1) => {
                let (c, k0, k1) = (env.exact(*c)?, env.exact(*k0)?, env.exact(*k1)?);
                let td = self.td_view();
                let comp = self.components(k0, k1);
                let count = comp.iter().flatten().max().map_or(0, |&m| m + 1);
                let mut hit = BitSet::EMPTY;
                for u in c.iter() {
                    match td.mn[u].and_then(|x| comp[x]) {
                        Some(i) if !hit.contains(i) => hit.insert(i),
                        _ => return Some(false),
                    }
                }
                Some(hit.len() == count)
            }
        }
    }

    fn define_set(&self, d: &Definition, env: &mut Env) -> (BitSet, BitSet) {
        let (mut lo, mut hi) = (BitSet::EMPTY, BitSet::EMPTY);
        for x in 0..self.m.size() {
            env.el[d.var] = x;
            match self.eval(&d.theta, env) {
                Some(true) => {
                    lo.insert(x);
                    hi.insert(x);
                }
                None => hi.insert(x),
                Some(false) => {}
            }
        }
        (lo, hi)
    }

    fn exists_level(&self, chain: &Chain, i: usize, env: &mut Env) -> Truth {
        if i == chain.slots.len() {
            return Some(true);
        }
        let mut acc = Some(false);
        for x in self.range(&chain.domains[i], env).iter() {
            env.el[chain.slots[i]] = x;
            let mut t = self.in_range(&chain.domains[i], x, env);
            for c in &chain.levels[i + 1] {
                t = and3(t, self.eval(c, env));
                if t == Some(false) {
                    break;
                }
            }
            if t != Some(false) {
                t = and3(t, self.exists_level(chain, i + 1, env));
            }
            match t {
                Some(true) => return Some(true),
                None => acc = None,
                _ => {}
            }
        }
        acc
    }

    fn forall_level(&self, chain: &Chain, body: &Node, i: usize, env: &mut Env) -> Truth {
        if i == chain.slots.len() {
            return self.eval(body, env);
        }
        let mut acc = Some(true);
        for x in self.range(&chain.domains[i], env).iter() {
            env.el[chain.slots[i]] = x;
            let mut g = self.in_range(&chain.domains[i], x, env);
            for c in &chain.levels[i + 1] {
                g = and3(g, self.eval(c, env));
                if g == Some(false) {
                    break;
                }
            }
            if g == Some(false) {
                continue;
            }
            match or3(not3(g), self.forall_level(chain, body, i + 1, env)) {
                Some(false) => return Some(false),
                None => acc = None,
                _ => {}
            }
        }
        acc
    }

    /// Every satisfying assignment of the chain variables.
    fn solutions(
        &self,
        chain: &Chain,
        i: usize,
        env: &mut Env,
        out: &mut Vec<Vec<usize>>,
        undecided: &mut bool,
    ) {
        if i == chain.slots.len() {
            out.push(chain.slots.iter().map(|&s| env.el[s]).collect());
            return;
        }
        for x in self.range(&chain.domains[i], env).iter() {
            env.el[chain.slots[i]] = x;
            let mut t = self.in_range(&chain.domains[i], x, env);
            for c in &chain.levels[i + 1] {
                t = and3(t, self.eval(c, env));
                if t == Some(false) {
                    break;
                }
            }
            match t {
                Some(true) => self.solutions(chain, i + 1, env, out, undecided),
                None => *undecided = true,
                Some(false) => {}
            }
        }
    }

    /// Runs through all subsets in Gray-code order looking for one where
    /// `body` has truth `target`.
    fn gray(&self, slot: usize, body: &Node, env: &mut Env, target: bool) -> Truth {
        let n = self.m.size();
        let mut s = BitSet::EMPTY;
        let mut acc = Some(!target);
        for i in 0u64..(1u64 << n) {
            if i > 0 {
                s = BitSet(s.bits() ^ (1u64 << i.trailing_zeros()));
            }
            env.lo[slot] = s;
            env.hi[slot] = s;
            match self.eval(body, env) {
                Some(b) if b == target => return Some(target),
                None => acc = None,
                _ => {}
            }
        }
        acc
    }

    fn closure(&self, r: usize) -> &[BitSet] {
        self.closures[r].get_or_init(|| {
            let rows = &self.rows[r];
            (0..self.m.size())
                .map(|x| {
                    let mut seen = BitSet::singleton(x);
                    let mut frontier = seen;
                    while !frontier.is_empty() {
                        let next = frontier.iter().fold(BitSet::EMPTY, |a, y| a | rows[y]) - seen;
                        seen |= next;
                        frontier = next;
                    }
                    seen
                })
                .collect()
        })
    }

    fn components(&self, k0: BitSet, k1: BitSet) -> Ref<'_, Vec<Option<usize>>> {
        if !self.components.borrow().contains_key(&(k0, k1)) {
            let comp = components(self.td_view(), k0, k1);
            self.components.borrow_mut().insert((k0, k1), comp);
        }
        Ref::map(self.components.borrow(), |c| &c[&(k0, k1)])
    }

    fn td_view(&self) -> &TdView {
        self.td.get_or_init(|| {
            let m = self.m;
            let nodes = m.unary("Node");
            let desc = m.binary_rows("Descendant");
            let anc = |x: usize| -> BitSet {
                nodes
                    .iter()
                    .filter(|&a| a != x && desc[a].contains(x))
                    .collect()
            };
            let mut parent = vec![None; m.size()];
            for x in nodes.iter() {
                let a = anc(x);
                parent[x] = a.iter().find(|&p| anc(p) == a.without(p));
            }
            let bag = m.binary_rows("Bag");
            let mut mn = vec![None; m.size()];
            for v in m.unary("Vertex").iter() {
                let holders: BitSet = nodes.iter().filter(|&x| bag[x].contains(v)).collect();
                mn[v] = holders
                    .iter()
                    .find(|&x| parent[x].is_none_or(|p| !holders.contains(p)));
            }
            TdView { parent, mn }
        })
    }
}

/// Component index per node of `k0`, where the parent edge of a node is
/// kept when the parent is in `k0` and the node is not in `k1`.
fn components(td: &TdView, k0: BitSet, k1: BitSet) -> Vec<Option<usize>> {
    let n = td.parent.len();
    let mut comp = vec![None; n];
    let top = |mut x: usize| {
        while let Some(p) = td.parent[x] {
            if !k0.contains(p) || k1.contains(x) {
                break;
            }
            x = p;
        }
        x
    };
    let mut tops: Vec<usize> = Vec::new();
    for x in k0.iter().filter(|&x| x < n) {
        let t = top(x);
        let i = tops.iter().position(|&y| y == t).unwrap_or_else(|| {
            tops.push(t);
            tops.len() - 1
        });
        comp[x] = Some(i);
    }
    comp
}

#[cfg(test)]
mod tests {
    use super::super::structure::{encode_ef, encode_td};
    use super::super::*;
    use super::*;
    use crate::decomp::EliminationForest;
    use crate::fixtures::*;
    use proptest::prelude::*;

    fn ev(m: &Structure, f: &Formula) -> bool {
        evaluate(m, f, &Assignment::new(), &Budget::default()).unwrap()
    }

    #[test]
    fn k3_has_an_edge() {
        let m = encode_ef(
            &k3(),
            &EliminationForest::for_hypergraph(&k3(), vec![None, Some(0), Some(1)]).unwrap(),
        )
        .unwrap();
        assert!(ev(&m, &exists("e", rel("Edge", &["e"]))));
        assert!(!ev(&m, &forall("e", rel("Edge", &["e"]))));
    }

    #[test]
    fn distinctness_under_equal_assignment() {
        let m = Structure::new(2).unwrap();
        let f = neq("v1", "v2");
        let asg = Assignment::new().element("v1", 0).element("v2", 0);
        assert!(!evaluate(&m, &f, &asg, &Budget::default()).unwrap());
    }

    #[test]
    fn errors() {
        let m = encode_ef(&h0(), &f0()).unwrap();
        let b = Budget::default();
        let a = Assignment::new();
        assert!(matches!(
            evaluate(&m, &rel("Vertex", &["x"]), &a, &b),
            Err(Error::Formula(_))
        ));
        assert!(matches!(
            evaluate(&m, &exists("x", rel("Child", &["x"])), &a, &b),
            Err(Error::Formula(_))
        ));
        assert!(matches!(
            evaluate(&m, &exists("x", rel("Node", &["x"])), &a, &b),
            Err(Error::Formula(_))
        ));
        let small = Budget {
            mso_universe: 4,
            ..b
        };
        assert!(matches!(
            evaluate(&m, &exists_set("X", Formula::True), &a, &small),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn shadowing() {
        let m = Structure::new(3).unwrap();
        // the inner x is a different variable
        let f = exists(
            "x",
            exists("y", and(vec![neq("x", "y"), exists("x", eq("x", "y"))])),
        );
        assert!(ev(&m, &f));
        let g = forall("x", exists("x", eq("x", "x")));
        assert!(ev(&m, &g));
    }

    #[test]
    fn set_quantifiers() {
        let m = Structure::new(3).unwrap();
        // some set has exactly two elements
        let two = exists_set(
            "X",
            exists_many(
                &["a", "b"],
                and(vec![
                    neq("a", "b"),
                    member("a", "X"),
                    member("b", "X"),
                    forall(
                        "c",
                        implies(member("c", "X"), or(vec![eq("c", "a"), eq("c", "b")])),
                    ),
                ]),
            ),
        );
        assert!(ev(&m, &two));
        assert!(!ev(&m, &forall_set("X", exists("a", member("a", "X")))));
        let defined = exists_set(
            "X",
            and(vec![
                forall("v", iff(member("v", "X"), Formula::True)),
                forall("v", member("v", "X")),
            ]),
        );
        assert!(ev(&m, &defined));
    }

    /// `b` is in every `Child`-closed set containing `a`.
    fn reach_mso(a: &str, b: &str) -> Formula {
        forall_set(
            "Z",
            implies(
                and(vec![
                    member(a, "Z"),
                    forall(
                        "p",
                        forall(
                            "c",
                            implies(
                                and(vec![member("p", "Z"), rel("Child", &["p", "c"])]),
                                member("c", "Z"),
                            ),
                        ),
                    ),
                ]),
                member(b, "Z"),
            ),
        )
    }

    #[test]
    fn mn_builtins_on_td0() {
        let (h, t) = (h0(), td0());
        let m = encode_td(&h, &t).unwrap();
        let b = Budget::default();
        let e = Evaluator::new(&m, &b);
        let nodes: BitSet = m.unary("Node");
        // whole tree is one component, so only a single vertex can map onto it
        let asg = Assignment::new()
            .set("K0", nodes)
            .set("K1", BitSet::EMPTY)
            .set("C", BitSet::singleton(0));
        assert!(e
            .evaluate(
                &Formula::MnBijection("C".into(), "K0".into(), "K1".into()),
                &asg
            )
            .unwrap());
        let asg2 = asg.clone().element("x", 1).element("y", 4);
        assert!(e
            .evaluate(
                &Formula::MnComponent("K0".into(), "K1".into(), "x".into(), "y".into()),
                &asg2
            )
            .unwrap());
        // cut node v3 from its parent: v4 and v2 are separated
        let cut = Assignment::new()
            .set("K0", nodes)
            .set("K1", BitSet::singleton(8 + 2))
            .element("x", 1)
            .element("y", 3);
        assert!(!e
            .evaluate(
                &Formula::MnComponent("K0".into(), "K1".into(), "x".into(), "y".into()),
                &cut
            )
            .unwrap());
        let two = Assignment::new()
            .set("K0", nodes)
            .set("K1", BitSet::singleton(8 + 2))
            .set("C", BitSet(0b00101));
        assert!(e
            .evaluate(
                &Formula::MnBijection("C".into(), "K0".into(), "K1".into()),
                &two
            )
            .unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn reach_matches_its_mso_definition(parent_seed in proptest::collection::vec(0usize..6, 6)) {
            // random forest on up to 6 vertices: parent index below own index or none
            let parent: Vec<Option<usize>> = parent_seed.iter().enumerate().map(|(i, &p)| if i == 0 || p >= i { None } else { Some(p) }).collect();
            let f = EliminationForest::new(parent.clone()).unwrap();
            let mut m = Structure::new(6).unwrap();
            m.declare("Child", 2).unwrap();
            for (c, p) in parent.iter().enumerate() {
                if let Some(p) = p {
                    m.insert("Child", vec![*p, c]).unwrap();
                }
            }
            let b = Budget::default();
            let e = Evaluator::new(&m, &b);
            for a in 0..6 {
                for c in 0..6 {
                    let asg = Assignment::new().element("a", a).element("b", c);
                    let builtin = e.evaluate(&reach("Child", "a", "b"), &asg).unwrap();
                    prop_assert_eq!(builtin, e.evaluate(&reach_mso("a", "b"), &asg).unwrap());
                    prop_assert_eq!(builtin, f.is_ancestor(a, c));
                }
            }
        }

        #[test]
        fn relabelling_preserves_truth(perm in Just((0..8usize).collect::<Vec<_>>()).prop_shuffle()) {
            let m = encode_ef(&h0(), &f0()).unwrap();
            let mut p = Structure::new(8).unwrap();
            for (name, r) in m.relations() {
                p.declare(name, r.arity).unwrap();
                for t in &r.tuples {
                    p.insert(name, t.iter().map(|&x| perm[x]).collect()).unwrap();
                }
            }
            let fs = [
                forall("u", implies(rel("Vertex", &["u"]), exists("e", rel("Adjacent", &["u", "e"])))),
                exists_many(&["a", "b"], and(vec![rel("Child", &["a", "b"]), exists("e", and(vec![rel("Adjacent", &["a", "e"]), rel("Adjacent", &["b", "e"])]))])),
                exists_set("X", and(vec![exists("x", member("x", "X")), forall("x", implies(member("x", "X"), rel("Edge", &["x"])))])),
                forall("x", forall("y", implies(rel("Child", &["x", "y"]), not(reach("Child", "y", "x"))))),
            ];
            for f in &fs {
                prop_assert_eq!(ev(&m, f), ev(&p, f));
            }
        }
    }
}
