//! S-expression forms for formulas, structures, transductions and
//! colouring witnesses.
//!
//! Structures list their universe by label, then one form per relation:
//! `(universe 1 2 3)(rel Vertex (1)(2))(rel Child (1 2))`. An empty
//! relation carries its arity, `(rel Child 2)`.

use std::collections::BTreeMap;
use std::fmt::Write;

use hyperwidth_core::mso::{Formula, Structure};
use hyperwidth_core::transduction::{Definition, Elementary, Signature, Step, Transduction};
use hyperwidth_core::BitSet;

use super::hg::number;
use super::sexp::{parse_all, parse_one, Sexp};
use crate::error::{Error, Result};

fn names(items: &[Sexp], what: &str) -> Result<Vec<String>> {
    items.iter().map(|s| s.expect_atom(what).map(String::from)).collect()
}

fn arity(line: usize, head: &str, args: &[Sexp], n: usize) -> Result<()> {
    if args.len() != n {
        return Err(Error::parse(line, format!("`{head}` takes {n} arguments, got {}", args.len())));
    }
    Ok(())
}

pub fn formula_from_sexp(s: &Sexp) -> Result<Formula> {
    use Formula as F;
    if let Some(a) = s.atom() {
        return match a {
            "true" => Ok(F::True),
            "false" => Ok(F::False),
            _ => Err(Error::parse(s.line(), format!("`{a}` is not a formula"))),
        };
    }
    let line = s.line();
    let (head, args) = s.form()?;
    let sub = |i: usize| formula_from_sexp(&args[i]).map(Box::new);
    let name = |i: usize| args[i].expect_atom("a name").map(String::from);
    let fixed = |n: usize| arity(line, head, args, n);
    Ok(match head {
        "rel" => {
            if args.is_empty() {
                return Err(Error::parse(line, "`rel` needs a relation name"));
            }
            F::Rel(name(0)?, names(&args[1..], "a variable")?)
        }
        "eq" | "in" => {
            fixed(2)?;
            if head == "eq" {
                F::Eq(name(0)?, name(1)?)
            } else {
                F::In(name(0)?, name(1)?)
            }
        }
        "not" => {
            fixed(1)?;
            F::Not(sub(0)?)
        }
        "and" | "or" => {
            let fs = args.iter().map(formula_from_sexp).collect::<Result<_>>()?;
            if head == "and" {
                F::And(fs)
            } else {
                F::Or(fs)
            }
        }
        "imp" | "iff" => {
            fixed(2)?;
            if head == "imp" {
                F::Implies(sub(0)?, sub(1)?)
            } else {
                F::Iff(sub(0)?, sub(1)?)
            }
        }
        "exists1" | "forall1" | "existsS" | "forallS" | "tag" => {
            fixed(2)?;
            let (x, f) = (name(0)?, sub(1)?);
            match head {
                "exists1" => F::Exists1(x, f),
                "forall1" => F::Forall1(x, f),
                "existsS" => F::ExistsSet(x, f),
                "forallS" => F::ForallSet(x, f),
                _ => F::Tagged(x, f),
            }
        }
        "reach" => {
            fixed(3)?;
            F::Reach(name(0)?, name(1)?, name(2)?)
        }
        "mncomp" => {
            fixed(4)?;
            F::MnComponent(name(0)?, name(1)?, name(2)?, name(3)?)
        }
        "mnbij" => {
            fixed(3)?;
            F::MnBijection(name(0)?, name(1)?, name(2)?)
        }
        other => return Err(Error::parse(line, format!("unknown connective `{other}`"))),
    })
}

pub fn parse_formula(text: &str) -> Result<Formula> {
    formula_from_sexp(&parse_one(text)?)
}

fn element(m: &Structure, s: &Sexp) -> Result<usize> {
    let l: u32 = number(s.line(), s.expect_atom("an element")?, "element")?;
    m.element_of_label(l)
        .ok_or_else(|| Error::parse(s.line(), format!("element {l} is not in the universe")))
}

pub fn parse_structure(text: &str) -> Result<Structure> {
    let forms = parse_all(text)?;
    let Some((first, rest)) = forms.split_first() else {
        return Err(Error::parse(1, "empty document"));
    };
    let (head, labels) = first.form()?;
    if head != "universe" {
        return Err(Error::parse(first.line(), "a structure starts with `(universe ..)`"));
    }
    let labels = labels
        .iter()
        .map(|l| number(l.line(), l.expect_atom("an element label")?, "element label"))
        .collect::<Result<Vec<u32>>>()?;
    let mut m = Structure::with_labels(labels).map_err(|e| Error::parse(first.line(), e))?;
    for f in rest {
        let (head, args) = f.form()?;
        if head != "rel" || args.is_empty() {
            return Err(Error::parse(f.line(), "expected `(rel <name> <tuple>..)`"));
        }
        let name = args[0].expect_atom("a relation name")?;
        if m.relation(name).is_some() {
            return Err(Error::parse(f.line(), format!("relation {name} given twice")));
        }
        let mut tuples = &args[1..];
        if let Some(a) = tuples.first().and_then(Sexp::atom) {
            m.declare(name, number(f.line(), a, "arity")?).map_err(|e| Error::parse(f.line(), e))?;
            tuples = &tuples[1..];
        }
        for t in tuples {
            let t = t
                .expect_list("a tuple")?
                .iter()
                .map(|x| element(&m, x))
                .collect::<Result<Vec<_>>>()?;
            m.insert(name, t).map_err(|e| Error::parse(f.line(), e))?;
        }
        if m.relation(name).is_none() {
            return Err(Error::parse(f.line(), format!("empty relation {name} needs an arity")));
        }
    }
    Ok(m)
}

/// One form per line: the universe, then relations by name.
pub fn write_structure(m: &Structure) -> String {
    let mut out = String::from("(universe");
    for l in m.labels() {
        write!(out, " {l}").unwrap();
    }
    out.push_str(")\n");
    for (name, r) in m.relations() {
        write!(out, "(rel {name}").unwrap();
        if r.tuples.is_empty() {
            write!(out, " {}", r.arity).unwrap();
        } else {
            out.push(' ');
        }
        for t in &r.tuples {
            let ls: Vec<String> = t.iter().map(|&x| m.labels()[x].to_string()).collect();
            write!(out, "({})", ls.join(" ")).unwrap();
        }
        out.push_str(")\n");
    }
    out
}

pub fn parse_transduction(text: &str) -> Result<Transduction> {
    let doc = parse_one(text)?;
    let (head, args) = doc.form()?;
    if head != "transduction" || args.is_empty() {
        return Err(Error::parse(doc.line(), "expected `(transduction (signature ..) <step>..)`"));
    }
    let (sh, sig) = args[0].form()?;
    if sh != "signature" {
        return Err(Error::parse(args[0].line(), "expected `(signature (<name> <arity>)..)`"));
    }
    let mut input = Signature::new();
    for r in sig {
        let (name, a) = r.form()?;
        arity(r.line(), name, a, 1)?;
        input.insert(name.to_string(), number(r.line(), a[0].expect_atom("an arity")?, "arity")?);
    }
    let mut steps = Vec::new();
    for s in &args[1..] {
        let line = s.line();
        let (kind, a) = s.form()?;
        if a.is_empty() {
            return Err(Error::parse(line, "a step needs a label"));
        }
        let label = a[0].expect_atom("a step label")?;
        let step = match kind {
            "colour" => {
                arity(line, kind, a, 2)?;
                Step::Colouring(a[1].expect_atom("a relation name")?.to_string())
            }
            "filter" => {
                arity(line, kind, a, 2)?;
                Step::Filtering(formula_from_sexp(&a[1])?)
            }
            "restrict" => {
                arity(line, kind, a, 3)?;
                Step::UniverseRestriction(a[1].expect_atom("a variable")?.to_string(), formula_from_sexp(&a[2])?)
            }
            "interpret" => {
                let mut ds = Vec::new();
                for d in &a[1..] {
                    let (dh, da) = d.form()?;
                    if dh != "define" {
                        return Err(Error::parse(d.line(), "expected `(define <name> (<vars>) <formula>)`"));
                    }
                    arity(d.line(), dh, da, 3)?;
                    ds.push(Definition {
                        relation: da[0].expect_atom("a relation name")?.to_string(),
                        vars: names(da[1].expect_list("a variable list")?, "a variable")?,
                        formula: formula_from_sexp(&da[2])?,
                    });
                }
                Step::Interpretation(ds)
            }
            "copy" => Step::Copying,
            other => return Err(Error::parse(line, format!("unknown step `{other}`"))),
        };
        steps.push((line, Elementary::new(label, step)));
    }
    // report signature errors at the step that causes them
    let mut acc = Vec::new();
    for (line, e) in steps {
        acc.push(e);
        Transduction::new(input.clone(), acc.clone()).map_err(|err| Error::parse(line, err))?;
    }
    Ok(Transduction::new(input, acc)?)
}

/// `(witness (C1 1 2) (D0) ..)`: one unary relation per colouring.
pub fn parse_witness(text: &str, m: &Structure) -> Result<BTreeMap<String, BitSet>> {
    let doc = parse_one(text)?;
    let (head, rels) = doc.form()?;
    if head != "witness" {
        return Err(Error::parse(doc.line(), "expected `(witness (<name> <element>..)..)`"));
    }
    let mut out = BTreeMap::new();
    for r in rels {
        let (name, elems) = r.form()?;
        let mut s = BitSet::EMPTY;
        for e in elems {
            s.insert(element(m, e)?);
        }
        if out.insert(name.to_string(), s).is_some() {
            return Err(Error::parse(r.line(), format!("{name} given twice")));
        }
    }
    Ok(out)
}

pub fn write_witness(w: &BTreeMap<String, BitSet>, m: &Structure) -> String {
    let mut out = String::from("(witness");
    for (name, s) in w {
        write!(out, "\n  ({name}").unwrap();
        for x in s.iter() {
            write!(out, " {}", m.labels()[x]).unwrap();
        }
        out.push(')');
    }
    out.push_str(")\n");
    out
}
