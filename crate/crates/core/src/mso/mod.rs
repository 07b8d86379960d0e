//! Monadic second-order logic over finite relational structures.

pub mod build;
pub mod eval;
pub mod structure;

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

pub use eval::{evaluate, Assignment, Compiled, Evaluator};
pub use structure::Structure;

/// First-order variables range over elements, set variables over subsets.
/// Variables are referred to by name; binders shadow.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    False,
    Rel(String, Vec<String>),
    Eq(String, String),
    /// Element variable, set variable.
    In(String, String),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Exists1(String, Box<Formula>),
    Forall1(String, Box<Formula>),
    ExistsSet(String, Box<Formula>),
    ForallSet(String, Box<Formula>),
    /// `(rel, x, y)`: `y` is reachable from `x` along the binary relation, reflexively.
    Reach(String, String, String),
    /// `(k0, k1, x, y)`: in the decomposition tree restricted to `k0`, with
    /// the parent edges of `k1` removed, `mn(x)` and `mn(y)` share a component.
    MnComponent(String, String, String, String),
    /// `(c, k0, k1)`: `u -> component of mn(u)` is a bijection from `c` onto
    /// the components of the same forest.
    MnBijection(String, String, String),
    /// Construction label; no effect on truth or size.
    Tagged(String, Box<Formula>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Sort {
    Element,
    Set,
}

pub fn rel(name: &str, args: &[&str]) -> Formula {
    Formula::Rel(name.into(), args.iter().map(|a| a.to_string()).collect())
}

pub fn eq(x: &str, y: &str) -> Formula {
    Formula::Eq(x.into(), y.into())
}

pub fn neq(x: &str, y: &str) -> Formula {
    not(eq(x, y))
}

pub fn member(x: &str, set: &str) -> Formula {
    Formula::In(x.into(), set.into())
}

pub fn not(f: Formula) -> Formula {
    Formula::Not(Box::new(f))
}

pub fn and(fs: Vec<Formula>) -> Formula {
    Formula::And(fs)
}

pub fn or(fs: Vec<Formula>) -> Formula {
    Formula::Or(fs)
}

pub fn implies(a: Formula, b: Formula) -> Formula {
    Formula::Implies(Box::new(a), Box::new(b))
}

pub fn iff(a: Formula, b: Formula) -> Formula {
    Formula::Iff(Box::new(a), Box::new(b))
}

pub fn exists(x: &str, f: Formula) -> Formula {
    Formula::Exists1(x.into(), Box::new(f))
}

pub fn forall(x: &str, f: Formula) -> Formula {
    Formula::Forall1(x.into(), Box::new(f))
}

/// `∃x1 … ∃xn f`, innermost last.
pub fn exists_many<S: AsRef<str>>(xs: &[S], f: Formula) -> Formula {
    xs.iter().rev().fold(f, |acc, x| exists(x.as_ref(), acc))
}

pub fn exists_set(x: &str, f: Formula) -> Formula {
    Formula::ExistsSet(x.into(), Box::new(f))
}

pub fn forall_set(x: &str, f: Formula) -> Formula {
    Formula::ForallSet(x.into(), Box::new(f))
}

pub fn reach(relation: &str, x: &str, y: &str) -> Formula {
    Formula::Reach(relation.into(), x.into(), y.into())
}

pub fn tag(name: &str, f: Formula) -> Formula {
    Formula::Tagged(name.into(), Box::new(f))
}

impl Formula {
    /// Symbol count: an atom counts its relation symbol and arguments,
    /// a connective or quantifier one plus its bound variable.
    pub fn size(&self) -> usize {
        use Formula::*;
        match self {
            True | False => 1,
            Rel(_, args) => 1 + args.len(),
            Eq(..) | In(..) => 3,
            Not(f) => 1 + f.size(),
            And(fs) | Or(fs) => 1 + fs.iter().map(Formula::size).sum::<usize>(),
            Implies(a, b) | Iff(a, b) => 1 + a.size() + b.size(),
            Exists1(_, f) | Forall1(_, f) | ExistsSet(_, f) | ForallSet(_, f) => 2 + f.size(),
            Reach(..) => 4,
            MnComponent(..) => 5,
            MnBijection(..) => 4,
            Tagged(_, f) => f.size(),
        }
    }

    /// Free variables with their sorts.
    pub fn free_variables(&self) -> BTreeSet<(String, Sort)> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<(String, Sort)>, out: &mut BTreeSet<(String, Sort)>) {
        use Formula::*;
        let mut note = |x: &String, s: Sort, bound: &Vec<(String, Sort)>| {
            if !bound.iter().any(|(b, bs)| b == x && *bs == s) {
                out.insert((x.clone(), s));
            }
        };
        match self {
            True | False => {}
            Rel(_, args) => args.iter().for_each(|a| note(a, Sort::Element, bound)),
            Eq(x, y) | Reach(_, x, y) => {
                note(x, Sort::Element, bound);
                note(y, Sort::Element, bound);
            }
            In(x, s) => {
                note(x, Sort::Element, bound);
                note(s, Sort::Set, bound);
            }
            MnComponent(k0, k1, x, y) => {
                note(k0, Sort::Set, bound);
                note(k1, Sort::Set, bound);
                note(x, Sort::Element, bound);
                note(y, Sort::Element, bound);
            }
            MnBijection(c, k0, k1) => {
                for s in [c, k0, k1] {
                    note(s, Sort::Set, bound);
                }
            }
            Not(f) | Tagged(_, f) => f.collect_free(bound, out),
            And(fs) | Or(fs) => fs.iter().for_each(|f| f.collect_free(bound, out)),
            Implies(a, b) | Iff(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Exists1(x, f) | Forall1(x, f) => {
                bound.push((x.clone(), Sort::Element));
                f.collect_free(bound, out);
                bound.pop();
            }
            ExistsSet(x, f) | ForallSet(x, f) => {
                bound.push((x.clone(), Sort::Set));
                f.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_variables().is_empty()
    }

    /// Relation names used, with arities (binary for `Reach`).
    pub fn relations(&self) -> BTreeSet<(String, usize)> {
        let mut out = BTreeSet::new();
        self.walk(&mut |f| match f {
            Formula::Rel(r, args) => {
                out.insert((r.clone(), args.len()));
            }
            Formula::Reach(r, ..) => {
                out.insert((r.clone(), 2));
            }
            _ => {}
        });
        out
    }

    fn walk(&self, visit: &mut dyn FnMut(&Formula)) {
        use Formula::*;
        visit(self);
        match self {
            Not(f)
            | Tagged(_, f)
            | Exists1(_, f)
            | Forall1(_, f)
            | ExistsSet(_, f)
            | ForallSet(_, f) => f.walk(visit),
            And(fs) | Or(fs) => fs.iter().for_each(|f| f.walk(visit)),
            Implies(a, b) | Iff(a, b) => {
                a.walk(visit);
                b.walk(visit);
            }
            _ => {}
        }
    }

    /// Top-level conjuncts, looking through nested `And`s and tags.
    pub fn conjuncts(&self) -> Vec<&Formula> {
        match self {
            Formula::And(fs) => fs.iter().flat_map(Formula::conjuncts).collect(),
            Formula::Tagged(_, g) => g.conjuncts(),
            other => alloc::vec![other],
        }
    }

    /// Uses `MnComponent` or `MnBijection`, which read `Node`, `Bag` and `Descendant`.
    pub fn uses_decomposition_atoms(&self) -> bool {
        let mut found = false;
        self.walk(&mut |f| {
            found |= matches!(f, Formula::MnComponent(..) | Formula::MnBijection(..))
        });
        found
    }

    /// Same formula with all tags removed.
    pub fn untagged(&self) -> Formula {
        use Formula::*;
        match self {
            Tagged(_, f) => f.untagged(),
            Not(f) => not(f.untagged()),
            And(fs) => And(fs.iter().map(Formula::untagged).collect()),
            Or(fs) => Or(fs.iter().map(Formula::untagged).collect()),
            Implies(a, b) => implies(a.untagged(), b.untagged()),
            Iff(a, b) => iff(a.untagged(), b.untagged()),
            Exists1(x, f) => Exists1(x.clone(), Box::new(f.untagged())),
            Forall1(x, f) => Forall1(x.clone(), Box::new(f.untagged())),
            ExistsSet(x, f) => ExistsSet(x.clone(), Box::new(f.untagged())),
            ForallSet(x, f) => ForallSet(x.clone(), Box::new(f.untagged())),
            other => other.clone(),
        }
    }
}

/// S-expression form, e.g. `(forall1 u (imp (rel Vertex u) true))`.
impl fmt::Display for Formula {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Formula::*;
        match self {
            True => write!(out, "true"),
            False => write!(out, "false"),
            Rel(r, args) => {
                write!(out, "(rel {r}")?;
                for a in args {
                    write!(out, " {a}")?;
                }
                write!(out, ")")
            }
            Eq(x, y) => write!(out, "(eq {x} {y})"),
            In(x, s) => write!(out, "(in {x} {s})"),
            Not(f) => write!(out, "(not {f})"),
            And(fs) | Or(fs) => {
                write!(
                    out,
                    "({}",
                    if matches!(self, And(_)) { "and" } else { "or" }
                )?;
                for f in fs {
                    write!(out, " {f}")?;
                }
                write!(out, ")")
            }
            Implies(a, b) => write!(out, "(imp {a} {b})"),
            Iff(a, b) => write!(out, "(iff {a} {b})"),
            Exists1(x, f) => write!(out, "(exists1 {x} {f})"),
            Forall1(x, f) => write!(out, "(forall1 {x} {f})"),
            ExistsSet(x, f) => write!(out, "(existsS {x} {f})"),
            ForallSet(x, f) => write!(out, "(forallS {x} {f})"),
            Reach(r, x, y) => write!(out, "(reach {r} {x} {y})"),
            MnComponent(k0, k1, x, y) => write!(out, "(mncomp {k0} {k1} {x} {y})"),
            MnBijection(c, k0, k1) => write!(out, "(mnbij {c} {k0} {k1})"),
            Tagged(t, f) => write!(out, "(tag {t} {f})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::vec;

    #[test]
    fn free_variables_respect_binders() {
        let f = exists(
            "x",
            and(vec![
                rel("Vertex", &["x"]),
                member("y", "U"),
                forall("y", eq("x", "y")),
            ]),
        );
        let fv: Vec<_> = f.free_variables().into_iter().collect();
        assert_eq!(fv, [("U".into(), Sort::Set), ("y".into(), Sort::Element)]);
        assert!(forall_set("U", exists("y", member("y", "U"))).is_closed());
    }

    #[test]
    fn size_ignores_tags() {
        let f = exists("x", rel("Edge", &["x"]));
        assert_eq!(f.size(), 4);
        assert_eq!(tag("t", f.clone()).size(), f.size());
        assert_eq!(and(vec![]).size(), 1);
    }

    #[test]
    fn prints_as_sexp() {
        let f = forall(
            "u",
            implies(rel("Vertex", &["u"]), exists_set("U", member("u", "U"))),
        );
        assert_eq!(
            format!("{f}"),
            "(forall1 u (imp (rel Vertex u) (existsS U (in u U))))"
        );
    }
}
