//! Formula builders: isomorphism type of an induced subhypergraph, bounded
//! width families, and "every bag of the forest has small width".

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::*;
use crate::budget::Budget;
use crate::error::Result;
use crate::hypergraph::Hypergraph;
use crate::rational::Rational;
use crate::widths::enumerate::{enumerate_bounded_hypergraphs, EnumerationOptions};
use crate::widths::WidthFunction;

/// How edges of `H(M)[U]` are matched against the edges of the pattern.
///
/// `Literal` picks one edge element of `M` per pattern edge and requires
/// the picks to be distinct elements. Two edges of `M` with the same trace
/// on `U` give one edge of `H(M)[U]` but two distinct elements, so the
/// literal form can be false on a `U` with the right induced subhypergraph.
/// `SameTrace` compares edges by their trace on `U`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PhiVariant {
    Literal,
    #[default]
    SameTrace,
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

/// `∀x (U(x) → Vertex(x))`
pub fn vertices(set: &str) -> Formula {
    tag(
        "Vertices",
        forall("x", implies(member("x", set), rel("Vertex", &["x"]))),
    )
}

pub fn all_diff(xs: &[String]) -> Formula {
    let mut cs = Vec::new();
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            cs.push(neq(&xs[i], &xs[j]));
        }
    }
    tag("AllDiff", and(cs))
}

pub fn is_set(set: &str, vs: &[String]) -> Formula {
    let all_in = tag("AllIn", and(vs.iter().map(|v| member(v, set)).collect()));
    let none_else = tag(
        "NoneElse",
        forall(
            "u",
            implies(
                member("u", set),
                or(vs.iter().map(|v| eq("u", v)).collect()),
            ),
        ),
    );
    tag("IsSet", and(vec![all_in, none_else, all_diff(vs)]))
}

/// `∃u (U(u) ∧ Adjacent(u, e))`
pub fn intersect(set: &str, e: &str) -> Formula {
    tag(
        "Intersect",
        exists("u", and(vec![member("u", set), rel("Adjacent", &["u", e])])),
    )
}

/// `e` and `e'` have the same trace on `U`.
pub fn same_trace(set: &str, e: &str, f: &str) -> Formula {
    tag(
        "SameTrace",
        forall(
            "x",
            implies(
                member("x", set),
                iff(rel("Adjacent", &["x", e]), rel("Adjacent", &["x", f])),
            ),
        ),
    )
}

pub fn are_edges(set: &str, es: &[String], variant: PhiVariant) -> Formula {
    let all = tag(
        "AllIntersect",
        and(es.iter().map(|e| intersect(set, e)).collect()),
    );
    let (none_else, diff) = match variant {
        PhiVariant::Literal => (
            forall(
                "e",
                implies(
                    intersect(set, "e"),
                    or(es.iter().map(|x| eq("e", x)).collect()),
                ),
            ),
            all_diff(es),
        ),
        PhiVariant::SameTrace => {
            let mut cs = Vec::new();
            for i in 0..es.len() {
                for j in i + 1..es.len() {
                    cs.push(not(same_trace(set, &es[i], &es[j])));
                }
            }
            (
                forall(
                    "e",
                    implies(
                        and(vec![rel("Edge", &["e"]), intersect(set, "e")]),
                        or(es.iter().map(|x| same_trace(set, "e", x)).collect()),
                    ),
                ),
                tag("AllDiff", and(cs)),
            )
        }
    };
    tag(
        "AreEdges",
        and(vec![all, tag("NoneElseInter", none_else), diff]),
    )
}

pub fn incidence(h: &Hypergraph, vs: &[String], es: &[String]) -> Formula {
    let mut cs = Vec::new();
    for (j, e) in h.edges().iter().enumerate() {
        for (i, v) in vs.iter().enumerate() {
            let a = rel("Adjacent", &[v, &es[j]]);
            cs.push(if e.contains(i) { a } else { not(a) });
        }
    }
    tag("Incidence", and(cs))
}

/// True on `U` exactly when `H(M)[U]` is isomorphic to `h`.
pub fn phi_h(h: &Hypergraph, set: &str, variant: PhiVariant) -> Formula {
    let vs = names("v", h.num_vertices());
    let es = names("e", h.num_edges());
    let vars: Vec<String> = vs.iter().chain(&es).cloned().collect();
    let body = and(vec![
        is_set(set, &vs),
        are_edges(set, &es, variant),
        incidence(h, &vs, &es),
    ]);
    tag("phi_H", and(vec![vertices(set), exists_many(&vars, body)]))
}

/// Disjunction of `phi_h` over the family; `false` for an empty family.
pub fn phi_family(family: &[Hypergraph], set: &str, variant: PhiVariant) -> Formula {
    if family.is_empty() {
        return Formula::False;
    }
    tag(
        "phi_family",
        or(family.iter().map(|h| phi_h(h, set, variant)).collect()),
    )
}

/// `∃e (Edge(e) ∧ Adjacent(v, e) ∧ Adjacent(w, e))`
pub fn neighb(v: &str, w: &str) -> Formula {
    tag(
        "Neighb",
        exists(
            "e",
            and(vec![
                rel("Edge", &["e"]),
                rel("Adjacent", &[v, "e"]),
                rel("Adjacent", &[w, "e"]),
            ]),
        ),
    )
}

/// `b` lies in the subtree of `a` along `Child`, reflexively.
pub fn descendant(a: &str, b: &str) -> Formula {
    tag("Descendant", reach("Child", a, b))
}

/// The same relation with set quantification only: `b` is in every
/// `Child`-closed set containing `a`.
pub fn descendant_mso(a: &str, b: &str) -> Formula {
    let closed = forall(
        "p",
        forall(
            "c",
            implies(
                and(vec![member("p", "Z"), rel("Child", &["p", "c"])]),
                member("c", "Z"),
            ),
        ),
    );
    tag(
        "Descendant",
        forall_set(
            "Z",
            implies(and(vec![member(a, "Z"), closed]), member(b, "Z")),
        ),
    )
}

/// `U` is the bag of `u` in `F(M)`.
pub fn is_bag(u: &str, set: &str) -> Formula {
    let theta = or(vec![
        eq(u, "v"),
        and(vec![
            rel("Vertex", &["v"]),
            descendant("v", u),
            exists("w", and(vec![descendant(u, "w"), neighb("v", "w")])),
        ]),
    ]);
    tag("IsBag", forall("v", iff(member("v", set), theta)))
}

/// `∀u (Vertex(u) → ∃U (IsBag(u, U) ∧ φ_family(U)))`
pub fn phi_star_for_family(family: &[Hypergraph], variant: PhiVariant) -> Formula {
    tag(
        "phi_star",
        forall(
            "u",
            implies(
                rel("Vertex", &["u"]),
                exists_set(
                    "U",
                    and(vec![is_bag("u", "U"), phi_family(family, "U", variant)]),
                ),
            ),
        ),
    )
}

/// How the family behind `phi_star` was obtained.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FamilySource {
    /// All hypergraphs of rank at most `r` with at most `beta(k, r)` vertices and width at most `k`.
    Bounded,
    /// Induced subhypergraphs of one input hypergraph with width at most `k`.
    Local,
}

pub struct PhiStar {
    pub formula: Formula,
    pub family: Vec<Hypergraph>,
    pub source: FamilySource,
}

/// The sentence "every bag of `F(M)` has `f`-width at most `k`" for rank `r`.
pub fn phi_star(f: &dyn WidthFunction, k: &Rational, r: usize, budget: &Budget) -> Result<PhiStar> {
    let opts = EnumerationOptions {
        include_empty: false,
        budget: *budget,
    };
    let family = enumerate_bounded_hypergraphs(f, k, r, &opts)?;
    Ok(PhiStar {
        formula: phi_star_for_family(&family, PhiVariant::default()),
        family,
        source: FamilySource::Bounded,
    })
}

/// Isomorphism classes of `h[U]` for non-empty `U` with `f(U) <= k`.
/// A bag of a forest of `h` induces one of these whenever its width is at
/// most `k`, so on structures for `h` this family decides the same thing as
/// the bounded one.
pub fn local_family(
    h: &Hypergraph,
    f: &dyn WidthFunction,
    k: &Rational,
    budget: &Budget,
) -> Result<Vec<Hypergraph>> {
    crate::error::cap(
        "vertices for a local family",
        h.num_vertices(),
        budget.canonical_vertices,
    )?;
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for u in h.vertices().subsets().filter(|u| !u.is_empty()) {
        if f.evaluate(h, u) > *k {
            continue;
        }
        let g = h.induced(u)?.hypergraph;
        if seen.insert(g.canonical_form(budget.canonical_vertices)?) {
            out.push(g);
        }
    }
    Ok(out)
}

pub fn phi_star_local(
    h: &Hypergraph,
    f: &dyn WidthFunction,
    k: &Rational,
    budget: &Budget,
) -> Result<PhiStar> {
    let family = local_family(h, f, k, budget)?;
    Ok(PhiStar {
        formula: phi_star_for_family(&family, PhiVariant::default()),
        family,
        source: FamilySource::Local,
    })
}

#[cfg(test)]
mod tests {
    use super::super::structure::{decode_hypergraph, encode_ef, encode_td};
    use super::*;
    use crate::bitset::BitSet;
    use crate::decomp::EliminationForest;
    use crate::fixtures::*;
    use crate::rational::int;
    use crate::widths::Width;
    use proptest::prelude::*;

    fn unary_edge() -> Hypergraph {
        Hypergraph::from_edge_lists(&[[1u32]]).unwrap()
    }

    /// `H(M)[U]` restricted to the vertices of `U`; `None` if `U` has non-vertices.
    fn induced_of(m: &Structure, u: BitSet) -> Option<Hypergraph> {
        let (h, verts) = decode_hypergraph(m).unwrap();
        if !u.is_subset(m.unary("Vertex")) {
            return None;
        }
        let local: BitSet = verts
            .iter()
            .enumerate()
            .filter(|(_, &x)| u.contains(x))
            .map(|(i, _)| i)
            .collect();
        Some(h.induced(local).unwrap().hypergraph)
    }

    fn models() -> Vec<Structure> {
        let star = Hypergraph::from_edge_lists(&[&[1u32, 2][..], &[1, 3], &[1, 2, 3]]).unwrap();
        let twin = Hypergraph::from_edge_lists(&[&[1u32, 2][..], &[1, 2, 3]]).unwrap();
        let mut out = vec![
            encode_ef(&h0(), &f0()).unwrap(),
            encode_ef(
                &k3(),
                &EliminationForest::new(vec![None, Some(0), Some(1)]).unwrap(),
            )
            .unwrap(),
            encode_ef(
                &cycle(4),
                &EliminationForest::new(vec![None, Some(0), Some(1), Some(2)]).unwrap(),
            )
            .unwrap(),
            encode_ef(
                &twin,
                &EliminationForest::new(vec![None, Some(0), Some(1)]).unwrap(),
            )
            .unwrap(),
            encode_ef(
                &star,
                &EliminationForest::new(vec![None, Some(0), Some(1)]).unwrap(),
            )
            .unwrap(),
        ];
        out.retain(|m| m.size() <= 8);
        out
    }

    fn check_phi_h(h: &Hypergraph, m: &Structure) {
        let phi = phi_h(h, "U", PhiVariant::SameTrace);
        let b = Budget::default();
        let e = Evaluator::new(m, &b);
        for u in m.universe().subsets() {
            let got = e.evaluate(&phi, &Assignment::new().set("U", u)).unwrap();
            let want = induced_of(m, u)
                .is_some_and(|g| g.num_vertices() > 0 && g.is_isomorphic(h, 8).unwrap());
            assert_eq!(got, want, "{h:?} on U = {u:?}");
        }
    }

    #[test]
    fn phi_h_matches_isomorphism() {
        let patterns = [
            unary_edge(),
            k3(),
            path(2),
            path(3),
            Hypergraph::from_edge_lists(&[&[1u32, 2][..], &[1]]).unwrap(),
            Hypergraph::from_edge_lists(&[[1u32, 2, 3]]).unwrap(),
        ];
        for m in models() {
            for h in &patterns {
                check_phi_h(h, &m);
            }
        }
    }

    #[test]
    fn literal_variant_misses_equal_traces() {
        // two edges {1,2} and {1,3} both trace to {1} on U = {1}
        let m = encode_ef(&h0(), &f0()).unwrap();
        let u = BitSet::singleton(0);
        let a = Assignment::new().set("U", u);
        let b = Budget::default();
        assert!(!evaluate(&m, &phi_h(&unary_edge(), "U", PhiVariant::Literal), &a, &b).unwrap());
        assert!(evaluate(
            &m,
            &phi_h(&unary_edge(), "U", PhiVariant::SameTrace),
            &a,
            &b
        )
        .unwrap());
        assert!(induced_of(&m, u)
            .unwrap()
            .is_isomorphic(&unary_edge(), 8)
            .unwrap());
    }

    #[test]
    fn vertices_guard() {
        let m = encode_ef(
            &k3(),
            &EliminationForest::new(vec![None, Some(0), Some(1)]).unwrap(),
        )
        .unwrap();
        let a = Assignment::new().set("U", BitSet::singleton(0).with(3));
        assert!(!evaluate(
            &m,
            &phi_h(&unary_edge(), "U", PhiVariant::SameTrace),
            &a,
            &Budget::default()
        )
        .unwrap());
    }

    #[test]
    fn family_formulas() {
        let m = encode_ef(&h0(), &f0()).unwrap();
        let b = Budget::default();
        let e = Evaluator::new(&m, &b);
        let fam =
            enumerate_bounded_hypergraphs(&Width::Ghw, &int(1), 2, &EnumerationOptions::default())
                .unwrap();
        let phi = phi_family(&fam, "U", PhiVariant::SameTrace);
        let (h, _) = decode_hypergraph(&m).unwrap();
        for u in m.unary("Vertex").subsets() {
            let got = e.evaluate(&phi, &Assignment::new().set("U", u)).unwrap();
            // rank of H0 is 3, so only traces of rank <= 2 can match the family
            let g = h.induced(u).unwrap().hypergraph;
            let want = !u.is_empty() && g.rank() <= 2 && Width::Ghw.evaluate(&h, u) <= int(1);
            assert_eq!(got, want, "{u:?}");
            assert!(!e
                .evaluate(
                    &phi_family(&[], "U", PhiVariant::SameTrace),
                    &Assignment::new().set("U", u)
                )
                .unwrap());
        }
        let k = phi_family(&[k3()], "U", PhiVariant::SameTrace);
        for u in m.universe().subsets() {
            let a = Assignment::new().set("U", u);
            assert_eq!(
                e.evaluate(&k, &a).unwrap(),
                e.evaluate(&phi_h(&k3(), "U", PhiVariant::SameTrace), &a)
                    .unwrap()
            );
        }
    }

    #[test]
    fn rho_family_of_rank_two_on_cycle() {
        let m = encode_ef(
            &cycle(4),
            &EliminationForest::new(vec![None, Some(0), Some(1), Some(2)]).unwrap(),
        )
        .unwrap();
        let b = Budget::default();
        let fam =
            enumerate_bounded_hypergraphs(&Width::Ghw, &int(1), 2, &EnumerationOptions::default())
                .unwrap();
        let phi = phi_family(&fam, "U", PhiVariant::SameTrace);
        for u in m.unary("Vertex").subsets() {
            let got = evaluate(&m, &phi, &Assignment::new().set("U", u), &b).unwrap();
            assert_eq!(
                got,
                !u.is_empty() && Width::Ghw.evaluate(&cycle(4), u) <= int(1),
                "{u:?}"
            );
        }
    }

    #[test]
    fn is_bag_defines_forest_bags() {
        let (h, f) = (h0(), f0());
        let m = encode_ef(&h, &f).unwrap();
        let b = Budget::default();
        let e = Evaluator::new(&m, &b);
        for u in 0..h.num_vertices() {
            for set in m.unary("Vertex").subsets() {
                let a = Assignment::new().element("u", u).set("U", set);
                assert_eq!(
                    e.evaluate(&is_bag("u", "U"), &a).unwrap(),
                    set == f.bag(&h, u)
                );
            }
        }
    }

    #[test]
    fn phi_star_examples() {
        let b = Budget::default();
        let ev = |h: &Hypergraph, f: &EliminationForest, k: i64| {
            let m = encode_ef(h, f).unwrap();
            let p = phi_star(&Width::Ghw, &int(k), h.rank(), &b).unwrap();
            evaluate(&m, &p.formula, &Assignment::new(), &b).unwrap()
        };
        assert!(ev(&h0(), &f0(), 1));
        assert!(!ev(&h0(), &f0(), 0));
        let line = EliminationForest::new(vec![None, Some(0), Some(1)]).unwrap();
        assert!(!ev(&k3(), &line, 1));
        assert!(ev(&k3(), &line, 2));
    }

    #[test]
    fn descendant_forms_agree_on_h0() {
        let m = encode_ef(&h0(), &f0()).unwrap();
        let b = Budget::default();
        let e = Evaluator::new(&m, &b);
        for x in 0..5 {
            for y in 0..5 {
                let a = Assignment::new().element("a", x).element("b", y);
                let d = e.evaluate(&descendant("a", "b"), &a).unwrap();
                assert_eq!(d, e.evaluate(&descendant_mso("a", "b"), &a).unwrap());
                assert_eq!(d, f0().is_ancestor(x, y));
            }
        }
    }

    #[test]
    fn td_structures_support_phi_h() {
        let m = encode_td(&h0(), &td0()).unwrap();
        let restricted = m.restrict(m.unary("Vertex") | m.unary("Edge"));
        let b = Budget::default();
        // traces {v3} and {v3, v5}
        let a = Assignment::new().set("U", BitSet::singleton(2).with(4));
        let pattern = Hypergraph::from_edge_lists(&[&[1u32, 2][..], &[1]]).unwrap();
        assert!(evaluate(
            &restricted,
            &phi_h(&pattern, "U", PhiVariant::SameTrace),
            &a,
            &b
        )
        .unwrap());
        assert!(!evaluate(
            &restricted,
            &phi_h(&path(2), "U", PhiVariant::SameTrace),
            &a,
            &b
        )
        .unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn phi_star_decides_forest_width((h, order) in arb_instance(5), k in 1i64..3) {
            let f = forest_from_order(&h, &order);
            prop_assume!(h.num_vertices() + h.num_edges() <= 12);
            let b = Budget::default();
            let m = encode_ef(&h, &f).unwrap();
            let cache = crate::widths::WidthCache::new(&Width::Ghw, &h);
            let want = f.fwidth(&h, &cache) <= int(k);
            let r = h.rank();
            let p = phi_star(&Width::Ghw, &int(k), r, &b);
            if let Ok(p) = p {
                prop_assert_eq!(evaluate(&m, &p.formula, &Assignment::new(), &b).unwrap(), want);
            }
            let local = phi_star_local(&h, &Width::Ghw, &int(k), &b).unwrap();
            prop_assert_eq!(evaluate(&m, &local.formula, &Assignment::new(), &b).unwrap(), want);
        }
    }
}
