//! Small hypergraphs shared by unit tests.

use alloc::vec;
use alloc::vec::Vec;

use proptest::prelude::*;

use crate::bitset::BitSet;
use crate::decomp::{EliminationForest, TreeDecomposition};
use crate::hypergraph::Hypergraph;

pub fn h0() -> Hypergraph {
    Hypergraph::from_edge_lists(&[&[1u32, 2][..], &[1, 3, 4], &[3, 5]]).unwrap()
}

/// v1 -> {v2, v3}, v3 -> {v4, v5}
pub fn f0() -> EliminationForest {
    EliminationForest::for_hypergraph(&h0(), vec![None, Some(0), Some(0), Some(2), Some(2)])
        .unwrap()
}

pub fn td0() -> TreeDecomposition {
    f0().induced_td(&h0())
}

pub fn k3() -> Hypergraph {
    Hypergraph::from_edge_lists(&[[1u32, 2], [2, 3], [1, 3]]).unwrap()
}

pub fn cycle(n: u32) -> Hypergraph {
    let edges: Vec<[u32; 2]> = (1..=n).map(|i| [i, i % n + 1]).collect();
    Hypergraph::from_edge_lists(&edges).unwrap()
}

pub fn path(n: u32) -> Hypergraph {
    let edges: Vec<[u32; 2]> = (1..n).map(|i| [i, i + 1]).collect();
    Hypergraph::from_edge_lists(&edges).unwrap()
}

pub fn set(vs: &[usize]) -> BitSet {
    vs.iter().copied().collect()
}

pub fn arb_instance(max_n: usize) -> impl Strategy<Value = (Hypergraph, Vec<usize>)> {
    (2usize..=max_n).prop_flat_map(|n| {
        (
            proptest::collection::vec(1u64..(1u64 << n), 1..=6),
            Just(n),
            Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
        )
            .prop_map(|(mut es, n, order)| {
                let covered = es.iter().fold(0, |a, e| a | e);
                for v in 0..n {
                    if covered >> v & 1 == 0 {
                        es.push(1 << v);
                    }
                }
                (
                    Hypergraph::new(n, es.into_iter().map(BitSet)).unwrap(),
                    order,
                )
            })
    })
}

pub fn forest_from_order(h: &Hypergraph, order: &[usize]) -> EliminationForest {
    EliminationForest::from_order(h, order).unwrap()
}
