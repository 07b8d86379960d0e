//! The bundled corpus: cycles C3-C6, small grids, the five-vertex
//! example H0, and random instances of rank and degree at most 3 drawn
//! from fixed seeds.

use std::path::Path;

use hyperwidth_core::Hypergraph;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::formats::{parse_hypergraph, write_hypergraph};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub name: String,
    pub hypergraph: Hypergraph,
}

pub fn cycle(n: usize) -> Hypergraph {
    let edges: Vec<[u32; 2]> = (1..=n as u32).map(|i| [i, i % n as u32 + 1]).collect();
    Hypergraph::from_edge_lists(&edges).unwrap()
}

pub fn grid(rows: usize, cols: usize) -> Hypergraph {
    let id = |r: usize, c: usize| (r * cols + c + 1) as u32;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push([id(r, c), id(r, c + 1)]);
            }
            if r + 1 < rows {
                edges.push([id(r, c), id(r + 1, c)]);
            }
        }
    }
    Hypergraph::from_edge_lists(&edges).unwrap()
}

/// `e1 = {1,2}`, `e2 = {1,3,4}`, `e3 = {3,5}`.
pub fn h0() -> Hypergraph {
    let edges: [&[u32]; 3] = [&[1, 2], &[1, 3, 4], &[3, 5]];
    Hypergraph::from_edge_lists(&edges).unwrap()
}

/// A hypergraph on `n` vertices with rank and degree at most 3. Edges are
/// grown around uncovered vertices first, then a few extra are added.
pub fn random_bounded(n: usize, seed: u64) -> Hypergraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = n + rng.gen_range(0..=1);
    let mut degree = vec![0usize; n];
    let mut edges: Vec<Vec<u32>> = Vec::new();
    let mut stalls = 0;
    loop {
        let uncovered: Vec<usize> = (0..n).filter(|&v| degree[v] == 0).collect();
        if uncovered.is_empty() && (edges.len() >= target || stalls > 50) {
            break;
        }
        let v = match uncovered.first() {
            Some(&v) => v,
            None => rng.gen_range(0..n),
        };
        if degree[v] >= 3 {
            stalls += 1;
            continue;
        }
        let size = rng.gen_range(2..=3usize);
        let mut others: Vec<usize> = (0..n).filter(|&u| u != v && degree[u] < 3).collect();
        others.shuffle(&mut rng);
        let mut e: Vec<u32> = std::iter::once(v).chain(others.into_iter().take(size - 1)).map(|u| u as u32 + 1).collect();
        e.sort_unstable();
        if edges.contains(&e) {
            stalls += 1;
            continue;
        }
        for &u in &e {
            degree[u as usize - 1] += 1;
        }
        edges.push(e);
    }
    // relabel in first-occurrence order so the file reads naturally
    let mut order: Vec<u32> = Vec::new();
    for e in &edges {
        for &v in e {
            if !order.contains(&v) {
                order.push(v);
            }
        }
    }
    let relabel = |v: u32| order.iter().position(|&x| x == v).unwrap() as u32 + 1;
    let edges: Vec<Vec<u32>> = edges.iter().map(|e| e.iter().map(|&v| relabel(v)).collect()).collect();
    Hypergraph::from_edge_lists(&edges).unwrap()
}

/// `(vertex count, seed)` of the random instances.
pub const RANDOM: [(usize, u64); 8] = [(4, 11), (4, 12), (5, 21), (5, 22), (5, 23), (6, 31), (6, 32), (7, 41)];

pub fn builtin() -> Vec<Instance> {
    let mut out = Vec::new();
    let mut add = |name: String, hypergraph: Hypergraph| out.push(Instance { name, hypergraph });
    for n in 3..=6 {
        add(format!("c{n}"), cycle(n));
    }
    for (r, c) in [(2, 3), (2, 4)] {
        add(format!("grid-{r}x{c}"), grid(r, c));
    }
    add("h0".into(), h0());
    for (n, seed) in RANDOM {
        add(format!("random-n{n}-s{seed}"), random_bounded(n, seed));
    }
    out
}

/// Writes `<name>.hg` for every built-in instance.
pub fn write_dir(dir: &Path) -> Result<Vec<String>> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.display().to_string(), source })?;
    let mut written = Vec::new();
    for inst in builtin() {
        let path = dir.join(format!("{}.hg", inst.name));
        let text = format!("c {}\n{}", inst.name, write_hypergraph(&inst.hypergraph));
        std::fs::write(&path, text).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        written.push(path.display().to_string());
    }
    Ok(written)
}

/// Every `.hg` file of `dir`, by file name.
pub fn load_dir(dir: &Path) -> Result<Vec<Instance>> {
    let io = |source| Error::Io { path: dir.display().to_string(), source };
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(io)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()
        .map_err(io)?;
    paths.retain(|p| p.extension().is_some_and(|x| x == "hg"));
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let text = std::fs::read_to_string(&p).map_err(|source| Error::Io { path: p.display().to_string(), source })?;
            let hypergraph = parse_hypergraph(&text).map_err(|e| Error::Usage(format!("{}: {e}", p.display())))?;
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            Ok(Instance { name, hypergraph })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes() {
        assert_eq!(cycle(5).num_edges(), 5);
        let g = grid(2, 3);
        assert_eq!((g.num_vertices(), g.num_edges()), (6, 7));
        let h = h0();
        assert_eq!((h.rank(), h.max_degree()), (3, 2));
    }

    #[test]
    fn random_instances_respect_rank_and_degree() {
        for (n, seed) in RANDOM {
            let h = random_bounded(n, seed);
            assert_eq!(h.num_vertices(), n);
            assert!(h.rank() <= 3 && h.max_degree() <= 3, "{n} {seed}");
            assert_eq!(random_bounded(n, seed), h);
        }
    }

    #[test]
    fn names_are_unique() {
        let b = builtin();
        let names: std::collections::BTreeSet<_> = b.iter().map(|i| i.name.clone()).collect();
        assert_eq!(names.len(), b.len());
    }
}
