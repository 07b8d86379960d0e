//! The `.hg` format: `p hg <n> <m>`, then `m` lines `e <v1> .. <vk>`.

use std::collections::BTreeSet;
use std::fmt::Write;

use hyperwidth_core::Hypergraph;

use crate::error::{Error, Result};

/// Lines that carry content, numbered from 1; `c` lines are comments.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let words: Vec<&str> = l.split_whitespace().collect();
        match words.first() {
            None | Some(&"c") => None,
            Some(_) => Some((i + 1, words)),
        }
    })
}

pub(crate) fn number<T: std::str::FromStr>(line: usize, w: &str, what: &str) -> Result<T> {
    w.parse()
        .map_err(|_| Error::parse(line, format!("{what} `{w}` is not a number")))
}

pub fn parse_hypergraph(text: &str) -> Result<Hypergraph> {
    let mut header: Option<(usize, usize, usize)> = None;
    let mut edges: Vec<Vec<u32>> = Vec::new();
    let mut seen = BTreeSet::new();
    let mut last = 0;
    for (line, w) in content_lines(text) {
        last = line;
        match w[0] {
            "p" => {
                if header.is_some() {
                    return Err(Error::parse(line, "second header"));
                }
                if w.len() != 4 || w[1] != "hg" {
                    return Err(Error::parse(line, "header must be `p hg <n> <m>`"));
                }
                header = Some((number(line, w[2], "n")?, number(line, w[3], "m")?, line));
            }
            "e" => {
                let Some((n, _, _)) = header else {
                    return Err(Error::parse(line, "edge before the header"));
                };
                if w.len() < 2 {
                    return Err(Error::parse(line, "empty edge"));
                }
                let mut e = Vec::new();
                for x in &w[1..] {
                    let v: u32 = number(line, x, "vertex")?;
                    if v == 0 || v as usize > n {
                        return Err(Error::parse(line, format!("vertex {v} outside 1..{n}")));
                    }
                    if !e.contains(&v) {
                        e.push(v);
                    }
                }
                let mut key = e.clone();
                key.sort_unstable();
                if !seen.insert(key) {
                    return Err(Error::parse(line, "duplicate edge"));
                }
                edges.push(e);
            }
            other => return Err(Error::parse(line, format!("unknown line type `{other}`"))),
        }
    }
    let Some((n, m, hline)) = header else {
        return Err(Error::parse(last.max(1), "missing header `p hg <n> <m>`"));
    };
    if edges.len() != m {
        return Err(Error::parse(last.max(hline), format!("header announces {m} edges, found {}", edges.len())));
    }
    let covered: BTreeSet<u32> = edges.iter().flatten().copied().collect();
    if let Some(v) = (1..=n as u32).find(|v| !covered.contains(v)) {
        return Err(Error::parse(hline, format!("vertex {v} is isolated")));
    }
    Ok(Hypergraph::from_edge_lists(&edges)?)
}

/// Edges in order, vertices by external label in index order.
pub fn write_hypergraph(h: &Hypergraph) -> String {
    let mut out = format!("p hg {} {}\n", h.num_vertices(), h.num_edges());
    for e in h.edges() {
        out.push('e');
        for v in e.iter() {
            write!(out, " {}", h.label(v)).unwrap();
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use hyperwidth_core::VertexSet;

    #[test]
    fn reads_k3_and_h0() {
        let k3 = parse_hypergraph("p hg 3 3\ne 1 2\ne 2 3\ne 1 3").unwrap();
        assert_eq!(k3.num_vertices(), 3);
        assert_eq!(k3.num_edges(), 3);
        let h0 = parse_hypergraph("c h0\np hg 5 3\ne 1 2\ne 1 3 4\ne 3 5\n").unwrap();
        assert_eq!(h0.rank(), 3);
        assert_eq!(h0.max_degree(), 2);
        let e: VertexSet = [0, 2, 3].into_iter().collect();
        assert!(h0.edges().contains(&e));
    }

    #[test]
    fn errors_name_the_line() {
        let err = |t: &str| match parse_hypergraph(t) {
            Err(Error::Parse { line, message }) => (line, message),
            other => panic!("{other:?}"),
        };
        assert_eq!(err("p hg 2 1\ne 1").1, "vertex 2 is isolated");
        assert_eq!(err("p hg 2 1\ne 1 3").0, 2);
        assert_eq!(err("e 1\np hg 1 1").0, 1);
        assert_eq!(err("p hg 2 2\ne 1 2\ne 2 1").0, 3);
        assert_eq!(err("p hg 2 1\ne").1, "empty edge");
        assert_eq!(err("p hg x 1\ne 1").0, 1);
        assert!(err("p hg 2 2\ne 1 2").1.contains("announces"));
    }

    #[test]
    fn vertex_order_is_first_occurrence() {
        let h = parse_hypergraph("p hg 3 2\ne 3 1\ne 1 2\n").unwrap();
        assert_eq!(h.labels(), &[3, 1, 2]);
        assert_eq!(write_hypergraph(&h), "p hg 3 2\ne 3 1\ne 1 2\n");
    }
}
