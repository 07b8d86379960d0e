//! The `.ef` format: `s ef <n>`, then one line `<v> <parent>` per vertex,
//! with parent `0` for roots.

use std::fmt::Write;

use hyperwidth_core::decomp::EliminationForest;
use hyperwidth_core::Hypergraph;

use super::hg::{content_lines, number};
use super::td::vertex;
use crate::error::{Error, Result};

pub fn parse_forest(text: &str, h: &Hypergraph) -> Result<EliminationForest> {
    let mut header = None;
    let mut parent: Vec<Option<Option<usize>>> = vec![None; h.num_vertices()];
    let mut last = 1;
    for (line, w) in content_lines(text) {
        last = line;
        if w[0] == "s" {
            if header.is_some() {
                return Err(Error::parse(line, "second header"));
            }
            if w.len() != 3 || w[1] != "ef" {
                return Err(Error::parse(line, "header must be `s ef <n>`"));
            }
            let n: usize = number(line, w[2], "n")?;
            if n != h.num_vertices() {
                return Err(Error::parse(line, format!("forest is for {n} vertices, the hypergraph has {}", h.num_vertices())));
            }
            header = Some(line);
            continue;
        }
        if header.is_none() {
            return Err(Error::parse(line, "content before the header"));
        }
        if w.len() != 2 {
            return Err(Error::parse(line, "expected `<vertex> <parent>`"));
        }
        let v = vertex(h, line, w[0])?;
        let p = match w[1] {
            "0" => None,
            x => Some(vertex(h, line, x)?),
        };
        if parent[v].is_some() {
            return Err(Error::parse(line, format!("second parent for vertex {}", w[0])));
        }
        parent[v] = Some(p);
    }
    if header.is_none() {
        return Err(Error::parse(last, "missing header `s ef <n>`"));
    }
    if let Some(v) = parent.iter().position(Option::is_none) {
        return Err(Error::parse(last, format!("vertex {} has no parent line", h.label(v))));
    }
    Ok(EliminationForest::for_hypergraph(h, parent.into_iter().flatten().collect())?)
}

pub fn write_forest(f: &EliminationForest, h: &Hypergraph) -> String {
    let mut out = format!("s ef {}\n", f.len());
    for v in 0..f.len() {
        let p = f.parent(v).map_or(0, |p| h.label(p));
        writeln!(out, "{} {}", h.label(v), p).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::hg::parse_hypergraph;

    #[test]
    fn round_trip_and_validation() {
        let h = parse_hypergraph("p hg 5 3\ne 1 2\ne 1 3 4\ne 3 5").unwrap();
        let text = "s ef 5\n1 0\n2 1\n3 1\n4 3\n5 3\n";
        let f = parse_forest(text, &h).unwrap();
        assert_eq!(write_forest(&f, &h), text);
        // 1 and 3 share an edge but are incomparable
        assert!(parse_forest("s ef 5\n1 0\n2 1\n3 0\n4 3\n5 3\n", &h).is_err());
        assert!(matches!(parse_forest("s ef 5\n1 0\n", &h), Err(Error::Parse { line: 2, .. })));
    }
}
