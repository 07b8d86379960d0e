//! The `.td` format: `s td <nodes> <max-bag> <n>`, bag lines
//! `b <node> <v1> ..`, and tree edges `<node> <node>`. Node 1 is the root.

use std::fmt::Write;

use hyperwidth_core::decomp::TreeDecomposition;
use hyperwidth_core::{Hypergraph, VertexSet};

use super::hg::{content_lines, number};
use crate::error::{Error, Result};

pub(crate) fn vertex(h: &Hypergraph, line: usize, w: &str) -> Result<usize> {
    let l: u32 = number(line, w, "vertex")?;
    h.vertex_of_label(l)
        .ok_or_else(|| Error::parse(line, format!("vertex {l} is not in the hypergraph")))
}

pub fn parse_td(text: &str, h: &Hypergraph) -> Result<TreeDecomposition> {
    let mut header: Option<(usize, usize, usize)> = None;
    let mut bags: Vec<Option<VertexSet>> = Vec::new();
    let mut edges = Vec::new();
    let mut last = 1;
    for (line, w) in content_lines(text) {
        last = line;
        if w[0] == "s" {
            if header.is_some() {
                return Err(Error::parse(line, "second header"));
            }
            if w.len() != 5 || w[1] != "td" {
                return Err(Error::parse(line, "header must be `s td <nodes> <max-bag> <n>`"));
            }
            let (nodes, width, n): (usize, usize, usize) = (number(line, w[2], "node count")?, number(line, w[3], "bag size")?, number(line, w[4], "n")?);
            if n != h.num_vertices() {
                return Err(Error::parse(line, format!("decomposition is for {n} vertices, the hypergraph has {}", h.num_vertices())));
            }
            bags = vec![None; nodes];
            header = Some((nodes, width, line));
            continue;
        }
        let Some((nodes, _, _)) = header else {
            return Err(Error::parse(line, "content before the header"));
        };
        let node = |w: &str| -> Result<usize> {
            let x: usize = number(line, w, "node")?;
            if x == 0 || x > nodes {
                return Err(Error::parse(line, format!("node {x} outside 1..{nodes}")));
            }
            Ok(x - 1)
        };
        if w[0] == "b" {
            if w.len() < 2 {
                return Err(Error::parse(line, "bag line without a node"));
            }
            let x = node(w[1])?;
            if bags[x].is_some() {
                return Err(Error::parse(line, format!("second bag for node {}", x + 1)));
            }
            let mut bag = VertexSet::EMPTY;
            for v in &w[2..] {
                bag.insert(vertex(h, line, v)?);
            }
            bags[x] = Some(bag);
        } else if w.len() == 2 {
            edges.push((node(w[0])?, node(w[1])?));
        } else {
            return Err(Error::parse(line, "expected a bag line or a tree edge"));
        }
    }
    let Some((nodes, width, hline)) = header else {
        return Err(Error::parse(last, "missing header `s td <nodes> <max-bag> <n>`"));
    };
    if let Some(x) = bags.iter().position(Option::is_none) {
        return Err(Error::parse(last, format!("node {} has no bag", x + 1)));
    }
    let bags: Vec<VertexSet> = bags.into_iter().flatten().collect();
    let max = bags.iter().map(|b| b.len()).max().unwrap_or(0);
    if max != width {
        return Err(Error::parse(hline, format!("header says the largest bag has {width} vertices, it has {max}")));
    }
    if nodes == 0 {
        return Err(Error::parse(hline, "a decomposition needs a node"));
    }
    Ok(TreeDecomposition::from_edges(bags, &edges, 0)?)
}

/// Nodes renumbered in preorder, so the root is node 1.
pub fn write_td(t: &TreeDecomposition, h: &Hypergraph) -> String {
    let order = t.preorder();
    let mut id = vec![0; t.num_nodes()];
    for (i, &x) in order.iter().enumerate() {
        id[x] = i + 1;
    }
    let max = t.bags().iter().map(|b| b.len()).max().unwrap_or(0);
    let mut out = format!("s td {} {} {}\n", t.num_nodes(), max, h.num_vertices());
    for &x in order {
        write!(out, "b {}", id[x]).unwrap();
        for v in t.bag(x).iter() {
            write!(out, " {}", h.label(v)).unwrap();
        }
        out.push('\n');
    }
    for &x in order {
        if let Some(p) = t.parent(x) {
            writeln!(out, "{} {}", id[p], id[x]).unwrap();
        }
    }
    out
}
