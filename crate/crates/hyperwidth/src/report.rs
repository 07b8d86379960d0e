//! Report rendering, and the per-instance invariant table behind
//! `corpus check`.
//!
//! The invariant table has these TSV columns:
//!
//! | column | meaning |
//! |---|---|
//! | `instance` `n` `m` `rank` `degree` | the hypergraph |
//! | `function` | `ghw`, `fhw` or `tw` |
//! | `width` | optimum from the forest oracle |
//! | `oracles` | forest oracle equals the decomposition-search oracle |
//! | `pipeline` | guided pipeline at `k = width` returns `width` |
//! | `reject_below` | pipeline rejects at `k = width - 1/2` |
//! | `td` | the returned decomposition validates and has f-width `width` |
//! | `chordal` `helly` | conflict graph of the optimal pair |
//! | `chi` `eta` | its chromatic number and the colour bound |
//! | `status` | `pass` when no cell says `fail` |
//!
//! Cells are `pass`, `fail`, or `skip` when a cap refused the check.

use std::fmt::Write;

use hyperwidth_core::bounds::eta;
use hyperwidth_core::decomp::{exact_fwidth, oracle_fwidth_td};
use hyperwidth_core::factors::{mir, split};
use hyperwidth_core::mso::build::FamilySource;
use hyperwidth_core::pipeline::{width_check, CheckMode, CheckOptions, Execution, ValueSource, WidthReport};
use hyperwidth_core::rational::{ratio, to_string};
use hyperwidth_core::stains::ConflictGraph;
use hyperwidth_core::widths::WidthCache;
use hyperwidth_core::{Budget, Error as CoreError, Hypergraph, Rational, Width};

use crate::corpus::Instance;
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Tsv,
}

pub const WIDTH_COLUMNS: &str = "function\tk\tmode\tresult\tvalue\toracle\tq\texecution\tbranches\tpruned";

/// Bounds saturate at `u64::MAX`.
fn bound(x: u64) -> String {
    if x == u64::MAX {
        "saturated".into()
    } else {
        x.to_string()
    }
}

pub fn width_report(r: &WidthReport, format: Format) -> String {
    let value = r.accepted.as_ref().map(|a| to_string(&a.value));
    let oracle = r.oracle_value.as_ref().map(to_string);
    let dash = || "-".to_string();
    match format {
        Format::Tsv => {
            let t = r.trace.as_ref();
            format!(
                "{WIDTH_COLUMNS}\n{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                r.function,
                to_string(&r.k),
                r.mode.name(),
                if r.accepted.is_some() { "accept" } else { "reject" },
                value.unwrap_or_else(dash),
                oracle.unwrap_or_else(dash),
                t.map_or_else(dash, |t| t.q.to_string()),
                t.and_then(|t| t.execution).map_or_else(dash, |e| e.name().to_string()),
                t.map_or_else(dash, |t| t.stats.branches.to_string()),
                t.map_or_else(dash, |t| t.stats.pruned.to_string()),
            )
        }
        Format::Text => {
            let mut out = String::new();
            writeln!(out, "function {}", r.function).unwrap();
            writeln!(out, "k {}", to_string(&r.k)).unwrap();
            if let Some(o) = oracle {
                writeln!(out, "oracle {o}").unwrap();
            }
            if let Some(t) = &r.trace {
                writeln!(out, "size_bound {}", t.size_bound).unwrap();
                match t.treewidth {
                    Some(w) => writeln!(out, "treewidth {w}").unwrap(),
                    None => writeln!(out, "treewidth above {}", t.size_bound.saturating_sub(1)).unwrap(),
                }
                let vals: Vec<String> = t.values.iter().map(to_string).collect();
                let vals = if vals.is_empty() { "-".to_string() } else { vals.join(" ") };
                let source = match t.value_source {
                    ValueSource::Bounded => "bounded",
                    ValueSource::Local => "local",
                };
                writeln!(out, "values {vals} source={source}").unwrap();
                if let Some(b) = &t.bounds {
                    writeln!(
                        out,
                        "bounds beta={} kappa0={} kappa2={}{} kappa1={} kappa={} gamma={} eta={}",
                        b.beta,
                        bound(b.kappa0),
                        bound(b.kappa2),
                        if b.kappa2_exact { "" } else { "(fallback)" },
                        bound(b.kappa1),
                        bound(b.kappa),
                        bound(b.gamma),
                        bound(b.eta)
                    )
                    .unwrap();
                }
                if let Some(e) = t.execution {
                    writeln!(out, "q {} swaps {} execution {}", t.q, t.swaps, e.name()).unwrap();
                    writeln!(out, "branches {} pruned {}", t.stats.branches, t.stats.pruned).unwrap();
                }
                for (a, fam, n) in &t.tried {
                    let fam = match fam {
                        FamilySource::Bounded => "bounded",
                        FamilySource::Local => "local",
                    };
                    writeln!(out, "tried a={} family={fam} outputs={n}", to_string(a)).unwrap();
                }
            }
            out.push_str(&r.result_line());
            out.push('\n');
            out
        }
    }
}

pub const CHECK_COLUMNS: &str =
    "instance\tn\tm\trank\tdegree\tfunction\twidth\toracles\tpipeline\treject_below\ttd\tchordal\thelly\tchi\teta\tstatus";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckRow {
    pub cells: Vec<String>,
    pub failed: bool,
}

impl CheckRow {
    pub fn tsv(&self) -> String {
        self.cells.join("\t")
    }
}

fn cell<T>(r: core::result::Result<T, CoreError>, ok: impl FnOnce(T) -> bool, failed: &mut bool) -> String {
    let pass = match r {
        Err(CoreError::CapExceeded { .. }) => return "skip".into(),
        Ok(v) => ok(v),
        Err(_) => false,
    };
    if !pass {
        *failed = true;
    }
    if pass { "pass" } else { "fail" }.into()
}

/// The invariant row for one instance and width function.
pub fn check_instance(inst: &Instance, f: Width, budget: &Budget) -> Result<CheckRow> {
    let h = &inst.hypergraph;
    let s = h.stats();
    let mut cells = vec![
        inst.name.clone(),
        s.vertex_count.to_string(),
        s.edge_count.to_string(),
        s.rank.to_string(),
        s.degree.to_string(),
        f.short_name().to_string(),
    ];
    let mut failed = false;
    let (w, forest) = match exact_fwidth(h, &f, budget) {
        Ok(x) => x,
        Err(CoreError::CapExceeded { .. }) => {
            cells.extend(std::iter::repeat_n("skip".to_string(), 9));
            cells.push("pass".into());
            return Ok(CheckRow { cells, failed });
        }
        Err(e) => return Err(e.into()),
    };
    cells.push(to_string(&w));
    cells.push(cell(oracle_fwidth_td(h, &f, budget), |o| o == w, &mut failed));
    let opts = |mode| CheckOptions {
        mode,
        execution: Execution::Guided,
        budget: *budget,
    };
    let at = width_check(h, &f, &w, &opts(CheckMode::Both));
    let accepted = at.as_ref().ok().and_then(|r| r.accepted.clone());
    cells.push(cell(at, |r| r.accepted.is_some_and(|a| a.value == w), &mut failed));
    let below = &w - ratio(1, 2);
    cells.push(if below < Rational::from_integer(0.into()) {
        "skip".into()
    } else {
        cell(width_check(h, &f, &below, &opts(CheckMode::Pipeline)), |r| r.accepted.is_none(), &mut failed)
    });
    let cache = WidthCache::new(&f, h);
    cells.push(match accepted {
        Some(a) => cell(Ok::<_, CoreError>(a), |a| a.td.validate(h).is_ok() && a.td.fwidth(&cache) == w, &mut failed),
        None => "skip".into(),
    });
    let reduced = forest.reduce(h);
    let t = reduced.induced_td(h);
    let cg = ConflictGraph::new(&t, &reduced);
    cells.push(cell(Ok::<_, CoreError>(cg.is_chordal()), |b| b, &mut failed));
    cells.push(cell(Ok::<_, CoreError>(cg.helly_violation()), |v| v.is_none(), &mut failed));
    let bound = eta(split(&t, &reduced) as u64, mir(&t, &reduced) as u64, t.treewidth());
    match cg.chromatic_number() {
        Ok((chi, _)) => {
            if chi as u64 > bound {
                failed = true;
            }
            cells.push(chi.to_string());
        }
        Err(_) => {
            failed = true;
            cells.push("fail".into());
        }
    }
    cells.push(bound.to_string());
    cells.push(if failed { "fail" } else { "pass" }.into());
    Ok(CheckRow { cells, failed })
}

/// The full table for instances with at most `max_vertices` vertices.
pub fn corpus_check(instances: &[Instance], functions: &[Width], max_vertices: usize, budget: &Budget) -> Result<(String, bool)> {
    let mut out = format!("{CHECK_COLUMNS}\n");
    let mut failed = false;
    for inst in instances.iter().filter(|i| i.hypergraph.num_vertices() <= max_vertices) {
        for &f in functions {
            let row = check_instance(inst, f, budget)?;
            failed |= row.failed;
            out.push_str(&row.tsv());
            out.push('\n');
        }
    }
    Ok((out, failed))
}

/// `h` as a one-line summary.
pub fn describe(name: &str, h: &Hypergraph) -> String {
    let s = h.stats();
    format!(
        "{name}\tn={}\tm={}\trank={}\tdegree={}\tcomponents={}",
        s.vertex_count, s.edge_count, s.rank, s.degree, s.component_count
    )
}
