//! Budget overrides from `HYPERWIDTH_BUDGET`, written `key=value` and
//! separated by commas or whitespace, e.g. `forest_vertices=7,mso_universe=10`.

use hyperwidth_core::Budget;

use crate::error::{Error, Result};

pub const VAR: &str = "HYPERWIDTH_BUDGET";

pub fn parse_overrides(spec: &str, base: Budget) -> Result<Budget> {
    let mut b = base;
    for item in spec.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()) {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("{VAR}: `{item}` is not key=value")))?;
        let n: u64 = value
            .trim()
            .parse()
            .map_err(|_| Error::Usage(format!("{VAR}: `{value}` is not a non-negative integer")))?;
        let size = usize::try_from(n).map_err(|_| Error::Usage(format!("{VAR}: {n} is too large")))?;
        match key.trim() {
            "canonical_vertices" => b.canonical_vertices = size,
            "manageability_vertices" => b.manageability_vertices = size,
            "enumeration_beta" => b.enumeration_beta = size,
            "enumeration_edges" => b.enumeration_edges = size,
            "forest_vertices" => b.forest_vertices = size,
            "td_oracle_vertices" => b.td_oracle_vertices = size,
            "mso_universe" => b.mso_universe = size,
            "exhaustive_universe" => b.exhaustive_universe = size,
            "exhaustive_colours" => b.exhaustive_colours = size,
            "exhaustive_branches" => b.exhaustive_branches = n,
            "treewidth_vertices" => b.treewidth_vertices = size,
            other => return Err(Error::Usage(format!("{VAR}: unknown cap `{other}`"))),
        }
    }
    Ok(b)
}

/// Defaults with the overrides from the environment applied.
pub fn from_env() -> Result<Budget> {
    match std::env::var(VAR) {
        Ok(s) => parse_overrides(&s, Budget::default()),
        Err(std::env::VarError::NotPresent) => Ok(Budget::default()),
        Err(e) => Err(Error::Usage(format!("{VAR}: {e}"))),
    }
}
