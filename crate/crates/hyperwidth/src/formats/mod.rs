//! Text formats. Every parser reports errors with a line number.

pub mod ef;
pub mod hg;
pub mod logic;
pub mod sexp;
pub mod td;

pub use ef::{parse_forest, write_forest};
pub use hg::{parse_hypergraph, write_hypergraph};
pub use logic::{parse_formula, parse_structure, parse_transduction, parse_witness, write_structure, write_witness};
pub use td::{parse_td, write_td};
