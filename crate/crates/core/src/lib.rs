#![no_std]
extern crate alloc;

pub mod bitset;
pub mod budget;
pub mod error;
pub mod hypergraph;
pub mod rational;
pub mod widths;

pub use bitset::{BitSet, NodeSet, VertexSet};
pub use budget::Budget;
pub use error::{Error, Result};
pub use hypergraph::Hypergraph;
pub use rational::Rational;
pub use widths::{Width, WidthFunction};
pub mod bounds;
pub mod dealternation;
pub mod decomp;
pub mod factors;
pub mod mso;
pub mod pipeline;
pub mod stains;
pub mod transduction;

#[cfg(test)]
mod fixtures;
