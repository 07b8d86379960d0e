//! File formats, the bundled corpus, budget overrides, reports and the
//! command line on top of `hyperwidth-core`.

pub mod budget;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod formats;
pub mod report;

pub use error::{Error, Result};
