//! Mining instruction co-occurrence subsets from source code and clustering
//! them into a small number of bounded-size derived subsets.

pub mod catalog;
pub mod cli;
pub mod clustering;
pub mod corpus;
pub mod error;
pub mod estimator;
pub mod evaluation;
mod setops;
pub mod subset;
pub mod subsetcore;
pub mod synth;

pub use catalog::{load_catalog, InstructionCatalog, InstructionDef};
pub use error::{Error, Result};
pub use subset::{InstructionSubset, Stage, SubsetFamily};
