//! Heterogeneous lexical/structural/semantic document graphs for extractive
//! summarisation of long documents.
//!
//! The pipeline runs as: [`ingest`] (cleaning, sentence splitting, filtering)
//! → [`oracle`] (greedy ROUGE-1 labels) → [`lexical`] + [`graph`]
//! (word/sentence graph with four edge types) → [`gat`] (heterogeneous
//! graph attention classifier) → [`rouge`] evaluation. [`pipeline`] wires
//! the stages into file-based commands.

pub mod error;
pub mod gat;
pub mod graph;
pub mod ingest;
pub mod lexical;
pub mod oracle;
pub mod pipeline;
pub mod rouge;
pub mod synthetic;

pub use error::{Error, Result};
