//! Dataset ingestion, synthetic graph generation and split masks.

mod cosine;
pub mod matrix;
mod sbm;
mod split;
mod table;

use std::path::PathBuf;

use thiserror::Error;

use crate::graph::GraphError;

pub use cosine::cosine_similarity_graph;
pub use matrix::{read_matrix, write_matrix};
pub use sbm::{generate_sbm, SbmSpec};
pub use split::{split_masks, SplitSizes};
pub use table::{load_node_table, write_node_table, NodeTable};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: {reason}", path.display())]
    Malformed {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("{}:{line}: unknown node id {id}", path.display())]
    UnknownNode {
        path: PathBuf,
        line: usize,
        id: String,
    },
    #[error("row {0} has zero norm; cosine similarity is undefined")]
    ZeroNormRow(usize),
    #[error("requested {requested} pairs but only {available} exist")]
    TooManyPairs { requested: usize, available: usize },
    #[error("split sizes total {requested} but only {available} nodes exist")]
    SplitTooLarge { requested: usize, available: usize },
    #[error("label vector has {len} entries for {num_nodes} nodes")]
    LabelCount { len: usize, num_nodes: usize },
    #[error("invalid SBM: {0}")]
    InvalidSbm(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}
