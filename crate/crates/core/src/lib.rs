pub mod data;
pub mod decouple;
pub mod graph;
pub mod nn;
#[cfg(any(test, feature = "oracles"))]
pub mod oracle;
pub mod topo;
