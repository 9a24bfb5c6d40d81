use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use ndarray::Array2;

use super::DataError;
use crate::graph::{Graph, Masks};

/// A graph loaded from a node table plus the external ids it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeTable {
    pub graph: Graph,
    /// External id of each dense node id.
    pub node_ids: Vec<String>,
    /// Label string of each dense class id (sorted).
    pub label_names: Vec<String>,
}

fn open(path: &Path) -> Result<BufReader<fs::File>, DataError> {
    fs::File::open(path)
        .map(BufReader::new)
        .map_err(|source| DataError::Io {
            path: path.to_path_buf(),
            source,
        })
}

/// Reads `id<TAB>f1..fd<TAB>label` node rows and `id<TAB>id` edge rows.
/// Blank lines are skipped. Class ids follow sorted label-string order.
pub fn load_node_table(node_file: &Path, edge_file: &Path) -> Result<NodeTable, DataError> {
    let mut node_ids = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut rows: Vec<f64> = Vec::new();
    let mut raw_labels = Vec::new();
    let mut arity = None;

    for (lineno, line) in open(node_file)?.lines().enumerate() {
        let line = line.map_err(|source| DataError::Io {
            path: node_file.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |reason: String| DataError::Malformed {
            path: node_file.to_path_buf(),
            line: lineno + 1,
            reason,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 2 {
            return Err(malformed("expected an id and a label".into()));
        }
        let width = fields.len() - 2;
        match arity {
            None => arity = Some(width),
            Some(w) if w != width => {
                return Err(malformed(format!("{width} features, expected {w}")));
            }
            _ => {}
        }
        let id = fields[0].to_string();
        if index.insert(id.clone(), node_ids.len()).is_some() {
            return Err(malformed(format!("duplicate node id {id}")));
        }
        node_ids.push(id);
        for f in &fields[1..fields.len() - 1] {
            rows.push(
                f.trim()
                    .parse()
                    .map_err(|_| malformed(format!("bad feature value {f:?}")))?,
            );
        }
        raw_labels.push(fields[fields.len() - 1].trim().to_string());
    }

    let label_names: Vec<String> = raw_labels
        .iter()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let labels = raw_labels
        .iter()
        .map(|l| label_names.binary_search(l).unwrap())
        .collect();

    let mut edges = Vec::new();
    for (lineno, line) in open(edge_file)?.lines().enumerate() {
        let line = line.map_err(|source| DataError::Io {
            path: edge_file.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(DataError::Malformed {
                path: edge_file.to_path_buf(),
                line: lineno + 1,
                reason: "expected two ids".into(),
            });
        }
        let lookup = |id: &str| {
            index
                .get(id)
                .copied()
                .ok_or_else(|| DataError::UnknownNode {
                    path: edge_file.to_path_buf(),
                    line: lineno + 1,
                    id: id.to_string(),
                })
        };
        edges.push((lookup(fields[0])?, lookup(fields[1])?));
    }

    let n = node_ids.len();
    let features = Array2::from_shape_vec((n, arity.unwrap_or(0)), rows)
        .expect("row widths were checked while parsing");
    let graph = Graph::build(n, &edges, features, labels, Masks::unassigned(n))?
        .with_num_classes(label_names.len())?;
    Ok(NodeTable {
        graph,
        node_ids,
        label_names,
    })
}

/// Writes the table back in the format read by [`load_node_table`].
pub fn write_node_table(
    table: &NodeTable,
    node_file: &Path,
    edge_file: &Path,
) -> Result<(), DataError> {
    let g = &table.graph;
    let mut nodes = String::new();
    for v in 0..g.num_nodes() {
        nodes.push_str(&table.node_ids[v]);
        for x in g.features().row(v) {
            write!(nodes, "\t{x:?}").unwrap();
        }
        writeln!(nodes, "\t{}", table.label_names[g.labels()[v]]).unwrap();
    }
    let mut edges = String::new();
    for &(u, v) in g.edges() {
        writeln!(edges, "{}\t{}", table.node_ids[u], table.node_ids[v]).unwrap();
    }
    for (path, body) in [(node_file, nodes), (edge_file, edges)] {
        fs::write(path, body).map_err(|source| DataError::Io {
            path: path.to_path_buf(),
            source,
        })?;
    }
    Ok(())
}
