//! Immutable undirected graph in CSR form, together with the node data
//! (features, labels, split masks) that the rest of the pipeline consumes.
//!
//! Every undirected edge `{u, v}` is stored as the two arcs `u -> v` and
//! `v -> u`. Both arcs map to the same undirected edge id, and edge ids are
//! assigned in ascending `(min, max)` order so that any edge subset rebuilds
//! into the same canonical numbering.

use std::collections::{HashMap, VecDeque};

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("edge ({u}, {v}) references a node outside [0, {num_nodes})")]
    EndpointOutOfRange {
        u: usize,
        v: usize,
        num_nodes: usize,
    },
    #[error("feature matrix has {rows} rows but the graph has {num_nodes} nodes")]
    FeatureRows { rows: usize, num_nodes: usize },
    #[error("label vector has {len} entries but the graph has {num_nodes} nodes")]
    LabelCount { len: usize, num_nodes: usize },
    #[error("label {label} of node {node} is outside [0, {num_classes})")]
    LabelOutOfRange {
        node: usize,
        label: usize,
        num_classes: usize,
    },
    #[error("mask {name} has {len} entries but the graph has {num_nodes} nodes")]
    MaskLength {
        name: &'static str,
        len: usize,
        num_nodes: usize,
    },
    #[error("node {node} is in more than one split mask")]
    OverlappingMasks { node: usize },
}

/// Which split a node belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

/// Train/validation/test membership. The three vectors are pairwise disjoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Masks {
    train: Vec<bool>,
    val: Vec<bool>,
    test: Vec<bool>,
}

impl Masks {
    pub fn new(train: Vec<bool>, val: Vec<bool>, test: Vec<bool>) -> Result<Self, GraphError> {
        let n = train.len();
        for (name, mask) in [("val", &val), ("test", &test)] {
            if mask.len() != n {
                return Err(GraphError::MaskLength {
                    name,
                    len: mask.len(),
                    num_nodes: n,
                });
            }
        }
        for node in 0..n {
            let hits = train[node] as u8 + val[node] as u8 + test[node] as u8;
            if hits > 1 {
                return Err(GraphError::OverlappingMasks { node });
            }
        }
        Ok(Self { train, val, test })
    }

    /// Masks with no node assigned to any split.
    pub fn unassigned(num_nodes: usize) -> Self {
        Self {
            train: vec![false; num_nodes],
            val: vec![false; num_nodes],
            test: vec![false; num_nodes],
        }
    }

    pub fn len(&self) -> usize {
        self.train.len()
    }

    pub fn is_empty(&self) -> bool {
        self.train.is_empty()
    }

    pub fn get(&self, split: Split) -> &[bool] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    pub fn count(&self, split: Split) -> usize {
        self.get(split).iter().filter(|&&m| m).count()
    }

    /// Node ids in `split`, ascending.
    pub fn nodes(&self, split: Split) -> Vec<usize> {
        self.get(split)
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
            .collect()
    }

    /// Restrict the masks to the listed nodes, in order.
    pub fn select(&self, nodes: &[usize]) -> Self {
        let pick = |m: &[bool]| nodes.iter().map(|&v| m[v]).collect();
        Self {
            train: pick(&self.train),
            val: pick(&self.val),
            test: pick(&self.test),
        }
    }
}

/// Immutable undirected graph with node data.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    arc_edge: Vec<usize>,
    edges: Vec<(usize, usize)>,
    features: Array2<f64>,
    labels: Vec<usize>,
    num_classes: usize,
    masks: Masks,
}

impl Graph {
    /// Builds a graph from an arbitrary edge list.
    ///
    /// The list is symmetrized and deduplicated, and self-loops are dropped.
    /// `num_classes` is one more than the largest label (zero for an empty
    /// graph); use [`Graph::with_num_classes`] to widen it.
    pub fn build(
        num_nodes: usize,
        edge_list: &[(usize, usize)],
        features: Array2<f64>,
        labels: Vec<usize>,
        masks: Masks,
    ) -> Result<Self, GraphError> {
        if features.nrows() != num_nodes {
            return Err(GraphError::FeatureRows {
                rows: features.nrows(),
                num_nodes,
            });
        }
        if labels.len() != num_nodes {
            return Err(GraphError::LabelCount {
                len: labels.len(),
                num_nodes,
            });
        }
        if masks.len() != num_nodes {
            return Err(GraphError::MaskLength {
                name: "train",
                len: masks.len(),
                num_nodes,
            });
        }
        let mut edges = Vec::with_capacity(edge_list.len());
        for &(u, v) in edge_list {
            if u >= num_nodes || v >= num_nodes {
                return Err(GraphError::EndpointOutOfRange { u, v, num_nodes });
            }
            if u != v {
                edges.push((u.min(v), u.max(v)));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        let num_classes = labels.iter().max().map_or(0, |&m| m + 1);
        Ok(Self::from_canonical(
            num_nodes,
            edges,
            features,
            labels,
            num_classes,
            masks,
        ))
    }

    /// Graph with the same topology and features and no labels or split
    /// information (every node labelled 0).
    pub fn unlabeled(
        num_nodes: usize,
        edge_list: &[(usize, usize)],
        features: Array2<f64>,
    ) -> Result<Self, GraphError> {
        Self::build(
            num_nodes,
            edge_list,
            features,
            vec![0; num_nodes],
            Masks::unassigned(num_nodes),
        )
    }

    /// Topology-only graph with a zero-width feature matrix.
    pub fn topology(num_nodes: usize, edge_list: &[(usize, usize)]) -> Result<Self, GraphError> {
        Self::unlabeled(num_nodes, edge_list, Array2::zeros((num_nodes, 0)))
    }

    // `edges` must already be sorted, deduplicated, loop-free and in range.
    fn from_canonical(
        num_nodes: usize,
        edges: Vec<(usize, usize)>,
        features: Array2<f64>,
        labels: Vec<usize>,
        num_classes: usize,
        masks: Masks,
    ) -> Self {
        let mut degree = vec![0usize; num_nodes];
        for &(u, v) in &edges {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = Vec::with_capacity(num_nodes + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets[..num_nodes].to_vec();
        let mut targets = vec![0; 2 * edges.len()];
        let mut arc_edge = vec![0; 2 * edges.len()];
        // Edges are sorted by (min, max), so filling arcs in this order
        // leaves every adjacency row sorted by target.
        for (id, &(u, v)) in edges.iter().enumerate() {
            targets[cursor[v]] = u;
            arc_edge[cursor[v]] = id;
            cursor[v] += 1;
        }
        for (id, &(u, v)) in edges.iter().enumerate() {
            targets[cursor[u]] = v;
            arc_edge[cursor[u]] = id;
            cursor[u] += 1;
        }
        Self {
            offsets,
            targets,
            arc_edge,
            edges,
            features,
            labels,
            num_classes,
            masks,
        }
    }

    /// Same graph with `num_classes` raised to at least `num_classes`.
    pub fn with_num_classes(mut self, num_classes: usize) -> Result<Self, GraphError> {
        if let Some((node, &label)) = self
            .labels
            .iter()
            .enumerate()
            .find(|(_, &l)| l >= num_classes)
        {
            return Err(GraphError::LabelOutOfRange {
                node,
                label,
                num_classes,
            });
        }
        self.num_classes = num_classes;
        Ok(self)
    }

    pub fn with_masks(mut self, masks: Masks) -> Result<Self, GraphError> {
        if masks.len() != self.num_nodes() {
            return Err(GraphError::MaskLength {
                name: "train",
                len: masks.len(),
                num_nodes: self.num_nodes(),
            });
        }
        self.masks = masks;
        Ok(self)
    }

    pub fn num_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_arcs(&self) -> usize {
        self.targets.len()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// Neighbors of `v`, ascending.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    /// `(neighbor, edge id)` pairs for the arcs leaving `v`.
    pub fn arcs(&self, v: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let range = self.offsets[v]..self.offsets[v + 1];
        self.targets[range.clone()]
            .iter()
            .copied()
            .zip(self.arc_edge[range].iter().copied())
    }

    /// Undirected edges as `(min, max)` pairs, indexed by edge id.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_id(&self, u: usize, v: usize) -> Option<usize> {
        if u >= self.num_nodes() || v >= self.num_nodes() {
            return None;
        }
        let row = self.neighbors(u);
        row.binary_search(&v)
            .ok()
            .map(|i| self.arc_edge[self.offsets[u] + i])
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edge_id(u, v).is_some()
    }

    pub fn csr_offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn csr_targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn masks(&self) -> &Masks {
        &self.masks
    }

    /// Same node set and node data, keeping only the edges whose id satisfies
    /// `keep`. Edge ids are renumbered canonically.
    pub fn retain_edges(&self, mut keep: impl FnMut(usize) -> bool) -> Graph {
        let edges = self
            .edges
            .iter()
            .enumerate()
            .filter_map(|(id, &e)| keep(id).then_some(e))
            .collect();
        Self::from_canonical(
            self.num_nodes(),
            edges,
            self.features.clone(),
            self.labels.clone(),
            self.num_classes,
            self.masks.clone(),
        )
    }

    /// Complete graph over `nodes` (in the given order) carrying their
    /// features, labels and masks.
    pub fn complete_over(&self, nodes: &[usize]) -> Graph {
        let k = nodes.len();
        let edges = (0..k)
            .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
            .collect();
        Self::from_canonical(
            k,
            edges,
            self.features.select(Axis(0), nodes),
            nodes.iter().map(|&v| self.labels[v]).collect(),
            self.num_classes,
            self.masks.select(nodes),
        )
    }

    /// Relabel nodes so that old node `v` becomes `perm[v]`.
    pub fn permute(&self, perm: &[usize]) -> Graph {
        let n = self.num_nodes();
        assert_eq!(perm.len(), n, "permutation length must equal node count");
        let mut inverse = vec![0; n];
        for (old, &new) in perm.iter().enumerate() {
            inverse[new] = old;
        }
        let edges: Vec<_> = self
            .edges
            .iter()
            .map(|&(u, v)| (perm[u], perm[v]))
            .collect();
        let masks = self.masks.select(&inverse);
        Self::build(
            n,
            &edges,
            self.features.select(Axis(0), &inverse),
            inverse.iter().map(|&v| self.labels[v]).collect(),
            masks,
        )
        .and_then(|g| g.with_num_classes(self.num_classes))
        .expect("permutation of a valid graph is valid")
    }
}

/// Connected-component assignment. Component ids are ordered by the smallest
/// node id they contain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentLabeling {
    pub component_id: Vec<usize>,
    pub component_sizes: Vec<usize>,
}

impl ComponentLabeling {
    pub fn num_components(&self) -> usize {
        self.component_sizes.len()
    }

    /// Member nodes of every component, ascending within each component.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = self
            .component_sizes
            .iter()
            .map(|&s| Vec::with_capacity(s))
            .collect();
        for (v, &c) in self.component_id.iter().enumerate() {
            out[c].push(v);
        }
        out
    }
}

pub fn connected_components(g: &Graph) -> ComponentLabeling {
    const UNSEEN: usize = usize::MAX;
    let n = g.num_nodes();
    let mut component_id = vec![UNSEEN; n];
    let mut component_sizes = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..n {
        if component_id[start] != UNSEEN {
            continue;
        }
        let id = component_sizes.len();
        component_id[start] = id;
        queue.push_back(start);
        let mut size = 0;
        while let Some(v) = queue.pop_front() {
            size += 1;
            for &w in g.neighbors(v) {
                if component_id[w] == UNSEEN {
                    component_id[w] = id;
                    queue.push_back(w);
                }
            }
        }
        component_sizes.push(size);
    }
    ComponentLabeling {
        component_id,
        component_sizes,
    }
}

/// Hop distances from `source` to every node within `radius` hops.
pub fn bfs_hop_distances(g: &Graph, source: usize, radius: usize) -> HashMap<usize, usize> {
    let mut dist = HashMap::new();
    dist.insert(source, 0);
    let mut frontier = vec![source];
    for hop in 1..=radius {
        let mut next = Vec::new();
        for &v in &frontier {
            for &w in g.neighbors(v) {
                dist.entry(w).or_insert_with(|| {
                    next.push(w);
                    hop
                });
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    dist
}
