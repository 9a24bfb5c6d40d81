//! Interaction decoupling: topological edge filtering into a homophilic graph
//! and condensation of its largest components into a complete heterophilic
//! graph over one representative node each.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{connected_components, ComponentLabeling, Graph};
use crate::topo::{score_edges, EdgeScores, MetricKind, TopoError};

#[derive(Debug, Error)]
pub enum DecoupleError {
    #[error("edge scores cover {scores} edges but the graph has {edges}")]
    ScoreMismatch { scores: usize, edges: usize },
    #[error("mu must be at least 1")]
    ZeroMu,
    #[error(transparent)]
    Topo(#[from] TopoError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecoupleConfig {
    pub metric: MetricKind,
    /// Number of undirected edges removed.
    pub kappa: usize,
    /// Maximum number of components condensed into the heterophilic graph.
    pub mu: usize,
}

impl DecoupleConfig {
    pub fn validate(&self) -> Result<(), DecoupleError> {
        if self.mu == 0 {
            return Err(DecoupleError::ZeroMu);
        }
        Ok(())
    }
}

/// Drops the `kappa` lowest-scored edges (ties by ascending edge id).
pub fn topological_edge_filtering(
    g: &Graph,
    scores: &EdgeScores,
    kappa: usize,
) -> Result<Graph, DecoupleError> {
    if scores.scores.len() != g.num_edges() {
        return Err(DecoupleError::ScoreMismatch {
            scores: scores.scores.len(),
            edges: g.num_edges(),
        });
    }
    let mut removed = vec![false; g.num_edges()];
    for id in scores.removal_order().into_iter().take(kappa) {
        removed[id] = true;
    }
    Ok(g.retain_edges(|id| !removed[id]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Condensation {
    pub labeling: ComponentLabeling,
    /// One node per selected component, most populated component first.
    pub representatives: Vec<usize>,
    /// Complete graph over the representatives, in `representatives` order.
    pub g_he: Graph,
    /// Slot in `representatives` for every node of a selected component.
    pub cluster_slot: Vec<Option<usize>>,
}

/// Picks the `mu` most populated components of `g_ho` and joins their
/// highest-degree nodes into a complete graph.
///
/// Components are ranked by size (descending) then smallest member id; the
/// representative is the member with the largest degree in `g_ho`, lowest id
/// on ties.
pub fn heterophilic_graph_condensation(g_ho: &Graph, mu: usize) -> Condensation {
    let labeling = connected_components(g_ho);
    // Component ids already follow smallest member id.
    let mut order: Vec<usize> = (0..labeling.num_components()).collect();
    order.sort_by(|&a, &b| {
        labeling.component_sizes[b]
            .cmp(&labeling.component_sizes[a])
            .then(a.cmp(&b))
    });
    order.truncate(mu);

    let mut best: Vec<Option<usize>> = vec![None; labeling.num_components()];
    for v in 0..g_ho.num_nodes() {
        let c = labeling.component_id[v];
        match best[c] {
            Some(r) if g_ho.degree(r) >= g_ho.degree(v) => {}
            _ => best[c] = Some(v),
        }
    }
    let representatives: Vec<usize> = order.iter().map(|&c| best[c].unwrap()).collect();

    let mut slot_of_component = vec![None; labeling.num_components()];
    for (slot, &c) in order.iter().enumerate() {
        slot_of_component[c] = Some(slot);
    }
    let cluster_slot = labeling
        .component_id
        .iter()
        .map(|&c| slot_of_component[c])
        .collect();

    Condensation {
        g_he: g_ho.complete_over(&representatives),
        labeling,
        representatives,
        cluster_slot,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoupleResult {
    pub config: DecoupleConfig,
    pub scores: EdgeScores,
    pub g_ho: Graph,
    pub labeling: ComponentLabeling,
    pub representatives: Vec<usize>,
    pub g_he: Graph,
    pub cluster_slot: Vec<Option<usize>>,
}

pub fn decouple(g: &Graph, cfg: &DecoupleConfig) -> Result<DecoupleResult, DecoupleError> {
    cfg.validate()?;
    let scores = score_edges(g, cfg.metric)?;
    let g_ho = topological_edge_filtering(g, &scores, cfg.kappa)?;
    let Condensation {
        labeling,
        representatives,
        g_he,
        cluster_slot,
    } = heterophilic_graph_condensation(&g_ho, cfg.mu);
    Ok(DecoupleResult {
        config: *cfg,
        scores,
        g_ho,
        labeling,
        representatives,
        g_he,
        cluster_slot,
    })
}

#[derive(Serialize, Deserialize)]
pub struct DecoupleSidecar {
    pub components: Vec<usize>,
    pub component_sizes: Vec<usize>,
    pub representatives: Vec<usize>,
    pub cluster_slot: Vec<Option<usize>>,
}

impl DecoupleResult {
    pub fn sidecar(&self) -> DecoupleSidecar {
        DecoupleSidecar {
            components: self.labeling.component_id.clone(),
            component_sizes: self.labeling.component_sizes.clone(),
            representatives: self.representatives.clone(),
            cluster_slot: self.cluster_slot.clone(),
        }
    }

    /// Writes `g_ho.tsv`, `g_he.tsv` and `decouple.json` into `dir`.
    /// `g_he.tsv` uses the original node ids of the representatives.
    pub fn write_artifacts(&self, dir: &Path) -> io::Result<()> {
        fs::write(dir.join("g_ho.tsv"), edge_list_tsv(self.g_ho.edges()))?;
        let he: Vec<(usize, usize)> = self
            .g_he
            .edges()
            .iter()
            .map(|&(a, b)| {
                let (u, v) = (self.representatives[a], self.representatives[b]);
                (u.min(v), u.max(v))
            })
            .collect();
        let mut he_sorted = he;
        he_sorted.sort_unstable();
        fs::write(dir.join("g_he.tsv"), edge_list_tsv(&he_sorted))?;
        let json = serde_json::to_string_pretty(&self.sidecar()).map_err(io::Error::other)?;
        fs::write(dir.join("decouple.json"), json)
    }
}

/// `u<TAB>v` per line.
pub fn edge_list_tsv(edges: &[(usize, usize)]) -> String {
    let mut out = String::new();
    for &(u, v) in edges {
        writeln!(out, "{u}\t{v}").unwrap();
    }
    out
}

pub const HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomophilyReport {
    /// Fraction of edges joining same-label endpoints; `None` without edges.
    pub edge_homophily: Option<f64>,
    /// Per-node fraction of same-label neighbours; `None` for isolated nodes.
    pub node_homophily: Vec<Option<f64>>,
    /// Counts of `node_homophily` over 20 equal-width bins of `[0, 1]`.
    pub histogram: Vec<usize>,
}

impl HomophilyReport {
    pub fn mean_node_homophily(&self) -> Option<f64> {
        let defined: Vec<f64> = self.node_homophily.iter().flatten().copied().collect();
        (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
    }

    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,count\n");
        let width = 1.0 / HISTOGRAM_BINS as f64;
        for (b, count) in self.histogram.iter().enumerate() {
            let lo = b as f64 * width;
            let hi = (b + 1) as f64 * width;
            writeln!(out, "{lo},{hi},{count}").unwrap();
        }
        out
    }

    pub fn summary(&self) -> HomophilySummary {
        HomophilySummary {
            edge_homophily: self.edge_homophily,
            mean_node_homophily: self.mean_node_homophily(),
            nodes_with_neighbors: self.histogram.iter().sum(),
            num_nodes: self.node_homophily.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomophilySummary {
    pub edge_homophily: Option<f64>,
    pub mean_node_homophily: Option<f64>,
    pub nodes_with_neighbors: usize,
    pub num_nodes: usize,
}

pub fn homophily_report(g: &Graph) -> HomophilyReport {
    let labels = g.labels();
    let same = g
        .edges()
        .iter()
        .filter(|&&(u, v)| labels[u] == labels[v])
        .count();
    let edge_homophily = (g.num_edges() > 0).then(|| same as f64 / g.num_edges() as f64);
    let node_homophily: Vec<Option<f64>> = (0..g.num_nodes())
        .map(|v| {
            let nbrs = g.neighbors(v);
            (!nbrs.is_empty()).then(|| {
                nbrs.iter().filter(|&&w| labels[w] == labels[v]).count() as f64 / nbrs.len() as f64
            })
        })
        .collect();
    let mut histogram = vec![0; HISTOGRAM_BINS];
    for h in node_homophily.iter().flatten() {
        let bin = ((h * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
        histogram[bin] += 1;
    }
    HomophilyReport {
        edge_homophily,
        node_homophily,
        histogram,
    }
}
