//! Per-edge connectivity scores.
//!
//! Every metric is folded into one orientation: a lower score means a less
//! connected edge, and edges are removed lowest first. Ties are broken by
//! ascending edge id.

mod centrality;
mod curvature;
pub mod transport;

use std::fmt::Write as _;
use std::io::{self, BufRead};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;

pub use centrality::{eigenvector_centrality, DEFAULT_MAX_ITER, DEFAULT_TOL};
pub use curvature::{ollivier_ricci_edge, ollivier_ricci_edge_capped};
pub use transport::{wasserstein1, TransportError, TransportProblem, DEFAULT_SUPPORT_CAP};

pub const DEFAULT_ALPHA: f64 = 0.5;

#[derive(Debug, Error, PartialEq)]
pub enum TopoError {
    #[error("laziness {0} is outside [0, 1)")]
    InvalidAlpha(f64),
    #[error("edge {0} does not exist")]
    UnknownEdge(usize),
    #[error("transport for edge {edge} failed: {source}")]
    Transport {
        edge: usize,
        #[source]
        source: TransportError,
    },
}

/// How endpoint degrees combine into an edge score for [`MetricKind::Degree`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DegreeRule {
    #[default]
    Sum,
    Min,
    Product,
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

fn default_support_cap() -> usize {
    DEFAULT_SUPPORT_CAP
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MetricKind {
    /// Ollivier-Ricci curvature; most negative edges go first.
    Curvature {
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default = "default_support_cap")]
        support_cap: usize,
    },
    /// Combined endpoint degree; lowest goes first.
    Degree {
        #[serde(default)]
        rule: DegreeRule,
    },
    /// Product of endpoint eigenvector centralities. Central edges carry the
    /// most traffic between regions, so the score is the negated product and
    /// the most central edge goes first.
    Eigen {},
    /// I.i.d. uniform scores.
    Random { seed: u64 },
}

impl MetricKind {
    pub fn curvature() -> Self {
        MetricKind::Curvature {
            alpha: DEFAULT_ALPHA,
            support_cap: DEFAULT_SUPPORT_CAP,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MetricKind::Curvature { .. } => "curvature",
            MetricKind::Degree { .. } => "degree",
            MetricKind::Eigen {} => "eigen",
            MetricKind::Random { .. } => "random",
        }
    }
}

/// One score per undirected edge, indexed by edge id.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeScores {
    pub metric: MetricKind,
    pub scores: Vec<f64>,
}

impl EdgeScores {
    /// Edge ids from least to most connected.
    pub fn removal_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.scores.len()).collect();
        order.sort_by(|&a, &b| self.scores[a].total_cmp(&self.scores[b]).then(a.cmp(&b)));
        order
    }

    /// `edge_id,u,v,score` rows with a header line. Scores use the shortest
    /// representation that parses back to the same `f64`.
    pub fn to_csv(&self, g: &Graph) -> String {
        let mut out = String::from("edge_id,u,v,score\n");
        for (id, (&(u, v), s)) in g.edges().iter().zip(&self.scores).enumerate() {
            writeln!(out, "{id},{u},{v},{s:?}").unwrap();
        }
        out
    }

    /// Parses the output of [`EdgeScores::to_csv`] back into
    /// `(edge_id, u, v, score)` rows.
    pub fn parse_csv(reader: impl BufRead) -> io::Result<Vec<(usize, usize, usize, f64)>> {
        let bad = |line: usize, msg: &str| {
            io::Error::new(io::ErrorKind::InvalidData, format!("line {line}: {msg}"))
        };
        let mut rows = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if i == 0 {
                if line.trim() != "edge_id,u,v,score" {
                    return Err(bad(1, "missing header"));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(bad(i + 1, "expected 4 fields"));
            }
            let int = |s: &str| s.parse::<usize>().map_err(|e| bad(i + 1, &e.to_string()));
            let score = f[3]
                .parse::<f64>()
                .map_err(|e| bad(i + 1, &e.to_string()))?;
            rows.push((int(f[0])?, int(f[1])?, int(f[2])?, score));
        }
        Ok(rows)
    }
}

pub fn score_edges(g: &Graph, metric: MetricKind) -> Result<EdgeScores, TopoError> {
    let edges = g.edges();
    let scores = match metric {
        MetricKind::Curvature { alpha, support_cap } => {
            if !(0.0..1.0).contains(&alpha) {
                return Err(TopoError::InvalidAlpha(alpha));
            }
            // Each edge writes its own slot, so the result is independent of
            // scheduling.
            (0..edges.len())
                .into_par_iter()
                .map_init(
                    || curvature::CurvatureScratch::new(g.num_nodes()),
                    |scratch, e| curvature::edge_curvature(g, e, alpha, support_cap, scratch),
                )
                .collect::<Result<Vec<_>, _>>()?
        }
        MetricKind::Degree { rule } => edges
            .iter()
            .map(|&(u, v)| {
                let (du, dv) = (g.degree(u) as f64, g.degree(v) as f64);
                match rule {
                    DegreeRule::Sum => du + dv,
                    DegreeRule::Min => du.min(dv),
                    DegreeRule::Product => du * dv,
                }
            })
            .collect(),
        MetricKind::Eigen {} => {
            let c = eigenvector_centrality(g, DEFAULT_TOL, DEFAULT_MAX_ITER);
            edges.iter().map(|&(u, v)| -(c[u] * c[v])).collect()
        }
        MetricKind::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            edges.iter().map(|_| rng.random::<f64>()).collect()
        }
    };
    Ok(EdgeScores { metric, scores })
}
