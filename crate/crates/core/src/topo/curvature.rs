use crate::graph::Graph;

use super::transport::{wasserstein1_capped, TransportProblem};
use super::TopoError;

/// Neighbourhood measure of `x`: mass `alpha` on `x` itself and
/// `(1 - alpha) / deg(x)` on each neighbour. Zero-mass points are omitted.
fn lazy_walk_measure(g: &Graph, x: usize, alpha: f64) -> (Vec<usize>, Vec<f64>) {
    let deg = g.degree(x);
    let share = (1.0 - alpha) / deg as f64;
    let mut support = Vec::with_capacity(deg + 1);
    let mut mass = Vec::with_capacity(deg + 1);
    if alpha > 0.0 {
        support.push(x);
        mass.push(alpha);
    }
    for &w in g.neighbors(x) {
        support.push(w);
        mass.push(share);
    }
    (support, mass)
}

/// Hop distance from `x` to each of `targets`, for `x` and every target within
/// one hop of the endpoints of a common edge. Such pairs are always joined by a
/// path of length at most three, so anything not reached in two hops is at
/// distance exactly three.
fn short_range_distances(
    g: &Graph,
    x: usize,
    targets: &[usize],
    stamp: &mut [u32],
    round: u32,
) -> Vec<f64> {
    // stamp[w] == round       -> w is a neighbour of x
    // stamp[w] == round + 1   -> w is two hops from x
    for &w in g.neighbors(x) {
        stamp[w] = round;
    }
    for &w in g.neighbors(x) {
        for &z in g.neighbors(w) {
            if z != x && stamp[z] != round {
                stamp[z] = round + 1;
            }
        }
    }
    targets
        .iter()
        .map(|&y| {
            if y == x {
                0.0
            } else if stamp[y] == round {
                1.0
            } else if stamp[y] == round + 1 {
                2.0
            } else {
                3.0
            }
        })
        .collect()
}

pub(super) struct CurvatureScratch {
    stamp: Vec<u32>,
    round: u32,
}

impl CurvatureScratch {
    pub(super) fn new(num_nodes: usize) -> Self {
        Self {
            stamp: vec![0; num_nodes],
            round: 0,
        }
    }
}

pub(super) fn edge_curvature(
    g: &Graph,
    edge: usize,
    alpha: f64,
    support_cap: usize,
    scratch: &mut CurvatureScratch,
) -> Result<f64, TopoError> {
    let (u, v) = g.edges()[edge];
    let (supply_nodes, supply) = lazy_walk_measure(g, u, alpha);
    let (demand_nodes, demand) = lazy_walk_measure(g, v, alpha);
    let mut ground_dist = Vec::with_capacity(supply_nodes.len());
    for &x in &supply_nodes {
        if scratch.round >= u32::MAX - 2 {
            scratch.stamp.fill(0);
            scratch.round = 0;
        }
        scratch.round += 2;
        ground_dist.push(short_range_distances(
            g,
            x,
            &demand_nodes,
            &mut scratch.stamp,
            scratch.round,
        ));
    }
    let problem = TransportProblem {
        supply,
        demand,
        ground_dist,
    };
    let w1 = wasserstein1_capped(&problem, support_cap)
        .map_err(|source| TopoError::Transport { edge, source })?;
    // d(u, v) = 1 for an edge.
    Ok(1.0 - w1)
}

/// Ollivier-Ricci curvature `1 - W1(m_u, m_v)` of edge `edge`, where `m_x` is
/// the `alpha`-lazy random-walk measure at `x` and the ground metric is hop
/// distance.
pub fn ollivier_ricci_edge(g: &Graph, edge: usize, alpha: f64) -> Result<f64, TopoError> {
    ollivier_ricci_edge_capped(g, edge, alpha, super::transport::DEFAULT_SUPPORT_CAP)
}

pub fn ollivier_ricci_edge_capped(
    g: &Graph,
    edge: usize,
    alpha: f64,
    support_cap: usize,
) -> Result<f64, TopoError> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(TopoError::InvalidAlpha(alpha));
    }
    if edge >= g.num_edges() {
        return Err(TopoError::UnknownEdge(edge));
    }
    edge_curvature(
        g,
        edge,
        alpha,
        support_cap,
        &mut CurvatureScratch::new(g.num_nodes()),
    )
}
