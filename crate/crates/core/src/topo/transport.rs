//! Exact Wasserstein-1 between two small discrete distributions.
//!
//! The transportation problem is solved as a min-cost flow on the complete
//! bipartite graph supply -> demand using successive shortest paths. Arc
//! capacities are unbounded, so the residual graph is dense and each shortest
//! path is a dense O(V^2) Dijkstra over reduced costs.

use thiserror::Error;

pub const DEFAULT_SUPPORT_CAP: usize = 512;

/// Mass conservation tolerance on each side.
const MASS_TOLERANCE: f64 = 1e-12;

/// Flow below this is treated as zero when deciding residual capacity.
const FLOW_EPS: f64 = 1e-15;

#[derive(Debug, Error, PartialEq)]
pub enum TransportError {
    #[error("{side} weights sum to {sum}, expected 1")]
    Unbalanced { side: &'static str, sum: f64 },
    #[error("{side} weight {index} is {value}; weights must be finite and nonnegative")]
    InvalidWeight {
        side: &'static str,
        index: usize,
        value: f64,
    },
    #[error("ground distance ({i}, {j}) is {value}; distances must be finite and nonnegative")]
    InvalidDistance { i: usize, j: usize, value: f64 },
    #[error("cost matrix is {rows}x{cols}, expected {expected_rows}x{expected_cols}")]
    Shape {
        rows: usize,
        cols: usize,
        expected_rows: usize,
        expected_cols: usize,
    },
    #[error("support of size {size} exceeds the cap of {cap}")]
    SupportTooLarge { size: usize, cap: usize },
}

/// Two probability vectors and the ground distance between their supports.
/// `ground_dist[i][j]` is the distance from supply point `i` to demand point `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportProblem {
    pub supply: Vec<f64>,
    pub demand: Vec<f64>,
    pub ground_dist: Vec<Vec<f64>>,
}

impl TransportProblem {
    pub fn validate(&self, support_cap: usize) -> Result<(), TransportError> {
        for (side, w) in [("supply", &self.supply), ("demand", &self.demand)] {
            if w.len() > support_cap {
                return Err(TransportError::SupportTooLarge {
                    size: w.len(),
                    cap: support_cap,
                });
            }
            if let Some((index, &value)) = w
                .iter()
                .enumerate()
                .find(|(_, x)| !x.is_finite() || **x < 0.0)
            {
                return Err(TransportError::InvalidWeight { side, index, value });
            }
            let sum: f64 = w.iter().sum();
            if (sum - 1.0).abs() > MASS_TOLERANCE {
                return Err(TransportError::Unbalanced { side, sum });
            }
        }
        let cols_ok = self
            .ground_dist
            .iter()
            .all(|row| row.len() == self.demand.len());
        if self.ground_dist.len() != self.supply.len() || !cols_ok {
            return Err(TransportError::Shape {
                rows: self.ground_dist.len(),
                cols: self.ground_dist.first().map_or(0, Vec::len),
                expected_rows: self.supply.len(),
                expected_cols: self.demand.len(),
            });
        }
        for (i, row) in self.ground_dist.iter().enumerate() {
            for (j, &value) in row.iter().enumerate() {
                if !value.is_finite() || value < 0.0 {
                    return Err(TransportError::InvalidDistance { i, j, value });
                }
            }
        }
        Ok(())
    }
}

/// Optimal transport cost under the default support cap.
pub fn wasserstein1(problem: &TransportProblem) -> Result<f64, TransportError> {
    wasserstein1_capped(problem, DEFAULT_SUPPORT_CAP)
}

pub fn wasserstein1_capped(
    problem: &TransportProblem,
    support_cap: usize,
) -> Result<f64, TransportError> {
    problem.validate(support_cap)?;
    // Zero-mass points never carry flow.
    let src: Vec<usize> = (0..problem.supply.len())
        .filter(|&i| problem.supply[i] > 0.0)
        .collect();
    let dst: Vec<usize> = (0..problem.demand.len())
        .filter(|&j| problem.demand[j] > 0.0)
        .collect();
    let cost: Vec<Vec<f64>> = src
        .iter()
        .map(|&i| dst.iter().map(|&j| problem.ground_dist[i][j]).collect())
        .collect();
    let supply: Vec<f64> = src.iter().map(|&i| problem.supply[i]).collect();
    let demand: Vec<f64> = dst.iter().map(|&j| problem.demand[j]).collect();
    Ok(MinCostTransport::new(supply, demand, cost).solve())
}

struct MinCostTransport {
    supply_left: Vec<f64>,
    demand_left: Vec<f64>,
    cost: Vec<Vec<f64>>,
    flow: Vec<Vec<f64>>,
}

impl MinCostTransport {
    fn new(supply: Vec<f64>, demand: Vec<f64>, cost: Vec<Vec<f64>>) -> Self {
        let flow = vec![vec![0.0; demand.len()]; supply.len()];
        Self {
            supply_left: supply,
            demand_left: demand,
            cost,
            flow,
        }
    }

    fn solve(mut self) -> f64 {
        let n = self.supply_left.len();
        let m = self.demand_left.len();
        // Node layout: sources 0..n, sinks n..n+m. The super source and super
        // sink are implicit: every source with supply left starts at distance
        // zero and the path ends at the cheapest sink with demand left.
        let total = n + m;
        let mut potential = vec![0.0; total];
        let mut dist = vec![f64::INFINITY; total];
        let mut parent = vec![usize::MAX; total];
        let mut done = vec![false; total];

        while self.supply_left.iter().any(|&s| s > FLOW_EPS)
            && self.demand_left.iter().any(|&d| d > FLOW_EPS)
        {
            dist.fill(f64::INFINITY);
            parent.fill(usize::MAX);
            done.fill(false);
            for (d, &s) in dist.iter_mut().zip(&self.supply_left) {
                if s > FLOW_EPS {
                    *d = 0.0;
                }
            }
            loop {
                let mut u = usize::MAX;
                let mut best = f64::INFINITY;
                for v in 0..total {
                    if !done[v] && dist[v] < best {
                        best = dist[v];
                        u = v;
                    }
                }
                if u == usize::MAX {
                    break;
                }
                done[u] = true;
                if u < n {
                    for j in 0..m {
                        let v = n + j;
                        let reduced = (self.cost[u][j] + potential[u] - potential[v]).max(0.0);
                        if dist[u] + reduced < dist[v] {
                            dist[v] = dist[u] + reduced;
                            parent[v] = u;
                        }
                    }
                } else {
                    let j = u - n;
                    for i in 0..n {
                        if self.flow[i][j] > FLOW_EPS {
                            let reduced = (-self.cost[i][j] + potential[u] - potential[i]).max(0.0);
                            if dist[u] + reduced < dist[i] {
                                dist[i] = dist[u] + reduced;
                                parent[i] = u;
                            }
                        }
                    }
                }
            }

            // Cheapest sink with demand left, in true (unreduced) path cost.
            let sink = (0..m)
                .filter(|&j| self.demand_left[j] > FLOW_EPS && dist[n + j].is_finite())
                .min_by(|&a, &b| {
                    let da = dist[n + a] + potential[n + a];
                    let db = dist[n + b] + potential[n + b];
                    da.total_cmp(&db)
                })
                .expect("balanced transport always has a reachable sink");

            // Potentials must stay valid for every node, so unreachable
            // nodes are shifted by the largest finite distance.
            let cap = dist
                .iter()
                .copied()
                .filter(|d| d.is_finite())
                .fold(0.0, f64::max);
            for v in 0..total {
                potential[v] += dist[v].min(cap);
            }

            let mut bottleneck = self.demand_left[sink];
            let mut v = n + sink;
            while parent[v] != usize::MAX {
                let u = parent[v];
                if u >= n {
                    bottleneck = bottleneck.min(self.flow[v][u - n]);
                }
                v = u;
            }
            bottleneck = bottleneck.min(self.supply_left[v]);

            let mut v = n + sink;
            while parent[v] != usize::MAX {
                let u = parent[v];
                if u < n {
                    self.flow[u][v - n] += bottleneck;
                } else {
                    self.flow[v][u - n] -= bottleneck;
                }
                v = u;
            }
            self.supply_left[v] -= bottleneck;
            self.demand_left[sink] -= bottleneck;
        }

        self.flow
            .iter()
            .zip(&self.cost)
            .flat_map(|(f, c)| f.iter().zip(c).map(|(f, c)| f.max(0.0) * c))
            .sum()
    }
}
