//! Brute-force reference computations used by the test suites.
//!
//! Nothing here shares code with the production routines: distances come from
//! Floyd-Warshall over an edge list and transport costs from enumerating every
//! basic transport plan.

/// Minimum transport cost found by enumerating every spanning tree of the
/// complete bipartite supply/demand graph. Each basic feasible solution of the
/// transportation polytope is supported on such a tree, and the tree fixes the
/// flow uniquely (leaf peeling), so the minimum over feasible trees is the
/// optimum.
pub fn transport_by_enumeration(supply: &[f64], demand: &[f64], cost: &[Vec<f64>]) -> f64 {
    let n = supply.len();
    let m = demand.len();
    assert!(n > 0 && m > 0);
    let cells: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).collect();
    let mut search = TreeSearch {
        n,
        m,
        supply,
        demand,
        cost,
        cells: &cells,
        chosen: Vec::with_capacity(n + m - 1),
        best: f64::INFINITY,
    };
    let parent: Vec<usize> = (0..n + m).collect();
    search.descend(0, parent);
    search.best
}

struct TreeSearch<'a> {
    n: usize,
    m: usize,
    supply: &'a [f64],
    demand: &'a [f64],
    cost: &'a [Vec<f64>],
    cells: &'a [(usize, usize)],
    chosen: Vec<usize>,
    best: f64,
}

fn find(parent: &[usize], mut x: usize) -> usize {
    while parent[x] != x {
        x = parent[x];
    }
    x
}

impl TreeSearch<'_> {
    fn descend(&mut self, next: usize, parent: Vec<usize>) {
        let need = self.n + self.m - 1;
        if self.chosen.len() == need {
            if let Some(c) = self.tree_cost() {
                self.best = self.best.min(c);
            }
            return;
        }
        if self.cells.len() - next < need - self.chosen.len() {
            return;
        }
        let (i, j) = self.cells[next];
        let (ri, rj) = (find(&parent, i), find(&parent, self.n + j));
        if ri != rj {
            let mut joined = parent.clone();
            joined[ri] = rj;
            self.chosen.push(next);
            self.descend(next + 1, joined);
            self.chosen.pop();
        }
        self.descend(next + 1, parent);
    }

    /// Cost of the unique flow on the chosen spanning tree, or `None` when it
    /// needs a negative entry.
    fn tree_cost(&self) -> Option<f64> {
        let (n, m) = (self.n, self.m);
        let mut left: Vec<f64> = self.supply.iter().chain(self.demand).copied().collect();
        let mut degree = vec![0usize; n + m];
        let mut live: Vec<bool> = vec![true; self.chosen.len()];
        for &c in &self.chosen {
            let (i, j) = self.cells[c];
            degree[i] += 1;
            degree[n + j] += 1;
        }
        let mut total = 0.0;
        for _ in 0..self.chosen.len() {
            // Any live cell with a leaf endpoint.
            let (k, leaf, other) = self
                .chosen
                .iter()
                .enumerate()
                .filter(|(k, _)| live[*k])
                .find_map(|(k, &c)| {
                    let (i, j) = self.cells[c];
                    if degree[i] == 1 {
                        Some((k, i, n + j))
                    } else if degree[n + j] == 1 {
                        Some((k, n + j, i))
                    } else {
                        None
                    }
                })?;
            let flow = left[leaf];
            if flow < -1e-12 {
                return None;
            }
            let (i, j) = self.cells[self.chosen[k]];
            total += flow * self.cost[i][j];
            left[leaf] = 0.0;
            left[other] -= flow;
            degree[leaf] -= 1;
            degree[other] -= 1;
            live[k] = false;
        }
        Some(total)
    }
}

/// All-pairs hop distances by Floyd-Warshall (`f64::INFINITY` if unreachable).
pub fn floyd_warshall(num_nodes: usize, edges: &[(usize, usize)]) -> Vec<Vec<f64>> {
    let mut d = vec![vec![f64::INFINITY; num_nodes]; num_nodes];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for &(u, v) in edges {
        if u != v {
            d[u][v] = 1.0;
            d[v][u] = 1.0;
        }
    }
    for k in 0..num_nodes {
        for i in 0..num_nodes {
            for j in 0..num_nodes {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// Ollivier-Ricci curvature of edge `(u, v)` computed from scratch.
pub fn curvature_by_enumeration(
    num_nodes: usize,
    edges: &[(usize, usize)],
    u: usize,
    v: usize,
    alpha: f64,
) -> f64 {
    let d = floyd_warshall(num_nodes, edges);
    let measure = |x: usize| -> Vec<(usize, f64)> {
        let nbrs: Vec<usize> = (0..num_nodes).filter(|&w| d[x][w] == 1.0).collect();
        let mut m: Vec<(usize, f64)> = nbrs
            .iter()
            .map(|&w| (w, (1.0 - alpha) / nbrs.len() as f64))
            .collect();
        if alpha > 0.0 {
            m.push((x, alpha));
        }
        m
    };
    let mu = measure(u);
    let mv = measure(v);
    let cost: Vec<Vec<f64>> = mu
        .iter()
        .map(|&(x, _)| mv.iter().map(|&(y, _)| d[x][y]).collect())
        .collect();
    let supply: Vec<f64> = mu.iter().map(|p| p.1).collect();
    let demand: Vec<f64> = mv.iter().map(|p| p.1).collect();
    1.0 - transport_by_enumeration(&supply, &demand, &cost) / d[u][v]
}

/// One representative edge list for every isomorphism class of connected
/// simple graphs on exactly `n` nodes (`n <= 7`).
pub fn connected_graphs(n: usize) -> Vec<Vec<(usize, usize)>> {
    assert!((1..=7).contains(&n));
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let mut pair_index = vec![vec![0usize; n]; n];
    for (k, &(i, j)) in pairs.iter().enumerate() {
        pair_index[i][j] = k;
        pair_index[j][i] = k;
    }
    let perms = permutations(n);
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for mask in 0u64..(1 << pairs.len()) {
        let edges: Vec<(usize, usize)> = pairs
            .iter()
            .enumerate()
            .filter(|(k, _)| mask >> k & 1 == 1)
            .map(|(_, &e)| e)
            .collect();
        if !is_connected(n, &edges) {
            continue;
        }
        let canonical = perms
            .iter()
            .map(|p| {
                edges
                    .iter()
                    .fold(0u64, |acc, &(i, j)| acc | 1 << pair_index[p[i]][p[j]])
            })
            .min()
            .unwrap();
        if seen.insert(canonical) {
            out.push(edges);
        }
    }
    out
}

fn is_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut changed = true;
    while changed {
        changed = false;
        for &(u, v) in edges {
            if seen[u] != seen[v] {
                seen[u] = true;
                seen[v] = true;
                changed = true;
            }
        }
    }
    seen.into_iter().all(|s| s)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}
