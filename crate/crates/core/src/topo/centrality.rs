use crate::graph::{connected_components, Graph};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Eigenvector centrality by power iteration, computed independently on each
/// connected component.
///
/// Iterates with `A + I`, which has the same leading eigenvector as `A` but
/// does not oscillate on bipartite components. Each component's vector is
/// normalized to unit L2 norm (a singleton gets 1), then the whole vector is
/// rescaled to unit norm.
pub fn eigenvector_centrality(g: &Graph, tol: f64, max_iter: usize) -> Vec<f64> {
    let n = g.num_nodes();
    let mut out = vec![0.0; n];
    if n == 0 {
        return out;
    }
    let labeling = connected_components(g);
    let members = labeling.members();
    let mut next = vec![0.0; n];
    for nodes in &members {
        if nodes.len() == 1 {
            out[nodes[0]] = 1.0;
            continue;
        }
        let start = 1.0 / (nodes.len() as f64).sqrt();
        for &v in nodes {
            out[v] = start;
        }
        for _ in 0..max_iter {
            for &v in nodes {
                next[v] = out[v] + g.neighbors(v).iter().map(|&w| out[w]).sum::<f64>();
            }
            let norm = nodes.iter().map(|&v| next[v] * next[v]).sum::<f64>().sqrt();
            let mut delta = 0.0;
            for &v in nodes {
                let x = next[v] / norm;
                delta += (x - out[v]) * (x - out[v]);
                out[v] = x;
            }
            if delta.sqrt() < tol {
                break;
            }
        }
    }
    let scale = 1.0 / (members.len() as f64).sqrt();
    out.iter_mut().for_each(|x| *x *= scale);
    out
}
