use duognn_core::data::{generate_sbm, SbmSpec};
use duognn_core::decouple::{decouple, homophily_report, DecoupleConfig};
use duognn_core::graph::Graph;
use duognn_core::topo::MetricKind;

fn sbm(seed: u64) -> Graph {
    generate_sbm(&SbmSpec {
        blocks: 4,
        block_size: 25,
        p_in: 0.2,
        p_out: 0.02,
        feature_dim: 8,
        mean_scale: 1.0,
        seed,
    })
    .unwrap()
}

fn inter_block_edges(g: &Graph) -> usize {
    g.edges()
        .iter()
        .filter(|&&(u, v)| g.labels()[u] != g.labels()[v])
        .count()
}

fn curvature_cfg(kappa: usize, mu: usize) -> DecoupleConfig {
    DecoupleConfig {
        metric: MetricKind::curvature(),
        kappa,
        mu,
    }
}

#[test]
fn filtering_raises_homophily_on_every_seed() {
    for seed in 0..20 {
        let g = sbm(seed);
        let r = decouple(&g, &curvature_cfg(inter_block_edges(&g), 20)).unwrap();
        let before = homophily_report(&g);
        let after = homophily_report(&r.g_ho);
        assert!(after.edge_homophily > before.edge_homophily, "seed {seed}");
        assert!(
            after.mean_node_homophily() > before.mean_node_homophily(),
            "seed {seed}"
        );
    }
}

#[test]
fn curvature_prefers_inter_block_edges() {
    // Most of the removed edges cross blocks, far above the base rate.
    let g = sbm(7);
    let kappa = inter_block_edges(&g);
    let r = decouple(&g, &curvature_cfg(kappa, 20)).unwrap();
    let removed_inter = kappa - inter_block_edges(&r.g_ho);
    let base_rate = kappa as f64 / g.num_edges() as f64;
    assert!(removed_inter as f64 / kappa as f64 > 2.0 * base_rate);
}

#[test]
fn fixture_decouple_is_deterministic() {
    let g = sbm(7);
    let cfg = curvature_cfg(inter_block_edges(&g), 20);
    assert_eq!(decouple(&g, &cfg).unwrap(), decouple(&g, &cfg).unwrap());
}
