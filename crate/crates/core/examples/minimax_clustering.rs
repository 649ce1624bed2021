//! Minimax-linkage clustering of correlated synthetic assets and the
//! prototypes kept at a few cut heights.

use gibs::cluster::{correlation_distance, cut_by_threshold, minimax_cluster};
use gibs::panel::{synthesize, SyntheticSpec};

fn main() -> gibs::Result<()> {
    let data = synthesize(&SyntheticSpec {
        n_basis: 16,
        correlation: 0.8,
        seed: 3,
        ..SyntheticSpec::default()
    })?;
    let panel = data.universe.panel();
    let ids = panel.assets();
    let d = correlation_distance(panel)?;
    let dend = minimax_cluster(&d);
    for m in dend.merges.iter().take(5) {
        println!("merge {} + {} at {:.3}, prototype {}", m.a, m.b, m.height, ids[m.prototype]);
    }
    for h in [0.3, 0.5, 0.7] {
        let clusters = cut_by_threshold(&dend, h);
        let protos: Vec<&str> = clusters.iter().map(|c| ids[c.prototype].as_str()).collect();
        println!("cut {h}: {} clusters, prototypes {protos:?}", clusters.len());
    }
    Ok(())
}
