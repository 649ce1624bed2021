//! Start-year by end-year grid of the time-invariance rejection share,
//! with its diagonal slices.

use gibs::gibs::GibsConfig;
use gibs::model_tests::{window_test_grid, WindowTest};
use gibs::panel::{synthesize, Regime, SyntheticSpec};

fn main() -> gibs::Result<()> {
    let data = synthesize(&SyntheticSpec {
        n_obs: 52 * 5,
        n_securities: 8,
        n_basis: 15,
        regime: Regime::BreakAtMidpoint,
        seed: 8,
        ..SyntheticSpec::default()
    })?;
    let cfg = GibsConfig {
        category_threshold: 0.2,
        global_threshold: 0.2,
        cv_folds: 5,
        seed: 3,
        ..GibsConfig::default()
    };
    let grid = window_test_grid(
        WindowTest::Invariance,
        &data.securities,
        &data.universe,
        &data.risk_free,
        &cfg,
        (2007, 2011),
        3,
    );
    println!("{} windows, {} computed", grid.cells.len(), grid.populated());
    for ((s, e), v) in &grid.cells {
        println!("  {s}-{e}: {}", v.map_or("NA".to_string(), |v| format!("{:.1}%", 100.0 * v)));
    }
    for k in 0..3 {
        println!("skew diagonal {k}: {:?}", grid.skew_diagonal(k).iter().map(|(w, _)| *w).collect::<Vec<_>>());
    }
    for k in 0..grid.anti_diagonal_keys().len() {
        println!("anti-diagonal {k}: {:?}", grid.skew_anti_diagonal(k).iter().map(|(w, _)| *w).collect::<Vec<_>>());
    }
    Ok(())
}
