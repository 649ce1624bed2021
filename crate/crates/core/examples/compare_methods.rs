//! GIBS against CV-LASSO, elastic nets and ridge on a holdout year.

use gibs::gibs::{compare_methods, GibsConfig, Method};
use gibs::panel::{synthesize, SyntheticSpec};

fn main() -> gibs::Result<()> {
    let data = synthesize(&SyntheticSpec {
        n_securities: 12,
        seed: 17,
        ..SyntheticSpec::default()
    })?;
    let cfg = GibsConfig {
        category_threshold: 0.2,
        global_threshold: 0.2,
        seed: 6,
        ..GibsConfig::default()
    };
    let methods = [
        Method::Gibs,
        Method::LassoCv,
        Method::Enet(0.5),
        Method::Ridge,
    ];
    let rows = compare_methods(&data.securities, &data.universe, &data.risk_free, &cfg, &methods, 52)?;
    println!("{:<20} {:>8} {:>8} {:>8} {:>8}", "method", "|S|", "|S*|", "adj R2", "OoS R2");
    let fmt = |v: Option<f64>| v.map_or("NA".to_string(), |v| format!("{v:.3}"));
    for r in &rows {
        println!(
            "{:<20} {:>8.2} {:>8} {:>8} {:>8}",
            r.method.to_string(),
            r.avg_selected,
            fmt(r.avg_significant),
            fmt(r.avg_adj_r2),
            fmt(Some(r.avg_oos_r2))
        );
    }
    Ok(())
}
