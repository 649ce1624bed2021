//! Selects sparse factor sets for synthetic securities and checks them
//! against the planted supports.

use gibs::gibs::{run_gibs, BasisDesign, GibsConfig};
use gibs::panel::{excess_returns, synthesize, SyntheticSpec};

fn main() -> gibs::Result<()> {
    let spec = SyntheticSpec {
        n_securities: 10,
        seed: 11,
        ..SyntheticSpec::default()
    };
    let data = synthesize(&spec)?;
    let design = BasisDesign::from_excess(&data.universe, &data.risk_free)?;
    let y = excess_returns(&data.securities, &data.risk_free)?;
    let config = GibsConfig {
        category_threshold: 0.2,
        global_threshold: 0.2,
        seed: 1,
        ..GibsConfig::default()
    };
    let run = run_gibs(&y, &design, &config, None)?;
    println!("prototypes: {}", run.universe.len());
    for (i, r) in run.results.iter().enumerate() {
        let truth = data.truth.support_ids(i, data.universe.panel());
        let covered = truth.iter().all(|t| r.selected.iter().any(|s| s == t));
        println!(
            "{}  true={:?}  selected={:?}  significant={:?}  covered={covered}",
            r.security, truth, r.selected, r.significant
        );
    }
    Ok(())
}
