//! Jensen's-alpha tests: the direct intercept test on excess returns, the
//! two-step test on price levels, and the risk-free-zero case where the
//! money-market column equals the constant.

use gibs::gibs::{run_gibs, BasisDesign, GibsConfig};
use gibs::model_tests::{intercept_test, intercept_test_two_step, PriceWindow};
use gibs::panel::{excess_returns, synthesize, RiskFreeSeries, SyntheticSpec};
use nalgebra::{DMatrix, DVector};

fn main() -> gibs::Result<()> {
    let data = synthesize(&SyntheticSpec {
        n_securities: 6,
        n_basis: 20,
        seed: 9,
        ..SyntheticSpec::default()
    })?;
    let design = BasisDesign::from_excess(&data.universe, &data.risk_free)?;
    let y = excess_returns(&data.securities, &data.risk_free)?;
    let cfg = GibsConfig {
        category_threshold: 0.2,
        global_threshold: 0.2,
        seed: 2,
        ..GibsConfig::default()
    };
    let run = run_gibs(&y, &design, &cfg, None)?;
    for (i, r) in run.results.iter().enumerate() {
        let cols: Vec<usize> = r.selected.iter().filter_map(|s| design.index_of(s)).collect();
        let (a, p) = intercept_test(&DVector::from_vec(y.column(i)), &design.columns(&cols))?;
        println!("{}  alpha = {a:+.6}  p = {p:.3}", r.security);
    }

    // rf = 0: money market is the constant vector
    let zero = RiskFreeSeries::constant(data.risk_free.timestamps().to_vec(), 0.0)?;
    let window = PriceWindow::new(&data.securities, &data.universe, &zero)?;
    let sel = window.select(&cfg)?;
    for r in sel.results.iter().take(3) {
        let j = window.y_levels.asset_index(&r.security).expect("security present");
        let y = DVector::from_vec(window.y_levels.column(j));
        let mut ids = vec![gibs::gibs::MONEY_MARKET_ID.to_string()];
        ids.extend(r.selected.iter().cloned());
        let v: DMatrix<f64> = PriceWindow::columns_of(&window.v_levels, &ids)?;
        let (a, p) = intercept_test_two_step(&y, &v)?;
        println!("{} two-step (rf = 0)  alpha = {a:+.3e}  p = {p:.3}", r.security);
    }
    Ok(())
}
