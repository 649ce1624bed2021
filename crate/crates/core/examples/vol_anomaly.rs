//! Low- versus high-volatility portfolios: formation, cumulative capital,
//! the Welch anomaly test on excess returns and on rolling AMF residuals,
//! and the stacked loading-difference test.

use gibs::gibs::{BasisDesign, GibsConfig, GibsModel};
use gibs::panel::{excess_returns, synthesize, SyntheticSpec};
use gibs::vol::{
    anomaly_series, anomaly_test, cumulative_capital, form_vol_portfolios, loading_difference_test, rolling_study,
    AnomalyMode, RollingModel, VolConfig, HIGH, LOW,
};
use nalgebra::DVector;

fn main() -> gibs::Result<()> {
    let data = synthesize(&SyntheticSpec {
        n_obs: 260,
        n_securities: 24,
        n_basis: 15,
        noise_sd: 0.01,
        seed: 21,
        ..SyntheticSpec::default()
    })?;
    let vcfg = VolConfig::default();
    let ports = form_vol_portfolios(&data.securities, &data.risk_free, &vcfg, None)?;
    println!("formed {} weeks, {} names per leg", ports.weeks.len(), ports.low[0].len());
    let low = cumulative_capital(&ports.low_ret)?;
    let high = cumulative_capital(&ports.high_ret)?;
    println!(
        "terminal capital: low {:.3}, high {:.3}",
        low.values.last().unwrap(),
        high.values.last().unwrap()
    );

    let y = ports.returns_panel(data.securities.timestamps())?;
    let excess = excess_returns(&y, &data.risk_free)?;
    let cfg = GibsConfig {
        category_threshold: 0.2,
        global_threshold: 0.2,
        cv_folds: 5,
        seed: 5,
        ..GibsConfig::default()
    };
    let first = ports.rows[0];
    let window = 104;
    let study = rolling_study(
        &y,
        &data.universe,
        &data.risk_free,
        &cfg,
        window,
        first + window - 1..y.n_periods(),
        &[RollingModel::Amf],
    )?;
    for mode in [AnomalyMode::Excess, AnomalyMode::ResidualAmf] {
        let (a, b) = anomaly_series(&study, &excess, mode)?;
        let r = anomaly_test(&a, &b)?;
        println!("{mode}: t = {:.2}, df = {:.1}, p = {:.4}", r.t_stat, r.df, r.p_value);
    }
    println!("AMF selection stability (low): {:.3}", study.jaccard_stability(LOW, RollingModel::Amf));

    let rows: Vec<usize> = (first..y.n_periods()).collect();
    let uni = data.universe.slice_rows(first..y.n_periods())?;
    let design = BasisDesign::from_excess(&uni, &data.risk_free.slice(first..y.n_periods())?)?;
    let model = GibsModel::new(&design, &cfg)?;
    let col = |j: usize| DVector::from_iterator(rows.len(), rows.iter().map(|&t| excess.values()[(t, j)]));
    let (yl, yh) = (col(0), col(1));
    let sl = model.select(LOW, &yl)?;
    let sh = model.select(HIGH, &yh)?;
    let f = loading_difference_test(&yl, &yh, &design, &sl.selected, &sh.selected)?;
    println!(
        "loading difference: S_low {:?}, S_high {:?}, F = {:.2} on ({}, {}), p = {:.4}",
        sl.selected, sh.selected, f.f_stat, f.df1, f.df2, f.p_value
    );
    Ok(())
}
