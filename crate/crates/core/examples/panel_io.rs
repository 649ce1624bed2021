//! Reading wide and long CSV panels, aligning on dates, filtering by
//! coverage and deriving excess returns and price levels.

use std::fs;

use gibs::panel::{adjusted_prices, excess_returns, filter_coverage, load_panel, load_risk_free, write_panel, Layout};

fn main() -> gibs::Result<()> {
    let dir = std::env::temp_dir().join("gibs-panel-io");
    fs::create_dir_all(&dir).expect("temp dir");
    let wide = dir.join("wide.csv");
    let long = dir.join("long.csv");
    let rf = dir.join("rf.csv");
    fs::write(&wide, "date,A,B\n2020-W01,0.01,\n2020-W02,0.02,0.01\n2020-W03,-0.01,0.03\n").expect("write");
    fs::write(&long, "date,asset,value\n2020-W03,C,0.02\n2020-W01,C,0.00\n2020-W02,C,0.01\n").expect("write");
    fs::write(&rf, "date,rf\n2020-W01,0.001\n2020-W02,0.001\n2020-W03,0.001\n").expect("write");

    let a = load_panel(&wide, Layout::Wide)?;
    let c = load_panel(&long, Layout::Long)?;
    println!("wide: {:?} over {:?}", a.assets(), a.timestamps());
    println!("coverage of B: {:.2}", a.coverage(1));
    let kept = filter_coverage(&a, 1.0)?;
    println!("fully covered: {:?}", kept.assets());

    let r = load_risk_free(&rf)?;
    let ex = excess_returns(&c, &r)?;
    println!("excess C: {:?}", ex.column(0));
    let prices = adjusted_prices(&c, &[100.0])?;
    println!("prices C: {:?}", prices.prices().column(0).as_slice());

    write_panel(&c, dir.join("long_as_wide.csv"), Layout::Wide)?;
    println!("{}", fs::read_to_string(dir.join("long_as_wide.csv")).expect("read"));
    Ok(())
}
