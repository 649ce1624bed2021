//! BH and BHY q-values for a mix of null and signal p-values.

use gibs::fdr::{adjust, FdrMethod};

fn main() -> gibs::Result<()> {
    let p = [0.0001, 0.0004, 0.0019, 0.0095, 0.02, 0.03, 0.12, 0.35, 0.61, 0.88];
    let bh = adjust(&p, FdrMethod::Bh)?;
    let bhy = adjust(&p, FdrMethod::Bhy)?;
    println!("{:>8} {:>8} {:>8}", "p", "BH", "BHY");
    for i in 0..p.len() {
        println!("{:>8.4} {:>8.4} {:>8.4}", p[i], bh.q_values[i], bhy.q_values[i]);
    }
    println!("rejected at 0.05: BH {:?}, BHY {:?}", bh.rejected(0.05), bhy.rejected(0.05));
    Ok(())
}
