//! LASSO regularization path, 10-fold CV and the capped one-standard-error
//! choice on a sparse regression.

use gibs::lasso::{capped_lasso, lambda_max, lasso_fit};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> gibs::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (n, p) = (120, 15);
    let x = DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng));
    let truth = [(0, 1.5), (3, -1.0), (7, 0.8)];
    let y = DVector::from_fn(n, |i, _| {
        let signal: f64 = truth.iter().map(|&(j, b)| b * x[(i, j)]).sum();
        let e: f64 = StandardNormal.sample(&mut rng);
        signal + 0.5 * e
    });

    let sel = capped_lasso(&x, &y, 10, 5, 42)?;
    println!("lambda_max (standardized) = {:.4}", sel.path.lambdas[0]);
    println!("lambda_min = {:.5}  lambda_1se = {:.5}", sel.curve.lambda_min, sel.curve.lambda_1se);
    println!("chosen lambda = {:.5}, support = {:?}", sel.lambda, sel.support);
    for l in (0..sel.path.len()).step_by(10) {
        println!(
            "  lambda {:>9.5}  |S| = {:>2}  cv = {:.4} +- {:.4}",
            sel.path.lambdas[l], sel.path.support_sizes[l], sel.curve.mean_error[l], sel.curve.se_error[l]
        );
    }

    // single fit on the raw scale
    let lam = 0.2 * lambda_max(&x, &y);
    let b = lasso_fit(&x, &y, lam)?;
    let nz: Vec<usize> = (0..p).filter(|&j| b[j] != 0.0).collect();
    println!("raw fit at 0.2 lambda_max: nonzero {nz:?}");
    Ok(())
}
