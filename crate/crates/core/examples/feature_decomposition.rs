//! Splits a feature matrix whose span contains the constant vector.

use linear_td::oracle::feature_decomposition;
use linear_td::FeatureMatrix;

fn main() -> linear_td::Result<()> {
    // Column 2 is 1 - column 0, so 1 ∈ col(X) and rank(X) = 2.
    let x = FeatureMatrix::from_rows(&[
        vec![1.0, 0.5, 0.0],
        vec![0.0, 2.0, 1.0],
        vec![0.5, 1.0, 0.5],
        vec![0.25, 0.0, 0.75],
    ])?;
    let dec = feature_decomposition(&x, Default::default())?;
    println!("rank X = {}, rank X1 = {}, 1 in col(X): {}", dec.rank_x, dec.rank_x1, dec.one_in_col_x);
    println!("theta = {}", dec.theta.transpose());
    println!("X1 ={}", dec.x1);
    println!("ker(X1) basis ={}", dec.kernel_x1());
    let check = dec.check(&x);
    println!("reconstruction error {:.1e}, holds: {}", check.reconstruction_error, check.holds(1e-10));
    Ok(())
}
