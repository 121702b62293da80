//! Newton iteration with a Kantorovich certificate on x^2 = 1 and on a
//! system where the certificate fails.

use g2lab::kantor::{convergence_order, newton_solve, DenseMap, Diagonal, Euclidean, NewtonError, NewtonOptions};
use nalgebra::DMatrix;

fn main() {
    let square = DenseMap {
        dim_in: 1,
        dim_out: 1,
        f: |x: &[f64]| vec![x[0] * x[0] - 1.0],
        df: |x: &[f64]| DMatrix::from_element(1, 1, 2.0 * x[0]),
    };
    let opts = NewtonOptions { tol: 1e-14, ..Default::default() };
    for x0 in [1.2, 2.0, 0.6] {
        match newton_solve(&square, &[x0], &Euclidean, &Diagonal(vec![1.0]), &opts) {
            Ok(o) => {
                let c = &o.certificate;
                println!(
                    "x0 = {x0}: root {:.15}  alpha {:.3} beta {:.3} k {:.3}  2k*alpha*beta = {:.3} {:?}",
                    o.x[0], c.alpha, c.beta, c.k, c.two_k_alpha_beta(), c.verdict
                );
                println!("  residuals {:?}", o.trace.residuals);
                if let Some(p) = convergence_order(&o.trace.residuals, 1e-14, 1.0) {
                    println!("  order {p:.3}");
                }
            }
            Err(e) => println!("x0 = {x0}: {e}"),
        }
    }

    // No real root: the certificate refuses before any step is taken.
    let no_root = DenseMap {
        dim_in: 1,
        dim_out: 1,
        f: |x: &[f64]| vec![x[0] * x[0] + 1.0],
        df: |x: &[f64]| DMatrix::from_element(1, 1, 2.0 * x[0]),
    };
    let strict = NewtonOptions { require_certificate: true, ..Default::default() };
    match newton_solve(&no_root, &[0.5], &Euclidean, &Diagonal(vec![1.0]), &strict) {
        Err(NewtonError::CertificateFailed(c)) => println!("x^2 + 1: refused, {:?}", c.verdict),
        other => println!("x^2 + 1: {:?}", other.map(|o| o.x)),
    }
}
