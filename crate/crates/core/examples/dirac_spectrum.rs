//! Lowest eigenvalue of the twisted Dirac operator on [0, eps] x T^2 against the
//! torus ground state, as the cylinder gets shorter.

use g2lab::dirac::{fourier_lambda_dplus, lowest_eigenvalue, kernel_equivalence, BoundaryCondition, CylinderGrid};

fn main() -> anyhow::Result<()> {
    let twist = [0.5, 0.0];
    println!("continuum torus ground state: {}", fourier_lambda_dplus(twist));
    println!("{:>6} {:>12} {:>12} {:>12}", "eps", "lambda_D", "lower", "upper");
    for eps in [8.0, 4.0, 2.0, 1.0, 0.5, 0.25] {
        let m = (16.0 * f64::max(eps, 1.0)) as usize;
        let grid = CylinderGrid::new(eps, m, 32, twist)?;
        let rep = lowest_eigenvalue(&grid, BoundaryCondition::Hminus)?;
        println!("{eps:>6} {:>12.6} {:>12.6} {:>12.6}", rep.lambda_d, rep.bound_lo, rep.bound_hi);
    }

    // Second-order convergence towards the continuum value.
    let err = |n| -> anyhow::Result<f64> {
        let grid = CylinderGrid::new(0.5, 16, n, twist)?;
        Ok((lowest_eigenvalue(&grid, BoundaryCondition::Hminus)?.lambda_d - 0.25).abs())
    };
    let (e32, e64) = (err(32)?, err(64)?);
    println!("error N=32 {e32:.3e}, N=64 {e64:.3e}, order {:.3}", (e32 / e64).log2());

    for th in [[0.0, 0.0], [0.25, 0.25]] {
        let grid = CylinderGrid::new(1.0, 8, 16, th)?;
        println!("twist {th:?}: (torus kernel, Dirac kernel) = {:?}", kernel_equivalence(&grid)?);
    }
    Ok(())
}
