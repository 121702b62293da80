//! The one-dimensional Poincare inequality behind the lower bound, and the
//! comparison between warped and flat spectra.

use g2lab::dirac::{poincare_check, warped_sandwich, BoundaryCondition, CylinderGrid, SpectralOptions};

fn main() -> anyhow::Result<()> {
    let eps = 1.0;
    for m in [8, 32, 128] {
        let xs: Vec<f64> = (0..m).map(|k| eps * k as f64 / (m - 1) as f64).collect();
        let linear: Vec<f64> = xs.clone();
        let sine: Vec<f64> = xs.iter().map(|x| (std::f64::consts::FRAC_PI_2 * x / eps).sin()).collect();
        let (l1, r1) = poincare_check(&linear, eps)?;
        let (l2, r2) = poincare_check(&sine, eps)?;
        println!("M = {m:>3}  linear {l1:.5} <= {r1:.5}   sine {l2:.5} <= {r2:.5}");
    }

    let grid = CylinderGrid::new(1.0, 8, 12, [0.5, 0.0])?.with_warp_fn(|x2, x3| 1.0 + 0.3 * x2.cos() * x3.sin())?;
    let s = warped_sandwich(&grid, BoundaryCondition::Hminus, &SpectralOptions::default())?;
    println!(
        "warped {:.5}  flat {:.5}  window [{:.5}, {:.5}]  holds: {}",
        s.lambda_warped, s.lambda_flat, s.lower, s.upper, s.holds
    );
    Ok(())
}
