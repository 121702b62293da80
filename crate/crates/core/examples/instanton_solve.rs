//! Corrects a perturbed flat graph to a discrete instanton and prints the report.

use g2lab::cayley::Vec7;
use g2lab::instanton::{solve_instanton, CurveGraph, FlatModel, SolveOptions};
use num_complex::Complex64;

fn main() -> anyhow::Result<()> {
    let model = FlatModel::new(Vec7::e(1), 0.2)?;
    let curve = CurveGraph::perturbed(24, Complex64::new(0.3, -0.1), 1e-2, 1)?;
    let start = std::time::Instant::now();
    let sol = solve_instanton(&model, &curve, &SolveOptions::default())?;
    println!("certificate: {:?}", sol.certificate);
    println!("residuals: {:?}", sol.trace.residuals);
    println!("{:#?}", sol.report);
    println!("elapsed: {:.1?}", start.elapsed());
    Ok(())
}
