//! How far the flat ruled family is from an instanton as the fibres shrink:
//! tau, the metric defect and the Dirac operator gap all scale like eps.

use g2lab::instanton::{sweep, SweepOptions};

fn main() -> anyhow::Result<()> {
    let opts = SweepOptions {
        eps_list: vec![0.05, 0.1, 0.2, 0.4],
        ..Default::default()
    };
    println!("{:>6} {:>10} {:>10} {:>10}", "eps", "tau/eps", "metric/eps", "gap/eps");
    for row in sweep(&opts)? {
        let [a, b, c] = row.ratios();
        println!("{:>6} {a:>10.4} {b:>10.4} {c:>10.4}", row.eps);
    }
    Ok(())
}
