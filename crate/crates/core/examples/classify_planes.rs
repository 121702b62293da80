//! Associative planes: the calibration value reaches 1 exactly where tau vanishes.

use g2lab::calib::{classify_3plane, classify_4plane, projected_normals_gram_det, tau_normal_component, FourFrame, ThreeFrame};
use g2lab::cayley::{cross, Vec7};

fn main() -> anyhow::Result<()> {
    let e = Vec7::e;
    let planes = [
        ("e1 e2 e3", ThreeFrame::new(e(1), e(2), e(3))?),
        ("e1 e2 e4", ThreeFrame::new(e(1), e(2), e(4))?),
        ("e3 e2 e1", ThreeFrame::new(e(3), e(2), e(1))?),
    ];
    for (name, fr) in &planes {
        let r = classify_3plane(fr, 1e-10);
        println!("{name}: Omega = {:+.3}  |tau| = {:.3}  {:?}", r.calibration_value, r.tau_norm, r.classification);
    }

    // span{u, v, u x v} is always associative.
    let u = Vec7([0.3, -1.0, 0.2, 0.5, 0.0, 0.7, -0.1]);
    let v = Vec7([1.0, 0.4, 0.0, -0.3, 0.9, 0.0, 0.2]);
    let r = classify_3plane(&ThreeFrame::new(u, v, cross(&u, &v))?, 1e-10);
    println!("u, v, u x v: Omega = {:.15}", r.calibration_value);

    // Tilting e3 towards the normal directions.
    for s in [1e-1, 1e-2, 1e-3] {
        let t = [s, -0.5 * s, 0.0, s];
        let r = classify_3plane(&ThreeFrame::perturbed(t), 1e-10);
        let n = tau_normal_component(t);
        println!(
            "t = {s:.0e}: |tau| = {:.3e}  normal part = {:?}  Gram det = {:.4}",
            r.tau_norm,
            n.0.map(|x| (x * 1e6).round() / 1e6),
            projected_normals_gram_det(t)
        );
    }

    let c0 = classify_4plane(&FourFrame::c0(), 1e-10);
    println!("e4 e5 e6 e7: *Omega = {:+.3}  {:?}", c0.calibration_value, c0.classification);
    Ok(())
}
