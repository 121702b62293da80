//! Normal vectors of the coassociative plane C0 = span{e4..e7} as self-dual
//! 2-forms, and the complex structure each one induces.

use g2lab::calib::FourFrame;
use g2lab::cayley::Vec7;
use g2lab::coassoc::{almost_complex_from_form, normal_to_selfdual, oriented_frame, selfdual_square_identity};

fn main() -> anyhow::Result<()> {
    let c0 = FourFrame::c0();
    println!("oriented frame: {:?}", oriented_frame(&c0).map(|f| f.0));
    for v in [Vec7::e(1), Vec7::e(2), Vec7::e(3), Vec7([0.6, 0.0, 0.8, 0.0, 0.0, 0.0, 0.0])] {
        let eta = normal_to_selfdual(&v, &c0)?;
        let (wedge, norm_vol) = selfdual_square_identity(&eta);
        let j = almost_complex_from_form(&eta, &c0)?;
        println!("v = {:?}", v.0);
        println!("  eta = {:?}  eta^eta = {wedge:.3}  |eta|^2 vol = {norm_vol:.3}", eta.a);
        for row in j.matrix {
            println!("  J | {:+.3} {:+.3} {:+.3} {:+.3}", row[0], row[1], row[2], row[3]);
        }
    }
    Ok(())
}
