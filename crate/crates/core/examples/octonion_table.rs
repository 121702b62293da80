//! Prints the multiplication table of the imaginary units and checks the
//! cross-product axioms on a few random pairs.

use g2lab::cayley::{associator, cross, oct_mul, structure_table, Octonion, Vec7};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let table = structure_table();
    println!("triples: {:?}", table.triples);
    for i in 1..=7 {
        let row: Vec<String> = (1..=7)
            .map(|j| {
                let [s, k] = table.products[i][j];
                format!("{}e{}", if s < 0 { "-" } else { "+" }, k)
            })
            .collect();
        println!("e{i} * | {}", row.join(" "));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut rand7 = || Vec7(std::array::from_fn(|_| rng.random_range(-1.0..1.0)));
    for _ in 0..3 {
        let (u, v) = (rand7(), rand7());
        let w = cross(&u, &v);
        let lag = u.norm_squared() * v.norm_squared() - u.dot(&v).powi(2);
        println!(
            "<uxv,u> = {:+.1e}  |uxv|^2 - (|u|^2|v|^2 - <u,v>^2) = {:+.1e}",
            w.dot(&u),
            w.norm_squared() - lag
        );
    }

    // e1, e2, e4 do not lie in one quaternion subalgebra, so their associator is nonzero.
    let e = |i| Octonion::imaginary(Vec7::e(i));
    println!("e1 e2 = {:?}", oct_mul(&e(1), &e(2)).components());
    println!("[e1, e2, e4] = {:?}", associator(&e(1), &e(2), &e(4)).components());
}
