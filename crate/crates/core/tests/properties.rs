use g2lab::calib::{classify_3plane, omega3, projected_normals_gram_det, tau, FourFrame, PlaneClass, ThreeFrame};
use g2lab::cayley::{cross, Vec7};
use g2lab::coassoc::{almost_complex_from_form, normal_to_selfdual, selfdual_square_identity, SelfDualTwoForm};
use g2lab::dirac::{
    apply_dirac, cross_term, h1_norm_squared, poincare_check, torus_adjointness_defect, weighted_inner,
    BoundaryCondition, CylinderGrid, SpinorField,
};
use g2lab::report::to_json;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn vec7() -> impl Strategy<Value = Vec7> {
    prop::array::uniform7(-2.0f64..2.0).prop_map(Vec7)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn cross_is_antisymmetric_and_orthogonal(u in vec7(), v in vec7()) {
        let w = cross(&u, &v);
        prop_assert!((w + cross(&v, &u)).max_abs() < 1e-14);
        prop_assert!(w.dot(&u).abs() < 1e-12 && w.dot(&v).abs() < 1e-12);
        let lag = u.norm_squared() * v.norm_squared() - u.dot(&v).powi(2);
        prop_assert!((w.norm_squared() - lag).abs() < 1e-12 * (1.0 + lag));
    }

    #[test]
    fn calibration_and_tau_split_the_unit_norm(u in vec7(), v in vec7(), w in vec7()) {
        if let Ok(fr) = ThreeFrame::new(u, v, w) {
            let [a, b, c] = *fr.vectors();
            let om = omega3(&a, &b, &c);
            let t = tau(&a, &b, &c).norm();
            prop_assert!((om * om + t * t - 1.0).abs() < 1e-12);
            prop_assert!(om.abs() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn planes_spanned_by_a_product_are_associative(u in vec7(), v in vec7()) {
        if let Ok(fr) = ThreeFrame::new(u, v, cross(&u, &v)) {
            let r = classify_3plane(&fr, 1e-10);
            prop_assert_eq!(r.classification, PlaneClass::Associative);
            prop_assert!((r.calibration_value - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn perturbed_planes_keep_independent_normals(t in prop::array::uniform4(-0.1f64..0.1)) {
        prop_assert!(projected_normals_gram_det(t) >= 0.5);
    }

    #[test]
    fn selfdual_forms_square_to_the_volume(a in prop::array::uniform3(-3.0f64..3.0)) {
        let eta = SelfDualTwoForm::new(a[0], a[1], a[2]);
        let (lhs, rhs) = selfdual_square_identity(&eta);
        prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + rhs));
    }

    #[test]
    fn normal_vectors_give_orthogonal_complex_structures(a in prop::array::uniform3(-1.0f64..1.0)) {
        let n = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
        prop_assume!(n > 1e-3);
        let v = Vec7([a[0], a[1], a[2], 0.0, 0.0, 0.0, 0.0]);
        let c0 = FourFrame::c0();
        let eta = normal_to_selfdual(&v, &c0).unwrap();
        let j = almost_complex_from_form(&eta, &c0).unwrap();
        for i in 4..=7 {
            let x = Vec7::e(i);
            prop_assert!((j.apply(&j.apply(&x)) + x).max_abs() < 1e-12);
            // J is v/|v| x on C0.
            prop_assert!((j.apply(&x) - cross(&v, &x) * (1.0 / n)).max_abs() < 1e-12);
        }
    }

    #[test]
    fn poincare_inequality_on_polynomials(c in prop::array::uniform3(-2.0f64..2.0), eps in 0.1f64..4.0) {
        let m = 200;
        let v: Vec<f64> = (0..m)
            .map(|k| {
                let x = eps * k as f64 / (m - 1) as f64;
                c[0] * x + c[1] * x * x + c[2] * x * x * x
            })
            .collect();
        let (lhs, rhs) = poincare_check(&v, eps).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 10.0 / (m * m) as f64) + 1e-300);
    }

    #[test]
    fn dirac_identities_on_random_fields(seed in any::<u64>(), tw in prop::array::uniform2(0.0f64..1.0)) {
        let grid = CylinderGrid::new(0.8, 6, 6, tw).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = SpinorField::random(&grid, BoundaryCondition::Hminus, &mut rng);
        prop_assert!(torus_adjointness_defect(&grid, &f.u, &f.v) < 1e-12);
        let scale = h1_norm_squared(&f, &grid);
        prop_assert!(cross_term(&f, &grid).unwrap().abs() < 1e-10 * scale);
        // |D V|^2 is real and nonnegative and D is linear.
        let d = apply_dirac(&f, &grid).unwrap();
        let q = weighted_inner(&grid, &d.u, &d.u) + weighted_inner(&grid, &d.v, &d.v);
        prop_assert!(q.re >= 0.0 && q.im.abs() < 1e-12 * q.re.max(1.0));
    }

    #[test]
    fn json_floats_round_trip(xs in prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 1..20)) {
        let s = to_json(&xs).unwrap();
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        prop_assert_eq!(back, xs);
    }
}
