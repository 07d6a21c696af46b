use kropina_core::autodiff::{fd_crosscheck, field_from, indices_up_to, Jet, JetError, Var};
use proptest::prelude::*;

const ORDER: usize = 3;

fn n_coeffs() -> usize {
    Jet::constant(0.0, ORDER).coeffs().len()
}

fn jet() -> impl Strategy<Value = Jet> {
    prop::collection::vec(-2.0f64..2.0, n_coeffs()).prop_map(|c| Jet::from_coeffs(ORDER, c).unwrap())
}

fn jet_with_value(lo: f64, hi: f64) -> impl Strategy<Value = Jet> {
    (lo..hi, prop::collection::vec(-1.0f64..1.0, n_coeffs() - 1)).prop_map(|(v, rest)| {
        let mut c = vec![v];
        c.extend(rest);
        Jet::from_coeffs(ORDER, c).unwrap()
    })
}

fn close(a: &Jet, b: &Jet, tol: f64) -> bool {
    a.max_abs_diff(b, ORDER) <= tol
}

proptest! {
    #[test]
    fn addition_is_commutative_and_associative(a in jet(), b in jet(), c in jet()) {
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert!(close(&(&(&a + &b) + &c), &(&a + &(&b + &c)), 1e-14));
    }

    #[test]
    fn multiplication_is_a_ring_operation(a in jet(), b in jet(), c in jet()) {
        prop_assert!(close(&(&a * &b), &(&b * &a), 1e-13));
        prop_assert!(close(&(&(&a * &b) * &c), &(&a * &(&b * &c)), 1e-11));
        prop_assert!(close(&(&a * &(&b + &c)), &(&(&a * &b) + &(&a * &c)), 1e-12));
        let one = Jet::constant(1.0, ORDER);
        prop_assert_eq!(&a * &one, a.clone());
        prop_assert_eq!(&a - &a, Jet::constant(0.0, ORDER));
    }

    #[test]
    fn division_inverts_multiplication(a in jet(), b in jet_with_value(0.5, 2.0)) {
        let q = a.try_div(&b).unwrap();
        prop_assert!(close(&(&q * &b), &a, 1e-10));
    }

    #[test]
    fn roots_and_powers_invert(a in jet_with_value(0.5, 2.0)) {
        let c = a.cbrt().unwrap();
        prop_assert!(close(&c.powi(3).unwrap(), &a, 1e-11));
        let s = a.sqrt().unwrap();
        prop_assert!(close(&(&s * &s), &a, 1e-11));
        prop_assert!(close(&a.ln().unwrap().exp(), &a, 1e-10));
        prop_assert!(close(&a.powf(2.5).unwrap(), &(&a.powi(2).unwrap() * &s), 1e-10));
    }

    #[test]
    fn negative_cube_root_is_odd(a in jet_with_value(0.5, 2.0)) {
        prop_assert!(close(&(-&a).cbrt().unwrap(), &(-&a.cbrt().unwrap()), 1e-13));
    }

    #[test]
    fn pythagorean_identity(a in jet()) {
        let s = a.sin();
        let c = a.cos();
        prop_assert!(close(&(&(&s * &s) + &(&c * &c)), &Jet::constant(1.0, ORDER), 1e-12));
    }

    #[test]
    fn elementary_field_matches_finite_differences(
        x1 in 0.2f64..1.0, x2 in -0.5f64..0.5, x in 0.5f64..1.5, y in -1.0f64..1.0,
    ) {
        let f = field_from(|v: &[Jet; 4]| -> Result<Jet, JetError> {
            let [a, b, c, d] = v;
            let t = (&(a * c) + &b.sin()).exp();
            let u = (&(d * d) + &(a * a) + 1.0).sqrt()?;
            Ok(&t.try_div(&u)? + &(b * c).cos() + &(a + 1.0).ln()? * d)
        });
        for idx in indices_up_to(3) {
            let chk = fd_crosscheck(&f, [x1, x2, x, y], &idx).unwrap();
            let tol = if idx.degree() <= 2 { 1e-5 } else { 1e-3 };
            prop_assert!(chk.rel_error < tol, "{:?}: {:?}", idx, chk);
        }
    }
}

#[test]
fn compose_matches_direct_evaluation() {
    // f(x1, x2) = x1²·x2 composed with (x1, x2) ↦ (x1 + X, x2·Y).
    let order = 3;
    let v = Var::ALL.map(|var| Jet::variable([0.3, -0.4, 0.8, 1.2][var.index()], var, order).unwrap());
    let inner = [&v[0] + &v[2], &v[1] * &v[3]];
    let direct = &(&inner[0] * &inner[0]) * &inner[1];
    let u = Var::ALL.map(|var| Jet::variable([1.1, -0.48, 0.0, 0.0][var.index()], var, order).unwrap());
    let f = &(&u[0] * &u[0]) * &u[1];
    let zero = Jet::constant(0.0, order);
    let composed = f.compose(&[inner[0].clone(), inner[1].clone(), zero.clone(), zero]).unwrap();
    assert!(composed.max_abs_diff(&direct, order) < 1e-13);
}
