use num_complex::Complex64;
use proptest::prelude::*;
use stokes_dtn::jets::{max_diff, rel_diff, Jet, JetDomain};

fn jet_strategy(nvars: usize, order: usize) -> impl Strategy<Value = Jet> {
    let domain = JetDomain::origin(nvars, order);
    let count = domain.zero().coeffs().len();
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), count).prop_map(move |c| {
        let mut it = c.into_iter();
        domain.from_fn(|_| {
            let (re, im) = it.next().expect("one value per coefficient");
            Complex64::new(re, im)
        })
    })
}

fn pair(nvars: usize, order: usize) -> impl Strategy<Value = (Jet, Jet)> {
    (jet_strategy(nvars, order), jet_strategy(nvars, order))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn product_matches_dense_convolution((a, b) in pair(3, 4)) {
        let mut dense = a.to_dense().convolve(&b.to_dense());
        dense.truncate_total_degree();
        let want = dense.to_jet(&a.domain()).unwrap();
        prop_assert!(max_diff(&(&a * &b), &want) < 1e-14);
    }

    #[test]
    fn product_is_commutative_and_associative((a, b) in pair(2, 5), c in jet_strategy(2, 5)) {
        prop_assert!(max_diff(&(&a * &b), &(&b * &a)) < 1e-14);
        prop_assert!(max_diff(&(&(&a * &b) * &c), &(&a * &(&b * &c))) < 1e-12);
        prop_assert!(max_diff(&(&a * &(&b + &c)), &(&(&a * &b) + &(&a * &c))) < 1e-13);
    }

    #[test]
    fn leibniz_rule((a, b) in pair(3, 4), var in 0usize..3) {
        let lhs = (&a * &b).partial(var);
        let rhs = &(&a.partial(var) * &b) + &(&a * &b.partial(var));
        prop_assert_eq!(lhs.order(), 3);
        prop_assert!(max_diff(&lhs, &rhs) < 1e-13);
    }

    #[test]
    fn mixed_partials_commute(a in jet_strategy(3, 5)) {
        prop_assert_eq!(a.partial(0).partial(2), a.partial(2).partial(0));
        prop_assert_eq!(a.partial_multi(&[1, 0, 1]), a.partial(0).partial(2));
    }

    #[test]
    fn reciprocal_and_square_root_invert(a in jet_strategy(2, 5)) {
        let a = a.add_constant(Complex64::new(3.0, 0.0) - a.value());
        let one = a.domain().constant(1.0);
        prop_assert!(rel_diff(&(&a * &a.recip().unwrap()), &one) < 1e-12);
        let s = a.sqrt().unwrap();
        prop_assert!(rel_diff(&(&s * &s), &a) < 1e-12);
        prop_assert!(rel_diff(&a.powf(1.5).unwrap(), &(&a * &s)) < 1e-12);
    }

    #[test]
    fn restrict_after_embed_is_identity(a in jet_strategy(2, 4)) {
        let big = JetDomain::origin(4, 4);
        let e = a.embed(&big, &[3, 1]).unwrap();
        let back = e.restrict(&a.domain(), &[3, 1]).unwrap();
        prop_assert_eq!(back, a);
    }

    #[test]
    fn truncation_commutes_with_products((a, b) in pair(2, 6), k in 0i32..6) {
        let lhs = (&a * &b).truncate(k);
        let rhs = &a.truncate(k) * &b.truncate(k);
        prop_assert_eq!(lhs.order(), k);
        prop_assert!(max_diff(&lhs, &rhs) < 1e-13);
    }
}
