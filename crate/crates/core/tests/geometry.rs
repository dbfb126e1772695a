use proptest::prelude::*;
use stokes_dtn::geometry::{BoundaryNormalMetric, Geometry};
use stokes_dtn::jets::{rel_diff, Jet, JetDomain, JetMatrix};
use stokes_dtn::scenario::{generate_metric, random_jet, rng, JetOrder, ScenarioConfig, Stream};

fn random_geometry(n: usize, seed: u64, order: usize) -> Geometry {
    let mut cfg = ScenarioConfig::random(n, 1, seed);
    cfg.jet_order = JetOrder::Fixed(order);
    Geometry::new(&generate_metric(&cfg).unwrap()).unwrap()
}

fn random_scalar(domain: &JetDomain, seed: u64) -> Jet {
    random_jet(domain, &mut rng(seed, Stream::Potential, 7), 0.3, 1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn metric_is_parallel(n in 2usize..=3, seed in any::<u64>()) {
        let geo = random_geometry(n, seed, 4);
        let g = geo.g_lower();
        let gam = geo.christoffel();
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut d = g.get(i, j).partial(k);
                    for l in 0..n {
                        d -= gam.get(l, k, i) * g.get(l, j);
                        d -= gam.get(l, k, j) * g.get(i, l);
                    }
                    prop_assert!(d.max_norm() < 1e-12, "nabla_{k} g_{i}{j} = {:e}", d.max_norm());
                }
            }
        }
    }

    #[test]
    fn christoffel_symbols_are_symmetric(n in 2usize..=3, seed in any::<u64>()) {
        let geo = random_geometry(n, seed, 3);
        let gam = geo.christoffel();
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    prop_assert!((gam.get(j, k, l) - gam.get(j, l, k)).max_norm() == 0.0);
                }
            }
        }
    }

    // Boundary-normal form of the Laplacian against |g|^{-1/2} d_k (|g|^{1/2} g^{kl} d_l f).
    #[test]
    fn laplacian_matches_divergence_form(n in 2usize..=3, seed in any::<u64>()) {
        let geo = random_geometry(n, seed, 5);
        let f = random_scalar(&geo.metric().domain(), seed);
        let vol = geo.g_lower().determinant().sqrt().unwrap();
        let grad = geo.gradient(&f);
        let mut div = geo.metric().domain().zero();
        for k in 0..n {
            div += (&vol * &grad[k]).partial(k);
        }
        let expected = &div * &vol.recip().unwrap();
        let lap = geo.laplace_beltrami(&f).unwrap();
        prop_assert!(rel_diff(&lap, &expected) < 1e-11);
        prop_assert!(rel_diff(&geo.divergence(&grad), &expected) < 1e-11);
    }

    #[test]
    fn hessian_trace_is_laplacian(n in 2usize..=3, seed in any::<u64>()) {
        let geo = random_geometry(n, seed, 5);
        let f = random_scalar(&geo.metric().domain(), seed);
        let h = geo.scalar_hessian(&f).unwrap();
        prop_assert!(rel_diff(&h.mixed.trace(), &geo.laplace_beltrami(&f).unwrap()) < 1e-11);
        let hl = &h.lower;
        for a in 0..n {
            for b in 0..n {
                prop_assert!(rel_diff(hl.get(a, b), hl.get(b, a)) < 1e-12);
            }
        }
    }

    // The contracted Bianchi identity is a strong check on Ricci: div Ric = dR / 2.
    #[test]
    fn contracted_bianchi_identity(n in 2usize..=3, seed in any::<u64>()) {
        let geo = random_geometry(n, seed, 5);
        let ric = geo.ricci().unwrap();
        let mixed = ric.upper.clone() * geo.g_lower().clone();
        let div = geo.divergence_mixed(&mixed);
        let scalar = mixed.trace();
        for k in 0..n {
            let want = scalar.partial(k).scale(0.5);
            let have = geo.lower(&div)[k].clone();
            prop_assert!(rel_diff(&have, &want) < 1e-10, "k = {k}: {:e}", rel_diff(&have, &want));
        }
    }
}

// dx_n^2 + e^{2c x_n} dx_1^2 has Gauss curvature -c^2, so Ric = -c^2 g.
#[test]
fn exponential_warp_has_constant_curvature() {
    let c: f64 = 0.7;
    let d = JetDomain::origin(2, 6);
    let g11 = d.from_fn(|e| {
        let k = e[1] as i32;
        let fact: f64 = (1..=k).map(f64::from).product();
        if e[0] == 0 { ((-2.0 * c).powi(k) / fact).into() } else { 0.0.into() }
    });
    let m = BoundaryNormalMetric::new(JetMatrix::from_fn(1, 1, |_, _| g11.clone()), d.constant(1.0)).unwrap();
    let geo = Geometry::new(&m).unwrap();
    let ric = geo.ricci().unwrap();
    for i in 0..2 {
        for j in 0..2 {
            let want = geo.g_lower().get(i, j).scale(-c * c);
            assert!(rel_diff(ric.lower.get(i, j), &want) < 1e-12, "Ric_{i}{j}");
        }
    }
}
