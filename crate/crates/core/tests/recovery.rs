use proptest::prelude::*;
use stokes_dtn::error::Error;
use stokes_dtn::geometry::{BoundaryNormalMetric, Geometry};
use stokes_dtn::jets::{rel_diff, JetDomain, JetMatrix};
use stokes_dtn::recovery::{
    boundary_derivative, boundary_domain, compare, extract_quadratic_form, forward_symbols,
    minimal_directions, reference_extension, run_recovery, sample_directions, Method,
    QuadraticFormSample, RecoveryInput, RecoveryResult, TraceConstants,
};
use stokes_dtn::scenario::{generate_metric, DirectionSet, JetOrder, ScenarioConfig};
use stokes_dtn::stokes::assemble;
use stokes_dtn::symbols::{normalize_direction, run_recursion, SymbolSequence};

fn recover_from(metric: &BoundaryNormalMetric, dirs: &[Vec<f64>], depth: usize) -> RecoveryResult {
    let seqs = forward_symbols(metric, dirs, depth).unwrap();
    recover_seqs(metric, &seqs, depth).unwrap()
}

fn recover_seqs(
    metric: &BoundaryNormalMetric,
    seqs: &[SymbolSequence],
    depth: usize,
) -> stokes_dtn::Result<RecoveryResult> {
    run_recovery(&RecoveryInput {
        n: metric.n(),
        depth,
        x_domain: metric.domain(),
        mu: metric.mu().clone(),
        sequences: seqs,
    })
}

fn worst_error(metric: &BoundaryNormalMetric, res: &RecoveryResult) -> f64 {
    let b = boundary_domain(res.n, res.jet_order);
    res.orders
        .iter()
        .map(|o| compare(&o.tensor, &boundary_derivative(metric, o.order, &b).unwrap()).relative)
        .fold(0.0, f64::max)
}

/// n = 2 metric `g^{11} = 1 + sum_k c_k x_2^k` with constant viscosity.
fn normal_profile(coeffs: &[(u8, f64)], order: usize, mu: f64) -> BoundaryNormalMetric {
    let d = JetDomain::origin(2, order);
    let mut terms = vec![(vec![0u8, 0], 1.0)];
    terms.extend(coeffs.iter().map(|&(k, c)| (vec![0u8, k], c)));
    let g = d.from_terms(terms).unwrap();
    BoundaryNormalMetric::new(JetMatrix::from_fn(1, 1, |_, _| g.clone()), d.constant(mu)).unwrap()
}

fn symmetric_values(k: &[f64], dirs: &[Vec<f64>], domain: &JetDomain) -> Vec<stokes_dtn::jets::Jet> {
    let m = dirs[0].len();
    dirs.iter()
        .map(|xi| {
            let mut v = 0.0;
            for a in 0..m {
                for b in 0..m {
                    v += k[a * m + b] * xi[a] * xi[b];
                }
            }
            domain.constant(v)
        })
        .collect()
}

#[test]
fn zero_values_fit_zero_form() {
    let d = boundary_domain(3, 2);
    let dirs = minimal_directions(2);
    let values = vec![d.zero(); dirs.len()];
    let fit = extract_quadratic_form(&QuadraticFormSample { directions: dirs, values }).unwrap();
    assert_eq!(fit.tensor.max_norm(), 0.0);
}

#[test]
fn polarization_of_mixed_product() {
    let d = boundary_domain(3, 0);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let dirs = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![s, s]];
    let values = dirs.iter().map(|xi| d.constant(xi[0] * xi[1])).collect();
    let fit = extract_quadratic_form(&QuadraticFormSample { directions: dirs, values }).unwrap();
    let t = &fit.tensor;
    assert!((t.get(0, 1).value().re - 0.5).abs() < 1e-15);
    assert!((t.get(1, 0).value().re - 0.5).abs() < 1e-15);
    assert!(t.get(0, 0).max_norm() < 1e-15 && t.get(1, 1).max_norm() < 1e-15);
}

#[test]
fn too_few_directions_are_rank_deficient() {
    let d = boundary_domain(3, 0);
    let dirs = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
    let values = vec![d.zero(), d.zero()];
    let err = extract_quadratic_form(&QuadraticFormSample { directions: dirs, values }).unwrap_err();
    assert!(matches!(err, Error::RankDeficient(_)), "{err}");
    let dup = vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
    let values = vec![d.zero(); 3];
    let err = extract_quadratic_form(&QuadraticFormSample { directions: dup, values }).unwrap_err();
    assert!(matches!(err, Error::RankDeficient(_)), "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn synthesized_forms_are_recovered(
        raw in prop::collection::vec(-2.0f64..2.0, 9),
        extra in 0usize..4,
        seed in any::<u64>(),
    ) {
        let k: Vec<f64> = (0..9).map(|i| 0.5 * (raw[i] + raw[(i % 3) * 3 + i / 3])).collect();
        let d = boundary_domain(4, 0);
        let dirs = sample_directions(DirectionSet::Oversampled(6 + extra), 3, seed);
        let values = symmetric_values(&k, &dirs, &d);
        let fit = extract_quadratic_form(&QuadraticFormSample { directions: dirs, values }).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                prop_assert!((fit.tensor.get(a, b).value().re - k[a * 3 + b]).abs() < 1e-12);
            }
        }
        prop_assert!(fit.misfit < 1e-12);
    }
}

#[test]
fn flat_metric_recovers_identity_then_zeros() {
    for n in [2, 3] {
        let m = generate_metric(&ScenarioConfig::flat(n, 3)).unwrap();
        let res = recover_from(&m, &minimal_directions(n - 1), 3);
        assert_eq!(res.orders.len(), 4);
        let id = JetMatrix::identity(&boundary_domain(n, res.jet_order), n - 1);
        assert!(compare(&res.orders[0].tensor, &id).absolute <= 1e-11);
        for o in &res.orders[1..] {
            assert!(o.tensor.max_norm() <= 1e-11, "order {}", o.order);
        }
    }
}

#[test]
fn single_entry_normal_derivatives() {
    let (a, b) = (0.37, -0.21);
    let m = normal_profile(&[(1, a)], 4, 1.0);
    let res = recover_from(&m, &[vec![1.0]], 2);
    assert!((res.orders[1].tensor.get(0, 0).value().re - a).abs() < 1e-13);
    assert!(res.orders[2].tensor.max_norm() < 1e-13);

    let m = normal_profile(&[(2, b)], 4, 1.0);
    let res = recover_from(&m, &[vec![1.0]], 2);
    assert!(res.orders[1].tensor.max_norm() < 1e-13);
    assert_eq!(res.orders[2].method, Method::ResponseFit);
    assert!((res.orders[2].tensor.get(0, 0).value().re - 2.0 * b).abs() < 1e-13);
}

#[test]
fn flat_metric_with_variable_viscosity() {
    for n in [2, 3] {
        let mut cfg = ScenarioConfig::random(n, 3, 4);
        cfg.metric = stokes_dtn::scenario::MetricSource::Flat;
        let m = generate_metric(&cfg).unwrap();
        let res = recover_from(&m, &minimal_directions(n - 1), 3);
        for o in &res.orders[1..] {
            assert!(o.tensor.max_norm() <= 1e-9, "order {}: {:e}", o.order, o.tensor.max_norm());
        }
    }
}

#[test]
fn random_metrics_round_trip_with_trust_orders() {
    for (n, depth, k) in [(2usize, 3usize, 5usize), (3, 3, 5), (2, 4, 6), (3, 2, 4)] {
        let mut cfg = ScenarioConfig::random(n, depth, 7);
        cfg.jet_order = JetOrder::Fixed(k);
        let m = generate_metric(&cfg).unwrap();
        let res = recover_from(&m, &minimal_directions(n - 1), depth);
        let trust: Vec<i32> = res.orders.iter().map(|o| o.trustworthy_order).collect();
        let want: Vec<i32> = (0..=depth as i32).map(|r| k as i32 - r).collect();
        assert_eq!(trust, want);
        assert!(worst_error(&m, &res) <= 1e-12, "n={n} K={k}: {:e}", worst_error(&m, &res));
        for o in &res.orders[2..] {
            let expected = if TraceConstants::new(n, o.order).is_degenerate() {
                Method::ResponseFit
            } else {
                Method::Trace
            };
            assert_eq!(o.method, expected);
            if expected == Method::Trace {
                assert!(o.cross_check.unwrap() <= 1e-12);
            }
        }
    }
}

#[test]
fn oversampling_leaves_the_fit_unchanged() {
    let cfg = ScenarioConfig::random(3, 2, 12);
    let m = generate_metric(&cfg).unwrap();
    let a = recover_from(&m, &minimal_directions(2), 2);
    let b = recover_from(&m, &sample_directions(DirectionSet::Oversampled(9), 2, 3), 2);
    for (x, y) in a.orders.iter().zip(&b.orders) {
        for (p, q) in x.tensor.entries().iter().zip(y.tensor.entries()) {
            assert!(rel_diff(q, p) <= 1e-10);
        }
    }
}

#[test]
fn reference_extension_matches_lower_orders() {
    let mut cfg = ScenarioConfig::random(3, 2, 5);
    cfg.jet_order = JetOrder::Fixed(5);
    let m = generate_metric(&cfg).unwrap();
    let b = boundary_domain(3, 5);
    let known: Vec<JetMatrix> = (0..2).map(|r| boundary_derivative(&m, r, &b).unwrap()).collect();
    let ext = reference_extension(&known, m.mu()).unwrap();
    assert_eq!(compare(&boundary_derivative(&ext, 0, &b).unwrap(), &known[0]).absolute, 0.0);
    assert!(compare(&boundary_derivative(&ext, 1, &b).unwrap(), &known[1]).absolute < 1e-15);
    assert_eq!(boundary_derivative(&ext, 2, &b).unwrap().max_norm(), 0.0);
    let flat = reference_extension(&[JetMatrix::identity(&b, 2)], &m.domain().constant(1.0)).unwrap();
    assert_eq!(flat.g_upper().max_diff(&JetMatrix::identity(&m.domain(), 3)), 0.0);
}

#[test]
fn trace_difference_vanishes_without_new_normal_data() {
    let mut cfg = ScenarioConfig::random(3, 2, 8);
    cfg.jet_order = JetOrder::Fixed(5);
    let truth = generate_metric(&cfg).unwrap();
    let d = truth.domain();
    // Drop every term of normal degree 2 so the reference extension at r = 2 is exact.
    let dropped = JetMatrix::from_fn(2, 2, |a, b| {
        d.from_terms(truth.g_upper().get(a, b).terms().filter(|(e, _)| e[2] < 2).map(|(e, c)| (e.to_vec(), c)))
            .unwrap()
    });
    let m = BoundaryNormalMetric::new(dropped, truth.mu().clone()).unwrap();
    let b = boundary_domain(3, 5);
    let known: Vec<JetMatrix> = (0..2).map(|r| boundary_derivative(&m, r, &b).unwrap()).collect();
    let ext = reference_extension(&known, m.mu()).unwrap();
    let dir = normalize_direction(&m, &[0.3, 0.8]).unwrap();
    let run = |g: &BoundaryNormalMetric| {
        let mats = assemble(&Geometry::new(g).unwrap()).unwrap();
        run_recursion(g, &mats, &dir, 2).unwrap().sequence.q(-1).trace()
    };
    let (a, e) = (run(&m), run(&ext));
    assert!(rel_diff(&e, &a) <= 1e-10);
}

// Flat base, g^{ab} = delta + H x_n^2 / 2: -(2|xi|)^3 tr q_{-1} = (n+3) (tr H |xi|^2 - H(xi, xi)).
#[test]
fn second_order_trace_on_flat_base() {
    let h = [[0.3, -0.2], [-0.2, 0.5]];
    let n = 3;
    let d = JetDomain::origin(n, 4);
    let g = JetMatrix::from_fn(2, 2, |a, b| {
        let delta = if a == b { 1.0 } else { 0.0 };
        d.from_terms([(vec![0, 0, 0], delta), (vec![0, 0, 2], h[a][b] / 2.0)]).unwrap()
    });
    let m = BoundaryNormalMetric::new(g, d.constant(1.0)).unwrap();
    let mats = assemble(&Geometry::new(&m).unwrap()).unwrap();
    for raw in [[1.0, 0.0], [0.6, 0.8], [-0.28, 0.96]] {
        let tr = run_recursion(&m, &mats, &raw, 2).unwrap().sequence.q(-1).trace().value();
        let hxx: f64 = (0..2).flat_map(|a| (0..2).map(move |b| (a, b))).map(|(a, b)| h[a][b] * raw[a] * raw[b]).sum();
        let want = (n as f64 + 3.0) * (h[0][0] + h[1][1] - hxx);
        assert!((-8.0 * tr.re - want).abs() < 1e-13, "{raw:?}: {} vs {want}", -8.0 * tr.re);
        assert!(tr.im.abs() < 1e-14);
    }
}

#[test]
fn trace_constants() {
    assert_eq!(TraceConstants::new(2, 1).denominator, 2.0);
    assert_eq!(TraceConstants::new(3, 1).denominator, 8.0);
    assert!(TraceConstants::new(2, 2).is_degenerate());
    assert_eq!(TraceConstants::new(3, 2).denominator, 6.0);
    let c = TraceConstants::new(3, 3);
    assert_eq!((c.a, c.c, c.denominator), (6.0, 8.0, 4.0));
}

#[test]
fn corrupted_trace_degrades_first_order() {
    let cfg = ScenarioConfig::random(3, 2, 2);
    let m = generate_metric(&cfg).unwrap();
    let mut seqs = forward_symbols(&m, &minimal_directions(2), 2).unwrap();
    for s in &mut seqs {
        let q0 = &mut s.symbols[1].entries;
        *q0.get_mut(0, 0) = q0.get(0, 0).add_constant(1e-3);
    }
    let res = recover_seqs(&m, &seqs, 2).unwrap();
    let b = boundary_domain(3, cfg.jet_order());
    let err = |r: usize| compare(&res.orders[r].tensor, &boundary_derivative(&m, r, &b).unwrap()).absolute;
    assert!(err(0) < 1e-14);
    assert!(err(1) > 1e-4 && err(1) < 1e-1, "{:e}", err(1));
    assert!(err(2) > 1e-4, "{:e}", err(2));
}

#[test]
fn recovery_needs_deep_enough_symbols() {
    let m = generate_metric(&ScenarioConfig::flat(2, 3)).unwrap();
    let seqs = forward_symbols(&m, &[vec![1.0]], 1).unwrap();
    let err = recover_seqs(&m, &seqs, 3).unwrap_err();
    assert!(matches!(err, Error::OrderExhausted { .. }), "{err}");
}
