use stokes_dtn::geometry::Geometry;
use stokes_dtn::scenario::{generate_fields, generate_metric, JetOrder, ScenarioConfig};
use stokes_dtn::stokes::{all_mutations, assemble, verify_transformation};

fn scenario(n: usize, seed: u64, order: usize) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::random(n, 1, seed);
    cfg.jet_order = JetOrder::Fixed(order);
    cfg
}

#[test]
fn transformation_identity_on_random_scenarios() {
    for n in [2, 3] {
        for seed in 0..4 {
            let cfg = scenario(n, seed, 6);
            let geo = Geometry::new(&generate_metric(&cfg).unwrap()).unwrap();
            let mats = assemble(&geo).unwrap();
            let (w, f) = generate_fields(&cfg, &geo.metric().domain());
            let res = verify_transformation(&geo, &mats, &w, &f).unwrap();
            assert!(res.relative <= 1e-10, "n={n} seed={seed}: {res:?}");
            assert!(res.order >= 2, "{res:?}");
        }
    }
}

#[test]
fn every_single_entry_mutation_is_detected() {
    for n in [2, 3] {
        let cfg = scenario(n, 1, 5);
        let geo = Geometry::new(&generate_metric(&cfg).unwrap()).unwrap();
        let mats = assemble(&geo).unwrap();
        let (w, f) = generate_fields(&cfg, &geo.metric().domain());
        for m in all_mutations(n) {
            let mut mutated = mats.clone();
            m.apply(&mut mutated, &geo.metric().domain()).unwrap();
            let res = verify_transformation(&geo, &mutated, &w, &f).unwrap();
            assert!(res.relative >= 1e-4, "mutation {m} undetected: {res:?}");
        }
    }
}
