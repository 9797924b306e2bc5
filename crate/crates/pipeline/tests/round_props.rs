mod common;

use forge_pipeline::synthetic::Workload;
use forge_pipeline::{run_round, FaultInjector, Stages};
use proptest::prelude::*;

use common::{mock_config, seeded_store};

fn manifest(n: usize, parallelism: usize) -> (Vec<u8>, forge_pipeline::FunnelReport) {
    let dir = tempfile::tempdir().unwrap();
    let w = Workload::funnel(n);
    let mut cfg = mock_config(dir.path(), &w, 3);
    cfg.parallelism = parallelism;
    let mut store = seeded_store(&cfg.store, &w);
    let out = run_round(&mut store, &Stages::build(&cfg).unwrap(), &cfg, &FaultInjector::none()).unwrap();
    for c in store.load_round(3).unwrap() {
        assert!(!c.nli.is_positive() || c.compiled());
        assert!(c.back_translation.is_none() || c.compiled());
    }
    (std::fs::read(cfg.store.join("rounds/3/manifest.json")).unwrap(), out.funnel)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn funnel_is_monotone_and_parallelism_invisible(n in 0usize..40, p in 1usize..8) {
        let (a, funnel) = manifest(n, p);
        prop_assert!(funnel.is_monotone(1));
        let (b, _) = manifest(n, 1);
        prop_assert_eq!(a, b);
    }
}
