mod common;

use wirecut::harness::{prepare, run_pipeline, run_repetitions, Preset, RunConfig};

fn config(preset: Preset, seed: u64) -> RunConfig {
    let mut cfg = RunConfig::from_preset(preset, 24_000, seed);
    cfg.optimizer.iterations = 10;
    cfg
}

#[test]
fn reports_do_not_depend_on_worker_count() {
    let doc = common::desk6();
    for preset in [Preset::Baseline, Preset::B, Preset::D, Preset::E] {
        let cfg = config(preset, 42);
        let reference = run_pipeline(&cfg, &doc).unwrap().to_json();
        for threads in [1, 3] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let again = pool.install(|| run_pipeline(&cfg, &doc).unwrap().to_json());
            assert_eq!(again, reference, "{preset:?} on {threads} workers");
        }
    }
}

#[test]
fn seeds_change_the_samples() {
    let doc = common::desk6();
    let a = run_pipeline(&config(Preset::A, 1), &doc).unwrap();
    let b = run_pipeline(&config(Preset::A, 2), &doc).unwrap();
    assert_ne!(a.distribution_raw, b.distribution_raw);
}

#[test]
fn repetitions_are_reproducible() {
    let doc = common::fig1();
    let cfg = RunConfig::from_preset(Preset::A, 7000, 9);
    let prep = prepare(&doc, cfg.scheme, 20).unwrap();
    let first = run_repetitions(&cfg, &prep, 8).unwrap().distributions;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(2).build().unwrap();
    let second = pool.install(|| run_repetitions(&cfg, &prep, 8).unwrap().distributions);
    assert_eq!(first, second);
    assert_ne!(first[0], first[1]);
}
