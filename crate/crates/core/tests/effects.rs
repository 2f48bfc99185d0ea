use medflow::effects::{bootstrap_effects, effects_from_logs, estimate, interventional_effects, MsmConfig};
use medflow::synthdata::{generate_population, DgpConfig, ResidenceConfig};
use medflow::weights::WeightModelSpec;
use proptest::prelude::*;

fn small(n: usize, seed: u64) -> DgpConfig {
    DgpConfig {
        n_persons: n,
        n_waves: 3,
        seed,
        residence: ResidenceConfig { enabled: false, ..ResidenceConfig::default() },
        ..DgpConfig::default()
    }
}

proptest! {
    #[test]
    fn effect_identities(theta1 in -2.0f64..2.0, theta2 in -2.0f64..2.0, beta1 in -2.0f64..2.0, horizon in 1usize..30) {
        let e = interventional_effects(theta1, theta2, beta1, horizon);
        prop_assert_eq!(e.total_log, e.ide_log + e.iie_log);
        prop_assert_eq!(e.ide_rr, e.ide_log.exp());
        prop_assert_eq!(e.iie_rr, e.iie_log.exp());
        prop_assert_eq!(e.total_rr, e.total_log.exp());

        let d = interventional_effects(theta1, theta2, beta1, 2 * horizon);
        prop_assert_eq!(d.ide_log, 2.0 * e.ide_log);
        prop_assert_eq!(d.iie_log, 2.0 * e.iie_log);
    }

    #[test]
    fn positive_effects_give_a_proper_share(ide in 1e-6f64..10.0, iie in 1e-6f64..10.0, horizon in 1usize..30) {
        let e = effects_from_logs(ide, iie, horizon);
        prop_assert!(0.0 < e.proportion_mediated && e.proportion_mediated < 1.0);
        prop_assert!(0.0 < e.proportion_mediated_rr && e.proportion_mediated_rr < 1.0);
    }
}

#[test]
fn single_precision_calculus() {
    let e = interventional_effects(0.342_f32, 0.229, 0.159, 13);
    assert!((e.ide_log - 4.446).abs() < 1e-4);
    assert!((e.proportion_mediated - 0.0962).abs() < 1e-4);
}

#[test]
fn two_replicates_are_well_defined() {
    let panel = generate_population(&small(300, 4)).unwrap().panel;
    let b = bootstrap_effects(&panel, &WeightModelSpec::default(), &MsmConfig::default(), 2, 1).unwrap();
    assert_eq!(b.draws.len() + b.failures, 2);
    assert!(b.ide_log.lower <= b.ide_log.upper);
}

#[test]
fn bootstrap_ignores_thread_count() {
    let panel = generate_population(&small(400, 6)).unwrap().panel;
    let run =
        |threads| {
            rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| {
                bootstrap_effects(&panel, &WeightModelSpec::default(), &MsmConfig::default(), 12, 3).unwrap()
            })
        };
    assert_eq!(run(1), run(3));
}

#[test]
fn severed_mediator_path_covers_zero() {
    let cfg = small(3000, 31).without_mediated_path();
    let panel = generate_population(&cfg).unwrap().panel;
    let spec = WeightModelSpec::default();
    let msm = MsmConfig::default();
    let point = estimate(&panel, &spec, &msm).unwrap();
    let b = bootstrap_effects(&panel, &spec, &msm, 100, 8).unwrap();
    assert!(b.iie_log.covers(0.0), "{:?} (point {})", b.iie_log, point.effects.iie_log);
}
