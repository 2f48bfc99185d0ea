use medflow::oracle::{two_wave_dgp, DiscreteDgp, TwoWaveParams};
use medflow::synthdata::discrete_ground_truth;
use proptest::prelude::*;

fn params() -> impl Strategy<Value = TwoWaveParams> {
    let c = -1.5f64..1.5;
    (c.clone(), c.clone(), c.clone(), c.clone(), c.clone(), c.clone(), -0.6f64..0.3, -3.0f64..-1.5).prop_map(
        |(a_l, a_m, m_a, m_l, l_a, y_a, y_m, y_log)| TwoWaveParams {
            a_l,
            a_m,
            m_a,
            m_l,
            l_a,
            y_a: y_a / 3.0,
            y_m,
            y_log,
            ..TwoWaveParams::default()
        },
    )
}

#[test]
fn exact_effects_match_monte_carlo() {
    let variants =
        [TwoWaveParams::default(), TwoWaveParams { m_a: 1.0, y_m: 0.4, y_a: 0.1, ..TwoWaveParams::default() }];
    for (i, p) in variants.iter().enumerate() {
        let dgp = DiscreteDgp::new(two_wave_dgp(p)).unwrap();
        let exact = dgp.always_vs_never().unwrap();
        let mc = discrete_ground_truth(&dgp, 400_000, 70 + i as u64).unwrap();
        // The log-linear outcome makes the direct contrast constant across
        // replicates, so its standard error is at rounding level.
        assert!(
            (mc.ide_log - exact.ide_log).abs() <= 3.0 * mc.ide_se + 1e-9,
            "ide {} vs {} (se {})",
            mc.ide_log,
            exact.ide_log,
            mc.ide_se
        );
        assert!(
            (mc.iie_log - exact.iie_log).abs() <= 3.0 * mc.iie_se + 1e-9,
            "iie {} vs {} (se {})",
            mc.iie_log,
            exact.iie_log,
            mc.iie_se
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tables_and_laws_are_normalized(p in params()) {
        let dgp = DiscreteDgp::new(two_wave_dgp(&p)).unwrap();
        for strata in dgp.baseline_strata() {
            let mut assignment = vec![0; dgp.spec().nodes.len()];
            for (&node, &state) in dgp.baseline_nodes().iter().zip(&strata.0) {
                assignment[node] = state;
            }
            for i in 0..assignment.len() {
                let row = dgp.conditional(i, &assignment);
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                prop_assert!(row.iter().all(|&q| 0.0 < q && q < 1.0));
            }
        }
        for v in [0u8, 1] {
            let law = dgp.mediator_law(&vec![v; dgp.n_waves()]).unwrap();
            prop_assert!(law.normalization_error() < 1e-12);
        }
    }

    #[test]
    fn inert_mediator_means_no_indirect_effect(p in params()) {
        let dgp = DiscreteDgp::new(two_wave_dgp(&TwoWaveParams { y_m: 0.0, ..p })).unwrap();
        prop_assert!(dgp.always_vs_never().unwrap().iie_log.abs() < 1e-12);
    }

    #[test]
    fn swapping_regimes_negates_direct_effect_at_a_fixed_law(p in params(), reference in 0u8..2) {
        let dgp = DiscreteDgp::new(two_wave_dgp(&p)).unwrap();
        let t = dgp.n_waves();
        let (a, a_star) = (vec![1u8; t], vec![0u8; t]);
        let g = dgp.mediator_law(&vec![reference; t]).unwrap();
        let ide = |x: &[u8], y: &[u8]| dgp.expected_outcome(x, &g).unwrap().ln() - dgp.expected_outcome(y, &g).unwrap().ln();
        prop_assert_eq!(ide(&a, &a_star), -ide(&a_star, &a));
    }
}
