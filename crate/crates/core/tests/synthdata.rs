use medflow::synthdata::{generate_population, ground_truth_effects, DgpConfig, ResidenceConfig, TreatmentEq};

fn cfg(seed: u64) -> DgpConfig {
    DgpConfig { n_persons: 4000, n_waves: 4, seed, ..DgpConfig::default() }
}

fn treated_share(c: &DgpConfig) -> f64 {
    let panel = generate_population(c).unwrap().panel;
    let per = panel.n_waves - 1;
    let total: f64 = panel.persons.iter().map(|p| p.cum_a_through(per)).sum();
    total / (panel.n_persons() * per) as f64
}

#[test]
fn regeneration_is_identical_across_thread_counts() {
    let c = cfg(12);
    let serial =
        rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| generate_population(&c).unwrap());
    let parallel =
        rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(|| generate_population(&c).unwrap());
    assert_eq!(serial, parallel);
    assert_ne!(serial, generate_population(&cfg(13)).unwrap());
}

#[test]
fn treatment_prevalence_rises_with_the_intercept() {
    let base = DgpConfig { residence: ResidenceConfig { enabled: false, ..ResidenceConfig::default() }, ..cfg(3) };
    let shares: Vec<f64> = [-1.0, 0.0, 1.0]
        .iter()
        .map(|&shift| {
            let intercept = base.treatment.intercept + shift;
            treated_share(&DgpConfig { treatment: TreatmentEq { intercept, ..base.treatment.clone() }, ..base.clone() })
        })
        .collect();
    assert!(shares[0] < shares[1] && shares[1] < shares[2], "{shares:?}");
}

#[test]
fn ground_truth_reports_monte_carlo_error() {
    let c = DgpConfig { n_persons: 500, n_waves: 3, ..DgpConfig::default() };
    let gt = ground_truth_effects(&c, 20_000).unwrap();
    assert!(gt.mc_standard_error > 0.0);
    assert_eq!(gt.mc_standard_error, gt.ide_se.max(gt.iie_se));
    let null = ground_truth_effects(&c.without_mediated_path(), 20_000).unwrap();
    assert!(null.iie_log.abs() <= 3.0 * null.iie_se + 1e-12, "{null:?}");
}
