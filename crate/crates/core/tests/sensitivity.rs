use medflow::effects::MsmConfig;
use medflow::panel::PanelDataset;
use medflow::sensitivity::{run_scenarios, simulate_confounder, Scenario, SensitivityConfig, Target};
use medflow::synthdata::{generate_population, stream_rng, DgpConfig, ResidenceConfig};
use medflow::weights::WeightModelSpec;

fn panel(n: usize, seed: u64) -> PanelDataset {
    let cfg = DgpConfig {
        n_persons: n,
        n_waves: 3,
        seed,
        residence: ResidenceConfig { enabled: false, ..ResidenceConfig::default() },
        ..DgpConfig::default()
    };
    generate_population(&cfg).unwrap().panel
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn cov(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (x.len() - 1) as f64
}

fn corr(x: &[f64], y: &[f64]) -> f64 {
    cov(x, y) / (cov(x, x) * cov(y, y)).sqrt()
}

/// Residuals of `v` after least squares on `[1, cols...]`, via the normal
/// equations solved by nalgebra.
fn residualize(v: &[f64], cols: &[&[f64]]) -> Vec<f64> {
    let n = v.len();
    let x = nalgebra::DMatrix::from_fn(n, cols.len() + 1, |i, j| if j == 0 { 1.0 } else { cols[j - 1][i] });
    let y = nalgebra::DVector::from_column_slice(v);
    let beta = (x.transpose() * &x).cholesky().unwrap().solve(&(x.transpose() * &y));
    (y - x * beta).iter().copied().collect()
}

#[test]
fn confounder_correlation_matches_its_equation() {
    let p = panel(50_000, 4);
    let a: Vec<f64> = p.persons.iter().map(|r| r.a(0)).collect();
    let y: Vec<f64> = p.persons.iter().map(|r| f64::from(u8::from(r.outcome))).collect();
    let (beta, sd) = (0.5, 1.0);
    let s = Scenario { target: Target::TreatmentOutcome, beta1: beta, beta2: beta, noise_sd: sd };
    let u = simulate_confounder(&p, &s, &mut stream_rng(1, 0)).unwrap();

    // U = beta (A + Y) + e with e independent of (A, Y).
    let var_u = beta * beta * (cov(&a, &a) + 2.0 * cov(&a, &y) + cov(&y, &y)) + sd * sd;
    let root_n = (a.len() as f64).sqrt();
    for (name, x, other) in [("A", &a, &y), ("Y", &y, &a)] {
        let expected = beta * (cov(x, x) + cov(x, other)) / (var_u * cov(x, x)).sqrt();
        let got = corr(&u, x);
        let se = (1.0 - expected * expected) / root_n;
        assert!((got - expected).abs() <= 3.0 * se, "corr(U, {name}) {got} vs {expected} (se {se})");
    }
}

#[test]
fn confounders_independent_given_their_parents() {
    let p = panel(50_000, 6);
    let a: Vec<f64> = p.persons.iter().map(|r| r.a(0)).collect();
    let m: Vec<f64> = p.persons.iter().map(|r| r.mediator[0]).collect();
    let y: Vec<f64> = p.persons.iter().map(|r| f64::from(u8::from(r.outcome))).collect();
    let draw = |target, stream| {
        let s = Scenario { target, beta1: 0.5, beta2: 0.5, noise_sd: 1.0 };
        simulate_confounder(&p, &s, &mut stream_rng(2, stream)).unwrap()
    };
    let cols = [Target::TreatmentMediator, Target::TreatmentOutcome, Target::MediatorOutcome]
        .iter()
        .enumerate()
        .map(|(k, &t)| residualize(&draw(t, k as u64), &[&a, &m, &y]))
        .collect::<Vec<_>>();
    let bound = 3.0 / (a.len() as f64).sqrt();
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let r = corr(&cols[i], &cols[j]);
        assert!(r.abs() <= bound, "partial correlation {i},{j}: {r}");
    }
}

fn small_run(
    p: &PanelDataset,
    spec: &WeightModelSpec,
    grid: Vec<f64>,
    n_sims: usize,
) -> medflow::sensitivity::ScenarioResults {
    let cfg = SensitivityConfig { grid, n_sims, seed: 3, ..SensitivityConfig::default() };
    run_scenarios(p, spec, &MsmConfig::default(), &cfg).unwrap()
}

#[test]
fn fixed_seed_reproduces_results() {
    let p = panel(800, 9);
    let spec = WeightModelSpec::default();
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| small_run(&p, &spec, vec![0.0, 0.5], 4));
    let two = rayon::ThreadPoolBuilder::new()
        .num_threads(3)
        .build()
        .unwrap()
        .install(|| small_run(&p, &spec, vec![0.0, 0.5], 4));
    assert_eq!(one, two);
    assert!(one.points.iter().all(|q| q.n_sims + q.failures == 4 && q.ide_sd >= 0.0 && q.iie_sd >= 0.0));
}

#[test]
fn null_scenario_is_unbiased_without_truncation() {
    let p = panel(3000, 15);
    let spec = WeightModelSpec { lower_percentile: 0.0, upper_percentile: 100.0, ..WeightModelSpec::default() };
    let r = small_run(&p, &spec, vec![0.0], 40);
    for q in &r.points {
        let root_n = (q.n_sims as f64).sqrt();
        for (d, sd) in [(q.ide_drift, q.ide_sd), (q.iie_drift, q.iie_sd)] {
            assert!(d <= 3.0 * sd / root_n + 1e-10, "{:?}: drift {d:e}, sd {sd:e}", q.target);
        }
    }
}
