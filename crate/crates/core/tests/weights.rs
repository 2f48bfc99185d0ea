use medflow::glm::{self, DesignMatrix};
use medflow::synthdata::{generate_population, DgpConfig, ResidenceConfig};
use medflow::weights::{
    compute_weights, cumulate_and_truncate, percentile, winsorize, ComponentWeights, Family, Summary, WeightModelSpec,
};
use proptest::prelude::*;

fn cohort(n: usize, seed: u64) -> medflow::panel::PanelDataset {
    let cfg = DgpConfig {
        n_persons: n,
        n_waves: 4,
        seed,
        residence: ResidenceConfig { enabled: false, ..ResidenceConfig::default() },
        ..DgpConfig::default()
    };
    generate_population(&cfg).unwrap().panel
}

#[test]
fn extremes_clamp_to_percentiles() {
    let mut v = vec![0.5; 98];
    v.push(0.01);
    v.push(100.0);
    let mut sorted = v.clone();
    sorted.sort_by(f64::total_cmp);
    let (lo, hi) = (percentile(&sorted, 1.0), percentile(&sorted, 99.0));
    let (w, l, h) = winsorize(&v, 1.0, 99.0);
    assert_eq!((l, h), (lo, hi));
    assert_eq!(w[98], lo);
    assert_eq!(w[99], hi);
    assert!(w[..98].iter().all(|&x| x == 0.5));
}

#[test]
fn unit_components_stay_unit() {
    let panel = cohort(200, 3);
    let per = panel.n_persons() * (panel.n_waves - 1);
    let ones = |family| ComponentWeights { family, values: vec![1.0; per], positivity: Vec::new(), separation: false };
    let w = cumulate_and_truncate(
        &panel,
        ones(Family::TreatmentOutcome),
        ones(Family::MediatorOutcome),
        ones(Family::TreatmentMediator),
        &WeightModelSpec::default(),
    )
    .unwrap();
    assert!(w.w_y.iter().chain(&w.w_m).all(|&x| x == 1.0));
    let d = w.diagnostics.w_y.truncated;
    assert_eq!((d.mean, d.sd), (1.0, 0.0));
}

#[test]
fn identical_models_give_unit_weights() {
    let panel = cohort(3000, 5);
    let w = compute_weights(&panel, &WeightModelSpec::default().identical_models()).unwrap();
    for v in [&w.sw_yt, &w.sw_ym, &w.sw_mt, &w.w_y, &w.w_m] {
        assert!(v.iter().all(|&x| x == 1.0));
    }
}

#[test]
fn weights_positive_and_within_bounds() {
    let panel = cohort(4000, 8);
    let w = compute_weights(&panel, &WeightModelSpec::default()).unwrap();
    for (raw, trunc, p) in
        [(&w.w_y_untruncated, &w.w_y, &w.diagnostics.w_y), (&w.w_m_untruncated, &w.w_m, &w.diagnostics.w_m)]
    {
        assert!(raw.iter().all(|&x| x > 0.0));
        assert!(trunc.iter().all(|&x| p.lower_bound <= x && x <= p.upper_bound));
        assert!(p.truncated.sd <= p.untruncated.sd);
    }
}

/// Weighted pooled logistic slopes of `A_t` on the previous wave's
/// confounders, adjusting for the numerator terms.
fn confounder_slopes(panel: &medflow::panel::PanelDataset, weights: Option<&[f64]>) -> Vec<f64> {
    let (mut rows, mut y, mut w) = (Vec::new(), Vec::new(), Vec::new());
    for (i, p) in panel.persons.iter().enumerate() {
        for t in 1..panel.n_waves {
            let mut r = vec![1.0, p.a(t - 1), p.a(0)];
            r.extend(&p.confounders[t - 1]);
            rows.push(r);
            y.push(p.a(t));
            w.push(weights.map_or(1.0, |v| v[i]));
        }
    }
    let p = rows[0].len();
    let names = (0..p).map(|j| format!("x{j}")).collect();
    let d = DesignMatrix::from_rows(&rows, names).unwrap().with_weights(w).unwrap();
    glm::fit_logistic(&d, &y).unwrap().coefficients[3..].to_vec()
}

#[test]
fn weighting_balances_confounders() {
    let panel = cohort(50_000, 21);
    let w = compute_weights(&panel, &WeightModelSpec::default()).unwrap();
    for (name, s) in [("sw_yt", w.diagnostics.sw_yt), ("sw_ym", w.diagnostics.sw_ym), ("sw_mt", w.diagnostics.sw_mt)] {
        assert!((0.9..=1.1).contains(&s.mean), "{name} mean {}", s.mean);
    }
    let raw = confounder_slopes(&panel, None);
    let weighted = confounder_slopes(&panel, Some(&w.w_m));
    for (j, (r, b)) in raw.iter().zip(&weighted).enumerate() {
        assert!(b.abs() < r.abs(), "confounder {j}: {r} -> {b}");
    }
}

proptest! {
    #[test]
    fn winsorizing_stays_in_range_and_shrinks_spread(
        v in prop::collection::vec(0.001f64..1000.0, 2..300),
        lo in 0.0f64..20.0,
        width in 1.0f64..80.0,
    ) {
        let hi = (lo + width).min(100.0);
        let (w, l, h) = winsorize(&v, lo, hi);
        prop_assert!(w.iter().all(|&x| l <= x && x <= h));
        prop_assert!(Summary::of(&w).sd <= Summary::of(&v).sd + 1e-9);
        for (a, b) in v.iter().zip(&w) {
            if l <= *a && *a <= h {
                prop_assert_eq!(a, b);
            }
        }
    }
}
