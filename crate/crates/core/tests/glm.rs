use approx::assert_relative_eq;
use medflow::glm::{self, DesignMatrix, Family};
use medflow::synthdata::stream_rng;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

fn names(p: usize) -> Vec<String> {
    (0..p).map(|j| format!("x{j}")).collect()
}

/// Rows `[1, x1, x2]` with a binary response from a logistic model and a
/// count-like response from a log-linear one.
fn data(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let mut rng = stream_rng(seed, 3);
    let mut rows = Vec::with_capacity(n);
    let (mut yb, mut yc) = (Vec::new(), Vec::new());
    for _ in 0..n {
        let x1: f64 = rng.random_range(-2.0..2.0);
        let x2 = f64::from(u8::from(rng.random_bool(0.5)));
        let eta = -0.3 + 0.7 * x1 - 0.4 * x2;
        yb.push(f64::from(u8::from(rng.random_bool(1.0 / (1.0 + (-eta).exp())))));
        yc.push(f64::from(u8::from(rng.random_bool((eta - 1.5).exp().min(0.9)))));
        rows.push(vec![1.0, x1, x2]);
    }
    (rows, yb, yc)
}

#[test]
fn density_matches_formula() {
    let (x, mu, sd) = (1.5_f64, 0.2, 0.7);
    let expected = (-(x - mu) * (x - mu) / (2.0 * sd * sd)).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt());
    assert_relative_eq!(glm::gaussian_density(x, mu, sd).unwrap(), expected, max_relative = 1e-10);
    assert_relative_eq!(glm::gaussian_density(0.0_f64, 0.0, 1.0).unwrap(), 0.3989422804, epsilon = 1e-10);
}

#[test]
fn standard_errors_positive_after_convergence() {
    let (rows, yb, yc) = data(800, 1);
    let d = DesignMatrix::from_rows(&rows, names(3)).unwrap();
    let logistic = glm::fit_logistic(&d, &yb).unwrap();
    let poisson = glm::fit_poisson_robust(&d, &yc).unwrap();
    for fit in [&logistic, &poisson] {
        assert!(fit.converged);
        assert!(fit.iterations <= 100);
        assert!(fit.model_se.iter().all(|&s| s > 0.0));
    }
    assert!(poisson.robust_se.unwrap().iter().all(|&s| s > 0.0));
}

#[test]
fn scaling_case_weights_leaves_coefficients() {
    let (rows, yb, yc) = data(600, 2);
    let mut rng = stream_rng(2, 9);
    let w: Vec<f64> = (0..rows.len()).map(|_| rng.random_range(0.2..3.0)).collect();
    let scaled: Vec<f64> = w.iter().map(|x| x * 7.5).collect();
    let d1 = DesignMatrix::from_rows(&rows, names(3)).unwrap().with_weights(w).unwrap();
    let d2 = DesignMatrix::from_rows(&rows, names(3)).unwrap().with_weights(scaled).unwrap();
    let pairs = [
        (glm::fit_logistic(&d1, &yb).unwrap(), glm::fit_logistic(&d2, &yb).unwrap()),
        (glm::fit_poisson_robust(&d1, &yc).unwrap(), glm::fit_poisson_robust(&d2, &yc).unwrap()),
        (glm::fit_linear(&d1, &yb).unwrap(), glm::fit_linear(&d2, &yb).unwrap()),
    ];
    for (a, b) in pairs {
        for (x, y) in a.coefficients.iter().zip(&b.coefficients) {
            assert!((x - y).abs() < 1e-10, "{x} vs {y}");
        }
    }
}

#[test]
fn single_precision_tracks_double() {
    let (rows, yb, _) = data(1000, 4);
    let d64 = DesignMatrix::from_rows(&rows, names(3)).unwrap();
    let rows32: Vec<Vec<f32>> = rows.iter().map(|r| r.iter().map(|&x| x as f32).collect()).collect();
    let y32: Vec<f32> = yb.iter().map(|&y| y as f32).collect();
    let d32 = DesignMatrix::from_rows(&rows32, names(3)).unwrap();
    let a = glm::fit_logistic(&d64, &yb).unwrap();
    let b = glm::fit_logistic(&d32, &y32).unwrap();
    for (x, y) in a.coefficients.iter().zip(&b.coefficients) {
        assert!((x - f64::from(*y)).abs() < 1e-3, "{x} vs {y}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn linear_fit_matches_dense_least_squares(seed in 0u64..10_000, n in 8usize..60, p in 1usize..5) {
        let mut rng = stream_rng(seed, 0);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|j| if j == 0 { 1.0 } else { rng.random_range(-3.0..3.0) }).collect())
            .collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let fit = glm::fit_linear(&DesignMatrix::from_rows(&rows, names(p)).unwrap(), &y).unwrap();
        let x = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
        let reference = x.svd(true, true).solve(&DVector::from_vec(y), 1e-12).unwrap();
        for j in 0..p {
            prop_assert!((fit.coefficients[j] - reference[j]).abs() < 1e-8 * (1.0 + reference[j].abs()));
        }
    }

    #[test]
    fn score_vanishes_at_the_optimum(seed in 0u64..10_000, n in 150usize..400) {
        let (rows, yb, yc) = data(n, seed);
        let d = DesignMatrix::from_rows(&rows, names(3)).unwrap();
        for (family, y) in [(Family::Logistic, &yb), (Family::Poisson, &yc), (Family::Linear, &yb)] {
            let fit = match family {
                Family::Logistic => glm::fit_logistic(&d, y),
                Family::Poisson => glm::fit_poisson_robust(&d, y),
                _ => glm::fit_linear(&d, y),
            };
            let Ok(fit) = fit else { continue };
            if fit.separation {
                continue;
            }
            let s = glm::score(family, &d, y, &fit.coefficients);
            prop_assert!(s.iter().all(|v| v.abs() < 1e-6), "{family:?}: {s:?}");
        }
    }
}
