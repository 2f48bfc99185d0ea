use serde::{Deserialize, Serialize};

use super::{GeoError, INDICATORS, SOCIAL_ASSISTANCE};
use crate::linalg::{symmetric_eigen, Matrix};
use crate::scalar::Real;

/// Per-year PCA summary. `score = (raw - raw_min) / (raw_max - raw_min)`
/// where `raw` is the standardized shares projected on `loadings`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaDiagnostics {
    pub n_egos: usize,
    pub loadings: [f64; 5],
    pub eigenvalues: [f64; 5],
    pub variance_explained: f64,
    pub column_means: [f64; 5],
    pub column_sds: [f64; 5],
    pub raw_min: f64,
    pub raw_max: f64,
    pub scaling: String,
}

#[derive(Debug, Clone)]
pub struct DisadvantageScores<T> {
    /// One score per input row, in input order, min-max scaled to [0, 1].
    pub scores: Vec<T>,
    pub diagnostics: PcaDiagnostics,
}

/// First principal component of the standardized shares, oriented so that the
/// social-assistance loading is non-negative.
pub fn disadvantage_scores<T: Real>(shares: &[[T; 5]]) -> Result<DisadvantageScores<T>, GeoError> {
    let n = shares.len();
    if n < 2 {
        return Err(GeoError::InsufficientData(n));
    }
    let nt = T::of_usize(n);
    let mut means = [T::zero(); 5];
    let mut sds = [T::zero(); 5];
    for j in 0..5 {
        let m = shares.iter().map(|r| r[j]).sum::<T>() / nt;
        let var = shares.iter().map(|r| (r[j] - m) * (r[j] - m)).sum::<T>() / T::of_usize(n - 1);
        if !(var.sqrt() > T::epsilon() * (T::one() + m.abs())) {
            return Err(GeoError::DegenerateInput { column: INDICATORS[j] });
        }
        means[j] = m;
        sds[j] = var.sqrt();
    }
    let z: Vec<[T; 5]> = shares.iter().map(|r| std::array::from_fn(|j| (r[j] - means[j]) / sds[j])).collect();
    let mut corr = Matrix::<T>::zeros(5, 5);
    for row in &z {
        for a in 0..5 {
            for b in a..5 {
                corr[(a, b)] = corr[(a, b)] + row[a] * row[b];
            }
        }
    }
    corr.scale_in_place(T::one() / T::of_usize(n - 1));
    corr.symmetrize_from_upper();
    let (values, vectors) = symmetric_eigen(&corr).map_err(|e| GeoError::Eigen(e.to_string()))?;
    let mut loadings: [T; 5] = std::array::from_fn(|j| vectors[(j, 0)]);
    let flip = loadings[SOCIAL_ASSISTANCE] < T::zero()
        || (loadings[SOCIAL_ASSISTANCE] == T::zero() && loadings.iter().copied().sum::<T>() < T::zero());
    if flip {
        for l in &mut loadings {
            *l = -*l;
        }
    }
    let total: T = values.iter().copied().sum();
    let variance_explained = (values[0] / total).max(T::zero()).min(T::one());
    let raw: Vec<T> = z.iter().map(|r| r.iter().zip(&loadings).map(|(&a, &b)| a * b).sum()).collect();
    let lo = raw.iter().copied().fold(T::infinity(), T::min);
    let hi = raw.iter().copied().fold(T::neg_infinity(), T::max);
    let range = hi - lo;
    let scores = raw
        .iter()
        .map(|&r| if range > T::zero() { ((r - lo) / range).max(T::zero()).min(T::one()) } else { T::zero() })
        .collect();
    let f = |a: [T; 5]| a.map(|v| v.to_f64_lossy());
    Ok(DisadvantageScores {
        scores,
        diagnostics: PcaDiagnostics {
            n_egos: n,
            loadings: f(loadings),
            eigenvalues: std::array::from_fn(|j| values[j].to_f64_lossy()),
            variance_explained: variance_explained.to_f64_lossy(),
            column_means: f(means),
            column_sds: f(sds),
            raw_min: lo.to_f64_lossy(),
            raw_max: hi.to_f64_lossy(),
            scaling: "min-max within year".to_string(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_egos_rescale_to_unit_interval() {
        let rows = [[0.1, 0.2, 0.05, 0.1, 0.3], [0.3, 0.4, 0.25, 0.2, 0.5]];
        let out = disadvantage_scores(&rows).unwrap();
        assert_eq!(out.scores, vec![0.0, 1.0]);
    }

    #[test]
    fn collinear_shares_explain_everything() {
        let rows: Vec<[f64; 5]> = (0..20)
            .map(|i| {
                let s = i as f64 / 40.0;
                [s, 2.0 * s + 0.1, 0.5 * s, s + 0.2, 3.0 * s]
            })
            .collect();
        let out = disadvantage_scores(&rows).unwrap();
        assert!((out.diagnostics.variance_explained - 1.0).abs() < 1e-12);
        assert!(out.diagnostics.loadings[SOCIAL_ASSISTANCE] > 0.0);
        // Higher social assistance share means higher score.
        assert!(out.scores[19] > out.scores[0]);
    }

    #[test]
    fn sign_follows_social_assistance() {
        let rows: Vec<[f64; 5]> = (0..30)
            .map(|i| {
                let s = i as f64 / 30.0;
                [1.0 - s, 0.5 + 0.1 * (i % 3) as f64, s, 0.2 + 0.01 * (i % 7) as f64, 0.9 - 0.5 * s]
            })
            .collect();
        let out = disadvantage_scores(&rows).unwrap();
        assert!(out.diagnostics.loadings[SOCIAL_ASSISTANCE] >= 0.0);
    }

    #[test]
    fn constant_column_rejected() {
        let rows = [[0.1, 0.2, 0.3, 0.4, 0.5], [0.2, 0.2, 0.4, 0.5, 0.6], [0.3, 0.2, 0.1, 0.2, 0.3]];
        assert_eq!(disadvantage_scores(&rows).unwrap_err(), GeoError::DegenerateInput { column: "low_income" });
    }

    #[test]
    fn single_ego_rejected() {
        assert_eq!(disadvantage_scores(&[[0.1f64; 5]]).unwrap_err(), GeoError::InsufficientData(1));
    }
}
