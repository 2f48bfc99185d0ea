//! Marginal structural models and interventional effects.
//!
//! The outcome model is a weighted Poisson regression of `Y` on `cum(a)` and
//! `cum(m)`; the mediator model is a weighted linear regression of `M_t` on
//! `avg(a_t)` pooled over intervened waves. With a horizon of `T` waves the
//! effects of always versus never treated are `IDE = T θ1` and
//! `IIE = T β1 θ2` on the log risk-ratio scale.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::glm::{self, DesignMatrix, GlmError};
use crate::linalg::Matrix;
use crate::panel::PanelDataset;
use crate::scalar::Real;
use crate::synthdata::stream_rng;
use crate::weights::{self, WeightError, WeightModelSpec, WeightSet};

const BOOTSTRAP_SALT: u64 = 0xB007_0000_0000_0001;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EffectsError {
    #[error("{model} model: {source}")]
    Fit { model: &'static str, source: GlmError },
    #[error(transparent)]
    Weights(#[from] WeightError),
    #[error("weights cover {got} persons, panel has {expected}")]
    WeightLength { expected: usize, got: usize },
    #[error("horizon must be at least 1")]
    Horizon,
    #[error("bootstrap needs at least 2 replicates, got {0}")]
    TooFewReplicates(usize),
    #[error("{failed} of {total} bootstrap replicates failed (limit 5%); first error: {first}")]
    TooManyFailures { failed: usize, total: usize, first: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MsmConfig {
    /// Waves `T` in the effect formulas; the number of intervened waves when absent.
    pub horizon: Option<usize>,
    /// Condition both models on the wave-1 treatment and mediator, which the
    /// weight numerators condition on.
    pub baseline_adjust: bool,
}

impl Default for MsmConfig {
    fn default() -> Self {
        Self { horizon: None, baseline_adjust: true }
    }
}

impl MsmConfig {
    pub fn horizon_for(&self, panel: &PanelDataset) -> usize {
        self.horizon.unwrap_or(panel.n_waves - 1)
    }
}

/// A fitted coefficient with its robust standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub robust_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MsmEstimates {
    pub theta0: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub theta0_se: f64,
    pub theta1_se: f64,
    pub theta2_se: f64,
    pub beta0: f64,
    pub beta1: f64,
    pub beta0_se: f64,
    pub beta1_se: f64,
    pub n_persons: usize,
    pub horizon: usize,
    pub outcome_coefficients: Vec<Coefficient>,
    pub mediator_coefficients: Vec<Coefficient>,
    pub outcome_converged: bool,
}

/// Point estimates of the interventional effects, always versus never treated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterventionalEffects<T> {
    pub horizon: usize,
    pub ide_log: T,
    pub iie_log: T,
    pub total_log: T,
    pub ide_rr: T,
    pub iie_rr: T,
    pub total_rr: T,
    /// `iie_log / total_log`.
    pub proportion_mediated: T,
    /// `(iie_rr - 1) / (total_rr - 1)`, the excess-risk version.
    pub proportion_mediated_rr: T,
}

/// `IDE = T θ1`, `IIE = T β1 θ2`, their sum, exponentials and shares.
pub fn interventional_effects<T: Real>(theta1: T, theta2: T, beta1: T, horizon: usize) -> InterventionalEffects<T> {
    let t = T::of_usize(horizon);
    let ide_log = t * theta1;
    let iie_log = t * beta1 * theta2;
    effects_from_logs(ide_log, iie_log, horizon)
}

/// Effect summary from already-computed log-scale effects.
pub fn effects_from_logs<T: Real>(ide_log: T, iie_log: T, horizon: usize) -> InterventionalEffects<T> {
    let total_log = ide_log + iie_log;
    let (ide_rr, iie_rr, total_rr) = (ide_log.exp(), iie_log.exp(), total_log.exp());
    InterventionalEffects {
        horizon,
        ide_log,
        iie_log,
        total_log,
        ide_rr,
        iie_rr,
        total_rr,
        proportion_mediated: iie_log / total_log,
        proportion_mediated_rr: (iie_rr - T::one()) / (total_rr - T::one()),
    }
}

fn coefficients(fit: &glm::GlmFit<f64>) -> Vec<Coefficient> {
    let se = fit.robust_se.clone().unwrap_or_else(|| fit.model_se.clone());
    fit.names
        .iter()
        .zip(&fit.coefficients)
        .zip(se)
        .map(|((name, &estimate), robust_se)| Coefficient { name: name.clone(), estimate, robust_se })
        .collect()
}

fn check_len(panel: &PanelDataset, w: &[f64]) -> Result<(), EffectsError> {
    if w.len() != panel.n_persons() {
        return Err(EffectsError::WeightLength { expected: panel.n_persons(), got: w.len() });
    }
    Ok(())
}

/// Weighted Poisson fit of `Y` on `cum(a)`, `cum(m)` (plus wave-1 history
/// when adjusting), one row per person, HC0 sandwich SEs.
pub fn fit_outcome_msm(panel: &PanelDataset, w_y: &[f64], cfg: &MsmConfig) -> Result<glm::GlmFit<f64>, EffectsError> {
    check_len(panel, w_y)?;
    let last = panel.n_waves - 1;
    let mut names = vec!["(intercept)", "cum_a", "cum_m"];
    if cfg.baseline_adjust {
        names.extend(["A_1", "M_1", "A_1:M_1"]);
    }
    let p = names.len();
    let mut data = Vec::with_capacity(panel.n_persons() * p);
    for person in &panel.persons {
        data.extend([1.0, person.cum_a_through(last), person.cum_m_through(last)]);
        if cfg.baseline_adjust {
            let (a1, m1) = (person.a(0), person.mediator[0]);
            data.extend([a1, m1, a1 * m1]);
        }
    }
    let y: Vec<f64> = panel.persons.iter().map(|p| f64::from(u8::from(p.outcome))).collect();
    let x = Matrix::from_row_major(panel.n_persons(), p, data).expect("row width");
    let design = DesignMatrix::new(x, names.iter().map(|s| s.to_string()).collect())
        .and_then(|d| d.with_weights(w_y.to_vec()))
        .map_err(|source| EffectsError::Fit { model: "outcome", source })?;
    glm::fit_poisson_robust(&design, &y).map_err(|source| EffectsError::Fit { model: "outcome", source })
}

/// Weighted linear fit of `M_t` on `avg(a_t)` over rows `(person, t)`,
/// `t = 2..=n_waves`, with wave intercepts (and their interaction with `A_1`
/// when adjusting). Standard errors are clustered by person.
pub fn fit_mediator_msm(panel: &PanelDataset, w_m: &[f64], cfg: &MsmConfig) -> Result<glm::GlmFit<f64>, EffectsError> {
    check_len(panel, w_m)?;
    let waves: Vec<usize> = (1..panel.n_waves).collect();
    let fe: Vec<usize> = waves[1..].to_vec();
    let mut names: Vec<String> = vec!["(intercept)".into()];
    names.extend(fe.iter().map(|t| format!("wave_{}", t + 1)));
    if cfg.baseline_adjust {
        names.push("A_1".into());
        names.extend(fe.iter().map(|t| format!("wave_{}:A_1", t + 1)));
    }
    names.push("avg_a".into());
    let p = names.len();
    let rows = panel.n_persons() * waves.len();
    let mut data = Vec::with_capacity(rows * p);
    let mut y = Vec::with_capacity(rows);
    let mut weights = Vec::with_capacity(rows);
    let mut clusters = Vec::with_capacity(rows);
    for (i, person) in panel.persons.iter().enumerate() {
        let a1 = person.a(0);
        for &t in &waves {
            data.push(1.0);
            data.extend(fe.iter().map(|&w| if w == t { 1.0 } else { 0.0 }));
            if cfg.baseline_adjust {
                data.push(a1);
                data.extend(fe.iter().map(|&w| if w == t { a1 } else { 0.0 }));
            }
            data.push(person.avg_a(t));
            y.push(person.mediator[t]);
            weights.push(w_m[i]);
            clusters.push(i as u64);
        }
    }
    let x = Matrix::from_row_major(rows, p, data).expect("row width");
    let design = DesignMatrix::new(x, names)
        .and_then(|d| d.with_weights(weights))
        .map_err(|source| EffectsError::Fit { model: "mediator", source })?;
    glm::fit_linear_clustered(&design, &y, &clusters).map_err(|source| EffectsError::Fit { model: "mediator", source })
}

/// Fit both models with the truncated weights of `weights`.
pub fn fit_msms(panel: &PanelDataset, weights: &WeightSet, cfg: &MsmConfig) -> Result<MsmEstimates, EffectsError> {
    fit_msms_with(panel, &weights.w_y, &weights.w_m, cfg)
}

/// Fit both models with explicit person-level weights `W_y` and `W_m`.
pub fn fit_msms_with(
    panel: &PanelDataset,
    w_y: &[f64],
    w_m: &[f64],
    cfg: &MsmConfig,
) -> Result<MsmEstimates, EffectsError> {
    let horizon = cfg.horizon_for(panel);
    if horizon == 0 {
        return Err(EffectsError::Horizon);
    }
    let out = fit_outcome_msm(panel, w_y, cfg)?;
    let med = fit_mediator_msm(panel, w_m, cfg)?;
    let oc = coefficients(&out);
    let mc = coefficients(&med);
    let get = |c: &[Coefficient], name: &str| {
        c.iter().find(|c| c.name == name).map(|c| (c.estimate, c.robust_se)).expect("named column")
    };
    let (theta0, theta0_se) = get(&oc, "(intercept)");
    let (theta1, theta1_se) = get(&oc, "cum_a");
    let (theta2, theta2_se) = get(&oc, "cum_m");
    let (beta0, beta0_se) = get(&mc, "(intercept)");
    let (beta1, beta1_se) = get(&mc, "avg_a");
    Ok(MsmEstimates {
        theta0,
        theta1,
        theta2,
        theta0_se,
        theta1_se,
        theta2_se,
        beta0,
        beta1,
        beta0_se,
        beta1_se,
        n_persons: panel.n_persons(),
        horizon,
        outcome_coefficients: oc,
        mediator_coefficients: mc,
        outcome_converged: out.converged,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub weights: WeightSet,
    pub msm: MsmEstimates,
    pub effects: InterventionalEffects<f64>,
}

/// Weights, both MSMs and the effects for one panel.
pub fn estimate(panel: &PanelDataset, spec: &WeightModelSpec, cfg: &MsmConfig) -> Result<Estimate, EffectsError> {
    let w = weights::compute_weights(panel, spec)?;
    estimate_with_weights(panel, w, cfg)
}

pub fn estimate_with_weights(
    panel: &PanelDataset,
    weights: WeightSet,
    cfg: &MsmConfig,
) -> Result<Estimate, EffectsError> {
    let msm = fit_msms(panel, &weights, cfg)?;
    let effects = interventional_effects(msm.theta1, msm.theta2, msm.beta1, msm.horizon);
    Ok(Estimate { weights, msm, effects })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
    /// Bootstrap standard deviation.
    pub sd: f64,
}

impl Interval {
    pub fn covers(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    fn from_values(values: &[f64], level: f64) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let alpha = (1.0 - level) / 2.0 * 100.0;
        let s = weights::Summary::of(values);
        Self {
            lower: weights::percentile(&sorted, alpha),
            upper: weights::percentile(&sorted, 100.0 - alpha),
            sd: s.sd,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub replicates: usize,
    pub failures: usize,
    pub seed: u64,
    pub level: f64,
    /// Successful replicates' effects, in replicate order.
    pub draws: Vec<InterventionalEffects<f64>>,
    pub ide_log: Interval,
    pub iie_log: Interval,
    pub total_log: Interval,
    pub ide_rr: Interval,
    pub iie_rr: Interval,
    pub proportion_mediated: Interval,
}

/// Person-level bootstrap of the whole pipeline (weights refit in every
/// replicate). Replicate `b` draws its resample from a stream derived from
/// `(seed, b)`, so results do not depend on scheduling.
pub fn bootstrap_effects(
    panel: &PanelDataset,
    spec: &WeightModelSpec,
    cfg: &MsmConfig,
    replicates: usize,
    seed: u64,
) -> Result<BootstrapResult, EffectsError> {
    if replicates < 2 {
        return Err(EffectsError::TooFewReplicates(replicates));
    }
    let n = panel.n_persons();
    let outcomes: Vec<Result<InterventionalEffects<f64>, EffectsError>> = (0..replicates)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed ^ BOOTSTRAP_SALT, b as u64);
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let sample = panel.resample(&idx);
            estimate(&sample, spec, cfg).map(|e| e.effects)
        })
        .collect();
    let mut draws = Vec::with_capacity(replicates);
    let mut errors = Vec::new();
    for o in outcomes {
        match o {
            Ok(e) if e.ide_log.is_finite() && e.iie_log.is_finite() => draws.push(e),
            Ok(_) => errors.push("non-finite effect".to_string()),
            Err(e) => errors.push(e.to_string()),
        }
    }
    let failures = errors.len();
    if failures as f64 > 0.05 * replicates as f64 {
        return Err(EffectsError::TooManyFailures { failed: failures, total: replicates, first: errors[0].clone() });
    }
    if failures > 0 {
        log::warn!("{failures} of {replicates} bootstrap replicates failed and were skipped");
    }
    let level = 0.95;
    let col = |f: fn(&InterventionalEffects<f64>) -> f64| {
        Interval::from_values(&draws.iter().map(f).collect::<Vec<_>>(), level)
    };
    Ok(BootstrapResult {
        replicates,
        failures,
        seed,
        level,
        ide_log: col(|e| e.ide_log),
        iie_log: col(|e| e.iie_log),
        total_log: col(|e| e.total_log),
        ide_rr: col(|e| e.ide_rr),
        iie_rr: col(|e| e.iie_rr),
        proportion_mediated: col(|e| e.proportion_mediated),
        draws,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_coefficients_give_published_effects() {
        let e = interventional_effects(0.342_f64, 0.229, 0.159, 13);
        assert!((e.ide_log - 4.446).abs() < 1e-12);
        assert!((e.iie_log - 13.0 * 0.159 * 0.229).abs() < 1e-12);
        assert!((e.proportion_mediated - 0.0962).abs() < 5e-4);
    }

    #[test]
    fn null_direct_path() {
        let e = interventional_effects(0.0, 0.2, 0.1, 5);
        assert_eq!(e.ide_log, 0.0);
        assert_eq!(e.ide_rr, 1.0);
    }

    #[test]
    fn works_in_f32() {
        let e = interventional_effects(0.342f32, 0.229, 0.159, 13);
        assert!((e.ide_log - 4.446).abs() < 1e-5);
    }

    #[test]
    fn interval_from_values() {
        let v: Vec<f64> = (0..=100).map(f64::from).collect();
        let iv = Interval::from_values(&v, 0.95);
        assert!((iv.lower - 2.5).abs() < 1e-12 && (iv.upper - 97.5).abs() < 1e-12);
    }
}
