//! Simulated unmeasured confounders.
//!
//! For each target pair an artificial person-level confounder is drawn from
//! the variables it is meant to confound,
//!
//! * `V = β1 A + β2 M + ε` (treatment-mediator),
//! * `U = β1 A + β2 Y + ε` (treatment-outcome),
//! * `Z = β1 Y + β2 M + ε` (mediator-outcome),
//!
//! with `ε ~ N(0, δ²)` and `A`, `M` the wave-1 values. The column is added to
//! the denominator of the weight family it affects, the weights and models are
//! refit, and the drift of the effects from the unadjusted run is recorded.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::effects::{self, EffectsError, InterventionalEffects, MsmConfig};
use crate::panel::PanelDataset;
use crate::synthdata::stream_rng;
use crate::weights::{self, Family, Term, WeightModelSpec};

const SENSITIVITY_SALT: u64 = 0x5E45_0000_0000_0001;

/// Default confounding strengths for the scenario grid.
pub const DEFAULT_GRID: [f64; 5] = [0.0, 0.1, 0.3, 0.5, 1.0];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SensitivityError {
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("generated confounder is not finite for person {0}")]
    NonFinite(u64),
    #[error(transparent)]
    Effects(#[from] EffectsError),
    #[error("{target:?} at {value}: {failed} of {total} simulations failed (limit 5%); first error: {first}")]
    TooManyFailures { target: Target, value: f64, failed: usize, total: usize, first: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// `V`, confounds treatment and mediator.
    TreatmentMediator,
    /// `U`, confounds treatment and outcome.
    TreatmentOutcome,
    /// `Z`, confounds mediator and outcome.
    MediatorOutcome,
}

impl Target {
    pub const ALL: [Target; 3] = [Target::TreatmentMediator, Target::TreatmentOutcome, Target::MediatorOutcome];

    pub fn symbol(self) -> &'static str {
        match self {
            Target::TreatmentMediator => "V",
            Target::TreatmentOutcome => "U",
            Target::MediatorOutcome => "Z",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Target::TreatmentMediator => "treatment_mediator",
            Target::TreatmentOutcome => "treatment_outcome",
            Target::MediatorOutcome => "mediator_outcome",
        }
    }

    /// Weight family whose denominator receives the confounder.
    pub fn family(self) -> Family {
        match self {
            Target::TreatmentMediator => Family::TreatmentMediator,
            Target::TreatmentOutcome => Family::TreatmentOutcome,
            Target::MediatorOutcome => Family::MediatorOutcome,
        }
    }

    fn column(self) -> String {
        format!("{}_sim", self.symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub target: Target,
    pub beta1: f64,
    pub beta2: f64,
    pub noise_sd: f64,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), SensitivityError> {
        if !(self.noise_sd > 0.0 && self.noise_sd.is_finite()) {
            return Err(SensitivityError::Scenario(format!("noise SD must be positive, got {}", self.noise_sd)));
        }
        if !self.beta1.is_finite() || !self.beta2.is_finite() {
            return Err(SensitivityError::Scenario("coefficients must be finite".into()));
        }
        Ok(())
    }
}

/// One confounder value per person, in panel order.
pub fn simulate_confounder<R: Rng + ?Sized>(
    panel: &PanelDataset,
    scenario: &Scenario,
    rng: &mut R,
) -> Result<Vec<f64>, SensitivityError> {
    scenario.validate()?;
    let noise = Normal::new(0.0, scenario.noise_sd).expect("validated SD");
    panel
        .persons
        .iter()
        .map(|p| {
            let (a, m, y) = (p.a(0), p.mediator[0], f64::from(u8::from(p.outcome)));
            let signal = match scenario.target {
                Target::TreatmentMediator => scenario.beta1 * a + scenario.beta2 * m,
                Target::TreatmentOutcome => scenario.beta1 * a + scenario.beta2 * y,
                Target::MediatorOutcome => scenario.beta1 * y + scenario.beta2 * m,
            };
            let v = signal + noise.sample(rng);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(SensitivityError::NonFinite(p.person_id))
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensitivityConfig {
    pub grid: Vec<f64>,
    pub n_sims: usize,
    pub noise_sd: f64,
    pub seed: u64,
    pub targets: Vec<Target>,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        Self { grid: DEFAULT_GRID.to_vec(), n_sims: 500, noise_sd: 1.0, seed: 11, targets: Target::ALL.to_vec() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimRecord {
    pub target: Target,
    pub grid_value: f64,
    pub sim_index: usize,
    pub ide_log: f64,
    pub iie_log: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioPoint {
    pub target: Target,
    pub grid_value: f64,
    pub n_sims: usize,
    pub failures: usize,
    pub ide_mean: f64,
    pub ide_sd: f64,
    pub iie_mean: f64,
    pub iie_sd: f64,
    /// `|mean ide - baseline ide|`.
    pub ide_drift: f64,
    /// `|mean iie - baseline iie|`.
    pub iie_drift: f64,
}

impl ScenarioPoint {
    /// Combined drift of both effects.
    pub fn drift(&self) -> f64 {
        self.ide_drift + self.iie_drift
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResults {
    pub baseline: InterventionalEffects<f64>,
    pub points: Vec<ScenarioPoint>,
    pub sims: Vec<SimRecord>,
    pub noise_sd: f64,
    pub seed: u64,
}

impl ScenarioResults {
    pub fn point(&self, target: Target, grid_value: f64) -> Option<&ScenarioPoint> {
        self.points.iter().find(|p| p.target == target && p.grid_value == grid_value)
    }

    pub fn series(&self, target: Target) -> Vec<&ScenarioPoint> {
        self.points.iter().filter(|p| p.target == target).collect()
    }
}

/// Run every (target, grid value) scenario `n_sims` times with
/// `β1 = β2 = grid value`.
///
/// Simulation `s` for a target draws its noise from one stream that is reused
/// across grid values (common random numbers), so the drift curve is smooth in
/// the grid value. Different targets and simulations use different streams.
pub fn run_scenarios(
    panel: &PanelDataset,
    spec: &WeightModelSpec,
    msm: &MsmConfig,
    cfg: &SensitivityConfig,
) -> Result<ScenarioResults, SensitivityError> {
    if cfg.grid.is_empty() {
        return Err(SensitivityError::Scenario("grid must not be empty".into()));
    }
    if cfg.n_sims == 0 {
        return Err(SensitivityError::Scenario("n_sims must be at least 1".into()));
    }
    let base = effects::estimate(panel, spec, msm)?;
    let jobs: Vec<(usize, Target, usize, f64, usize)> = cfg
        .targets
        .iter()
        .enumerate()
        .flat_map(|(ti, &t)| {
            cfg.grid.iter().enumerate().flat_map(move |(gi, &g)| (0..cfg.n_sims).map(move |s| (ti, t, gi, g, s)))
        })
        .collect();
    let n_sims = cfg.n_sims as u64;
    let outcomes: Vec<Result<SimRecord, SensitivityError>> = jobs
        .par_iter()
        .map(|&(ti, target, _, g, s)| {
            let stream = ti as u64 * n_sims + s as u64;
            let mut rng = stream_rng(cfg.seed ^ SENSITIVITY_SALT, stream);
            let scenario = Scenario { target, beta1: g, beta2: g, noise_sd: cfg.noise_sd };
            let column = simulate_confounder(panel, &scenario, &mut rng)?;
            let name = target.column();
            let augmented = panel
                .clone()
                .with_extra_column(&name, &column)
                .map_err(|e| SensitivityError::Scenario(e.to_string()))?;
            let sim_spec = spec.clone().with_denominator_term(target.family(), Term::Column(name));
            let w =
                weights::recompute_changed(&augmented, &base.weights, spec, &sim_spec).map_err(EffectsError::from)?;
            let est = effects::estimate_with_weights(&augmented, w, msm)?;
            Ok(SimRecord {
                target,
                grid_value: g,
                sim_index: s,
                ide_log: est.effects.ide_log,
                iie_log: est.effects.iie_log,
            })
        })
        .collect();
    let mut sims = Vec::with_capacity(outcomes.len());
    let mut points = Vec::new();
    let mut cursor = outcomes.into_iter();
    for &target in &cfg.targets {
        for &g in &cfg.grid {
            let mut ok = Vec::with_capacity(cfg.n_sims);
            let mut errors = Vec::new();
            for r in cursor.by_ref().take(cfg.n_sims) {
                match r {
                    Ok(rec) if rec.ide_log.is_finite() && rec.iie_log.is_finite() => ok.push(rec),
                    Ok(_) => errors.push("non-finite effect".to_string()),
                    Err(e) => errors.push(e.to_string()),
                }
            }
            if errors.len() as f64 > 0.05 * cfg.n_sims as f64 {
                return Err(SensitivityError::TooManyFailures {
                    target,
                    value: g,
                    failed: errors.len(),
                    total: cfg.n_sims,
                    first: errors[0].clone(),
                });
            }
            let ide = weights::Summary::of(&ok.iter().map(|r| r.ide_log).collect::<Vec<_>>());
            let iie = weights::Summary::of(&ok.iter().map(|r| r.iie_log).collect::<Vec<_>>());
            points.push(ScenarioPoint {
                target,
                grid_value: g,
                n_sims: ok.len(),
                failures: errors.len(),
                ide_mean: ide.mean,
                ide_sd: ide.sd,
                iie_mean: iie.mean,
                iie_sd: iie.sd,
                ide_drift: (ide.mean - base.effects.ide_log).abs(),
                iie_drift: (iie.mean - base.effects.iie_log).abs(),
            });
            sims.extend(ok);
        }
    }
    Ok(ScenarioResults { baseline: base.effects, points, sims, noise_sd: cfg.noise_sd, seed: cfg.seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::PersonRecord;

    fn panel() -> PanelDataset {
        let persons = (0..4)
            .map(|i| PersonRecord {
                person_id: i,
                baseline: vec![],
                treatment: vec![i % 2 == 1, false],
                mediator: vec![i as f64 * 0.5, 0.0],
                confounders: vec![vec![], vec![]],
                outcome: i >= 2,
                extra: vec![],
            })
            .collect();
        PanelDataset::new(2, vec![], vec![], persons).unwrap()
    }

    #[test]
    fn near_deterministic_limit() {
        let p = panel();
        let s = Scenario { target: Target::TreatmentMediator, beta1: 1.0, beta2: 0.0, noise_sd: 1e-6 };
        let v = simulate_confounder(&p, &s, &mut stream_rng(1, 0)).unwrap();
        for (x, person) in v.iter().zip(&p.persons) {
            assert!((x - person.a(0)).abs() < 1e-4);
        }
        let s = Scenario { target: Target::MediatorOutcome, beta1: 2.0, beta2: 1.0, noise_sd: 1e-9 };
        let z = simulate_confounder(&p, &s, &mut stream_rng(1, 0)).unwrap();
        assert!((z[3] - (2.0 + 1.5)).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_noise() {
        let s = Scenario { target: Target::TreatmentOutcome, beta1: 0.0, beta2: 0.0, noise_sd: 0.0 };
        assert!(simulate_confounder(&panel(), &s, &mut stream_rng(1, 0)).is_err());
    }
}
