//! Synthetic register-style cohorts with known interventional effects.
//!
//! Per person: baseline covariates `C = (female, foreign, ses)`, optional
//! hidden confounders `(U, V, Z)`, then for every wave in order the treatment
//! `A_t`, mediator `M_t` and confounders `L_t = (income, unemployed)`. Wave 1
//! is the baseline wave; the outcome depends on sums over all waves.
//! Residences are assigned per wave so that neighborhood composition tracks
//! the mediator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{ResidentRecord, Square};
use crate::oracle::{DiscreteDgp, OracleError, Role};
use crate::panel::{PanelDataset, PanelError, PersonRecord};

/// Clip bound for outcome probabilities.
pub const OUTCOME_EPS: f64 = 1e-6;

pub const BASELINE_NAMES: [&str; 3] = ["C_female", "C_foreign", "C_ses"];
pub const CONFOUNDER_NAMES: [&str; 2] = ["L_income", "L_unemployed"];

const RESIDENCE_SALT: u64 = 0x5EED_0000_0000_0001;
const TRUTH_SALT: u64 = 0x5EED_0000_0000_0002;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("model specification: {0}")]
    Specification(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Panel(#[from] PanelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineEq {
    pub p_female: f64,
    pub p_foreign: f64,
}

impl Default for BaselineEq {
    fn default() -> Self {
        Self { p_female: 0.5, p_foreign: 0.1 }
    }
}

/// `logit P(A_t = 1)`. Wave 1 uses `baseline_logit` only (plus hidden terms).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreatmentEq {
    pub baseline_logit: f64,
    pub intercept: f64,
    pub lag: f64,
    /// M_{t-1} -> A_t feedback.
    pub mediator: f64,
    pub baseline: [f64; 3],
    pub confounders: [f64; 2],
}

impl Default for TreatmentEq {
    fn default() -> Self {
        Self {
            baseline_logit: -1.5,
            intercept: -2.0,
            lag: 1.5,
            mediator: 0.15,
            baseline: [0.1, 0.2, -0.2],
            confounders: [-0.2, 0.5],
        }
    }
}

/// `M_t = intercept + lag M_{t-1} + treatment A_t + C + L_{t-1} + noise`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MediatorEq {
    pub baseline_mean: f64,
    pub intercept: f64,
    pub lag: f64,
    pub treatment: f64,
    pub baseline: [f64; 3],
    pub confounders: [f64; 2],
    pub noise_sd: f64,
}

impl Default for MediatorEq {
    fn default() -> Self {
        Self {
            baseline_mean: 0.0,
            intercept: 0.0,
            lag: 0.5,
            treatment: 0.3,
            baseline: [0.05, 0.2, -0.15],
            confounders: [-0.1, 0.25],
            noise_sd: 0.5,
        }
    }
}

/// Income is Gaussian, unemployment logistic; both respond to `A_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfounderEq {
    pub income_intercept: f64,
    pub income_lag: f64,
    pub income_treatment: f64,
    pub income_baseline: [f64; 3],
    pub income_sd: f64,
    pub unemployed_logit: f64,
    pub unemployed_lag: f64,
    pub unemployed_treatment: f64,
    pub unemployed_baseline: [f64; 3],
}

impl Default for ConfounderEq {
    fn default() -> Self {
        Self {
            income_intercept: 0.0,
            income_lag: 0.6,
            income_treatment: -0.3,
            income_baseline: [-0.1, -0.2, 0.4],
            income_sd: 0.7,
            unemployed_logit: -1.5,
            unemployed_lag: 1.0,
            unemployed_treatment: 0.4,
            unemployed_baseline: [0.0, 0.3, -0.3],
        }
    }
}

/// `log P(Y = 1) = intercept + cum_treatment ΣA + cum_mediator ΣM + C + ΣL`,
/// sums over all waves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutcomeEq {
    pub intercept: f64,
    pub cum_treatment: f64,
    pub cum_mediator: f64,
    pub baseline: [f64; 3],
    pub confounders: [f64; 2],
}

impl Default for OutcomeEq {
    fn default() -> Self {
        Self {
            intercept: -3.5,
            cum_treatment: 0.15,
            cum_mediator: 0.05,
            baseline: [0.05, 0.1, -0.1],
            confounders: [-0.02, 0.05],
        }
    }
}

/// Strengths of the built-in unmeasured confounders: U links A and Y, V links
/// A and M, Z links M and Y.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HiddenEq {
    pub u_treatment: f64,
    pub u_outcome: f64,
    pub v_treatment: f64,
    pub v_mediator: f64,
    pub z_mediator: f64,
    pub z_outcome: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResidenceConfig {
    pub enabled: bool,
    /// Squares per grid side; derived from `persons_per_square` when absent.
    pub grid_side: Option<usize>,
    pub persons_per_square: f64,
    /// Weight of the mediator in the residential sorting key, in [0, 1].
    pub sorting_strength: f64,
    /// Indicator flags other than social assistance and unemployment are
    /// Bernoulli(sigmoid(indicator_logit + indicator_slope z(M_t))).
    pub indicator_logit: f64,
    pub indicator_slope: f64,
}

impl Default for ResidenceConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            grid_side: None,
            persons_per_square: 8.0,
            sorting_strength: 0.9,
            indicator_logit: -1.2,
            indicator_slope: 1.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DgpConfig {
    pub n_persons: usize,
    pub n_waves: usize,
    pub seed: u64,
    pub baseline: BaselineEq,
    pub treatment: TreatmentEq,
    pub mediator: MediatorEq,
    pub confounders: ConfounderEq,
    pub outcome: OutcomeEq,
    pub hidden: HiddenEq,
    pub residence: ResidenceConfig,
}

impl Default for DgpConfig {
    fn default() -> Self {
        Self {
            n_persons: 20_000,
            n_waves: 5,
            seed: 7,
            baseline: BaselineEq::default(),
            treatment: TreatmentEq::default(),
            mediator: MediatorEq::default(),
            confounders: ConfounderEq::default(),
            outcome: OutcomeEq::default(),
            hidden: HiddenEq::default(),
            residence: ResidenceConfig::default(),
        }
    }
}

impl DgpConfig {
    /// No path from treatment to the mediator: A->M and L->M are zeroed (the
    /// latter closes A->L->M).
    pub fn without_mediated_path(mut self) -> Self {
        self.mediator.treatment = 0.0;
        self.mediator.confounders = [0.0; 2];
        self
    }

    /// No direct path: A->Y and A->L are zeroed.
    pub fn without_direct_path(mut self) -> Self {
        self.outcome.cum_treatment = 0.0;
        self.confounders.income_treatment = 0.0;
        self.confounders.unemployed_treatment = 0.0;
        self
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Config(m));
        if self.n_persons == 0 {
            return bad("n_persons must be at least 1".into());
        }
        if self.n_waves < 2 {
            return bad(format!("n_waves must be at least 2, got {}", self.n_waves));
        }
        if let Some((name, v)) = self.coefficients().into_iter().find(|(_, v)| !v.is_finite()) {
            return bad(format!("{name} is not finite ({v})"));
        }
        for (name, p) in
            [("baseline.p_female", self.baseline.p_female), ("baseline.p_foreign", self.baseline.p_foreign)]
        {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1]"));
            }
        }
        if !(self.mediator.noise_sd > 0.0) || !(self.confounders.income_sd > 0.0) {
            return bad("noise standard deviations must be positive".into());
        }
        let r = &self.residence;
        if !(0.0..=1.0).contains(&r.sorting_strength) {
            return bad("residence.sorting_strength must lie in [0, 1]".into());
        }
        if !(r.persons_per_square > 0.0) || r.grid_side == Some(0) {
            return bad("residence grid must be non-empty".into());
        }
        Ok(())
    }

    fn coefficients(&self) -> Vec<(&'static str, f64)> {
        let (t, m, l, o, h, r) =
            (&self.treatment, &self.mediator, &self.confounders, &self.outcome, &self.hidden, &self.residence);
        let mut v = vec![
            ("baseline.p_female", self.baseline.p_female),
            ("baseline.p_foreign", self.baseline.p_foreign),
            ("treatment.baseline_logit", t.baseline_logit),
            ("treatment.intercept", t.intercept),
            ("treatment.lag", t.lag),
            ("treatment.mediator", t.mediator),
            ("mediator.baseline_mean", m.baseline_mean),
            ("mediator.intercept", m.intercept),
            ("mediator.lag", m.lag),
            ("mediator.treatment", m.treatment),
            ("mediator.noise_sd", m.noise_sd),
            ("confounders.income_intercept", l.income_intercept),
            ("confounders.income_lag", l.income_lag),
            ("confounders.income_treatment", l.income_treatment),
            ("confounders.income_sd", l.income_sd),
            ("confounders.unemployed_logit", l.unemployed_logit),
            ("confounders.unemployed_lag", l.unemployed_lag),
            ("confounders.unemployed_treatment", l.unemployed_treatment),
            ("outcome.intercept", o.intercept),
            ("outcome.cum_treatment", o.cum_treatment),
            ("outcome.cum_mediator", o.cum_mediator),
            ("hidden.u_treatment", h.u_treatment),
            ("hidden.u_outcome", h.u_outcome),
            ("hidden.v_treatment", h.v_treatment),
            ("hidden.v_mediator", h.v_mediator),
            ("hidden.z_mediator", h.z_mediator),
            ("hidden.z_outcome", h.z_outcome),
            ("residence.persons_per_square", r.persons_per_square),
            ("residence.sorting_strength", r.sorting_strength),
            ("residence.indicator_logit", r.indicator_logit),
            ("residence.indicator_slope", r.indicator_slope),
        ];
        for (name, arr) in [
            ("treatment.baseline", &t.baseline[..]),
            ("treatment.confounders", &t.confounders[..]),
            ("mediator.baseline", &m.baseline[..]),
            ("mediator.confounders", &m.confounders[..]),
            ("confounders.income_baseline", &l.income_baseline[..]),
            ("confounders.unemployed_baseline", &l.unemployed_baseline[..]),
            ("outcome.baseline", &o.baseline[..]),
            ("outcome.confounders", &o.confounders[..]),
        ] {
            v.extend(arr.iter().map(|&x| (name, x)));
        }
        v
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn dot<const N: usize>(a: &[f64; N], b: &[f64; N]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

fn bernoulli<R: Rng + ?Sized>(rng: &mut R, p: f64) -> bool {
    rng.random::<f64>() < p
}

/// Per-(seed, stream) generator; streams never overlap.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy)]
struct Person {
    c: [f64; 3],
    u: f64,
    v: f64,
    z: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct WaveState {
    a: bool,
    m: f64,
    l: [f64; 2],
}

impl WaveState {
    fn af(&self) -> f64 {
        f64::from(u8::from(self.a))
    }
}

fn draw_person<R: Rng + ?Sized>(cfg: &DgpConfig, rng: &mut R) -> Person {
    let female = f64::from(u8::from(bernoulli(rng, cfg.baseline.p_female)));
    let foreign = f64::from(u8::from(bernoulli(rng, cfg.baseline.p_foreign)));
    let ses = normal(rng);
    let (u, v, z) = (normal(rng), normal(rng), normal(rng));
    Person { c: [female, foreign, ses], u, v, z }
}

/// One wave. `prev = None` is the baseline wave. Every draw is consumed
/// whether or not the value is fixed, so runs with different interventions
/// stay aligned on the same random numbers.
fn step<R: Rng + ?Sized>(
    cfg: &DgpConfig,
    p: &Person,
    prev: Option<&WaveState>,
    fix_a: Option<bool>,
    fix_m: Option<f64>,
    rng: &mut R,
) -> WaveState {
    let (t, me, le, h) = (&cfg.treatment, &cfg.mediator, &cfg.confounders, &cfg.hidden);
    let hidden_a = h.u_treatment * p.u + h.v_treatment * p.v;
    let eta_a = match prev {
        None => t.baseline_logit + hidden_a,
        Some(s) => {
            t.intercept
                + t.lag * s.af()
                + t.mediator * s.m
                + dot(&t.baseline, &p.c)
                + dot(&t.confounders, &s.l)
                + hidden_a
        }
    };
    let ua = rng.random::<f64>();
    let a = fix_a.unwrap_or(ua < sigmoid(eta_a));
    let af = f64::from(u8::from(a));
    let hidden_m = h.v_mediator * p.v + h.z_mediator * p.z;
    let mean_m = match prev {
        None => me.baseline_mean + me.treatment * af + dot(&me.baseline, &p.c) + hidden_m,
        Some(s) => {
            me.intercept
                + me.lag * s.m
                + me.treatment * af
                + dot(&me.baseline, &p.c)
                + dot(&me.confounders, &s.l)
                + hidden_m
        }
    };
    let em = normal(rng);
    let m = fix_m.unwrap_or(mean_m + me.noise_sd * em);
    let (prev_inc, prev_un) = prev.map_or((0.0, 0.0), |s| (s.l[0], s.l[1]));
    let income = le.income_intercept
        + le.income_lag * prev_inc
        + le.income_treatment * af
        + dot(&le.income_baseline, &p.c)
        + le.income_sd * normal(rng);
    let eta_u = le.unemployed_logit
        + le.unemployed_lag * prev_un
        + le.unemployed_treatment * af
        + dot(&le.unemployed_baseline, &p.c);
    let unemployed = f64::from(u8::from(rng.random::<f64>() < sigmoid(eta_u)));
    WaveState { a, m, l: [income, unemployed] }
}

fn outcome_log_mean(cfg: &DgpConfig, p: &Person, waves: &[WaveState]) -> f64 {
    let o = &cfg.outcome;
    let sum_a: f64 = waves.iter().map(WaveState::af).sum();
    let sum_m: f64 = waves.iter().map(|w| w.m).sum();
    let sum_l = waves.iter().fold([0.0; 2], |acc, w| [acc[0] + w.l[0], acc[1] + w.l[1]]);
    o.intercept
        + o.cum_treatment * sum_a
        + o.cum_mediator * sum_m
        + dot(&o.baseline, &p.c)
        + dot(&o.confounders, &sum_l)
        + cfg.hidden.u_outcome * p.u
        + cfg.hidden.z_outcome * p.z
}

/// Generated cohort: the analysis panel and per-wave residence records.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCohort {
    pub panel: PanelDataset,
    /// `residences[w]` holds every person's record in wave `w + 1`.
    pub residences: Vec<Vec<ResidentRecord>>,
    /// Persons whose outcome probability had to be clipped to (ε, 1-ε).
    pub clipped_outcomes: usize,
}

/// Simulate a cohort. Deterministic in `config.seed`; persons are generated
/// from independent streams, so the result does not depend on thread count.
pub fn generate_population(config: &DgpConfig) -> Result<SyntheticCohort, SynthError> {
    config.validate()?;
    let rows: Vec<(PersonRecord, bool)> = (0..config.n_persons as u64)
        .into_par_iter()
        .map(|id| {
            let mut rng = stream_rng(config.seed, id);
            let p = draw_person(config, &mut rng);
            let mut waves = Vec::with_capacity(config.n_waves);
            for _ in 0..config.n_waves {
                let s = step(config, &p, waves.last(), None, None, &mut rng);
                waves.push(s);
            }
            let raw = outcome_log_mean(config, &p, &waves).exp();
            let clipped = !(raw > OUTCOME_EPS && raw < 1.0 - OUTCOME_EPS);
            let py = raw.clamp(OUTCOME_EPS, 1.0 - OUTCOME_EPS);
            let y = bernoulli(&mut rng, py);
            let record = PersonRecord {
                person_id: id,
                baseline: p.c.to_vec(),
                treatment: waves.iter().map(|w| w.a).collect(),
                mediator: waves.iter().map(|w| w.m).collect(),
                confounders: waves.iter().map(|w| w.l.to_vec()).collect(),
                outcome: y,
                extra: Vec::new(),
            };
            (record, clipped)
        })
        .collect();
    let clipped_outcomes = rows.iter().filter(|r| r.1).count();
    if clipped_outcomes > 0 {
        log::warn!("{clipped_outcomes} outcome probabilities clipped to ({OUTCOME_EPS}, 1 - {OUTCOME_EPS})");
    }
    let persons = rows.into_iter().map(|r| r.0).collect();
    let panel = PanelDataset::new(
        config.n_waves,
        BASELINE_NAMES.iter().map(|s| s.to_string()).collect(),
        CONFOUNDER_NAMES.iter().map(|s| s.to_string()).collect(),
        persons,
    )?;
    let residences = if config.residence.enabled { assign_residences(config, &panel) } else { Vec::new() };
    Ok(SyntheticCohort { panel, residences, clipped_outcomes })
}

/// Grid side used for residences.
pub fn grid_side(config: &DgpConfig) -> usize {
    config.residence.grid_side.unwrap_or_else(|| {
        ((config.n_persons as f64 / config.residence.persons_per_square).sqrt().ceil() as usize).max(1)
    })
}

/// Place persons on the grid. Squares are ranked by a smooth disadvantage
/// field and given random capacities; persons ranked by a noisy mediator key
/// fill them in order.
fn assign_residences(config: &DgpConfig, panel: &PanelDataset) -> Vec<Vec<ResidentRecord>> {
    let r = &config.residence;
    let side = grid_side(config);
    let mut rng = stream_rng(config.seed ^ RESIDENCE_SALT, 0);
    let n_bumps = 6;
    let bumps: Vec<(f64, f64, f64, f64)> = (0..n_bumps)
        .map(|_| {
            let s = side as f64;
            (rng.random::<f64>() * s, rng.random::<f64>() * s, (0.1 + 0.2 * rng.random::<f64>()) * s, normal(&mut rng))
        })
        .collect();
    let exp1 = Exp::new(1.0).expect("rate 1");
    let mut squares: Vec<(f64, Square, f64)> = Vec::with_capacity(side * side);
    for x in 0..side {
        for y in 0..side {
            let (fx, fy) = (x as f64 + 0.5, y as f64 + 0.5);
            let d: f64 = bumps
                .iter()
                .map(|&(cx, cy, rad, amp)| amp * (-((fx - cx).powi(2) + (fy - cy).powi(2)) / (2.0 * rad * rad)).exp())
                .sum::<f64>()
                + 0.3 * normal(&mut rng);
            let capacity = 0.25 + exp1.sample(&mut rng);
            squares.push((d, Square::new(x as i64, y as i64), capacity));
        }
    }
    squares.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let total: f64 = squares.iter().map(|s| s.2).sum();
    let mut cum = Vec::with_capacity(squares.len());
    let mut acc = 0.0;
    for s in &squares {
        acc += s.2 / total;
        cum.push(acc);
    }
    let n = panel.n_persons();
    let s = r.sorting_strength;
    let noise_w = (1.0 - s * s).max(0.0).sqrt();
    (0..panel.n_waves)
        .map(|w| {
            let mut rng = stream_rng(config.seed ^ RESIDENCE_SALT, 1 + w as u64);
            let ms: Vec<f64> = panel.persons.iter().map(|p| p.mediator[w]).collect();
            let mean = ms.iter().sum::<f64>() / n as f64;
            let sd = (ms.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / n.max(2).saturating_sub(1) as f64).sqrt();
            let z: Vec<f64> = ms.iter().map(|m| if sd > 0.0 { (m - mean) / sd } else { 0.0 }).collect();
            let mut keyed: Vec<(f64, usize)> =
                z.iter().enumerate().map(|(i, &zi)| (s * zi + noise_w * normal(&mut rng), i)).collect();
            keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut square_of = vec![Square::new(0, 0); n];
            let mut k = 0;
            for (rank, &(_, i)) in keyed.iter().enumerate() {
                let q = (rank as f64 + 0.5) / n as f64;
                while k + 1 < cum.len() && cum[k] < q {
                    k += 1;
                }
                square_of[i] = squares[k].1;
            }
            panel
                .persons
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let pr = sigmoid(r.indicator_logit + r.indicator_slope * z[i]);
                    let low_edu = bernoulli(&mut rng, pr);
                    let low_income = bernoulli(&mut rng, pr);
                    let low_skill = bernoulli(&mut rng, pr);
                    let unemployed = p.confounders[w][1] > 0.5;
                    ResidentRecord {
                        person_id: p.person_id,
                        square: square_of[i],
                        adult: true,
                        flags: [low_edu, low_income, p.treatment[w], unemployed, low_skill],
                    }
                })
                .collect()
        })
        .collect()
}

/// Monte Carlo interventional effects, always treated versus never treated
/// over the intervened waves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub ide_log: f64,
    pub iie_log: f64,
    pub ide_se: f64,
    pub iie_se: f64,
    pub mc_replicates: usize,
    /// Larger of the two standard errors.
    pub mc_standard_error: f64,
}

/// Paired replicate values `(p(a, G*), p(a*, G*), p(a, G_a))`.
fn contrasts(samples: &[[f64; 3]]) -> GroundTruth {
    let r = samples.len() as f64;
    let mean = |k: usize| samples.iter().map(|s| s[k]).sum::<f64>() / r;
    let (m_a_star, m_star_star, m_a_a) = (mean(0), mean(1), mean(2));
    let se = |f: &dyn Fn(&[f64; 3]) -> f64| {
        if samples.len() < 2 {
            return 0.0;
        }
        let d: Vec<f64> = samples.iter().map(f).collect();
        let md = d.iter().sum::<f64>() / r;
        (d.iter().map(|x| (x - md).powi(2)).sum::<f64>() / (r - 1.0) / r).sqrt()
    };
    let ide_se = se(&|s| s[0] / m_a_star - s[1] / m_star_star);
    let iie_se = se(&|s| s[2] / m_a_a - s[0] / m_a_star);
    GroundTruth {
        ide_log: m_a_star.ln() - m_star_star.ln(),
        iie_log: m_a_a.ln() - m_a_star.ln(),
        ide_se,
        iie_se,
        mc_replicates: samples.len(),
        mc_standard_error: ide_se.max(iie_se),
    }
}

const CHUNK: usize = 4096;

fn chunked<F>(mc_replicates: usize, seed: u64, f: F) -> Result<Vec<[f64; 3]>, SynthError>
where
    F: Fn(&mut ChaCha8Rng) -> Result<[f64; 3], SynthError> + Sync,
{
    if mc_replicates == 0 {
        return Err(SynthError::Config("mc_replicates must be at least 1".into()));
    }
    let chunks = mc_replicates.div_ceil(CHUNK);
    let parts: Vec<Result<Vec<[f64; 3]>, SynthError>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed ^ TRUTH_SALT, c as u64);
            let len = CHUNK.min(mc_replicates - c * CHUNK);
            (0..len).map(|_| f(&mut rng)).collect()
        })
        .collect();
    let mut out = Vec::with_capacity(mc_replicates);
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Ground truth for the continuous DGP. Each replicate draws a person and
/// their baseline wave, a mediator path under never-treated and one under
/// always-treated (common random numbers), then the outcome probability under
/// the three (regime, mediator path) pairs with a fresh confounder path.
pub fn ground_truth_effects(config: &DgpConfig, mc_replicates: usize) -> Result<GroundTruth, SynthError> {
    config.validate()?;
    let n = config.n_waves;
    let samples = chunked(mc_replicates, config.seed, |rng| {
        let p = draw_person(config, rng);
        let w0 = step(config, &p, None, None, None, rng);
        let path = |rng: &mut ChaCha8Rng, a: bool, ms: Option<&[f64]>| {
            let mut waves = vec![w0];
            for t in 1..n {
                let fix_m = ms.map(|m| m[t]);
                let s = step(config, &p, waves.last(), Some(a), fix_m, rng);
                waves.push(s);
            }
            waves
        };
        let (s_med, s_out): (u64, u64) = (rng.random(), rng.random());
        let m_star: Vec<f64> = path(&mut stream_rng(s_med, 0), false, None).iter().map(|w| w.m).collect();
        let m_a: Vec<f64> = path(&mut stream_rng(s_med, 0), true, None).iter().map(|w| w.m).collect();
        let mut out = [0.0; 3];
        for (k, (a, ms)) in [(true, &m_star), (false, &m_star), (true, &m_a)].into_iter().enumerate() {
            let waves = path(&mut stream_rng(s_out, 0), a, Some(ms));
            let py = outcome_log_mean(config, &p, &waves).exp();
            if !(py > 0.0 && py < 1.0) {
                return Err(SynthError::Specification(format!("simulated outcome probability {py} outside (0, 1)")));
            }
            out[k] = py;
        }
        Ok(out)
    })?;
    Ok(contrasts(&samples))
}

/// Sample an analysis panel from a discrete DGP. Panel wave 1 holds the
/// baseline nodes `A0`, `M0` (and `L0`); waves 2.. hold `A{t}`, `M{t}`,
/// `L{t}`. Remaining baseline nodes become `C_*` columns.
pub fn generate_discrete_panel(dgp: &DiscreteDgp, n_persons: usize, seed: u64) -> Result<PanelDataset, SynthError> {
    if n_persons == 0 {
        return Err(SynthError::Config("n_persons must be at least 1".into()));
    }
    let idx = |name: &str| dgp.node_index(name);
    let a0 = idx("A0").ok_or_else(|| SynthError::Config("discrete panel needs a baseline node A0".into()))?;
    let m0 = idx("M0").ok_or_else(|| SynthError::Config("discrete panel needs a baseline node M0".into()))?;
    let t_max = dgp.n_waves();
    let l_nodes: Vec<Option<usize>> = (0..=t_max).map(|t| idx(&format!("L{t}"))).collect();
    let has_l = l_nodes.iter().all(Option::is_some);
    if !has_l && l_nodes.iter().any(Option::is_some) {
        return Err(SynthError::Config("confounder nodes L0..LT must be all present or all absent".into()));
    }
    let baseline: Vec<usize> =
        dgp.baseline_nodes().iter().copied().filter(|&i| i != a0 && i != m0 && Some(i) != l_nodes[0]).collect();
    let names = &dgp.spec().nodes;
    let baseline_names = baseline
        .iter()
        .map(|&i| {
            let n = &names[i].name;
            if n.starts_with("C_") {
                n.clone()
            } else {
                format!("C_{n}")
            }
        })
        .collect();
    let y_idx = names.len() - 1;
    let free = vec![None; names.len()];
    let persons = (0..n_persons as u64)
        .into_par_iter()
        .map(|id| {
            let mut rng = stream_rng(seed, id);
            let mut asg = vec![0; names.len()];
            dgp.sample_into(&mut rng, &free, &mut asg);
            let mut treatment = vec![asg[a0] == 1];
            let mut mediator = vec![dgp.mediator_value(asg[m0])];
            for t in 0..t_max {
                treatment.push(asg[dgp.treatment_nodes()[t]] == 1);
                mediator.push(dgp.mediator_value(asg[dgp.mediator_nodes()[t]]));
            }
            let confounders = if has_l {
                l_nodes.iter().map(|l| vec![asg[l.expect("checked")] as f64]).collect()
            } else {
                vec![Vec::new(); t_max + 1]
            };
            PersonRecord {
                person_id: id,
                baseline: baseline.iter().map(|&i| asg[i] as f64).collect(),
                treatment,
                mediator,
                confounders,
                outcome: asg[y_idx] == 1,
                extra: Vec::new(),
            }
        })
        .collect();
    let confounder_names = if has_l { vec!["L_discrete".to_string()] } else { Vec::new() };
    Ok(PanelDataset::new(t_max + 1, baseline_names, confounder_names, persons)?)
}

/// Monte Carlo ground truth for a discrete DGP, always versus never treated.
pub fn discrete_ground_truth(dgp: &DiscreteDgp, mc_replicates: usize, seed: u64) -> Result<GroundTruth, SynthError> {
    let t = dgp.n_waves();
    let do_a = dgp.intervention(&vec![1; t])?;
    let do_star = dgp.intervention(&vec![0; t])?;
    let nodes = dgp.spec().nodes.len();
    let y_idx = nodes - 1;
    let first_wave =
        dgp.roles().iter().position(|r| !matches!(r, Role::Baseline)).expect("validated dgp has wave nodes");
    if dgp.roles()[..first_wave].len() != dgp.baseline_nodes().len() {
        return Err(SynthError::Config("baseline nodes must precede all wave nodes".into()));
    }
    let samples = chunked(mc_replicates, seed, |rng| {
        let mut base = vec![0; nodes];
        dgp.sample_range(rng, &do_a, &mut base, 0, first_wave);
        let mediator_path = |rng: &mut ChaCha8Rng, fixed: &[Option<usize>]| {
            let mut asg = base.clone();
            dgp.sample_range(rng, fixed, &mut asg, first_wave, y_idx);
            dgp.mediator_nodes().iter().map(|&i| asg[i]).collect::<Vec<_>>()
        };
        let (s_med, s_out): (u64, u64) = (rng.random(), rng.random());
        let g_star = mediator_path(&mut stream_rng(s_med, 0), &do_star);
        let g_a = mediator_path(&mut stream_rng(s_med, 0), &do_a);
        let mut out = [0.0; 3];
        for (k, (fixed, path)) in [(&do_a, &g_star), (&do_star, &g_star), (&do_a, &g_a)].into_iter().enumerate() {
            let mut fixed = fixed.clone();
            for (&i, &v) in dgp.mediator_nodes().iter().zip(path) {
                fixed[i] = Some(v);
            }
            let mut asg = base.clone();
            dgp.sample_range(&mut stream_rng(s_out, 0), &fixed, &mut asg, first_wave, y_idx);
            out[k] = dgp.outcome_probability(&asg);
        }
        Ok(out)
    })?;
    Ok(contrasts(&samples))
}
