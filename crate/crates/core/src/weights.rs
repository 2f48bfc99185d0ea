//! Stabilized inverse-probability weights.
//!
//! Three families are computed per person and intervened wave `t`:
//!
//! * `sw_yt = P(A_t | num) / P(A_t | den)`, treatment weights for the outcome model,
//! * `sw_ym = f(M_t | num) / f(M_t | den)`, mediator weights for the outcome model,
//! * `sw_mt = P(A_t | num) / P(A_t | den)`, treatment weights for the mediator model.
//!
//! Products over waves give the analysis weights `W_y = Π sw_yt sw_ym` and
//! `W_m = Π sw_mt`, which are then winsorized at percentiles.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::glm::{self, DesignMatrix, GlmError, GlmFit};
use crate::panel::PanelDataset;

/// Fitted probabilities below this trigger a positivity warning.
pub const POSITIVITY_THRESHOLD: f64 = 1e-6;
/// Residual SDs below this make a mediator density degenerate.
pub const MIN_RESIDUAL_SD: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeightError {
    #[error("{family} {part} model: {source}")]
    Fit { family: &'static str, part: &'static str, source: GlmError },
    #[error("{family} {part} model: residual SD {sd:e} is degenerate")]
    DegenerateDensity { family: &'static str, part: &'static str, sd: f64 },
    #[error("weight specification: {0}")]
    Spec(String),
}

/// A covariate block in a weight model. Lagged terms refer to wave `t - 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    PrevTreatment,
    PrevMediator,
    /// Current treatment `A_t` (mediator models only).
    Treatment,
    /// Wave-1 treatment `A_1`.
    BaselineTreatment,
    /// Wave-1 mediator `M_1`.
    BaselineMediator,
    /// All `C_*` baseline covariates.
    Baseline,
    /// All `L_*` confounders at `t - 1`.
    PrevConfounders,
    /// A person-level extra column of the panel.
    Column(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub numerator: Vec<Term>,
    pub denominator: Vec<Term>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MediatorFamily {
    /// Normal linear model; the density ratio uses each model's residual SD.
    #[default]
    Gaussian,
    /// Logistic model for a 0/1 mediator.
    Bernoulli,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightModelSpec {
    pub treatment_outcome: ModelSpec,
    pub mediator_outcome: ModelSpec,
    pub treatment_mediator: ModelSpec,
    /// Percentiles in [0, 100].
    pub lower_percentile: f64,
    pub upper_percentile: f64,
    /// One model over all waves with wave fixed effects; otherwise one model per wave.
    pub pooled: bool,
    pub mediator_family: MediatorFamily,
}

impl Default for WeightModelSpec {
    fn default() -> Self {
        use Term::*;
        let full = |extra: &[Term]| {
            let mut v = extra.to_vec();
            v.extend([BaselineTreatment, BaselineMediator, Baseline, PrevConfounders]);
            v
        };
        Self {
            treatment_outcome: ModelSpec {
                numerator: vec![PrevTreatment, PrevMediator, BaselineTreatment, BaselineMediator],
                denominator: full(&[PrevTreatment, PrevMediator]),
            },
            mediator_outcome: ModelSpec {
                numerator: vec![PrevMediator, Treatment, BaselineTreatment, BaselineMediator],
                denominator: full(&[PrevMediator, Treatment]),
            },
            treatment_mediator: ModelSpec {
                numerator: vec![PrevTreatment, BaselineTreatment],
                denominator: full(&[PrevTreatment, PrevMediator]),
            },
            lower_percentile: 1.0,
            upper_percentile: 99.0,
            pooled: true,
            mediator_family: MediatorFamily::Gaussian,
        }
    }
}

impl WeightModelSpec {
    /// Numerators equal to denominators in every family.
    pub fn identical_models(&self) -> Self {
        let mut s = self.clone();
        for m in [&mut s.treatment_outcome, &mut s.mediator_outcome, &mut s.treatment_mediator] {
            m.numerator = m.denominator.clone();
        }
        s
    }

    /// Add a term to the denominator of one family.
    pub fn with_denominator_term(mut self, family: Family, term: Term) -> Self {
        let m = match family {
            Family::TreatmentOutcome => &mut self.treatment_outcome,
            Family::MediatorOutcome => &mut self.mediator_outcome,
            Family::TreatmentMediator => &mut self.treatment_mediator,
        };
        if !m.denominator.contains(&term) {
            m.denominator.push(term);
        }
        self
    }

    pub fn validate(&self) -> Result<(), WeightError> {
        let bad = |m: String| Err(WeightError::Spec(m));
        if !(0.0 <= self.lower_percentile
            && self.lower_percentile < self.upper_percentile
            && self.upper_percentile <= 100.0)
        {
            return bad(format!(
                "percentiles must satisfy 0 <= lower < upper <= 100, got {} and {}",
                self.lower_percentile, self.upper_percentile
            ));
        }
        for (fam, m) in self.families() {
            let den: HashSet<&Term> = m.denominator.iter().collect();
            if let Some(t) = m.numerator.iter().find(|t| !den.contains(t)) {
                return bad(format!("{}: numerator term {t:?} missing from the denominator", fam.name()));
            }
            if fam != Family::MediatorOutcome && den.contains(&Term::Treatment) {
                return bad(format!("{}: the current treatment is the response", fam.name()));
            }
        }
        Ok(())
    }

    fn families(&self) -> [(Family, &ModelSpec); 3] {
        [
            (Family::TreatmentOutcome, &self.treatment_outcome),
            (Family::MediatorOutcome, &self.mediator_outcome),
            (Family::TreatmentMediator, &self.treatment_mediator),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    TreatmentOutcome,
    MediatorOutcome,
    TreatmentMediator,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::TreatmentOutcome => "sw_yt",
            Family::MediatorOutcome => "sw_ym",
            Family::TreatmentMediator => "sw_mt",
        }
    }
}

/// Per-(person, intervened wave) weights of one family, person-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentWeights {
    pub family: Family,
    pub values: Vec<f64>,
    /// `(person_id, wave)` pairs, 1-based waves, whose fitted denominator
    /// probability fell below [`POSITIVITY_THRESHOLD`].
    pub positivity: Vec<(u64, usize)>,
    /// Either model hit quasi-separation.
    pub separation: bool,
}

struct Built {
    design: DesignMatrix<f64>,
    response: Vec<f64>,
}

fn term_names(panel: &PanelDataset, terms: &[Term], use_a1: bool, use_m1: bool) -> Result<Vec<String>, WeightError> {
    let mut names = Vec::new();
    for t in terms {
        match t {
            Term::PrevTreatment => names.push("A_prev".to_string()),
            Term::PrevMediator => names.push("M_prev".to_string()),
            Term::Treatment => names.push("A_t".to_string()),
            Term::BaselineTreatment if use_a1 => names.push("A_1".to_string()),
            Term::BaselineMediator if use_m1 => names.push("M_1".to_string()),
            Term::BaselineTreatment | Term::BaselineMediator => {}
            Term::Baseline => names.extend(panel.baseline_names.iter().cloned()),
            Term::PrevConfounders => names.extend(panel.confounder_names.iter().map(|n| format!("{n}_prev"))),
            Term::Column(c) => {
                panel.extra_index(c).map_err(|e| WeightError::Spec(e.to_string()))?;
                names.push(c.clone());
            }
        }
    }
    Ok(names)
}

/// Rows are `(person index, 0-based wave)`; waves are all >= 1.
fn build(
    panel: &PanelDataset,
    terms: &[Term],
    rows: &[(usize, usize)],
    fixed_effect_waves: &[usize],
    response: impl Fn(usize, usize) -> f64,
) -> Result<Built, WeightError> {
    let only_first = rows.iter().all(|&(_, t)| t == 1);
    // At the first intervened wave the lag equals the baseline value.
    let use_a1 = !(only_first && terms.contains(&Term::PrevTreatment));
    let use_m1 = !(only_first && terms.contains(&Term::PrevMediator));
    let mut names = vec!["(intercept)".to_string()];
    names.extend(fixed_effect_waves.iter().map(|w| format!("wave_{}", w + 1)));
    names.extend(term_names(panel, terms, use_a1, use_m1)?);
    let extra_idx: Vec<usize> = terms
        .iter()
        .filter_map(|t| match t {
            Term::Column(c) => Some(panel.extra_index(c).expect("checked in term_names")),
            _ => None,
        })
        .collect();
    let p = names.len();
    let mut data = Vec::with_capacity(rows.len() * p);
    let mut y = Vec::with_capacity(rows.len());
    for &(i, t) in rows {
        let person = &panel.persons[i];
        data.push(1.0);
        data.extend(fixed_effect_waves.iter().map(|&w| if w == t { 1.0 } else { 0.0 }));
        let mut extra = extra_idx.iter();
        for term in terms {
            match term {
                Term::PrevTreatment => data.push(person.a(t - 1)),
                Term::PrevMediator => data.push(person.mediator[t - 1]),
                Term::Treatment => data.push(person.a(t)),
                Term::BaselineTreatment if use_a1 => data.push(person.a(0)),
                Term::BaselineMediator if use_m1 => data.push(person.mediator[0]),
                Term::BaselineTreatment | Term::BaselineMediator => {}
                Term::Baseline => data.extend_from_slice(&person.baseline),
                Term::PrevConfounders => data.extend_from_slice(&person.confounders[t - 1]),
                Term::Column(_) => data.push(person.extra[*extra.next().expect("one index per column")]),
            }
        }
        y.push(response(i, t));
    }
    let x = crate::linalg::Matrix::from_row_major(rows.len(), p, data).expect("row width matches names");
    let design = DesignMatrix::new(x, names).map_err(|e| WeightError::Spec(e.to_string()))?;
    Ok(Built { design, response: y })
}

fn same_terms(a: &[Term], b: &[Term]) -> bool {
    a.iter().collect::<HashSet<_>>() == b.iter().collect::<HashSet<_>>()
}

/// `(person, wave)` rows fitted together and the wave dummies they use.
type RowGroup = (Vec<(usize, usize)>, Vec<usize>);

fn groups(panel: &PanelDataset, pooled: bool) -> Vec<RowGroup> {
    let n = panel.n_persons();
    if pooled {
        vec![((0..n).flat_map(|i| (1..panel.n_waves).map(move |t| (i, t))).collect(), (2..panel.n_waves).collect())]
    } else {
        (1..panel.n_waves).map(|t| ((0..n).map(|i| (i, t)).collect(), Vec::new())).collect()
    }
}

fn slot(panel: &PanelDataset, i: usize, t: usize) -> usize {
    i * (panel.n_waves - 1) + (t - 1)
}

fn fit_binary(family: Family, part: &'static str, b: &Built) -> Result<GlmFit<f64>, WeightError> {
    glm::fit_logistic(&b.design, &b.response).map_err(|source| WeightError::Fit { family: family.name(), part, source })
}

fn treatment_family(
    panel: &PanelDataset,
    model: &ModelSpec,
    pooled: bool,
    family: Family,
) -> Result<ComponentWeights, WeightError> {
    let total = panel.n_persons() * (panel.n_waves - 1);
    if same_terms(&model.numerator, &model.denominator) {
        return Ok(ComponentWeights { family, values: vec![1.0; total], positivity: Vec::new(), separation: false });
    }
    let mut values = vec![0.0; total];
    let mut positivity = Vec::new();
    let mut separation = false;
    for (rows, fe) in groups(panel, pooled) {
        let response = |i: usize, t: usize| panel.persons[i].a(t);
        let num = build(panel, &model.numerator, &rows, &fe, response)?;
        let den = build(panel, &model.denominator, &rows, &fe, response)?;
        let fit_n = fit_binary(family, "numerator", &num)?;
        let fit_d = fit_binary(family, "denominator", &den)?;
        separation |= fit_n.separation || fit_d.separation;
        let pn = fit_n.predict_mean(&num.design);
        let pd = fit_d.predict_mean(&den.design);
        for (k, &(i, t)) in rows.iter().enumerate() {
            let observed = |p: f64| if num.response[k] == 1.0 { p } else { 1.0 - p };
            let d = observed(pd[k]);
            if d < POSITIVITY_THRESHOLD {
                positivity.push((panel.persons[i].person_id, t + 1));
            }
            values[slot(panel, i, t)] = observed(pn[k]) / d;
        }
    }
    if !positivity.is_empty() {
        log::warn!("{}: {} denominator probabilities below {POSITIVITY_THRESHOLD:e}", family.name(), positivity.len());
    }
    Ok(ComponentWeights { family, values, positivity, separation })
}

/// `sw_yt`, treatment weights for the outcome model.
pub fn treatment_weights_outcome(
    panel: &PanelDataset,
    spec: &WeightModelSpec,
) -> Result<ComponentWeights, WeightError> {
    spec.validate()?;
    treatment_family(panel, &spec.treatment_outcome, spec.pooled, Family::TreatmentOutcome)
}

/// `sw_mt`, treatment weights for the mediator model.
pub fn treatment_weights_mediator(
    panel: &PanelDataset,
    spec: &WeightModelSpec,
) -> Result<ComponentWeights, WeightError> {
    spec.validate()?;
    treatment_family(panel, &spec.treatment_mediator, spec.pooled, Family::TreatmentMediator)
}

/// `sw_ym`, mediator density-ratio weights for the outcome model.
pub fn mediator_weights_outcome(panel: &PanelDataset, spec: &WeightModelSpec) -> Result<ComponentWeights, WeightError> {
    spec.validate()?;
    let family = Family::MediatorOutcome;
    let model = &spec.mediator_outcome;
    let total = panel.n_persons() * (panel.n_waves - 1);
    if same_terms(&model.numerator, &model.denominator) {
        return Ok(ComponentWeights { family, values: vec![1.0; total], positivity: Vec::new(), separation: false });
    }
    let mut values = vec![0.0; total];
    let mut positivity = Vec::new();
    let mut separation = false;
    for (rows, fe) in groups(panel, spec.pooled) {
        let response = |i: usize, t: usize| panel.persons[i].mediator[t];
        let num = build(panel, &model.numerator, &rows, &fe, response)?;
        let den = build(panel, &model.denominator, &rows, &fe, response)?;
        match spec.mediator_family {
            MediatorFamily::Gaussian => {
                let fit = |part: &'static str, b: &Built| -> Result<(Vec<f64>, f64), WeightError> {
                    let f = glm::fit_linear(&b.design, &b.response).map_err(|source| WeightError::Fit {
                        family: family.name(),
                        part,
                        source,
                    })?;
                    let sd = f.residual_sd.unwrap_or(0.0);
                    if !(sd >= MIN_RESIDUAL_SD) {
                        return Err(WeightError::DegenerateDensity { family: family.name(), part, sd });
                    }
                    Ok((f.predict_mean(&b.design), sd))
                };
                let (mn, sdn) = fit("numerator", &num)?;
                let (md, sdd) = fit("denominator", &den)?;
                for (k, &(i, t)) in rows.iter().enumerate() {
                    let m = num.response[k];
                    // Ratio of normal densities, computed on the log scale.
                    let zn = (m - mn[k]) / sdn;
                    let zd = (m - md[k]) / sdd;
                    values[slot(panel, i, t)] = (sdd / sdn) * (0.5 * (zd * zd - zn * zn)).exp();
                }
            }
            MediatorFamily::Bernoulli => {
                if let Some(k) = num.response.iter().position(|&m| m != 0.0 && m != 1.0) {
                    let (i, t) = rows[k];
                    return Err(WeightError::Spec(format!(
                        "bernoulli mediator family needs 0/1 mediators; person {} wave {} has {}",
                        panel.persons[i].person_id,
                        t + 1,
                        num.response[k]
                    )));
                }
                let fit_n = fit_binary(family, "numerator", &num)?;
                let fit_d = fit_binary(family, "denominator", &den)?;
                separation |= fit_n.separation || fit_d.separation;
                let pn = fit_n.predict_mean(&num.design);
                let pd = fit_d.predict_mean(&den.design);
                for (k, &(i, t)) in rows.iter().enumerate() {
                    let observed = |p: f64| if num.response[k] == 1.0 { p } else { 1.0 - p };
                    let d = observed(pd[k]);
                    if d < POSITIVITY_THRESHOLD {
                        positivity.push((panel.persons[i].person_id, t + 1));
                    }
                    values[slot(panel, i, t)] = observed(pn[k]) / d;
                }
            }
        }
    }
    Ok(ComponentWeights { family, values, positivity, separation })
}

/// Mean, SD (n - 1 denominator), min and max.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self { mean, sd, min, max }
    }
}

/// Percentile with linear interpolation between order statistics
/// (`p` in [0, 100]).
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p / 100.0;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Clamp values to their `lower`/`upper` percentiles. Returns the clamped
/// values and the two bounds.
pub fn winsorize(values: &[f64], lower: f64, upper: f64) -> (Vec<f64>, f64, f64) {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let lo = percentile(&sorted, lower);
    let hi = percentile(&sorted, upper);
    (values.iter().map(|v| v.clamp(lo, hi)).collect(), lo, hi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductDiagnostics {
    pub untruncated: Summary,
    pub truncated: Summary,
    pub lower_bound: f64,
    pub upper_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightDiagnostics {
    pub sw_yt: Summary,
    pub sw_ym: Summary,
    pub sw_mt: Summary,
    pub w_y: ProductDiagnostics,
    pub w_m: ProductDiagnostics,
    pub lower_percentile: f64,
    pub upper_percentile: f64,
    pub positivity_warnings: usize,
    pub separation: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    pub n_waves: usize,
    pub person_ids: Vec<u64>,
    /// Person-major, `n_waves - 1` entries per person (waves 2..=n_waves).
    pub sw_yt: Vec<f64>,
    pub sw_ym: Vec<f64>,
    pub sw_mt: Vec<f64>,
    pub w_y_untruncated: Vec<f64>,
    pub w_m_untruncated: Vec<f64>,
    pub w_y: Vec<f64>,
    pub w_m: Vec<f64>,
    pub positivity: Vec<(u64, usize)>,
    pub diagnostics: WeightDiagnostics,
}

impl WeightSet {
    /// Component weights of person index `i` at 1-based wave `wave >= 2`.
    pub fn components(&self, i: usize, wave: usize) -> (f64, f64, f64) {
        let k = i * (self.n_waves - 1) + (wave - 2);
        (self.sw_yt[k], self.sw_ym[k], self.sw_mt[k])
    }
}

/// Per-person products across waves, then winsorization.
pub fn cumulate_and_truncate(
    panel: &PanelDataset,
    yt: ComponentWeights,
    ym: ComponentWeights,
    mt: ComponentWeights,
    spec: &WeightModelSpec,
) -> Result<WeightSet, WeightError> {
    spec.validate()?;
    let per = panel.n_waves - 1;
    let expected = panel.n_persons() * per;
    for c in [&yt, &ym, &mt] {
        if c.values.len() != expected {
            return Err(WeightError::Spec(format!(
                "{} has {} values, expected {expected}",
                c.family.name(),
                c.values.len()
            )));
        }
    }
    let product = |f: &dyn Fn(usize) -> f64| -> Vec<f64> {
        (0..panel.n_persons()).map(|i| (0..per).map(|k| f(i * per + k)).product()).collect()
    };
    let w_y_raw = product(&|k| yt.values[k] * ym.values[k]);
    let w_m_raw = product(&|k| mt.values[k]);
    let (lo, hi) = (spec.lower_percentile, spec.upper_percentile);
    let (w_y, ylo, yhi) = winsorize(&w_y_raw, lo, hi);
    let (w_m, mlo, mhi) = winsorize(&w_m_raw, lo, hi);
    let mut positivity = yt.positivity.clone();
    positivity.extend(ym.positivity.iter().copied());
    positivity.extend(mt.positivity.iter().copied());
    let diagnostics = WeightDiagnostics {
        sw_yt: Summary::of(&yt.values),
        sw_ym: Summary::of(&ym.values),
        sw_mt: Summary::of(&mt.values),
        w_y: ProductDiagnostics {
            untruncated: Summary::of(&w_y_raw),
            truncated: Summary::of(&w_y),
            lower_bound: ylo,
            upper_bound: yhi,
        },
        w_m: ProductDiagnostics {
            untruncated: Summary::of(&w_m_raw),
            truncated: Summary::of(&w_m),
            lower_bound: mlo,
            upper_bound: mhi,
        },
        lower_percentile: lo,
        upper_percentile: hi,
        positivity_warnings: positivity.len(),
        separation: yt.separation || ym.separation || mt.separation,
    };
    Ok(WeightSet {
        n_waves: panel.n_waves,
        person_ids: panel.persons.iter().map(|p| p.person_id).collect(),
        sw_yt: yt.values,
        sw_ym: ym.values,
        sw_mt: mt.values,
        w_y_untruncated: w_y_raw,
        w_m_untruncated: w_m_raw,
        w_y,
        w_m,
        positivity,
        diagnostics,
    })
}

/// All three families, products and truncation.
pub fn compute_weights(panel: &PanelDataset, spec: &WeightModelSpec) -> Result<WeightSet, WeightError> {
    let yt = treatment_weights_outcome(panel, spec)?;
    let ym = mediator_weights_outcome(panel, spec)?;
    let mt = treatment_weights_mediator(panel, spec)?;
    cumulate_and_truncate(panel, yt, ym, mt, spec)
}

/// Recompute only the families whose model differs between `base_spec` and
/// `spec`, reusing the others from `base`.
pub fn recompute_changed(
    panel: &PanelDataset,
    base: &WeightSet,
    base_spec: &WeightModelSpec,
    spec: &WeightModelSpec,
) -> Result<WeightSet, WeightError> {
    let reuse = |f: Family, values: &[f64]| ComponentWeights {
        family: f,
        values: values.to_vec(),
        positivity: Vec::new(),
        separation: false,
    };
    let same = |a: &ModelSpec, b: &ModelSpec| a == b && base_spec.pooled == spec.pooled;
    let yt = if same(&base_spec.treatment_outcome, &spec.treatment_outcome) {
        reuse(Family::TreatmentOutcome, &base.sw_yt)
    } else {
        treatment_weights_outcome(panel, spec)?
    };
    let ym = if same(&base_spec.mediator_outcome, &spec.mediator_outcome)
        && base_spec.mediator_family == spec.mediator_family
    {
        reuse(Family::MediatorOutcome, &base.sw_ym)
    } else {
        mediator_weights_outcome(panel, spec)?
    };
    let mt = if same(&base_spec.treatment_mediator, &spec.treatment_mediator) {
        reuse(Family::TreatmentMediator, &base.sw_mt)
    } else {
        treatment_weights_mediator(panel, spec)?
    };
    cumulate_and_truncate(panel, yt, ym, mt, spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_interpolates() {
        let v: Vec<f64> = (1..=5).map(f64::from).collect();
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 100.0), 5.0);
        assert_eq!(percentile(&v, 50.0), 3.0);
        assert!((percentile(&v, 10.0) - 1.4).abs() < 1e-15);
    }

    #[test]
    fn winsorize_clamps_extremes() {
        let mut v = vec![0.5; 98];
        v.push(0.01);
        v.push(100.0);
        let (w, lo, hi) = winsorize(&v, 1.0, 99.0);
        // Sorted: 0.01, 0.5 x98, 100. h = 0.99 and 98.01.
        assert!((lo - (0.01 + 0.99 * 0.49)).abs() < 1e-12);
        assert!((hi - (0.5 + 0.01 * 99.5)).abs() < 1e-12);
        assert_eq!(w[98], lo);
        assert_eq!(w[99], hi);
        assert!(w[..98].iter().all(|&x| x == 0.5));
    }

    #[test]
    fn spec_validation() {
        let mut s = WeightModelSpec::default();
        s.validate().unwrap();
        s.treatment_outcome.numerator.push(Term::Baseline);
        s.treatment_outcome.denominator.retain(|t| *t != Term::Baseline);
        assert!(s.validate().is_err());
        let s = WeightModelSpec { lower_percentile: 99.0, upper_percentile: 1.0, ..WeightModelSpec::default() };
        assert!(s.validate().is_err());
    }

    #[test]
    fn summary_of_constant() {
        let s = Summary::of(&[1.0; 10]);
        assert_eq!((s.mean, s.sd, s.min, s.max), (1.0, 0.0, 1.0, 1.0));
    }
}
