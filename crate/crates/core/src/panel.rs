//! Person-wave panel: treatment, mediator and time-varying confounders per
//! wave, baseline covariates and an end-of-study binary outcome.
//!
//! Wave 1 (index 0) is the baseline wave. Waves 2..=n_waves are the
//! intervened waves entering `cum(a)`, `cum(m)` and `avg(a)`.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PanelError {
    #[error("panel needs at least 2 waves, got {0}")]
    TooFewWaves(usize),
    #[error("panel has no persons")]
    Empty,
    #[error("person {person_id}: {what} has {got} entries, expected {expected}")]
    Shape { person_id: u64, what: &'static str, expected: usize, got: usize },
    #[error("person {person_id}, wave {wave}: non-finite {what}")]
    NonFinite { person_id: u64, wave: usize, what: &'static str },
    #[error("person {person_id}: non-finite {what}")]
    NonFinitePerson { person_id: u64, what: String },
    #[error("duplicate person id {0}")]
    DuplicateId(u64),
    #[error("unknown column '{0}'")]
    UnknownColumn(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PersonRecord {
    pub person_id: u64,
    /// Values for [`PanelDataset::baseline_names`].
    pub baseline: Vec<f64>,
    pub treatment: Vec<bool>,
    pub mediator: Vec<f64>,
    /// `confounders[wave][j]` for [`PanelDataset::confounder_names`].
    pub confounders: Vec<Vec<f64>>,
    pub outcome: bool,
    /// Person-level columns added after generation (e.g. simulated
    /// unmeasured confounders), named by [`PanelDataset::extra_names`].
    pub extra: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanelDataset {
    pub n_waves: usize,
    pub baseline_names: Vec<String>,
    pub confounder_names: Vec<String>,
    pub extra_names: Vec<String>,
    pub persons: Vec<PersonRecord>,
}

impl PersonRecord {
    pub fn a(&self, wave: usize) -> f64 {
        f64::from(u8::from(self.treatment[wave]))
    }

    /// Treatment count over intervened waves up to and including `last`
    /// (0-based wave index).
    pub fn cum_a_through(&self, last: usize) -> f64 {
        (1..=last).map(|t| self.a(t)).sum()
    }

    pub fn cum_m_through(&self, last: usize) -> f64 {
        (1..=last).map(|t| self.mediator[t]).sum()
    }

    /// Share of intervened waves 1..=`wave` (0-based) under treatment.
    pub fn avg_a(&self, wave: usize) -> f64 {
        debug_assert!(wave >= 1);
        self.cum_a_through(wave) / wave as f64
    }
}

impl PanelDataset {
    pub fn new(
        n_waves: usize,
        baseline_names: Vec<String>,
        confounder_names: Vec<String>,
        persons: Vec<PersonRecord>,
    ) -> Result<Self, PanelError> {
        let panel = Self { n_waves, baseline_names, confounder_names, extra_names: Vec::new(), persons };
        panel.validate()?;
        Ok(panel)
    }

    pub fn n_persons(&self) -> usize {
        self.persons.len()
    }

    /// Number of intervened waves, the default effect horizon.
    pub fn horizon(&self) -> usize {
        self.n_waves - 1
    }

    pub fn validate(&self) -> Result<(), PanelError> {
        if self.n_waves < 2 {
            return Err(PanelError::TooFewWaves(self.n_waves));
        }
        if self.persons.is_empty() {
            return Err(PanelError::Empty);
        }
        let mut ids = std::collections::HashSet::with_capacity(self.persons.len());
        for p in &self.persons {
            let id = p.person_id;
            if !ids.insert(id) {
                return Err(PanelError::DuplicateId(id));
            }
            let shape = |what, expected, got| {
                if expected == got {
                    Ok(())
                } else {
                    Err(PanelError::Shape { person_id: id, what, expected, got })
                }
            };
            shape("baseline", self.baseline_names.len(), p.baseline.len())?;
            shape("treatment", self.n_waves, p.treatment.len())?;
            shape("mediator", self.n_waves, p.mediator.len())?;
            shape("confounders", self.n_waves, p.confounders.len())?;
            shape("extra", self.extra_names.len(), p.extra.len())?;
            for (wave, (m, l)) in p.mediator.iter().zip(&p.confounders).enumerate() {
                shape("confounder wave", self.confounder_names.len(), l.len())?;
                if !m.is_finite() {
                    return Err(PanelError::NonFinite { person_id: id, wave: wave + 1, what: "mediator" });
                }
                if l.iter().any(|v| !v.is_finite()) {
                    return Err(PanelError::NonFinite { person_id: id, wave: wave + 1, what: "confounder" });
                }
            }
            for (name, v) in self.baseline_names.iter().chain(&self.extra_names).zip(p.baseline.iter().chain(&p.extra))
            {
                if !v.is_finite() {
                    return Err(PanelError::NonFinitePerson { person_id: id, what: name.clone() });
                }
            }
        }
        Ok(())
    }

    /// Append a person-level column; `values` follows person order.
    pub fn with_extra_column(mut self, name: &str, values: &[f64]) -> Result<Self, PanelError> {
        if values.len() != self.persons.len() {
            return Err(PanelError::Shape {
                person_id: 0,
                what: "extra column",
                expected: self.persons.len(),
                got: values.len(),
            });
        }
        if let Some(j) = self.extra_names.iter().position(|n| n == name) {
            for (p, &v) in self.persons.iter_mut().zip(values) {
                p.extra[j] = v;
            }
        } else {
            self.extra_names.push(name.to_string());
            for (p, &v) in self.persons.iter_mut().zip(values) {
                p.extra.push(v);
            }
        }
        Ok(self)
    }

    pub fn extra_index(&self, name: &str) -> Result<usize, PanelError> {
        self.extra_names.iter().position(|n| n == name).ok_or_else(|| PanelError::UnknownColumn(name.to_string()))
    }

    /// Panel built from the persons at `indices` (repeats allowed). Person ids
    /// are replaced by their position so resampled copies stay distinct.
    pub fn resample(&self, indices: &[usize]) -> Self {
        let persons = indices
            .iter()
            .enumerate()
            .map(|(k, &i)| PersonRecord { person_id: k as u64, ..self.persons[i].clone() })
            .collect();
        Self { persons, ..self.clone_header() }
    }

    fn clone_header(&self) -> Self {
        Self {
            n_waves: self.n_waves,
            baseline_names: self.baseline_names.clone(),
            confounder_names: self.confounder_names.clone(),
            extra_names: self.extra_names.clone(),
            persons: Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn person(id: u64, a: [bool; 4]) -> PersonRecord {
        PersonRecord {
            person_id: id,
            baseline: vec![1.0],
            treatment: a.to_vec(),
            mediator: vec![0.1, 0.2, 0.3, 0.4],
            confounders: vec![vec![0.0]; 4],
            outcome: false,
            extra: vec![],
        }
    }

    #[test]
    fn history_summaries_skip_baseline_wave() {
        let p = person(1, [true, false, true, true]);
        assert_eq!(p.cum_a_through(3), 2.0);
        assert!((p.cum_m_through(3) - 0.9).abs() < 1e-15);
        assert_eq!(p.avg_a(1), 0.0);
        assert_eq!(p.avg_a(2), 0.5);
        assert!((p.avg_a(3) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn validation_catches_missing_wave_and_duplicates() {
        let mut bad = person(2, [true; 4]);
        bad.mediator.pop();
        let err = PanelDataset::new(4, vec!["C".into()], vec!["L".into()], vec![person(1, [false; 4]), bad]);
        assert!(matches!(err, Err(PanelError::Shape { person_id: 2, what: "mediator", .. })));
        let dup = PanelDataset::new(4, vec!["C".into()], vec!["L".into()], vec![person(1, [false; 4]); 2]);
        assert_eq!(dup.unwrap_err(), PanelError::DuplicateId(1));
    }

    #[test]
    fn resample_renumbers() {
        let panel =
            PanelDataset::new(4, vec!["C".into()], vec!["L".into()], vec![person(7, [false; 4]), person(9, [true; 4])])
                .unwrap();
        let r = panel.resample(&[1, 1, 0]);
        assert_eq!(r.persons.iter().map(|p| p.person_id).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert!(r.persons[0].treatment[0]);
        r.validate().unwrap();
    }

    #[test]
    fn extra_columns_replace_by_name() {
        let panel = PanelDataset::new(4, vec!["C".into()], vec!["L".into()], vec![person(1, [false; 4])]).unwrap();
        let panel = panel.with_extra_column("U", &[0.5]).unwrap().with_extra_column("U", &[1.5]).unwrap();
        assert_eq!(panel.extra_names, vec!["U"]);
        assert_eq!(panel.persons[0].extra, vec![1.5]);
    }
}
