use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::io::{self, Finding, PanelFiles};
use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub files: Vec<String>,
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct ValidationInputs {
    pub panel: PathBuf,
    pub baseline: PathBuf,
    pub outcome: PathBuf,
    /// Optional; checked when present.
    pub residences: Option<PathBuf>,
    pub neighborhoods: Option<PathBuf>,
}

/// Check schemas, completeness, value domains and person ids across files.
/// Problems are reported, not raised; only unreadable files are errors.
pub fn validate_panel(inputs: &ValidationInputs) -> Result<ValidationReport, CliError> {
    let mut report = ValidationReport::default();
    let files = PanelFiles { panel: &inputs.panel, baseline: &inputs.baseline, outcome: &inputs.outcome };
    report.files.extend([&inputs.panel, &inputs.baseline, &inputs.outcome].iter().map(|p| p.display().to_string()));
    let panel = io::load_panel(&files, &mut report.findings)?;
    let panel_ids: Option<BTreeSet<u64>> = panel.as_ref().map(|p| p.persons.iter().map(|r| r.person_id).collect());
    let n_waves = panel.as_ref().map(|p| p.n_waves as u64);

    if let Some(path) = &inputs.residences {
        report.files.push(path.display().to_string());
        if let Some(res) = io::load_residences(path, &mut report.findings)? {
            let ids: BTreeSet<u64> = res.iter().flatten().map(|r| r.person_id).collect();
            cross(&mut report.findings, path, &panel_ids, &ids, n_waves, res.len() as u64);
        }
    }
    if let Some(path) = &inputs.neighborhoods {
        report.files.push(path.display().to_string());
        if let Some(rows) = io::load_neighborhoods(path, &mut report.findings)? {
            let ids: BTreeSet<u64> = rows.iter().map(|r| r.person_id).collect();
            let waves = rows.iter().map(|r| r.wave).max().unwrap_or(0);
            cross(&mut report.findings, path, &panel_ids, &ids, n_waves, waves);
        }
    }
    Ok(report)
}

fn cross(
    findings: &mut Vec<Finding>,
    path: &Path,
    panel_ids: &Option<BTreeSet<u64>>,
    ids: &BTreeSet<u64>,
    panel_waves: Option<u64>,
    waves: u64,
) {
    let file = path.display().to_string();
    if let Some(panel_ids) = panel_ids {
        if let Some(id) = ids.difference(panel_ids).next() {
            let extra = ids.difference(panel_ids).count();
            findings.push(Finding {
                file: file.clone(),
                line: None,
                column: Some("person_id".into()),
                message: format!("{extra} person(s) absent from the panel, first {id}"),
            });
        }
    }
    if let Some(n) = panel_waves {
        if waves != n {
            findings.push(Finding {
                file,
                line: None,
                column: Some("wave".into()),
                message: format!("covers {waves} waves, panel has {n}"),
            });
        }
    }
}
