use std::collections::BTreeMap;

use medflow::effects::{
    bootstrap_effects, effects_from_logs, estimate, fit_msms_with, interventional_effects, Interval,
    InterventionalEffects, MsmConfig, MsmEstimates,
};
use medflow::geo::{disadvantage_scores, neighborhoods_for_year, PcaDiagnostics};
use medflow::oracle::{two_wave_dgp, DiscreteDgp, ExactEffects};
use medflow::panel::PanelDataset;
use medflow::sensitivity::{run_scenarios, ScenarioResults};
use medflow::synthdata::{generate_discrete_panel, generate_population, ground_truth_effects};
use medflow::weights::{compute_weights, WeightDiagnostics};
use serde::{Deserialize, Serialize};

use crate::config::{MediatorSource, PipelineConfig};
use crate::io::{self, fmt_f64, Finding, NeighborhoodRow, PanelFiles};
use crate::manifest::StageLog;
use crate::{report, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Simulate,
    Neighborhoods,
    Weights,
    Fit,
    Effects,
    Sensitivity,
    Oracle,
    Report,
}

impl Stage {
    pub const ORDER: [Stage; 8] = [
        Stage::Simulate,
        Stage::Neighborhoods,
        Stage::Weights,
        Stage::Fit,
        Stage::Effects,
        Stage::Sensitivity,
        Stage::Oracle,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Simulate => "simulate",
            Stage::Neighborhoods => "neighborhoods",
            Stage::Weights => "weights",
            Stage::Fit => "fit",
            Stage::Effects => "effects",
            Stage::Sensitivity => "sensitivity",
            Stage::Oracle => "oracle",
            Stage::Report => "report",
        }
    }

    fn enabled(self, cfg: &PipelineConfig) -> bool {
        let s = &cfg.stages;
        match self {
            Stage::Simulate => s.simulate,
            Stage::Neighborhoods => s.neighborhoods,
            Stage::Weights => s.weights,
            Stage::Fit => s.fit,
            Stage::Effects => s.effects,
            Stage::Sensitivity => s.sensitivity,
            Stage::Oracle => s.oracle,
            Stage::Report => s.report,
        }
    }
}

pub fn run_stage(stage: Stage, cfg: &PipelineConfig) -> Result<(), CliError> {
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| CliError::io(&cfg.output_dir, e))?;
    log::info!("stage {}", stage.name());
    match stage {
        Stage::Simulate => simulate(cfg),
        Stage::Neighborhoods => neighborhoods(cfg),
        Stage::Weights => weights(cfg),
        Stage::Fit => fit(cfg),
        Stage::Effects => effects(cfg),
        Stage::Sensitivity => sensitivity(cfg),
        Stage::Oracle => oracle(cfg),
        Stage::Report => report::report(cfg),
    }
}

/// Every enabled stage, in pipeline order.
pub fn run_all(cfg: &PipelineConfig) -> Result<(), CliError> {
    for stage in Stage::ORDER {
        if stage.enabled(cfg) {
            run_stage(stage, cfg)?;
        }
    }
    Ok(())
}

fn simulate(cfg: &PipelineConfig) -> Result<(), CliError> {
    let mut log = StageLog::start("simulate", cfg);
    let dgp = cfg.dgp_config();
    let cohort = generate_population(&dgp).map_err(|e| CliError::compute("simulate", e))?;
    if cohort.clipped_outcomes > 0 {
        log.warn(format!("{} outcome probabilities clipped into (0, 1)", cohort.clipped_outcomes));
    }
    io::write_panel(&cohort.panel, &cfg.output_dir)?;
    for name in ["panel.csv", "baseline.csv", "outcome.csv"] {
        log.output(cfg, &cfg.output(name))?;
    }
    if dgp.residence.enabled {
        let path = cfg.output("residences.csv");
        io::write_residences(&cohort.residences, &path)?;
        log.output(cfg, &path)?;
    }
    if cfg.simulate.truth_replicates > 0 {
        let truth =
            ground_truth_effects(&dgp, cfg.simulate.truth_replicates).map_err(|e| CliError::compute("simulate", e))?;
        let path = cfg.output("truth.json");
        io::write_json(&path, &truth)?;
        log.output(cfg, &path)?;
    }
    log.finish(cfg)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WavePca {
    pub wave: u64,
    pub diagnostics: PcaDiagnostics,
}

fn neighborhoods(cfg: &PipelineConfig) -> Result<(), CliError> {
    let mut log = StageLog::start("neighborhoods", cfg);
    let path = cfg.input(&cfg.files.residences);
    let mut findings = Vec::new();
    let res = io::load_residences(&path, &mut findings);
    let residences = io::strict(res, findings)?;
    log.input(cfg, &path)?;
    let mut rows = Vec::new();
    let mut pcas = Vec::new();
    for (t, records) in residences.iter().enumerate() {
        let wave = t as u64 + 1;
        let hoods = neighborhoods_for_year(records, cfg.geo.k)
            .map_err(|e| CliError::compute("neighborhoods", format!("wave {wave}: {e}")))?;
        let shares: Vec<[f64; 5]> = hoods.iter().map(|h| h.shares.shares).collect();
        let pca = disadvantage_scores(&shares)
            .map_err(|e| CliError::compute("neighborhoods", format!("wave {wave}: {e}")))?;
        if pca.diagnostics.variance_explained < 0.6 {
            log.warn(format!(
                "wave {wave}: first component explains {:.3} of the variance",
                pca.diagnostics.variance_explained
            ));
        }
        rows.extend(hoods.iter().zip(&pca.scores).map(|(h, &score)| NeighborhoodRow {
            person_id: h.person_id,
            wave,
            neighbor_count: h.shares.neighbor_count,
            radius2: h.shares.radius2,
            shares: h.shares.shares,
            disadvantage: score,
        }));
        pcas.push(WavePca { wave, diagnostics: pca.diagnostics });
    }
    let out = cfg.output("neighborhoods.csv");
    io::write_neighborhoods(&rows, &out)?;
    log.output(cfg, &out)?;
    let out = cfg.output("pca.json");
    io::write_json(&out, &pcas)?;
    log.output(cfg, &out)?;
    log.finish(cfg)
}

/// Panel used by the estimation stages, with the mediator taken from the
/// configured source.
pub fn load_analysis_panel(cfg: &PipelineConfig, log: &mut StageLog) -> Result<PanelDataset, CliError> {
    let paths = [cfg.input(&cfg.files.panel), cfg.input(&cfg.files.baseline), cfg.input(&cfg.files.outcome)];
    let files = PanelFiles { panel: &paths[0], baseline: &paths[1], outcome: &paths[2] };
    let mut findings = Vec::new();
    let res = io::load_panel(&files, &mut findings);
    let mut panel = io::strict(res, findings)?;
    for p in &paths {
        log.input(cfg, p)?;
    }
    if cfg.mediator_source == MediatorSource::Neighborhoods {
        let path = cfg.input(&cfg.files.neighborhoods);
        let mut findings = Vec::new();
        let res = io::load_neighborhoods(&path, &mut findings);
        let rows = io::strict(res, findings)?;
        log.input(cfg, &path)?;
        let scores: BTreeMap<(u64, u64), f64> = rows.iter().map(|r| ((r.person_id, r.wave), r.disadvantage)).collect();
        let file = path.display().to_string();
        for person in &mut panel.persons {
            for t in 0..person.mediator.len() {
                let wave = t as u64 + 1;
                person.mediator[t] = *scores.get(&(person.person_id, wave)).ok_or_else(|| {
                    CliError::Ingest(Finding {
                        file: file.clone(),
                        line: None,
                        column: Some("disadvantage".into()),
                        message: format!("no neighborhood score for person {} in wave {wave}", person.person_id),
                    })
                })?;
            }
        }
    }
    check_horizon(cfg, &panel)?;
    Ok(panel)
}

fn check_horizon(cfg: &PipelineConfig, panel: &PanelDataset) -> Result<(), CliError> {
    match cfg.effects.horizon {
        Some(t) if t != panel.horizon() => Err(CliError::Config(format!(
            "effects.horizon is {t} but the panel has {} intervened waves ({} waves in total)",
            panel.horizon(),
            panel.n_waves
        ))),
        _ => Ok(()),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightReport {
    pub diagnostics: WeightDiagnostics,
    /// `(person_id, wave)` pairs with a fitted probability below the positivity threshold.
    pub positivity: Vec<(u64, usize)>,
}

fn weights(cfg: &PipelineConfig) -> Result<(), CliError> {
    let mut log = StageLog::start("weights", cfg);
    let panel = load_analysis_panel(cfg, &mut log)?;
    let w = compute_weights(&panel, &cfg.weights).map_err(|e| CliError::compute("weights", e))?;
    if !w.positivity.is_empty() {
        log.warn(format!("{} person-waves with a fitted probability below 1e-6", w.positivity.len()));
    }
    if w.diagnostics.separation {
        log.warn("a weight model shows signs of separation");
    }
    let per_person = panel.n_waves - 1;
    let header: Vec<String> = ["person_id", "wave", "sw_yt", "sw_ym", "sw_mt"].iter().map(|s| s.to_string()).collect();
    let rows = w.person_ids.iter().enumerate().flat_map(|(i, &id)| {
        let w = &w;
        (0..per_person).map(move |k| {
            let j = i * per_person + k;
            vec![id.to_string(), (k + 2).to_string(), fmt_f64(w.sw_yt[j]), fmt_f64(w.sw_ym[j]), fmt_f64(w.sw_mt[j])]
        })
    });
    let out = cfg.output("weights.csv");
    io::write_csv(&out, &header, rows)?;
    log.output(cfg, &out)?;

    let header: Vec<String> = io::PERSON_WEIGHT_HEADER.iter().map(|s| s.to_string()).collect();
    let rows = w.person_ids.iter().enumerate().map(|(i, &id)| {
        vec![
            id.to_string(),
            fmt_f64(w.w_y_untruncated[i]),
            fmt_f64(w.w_m_untruncated[i]),
            fmt_f64(w.w_y[i]),
            fmt_f64(w.w_m[i]),
        ]
    });
    let out = cfg.output("person_weights.csv");
    io::write_csv(&out, &header, rows)?;
    log.output(cfg, &out)?;

    let out = cfg.output("weight_diagnostics.json");
    io::write_json(&out, &WeightReport { diagnostics: w.diagnostics.clone(), positivity: w.positivity.clone() })?;
    log.output(cfg, &out)?;
    log.finish(cfg)
}

fn fit(cfg: &PipelineConfig) -> Result<(), CliError> {
    let mut log = StageLog::start("fit", cfg);
    let panel = load_analysis_panel(cfg, &mut log)?;
    let path = cfg.output("person_weights.csv");
    let by_id = io::load_person_weights(&path)?;
    log.input(cfg, &path)?;
    let file = path.display().to_string();
    let mut w_y = Vec::with_capacity(panel.n_persons());
    let mut w_m = Vec::with_capacity(panel.n_persons());
    for p in &panel.persons {
        let w = by_id.get(&p.person_id).ok_or_else(|| {
            CliError::Ingest(Finding {
                file: file.clone(),
                line: None,
                column: Some("person_id".into()),
                message: format!("no weights for person {}", p.person_id),
            })
        })?;
        w_y.push(w[2]);
        w_m.push(w[3]);
    }
    if by_id.len() != panel.n_persons() {
        return Err(CliError::Ingest(Finding {
            file,
            line: None,
            column: Some("person_id".into()),
            message: format!("{} weight rows for {} panel persons", by_id.len(), panel.n_persons()),
        }));
    }
    let msm = fit_msms_with(&panel, &w_y, &w_m, &cfg.effects.msm()).map_err(|e| CliError::compute("fit", e))?;
    if !msm.outcome_converged {
        log.warn("outcome model did not converge");
    }
    let out = cfg.output("msm.json");
    io::write_json(&out, &msm)?;
    log.output(cfg, &out)?;
    log.finish(cfg)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalculatorModel {
    pub label: String,
    pub theta1: Option<f64>,
    pub theta2: Option<f64>,
    pub beta1: Option<f64>,
    pub effects: InterventionalEffects<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EffectIntervals {
    pub level: f64,
    pub replicates: usize,
    pub failures: usize,
    pub seed: u64,
    pub ide_log: Interval,
    pub iie_log: Interval,
    pub total_log: Interval,
    pub ide_rr: Interval,
    pub iie_rr: Interval,
    pub proportion_mediated: Interval,
}

/// Contents of effects.json.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EffectsFile {
    /// `estimate` (fitted models) or `calculator` (published coefficients).
    pub source: String,
    pub point: InterventionalEffects<f64>,
    pub theta1: Option<f64>,
    pub theta2: Option<f64>,
    pub beta1: Option<f64>,
    pub intervals: Option<EffectIntervals>,
    pub models: Vec<CalculatorModel>,
}

fn effects(cfg: &PipelineConfig) -> Result<(), CliError> {
    let mut log = StageLog::start("effects", cfg);
    let file = if cfg.calculator.is_empty() {
        let path = cfg.output("msm.json");
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        let msm: MsmEstimates =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        log.input(cfg, &path)?;
        let point = interventional_effects(msm.theta1, msm.theta2, msm.beta1, msm.horizon);
        let intervals = if cfg.effects.bootstrap > 0 {
            let panel = load_analysis_panel(cfg, &mut log)?;
            let b =
                bootstrap_effects(&panel, &cfg.weights, &cfg.effects.msm(), cfg.effects.bootstrap, cfg.effects.seed)
                    .map_err(|e| CliError::compute("effects", e))?;
            if b.failures > 0 {
                log.warn(format!("{} of {} bootstrap replicates failed", b.failures, b.replicates));
            }
            let header: Vec<String> = ["replicate", "ide_log", "iie_log", "total_log", "proportion_mediated"]
                .iter()
                .map(|s| s.to_string())
                .collect();
            let rows = b.draws.iter().enumerate().map(|(i, d)| {
                vec![
                    i.to_string(),
                    fmt_f64(d.ide_log),
                    fmt_f64(d.iie_log),
                    fmt_f64(d.total_log),
                    fmt_f64(d.proportion_mediated),
                ]
            });
            let out = cfg.output("bootstrap.csv");
            io::write_csv(&out, &header, rows)?;
            log.output(cfg, &out)?;
            Some(EffectIntervals {
                level: b.level,
                replicates: b.replicates,
                failures: b.failures,
                seed: b.seed,
                ide_log: b.ide_log,
                iie_log: b.iie_log,
                total_log: b.total_log,
                ide_rr: b.ide_rr,
                iie_rr: b.iie_rr,
                proportion_mediated: b.proportion_mediated,
            })
        } else {
            None
        };
        EffectsFile {
            source: "estimate".into(),
            point,
            theta1: Some(msm.theta1),
            theta2: Some(msm.theta2),
            beta1: Some(msm.beta1),
            intervals,
            models: Vec::new(),
        }
    } else {
        let models: Vec<CalculatorModel> = cfg
            .calculator
            .iter()
            .map(|c| {
                let effects = match (c.theta1, c.theta2, c.beta1) {
                    (Some(t1), Some(t2), Some(b1)) => interventional_effects(t1, t2, b1, c.horizon),
                    _ => effects_from_logs(c.ide_log.unwrap_or(f64::NAN), c.iie_log.unwrap_or(f64::NAN), c.horizon),
                };
                CalculatorModel { label: c.label.clone(), theta1: c.theta1, theta2: c.theta2, beta1: c.beta1, effects }
            })
            .collect();
        let first = &models[0];
        EffectsFile {
            source: "calculator".into(),
            point: first.effects,
            theta1: first.theta1,
            theta2: first.theta2,
            beta1: first.beta1,
            intervals: None,
            models,
        }
    };
    let out = cfg.output("effects.json");
    io::write_json(&out, &file)?;
    log.output(cfg, &out)?;
    log.finish(cfg)
}

fn sensitivity(cfg: &PipelineConfig) -> Result<(), CliError> {
    let mut log = StageLog::start("sensitivity", cfg);
    let panel = load_analysis_panel(cfg, &mut log)?;
    let r: ScenarioResults = run_scenarios(&panel, &cfg.weights, &cfg.effects.msm(), &cfg.sensitivity)
        .map_err(|e| CliError::compute("sensitivity", e))?;
    let failures: usize = r.points.iter().map(|p| p.failures).sum();
    if failures > 0 {
        log.warn(format!("{failures} sensitivity simulations failed"));
    }
    let header: Vec<String> =
        ["target", "grid_value", "sim_index", "ide_log", "iie_log"].iter().map(|s| s.to_string()).collect();
    let rows = r.sims.iter().map(|s| {
        vec![
            s.target.label().to_string(),
            fmt_f64(s.grid_value),
            s.sim_index.to_string(),
            fmt_f64(s.ide_log),
            fmt_f64(s.iie_log),
        ]
    });
    let out = cfg.output("sensitivity.csv");
    io::write_csv(&out, &header, rows)?;
    log.output(cfg, &out)?;
    let summary = SensitivitySummary {
        baseline: r.baseline,
        noise_sd: r.noise_sd,
        seed: r.seed,
        n_sims: cfg.sensitivity.n_sims,
        points: r
            .points
            .iter()
            .map(|p| SummaryPoint {
                target: p.target.label().to_string(),
                symbol: p.target.symbol().to_string(),
                grid_value: p.grid_value,
                n_sims: p.n_sims,
                failures: p.failures,
                ide_mean: p.ide_mean,
                ide_sd: p.ide_sd,
                iie_mean: p.iie_mean,
                iie_sd: p.iie_sd,
                ide_drift: p.ide_drift,
                iie_drift: p.iie_drift,
                drift: p.drift(),
            })
            .collect(),
    };
    let out = cfg.output("sensitivity_summary.json");
    io::write_json(&out, &summary)?;
    log.output(cfg, &out)?;
    log.finish(cfg)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryPoint {
    pub target: String,
    pub symbol: String,
    pub grid_value: f64,
    pub n_sims: usize,
    pub failures: usize,
    pub ide_mean: f64,
    pub ide_sd: f64,
    pub iie_mean: f64,
    pub iie_sd: f64,
    pub ide_drift: f64,
    pub iie_drift: f64,
    pub drift: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensitivitySummary {
    pub baseline: InterventionalEffects<f64>,
    pub noise_sd: f64,
    pub seed: u64,
    pub n_sims: usize,
    pub points: Vec<SummaryPoint>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleComparison {
    pub label: String,
    pub exact: ExactEffects,
    pub estimate: Option<InterventionalEffects<f64>>,
    pub ide_bootstrap_se: Option<f64>,
    pub iie_bootstrap_se: Option<f64>,
    /// `(estimate - exact) / bootstrap SE`.
    pub ide_z: Option<f64>,
    pub iie_z: Option<f64>,
}

fn oracle(cfg: &PipelineConfig) -> Result<(), CliError> {
    let mut log = StageLog::start("oracle", cfg);
    let o = &cfg.oracle;
    let mut out = Vec::with_capacity(o.variants.len());
    for (i, v) in o.variants.iter().enumerate() {
        let dgp = DiscreteDgp::new(two_wave_dgp(&v.params))
            .map_err(|e| CliError::compute("oracle", format!("{}: {e}", v.label)))?;
        let exact = dgp.always_vs_never().map_err(|e| CliError::compute("oracle", e))?;
        let mut cmp = OracleComparison {
            label: v.label.clone(),
            exact,
            estimate: None,
            ide_bootstrap_se: None,
            iie_bootstrap_se: None,
            ide_z: None,
            iie_z: None,
        };
        if o.bootstrap > 0 {
            let seed = o.seed.wrapping_add(i as u64);
            let panel = generate_discrete_panel(&dgp, o.n_persons, seed).map_err(|e| CliError::compute("oracle", e))?;
            let msm = MsmConfig { horizon: None, ..cfg.effects.msm() };
            let est = estimate(&panel, &cfg.weights, &msm).map_err(|e| CliError::compute("oracle", e))?;
            let b = bootstrap_effects(&panel, &cfg.weights, &msm, o.bootstrap, seed)
                .map_err(|e| CliError::compute("oracle", e))?;
            cmp.ide_z = Some((est.effects.ide_log - exact.ide_log) / b.ide_log.sd);
            cmp.iie_z = Some((est.effects.iie_log - exact.iie_log) / b.iie_log.sd);
            cmp.ide_bootstrap_se = Some(b.ide_log.sd);
            cmp.iie_bootstrap_se = Some(b.iie_log.sd);
            cmp.estimate = Some(est.effects);
            if cmp.ide_z.is_some_and(|z| z.abs() > 3.0) || cmp.iie_z.is_some_and(|z| z.abs() > 3.0) {
                log.warn(format!("{}: estimate more than 3 bootstrap SEs from the exact effect", v.label));
            }
        }
        out.push(cmp);
    }
    let path = cfg.output("oracle.json");
    io::write_json(&path, &out)?;
    log.output(cfg, &path)?;
    log.finish(cfg)
}
