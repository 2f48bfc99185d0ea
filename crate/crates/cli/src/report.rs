//! Coefficient and effect tables, the effect-interval series and the
//! sensitivity series, rendered into `report/` from the outputs of the
//! stages enabled in the config.

use std::path::Path;

use medflow::effects::MsmEstimates;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::io::{self, fmt_f64};
use crate::manifest::StageLog;
use crate::stages::{EffectsFile, SensitivitySummary, WeightReport};
use crate::CliError;

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn strings(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Default, Serialize)]
struct ReportIndex {
    tables: Vec<String>,
    proportion_mediated: Option<f64>,
    source: Option<String>,
}

pub fn report(cfg: &PipelineConfig) -> Result<(), CliError> {
    let mut log = StageLog::start("report", cfg);
    let dir = cfg.output("report");
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let mut index = ReportIndex::default();
    let mut emit = |log: &mut StageLog, name: &str, header: &[&str], rows: Vec<Vec<String>>| -> Result<(), CliError> {
        let path = dir.join(name);
        io::write_csv(&path, &strings(header), rows)?;
        log.output(cfg, &path)?;
        index.tables.push(name.to_string());
        Ok(())
    };

    let msm_path = cfg.output("msm.json");
    if cfg.stages.fit && cfg.calculator.is_empty() {
        let msm: MsmEstimates = read_json(&msm_path)?;
        log.input(cfg, &msm_path)?;
        let rows = [("outcome", &msm.outcome_coefficients), ("mediator", &msm.mediator_coefficients)]
            .iter()
            .flat_map(|(model, coefs)| {
                coefs
                    .iter()
                    .map(move |c| vec![model.to_string(), c.name.clone(), fmt_f64(c.estimate), fmt_f64(c.robust_se)])
            })
            .collect();
        emit(&mut log, "coefficients.csv", &["model", "term", "estimate", "robust_se"], rows)?;
    }

    let effects_path = cfg.output("effects.json");
    if cfg.stages.effects {
        let e: EffectsFile = read_json(&effects_path)?;
        log.input(cfg, &effects_path)?;
        let header =
            ["model", "horizon", "ide_log", "iie_log", "total_log", "proportion_mediated", "proportion_mediated_rr"];
        let row = |label: &str, p: &medflow::effects::InterventionalEffects<f64>| {
            vec![
                label.to_string(),
                p.horizon.to_string(),
                fmt_f64(p.ide_log),
                fmt_f64(p.iie_log),
                fmt_f64(p.total_log),
                fmt_f64(p.proportion_mediated),
                fmt_f64(p.proportion_mediated_rr),
            ]
        };
        let rows = if e.models.is_empty() {
            vec![row("estimate", &e.point)]
        } else {
            e.models.iter().map(|m| row(&m.label, &m.effects)).collect()
        };
        emit(&mut log, "effects_table.csv", &header, rows)?;

        let p = &e.point;
        let iv = e.intervals.as_ref();
        let pair = |i: medflow::effects::Interval| (i.lower, i.upper);
        // Total rate-ratio bounds are the exponentiated log bounds.
        let series = [
            ("ide", p.ide_log, p.ide_rr, iv.map(|i| pair(i.ide_log)), iv.map(|i| pair(i.ide_rr))),
            ("iie", p.iie_log, p.iie_rr, iv.map(|i| pair(i.iie_log)), iv.map(|i| pair(i.iie_rr))),
            (
                "total",
                p.total_log,
                p.total_rr,
                iv.map(|i| pair(i.total_log)),
                iv.map(|i| (i.total_log.lower.exp(), i.total_log.upper.exp())),
            ),
        ];
        let bounds =
            |x: Option<(f64, f64)>| x.map_or((String::new(), String::new()), |(l, u)| (fmt_f64(l), fmt_f64(u)));
        let mut rows = Vec::new();
        for (effect, log_v, rr_v, log_iv, rr_iv) in series {
            let (l, u) = bounds(log_iv);
            rows.push(vec![effect.to_string(), "log".to_string(), fmt_f64(log_v), l, u]);
            let (l, u) = bounds(rr_iv);
            rows.push(vec![effect.to_string(), "rate_ratio".to_string(), fmt_f64(rr_v), l, u]);
        }
        emit(&mut log, "effect_intervals.csv", &["effect", "scale", "estimate", "lower", "upper"], rows)?;
        index.proportion_mediated = Some(e.point.proportion_mediated);
        index.source = Some(e.source.clone());
    }

    let weights_path = cfg.output("weight_diagnostics.json");
    if cfg.stages.weights {
        let w: WeightReport = read_json(&weights_path)?;
        log.input(cfg, &weights_path)?;
        let d = &w.diagnostics;
        let summaries = [
            ("sw_yt", d.sw_yt),
            ("sw_ym", d.sw_ym),
            ("sw_mt", d.sw_mt),
            ("w_y_untruncated", d.w_y.untruncated),
            ("w_y", d.w_y.truncated),
            ("w_m_untruncated", d.w_m.untruncated),
            ("w_m", d.w_m.truncated),
        ];
        let rows = summaries
            .iter()
            .map(|(name, s)| vec![name.to_string(), fmt_f64(s.mean), fmt_f64(s.sd), fmt_f64(s.min), fmt_f64(s.max)])
            .collect();
        emit(&mut log, "weight_summary.csv", &["weight", "mean", "sd", "min", "max"], rows)?;
    }

    let sens_path = cfg.output("sensitivity_summary.json");
    if cfg.stages.sensitivity {
        let s: SensitivitySummary = read_json(&sens_path)?;
        log.input(cfg, &sens_path)?;
        let rows = s
            .points
            .iter()
            .map(|p| {
                vec![
                    p.target.clone(),
                    p.symbol.clone(),
                    fmt_f64(p.grid_value),
                    p.n_sims.to_string(),
                    fmt_f64(p.ide_mean),
                    fmt_f64(p.ide_sd),
                    fmt_f64(p.iie_mean),
                    fmt_f64(p.iie_sd),
                    fmt_f64(p.drift),
                ]
            })
            .collect();
        let header = ["target", "symbol", "grid_value", "n_sims", "ide_mean", "ide_sd", "iie_mean", "iie_sd", "drift"];
        emit(&mut log, "sensitivity_series.csv", &header, rows)?;
    }

    let path = dir.join("report.json");
    io::write_json(&path, &index)?;
    log.output(cfg, &path)?;
    log.finish(cfg)
}
