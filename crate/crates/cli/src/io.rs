//! CSV dialect: UTF-8, comma separated, header row, LF line endings, numbers
//! unquoted and printed in shortest round-trip form. Loaders collect every
//! problem as a [`Finding`]; the strict entry points fail on the first one.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::path::Path;

use medflow::geo::{ResidentRecord, Square, INDICATORS};
use medflow::panel::{PanelDataset, PersonRecord};
use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub file: String,
    pub line: Option<u64>,
    pub column: Option<String>,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.file)?;
        if let Some(line) = self.line {
            write!(f, ", line {line}")?;
        }
        if let Some(col) = &self.column {
            write!(f, ", column {col}")?;
        }
        write!(f, ": {}", self.message)
    }
}

fn finding(file: &str, line: Option<u64>, column: Option<&str>, message: impl Into<String>) -> Finding {
    Finding { file: file.to_string(), line, column: column.map(str::to_string), message: message.into() }
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

pub fn write_csv<I>(path: &Path, header: &[String], rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file);
    let io_err = |e: csv::Error| CliError::io(path, std::io::Error::other(e.to_string()));
    w.write_record(header).map_err(io_err)?;
    for row in rows {
        w.write_record(&row).map_err(io_err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    std::fs::write(path, canonical_json(value)?).map_err(|e| CliError::io(path, e))
}

/// Pretty JSON with object keys sorted, newline terminated.
pub fn canonical_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    // serde_json's map type is ordered by key unless `preserve_order` is on.
    let v = serde_json::to_value(value).map_err(|e| CliError::Config(format!("serialization: {e}")))?;
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| CliError::Config(format!("serialization: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// A parsed CSV file: header plus rows tagged with their line numbers.
#[derive(Debug, Clone)]
pub struct Table {
    pub file: String,
    pub header: Vec<String>,
    pub rows: Vec<(u64, Vec<String>)>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

/// Read `path`; rows with the wrong width or invalid UTF-8 become findings and
/// are dropped. Only an unreadable file is an error.
pub fn read_table(path: &Path, findings: &mut Vec<Finding>) -> Result<Option<Table>, CliError> {
    let name = path.display().to_string();
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut r = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(file);
    let mut header: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    let mut record = csv::ByteRecord::new();
    loop {
        let line = r.position().line();
        match r.read_byte_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                findings.push(finding(&name, Some(line), None, format!("malformed CSV: {e}")));
                continue;
            }
        }
        let mut fields = Vec::with_capacity(record.len());
        let mut bad_utf8 = None;
        for (j, raw) in record.iter().enumerate() {
            match std::str::from_utf8(raw) {
                Ok(s) => fields.push(s.to_string()),
                Err(_) => {
                    bad_utf8 = Some(j);
                    break;
                }
            }
        }
        match (&header, bad_utf8) {
            (None, Some(j)) => {
                findings.push(finding(&name, Some(line), None, format!("header field {} is not valid UTF-8", j + 1)));
                return Ok(None);
            }
            (None, None) => header = Some(fields),
            (Some(h), Some(j)) => {
                let col = h.get(j).map(String::as_str);
                findings.push(finding(&name, Some(line), col, "value is not valid UTF-8"));
            }
            (Some(h), None) if fields.len() != h.len() => {
                findings.push(finding(
                    &name,
                    Some(line),
                    None,
                    format!("expected {} fields, found {}", h.len(), fields.len()),
                ));
            }
            (Some(_), None) => rows.push((line, fields)),
        }
    }
    match header {
        Some(header) => Ok(Some(Table { file: name, header, rows })),
        None => {
            findings.push(finding(&name, None, None, "file is empty (no header row)"));
            Ok(None)
        }
    }
}

/// Header must start with `fixed` and continue with columns carrying `prefix`
/// (or nothing else when `prefix` is `None`).
fn check_header(t: &Table, fixed: &[&str], prefix: Option<&str>, findings: &mut Vec<Finding>) -> bool {
    let mut ok = true;
    for (j, want) in fixed.iter().enumerate() {
        if t.header.get(j).map(String::as_str) != Some(*want) {
            findings.push(finding(
                &t.file,
                Some(1),
                Some(want),
                format!("expected column {} to be '{want}', found {:?}", j + 1, t.header.get(j)),
            ));
            ok = false;
        }
    }
    for extra in t.header.iter().skip(fixed.len()) {
        if !prefix.is_some_and(|p| extra.starts_with(p)) {
            let allowed = prefix.map_or("no further columns".to_string(), |p| format!("only '{p}*' columns"));
            findings.push(finding(&t.file, Some(1), Some(extra), format!("unexpected column; {allowed} may follow")));
            ok = false;
        }
    }
    let mut seen = BTreeSet::new();
    for h in &t.header {
        if !seen.insert(h) {
            findings.push(finding(&t.file, Some(1), Some(h), "duplicate column"));
            ok = false;
        }
    }
    ok
}

struct Cells<'a> {
    table: &'a Table,
    line: u64,
    row: &'a [String],
    findings: &'a mut Vec<Finding>,
    ok: bool,
}

impl Cells<'_> {
    fn fail(&mut self, j: usize, msg: String) {
        self.findings.push(finding(&self.table.file, Some(self.line), Some(&self.table.header[j]), msg));
        self.ok = false;
    }

    fn u64(&mut self, j: usize) -> u64 {
        match self.row[j].trim().parse::<u64>() {
            Ok(v) => v,
            Err(_) => {
                self.fail(j, format!("expected a non-negative integer, found '{}'", self.row[j]));
                0
            }
        }
    }

    fn i64(&mut self, j: usize) -> i64 {
        match self.row[j].trim().parse::<i64>() {
            Ok(v) => v,
            Err(_) => {
                self.fail(j, format!("expected an integer, found '{}'", self.row[j]));
                0
            }
        }
    }

    fn flag(&mut self, j: usize) -> bool {
        match self.row[j].trim() {
            "0" => false,
            "1" => true,
            other => {
                self.fail(j, format!("expected 0 or 1, found '{other}'"));
                false
            }
        }
    }

    fn finite(&mut self, j: usize) -> f64 {
        match self.row[j].trim().parse::<f64>() {
            Ok(v) if v.is_finite() => v,
            Ok(v) => {
                self.fail(j, format!("value {v} is not finite"));
                0.0
            }
            Err(_) => {
                self.fail(j, format!("expected a number, found '{}'", self.row[j]));
                0.0
            }
        }
    }

    fn unit(&mut self, j: usize) -> f64 {
        let v = self.finite(j);
        if !(0.0..=1.0).contains(&v) {
            self.fail(j, format!("value {v} outside [0, 1]"));
        }
        v
    }
}

fn each_row<F>(t: &Table, findings: &mut Vec<Finding>, mut f: F)
where
    F: FnMut(&mut Cells<'_>),
{
    for (line, row) in &t.rows {
        let mut c = Cells { table: t, line: *line, row, findings: &mut *findings, ok: true };
        f(&mut c);
    }
}

pub const PANEL_FIXED: [&str; 4] = ["person_id", "wave", "treatment", "mediator"];
pub const RESIDENCE_FIXED: [&str; 5] = ["person_id", "wave", "grid_x", "grid_y", "adult"];

pub fn residence_header() -> Vec<String> {
    RESIDENCE_FIXED.iter().chain(INDICATORS.iter()).map(|s| s.to_string()).collect()
}

pub fn neighborhood_header() -> Vec<String> {
    let mut h: Vec<String> = ["person_id", "wave", "neighbor_count", "radius2"].iter().map(|s| s.to_string()).collect();
    h.extend(INDICATORS.iter().map(|s| s.to_string()));
    h.push("disadvantage".into());
    h
}

pub struct PanelFiles<'a> {
    pub panel: &'a Path,
    pub baseline: &'a Path,
    pub outcome: &'a Path,
}

struct WaveRow {
    line: u64,
    treatment: bool,
    mediator: f64,
    confounders: Vec<f64>,
}

/// Parse the three panel files. Returns the dataset only when there are no
/// findings.
pub fn load_panel(files: &PanelFiles<'_>, findings: &mut Vec<Finding>) -> Result<Option<PanelDataset>, CliError> {
    let start = findings.len();
    let panel = read_table(files.panel, findings)?;
    let baseline = read_table(files.baseline, findings)?;
    let outcome = read_table(files.outcome, findings)?;
    let (Some(panel), Some(baseline), Some(outcome)) = (panel, baseline, outcome) else {
        return Ok(None);
    };
    let header_ok = check_header(&panel, &PANEL_FIXED, Some("L_"), findings)
        & check_header(&baseline, &["person_id"], Some("C_"), findings)
        & check_header(&outcome, &["person_id", "outcome"], None, findings);
    if !header_ok {
        return Ok(None);
    }
    let n_conf = panel.header.len() - PANEL_FIXED.len();

    let mut waves: BTreeMap<u64, BTreeMap<u64, WaveRow>> = BTreeMap::new();
    each_row(&panel, findings, |c| {
        let id = c.u64(0);
        let wave = c.u64(1);
        if c.ok && wave == 0 {
            c.fail(1, "waves are numbered from 1".into());
        }
        // Rows with a readable key still count toward completeness, so one
        // bad value yields one finding.
        let keyed = c.ok;
        let treatment = c.flag(2);
        let mediator = c.finite(3);
        let confounders: Vec<f64> = (0..n_conf).map(|k| c.finite(4 + k)).collect();
        if keyed {
            let line = c.line;
            if let Some(prev) =
                waves.entry(id).or_default().insert(wave, WaveRow { line, treatment, mediator, confounders })
            {
                c.fail(1, format!("person {id} wave {wave} repeats line {}", prev.line));
            }
        }
    });

    let mut base: BTreeMap<u64, (u64, Vec<f64>)> = BTreeMap::new();
    let n_base = baseline.header.len() - 1;
    each_row(&baseline, findings, |c| {
        let id = c.u64(0);
        let keyed = c.ok;
        let values: Vec<f64> = (0..n_base).map(|k| c.finite(1 + k)).collect();
        if keyed {
            let line = c.line;
            if let Some((prev, _)) = base.insert(id, (line, values)) {
                c.fail(0, format!("person {id} repeats line {prev}"));
            }
        }
    });

    let mut outcomes: BTreeMap<u64, (u64, bool)> = BTreeMap::new();
    each_row(&outcome, findings, |c| {
        let id = c.u64(0);
        let keyed = c.ok;
        let y = c.flag(1);
        if keyed {
            let line = c.line;
            if let Some((prev, _)) = outcomes.insert(id, (line, y)) {
                c.fail(0, format!("person {id} repeats line {prev}"));
            }
        }
    });

    let n_waves = waves.values().flat_map(|w| w.keys().copied()).max().unwrap_or(0);
    if waves.is_empty() {
        findings.push(finding(&panel.file, None, None, "no data rows"));
    } else if n_waves < 2 {
        findings.push(finding(&panel.file, None, Some("wave"), "at least 2 waves are required"));
    }
    for (id, rows) in &waves {
        for w in 1..=n_waves {
            if !rows.contains_key(&w) {
                let line = rows.values().map(|r| r.line).min();
                findings.push(finding(
                    &panel.file,
                    line,
                    Some("wave"),
                    format!("person {id} is missing wave {w} of {n_waves}"),
                ));
            }
        }
    }
    cross_check(&panel.file, waves.keys(), &baseline.file, base.keys(), findings);
    cross_check(&panel.file, waves.keys(), &outcome.file, outcomes.keys(), findings);

    if findings.len() > start {
        return Ok(None);
    }
    let persons = waves
        .into_iter()
        .map(|(id, rows)| {
            let rows: Vec<WaveRow> = rows.into_values().collect();
            PersonRecord {
                person_id: id,
                baseline: base[&id].1.clone(),
                treatment: rows.iter().map(|r| r.treatment).collect(),
                mediator: rows.iter().map(|r| r.mediator).collect(),
                confounders: rows.into_iter().map(|r| r.confounders).collect(),
                outcome: outcomes[&id].1,
                extra: Vec::new(),
            }
        })
        .collect();
    let panel_ds = PanelDataset::new(
        n_waves as usize,
        baseline.header[1..].to_vec(),
        panel.header[PANEL_FIXED.len()..].to_vec(),
        persons,
    );
    match panel_ds {
        Ok(p) => Ok(Some(p)),
        Err(e) => {
            findings.push(finding(&panel.file, None, None, e.to_string()));
            Ok(None)
        }
    }
}

fn cross_check<'a>(
    file_a: &str,
    ids_a: impl Iterator<Item = &'a u64> + Clone,
    file_b: &str,
    ids_b: impl Iterator<Item = &'a u64> + Clone,
    findings: &mut Vec<Finding>,
) {
    let a: BTreeSet<u64> = ids_a.copied().collect();
    let b: BTreeSet<u64> = ids_b.copied().collect();
    for id in a.difference(&b) {
        findings.push(finding(
            file_b,
            None,
            Some("person_id"),
            format!("person {id} appears in {file_a} but not here"),
        ));
    }
    for id in b.difference(&a) {
        findings.push(finding(file_b, None, Some("person_id"), format!("person {id} does not appear in {file_a}")));
    }
}

pub fn write_panel(panel: &PanelDataset, dir: &Path) -> Result<(), CliError> {
    let mut header: Vec<String> = PANEL_FIXED.iter().map(|s| s.to_string()).collect();
    header.extend(panel.confounder_names.iter().cloned());
    let rows = panel.persons.iter().flat_map(|p| {
        (0..panel.n_waves).map(move |t| {
            let mut r = vec![
                p.person_id.to_string(),
                (t + 1).to_string(),
                u8::from(p.treatment[t]).to_string(),
                fmt_f64(p.mediator[t]),
            ];
            r.extend(p.confounders[t].iter().map(|&x| fmt_f64(x)));
            r
        })
    });
    write_csv(&dir.join("panel.csv"), &header, rows)?;

    let mut header = vec!["person_id".to_string()];
    header.extend(panel.baseline_names.iter().cloned());
    let rows = panel.persons.iter().map(|p| {
        let mut r = vec![p.person_id.to_string()];
        r.extend(p.baseline.iter().map(|&x| fmt_f64(x)));
        r
    });
    write_csv(&dir.join("baseline.csv"), &header, rows)?;

    let header = vec!["person_id".to_string(), "outcome".to_string()];
    let rows = panel.persons.iter().map(|p| vec![p.person_id.to_string(), u8::from(p.outcome).to_string()]);
    write_csv(&dir.join("outcome.csv"), &header, rows)
}

/// Residences grouped by wave (index 0 is wave 1), each wave sorted by person.
pub fn load_residences(path: &Path, findings: &mut Vec<Finding>) -> Result<Option<Vec<Vec<ResidentRecord>>>, CliError> {
    let start = findings.len();
    let Some(t) = read_table(path, findings)? else { return Ok(None) };
    let header = residence_header();
    let fixed: Vec<&str> = header.iter().map(String::as_str).collect();
    if !check_header(&t, &fixed, None, findings) {
        return Ok(None);
    }
    let mut by_wave: BTreeMap<u64, BTreeMap<u64, ResidentRecord>> = BTreeMap::new();
    each_row(&t, findings, |c| {
        let id = c.u64(0);
        let wave = c.u64(1);
        if c.ok && wave == 0 {
            c.fail(1, "waves are numbered from 1".into());
        }
        let x = c.i64(2);
        let y = c.i64(3);
        if x < 0 {
            c.fail(2, format!("negative coordinate {x}"));
        }
        if y < 0 {
            c.fail(3, format!("negative coordinate {y}"));
        }
        let adult = c.flag(4);
        let flags: [bool; 5] = std::array::from_fn(|k| c.flag(5 + k));
        if c.ok && !adult && flags.iter().any(|&f| f) {
            c.fail(4, "indicator set for a non-adult".into());
        }
        if c.ok {
            let rec = ResidentRecord { person_id: id, square: Square::new(x, y), adult, flags };
            if by_wave.entry(wave).or_default().insert(id, rec).is_some() {
                c.fail(0, format!("person {id} appears twice in wave {wave}"));
            }
        }
    });
    if let Some(&last) = by_wave.keys().last() {
        for w in 1..=last {
            if !by_wave.contains_key(&w) {
                findings.push(finding(&t.file, None, Some("wave"), format!("no residences for wave {w}")));
            }
        }
    }
    if findings.len() > start {
        return Ok(None);
    }
    Ok(Some(by_wave.into_values().map(|m| m.into_values().collect()).collect()))
}

pub fn write_residences(residences: &[Vec<ResidentRecord>], path: &Path) -> Result<(), CliError> {
    let rows = residences.iter().enumerate().flat_map(|(t, recs)| {
        recs.iter().map(move |r| {
            let mut row = vec![
                r.person_id.to_string(),
                (t + 1).to_string(),
                r.square.x.to_string(),
                r.square.y.to_string(),
                u8::from(r.adult).to_string(),
            ];
            row.extend(r.flags.iter().map(|&f| u8::from(f).to_string()));
            row
        })
    });
    write_csv(path, &residence_header(), rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodRow {
    pub person_id: u64,
    pub wave: u64,
    pub neighbor_count: u64,
    pub radius2: i64,
    pub shares: [f64; 5],
    pub disadvantage: f64,
}

pub fn write_neighborhoods(rows: &[NeighborhoodRow], path: &Path) -> Result<(), CliError> {
    let body = rows.iter().map(|r| {
        let mut row =
            vec![r.person_id.to_string(), r.wave.to_string(), r.neighbor_count.to_string(), r.radius2.to_string()];
        row.extend(r.shares.iter().map(|&s| fmt_f64(s)));
        row.push(fmt_f64(r.disadvantage));
        row
    });
    write_csv(path, &neighborhood_header(), body)
}

pub fn load_neighborhoods(path: &Path, findings: &mut Vec<Finding>) -> Result<Option<Vec<NeighborhoodRow>>, CliError> {
    let start = findings.len();
    let Some(t) = read_table(path, findings)? else { return Ok(None) };
    let header = neighborhood_header();
    let fixed: Vec<&str> = header.iter().map(String::as_str).collect();
    if !check_header(&t, &fixed, None, findings) {
        return Ok(None);
    }
    let mut out = Vec::with_capacity(t.rows.len());
    let mut seen = BTreeSet::new();
    each_row(&t, findings, |c| {
        let person_id = c.u64(0);
        let wave = c.u64(1);
        let neighbor_count = c.u64(2);
        let radius2 = c.i64(3);
        let shares: [f64; 5] = std::array::from_fn(|k| c.unit(4 + k));
        let disadvantage = c.unit(9);
        if c.ok && !seen.insert((person_id, wave)) {
            c.fail(0, format!("person {person_id} appears twice in wave {wave}"));
        }
        if c.ok {
            out.push(NeighborhoodRow { person_id, wave, neighbor_count, radius2, shares, disadvantage });
        }
    });
    if findings.len() > start {
        return Ok(None);
    }
    Ok(Some(out))
}

pub const PERSON_WEIGHT_HEADER: [&str; 5] = ["person_id", "w_y_untruncated", "w_m_untruncated", "w_y", "w_m"];

/// Person-level weight products keyed by person id.
pub fn load_person_weights(path: &Path) -> Result<BTreeMap<u64, [f64; 4]>, CliError> {
    let mut findings = Vec::new();
    let t = read_table(path, &mut findings)?;
    let mut out = BTreeMap::new();
    if let Some(t) = t {
        if check_header(&t, &PERSON_WEIGHT_HEADER, None, &mut findings) {
            each_row(&t, &mut findings, |c| {
                let id = c.u64(0);
                let w: [f64; 4] = std::array::from_fn(|k| c.finite(1 + k));
                if c.ok && w.iter().any(|&x| x <= 0.0) {
                    c.fail(1, "weights must be positive".into());
                }
                if c.ok && out.insert(id, w).is_some() {
                    c.fail(0, format!("person {id} repeats"));
                }
            });
        }
    }
    match findings.into_iter().next() {
        Some(f) => Err(CliError::Ingest(f)),
        None => Ok(out),
    }
}

/// Fail on the first finding.
pub fn strict<T>(result: Result<Option<T>, CliError>, findings: Vec<Finding>) -> Result<T, CliError> {
    let value = result?;
    if let Some(f) = findings.into_iter().next() {
        return Err(CliError::Ingest(f));
    }
    value.ok_or_else(|| CliError::Config("input could not be parsed".into()))
}
