//! File formats: gaze traces as JSON lines, session event logs, and an
//! importer for sample-level CSV exports of word-level swipe datasets.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::geometry::{KeyboardLayout, Point};
use crate::lm::Lexicon;
use crate::session::SessionEvent;
use crate::trace::GazeSample;

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("dataset not found at {0}")]
    DatasetNotFound(PathBuf),
    #[error("{path}: unrecognized columns; observed [{}], need a record id, word, time, x and y", .columns.join(", "))]
    UnknownSchema { path: PathBuf, columns: Vec<String> },
}

impl DataError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        DataError::Io { path: path.to_path_buf(), source }
    }

    /// 1-based line number for parse errors.
    pub fn line(&self) -> Option<usize> {
        match self {
            DataError::Parse { line, .. } => Some(*line),
            _ => None,
        }
    }
}

/// A hit point on the keyboard plane, in millimetres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HitPoint {
    pub t: f64,
    pub x_mm: f64,
    pub y_mm: f64,
}

/// One swipe for one intended word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub record_id: String,
    pub technique: String,
    pub intended_word: String,
    /// Words typed before this one, space separated.
    #[serde(default)]
    pub context: String,
    pub samples: Vec<GazeSample>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hit_points: Option<Vec<HitPoint>>,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub metadata: Value,
}

impl TraceRecord {
    pub fn context_words(&self) -> Vec<&str> {
        self.context.split_whitespace().collect()
    }

    /// Checks the word is lowercase a–z and timestamps never decrease.
    pub fn validate(&self) -> Result<(), String> {
        if self.intended_word.is_empty() || !self.intended_word.bytes().all(|b| b.is_ascii_lowercase()) {
            return Err(format!("intended_word {:?} is not lowercase a-z", self.intended_word));
        }
        for (i, pair) in self.samples.windows(2).enumerate() {
            if pair[1].t < pair[0].t {
                return Err(format!("sample {} has a decreasing timestamp ({} < {})", i + 1, pair[1].t, pair[0].t));
            }
        }
        if self.samples.iter().any(|s| !(s.t.is_finite() && s.x_mm.is_finite() && s.y_mm.is_finite())) {
            return Err("non-finite sample value".into());
        }
        Ok(())
    }
}

/// A malformed line skipped by a lenient read.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedLine {
    pub line: usize,
    pub message: String,
}

fn open(path: &Path) -> Result<BufReader<File>, DataError> {
    File::open(path).map(BufReader::new).map_err(|e| DataError::io(path, e))
}

fn parse_lines<T>(
    path: &Path,
    lenient: bool,
    mut parse: impl FnMut(&str) -> Result<T, String>,
) -> Result<(Vec<T>, Vec<SkippedLine>), DataError> {
    let mut out = Vec::new();
    let mut skipped = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| DataError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match parse(&line) {
            Ok(v) => out.push(v),
            Err(message) if lenient => skipped.push(SkippedLine { line: i + 1, message }),
            Err(message) => return Err(DataError::Parse { path: path.to_path_buf(), line: i + 1, message }),
        }
    }
    Ok((out, skipped))
}

fn parse_record(line: &str) -> Result<TraceRecord, String> {
    let record: TraceRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    record.validate()?;
    Ok(record)
}

/// Reads a trace file; the first malformed line is an error.
pub fn read_traces(path: impl AsRef<Path>) -> Result<Vec<TraceRecord>, DataError> {
    parse_lines(path.as_ref(), false, parse_record).map(|(records, _)| records)
}

/// Reads a trace file, skipping malformed lines.
pub fn read_traces_lenient(path: impl AsRef<Path>) -> Result<(Vec<TraceRecord>, Vec<SkippedLine>), DataError> {
    parse_lines(path.as_ref(), true, parse_record)
}

pub fn write_traces_to(records: &[TraceRecord], mut out: impl Write) -> std::io::Result<()> {
    for record in records {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn write_traces(path: impl AsRef<Path>, records: &[TraceRecord]) -> Result<(), DataError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| DataError::io(path, e))?;
    write_traces_to(records, BufWriter::new(file)).map_err(|e| DataError::io(path, e))
}

/// Reads a session event log, one event per line.
pub fn read_events(path: impl AsRef<Path>) -> Result<Vec<SessionEvent>, DataError> {
    let path = path.as_ref();
    parse_lines(path, false, |line| serde_json::from_str(line).map_err(|e| e.to_string())).map(|(events, _)| events)
}

pub fn write_events_to(events: &[SessionEvent], mut out: impl Write) -> std::io::Result<()> {
    for event in events {
        serde_json::to_writer(&mut out, event)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn write_events(path: impl AsRef<Path>, events: &[SessionEvent]) -> Result<(), DataError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| DataError::io(path, e))?;
    write_events_to(events, BufWriter::new(file)).map_err(|e| DataError::io(path, e))
}

/// Coordinate frame of an external dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "frame", rename_all = "snake_case")]
pub enum Frame {
    /// Millimetres in the layout frame.
    Mm,
    /// Fractions of keyboard width from the layout's top-left corner.
    Normalized,
    /// Pixels with the origin at the layout's top-left corner.
    Pixels { px_per_mm: f64 },
}

impl Frame {
    fn to_mm(self, x: f64, y: f64, layout: &KeyboardLayout) -> Point {
        match self {
            Frame::Mm => Point::new(x, y),
            Frame::Normalized => layout.denormalize(Point::new(x, y)),
            Frame::Pixels { px_per_mm } => {
                let origin = layout.denormalize(Point::new(0.0, 0.0));
                Point::new(origin.x + x / px_per_mm, origin.y + y / px_per_mm)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ImportReport {
    pub files: usize,
    pub records: usize,
    pub samples: usize,
    pub techniques: BTreeMap<String, usize>,
    pub distinct_words: usize,
    /// Fraction of distinct words found in the lexicon, when one was given.
    pub word_coverage: Option<f64>,
    /// Records dropped because the word was not lowercase a–z after folding.
    pub skipped_records: usize,
}

const RECORD_ID: &[&str] = &["record_id", "trial_id", "attempt_id", "swipe_id", "word_id"];
const WORD: &[&str] = &["intended_word", "word", "target_word", "target"];
const TECHNIQUE: &[&str] = &["technique", "condition", "method"];
const CONTEXT: &[&str] = &["context", "phrase_context"];
const TIME_S: &[&str] = &["t", "t_s", "time_s", "time", "timestamp"];
const TIME_MS: &[&str] = &["t_ms", "time_ms", "timestamp_ms"];
const X: &[&str] = &["x_mm", "x", "gaze_x", "hit_x"];
const Y: &[&str] = &["y_mm", "y", "gaze_y", "hit_y"];
const VALID: &[&str] = &["valid", "validity", "is_valid"];
const DIR: [&[&str]; 3] = [&["gaze_dir_x", "dir_x"], &["gaze_dir_y", "dir_y"], &["gaze_dir_z", "dir_z"]];

struct Columns {
    record_id: usize,
    word: usize,
    technique: Option<usize>,
    context: Option<usize>,
    time: usize,
    time_scale: f64,
    x: usize,
    y: usize,
    valid: Option<usize>,
    dir: Option<[usize; 3]>,
    other: Vec<usize>,
}

impl Columns {
    fn resolve(headers: &[String]) -> Option<Self> {
        let find = |names: &[&str]| headers.iter().position(|h| names.contains(&h.trim().to_ascii_lowercase().as_str()));
        let (time, time_scale) = match find(TIME_MS) {
            Some(i) => (i, 1e-3),
            None => (find(TIME_S)?, 1.0),
        };
        let dir = match (find(DIR[0]), find(DIR[1]), find(DIR[2])) {
            (Some(a), Some(b), Some(c)) => Some([a, b, c]),
            _ => None,
        };
        let mut cols = Columns {
            record_id: find(RECORD_ID)?,
            word: find(WORD)?,
            technique: find(TECHNIQUE),
            context: find(CONTEXT),
            time,
            time_scale,
            x: find(X)?,
            y: find(Y)?,
            valid: find(VALID),
            dir,
            other: Vec::new(),
        };
        let mut used: BTreeSet<usize> = [cols.record_id, cols.word, cols.time, cols.x, cols.y].into();
        used.extend(cols.technique);
        used.extend(cols.context);
        used.extend(cols.valid);
        used.extend(cols.dir.into_iter().flatten());
        cols.other = (0..headers.len()).filter(|i| !used.contains(i)).collect();
        Some(cols)
    }
}

fn csv_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), DataError> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| DataError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    for path in entries {
        if path.is_dir() {
            csv_files(&path, out)?;
        } else if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
            out.push(path);
        }
    }
    Ok(())
}

fn parse_bool(s: &str) -> bool {
    !matches!(s.trim().to_ascii_lowercase().as_str(), "0" | "false" | "no" | "invalid")
}

/// Imports every CSV file under `source_dir`. Each row is one gaze sample;
/// rows sharing a record id (within a file) form one record, in file order.
/// Columns that are not mapped are kept in `metadata.columns`: a scalar when
/// constant across the record, otherwise one value per sample.
pub fn import_dataset(
    source_dir: impl AsRef<Path>,
    frame: Frame,
    layout: &KeyboardLayout,
    lexicon: Option<&Lexicon>,
) -> Result<(Vec<TraceRecord>, ImportReport), DataError> {
    let source_dir = source_dir.as_ref();
    if !source_dir.is_dir() {
        return Err(DataError::DatasetNotFound(source_dir.to_path_buf()));
    }
    let mut files = Vec::new();
    csv_files(source_dir, &mut files)?;
    if files.is_empty() {
        return Err(DataError::DatasetNotFound(source_dir.to_path_buf()));
    }
    let mut report = ImportReport { files: files.len(), ..ImportReport::default() };
    let mut records = Vec::new();
    for path in &files {
        import_file(path, frame, layout, &mut records, &mut report)?;
    }
    let words: BTreeSet<&str> = records.iter().map(|r| r.intended_word.as_str()).collect();
    report.records = records.len();
    report.samples = records.iter().map(|r| r.samples.len()).sum();
    report.distinct_words = words.len();
    report.word_coverage = lexicon.filter(|_| !words.is_empty()).map(|lex| {
        words.iter().filter(|w| lex.contains(w)).count() as f64 / words.len() as f64
    });
    for r in &records {
        *report.techniques.entry(r.technique.clone()).or_default() += 1;
    }
    Ok((records, report))
}

struct Pending {
    record: TraceRecord,
    other: Vec<Vec<String>>,
    first_line: usize,
}

fn import_file(
    path: &Path,
    frame: Frame,
    layout: &KeyboardLayout,
    records: &mut Vec<TraceRecord>,
    report: &mut ImportReport,
) -> Result<(), DataError> {
    let parse_err = |line: usize, message: String| DataError::Parse { path: path.to_path_buf(), line, message };
    let mut reader = csv::ReaderBuilder::new().flexible(false).from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => DataError::io(path, io),
        other => parse_err(1, format!("{other:?}")),
    })?;
    let headers: Vec<String> =
        reader.headers().map_err(|e| parse_err(1, e.to_string()))?.iter().map(str::to_string).collect();
    let cols = Columns::resolve(&headers).ok_or_else(|| DataError::UnknownSchema { path: path.to_path_buf(), columns: headers.clone() })?;

    let mut pending: Vec<Pending> = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| parse_err(line, e.to_string()))?;
        let num = |c: usize, name: &str| -> Result<f64, DataError> {
            row[c].trim().parse::<f64>().map_err(|_| parse_err(line, format!("{name} {:?} is not a number", &row[c])))
        };
        let t = num(cols.time, "time")? * cols.time_scale;
        let p = frame.to_mm(num(cols.x, "x")?, num(cols.y, "y")?, layout);
        let gaze_dir = match cols.dir {
            Some([a, b, c]) => Some([num(a, "gaze_dir_x")?, num(b, "gaze_dir_y")?, num(c, "gaze_dir_z")?]),
            None => None,
        };
        let sample = GazeSample {
            t,
            x_mm: p.x,
            y_mm: p.y,
            gaze_dir,
            valid: cols.valid.is_none_or(|c| parse_bool(&row[c])),
        };
        let id = row[cols.record_id].trim().to_string();
        let slot = *index.entry(id.clone()).or_insert_with(|| {
            pending.push(Pending {
                record: TraceRecord {
                    record_id: id,
                    technique: cols.technique.map_or("unknown".into(), |c| row[c].trim().to_string()),
                    intended_word: row[cols.word].trim().to_lowercase(),
                    context: cols.context.map_or(String::new(), |c| row[c].trim().to_string()),
                    samples: Vec::new(),
                    hit_points: None,
                    metadata: Value::Null,
                },
                other: vec![Vec::new(); cols.other.len()],
                first_line: line,
            });
            pending.len() - 1
        });
        let entry = &mut pending[slot];
        entry.record.samples.push(sample);
        for (k, &c) in cols.other.iter().enumerate() {
            entry.other[k].push(row[c].to_string());
        }
    }

    for Pending { mut record, other, first_line } in pending {
        if !record.intended_word.bytes().all(|b| b.is_ascii_lowercase()) || record.intended_word.is_empty() {
            report.skipped_records += 1;
            continue;
        }
        let mut columns = serde_json::Map::new();
        for (k, &c) in cols.other.iter().enumerate() {
            let values = &other[k];
            let value = if values.iter().all(|v| *v == values[0]) {
                Value::String(values[0].clone())
            } else {
                Value::Array(values.iter().cloned().map(Value::String).collect())
            };
            columns.insert(headers[c].clone(), value);
        }
        record.metadata = serde_json::json!({
            "source": path.file_name().map(|n| n.to_string_lossy().into_owned()),
            "frame": frame,
            "columns": columns,
        });
        record.validate().map_err(|m| parse_err(first_line, format!("record {}: {m}", record.record_id)))?;
        records.push(record);
    }
    Ok(())
}
