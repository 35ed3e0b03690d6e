//! Offline evaluation: replaying trace files through the decoder, grid
//! sweeps over the pruning parameters, and text-entry metrics from
//! recorded session event logs.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dataio::TraceRecord;
use crate::decoder::{DecodeError, Decoder};
use crate::metrics::{self, KeystrokeCounts, MetricsError, TrialRecord, TrialRow};
use crate::session::{Session, SessionError, SessionEvent, TypingEngine};
use crate::trace::PipelineConfig;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("no records to evaluate")]
    Empty,
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("event {index}: {source}")]
    Session { index: usize, source: SessionError },
    #[error("trial {trial_id}: {source}")]
    Metrics { trial_id: String, source: MetricsError },
    #[error("event {index}: {message}")]
    Log { index: usize, message: String },
}

/// Outcome of decoding one record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayRow {
    pub record_id: String,
    pub technique: String,
    pub intended_word: String,
    /// 1-based rank of the intended word, `None` if it was not returned.
    pub rank: Option<usize>,
    pub top: Option<String>,
    pub latency_us: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub n: usize,
    pub top1: f64,
    pub top4: f64,
    pub mean_rt_ms: f64,
    pub median_rt_ms: f64,
}

impl Stats {
    pub fn from_rows<'a>(rows: impl IntoIterator<Item = &'a ReplayRow>) -> Option<Self> {
        let rows: Vec<&ReplayRow> = rows.into_iter().collect();
        if rows.is_empty() {
            return None;
        }
        let n = rows.len() as f64;
        let pct = |k: usize| 100.0 * rows.iter().filter(|r| r.rank.is_some_and(|r| r <= k)).count() as f64 / n;
        let mut rt: Vec<f64> = rows.iter().map(|r| r.latency_us as f64 / 1000.0).collect();
        rt.sort_by(f64::total_cmp);
        let mid = rt.len() / 2;
        let median = if rt.len() % 2 == 0 { (rt[mid - 1] + rt[mid]) / 2.0 } else { rt[mid] };
        Some(Stats { n: rows.len(), top1: pct(1), top4: pct(4), mean_rt_ms: rt.iter().sum::<f64>() / n, median_rt_ms: median })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub overall: Stats,
    pub by_technique: BTreeMap<String, Stats>,
    pub rows: Vec<ReplayRow>,
}

/// Decodes one record from its raw samples. Records with no valid sample
/// count as misses.
pub fn decode_record(decoder: &Decoder, record: &TraceRecord) -> Result<ReplayRow, DecodeError> {
    let context = record.context_words();
    let outcome = decoder.decode_samples(&record.samples, &context);
    let (rank, top, latency_us) = match outcome {
        Ok(ranking) => (ranking.rank_of(&record.intended_word), ranking.top().map(|c| c.word.clone()), ranking.latency_us),
        Err(DecodeError::Trace(_)) | Err(DecodeError::EmptySequence) => (None, None, 0),
        Err(e) => return Err(e),
    };
    Ok(ReplayRow {
        record_id: record.record_id.clone(),
        technique: record.technique.clone(),
        intended_word: record.intended_word.clone(),
        rank,
        top,
        latency_us,
    })
}

pub fn replay(decoder: &Decoder, records: &[TraceRecord]) -> Result<ReplayReport, EvalError> {
    if records.is_empty() {
        return Err(EvalError::Empty);
    }
    let rows = records.iter().map(|r| decode_record(decoder, r)).collect::<Result<Vec<_>, _>>()?;
    let mut groups: BTreeMap<&str, Vec<&ReplayRow>> = BTreeMap::new();
    for row in &rows {
        groups.entry(&row.technique).or_default().push(row);
    }
    let by_technique =
        groups.into_iter().filter_map(|(k, v)| Stats::from_rows(v).map(|s| (k.to_string(), s))).collect();
    let overall = Stats::from_rows(&rows).ok_or(EvalError::Empty)?;
    Ok(ReplayReport { overall, by_technique, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub ivt_thresholds: Vec<f64>,
    pub dbscan_eps: Vec<f64>,
    pub dbscan_min_pts: Vec<usize>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self { ivt_thresholds: vec![50.0, 100.0, 150.0], dbscan_eps: vec![0.05, 0.10, 0.15], dbscan_min_pts: (2..=6).collect() }
    }
}

impl SweepGrid {
    pub fn points(&self) -> Vec<PipelineConfig> {
        let mut out = Vec::new();
        for &ivt in &self.ivt_thresholds {
            for &eps in &self.dbscan_eps {
                for &min_pts in &self.dbscan_min_pts {
                    out.push(PipelineConfig { ivt_threshold_deg_s: ivt, dbscan_eps: eps, dbscan_min_pts: min_pts, ..PipelineConfig::default() });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub ivt_threshold: f64,
    pub dbscan_eps: f64,
    pub dbscan_min_pts: usize,
    pub top1: f64,
    pub top4: f64,
    pub mean_rt_ms: f64,
}

/// Replays `records` once per grid point. Every other setting comes from
/// `decoder`'s configuration.
pub fn sweep(decoder: &Decoder, records: &[TraceRecord], grid: &SweepGrid) -> Result<Vec<SweepRow>, EvalError> {
    let mut rows = Vec::new();
    for pipeline in grid.points() {
        let config = crate::decoder::DecoderConfig { pipeline, ..*decoder.config() };
        let report = replay(&decoder.with_config(config)?, records)?;
        rows.push(SweepRow {
            ivt_threshold: pipeline.ivt_threshold_deg_s,
            dbscan_eps: pipeline.dbscan_eps,
            dbscan_min_pts: pipeline.dbscan_min_pts,
            top1: report.overall.top1,
            top4: report.overall.top4,
            mean_rt_ms: report.overall.mean_rt_ms,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub trials: usize,
    pub mean_wpm: Option<f64>,
    pub mean_ter: Option<f64>,
    pub first_match: Option<f64>,
    pub any_match: Option<f64>,
    pub all_miss: Option<f64>,
    pub swipes: usize,
    /// Mean characters per pruned point over committed swipes.
    pub swipe_efficiency: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub final_text: String,
    pub trials: Vec<TrialRecord>,
    pub rows: Vec<TrialRow>,
    pub summary: MetricsSummary,
}

struct OpenTrial {
    id: String,
    presented: String,
    t0: f64,
    text_start: usize,
    log_start: usize,
    swipe_start: usize,
    word_start: usize,
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Replays an event log and scores every trial delimited by
/// `trial_start` / `trial_end`. The space auto-inserted after the final
/// word of a trial is not part of the transcribed text.
pub fn session_metrics(engine: Arc<TypingEngine>, events: &[SessionEvent], k: usize) -> Result<SessionReport, EvalError> {
    let mut session = Session::new(engine);
    let mut open: Option<OpenTrial> = None;
    let mut trials = Vec::new();
    for (index, event) in events.iter().enumerate() {
        session.apply(event).map_err(|source| EvalError::Session { index, source })?;
        match event {
            SessionEvent::TrialStart { trial_id, presented, t } => {
                if open.is_some() {
                    return Err(EvalError::Log { index, message: "trial_start inside an open trial".into() });
                }
                let state = session.state();
                open = Some(OpenTrial {
                    id: trial_id.clone(),
                    presented: presented.clone(),
                    t0: *t,
                    text_start: state.committed_text.len(),
                    log_start: session.input_log().len(),
                    swipe_start: session.swipes().len(),
                    word_start: state.context_words().len(),
                });
            }
            SessionEvent::TrialEnd { t } => {
                let trial = open.take().ok_or(EvalError::Log { index, message: "trial_end without trial_start".into() })?;
                trials.push(close_trial(&session, trial, *t)?);
            }
            _ => {}
        }
    }
    let rows = trials
        .iter()
        .map(|(t, _)| t.row(k).map_err(|source| EvalError::Metrics { trial_id: t.trial_id.clone(), source }))
        .collect::<Result<Vec<_>, _>>()?;
    let ranks: Vec<Option<usize>> = trials.iter().flat_map(|(t, _)| t.swipe_ranks.iter().copied()).collect();
    let rates = metrics::match_rates(&ranks, k).ok();
    let efficiency = mean(trials.iter().flat_map(|(_, e)| e.iter().copied()));
    let summary = MetricsSummary {
        trials: trials.len(),
        mean_wpm: mean(rows.iter().map(|r| r.wpm)),
        mean_ter: mean(rows.iter().map(|r| r.ter)),
        first_match: rates.map(|r| r.first_match),
        any_match: rates.map(|r| r.any_match),
        all_miss: rates.map(|r| r.all_miss),
        swipes: ranks.len(),
        swipe_efficiency: efficiency,
    };
    let trials = trials.into_iter().map(|(t, _)| t).collect();
    Ok(SessionReport { final_text: session.state().committed_text.clone(), trials, rows, summary })
}

/// Scores one trial; also returns the swipe efficiency of every swipe
/// whose intended word is known.
fn close_trial(session: &Session, trial: OpenTrial, t_end: f64) -> Result<(TrialRecord, Vec<f64>), EvalError> {
    let err = |source| EvalError::Metrics { trial_id: trial.id.clone(), source };
    let text = &session.state().committed_text;
    let mut transcribed = text.get(trial.text_start..).unwrap_or("").to_string();
    let mut log = session.input_log()[trial.log_start..].to_vec();
    if transcribed.ends_with(' ') && !trial.presented.ends_with(' ') && log.last() == Some(&metrics::InputEntry::Char(' ')) {
        transcribed.pop();
        log.pop();
    }
    let keystrokes: KeystrokeCounts = metrics::classify_keystrokes(&trial.presented, &transcribed, &log).map_err(err)?;
    let presented_words: Vec<&str> = trial.presented.split_whitespace().collect();
    let swipes = &session.swipes()[trial.swipe_start..];
    let intended = |s: &crate::session::SwipeRecord| presented_words.get(s.word_index.checked_sub(trial.word_start)?).copied();
    let swipe_ranks = swipes
        .iter()
        .map(|s| intended(s).and_then(|w| s.candidates.iter().position(|c| c == w)).map(|p| p + 1))
        .collect();
    let efficiency = swipes
        .iter()
        .filter_map(|s| metrics::swipe_efficiency(intended(s)?.chars().count(), s.pruned_points).ok())
        .collect();
    let duration_s = t_end - trial.t0;
    if !(duration_s > 0.0) {
        return Err(err(MetricsError::Domain("duration must be positive")));
    }
    let record = TrialRecord {
        trial_id: trial.id.clone(),
        presented: trial.presented.clone(),
        transcribed,
        duration_s,
        keystrokes,
        swipe_ranks,
        pruned_points: swipes.iter().map(|s| s.pruned_points).collect(),
    };
    Ok((record, efficiency))
}
