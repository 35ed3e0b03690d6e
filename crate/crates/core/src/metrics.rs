//! Text-entry metrics: words per minute, total error rate with the
//! correct / incorrect-fixed / incorrect-not-fixed keystroke taxonomy,
//! candidate match rates, learning rate and swipe efficiency.

use std::io::Write;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricsError {
    #[error("{0}")]
    Domain(&'static str),
    #[error("input log replays to {replayed:?}, expected {expected:?}")]
    Integrity { replayed: String, expected: String },
}

/// One entry of the character-level input stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InputEntry {
    Char(char),
    Backspace,
}

/// Words per minute with a word fixed at five characters.
pub fn wpm(transcribed_chars: usize, duration_s: f64) -> Result<f64, MetricsError> {
    if !(duration_s > 0.0) {
        return Err(MetricsError::Domain("duration must be positive"));
    }
    Ok(transcribed_chars as f64 / 5.0 / (duration_s / 60.0))
}

/// Total error rate `(IF + INF) / (C + IF + INF)`.
pub fn ter(correct: usize, incorrect_fixed: usize, incorrect_not_fixed: usize) -> Result<f64, MetricsError> {
    let total = correct + incorrect_fixed + incorrect_not_fixed;
    if total == 0 {
        return Err(MetricsError::Domain("no keystrokes"));
    }
    Ok((incorrect_fixed + incorrect_not_fixed) as f64 / total as f64)
}

/// Levenshtein distance over characters.
pub fn min_string_distance(a: &str, b: &str) -> usize {
    let b: Vec<char> = b.chars().collect();
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.chars().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let next = (row[j + 1] + 1).min(row[j] + 1).min(diag + usize::from(ca != *cb));
            diag = row[j + 1];
            row[j + 1] = next;
        }
    }
    row[b.len()]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct KeystrokeCounts {
    pub correct: usize,
    pub incorrect_fixed: usize,
    pub incorrect_not_fixed: usize,
}

impl KeystrokeCounts {
    pub fn ter(&self) -> Result<f64, MetricsError> {
        ter(self.correct, self.incorrect_fixed, self.incorrect_not_fixed)
    }
}

/// Replays `log`, checks it produces `transcribed` and classifies
/// keystrokes: INF is the string distance between presented and
/// transcribed, IF counts characters entered and later erased, and C is
/// `max(|P|, |T|) - INF`.
pub fn classify_keystrokes(
    presented: &str,
    transcribed: &str,
    log: &[InputEntry],
) -> Result<KeystrokeCounts, MetricsError> {
    let mut text = String::new();
    let mut erased = 0;
    for entry in log {
        match entry {
            InputEntry::Char(c) => text.push(*c),
            InputEntry::Backspace => {
                if text.pop().is_some() {
                    erased += 1;
                }
            }
        }
    }
    if text != transcribed {
        return Err(MetricsError::Integrity { replayed: text, expected: transcribed.to_string() });
    }
    let inf = min_string_distance(presented, transcribed);
    let longest = presented.chars().count().max(transcribed.chars().count());
    Ok(KeystrokeCounts { correct: longest - inf, incorrect_fixed: erased, incorrect_not_fixed: inf })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchRates {
    pub first_match: f64,
    pub any_match: f64,
    pub all_miss: f64,
}

/// Fractions of swipes whose intended word came first, within the top
/// `k`, or nowhere. `ranks` holds the 1-based rank or `None` for a miss.
pub fn match_rates(ranks: &[Option<usize>], k: usize) -> Result<MatchRates, MetricsError> {
    if ranks.is_empty() {
        return Err(MetricsError::Domain("no swipe outcomes"));
    }
    let n = ranks.len() as f64;
    let first = ranks.iter().filter(|r| **r == Some(1)).count() as f64 / n;
    let hits = ranks.iter().filter(|r| r.is_some_and(|r| r >= 1 && r <= k)).count();
    let any = hits as f64 / n;
    let miss = (ranks.len() - hits) as f64 / n;
    Ok(MatchRates { first_match: first, any_match: any, all_miss: miss })
}

/// Ordinary least-squares slope of WPM against session number.
pub fn learning_rate(session_wpm: &[f64]) -> Result<f64, MetricsError> {
    if session_wpm.len() < 2 {
        return Err(MetricsError::Domain("need at least two sessions"));
    }
    let n = session_wpm.len() as f64;
    let mean_x = (n + 1.0) / 2.0;
    let mean_y = session_wpm.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in session_wpm.iter().enumerate() {
        let dx = (i + 1) as f64 - mean_x;
        sxy += dx * (y - mean_y);
        sxx += dx * dx;
    }
    Ok(sxy / sxx)
}

/// Characters typed per pruned gaze point.
pub fn swipe_efficiency(word_len_chars: usize, pruned_points: usize) -> Result<f64, MetricsError> {
    if pruned_points == 0 {
        return Err(MetricsError::Domain("no pruned points"));
    }
    Ok(word_len_chars as f64 / pruned_points as f64)
}

/// Outcome of one transcription trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: String,
    pub presented: String,
    pub transcribed: String,
    pub duration_s: f64,
    pub keystrokes: KeystrokeCounts,
    /// Rank of the intended word per swipe, `None` for a miss.
    pub swipe_ranks: Vec<Option<usize>>,
    pub pruned_points: Vec<usize>,
}

/// One CSV row per trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial_id: String,
    pub wpm: f64,
    pub ter: f64,
    pub first_match: Option<f64>,
    pub any_match: Option<f64>,
    pub duration_s: f64,
}

impl TrialRecord {
    pub fn row(&self, k: usize) -> Result<TrialRow, MetricsError> {
        let rates = match_rates(&self.swipe_ranks, k).ok();
        Ok(TrialRow {
            trial_id: self.trial_id.clone(),
            wpm: wpm(self.transcribed.chars().count(), self.duration_s)?,
            ter: self.keystrokes.ter().unwrap_or(0.0),
            first_match: rates.map(|r| r.first_match),
            any_match: rates.map(|r| r.any_match),
            duration_s: self.duration_s,
        })
    }
}

pub fn write_trial_csv(rows: &[TrialRow], out: impl Write) -> csv::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}
