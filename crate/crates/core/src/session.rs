//! Pinch-delimited typing session.
//!
//! A pinch opens a swipe, gaze samples stream in, and the release either
//! cancels (released over delete), types one letter (the gaze never left
//! the start key) or commits the top decoded word plus a space. Delete right
//! after a committed word removes the whole word.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::decoder::{DecodeError, Decoder, Ranking};
use crate::geometry::{KeyLabel, Point};
use crate::lm::CharNgramModel;
use crate::metrics::InputEntry;
use crate::tap::{infer_letter, TapConfig};
use crate::trace::{self, GazeSample};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SessionError {
    #[error("a swipe is already in progress")]
    SwipeInProgress,
    #[error("no swipe in progress")]
    NoSwipe,
    #[error("no candidates to choose from")]
    NoCandidates,
    #[error("candidate index {index} out of range ({available} available)")]
    CandidateOutOfRange { index: usize, available: usize },
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

/// One input event. Every event carries its time in seconds on the
/// session clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SessionEvent {
    PinchDown { x_mm: f64, y_mm: f64, t: f64 },
    Gaze { x_mm: f64, y_mm: f64, t: f64, #[serde(default = "yes")] valid: bool },
    PinchUp { x_mm: f64, y_mm: f64, t: f64 },
    SelectCandidate { index: usize, t: f64 },
    GazeAtDelete { t: f64 },
    DeletePress { t: f64 },
    KeyTap { x_mm: f64, y_mm: f64, t: f64 },
    /// Marks the start of a transcription trial; ignored by the session.
    TrialStart { trial_id: String, presented: String, t: f64 },
    TrialEnd { t: f64 },
}

fn yes() -> bool {
    true
}

impl SessionEvent {
    pub fn t(&self) -> f64 {
        match self {
            SessionEvent::PinchDown { t, .. }
            | SessionEvent::Gaze { t, .. }
            | SessionEvent::PinchUp { t, .. }
            | SessionEvent::SelectCandidate { t, .. }
            | SessionEvent::GazeAtDelete { t }
            | SessionEvent::DeletePress { t }
            | SessionEvent::KeyTap { t, .. }
            | SessionEvent::TrialStart { t, .. }
            | SessionEvent::TrialEnd { t } => *t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LastAction {
    SwipeCommit,
    CandidateSwap,
    CharEntry,
    Delete,
    #[default]
    None,
}

#[derive(Debug, Clone, PartialEq)]
struct SwipeBuffer {
    samples: Vec<GazeSample>,
    start_key: Option<KeyLabel>,
    start_point: Point,
    t0: f64,
    /// Key of the newest centroid at the last mid-swipe refresh.
    shown_key: Option<KeyLabel>,
}

/// Decoded word that is still open for reselection.
#[derive(Debug, Clone, PartialEq)]
struct CommittedWord {
    word: String,
    alternates: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SessionState {
    pub committed_text: String,
    swipe: Option<SwipeBuffer>,
    live: Option<Ranking>,
    last_word: Option<CommittedWord>,
    pub last_action: LastAction,
}

impl SessionState {
    pub fn swipe_in_progress(&self) -> bool {
        self.swipe.is_some()
    }

    /// Latest ranking: mid-swipe while a swipe is open, the commit ranking
    /// right after a commit, otherwise `None`.
    pub fn live_candidates(&self) -> Option<&Ranking> {
        self.live.as_ref()
    }

    /// Words that can replace the last committed word.
    pub fn alternates(&self) -> &[String] {
        self.last_word.as_ref().map_or(&[], |w| &w.alternates)
    }

    /// Completed words of the committed text; a trailing partial word is
    /// not context.
    pub fn context_words(&self) -> Vec<&str> {
        let text = self.committed_text.as_str();
        let complete = match text.rfind(' ') {
            Some(i) => &text[..i],
            None => "",
        };
        complete.split_whitespace().collect()
    }
}

/// Immutable models shared by every session.
#[derive(Debug, Clone)]
pub struct TypingEngine {
    pub decoder: Decoder,
    pub chars: CharNgramModel,
    pub tap: TapConfig,
}

impl TypingEngine {
    pub fn new(decoder: Decoder, chars: CharNgramModel, tap: TapConfig) -> Self {
        Self { decoder, chars, tap }
    }
}

/// Result of releasing the pinch.
#[derive(Debug, Clone, PartialEq)]
pub enum PinchOutcome {
    /// Released over delete: swipe dropped, text untouched.
    Cancelled,
    /// Gaze stayed on the start key: one character typed.
    Tap(char),
    /// Top candidate committed; the ranking is kept for reselection.
    Commit(Ranking),
    /// Nothing decodable (empty lexicon).
    NoCandidates,
}

/// Per-swipe bookkeeping used for match-rate metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwipeRecord {
    pub candidates: Vec<String>,
    pub committed: String,
    pub pruned_points: usize,
    /// Index of the word within the committed text.
    pub word_index: usize,
}

/// What a client should show after an event.
#[derive(Debug, Clone, PartialEq)]
pub enum Response {
    None,
    Candidates(Ranking),
    Commit { ranking: Ranking, text: String },
    Text(String),
    Peek(String),
}

#[derive(Debug, Clone)]
pub struct Session {
    engine: Arc<TypingEngine>,
    state: SessionState,
    input: Vec<InputEntry>,
    swipes: Vec<SwipeRecord>,
}

impl Session {
    pub fn new(engine: Arc<TypingEngine>) -> Self {
        Self { engine, state: SessionState::default(), input: Vec::new(), swipes: Vec::new() }
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    /// Character-level input stream, for keystroke classification.
    pub fn input_log(&self) -> &[InputEntry] {
        &self.input
    }

    pub fn swipes(&self) -> &[SwipeRecord] {
        &self.swipes
    }

    pub fn engine(&self) -> &TypingEngine {
        &self.engine
    }

    /// Text shown in the peek window next to the delete key.
    pub fn peek(&self) -> &str {
        &self.state.committed_text
    }

    pub fn apply(&mut self, event: &SessionEvent) -> Result<Response, SessionError> {
        let text = |s: &Self| s.state.committed_text.clone();
        Ok(match *event {
            SessionEvent::PinchDown { x_mm, y_mm, t } => {
                self.on_pinch_down(Point::new(x_mm, y_mm), t)?;
                Response::None
            }
            SessionEvent::Gaze { x_mm, y_mm, t, valid } => {
                match self.on_gaze(Point::new(x_mm, y_mm), t, valid)? {
                    Some(ranking) => Response::Candidates(ranking),
                    None => Response::None,
                }
            }
            SessionEvent::PinchUp { x_mm, y_mm, t } => match self.on_pinch_up(Point::new(x_mm, y_mm), t)? {
                PinchOutcome::Commit(ranking) => Response::Commit { ranking, text: text(self) },
                _ => Response::Text(text(self)),
            },
            SessionEvent::SelectCandidate { index, .. } => {
                self.select_candidate(index)?;
                Response::Text(text(self))
            }
            SessionEvent::GazeAtDelete { .. } => Response::Peek(self.peek().to_string()),
            SessionEvent::DeletePress { .. } => {
                self.delete_press();
                Response::Text(text(self))
            }
            SessionEvent::KeyTap { x_mm, y_mm, .. } => {
                self.key_tap(Point::new(x_mm, y_mm));
                Response::Text(text(self))
            }
            SessionEvent::TrialStart { .. } | SessionEvent::TrialEnd { .. } => Response::None,
        })
    }

    pub fn on_pinch_down(&mut self, point: Point, t: f64) -> Result<(), SessionError> {
        if self.state.swipe.is_some() {
            return Err(SessionError::SwipeInProgress);
        }
        let start_key = self.engine.decoder.layout().key_at(point);
        self.state.swipe = Some(SwipeBuffer {
            samples: vec![GazeSample::at(0.0, point)],
            start_key,
            start_point: point,
            t0: t,
            shown_key: start_key,
        });
        self.state.live = None;
        Ok(())
    }

    /// Buffers a gaze sample. When the newest fixation centroid has moved to
    /// a different key, re-decodes with the mid-swipe weighting and returns
    /// the new ranking.
    pub fn on_gaze(&mut self, point: Point, t: f64, valid: bool) -> Result<Option<Ranking>, SessionError> {
        let engine = Arc::clone(&self.engine);
        let decoder = &engine.decoder;
        let swipe = self.state.swipe.as_mut().ok_or(SessionError::NoSwipe)?;
        let sample = GazeSample { valid, ..GazeSample::at(t - swipe.t0, point) };
        let prev = *swipe.samples.last().expect("swipe buffer starts with the pinch sample");
        swipe.samples.push(sample);

        // The newest centroid can only move when a fixation sample arrives.
        let is_fixation = prev.valid
            && valid
            && trace::angular_velocity(&prev, &sample, decoder.layout())
                .is_ok_and(|v| v < decoder.config().pipeline.ivt_threshold_deg_s);
        if !is_fixation {
            return Ok(None);
        }
        let pruned = trace::prune(&swipe.samples, &decoder.config().pipeline, decoder.layout())
            .map_err(DecodeError::from)?;
        let newest = pruned.points.last().expect("prune never returns an empty trace");
        let key = decoder.layout().key_at(decoder.layout().denormalize(newest.xy()));
        if key.is_none() || key == swipe.shown_key {
            return Ok(None);
        }
        swipe.shown_key = key;
        let ranking = decoder.decode_midswipe(&pruned, &self.state.context_words())?;
        self.state.live = Some(ranking.clone());
        Ok(Some(ranking))
    }

    pub fn on_pinch_up(&mut self, point: Point, t: f64) -> Result<PinchOutcome, SessionError> {
        let engine = Arc::clone(&self.engine);
        let decoder = &engine.decoder;
        let mut swipe = self.state.swipe.take().ok_or(SessionError::NoSwipe)?;
        self.state.live = None;
        let layout = decoder.layout();
        if layout.key_at(point) == Some(KeyLabel::Delete) {
            return Ok(PinchOutcome::Cancelled);
        }
        let release = GazeSample::at(t - swipe.t0, point);
        if swipe.samples.last().is_none_or(|last| release.t > last.t) {
            swipe.samples.push(release);
        }
        let pruned =
            trace::prune(&swipe.samples, &decoder.config().pipeline, layout).map_err(DecodeError::from)?;

        let stayed_on_start = swipe.start_key.is_some()
            && pruned.points.iter().all(|p| layout.key_at(layout.denormalize(p.xy())) == swipe.start_key);
        if stayed_on_start {
            let c = match swipe.start_key {
                Some(KeyLabel::Space) => ' ',
                _ => self.infer_tap(swipe.start_point),
            };
            self.type_char(c);
            return Ok(PinchOutcome::Tap(c));
        }

        let ranking = decoder.decode(&pruned, &self.state.context_words())?;
        let Some(top) = ranking.top().map(|c| c.word.clone()) else {
            return Ok(PinchOutcome::NoCandidates);
        };
        let word_index = self.state.context_words().len();
        self.insert(&format!("{top} "));
        self.swipes.push(SwipeRecord {
            candidates: ranking.words().iter().map(|w| w.to_string()).collect(),
            committed: top.clone(),
            pruned_points: pruned.len(),
            word_index,
        });
        self.state.last_word = Some(CommittedWord {
            word: top,
            alternates: ranking.candidates[1..].iter().map(|c| c.word.clone()).collect(),
        });
        self.state.last_action = LastAction::SwipeCommit;
        self.state.live = Some(ranking.clone());
        Ok(PinchOutcome::Commit(ranking))
    }

    /// Replaces the last committed word with alternate `index`; the
    /// replaced word takes the alternate's slot.
    pub fn select_candidate(&mut self, index: usize) -> Result<(), SessionError> {
        let swappable = matches!(self.state.last_action, LastAction::SwipeCommit | LastAction::CandidateSwap);
        let available = self.state.alternates().len();
        if !swappable || available == 0 {
            return Err(SessionError::NoCandidates);
        }
        if index >= available {
            return Err(SessionError::CandidateOutOfRange { index, available });
        }
        let mut last = self.state.last_word.take().expect("alternates imply a committed word");
        let old = format!("{} ", last.word);
        debug_assert!(self.state.committed_text.ends_with(&old));
        self.remove_chars(old.chars().count());
        let chosen = std::mem::replace(&mut last.alternates[index], last.word.clone());
        self.insert(&format!("{chosen} "));
        if let Some(record) = self.swipes.last_mut() {
            record.committed = chosen.clone();
        }
        last.word = chosen;
        self.state.last_word = Some(last);
        self.state.last_action = LastAction::CandidateSwap;
        Ok(())
    }

    /// Whole-word delete right after a committed word, otherwise one
    /// character. No-op on empty text.
    pub fn delete_press(&mut self) {
        if self.state.committed_text.is_empty() {
            return;
        }
        let n = match (&self.state.last_action, &self.state.last_word) {
            (LastAction::SwipeCommit, Some(w)) => w.word.chars().count() + 1,
            _ => 1,
        };
        self.remove_chars(n);
        self.clear_candidates();
        self.state.last_action = LastAction::Delete;
    }

    /// A direct tap outside any swipe.
    pub fn key_tap(&mut self, point: Point) {
        match self.engine.decoder.layout().key_at(point) {
            Some(KeyLabel::Delete) => self.delete_press(),
            Some(KeyLabel::Space) => self.type_char(' '),
            _ => {
                let c = self.infer_tap(point);
                self.type_char(c);
            }
        }
    }

    fn infer_tap(&self, point: Point) -> char {
        let e = &self.engine;
        infer_letter(point, &self.state.committed_text, e.decoder.layout(), &e.chars, &e.tap)[0].letter
    }

    fn type_char(&mut self, c: char) {
        self.insert(&c.to_string());
        self.clear_candidates();
        self.state.last_action = LastAction::CharEntry;
    }

    fn clear_candidates(&mut self) {
        self.state.last_word = None;
        self.state.live = None;
    }

    fn insert(&mut self, s: &str) {
        self.state.committed_text.push_str(s);
        self.input.extend(s.chars().map(InputEntry::Char));
    }

    fn remove_chars(&mut self, n: usize) {
        for _ in 0..n {
            if self.state.committed_text.pop().is_some() {
                self.input.push(InputEntry::Backspace);
            }
        }
    }
}

/// Replays `events` through a fresh session. Protocol errors are returned
/// with the index of the offending event.
pub fn replay(engine: Arc<TypingEngine>, events: &[SessionEvent]) -> Result<Session, (usize, SessionError)> {
    let mut session = Session::new(engine);
    for (i, event) in events.iter().enumerate() {
        session.apply(event).map_err(|e| (i, e))?;
    }
    Ok(session)
}
