//! Word decoding: align a pruned gaze trace against key-centre templates
//! with spatiotemporal DTW, turn the distances into probabilities and fuse
//! them with the word language model.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::geometry::{GeometryError, KeyboardLayout, Point, GAP_H_MM, KEY_WIDTH_MM};
use crate::lm::{Lexicon, WordNgramModel};
use crate::trace::{self, GazeSample, PipelineConfig, PrunedTrace, TraceError};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DecodeError {
    #[error("cannot align an empty sequence")]
    EmptySequence,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("invalid decoder config: {0}")]
    InvalidConfig(&'static str),
}

/// What the third DTW coordinate holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeAxis {
    /// Point rank rescaled to `[0, temporal_weight]` on both sides.
    #[default]
    NormalizedRank,
    /// Gaze timestamps in seconds against 1-based template indices.
    RawTimestamps,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig {
    /// Language-model weight in the fusion exponent.
    pub alpha: f64,
    pub epsilon: f64,
    pub top_k: usize,
    /// First-letter gate radius in mm.
    pub first_letter_radius_mm: f64,
    pub temporal_weight: f64,
    pub use_time_dim: bool,
    pub use_pruning: bool,
    /// Restrict candidates to at most `4 * trace_len + 2` letters.
    pub length_gate: bool,
    pub time_axis: TimeAxis,
    /// Merge consecutive repeated letters into one template point.
    pub collapse_repeats: bool,
    /// Size of the language-model shortlist used when gating leaves nothing.
    pub fallback_shortlist: usize,
    pub pipeline: PipelineConfig,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            epsilon: 1e-8,
            top_k: 4,
            first_letter_radius_mm: KEY_WIDTH_MM + GAP_H_MM,
            temporal_weight: 0.1,
            use_time_dim: true,
            use_pruning: true,
            length_gate: false,
            time_axis: TimeAxis::NormalizedRank,
            collapse_repeats: true,
            fallback_shortlist: 64,
            pipeline: PipelineConfig::default(),
        }
    }
}

impl DecoderConfig {
    pub fn validate(&self) -> Result<(), DecodeError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(DecodeError::InvalidConfig("alpha must lie in [0, 1]"));
        }
        if !(self.epsilon > 0.0) {
            return Err(DecodeError::InvalidConfig("epsilon must be positive"));
        }
        if self.top_k < 1 {
            return Err(DecodeError::InvalidConfig("top_k must be at least 1"));
        }
        if !(self.first_letter_radius_mm > 0.0) {
            return Err(DecodeError::InvalidConfig("first-letter radius must be positive"));
        }
        if !(self.temporal_weight >= 0.0) {
            return Err(DecodeError::InvalidConfig("temporal weight must be non-negative"));
        }
        self.pipeline.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemplatePoint {
    pub x: f64,
    pub y: f64,
    /// 1-based position in the word.
    pub idx: usize,
}

/// Key-centre path of a word in normalized keyboard units.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateTrace {
    pub word: String,
    pub points: Vec<TemplatePoint>,
}

/// Builds the template for `word`. Repeated letters stay as repeated points.
pub fn template_trace(word: &str, layout: &KeyboardLayout) -> Result<TemplateTrace, GeometryError> {
    let points = word
        .chars()
        .enumerate()
        .map(|(j, c)| {
            let p = layout.normalize(layout.letter_center(c)?);
            Ok(TemplatePoint { x: p.x, y: p.y, idx: j + 1 })
        })
        .collect::<Result<_, GeometryError>>()?;
    Ok(TemplateTrace { word: word.to_string(), points })
}

/// `i / (n - 1)` for `n > 1`, zero for a single point.
fn rank(i: usize, n: usize) -> f64 {
    if n > 1 {
        i as f64 / (n - 1) as f64
    } else {
        0.0
    }
}

fn dist3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let (dx, dy, dt) = (a[0] - b[0], a[1] - b[1], a[2] - b[2]);
    (dx * dx + dy * dy + dt * dt).sqrt()
}

/// DTW cost between two 3D sequences with Euclidean point distance and the
/// step set {(i-1, j), (i, j-1), (i-1, j-1)}.
pub fn st_dtw(a: &[[f64; 3]], b: &[[f64; 3]]) -> Result<f64, DecodeError> {
    if a.is_empty() || b.is_empty() {
        return Err(DecodeError::EmptySequence);
    }
    let mut prev = vec![f64::INFINITY; b.len() + 1];
    let mut cur = vec![f64::INFINITY; b.len() + 1];
    prev[0] = 0.0;
    for p in a {
        cur[0] = f64::INFINITY;
        for (j, q) in b.iter().enumerate() {
            let best = prev[j + 1].min(cur[j]).min(prev[j]);
            cur[j + 1] = dist3(p, q) + best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[b.len()])
}

/// Gaze trace points with their temporal coordinate for the given config.
pub fn gaze_sequence(trace: &PrunedTrace, config: &DecoderConfig) -> Vec<[f64; 3]> {
    let n = trace.points.len();
    trace
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let tau = match (config.use_time_dim, config.time_axis) {
                (false, _) => 0.0,
                (true, TimeAxis::NormalizedRank) => rank(i, n),
                (true, TimeAxis::RawTimestamps) => p.t,
            };
            [p.x, p.y, tau * config.temporal_weight]
        })
        .collect()
}

fn fill_template_sequence(xy: &[Point], config: &DecoderConfig, out: &mut Vec<[f64; 3]>) {
    out.clear();
    let m = xy.len();
    out.extend(xy.iter().enumerate().map(|(j, p)| {
        let tau = match (config.use_time_dim, config.time_axis) {
            (false, _) => 0.0,
            (true, TimeAxis::NormalizedRank) => rank(j, m),
            (true, TimeAxis::RawTimestamps) => (j + 1) as f64,
        };
        [p.x, p.y, tau * config.temporal_weight]
    }));
}

/// Template points with their temporal coordinate for the given config.
pub fn template_sequence(template: &TemplateTrace, config: &DecoderConfig) -> Vec<[f64; 3]> {
    let xy: Vec<Point> = template.points.iter().map(|p| Point::new(p.x, p.y)).collect();
    let mut out = Vec::new();
    fill_template_sequence(&xy, config, &mut out);
    out
}

/// Min-max maps distances so the smallest becomes 1 and the largest 0.
pub fn normalize_distances(distances: &[f64]) -> Vec<f64> {
    let (lo, hi) = distances
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &d| (lo.min(d), hi.max(d)));
    distances.iter().map(|&d| 1.0 - (d - lo) / ((hi - lo) + 1e-12)).collect()
}

/// Multiplicative fusion `(p_ng + eps)^alpha * p_dist^(1 - alpha)`.
pub fn fuse(p_ng: f64, p_dist: f64, alpha: f64, epsilon: f64) -> f64 {
    (p_ng + epsilon).powf(alpha) * p_dist.powf(1.0 - alpha)
}

/// Mid-swipe language-model boost: 3 with one point, 2 with two, then 1.
pub fn midswipe_weight(points: usize) -> f64 {
    match points {
        0 | 1 => 3.0,
        2 => 2.0,
        _ => 1.0,
    }
}

pub fn length_gate(trace_len: usize) -> usize {
    4 * trace_len + 2
}

/// Words whose first letter's key centre is within `radius_mm` of
/// `first_point_mm`, optionally also capped in length.
pub fn filter_candidates<'a>(
    first_point_mm: Point,
    lexicon: &'a Lexicon,
    layout: &KeyboardLayout,
    radius_mm: f64,
    max_len: Option<usize>,
) -> Vec<&'a str> {
    let letters = layout.letters_within(first_point_mm, radius_mm);
    letters
        .iter()
        .flat_map(|c| lexicon.with_prefix(c.encode_utf8(&mut [0; 4])))
        .filter(|w| max_len.is_none_or(|m| w.len() <= m))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub word: String,
    pub dtw_distance: f64,
    pub p_dist: f64,
    pub p_ng: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Ranking {
    pub candidates: Vec<CandidateScore>,
    /// Wall-clock decode time in microseconds.
    pub latency_us: u64,
    /// Number of words scored.
    pub considered: usize,
    /// True when the language-model shortlist replaced the gated set.
    pub fallback: bool,
}

impl Ranking {
    pub fn words(&self) -> Vec<&str> {
        self.candidates.iter().map(|c| c.word.as_str()).collect()
    }

    pub fn top(&self) -> Option<&CandidateScore> {
        self.candidates.first()
    }

    /// 1-based rank of `word`, if present.
    pub fn rank_of(&self, word: &str) -> Option<usize> {
        self.candidates.iter().position(|c| c.word == word).map(|i| i + 1)
    }
}

/// Ranks candidates: fused score, then `p_dist`, then alphabetical.
pub fn rank_candidates(candidates: &mut [CandidateScore]) {
    candidates.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(b.p_dist.total_cmp(&a.p_dist))
            .then_with(|| a.word.cmp(&b.word))
    });
}

/// Decoder over an immutable layout and language model, with every
/// lexicon template precomputed and bucketed by first letter.
#[derive(Debug, Clone)]
pub struct Decoder {
    layout: KeyboardLayout,
    lm: WordNgramModel,
    config: DecoderConfig,
    templates: Vec<Vec<Point>>,
    by_first_letter: [Vec<u32>; 26],
}

impl Decoder {
    pub fn new(layout: KeyboardLayout, lm: WordNgramModel, config: DecoderConfig) -> Result<Self, DecodeError> {
        config.validate()?;
        let lexicon = lm.lexicon();
        let mut templates = Vec::with_capacity(lexicon.len());
        let mut by_first_letter: [Vec<u32>; 26] = Default::default();
        for (id, word) in lexicon.words().iter().enumerate() {
            let mut points = Vec::with_capacity(word.len());
            let mut last = None;
            for c in word.chars() {
                if config.collapse_repeats && last == Some(c) {
                    continue;
                }
                points.push(layout.normalize(layout.letter_center(c)?));
                last = Some(c);
            }
            templates.push(points);
            let first = word.as_bytes()[0] - b'a';
            by_first_letter[first as usize].push(id as u32);
        }
        Ok(Self { layout, lm, config, templates, by_first_letter })
    }

    pub fn layout(&self) -> &KeyboardLayout {
        &self.layout
    }

    pub fn language_model(&self) -> &WordNgramModel {
        &self.lm
    }

    pub fn config(&self) -> &DecoderConfig {
        &self.config
    }

    /// Copy of this decoder with a different configuration. Templates are
    /// reused unless the repeat handling changes.
    pub fn with_config(&self, config: DecoderConfig) -> Result<Self, DecodeError> {
        if config.collapse_repeats != self.config.collapse_repeats {
            return Self::new(self.layout.clone(), self.lm.clone(), config);
        }
        config.validate()?;
        Ok(Self { config, ..self.clone() })
    }

    fn gated_ids(&self, trace: &PrunedTrace) -> Vec<u32> {
        let first = self.layout.denormalize(trace.points[0].xy());
        let letters = self.layout.letters_within(first, self.config.first_letter_radius_mm);
        let max_len = self.config.length_gate.then(|| length_gate(trace.len()));
        letters
            .iter()
            .flat_map(|c| &self.by_first_letter[(*c as u8 - b'a') as usize])
            .copied()
            .filter(|&id| max_len.is_none_or(|m| self.lm.lexicon().word(id).len() <= m))
            .collect()
    }

    fn score(&self, trace: &PrunedTrace, context: &[&str], alpha: f64) -> Result<Ranking, DecodeError> {
        if trace.is_empty() {
            return Err(DecodeError::EmptySequence);
        }
        let start = Instant::now();
        let lexicon = self.lm.lexicon();
        let mut ids = self.gated_ids(trace);
        let fallback = ids.is_empty();
        if fallback {
            ids = self
                .lm
                .prefix_shortlist(context, self.config.fallback_shortlist)
                .into_iter()
                .filter_map(|w| lexicon.id(w))
                .collect();
        }
        let gaze = gaze_sequence(trace, &self.config);
        let mut template = Vec::new();
        let mut distances = Vec::with_capacity(ids.len());
        for &id in &ids {
            fill_template_sequence(&self.templates[id as usize], &self.config, &mut template);
            distances.push(st_dtw(&gaze, &template)?);
        }
        let p_dist = normalize_distances(&distances);
        let ctx = self.lm.context(context);
        let mut candidates: Vec<CandidateScore> = ids
            .iter()
            .zip(distances.iter().zip(&p_dist))
            .map(|(&id, (&dtw_distance, &p_dist))| {
                let p_ng = self.lm.p_id(id, ctx);
                CandidateScore {
                    word: lexicon.word(id).to_string(),
                    dtw_distance,
                    p_dist,
                    p_ng,
                    score: fuse(p_ng, p_dist, alpha, self.config.epsilon),
                }
            })
            .collect();
        rank_candidates(&mut candidates);
        candidates.truncate(self.config.top_k);
        Ok(Ranking {
            candidates,
            latency_us: start.elapsed().as_micros() as u64,
            considered: ids.len(),
            fallback,
        })
    }

    /// Ranks the top-k words for a pruned trace.
    pub fn decode(&self, trace: &PrunedTrace, context: &[&str]) -> Result<Ranking, DecodeError> {
        self.score(trace, context, self.config.alpha)
    }

    /// The language-model weight used mid-swipe for a trace of `points`.
    pub fn midswipe_alpha(&self, points: usize) -> f64 {
        (self.config.alpha * midswipe_weight(points)).min(1.0)
    }

    /// Like [`Decoder::decode`], with the language model boosted while the
    /// trace is still short.
    pub fn decode_midswipe(&self, trace: &PrunedTrace, context: &[&str]) -> Result<Ranking, DecodeError> {
        self.score(trace, context, self.midswipe_alpha(trace.len()))
    }

    /// Prunes raw samples (unless pruning is disabled) and decodes. The
    /// reported latency covers both steps.
    pub fn decode_samples(&self, samples: &[GazeSample], context: &[&str]) -> Result<Ranking, DecodeError> {
        let start = Instant::now();
        let trace = if self.config.use_pruning {
            trace::prune(samples, &self.config.pipeline, &self.layout)?
        } else {
            trace::raw_trace(samples, &self.layout)?
        };
        let mut ranking = self.decode(&trace, context)?;
        ranking.latency_us = start.elapsed().as_micros() as u64;
        Ok(ranking)
    }

    /// Decodes every valid raw sample without I-VT or DBSCAN.
    pub fn decode_raw_ablation(&self, samples: &[GazeSample], context: &[&str]) -> Result<Ranking, DecodeError> {
        let start = Instant::now();
        let trace = trace::raw_trace(samples, &self.layout)?;
        let mut ranking = self.decode(&trace, context)?;
        ranking.latency_us = start.elapsed().as_micros() as u64;
        Ok(ranking)
    }

    /// Template-perfect trace for `word`: one point per letter at its key
    /// centre, timed one second apart.
    pub fn template_pruned_trace(&self, word: &str) -> Result<PrunedTrace, DecodeError> {
        let template = template_trace(word, &self.layout)?;
        Ok(PrunedTrace {
            points: template
                .points
                .iter()
                .map(|p| trace::TracePoint { x: p.x, y: p.y, t: (p.idx - 1) as f64 })
                .collect(),
            source_count: word.len(),
        })
    }
}
