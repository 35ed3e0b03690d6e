//! Synthetic gaze traces: dwell on each letter's key centre, saccade in a
//! straight line to the next one, sample at a fixed rate. Noise comes as a
//! Gaussian landing error per fixation, an optional calibration offset on
//! the start fixation, and optional per-sample noise.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataio::TraceRecord;
use crate::geometry::{GeometryError, KeyboardLayout, Point};
use crate::lm::Lexicon;
use crate::trace::GazeSample;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub sample_rate_hz: f64,
    pub dwell_ms: f64,
    pub saccade_deg_s: f64,
    /// Landing error σ per fixation and axis, in key widths.
    pub jitter_key_widths: f64,
    /// Independent σ per sample and axis, in millimetres.
    pub sample_noise_mm: f64,
    /// Offset applied to the first fixation.
    pub drift_mm: f64,
    /// Fraction of traces that get the drift offset.
    pub drift_fraction: f64,
    pub min_word_len: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            sample_rate_hz: 200.0,
            dwell_ms: 250.0,
            saccade_deg_s: 500.0,
            jitter_key_widths: 0.0,
            sample_noise_mm: 0.0,
            drift_mm: 0.0,
            drift_fraction: 0.0,
            min_word_len: 2,
        }
    }
}

impl SynthConfig {
    pub fn noisy() -> Self {
        Self { jitter_key_widths: 0.3, drift_mm: 20.0, drift_fraction: 0.1, ..Self::default() }
    }
}

/// A dwell at one point for a number of samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fixation {
    pub at: Point,
    pub samples: usize,
}

/// One fixation per run of equal letters; a double letter dwells twice as
/// long.
pub fn fixations(word: &str, layout: &KeyboardLayout, config: &SynthConfig) -> Result<Vec<Fixation>, GeometryError> {
    let dwell = (config.dwell_ms / 1000.0 * config.sample_rate_hz).round().max(1.0) as usize;
    let mut out: Vec<Fixation> = Vec::new();
    let mut last = None;
    for c in word.chars() {
        let at = layout.letter_center(c)?;
        match out.last_mut() {
            Some(f) if last == Some(c) => f.samples += dwell,
            _ => out.push(Fixation { at, samples: dwell }),
        }
        last = Some(c);
    }
    Ok(out)
}

/// Samples the fixations in order with constant-speed straight saccades
/// between them.
pub fn sample_path(fixations: &[Fixation], layout: &KeyboardLayout, config: &SynthConfig) -> Result<Vec<GazeSample>, GeometryError> {
    let dt = 1.0 / config.sample_rate_hz;
    let mut out = Vec::new();
    let mut t = 0.0;
    let mut push = |p: Point, out: &mut Vec<GazeSample>| {
        out.push(GazeSample::at(t, p));
        t += dt;
    };
    for (i, f) in fixations.iter().enumerate() {
        if i > 0 {
            let from = fixations[i - 1].at;
            let angle = layout.visual_angle_deg(from.distance(f.at))?;
            let steps = (angle / config.saccade_deg_s * config.sample_rate_hz).ceil().max(1.0) as usize;
            for s in 1..steps {
                let k = s as f64 / steps as f64;
                push(Point::new(from.x + k * (f.at.x - from.x), from.y + k * (f.at.y - from.y)), &mut out);
            }
        }
        for _ in 0..f.samples {
            push(f.at, &mut out);
        }
    }
    Ok(out)
}

/// Noise-free gaze path for `word`.
pub fn template_path(word: &str, layout: &KeyboardLayout, config: &SynthConfig) -> Result<Vec<GazeSample>, GeometryError> {
    sample_path(&fixations(word, layout, config)?, layout, config)
}

/// Moves the first fixation by `drift_mm` in a random direction (with
/// probability `drift_fraction`), then every fixation by its landing error.
pub fn perturb_fixations(fixations: &mut [Fixation], layout: &KeyboardLayout, config: &SynthConfig, rng: &mut impl Rng) {
    if config.drift_mm > 0.0 && rng.gen_bool(config.drift_fraction.clamp(0.0, 1.0)) {
        let theta = rng.gen_range(0.0..std::f64::consts::TAU);
        if let Some(f) = fixations.first_mut() {
            f.at = Point::new(f.at.x + config.drift_mm * theta.cos(), f.at.y + config.drift_mm * theta.sin());
        }
    }
    if config.jitter_key_widths > 0.0 {
        let normal = Normal::new(0.0, config.jitter_key_widths * layout.key_width_mm()).expect("finite sigma");
        for f in fixations.iter_mut() {
            f.at = Point::new(f.at.x + normal.sample(rng), f.at.y + normal.sample(rng));
        }
    }
}

pub fn add_sample_noise(samples: &mut [GazeSample], config: &SynthConfig, rng: &mut impl Rng) {
    if config.sample_noise_mm > 0.0 {
        let normal = Normal::new(0.0, config.sample_noise_mm).expect("finite sigma");
        for s in samples.iter_mut() {
            s.x_mm += normal.sample(rng);
            s.y_mm += normal.sample(rng);
        }
    }
}

/// A perturbed trace for `word`.
pub fn synth_samples(
    word: &str,
    layout: &KeyboardLayout,
    config: &SynthConfig,
    rng: &mut impl Rng,
) -> Result<Vec<GazeSample>, GeometryError> {
    let mut fix = fixations(word, layout, config)?;
    perturb_fixations(&mut fix, layout, config, rng);
    let mut samples = sample_path(&fix, layout, config)?;
    add_sample_noise(&mut samples, config, rng);
    Ok(samples)
}

/// `count` traces for words drawn uniformly from `lexicon` (words shorter
/// than `min_word_len` are never drawn). Deterministic in `seed`.
pub fn generate(
    lexicon: &Lexicon,
    layout: &KeyboardLayout,
    count: usize,
    config: &SynthConfig,
    seed: u64,
) -> Result<Vec<TraceRecord>, GeometryError> {
    let pool: Vec<&str> = lexicon.words().iter().map(String::as_str).filter(|w| w.len() >= config.min_word_len).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let Some(&word) = pool.choose(&mut rng) else { break };
        let samples = synth_samples(word, layout, config, &mut rng)?;
        out.push(TraceRecord {
            record_id: format!("synth-{i:05}"),
            technique: "synthetic".into(),
            intended_word: word.to_string(),
            context: String::new(),
            samples,
            hit_points: None,
            metadata: serde_json::Value::Null,
        });
    }
    Ok(out)
}
