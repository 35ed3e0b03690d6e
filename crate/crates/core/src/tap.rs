//! Single-key tap disambiguation: a 2D Gaussian around each letter centre
//! blended with a character bigram.

use serde::{Deserialize, Serialize};

use crate::geometry::{KeyboardLayout, Point};
use crate::lm::CharNgramModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TapConfig {
    pub sigma_x_mm: f64,
    pub sigma_y_mm: f64,
    /// Weight of the character model in the blend.
    pub alpha_tap: f64,
}

impl Default for TapConfig {
    fn default() -> Self {
        Self { sigma_x_mm: 26.0, sigma_y_mm: 26.0, alpha_tap: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LetterScore {
    pub letter: char,
    pub p_gauss: f64,
    pub p_char: f64,
    pub score: f64,
}

/// Axis-aligned Gaussian density of `point` around `center`.
pub fn gaussian_density(point: Point, center: Point, config: &TapConfig) -> f64 {
    let zx = (point.x - center.x) / config.sigma_x_mm;
    let zy = (point.y - center.y) / config.sigma_y_mm;
    (-0.5 * (zx * zx + zy * zy)).exp() / (2.0 * std::f64::consts::PI * config.sigma_x_mm * config.sigma_y_mm)
}

/// Gaussian density of `point` around the centre of `letter`; zero for a
/// letter missing from the layout.
pub fn p_gauss(point: Point, letter: char, layout: &KeyboardLayout, config: &TapConfig) -> f64 {
    layout.letter_center(letter).map_or(0.0, |c| gaussian_density(point, c, config))
}

/// Ranks a–z for a tap at `point` after `prefix`.
///
/// The Gaussian term is normalized over the 26 letters so both terms of the
/// additive blend are probabilities. If every density underflows (a point
/// far off the keyboard) the spatial term is taken from the nearest centre.
pub fn infer_letter(
    point: Point,
    prefix: &str,
    layout: &KeyboardLayout,
    chars: &CharNgramModel,
    config: &TapConfig,
) -> Vec<LetterScore> {
    let letters = 'a'..='z';
    let mut dens: Vec<f64> = letters.clone().map(|c| p_gauss(point, c, layout, config)).collect();
    let total: f64 = dens.iter().sum();
    if total > 0.0 {
        dens.iter_mut().for_each(|d| *d /= total);
    } else {
        let nearest = letters
            .clone()
            .enumerate()
            .filter_map(|(i, c)| layout.letter_center(c).ok().map(|p| (i, p.distance(point))))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i);
        dens.iter_mut().enumerate().for_each(|(i, d)| *d = if Some(i) == nearest { 1.0 } else { 0.0 });
    }
    let a = config.alpha_tap;
    let mut out: Vec<LetterScore> = letters
        .zip(dens)
        .map(|(letter, p_gauss)| {
            let p_char = chars.p_char(letter, prefix);
            LetterScore { letter, p_gauss, p_char, score: a * p_char + (1.0 - a) * p_gauss }
        })
        .collect();
    out.sort_by(|x, y| y.score.total_cmp(&x.score).then(x.letter.cmp(&y.letter)));
    out
}
