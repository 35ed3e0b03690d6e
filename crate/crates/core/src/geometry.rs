//! Keyboard geometry: key rectangles, hit testing, coordinate normalization
//! and visual-angle conversion.
//!
//! All positions are millimetres in the layout frame, with the origin at the
//! top-left of the letter-key area and `y` growing downwards.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

/// Key width used by the default layout (mm).
pub const KEY_WIDTH_MM: f64 = 51.0;
/// Key height used by the default layout (mm).
pub const KEY_HEIGHT_MM: f64 = 56.7;
/// Horizontal gap between neighbouring keys (mm).
pub const GAP_H_MM: f64 = 11.0;
/// Vertical gap between rows (mm).
pub const GAP_V_MM: f64 = 9.30;
/// Default eye-to-keyboard distance (mm).
pub const VIEWING_DISTANCE_MM: f64 = 700.0;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GeometryError {
    #[error("no key labelled {0}")]
    UnknownKey(KeyLabel),
    #[error("viewing distance must be positive, got {0}")]
    NonPositiveDistance(f64),
    #[error("invalid layout: {0}")]
    InvalidLayout(String),
    #[error("layout i/o: {0}")]
    Io(String),
}

/// A 2D point in millimetres (or in normalized units, depending on context).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn midpoint(self, other: Point) -> Point {
        Point::new((self.x + other.x) / 2.0, (self.y + other.y) / 2.0)
    }
}

/// What a key types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KeyLabel {
    Letter(char),
    Space,
    Delete,
}

impl KeyLabel {
    pub fn letter(self) -> Option<char> {
        match self {
            KeyLabel::Letter(c) => Some(c),
            _ => None,
        }
    }
}

impl fmt::Display for KeyLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KeyLabel::Letter(c) => write!(f, "{c}"),
            KeyLabel::Space => f.write_str("space"),
            KeyLabel::Delete => f.write_str("delete"),
        }
    }
}

impl std::str::FromStr for KeyLabel {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "space" => Ok(KeyLabel::Space),
            "delete" => Ok(KeyLabel::Delete),
            _ => {
                let mut chars = s.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) if c.is_ascii_lowercase() => Ok(KeyLabel::Letter(c)),
                    _ => Err(GeometryError::InvalidLayout(format!("unknown key label {s:?}"))),
                }
            }
        }
    }
}

impl Serialize for KeyLabel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for KeyLabel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One rectangular key.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Key {
    pub label: KeyLabel,
    pub center: Point,
    pub width: f64,
    pub height: f64,
}

impl Key {
    pub fn contains(&self, p: Point) -> bool {
        (p.x - self.center.x).abs() <= self.width / 2.0
            && (p.y - self.center.y).abs() <= self.height / 2.0
    }

    fn min(&self) -> Point {
        Point::new(self.center.x - self.width / 2.0, self.center.y - self.height / 2.0)
    }

    fn max(&self) -> Point {
        Point::new(self.center.x + self.width / 2.0, self.center.y + self.height / 2.0)
    }

    fn overlaps(&self, other: &Key) -> bool {
        let (a0, a1, b0, b1) = (self.min(), self.max(), other.min(), other.max());
        a0.x < b1.x && b0.x < a1.x && a0.y < b1.y && b0.y < a1.y
    }
}

/// Where the space bar sits relative to the letter rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpacePlacement {
    Above,
    #[default]
    Below,
}

/// Validated keyboard geometry. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyboardLayout {
    keys: Vec<Key>,
    viewing_distance_mm: f64,
    letter_index: [Option<usize>; 26],
    bbox_min: Point,
    bbox_max: Point,
}

#[derive(Serialize, Deserialize)]
struct KeyRecord {
    label: KeyLabel,
    cx_mm: f64,
    cy_mm: f64,
    w_mm: f64,
    h_mm: f64,
}

#[derive(Serialize, Deserialize)]
struct LayoutFile {
    keys: Vec<KeyRecord>,
    viewing_distance_mm: f64,
}

const QWERTY_ROWS: [&str; 3] = ["qwertyuiop", "asdfghjkl", "zxcvbnm"];
/// Row offsets in units of key pitch: quarter-key for the home row, a
/// further half-key for the bottom row.
const ROW_STAGGER: [f64; 3] = [0.0, 0.25, 0.75];

impl KeyboardLayout {
    pub fn new(keys: Vec<Key>, viewing_distance_mm: f64) -> Result<Self, GeometryError> {
        if keys.is_empty() {
            return Err(GeometryError::InvalidLayout("no keys".into()));
        }
        if !(viewing_distance_mm > 0.0) {
            return Err(GeometryError::NonPositiveDistance(viewing_distance_mm));
        }
        let mut letter_index = [None; 26];
        let mut specials = BTreeSet::new();
        for (i, key) in keys.iter().enumerate() {
            if !(key.width > 0.0 && key.height > 0.0) {
                return Err(GeometryError::InvalidLayout(format!("key {} has empty extent", key.label)));
            }
            match key.label {
                KeyLabel::Letter(c) => {
                    let slot = &mut letter_index[(c as u8 - b'a') as usize];
                    if slot.is_some() {
                        return Err(GeometryError::InvalidLayout(format!("duplicate key {c}")));
                    }
                    *slot = Some(i);
                }
                special => {
                    if !specials.insert(special) {
                        return Err(GeometryError::InvalidLayout(format!("duplicate key {special}")));
                    }
                }
            }
        }
        if let Some(missing) = letter_index.iter().position(Option::is_none) {
            return Err(GeometryError::InvalidLayout(format!(
                "missing letter {}",
                (b'a' + missing as u8) as char
            )));
        }
        for (i, a) in keys.iter().enumerate() {
            for b in &keys[i + 1..] {
                if a.overlaps(b) {
                    return Err(GeometryError::InvalidLayout(format!(
                        "keys {} and {} overlap",
                        a.label, b.label
                    )));
                }
            }
        }
        let mut bbox_min = Point::new(f64::INFINITY, f64::INFINITY);
        let mut bbox_max = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for key in &keys {
            let (lo, hi) = (key.min(), key.max());
            bbox_min = Point::new(bbox_min.x.min(lo.x), bbox_min.y.min(lo.y));
            bbox_max = Point::new(bbox_max.x.max(hi.x), bbox_max.y.max(hi.y));
        }
        Ok(Self { keys, viewing_distance_mm, letter_index, bbox_min, bbox_max })
    }

    /// QWERTY layout built from the standard key dimensions, with the space
    /// bar below the letter rows and the delete key after `m`.
    pub fn qwerty() -> Self {
        Self::qwerty_with(SpacePlacement::Below)
    }

    pub fn qwerty_with(space: SpacePlacement) -> Self {
        let pitch_x = KEY_WIDTH_MM + GAP_H_MM;
        let pitch_y = KEY_HEIGHT_MM + GAP_V_MM;
        let letter_row0 = match space {
            SpacePlacement::Above => 1.0,
            SpacePlacement::Below => 0.0,
        };
        let mut keys = Vec::with_capacity(28);
        for (row, letters) in QWERTY_ROWS.iter().enumerate() {
            let cy = KEY_HEIGHT_MM / 2.0 + (letter_row0 + row as f64) * pitch_y;
            for (col, c) in letters.chars().enumerate() {
                let cx = KEY_WIDTH_MM / 2.0 + (ROW_STAGGER[row] + col as f64) * pitch_x;
                keys.push(Key {
                    label: KeyLabel::Letter(c),
                    center: Point::new(cx, cy),
                    width: KEY_WIDTH_MM,
                    height: KEY_HEIGHT_MM,
                });
            }
        }
        // Delete sits one gap to the right of the last bottom-row letter.
        let bottom = QWERTY_ROWS[2].len() as f64;
        let delete_w = 1.5 * KEY_WIDTH_MM;
        let delete_left = (ROW_STAGGER[2] + bottom) * pitch_x;
        keys.push(Key {
            label: KeyLabel::Delete,
            center: Point::new(
                delete_left + delete_w / 2.0,
                KEY_HEIGHT_MM / 2.0 + (letter_row0 + 2.0) * pitch_y,
            ),
            width: delete_w,
            height: KEY_HEIGHT_MM,
        });
        let row_width = 10.0 * pitch_x - GAP_H_MM;
        let space_w = 5.0 * pitch_x - GAP_H_MM;
        let space_row = match space {
            SpacePlacement::Above => 0.0,
            SpacePlacement::Below => 3.0,
        };
        keys.push(Key {
            label: KeyLabel::Space,
            center: Point::new(row_width / 2.0, KEY_HEIGHT_MM / 2.0 + space_row * pitch_y),
            width: space_w,
            height: KEY_HEIGHT_MM,
        });
        Self::new(keys, VIEWING_DISTANCE_MM).expect("default layout is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, GeometryError> {
        let file: LayoutFile =
            serde_json::from_str(text).map_err(|e| GeometryError::InvalidLayout(e.to_string()))?;
        let keys = file
            .keys
            .into_iter()
            .map(|k| Key {
                label: k.label,
                center: Point::new(k.cx_mm, k.cy_mm),
                width: k.w_mm,
                height: k.h_mm,
            })
            .collect();
        Self::new(keys, file.viewing_distance_mm)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GeometryError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| GeometryError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let file = LayoutFile {
            keys: self
                .keys
                .iter()
                .map(|k| KeyRecord {
                    label: k.label,
                    cx_mm: k.center.x,
                    cy_mm: k.center.y,
                    w_mm: k.width,
                    h_mm: k.height,
                })
                .collect(),
            viewing_distance_mm: self.viewing_distance_mm,
        };
        serde_json::to_string_pretty(&file).expect("layout serializes")
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::from_str(&self.to_json()).expect("layout json is valid")
    }

    pub fn keys(&self) -> &[Key] {
        &self.keys
    }

    pub fn viewing_distance_mm(&self) -> f64 {
        self.viewing_distance_mm
    }

    pub fn width_mm(&self) -> f64 {
        self.bbox_max.x - self.bbox_min.x
    }

    pub fn height_mm(&self) -> f64 {
        self.bbox_max.y - self.bbox_min.y
    }

    /// Centre of the keys' bounding box.
    pub fn center_mm(&self) -> Point {
        self.bbox_min.midpoint(self.bbox_max)
    }

    pub fn key(&self, label: KeyLabel) -> Option<&Key> {
        match label {
            KeyLabel::Letter(c) => self.letter_key(c),
            _ => self.keys.iter().find(|k| k.label == label),
        }
    }

    fn letter_key(&self, c: char) -> Option<&Key> {
        if !c.is_ascii_lowercase() {
            return None;
        }
        self.letter_index[(c as u8 - b'a') as usize].map(|i| &self.keys[i])
    }

    pub fn key_center(&self, label: KeyLabel) -> Result<Point, GeometryError> {
        self.key(label).map(|k| k.center).ok_or(GeometryError::UnknownKey(label))
    }

    pub fn letter_center(&self, c: char) -> Result<Point, GeometryError> {
        self.letter_key(c).map(|k| k.center).ok_or(GeometryError::UnknownKey(KeyLabel::Letter(c)))
    }

    /// Label of the key whose rectangle contains `p`, if any.
    pub fn key_at(&self, p: Point) -> Option<KeyLabel> {
        self.keys.iter().find(|k| k.contains(p)).map(|k| k.label)
    }

    /// Letters whose key centre lies within `radius_mm` of `p`.
    pub fn letters_within(&self, p: Point, radius_mm: f64) -> BTreeSet<char> {
        self.keys
            .iter()
            .filter_map(|k| k.label.letter().map(|c| (c, k.center)))
            .filter(|(_, center)| center.distance(p) <= radius_mm)
            .map(|(c, _)| c)
            .collect()
    }

    /// Angle subtended by `extent_mm` centred in front of the eye, in degrees.
    pub fn visual_angle_deg(&self, extent_mm: f64) -> Result<f64, GeometryError> {
        visual_angle_deg(extent_mm, self.viewing_distance_mm)
    }

    /// Maps a layout point into normalized keyboard units: the bounding-box
    /// origin goes to zero and both axes are divided by the keyboard width.
    pub fn normalize(&self, p: Point) -> Point {
        let w = self.width_mm();
        Point::new((p.x - self.bbox_min.x) / w, (p.y - self.bbox_min.y) / w)
    }

    pub fn denormalize(&self, p: Point) -> Point {
        let w = self.width_mm();
        Point::new(p.x * w + self.bbox_min.x, p.y * w + self.bbox_min.y)
    }

    /// Horizontal distance between neighbouring letter centres (`q` to `w`).
    pub fn key_pitch_mm(&self) -> f64 {
        match (self.letter_key('q'), self.letter_key('w')) {
            (Some(q), Some(w)) => q.center.distance(w.center),
            _ => KEY_WIDTH_MM + GAP_H_MM,
        }
    }

    /// Width of the `q` key, used as the "key width" unit for noise levels.
    pub fn key_width_mm(&self) -> f64 {
        self.letter_key('q').map_or(KEY_WIDTH_MM, |k| k.width)
    }
}

pub fn visual_angle_deg(extent_mm: f64, viewing_distance_mm: f64) -> Result<f64, GeometryError> {
    if !(viewing_distance_mm > 0.0) {
        return Err(GeometryError::NonPositiveDistance(viewing_distance_mm));
    }
    Ok((2.0 * (extent_mm / 2.0).atan2(viewing_distance_mm)).to_degrees())
}
