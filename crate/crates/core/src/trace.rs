//! Raw gaze stream to pruned centroid trace.
//!
//! Samples are labelled with a velocity threshold (I-VT), the fixation
//! samples are clustered with DBSCAN in (x, y, scaled t) space and each
//! cluster is replaced by its mean. The result is a handful of time-ordered
//! points, which is what the decoder aligns against word templates.

use serde::{Deserialize, Serialize};

use crate::geometry::{KeyboardLayout, Point};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TraceError {
    #[error("non-increasing timestamps ({prev} -> {cur})")]
    DegenerateInterval { prev: f64, cur: f64 },
    #[error("trace has no valid samples")]
    EmptyTrace,
    #[error("invalid pipeline config: {0}")]
    InvalidConfig(&'static str),
}

/// One eye-tracking hit on the keyboard plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeSample {
    /// Seconds since swipe start.
    pub t: f64,
    pub x_mm: f64,
    pub y_mm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gaze_dir: Option<[f64; 3]>,
    #[serde(default = "default_valid")]
    pub valid: bool,
}

fn default_valid() -> bool {
    true
}

impl GazeSample {
    pub fn at(t: f64, p: Point) -> Self {
        Self { t, x_mm: p.x, y_mm: p.y, gaze_dir: None, valid: true }
    }

    pub fn invalid(t: f64) -> Self {
        Self { t, x_mm: 0.0, y_mm: 0.0, gaze_dir: None, valid: false }
    }

    pub fn pos(&self) -> Point {
        Point::new(self.x_mm, self.y_mm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SampleClass {
    Fixation,
    Saccade,
    Undefined,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledSample {
    pub sample: GazeSample,
    pub label: SampleClass,
}

/// A point in normalized keyboard units with its time in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl TracePoint {
    pub fn xy(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// Ordered centroid sequence handed to the decoder.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PrunedTrace {
    pub points: Vec<TracePoint>,
    /// Number of raw samples the trace was built from.
    pub source_count: usize,
}

impl PrunedTrace {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// I-VT velocity threshold, deg/s.
    pub ivt_threshold_deg_s: f64,
    /// DBSCAN neighbourhood radius in normalized keyboard units.
    pub dbscan_eps: f64,
    pub dbscan_min_pts: usize,
    /// Normalized units per second on DBSCAN's time axis.
    pub time_scale: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self { ivt_threshold_deg_s: 100.0, dbscan_eps: 0.05, dbscan_min_pts: 3, time_scale: 0.3 }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), TraceError> {
        if !(self.ivt_threshold_deg_s > 0.0) {
            return Err(TraceError::InvalidConfig("ivt threshold must be positive"));
        }
        if !(self.dbscan_eps > 0.0) {
            return Err(TraceError::InvalidConfig("dbscan eps must be positive"));
        }
        if self.dbscan_min_pts < 1 {
            return Err(TraceError::InvalidConfig("dbscan min_pts must be at least 1"));
        }
        if !(self.time_scale > 0.0) {
            return Err(TraceError::InvalidConfig("time scale must be positive"));
        }
        Ok(())
    }
}

fn angle_between(a: [f64; 3], b: [f64; 3]) -> f64 {
    let cross = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
    let cross_norm = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
    let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    cross_norm.atan2(dot)
}

/// Direction from an eye placed `viewing_distance` in front of the keyboard
/// centre to a point on the keyboard plane.
fn planar_ray(p: Point, layout: &KeyboardLayout) -> [f64; 3] {
    let c = layout.center_mm();
    [p.x - c.x, p.y - c.y, layout.viewing_distance_mm()]
}

/// Angular velocity between two consecutive samples in deg/s.
///
/// Uses the 3D gaze directions when both samples carry one, otherwise the
/// angle between rays from a virtual eye to the two hit points.
pub fn angular_velocity(
    prev: &GazeSample,
    cur: &GazeSample,
    layout: &KeyboardLayout,
) -> Result<f64, TraceError> {
    let dt = cur.t - prev.t;
    if !(dt > 0.0) {
        return Err(TraceError::DegenerateInterval { prev: prev.t, cur: cur.t });
    }
    let angle = match (prev.gaze_dir, cur.gaze_dir) {
        (Some(a), Some(b)) => angle_between(a, b),
        _ => angle_between(planar_ray(prev.pos(), layout), planar_ray(cur.pos(), layout)),
    };
    Ok(angle.to_degrees() / dt)
}

/// Velocity-threshold labelling. The first sample has no predecessor and is
/// `Undefined`, as is any sample where it or its predecessor is invalid.
pub fn ivt_label(
    samples: &[GazeSample],
    config: &PipelineConfig,
    layout: &KeyboardLayout,
) -> Vec<LabeledSample> {
    let mut out = Vec::with_capacity(samples.len());
    for (i, sample) in samples.iter().enumerate() {
        let label = match i.checked_sub(1).map(|j| &samples[j]) {
            Some(prev) if prev.valid && sample.valid => match angular_velocity(prev, sample, layout) {
                Ok(v) if v < config.ivt_threshold_deg_s => SampleClass::Fixation,
                Ok(_) => SampleClass::Saccade,
                Err(_) => SampleClass::Undefined,
            },
            _ => SampleClass::Undefined,
        };
        out.push(LabeledSample { sample: *sample, label });
    }
    out
}

/// DBSCAN cluster assignment over 3D points. `None` marks noise.
///
/// Points are visited in index order and a border point belongs to the
/// first cluster that reaches it, so the result is deterministic.
pub fn dbscan(points: &[[f64; 3]], eps: f64, min_pts: usize) -> Vec<Option<usize>> {
    let n = points.len();
    let eps2 = eps * eps;
    let neighbors: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| {
                    let d = [
                        points[i][0] - points[j][0],
                        points[i][1] - points[j][1],
                        points[i][2] - points[j][2],
                    ];
                    d[0] * d[0] + d[1] * d[1] + d[2] * d[2] <= eps2
                })
                .collect()
        })
        .collect();
    let is_core = |i: usize| neighbors[i].len() >= min_pts;

    let mut assignment: Vec<Option<usize>> = vec![None; n];
    let mut next_cluster = 0;
    for seed in 0..n {
        if assignment[seed].is_some() || !is_core(seed) {
            continue;
        }
        let cluster = next_cluster;
        next_cluster += 1;
        assignment[seed] = Some(cluster);
        let mut frontier = vec![seed];
        while let Some(p) = frontier.pop() {
            for &q in &neighbors[p] {
                if assignment[q].is_none() {
                    assignment[q] = Some(cluster);
                    if is_core(q) {
                        frontier.push(q);
                    }
                }
            }
        }
    }
    assignment
}

fn mean_point(members: impl Iterator<Item = TracePoint>) -> Option<TracePoint> {
    let (mut sx, mut sy, mut st, mut count) = (0.0, 0.0, 0.0, 0usize);
    for p in members {
        sx += p.x;
        sy += p.y;
        st += p.t;
        count += 1;
    }
    (count > 0).then(|| {
        let n = count as f64;
        TracePoint { x: sx / n, y: sy / n, t: st / n }
    })
}

/// Clusters fixation points and returns the time-ordered cluster means.
/// Noise points are dropped.
pub fn dbscan_reduce(fixations: &[TracePoint], config: &PipelineConfig) -> Vec<TracePoint> {
    let scaled: Vec<[f64; 3]> =
        fixations.iter().map(|p| [p.x, p.y, p.t * config.time_scale]).collect();
    let assignment = dbscan(&scaled, config.dbscan_eps, config.dbscan_min_pts);
    let clusters = assignment.iter().flatten().max().map_or(0, |m| m + 1);
    let mut centroids: Vec<TracePoint> = (0..clusters)
        .filter_map(|c| {
            mean_point(
                fixations.iter().zip(&assignment).filter(|(_, a)| **a == Some(c)).map(|(p, _)| *p),
            )
        })
        .collect();
    centroids.sort_by(|a, b| a.t.total_cmp(&b.t));
    centroids
}

fn normalized(sample: &GazeSample, layout: &KeyboardLayout) -> TracePoint {
    let p = layout.normalize(sample.pos());
    TracePoint { x: p.x, y: p.y, t: sample.t }
}

/// Drops points whose time does not strictly exceed the previous one.
fn strictly_increasing(points: Vec<TracePoint>) -> Vec<TracePoint> {
    let mut out: Vec<TracePoint> = Vec::with_capacity(points.len());
    for p in points {
        if out.last().is_none_or(|last| p.t > last.t) {
            out.push(p);
        }
    }
    out
}

/// I-VT, then DBSCAN, with fallbacks so a trace with valid samples never
/// comes out empty: fixation-run centroids when DBSCAN finds no cluster,
/// first and last valid samples when there are no fixations at all.
pub fn prune(
    samples: &[GazeSample],
    config: &PipelineConfig,
    layout: &KeyboardLayout,
) -> Result<PrunedTrace, TraceError> {
    config.validate()?;
    let valid: Vec<&GazeSample> = samples.iter().filter(|s| s.valid).collect();
    let (Some(first), Some(last)) = (valid.first(), valid.last()) else {
        return Err(TraceError::EmptyTrace);
    };
    let labeled = ivt_label(samples, config, layout);
    let fixations: Vec<TracePoint> = labeled
        .iter()
        .filter(|l| l.label == SampleClass::Fixation)
        .map(|l| normalized(&l.sample, layout))
        .collect();

    let mut points = dbscan_reduce(&fixations, config);
    if points.is_empty() && !fixations.is_empty() {
        points = labeled
            .chunk_by(|a, b| a.label == b.label)
            .filter(|run| run[0].label == SampleClass::Fixation)
            .filter_map(|run| mean_point(run.iter().map(|l| normalized(&l.sample, layout))))
            .collect();
    }
    if points.is_empty() {
        points.push(normalized(first, layout));
        points.push(normalized(last, layout));
    }
    Ok(PrunedTrace { points: strictly_increasing(points), source_count: samples.len() })
}

/// Every valid sample as a trace point, for the no-pruning ablation.
pub fn raw_trace(samples: &[GazeSample], layout: &KeyboardLayout) -> Result<PrunedTrace, TraceError> {
    let points: Vec<TracePoint> =
        samples.iter().filter(|s| s.valid).map(|s| normalized(s, layout)).collect();
    if points.is_empty() {
        return Err(TraceError::EmptyTrace);
    }
    Ok(PrunedTrace { points, source_count: samples.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::KeyLabel;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const DT: f64 = 0.005;

    fn dir_deg(deg: f64) -> [f64; 3] {
        let r = deg.to_radians();
        [r.sin(), 0.0, r.cos()]
    }

    fn center(layout: &KeyboardLayout, c: char) -> Point {
        layout.key_center(KeyLabel::Letter(c)).unwrap()
    }

    #[test]
    fn angular_velocity_from_gaze_vectors() {
        let layout = KeyboardLayout::qwerty();
        let mut a = GazeSample::at(0.0, Point::default());
        let mut b = GazeSample::at(DT, Point::default());
        a.gaze_dir = Some(dir_deg(0.0));
        b.gaze_dir = Some(dir_deg(0.0));
        assert_eq!(angular_velocity(&a, &b, &layout).unwrap(), 0.0);
        b.gaze_dir = Some(dir_deg(0.5));
        assert!((angular_velocity(&a, &b, &layout).unwrap() - 100.0).abs() < 1e-6);
        assert!(matches!(
            angular_velocity(&b, &a, &layout),
            Err(TraceError::DegenerateInterval { .. })
        ));
    }

    #[test]
    fn angular_velocity_planar_fallback() {
        let layout = KeyboardLayout::qwerty();
        let c = layout.center_mm();
        let a = GazeSample::at(0.0, Point::new(c.x - 6.1, c.y));
        let b = GazeSample::at(DT, Point::new(c.x + 6.1, c.y));
        let oracle = 2.0 * (6.1f64 / 700.0).atan().to_degrees() / DT;
        let v = angular_velocity(&a, &b, &layout).unwrap();
        assert!((v - oracle).abs() < 1e-9);
        assert!((v - 200.0).abs() < 1.0);
    }

    #[test]
    fn stationary_stream_is_all_fixation_after_first() {
        let layout = KeyboardLayout::qwerty();
        let p = center(&layout, 'g');
        let samples: Vec<_> = (0..400).map(|i| GazeSample::at(i as f64 * DT, p)).collect();
        let labels = ivt_label(&samples, &PipelineConfig::default(), &layout);
        assert_eq!(labels[0].label, SampleClass::Undefined);
        assert_eq!(labels.iter().filter(|l| l.label == SampleClass::Fixation).count(), 399);
    }

    #[test]
    fn invalid_stream_is_undefined() {
        let layout = KeyboardLayout::qwerty();
        let samples: Vec<_> = (0..50).map(|i| GazeSample::invalid(i as f64 * DT)).collect();
        let labels = ivt_label(&samples, &PipelineConfig::default(), &layout);
        assert!(labels.iter().all(|l| l.label == SampleClass::Undefined));
        assert!(ivt_label(&[], &PipelineConfig::default(), &layout).is_empty());
        assert_eq!(
            prune(&samples, &PipelineConfig::default(), &layout),
            Err(TraceError::EmptyTrace)
        );
    }

    #[test]
    fn saccade_between_two_fixations() {
        // Gaze directions: 40 samples at 0 deg, 5 samples moving 3 deg per
        // sample (600 deg/s), then 40 samples at 15 deg.
        let layout = KeyboardLayout::qwerty();
        let mut angles = vec![0.0; 40];
        angles.extend((1..=5).map(|k| 3.0 * k as f64));
        angles.extend(std::iter::repeat_n(15.0, 40));
        let samples: Vec<_> = angles
            .iter()
            .enumerate()
            .map(|(i, &a)| GazeSample { gaze_dir: Some(dir_deg(a)), ..GazeSample::at(i as f64 * DT, Point::default()) })
            .collect();
        let labels = ivt_label(&samples, &PipelineConfig::default(), &layout);
        for (i, l) in labels.iter().enumerate().skip(1) {
            let expected = if (40..45).contains(&i) { SampleClass::Saccade } else { SampleClass::Fixation };
            assert_eq!(l.label, expected, "sample {i}");
        }
    }

    #[test]
    fn dbscan_single_blob_collapses_to_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<TracePoint> = (0..15)
            .map(|i| TracePoint { x: 0.4 + rng.gen_range(-0.01..0.01), y: 0.2 + rng.gen_range(-0.01..0.01), t: i as f64 * DT })
            .collect();
        let out = dbscan_reduce(&pts, &PipelineConfig::default());
        assert_eq!(out.len(), 1);
        let n = pts.len() as f64;
        assert!((out[0].x - pts.iter().map(|p| p.x).sum::<f64>() / n).abs() < 1e-12);
        assert!((out[0].y - pts.iter().map(|p| p.y).sum::<f64>() / n).abs() < 1e-12);
    }

    #[test]
    fn dbscan_two_blobs_time_ordered() {
        let mut pts = Vec::new();
        for i in 0..7 {
            pts.push(TracePoint { x: 0.7 + 0.002 * i as f64, y: 0.1, t: 0.5 + i as f64 * DT });
        }
        for i in 0..7 {
            pts.push(TracePoint { x: 0.2 + 0.002 * i as f64, y: 0.1, t: i as f64 * DT });
        }
        let oracle = brute_force_clusters(&pts, &PipelineConfig::default());
        let out = dbscan_reduce(&pts, &PipelineConfig::default());
        assert_eq!(out.len(), 2);
        assert_eq!(out, oracle);
        assert!(out[0].t < out[1].t);
        assert!((out[0].x - 0.206).abs() < 1e-12);
    }

    #[test]
    fn sparse_points_are_noise() {
        let pts = [
            TracePoint { x: 0.0, y: 0.0, t: 0.0 },
            TracePoint { x: 0.5, y: 0.0, t: 0.1 },
        ];
        assert!(dbscan_reduce(&pts, &PipelineConfig::default()).is_empty());
    }

    #[test]
    fn stationary_trace_prunes_to_one_point() {
        let layout = KeyboardLayout::qwerty();
        let p = center(&layout, 'k');
        let samples: Vec<_> = (0..100).map(|i| GazeSample::at(i as f64 * DT, p)).collect();
        let trace = prune(&samples, &PipelineConfig::default(), &layout).unwrap();
        assert_eq!(trace.len(), 1);
        assert_eq!(trace.source_count, 100);
        assert!(layout.denormalize(trace.points[0].xy()).distance(p) < 1e-9);
    }

    #[test]
    fn fast_sweep_falls_back_to_endpoints() {
        let layout = KeyboardLayout::qwerty();
        // 20 mm per 5 ms is well above 100 deg/s everywhere.
        let samples: Vec<_> =
            (0..30).map(|i| GazeSample::at(i as f64 * DT, Point::new(20.0 * i as f64, 100.0))).collect();
        let trace = prune(&samples, &PipelineConfig::default(), &layout).unwrap();
        assert_eq!(trace.len(), 2);
        assert_eq!(trace.points[0].t, 0.0);
        assert_eq!(trace.points[1].t, 29.0 * DT);
    }

    #[test]
    fn too_few_fixations_fall_back_to_runs() {
        let layout = KeyboardLayout::qwerty();
        let p = center(&layout, 'a');
        let samples = [GazeSample::at(0.0, p), GazeSample::at(DT, p)];
        let trace = prune(&samples, &PipelineConfig::default(), &layout).unwrap();
        assert_eq!(trace.len(), 1);
        assert_eq!(layout.key_at(layout.denormalize(trace.points[0].xy())), Some(KeyLabel::Letter('a')));
    }

    /// Noisy three-fixation trace tuned so only a small fraction of samples
    /// pass the velocity threshold, like real headset data.
    #[test]
    fn noisy_multi_fixation_trace_cardinality() {
        let layout = KeyboardLayout::qwerty();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let normal = rand_distr::Normal::new(0.0, 13.9).unwrap();
        let targets = [center(&layout, 'q'), center(&layout, 'p'), center(&layout, 'b')];
        let samples: Vec<_> = (0..320)
            .map(|i| {
                let c = targets[(i * 3 / 320).min(2)];
                let p = Point::new(c.x + rng.sample(normal), c.y + rng.sample(normal));
                GazeSample::at(i as f64 * DT, p)
            })
            .collect();
        let config = PipelineConfig::default();
        let fixations = ivt_label(&samples, &config, &layout)
            .iter()
            .filter(|l| l.label == SampleClass::Fixation)
            .count();
        let trace = prune(&samples, &config, &layout).unwrap();
        assert!((7..=23).contains(&fixations), "{fixations} fixations");
        assert!((2..=4).contains(&trace.len()), "{} centroids", trace.len());
    }

    /// Independent DBSCAN: connected components of the core graph ordered by
    /// their lowest core index, border points given to the first component
    /// with a core neighbour.
    fn brute_force_clusters(pts: &[TracePoint], config: &PipelineConfig) -> Vec<TracePoint> {
        let n = pts.len();
        let p3: Vec<[f64; 3]> = pts.iter().map(|p| [p.x, p.y, p.t * config.time_scale]).collect();
        let near = |i: usize, j: usize| {
            let d: f64 = (0..3).map(|k| (p3[i][k] - p3[j][k]).powi(2)).sum();
            d.sqrt() <= config.dbscan_eps
        };
        let core: Vec<bool> =
            (0..n).map(|i| (0..n).filter(|&j| near(i, j)).count() >= config.dbscan_min_pts).collect();
        let mut comp = vec![usize::MAX; n];
        let mut ncomp = 0;
        for i in 0..n {
            if !core[i] || comp[i] != usize::MAX {
                continue;
            }
            let mut stack = vec![i];
            comp[i] = ncomp;
            while let Some(p) = stack.pop() {
                for q in 0..n {
                    if core[q] && comp[q] == usize::MAX && near(p, q) {
                        comp[q] = ncomp;
                        stack.push(q);
                    }
                }
            }
            ncomp += 1;
        }
        for i in 0..n {
            if !core[i] {
                comp[i] = (0..n)
                    .filter(|&j| core[j] && near(i, j))
                    .map(|j| comp[j])
                    .min()
                    .unwrap_or(usize::MAX);
            }
        }
        let mut out: Vec<TracePoint> = (0..ncomp)
            .map(|c| {
                let members: Vec<&TracePoint> = (0..n).filter(|&i| comp[i] == c).map(|i| &pts[i]).collect();
                let m = members.len() as f64;
                TracePoint {
                    x: members.iter().map(|p| p.x).sum::<f64>() / m,
                    y: members.iter().map(|p| p.y).sum::<f64>() / m,
                    t: members.iter().map(|p| p.t).sum::<f64>() / m,
                }
            })
            .collect();
        out.sort_by(|a, b| a.t.total_cmp(&b.t));
        out
    }

    fn point_cloud() -> impl Strategy<Value = Vec<TracePoint>> {
        prop::collection::vec((0.0..0.6f64, 0.0..0.3f64, 0.0..2.0f64), 0..50).prop_map(|v| {
            v.into_iter().map(|(x, y, t)| TracePoint { x, y, t }).collect()
        })
    }

    proptest! {
        #[test]
        fn dbscan_matches_brute_force(pts in point_cloud(), eps in 0.02..0.2f64, min_pts in 1usize..6) {
            let config = PipelineConfig { dbscan_eps: eps, dbscan_min_pts: min_pts, ..Default::default() };
            let fast = dbscan_reduce(&pts, &config);
            let slow = brute_force_clusters(&pts, &config);
            prop_assert!(fast.len() <= pts.len());
            prop_assert_eq!(fast.len(), slow.len());
            for (a, b) in fast.iter().zip(&slow) {
                prop_assert!((a.x - b.x).abs() < 1e-12 && (a.y - b.y).abs() < 1e-12 && (a.t - b.t).abs() < 1e-12);
            }
        }

        #[test]
        fn fixation_set_grows_with_threshold(seed in 0u64..1000, t1 in 20.0..200.0f64, dt in 0.0..200.0f64) {
            let layout = KeyboardLayout::qwerty();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let samples: Vec<_> = (0..120).map(|i| {
                let p = Point::new(rng.gen_range(0.0..600.0), rng.gen_range(0.0..250.0));
                if rng.gen_bool(0.05) { GazeSample::invalid(i as f64 * DT) } else { GazeSample::at(i as f64 * DT, p) }
            }).collect();
            let low = PipelineConfig { ivt_threshold_deg_s: t1, ..Default::default() };
            let high = PipelineConfig { ivt_threshold_deg_s: t1 + dt, ..Default::default() };
            let a = ivt_label(&samples, &low, &layout);
            let b = ivt_label(&samples, &high, &layout);
            for (x, y) in a.iter().zip(&b) {
                if x.label == SampleClass::Fixation {
                    prop_assert_eq!(y.label, SampleClass::Fixation);
                }
            }
        }

        #[test]
        fn prune_output_is_time_ordered(seed in 0u64..1000) {
            let layout = KeyboardLayout::qwerty();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut p = Point::new(300.0, 100.0);
            let samples: Vec<_> = (0..200).map(|i| {
                if rng.gen_bool(0.05) {
                    p = Point::new(rng.gen_range(0.0..600.0), rng.gen_range(0.0..250.0));
                }
                let jitter = Point::new(p.x + rng.gen_range(-1.0..1.0), p.y + rng.gen_range(-1.0..1.0));
                GazeSample::at(i as f64 * DT, jitter)
            }).collect();
            let trace = prune(&samples, &PipelineConfig::default(), &layout).unwrap();
            prop_assert!(!trace.is_empty());
            prop_assert!(trace.len() <= trace.source_count);
            for w in trace.points.windows(2) {
                prop_assert!(w[0].t < w[1].t);
            }
        }
    }
}
