mod common;

use gazeswipe::dataio::{self, TraceRecord};
use gazeswipe::eval::{self, EvalError, SweepGrid};
use gazeswipe::synth::{self, SynthConfig};
use gazeswipe::{Decoder, DecoderConfig, KeyboardLayout, Lexicon, SessionEvent, WordNgramModel};

fn small_decoder(words: &[&str]) -> Decoder {
    let lm = WordNgramModel::unigram(Lexicon::uniform(words.iter().copied()));
    Decoder::new(KeyboardLayout::qwerty(), lm, DecoderConfig::default()).unwrap()
}

fn traces(words: &[&str], technique: &str) -> Vec<TraceRecord> {
    let layout = KeyboardLayout::qwerty();
    words
        .iter()
        .enumerate()
        .map(|(i, w)| TraceRecord {
            record_id: format!("{technique}-{i}"),
            technique: technique.into(),
            intended_word: w.to_string(),
            context: String::new(),
            samples: synth::template_path(w, &layout, &SynthConfig::default()).unwrap(),
            hit_points: None,
            metadata: serde_json::Value::Null,
        })
        .collect()
}

#[test]
fn replay_groups_by_technique() {
    let words = ["hello", "world", "quick", "brown"];
    let dec = small_decoder(&words);
    let mut records = traces(&words, "a");
    records.extend(traces(&words[..2], "b"));
    let report = eval::replay(&dec, &records).unwrap();
    assert_eq!(report.rows.len(), 6);
    assert_eq!(report.overall.n, 6);
    assert_eq!(report.by_technique["a"].n, 4);
    assert_eq!(report.by_technique["b"].n, 2);
    assert_eq!(report.overall.top1, 100.0);
    assert!(report.rows.iter().all(|r| r.rank == Some(1)));
}

#[test]
fn out_of_lexicon_word_is_a_miss() {
    let dec = small_decoder(&["hello", "world"]);
    let report = eval::replay(&dec, &traces(&["quick"], "x")).unwrap();
    assert_eq!(report.rows[0].rank, None);
    assert_eq!(report.overall.top4, 0.0);
}

#[test]
fn record_without_valid_samples_is_a_miss() {
    let dec = small_decoder(&["hello"]);
    let mut records = traces(&["hello"], "x");
    records[0].samples = vec![gazeswipe::GazeSample::invalid(0.0)];
    let row = eval::decode_record(&dec, &records[0]).unwrap();
    assert_eq!(row.rank, None);
    assert_eq!(row.top, None);
}

#[test]
fn replay_of_nothing_is_an_error() {
    let dec = small_decoder(&["hello"]);
    assert!(matches!(eval::replay(&dec, &[]), Err(EvalError::Empty)));
}

#[test]
fn default_sweep_grid_has_45_points() {
    let grid = SweepGrid::default();
    let points = grid.points();
    assert_eq!(points.len(), 3 * 3 * 5);
    let dec = small_decoder(&["hello", "world"]);
    let rows = eval::sweep(&dec, &traces(&["hello", "world"], "s"), &grid).unwrap();
    assert_eq!(rows.len(), 45);
    assert!(rows.iter().any(|r| r.ivt_threshold == 150.0 && r.dbscan_eps == 0.15 && r.dbscan_min_pts == 6));
}

#[test]
fn synthetic_replay_round_trips_through_files() {
    let layout = KeyboardLayout::qwerty();
    let lexicon = common::uniform_lexicon(500);
    let records = synth::generate(&lexicon, &layout, 20, &SynthConfig::default(), 5).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("traces.jsonl");
    dataio::write_traces(&path, &records).unwrap();
    let back = dataio::read_traces(&path).unwrap();
    let dec = Decoder::new(layout, WordNgramModel::unigram(lexicon), DecoderConfig::default()).unwrap();
    let a = eval::replay(&dec, &records).unwrap();
    let b = eval::replay(&dec, &back).unwrap();
    let ranks = |r: &eval::ReplayReport| r.rows.iter().map(|x| x.rank).collect::<Vec<_>>();
    assert_eq!(ranks(&a), ranks(&b));
}

#[test]
fn teaser_log_scores_one_perfect_trial() {
    let report = eval::session_metrics(common::teaser_engine(), &common::teaser_events(), 4).unwrap();
    assert_eq!(report.final_text, "today ");
    assert_eq!(report.trials.len(), 1);
    let trial = &report.trials[0];
    assert_eq!(trial.transcribed, "today");
    assert_eq!(trial.keystrokes.incorrect_fixed + trial.keystrokes.incorrect_not_fixed, 0);
    assert!(report.rows[0].wpm > 0.0);
    assert_eq!(report.summary.first_match, Some(1.0));
    assert_eq!(report.summary.swipes, 1);
    // Five transcribed characters make one word.
    let expected = 60.0 / trial.duration_s;
    assert!((report.rows[0].wpm - expected).abs() < 1e-9, "{} vs {expected}", report.rows[0].wpm);
}

#[test]
fn deleted_word_counts_as_fixed_errors() {
    let mut events = common::teaser_events();
    let end = events.pop().unwrap();
    let t = end.t();
    events.push(SessionEvent::DeletePress { t });
    for (i, c) in "today".chars().enumerate() {
        let p = KeyboardLayout::qwerty().letter_center(c).unwrap();
        events.push(SessionEvent::KeyTap { x_mm: p.x, y_mm: p.y, t: t + 0.3 * (i + 1) as f64 });
    }
    events.push(SessionEvent::TrialEnd { t: t + 2.0 });
    let report = eval::session_metrics(common::teaser_engine(), &events, 4).unwrap();
    let k = report.trials[0].keystrokes;
    assert_eq!(report.trials[0].transcribed, "today");
    assert_eq!((k.correct, k.incorrect_fixed, k.incorrect_not_fixed), (5, 6, 0));
}

#[test]
fn unbalanced_trial_markers_are_rejected() {
    let events = [SessionEvent::TrialEnd { t: 1.0 }];
    assert!(matches!(eval::session_metrics(common::teaser_engine(), &events, 4), Err(EvalError::Log { index: 0, .. })));
}
