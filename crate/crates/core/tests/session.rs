mod common;

use gazeswipe::session::{replay, Response};
use gazeswipe::{KeyLabel, Session, SessionEvent};

#[test]
fn teaser_swipe_leads_with_today_mid_swipe_and_at_commit() {
    let mut session = Session::new(common::teaser_engine());
    let mut midswipe = Vec::new();
    let mut commit = None;
    for event in common::teaser_events() {
        match session.apply(&event).unwrap() {
            Response::Candidates(r) => midswipe.push(r),
            Response::Commit { ranking, text } => commit = Some((ranking, text)),
            _ => {}
        }
    }
    let last = midswipe.last().expect("a refresh once the gaze reaches 'o'");
    assert_eq!(last.words()[0], "today");
    let (ranking, text) = commit.unwrap();
    assert_eq!(text, "today ");
    assert_eq!(ranking.words().len(), 4);
    assert_eq!(session.state().alternates().len(), 3);
}

#[test]
fn swap_keeps_a_single_trailing_space() {
    let mut session = replay(common::teaser_engine(), &common::teaser_events()).unwrap();
    let alt = session.state().alternates()[0].clone();
    session.select_candidate(0).unwrap();
    assert_eq!(session.state().committed_text, format!("{alt} "));
    session.select_candidate(0).unwrap();
    assert_eq!(session.state().committed_text, "today ");
}

#[test]
fn peek_mirrors_text_while_looking_at_delete() {
    let engine = common::teaser_engine();
    let mut events = common::teaser_events();
    events.push(SessionEvent::GazeAtDelete { t: 5.0 });
    let mut session = Session::new(engine);
    let mut last = Response::None;
    for e in &events {
        last = session.apply(e).unwrap();
    }
    assert_eq!(last, Response::Peek("today ".into()));
}

#[test]
fn released_over_delete_mid_swipe_changes_nothing() {
    let engine = common::teaser_engine();
    let del = engine.decoder.layout().key_center(KeyLabel::Delete).unwrap();
    let mut session = Session::new(engine);
    let events: Vec<SessionEvent> = common::teaser_events()
        .into_iter()
        .filter(|e| !matches!(e, SessionEvent::PinchUp { .. } | SessionEvent::TrialEnd { .. }))
        .collect();
    for e in &events {
        session.apply(e).unwrap();
    }
    assert!(session.state().swipe_in_progress());
    let t = events.last().unwrap().t();
    session.apply(&SessionEvent::PinchUp { x_mm: del.x, y_mm: del.y, t: t + 0.1 }).unwrap();
    assert_eq!(session.state().committed_text, "");
    assert!(!session.state().swipe_in_progress());
}
