//! One client's session: turns text frames into session events and
//! session responses into reply frames, keeping the log of every event
//! that was applied.

use std::sync::Arc;

use gazeswipe::session::Response;
use gazeswipe::{Session, SessionEvent, TypingEngine};

use crate::protocol::{ClientFrame, ClientMessage, FrameKind, ServerFrame};

pub struct Connection {
    session: Session,
    log: Vec<SessionEvent>,
    last_t: f64,
}

impl Connection {
    pub fn new(engine: Arc<TypingEngine>) -> Self {
        Self { session: Session::new(engine), log: Vec::new(), last_t: 0.0 }
    }

    /// Events applied so far; replaying them reproduces the session.
    pub fn log(&self) -> &[SessionEvent] {
        &self.log
    }

    pub fn session(&self) -> &Session {
        &self.session
    }

    /// Handles one text frame. Returns the reply, if any. Malformed frames
    /// and rejected events produce an error frame and leave the session as
    /// it was.
    pub fn handle_text(&mut self, text: &str) -> Option<ServerFrame> {
        match serde_json::from_str::<ClientFrame>(text) {
            Ok(frame) => self.handle(frame),
            Err(e) => {
                let seq = serde_json::from_str::<serde_json::Value>(text).ok().and_then(|v| v.get("seq")?.as_u64());
                Some(ServerFrame::error(seq, format!("malformed frame: {e}")))
            }
        }
    }

    pub fn handle(&mut self, frame: ClientFrame) -> Option<ServerFrame> {
        let seq = Some(frame.seq);
        if frame.message == ClientMessage::Layout {
            let layout = self.session.engine().decoder.layout().to_json_value();
            return Some(ServerFrame { layout: Some(layout), ..ServerFrame::new(seq, FrameKind::Layout) });
        }
        let event = frame.message.to_event(self.last_t)?;
        let response = match self.session.apply(&event) {
            Ok(r) => r,
            Err(e) => return Some(ServerFrame::error(seq, e.to_string())),
        };
        self.last_t = self.last_t.max(event.t());
        self.log.push(event);
        let words = |r: &gazeswipe::Ranking| Some(r.words().iter().map(|w| w.to_string()).collect());
        match response {
            Response::None => None,
            Response::Candidates(r) => Some(ServerFrame {
                words: words(&r),
                latency_us: Some(r.latency_us),
                ..ServerFrame::new(seq, FrameKind::Candidates)
            }),
            Response::Commit { ranking, text } => Some(ServerFrame {
                words: words(&ranking),
                text: Some(text),
                latency_us: Some(ranking.latency_us),
                ..ServerFrame::new(seq, FrameKind::Commit)
            }),
            Response::Text(text) => Some(ServerFrame { text: Some(text), ..ServerFrame::new(seq, FrameKind::Text) }),
            Response::Peek(text) => Some(ServerFrame { text: Some(text), ..ServerFrame::new(seq, FrameKind::Peek) }),
        }
    }
}
