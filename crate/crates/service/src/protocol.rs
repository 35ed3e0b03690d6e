//! JSON frames exchanged over the `/ws` socket.

use serde::{Deserialize, Serialize};

use gazeswipe::SessionEvent;

/// Client to server. Coordinates are millimetres in the layout frame and
/// `t_s` is the client's session clock in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientFrame {
    pub seq: u64,
    #[serde(flatten)]
    pub message: ClientMessage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    PinchDown { x_mm: f64, y_mm: f64, t_s: f64 },
    Gaze {
        x_mm: f64,
        y_mm: f64,
        t_s: f64,
        #[serde(default = "yes")]
        valid: bool,
    },
    PinchUp { x_mm: f64, y_mm: f64, t_s: f64 },
    Select { index: usize, #[serde(default)] t_s: Option<f64> },
    Delete { #[serde(default)] t_s: Option<f64> },
    PeekEnter { #[serde(default)] t_s: Option<f64> },
    /// Asks for the keyboard layout the server decodes against.
    Layout,
    TrialStart { trial_id: String, presented: String, t_s: f64 },
    TrialEnd { t_s: f64 },
}

fn yes() -> bool {
    true
}

impl ClientMessage {
    /// The session event for this message; `last_t` stands in for a
    /// missing timestamp. `None` for requests that do not touch the session.
    pub fn to_event(&self, last_t: f64) -> Option<SessionEvent> {
        let or_last = |t: Option<f64>| t.unwrap_or(last_t);
        Some(match self.clone() {
            ClientMessage::PinchDown { x_mm, y_mm, t_s } => SessionEvent::PinchDown { x_mm, y_mm, t: t_s },
            ClientMessage::Gaze { x_mm, y_mm, t_s, valid } => SessionEvent::Gaze { x_mm, y_mm, t: t_s, valid },
            ClientMessage::PinchUp { x_mm, y_mm, t_s } => SessionEvent::PinchUp { x_mm, y_mm, t: t_s },
            ClientMessage::Select { index, t_s } => SessionEvent::SelectCandidate { index, t: or_last(t_s) },
            ClientMessage::Delete { t_s } => SessionEvent::DeletePress { t: or_last(t_s) },
            ClientMessage::PeekEnter { t_s } => SessionEvent::GazeAtDelete { t: or_last(t_s) },
            ClientMessage::TrialStart { trial_id, presented, t_s } => SessionEvent::TrialStart { trial_id, presented, t: t_s },
            ClientMessage::TrialEnd { t_s } => SessionEvent::TrialEnd { t: t_s },
            ClientMessage::Layout => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameKind {
    Candidates,
    Commit,
    Text,
    Peek,
    Layout,
    Error,
}

/// Server to client. `ack_seq` is the `seq` of the frame that caused it,
/// or null when a malformed frame carried no readable `seq`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServerFrame {
    pub ack_seq: Option<u64>,
    #[serde(rename = "type")]
    pub kind: FrameKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub words: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency_us: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout: Option<serde_json::Value>,
}

impl ServerFrame {
    pub fn new(ack_seq: Option<u64>, kind: FrameKind) -> Self {
        Self { ack_seq, kind, words: None, text: None, latency_us: None, reason: None, layout: None }
    }

    pub fn error(ack_seq: Option<u64>, reason: impl Into<String>) -> Self {
        Self { reason: Some(reason.into()), ..Self::new(ack_seq, FrameKind::Error) }
    }
}
