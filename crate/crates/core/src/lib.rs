//! Gaze-swipe word decoding.
//!
//! A gaze trace recorded between pinch-down and pinch-up is reduced to a
//! handful of fixation centroids, matched against every candidate word's
//! key-centre template with a spatiotemporal dynamic time warp, and the
//! resulting distances are fused with a word n-gram model.
//!
//! ```
//! use gazeswipe::{Decoder, DecoderConfig, KeyboardLayout, Lexicon, WordNgramModel};
//!
//! let layout = KeyboardLayout::qwerty();
//! let lexicon = Lexicon::from_counts([("hello", 20), ("help", 10), ("jelly", 3)]);
//! let lm = WordNgramModel::unigram(lexicon);
//! let decoder = Decoder::new(layout, lm, DecoderConfig::default()).unwrap();
//! let trace = decoder.template_pruned_trace("hello").unwrap();
//! let ranking = decoder.decode(&trace, &[]).unwrap();
//! assert_eq!(ranking.words()[0], "hello");
//! ```

pub mod dataio;
pub mod decoder;
pub mod eval;
pub mod geometry;
pub mod lm;
pub mod metrics;
pub mod session;
pub mod synth;
pub mod tap;
pub mod trace;

pub use decoder::{CandidateScore, DecodeError, Decoder, DecoderConfig, Ranking, TimeAxis};
pub use geometry::{Key, KeyLabel, KeyboardLayout, Point, SpacePlacement};
pub use lm::{CharNgramModel, Lexicon, NgramCounts, WordNgramModel};
pub use metrics::InputEntry;
pub use session::{Session, SessionEvent, SessionState, TypingEngine};
pub use tap::TapConfig;
pub use trace::{GazeSample, PipelineConfig, PrunedTrace, TracePoint};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
    #[doc = include_str!("../../../book/src/decoding.md")]
    mod decoding {}
    #[doc = include_str!("../../../book/src/language-model.md")]
    mod language_model {}
    #[doc = include_str!("../../../book/src/session.md")]
    mod session {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
    #[doc = include_str!("../../../book/src/protocol.md")]
    mod protocol {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
