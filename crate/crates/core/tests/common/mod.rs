#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use gazeswipe::dataio;
use gazeswipe::{CharNgramModel, Decoder, DecoderConfig, KeyboardLayout, Lexicon, SessionEvent, TapConfig, TypingEngine, WordNgramModel};

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

/// The `n` most frequent shipped words with equal counts.
pub fn uniform_lexicon(n: usize) -> Lexicon {
    let full = Lexicon::load(data_dir().join("lexicon.tsv")).unwrap();
    let top = full.top_n(n);
    Lexicon::uniform(top.words().iter().map(String::as_str))
}

pub fn teaser_engine() -> Arc<TypingEngine> {
    let lexicon = Lexicon::load(data_dir().join("fixtures/teaser_lexicon.tsv")).unwrap();
    let decoder = Decoder::new(KeyboardLayout::qwerty(), WordNgramModel::unigram(lexicon), DecoderConfig::default()).unwrap();
    Arc::new(TypingEngine::new(decoder, CharNgramModel::uniform(), TapConfig::default()))
}

pub fn teaser_events() -> Vec<SessionEvent> {
    dataio::read_events(data_dir().join("fixtures/teaser_events.jsonl")).unwrap()
}
