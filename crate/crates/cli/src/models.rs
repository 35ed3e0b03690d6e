//! Loading the layout, lexicon and language model named by the flags.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use gazeswipe::lm::DEFAULT_WORD_K;
use gazeswipe::{
    CharNgramModel, Decoder, DecoderConfig, KeyboardLayout, Lexicon, NgramCounts, TapConfig, TypingEngine, WordNgramModel,
};

use crate::{DataArgs, DecoderArgs};

/// `--data-dir` or `SWIPE_DECODE_DATA`, else `./data`, else the data
/// directory of the source tree this binary was built from.
pub fn data_dir(args: &DataArgs) -> PathBuf {
    if let Some(dir) = &args.data_dir {
        return dir.clone();
    }
    let local = PathBuf::from("data");
    if local.join("lexicon.tsv").exists() {
        return local;
    }
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn pick(flag: &Option<PathBuf>, dir: &Path, name: &str) -> PathBuf {
    flag.clone().unwrap_or_else(|| dir.join(name))
}

pub fn layout(args: &DataArgs) -> Result<KeyboardLayout> {
    let path = pick(&args.layout, &data_dir(args), "layout.json");
    if args.layout.is_none() && !path.exists() {
        return Ok(KeyboardLayout::qwerty());
    }
    KeyboardLayout::load(&path).with_context(|| format!("loading layout {}", path.display()))
}

pub fn lexicon(args: &DataArgs) -> Result<Lexicon> {
    let path = pick(&args.lexicon, &data_dir(args), "lexicon.tsv");
    Lexicon::load(&path).with_context(|| format!("loading lexicon {}", path.display()))
}

/// Bigram model over `lexicon`. A missing default n-gram file means a
/// unigram model; a missing explicit one is an error.
pub fn language_model(args: &DataArgs, lexicon: Lexicon) -> Result<WordNgramModel> {
    let path = pick(&args.ngrams, &data_dir(args), "ngrams.tsv");
    let bigrams = if args.ngrams.is_none() && !path.exists() {
        Default::default()
    } else {
        NgramCounts::load_bigrams(&path).with_context(|| format!("loading n-grams {}", path.display()))?
    };
    Ok(WordNgramModel::new(lexicon, &bigrams, 2, DEFAULT_WORD_K)?)
}

pub fn decoder_config(args: &DecoderArgs) -> DecoderConfig {
    let mut c = DecoderConfig::default();
    c.alpha = args.alpha.unwrap_or(c.alpha);
    c.epsilon = args.epsilon.unwrap_or(c.epsilon);
    c.top_k = args.top_k.unwrap_or(c.top_k);
    c.pipeline.ivt_threshold_deg_s = args.ivt_threshold.unwrap_or(c.pipeline.ivt_threshold_deg_s);
    c.pipeline.dbscan_eps = args.dbscan_eps.unwrap_or(c.pipeline.dbscan_eps);
    c.pipeline.dbscan_min_pts = args.dbscan_min_pts.unwrap_or(c.pipeline.dbscan_min_pts);
    c.pipeline.time_scale = args.time_scale.unwrap_or(c.pipeline.time_scale);
    c.use_time_dim = !args.no_time_dim;
    c.use_pruning = !args.no_pruning;
    c
}

pub fn decoder(data: &DataArgs, args: &DecoderArgs) -> Result<Decoder> {
    let lm = language_model(data, lexicon(data)?)?;
    Ok(Decoder::new(layout(data)?, lm, decoder_config(args))?)
}

/// Decoder plus the character model used to resolve taps.
pub fn engine(data: &DataArgs, args: &DecoderArgs) -> Result<Arc<TypingEngine>> {
    let decoder = decoder(data, args)?;
    let chars = CharNgramModel::from_lexicon(decoder.language_model().lexicon(), 1.0);
    Ok(Arc::new(TypingEngine::new(decoder, chars, TapConfig::default())))
}
