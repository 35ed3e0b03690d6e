//! Lexicon, word-level n-gram model and character bigram model.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum LmError {
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
    #[error("language model order must be 1 or 2, got {0}")]
    UnsupportedOrder(usize),
}

/// Lowercases, strips apostrophes and keeps the word only if what remains
/// is non-empty ASCII a–z.
pub fn normalize_word(raw: &str) -> Option<String> {
    let word: String =
        raw.chars().filter(|c| *c != '\'' && *c != '\u{2019}').flat_map(char::to_lowercase).collect();
    (!word.is_empty() && word.bytes().all(|b| b.is_ascii_lowercase())).then_some(word)
}

/// Splits free text into normalized words; tokens with other characters are
/// dropped.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| c.is_whitespace() || (c.is_ascii_punctuation() && c != '\''))
        .filter_map(normalize_word)
}

#[derive(Debug, Clone, Default)]
struct TrieNode {
    children: [Option<u32>; 26],
    word: Option<u32>,
}

/// Prefix trie over word ids.
#[derive(Debug, Clone)]
pub struct Trie {
    nodes: Vec<TrieNode>,
}

impl Default for Trie {
    fn default() -> Self {
        Self { nodes: vec![TrieNode::default()] }
    }
}

impl Trie {
    fn insert(&mut self, word: &str, id: u32) {
        let mut node = 0usize;
        for b in word.bytes() {
            let slot = (b - b'a') as usize;
            node = match self.nodes[node].children[slot] {
                Some(next) => next as usize,
                None => {
                    self.nodes.push(TrieNode::default());
                    let next = self.nodes.len() - 1;
                    self.nodes[node].children[slot] = Some(next as u32);
                    next
                }
            };
        }
        self.nodes[node].word = Some(id);
    }

    fn find(&self, prefix: &str) -> Option<usize> {
        let mut node = 0usize;
        for b in prefix.bytes() {
            if !b.is_ascii_lowercase() {
                return None;
            }
            node = self.nodes[node].children[(b - b'a') as usize]? as usize;
        }
        Some(node)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.find(word).is_some_and(|n| self.nodes[n].word.is_some())
    }

    /// Ids of all words starting with `prefix`, in alphabetical order.
    pub fn ids_with_prefix(&self, prefix: &str) -> Vec<u32> {
        let mut out = Vec::new();
        if let Some(start) = self.find(prefix) {
            let mut stack = vec![start];
            while let Some(n) = stack.pop() {
                let node = &self.nodes[n];
                out.extend(node.word);
                stack.extend(node.children.iter().rev().flatten().map(|&c| c as usize));
            }
        }
        out
    }
}

/// Words with counts, indexed by dense ids in alphabetical order.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, u32>,
    trie: Trie,
}

impl Lexicon {
    /// Builds a lexicon from raw `(word, count)` pairs. Words are
    /// normalized, unusable ones dropped, duplicates summed and zero counts
    /// raised to one.
    pub fn from_counts<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = (S, u64)>,
        S: AsRef<str>,
    {
        let mut merged: HashMap<String, u64> = HashMap::new();
        for (raw, count) in entries {
            if let Some(word) = normalize_word(raw.as_ref()) {
                *merged.entry(word).or_default() += count;
            }
        }
        let mut pairs: Vec<(String, u64)> = merged.into_iter().collect();
        pairs.sort();
        let mut lexicon = Lexicon::default();
        for (id, (word, count)) in pairs.into_iter().enumerate() {
            lexicon.trie.insert(&word, id as u32);
            lexicon.index.insert(word.clone(), id as u32);
            lexicon.words.push(word);
            lexicon.counts.push(count.max(1));
        }
        lexicon
    }

    /// Every word with count one.
    pub fn uniform<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let lexicon = Self::from_counts(words.into_iter().map(|w| (w, 1)));
        Self { counts: vec![1; lexicon.words.len()], ..lexicon }
    }

    /// Reads `word<TAB>count` lines. Blank lines and `#` comments are skipped.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, LmError> {
        let path = path.as_ref();
        let mut entries = Vec::new();
        for_each_record(path, |_, line| {
            let (word, count) = line.rsplit_once('\t').ok_or("expected word<TAB>count")?;
            let count: u64 = count.trim().parse().map_err(|_| "count is not an integer")?;
            entries.push((word.trim().to_string(), count));
            Ok(())
        })
        .map_err(|e| e.at(path))?;
        Ok(Self::from_counts(entries))
    }

    pub fn write_tsv(&self, mut out: impl Write) -> std::io::Result<()> {
        for (word, count) in self.words.iter().zip(&self.counts) {
            writeln!(out, "{word}\t{count}")?;
        }
        Ok(())
    }

    /// The `n` most frequent words (ties alphabetical) as a new lexicon.
    pub fn top_n(&self, n: usize) -> Self {
        let mut ids: Vec<usize> = (0..self.words.len()).collect();
        ids.sort_by(|&a, &b| self.counts[b].cmp(&self.counts[a]).then(a.cmp(&b)));
        Self::from_counts(ids.into_iter().take(n).map(|i| (self.words[i].as_str(), self.counts[i])))
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn count(&self, id: u32) -> u64 {
        self.counts[id as usize]
    }

    pub fn contains(&self, word: &str) -> bool {
        self.trie.contains(word)
    }

    pub fn trie(&self) -> &Trie {
        &self.trie
    }

    pub fn with_prefix(&self, prefix: &str) -> Vec<&str> {
        self.trie.ids_with_prefix(prefix).into_iter().map(|id| self.word(id)).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.words.iter().map(String::as_str).zip(self.counts.iter().copied())
    }
}

struct RecordError {
    line: usize,
    message: String,
}

impl RecordError {
    fn at(self, path: &Path) -> LmError {
        if self.line == 0 {
            LmError::Io(path.display().to_string(), std::io::Error::other(self.message))
        } else {
            LmError::Parse { path: path.display().to_string(), line: self.line, message: self.message }
        }
    }
}

fn for_each_record(
    path: &Path,
    mut f: impl FnMut(usize, &str) -> Result<(), &'static str>,
) -> Result<(), RecordError> {
    let file = std::fs::File::open(path).map_err(|e| RecordError { line: 0, message: e.to_string() })?;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| RecordError { line: i + 1, message: e.to_string() })?;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        f(i + 1, trimmed).map_err(|m| RecordError { line: i + 1, message: m.to_string() })?;
    }
    Ok(())
}

/// Unigram and bigram counts gathered from running text.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NgramCounts {
    pub unigrams: HashMap<String, u64>,
    pub bigrams: HashMap<(String, String), u64>,
}

impl NgramCounts {
    /// Counts words and adjacent word pairs. Each line is an independent
    /// sentence: no bigram spans a line break.
    pub fn from_text(text: &str) -> Self {
        let mut counts = Self::default();
        for line in text.lines() {
            let words: Vec<String> = tokenize(line).collect();
            for w in &words {
                *counts.unigrams.entry(w.clone()).or_default() += 1;
            }
            for pair in words.windows(2) {
                *counts.bigrams.entry((pair[0].clone(), pair[1].clone())).or_default() += 1;
            }
        }
        counts
    }

    /// Reads `w1 w2<TAB>count` lines.
    pub fn load_bigrams(path: impl AsRef<Path>) -> Result<HashMap<(String, String), u64>, LmError> {
        let path = path.as_ref();
        let mut bigrams = HashMap::new();
        for_each_record(path, |_, line| {
            let (pair, count) = line.rsplit_once('\t').ok_or("expected w1 w2<TAB>count")?;
            let count: u64 = count.trim().parse().map_err(|_| "count is not an integer")?;
            let mut parts = pair.split_whitespace();
            let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err("expected exactly two words before the tab");
            };
            if let (Some(a), Some(b)) = (normalize_word(a), normalize_word(b)) {
                *bigrams.entry((a, b)).or_default() += count;
            }
            Ok(())
        })
        .map_err(|e| e.at(path))?;
        Ok(bigrams)
    }

    pub fn write_bigrams(&self, mut out: impl Write) -> std::io::Result<()> {
        let mut rows: Vec<_> = self.bigrams.iter().collect();
        rows.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
        for ((a, b), count) in rows {
            writeln!(out, "{a} {b}\t{count}")?;
        }
        Ok(())
    }
}

pub const DEFAULT_WORD_K: f64 = 0.1;

/// Add-k smoothed word model over a fixed lexicon. With order 2 a known
/// context word uses bigram counts; an empty or unseen context backs off to
/// the unigram distribution given by the lexicon counts.
#[derive(Debug, Clone)]
pub struct WordNgramModel {
    lexicon: Lexicon,
    order: usize,
    k: f64,
    total: u64,
    bigrams: HashMap<(u32, u32), u64>,
    context_totals: HashMap<u32, u64>,
}

impl WordNgramModel {
    pub fn new(
        lexicon: Lexicon,
        bigrams: &HashMap<(String, String), u64>,
        order: usize,
        k: f64,
    ) -> Result<Self, LmError> {
        if !(1..=2).contains(&order) {
            return Err(LmError::UnsupportedOrder(order));
        }
        let mut ids = HashMap::new();
        let mut context_totals: HashMap<u32, u64> = HashMap::new();
        if order == 2 {
            for ((a, b), &count) in bigrams {
                if let (Some(ia), Some(ib)) = (lexicon.id(a), lexicon.id(b)) {
                    *ids.entry((ia, ib)).or_default() += count;
                    *context_totals.entry(ia).or_default() += count;
                }
            }
        }
        let total = lexicon.counts.iter().sum();
        Ok(Self { lexicon, order, k, total, bigrams: ids, context_totals })
    }

    /// Unigram-only model over the lexicon counts.
    pub fn unigram(lexicon: Lexicon) -> Self {
        Self::new(lexicon, &HashMap::new(), 2, DEFAULT_WORD_K).expect("order 2 is supported")
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn smoothing(&self) -> f64 {
        self.k
    }

    fn vocab(&self) -> f64 {
        self.lexicon.len() as f64
    }

    fn context_id(&self, context: &[&str]) -> Option<u32> {
        if self.order < 2 {
            return None;
        }
        let last = normalize_word(context.last()?)?;
        let id = self.lexicon.id(&last)?;
        self.context_totals.contains_key(&id).then_some(id)
    }

    /// p(word | context) for a lexicon word id.
    pub fn p_id(&self, id: u32, context_id: Option<u32>) -> f64 {
        let k = self.k;
        match context_id {
            Some(ctx) => {
                let c = self.bigrams.get(&(ctx, id)).copied().unwrap_or(0) as f64;
                (c + k) / (self.context_totals[&ctx] as f64 + k * self.vocab())
            }
            None => (self.lexicon.count(id) as f64 + k) / (self.total as f64 + k * self.vocab()),
        }
    }

    /// Resolves the context once for repeated lookups.
    pub fn context(&self, context: &[&str]) -> Option<u32> {
        self.context_id(context)
    }

    /// Smoothed p(word | context). Out-of-lexicon words get the smoothing
    /// floor of the unigram distribution.
    pub fn p_word(&self, word: &str, context: &[&str]) -> f64 {
        match self.lexicon.id(word) {
            Some(id) => self.p_id(id, self.context_id(context)),
            None => self.k / (self.total as f64 + self.k * self.vocab()),
        }
    }

    /// The `k` words with the highest probability under `context`,
    /// ties broken alphabetically.
    pub fn prefix_shortlist(&self, context: &[&str], k: usize) -> Vec<&str> {
        let ctx = self.context_id(context);
        let mut scored: Vec<(f64, u32)> =
            self.lexicon.trie.ids_with_prefix("").into_iter().map(|id| (self.p_id(id, ctx), id)).collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        scored.into_iter().take(k).map(|(_, id)| self.lexicon.word(id)).collect()
    }
}

const BOUNDARY: usize = 26;

/// Character bigram over a–z with a shared start/end boundary symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct CharNgramModel {
    counts: [[u64; 27]; 27],
    k: f64,
}

impl CharNgramModel {
    pub fn uniform() -> Self {
        Self { counts: [[0; 27]; 27], k: 1.0 }
    }

    pub fn with_smoothing(mut self, k: f64) -> Self {
        self.k = k;
        self
    }

    /// Counts letter transitions inside each word, weighted by `count`.
    pub fn from_words<'a>(words: impl IntoIterator<Item = (&'a str, u64)>, k: f64) -> Self {
        let mut counts = [[0u64; 27]; 27];
        for (word, weight) in words {
            let mut prev = BOUNDARY;
            for b in word.bytes().filter(u8::is_ascii_lowercase) {
                let cur = (b - b'a') as usize;
                counts[prev][cur] += weight;
                prev = cur;
            }
            counts[prev][BOUNDARY] += weight;
        }
        Self { counts, k }
    }

    pub fn from_lexicon(lexicon: &Lexicon, k: f64) -> Self {
        Self::from_words(lexicon.iter(), k)
    }

    fn prev_index(prefix: &str) -> usize {
        match prefix.chars().last() {
            Some(c) if c.is_ascii_lowercase() => (c as u8 - b'a') as usize,
            _ => BOUNDARY,
        }
    }

    /// p(letter | last character of prefix); an empty prefix or one ending
    /// in a non-letter conditions on the word boundary.
    pub fn p_char(&self, letter: char, prefix: &str) -> f64 {
        if !letter.is_ascii_lowercase() {
            return 0.0;
        }
        let row = &self.counts[Self::prev_index(prefix)];
        let total: u64 = row[..26].iter().sum();
        let denom = total as f64 + 26.0 * self.k;
        if denom == 0.0 {
            return 1.0 / 26.0;
        }
        (row[(letter as u8 - b'a') as usize] as f64 + self.k) / denom
    }
}
