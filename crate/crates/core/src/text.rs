//! Tokenization and boolean bag-of-words features.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use unicode_segmentation::UnicodeSegmentation;

use crate::error::{Error, Result};

/// Joins the tokens of an n-gram shingle. Never produced inside a token.
pub const NGRAM_SEPARATOR: char = '\u{1F}';

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMode {
    Words,
    Letters,
}

impl SplitMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitMode::Words => "words",
            SplitMode::Letters => "letters",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "words" => Some(SplitMode::Words),
            "letters" => Some(SplitMode::Letters),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    pub split_mode: SplitMode,
    pub ngram_order: usize,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self {
            lowercase: true,
            split_mode: SplitMode::Words,
            ngram_order: 1,
        }
    }
}

impl TokenizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ngram_order == 0 {
            return Err(Error::invalid("ngram_order must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DictionaryConfig {
    pub max_dictionary_size: usize,
    pub top_tokens_count: usize,
    pub min_token_occurrence: u64,
}

impl Default for DictionaryConfig {
    fn default() -> Self {
        Self {
            max_dictionary_size: 800_000,
            top_tokens_count: 16_000,
            min_token_occurrence: 1,
        }
    }
}

impl DictionaryConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_dictionary_size == 0 || self.top_tokens_count == 0 {
            return Err(Error::invalid(
                "max_dictionary_size and top_tokens_count must be positive",
            ));
        }
        if self.top_tokens_count > self.max_dictionary_size {
            return Err(Error::invalid(format!(
                "top_tokens_count {} exceeds max_dictionary_size {}",
                self.top_tokens_count, self.max_dictionary_size
            )));
        }
        if self.min_token_occurrence == 0 {
            return Err(Error::invalid("min_token_occurrence must be at least 1"));
        }
        Ok(())
    }
}

fn is_separator(c: char) -> bool {
    c.is_whitespace() || c == NGRAM_SEPARATOR
}

/// Splits `text` into tokens.
///
/// Word mode splits on runs of Unicode whitespace; letter mode emits one
/// token per extended grapheme cluster, skipping whitespace clusters. With
/// `ngram_order = n > 1` the unigrams are followed by every contiguous
/// shingle of length 2..=n, joined by `NGRAM_SEPARATOR`.
pub fn tokenize(text: &str, cfg: &TokenizerConfig) -> Vec<String> {
    let lowered;
    let text = if cfg.lowercase {
        lowered = text.to_lowercase();
        lowered.as_str()
    } else {
        text
    };
    let mut tokens: Vec<String> = match cfg.split_mode {
        SplitMode::Words => text
            .split(is_separator)
            .filter(|t| !t.is_empty())
            .map(str::to_string)
            .collect(),
        SplitMode::Letters => text
            .graphemes(true)
            .filter(|g| !g.chars().all(is_separator))
            .map(|g| g.chars().filter(|&c| c != NGRAM_SEPARATOR).collect())
            .collect(),
    };
    let unigrams = tokens.len();
    for n in 2..=cfg.ngram_order {
        if n > unigrams {
            break;
        }
        for start in 0..=unigrams - n {
            let mut shingle = tokens[start].clone();
            for t in &tokens[start + 1..start + n] {
                shingle.push(NGRAM_SEPARATOR);
                shingle.push_str(t);
            }
            tokens.push(shingle);
        }
    }
    tokens
}

/// Sparse boolean presence vector: sorted, de-duplicated feature ids.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct BowVector(Vec<u32>);

impl BowVector {
    /// Builds a vector from arbitrary ids, sorting and de-duplicating them.
    pub fn from_ids(mut ids: Vec<u32>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        BowVector(ids)
    }

    pub fn ids(&self) -> &[u32] {
        &self.0
    }

    pub fn contains(&self, id: u32) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TokenDictionary {
    tokens: Vec<String>,
    frequencies: Vec<u64>,
    index: HashMap<String, u32>,
    pub tokenizer: TokenizerConfig,
    pub config: DictionaryConfig,
}

impl TokenDictionary {
    fn from_parts(
        entries: Vec<(String, u64)>,
        tokenizer: TokenizerConfig,
        config: DictionaryConfig,
    ) -> Self {
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, (t, _))| (t.clone(), i as u32))
            .collect();
        let (tokens, frequencies) = entries.into_iter().unzip();
        Self {
            tokens,
            frequencies,
            index,
            tokenizer,
            config,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn frequencies(&self) -> &[u64] {
        &self.frequencies
    }

    pub fn id_of(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    /// Tokenizes with the dictionary's own tokenizer, then featurizes.
    pub fn featurize_text(&self, text: &str) -> BowVector {
        featurize(&tokenize(text, &self.tokenizer), self)
    }

    pub fn to_text(&self) -> String {
        let t = &self.tokenizer;
        let c = &self.config;
        let mut s = format!(
            "muboost-dictionary v1 lowercase={} split_mode={} ngram_order={} max_dictionary_size={} top_tokens_count={} min_token_occurrence={} tokens={}\n",
            t.lowercase,
            t.split_mode.as_str(),
            t.ngram_order,
            c.max_dictionary_size,
            c.top_tokens_count,
            c.min_token_occurrence,
            self.tokens.len()
        );
        for (tok, freq) in self.tokens.iter().zip(&self.frequencies) {
            let _ = writeln!(s, "{tok}\t{freq}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |m: &str| Error::Format(format!("token dictionary: {m}"));
        let mut lines = text.split_terminator('\n');
        let header = lines.next().ok_or_else(|| bad("empty"))?;
        let mut parts = header.split(' ');
        if parts.next() != Some("muboost-dictionary") {
            return Err(bad("bad magic"));
        }
        match parts.next() {
            Some("v1") => {}
            other => return Err(bad(&format!("unsupported version {other:?}"))),
        }
        let mut fields: HashMap<&str, &str> = HashMap::new();
        for p in parts {
            let (k, v) = p.split_once('=').ok_or_else(|| bad("malformed header"))?;
            fields.insert(k, v);
        }
        let get = |k: &str| {
            fields
                .get(k)
                .copied()
                .ok_or_else(|| bad(&format!("missing {k}")))
        };
        let num =
            |k: &str| -> Result<u64> { get(k)?.parse().map_err(|_| bad(&format!("bad {k}"))) };
        let tokenizer = TokenizerConfig {
            lowercase: get("lowercase")?
                .parse()
                .map_err(|_| bad("bad lowercase"))?,
            split_mode: SplitMode::parse(get("split_mode")?)
                .ok_or_else(|| bad("bad split_mode"))?,
            ngram_order: num("ngram_order")? as usize,
        };
        let config = DictionaryConfig {
            max_dictionary_size: num("max_dictionary_size")? as usize,
            top_tokens_count: num("top_tokens_count")? as usize,
            min_token_occurrence: num("min_token_occurrence")?,
        };
        let count = num("tokens")? as usize;
        let mut entries = Vec::with_capacity(count);
        for line in lines {
            let (tok, freq) = line
                .rsplit_once('\t')
                .ok_or_else(|| bad("malformed entry"))?;
            let freq: u64 = freq.parse().map_err(|_| bad("bad frequency"))?;
            entries.push((tok.to_string(), freq));
        }
        if entries.len() != count {
            return Err(bad("token count does not match header"));
        }
        Ok(Self::from_parts(entries, tokenizer, config))
    }
}

/// Canonical dictionary order: frequency descending, then token bytes ascending.
fn canonical_order(a: &(String, u64), b: &(String, u64)) -> std::cmp::Ordering {
    b.1.cmp(&a.1)
        .then_with(|| a.0.as_bytes().cmp(b.0.as_bytes()))
}

/// Fits a dictionary from tokenized documents using document frequency.
pub fn build_dictionary(
    corpus: &[Vec<String>],
    tokenizer: &TokenizerConfig,
    cfg: &DictionaryConfig,
) -> Result<TokenDictionary> {
    if corpus.is_empty() {
        return Err(Error::invalid(
            "cannot build a dictionary from an empty corpus",
        ));
    }
    cfg.validate()?;
    let counts: HashMap<&str, u64> = corpus
        .par_iter()
        .fold(HashMap::new, |mut acc: HashMap<&str, u64>, doc| {
            let unique: HashSet<&str> = doc.iter().map(String::as_str).collect();
            for t in unique {
                *acc.entry(t).or_default() += 1;
            }
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            for (t, c) in b {
                *a.entry(t).or_default() += c;
            }
            a
        });
    let mut entries: Vec<(String, u64)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= cfg.min_token_occurrence)
        .map(|(t, c)| (t.to_string(), c))
        .collect();
    entries.sort_unstable_by(canonical_order);
    entries.truncate(cfg.max_dictionary_size);
    entries.truncate(cfg.top_tokens_count);
    Ok(TokenDictionary::from_parts(
        entries,
        tokenizer.clone(),
        cfg.clone(),
    ))
}

/// Presence features of `tokens`; out-of-dictionary tokens are ignored.
pub fn featurize(tokens: &[String], dict: &TokenDictionary) -> BowVector {
    BowVector::from_ids(tokens.iter().filter_map(|t| dict.id_of(t)).collect())
}
