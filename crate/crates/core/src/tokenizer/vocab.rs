use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{CoreError, Result};

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const BOS_ID: u32 = 2;
pub const EOS_ID: u32 = 3;
pub const NUM_SPECIALS: usize = 4;

pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";
pub const BOS_TOKEN: &str = "<bos>";
pub const EOS_TOKEN: &str = "<eos>";

const SPECIAL_TOKENS: [&str; NUM_SPECIALS] = [PAD_TOKEN, UNK_TOKEN, BOS_TOKEN, EOS_TOKEN];

/// Token <-> id bijection with the four reserved specials at ids 0..3.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    fn with_specials() -> Self {
        let mut v = Vocabulary {
            tokens: Vec::new(),
            index: HashMap::new(),
        };
        for tok in SPECIAL_TOKENS {
            v.push(tok.to_string());
        }
        v
    }

    fn push(&mut self, token: String) {
        debug_assert!(!self.index.contains_key(&token));
        self.index.insert(token.clone(), self.tokens.len() as u32);
        self.tokens.push(token);
    }

    /// Builds a vocabulary from the `max_size - 4` most frequent tokens of a
    /// whitespace-tokenized corpus, plus the four specials. Frequency ties
    /// break lexicographically.
    pub fn build_word_vocab<I, S>(lines: I, max_size: usize) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        if max_size <= NUM_SPECIALS {
            return Err(CoreError::InvalidConfig(format!(
                "vocabulary size must exceed {NUM_SPECIALS}, got {max_size}"
            )));
        }
        let mut freq: HashMap<String, u64> = HashMap::new();
        for line in lines {
            for tok in line.as_ref().split_whitespace() {
                if SPECIAL_TOKENS.contains(&tok) {
                    continue;
                }
                *freq.entry(tok.to_string()).or_insert(0) += 1;
            }
        }
        if freq.is_empty() {
            return Err(CoreError::EmptyCorpus);
        }
        let mut by_freq: Vec<(String, u64)> = freq.into_iter().collect();
        by_freq.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let mut v = Self::with_specials();
        for (tok, _) in by_freq.into_iter().take(max_size - NUM_SPECIALS) {
            v.push(tok);
        }
        Ok(v)
    }

    /// Builds a vocabulary containing every distinct token of the corpus
    /// (insertion capped only by token inventory). Used for subword corpora
    /// where BPE already bounds the symbol count.
    pub fn build_full_vocab<I, S>(lines: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self::build_word_vocab(lines, usize::MAX)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false // the specials are always present
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(|s| s.as_str())
    }

    /// Maps tokens to ids; unknown tokens map to [`UNK_ID`].
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<u32> {
        tokens
            .iter()
            .map(|t| self.id(t.as_ref()).unwrap_or(UNK_ID))
            .collect()
    }

    /// Maps ids back to tokens; out-of-range ids are an error.
    pub fn decode(&self, ids: &[u32]) -> Result<Vec<String>> {
        ids.iter()
            .map(|&id| {
                self.token(id)
                    .map(str::to_string)
                    .ok_or(CoreError::IdOutOfRange {
                        id,
                        size: self.len(),
                    })
            })
            .collect()
    }

    /// Writes one token per line; the line number is the id.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        for tok in &self.tokens {
            writeln!(w, "{tok}")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let reader = BufReader::new(File::open(path)?);
        let mut tokens = Vec::new();
        let mut index = HashMap::new();
        for (i, line) in reader.lines().enumerate() {
            let tok = line?;
            if index.insert(tok.clone(), i as u32).is_some() {
                return Err(CoreError::BadFormat(format!(
                    "duplicate token {tok:?} in vocabulary file"
                )));
            }
            tokens.push(tok);
        }
        for (i, expected) in SPECIAL_TOKENS.iter().enumerate() {
            if tokens.get(i).map(String::as_str) != Some(*expected) {
                return Err(CoreError::BadFormat(format!(
                    "vocabulary file must start with the special tokens {SPECIAL_TOKENS:?}"
                )));
            }
        }
        Ok(Vocabulary { tokens, index })
    }
}
