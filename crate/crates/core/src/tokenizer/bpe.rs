use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{CoreError, Result};

/// Marker appended to every non-final subword of a word, so that
/// detokenization can reproduce the original text exactly.
pub const CONTINUATION_MARKER: &str = "@@";

const FILE_HEADER: &str = "bpe-merges v1";

/// An ordered list of symbol-pair merges learned from a corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpeModel {
    merges: Vec<(String, String)>,
}

/// Learns `num_merges` byte-pair merges from a whitespace-tokenized corpus.
///
/// At each step the most frequent adjacent symbol pair (counted across word
/// types, weighted by word frequency) is merged; frequency ties break
/// lexicographically. Learning stops early once no pair occurs at least
/// twice.
pub fn bpe_learn<I, S>(lines: I, num_merges: usize) -> Result<BpeModel>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut word_freq: HashMap<Vec<String>, u64> = HashMap::new();
    for line in lines {
        for word in line.as_ref().split_whitespace() {
            let symbols: Vec<String> = word.chars().map(|c| c.to_string()).collect();
            *word_freq.entry(symbols).or_insert(0) += 1;
        }
    }
    if word_freq.is_empty() {
        return Err(CoreError::EmptyCorpus);
    }

    let mut merges = Vec::with_capacity(num_merges);
    for _ in 0..num_merges {
        let mut pair_freq: HashMap<(String, String), u64> = HashMap::new();
        for (symbols, freq) in &word_freq {
            for pair in symbols.windows(2) {
                *pair_freq
                    .entry((pair[0].clone(), pair[1].clone()))
                    .or_insert(0) += freq;
            }
        }
        let best = pair_freq
            .into_iter()
            .filter(|&(_, freq)| freq >= 2)
            .max_by(|a, b| a.1.cmp(&b.1).then_with(|| b.0.cmp(&a.0)));
        let Some((pair, _)) = best else { break };

        word_freq = word_freq
            .into_iter()
            .map(|(symbols, freq)| (merge_symbols(&symbols, &pair), freq))
            .collect();
        merges.push(pair);
    }
    Ok(BpeModel { merges })
}

fn merge_symbols(symbols: &[String], pair: &(String, String)) -> Vec<String> {
    let mut out = Vec::with_capacity(symbols.len());
    let mut i = 0;
    while i < symbols.len() {
        if i + 1 < symbols.len() && symbols[i] == pair.0 && symbols[i + 1] == pair.1 {
            out.push(format!("{}{}", pair.0, pair.1));
            i += 2;
        } else {
            out.push(symbols[i].clone());
            i += 1;
        }
    }
    out
}

impl BpeModel {
    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    /// Segments one word, applying the merges in learned order, and marks
    /// every non-final subword with [`CONTINUATION_MARKER`].
    pub fn apply_word(&self, word: &str) -> Vec<String> {
        let mut symbols: Vec<String> = word.chars().map(|c| c.to_string()).collect();
        if symbols.is_empty() {
            return Vec::new();
        }
        for pair in &self.merges {
            if symbols.len() < 2 {
                break;
            }
            symbols = merge_symbols(&symbols, pair);
        }
        let last = symbols.len() - 1;
        for sym in &mut symbols[..last] {
            sym.push_str(CONTINUATION_MARKER);
        }
        symbols
    }

    /// Segments a whitespace-tokenized line.
    pub fn apply_line(&self, line: &str) -> Vec<String> {
        line.split_whitespace()
            .flat_map(|w| self.apply_word(w))
            .collect()
    }

    /// One merge per line, "left right", preceded by a version header.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "{FILE_HEADER}")?;
        for (left, right) in &self.merges {
            writeln!(w, "{left} {right}")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut lines = BufReader::new(File::open(path)?).lines();
        match lines.next() {
            Some(Ok(header)) if header == FILE_HEADER => {}
            _ => {
                return Err(CoreError::BadFormat(format!(
                    "expected header {FILE_HEADER:?}"
                )))
            }
        }
        let mut merges = Vec::new();
        for line in lines {
            let line = line?;
            let mut parts = line.split(' ');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(l), Some(r), None) if !l.is_empty() && !r.is_empty() => {
                    merges.push((l.to_string(), r.to_string()));
                }
                _ => {
                    return Err(CoreError::BadFormat(format!(
                        "malformed merge line {line:?}"
                    )))
                }
            }
        }
        Ok(BpeModel { merges })
    }
}

/// Inverse of tokenization: joins subwords, fusing any token that carries the
/// continuation marker with its successor.
pub fn detokenize<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    let mut glue = false;
    for tok in tokens {
        if !out.is_empty() && !glue {
            out.push(' ');
        }
        let tok = tok.as_ref();
        if let Some(stem) = tok.strip_suffix(CONTINUATION_MARKER) {
            out.push_str(stem);
            glue = true;
        } else {
            out.push_str(tok);
            glue = false;
        }
    }
    out
}
