//! IBM Model-1 EM word aligner. Serves two roles: an external-aligner
//! candidate-list baseline, and the source-to-target dictionary used for
//! UNK replacement at decode time.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::accumulator::CandidateTable;
use crate::error::{CoreError, Result};
use crate::tokenizer::Vocabulary;

/// Surface form of the virtual NULL source token in serialized tables.
pub const NULL_TOKEN: &str = "<null>";

pub const DEFAULT_EM_ITERATIONS: usize = 5;
pub const DEFAULT_PRUNE_THRESHOLD: f64 = 1e-6;

/// Lexical translation probabilities t(target | source), trained with one
/// NULL token prepended to every source sentence. The NULL row lives at id
/// `v_src` (one past the source vocabulary).
#[derive(Debug, Clone, PartialEq)]
pub struct LexicalTable {
    t: BTreeMap<u32, BTreeMap<u32, f64>>,
    v_src: usize,
    v_tgt: usize,
}

impl LexicalTable {
    pub fn null_id(&self) -> u32 {
        self.v_src as u32
    }

    pub fn prob(&self, source_id: u32, target_id: u32) -> f64 {
        self.t
            .get(&source_id)
            .and_then(|row| row.get(&target_id))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn row(&self, source_id: u32) -> Option<&BTreeMap<u32, f64>> {
        self.t.get(&source_id)
    }

    /// Drops entries below `threshold`. Remaining probabilities are left
    /// as-is (ranking is unaffected), so pruned rows may sum to less than 1.
    pub fn prune(&mut self, threshold: f64) {
        for row in self.t.values_mut() {
            row.retain(|_, p| *p >= threshold);
        }
        self.t.retain(|_, row| !row.is_empty());
    }

    /// Mean negative log-likelihood per target token, exponentiated.
    /// Under Model-1, p(t | source) = 1/(l+1) * sum_s t(t|s) with the NULL
    /// token included among the l+1 source positions.
    pub fn corpus_perplexity(&self, pairs: &[(Vec<u32>, Vec<u32>)]) -> f64 {
        let mut nll = 0.0;
        let mut tokens = 0usize;
        for (src, tgt) in pairs {
            let l = src.len();
            for &t in tgt {
                let mut p = self.prob(self.null_id(), t);
                for &s in src {
                    p += self.prob(s, t);
                }
                p /= (l + 1) as f64;
                nll -= p.max(f64::MIN_POSITIVE).ln();
                tokens += 1;
            }
        }
        (nll / tokens.max(1) as f64).exp()
    }

    /// Top-n candidates per source token by translation probability, with
    /// the same ordering rules as attention-derived tables. The NULL row is
    /// excluded: it has no surface token.
    pub fn candidates(&self, n: usize) -> Result<CandidateTable> {
        if n == 0 {
            return Err(CoreError::InvalidConfig(
                "candidate list size must be at least 1".into(),
            ));
        }
        let mut entries = BTreeMap::new();
        for (&s, row) in &self.t {
            if s == self.null_id() {
                continue;
            }
            let mut scored: Vec<(u32, f64)> = row.iter().map(|(&t, &p)| (t, p)).collect();
            scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
            scored.truncate(n);
            entries.insert(s, scored.into_iter().map(|(t, _)| t).collect());
        }
        Ok(CandidateTable::from_entries(n, entries))
    }

    /// Per source token, the argmax target token (ties broken by ascending
    /// target id). Sources absent from the table get no entry; decode falls
    /// back to copying the source word.
    pub fn unk_dictionary(&self) -> BTreeMap<u32, u32> {
        let mut dict = BTreeMap::new();
        for (&s, row) in &self.t {
            if s == self.null_id() {
                continue;
            }
            let best = row
                .iter()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then_with(|| b.0.cmp(a.0)));
            if let Some((&t, _)) = best {
                dict.insert(s, t);
            }
        }
        dict
    }

    /// TSV `source<TAB>target<TAB>probability`, sorted by source token then
    /// descending probability. The NULL row is written as `<null>`.
    pub fn save(&self, path: &Path, src_vocab: &Vocabulary, tgt_vocab: &Vocabulary) -> Result<()> {
        let mut lines: Vec<(String, Vec<(f64, String)>)> = Vec::new();
        for (&s, row) in &self.t {
            let src_tok = if s == self.null_id() {
                NULL_TOKEN.to_string()
            } else {
                src_vocab
                    .token(s)
                    .ok_or(CoreError::IdOutOfRange {
                        id: s,
                        size: src_vocab.len(),
                    })?
                    .to_string()
            };
            let mut entries = Vec::with_capacity(row.len());
            for (&t, &p) in row {
                let tgt_tok = tgt_vocab.token(t).ok_or(CoreError::IdOutOfRange {
                    id: t,
                    size: tgt_vocab.len(),
                })?;
                entries.push((p, tgt_tok.to_string()));
            }
            entries.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then_with(|| a.1.cmp(&b.1)));
            lines.push((src_tok, entries));
        }
        lines.sort_by(|a, b| a.0.cmp(&b.0));
        let mut w = BufWriter::new(File::create(path)?);
        for (src_tok, entries) in lines {
            for (p, tgt_tok) in entries {
                writeln!(w, "{src_tok}\t{tgt_tok}\t{p}")?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path, src_vocab: &Vocabulary, tgt_vocab: &Vocabulary) -> Result<Self> {
        let reader = BufReader::new(File::open(path)?);
        let mut t: BTreeMap<u32, BTreeMap<u32, f64>> = BTreeMap::new();
        let null_id = src_vocab.len() as u32;
        for line in reader.lines() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(CoreError::BadFormat(format!(
                    "expected 3 tab-separated fields, got {:?}",
                    line
                )));
            }
            let s = if fields[0] == NULL_TOKEN {
                null_id
            } else {
                match src_vocab.id(fields[0]) {
                    Some(id) => id,
                    None => continue,
                }
            };
            let Some(tgt) = tgt_vocab.id(fields[1]) else {
                continue;
            };
            let p: f64 = fields[2]
                .parse()
                .map_err(|_| CoreError::BadFormat(format!("bad probability {:?}", fields[2])))?;
            t.entry(s).or_default().insert(tgt, p);
        }
        Ok(LexicalTable {
            t,
            v_src: src_vocab.len(),
            v_tgt: tgt_vocab.len(),
        })
    }
}

/// Standard Model-1 EM over a parallel corpus: uniform initialization,
/// fractional counts with per-target normalization over the source tokens
/// (NULL included), then per-source renormalization.
pub fn train_model1(
    pairs: &[(Vec<u32>, Vec<u32>)],
    v_src: usize,
    v_tgt: usize,
    iterations: usize,
) -> Result<LexicalTable> {
    if pairs.is_empty() {
        return Err(CoreError::EmptyCorpus);
    }
    if iterations == 0 {
        return Err(CoreError::InvalidConfig(
            "Model-1 needs at least one EM iteration".into(),
        ));
    }
    let null_id = v_src as u32;
    // uniform start over co-occurring pairs; cells never touched by a
    // sentence pair can never earn probability mass anyway
    let mut table: BTreeMap<u32, BTreeMap<u32, f64>> = BTreeMap::new();
    let uniform = 1.0 / v_tgt as f64;
    for (src, tgt) in pairs {
        for &t in tgt {
            for &s in src.iter().chain(std::iter::once(&null_id)) {
                table.entry(s).or_default().entry(t).or_insert(uniform);
            }
        }
    }

    for _ in 0..iterations {
        let mut counts: BTreeMap<u32, BTreeMap<u32, f64>> = BTreeMap::new();
        let mut totals: BTreeMap<u32, f64> = BTreeMap::new();
        for (src, tgt) in pairs {
            for &t in tgt {
                let mut denom = 0.0;
                for &s in src.iter().chain(std::iter::once(&null_id)) {
                    denom += table[&s][&t];
                }
                for &s in src.iter().chain(std::iter::once(&null_id)) {
                    let c = table[&s][&t] / denom;
                    *counts.entry(s).or_default().entry(t).or_insert(0.0) += c;
                    *totals.entry(s).or_insert(0.0) += c;
                }
            }
        }
        for (s, row) in counts.iter_mut() {
            let total = totals[s];
            for c in row.values_mut() {
                *c /= total;
            }
        }
        table = counts;
    }
    Ok(LexicalTable {
        t: table,
        v_src,
        v_tgt,
    })
}

/// [`train_model1`] with the default iteration count, followed by pruning of
/// probabilities below the default threshold.
pub fn train_model1_default(
    pairs: &[(Vec<u32>, Vec<u32>)],
    v_src: usize,
    v_tgt: usize,
) -> Result<LexicalTable> {
    let mut table = train_model1(pairs, v_src, v_tgt, DEFAULT_EM_ITERATIONS)?;
    table.prune(DEFAULT_PRUNE_THRESHOLD);
    Ok(table)
}
