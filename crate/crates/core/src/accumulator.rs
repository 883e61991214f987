//! Soft alignments learned from attention during training, and the
//! decode-time candidate tables derived from them.
//!
//! Each decoder step's attention row is treated as fractional counts linking
//! the emitted target token to source tokens. Counts above a threshold
//! accumulate into a sparse source-by-target matrix; normalizing each source
//! row and taking the top-n target ids yields the candidate table that
//! restricts the output softmax at decode time.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::ArrayView1;

use crate::error::{CoreError, Result};
use crate::tokenizer::{Vocabulary, PAD_ID};
use crate::Real;

const MATRIX_MAGIC: &[u8; 8] = b"ATNVMTRX";
const MATRIX_VERSION: u32 = 1;

/// Accumulation policy: minimum attention weight for an alignment event to
/// be recorded, and how many initial epochs are skipped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccumulatorConfig {
    pub alpha_threshold: f64,
    /// Completed epochs to skip; accumulation starts at epoch
    /// `delay_epochs + 1`.
    pub delay_epochs: u32,
}

impl Default for AccumulatorConfig {
    fn default() -> Self {
        AccumulatorConfig {
            alpha_threshold: 0.1,
            delay_epochs: 1,
        }
    }
}

impl AccumulatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.alpha_threshold) {
            return Err(CoreError::InvalidConfig(format!(
                "alpha threshold must be in [0, 1), got {}",
                self.alpha_threshold
            )));
        }
        Ok(())
    }
}

/// Fractional attention counts per (source token, target token), stored
/// sparsely: absent cells are zero, stored cells are positive.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseAlignmentMatrix {
    rows: BTreeMap<u32, BTreeMap<u32, f64>>,
    v_src: usize,
    v_tgt: usize,
    alpha_threshold: f64,
    epochs: u32,
}

impl SparseAlignmentMatrix {
    pub fn new(v_src: usize, v_tgt: usize, alpha_threshold: f64) -> Self {
        SparseAlignmentMatrix {
            rows: BTreeMap::new(),
            v_src,
            v_tgt,
            alpha_threshold,
            epochs: 0,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.v_src, self.v_tgt)
    }

    pub fn alpha_threshold(&self) -> f64 {
        self.alpha_threshold
    }

    pub fn epochs(&self) -> u32 {
        self.epochs
    }

    pub fn set_epochs(&mut self, epochs: u32) {
        self.epochs = epochs;
    }

    pub fn is_zero(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn nonzeros(&self) -> usize {
        self.rows.values().map(BTreeMap::len).sum()
    }

    pub fn row(&self, source_id: u32) -> Option<&BTreeMap<u32, f64>> {
        self.rows.get(&source_id)
    }

    pub fn rows(&self) -> impl Iterator<Item = (u32, &BTreeMap<u32, f64>)> {
        self.rows.iter().map(|(&s, row)| (s, row))
    }

    pub fn count(&self, source_id: u32, target_id: u32) -> f64 {
        self.rows
            .get(&source_id)
            .and_then(|r| r.get(&target_id))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.rows.values().flat_map(|r| r.values()).copied().sum()
    }

    fn add(&mut self, source_id: u32, target_id: u32, weight: f64) {
        debug_assert!((source_id as usize) < self.v_src);
        debug_assert!((target_id as usize) < self.v_tgt);
        *self
            .rows
            .entry(source_id)
            .or_default()
            .entry(target_id)
            .or_insert(0.0) += weight;
    }

    /// Records one decoder step: for every source position whose attention
    /// weight strictly exceeds the threshold, the weight is added to the
    /// (source token, emitted target token) cell. PAD positions are never
    /// recorded, and nothing is recorded while `current_epoch` is within the
    /// configured delay.
    pub fn record_step(
        &mut self,
        alpha: ArrayView1<Real>,
        source_ids: &[u32],
        target_id: u32,
        config: &AccumulatorConfig,
        current_epoch: u32,
    ) -> Result<()> {
        if alpha.len() != source_ids.len() {
            return Err(CoreError::DimensionMismatch(format!(
                "attention row has {} positions but source has {}",
                alpha.len(),
                source_ids.len()
            )));
        }
        if target_id as usize >= self.v_tgt {
            return Err(CoreError::IdOutOfRange {
                id: target_id,
                size: self.v_tgt,
            });
        }
        if current_epoch <= config.delay_epochs {
            return Ok(());
        }
        for (&weight, &source_id) in alpha.iter().zip(source_ids) {
            if source_id == PAD_ID {
                continue;
            }
            let weight = weight as f64;
            if weight > config.alpha_threshold {
                self.add(source_id, target_id, weight);
            }
        }
        Ok(())
    }

    /// Cell-wise sum of two matrices with identical dims and threshold.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        if self.v_src != other.v_src
            || self.v_tgt != other.v_tgt
            || self.alpha_threshold != other.alpha_threshold
        {
            return Err(CoreError::InvalidConfig(format!(
                "cannot merge matrices with different dims or threshold: \
                 ({}, {}, {}) vs ({}, {}, {})",
                self.v_src,
                self.v_tgt,
                self.alpha_threshold,
                other.v_src,
                other.v_tgt,
                other.alpha_threshold
            )));
        }
        let mut out = self.clone();
        for (&s, row) in &other.rows {
            for (&t, &c) in row {
                out.add(s, t, c);
            }
        }
        out.epochs = self.epochs.max(other.epochs);
        Ok(out)
    }

    /// Per-source-row conditional distribution over target tokens: each
    /// stored count divided by its row sum. Empty rows stay empty.
    pub fn normalize(&self) -> Self {
        let mut out = self.clone();
        for row in out.rows.values_mut() {
            let sum: f64 = row.values().sum();
            for c in row.values_mut() {
                *c /= sum;
            }
        }
        out
    }

    /// Drops cells with counts below `min_count` (and rows that empty out).
    pub fn trim(&mut self, min_count: f64) {
        for row in self.rows.values_mut() {
            row.retain(|_, c| *c >= min_count);
        }
        self.rows.retain(|_, row| !row.is_empty());
    }

    /// Top-n target ids per source row from the normalized distribution,
    /// ordered by descending score with ties broken by ascending target id.
    pub fn top_n(&self, n: usize) -> Result<CandidateTable> {
        if n == 0 {
            return Err(CoreError::InvalidConfig(
                "candidate list size must be at least 1".into(),
            ));
        }
        let normalized = self.normalize();
        let mut entries = BTreeMap::new();
        for (&s, row) in &normalized.rows {
            let mut scored: Vec<(u32, f64)> = row.iter().map(|(&t, &c)| (t, c)).collect();
            scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
            scored.truncate(n);
            entries.insert(s, scored.into_iter().map(|(t, _)| t).collect());
        }
        Ok(CandidateTable { n, entries })
    }

    /// Density (non-zero fraction of the full matrix), the byte size of the
    /// serialized form, and the mean number of stored targets over source
    /// tokens with non-empty rows.
    pub fn density_stats(&self) -> DensityStats {
        let nonzeros = self.nonzeros();
        let density = nonzeros as f64 / (self.v_src as f64 * self.v_tgt as f64);
        // header + per row: source id, entry count, then (id, count) pairs
        let header = 8 + 4 + 4 + 4 + 8 + 4;
        let stored_bytes = header
            + self
                .rows
                .values()
                .map(|row| 4 + 4 + 12 * row.len())
                .sum::<usize>();
        let avg_targets_per_source = if self.rows.is_empty() {
            0.0
        } else {
            nonzeros as f64 / self.rows.len() as f64
        };
        DensityStats {
            density,
            stored_bytes,
            avg_targets_per_source,
        }
    }

    /// Versioned binary format: header (magic, version, dims, threshold,
    /// epochs), then per non-empty row the source id, entry count, and
    /// (target id, count) pairs; ids are little-endian u32, counts f64.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MATRIX_MAGIC)?;
        w.write_all(&MATRIX_VERSION.to_le_bytes())?;
        w.write_all(&(self.v_src as u32).to_le_bytes())?;
        w.write_all(&(self.v_tgt as u32).to_le_bytes())?;
        w.write_all(&self.alpha_threshold.to_le_bytes())?;
        w.write_all(&self.epochs.to_le_bytes())?;
        for (&s, row) in &self.rows {
            w.write_all(&s.to_le_bytes())?;
            w.write_all(&(row.len() as u32).to_le_bytes())?;
            for (&t, &c) in row {
                w.write_all(&t.to_le_bytes())?;
                w.write_all(&c.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MATRIX_MAGIC {
            return Err(CoreError::BadFormat("not an alignment matrix file".into()));
        }
        let version = read_u32(&mut r)?;
        if version != MATRIX_VERSION {
            return Err(CoreError::BadFormat(format!(
                "unsupported matrix version {version}"
            )));
        }
        let v_src = read_u32(&mut r)? as usize;
        let v_tgt = read_u32(&mut r)? as usize;
        let alpha_threshold = read_f64(&mut r)?;
        let epochs = read_u32(&mut r)?;
        let mut matrix = SparseAlignmentMatrix::new(v_src, v_tgt, alpha_threshold);
        matrix.epochs = epochs;
        loop {
            let mut id_buf = [0u8; 4];
            match r.read_exact(&mut id_buf) {
                Ok(()) => {}
                Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => break,
                Err(e) => return Err(e.into()),
            }
            let s = u32::from_le_bytes(id_buf);
            if s as usize >= v_src {
                return Err(CoreError::BadFormat(format!("source id {s} out of range")));
            }
            let entries = read_u32(&mut r)?;
            let mut row = BTreeMap::new();
            for _ in 0..entries {
                let t = read_u32(&mut r)?;
                if t as usize >= v_tgt {
                    return Err(CoreError::BadFormat(format!("target id {t} out of range")));
                }
                let c = read_f64(&mut r)?;
                row.insert(t, c);
            }
            if matrix.rows.insert(s, row).is_some() {
                return Err(CoreError::BadFormat(format!("duplicate row for id {s}")));
            }
        }
        Ok(matrix)
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityStats {
    pub density: f64,
    pub stored_bytes: usize,
    pub avg_targets_per_source: f64,
}

/// Per-source-token ordered candidate lists: the decode-time vocabulary
/// oracle. Each list holds at most `n` target ids in descending score order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateTable {
    n: usize,
    entries: BTreeMap<u32, Vec<u32>>,
}

impl CandidateTable {
    pub fn empty(n: usize) -> Self {
        CandidateTable {
            n,
            entries: BTreeMap::new(),
        }
    }

    pub(crate) fn from_entries(n: usize, entries: BTreeMap<u32, Vec<u32>>) -> Self {
        debug_assert!(entries.values().all(|c| c.len() <= n));
        CandidateTable { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn candidates(&self, source_id: u32) -> &[u32] {
        self.entries.get(&source_id).map_or(&[], Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &[u32])> {
        self.entries.iter().map(|(&s, c)| (s, c.as_slice()))
    }

    /// TSV with token strings, one line per source token:
    /// `source<TAB>target_1<TAB>...<TAB>target_n`.
    pub fn save(&self, path: &Path, src_vocab: &Vocabulary, tgt_vocab: &Vocabulary) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        for (&s, cands) in &self.entries {
            let src_tok = src_vocab.token(s).ok_or(CoreError::IdOutOfRange {
                id: s,
                size: src_vocab.len(),
            })?;
            write!(w, "{src_tok}")?;
            for &t in cands {
                let tgt_tok = tgt_vocab.token(t).ok_or(CoreError::IdOutOfRange {
                    id: t,
                    size: tgt_vocab.len(),
                })?;
                write!(w, "\t{tgt_tok}")?;
            }
            writeln!(w)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Loads a candidate TSV under the given vocabularies. Tokens the
    /// vocabularies do not contain are skipped, which keeps tables portable
    /// across vocabulary builds.
    pub fn load(
        path: &Path,
        n: usize,
        src_vocab: &Vocabulary,
        tgt_vocab: &Vocabulary,
    ) -> Result<Self> {
        let reader = BufReader::new(File::open(path)?);
        let mut entries = BTreeMap::new();
        for line in reader.lines() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            let src_tok = fields.next().unwrap();
            let Some(s) = src_vocab.id(src_tok) else {
                continue;
            };
            let cands: Vec<u32> = fields.filter_map(|tok| tgt_vocab.id(tok)).take(n).collect();
            if !cands.is_empty() {
                entries.insert(s, cands);
            }
        }
        Ok(CandidateTable { n, entries })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr1;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn cfg(thr: f64, delay: u32) -> AccumulatorConfig {
        AccumulatorConfig {
            alpha_threshold: thr,
            delay_epochs: delay,
        }
    }

    #[test]
    fn strict_threshold_drops_boundary_weights() {
        let mut m = SparseAlignmentMatrix::new(10, 10, 0.1);
        let alpha = arr1(&[0.05, 0.85, 0.10]);
        m.record_step(alpha.view(), &[4, 5, 6], 7, &cfg(0.1, 0), 1)
            .unwrap();
        assert_eq!(m.nonzeros(), 1);
        assert_eq!(m.count(5, 7), 0.85);
        assert_eq!(m.count(6, 7), 0.0);
    }

    #[test]
    fn delay_epochs_suppress_recording() {
        let mut m = SparseAlignmentMatrix::new(10, 10, 0.1);
        let alpha = arr1(&[1.0]);
        m.record_step(alpha.view(), &[4], 7, &cfg(0.1, 1), 1).unwrap();
        assert!(m.is_zero());
        m.record_step(alpha.view(), &[4], 7, &cfg(0.1, 1), 2).unwrap();
        assert_eq!(m.count(4, 7), 1.0);
    }

    #[test]
    fn counts_accumulate_additively() {
        let mut m = SparseAlignmentMatrix::new(10, 10, 0.1);
        m.record_step(arr1(&[0.6, 0.4]).view(), &[4, 5], 7, &cfg(0.1, 0), 1)
            .unwrap();
        m.record_step(arr1(&[0.3, 0.7]).view(), &[4, 5], 7, &cfg(0.1, 0), 1)
            .unwrap();
        assert!((m.count(4, 7) - 0.9).abs() < 1e-15);
    }

    #[test]
    fn pad_positions_are_never_recorded() {
        let mut m = SparseAlignmentMatrix::new(10, 10, 0.0);
        m.record_step(arr1(&[0.5, 0.5]).view(), &[PAD_ID, 5], 7, &cfg(0.0, 0), 1)
            .unwrap();
        assert_eq!(m.count(PAD_ID, 7), 0.0);
        assert_eq!(m.count(5, 7), 0.5);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let mut m = SparseAlignmentMatrix::new(10, 10, 0.1);
        let r = m.record_step(arr1(&[1.0]).view(), &[1, 2], 3, &cfg(0.1, 0), 1);
        assert!(matches!(r, Err(CoreError::DimensionMismatch(_))));
    }

    #[test]
    fn merge_with_empty_is_identity() {
        let mut a = SparseAlignmentMatrix::new(5, 5, 0.1);
        a.add(1, 2, 0.5);
        let empty = SparseAlignmentMatrix::new(5, 5, 0.1);
        assert_eq!(a.merge(&empty).unwrap(), a);
    }

    #[test]
    fn merge_is_commutative() {
        let mut a = SparseAlignmentMatrix::new(5, 5, 0.1);
        a.add(1, 2, 0.5);
        a.add(2, 3, 0.25);
        let mut b = SparseAlignmentMatrix::new(5, 5, 0.1);
        b.add(1, 2, 0.75);
        b.add(4, 4, 1.0);
        assert_eq!(a.merge(&b).unwrap(), b.merge(&a).unwrap());
    }

    #[test]
    fn merge_rejects_mismatched_configs() {
        let a = SparseAlignmentMatrix::new(5, 5, 0.1);
        let b = SparseAlignmentMatrix::new(5, 6, 0.1);
        assert!(a.merge(&b).is_err());
        let c = SparseAlignmentMatrix::new(5, 5, 0.2);
        assert!(a.merge(&c).is_err());
    }

    /// Oracle: replaying a 10-sentence stream into shards and merging in
    /// order equals single-pass accumulation, bit for bit.
    #[test]
    fn sharded_merge_equals_single_pass_replay() {
        let mut rng = ChaCha20Rng::seed_from_u64(99);
        let config = cfg(0.1, 0);
        let mut stream = Vec::new();
        for _ in 0..10 {
            let l = rng.gen_range(2..6);
            let mut alpha: Vec<Real> = (0..l).map(|_| rng.gen_range(0.01..1.0)).collect();
            let sum: Real = alpha.iter().sum();
            alpha.iter_mut().for_each(|a| *a /= sum);
            let src: Vec<u32> = (0..l).map(|_| rng.gen_range(4..20)).collect();
            let tgt: u32 = rng.gen_range(4..20);
            stream.push((alpha, src, tgt));
        }
        let mut single = SparseAlignmentMatrix::new(20, 20, 0.1);
        for (alpha, src, tgt) in &stream {
            single
                .record_step(arr1(alpha).view(), src, *tgt, &config, 1)
                .unwrap();
        }
        let mut shards = Vec::new();
        for chunk in stream.chunks(4) {
            let mut m = SparseAlignmentMatrix::new(20, 20, 0.1);
            for (alpha, src, tgt) in chunk {
                m.record_step(arr1(alpha).view(), src, *tgt, &config, 1)
                    .unwrap();
            }
            shards.push(m);
        }
        let merged = shards
            .into_iter()
            .reduce(|acc, m| acc.merge(&m).unwrap())
            .unwrap();
        assert_eq!(merged, single);
    }

    #[test]
    fn normalize_divides_by_row_sums() {
        let mut m = SparseAlignmentMatrix::new(5, 5, 0.1);
        m.add(1, 2, 3.0);
        m.add(1, 3, 1.0);
        m.add(2, 4, 7.0);
        let n = m.normalize();
        assert_eq!(n.count(1, 2), 0.75);
        assert_eq!(n.count(1, 3), 0.25);
        assert_eq!(n.count(2, 4), 1.0);
    }

    #[test]
    fn normalized_rows_sum_to_one() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let mut m = SparseAlignmentMatrix::new(30, 30, 0.1);
        for _ in 0..200 {
            m.add(
                rng.gen_range(0..30),
                rng.gen_range(0..30),
                rng.gen_range(0.001..2.0),
            );
        }
        for (_, row) in m.normalize().rows() {
            let sum: f64 = row.values().sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn top_n_orders_by_count() {
        let mut m = SparseAlignmentMatrix::new(5, 10, 0.1);
        m.add(1, 5, 0.9);
        m.add(1, 6, 2.5);
        m.add(1, 7, 0.4);
        let table = m.top_n(2).unwrap();
        assert_eq!(table.candidates(1), &[6, 5]);
        let table = m.top_n(5).unwrap();
        assert_eq!(table.candidates(1), &[6, 5, 7]);
    }

    #[test]
    fn top_n_breaks_ties_by_ascending_id() {
        let mut m = SparseAlignmentMatrix::new(5, 10, 0.1);
        m.add(1, 9, 1.0);
        m.add(1, 4, 1.0);
        m.add(1, 6, 1.0);
        assert_eq!(m.top_n(2).unwrap().candidates(1), &[4, 6]);
    }

    #[test]
    fn top_n_from_raw_counts_matches_normalized_route() {
        // per-row normalization is a positive scaling, so ranks are identical
        let mut rng = ChaCha20Rng::seed_from_u64(17);
        for _ in 0..20 {
            let mut m = SparseAlignmentMatrix::new(12, 12, 0.1);
            for _ in 0..60 {
                m.add(
                    rng.gen_range(0..12),
                    rng.gen_range(0..12),
                    rng.gen_range(0.001..3.0),
                );
            }
            for n in 1..6 {
                let via_normalized = m.top_n(n).unwrap();
                // raw-count oracle
                for (s, row) in m.rows() {
                    let mut scored: Vec<(u32, f64)> = row.iter().map(|(&t, &c)| (t, c)).collect();
                    scored.sort_by(|a, b| {
                        b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0))
                    });
                    scored.truncate(n);
                    let raw: Vec<u32> = scored.into_iter().map(|(t, _)| t).collect();
                    assert_eq!(via_normalized.candidates(s), raw.as_slice());
                }
            }
        }
    }

    #[test]
    fn density_counts_nonzero_cells() {
        let mut m = SparseAlignmentMatrix::new(4, 5, 0.1);
        m.add(1, 2, 0.5);
        m.add(3, 4, 0.5);
        let stats = m.density_stats();
        assert!((stats.density - 0.10).abs() < 1e-15);
        assert_eq!(stats.avg_targets_per_source, 1.0);
    }

    #[test]
    fn empty_matrix_stats_are_zero() {
        let m = SparseAlignmentMatrix::new(4, 5, 0.1);
        let stats = m.density_stats();
        assert_eq!(stats.density, 0.0);
        assert_eq!(stats.avg_targets_per_source, 0.0);
    }

    #[test]
    fn density_matches_dense_count_oracle() {
        let mut rng = ChaCha20Rng::seed_from_u64(55);
        let mut m = SparseAlignmentMatrix::new(8, 9, 0.1);
        let mut dense = vec![vec![0.0f64; 9]; 8];
        for _ in 0..40 {
            let (s, t) = (rng.gen_range(0..8u32), rng.gen_range(0..9u32));
            let c = rng.gen_range(0.01..1.0);
            m.add(s, t, c);
            dense[s as usize][t as usize] += c;
        }
        let nonzero = dense.iter().flatten().filter(|&&c| c > 0.0).count();
        assert!((m.density_stats().density - nonzero as f64 / 72.0).abs() < 1e-15);
    }

    #[test]
    fn save_load_round_trips_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("matrix.bin");
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let mut m = SparseAlignmentMatrix::new(50, 60, 0.1);
        m.set_epochs(3);
        for _ in 0..300 {
            m.add(
                rng.gen_range(0..50),
                rng.gen_range(0..60),
                rng.gen::<f64>(),
            );
        }
        m.save(&path).unwrap();
        assert_eq!(SparseAlignmentMatrix::load(&path).unwrap(), m);
        // declared stored size matches the actual file
        assert_eq!(
            std::fs::metadata(&path).unwrap().len() as usize,
            m.density_stats().stored_bytes
        );
    }

    #[test]
    fn truncated_matrix_file_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("matrix.bin");
        let mut m = SparseAlignmentMatrix::new(5, 5, 0.1);
        m.add(1, 2, 0.5);
        m.add(2, 2, 0.25);
        m.save(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 5]).unwrap();
        assert!(SparseAlignmentMatrix::load(&path).is_err());
    }

    #[test]
    fn empty_matrix_round_trips_with_dims() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("matrix.bin");
        let m = SparseAlignmentMatrix::new(123, 456, 0.05);
        m.save(&path).unwrap();
        let loaded = SparseAlignmentMatrix::load(&path).unwrap();
        assert_eq!(loaded.dims(), (123, 456));
        assert!(loaded.is_zero());
    }

    #[test]
    fn candidate_table_tsv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cands.tsv");
        let src_vocab = Vocabulary::build_word_vocab(["der hund katze"], 20).unwrap();
        let tgt_vocab = Vocabulary::build_word_vocab(["the dog cat"], 20).unwrap();
        let mut m = SparseAlignmentMatrix::new(src_vocab.len(), tgt_vocab.len(), 0.1);
        m.add(
            src_vocab.id("hund").unwrap(),
            tgt_vocab.id("dog").unwrap(),
            2.0,
        );
        m.add(
            src_vocab.id("hund").unwrap(),
            tgt_vocab.id("cat").unwrap(),
            0.5,
        );
        m.add(
            src_vocab.id("der").unwrap(),
            tgt_vocab.id("the").unwrap(),
            1.0,
        );
        let table = m.top_n(2).unwrap();
        table.save(&path, &src_vocab, &tgt_vocab).unwrap();
        let loaded = CandidateTable::load(&path, 2, &src_vocab, &tgt_vocab).unwrap();
        assert_eq!(loaded, table);
    }

    proptest! {
        /// Raising the threshold never increases any cell, the total mass,
        /// or any candidate-list length.
        #[test]
        fn higher_threshold_never_gains_mass(seed in 0u64..500) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let mut low = SparseAlignmentMatrix::new(15, 15, 0.05);
            let mut high = SparseAlignmentMatrix::new(15, 15, 0.2);
            let cfg_low = cfg(0.05, 0);
            let cfg_high = cfg(0.2, 0);
            for _ in 0..20 {
                let l = rng.gen_range(2..6);
                let mut alpha: Vec<Real> = (0..l).map(|_| rng.gen_range(0.01..1.0)).collect();
                let sum: Real = alpha.iter().sum();
                alpha.iter_mut().for_each(|a| *a /= sum);
                let src: Vec<u32> = (0..l).map(|_| rng.gen_range(4..15)).collect();
                let tgt: u32 = rng.gen_range(4..15);
                low.record_step(arr1(&alpha).view(), &src, tgt, &cfg_low, 1).unwrap();
                high.record_step(arr1(&alpha).view(), &src, tgt, &cfg_high, 1).unwrap();
            }
            prop_assert!(high.total_mass() <= low.total_mass() + 1e-12);
            for (s, row) in high.rows() {
                for (&t, &c) in row {
                    prop_assert!(c <= low.count(s, t) + 1e-12);
                }
            }
            let tl = low.top_n(5).unwrap();
            let th = high.top_n(5).unwrap();
            for s in 0..15u32 {
                prop_assert!(th.candidates(s).len() <= tl.candidates(s).len());
            }
        }

        /// Candidate lists are invariant under positive per-row scaling.
        #[test]
        fn top_n_is_scale_invariant(seed in 0u64..200, scale in 0.01f64..100.0) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let mut m = SparseAlignmentMatrix::new(10, 10, 0.1);
            for _ in 0..30 {
                m.add(rng.gen_range(0..10), rng.gen_range(0..10), rng.gen_range(0.001..2.0));
            }
            let mut scaled = m.clone();
            for row in scaled.rows.values_mut() {
                for c in row.values_mut() {
                    *c *= scale;
                }
            }
            for n in [1usize, 3, 8] {
                prop_assert_eq!(m.top_n(n).unwrap(), scaled.top_n(n).unwrap());
            }
        }
    }
}
