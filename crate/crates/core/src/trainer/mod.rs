//! Minibatch training loop with Adam, deterministic seeded shuffling, and
//! the three alignment-learning modes: accumulate from scratch, continue
//! training on a converged checkpoint, and dynamic per-batch vocabulary
//! selection.

mod adam;

pub use adam::{adam_update, AdamState};

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::accumulator::{AccumulatorConfig, CandidateTable, SparseAlignmentMatrix};
use crate::error::{CoreError, Result};
use crate::model::{sentence_loss_and_grads, ModelParams};
use crate::tokenizer::{Vocabulary, BOS_ID, EOS_ID, PAD_ID, UNK_ID};
use crate::Real;

/// Candidate-list sizes reported in training logs and benchmark sweeps.
pub const CAND_SIZES: [usize; 4] = [20, 50, 100, 200];

/// Sentences per gradient chunk. Chunks are summed in a fixed order, so the
/// reduction tree (and therefore every bit of the result) is independent of
/// the worker thread count.
const GRAD_CHUNK: usize = 8;

/// Cells below this count are dropped when the candidate table is rebuilt
/// at an epoch boundary in dynamic-vocabulary mode.
const DYNAMIC_TRIM: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainMode {
    /// Plain training over the full target vocabulary; no accumulation.
    FullVocab,
    /// Full-vocabulary training that accumulates attention after the delay.
    ScratchAccumulate,
    /// Training on top of a converged checkpoint; accumulation runs from the
    /// first step with no delay.
    ContinueAccumulate,
    /// Epoch 1 trains full-vocabulary while seeding the matrix; later epochs
    /// restrict the softmax to a per-batch candidate vocabulary.
    DynamicVocab,
}

impl std::str::FromStr for TrainMode {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(TrainMode::FullVocab),
            "scratch" => Ok(TrainMode::ScratchAccumulate),
            "continue" => Ok(TrainMode::ContinueAccumulate),
            "dynamic" => Ok(TrainMode::DynamicVocab),
            other => Err(CoreError::InvalidConfig(format!(
                "unknown training mode {other:?} (expected full|scratch|continue|dynamic)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: u32,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub mode: TrainMode,
    pub accumulator: AccumulatorConfig,
    /// Top-n per source token in dynamic-vocabulary mode.
    pub dynamic_n: usize,
    /// Sentences longer than this (either side) are skipped with a warning.
    pub max_len: usize,
    /// Global L2 gradient-norm cap.
    pub grad_clip: f64,
    /// Worker threads for per-chunk gradient computation.
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 1,
            batch_size: 32,
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 1,
            mode: TrainMode::FullVocab,
            accumulator: AccumulatorConfig::default(),
            dynamic_n: 100,
            max_len: 64,
            grad_clip: 5.0,
            threads: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(CoreError::InvalidConfig("epochs must be at least 1".into()));
        }
        if self.batch_size < 1 {
            return Err(CoreError::InvalidConfig(
                "batch size must be at least 1".into(),
            ));
        }
        if self.mode == TrainMode::DynamicVocab && self.dynamic_n < 1 {
            return Err(CoreError::InvalidConfig(
                "dynamic_n must be at least 1".into(),
            ));
        }
        self.accumulator.validate()
    }

    /// The delay applies to from-scratch accumulation only; continue and
    /// dynamic modes must record from their first epoch.
    fn effective_accumulator(&self) -> AccumulatorConfig {
        match self.mode {
            TrainMode::ScratchAccumulate => self.accumulator,
            _ => AccumulatorConfig {
                delay_epochs: 0,
                ..self.accumulator
            },
        }
    }
}

/// Encoded sentence pairs. Targets are stored without EOS; the trainer
/// appends it when batches are built.
#[derive(Debug, Clone)]
pub struct ParallelCorpus {
    pub pairs: Vec<(Vec<u32>, Vec<u32>)>,
}

impl ParallelCorpus {
    pub fn from_pairs(pairs: Vec<(Vec<u32>, Vec<u32>)>) -> Self {
        ParallelCorpus { pairs }
    }

    /// Reads two line-aligned tokenized files and encodes them.
    pub fn load(
        source: &Path,
        target: &Path,
        src_vocab: &Vocabulary,
        tgt_vocab: &Vocabulary,
    ) -> Result<Self> {
        let src_lines: Vec<String> = BufReader::new(File::open(source)?)
            .lines()
            .collect::<std::io::Result<_>>()?;
        let tgt_lines: Vec<String> = BufReader::new(File::open(target)?)
            .lines()
            .collect::<std::io::Result<_>>()?;
        if src_lines.len() != tgt_lines.len() {
            return Err(CoreError::BadFormat(format!(
                "source has {} lines but target has {}",
                src_lines.len(),
                tgt_lines.len()
            )));
        }
        if src_lines.is_empty() {
            return Err(CoreError::EmptyCorpus);
        }
        let pairs = src_lines
            .iter()
            .zip(&tgt_lines)
            .map(|(s, t)| {
                let s_toks: Vec<&str> = s.split_whitespace().collect();
                let t_toks: Vec<&str> = t.split_whitespace().collect();
                (src_vocab.encode(&s_toks), tgt_vocab.encode(&t_toks))
            })
            .collect();
        Ok(ParallelCorpus { pairs })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// A padded minibatch. Padding uses PAD only; per-sentence lengths recover
/// the unpadded rows.
#[derive(Debug, Clone)]
pub struct Batch {
    pub source: Array2<u32>,
    pub source_lengths: Vec<usize>,
    /// Target rows carry the trailing EOS.
    pub target: Array2<u32>,
    pub target_lengths: Vec<usize>,
}

impl Batch {
    /// Builds a batch, appending EOS to every target sentence.
    pub fn from_pairs(pairs: &[(Vec<u32>, Vec<u32>)]) -> Self {
        let n = pairs.len();
        let src_w = pairs.iter().map(|(s, _)| s.len()).max().unwrap_or(0);
        let tgt_w = pairs.iter().map(|(_, t)| t.len() + 1).max().unwrap_or(1);
        let mut source = Array2::from_elem((n, src_w), PAD_ID);
        let mut target = Array2::from_elem((n, tgt_w), PAD_ID);
        let mut source_lengths = Vec::with_capacity(n);
        let mut target_lengths = Vec::with_capacity(n);
        for (i, (src, tgt)) in pairs.iter().enumerate() {
            for (j, &id) in src.iter().enumerate() {
                source[(i, j)] = id;
            }
            for (j, &id) in tgt.iter().enumerate() {
                target[(i, j)] = id;
            }
            target[(i, tgt.len())] = EOS_ID;
            source_lengths.push(src.len());
            target_lengths.push(tgt.len() + 1);
        }
        Batch {
            source,
            source_lengths,
            target,
            target_lengths,
        }
    }

    pub fn len(&self) -> usize {
        self.source_lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source_lengths.is_empty()
    }

    /// Unpadded (source, target-with-EOS) rows.
    pub fn sentence(&self, i: usize) -> (Vec<u32>, Vec<u32>) {
        let src = self
            .source
            .row(i)
            .iter()
            .take(self.source_lengths[i])
            .copied()
            .collect();
        let tgt = self
            .target
            .row(i)
            .iter()
            .take(self.target_lengths[i])
            .copied()
            .collect();
        (src, tgt)
    }

    fn gold_ids(&self) -> BTreeSet<u32> {
        let mut ids = BTreeSet::new();
        for (i, &len) in self.target_lengths.iter().enumerate() {
            for j in 0..len {
                ids.insert(self.target[(i, j)]);
            }
        }
        ids
    }
}

/// The per-batch candidate vocabulary of dynamic training: the union of
/// top-n candidates of every source token in the batch, all special tokens,
/// and every gold target id (the cross-entropy target must stay in the
/// active vocabulary).
pub fn dynamic_vocab_batch(table: &CandidateTable, batch: &Batch, dynamic_n: usize) -> Vec<u32> {
    let mut ids: BTreeSet<u32> = [PAD_ID, UNK_ID, BOS_ID, EOS_ID].into();
    for (i, &len) in batch.source_lengths.iter().enumerate() {
        for j in 0..len {
            let src_id = batch.source[(i, j)];
            for &t in table.candidates(src_id).iter().take(dynamic_n) {
                ids.insert(t);
            }
        }
    }
    ids.extend(batch.gold_ids());
    ids.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: u32,
    /// Mean loss per target token, in nats.
    pub mean_loss: f64,
    pub wall_seconds: f64,
    pub matrix_nonzeros: usize,
    pub matrix_density: f64,
    /// Mean candidates per non-empty source row, capped at 20/50/100/200.
    pub avg_cands: [f64; 4],
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub epochs: Vec<EpochLog>,
    pub skipped_sentences: usize,
}

impl TrainLog {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(
            w,
            "epoch,mean_loss,wall_seconds,matrix_nonzeros,matrix_density,\
             avg_cands_at_20,avg_cands_at_50,avg_cands_at_100,avg_cands_at_200"
        )?;
        for e in &self.epochs {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                e.epoch,
                e.mean_loss,
                e.wall_seconds,
                e.matrix_nonzeros,
                e.matrix_density,
                e.avg_cands[0],
                e.avg_cands[1],
                e.avg_cands[2],
                e.avg_cands[3]
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

pub struct TrainOutcome {
    pub params: ModelParams,
    pub matrix: SparseAlignmentMatrix,
    pub log: TrainLog,
}

fn avg_cands_at(matrix: &SparseAlignmentMatrix, n: usize) -> f64 {
    let mut rows = 0usize;
    let mut total = 0usize;
    for (_, row) in matrix.rows() {
        rows += 1;
        total += row.len().min(n);
    }
    if rows == 0 {
        0.0
    } else {
        total as f64 / rows as f64
    }
}

struct ChunkOutcome {
    grads: ModelParams,
    losses: Vec<Real>,
    tokens: usize,
    /// (alphas [m, l], sentence index within batch)
    alphas: Vec<(Array2<Real>, usize)>,
}

fn process_chunk(
    params: &ModelParams,
    batch: &Batch,
    indices: &[usize],
    active: Option<&[u32]>,
) -> Result<ChunkOutcome> {
    let mut grads = ModelParams::zeros(params.dims);
    let mut losses = Vec::with_capacity(indices.len());
    let mut alphas = Vec::with_capacity(indices.len());
    let mut tokens = 0usize;
    for &i in indices {
        let (src, tgt) = batch.sentence(i);
        let bp = sentence_loss_and_grads(params, &src, &tgt, active, &mut grads)?;
        tokens += tgt.len();
        losses.push(bp.loss);
        alphas.push((bp.alphas, i));
    }
    Ok(ChunkOutcome {
        grads,
        losses,
        tokens,
        alphas,
    })
}

/// Trains for `config.epochs` epochs and returns the final parameters, the
/// accumulated alignment matrix, and the per-epoch log. When `snapshot_dir`
/// is given, the matrix is saved there after every epoch as
/// `matrix_epoch_NNN.bin`.
pub fn train(
    config: &TrainConfig,
    corpus: &ParallelCorpus,
    params: ModelParams,
    snapshot_dir: Option<&Path>,
) -> Result<TrainOutcome> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(CoreError::EmptyCorpus);
    }
    let mut params = params;
    let dims = params.dims;
    let accum_cfg = config.effective_accumulator();
    let mut matrix =
        SparseAlignmentMatrix::new(dims.v_src, dims.v_tgt, accum_cfg.alpha_threshold);
    let mut adam = AdamState::new(dims);
    let mut log = TrainLog::default();

    // +1 on the target side for the appended EOS
    let usable: Vec<usize> = (0..corpus.len())
        .filter(|&i| {
            let (src, tgt) = &corpus.pairs[i];
            !src.is_empty() && src.len() <= config.max_len && tgt.len() + 1 <= config.max_len
        })
        .collect();
    log.skipped_sentences = corpus.len() - usable.len();
    if log.skipped_sentences > 0 {
        log::warn!(
            "skipped {} sentence(s) exceeding max length {}",
            log.skipped_sentences,
            config.max_len
        );
    }
    if usable.is_empty() {
        return Err(CoreError::EmptyCorpus);
    }

    let pool = if config.threads > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(config.threads)
                .build()
                .map_err(|e| CoreError::InvalidConfig(format!("thread pool: {e}")))?,
        )
    } else {
        None
    };

    let record = config.mode != TrainMode::FullVocab;
    let mut accumulated_epochs = 0u32;

    for epoch in 1..=config.epochs {
        let start = Instant::now();
        let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
        rng.set_stream(epoch as u64);

        // dynamic mode: rebuild the candidate table from the current matrix
        // at the epoch boundary, trimming stale dust first
        let dynamic_table = if config.mode == TrainMode::DynamicVocab && epoch >= 2 {
            matrix.trim(DYNAMIC_TRIM);
            Some(matrix.top_n(config.dynamic_n)?)
        } else {
            None
        };

        // bucket by source length, shuffle within buckets, then shuffle the
        // batch order
        let mut buckets: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for &i in &usable {
            buckets.entry(corpus.pairs[i].0.len()).or_default().push(i);
        }
        let mut ordered = Vec::with_capacity(usable.len());
        for bucket in buckets.values_mut() {
            bucket.shuffle(&mut rng);
            ordered.extend_from_slice(bucket);
        }
        let mut batches: Vec<&[usize]> = ordered.chunks(config.batch_size).collect();
        batches.shuffle(&mut rng);

        let mut epoch_loss = 0.0;
        let mut epoch_tokens = 0usize;
        for batch_indices in batches {
            let pairs: Vec<(Vec<u32>, Vec<u32>)> = batch_indices
                .iter()
                .map(|&i| corpus.pairs[i].clone())
                .collect();
            let batch = Batch::from_pairs(&pairs);
            let active: Option<Vec<u32>> = dynamic_table
                .as_ref()
                .map(|t| dynamic_vocab_batch(t, &batch, config.dynamic_n));
            let active_slice = active.as_deref();

            let chunk_ids: Vec<Vec<usize>> = (0..batch.len())
                .collect::<Vec<_>>()
                .chunks(GRAD_CHUNK)
                .map(|c| c.to_vec())
                .collect();
            let outcomes: Vec<ChunkOutcome> = match &pool {
                Some(pool) => pool.install(|| {
                    chunk_ids
                        .par_iter()
                        .map(|ids| process_chunk(&params, &batch, ids, active_slice))
                        .collect::<Result<Vec<_>>>()
                })?,
                None => chunk_ids
                    .iter()
                    .map(|ids| process_chunk(&params, &batch, ids, active_slice))
                    .collect::<Result<Vec<_>>>()?,
            };

            let mut batch_grads = ModelParams::zeros(dims);
            let mut batch_tokens = 0usize;
            for outcome in &outcomes {
                batch_grads.add_assign(&outcome.grads);
                batch_tokens += outcome.tokens;
                epoch_loss += outcome.losses.iter().map(|&l| l as f64).sum::<f64>();
            }
            epoch_tokens += batch_tokens;

            batch_grads.scale(1.0 / batch_tokens as Real);
            let norm = batch_grads.l2_norm();
            if (norm as f64) > config.grad_clip {
                batch_grads.scale(config.grad_clip as Real / norm);
            }
            adam_update(
                &mut params,
                &batch_grads,
                &mut adam,
                config.learning_rate as Real,
                config.beta1 as Real,
                config.beta2 as Real,
                config.epsilon as Real,
            );

            if record {
                for outcome in &outcomes {
                    for (alphas, i) in &outcome.alphas {
                        let (src, tgt) = batch.sentence(*i);
                        for (t, &gold) in tgt.iter().enumerate() {
                            matrix.record_step(
                                alphas.row(t),
                                &src,
                                gold,
                                &accum_cfg,
                                epoch,
                            )?;
                        }
                    }
                }
            }
        }

        if record && epoch > accum_cfg.delay_epochs {
            accumulated_epochs += 1;
            matrix.set_epochs(accumulated_epochs);
        }
        if let Some(dir) = snapshot_dir {
            matrix.save(&dir.join(format!("matrix_epoch_{epoch:03}.bin")))?;
        }
        let stats = matrix.density_stats();
        log.epochs.push(EpochLog {
            epoch,
            mean_loss: epoch_loss / epoch_tokens.max(1) as f64,
            wall_seconds: start.elapsed().as_secs_f64(),
            matrix_nonzeros: matrix.nonzeros(),
            matrix_density: stats.density,
            avg_cands: [
                avg_cands_at(&matrix, CAND_SIZES[0]),
                avg_cands_at(&matrix, CAND_SIZES[1]),
                avg_cands_at(&matrix, CAND_SIZES[2]),
                avg_cands_at(&matrix, CAND_SIZES[3]),
            ],
        });
    }

    Ok(TrainOutcome {
        params,
        matrix,
        log,
    })
}

/// One (or more) additional epochs on top of a converged checkpoint, with
/// accumulation active from the first step. Parameters keep updating.
pub fn continue_train(
    checkpoint: ModelParams,
    corpus: &ParallelCorpus,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    let config = TrainConfig {
        mode: TrainMode::ContinueAccumulate,
        ..config.clone()
    };
    train(&config, corpus, checkpoint, None)
}
