use ndarray::{concatenate, Array1, Array2, ArrayView1, Axis};

use super::gru::gru_forward;
use super::params::ModelParams;
use crate::error::{CoreError, Result};
use crate::Real;

/// Encoder output: one concatenated state [hbwd_i; hfwd_i] per source
/// position, plus the attention keys U_a h_j precomputed for the sentence.
#[derive(Debug, Clone)]
pub struct EncoderStates {
    /// Shape [l, 2*d_h]; row i is [hbwd_i; hfwd_i].
    pub h: Array2<Real>,
    /// Shape [l, d_attn]; row j is U_a h_j.
    pub(crate) uah: Array2<Real>,
}

impl EncoderStates {
    pub fn len(&self) -> usize {
        self.h.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.h.nrows() == 0
    }

    /// First backward state, the seed for the initial decoder state.
    pub(crate) fn first_bwd(&self) -> ArrayView1<'_, Real> {
        let d_h = self.h.ncols() / 2;
        self.h.row(0).slice_move(ndarray::s![..d_h])
    }
}

/// Runs the bi-directional encoder. Both directions start from a zero state.
pub fn encode(params: &ModelParams, source: &[u32]) -> Result<EncoderStates> {
    if source.is_empty() {
        return Err(CoreError::EmptySource);
    }
    let d_h = params.dims.d_h;
    let l = source.len();
    for &id in source {
        if id as usize >= params.dims.v_src {
            return Err(CoreError::IdOutOfRange {
                id,
                size: params.dims.v_src,
            });
        }
    }
    let mut h = Array2::zeros((l, 2 * d_h));
    let mut state = Array1::zeros(d_h);
    for (i, &id) in source.iter().enumerate() {
        state = gru_forward(&params.enc_fwd, params.src_emb.row(id as usize), state.view());
        h.row_mut(i)
            .slice_mut(ndarray::s![d_h..])
            .assign(&state);
    }
    state = Array1::zeros(d_h);
    for (i, &id) in source.iter().enumerate().rev() {
        state = gru_forward(&params.enc_bwd, params.src_emb.row(id as usize), state.view());
        h.row_mut(i)
            .slice_mut(ndarray::s![..d_h])
            .assign(&state);
    }
    let uah = h.dot(&params.attn_u.t());
    Ok(EncoderStates { h, uah })
}

/// s_0 = tanh(W_init hbwd_1 + b_init).
pub fn initial_decoder_state(params: &ModelParams, h: &EncoderStates) -> Array1<Real> {
    (params.init_w.dot(&h.first_bwd()) + &params.init_b).mapv(Real::tanh)
}

pub(crate) fn softmax_inplace(x: &mut Array1<Real>) {
    let max = x.iter().cloned().fold(Real::NEG_INFINITY, Real::max);
    x.mapv_inplace(|v| (v - max).exp());
    let sum = x.sum();
    *x /= sum;
}

/// Attention energies e_j = v . tanh(W_a s' + U_a h_j), softmaxed into
/// weights, and the weighted sum of encoder states.
/// Returns (alpha over source positions, context of size 2*d_h).
pub fn attention(
    params: &ModelParams,
    s_prime: ArrayView1<Real>,
    h: &EncoderStates,
) -> (Array1<Real>, Array1<Real>) {
    let was = params.attn_w.dot(&s_prime);
    let mut e = Array1::zeros(h.len());
    for (j, uah_j) in h.uah.outer_iter().enumerate() {
        let a_j = (&was + &uah_j).mapv(Real::tanh);
        e[j] = params.attn_v.dot(&a_j);
    }
    softmax_inplace(&mut e);
    let context = e.dot(&h.h);
    debug_assert!((e.sum() - 1.0).abs() < 1e-6);
    (e, context)
}

/// A sorted, deduplicated subset of the target vocabulary with the matching
/// rows of the output projection gathered once, so restricted softmax steps
/// touch only `len()` rows.
#[derive(Debug, Clone)]
pub struct ActiveSet {
    ids: Vec<u32>,
    wp: Array2<Real>,
    bp: Array1<Real>,
}

impl ActiveSet {
    pub fn new(params: &ModelParams, ids: impl IntoIterator<Item = u32>) -> Result<Self> {
        let mut ids: Vec<u32> = ids.into_iter().collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.is_empty() {
            return Err(CoreError::EmptyCandidateVocabulary);
        }
        if let Some(&last) = ids.last() {
            if last as usize >= params.dims.v_tgt {
                return Err(CoreError::IdOutOfRange {
                    id: last,
                    size: params.dims.v_tgt,
                });
            }
        }
        let d_o = params.dims.d_out();
        let mut wp = Array2::zeros((ids.len(), d_o));
        let mut bp = Array1::zeros(ids.len());
        for (row, &id) in ids.iter().enumerate() {
            wp.row_mut(row).assign(&params.proj_w.row(id as usize));
            bp[row] = params.proj_b[id as usize];
        }
        Ok(ActiveSet { ids, wp, bp })
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn position_of(&self, id: u32) -> Option<usize> {
        self.ids.binary_search(&id).ok()
    }

    pub(crate) fn logits(&self, o: ArrayView1<Real>) -> Array1<Real> {
        self.wp.dot(&o) + &self.bp
    }

    /// d(loss)/d(o) for gathered rows: wp^T . dlogits.
    pub(crate) fn backprop_logits(&self, dlogits: &Array1<Real>) -> Array1<Real> {
        dlogits.dot(&self.wp)
    }
}

/// A probability distribution over the active target vocabulary.
/// `active_ids` of `None` means the full vocabulary, where position == id.
#[derive(Debug, Clone)]
pub struct TargetDistribution {
    active_ids: Option<Vec<u32>>,
    pub probs: Array1<Real>,
}

impl TargetDistribution {
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn active_ids(&self) -> Option<&[u32]> {
        self.active_ids.as_deref()
    }

    /// Target id at a position of the distribution.
    pub fn id_at(&self, pos: usize) -> u32 {
        match &self.active_ids {
            Some(ids) => ids[pos],
            None => pos as u32,
        }
    }

    /// Probability of a target id, None when outside the active set.
    pub fn prob_of(&self, id: u32) -> Option<Real> {
        match &self.active_ids {
            Some(ids) => ids.binary_search(&id).ok().map(|pos| self.probs[pos]),
            None => self.probs.get(id as usize).copied(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, Real)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(|(pos, &p)| (self.id_at(pos), p))
    }
}

/// Everything one decoder step produces.
#[derive(Debug, Clone)]
pub struct DecoderStepOutput {
    /// Intermediate state s'_t = u(s_{t-1}, emb(y_{t-1})).
    pub s_prime: Array1<Real>,
    /// Decoder state s_t = q(s'_t, H_t).
    pub s: Array1<Real>,
    /// Attention weights over source positions.
    pub alpha: Array1<Real>,
    /// Context H_t, the attention-weighted sum of encoder states.
    pub context: Array1<Real>,
    /// Output distribution over the active vocabulary.
    pub dist: TargetDistribution,
    /// Multiply-accumulates spent in the final projection this step.
    pub proj_macs: u64,
}

/// One conditional-GRU decoder step with an optionally restricted softmax.
pub fn decoder_step(
    params: &ModelParams,
    prev_target_id: u32,
    prev_state: ArrayView1<Real>,
    h: &EncoderStates,
    active: Option<&ActiveSet>,
) -> Result<DecoderStepOutput> {
    if prev_target_id as usize >= params.dims.v_tgt {
        return Err(CoreError::IdOutOfRange {
            id: prev_target_id,
            size: params.dims.v_tgt,
        });
    }
    if prev_state.len() != params.dims.d_h {
        return Err(CoreError::DimensionMismatch(format!(
            "decoder state has size {}, expected {}",
            prev_state.len(),
            params.dims.d_h
        )));
    }
    if let Some(a) = active {
        if a.is_empty() {
            return Err(CoreError::EmptyCandidateVocabulary);
        }
    }
    let ey = params.tgt_emb.row(prev_target_id as usize);
    let s_prime = gru_forward(&params.dec_u, ey, prev_state);
    let (alpha, context) = attention(params, s_prime.view(), h);
    let s = gru_forward(&params.dec_q, context.view(), s_prime.view());

    let readout = concatenate![Axis(0), s.view(), ey, context.view()];
    let o = (params.out_w.dot(&readout) + &params.out_b).mapv(Real::tanh);

    let (mut probs, active_ids, k) = match active {
        Some(a) => (a.logits(o.view()), Some(a.ids().to_vec()), a.len()),
        None => (
            params.proj_w.dot(&o) + &params.proj_b,
            None,
            params.dims.v_tgt,
        ),
    };
    softmax_inplace(&mut probs);
    debug_assert!((probs.sum() - 1.0).abs() < 1e-6);

    Ok(DecoderStepOutput {
        s_prime,
        s,
        alpha,
        context,
        dist: TargetDistribution {
            active_ids,
            probs,
        },
        proj_macs: (k * params.dims.d_out()) as u64,
    })
}
