use ndarray::{concatenate, Array1, Array2, Axis};

use super::forward::{decoder_step, encode, initial_decoder_state, softmax_inplace, ActiveSet};
use super::gru::{ger, gru_backward, gru_forward_cached, GruCache};
use super::params::ModelParams;
use crate::error::{CoreError, Result};
use crate::tokenizer::{BOS_ID, EOS_ID};
use crate::Real;

/// Loss and the per-step attention rows of one teacher-forced sentence.
pub struct SentenceBackprop {
    pub loss: Real,
    /// Shape [m, l]: attention over source positions at each target step.
    pub alphas: Array2<Real>,
}

struct StepCache {
    prev_id: u32,
    gold_pos: usize,
    u_cache: GruCache,
    q_cache: GruCache,
    /// tanh attention activations, shape [l, d_attn]
    a: Array2<Real>,
    alpha: Array1<Real>,
    readout: Array1<Real>,
    o: Array1<Real>,
    probs: Array1<Real>,
}

fn validate_target(params: &ModelParams, target: &[u32]) -> Result<()> {
    match target.last() {
        None => Err(CoreError::InvalidConfig("empty target sentence".into())),
        Some(&last) if last != EOS_ID => Err(CoreError::InvalidConfig(
            "target must end with EOS".into(),
        )),
        _ => {
            for &id in target {
                if id as usize >= params.dims.v_tgt {
                    return Err(CoreError::IdOutOfRange {
                        id,
                        size: params.dims.v_tgt,
                    });
                }
            }
            Ok(())
        }
    }
}

/// Teacher-forced negative log-likelihood of one sentence, computed through
/// the decode-path ops. Serves as the independent route for gradient checks.
pub fn sentence_loss(
    params: &ModelParams,
    source: &[u32],
    target: &[u32],
    active: Option<&[u32]>,
) -> Result<Real> {
    validate_target(params, target)?;
    let active_set = match active {
        Some(ids) => Some(ActiveSet::new(params, ids.iter().copied())?),
        None => None,
    };
    let h = encode(params, source)?;
    let mut state = initial_decoder_state(params, &h);
    let mut loss = 0.0;
    let mut prev_id = BOS_ID;
    for &gold in target {
        let out = decoder_step(params, prev_id, state.view(), &h, active_set.as_ref())?;
        let p = out
            .dist
            .prob_of(gold)
            .ok_or(CoreError::GoldTokenPruned(gold))?;
        loss -= p.ln();
        state = out.s;
        prev_id = gold;
    }
    Ok(loss)
}

/// Teacher-forced loss with exact analytic gradients for every parameter.
/// Gradients accumulate into `grads` (callers zero or batch-sum them).
/// When `active` is given, the softmax and the projection gradients are
/// restricted to those rows; every gold id must be a member.
pub fn sentence_loss_and_grads(
    params: &ModelParams,
    source: &[u32],
    target: &[u32],
    active: Option<&[u32]>,
    grads: &mut ModelParams,
) -> Result<SentenceBackprop> {
    validate_target(params, target)?;
    if source.is_empty() {
        return Err(CoreError::EmptySource);
    }
    for &id in source {
        if id as usize >= params.dims.v_src {
            return Err(CoreError::IdOutOfRange {
                id,
                size: params.dims.v_src,
            });
        }
    }
    let active_set = match active {
        Some(ids) => Some(ActiveSet::new(params, ids.iter().copied())?),
        None => None,
    };

    let dims = params.dims;
    let (l, m) = (source.len(), target.len());
    let (d_h, d_a) = (dims.d_h, dims.d_attn());

    // ---- forward with caches ----
    let mut f_caches = Vec::with_capacity(l);
    let mut b_caches = Vec::with_capacity(l);
    let mut h = Array2::zeros((l, 2 * d_h));
    let mut state = Array1::zeros(d_h);
    for (i, &id) in source.iter().enumerate() {
        let (next, cache) =
            gru_forward_cached(&params.enc_fwd, params.src_emb.row(id as usize), state.view());
        state = next;
        f_caches.push(cache);
        h.row_mut(i).slice_mut(ndarray::s![d_h..]).assign(&state);
    }
    state = Array1::zeros(d_h);
    for (i, &id) in source.iter().enumerate().rev() {
        let (next, cache) =
            gru_forward_cached(&params.enc_bwd, params.src_emb.row(id as usize), state.view());
        state = next;
        b_caches.push(cache);
        h.row_mut(i).slice_mut(ndarray::s![..d_h]).assign(&state);
    }
    b_caches.reverse(); // index by position
    let uah = h.dot(&params.attn_u.t());

    let b1 = h.row(0).slice_move(ndarray::s![..d_h]).to_owned();
    let s0 = (params.init_w.dot(&b1) + &params.init_b).mapv(Real::tanh);

    let mut steps: Vec<StepCache> = Vec::with_capacity(m);
    let mut alphas = Array2::zeros((m, l));
    let mut loss = 0.0;
    let mut s_prev = s0.clone();
    let mut prev_id = BOS_ID;
    for (t, &gold) in target.iter().enumerate() {
        let ey = params.tgt_emb.row(prev_id as usize);
        let (s_prime, u_cache) = gru_forward_cached(&params.dec_u, ey, s_prev.view());

        let was = params.attn_w.dot(&s_prime);
        let mut a = Array2::zeros((l, d_a));
        let mut e = Array1::zeros(l);
        for (j, uah_j) in uah.outer_iter().enumerate() {
            let a_j = (&was + &uah_j).mapv(Real::tanh);
            e[j] = params.attn_v.dot(&a_j);
            a.row_mut(j).assign(&a_j);
        }
        softmax_inplace(&mut e);
        let alpha = e;
        let context = alpha.dot(&h);
        alphas.row_mut(t).assign(&alpha);

        let (s, q_cache) = gru_forward_cached(&params.dec_q, context.view(), s_prime.view());

        let readout = concatenate![Axis(0), s.view(), ey, context.view()];
        let o = (params.out_w.dot(&readout) + &params.out_b).mapv(Real::tanh);

        let (mut probs, gold_pos) = match &active_set {
            Some(set) => {
                let pos = set
                    .position_of(gold)
                    .ok_or(CoreError::GoldTokenPruned(gold))?;
                (set.logits(o.view()), pos)
            }
            None => (params.proj_w.dot(&o) + &params.proj_b, gold as usize),
        };
        softmax_inplace(&mut probs);
        loss -= probs[gold_pos].ln();

        s_prev = s;
        steps.push(StepCache {
            prev_id,
            gold_pos,
            u_cache,
            q_cache,
            a,
            alpha,
            readout,
            o,
            probs,
        });
        prev_id = gold;
    }

    // ---- backward ----
    let g = grads;
    let mut d_h_enc: Array2<Real> = Array2::zeros((l, 2 * d_h));
    let mut ds_next: Array1<Real> = Array1::zeros(d_h);

    for step in steps.iter().rev() {
        let mut dlogits = step.probs.clone();
        dlogits[step.gold_pos] -= 1.0;

        // final projection
        let d_o_vec: Array1<Real> = match &active_set {
            Some(set) => {
                for (pos, &id) in set.ids().iter().enumerate() {
                    let dl = dlogits[pos];
                    g.proj_w
                        .row_mut(id as usize)
                        .scaled_add(dl, &step.o.view());
                    g.proj_b[id as usize] += dl;
                }
                set.backprop_logits(&dlogits)
            }
            None => {
                ger(&mut g.proj_w, dlogits.view(), step.o.view());
                g.proj_b += &dlogits;
                dlogits.dot(&params.proj_w)
            }
        };

        // output tanh layer
        let da_o = &d_o_vec * &step.o.mapv(|v| 1.0 - v * v);
        ger(&mut g.out_w, da_o.view(), step.readout.view());
        g.out_b += &da_o;
        let dreadout = da_o.dot(&params.out_w);

        let mut ds = dreadout.slice(ndarray::s![..d_h]).to_owned();
        ds += &ds_next;
        let dey_out = dreadout.slice(ndarray::s![d_h..d_h + dims.d_emb]).to_owned();
        let mut dctx = dreadout.slice(ndarray::s![d_h + dims.d_emb..]).to_owned();

        // q: s = GRU(state = s', input = context)
        let (mut ds_prime, dctx_q) = gru_backward(&params.dec_q, &step.q_cache, ds.view(), &mut g.dec_q);
        dctx += &dctx_q;

        // context = alpha . h
        let dalpha = h.dot(&dctx);
        ger(&mut d_h_enc, step.alpha.view(), dctx.view());

        // softmax backward
        let dot = step.alpha.dot(&dalpha);
        let de = &step.alpha * &(&dalpha - dot);

        // e_j = v . tanh(W_a s' + U_a h_j)
        g.attn_v += &de.dot(&step.a);
        let mut da_pre = step.a.mapv(|v| 1.0 - v * v);
        for (mut row, &de_j) in da_pre.outer_iter_mut().zip(de.iter()) {
            row.zip_mut_with(&params.attn_v.view(), |x, &v| *x *= de_j * v);
        }
        let dwas = da_pre.sum_axis(Axis(0));
        // the q-step cache holds s' as its previous state
        ger(&mut g.attn_w, dwas.view(), step.q_cache.h_prev.view());
        ds_prime += &dwas.dot(&params.attn_w);
        g.attn_u += &da_pre.t().dot(&h);
        d_h_enc += &da_pre.dot(&params.attn_u);

        // u: s' = GRU(state = s_{t-1}, input = ey)
        let (ds_prev, dey_u) = gru_backward(&params.dec_u, &step.u_cache, ds_prime.view(), &mut g.dec_u);
        let dey = dey_out + dey_u;
        g.tgt_emb
            .row_mut(step.prev_id as usize)
            .zip_mut_with(&dey.view(), |x, &y| *x += y);
        ds_next = ds_prev;
    }

    // initial state s_0 = tanh(W_init b_1 + b_init)
    let da_init = &ds_next * &s0.mapv(|v| 1.0 - v * v);
    ger(&mut g.init_w, da_init.view(), b1.view());
    g.init_b += &da_init;
    let db1 = da_init.dot(&params.init_w);
    d_h_enc
        .row_mut(0)
        .slice_mut(ndarray::s![..d_h])
        .zip_mut_with(&db1.view(), |x, &y| *x += y);

    // encoder chains
    let mut dex: Vec<Array1<Real>> = vec![Array1::zeros(dims.d_emb); l];
    let mut chain_f: Array1<Real> = Array1::zeros(d_h);
    for i in (0..l).rev() {
        let df = &d_h_enc.row(i).slice(ndarray::s![d_h..]) + &chain_f;
        let (prev, dx) = gru_backward(&params.enc_fwd, &f_caches[i], df.view(), &mut g.enc_fwd);
        chain_f = prev;
        dex[i] += &dx;
    }
    let mut chain_b: Array1<Real> = Array1::zeros(d_h);
    for i in 0..l {
        let db = &d_h_enc.row(i).slice(ndarray::s![..d_h]) + &chain_b;
        let (prev, dx) = gru_backward(&params.enc_bwd, &b_caches[i], db.view(), &mut g.enc_bwd);
        chain_b = prev;
        dex[i] += &dx;
    }
    for (i, &id) in source.iter().enumerate() {
        g.src_emb
            .row_mut(id as usize)
            .zip_mut_with(&dex[i].view(), |x, &y| *x += y);
    }

    Ok(SentenceBackprop { loss, alphas })
}
