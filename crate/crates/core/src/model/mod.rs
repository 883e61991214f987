//! The attention-based encoder-decoder network: bi-directional GRU encoder,
//! two-layer attention network, conditional GRU decoder, and a two-layer
//! output network whose softmax can be restricted to a candidate vocabulary.

mod backward;
mod forward;
mod gru;
mod params;

pub use backward::{sentence_loss, sentence_loss_and_grads, SentenceBackprop};
pub use forward::{
    attention, decoder_step, encode, initial_decoder_state, ActiveSet, DecoderStepOutput,
    EncoderStates, TargetDistribution,
};
pub use gru::{gru_cell, GruWeights};
pub use params::{ModelDims, ModelParams};
