//! Subword (BPE) and word-frequency vocabularies.

mod bpe;
mod vocab;

pub use bpe::{bpe_learn, detokenize, BpeModel, CONTINUATION_MARKER};
pub use vocab::{
    Vocabulary, BOS_ID, BOS_TOKEN, EOS_ID, EOS_TOKEN, NUM_SPECIALS, PAD_ID, PAD_TOKEN, UNK_ID,
    UNK_TOKEN,
};
