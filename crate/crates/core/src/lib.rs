//! Word representations (word2vec, GloVe, Collobert–Weston, Brown clusters)
//! and a linear-chain CRF tagger that consumes them, with the evaluation
//! tooling needed to compare them.

pub mod adagrad;
pub mod brown;
pub mod corpus;
pub mod cw;
pub mod error;
pub mod eval;
pub mod glove;
pub mod repr;
pub mod rng;
pub mod synth;
pub mod tagger;
pub mod w2v;

pub use error::{Error, ErrorKind, Result};
