//! Linear-chain sequence tagger over word-representation features.

pub mod crf;
pub mod features;
pub mod model;
pub mod train;

pub use crf::{Marginals, Potentials};
pub use features::{assemble_features, word_shape, PositionFeatures, TemplateSet};
pub use model::{CrfGradient, EncodedSentence, Example, Layout, TaggerModel};
pub use train::{evaluate, metric_name, train_tagger, EpochRecord, TaggerConfig, TrainLog};
