//! Linear-chain conditional random field tagger.

mod features;
mod lattice;
mod model;
mod train;

pub use features::{featurize, FeatureTemplateConfig, BOS, EOS};
pub use lattice::{Lattice, Marginals};
pub use model::{CrfModel, SequenceFeatures, TrainingMeta, MODEL_FORMAT_VERSION};
pub use train::{train, train_logged, EpochLog, Objective, TrainConfig};

use std::path::Path;

use crate::bilou::TaggedSequence;
use crate::error::Result;
use crate::num::Scalar;

pub fn save_model<F: Scalar>(model: &CrfModel<F>, path: impl AsRef<Path>) -> Result<()> {
    model.save(path)
}

pub fn load_model<F: Scalar>(path: impl AsRef<Path>) -> Result<CrfModel<F>> {
    CrfModel::load(path)
}

/// Tag every sequence of `corpus` with `model`, keeping ids and tokens.
pub fn predict_corpus<F: Scalar>(model: &CrfModel<F>, corpus: &[TaggedSequence]) -> Vec<TaggedSequence> {
    corpus
        .iter()
        .map(|s| TaggedSequence {
            record_id: s.record_id.clone(),
            tokens: s.tokens.clone(),
            tags: model.predict(&s.tokens),
        })
        .collect()
}
