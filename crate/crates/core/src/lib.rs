//! Multilingual abusive-comment classification with gradient-boosted
//! oblivious trees, seed-varied ensembles and probability fusion.
//!
//! The usual path is [`load_dataset`] → [`split_train_dev`] →
//! [`train_ensemble`] → [`predict_ensemble`] / [`fuse_scores`] →
//! [`sweep_threshold`], with [`save_model`] / [`load_model`] in between.

pub mod config;
pub mod dataset;
pub mod encoding;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod gbdt;
pub mod model_io;
pub mod pipeline;
pub mod rng;
pub mod synth;
pub mod text;

pub use config::RunConfig;
pub use dataset::{
    compute_stats, load_dataset, read_dataset, split_indices, split_train_dev, CommentRecord,
    Dataset, EdaReport,
};
pub use encoding::{fit_transform_ordered, OrderedEncodingConfig, OrderedEncodingModel, Prior};
pub use ensemble::{
    fuse_scores, load_external_scores, predict_ensemble, train_ensemble, BoostedEnsembleModel,
    EnsembleSpec, ExternalScores,
};
pub use error::{Error, Result};
pub use eval::{f1_at_threshold, sweep_threshold, ConfusionCounts, SweepResult};
pub use gbdt::{FeatureMatrix, GbdtModel, GbdtParams, TrainLog};
pub use model_io::{load_model, save_model};
pub use pipeline::{FeatureSpace, FittedFeatures, PipelineConfig, PipelineModel};
pub use text::{
    build_dictionary, featurize, tokenize, BowVector, DictionaryConfig, SplitMode, TokenDictionary,
    TokenizerConfig,
};
