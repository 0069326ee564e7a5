//! Shared fixtures for the benchmarks.

use muboost_core::pipeline::fit_features;
use muboost_core::synth::{generate_corpus, SynthConfig};
use muboost_core::{Dataset, FeatureMatrix, FittedFeatures, PipelineConfig};

pub fn corpus(rows: usize) -> Dataset {
    generate_corpus(&SynthConfig {
        rows,
        ..Default::default()
    })
    .expect("valid synthetic corpus config")
}

/// Features fitted with member seed 1, plus the train-time matrix and labels.
pub fn features(data: &Dataset) -> (FittedFeatures, FeatureMatrix, Vec<u8>) {
    let (fitted, m) = fit_features(data, &PipelineConfig::default(), 1).expect("labeled corpus");
    (fitted, m, data.labels().expect("labeled corpus"))
}
