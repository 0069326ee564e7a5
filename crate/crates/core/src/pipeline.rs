//! Feature assembly: ordered encodings, count columns and bag-of-words.
//!
//! Layout of a feature row:
//!
//! | ids                 | content                                   |
//! |---------------------|-------------------------------------------|
//! | 0                   | encoded `language`                        |
//! | 1                   | encoded `post_index`                      |
//! | 2..6 (if enabled)   | the four count columns, as reals          |
//! | numeric..           | one boolean per dictionary token          |

use std::sync::Arc;

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::encoding::{fit_transform_ordered, OrderedEncodingConfig, OrderedEncodingModel, Prior};
use crate::error::{Error, Result};
use crate::gbdt::{FeatureMatrix, GbdtModel};
use crate::text::{
    build_dictionary, tokenize, BowVector, DictionaryConfig, TokenDictionary, TokenizerConfig,
};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub tokenizer: TokenizerConfig,
    pub dictionary: DictionaryConfig,
    pub encoding_a: f64,
    pub encoding_prior: Prior,
    pub include_counts: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            tokenizer: TokenizerConfig::default(),
            dictionary: DictionaryConfig::default(),
            encoding_a: 1.0,
            encoding_prior: Prior::GlobalMean,
            include_counts: true,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.tokenizer.validate()?;
        self.dictionary.validate()?;
        self.encoding(0).validate()
    }

    pub fn encoding(&self, seed: i64) -> OrderedEncodingConfig {
        OrderedEncodingConfig {
            a: self.encoding_a,
            prior: self.encoding_prior,
            permutation_seed: seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureSpace {
    pub include_counts: bool,
    pub bow_width: usize,
}

impl FeatureSpace {
    pub const CATEGORICAL: usize = 2;
    pub const COUNTS: usize = 4;

    pub fn n_numeric(&self) -> usize {
        Self::CATEGORICAL + if self.include_counts { Self::COUNTS } else { 0 }
    }

    pub fn width(&self) -> usize {
        self.n_numeric() + self.bow_width
    }
}

/// Everything needed to turn a `Dataset` into a feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedFeatures {
    pub space: FeatureSpace,
    pub language: OrderedEncodingModel,
    pub post_index: OrderedEncodingModel,
    pub dictionary: Arc<TokenDictionary>,
}

/// Fits the token dictionary on the training texts. Seed-free.
pub fn fit_dictionary(train: &Dataset, cfg: &PipelineConfig) -> Result<TokenDictionary> {
    let corpus: Vec<Vec<String>> = train
        .records()
        .par_iter()
        .map(|r| tokenize(&r.comment_text, &cfg.tokenizer))
        .collect();
    build_dictionary(&corpus, &cfg.tokenizer, &cfg.dictionary)
}

fn assemble(
    data: &Dataset,
    space: FeatureSpace,
    language: &[f64],
    post_index: &[f64],
    dictionary: &TokenDictionary,
) -> Result<FeatureMatrix> {
    let n_numeric = space.n_numeric();
    let rows: Vec<(Vec<f64>, BowVector)> = data
        .records()
        .par_iter()
        .enumerate()
        .map(|(i, r)| {
            let mut numeric = Vec::with_capacity(n_numeric);
            numeric.push(language[i]);
            numeric.push(post_index[i]);
            if space.include_counts {
                numeric.extend(r.counts().iter().map(|&c| c as f64));
            }
            (numeric, dictionary.featurize_text(&r.comment_text))
        })
        .collect();
    let (numeric, bow): (Vec<Vec<f64>>, Vec<BowVector>) = rows.into_iter().unzip();
    FeatureMatrix::new(n_numeric, numeric.concat(), bow, space.bow_width)
}

/// Fits encoders (ordered by `seed`) and the dictionary on `train`, and
/// returns the train-time feature matrix.
pub fn fit_features(
    train: &Dataset,
    cfg: &PipelineConfig,
    seed: i64,
) -> Result<(FittedFeatures, FeatureMatrix)> {
    let dictionary = Arc::new(fit_dictionary(train, cfg)?);
    fit_features_with_dictionary(train, cfg, seed, dictionary)
}

/// As `fit_features`, reusing an already fitted dictionary.
pub fn fit_features_with_dictionary(
    train: &Dataset,
    cfg: &PipelineConfig,
    seed: i64,
    dictionary: Arc<TokenDictionary>,
) -> Result<(FittedFeatures, FeatureMatrix)> {
    cfg.validate()?;
    let labels = train
        .labels()
        .ok_or_else(|| Error::invalid("feature fitting requires a labeled dataset"))?;
    let enc = cfg.encoding(seed);
    let languages: Vec<&str> = train
        .records()
        .iter()
        .map(|r| r.language.as_str())
        .collect();
    let posts: Vec<&str> = train
        .records()
        .iter()
        .map(|r| r.post_index.as_str())
        .collect();
    let (lang_values, language) = fit_transform_ordered(&languages, &labels, &enc)?;
    let (post_values, post_index) = fit_transform_ordered(&posts, &labels, &enc)?;
    let space = FeatureSpace {
        include_counts: cfg.include_counts,
        bow_width: dictionary.len(),
    };
    let matrix = assemble(train, space, &lang_values, &post_values, &dictionary)?;
    Ok((
        FittedFeatures {
            space,
            language,
            post_index,
            dictionary,
        },
        matrix,
    ))
}

/// Inference-time features: full-pass encodings, out-of-dictionary tokens dropped.
pub fn transform_features(data: &Dataset, fitted: &FittedFeatures) -> Result<FeatureMatrix> {
    let language: Vec<f64> = data
        .records()
        .iter()
        .map(|r| fitted.language.encode(&r.language))
        .collect();
    let post_index: Vec<f64> = data
        .records()
        .iter()
        .map(|r| fitted.post_index.encode(&r.post_index))
        .collect();
    assemble(
        data,
        fitted.space,
        &language,
        &post_index,
        &fitted.dictionary,
    )
}

/// One fitted feature pipeline plus its booster.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineModel {
    pub seed: i64,
    pub features: FittedFeatures,
    pub gbdt: GbdtModel,
}

impl PipelineModel {
    pub fn predict_proba(&self, data: &Dataset) -> Result<Vec<f64>> {
        let m = transform_features(data, &self.features)?;
        self.gbdt.predict_proba_matrix(&m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::CommentRecord;

    fn record(lang: &str, post: &str, text: &str, label: u8) -> CommentRecord {
        CommentRecord {
            id: None,
            language: lang.into(),
            post_index: post.into(),
            comment_text: text.into(),
            report_count_comment: label as u64,
            report_count_post: 1,
            like_count_comment: 2,
            like_count_post: 3,
            label: Some(label),
        }
    }

    fn sample() -> Dataset {
        Dataset::new(vec![
            record("Hindi", "p1", "a b c", 1),
            record("Hindi", "p1", "a d e", 0),
            record("Tamil", "p2", "b", 1),
            record("Tamil", "p3", "", 0),
            record("Odia", "p1", "e", 1),
        ])
        .unwrap()
    }

    #[test]
    fn width_is_six_plus_dictionary() {
        let cfg = PipelineConfig::default();
        let (fitted, m) = fit_features(&sample(), &cfg, 1).unwrap();
        assert_eq!(fitted.dictionary.len(), 5);
        assert_eq!(fitted.space.width(), 11);
        assert_eq!(m.width(), 11);
        assert_eq!(m.n_rows(), 5);
    }

    #[test]
    fn counts_can_be_disabled() {
        let cfg = PipelineConfig {
            include_counts: false,
            ..Default::default()
        };
        let (fitted, m) = fit_features(&sample(), &cfg, 1).unwrap();
        assert_eq!(fitted.space.n_numeric(), 2);
        assert_eq!(m.width(), 2 + 5);
    }

    #[test]
    fn seeds_change_encodings_not_bow() {
        let cfg = PipelineConfig::default();
        let data = sample();
        let (_, a) = fit_features(&data, &cfg, 1).unwrap();
        let (_, b) = fit_features(&data, &cfg, 2).unwrap();
        assert!((0..5).all(|r| a.bow(r) == b.bow(r)));
        let enc = |m: &FeatureMatrix| {
            (0..5)
                .map(|r| (m.numeric(r, 0), m.numeric(r, 1)))
                .collect::<Vec<_>>()
        };
        assert_ne!(enc(&a), enc(&b));
    }

    #[test]
    fn empty_texts_give_no_bow_block() {
        let data = Dataset::new(vec![
            record("Hindi", "p", "", 0),
            record("Tamil", "q", " ", 1),
        ])
        .unwrap();
        let (fitted, m) = fit_features(&data, &PipelineConfig::default(), 0).unwrap();
        assert_eq!(fitted.space.width(), 6);
        assert_eq!(m.bow_width(), 0);
    }

    #[test]
    fn inference_encoding_uses_full_stats_and_prior_for_unseen() {
        let data = sample();
        let (fitted, train_m) = fit_features(&data, &PipelineConfig::default(), 3).unwrap();
        let m = transform_features(&data, &fitted).unwrap();
        for r in 0..data.row_count() {
            assert_eq!(
                m.numeric(r, 0),
                fitted.language.encode(&data.records()[r].language)
            );
            assert_eq!(m.bow(r), train_m.bow(r));
        }
        // The first row of each order has only the prior at train time.
        let differs = (0..data.row_count()).any(|r| m.numeric(r, 0) != train_m.numeric(r, 0));
        assert!(differs);

        let unseen = Dataset::new(vec![record("Klingon", "zz", "a z", 0)]).unwrap();
        let u = transform_features(&unseen, &fitted).unwrap();
        assert_eq!(u.numeric(0, 0), fitted.language.prior());
        assert_eq!(u.numeric(0, 1), fitted.post_index.prior());
        assert_eq!(u.bow(0).ids(), &[fitted.dictionary.id_of("a").unwrap()]);
    }

    #[test]
    fn transform_is_pure() {
        let data = sample();
        let (fitted, _) = fit_features(&data, &PipelineConfig::default(), 3).unwrap();
        let twice = data.select(&[2, 2]);
        let m = transform_features(&twice, &fitted).unwrap();
        assert_eq!(m.row(0).numeric, m.row(1).numeric);
        assert_eq!(m.bow(0), m.bow(1));
    }
}
