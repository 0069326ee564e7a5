//! Synthetic multilingual comment corpora and simulated external scores.
//!
//! Each language gets its own generated vocabulary with a handful of
//! planted abusive tokens. Labels depend on a per-post propensity and a
//! per-language offset, so the categorical columns carry signal too.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Normal, Poisson};

use crate::dataset::{CommentRecord, Dataset};
use crate::error::{Error, Result};

pub const LANGUAGES: [&str; 13] = [
    "Hindi",
    "Bengali",
    "Tamil",
    "Telugu",
    "Marathi",
    "Gujarati",
    "Kannada",
    "Malayalam",
    "Odia",
    "Assamese",
    "Bhojpuri",
    "Haryanvi",
    "Rajasthani",
];

const DEVANAGARI: [&str; 20] = [
    "क", "ख", "ग", "च", "ज", "त", "द", "न", "प", "ब", "म", "य", "र", "ल", "व", "स", "ह", "का",
    "की", "को",
];
const LATIN: [&str; 24] = [
    "ka", "ga", "cha", "ja", "ta", "da", "na", "pa", "ba", "ma", "ya", "ra", "la", "va", "sa",
    "ha", "ki", "ku", "ne", "lo", "ro", "mi", "tu", "de",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub rows: usize,
    pub languages: usize,
    pub posts: usize,
    pub vocabulary_per_language: usize,
    pub abusive_per_language: usize,
    pub shared_vocabulary: usize,
    /// Probability that an abusive comment contains at least one planted token.
    pub plant_rate: f64,
    /// Probability that a clean comment contains a planted token anyway.
    pub false_plant_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            rows: 10_000,
            languages: LANGUAGES.len(),
            posts: 600,
            vocabulary_per_language: 300,
            abusive_per_language: 8,
            shared_vocabulary: 120,
            plant_rate: 0.7,
            false_plant_rate: 0.06,
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.posts == 0 {
            return Err(Error::invalid("rows and posts must be positive"));
        }
        if self.languages == 0 || self.languages > LANGUAGES.len() {
            return Err(Error::invalid(format!(
                "languages must lie in 1..={}",
                LANGUAGES.len()
            )));
        }
        if self.vocabulary_per_language == 0 || self.abusive_per_language == 0 {
            return Err(Error::invalid("vocabularies must be non-empty"));
        }
        for p in [self.plant_rate, self.false_plant_rate] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("rate {p} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

fn make_word(rng: &mut ChaCha8Rng, syllables: &[&str], tag: &str) -> String {
    let n = rng.random_range(2..=4);
    let mut w: String = (0..n)
        .map(|_| syllables[rng.random_range(0..syllables.len())])
        .collect();
    w.push_str(tag);
    w
}

struct Lexicon {
    neutral: Vec<String>,
    abusive: Vec<String>,
}

fn lexicon(rng: &mut ChaCha8Rng, lang: usize, cfg: &SynthConfig) -> Lexicon {
    let syllables: &[&str] = if matches!(lang, 0 | 4 | 10 | 11 | 12) {
        &DEVANAGARI
    } else {
        &LATIN
    };
    // The numeric tag keeps words distinct across languages and classes.
    let neutral = (0..cfg.vocabulary_per_language)
        .map(|i| make_word(rng, syllables, &format!("{lang}n{i}")))
        .collect();
    let abusive = (0..cfg.abusive_per_language)
        .map(|i| make_word(rng, syllables, &format!("{lang}x{i}")))
        .collect();
    Lexicon { neutral, abusive }
}

/// Skewed index in `0..n`: small indices are drawn far more often.
fn zipf_like(rng: &mut ChaCha8Rng, n: usize) -> usize {
    let u: f64 = rng.random();
    ((u * u * u) * n as f64) as usize % n
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Generates a labeled corpus with `id` values `c0`, `c1`, ...
pub fn generate_corpus(cfg: &SynthConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let lexicons: Vec<Lexicon> = (0..cfg.languages)
        .map(|l| lexicon(&mut rng, l, cfg))
        .collect();
    let shared: Vec<String> = (0..cfg.shared_vocabulary)
        .map(|i| make_word(&mut rng, &LATIN, &format!("s{i}")))
        .collect();

    let beta = Beta::new(1.5, 3.5).expect("valid beta parameters");
    let language_offset = Normal::new(0.0, 0.4).expect("valid normal parameters");
    let lang_bias: Vec<f64> = (0..cfg.languages)
        .map(|_| language_offset.sample(&mut rng))
        .collect();
    let posts: Vec<(usize, f64, u64)> = (0..cfg.posts)
        .map(|_| {
            let lang = rng.random_range(0..cfg.languages);
            let propensity: f64 = beta.sample(&mut rng);
            let likes = Poisson::new(50.0).expect("valid rate").sample(&mut rng) as u64;
            (lang, propensity, likes)
        })
        .collect();
    let mut post_reports = vec![0u64; cfg.posts];
    let mut staged = Vec::with_capacity(cfg.rows);

    for _ in 0..cfg.rows {
        let post = zipf_like(&mut rng, cfg.posts);
        let (lang, propensity, _) = posts[post];
        let logit = (propensity / (1.0 - propensity)).ln() + lang_bias[lang];
        let label = u8::from(rng.random_bool(sigmoid(logit)));

        let lex = &lexicons[lang];
        let len = rng.random_range(3..=14);
        let mut words: Vec<&str> = (0..len)
            .map(|_| {
                if !shared.is_empty() && rng.random_bool(0.2) {
                    shared[zipf_like(&mut rng, shared.len())].as_str()
                } else {
                    lex.neutral[zipf_like(&mut rng, lex.neutral.len())].as_str()
                }
            })
            .collect();
        let plant = if label == 1 {
            cfg.plant_rate
        } else {
            cfg.false_plant_rate
        };
        if rng.random_bool(plant) {
            let k = rng.random_range(1..=2);
            for _ in 0..k {
                let w = lex.abusive[rng.random_range(0..lex.abusive.len())].as_str();
                let at = rng.random_range(0..=words.len());
                words.insert(at, w);
            }
        }
        let text = words.join(" ");

        let report_rate = if label == 1 { 1.2 } else { 0.3 };
        let reports = Poisson::new(report_rate)
            .expect("valid rate")
            .sample(&mut rng) as u64;
        let likes = Poisson::new(4.0).expect("valid rate").sample(&mut rng) as u64;
        post_reports[post] += reports;
        staged.push((post, lang, text, reports, likes, label));
    }

    let records = staged
        .into_iter()
        .enumerate()
        .map(
            |(i, (post, lang, text, reports, likes, label))| CommentRecord {
                id: Some(format!("c{i}")),
                language: LANGUAGES[lang].to_string(),
                post_index: format!("post{post}"),
                comment_text: text,
                report_count_comment: reports,
                report_count_post: post_reports[post],
                like_count_comment: likes,
                like_count_post: posts[post].2,
                label: Some(label),
            },
        )
        .collect();
    Dataset::new(records)
}

/// A noisy stand-in for an external classifier: `sigmoid(±signal + noise)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExternalScoreConfig {
    pub signal: f64,
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for ExternalScoreConfig {
    fn default() -> Self {
        Self {
            signal: 1.5,
            noise_sd: 1.5,
            seed: 7,
        }
    }
}

pub fn simulate_external_scores(labels: &[u8], cfg: &ExternalScoreConfig) -> Result<Vec<f64>> {
    let noise = Normal::new(0.0, cfg.noise_sd)
        .map_err(|e| Error::invalid(format!("noise_sd {}: {e}", cfg.noise_sd)))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok(labels
        .iter()
        .map(|&y| {
            let centre = if y == 1 { cfg.signal } else { -cfg.signal };
            sigmoid(centre + noise.sample(&mut rng))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig {
            rows: 500,
            posts: 40,
            ..Default::default()
        }
    }

    #[test]
    fn corpus_is_seeded() {
        let a = generate_corpus(&small()).unwrap();
        let b = generate_corpus(&small()).unwrap();
        assert_eq!(a, b);
        let c = generate_corpus(&SynthConfig { seed: 1, ..small() }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn corpus_shape() {
        let d = generate_corpus(&small()).unwrap();
        assert_eq!(d.row_count(), 500);
        assert!(d.has_labels() && d.has_ids());
        let labels = d.labels().unwrap();
        let pos = labels.iter().filter(|&&y| y == 1).count();
        assert!(pos > 50 && pos < 450, "{pos} positives");
        assert!(d
            .records()
            .iter()
            .all(|r| LANGUAGES.contains(&r.language.as_str())));
    }

    #[test]
    fn planted_tokens_mark_positives() {
        let d = generate_corpus(&small()).unwrap();
        let planted = |t: &str| t.split(' ').any(|w| w.contains('x'));
        let (mut pos_hit, mut pos, mut neg_hit, mut neg) = (0, 0, 0, 0);
        for r in d.records() {
            if r.label == Some(1) {
                pos += 1;
                pos_hit += usize::from(planted(&r.comment_text));
            } else {
                neg += 1;
                neg_hit += usize::from(planted(&r.comment_text));
            }
        }
        assert!(pos_hit as f64 / pos as f64 > 0.5);
        assert!((neg_hit as f64 / neg as f64) < 0.15);
    }

    #[test]
    fn external_scores_are_probabilities_and_informative() {
        let labels: Vec<u8> = (0..2000).map(|i| (i % 3 == 0) as u8).collect();
        let s = simulate_external_scores(&labels, &ExternalScoreConfig::default()).unwrap();
        assert!(s.iter().all(|&p| p > 0.0 && p < 1.0));
        let mean = |y: u8| {
            let v: Vec<f64> = labels
                .iter()
                .zip(&s)
                .filter(|(&l, _)| l == y)
                .map(|(_, &p)| p)
                .collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        assert!(mean(1) > mean(0) + 0.3);
    }

    #[test]
    fn invalid_config() {
        assert!(generate_corpus(&SynthConfig {
            languages: 14,
            ..small()
        })
        .is_err());
        assert!(generate_corpus(&SynthConfig { rows: 0, ..small() }).is_err());
    }
}
