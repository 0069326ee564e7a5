//! Ordered target encoding for categorical columns.
//!
//! During training, each row sees only the labels of same-category rows that
//! precede it in a seeded permutation:
//!
//! ```text
//! encoded[r] = (S + a * prior) / (C + a)
//! ```
//!
//! where `S` and `C` are the label sum and count of earlier rows of the same
//! category. The fitted model keeps the full-pass counts for inference.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Prior {
    Fixed(f64),
    /// Positive rate of the training labels.
    GlobalMean,
}

impl Prior {
    pub fn parse(s: &str) -> Option<Self> {
        if s == "global-mean" {
            return Some(Prior::GlobalMean);
        }
        s.parse::<f64>().ok().map(Prior::Fixed)
    }
}

impl std::fmt::Display for Prior {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Prior::Fixed(p) => write!(f, "{p}"),
            Prior::GlobalMean => f.write_str("global-mean"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderedEncodingConfig {
    pub a: f64,
    pub prior: Prior,
    pub permutation_seed: i64,
}

impl Default for OrderedEncodingConfig {
    fn default() -> Self {
        Self {
            a: 1.0,
            prior: Prior::GlobalMean,
            permutation_seed: 0,
        }
    }
}

impl OrderedEncodingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::invalid(format!(
                "prior weight a = {} must be > 0",
                self.a
            )));
        }
        if let Prior::Fixed(p) = self.prior {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("prior {p} must lie in [0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CategoryStats {
    pub count_total: u64,
    pub count_positive: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderedEncodingModel {
    stats: BTreeMap<String, CategoryStats>,
    prior: f64,
    a: f64,
    seed: i64,
}

/// Smoothed target statistic shared by training and inference paths.
#[inline]
fn smoothed(sum: f64, count: f64, a: f64, prior: f64) -> f64 {
    (sum + a * prior) / (count + a)
}

fn resolve_prior(cfg: &OrderedEncodingConfig, labels: &[u8]) -> f64 {
    match cfg.prior {
        Prior::Fixed(p) => p,
        Prior::GlobalMean if labels.is_empty() => 0.5,
        Prior::GlobalMean => {
            labels.iter().map(|&l| l as u64).sum::<u64>() as f64 / labels.len() as f64
        }
    }
}

/// Encodes `column` in permutation order and returns the per-row values
/// together with the full-pass model.
pub fn fit_transform_ordered<S: AsRef<str>>(
    column: &[S],
    labels: &[u8],
    cfg: &OrderedEncodingConfig,
) -> Result<(Vec<f64>, OrderedEncodingModel)> {
    if column.len() != labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} categorical values but {} labels",
            column.len(),
            labels.len()
        )));
    }
    cfg.validate()?;
    if let Some(r) = labels.iter().position(|&l| l > 1) {
        return Err(Error::LabelDomain {
            row: r,
            value: labels[r].to_string(),
        });
    }
    let prior = resolve_prior(cfg, labels);
    let order = rng::permutation(column.len(), cfg.permutation_seed);

    let mut running: HashMap<&str, CategoryStats> = HashMap::new();
    let mut encoded = vec![0.0; column.len()];
    for &r in &order {
        let s = running.entry(column[r].as_ref()).or_default();
        encoded[r] = smoothed(s.count_positive as f64, s.count_total as f64, cfg.a, prior);
        s.count_total += 1;
        s.count_positive += labels[r] as u64;
    }
    let stats = running
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    Ok((
        encoded,
        OrderedEncodingModel {
            stats,
            prior,
            a: cfg.a,
            seed: cfg.permutation_seed,
        },
    ))
}

impl OrderedEncodingModel {
    pub fn prior(&self) -> f64 {
        self.prior
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn seed(&self) -> i64 {
        self.seed
    }

    pub fn stats(&self, category: &str) -> Option<CategoryStats> {
        self.stats.get(category).copied()
    }

    pub fn categories(&self) -> usize {
        self.stats.len()
    }

    /// Inference-time encoding from full-pass statistics; unseen → prior.
    pub fn encode(&self, category: &str) -> f64 {
        let s = self.stats.get(category).copied().unwrap_or_default();
        smoothed(
            s.count_positive as f64,
            s.count_total as f64,
            self.a,
            self.prior,
        )
    }

    /// Text form: a header line, then `value<TAB>count_total<TAB>count_positive`
    /// per category in byte order. Tabs, newlines and backslashes in values
    /// are backslash-escaped.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "muboost-encoding v1 a={} prior={} seed={} categories={}\n",
            self.a,
            self.prior,
            self.seed,
            self.stats.len()
        );
        for (k, v) in &self.stats {
            let _ = writeln!(s, "{}\t{}\t{}", escape(k), v.count_total, v.count_positive);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |m: &str| Error::Format(format!("encoding model: {m}"));
        let mut lines = text.split_terminator('\n');
        let header = lines.next().ok_or_else(|| bad("empty"))?;
        let mut parts = header.split(' ');
        if parts.next() != Some("muboost-encoding") || parts.next() != Some("v1") {
            return Err(bad("bad header"));
        }
        let mut fields: HashMap<&str, &str> = HashMap::new();
        for p in parts {
            let (k, v) = p.split_once('=').ok_or_else(|| bad("malformed header"))?;
            fields.insert(k, v);
        }
        let get = |k: &str| {
            fields
                .get(k)
                .copied()
                .ok_or_else(|| bad(&format!("missing {k}")))
        };
        let a: f64 = get("a")?.parse().map_err(|_| bad("bad a"))?;
        let prior: f64 = get("prior")?.parse().map_err(|_| bad("bad prior"))?;
        let seed: i64 = get("seed")?.parse().map_err(|_| bad("bad seed"))?;
        let n: usize = get("categories")?
            .parse()
            .map_err(|_| bad("bad categories"))?;
        let mut stats = BTreeMap::new();
        for line in lines {
            let mut cols = line.split('\t');
            let (Some(k), Some(t), Some(p), None) =
                (cols.next(), cols.next(), cols.next(), cols.next())
            else {
                return Err(bad("malformed entry"));
            };
            let count_total: u64 = t.parse().map_err(|_| bad("bad count"))?;
            let count_positive: u64 = p.parse().map_err(|_| bad("bad count"))?;
            if count_positive > count_total {
                return Err(bad("positive count exceeds total"));
            }
            stats.insert(
                unescape(k).ok_or_else(|| bad("bad escape"))?,
                CategoryStats {
                    count_total,
                    count_positive,
                },
            );
        }
        if stats.len() != n {
            return Err(bad("category count does not match header"));
        }
        Ok(Self {
            stats,
            prior,
            a,
            seed,
        })
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> Option<String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        out.push(match chars.next()? {
            '\\' => '\\',
            't' => '\t',
            'n' => '\n',
            'r' => '\r',
            _ => return None,
        });
    }
    Some(out)
}
