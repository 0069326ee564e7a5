//! Seed-varied ensembles and probability fusion.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::gbdt::{self, GbdtParams, TrainLog};
use crate::pipeline::{
    fit_dictionary, fit_features_with_dictionary, transform_features, PipelineConfig, PipelineModel,
};
use crate::text::TokenDictionary;

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pub member_seeds: Vec<i64>,
    pub params: GbdtParams,
    pub pipeline: PipelineConfig,
    /// Train members concurrently. Does not change the result.
    pub parallel_members: bool,
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.member_seeds.is_empty() {
            return Err(Error::invalid("an ensemble needs at least one member seed"));
        }
        let mut seen = HashSet::new();
        for s in &self.member_seeds {
            if !seen.insert(s) {
                return Err(Error::invalid(format!("duplicate member seed {s}")));
            }
        }
        self.params.validate()?;
        self.pipeline.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoostedEnsembleModel {
    pub pipeline: PipelineConfig,
    pub dictionary: Arc<TokenDictionary>,
    pub members: Vec<PipelineModel>,
}

impl BoostedEnsembleModel {
    /// Per-member probability vectors for `data`.
    pub fn member_probabilities(&self, data: &Dataset) -> Result<Vec<Vec<f64>>> {
        self.members.iter().map(|m| m.predict_proba(data)).collect()
    }
}

fn train_member(
    seed: i64,
    train: &Dataset,
    train_labels: &[u8],
    dev: &Dataset,
    dev_labels: &[u8],
    spec: &EnsembleSpec,
    dictionary: &Arc<TokenDictionary>,
) -> Result<(PipelineModel, TrainLog)> {
    let (features, train_m) =
        fit_features_with_dictionary(train, &spec.pipeline, seed, Arc::clone(dictionary))?;
    let dev_m = transform_features(dev, &features)?;
    let params = GbdtParams {
        seed,
        ..spec.params.clone()
    };
    let dev_arg = (!dev.is_empty()).then_some((&dev_m, dev_labels));
    let (gbdt, log) = gbdt::train(&train_m, train_labels, dev_arg, &params)?;
    Ok((
        PipelineModel {
            seed,
            features,
            gbdt,
        },
        log,
    ))
}

/// Trains one pipeline per seed. Each seed drives its member's encoding
/// permutation and split tie-breaking; the dictionary is shared.
pub fn train_ensemble(
    train: &Dataset,
    dev: &Dataset,
    spec: &EnsembleSpec,
) -> Result<(BoostedEnsembleModel, Vec<TrainLog>)> {
    spec.validate()?;
    let train_labels = train
        .labels()
        .ok_or_else(|| Error::invalid("training data must be labeled"))?;
    let dev_labels = if dev.is_empty() {
        Vec::new()
    } else {
        dev.labels()
            .ok_or_else(|| Error::invalid("dev data must be labeled"))?
    };
    let dictionary = Arc::new(fit_dictionary(train, &spec.pipeline)?);
    let run = |&seed: &i64| {
        train_member(
            seed,
            train,
            &train_labels,
            dev,
            &dev_labels,
            spec,
            &dictionary,
        )
    };
    let results: Vec<Result<(PipelineModel, TrainLog)>> = if spec.parallel_members {
        spec.member_seeds.par_iter().map(run).collect()
    } else {
        spec.member_seeds.iter().map(run).collect()
    };
    let mut members = Vec::with_capacity(results.len());
    let mut logs = Vec::with_capacity(results.len());
    for r in results {
        let (m, l) = r?;
        members.push(m);
        logs.push(l);
    }
    Ok((
        BoostedEnsembleModel {
            pipeline: spec.pipeline.clone(),
            dictionary,
            members,
        },
        logs,
    ))
}

/// Mean of the member probabilities, per row.
pub fn predict_ensemble(model: &BoostedEnsembleModel, data: &Dataset) -> Result<Vec<f64>> {
    let per_member = model.member_probabilities(data)?;
    let refs: Vec<&[f64]> = per_member.iter().map(Vec::as_slice).collect();
    fuse_scores(&refs, None)
}

/// Weighted per-row mean of probability vectors (uniform when `weights` is `None`).
///
/// Evaluated as `lo + sum(w * (p - lo)) / sum(w)` with `lo` the row
/// minimum, so identical inputs come back unchanged and the result stays
/// within the row's range. Sums run in sorted order, so permuting sources
/// together with their weights gives bit-identical output.
pub fn fuse_scores(sources: &[&[f64]], weights: Option<&[f64]>) -> Result<Vec<f64>> {
    let Some(first) = sources.first() else {
        return Err(Error::invalid("fusion needs at least one source"));
    };
    let n = first.len();
    if let Some(bad) = sources.iter().position(|s| s.len() != n) {
        return Err(Error::DimensionMismatch(format!(
            "source {bad} has {} rows, source 0 has {n}",
            sources[bad].len()
        )));
    }
    let uniform;
    let weights = match weights {
        Some(w) => {
            if w.len() != sources.len() {
                return Err(Error::DimensionMismatch(format!(
                    "{} weights for {} sources",
                    w.len(),
                    sources.len()
                )));
            }
            if w.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
                return Err(Error::invalid("weights must be finite and non-negative"));
            }
            w
        }
        None => {
            uniform = vec![1.0; sources.len()];
            &uniform
        }
    };
    let mut sorted_weights = weights.to_vec();
    sorted_weights.sort_unstable_by(f64::total_cmp);
    let total: f64 = sorted_weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::invalid("weights sum to zero"));
    }
    for s in sources {
        if let Some(r) = s.iter().position(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::ProbabilityRange {
                row: r.to_string(),
                value: s[r],
            });
        }
    }
    let active: Vec<(&[f64], f64)> = sources
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(s, &w)| (*s, w))
        .collect();
    Ok((0..n)
        .map(|r| {
            let (lo, hi) = active
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (s, _)| {
                    (lo.min(s[r]), hi.max(s[r]))
                });
            let mut terms: Vec<f64> = active.iter().map(|(s, w)| w * (s[r] - lo)).collect();
            terms.sort_unstable_by(f64::total_cmp);
            let excess: f64 = terms.iter().sum();
            (lo + excess / total).min(hi)
        })
        .collect())
}

/// Probabilities from an outside model, aligned to a dataset's rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalScores {
    pub source: String,
    pub probabilities: Vec<f64>,
}

fn parse_probability(raw: &str, row: &str) -> Result<f64> {
    let p: f64 = raw.trim().parse().map_err(|_| Error::Csv {
        row: 0,
        message: format!("row {row}: probability `{raw}` is not a number"),
    })?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ProbabilityRange {
            row: row.to_string(),
            value: p,
        });
    }
    Ok(p)
}

/// Reads a `row_index,probability` file that must cover `0..n` exactly once.
/// `n` defaults to the number of data rows in the file.
pub fn read_row_scores(path: impl AsRef<Path>, n: Option<usize>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let header = rdr
        .headers()
        .map_err(|e| Error::Csv {
            row: 0,
            message: e.to_string(),
        })?
        .clone();
    let col = |name: &str| header.iter().position(|h| h == name);
    let (Some(ri), Some(pi)) = (col("row_index"), col("probability")) else {
        return Err(Error::MissingColumn {
            column: "row_index,probability".into(),
        });
    };
    let mut entries = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Csv {
            row: i,
            message: e.to_string(),
        })?;
        let raw_idx = rec.get(ri).unwrap_or("").trim();
        let idx: usize = raw_idx.parse().map_err(|_| Error::Csv {
            row: i,
            message: format!("row_index `{raw_idx}` is not a non-negative integer"),
        })?;
        entries.push((idx, parse_probability(rec.get(pi).unwrap_or(""), raw_idx)?));
    }
    let n = n.unwrap_or(entries.len());
    let mut out: Vec<Option<f64>> = vec![None; n];
    for (idx, p) in entries {
        if idx >= n {
            return Err(Error::invalid(format!(
                "row_index {idx} outside target of {n} rows"
            )));
        }
        if out[idx].replace(p).is_some() {
            return Err(Error::DuplicateRow {
                row: idx.to_string(),
            });
        }
    }
    out.into_iter()
        .enumerate()
        .map(|(i, p)| p.ok_or(Error::MissingRow { row: i.to_string() }))
        .collect()
}

/// Loads external scores for `target`, keyed by `row_index` or, when the
/// dataset carries ids, optionally by `id`.
pub fn load_external_scores(
    path: impl AsRef<Path>,
    target: &Dataset,
    source: &str,
) -> Result<ExternalScores> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let header = rdr
        .headers()
        .map_err(|e| Error::Csv {
            row: 0,
            message: e.to_string(),
        })?
        .clone();
    let keyed_by_id = header.iter().any(|h| h == "id") && !header.iter().any(|h| h == "row_index");
    if !keyed_by_id {
        drop(rdr);
        let probabilities = read_row_scores(path, Some(target.row_count()))?;
        return Ok(ExternalScores {
            source: source.to_string(),
            probabilities,
        });
    }
    if !target.has_ids() {
        return Err(Error::invalid(
            "scores are keyed by id but the dataset has no id column",
        ));
    }
    let pi = header
        .iter()
        .position(|h| h == "probability")
        .ok_or(Error::MissingColumn {
            column: "probability".into(),
        })?;
    let ii = header.iter().position(|h| h == "id").unwrap();
    let rows: HashMap<&str, usize> = target
        .records()
        .iter()
        .enumerate()
        .map(|(i, r)| (r.id.as_deref().unwrap_or(""), i))
        .collect();
    let mut out: Vec<Option<f64>> = vec![None; target.row_count()];
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Csv {
            row: i,
            message: e.to_string(),
        })?;
        let id = rec.get(ii).unwrap_or("");
        let &row = rows
            .get(id)
            .ok_or_else(|| Error::invalid(format!("id `{id}` is not in the dataset")))?;
        let p = parse_probability(rec.get(pi).unwrap_or(""), id)?;
        if out[row].replace(p).is_some() {
            return Err(Error::DuplicateRow {
                row: id.to_string(),
            });
        }
    }
    let probabilities = out
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            p.ok_or_else(|| Error::MissingRow {
                row: target.records()[i].id.clone().unwrap_or_default(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(ExternalScores {
        source: source.to_string(),
        probabilities,
    })
}

/// `row_index,probability[,label_at_threshold]` CSV text.
pub fn probabilities_csv(probs: &[f64], threshold: Option<f64>) -> String {
    let mut s = String::from(match threshold {
        Some(_) => "row_index,probability,label_at_threshold\n",
        None => "row_index,probability\n",
    });
    for (i, p) in probs.iter().enumerate() {
        match threshold {
            Some(t) => s.push_str(&format!("{i},{p},{}\n", (*p >= t) as u8)),
            None => s.push_str(&format!("{i},{p}\n")),
        }
    }
    s
}
