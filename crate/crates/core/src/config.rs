//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. An optional
//! `preset = desk|full` line must come before any other key and resets
//! every value to that preset; all other keys override individual values.
//! Unknown keys are rejected.

use std::path::Path;

use crate::encoding::Prior;
use crate::ensemble::EnsembleSpec;
use crate::error::{Error, Result};
use crate::eval::{DEFAULT_SWEEP_MAX, DEFAULT_SWEEP_MIN, DEFAULT_SWEEP_STEP};
use crate::gbdt::GbdtParams;
use crate::pipeline::PipelineConfig;
use crate::text::SplitMode;

pub const THREADS_ENV: &str = "MUBOOST_THREADS";

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub pipeline: PipelineConfig,
    pub gbdt: GbdtParams,
    pub seeds: Vec<i64>,
    pub parallel_members: bool,
    pub dev_fraction: f64,
    pub split_seed: i64,
    pub sweep_min: f64,
    pub sweep_max: f64,
    pub sweep_step: f64,
    /// `None` falls back to `MUBOOST_THREADS`, then to the machine's parallelism.
    pub threads: Option<usize>,
}

/// Every accepted key, in the order `to_text` writes them.
pub const KEYS: &[&str] = &[
    "lowercase",
    "split_mode",
    "ngram_order",
    "max_dictionary_size",
    "top_tokens_count",
    "min_token_occurrence",
    "encoding_a",
    "encoding_prior",
    "include_counts",
    "iterations",
    "learning_rate",
    "depth",
    "od_wait",
    "l2_leaf_reg",
    "max_bins",
    "seeds",
    "parallel_members",
    "dev_fraction",
    "split_seed",
    "sweep_min",
    "sweep_max",
    "sweep_step",
    "threads",
];

impl Default for RunConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl RunConfig {
    pub fn desk() -> Self {
        Self {
            pipeline: PipelineConfig::default(),
            gbdt: GbdtParams::desk(),
            seeds: vec![1, 2, 3],
            parallel_members: false,
            dev_fraction: 0.01,
            split_seed: 0,
            sweep_min: DEFAULT_SWEEP_MIN,
            sweep_max: DEFAULT_SWEEP_MAX,
            sweep_step: DEFAULT_SWEEP_STEP,
            threads: None,
        }
    }

    pub fn full() -> Self {
        Self {
            gbdt: GbdtParams::full(),
            ..Self::desk()
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "desk" => Some(Self::desk()),
            "full" => Some(Self::full()),
            _ => None,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::desk();
        let mut seen_key = false;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                key: line.to_string(),
                message: "expected `key = value`".into(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if key == "preset" {
                if seen_key {
                    return Err(Error::Config {
                        key: key.into(),
                        message: "preset must come before other keys".into(),
                    });
                }
                cfg = Self::preset(value).ok_or_else(|| Error::Config {
                    key: key.into(),
                    message: format!("unknown preset `{value}` (expected desk or full)"),
                })?;
            } else {
                cfg.set(key, value)?;
            }
            seen_key = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value.parse().map_err(|_| Error::Config {
                key: key.into(),
                message: format!("cannot parse `{value}`"),
            })
        }
        let p = &mut self.pipeline;
        let g = &mut self.gbdt;
        match key {
            "lowercase" => p.tokenizer.lowercase = parse(key, value)?,
            "split_mode" => {
                p.tokenizer.split_mode = SplitMode::parse(value).ok_or_else(|| Error::Config {
                    key: key.into(),
                    message: format!("`{value}` is not words or letters"),
                })?
            }
            "ngram_order" => p.tokenizer.ngram_order = parse(key, value)?,
            "max_dictionary_size" => p.dictionary.max_dictionary_size = parse(key, value)?,
            "top_tokens_count" => p.dictionary.top_tokens_count = parse(key, value)?,
            "min_token_occurrence" => p.dictionary.min_token_occurrence = parse(key, value)?,
            "encoding_a" => p.encoding_a = parse(key, value)?,
            "encoding_prior" => {
                p.encoding_prior = Prior::parse(value).ok_or_else(|| Error::Config {
                    key: key.into(),
                    message: format!("`{value}` is not a number or global-mean"),
                })?
            }
            "include_counts" => p.include_counts = parse(key, value)?,
            "iterations" => g.iterations = parse(key, value)?,
            "learning_rate" => g.learning_rate = parse(key, value)?,
            "depth" => g.depth = parse(key, value)?,
            "od_wait" => g.od_wait = parse(key, value)?,
            "l2_leaf_reg" => g.l2_leaf_reg = parse(key, value)?,
            "max_bins" => g.max_bins = parse(key, value)?,
            "seeds" => {
                self.seeds = parse_seeds(value).map_err(|message| Error::Config {
                    key: key.into(),
                    message,
                })?
            }
            "parallel_members" => self.parallel_members = parse(key, value)?,
            "dev_fraction" => self.dev_fraction = parse(key, value)?,
            "split_seed" => self.split_seed = parse(key, value)?,
            "sweep_min" => self.sweep_min = parse(key, value)?,
            "sweep_max" => self.sweep_max = parse(key, value)?,
            "sweep_step" => self.sweep_step = parse(key, value)?,
            "threads" => {
                let n: usize = parse(key, value)?;
                if n == 0 {
                    return Err(Error::Config {
                        key: key.into(),
                        message: "threads must be at least 1".into(),
                    });
                }
                self.threads = Some(n);
            }
            other => return Err(Error::UnknownConfigKey(other.to_string())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |key: &str, e: Error| Error::Config {
            key: key.into(),
            message: e.to_string(),
        };
        self.pipeline.validate().map_err(|e| wrap("pipeline", e))?;
        self.gbdt.validate().map_err(|e| wrap("gbdt", e))?;
        self.ensemble_spec()
            .validate()
            .map_err(|e| wrap("seeds", e))?;
        if !(self.dev_fraction > 0.0 && self.dev_fraction < 1.0) {
            return Err(Error::Config {
                key: "dev_fraction".into(),
                message: "must lie in (0, 1)".into(),
            });
        }
        crate::eval::threshold_grid(self.sweep_min, self.sweep_max, self.sweep_step)
            .map_err(|e| wrap("sweep_step", e))?;
        Ok(())
    }

    pub fn ensemble_spec(&self) -> EnsembleSpec {
        EnsembleSpec {
            member_seeds: self.seeds.clone(),
            params: self.gbdt.clone(),
            pipeline: self.pipeline.clone(),
            parallel_members: self.parallel_members,
        }
    }

    /// Thread count from the config, else `MUBOOST_THREADS`, else the machine.
    pub fn resolve_threads(&self) -> usize {
        self.threads
            .or_else(|| {
                std::env::var(THREADS_ENV)
                    .ok()
                    .and_then(|v| v.trim().parse().ok())
                    .filter(|&n: &usize| n > 0)
            })
            .unwrap_or_else(|| {
                std::thread::available_parallelism()
                    .map(|n| n.get())
                    .unwrap_or(1)
            })
    }

    pub fn to_text(&self) -> String {
        let p = &self.pipeline;
        let g = &self.gbdt;
        let seeds: Vec<String> = self.seeds.iter().map(i64::to_string).collect();
        let values: Vec<String> = vec![
            p.tokenizer.lowercase.to_string(),
            p.tokenizer.split_mode.as_str().to_string(),
            p.tokenizer.ngram_order.to_string(),
            p.dictionary.max_dictionary_size.to_string(),
            p.dictionary.top_tokens_count.to_string(),
            p.dictionary.min_token_occurrence.to_string(),
            p.encoding_a.to_string(),
            p.encoding_prior.to_string(),
            p.include_counts.to_string(),
            g.iterations.to_string(),
            g.learning_rate.to_string(),
            g.depth.to_string(),
            g.od_wait.to_string(),
            g.l2_leaf_reg.to_string(),
            g.max_bins.to_string(),
            seeds.join(","),
            self.parallel_members.to_string(),
            self.dev_fraction.to_string(),
            self.split_seed.to_string(),
            self.sweep_min.to_string(),
            self.sweep_max.to_string(),
            self.sweep_step.to_string(),
            self.threads.map(|t| t.to_string()).unwrap_or_default(),
        ];
        KEYS.iter()
            .zip(values)
            .filter(|(_, v)| !v.is_empty())
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

/// Parses a comma-separated seed list such as `1,2,3`.
pub fn parse_seeds(value: &str) -> std::result::Result<Vec<i64>, String> {
    value
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<i64>()
                .map_err(|_| format!("`{}` is not an integer seed", s.trim()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_is_desk_preset() {
        assert_eq!(
            RunConfig::from_text("# nothing\n\n").unwrap(),
            RunConfig::desk()
        );
    }

    #[test]
    fn preset_then_overrides() {
        let cfg = RunConfig::from_text("preset = full\nseeds = 4, 5\ndepth=8\n").unwrap();
        assert_eq!(cfg.gbdt.iterations, 15_000);
        assert_eq!(cfg.gbdt.depth, 8);
        assert_eq!(cfg.seeds, vec![4, 5]);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::from_text("learning_rte = 0.1\n").unwrap_err();
        assert!(matches!(err, Error::UnknownConfigKey(ref k) if k == "learning_rte"));
        assert!(err.to_string().contains("learning_rte"));
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(RunConfig::from_text("depth = deep\n").is_err());
        assert!(RunConfig::from_text("seeds = 1,1\n").is_err());
        assert!(RunConfig::from_text("dev_fraction = 1.5\n").is_err());
        assert!(RunConfig::from_text("threads = 0\n").is_err());
        assert!(RunConfig::from_text("iterations = 4\npreset = desk\n").is_err());
    }

    #[test]
    fn text_round_trip() {
        for mut cfg in [RunConfig::desk(), RunConfig::full()] {
            cfg.threads = Some(3);
            cfg.pipeline.encoding_prior = Prior::Fixed(0.25);
            assert_eq!(RunConfig::from_text(&cfg.to_text()).unwrap(), cfg);
        }
    }

    #[test]
    fn every_key_is_settable() {
        let text = RunConfig::desk().to_text();
        let written: Vec<&str> = text
            .lines()
            .map(|l| l.split(" = ").next().unwrap())
            .collect();
        let expected: Vec<&str> = KEYS.iter().copied().filter(|&k| k != "threads").collect();
        assert_eq!(written, expected);
    }
}
