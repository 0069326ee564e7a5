//! Binary model file.
//!
//! ```text
//! magic        8 bytes  "MUBOOST\0"
//! version      u32 LE
//! payload_len  u64 LE
//! payload      payload_len bytes of sections
//! crc32        u32 LE, CRC-32 (IEEE) of the payload
//! ```
//!
//! Each section is `tag: u8, len: u64 LE, body`. The payload holds one
//! pipeline-config section and one token-dictionary section, then for every
//! ensemble member, in order: member header (seed), the two encoding models,
//! booster params, quantile borders and trees. Text sections are UTF-8;
//! floats are stored as their IEEE-754 bits so a load reproduces the model
//! exactly.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use crate::encoding::{OrderedEncodingModel, Prior};
use crate::ensemble::BoostedEnsembleModel;
use crate::error::{Error, Result};
use crate::gbdt::{GbdtModel, GbdtParams, ObliviousTree, Split};
use crate::pipeline::{FeatureSpace, FittedFeatures, PipelineConfig, PipelineModel};
use crate::text::{DictionaryConfig, SplitMode, TokenDictionary, TokenizerConfig};

pub const MAGIC: &[u8; 8] = b"MUBOOST\0";
pub const FORMAT_VERSION: u32 = 1;

const TAG_CONFIG: u8 = 1;
const TAG_DICTIONARY: u8 = 2;
const TAG_MEMBER: u8 = 3;
const TAG_ENCODING_LANGUAGE: u8 = 4;
const TAG_ENCODING_POST: u8 = 5;
const TAG_PARAMS: u8 = 6;
const TAG_BORDERS: u8 = 7;
const TAG_TREES: u8 = 8;

#[derive(Default)]
struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.u64(v.to_bits());
    }
    fn section(&mut self, tag: u8, body: &[u8]) {
        self.u8(tag);
        self.u64(body.len() as u64);
        self.0.extend_from_slice(body);
    }
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(Error::Truncated);
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }
    fn len(&mut self) -> Result<usize> {
        let n = self.u64()?;
        usize::try_from(n).map_err(|_| Error::Truncated)
    }
    fn section(&mut self, expected: u8) -> Result<&'a [u8]> {
        let tag = self.u8()?;
        if tag != expected {
            return Err(Error::Format(format!(
                "expected section {expected}, found {tag}"
            )));
        }
        let n = self.len()?;
        self.take(n)
    }
    fn text_section(&mut self, expected: u8) -> Result<&'a str> {
        std::str::from_utf8(self.section(expected)?)
            .map_err(|_| Error::Format("section is not valid UTF-8".into()))
    }
    fn finish(&self) -> Result<()> {
        if self.buf.is_empty() {
            Ok(())
        } else {
            Err(Error::Format("trailing bytes after last section".into()))
        }
    }
}

fn kv_lines(pairs: &[(&str, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

fn parse_kv(text: &str) -> Result<std::collections::HashMap<&str, &str>> {
    text.lines()
        .map(|l| {
            l.split_once('=')
                .ok_or_else(|| Error::Format(format!("malformed line `{l}`")))
        })
        .collect()
}

fn field<'a>(kv: &std::collections::HashMap<&str, &'a str>, key: &str) -> Result<&'a str> {
    kv.get(key)
        .copied()
        .ok_or_else(|| Error::Format(format!("missing field `{key}`")))
}

fn parsed<T: std::str::FromStr>(
    kv: &std::collections::HashMap<&str, &str>,
    key: &str,
) -> Result<T> {
    field(kv, key)?
        .parse()
        .map_err(|_| Error::Format(format!("bad value for `{key}`")))
}

fn config_text(cfg: &PipelineConfig, members: usize) -> String {
    kv_lines(&[
        ("lowercase", cfg.tokenizer.lowercase.to_string()),
        ("split_mode", cfg.tokenizer.split_mode.as_str().to_string()),
        ("ngram_order", cfg.tokenizer.ngram_order.to_string()),
        (
            "max_dictionary_size",
            cfg.dictionary.max_dictionary_size.to_string(),
        ),
        (
            "top_tokens_count",
            cfg.dictionary.top_tokens_count.to_string(),
        ),
        (
            "min_token_occurrence",
            cfg.dictionary.min_token_occurrence.to_string(),
        ),
        ("encoding_a", cfg.encoding_a.to_string()),
        ("encoding_prior", cfg.encoding_prior.to_string()),
        ("include_counts", cfg.include_counts.to_string()),
        ("members", members.to_string()),
    ])
}

fn parse_config(text: &str) -> Result<(PipelineConfig, usize)> {
    let kv = parse_kv(text)?;
    let cfg = PipelineConfig {
        tokenizer: TokenizerConfig {
            lowercase: parsed(&kv, "lowercase")?,
            split_mode: SplitMode::parse(field(&kv, "split_mode")?)
                .ok_or_else(|| Error::Format("bad split_mode".into()))?,
            ngram_order: parsed(&kv, "ngram_order")?,
        },
        dictionary: DictionaryConfig {
            max_dictionary_size: parsed(&kv, "max_dictionary_size")?,
            top_tokens_count: parsed(&kv, "top_tokens_count")?,
            min_token_occurrence: parsed(&kv, "min_token_occurrence")?,
        },
        encoding_a: parsed(&kv, "encoding_a")?,
        encoding_prior: Prior::parse(field(&kv, "encoding_prior")?)
            .ok_or_else(|| Error::Format("bad encoding_prior".into()))?,
        include_counts: parsed(&kv, "include_counts")?,
    };
    Ok((cfg, parsed(&kv, "members")?))
}

fn params_text(p: &GbdtParams) -> String {
    kv_lines(&[
        ("iterations", p.iterations.to_string()),
        ("learning_rate", p.learning_rate.to_string()),
        ("depth", p.depth.to_string()),
        ("od_wait", p.od_wait.to_string()),
        ("l2_leaf_reg", p.l2_leaf_reg.to_string()),
        ("max_bins", p.max_bins.to_string()),
        ("seed", p.seed.to_string()),
    ])
}

fn parse_params(text: &str) -> Result<GbdtParams> {
    let kv = parse_kv(text)?;
    Ok(GbdtParams {
        iterations: parsed(&kv, "iterations")?,
        learning_rate: parsed(&kv, "learning_rate")?,
        depth: parsed(&kv, "depth")?,
        od_wait: parsed(&kv, "od_wait")?,
        l2_leaf_reg: parsed(&kv, "l2_leaf_reg")?,
        max_bins: parsed(&kv, "max_bins")?,
        seed: parsed(&kv, "seed")?,
    })
}

fn write_member(w: &mut Writer, m: &PipelineModel) {
    w.section(TAG_MEMBER, &m.seed.to_le_bytes());
    w.section(
        TAG_ENCODING_LANGUAGE,
        m.features.language.to_text().as_bytes(),
    );
    w.section(
        TAG_ENCODING_POST,
        m.features.post_index.to_text().as_bytes(),
    );
    w.section(TAG_PARAMS, params_text(&m.gbdt.params).as_bytes());

    let mut b = Writer::default();
    b.u32(m.gbdt.borders.len() as u32);
    for col in &m.gbdt.borders {
        b.u32(col.len() as u32);
        for &v in col {
            b.f64(v);
        }
    }
    w.section(TAG_BORDERS, &b.0);

    let mut t = Writer::default();
    t.u64(m.gbdt.n_bow as u64);
    t.f64(m.gbdt.base_score);
    t.u64(m.gbdt.best_iteration as u64);
    t.u32(m.gbdt.trees.len() as u32);
    for tree in &m.gbdt.trees {
        t.u8(tree.splits.len() as u8);
        for s in &tree.splits {
            t.u32(s.feature);
            t.u16(s.threshold_bin);
        }
        for &v in &tree.leaf_values {
            t.f64(v);
        }
    }
    w.section(TAG_TREES, &t.0);
}

fn read_member(
    r: &mut Reader<'_>,
    cfg: &PipelineConfig,
    dictionary: &Arc<TokenDictionary>,
) -> Result<PipelineModel> {
    let seed_bytes = r.section(TAG_MEMBER)?;
    let seed = i64::from_le_bytes(
        seed_bytes
            .try_into()
            .map_err(|_| Error::Format("member header must be 8 bytes".into()))?,
    );
    let language = OrderedEncodingModel::from_text(r.text_section(TAG_ENCODING_LANGUAGE)?)?;
    let post_index = OrderedEncodingModel::from_text(r.text_section(TAG_ENCODING_POST)?)?;
    let params = parse_params(r.text_section(TAG_PARAMS)?)?;

    let mut b = Reader {
        buf: r.section(TAG_BORDERS)?,
    };
    let n_numeric = b.u32()? as usize;
    let mut borders = Vec::with_capacity(n_numeric.min(1 << 16));
    for _ in 0..n_numeric {
        let n = b.u32()? as usize;
        let mut col = Vec::with_capacity(n.min(256));
        for _ in 0..n {
            col.push(b.f64()?);
        }
        borders.push(col);
    }
    b.finish()?;

    let mut t = Reader {
        buf: r.section(TAG_TREES)?,
    };
    let n_bow = t.u64()? as usize;
    let base_score = t.f64()?;
    let best_iteration = t.u64()? as usize;
    let n_trees = t.u32()? as usize;
    let mut trees = Vec::with_capacity(n_trees.min(1 << 20));
    for _ in 0..n_trees {
        let depth = t.u8()? as usize;
        if depth > GbdtParams::MAX_DEPTH {
            return Err(Error::Format(format!("tree depth {depth} too large")));
        }
        let mut splits = Vec::with_capacity(depth);
        for _ in 0..depth {
            splits.push(Split {
                feature: t.u32()?,
                threshold_bin: t.u16()?,
            });
        }
        let leaf_values = (0..1usize << depth)
            .map(|_| t.f64())
            .collect::<Result<Vec<_>>>()?;
        trees.push(ObliviousTree {
            splits,
            leaf_values,
        });
    }
    t.finish()?;

    let space = FeatureSpace {
        include_counts: cfg.include_counts,
        bow_width: dictionary.len(),
    };
    if space.n_numeric() != n_numeric || space.bow_width != n_bow {
        return Err(Error::Format(
            "member feature space does not match the pipeline layout".into(),
        ));
    }
    let gbdt = GbdtModel {
        base_score,
        trees,
        n_numeric,
        n_bow,
        borders,
        params,
        best_iteration,
    };
    gbdt.check_structure()?;
    Ok(PipelineModel {
        seed,
        features: FittedFeatures {
            space,
            language,
            post_index,
            dictionary: Arc::clone(dictionary),
        },
        gbdt,
    })
}

pub fn to_bytes(model: &BoostedEnsembleModel) -> Vec<u8> {
    let mut payload = Writer::default();
    payload.section(
        TAG_CONFIG,
        config_text(&model.pipeline, model.members.len()).as_bytes(),
    );
    payload.section(TAG_DICTIONARY, model.dictionary.to_text().as_bytes());
    for m in &model.members {
        write_member(&mut payload, m);
    }
    let payload = payload.0;
    let mut out = Writer::default();
    out.0.extend_from_slice(MAGIC);
    out.u32(FORMAT_VERSION);
    out.u64(payload.len() as u64);
    out.0.extend_from_slice(&payload);
    out.u32(crc32fast::hash(&payload));
    out.0
}

pub fn from_bytes(bytes: &[u8]) -> Result<BoostedEnsembleModel> {
    let mut r = Reader { buf: bytes };
    if r.take(MAGIC.len())? != MAGIC {
        return Err(Error::Format("not a muboost model file".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::Version {
            found: version,
            supported: FORMAT_VERSION,
        });
    }
    let len = r.len()?;
    let payload = r.take(len)?;
    let stored = r.u32()?;
    r.finish()?;
    let computed = crc32fast::hash(payload);
    if stored != computed {
        return Err(Error::Checksum { stored, computed });
    }

    let mut p = Reader { buf: payload };
    let (pipeline, n_members) = parse_config(p.text_section(TAG_CONFIG)?)?;
    let dictionary = Arc::new(TokenDictionary::from_text(p.text_section(TAG_DICTIONARY)?)?);
    let mut members = Vec::with_capacity(n_members.min(1024));
    for _ in 0..n_members {
        members.push(read_member(&mut p, &pipeline, &dictionary)?);
    }
    p.finish()?;
    Ok(BoostedEnsembleModel {
        pipeline,
        dictionary,
        members,
    })
}

pub fn save_model(model: &BoostedEnsembleModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_bytes(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<BoostedEnsembleModel> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}
