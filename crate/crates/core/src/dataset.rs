//! Competition-format comment data: loading, splitting and summary statistics.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng;

pub const COL_LANGUAGE: &str = "language";
pub const COL_POST_INDEX: &str = "post_index";
pub const COL_TEXT: &str = "commentText";
pub const COL_REPORT_COMMENT: &str = "report_count_comment";
pub const COL_REPORT_POST: &str = "report_count_post";
pub const COL_LIKE_COMMENT: &str = "like_count_comment";
pub const COL_LIKE_POST: &str = "like_count_post";
pub const COL_LABEL: &str = "label";
/// Optional row identifier column, used to align external score files.
pub const COL_ID: &str = "id";

/// The four count columns, in feature-layout order.
pub const COUNT_COLUMNS: [&str; 4] = [
    COL_REPORT_COMMENT,
    COL_REPORT_POST,
    COL_LIKE_COMMENT,
    COL_LIKE_POST,
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommentRecord {
    pub id: Option<String>,
    pub language: String,
    pub post_index: String,
    pub comment_text: String,
    pub report_count_comment: u64,
    pub report_count_post: u64,
    pub like_count_comment: u64,
    pub like_count_post: u64,
    pub label: Option<u8>,
}

impl CommentRecord {
    /// Count columns in `COUNT_COLUMNS` order.
    pub fn counts(&self) -> [u64; 4] {
        [
            self.report_count_comment,
            self.report_count_post,
            self.like_count_comment,
            self.like_count_post,
        ]
    }
}

/// Immutable, ordered collection of comment rows. Row `i` is `records()[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    records: Vec<CommentRecord>,
    has_labels: bool,
    has_ids: bool,
}

impl Dataset {
    /// Builds a dataset, checking that labels are either present on every
    /// row or on none, and that ids follow the same rule.
    pub fn new(records: Vec<CommentRecord>) -> Result<Self> {
        let with_labels = records.iter().filter(|r| r.label.is_some()).count();
        if with_labels != 0 && with_labels != records.len() {
            return Err(Error::invalid("labels must be present on all rows or none"));
        }
        let with_ids = records.iter().filter(|r| r.id.is_some()).count();
        if with_ids != 0 && with_ids != records.len() {
            return Err(Error::invalid("ids must be present on all rows or none"));
        }
        if let Some(bad) = records.iter().position(|r| r.label.is_some_and(|l| l > 1)) {
            return Err(Error::LabelDomain {
                row: bad,
                value: records[bad].label.unwrap().to_string(),
            });
        }
        let has_labels = !records.is_empty() && with_labels == records.len();
        let has_ids = !records.is_empty() && with_ids == records.len();
        Ok(Self {
            records,
            has_labels,
            has_ids,
        })
    }

    pub fn records(&self) -> &[CommentRecord] {
        &self.records
    }

    pub fn row_count(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn has_labels(&self) -> bool {
        self.has_labels
    }

    pub fn has_ids(&self) -> bool {
        self.has_ids
    }

    /// Labels as a vector; `None` when the dataset is unlabeled.
    pub fn labels(&self) -> Option<Vec<u8>> {
        if !self.has_labels {
            return None;
        }
        Some(self.records.iter().map(|r| r.label.unwrap()).collect())
    }

    /// Sub-dataset of the given rows, in the order given. Rows are re-indexed.
    pub fn select(&self, rows: &[usize]) -> Dataset {
        Dataset {
            records: rows.iter().map(|&i| self.records[i].clone()).collect(),
            has_labels: self.has_labels && !rows.is_empty(),
            has_ids: self.has_ids && !rows.is_empty(),
        }
    }

    /// Writes the dataset in the same format `load_dataset` reads.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv_to(file)
            .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))
    }

    pub fn write_csv_to<W: Write>(&self, writer: W) -> std::result::Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = Vec::new();
        if self.has_ids {
            header.push(COL_ID);
        }
        header.extend([COL_LANGUAGE, COL_POST_INDEX, COL_TEXT]);
        header.extend(COUNT_COLUMNS);
        if self.has_labels {
            header.push(COL_LABEL);
        }
        w.write_record(&header)?;
        for r in &self.records {
            let mut fields: Vec<String> = Vec::with_capacity(header.len());
            if self.has_ids {
                fields.push(r.id.clone().unwrap_or_default());
            }
            fields.push(r.language.clone());
            fields.push(r.post_index.clone());
            fields.push(r.comment_text.clone());
            fields.extend(r.counts().iter().map(u64::to_string));
            if self.has_labels {
                fields.push(r.label.unwrap().to_string());
            }
            w.write_record(&fields)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Loads a dataset from a CSV file. With `expect_labels` the `label`
/// column is required; otherwise it is read when present.
pub fn load_dataset(path: impl AsRef<Path>, expect_labels: bool) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(file, expect_labels)
}

pub fn read_dataset<R: Read>(reader: R, expect_labels: bool) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| csv_error(0, e))?.clone();

    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, name) in header.iter().enumerate() {
        let known = [
            COL_LANGUAGE,
            COL_POST_INDEX,
            COL_TEXT,
            COL_REPORT_COMMENT,
            COL_REPORT_POST,
            COL_LIKE_COMMENT,
            COL_LIKE_POST,
            COL_LABEL,
            COL_ID,
        ];
        let Some(&canonical) = known.iter().find(|k| **k == name) else {
            return Err(Error::UnexpectedColumn {
                column: name.to_string(),
            });
        };
        if index.insert(canonical, i).is_some() {
            return Err(Error::UnexpectedColumn {
                column: format!("{name} (duplicated)"),
            });
        }
    }
    let mut required = vec![COL_LANGUAGE, COL_POST_INDEX, COL_TEXT];
    required.extend(COUNT_COLUMNS);
    if expect_labels {
        required.push(COL_LABEL);
    }
    for col in required {
        if !index.contains_key(col) {
            return Err(Error::MissingColumn {
                column: col.to_string(),
            });
        }
    }
    let label_col = index.get(COL_LABEL).copied();
    let id_col = index.get(COL_ID).copied();

    let mut records = Vec::new();
    for (row, result) in rdr.records().enumerate() {
        let rec = result.map_err(|e| csv_error(row, e))?;
        let field = |col: &str| rec.get(index[col]).unwrap_or("");
        let count = |col: &str| -> Result<u64> {
            let raw = field(col).trim();
            raw.parse::<u64>().map_err(|_| Error::Field {
                row,
                column: col.to_string(),
                message: format!("`{raw}` is not a non-negative integer count"),
            })
        };
        let label = match label_col {
            None => None,
            Some(c) => {
                let raw = rec.get(c).unwrap_or("").trim();
                match raw {
                    "0" => Some(0),
                    "1" => Some(1),
                    _ => {
                        return Err(Error::LabelDomain {
                            row,
                            value: raw.to_string(),
                        })
                    }
                }
            }
        };
        records.push(CommentRecord {
            id: id_col.map(|c| rec.get(c).unwrap_or("").to_string()),
            language: field(COL_LANGUAGE).to_string(),
            post_index: field(COL_POST_INDEX).to_string(),
            comment_text: field(COL_TEXT).to_string(),
            report_count_comment: count(COL_REPORT_COMMENT)?,
            report_count_post: count(COL_REPORT_POST)?,
            like_count_comment: count(COL_LIKE_COMMENT)?,
            like_count_post: count(COL_LIKE_POST)?,
            label,
        });
    }
    let has_labels = label_col.is_some() && !records.is_empty();
    let has_ids = id_col.is_some() && !records.is_empty();
    Ok(Dataset {
        records,
        has_labels,
        has_ids,
    })
}

fn csv_error(row: usize, e: csv::Error) -> Error {
    let row = e
        .position()
        .map(|p| (p.record() as usize).saturating_sub(1))
        .unwrap_or(row);
    Error::Csv {
        row,
        message: e.to_string(),
    }
}

/// Row indices `(train, dev)`, each ascending.
///
/// The dev part is the first `round(dev_fraction * n)` entries of
/// `rng::permutation(n, seed)`.
pub fn split_indices(n: usize, dev_fraction: f64, seed: i64) -> Result<(Vec<usize>, Vec<usize>)> {
    if n == 0 {
        return Err(Error::invalid("cannot split an empty dataset"));
    }
    if !(dev_fraction > 0.0 && dev_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "dev_fraction {dev_fraction} must lie in (0, 1)"
        )));
    }
    let dev_len = (dev_fraction * n as f64).round() as usize;
    if dev_len == 0 || dev_len >= n {
        return Err(Error::invalid(format!(
            "dev_fraction {dev_fraction} of {n} rows leaves an empty part"
        )));
    }
    let perm = rng::permutation(n, seed);
    let mut in_dev = vec![false; n];
    for &i in &perm[..dev_len] {
        in_dev[i] = true;
    }
    let (dev, train): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| in_dev[i]);
    Ok((train, dev))
}

/// Splits a labeled dataset into `(train, dev)`; see `split_indices`.
pub fn split_train_dev(d: &Dataset, dev_fraction: f64, seed: i64) -> Result<(Dataset, Dataset)> {
    if d.is_empty() {
        return Err(Error::invalid("cannot split an empty dataset"));
    }
    if !d.has_labels() {
        return Err(Error::invalid("train/dev split requires a labeled dataset"));
    }
    let (train, dev) = split_indices(d.row_count(), dev_fraction, seed)?;
    Ok((d.select(&train), d.select(&dev)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSummary {
    pub name: &'static str,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub max: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdaReport {
    pub row_count: usize,
    pub language_shares: BTreeMap<String, f64>,
    /// Fractions of label 0 and label 1, when the data is labeled.
    pub class_fractions: Option<[f64; 2]>,
    pub mean_word_count: f64,
    pub columns: Vec<ColumnSummary>,
    pub unique_posts: usize,
}

/// Words are maximal runs of characters other than ASCII space.
pub fn space_word_count(text: &str) -> usize {
    text.split(' ').filter(|w| !w.is_empty()).count()
}

pub fn compute_stats(d: &Dataset) -> Result<EdaReport> {
    if d.is_empty() {
        return Err(Error::invalid(
            "cannot compute statistics of an empty dataset",
        ));
    }
    let n = d.row_count() as f64;
    let mut lang_counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in d.records() {
        *lang_counts.entry(r.language.as_str()).or_default() += 1;
    }
    let language_shares = lang_counts
        .into_iter()
        .map(|(k, c)| (k.to_string(), c as f64 / n))
        .collect();

    let class_fractions = d.labels().map(|labels| {
        let pos = labels.iter().filter(|&&l| l == 1).count();
        let neg = labels.len() - pos;
        [neg as f64 / n, pos as f64 / n]
    });

    let words: usize = d
        .records()
        .iter()
        .map(|r| space_word_count(&r.comment_text))
        .sum();

    let columns = COUNT_COLUMNS
        .iter()
        .enumerate()
        .map(|(c, &name)| {
            let values: Vec<u64> = d.records().iter().map(|r| r.counts()[c]).collect();
            let mean = values.iter().map(|&v| v as f64).sum::<f64>() / n;
            let var = values
                .iter()
                .map(|&v| (v as f64 - mean).powi(2))
                .sum::<f64>()
                / n;
            ColumnSummary {
                name,
                mean,
                std: var.sqrt(),
                max: values.iter().copied().max().unwrap_or(0),
            }
        })
        .collect();

    let unique_posts = d
        .records()
        .iter()
        .map(|r| r.post_index.as_str())
        .collect::<HashSet<_>>()
        .len();

    Ok(EdaReport {
        row_count: d.row_count(),
        language_shares,
        class_fractions,
        mean_word_count: words as f64 / n,
        columns,
        unique_posts,
    })
}

impl EdaReport {
    /// Flat `(metric, value)` pairs in a fixed order.
    pub fn metrics(&self) -> Vec<(String, String)> {
        let mut out = vec![("row_count".to_string(), self.row_count.to_string())];
        for (lang, share) in &self.language_shares {
            out.push((format!("language_share.{lang}"), share.to_string()));
        }
        if let Some([neg, pos]) = self.class_fractions {
            out.push(("class_fraction.0".to_string(), neg.to_string()));
            out.push(("class_fraction.1".to_string(), pos.to_string()));
        }
        out.push((
            "mean_word_count".to_string(),
            self.mean_word_count.to_string(),
        ));
        for c in &self.columns {
            out.push((format!("{}.mean", c.name), c.mean.to_string()));
            out.push((format!("{}.std", c.name), c.std.to_string()));
            out.push((format!("{}.max", c.name), c.max.to_string()));
        }
        out.push((
            "unique_post_index".to_string(),
            self.unique_posts.to_string(),
        ));
        out
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.metrics() {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["metric", "value"]).unwrap();
        for (k, v) in self.metrics() {
            w.write_record([k, v]).unwrap();
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const HEADER: &str =
        "language,post_index,commentText,report_count_comment,report_count_post,like_count_comment,like_count_post,label";

    fn rec(lang: &str, text: &str, like_post: u64, label: u8) -> CommentRecord {
        CommentRecord {
            id: None,
            language: lang.into(),
            post_index: "1".into(),
            comment_text: text.into(),
            report_count_comment: 0,
            report_count_post: 0,
            like_count_comment: 0,
            like_count_post: like_post,
            label: Some(label),
        }
    }

    #[test]
    fn loads_three_labeled_rows() {
        let csv = format!(
            "{HEADER}\nHindi,1,\"hello, world\",0,1,2,3,1\nTamil,2,,0,0,0,0,0\nHindi,1,x,1,1,1,1,0\n"
        );
        let d = read_dataset(csv.as_bytes(), true).unwrap();
        assert_eq!(d.row_count(), 3);
        assert!(d.has_labels());
        assert_eq!(d.records()[0].comment_text, "hello, world");
        assert_eq!(d.records()[1].comment_text, "");
    }

    #[test]
    fn header_order_does_not_matter() {
        let csv = "label,commentText,language,post_index,like_count_post,like_count_comment,report_count_post,report_count_comment\n1,hi,Odia,9,4,3,2,1\n";
        let d = read_dataset(csv.as_bytes(), true).unwrap();
        let r = &d.records()[0];
        assert_eq!(r.counts(), [1, 2, 3, 4]);
        assert_eq!(r.label, Some(1));
    }

    #[test]
    fn missing_text_column_is_named() {
        let csv = "language,post_index,report_count_comment,report_count_post,like_count_comment,like_count_post,label\nHindi,1,0,0,0,0,1\n";
        let err = read_dataset(csv.as_bytes(), true).unwrap_err();
        assert!(matches!(err, Error::MissingColumn { ref column } if column == "commentText"));
        assert!(err.to_string().contains("commentText"));
    }

    #[test]
    fn label_two_reports_row() {
        let csv = format!("{HEADER}\nHindi,1,a,0,0,0,0,1\nHindi,1,b,0,0,0,0,2\n");
        let err = read_dataset(csv.as_bytes(), true).unwrap_err();
        assert!(matches!(err, Error::LabelDomain { row: 1, .. }), "{err}");
    }

    #[test]
    fn non_integer_count_reports_row_and_column() {
        let csv = format!("{HEADER}\nHindi,1,a,0,0,-3,0,1\n");
        let err = read_dataset(csv.as_bytes(), true).unwrap_err();
        match err {
            Error::Field { row, column, .. } => {
                assert_eq!(row, 0);
                assert_eq!(column, COL_LIKE_COMMENT);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn ragged_row_is_a_csv_error() {
        let csv = format!("{HEADER}\nHindi,1,a,0,0,0,0,1\nHindi,1,\"b,0,0,0,0\n");
        assert!(matches!(
            read_dataset(csv.as_bytes(), true),
            Err(Error::Csv { .. })
        ));
    }

    #[test]
    fn unlabeled_file_loads_without_labels() {
        let header = HEADER.trim_end_matches(",label");
        let csv = format!("{header}\nHindi,1,a,0,0,0,0\n");
        let d = read_dataset(csv.as_bytes(), false).unwrap();
        assert!(!d.has_labels());
        assert!(matches!(
            read_dataset(csv.as_bytes(), true),
            Err(Error::MissingColumn { .. })
        ));
    }

    #[test]
    fn split_of_hundred_rows_is_99_1() {
        let d = Dataset::new((0..100).map(|i| rec("Hindi", "", i, 0)).collect()).unwrap();
        let (train, dev) = split_train_dev(&d, 0.01, 3).unwrap();
        assert_eq!((train.row_count(), dev.row_count()), (99, 1));
        let (train2, dev2) = split_train_dev(&d, 0.01, 3).unwrap();
        assert_eq!(train, train2);
        assert_eq!(dev, dev2);
    }

    #[test]
    fn split_rejects_bad_fraction() {
        let d = Dataset::new((0..10).map(|i| rec("Hindi", "", i, 0)).collect()).unwrap();
        assert!(split_train_dev(&d, 0.0, 1).is_err());
        assert!(split_train_dev(&d, 1.0, 1).is_err());
        assert!(split_train_dev(&d, 0.01, 1).is_err());
    }

    #[test]
    fn stats_worked_values() {
        let d = Dataset::new(vec![
            rec("Hindi", "a b", 0, 0),
            rec("Tamil", "a  b c d", 10, 1),
        ])
        .unwrap();
        let s = compute_stats(&d).unwrap();
        assert_eq!(s.class_fractions, Some([0.5, 0.5]));
        assert_eq!(s.mean_word_count, 3.0);
        let lp = &s.columns[3];
        assert_eq!((lp.mean, lp.std, lp.max), (5.0, 5.0, 10));
        assert_eq!(s.language_shares["Hindi"], 0.5);
        assert!(s.to_text().contains("like_count_post.std = 5"));
        assert!(s.to_csv().starts_with("metric,value\n"));
    }

    #[test]
    fn stats_reject_empty() {
        assert!(compute_stats(&Dataset::new(vec![]).unwrap()).is_err());
    }

    fn arb_record(labeled: bool) -> impl Strategy<Value = CommentRecord> {
        (
            "[A-Za-z]{1,8}",
            "[0-9]{1,4}",
            "[ -~\u{900}-\u{97f}\n]{0,20}",
            proptest::array::uniform4(0u64..10_000),
            0u8..2,
        )
            .prop_map(
                move |(language, post_index, comment_text, c, l)| CommentRecord {
                    id: None,
                    language,
                    post_index,
                    comment_text,
                    report_count_comment: c[0],
                    report_count_post: c[1],
                    like_count_comment: c[2],
                    like_count_post: c[3],
                    label: labeled.then_some(l),
                },
            )
    }

    proptest! {
        #[test]
        fn csv_round_trip(records in proptest::collection::vec(arb_record(true), 1..20)) {
            let d = Dataset::new(records).unwrap();
            let mut buf = Vec::new();
            d.write_csv_to(&mut buf).unwrap();
            let back = read_dataset(buf.as_slice(), true).unwrap();
            prop_assert_eq!(d, back);
        }

        #[test]
        fn split_is_a_partition(n in 2usize..400, frac in 0.01f64..0.99, seed in any::<i64>()) {
            if let Ok((train, dev)) = split_indices(n, frac, seed) {
                prop_assert_eq!(dev.len(), (frac * n as f64).round() as usize);
                let mut all: Vec<usize> = train.iter().chain(&dev).copied().collect();
                all.sort_unstable();
                prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
                prop_assert!(train.windows(2).all(|w| w[0] < w[1]));
                prop_assert!(dev.windows(2).all(|w| w[0] < w[1]));
            }
        }

        #[test]
        fn language_shares_sum_to_one(records in proptest::collection::vec(arb_record(false), 1..60)) {
            let s = compute_stats(&Dataset::new(records).unwrap()).unwrap();
            let total: f64 = s.language_shares.values().sum();
            prop_assert!((total - 1.0).abs() <= 1e-9);
        }
    }
}
