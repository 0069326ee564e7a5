use crate::error::{Error, Result};
use crate::text::BowVector;

/// Row-major numeric block plus a sparse boolean block per row.
///
/// Feature ids `0..n_numeric` address the numeric block and
/// `n_numeric..n_numeric + bow_width` the boolean block.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n_rows: usize,
    n_numeric: usize,
    numeric: Vec<f64>,
    bow: Vec<BowVector>,
    bow_width: usize,
}

/// Borrowed view of one row.
#[derive(Debug, Clone, Copy)]
pub struct FeatureRow<'a> {
    pub numeric: &'a [f64],
    pub bow: &'a BowVector,
}

impl FeatureMatrix {
    pub fn new(
        n_numeric: usize,
        numeric: Vec<f64>,
        bow: Vec<BowVector>,
        bow_width: usize,
    ) -> Result<Self> {
        let n_rows = bow.len();
        if numeric.len() != n_rows * n_numeric {
            return Err(Error::DimensionMismatch(format!(
                "numeric block has {} values, expected {} rows x {} features",
                numeric.len(),
                n_rows,
                n_numeric
            )));
        }
        for (r, v) in bow.iter().enumerate() {
            if let Some(&id) = v.ids().last() {
                if id as usize >= bow_width {
                    return Err(Error::DimensionMismatch(format!(
                        "row {r}: bag-of-words id {id} >= width {bow_width}"
                    )));
                }
            }
        }
        Ok(Self {
            n_rows,
            n_numeric,
            numeric,
            bow,
            bow_width,
        })
    }

    /// Dense numeric-only matrix from rows.
    pub fn from_numeric_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_numeric = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_numeric) {
            return Err(Error::DimensionMismatch("ragged numeric rows".into()));
        }
        Self::new(
            n_numeric,
            rows.concat(),
            vec![BowVector::default(); rows.len()],
            0,
        )
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_numeric(&self) -> usize {
        self.n_numeric
    }

    pub fn bow_width(&self) -> usize {
        self.bow_width
    }

    pub fn width(&self) -> usize {
        self.n_numeric + self.bow_width
    }

    pub fn numeric(&self, row: usize, feature: usize) -> f64 {
        self.numeric[row * self.n_numeric + feature]
    }

    pub fn bow(&self, row: usize) -> &BowVector {
        &self.bow[row]
    }

    pub fn row(&self, row: usize) -> FeatureRow<'_> {
        FeatureRow {
            numeric: &self.numeric[row * self.n_numeric..(row + 1) * self.n_numeric],
            bow: &self.bow[row],
        }
    }

    pub(crate) fn first_non_finite(&self) -> Option<(usize, usize)> {
        self.numeric
            .iter()
            .position(|v| !v.is_finite())
            .map(|i| (i / self.n_numeric.max(1), i % self.n_numeric.max(1)))
    }
}
