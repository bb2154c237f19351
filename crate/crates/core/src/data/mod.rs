//! Multi-label datasets: representation, Mulan ingestion, statistics, label
//! filtering, fold planning and synthetic toy data.

mod arff;
mod folds;
mod stats;
mod toy;

use std::collections::HashSet;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

pub use arff::{
    arff_string, label_xml_string, load_mulan, parse_arff, parse_label_xml, write_arff,
    write_label_xml, write_mulan,
};
pub use folds::{make_fold_plan, FoldPlan};
pub use stats::{compute_stats, imbalance_ratio, DatasetStats, STATS_CSV_HEADER};
pub use toy::{generate_toy, Blob, LabelRule, ToyConfig, DEMO_SEED};

/// Whether the input attributes were all numeric in the source file, or some
/// were nominal and got one-hot encoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputKind {
    Numeric,
    Nominal,
}

impl InputKind {
    pub fn as_str(self) -> &'static str {
        match self {
            InputKind::Numeric => "numeric",
            InputKind::Nominal => "nominal",
        }
    }
}

/// A dense feature matrix paired with a binary label matrix.
///
/// Rows are instances. `features` has one column per (encoded) input and
/// `labels` one column per label, holding only 0 or 1. The dataset is
/// immutable once built; all transformations return new values.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiLabelDataset {
    features: Array2<f64>,
    labels: Array2<u8>,
    feature_names: Vec<String>,
    label_names: Vec<String>,
    input_kind: InputKind,
    input_attributes: usize,
}

impl MultiLabelDataset {
    pub fn new(
        features: Array2<f64>,
        labels: Array2<u8>,
        feature_names: Vec<String>,
        label_names: Vec<String>,
    ) -> Result<Self> {
        let d = features.ncols();
        Self::with_schema(
            features,
            labels,
            feature_names,
            label_names,
            InputKind::Numeric,
            d,
        )
    }

    /// Like [`MultiLabelDataset::new`], also recording the source attribute
    /// schema (used for the `inputs` and `type` statistics columns).
    pub fn with_schema(
        features: Array2<f64>,
        labels: Array2<u8>,
        feature_names: Vec<String>,
        label_names: Vec<String>,
        input_kind: InputKind,
        input_attributes: usize,
    ) -> Result<Self> {
        let invalid = |m: String| Err(Error::InvalidDataset(m));
        if features.nrows() == 0 {
            return invalid("dataset has no rows".into());
        }
        if features.ncols() == 0 {
            return invalid("dataset has no features".into());
        }
        if labels.ncols() == 0 {
            return invalid("dataset has no labels".into());
        }
        if features.nrows() != labels.nrows() {
            return invalid(format!(
                "{} feature rows but {} label rows",
                features.nrows(),
                labels.nrows()
            ));
        }
        if feature_names.len() != features.ncols() {
            return invalid(format!(
                "{} feature names for {} feature columns",
                feature_names.len(),
                features.ncols()
            ));
        }
        if label_names.len() != labels.ncols() {
            return invalid(format!(
                "{} label names for {} label columns",
                label_names.len(),
                labels.ncols()
            ));
        }
        if let Some(v) = labels.iter().find(|&&v| v > 1) {
            return invalid(format!("label value {v} is not binary"));
        }
        if let Some(dup) = first_duplicate(&feature_names) {
            return invalid(format!("duplicate feature name `{dup}`"));
        }
        if let Some(dup) = first_duplicate(&label_names) {
            return invalid(format!("duplicate label name `{dup}`"));
        }
        Ok(MultiLabelDataset {
            features,
            labels,
            feature_names,
            label_names,
            input_kind,
            input_attributes,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_labels(&self) -> usize {
        self.labels.ncols()
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn labels(&self) -> ArrayView2<'_, u8> {
        self.labels.view()
    }

    pub fn label_column(&self, l: usize) -> ArrayView1<'_, u8> {
        self.labels.column(l)
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn input_kind(&self) -> InputKind {
        self.input_kind
    }

    /// Number of attributes in the source file before one-hot encoding.
    pub fn input_attributes(&self) -> usize {
        self.input_attributes
    }

    pub fn check_label(&self, l: usize) -> Result<()> {
        if l >= self.n_labels() {
            return Err(Error::LabelOutOfRange {
                index: l,
                labels: self.n_labels(),
            });
        }
        Ok(())
    }

    /// Positive count for each label.
    pub fn positive_counts(&self) -> Vec<usize> {
        self.labels
            .columns()
            .into_iter()
            .map(|c| c.iter().filter(|&&v| v == 1).count())
            .collect()
    }

    /// A new dataset made of the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.n_rows()) {
            return Err(Error::InvalidDataset(format!("row {bad} out of range")));
        }
        Self::with_schema(
            self.features.select(Axis(0), rows),
            self.labels.select(Axis(0), rows),
            self.feature_names.clone(),
            self.label_names.clone(),
            self.input_kind,
            self.input_attributes,
        )
    }

    /// A new dataset keeping only the given label columns.
    pub fn select_labels(&self, keep: &[usize]) -> Result<Self> {
        for &l in keep {
            self.check_label(l)?;
        }
        Self::with_schema(
            self.features.clone(),
            self.labels.select(Axis(1), keep),
            self.feature_names.clone(),
            keep.iter().map(|&l| self.label_names[l].clone()).collect(),
            self.input_kind,
            self.input_attributes,
        )
    }

    /// A copy with the feature matrix replaced (same shape).
    pub fn with_features(&self, features: Array2<f64>) -> Result<Self> {
        if features.dim() != self.features.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                found: features.ncols(),
            });
        }
        let mut out = self.clone();
        out.features = features;
        Ok(out)
    }
}

fn first_duplicate(names: &[String]) -> Option<&str> {
    let mut seen = HashSet::with_capacity(names.len());
    names
        .iter()
        .find(|n| !seen.insert(n.as_str()))
        .map(String::as_str)
}

/// Why a label was removed by [`filter_labels`].
#[derive(Debug, Clone, PartialEq)]
pub enum DropReason {
    TooFewPositives { positives: usize, min_pos: usize },
    TooImbalanced { ratio: f64, max_ir: f64 },
}

impl std::fmt::Display for DropReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DropReason::TooFewPositives { positives, min_pos } => {
                write!(f, "{positives} positives < {min_pos}")
            }
            DropReason::TooImbalanced { ratio, max_ir } => {
                write!(f, "imbalance ratio {ratio:.3} >= {max_ir}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DroppedLabel {
    pub name: String,
    pub reason: DropReason,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FilterReport {
    pub dropped: Vec<DroppedLabel>,
}

pub const DEFAULT_MAX_IR: f64 = 50.0;
pub const DEFAULT_MIN_POS: usize = 20;

/// Removes labels whose imbalance ratio is at least `max_ir` or that have
/// fewer than `min_pos` positives. A label with no negatives has an infinite
/// ratio and is removed as too imbalanced.
pub fn filter_labels(
    ds: &MultiLabelDataset,
    max_ir: f64,
    min_pos: usize,
) -> Result<(MultiLabelDataset, FilterReport)> {
    let n = ds.n_rows();
    let mut keep = Vec::new();
    let mut report = FilterReport::default();
    for (l, &pos) in ds.positive_counts().iter().enumerate() {
        let ratio = imbalance_ratio(pos, n - pos).unwrap_or(f64::INFINITY);
        let reason = if pos < min_pos {
            Some(DropReason::TooFewPositives {
                positives: pos,
                min_pos,
            })
        } else if ratio >= max_ir {
            Some(DropReason::TooImbalanced { ratio, max_ir })
        } else {
            None
        };
        match reason {
            Some(reason) => report.dropped.push(DroppedLabel {
                name: ds.label_names[l].clone(),
                reason,
            }),
            None => keep.push(l),
        }
    }
    if keep.is_empty() {
        return Err(Error::AllLabelsFiltered);
    }
    Ok((ds.select_labels(&keep)?, report))
}

/// Per-column min-max scaling parameters, fitted on one matrix and applied
/// to others (training and held-out rows share the training fit).
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxScaler {
    min: Vec<f64>,
    range: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(x: ArrayView2<'_, f64>) -> Self {
        let mut min = Vec::with_capacity(x.ncols());
        let mut range = Vec::with_capacity(x.ncols());
        for col in x.columns() {
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            min.push(lo);
            // constant columns map to 0
            range.push(if hi > lo { hi - lo } else { 1.0 });
        }
        MinMaxScaler { min, range }
    }

    pub fn transform(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.min.len() {
            return Err(Error::DimensionMismatch {
                expected: self.min.len(),
                found: x.ncols(),
            });
        }
        let mut out = x.to_owned();
        for (j, mut col) in out.columns_mut().into_iter().enumerate() {
            col.mapv_inplace(|v| (v - self.min[j]) / self.range[j]);
        }
        Ok(out)
    }
}
