use std::collections::HashSet;
use std::fmt::Write as _;

use super::MultiLabelDataset;

/// Column header for [`DatasetStats::csv_row`], in the order of the usual
/// multi-label dataset description table.
pub const STATS_CSV_HEADER: &str = "dataset,instances,inputs,labels,type,cardinality,density,\
distinct_labelsets,proportion_distinct,ir_min,ir_max,ir_avg";

/// Descriptive statistics of a multi-label dataset.
///
/// Imbalance ratios are majority count over minority count per label.
/// Labels with no positives or no negatives have no defined ratio; they are
/// listed in `undefined_ir` and left out of `ir_min`/`ir_max`/`ir_avg`,
/// which are NaN if no label has a defined ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetStats {
    pub instances: usize,
    pub inputs: usize,
    pub labels: usize,
    pub input_type: &'static str,
    pub cardinality: f64,
    pub density: f64,
    pub distinct_labelsets: usize,
    pub proportion_distinct: f64,
    pub ir_min: f64,
    pub ir_max: f64,
    pub ir_avg: f64,
    pub per_label_ir: Vec<Option<f64>>,
    pub undefined_ir: Vec<String>,
}

/// `max(pos, neg) / min(pos, neg)`, or `None` when either class is empty.
pub fn imbalance_ratio(pos: usize, neg: usize) -> Option<f64> {
    let (lo, hi) = (pos.min(neg), pos.max(neg));
    (lo > 0).then(|| hi as f64 / lo as f64)
}

pub fn compute_stats(ds: &MultiLabelDataset) -> DatasetStats {
    let n = ds.n_rows();
    let q = ds.n_labels();
    let labels = ds.labels();
    let relevant: usize = labels.iter().map(|&v| v as usize).sum();
    let cardinality = relevant as f64 / n as f64;

    let distinct: HashSet<Vec<u8>> = labels.rows().into_iter().map(|r| r.to_vec()).collect();

    let per_label_ir: Vec<Option<f64>> = ds
        .positive_counts()
        .into_iter()
        .map(|pos| imbalance_ratio(pos, n - pos))
        .collect();
    let undefined_ir = per_label_ir
        .iter()
        .zip(ds.label_names())
        .filter(|(ir, _)| ir.is_none())
        .map(|(_, name)| name.clone())
        .collect();
    let defined: Vec<f64> = per_label_ir.iter().flatten().copied().collect();
    let (ir_min, ir_max, ir_avg) = if defined.is_empty() {
        (f64::NAN, f64::NAN, f64::NAN)
    } else {
        (
            defined.iter().copied().fold(f64::INFINITY, f64::min),
            defined.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            defined.iter().sum::<f64>() / defined.len() as f64,
        )
    };

    DatasetStats {
        instances: n,
        inputs: ds.input_attributes(),
        labels: q,
        input_type: ds.input_kind().as_str(),
        cardinality,
        density: cardinality / q as f64,
        distinct_labelsets: distinct.len(),
        proportion_distinct: distinct.len() as f64 / n as f64,
        ir_min,
        ir_max,
        ir_avg,
        per_label_ir,
        undefined_ir,
    }
}

impl DatasetStats {
    /// One CSV row matching [`STATS_CSV_HEADER`]; reals to three decimals.
    pub fn csv_row(&self, dataset: &str) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "{},{},{},{},{},{:.3},{:.3},{},{:.3},{:.3},{:.3},{:.3}",
            dataset,
            self.instances,
            self.inputs,
            self.labels,
            self.input_type,
            self.cardinality,
            self.density,
            self.distinct_labelsets,
            self.proportion_distinct,
            self.ir_min,
            self.ir_max,
            self.ir_avg
        );
        s
    }
}
