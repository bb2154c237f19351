//! Repeated k-fold evaluation of oversampling + binary relevance pipelines.
//!
//! For every `(repetition, fold)` cell, each method clusters, oversamples
//! and trains on the training rows only, then scores the held-out rows.
//! Random streams are keyed by `(method seed, repetition, fold, label)`, so a
//! method's numbers do not depend on which other methods run alongside it
//! or on thread scheduling.

use rayon::prelude::*;

use super::metrics::{auc_label, f1_label, macro_average, ConfusionCounts};
use crate::classifier::{
    label_train_config, predict, score, train_linear, LinearModel, TrainConfig,
};
use crate::clustering::ClusterAssignment;
use crate::data::{FoldPlan, MinMaxScaler, MultiLabelDataset};
use crate::error::{Error, Result};
use crate::oversample::{augment, cluster_for, no_augment, OversampleConfig};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct MethodConfig {
    pub name: String,
    pub oversample: OversampleConfig,
    pub train: TrainConfig,
    /// Decision threshold on the linear score.
    pub threshold: f64,
    /// Min-max scale features, fitted on each training fold.
    pub min_max_scale: bool,
}

impl MethodConfig {
    pub fn new(name: impl Into<String>, oversample: OversampleConfig, train: TrainConfig) -> Self {
        MethodConfig {
            name: name.into(),
            oversample,
            train,
            threshold: 0.0,
            min_max_scale: false,
        }
    }
}

/// Everything fitted on one training fold.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldModels {
    pub scaler: Option<MinMaxScaler>,
    pub clusters: Option<ClusterAssignment>,
    pub models: Vec<LinearModel>,
    /// synthetic rows added per label
    pub synthetic: Vec<usize>,
    /// labels whose training rows held one class only
    pub constant: Vec<bool>,
}

/// Fits `method` on `train` as cell `(rep, fold)`.
///
/// A label without minority points is left unaugmented, and a label whose
/// (augmented) training rows hold one class gets a constant model; both are
/// flagged in the result rather than failing the fold.
pub fn fit_fold(
    train: &MultiLabelDataset,
    method: &MethodConfig,
    rep: usize,
    fold: usize,
) -> Result<FoldModels> {
    let cell = [rep as u64, fold as u64];
    let os = OversampleConfig {
        seed: rng::derive_seed(method.oversample.seed, &cell),
        ..method.oversample.clone()
    };
    let tc = TrainConfig {
        seed: rng::derive_seed(method.train.seed, &cell),
        ..method.train.clone()
    };

    let (scaler, scaled);
    let train = if method.min_max_scale {
        let s = MinMaxScaler::fit(train.features());
        scaled = train.with_features(s.transform(train.features())?)?;
        scaler = Some(s);
        &scaled
    } else {
        scaler = None;
        train
    };

    let clusters = cluster_for(train, &os)?;
    let per_label: Vec<(LinearModel, usize, bool)> = (0..train.n_labels())
        .into_par_iter()
        .map(|l| {
            let aug = match augment(train, clusters.as_ref(), l, &os) {
                Ok(a) => a,
                Err(Error::NoMinority { .. }) => no_augment(train, l)?,
                Err(e) => return Err(e),
            };
            let x = aug.features();
            let y = aug.targets();
            match train_linear(x.view(), &y, &label_train_config(&tc, l)) {
                Ok(m) => Ok((m, aug.extra.len(), false)),
                Err(Error::SingleClass { .. }) => Ok((
                    LinearModel::constant(train.n_features(), y[0] == 1),
                    aug.extra.len(),
                    true,
                )),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;

    let mut out = FoldModels {
        scaler,
        clusters,
        models: Vec::with_capacity(per_label.len()),
        synthetic: Vec::with_capacity(per_label.len()),
        constant: Vec::with_capacity(per_label.len()),
    };
    for (m, s, c) in per_label {
        out.models.push(m);
        out.synthetic.push(s);
        out.constant.push(c);
    }
    Ok(out)
}

/// Fits `method` on the training rows of cell `(rep, fold)` of `plan`.
pub fn train_fold(
    ds: &MultiLabelDataset,
    plan: &FoldPlan,
    rep: usize,
    fold: usize,
    method: &MethodConfig,
) -> Result<FoldModels> {
    let train = ds.select_rows(&plan.train_rows(rep, fold))?;
    fit_fold(&train, method, rep, fold)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelOutcome {
    pub label: String,
    pub confusion: ConfusionCounts,
    pub f1: f64,
    /// `None` when the held-out rows of this label hold one class
    pub auc: Option<f64>,
    pub constant_model: bool,
    pub train_positives: usize,
    pub test_positives: usize,
    pub synthetic: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellReport {
    pub rep: usize,
    pub fold: usize,
    pub labels: Vec<LabelOutcome>,
    pub macro_f1: f64,
    pub macro_auc: Option<f64>,
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
    pub count: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let count = values.len();
        if count == 0 {
            return Summary {
                mean: f64::NAN,
                sd: f64::NAN,
                count,
            };
        }
        let mean = values.iter().sum::<f64>() / count as f64;
        let sd = if count > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (count - 1) as f64)
                .sqrt()
        } else {
            0.0
        };
        Summary { mean, sd, count }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub method: String,
    pub seed: u64,
    pub cells: Vec<CellReport>,
    /// flat mean over all cells
    pub f1: Summary,
    pub auc: Summary,
    /// per-repetition means (folds averaged first), then mean over repetitions
    pub f1_by_rep: Summary,
    pub auc_by_rep: Summary,
    /// (cell, label) pairs left out of macro-AUC
    pub auc_excluded: usize,
    /// (cell, label) pairs scored by a constant model
    pub constant_models: usize,
}

fn evaluate_cell(
    ds: &MultiLabelDataset,
    plan: &FoldPlan,
    rep: usize,
    fold: usize,
    method: &MethodConfig,
) -> Result<CellReport> {
    let fitted = train_fold(ds, plan, rep, fold, method)?;
    let test_rows = plan.test_rows(rep, fold);
    let test = ds.select_rows(test_rows)?;
    let x = match &fitted.scaler {
        Some(s) => s.transform(test.features())?,
        None => test.features().to_owned(),
    };
    let train_pos = ds
        .select_rows(&plan.train_rows(rep, fold))?
        .positive_counts();

    let mut labels = Vec::with_capacity(ds.n_labels());
    for (l, model) in fitted.models.iter().enumerate() {
        let truth = test.label_column(l).to_vec();
        let scores = score(model, x.view())?;
        let pred = predict(model, x.view(), method.threshold)?;
        let confusion = ConfusionCounts::from_predictions(&pred, &truth)?;
        let auc = match auc_label(&scores, &truth) {
            Ok(a) => Some(a),
            Err(Error::UndefinedMetric(_)) => None,
            Err(e) => return Err(e),
        };
        labels.push(LabelOutcome {
            label: ds.label_names()[l].clone(),
            confusion,
            f1: f1_label(&confusion),
            auc,
            constant_model: fitted.constant[l],
            train_positives: train_pos[l],
            test_positives: truth.iter().filter(|&&v| v == 1).count(),
            synthetic: fitted.synthetic[l],
        });
    }
    let macro_f1 = macro_average(&labels.iter().map(|o| Some(o.f1)).collect::<Vec<_>>())?;
    let macro_auc = macro_average(&labels.iter().map(|o| o.auc).collect::<Vec<_>>()).ok();
    Ok(CellReport {
        rep,
        fold,
        labels,
        macro_f1,
        macro_auc,
    })
}

fn by_rep(cells: &[CellReport], reps: usize, pick: impl Fn(&CellReport) -> Option<f64>) -> Summary {
    let means: Vec<f64> = (0..reps)
        .filter_map(|r| {
            let v: Vec<f64> = cells
                .iter()
                .filter(|c| c.rep == r)
                .filter_map(&pick)
                .collect();
            (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
        })
        .collect();
    Summary::of(&means)
}

/// Evaluates every method on every cell of `plan`. Reports come back in the
/// order of `methods`; cells in row-major `(rep, fold)` order.
pub fn run_cv(
    ds: &MultiLabelDataset,
    methods: &[MethodConfig],
    plan: &FoldPlan,
) -> Result<Vec<MetricReport>> {
    if plan.n != ds.n_rows() {
        return Err(Error::InvalidConfig(format!(
            "fold plan covers {} rows, dataset has {}",
            plan.n,
            ds.n_rows()
        )));
    }
    if methods.is_empty() {
        return Err(Error::InvalidConfig("no methods to evaluate".into()));
    }
    for m in methods {
        m.oversample.validate()?;
        m.train.validate()?;
    }
    let jobs: Vec<(usize, usize, usize)> = (0..methods.len())
        .flat_map(|m| plan.cells().map(move |(r, f)| (m, r, f)))
        .collect();
    let results: Vec<CellReport> = jobs
        .par_iter()
        .map(|&(m, rep, fold)| {
            evaluate_cell(ds, plan, rep, fold, &methods[m]).map_err(|e| Error::Fold {
                method: methods[m].name.clone(),
                rep,
                fold,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;

    let per_method = plan.repetitions * plan.folds_per_rep;
    Ok(methods
        .iter()
        .zip(results.chunks(per_method))
        .map(|(method, cells)| {
            let f1: Vec<f64> = cells.iter().map(|c| c.macro_f1).collect();
            let auc: Vec<f64> = cells.iter().filter_map(|c| c.macro_auc).collect();
            let all = cells.iter().flat_map(|c| &c.labels);
            MetricReport {
                method: method.name.clone(),
                seed: method.oversample.seed,
                f1: Summary::of(&f1),
                auc: Summary::of(&auc),
                f1_by_rep: by_rep(cells, plan.repetitions, |c| Some(c.macro_f1)),
                auc_by_rep: by_rep(cells, plan.repetitions, |c| c.macro_auc),
                auc_excluded: all.clone().filter(|o| o.auc.is_none()).count(),
                constant_models: all.filter(|o| o.constant_model).count(),
                cells: cells.to_vec(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_toy, make_fold_plan, ToyConfig};
    use crate::oversample::OversampleMode;

    fn method(name: &str, mode: OversampleMode) -> MethodConfig {
        MethodConfig::new(
            name,
            OversampleConfig {
                mode,
                seed: 5,
                ..Default::default()
            },
            TrainConfig {
                seed: 6,
                epochs: 20,
                ..Default::default()
            },
        )
    }

    fn small_toy() -> MultiLabelDataset {
        let mut cfg = ToyConfig::two_label_demo(1);
        cfg.points_per_blob = 40;
        generate_toy(&cfg).unwrap()
    }

    #[test]
    fn method_order_is_irrelevant() {
        let ds = small_toy();
        let plan = make_fold_plan(ds.n_rows(), 2, 2, 3).unwrap();
        let a = method("br", OversampleMode::None);
        let b = method("uclso", OversampleMode::Uclso);
        let c = method("smote", OversampleMode::Smote);
        let fwd = run_cv(&ds, &[a.clone(), b.clone(), c.clone()], &plan).unwrap();
        let rev = run_cv(&ds, &[c, b, a], &plan).unwrap();
        assert_eq!(fwd[0], rev[2]);
        assert_eq!(fwd[1], rev[1]);
        assert_eq!(fwd[2], rev[0]);
    }

    #[test]
    fn report_shape_and_ranges() {
        let ds = small_toy();
        let plan = make_fold_plan(ds.n_rows(), 3, 2, 1).unwrap();
        let r = &run_cv(&ds, &[method("uclso", OversampleMode::Uclso)], &plan).unwrap()[0];
        assert_eq!(r.cells.len(), 6);
        for c in &r.cells {
            assert_eq!(c.labels.len(), 2);
            assert!((0.0..=1.0).contains(&c.macro_f1));
            for o in &c.labels {
                assert_eq!(o.confusion.total(), plan.test_rows(c.rep, c.fold).len());
            }
        }
        assert_eq!(r.f1.count, 6);
        assert!(
            (r.f1.mean - r.f1_by_rep.mean).abs() < 1e-12,
            "equal-size groups share the mean"
        );
    }

    #[test]
    fn single_class_training_fold_gets_constant_model() {
        // label 1 has a single positive: one fold trains without any
        let ds = small_toy();
        let mut labels = ds.labels().to_owned();
        labels.column_mut(1).fill(0);
        labels[[0, 1]] = 1;
        let ds = MultiLabelDataset::new(
            ds.features().to_owned(),
            labels,
            ds.feature_names().to_vec(),
            ds.label_names().to_vec(),
        )
        .unwrap();
        let plan = make_fold_plan(ds.n_rows(), 1, 2, 0).unwrap();
        let r = &run_cv(&ds, &[method("uclso", OversampleMode::Uclso)], &plan).unwrap()[0];
        assert!(r.constant_models >= 1);
        assert!(r.auc_excluded >= 1);
    }

    #[test]
    fn mismatched_plan_rejected() {
        let ds = small_toy();
        let plan = make_fold_plan(10, 1, 2, 0).unwrap();
        assert!(run_cv(&ds, &[method("br", OversampleMode::None)], &plan).is_err());
    }

    #[test]
    fn summary_stats() {
        let s = Summary::of(&[1.0, 2.0, 3.0]);
        assert_eq!((s.mean, s.sd, s.count), (2.0, 1.0, 3));
        assert_eq!(Summary::of(&[4.0]).sd, 0.0);
    }
}
