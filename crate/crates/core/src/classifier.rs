//! Binary-relevance linear SVMs.
//!
//! Each label gets its own linear model trained on that label's augmented
//! dataset. Training minimises the primal soft-margin objective
//!
//! ```text
//! lambda/2 * |w|^2 + 1/n * sum_i max(0, 1 - y_i (w . x_i + b)),  lambda = 1 / (C n)
//! ```
//!
//! by stochastic subgradient descent over shuffled epochs, with step size
//! `eta_t = eta0 / (1 + eta0 * lambda * t)`. The bias is not regularised.

use std::fmt::Write as _;

use ndarray::{ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::oversample::AugmentedDataset;
use crate::rng::{self, tag};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Inverse regularisation strength `C`.
    pub reg_c: f64,
    pub epochs: usize,
    /// Initial step size.
    pub eta0: f64,
    pub seed: u64,
    /// Stop once an epoch changes the objective by less than
    /// `tolerance * max(1, |objective|)`.
    pub tolerance: f64,
    /// Standardise features on the training rows before fitting; the
    /// returned model is folded back to raw feature space.
    pub standardize: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            reg_c: 1.0,
            epochs: 100,
            eta0: 0.1,
            seed: 0,
            tolerance: 1e-6,
            standardize: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.reg_c) || !positive(self.eta0) || self.epochs == 0 {
            return Err(Error::InvalidConfig(
                "reg_c, eta0 and epochs must be positive".into(),
            ));
        }
        #[allow(clippy::neg_cmp_op_on_partial_ord)] // also rejects NaN
        if !(self.tolerance >= 0.0) {
            return Err(Error::InvalidConfig(
                "tolerance must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainMeta {
    pub reg_c: f64,
    pub epochs_run: usize,
    /// Objective on the training rows after the last epoch.
    pub objective: f64,
    /// Set for models that predict one class regardless of input.
    pub constant: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub meta: TrainMeta,
}

impl LinearModel {
    /// A model scoring every row `+1` (if `positive`) or `-1`.
    pub fn constant(dim: usize, positive: bool) -> Self {
        LinearModel {
            weights: vec![0.0; dim],
            bias: if positive { 1.0 } else { -1.0 },
            meta: TrainMeta {
                reg_c: 0.0,
                epochs_run: 0,
                objective: 0.0,
                constant: true,
            },
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn score_row(&self, x: ArrayView1<'_, f64>) -> f64 {
        self.weights
            .iter()
            .zip(x.iter())
            .map(|(w, v)| w * v)
            .sum::<f64>()
            + self.bias
    }

    /// Plain-text export: a metadata line, the bias, then one weight per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "linear-model dim={} reg_c={} epochs={} objective={} constant={}",
            self.dim(),
            self.meta.reg_c,
            self.meta.epochs_run,
            self.meta.objective,
            self.meta.constant
        );
        let _ = writeln!(s, "{}", self.bias);
        for w in &self.weights {
            let _ = writeln!(s, "{w}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |m: &str| Error::ModelFormat(m.to_string());
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty input"))?;
        let mut fields = header.split_whitespace();
        if fields.next() != Some("linear-model") {
            return Err(bad("missing `linear-model` header"));
        }
        let (mut dim, mut reg_c, mut epochs, mut objective, mut constant) =
            (None, None, None, None, None);
        for f in fields {
            let (k, v) = f
                .split_once('=')
                .ok_or_else(|| bad("header field without `=`"))?;
            match k {
                "dim" => dim = v.parse::<usize>().ok(),
                "reg_c" => reg_c = v.parse::<f64>().ok(),
                "epochs" => epochs = v.parse::<usize>().ok(),
                "objective" => objective = v.parse::<f64>().ok(),
                "constant" => constant = v.parse::<bool>().ok(),
                _ => return Err(bad("unknown header field")),
            }
        }
        let dim = dim.ok_or_else(|| bad("missing or invalid dim"))?;
        let number = |l: Option<&str>| -> Result<f64> {
            l.ok_or_else(|| bad("truncated model"))?
                .trim()
                .parse()
                .map_err(|_| bad("invalid number"))
        };
        let bias = number(lines.next())?;
        let weights = (0..dim)
            .map(|_| number(lines.next()))
            .collect::<Result<Vec<_>>>()?;
        if lines.any(|l| !l.trim().is_empty()) {
            return Err(bad("trailing data after weights"));
        }
        Ok(LinearModel {
            weights,
            bias,
            meta: TrainMeta {
                reg_c: reg_c.ok_or_else(|| bad("missing reg_c"))?,
                epochs_run: epochs.ok_or_else(|| bad("missing epochs"))?,
                objective: objective.ok_or_else(|| bad("missing objective"))?,
                constant: constant.ok_or_else(|| bad("missing constant"))?,
            },
        })
    }
}

fn objective(x: ArrayView2<'_, f64>, y: &[f64], w: &[f64], b: f64, lambda: f64) -> f64 {
    let hinge: f64 = x
        .rows()
        .into_iter()
        .zip(y)
        .map(|(row, &yi)| {
            let s: f64 = row.iter().zip(w).map(|(a, c)| a * c).sum::<f64>() + b;
            (1.0 - yi * s).max(0.0)
        })
        .sum();
    0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>() + hinge / y.len() as f64
}

/// Per-column mean and standard deviation (zero deviation maps to 1).
fn moments(x: ArrayView2<'_, f64>) -> (Vec<f64>, Vec<f64>) {
    let n = x.nrows() as f64;
    x.columns()
        .into_iter()
        .map(|c| {
            let mean = c.sum() / n;
            let var = c.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let sd = var.sqrt();
            (mean, if sd > 0.0 { sd } else { 1.0 })
        })
        .unzip()
}

/// Fits a linear SVM to rows `x` with 0/1 targets `y`.
pub fn train_linear(x: ArrayView2<'_, f64>, y: &[u8], cfg: &TrainConfig) -> Result<LinearModel> {
    cfg.validate()?;
    let (n, d) = x.dim();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: y.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let positives = y.iter().filter(|&&v| v == 1).count();
    if positives == 0 || positives == n {
        return Err(Error::SingleClass {
            label: String::new(),
        });
    }

    let scaled;
    let (x, shift) = if cfg.standardize {
        let (mean, sd) = moments(x);
        let mut z = x.to_owned();
        for (j, mut col) in z.columns_mut().into_iter().enumerate() {
            col.mapv_inplace(|v| (v - mean[j]) / sd[j]);
        }
        scaled = z;
        (scaled.view(), Some((mean, sd)))
    } else {
        (x, None)
    };

    let ys: Vec<f64> = y.iter().map(|&v| if v == 1 { 1.0 } else { -1.0 }).collect();
    let lambda = 1.0 / (cfg.reg_c * n as f64);
    let mut rng = rng::substream(cfg.seed, &[tag::TRAIN]);
    let mut order: Vec<usize> = (0..n).collect();

    // w = scale * v, so the per-step shrink is O(1)
    let mut v = vec![0.0; d];
    let mut scale = 1.0;
    let mut b = 0.0;
    let mut t = 0u64;
    let mut prev = objective(x, &ys, &v, b, lambda);
    let mut epochs_run = 0;
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let eta = cfg.eta0 / (1.0 + cfg.eta0 * lambda * t as f64);
            let row = x.row(i);
            let s = scale * row.iter().zip(&v).map(|(a, c)| a * c).sum::<f64>() + b;
            scale *= 1.0 - eta * lambda;
            if ys[i] * s < 1.0 {
                let step = eta * ys[i] / scale;
                for (vj, xj) in v.iter_mut().zip(row.iter()) {
                    *vj += step * xj;
                }
                b += eta * ys[i];
            }
            if scale < 1e-9 {
                v.iter_mut().for_each(|vj| *vj *= scale);
                scale = 1.0;
            }
            t += 1;
        }
        epochs_run += 1;
        let w: Vec<f64> = v.iter().map(|vj| vj * scale).collect();
        let obj = objective(x, &ys, &w, b, lambda);
        let done = (prev - obj).abs() <= cfg.tolerance * prev.abs().max(1.0);
        prev = obj;
        if done {
            break;
        }
    }

    let mut weights: Vec<f64> = v.iter().map(|vj| vj * scale).collect();
    if let Some((mean, sd)) = shift {
        for j in 0..d {
            weights[j] /= sd[j];
            b -= weights[j] * mean[j];
        }
    }
    Ok(LinearModel {
        weights,
        bias: b,
        meta: TrainMeta {
            reg_c: cfg.reg_c,
            epochs_run,
            objective: prev,
            constant: false,
        },
    })
}

/// `w . x + b` for every row of `x`.
pub fn score(model: &LinearModel, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    if x.ncols() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: x.ncols(),
        });
    }
    Ok(x.rows().into_iter().map(|r| model.score_row(r)).collect())
}

/// 1 where the score is strictly above `threshold`.
pub fn predict(model: &LinearModel, x: ArrayView2<'_, f64>, threshold: f64) -> Result<Vec<u8>> {
    Ok(score(model, x)?
        .into_iter()
        .map(|s| u8::from(s > threshold))
        .collect())
}

/// Seed used for label `l`'s model, so labels train independently.
pub fn label_train_config(cfg: &TrainConfig, l: usize) -> TrainConfig {
    TrainConfig {
        seed: rng::derive_seed(cfg.seed, &[l as u64]),
        ..cfg.clone()
    }
}

/// Trains one model per label, model `l` on `augments[l]`.
pub fn br_fit(augments: &[AugmentedDataset<'_>], cfg: &TrainConfig) -> Result<Vec<LinearModel>> {
    augments
        .par_iter()
        .enumerate()
        .map(|(l, aug)| {
            if aug.label_index != l {
                return Err(Error::InvalidConfig(format!(
                    "augmentation {l} belongs to label {}",
                    aug.label_index
                )));
            }
            let x = aug.features();
            train_linear(x.view(), &aug.targets(), &label_train_config(cfg, l)).map_err(|e| match e
            {
                Error::SingleClass { .. } => Error::SingleClass {
                    label: aug.base.label_names()[l].clone(),
                },
                other => other,
            })
        })
        .collect()
}
