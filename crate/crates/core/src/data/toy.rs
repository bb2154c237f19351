//! Two-dimensional Gaussian-blob datasets with per-label, per-blob minority
//! rates, for checking oversampling geometry by eye and in tests.

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::MultiLabelDataset;
use crate::error::{Error, Result};
use crate::rng::{self, tag};

#[derive(Debug, Clone, PartialEq)]
pub struct Blob {
    pub center: [f64; 2],
    pub spread: f64,
}

/// Which blobs carry relevant points for one label, and at what rate.
/// Blobs not listed carry none.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelRule {
    pub name: String,
    /// `(blob index, probability a point of that blob is relevant)`
    pub minority: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyConfig {
    pub points_per_blob: usize,
    pub blobs: Vec<Blob>,
    pub labels: Vec<LabelRule>,
    pub seed: u64,
}

impl ToyConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.blobs.len() < 2 {
            return bad("a toy dataset needs at least 2 blobs".into());
        }
        if self.points_per_blob == 0 {
            return bad("points_per_blob must be positive".into());
        }
        for (i, b) in self.blobs.iter().enumerate() {
            if !(b.spread > 0.0 && b.spread.is_finite()) {
                return bad(format!("blob {i} has non-positive spread {}", b.spread));
            }
            if !b.center.iter().all(|c| c.is_finite()) {
                return bad(format!("blob {i} has a non-finite center"));
            }
        }
        if self.labels.is_empty() {
            return bad("a toy dataset needs at least one label".into());
        }
        for rule in &self.labels {
            for &(blob, frac) in &rule.minority {
                if blob >= self.blobs.len() {
                    return bad(format!("label `{}` names missing blob {blob}", rule.name));
                }
                if !(frac > 0.0 && frac < 1.0) {
                    return bad(format!(
                        "label `{}` minority fraction {frac} is outside (0, 1)",
                        rule.name
                    ));
                }
            }
        }
        Ok(())
    }

    /// Five blobs of 200 points in a cross. Each label has a dense group in
    /// one arm and a handful of relevant points in the opposite arm, so
    /// neighbours taken over the whole minority class span the middle blob.
    /// At [`DEMO_SEED`] the imbalance ratios are about 25 and 15.
    pub fn two_label_demo(seed: u64) -> Self {
        let blob = |x: f64, y: f64, spread: f64| Blob {
            center: [x, y],
            spread,
        };
        ToyConfig {
            points_per_blob: 200,
            blobs: vec![
                blob(0.0, 0.0, 0.85),
                blob(16.0, 0.0, 0.85),
                // all-majority blob sitting between the two label-1 groups
                blob(8.0, 0.0, 1.2),
                blob(8.0, 8.0, 0.85),
                blob(8.0, -8.0, 0.85),
            ],
            labels: vec![
                LabelRule {
                    name: "label1".into(),
                    minority: vec![(0, 0.175), (1, 0.02)],
                },
                LabelRule {
                    name: "label2".into(),
                    minority: vec![(3, 0.298), (4, 0.027)],
                },
            ],
            seed,
        }
    }
}

/// Seed at which the demo layout has imbalance ratios of about 25 and 15.
pub const DEMO_SEED: u64 = 18;

/// Samples the configured blobs; point `i` of blob `b` is row
/// `b * points_per_blob + i`.
pub fn generate_toy(cfg: &ToyConfig) -> Result<MultiLabelDataset> {
    cfg.validate()?;
    let per = cfg.points_per_blob;
    let n = per * cfg.blobs.len();
    let mut points = rng::substream(cfg.seed, &[tag::TOY, 0]);
    let mut x = Array2::zeros((n, 2));
    for (b, blob) in cfg.blobs.iter().enumerate() {
        for i in 0..per {
            for j in 0..2 {
                let z: f64 = StandardNormal.sample(&mut points);
                x[[b * per + i, j]] = blob.center[j] + blob.spread * z;
            }
        }
    }

    let mut y = Array2::zeros((n, cfg.labels.len()));
    for (l, rule) in cfg.labels.iter().enumerate() {
        let mut draws = rng::substream(cfg.seed, &[tag::TOY, 1 + l as u64]);
        for &(b, frac) in &rule.minority {
            for i in 0..per {
                if draws.random_bool(frac) {
                    y[[b * per + i, l]] = 1;
                }
            }
        }
    }

    MultiLabelDataset::new(
        x,
        y,
        vec!["x".into(), "y".into()],
        cfg.labels.iter().map(|r| r.name.clone()).collect(),
    )
}
