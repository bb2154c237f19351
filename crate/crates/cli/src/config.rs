//! Experiment configuration file (TOML).
//!
//! Every field has a default, so an empty file describes the two-label demo
//! dataset evaluated with 10 x 2 cross-validation. The config hash covers the
//! resolved configuration (after `--seed`) except the output directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use uclso::classifier::TrainConfig;
use uclso::data::{Blob, LabelRule, ToyConfig, DEFAULT_MAX_IR, DEFAULT_MIN_POS, DEMO_SEED};
use uclso::oversample::{MinorityRule, OversampleConfig, OversampleMode};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(skip_serializing)]
    pub out_dir: PathBuf,
    pub datasets: Vec<DatasetSpec>,
    pub filter: FilterSection,
    pub oversample: OversampleSection,
    pub train: TrainSection,
    pub cv: CvSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            out_dir: PathBuf::from("out"),
            datasets: vec![DatasetSpec {
                name: "toy".into(),
                arff: None,
                xml: None,
                toy: Some(ToySpec {
                    preset: Some("demo".into()),
                    ..ToySpec::default()
                }),
            }],
            filter: FilterSection::default(),
            oversample: OversampleSection::default(),
            train: TrainSection::default(),
            cv: CvSection::default(),
        }
    }
}

/// A Mulan dataset (`arff` + `xml`) or a generated one (`toy`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub name: String,
    pub arff: Option<PathBuf>,
    pub xml: Option<PathBuf>,
    pub toy: Option<ToySpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToySpec {
    /// `"demo"` selects the built-in two-label layout; blobs and labels
    /// must then be empty.
    pub preset: Option<String>,
    pub points_per_blob: usize,
    pub blobs: Vec<BlobSpec>,
    pub labels: Vec<LabelSpec>,
    /// Generator seed; defaults to the global seed for custom layouts and to
    /// the preset's own seed for `"demo"`.
    pub seed: Option<u64>,
}

impl Default for ToySpec {
    fn default() -> Self {
        ToySpec {
            preset: None,
            points_per_blob: 200,
            blobs: Vec::new(),
            labels: Vec::new(),
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlobSpec {
    pub center: [f64; 2],
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelSpec {
    pub name: String,
    /// `[blob index, minority fraction]` pairs
    pub minority: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterSection {
    pub enabled: bool,
    pub max_ir: f64,
    pub min_pos: usize,
}

impl Default for FilterSection {
    fn default() -> Self {
        FilterSection {
            enabled: true,
            max_ir: DEFAULT_MAX_IR,
            min_pos: DEFAULT_MIN_POS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OversampleSection {
    /// used by `cluster` and `oversample`; `experiment` takes `cv.methods`
    pub mode: String,
    pub k_clusters: usize,
    pub m_neighbors: usize,
    /// `"positive"` or `"rarer"`
    pub minority: String,
}

impl Default for OversampleSection {
    fn default() -> Self {
        let d = OversampleConfig::default();
        OversampleSection {
            mode: d.mode.as_str().into(),
            k_clusters: d.k_clusters,
            m_neighbors: d.m_neighbors,
            minority: "positive".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub reg_c: f64,
    pub epochs: usize,
    pub eta0: f64,
    pub tolerance: f64,
    pub standardize: bool,
    pub threshold: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        TrainSection {
            reg_c: d.reg_c,
            epochs: d.epochs,
            eta0: d.eta0,
            tolerance: d.tolerance,
            standardize: d.standardize,
            threshold: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvSection {
    pub repetitions: usize,
    pub folds: usize,
    pub methods: Vec<String>,
    pub min_max_scale: bool,
    pub alpha: f64,
}

impl Default for CvSection {
    fn default() -> Self {
        CvSection {
            repetitions: 10,
            folds: 2,
            methods: vec!["br".into(), "smote".into(), "uclso".into()],
            min_max_scale: false,
            alpha: 0.05,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl ExperimentConfig {
    /// Reads and validates `path`; relative dataset paths are resolved
    /// against the config file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        let mut cfg: ExperimentConfig =
            toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for d in &mut cfg.datasets {
            for p in [&mut d.arff, &mut d.xml].into_iter().flatten() {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.datasets.is_empty() {
            return Err(usage("config lists no datasets"));
        }
        let mut names: Vec<&str> = self.datasets.iter().map(|d| d.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(usage("dataset names must be unique"));
        }
        for d in &self.datasets {
            if d.name.is_empty() || d.name.contains(['/', '\\']) {
                return Err(usage(format!("invalid dataset name `{}`", d.name)));
            }
            match (&d.arff, &d.xml, &d.toy) {
                (Some(a), Some(x), None) => {
                    for p in [a, x] {
                        if !p.is_file() {
                            return Err(usage(format!(
                                "dataset `{}`: {} not found",
                                d.name,
                                p.display()
                            )));
                        }
                    }
                }
                (None, None, Some(_)) => {
                    self.toy_config(d)?
                        .validate()
                        .map_err(|e| usage(format!("dataset `{}`: {e}", d.name)))?;
                }
                (Some(_), None, None) => {
                    return Err(usage(format!("dataset `{}`: missing xml path", d.name)))
                }
                (None, Some(_), None) => {
                    return Err(usage(format!("dataset `{}`: missing arff path", d.name)))
                }
                _ => {
                    return Err(usage(format!(
                        "dataset `{}`: give either arff + xml or toy",
                        d.name
                    )))
                }
            }
        }
        #[allow(clippy::neg_cmp_op_on_partial_ord)] // also rejects NaN
        if !(self.filter.max_ir > 1.0) {
            return Err(usage("filter.max_ir must exceed 1"));
        }
        self.oversample_config(self.oversample_mode()?)?
            .validate()
            .map_err(|e| usage(e.to_string()))?;
        self.train_config()
            .validate()
            .map_err(|e| usage(e.to_string()))?;
        if !self.train.threshold.is_finite() {
            return Err(usage("train.threshold must be finite"));
        }
        if self.cv.repetitions == 0 || self.cv.folds < 2 {
            return Err(usage("cv needs repetitions >= 1 and folds >= 2"));
        }
        if !(self.cv.alpha > 0.0 && self.cv.alpha < 1.0) {
            return Err(usage("cv.alpha must lie in (0, 1)"));
        }
        if self.cv.methods.is_empty() {
            return Err(usage("cv.methods is empty"));
        }
        let mut seen = Vec::new();
        for m in &self.cv.methods {
            let mode = parse_mode(m)?;
            if seen.contains(&mode) {
                return Err(usage(format!("method `{m}` listed twice")));
            }
            seen.push(mode);
        }
        Ok(())
    }

    pub fn oversample_mode(&self) -> Result<OversampleMode, CliError> {
        parse_mode(&self.oversample.mode)
    }

    pub fn oversample_config(&self, mode: OversampleMode) -> Result<OversampleConfig, CliError> {
        let minority = match self.oversample.minority.as_str() {
            "positive" => MinorityRule::Positive,
            "rarer" => MinorityRule::Rarer,
            other => return Err(usage(format!("unknown minority rule `{other}`"))),
        };
        Ok(OversampleConfig {
            k_clusters: self.oversample.k_clusters,
            m_neighbors: self.oversample.m_neighbors,
            seed: self.seed,
            mode,
            minority,
        })
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            reg_c: self.train.reg_c,
            epochs: self.train.epochs,
            eta0: self.train.eta0,
            seed: self.seed,
            tolerance: self.train.tolerance,
            standardize: self.train.standardize,
        }
    }

    pub fn toy_config(&self, d: &DatasetSpec) -> Result<ToyConfig, CliError> {
        let t = d
            .toy
            .as_ref()
            .ok_or_else(|| usage(format!("dataset `{}` is not a toy", d.name)))?;
        match t.preset.as_deref() {
            Some("demo") => {
                if !t.blobs.is_empty() || !t.labels.is_empty() {
                    return Err(usage(format!(
                        "dataset `{}`: preset excludes blobs and labels",
                        d.name
                    )));
                }
                Ok(ToyConfig::two_label_demo(t.seed.unwrap_or(DEMO_SEED)))
            }
            Some(other) => Err(usage(format!("unknown toy preset `{other}`"))),
            None => Ok(ToyConfig {
                points_per_blob: t.points_per_blob,
                blobs: t
                    .blobs
                    .iter()
                    .map(|b| Blob {
                        center: b.center,
                        spread: b.spread,
                    })
                    .collect(),
                labels: t
                    .labels
                    .iter()
                    .map(|l| LabelRule {
                        name: l.name.clone(),
                        minority: l.minority.clone(),
                    })
                    .collect(),
                seed: t.seed.unwrap_or(self.seed),
            }),
        }
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serialises");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

pub fn parse_mode(s: &str) -> Result<OversampleMode, CliError> {
    s.parse().map_err(|_| {
        usage(format!(
            "unknown method `{s}` (expected br, smote or uclso)"
        ))
    })
}
