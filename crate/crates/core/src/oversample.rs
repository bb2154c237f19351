//! Label-specific synthetic minority oversampling.
//!
//! Two generators share one interpolation step:
//!
//! * **UCLSO** clusters the input space once (k-means over features only)
//!   and, for each label, fills every cluster with synthetic minority points
//!   in proportion to the minority points it already holds. Both parents of
//!   a synthetic point are minority points of the same cluster, so new
//!   points stay inside regions that already contain minority data.
//! * **SMOTE** draws parents from the global minority set and creates
//!   exactly `n_maj - n_min` points.
//!
//! For a label `l` with minority set `min` and majority set `maj`, cluster
//! `p` holding `n_lp` minority points receives
//! `ceil(n_lp * (|maj| - |min|) / |min|)` synthetic points. Each one is
//! `u + (v - u) * r` where `u` is a uniformly drawn minority point of the
//! cluster, `v` is drawn uniformly from the `m` nearest minority points of
//! `u` within the cluster, and `r` is uniform on the open interval (0, 1).
//! A cluster with a single minority point has no neighbour to interpolate
//! towards; its quota is filled with copies of that point.
//!
//! Every label draws from its own random stream keyed by `(seed, label)`,
//! so labels can be processed in any order or in parallel.

use std::collections::HashMap;
use std::fmt::Write as _;

use ndarray::{concatenate, Array2, ArrayView2, Axis};
use rand::distr::{Distribution, Open01};
use rand::Rng;
use rayon::prelude::*;

use crate::clustering::{kmeans, sq_dist, ClusterAssignment, KMeansConfig};
use crate::data::MultiLabelDataset;
use crate::error::{Error, Result};
use crate::rng::{self, tag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OversampleMode {
    Uclso,
    Smote,
    None,
}

impl OversampleMode {
    pub fn as_str(self) -> &'static str {
        match self {
            OversampleMode::Uclso => "uclso",
            OversampleMode::Smote => "smote",
            OversampleMode::None => "none",
        }
    }
}

impl std::str::FromStr for OversampleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uclso" => Ok(OversampleMode::Uclso),
            "smote" => Ok(OversampleMode::Smote),
            "none" | "br" => Ok(OversampleMode::None),
            other => Err(Error::InvalidConfig(format!(
                "unknown oversampling mode `{other}`"
            ))),
        }
    }
}

/// Which class of a label is treated as the minority.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum MinorityRule {
    /// relevant (`y = 1`) points, whatever their count
    #[default]
    Positive,
    /// whichever class is rarer; ties go to the relevant class
    Rarer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OversampleConfig {
    pub k_clusters: usize,
    pub m_neighbors: usize,
    pub seed: u64,
    pub mode: OversampleMode,
    pub minority: MinorityRule,
}

impl Default for OversampleConfig {
    fn default() -> Self {
        OversampleConfig {
            k_clusters: 5,
            m_neighbors: 5,
            seed: 0,
            mode: OversampleMode::Uclso,
            minority: MinorityRule::Positive,
        }
    }
}

impl OversampleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_clusters == 0 {
            return Err(Error::InvalidConfig("k_clusters must be at least 1".into()));
        }
        if self.m_neighbors == 0 {
            return Err(Error::InvalidConfig(
                "m_neighbors must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn kmeans_config(&self) -> KMeansConfig {
        KMeansConfig::new(self.k_clusters, self.seed)
    }
}

/// Row indices of one label's minority and majority classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinorityPartition {
    pub minority: Vec<usize>,
    pub majority: Vec<usize>,
    /// label value carried by the minority class (and by synthetic points)
    pub minority_value: u8,
}

/// Minority rows (`y = 1`) and majority rows (`y = 0`) of label `l`.
pub fn minority_class(ds: &MultiLabelDataset, l: usize) -> Result<MinorityPartition> {
    minority_class_with(ds, l, MinorityRule::Positive)
}

pub fn minority_class_with(
    ds: &MultiLabelDataset,
    l: usize,
    rule: MinorityRule,
) -> Result<MinorityPartition> {
    ds.check_label(l)?;
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    for (i, &v) in ds.label_column(l).iter().enumerate() {
        if v == 1 {
            pos.push(i)
        } else {
            neg.push(i)
        }
    }
    let flip = rule == MinorityRule::Rarer && neg.len() < pos.len();
    let part = if flip {
        MinorityPartition {
            minority: neg,
            majority: pos,
            minority_value: 0,
        }
    } else {
        MinorityPartition {
            minority: pos,
            majority: neg,
            minority_value: 1,
        }
    };
    if part.minority.is_empty() {
        return Err(Error::NoMinority {
            label: ds.label_names()[l].clone(),
        });
    }
    Ok(part)
}

/// Synthetic points owed to a cluster holding `n_lp` of a label's `n_min`
/// minority points: `ceil(n_lp * (n_maj - n_min) / n_min)`, or 0 when the
/// label is not imbalanced towards the minority.
pub fn quota(n_lp: usize, n_min: usize, n_maj: usize) -> Result<usize> {
    if n_min == 0 {
        return Err(Error::EmptyMinority);
    }
    if n_lp > n_min {
        return Err(Error::InvalidConfig(format!(
            "cluster share {n_lp} exceeds minority count {n_min}"
        )));
    }
    if n_maj <= n_min {
        return Ok(0);
    }
    let num = n_lp as u128 * (n_maj - n_min) as u128;
    let den = n_min as u128;
    Ok(num.div_ceil(den) as usize)
}

/// `u + (v - u) * r`, componentwise.
pub fn interpolate(u: &[f64], v: &[f64], r: f64) -> Result<Vec<f64>> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "interpolant {r} outside (0, 1)"
        )));
    }
    Ok(u.iter().zip(v).map(|(a, b)| a + (b - a) * r).collect())
}

/// Where a synthetic point came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Provenance {
    /// `None` for the global SMOTE baseline
    pub cluster: Option<usize>,
    pub parent_u: usize,
    pub parent_v: usize,
    /// 0 marks a copy of a lone minority point
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSet {
    pub label_index: usize,
    pub label_value: u8,
    pub points: Array2<f64>,
    pub provenance: Vec<Provenance>,
}

impl SyntheticSet {
    fn empty(label_index: usize, label_value: u8, d: usize) -> Self {
        SyntheticSet {
            label_index,
            label_value,
            points: Array2::zeros((0, d)),
            provenance: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.provenance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.provenance.is_empty()
    }
}

/// Minority share and synthetic count of one cluster for one label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClusterQuota {
    /// `None` for the global SMOTE baseline
    pub cluster: Option<usize>,
    pub minority: usize,
    pub synthetic: usize,
}

/// One label's training set: the original rows plus that label's synthetic
/// minority points.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedDataset<'a> {
    pub base: &'a MultiLabelDataset,
    pub extra: SyntheticSet,
    pub label_index: usize,
    pub n_minority: usize,
    pub n_majority: usize,
    pub quotas: Vec<ClusterQuota>,
}

impl AugmentedDataset<'_> {
    /// Base feature rows followed by the synthetic rows.
    pub fn features(&self) -> Array2<f64> {
        if self.extra.is_empty() {
            return self.base.features().to_owned();
        }
        concatenate(Axis(0), &[self.base.features(), self.extra.points.view()])
            .expect("synthetic rows share the base width")
    }

    /// Column `label_index` of the base rows followed by the minority value
    /// for every synthetic row.
    pub fn targets(&self) -> Vec<u8> {
        let mut y: Vec<u8> = self.base.label_column(self.label_index).to_vec();
        y.extend(std::iter::repeat_n(
            self.extra.label_value,
            self.extra.len(),
        ));
        y
    }

    pub fn n_rows(&self) -> usize {
        self.base.n_rows() + self.extra.len()
    }

    /// Minority count after augmentation.
    pub fn augmented_minority(&self) -> usize {
        self.n_minority + self.extra.len()
    }

    /// Synthetic points as CSV: `label,cluster,r,parent_u,parent_v,feature_0,...`.
    /// `cluster` is blank for SMOTE points.
    pub fn synthetic_csv(&self) -> String {
        let d = self.base.n_features();
        let mut s = String::from("label,cluster,r,parent_u,parent_v");
        for j in 0..d {
            let _ = write!(s, ",feature_{j}");
        }
        s.push('\n');
        let name = &self.base.label_names()[self.label_index];
        for (p, row) in self.extra.provenance.iter().zip(self.extra.points.rows()) {
            let cluster = p.cluster.map(|c| c.to_string()).unwrap_or_default();
            let _ = write!(s, "{name},{cluster},{},{},{}", p.r, p.parent_u, p.parent_v);
            for v in row {
                let _ = write!(s, ",{v}");
            }
            s.push('\n');
        }
        s
    }
}

/// The unaugmented training set of label `l` (plain binary relevance).
pub fn no_augment(ds: &MultiLabelDataset, l: usize) -> Result<AugmentedDataset<'_>> {
    ds.check_label(l)?;
    let pos = ds.positive_counts()[l];
    Ok(AugmentedDataset {
        base: ds,
        extra: SyntheticSet::empty(l, 1, ds.n_features()),
        label_index: l,
        n_minority: pos,
        n_majority: ds.n_rows() - pos,
        quotas: Vec::new(),
    })
}

/// Draws synthetic points from a fixed pool of minority rows.
struct Sampler<'a> {
    x: ArrayView2<'a, f64>,
    pool: &'a [usize],
    m: usize,
    cluster: Option<usize>,
    neighbours: HashMap<usize, Vec<usize>>,
}

impl<'a> Sampler<'a> {
    fn new(x: ArrayView2<'a, f64>, pool: &'a [usize], m: usize, cluster: Option<usize>) -> Self {
        Sampler {
            x,
            pool,
            m,
            cluster,
            neighbours: HashMap::new(),
        }
    }

    /// The `m` nearest pool members of `u` (excluding `u`), ties to the
    /// lower row index.
    fn neighbours_of(&mut self, u: usize) -> &[usize] {
        let (x, pool, m) = (self.x, self.pool, self.m);
        self.neighbours.entry(u).or_insert_with(|| {
            let mut cand: Vec<(f64, usize)> = pool
                .iter()
                .filter(|&&i| i != u)
                .map(|&i| (sq_dist(x.row(u), x.row(i)), i))
                .collect();
            cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            cand.truncate(m);
            cand.into_iter().map(|(_, i)| i).collect()
        })
    }

    fn draw(
        &mut self,
        count: usize,
        rng: &mut impl Rng,
        rows: &mut Vec<f64>,
        prov: &mut Vec<Provenance>,
    ) {
        for _ in 0..count {
            let u = self.pool[rng.random_range(0..self.pool.len())];
            let neigh = self.neighbours_of(u);
            let (v, r) = if neigh.is_empty() {
                (u, 0.0)
            } else {
                let v = neigh[rng.random_range(0..neigh.len())];
                (v, Open01.sample(rng))
            };
            let xu = self.x.row(u);
            if r == 0.0 {
                rows.extend(xu.iter());
            } else {
                let xu = xu.to_vec();
                let xv = self.x.row(v).to_vec();
                rows.extend(interpolate(&xu, &xv, r).expect("rows share a width"));
            }
            prov.push(Provenance {
                cluster: self.cluster,
                parent_u: u,
                parent_v: v,
                r,
            });
        }
    }
}

fn finish<'a>(
    ds: &'a MultiLabelDataset,
    l: usize,
    part: &MinorityPartition,
    rows: Vec<f64>,
    provenance: Vec<Provenance>,
    quotas: Vec<ClusterQuota>,
) -> AugmentedDataset<'a> {
    let points = Array2::from_shape_vec((provenance.len(), ds.n_features()), rows)
        .expect("one row per provenance record");
    AugmentedDataset {
        base: ds,
        extra: SyntheticSet {
            label_index: l,
            label_value: part.minority_value,
            points,
            provenance,
        },
        label_index: l,
        n_minority: part.minority.len(),
        n_majority: part.majority.len(),
        quotas,
    }
}

/// Cluster-restricted oversampling of label `l`. `assign` must come from
/// clustering `ds.features()`.
pub fn uclso_augment<'a>(
    ds: &'a MultiLabelDataset,
    assign: &ClusterAssignment,
    l: usize,
    cfg: &OversampleConfig,
) -> Result<AugmentedDataset<'a>> {
    cfg.validate()?;
    if assign.assignment.len() != ds.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: ds.n_rows(),
            found: assign.assignment.len(),
        });
    }
    let part = minority_class_with(ds, l, cfg.minority)?;
    let (n_min, n_maj) = (part.minority.len(), part.majority.len());

    let mut by_cluster = vec![Vec::new(); assign.k];
    for &i in &part.minority {
        by_cluster[assign.assignment[i]].push(i);
    }

    let mut rng = rng::substream(cfg.seed, &[tag::SYNTH, l as u64]);
    let (mut rows, mut prov, mut quotas) = (Vec::new(), Vec::new(), Vec::new());
    for (p, pool) in by_cluster.iter().enumerate() {
        let syn = quota(pool.len(), n_min, n_maj)?;
        quotas.push(ClusterQuota {
            cluster: Some(p),
            minority: pool.len(),
            synthetic: syn,
        });
        if syn == 0 {
            continue;
        }
        Sampler::new(ds.features(), pool, cfg.m_neighbors, Some(p))
            .draw(syn, &mut rng, &mut rows, &mut prov);
    }
    Ok(finish(ds, l, &part, rows, prov, quotas))
}

/// Global SMOTE oversampling of label `l` up to `n_maj` minority points.
pub fn smote_augment<'a>(
    ds: &'a MultiLabelDataset,
    l: usize,
    cfg: &OversampleConfig,
) -> Result<AugmentedDataset<'a>> {
    cfg.validate()?;
    let part = minority_class_with(ds, l, cfg.minority)?;
    let syn = part.majority.len().saturating_sub(part.minority.len());
    let mut rng = rng::substream(cfg.seed, &[tag::SYNTH, l as u64]);
    let (mut rows, mut prov) = (Vec::new(), Vec::new());
    if syn > 0 {
        Sampler::new(ds.features(), &part.minority, cfg.m_neighbors, None)
            .draw(syn, &mut rng, &mut rows, &mut prov);
    }
    let quotas = vec![ClusterQuota {
        cluster: None,
        minority: part.minority.len(),
        synthetic: syn,
    }];
    Ok(finish(ds, l, &part, rows, prov, quotas))
}

/// Clusters `ds` when the mode needs it.
pub fn cluster_for(
    ds: &MultiLabelDataset,
    cfg: &OversampleConfig,
) -> Result<Option<ClusterAssignment>> {
    match cfg.mode {
        OversampleMode::Uclso => {
            let k = cfg.k_clusters.min(ds.n_rows());
            let mut kcfg = cfg.kmeans_config();
            kcfg.k = k;
            kmeans(ds.features(), &kcfg).map(Some)
        }
        _ => Ok(None),
    }
}

/// Augments one label according to `cfg.mode`.
pub fn augment<'a>(
    ds: &'a MultiLabelDataset,
    clusters: Option<&ClusterAssignment>,
    l: usize,
    cfg: &OversampleConfig,
) -> Result<AugmentedDataset<'a>> {
    match cfg.mode {
        OversampleMode::None => no_augment(ds, l),
        OversampleMode::Smote => smote_augment(ds, l, cfg),
        OversampleMode::Uclso => {
            let assign = clusters.ok_or_else(|| {
                Error::InvalidConfig("cluster-based oversampling needs a clustering".into())
            })?;
            uclso_augment(ds, assign, l, cfg)
        }
    }
}

/// Clusters once and augments every label (in parallel). A label with no
/// minority points yields an `Err` in its slot.
pub fn augment_all<'a>(
    ds: &'a MultiLabelDataset,
    cfg: &OversampleConfig,
) -> Result<(Option<ClusterAssignment>, Vec<Result<AugmentedDataset<'a>>>)> {
    cfg.validate()?;
    let clusters = cluster_for(ds, cfg)?;
    let augments = (0..ds.n_labels())
        .into_par_iter()
        .map(|l| augment(ds, clusters.as_ref(), l, cfg))
        .collect();
    Ok((clusters, augments))
}
