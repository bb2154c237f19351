//! k-means partitioning of the input space.
//!
//! Lloyd iterations from k-means++ seeding. Distances are squared
//! Euclidean; ties go to the lowest cluster id. A cluster left empty by an
//! assignment step is refilled with the point farthest from its own
//! centroid, so the result always has exactly `k` non-empty clusters.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{self, tag};

/// Rows per rayon task in the assignment step.
const PAR_CHUNK: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        KMeansConfig {
            k,
            seed,
            max_iter: 300,
            tol: 1e-6,
        }
    }
}

/// Result of [`kmeans`].
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    pub k: usize,
    /// Cluster id of each input row.
    pub assignment: Vec<usize>,
    pub centroids: Array2<f64>,
    /// Sum of squared distances from each row to its assigned centroid.
    pub inertia: f64,
    pub iterations_run: usize,
    /// Inertia after seeding and after every Lloyd iteration.
    pub inertia_history: Vec<f64>,
}

pub fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(x: ArrayView1<'_, f64>, centroids: &Array2<f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, row) in centroids.rows().into_iter().enumerate() {
        let d = sq_dist(x, row);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Nearest-centroid id and squared distance for every row. Each row is
/// computed independently, so the parallel result equals the sequential one.
fn assign(x: ArrayView2<'_, f64>, centroids: &Array2<f64>) -> Vec<(usize, f64)> {
    let n = x.nrows();
    let mut out = vec![(0, 0.0); n];
    out.par_chunks_mut(PAR_CHUNK)
        .enumerate()
        .for_each(|(chunk, slots)| {
            for (off, slot) in slots.iter_mut().enumerate() {
                *slot = nearest(x.row(chunk * PAR_CHUNK + off), centroids);
            }
        });
    out
}

/// Moves the farthest point into each empty cluster until none is empty.
/// Each move drops that point's cost to zero, so inertia never rises.
fn repair_empty(
    x: ArrayView2<'_, f64>,
    centroids: &mut Array2<f64>,
    pairs: &mut Vec<(usize, f64)>,
) {
    let k = centroids.nrows();
    loop {
        let mut sizes = vec![0usize; k];
        for &(c, _) in pairs.iter() {
            sizes[c] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let far = pairs
            .iter()
            .enumerate()
            .filter(|(_, (c, _))| sizes[*c] > 1)
            .fold(None::<(usize, f64)>, |best, (i, &(_, d))| match best {
                Some((_, bd)) if bd >= d => best,
                _ => Some((i, d)),
            })
            .map(|(i, _)| i)
            .expect("some cluster holds two points when another is empty");
        centroids.row_mut(empty).assign(&x.row(far));
        *pairs = assign(x, centroids);
    }
}

fn recompute_means(x: ArrayView2<'_, f64>, pairs: &[(usize, f64)], k: usize) -> Array2<f64> {
    let mut sums = Array2::<f64>::zeros((k, x.ncols()));
    let mut counts = vec![0usize; k];
    for (row, &(c, _)) in x.rows().into_iter().zip(pairs) {
        let mut s = sums.row_mut(c);
        s += &row;
        counts[c] += 1;
    }
    for (mut s, &n) in sums.rows_mut().into_iter().zip(&counts) {
        debug_assert!(n > 0);
        s /= n as f64;
    }
    sums
}

fn distinct_rows_at_least(x: ArrayView2<'_, f64>, k: usize) -> bool {
    let mut seen: Vec<Vec<u64>> = Vec::new();
    for row in x.rows() {
        let key: Vec<u64> = row.iter().map(|v| (v + 0.0).to_bits()).collect();
        if !seen.contains(&key) {
            seen.push(key);
            if seen.len() >= k {
                return true;
            }
        }
    }
    false
}

fn plus_plus(x: ArrayView2<'_, f64>, k: usize, rng: &mut impl Rng) -> Array2<f64> {
    let n = x.nrows();
    let mut centroids = Array2::zeros((k, x.ncols()));
    centroids.row_mut(0).assign(&x.row(rng.random_range(0..n)));
    let mut d2: Vec<f64> = x
        .rows()
        .into_iter()
        .map(|r| sq_dist(r, centroids.row(0)))
        .collect();
    for c in 1..k {
        let pick = match WeightedIndex::new(&d2) {
            Ok(w) => w.sample(rng),
            // every point sits on a centroid already
            Err(_) => rng.random_range(0..n),
        };
        centroids.row_mut(c).assign(&x.row(pick));
        for (i, r) in x.rows().into_iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(r, centroids.row(c)));
        }
    }
    centroids
}

/// Clusters the rows of `x` into `cfg.k` groups.
///
/// Stops when no assignment changes, when every centroid moves less than
/// `cfg.tol` (Euclidean), or after `cfg.max_iter` iterations. The returned
/// assignment always maps each row to its nearest returned centroid.
pub fn kmeans(x: ArrayView2<'_, f64>, cfg: &KMeansConfig) -> Result<ClusterAssignment> {
    let (n, k) = (x.nrows(), cfg.k);
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    if k > n {
        return Err(Error::TooFewPoints { k, available: n });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    if !distinct_rows_at_least(x, k) {
        return Err(Error::InvalidConfig(format!(
            "fewer than k = {k} distinct points"
        )));
    }

    let mut rng = rng::substream(cfg.seed, &[tag::KMEANS]);
    let mut centroids = plus_plus(x, k, &mut rng);
    let mut pairs = assign(x, &centroids);
    repair_empty(x, &mut centroids, &mut pairs);
    let inertia_of = |p: &[(usize, f64)]| p.iter().map(|&(_, d)| d).sum::<f64>();
    let mut history = vec![inertia_of(&pairs)];

    let mut iterations = 0;
    while iterations < cfg.max_iter {
        iterations += 1;
        let mut next = recompute_means(x, &pairs, k);
        let mut next_pairs = assign(x, &next);
        repair_empty(x, &mut next, &mut next_pairs);
        let shift = next
            .rows()
            .into_iter()
            .zip(centroids.rows())
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0, f64::max);
        let changed = next_pairs.iter().zip(&pairs).any(|(a, b)| a.0 != b.0);
        let inertia = inertia_of(&next_pairs);
        debug_assert!(
            inertia <= history[history.len() - 1] * (1.0 + 1e-12),
            "Lloyd step raised inertia"
        );
        history.push(inertia);
        centroids = next;
        pairs = next_pairs;
        if !changed || shift < cfg.tol {
            break;
        }
    }

    Ok(ClusterAssignment {
        k,
        assignment: pairs.iter().map(|&(c, _)| c).collect(),
        centroids,
        inertia: inertia_of(&pairs),
        iterations_run: iterations,
        inertia_history: history,
    })
}

impl ClusterAssignment {
    /// Rows assigned to cluster `p`, ascending.
    pub fn members(&self, p: usize) -> Result<Vec<usize>> {
        if p >= self.k {
            return Err(Error::ClusterOutOfRange {
                cluster: p,
                k: self.k,
            });
        }
        Ok(self
            .assignment
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == p)
            .map(|(i, _)| i)
            .collect())
    }

    /// `row,cluster` lines for plotting.
    pub fn assignment_csv(&self) -> String {
        let mut s = String::from("row,cluster\n");
        for (i, c) in self.assignment.iter().enumerate() {
            let _ = writeln!(s, "{i},{c}");
        }
        s
    }

    /// `cluster,c_0,...,c_{d-1}` lines.
    pub fn centroids_csv(&self) -> String {
        let mut s = String::from("cluster");
        for j in 0..self.centroids.ncols() {
            let _ = write!(s, ",c_{j}");
        }
        s.push('\n');
        for (p, row) in self.centroids.rows().into_iter().enumerate() {
            let _ = write!(s, "{p}");
            for v in row {
                let _ = write!(s, ",{v}");
            }
            s.push('\n');
        }
        s
    }

    pub fn write_csv(&self, assignment: &Path, centroids: &Path) -> Result<()> {
        std::fs::write(assignment, self.assignment_csv()).map_err(|e| Error::io(assignment, e))?;
        std::fs::write(centroids, self.centroids_csv()).map_err(|e| Error::io(centroids, e))
    }
}

/// Rows assigned to cluster `p`, ascending.
pub fn cluster_members(assign: &ClusterAssignment, p: usize) -> Result<Vec<usize>> {
    assign.members(p)
}
