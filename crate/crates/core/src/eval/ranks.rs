//! Multi-dataset method comparison: within-dataset ranks, the Friedman test
//! and a Finner-adjusted post-hoc comparison against the best-ranked method.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Scores of `methods` (columns) on `datasets` (rows) with their ranks.
/// Rank 1 is best; tied scores share the mean of the ranks they span.
#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    pub datasets: Vec<String>,
    pub methods: Vec<String>,
    pub scores: Vec<Vec<f64>>,
    pub ranks: Vec<Vec<f64>>,
    pub average_ranks: Vec<f64>,
}

/// Midranks of one row; rank 1 goes to the best score.
fn rank_row(row: &[f64], higher_is_better: bool) -> Vec<f64> {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| {
        let c = row[a].total_cmp(&row[b]);
        if higher_is_better {
            c.reverse()
        } else {
            c
        }
    });
    let mut ranks = vec![0.0; row.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && row[order[j + 1]] == row[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = mid;
        }
        i = j + 1;
    }
    ranks
}

pub fn average_ranks(
    datasets: Vec<String>,
    methods: Vec<String>,
    scores: Vec<Vec<f64>>,
    higher_is_better: bool,
) -> Result<RankTable> {
    if scores.len() != datasets.len() {
        return Err(Error::DimensionMismatch {
            expected: datasets.len(),
            found: scores.len(),
        });
    }
    if methods.is_empty() || datasets.is_empty() {
        return Err(Error::InvalidConfig(
            "rank table needs methods and datasets".into(),
        ));
    }
    for row in &scores {
        if row.len() != methods.len() {
            return Err(Error::DimensionMismatch {
                expected: methods.len(),
                found: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
    }
    let ranks: Vec<Vec<f64>> = scores
        .iter()
        .map(|r| rank_row(r, higher_is_better))
        .collect();
    let n = ranks.len() as f64;
    let average_ranks = (0..methods.len())
        .map(|j| ranks.iter().map(|r| r[j]).sum::<f64>() / n)
        .collect();
    Ok(RankTable {
        datasets,
        methods,
        scores,
        ranks,
        average_ranks,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub method: usize,
    pub z: f64,
    pub p_raw: f64,
    pub p_adjusted: f64,
    pub significant: bool,
}

/// One point of a critical-difference plot. Group 0 holds the control and
/// every method not significantly different from it; group 1 the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct CdEntry {
    pub method: String,
    pub avg_rank: f64,
    pub group: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FriedmanResult {
    pub chi_square: f64,
    pub dof: usize,
    pub p_value: f64,
    pub alpha: f64,
    /// index of the best-ranked method
    pub control: usize,
    /// every other method against the control, in column order
    pub comparisons: Vec<Comparison>,
    pub cd: Vec<CdEntry>,
}

/// Finner step-down adjustment: with `m` p-values sorted ascending,
/// `p'_(i) = max_{j <= i} 1 - (1 - p_(j))^(m / j)`. Output is in input order.
pub fn finner_adjust(p: &[f64]) -> Vec<f64> {
    let m = p.len() as f64;
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    let mut out = vec![0.0; p.len()];
    let mut running: f64 = 0.0;
    for (i, &k) in order.iter().enumerate() {
        let step = 1.0 - (1.0 - p[k]).powf(m / (i + 1) as f64);
        running = running.max(step.min(1.0));
        out[k] = running;
    }
    out
}

/// Friedman test over `rt` with tie correction, plus post-hoc z-tests of
/// every method against the control at level `alpha`.
pub fn friedman(rt: &RankTable, alpha: f64) -> Result<FriedmanResult> {
    let m = rt.methods.len();
    let n = rt.ranks.len();
    if m < 2 || n < 2 {
        return Err(Error::InvalidConfig(
            "Friedman test needs >= 2 methods and >= 2 datasets".into(),
        ));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "alpha {alpha} outside (0, 1)"
        )));
    }
    let (mf, nf) = (m as f64, n as f64);
    let offset = nf * mf * (mf + 1.0) * (mf + 1.0) / 4.0;
    let rank_sum_sq: f64 = (0..m)
        .map(|j| {
            let s: f64 = rt.ranks.iter().map(|r| r[j]).sum();
            s * s
        })
        .sum();
    let total_sq: f64 = rt.ranks.iter().flatten().map(|r| r * r).sum();
    let num = rank_sum_sq - nf * offset;
    let den = total_sq - offset;
    let (chi_square, p_value) = if den <= 0.0 {
        (0.0, 1.0)
    } else {
        let q = ((mf - 1.0) * num / den).max(0.0);
        let dist = ChiSquared::new(mf - 1.0).expect("positive dof");
        (q, dist.sf(q))
    };

    let control = rt
        .average_ranks
        .iter()
        .enumerate()
        .fold(
            0,
            |best, (j, &r)| if r < rt.average_ranks[best] { j } else { best },
        );
    let se = (mf * (mf + 1.0) / (6.0 * nf)).sqrt();
    let normal = Normal::standard();
    let others: Vec<usize> = (0..m).filter(|&j| j != control).collect();
    let zs: Vec<f64> = others
        .iter()
        .map(|&j| (rt.average_ranks[j] - rt.average_ranks[control]) / se)
        .collect();
    let raw: Vec<f64> = zs
        .iter()
        .map(|z| (2.0 * normal.sf(z.abs())).min(1.0))
        .collect();
    let adjusted = finner_adjust(&raw);
    let comparisons: Vec<Comparison> = others
        .iter()
        .enumerate()
        .map(|(i, &j)| Comparison {
            method: j,
            z: zs[i],
            p_raw: raw[i],
            p_adjusted: adjusted[i],
            significant: adjusted[i] < alpha,
        })
        .collect();
    let cd = (0..m)
        .map(|j| CdEntry {
            method: rt.methods[j].clone(),
            avg_rank: rt.average_ranks[j],
            group: usize::from(comparisons.iter().any(|c| c.method == j && c.significant)),
        })
        .collect();

    Ok(FriedmanResult {
        chi_square,
        dof: m - 1,
        p_value,
        alpha,
        control,
        comparisons,
        cd,
    })
}
