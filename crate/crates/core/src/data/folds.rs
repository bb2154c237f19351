use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::{self, tag};

/// Repeated k-fold partitions of `0..n`.
///
/// Each repetition is an independent shuffle split into folds whose sizes
/// differ by at most one; each fold's indices are stored in ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub n: usize,
    pub repetitions: usize,
    pub folds_per_rep: usize,
    pub seed: u64,
    /// `assignments[rep][fold]` lists the held-out rows of that cell.
    pub assignments: Vec<Vec<Vec<usize>>>,
}

pub fn make_fold_plan(n: usize, reps: usize, folds: usize, seed: u64) -> Result<FoldPlan> {
    if folds < 2 {
        return Err(Error::InvalidConfig(format!(
            "need at least 2 folds, got {folds}"
        )));
    }
    if reps == 0 {
        return Err(Error::InvalidConfig("need at least one repetition".into()));
    }
    if n < folds {
        return Err(Error::InvalidConfig(format!(
            "{n} rows cannot fill {folds} folds"
        )));
    }
    let assignments = (0..reps)
        .map(|rep| {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng::substream(seed, &[tag::FOLDS, rep as u64]));
            let (base, extra) = (n / folds, n % folds);
            let mut start = 0;
            (0..folds)
                .map(|f| {
                    let len = base + usize::from(f < extra);
                    let mut fold = order[start..start + len].to_vec();
                    fold.sort_unstable();
                    start += len;
                    fold
                })
                .collect()
        })
        .collect();
    Ok(FoldPlan {
        n,
        repetitions: reps,
        folds_per_rep: folds,
        seed,
        assignments,
    })
}

impl FoldPlan {
    pub fn test_rows(&self, rep: usize, fold: usize) -> &[usize] {
        &self.assignments[rep][fold]
    }

    /// Every row not held out in `(rep, fold)`, ascending.
    pub fn train_rows(&self, rep: usize, fold: usize) -> Vec<usize> {
        let mut held = vec![false; self.n];
        for &i in self.test_rows(rep, fold) {
            held[i] = true;
        }
        (0..self.n).filter(|&i| !held[i]).collect()
    }

    /// All `(rep, fold)` cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.repetitions).flat_map(move |r| (0..self.folds_per_rep).map(move |f| (r, f)))
    }
}
