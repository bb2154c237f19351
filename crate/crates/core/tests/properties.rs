use ndarray::Array2;
use proptest::prelude::*;

use uclso::classifier::{predict, LinearModel};
use uclso::data::{
    compute_stats, filter_labels, generate_toy, load_mulan, make_fold_plan, write_mulan, Blob,
    LabelRule, MultiLabelDataset, ToyConfig,
};
use uclso::eval::{auc_label, average_ranks};
use uclso::oversample::{augment_all, OversampleConfig, OversampleMode};

fn dataset(n: usize, d: usize, q: usize) -> impl Strategy<Value = MultiLabelDataset> {
    (
        proptest::collection::vec(-1e6f64..1e6, n * d),
        proptest::collection::vec(0u8..2, n * q),
    )
        .prop_map(move |(x, y)| {
            MultiLabelDataset::new(
                Array2::from_shape_vec((n, d), x).unwrap(),
                Array2::from_shape_vec((n, q), y).unwrap(),
                (0..d).map(|j| format!("x{j}")).collect(),
                (0..q).map(|l| format!("y{l}")).collect(),
            )
            .unwrap()
        })
}

fn any_dataset() -> impl Strategy<Value = MultiLabelDataset> {
    (1usize..30, 1usize..5, 1usize..5).prop_flat_map(|(n, d, q)| dataset(n, d, q))
}

/// Toy configs whose labels stay minority-positive.
fn toy_config() -> impl Strategy<Value = ToyConfig> {
    (
        2usize..6,
        30usize..80,
        proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0, 0.3f64..2.0), 6),
        proptest::collection::vec(proptest::collection::vec(0.02f64..0.4, 6), 1..4),
        any::<u64>(),
    )
        .prop_map(|(blobs, per, centers, fracs, seed)| ToyConfig {
            points_per_blob: per,
            blobs: centers[..blobs]
                .iter()
                .map(|&(x, y, s)| Blob {
                    center: [x, y],
                    spread: s,
                })
                .collect(),
            labels: fracs
                .iter()
                .enumerate()
                .map(|(l, f)| LabelRule {
                    name: format!("label{l}"),
                    minority: f[..blobs].iter().copied().enumerate().collect(),
                })
                .collect(),
            seed,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn arff_round_trip_is_exact(ds in any_dataset()) {
        let dir = tempfile::tempdir().unwrap();
        let (arff, xml) = write_mulan(&ds, dir.path(), "rt").unwrap();
        let back = load_mulan(&arff, &xml).unwrap();
        prop_assert_eq!(back.features(), ds.features());
        prop_assert_eq!(back.labels(), ds.labels());
        prop_assert_eq!(back.label_names(), ds.label_names());
    }

    #[test]
    fn density_times_labels_is_cardinality(ds in any_dataset()) {
        let s = compute_stats(&ds);
        prop_assert!((s.density * s.labels as f64 - s.cardinality).abs() < 1e-12);
    }

    #[test]
    fn filtering_is_idempotent(ds in any_dataset(), max_ir in 1.0f64..10.0, min_pos in 0usize..5) {
        if let Ok((once, _)) = filter_labels(&ds, max_ir, min_pos) {
            let (twice, report) = filter_labels(&once, max_ir, min_pos).unwrap();
            prop_assert_eq!(&twice, &once);
            prop_assert!(report.dropped.is_empty());
        }
    }

    #[test]
    fn folds_partition_rows(n in 2usize..200, reps in 1usize..4, folds in 2usize..6, seed in any::<u64>()) {
        prop_assume!(n >= folds);
        let plan = make_fold_plan(n, reps, folds, seed).unwrap();
        for r in 0..reps {
            let mut all: Vec<usize> = (0..folds).flat_map(|f| plan.test_rows(r, f).to_vec()).collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        }
    }

    #[test]
    fn auc_ignores_monotone_maps(
        scores in proptest::collection::vec(-50.0f64..50.0, 2..20),
        truth_bits in any::<u32>(),
        a in 0.1f64..5.0,
        b in -3.0f64..3.0,
    ) {
        let truth: Vec<u8> = (0..scores.len()).map(|i| ((truth_bits >> i) & 1) as u8).collect();
        let mapped: Vec<f64> = scores.iter().map(|s| (a * s + b).tanh() + s.powi(3) * 1e-3).collect();
        match (auc_label(&scores, &truth), auc_label(&mapped, &truth)) {
            (Ok(x), Ok(y)) => prop_assert!((x - y).abs() < 1e-12),
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "definedness changed"),
        }
    }

    #[test]
    fn rank_rows_sum_to_triangle(scores in proptest::collection::vec(proptest::collection::vec(0u8..4, 5), 1..8)) {
        let m = 5.0;
        let rows: Vec<Vec<f64>> = scores.iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect();
        let names = |p: &str, k: usize| (0..k).map(|i| format!("{p}{i}")).collect::<Vec<_>>();
        let rt = average_ranks(names("d", rows.len()), names("m", 5), rows, true).unwrap();
        for r in &rt.ranks {
            prop_assert_eq!(r.iter().sum::<f64>(), m * (m + 1.0) / 2.0);
        }
    }

    #[test]
    fn raising_threshold_never_adds_positives(
        w in proptest::collection::vec(-3.0f64..3.0, 2),
        xs in proptest::collection::vec(-10.0f64..10.0, 2..60),
        t1 in -5.0f64..5.0,
        dt in 0.0f64..5.0,
    ) {
        let n = xs.len() / 2;
        prop_assume!(n > 0);
        let x = Array2::from_shape_vec((n, 2), xs[..2 * n].to_vec()).unwrap();
        let mut model = LinearModel::constant(2, false);
        model.weights = w;
        model.bias = 0.3;
        let lo: usize = predict(&model, x.view(), t1).unwrap().iter().map(|&v| v as usize).sum();
        let hi: usize = predict(&model, x.view(), t1 + dt).unwrap().iter().map(|&v| v as usize).sum();
        prop_assert!(hi <= lo);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Balance bound, locality, collinearity and proportionality of the
    /// cluster-restricted sampler on random toy layouts.
    #[test]
    fn cluster_oversampling_invariants(cfg in toy_config(), seed in any::<u64>()) {
        let ds = generate_toy(&cfg).unwrap();
        let os = OversampleConfig { seed, ..Default::default() };
        let (clusters, augments) = augment_all(&ds, &os).unwrap();
        let clusters = clusters.unwrap();
        let x = ds.features();
        for aug in augments {
            let aug = match aug {
                Ok(a) => a,
                Err(uclso::Error::NoMinority { .. }) => continue,
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            };
            let total = aug.augmented_minority();
            prop_assert!(total >= aug.n_majority.max(aug.n_minority));
            prop_assert!(total <= aug.n_majority.max(aug.n_minority) + clusters.k);
            for (p, row) in aug.extra.provenance.iter().zip(aug.extra.points.rows()) {
                let c = p.cluster.unwrap();
                prop_assert_eq!(clusters.assignment[p.parent_u], c);
                prop_assert_eq!(clusters.assignment[p.parent_v], c);
                let (u, v) = (x.row(p.parent_u), x.row(p.parent_v));
                for j in 0..row.len() {
                    prop_assert!((row[j] - (u[j] + (v[j] - u[j]) * p.r)).abs() < 1e-9);
                }
            }
            // synthetic share of each cluster follows its minority share
            let n_min = aug.n_minority as f64;
            let made = aug.extra.len() as f64;
            for q in &aug.quotas {
                let want = q.minority as f64 / n_min * made;
                prop_assert!((q.synthetic as f64 - want).abs() <= 1.0 + clusters.k as f64);
            }
        }
    }

    #[test]
    fn smote_count_is_exact(cfg in toy_config(), seed in any::<u64>()) {
        let ds = generate_toy(&cfg).unwrap();
        let os = OversampleConfig { seed, mode: OversampleMode::Smote, ..Default::default() };
        let (_, augments) = augment_all(&ds, &os).unwrap();
        for aug in augments.into_iter().flatten() {
            prop_assert_eq!(aug.augmented_minority(), aug.n_majority.max(aug.n_minority));
        }
    }
}
