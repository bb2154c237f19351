use ndarray::Array2;

use uclso::classifier::TrainConfig;
use uclso::data::{generate_toy, make_fold_plan, MultiLabelDataset, ToyConfig, DEMO_SEED};
use uclso::eval::{run_cv, train_fold, MethodConfig};
use uclso::oversample::{OversampleConfig, OversampleMode};

fn method(name: &str, mode: OversampleMode, seed: u64) -> MethodConfig {
    MethodConfig::new(
        name,
        OversampleConfig {
            mode,
            seed,
            ..Default::default()
        },
        TrainConfig {
            seed,
            ..Default::default()
        },
    )
}

fn methods(seed: u64) -> Vec<MethodConfig> {
    vec![
        method("br", OversampleMode::None, seed),
        method("smote", OversampleMode::Smote, seed),
        method("uclso", OversampleMode::Uclso, seed),
    ]
}

#[test]
fn test_rows_never_reach_training() {
    let ds = generate_toy(&ToyConfig::two_label_demo(3)).unwrap();
    let plan = make_fold_plan(ds.n_rows(), 1, 2, 5).unwrap();

    for (rep, fold) in plan.cells().collect::<Vec<_>>() {
        // overwrite every test row with garbage
        let test = plan.test_rows(rep, fold);
        let mut x: Array2<f64> = ds.features().to_owned();
        let mut y = ds.labels().to_owned();
        for &i in test {
            x.row_mut(i).fill(1e6);
            y.row_mut(i).fill(1);
        }
        let corrupted =
            MultiLabelDataset::new(x, y, ds.feature_names().to_vec(), ds.label_names().to_vec())
                .unwrap();
        for m in methods(9) {
            let clean = train_fold(&ds, &plan, rep, fold, &m).unwrap();
            let dirty = train_fold(&corrupted, &plan, rep, fold, &m).unwrap();
            assert_eq!(
                clean, dirty,
                "{} leaked test rows at ({rep}, {fold})",
                m.name
            );
        }
    }
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let ds = generate_toy(&ToyConfig::two_label_demo(DEMO_SEED)).unwrap();
    let plan = make_fold_plan(ds.n_rows(), 2, 2, 1).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_cv(&ds, &methods(4), &plan).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn balanced_label_gets_no_synthetic_rows() {
    // label 0 balanced, label 1 imbalanced
    let n = 40;
    let x = Array2::from_shape_fn((n, 2), |(i, j)| (i * 7 + j * 3) as f64 % 11.0);
    let y = Array2::from_shape_fn((n, 2), |(i, l)| {
        u8::from(if l == 0 { i % 2 == 0 } else { i % 5 == 0 })
    });
    let ds = MultiLabelDataset::new(
        x,
        y,
        vec!["a".into(), "b".into()],
        vec!["even".into(), "fifth".into()],
    )
    .unwrap();
    let plan = make_fold_plan(n, 1, 2, 0).unwrap();
    let m = method("uclso", OversampleMode::Uclso, 0);
    let fitted = train_fold(&ds, &plan, 0, 0, &m).unwrap();
    assert!(fitted.synthetic[1] > 0);
    let train = ds.select_rows(&plan.train_rows(0, 0)).unwrap();
    let pos = train.positive_counts()[0];
    if 2 * pos == train.n_rows() {
        assert_eq!(fitted.synthetic[0], 0);
    }
}
