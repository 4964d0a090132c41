use std::collections::HashSet;
use std::sync::OnceLock;

use cellshape::evalharness::{
    accuracy, compare_families, confusion_accuracy, confusion_matrix, make_splits, random_search, write_outputs,
    Comparison, EvalConfig, FeatureSet, SearchSpace, TrainedModel, N_FOLDS,
};
use cellshape::gbt::HyperParams;
use cellshape::preprocess::{normalize, RegisteredContour};
use cellshape::synthgen::{base_shape, generate, GenConfig, ShapeParams};
use cellshape::{Contour, Error, FeatureMatrix, ShapeClass};
use proptest::prelude::*;

fn small_space() -> SearchSpace {
    SearchSpace {
        n_rounds: vec![15, 25],
        learning_rate: vec![0.3],
        max_depth: vec![2, 3],
        min_child_weight: vec![1.0],
        reg_lambda: vec![1.0],
        gamma: vec![0.0],
        subsample: vec![1.0],
        colsample: vec![1.0],
    }
}

fn raw_set() -> &'static Vec<Contour> {
    static SET: OnceLock<Vec<Contour>> = OnceLock::new();
    SET.get_or_init(|| {
        generate(&GenConfig {
            n_per_class: 100,
            seed: 3,
            ..GenConfig::default()
        })
        .unwrap()
    })
}

fn dataset() -> &'static Vec<RegisteredContour> {
    static SET: OnceLock<Vec<RegisteredContour>> = OnceLock::new();
    SET.get_or_init(|| raw_set().iter().map(|c| normalize(c).unwrap()).collect())
}

fn smoke_cfg() -> EvalConfig {
    EvalConfig {
        seed: 9,
        n_trials: 2,
        space: small_space(),
        top_k: 5,
        ..EvalConfig::default()
    }
}

fn smoke_run() -> &'static Comparison {
    static RUN: OnceLock<Comparison> = OnceLock::new();
    RUN.get_or_init(|| {
        let sets = [FeatureSet::Pca95, FeatureSet::Descriptor("scalar".parse().unwrap())];
        compare_families(dataset(), &sets, &smoke_cfg()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn splits_partition_and_stratify(counts in prop::array::uniform5(5usize..60), seed in any::<u64>()) {
        let labels: Vec<usize> = counts.iter().enumerate().flat_map(|(c, &n)| std::iter::repeat_n(c, n)).collect();
        let plan = make_splits(&labels, seed).unwrap();
        prop_assert_eq!(&plan, &make_splits(&labels, seed).unwrap());
        prop_assert_eq!(plan.folds.len(), N_FOLDS);
        let mut tested = vec![0usize; labels.len()];
        for f in &plan.folds {
            let all: HashSet<usize> = f.train.iter().chain(&f.validation).chain(&f.test).copied().collect();
            prop_assert_eq!(all.len(), labels.len());
            prop_assert_eq!(f.train.len() + f.validation.len() + f.test.len(), labels.len());
            for &i in &f.test {
                tested[i] += 1;
            }
            for (c, &count) in counts.iter().enumerate() {
                let per = |idx: &[usize]| idx.iter().filter(|&&i| labels[i] == c).count();
                // chunk sizes differ by at most one, so each class is split near-evenly
                let (tr, va, te) = (per(&f.train), per(&f.validation), per(&f.test));
                prop_assert!(va.abs_diff(count / 5) <= 1 && te.abs_diff(count / 5) <= 1);
                prop_assert_eq!(tr + va + te, count);
            }
        }
        prop_assert!(tested.iter().all(|&t| t == 1));
    }
}

#[test]
fn too_few_samples_or_bad_labels_are_rejected() {
    assert!(matches!(make_splits(&[0, 1, 2, 3, 4], 1), Err(Error::TooFewSamples(_))));
    let labels: Vec<usize> = (0..40).map(|i| i % 4).collect();
    assert!(matches!(make_splits(&labels, 1), Err(Error::TooFewSamples(_))));
}

fn toy_matrices() -> (FeatureMatrix, FeatureMatrix) {
    let build = |offset: usize| {
        let mut m = FeatureMatrix::new(vec!["u".into(), "v".into()]);
        for i in 0..100 {
            let c = i % 5;
            let j = (i * 7 + offset) % 13;
            let row = [c as f64 + 0.15 * j as f64 - 0.9, (j as f64).sin()];
            m.push_row(i as i64, ShapeClass::from_index(c), &row).unwrap();
        }
        m
    };
    (build(0), build(5))
}

#[test]
fn search_over_a_single_point_returns_it() {
    let (train, val) = toy_matrices();
    let hp = HyperParams {
        n_rounds: 10,
        max_depth: 2,
        ..HyperParams::default()
    };
    let r = random_search(&train, &val, &SearchSpace::single(&hp), 3, 1, 0).unwrap();
    assert_eq!(HyperParams { seed: 0, ..r.best }, hp);
}

#[test]
fn search_picks_the_best_logged_trial() {
    let (train, val) = toy_matrices();
    let mut space = small_space();
    space.n_rounds = vec![1, 5, 20];
    space.max_depth = vec![1, 2, 3];
    space.learning_rate = vec![0.05, 0.3];
    for seed in [1, 2] {
        let r = random_search(&train, &val, &space, 20, seed, 7).unwrap();
        assert_eq!(r.trials.len(), 20);
        let max = r.trials.iter().filter_map(|t| t.val_accuracy).fold(f64::MIN, f64::max);
        assert_eq!(r.best_val_accuracy, max);
        let first = r.trials.iter().position(|t| t.val_accuracy == Some(max)).unwrap();
        assert_eq!(r.best_index, first);
        assert_eq!(r.trials[first].params, r.best);
        assert!(r.trials.iter().enumerate().all(|(i, t)| t.index == i));
        assert_eq!(r, random_search(&train, &val, &space, 20, seed, 7).unwrap());
    }
    assert!(matches!(
        random_search(&train, &val, &space, 0, 1, 7),
        Err(Error::InvalidConfig(_))
    ));
}

#[test]
fn smoke_run_reports_are_consistent() {
    let cmp = smoke_run();
    assert_eq!(cmp.ranking.len(), 2);
    assert!(cmp.ranking[0].mean_acc >= cmp.ranking[1].mean_acc);
    for o in &cmp.outcomes {
        let r = &o.report;
        assert_eq!(r.fold_accuracy.len(), N_FOLDS);
        assert!(r.fold_accuracy.iter().all(|a| (0.0..=1.0).contains(a)));
        let total: u64 = r.confusion.iter().flatten().sum();
        assert_eq!(total as usize, dataset().len() - r.excluded_ids.len());
        for (c, row) in r.confusion.iter().enumerate() {
            assert_eq!(row.iter().sum::<u64>(), 100, "class {c}");
        }
        for f in &o.folds {
            assert!((confusion_accuracy(&f.confusion) - f.test_accuracy).abs() < 1e-12);
        }
        assert_eq!(r.split_hashes, cmp.outcomes[0].report.split_hashes);
        assert!(r.top_importance.len() <= 5);
        assert!(r.top_importance.windows(2).all(|w| w[0].gain >= w[1].gain));
    }
}

#[test]
fn smoke_run_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    write_outputs(dir.path(), smoke_run(), &smoke_cfg()).unwrap();
    for f in [
        "report.json",
        "confusion.csv",
        "importance.csv",
        "accuracy_by_family.csv",
        "accuracy_by_family.svg",
        "trials.csv",
    ] {
        let p = dir.path().join(f);
        assert!(p.metadata().map(|m| m.len() > 0).unwrap_or(false), "{f} missing");
    }
    for fam in ["pca95", "scalar"] {
        for k in 0..N_FOLDS {
            let p = dir.path().join("models").join(format!("{fam}_fold{k}.json"));
            TrainedModel::load(&p).unwrap();
        }
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 9);
    let svg = std::fs::read_to_string(dir.path().join("accuracy_by_family.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("pca95"));
}

#[test]
fn classification_through_the_model_bundle() {
    let cmp = smoke_run();
    let fold = &cmp.outcomes[0].folds[0];
    assert_eq!(fold.model.feature_set(), FeatureSet::Pca95);
    let model = TrainedModel::from_json(&fold.model.to_json()).unwrap();

    let split = &cmp.plan.folds[0];
    let score = |idx: &[usize]| {
        let cs: Vec<Contour> = idx.iter().map(|&i| raw_set()[i].clone()).collect();
        let preds = model.classify(&cs);
        let pred: Vec<usize> = preds.iter().map(|p| p.class.unwrap()).collect();
        let truth: Vec<usize> = cs.iter().map(|c| c.class_label.unwrap().index()).collect();
        accuracy(&pred, &truth)
    };
    let train_acc = score(&split.train);
    let test_acc = score(&split.test);
    assert!(train_acc >= test_acc, "{train_acc} < {test_acc}");
    assert!((test_acc - fold.test_accuracy).abs() < 1e-12);

    let circle = base_shape(&ShapeParams::Circle, 300).unwrap();
    let line = Contour::new(77, vec![[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]], None).unwrap();
    let preds = model.classify(&[circle, line]);
    assert_eq!(preds[0].class, Some(0));
    assert!(preds[0].probabilities.as_ref().unwrap()[0] > 0.9, "{:?}", preds[0]);
    assert_eq!(preds[1].id, 77);
    assert_eq!(preds[1].class, None);
    assert!(preds[1].error.is_some());

    assert!(model.expect_feature_set(FeatureSet::Pca95).is_ok());
    assert!(matches!(
        model.expect_feature_set(FeatureSet::Pca99),
        Err(Error::ModelFamilyMismatch { .. })
    ));
    let bad = fold.model.to_json().replace("cellshape-model/1", "cellshape-model/0");
    assert!(matches!(TrainedModel::from_json(&bad), Err(Error::Schema(_))));
}

#[test]
fn confusion_trace_matches_accuracy() {
    let truth = [0, 1, 2, 3, 4, 4, 3, 2];
    let pred = [0, 1, 2, 4, 4, 3, 3, 2];
    let m = confusion_matrix(&truth, &pred);
    assert_eq!(m[3][4], 1);
    assert_eq!(m[4][3], 1);
    assert!((confusion_accuracy(&m) - accuracy(&pred, &truth)).abs() < 1e-15);
}

#[test]
fn feature_set_names_parse() {
    for s in FeatureSet::all() {
        assert_eq!(s.name().parse::<FeatureSet>().unwrap(), s);
    }
    assert!("nope".parse::<FeatureSet>().is_err());
}
