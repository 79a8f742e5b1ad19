mod common;

use floodkit::fusion::{self, FusionWeights, PsoParams};
use floodkit::learn::{self, BaseLearner, EnsembleParams, LabeledDataset, SvmParams, TrainedModel, TreeParams};
use floodkit::textbow::{self, Weighting};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn metrics_agree_with_counting(pairs in prop::collection::vec((0u8..2, 0u8..2), 1..50)) {
        let (preds, labels): (Vec<u8>, Vec<u8>) = pairs.into_iter().unzip();
        let m = learn::confusion_and_f1(&preds, &labels).unwrap();
        let (tp, fp, fn_, tn, f1) = common::f1_oracle(&preds, &labels);
        prop_assert_eq!((m.tp, m.fp, m.fn_, m.tn), (tp, fp, fn_, tn));
        prop_assert_eq!(m.f1, f1);
    }

    #[test]
    fn fused_scores_stay_in_unit_interval(
        raw in prop::collection::vec(0.01f64..1.0, 2..5),
        scores in prop::collection::vec(0.0f64..1.0, 5),
    ) {
        let w = FusionWeights::normalize(&raw).unwrap();
        prop_assert!((w.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let s = fusion::late_fuse_weighted(&scores[..w.len()], &w).unwrap();
        prop_assert!((0.0..=1.0).contains(&s));
    }
}

#[test]
fn svm_and_forest_separate_blobs() {
    let (rows, labels) = common::blobs(9, 400, 0.5);
    let d = LabeledDataset::new(vec!["x".into(), "y".into()], rows, labels).unwrap();
    let train = d.subset(&(0..300).collect::<Vec<_>>());
    let models = [
        learn::train_svm(&train, &SvmParams::default()).unwrap(),
        learn::train_forest(&train, &TreeParams::default()).unwrap(),
    ];
    for m in &models {
        let correct = (300..400).filter(|&i| learn::predict_label(m, &d.vector(i)).unwrap() == d.labels[i]).count();
        assert!(correct >= 95, "{:?}: {correct}/100", m.kind());
    }
}

#[test]
fn model_json_round_trips() {
    let (rows, labels) = common::blobs(2, 100, 0.5);
    let d = LabeledDataset::new(vec!["x".into(), "y".into()], rows, labels).unwrap();
    let ensemble =
        learn::train_resampled_ensemble(&d, &BaseLearner::Tree(TreeParams::default()), &EnsembleParams::default())
            .unwrap();
    for m in [learn::train_svm(&d, &SvmParams::default()).unwrap(), ensemble] {
        let back = TrainedModel::from_json(&m.to_json()).unwrap();
        assert_eq!(back.to_json(), m.to_json());
        for i in 0..d.len() {
            let v = d.vector(i);
            assert_eq!(learn::predict_score(&m, &v).unwrap(), learn::predict_score(&back, &v).unwrap());
        }
    }
}

#[test]
fn resampled_members_balance_classes() {
    let d = common::corner_imbalance(1, 400, 20);
    let sets = learn::resample_member_sets(&d, &EnsembleParams::default(), 4).unwrap();
    assert!(!sets.is_empty());
    for set in sets {
        assert_eq!(set.iter().filter(|&&i| d.labels[i] == 1).count(), 20);
        assert_eq!(set.len(), 40);
    }
}

#[test]
fn single_class_training_is_rejected() {
    let d = LabeledDataset::new(vec!["x".into()], vec![vec![0.0], vec![1.0]], vec![0, 0]).unwrap();
    assert!(learn::train_svm(&d, &SvmParams::default()).is_err());
}

#[test]
fn bow_svm_separates_topics() {
    let corpus = common::two_topic_corpus(40, 120);
    let tokens: Vec<Vec<String>> = corpus.iter().map(|(t, _)| textbow::tokenize(t)).collect();
    let labels: Vec<u8> = corpus.iter().map(|(_, l)| *l).collect();
    let vocab = textbow::build_vocab(&tokens[..80], 1000, 1).unwrap();
    let vecs: Vec<_> = tokens.iter().map(|t| textbow::vectorize(t, &vocab, Weighting::Tfidf)).collect();
    let model = learn::train_svm(
        &LabeledDataset::from_vectors(&vecs[..80], labels[..80].to_vec()).unwrap(),
        &SvmParams::default(),
    )
    .unwrap();
    let preds: Vec<u8> = vecs[80..].iter().map(|v| learn::predict_label(&model, v).unwrap()).collect();
    assert!(common::f1_oracle(&preds, &labels[80..]).4 >= 0.9);
}

#[test]
fn fusion_finds_the_informative_stream() {
    let (streams, labels) = common::dominance_streams(8, 200, 3);
    let found = fusion::optimize_fusion_weights(&streams, &labels, &PsoParams::default()).unwrap();
    assert!(found.weights.as_slice()[0] >= 0.9);
}
