//! Inference and the reported metrics: accuracy, margins, model-size reduction.

use serde::{Deserialize, Serialize};

use crate::dataset::BinaryDataset;
use crate::encoder::TrainedModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
    pub mean_margin: f64,
    pub reduction_pct: f64,
}

/// `score[c] = sum_f W[f][c] x[f] + b[c]`.
pub fn predict_scores(model: &TrainedModel, x: &[bool]) -> Result<Vec<i64>> {
    if x.len() != model.feature_count {
        return Err(Error::Dimension {
            expected: model.feature_count,
            got: x.len(),
        });
    }
    let mut scores = model.bias.clone();
    for (row, _) in model.weights.iter().zip(x).filter(|(_, &on)| on) {
        for (s, &w) in scores.iter_mut().zip(row) {
            *s += i64::from(w);
        }
    }
    Ok(scores)
}

/// Index of the largest score; ties go to the lowest class index.
pub fn argmax(scores: &[i64]) -> usize {
    let mut best = 0;
    for (c, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = c;
        }
    }
    best
}

pub fn predict_label(model: &TrainedModel, x: &[bool]) -> Result<usize> {
    Ok(argmax(&predict_scores(model, x)?))
}

/// `score[label] - max_{c != label} score[c]`.
pub fn margin_of_scores(scores: &[i64], label: usize) -> i64 {
    let best_other = scores
        .iter()
        .enumerate()
        .filter(|&(c, _)| c != label)
        .map(|(_, &s)| s)
        .max()
        .expect("at least two classes");
    scores[label] - best_other
}

pub fn margin(model: &TrainedModel, x: &[bool], label: usize) -> Result<i64> {
    if model.class_count < 2 {
        return Err(Error::Dataset("margin needs at least 2 classes".into()));
    }
    if label >= model.class_count {
        return Err(Error::Dimension {
            expected: model.class_count,
            got: label,
        });
    }
    Ok(margin_of_scores(&predict_scores(model, x)?, label))
}

/// Percentage of weight positions that are exactly zero.
pub fn model_size_reduction(model: &TrainedModel) -> f64 {
    let total = model.feature_count * model.class_count;
    if total == 0 {
        return 100.0;
    }
    let zeros = total - model.nonzero_weights();
    100.0 * zeros as f64 / total as f64
}

pub fn accuracy(model: &TrainedModel, ds: &BinaryDataset) -> Result<EvalReport> {
    if ds.is_empty() {
        return Err(Error::Dataset("cannot evaluate on an empty dataset".into()));
    }
    if ds.feature_count() != model.feature_count {
        return Err(Error::Dimension {
            expected: model.feature_count,
            got: ds.feature_count(),
        });
    }
    let mut correct = 0;
    let mut margin_sum = 0i64;
    for inst in ds.instances() {
        let scores = predict_scores(model, &inst.x)?;
        if inst.label >= scores.len() {
            return Err(Error::Dimension {
                expected: model.class_count,
                got: inst.label,
            });
        }
        if argmax(&scores) == inst.label {
            correct += 1;
        }
        margin_sum += margin_of_scores(&scores, inst.label);
    }
    let total = ds.len();
    Ok(EvalReport {
        accuracy: correct as f64 / total as f64,
        correct,
        total,
        mean_margin: margin_sum as f64 / total as f64,
        reduction_pct: model_size_reduction(model),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(weights: Vec<Vec<i8>>, bias: Vec<i64>) -> TrainedModel {
        TrainedModel {
            feature_count: weights.len(),
            class_count: bias.len(),
            weights,
            bias,
        }
    }

    #[test]
    fn scores_from_bias_and_weights() {
        let m = model(vec![vec![0, 0], vec![0, 0]], vec![3, -1]);
        assert_eq!(predict_scores(&m, &[true, true]).unwrap(), vec![3, -1]);
        let m = model(vec![vec![1, 0], vec![0, 1]], vec![3, -1]);
        assert_eq!(predict_scores(&m, &[false, false]).unwrap(), vec![3, -1]);
        let m = model(vec![vec![1], vec![-1]], vec![0]);
        assert_eq!(predict_scores(&m, &[true, true]).unwrap(), vec![0]);
        assert!(predict_scores(&m, &[true]).is_err());
    }

    #[test]
    fn argmax_tie_break() {
        assert_eq!(argmax(&[3, -1]), 0);
        assert_eq!(argmax(&[2, 2]), 0);
        assert_eq!(argmax(&[0, 5, 5]), 1);
    }

    #[test]
    fn margins() {
        assert_eq!(margin_of_scores(&[5, 1, 1], 0), 4);
        assert_eq!(margin_of_scores(&[5, 5], 0), 0);
        let one = model(vec![vec![1]], vec![0]);
        assert!(margin(&one, &[true], 0).is_err());
    }

    #[test]
    fn reduction() {
        assert_eq!(model_size_reduction(&TrainedModel::zeros(3, 2)), 100.0);
        let full = model(vec![vec![1, -1], vec![-1, 1]], vec![0, 0]);
        assert_eq!(model_size_reduction(&full), 0.0);
        let half = model(vec![vec![1, 0], vec![0, -1], vec![1, 0]], vec![0, 0]);
        assert_eq!(model_size_reduction(&half), 50.0);
    }

    #[test]
    fn accuracy_constant_predictor() {
        let m = model(vec![vec![0, 0]], vec![1, 0]);
        let all_zero = BinaryDataset::from_rows(&[(&[1], 0), (&[0], 0)], 2).unwrap();
        let r = accuracy(&m, &all_zero).unwrap();
        assert_eq!((r.accuracy, r.correct, r.total), (1.0, 2, 2));
        let none = BinaryDataset::from_rows(&[(&[1], 1), (&[0], 1)], 2).unwrap();
        assert_eq!(accuracy(&m, &none).unwrap().accuracy, 0.0);
        let empty = BinaryDataset::new(vec![], 1, 2).unwrap();
        assert!(accuracy(&m, &empty).is_err());
    }

    #[test]
    fn report_json_keys() {
        let r = EvalReport {
            accuracy: 0.5,
            correct: 1,
            total: 2,
            mean_margin: -0.5,
            reduction_pct: 100.0,
        };
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(
            keys,
            [
                "accuracy",
                "correct",
                "mean_margin",
                "reduction_pct",
                "total"
            ]
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_model() -> impl Strategy<Value = (TrainedModel, Vec<bool>)> {
            (1usize..5, 2usize..5).prop_flat_map(|(f, c)| {
                (
                    prop::collection::vec(prop::collection::vec(-1i8..=1, c), f),
                    prop::collection::vec(-5i64..=5, c),
                    prop::collection::vec(any::<bool>(), f),
                )
                    .prop_map(move |(w, b, x)| (model(w, b), x))
            })
        }

        proptest! {
            #[test]
            fn bias_shift_keeps_prediction((m, x) in arb_model(), shift in -10i64..10) {
                let mut shifted = m.clone();
                shifted.bias.iter_mut().for_each(|b| *b += shift);
                prop_assert_eq!(predict_label(&m, &x).unwrap(), predict_label(&shifted, &x).unwrap());
            }

            #[test]
            fn predicted_label_has_nonnegative_margin((m, x) in arb_model()) {
                let l = predict_label(&m, &x).unwrap();
                prop_assert!(margin(&m, &x, l).unwrap() >= 0);
            }

            #[test]
            fn accuracy_one_iff_margins_win((m, x) in arb_model(), label in 0usize..2) {
                let ds = BinaryDataset::new(
                    vec![crate::dataset::Instance { x: x.clone(), label }],
                    m.feature_count,
                    m.class_count,
                ).unwrap();
                let scores = predict_scores(&m, &x).unwrap();
                let mg = margin_of_scores(&scores, label);
                let wins = mg > 0 || (mg == 0 && argmax(&scores) == label);
                prop_assert_eq!(accuracy(&m, &ds).unwrap().accuracy == 1.0, wins);
            }
        }
    }
}
