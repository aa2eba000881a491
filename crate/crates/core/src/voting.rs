//! Score calibration and the scoring-voting combiner.
//!
//! A classifier's raw top score is not an accuracy: 0.9 from the forest and
//! 0.9 from naive Bayes mean different things. Each classifier therefore
//! gets a calibration curve fitted on held-out validation tasks, mapping
//! its score to the empirical accuracy observed at that score level. The
//! combiner then compares calibrated accuracies across classifiers: each
//! one nominates its top model, and the nominee whose backer is most
//! credible wins. Ranking generalizes this to the top-k list by scoring
//! every candidate with the best calibrated accuracy any classifier
//! assigns it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::meta::{predict, predict_scores, ClassifierKind, ScoreVector, TrainedClassifier};
use crate::models::{ModelId, MODEL_COUNT};

pub const DEFAULT_CALIBRATION_BINS: usize = 10;

/// Monotone map from a classifier's top score to an accuracy estimate.
///
/// Fitted by bucketing validation predictions into equal-count score bins,
/// taking each bin's empirical accuracy, restoring monotonicity with
/// pool-adjacent-violators, and interpolating linearly between bin centers.
/// Outside the observed score range the curve is constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCurve {
    pub kind: ClassifierKind,
    /// Score-axis bin boundaries, ascending, length bins + 1.
    pub edges: Vec<f64>,
    /// Mean top score per bin: the interpolation knots.
    pub centers: Vec<f64>,
    /// Pre-isotonic per-bin accuracy, kept for inspection.
    pub raw_accuracy: Vec<f64>,
    /// Isotonic per-bin accuracy: the curve values at the knots.
    pub accuracy: Vec<f64>,
    /// Overall accuracy on the calibration set, the vote tie-breaker.
    pub val_accuracy: f64,
}

impl CalibrationCurve {
    /// Calibrated accuracy estimate for one score.
    pub fn eta(&self, score: f64) -> f64 {
        let c = &self.centers;
        let a = &self.accuracy;
        if score <= c[0] {
            return a[0];
        }
        if score >= c[c.len() - 1] {
            return a[a.len() - 1];
        }
        let hi = c.partition_point(|&x| x < score);
        let (x0, x1) = (c[hi - 1], c[hi]);
        if x1 - x0 <= 0.0 {
            return a[hi];
        }
        a[hi - 1] + (a[hi] - a[hi - 1]) * (score - x0) / (x1 - x0)
    }
}

/// Weighted pool-adjacent-violators: smallest change to `y` (in weighted
/// least squares) that makes it non-decreasing.
fn isotonic(y: &[f64], w: &[f64]) -> Vec<f64> {
    // Each block is (weight sum, weighted value sum, member count).
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(y.len());
    for (&v, &wt) in y.iter().zip(w) {
        blocks.push((wt, v * wt, 1));
        while blocks.len() >= 2 {
            let last = blocks[blocks.len() - 1];
            let prev = blocks[blocks.len() - 2];
            if prev.1 / prev.0 <= last.1 / last.0 {
                break;
            }
            blocks.pop();
            let top = blocks.last_mut().unwrap();
            top.0 += last.0;
            top.1 += last.1;
            top.2 += last.2;
        }
    }
    let mut out = Vec::with_capacity(y.len());
    for (wt, sum, count) in blocks {
        out.extend(std::iter::repeat(sum / wt).take(count));
    }
    out
}

/// Fits a curve from raw (top score, prediction was correct) outcomes.
pub fn fit_from_outcomes(
    kind: ClassifierKind,
    outcomes: &[(f64, bool)],
    n_bins: usize,
) -> Result<CalibrationCurve> {
    assert!(n_bins >= 1, "need at least one calibration bin");
    if outcomes.len() < 5 * n_bins {
        return Err(Error::TooFewSamples {
            got: outcomes.len(),
            need: 5 * n_bins,
            what: "validation outcomes for calibration",
        });
    }
    let mut sorted: Vec<(f64, bool)> = outcomes.to_vec();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    // Equal-count bins; the remainder pads the first bins by one sample.
    let n = sorted.len();
    let base = n / n_bins;
    let rem = n % n_bins;
    let mut edges = vec![sorted[0].0];
    let mut centers = Vec::with_capacity(n_bins);
    let mut raw_accuracy = Vec::with_capacity(n_bins);
    let mut weights = Vec::with_capacity(n_bins);
    let mut start = 0;
    for b in 0..n_bins {
        let len = base + usize::from(b < rem);
        let bin = &sorted[start..start + len];
        start += len;
        let boundary = if start < n {
            let lo = bin[bin.len() - 1].0;
            lo + (sorted[start].0 - lo) / 2.0
        } else {
            bin[bin.len() - 1].0
        };
        edges.push(boundary);
        centers.push(bin.iter().map(|o| o.0).sum::<f64>() / len as f64);
        raw_accuracy.push(bin.iter().filter(|o| o.1).count() as f64 / len as f64);
        weights.push(len as f64);
    }
    let accuracy = isotonic(&raw_accuracy, &weights);
    let val_accuracy = outcomes.iter().filter(|o| o.1).count() as f64 / n as f64;
    Ok(CalibrationCurve {
        kind,
        edges,
        centers,
        raw_accuracy,
        accuracy,
        val_accuracy,
    })
}

/// Fits the calibration curve for one trained classifier on validation
/// tasks it has never seen. Needs at least `5 * n_bins` tasks.
pub fn fit_calibration(
    clf: &TrainedClassifier,
    f_val: &[FeatureVector],
    phi_val: &[ModelId],
    n_bins: usize,
) -> Result<CalibrationCurve> {
    assert_eq!(f_val.len(), phi_val.len(), "one label per validation row");
    let outcomes: Vec<(f64, bool)> = f_val
        .iter()
        .zip(phi_val)
        .map(|(f, &label)| {
            let top = predict_scores(clf, f).top();
            (top, predict(clf, f) == label)
        })
        .collect();
    fit_from_outcomes(clf.kind, &outcomes, n_bins)
}

/// One ranked model with its aggregated accuracy estimate and the
/// classifier that backed it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationEntry {
    pub model: ModelId,
    pub accuracy: f64,
    pub learner: ClassifierKind,
}

/// Ranked model list; entry 0 is the voted winner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub entries: Vec<RecommendationEntry>,
}

/// The voted winner: each classifier nominates its top-scoring model at
/// its calibrated accuracy, the most credible nomination wins, and ties
/// fall to the classifier with higher validation accuracy, then the lower
/// model id.
pub fn vote(scores: &[ScoreVector], curves: &[CalibrationCurve]) -> ModelId {
    select(scores, curves, None)
}

fn nominee(scores: &ScoreVector, mask: Option<&[bool; MODEL_COUNT]>) -> Option<usize> {
    let mut best: Option<usize> = None;
    for m in 0..MODEL_COUNT {
        if mask.is_some_and(|f| !f[m]) {
            continue;
        }
        if best.is_none_or(|b| scores.s[m] > scores.s[b]) {
            best = Some(m);
        }
    }
    best
}

fn select(
    scores: &[ScoreVector],
    curves: &[CalibrationCurve],
    mask: Option<&[bool; MODEL_COUNT]>,
) -> ModelId {
    assert_eq!(scores.len(), curves.len(), "one curve per classifier");
    assert!(!scores.is_empty(), "vote needs at least one classifier");
    // (eta, val_accuracy, model slot) per nomination; max wins, ties fall
    // to validation accuracy and then the lower slot.
    let mut winner: Option<(f64, f64, usize)> = None;
    for (sv, curve) in scores.iter().zip(curves) {
        let Some(m) = nominee(sv, mask) else { continue };
        let cand = (curve.eta(sv.s[m]), curve.val_accuracy, m);
        let beats = winner.is_none_or(|w| {
            cand.0 > w.0 || (cand.0 == w.0 && (cand.1 > w.1 || (cand.1 == w.1 && cand.2 < w.2)))
        });
        if beats {
            winner = Some(cand);
        }
    }
    ModelId::ALL[winner.expect("mask left no candidate").2]
}

/// Top-k recommendation. Every candidate model is scored with the best
/// calibrated accuracy any classifier assigns it; masked-out models are
/// skipped entirely. The voted winner is pinned to rank 1: with a flat
/// calibration region several models can tie on aggregated accuracy, and
/// the vote's nomination rule is the agreed tie-break.
pub fn rank(
    scores: &[ScoreVector],
    curves: &[CalibrationCurve],
    k: usize,
    mask: Option<&[bool; MODEL_COUNT]>,
) -> Recommendation {
    assert!((1..=MODEL_COUNT).contains(&k), "k must be in 1..=10");
    let voted = select(scores, curves, mask) as usize;
    let mut rows: Vec<(usize, f64, f64, ClassifierKind)> = Vec::with_capacity(MODEL_COUNT);
    for m in 0..MODEL_COUNT {
        if mask.is_some_and(|f| !f[m]) {
            continue;
        }
        let mut best: Option<(f64, f64, ClassifierKind)> = None;
        for (sv, curve) in scores.iter().zip(curves) {
            let eta = curve.eta(sv.s[m]);
            let better = best.is_none_or(|b| eta > b.0 || (eta == b.0 && curve.val_accuracy > b.1));
            if better {
                best = Some((eta, curve.val_accuracy, curve.kind));
            }
        }
        let (eta, acc, kind) = best.expect("at least one classifier");
        rows.push((m, eta, acc, kind));
    }
    rows.sort_by(|a, b| {
        let pin = (b.0 == voted).cmp(&(a.0 == voted));
        pin.then(b.1.partial_cmp(&a.1).unwrap())
            .then(b.2.partial_cmp(&a.2).unwrap())
            .then(a.0.cmp(&b.0))
    });
    Recommendation {
        entries: rows
            .into_iter()
            .take(k)
            .map(|(m, eta, _, kind)| RecommendationEntry {
                model: ModelId::ALL[m],
                accuracy: eta,
                learner: kind,
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    use crate::meta::{train, MetaHyper, FEATURE_DIM};
    use crate::seed::rng;

    fn fv(a: f64, b: f64) -> FeatureVector {
        let mut arr = [0.5; FEATURE_DIM];
        arr[0] = a;
        arr[1] = b;
        FeatureVector::from_array(&arr)
    }

    /// Curve with a constant calibrated accuracy, for hand fixtures.
    fn flat_curve(kind: ClassifierKind, level: f64, val_accuracy: f64) -> CalibrationCurve {
        CalibrationCurve {
            kind,
            edges: vec![0.0, 1.0],
            centers: vec![0.5],
            raw_accuracy: vec![level],
            accuracy: vec![level],
            val_accuracy,
        }
    }

    /// Two-knot linear curve h(s) = s over the whole score range.
    fn identity_curve(kind: ClassifierKind, val_accuracy: f64) -> CalibrationCurve {
        CalibrationCurve {
            kind,
            edges: vec![0.0, 0.5, 1.0],
            centers: vec![0.0, 1.0],
            raw_accuracy: vec![0.0, 1.0],
            accuracy: vec![0.0, 1.0],
            val_accuracy,
        }
    }

    fn score_for(m: ModelId, top: f64) -> ScoreVector {
        let mut s = [0.0; MODEL_COUNT];
        s[m as usize] = top;
        let rest = (1.0 - top) / (MODEL_COUNT - 1) as f64;
        for (i, v) in s.iter_mut().enumerate() {
            if i != m as usize {
                *v = rest;
            }
        }
        ScoreVector { s }
    }

    #[test]
    fn always_correct_classifier_calibrates_to_one() {
        // KNN with k = 1 calibrated on its own training set is always
        // correct, so every bin's accuracy is exactly 1.
        let mut feats = Vec::new();
        let mut labels = Vec::new();
        for i in 0..60 {
            feats.push(fv(f64::from(i), f64::from(i % 7)));
            labels.push(ModelId::ALL[i as usize % 4]);
        }
        let hyper = MetaHyper {
            knn_k: 1,
            ..MetaHyper::default()
        };
        let clf = train(ClassifierKind::Knn, &feats, &labels, &hyper, 0).unwrap();
        let curve = fit_calibration(&clf, &feats, &labels, 10).unwrap();
        assert_eq!(curve.val_accuracy, 1.0);
        for i in 0..=20 {
            assert_eq!(curve.eta(f64::from(i) / 20.0), 1.0);
        }
    }

    #[test]
    fn step_pattern_recovers_within_one_bin_width() {
        // Correct exactly when the score exceeds 0.8. With 10 equal-count
        // bins over uniform scores each bin spans about 0.1, so the fitted
        // curve must transition inside one bin width of 0.8.
        let mut r = rng(3);
        let outcomes: Vec<(f64, bool)> = (0..500)
            .map(|_| {
                let s: f64 = r.gen_range(0.0..1.0);
                (s, s > 0.8)
            })
            .collect();
        let curve = fit_from_outcomes(ClassifierKind::NaiveBayes, &outcomes, 10).unwrap();
        assert!(curve.eta(0.65) < 0.05, "low side {}", curve.eta(0.65));
        assert!(curve.eta(0.95) > 0.95, "high side {}", curve.eta(0.95));
    }

    #[test]
    fn fitted_curve_is_always_monotone() {
        let mut r = rng(11);
        for case in 0..20 {
            let outcomes: Vec<(f64, bool)> = (0..80)
                .map(|_| (r.gen_range(0.0..1.0), r.gen_bool(0.5)))
                .collect();
            let curve = fit_from_outcomes(ClassifierKind::RandomForest, &outcomes, 10).unwrap();
            let mut prev = f64::NEG_INFINITY;
            for i in 0..=1000 {
                let eta = curve.eta(f64::from(i) / 1000.0);
                assert!(eta >= prev - 1e-12, "case {case}: curve dips at {i}");
                assert!((0.0..=1.0).contains(&eta));
                prev = eta;
            }
        }
    }

    #[test]
    fn isotonic_hand_examples() {
        assert_eq!(
            isotonic(&[0.6, 0.2, 0.4], &[1.0, 1.0, 1.0]),
            vec![0.4, 0.4, 0.4]
        );
        assert_eq!(
            isotonic(&[0.1, 0.5, 0.3], &[1.0, 1.0, 1.0]),
            vec![0.1, 0.4, 0.4]
        );
        // Already monotone stays untouched.
        assert_eq!(
            isotonic(&[0.1, 0.2, 0.9], &[1.0, 1.0, 1.0]),
            vec![0.1, 0.2, 0.9]
        );
        // Weights pull the pooled value toward the heavier bin.
        let pooled = isotonic(&[0.8, 0.2], &[3.0, 1.0]);
        assert!((pooled[0] - 0.65).abs() < 1e-12);
        assert_eq!(pooled[0], pooled[1]);
    }

    #[test]
    fn calibration_needs_five_samples_per_bin() {
        let outcomes: Vec<(f64, bool)> = (0..49).map(|i| (f64::from(i) / 49.0, true)).collect();
        let err = fit_from_outcomes(ClassifierKind::Knn, &outcomes, 10).unwrap_err();
        assert!(matches!(err, Error::TooFewSamples { need: 50, .. }));
    }

    #[test]
    fn unanimous_nomination_wins() {
        let kinds = ClassifierKind::ALL;
        let curves: Vec<CalibrationCurve> = kinds
            .iter()
            .map(|&k| flat_curve(k, 0.5, 0.5))
            .collect();
        let scores: Vec<ScoreVector> = (0..4).map(|_| score_for(ModelId::Lstm200, 0.9)).collect();
        assert_eq!(vote(&scores, &curves), ModelId::Lstm200);
    }

    #[test]
    fn highest_calibrated_accuracy_wins() {
        let curves = vec![
            flat_curve(ClassifierKind::RandomForest, 0.9, 0.9),
            flat_curve(ClassifierKind::Knn, 0.4, 0.4),
            flat_curve(ClassifierKind::NaiveBayes, 0.4, 0.4),
            flat_curve(ClassifierKind::LinearDiscriminant, 0.4, 0.4),
        ];
        let scores = vec![
            score_for(ModelId::Sarima412, 0.8),
            score_for(ModelId::Sd, 0.99),
            score_for(ModelId::Sd, 0.99),
            score_for(ModelId::Sd, 0.99),
        ];
        assert_eq!(vote(&scores, &curves), ModelId::Sarima412);
    }

    #[test]
    fn vote_matches_hand_evaluated_fixture() {
        // Learner etas by hand: identity curves make eta equal the top
        // score. RF: 0.7 for SVR; KNN: 0.75 for SD; NB: 0.6 for SVR;
        // LD: 0.75 for LSTM(125). KNN and LD tie at 0.75; KNN has the
        // higher validation accuracy, so SD must win.
        let curves = vec![
            identity_curve(ClassifierKind::RandomForest, 0.6),
            identity_curve(ClassifierKind::Knn, 0.8),
            identity_curve(ClassifierKind::NaiveBayes, 0.6),
            identity_curve(ClassifierKind::LinearDiscriminant, 0.7),
        ];
        let scores = vec![
            score_for(ModelId::Svr, 0.7),
            score_for(ModelId::Sd, 0.75),
            score_for(ModelId::Svr, 0.6),
            score_for(ModelId::Lstm125, 0.75),
        ];
        assert_eq!(vote(&scores, &curves), ModelId::Sd);

        // Flip the validation accuracies and the tie resolves the other way.
        let curves2 = vec![
            identity_curve(ClassifierKind::RandomForest, 0.6),
            identity_curve(ClassifierKind::Knn, 0.7),
            identity_curve(ClassifierKind::NaiveBayes, 0.6),
            identity_curve(ClassifierKind::LinearDiscriminant, 0.8),
        ];
        assert_eq!(vote(&scores, &curves2), ModelId::Lstm125);

        // Equal validation accuracy: lower model id takes the tie.
        let curves3 = vec![
            identity_curve(ClassifierKind::RandomForest, 0.6),
            identity_curve(ClassifierKind::Knn, 0.8),
            identity_curve(ClassifierKind::NaiveBayes, 0.6),
            identity_curve(ClassifierKind::LinearDiscriminant, 0.8),
        ];
        assert_eq!(vote(&scores, &curves3), ModelId::Lstm125);
    }

    #[test]
    fn rank_one_equals_vote() {
        let mut r = rng(29);
        for _ in 0..200 {
            let curves: Vec<CalibrationCurve> = ClassifierKind::ALL
                .iter()
                .map(|&k| {
                    if r.gen_bool(0.3) {
                        flat_curve(k, r.gen_range(0.2..0.9), r.gen_range(0.2..0.9))
                    } else {
                        identity_curve(k, r.gen_range(0.2..0.9))
                    }
                })
                .collect();
            let scores: Vec<ScoreVector> = (0..4)
                .map(|_| {
                    score_for(
                        ModelId::ALL[r.gen_range(0..MODEL_COUNT)],
                        r.gen_range(0.2..1.0),
                    )
                })
                .collect();
            let voted = vote(&scores, &curves);
            let rec = rank(&scores, &curves, 1, None);
            assert_eq!(rec.entries.len(), 1);
            assert_eq!(rec.entries[0].model, voted);
            let full = rank(&scores, &curves, 10, None);
            assert_eq!(full.entries[0].model, voted);
        }
    }

    #[test]
    fn rank_ten_is_a_permutation() {
        let curves = vec![
            identity_curve(ClassifierKind::RandomForest, 0.7),
            identity_curve(ClassifierKind::Knn, 0.6),
        ];
        let scores = vec![score_for(ModelId::Svr, 0.8), score_for(ModelId::Sd, 0.5)];
        let rec = rank(&scores, &curves, 10, None);
        let mut seen: Vec<ModelId> = rec.entries.iter().map(|e| e.model).collect();
        seen.sort_unstable();
        assert_eq!(seen, ModelId::ALL.to_vec());
    }

    #[test]
    fn rank_ordering_matches_brute_force_aggregation() {
        let mut r = rng(41);
        for _ in 0..100 {
            let curves: Vec<CalibrationCurve> = ClassifierKind::ALL
                .iter()
                .map(|&k| identity_curve(k, r.gen_range(0.2..0.9)))
                .collect();
            let scores: Vec<ScoreVector> = (0..4)
                .map(|_| {
                    let mut s = [0.0; MODEL_COUNT];
                    let mut total = 0.0;
                    for v in s.iter_mut() {
                        *v = r.gen_range(0.0..1.0);
                        total += *v;
                    }
                    s.iter_mut().for_each(|v| *v /= total);
                    ScoreVector { s }
                })
                .collect();
            let rec = rank(&scores, &curves, 10, None);
            // Independent aggregation: A(b) = max over learners of eta.
            let brute: Vec<f64> = (0..MODEL_COUNT)
                .map(|m| {
                    scores
                        .iter()
                        .zip(&curves)
                        .map(|(sv, c)| c.eta(sv.s[m]))
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect();
            for pair in rec.entries.windows(2) {
                assert!(pair[0].accuracy >= pair[1].accuracy);
            }
            for entry in &rec.entries {
                assert!((entry.accuracy - brute[entry.model as usize]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn affine_score_rescaling_does_not_move_the_vote() {
        // Rescale one learner's raw scores by s/2 + 0.25 and refit its
        // calibration on the rescaled outcomes: bin membership is order-
        // determined and linear interpolation commutes with affine maps,
        // so every eta and hence the vote is unchanged.
        let mut r = rng(53);
        for _ in 0..20 {
            let outcomes: Vec<(f64, bool)> = (0..200)
                .map(|_| {
                    let s: f64 = r.gen_range(0.0..1.0);
                    (s, r.gen_bool(s.clamp(0.05, 0.95)))
                })
                .collect();
            let rescaled: Vec<(f64, bool)> =
                outcomes.iter().map(|&(s, c)| (s / 2.0 + 0.25, c)).collect();
            let base = fit_from_outcomes(ClassifierKind::Knn, &outcomes, 10).unwrap();
            let refit = fit_from_outcomes(ClassifierKind::Knn, &rescaled, 10).unwrap();

            let other = identity_curve(ClassifierKind::RandomForest, 0.5);
            let other_scores = score_for(ModelId::Sarima515, r.gen_range(0.3..0.9));
            let top: f64 = r.gen_range(0.2..1.0);
            let a = vote(
                &[other_scores.clone(), score_for(ModelId::Svr, top)],
                &[other.clone(), base],
            );
            let b = vote(
                &[other_scores, score_for(ModelId::Svr, top / 2.0 + 0.25)],
                &[other, refit],
            );
            assert_eq!(a, b);
        }
    }

    #[test]
    fn nonlinear_monotone_rescaling_keeps_separated_votes() {
        // Cubing scores is monotone, so nominations and bin memberships
        // are unchanged; interpolated eta values wobble slightly, so the
        // fixture keeps the learners' accuracies far apart.
        let mut r = rng(67);
        let outcomes: Vec<(f64, bool)> = (0..300)
            .map(|_| {
                let s: f64 = r.gen_range(0.0..1.0);
                (s, r.gen_bool(if s > 0.5 { 0.9 } else { 0.1 }))
            })
            .collect();
        let cubed: Vec<(f64, bool)> = outcomes.iter().map(|&(s, c)| (s.powi(3), c)).collect();
        let base = fit_from_outcomes(ClassifierKind::NaiveBayes, &outcomes, 10).unwrap();
        let refit = fit_from_outcomes(ClassifierKind::NaiveBayes, &cubed, 10).unwrap();
        let weak = flat_curve(ClassifierKind::Knn, 0.3, 0.3);
        for i in 0..20 {
            let top = 0.7 + f64::from(i) * 0.015;
            let a = vote(
                &[score_for(ModelId::Lstm125, top), score_for(ModelId::Sd, 0.9)],
                &[base.clone(), weak.clone()],
            );
            let b = vote(
                &[
                    score_for(ModelId::Lstm125, top.powi(3)),
                    score_for(ModelId::Sd, 0.9),
                ],
                &[refit.clone(), weak.clone()],
            );
            assert_eq!(a, b, "vote flipped at top score {top}");
        }
    }

    #[test]
    fn masking_excludes_infeasible_models_everywhere() {
        let curves = vec![
            identity_curve(ClassifierKind::RandomForest, 0.7),
            identity_curve(ClassifierKind::Knn, 0.6),
        ];
        // Both learners' top choice is SVR, which the mask forbids.
        let scores = vec![score_for(ModelId::Svr, 0.9), score_for(ModelId::Svr, 0.8)];
        let mut mask = [true; MODEL_COUNT];
        mask[ModelId::Svr as usize] = false;
        mask[ModelId::Sd as usize] = false;
        let rec = rank(&scores, &curves, 10, Some(&mask));
        assert_eq!(rec.entries.len(), 8);
        for entry in &rec.entries {
            assert_ne!(entry.model, ModelId::Svr);
            assert_ne!(entry.model, ModelId::Sd);
        }
        // The nomination falls to the best feasible slot.
        assert_eq!(rec.entries[0].model, ModelId::Sarima211);
    }

    #[test]
    fn curve_round_trips_through_json() {
        let mut r = rng(71);
        let outcomes: Vec<(f64, bool)> = (0..120)
            .map(|_| (r.gen_range(0.0..1.0), r.gen_bool(0.6)))
            .collect();
        let curve = fit_from_outcomes(ClassifierKind::LinearDiscriminant, &outcomes, 10).unwrap();
        let json = serde_json::to_string(&curve).unwrap();
        let back: CalibrationCurve = serde_json::from_str(&json).unwrap();
        assert_eq!(curve, back);
    }
}
