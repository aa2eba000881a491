//! Corpus splitting, selection-quality metrics, and the benchmark harness.
//!
//! Selection quality is measured two ways. Accuracy (eta) asks whether the
//! recommended model is exactly the labeled best one. The selection error
//! ratio (SER) asks how much worse the recommended model's error is than
//! the best achievable on that task; it forgives near-misses that accuracy
//! punishes. The benchmark evaluates both on the held-out testing
//! partition, plus per-rank hit rates and per-model aggregates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::labeling::ErrorMatrix;
use crate::meta::{predict, predict_scores, ClassifierKind, TrainedClassifier};
use crate::models::{feasibility_mask, run_all, ModelId, TaskProfile, ZooConfig, MODEL_COUNT};
use crate::seed::{mix, task_seed};
use crate::series::{LfTask, SplitPair};
use crate::voting::{rank, CalibrationCurve, Recommendation};

/// Uniform random guessing over the candidate table.
pub const RANDOM_BASELINE: f64 = 1.0 / MODEL_COUNT as f64;

/// Disjoint 70/20/10 partition of corpus indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSplit {
    pub training: Vec<usize>,
    pub validation: Vec<usize>,
    pub testing: Vec<usize>,
}

impl CorpusSplit {
    pub fn total(&self) -> usize {
        self.training.len() + self.validation.len() + self.testing.len()
    }

    /// Index boundary below which tasks were available for fitting.
    pub fn k_m(&self) -> usize {
        self.training.len() + self.validation.len()
    }
}

/// Randomly partitions `j` task indices into 70% training, 20% validation
/// and the remainder (about 10%) testing. Floor rounding on the first two
/// groups makes the sizes reproducible: 846 tasks split 592/169/85.
pub fn split_corpus(j: usize, seed: u64) -> Result<CorpusSplit> {
    if j < 10 {
        return Err(Error::TooFewSamples {
            got: j,
            need: 10,
            what: "tasks in the corpus",
        });
    }
    let mut order: Vec<usize> = (0..j).collect();
    let mut r = crate::seed::rng(seed);
    use rand::seq::SliceRandom;
    order.shuffle(&mut r);
    let n_train = j * 7 / 10;
    let n_val = j * 2 / 10;
    let validation = order.split_off(n_train);
    let mut validation = validation;
    let testing = validation.split_off(n_val);
    Ok(CorpusSplit {
        training: order,
        validation,
        testing,
    })
}

/// Fraction of exact label matches.
pub fn eta(predicted: &[ModelId], truth: &[ModelId]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: truth.len(),
        });
    }
    if predicted.is_empty() {
        return Err(Error::TooFewSamples {
            got: 0,
            need: 1,
            what: "predictions to score",
        });
    }
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / predicted.len() as f64)
}

/// How much worse the selected model's tournament error is than the best
/// model's on one task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SerReport {
    pub e_select: f64,
    pub e_best: f64,
    /// `e_select / e_best`, at least 1; infinite when the selection failed.
    pub ser: f64,
    /// The selected model produced no error entry on this task.
    pub failure: bool,
}

/// Selection error ratio of `selected` on task column `j` of the
/// tournament error matrix.
pub fn ser(z: &ErrorMatrix, selected: ModelId, j: usize) -> Result<SerReport> {
    let mut e_best = f64::INFINITY;
    for m in 0..z.n_models() {
        if let Some(e) = z.get(m, j) {
            e_best = e_best.min(e);
        }
    }
    if !e_best.is_finite() {
        return Err(Error::AllInfeasible {
            task: format!("column {j}"),
        });
    }
    match z.get(selected as usize, j) {
        Some(e_select) => {
            // A zero best error happens on noise-free fixtures; matching
            // it is a perfect selection, missing it an infinite miss.
            let ser = if e_best > 0.0 {
                e_select / e_best
            } else if e_select <= 0.0 {
                1.0
            } else {
                f64::INFINITY
            };
            Ok(SerReport {
                e_select,
                e_best,
                ser,
                failure: false,
            })
        }
        None => Ok(SerReport {
            e_select: f64::INFINITY,
            e_best,
            ser: f64::INFINITY,
            failure: true,
        }),
    }
}

/// Per-candidate aggregates over the testing partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBench {
    pub model: ModelId,
    /// Tasks where this model was the rank-1 recommendation.
    pub top1_count: usize,
    /// Tasks whose tournament label is this model.
    pub label_count: usize,
    /// Tasks where this model has no tournament error entry (infeasible
    /// or never converged).
    pub failures: usize,
    /// Mean final-window MAPE where the model produced a forecast; absent
    /// when it never did.
    pub mean_mape: Option<f64>,
    /// Mean SER of always selecting this model, over tasks where it has
    /// an error entry; absent when it has none.
    pub mean_ser_fixed: Option<f64>,
}

/// Selection quality of the full pipeline on the testing partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub n_test: usize,
    /// Exact-match accuracy of each classifier alone.
    pub learner_eta: Vec<(ClassifierKind, f64)>,
    /// Exact-match accuracy of the voted rank-1 recommendation.
    pub voted_eta: f64,
    pub random_baseline: f64,
    /// Fraction of tasks whose label appears within the top k+1 ranks.
    pub hit_rate: [f64; MODEL_COUNT],
    /// Fraction of tasks whose label sits exactly at rank k+1; sums to 1.
    pub rank_fraction: [f64; MODEL_COUNT],
    /// Mean SER of the rank-k+1 recommendation, over tasks that have one;
    /// absent where no task has that many feasible candidates.
    pub rank_mean_ser: [Option<f64>; MODEL_COUNT],
    /// Recommendations at rank k+1 whose model had no error entry.
    pub rank_failures: [usize; MODEL_COUNT],
    /// Mean final-window MAPE of the rank-1 selection.
    pub mean_mape_selected: Option<f64>,
    pub per_model: Vec<ModelBench>,
}

impl BenchmarkReport {
    /// Flat (metric, name, value) rows for the CSV report.
    pub fn csv_rows(&self) -> Vec<(String, String, f64)> {
        let mut rows = vec![(
            "n_test".to_string(),
            "tasks".to_string(),
            self.n_test as f64,
        )];
        for (kind, v) in &self.learner_eta {
            rows.push(("learner_eta".into(), kind.name().into(), *v));
        }
        rows.push(("voted_eta".into(), "all".into(), self.voted_eta));
        rows.push((
            "random_baseline".into(),
            "uniform".into(),
            self.random_baseline,
        ));
        for k in 0..MODEL_COUNT {
            let name = format!("rank_{}", k + 1);
            rows.push(("hit_rate".into(), name.clone(), self.hit_rate[k]));
            rows.push(("rank_fraction".into(), name.clone(), self.rank_fraction[k]));
            if let Some(v) = self.rank_mean_ser[k] {
                rows.push(("rank_mean_ser".into(), name.clone(), v));
            }
            rows.push((
                "rank_failures".into(),
                name,
                self.rank_failures[k] as f64,
            ));
        }
        if let Some(v) = self.mean_mape_selected {
            rows.push(("mean_mape".into(), "selected".into(), v));
        }
        for m in &self.per_model {
            let name = m.model.to_string();
            rows.push(("model_top1".into(), name.clone(), m.top1_count as f64));
            rows.push((
                "model_label_count".into(),
                name.clone(),
                m.label_count as f64,
            ));
            rows.push(("model_failures".into(), name.clone(), m.failures as f64));
            if let Some(v) = m.mean_mape {
                rows.push(("model_mean_mape".into(), name.clone(), v));
            }
            if let Some(v) = m.mean_ser_fixed {
                rows.push(("model_mean_ser".into(), name, v));
            }
        }
        rows
    }
}

struct TaskEval {
    j: usize,
    label: ModelId,
    learner_correct: Vec<bool>,
    rec: Recommendation,
    mapes: [f64; MODEL_COUNT],
}

/// Benchmark with injectable prediction hooks, shared by the public entry
/// point and the oracle-feedback tests. `predict_for` returns one hard
/// prediction per classifier; `recommend_for` the masked ranked list.
pub(crate) fn benchmark_with<P, R>(
    tasks: &[LfTask],
    task_ids: &[String],
    labels: &[ModelId],
    z: &ErrorMatrix,
    split: &CorpusSplit,
    learner_kinds: &[ClassifierKind],
    cfg: &ZooConfig,
    seed: u64,
    predict_for: P,
    recommend_for: R,
) -> Result<BenchmarkReport>
where
    P: Fn(usize) -> Vec<ModelId> + Sync,
    R: Fn(usize, &[bool; MODEL_COUNT]) -> Recommendation + Sync,
{
    assert_eq!(tasks.len(), labels.len(), "tasks must be labeled");
    assert_eq!(split.total(), tasks.len(), "split must cover the corpus");
    if split.testing.is_empty() {
        return Err(Error::TooFewSamples {
            got: 0,
            need: 1,
            what: "testing tasks",
        });
    }

    let evals: Vec<TaskEval> = split
        .testing
        .par_iter()
        .map(|&j| {
            let task = &tasks[j];
            let profile = TaskProfile::of(task);
            let mask = feasibility_mask(task, cfg, &profile);
            let n = task.load.len();
            let k = task.horizon_samples();
            // Final-window split: the canonical held-out block the MAPE
            // numbers are measured on.
            let pair = SplitPair {
                train: 0..n - k,
                test: n - k..n,
            };
            let run_seed = mix(task_seed(seed, &task_ids[j]), 0xBEC);
            let outcomes = run_all(task, &pair, run_seed, cfg, &profile);
            let mut mapes = [f64::INFINITY; MODEL_COUNT];
            for (slot, o) in outcomes.iter().enumerate() {
                mapes[slot] = o.mape;
            }
            TaskEval {
                j,
                label: labels[j],
                learner_correct: predict_for(j).iter().map(|&p| p == labels[j]).collect(),
                rec: recommend_for(j, &mask),
                mapes,
            }
        })
        .collect();

    let n_test = evals.len() as f64;
    let mut learner_hits = vec![0usize; learner_kinds.len()];
    let mut voted_hits = 0usize;
    let mut hit_rate = [0.0; MODEL_COUNT];
    let mut rank_fraction = [0.0; MODEL_COUNT];
    let mut ser_sums = [0.0; MODEL_COUNT];
    let mut ser_counts = [0usize; MODEL_COUNT];
    let mut rank_failures = [0usize; MODEL_COUNT];
    let mut mape_sum = 0.0;
    let mut mape_count = 0usize;
    let mut top1 = [0usize; MODEL_COUNT];
    let mut label_counts = [0usize; MODEL_COUNT];
    let mut model_mape_sum = [0.0; MODEL_COUNT];
    let mut model_mape_count = [0usize; MODEL_COUNT];
    let mut model_ser_sum = [0.0; MODEL_COUNT];
    let mut model_ser_count = [0usize; MODEL_COUNT];
    let mut model_failures = [0usize; MODEL_COUNT];

    for eval in &evals {
        for (i, &correct) in eval.learner_correct.iter().enumerate() {
            learner_hits[i] += usize::from(correct);
        }
        let first = eval.rec.entries[0].model;
        voted_hits += usize::from(first == eval.label);
        top1[first as usize] += 1;
        label_counts[eval.label as usize] += 1;

        for (r, entry) in eval.rec.entries.iter().enumerate() {
            if entry.model == eval.label {
                rank_fraction[r] += 1.0;
                for h in hit_rate.iter_mut().skip(r) {
                    *h += 1.0;
                }
            }
            let report = ser(z, entry.model, eval.j)?;
            if report.failure {
                rank_failures[r] += 1;
            } else {
                ser_sums[r] += report.ser;
                ser_counts[r] += 1;
            }
        }

        let selected_mape = eval.mapes[first as usize];
        if selected_mape.is_finite() {
            mape_sum += selected_mape;
            mape_count += 1;
        }
        for m in 0..MODEL_COUNT {
            if eval.mapes[m].is_finite() {
                model_mape_sum[m] += eval.mapes[m];
                model_mape_count[m] += 1;
            }
            match ser(z, ModelId::ALL[m], eval.j)? {
                report if report.failure => model_failures[m] += 1,
                report => {
                    model_ser_sum[m] += report.ser;
                    model_ser_count[m] += 1;
                }
            }
        }
    }

    let ratio = |count: usize| count as f64 / n_test;
    let mean = |sum: f64, count: usize| (count > 0).then(|| sum / count as f64);
    let mut rank_mean_ser = [None; MODEL_COUNT];
    for r in 0..MODEL_COUNT {
        rank_mean_ser[r] = mean(ser_sums[r], ser_counts[r]);
        hit_rate[r] /= n_test;
        rank_fraction[r] /= n_test;
    }
    Ok(BenchmarkReport {
        n_test: evals.len(),
        learner_eta: learner_kinds
            .iter()
            .zip(&learner_hits)
            .map(|(&k, &h)| (k, ratio(h)))
            .collect(),
        voted_eta: ratio(voted_hits),
        random_baseline: RANDOM_BASELINE,
        hit_rate,
        rank_fraction,
        rank_mean_ser,
        rank_failures,
        mean_mape_selected: mean(mape_sum, mape_count),
        per_model: (0..MODEL_COUNT)
            .map(|m| ModelBench {
                model: ModelId::ALL[m],
                top1_count: top1[m],
                label_count: label_counts[m],
                failures: model_failures[m],
                mean_mape: mean(model_mape_sum[m], model_mape_count[m]),
                mean_ser_fixed: mean(model_ser_sum[m], model_ser_count[m]),
            })
            .collect(),
    })
}

/// Evaluates the trained pipeline on the testing partition: classifier
/// accuracies, voted accuracy, per-rank hit rates and SER, and per-model
/// aggregates including fresh final-window MAPE runs.
#[allow(clippy::too_many_arguments)]
pub fn benchmark(
    tasks: &[LfTask],
    features: &[FeatureVector],
    task_ids: &[String],
    labels: &[ModelId],
    z: &ErrorMatrix,
    split: &CorpusSplit,
    classifiers: &[TrainedClassifier],
    curves: &[CalibrationCurve],
    cfg: &ZooConfig,
    seed: u64,
) -> Result<BenchmarkReport> {
    assert_eq!(tasks.len(), features.len(), "one feature row per task");
    assert_eq!(
        classifiers.len(),
        curves.len(),
        "one calibration curve per classifier"
    );
    let kinds: Vec<ClassifierKind> = classifiers.iter().map(|c| c.kind).collect();
    benchmark_with(
        tasks,
        task_ids,
        labels,
        z,
        split,
        &kinds,
        cfg,
        seed,
        |j| classifiers.iter().map(|c| predict(c, &features[j])).collect(),
        |j, mask| {
            let scores: Vec<_> = classifiers
                .iter()
                .map(|c| predict_scores(c, &features[j]))
                .collect();
            rank(&scores, curves, MODEL_COUNT, Some(mask))
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    use crate::labeling::{label_corpus, LabeledCorpus};
    use crate::seed::rng;
    use crate::series::{LoadSeries, LoadType, TaskRequirements, WeatherSeries};
    use crate::voting::RecommendationEntry;

    #[test]
    fn split_sizes_match_the_documented_examples() {
        let s = split_corpus(846, 1).unwrap();
        assert_eq!(s.training.len(), 592);
        assert_eq!(s.validation.len(), 169);
        assert_eq!(s.testing.len(), 85);
        assert_eq!(s.k_m(), 761);

        let s = split_corpus(10, 1).unwrap();
        assert_eq!(s.training.len(), 7);
        assert_eq!(s.validation.len(), 2);
        assert_eq!(s.testing.len(), 1);
    }

    #[test]
    fn split_is_a_uniform_deterministic_partition() {
        let a = split_corpus(137, 42).unwrap();
        let b = split_corpus(137, 42).unwrap();
        assert_eq!(a, b);
        let c = split_corpus(137, 43).unwrap();
        assert_ne!(a, c, "different seeds should shuffle differently");

        let mut all: Vec<usize> = a
            .training
            .iter()
            .chain(&a.validation)
            .chain(&a.testing)
            .copied()
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..137).collect::<Vec<_>>());
    }

    #[test]
    fn split_rejects_tiny_corpus() {
        assert!(matches!(
            split_corpus(9, 0),
            Err(Error::TooFewSamples { need: 10, .. })
        ));
    }

    #[test]
    fn eta_hand_examples() {
        let all = vec![ModelId::Svr, ModelId::Sd];
        assert_eq!(eta(&all, &all).unwrap(), 1.0);
        let half = vec![ModelId::Svr, ModelId::Svr];
        assert_eq!(eta(&half, &all).unwrap(), 0.5);
        assert!(matches!(
            eta(&all, &all[..1]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(eta(&[], &[]), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn random_predictions_score_near_the_baseline() {
        let mut r = rng(7);
        let n = 5000;
        let pred: Vec<ModelId> = (0..n)
            .map(|_| ModelId::ALL[r.gen_range(0..MODEL_COUNT)])
            .collect();
        let truth: Vec<ModelId> = (0..n)
            .map(|_| ModelId::ALL[r.gen_range(0..MODEL_COUNT)])
            .collect();
        let e = eta(&pred, &truth).unwrap();
        assert!((e - RANDOM_BASELINE).abs() <= 0.03, "eta = {e}");
    }

    /// Error matrix fixture: rows are models, columns tasks.
    fn z_fixture(cols: &[[Option<f64>; MODEL_COUNT]]) -> ErrorMatrix {
        ErrorMatrix::from_columns(cols)
    }

    #[test]
    fn ser_of_the_argmin_is_one() {
        let mut col = [None; MODEL_COUNT];
        col[0] = Some(2.0);
        col[8] = Some(1.0);
        col[9] = Some(3.0);
        let z = z_fixture(&[col]);
        let report = ser(&z, ModelId::Svr, 0).unwrap();
        assert_eq!(report.ser, 1.0);
        assert_eq!(report.e_best, 1.0);
        assert!(!report.failure);
    }

    #[test]
    fn ser_ratio_matches_hand_arithmetic() {
        let mut col = [None; MODEL_COUNT];
        col[0] = Some(1.4);
        col[9] = Some(1.0);
        let z = z_fixture(&[col]);
        let report = ser(&z, ModelId::Sarima211, 0).unwrap();
        assert!((report.ser - 1.4).abs() < 1e-12);
        assert_eq!(report.e_select, 1.4);
    }

    #[test]
    fn selecting_a_failed_model_is_an_infinite_miss() {
        let mut col = [None; MODEL_COUNT];
        col[9] = Some(1.0);
        let z = z_fixture(&[col]);
        let report = ser(&z, ModelId::Lstm125, 0).unwrap();
        assert!(report.ser.is_infinite());
        assert!(report.failure);
    }

    #[test]
    fn all_failed_column_errors() {
        let z = z_fixture(&[[None; MODEL_COUNT]]);
        assert!(matches!(
            ser(&z, ModelId::Sd, 0),
            Err(Error::AllInfeasible { .. })
        ));
    }

    #[test]
    fn zero_best_error_still_gives_unit_ser_to_the_winner() {
        let mut col = [None; MODEL_COUNT];
        col[9] = Some(0.0);
        col[0] = Some(0.5);
        let z = z_fixture(&[col]);
        assert_eq!(ser(&z, ModelId::Sd, 0).unwrap().ser, 1.0);
        let missed = ser(&z, ModelId::Sarima211, 0).unwrap();
        assert!(missed.ser.is_infinite());
        assert!(!missed.failure, "the model ran, it just lost badly");
    }

    /// Hourly task whose only feasible candidate is the similar-day model:
    /// 72 samples leave a worst-case train window of 24, below every other
    /// candidate's minimum.
    fn sd_only_task(id: &str, amplitude: f64) -> LfTask {
        let values: Vec<f64> = (0..72)
            .map(|t| {
                30.0 + amplitude
                    * (std::f64::consts::PI * 2.0 * (t % 24) as f64 / 24.0).sin()
            })
            .collect();
        let t0 = chrono::NaiveDate::from_ymd_opt(2023, 2, 6)
            .unwrap()
            .and_hms_opt(0, 0, 0)
            .unwrap();
        LfTask::new(
            id,
            LoadSeries::new(t0, 1.0, values).unwrap(),
            WeatherSeries::empty(),
            TaskRequirements {
                granularity_hours: 1.0,
                history_days: 30,
                horizon_hours: 24,
                n_weather: 0,
                n_customers: 2,
                load_type: LoadType::Residential,
            },
        )
        .unwrap()
    }

    #[test]
    fn oracle_feedback_scores_perfectly() {
        // Twelve single-candidate tasks; feeding the tournament labels
        // back as predictions must give eta 1 and SER exactly 1.
        let tasks: Vec<LfTask> = (0..12)
            .map(|i| sd_only_task(&format!("task-{i}"), 4.0 + f64::from(i)))
            .collect();
        let cfg = ZooConfig::tournament();
        let labeled = label_corpus(&tasks, 11, &cfg).unwrap();
        assert!(labeled.failures.is_empty());
        let split = split_corpus(tasks.len(), 5).unwrap();

        let kinds = ClassifierKind::ALL;
        let report = benchmark_with(
            &tasks,
            &labeled.task_ids,
            &labeled.phis(),
            &labeled.z,
            &split,
            &kinds,
            &cfg,
            99,
            |j| vec![labeled.labels[j].phi; 4],
            |j, mask| {
                assert!(mask[ModelId::Sd as usize]);
                Recommendation {
                    entries: vec![RecommendationEntry {
                        model: labeled.labels[j].phi,
                        accuracy: 1.0,
                        learner: ClassifierKind::RandomForest,
                    }],
                }
            },
        )
        .unwrap();

        assert_eq!(report.voted_eta, 1.0);
        for (_, e) in &report.learner_eta {
            assert_eq!(*e, 1.0);
        }
        assert_eq!(report.rank_mean_ser[0], Some(1.0));
        assert_eq!(report.rank_failures, [0; MODEL_COUNT]);
        assert_eq!(report.hit_rate[0], 1.0);
        assert_eq!(report.rank_fraction[0], 1.0);
        let sd_row = &report.per_model[ModelId::Sd as usize];
        assert_eq!(sd_row.top1_count, report.n_test);
        assert!(sd_row.mean_mape.is_some());
        assert_eq!(sd_row.failures, 0);
    }

    /// Mixed-feasibility corpus for rank-statistics tests: half the tasks
    /// admit one candidate, half admit eight.
    fn mixed_corpus() -> (Vec<LfTask>, LabeledCorpus, ZooConfig) {
        let mut tasks: Vec<LfTask> = (0..6)
            .map(|i| sd_only_task(&format!("small-{i}"), 5.0 + f64::from(i)))
            .collect();
        for i in 0..6 {
            tasks.push(crate::models::tests::daily_task(6, 24, 100 + i));
        }
        let cfg = ZooConfig::tournament();
        let labeled = label_corpus(&tasks, 17, &cfg).unwrap();
        assert!(labeled.failures.is_empty());
        (tasks, labeled, cfg)
    }

    #[test]
    fn rank_statistics_are_consistent() {
        let (tasks, labeled, cfg) = mixed_corpus();
        let split = split_corpus(tasks.len(), 3).unwrap();

        // Oracle-ish ranking: label first, then the remaining feasible
        // models in slot order with descending fabricated accuracies.
        let report = benchmark_with(
            &tasks,
            &labeled.task_ids,
            &labeled.phis(),
            &labeled.z,
            &split,
            &[ClassifierKind::Knn],
            &cfg,
            7,
            |j| vec![labeled.labels[j].phi],
            |j, mask| {
                let label = labeled.labels[j].phi;
                let mut entries = vec![RecommendationEntry {
                    model: label,
                    accuracy: 1.0,
                    learner: ClassifierKind::Knn,
                }];
                for m in 0..MODEL_COUNT {
                    if mask[m] && ModelId::ALL[m] != label {
                        entries.push(RecommendationEntry {
                            model: ModelId::ALL[m],
                            accuracy: 0.5 - 0.01 * m as f64,
                            learner: ClassifierKind::Knn,
                        });
                    }
                }
                Recommendation { entries }
            },
        )
        .unwrap();

        // Hit rates are cumulative, rank fractions partition the tasks.
        for pair in report.hit_rate.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-12);
        }
        let total: f64 = report.rank_fraction.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(report.hit_rate[MODEL_COUNT - 1], 1.0);
        // The label leads every list, so rank 1 hits everything already.
        assert_eq!(report.rank_fraction[0], 1.0);
        assert_eq!(report.rank_failures, [0; MODEL_COUNT]);
        let label_total: usize = report.per_model.iter().map(|m| m.label_count).sum();
        assert_eq!(label_total, report.n_test);
        let top1_total: usize = report.per_model.iter().map(|m| m.top1_count).sum();
        assert_eq!(top1_total, report.n_test);
    }

    #[test]
    fn benchmark_is_deterministic() {
        let (tasks, labeled, cfg) = mixed_corpus();
        let split = split_corpus(tasks.len(), 3).unwrap();
        let run = || {
            benchmark_with(
                &tasks,
                &labeled.task_ids,
                &labeled.phis(),
                &labeled.z,
                &split,
                &[ClassifierKind::Knn],
                &cfg,
                7,
                |j| vec![labeled.labels[j].phi],
                |j, _| Recommendation {
                    entries: vec![RecommendationEntry {
                        model: labeled.labels[j].phi,
                        accuracy: 1.0,
                        learner: ClassifierKind::Knn,
                    }],
                },
            )
            .unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn csv_rows_cover_every_metric_family() {
        let (tasks, labeled, cfg) = mixed_corpus();
        let split = split_corpus(tasks.len(), 3).unwrap();
        let report = benchmark_with(
            &tasks,
            &labeled.task_ids,
            &labeled.phis(),
            &labeled.z,
            &split,
            &[ClassifierKind::Knn],
            &cfg,
            7,
            |j| vec![labeled.labels[j].phi],
            |j, _| Recommendation {
                entries: vec![RecommendationEntry {
                    model: labeled.labels[j].phi,
                    accuracy: 1.0,
                    learner: ClassifierKind::Knn,
                }],
            },
        )
        .unwrap();
        let rows = report.csv_rows();
        for metric in [
            "n_test",
            "learner_eta",
            "voted_eta",
            "random_baseline",
            "hit_rate",
            "rank_fraction",
            "rank_mean_ser",
            "rank_failures",
            "mean_mape",
            "model_top1",
            "model_label_count",
            "model_failures",
            "model_mean_mape",
            "model_mean_ser",
        ] {
            assert!(
                rows.iter().any(|(m, _, _)| m == metric),
                "missing metric {metric}"
            );
        }
    }
}
