//! Classifiers that map task features to the model expected to win.
//!
//! Four families trained on the same labeled corpus: a random forest,
//! k-nearest-neighbors, Gaussian naive Bayes, and a linear discriminant.
//! Each one exposes calibratable per-class scores, not just a hard label,
//! because the voting stage needs to weigh how confident a prediction is.
//!
//! Features are z-scored with statistics frozen at training time and
//! zero-variance columns are dropped; every classifier sees the same
//! normalized view, so none of them is hostage to feature units.

mod forest;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::linalg::solve_spd_ridged;
use crate::models::{ModelId, MODEL_COUNT};

use forest::{forest_votes, train_forest, Forest};

pub const FEATURE_DIM: usize = crate::features::FEATURE_NAMES.len();

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassifierKind {
    RandomForest,
    Knn,
    NaiveBayes,
    LinearDiscriminant,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 4] = [
        ClassifierKind::RandomForest,
        ClassifierKind::Knn,
        ClassifierKind::NaiveBayes,
        ClassifierKind::LinearDiscriminant,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::RandomForest => "random-forest",
            ClassifierKind::Knn => "knn",
            ClassifierKind::NaiveBayes => "naive-bayes",
            ClassifierKind::LinearDiscriminant => "linear-discriminant",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct MetaHyper {
    pub rf_trees: usize,
    pub rf_max_depth: usize,
    pub knn_k: usize,
    pub nb_var_floor: f64,
    pub ld_ridge: f64,
}

impl Default for MetaHyper {
    fn default() -> Self {
        MetaHyper {
            rf_trees: 100,
            rf_max_depth: 12,
            knn_k: 5,
            nb_var_floor: 1e-6,
            ld_ridge: 1e-3,
        }
    }
}

/// Per-candidate-model scores. Entries are nonnegative and sum to one;
/// models absent from the training labels always score zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector {
    pub s: [f64; MODEL_COUNT],
}

impl ScoreVector {
    pub fn top(&self) -> f64 {
        self.s.iter().copied().fold(0.0, f64::max)
    }
}

/// Feature normalization frozen at training time: which columns survive
/// the zero-variance filter and the z-scoring statistics for each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FeatureNorm {
    kept: Vec<usize>,
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl FeatureNorm {
    fn fit(rows: &[[f64; FEATURE_DIM]]) -> FeatureNorm {
        let n = rows.len() as f64;
        let mut norm = FeatureNorm {
            kept: Vec::new(),
            mean: Vec::new(),
            std: Vec::new(),
        };
        for d in 0..FEATURE_DIM {
            let mean = rows.iter().map(|r| r[d]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[d] - mean).powi(2)).sum::<f64>() / n;
            let std = var.sqrt();
            if std > 0.0 {
                norm.kept.push(d);
                norm.mean.push(mean);
                norm.std.push(std);
            }
        }
        norm
    }

    fn apply(&self, row: &[f64; FEATURE_DIM]) -> Vec<f64> {
        self.kept
            .iter()
            .enumerate()
            .map(|(i, &d)| (row[d] - self.mean[i]) / self.std[i])
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Fitted {
    Forest(Forest),
    Knn {
        k: usize,
        exemplars: Vec<Vec<f64>>,
        labels: Vec<usize>,
    },
    NaiveBayes {
        log_priors: Vec<f64>,
        means: Vec<Vec<f64>>,
        vars: Vec<Vec<f64>>,
    },
    LinearDiscriminant {
        // Discriminant of class c at x is dot(weights[c], x) + biases[c].
        weights: Vec<Vec<f64>>,
        biases: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedClassifier {
    pub kind: ClassifierKind,
    norm: FeatureNorm,
    /// Distinct labels seen in training, ascending by model id.
    classes: Vec<ModelId>,
    /// Training frequency of each class, for prediction tie-breaks.
    class_counts: Vec<usize>,
    fitted: Fitted,
}

pub const MIN_TRAIN_TASKS: usize = 10;

/// Fits one classifier on labeled feature rows. Only the forest consumes
/// the seed; the other three are deterministic given the data.
pub fn train(
    kind: ClassifierKind,
    features: &[FeatureVector],
    labels: &[ModelId],
    hyper: &MetaHyper,
    seed: u64,
) -> Result<TrainedClassifier> {
    assert_eq!(features.len(), labels.len(), "one label per feature row");
    if features.len() < MIN_TRAIN_TASKS {
        return Err(Error::TooFewSamples {
            got: features.len(),
            need: MIN_TRAIN_TASKS,
            what: "labeled tasks for classifier training",
        });
    }
    let mut classes: Vec<ModelId> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::SingleClass);
    }

    let rows: Vec<[f64; FEATURE_DIM]> = features.iter().map(|f| f.to_array()).collect();
    let norm = FeatureNorm::fit(&rows);
    let x: Vec<Vec<f64>> = rows.iter().map(|r| norm.apply(r)).collect();
    let y: Vec<usize> = labels
        .iter()
        .map(|l| classes.binary_search(l).expect("label is in class list"))
        .collect();
    let mut class_counts = vec![0usize; classes.len()];
    for &c in &y {
        class_counts[c] += 1;
    }

    let fitted = match kind {
        ClassifierKind::RandomForest => Fitted::Forest(train_forest(
            &x,
            &y,
            classes.len(),
            hyper.rf_trees,
            hyper.rf_max_depth,
            seed,
        )),
        ClassifierKind::Knn => Fitted::Knn {
            k: hyper.knn_k.clamp(1, x.len()),
            exemplars: x,
            labels: y,
        },
        ClassifierKind::NaiveBayes => fit_naive_bayes(&x, &y, &class_counts, hyper.nb_var_floor),
        ClassifierKind::LinearDiscriminant => {
            fit_linear_discriminant(&x, &y, &class_counts, hyper.ld_ridge)?
        }
    };
    Ok(TrainedClassifier {
        kind,
        norm,
        classes,
        class_counts,
        fitted,
    })
}

fn fit_naive_bayes(x: &[Vec<f64>], y: &[usize], counts: &[usize], var_floor: f64) -> Fitted {
    let dim = x[0].len();
    let n_classes = counts.len();
    let mut means = vec![vec![0.0; dim]; n_classes];
    let mut vars = vec![vec![0.0; dim]; n_classes];
    for (row, &c) in x.iter().zip(y) {
        for d in 0..dim {
            means[c][d] += row[d];
        }
    }
    for c in 0..n_classes {
        for d in 0..dim {
            means[c][d] /= counts[c] as f64;
        }
    }
    for (row, &c) in x.iter().zip(y) {
        for d in 0..dim {
            vars[c][d] += (row[d] - means[c][d]).powi(2);
        }
    }
    let n = x.len() as f64;
    let log_priors = counts.iter().map(|&c| (c as f64 / n).ln()).collect();
    for c in 0..n_classes {
        for d in 0..dim {
            vars[c][d] = (vars[c][d] / counts[c] as f64).max(var_floor);
        }
    }
    Fitted::NaiveBayes {
        log_priors,
        means,
        vars,
    }
}

fn fit_linear_discriminant(
    x: &[Vec<f64>],
    y: &[usize],
    counts: &[usize],
    ridge: f64,
) -> Result<Fitted> {
    let dim = x[0].len();
    let n_classes = counts.len();
    let mut means = vec![vec![0.0; dim]; n_classes];
    for (row, &c) in x.iter().zip(y) {
        for d in 0..dim {
            means[c][d] += row[d];
        }
    }
    for c in 0..n_classes {
        for d in 0..dim {
            means[c][d] /= counts[c] as f64;
        }
    }
    // Pooled within-class covariance with a ridge to keep it invertible.
    let denom = (x.len().saturating_sub(n_classes)).max(1) as f64;
    let mut cov = vec![0.0; dim * dim];
    for (row, &c) in x.iter().zip(y) {
        for i in 0..dim {
            let di = row[i] - means[c][i];
            for j in 0..dim {
                cov[i * dim + j] += di * (row[j] - means[c][j]);
            }
        }
    }
    for v in cov.iter_mut() {
        *v /= denom;
    }
    for i in 0..dim {
        cov[i * dim + i] += ridge;
    }
    let n = x.len() as f64;
    let mut weights = Vec::with_capacity(n_classes);
    let mut biases = Vec::with_capacity(n_classes);
    for c in 0..n_classes {
        let w = if dim == 0 {
            Vec::new()
        } else {
            solve_spd_ridged(&cov, dim, &means[c])?
        };
        let quad: f64 = w.iter().zip(&means[c]).map(|(a, b)| a * b).sum();
        biases.push(-0.5 * quad + (counts[c] as f64 / n).ln());
        weights.push(w);
    }
    Ok(Fitted::LinearDiscriminant { weights, biases })
}

/// Per-class scores for one feature vector, spread over all model slots.
pub fn predict_scores(clf: &TrainedClassifier, features: &FeatureVector) -> ScoreVector {
    let x = clf.norm.apply(&features.to_array());
    let class_scores = match &clf.fitted {
        Fitted::Forest(forest) => forest_votes(forest, &x),
        Fitted::Knn {
            k,
            exemplars,
            labels,
        } => knn_scores(&x, exemplars, labels, *k, clf.classes.len()),
        Fitted::NaiveBayes {
            log_priors,
            means,
            vars,
        } => {
            let logs: Vec<f64> = (0..clf.classes.len())
                .map(|c| {
                    let mut l = log_priors[c];
                    for d in 0..x.len() {
                        let z = x[d] - means[c][d];
                        l -= 0.5 * (z * z / vars[c][d] + vars[c][d].ln());
                    }
                    l
                })
                .collect();
            softmax(&logs)
        }
        Fitted::LinearDiscriminant { weights, biases } => {
            let logs: Vec<f64> = weights
                .iter()
                .zip(biases)
                .map(|(w, b)| w.iter().zip(&x).map(|(a, v)| a * v).sum::<f64>() + b)
                .collect();
            softmax(&logs)
        }
    };
    let mut s = [0.0; MODEL_COUNT];
    for (c, &score) in class_scores.iter().enumerate() {
        s[clf.classes[c] as usize] = score;
    }
    ScoreVector { s }
}

/// Hard prediction: the argmax of the score vector, with ties broken
/// toward the class more frequent in training and then the lower model id.
pub fn predict(clf: &TrainedClassifier, features: &FeatureVector) -> ModelId {
    let scores = predict_scores(clf, features);
    let mut slot_counts = [0usize; MODEL_COUNT];
    for (c, &count) in clf.class_counts.iter().enumerate() {
        slot_counts[clf.classes[c] as usize] = count;
    }
    argmax_model(&scores, &slot_counts)
}

/// Score ties within 1e-12 count as exact; frequency, then the lower slot,
/// settles them. Scanning ascending keeps the lower slot on full ties.
pub(crate) fn argmax_model(scores: &ScoreVector, frequency: &[usize; MODEL_COUNT]) -> ModelId {
    let mut best = 0;
    for m in 1..MODEL_COUNT {
        if scores.s[m] > scores.s[best] + 1e-12 {
            best = m;
        } else if (scores.s[m] - scores.s[best]).abs() <= 1e-12 && frequency[m] > frequency[best] {
            best = m;
        }
    }
    ModelId::ALL[best]
}

fn knn_scores(
    x: &[f64],
    exemplars: &[Vec<f64>],
    labels: &[usize],
    k: usize,
    n_classes: usize,
) -> Vec<f64> {
    let mut dist: Vec<(f64, usize)> = exemplars
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let d2: f64 = e.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum();
            (d2, i)
        })
        .collect();
    // Index is the secondary key, so equidistant exemplars rank stably.
    dist.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let mut scores = vec![0.0; n_classes];
    for &(_, i) in dist.iter().take(k) {
        scores[labels[i]] += 1.0 / k as f64;
    }
    scores
}

fn softmax(logs: &[f64]) -> Vec<f64> {
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logs.iter().map(|&l| (l - m).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / z).collect()
}
