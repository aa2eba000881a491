//! Repeated-split tournaments that decide each task's best candidate.
//!
//! One labeling pass draws a batch of random train/test splits, runs every
//! feasible candidate on each split, and tallies which model wins (smallest
//! test RMSE). The batch size grows by ten until the win-frequency vector
//! stops moving, measured by Pearson correlation against the previous
//! batch; the first comparison is against a single-split batch. Each batch
//! draws fresh splits rather than extending the previous pool.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{feasible, run_all, ModelId, TaskProfile, ZooConfig, MODEL_COUNT};
use crate::seed::{mix, rng, task_seed};
use crate::series::{random_split, LfTask};

/// Batch-size ceiling for tasks whose winner distribution never settles.
pub const L_MAX: usize = 201;

/// Correlation at which the winner distribution counts as stable.
pub const STABILITY_THRESHOLD: f64 = 0.95;

/// Win-frequency estimate for one task, with the stopping trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelDistribution {
    /// Win frequency per candidate, in candidate-table order. Sums to 1
    /// when at least one split produced a winner.
    pub omega: [f64; MODEL_COUNT],
    /// The previous batch's frequencies, kept so the stopping decision
    /// can be re-audited from the stored result.
    pub prev_omega: [f64; MODEL_COUNT],
    /// Splits in the final batch; always 1 mod 10.
    pub l: usize,
    /// Last correlation between consecutive batches.
    pub p_cc: f64,
    /// False when the batch ceiling stopped a still-drifting distribution.
    pub stabilized: bool,
}

/// A task's label: the most frequently winning candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskLabel {
    pub phi: ModelId,
    pub distribution: LabelDistribution,
}

/// Mean final-batch test RMSE per (candidate, task); `None` marks a
/// candidate that never produced a successful run on that task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorMatrix {
    pub rows: Vec<Vec<Option<f64>>>,
}

impl ErrorMatrix {
    /// Builds the matrix from per-task columns.
    pub fn from_columns(cols: &[[Option<f64>; MODEL_COUNT]]) -> ErrorMatrix {
        let rows = (0..MODEL_COUNT)
            .map(|i| cols.iter().map(|c| c[i]).collect())
            .collect();
        ErrorMatrix { rows }
    }

    pub fn n_models(&self) -> usize {
        self.rows.len()
    }

    pub fn n_tasks(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn get(&self, model: usize, task: usize) -> Option<f64> {
        self.rows[model][task]
    }
}

/// Sample Pearson correlation. Constant vectors carry no signal, so two
/// equal constants correlate perfectly and anything else not at all.
pub fn pearson(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    if u.len() < 2 {
        return Err(Error::TooFewSamples {
            got: u.len(),
            need: 2,
            what: "correlation inputs",
        });
    }
    let n = u.len() as f64;
    let mu = u.iter().sum::<f64>() / n;
    let mv = v.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_u = 0.0;
    let mut var_v = 0.0;
    for (a, b) in u.iter().zip(v) {
        let da = a - mu;
        let db = b - mv;
        cov += da * db;
        var_u += da * da;
        var_v += db * db;
    }
    let const_u = var_u / n < 1e-18;
    let const_v = var_v / n < 1e-18;
    if const_u || const_v {
        let equal = const_u && const_v && (mu - mv).abs() <= 1e-9 * (1.0 + mu.abs());
        return Ok(if equal { 1.0 } else { 0.0 });
    }
    // Single square root keeps self-correlation at exactly 1.
    Ok((cov / (var_u * var_v).sqrt()).clamp(-1.0, 1.0))
}

struct BatchStats {
    omega: [f64; MODEL_COUNT],
    mean_rmse: [Option<f64>; MODEL_COUNT],
    successful_splits: usize,
}

/// Run `l` fresh splits and tally winners. Split seeds continue a global
/// counter so batches never reuse a split and the whole schedule is a pure
/// function of the task seed, independent of execution order.
fn run_batch(
    task: &LfTask,
    seed: u64,
    cfg: &ZooConfig,
    profile: &TaskProfile,
    first_split: u64,
    l: usize,
) -> BatchStats {
    let rows: Vec<_> = (0..l as u64)
        .into_par_iter()
        .map(|i| {
            let split_seed = mix(seed, first_split + i);
            // Feasibility pre-check guarantees n >= 2K.
            let split = random_split(task, &mut rng(split_seed)).expect("n >= 2K");
            run_all(task, &split, split_seed, cfg, profile)
        })
        .collect();

    let mut wins = [0usize; MODEL_COUNT];
    let mut sums = [0.0; MODEL_COUNT];
    let mut counts = [0usize; MODEL_COUNT];
    let mut successful_splits = 0;
    for row in &rows {
        let mut best: Option<usize> = None;
        for (i, outcome) in row.iter().enumerate() {
            if outcome.failure {
                continue;
            }
            sums[i] += outcome.rmse;
            counts[i] += 1;
            // Strict comparison: an exact tie keeps the earlier candidate.
            if best.map_or(true, |b| outcome.rmse < row[b].rmse) {
                best = Some(i);
            }
        }
        if let Some(b) = best {
            wins[b] += 1;
            successful_splits += 1;
        }
    }
    let mut omega = [0.0; MODEL_COUNT];
    let mut mean_rmse = [None; MODEL_COUNT];
    for i in 0..MODEL_COUNT {
        if successful_splits > 0 {
            omega[i] = wins[i] as f64 / successful_splits as f64;
        }
        if counts[i] > 0 {
            mean_rmse[i] = Some(sums[i] / counts[i] as f64);
        }
    }
    BatchStats {
        omega,
        mean_rmse,
        successful_splits,
    }
}

fn argmax_model(omega: &[f64; MODEL_COUNT]) -> ModelId {
    let mut best = 0;
    for i in 1..MODEL_COUNT {
        if omega[i] > omega[best] {
            best = i;
        }
    }
    ModelId::ALL[best]
}

pub(crate) fn label_task_full(
    task: &LfTask,
    seed: u64,
    cfg: &ZooConfig,
) -> Result<(TaskLabel, [Option<f64>; MODEL_COUNT])> {
    let profile = TaskProfile::of(task);
    if !ModelId::ALL
        .iter()
        .any(|&m| feasible(m, task, cfg, &profile))
    {
        return Err(Error::AllInfeasible {
            task: task.id.clone(),
        });
    }
    let mut drawn: u64 = 0;
    let mut prev = run_batch(task, seed, cfg, &profile, drawn, 1);
    drawn += 1;
    let mut l = 1usize;
    loop {
        l += 10;
        let cur = run_batch(task, seed, cfg, &profile, drawn, l);
        drawn += l as u64;
        let p_cc = pearson(&prev.omega, &cur.omega).expect("fixed-length inputs");
        let stabilized = p_cc >= STABILITY_THRESHOLD;
        if stabilized || l >= L_MAX {
            if cur.successful_splits == 0 {
                // Feasible on paper, but nothing ever fit.
                return Err(Error::AllInfeasible {
                    task: task.id.clone(),
                });
            }
            let label = TaskLabel {
                phi: argmax_model(&cur.omega),
                distribution: LabelDistribution {
                    omega: cur.omega,
                    prev_omega: prev.omega,
                    l,
                    p_cc,
                    stabilized,
                },
            };
            return Ok((label, cur.mean_rmse));
        }
        prev = cur;
    }
}

/// Label one task. The split schedule is derived from `seed` alone.
pub fn label_task(task: &LfTask, seed: u64, cfg: &ZooConfig) -> Result<TaskLabel> {
    label_task_full(task, seed, cfg).map(|(label, _)| label)
}

/// Everything labeling produces for a corpus. Tasks that could not be
/// labeled are excluded from the matrix and reported in `failures`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledCorpus {
    /// Ids of successfully labeled tasks, in corpus order.
    pub task_ids: Vec<String>,
    pub labels: Vec<TaskLabel>,
    pub z: ErrorMatrix,
    /// (task id, reason) for every task that failed to label.
    pub failures: Vec<(String, String)>,
}

impl LabeledCorpus {
    /// Just the winning model per task, in row order.
    pub fn phis(&self) -> Vec<ModelId> {
        self.labels.iter().map(|l| l.phi).collect()
    }
}

/// Label a whole corpus, one derived seed per task, tasks in parallel.
pub fn label_corpus(tasks: &[LfTask], seed: u64, cfg: &ZooConfig) -> Result<LabeledCorpus> {
    if tasks.is_empty() {
        return Err(Error::TooFewSamples {
            got: 0,
            need: 1,
            what: "tasks to label",
        });
    }
    let results: Vec<_> = tasks
        .par_iter()
        .map(|t| {
            let ts = task_seed(seed, &t.id);
            (t.id.clone(), label_task_full(t, ts, cfg))
        })
        .collect();

    let mut task_ids = Vec::new();
    let mut labels = Vec::new();
    let mut columns: Vec<[Option<f64>; MODEL_COUNT]> = Vec::new();
    let mut failures = Vec::new();
    for (id, outcome) in results {
        match outcome {
            Ok((label, mean_rmse)) => {
                task_ids.push(id);
                labels.push(label);
                columns.push(mean_rmse);
            }
            Err(e) => failures.push((id, e.to_string())),
        }
    }
    Ok(LabeledCorpus {
        task_ids,
        labels,
        z: ErrorMatrix::from_columns(&columns),
        failures,
    })
}
