//! Persistence: the meta-knowledge store and the on-disk corpus layout.
//!
//! The store is everything offline training produces — task features,
//! labels, the tournament error matrix, the four classifiers and their
//! calibration curves, and the corpus split they were fitted under. It
//! serializes as one JSON document with an explicit version field; tree
//! weights and matrices are plain nested arrays, favoring inspectability
//! over compactness. Serialization is byte-stable: serialize, parse,
//! serialize again yields identical bytes, so stores can be content-hashed.
//!
//! A corpus directory holds one CSV data file and one key-value manifest
//! per task, plus an index listing ids and requirement parameters. The
//! index header documents the grid constraints the generator applied.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{benchmark, split_corpus, BenchmarkReport, CorpusSplit};
use crate::features::{extract_features, FeatureVector};
use crate::labeling::{label_corpus, ErrorMatrix};
use crate::meta::{predict_scores, train, ClassifierKind, MetaHyper, ScoreVector, TrainedClassifier};
use crate::models::{feasibility_mask, ModelId, TaskProfile, ZooConfig, MODEL_COUNT};
use crate::seed::mix;
use crate::series::{ingest_csv, write_task_csv, LfTask, LoadType, TaskRequirements};
use crate::taskgen::constraint_notes;
use crate::voting::{fit_calibration, rank, CalibrationCurve, Recommendation, DEFAULT_CALIBRATION_BINS};

/// Bumped whenever the serialized layout changes shape.
pub const STORE_VERSION: u32 = 1;

/// Everything the offline phase learned, in one persistable document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaKnowledgeStore {
    pub version: u32,
    /// Master seed the pipeline ran under; reruns derive from it.
    pub seed: u64,
    /// Ids of the J stored tasks; every row below follows this order.
    pub task_ids: Vec<String>,
    pub features: Vec<FeatureVector>,
    pub labels: Vec<ModelId>,
    pub z: ErrorMatrix,
    pub split: CorpusSplit,
    pub classifiers: Vec<TrainedClassifier>,
    pub curves: Vec<CalibrationCurve>,
}

impl MetaKnowledgeStore {
    /// Row-count and layout consistency; called on every load.
    pub fn validate(&self) -> Result<()> {
        if self.version != STORE_VERSION {
            return Err(Error::VersionMismatch {
                found: self.version,
                expected: STORE_VERSION,
            });
        }
        let j = self.task_ids.len();
        let bad = |reason: String| Error::Config {
            key: "store".into(),
            reason,
        };
        if self.features.len() != j || self.labels.len() != j {
            return Err(bad(format!(
                "{j} task ids but {} feature rows and {} labels",
                self.features.len(),
                self.labels.len()
            )));
        }
        if self.z.n_models() != MODEL_COUNT || self.z.rows.iter().any(|r| r.len() != j) {
            return Err(bad("error matrix shape does not match the task list".into()));
        }
        if self.split.total() != j {
            return Err(bad(format!(
                "split covers {} tasks, store holds {j}",
                self.split.total()
            )));
        }
        let kinds: Vec<ClassifierKind> = self.classifiers.iter().map(|c| c.kind).collect();
        let curve_kinds: Vec<ClassifierKind> = self.curves.iter().map(|c| c.kind).collect();
        if kinds != ClassifierKind::ALL || curve_kinds != ClassifierKind::ALL {
            return Err(bad("expected one classifier and one curve per kind".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.validate()?;
        fs::write(path, self.to_json()?).map_err(|e| Error::from(e).at_path(path))?;
        Ok(())
    }

    /// Loads and validates. A wrong version is reported as such even when
    /// the rest of the document no longer parses.
    pub fn load(path: &Path) -> Result<MetaKnowledgeStore> {
        let text = fs::read_to_string(path).map_err(|e| Error::from(e).at_path(path))?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        match value.get("version").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(STORE_VERSION) => {}
            Some(v) => {
                return Err(Error::VersionMismatch {
                    found: v as u32,
                    expected: STORE_VERSION,
                })
            }
            None => {
                return Err(Error::Config {
                    key: "store".into(),
                    reason: "document has no version field".into(),
                })
            }
        }
        let store: MetaKnowledgeStore = serde_json::from_value(value)?;
        store.validate()?;
        Ok(store)
    }
}

/// Classifier and curve fitting on already-labeled rows. Split, training
/// and calibration all derive from `seed`. Bins shrink on small corpora so
/// calibration keeps its five-outcomes-per-bin floor.
pub fn assemble_store(
    task_ids: Vec<String>,
    features: Vec<FeatureVector>,
    labels: Vec<ModelId>,
    z: ErrorMatrix,
    hyper: &MetaHyper,
    seed: u64,
) -> Result<MetaKnowledgeStore> {
    let j = task_ids.len();
    if features.len() != j || labels.len() != j {
        return Err(Error::LengthMismatch {
            left: j,
            right: features.len().min(labels.len()),
        });
    }
    let split = split_corpus(j, mix(seed, 1))?;

    let gather = |idx: &[usize]| -> (Vec<FeatureVector>, Vec<ModelId>) {
        (
            idx.iter().map(|&i| features[i]).collect(),
            idx.iter().map(|&i| labels[i]).collect(),
        )
    };
    let (f_train, phi_train) = gather(&split.training);
    let (f_val, phi_val) = gather(&split.validation);

    let classifiers = ClassifierKind::ALL
        .iter()
        .enumerate()
        .map(|(i, &kind)| train(kind, &f_train, &phi_train, hyper, mix(seed, 2 + i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let n_bins = (f_val.len() / 5).clamp(1, DEFAULT_CALIBRATION_BINS);
    let curves = classifiers
        .iter()
        .map(|clf| fit_calibration(clf, &f_val, &phi_val, n_bins))
        .collect::<Result<Vec<_>>>()?;

    let store = MetaKnowledgeStore {
        version: STORE_VERSION,
        seed,
        task_ids,
        features,
        labels,
        z,
        split,
        classifiers,
        curves,
    };
    store.validate()?;
    Ok(store)
}

/// A trained store plus the tasks that fell out of the pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub store: MetaKnowledgeStore,
    /// (task id, reason) for tasks that failed labeling or featurization.
    pub failures: Vec<(String, String)>,
}

/// Full offline pipeline: tournament labeling, feature extraction, corpus
/// split, classifier training, calibration. Tasks that cannot be labeled
/// or featurized are reported, not fatal.
pub fn train_store(
    tasks: &[LfTask],
    cfg: &ZooConfig,
    hyper: &MetaHyper,
    seed: u64,
) -> Result<TrainOutcome> {
    let labeled = label_corpus(tasks, mix(seed, 1), cfg)?;
    let mut failures = labeled.failures.clone();

    let by_id: std::collections::HashMap<&str, &LfTask> =
        tasks.iter().map(|t| (t.id.as_str(), t)).collect();
    let extracted: Vec<(usize, Result<FeatureVector>)> = labeled
        .task_ids
        .par_iter()
        .enumerate()
        .map(|(i, id)| (i, extract_features(by_id[id.as_str()])))
        .collect();

    let mut kept = Vec::new();
    let mut features = Vec::new();
    for (i, fv) in extracted {
        match fv {
            Ok(f) => {
                kept.push(i);
                features.push(f);
            }
            Err(e) => failures.push((labeled.task_ids[i].clone(), e.to_string())),
        }
    }
    let task_ids: Vec<String> = kept.iter().map(|&i| labeled.task_ids[i].clone()).collect();
    let labels: Vec<ModelId> = kept.iter().map(|&i| labeled.labels[i].phi).collect();
    let z = ErrorMatrix {
        rows: labeled
            .z
            .rows
            .iter()
            .map(|row| kept.iter().map(|&i| row[i]).collect())
            .collect(),
    };

    let store = assemble_store(task_ids, features, labels, z, hyper, mix(seed, 2))?;
    Ok(TrainOutcome { store, failures })
}

/// Benchmark a loaded store against its own corpus tasks, already aligned
/// to store row order (see [`align_tasks`]). The evaluation seed derives
/// from the store's seed, so a persisted store always reproduces the same
/// report regardless of caller-side seeding.
pub fn benchmark_store(
    store: &MetaKnowledgeStore,
    tasks: &[LfTask],
    cfg: &ZooConfig,
) -> Result<BenchmarkReport> {
    store.validate()?;
    benchmark(
        tasks,
        &store.features,
        &store.task_ids,
        &store.labels,
        &store.z,
        &store.split,
        &store.classifiers,
        &store.curves,
        cfg,
        mix(store.seed, 3),
    )
}

/// Online path: feature extraction plus forward classifier and curve
/// evaluation only — no model is fitted. Infeasible candidates are masked
/// out of the ranking.
pub fn recommend(
    store: &MetaKnowledgeStore,
    task: &LfTask,
    k: usize,
    cfg: &ZooConfig,
) -> Result<Recommendation> {
    if !(1..=MODEL_COUNT).contains(&k) {
        return Err(Error::Config {
            key: "k".into(),
            reason: format!("{k} not in 1..={MODEL_COUNT}"),
        });
    }
    let f = extract_features(task)?;
    let profile = TaskProfile::of(task);
    let mask = feasibility_mask(task, cfg, &profile);
    if !mask.iter().any(|&m| m) {
        return Err(Error::AllInfeasible {
            task: task.id.clone(),
        });
    }
    let scores: Vec<ScoreVector> = store
        .classifiers
        .iter()
        .map(|c| predict_scores(c, &f))
        .collect();
    Ok(rank(&scores, &store.curves, k, Some(&mask)))
}

fn load_type_name(t: LoadType) -> &'static str {
    match t {
        LoadType::Residential => "residential",
        LoadType::Commercial => "commercial",
    }
}

/// Writes `index.csv` plus `tasks/<id>.csv` and `tasks/<id>.toml` for every
/// task. Existing files are overwritten; nothing else in the directory is
/// touched. Output bytes are a pure function of the task list.
pub fn write_corpus(dir: &Path, tasks: &[LfTask]) -> Result<()> {
    let task_dir = dir.join("tasks");
    fs::create_dir_all(&task_dir)?;

    let mut index = fs::File::create(dir.join("index.csv"))?;
    writeln!(index, "# grid constraints applied by the generator:")?;
    for note in constraint_notes() {
        writeln!(index, "# {note}")?;
    }
    let mut w = csv::Writer::from_writer(index);
    w.write_record([
        "id",
        "n_customers",
        "load_type",
        "n_weather",
        "history_days",
        "horizon_hours",
        "granularity_hours",
    ])
    .map_err(csv_to_error)?;
    for task in tasks {
        let r = &task.requirements;
        w.write_record([
            task.id.as_str(),
            &r.n_customers.to_string(),
            load_type_name(r.load_type),
            &r.n_weather.to_string(),
            &r.history_days.to_string(),
            &r.horizon_hours.to_string(),
            &r.granularity_hours.to_string(),
        ])
        .map_err(csv_to_error)?;
        write_task_csv(&task_dir.join(format!("{}.csv", task.id)), &task.load, &task.weather)?;
        let manifest = toml::to_string(&task.requirements).map_err(|e| Error::Config {
            key: "requirements".into(),
            reason: e.to_string(),
        })?;
        fs::write(task_dir.join(format!("{}.toml", task.id)), manifest)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a corpus directory back into tasks, in index order. The manifest
/// is authoritative for requirements; the data file for series content.
pub fn read_corpus(dir: &Path) -> Result<Vec<LfTask>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(dir.join("index.csv"))
        .map_err(|e| csv_to_error(e).at_path(&dir.join("index.csv")))?;
    let ids: Vec<String> = reader
        .records()
        .map(|r| {
            r.map_err(csv_to_error).and_then(|rec| {
                rec.get(0)
                    .map(str::to_owned)
                    .ok_or_else(|| Error::MalformedRow {
                        line: 0,
                        reason: "index row without id".into(),
                    })
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if ids.is_empty() {
        return Err(Error::EmptyFile);
    }

    let task_dir = dir.join("tasks");
    ids.par_iter()
        .map(|id| {
            let manifest_path = task_dir.join(format!("{id}.toml"));
            let manifest = fs::read_to_string(&manifest_path)
                .map_err(|e| Error::from(e).at_path(&manifest_path))?;
            let requirements: TaskRequirements =
                toml::from_str(&manifest).map_err(|e| Error::Config {
                    key: format!("{id}.toml"),
                    reason: e.to_string(),
                })?;
            let csv_path = task_dir.join(format!("{id}.csv"));
            let (load, weather) = ingest_csv(&csv_path).map_err(|e| e.at_path(&csv_path))?;
            LfTask::new(id.clone(), load, weather, requirements)
        })
        .collect()
}

/// Reads one task from its data CSV and requirements manifest. The id is
/// taken from the data file's stem.
pub fn read_task(csv_path: &Path, manifest_path: &Path) -> Result<LfTask> {
    let id = csv_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("task")
        .to_owned();
    let manifest =
        fs::read_to_string(manifest_path).map_err(|e| Error::from(e).at_path(manifest_path))?;
    let requirements: TaskRequirements = toml::from_str(&manifest).map_err(|e| Error::Config {
        key: manifest_path.display().to_string(),
        reason: e.to_string(),
    })?;
    let (load, weather) = ingest_csv(csv_path).map_err(|e| e.at_path(csv_path))?;
    LfTask::new(id, load, weather, requirements)
}

/// Reorders corpus tasks to match a store's row order. Fails when the
/// store references a task the corpus no longer contains.
pub fn align_tasks(task_ids: &[String], tasks: Vec<LfTask>) -> Result<Vec<LfTask>> {
    let mut by_id: std::collections::HashMap<String, LfTask> =
        tasks.into_iter().map(|t| (t.id.clone(), t)).collect();
    task_ids
        .iter()
        .map(|id| {
            by_id.remove(id).ok_or_else(|| Error::Config {
                key: "corpus".into(),
                reason: format!("store references task {id} missing from the corpus"),
            })
        })
        .collect()
}

fn csv_to_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::MalformedRow {
            line: 0,
            reason: format!("{other:?}"),
        },
    }
}
