//! End-to-end Task A / Task B runs.
//!
//! Task A trains one binary misogyny classifier. Task B reuses it as a
//! gate: tweets predicted non-misogynous get `(0, 0, 0)`, the rest get a
//! category from a one-vs-rest model and a target from a binary model,
//! both trained on the gold-misogynous training tweets only.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{self, Category, Dataset, LoadMode, Prediction, Target};
use crate::error::{Error, Result};
use crate::evaluation::{task_b_score, ScoreReport, TaskBReport, TaskBScope};
use crate::features::{
    EnabledBlocks, FeatureMatrix, Featurizer, SentenceEmbeddingStore, TfidfOptions, WordEmbeddingTable, SENTENCE_DIM,
    WORD_DIM,
};
use crate::models::persist::{from_envelope_str, to_envelope_string};
use crate::models::{train_multiclass, BinaryModel, EngineConfig, GbdtConfig, LrConfig, MulticlassModel};
use crate::preprocess::{preprocess, PreprocessConfig, StageToggles, TokenSequence};

pub const SYSTEM_FORMAT: &str = "ami-system";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Task {
    #[default]
    #[serde(rename = "A", alias = "a")]
    A,
    #[serde(rename = "B", alias = "b")]
    B,
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "A" | "a" => Ok(Task::A),
            "B" | "b" => Ok(Task::B),
            other => Err(format!("unknown task `{other}` (expected A or B)")),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::A => "A",
            Task::B => "B",
        })
    }
}

/// Everything that determines a trained system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SystemSettings {
    pub task: Task,
    pub blocks: EnabledBlocks,
    pub tfidf: TfidfOptions,
    pub stages: StageToggles,
    /// Task A (and Task B gate) engine.
    pub engine: EngineConfig,
    /// Task B engines; default to `engine`.
    pub category_engine: Option<EngineConfig>,
    pub target_engine: Option<EngineConfig>,
}

impl Default for SystemSettings {
    fn default() -> Self {
        SystemSettings {
            task: Task::A,
            blocks: EnabledBlocks::default(),
            tfidf: TfidfOptions::default(),
            stages: StageToggles::default(),
            engine: EngineConfig::Logreg(LrConfig::default()),
            category_engine: None,
            target_engine: None,
        }
    }
}

/// Named engine presets accepted on the command line.
pub fn engine_preset(name: &str) -> Option<EngineConfig> {
    match name {
        "lr" | "logreg" => Some(EngineConfig::Logreg(LrConfig::default())),
        "gbdt" | "xgb" | "xgb-like" => Some(EngineConfig::Gbdt(GbdtConfig::xgb_like())),
        "cb" | "cb-like" => Some(EngineConfig::Gbdt(GbdtConfig::cb_like())),
        _ => None,
    }
}

/// Pretrained vectors for one split.
#[derive(Debug, Clone, Copy, Default)]
pub struct Embeddings<'a> {
    pub words: Option<&'a WordEmbeddingTable>,
    pub sentences: Option<&'a SentenceEmbeddingStore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedSystem {
    pub settings: SystemSettings,
    pub featurizer: Featurizer,
    pub gate: BinaryModel,
    pub category: Option<MulticlassModel>,
    /// Probability of an active target.
    pub target: Option<BinaryModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub misogynous: bool,
    pub category: Category,
    pub target: Target,
    pub p_misogynous: f64,
    /// Per-class probabilities in `Category::ALL` order, for gated tweets.
    pub category_probabilities: Option<Vec<f64>>,
    pub p_active: Option<f64>,
}

impl PredictionRecord {
    pub fn to_prediction(&self) -> Prediction {
        Prediction {
            id: self.id.clone(),
            misogynous: self.misogynous,
            category: self.category,
            target: self.target,
        }
    }
}

pub fn tokenize_dataset(d: &Dataset, config: &PreprocessConfig) -> Vec<TokenSequence> {
    d.tweets
        .par_iter()
        .map(|t| preprocess(&t.id, &t.text, config))
        .collect()
}

fn preprocess_config(stages: StageToggles) -> PreprocessConfig {
    let mut c = PreprocessConfig::default();
    c.stages = stages;
    c
}

fn word_dim(e: &Embeddings) -> usize {
    e.words.map_or(WORD_DIM, WordEmbeddingTable::dim)
}

fn sentence_dim(e: &Embeddings) -> usize {
    e.sentences.map_or(SENTENCE_DIM, SentenceEmbeddingStore::dim)
}

pub fn train_system(train: &Dataset, emb: Embeddings, settings: &SystemSettings) -> Result<TrainedSystem> {
    if !train.has_labels {
        return Err(Error::Unlabeled);
    }
    let pre = preprocess_config(settings.stages);
    let seqs = tokenize_dataset(train, &pre);
    let featurizer = Featurizer::fit(
        &seqs,
        settings.blocks,
        settings.tfidf,
        word_dim(&emb),
        sentence_dim(&emb),
    )?;
    let x = featurizer.featurize_all(&seqs, emb.words, emb.sentences)?;
    let y: Vec<bool> = train.tweets.iter().map(|t| t.misogynous).collect();
    log::info!(
        "training task A gate on {} tweets x {} features",
        x.n_rows(),
        x.n_cols()
    );
    let gate = BinaryModel::train(&x, &y, &settings.engine)?;

    let (category, target) = match settings.task {
        Task::A => (None, None),
        Task::B => {
            let (c, t) = train_stage_two(train, &x, settings)?;
            (Some(c), Some(t))
        }
    };
    Ok(TrainedSystem {
        settings: settings.clone(),
        featurizer,
        gate,
        category,
        target,
    })
}

fn train_stage_two(
    train: &Dataset,
    x: &FeatureMatrix,
    settings: &SystemSettings,
) -> Result<(MulticlassModel, BinaryModel)> {
    let rows: Vec<usize> = (0..train.len())
        .filter(|&i| train.tweets[i].misogynous && train.tweets[i].category != Category::None)
        .collect();
    let xm = x.select(&rows);
    let cat_labels: Vec<String> = Category::ALL.iter().map(|c| c.to_string()).collect();
    let y_cat: Vec<usize> = rows
        .iter()
        .map(|&i| {
            let c = train.tweets[i].category;
            Category::ALL
                .iter()
                .position(|&k| k == c)
                .expect("misogynous rows carry a category")
        })
        .collect();
    let cat_engine = settings.category_engine.as_ref().unwrap_or(&settings.engine);
    let tgt_engine = settings.target_engine.as_ref().unwrap_or(&settings.engine);
    log::info!("training task B stage two on {} misogynous tweets", rows.len());
    let category = train_multiclass(&xm, &y_cat, &cat_labels, cat_engine)?;
    let y_active: Vec<bool> = rows.iter().map(|&i| train.tweets[i].target == Target::Active).collect();
    let target = if y_active.iter().all(|&a| a) || y_active.iter().all(|&a| !a) {
        BinaryModel::Constant {
            probability: if y_active[0] { 1.0 } else { 0.0 },
            fingerprint: xm.fingerprint().to_string(),
        }
    } else {
        BinaryModel::train(&xm, &y_active, tgt_engine)?
    };
    Ok((category, target))
}

impl TrainedSystem {
    pub fn featurize(&self, d: &Dataset, emb: Embeddings) -> Result<FeatureMatrix> {
        let seqs = tokenize_dataset(d, &preprocess_config(self.settings.stages));
        self.featurizer.featurize_all(&seqs, emb.words, emb.sentences)
    }

    pub fn predict(&self, d: &Dataset, emb: Embeddings) -> Result<Vec<PredictionRecord>> {
        let x = self.featurize(d, emb)?;
        d.tweets
            .par_iter()
            .zip(x.rows().par_iter())
            .map(|(tweet, row)| {
                let p = self.gate.predict_proba(row)?;
                let mut rec = PredictionRecord {
                    id: tweet.id.clone(),
                    misogynous: p >= 0.5,
                    category: Category::None,
                    target: Target::None,
                    p_misogynous: p,
                    category_probabilities: None,
                    p_active: None,
                };
                if let (true, Some(cat), Some(tgt)) = (rec.misogynous, &self.category, &self.target) {
                    let probs = cat.predict_proba(row)?;
                    rec.category = Category::ALL[crate::models::multiclass::argmax(&probs)];
                    let pa = tgt.predict_proba(row)?;
                    rec.target = if pa >= 0.5 { Target::Active } else { Target::Passive };
                    rec.category_probabilities = Some(probs);
                    rec.p_active = Some(pa);
                }
                Ok(rec)
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let fp = self.featurizer.layout()?.fingerprint.clone();
        let engine = format!("task-{}", self.settings.task).to_lowercase();
        to_envelope_string(SYSTEM_FORMAT, &engine, &fp, self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let (_, system): (String, TrainedSystem) = from_envelope_str(text, SYSTEM_FORMAT)?;
        Ok(system)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Task A accuracy report over labelled test tweets.
pub fn score_task_a(test: &Dataset, predictions: &[PredictionRecord]) -> Result<ScoreReport> {
    let label = |m: bool| if m { "misogynous" } else { "not_misogynous" };
    let gold: Vec<&str> = test.tweets.iter().map(|t| label(t.misogynous)).collect();
    let pred: Vec<&str> = predictions.iter().map(|p| label(p.misogynous)).collect();
    ScoreReport::new(&gold, &pred, &["not_misogynous", "misogynous"])
}

pub fn score_task_b(test: &Dataset, predictions: &[PredictionRecord], scope: TaskBScope) -> Result<TaskBReport> {
    let gold: Vec<(Category, Target)> = test.tweets.iter().map(|t| (t.category, t.target)).collect();
    let pred: Vec<(Category, Target)> = predictions.iter().map(|p| (p.category, p.target)).collect();
    task_b_score(&gold, &pred, scope)
}

/// File-level description of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub train: PathBuf,
    pub test: Option<PathBuf>,
    pub word_embeddings: Option<PathBuf>,
    pub train_sentence_embeddings: Option<PathBuf>,
    pub test_sentence_embeddings: Option<PathBuf>,
    /// Hold out this fraction of the training file when no test file is given.
    pub validation_fraction: Option<f64>,
    pub seed: u64,
    pub lenient: bool,
    pub scope: TaskBScope,
    pub system: SystemSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            train: PathBuf::new(),
            test: None,
            word_embeddings: None,
            train_sentence_embeddings: None,
            test_sentence_embeddings: None,
            validation_fraction: None,
            seed: 7,
            lenient: false,
            scope: TaskBScope::default(),
            system: SystemSettings::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub system: TrainedSystem,
    pub predictions: Vec<PredictionRecord>,
    pub task_a: Option<ScoreReport>,
    pub task_b: Option<TaskBReport>,
}

impl RunOutput {
    pub fn run_file(&self) -> String {
        let preds: Vec<Prediction> = self.predictions.iter().map(PredictionRecord::to_prediction).collect();
        corpus::render_run_file(&preds)
    }
}

/// Loaded inputs of a run.
pub struct RunInputs {
    pub train: Dataset,
    pub test: Dataset,
    pub words: Option<WordEmbeddingTable>,
    pub train_sentences: Option<SentenceEmbeddingStore>,
    pub test_sentences: Option<SentenceEmbeddingStore>,
}

impl RunConfig {
    fn mode(&self) -> LoadMode {
        if self.lenient {
            LoadMode::Lenient
        } else {
            LoadMode::Strict
        }
    }

    /// Loads a test file, labelled if its header carries the label columns.
    pub fn load_eval_dataset(&self, path: &Path) -> Result<Dataset> {
        match Dataset::load(path, true, self.mode()) {
            Ok((d, _)) => Ok(d),
            Err(Error::Parse { line: 1, .. }) => Dataset::load(path, false, self.mode()).map(|(d, _)| d),
            Err(e) => Err(e),
        }
    }

    pub fn load_inputs(&self) -> Result<RunInputs> {
        let (full_train, _) = Dataset::load(&self.train, true, self.mode())?;
        let (train, test) = match (&self.test, self.validation_fraction) {
            (Some(p), _) => (full_train, self.load_eval_dataset(p)?),
            (None, Some(f)) => corpus::split(&full_train, f, self.seed)?,
            (None, None) => {
                return Err(Error::InvalidInput(
                    "a run needs a test file or a validation fraction".into(),
                ))
            }
        };
        let blocks = self.system.blocks;
        let words = match (&self.word_embeddings, blocks.bowv) {
            (Some(p), true) => Some(WordEmbeddingTable::load(p, WORD_DIM, self.lenient)?.0),
            (None, true) => {
                return Err(Error::InvalidInput(
                    "bowv block enabled but no word embeddings given".into(),
                ))
            }
            _ => None,
        };
        let load_sent = |p: &Option<PathBuf>, what: &str| -> Result<Option<SentenceEmbeddingStore>> {
            match (p, blocks.sentence) {
                (Some(p), true) => Ok(Some(SentenceEmbeddingStore::load(p, SENTENCE_DIM)?)),
                (None, true) => Err(Error::InvalidInput(format!(
                    "sentence block enabled but no {what} sentence embeddings given"
                ))),
                _ => Ok(None),
            }
        };
        let train_sentences = load_sent(&self.train_sentence_embeddings, "training")?;
        // a held-out split reuses the training store
        let test_sentences = if self.test.is_none() {
            train_sentences.clone()
        } else {
            load_sent(&self.test_sentence_embeddings, "test")?
        };
        Ok(RunInputs {
            train,
            test,
            words,
            train_sentences,
            test_sentences,
        })
    }
}

/// Trains on the loaded inputs, predicts the test side and scores it when
/// labels are available.
pub fn run(inputs: &RunInputs, settings: &SystemSettings, scope: TaskBScope) -> Result<RunOutput> {
    let train_emb = Embeddings {
        words: inputs.words.as_ref(),
        sentences: inputs.train_sentences.as_ref(),
    };
    let test_emb = Embeddings {
        words: inputs.words.as_ref(),
        sentences: inputs.test_sentences.as_ref(),
    };
    let system = train_system(&inputs.train, train_emb, settings)?;
    let predictions = system.predict(&inputs.test, test_emb)?;
    let task_a = inputs
        .test
        .has_labels
        .then(|| score_task_a(&inputs.test, &predictions))
        .transpose()?;
    let task_b = (inputs.test.has_labels && settings.task == Task::B)
        .then(|| score_task_b(&inputs.test, &predictions, scope))
        .transpose()?;
    Ok(RunOutput {
        system,
        predictions,
        task_a,
        task_b,
    })
}

pub fn run_task_a(cfg: &RunConfig) -> Result<RunOutput> {
    let settings = SystemSettings {
        task: Task::A,
        ..cfg.system.clone()
    };
    run(&cfg.load_inputs()?, &settings, cfg.scope)
}

pub fn run_task_b(cfg: &RunConfig) -> Result<RunOutput> {
    let settings = SystemSettings {
        task: Task::B,
        ..cfg.system.clone()
    };
    run(&cfg.load_inputs()?, &settings, cfg.scope)
}

/// Runs `f` on a dedicated pool of `threads` workers (`0` = rayon default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}
