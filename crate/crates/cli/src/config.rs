//! TOML run configuration.
//!
//! Every key is optional and mirrors a command-line flag; flags win.
//! Relative paths are resolved against the directory of the config file.
//! Engine hyper-parameters go in `[lr]` and `[gbdt]` tables, which are
//! layered over the preset chosen by `engine`.

use std::fs;
use std::path::{Path, PathBuf};

use ami_core::features::{EnabledBlocks, TfidfOptions};
use ami_core::models::EngineConfig;
use ami_core::pipeline::engine_preset;
use ami_core::preprocess::StageToggles;
use anyhow::{bail, Context, Result};
use serde::Deserialize;

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub task: Option<String>,
    pub engine: Option<String>,
    pub category_engine: Option<String>,
    pub target_engine: Option<String>,
    pub blocks: Option<String>,
    pub data: Option<PathBuf>,
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub gold: Option<PathBuf>,
    pub run: Option<PathBuf>,
    pub word_embeddings: Option<PathBuf>,
    pub sentence_embeddings: Option<PathBuf>,
    pub train_sentence_embeddings: Option<PathBuf>,
    pub test_sentence_embeddings: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub probabilities: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub lenient: Option<bool>,
    pub scope: Option<String>,
    pub validation_fraction: Option<f64>,
    pub lr: Option<toml::Table>,
    pub gbdt: Option<toml::Table>,
    pub tfidf: Option<TfidfOptions>,
    pub stages: Option<StageToggles>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: FileConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        if let Some(dir) = path.parent() {
            cfg.resolve_paths(dir);
        }
        Ok(cfg)
    }

    fn resolve_paths(&mut self, dir: &Path) {
        for p in [
            &mut self.data,
            &mut self.train,
            &mut self.test,
            &mut self.gold,
            &mut self.run,
            &mut self.word_embeddings,
            &mut self.sentence_embeddings,
            &mut self.train_sentence_embeddings,
            &mut self.test_sentence_embeddings,
            &mut self.model,
            &mut self.output,
            &mut self.probabilities,
            &mut self.report,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
    }

    /// Builds an engine from a preset name plus this file's override table.
    pub fn engine(&self, name: &str) -> Result<EngineConfig> {
        let Some(preset) = engine_preset(name) else {
            bail!("unknown engine `{name}` (expected lr, gbdt or cb)");
        };
        let overrides = match &preset {
            EngineConfig::Logreg(_) => &self.lr,
            EngineConfig::Gbdt(_) => &self.gbdt,
        };
        let Some(overrides) = overrides else {
            return Ok(preset);
        };
        let mut table = toml::Table::try_from(&preset).context("serialising engine preset")?;
        for (k, v) in overrides {
            if !table.contains_key(k) {
                bail!("unknown {} option `{k}`", preset.name());
            }
            table.insert(k.clone(), v.clone());
        }
        toml::Value::Table(table)
            .try_into()
            .with_context(|| format!("invalid {} options", preset.name()))
    }
}

pub fn parse_blocks(spec: &str) -> Result<EnabledBlocks> {
    let mut blocks = EnabledBlocks {
        tfidf: false,
        bowv: false,
        sentence: false,
    };
    for name in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match name {
            "tfidf" => blocks.tfidf = true,
            "bowv" => blocks.bowv = true,
            "sentence" => blocks.sentence = true,
            other => bail!("unknown feature block `{other}` (expected tfidf, bowv or sentence)"),
        }
    }
    if blocks.kinds().is_empty() {
        bail!("at least one feature block must be enabled");
    }
    Ok(blocks)
}
