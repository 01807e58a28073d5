//! Loading the KG, lexicon, stopwords and datasets from disk.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use iqa_core::harness::{load_dataset, DatasetError, EvalQuestion};
use iqa_core::kg::KgError;
use iqa_core::linkers::{Lexicon, LexiconError};
use iqa_core::{Engine, KnowledgeGraph, PipelineConfig};
use thiserror::Error;

/// Problems with input files. The CLI maps all of these to exit code 2.
#[derive(Debug, Error)]
pub enum InputError {
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Kg { path: PathBuf, source: KgError },
    #[error("{}: {source}", path.display())]
    Lexicon { path: PathBuf, source: LexiconError },
    #[error("{}: {source}", path.display())]
    Dataset { path: PathBuf, source: DatasetError },
    #[error("invalid configuration: {0}")]
    Config(String),
}

fn read(path: &Path) -> Result<String, InputError> {
    std::fs::read_to_string(path).map_err(|source| InputError::Read {
        path: path.to_owned(),
        source,
    })
}

pub fn load_kg(path: &Path) -> Result<KnowledgeGraph, InputError> {
    KnowledgeGraph::from_tsv(&read(path)?).map_err(|source| InputError::Kg {
        path: path.to_owned(),
        source,
    })
}

pub fn load_lexicon(path: &Path, stopwords: Option<&Path>) -> Result<Lexicon, InputError> {
    let lexicon = Lexicon::from_json(&read(path)?).map_err(|source| InputError::Lexicon {
        path: path.to_owned(),
        source,
    })?;
    match stopwords {
        None => Ok(lexicon),
        Some(sw) => lexicon
            .with_stopwords(Lexicon::parse_stopword_file(&read(sw)?))
            .map_err(|source| InputError::Lexicon {
                path: sw.to_owned(),
                source,
            }),
    }
}

pub fn load_questions(path: &Path, kg: &KnowledgeGraph) -> Result<Vec<EvalQuestion>, InputError> {
    load_dataset(&read(path)?, kg.type_pred()).map_err(|source| InputError::Dataset {
        path: path.to_owned(),
        source,
    })
}

/// Paths needed to build an engine.
#[derive(Debug, Clone)]
pub struct EngineInputs {
    pub kg: PathBuf,
    pub lexicon: PathBuf,
    pub stopwords: Option<PathBuf>,
}

pub fn build_engine(inputs: &EngineInputs, config: PipelineConfig) -> Result<Engine, InputError> {
    config.validate().map_err(|e| InputError::Config(e.to_string()))?;
    let kg = load_kg(&inputs.kg)?;
    let lexicon = load_lexicon(&inputs.lexicon, inputs.stopwords.as_deref())?;
    Ok(Engine::new(Arc::new(kg), lexicon, config))
}
