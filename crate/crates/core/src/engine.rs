//! A KG plus a configured pipeline, producing ready-to-run sessions.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::interaction::{SessionSettings, SessionState};
use crate::kg::KnowledgeGraph;
use crate::linkers::Lexicon;
use crate::pipeline::{Pipeline, PipelineConfig, PipelineRun};

/// Interactive modes. `Ig` ignores usability (omega forced to 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InteractiveMode {
    Og,
    Ig,
}

impl InteractiveMode {
    pub fn omega(self, configured: u32) -> u32 {
        match self {
            InteractiveMode::Og => configured,
            InteractiveMode::Ig => 0,
        }
    }
}

pub struct Engine {
    kg: Arc<KnowledgeGraph>,
    pipeline: Pipeline,
}

/// Pipeline output and the session built from it.
pub struct StartedSession {
    pub run: PipelineRun,
    pub state: SessionState,
}

impl Engine {
    pub fn new(kg: Arc<KnowledgeGraph>, lexicon: Lexicon, config: PipelineConfig) -> Self {
        Self {
            kg,
            pipeline: Pipeline::new(lexicon, config),
        }
    }

    pub fn with_pipeline(kg: Arc<KnowledgeGraph>, pipeline: Pipeline) -> Self {
        Self { kg, pipeline }
    }

    pub fn kg(&self) -> &KnowledgeGraph {
        &self.kg
    }

    pub fn config(&self) -> &PipelineConfig {
        self.pipeline.config()
    }

    pub fn run(&self, q_nl: &str) -> PipelineRun {
        self.pipeline.run(q_nl, &self.kg)
    }

    pub fn settings(&self, mode: InteractiveMode) -> SessionSettings {
        let config = self.pipeline.config();
        SessionSettings {
            omega: mode.omega(config.omega),
            max_interactions: config.max_interactions,
            superclass_depth: config.superclass_depth,
        }
    }

    pub fn start_session(&self, q_nl: &str, mode: InteractiveMode) -> StartedSession {
        let run = self.run(q_nl);
        let state = SessionState::new(run.question.clone(), run.qis.clone(), &self.kg, self.settings(mode));
        StartedSession { run, state }
    }
}
