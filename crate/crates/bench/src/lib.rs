//! Shared setup for the benchmarks: the fixture engine and dataset.

use std::path::PathBuf;
use std::sync::Arc;

use iqa_core::{load_dataset, Engine, EvalQuestion, KnowledgeGraph, Lexicon, PipelineConfig};

pub const RUNNING_EXAMPLE: &str = "List software that is written in C++ and runs on Mac OS.";

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn read(name: &str) -> String {
    let path = fixture(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn fixture_engine() -> Engine {
    let kg = KnowledgeGraph::from_tsv(&read("kg.tsv")).expect("fixture KG parses");
    let lexicon = Lexicon::from_json(&read("lex.json")).expect("fixture lexicon parses");
    Engine::new(Arc::new(kg), lexicon, PipelineConfig::default())
}

pub fn fixture_dataset(engine: &Engine) -> Vec<EvalQuestion> {
    load_dataset(&read("qs.json"), engine.kg().type_pred()).expect("fixture dataset parses")
}
