//! Interactive construction of structured queries over a knowledge graph.
//!
//! A question is shallow-parsed into nuggets, linked to KG elements, and
//! turned into a space of candidate queries with probabilities. The
//! interaction engine then asks yes/no questions chosen by Option Gain until
//! the intended query is on top.

pub mod builder;
pub mod canonical;
pub mod engine;
pub mod harness;
pub mod interaction;
pub mod kg;
pub mod linkers;
pub mod pipeline;
pub mod query;
pub mod sparql;
pub mod text;
pub mod verbalize;

pub use canonical::{canonical_id, canonicalize};
pub use engine::{Engine, InteractiveMode, StartedSession};
pub use harness::{
    compute_metrics, evaluate, load_dataset, nib_cost, sib_cost, simulate_oracle, EvalQuestion, InteractionTrace,
    MetricsReport, Mode,
};
pub use interaction::{
    entropy, generate_options, information_gain, option_gain, option_probability, Decision, EngineError,
    InteractionOption, OptionCategory, SessionSettings, SessionState, SessionStatus,
};
pub use kg::{KgError, KnowledgeGraph, Term, Triple, Vocabulary};
pub use linkers::Lexicon;
pub use pipeline::{
    run_pipeline, Cqi, InformationNugget, InterpretationSpace, KgElement, NuggetInterpretation, Pipeline,
    PipelineConfig, PipelineRun, UserQuestion,
};
pub use query::{execute_query, AnswerSet, AnswerType, PatternTerm, QueryGraph, TriplePattern};
pub use sparql::{parse_sparql, to_sparql};
pub use verbalize::verbalize_cqi;
