//! Oracle-simulated evaluation: datasets, the truthful oracle, the two
//! non-interactive baselines, and metric aggregation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical::{canonicalize, CanonicalError};
use crate::engine::{Engine, InteractiveMode};
use crate::interaction::{option_applies, Decision, InteractionOption, OptionPayload, SessionState, SessionStatus};
use crate::kg::KnowledgeGraph;
use crate::pipeline::{Cqi, InterpretationSpace, KgElement, PipelineRun};
use crate::query::{AnswerType, PatternTerm, QueryError, QueryGraph, TriplePattern};

pub const MIN_CATEGORY: usize = 2;
pub const MAX_CATEGORY: usize = 5;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset JSON at {path}: {message}")]
    Json { path: String, message: String },
    #[error("question {question}: pattern {index} {message}")]
    Pattern {
        question: String,
        index: usize,
        message: String,
    },
    #[error("question {question}: {source}")]
    Query { question: String, source: QueryError },
    #[error("question {question}: {source}")]
    Canonical { question: String, source: CanonicalError },
}

#[derive(Debug, Deserialize)]
struct RawGold {
    triples: Vec<Vec<String>>,
    #[serde(default)]
    variables: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct RawQuestion {
    id: String,
    question: String,
    answer_type: AnswerType,
    gold: RawGold,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalQuestion {
    pub id: String,
    pub q_nl: String,
    pub gold_answer_type: AnswerType,
    pub gold_query: QueryGraph,
    pub complexity_category: usize,
    pub canonical: String,
}

/// Distinct non-variable subjects/objects plus distinct predicates other than
/// `rdf:type`, clamped to the category range.
pub fn complexity_category(qg: &QueryGraph, type_pred: &str) -> usize {
    let mut constants: BTreeSet<&PatternTerm> = BTreeSet::new();
    let mut properties: BTreeSet<&str> = BTreeSet::new();
    for p in qg.patterns() {
        for t in [&p.subject, &p.object] {
            if !t.is_var() {
                constants.insert(t);
            }
        }
        if let Some(pred) = p.predicate.as_iri() {
            if pred != type_pred {
                properties.insert(pred);
            }
        }
    }
    (constants.len() + properties.len()).clamp(MIN_CATEGORY, MAX_CATEGORY)
}

/// Parses a dataset: a JSON array of `{id, question, answer_type, gold}`.
pub fn load_dataset(source: &str, type_pred: &str) -> Result<Vec<EvalQuestion>, DatasetError> {
    let de = &mut serde_json::Deserializer::from_str(source);
    let raw: Vec<RawQuestion> = serde_path_to_error::deserialize(de).map_err(|e| DatasetError::Json {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    raw.into_iter()
        .map(|q| {
            for v in &q.gold.variables {
                if !v.starts_with('?') {
                    return Err(DatasetError::Json {
                        path: format!("{}.gold.variables", q.id),
                        message: format!("variable `{v}` must start with `?`"),
                    });
                }
            }
            let mut patterns = Vec::with_capacity(q.gold.triples.len());
            for (index, t) in q.gold.triples.iter().enumerate() {
                let [s, p, o] = t.as_slice() else {
                    return Err(DatasetError::Pattern {
                        question: q.id.clone(),
                        index,
                        message: format!("has {} terms, expected 3", t.len()),
                    });
                };
                let pattern = TriplePattern::parse(s, p, o);
                pattern.validate().map_err(|e| DatasetError::Pattern {
                    question: q.id.clone(),
                    index,
                    message: e.to_string(),
                })?;
                patterns.push(pattern);
            }
            let gold_query = QueryGraph::new(patterns).map_err(|source| DatasetError::Query {
                question: q.id.clone(),
                source,
            })?;
            let canonical = canonicalize(q.answer_type, &gold_query).map_err(|source| DatasetError::Canonical {
                question: q.id.clone(),
                source,
            })?;
            Ok(EvalQuestion {
                complexity_category: complexity_category(&gold_query, type_pred),
                id: q.id,
                q_nl: q.question,
                gold_answer_type: q.answer_type,
                gold_query,
                canonical,
            })
        })
        .collect()
}

/// Evaluation modes: two interactive, two baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Og,
    Ig,
    Nib,
    Sib,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Og, Mode::Ig, Mode::Nib, Mode::Sib];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Og => "og",
            Mode::Ig => "ig",
            Mode::Nib => "nib",
            Mode::Sib => "sib",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Mode::Og => "IQA-OG",
            Mode::Ig => "IQA-IG",
            Mode::Nib => "NIB-IQA",
            Mode::Sib => "SIB",
        }
    }

    pub fn interactive(self) -> Option<InteractiveMode> {
        match self {
            Mode::Og => Some(InteractiveMode::Og),
            Mode::Ig => Some(InteractiveMode::Ig),
            Mode::Nib | Mode::Sib => None,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown mode `{0}` (expected og, ig, nib or sib)")]
pub struct UnknownMode(pub String);

impl FromStr for Mode {
    type Err = UnknownMode;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "og" | "iqa-og" => Ok(Mode::Og),
            "ig" | "iqa-ig" => Ok(Mode::Ig),
            "nib" | "nib-iqa" => Ok(Mode::Nib),
            "sib" => Ok(Mode::Sib),
            _ => Err(UnknownMode(s.to_owned())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceStep {
    pub option_id: String,
    pub decision: Decision,
    pub qis_size_after: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InteractionTrace {
    pub question_id: String,
    pub mode: Mode,
    pub category: usize,
    /// Options considered, including the final accept; absent when the
    /// baseline cannot reach the intended query.
    pub cost: Option<usize>,
    /// The intended query was confirmed at top-1 under the mode's protocol.
    pub success: bool,
    /// The intended query was identified at all (for the ranked-list
    /// baseline, anywhere in the list). Cost statistics use these traces.
    pub identified: bool,
    /// The intended query was in the initial interpretation space.
    pub gold_in_space: bool,
    pub initial_qis_size: usize,
    pub final_cqi: Option<String>,
    pub steps: Vec<TraceStep>,
}

/// Whether an option holds for a gold query that is not in the space: C1 when
/// its target is a constant of the gold query, otherwise as for CQIs.
fn gold_satisfies(option: &InteractionOption, gold: &EvalQuestion, kg: &KnowledgeGraph, depth: usize) -> bool {
    if let OptionPayload::Nugget(ni) = &option.payload {
        return match &ni.target {
            KgElement::Property(p) => gold.gold_query.properties().contains(p),
            other => gold.gold_query.constants().contains(&other.as_term()),
        };
    }
    let pseudo = Cqi {
        id: String::new(),
        qi: Vec::new(),
        answer_type: gold.gold_answer_type,
        query_graph: gold.gold_query.clone(),
        probability: 0.0,
        canonical: gold.canonical.clone(),
    };
    option_applies(option, kg, &pseudo, depth)
}

/// Runs the truthful oracle over a session: accept the top CQI as soon as
/// `is_gold` holds for it, otherwise answer the best option with `truth`.
/// Stops when the session terminates or no option splits the space.
pub fn drive_oracle(
    state: &mut SessionState,
    is_gold: impl Fn(&Cqi) -> bool,
    truth: impl Fn(&InteractionOption) -> bool,
) -> Vec<TraceStep> {
    let mut steps = Vec::new();
    while !state.is_terminated() {
        let top_is_gold = state.top_cqi().is_some_and(&is_gold);
        let (option_id, decision) = if top_is_gold {
            ("top".to_owned(), Decision::AcceptCQI)
        } else {
            let Some(best) = state.select_best_option() else {
                state.terminate();
                break;
            };
            let decision = if truth(best) {
                Decision::AcceptIO
            } else {
                Decision::RejectIO
            };
            (best.id.clone(), decision)
        };
        state
            .apply_feedback(&option_id, decision)
            .expect("oracle answers live options of a running session");
        let recorded = state.history().last().expect("feedback appends history");
        steps.push(TraceStep {
            option_id: recorded.option_id.clone(),
            decision,
            qis_size_after: state.qis().len(),
        });
    }
    steps
}

/// Simulates the oracle user for one question in an interactive mode.
pub fn simulate_oracle(question: &EvalQuestion, engine: &Engine, mode: InteractiveMode) -> InteractionTrace {
    let started = engine.start_session(&question.q_nl, mode);
    let mut state = started.state;
    let depth = state.settings().superclass_depth;
    let gold_id = state.qis().find_canonical(&question.canonical).map(|c| c.id.clone());
    let initial_qis_size = state.qis().len();
    let kg = engine.kg();

    let steps = drive_oracle(
        &mut state,
        |cqi| cqi.canonical == question.canonical,
        |option| match &gold_id {
            Some(id) => option.subsumed.contains(id),
            None => gold_satisfies(option, question, kg, depth),
        },
    );
    let final_cqi = match state.status() {
        SessionStatus::AcceptedCqi(id) => Some(id.clone()),
        _ => None,
    };
    let success = final_cqi.is_some() && final_cqi == gold_id;
    InteractionTrace {
        question_id: question.id.clone(),
        mode: match mode {
            InteractiveMode::Og => Mode::Og,
            InteractiveMode::Ig => Mode::Ig,
        },
        category: question.complexity_category,
        cost: Some(state.interactions_used()),
        success,
        identified: success,
        gold_in_space: gold_id.is_some(),
        initial_qis_size,
        final_cqi,
        steps,
    }
}

/// 1-based rank of the gold query in the space.
pub fn nib_cost(qis: &InterpretationSpace, gold: &EvalQuestion) -> Option<usize> {
    qis.rank_of_canonical(&gold.canonical)
}

/// Sum over components of the 1-based rank of the gold candidate; absent
/// when some component lacks it.
pub fn sib_cost_from_components(components: &[Vec<String>], gold: &[String]) -> Option<usize> {
    assert_eq!(components.len(), gold.len(), "one gold candidate per component");
    components
        .iter()
        .zip(gold)
        .map(|(candidates, g)| candidates.iter().position(|c| c == g).map(|i| i + 1))
        .sum()
}

/// Component lists for the staged baseline: the entity candidates of each
/// nugget the gold CQI maps to an entity, then the relation candidates of each
/// nugget it maps to a property, then the CQIs consistent with those choices.
/// Absent when the gold query is not in the space.
pub fn sib_components(run: &PipelineRun, gold: &EvalQuestion) -> Option<(Vec<Vec<String>>, Vec<String>)> {
    let gold_cqi = run.qis.find_canonical(&gold.canonical)?;
    let mut entity_parts = Vec::new();
    let mut relation_parts = Vec::new();
    let mut chosen: BTreeMap<(usize, usize), &KgElement> = BTreeMap::new();
    let mut used = gold_cqi.qi.clone();
    used.sort_by_key(|ni| ni.nugget.span);
    for ni in &used {
        let idx = run.question.nuggets.iter().position(|n| n.span == ni.nugget.span)?;
        let is_relation = matches!(ni.target, KgElement::Property(_));
        let candidates: Vec<String> = run.links[idx]
            .iter()
            .filter(|c| matches!(c.target, KgElement::Property(_)) == is_relation)
            .map(|c| c.target.to_string())
            .collect();
        let part = (candidates, ni.target.to_string());
        if is_relation {
            relation_parts.push(part);
        } else {
            entity_parts.push(part);
        }
        chosen.insert(ni.nugget.span, &ni.target);
    }
    let consistent: Vec<String> = run
        .qis
        .cqis()
        .iter()
        .filter(|c| {
            c.qi.iter()
                .all(|ni| chosen.get(&ni.nugget.span).is_none_or(|t| **t == ni.target))
        })
        .map(|c| c.id.clone())
        .collect();
    let (mut components, mut golds): (Vec<Vec<String>>, Vec<String>) =
        entity_parts.into_iter().chain(relation_parts).unzip();
    components.push(consistent);
    golds.push(gold_cqi.id.clone());
    Some((components, golds))
}

pub fn sib_cost(run: &PipelineRun, gold: &EvalQuestion) -> Option<usize> {
    let (components, golds) = sib_components(run, gold)?;
    sib_cost_from_components(&components, &golds)
}

fn baseline_trace(question: &EvalQuestion, run: &PipelineRun, mode: Mode) -> InteractionTrace {
    let rank = nib_cost(&run.qis, question);
    let (cost, success) = match mode {
        Mode::Nib => (rank, rank == Some(1)),
        Mode::Sib => {
            let cost = sib_cost(run, question);
            (cost, cost.is_some())
        }
        Mode::Og | Mode::Ig => unreachable!("interactive modes are simulated"),
    };
    InteractionTrace {
        question_id: question.id.clone(),
        mode,
        category: question.complexity_category,
        cost,
        success,
        identified: cost.is_some(),
        gold_in_space: rank.is_some(),
        initial_qis_size: run.qis.len(),
        final_cqi: if success {
            run.qis.find_canonical(&question.canonical).map(|c| c.id.clone())
        } else {
            None
        },
        steps: Vec::new(),
    }
}

/// Traces for every question under every requested mode, ordered by mode then
/// dataset order.
pub fn evaluate(dataset: &[EvalQuestion], engine: &Engine, modes: &[Mode]) -> Vec<InteractionTrace> {
    let runs: Vec<Option<PipelineRun>> = if modes.iter().any(|m| m.interactive().is_none()) {
        dataset.iter().map(|q| Some(engine.run(&q.q_nl))).collect()
    } else {
        dataset.iter().map(|_| None).collect()
    };
    let mut sorted: Vec<Mode> = modes.to_vec();
    sorted.sort();
    sorted.dedup();
    let mut traces = Vec::new();
    for mode in sorted {
        for (q, run) in dataset.iter().zip(&runs) {
            traces.push(match mode.interactive() {
                Some(im) => simulate_oracle(q, engine, im),
                None => baseline_trace(q, run.as_ref().expect("computed for baselines"), mode),
            });
        }
    }
    traces
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupMetrics {
    pub n: usize,
    /// Fraction with the intended query anywhere in the initial space.
    pub success_rate: Option<f64>,
    /// Fraction where the intended query was identified at top-1.
    pub f1: Option<f64>,
    /// Number of questions contributing to the cost statistics.
    pub n_cost: usize,
    pub cost_mean: Option<f64>,
    /// Sample standard deviation.
    pub cost_std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeMetrics {
    pub title: String,
    pub overall: GroupMetrics,
    pub by_category: BTreeMap<String, GroupMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub n_questions: usize,
    pub modes: BTreeMap<String, ModeMetrics>,
}

pub fn mean_and_sample_std(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        None
    } else {
        Some((values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
    };
    (Some(mean), std)
}

fn group(traces: &[&InteractionTrace]) -> GroupMetrics {
    let n = traces.len();
    let frac = |count: usize| (n > 0).then(|| count as f64 / n as f64);
    let costs: Vec<f64> = traces
        .iter()
        .filter(|t| t.identified)
        .filter_map(|t| t.cost.map(|c| c as f64))
        .collect();
    let (cost_mean, cost_std) = mean_and_sample_std(&costs);
    GroupMetrics {
        n,
        success_rate: frac(traces.iter().filter(|t| t.gold_in_space).count()),
        f1: frac(traces.iter().filter(|t| t.success).count()),
        n_cost: costs.len(),
        cost_mean,
        cost_std,
    }
}

/// Aggregates traces per mode, overall and per complexity category (every
/// category in range is listed, empty ones with `n = 0`). Cost statistics
/// cover traces whose intended query was identified.
pub fn compute_metrics(traces: &[InteractionTrace], dataset: &[EvalQuestion]) -> MetricsReport {
    let known: BTreeSet<&str> = dataset.iter().map(|q| q.id.as_str()).collect();
    let mut per_mode: BTreeMap<Mode, Vec<&InteractionTrace>> = BTreeMap::new();
    for t in traces {
        assert!(
            known.contains(t.question_id.as_str()),
            "trace for unknown question {}",
            t.question_id
        );
        per_mode.entry(t.mode).or_default().push(t);
    }
    let modes = per_mode
        .into_iter()
        .map(|(mode, ts)| {
            let by_category = (MIN_CATEGORY..=MAX_CATEGORY)
                .map(|c| {
                    let in_cat: Vec<&InteractionTrace> = ts.iter().copied().filter(|t| t.category == c).collect();
                    (c.to_string(), group(&in_cat))
                })
                .collect();
            (
                mode.name().to_owned(),
                ModeMetrics {
                    title: mode.title().to_owned(),
                    overall: group(&ts),
                    by_category,
                },
            )
        })
        .collect();
    MetricsReport {
        n_questions: dataset.len(),
        modes,
    }
}
