//! Question and interpretation data model, and the pipeline that turns a
//! natural-language question into an interpretation space.
//!
//! The pipeline is a shallow parser, a list of linkers whose outputs are
//! unioned per nugget, and the query builder. Linkers implement [`Linker`] so
//! other stages can be slotted in.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::builder::{
    assemble_qis, cqi_probability, enumerate_query_graphs, structural_score, CandidateAssignment, ScoredCqi,
};
use crate::canonical::canonicalize;
use crate::kg::{KnowledgeGraph, Term};
use crate::linkers::{link_entities, link_relations, shallow_parse, Lexicon, LinkCandidate};
use crate::query::{AnswerType, QueryGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NuggetKind {
    EntityLike,
    RelationLike,
    Unknown,
}

/// A surface-form span of the question. `span` holds character offsets.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct InformationNugget {
    pub surface: String,
    pub span: (usize, usize),
    pub kind: NuggetKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserQuestion {
    pub q_nl: String,
    pub nuggets: Vec<InformationNugget>,
}

impl UserQuestion {
    pub fn new(q_nl: impl Into<String>, nuggets: Vec<InformationNugget>) -> Self {
        Self {
            q_nl: q_nl.into(),
            nuggets,
        }
    }

    pub fn nugget_at(&self, span: (usize, usize)) -> Option<&InformationNugget> {
        self.nuggets.iter().find(|n| n.span == span)
    }
}

/// The KG element a nugget is mapped to.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "lowercase")]
pub enum KgElement {
    Entity(String),
    Property(String),
    Literal(String),
}

impl KgElement {
    pub fn id(&self) -> &str {
        match self {
            KgElement::Entity(id) | KgElement::Property(id) | KgElement::Literal(id) => id,
        }
    }

    pub fn as_term(&self) -> Term {
        match self {
            KgElement::Entity(id) | KgElement::Property(id) => Term::Iri(id.clone()),
            KgElement::Literal(v) => Term::Literal(v.clone()),
        }
    }
}

impl fmt::Display for KgElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KgElement::Literal(v) => write!(f, "\"{v}\""),
            other => f.write_str(other.id()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuggetInterpretation {
    pub nugget: InformationNugget,
    pub target: KgElement,
    pub confidence: f64,
    pub producer: String,
}

impl NuggetInterpretation {
    /// Identity of the mapping, independent of confidence and producer.
    pub fn key(&self) -> String {
        format!("{}:{}:{}", self.nugget.span.0, self.nugget.span.1, self.target)
    }
}

/// A complete question interpretation `(QI, AT, QG)` with its probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cqi {
    pub id: String,
    pub qi: Vec<NuggetInterpretation>,
    pub answer_type: AnswerType,
    pub query_graph: QueryGraph,
    pub probability: f64,
    pub canonical: String,
}

impl Cqi {
    pub fn contains_interpretation(&self, key: &str) -> bool {
        self.qi.iter().any(|ni| ni.key() == key)
    }
}

/// Candidate CQIs with a normalized distribution, sorted by descending
/// probability with ties broken by id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InterpretationSpace {
    cqis: Vec<Cqi>,
}

impl InterpretationSpace {
    /// Normalizes probabilities to sum to one and sorts. Non-positive totals
    /// fall back to a uniform distribution.
    pub fn from_cqis(mut cqis: Vec<Cqi>) -> Self {
        let total: f64 = cqis.iter().map(|c| c.probability).sum();
        let n = cqis.len() as f64;
        for c in &mut cqis {
            c.probability = if total > 0.0 { c.probability / total } else { 1.0 / n };
        }
        cqis.sort_by(|a, b| b.probability.total_cmp(&a.probability).then_with(|| a.id.cmp(&b.id)));
        Self { cqis }
    }

    pub fn cqis(&self) -> &[Cqi] {
        &self.cqis
    }

    pub fn len(&self) -> usize {
        self.cqis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cqis.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Cqi> {
        self.cqis.iter().find(|c| c.id == id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.get(id).is_some()
    }

    pub fn ids(&self) -> BTreeSet<String> {
        self.cqis.iter().map(|c| c.id.clone()).collect()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.cqis.iter().map(|c| c.probability).collect()
    }

    pub fn top(&self) -> Option<&Cqi> {
        self.cqis.first()
    }

    pub fn find_canonical(&self, canonical: &str) -> Option<&Cqi> {
        self.cqis.iter().find(|c| c.canonical == canonical)
    }

    /// 1-based rank of the CQI with this canonical form.
    pub fn rank_of_canonical(&self, canonical: &str) -> Option<usize> {
        self.cqis.iter().position(|c| c.canonical == canonical).map(|i| i + 1)
    }

    /// Keeps only the given ids and renormalizes.
    pub fn restrict(&self, keep: &BTreeSet<String>) -> Self {
        Self::from_cqis(self.cqis.iter().filter(|c| keep.contains(&c.id)).cloned().collect())
    }

    pub fn truncate(&self, max: usize) -> Self {
        Self::from_cqis(self.cqis.iter().take(max).cloned().collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub max_entity_candidates_per_nugget: usize,
    pub max_relation_candidates_per_nugget: usize,
    pub max_cqis: usize,
    /// Exponent on usability in Option Gain.
    pub omega: u32,
    pub max_interactions: usize,
    pub superclass_depth: usize,
    pub max_graphs_per_assignment: usize,
    pub max_assignments: usize,
    /// Restrict relation candidates to properties incident to linked entities.
    pub restrict_relations_to_context: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            max_entity_candidates_per_nugget: 3,
            max_relation_candidates_per_nugget: 3,
            max_cqis: 200,
            omega: 1,
            max_interactions: 10,
            superclass_depth: 2,
            max_graphs_per_assignment: 64,
            max_assignments: 4096,
            restrict_relations_to_context: true,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("pipeline config field `{0}` must be positive")]
pub struct ConfigError(pub &'static str);

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let checks = [
            (
                self.max_entity_candidates_per_nugget,
                "max_entity_candidates_per_nugget",
            ),
            (
                self.max_relation_candidates_per_nugget,
                "max_relation_candidates_per_nugget",
            ),
            (self.max_cqis, "max_cqis"),
            (self.max_interactions, "max_interactions"),
            (self.superclass_depth, "superclass_depth"),
            (self.max_graphs_per_assignment, "max_graphs_per_assignment"),
            (self.max_assignments, "max_assignments"),
        ];
        match checks.iter().find(|(v, _)| *v == 0) {
            Some((_, name)) => Err(ConfigError(name)),
            None => Ok(()),
        }
    }
}

/// `(s - min) / (max - min)`; a constant list maps to all ones.
///
/// # Panics
/// On an empty slice.
pub fn min_max_normalize(scores: &[f64]) -> Vec<f64> {
    assert!(!scores.is_empty(), "min_max_normalize on empty list");
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == min {
        return vec![1.0; scores.len()];
    }
    scores.iter().map(|s| (s - min) / (max - min)).collect()
}

/// Numerically stable softmax.
///
/// # Panics
/// On an empty slice.
pub fn softmax_normalize(scores: &[f64]) -> Vec<f64> {
    assert!(!scores.is_empty(), "softmax_normalize on empty list");
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// A linking stage: maps nuggets to KG elements, optionally using the
/// interpretations produced by earlier linkers.
pub trait Linker: Send + Sync {
    fn name(&self) -> &'static str;

    fn link(
        &self,
        question: &UserQuestion,
        prior: &[NuggetInterpretation],
        kg: &KnowledgeGraph,
    ) -> Vec<NuggetInterpretation>;
}

fn interpretations_from(
    nugget: &InformationNugget,
    candidates: Vec<LinkCandidate>,
    make: impl Fn(String) -> KgElement,
    producer: &str,
) -> Vec<NuggetInterpretation> {
    if candidates.is_empty() {
        return Vec::new();
    }
    let raw: Vec<f64> = candidates.iter().map(|c| c.raw_score).collect();
    let confidences = min_max_normalize(&raw);
    candidates
        .into_iter()
        .zip(confidences)
        .map(|(c, confidence)| NuggetInterpretation {
            nugget: nugget.clone(),
            target: make(c.target),
            confidence,
            producer: producer.to_owned(),
        })
        .collect()
}

/// Trigram entity linker over entity-like and unknown nuggets.
#[derive(Debug, Clone)]
pub struct EntityLinker {
    pub k: usize,
}

impl Linker for EntityLinker {
    fn name(&self) -> &'static str {
        "trigram-entity-linker"
    }

    fn link(
        &self,
        question: &UserQuestion,
        _prior: &[NuggetInterpretation],
        kg: &KnowledgeGraph,
    ) -> Vec<NuggetInterpretation> {
        question
            .nuggets
            .iter()
            .filter(|n| n.kind != NuggetKind::RelationLike)
            .flat_map(|n| interpretations_from(n, link_entities(n, kg, self.k), KgElement::Entity, self.name()))
            .collect()
    }
}

/// Word-match relation linker over relation-like and unknown nuggets.
#[derive(Debug, Clone)]
pub struct RelationLinker {
    pub k: usize,
    pub restrict_to_context: bool,
    pub stopwords: BTreeSet<String>,
}

impl Linker for RelationLinker {
    fn name(&self) -> &'static str {
        "word-match-relation-linker"
    }

    fn link(
        &self,
        question: &UserQuestion,
        prior: &[NuggetInterpretation],
        kg: &KnowledgeGraph,
    ) -> Vec<NuggetInterpretation> {
        let context: BTreeSet<String> = if self.restrict_to_context {
            prior
                .iter()
                .filter_map(|ni| match &ni.target {
                    KgElement::Entity(id) => Some(id.clone()),
                    _ => None,
                })
                .collect()
        } else {
            BTreeSet::new()
        };
        question
            .nuggets
            .iter()
            .filter(|n| n.kind != NuggetKind::EntityLike)
            .flat_map(|n| {
                let found = link_relations(n, kg, &context, self.k, &self.stopwords);
                interpretations_from(n, found, KgElement::Property, self.name())
            })
            .collect()
    }
}

/// Everything the pipeline produced for one question.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineRun {
    pub question: UserQuestion,
    /// Union of linker outputs per nugget (same order as `question.nuggets`),
    /// each list sorted by descending confidence then target.
    pub links: Vec<Vec<NuggetInterpretation>>,
    pub qis: InterpretationSpace,
}

pub struct Pipeline {
    lexicon: Lexicon,
    linkers: Vec<Box<dyn Linker>>,
    config: PipelineConfig,
}

impl Pipeline {
    pub fn new(lexicon: Lexicon, config: PipelineConfig) -> Self {
        let linkers: Vec<Box<dyn Linker>> = vec![
            Box::new(EntityLinker {
                k: config.max_entity_candidates_per_nugget,
            }),
            Box::new(RelationLinker {
                k: config.max_relation_candidates_per_nugget,
                restrict_to_context: config.restrict_relations_to_context,
                stopwords: lexicon.stopwords().clone(),
            }),
        ];
        Self {
            lexicon,
            linkers,
            config,
        }
    }

    pub fn with_linkers(lexicon: Lexicon, config: PipelineConfig, linkers: Vec<Box<dyn Linker>>) -> Self {
        Self {
            lexicon,
            linkers,
            config,
        }
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn run(&self, q_nl: &str, kg: &KnowledgeGraph) -> PipelineRun {
        let nuggets = shallow_parse(q_nl, &self.lexicon);
        let question = UserQuestion::new(q_nl, nuggets);

        let mut all: Vec<NuggetInterpretation> = Vec::new();
        for linker in &self.linkers {
            let produced = linker.link(&question, &all, kg);
            all.extend(produced);
        }
        let links = union_per_nugget(&question, all);
        let qis = build_space(&question, &links, kg, &self.config);
        PipelineRun { question, links, qis }
    }
}

/// Groups interpretations by nugget; duplicates of the same mapping keep the
/// highest confidence.
fn union_per_nugget(question: &UserQuestion, all: Vec<NuggetInterpretation>) -> Vec<Vec<NuggetInterpretation>> {
    let mut per: Vec<BTreeMap<KgElement, NuggetInterpretation>> = vec![BTreeMap::new(); question.nuggets.len()];
    for ni in all {
        let Some(idx) = question.nuggets.iter().position(|n| n.span == ni.nugget.span) else {
            continue;
        };
        match per[idx].get(&ni.target) {
            Some(existing) if existing.confidence >= ni.confidence => {}
            _ => {
                per[idx].insert(ni.target.clone(), ni);
            }
        }
    }
    per.into_iter()
        .map(|m| {
            let mut v: Vec<NuggetInterpretation> = m.into_values().collect();
            v.sort_by(|a, b| {
                b.confidence
                    .total_cmp(&a.confidence)
                    .then_with(|| a.target.cmp(&b.target))
            });
            v
        })
        .collect()
}

/// Interpretations, answer type and graph of one candidate CQI.
type Candidate = (Vec<NuggetInterpretation>, AnswerType, QueryGraph);

fn build_space(
    question: &UserQuestion,
    links: &[Vec<NuggetInterpretation>],
    kg: &KnowledgeGraph,
    config: &PipelineConfig,
) -> InterpretationSpace {
    let slots: Vec<&Vec<NuggetInterpretation>> = links.iter().filter(|l| !l.is_empty()).collect();
    if slots.is_empty() {
        return InterpretationSpace::default();
    }

    // Candidate CQIs keyed by (canonical form, QI keys).
    let mut candidates: BTreeMap<(String, Vec<String>), Candidate> = BTreeMap::new();
    let mut choice = vec![0usize; slots.len()];
    let mut produced = 0;
    loop {
        let assignment = CandidateAssignment::new(slots.iter().zip(&choice).map(|(s, &c)| s[c].clone()).collect());
        for graph in enumerate_query_graphs(&assignment, kg, config.max_graphs_per_assignment) {
            let qi: Vec<NuggetInterpretation> = graph
                .used
                .iter()
                .map(|&i| assignment.interpretations[i].clone())
                .collect();
            let qi_keys: Vec<String> = qi.iter().map(NuggetInterpretation::key).collect();
            for &at in &graph.answer_types {
                let Ok(canonical) = canonicalize(at, &graph.graph) else {
                    continue;
                };
                candidates
                    .entry((canonical, qi_keys.clone()))
                    .or_insert_with(|| (qi.clone(), at, graph.graph.clone()));
            }
        }
        produced += 1;
        if produced >= config.max_assignments || !advance(&mut choice, &slots) {
            break;
        }
    }
    if candidates.is_empty() {
        return InterpretationSpace::default();
    }

    let entries: Vec<Candidate> = candidates.into_values().collect();
    let structural: Vec<f64> = entries
        .iter()
        .map(|(qi, at, qg)| structural_score(qg, *at, qi, question, kg.vocabulary()) + answerability(kg, *at, qg))
        .collect();
    let structural_prob = softmax_normalize(&structural);
    let scored: Vec<ScoredCqi> = entries
        .into_iter()
        .zip(structural_prob)
        .map(|((qi, answer_type, query_graph), s)| {
            let confidences: Vec<f64> = qi.iter().map(|ni| ni.confidence).collect();
            ScoredCqi {
                score: cqi_probability(&confidences, s),
                qi,
                answer_type,
                query_graph,
            }
        })
        .collect();
    assemble_qis(scored).truncate(config.max_cqis)
}

/// One point when a SELECT or COUNT graph has at least one solution.
/// ASK graphs are asked precisely because the answer may be "no".
fn answerability(kg: &KnowledgeGraph, at: AnswerType, qg: &QueryGraph) -> f64 {
    match at {
        AnswerType::Ask => 0.0,
        AnswerType::Select | AnswerType::Count => {
            if crate::query::select(kg, qg).is_empty() {
                0.0
            } else {
                1.0
            }
        }
    }
}

fn advance(choice: &mut [usize], slots: &[&Vec<NuggetInterpretation>]) -> bool {
    for i in (0..choice.len()).rev() {
        choice[i] += 1;
        if choice[i] < slots[i].len() {
            return true;
        }
        choice[i] = 0;
    }
    false
}

/// Runs the default pipeline once.
pub fn run_pipeline(q_nl: &str, kg: &KnowledgeGraph, lexicon: &Lexicon, config: &PipelineConfig) -> PipelineRun {
    Pipeline::new(lexicon.clone(), config.clone()).run(q_nl, kg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn min_max_examples() {
        assert!(close(&min_max_normalize(&[0.2, 0.8]), &[0.0, 1.0]));
        assert!(close(&min_max_normalize(&[5.0, 5.0, 5.0]), &[1.0, 1.0, 1.0]));
        assert!(close(&min_max_normalize(&[1.0, 2.0, 3.0]), &[0.0, 0.5, 1.0]));
    }

    #[test]
    #[should_panic]
    fn min_max_empty_panics() {
        min_max_normalize(&[]);
    }

    #[test]
    fn softmax_examples() {
        assert!(close(&softmax_normalize(&[2.5, 2.5]), &[0.5, 0.5]));
        assert!(close(&softmax_normalize(&[0.0]), &[1.0]));
        assert!(close(&softmax_normalize(&[0.0, 3f64.ln()]), &[0.25, 0.75]));
    }

    #[test]
    #[should_panic]
    fn softmax_empty_panics() {
        softmax_normalize(&[]);
    }

    #[test]
    fn config_validation() {
        assert!(PipelineConfig::default().validate().is_ok());
        let bad = PipelineConfig {
            max_cqis: 0,
            ..PipelineConfig::default()
        };
        assert_eq!(bad.validate(), Err(ConfigError("max_cqis")));
    }

    #[test]
    fn unmatched_question_gives_empty_space() {
        let kg = KnowledgeGraph::builder().triple("dbr:A", "dbo:p", "dbr:B").build();
        let run = run_pipeline("zzzz qqqq", &kg, &Lexicon::default(), &PipelineConfig::default());
        assert!(run.qis.is_empty());
    }

    #[test]
    fn two_candidates_for_one_nugget() {
        let kg = KnowledgeGraph::builder()
            .triple("dbr:Linux", "rdf:type", "dbo:OperatingSystem")
            .triple("dbr:Linux_Mint", "rdf:type", "dbo:OperatingSystem")
            .triple("dbr:Firefox", "dbo:operatingSystem", "dbr:Linux")
            .triple("dbr:Vlc", "dbo:operatingSystem", "dbr:Linux_Mint")
            .build();
        let mut lex = Lexicon::default();
        lex.add_entity("linux", "dbr:Linux").unwrap();
        lex.add_relation("operating system", "dbo:operatingSystem").unwrap();
        let run = run_pipeline("operating system linux", &kg, &lex, &PipelineConfig::default());
        assert!(run.qis.len() >= 2);
        let total: f64 = run.qis.probabilities().iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
        let targets: BTreeSet<&str> = run.links[1].iter().map(|ni| ni.target.id()).collect();
        assert!(targets.contains("dbr:Linux") && targets.contains("dbr:Linux_Mint"));
    }
}
