//! Interaction options, Option Gain scoring, and the feedback loop.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kg::KnowledgeGraph;
use crate::pipeline::{Cqi, InterpretationSpace, KgElement, NuggetInterpretation, UserQuestion};
use crate::query::AnswerType;
use crate::text::lcs_dissimilarity;
use crate::verbalize::{term_label, verbalize_cqi};

/// How many example triples a relation option carries.
const MAX_EXAMPLES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OptionCategory {
    /// A nugget interpretation.
    C1,
    /// A class reachable from a query constant.
    C2,
    /// An answer type.
    C3,
    /// A complete query.
    C4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum OptionPayload {
    Nugget(NuggetInterpretation),
    Class(String),
    AnswerType(AnswerType),
    Query(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionOption {
    pub id: String,
    pub category: OptionCategory,
    pub payload: OptionPayload,
    pub label: String,
    pub inquiry: String,
    pub description: Option<String>,
    pub examples: Vec<String>,
    pub complexity: f64,
    pub usability: f64,
    pub subsumed: BTreeSet<String>,
}

impl InteractionOption {
    /// Builds an option; usability is derived from `complexity`.
    pub fn new(
        id: impl Into<String>,
        category: OptionCategory,
        payload: OptionPayload,
        label: impl Into<String>,
        inquiry: impl Into<String>,
        complexity: f64,
        subsumed: BTreeSet<String>,
    ) -> Self {
        assert!(complexity >= 0.0, "complexity must be non-negative");
        Self {
            id: id.into(),
            category,
            payload,
            label: label.into(),
            inquiry: inquiry.into(),
            description: None,
            examples: Vec::new(),
            complexity,
            usability: usability(complexity),
            subsumed,
        }
    }
}

pub fn usability(complexity: f64) -> f64 {
    1.0 / (1.0 + complexity)
}

fn answer_type_inquiry(at: AnswerType) -> (&'static str, &'static str) {
    match at {
        AnswerType::Select => ("a list of things", "Is the answer a list of things?"),
        AnswerType::Count => ("a number", "Is the answer a number (how many)?"),
        AnswerType::Ask => ("yes or no", "Is the answer yes or no?"),
    }
}

fn element_description(kg: &KnowledgeGraph, element: &KgElement) -> (Option<String>, Vec<String>) {
    match element {
        KgElement::Entity(id) => {
            let types: Vec<String> = kg
                .type_closure(id, 1)
                .unwrap_or_default()
                .into_iter()
                .map(|(c, _)| kg.label(&c))
                .collect();
            let description = if kg.is_class(id) {
                Some(format!("{} (a class)", kg.label(id)))
            } else if types.is_empty() {
                None
            } else {
                Some(format!("{}: {}", kg.label(id), types.join(", ")))
            };
            (description, Vec::new())
        }
        KgElement::Property(id) => {
            let examples = kg
                .triples_with_predicate(id)
                .take(MAX_EXAMPLES)
                .map(|t| {
                    format!(
                        "{} {} {}",
                        kg.label(&t.subject),
                        kg.label(&t.predicate),
                        term_label(kg, &t.object)
                    )
                })
                .collect();
            (Some(format!("{} (a relation)", kg.label(id))), examples)
        }
        KgElement::Literal(_) => (None, Vec::new()),
    }
}

fn element_label(kg: &KnowledgeGraph, element: &KgElement) -> String {
    match element {
        KgElement::Entity(id) | KgElement::Property(id) => kg.label(id),
        KgElement::Literal(v) => v.clone(),
    }
}

/// All options over the space, sorted by id.
///
/// C1: one per distinct nugget interpretation used by some CQI. C2: one per
/// class within `superclass_depth` type/subclass hops of an entity constant,
/// subsuming the CQIs that contain such a constant; its complexity is the
/// smallest hop count over those constants. C3: one per answer type present.
/// C4: one per CQI.
pub fn generate_options(
    qis: &InterpretationSpace,
    kg: &KnowledgeGraph,
    _question: &UserQuestion,
    superclass_depth: usize,
) -> Vec<InteractionOption> {
    let mut options: BTreeMap<String, InteractionOption> = BTreeMap::new();

    let mut c1: BTreeMap<String, (NuggetInterpretation, BTreeSet<String>)> = BTreeMap::new();
    let mut c2: BTreeMap<String, (usize, BTreeSet<String>)> = BTreeMap::new();
    let mut c3: BTreeMap<AnswerType, BTreeSet<String>> = BTreeMap::new();
    let mut closures: BTreeMap<String, Vec<(String, usize)>> = BTreeMap::new();

    for cqi in qis.cqis() {
        for ni in &cqi.qi {
            c1.entry(ni.key())
                .or_insert_with(|| (ni.clone(), BTreeSet::new()))
                .1
                .insert(cqi.id.clone());
        }
        for constant in cqi.query_graph.entities() {
            let reach = closures
                .entry(constant.clone())
                .or_insert_with(|| kg.type_closure(&constant, superclass_depth).unwrap_or_default());
            for (class, depth) in reach.iter() {
                let entry = c2.entry(class.clone()).or_insert((usize::MAX, BTreeSet::new()));
                entry.0 = entry.0.min(*depth);
                entry.1.insert(cqi.id.clone());
            }
        }
        c3.entry(cqi.answer_type).or_default().insert(cqi.id.clone());
    }

    for (key, (ni, subsumed)) in c1 {
        let label = element_label(kg, &ni.target);
        let complexity = lcs_dissimilarity(&ni.nugget.surface, &label);
        let inquiry = format!("Does \"{}\" refer to \"{}\"?", ni.nugget.surface, label);
        let (description, examples) = element_description(kg, &ni.target);
        let id = format!("c1:{key}");
        let mut option = InteractionOption::new(
            id.clone(),
            OptionCategory::C1,
            OptionPayload::Nugget(ni),
            label,
            inquiry,
            complexity,
            subsumed,
        );
        option.description = description;
        option.examples = examples;
        options.insert(id, option);
    }
    for (class, (depth, subsumed)) in c2 {
        let label = kg.label(&class);
        let id = format!("c2:{class}");
        let inquiry = format!("Is the question about a kind of \"{label}\"?");
        options.insert(
            id.clone(),
            InteractionOption::new(
                id,
                OptionCategory::C2,
                OptionPayload::Class(class),
                label,
                inquiry,
                depth as f64,
                subsumed,
            ),
        );
    }
    for (at, subsumed) in c3 {
        let (label, inquiry) = answer_type_inquiry(at);
        let id = format!("c3:{at}");
        options.insert(
            id.clone(),
            InteractionOption::new(
                id,
                OptionCategory::C3,
                OptionPayload::AnswerType(at),
                label,
                inquiry,
                0.0,
                subsumed,
            ),
        );
    }
    for cqi in qis.cqis() {
        let label = verbalize_cqi(kg, cqi.answer_type, &cqi.query_graph);
        let id = format!("c4:{}", cqi.id);
        let inquiry = format!("Is this what you mean: {label}");
        options.insert(
            id.clone(),
            InteractionOption::new(
                id,
                OptionCategory::C4,
                OptionPayload::Query(cqi.id.clone()),
                label,
                inquiry,
                cqi.qi.len() as f64,
                BTreeSet::from([cqi.id.clone()]),
            ),
        );
    }
    options.into_values().collect()
}

/// Whether an option's condition holds for a CQI that need not be in the
/// current space: C1 by nugget interpretation membership, C2 by a constant
/// reaching the class, C3 by answer type, C4 by canonical form.
pub fn option_applies(option: &InteractionOption, kg: &KnowledgeGraph, cqi: &Cqi, superclass_depth: usize) -> bool {
    match &option.payload {
        OptionPayload::Nugget(ni) => cqi.contains_interpretation(&ni.key()),
        OptionPayload::Class(class) => cqi.query_graph.entities().iter().any(|c| {
            kg.type_closure(c, superclass_depth)
                .unwrap_or_default()
                .iter()
                .any(|(reached, _)| reached == class)
        }),
        OptionPayload::AnswerType(at) => cqi.answer_type == *at,
        OptionPayload::Query(id) => cqi.id == *id,
    }
}

/// Shannon entropy in bits of a normalized distribution, `0 log 0 = 0`.
pub fn entropy_of(probabilities: impl IntoIterator<Item = f64>) -> f64 {
    let h: f64 = probabilities
        .into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum();
    h.max(0.0)
}

/// Entropy of the space's distribution; 0 for an empty space.
pub fn entropy(qis: &InterpretationSpace) -> f64 {
    entropy_of(qis.probabilities())
}

fn renormalized_entropy(weights: &[f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    entropy_of(weights.iter().map(|w| w / total))
}

/// Total probability of the subsumed CQIs.
///
/// # Panics
/// When the option subsumes an id not in the space.
pub fn option_probability(io: &InteractionOption, qis: &InterpretationSpace) -> f64 {
    io.subsumed
        .iter()
        .map(|id| {
            qis.get(id)
                .unwrap_or_else(|| panic!("option {} subsumes stale CQI {id}", io.id))
                .probability
        })
        .sum()
}

/// Information gain of a split into (`inside`, `outside`) probabilities that
/// together form a normalized distribution. Branch entropies are computed over
/// the renormalized branches.
pub fn split_information_gain(inside: &[f64], outside: &[f64]) -> f64 {
    let p: f64 = inside.iter().sum();
    let q: f64 = outside.iter().sum();
    if inside.is_empty() || outside.is_empty() || p <= 0.0 || q <= 0.0 {
        return 0.0;
    }
    let total = p + q;
    let (p, q) = (p / total, q / total);
    let h = entropy_of(inside.iter().chain(outside).map(|w| w / total));
    let gain = h - (p * renormalized_entropy(inside) + q * renormalized_entropy(outside));
    gain.max(0.0)
}

/// Expected entropy reduction of a yes/no answer to the option.
///
/// # Panics
/// When the option subsumes an id not in the space.
pub fn information_gain(io: &InteractionOption, qis: &InterpretationSpace) -> f64 {
    for id in &io.subsumed {
        assert!(qis.contains(id), "option {} subsumes stale CQI {id}", io.id);
    }
    let (inside, outside): (Vec<&Cqi>, Vec<&Cqi>) = qis.cqis().iter().partition(|c| io.subsumed.contains(&c.id));
    let inside: Vec<f64> = inside.iter().map(|c| c.probability).collect();
    let outside: Vec<f64> = outside.iter().map(|c| c.probability).collect();
    split_information_gain(&inside, &outside)
}

/// `usability^omega * IG`.
pub fn option_gain(io: &InteractionOption, qis: &InterpretationSpace, omega: u32) -> f64 {
    gain_from_parts(io.usability, information_gain(io, qis), omega)
}

/// `usability^omega * ig`, with `omega = 0` returning `ig` unchanged.
pub fn gain_from_parts(usability: f64, ig: f64, omega: u32) -> f64 {
    if omega == 0 {
        ig
    } else {
        usability.powi(omega as i32) * ig
    }
}

/// A scored candidate for presentation.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedOption<'a> {
    pub option: &'a InteractionOption,
    pub information_gain: f64,
    pub option_gain: f64,
}

/// Options with positive information gain, best first: higher Option Gain,
/// then higher usability, then smaller id.
pub fn rank_options<'a>(
    options: &'a [InteractionOption],
    qis: &InterpretationSpace,
    omega: u32,
) -> Vec<RankedOption<'a>> {
    let mut ranked: Vec<RankedOption<'a>> = options
        .iter()
        .filter_map(|option| {
            let ig = information_gain(option, qis);
            (ig > 0.0).then(|| RankedOption {
                option,
                information_gain: ig,
                option_gain: gain_from_parts(option.usability, ig, omega),
            })
        })
        .collect();
    ranked.sort_by(|a, b| {
        b.option_gain
            .total_cmp(&a.option_gain)
            .then_with(|| b.option.usability.total_cmp(&a.option.usability))
            .then_with(|| a.option.id.cmp(&b.option.id))
    });
    ranked
}

/// Serialized with the wire names used by the service.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Decision {
    #[serde(rename = "accept")]
    AcceptIO,
    #[serde(rename = "reject")]
    RejectIO,
    #[serde(rename = "accept_query")]
    AcceptCQI,
    #[serde(rename = "unknown")]
    Unknown,
}

impl Decision {
    /// Wire name used by the service.
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::AcceptIO => "accept",
            Decision::RejectIO => "reject",
            Decision::AcceptCQI => "accept_query",
            Decision::Unknown => "unknown",
        }
    }

    pub fn from_wire(s: &str) -> Option<Self> {
        match s {
            "accept" => Some(Decision::AcceptIO),
            "reject" => Some(Decision::RejectIO),
            "accept_query" => Some(Decision::AcceptCQI),
            "unknown" => Some(Decision::Unknown),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", content = "cqi_id", rename_all = "snake_case")]
pub enum SessionStatus {
    Running,
    AcceptedCqi(String),
    ExhaustedSpace,
    UserTerminated,
    BudgetExceeded,
}

impl SessionStatus {
    pub fn name(&self) -> &'static str {
        match self {
            SessionStatus::Running => "running",
            SessionStatus::AcceptedCqi(_) => "accepted_cqi",
            SessionStatus::ExhaustedSpace => "exhausted_space",
            SessionStatus::UserTerminated => "user_terminated",
            SessionStatus::BudgetExceeded => "budget_exceeded",
        }
    }
}

impl fmt::Display for SessionStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("session is no longer running ({0})")]
    InvalidState(SessionStatus),
    #[error("no live option with id `{0}`")]
    OptionNotFound(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub option_id: String,
    pub label: String,
    pub decision: Decision,
    /// Interaction index, starting at 1.
    pub step: usize,
    pub qis_size_after: usize,
}

/// Engine knobs that stay fixed over a session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSettings {
    pub omega: u32,
    pub max_interactions: usize,
    pub superclass_depth: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SessionState {
    question: UserQuestion,
    qis: InterpretationSpace,
    initial_qis: InterpretationSpace,
    options: Vec<InteractionOption>,
    history: Vec<HistoryEntry>,
    interactions_used: usize,
    status: SessionStatus,
    settings: SessionSettings,
}

impl SessionState {
    /// Starts a session over `qis`; an empty space is terminated immediately.
    pub fn new(
        question: UserQuestion,
        qis: InterpretationSpace,
        kg: &KnowledgeGraph,
        settings: SessionSettings,
    ) -> Self {
        let options = if qis.is_empty() {
            Vec::new()
        } else {
            generate_options(&qis, kg, &question, settings.superclass_depth)
        };
        Self::with_options(question, qis, options, settings)
    }

    /// Starts a session with a given option pool.
    pub fn with_options(
        question: UserQuestion,
        qis: InterpretationSpace,
        options: Vec<InteractionOption>,
        settings: SessionSettings,
    ) -> Self {
        let status = if qis.is_empty() {
            SessionStatus::ExhaustedSpace
        } else {
            SessionStatus::Running
        };
        Self {
            question,
            initial_qis: qis.clone(),
            qis,
            options,
            history: Vec::new(),
            interactions_used: 0,
            status,
            settings,
        }
    }

    pub fn question(&self) -> &UserQuestion {
        &self.question
    }

    pub fn qis(&self) -> &InterpretationSpace {
        &self.qis
    }

    pub fn initial_qis(&self) -> &InterpretationSpace {
        &self.initial_qis
    }

    pub fn options(&self) -> &[InteractionOption] {
        &self.options
    }

    pub fn option(&self, id: &str) -> Option<&InteractionOption> {
        self.options.iter().find(|o| o.id == id)
    }

    pub fn history(&self) -> &[HistoryEntry] {
        &self.history
    }

    pub fn interactions_used(&self) -> usize {
        self.interactions_used
    }

    pub fn status(&self) -> &SessionStatus {
        &self.status
    }

    pub fn settings(&self) -> SessionSettings {
        self.settings
    }

    pub fn omega(&self) -> u32 {
        self.settings.omega
    }

    pub fn is_terminated(&self) -> bool {
        self.status != SessionStatus::Running
    }

    /// Best live option by Option Gain, or `None` when nothing splits the space.
    pub fn select_best_option(&self) -> Option<&InteractionOption> {
        if self.is_terminated() {
            return None;
        }
        rank_options(&self.options, &self.qis, self.settings.omega)
            .first()
            .map(|r| r.option)
    }

    pub fn top_cqi(&self) -> Option<&Cqi> {
        self.qis.top()
    }

    /// Marks the session as ended by the user.
    pub fn terminate(&mut self) {
        if !self.is_terminated() {
            self.status = SessionStatus::UserTerminated;
        }
    }

    /// Applies one decision. `option_id` is ignored for [`Decision::AcceptCQI`],
    /// which accepts the current top CQI.
    pub fn apply_feedback(&mut self, option_id: &str, decision: Decision) -> Result<(), EngineError> {
        if self.is_terminated() {
            return Err(EngineError::InvalidState(self.status.clone()));
        }
        if decision == Decision::AcceptCQI {
            let top = self
                .qis
                .top()
                .expect("running session has a non-empty space")
                .id
                .clone();
            self.interactions_used += 1;
            self.history.push(HistoryEntry {
                option_id: format!("c4:{top}"),
                label: "accept top query".into(),
                decision,
                step: self.interactions_used,
                qis_size_after: self.qis.len(),
            });
            self.status = SessionStatus::AcceptedCqi(top);
            return Ok(());
        }

        let idx = self
            .options
            .iter()
            .position(|o| o.id == option_id)
            .ok_or_else(|| EngineError::OptionNotFound(option_id.to_owned()))?;
        let option = self.options.remove(idx);
        match decision {
            Decision::AcceptIO => self.qis = self.qis.restrict(&option.subsumed),
            Decision::RejectIO => {
                let keep: BTreeSet<String> = self.qis.ids().difference(&option.subsumed).cloned().collect();
                self.qis = self.qis.restrict(&keep);
            }
            Decision::Unknown | Decision::AcceptCQI => {}
        }
        let live = self.qis.ids();
        self.options.retain_mut(|o| {
            o.subsumed.retain(|id| live.contains(id));
            !o.subsumed.is_empty()
        });

        self.interactions_used += 1;
        self.history.push(HistoryEntry {
            option_id: option.id,
            label: option.label,
            decision,
            step: self.interactions_used,
            qis_size_after: self.qis.len(),
        });
        if self.qis.is_empty() {
            self.status = SessionStatus::ExhaustedSpace;
        } else if self.interactions_used >= self.settings.max_interactions {
            self.status = SessionStatus::BudgetExceeded;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{InformationNugget, NuggetKind};
    use crate::query::{QueryGraph, TriplePattern};

    fn space(probs: &[f64]) -> InterpretationSpace {
        let cqis = probs
            .iter()
            .enumerate()
            .map(|(i, &p)| Cqi {
                id: format!("q{i}"),
                qi: vec![],
                answer_type: AnswerType::Select,
                query_graph: QueryGraph::new([TriplePattern::parse("?uri", "p", &format!("e{i}"))]).unwrap(),
                probability: p,
                canonical: format!("c{i}"),
            })
            .collect();
        InterpretationSpace::from_cqis(cqis)
    }

    fn opt(id: &str, complexity: f64, subsumed: &[usize]) -> InteractionOption {
        InteractionOption::new(
            id,
            OptionCategory::C3,
            OptionPayload::AnswerType(AnswerType::Select),
            id,
            id,
            complexity,
            subsumed.iter().map(|i| format!("q{i}")).collect(),
        )
    }

    fn settings() -> SessionSettings {
        SessionSettings {
            omega: 1,
            max_interactions: 10,
            superclass_depth: 2,
        }
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&space(&[1.0; 4])), 2.0);
        assert_eq!(entropy(&space(&[1.0])), 0.0);
        assert!((entropy(&space(&[0.5, 0.25, 0.25])) - 1.5).abs() < 1e-12);
        assert_eq!(entropy(&InterpretationSpace::default()), 0.0);
    }

    #[test]
    fn probability_and_gain_examples() {
        let s = space(&[1.0; 4]);
        assert!((option_probability(&opt("a", 0.0, &[0, 1]), &s) - 0.5).abs() < 1e-12);
        assert!((option_probability(&opt("a", 0.0, &[0, 1, 2, 3]), &s) - 1.0).abs() < 1e-12);
        assert!((information_gain(&opt("a", 0.0, &[0, 1]), &s) - 1.0).abs() < 1e-12);
        assert_eq!(information_gain(&opt("a", 0.0, &[0, 1, 2, 3]), &s), 0.0);
        assert_eq!(information_gain(&opt("a", 0.0, &[]), &s), 0.0);
    }

    #[test]
    fn option_gain_exponents() {
        assert_eq!(gain_from_parts(0.3, 0.7, 0), 0.7);
        assert_eq!(gain_from_parts(0.5, 1.0, 1), 0.5);
        assert_eq!(gain_from_parts(0.5, 1.0, 2), 0.25);
    }

    #[test]
    #[should_panic]
    fn stale_option_panics() {
        option_probability(&opt("a", 0.0, &[9]), &space(&[1.0, 1.0]));
    }

    #[test]
    fn tie_breaks_on_usability_then_id() {
        let s = space(&[1.0; 4]);
        let pool = vec![opt("b", 1.0, &[0, 1]), opt("c", 0.0, &[2, 3]), opt("a", 0.0, &[0, 2])];
        let ranked = rank_options(&pool, &s, 0);
        let ids: Vec<&str> = ranked.iter().map(|r| r.option.id.as_str()).collect();
        assert_eq!(ids, ["a", "c", "b"]);
    }

    #[test]
    fn reject_prunes_and_renormalizes() {
        let q = UserQuestion::new("x", vec![]);
        let mut state = SessionState::with_options(q, space(&[1.0; 4]), vec![opt("ab", 0.0, &[0, 1])], settings());
        state.apply_feedback("ab", Decision::RejectIO).unwrap();
        assert_eq!(state.qis().ids(), BTreeSet::from(["q2".to_owned(), "q3".to_owned()]));
        assert_eq!(state.qis().probabilities(), vec![0.5, 0.5]);
        assert!(state.options().is_empty());
    }

    #[test]
    fn accepting_everything_only_shrinks_pool() {
        let q = UserQuestion::new("x", vec![]);
        let pool = vec![opt("all", 0.0, &[0, 1, 2, 3]), opt("ab", 0.0, &[0, 1])];
        let mut state = SessionState::with_options(q, space(&[1.0; 4]), pool, settings());
        state.apply_feedback("all", Decision::AcceptIO).unwrap();
        assert_eq!(state.qis().len(), 4);
        assert_eq!(state.options().len(), 1);
    }

    #[test]
    fn unknown_keeps_space() {
        let q = UserQuestion::new("x", vec![]);
        let mut state = SessionState::with_options(q, space(&[1.0; 4]), vec![opt("ab", 0.0, &[0, 1])], settings());
        state.apply_feedback("ab", Decision::Unknown).unwrap();
        assert_eq!(state.qis().len(), 4);
        assert_eq!(state.history().len(), 1);
        assert!(state.options().is_empty());
    }

    #[test]
    fn accept_query_terminates() {
        let q = UserQuestion::new("x", vec![]);
        let mut state = SessionState::with_options(q, space(&[0.5, 0.3, 0.2]), vec![], settings());
        assert!(!state.is_terminated());
        state.apply_feedback("top", Decision::AcceptCQI).unwrap();
        assert_eq!(state.status(), &SessionStatus::AcceptedCqi("q0".into()));
        assert_eq!(state.history().len(), 1);
        assert!(matches!(
            state.apply_feedback("top", Decision::AcceptCQI),
            Err(EngineError::InvalidState(_))
        ));
    }

    #[test]
    fn unknown_option_is_not_found() {
        let q = UserQuestion::new("x", vec![]);
        let mut state = SessionState::with_options(q, space(&[1.0, 1.0]), vec![], settings());
        assert_eq!(
            state.apply_feedback("nope", Decision::AcceptIO),
            Err(EngineError::OptionNotFound("nope".into()))
        );
    }

    #[test]
    fn budget_is_enforced() {
        let q = UserQuestion::new("x", vec![]);
        let pool: Vec<InteractionOption> = (0..5).map(|i| opt(&format!("o{i}"), 0.0, &[0])).collect();
        let mut state = SessionState::with_options(
            q,
            space(&[1.0; 4]),
            pool,
            SessionSettings {
                max_interactions: 3,
                ..settings()
            },
        );
        for i in 0..3 {
            state.apply_feedback(&format!("o{i}"), Decision::Unknown).unwrap();
        }
        assert_eq!(state.status(), &SessionStatus::BudgetExceeded);
    }

    #[test]
    fn empty_space_starts_exhausted() {
        let state = SessionState::with_options(
            UserQuestion::new("x", vec![]),
            InterpretationSpace::default(),
            vec![],
            settings(),
        );
        assert_eq!(state.status(), &SessionStatus::ExhaustedSpace);
        assert!(state.top_cqi().is_none());
        assert!(state.select_best_option().is_none());
    }

    #[test]
    fn options_for_single_cqi() {
        let kg = KnowledgeGraph::builder()
            .triple("dbr:Vim", "dbo:author", "dbr:Bram")
            .build();
        let author = InformationNugget {
            surface: "author".into(),
            span: (0, 6),
            kind: NuggetKind::RelationLike,
        };
        let bram = InformationNugget {
            surface: "Bram".into(),
            span: (7, 11),
            kind: NuggetKind::EntityLike,
        };
        let mk = |n: &InformationNugget, t: KgElement| NuggetInterpretation {
            nugget: n.clone(),
            target: t,
            confidence: 1.0,
            producer: "t".into(),
        };
        let cqi = Cqi {
            id: "x".into(),
            qi: vec![
                mk(&author, KgElement::Property("dbo:author".into())),
                mk(&bram, KgElement::Entity("dbr:Bram".into())),
            ],
            answer_type: AnswerType::Select,
            query_graph: QueryGraph::new([TriplePattern::parse("?uri", "dbo:author", "dbr:Bram")]).unwrap(),
            probability: 1.0,
            canonical: "x".into(),
        };
        let qis = InterpretationSpace::from_cqis(vec![cqi]);
        let options = generate_options(&qis, &kg, &UserQuestion::new("author Bram", vec![author, bram]), 2);
        let categories: Vec<OptionCategory> = options.iter().map(|o| o.category).collect();
        assert_eq!(
            categories,
            [
                OptionCategory::C1,
                OptionCategory::C1,
                OptionCategory::C3,
                OptionCategory::C4
            ]
        );
        let relation = options.iter().find(|o| o.id == "c1:0:6:dbo:author").unwrap();
        assert_eq!(relation.complexity, 0.0);
        assert_eq!(relation.examples, ["Vim author Bram"]);
        let c4 = options.last().unwrap();
        assert_eq!(c4.complexity, 2.0);
        assert!((c4.usability - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn class_options_per_depth() {
        let kg = KnowledgeGraph::builder()
            .triple("dbr:Vim", "rdf:type", "dbo:Software")
            .triple("dbo:Software", "rdfs:subClassOf", "dbo:Work")
            .triple("dbr:Vim", "dbo:author", "dbr:Bram")
            .build();
        let cqi = Cqi {
            id: "x".into(),
            qi: vec![],
            answer_type: AnswerType::Select,
            query_graph: QueryGraph::new([TriplePattern::parse("dbr:Vim", "dbo:author", "?uri")]).unwrap(),
            probability: 1.0,
            canonical: "x".into(),
        };
        let qis = InterpretationSpace::from_cqis(vec![cqi]);
        let options = generate_options(&qis, &kg, &UserQuestion::new("q", vec![]), 2);
        let c2: Vec<(&str, f64)> = options
            .iter()
            .filter(|o| o.category == OptionCategory::C2)
            .map(|o| (o.id.as_str(), o.complexity))
            .collect();
        assert_eq!(c2, [("c2:dbo:Software", 1.0), ("c2:dbo:Work", 2.0)]);
    }
}
