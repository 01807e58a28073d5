//! Wire shapes shared by the HTTP service and `iqa ask --json`.

use iqa_core::interaction::rank_options;
use iqa_core::{to_sparql, verbalize_cqi, Cqi, InteractiveMode, KnowledgeGraph, OptionCategory, SessionState};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SkipReason {
    IncomprehensibleQuestion,
    IncomprehensibleOptions,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionView {
    pub id: String,
    pub category: OptionCategory,
    pub inquiry: String,
    pub label: String,
    pub description: Option<String>,
    pub examples: Vec<String>,
    pub usability: f64,
    pub information_gain: f64,
    pub option_gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryView {
    pub id: String,
    pub answer_type: String,
    pub probability: f64,
    pub sparql: String,
    pub verbalization: String,
}

impl QueryView {
    pub fn of(kg: &KnowledgeGraph, cqi: &Cqi) -> Self {
        Self {
            id: cqi.id.clone(),
            answer_type: cqi.answer_type.to_string(),
            probability: cqi.probability,
            sparql: to_sparql(cqi.answer_type, &cqi.query_graph),
            verbalization: verbalize_cqi(kg, cqi.answer_type, &cqi.query_graph),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryView {
    pub step: usize,
    pub option_id: String,
    pub label: String,
    pub decision: String,
    pub qis_size_after: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub question: String,
    pub mode: InteractiveMode,
    pub omega: u32,
    pub status: String,
    pub accepted_query: Option<String>,
    pub interactions_used: usize,
    pub max_interactions: usize,
    pub qis_size: usize,
    pub option: Option<OptionView>,
    pub top_query: Option<QueryView>,
    pub history: Vec<HistoryView>,
    pub skip_reason: Option<SkipReason>,
    pub rating: Option<u8>,
}

pub struct ViewContext<'a> {
    pub session_id: &'a str,
    pub mode: InteractiveMode,
    pub skip_reason: Option<SkipReason>,
    pub rating: Option<u8>,
}

pub fn session_view(kg: &KnowledgeGraph, state: &SessionState, ctx: ViewContext<'_>) -> SessionView {
    let option = if state.is_terminated() {
        None
    } else {
        rank_options(state.options(), state.qis(), state.omega())
            .into_iter()
            .next()
            .map(|r| OptionView {
                id: r.option.id.clone(),
                category: r.option.category,
                inquiry: r.option.inquiry.clone(),
                label: r.option.label.clone(),
                description: r.option.description.clone(),
                examples: r.option.examples.clone(),
                usability: r.option.usability,
                information_gain: r.information_gain,
                option_gain: r.option_gain,
            })
    };
    let accepted_query = match state.status() {
        iqa_core::SessionStatus::AcceptedCqi(id) => Some(id.clone()),
        _ => None,
    };
    SessionView {
        session_id: ctx.session_id.to_owned(),
        question: state.question().q_nl.clone(),
        mode: ctx.mode,
        omega: state.omega(),
        status: state.status().name().to_owned(),
        accepted_query,
        interactions_used: state.interactions_used(),
        max_interactions: state.settings().max_interactions,
        qis_size: state.qis().len(),
        option,
        top_query: state.top_cqi().map(|c| QueryView::of(kg, c)),
        history: state
            .history()
            .iter()
            .map(|h| HistoryView {
                step: h.step,
                option_id: h.option_id.clone(),
                label: h.label.clone(),
                decision: h.decision.as_str().to_owned(),
                qis_size_after: h.qis_size_after,
            })
            .collect(),
        skip_reason: ctx.skip_reason,
        rating: ctx.rating,
    }
}
