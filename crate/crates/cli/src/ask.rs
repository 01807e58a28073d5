//! One-shot pipeline dump for `iqa ask`.

use std::fmt::Write as _;

use iqa_core::interaction::rank_options;
use iqa_core::pipeline::NuggetInterpretation;
use iqa_core::{Engine, InformationNugget, InteractiveMode};
use serde::Serialize;

use crate::view::QueryView;

#[derive(Debug, Serialize)]
pub struct RankedOptionDump {
    pub id: String,
    pub inquiry: String,
    pub usability: f64,
    pub information_gain: f64,
    pub option_gain: f64,
    pub subsumed: usize,
}

#[derive(Debug, Serialize)]
pub struct AskDump {
    pub question: String,
    pub nuggets: Vec<InformationNugget>,
    pub links: Vec<Vec<NuggetInterpretation>>,
    pub qis_size: usize,
    pub queries: Vec<QueryView>,
    pub options: Vec<RankedOptionDump>,
}

pub fn ask(engine: &Engine, question: &str, mode: InteractiveMode, max_options: usize) -> AskDump {
    let started = engine.start_session(question, mode);
    let kg = engine.kg();
    let state = &started.state;
    let options = rank_options(state.options(), state.qis(), state.omega())
        .into_iter()
        .take(max_options)
        .map(|r| RankedOptionDump {
            id: r.option.id.clone(),
            inquiry: r.option.inquiry.clone(),
            usability: r.option.usability,
            information_gain: r.information_gain,
            option_gain: r.option_gain,
            subsumed: r.option.subsumed.len(),
        })
        .collect();
    AskDump {
        question: question.to_owned(),
        nuggets: started.run.question.nuggets.clone(),
        links: started.run.links.clone(),
        qis_size: started.run.qis.len(),
        queries: started.run.qis.cqis().iter().map(|c| QueryView::of(kg, c)).collect(),
        options,
    }
}

pub fn render(dump: &AskDump) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "question: {}", dump.question);
    let _ = writeln!(out, "nuggets:");
    for (nugget, links) in dump.nuggets.iter().zip(&dump.links) {
        let _ = writeln!(
            out,
            "  {:?} {:?} [{}..{})",
            nugget.surface, nugget.kind, nugget.span.0, nugget.span.1
        );
        for ni in links {
            let _ = writeln!(out, "    -> {} ({:.3}, {})", ni.target, ni.confidence, ni.producer);
        }
    }
    let _ = writeln!(out, "interpretations: {}", dump.qis_size);
    for (rank, q) in dump.queries.iter().enumerate() {
        let _ = writeln!(out, "  #{} p={:.4} id={}", rank + 1, q.probability, q.id);
        let _ = writeln!(out, "     {}", q.verbalization);
        for line in q.sparql.lines() {
            let _ = writeln!(out, "     {line}");
        }
    }
    if !dump.options.is_empty() {
        let _ = writeln!(out, "best options:");
        for o in &dump.options {
            let _ = writeln!(
                out,
                "  OG={:.4} IG={:.4} u={:.3} |{}| {}  {}",
                o.option_gain, o.information_gain, o.usability, o.subsumed, o.id, o.inquiry
            );
        }
    }
    out
}
