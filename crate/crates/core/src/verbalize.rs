//! Template verbalization of queries using KG labels.

use crate::builder::ANSWER_VAR;
use crate::kg::{KnowledgeGraph, Term};
use crate::query::{AnswerType, PatternTerm, QueryGraph, TriplePattern};

pub const SELECT_PHRASE: &str = "Things";
pub const COUNT_PHRASE: &str = "How many things";
pub const ASK_PHRASE: &str = "Is it true that";

pub fn term_label(kg: &KnowledgeGraph, term: &Term) -> String {
    match term {
        Term::Iri(id) => kg.label(id),
        Term::Literal(v) => format!("\"{v}\""),
    }
}

fn pattern_term_label(kg: &KnowledgeGraph, term: &PatternTerm) -> String {
    match term {
        PatternTerm::Var(v) if v == ANSWER_VAR => "the answer".to_owned(),
        PatternTerm::Var(v) => format!("something ({v})"),
        PatternTerm::Iri(id) => kg.label(id),
        PatternTerm::Literal(v) => format!("\"{v}\""),
    }
}

fn is_answer(term: &PatternTerm) -> bool {
    term.as_var() == Some(ANSWER_VAR)
}

/// Clause describing the answer variable, or a standalone statement.
fn clause(kg: &KnowledgeGraph, p: &TriplePattern) -> String {
    let is_type = p.predicate.as_iri() == Some(kg.type_pred());
    let rel = pattern_term_label(kg, &p.predicate);
    if is_answer(&p.subject) && !is_answer(&p.object) {
        let object = pattern_term_label(kg, &p.object);
        if is_type {
            format!("that are of type {object}")
        } else {
            format!("whose {rel} is {object}")
        }
    } else if is_answer(&p.object) && !is_answer(&p.subject) {
        let subject = pattern_term_label(kg, &p.subject);
        format!("that are the {rel} of {subject}")
    } else {
        let subject = pattern_term_label(kg, &p.subject);
        let object = pattern_term_label(kg, &p.object);
        if is_type {
            format!("{subject} is of type {object}")
        } else {
            format!("the {rel} of {subject} is {object}")
        }
    }
}

/// Deterministic sentence for a query: an answer-type phrase followed by one
/// clause per pattern, joined with "and".
pub fn verbalize_cqi(kg: &KnowledgeGraph, at: AnswerType, qg: &QueryGraph) -> String {
    let clauses: Vec<String> = qg.patterns().iter().map(|p| clause(kg, p)).collect();
    let body = clauses.join(" and ");
    match at {
        AnswerType::Select => format!("{SELECT_PHRASE} {body}."),
        AnswerType::Count => format!("{COUNT_PHRASE} {body}?"),
        AnswerType::Ask if qg.is_ground() => format!("{ASK_PHRASE} {body}?"),
        AnswerType::Ask => format!("{ASK_PHRASE} there are things {body}?"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kg() -> KnowledgeGraph {
        KnowledgeGraph::builder()
            .triple("dbr:Vim", "rdf:type", "dbo:Software")
            .triple("dbr:Vim", "dbo:programmingLanguage", "dbr:C")
            .label("dbo:programmingLanguage", "programming language")
            .build()
    }

    fn qg(patterns: &[(&str, &str, &str)]) -> QueryGraph {
        QueryGraph::new(patterns.iter().map(|(s, p, o)| TriplePattern::parse(s, p, o))).unwrap()
    }

    #[test]
    fn select_with_type_and_relation() {
        let q = qg(&[
            ("?uri", "rdf:type", "dbo:Software"),
            ("?uri", "dbo:programmingLanguage", "dbr:C"),
        ]);
        assert_eq!(
            verbalize_cqi(&kg(), AnswerType::Select, &q),
            "Things whose programming language is C and that are of type Software."
        );
    }

    #[test]
    fn count_and_ask() {
        let q = qg(&[("?uri", "rdf:type", "dbo:Software")]);
        assert_eq!(
            verbalize_cqi(&kg(), AnswerType::Count, &q),
            "How many things that are of type Software?"
        );
        let ground = qg(&[("dbr:Vim", "rdf:type", "dbo:Software")]);
        assert_eq!(
            verbalize_cqi(&kg(), AnswerType::Ask, &ground),
            "Is it true that Vim is of type Software?"
        );
    }

    #[test]
    fn inverse_direction() {
        let q = qg(&[("dbr:Vim", "dbo:programmingLanguage", "?uri")]);
        assert_eq!(
            verbalize_cqi(&kg(), AnswerType::Select, &q),
            "Things that are the programming language of Vim."
        );
    }
}
