//! SPARQL-style formal text for queries, and a parser for the same subset.

use thiserror::Error;

use crate::query::{AnswerType, PatternTerm, QueryError, QueryGraph, TriplePattern};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SparqlError {
    #[error("missing `WHERE {{ ... }}` block")]
    MissingBody,
    #[error("unterminated {0}")]
    Unterminated(&'static str),
    #[error("triple pattern {0} is incomplete")]
    IncompletePattern(usize),
    #[error(transparent)]
    Query(#[from] QueryError),
}

fn render_term(term: &PatternTerm) -> String {
    match term {
        PatternTerm::Var(v) => format!("?{v}"),
        PatternTerm::Iri(id) => {
            let bare = !id.is_empty()
                && !id.starts_with(['?', '"', '<'])
                && !id.chars().any(|c| c.is_whitespace() || "{}<>\"".contains(c))
                && id != ".";
            if bare {
                id.clone()
            } else {
                format!("<{id}>")
            }
        }
        PatternTerm::Literal(v) => serde_json::to_string(v).expect("string serializes"),
    }
}

/// Renders the query with one pattern per line.
pub fn to_sparql(at: AnswerType, qg: &QueryGraph) -> String {
    let vars: Vec<String> = qg.variables().into_iter().map(|v| format!("?{v}")).collect();
    let head = match at {
        AnswerType::Ask => "ASK WHERE".to_owned(),
        AnswerType::Select if vars.is_empty() => "SELECT * WHERE".to_owned(),
        AnswerType::Select => format!("SELECT DISTINCT {} WHERE", vars.join(" ")),
        AnswerType::Count if vars.len() == 1 => {
            format!("SELECT (COUNT(DISTINCT {}) AS ?count) WHERE", vars[0])
        }
        AnswerType::Count => "SELECT (COUNT(*) AS ?count) WHERE".to_owned(),
    };
    let mut out = format!("{head} {{\n");
    for p in qg.patterns() {
        out.push_str(&format!(
            "  {} {} {} .\n",
            render_term(&p.subject),
            render_term(&p.predicate),
            render_term(&p.object)
        ));
    }
    out.push('}');
    out
}

/// Parses text produced by [`to_sparql`].
pub fn parse_sparql(text: &str) -> Result<(AnswerType, QueryGraph), SparqlError> {
    let text = text.trim();
    let open = text.find('{').ok_or(SparqlError::MissingBody)?;
    let close = text.rfind('}').ok_or(SparqlError::MissingBody)?;
    if close < open {
        return Err(SparqlError::MissingBody);
    }
    let head = &text[..open];
    let at = if head.trim_start().starts_with("ASK") {
        AnswerType::Ask
    } else if head.contains("COUNT(") {
        AnswerType::Count
    } else {
        AnswerType::Select
    };

    let tokens = tokenize(&text[open + 1..close])?;
    let mut patterns = Vec::new();
    let mut current: Vec<PatternTerm> = Vec::new();
    for token in tokens {
        match token {
            Token::Dot => {
                if current.len() != 3 {
                    return Err(SparqlError::IncompletePattern(patterns.len()));
                }
                let mut it = current.drain(..);
                let (s, p, o) = (it.next().unwrap(), it.next().unwrap(), it.next().unwrap());
                patterns.push(TriplePattern::new(s, p, o));
            }
            Token::Term(t) => {
                if current.len() == 3 {
                    return Err(SparqlError::IncompletePattern(patterns.len()));
                }
                current.push(t);
            }
        }
    }
    if !current.is_empty() {
        if current.len() != 3 {
            return Err(SparqlError::IncompletePattern(patterns.len()));
        }
        let mut it = current.drain(..);
        let (s, p, o) = (it.next().unwrap(), it.next().unwrap(), it.next().unwrap());
        patterns.push(TriplePattern::new(s, p, o));
    }
    Ok((at, QueryGraph::new(patterns)?))
}

enum Token {
    Dot,
    Term(PatternTerm),
}

fn tokenize(body: &str) -> Result<Vec<Token>, SparqlError> {
    let chars: Vec<char> = body.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '"' {
            let start = i;
            i += 1;
            while i < chars.len() && chars[i] != '"' {
                if chars[i] == '\\' {
                    i += 1;
                }
                i += 1;
            }
            if i >= chars.len() {
                return Err(SparqlError::Unterminated("string literal"));
            }
            i += 1;
            let raw: String = chars[start..i].iter().collect();
            let value: String = serde_json::from_str(&raw).map_err(|_| SparqlError::Unterminated("string literal"))?;
            tokens.push(Token::Term(PatternTerm::Literal(value)));
        } else if c == '<' {
            let start = i + 1;
            while i < chars.len() && chars[i] != '>' {
                i += 1;
            }
            if i >= chars.len() {
                return Err(SparqlError::Unterminated("bracketed identifier"));
            }
            tokens.push(Token::Term(PatternTerm::Iri(chars[start..i].iter().collect())));
            i += 1;
        } else {
            let start = i;
            while i < chars.len() && !chars[i].is_whitespace() {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            if word == "." {
                tokens.push(Token::Dot);
            } else if let Some(name) = word.strip_prefix('?') {
                tokens.push(Token::Term(PatternTerm::Var(name.to_owned())));
            } else {
                tokens.push(Token::Term(PatternTerm::Iri(word)));
            }
        }
    }
    Ok(tokens)
}
