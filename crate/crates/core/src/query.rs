//! Query graphs (basic graph patterns) and their evaluation over a
//! [`KnowledgeGraph`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::kg::{KnowledgeGraph, Term, Triple};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QueryError {
    #[error("query graph has no triple patterns")]
    Empty,
    #[error("literal `{0}` in subject position")]
    LiteralSubject(String),
    #[error("literal `{0}` in predicate position")]
    LiteralPredicate(String),
    #[error("invalid variable name `{0}`")]
    BadVariable(String),
    #[error("unknown answer type `{0}`")]
    UnknownAnswerType(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum AnswerType {
    Ask,
    Select,
    Count,
}

impl AnswerType {
    pub const ALL: [AnswerType; 3] = [AnswerType::Ask, AnswerType::Select, AnswerType::Count];

    pub fn as_str(self) -> &'static str {
        match self {
            AnswerType::Ask => "ASK",
            AnswerType::Select => "SELECT",
            AnswerType::Count => "COUNT",
        }
    }
}

impl fmt::Display for AnswerType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AnswerType {
    type Err = QueryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ASK" => Ok(AnswerType::Ask),
            "SELECT" => Ok(AnswerType::Select),
            "COUNT" => Ok(AnswerType::Count),
            other => Err(QueryError::UnknownAnswerType(other.to_owned())),
        }
    }
}

/// One position of a triple pattern.
///
/// The textual form is the one used by the TSV and dataset files: `?x` is a
/// variable, a leading `"` marks a literal, anything else is an identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PatternTerm {
    Var(String),
    Iri(String),
    Literal(String),
}

impl PatternTerm {
    pub fn var(name: &str) -> Self {
        let name = name.strip_prefix('?').unwrap_or(name);
        PatternTerm::Var(name.to_owned())
    }

    pub fn iri(id: &str) -> Self {
        PatternTerm::Iri(id.to_owned())
    }

    pub fn parse(token: &str) -> Self {
        if let Some(name) = token.strip_prefix('?') {
            PatternTerm::Var(name.to_owned())
        } else if let Some(rest) = token.strip_prefix('"') {
            PatternTerm::Literal(rest.strip_suffix('"').unwrap_or(rest).to_owned())
        } else {
            PatternTerm::Iri(token.to_owned())
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, PatternTerm::Var(_))
    }

    pub fn as_iri(&self) -> Option<&str> {
        match self {
            PatternTerm::Iri(id) => Some(id),
            _ => None,
        }
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            PatternTerm::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn to_term(&self) -> Option<Term> {
        match self {
            PatternTerm::Var(_) => None,
            PatternTerm::Iri(id) => Some(Term::Iri(id.clone())),
            PatternTerm::Literal(v) => Some(Term::Literal(v.clone())),
        }
    }
}

impl fmt::Display for PatternTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternTerm::Var(v) => write!(f, "?{v}"),
            PatternTerm::Iri(id) => f.write_str(id),
            PatternTerm::Literal(v) => write!(f, "\"{v}\""),
        }
    }
}

impl Serialize for PatternTerm {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PatternTerm {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Ok(PatternTerm::parse(&s))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TriplePattern {
    pub subject: PatternTerm,
    pub predicate: PatternTerm,
    pub object: PatternTerm,
}

impl TriplePattern {
    pub fn new(subject: PatternTerm, predicate: PatternTerm, object: PatternTerm) -> Self {
        Self {
            subject,
            predicate,
            object,
        }
    }

    /// Parses three whitespace-free tokens, e.g. `("?uri", "rdf:type", "dbo:Software")`.
    pub fn parse(s: &str, p: &str, o: &str) -> Self {
        Self::new(PatternTerm::parse(s), PatternTerm::parse(p), PatternTerm::parse(o))
    }

    pub fn terms(&self) -> [&PatternTerm; 3] {
        [&self.subject, &self.predicate, &self.object]
    }

    pub fn is_ground(&self) -> bool {
        self.terms().iter().all(|t| !t.is_var())
    }

    pub fn validate(&self) -> Result<(), QueryError> {
        if let PatternTerm::Literal(v) = &self.subject {
            return Err(QueryError::LiteralSubject(v.clone()));
        }
        if let PatternTerm::Literal(v) = &self.predicate {
            return Err(QueryError::LiteralPredicate(v.clone()));
        }
        for term in self.terms() {
            if let PatternTerm::Var(name) = term {
                if name.is_empty() || name.chars().any(char::is_whitespace) {
                    return Err(QueryError::BadVariable(name.clone()));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for TriplePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.subject, self.predicate, self.object)
    }
}

/// A conjunctive graph pattern `(V', L', E', U, T')`.
///
/// Only the triple patterns are stored; the constant and variable sets are
/// derived from them, so they always agree with `T'`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct QueryGraph {
    patterns: Vec<TriplePattern>,
}

impl<'de> Deserialize<'de> for QueryGraph {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let patterns = Vec::<TriplePattern>::deserialize(deserializer)?;
        QueryGraph::new(patterns).map_err(serde::de::Error::custom)
    }
}

impl QueryGraph {
    pub fn new(patterns: impl IntoIterator<Item = TriplePattern>) -> Result<Self, QueryError> {
        let patterns: BTreeSet<TriplePattern> = patterns.into_iter().collect();
        if patterns.is_empty() {
            return Err(QueryError::Empty);
        }
        for p in &patterns {
            p.validate()?;
        }
        Ok(Self {
            patterns: patterns.into_iter().collect(),
        })
    }

    pub fn patterns(&self) -> &[TriplePattern] {
        &self.patterns
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// `U`, sorted by name.
    pub fn variables(&self) -> BTreeSet<String> {
        self.patterns
            .iter()
            .flat_map(|p| p.terms())
            .filter_map(|t| t.as_var().map(str::to_owned))
            .collect()
    }

    /// `V'`: identifiers in subject or object position.
    pub fn entities(&self) -> BTreeSet<String> {
        self.patterns
            .iter()
            .flat_map(|p| [&p.subject, &p.object])
            .filter_map(|t| t.as_iri().map(str::to_owned))
            .collect()
    }

    /// `L'`.
    pub fn literals(&self) -> BTreeSet<String> {
        self.patterns
            .iter()
            .filter_map(|p| match &p.object {
                PatternTerm::Literal(v) => Some(v.clone()),
                _ => None,
            })
            .collect()
    }

    /// `E'`: identifiers in predicate position.
    pub fn properties(&self) -> BTreeSet<String> {
        self.patterns
            .iter()
            .filter_map(|p| p.predicate.as_iri().map(str::to_owned))
            .collect()
    }

    /// All constants (identifiers and literals) as terms.
    pub fn constants(&self) -> BTreeSet<Term> {
        self.patterns
            .iter()
            .flat_map(|p| p.terms())
            .filter_map(PatternTerm::to_term)
            .collect()
    }

    pub fn is_ground(&self) -> bool {
        self.patterns.iter().all(TriplePattern::is_ground)
    }

    /// Whether every pattern is connected to every other through shared variables
    /// or constants.
    pub fn is_connected(&self) -> bool {
        let n = self.patterns.len();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            let nodes: BTreeSet<&PatternTerm> = [&self.patterns[i].subject, &self.patterns[i].object].into();
            for (j, pattern) in self.patterns.iter().enumerate() {
                if !seen[j] && [&pattern.subject, &pattern.object].iter().any(|t| nodes.contains(t)) {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

impl fmt::Display for QueryGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.patterns.iter().enumerate() {
            if i > 0 {
                f.write_str(" . ")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

/// A total assignment of the query variables (names without `?`).
pub type Binding = BTreeMap<String, Term>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnswerSet {
    Ask(bool),
    Select(Vec<Binding>),
    Count(usize),
}

/// Evaluates `qg` with conjunctive basic-graph-pattern semantics.
pub fn execute_query(kg: &KnowledgeGraph, answer_type: AnswerType, qg: &QueryGraph) -> AnswerSet {
    let bindings = select(kg, qg);
    match answer_type {
        AnswerType::Select => AnswerSet::Select(bindings),
        AnswerType::Count => AnswerSet::Count(bindings.len()),
        AnswerType::Ask => AnswerSet::Ask(!bindings.is_empty()),
    }
}

/// All distinct solutions, sorted.
pub fn select(kg: &KnowledgeGraph, qg: &QueryGraph) -> Vec<Binding> {
    let mut results = BTreeSet::new();
    let mut remaining: Vec<&TriplePattern> = qg.patterns().iter().collect();
    let mut binding = Binding::new();
    solve(kg, &mut remaining, &mut binding, &mut results);
    results.into_iter().collect()
}

/// Whether the pattern has at least one match.
pub fn has_match(kg: &KnowledgeGraph, pattern: &TriplePattern) -> bool {
    let binding = Binding::new();
    candidates(kg, pattern, &binding)
        .into_iter()
        .any(|t| unify(pattern, t, &binding).is_some())
}

fn resolve(term: &PatternTerm, binding: &Binding) -> Option<Term> {
    match term {
        PatternTerm::Var(v) => binding.get(v).cloned(),
        other => other.to_term(),
    }
}

fn candidates<'a>(kg: &'a KnowledgeGraph, pattern: &TriplePattern, binding: &Binding) -> Vec<&'a Triple> {
    let subject = resolve(&pattern.subject, binding);
    let predicate = resolve(&pattern.predicate, binding);
    let object = resolve(&pattern.object, binding);

    let mut best: Option<&[usize]> = None;
    let mut consider = |slice: &'a [usize]| {
        if best.is_none_or(|b| slice.len() < b.len()) {
            best = Some(slice);
        }
    };
    match &subject {
        Some(Term::Iri(s)) => consider(kg.indices_for_subject(s)),
        Some(Term::Literal(_)) => return Vec::new(),
        None => {}
    }
    match &predicate {
        Some(Term::Iri(p)) => consider(kg.indices_for_predicate(p)),
        Some(Term::Literal(_)) => return Vec::new(),
        None => {}
    }
    if let Some(o) = &object {
        consider(kg.indices_for_object(o));
    }
    match best {
        Some(indices) => indices.iter().map(|&i| &kg.triples()[i]).collect(),
        None => kg.triples().iter().collect(),
    }
}

fn unify(pattern: &TriplePattern, triple: &Triple, binding: &Binding) -> Option<Vec<(String, Term)>> {
    let mut new: Vec<(String, Term)> = Vec::new();
    let pairs = [
        (&pattern.subject, Term::Iri(triple.subject.clone())),
        (&pattern.predicate, Term::Iri(triple.predicate.clone())),
        (&pattern.object, triple.object.clone()),
    ];
    for (term, value) in pairs {
        match term {
            PatternTerm::Var(v) => {
                let bound = binding
                    .get(v)
                    .or_else(|| new.iter().find(|(n, _)| n == v).map(|(_, t)| t));
                match bound {
                    Some(existing) if *existing != value => return None,
                    Some(_) => {}
                    None => new.push((v.clone(), value)),
                }
            }
            constant => {
                if constant.to_term().as_ref() != Some(&value) {
                    return None;
                }
            }
        }
    }
    Some(new)
}

fn solve(
    kg: &KnowledgeGraph,
    remaining: &mut Vec<&TriplePattern>,
    binding: &mut Binding,
    results: &mut BTreeSet<Binding>,
) {
    if remaining.is_empty() {
        results.insert(binding.clone());
        return;
    }
    // Most-constrained pattern first.
    let (pos, _) = remaining
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let unbound = p
                .terms()
                .iter()
                .filter(|t| matches!(t, PatternTerm::Var(v) if !binding.contains_key(v)))
                .count();
            (i, unbound)
        })
        .min_by_key(|&(i, unbound)| (unbound, i))
        .expect("non-empty");
    let pattern = remaining.swap_remove(pos);
    for triple in candidates(kg, pattern, binding) {
        if let Some(new) = unify(pattern, triple, binding) {
            for (name, value) in &new {
                binding.insert(name.clone(), value.clone());
            }
            solve(kg, remaining, binding, results);
            for (name, _) in &new {
                binding.remove(name);
            }
        }
    }
    remaining.push(pattern);
    let last = remaining.len() - 1;
    remaining.swap(pos, last);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qg(patterns: &[(&str, &str, &str)]) -> QueryGraph {
        QueryGraph::new(patterns.iter().map(|(s, p, o)| TriplePattern::parse(s, p, o))).unwrap()
    }

    #[test]
    fn select_on_empty_kg() {
        let kg = KnowledgeGraph::empty();
        let q = qg(&[("?u", "rdf:type", "dbo:Software")]);
        assert_eq!(execute_query(&kg, AnswerType::Select, &q), AnswerSet::Select(vec![]));
        assert_eq!(execute_query(&kg, AnswerType::Count, &q), AnswerSet::Count(0));
        assert_eq!(execute_query(&kg, AnswerType::Ask, &q), AnswerSet::Ask(false));
    }

    #[test]
    fn ask_on_constant_triple() {
        let kg = KnowledgeGraph::builder().triple("a", "p", "b").build();
        assert_eq!(
            execute_query(&kg, AnswerType::Ask, &qg(&[("a", "p", "b")])),
            AnswerSet::Ask(true)
        );
        assert_eq!(
            execute_query(&kg, AnswerType::Ask, &qg(&[("b", "p", "a")])),
            AnswerSet::Ask(false)
        );
    }

    #[test]
    fn join_and_predicate_variables() {
        let kg = KnowledgeGraph::builder()
            .triple("x", "p", "y")
            .triple("y", "q", "z")
            .triple("x", "r", "z")
            .build();
        let q = qg(&[("?a", "p", "?b"), ("?b", "q", "?c")]);
        let rows = select(&kg, &q);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0]["c"], Term::Iri("z".into()));

        let q = qg(&[("x", "?p", "?o")]);
        assert_eq!(select(&kg, &q).len(), 2);
    }

    #[test]
    fn repeated_variable_must_agree() {
        let kg = KnowledgeGraph::builder()
            .triple("a", "p", "a")
            .triple("a", "p", "b")
            .build();
        assert_eq!(select(&kg, &qg(&[("?x", "p", "?x")])).len(), 1);
    }

    #[test]
    fn invalid_graphs() {
        assert_eq!(QueryGraph::new(vec![]), Err(QueryError::Empty));
        assert!(matches!(
            QueryGraph::new(vec![TriplePattern::parse("\"lit", "p", "o")]),
            Err(QueryError::LiteralSubject(_))
        ));
    }

    #[test]
    fn derived_sets() {
        let q = qg(&[
            ("?uri", "rdf:type", "dbo:Software"),
            ("?uri", "dbo:programmingLanguage", "dbr:C++"),
            ("?uri", "dbo:releaseYear", "\"1999\""),
        ]);
        assert_eq!(q.variables(), BTreeSet::from(["uri".to_owned()]));
        assert_eq!(q.entities().len(), 2);
        assert_eq!(q.literals(), BTreeSet::from(["1999".to_owned()]));
        assert_eq!(q.properties().len(), 3);
        assert!(q.is_connected());
        assert!(!qg(&[("?a", "p", "x"), ("?b", "p", "y")]).is_connected());
    }

    #[test]
    fn answer_type_parsing() {
        assert_eq!("COUNT".parse::<AnswerType>(), Ok(AnswerType::Count));
        assert!("count".parse::<AnswerType>().is_err());
        assert_eq!(serde_json::to_string(&AnswerType::Ask).unwrap(), "\"ASK\"");
    }
}
