//! Immutable in-memory knowledge graph.
//!
//! Triples are loaded from a three-column TSV file. Literal objects start with
//! a double quote. Lines whose predicate is the label predicate (default
//! `rdfs:label`) set display labels instead of adding triples.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::trigrams;

pub const DEFAULT_TYPE_PREDICATE: &str = "rdf:type";
pub const DEFAULT_SUBCLASS_PREDICATE: &str = "rdfs:subClassOf";
pub const DEFAULT_LABEL_PREDICATE: &str = "rdfs:label";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum KgError {
    #[error("line {line}: expected 3 tab-separated fields, found {found}")]
    FieldCount { line: usize, found: usize },
    #[error("line {line}: empty field")]
    EmptyField { line: usize },
    #[error("line {line}: {position} may not be a literal")]
    LiteralPosition { line: usize, position: &'static str },
    #[error("line {line}: label object must be a literal")]
    LabelNotLiteral { line: usize },
    #[error("unknown entity `{0}`")]
    UnknownEntity(String),
}

/// An RDF term in object position: an identifier or a literal string.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum Term {
    Iri(String),
    Literal(String),
}

impl Term {
    pub fn as_iri(&self) -> Option<&str> {
        match self {
            Term::Iri(id) => Some(id),
            Term::Literal(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(id) => f.write_str(id),
            Term::Literal(value) => write!(f, "\"{value}\""),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: String,
    pub predicate: String,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: impl Into<String>, predicate: impl Into<String>, object: Term) -> Self {
        Self {
            subject: subject.into(),
            predicate: predicate.into(),
            object,
        }
    }
}

/// Identifiers of the predicates with structural meaning.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub type_pred: String,
    pub subclass_pred: String,
    pub label_pred: String,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self {
            type_pred: DEFAULT_TYPE_PREDICATE.to_owned(),
            subclass_pred: DEFAULT_SUBCLASS_PREDICATE.to_owned(),
            label_pred: DEFAULT_LABEL_PREDICATE.to_owned(),
        }
    }
}

/// Display label derived from an identifier: the text after the last `/`,
/// `#` or `:`, with underscores replaced by spaces.
pub fn local_name(id: &str) -> String {
    let start = id.rfind(['/', '#', ':']).map_or(0, |i| i + 1);
    let name = if start >= id.len() { id } else { &id[start..] };
    name.replace('_', " ")
}

#[derive(Debug, Default)]
pub struct KgBuilder {
    vocabulary: Vocabulary,
    triples: BTreeSet<Triple>,
    labels: BTreeMap<String, String>,
}

impl KgBuilder {
    pub fn with_vocabulary(mut self, vocabulary: Vocabulary) -> Self {
        self.vocabulary = vocabulary;
        self
    }

    pub fn triple(mut self, subject: &str, predicate: &str, object: &str) -> Self {
        self.add_iri_triple(subject, predicate, object);
        self
    }

    pub fn add_iri_triple(&mut self, subject: &str, predicate: &str, object: &str) {
        self.add_triple(Triple::new(subject, predicate, Term::Iri(object.to_owned())));
    }

    pub fn add_triple(&mut self, triple: Triple) {
        self.triples.insert(triple);
    }

    pub fn label(mut self, id: &str, label: &str) -> Self {
        self.set_label(id, label);
        self
    }

    pub fn set_label(&mut self, id: &str, label: &str) {
        self.labels.insert(id.to_owned(), label.to_owned());
    }

    pub fn build(self) -> KnowledgeGraph {
        KnowledgeGraph::from_parts(self.vocabulary, self.triples, self.labels)
    }
}

/// The graph `(V, L, E, T)` with label and trigram indexes.
#[derive(Debug, Clone)]
pub struct KnowledgeGraph {
    vocabulary: Vocabulary,
    entities: BTreeSet<String>,
    literals: BTreeSet<String>,
    properties: BTreeSet<String>,
    triples: Vec<Triple>,
    explicit_labels: BTreeMap<String, String>,
    labels: BTreeMap<String, String>,
    trigram_index: HashMap<String, BTreeSet<String>>,
    by_subject: HashMap<String, Vec<usize>>,
    by_predicate: HashMap<String, Vec<usize>>,
    by_object: HashMap<Term, Vec<usize>>,
    classes: BTreeSet<String>,
}

impl PartialEq for KnowledgeGraph {
    fn eq(&self, other: &Self) -> bool {
        self.vocabulary == other.vocabulary
            && self.triples == other.triples
            && self.explicit_labels == other.explicit_labels
    }
}

impl KnowledgeGraph {
    pub fn builder() -> KgBuilder {
        KgBuilder::default()
    }

    pub fn empty() -> Self {
        KgBuilder::default().build()
    }

    fn from_parts(
        vocabulary: Vocabulary,
        triples: BTreeSet<Triple>,
        explicit_labels: BTreeMap<String, String>,
    ) -> Self {
        let triples: Vec<Triple> = triples.into_iter().collect();
        let mut entities = BTreeSet::new();
        let mut literals = BTreeSet::new();
        let mut properties = BTreeSet::new();
        let mut by_subject: HashMap<String, Vec<usize>> = HashMap::new();
        let mut by_predicate: HashMap<String, Vec<usize>> = HashMap::new();
        let mut by_object: HashMap<Term, Vec<usize>> = HashMap::new();
        let mut classes = BTreeSet::new();

        for (i, t) in triples.iter().enumerate() {
            entities.insert(t.subject.clone());
            properties.insert(t.predicate.clone());
            match &t.object {
                Term::Iri(id) => {
                    entities.insert(id.clone());
                }
                Term::Literal(value) => {
                    literals.insert(value.clone());
                }
            }
            by_subject.entry(t.subject.clone()).or_default().push(i);
            by_predicate.entry(t.predicate.clone()).or_default().push(i);
            by_object.entry(t.object.clone()).or_default().push(i);

            if let Term::Iri(object) = &t.object {
                if t.predicate == vocabulary.type_pred {
                    classes.insert(object.clone());
                } else if t.predicate == vocabulary.subclass_pred {
                    classes.insert(object.clone());
                    classes.insert(t.subject.clone());
                }
            }
        }

        let mut labels = BTreeMap::new();
        for id in entities.iter().chain(properties.iter()) {
            let label = explicit_labels.get(id).cloned().unwrap_or_else(|| local_name(id));
            labels.insert(id.clone(), label);
        }

        let mut trigram_index: HashMap<String, BTreeSet<String>> = HashMap::new();
        for (id, label) in &labels {
            for gram in trigrams(label) {
                trigram_index.entry(gram).or_default().insert(id.clone());
            }
        }

        Self {
            vocabulary,
            entities,
            literals,
            properties,
            triples,
            explicit_labels,
            labels,
            trigram_index,
            by_subject,
            by_predicate,
            by_object,
            classes,
        }
    }

    /// Parses the TSV triple format.
    pub fn from_tsv(source: &str) -> Result<Self, KgError> {
        Self::from_tsv_with(source, Vocabulary::default())
    }

    pub fn from_tsv_with(source: &str, vocabulary: Vocabulary) -> Result<Self, KgError> {
        let mut builder = KgBuilder::default().with_vocabulary(vocabulary);
        for (idx, raw) in source.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(KgError::FieldCount {
                    line: line_no,
                    found: fields.len(),
                });
            }
            if fields.iter().any(|f| f.is_empty()) {
                return Err(KgError::EmptyField { line: line_no });
            }
            let (subject, predicate, object) = (fields[0], fields[1], fields[2]);
            if subject.starts_with('"') {
                return Err(KgError::LiteralPosition {
                    line: line_no,
                    position: "subject",
                });
            }
            if predicate.starts_with('"') {
                return Err(KgError::LiteralPosition {
                    line: line_no,
                    position: "predicate",
                });
            }
            let object = parse_object(object);
            if predicate == builder.vocabulary.label_pred {
                match object {
                    Term::Literal(label) => builder.set_label(subject, &label),
                    Term::Iri(_) => return Err(KgError::LabelNotLiteral { line: line_no }),
                }
                continue;
            }
            builder.add_triple(Triple::new(subject, predicate, object));
        }
        Ok(builder.build())
    }

    /// Serializes back into the TSV format; `from_tsv(g.to_tsv()) == g`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for t in &self.triples {
            out.push_str(&t.subject);
            out.push('\t');
            out.push_str(&t.predicate);
            out.push('\t');
            match &t.object {
                Term::Iri(id) => out.push_str(id),
                Term::Literal(value) => {
                    out.push('"');
                    out.push_str(value);
                    out.push('"');
                }
            }
            out.push('\n');
        }
        for (id, label) in &self.explicit_labels {
            out.push_str(&format!("{id}\t{}\t\"{label}\"\n", self.vocabulary.label_pred));
        }
        out
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn type_pred(&self) -> &str {
        &self.vocabulary.type_pred
    }

    pub fn subclass_pred(&self) -> &str {
        &self.vocabulary.subclass_pred
    }

    pub fn entities(&self) -> &BTreeSet<String> {
        &self.entities
    }

    pub fn literals(&self) -> &BTreeSet<String> {
        &self.literals
    }

    pub fn properties(&self) -> &BTreeSet<String> {
        &self.properties
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn is_entity(&self, id: &str) -> bool {
        self.entities.contains(id)
    }

    pub fn is_property(&self, id: &str) -> bool {
        self.properties.contains(id)
    }

    /// Whether the identifier is used as a class: object of a type triple or
    /// either end of a subclass triple.
    pub fn is_class(&self, id: &str) -> bool {
        self.classes.contains(id)
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        self.triples.binary_search(triple).is_ok()
    }

    /// Display label of an entity or property; falls back to the local name.
    pub fn label(&self, id: &str) -> String {
        self.labels.get(id).cloned().unwrap_or_else(|| local_name(id))
    }

    pub fn labels(&self) -> &BTreeMap<String, String> {
        &self.labels
    }

    /// Identifiers whose label shares the given padded trigram.
    pub fn ids_with_trigram(&self, gram: &str) -> Option<&BTreeSet<String>> {
        self.trigram_index.get(gram)
    }

    /// Rebuilds the trigram index from labels; used to check consistency.
    pub fn rebuild_trigram_index(&self) -> HashMap<String, BTreeSet<String>> {
        let mut index: HashMap<String, BTreeSet<String>> = HashMap::new();
        for (id, label) in &self.labels {
            for gram in trigrams(label) {
                index.entry(gram).or_default().insert(id.clone());
            }
        }
        index
    }

    pub fn trigram_index(&self) -> &HashMap<String, BTreeSet<String>> {
        &self.trigram_index
    }

    pub(crate) fn indices_for_subject(&self, subject: &str) -> &[usize] {
        self.by_subject.get(subject).map_or(&[], Vec::as_slice)
    }

    pub(crate) fn indices_for_predicate(&self, predicate: &str) -> &[usize] {
        self.by_predicate.get(predicate).map_or(&[], Vec::as_slice)
    }

    pub(crate) fn indices_for_object(&self, object: &Term) -> &[usize] {
        self.by_object.get(object).map_or(&[], Vec::as_slice)
    }

    pub fn triples_with_subject<'a>(&'a self, subject: &str) -> impl Iterator<Item = &'a Triple> {
        self.indices_for_subject(subject).iter().map(|&i| &self.triples[i])
    }

    pub fn triples_with_predicate<'a>(&'a self, predicate: &str) -> impl Iterator<Item = &'a Triple> {
        self.indices_for_predicate(predicate).iter().map(|&i| &self.triples[i])
    }

    pub fn triples_with_object<'a>(&'a self, object: &Term) -> impl Iterator<Item = &'a Triple> {
        self.indices_for_object(object).iter().map(|&i| &self.triples[i])
    }

    /// Properties used as predicate in a triple touching `id` on either end.
    pub fn incident_properties(&self, id: &str) -> BTreeSet<String> {
        let as_object = Term::Iri(id.to_owned());
        self.triples_with_subject(id)
            .chain(self.triples_with_object(&as_object))
            .map(|t| t.predicate.clone())
            .collect()
    }

    /// Classes reachable from `entity`: one type or subclass hop to depth 1,
    /// then subclass hops only. Each class appears once at its minimal depth,
    /// sorted by depth then identifier.
    pub fn type_closure(&self, entity: &str, max_depth: usize) -> Result<Vec<(String, usize)>, KgError> {
        if !self.entities.contains(entity) {
            return Err(KgError::UnknownEntity(entity.to_owned()));
        }
        let mut out: Vec<(String, usize)> = self
            .abstraction_distances(entity, max_depth)
            .into_iter()
            .filter(|(id, depth)| *depth >= 1 && id != entity)
            .collect();
        out.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        Ok(out)
    }

    /// Minimal hop count from `from` to `to` under the same edge rule as
    /// [`KnowledgeGraph::type_closure`]. `Some(0)` iff the two are equal.
    pub fn shortest_abstraction_path(&self, from: &str, to: &str) -> Option<usize> {
        if !self.entities.contains(from) && !self.properties.contains(from) {
            return None;
        }
        if from == to {
            return Some(0);
        }
        self.abstraction_distances(from, usize::MAX).get(to).copied()
    }

    fn abstraction_distances(&self, start: &str, max_depth: usize) -> BTreeMap<String, usize> {
        let mut dist: BTreeMap<String, usize> = BTreeMap::new();
        dist.insert(start.to_owned(), 0);
        let mut queue = VecDeque::from([(start.to_owned(), 0usize)]);
        while let Some((node, depth)) = queue.pop_front() {
            if depth >= max_depth {
                continue;
            }
            for t in self.triples_with_subject(&node) {
                let follow = t.predicate == self.vocabulary.subclass_pred
                    || (depth == 0 && t.predicate == self.vocabulary.type_pred);
                if !follow {
                    continue;
                }
                if let Term::Iri(next) = &t.object {
                    if !dist.contains_key(next) {
                        dist.insert(next.clone(), depth + 1);
                        queue.push_back((next.clone(), depth + 1));
                    }
                }
            }
        }
        dist
    }
}

fn parse_object(field: &str) -> Term {
    match field.strip_prefix('"') {
        Some(rest) => Term::Literal(rest.strip_suffix('"').unwrap_or(rest).to_owned()),
        None => Term::Iri(field.to_owned()),
    }
}
