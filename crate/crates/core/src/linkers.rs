//! Shallow parsing and linking of information nuggets to KG elements.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kg::KnowledgeGraph;
use crate::pipeline::{InformationNugget, NuggetKind};
use crate::text::{content_words, default_stopwords, jaccard, normalize_surface, trigram_similarity, trigrams};

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("invalid lexicon JSON at `{path}`: {message}")]
    Json { path: String, message: String },
    #[error("empty surface in lexicon")]
    EmptySurface,
    #[error("surface `{0}` is a stopword")]
    StopwordSurface(String),
}

#[derive(Debug, Clone, Deserialize, Serialize)]
struct LexiconEntry {
    surface: String,
    id: String,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct LexiconFile {
    #[serde(default)]
    entities: Vec<LexiconEntry>,
    #[serde(default)]
    relations: Vec<LexiconEntry>,
}

/// Surface forms known to the shallow parser, each with a KG identifier hint.
#[derive(Debug, Clone)]
pub struct Lexicon {
    entity_surfaces: BTreeMap<String, String>,
    relation_surfaces: BTreeMap<String, String>,
    stopwords: BTreeSet<String>,
    max_tokens: usize,
}

impl Default for Lexicon {
    fn default() -> Self {
        Self {
            entity_surfaces: BTreeMap::new(),
            relation_surfaces: BTreeMap::new(),
            stopwords: default_stopwords(),
            max_tokens: 0,
        }
    }
}

/// Lowercased surface tokens with edge punctuation removed.
fn surface_key(s: &str) -> String {
    s.split_whitespace()
        .map(trim_token)
        .filter(|t| !t.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

const EDGE_PUNCT: &[char] = &['.', ',', '?', '!', ';', ':', '"', '\'', '(', ')', '[', ']'];

fn trim_token(token: &str) -> &str {
    token.trim_matches(EDGE_PUNCT)
}

impl Lexicon {
    pub fn from_json(source: &str) -> Result<Self, LexiconError> {
        let de = &mut serde_json::Deserializer::from_str(source);
        let file: LexiconFile = serde_path_to_error::deserialize(de).map_err(|e| LexiconError::Json {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        let mut lexicon = Lexicon::default();
        for e in file.entities {
            lexicon.add_entity(&e.surface, &e.id)?;
        }
        for r in file.relations {
            lexicon.add_relation(&r.surface, &r.id)?;
        }
        Ok(lexicon)
    }

    pub fn add_entity(&mut self, surface: &str, id: &str) -> Result<(), LexiconError> {
        let key = self.checked_key(surface)?;
        self.entity_surfaces.insert(key, id.to_owned());
        Ok(())
    }

    pub fn add_relation(&mut self, surface: &str, id: &str) -> Result<(), LexiconError> {
        let key = self.checked_key(surface)?;
        self.relation_surfaces.insert(key, id.to_owned());
        Ok(())
    }

    fn checked_key(&mut self, surface: &str) -> Result<String, LexiconError> {
        let key = surface_key(surface);
        if key.is_empty() {
            return Err(LexiconError::EmptySurface);
        }
        if self.stopwords.contains(&key) {
            return Err(LexiconError::StopwordSurface(key));
        }
        self.max_tokens = self.max_tokens.max(key.split(' ').count());
        Ok(key)
    }

    /// Replaces the stopword list, e.g. from an override file with one word per line.
    pub fn with_stopwords(mut self, stopwords: BTreeSet<String>) -> Result<Self, LexiconError> {
        let stopwords: BTreeSet<String> = stopwords
            .into_iter()
            .map(|w| w.trim().to_lowercase())
            .filter(|w| !w.is_empty())
            .collect();
        if let Some(clash) = self
            .entity_surfaces
            .keys()
            .chain(self.relation_surfaces.keys())
            .find(|k| stopwords.contains(*k))
        {
            return Err(LexiconError::StopwordSurface(clash.clone()));
        }
        self.stopwords = stopwords;
        Ok(self)
    }

    pub fn parse_stopword_file(source: &str) -> BTreeSet<String> {
        source
            .lines()
            .map(|l| l.trim().to_lowercase())
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect()
    }

    pub fn stopwords(&self) -> &BTreeSet<String> {
        &self.stopwords
    }

    pub fn entity_hint(&self, surface: &str) -> Option<&str> {
        self.entity_surfaces.get(&surface_key(surface)).map(String::as_str)
    }

    pub fn relation_hint(&self, surface: &str) -> Option<&str> {
        self.relation_surfaces.get(&surface_key(surface)).map(String::as_str)
    }

    fn kind_of(&self, key: &str) -> Option<NuggetKind> {
        if self.entity_surfaces.contains_key(key) {
            Some(NuggetKind::EntityLike)
        } else if self.relation_surfaces.contains_key(key) {
            Some(NuggetKind::RelationLike)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkMethod {
    Exact,
    Trigram,
    WordMatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkCandidate {
    pub target: String,
    pub raw_score: f64,
    pub method: LinkMethod,
}

struct Token {
    start: usize,
    end: usize,
    key: String,
}

fn tokenize_chars(chars: &[char]) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let mut start = i;
        while i < chars.len() && !chars[i].is_whitespace() {
            i += 1;
        }
        let mut end = i;
        while start < end && EDGE_PUNCT.contains(&chars[start]) {
            start += 1;
        }
        while end > start && EDGE_PUNCT.contains(&chars[end - 1]) {
            end -= 1;
        }
        if start < end {
            let key: String = chars[start..end].iter().collect::<String>().to_lowercase();
            tokens.push(Token { start, end, key });
        }
    }
    tokens
}

/// Greedy longest-match chunker. Lexicon surfaces become entity- or
/// relation-like nuggets; other non-stopword tokens become `Unknown` nuggets.
/// Spans are character offsets into `q_nl` and never overlap.
pub fn shallow_parse(q_nl: &str, lexicon: &Lexicon) -> Vec<InformationNugget> {
    let chars: Vec<char> = q_nl.chars().collect();
    let tokens = tokenize_chars(&chars);
    let mut nuggets = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let longest = lexicon.max_tokens.min(tokens.len() - i);
        let matched = (1..=longest).rev().find_map(|len| {
            let key = tokens[i..i + len]
                .iter()
                .map(|t| t.key.as_str())
                .collect::<Vec<_>>()
                .join(" ");
            lexicon.kind_of(&key).map(|kind| (len, kind))
        });
        let (len, kind) = match matched {
            Some(found) => found,
            None => {
                let token = &tokens[i];
                let content = !lexicon.stopwords.contains(&token.key) && token.key.chars().any(char::is_alphanumeric);
                if !content {
                    i += 1;
                    continue;
                }
                (1, NuggetKind::Unknown)
            }
        };
        let start = tokens[i].start;
        let end = tokens[i + len - 1].end;
        nuggets.push(InformationNugget {
            surface: chars[start..end].iter().collect(),
            span: (start, end),
            kind,
        });
        i += len;
    }
    nuggets
}

/// Top-`k` entities by trigram similarity between the nugget surface and the
/// entity label. A case-insensitive exact label match always ranks first.
pub fn link_entities(nugget: &InformationNugget, kg: &KnowledgeGraph, k: usize) -> Vec<LinkCandidate> {
    let surface_norm = normalize_surface(&nugget.surface);
    let mut pool: BTreeSet<&str> = BTreeSet::new();
    for gram in trigrams(&nugget.surface) {
        if let Some(ids) = kg.ids_with_trigram(&gram) {
            pool.extend(ids.iter().map(String::as_str).filter(|id| kg.is_entity(id)));
        }
    }
    let mut scored: Vec<(bool, f64, &str)> = pool
        .into_iter()
        .map(|id| {
            let label = kg.label(id);
            let exact = normalize_surface(&label) == surface_norm;
            let score = if exact {
                1.0
            } else {
                trigram_similarity(&nugget.surface, &label)
            };
            (exact, score, id)
        })
        .filter(|(_, score, _)| *score > 0.0)
        .collect();
    scored.sort_by(|a, b| {
        b.0.cmp(&a.0)
            .then_with(|| b.1.total_cmp(&a.1))
            .then_with(|| a.2.cmp(b.2))
    });
    scored
        .into_iter()
        .take(k)
        .map(|(exact, score, id)| LinkCandidate {
            target: id.to_owned(),
            raw_score: score,
            method: if exact { LinkMethod::Exact } else { LinkMethod::Trigram },
        })
        .collect()
}

/// Top-`k` properties by word overlap (Jaccard over content words, camel case
/// split) between the nugget and the property label, trigram similarity as
/// secondary key. With a non-empty context only properties incident to a
/// context entity are considered. Hierarchy predicates are never candidates.
pub fn link_relations(
    nugget: &InformationNugget,
    kg: &KnowledgeGraph,
    context_entities: &BTreeSet<String>,
    k: usize,
    stopwords: &BTreeSet<String>,
) -> Vec<LinkCandidate> {
    let words = content_words(&nugget.surface, stopwords);
    if words.is_empty() {
        return Vec::new();
    }
    let pool: BTreeSet<String> = if context_entities.is_empty() {
        kg.properties().clone()
    } else {
        context_entities
            .iter()
            .flat_map(|e| kg.incident_properties(e))
            .collect()
    };
    let mut scored: Vec<(f64, f64, String)> = pool
        .into_iter()
        .filter(|p| p != kg.type_pred() && p != kg.subclass_pred())
        .filter_map(|p| {
            let label = kg.label(&p);
            let overlap = jaccard(&words, &content_words(&label, stopwords));
            (overlap > 0.0).then(|| (overlap, trigram_similarity(&nugget.surface, &label), p))
        })
        .collect();
    scored.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then_with(|| b.1.total_cmp(&a.1))
            .then_with(|| a.2.cmp(&b.2))
    });
    scored
        .into_iter()
        .take(k)
        .map(|(overlap, _, p)| LinkCandidate {
            target: p,
            raw_score: overlap,
            method: LinkMethod::WordMatch,
        })
        .collect()
}
