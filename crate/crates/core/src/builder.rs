//! Query graph enumeration, structural scoring, and CQI probabilities.
//!
//! Generated graphs form a star around a single answer variable `?uri`:
//! class interpretations become `?uri type C` patterns and relation/entity
//! pairs become `?uri r e` or `e r ?uri`. A direction is kept only if the
//! half-ground pattern has a match in the KG. When every interpretation of an
//! assignment can be placed in variable-free patterns, ASK graphs are emitted
//! as well.

use std::collections::{BTreeMap, BTreeSet};

use crate::canonical::{canonical_id, canonicalize};
use crate::kg::{KnowledgeGraph, Vocabulary};
use crate::pipeline::{
    Cqi, InformationNugget, InterpretationSpace, KgElement, NuggetInterpretation, NuggetKind, UserQuestion,
};
use crate::query::{has_match, AnswerType, PatternTerm, QueryGraph, TriplePattern};

/// Name of the answer variable in generated graphs.
pub const ANSWER_VAR: &str = "uri";

/// Probability floor applied before renormalization.
pub const EPSILON: f64 = 1e-6;

/// One interpretation per covered nugget.
#[derive(Debug, Clone)]
pub struct CandidateAssignment {
    pub interpretations: Vec<NuggetInterpretation>,
}

impl CandidateAssignment {
    pub fn new(interpretations: Vec<NuggetInterpretation>) -> Self {
        Self { interpretations }
    }
}

/// A generated graph with the interpretations it uses (indices into the
/// assignment) and the answer types it may be asked with.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphCandidate {
    pub graph: QueryGraph,
    pub answer_types: Vec<AnswerType>,
    pub used: Vec<usize>,
}

#[derive(Debug, Clone)]
struct Atom {
    pattern: TriplePattern,
    uses: Vec<usize>,
}

fn answer_var() -> PatternTerm {
    PatternTerm::var(ANSWER_VAR)
}

fn element_term(element: &KgElement) -> PatternTerm {
    match element {
        KgElement::Entity(id) | KgElement::Property(id) => PatternTerm::Iri(id.clone()),
        KgElement::Literal(v) => PatternTerm::Literal(v.clone()),
    }
}

enum Role {
    Class,
    Instance,
    Relation,
}

fn role(ni: &NuggetInterpretation, kg: &KnowledgeGraph) -> Role {
    match &ni.target {
        KgElement::Entity(id) if kg.is_class(id) => Role::Class,
        KgElement::Entity(_) | KgElement::Literal(_) => Role::Instance,
        KgElement::Property(_) => Role::Relation,
    }
}

/// Enumerates graphs over the assignment, largest coverage first, at most `limit`.
pub fn enumerate_query_graphs(
    assignment: &CandidateAssignment,
    kg: &KnowledgeGraph,
    limit: usize,
) -> Vec<GraphCandidate> {
    let nis = &assignment.interpretations;
    let roles: Vec<Role> = nis.iter().map(|ni| role(ni, kg)).collect();
    let classes: Vec<usize> = (0..nis.len()).filter(|&i| matches!(roles[i], Role::Class)).collect();
    let instances: Vec<usize> = (0..nis.len()).filter(|&i| matches!(roles[i], Role::Instance)).collect();
    let relations: Vec<usize> = (0..nis.len()).filter(|&i| matches!(roles[i], Role::Relation)).collect();
    if classes.is_empty() && instances.is_empty() {
        return Vec::new();
    }
    let type_pred = PatternTerm::iri(kg.type_pred());

    let mut star_atoms: Vec<Atom> = classes
        .iter()
        .map(|&c| Atom {
            pattern: TriplePattern::new(answer_var(), type_pred.clone(), element_term(&nis[c].target)),
            uses: vec![c],
        })
        .collect();
    for &r in &relations {
        let rel = element_term(&nis[r].target);
        for &e in &instances {
            let ent = element_term(&nis[e].target);
            let probe = PatternTerm::var("probe");
            let outgoing = TriplePattern::new(probe.clone(), rel.clone(), ent.clone());
            if has_match(kg, &outgoing) {
                star_atoms.push(Atom {
                    pattern: TriplePattern::new(answer_var(), rel.clone(), ent.clone()),
                    uses: vec![r, e],
                });
            }
            if matches!(nis[e].target, KgElement::Entity(_)) {
                let incoming = TriplePattern::new(ent.clone(), rel.clone(), probe);
                if has_match(kg, &incoming) {
                    star_atoms.push(Atom {
                        pattern: TriplePattern::new(ent.clone(), rel.clone(), answer_var()),
                        uses: vec![r, e],
                    });
                }
            }
        }
    }

    let mut out: Vec<GraphCandidate> = Vec::new();
    for subset in matchings(&star_atoms, nis.len(), false) {
        let used: Vec<usize> = subset.iter().flat_map(|&a| star_atoms[a].uses.clone()).collect();
        let graph = QueryGraph::new(subset.iter().map(|&a| star_atoms[a].pattern.clone())).expect("non-empty");
        out.push(GraphCandidate {
            graph,
            answer_types: vec![AnswerType::Select, AnswerType::Count],
            used: sorted(used),
        });
    }

    // Ground graphs for ASK: every interpretation placed exactly once.
    if nis.len() >= 2 {
        let mut ground_atoms: Vec<Atom> = Vec::new();
        for &e in &instances {
            if !matches!(nis[e].target, KgElement::Entity(_)) {
                continue;
            }
            for &c in &classes {
                ground_atoms.push(Atom {
                    pattern: TriplePattern::new(
                        element_term(&nis[e].target),
                        type_pred.clone(),
                        element_term(&nis[c].target),
                    ),
                    uses: vec![e, c],
                });
            }
            for &r in &relations {
                let probe = TriplePattern::new(
                    element_term(&nis[e].target),
                    element_term(&nis[r].target),
                    PatternTerm::var("probe"),
                );
                if !has_match(kg, &probe) {
                    continue;
                }
                for &o in &instances {
                    if o != e {
                        ground_atoms.push(Atom {
                            pattern: TriplePattern::new(
                                element_term(&nis[e].target),
                                element_term(&nis[r].target),
                                element_term(&nis[o].target),
                            ),
                            uses: vec![e, r, o],
                        });
                    }
                }
            }
        }
        for subset in matchings(&ground_atoms, nis.len(), true) {
            let used: Vec<usize> = subset.iter().flat_map(|&a| ground_atoms[a].uses.clone()).collect();
            let graph = QueryGraph::new(subset.iter().map(|&a| ground_atoms[a].pattern.clone())).expect("non-empty");
            out.push(GraphCandidate {
                graph,
                answer_types: vec![AnswerType::Ask],
                used: sorted(used),
            });
        }
    }

    out.sort_by(|a, b| {
        b.used
            .len()
            .cmp(&a.used.len())
            .then_with(|| a.graph.cmp(&b.graph))
            .then_with(|| a.answer_types.cmp(&b.answer_types))
    });
    out.dedup_by(|a, b| a.graph == b.graph && a.answer_types == b.answer_types);
    out.truncate(limit);
    out
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}

/// Non-empty atom subsets in which no interpretation is used twice. With
/// `cover_all`, only subsets using every interpretation are returned.
fn matchings(atoms: &[Atom], n_interpretations: usize, cover_all: bool) -> Vec<Vec<usize>> {
    fn go(
        atoms: &[Atom],
        idx: usize,
        used: &mut Vec<bool>,
        current: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
        cover_all: bool,
    ) {
        if idx == atoms.len() {
            if !current.is_empty() && (!cover_all || used.iter().all(|&u| u)) {
                out.push(current.clone());
            }
            return;
        }
        go(atoms, idx + 1, used, current, out, cover_all);
        if atoms[idx].uses.iter().all(|&u| !used[u]) {
            for &u in &atoms[idx].uses {
                used[u] = true;
            }
            current.push(idx);
            go(atoms, idx + 1, used, current, out, cover_all);
            current.pop();
            for &u in &atoms[idx].uses {
                used[u] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(
        atoms,
        0,
        &mut vec![false; n_interpretations],
        &mut Vec::new(),
        &mut out,
        cover_all,
    );
    out
}

/// Answer type suggested by the question wording.
pub fn answer_type_cue(q_nl: &str) -> AnswerType {
    let lower = q_nl.trim().to_lowercase();
    let first = lower.split_whitespace().next().unwrap_or("");
    if lower.contains("how many") || lower.contains("number of") || first == "count" {
        AnswerType::Count
    } else if matches!(
        first,
        "is" | "are" | "was" | "were" | "does" | "do" | "did" | "can" | "has" | "have" | "had"
    ) {
        AnswerType::Ask
    } else {
        AnswerType::Select
    }
}

fn char_gap(a: (usize, usize), b: (usize, usize)) -> usize {
    b.0.saturating_sub(a.1).max(a.0.saturating_sub(b.1))
}

/// Whether `relation` is (one of) the closest relation-like spans to `entity`.
fn is_nearest_relation(
    entity: &InformationNugget,
    relation: &InformationNugget,
    relation_spans: &BTreeSet<(usize, usize)>,
) -> bool {
    let mine = char_gap(entity.span, relation.span);
    relation_spans.iter().all(|&other| char_gap(entity.span, other) >= mine)
}

/// Heuristic fit between a graph and the question wording: the fraction of
/// question nuggets covered by the graph's constants, plus the fraction of
/// patterns whose relation mention is the nearest relation mention to their
/// entity mention (type patterns over a mentioned class count as fitting),
/// plus one when the answer type agrees with the question's wording.
pub fn structural_score(
    qg: &QueryGraph,
    at: AnswerType,
    qi: &[NuggetInterpretation],
    question: &UserQuestion,
    vocabulary: &Vocabulary,
) -> f64 {
    let constants = qg.constants();
    let mapped: Vec<&NuggetInterpretation> = qi
        .iter()
        .filter(|ni| constants.contains(&ni.target.as_term()))
        .collect();

    let coverage = if question.nuggets.is_empty() {
        0.0
    } else {
        let covered: BTreeSet<(usize, usize)> = mapped
            .iter()
            .map(|ni| ni.nugget.span)
            .filter(|span| question.nugget_at(*span).is_some())
            .collect();
        covered.len() as f64 / question.nuggets.len() as f64
    };

    let mut by_target: BTreeMap<PatternTerm, &NuggetInterpretation> = BTreeMap::new();
    for ni in &mapped {
        let term = match &ni.target {
            KgElement::Entity(id) | KgElement::Property(id) => PatternTerm::Iri(id.clone()),
            KgElement::Literal(v) => PatternTerm::Literal(v.clone()),
        };
        by_target.entry(term).or_insert(ni);
    }
    let relation_spans: BTreeSet<(usize, usize)> = question
        .nuggets
        .iter()
        .filter(|n| n.kind == NuggetKind::RelationLike)
        .map(|n| n.span)
        .chain(
            mapped
                .iter()
                .filter(|ni| matches!(ni.target, KgElement::Property(_)))
                .map(|ni| ni.nugget.span),
        )
        .collect();

    let fitting = qg
        .patterns()
        .iter()
        .filter(|p| {
            if p.predicate.as_iri() == Some(vocabulary.type_pred.as_str()) {
                return by_target.contains_key(&p.object);
            }
            let Some(relation) = by_target.get(&p.predicate) else {
                return false;
            };
            [&p.subject, &p.object]
                .into_iter()
                .filter_map(|t| by_target.get(t))
                .any(|entity| is_nearest_relation(&entity.nugget, &relation.nugget, &relation_spans))
        })
        .count();
    let adjacency = fitting as f64 / qg.len() as f64;

    let form = if at == answer_type_cue(&question.q_nl) {
        1.0
    } else {
        0.0
    };
    coverage + adjacency + form
}

/// Unnormalized CQI probability: product of nugget-interpretation confidences
/// times the structural probability.
pub fn cqi_probability(qi_confidences: &[f64], structural_prob: f64) -> f64 {
    qi_confidences.iter().product::<f64>() * structural_prob
}

/// A CQI before normalization.
#[derive(Debug, Clone)]
pub struct ScoredCqi {
    pub qi: Vec<NuggetInterpretation>,
    pub answer_type: AnswerType,
    pub query_graph: QueryGraph,
    pub score: f64,
}

/// Merges candidates with the same canonical form (keeping the best-scored
/// derivation), floors scores at [`EPSILON`], and normalizes.
pub fn assemble_qis(cqis: Vec<ScoredCqi>) -> InterpretationSpace {
    let mut best: BTreeMap<String, (ScoredCqi, String)> = BTreeMap::new();
    for mut c in cqis {
        let Ok(canonical) = canonicalize(c.answer_type, &c.query_graph) else {
            continue;
        };
        c.qi.sort_by(|a, b| a.nugget.span.cmp(&b.nugget.span).then_with(|| a.target.cmp(&b.target)));
        let qi_key = c.qi.iter().map(NuggetInterpretation::key).collect::<Vec<_>>().join("|");
        match best.get(&canonical) {
            Some((kept, kept_key)) if kept.score > c.score || (kept.score == c.score && *kept_key <= qi_key) => {}
            _ => {
                best.insert(canonical, (c, qi_key));
            }
        }
    }
    let merged: Vec<Cqi> = best
        .into_iter()
        .map(|(canonical, (c, _))| Cqi {
            id: canonical_id(&canonical),
            qi: c.qi,
            answer_type: c.answer_type,
            query_graph: c.query_graph,
            probability: c.score.max(EPSILON),
            canonical,
        })
        .collect();
    InterpretationSpace::from_cqis(merged)
}
