//! Canonical string form of a query, equal for queries that differ only by
//! variable names or pattern order.

use std::collections::BTreeSet;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::query::{AnswerType, PatternTerm, QueryGraph, TriplePattern};

/// Largest variable count accepted by [`canonicalize`]; the search tries every
/// renaming permutation.
pub const MAX_VARIABLES: usize = 6;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CanonicalError {
    #[error("query has {0} variables; at most {MAX_VARIABLES} are supported")]
    TooManyVariables(usize),
}

fn render_term(term: &PatternTerm, names: &[&str], perm: &[usize]) -> String {
    match term {
        PatternTerm::Var(v) => {
            let idx = names.iter().position(|n| n == v).expect("variable collected");
            format!("?v{}", perm[idx])
        }
        PatternTerm::Iri(id) => {
            let escaped = id.replace('\\', "\\\\").replace('>', "\\>");
            format!("<{escaped}>")
        }
        PatternTerm::Literal(v) => serde_json::to_string(v).expect("string serializes"),
    }
}

fn render(at: AnswerType, patterns: &[TriplePattern], names: &[&str], perm: &[usize]) -> String {
    let rendered: BTreeSet<String> = patterns
        .iter()
        .map(|p| {
            format!(
                "{} {} {}",
                render_term(&p.subject, names, perm),
                render_term(&p.predicate, names, perm),
                render_term(&p.object, names, perm)
            )
        })
        .collect();
    let body: Vec<String> = rendered.into_iter().collect();
    format!("{at} {{ {} }}", body.join(" . "))
}

/// Minimal rendering over all variable renamings.
pub fn canonicalize(at: AnswerType, qg: &QueryGraph) -> Result<String, CanonicalError> {
    let vars = qg.variables();
    if vars.len() > MAX_VARIABLES {
        return Err(CanonicalError::TooManyVariables(vars.len()));
    }
    let names: Vec<&str> = vars.iter().map(String::as_str).collect();
    let mut perm: Vec<usize> = (0..names.len()).collect();
    let mut best = render(at, qg.patterns(), &names, &perm);
    while next_permutation(&mut perm) {
        let candidate = render(at, qg.patterns(), &names, &perm);
        if candidate < best {
            best = candidate;
        }
    }
    Ok(best)
}

/// Stable short identifier derived from a canonical string.
pub fn canonical_id(canonical: &str) -> String {
    let digest = Sha256::digest(canonical.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let Some(i) = (0..n - 1).rev().find(|&i| perm[i] < perm[i + 1]) else {
        return false;
    };
    let j = (i + 1..n).rev().find(|&j| perm[j] > perm[i]).expect("exists");
    perm.swap(i, j);
    perm[i + 1..].reverse();
    true
}
