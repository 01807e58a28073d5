//! String helpers shared by the linkers and option scoring.

use std::collections::BTreeSet;

/// Boundary marker used to pad strings before extracting trigrams.
pub const PAD: char = '\u{0}';

/// Default stopword list. Besides function words it contains the imperative
/// and interrogative words that introduce questions ("list", "which", ...).
pub const DEFAULT_STOPWORDS: &[&str] = &[
    "a", "about", "all", "also", "an", "and", "any", "are", "as", "at", "be", "been", "both", "but", "by", "can",
    "could", "count", "did", "do", "does", "for", "from", "give", "had", "has", "have", "he", "her", "his", "how", "i",
    "in", "into", "is", "it", "its", "list", "many", "me", "much", "my", "name", "no", "not", "number", "of", "on",
    "or", "our", "over", "she", "show", "some", "tell", "than", "that", "the", "their", "them", "then", "there",
    "these", "they", "this", "those", "to", "under", "us", "was", "we", "were", "what", "when", "where", "which",
    "who", "whom", "whose", "will", "with", "would", "you", "your",
];

pub fn default_stopwords() -> BTreeSet<String> {
    DEFAULT_STOPWORDS.iter().map(|s| (*s).to_owned()).collect()
}

/// Set of padded, lowercased character trigrams. Empty input gives an empty set.
pub fn trigrams(s: &str) -> BTreeSet<String> {
    if s.is_empty() {
        return BTreeSet::new();
    }
    let chars: Vec<char> = [PAD, PAD]
        .into_iter()
        .chain(s.chars().flat_map(char::to_lowercase))
        .chain([PAD, PAD])
        .collect();
    chars.windows(3).map(|w| w.iter().collect()).collect()
}

/// Dice coefficient over padded trigram sets.
pub fn trigram_similarity(a: &str, b: &str) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let ga = trigrams(a);
    let gb = trigrams(b);
    let shared = ga.intersection(&gb).count();
    2.0 * shared as f64 / (ga.len() + gb.len()) as f64
}

/// Splits camelCase and PascalCase words: `operatingSystem` → `operating System`.
pub fn split_camel_case(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 4);
    let mut prev: Option<char> = None;
    for c in s.chars() {
        if let Some(p) = prev {
            if c.is_uppercase() && p.is_lowercase() {
                out.push(' ');
            }
        }
        out.push(c);
        prev = Some(c);
    }
    out
}

/// Lowercased alphanumeric word tokens after camel-case splitting.
pub fn word_tokens(s: &str) -> Vec<String> {
    split_camel_case(s)
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Word tokens with stopwords removed, as a set.
pub fn content_words(s: &str, stopwords: &BTreeSet<String>) -> BTreeSet<String> {
    word_tokens(s).into_iter().filter(|w| !stopwords.contains(w)).collect()
}

pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// Length in characters of the longest common contiguous substring.
pub fn longest_common_substring(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut best = 0;
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for &ca in &a {
        for (j, &cb) in b.iter().enumerate() {
            cur[j + 1] = if ca == cb { prev[j] + 1 } else { 0 };
            best = best.max(cur[j + 1]);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    best
}

/// `1 - LCS / max(|a|, |b|)` over lowercased strings; 0 when both are empty.
pub fn lcs_dissimilarity(nugget_surface: &str, option_label: &str) -> f64 {
    let a = nugget_surface.to_lowercase();
    let b = option_label.to_lowercase();
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return 0.0;
    }
    1.0 - longest_common_substring(&a, &b) as f64 / longest as f64
}

/// Lowercases and collapses runs of whitespace.
pub fn normalize_surface(s: &str) -> String {
    s.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trigram_identity_and_disjoint() {
        assert_eq!(trigram_similarity("mac os", "mac os"), 1.0);
        assert_eq!(trigram_similarity("abc", "xyz"), 0.0);
        assert_eq!(trigram_similarity("", ""), 1.0);
        assert_eq!(trigram_similarity("", "a"), 0.0);
    }

    #[test]
    fn trigram_hand_enumerated() {
        // "mac os":  ##m #ma mac "ac " "c o" " os" os# s##
        // "mac_os":  ##m #ma mac ac_   c_o   _os   os# s##
        // shared: ##m #ma mac os# s##  -> 2*5 / (8+8)
        assert!((trigram_similarity("mac os", "mac_os") - 0.625).abs() < 1e-12);
    }

    #[test]
    fn trigram_is_case_insensitive() {
        assert_eq!(trigram_similarity("Mac OS", "mac os"), 1.0);
    }

    #[test]
    fn camel_case() {
        assert_eq!(word_tokens("operatingSystem"), vec!["operating", "system"]);
        assert_eq!(
            word_tokens("programming language (written in)"),
            vec!["programming", "language", "written", "in"]
        );
    }

    #[test]
    fn lcs_examples() {
        assert_eq!(lcs_dissimilarity("C++", "C++"), 0.0);
        assert!((lcs_dissimilarity("C++", "C") - (1.0 - 1.0 / 3.0)).abs() < 1e-12);
        assert_eq!(lcs_dissimilarity("", ""), 0.0);
        // "written" / "programming language": longest shared run is 1 char.
        assert_eq!(longest_common_substring("written", "programming language"), 1);
        assert!((lcs_dissimilarity("written", "programming language") - (1.0 - 1.0 / 20.0)).abs() < 1e-12);
    }

    #[test]
    fn jaccard_basics() {
        let a: BTreeSet<String> = ["runs".to_owned()].into();
        let b: BTreeSet<String> = ["operating", "system", "runs"].iter().map(|s| s.to_string()).collect();
        assert!((jaccard(&a, &b) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(jaccard(&BTreeSet::new(), &BTreeSet::new()), 0.0);
    }
}
