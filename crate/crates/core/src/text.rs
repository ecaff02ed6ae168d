//! Word tokenization and word-level alignment primitives.
//!
//! Words are whitespace-delimited runs with leading and trailing
//! non-alphanumeric characters stripped, lowercased. Tokens that strip to
//! nothing (bare punctuation) are dropped. Every token remembers the
//! code-point span of the raw word it came from.

use std::collections::BTreeSet;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub word: String,
    /// Code-point span of the raw whitespace-delimited word.
    pub start: usize,
    pub end: usize,
}

pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut raw_start: Option<usize> = None;
    let mut raw = String::new();
    let flush = |start: usize, end: usize, raw: &mut String, tokens: &mut Vec<Token>| {
        let word = raw
            .trim_matches(|c: char| !c.is_alphanumeric())
            .to_lowercase();
        if !word.is_empty() {
            tokens.push(Token { word, start, end });
        }
        raw.clear();
    };
    let mut count = 0;
    for (i, c) in text.chars().enumerate() {
        count = i + 1;
        if c.is_whitespace() {
            if let Some(s) = raw_start.take() {
                flush(s, i, &mut raw, &mut tokens);
            }
        } else {
            raw_start.get_or_insert(i);
            raw.push(c);
        }
    }
    if let Some(s) = raw_start {
        flush(s, count, &mut raw, &mut tokens);
    }
    tokens
}

pub fn words(text: &str) -> Vec<String> {
    tokenize(text).into_iter().map(|t| t.word).collect()
}

pub fn word_set(text: &str) -> BTreeSet<String> {
    tokenize(text).into_iter().map(|t| t.word).collect()
}

/// Share of the distinct words of `subject` that also occur in `reference`.
/// Zero when `subject` has no words.
pub fn containment(subject: &str, reference: &str) -> f64 {
    let s = word_set(subject);
    if s.is_empty() {
        return 0.0;
    }
    let r = word_set(reference);
    s.intersection(&r).count() as f64 / s.len() as f64
}

/// Matched index pairs of a longest common subsequence of `a` and `b`.
/// `None` entries in `b` act as barriers that never match.
pub fn lcs_pairs(a: &[&str], b: &[Option<&str>]) -> Vec<(usize, usize)> {
    let (n, m) = (a.len(), b.len());
    // Suffix table: dp[i][j] = LCS length of a[i..], b[j..].
    let width = m + 1;
    let mut dp = vec![0u32; (n + 1) * width];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            dp[i * width + j] = if b[j] == Some(a[i]) {
                dp[(i + 1) * width + j + 1] + 1
            } else {
                dp[(i + 1) * width + j].max(dp[i * width + j + 1])
            };
        }
    }
    let mut pairs = Vec::with_capacity(dp[0] as usize);
    let (mut i, mut j) = (0, 0);
    while i < n && j < m {
        if b[j] == Some(a[i]) && dp[i * width + j] == dp[(i + 1) * width + j + 1] + 1 {
            pairs.push((i, j));
            i += 1;
            j += 1;
        } else if dp[(i + 1) * width + j] >= dp[i * width + j + 1] {
            i += 1;
        } else {
            j += 1;
        }
    }
    pairs
}

/// Levenshtein distance over word sequences divided by the longer length.
pub fn normalized_word_distance(a: &str, b: &str) -> f64 {
    let a = words(a);
    let b = words(b);
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 0.0;
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, wa) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, wb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(wa != wb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()] as f64 / longest as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_strips_punctuation_and_lowercases() {
        let t = tokenize("  Hello, World!  (ok) -- x");
        let w: Vec<_> = t.iter().map(|t| t.word.as_str()).collect();
        assert_eq!(w, ["hello", "world", "ok", "x"]);
        assert_eq!((t[0].start, t[0].end), (2, 8));
        assert_eq!((t[3].start, t[3].end), (25, 26));
    }

    #[test]
    fn tokenize_counts_code_points() {
        let t = tokenize("café née");
        assert_eq!((t[1].start, t[1].end), (5, 8));
    }

    #[test]
    fn lcs_respects_barriers() {
        let a = ["a", "b"];
        let b = [Some("a"), None, Some("b")];
        assert_eq!(lcs_pairs(&a, &b), vec![(0, 0), (1, 2)]);
        let b2 = [Some("b"), None, Some("a")];
        assert_eq!(lcs_pairs(&a, &b2).len(), 1);
    }

    #[test]
    fn word_distance_bounds() {
        assert_eq!(normalized_word_distance("same words", "Same, words!"), 0.0);
        assert_eq!(normalized_word_distance("", ""), 0.0);
        assert_eq!(normalized_word_distance("a b", ""), 1.0);
        assert!((normalized_word_distance("a b c d", "a b c e") - 0.25).abs() < 1e-12);
    }

    #[test]
    fn containment_is_share_of_subject() {
        assert_eq!(containment("a b", "a b c d"), 1.0);
        assert_eq!(containment("a b c d", "a b"), 0.5);
        assert_eq!(containment("", "a"), 0.0);
    }
}
