//! Slow, obviously-correct versions of the text measures and chain rules.

use std::collections::{BTreeSet, HashMap};

use draftmarks_core::model::{DocumentHistory, Node, NodeId};

/// Lowercased words with surrounding punctuation removed.
pub fn words(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| {
            let chars: Vec<char> = w.chars().collect();
            let first = chars.iter().position(|c| c.is_alphanumeric());
            let last = chars.iter().rposition(|c| c.is_alphanumeric());
            match (first, last) {
                (Some(a), Some(b)) => chars[a..=b].iter().collect::<String>().to_lowercase(),
                _ => String::new(),
            }
        })
        .filter(|w| !w.is_empty())
        .collect()
}

pub fn containment(subject: &str, reference: &str) -> f64 {
    let s: BTreeSet<String> = words(subject).into_iter().collect();
    let r: BTreeSet<String> = words(reference).into_iter().collect();
    if s.is_empty() {
        return 0.0;
    }
    s.iter().filter(|w| r.contains(*w)).count() as f64 / s.len() as f64
}

/// LCS length by memoized recursion. `None` in `b` never matches.
pub fn lcs_len(a: &[&str], b: &[Option<&str>]) -> usize {
    fn go(
        a: &[&str],
        b: &[Option<&str>],
        i: usize,
        j: usize,
        memo: &mut HashMap<(usize, usize), usize>,
    ) -> usize {
        if i == a.len() || j == b.len() {
            return 0;
        }
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let v = if b[j] == Some(a[i]) {
            1 + go(a, b, i + 1, j + 1, memo)
        } else {
            go(a, b, i + 1, j, memo).max(go(a, b, i, j + 1, memo))
        };
        memo.insert((i, j), v);
        v
    }
    go(a, b, 0, 0, &mut HashMap::new())
}

/// Word-level Levenshtein distance, memoized recursion.
pub fn word_distance(a: &[String], b: &[String]) -> usize {
    fn go(a: &[String], b: &[String], i: usize, j: usize, memo: &mut HashMap<(usize, usize), usize>) -> usize {
        if i == a.len() {
            return b.len() - j;
        }
        if j == b.len() {
            return a.len() - i;
        }
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let v = if a[i] == b[j] {
            go(a, b, i + 1, j + 1, memo)
        } else {
            1 + go(a, b, i + 1, j + 1, memo)
                .min(go(a, b, i + 1, j, memo))
                .min(go(a, b, i, j + 1, memo))
        };
        memo.insert((i, j), v);
        v
    }
    go(a, b, 0, 0, &mut HashMap::new())
}

pub fn normalized_distance(a: &str, b: &str) -> f64 {
    let (a, b) = (words(a), words(b));
    let longest = a.len().max(b.len());
    if longest == 0 {
        0.0
    } else {
        word_distance(&a, &b) as f64 / longest as f64
    }
}

/// One AI generation as seen by the chain rules.
#[derive(Debug, Clone)]
pub struct Gen {
    pub node: NodeId,
    pub version: usize,
    pub parent: NodeId,
    pub after: Option<NodeId>,
    pub generated: String,
    pub context: Option<String>,
}

pub fn generations(h: &DocumentHistory) -> Vec<Gen> {
    h.insertions()
        .iter()
        .filter_map(|ins| {
            let node = *ins.nodes.first()?;
            let Some(Node::Text(t)) = h.record(node) else { return None };
            let origin = t.provenance.origin()?;
            Some(Gen {
                node,
                version: ins.version,
                parent: ins.parent,
                after: ins.after,
                generated: origin.generated.clone(),
                context: origin
                    .prompt
                    .context
                    .clone()
                    .filter(|c| !c.trim().is_empty()),
            })
        })
        .collect()
}

/// Pairs `(i, j)`, `i < j`, of generations the chain rules would connect.
pub fn linkable_pairs(h: &DocumentHistory, chain_overlap: f64) -> Vec<(usize, usize)> {
    let gens = generations(h);
    let mut out = Vec::new();
    for j in 0..gens.len() {
        for i in 0..j {
            let (e, l) = (&gens[i], &gens[j]);
            let replaced = h.removals().iter().any(|r| {
                r.node == e.node
                    && r.version + 1 == l.version
                    && r
                        .path
                        .iter()
                        .any(|lv| lv.parent == l.parent && lv.preceding.first().copied() == l.after)
            });
            let reused = l
                .context
                .as_deref()
                .is_some_and(|c| containment(&e.generated, c) >= chain_overlap);
            if replaced || reused {
                out.push((i, j));
            }
        }
    }
    out
}
