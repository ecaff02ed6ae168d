use serde::{Deserialize, Serialize};

use crate::config::Thresholds;
use crate::model::{DocumentHistory, Node, NodeId};
use crate::text::containment;

/// A place among the children of a structural node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Position {
    pub parent: NodeId,
    pub after: Option<NodeId>,
}

/// Successive generations for the same spot, oldest first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationChain {
    /// First text node of each generation.
    pub links: Vec<NodeId>,
    /// Version each link was inserted in.
    pub versions: Vec<usize>,
    /// Where the newest link was inserted.
    pub anchor: Position,
}

impl IterationChain {
    pub fn depth(&self) -> usize {
        self.links.len()
    }

    pub fn head(&self) -> NodeId {
        *self.links.last().expect("chains are never empty")
    }

    pub fn root(&self) -> NodeId {
        self.links[0]
    }
}

struct Generation<'a> {
    node: NodeId,
    version: usize,
    at: Position,
    generated: &'a str,
    context: Option<&'a str>,
}

fn generations(h: &DocumentHistory) -> Vec<Generation<'_>> {
    h.insertions()
        .iter()
        .filter_map(|ins| {
            let node = *ins.nodes.first()?;
            let origin = h.original(node).and_then(Node::as_text)?.provenance.origin()?;
            Some(Generation {
                node,
                version: ins.version,
                at: Position {
                    parent: ins.parent,
                    after: ins.after,
                },
                generated: &origin.generated,
                context: origin.prompt.context(),
            })
        })
        .collect()
}

/// True when `earlier` was thrown away right before `later` took its place,
/// or `later` was asked for with much of `earlier` as context.
fn linked(h: &DocumentHistory, earlier: &Generation, later: &Generation, t: &Thresholds) -> bool {
    let replaced = h.removals().iter().any(|r| {
        r.node == earlier.node
            && r.version + 1 == later.version
            && r.path.iter().any(|level| {
                level.parent == later.at.parent && level.preceding.first().copied() == later.at.after
            })
    });
    replaced
        || later
            .context
            .is_some_and(|c| containment(earlier.generated, c) >= t.chain_overlap)
}

/// Link each generation to the latest earlier one it iterates on, if that
/// one has no successor yet, and keep chains of two or more.
pub fn detect_iteration_chains(h: &DocumentHistory, thresholds: &Thresholds) -> Vec<IterationChain> {
    let gens = generations(h);
    let mut prev: Vec<Option<usize>> = vec![None; gens.len()];
    let mut next: Vec<Option<usize>> = vec![None; gens.len()];
    for j in 0..gens.len() {
        let pick = (0..j)
            .rev()
            .find(|&i| next[i].is_none() && linked(h, &gens[i], &gens[j], thresholds));
        if let Some(i) = pick {
            next[i] = Some(j);
            prev[j] = Some(i);
        }
    }
    let mut chains = Vec::new();
    for start in 0..gens.len() {
        if prev[start].is_some() || next[start].is_none() {
            continue;
        }
        let mut members = vec![start];
        while let Some(n) = next[*members.last().unwrap()] {
            members.push(n);
        }
        let head = &gens[*members.last().unwrap()];
        chains.push(IterationChain {
            links: members.iter().map(|&k| gens[k].node).collect(),
            versions: members.iter().map(|&k| gens[k].version).collect(),
            anchor: head.at,
        });
    }
    chains
}
