use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};

use super::construct::{default_registry, Construct, ConstructId, Role};
use crate::error::{Error, Result};

/// Class of a relationship in the acceptance graph. Metadata only; never
/// used by inference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeTheory {
    Utaut,
    Utaut2,
    Additional,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub from: ConstructId,
    pub to: ConstructId,
    pub theory: EdgeTheory,
}

impl Edge {
    pub fn new(from: ConstructId, to: ConstructId, theory: EdgeTheory) -> Self {
        Self { from, to, theory }
    }
}

/// Directed acyclic graph over constructs.
///
/// Construction does not validate; use [`validate_graph`] or
/// [`AcceptanceGraph::validated`] to check a graph read from outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceGraph {
    pub nodes: Vec<Construct>,
    pub edges: Vec<Edge>,
}

/// The acceptance graph: ten predictors into BI, plus BI, FC and HB into USE.
pub fn default_graph() -> AcceptanceGraph {
    use ConstructId::*;
    use EdgeTheory::*;
    let mut edges = vec![
        Edge::new(PE, BI, Utaut),
        Edge::new(EE, BI, Utaut),
        Edge::new(SI, BI, Utaut),
        Edge::new(FC, BI, Utaut2),
        Edge::new(HM, BI, Utaut2),
        Edge::new(HB, BI, Utaut2),
        Edge::new(TC, BI, Additional),
        Edge::new(PI, BI, Additional),
        Edge::new(CT, BI, Additional),
        Edge::new(TR, BI, Additional),
    ];
    edges.extend([
        Edge::new(BI, USE, Utaut),
        Edge::new(FC, USE, Utaut),
        Edge::new(HB, USE, Utaut2),
    ]);
    AcceptanceGraph {
        nodes: default_registry(),
        edges,
    }
}

impl AcceptanceGraph {
    pub fn contains(&self, id: ConstructId) -> bool {
        self.nodes.iter().any(|c| c.id == id)
    }

    pub fn node(&self, id: ConstructId) -> Option<&Construct> {
        self.nodes.iter().find(|c| c.id == id)
    }

    /// Node ids in registry order.
    pub fn node_ids(&self) -> Vec<ConstructId> {
        let set: BTreeSet<_> = self.nodes.iter().map(|c| c.id).collect();
        set.into_iter().collect()
    }

    pub fn predictors(&self) -> Vec<ConstructId> {
        let mut ids: Vec<_> = self
            .nodes
            .iter()
            .filter(|c| c.role == Role::Predictor)
            .map(|c| c.id)
            .collect();
        ids.sort();
        ids
    }

    pub fn parents(&self, node: ConstructId) -> Result<Vec<ConstructId>> {
        parents(self, node)
    }

    pub fn validated(self) -> Result<Self> {
        let report = validate_graph(&self);
        if report.is_valid() {
            Ok(self)
        } else {
            Err(Error::InvalidGraph(report.to_string()))
        }
    }

    /// Graph restricted to the given edges; nodes are kept.
    pub fn with_edges(&self, edges: Vec<Edge>) -> Self {
        Self {
            nodes: self.nodes.clone(),
            edges,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum Finding {
    Cycle { nodes: Vec<ConstructId> },
    DanglingEndpoint { from: ConstructId, to: ConstructId, missing: ConstructId },
    SelfLoop { node: ConstructId },
    InvalidTarget { from: ConstructId, to: ConstructId },
    DuplicateEdge { from: ConstructId, to: ConstructId },
    DuplicateNode { node: ConstructId },
    MissingOutcome { node: ConstructId },
    RoleMismatch { node: ConstructId },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn has_cycle(&self) -> bool {
        self.findings
            .iter()
            .any(|f| matches!(f, Finding::Cycle { .. }))
    }

    pub fn has_dangling(&self) -> bool {
        self.findings
            .iter()
            .any(|f| matches!(f, Finding::DanglingEndpoint { .. }))
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.findings.is_empty() {
            return f.write_str("valid");
        }
        let parts: Vec<String> = self.findings.iter().map(|x| format!("{x:?}")).collect();
        f.write_str(&parts.join("; "))
    }
}

pub fn validate_graph(g: &AcceptanceGraph) -> ValidationReport {
    let mut findings = Vec::new();
    let mut seen = BTreeSet::new();
    for c in &g.nodes {
        if !seen.insert(c.id) {
            findings.push(Finding::DuplicateNode { node: c.id });
        }
        let expected = match c.id {
            ConstructId::BI => Role::Intention,
            ConstructId::USE => Role::Use,
            _ => Role::Predictor,
        };
        if c.role != expected {
            findings.push(Finding::RoleMismatch { node: c.id });
        }
    }
    for outcome in [ConstructId::BI, ConstructId::USE] {
        if !seen.contains(&outcome) {
            findings.push(Finding::MissingOutcome { node: outcome });
        }
    }

    let mut pairs = BTreeSet::new();
    for e in &g.edges {
        if e.from == e.to {
            findings.push(Finding::SelfLoop { node: e.from });
        }
        if !e.to.is_outcome() {
            findings.push(Finding::InvalidTarget {
                from: e.from,
                to: e.to,
            });
        }
        for end in [e.from, e.to] {
            if !seen.contains(&end) {
                findings.push(Finding::DanglingEndpoint {
                    from: e.from,
                    to: e.to,
                    missing: end,
                });
            }
        }
        if !pairs.insert((e.from, e.to)) {
            findings.push(Finding::DuplicateEdge {
                from: e.from,
                to: e.to,
            });
        }
    }

    if let Err(Error::Cycle(nodes)) = kahn(g) {
        findings.push(Finding::Cycle { nodes });
    }
    ValidationReport { findings }
}

/// Sources of all edges into `node`. Outcome parents (the BI mediator) come
/// first, then predictors in registry order, so USE's parents read
/// `[BI, FC, HB]`.
pub fn parents(g: &AcceptanceGraph, node: ConstructId) -> Result<Vec<ConstructId>> {
    if !g.contains(node) {
        return Err(Error::UnknownNode(node));
    }
    let set: BTreeSet<_> = g
        .edges
        .iter()
        .filter(|e| e.to == node)
        .map(|e| (!e.from.is_outcome(), e.from))
        .collect();
    Ok(set.into_iter().map(|(_, id)| id).collect())
}

/// Topological order, ties broken by registry order.
pub fn topological_order(g: &AcceptanceGraph) -> Result<Vec<ConstructId>> {
    kahn(g)
}

fn kahn(g: &AcceptanceGraph) -> Result<Vec<ConstructId>> {
    let nodes: BTreeSet<_> = g.nodes.iter().map(|c| c.id).collect();
    let mut indegree: BTreeMap<ConstructId, usize> = nodes.iter().map(|&n| (n, 0)).collect();
    let mut children: BTreeMap<ConstructId, BTreeSet<ConstructId>> = BTreeMap::new();
    for e in &g.edges {
        if !nodes.contains(&e.from) || !nodes.contains(&e.to) {
            continue;
        }
        if children.entry(e.from).or_default().insert(e.to) {
            *indegree.get_mut(&e.to).expect("node present") += 1;
        }
    }
    let mut ready: BinaryHeap<Reverse<ConstructId>> = indegree
        .iter()
        .filter(|(_, &d)| d == 0)
        .map(|(&n, _)| Reverse(n))
        .collect();
    let mut order = Vec::with_capacity(nodes.len());
    while let Some(Reverse(n)) = ready.pop() {
        order.push(n);
        for &c in children.get(&n).into_iter().flatten() {
            let d = indegree.get_mut(&c).expect("node present");
            *d -= 1;
            if *d == 0 {
                ready.push(Reverse(c));
            }
        }
    }
    if order.len() < nodes.len() {
        let stuck = indegree
            .into_iter()
            .filter(|(n, d)| *d > 0 && !order.contains(n))
            .map(|(n, _)| n)
            .collect();
        return Err(Error::Cycle(stuck));
    }
    Ok(order)
}
