//! Typed graphs, metamodels and triple graphs.
//!
//! A [`TripleGraph`] holds a source graph, a target graph and the
//! correspondence links between them. All element ids are unique across the
//! three domains. Types are referenced by name and resolved against a
//! [`TripleMetamodel`].

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Domain {
    Source,
    Correspondence,
    Target,
}

impl Domain {
    /// Mirror image used when swapping source and target.
    pub fn opposite(self) -> Domain {
        match self {
            Domain::Source => Domain::Target,
            Domain::Target => Domain::Source,
            Domain::Correspondence => Domain::Correspondence,
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Domain::Source => "SOURCE",
            Domain::Correspondence => "CORRESPONDENCE",
            Domain::Target => "TARGET",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum UpperBound {
    One,
    Many,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("unknown node type `{0}`")]
    UnknownNodeType(String),
    #[error("duplicate type name `{0}`")]
    DuplicateType(String),
    #[error("supertype chain of `{0}` is cyclic")]
    CyclicSupertype(String),
    #[error("type `{owner}` references undeclared node type `{missing}`")]
    UnresolvedType { owner: String, missing: String },
    #[error("duplicate element id `{0}`")]
    DuplicateId(String),
    #[error("unknown node id `{0}`")]
    UnknownNode(String),
    #[error("neighbourhood radius {0} outside [0, 3]")]
    RadiusOutOfRange(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeType {
    pub name: String,
    pub is_abstract: bool,
    pub supertype: Option<String>,
}

impl NodeType {
    pub fn concrete(name: impl Into<String>) -> Self {
        NodeType { name: name.into(), is_abstract: false, supertype: None }
    }

    pub fn with_supertype(mut self, supertype: impl Into<String>) -> Self {
        self.supertype = Some(supertype.into());
        self
    }

    pub fn into_abstract(mut self) -> Self {
        self.is_abstract = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeType {
    pub name: String,
    pub source: String,
    pub target: String,
    pub upper_bound: UpperBound,
}

impl EdgeType {
    pub fn new(
        name: impl Into<String>,
        source: impl Into<String>,
        target: impl Into<String>,
        upper_bound: UpperBound,
    ) -> Self {
        EdgeType {
            name: name.into(),
            source: source.into(),
            target: target.into(),
            upper_bound,
        }
    }
}

/// Node and edge types of one domain. Constructed through [`Metamodel::new`],
/// which rejects duplicate names, unresolved references and cyclic
/// inheritance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Metamodel {
    name: String,
    node_types: BTreeMap<String, NodeType>,
    edge_types: BTreeMap<String, EdgeType>,
}

impl Metamodel {
    pub fn new(
        name: impl Into<String>,
        node_types: Vec<NodeType>,
        edge_types: Vec<EdgeType>,
    ) -> Result<Self, GraphError> {
        let mut nodes = BTreeMap::new();
        for nt in node_types {
            if nodes.contains_key(&nt.name) {
                return Err(GraphError::DuplicateType(nt.name));
            }
            nodes.insert(nt.name.clone(), nt);
        }
        let mut edges = BTreeMap::new();
        for et in edge_types {
            if edges.contains_key(&et.name) || nodes.contains_key(&et.name) {
                return Err(GraphError::DuplicateType(et.name));
            }
            for end in [&et.source, &et.target] {
                if !nodes.contains_key(end) {
                    return Err(GraphError::UnresolvedType {
                        owner: et.name.clone(),
                        missing: end.clone(),
                    });
                }
            }
            edges.insert(et.name.clone(), et);
        }
        for nt in nodes.values() {
            if let Some(sup) = &nt.supertype {
                if !nodes.contains_key(sup) {
                    return Err(GraphError::UnresolvedType {
                        owner: nt.name.clone(),
                        missing: sup.clone(),
                    });
                }
            }
            // a chain longer than the number of types must revisit one
            let mut current = nt.supertype.as_deref();
            let mut steps = 0;
            while let Some(sup) = current {
                steps += 1;
                if sup == nt.name || steps > nodes.len() {
                    return Err(GraphError::CyclicSupertype(nt.name.clone()));
                }
                current = nodes[sup].supertype.as_deref();
            }
        }
        Ok(Metamodel { name: name.into(), node_types: nodes, edge_types: edges })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn node_type(&self, name: &str) -> Option<&NodeType> {
        self.node_types.get(name)
    }

    pub fn edge_type(&self, name: &str) -> Option<&EdgeType> {
        self.edge_types.get(name)
    }

    pub fn node_types(&self) -> impl Iterator<Item = &NodeType> {
        self.node_types.values()
    }

    pub fn edge_types(&self) -> impl Iterator<Item = &EdgeType> {
        self.edge_types.values()
    }

    /// True iff `a == b` or `b` is reachable from `a` through supertype links.
    pub fn subtype_of(&self, a: &str, b: &str) -> Result<bool, GraphError> {
        if !self.node_types.contains_key(b) {
            return Err(GraphError::UnknownNodeType(b.to_string()));
        }
        let mut current = Some(
            self.node_types
                .get(a)
                .ok_or_else(|| GraphError::UnknownNodeType(a.to_string()))?,
        );
        while let Some(nt) = current {
            if nt.name == b {
                return Ok(true);
            }
            current = nt.supertype.as_deref().and_then(|s| self.node_types.get(s));
        }
        Ok(false)
    }

    /// Like [`subtype_of`](Self::subtype_of) but treats unknown types as
    /// non-conforming.
    pub fn conforms(&self, a: &str, b: &str) -> bool {
        self.subtype_of(a, b).unwrap_or(false)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrType {
    pub name: String,
    pub source: String,
    pub target: String,
}

impl CorrType {
    pub fn new(name: impl Into<String>, source: impl Into<String>, target: impl Into<String>) -> Self {
        CorrType { name: name.into(), source: source.into(), target: target.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripleMetamodel {
    name: String,
    source: Metamodel,
    target: Metamodel,
    corr_types: BTreeMap<String, CorrType>,
}

impl TripleMetamodel {
    pub fn new(
        name: impl Into<String>,
        source: Metamodel,
        target: Metamodel,
        corr_types: Vec<CorrType>,
    ) -> Result<Self, GraphError> {
        let mut corrs = BTreeMap::new();
        for ct in corr_types {
            if source.node_type(&ct.source).is_none() {
                return Err(GraphError::UnresolvedType { owner: ct.name, missing: ct.source });
            }
            if target.node_type(&ct.target).is_none() {
                return Err(GraphError::UnresolvedType { owner: ct.name, missing: ct.target });
            }
            if corrs.contains_key(&ct.name) {
                return Err(GraphError::DuplicateType(ct.name));
            }
            corrs.insert(ct.name.clone(), ct);
        }
        Ok(TripleMetamodel { name: name.into(), source, target, corr_types: corrs })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn source(&self) -> &Metamodel {
        &self.source
    }

    pub fn target(&self) -> &Metamodel {
        &self.target
    }

    /// Metamodel of a node domain; `None` for the correspondence domain.
    pub fn domain(&self, domain: Domain) -> Option<&Metamodel> {
        match domain {
            Domain::Source => Some(&self.source),
            Domain::Target => Some(&self.target),
            Domain::Correspondence => None,
        }
    }

    pub fn corr_type(&self, name: &str) -> Option<&CorrType> {
        self.corr_types.get(name)
    }

    pub fn corr_types(&self) -> impl Iterator<Item = &CorrType> {
        self.corr_types.values()
    }

    /// The same metamodel with source and target exchanged.
    pub fn swapped(&self) -> TripleMetamodel {
        TripleMetamodel {
            name: self.name.clone(),
            source: self.target.clone(),
            target: self.source.clone(),
            corr_types: self
                .corr_types
                .values()
                .map(|c| {
                    (c.name.clone(), CorrType::new(c.name.clone(), c.target.clone(), c.source.clone()))
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Node {
    pub id: String,
    pub node_type: String,
    pub domain: Domain,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Edge {
    pub id: String,
    pub edge_type: String,
    pub domain: Domain,
    pub source: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CorrLink {
    pub id: String,
    pub corr_type: String,
    pub source: String,
    pub target: String,
}

/// Source graph, target graph and correspondence links in one id space.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TripleGraph {
    nodes: BTreeMap<String, Node>,
    edges: BTreeMap<String, Edge>,
    corrs: BTreeMap<String, CorrLink>,
}

impl TripleGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty() && self.edges.is_empty() && self.corrs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.nodes.len() + self.edges.len() + self.corrs.len()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.nodes.contains_key(id) || self.edges.contains_key(id) || self.corrs.contains_key(id)
    }

    fn claim(&self, id: &str) -> Result<(), GraphError> {
        if self.contains(id) {
            Err(GraphError::DuplicateId(id.to_string()))
        } else {
            Ok(())
        }
    }

    pub fn add_node(&mut self, node: Node) -> Result<(), GraphError> {
        self.claim(&node.id)?;
        self.nodes.insert(node.id.clone(), node);
        Ok(())
    }

    /// Adds an edge. Endpoints are not checked here; see [`check_conformance`].
    pub fn add_edge(&mut self, edge: Edge) -> Result<(), GraphError> {
        self.claim(&edge.id)?;
        self.edges.insert(edge.id.clone(), edge);
        Ok(())
    }

    pub fn add_corr(&mut self, corr: CorrLink) -> Result<(), GraphError> {
        self.claim(&corr.id)?;
        self.corrs.insert(corr.id.clone(), corr);
        Ok(())
    }

    /// Removes any element by id. Incident edges are left in place.
    pub fn remove(&mut self, id: &str) -> bool {
        self.nodes.remove(id).is_some() || self.edges.remove(id).is_some() || self.corrs.remove(id).is_some()
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.get(id)
    }

    pub fn edge(&self, id: &str) -> Option<&Edge> {
        self.edges.get(id)
    }

    pub fn corr(&self, id: &str) -> Option<&CorrLink> {
        self.corrs.get(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.values()
    }

    pub fn corrs(&self) -> impl Iterator<Item = &CorrLink> {
        self.corrs.values()
    }

    /// Domain of any element; `None` for unknown ids.
    pub fn domain_of(&self, id: &str) -> Option<Domain> {
        if let Some(n) = self.nodes.get(id) {
            Some(n.domain)
        } else if let Some(e) = self.edges.get(id) {
            Some(e.domain)
        } else if self.corrs.contains_key(id) {
            Some(Domain::Correspondence)
        } else {
            None
        }
    }

    /// Ids of all nodes and edges in a node domain.
    pub fn element_ids_in(&self, domain: Domain) -> BTreeSet<String> {
        match domain {
            Domain::Correspondence => self.corrs.keys().cloned().collect(),
            d => self
                .nodes
                .values()
                .filter(|n| n.domain == d)
                .map(|n| &n.id)
                .chain(self.edges.values().filter(|e| e.domain == d).map(|e| &e.id))
                .cloned()
                .collect(),
        }
    }

    pub fn is_domain_empty(&self, domain: Domain) -> bool {
        match domain {
            Domain::Correspondence => self.corrs.is_empty(),
            d => !self.nodes.values().any(|n| n.domain == d) && !self.edges.values().any(|e| e.domain == d),
        }
    }

    /// Exchanges source and target domains and reverses every corr link.
    pub fn swapped(&self) -> TripleGraph {
        TripleGraph {
            nodes: self
                .nodes
                .iter()
                .map(|(k, n)| (k.clone(), Node { domain: n.domain.opposite(), ..n.clone() }))
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|(k, e)| (k.clone(), Edge { domain: e.domain.opposite(), ..e.clone() }))
                .collect(),
            corrs: self
                .corrs
                .iter()
                .map(|(k, c)| {
                    let mut c = c.clone();
                    std::mem::swap(&mut c.source, &mut c.target);
                    (k.clone(), c)
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationKind {
    DuplicateId,
    UnknownType,
    AbstractInstance,
    DanglingEdge,
    WrongDomain,
    EndpointType,
    UpperBound,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Offending element ids. Dangling references list the missing id too.
    pub elements: Vec<String>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} [{}]: {}", self.kind, self.elements.join(", "), self.message)
    }
}

fn violation(kind: ViolationKind, elements: Vec<String>, message: String) -> Violation {
    Violation { kind, elements, message }
}

/// Checks every structural and typing invariant of `triple` against `mm`.
/// Violations are returned sorted, so equal inputs give equal lists.
pub fn check_conformance(triple: &TripleGraph, mm: &TripleMetamodel) -> Vec<Violation> {
    use ViolationKind::*;
    let mut out = Vec::new();

    let mut seen: HashMap<&str, usize> = HashMap::new();
    for id in triple.nodes.keys().chain(triple.edges.keys()).chain(triple.corrs.keys()) {
        *seen.entry(id).or_default() += 1;
    }
    for (id, count) in seen {
        if count > 1 {
            out.push(violation(DuplicateId, vec![id.to_string()], format!("id used by {count} elements")));
        }
    }

    for n in triple.nodes.values() {
        let Some(dmm) = mm.domain(n.domain) else {
            out.push(violation(WrongDomain, vec![n.id.clone()], "node placed in the correspondence domain".into()));
            continue;
        };
        match dmm.node_type(&n.node_type) {
            None => out.push(violation(
                UnknownType,
                vec![n.id.clone()],
                format!("node type `{}` not declared in {} metamodel", n.node_type, n.domain),
            )),
            Some(nt) if nt.is_abstract => out.push(violation(
                AbstractInstance,
                vec![n.id.clone()],
                format!("node type `{}` is abstract", n.node_type),
            )),
            Some(_) => {}
        }
    }

    let mut bounded: BTreeMap<(&str, &str), Vec<String>> = BTreeMap::new();
    for e in triple.edges.values() {
        let Some(dmm) = mm.domain(e.domain) else {
            out.push(violation(WrongDomain, vec![e.id.clone()], "edge placed in the correspondence domain".into()));
            continue;
        };
        let Some(et) = dmm.edge_type(&e.edge_type) else {
            out.push(violation(
                UnknownType,
                vec![e.id.clone()],
                format!("edge type `{}` not declared in {} metamodel", e.edge_type, e.domain),
            ));
            continue;
        };
        let mut endpoints_ok = true;
        for (end, want) in [(&e.source, &et.source), (&e.target, &et.target)] {
            match triple.nodes.get(end) {
                None => {
                    endpoints_ok = false;
                    out.push(violation(
                        DanglingEdge,
                        vec![e.id.clone(), end.clone()],
                        format!("endpoint `{end}` does not exist"),
                    ));
                }
                Some(n) if n.domain != e.domain => {
                    endpoints_ok = false;
                    out.push(violation(
                        WrongDomain,
                        vec![e.id.clone(), n.id.clone()],
                        format!("endpoint `{}` lies in {}, edge in {}", n.id, n.domain, e.domain),
                    ));
                }
                Some(n) if !dmm.conforms(&n.node_type, want) => {
                    endpoints_ok = false;
                    out.push(violation(
                        EndpointType,
                        vec![e.id.clone(), n.id.clone()],
                        format!("endpoint `{}` of type `{}` does not conform to `{want}`", n.id, n.node_type),
                    ));
                }
                Some(_) => {}
            }
        }
        if endpoints_ok && et.upper_bound == self::UpperBound::One {
            bounded.entry((&e.source, &e.edge_type)).or_default().push(e.id.clone());
        }
    }
    for ((src, ty), ids) in bounded {
        if ids.len() > 1 {
            out.push(violation(
                UpperBound,
                ids,
                format!("node `{src}` has more than one outgoing `{ty}` edge"),
            ));
        }
    }

    for c in triple.corrs.values() {
        let Some(ct) = mm.corr_type(&c.corr_type) else {
            out.push(violation(
                UnknownType,
                vec![c.id.clone()],
                format!("correspondence type `{}` not declared", c.corr_type),
            ));
            continue;
        };
        for (end, want_domain, want_type) in [
            (&c.source, Domain::Source, &ct.source),
            (&c.target, Domain::Target, &ct.target),
        ] {
            match triple.nodes.get(end) {
                None => out.push(violation(
                    DanglingEdge,
                    vec![c.id.clone(), end.clone()],
                    format!("endpoint `{end}` does not exist"),
                )),
                Some(n) if n.domain != want_domain => out.push(violation(
                    WrongDomain,
                    vec![c.id.clone(), n.id.clone()],
                    format!("endpoint `{}` lies in {}, expected {want_domain}", n.id, n.domain),
                )),
                Some(n) if !mm.domain(want_domain).is_some_and(|m| m.conforms(&n.node_type, want_type)) => {
                    out.push(violation(
                        EndpointType,
                        vec![c.id.clone(), n.id.clone()],
                        format!("endpoint `{}` of type `{}` does not conform to `{want_type}`", n.id, n.node_type),
                    ))
                }
                Some(_) => {}
            }
        }
    }

    out.sort_by(|a, b| (a.kind, &a.elements).cmp(&(b.kind, &b.elements)));
    out
}

/// Nodes within a radius of a seed set plus the edges and corr links they
/// induce.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Neighborhood {
    pub nodes: BTreeSet<String>,
    pub edges: BTreeSet<String>,
    pub corrs: BTreeSet<String>,
}

impl Neighborhood {
    pub fn contains(&self, id: &str) -> bool {
        self.nodes.contains(id) || self.edges.contains(id) || self.corrs.contains(id)
    }

    pub fn all_ids(&self) -> BTreeSet<String> {
        self.nodes.iter().chain(&self.edges).chain(&self.corrs).cloned().collect()
    }
}

pub const MAX_NEIGHBORHOOD_RADIUS: usize = 3;

/// Multi-source BFS over the undirected view of edges and corr links.
pub fn k_neighborhood(
    triple: &TripleGraph,
    seeds: &BTreeSet<String>,
    k: usize,
) -> Result<Neighborhood, GraphError> {
    if k > MAX_NEIGHBORHOOD_RADIUS {
        return Err(GraphError::RadiusOutOfRange(k));
    }
    if let Some(bad) = seeds.iter().find(|s| !triple.nodes.contains_key(*s)) {
        return Err(GraphError::UnknownNode(bad.clone()));
    }

    let mut adjacency: HashMap<&str, Vec<&str>> = HashMap::new();
    let links = triple
        .edges
        .values()
        .map(|e| (e.source.as_str(), e.target.as_str()))
        .chain(triple.corrs.values().map(|c| (c.source.as_str(), c.target.as_str())));
    for (a, b) in links {
        adjacency.entry(a).or_default().push(b);
        adjacency.entry(b).or_default().push(a);
    }

    let mut distance: HashMap<&str, usize> = seeds.iter().map(|s| (s.as_str(), 0)).collect();
    let mut queue: VecDeque<&str> = seeds.iter().map(String::as_str).collect();
    while let Some(current) = queue.pop_front() {
        let d = distance[current];
        if d == k {
            continue;
        }
        for &next in adjacency.get(current).into_iter().flatten() {
            if triple.nodes.contains_key(next) && !distance.contains_key(next) {
                distance.insert(next, d + 1);
                queue.push_back(next);
            }
        }
    }

    let nodes: BTreeSet<String> = distance.keys().map(|s| s.to_string()).collect();
    let edges = triple
        .edges
        .values()
        .filter(|e| nodes.contains(&e.source) && nodes.contains(&e.target))
        .map(|e| e.id.clone())
        .collect();
    let corrs = triple
        .corrs
        .values()
        .filter(|c| nodes.contains(&c.source) && nodes.contains(&c.target))
        .map(|c| c.id.clone())
        .collect();
    Ok(Neighborhood { nodes, edges, corrs })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn person_mm() -> Metamodel {
        Metamodel::new(
            "People",
            vec![
                NodeType::concrete("Person").into_abstract(),
                NodeType::concrete("Employee").with_supertype("Person"),
                NodeType::concrete("CEO").with_supertype("Person"),
            ],
            vec![EdgeType::new("reportsTo", "Person", "CEO", UpperBound::One)],
        )
        .unwrap()
    }

    #[test]
    fn subtype_relation() {
        let mm = person_mm();
        assert!(mm.subtype_of("CEO", "CEO").unwrap());
        assert!(mm.subtype_of("Employee", "Person").unwrap());
        assert!(!mm.subtype_of("Person", "Employee").unwrap());
        assert!(!mm.subtype_of("Employee", "CEO").unwrap());
        assert_eq!(mm.subtype_of("Printer", "CEO"), Err(GraphError::UnknownNodeType("Printer".into())));
        assert_eq!(mm.subtype_of("CEO", "Printer"), Err(GraphError::UnknownNodeType("Printer".into())));
    }

    #[test]
    fn metamodel_rejects_cycles_and_unresolved() {
        let cyclic = Metamodel::new(
            "m",
            vec![
                NodeType::concrete("A").with_supertype("B"),
                NodeType::concrete("B").with_supertype("A"),
            ],
            vec![],
        );
        assert!(matches!(cyclic, Err(GraphError::CyclicSupertype(_))));
        let selfloop = Metamodel::new("m", vec![NodeType::concrete("A").with_supertype("A")], vec![]);
        assert!(matches!(selfloop, Err(GraphError::CyclicSupertype(_))));
        let unresolved = Metamodel::new(
            "m",
            vec![NodeType::concrete("A")],
            vec![EdgeType::new("e", "A", "Z", UpperBound::Many)],
        );
        assert!(matches!(unresolved, Err(GraphError::UnresolvedType { .. })));
        let dup = Metamodel::new("m", vec![NodeType::concrete("A"), NodeType::concrete("A")], vec![]);
        assert_eq!(dup, Err(GraphError::DuplicateType("A".into())));
    }

    fn node(id: &str, ty: &str, domain: Domain) -> Node {
        Node { id: id.into(), node_type: ty.into(), domain, label: id.into() }
    }

    fn edge(id: &str, ty: &str, domain: Domain, s: &str, t: &str) -> Edge {
        Edge { id: id.into(), edge_type: ty.into(), domain, source: s.into(), target: t.into() }
    }

    fn people_triple_mm() -> TripleMetamodel {
        let target = Metamodel::new("T", vec![NodeType::concrete("Desk")], vec![]).unwrap();
        TripleMetamodel::new("PT", person_mm(), target, vec![CorrType::new("PersonToDesk", "Person", "Desk")])
            .unwrap()
    }

    #[test]
    fn abstract_instances_rejected() {
        let mut g = TripleGraph::new();
        g.add_node(node("p", "Person", Domain::Source)).unwrap();
        let v = check_conformance(&g, &people_triple_mm());
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::AbstractInstance);
    }

    #[test]
    fn endpoint_types_follow_inheritance() {
        let mut g = TripleGraph::new();
        g.add_node(node("e", "Employee", Domain::Source)).unwrap();
        g.add_node(node("c", "CEO", Domain::Source)).unwrap();
        g.add_node(node("d", "Desk", Domain::Target)).unwrap();
        g.add_edge(edge("r", "reportsTo", Domain::Source, "e", "c")).unwrap();
        g.add_corr(CorrLink { id: "k".into(), corr_type: "PersonToDesk".into(), source: "e".into(), target: "d".into() })
            .unwrap();
        assert!(check_conformance(&g, &people_triple_mm()).is_empty());

        g.add_edge(edge("bad", "reportsTo", Domain::Source, "c", "e")).unwrap();
        let v = check_conformance(&g, &people_triple_mm());
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::EndpointType);
        assert_eq!(v[0].elements, vec!["bad".to_string(), "e".to_string()]);
    }

    #[test]
    fn corr_endpoints_must_sit_in_their_domain() {
        let mut g = TripleGraph::new();
        g.add_node(node("e", "Employee", Domain::Source)).unwrap();
        g.add_node(node("c", "CEO", Domain::Source)).unwrap();
        g.add_corr(CorrLink { id: "k".into(), corr_type: "PersonToDesk".into(), source: "e".into(), target: "c".into() })
            .unwrap();
        let v = check_conformance(&g, &people_triple_mm());
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::WrongDomain);
    }

    #[test]
    fn duplicate_ids_refused_across_domains() {
        let mut g = TripleGraph::new();
        g.add_node(node("x", "CEO", Domain::Source)).unwrap();
        assert_eq!(
            g.add_edge(edge("x", "reportsTo", Domain::Source, "x", "x")),
            Err(GraphError::DuplicateId("x".into()))
        );
    }

    fn path() -> TripleGraph {
        let mut g = TripleGraph::new();
        for id in ["a", "b", "c", "d"] {
            g.add_node(node(id, "Employee", Domain::Source)).unwrap();
        }
        g.add_edge(edge("ab", "x", Domain::Source, "a", "b")).unwrap();
        g.add_edge(edge("cb", "x", Domain::Source, "c", "b")).unwrap();
        g.add_edge(edge("cd", "x", Domain::Source, "c", "d")).unwrap();
        g
    }

    fn set(ids: &[&str]) -> BTreeSet<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn neighborhood_on_path() {
        let g = path();
        let n0 = k_neighborhood(&g, &set(&["a"]), 0).unwrap();
        assert_eq!(n0.nodes, set(&["a"]));
        assert!(n0.edges.is_empty());
        // direction is ignored: cb points backwards
        let n2 = k_neighborhood(&g, &set(&["a"]), 2).unwrap();
        assert_eq!(n2.nodes, set(&["a", "b", "c"]));
        assert_eq!(n2.edges, set(&["ab", "cb"]));
        let n3 = k_neighborhood(&g, &set(&["a"]), 3).unwrap();
        assert_eq!(n3.all_ids(), set(&["a", "b", "c", "d", "ab", "cb", "cd"]));
    }

    #[test]
    fn neighborhood_crosses_corr_links() {
        let mut g = TripleGraph::new();
        g.add_node(node("s", "Employee", Domain::Source)).unwrap();
        g.add_node(node("t", "Desk", Domain::Target)).unwrap();
        g.add_corr(CorrLink { id: "k".into(), corr_type: "PersonToDesk".into(), source: "s".into(), target: "t".into() })
            .unwrap();
        let n = k_neighborhood(&g, &set(&["s"]), 1).unwrap();
        assert_eq!(n.all_ids(), set(&["s", "t", "k"]));
    }

    #[test]
    fn neighborhood_argument_errors() {
        let g = path();
        assert_eq!(k_neighborhood(&g, &set(&["a"]), 4), Err(GraphError::RadiusOutOfRange(4)));
        assert_eq!(k_neighborhood(&g, &set(&["zz"]), 1), Err(GraphError::UnknownNode("zz".into())));
        assert!(k_neighborhood(&g, &BTreeSet::new(), 2).unwrap().nodes.is_empty());
    }
}
