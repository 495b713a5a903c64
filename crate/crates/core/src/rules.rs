//! Declarative triple rules and their operational GEN/FWD/BWD forms.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Domain, TripleMetamodel};

/// Green elements are created by a rule, black ones are required context.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Annotation {
    Green,
    Black,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OperationKind {
    Gen,
    Fwd,
    Bwd,
}

impl OperationKind {
    /// Domain whose elements are marked while translating, if any.
    pub fn marked_domain(self) -> Option<Domain> {
        match self {
            OperationKind::Gen => None,
            OperationKind::Fwd => Some(Domain::Source),
            OperationKind::Bwd => Some(Domain::Target),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            OperationKind::Gen => "GEN",
            OperationKind::Fwd => "FWD",
            OperationKind::Bwd => "BWD",
        }
    }
}

impl fmt::Display for OperationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleNode {
    pub id: String,
    pub node_type: String,
    pub domain: Domain,
    pub annotation: Annotation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleEdge {
    pub id: String,
    pub edge_type: String,
    pub domain: Domain,
    pub source: String,
    pub target: String,
    pub annotation: Annotation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleCorr {
    pub id: String,
    pub corr_type: String,
    pub source: String,
    pub target: String,
    pub annotation: Annotation,
}

#[derive(Debug, Clone, Copy)]
pub enum RuleElement<'a> {
    Node(&'a RuleNode),
    Edge(&'a RuleEdge),
    Corr(&'a RuleCorr),
}

impl<'a> RuleElement<'a> {
    pub fn id(&self) -> &'a str {
        match self {
            RuleElement::Node(n) => &n.id,
            RuleElement::Edge(e) => &e.id,
            RuleElement::Corr(c) => &c.id,
        }
    }

    pub fn domain(&self) -> Domain {
        match self {
            RuleElement::Node(n) => n.domain,
            RuleElement::Edge(e) => e.domain,
            RuleElement::Corr(_) => Domain::Correspondence,
        }
    }

    pub fn annotation(&self) -> Annotation {
        match self {
            RuleElement::Node(n) => n.annotation,
            RuleElement::Edge(e) => e.annotation,
            RuleElement::Corr(c) => c.annotation,
        }
    }
}

/// A declarative triple rule. Element lists are kept sorted by id, which is
/// the canonical element order used throughout the engine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TggRule {
    pub name: String,
    pub nodes: Vec<RuleNode>,
    pub edges: Vec<RuleEdge>,
    pub corrs: Vec<RuleCorr>,
}

impl TggRule {
    pub fn new(
        name: impl Into<String>,
        mut nodes: Vec<RuleNode>,
        mut edges: Vec<RuleEdge>,
        mut corrs: Vec<RuleCorr>,
    ) -> Self {
        nodes.sort_by(|a, b| a.id.cmp(&b.id));
        edges.sort_by(|a, b| a.id.cmp(&b.id));
        corrs.sort_by(|a, b| a.id.cmp(&b.id));
        TggRule { name: name.into(), nodes, edges, corrs }
    }

    pub fn elements(&self) -> impl Iterator<Item = RuleElement<'_>> {
        self.nodes
            .iter()
            .map(RuleElement::Node)
            .chain(self.edges.iter().map(RuleElement::Edge))
            .chain(self.corrs.iter().map(RuleElement::Corr))
    }

    pub fn element(&self, id: &str) -> Option<RuleElement<'_>> {
        self.elements().find(|e| e.id() == id)
    }

    pub fn node(&self, id: &str) -> Option<&RuleNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn is_axiom(&self) -> bool {
        self.elements().all(|e| e.annotation() == Annotation::Green)
    }

    /// The rule with source and target exchanged.
    pub fn swapped(&self) -> TggRule {
        TggRule {
            name: self.name.clone(),
            nodes: self
                .nodes
                .iter()
                .map(|n| RuleNode { domain: n.domain.opposite(), ..n.clone() })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| RuleEdge { domain: e.domain.opposite(), ..e.clone() })
                .collect(),
            corrs: self
                .corrs
                .iter()
                .map(|c| RuleCorr { source: c.target.clone(), target: c.source.clone(), ..c.clone() })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RuleViolationKind {
    DuplicateId,
    UnknownType,
    AbstractNode,
    DanglingReference,
    WrongDomain,
    EndpointType,
    ContextClosure,
    NoEffect,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleViolation {
    pub rule: String,
    pub kind: RuleViolationKind,
    pub elements: Vec<String>,
    pub message: String,
}

impl fmt::Display for RuleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {:?} [{}]: {}", self.rule, self.kind, self.elements.join(", "), self.message)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RuleError {
    #[error("rule set is invalid: {}", format_violations(.0))]
    Invalid(Vec<RuleViolation>),
    #[error("duplicate rule name `{0}`")]
    DuplicateRule(String),
    #[error("unknown rule `{0}`")]
    UnknownRule(String),
}

fn format_violations(v: &[RuleViolation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Violations that can be detected without a metamodel.
fn structural_violations(rule: &TggRule) -> Vec<RuleViolation> {
    use RuleViolationKind::*;
    let mut out = Vec::new();
    let mut push = |kind, elements: Vec<&str>, message: String| {
        out.push(RuleViolation {
            rule: rule.name.clone(),
            kind,
            elements: elements.into_iter().map(str::to_string).collect(),
            message,
        })
    };

    let mut seen = BTreeSet::new();
    for el in rule.elements() {
        if !seen.insert(el.id()) {
            push(DuplicateId, vec![el.id()], "element id used twice".into());
        }
    }
    let nodes: HashMap<&str, &RuleNode> = rule.nodes.iter().map(|n| (n.id.as_str(), n)).collect();
    for n in &rule.nodes {
        if n.domain == Domain::Correspondence {
            push(WrongDomain, vec![&n.id], "node placed in the correspondence domain".into());
        }
    }

    let links = rule
        .edges
        .iter()
        .map(|e| (e.id.as_str(), e.annotation, [e.source.as_str(), e.target.as_str()], Some(e.domain)))
        .chain(
            rule.corrs
                .iter()
                .map(|c| (c.id.as_str(), c.annotation, [c.source.as_str(), c.target.as_str()], None)),
        );
    for (id, annotation, ends, edge_domain) in links {
        for (i, end) in ends.into_iter().enumerate() {
            let Some(n) = nodes.get(end) else {
                push(DanglingReference, vec![id, end], format!("endpoint `{end}` is not a rule node"));
                continue;
            };
            let want = edge_domain.unwrap_or(if i == 0 { Domain::Source } else { Domain::Target });
            if n.domain != want {
                push(WrongDomain, vec![id, end], format!("endpoint `{end}` lies in {}, expected {want}", n.domain));
            }
            if annotation == Annotation::Black && n.annotation == Annotation::Green {
                push(
                    ContextClosure,
                    vec![id, end],
                    format!("context element `{id}` attaches to created node `{end}`"),
                );
            }
        }
    }

    if !rule.elements().any(|e| e.annotation() == Annotation::Green) {
        push(NoEffect, vec![], "rule creates nothing".into());
    }
    out
}

/// All well-formedness and typing violations of `rule`, sorted.
pub fn validate_rule(rule: &TggRule, mm: &TripleMetamodel) -> Vec<RuleViolation> {
    use RuleViolationKind::*;
    let mut out = structural_violations(rule);
    let mut push = |kind, elements: Vec<&str>, message: String| {
        out.push(RuleViolation {
            rule: rule.name.clone(),
            kind,
            elements: elements.into_iter().map(str::to_string).collect(),
            message,
        })
    };
    let nodes: HashMap<&str, &RuleNode> = rule.nodes.iter().map(|n| (n.id.as_str(), n)).collect();

    for n in &rule.nodes {
        let Some(dmm) = mm.domain(n.domain) else { continue };
        match dmm.node_type(&n.node_type) {
            None => push(UnknownType, vec![&n.id], format!("node type `{}` not declared", n.node_type)),
            Some(nt) if nt.is_abstract => {
                push(AbstractNode, vec![&n.id], format!("node type `{}` is abstract", n.node_type))
            }
            Some(_) => {}
        }
    }
    for e in &rule.edges {
        let Some(dmm) = mm.domain(e.domain) else {
            push(WrongDomain, vec![&e.id], "edge placed in the correspondence domain".into());
            continue;
        };
        let Some(et) = dmm.edge_type(&e.edge_type) else {
            push(UnknownType, vec![&e.id], format!("edge type `{}` not declared", e.edge_type));
            continue;
        };
        for (end, want) in [(&e.source, &et.source), (&e.target, &et.target)] {
            if let Some(n) = nodes.get(end.as_str()) {
                if dmm.node_type(&n.node_type).is_some() && !dmm.conforms(&n.node_type, want) {
                    push(EndpointType, vec![&e.id, end], format!("`{}` does not conform to `{want}`", n.node_type));
                }
            }
        }
    }
    for c in &rule.corrs {
        let Some(ct) = mm.corr_type(&c.corr_type) else {
            push(UnknownType, vec![&c.id], format!("correspondence type `{}` not declared", c.corr_type));
            continue;
        };
        for (end, want, dmm) in [(&c.source, &ct.source, mm.source()), (&c.target, &ct.target, mm.target())] {
            if let Some(n) = nodes.get(end.as_str()) {
                if dmm.node_type(&n.node_type).is_some() && !dmm.conforms(&n.node_type, want) {
                    push(EndpointType, vec![&c.id, end], format!("`{}` does not conform to `{want}`", n.node_type));
                }
            }
        }
    }

    out.sort_by(|a, b| (a.kind, &a.elements).cmp(&(b.kind, &b.elements)));
    out.dedup();
    out
}

/// A rule re-partitioned for one operation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperationalRule {
    pub rule: TggRule,
    pub kind: OperationKind,
    /// Elements that must be matched in the host.
    pub context: BTreeSet<String>,
    /// Context elements whose host images get marked.
    pub to_mark: BTreeSet<String>,
    /// Elements instantiated fresh on application.
    pub to_create: BTreeSet<String>,
}

impl OperationalRule {
    pub fn name(&self) -> &str {
        &self.rule.name
    }

    /// Whether the host image of context element `id` must already be marked.
    /// `Some(false)` means it must be unmarked, `None` means marking is
    /// irrelevant.
    pub fn required_marking(&self, id: &str, domain: Domain) -> Option<bool> {
        let marked = self.kind.marked_domain()?;
        if domain != marked || !self.context.contains(id) {
            return None;
        }
        Some(!self.to_mark.contains(id))
    }
}

/// Derives the GEN, FWD or BWD form of a rule.
pub fn operationalize(rule: &TggRule, kind: OperationKind) -> Result<OperationalRule, RuleError> {
    let violations = structural_violations(rule);
    if !violations.is_empty() {
        return Err(RuleError::Invalid(violations));
    }
    let mut context = BTreeSet::new();
    let mut to_mark = BTreeSet::new();
    let mut to_create = BTreeSet::new();
    for el in rule.elements() {
        let id = el.id().to_string();
        let translated = kind.marked_domain() == Some(el.domain());
        match el.annotation() {
            Annotation::Black => {
                context.insert(id);
            }
            Annotation::Green if translated => {
                context.insert(id.clone());
                to_mark.insert(id);
            }
            Annotation::Green => {
                to_create.insert(id);
            }
        }
    }
    Ok(OperationalRule { rule: rule.clone(), kind, context, to_mark, to_create })
}

/// A named rule set over a triple metamodel. Every rule is validated on
/// construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tgg {
    name: String,
    metamodel: TripleMetamodel,
    rules: BTreeMap<String, TggRule>,
}

impl Tgg {
    pub fn new(name: impl Into<String>, metamodel: TripleMetamodel, rules: Vec<TggRule>) -> Result<Self, RuleError> {
        let mut by_name = BTreeMap::new();
        let mut violations = Vec::new();
        for rule in rules {
            violations.extend(validate_rule(&rule, &metamodel));
            if by_name.contains_key(&rule.name) {
                return Err(RuleError::DuplicateRule(rule.name));
            }
            by_name.insert(rule.name.clone(), rule);
        }
        if !violations.is_empty() {
            return Err(RuleError::Invalid(violations));
        }
        Ok(Tgg { name: name.into(), metamodel, rules: by_name })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn metamodel(&self) -> &TripleMetamodel {
        &self.metamodel
    }

    /// Rules ordered by name.
    pub fn rules(&self) -> impl Iterator<Item = &TggRule> {
        self.rules.values()
    }

    pub fn rule(&self, name: &str) -> Option<&TggRule> {
        self.rules.get(name)
    }

    pub fn rule_names(&self) -> Vec<String> {
        self.rules.keys().cloned().collect()
    }

    pub fn operationalize_all(&self, kind: OperationKind) -> Vec<OperationalRule> {
        self.rules
            .values()
            .map(|r| operationalize(r, kind).expect("rules are validated on construction"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture;

    fn ids(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn fixture_rules_are_valid() {
        let tgg = fixture::company_to_it();
        for rule in tgg.rules() {
            assert!(validate_rule(rule, tgg.metamodel()).is_empty(), "{}", rule.name);
        }
        assert_eq!(tgg.rules().count(), 4);
        assert_eq!(tgg.rules().filter(|r| r.is_axiom()).count(), 1);
    }

    #[test]
    fn admin_to_router_partitions() {
        let tgg = fixture::company_to_it();
        let rule = tgg.rule("AdminToRouterRule").unwrap();

        let gen = operationalize(rule, OperationKind::Gen).unwrap();
        assert_eq!(gen.context, ids(&["ceo", "ceoEdge", "company", "companyToIT", "it"]));
        assert_eq!(
            gen.to_create,
            ids(&[
                "admin",
                "adminToRouter",
                "admins",
                "assignedTo",
                "network",
                "networks",
                "reportsTo",
                "router",
                "routers"
            ])
        );
        assert!(gen.to_mark.is_empty());

        let fwd = operationalize(rule, OperationKind::Fwd).unwrap();
        assert_eq!(fwd.to_mark, ids(&["admin", "admins", "reportsTo"]));
        assert_eq!(fwd.context, gen.context.union(&fwd.to_mark).cloned().collect());
        assert_eq!(fwd.to_create, gen.to_create.difference(&fwd.to_mark).cloned().collect());
    }

    #[test]
    fn axiom_has_empty_context() {
        let tgg = fixture::company_to_it();
        let axiom = tgg.rule("CompanyToITRule").unwrap();
        let gen = operationalize(axiom, OperationKind::Gen).unwrap();
        assert!(gen.context.is_empty());
        assert_eq!(gen.to_create.len(), 5);
    }

    #[test]
    fn context_closure_and_no_effect() {
        let tgg = fixture::company_to_it();
        let mut rule = tgg.rule("AdminToRouterRule").unwrap().clone();
        rule.edges.iter_mut().find(|e| e.id == "admins").unwrap().annotation = Annotation::Black;
        let v = validate_rule(&rule, tgg.metamodel());
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, RuleViolationKind::ContextClosure);
        assert_eq!(v[0].elements, vec!["admins".to_string(), "admin".to_string()]);
        assert!(matches!(operationalize(&rule, OperationKind::Gen), Err(RuleError::Invalid(_))));

        let mut inert = tgg.rule("CompanyToITRule").unwrap().clone();
        inert.nodes.iter_mut().for_each(|n| n.annotation = Annotation::Black);
        inert.edges.iter_mut().for_each(|e| e.annotation = Annotation::Black);
        inert.corrs.iter_mut().for_each(|c| c.annotation = Annotation::Black);
        let v = validate_rule(&inert, tgg.metamodel());
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, RuleViolationKind::NoEffect);
    }

    #[test]
    fn abstract_and_unknown_types_rejected() {
        let tgg = fixture::company_to_it();
        let mut rule = tgg.rule("CompanyToITRule").unwrap().clone();
        rule.nodes.iter_mut().find(|n| n.id == "ceo").unwrap().node_type = "Person".into();
        let kinds: Vec<_> = validate_rule(&rule, tgg.metamodel()).into_iter().map(|v| v.kind).collect();
        // the ceo edge also expects a CEO endpoint
        assert_eq!(kinds, vec![RuleViolationKind::AbstractNode, RuleViolationKind::EndpointType]);

        rule.nodes.iter_mut().find(|n| n.id == "ceo").unwrap().node_type = "Printer".into();
        let kinds: Vec<_> = validate_rule(&rule, tgg.metamodel()).into_iter().map(|v| v.kind).collect();
        assert_eq!(kinds, vec![RuleViolationKind::UnknownType]);
    }

    #[test]
    fn duplicate_rule_names_rejected() {
        let tgg = fixture::company_to_it();
        let rules: Vec<_> = tgg.rules().cloned().chain(tgg.rule("CompanyToITRule").cloned()).collect();
        assert_eq!(
            Tgg::new("x", tgg.metamodel().clone(), rules),
            Err(RuleError::DuplicateRule("CompanyToITRule".into()))
        );
    }

    #[test]
    fn partitions_are_exact_and_dual() {
        let tgg = fixture::company_to_it();
        for rule in tgg.rules() {
            let all: BTreeSet<String> = rule.elements().map(|e| e.id().to_string()).collect();
            for kind in [OperationKind::Gen, OperationKind::Fwd, OperationKind::Bwd] {
                let op = operationalize(rule, kind).unwrap();
                assert!(op.context.is_disjoint(&op.to_create));
                assert_eq!(op.context.union(&op.to_create).cloned().collect::<BTreeSet<_>>(), all);
                assert!(op.to_mark.is_subset(&op.context));
            }
            let fwd = operationalize(rule, OperationKind::Fwd).unwrap();
            let bwd = operationalize(&rule.swapped(), OperationKind::Bwd).unwrap();
            assert_eq!(fwd.context, bwd.context);
            assert_eq!(fwd.to_mark, bwd.to_mark);
            assert_eq!(fwd.to_create, bwd.to_create);
            assert_eq!(fwd.rule.swapped(), bwd.rule);
        }
    }
}
