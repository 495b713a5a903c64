//! View models for rules, matches and protocol states, and their rendering
//! as PlantUML object diagrams or DOT graphs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{EngineError, Protocol};
use crate::graph::{k_neighborhood, Domain, GraphError, TripleGraph, TripleMetamodel, MAX_NEIGHBORHOOD_RADIUS};
use crate::matcher::{is_still_valid, MarkingState, Match};
use crate::rules::{Annotation, OperationalRule, Tgg, TggRule};

pub const PEACH: &str = "FFDAB9";
pub const ROSE: &str = "FFE4E1";
pub const CREATED_GREEN: &str = "2E7D32";
pub const CONTEXT_BLACK: &str = "000000";
pub const MATCH_PURPLE: &str = "800080";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ViewError {
    #[error("invalid display options: {0}")]
    Options(String),
    #[error("match `{0}` is stale or unknown")]
    StaleMatch(String),
    #[error("{0}")]
    Argument(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LabelMode {
    #[default]
    Full,
    Abbrev,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct DisplayOptions {
    pub show_source: bool,
    pub show_target: bool,
    pub show_correspondence: bool,
    /// Rules only: drop created elements.
    pub context_only: bool,
    pub label_mode: LabelMode,
    pub neighborhood_k: usize,
}

impl Default for DisplayOptions {
    fn default() -> Self {
        DisplayOptions {
            show_source: true,
            show_target: true,
            show_correspondence: true,
            context_only: false,
            label_mode: LabelMode::Full,
            neighborhood_k: 1,
        }
    }
}

impl DisplayOptions {
    pub fn validate(&self) -> Result<(), ViewError> {
        if self.neighborhood_k > MAX_NEIGHBORHOOD_RADIUS {
            return Err(ViewError::Options(format!(
                "neighborhoodK {} outside [0, {MAX_NEIGHBORHOOD_RADIUS}]",
                self.neighborhood_k
            )));
        }
        Ok(())
    }

    pub fn shows(&self, domain: Domain) -> bool {
        match domain {
            Domain::Source => self.show_source,
            Domain::Target => self.show_target,
            Domain::Correspondence => self.show_correspondence,
        }
    }
}

/// Full label, first and last three characters, or nothing.
pub fn abbreviate_label(label: &str, mode: LabelMode) -> String {
    match mode {
        LabelMode::Full => label.to_string(),
        LabelMode::None => String::new(),
        LabelMode::Abbrev => {
            let chars: Vec<char> = label.chars().collect();
            if chars.len() <= 6 {
                label.to_string()
            } else {
                let head: String = chars[..3].iter().collect();
                let tail: String = chars[chars.len() - 3..].iter().collect();
                format!("{head}...{tail}")
            }
        }
    }
}

fn node_label(name: &str, type_name: &str, mode: LabelMode) -> String {
    match mode {
        LabelMode::None => String::new(),
        _ => format!("{}: {}", abbreviate_label(name, mode), abbreviate_label(type_name, mode)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Emphasis {
    Created,
    Context,
    Plain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViewPart {
    Rule,
    Model,
}

impl ViewPart {
    fn prefix(self) -> &'static str {
        match self {
            ViewPart::Rule => "rule/",
            ViewPart::Model => "model/",
        }
    }

    fn view_id(self, element: &str) -> String {
        format!("{}{element}", self.prefix())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ViewNode {
    /// Unique within the view: the element id prefixed by its part.
    pub id: String,
    pub element_id: String,
    pub label: String,
    pub domain: Domain,
    pub emphasis: Emphasis,
    pub part: ViewPart,
}

/// An edge or a correspondence link between two view nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ViewLink {
    pub id: String,
    pub element_id: String,
    pub source: String,
    pub target: String,
    pub label: String,
    pub domain: Domain,
    pub emphasis: Emphasis,
    pub part: ViewPart,
}

/// Connects a rule node to its image in the model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MatchLink {
    pub rule_node: String,
    pub model_node: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ViewModel {
    pub nodes: Vec<ViewNode>,
    pub edges: Vec<ViewLink>,
    pub corrs: Vec<ViewLink>,
    pub match_links: Vec<MatchLink>,
}

impl ViewModel {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty() && self.edges.is_empty() && self.corrs.is_empty() && self.match_links.is_empty()
    }

    pub fn node(&self, id: &str) -> Option<&ViewNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    /// Element ids of one part, over nodes, edges and corr links.
    pub fn element_ids(&self, part: ViewPart) -> BTreeSet<String> {
        self.nodes
            .iter()
            .filter(|n| n.part == part)
            .map(|n| n.element_id.clone())
            .chain(self.edges.iter().chain(&self.corrs).filter(|l| l.part == part).map(|l| l.element_id.clone()))
            .collect()
    }

    fn merge(&mut self, other: ViewModel) {
        self.nodes.extend(other.nodes);
        self.edges.extend(other.edges);
        self.corrs.extend(other.corrs);
        self.match_links.extend(other.match_links);
    }
}

fn annotation_emphasis(a: Annotation) -> Emphasis {
    match a {
        Annotation::Green => Emphasis::Created,
        Annotation::Black => Emphasis::Context,
    }
}

/// Rule diagram: created elements green, context black.
pub fn build_rule_view(rule: &TggRule, opts: &DisplayOptions) -> Result<ViewModel, ViewError> {
    opts.validate()?;
    let part = ViewPart::Rule;
    let keep = |domain: Domain, a: Annotation| opts.shows(domain) && !(opts.context_only && a == Annotation::Green);

    let nodes: Vec<ViewNode> = rule
        .nodes
        .iter()
        .filter(|n| keep(n.domain, n.annotation))
        .map(|n| ViewNode {
            id: part.view_id(&n.id),
            element_id: n.id.clone(),
            label: node_label(&n.id, &n.node_type, opts.label_mode),
            domain: n.domain,
            emphasis: annotation_emphasis(n.annotation),
            part,
        })
        .collect();
    let present: BTreeSet<&str> = nodes.iter().map(|n| n.element_id.as_str()).collect();
    let edges = rule
        .edges
        .iter()
        .filter(|e| keep(e.domain, e.annotation) && present.contains(e.source.as_str()) && present.contains(e.target.as_str()))
        .map(|e| ViewLink {
            id: part.view_id(&e.id),
            element_id: e.id.clone(),
            source: part.view_id(&e.source),
            target: part.view_id(&e.target),
            label: abbreviate_label(&e.edge_type, opts.label_mode),
            domain: e.domain,
            emphasis: annotation_emphasis(e.annotation),
            part,
        })
        .collect();
    let corrs = rule
        .corrs
        .iter()
        .filter(|c| {
            keep(Domain::Correspondence, c.annotation)
                && present.contains(c.source.as_str())
                && present.contains(c.target.as_str())
        })
        .map(|c| ViewLink {
            id: part.view_id(&c.id),
            element_id: c.id.clone(),
            source: part.view_id(&c.source),
            target: part.view_id(&c.target),
            label: abbreviate_label(&c.corr_type, opts.label_mode),
            domain: Domain::Correspondence,
            emphasis: annotation_emphasis(c.annotation),
            part,
        })
        .collect();
    Ok(ViewModel { nodes, edges, corrs, match_links: Vec::new() })
}

/// Induced view of the model around `seeds`. Elements in `created` are
/// emphasised as created, those in `context` as context.
fn build_model_view(
    triple: &TripleGraph,
    seeds: &BTreeSet<String>,
    created: &BTreeSet<String>,
    context: &BTreeSet<String>,
    opts: &DisplayOptions,
) -> Result<ViewModel, ViewError> {
    let hood = k_neighborhood(triple, seeds, opts.neighborhood_k)?;
    let part = ViewPart::Model;
    let emphasis = |id: &str| {
        if created.contains(id) {
            Emphasis::Created
        } else if context.contains(id) {
            Emphasis::Context
        } else {
            Emphasis::Plain
        }
    };

    let nodes: Vec<ViewNode> = hood
        .nodes
        .iter()
        .filter_map(|id| triple.node(id))
        .filter(|n| opts.shows(n.domain))
        .map(|n| ViewNode {
            id: part.view_id(&n.id),
            element_id: n.id.clone(),
            label: node_label(&n.label, &n.node_type, opts.label_mode),
            domain: n.domain,
            emphasis: emphasis(&n.id),
            part,
        })
        .collect();
    let present: BTreeSet<&str> = nodes.iter().map(|n| n.element_id.as_str()).collect();
    let edges = hood
        .edges
        .iter()
        .filter_map(|id| triple.edge(id))
        .filter(|e| opts.shows(e.domain) && present.contains(e.source.as_str()) && present.contains(e.target.as_str()))
        .map(|e| ViewLink {
            id: part.view_id(&e.id),
            element_id: e.id.clone(),
            source: part.view_id(&e.source),
            target: part.view_id(&e.target),
            label: abbreviate_label(&e.edge_type, opts.label_mode),
            domain: e.domain,
            emphasis: emphasis(&e.id),
            part,
        })
        .collect();
    let corrs = hood
        .corrs
        .iter()
        .filter_map(|id| triple.corr(id))
        .filter(|c| {
            opts.show_correspondence && present.contains(c.source.as_str()) && present.contains(c.target.as_str())
        })
        .map(|c| ViewLink {
            id: part.view_id(&c.id),
            element_id: c.id.clone(),
            source: part.view_id(&c.source),
            target: part.view_id(&c.target),
            label: abbreviate_label(&c.corr_type, opts.label_mode),
            domain: Domain::Correspondence,
            emphasis: emphasis(&c.id),
            part,
        })
        .collect();
    Ok(ViewModel { nodes, edges, corrs, match_links: Vec::new() })
}

/// Rule and matched model side by side, joined by match links.
pub fn build_match_view(
    m: &Match,
    op: &OperationalRule,
    mm: &TripleMetamodel,
    host: &TripleGraph,
    marking: &MarkingState,
    opts: &DisplayOptions,
) -> Result<ViewModel, ViewError> {
    opts.validate()?;
    if !is_still_valid(m, op, mm, host, marking) {
        return Err(ViewError::StaleMatch(m.match_id.clone()));
    }
    let node_images: BTreeMap<&str, &str> = m
        .mapping
        .iter()
        .filter(|(rule_id, _)| op.rule.node(rule_id).is_some())
        .map(|(r, h)| (r.as_str(), h.as_str()))
        .collect();
    let seeds: BTreeSet<String> = node_images.values().map(|h| h.to_string()).collect();
    let matched: BTreeSet<String> = m.mapping.values().cloned().collect();

    let mut view = build_rule_view(&op.rule, opts)?;
    let model = build_model_view(host, &seeds, &BTreeSet::new(), &matched, opts)?;
    view.match_links = node_images
        .iter()
        .map(|(r, h)| MatchLink { rule_node: ViewPart::Rule.view_id(r), model_node: ViewPart::Model.view_id(h) })
        .filter(|link| view.node(&link.rule_node).is_some() && model.node(&link.model_node).is_some())
        .collect();
    view.merge(model);
    Ok(view)
}

/// Model state after the highest selected step, with everything the
/// selected steps created highlighted.
pub fn build_protocol_view(
    tgg: &Tgg,
    protocol: &Protocol,
    selection: &BTreeSet<usize>,
    opts: &DisplayOptions,
) -> Result<ViewModel, ViewError> {
    opts.validate()?;
    let Some(&last) = selection.last() else {
        return Err(ViewError::Argument("selection must not be empty".into()));
    };
    if last >= protocol.applications.len() {
        return Err(ViewError::Argument(format!(
            "step {last} out of range for protocol length {}",
            protocol.applications.len()
        )));
    }
    let state = protocol.state_after(tgg, last)?;
    let selected = selection.iter().map(|&i| &protocol.applications[i]);
    let created: BTreeSet<String> = selected.clone().flat_map(|a| a.created_element_ids.iter().cloned()).collect();
    let matched: BTreeSet<String> = selected.flat_map(|a| a.matched.mapping.values().cloned()).collect();
    let seeds: BTreeSet<String> =
        created.iter().chain(&matched).filter(|id| state.node(id).is_some()).cloned().collect();
    build_model_view(&state, &seeds, &created, &matched, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiagramFormat {
    #[default]
    Plantuml,
    Dot,
}

pub fn render_diagram(view: &ViewModel, format: DiagramFormat) -> String {
    match format {
        DiagramFormat::Plantuml => render_plantuml(view),
        DiagramFormat::Dot => render_dot(view),
    }
}

fn ordered_nodes(view: &ViewModel) -> Vec<&ViewNode> {
    let mut nodes: Vec<&ViewNode> = view.nodes.iter().collect();
    nodes.sort_by(|a, b| (a.part, a.domain, &a.element_id).cmp(&(b.part, b.domain, &b.element_id)));
    nodes
}

fn ordered_links(links: &[ViewLink]) -> Vec<&ViewLink> {
    let mut links: Vec<&ViewLink> = links.iter().collect();
    links.sort_by(|a, b| (a.part, &a.element_id).cmp(&(b.part, &b.element_id)));
    links
}

fn aliases(nodes: &[&ViewNode]) -> BTreeMap<String, String> {
    nodes.iter().enumerate().map(|(i, n)| (n.id.clone(), format!("o{}", i + 1))).collect()
}

fn fill(domain: Domain) -> &'static str {
    match domain {
        Domain::Target => ROSE,
        _ => PEACH,
    }
}

fn quoted(label: &str) -> String {
    label.replace('\\', "\\\\").replace('"', "\\\"")
}

fn render_plantuml(view: &ViewModel) -> String {
    let nodes = ordered_nodes(view);
    let alias = aliases(&nodes);
    let mut out = String::from("@startuml\nhide empty members\nskinparam shadowing false\n");
    for n in &nodes {
        let style = match n.emphasis {
            Emphasis::Created => format!("#{};line:{CREATED_GREEN};line.bold", fill(n.domain)),
            Emphasis::Context => format!("#{};line:{CONTEXT_BLACK}", fill(n.domain)),
            Emphasis::Plain => format!("#{}", fill(n.domain)),
        };
        let _ = writeln!(out, "object \"{}\" as {} {style}", quoted(&n.label), alias[&n.id]);
    }
    let suffix = |label: &str| if label.is_empty() { String::new() } else { format!(" : {}", quoted(label)) };
    for e in ordered_links(&view.edges) {
        let arrow = match e.emphasis {
            Emphasis::Created => format!("-[#{CREATED_GREEN}]->"),
            Emphasis::Context => format!("-[#{CONTEXT_BLACK}]->"),
            Emphasis::Plain => "-->".to_string(),
        };
        let _ = writeln!(out, "{} {arrow} {}{}", alias[&e.source], alias[&e.target], suffix(&e.label));
    }
    for c in ordered_links(&view.corrs) {
        let color = if c.emphasis == Emphasis::Created { CREATED_GREEN } else { CONTEXT_BLACK };
        let _ = writeln!(out, "{} -[#{color},dashed]- {}{}", alias[&c.source], alias[&c.target], suffix(&c.label));
    }
    let mut links: Vec<&MatchLink> = view.match_links.iter().collect();
    links.sort_by(|a, b| (&a.rule_node, &a.model_node).cmp(&(&b.rule_node, &b.model_node)));
    for l in links {
        let _ = writeln!(out, "{} -[#{MATCH_PURPLE},dashed]-> {}", alias[&l.rule_node], alias[&l.model_node]);
    }
    out.push_str("@enduml\n");
    out
}

fn render_dot(view: &ViewModel) -> String {
    let nodes = ordered_nodes(view);
    let alias = aliases(&nodes);
    let mut out = String::from("digraph view {\n  node [shape=box, style=filled];\n");
    for n in &nodes {
        let (color, width) = match n.emphasis {
            Emphasis::Created => (CREATED_GREEN, 2),
            _ => (CONTEXT_BLACK, 1),
        };
        let _ = writeln!(
            out,
            "  {} [label=\"{}\", fillcolor=\"#{}\", color=\"#{color}\", penwidth={width}];",
            alias[&n.id],
            quoted(&n.label),
            fill(n.domain)
        );
    }
    for e in ordered_links(&view.edges) {
        let color = if e.emphasis == Emphasis::Created { CREATED_GREEN } else { CONTEXT_BLACK };
        let _ = writeln!(
            out,
            "  {} -> {} [label=\"{}\", color=\"#{color}\"];",
            alias[&e.source],
            alias[&e.target],
            quoted(&e.label)
        );
    }
    for c in ordered_links(&view.corrs) {
        let color = if c.emphasis == Emphasis::Created { CREATED_GREEN } else { CONTEXT_BLACK };
        let _ = writeln!(
            out,
            "  {} -> {} [label=\"{}\", color=\"#{color}\", style=dashed, dir=none];",
            alias[&c.source],
            alias[&c.target],
            quoted(&c.label)
        );
    }
    let mut links: Vec<&MatchLink> = view.match_links.iter().collect();
    links.sort_by(|a, b| (&a.rule_node, &a.model_node).cmp(&(&b.rule_node, &b.model_node)));
    for l in links {
        let _ = writeln!(
            out,
            "  {} -> {} [color=\"#{MATCH_PURPLE}\", style=dashed];",
            alias[&l.rule_node],
            alias[&l.model_node]
        );
    }
    out.push_str("}\n");
    out
}
