//! Canonical JSON documents.
//!
//! Every file is an envelope `{formatVersion, kind, payload}`. Saving is
//! deterministic: object keys follow the schema order, element lists are
//! sorted by id, output is pretty-printed with two-space indentation and a
//! trailing newline. Loading validates everything it reads; each error
//! carries a path into the document.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use rand_pcg::Pcg32;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::engine::{Breakpoint, EngineError, Mode, Protocol, RuleApplication, RuleStatus, Session, SessionState};
use crate::graph::{
    check_conformance, CorrLink, CorrType, Domain, Edge, EdgeType, GraphError, Metamodel, Node, NodeType,
    TripleGraph, TripleMetamodel, UpperBound, ViolationKind,
};
use crate::matcher::{MarkingState, Match};
use crate::rules::{Annotation, OperationKind, RuleCorr, RuleEdge, RuleError, RuleNode, Tgg, TggRule};

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DocumentKind {
    Metamodel,
    Ruleset,
    Triple,
    Protocol,
    Session,
}

impl DocumentKind {
    pub fn extension(self) -> &'static str {
        match self {
            DocumentKind::Metamodel => ".metamodel.json",
            DocumentKind::Ruleset => ".ruleset.json",
            DocumentKind::Triple => ".triple.json",
            DocumentKind::Protocol => ".protocol.json",
            DocumentKind::Session => ".session.json",
        }
    }
}

impl fmt::Display for DocumentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DocumentKind::Metamodel => "METAMODEL",
            DocumentKind::Ruleset => "RULESET",
            DocumentKind::Triple => "TRIPLE",
            DocumentKind::Protocol => "PROTOCOL",
            DocumentKind::Session => "SESSION",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormatError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("unsupported format version `{found}`")]
    Version { found: String },
    #[error("expected a {expected:?} document, found {found:?}")]
    Kind { expected: DocumentKind, found: DocumentKind },
    #[error("reference error at `{path}`: {message}")]
    Reference { path: String, message: String },
    #[error("invalid content at `{path}`: {message}")]
    Invalid { path: String, message: String },
}

impl FormatError {
    /// Where in the document the error was found.
    pub fn location(&self) -> String {
        match self {
            FormatError::Syntax { line, column, .. } => format!("{line}:{column}"),
            FormatError::Version { .. } => "formatVersion".into(),
            FormatError::Kind { .. } => "kind".into(),
            FormatError::Schema { path, .. } | FormatError::Reference { path, .. } | FormatError::Invalid { path, .. } => {
                path.clone()
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct Envelope<P> {
    format_version: String,
    kind: DocumentKind,
    payload: P,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct NodeTypeDto {
    name: String,
    #[serde(rename = "abstract", default)]
    is_abstract: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    supertype: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct EdgeTypeDto {
    name: String,
    source: String,
    target: String,
    upper_bound: UpperBound,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct MetamodelDto {
    name: String,
    node_types: Vec<NodeTypeDto>,
    edge_types: Vec<EdgeTypeDto>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct CorrTypeDto {
    name: String,
    source: String,
    target: String,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct TripleMetamodelDto {
    name: String,
    source: MetamodelDto,
    target: MetamodelDto,
    corr_types: Vec<CorrTypeDto>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct RuleNodeDto {
    id: String,
    #[serde(rename = "type")]
    node_type: String,
    domain: Domain,
    annotation: Annotation,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct RuleEdgeDto {
    id: String,
    #[serde(rename = "type")]
    edge_type: String,
    domain: Domain,
    source: String,
    target: String,
    annotation: Annotation,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct RuleCorrDto {
    id: String,
    #[serde(rename = "type")]
    corr_type: String,
    source: String,
    target: String,
    annotation: Annotation,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct RuleDto {
    name: String,
    nodes: Vec<RuleNodeDto>,
    edges: Vec<RuleEdgeDto>,
    corrs: Vec<RuleCorrDto>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct RulesetDto {
    name: String,
    metamodel: TripleMetamodelDto,
    rules: Vec<RuleDto>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct NodeDto {
    id: String,
    #[serde(rename = "type")]
    node_type: String,
    domain: Domain,
    #[serde(default)]
    label: String,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct EdgeDto {
    id: String,
    #[serde(rename = "type")]
    edge_type: String,
    domain: Domain,
    source: String,
    target: String,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct CorrDto {
    id: String,
    #[serde(rename = "type")]
    corr_type: String,
    source: String,
    target: String,
}

#[derive(Serialize, Deserialize, Default)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct TripleDto {
    nodes: Vec<NodeDto>,
    edges: Vec<EdgeDto>,
    corrs: Vec<CorrDto>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct ApplicationDto {
    app_id: u64,
    step_index: usize,
    rule: String,
    kind: OperationKind,
    match_id: String,
    mapping: BTreeMap<String, String>,
    created: Vec<String>,
    marked: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct ProtocolDto {
    operation: OperationKind,
    initial: TripleDto,
    applications: Vec<ApplicationDto>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct MarkingDto {
    source: BTreeSet<String>,
    target: BTreeSet<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct SessionDto {
    ruleset: RulesetDto,
    operation: OperationKind,
    seed: u64,
    rng: Pcg32,
    next_id: u64,
    next_app_id: u64,
    mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pending_match: Option<String>,
    breakpoints: Vec<Breakpoint>,
    statuses: Vec<RuleStatus>,
    initial: TripleDto,
    triple: TripleDto,
    marking: MarkingDto,
    applications: Vec<ApplicationDto>,
}

// ---------------------------------------------------------------------------
// domain -> dto

fn metamodel_dto(mm: &Metamodel) -> MetamodelDto {
    MetamodelDto {
        name: mm.name().to_string(),
        node_types: mm
            .node_types()
            .map(|n| NodeTypeDto { name: n.name.clone(), is_abstract: n.is_abstract, supertype: n.supertype.clone() })
            .collect(),
        edge_types: mm
            .edge_types()
            .map(|e| EdgeTypeDto {
                name: e.name.clone(),
                source: e.source.clone(),
                target: e.target.clone(),
                upper_bound: e.upper_bound,
            })
            .collect(),
    }
}

fn triple_metamodel_dto(mm: &TripleMetamodel) -> TripleMetamodelDto {
    TripleMetamodelDto {
        name: mm.name().to_string(),
        source: metamodel_dto(mm.source()),
        target: metamodel_dto(mm.target()),
        corr_types: mm
            .corr_types()
            .map(|c| CorrTypeDto { name: c.name.clone(), source: c.source.clone(), target: c.target.clone() })
            .collect(),
    }
}

fn rule_dto(rule: &TggRule) -> RuleDto {
    let mut dto = RuleDto {
        name: rule.name.clone(),
        nodes: rule
            .nodes
            .iter()
            .map(|n| RuleNodeDto { id: n.id.clone(), node_type: n.node_type.clone(), domain: n.domain, annotation: n.annotation })
            .collect(),
        edges: rule
            .edges
            .iter()
            .map(|e| RuleEdgeDto {
                id: e.id.clone(),
                edge_type: e.edge_type.clone(),
                domain: e.domain,
                source: e.source.clone(),
                target: e.target.clone(),
                annotation: e.annotation,
            })
            .collect(),
        corrs: rule
            .corrs
            .iter()
            .map(|c| RuleCorrDto {
                id: c.id.clone(),
                corr_type: c.corr_type.clone(),
                source: c.source.clone(),
                target: c.target.clone(),
                annotation: c.annotation,
            })
            .collect(),
    };
    dto.nodes.sort_by(|a, b| a.id.cmp(&b.id));
    dto.edges.sort_by(|a, b| a.id.cmp(&b.id));
    dto.corrs.sort_by(|a, b| a.id.cmp(&b.id));
    dto
}

fn ruleset_dto(tgg: &Tgg) -> RulesetDto {
    RulesetDto {
        name: tgg.name().to_string(),
        metamodel: triple_metamodel_dto(tgg.metamodel()),
        rules: tgg.rules().map(rule_dto).collect(),
    }
}

fn triple_dto(t: &TripleGraph) -> TripleDto {
    TripleDto {
        nodes: t
            .nodes()
            .map(|n| NodeDto { id: n.id.clone(), node_type: n.node_type.clone(), domain: n.domain, label: n.label.clone() })
            .collect(),
        edges: t
            .edges()
            .map(|e| EdgeDto {
                id: e.id.clone(),
                edge_type: e.edge_type.clone(),
                domain: e.domain,
                source: e.source.clone(),
                target: e.target.clone(),
            })
            .collect(),
        corrs: t
            .corrs()
            .map(|c| CorrDto { id: c.id.clone(), corr_type: c.corr_type.clone(), source: c.source.clone(), target: c.target.clone() })
            .collect(),
    }
}

fn application_dto(app: &RuleApplication) -> ApplicationDto {
    ApplicationDto {
        app_id: app.app_id,
        step_index: app.step_index,
        rule: app.rule_name.clone(),
        kind: app.kind,
        match_id: app.matched.match_id.clone(),
        mapping: app.matched.mapping.clone(),
        created: app.created_element_ids.clone(),
        marked: app.marked_element_ids.clone(),
    }
}

fn session_dto(session: &Session) -> SessionDto {
    let state = session.state();
    SessionDto {
        ruleset: ruleset_dto(&state.tgg),
        operation: state.kind,
        seed: state.seed,
        rng: state.rng,
        next_id: state.next_id,
        next_app_id: state.next_app_id,
        mode: state.mode,
        pending_match: state.pending,
        breakpoints: state.breakpoints,
        statuses: state.statuses,
        initial: triple_dto(&state.initial),
        triple: triple_dto(&state.triple),
        marking: MarkingDto { source: state.marking.marked_source, target: state.marking.marked_target },
        applications: state.protocol.iter().map(application_dto).collect(),
    }
}

fn encode<P: Serialize>(kind: DocumentKind, payload: P) -> Vec<u8> {
    let envelope = Envelope { format_version: FORMAT_VERSION.to_string(), kind, payload };
    let mut text = serde_json::to_string_pretty(&envelope).expect("documents always serialize");
    text.push('\n');
    text.into_bytes()
}

pub fn save_metamodel(mm: &TripleMetamodel) -> Vec<u8> {
    encode(DocumentKind::Metamodel, triple_metamodel_dto(mm))
}

pub fn save_ruleset(tgg: &Tgg) -> Vec<u8> {
    encode(DocumentKind::Ruleset, ruleset_dto(tgg))
}

pub fn save_triple(triple: &TripleGraph) -> Vec<u8> {
    encode(DocumentKind::Triple, triple_dto(triple))
}

pub fn save_protocol(protocol: &Protocol) -> Vec<u8> {
    encode(
        DocumentKind::Protocol,
        ProtocolDto {
            operation: protocol.kind,
            initial: triple_dto(&protocol.initial),
            applications: protocol.applications.iter().map(application_dto).collect(),
        },
    )
}

pub fn save_session(session: &Session) -> Vec<u8> {
    encode(DocumentKind::Session, session_dto(session))
}

/// The session document as a JSON value, for embedding in other messages.
pub fn session_to_value(session: &Session) -> Value {
    serde_json::to_value(Envelope {
        format_version: FORMAT_VERSION.to_string(),
        kind: DocumentKind::Session,
        payload: session_dto(session),
    })
    .expect("documents always serialize")
}

// ---------------------------------------------------------------------------
// dto -> domain

fn parse_value(bytes: &[u8]) -> Result<Value, FormatError> {
    serde_json::from_slice(bytes).map_err(|e| FormatError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

fn typed<T: DeserializeOwned>(value: Value, prefix: &str) -> Result<T, FormatError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let inner = e.path().to_string();
        let path = if inner == "." { prefix.to_string() } else { format!("{prefix}.{inner}") };
        FormatError::Schema { path, message: e.into_inner().to_string() }
    })
}

/// Reads the envelope of any document.
pub fn document_kind(bytes: &[u8]) -> Result<DocumentKind, FormatError> {
    let env: Envelope<Value> = typed(parse_value(bytes)?, "$")?;
    Ok(env.kind)
}

fn open_value<P: DeserializeOwned>(value: Value, expected: DocumentKind) -> Result<P, FormatError> {
    let env: Envelope<Value> = typed(value, "$")?;
    if env.format_version != FORMAT_VERSION {
        return Err(FormatError::Version { found: env.format_version });
    }
    if env.kind != expected {
        return Err(FormatError::Kind { expected, found: env.kind });
    }
    typed(env.payload, "payload")
}

fn open<P: DeserializeOwned>(bytes: &[u8], expected: DocumentKind) -> Result<P, FormatError> {
    open_value(parse_value(bytes)?, expected)
}

fn graph_error(path: &str, e: GraphError) -> FormatError {
    match e {
        GraphError::UnresolvedType { .. } | GraphError::UnknownNodeType(_) | GraphError::UnknownNode(_) => {
            FormatError::Reference { path: path.to_string(), message: e.to_string() }
        }
        _ => FormatError::Invalid { path: path.to_string(), message: e.to_string() },
    }
}

fn metamodel_from(dto: MetamodelDto, path: &str) -> Result<Metamodel, FormatError> {
    let MetamodelDto { name, node_types, edge_types } = dto;
    Metamodel::new(
        name,
        node_types
            .into_iter()
            .map(|n| NodeType { name: n.name, is_abstract: n.is_abstract, supertype: n.supertype })
            .collect(),
        edge_types.into_iter().map(|e| EdgeType::new(e.name, e.source, e.target, e.upper_bound)).collect(),
    )
    .map_err(|e| graph_error(path, e))
}

fn triple_metamodel_from(dto: TripleMetamodelDto, path: &str) -> Result<TripleMetamodel, FormatError> {
    let source = metamodel_from(dto.source, &format!("{path}.source"))?;
    let target = metamodel_from(dto.target, &format!("{path}.target"))?;
    TripleMetamodel::new(
        dto.name,
        source,
        target,
        dto.corr_types.into_iter().map(|c| CorrType::new(c.name, c.source, c.target)).collect(),
    )
    .map_err(|e| graph_error(&format!("{path}.corrTypes"), e))
}

fn rule_from(dto: RuleDto) -> TggRule {
    TggRule::new(
        dto.name,
        dto.nodes
            .into_iter()
            .map(|n| RuleNode { id: n.id, node_type: n.node_type, domain: n.domain, annotation: n.annotation })
            .collect(),
        dto.edges
            .into_iter()
            .map(|e| RuleEdge {
                id: e.id,
                edge_type: e.edge_type,
                domain: e.domain,
                source: e.source,
                target: e.target,
                annotation: e.annotation,
            })
            .collect(),
        dto.corrs
            .into_iter()
            .map(|c| RuleCorr { id: c.id, corr_type: c.corr_type, source: c.source, target: c.target, annotation: c.annotation })
            .collect(),
    )
}

fn rule_element_paths(dto: &RulesetDto, base: &str) -> HashMap<(String, String), String> {
    let mut paths = HashMap::new();
    for (ri, r) in dto.rules.iter().enumerate() {
        let rp = format!("{base}.rules[{ri}]");
        for (i, n) in r.nodes.iter().enumerate() {
            paths.entry((r.name.clone(), n.id.clone())).or_insert(format!("{rp}.nodes[{i}]"));
        }
        for (i, e) in r.edges.iter().enumerate() {
            paths.entry((r.name.clone(), e.id.clone())).or_insert(format!("{rp}.edges[{i}]"));
        }
        for (i, c) in r.corrs.iter().enumerate() {
            paths.entry((r.name.clone(), c.id.clone())).or_insert(format!("{rp}.corrs[{i}]"));
        }
        paths.entry((r.name.clone(), String::new())).or_insert(rp);
    }
    paths
}

fn ruleset_from(dto: RulesetDto, base: &str) -> Result<Tgg, FormatError> {
    let paths = rule_element_paths(&dto, base);
    let metamodel = triple_metamodel_from(dto.metamodel, &format!("{base}.metamodel"))?;
    let rules: Vec<TggRule> = dto.rules.into_iter().map(rule_from).collect();
    Tgg::new(dto.name, metamodel, rules).map_err(|e| match e {
        RuleError::Invalid(violations) => {
            let first = &violations[0];
            let key = (first.rule.clone(), first.elements.first().cloned().unwrap_or_default());
            let path = paths
                .get(&key)
                .or_else(|| paths.get(&(first.rule.clone(), String::new())))
                .cloned()
                .unwrap_or_else(|| format!("{base}.rules"));
            let message = violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ");
            if first.kind == crate::rules::RuleViolationKind::UnknownType {
                FormatError::Reference { path: format!("{path}.type"), message }
            } else {
                FormatError::Invalid { path, message }
            }
        }
        RuleError::DuplicateRule(name) => FormatError::Invalid {
            path: paths.get(&(name.clone(), String::new())).cloned().unwrap_or_else(|| format!("{base}.rules")),
            message: format!("duplicate rule name `{name}`"),
        },
        RuleError::UnknownRule(name) => FormatError::Reference { path: format!("{base}.rules"), message: name },
    })
}

fn triple_from(dto: TripleDto, mm: &TripleMetamodel, base: &str) -> Result<TripleGraph, FormatError> {
    let mut paths: HashMap<String, String> = HashMap::new();
    let mut triple = TripleGraph::new();
    let dup = |path: String, id: &str| FormatError::Invalid { path, message: format!("duplicate element id `{id}`") };
    for (i, n) in dto.nodes.into_iter().enumerate() {
        let path = format!("{base}.nodes[{i}]");
        triple
            .add_node(Node { id: n.id.clone(), node_type: n.node_type, domain: n.domain, label: n.label })
            .map_err(|_| dup(path.clone(), &n.id))?;
        paths.insert(n.id, path);
    }
    for (i, e) in dto.edges.into_iter().enumerate() {
        let path = format!("{base}.edges[{i}]");
        triple
            .add_edge(Edge { id: e.id.clone(), edge_type: e.edge_type, domain: e.domain, source: e.source, target: e.target })
            .map_err(|_| dup(path.clone(), &e.id))?;
        paths.insert(e.id, path);
    }
    for (i, c) in dto.corrs.into_iter().enumerate() {
        let path = format!("{base}.corrs[{i}]");
        triple
            .add_corr(CorrLink { id: c.id.clone(), corr_type: c.corr_type, source: c.source, target: c.target })
            .map_err(|_| dup(path.clone(), &c.id))?;
        paths.insert(c.id, path);
    }

    let violations = check_conformance(&triple, mm);
    if let Some(first) = violations.first() {
        let element = first.elements.first().cloned().unwrap_or_default();
        let path = paths.get(&element).cloned().unwrap_or_else(|| base.to_string());
        let message = violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ");
        return Err(match first.kind {
            ViolationKind::UnknownType => FormatError::Reference { path: format!("{path}.type"), message },
            ViolationKind::DanglingEdge => FormatError::Reference { path, message },
            _ => FormatError::Invalid { path, message },
        });
    }
    Ok(triple)
}

fn application_from(dto: ApplicationDto, path: &str) -> Result<RuleApplication, FormatError> {
    let matched = Match::new(dto.rule.clone(), dto.kind, dto.mapping);
    if matched.match_id != dto.match_id {
        return Err(FormatError::Invalid {
            path: format!("{path}.matchId"),
            message: format!("match id `{}` does not digest the mapping (expected `{}`)", dto.match_id, matched.match_id),
        });
    }
    Ok(RuleApplication {
        app_id: dto.app_id,
        step_index: dto.step_index,
        rule_name: dto.rule,
        kind: dto.kind,
        matched,
        created_element_ids: dto.created,
        marked_element_ids: dto.marked,
    })
}

fn applications_from(dtos: Vec<ApplicationDto>, base: &str) -> Result<Vec<RuleApplication>, FormatError> {
    let apps: Vec<RuleApplication> = dtos
        .into_iter()
        .enumerate()
        .map(|(i, a)| application_from(a, &format!("{base}[{i}]")))
        .collect::<Result<_, _>>()?;
    for (i, pair) in apps.windows(2).enumerate() {
        if pair[1].app_id <= pair[0].app_id {
            return Err(FormatError::Invalid {
                path: format!("{base}[{}].appId", i + 1),
                message: "application ids must be strictly increasing".into(),
            });
        }
    }
    Ok(apps)
}

fn engine_error(base: &str, e: EngineError) -> FormatError {
    match e {
        EngineError::Replay { step, reason } => FormatError::Invalid { path: format!("{base}[{step}]"), message: reason },
        other => FormatError::Invalid { path: base.to_string(), message: other.to_string() },
    }
}

pub fn load_metamodel(bytes: &[u8]) -> Result<TripleMetamodel, FormatError> {
    triple_metamodel_from(open(bytes, DocumentKind::Metamodel)?, "payload")
}

pub fn load_ruleset(bytes: &[u8]) -> Result<Tgg, FormatError> {
    ruleset_from(open(bytes, DocumentKind::Ruleset)?, "payload")
}

/// A rule set whose rules have not been validated, for reporting every
/// violation instead of stopping at the first.
pub struct UncheckedRuleset {
    pub name: String,
    pub metamodel: TripleMetamodel,
    pub rules: Vec<TggRule>,
}

pub fn load_ruleset_unchecked(bytes: &[u8]) -> Result<UncheckedRuleset, FormatError> {
    let dto: RulesetDto = open(bytes, DocumentKind::Ruleset)?;
    let metamodel = triple_metamodel_from(dto.metamodel, "payload.metamodel")?;
    Ok(UncheckedRuleset { name: dto.name, metamodel, rules: dto.rules.into_iter().map(rule_from).collect() })
}

pub fn load_triple(bytes: &[u8], mm: &TripleMetamodel) -> Result<TripleGraph, FormatError> {
    triple_from(open(bytes, DocumentKind::Triple)?, mm, "payload")
}

/// Loads a protocol and checks that it replays onto its initial model.
pub fn load_protocol(bytes: &[u8], tgg: &Tgg) -> Result<Protocol, FormatError> {
    let dto: ProtocolDto = open(bytes, DocumentKind::Protocol)?;
    let initial = triple_from(dto.initial, tgg.metamodel(), "payload.initial")?;
    let applications = applications_from(dto.applications, "payload.applications")?;
    let protocol = Protocol { kind: dto.operation, initial, applications };
    protocol.replay(tgg, protocol.applications.len()).map_err(|e| engine_error("payload.applications", e))?;
    Ok(protocol)
}

pub fn load_session(bytes: &[u8]) -> Result<Session, FormatError> {
    session_from_value(parse_value(bytes)?)
}

pub fn session_from_value(value: Value) -> Result<Session, FormatError> {
    let dto: SessionDto = open_value(value, DocumentKind::Session)?;
    let tgg = ruleset_from(dto.ruleset, "payload.ruleset")?;
    let initial = triple_from(dto.initial, tgg.metamodel(), "payload.initial")?;
    let triple = triple_from(dto.triple, tgg.metamodel(), "payload.triple")?;
    let protocol = applications_from(dto.applications, "payload.applications")?;
    let state = SessionState {
        tgg,
        kind: dto.operation,
        initial,
        triple,
        marking: MarkingState { marked_source: dto.marking.source, marked_target: dto.marking.target },
        protocol,
        mode: dto.mode,
        breakpoints: dto.breakpoints,
        statuses: dto.statuses,
        seed: dto.seed,
        rng: dto.rng,
        next_id: dto.next_id,
        next_app_id: dto.next_app_id,
        pending: dto.pending_match,
    };
    Session::restore(state).map_err(|e| engine_error("payload.applications", e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture;

    #[test]
    fn empty_triple_document() {
        let text = String::from_utf8(save_triple(&TripleGraph::new())).unwrap();
        assert_eq!(
            text,
            "{\n  \"formatVersion\": \"1\",\n  \"kind\": \"TRIPLE\",\n  \"payload\": {\n    \"nodes\": [],\n    \"edges\": [],\n    \"corrs\": []\n  }\n}\n"
        );
    }

    #[test]
    fn kind_mismatch_reported() {
        let bytes = save_triple(&TripleGraph::new());
        assert_eq!(
            load_ruleset(&bytes).err(),
            Some(FormatError::Kind { expected: DocumentKind::Ruleset, found: DocumentKind::Triple })
        );
    }

    #[test]
    fn version_mismatch_reported() {
        let text = String::from_utf8(save_triple(&TripleGraph::new())).unwrap().replace("\"1\"", "\"2\"");
        assert_eq!(
            load_triple(text.as_bytes(), fixture::company_to_it().metamodel()).err(),
            Some(FormatError::Version { found: "2".into() })
        );
    }

    #[test]
    fn undeclared_type_names_the_element() {
        let doc = r#"{"formatVersion":"1","kind":"TRIPLE","payload":{"nodes":[
            {"id":"c","type":"Company","domain":"SOURCE","label":"c"},
            {"id":"p1","type":"Printer","domain":"SOURCE","label":"p"}],"edges":[],"corrs":[]}}"#;
        let err = load_triple(doc.as_bytes(), fixture::company_to_it().metamodel()).unwrap_err();
        match err {
            FormatError::Reference { path, message } => {
                assert_eq!(path, "payload.nodes[1].type");
                assert!(message.contains("p1"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn schema_errors_carry_json_paths() {
        let doc = r#"{"formatVersion":"1","kind":"TRIPLE","payload":{"nodes":[
            {"id":"c","type":"Company","domain":"SIDEWAYS"}],"edges":[],"corrs":[]}}"#;
        let err = load_triple(doc.as_bytes(), fixture::company_to_it().metamodel()).unwrap_err();
        assert!(matches!(&err, FormatError::Schema { path, .. } if path == "payload.nodes[0].domain"), "{err:?}");
    }

    #[test]
    fn truncated_input_reports_position() {
        let bytes = save_triple(&fixture::company_source(1, 1));
        let err = load_triple(&bytes[..bytes.len() / 2], fixture::company_to_it().metamodel()).unwrap_err();
        assert!(matches!(err, FormatError::Syntax { line, .. } if line > 1), "{err:?}");
    }

    #[test]
    fn insertion_order_does_not_matter() {
        let a = fixture::company_source(2, 2);
        let mut b = TripleGraph::new();
        let mut nodes: Vec<_> = a.nodes().cloned().collect();
        nodes.reverse();
        for n in nodes {
            b.add_node(n).unwrap();
        }
        let mut edges: Vec<_> = a.edges().cloned().collect();
        edges.reverse();
        for e in edges {
            b.add_edge(e).unwrap();
        }
        assert_eq!(save_triple(&a), save_triple(&b));
    }

    #[test]
    fn ruleset_round_trips() {
        let tgg = fixture::company_to_it();
        let bytes = save_ruleset(&tgg);
        let again = load_ruleset(&bytes).unwrap();
        assert_eq!(again, tgg);
        assert_eq!(save_ruleset(&again), bytes);
    }
}
