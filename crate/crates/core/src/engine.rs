//! Transformation sessions.
//!
//! A [`Session`] owns the model under transformation and applies one rule
//! application at a time, either chosen by the user (debug mode) or at
//! random until a halt condition is reached (background mode). Every step
//! is appended to the protocol and reported as a [`DataPackage`].

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg32;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{check_conformance, CorrLink, Domain, Edge, GraphError, Node, TripleGraph, Violation};
use crate::matcher::{find_all_matches, is_still_valid, Match, MarkingState};
use crate::rules::{operationalize, OperationKind, OperationalRule, RuleError, Tgg};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("input model is not conformant: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Validation(Vec<Violation>),
    #[error("{0}")]
    Argument(String),
    #[error("match `{0}` is stale or unknown")]
    StaleMatch(String),
    #[error("no match available{}", .0.as_ref().map(|r| format!(" for rule `{r}`")).unwrap_or_default())]
    NoMatch(Option<String>),
    #[error("element `{0}` would be marked twice")]
    DoubleMark(String),
    #[error("protocol replay diverged at step {step}: {reason}")]
    Replay { step: usize, reason: String },
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl EngineError {
    /// Stable code used on the wire.
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::Validation(_) => "VALIDATION",
            EngineError::Argument(_) => "ARGUMENT",
            EngineError::StaleMatch(_) => "STALE_MATCH",
            EngineError::NoMatch(_) => "NO_MATCH",
            EngineError::DoubleMark(_) => "DOUBLE_MARK",
            EngineError::Replay { .. } => "REPLAY",
            EngineError::Rule(_) => "RULE",
            EngineError::Graph(_) => "ARGUMENT",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RuleApplication {
    pub app_id: u64,
    pub step_index: usize,
    pub rule_name: String,
    pub kind: OperationKind,
    #[serde(rename = "match")]
    pub matched: Match,
    pub created_element_ids: Vec<String>,
    pub marked_element_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RuleStatus {
    pub rule_name: String,
    pub current_match_count: usize,
    pub applied_count: usize,
    pub ever_applicable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Mode {
    Background,
    Debug,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum HaltReason {
    Exhausted,
    Breakpoint,
    MaxSteps,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BreakpointKind {
    RuleFirstApplicable { rule: String },
    RuleAboutToApply { rule: String },
    StepCount { n: u64 },
}

impl BreakpointKind {
    pub fn rule(&self) -> Option<&str> {
        match self {
            BreakpointKind::RuleFirstApplicable { rule } | BreakpointKind::RuleAboutToApply { rule } => Some(rule),
            BreakpointKind::StepCount { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Breakpoint {
    #[serde(flatten)]
    pub kind: BreakpointKind,
    pub enabled: bool,
}

/// Unmarked elements left behind by a translation that ran out of matches.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IncompleteReport {
    pub unmarked_element_ids: Vec<String>,
}

/// Snapshot of the session handed to clients after every step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DataPackage {
    pub operation: OperationKind,
    pub last_application: Option<RuleApplication>,
    pub statuses: Vec<RuleStatus>,
    pub available_matches: BTreeMap<String, Vec<Match>>,
    pub protocol_length: usize,
    pub mode: Mode,
    pub halt_reason: Option<HaltReason>,
    pub incomplete: Option<IncompleteReport>,
}

/// Everything needed to restore a session exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionState {
    pub tgg: Tgg,
    pub kind: OperationKind,
    pub initial: TripleGraph,
    pub triple: TripleGraph,
    pub marking: MarkingState,
    pub protocol: Vec<RuleApplication>,
    pub mode: Mode,
    pub breakpoints: Vec<Breakpoint>,
    pub statuses: Vec<RuleStatus>,
    pub seed: u64,
    pub rng: Pcg32,
    pub next_id: u64,
    pub next_app_id: u64,
    pub pending: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Session {
    tgg: Tgg,
    ops: Vec<OperationalRule>,
    kind: OperationKind,
    initial: TripleGraph,
    triple: TripleGraph,
    marking: MarkingState,
    protocol: Vec<RuleApplication>,
    mode: Mode,
    breakpoints: Vec<Breakpoint>,
    statuses: BTreeMap<String, RuleStatus>,
    available: BTreeMap<String, Vec<Match>>,
    seed: u64,
    rng: Pcg32,
    next_id: u64,
    next_app_id: u64,
    /// Match held back by a RULE_ABOUT_TO_APPLY halt; the next background
    /// run executes it first.
    pending: Option<String>,
}

impl Session {
    pub fn new(tgg: Tgg, kind: OperationKind, input: TripleGraph, seed: u64) -> Result<(Session, DataPackage), EngineError> {
        let violations = check_conformance(&input, tgg.metamodel());
        if !violations.is_empty() {
            return Err(EngineError::Validation(violations));
        }
        let must_be_empty: &[Domain] = match kind {
            OperationKind::Gen => &[Domain::Source, Domain::Correspondence, Domain::Target],
            OperationKind::Fwd => &[Domain::Correspondence, Domain::Target],
            OperationKind::Bwd => &[Domain::Source, Domain::Correspondence],
        };
        for d in must_be_empty {
            if !input.is_domain_empty(*d) {
                return Err(EngineError::Argument(format!("{kind} input must have an empty {d} domain")));
            }
        }

        let statuses = tgg
            .rules()
            .map(|r| {
                (
                    r.name.clone(),
                    RuleStatus { rule_name: r.name.clone(), current_match_count: 0, applied_count: 0, ever_applicable: false },
                )
            })
            .collect();
        let mut session = Session {
            ops: tgg.operationalize_all(kind),
            tgg,
            kind,
            initial: input.clone(),
            triple: input,
            marking: MarkingState::default(),
            protocol: Vec::new(),
            mode: Mode::Debug,
            breakpoints: Vec::new(),
            statuses,
            available: BTreeMap::new(),
            seed,
            rng: Pcg32::seed_from_u64(seed),
            next_id: 1,
            next_app_id: 1,
            pending: None,
        };
        session.refresh();
        let package = session.data_package(None, None);
        Ok((session, package))
    }

    /// Rebuilds a session from saved state, checking that the protocol
    /// replays onto the recorded model.
    pub fn restore(state: SessionState) -> Result<Session, EngineError> {
        let (replayed, marking) = replay(&state.tgg, state.kind, &state.initial, &state.protocol)?;
        if replayed != state.triple {
            return Err(EngineError::Replay { step: state.protocol.len(), reason: "model differs from replayed protocol".into() });
        }
        if marking != state.marking {
            return Err(EngineError::Replay { step: state.protocol.len(), reason: "marking differs from replayed protocol".into() });
        }
        let names: BTreeSet<String> = state.tgg.rule_names().into_iter().collect();
        let status_names: BTreeSet<String> = state.statuses.iter().map(|s| s.rule_name.clone()).collect();
        if names != status_names {
            return Err(EngineError::Argument("rule statuses do not cover the rule set".into()));
        }
        for bp in &state.breakpoints {
            if let Some(rule) = bp.kind.rule() {
                if !names.contains(rule) {
                    return Err(EngineError::Argument(format!("breakpoint references unknown rule `{rule}`")));
                }
            }
        }
        let mut session = Session {
            ops: state.tgg.operationalize_all(state.kind),
            tgg: state.tgg,
            kind: state.kind,
            initial: state.initial,
            triple: state.triple,
            marking: state.marking,
            protocol: state.protocol,
            mode: state.mode,
            breakpoints: state.breakpoints,
            statuses: state.statuses.into_iter().map(|s| (s.rule_name.clone(), s)).collect(),
            available: BTreeMap::new(),
            seed: state.seed,
            rng: state.rng,
            next_id: state.next_id,
            next_app_id: state.next_app_id,
            pending: state.pending,
        };
        session.refresh();
        Ok(session)
    }

    pub fn state(&self) -> SessionState {
        SessionState {
            tgg: self.tgg.clone(),
            kind: self.kind,
            initial: self.initial.clone(),
            triple: self.triple.clone(),
            marking: self.marking.clone(),
            protocol: self.protocol.clone(),
            mode: self.mode,
            breakpoints: self.breakpoints.clone(),
            statuses: self.statuses.values().cloned().collect(),
            seed: self.seed,
            rng: self.rng.clone(),
            next_id: self.next_id,
            next_app_id: self.next_app_id,
            pending: self.pending.clone(),
        }
    }

    pub fn tgg(&self) -> &Tgg {
        &self.tgg
    }

    pub fn kind(&self) -> OperationKind {
        self.kind
    }

    pub fn initial(&self) -> &TripleGraph {
        &self.initial
    }

    pub fn triple(&self) -> &TripleGraph {
        &self.triple
    }

    pub fn marking(&self) -> &MarkingState {
        &self.marking
    }

    pub fn protocol(&self) -> &[RuleApplication] {
        &self.protocol
    }

    pub fn protocol_record(&self) -> Protocol {
        Protocol { kind: self.kind, initial: self.initial.clone(), applications: self.protocol.clone() }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn breakpoints(&self) -> &[Breakpoint] {
        &self.breakpoints
    }

    pub fn statuses(&self) -> Vec<RuleStatus> {
        self.statuses.values().cloned().collect()
    }

    pub fn available_matches(&self) -> &BTreeMap<String, Vec<Match>> {
        &self.available
    }

    pub fn find_available(&self, match_id: &str) -> Option<&Match> {
        self.available.values().flatten().find(|m| m.match_id == match_id)
    }

    pub fn overview(&self) -> DataPackage {
        self.data_package(self.protocol.last().cloned(), None)
    }

    /// Applies one of the currently available matches.
    pub fn apply_match(&mut self, match_id: &str) -> Result<DataPackage, EngineError> {
        self.mode = Mode::Debug;
        self.pending = None;
        let app = self.apply_by_id(match_id)?;
        Ok(self.data_package(Some(app), None))
    }

    /// Applies a uniformly chosen match of `rule`, or of any rule.
    pub fn apply_random_match(&mut self, rule: Option<&str>) -> Result<DataPackage, EngineError> {
        self.mode = Mode::Debug;
        self.pending = None;
        let chosen = self.choose_random(rule)?;
        let app = self.apply_by_id(&chosen)?;
        Ok(self.data_package(Some(app), None))
    }

    /// Applies random matches until the rule set is exhausted, a breakpoint
    /// fires or `max_steps` applications have been made.
    pub fn run_background(&mut self, max_steps: u64) -> Result<DataPackage, EngineError> {
        self.mode = Mode::Background;
        let mut applied = 0u64;
        let mut last = None;
        let halt = loop {
            if self.enabled(|k| matches!(k, BreakpointKind::StepCount { n } if *n == applied)) {
                break HaltReason::Breakpoint;
            }
            if applied >= max_steps {
                break HaltReason::MaxSteps;
            }
            let resumed = self.pending.take().filter(|id| self.find_available(id).is_some());
            let chosen = match resumed {
                Some(id) => id,
                None => {
                    if self.available.values().all(Vec::is_empty) {
                        break HaltReason::Exhausted;
                    }
                    let id = self.choose_random(None)?;
                    let rule = self.find_available(&id).map(|m| m.rule_name.clone()).unwrap_or_default();
                    if self.enabled(|k| matches!(k, BreakpointKind::RuleAboutToApply { rule: r } if *r == rule)) {
                        self.pending = Some(id);
                        break HaltReason::Breakpoint;
                    }
                    id
                }
            };
            let latched_before: BTreeSet<String> =
                self.statuses.values().filter(|s| s.ever_applicable).map(|s| s.rule_name.clone()).collect();
            last = Some(self.apply_by_id(&chosen)?);
            applied += 1;
            let newly_applicable = self
                .statuses
                .values()
                .any(|s| {
                    s.ever_applicable
                        && !latched_before.contains(&s.rule_name)
                        && self.enabled(|k| matches!(k, BreakpointKind::RuleFirstApplicable { rule } if *rule == s.rule_name))
                });
            if newly_applicable {
                break HaltReason::Breakpoint;
            }
        };
        if halt != HaltReason::Exhausted {
            self.mode = Mode::Debug;
        }
        Ok(self.data_package(last.or_else(|| self.protocol.last().cloned()), Some(halt)))
    }

    pub fn set_breakpoint(&mut self, kind: BreakpointKind) -> Result<(), EngineError> {
        self.check_breakpoint_rule(&kind)?;
        match self.breakpoints.iter_mut().find(|b| b.kind == kind) {
            Some(existing) => existing.enabled = true,
            None => {
                self.breakpoints.push(Breakpoint { kind, enabled: true });
                self.breakpoints.sort_by(|a, b| a.kind.cmp(&b.kind));
            }
        }
        Ok(())
    }

    /// Removes a breakpoint; returns whether it was present.
    pub fn clear_breakpoint(&mut self, kind: &BreakpointKind) -> Result<bool, EngineError> {
        self.check_breakpoint_rule(kind)?;
        let before = self.breakpoints.len();
        self.breakpoints.retain(|b| &b.kind != kind);
        Ok(self.breakpoints.len() != before)
    }

    fn check_breakpoint_rule(&self, kind: &BreakpointKind) -> Result<(), EngineError> {
        match kind.rule() {
            Some(rule) if self.tgg.rule(rule).is_none() => Err(EngineError::Argument(format!("unknown rule `{rule}`"))),
            _ => Ok(()),
        }
    }

    fn enabled(&self, pred: impl Fn(&BreakpointKind) -> bool) -> bool {
        self.breakpoints.iter().any(|b| b.enabled && pred(&b.kind))
    }

    fn choose_random(&mut self, rule: Option<&str>) -> Result<String, EngineError> {
        let candidates: Vec<&Match> = match rule {
            Some(r) => self
                .available
                .get(r)
                .ok_or_else(|| EngineError::Argument(format!("unknown rule `{r}`")))?
                .iter()
                .collect(),
            None => self.available.values().flatten().collect(),
        };
        if candidates.is_empty() {
            return Err(EngineError::NoMatch(rule.map(str::to_string)));
        }
        let index = self.rng.gen_range(0..candidates.len());
        Ok(candidates[index].match_id.clone())
    }

    fn apply_by_id(&mut self, match_id: &str) -> Result<RuleApplication, EngineError> {
        let m = self.find_available(match_id).cloned().ok_or_else(|| EngineError::StaleMatch(match_id.to_string()))?;
        let op = self
            .ops
            .iter()
            .find(|o| o.name() == m.rule_name)
            .ok_or_else(|| EngineError::StaleMatch(match_id.to_string()))?;
        if !is_still_valid(&m, op, self.tgg.metamodel(), &self.triple, &self.marking) {
            return Err(EngineError::StaleMatch(match_id.to_string()));
        }

        let mut triple = self.triple.clone();
        let mut marking = self.marking.clone();
        let (created, marked) = apply_mapping(op, &m.mapping, &mut triple, &mut marking, &mut self.next_id)?;
        self.triple = triple;
        self.marking = marking;

        let app = RuleApplication {
            app_id: self.next_app_id,
            step_index: self.protocol.len(),
            rule_name: m.rule_name.clone(),
            kind: self.kind,
            matched: m,
            created_element_ids: created,
            marked_element_ids: marked,
        };
        self.next_app_id += 1;
        if let Some(status) = self.statuses.get_mut(&app.rule_name) {
            status.applied_count += 1;
        }
        self.protocol.push(app.clone());
        self.refresh();
        Ok(app)
    }

    fn refresh(&mut self) {
        self.available = find_all_matches(&self.ops, self.tgg.metamodel(), &self.triple, &self.marking);
        for (name, status) in self.statuses.iter_mut() {
            status.current_match_count = self.available.get(name).map_or(0, Vec::len);
            status.ever_applicable |= status.current_match_count > 0;
        }
    }

    fn incomplete(&self) -> Option<IncompleteReport> {
        let domain = self.kind.marked_domain()?;
        if self.available.values().any(|v| !v.is_empty()) {
            return None;
        }
        let marked = self.marking.set(domain)?;
        let unmarked: Vec<String> = self.triple.element_ids_in(domain).difference(marked).cloned().collect();
        (!unmarked.is_empty()).then_some(IncompleteReport { unmarked_element_ids: unmarked })
    }

    fn data_package(&self, last: Option<RuleApplication>, halt: Option<HaltReason>) -> DataPackage {
        DataPackage {
            operation: self.kind,
            last_application: last,
            statuses: self.statuses(),
            available_matches: self.available.clone(),
            protocol_length: self.protocol.len(),
            mode: self.mode,
            halt_reason: halt,
            incomplete: self.incomplete(),
        }
    }
}

/// A recorded run: the model it started from and every application made.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Protocol {
    pub kind: OperationKind,
    pub initial: TripleGraph,
    pub applications: Vec<RuleApplication>,
}

impl Protocol {
    /// Model and marking after the first `prefix` applications.
    pub fn replay(&self, tgg: &Tgg, prefix: usize) -> Result<(TripleGraph, MarkingState), EngineError> {
        if prefix > self.applications.len() {
            return Err(EngineError::Argument(format!(
                "prefix {prefix} exceeds protocol length {}",
                self.applications.len()
            )));
        }
        replay(tgg, self.kind, &self.initial, &self.applications[..prefix])
    }

    /// Model after step `step` (0-based, inclusive).
    pub fn state_after(&self, tgg: &Tgg, step: usize) -> Result<TripleGraph, EngineError> {
        if step >= self.applications.len() {
            return Err(EngineError::Argument(format!(
                "step {step} out of range for protocol length {}",
                self.applications.len()
            )));
        }
        Ok(self.replay(tgg, step + 1)?.0)
    }
}

/// Next free id of the form `e<n>`, skipping ids already in use.
fn fresh_id(triple: &TripleGraph, counter: &mut u64) -> String {
    loop {
        let id = format!("e{counter}");
        *counter += 1;
        if !triple.contains(&id) {
            return id;
        }
    }
}

/// Instantiates the created elements of `op` for `mapping` and marks the
/// translated ones. Returns created and marked host ids, both in canonical
/// rule-element order.
pub fn apply_mapping(
    op: &OperationalRule,
    mapping: &BTreeMap<String, String>,
    triple: &mut TripleGraph,
    marking: &mut MarkingState,
    counter: &mut u64,
) -> Result<(Vec<String>, Vec<String>), EngineError> {
    let mut image: BTreeMap<&str, String> = mapping.iter().map(|(k, v)| (k.as_str(), v.clone())).collect();
    let mut created = Vec::new();
    for el in op.rule.elements() {
        if op.to_create.contains(el.id()) {
            let id = fresh_id(triple, counter);
            image.insert(el.id(), id.clone());
            created.push(id);
        }
    }
    let resolve = |rule_id: &str| -> Result<String, EngineError> {
        image.get(rule_id).cloned().ok_or_else(|| EngineError::Argument(format!("mapping lacks rule element `{rule_id}`")))
    };

    for n in op.rule.nodes.iter().filter(|n| op.to_create.contains(&n.id)) {
        triple.add_node(Node { id: resolve(&n.id)?, node_type: n.node_type.clone(), domain: n.domain, label: n.id.clone() })?;
    }
    for e in op.rule.edges.iter().filter(|e| op.to_create.contains(&e.id)) {
        triple.add_edge(Edge {
            id: resolve(&e.id)?,
            edge_type: e.edge_type.clone(),
            domain: e.domain,
            source: resolve(&e.source)?,
            target: resolve(&e.target)?,
        })?;
    }
    for c in op.rule.corrs.iter().filter(|c| op.to_create.contains(&c.id)) {
        triple.add_corr(CorrLink {
            id: resolve(&c.id)?,
            corr_type: c.corr_type.clone(),
            source: resolve(&c.source)?,
            target: resolve(&c.target)?,
        })?;
    }

    let mut marked = Vec::new();
    for el in op.rule.elements().filter(|el| op.to_mark.contains(el.id())) {
        let host = resolve(el.id())?;
        if !marking.mark(&host, el.domain()) {
            return Err(EngineError::DoubleMark(host));
        }
        marked.push(host);
    }
    Ok((created, marked))
}

/// Re-executes recorded applications on `initial` without consulting the
/// matcher. Fresh ids are re-derived and must equal the recorded ones.
pub fn replay(
    tgg: &Tgg,
    kind: OperationKind,
    initial: &TripleGraph,
    applications: &[RuleApplication],
) -> Result<(TripleGraph, MarkingState), EngineError> {
    let mut triple = initial.clone();
    let mut marking = MarkingState::default();
    let mut counter = 1;
    for (step, app) in applications.iter().enumerate() {
        let diverged = |reason: String| EngineError::Replay { step, reason };
        if app.step_index != step {
            return Err(diverged(format!("step index {} out of sequence", app.step_index)));
        }
        if app.kind != kind || app.matched.kind != kind {
            return Err(diverged(format!("application kind {} in a {kind} protocol", app.kind)));
        }
        let rule = tgg.rule(&app.rule_name).ok_or_else(|| diverged(format!("unknown rule `{}`", app.rule_name)))?;
        let op = operationalize(rule, kind)?;
        if app.matched.mapping.keys().cloned().collect::<BTreeSet<_>>() != op.context {
            return Err(diverged("mapping does not cover the rule context".into()));
        }
        if let Some(missing) = app.matched.mapping.values().find(|h| !triple.contains(h)) {
            return Err(diverged(format!("mapping references missing element `{missing}`")));
        }
        let (created, marked) = apply_mapping(&op, &app.matched.mapping, &mut triple, &mut marking, &mut counter)
            .map_err(|e| diverged(e.to_string()))?;
        if created != app.created_element_ids {
            return Err(diverged("created element ids differ from the record".into()));
        }
        if marked != app.marked_element_ids {
            return Err(diverged("marked element ids differ from the record".into()));
        }
    }
    Ok((triple, marking))
}
