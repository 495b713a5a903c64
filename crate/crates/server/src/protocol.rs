//! Request dispatch for a single session.

use std::collections::BTreeSet;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Map, Value};

use tgg_core::engine::{BreakpointKind, EngineError, Session};
use tgg_core::serialization::{save_protocol, session_from_value, session_to_value, FormatError};
use tgg_core::view::{
    build_match_view, build_protocol_view, build_rule_view, render_diagram, DiagramFormat, DisplayOptions, ViewError,
    ViewModel,
};
use tgg_core::{operationalize, DataPackage};

pub const PROTOCOL_VERSION: &str = "1";

/// A failed request, reported to the client as `{code, message}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WireError {
    pub code: String,
    pub message: String,
}

impl WireError {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        WireError { code: code.to_string(), message: message.into() }
    }

    fn argument(message: impl Into<String>) -> Self {
        WireError::new("ARGUMENT", message)
    }

    pub fn to_value(&self) -> Value {
        json!({ "code": self.code, "message": self.message })
    }
}

impl From<EngineError> for WireError {
    fn from(e: EngineError) -> Self {
        WireError::new(e.code(), e.to_string())
    }
}

impl From<ViewError> for WireError {
    fn from(e: ViewError) -> Self {
        match e {
            ViewError::Options(_) => WireError::new("INVALID_OPTIONS", e.to_string()),
            ViewError::StaleMatch(_) => WireError::new("STALE_MATCH", e.to_string()),
            ViewError::Engine(inner) => inner.into(),
            ViewError::Argument(_) | ViewError::Graph(_) => WireError::argument(e.to_string()),
        }
    }
}

impl From<FormatError> for WireError {
    fn from(e: FormatError) -> Self {
        WireError::new("FORMAT", format!("{e} (at {})", e.location()))
    }
}

struct Outcome {
    body: Value,
    event: Option<DataPackage>,
}

impl Outcome {
    fn body(body: Value) -> Self {
        Outcome { body, event: None }
    }

    fn package(package: DataPackage) -> Self {
        Outcome { body: to_value(&package), event: Some(package) }
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("wire types serialize")
}

fn params<T: DeserializeOwned>(params: &Value) -> Result<T, WireError> {
    let value = if params.is_null() { Value::Object(Map::new()) } else { params.clone() };
    serde_json::from_value(value).map_err(|e| WireError::argument(format!("invalid params: {e}")))
}

#[derive(Deserialize, Default)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct RuleParam {
    rule: Option<String>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct ApplyParams {
    match_id: String,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct ResumeParams {
    max_steps: u64,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct StateParams {
    select: Vec<usize>,
    #[serde(default)]
    options: DisplayOptions,
    #[serde(default)]
    format: DiagramFormat,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct RuleDiagramParams {
    rule: String,
    #[serde(default)]
    options: DisplayOptions,
    #[serde(default)]
    format: DiagramFormat,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct MatchDiagramParams {
    match_id: String,
    #[serde(default)]
    options: DisplayOptions,
    #[serde(default)]
    format: DiagramFormat,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct OptionsParams {
    #[serde(default)]
    options: DisplayOptions,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct SnapshotParams {
    document: Value,
}

fn diagram(view: ViewModel, format: DiagramFormat) -> Value {
    let text = render_diagram(&view, format);
    json!({ "view": view, "diagram": text, "format": format })
}

/// Serves one engine session. Requests are handled strictly in order, so
/// a client never observes a half-applied step.
pub struct DebugServer {
    session: Session,
}

impl DebugServer {
    pub fn new(session: Session) -> Self {
        DebugServer { session }
    }

    pub fn session(&self) -> &Session {
        &self.session
    }

    /// Handles one request line and returns the messages to send back: the
    /// response, then a `dataPackage` event if the request changed state.
    pub fn handle_line(&mut self, line: &str) -> Vec<Value> {
        let request: Value = match serde_json::from_str(line) {
            Ok(v) => v,
            Err(e) => return vec![error_response(Value::Null, &WireError::new("PARSE", e.to_string()))],
        };
        let Some(obj) = request.as_object() else {
            return vec![error_response(Value::Null, &WireError::new("PARSE", "request must be a JSON object"))];
        };
        let id = match obj.get("id") {
            Some(id @ Value::Number(n)) if n.is_i64() || n.is_u64() => id.clone(),
            _ => return vec![error_response(Value::Null, &WireError::new("PARSE", "request id must be an integer"))],
        };
        let Some(kind) = obj.get("type").and_then(Value::as_str) else {
            return vec![error_response(id, &WireError::new("PARSE", "request type must be a string"))];
        };
        if let Some(extra) = obj.keys().find(|k| !matches!(k.as_str(), "id" | "type" | "params")) {
            return vec![error_response(id, &WireError::new("PARSE", format!("unknown request field `{extra}`")))];
        }
        let params = obj.get("params").cloned().unwrap_or(Value::Null);
        match self.dispatch(kind, &params) {
            Ok(outcome) => {
                let mut out = vec![json!({ "id": id, "ok": true, "body": outcome.body })];
                if let Some(package) = outcome.event {
                    out.push(json!({ "event": "dataPackage", "body": package }));
                }
                out
            }
            Err(e) => vec![error_response(id, &e)],
        }
    }

    fn dispatch(&mut self, kind: &str, p: &Value) -> Result<Outcome, WireError> {
        match kind {
            "hello" => Ok(Outcome::body(json!({
                "protocolVersion": PROTOCOL_VERSION,
                "operation": self.session.kind(),
                "ruleNames": self.session.tgg().rule_names(),
            }))),
            "overview" => Ok(Outcome::body(to_value(&self.session.overview()))),
            "matches" => {
                let RuleParam { rule } = params(p)?;
                let available = self.session.available_matches();
                let list: Vec<_> = match rule {
                    Some(rule) => available
                        .get(&rule)
                        .ok_or_else(|| WireError::argument(format!("unknown rule `{rule}`")))?
                        .clone(),
                    None => available.values().flatten().cloned().collect(),
                };
                Ok(Outcome::body(json!({ "matches": list })))
            }
            "apply" => {
                let ApplyParams { match_id } = params(p)?;
                Ok(Outcome::package(self.session.apply_match(&match_id)?))
            }
            "applyRandom" => {
                let RuleParam { rule } = params(p)?;
                Ok(Outcome::package(self.session.apply_random_match(rule.as_deref())?))
            }
            "resume" => {
                let ResumeParams { max_steps } = params(p)?;
                Ok(Outcome::package(self.session.run_background(max_steps)?))
            }
            "breakpoint.set" => {
                let kind: BreakpointKind = params(p)?;
                self.session.set_breakpoint(kind)?;
                Ok(Outcome::body(json!({ "breakpoints": self.session.breakpoints() })))
            }
            "breakpoint.clear" => {
                let kind: BreakpointKind = params(p)?;
                let removed = self.session.clear_breakpoint(&kind)?;
                Ok(Outcome::body(json!({ "removed": removed, "breakpoints": self.session.breakpoints() })))
            }
            "protocol" => {
                let bytes = save_protocol(&self.session.protocol_record());
                Ok(Outcome::body(serde_json::from_slice(&bytes).expect("saved protocol is JSON")))
            }
            "state" => {
                let StateParams { select, options, format } = params(p)?;
                let selection: BTreeSet<usize> = select.into_iter().collect();
                let view =
                    build_protocol_view(self.session.tgg(), &self.session.protocol_record(), &selection, &options)?;
                Ok(Outcome::body(diagram(view, format)))
            }
            "ruleDiagram" => {
                let RuleDiagramParams { rule, options, format } = params(p)?;
                let rule = self
                    .session
                    .tgg()
                    .rule(&rule)
                    .ok_or_else(|| WireError::argument(format!("unknown rule `{rule}`")))?;
                Ok(Outcome::body(diagram(build_rule_view(rule, &options)?, format)))
            }
            "matchDiagram" => {
                let MatchDiagramParams { match_id, options, format } = params(p)?;
                let s = &self.session;
                let m = s.find_available(&match_id).ok_or_else(|| {
                    WireError::from(EngineError::StaleMatch(match_id.clone()))
                })?;
                let rule = s.tgg().rule(&m.rule_name).expect("matches reference known rules");
                let op = operationalize(rule, s.kind()).map_err(EngineError::from)?;
                let view = build_match_view(m, &op, s.tgg().metamodel(), s.triple(), s.marking(), &options)?;
                Ok(Outcome::body(diagram(view, format)))
            }
            "snapshot.save" => Ok(Outcome::body(session_to_value(&self.session))),
            "snapshot.load" => {
                let SnapshotParams { document } = params(p)?;
                self.session = session_from_value(document)?;
                Ok(Outcome::package(self.session.overview()))
            }
            "options.validate" => {
                let OptionsParams { options } = params(p)?;
                options.validate()?;
                Ok(Outcome::body(to_value(&options)))
            }
            other => Err(WireError::new("UNKNOWN_REQUEST", format!("unknown request type `{other}`"))),
        }
    }
}

fn error_response(id: Value, e: &WireError) -> Value {
    json!({ "id": id, "ok": false, "error": e.to_value() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use tgg_core::fixture;
    use tgg_core::{OperationKind, TripleGraph};

    fn gen_server() -> DebugServer {
        let (session, _) = Session::new(fixture::company_to_it(), OperationKind::Gen, TripleGraph::new(), 3).unwrap();
        DebugServer::new(session)
    }

    #[test]
    fn parse_errors_have_null_id() {
        let mut server = gen_server();
        let out = server.handle_line("{not json");
        assert_eq!(out.len(), 1);
        assert_eq!(out[0]["id"], Value::Null);
        assert_eq!(out[0]["error"]["code"], "PARSE");
        let out = server.handle_line(r#"{"id":"x","type":"overview"}"#);
        assert_eq!(out[0]["error"]["code"], "PARSE");
    }

    #[test]
    fn unknown_type_is_reported() {
        let mut server = gen_server();
        let out = server.handle_line(r#"{"id":4,"type":"explode"}"#);
        assert_eq!(out[0]["id"], 4);
        assert_eq!(out[0]["error"]["code"], "UNKNOWN_REQUEST");
    }

    #[test]
    fn hello_lists_rules() {
        let mut server = gen_server();
        let out = server.handle_line(r#"{"id":1,"type":"hello"}"#);
        assert_eq!(out[0]["body"]["protocolVersion"], "1");
        assert_eq!(out[0]["body"]["operation"], "GEN");
        assert_eq!(out[0]["body"]["ruleNames"].as_array().unwrap().len(), 4);
    }

    #[test]
    fn state_changes_emit_one_event_matching_overview() {
        let mut server = gen_server();
        let out = server.handle_line(r#"{"id":1,"type":"applyRandom","params":{}}"#);
        assert_eq!(out.len(), 2);
        assert_eq!(out[1]["event"], "dataPackage");
        let overview = server.handle_line(r#"{"id":2,"type":"overview"}"#);
        assert_eq!(out[1]["body"]["statuses"], overview[0]["body"]["statuses"]);

        let out = server.handle_line(r#"{"id":3,"type":"protocol"}"#);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0]["body"]["payload"]["applications"].as_array().unwrap().len(), 1);
    }

    #[test]
    fn errors_never_emit_events() {
        let mut server = gen_server();
        let out = server.handle_line(r#"{"id":1,"type":"apply","params":{"matchId":"nope"}}"#);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0]["error"]["code"], "STALE_MATCH");
        let out = server.handle_line(r#"{"id":2,"type":"applyRandom","params":{"rule":"EmployeeToPCRule"}}"#);
        assert_eq!(out[0]["error"]["code"], "NO_MATCH");
        let out = server.handle_line(r#"{"id":3,"type":"resume","params":{}}"#);
        assert_eq!(out[0]["error"]["code"], "ARGUMENT");
    }

    #[test]
    fn options_are_normalized() {
        let mut server = gen_server();
        let out = server.handle_line(r#"{"id":1,"type":"options.validate","params":{"options":{"labelMode":"ABBREV"}}}"#);
        let body = &out[0]["body"];
        assert_eq!(body["labelMode"], "ABBREV");
        assert_eq!(body["neighborhoodK"], 1);
        assert_eq!(body["showSource"], true);
        let out = server.handle_line(r#"{"id":2,"type":"options.validate","params":{"options":{"neighborhoodK":9}}}"#);
        assert_eq!(out[0]["error"]["code"], "INVALID_OPTIONS");
    }

    #[test]
    fn snapshot_round_trip_restores_state() {
        let mut server = gen_server();
        server.handle_line(r#"{"id":1,"type":"resume","params":{"maxSteps":5}}"#);
        let saved = server.handle_line(r#"{"id":2,"type":"snapshot.save"}"#)[0]["body"].clone();
        let before = server.handle_line(r#"{"id":3,"type":"overview"}"#)[0]["body"].clone();

        let mut other = gen_server();
        let load = json!({"id": 4, "type": "snapshot.load", "params": {"document": saved}});
        let out = other.handle_line(&load.to_string());
        assert_eq!(out.len(), 2);
        assert_eq!(out[0]["body"], before);
        let next_a = server.handle_line(r#"{"id":5,"type":"applyRandom"}"#);
        let next_b = other.handle_line(r#"{"id":5,"type":"applyRandom"}"#);
        assert_eq!(next_a, next_b);
    }

    #[test]
    fn diagrams_are_served() {
        let mut server = gen_server();
        let out = server.handle_line(r#"{"id":1,"type":"ruleDiagram","params":{"rule":"CompanyToITRule"}}"#);
        assert!(out[0]["body"]["diagram"].as_str().unwrap().starts_with("@startuml"));
        let id = server.session().available_matches()["CompanyToITRule"][0].match_id.clone();
        let req = json!({"id": 2, "type": "matchDiagram", "params": {"matchId": id, "format": "dot"}});
        let out = server.handle_line(&req.to_string());
        assert!(out[0]["body"]["diagram"].as_str().unwrap().starts_with("digraph"));
        server.handle_line(r#"{"id":3,"type":"applyRandom"}"#);
        let out = server.handle_line(r#"{"id":4,"type":"state","params":{"select":[0]}}"#);
        assert_eq!(out[0]["body"]["view"]["nodes"].as_array().unwrap().len(), 3);
        let out = server.handle_line(r#"{"id":5,"type":"state","params":{"select":[7]}}"#);
        assert_eq!(out[0]["error"]["code"], "ARGUMENT");
    }
}
