// Scripted client shared by the transcript tests.

use serde_json::{json, Value};
use tgg_core::{fixture, OperationKind, Session};
use tgg_server::DebugServer;

pub const GOLDEN: &str = include_str!("../golden/transcript.txt");

fn mask_hashes(s: &str) -> String {
    let mut out = String::new();
    let mut rest = s;
    while let Some(pos) = rest.find('#') {
        out.push_str(&rest[..=pos]);
        rest = &rest[pos + 1..];
        let digits = rest.bytes().take_while(u8::is_ascii_hexdigit).count();
        if digits == 16 {
            out.push_str("<hash>");
            rest = &rest[16..];
        }
    }
    out.push_str(rest);
    out
}

/// Replaces match hashes and application ids, which are not part of the
/// contract, with placeholders.
pub fn normalize(value: &Value) -> Value {
    match value {
        Value::String(s) => Value::String(mask_hashes(s)),
        Value::Array(items) => Value::Array(items.iter().map(normalize).collect()),
        Value::Object(map) => Value::Object(
            map.iter()
                .map(|(k, v)| {
                    let v = if k == "appId" { json!("<appId>") } else { normalize(v) };
                    (k.clone(), v)
                })
                .collect(),
        ),
        other => other.clone(),
    }
}

pub fn fwd_session() -> Session {
    let source = fixture::company_source(1, 1);
    Session::new(fixture::company_to_it(), OperationKind::Fwd, source, 11).unwrap().0
}

/// Runs the script through `send`, which returns every message the server
/// produced for one request line. Returns the normalized transcript.
pub fn run(mut send: impl FnMut(&str) -> Vec<Value>) -> String {
    let mut out = String::new();
    let mut exchange = |line: &str, out: &mut String| {
        out.push_str("> ");
        match serde_json::from_str::<Value>(line) {
            Ok(v) => out.push_str(&normalize(&v).to_string()),
            Err(_) => out.push_str(line),
        }
        out.push('\n');
        let replies = send(line);
        for reply in &replies {
            out.push_str("< ");
            out.push_str(&normalize(reply).to_string());
            out.push('\n');
        }
        replies
    };

    exchange(r#"{"id":1,"type":"hello"}"#, &mut out);
    let overview = exchange(r#"{"id":2,"type":"overview"}"#, &mut out);
    let axiom = overview[0]["body"]["availableMatches"]["CompanyToITRule"][0]["matchId"]
        .as_str()
        .expect("axiom match offered")
        .to_string();
    let apply = json!({"id": 3, "type": "apply", "params": {"matchId": axiom}}).to_string();
    exchange(&apply, &mut out);
    let again = json!({"id": 4, "type": "apply", "params": {"matchId": axiom}}).to_string();
    exchange(&again, &mut out);
    exchange(
        r#"{"id":5,"type":"breakpoint.set","params":{"kind":"RULE_FIRST_APPLICABLE","rule":"EmployeeToPCRule"}}"#,
        &mut out,
    );
    exchange(r#"{"id":6,"type":"resume","params":{"maxSteps":100}}"#, &mut out);
    exchange(r#"{"id":7,"type":"#, &mut out);
    out
}

pub fn in_process() -> String {
    let mut server = DebugServer::new(fwd_session());
    run(|line| server.handle_line(line))
}
