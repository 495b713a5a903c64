//! The CompanyToIT example: a company's organisation on the source side,
//! its IT infrastructure on the target side.
//!
//! Rule shapes live in `fixtures/companytoit.ruleset.json`.

use crate::graph::{Domain, Edge, Node, TripleGraph};
use crate::rules::Tgg;
use crate::serialization::load_ruleset;

pub const COMPANY_TO_IT_RULESET: &str = include_str!("../fixtures/companytoit.ruleset.json");
pub const COMPANY_TO_IT_METAMODEL: &str = include_str!("../fixtures/companytoit.metamodel.json");
/// `company_source(2, 1)` as a triple document.
pub const COMPANY_SOURCE: &str = include_str!("../fixtures/company.source.triple.json");

pub fn company_to_it() -> Tgg {
    load_ruleset(COMPANY_TO_IT_RULESET.as_bytes()).expect("bundled rule set is valid")
}

/// A source model with one company, its CEO, `admins` admins and
/// `employees` employees, all reporting to the CEO.
pub fn company_source(admins: usize, employees: usize) -> TripleGraph {
    let mut g = TripleGraph::new();
    let node = |g: &mut TripleGraph, id: &str, ty: &str| {
        g.add_node(Node { id: id.into(), node_type: ty.into(), domain: Domain::Source, label: id.into() })
            .expect("fixture ids are unique");
    };
    node(&mut g, "company", "Company");
    node(&mut g, "ceo", "CEO");
    for i in 1..=admins {
        node(&mut g, &format!("admin{i}"), "Admin");
    }
    for i in 1..=employees {
        node(&mut g, &format!("employee{i}"), "Employee");
    }

    let edge = |g: &mut TripleGraph, id: String, ty: &str, s: &str, t: &str| {
        g.add_edge(Edge { id, edge_type: ty.into(), domain: Domain::Source, source: s.into(), target: t.into() })
            .expect("fixture ids are unique");
    };
    edge(&mut g, "ceoEdge".into(), "ceo", "company", "ceo");
    for i in 1..=admins {
        let admin = format!("admin{i}");
        edge(&mut g, format!("admins{i}"), "admins", "company", &admin);
        edge(&mut g, format!("adminReports{i}"), "reportsTo", &admin, "ceo");
    }
    for i in 1..=employees {
        let employee = format!("employee{i}");
        edge(&mut g, format!("employees{i}"), "employees", "company", &employee);
        edge(&mut g, format!("employeeReports{i}"), "reportsTo", &employee, "ceo");
    }
    g
}
