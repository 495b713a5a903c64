use tgg_core::fixture;
use tgg_core::view::{build_rule_view, render_diagram, DiagramFormat, DisplayOptions};

const AXIOM_PUML: &str = include_str!("golden/axiom_rule.puml");
const AXIOM_DOT: &str = include_str!("golden/axiom_rule.dot");

fn render(format: DiagramFormat) -> String {
    let tgg = fixture::company_to_it();
    let view = build_rule_view(tgg.rule("CompanyToITRule").unwrap(), &DisplayOptions::default()).unwrap();
    render_diagram(&view, format)
}

#[test]
fn axiom_rule_diagram_matches_golden() {
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden");
        std::fs::write(format!("{dir}/axiom_rule.puml"), render(DiagramFormat::Plantuml)).unwrap();
        std::fs::write(format!("{dir}/axiom_rule.dot"), render(DiagramFormat::Dot)).unwrap();
        return;
    }
    assert_eq!(render(DiagramFormat::Plantuml), AXIOM_PUML);
    assert_eq!(render(DiagramFormat::Dot), AXIOM_DOT);
}

#[test]
fn axiom_golden_shape() {
    let objects = AXIOM_PUML.lines().filter(|l| l.starts_with("object ")).count();
    assert_eq!(objects, 3);
    assert!(AXIOM_PUML.lines().filter(|l| l.starts_with("object ")).all(|l| l.ends_with(";line:2E7D32;line.bold")));
    let links: Vec<&str> = AXIOM_PUML.lines().filter(|l| l.contains(" -[")).collect();
    assert_eq!(links.len(), 2);
    assert!(links.iter().any(|l| l.contains("-[#2E7D32]->") && l.ends_with(": ceo")));
    assert!(links.iter().any(|l| l.contains("-[#2E7D32,dashed]-") && l.ends_with(": CompanyToIT")));
}
