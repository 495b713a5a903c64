// Independent reference implementations and generators for integration
// tests. Nothing here calls into the matcher or the operationalization.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use tgg_core::graph::{CorrLink, Edge, Metamodel, Node, UpperBound};
use tgg_core::rules::Annotation;
use tgg_core::{Domain, MarkingState, OperationKind, Session, TggRule, TripleGraph, TripleMetamodel};

pub type Mapping = BTreeMap<String, String>;

/// `a` equals `b` or inherits from it, walking the supertype chain.
pub fn is_subtype(mm: &Metamodel, a: &str, b: &str) -> bool {
    let mut current = Some(a.to_string());
    let mut steps = 0;
    while let Some(name) = current {
        if name == b {
            return true;
        }
        steps += 1;
        if steps > 64 {
            return false;
        }
        current = mm.node_type(&name).and_then(|t| t.supertype.clone());
    }
    false
}

fn marked_domain(kind: OperationKind) -> Option<Domain> {
    match kind {
        OperationKind::Gen => None,
        OperationKind::Fwd => Some(Domain::Source),
        OperationKind::Bwd => Some(Domain::Target),
    }
}

/// Whether a rule element is part of the pattern searched for.
fn in_context(kind: OperationKind, domain: Domain, a: Annotation) -> bool {
    a == Annotation::Black || marked_domain(kind) == Some(domain)
}

/// Marking condition for a host element matched by a rule element.
fn marking_allows(kind: OperationKind, domain: Domain, a: Annotation, host_id: &str, marking: &MarkingState) -> bool {
    if marked_domain(kind) != Some(domain) {
        return true;
    }
    let marked = match domain {
        Domain::Source => marking.marked_source.contains(host_id),
        Domain::Target => marking.marked_target.contains(host_id),
        Domain::Correspondence => false,
    };
    match a {
        Annotation::Black => marked,
        Annotation::Green => !marked,
    }
}

fn cartesian(lists: &[Vec<String>]) -> Vec<Vec<String>> {
    let mut acc: Vec<Vec<String>> = vec![Vec::new()];
    for list in lists {
        let mut next = Vec::new();
        for prefix in &acc {
            for item in list {
                let mut v = prefix.clone();
                v.push(item.clone());
                next.push(v);
            }
        }
        acc = next;
    }
    acc
}

fn all_distinct(items: &[String]) -> bool {
    items.iter().collect::<BTreeSet<_>>().len() == items.len()
}

/// Every injective, type-conformant occurrence of the operationalized
/// pattern of `rule` in `host`, found by exhaustive enumeration.
pub fn brute_force_matches(
    rule: &TggRule,
    kind: OperationKind,
    mm: &TripleMetamodel,
    host: &TripleGraph,
    marking: &MarkingState,
) -> BTreeSet<Mapping> {
    let nodes: Vec<_> = rule.nodes.iter().filter(|n| in_context(kind, n.domain, n.annotation)).collect();
    let edges: Vec<_> = rule.edges.iter().filter(|e| in_context(kind, e.domain, e.annotation)).collect();
    let corrs: Vec<_> =
        rule.corrs.iter().filter(|c| in_context(kind, Domain::Correspondence, c.annotation)).collect();

    let candidates: Vec<Vec<String>> = nodes
        .iter()
        .map(|rn| {
            host.nodes()
                .filter(|h| {
                    h.domain == rn.domain
                        && is_subtype(mm.domain(h.domain).unwrap(), &h.node_type, &rn.node_type)
                        && marking_allows(kind, rn.domain, rn.annotation, &h.id, marking)
                })
                .map(|h| h.id.clone())
                .collect()
        })
        .collect();

    let mut found = BTreeSet::new();
    for images in cartesian(&candidates) {
        if !all_distinct(&images) {
            continue;
        }
        let node_map: Mapping = nodes.iter().zip(&images).map(|(n, h)| (n.id.clone(), h.clone())).collect();

        let mut link_candidates: Vec<Vec<String>> = Vec::new();
        for e in &edges {
            link_candidates.push(
                host.edges()
                    .filter(|h| {
                        h.edge_type == e.edge_type
                            && h.domain == e.domain
                            && h.source == node_map[&e.source]
                            && h.target == node_map[&e.target]
                            && marking_allows(kind, e.domain, e.annotation, &h.id, marking)
                    })
                    .map(|h| h.id.clone())
                    .collect(),
            );
        }
        for c in &corrs {
            link_candidates.push(
                host.corrs()
                    .filter(|h| h.corr_type == c.corr_type && h.source == node_map[&c.source] && h.target == node_map[&c.target])
                    .map(|h| h.id.clone())
                    .collect(),
            );
        }
        let link_ids: Vec<&String> = edges.iter().map(|e| &e.id).chain(corrs.iter().map(|c| &c.id)).collect();
        for links in cartesian(&link_candidates) {
            if !all_distinct(&links) {
                continue;
            }
            let mut mapping = node_map.clone();
            mapping.extend(link_ids.iter().map(|id| id.to_string()).zip(links));
            if bounded_creation_ok(rule, kind, mm, host, &mapping) {
                found.insert(mapping);
            }
        }
    }
    found
}

/// Applying the match must not push a single-valued edge type past one
/// outgoing edge per node.
fn bounded_creation_ok(rule: &TggRule, kind: OperationKind, mm: &TripleMetamodel, host: &TripleGraph, m: &Mapping) -> bool {
    let mut per_source: BTreeMap<(String, String), usize> = BTreeMap::new();
    for e in &rule.edges {
        if in_context(kind, e.domain, e.annotation) {
            continue;
        }
        let et = mm.domain(e.domain).unwrap().edge_type(&e.edge_type).unwrap();
        if et.upper_bound != UpperBound::One {
            continue;
        }
        let existing = match m.get(&e.source) {
            Some(h) => host.edges().filter(|x| &x.source == h && x.edge_type == e.edge_type).count(),
            None => 0,
        };
        let key = (m.get(&e.source).cloned().unwrap_or_else(|| format!("new:{}", e.source)), e.edge_type.clone());
        let n = per_source.entry(key).or_insert(existing);
        *n += 1;
        if *n > 1 {
            return false;
        }
    }
    true
}

fn concrete_types(mm: &Metamodel) -> Vec<String> {
    mm.node_types().filter(|t| !t.is_abstract).map(|t| t.name.clone()).collect()
}

fn fresh(host: &TripleGraph, prefix: &str, counter: &mut usize) -> String {
    loop {
        *counter += 1;
        let id = format!("{prefix}{counter}");
        if !host.contains(&id) {
            return id;
        }
    }
}

/// Adds random, type-correct nodes, edges and correspondence links until
/// the host has `max_nodes` nodes. Upper bounds are not respected.
pub fn grow_randomly<R: Rng>(rng: &mut R, mm: &TripleMetamodel, host: &mut TripleGraph, max_nodes: usize) {
    let mut counter = 0;
    let target_nodes = rng.gen_range(host.nodes().count()..=max_nodes.max(host.nodes().count()));
    while host.nodes().count() < target_nodes {
        let domain = if rng.gen_bool(0.5) { Domain::Source } else { Domain::Target };
        let types = concrete_types(mm.domain(domain).unwrap());
        let ty = types.choose(rng).unwrap().clone();
        let id = fresh(host, "n", &mut counter);
        host.add_node(Node { id: id.clone(), node_type: ty, domain, label: id }).unwrap();
    }
    let extra_edges = rng.gen_range(0..=12);
    for _ in 0..extra_edges {
        let domain = if rng.gen_bool(0.5) { Domain::Source } else { Domain::Target };
        let m = mm.domain(domain).unwrap();
        let edge_types: Vec<_> = m.edge_types().collect();
        let et = edge_types.choose(rng).unwrap();
        let sources: Vec<String> = host
            .nodes()
            .filter(|n| n.domain == domain && is_subtype(m, &n.node_type, &et.source))
            .map(|n| n.id.clone())
            .collect();
        let targets: Vec<String> = host
            .nodes()
            .filter(|n| n.domain == domain && is_subtype(m, &n.node_type, &et.target))
            .map(|n| n.id.clone())
            .collect();
        if let (Some(s), Some(t)) = (sources.choose(rng), targets.choose(rng)) {
            let id = fresh(host, "x", &mut counter);
            host.add_edge(Edge { id, edge_type: et.name.clone(), domain, source: s.clone(), target: t.clone() }).unwrap();
        }
    }
    let extra_corrs = rng.gen_range(0..=4);
    let corr_types: Vec<_> = mm.corr_types().collect();
    for _ in 0..extra_corrs {
        let ct = corr_types.choose(rng).unwrap();
        let sources: Vec<String> = host
            .nodes()
            .filter(|n| n.domain == Domain::Source && is_subtype(mm.source(), &n.node_type, &ct.source))
            .map(|n| n.id.clone())
            .collect();
        let targets: Vec<String> = host
            .nodes()
            .filter(|n| n.domain == Domain::Target && is_subtype(mm.target(), &n.node_type, &ct.target))
            .map(|n| n.id.clone())
            .collect();
        if let (Some(s), Some(t)) = (sources.choose(rng), targets.choose(rng)) {
            let id = fresh(host, "c", &mut counter);
            host.add_corr(CorrLink { id, corr_type: ct.name.clone(), source: s.clone(), target: t.clone() }).unwrap();
        }
    }
}

/// A random subset of the source and target elements.
pub fn random_marking<R: Rng>(rng: &mut R, host: &TripleGraph) -> MarkingState {
    let mut marking = MarkingState::default();
    let p = rng.gen_range(0.0..=1.0);
    for id in host.element_ids_in(Domain::Source) {
        if rng.gen_bool(p) {
            marking.marked_source.insert(id);
        }
    }
    for id in host.element_ids_in(Domain::Target) {
        if rng.gen_bool(p) {
            marking.marked_target.insert(id);
        }
    }
    marking
}

/// A fixture host with at most `max_nodes` nodes: either a short generated
/// model with random additions, or random elements only.
pub fn random_fixture_host<R: Rng>(rng: &mut R, max_nodes: usize) -> TripleGraph {
    let tgg = tgg_core::fixture::company_to_it();
    let mut host = if rng.gen_bool(0.6) {
        let (mut s, _) = Session::new(tgg.clone(), OperationKind::Gen, TripleGraph::new(), rng.gen()).unwrap();
        let steps = rng.gen_range(0..=3);
        s.run_background(steps).unwrap();
        s.triple().clone()
    } else {
        TripleGraph::new()
    };
    if host.nodes().count() < max_nodes {
        grow_randomly(rng, tgg.metamodel(), &mut host, max_nodes);
    }
    host
}

pub fn count_type(triple: &TripleGraph, ty: &str) -> usize {
    triple.nodes().filter(|n| n.node_type == ty).count()
}

/// Number of correspondence links touching node `id`.
pub fn corr_degree(triple: &TripleGraph, id: &str) -> usize {
    triple.corrs().filter(|c| c.source == id || c.target == id).count()
}

/// Drops offending elements until the host conforms.
pub fn make_conformant(host: &mut TripleGraph, mm: &TripleMetamodel) {
    while let Some(v) = tgg_core::check_conformance(host, mm).into_iter().next() {
        let victim = v.elements.iter().rev().find(|id| host.contains(id)).cloned().expect("violation names an element");
        host.remove(&victim);
    }
}
