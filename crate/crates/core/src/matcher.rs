//! Pattern matching of operational rules in a host triple graph.
//!
//! Matches are found by backtracking over the context nodes of a rule,
//! most-constrained first. Candidates are pre-filtered by type, domain and
//! marking; edges and corr links are matched from the endpoint images.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::hash::Hasher;

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};

use crate::graph::{CorrLink, Domain, Edge, TripleGraph, TripleMetamodel, UpperBound};
use crate::rules::{OperationKind, OperationalRule, RuleCorr, RuleEdge, RuleNode};

/// An occurrence of a rule's context pattern in a host triple graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Match {
    pub match_id: String,
    pub rule_name: String,
    pub kind: OperationKind,
    /// Rule element id to host element id, over the whole context pattern.
    pub mapping: BTreeMap<String, String>,
}

impl Match {
    pub fn new(rule_name: impl Into<String>, kind: OperationKind, mapping: BTreeMap<String, String>) -> Self {
        let rule_name = rule_name.into();
        Match { match_id: match_id(&rule_name, kind, &mapping), rule_name, kind, mapping }
    }

    /// Host ids in canonical rule-element order.
    pub fn host_ids(&self) -> impl Iterator<Item = &str> {
        self.mapping.values().map(String::as_str)
    }
}

/// `ruleName#` followed by the 64-bit FNV-1a digest of the canonical mapping.
pub fn match_id(rule_name: &str, kind: OperationKind, mapping: &BTreeMap<String, String>) -> String {
    let mut canonical = format!("{rule_name}|{kind}|");
    for (i, (rule_el, host_el)) in mapping.iter().enumerate() {
        if i > 0 {
            canonical.push(';');
        }
        canonical.push_str(rule_el);
        canonical.push('=');
        canonical.push_str(host_el);
    }
    let mut hasher = FnvHasher::default();
    hasher.write(canonical.as_bytes());
    format!("{rule_name}#{:016x}", hasher.finish())
}

/// Elements of the source (FWD) or target (BWD) model that have been
/// translated so far.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MarkingState {
    pub marked_source: BTreeSet<String>,
    pub marked_target: BTreeSet<String>,
}

impl MarkingState {
    pub fn is_marked(&self, id: &str) -> bool {
        self.marked_source.contains(id) || self.marked_target.contains(id)
    }

    pub fn set(&self, domain: Domain) -> Option<&BTreeSet<String>> {
        match domain {
            Domain::Source => Some(&self.marked_source),
            Domain::Target => Some(&self.marked_target),
            Domain::Correspondence => None,
        }
    }

    /// Marks `id`; returns false if it already was.
    pub fn mark(&mut self, id: &str, domain: Domain) -> bool {
        match domain {
            Domain::Source => self.marked_source.insert(id.to_string()),
            Domain::Target => self.marked_target.insert(id.to_string()),
            Domain::Correspondence => false,
        }
    }

    pub fn len(&self) -> usize {
        self.marked_source.len() + self.marked_target.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchOptions {
    /// Distinct rule elements must map to distinct host elements.
    pub injective: bool,
}

impl Default for MatchOptions {
    fn default() -> Self {
        MatchOptions { injective: true }
    }
}

/// Adjacency lookups over a host graph, shared between rules.
pub struct HostIndex<'h> {
    edges_between: HashMap<(&'h str, &'h str), Vec<&'h Edge>>,
    corrs_between: HashMap<(&'h str, &'h str), Vec<&'h CorrLink>>,
    out_degree: HashMap<(&'h str, &'h str), usize>,
}

impl<'h> HostIndex<'h> {
    pub fn new(host: &'h TripleGraph) -> Self {
        let mut edges_between: HashMap<_, Vec<_>> = HashMap::new();
        let mut out_degree: HashMap<_, usize> = HashMap::new();
        for e in host.edges() {
            edges_between.entry((e.source.as_str(), e.target.as_str())).or_default().push(e);
            *out_degree.entry((e.source.as_str(), e.edge_type.as_str())).or_default() += 1;
        }
        let mut corrs_between: HashMap<_, Vec<_>> = HashMap::new();
        for c in host.corrs() {
            corrs_between.entry((c.source.as_str(), c.target.as_str())).or_default().push(c);
        }
        HostIndex { edges_between, corrs_between, out_degree }
    }
}

struct Search<'a> {
    op: &'a OperationalRule,
    mm: &'a TripleMetamodel,
    host: &'a TripleGraph,
    index: &'a HostIndex<'a>,
    marking: &'a MarkingState,
    opts: MatchOptions,
    order: Vec<&'a RuleNode>,
    candidates: Vec<Vec<&'a str>>,
    edges: Vec<&'a RuleEdge>,
    corrs: Vec<&'a RuleCorr>,
}

impl<'a> Search<'a> {
    fn new(
        op: &'a OperationalRule,
        mm: &'a TripleMetamodel,
        host: &'a TripleGraph,
        index: &'a HostIndex<'a>,
        marking: &'a MarkingState,
        opts: MatchOptions,
    ) -> Self {
        let ctx_nodes: Vec<&RuleNode> = op.rule.nodes.iter().filter(|n| op.context.contains(&n.id)).collect();
        let edges: Vec<&RuleEdge> = op.rule.edges.iter().filter(|e| op.context.contains(&e.id)).collect();
        let corrs: Vec<&RuleCorr> = op.rule.corrs.iter().filter(|c| op.context.contains(&c.id)).collect();

        let mut search = Search {
            op,
            mm,
            host,
            index,
            marking,
            opts,
            order: Vec::new(),
            candidates: Vec::new(),
            edges,
            corrs,
        };
        let mut pool: Vec<(&RuleNode, Vec<&str>)> = ctx_nodes
            .into_iter()
            .map(|n| {
                let cands = host.nodes().filter(|h| search.node_ok(n, h.id.as_str())).map(|h| h.id.as_str()).collect();
                (n, cands)
            })
            .collect();

        // most-constrained-first: prefer nodes linked to already ordered ones
        let mut chosen: HashSet<&str> = HashSet::new();
        while !pool.is_empty() {
            let links = |n: &RuleNode| {
                search
                    .link_ends()
                    .filter(|(s, t)| (*s == n.id && chosen.contains(t)) || (*t == n.id && chosen.contains(s)))
                    .count()
            };
            let best = (0..pool.len())
                .min_by(|&a, &b| {
                    let (na, ca) = &pool[a];
                    let (nb, cb) = &pool[b];
                    links(nb)
                        .cmp(&links(na))
                        .then(ca.len().cmp(&cb.len()))
                        .then(na.id.cmp(&nb.id))
                })
                .unwrap();
            let (n, cands) = pool.swap_remove(best);
            chosen.insert(&n.id);
            search.order.push(n);
            search.candidates.push(cands);
        }
        search
    }

    fn link_ends(&self) -> impl Iterator<Item = (&'a str, &'a str)> + '_ {
        self.edges
            .iter()
            .map(|e| (e.source.as_str(), e.target.as_str()))
            .chain(self.corrs.iter().map(|c| (c.source.as_str(), c.target.as_str())))
    }

    fn marking_ok(&self, rule_id: &str, domain: Domain, host_id: &str) -> bool {
        match self.op.required_marking(rule_id, domain) {
            None => true,
            Some(required) => self.marking.set(domain).is_some_and(|s| s.contains(host_id) == required),
        }
    }

    fn node_ok(&self, rule_node: &RuleNode, host_id: &str) -> bool {
        let Some(h) = self.host.node(host_id) else { return false };
        h.domain == rule_node.domain
            && self.mm.domain(h.domain).is_some_and(|m| m.conforms(&h.node_type, &rule_node.node_type))
            && self.marking_ok(&rule_node.id, rule_node.domain, host_id)
    }

    fn edge_candidates(&self, e: &RuleEdge, src: &str, tgt: &str) -> Vec<&'a Edge> {
        self.index
            .edges_between
            .get(&(src, tgt))
            .into_iter()
            .flatten()
            .copied()
            .filter(|h| h.edge_type == e.edge_type && h.domain == e.domain && self.marking_ok(&e.id, e.domain, &h.id))
            .collect()
    }

    fn corr_candidates(&self, c: &RuleCorr, src: &str, tgt: &str) -> Vec<&'a CorrLink> {
        self.index
            .corrs_between
            .get(&(src, tgt))
            .into_iter()
            .flatten()
            .copied()
            .filter(|h| h.corr_type == c.corr_type)
            .collect()
    }

    /// Creating the rule's green edges must not exceed any upper bound of one.
    fn feasible(&self, mapping: &BTreeMap<String, String>) -> bool {
        let mut created: HashMap<(&str, bool, &str), usize> = HashMap::new();
        for e in &self.op.rule.edges {
            if !self.op.to_create.contains(&e.id) {
                continue;
            }
            let bounded = self
                .mm
                .domain(e.domain)
                .and_then(|m| m.edge_type(&e.edge_type))
                .is_some_and(|et| et.upper_bound == UpperBound::One);
            if !bounded {
                continue;
            }
            let key = match mapping.get(&e.source) {
                Some(h) => (h.as_str(), true, e.edge_type.as_str()),
                None => (e.source.as_str(), false, e.edge_type.as_str()),
            };
            *created.entry(key).or_default() += 1;
        }
        created.into_iter().all(|((node, in_host, ty), n)| {
            let existing = if in_host { self.index.out_degree.get(&(node, ty)).copied().unwrap_or(0) } else { 0 };
            existing + n <= 1
        })
    }

    fn run(&self) -> Vec<Match> {
        let mut out = Vec::new();
        let mut assignment: HashMap<&str, &str> = HashMap::new();
        let mut used: HashSet<&str> = HashSet::new();
        self.extend(0, &mut assignment, &mut used, &mut out);
        out.sort_by(|a, b| a.host_ids().cmp(b.host_ids()));
        out
    }

    fn extend(
        &self,
        depth: usize,
        assignment: &mut HashMap<&'a str, &'a str>,
        used: &mut HashSet<&'a str>,
        out: &mut Vec<Match>,
    ) {
        if depth == self.order.len() {
            self.complete_links(assignment, out);
            return;
        }
        let rule_node = self.order[depth];
        for &cand in &self.candidates[depth] {
            if self.opts.injective && used.contains(cand) {
                continue;
            }
            assignment.insert(&rule_node.id, cand);
            if self.links_possible(&rule_node.id, assignment) {
                used.insert(cand);
                self.extend(depth + 1, assignment, used, out);
                used.remove(cand);
            }
            assignment.remove(rule_node.id.as_str());
        }
    }

    fn links_possible(&self, just_assigned: &str, assignment: &HashMap<&str, &str>) -> bool {
        let edges_ok = self.edges.iter().all(|e| {
            if e.source != just_assigned && e.target != just_assigned {
                return true;
            }
            match (assignment.get(e.source.as_str()), assignment.get(e.target.as_str())) {
                (Some(s), Some(t)) => !self.edge_candidates(e, s, t).is_empty(),
                _ => true,
            }
        });
        edges_ok
            && self.corrs.iter().all(|c| {
                if c.source != just_assigned && c.target != just_assigned {
                    return true;
                }
                match (assignment.get(c.source.as_str()), assignment.get(c.target.as_str())) {
                    (Some(s), Some(t)) => !self.corr_candidates(c, s, t).is_empty(),
                    _ => true,
                }
            })
    }

    fn complete_links(&self, assignment: &HashMap<&str, &str>, out: &mut Vec<Match>) {
        let mut slots: Vec<(&str, Vec<&str>)> = Vec::new();
        for e in &self.edges {
            let cands = self.edge_candidates(e, assignment[e.source.as_str()], assignment[e.target.as_str()]);
            slots.push((&e.id, cands.into_iter().map(|h| h.id.as_str()).collect()));
        }
        for c in &self.corrs {
            let cands = self.corr_candidates(c, assignment[c.source.as_str()], assignment[c.target.as_str()]);
            slots.push((&c.id, cands.into_iter().map(|h| h.id.as_str()).collect()));
        }

        let mut mapping: BTreeMap<String, String> =
            assignment.iter().map(|(r, h)| (r.to_string(), h.to_string())).collect();
        let mut used: HashSet<&str> = HashSet::new();
        self.product(&slots, 0, &mut mapping, &mut used, out);
    }

    fn product(
        &self,
        slots: &[(&str, Vec<&'a str>)],
        i: usize,
        mapping: &mut BTreeMap<String, String>,
        used: &mut HashSet<&'a str>,
        out: &mut Vec<Match>,
    ) {
        if i == slots.len() {
            if self.feasible(mapping) {
                out.push(Match::new(self.op.name(), self.op.kind, mapping.clone()));
            }
            return;
        }
        let (rule_id, cands) = &slots[i];
        for &cand in cands {
            if self.opts.injective && used.contains(cand) {
                continue;
            }
            used.insert(cand);
            mapping.insert(rule_id.to_string(), cand.to_string());
            self.product(slots, i + 1, mapping, used, out);
            mapping.remove(*rule_id);
            used.remove(cand);
        }
    }

    /// Checks one given mapping against every match condition.
    fn accepts(&self, mapping: &BTreeMap<String, String>) -> bool {
        if mapping.len() != self.op.context.len() || !mapping.keys().all(|k| self.op.context.contains(k)) {
            return false;
        }
        for (rule_node, _) in self.order.iter().zip(&self.candidates) {
            if !self.node_ok(rule_node, &mapping[&rule_node.id]) {
                return false;
            }
        }
        if self.opts.injective {
            let node_images: HashSet<&String> = self.order.iter().map(|n| &mapping[&n.id]).collect();
            let link_images: HashSet<&String> =
                self.edges.iter().map(|e| &e.id).chain(self.corrs.iter().map(|c| &c.id)).map(|id| &mapping[id]).collect();
            if node_images.len() != self.order.len() || link_images.len() != self.edges.len() + self.corrs.len() {
                return false;
            }
        }
        let edges_ok = self.edges.iter().all(|e| {
            let image = &mapping[&e.id];
            self.edge_candidates(e, &mapping[&e.source], &mapping[&e.target]).iter().any(|h| &h.id == image)
        });
        let corrs_ok = self.corrs.iter().all(|c| {
            let image = &mapping[&c.id];
            self.corr_candidates(c, &mapping[&c.source], &mapping[&c.target]).iter().any(|h| &h.id == image)
        });
        edges_ok && corrs_ok && self.feasible(mapping)
    }
}

/// All matches of `op` in `host`, ordered by host ids in canonical
/// rule-element order.
pub fn find_matches(
    op: &OperationalRule,
    mm: &TripleMetamodel,
    host: &TripleGraph,
    marking: &MarkingState,
) -> Vec<Match> {
    let index = HostIndex::new(host);
    find_matches_with(op, mm, host, &index, marking, MatchOptions::default())
}

pub fn find_matches_with(
    op: &OperationalRule,
    mm: &TripleMetamodel,
    host: &TripleGraph,
    index: &HostIndex<'_>,
    marking: &MarkingState,
    opts: MatchOptions,
) -> Vec<Match> {
    Search::new(op, mm, host, index, marking, opts).run()
}

/// Matches of every rule, keyed and ordered by rule name.
pub fn find_all_matches(
    ops: &[OperationalRule],
    mm: &TripleMetamodel,
    host: &TripleGraph,
    marking: &MarkingState,
) -> BTreeMap<String, Vec<Match>> {
    let index = HostIndex::new(host);
    ops.iter()
        .map(|op| {
            (op.name().to_string(), find_matches_with(op, mm, host, &index, marking, MatchOptions::default()))
        })
        .collect()
}

/// Whether `m` would still be returned by [`find_matches`] on this host.
pub fn is_still_valid(
    m: &Match,
    op: &OperationalRule,
    mm: &TripleMetamodel,
    host: &TripleGraph,
    marking: &MarkingState,
) -> bool {
    if m.rule_name != op.name() || m.kind != op.kind || m.match_id != match_id(&m.rule_name, m.kind, &m.mapping) {
        return false;
    }
    let index = HostIndex::new(host);
    Search::new(op, mm, host, &index, marking, MatchOptions::default()).accepts(&m.mapping)
}
