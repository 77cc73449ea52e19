// SPDX-License-Identifier: Apache-2.0

//! Package dependency DAG with deterministic orderings.
//!
//! Every ordering tie is broken lexicographically by package name so that
//! identical inputs always give identical plans.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::manifest::PackageManifest;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DepGraph {
    nodes: BTreeSet<String>,
    /// (dependency, dependent)
    edges: BTreeSet<(String, String)>,
    deps: BTreeMap<String, BTreeSet<String>>,
    dependents: BTreeMap<String, BTreeSet<String>>,
}

impl DepGraph {
    fn from_parts(
        nodes: BTreeSet<String>,
        edges: BTreeSet<(String, String)>,
    ) -> Result<Self> {
        let mut deps: BTreeMap<String, BTreeSet<String>> =
            nodes.iter().map(|n| (n.clone(), BTreeSet::new())).collect();
        let mut dependents = deps.clone();
        for (dep, dependent) in &edges {
            deps.get_mut(dependent)
                .expect("edge endpoint is a node")
                .insert(dep.clone());
            dependents
                .get_mut(dep)
                .expect("edge endpoint is a node")
                .insert(dependent.clone());
        }
        let g = DepGraph {
            nodes,
            edges,
            deps,
            dependents,
        };
        if let Some(cycle) = g.find_cycle() {
            return Err(Error::Cycle(cycle));
        }
        Ok(g)
    }

    /// Build from raw (dependency, dependent) pairs. Every endpoint must be in
    /// `nodes`.
    pub fn from_edges<I, S>(nodes: I, edges: &[(S, S)]) -> Result<Self>
    where
        I: IntoIterator,
        I::Item: Into<String>,
        S: AsRef<str>,
    {
        let nodes: BTreeSet<String> = nodes.into_iter().map(Into::into).collect();
        let mut set = BTreeSet::new();
        for (dep, dependent) in edges {
            let (dep, dependent) = (dep.as_ref(), dependent.as_ref());
            if !nodes.contains(dependent) {
                return Err(Error::UnknownPackage(dependent.to_string()));
            }
            if !nodes.contains(dep) {
                return Err(Error::MissingDep {
                    package: dependent.to_string(),
                    missing: dep.to_string(),
                });
            }
            set.insert((dep.to_string(), dependent.to_string()));
        }
        Self::from_parts(nodes, set)
    }

    pub fn nodes(&self) -> &BTreeSet<String> {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeSet<(String, String)> {
        &self.edges
    }

    pub fn contains(&self, name: &str) -> bool {
        self.nodes.contains(name)
    }

    /// Direct dependencies of `name`.
    pub fn dependencies(&self, name: &str) -> impl Iterator<Item = &str> {
        self.deps.get(name).into_iter().flatten().map(String::as_str)
    }

    /// Direct dependents of `name`.
    pub fn dependents(&self, name: &str) -> impl Iterator<Item = &str> {
        self.dependents
            .get(name)
            .into_iter()
            .flatten()
            .map(String::as_str)
    }

    // DFS along dependency edges; returns the first cycle found in
    // canonical rotation (smallest name first).
    fn find_cycle(&self) -> Option<Vec<String>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            White,
            Grey,
            Black,
        }
        fn visit<'a>(
            g: &'a DepGraph,
            node: &'a str,
            marks: &mut BTreeMap<&'a str, Mark>,
            stack: &mut Vec<&'a str>,
        ) -> Option<Vec<String>> {
            marks.insert(node, Mark::Grey);
            stack.push(node);
            for dep in g.dependencies(node) {
                match marks[dep] {
                    Mark::Grey => {
                        let start = stack.iter().position(|n| *n == dep).expect("on stack");
                        return Some(stack[start..].iter().map(|s| s.to_string()).collect());
                    }
                    Mark::White => {
                        if let Some(c) = visit(g, dep, marks, stack) {
                            return Some(c);
                        }
                    }
                    Mark::Black => {}
                }
            }
            stack.pop();
            marks.insert(node, Mark::Black);
            None
        }

        let mut marks: BTreeMap<&str, Mark> =
            self.nodes.iter().map(|n| (n.as_str(), Mark::White)).collect();
        for node in &self.nodes {
            if marks[node.as_str()] == Mark::White {
                let mut stack = Vec::new();
                if let Some(cycle) = visit(self, node, &mut marks, &mut stack) {
                    return Some(canonical_rotation(cycle));
                }
            }
        }
        None
    }

    /// The subgraph induced by `keep`.
    pub fn restrict(&self, keep: &BTreeSet<String>) -> DepGraph {
        let nodes: BTreeSet<String> = self.nodes.intersection(keep).cloned().collect();
        let edges = self
            .edges
            .iter()
            .filter(|(a, b)| nodes.contains(a) && nodes.contains(b))
            .cloned()
            .collect();
        Self::from_parts(nodes, edges).expect("a subgraph of a DAG is acyclic")
    }

    /// `roots` plus everything they transitively depend on.
    pub fn with_dependencies(&self, roots: &BTreeSet<String>) -> Result<BTreeSet<String>> {
        self.closure(roots, |n| self.dependencies(n).collect())
    }

    fn closure<'a>(
        &'a self,
        roots: &BTreeSet<String>,
        next: impl Fn(&str) -> Vec<&'a str>,
    ) -> Result<BTreeSet<String>> {
        let mut out = BTreeSet::new();
        let mut work: Vec<String> = Vec::new();
        for r in roots {
            if !self.nodes.contains(r) {
                return Err(Error::UnknownPackage(r.clone()));
            }
            work.push(r.clone());
        }
        while let Some(n) = work.pop() {
            if out.insert(n.clone()) {
                work.extend(next(&n).into_iter().map(str::to_string));
            }
        }
        Ok(out)
    }

    /// DOT rendering with sorted nodes and edges.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph packages {\n");
        for n in &self.nodes {
            let _ = writeln!(s, "  \"{n}\";");
        }
        for (from, to) in &self.edges {
            let _ = writeln!(s, "  \"{from}\" -> \"{to}\";");
        }
        s.push_str("}\n");
        s
    }
}

fn canonical_rotation(mut cycle: Vec<String>) -> Vec<String> {
    if let Some(min) = cycle
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.cmp(b.1))
        .map(|(i, _)| i)
    {
        cycle.rotate_left(min);
    }
    cycle
}

/// One node per manifest and one edge per declared dependency.
pub fn build_graph(manifests: &[PackageManifest]) -> Result<DepGraph> {
    let nodes: BTreeSet<String> = manifests.iter().map(|m| m.name.clone()).collect();
    let mut sorted: Vec<&PackageManifest> = manifests.iter().collect();
    sorted.sort_by(|a, b| a.name.cmp(&b.name));
    let mut edges = BTreeSet::new();
    for m in sorted {
        for d in &m.depends {
            if !nodes.contains(d) {
                return Err(Error::MissingDep {
                    package: m.name.clone(),
                    missing: d.clone(),
                });
            }
            edges.insert((d.clone(), m.name.clone()));
        }
    }
    DepGraph::from_parts(nodes, edges)
}

/// Kahn's algorithm, always taking the smallest ready name.
pub fn topo_order(g: &DepGraph) -> Vec<String> {
    let mut remaining: BTreeMap<&str, usize> = g
        .nodes
        .iter()
        .map(|n| (n.as_str(), g.deps[n].len()))
        .collect();
    let mut ready: BTreeSet<&str> = remaining
        .iter()
        .filter(|(_, d)| **d == 0)
        .map(|(n, _)| *n)
        .collect();
    let mut order = Vec::with_capacity(g.nodes.len());
    while let Some(n) = ready.pop_first() {
        order.push(n.to_string());
        for dependent in g.dependents(n) {
            let count = remaining.get_mut(dependent).expect("node");
            *count -= 1;
            if *count == 0 {
                ready.insert(dependent);
            }
        }
    }
    order
}

/// Wave `k` holds the nodes whose longest dependency chain has length `k`.
pub fn schedule_waves(g: &DepGraph) -> Vec<BTreeSet<String>> {
    let mut level: BTreeMap<&str, usize> = BTreeMap::new();
    for n in topo_order(g) {
        let l = g
            .dependencies(&n)
            .map(|d| level[d] + 1)
            .max()
            .unwrap_or(0);
        let key = g.nodes.get(&n).expect("node").as_str();
        level.insert(key, l);
    }
    let mut waves: Vec<BTreeSet<String>> = Vec::new();
    for (n, l) in level {
        if waves.len() <= l {
            waves.resize_with(l + 1, BTreeSet::new);
        }
        waves[l].insert(n.to_string());
    }
    waves
}

/// `changed` plus every transitive dependent.
pub fn dirty_set(g: &DepGraph, changed: &BTreeSet<String>) -> Result<BTreeSet<String>> {
    for c in changed {
        if !g.contains(c) {
            return Err(Error::MissingDep {
                package: "<changed set>".to_string(),
                missing: c.clone(),
            });
        }
    }
    g.closure(changed, |n| g.dependents(n).collect())
}
