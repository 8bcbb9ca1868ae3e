//! Labeled multigraphs on coset spaces.
//!
//! The central type is [`LabeledMultigraph`]: a finite multigraph with
//! oriented, generator-labeled edges. Graphs built from a coset table have
//! exactly one outgoing edge per (vertex, label) pair; loops and parallel
//! edges are kept, because expansion and spectral quantities depend on
//! them. Edge ids are stable and canonical: vertex-major, label-minor for
//! coset graphs, construction order otherwise.

mod cheeger;
mod collapse;
mod spectral;
mod squaring;

pub use cheeger::{
    cheeger_auto, cheeger_exact, cheeger_minimizers, cheeger_small_cut, CheegerResult,
};
pub use collapse::{
    collapse_bound_checks, collapse_forest, coset_projection, CollapseBounds, CollapseResult,
};
pub use spectral::{
    audit_elementary_bounds, lambda1, lambda1_dense, lambda1_lanczos, rayleigh_quotient,
    BoundCheck, SpectralGap, DEFAULT_SPECTRAL_TOL, DENSE_LIMIT,
};
pub use squaring::{square_expansion_check, square_generators, SquaredGraph};

use crate::coset::CosetTable;
use crate::error::{Error, Result};
use std::collections::VecDeque;

/// Default ceiling on vertex count for the exhaustive cut search.
pub const DEFAULT_CHEEGER_CEILING: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
    /// Generator label, 1-based; 0 for unlabeled edges.
    pub label: usize,
}

/// A traversal step along an oriented edge, possibly against orientation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Step {
    pub edge: usize,
    pub forward: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledMultigraph {
    pub n_vertices: usize,
    /// Number of distinct generator labels (0 allowed for unlabeled graphs).
    pub n_labels: usize,
    pub edges: Vec<Edge>,
}

impl LabeledMultigraph {
    pub fn new(n_vertices: usize, n_labels: usize, edges: Vec<Edge>) -> Result<LabeledMultigraph> {
        for e in &edges {
            if e.tail >= n_vertices || e.head >= n_vertices {
                return Err(Error::InvalidInput("edge endpoint out of range".into()));
            }
        }
        Ok(LabeledMultigraph { n_vertices, n_labels, edges })
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Out-degree plus in-degree, loops counted twice; for a coset graph
    /// this is twice the number of generators.
    pub fn degree(&self, v: usize) -> usize {
        self.edges
            .iter()
            .map(|e| (e.tail == v) as usize + (e.head == v) as usize)
            .sum()
    }

    /// Degree ignoring loops: what a cut across `v` can actually see.
    pub fn nonloop_degree(&self) -> Vec<usize> {
        let mut d = vec![0usize; self.n_vertices];
        for e in &self.edges {
            if e.tail != e.head {
                d[e.tail] += 1;
                d[e.head] += 1;
            }
        }
        d
    }

    /// Undirected incidence: for each vertex, the steps leaving it (their
    /// `forward` flag says how the oriented edge is traversed) paired with
    /// the neighbor reached. Loops contribute both orientations.
    pub fn incidence(&self) -> Vec<Vec<(usize, Step)>> {
        let mut inc: Vec<Vec<(usize, Step)>> = vec![Vec::new(); self.n_vertices];
        for (i, e) in self.edges.iter().enumerate() {
            inc[e.tail].push((e.head, Step { edge: i, forward: true }));
            inc[e.head].push((e.tail, Step { edge: i, forward: false }));
        }
        inc
    }

    /// Aggregated non-loop adjacency multiplicities, for cut updates.
    pub fn adjacency_multiplicity(&self) -> Vec<Vec<(usize, usize)>> {
        let mut maps: Vec<std::collections::BTreeMap<usize, usize>> =
            vec![Default::default(); self.n_vertices];
        for e in &self.edges {
            if e.tail != e.head {
                *maps[e.tail].entry(e.head).or_insert(0) += 1;
                *maps[e.head].entry(e.tail).or_insert(0) += 1;
            }
        }
        maps.into_iter().map(|m| m.into_iter().collect()).collect()
    }

    /// Number of edges with exactly one endpoint in `inside`.
    pub fn boundary_count(&self, inside: &[bool]) -> usize {
        self.edges
            .iter()
            .filter(|e| inside[e.tail] != inside[e.head])
            .count()
    }

    /// Edge ids with exactly one endpoint in `inside`, ascending.
    pub fn boundary_edges(&self, inside: &[bool]) -> Vec<usize> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| inside[e.tail] != inside[e.head])
            .map(|(i, _)| i)
            .collect()
    }

    pub fn is_connected(&self) -> bool {
        if self.n_vertices == 0 {
            return false;
        }
        let inc = self.incidence();
        let mut seen = vec![false; self.n_vertices];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &(u, _) in &inc[v] {
                if !seen[u] {
                    seen[u] = true;
                    count += 1;
                    queue.push_back(u);
                }
            }
        }
        count == self.n_vertices
    }

    /// Shortest path between two vertices using only edges allowed by the
    /// filter, as traversal steps. `None` if unreachable.
    pub fn bfs_path(
        &self,
        from: usize,
        to: usize,
        edge_allowed: impl Fn(usize) -> bool,
    ) -> Option<Vec<Step>> {
        let inc = self.incidence();
        let mut prev: Vec<Option<(usize, Step)>> = vec![None; self.n_vertices];
        let mut seen = vec![false; self.n_vertices];
        seen[from] = true;
        let mut queue = VecDeque::from([from]);
        while let Some(v) = queue.pop_front() {
            if v == to {
                break;
            }
            for &(u, step) in &inc[v] {
                if edge_allowed(step.edge) && !seen[u] {
                    seen[u] = true;
                    prev[u] = Some((v, step));
                    queue.push_back(u);
                }
            }
        }
        if !seen[to] {
            return None;
        }
        let mut steps = Vec::new();
        let mut cur = to;
        while cur != from {
            let (p, s) = prev[cur].unwrap();
            steps.push(s);
            cur = p;
        }
        steps.reverse();
        Some(steps)
    }

    /// Check the coset-graph shape: every (vertex, label) pair has exactly
    /// one outgoing edge and each label acts as a permutation.
    pub fn validate_schreier(&self) -> Result<()> {
        if self.n_labels == 0 {
            return Err(Error::InvalidInput("coset graph needs at least one label".into()));
        }
        let mut out = vec![0usize; self.n_vertices * self.n_labels];
        let mut into = vec![0usize; self.n_vertices * self.n_labels];
        for e in &self.edges {
            if e.label == 0 || e.label > self.n_labels {
                return Err(Error::InvalidInput("edge label out of range".into()));
            }
            out[e.tail * self.n_labels + e.label - 1] += 1;
            into[e.head * self.n_labels + e.label - 1] += 1;
        }
        if out.iter().any(|&c| c != 1) || into.iter().any(|&c| c != 1) {
            return Err(Error::InvalidInput(
                "labels do not act as permutations with one edge per (vertex, label)".into(),
            ));
        }
        Ok(())
    }

    /// GraphViz rendering with generator names as edge labels.
    pub fn to_dot(&self, label_names: &[String]) -> String {
        let mut s = String::from("digraph coset_graph {\n");
        for v in 0..self.n_vertices {
            s.push_str(&format!("  v{v};\n"));
        }
        for e in &self.edges {
            let name = if e.label >= 1 && e.label <= label_names.len() {
                label_names[e.label - 1].clone()
            } else {
                format!("e{}", e.label)
            };
            s.push_str(&format!("  v{} -> v{} [label=\"{}\"];\n", e.tail, e.head, name));
        }
        s.push_str("}\n");
        s
    }

    /// CSV rows `edge,tail,head,label`, one per edge in id order.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("edge,tail,head,label\n");
        for (i, e) in self.edges.iter().enumerate() {
            s.push_str(&format!("{},{},{},{}\n", i, e.tail, e.head, e.label));
        }
        s
    }

    /// Parse the CSV produced by [`to_csv`]. Edge ids must be 0..m in order.
    pub fn from_csv(text: &str) -> Result<LabeledMultigraph> {
        let mut edges = Vec::new();
        let mut n_vertices = 0usize;
        let mut n_labels = 0usize;
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (ln == 0 && line.starts_with("edge")) {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 4 {
                return Err(Error::Parse {
                    line: ln + 1,
                    col: 1,
                    msg: "expected edge,tail,head,label".into(),
                });
            }
            let nums: Vec<usize> = parts
                .iter()
                .map(|p| {
                    p.trim().parse::<usize>().map_err(|_| Error::Parse {
                        line: ln + 1,
                        col: 1,
                        msg: format!("bad number {p:?}"),
                    })
                })
                .collect::<Result<_>>()?;
            if nums[0] != edges.len() {
                return Err(Error::Parse {
                    line: ln + 1,
                    col: 1,
                    msg: "edge ids must be consecutive from 0".into(),
                });
            }
            edges.push(Edge { tail: nums[1], head: nums[2], label: nums[3] });
            n_vertices = n_vertices.max(nums[1] + 1).max(nums[2] + 1);
            n_labels = n_labels.max(nums[3]);
        }
        LabeledMultigraph::new(n_vertices, n_labels, edges)
    }
}

/// The coset graph of a table: one oriented edge per (coset, generator),
/// with id `coset * n_gens + (generator - 1)`.
pub fn schreier_graph(t: &CosetTable) -> LabeledMultigraph {
    let m = t.n_gens();
    let mut edges = Vec::with_capacity(t.n_cosets() * m);
    for c in 0..t.n_cosets() {
        for g in 1..=m {
            edges.push(Edge { tail: c, head: t.apply(c, g as i32), label: g });
        }
    }
    let g = LabeledMultigraph { n_vertices: t.n_cosets(), n_labels: m, edges };
    debug_assert!(g.validate_schreier().is_ok());
    g
}

/// Build the coset-graph of a list of vertex permutations: one generator
/// per permutation, one edge per (vertex, permutation).
pub fn graph_from_permutations(n_vertices: usize, perms: &[Vec<usize>]) -> Result<LabeledMultigraph> {
    let mut edges = Vec::with_capacity(n_vertices * perms.len());
    for v in 0..n_vertices {
        for (pi, p) in perms.iter().enumerate() {
            if p.len() != n_vertices || p[v] >= n_vertices {
                return Err(Error::InvalidInput("permutation has wrong length or range".into()));
            }
            edges.push(Edge { tail: v, head: p[v], label: pi + 1 });
        }
    }
    LabeledMultigraph::new(n_vertices, perms.len(), edges)
}

/// Sides of a cut as a membership mask from a sorted vertex list.
pub fn membership_mask(n_vertices: usize, inside: &[usize]) -> Vec<bool> {
    let mut mask = vec![false; n_vertices];
    for &v in inside {
        mask[v] = true;
    }
    mask
}

/// Connectivity profile of an expansion-attaining set: size of the small
/// side and whether each side induces a connected subgraph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttainingProfile {
    pub min_side: usize,
    pub inside_connected: bool,
    pub outside_connected: bool,
}

pub fn attaining_set_profile(g: &LabeledMultigraph, inside: &[bool]) -> AttainingProfile {
    let size: usize = inside.iter().filter(|&&b| b).count();
    let min_side = size.min(g.n_vertices - size);
    let connected = |want: bool| -> bool {
        let members: Vec<usize> =
            (0..g.n_vertices).filter(|&v| inside[v] == want).collect();
        if members.is_empty() {
            return true;
        }
        let inc = g.incidence();
        let mut seen = vec![false; g.n_vertices];
        seen[members[0]] = true;
        let mut queue = VecDeque::from([members[0]]);
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &(u, _) in &inc[v] {
                if inside[u] == want && !seen[u] {
                    seen[u] = true;
                    count += 1;
                    queue.push_back(u);
                }
            }
        }
        count == members.len()
    };
    AttainingProfile {
        min_side,
        inside_connected: connected(true),
        outside_connected: connected(false),
    }
}
