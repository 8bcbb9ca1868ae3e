//! Collapsing a coset graph along a lifted spanning forest.
//!
//! Given nested subgroups H <= K <= G, the coset graph X(G/H) maps onto
//! X(G/K) label-by-label. Lifting a spanning tree of X(G/K) through that
//! projection yields a forest whose components are disjoint copies of the
//! tree, one per K-orbit section. Contracting each component to a point
//! leaves a multigraph on [K:H] vertices — the same graph a coset table
//! for H inside K would draw with Schreier generators — and expansion and
//! gap comparisons between the big and collapsed graphs come with
//! explicit constants checked by [`collapse_bound_checks`].

use super::spectral::BoundCheck;
use super::{schreier_graph, Edge, LabeledMultigraph};
use crate::coset::CosetTable;
use crate::error::{Error, Result};
use crate::Rat;
use std::collections::HashSet;
use std::collections::VecDeque;

#[derive(Clone, Debug)]
pub struct CollapseResult {
    /// Label-preserving projection of H-cosets onto K-cosets.
    pub pi: Vec<usize>,
    /// Edge ids (in the X(G/H) coset graph) of the lifted forest.
    pub forest_edges: Vec<usize>,
    /// Vertex -> contracted component, components numbered by their
    /// smallest member.
    pub component_of: Vec<usize>,
    /// The contracted multigraph; its edges are the non-forest edges of
    /// the big graph, in ascending big-edge order.
    pub quotient: LabeledMultigraph,
    /// Big edge id -> quotient edge id (forest edges map to None).
    pub edge_map: Vec<Option<usize>>,
}

/// Project each H-coset to the K-coset it lies in. Fails when H is not
/// contained in K.
pub fn coset_projection(t_gh: &CosetTable, t_gk: &CosetTable) -> Result<Vec<usize>> {
    if t_gh.n_gens() != t_gk.n_gens() {
        return Err(Error::InvalidInput("tables over different generator sets".into()));
    }
    let n = t_gh.n_cosets();
    let mut pi = vec![usize::MAX; n];
    pi[t_gh.base] = t_gk.base;
    let mut queue = VecDeque::from([t_gh.base]);
    while let Some(c) = queue.pop_front() {
        for g in 1..=t_gh.n_gens() as i32 {
            for letter in [g, -g] {
                let d = t_gh.apply(c, letter);
                let image = t_gk.apply(pi[c], letter);
                if pi[d] == usize::MAX {
                    pi[d] = image;
                    queue.push_back(d);
                } else if pi[d] != image {
                    return Err(Error::InvalidInput(
                        "no projection between the coset spaces: the first subgroup \
                         is not contained in the second"
                            .into(),
                    ));
                }
            }
        }
    }
    Ok(pi)
}

/// Contract X(G/H) along the lift of a spanning tree of X(G/K).
pub fn collapse_forest(t_gh: &CosetTable, t_gk: &CosetTable) -> Result<CollapseResult> {
    let pi = coset_projection(t_gh, t_gk)?;
    let big = schreier_graph(t_gh);
    let m = t_gh.n_gens();

    // Spanning-tree edges of X(G/K), as (tail vertex, generator) pairs.
    let tree = t_gk.bfs_tree();
    let mut tree_pairs: HashSet<(usize, usize)> = HashSet::new();
    for (d, p) in tree.parent.iter().enumerate() {
        if let Some((parent, letter)) = p {
            if *letter > 0 {
                tree_pairs.insert((*parent, *letter as usize));
            } else {
                tree_pairs.insert((d, (-letter) as usize));
            }
        }
    }

    let forest_edges: Vec<usize> = big
        .edges
        .iter()
        .enumerate()
        .filter(|(_, e)| tree_pairs.contains(&(pi[e.tail], e.label)))
        .map(|(i, _)| i)
        .collect();

    // Components of the forest.
    let n = big.n_vertices;
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &ei in &forest_edges {
        let e = big.edges[ei];
        let (a, b) = (find(&mut parent, e.tail), find(&mut parent, e.head));
        if a != b {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            parent[hi] = lo;
        }
    }
    // Number components by smallest contained vertex; roots are already
    // component minima because unions keep the lower index.
    let mut component_of = vec![usize::MAX; n];
    let mut minima: Vec<usize> = Vec::new();
    for v in 0..n {
        let r = find(&mut parent, v);
        if r == v {
            minima.push(v);
        }
    }
    minima.sort_unstable();
    for (idx, &r) in minima.iter().enumerate() {
        component_of[r] = idx;
    }
    for v in 0..n {
        let r = find(&mut parent, v);
        component_of[v] = component_of[r];
    }

    // Each component must be a section of the tree: [G:K] vertices, one
    // over each K-coset.
    let n_components = minima.len();
    let mut sizes = vec![0usize; n_components];
    for v in 0..n {
        sizes[component_of[v]] += 1;
    }
    if sizes.iter().any(|&s| s != t_gk.n_cosets()) {
        return Err(Error::Internal(
            "collapsed components do not match the target coset count".into(),
        ));
    }

    let forest_set: HashSet<usize> = forest_edges.iter().copied().collect();
    let mut edge_map = vec![None; big.n_edges()];
    let mut q_edges = Vec::new();
    for (i, e) in big.edges.iter().enumerate() {
        if forest_set.contains(&i) {
            continue;
        }
        edge_map[i] = Some(q_edges.len());
        q_edges.push(Edge {
            tail: component_of[e.tail],
            head: component_of[e.head],
            label: e.label,
        });
    }
    let quotient = LabeledMultigraph::new(n_components, m, q_edges)?;
    Ok(CollapseResult { pi, forest_edges, component_of, quotient, edge_map })
}

/// Comparison report between a coset graph and its collapse.
#[derive(Clone, Debug)]
pub struct CollapseBounds {
    /// The gap of the big graph against the collapsed gap over the index.
    pub gap: BoundCheck,
    /// Whether the big graph is spread thin enough (h <= 1/(2 index))
    /// for the expansion comparison to apply.
    pub proviso_holds: bool,
    /// Collapsed expansion against 4 h index^2 |S|; present only under
    /// the proviso.
    pub expansion: Option<BoundCheck>,
}

pub fn collapse_bound_checks(
    h_big: Rat,
    lambda_big: f64,
    h_quotient: Rat,
    lambda_quotient: f64,
    index_gk: usize,
    n_labels: usize,
) -> CollapseBounds {
    let idx = index_gk as f64;
    let gap_rhs = lambda_quotient / idx;
    let gap = BoundCheck {
        name: "gap_collapse",
        lhs: lambda_big,
        rhs: gap_rhs,
        ok: lambda_big <= gap_rhs * (1.0 + 1e-9) + 1e-12,
    };
    let proviso_holds = h_big <= Rat::new(1, 2 * index_gk as i64);
    let expansion = if proviso_holds {
        let bound = Rat::from_integer(4 * (index_gk * index_gk * n_labels) as i64) * h_big;
        Some(BoundCheck {
            name: "expansion_collapse",
            lhs: *h_quotient.numer() as f64 / *h_quotient.denom() as f64,
            rhs: *bound.numer() as f64 / *bound.denom() as f64,
            ok: h_quotient <= bound,
        })
    } else {
        None
    };
    CollapseBounds { gap, proviso_holds, expansion }
}
