//! Integer one-cochains on coset graphs and certificates of infinite
//! abelianization.
//!
//! A cochain assigns an integer to each oriented edge; walking an edge
//! backwards negates its value. A *meta-cocycle* is a cochain that
//! evaluates to zero on every closed walk of length at most three — on a
//! coset graph of a triangular presentation this makes it a genuine group
//! cocycle, so a meta-cocycle that fails to be a coboundary exhibits a
//! nonzero homomorphism from the subgroup to the integers, i.e. infinite
//! abelianization.
//!
//! The constructive route: collapse the coset graph over the normalizer,
//! obtaining a vertex-transitive quotient with explicit translations;
//! when the quotient's expansion satisfies h^2 < 2/(3 n), two translates
//! of the optimal cut exist whose boundaries are disjoint but whose
//! bodies overlap, and restricting the coboundary of one to the inside
//! of the other yields a meta-cocycle with an explicit non-vanishing
//! witness loop. Everything is re-checked after construction, pulled
//! back to the full coset graph, cross-validated against an independent
//! integer-homology computation, and serialized as a certificate that
//! can be verified from scratch.

use crate::coset::{
    cyclic_tower, enumerate_cosets, fixed_cosets, normalizer_table, coset_automorphism,
    CosetTable, SubgroupSpec,
};
use crate::error::{Error, Result};
use crate::graph::{
    cheeger_auto, collapse_forest, schreier_graph, CollapseResult, LabeledMultigraph, Step,
};
use crate::homology::subgroup_first_betti;
use crate::presentation::{FinitePresentation, Word};
use crate::Rat;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet};

/// Sparse integer cochain on the oriented edges of a multigraph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cochain {
    pub n_edges: usize,
    values: BTreeMap<usize, i64>,
}

impl Cochain {
    pub fn zero(n_edges: usize) -> Cochain {
        Cochain { n_edges, values: BTreeMap::new() }
    }

    pub fn from_pairs(n_edges: usize, pairs: &[(usize, i64)]) -> Result<Cochain> {
        let mut c = Cochain::zero(n_edges);
        for &(e, v) in pairs {
            if e >= n_edges {
                return Err(Error::InvalidInput(format!(
                    "cochain names edge {e} but the graph has {n_edges} edges"
                )));
            }
            c.set(e, v);
        }
        Ok(c)
    }

    pub fn get(&self, edge: usize) -> i64 {
        *self.values.get(&edge).unwrap_or(&0)
    }

    pub fn set(&mut self, edge: usize, v: i64) {
        if v == 0 {
            self.values.remove(&edge);
        } else {
            self.values.insert(edge, v);
        }
    }

    /// Support as sorted (edge, value) pairs.
    pub fn pairs(&self) -> Vec<(usize, i64)> {
        self.values.iter().map(|(&e, &v)| (e, v)).collect()
    }

    pub fn step_value(&self, s: Step) -> i64 {
        let v = self.get(s.edge);
        if s.forward {
            v
        } else {
            -v
        }
    }

    pub fn evaluate(&self, walk: &[Step]) -> i64 {
        walk.iter().map(|&s| self.step_value(s)).sum()
    }
}

/// The coboundary of the indicator of a vertex set: +1 entering, -1
/// leaving, 0 elsewhere (loops included).
pub fn coboundary(g: &LabeledMultigraph, inside: &[bool]) -> Cochain {
    let mut c = Cochain::zero(g.n_edges());
    for (i, e) in g.edges.iter().enumerate() {
        let v = (inside[e.head] as i64) - (inside[e.tail] as i64);
        c.set(i, v);
    }
    c
}

/// Keep only the edges with both endpoints inside the window.
pub fn restrict_to_window(
    g: &LabeledMultigraph,
    c: &Cochain,
    window: &[bool],
) -> Cochain {
    let mut out = Cochain::zero(g.n_edges());
    for (e, v) in c.pairs() {
        let edge = g.edges[e];
        if window[edge.tail] && window[edge.head] {
            out.set(e, v);
        }
    }
    out
}

/// Search for a closed walk of length at most three on which the cochain
/// does not vanish. `None` means the cochain is a meta-cocycle.
pub fn meta_cocycle_violation(
    g: &LabeledMultigraph,
    c: &Cochain,
) -> Option<(Vec<Step>, i64)> {
    let inc = g.incidence();
    for v in 0..g.n_vertices {
        for &(u1, s1) in &inc[v] {
            let c1 = c.step_value(s1);
            if u1 == v && c1 != 0 {
                return Some((vec![s1], c1));
            }
            for &(u2, s2) in &inc[u1] {
                let c2 = c1 + c.step_value(s2);
                if u2 == v && c2 != 0 {
                    return Some((vec![s1, s2], c2));
                }
                for &(u3, s3) in &inc[u2] {
                    let c3 = c2 + c.step_value(s3);
                    if u3 == v && c3 != 0 {
                        return Some((vec![s1, s2, s3], c3));
                    }
                }
            }
        }
    }
    None
}

pub fn is_meta_cocycle(g: &LabeledMultigraph, c: &Cochain) -> bool {
    meta_cocycle_violation(g, c).is_none()
}

/// Outcome of testing whether a cochain is the coboundary of a potential.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CoboundaryCheck {
    /// A potential realizing the cochain (per connected component).
    Coboundary { potential: Vec<i64> },
    /// A closed walk on which the cochain does not vanish.
    Obstructed { witness: Vec<Step>, value: i64 },
}

/// Decide coboundary-ness by integrating over a spanning forest; the
/// first inconsistent non-forest edge (in edge order) yields a witness
/// loop through the tree.
pub fn is_coboundary(g: &LabeledMultigraph, c: &Cochain) -> CoboundaryCheck {
    let inc = g.incidence();
    let n = g.n_vertices;
    let mut pot = vec![0i64; n];
    let mut seen = vec![false; n];
    let mut tree_edges: BTreeSet<usize> = BTreeSet::new();
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &(u, step) in &inc[v] {
                if !seen[u] {
                    seen[u] = true;
                    pot[u] = pot[v] + c.step_value(step);
                    tree_edges.insert(step.edge);
                    queue.push_back(u);
                }
            }
        }
    }
    for (i, e) in g.edges.iter().enumerate() {
        let expect = pot[e.head] - pot[e.tail];
        if c.get(i) != expect {
            // Close the edge through the spanning forest.
            let back = g
                .bfs_path(e.head, e.tail, |x| tree_edges.contains(&x))
                .expect("endpoints share a component");
            let mut witness = vec![Step { edge: i, forward: true }];
            witness.extend(back);
            let value = c.evaluate(&witness);
            debug_assert_ne!(value, 0);
            return CoboundaryCheck::Obstructed { witness, value };
        }
    }
    CoboundaryCheck::Coboundary { potential: pot }
}

/// A collapse whose quotient carries a free transitive translation
/// action: the Cayley-like structure needed to move cuts around.
#[derive(Clone, Debug)]
pub struct CayleyQuotient {
    pub collapse: CollapseResult,
    /// Fixed cosets inside the collapse target, one per quotient vertex.
    pub sources: Vec<usize>,
    /// translations[i][v] is where translation `i` sends quotient vertex
    /// `v`; translations[0] is the identity (source = base coset).
    pub translations: Vec<Vec<usize>>,
}

/// Collapse X(G/H) over X(G/K) and equip the quotient with the
/// translations coming from coset-graph automorphisms. Requires H to be
/// normal in K (taking K to be the normalizer of H always works).
pub fn cayley_structure(
    t_gh: &CosetTable,
    sub: &SubgroupSpec,
    t_gk: &CosetTable,
) -> Result<CayleyQuotient> {
    let collapse = collapse_forest(t_gh, t_gk)?;
    let w = fixed_cosets(t_gh, sub);
    let sources: Vec<usize> = w
        .into_iter()
        .filter(|&d| collapse.pi[d] == t_gk.base)
        .collect();
    let n_components = collapse.quotient.n_vertices;
    if sources.len() != n_components {
        return Err(Error::Inapplicable(format!(
            "the quotient is not a free translation space: {} translations for {} vertices \
             (the subgroup must be normal in the collapse target)",
            sources.len(),
            n_components
        )));
    }
    let mut translations = Vec::with_capacity(sources.len());
    for &d in &sources {
        let sigma = coset_automorphism(t_gh, d)?;
        let mut tau = vec![usize::MAX; n_components];
        for (v, &sv) in sigma.iter().enumerate() {
            let from = collapse.component_of[v];
            let to = collapse.component_of[sv];
            if tau[from] == usize::MAX {
                tau[from] = to;
            } else if tau[from] != to {
                return Err(Error::Internal(
                    "automorphism does not descend to the quotient".into(),
                ));
            }
        }
        translations.push(tau);
    }
    // The translations must act simply transitively on quotient vertices.
    let base_comp = collapse.component_of[t_gh.base];
    let mut hit = vec![false; n_components];
    for tau in &translations {
        let img = tau[base_comp];
        if hit[img] {
            return Err(Error::Internal("translations are not simply transitive".into()));
        }
        hit[img] = true;
    }
    if hit.iter().any(|&b| !b) {
        return Err(Error::Internal("translations are not transitive".into()));
    }
    Ok(CayleyQuotient { collapse, sources, translations })
}

/// A constructed meta-cocycle together with its non-vanishing loop.
#[derive(Clone, Debug)]
pub struct MetaCocycle {
    pub cochain: Cochain,
    pub witness_loop: Vec<Step>,
    pub witness_value: i64,
    /// Indices into the translation family of the two translates used.
    pub pair: (usize, usize),
}

/// Exact hypothesis for the translate-pair construction: h^2 < 2/(3 n).
pub fn meta_cocycle_hypothesis(h: Rat, n_vertices: usize) -> bool {
    h * h * Rat::from_integer(3 * n_vertices as i64) < Rat::from_integer(2)
}

/// Build a meta-cocycle on a vertex-transitive graph from an expansion
/// minimizer whose squared ratio is below 2/(3 n).
///
/// The search scans ordered translate pairs in index order and takes the
/// first pair with disjoint boundaries that still admits one boundary
/// edge inside the window translate and one outside; under the
/// hypothesis such a pair must exist, so exhausting the search is an
/// internal error, never a silent failure.
pub fn build_meta_cocycle(
    g: &LabeledMultigraph,
    translations: &[Vec<usize>],
    attaining: &[usize],
    h: Rat,
) -> Result<MetaCocycle> {
    let n = g.n_vertices;
    if !meta_cocycle_hypothesis(h, n) {
        return Err(Error::Inapplicable(format!(
            "expansion is too large for the translate-pair construction: \
             h = {} with {} vertices needs h^2 < 2/(3n)",
            crate::rat_string(h),
            n
        )));
    }
    if 2 * attaining.len() > n {
        return Err(Error::Internal(
            "the attaining set must be the small side of its cut".into(),
        ));
    }
    let base_mask = crate::graph::membership_mask(n, attaining);
    {
        let prof = crate::graph::attaining_set_profile(g, &base_mask);
        if !prof.inside_connected || !prof.outside_connected {
            return Err(Error::Internal(
                "expansion minimizer does not induce connected sides".into(),
            ));
        }
    }

    // Translate masks and boundary edge sets.
    let k = translations.len();
    let mut masks: Vec<Vec<bool>> = Vec::with_capacity(k);
    let mut boundaries: Vec<BTreeSet<usize>> = Vec::with_capacity(k);
    for tau in translations {
        let mut mask = vec![false; n];
        for v in 0..n {
            if base_mask[v] {
                mask[tau[v]] = true;
            }
        }
        boundaries.push(g.boundary_edges(&mask).into_iter().collect());
        masks.push(mask);
    }

    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            if !boundaries[i].is_disjoint(&boundaries[j]) {
                continue;
            }
            // One boundary edge fully inside the window, one fully out.
            let mut e_in: Option<usize> = None;
            let mut e_out: Option<usize> = None;
            for &e in &boundaries[i] {
                let edge = g.edges[e];
                let inside = masks[j][edge.tail] && masks[j][edge.head];
                let outside = !masks[j][edge.tail] && !masks[j][edge.head];
                if inside && e_in.is_none() {
                    e_in = Some(e);
                }
                if outside && e_out.is_none() {
                    e_out = Some(e);
                }
                if e_in.is_some() && e_out.is_some() {
                    break;
                }
            }
            let (Some(e1), Some(e2)) = (e_in, e_out) else { continue };

            let body = &masks[i];
            let cprime = coboundary(g, body);
            let cochain = restrict_to_window(g, &cprime, &masks[j]);

            // Walk: cross e1 out of the body, return through the outside,
            // cross e2 back in, and close up inside the body.
            let (u1, w1) = oriented_endpoints(g, e1, body);
            let (u2, w2) = oriented_endpoints(g, e2, body);
            let outside_path = g
                .bfs_path(w1, w2, |e| {
                    let ed = g.edges[e];
                    !body[ed.tail] && !body[ed.head]
                })
                .ok_or_else(|| Error::Internal("outside of the cut is disconnected".into()))?;
            let inside_path = g
                .bfs_path(u2, u1, |e| {
                    let ed = g.edges[e];
                    body[ed.tail] && body[ed.head]
                })
                .ok_or_else(|| Error::Internal("inside of the cut is disconnected".into()))?;
            let mut walk = Vec::new();
            walk.push(step_between(g, e1, u1));
            walk.extend(outside_path);
            walk.push(step_between(g, e2, w2));
            walk.extend(inside_path);

            let value = cochain.evaluate(&walk);
            if value == 0 {
                return Err(Error::Internal(
                    "witness loop evaluated to zero in the pair construction".into(),
                ));
            }
            if let Some((bad, v)) = meta_cocycle_violation(g, &cochain) {
                return Err(Error::Internal(format!(
                    "constructed cochain fails on a closed walk of length {} (value {v})",
                    bad.len()
                )));
            }
            return Ok(MetaCocycle { cochain, witness_loop: walk, witness_value: value, pair: (i, j) });
        }
    }
    Err(Error::Internal(
        "no translate pair with disjoint boundaries was found, \
         contradicting the expansion hypothesis"
            .into(),
    ))
}

/// Endpoints of a boundary edge ordered (inside, outside).
fn oriented_endpoints(g: &LabeledMultigraph, e: usize, inside: &[bool]) -> (usize, usize) {
    let edge = g.edges[e];
    if inside[edge.tail] {
        (edge.tail, edge.head)
    } else {
        (edge.head, edge.tail)
    }
}

/// The traversal step along edge `e` leaving vertex `from`.
fn step_between(g: &LabeledMultigraph, e: usize, from: usize) -> Step {
    let edge = g.edges[e];
    Step { edge: e, forward: edge.tail == from }
}

/// Pull a quotient cochain back through a collapse: forest edges get
/// zero, every other edge copies its quotient value.
pub fn pullback(collapse: &CollapseResult, big: &LabeledMultigraph, c: &Cochain) -> Cochain {
    let mut out = Cochain::zero(big.n_edges());
    for (e, m) in collapse.edge_map.iter().enumerate() {
        if let Some(q) = m {
            out.set(e, c.get(*q));
        }
    }
    out
}

/// Lift a closed quotient walk to a closed walk in the big graph,
/// connecting crossings by paths inside the collapsed components (which
/// carry cochain value zero). The lift starts at the smallest big vertex
/// of the component the quotient walk starts from.
pub fn lift_loop(
    collapse: &CollapseResult,
    big: &LabeledMultigraph,
    quotient_walk: &[Step],
) -> Result<Vec<Step>> {
    let forest: BTreeSet<usize> = collapse.forest_edges.iter().copied().collect();
    let mut inverse = vec![usize::MAX; collapse.quotient.n_edges()];
    for (e, m) in collapse.edge_map.iter().enumerate() {
        if let Some(q) = m {
            inverse[*q] = e;
        }
    }
    let first = quotient_walk
        .first()
        .ok_or_else(|| Error::InvalidInput("cannot lift an empty walk".into()))?;
    let first_edge = collapse.quotient.edges[first.edge];
    let start_component = if first.forward { first_edge.tail } else { first_edge.head };
    let start = (0..big.n_vertices)
        .find(|&v| collapse.component_of[v] == start_component)
        .ok_or_else(|| Error::Internal("empty collapse component".into()))?;
    let within = |e: usize| forest.contains(&e);
    let mut steps: Vec<Step> = Vec::new();
    let mut cur = start;
    for qs in quotient_walk {
        let big_e = inverse[qs.edge];
        if big_e == usize::MAX {
            return Err(Error::Internal("quotient edge without a preimage".into()));
        }
        let edge = big.edges[big_e];
        let (enter, exit) = if qs.forward { (edge.tail, edge.head) } else { (edge.head, edge.tail) };
        if collapse.component_of[enter] != collapse.component_of[cur] {
            return Err(Error::Internal("walk lift left its component".into()));
        }
        let approach = big
            .bfs_path(cur, enter, within)
            .ok_or_else(|| Error::Internal("collapsed component is not connected".into()))?;
        steps.extend(approach);
        steps.push(Step { edge: big_e, forward: qs.forward });
        cur = exit;
    }
    if collapse.component_of[cur] != collapse.component_of[start] {
        return Err(Error::Internal("lifted walk does not close up".into()));
    }
    let closing = big
        .bfs_path(cur, start, within)
        .ok_or_else(|| Error::Internal("collapsed component is not connected".into()))?;
    steps.extend(closing);
    Ok(steps)
}

/// How the certified subgroup is specified, reproducibly.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SubgroupSource {
    /// Generator words over the presentation's alphabet.
    Words { words: Vec<String> },
    /// Kernel of (phi mod modulus) below the subgroup generated by
    /// `base_words`; phi is indexed by that subgroup's Schreier
    /// generators in canonical order.
    Tower { base_words: Vec<String>, phi: Vec<i64>, modulus: usize },
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct SerStep {
    pub edge: usize,
    pub forward: bool,
}

impl From<Step> for SerStep {
    fn from(s: Step) -> SerStep {
        SerStep { edge: s.edge, forward: s.forward }
    }
}

impl From<SerStep> for Step {
    fn from(s: SerStep) -> Step {
        Step { edge: s.edge, forward: s.forward }
    }
}

/// Serializable certificate that a finite-index subgroup has infinite
/// abelianization, checkable from scratch by `verify_certificate`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct Certificate {
    pub schema_version: u32,
    /// Generators of the ambient (triangular) presentation.
    pub generator_names: Vec<String>,
    /// Relators as signed letter lists (1-based generator indices).
    pub relators: Vec<Vec<i32>>,
    pub subgroup: SubgroupSource,
    pub coset_count: usize,
    /// SHA-256 over the canonical edge list of the coset graph.
    pub graph_hash: String,
    /// Sparse cochain on the coset graph, sorted by edge id.
    pub cochain: Vec<(usize, i64)>,
    pub witness_loop: Vec<SerStep>,
    pub witness_value: i64,
    /// Free rank of the subgroup's abelianization computed by the
    /// independent rewriting + diagonalization route.
    pub first_betti_oracle: usize,
}

pub fn graph_hash(g: &LabeledMultigraph) -> String {
    let mut hasher = Sha256::new();
    hasher.update(b"coset-graph-v1");
    hasher.update((g.n_vertices as u64).to_le_bytes());
    for e in &g.edges {
        hasher.update((e.tail as u64).to_le_bytes());
        hasher.update((e.head as u64).to_le_bytes());
        hasher.update((e.label as u64).to_le_bytes());
    }
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Resolve a subgroup source into its coset table and a generating set
/// of words usable for normalizer computations.
pub fn resolve_subgroup_source(
    p: &FinitePresentation,
    source: &SubgroupSource,
    coset_limit: usize,
) -> Result<(CosetTable, SubgroupSpec)> {
    match source {
        SubgroupSource::Words { words } => {
            let parsed: Result<Vec<Word>> = words.iter().map(|w| p.parse_word(w)).collect();
            let spec = SubgroupSpec::new("words", parsed?);
            let t = enumerate_cosets(p, &spec, coset_limit)?;
            Ok((t, spec))
        }
        SubgroupSource::Tower { base_words, phi, modulus } => {
            let parsed: Result<Vec<Word>> = base_words.iter().map(|w| p.parse_word(w)).collect();
            let parsed = parsed?;
            // No base words means the tower sits below the whole group.
            let base_spec = if parsed.is_empty() {
                SubgroupSpec::whole_group(p)
            } else {
                SubgroupSpec::new("tower-base", parsed)
            };
            let base = enumerate_cosets(p, &base_spec, coset_limit)?;
            let level = cyclic_tower(p, &base, phi, *modulus)?;
            let spec = SubgroupSpec::new("tower", level.table.schreier_generator_words());
            Ok((level.table, spec))
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CertifyOptions {
    pub coset_limit: usize,
    pub cheeger_ceiling: usize,
    pub threads: usize,
}

impl Default for CertifyOptions {
    fn default() -> CertifyOptions {
        CertifyOptions {
            coset_limit: crate::coset::DEFAULT_COSET_LIMIT,
            cheeger_ceiling: crate::graph::DEFAULT_CHEEGER_CEILING,
            threads: 0,
        }
    }
}

/// Produce a verifiable certificate that the subgroup has infinite
/// abelianization, or fail with `Inapplicable` when the construction's
/// expansion hypothesis does not hold on the collapsed graph.
pub fn certify_infinite_abelianization(
    p: &FinitePresentation,
    source: &SubgroupSource,
    opts: &CertifyOptions,
) -> Result<Certificate> {
    if !p.is_triangular() {
        return Err(Error::Inapplicable(
            "certificates require a triangular presentation (rewrite first)".into(),
        ));
    }
    let (t_gh, spec) = resolve_subgroup_source(p, source, opts.coset_limit)?;
    let t_gn = normalizer_table(&t_gh, &spec)?;
    let cayley = cayley_structure(&t_gh, &spec, &t_gn)?;
    let quotient = &cayley.collapse.quotient;
    let ch = cheeger_auto(quotient, opts.cheeger_ceiling, opts.threads, None)?;
    let meta = build_meta_cocycle(quotient, &cayley.translations, &ch.attaining, ch.value)?;

    let big = schreier_graph(&t_gh);
    let pulled = pullback(&cayley.collapse, &big, &meta.cochain);
    let lifted = lift_loop(&cayley.collapse, &big, &meta.witness_loop)?;
    let lifted_value = pulled.evaluate(&lifted);
    if lifted_value != meta.witness_value {
        return Err(Error::Internal("pullback changed the witness value".into()));
    }
    // The pulled-back cochain must be a genuine cocycle on the coset
    // graph: zero on all short closed walks, hence on relator traces.
    if let Some((walk, v)) = meta_cocycle_violation(&big, &pulled) {
        return Err(Error::Internal(format!(
            "pulled-back cochain fails on a walk of length {} (value {v})",
            walk.len()
        )));
    }
    for c in 0..t_gh.n_cosets() {
        for r in &p.relators {
            let walk = relator_walk(&t_gh, c, r);
            if pulled.evaluate(&walk) != 0 {
                return Err(Error::Internal("cochain does not vanish on a relator trace".into()));
            }
        }
    }
    // Independent route: rewrite the subgroup and diagonalize.
    let betti = subgroup_first_betti(p, &t_gh)?;
    if betti < 1 {
        return Err(Error::Internal(
            "certificate contradicts the integer-homology oracle (betti = 0)".into(),
        ));
    }
    Ok(Certificate {
        schema_version: 1,
        generator_names: p.generator_names.clone(),
        relators: p.relators.iter().map(|w| w.letters().to_vec()).collect(),
        subgroup: source.clone(),
        coset_count: t_gh.n_cosets(),
        graph_hash: graph_hash(&big),
        cochain: pulled.pairs(),
        witness_loop: lifted.into_iter().map(SerStep::from).collect(),
        witness_value: lifted_value,
        first_betti_oracle: betti,
    })
}

/// The closed walk a relator traces from a coset, as explicit steps in
/// the coset graph (edge id = coset * n_gens + generator - 1).
pub fn relator_walk(t: &CosetTable, start: usize, relator: &Word) -> Vec<Step> {
    let m = t.n_gens();
    let mut walk = Vec::with_capacity(relator.len());
    let mut cur = start;
    for &l in relator.letters() {
        if l > 0 {
            walk.push(Step { edge: cur * m + (l as usize - 1), forward: true });
            cur = t.apply(cur, l);
        } else {
            let d = t.apply(cur, l);
            walk.push(Step { edge: d * m + ((-l) as usize - 1), forward: false });
            cur = d;
        }
    }
    walk
}

/// Re-check a certificate from scratch: rebuild the coset space from the
/// stored presentation and subgroup source, compare the graph hash, and
/// re-verify the cocycle conditions, the witness loop, and the
/// independent homology oracle. Any mismatch is `CertificateRejected`.
pub fn verify_certificate(cert: &Certificate, coset_limit: usize) -> Result<()> {
    let reject = |msg: &str| Error::CertificateRejected(msg.to_string());
    if cert.schema_version != 1 {
        return Err(reject("unsupported schema version"));
    }
    let relators: Vec<Word> = cert.relators.iter().map(|l| Word::new(l.clone())).collect();
    let p = FinitePresentation::new(cert.generator_names.clone(), relators)
        .map_err(|e| reject(&format!("invalid presentation: {e}")))?;
    if !p.is_triangular() {
        return Err(reject("presentation is not triangular"));
    }
    let (t, _spec) = resolve_subgroup_source(&p, &cert.subgroup, coset_limit)
        .map_err(|e| reject(&format!("subgroup does not resolve: {e}")))?;
    if t.n_cosets() != cert.coset_count {
        return Err(reject("coset count does not match"));
    }
    let big = schreier_graph(&t);
    if graph_hash(&big) != cert.graph_hash {
        return Err(reject("graph hash does not match"));
    }
    let cochain = Cochain::from_pairs(big.n_edges(), &cert.cochain)
        .map_err(|e| reject(&format!("invalid cochain: {e}")))?;
    if let Some((walk, v)) = meta_cocycle_violation(&big, &cochain) {
        return Err(reject(&format!(
            "cochain fails on a closed walk of length {} (value {v})",
            walk.len()
        )));
    }
    for c in 0..t.n_cosets() {
        for r in &p.relators {
            if cochain.evaluate(&relator_walk(&t, c, r)) != 0 {
                return Err(reject("cochain does not vanish on a relator trace"));
            }
        }
    }
    // Witness loop: structurally a closed walk, with the stated value.
    let steps: Vec<Step> = cert.witness_loop.iter().map(|&s| Step::from(s)).collect();
    if steps.is_empty() {
        return Err(reject("empty witness loop"));
    }
    let mut cur: Option<usize> = None;
    let mut start = 0usize;
    for s in &steps {
        if s.edge >= big.n_edges() {
            return Err(reject("witness loop uses an edge outside the graph"));
        }
        let e = big.edges[s.edge];
        let (from, to) = if s.forward { (e.tail, e.head) } else { (e.head, e.tail) };
        match cur {
            None => {
                start = from;
                cur = Some(to);
            }
            Some(at) => {
                if at != from {
                    return Err(reject("witness loop is not a connected walk"));
                }
                cur = Some(to);
            }
        }
    }
    if cur != Some(start) {
        return Err(reject("witness loop does not close up"));
    }
    if cert.witness_value == 0 || cochain.evaluate(&steps) != cert.witness_value {
        return Err(reject("witness value does not match the cochain"));
    }
    // Independent oracle, recomputed.
    let betti = subgroup_first_betti(&p, &t)
        .map_err(|e| reject(&format!("homology oracle failed: {e}")))?;
    if betti != cert.first_betti_oracle {
        return Err(reject("stored homology rank does not match the recomputation"));
    }
    if betti < 1 {
        return Err(reject("homology oracle reports finite abelianization"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::cheeger_small_cut;
    use crate::presentation::parse_presentation;

    fn word_times(l: i32, k: usize) -> Word {
        Word::new(vec![l; k])
    }

    fn cycle_table(n: usize) -> (FinitePresentation, CosetTable) {
        let p = parse_presentation("gens: a\n").unwrap();
        let t = enumerate_cosets(
            &p,
            &SubgroupSpec::new("n", vec![word_times(1, n)]),
            10 * n + 10,
        )
        .unwrap();
        (p, t)
    }

    #[test]
    fn coboundaries_are_meta_cocycles_and_integrate_back() {
        let (_, t) = cycle_table(6);
        let g = schreier_graph(&t);
        let inside = crate::graph::membership_mask(6, &[0, 1, 2]);
        let c = coboundary(&g, &inside);
        assert!(is_meta_cocycle(&g, &c));
        match is_coboundary(&g, &c) {
            CoboundaryCheck::Coboundary { potential } => {
                for (i, e) in g.edges.iter().enumerate() {
                    assert_eq!(potential[e.head] - potential[e.tail], c.get(i));
                }
            }
            CoboundaryCheck::Obstructed { .. } => panic!("a coboundary was rejected"),
        }
    }

    #[test]
    fn parallel_edges_must_carry_equal_values() {
        use crate::graph::Edge;
        let g = LabeledMultigraph::new(
            2,
            2,
            vec![
                Edge { tail: 0, head: 1, label: 1 },
                Edge { tail: 0, head: 1, label: 2 },
            ],
        )
        .unwrap();
        let c = Cochain::from_pairs(2, &[(0, 1), (1, 2)]).unwrap();
        let (walk, v) = meta_cocycle_violation(&g, &c).expect("must be rejected");
        assert_eq!(walk.len(), 2);
        assert_ne!(v, 0);
    }

    #[test]
    fn loops_must_vanish() {
        use crate::graph::Edge;
        let g = LabeledMultigraph::new(1, 1, vec![Edge { tail: 0, head: 0, label: 1 }]).unwrap();
        let c = Cochain::from_pairs(1, &[(0, 3)]).unwrap();
        let (walk, _) = meta_cocycle_violation(&g, &c).unwrap();
        assert_eq!(walk.len(), 1);
    }

    #[test]
    fn winding_cochain_is_obstructed() {
        let (_, t) = cycle_table(5);
        let g = schreier_graph(&t);
        let mut c = Cochain::zero(g.n_edges());
        c.set(0, 1);
        match is_coboundary(&g, &c) {
            CoboundaryCheck::Obstructed { witness, value } => {
                assert_ne!(value, 0);
                assert_eq!(c.evaluate(&witness), value);
            }
            CoboundaryCheck::Coboundary { .. } => panic!("winding class missed"),
        }
    }

    #[test]
    fn hypothesis_is_exact() {
        // 26-cycle passes, 25-cycle fails: (2/13)^2 < 2/78 but
        // (1/6)^2 > 2/75.
        assert!(meta_cocycle_hypothesis(Rat::new(2, 13), 26));
        assert!(!meta_cocycle_hypothesis(Rat::new(1, 6), 25));
    }

    #[test]
    fn certificate_for_cyclic_index_26() {
        let p = parse_presentation("gens: a\n").unwrap();
        let source = SubgroupSource::Words { words: vec!["a".repeat(26)] };
        let cert =
            certify_infinite_abelianization(&p, &source, &CertifyOptions::default()).unwrap();
        assert_eq!(cert.coset_count, 26);
        assert_eq!(cert.first_betti_oracle, 1);
        assert_ne!(cert.witness_value, 0);
        verify_certificate(&cert, 100_000).unwrap();

        // Serialization round trip preserves everything.
        let json = serde_json::to_string(&cert).unwrap();
        let back: Certificate = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cert);
        verify_certificate(&back, 100_000).unwrap();
    }

    #[test]
    fn tampered_certificates_are_rejected() {
        let p = parse_presentation("gens: a\n").unwrap();
        let source = SubgroupSource::Words { words: vec!["a".repeat(26)] };
        let cert =
            certify_infinite_abelianization(&p, &source, &CertifyOptions::default()).unwrap();

        let mut wrong_value = cert.clone();
        wrong_value.witness_value += 1;
        assert!(matches!(
            verify_certificate(&wrong_value, 100_000),
            Err(Error::CertificateRejected(_))
        ));

        let mut wrong_cochain = cert.clone();
        if let Some(first) = wrong_cochain.cochain.first_mut() {
            first.1 += 1;
        }
        assert!(matches!(
            verify_certificate(&wrong_cochain, 100_000),
            Err(Error::CertificateRejected(_))
        ));

        let mut wrong_hash = cert.clone();
        wrong_hash.graph_hash = "00".repeat(32);
        assert!(matches!(
            verify_certificate(&wrong_hash, 100_000),
            Err(Error::CertificateRejected(_))
        ));

        let mut wrong_betti = cert;
        wrong_betti.first_betti_oracle = 7;
        assert!(matches!(
            verify_certificate(&wrong_betti, 100_000),
            Err(Error::CertificateRejected(_))
        ));
    }

    #[test]
    fn small_cycles_are_inapplicable() {
        let p = parse_presentation("gens: a\n").unwrap();
        let source = SubgroupSource::Words { words: vec!["a".repeat(25)] };
        assert!(matches!(
            certify_infinite_abelianization(&p, &source, &CertifyOptions::default()),
            Err(Error::Inapplicable(_))
        ));
    }

    #[test]
    fn tower_source_certifies_and_verifies() {
        let p = parse_presentation("gens: a\n").unwrap();
        let source = SubgroupSource::Tower {
            base_words: vec!["a".into()],
            phi: vec![1],
            modulus: 26,
        };
        let cert =
            certify_infinite_abelianization(&p, &source, &CertifyOptions::default()).unwrap();
        assert_eq!(cert.coset_count, 26);
        verify_certificate(&cert, 100_000).unwrap();
    }

    #[test]
    fn free_group_kernel_certificate() {
        let p = parse_presentation("gens: a b\n").unwrap();
        let n = 27usize;
        let mut words = vec!["b".to_string(), "a".repeat(n)];
        for k in 1..n {
            words.push(format!("{}b{}", "a".repeat(k), "A".repeat(k)));
        }
        let source = SubgroupSource::Words { words };
        let cert =
            certify_infinite_abelianization(&p, &source, &CertifyOptions::default()).unwrap();
        assert_eq!(cert.coset_count, n);
        assert_eq!(cert.first_betti_oracle, n + 1);
        verify_certificate(&cert, 100_000).unwrap();
    }

    #[test]
    fn pullback_through_a_real_collapse() {
        // X(G/H) = C_54 collapsed over X(G/K) = C_2 gives C_27; build the
        // cocycle on the quotient and pull it back upstairs.
        let p = parse_presentation("gens: a\n").unwrap();
        let th = enumerate_cosets(
            &p,
            &SubgroupSpec::new("h", vec![word_times(1, 54)]),
            1000,
        )
        .unwrap();
        let tk = enumerate_cosets(
            &p,
            &SubgroupSpec::new("k", vec![word_times(1, 2)]),
            1000,
        )
        .unwrap();
        let spec = SubgroupSpec::new("h", vec![word_times(1, 54)]);
        let cayley = cayley_structure(&th, &spec, &tk).unwrap();
        assert_eq!(cayley.collapse.quotient.n_vertices, 27);
        assert_eq!(cayley.translations.len(), 27);

        let ch = cheeger_small_cut(&cayley.collapse.quotient, 2).unwrap();
        assert_eq!(ch.value, Rat::new(2, 13));
        let meta =
            build_meta_cocycle(&cayley.collapse.quotient, &cayley.translations, &ch.attaining, ch.value)
                .unwrap();
        assert_eq!(meta.witness_value.abs(), 1);

        let big = schreier_graph(&th);
        let pulled = pullback(&cayley.collapse, &big, &meta.cochain);
        assert!(is_meta_cocycle(&big, &pulled));
        let lifted = lift_loop(&cayley.collapse, &big, &meta.witness_loop).unwrap();
        assert_eq!(pulled.evaluate(&lifted), meta.witness_value);
        match is_coboundary(&big, &pulled) {
            CoboundaryCheck::Obstructed { value, .. } => assert_ne!(value, 0),
            CoboundaryCheck::Coboundary { .. } => panic!("pullback must remain obstructed"),
        }
    }
}
