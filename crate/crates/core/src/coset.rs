//! Coset enumeration and the right action of a group on its cosets.
//!
//! `enumerate_cosets` runs Todd-Coxeter in the HLT style: scan relators
//! from each coset in definition order, fill gaps with new cosets, process
//! coincidences eagerly, and fall back to a definition-free lookahead pass
//! when the coset budget is hit. Completed tables are renumbered by
//! breadth-first search from the base coset, so identical inputs always
//! produce the identical table regardless of the enumeration history.

use crate::error::{Error, Result};
use crate::presentation::{FinitePresentation, Word};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

pub const DEFAULT_COSET_LIMIT: usize = 1_000_000;

/// A subgroup described by generator words over the ambient presentation.
/// An empty word list denotes the trivial subgroup.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SubgroupSpec {
    pub label: String,
    pub generator_words: Vec<Word>,
}

impl SubgroupSpec {
    pub fn new(label: impl Into<String>, generator_words: Vec<Word>) -> SubgroupSpec {
        SubgroupSpec { label: label.into(), generator_words }
    }

    /// The whole group as a subgroup of itself.
    pub fn whole_group(p: &FinitePresentation) -> SubgroupSpec {
        let words = (1..=p.n_generators() as i32).map(|g| Word::new(vec![g])).collect();
        SubgroupSpec::new("whole", words)
    }
}

/// Complete coset table: the action of each generator and inverse on the
/// cosets of a finite-index subgroup.
///
/// Slot layout: generator `g` (1-based) acts through slot `2(g-1)`, its
/// inverse through slot `2(g-1)+1`. Every generator acts as a permutation
/// and coset 0 is the subgroup itself.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CosetTable {
    n_gens: usize,
    action: Vec<u32>, // row-major, width 2*n_gens
    pub base: usize,
}

#[inline]
fn slot_of(letter: i32) -> usize {
    debug_assert!(letter != 0);
    if letter > 0 {
        2 * (letter as usize - 1)
    } else {
        2 * ((-letter) as usize - 1) + 1
    }
}

impl CosetTable {
    pub fn n_cosets(&self) -> usize {
        if self.n_gens == 0 {
            0
        } else {
            self.action.len() / (2 * self.n_gens)
        }
    }

    pub fn n_gens(&self) -> usize {
        self.n_gens
    }

    #[inline]
    pub fn apply(&self, coset: usize, letter: i32) -> usize {
        self.action[coset * 2 * self.n_gens + slot_of(letter)] as usize
    }

    pub fn trace(&self, start: usize, w: &Word) -> usize {
        w.letters().iter().fold(start, |c, &l| self.apply(c, l))
    }

    /// Breadth-first tree from the base coset, exploring letters in the
    /// fixed order g1, g1^-1, g2, g2^-1, ... For a table renumbered by
    /// this same search the discovery order is 0, 1, 2, ...
    pub fn bfs_tree(&self) -> BfsTree {
        let n = self.n_cosets();
        let mut parent: Vec<Option<(usize, i32)>> = vec![None; n];
        let mut seen = vec![false; n];
        let mut order = Vec::with_capacity(n);
        let mut queue = VecDeque::new();
        seen[self.base] = true;
        queue.push_back(self.base);
        while let Some(c) = queue.pop_front() {
            order.push(c);
            for g in 1..=self.n_gens as i32 {
                for letter in [g, -g] {
                    let d = self.apply(c, letter);
                    if !seen[d] {
                        seen[d] = true;
                        parent[d] = Some((c, letter));
                        queue.push_back(d);
                    }
                }
            }
        }
        BfsTree { parent, order }
    }

    /// Word carrying the base coset to `c` along the BFS tree.
    pub fn tree_word(&self, tree: &BfsTree, c: usize) -> Word {
        let mut letters = Vec::new();
        let mut cur = c;
        while let Some((p, l)) = tree.parent[cur] {
            letters.push(l);
            cur = p;
        }
        letters.reverse();
        Word::new(letters)
    }

    /// Edges `(coset, generator)` outside the BFS tree, in canonical order
    /// (coset-major, generator-minor). These index the Schreier
    /// generators of the subgroup.
    pub fn schreier_edges(&self, tree: &BfsTree) -> Vec<(usize, usize)> {
        let mut tree_edges = std::collections::HashSet::new();
        for (c, p) in tree.parent.iter().enumerate() {
            if let Some((parent, letter)) = p {
                // Record as the positively-oriented (coset, gen) pair.
                if *letter > 0 {
                    tree_edges.insert((*parent, *letter as usize));
                } else {
                    tree_edges.insert((c, (-letter) as usize));
                }
            }
        }
        let mut out = Vec::new();
        for c in 0..self.n_cosets() {
            for g in 1..=self.n_gens {
                if !tree_edges.contains(&(c, g)) {
                    out.push((c, g));
                }
            }
        }
        out
    }

    /// The Schreier generator attached to a non-tree edge `(c, g)`:
    /// `word(c) * g * word(c*g)^-1`, freely reduced.
    pub fn schreier_generator_word(&self, tree: &BfsTree, edge: (usize, usize)) -> Word {
        let (c, g) = edge;
        let to = self.apply(c, g as i32);
        self.tree_word(tree, c)
            .concat(&Word::new(vec![g as i32]))
            .concat(&self.tree_word(tree, to).inverse())
            .free_reduce()
    }

    /// All Schreier generator words, in canonical edge order. They
    /// generate the subgroup the table enumerates.
    pub fn schreier_generator_words(&self) -> Vec<Word> {
        let tree = self.bfs_tree();
        self.schreier_edges(&tree)
            .iter()
            .map(|&e| self.schreier_generator_word(&tree, e))
            .collect()
    }

    /// CSV rows `coset,generator,image`, one per (coset, generator) pair.
    pub fn to_csv(&self, p: &FinitePresentation) -> String {
        let mut s = String::from("coset,generator,image\n");
        for c in 0..self.n_cosets() {
            for g in 1..=self.n_gens {
                s.push_str(&format!(
                    "{},{},{}\n",
                    c,
                    p.generator_names[g - 1],
                    self.apply(c, g as i32)
                ));
            }
        }
        s
    }

    /// Rebuild with cosets renumbered in BFS discovery order from base.
    fn renumber_bfs(&self) -> CosetTable {
        let tree = self.bfs_tree();
        let n = self.n_cosets();
        assert_eq!(tree.order.len(), n, "coset table must be transitive");
        let mut new_of_old = vec![0usize; n];
        for (new, &old) in tree.order.iter().enumerate() {
            new_of_old[old] = new;
        }
        let width = 2 * self.n_gens;
        let mut action = vec![0u32; n * width];
        for old in 0..n {
            for s in 0..width {
                action[new_of_old[old] * width + s] =
                    new_of_old[self.action[old * width + s] as usize] as u32;
            }
        }
        CosetTable { n_gens: self.n_gens, action, base: 0 }
    }

    fn from_rows(n_gens: usize, rows: Vec<Vec<u32>>, base: usize) -> CosetTable {
        let width = 2 * n_gens;
        let mut action = Vec::with_capacity(rows.len() * width);
        for row in rows {
            debug_assert_eq!(row.len(), width);
            action.extend(row);
        }
        CosetTable { n_gens, action, base }
    }

    /// Check the structural invariants: totality with inverse consistency
    /// (so each generator is a permutation), relator closure at every
    /// coset, subgroup-generator closure at base, and transitivity.
    pub fn validate(&self, p: &FinitePresentation, sub: Option<&SubgroupSpec>) -> Result<()> {
        let n = self.n_cosets();
        if n == 0 {
            return Err(Error::Internal("empty coset table".into()));
        }
        for c in 0..n {
            for g in 1..=self.n_gens as i32 {
                let d = self.apply(c, g);
                if d >= n || self.apply(d, -g) != c {
                    return Err(Error::Internal(format!(
                        "generator {g} does not act as a permutation at coset {c}"
                    )));
                }
            }
        }
        for c in 0..n {
            for r in &p.relators {
                if self.trace(c, r) != c {
                    return Err(Error::Internal(format!(
                        "relator does not close at coset {c}"
                    )));
                }
            }
        }
        if let Some(sub) = sub {
            for w in &sub.generator_words {
                if self.trace(self.base, w) != self.base {
                    return Err(Error::Internal(
                        "subgroup generator does not fix the base coset".into(),
                    ));
                }
            }
        }
        if self.bfs_tree().order.len() != n {
            return Err(Error::Internal("coset table is not transitive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct BfsTree {
    /// parent[c] = (parent coset, letter applied at the parent), None at base.
    pub parent: Vec<Option<(usize, i32)>>,
    /// Cosets in discovery order; full length iff the table is transitive.
    pub order: Vec<usize>,
}

const UNDEF: u32 = u32::MAX;

struct Enumerator {
    width: usize,
    table: Vec<Vec<u32>>,
    parent: Vec<u32>,
    live: usize,
    dead_queue: VecDeque<u32>,
    limit: usize,
}

/// Signal: a definition was needed but the coset budget is exhausted.
#[derive(Debug)]
struct NeedSpace;

impl Enumerator {
    fn new(n_gens: usize, limit: usize) -> Enumerator {
        let mut e = Enumerator {
            width: 2 * n_gens,
            table: Vec::new(),
            parent: Vec::new(),
            live: 0,
            dead_queue: VecDeque::new(),
            limit,
        };
        e.alloc().expect("limit must allow at least one coset");
        e
    }

    fn alloc(&mut self) -> std::result::Result<u32, NeedSpace> {
        if self.live >= self.limit {
            return Err(NeedSpace);
        }
        let c = self.table.len() as u32;
        self.table.push(vec![UNDEF; self.width]);
        self.parent.push(c);
        self.live += 1;
        Ok(c)
    }

    fn rep(&mut self, mut c: u32) -> u32 {
        while self.parent[c as usize] != c {
            let p = self.parent[c as usize];
            self.parent[c as usize] = self.parent[p as usize];
            c = self.parent[c as usize];
        }
        c
    }

    fn is_live(&mut self, c: u32) -> bool {
        self.rep(c) == c
    }

    /// Union two cosets, keeping the smaller index as representative, and
    /// queue the dead one for row transfer.
    fn merge(&mut self, a: u32, b: u32) {
        let a = self.rep(a);
        let b = self.rep(b);
        if a == b {
            return;
        }
        let (keep, dead) = if a < b { (a, b) } else { (b, a) };
        self.parent[dead as usize] = keep;
        self.live -= 1;
        self.dead_queue.push_back(dead);
    }

    fn process_coincidences(&mut self) {
        while let Some(e) = self.dead_queue.pop_front() {
            for x in 0..self.width {
                let f = self.table[e as usize][x];
                if f == UNDEF {
                    continue;
                }
                self.table[e as usize][x] = UNDEF;
                if self.table[f as usize][x ^ 1] == e {
                    self.table[f as usize][x ^ 1] = UNDEF;
                }
                let mu = self.rep(e);
                let nu = self.rep(f);
                let existing = self.table[mu as usize][x];
                if existing != UNDEF {
                    self.merge(nu, existing);
                } else {
                    let back = self.table[nu as usize][x ^ 1];
                    if back != UNDEF {
                        self.merge(mu, back);
                    } else {
                        self.table[mu as usize][x] = nu;
                        self.table[nu as usize][x ^ 1] = mu;
                    }
                }
            }
        }
    }

    /// Scan word `w` from `start`, enforcing `start * w = start`.
    /// With `fill`, gaps are closed by defining new cosets; without it the
    /// scan still applies deductions and coincidences when it can.
    fn scan(&mut self, start: u32, w: &[i32], fill: bool) -> std::result::Result<(), NeedSpace> {
        let mut f = self.rep(start);
        let mut b = f;
        let mut i = 0usize;
        let mut j = w.len();
        loop {
            while i < j {
                let nxt = self.table[f as usize][slot_of(w[i])];
                if nxt == UNDEF {
                    break;
                }
                f = self.rep(nxt);
                i += 1;
            }
            if i == j {
                if f != b {
                    self.merge(f, b);
                    self.process_coincidences();
                }
                return Ok(());
            }
            while j > i {
                let nxt = self.table[b as usize][slot_of(-w[j - 1])];
                if nxt == UNDEF {
                    break;
                }
                b = self.rep(nxt);
                j -= 1;
            }
            if j == i {
                if f != b {
                    self.merge(f, b);
                    self.process_coincidences();
                }
                return Ok(());
            }
            if j == i + 1 {
                // Deduction: f * w[i] = b.
                let s = slot_of(w[i]);
                self.table[f as usize][s] = b;
                self.table[b as usize][s ^ 1] = f;
                return Ok(());
            }
            if !fill {
                return Ok(());
            }
            let d = self.alloc()?;
            let s = slot_of(w[i]);
            self.table[f as usize][s] = d;
            self.table[d as usize][s ^ 1] = f;
            f = d;
            i += 1;
        }
    }

    /// Definition-free pass over all live cosets and relators; returns
    /// whether any coset died.
    fn lookahead(&mut self, relators: &[Word]) -> bool {
        let before = self.live;
        for c in 0..self.table.len() as u32 {
            if !self.is_live(c) {
                continue;
            }
            for r in relators {
                let _ = self.scan(c, r.letters(), false);
                if !self.is_live(c) {
                    break;
                }
            }
        }
        self.live < before
    }
}

/// Run Todd-Coxeter and return the completed, BFS-renumbered coset table.
pub fn enumerate_cosets(
    p: &FinitePresentation,
    sub: &SubgroupSpec,
    limit: usize,
) -> Result<CosetTable> {
    let n = p.n_generators() as i32;
    for w in &sub.generator_words {
        if w.letters().iter().any(|&l| l == 0 || l.abs() > n) {
            return Err(Error::InvalidInput(
                "subgroup word uses a letter outside the presentation".into(),
            ));
        }
    }

    let mut e = Enumerator::new(p.n_generators(), limit);

    let with_space = |e: &mut Enumerator,
                          f: &mut dyn FnMut(&mut Enumerator) -> std::result::Result<(), NeedSpace>|
     -> Result<()> {
        loop {
            match f(e) {
                Ok(()) => return Ok(()),
                Err(NeedSpace) => {
                    if !e.lookahead(&p.relators) {
                        return Err(Error::LimitExceeded { limit });
                    }
                }
            }
        }
    };

    for w in &sub.generator_words {
        with_space(&mut e, &mut |e| e.scan(0, w.letters(), true))?;
    }

    let mut omega: u32 = 0;
    while (omega as usize) < e.table.len() {
        if !e.is_live(omega) {
            omega += 1;
            continue;
        }
        for r in &p.relators {
            with_space(&mut e, &mut |e| e.scan(omega, r.letters(), true))?;
            if !e.is_live(omega) {
                break;
            }
        }
        if e.is_live(omega) {
            for s in 0..e.width {
                if e.table[omega as usize][s] == UNDEF {
                    with_space(&mut e, &mut |e| {
                        if e.table[omega as usize][s] != UNDEF || !e.is_live(omega) {
                            return Ok(());
                        }
                        let d = e.alloc()?;
                        e.table[omega as usize][s] = d;
                        e.table[d as usize][s ^ 1] = omega;
                        Ok(())
                    })?;
                }
                if !e.is_live(omega) {
                    break;
                }
            }
        }
        omega += 1;
    }

    // Closure verification; any miss folds cosets and we go again.
    loop {
        let mut merged = false;
        for c in 0..e.table.len() as u32 {
            if !e.is_live(c) {
                continue;
            }
            let live_before = e.live;
            for r in &p.relators {
                let _ = e.scan(c, r.letters(), false);
            }
            if e.live != live_before {
                merged = true;
            }
        }
        let live_before = e.live;
        for w in &sub.generator_words {
            let _ = e.scan(0, w.letters(), false);
        }
        if e.live != live_before {
            merged = true;
        }
        if !merged {
            break;
        }
    }

    // Compact live cosets, then renumber canonically.
    let mut new_of_old = vec![u32::MAX; e.table.len()];
    let mut rows: Vec<Vec<u32>> = Vec::with_capacity(e.live);
    for c in 0..e.table.len() as u32 {
        if e.rep(c) == c {
            new_of_old[c as usize] = rows.len() as u32;
            rows.push(e.table[c as usize].clone());
        }
    }
    for row in rows.iter_mut() {
        for entry in row.iter_mut() {
            if *entry == UNDEF {
                return Err(Error::Internal("incomplete table after enumeration".into()));
            }
            let r = e.rep(*entry);
            *entry = new_of_old[r as usize];
        }
    }
    let base = new_of_old[e.rep(0) as usize] as usize;
    let table = CosetTable::from_rows(p.n_generators(), rows, base).renumber_bfs();
    table.validate(p, Some(sub))?;
    Ok(table)
}

/// Indices `([G:N(H)], [N(H):H])` read off the coset action: a coset is
/// fixed by every subgroup generator exactly when it lies in the
/// normalizer.
pub fn normalizer_indices(t: &CosetTable, sub: &SubgroupSpec) -> Result<(usize, usize)> {
    let fixed = fixed_cosets(t, sub);
    let n = t.n_cosets();
    if !n.is_multiple_of(fixed.len()) {
        return Err(Error::Internal(
            "normalizer block size does not divide the index".into(),
        ));
    }
    Ok((n / fixed.len(), fixed.len()))
}

/// Cosets fixed by every subgroup generator word; these form the
/// normalizer block of the base coset. Base is always included.
pub fn fixed_cosets(t: &CosetTable, sub: &SubgroupSpec) -> Vec<usize> {
    (0..t.n_cosets())
        .filter(|&c| sub.generator_words.iter().all(|w| t.trace(c, w) == c))
        .collect()
}

/// The label-preserving automorphism of the coset graph sending base to
/// `dest`, as a vertex permutation. Exists exactly when `dest` lies in
/// the normalizer block; anything else is an error.
pub fn coset_automorphism(t: &CosetTable, dest: usize) -> Result<Vec<usize>> {
    let n = t.n_cosets();
    let mut sigma = vec![usize::MAX; n];
    sigma[t.base] = dest;
    let mut queue = VecDeque::new();
    queue.push_back(t.base);
    let mut visited = vec![false; n];
    visited[t.base] = true;
    while let Some(c) = queue.pop_front() {
        for g in 1..=t.n_gens() as i32 {
            for letter in [g, -g] {
                let d = t.apply(c, letter);
                let image = t.apply(sigma[c], letter);
                if sigma[d] == usize::MAX {
                    sigma[d] = image;
                } else if sigma[d] != image {
                    return Err(Error::InvalidInput(format!(
                        "no coset-graph automorphism sends base to {dest}"
                    )));
                }
                if !visited[d] {
                    visited[d] = true;
                    queue.push_back(d);
                }
            }
        }
    }
    Ok(sigma)
}

/// Coset table of the normalizer N(H), built by merging H-cosets into
/// orbits of the deck transformations indexed by the fixed cosets.
pub fn normalizer_table(t: &CosetTable, sub: &SubgroupSpec) -> Result<CosetTable> {
    let fixed = fixed_cosets(t, sub);
    let n = t.n_cosets();
    let mut uf: Vec<usize> = (0..n).collect();
    fn find(uf: &mut [usize], mut x: usize) -> usize {
        while uf[x] != x {
            uf[x] = uf[uf[x]];
            x = uf[x];
        }
        x
    }
    for &d in &fixed {
        let sigma = coset_automorphism(t, d)?;
        for (c, &sc) in sigma.iter().enumerate() {
            let (a, b) = (find(&mut uf, c), find(&mut uf, sc));
            if a != b {
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                uf[hi] = lo;
            }
        }
    }
    let mut block_of = vec![usize::MAX; n];
    let mut blocks = 0usize;
    for c in 0..n {
        let r = find(&mut uf, c);
        if block_of[r] == usize::MAX {
            block_of[r] = blocks;
            blocks += 1;
        }
        block_of[c] = block_of[r];
    }
    let width = 2 * t.n_gens();
    let mut rows = vec![vec![UNDEF; width]; blocks];
    for c in 0..n {
        for g in 1..=t.n_gens() as i32 {
            for letter in [g, -g] {
                let s = slot_of(letter);
                let from = block_of[c];
                let to = block_of[t.apply(c, letter)];
                if rows[from][s] == UNDEF {
                    rows[from][s] = to as u32;
                } else if rows[from][s] != to as u32 {
                    return Err(Error::Internal(
                        "normalizer blocks are not a congruence".into(),
                    ));
                }
            }
        }
    }
    Ok(CosetTable::from_rows(t.n_gens(), rows, block_of[t.base]).renumber_bfs())
}

/// Coset table of the intersection of two subgroups of the same group,
/// via the reachable part of the product action.
pub fn intersect_subgroups(t1: &CosetTable, t2: &CosetTable) -> Result<CosetTable> {
    if t1.n_gens() != t2.n_gens() {
        return Err(Error::InvalidInput("tables over different generator sets".into()));
    }
    let mut index_of = std::collections::HashMap::new();
    let mut pairs = vec![(t1.base, t2.base)];
    index_of.insert((t1.base, t2.base), 0usize);
    let width = 2 * t1.n_gens();
    let mut rows: Vec<Vec<u32>> = vec![vec![UNDEF; width]];
    let mut head = 0usize;
    while head < pairs.len() {
        let (c1, c2) = pairs[head];
        for g in 1..=t1.n_gens() as i32 {
            for letter in [g, -g] {
                let d = (t1.apply(c1, letter), t2.apply(c2, letter));
                let idx = *index_of.entry(d).or_insert_with(|| {
                    pairs.push(d);
                    rows.push(vec![UNDEF; width]);
                    pairs.len() - 1
                });
                rows[head][slot_of(letter)] = idx as u32;
            }
        }
        head += 1;
    }
    Ok(CosetTable::from_rows(t1.n_gens(), rows, 0).renumber_bfs())
}

/// One level of a cyclic tower: the kernel of (phi mod n) below the
/// subgroup the base table enumerates.
#[derive(Clone, Debug)]
pub struct TowerLevel {
    pub table: CosetTable,
    /// Residue label of each coset; the base coset carries 0.
    pub psi: Vec<i64>,
    /// Largest |phi| over the Schreier generators.
    pub max_jump: i64,
}

/// Build the coset table of `ker(phi mod n)` inside the subgroup of
/// `base`, where `phi` assigns an integer to each Schreier generator of
/// that subgroup (canonical non-tree edge order).
///
/// `phi` must vanish on every relator as rewritten into the subgroup (a
/// genuine homomorphism to the integers) and must be surjective. Cosets
/// of the kernel are pairs (coset of H, residue); the returned table is
/// BFS-renumbered with `psi` carried along.
pub fn cyclic_tower(
    p: &FinitePresentation,
    base: &CosetTable,
    phi: &[i64],
    n: usize,
) -> Result<TowerLevel> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("tower modulus must be at least 2, got {n}")));
    }
    let tree = base.bfs_tree();
    let edges = base.schreier_edges(&tree);
    if phi.len() != edges.len() {
        return Err(Error::InvalidHomomorphism(format!(
            "phi has {} values but the subgroup has {} Schreier generators",
            phi.len(),
            edges.len()
        )));
    }
    // phi value of every (coset, letter) step: tree edges carry 0.
    let m = base.n_gens();
    let mut step_phi = vec![0i64; base.n_cosets() * m];
    for (ei, &(c, g)) in edges.iter().enumerate() {
        step_phi[c * m + (g - 1)] = phi[ei];
    }
    let phi_step = |c: usize, letter: i32| -> (usize, i64) {
        if letter > 0 {
            let g = letter as usize;
            (base.apply(c, letter), step_phi[c * m + (g - 1)])
        } else {
            let g = (-letter) as usize;
            let d = base.apply(c, letter);
            (d, -step_phi[d * m + (g - 1)])
        }
    };

    // A homomorphism to the integers must kill every rewritten relator.
    for c in 0..base.n_cosets() {
        for r in &p.relators {
            let mut cur = c;
            let mut total = 0i64;
            for &l in r.letters() {
                let (d, v) = phi_step(cur, l);
                total += v;
                cur = d;
            }
            if total != 0 {
                return Err(Error::InvalidHomomorphism(format!(
                    "phi evaluates to {total} on a relator rewritten at coset {c}"
                )));
            }
        }
    }
    let gcd = phi.iter().fold(0i64, |acc, &v| num_integer::gcd(acc, v.abs()));
    if gcd != 1 {
        return Err(Error::InvalidHomomorphism(format!(
            "phi is not surjective onto the integers (content {gcd})"
        )));
    }

    let nb = base.n_cosets();
    let width = 2 * m;
    let mut rows: Vec<Vec<u32>> = vec![vec![UNDEF; width]; nb * n];
    let id = |c: usize, r: usize| c * n + r;
    for c in 0..nb {
        for r in 0..n {
            for g in 1..=m as i32 {
                for letter in [g, -g] {
                    let (d, v) = phi_step(c, letter);
                    let r2 = (r as i64 + v).rem_euclid(n as i64) as usize;
                    rows[id(c, r)][slot_of(letter)] = id(d, r2) as u32;
                }
            }
        }
    }
    let unrenumbered =
        CosetTable::from_rows(m, rows, id(base.base, 0));
    // Renumber and carry the residue labels through the permutation.
    let tree2 = unrenumbered.bfs_tree();
    if tree2.order.len() != nb * n {
        return Err(Error::Internal(
            "tower table is not transitive; phi should have been surjective".into(),
        ));
    }
    let table = unrenumbered.renumber_bfs();
    let mut psi = vec![0i64; nb * n];
    for (new, &old) in tree2.order.iter().enumerate() {
        psi[new] = (old % n) as i64;
    }
    let max_jump = phi.iter().map(|v| v.abs()).max().unwrap_or(0);
    table.validate(p, None)?;
    Ok(TowerLevel { table, psi, max_jump })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presentation::parse_presentation;

    fn pres(text: &str) -> FinitePresentation {
        parse_presentation(text).unwrap()
    }

    fn sub(p: &FinitePresentation, words: &[&str]) -> SubgroupSpec {
        SubgroupSpec::new(
            "h",
            words.iter().map(|w| p.parse_word(w).unwrap()).collect(),
        )
    }

    #[test]
    fn cyclic_six_over_squares() {
        let p = pres("gens: a\nrels: aaaaaa\n");
        let h = sub(&p, &["aa"]);
        let t = enumerate_cosets(&p, &h, 1000).unwrap();
        assert_eq!(t.n_cosets(), 2);
    }

    #[test]
    fn whole_group_gives_one_coset() {
        let p = pres("gens: x y\nrels: xxYYY\n");
        let h = SubgroupSpec::whole_group(&p);
        let t = enumerate_cosets(&p, &h, 1000).unwrap();
        assert_eq!(t.n_cosets(), 1);
    }

    #[test]
    fn symmetric_group_over_transposition() {
        let p = pres("gens: a b\nrels: aa bbb abab\n");
        let h = sub(&p, &["a"]);
        let t = enumerate_cosets(&p, &h, 1000).unwrap();
        assert_eq!(t.n_cosets(), 3);
    }

    #[test]
    fn trivial_subgroup_of_s3() {
        let p = pres("gens: a b\nrels: aa bbb abab\n");
        let h = SubgroupSpec::new("trivial", vec![]);
        let t = enumerate_cosets(&p, &h, 1000).unwrap();
        assert_eq!(t.n_cosets(), 6);
        t.validate(&p, Some(&h)).unwrap();
    }

    #[test]
    fn limit_exceeded_reports_enumeration_error() {
        // Z x Z free product... a free group of rank 2 has no finite
        // quotient data; enumerating <a> inside it cannot close.
        let p = pres("gens: a b\n");
        let h = sub(&p, &["a"]);
        let err = enumerate_cosets(&p, &h, 50).unwrap_err();
        assert!(matches!(err, Error::LimitExceeded { .. }));
    }

    #[test]
    fn deterministic_renumbering() {
        let p = pres("gens: a b\nrels: aa bbb abab\n");
        let h = SubgroupSpec::new("trivial", vec![]);
        let t1 = enumerate_cosets(&p, &h, 1000).unwrap();
        let t2 = enumerate_cosets(&p, &h, 1000).unwrap();
        assert_eq!(t1, t2);
    }

    #[test]
    fn normalizer_of_transposition_in_s3() {
        let p = pres("gens: a b\nrels: aa bbb abab\n");
        let h = sub(&p, &["a"]);
        let t = enumerate_cosets(&p, &h, 1000).unwrap();
        assert_eq!(normalizer_indices(&t, &h).unwrap(), (3, 1));
    }

    #[test]
    fn normalizer_of_rotation_in_s3() {
        let p = pres("gens: a b\nrels: aa bbb abab\n");
        let h = sub(&p, &["b"]);
        let t = enumerate_cosets(&p, &h, 1000).unwrap();
        assert_eq!(normalizer_indices(&t, &h).unwrap(), (1, 2));
    }

    #[test]
    fn normalizer_table_of_transposition_has_three_cosets() {
        let p = pres("gens: a b\nrels: aa bbb abab\n");
        let h = sub(&p, &["a"]);
        let t = enumerate_cosets(&p, &h, 1000).unwrap();
        let nt = normalizer_table(&t, &h).unwrap();
        assert_eq!(nt.n_cosets(), 3);
        nt.validate(&p, None).unwrap();
    }

    #[test]
    fn intersection_of_two_and_three_is_six() {
        let p = pres("gens: a\n");
        let t2 = enumerate_cosets(&p, &sub(&p, &["aa"]), 100).unwrap();
        let t3 = enumerate_cosets(&p, &sub(&p, &["aaa"]), 100).unwrap();
        let t6 = intersect_subgroups(&t2, &t3).unwrap();
        assert_eq!(t6.n_cosets(), 6);
        t6.validate(&p, None).unwrap();
    }

    #[test]
    fn schreier_words_of_cycle() {
        let p = pres("gens: a\n");
        let t = enumerate_cosets(&p, &sub(&p, &["aaa"]), 100).unwrap();
        let words = t.schreier_generator_words();
        assert_eq!(words, vec![p.parse_word("aaa").unwrap()]);
    }

    #[test]
    fn tower_over_whole_group_is_cycle() {
        let p = pres("gens: a\n");
        let t = enumerate_cosets(&p, &SubgroupSpec::whole_group(&p), 10).unwrap();
        let level = cyclic_tower(&p, &t, &[1], 6).unwrap();
        assert_eq!(level.table.n_cosets(), 6);
        assert_eq!(level.max_jump, 1);
        // One generator walking a 6-cycle; labels follow the walk.
        let mut c = level.table.base;
        for expect in [0i64, 1, 2, 3, 4, 5] {
            assert_eq!(level.psi[c], expect);
            c = level.table.apply(c, 1);
        }
        assert_eq!(c, level.table.base);
    }

    #[test]
    fn trefoil_tower_has_index_five() {
        let p = pres("gens: x y\nrels: xxYYY\n");
        let t = enumerate_cosets(&p, &SubgroupSpec::whole_group(&p), 10).unwrap();
        let level = cyclic_tower(&p, &t, &[3, 2], 5).unwrap();
        assert_eq!(level.table.n_cosets(), 5);
        assert_eq!(level.max_jump, 3);
    }

    #[test]
    fn tower_rejects_modulus_one()
    {
        let p = pres("gens: a\n");
        let t = enumerate_cosets(&p, &SubgroupSpec::whole_group(&p), 10).unwrap();
        assert!(matches!(
            cyclic_tower(&p, &t, &[1], 1),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn tower_rejects_non_homomorphism() {
        // In <a | a^6> the subgroup <a^2> is cyclic of order 3; no
        // surjection to the integers exists, and a phi claiming one must
        // fail the relator check.
        let p = pres("gens: a\nrels: aaaaaa\n");
        let t = enumerate_cosets(&p, &sub(&p, &["aa"]), 100).unwrap();
        let err = cyclic_tower(&p, &t, &[1], 3).unwrap_err();
        assert!(matches!(err, Error::InvalidHomomorphism(_)));
    }

    #[test]
    fn tower_rejects_non_surjective_phi() {
        let p = pres("gens: a\n");
        let t = enumerate_cosets(&p, &SubgroupSpec::whole_group(&p), 10).unwrap();
        let err = cyclic_tower(&p, &t, &[2], 4).unwrap_err();
        assert!(matches!(err, Error::InvalidHomomorphism(_)));
    }

    #[test]
    fn automorphism_exists_only_into_normalizer_block() {
        let p = pres("gens: a b\nrels: aa bbb abab\n");
        let h = sub(&p, &["a"]);
        let t = enumerate_cosets(&p, &h, 1000).unwrap();
        assert!(coset_automorphism(&t, t.base).is_ok());
        // [N(H):H] = 1 here, so no other coset admits an automorphism.
        let other = (0..t.n_cosets()).find(|&c| c != t.base).unwrap();
        assert!(coset_automorphism(&t, other).is_err());
    }
}
