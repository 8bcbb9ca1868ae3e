//! Exact edge-expansion (Cheeger) constants.
//!
//! `cheeger_exact` walks every vertex bipartition with a Gray code, so
//! each step updates the cut size in O(degree). `cheeger_small_cut`
//! instead enumerates small edge cuts, which stays exact on large graphs
//! whose optimum cut is provably small. Both report the same canonical
//! attaining set: among all optimizing sides, the one with the fewest
//! vertices, ties broken toward the lexicographically smallest vertex
//! membership.

use super::LabeledMultigraph;
use crate::error::{Error, Result};
use crate::Rat;
use std::cmp::Ordering;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheegerResult {
    /// min over cuts of |boundary| / min(|A|, |complement|), exact.
    pub value: Rat,
    /// Canonical attaining side, sorted ascending.
    pub attaining: Vec<usize>,
    pub method: &'static str,
}

/// Order on vertex sets: fewer vertices first, then lexicographic on
/// membership (the set containing the smallest symmetric-difference
/// vertex is smaller).
fn subset_cmp(a: &[u64], b: &[u64]) -> Ordering {
    let ca: u32 = a.iter().map(|w| w.count_ones()).sum();
    let cb: u32 = b.iter().map(|w| w.count_ones()).sum();
    if ca != cb {
        return ca.cmp(&cb);
    }
    for (wa, wb) in a.iter().zip(b.iter()) {
        if wa != wb {
            let low = (wa ^ wb).trailing_zeros();
            return if (wa >> low) & 1 == 1 {
                Ordering::Less
            } else {
                Ordering::Greater
            };
        }
    }
    Ordering::Equal
}

fn bits_to_vertices(words: &[u64]) -> Vec<usize> {
    let mut out = Vec::new();
    for (wi, &w) in words.iter().enumerate() {
        let mut w = w;
        while w != 0 {
            let b = w.trailing_zeros() as usize;
            out.push(wi * 64 + b);
            w &= w - 1;
        }
    }
    out
}

#[derive(Clone)]
struct Candidate {
    ratio: Rat,
    rep: Vec<u64>,
}

fn better(new: &Candidate, cur: &Option<Candidate>) -> bool {
    match cur {
        None => true,
        Some(c) => match new.ratio.cmp(&c.ratio) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => subset_cmp(&new.rep, &c.rep) == Ordering::Less,
        },
    }
}

/// Exhaustive exact Cheeger constant via Gray-code enumeration of all
/// bipartitions. Fails with `TooLarge` above the ceiling. `threads = 0`
/// uses the available parallelism; the result is identical for any
/// thread count.
pub fn cheeger_exact(
    g: &LabeledMultigraph,
    ceiling: usize,
    threads: usize,
) -> Result<CheegerResult> {
    let n = g.n_vertices;
    if n < 2 {
        return Err(Error::Inapplicable(
            "edge expansion needs at least two vertices".into(),
        ));
    }
    if n > ceiling || n > 62 {
        return Err(Error::TooLarge { vertices: n, ceiling: ceiling.min(62) });
    }
    let adj = g.adjacency_multiplicity();
    let deg = g.nonloop_degree();
    let full: u64 = if n == 64 { !0 } else { (1u64 << n) - 1 };

    // Subsets of vertices 1..n always joined by vertex 0; each unordered
    // bipartition appears exactly once.
    let total: u64 = 1u64 << (n - 1);
    let threads = if threads == 0 {
        std::thread::available_parallelism().map(|p| p.get()).unwrap_or(1)
    } else {
        threads
    };
    let threads = threads.max(1).min(total.max(1) as usize);

    let evaluate = |mask: u64, cut: i64, size: u32, best: &mut Option<Candidate>| {
        if size as usize == n {
            return;
        }
        let min_side = (size as usize).min(n - size as usize) as i64;
        let ratio = Rat::new(cut, min_side);
        // Smaller side wins; at a tie the side holding vertex 0 (always
        // `mask`) is lexicographically smaller.
        let rep = if (size as usize) * 2 <= n { mask } else { !mask & full };
        let cand = Candidate { ratio, rep: vec![rep] };
        if better(&cand, best) {
            *best = Some(cand);
        }
    };

    let run_range = |lo: u64, hi: u64| -> Option<Candidate> {
        let mut best: Option<Candidate> = None;
        // State for gray(lo): vertex 0 plus bits of lo ^ (lo >> 1).
        let gray = lo ^ (lo >> 1);
        let mut mask: u64 = 1 | (gray << 1);
        let mut size: u32 = mask.count_ones();
        let mut cut: i64 = g
            .edges
            .iter()
            .filter(|e| {
                e.tail != e.head && ((mask >> e.tail) & 1) != ((mask >> e.head) & 1)
            })
            .count() as i64;
        evaluate(mask, cut, size, &mut best);
        for k in (lo + 1)..hi {
            let bit = k.trailing_zeros() as usize;
            let v = bit + 1;
            let entering = (mask >> v) & 1 == 0;
            let mut s: i64 = 0;
            for &(u, mult) in &adj[v] {
                if (mask >> u) & 1 == 1 {
                    s += mult as i64;
                }
            }
            if entering {
                mask |= 1u64 << v;
                size += 1;
                cut += deg[v] as i64 - 2 * s;
            } else {
                mask &= !(1u64 << v);
                size -= 1;
                // s still counts v's neighbors inside (v itself is not
                // in its own adjacency), so the update mirrors entry.
                cut -= deg[v] as i64 - 2 * s;
            }
            evaluate(mask, cut, size, &mut best);
        }
        best
    };

    let best = if threads == 1 {
        run_range(0, total)
    } else {
        let chunk = total.div_ceil(threads as u64);
        let mut locals: Vec<Option<Candidate>> = Vec::new();
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for t in 0..threads as u64 {
                let lo = t * chunk;
                let hi = ((t + 1) * chunk).min(total);
                if lo >= hi {
                    continue;
                }
                handles.push(scope.spawn(move || run_range(lo, hi)));
            }
            for h in handles {
                locals.push(h.join().expect("cut-search worker panicked"));
            }
        });
        let mut best: Option<Candidate> = None;
        for local in locals.into_iter().flatten() {
            if better(&local, &best) {
                best = Some(local);
            }
        }
        best
    };

    let best = best.ok_or_else(|| Error::Internal("no bipartition was enumerated".into()))?;
    Ok(CheegerResult {
        value: best.ratio,
        attaining: bits_to_vertices(&best.rep),
        method: "exhaustive",
    })
}

/// Exact Cheeger constant by enumerating all edge subsets of size at most
/// `max_boundary` and splitting along the components they leave.
///
/// The result is certified exact only when every better cut would need a
/// boundary within the budget, i.e. when `max_boundary + 1` exceeds
/// (found ratio) * floor(n/2); otherwise this fails rather than report
/// an unverified value.
pub fn cheeger_small_cut(g: &LabeledMultigraph, max_boundary: usize) -> Result<CheegerResult> {
    let n = g.n_vertices;
    if n < 2 {
        return Err(Error::Inapplicable(
            "edge expansion needs at least two vertices".into(),
        ));
    }
    let nonloop: Vec<usize> = g
        .edges
        .iter()
        .enumerate()
        .filter(|(_, e)| e.tail != e.head)
        .map(|(i, _)| i)
        .collect();
    let words = n.div_ceil(64);
    let mut best: Option<Candidate> = None;

    let consider = |inside: &[bool], best: &mut Option<Candidate>| {
        let size = inside.iter().filter(|&&b| b).count();
        if size == 0 || size == n {
            return;
        }
        let cut = g.boundary_count(inside) as i64;
        let min_side = size.min(n - size) as i64;
        let ratio = Rat::new(cut, min_side);
        let mut rep = vec![0u64; words];
        let keep_inside = if size * 2 < n {
            true
        } else if size * 2 > n {
            false
        } else {
            inside[0]
        };
        for v in 0..n {
            if inside[v] == keep_inside {
                rep[v / 64] |= 1u64 << (v % 64);
            }
        }
        let cand = Candidate { ratio, rep };
        if better(&cand, best) {
            *best = Some(cand);
        }
    };

    // Union-find over vertices with an edge subset removed.
    let components = |removed: &[usize]| -> Vec<usize> {
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for (i, e) in g.edges.iter().enumerate() {
            if removed.contains(&i) {
                continue;
            }
            let (a, b) = (find(&mut parent, e.tail), find(&mut parent, e.head));
            if a != b {
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                parent[hi] = lo;
            }
        }
        (0..n).map(|v| find(&mut parent, v)).collect()
    };

    let mut removed: Vec<usize> = Vec::new();
    // Depth-first enumeration of subsets of `nonloop` up to the budget.
    fn enumerate(
        start: usize,
        nonloop: &[usize],
        removed: &mut Vec<usize>,
        budget: usize,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        visit(removed);
        if removed.len() == budget {
            return;
        }
        for i in start..nonloop.len() {
            removed.push(nonloop[i]);
            enumerate(i + 1, nonloop, removed, budget, visit);
            removed.pop();
        }
    }

    {
        let mut visit = |removed: &[usize]| {
            let comp = components(removed);
            let mut roots: Vec<usize> = comp.clone();
            roots.sort_unstable();
            roots.dedup();
            if roots.len() < 2 || roots.len() > 20 {
                // A single component yields no cut; an enormous component
                // count cannot happen within a small budget.
                return;
            }
            // Every union of components is a candidate side.
            for pick in 1..(1u32 << roots.len()) - 1 {
                let inside: Vec<bool> = comp
                    .iter()
                    .map(|r| {
                        let idx = roots.binary_search(r).unwrap();
                        (pick >> idx) & 1 == 1
                    })
                    .collect();
                consider(&inside, &mut best);
            }
        };
        enumerate(0, &nonloop, &mut removed, max_boundary, &mut visit);
    }

    let best = best.ok_or_else(|| {
        Error::InvalidInput(format!(
            "no cut with at most {max_boundary} boundary edges exists; raise the budget"
        ))
    })?;
    let half = (n / 2) as i64;
    if Rat::from_integer((max_boundary + 1) as i64) <= best.ratio * Rat::from_integer(half) {
        return Err(Error::InvalidInput(format!(
            "budget {max_boundary} cannot certify exactness: a better cut could use up to {} edges",
            (best.ratio * Rat::from_integer(half)).floor()
        )));
    }
    Ok(CheegerResult {
        value: best.ratio,
        attaining: bits_to_vertices(&best.rep),
        method: "small_cut",
    })
}

/// Exact expansion with an automatic strategy: exhaustive when the graph
/// fits under the ceiling, otherwise a widening small-cut search. A
/// `budget_hint` (for instance derived from a known cut) is tried first.
/// Fails with `TooLarge` when no budget can certify exactness within a
/// sane amount of work, never returning an unverified value.
pub fn cheeger_auto(
    g: &LabeledMultigraph,
    ceiling: usize,
    threads: usize,
    budget_hint: Option<usize>,
) -> Result<CheegerResult> {
    if g.n_vertices <= ceiling && g.n_vertices <= 62 {
        return cheeger_exact(g, ceiling, threads);
    }
    let nonloop = g.edges.iter().filter(|e| e.tail != e.head).count();
    let affordable = |budget: usize| -> bool {
        let mut combos: f64 = 1.0;
        for b in 0..budget {
            if b >= nonloop {
                return false;
            }
            combos *= (nonloop - b) as f64 / (b + 1) as f64;
            if combos > 5e6 {
                return false;
            }
        }
        true
    };
    let first = budget_hint.unwrap_or(1).max(1);
    let mut budget = first;
    while budget <= nonloop.max(1) {
        if !affordable(budget) {
            break;
        }
        match cheeger_small_cut(g, budget) {
            Ok(r) => return Ok(r),
            Err(Error::InvalidInput(_)) => budget += 1,
            Err(e) => return Err(e),
        }
    }
    Err(Error::TooLarge { vertices: g.n_vertices, ceiling })
}

/// The minimum ratio together with the complete list of attaining small
/// sides: every vertex set A with |A| <= |V|/2 realizing the minimum
/// (both sides of an even split count separately). Canonical order:
/// fewest vertices first, then lexicographic by membership, so the first
/// entry is the canonical attaining set of the exhaustive search.
/// Plain two-pass enumeration, deliberately independent of the
/// Gray-code walk; the ceiling is tighter than the exhaustive search's.
pub fn cheeger_minimizers(
    g: &LabeledMultigraph,
    ceiling: usize,
) -> Result<(Rat, Vec<Vec<usize>>)> {
    let n = g.n_vertices;
    if n < 2 {
        return Err(Error::Inapplicable(
            "edge expansion needs at least two vertices".into(),
        ));
    }
    let cap = ceiling.min(24);
    if n > cap {
        return Err(Error::TooLarge { vertices: n, ceiling: cap });
    }
    let ends: Vec<(u32, u32)> = g
        .edges
        .iter()
        .filter(|e| e.tail != e.head)
        .map(|e| (e.tail as u32, e.head as u32))
        .collect();
    let ratio_of = |mask: u32| -> Rat {
        let size = mask.count_ones() as i64;
        let cut = ends
            .iter()
            .filter(|&&(t, h)| ((mask >> t) ^ (mask >> h)) & 1 == 1)
            .count() as i64;
        Rat::new(cut, size.min(n as i64 - size))
    };
    let all = (1u32 << n) - 1;
    let mut best: Option<Rat> = None;
    for mask in 1..all {
        let r = ratio_of(mask);
        if best.is_none_or(|b| r < b) {
            best = Some(r);
        }
    }
    let best = best.expect("at least one proper subset exists");
    let mut reps: Vec<[u64; 1]> = Vec::new();
    for mask in 1..all {
        if 2 * (mask.count_ones() as usize) <= n && ratio_of(mask) == best {
            reps.push([mask as u64]);
        }
    }
    reps.sort_by(|a, b| subset_cmp(a, b));
    Ok((best, reps.iter().map(|r| bits_to_vertices(r)).collect()))
}
