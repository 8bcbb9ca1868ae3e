//! Squared generating sets.
//!
//! From a coset action of the generators, build the graph of all words of
//! length one or two. Words acting as the identity are dropped; words
//! acting as each other's inverse (or as an earlier word) collapse to one
//! edge family, because either member draws the same undirected edges.
//! The expansion of the squared graph exceeds that of the original by at
//! most a fixed factor of the generator count, and that comparison is
//! checked by [`square_expansion_check`].

use super::spectral::BoundCheck;
use super::{graph_from_permutations, LabeledMultigraph};
use crate::coset::CosetTable;
use crate::error::Result;
use crate::presentation::Word;
use crate::Rat;
use std::collections::HashSet;

#[derive(Clone, Debug)]
pub struct SquaredGraph {
    /// One generator word per kept permutation, in enumeration order:
    /// single letters then two-letter products, letters ordered
    /// g1, g1^-1, g2, g2^-1, ...
    pub words: Vec<Word>,
    pub graph: LabeledMultigraph,
}

fn permutation_of(t: &CosetTable, w: &Word) -> Vec<usize> {
    (0..t.n_cosets()).map(|c| t.trace(c, w)).collect()
}

fn inverse_permutation(p: &[usize]) -> Vec<usize> {
    let mut inv = vec![0usize; p.len()];
    for (i, &x) in p.iter().enumerate() {
        inv[x] = i;
    }
    inv
}

/// Build the squared graph of a coset action.
pub fn square_generators(t: &CosetTable) -> Result<SquaredGraph> {
    let mut letters = Vec::new();
    for g in 1..=t.n_gens() as i32 {
        letters.push(g);
        letters.push(-g);
    }
    let mut candidates: Vec<Word> = letters.iter().map(|&l| Word::new(vec![l])).collect();
    for &l1 in &letters {
        for &l2 in &letters {
            candidates.push(Word::new(vec![l1, l2]));
        }
    }

    let identity: Vec<usize> = (0..t.n_cosets()).collect();
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut words = Vec::new();
    let mut perms = Vec::new();
    for w in candidates {
        let p = permutation_of(t, &w);
        if p == identity {
            continue;
        }
        let inv = inverse_permutation(&p);
        let key = if p <= inv { p.clone() } else { inv };
        if seen.insert(key) {
            words.push(w);
            perms.push(p);
        }
    }
    let graph = graph_from_permutations(t.n_cosets(), &perms)?;
    Ok(SquaredGraph { words, graph })
}

/// Expansion comparison for squaring: the squared graph's constant is at
/// most (4 |S| - 1) times the original.
pub fn square_expansion_check(h_original: Rat, h_squared: Rat, n_labels: usize) -> BoundCheck {
    let factor = Rat::from_integer(4 * n_labels as i64 - 1);
    let bound = factor * h_original;
    BoundCheck {
        name: "expansion_squared",
        lhs: *h_squared.numer() as f64 / *h_squared.denom() as f64,
        rhs: *bound.numer() as f64 / *bound.denom() as f64,
        ok: h_squared <= bound,
    }
}

#[cfg(test)]
mod tests {
    use super::super::{cheeger_exact, lambda1, DEFAULT_SPECTRAL_TOL};
    use super::*;
    use crate::coset::{enumerate_cosets, SubgroupSpec};
    use crate::presentation::parse_presentation;

    #[test]
    fn squaring_a_hexagon_doubles_the_jump_set() {
        let p = parse_presentation("gens: a\n").unwrap();
        let t = enumerate_cosets(
            &p,
            &SubgroupSpec::new("six", vec![Word::new(vec![1; 6])]),
            100,
        )
        .unwrap();
        let sq = square_generators(&t).unwrap();
        assert_eq!(
            sq.words,
            vec![Word::new(vec![1]), Word::new(vec![1, 1])],
            "only the single step and the double step survive deduplication"
        );
        sq.graph.validate_schreier().unwrap();
        assert!(sq.graph.is_connected());

        let h0 = cheeger_exact(&super::super::schreier_graph(&t), 30, 1)
            .unwrap()
            .value;
        let h1 = cheeger_exact(&sq.graph, 30, 1).unwrap().value;
        assert_eq!(h0, Rat::new(2, 3));
        assert_eq!(h1, Rat::new(2, 1));
        // The comparison factor 4|S|-1 = 3 is attained exactly here.
        let check = square_expansion_check(h0, h1, 1);
        assert!(check.ok);
        assert_eq!(h1, Rat::from_integer(3) * h0);

        let gap = lambda1(&sq.graph, DEFAULT_SPECTRAL_TOL).unwrap();
        assert!((gap.lambda1 - 4.0).abs() < 1e-9);
    }

    #[test]
    fn squaring_respects_relator_collapses() {
        // In S3 the square of the transposition is the identity, so "aa"
        // must disappear, and inverses must be deduplicated.
        let p = parse_presentation("gens: a b\nrels: aa bbb abab\n").unwrap();
        let t = enumerate_cosets(&p, &SubgroupSpec::new("triv", vec![]), 100).unwrap();
        let sq = square_generators(&t).unwrap();
        assert_eq!(sq.words[0], Word::new(vec![1]));
        assert_eq!(sq.words[1], Word::new(vec![2]));
        assert!(!sq.words.contains(&Word::new(vec![1, 1])));
        assert!(!sq.words.contains(&Word::new(vec![-2])));
        let identity: Vec<usize> = (0..6).collect();
        for w in &sq.words {
            assert_ne!(super::permutation_of(&t, w), identity);
        }
        let h0 = cheeger_exact(&super::super::schreier_graph(&t), 30, 1)
            .unwrap()
            .value;
        let h1 = cheeger_exact(&sq.graph, 30, 1).unwrap().value;
        assert!(square_expansion_check(h0, h1, 2).ok);
    }
}
