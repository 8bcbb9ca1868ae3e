//! Integer homology of finitely presented groups.
//!
//! Everything here reduces to exact integer linear algebra: the
//! abelianization of a presentation is the cokernel of its exponent-sum
//! matrix, computed through a Smith normal form that carries its row and
//! column transforms so that every reported diagonal is certified by the
//! identity D = U * A * V. Subgroups enter through Reidemeister-Schreier
//! rewriting of a completed coset table, which yields an honest
//! presentation of the subgroup on its Schreier generators.

use crate::coset::CosetTable;
use crate::error::{Error, Result};
use crate::presentation::{FinitePresentation, Word};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

/// Dense integer matrix, row-major, arbitrary-precision entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegerMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<BigInt>,
}

impl IntegerMatrix {
    pub fn zeros(rows: usize, cols: usize) -> IntegerMatrix {
        IntegerMatrix { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> IntegerMatrix {
        let mut m = IntegerMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, BigInt::one());
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<IntegerMatrix> {
        let r = rows.len();
        let c = rows.first().map(|x| x.len()).unwrap_or(0);
        if rows.iter().any(|x| x.len() != c) {
            return Err(Error::InvalidInput("ragged matrix rows".into()));
        }
        let mut m = IntegerMatrix::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                m.set(i, j, BigInt::from(x));
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> IntegerMatrix {
        let mut t = IntegerMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn mul(&self, other: &IntegerMatrix) -> IntegerMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = IntegerMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let add = a * other.get(k, j);
                    let cur = out.get(i, j) + add;
                    out.set(i, j, cur);
                }
            }
        }
        out
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// row_a -= q * row_b
    fn row_sub(&mut self, a: usize, b: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for j in 0..self.cols {
            let v = self.get(a, j) - q * self.get(b, j);
            self.set(a, j, v);
        }
    }

    /// col_a -= q * col_b
    fn col_sub(&mut self, a: usize, b: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for i in 0..self.rows {
            let v = self.get(i, a) - q * self.get(i, b);
            self.set(i, a, v);
        }
    }

    /// col_a += col_b
    fn col_add(&mut self, a: usize, b: usize) {
        for i in 0..self.rows {
            let v = self.get(i, a) + self.get(i, b);
            self.set(i, a, v);
        }
    }

    fn negate_row(&mut self, i: usize) {
        for j in 0..self.cols {
            let v = -self.get(i, j);
            self.set(i, j, v);
        }
    }
}

/// Quotient with the smallest-magnitude remainder (ties keep the
/// truncated quotient).
fn nearest_quotient(a: &BigInt, b: &BigInt) -> BigInt {
    let mut q = a / b;
    let r = a - &q * b;
    if r.magnitude() * 2u8 > b.magnitude() * 1u8 {
        if r.is_negative() == b.is_negative() {
            q += 1;
        } else {
            q -= 1;
        }
    }
    q
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SnfResult {
    /// Nonzero diagonal entries d1 | d2 | ... | dr, all positive.
    pub diagonal: Vec<BigInt>,
    pub rank: usize,
    /// Unimodular U with diag = U * A * V.
    pub row_transform: IntegerMatrix,
    /// Unimodular V with diag = U * A * V.
    pub col_transform: IntegerMatrix,
}

/// Smith normal form with transforms. The factorization D = U * A * V is
/// re-verified by multiplication on matrices up to 50x50 before being
/// returned; a violation is an internal error, never a wrong answer.
pub fn smith_normal_form(a: &IntegerMatrix) -> Result<SnfResult> {
    let (r, c) = (a.rows, a.cols);
    let mut m = a.clone();
    let mut u = IntegerMatrix::identity(r);
    let mut v = IntegerMatrix::identity(c);

    let diagonalize = |m: &mut IntegerMatrix,
                       u: &mut IntegerMatrix,
                       v: &mut IntegerMatrix,
                       from: usize| {
        let mut t = from;
        while t < r.min(c) {
            // Smallest-magnitude nonzero pivot in the active block,
            // earliest position on ties.
            let mut piv: Option<(usize, usize)> = None;
            for i in t..r {
                for j in t..c {
                    if m.get(i, j).is_zero() {
                        continue;
                    }
                    match piv {
                        None => piv = Some((i, j)),
                        Some((pi, pj)) => {
                            if m.get(i, j).magnitude() < m.get(pi, pj).magnitude() {
                                piv = Some((i, j));
                            }
                        }
                    }
                }
            }
            let Some((pi, pj)) = piv else { break };
            m.swap_rows(t, pi);
            u.swap_rows(t, pi);
            m.swap_cols(t, pj);
            v.swap_cols(t, pj);
            loop {
                let mut dirty = false;
                for i in t + 1..r {
                    if m.get(i, t).is_zero() {
                        continue;
                    }
                    let q = nearest_quotient(m.get(i, t), m.get(t, t));
                    m.row_sub(i, t, &q);
                    u.row_sub(i, t, &q);
                    if !m.get(i, t).is_zero() {
                        // The remainder is strictly smaller: promote it.
                        m.swap_rows(t, i);
                        u.swap_rows(t, i);
                        dirty = true;
                    }
                }
                if dirty {
                    continue;
                }
                for j in t + 1..c {
                    if m.get(t, j).is_zero() {
                        continue;
                    }
                    let q = nearest_quotient(m.get(t, j), m.get(t, t));
                    m.col_sub(j, t, &q);
                    v.col_sub(j, t, &q);
                    if !m.get(t, j).is_zero() {
                        m.swap_cols(t, j);
                        v.swap_cols(t, j);
                        // The swapped-in column may repopulate column t.
                        dirty = true;
                        break;
                    }
                }
                if !dirty {
                    break;
                }
            }
            t += 1;
        }
    };

    diagonalize(&mut m, &mut u, &mut v, 0);

    // Enforce the divisibility chain d_i | d_{i+1}.
    let mut guard = 0usize;
    'chain: loop {
        guard += 1;
        if guard > 100_000 {
            return Err(Error::Internal("divisibility fix-up did not stabilize".into()));
        }
        for i in 0..r.min(c).saturating_sub(1) {
            let di = m.get(i, i).clone();
            let dj = m.get(i + 1, i + 1).clone();
            if di.is_zero() || dj.is_zero() {
                continue;
            }
            if (&dj % &di).is_zero() {
                continue;
            }
            m.col_add(i, i + 1);
            v.col_add(i, i + 1);
            diagonalize(&mut m, &mut u, &mut v, i);
            continue 'chain;
        }
        break;
    }

    for i in 0..r.min(c) {
        if m.get(i, i).is_negative() {
            m.negate_row(i);
            u.negate_row(i);
        }
    }

    let mut diagonal = Vec::new();
    for i in 0..r.min(c) {
        let d = m.get(i, i).clone();
        if d.is_zero() {
            break;
        }
        diagonal.push(d);
    }
    let rank = diagonal.len();

    // Certify: off-diagonal zeros, chain, and the factorization itself.
    for i in 0..r {
        for j in 0..c {
            let expect_zero = i != j || i >= rank;
            if expect_zero && !m.get(i, j).is_zero() {
                return Err(Error::Internal("Smith form is not diagonal".into()));
            }
        }
    }
    for w in diagonal.windows(2) {
        if !(&w[1] % &w[0]).is_zero() {
            return Err(Error::Internal("Smith diagonal violates divisibility".into()));
        }
    }
    if r * c <= 2500 {
        let product = u.mul(a).mul(&v);
        if product != m {
            return Err(Error::Internal("transform certificate U*A*V failed".into()));
        }
    }
    Ok(SnfResult { diagonal, rank, row_transform: u, col_transform: v })
}

/// Rank of the integer kernel's complement: for a presentation matrix
/// (one row per relation), `cols - rank` is the free rank of the
/// cokernel.
pub fn first_betti(a: &IntegerMatrix) -> Result<usize> {
    Ok(a.cols - smith_normal_form(a)?.rank)
}

/// Exponent-sum matrix: one row per relator, one column per generator.
pub fn abelianization_matrix(p: &FinitePresentation) -> IntegerMatrix {
    let mut m = IntegerMatrix::zeros(p.relators.len(), p.n_generators());
    for (i, r) in p.relators.iter().enumerate() {
        for g in 0..p.n_generators() {
            m.set(i, g, BigInt::from(r.exponent_sum(g + 1)));
        }
    }
    m
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbelianInvariants {
    /// Free rank of the abelianization.
    pub betti: usize,
    /// Torsion coefficients greater than one, in divisibility order.
    pub torsion: Vec<BigInt>,
}

pub fn abelianization(p: &FinitePresentation) -> Result<AbelianInvariants> {
    let snf = smith_normal_form(&abelianization_matrix(p))?;
    Ok(AbelianInvariants {
        betti: p.n_generators() - snf.rank,
        torsion: snf.diagonal.into_iter().filter(|d| d > &BigInt::one()).collect(),
    })
}

/// A surjection onto the integers from the abelianization, one value per
/// generator, sign-normalized so the first nonzero value is positive.
///
/// Fails with `Inapplicable` when the abelianization is finite. The
/// returned vector provably kills every relator and has content one.
pub fn phi_from_abelianization(p: &FinitePresentation) -> Result<Vec<i64>> {
    let a = abelianization_matrix(p);
    // Columns of M = A^T span the relation lattice inside Z^gens.
    let m = a.transpose();
    let snf = smith_normal_form(&m)?;
    let g = p.n_generators();
    if snf.rank >= g {
        return Err(Error::Inapplicable(
            "the abelianization is finite; no surjection onto the integers exists".into(),
        ));
    }
    // In U-coordinates the cokernel splits with the free part last; the
    // first free coordinate is a surjection.
    let u = &snf.row_transform;
    let mut phi_big: Vec<BigInt> = (0..g).map(|j| u.get(snf.rank, j).clone()).collect();
    if let Some(first) = phi_big.iter().find(|x| !x.is_zero()) {
        if first.is_negative() {
            for x in phi_big.iter_mut() {
                *x = -x.clone();
            }
        }
    }
    let mut phi = Vec::with_capacity(g);
    for x in &phi_big {
        phi.push(i64::try_from(x).map_err(|_| {
            Error::Internal("abelianization coordinate exceeds 64 bits".into())
        })?);
    }
    // Certify: kills every relator, and is primitive (hence surjective).
    for r in &p.relators {
        let total: i64 = (0..g).map(|k| phi[k] * r.exponent_sum(k + 1)).sum();
        if total != 0 {
            return Err(Error::Internal("derived map does not kill a relator".into()));
        }
    }
    let content = phi.iter().fold(0i64, |acc, &x| num_integer::gcd(acc, x.abs()));
    if content != 1 {
        return Err(Error::Internal("derived map onto the integers is not primitive".into()));
    }
    Ok(phi)
}

/// Presentation of a finite-index subgroup on its Schreier generators.
#[derive(Clone, Debug)]
pub struct SchreierPresentation {
    pub presentation: FinitePresentation,
    /// The non-tree (coset, generator) edge for each new generator, in
    /// canonical order; generator `i` is named `x{i}`.
    pub schreier_edges: Vec<(usize, usize)>,
}

/// Rewrite the relators of `p` through a completed coset table into a
/// presentation of the subgroup the table enumerates.
///
/// One relator is produced per (coset, relator) pair by tracing the
/// relator from the coset and recording the non-tree edges crossed;
/// results are freely reduced and empty rewrites are dropped, with no
/// further simplification.
pub fn reidemeister_schreier(
    p: &FinitePresentation,
    t: &CosetTable,
) -> Result<SchreierPresentation> {
    let tree = t.bfs_tree();
    let edges = t.schreier_edges(&tree);
    let mut index_of = std::collections::HashMap::new();
    for (i, &e) in edges.iter().enumerate() {
        index_of.insert(e, i as i32 + 1);
    }
    // There is always at least one non-tree edge: a table with n cosets
    // and m generators has n*m edges but only n-1 tree edges.
    let names: Vec<String> = (0..edges.len()).map(|i| format!("x{i}")).collect();
    let mut relators = Vec::new();
    for c in 0..t.n_cosets() {
        for r in &p.relators {
            let mut letters = Vec::new();
            let mut cur = c;
            for &l in r.letters() {
                if l > 0 {
                    if let Some(&idx) = index_of.get(&(cur, l as usize)) {
                        letters.push(idx);
                    }
                    cur = t.apply(cur, l);
                } else {
                    let d = t.apply(cur, l);
                    if let Some(&idx) = index_of.get(&(d, (-l) as usize)) {
                        letters.push(-idx);
                    }
                    cur = d;
                }
            }
            debug_assert_eq!(cur, c, "relators close on every coset");
            let w = Word::new(letters).free_reduce();
            if !w.is_empty() {
                relators.push(w);
            }
        }
    }
    Ok(SchreierPresentation {
        presentation: FinitePresentation::new(names, relators)?,
        schreier_edges: edges,
    })
}

/// Free rank of the abelianization of the subgroup a table enumerates:
/// the independent oracle used to cross-check cocycle certificates.
pub fn subgroup_first_betti(p: &FinitePresentation, t: &CosetTable) -> Result<usize> {
    let rs = reidemeister_schreier(p, t)?;
    Ok(abelianization(&rs.presentation)?.betti)
}
