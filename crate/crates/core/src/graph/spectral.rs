//! Smallest nonzero Laplacian eigenvalue and related certificates.
//!
//! The Laplacian is D - A on the underlying multigraph; loops cancel out
//! of it entirely. Small graphs go through a dense symmetric
//! eigensolver; larger ones use a restarted Lanczos iteration on a
//! rank-one-shifted operator that moves the constant eigenvector out of
//! the way. Every returned value carries an a-posteriori residual, and
//! values whose residual is out of tolerance are errors, not answers.

use super::LabeledMultigraph;
use crate::error::{Error, Result};
use crate::Rat;
use nalgebra::{DMatrix, SymmetricEigen};

pub const DEFAULT_SPECTRAL_TOL: f64 = 1e-9;
/// Largest vertex count sent to the dense eigensolver by default.
pub const DENSE_LIMIT: usize = 2000;
const MAX_RESTARTS: usize = 60;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralGap {
    pub lambda1: f64,
    /// ||L v - lambda v|| / (||v|| * lambda) for the returned pair.
    pub residual: f64,
    pub method: &'static str,
}

fn precheck(g: &LabeledMultigraph) -> Result<()> {
    if g.n_vertices < 2 {
        return Err(Error::Inapplicable(
            "the spectral gap needs at least two vertices".into(),
        ));
    }
    if !g.is_connected() {
        return Err(Error::Inapplicable(
            "the graph is disconnected, so the gap degenerates to zero".into(),
        ));
    }
    Ok(())
}

fn laplacian_apply(g: &LabeledMultigraph, x: &[f64], y: &mut [f64]) {
    y.fill(0.0);
    for e in &g.edges {
        if e.tail != e.head {
            let d = x[e.tail] - x[e.head];
            y[e.tail] += d;
            y[e.head] -= d;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn project_out_constant(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    for x in v.iter_mut() {
        *x -= mean;
    }
}

/// Smallest nonzero Laplacian eigenvalue, dense or iterative depending
/// on size.
pub fn lambda1(g: &LabeledMultigraph, tol: f64) -> Result<SpectralGap> {
    precheck(g)?;
    if g.n_vertices <= DENSE_LIMIT {
        lambda1_dense(g, tol)
    } else {
        lambda1_lanczos(g, tol)
    }
}

pub fn lambda1_dense(g: &LabeledMultigraph, tol: f64) -> Result<SpectralGap> {
    precheck(g)?;
    let n = g.n_vertices;
    let mut l = DMatrix::<f64>::zeros(n, n);
    for e in &g.edges {
        if e.tail != e.head {
            l[(e.tail, e.tail)] += 1.0;
            l[(e.head, e.head)] += 1.0;
            l[(e.tail, e.head)] -= 1.0;
            l[(e.head, e.tail)] -= 1.0;
        }
    }
    let eig = SymmetricEigen::new(l);
    // The decomposition's eigenvalue array can come back misaligned with its
    // eigenvector columns when the spectrum is (nearly) degenerate, so the
    // returned pairing is not trusted: each column is re-scored by its own
    // Rayleigh quotient against the graph operator, and columns are ranked by
    // that score instead.
    let mut scratch = vec![0.0; n];
    let mut scored: Vec<(f64, usize)> = (0..n)
        .map(|j| {
            let v: Vec<f64> = eig.eigenvectors.column(j).iter().copied().collect();
            laplacian_apply(g, &v, &mut scratch);
            (dot(&v, &scratch) / dot(&v, &v), j)
        })
        .collect();
    scored.sort_by(|a, b| a.partial_cmp(b).expect("Rayleigh quotients are finite"));
    let scale = scored.iter().fold(1.0f64, |m, &(r, _)| m.max(r.abs()));
    if scored[0].0.abs() > 1e-7 * scale {
        return Err(Error::Internal(format!(
            "kernel eigenvalue came out as {}, expected zero",
            scored[0].0
        )));
    }
    let mut v: Vec<f64> = eig.eigenvectors.column(scored[1].1).iter().copied().collect();
    project_out_constant(&mut v);
    let vn = norm(&v);
    // Arranged so that a NaN norm is rejected as well.
    if vn.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::Internal(
            "candidate gap eigenvector collapsed onto the constant vector".into(),
        ));
    }
    let mut lv = vec![0.0; n];
    laplacian_apply(g, &v, &mut lv);
    let lam = dot(&v, &lv) / (vn * vn);
    let resid: f64 = lv
        .iter()
        .zip(&v)
        .map(|(a, b)| (a - lam * b) * (a - lam * b))
        .sum::<f64>()
        .sqrt()
        / (vn * lam.max(f64::MIN_POSITIVE));
    let gap = SpectralGap { lambda1: lam, residual: resid, method: "dense" };
    check_residual(&gap, tol)?;
    Ok(gap)
}

fn check_residual(gap: &SpectralGap, tol: f64) -> Result<()> {
    if !gap.lambda1.is_finite() || gap.lambda1 < 0.0 {
        return Err(Error::Internal(format!(
            "eigensolver produced an invalid gap {}",
            gap.lambda1
        )));
    }
    if gap.residual > (10.0 * tol).max(1e-10) {
        return Err(Error::Internal(format!(
            "spectral residual {} exceeds tolerance {}",
            gap.residual, tol
        )));
    }
    Ok(())
}

/// Deterministic pseudo-random start vector; integer arithmetic only, so
/// it is identical on every platform.
fn start_vector(n: usize) -> Vec<f64> {
    let mut state: u64 = 0x9E37_79B9_7F4A_7C15;
    let mut v = Vec::with_capacity(n);
    for _ in 0..n {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        v.push(((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5);
    }
    v
}

/// Matrix-free restarted Lanczos with full reorthogonalization.
///
/// Works on L + sigma * (J/n) with sigma above the spectral radius, so
/// the constant vector (eigenvalue 0) is lifted to sigma and the target
/// becomes the smallest Ritz value.
pub fn lambda1_lanczos(g: &LabeledMultigraph, tol: f64) -> Result<SpectralGap> {
    precheck(g)?;
    let n = g.n_vertices;
    let d_max = *g.nonloop_degree().iter().max().unwrap() as f64;
    let sigma = 2.0 * d_max + 1.0;
    let apply = |x: &[f64], y: &mut [f64]| {
        laplacian_apply(g, x, y);
        let mean = x.iter().sum::<f64>() / n as f64;
        for yi in y.iter_mut() {
            *yi += sigma * mean;
        }
    };
    let m = n.clamp(2, 200);

    let mut current = start_vector(n);
    project_out_constant(&mut current);
    let nv = norm(&current);
    for x in current.iter_mut() {
        *x /= nv;
    }

    for _restart in 0..MAX_RESTARTS {
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let mut v = current.clone();
        let mut v_prev = vec![0.0; n];
        let mut beta_prev = 0.0f64;
        let mut w = vec![0.0; n];
        for _j in 0..m {
            apply(&v, &mut w);
            let alpha = dot(&v, &w);
            for i in 0..n {
                w[i] -= alpha * v[i] + beta_prev * v_prev[i];
            }
            project_out_constant(&mut w);
            // Full reorthogonalization, twice for safety.
            for _pass in 0..2 {
                for u in &basis {
                    let c = dot(u, &w);
                    for i in 0..n {
                        w[i] -= c * u[i];
                    }
                }
                let c = dot(&v, &w);
                for i in 0..n {
                    w[i] -= c * v[i];
                }
            }
            alphas.push(alpha);
            basis.push(v.clone());
            let beta = norm(&w);
            if beta < 1e-13 * sigma || basis.len() == m {
                break;
            }
            betas.push(beta);
            beta_prev = beta;
            v_prev = v;
            v = w.iter().map(|x| x / beta).collect();
        }

        let k = alphas.len();
        let mut t = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = alphas[i];
            if i + 1 < k {
                t[(i, i + 1)] = betas[i];
                t[(i + 1, i)] = betas[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let mut which = 0usize;
        for i in 1..k {
            if eig.eigenvalues[i] < eig.eigenvalues[which] {
                which = i;
            }
        }
        let theta = eig.eigenvalues[which];
        let mut y = vec![0.0; n];
        for (bi, b) in basis.iter().enumerate() {
            let c = eig.eigenvectors[(bi, which)];
            for i in 0..n {
                y[i] += c * b[i];
            }
        }
        project_out_constant(&mut y);
        let yn = norm(&y);
        if yn < 1e-300 {
            return Err(Error::Internal("Lanczos iterate collapsed to zero".into()));
        }
        for x in y.iter_mut() {
            *x /= yn;
        }
        let mut ly = vec![0.0; n];
        laplacian_apply(g, &y, &mut ly);
        let lam = dot(&y, &ly);
        let resid: f64 = ly
            .iter()
            .zip(&y)
            .map(|(a, b)| (a - lam * b) * (a - lam * b))
            .sum::<f64>()
            .sqrt();
        if resid <= tol * lam.max(1e-12) {
            let gap = SpectralGap {
                lambda1: lam,
                residual: resid / lam.max(f64::MIN_POSITIVE),
                method: "lanczos",
            };
            check_residual(&gap, tol)?;
            return Ok(gap);
        }
        current = y;
        let _ = theta;
    }
    Err(Error::Internal(
        "Lanczos did not reach the requested tolerance".into(),
    ))
}

/// Rayleigh quotient of a test function after centering: an upper bound
/// for the spectral gap.
pub fn rayleigh_quotient(g: &LabeledMultigraph, f: &[f64]) -> Result<f64> {
    if f.len() != g.n_vertices {
        return Err(Error::InvalidInput(
            "test function length differs from the vertex count".into(),
        ));
    }
    let mut fc = f.to_vec();
    project_out_constant(&mut fc);
    let den = dot(&fc, &fc);
    if den < 1e-300 {
        return Err(Error::InvalidInput(
            "test function is constant; its Rayleigh quotient is undefined".into(),
        ));
    }
    let num: f64 = g
        .edges
        .iter()
        .map(|e| {
            let d = fc[e.tail] - fc[e.head];
            d * d
        })
        .sum();
    Ok(num / den)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

/// The always-true comparisons every connected coset graph must satisfy:
/// the gap is at least 1/n^2, the expansion at least 2/n, and expansion
/// is controlled by the gap through the label count.
pub fn audit_elementary_bounds(
    g: &LabeledMultigraph,
    lambda1: f64,
    h: Rat,
) -> Vec<BoundCheck> {
    let n = g.n_vertices as f64;
    let h_f = *h.numer() as f64 / *h.denom() as f64;
    let mut checks = Vec::new();
    checks.push(BoundCheck {
        name: "gap_vs_vertex_count",
        lhs: lambda1,
        rhs: 1.0 / (n * n),
        ok: lambda1 + 1e-12 >= 1.0 / (n * n),
    });
    checks.push(BoundCheck {
        name: "expansion_vs_vertex_count",
        lhs: h_f,
        rhs: 2.0 / n,
        ok: h >= Rat::new(2, g.n_vertices as i64),
    });
    let degree_scale = if g.n_labels >= 1 {
        4.0 * g.n_labels as f64
    } else {
        2.0 * *g.nonloop_degree().iter().max().unwrap_or(&1) as f64
    };
    let rhs = (degree_scale * lambda1).sqrt();
    checks.push(BoundCheck {
        name: "expansion_vs_gap",
        lhs: h_f,
        rhs,
        ok: h_f <= rhs * (1.0 + 1e-6) + 1e-12,
    });
    checks
}

#[cfg(test)]
mod tests {
    use super::super::tests::cycle_graph;
    use super::super::{cheeger_exact, graph_from_permutations};
    use super::*;

    fn circulant(n: usize, jumps: &[usize]) -> LabeledMultigraph {
        let perms: Vec<Vec<usize>> = jumps
            .iter()
            .map(|&j| (0..n).map(|v| (v + j) % n).collect())
            .collect();
        graph_from_permutations(n, &perms).unwrap()
    }

    fn circulant_gap_oracle(n: usize, jumps: &[usize]) -> f64 {
        // Eigenvalues of a circulant Laplacian in closed form.
        let mut best = f64::INFINITY;
        for j in 1..n {
            let lam: f64 = jumps
                .iter()
                .map(|&t| 2.0 - 2.0 * (2.0 * std::f64::consts::PI * (j * t) as f64 / n as f64).cos())
                .sum();
            best = best.min(lam);
        }
        best
    }

    #[test]
    fn hexagon_gap_is_one() {
        let g = cycle_graph(6);
        let s = lambda1(&g, DEFAULT_SPECTRAL_TOL).unwrap();
        assert!((s.lambda1 - 1.0).abs() < 1e-9, "{}", s.lambda1);
        assert!(s.residual < 1e-8);
        assert_eq!(s.method, "dense");
    }

    #[test]
    fn hexagon_with_double_jump_has_gap_four() {
        let g = circulant(6, &[1, 2]);
        let s = lambda1(&g, DEFAULT_SPECTRAL_TOL).unwrap();
        assert!((s.lambda1 - 4.0).abs() < 1e-9, "{}", s.lambda1);
    }

    #[test]
    fn complete_graph_on_five_vertices() {
        let g = circulant(5, &[1, 2]);
        let s = lambda1(&g, DEFAULT_SPECTRAL_TOL).unwrap();
        assert!((s.lambda1 - 5.0).abs() < 1e-9, "{}", s.lambda1);
    }

    #[test]
    fn single_vertex_has_no_gap() {
        let g = LabeledMultigraph::new(1, 1, vec![]).unwrap();
        assert!(matches!(
            lambda1(&g, DEFAULT_SPECTRAL_TOL),
            Err(Error::Inapplicable(_))
        ));
    }

    #[test]
    fn lanczos_agrees_with_dense_on_hexagon() {
        let g = cycle_graph(6);
        let a = lambda1_dense(&g, DEFAULT_SPECTRAL_TOL).unwrap();
        let b = lambda1_lanczos(&g, DEFAULT_SPECTRAL_TOL).unwrap();
        assert!((a.lambda1 - b.lambda1).abs() < 1e-8);
    }

    #[test]
    fn lanczos_matches_circulant_formula() {
        let n = 600;
        let g = circulant(n, &[1, 7]);
        let expect = circulant_gap_oracle(n, &[1, 7]);
        let s = lambda1_lanczos(&g, DEFAULT_SPECTRAL_TOL).unwrap();
        assert!(
            (s.lambda1 - expect).abs() < 1e-7 * expect.max(1.0),
            "got {} want {expect}",
            s.lambda1
        );
    }

    #[test]
    fn rayleigh_of_exact_eigenvector() {
        let g = circulant(6, &[1]);
        let f: Vec<f64> = (0..6)
            .map(|k| (2.0 * std::f64::consts::PI * k as f64 / 6.0).sin())
            .collect();
        let r = rayleigh_quotient(&g, &f).unwrap();
        assert!((r - 1.0).abs() < 1e-12, "{r}");
    }

    #[test]
    fn rayleigh_rejects_constants() {
        let g = cycle_graph(4);
        assert!(rayleigh_quotient(&g, &[3.0; 4]).is_err());
    }

    #[test]
    fn elementary_bounds_hold_on_cycles() {
        for n in [3usize, 6, 10, 17] {
            let g = cycle_graph(n);
            let s = lambda1(&g, DEFAULT_SPECTRAL_TOL).unwrap();
            let h = cheeger_exact(&g, 30, 1).unwrap();
            for check in audit_elementary_bounds(&g, s.lambda1, h.value) {
                assert!(check.ok, "{} failed on C_{n}: {} vs {}", check.name, check.lhs, check.rhs);
            }
        }
    }
}

