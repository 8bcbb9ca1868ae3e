//! Tools for studying finite quotients of finitely presented groups through
//! the graphs they act on.
//!
//! The pipeline starts from a [`presentation::FinitePresentation`] and a
//! finite-index subgroup given by generator words, runs Todd-Coxeter coset
//! enumeration ([`coset`]), and builds the labeled Schreier graph of the
//! coset action ([`graph`]). On that graph it computes exact Cheeger
//! constants by subset search, Laplacian spectral gaps with residual
//! certificates, and forest collapses onto quotient Cayley graphs. The
//! [`homology`] module provides an independent integer-homology oracle
//! (coset-table rewriting plus Smith normal form), [`cocycle`] builds
//! transportable certificates of infinite abelianization from sparse cuts,
//! and [`tau`] assembles everything into per-subgroup reports for families
//! and cyclic towers.

pub mod cocycle;
pub mod coset;
pub mod error;
pub mod graph;
pub mod homology;
pub mod presentation;
pub mod tau;

pub use error::{Error, Result};

/// Exact rational used for Cheeger constants and derived products.
///
/// All quantities that gate strict-inequality decisions stay in this type;
/// numerators and denominators are bounded by edge counts of desk-size
/// graphs, far from overflow.
pub type Rat = num_rational::Ratio<i64>;

/// Render a rational for reports: integers print bare, others as "a/b".
pub fn rat_string(r: Rat) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}
