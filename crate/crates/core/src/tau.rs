//! Expansion reports for families of finite-index subgroups.
//!
//! For each subgroup H of a finitely presented group G, the record
//! combines the exact edge expansion and the spectral gap of the coset
//! graph X(G/H) with the index data of H's normalizer N, and derives the
//! four scale-invariant quantities whose boundedness along a nested
//! family controls the family's expansion behaviour:
//!
//! * `q3` = lambda1 * [G:N]^2 * [G:H]^2
//! * `q4` = lambda1 * [G:N]^4 * [N:H]
//! * `q5` = h * [G:N] * [G:H]  (exact rational)
//! * `q6` = h * [G:N]^2 * sqrt([N:H])
//!
//! Cyclic towers (kernels of a fixed integer character reduced modulo a
//! growing n) additionally carry two independent witnesses per level: a
//! sine-profile test vector whose Rayleigh quotient bounds the gap from
//! above by O(1/n^2), and a half-interval residue cut bounding the
//! expansion from above — both checked against the exactly computed
//! quantities rather than trusted.

use crate::coset::{cyclic_tower, normalizer_indices, CosetTable, SubgroupSpec};
use crate::error::{Error, Result};
use crate::graph::{
    cheeger_auto, lambda1, rayleigh_quotient, schreier_graph, LabeledMultigraph,
};
use crate::homology::{phi_from_abelianization, reidemeister_schreier};
use crate::presentation::FinitePresentation;
use crate::{rat_string, Rat};
use serde::{Serialize, Serializer};

/// An exact rational rendered as "p/q" wherever it is serialized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Exact(pub Rat);

impl Serialize for Exact {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&rat_string(self.0))
    }
}

impl std::fmt::Display for Exact {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", rat_string(self.0))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct TauOptions {
    pub cheeger_ceiling: usize,
    pub spectral_tol: f64,
    pub threads: usize,
    pub coset_limit: usize,
}

impl Default for TauOptions {
    fn default() -> TauOptions {
        TauOptions {
            cheeger_ceiling: crate::graph::DEFAULT_CHEEGER_CEILING,
            spectral_tol: crate::graph::DEFAULT_SPECTRAL_TOL,
            threads: 0,
            coset_limit: crate::coset::DEFAULT_COSET_LIMIT,
        }
    }
}

/// One subgroup's expansion data. Quantities that are genuinely
/// unavailable (a one-vertex graph has no gap; an oversized graph has no
/// certified exact expansion) stay `None` rather than being guessed.
#[derive(Clone, Debug, Serialize)]
pub struct TauRecord {
    pub label: String,
    /// [G:H], the number of cosets.
    pub index: usize,
    /// [G:N] where N is the normalizer of H.
    pub normalizer_index: usize,
    /// [N:H].
    pub within_normalizer: usize,
    pub cheeger: Option<Exact>,
    pub cheeger_method: Option<String>,
    /// True when `cheeger` holds the certified exact value.
    pub exact: bool,
    /// When the exact value is unavailable: the elementary floor 2/|V|.
    pub cheeger_lower: Option<f64>,
    /// When the exact value is unavailable: the smaller of the spectral
    /// ceiling sqrt(4 |S| lambda1) and the cheapest single-vertex cut.
    pub cheeger_upper: Option<f64>,
    pub lambda1: Option<f64>,
    pub lambda_method: Option<String>,
    pub lambda_residual: Option<f64>,
    pub q3: Option<f64>,
    pub q4: Option<f64>,
    pub q5: Option<Exact>,
    pub q6: Option<f64>,
}

impl TauRecord {
    fn csv_row(&self) -> String {
        let opt_f = |v: &Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        let opt_e = |v: &Option<Exact>| v.map(|x| x.to_string()).unwrap_or_default();
        let opt_s = |v: &Option<String>| v.clone().unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.label,
            self.index,
            self.normalizer_index,
            self.within_normalizer,
            opt_e(&self.cheeger),
            opt_s(&self.cheeger_method),
            self.exact,
            opt_f(&self.cheeger_lower),
            opt_f(&self.cheeger_upper),
            opt_f(&self.lambda1),
            opt_s(&self.lambda_method),
            opt_f(&self.lambda_residual),
            opt_f(&self.q3),
            opt_f(&self.q4),
            opt_e(&self.q5),
            opt_f(&self.q6),
        )
    }

    const CSV_HEADER: &'static str = "label,index,normalizer_index,within_normalizer,\
cheeger,cheeger_method,exact,cheeger_lower,cheeger_upper,\
lambda1,lambda_method,lambda_residual,q3,q4,q5,q6";
}

#[derive(Clone, Debug, Serialize, Default)]
pub struct TauReport {
    pub rows: Vec<TauRecord>,
    /// Running-minimum curves for q3..q6 over the rows, index as the
    /// abscissa; quantities with no finite values are omitted.
    pub summaries: Vec<QuantitySummary>,
}

impl TauReport {
    /// Assemble a report: rows sorted by index (stable), minimum curves
    /// attached.
    pub fn new(mut rows: Vec<TauRecord>) -> TauReport {
        rows.sort_by_key(|r| r.index);
        let pts: Vec<(f64, &TauRecord)> =
            rows.iter().map(|r| (r.index as f64, r)).collect();
        let summaries = quantity_summaries(&pts);
        TauReport { rows, summaries }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(TauRecord::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.csv_row());
            out.push('\n');
        }
        out
    }
}

/// A named running-minimum curve for one of the derived quantities.
#[derive(Clone, Debug, Serialize)]
pub struct QuantitySummary {
    pub quantity: String,
    pub summary: SubsequenceSummary,
}

/// One named way of reading a numeric quantity off a record.
type QuantityProbe = (&'static str, fn(&TauRecord) -> Option<f64>);

fn quantity_summaries(rows: &[(f64, &TauRecord)]) -> Vec<QuantitySummary> {
    let series: [QuantityProbe; 4] = [
        ("q3", |r| r.q3),
        ("q4", |r| r.q4),
        ("q5", |r| r.q5.map(|e| *e.0.numer() as f64 / *e.0.denom() as f64)),
        ("q6", |r| r.q6),
    ];
    let mut out = Vec::new();
    for (name, getter) in series {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter_map(|&(x, r)| getter(r).map(|v| (x, v)))
            .collect();
        if !pts.is_empty() {
            out.push(QuantitySummary {
                quantity: name.to_string(),
                summary: bounded_subsequence_summary(&pts),
            });
        }
    }
    out
}

/// Running minima of q3..q6 over a report, failing loudly when there is
/// nothing to summarize. Purely descriptive finite-range evidence.
pub fn report_bounded_summaries(report: &TauReport) -> Result<Vec<QuantitySummary>> {
    if report.rows.is_empty() {
        return Err(Error::InvalidInput("the report has no rows".into()));
    }
    if report.summaries.is_empty() {
        return Err(Error::InvalidInput(
            "no finite quantities to summarize".into(),
        ));
    }
    Ok(report.summaries.clone())
}

/// Evaluate one subgroup given its coset table and a generating set.
pub fn evaluate_subgroup(
    label: &str,
    t: &CosetTable,
    sub: &SubgroupSpec,
    opts: &TauOptions,
) -> Result<TauRecord> {
    let g = schreier_graph(t);
    let (gn, nh) = normalizer_indices(t, sub)?;
    let index = t.n_cosets();

    let (lam, lambda_method, lambda_residual) = match lambda1(&g, opts.spectral_tol) {
        Ok(sg) => (Some(sg.lambda1), Some(sg.method.to_string()), Some(sg.residual)),
        Err(Error::Inapplicable(_)) => (None, None, None),
        Err(e) => return Err(e),
    };
    let (cheeger, cheeger_method) =
        match cheeger_auto(&g, opts.cheeger_ceiling, opts.threads, None) {
            Ok(r) => (Some(Exact(r.value)), Some(r.method.to_string())),
            Err(Error::TooLarge { .. }) | Err(Error::Inapplicable(_)) => (None, None),
            Err(e) => return Err(e),
        };
    // Without a certified exact value, report the bracket the audited
    // inequalities provide: 2/|V| from below; from above, the spectral
    // bound and the cheapest single-vertex cut.
    let exact = cheeger.is_some();
    let (cheeger_lower, cheeger_upper) = if exact || g.n_vertices < 2 {
        (None, None)
    } else {
        let lower = 2.0 / g.n_vertices as f64;
        let single_cut =
            g.nonloop_degree().into_iter().min().expect("nonempty graph") as f64;
        let upper = match lam {
            Some(l) => (4.0 * g.n_labels as f64 * l).sqrt().min(single_cut),
            None => single_cut,
        };
        (Some(lower), Some(upper))
    };

    let gn_f = gn as f64;
    let idx_f = index as f64;
    let q3 = lam.map(|l| l * gn_f * gn_f * idx_f * idx_f);
    let q4 = lam.map(|l| l * gn_f.powi(4) * nh as f64);
    let q5 = cheeger
        .map(|h| Exact(h.0 * Rat::from_integer(gn as i64) * Rat::from_integer(index as i64)));
    let q6 = cheeger.map(|h| {
        let hf = *h.0.numer() as f64 / *h.0.denom() as f64;
        hf * gn_f * gn_f * (nh as f64).sqrt()
    });

    Ok(TauRecord {
        label: label.to_string(),
        index,
        normalizer_index: gn,
        within_normalizer: nh,
        cheeger,
        cheeger_method,
        exact,
        cheeger_lower,
        cheeger_upper,
        lambda1: lam,
        lambda_method,
        lambda_residual,
        q3,
        q4,
        q5,
        q6,
    })
}

/// One level of a cyclic tower: the usual record plus the two witnesses.
#[derive(Clone, Debug, Serialize)]
pub struct TowerLevelReport {
    pub modulus: usize,
    pub max_jump: i64,
    #[serde(flatten)]
    pub record: TauRecord,
    /// Rayleigh quotient of the sine profile over the residues; an upper
    /// bound for lambda1 whenever present (modulus >= 3).
    pub witness_rayleigh: Option<f64>,
    /// Analytic envelope 8 pi^2 |S| J^2 / n^2 for the sine witness.
    pub witness_envelope: Option<f64>,
    /// Ratio of the half-interval residue cut; an upper bound for h.
    pub cut_ratio: Exact,
    /// Boundary size of the half-interval cut. Once the modulus clears
    /// twice the largest jump this is the same at every level.
    pub cut_boundary: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct TowerReport {
    /// The character used, indexed by the base subgroup's Schreier
    /// generators.
    pub phi: Vec<i64>,
    pub levels: Vec<TowerLevelReport>,
    /// True when some level's half-interval cut has a strictly larger
    /// boundary than the first level's. Expected false for moduli past
    /// twice the largest jump; flagged, never fatal, because very small
    /// moduli legitimately wrap.
    pub cut_boundary_grew: bool,
    /// Running-minimum curves for q3..q6, modulus as the abscissa.
    pub summaries: Vec<QuantitySummary>,
}

impl TowerReport {
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "modulus,max_jump,{},witness_rayleigh,witness_envelope,cut_ratio,cut_boundary\n",
            TauRecord::CSV_HEADER
        );
        let opt_f = |v: &Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        for l in &self.levels {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                l.modulus,
                l.max_jump,
                l.record.csv_row(),
                opt_f(&l.witness_rayleigh),
                opt_f(&l.witness_envelope),
                l.cut_ratio,
                l.cut_boundary,
            ));
        }
        out
    }
}

/// Derive an integer character for a base subgroup from its rewritten
/// presentation's abelianization (fails with `Inapplicable` when the
/// abelianization is finite).
pub fn derive_character(p: &FinitePresentation, base: &CosetTable) -> Result<Vec<i64>> {
    let rewritten = reidemeister_schreier(p, base)?;
    phi_from_abelianization(&rewritten.presentation)
}

/// The half-interval residue cut {v : 1 <= psi(v) <= floor(n/2)}: its
/// ratio (a certified upper bound for the expansion) and boundary size.
fn half_interval_cut(
    g: &LabeledMultigraph,
    psi: &[i64],
    n: usize,
) -> Result<(Exact, usize)> {
    let half = (n / 2) as i64;
    let inside: Vec<bool> = psi.iter().map(|&r| r >= 1 && r <= half).collect();
    let size = inside.iter().filter(|&&b| b).count();
    if size == 0 || 2 * size > g.n_vertices {
        return Err(Error::Internal("degenerate half-interval cut".into()));
    }
    let boundary = g.boundary_count(&inside);
    Ok((Exact(Rat::new(boundary as i64, size as i64)), boundary))
}

/// Evaluate a whole cyclic tower: for each modulus in `n_list`, build
/// the kernel's coset table and its record, then attach the witnesses.
/// `phi` may be omitted to derive the character from the abelianization.
/// Levels are computed on separate threads and reassembled in input
/// order, so the report is deterministic.
pub fn evaluate_cyclic_tower(
    p: &FinitePresentation,
    base: &CosetTable,
    phi: Option<Vec<i64>>,
    n_list: &[usize],
    opts: &TauOptions,
) -> Result<TowerReport> {
    let phi = match phi {
        Some(v) => v,
        None => derive_character(p, base)?,
    };
    if n_list.is_empty() {
        return Err(Error::InvalidInput("the tower needs at least one modulus".into()));
    }
    if let Some(&n) = n_list.iter().find(|&&n| n <= 2) {
        return Err(Error::InvalidInput(format!(
            "tower modulus {n} is too small: every modulus must be greater than 2"
        )));
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(
            "tower moduli must be strictly increasing".into(),
        ));
    }

    let level_report = |&n: &usize| -> Result<TowerLevelReport> {
        let level = cyclic_tower(p, base, &phi, n)?;
        let t = &level.table;
        let g = schreier_graph(t);
        let (cut_ratio, cut_boundary) = half_interval_cut(&g, &level.psi, n)?;

        // Exact expansion, using the witness cut to size the budget when
        // the graph is too large to enumerate.
        let half_vertices = (g.n_vertices / 2) as i64;
        let hinted = (cut_ratio.0 * Rat::from_integer(half_vertices)).floor().to_integer();
        let budget_hint = usize::try_from(hinted).ok().map(|b| b.max(1));
        let spec = SubgroupSpec::new("tower-level", t.schreier_generator_words());
        let mut record = {
            let mut rec = evaluate_subgroup(&format!("n={n}"), t, &spec, opts)?;
            if rec.cheeger.is_none() {
                if let Ok(r) = cheeger_auto(&g, opts.cheeger_ceiling, opts.threads, budget_hint) {
                    rec.cheeger = Some(Exact(r.value));
                    rec.cheeger_method = Some(r.method.to_string());
                    rec.exact = true;
                    rec.cheeger_lower = None;
                    rec.cheeger_upper = None;
                    let gn = rec.normalizer_index as i64;
                    let idx = rec.index as i64;
                    rec.q5 = Some(Exact(r.value * Rat::from_integer(gn) * Rat::from_integer(idx)));
                    let hf = *r.value.numer() as f64 / *r.value.denom() as f64;
                    rec.q6 = Some(
                        hf * (gn as f64) * (gn as f64) * (rec.within_normalizer as f64).sqrt(),
                    );
                }
                rec
            } else {
                rec
            }
        };

        // The cut ratio really is an upper bound for the exact value.
        if let Some(h) = record.cheeger {
            if h.0 > cut_ratio.0 {
                return Err(Error::Internal(
                    "half-interval cut is below the exact expansion".into(),
                ));
            }
        }

        // Sine witness over the residues (degenerate for modulus 2).
        let (witness_rayleigh, witness_envelope) = if n >= 3 {
            let f: Vec<f64> = level
                .psi
                .iter()
                .map(|&r| (2.0 * std::f64::consts::PI * r as f64 / n as f64).sin())
                .collect();
            let rq = rayleigh_quotient(&g, &f)?;
            let m = t.n_gens() as f64;
            let j = level.max_jump as f64;
            let envelope =
                8.0 * std::f64::consts::PI.powi(2) * m * j * j / (n as f64 * n as f64);
            if rq > envelope * (1.0 + 1e-9) {
                return Err(Error::Internal(
                    "sine witness exceeded its analytic envelope".into(),
                ));
            }
            if let Some(l) = record.lambda1 {
                if l > rq * (1.0 + 1e-7) + 1e-12 {
                    return Err(Error::Internal(
                        "computed gap exceeds the sine witness bound".into(),
                    ));
                }
            }
            (Some(rq), Some(envelope))
        } else {
            (None, None)
        };

        record.label = format!("n={n}");
        Ok(TowerLevelReport {
            modulus: n,
            max_jump: level.max_jump,
            record,
            witness_rayleigh,
            witness_envelope,
            cut_ratio,
            cut_boundary,
        })
    };

    let levels: Vec<Result<TowerLevelReport>> = if opts.threads == 1 || n_list.len() == 1 {
        n_list.iter().map(level_report).collect()
    } else {
        let level_report = &level_report;
        std::thread::scope(|scope| {
            let handles: Vec<_> = n_list
                .iter()
                .map(|n| scope.spawn(move || level_report(n)))
                .collect();
            handles.into_iter().map(|h| h.join().expect("level thread panicked")).collect()
        })
    };
    let levels = levels.into_iter().collect::<Result<Vec<TowerLevelReport>>>()?;
    let first_boundary = levels[0].cut_boundary;
    let cut_boundary_grew = levels.iter().any(|l| l.cut_boundary > first_boundary);
    let pts: Vec<(f64, &TauRecord)> =
        levels.iter().map(|l| (l.modulus as f64, &l.record)).collect();
    let summaries = quantity_summaries(&pts);
    Ok(TowerReport { phi, levels, cut_boundary_grew, summaries })
}

/// Running minima of a positive sequence and the log-log least-squares
/// slope over those minima. Purely descriptive: deciding whether a
/// subsequence is genuinely bounded is left to the reader.
#[derive(Clone, Debug, Serialize)]
pub struct SubsequenceSummary {
    /// (x, value) pairs where a new minimum was attained, x ascending.
    pub minima: Vec<(f64, f64)>,
    /// Least-squares slope of ln(value) against ln(x) over the minima;
    /// `None` with fewer than two minima.
    pub loglog_slope: Option<f64>,
}

pub fn bounded_subsequence_summary(points: &[(f64, f64)]) -> SubsequenceSummary {
    let mut sorted: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(x, y)| x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite())
        .collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite points"));
    let mut minima: Vec<(f64, f64)> = Vec::new();
    for (x, y) in sorted {
        if minima.last().is_none_or(|&(_, best)| y < best) {
            minima.push((x, y));
        }
    }
    let slope = if minima.len() >= 2 {
        let lx: Vec<f64> = minima.iter().map(|&(x, _)| x.ln()).collect();
        let ly: Vec<f64> = minima.iter().map(|&(_, y)| y.ln()).collect();
        let mx = lx.iter().sum::<f64>() / lx.len() as f64;
        let my = ly.iter().sum::<f64>() / ly.len() as f64;
        let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
        let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
        if sxx > 0.0 {
            Some(sxy / sxx)
        } else {
            None
        }
    } else {
        None
    };
    SubsequenceSummary { minima, loglog_slope: slope }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coset::enumerate_cosets;
    use crate::presentation::{parse_presentation, Word};

    fn z_table(n: usize) -> (FinitePresentation, CosetTable, SubgroupSpec) {
        let p = parse_presentation("gens: a\n").unwrap();
        let spec = SubgroupSpec::new("nz", vec![Word::new(vec![1; n])]);
        let t = enumerate_cosets(&p, &spec, 10 * n + 10).unwrap();
        (p, t, spec)
    }

    #[test]
    fn six_z_in_z_frozen_quantities() {
        let (_, t, spec) = z_table(6);
        let rec = evaluate_subgroup("6Z", &t, &spec, &TauOptions::default()).unwrap();
        assert_eq!(rec.index, 6);
        assert_eq!(rec.normalizer_index, 1);
        assert_eq!(rec.within_normalizer, 6);
        assert_eq!(rec.cheeger.unwrap().0, Rat::new(2, 3));
        assert_eq!(rec.q5.unwrap().0, Rat::from_integer(4));
        // lambda1(C_6) = 1 exactly, so q3 = 36 and q4 = 6.
        assert!((rec.lambda1.unwrap() - 1.0).abs() < 1e-9);
        assert!((rec.q3.unwrap() - 36.0).abs() < 1e-6);
        assert!((rec.q4.unwrap() - 6.0).abs() < 1e-6);
        assert!((rec.q6.unwrap() - (2.0 / 3.0) * 6f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn non_normal_subgroup_uses_both_indices() {
        // In S3 = <a,b | a^3, b^2, (ab)^2>, the subgroup <b> has index 3
        // and is self-normalizing.
        let p = parse_presentation("gens: a b\nrels: aaa bb abab\n").unwrap();
        let spec = SubgroupSpec::new("b", vec![Word::new(vec![2])]);
        let t = enumerate_cosets(&p, &spec, 100).unwrap();
        let rec = evaluate_subgroup("S3/<b>", &t, &spec, &TauOptions::default()).unwrap();
        assert_eq!(rec.index, 3);
        assert_eq!(rec.normalizer_index, 3);
        assert_eq!(rec.within_normalizer, 1);
        let l = rec.lambda1.unwrap();
        assert!((rec.q3.unwrap() - l * 81.0).abs() < 1e-9);
        assert!((rec.q4.unwrap() - l * 81.0).abs() < 1e-9);
        let h = rec.cheeger.unwrap().0;
        assert_eq!(rec.q5.unwrap().0, h * Rat::from_integer(9));
    }

    #[test]
    fn whole_group_has_no_expansion_data() {
        let p = parse_presentation("gens: a\n").unwrap();
        let spec = SubgroupSpec::whole_group(&p);
        let t = enumerate_cosets(&p, &spec, 100).unwrap();
        let rec = evaluate_subgroup("G", &t, &spec, &TauOptions::default()).unwrap();
        assert_eq!(rec.index, 1);
        assert!(rec.cheeger.is_none());
        assert!(rec.lambda1.is_none());
        assert!(rec.q3.is_none());
    }

    #[test]
    fn tower_over_z_matches_exact_values() {
        let p = parse_presentation("gens: a\n").unwrap();
        let base = enumerate_cosets(&p, &SubgroupSpec::whole_group(&p), 100).unwrap();
        let report = evaluate_cyclic_tower(
            &p,
            &base,
            Some(vec![1]),
            &[6, 12],
            &TauOptions::default(),
        )
        .unwrap();
        assert_eq!(report.levels.len(), 2);
        let l6 = &report.levels[0];
        assert_eq!(l6.record.index, 6);
        assert_eq!(l6.max_jump, 1);
        // The half-interval cut on a cycle is the optimal cut.
        assert_eq!(l6.cut_ratio.0, Rat::new(2, 3));
        assert_eq!(l6.record.cheeger.unwrap().0, Rat::new(2, 3));
        assert_eq!(l6.record.q5.unwrap().0, Rat::from_integer(4));
        let l12 = &report.levels[1];
        assert_eq!(l12.record.cheeger.unwrap().0, Rat::new(1, 3));
        assert_eq!(l12.cut_ratio.0, Rat::new(1, 3));
        assert_eq!(l12.record.q5.unwrap().0, Rat::from_integer(4));
        // Witnesses bracket the true gap.
        for l in &report.levels {
            let lam = l.record.lambda1.unwrap();
            assert!(lam <= l.witness_rayleigh.unwrap() * (1.0 + 1e-9));
            assert!(l.witness_rayleigh.unwrap() <= l.witness_envelope.unwrap());
        }
    }

    #[test]
    fn derived_character_for_the_unknot_complement_is_trivialized() {
        // Z = <a|>: the derived character on the whole group's single
        // Schreier generator is [1].
        let p = parse_presentation("gens: a\n").unwrap();
        let base = enumerate_cosets(&p, &SubgroupSpec::whole_group(&p), 100).unwrap();
        assert_eq!(derive_character(&p, &base).unwrap(), vec![1]);
    }

    #[test]
    fn derived_character_for_the_trefoil_group() {
        let p = parse_presentation("gens: x y\nrels: xxYYY\n").unwrap();
        let base = enumerate_cosets(&p, &SubgroupSpec::whole_group(&p), 100).unwrap();
        assert_eq!(derive_character(&p, &base).unwrap(), vec![3, 2]);
        let report = evaluate_cyclic_tower(
            &p,
            &base,
            None,
            &[5, 7],
            &TauOptions::default(),
        )
        .unwrap();
        assert_eq!(report.phi, vec![3, 2]);
        assert_eq!(report.levels[0].record.index, 5);
        assert_eq!(report.levels[0].max_jump, 3);
        assert_eq!(report.levels[1].record.index, 7);
    }

    #[test]
    fn tower_reports_are_deterministic_across_threads() {
        let p = parse_presentation("gens: a\n").unwrap();
        let base = enumerate_cosets(&p, &SubgroupSpec::whole_group(&p), 100).unwrap();
        let serial = TauOptions { threads: 1, ..TauOptions::default() };
        let parallel = TauOptions { threads: 4, ..TauOptions::default() };
        let a = evaluate_cyclic_tower(&p, &base, Some(vec![1]), &[6, 10, 14], &serial).unwrap();
        let b = evaluate_cyclic_tower(&p, &base, Some(vec![1]), &[6, 10, 14], &parallel).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert_eq!(a.to_csv(), b.to_csv());
    }

    #[test]
    fn decaying_quantity_has_negative_unit_slope() {
        let p = parse_presentation("gens: a\n").unwrap();
        let base = enumerate_cosets(&p, &SubgroupSpec::whole_group(&p), 100).unwrap();
        let report = evaluate_cyclic_tower(
            &p,
            &base,
            Some(vec![1]),
            &[6, 12, 24, 48],
            &TauOptions::default(),
        )
        .unwrap();
        // q4 = lambda1 * n for this family, which decays like 1/n.
        let pts: Vec<(f64, f64)> = report
            .levels
            .iter()
            .map(|l| (l.modulus as f64, l.record.q4.unwrap()))
            .collect();
        let summary = bounded_subsequence_summary(&pts);
        assert_eq!(summary.minima.len(), 4);
        let slope = summary.loglog_slope.unwrap();
        assert!(slope < -0.85 && slope > -1.1, "slope {slope}");
        // q3 = lambda1 * n^2 rises toward its limit, so only the first
        // point is a running minimum and no slope is reported.
        let pts3: Vec<(f64, f64)> = report
            .levels
            .iter()
            .map(|l| (l.modulus as f64, l.record.q3.unwrap()))
            .collect();
        let s3 = bounded_subsequence_summary(&pts3);
        assert_eq!(s3.minima.len(), 1);
        assert!(s3.loglog_slope.is_none());
    }

    #[test]
    fn csv_export_has_one_row_per_record() {
        let (_, t, spec) = z_table(6);
        let rec = evaluate_subgroup("6Z", &t, &spec, &TauOptions::default()).unwrap();
        let report = TauReport::new(vec![rec]);
        let csv = report.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("label,index,"));
        assert!(lines[1].starts_with("6Z,6,1,6,2/3,exhaustive,true,,,"));
    }

    #[test]
    fn uncertifiable_graph_reports_a_bracket_instead() {
        // Dense circulant on 100 vertices: the bounded-cut search cannot
        // certify a minimum within its budget, so the record carries the
        // elementary bracket and is marked inexact.
        let text = format!("gens: a b\nrels: {} Baa\n", "a".repeat(100));
        let p = parse_presentation(&text).unwrap();
        let spec = SubgroupSpec::new("trivial", vec![]);
        let t = enumerate_cosets(&p, &spec, 1000).unwrap();
        let rec = evaluate_subgroup("dense100", &t, &spec, &TauOptions::default()).unwrap();
        assert_eq!(rec.index, 100);
        assert!(!rec.exact);
        assert!(rec.cheeger.is_none());
        assert!(rec.q5.is_none());
        let lower = rec.cheeger_lower.unwrap();
        let upper = rec.cheeger_upper.unwrap();
        assert_eq!(lower, 0.02);
        // True value is 6/50 = 0.12 (a contiguous arc of 50).
        assert!(lower < 0.12 && 0.12 < upper, "bracket [{lower}, {upper}]");
        assert!(upper <= 4.0);
        // The gap is still reported exactly as computed.
        assert!(rec.lambda1.is_some());
    }

    #[test]
    fn degenerate_and_empty_reports_are_rejected_by_the_summary() {
        let empty = TauReport::new(vec![]);
        assert!(report_bounded_summaries(&empty).is_err());
        let p = parse_presentation("gens: a\n").unwrap();
        let spec = SubgroupSpec::whole_group(&p);
        let t = enumerate_cosets(&p, &spec, 100).unwrap();
        let rec = evaluate_subgroup("G", &t, &spec, &TauOptions::default()).unwrap();
        // A single degenerate record has no finite quantities at all.
        let degenerate = TauReport::new(vec![rec]);
        assert!(report_bounded_summaries(&degenerate).is_err());
        // A healthy report hands back its four curves.
        let (_, t6, spec6) = z_table(6);
        let good = TauReport::new(vec![
            evaluate_subgroup("6Z", &t6, &spec6, &TauOptions::default()).unwrap(),
        ]);
        let curves = report_bounded_summaries(&good).unwrap();
        assert_eq!(curves.len(), 4);
        assert_eq!(curves[0].quantity, "q3");
    }

    #[test]
    fn towers_insist_on_usable_increasing_moduli() {
        let p = parse_presentation("gens: a\n").unwrap();
        let base = enumerate_cosets(&p, &SubgroupSpec::whole_group(&p), 100).unwrap();
        let opts = TauOptions::default();
        let small = evaluate_cyclic_tower(&p, &base, Some(vec![1]), &[2, 6], &opts);
        assert!(matches!(small, Err(Error::InvalidInput(_))), "{small:?}");
        let unordered = evaluate_cyclic_tower(&p, &base, Some(vec![1]), &[12, 6], &opts);
        assert!(matches!(unordered, Err(Error::InvalidInput(_))), "{unordered:?}");
    }
}
