//! Command-line front end: coset graphs, expansion metrics, cyclic
//! towers, infinite-abelianization certificates, and integer homology
//! for finitely presented groups.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use taukit::cocycle::{
    certify_infinite_abelianization, verify_certificate, Certificate, CertifyOptions,
    SubgroupSource,
};
use taukit::coset::{
    enumerate_cosets, CosetTable, SubgroupSpec, DEFAULT_COSET_LIMIT,
};
use taukit::graph::{
    audit_elementary_bounds, schreier_graph, DEFAULT_CHEEGER_CEILING, DEFAULT_SPECTRAL_TOL,
};
use taukit::homology::{abelianization, reidemeister_schreier, subgroup_first_betti};
use taukit::presentation::{parse_presentation, parse_subgroup_words, FinitePresentation};
use taukit::tau::{evaluate_cyclic_tower, evaluate_subgroup, TauOptions, TauRecord};
use taukit::{Error, Result};

#[derive(Parser)]
#[command(
    name = "taukit",
    version,
    about = "Exact expansion, spectral, and homology data for coset graphs of finitely presented groups"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Enumerate cosets and emit the coset graph.
    Graph(GraphArgs),
    /// Expansion, spectral gap, normalizer indices, and the derived
    /// quantities for one subgroup.
    Metrics(MetricsArgs),
    /// Evaluate a cyclic tower of kernels of an integer character
    /// reduced modulo each requested n.
    Tower(TowerArgs),
    /// Produce a verifiable certificate that a subgroup has infinite
    /// abelianization.
    Certify(CertifyArgs),
    /// Re-check a certificate from its serialized form.
    Verify(VerifyArgs),
    /// Abelianization invariants of the group and, optionally, of a
    /// subgroup via rewriting.
    Homology(HomologyArgs),
}

#[derive(Args)]
struct CommonInput {
    /// Presentation file ("-" for stdin): `gens:` and `rels:` lines.
    #[arg(long)]
    presentation: PathBuf,
    /// File of subgroup generator words, one per line; omit for the
    /// whole group.
    #[arg(long)]
    subgroup: Option<PathBuf>,
    /// Abort coset enumeration beyond this many live cosets.
    #[arg(long, default_value_t = DEFAULT_COSET_LIMIT)]
    coset_limit: usize,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GraphFormat {
    /// tail,head,label rows.
    Csv,
    /// Graphviz DOT.
    Dot,
    /// Coset table rows (coset x generator).
    Table,
}

#[derive(Args)]
struct GraphArgs {
    #[command(flatten)]
    common: CommonInput,
    #[arg(long, value_enum, default_value_t = GraphFormat::Csv)]
    format: GraphFormat,
}

#[derive(Args)]
struct MetricsArgs {
    #[command(flatten)]
    common: CommonInput,
    /// Largest vertex count for exhaustive expansion search.
    #[arg(long, default_value_t = DEFAULT_CHEEGER_CEILING)]
    ceiling: usize,
    /// Spectral residual tolerance.
    #[arg(long, default_value_t = DEFAULT_SPECTRAL_TOL)]
    tol: f64,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Allow a search ceiling above the built-in cap.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct TowerArgs {
    #[command(flatten)]
    common: CommonInput,
    /// Integer character on the base subgroup's Schreier generators:
    /// "auto" or a comma-separated list like "3,2".
    #[arg(long, default_value = "auto")]
    phi: String,
    /// Comma-separated moduli, e.g. "6,12,24,48".
    #[arg(long)]
    n_list: String,
    #[arg(long, default_value_t = DEFAULT_CHEEGER_CEILING)]
    ceiling: usize,
    #[arg(long, default_value_t = DEFAULT_SPECTRAL_TOL)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Allow a search ceiling above the built-in cap.
    #[arg(long)]
    force: bool,
    /// Emit CSV rows instead of JSON.
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    common: CommonInput,
    /// Certify the kernel of (phi mod n) under the base subgroup instead
    /// of the subgroup itself; requires --phi.
    #[arg(long)]
    tower_n: Option<usize>,
    /// Character for --tower-n: "auto" or a comma-separated list.
    #[arg(long, default_value = "auto")]
    phi: String,
    #[arg(long, default_value_t = DEFAULT_CHEEGER_CEILING)]
    ceiling: usize,
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Allow a search ceiling above the built-in cap.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Certificate JSON produced by `certify`.
    #[arg(long)]
    certificate: PathBuf,
    #[arg(long, default_value_t = DEFAULT_COSET_LIMIT)]
    coset_limit: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct HomologyArgs {
    #[command(flatten)]
    common: CommonInput,
}

fn read_to_string(path: &Path) -> Result<String> {
    if path == Path::new("-") {
        let mut buf = String::new();
        std::io::stdin().read_to_string(&mut buf)?;
        Ok(buf)
    } else {
        Ok(std::fs::read_to_string(path)?)
    }
}

fn load_presentation(path: &Path) -> Result<FinitePresentation> {
    parse_presentation(&read_to_string(path)?)
}

/// Subgroup words as written (for provenance) plus their parsed form.
fn load_subgroup(
    p: &FinitePresentation,
    path: &Option<PathBuf>,
) -> Result<(Vec<String>, SubgroupSpec)> {
    match path {
        None => Ok((Vec::new(), SubgroupSpec::whole_group(p))),
        Some(path) => {
            let text = read_to_string(path)?;
            let words = parse_subgroup_words(&text, p)?;
            let texts: Vec<String> = text
                .lines()
                .map(|l| match l.find('#') {
                    Some(i) => &l[..i],
                    None => l,
                })
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(str::to_string)
                .collect();
            Ok((texts, SubgroupSpec::new("subgroup", words)))
        }
    }
}

fn enumerate(
    p: &FinitePresentation,
    sub: &SubgroupSpec,
    limit: usize,
) -> Result<CosetTable> {
    enumerate_cosets(p, sub, limit)
}

fn parse_phi(text: &str) -> Result<Option<Vec<i64>>> {
    if text == "auto" {
        return Ok(None);
    }
    let vals: std::result::Result<Vec<i64>, _> =
        text.split(',').map(|t| t.trim().parse::<i64>()).collect();
    match vals {
        Ok(v) if !v.is_empty() => Ok(Some(v)),
        _ => Err(Error::InvalidInput(format!(
            "phi must be \"auto\" or a comma-separated integer list, got {text:?}"
        ))),
    }
}

fn parse_n_list(text: &str) -> Result<Vec<usize>> {
    let vals: std::result::Result<Vec<usize>, _> =
        text.split(',').map(|t| t.trim().parse::<usize>()).collect();
    match vals {
        Ok(v) if !v.is_empty() => Ok(v),
        _ => Err(Error::InvalidInput(format!(
            "n-list must be a comma-separated list of moduli, got {text:?}"
        ))),
    }
}

fn write_out(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

/// Guard rails shared by the search-heavy commands: the exhaustive
/// bipartition search is exponential in the vertex count, so raising its
/// ceiling past the built-in cap must be an explicit choice, and a
/// non-positive residual tolerance could never certify anything.
fn validate_limits(ceiling: usize, tol: Option<f64>, force: bool) -> Result<()> {
    if let Some(t) = tol {
        // The comparison is arranged so that NaN is rejected too.
        if t.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::InvalidInput(format!(
                "spectral tolerance must be positive, got {t}"
            )));
        }
    }
    if ceiling > DEFAULT_CHEEGER_CEILING && !force {
        return Err(Error::InvalidInput(format!(
            "search ceiling {ceiling} exceeds the cap of {DEFAULT_CHEEGER_CEILING}; \
             pass --force to run an exhaustive search this large"
        )));
    }
    Ok(())
}

fn record_json(rec: &TauRecord) -> serde_json::Value {
    serde_json::to_value(rec).expect("record serializes")
}

fn cmd_graph(a: &GraphArgs) -> Result<()> {
    let p = load_presentation(&a.common.presentation)?;
    let (_, sub) = load_subgroup(&p, &a.common.subgroup)?;
    let t = enumerate(&p, &sub, a.common.coset_limit)?;
    let g = schreier_graph(&t);
    match &a.common.out {
        // File mode: --out names a directory receiving both machine
        // formats; the vertex/edge counts go to stdout.
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join("graph.csv"), g.to_csv())?;
            std::fs::write(dir.join("graph.dot"), g.to_dot(&p.generator_names))?;
            if a.format == GraphFormat::Table {
                std::fs::write(dir.join("table.csv"), t.to_csv(&p))?;
            }
            println!("vertices: {}", g.n_vertices);
            println!("edges: {}", g.n_edges());
        }
        // Stream mode: the chosen format alone goes to stdout so pipes
        // stay clean; the counts go to stderr.
        None => {
            let content = match a.format {
                GraphFormat::Csv => g.to_csv(),
                GraphFormat::Dot => g.to_dot(&p.generator_names),
                GraphFormat::Table => t.to_csv(&p),
            };
            print!("{content}");
            eprintln!("vertices: {}, edges: {}", g.n_vertices, g.n_edges());
        }
    }
    Ok(())
}

fn cmd_metrics(a: &MetricsArgs) -> Result<()> {
    validate_limits(a.ceiling, Some(a.tol), a.force)?;
    let p = load_presentation(&a.common.presentation)?;
    let (_, sub) = load_subgroup(&p, &a.common.subgroup)?;
    let t = enumerate(&p, &sub, a.common.coset_limit)?;
    let opts = TauOptions {
        cheeger_ceiling: a.ceiling,
        spectral_tol: a.tol,
        threads: a.threads,
        coset_limit: a.common.coset_limit,
    };
    let rec = evaluate_subgroup(&sub.label, &t, &sub, &opts)?;
    let g = schreier_graph(&t);
    let bounds = match (rec.lambda1, rec.cheeger) {
        (Some(l), Some(h)) => audit_elementary_bounds(&g, l, h.0)
            .into_iter()
            .map(|b| json!({"name": b.name, "lhs": b.lhs, "rhs": b.rhs, "ok": b.ok}))
            .collect(),
        _ => Vec::new(),
    };
    let doc = json!({
        "record": record_json(&rec),
        "elementary_bounds": bounds,
        "graph": {"vertices": g.n_vertices, "edges": g.n_edges()},
    });
    write_out(&a.common.out, &format!("{}\n", serde_json::to_string_pretty(&doc)?))
}

fn cmd_tower(a: &TowerArgs) -> Result<()> {
    validate_limits(a.ceiling, Some(a.tol), a.force)?;
    let p = load_presentation(&a.common.presentation)?;
    let (_, sub) = load_subgroup(&p, &a.common.subgroup)?;
    let base = enumerate(&p, &sub, a.common.coset_limit)?;
    let phi = parse_phi(&a.phi)?;
    let n_list = parse_n_list(&a.n_list)?;
    let opts = TauOptions {
        cheeger_ceiling: a.ceiling,
        spectral_tol: a.tol,
        threads: a.threads,
        coset_limit: a.common.coset_limit,
    };
    let report = evaluate_cyclic_tower(&p, &base, phi, &n_list, &opts)?;
    let content = if a.csv {
        report.to_csv()
    } else {
        format!("{}\n", serde_json::to_string_pretty(&report)?)
    };
    write_out(&a.common.out, &content)
}

fn cmd_certify(a: &CertifyArgs) -> Result<()> {
    validate_limits(a.ceiling, None, a.force)?;
    let p = load_presentation(&a.common.presentation)?;
    let (word_texts, _) = load_subgroup(&p, &a.common.subgroup)?;
    // The construction needs a triangular presentation; rewriting keeps
    // the original generators (and hence the subgroup words) intact.
    let tri = if p.is_triangular() { p.clone() } else { p.triangularize()?.presentation };
    let source = match a.tower_n {
        Some(n) => {
            let phi = match parse_phi(&a.phi)? {
                Some(v) => v,
                None => {
                    let (_, base_spec) = load_subgroup(&tri, &a.common.subgroup)?;
                    let base = enumerate(&tri, &base_spec, a.common.coset_limit)?;
                    taukit::tau::derive_character(&tri, &base)?
                }
            };
            SubgroupSource::Tower { base_words: word_texts, phi, modulus: n }
        }
        None => {
            if word_texts.is_empty() {
                return Err(Error::InvalidInput(
                    "certify needs --subgroup words or --tower-n with a character".into(),
                ));
            }
            SubgroupSource::Words { words: word_texts }
        }
    };
    let opts = CertifyOptions {
        coset_limit: a.common.coset_limit,
        cheeger_ceiling: a.ceiling,
        threads: a.threads,
    };
    let cert = certify_infinite_abelianization(&tri, &source, &opts)?;
    write_out(&a.common.out, &format!("{}\n", serde_json::to_string_pretty(&cert)?))
}

fn cmd_verify(a: &VerifyArgs) -> Result<()> {
    let text = read_to_string(&a.certificate)?;
    let cert: Certificate = serde_json::from_str(&text)
        .map_err(|e| Error::CertificateRejected(format!("unreadable certificate: {e}")))?;
    verify_certificate(&cert, a.coset_limit)?;
    let doc = json!({
        "ok": true,
        "coset_count": cert.coset_count,
        "witness_value": cert.witness_value,
        "first_betti_oracle": cert.first_betti_oracle,
    });
    write_out(&a.out, &format!("{}\n", serde_json::to_string_pretty(&doc)?))
}

fn cmd_homology(a: &HomologyArgs) -> Result<()> {
    let p = load_presentation(&a.common.presentation)?;
    let group = abelianization(&p)?;
    let mut doc = json!({
        "group": {
            "betti": group.betti,
            "torsion": group.torsion.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
        },
    });
    if a.common.subgroup.is_some() {
        let (_, sub) = load_subgroup(&p, &a.common.subgroup)?;
        let t = enumerate(&p, &sub, a.common.coset_limit)?;
        let rs = reidemeister_schreier(&p, &t)?;
        let inv = abelianization(&rs.presentation)?;
        let betti = subgroup_first_betti(&p, &t)?;
        doc["subgroup"] = json!({
            "index": t.n_cosets(),
            "schreier_generators": rs.presentation.n_generators(),
            "relators": rs.presentation.relators.len(),
            "betti": betti,
            "torsion": inv.torsion.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
        });
    }
    write_out(&a.common.out, &format!("{}\n", serde_json::to_string_pretty(&doc)?))
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match &cli.cmd {
        Cmd::Graph(a) => cmd_graph(a),
        Cmd::Metrics(a) => cmd_metrics(a),
        Cmd::Tower(a) => cmd_tower(a),
        Cmd::Certify(a) => cmd_certify(a),
        Cmd::Verify(a) => cmd_verify(a),
        Cmd::Homology(a) => cmd_homology(a),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
