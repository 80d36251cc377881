//! The `centrep` command line.
//!
//! Exit codes: 0 pass, 1 check failure, 2 usage or format error,
//! 3 hypothesis violation.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exterior::{Multivector, NilpotentOperator};
use crate::instance::{random_instance, targeted_instance_sized, Instance, InstanceSpec, Triple, SPEC_VERSION};
use crate::lie::{oracle_check, LieAlgebra, OracleReport};
use crate::rational::{self, Rational};
use crate::structure::{canonical_decomposition, lefschetz_map, CanonicalDecomposition};
use crate::witness::{construct_witness, dispatch_holds, verify_certificate, CaseTag, WitnessCertificate};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_HYPOTHESIS: i32 = 3;

const DEFAULT_MAX_DIM: usize = 16;

#[derive(Debug, Parser)]
#[command(name = "centrep", version, about = "Exact certificates for the central representation of double-extension nilpotent Lie algebras")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a random or case-targeted instance (θ, ε, Ω).
    Generate(GenerateArgs),
    /// Construct a witness certificate for an instance and verify (A)-(D).
    #[command(after_help = "--oracle builds the algebra L of dimension dim_I + 2 and computes its \
        cohomology by brute force. Up to dim_I = 8 this takes seconds; the cost roughly \
        quadruples with every two extra dimensions, so leave it off for bulk verification.")]
    Verify(VerifyArgs),
    /// Betti numbers and the central-action witness of a Lie algebra.
    Cohomology(CohomologyArgs),
    /// Symplectic Jordan normal form of (θ, Ω).
    Canonical(InputArgs),
    /// Bijectivity of every Lefschetz map on the support of Ω.
    Lefschetz(InputArgs),
    /// Certificate plus the full cohomological cross-check on L.
    Oracle(InputArgs),
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Write the JSON report to this file.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Print the JSON report instead of text.
    #[arg(long)]
    json: bool,
    /// Include wall-clock timing in the report.
    #[arg(long)]
    timing: bool,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long = "dim-i")]
    dim_i: usize,
    #[arg(long)]
    seed: u64,
    /// Force the witness construction into this branch.
    #[arg(long = "case", value_parser = parse_case)]
    case: Option<CaseTag>,
    #[arg(long = "coefficient-bound", default_value_t = 3)]
    coefficient_bound: u32,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    input: PathBuf,
    /// Also run the Chevalley-Eilenberg cross-check on L.
    #[arg(long)]
    oracle: bool,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Debug, Args)]
struct CohomologyArgs {
    #[arg(long)]
    algebra: PathBuf,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Debug, Args)]
struct InputArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    report: ReportArgs,
}

fn parse_case(s: &str) -> std::result::Result<CaseTag, String> {
    CaseTag::parse(s).ok_or_else(|| {
        let names: Vec<&str> = CaseTag::ALL.iter().map(|t| t.as_str()).collect();
        format!("unknown case {s:?}; expected one of {}", names.join(", "))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    Error,
}

#[derive(Debug, Clone, Serialize)]
pub struct CentralSummary {
    pub nontrivial: bool,
    #[serde(skip_serializing_if = "Option::is_none", with = "opt_vector")]
    pub z: Option<Vec<Rational>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cocycle: Option<Multivector>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contraction: Option<Multivector>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CanonicalSummary {
    pub rank: usize,
    pub p: usize,
    pub q: usize,
    pub uv_levels: Vec<usize>,
    pub z_lengths: Vec<usize>,
    pub z_signs: Vec<String>,
    pub unit_signs: bool,
    pub decomposition: CanonicalDecomposition,
}

#[derive(Debug, Clone, Serialize)]
pub struct LefschetzEntry {
    pub k: usize,
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    pub bijective: bool,
}

/// Everything a command reports. Optional sections are omitted when they do
/// not apply; `timing_ms` only appears with `--timing`.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub spec_version: String,
    pub inputs: BTreeMap<String, String>,
    pub outcome: Outcome,
    pub checks: BTreeMap<String, bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case_tag: Option<CaseTag>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<WitnessCertificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub betti: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub central_action: Option<CentralSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub canonical: Option<CanonicalSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lefschetz: Option<Vec<LefschetzEntry>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<u128>,
}

impl RunReport {
    fn new(command: &str) -> Self {
        RunReport {
            command: command.to_string(),
            spec_version: SPEC_VERSION.to_string(),
            inputs: BTreeMap::new(),
            outcome: Outcome::Pass,
            checks: BTreeMap::new(),
            case_tag: None,
            certificate: None,
            betti: None,
            central_action: None,
            oracle: None,
            canonical: None,
            lefschetz: None,
            error: None,
            timing_ms: None,
        }
    }

    fn check(&mut self, name: &str, ok: bool) {
        self.checks.insert(name.to_string(), ok);
    }

    fn settle(&mut self) {
        if self.outcome != Outcome::Error {
            self.outcome = if self.checks.values().all(|&b| b) { Outcome::Pass } else { Outcome::Fail };
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.outcome {
            Outcome::Pass => EXIT_PASS,
            Outcome::Fail => EXIT_FAIL,
            Outcome::Error => EXIT_USAGE,
        }
    }
}

mod opt_vector {
    use serde::Serializer;

    use crate::rational::Rational;

    pub fn serialize<S: Serializer>(v: &Option<Vec<Rational>>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) => crate::rational::serde_vector::serialize(v, s),
            None => s.serialize_none(),
        }
    }
}

/// Maps an error to its exit code.
pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Hypothesis(_) | Error::Jacobi(_) => EXIT_HYPOTHESIS,
        Error::InvalidInput(_)
        | Error::Json(_)
        | Error::Io(_)
        | Error::IndexOutOfRange { .. }
        | Error::DimensionMismatch { .. }
        | Error::GradeOutOfRange { .. } => EXIT_USAGE,
        _ => EXIT_FAIL,
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    let max_dim = match max_dim() {
        Ok(m) => m,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(&a, max_dim, out),
        Command::Verify(a) => report_command("verify", &a.report, out, |r| verify(r, &a.input, a.oracle, max_dim)),
        Command::Oracle(a) => report_command("oracle", &a.report, out, |r| verify(r, &a.input, true, max_dim)),
        Command::Cohomology(a) => report_command("cohomology", &a.report, out, |r| cohomology(r, &a.algebra, max_dim)),
        Command::Canonical(a) => report_command("canonical", &a.report, out, |r| canonical(r, &a.input, false, max_dim)),
        Command::Lefschetz(a) => report_command("lefschetz", &a.report, out, |r| canonical(r, &a.input, true, max_dim)),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code_for(&e)
        }
    }
}

fn max_dim() -> Result<usize> {
    match std::env::var("CENTREP_MAX_DIM") {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::InvalidInput(format!("CENTREP_MAX_DIM must be a positive integer, got {s:?}"))),
        Err(_) => Ok(DEFAULT_MAX_DIM),
    }
}

fn cap(dim: usize, max_dim: usize) -> Result<()> {
    if dim > max_dim {
        return Err(Error::InvalidInput(format!(
            "ambient dimension {dim} exceeds CENTREP_MAX_DIM = {max_dim}"
        )));
    }
    Ok(())
}

fn cmd_generate(a: &GenerateArgs, max_dim: usize, out: &mut dyn Write) -> Result<i32> {
    if a.dim_i < 2 {
        return Err(Error::InvalidInput(format!("--dim-i must be at least 2, got {}", a.dim_i)));
    }
    if a.coefficient_bound == 0 {
        return Err(Error::InvalidInput("--coefficient-bound must be positive".into()));
    }
    cap(a.dim_i, max_dim)?;
    let inst = match a.case {
        Some(tag) => targeted_instance_sized(tag, a.dim_i, a.seed),
        None => {
            let mut spec = InstanceSpec::new(a.dim_i, a.seed);
            spec.coefficient_bound = a.coefficient_bound;
            random_instance(&spec)
        }
    };
    let inst = inst.map_err(|e| match e {
        Error::InvalidInput(_) => e,
        other => Error::Internal(format!("generation failed: {other}")),
    })?;
    let mut text = inst.to_json();
    text.push('\n');
    match &a.out {
        Some(path) => std::fs::write(path, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(EXIT_PASS)
}

/// Runs a report-producing command. Errors after the input was read still
/// produce a report when `--report` is given.
fn report_command(
    name: &str,
    args: &ReportArgs,
    out: &mut dyn Write,
    body: impl FnOnce(&mut RunReport) -> Result<()>,
) -> Result<i32> {
    let start = Instant::now();
    let mut report = RunReport::new(name);
    let result = body(&mut report);
    if let Err(e) = &result {
        report.outcome = Outcome::Error;
        report.error = Some(e.to_string());
    }
    report.settle();
    if args.timing {
        report.timing_ms = Some(start.elapsed().as_millis());
    }
    let json = serde_json::to_string_pretty(&report).expect("reports serialize") + "\n";
    if let Some(path) = &args.report {
        std::fs::write(path, &json)?;
    }
    result?;
    if args.json {
        out.write_all(json.as_bytes())?;
    } else {
        out.write_all(render_text(&report).as_bytes())?;
    }
    Ok(report.exit_code())
}

fn read_input(report: &mut RunReport, path: &Path) -> Result<Vec<u8>> {
    let bytes = std::fs::read(path)?;
    report.inputs.insert("input".into(), hex::encode(Sha256::digest(&bytes)));
    Ok(bytes)
}

fn load_instance(report: &mut RunReport, path: &Path, max_dim: usize) -> Result<Instance> {
    let bytes = read_input(report, path)?;
    let inst: Instance = serde_json::from_slice(&bytes).map_err(|e| Error::InvalidInput(format!("instance file: {e}")))?;
    cap(inst.dim, max_dim)?;
    Ok(inst)
}

fn verify(report: &mut RunReport, path: &Path, oracle: bool, max_dim: usize) -> Result<()> {
    let inst = load_instance(report, path, max_dim)?;
    if oracle {
        cap(inst.dim + 2, max_dim)?;
    }
    let Triple { theta, epsilon, omega } = inst.validate()?;
    let mut cert = construct_witness(&epsilon, &omega, &theta)?;
    cert.instance_hash = Some(inst.hash());
    let v = verify_certificate(&cert, &epsilon, &omega, &theta)?;
    let d = canonical_decomposition(&theta, &omega)?;
    report.check("A", v.checks.a);
    report.check("B", v.checks.b);
    report.check("C", v.checks.c);
    report.check("D", v.checks.d);
    report.check("formula_verified", cert.formula_verified);
    report.check("dispatch", dispatch_holds(&cert, &epsilon, &theta, &d)?);
    report.case_tag = Some(cert.case_tag);
    if oracle {
        let o = oracle_check(&theta, &epsilon, &omega, &cert.beta, &cert.alpha, &cert.gamma, true)?;
        report.check("oracle", o.passed());
        let l = crate::lie::build_instance_algebra(&theta, &epsilon, &omega)?;
        let ca = l.central_action()?;
        report.betti = Some(l.cohomology()?.betti());
        report.central_action = Some(summarize(&ca));
        report.oracle = Some(o);
    }
    report.certificate = Some(cert);
    Ok(())
}

fn summarize(ca: &crate::lie::CentralAction) -> CentralSummary {
    match &ca.witness {
        Some(w) => CentralSummary {
            nontrivial: ca.nontrivial,
            z: Some(w.z.clone()),
            degree: Some(w.degree),
            cocycle: Some(w.cocycle.clone()),
            contraction: Some(w.contraction.clone()),
        },
        None => CentralSummary { nontrivial: ca.nontrivial, z: None, degree: None, cocycle: None, contraction: None },
    }
}

fn cohomology(report: &mut RunReport, path: &Path, max_dim: usize) -> Result<()> {
    let bytes = read_input(report, path)?;
    let raw: serde_json::Value =
        serde_json::from_slice(&bytes).map_err(|e| Error::InvalidInput(format!("algebra file: {e}")))?;
    if let Some(n) = raw.get("dim").and_then(|v| v.as_u64()) {
        cap(n as usize, max_dim)?;
    }
    let l: LieAlgebra =
        serde_json::from_value(raw).map_err(|e| Error::InvalidInput(format!("algebra file: {e}")))?;
    let bad = l.check_jacobi();
    if !bad.is_empty() {
        return Err(Error::Jacobi(bad));
    }
    let h = l.cohomology()?;
    let ca = l.central_action()?;
    report.check("nilpotent", ca.nilpotent);
    report.check("central_action_nontrivial", ca.nontrivial);
    report.betti = Some(h.betti());
    report.central_action = Some(summarize(&ca));
    Ok(())
}

fn canonical(report: &mut RunReport, path: &Path, lefschetz: bool, max_dim: usize) -> Result<()> {
    let inst = load_instance(report, path, max_dim)?;
    let (theta, epsilon, omega) = inst.parse_parts()?;
    if epsilon.len() != inst.dim {
        return Err(crate::error::Hypothesis::EpsilonLength { expected: inst.dim, got: epsilon.len() }.into());
    }
    let theta = NilpotentOperator::new(theta)?;
    let d = canonical_decomposition(&theta, &omega)?;
    let c = d.check(&theta, &omega);
    report.check("nonempty", c.nonempty);
    report.check("basis_of_support", c.basis_of_support);
    report.check("support_dim_is_twice_rank", c.support_dim_is_twice_rank);
    report.check("support_theta_invariant", c.support_theta_invariant);
    report.check("chain_relations", c.chain_relations);
    report.check("reconstructs_omega", c.reconstructs_omega);
    report.check("signs_normalized", c.signs_normalized);
    if lefschetz {
        let mut entries = Vec::new();
        for k in 0..=d.rank {
            let m = lefschetz_map(&d, k)?;
            let rank = m.rank();
            entries.push(LefschetzEntry {
                k,
                rows: m.rows(),
                cols: m.cols(),
                rank,
                bijective: m.rows() == m.cols() && rank == m.rows(),
            });
        }
        report.check("lefschetz_bijective", entries.iter().all(|e| e.bijective));
        report.lefschetz = Some(entries);
    }
    report.canonical = Some(CanonicalSummary {
        rank: d.rank,
        p: d.p(),
        q: d.q(),
        uv_levels: d.uv_blocks.iter().map(|b| b.l).collect(),
        z_lengths: d.z_blocks.iter().map(|b| b.m).collect(),
        z_signs: d.z_blocks.iter().map(|b| rational::format(&b.sign)).collect(),
        unit_signs: c.unit_signs,
        decomposition: d,
    });
    Ok(())
}

fn render_text(r: &RunReport) -> String {
    let mut s = String::new();
    let mut line = |t: String| {
        s.push_str(&t);
        s.push('\n');
    };
    line(format!("command: {}", r.command));
    if let Some(h) = r.inputs.get("input") {
        line(format!("input sha256: {h}"));
    }
    if let Some(tag) = r.case_tag {
        line(format!("case: {tag}"));
    }
    if let Some(c) = &r.certificate {
        let opt = |v: Option<usize>| v.map_or("-".to_string(), |n| n.to_string());
        line(format!("N: {}  M: {}", opt(c.n), opt(c.m)));
        line(format!("beta: {}", c.beta));
        line(format!("alpha: {}", c.alpha));
        line(format!("gamma: {}", c.gamma));
    }
    if let Some(cs) = &r.canonical {
        line(format!("rank: {}  p: {}  q: {}", cs.rank, cs.p, cs.q));
        line(format!("uv levels: {:?}", cs.uv_levels));
        line(format!("z lengths: {:?}  signs: [{}]", cs.z_lengths, cs.z_signs.join(", ")));
    }
    if let Some(ls) = &r.lefschetz {
        for e in ls {
            line(format!("mu^{}: {}x{} rank {} {}", e.k, e.rows, e.cols, e.rank, if e.bijective { "bijective" } else { "NOT bijective" }));
        }
    }
    if let Some(b) = &r.betti {
        let b: Vec<String> = b.iter().map(|x| x.to_string()).collect();
        line(format!("betti: {}", b.join(" ")));
    }
    if let Some(ca) = &r.central_action {
        if ca.nontrivial {
            let z: Vec<String> = ca.z.iter().flatten().map(rational::format).collect();
            line(format!(
                "central action: nontrivial (z = [{}], degree {})",
                z.join(", "),
                ca.degree.map_or("-".into(), |d| d.to_string())
            ));
            if let (Some(a), Some(c)) = (&ca.cocycle, &ca.contraction) {
                line(format!("  cocycle: {a}"));
                line(format!("  contraction: {c}"));
            }
        } else {
            line("central action: trivial (exhaustive search over the center and all degrees)".into());
        }
    }
    for (k, v) in &r.checks {
        line(format!("check {k}: {}", if *v { "ok" } else { "FAILED" }));
    }
    line(format!(
        "outcome: {}",
        match r.outcome {
            Outcome::Pass => "pass",
            Outcome::Fail => "fail",
            Outcome::Error => "error",
        }
    ));
    if let Some(t) = r.timing_ms {
        line(format!("time: {t} ms"));
    }
    s
}
