//! `sectors`: batch front end for sectors-core.
//!
//! Every command reads a net-spec document (or generates one with
//! `--fixture`), prints a short summary and writes the full JSON report to
//! `--out`. Exit codes: 0 pass, 1 check failure, 2 usage or parse error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use sectors_core::conjugate::{self, ConjugationReport, SolutionSummary, Standardness, SweepSummary};
use sectors_core::document::{NetSpecDocument, DEFAULT_DMAX, DEFAULT_TOL};
use sectors_core::fixtures;
use sectors_core::left_inverse::{check_simple, SimpleReport};
use sectors_core::net::{NetModel, NetReport};
use sectors_core::object::{intertwiner_space, Amplimorphism, ObjectReport};
use sectors_core::presheaf::{
    self, CocycleReport, Commutants, ExtensionReport, FaithfulnessReport, HomogeneityReport, MembershipReport, RoundTrip,
};

#[derive(Parser)]
#[command(name = "sectors", version, about = "Superselection-sector checks on finite nets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Site axioms, isotony, locality, irreducibility and duality per region.
    CheckNet(Common),
    /// Localization, faithfulness, statistics, homogeneity and membership of one object.
    Analyze(WithObject),
    /// Solve the conjugate equations and run the evidence chain.
    Conjugate {
        #[command(flatten)]
        target: WithObject,
        /// Candidate conjugate; defaults to the object itself.
        #[arg(long)]
        candidate: Option<String>,
    },
    /// Cocycle identities and the extension/restriction round trip.
    Cocycle(WithObject),
    /// Built-in fixtures.
    Fixtures {
        #[command(subcommand)]
        action: FixtureAction,
    },
}

#[derive(Subcommand)]
enum FixtureAction {
    /// List fixture names.
    List,
    /// Write a fixture's net-spec document and its manifest.
    Emit {
        name: String,
        #[arg(long)]
        out: PathBuf,
        /// Manifest path; defaults to `<out>.manifest.json`.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
}

#[derive(Args)]
struct Common {
    /// Net-spec document.
    #[arg(required_unless_present = "fixture", conflicts_with = "fixture")]
    path: Option<PathBuf>,
    /// Generate the input from a built-in fixture instead of reading a file.
    #[arg(long)]
    fixture: Option<String>,
    /// Full JSON report.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Numerical tolerance; overrides the document option.
    #[arg(long)]
    tol: Option<f64>,
    /// Largest tensor power searched for statistics witnesses.
    #[arg(long)]
    dmax: Option<usize>,
}

#[derive(Args)]
struct WithObject {
    #[command(flatten)]
    common: Common,
    /// Object id in the document.
    #[arg(long)]
    object: String,
}

enum Failure {
    Usage(String),
    Check,
}

impl From<sectors_core::Error> for Failure {
    fn from(e: sectors_core::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

struct Input {
    source: String,
    doc: NetSpecDocument,
    net: NetModel,
    tol: f64,
    dmax: usize,
}

fn load(common: &Common) -> Result<Input, Failure> {
    let (source, doc) = match (&common.path, &common.fixture) {
        (Some(p), None) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
            (p.display().to_string(), NetSpecDocument::from_json(&text)?)
        }
        (None, Some(name)) => (format!("fixture:{name}"), fixture_document(name, common.tol.unwrap_or(DEFAULT_TOL))?),
        _ => return Err(Failure::Usage("give a document path or --fixture".into())),
    };
    let net = doc.net(common.tol)?;
    let tol = net.tol;
    let dmax = doc.dmax(common.dmax);
    Ok(Input { source, doc, net, tol, dmax })
}

fn fixture_document(name: &str, tol: f64) -> Result<NetSpecDocument, Failure> {
    let f = fixtures::named(name, tol)?;
    let objects = f.standard_objects()?;
    let refs: Vec<(&str, &Amplimorphism)> = objects.iter().map(|(id, o)| (id.as_str(), o)).collect();
    let mut doc = NetSpecDocument::from_net(&f.net, &refs);
    doc.options.tol = Some(tol);
    doc.options.dmax = Some(DEFAULT_DMAX);
    Ok(doc)
}

fn object(input: &Input, id: &str) -> Result<Amplimorphism, Failure> {
    if !input.doc.objects.contains_key(id) {
        return Err(Failure::Usage(format!("unknown object `{id}`; known: {}", input.doc.object_ids().join(", "))));
    }
    Ok(input.doc.object(&input.net, id)?)
}

fn write_report<T: Serialize>(out: &Option<PathBuf>, report: &T) -> Outcome {
    if let Some(path) = out {
        write_json(path, report)?;
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Outcome {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Usage(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn verdict(ok: bool) -> Outcome {
    if ok {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAIL"
    }
}

#[derive(Serialize)]
struct CheckNetReport {
    source: String,
    tolerance: f64,
    net: NetReport,
    complements_connected: Vec<(String, bool)>,
    passed: bool,
}

fn check_net(common: &Common) -> Outcome {
    let input = load(common)?;
    let net = input.net.check();
    let complements_connected: Vec<(String, bool)> = input
        .net
        .site
        .regions
        .iter()
        .map(|r| (r.clone(), input.net.site.complement_connected(r).unwrap_or(false)))
        .collect();
    let passed = net.passed;
    println!("net {} (tolerance {:e})", input.source, input.tol);
    println!("  site axioms: {}", mark(net.site.valid));
    for v in &net.site.violations {
        println!("    {} {:?}", v.rule, v.regions);
    }
    let worst = |v: &[sectors_core::net::PairDefect]| v.iter().map(|p| p.defect).fold(0.0, f64::max);
    println!("  isotony: {} (worst {:e})", mark(net.isotony.iter().all(|p| p.defect < input.tol)), worst(&net.isotony));
    for p in net.isotony.iter().filter(|p| p.defect >= input.tol) {
        println!("    {} <= {}: {:e}", p.first, p.second, p.defect);
    }
    println!("  locality: {} (worst {:e})", mark(net.locality.iter().all(|p| p.defect < input.tol)), worst(&net.locality));
    for p in net.locality.iter().filter(|p| p.defect >= input.tol) {
        println!("    {} _|_ {}: {:e}", p.first, p.second, p.defect);
    }
    println!("  irreducible: {}", mark(net.irreducible));
    for d in &net.duality {
        println!(
            "  duality {}: {} (defects {:e}, {:e})",
            d.region,
            mark(d.holds),
            d.local_in_dual_defect,
            d.dual_in_local_defect
        );
    }
    println!("{}", if passed { "PASS" } else { "FAIL" });
    let report = CheckNetReport { source: input.source, tolerance: input.tol, net, complements_connected, passed };
    write_report(&common.out, &report)?;
    verdict(passed)
}

#[derive(Serialize)]
struct AnalyzeReport {
    source: String,
    object: String,
    tolerance: f64,
    dmax: usize,
    check: ObjectReport,
    transportable: bool,
    commutant_dim: usize,
    faithfulness: FaithfulnessReport,
    simple: Option<SimpleReport>,
    simple_error: Option<String>,
    homogeneity: HomogeneityReport,
    membership: MembershipReport,
}

fn analyze(target: &WithObject) -> Outcome {
    let input = load(&target.common)?;
    let rho = object(&input, &target.object)?;
    let net = &input.net;
    let cache = Commutants::new(net)?;
    let check = rho.check(net);
    let transportable = net.site.regions.iter().all(|r| check.transporter_defects.get(r).is_some_and(|d| *d < input.tol));
    let commutant_dim = intertwiner_space(net, &rho, &rho).len();
    let faithfulness = presheaf::check_double_faithfulness(net, &cache, &rho)?;
    let (simple, simple_error) = match check_simple(net, &rho, None) {
        Ok(s) => (Some(s), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let homogeneity = presheaf::check_homogeneous(net, &cache, &rho, input.dmax)?;
    let membership = presheaf::check_relevant_membership(net, &cache, &rho, input.dmax)?;

    println!("object {} in {}", target.object, input.source);
    println!("  object axioms: {}", mark(check.valid));
    println!("  transportable to every region: {}", mark(transportable));
    println!("  (rho, rho) dimension: {commutant_dim}");
    println!(
        "  faithful: {}; doubly faithful by kernel: {}, by central support: {}",
        faithfulness.faithful, faithfulness.by_kernel, faithfulness.by_central_support
    );
    match &simple {
        Some(s) => println!("  simple: {}", s.sign.map_or("no".to_string(), |x| format!("yes, sign {x:+}"))),
        None => println!("  simple: undetermined ({})", simple_error.as_deref().unwrap_or("")),
    }
    for s in &membership.statistics.summands {
        let lambda = s.lambda.map_or("-".to_string(), |l| format!("{:.12}", l.re));
        let d = s.d.map_or("-".to_string(), |d| d.to_string());
        println!("  summand {}: irreducible {}, lambda {lambda}, d {d}", s.label, s.irreducible);
    }
    println!("  homogeneous: {}", homogeneity.homogeneous);
    println!("  relevant subcategory: {}", if membership.member { "member" } else { "not a member" });
    let ok = check.valid;
    let report = AnalyzeReport {
        source: input.source,
        object: target.object.clone(),
        tolerance: input.tol,
        dmax: input.dmax,
        check,
        transportable,
        commutant_dim,
        faithfulness,
        simple,
        simple_error,
        homogeneity,
        membership,
    };
    write_report(&target.common.out, &report)?;
    verdict(ok)
}

#[derive(Serialize)]
struct ConjugateCommandReport {
    source: String,
    object: String,
    candidate: String,
    tolerance: f64,
    dmax: usize,
    sweep: SweepSummary,
    solution: Option<SolutionSummary>,
    swap_residuals: Option<[f64; 2]>,
    standardized: Option<SolutionSummary>,
    standardness: Option<Standardness>,
    standardize_error: Option<String>,
    chain: Option<ConjugationReport>,
    passed: bool,
}

fn conjugate_cmd(target: &WithObject, candidate: &Option<String>) -> Outcome {
    let input = load(&target.common)?;
    let net = &input.net;
    let rho = object(&input, &target.object)?;
    let cand_id = candidate.clone().unwrap_or_else(|| target.object.clone());
    let rho_bar = object(&input, &cand_id)?;
    let cache = Commutants::new(net)?;
    let sweep = conjugate::solve_conjugate(net, &rho, &rho_bar)?;
    let mut report = ConjugateCommandReport {
        source: input.source.clone(),
        object: target.object.clone(),
        candidate: cand_id.clone(),
        tolerance: input.tol,
        dmax: input.dmax,
        sweep: sweep.summary(),
        solution: None,
        swap_residuals: None,
        standardized: None,
        standardness: None,
        standardize_error: None,
        chain: None,
        passed: false,
    };
    println!("conjugate of {} with candidate {cand_id} in {}", target.object, input.source);
    println!(
        "  sweep: dim (iota, bar*rho) = {}, dim (iota, rho*bar) = {}; {}",
        report.sweep.r_space_dim, report.sweep.r_bar_space_dim, report.sweep.note
    );
    if let Some(sol) = &sweep.solution {
        report.solution = Some(sol.summary());
        let swapped = sol.swapped(net)?;
        report.swap_residuals = Some([swapped.residuals.0, swapped.residuals.1]);
        println!("  residuals: {:e}, {:e}", sol.residuals.0, sol.residuals.1);
        match conjugate::standardize(net, sol) {
            Ok(std) => {
                let st = conjugate::standardness(net, &std)?;
                println!("  standard: {} (c = {:.12}, R*R = {:.12})", st.standard, st.c.re, st.norms[0]);
                let chain = conjugate::verify_conjugation_theorems(net, &cache, &std, input.dmax)?;
                for s in &chain.stages {
                    println!("  {}: {} ({})", s.name, mark(s.passed), s.detail);
                }
                report.passed = chain.member;
                report.standardized = Some(std.summary());
                report.standardness = Some(st);
                report.chain = Some(chain);
            }
            Err(e) => {
                println!("  standardization failed: {e}");
                report.standardize_error = Some(e.to_string());
            }
        }
    }
    println!("{}", if report.passed { "PASS" } else { "FAIL" });
    write_report(&target.common.out, &report)?;
    verdict(report.passed)
}

#[derive(Serialize)]
struct CocycleCommandReport {
    source: String,
    object: String,
    tolerance: f64,
    cocycle: CocycleReport,
    extension: ExtensionReport,
    round_trip: RoundTrip,
    passed: bool,
}

fn cocycle_cmd(target: &WithObject) -> Outcome {
    let input = load(&target.common)?;
    let net = &input.net;
    let rho = object(&input, &target.object)?;
    if let Some(r) = net.site.regions.iter().find(|r| !rho.transporters.contains_key(*r)) {
        return Err(Failure::Usage(format!("object `{}` has no transporter for `{r}`", target.object)));
    }
    let cache = Commutants::new(net)?;
    let cocycle = presheaf::check_cocycle(net, &rho)?;
    let hat = presheaf::extend(net, &cache, &rho)?;
    let extension = presheaf::check_extension(net, &cache, &rho, &hat)?;
    let round_trip = presheaf::round_trip(net, &cache, &rho)?;
    let tol = input.tol;
    let trip_ok = round_trip.object < tol && round_trip.presheaf < tol;
    let passed = cocycle.holds && extension.holds && trip_ok;
    println!("cocycle of {} in {}", target.object, input.source);
    println!("  cocycle identities: {} (worst {:e})", mark(cocycle.holds), cocycle.worst);
    for p in cocycle.identity.iter().filter(|p| p.defect >= tol) {
        println!("    pair ({}, {}): {:e}", p.first, p.second, p.defect);
    }
    for p in cocycle.locality.iter().filter(|p| p.defect >= tol) {
        println!("    z({}, {}) not local: {:e}", p.first, p.second, p.defect);
    }
    for (r, d) in cocycle.spacelike.iter().filter(|(_, d)| **d >= tol) {
        println!("    transporter into {r} disagrees spacelike: {d:e}");
    }
    println!("  extension: {}", mark(extension.holds));
    println!("  round trip: {} (object {:e}, presheaf {:e})", mark(trip_ok), round_trip.object, round_trip.presheaf);
    println!("{}", if passed { "PASS" } else { "FAIL" });
    let report =
        CocycleCommandReport { source: input.source, object: target.object.clone(), tolerance: tol, cocycle, extension, round_trip, passed };
    write_report(&target.common.out, &report)?;
    verdict(passed)
}

fn fixtures_cmd(action: &FixtureAction) -> Outcome {
    match action {
        FixtureAction::List => {
            for name in fixtures::NAMES {
                println!("{name}");
            }
            Ok(())
        }
        FixtureAction::Emit { name, out, manifest, tol } => {
            let f = fixtures::named(name, *tol)?;
            let doc = fixture_document(name, *tol)?;
            fs::write(out, doc.to_json() + "\n").map_err(|e| Failure::Usage(format!("{}: {e}", out.display())))?;
            let manifest_path = manifest.clone().unwrap_or_else(|| {
                let mut p = out.clone().into_os_string();
                p.push(".manifest.json");
                PathBuf::from(p)
            });
            let m = f.manifest(name);
            write_json(&manifest_path, &m)?;
            println!("{name}: {} objects -> {}", doc.objects.len(), out.display());
            println!("manifest -> {} (duality everywhere: {})", manifest_path.display(), m.duality_holds_everywhere);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::CheckNet(c) => check_net(c),
        Command::Analyze(t) => analyze(t),
        Command::Conjugate { target, candidate } => conjugate_cmd(target, candidate),
        Command::Cocycle(t) => cocycle_cmd(t),
        Command::Fixtures { action } => fixtures_cmd(action),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
