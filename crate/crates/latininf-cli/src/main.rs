//! latininf — build and verify finite approximations to infinite Latin
//! squares, terraces, orthomorphism families, and Knut Vic designs.
//!
//! Exit codes: 0 on success or verification pass, 1 on verification fail
//! (with a JSON witness on standard output) or a failed build, 2 on usage
//! errors. All builders are deterministic: identical invocations produce
//! byte-identical artifacts, and resuming from a saved state is equivalent
//! to a straight-through run.

use clap::{Args, Parser, Subcommand};
use latininf::construct::{
    seed_rowcomplete, seed_vatican, verify_immune, BalanceMode,
    IMMUNE_BRUTE_FORCE_CAP,
};
use latininf::group::{GroupElement, GroupKernel};
use latininf::index::{parse_rational, IndexKind, IndexSet};
use latininf::ortho::{
    brute_force_scm_search, canonical_transversal, knut_vic_square, scm_cyclic,
    scm_direct_product, scm_elementary_2group, scm_quotient, table_window,
    verify_scm, MooFamily, ScmBuilder, TableStyle,
};
use latininf::persist;
use latininf::realline::{locate_pair, ProbeAxis, DEFAULT_TOLERANCE};
use latininf::report::VerificationReport;
use latininf::scheduler::run;
use latininf::square::{
    cayley_window, parse_csv, render, verify_d_complete, verify_knutvic, verify_latin, verify_orthogonal,
    verify_quadrangle, verify_semivatican_safety, verify_vatican_safety, williams_complete_square,
    window_of_first, LatinRegion, RenderFormat, SymbolUniverse,
};
use latininf::terrace::{PartialTerrace, TerraceKind};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "latininf", version, about = "Infinite Latin square constructions at finite scale")]
struct Cli {
    /// Cap on internal verifier parallelism (default: all cores; also
    /// settable via LATININF_JOBS).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Grow a partial directed terrace by fair greedy scheduling.
    BuildTerrace(BuildTerraceArgs),
    /// Cut a Cayley window from a saved terrace.
    Window(WindowArgs),
    /// Verify a property of a saved region (CSV or JSON).
    #[command(subcommand)]
    Verify(VerifyCmd),
    /// Run the immunization procedure on a saved immune-region state.
    Immunize(ImmunizeArgs),
    /// Grow the Latin region that no column permutation makes row-complete.
    BuildNonrowcomplete(BuildStateArgs),
    /// Grow the balance-safe region that is certifiably not group-based.
    BuildNongroupVatican(BuildVaticanArgs),
    /// Strong complete mappings.
    #[command(subcommand)]
    Scm(ScmCmd),
    /// Grow a family of mutually orthogonal orthomorphisms.
    Moo(MooArgs),
    /// Build the Knut Vic design of order n from θ(x) = 2x and verify it.
    Knutvic(KnutvicArgs),
    /// Check a saved mapping's square against the Cayley and normal
    /// multiplication tables.
    Orthocheck(OrthocheckArgs),
    /// Probe the explicit real-line semi-Vatican square.
    Real(RealArgs),
    /// Known-good reference constructions and exhaustive searches.
    #[command(subcommand)]
    Oracle(OracleCmd),
}

#[derive(Args)]
struct BuildTerraceArgs {
    #[arg(long, default_value = "Z")]
    group: String,
    #[arg(long, default_value = "Z")]
    index: String,
    #[arg(long, default_value = "T")]
    kind: String,
    #[arg(long)]
    steps: u64,
    #[arg(long)]
    out: PathBuf,
    /// Run the full from-scratch checker after every step.
    #[arg(long)]
    verify_each: bool,
    /// Resume from a saved state; --steps counts additional steps.
    #[arg(long)]
    resume: Option<PathBuf>,
}

#[derive(Args)]
struct WindowArgs {
    /// Saved terrace JSON.
    #[arg(long = "terrace")]
    terrace: PathBuf,
    /// Use the first SIZE assigned index points as both rows and columns.
    #[arg(long)]
    size: usize,
    #[arg(long, default_value = "csv")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RegionArg {
    /// Region file (.csv or .json).
    #[arg(long)]
    region: PathBuf,
    /// Symbol universe for CSV input: "nat" or a group spec.
    #[arg(long, default_value = "nat")]
    universe: String,
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// No symbol repeats in any row or column.
    Latin(RegionArg),
    /// Ordered pairs at most once per distance per direction.
    Vatican(RegionArg),
    /// Unordered pairs at most once per distance per direction.
    Semivatican(RegionArg),
    /// Vatican safety restricted to distances ≤ D.
    Dcomplete {
        #[command(flatten)]
        region: RegionArg,
        #[arg(long = "max-distance")]
        max_distance: String,
    },
    /// No superimposed ordered symbol pair occurs twice.
    Orthogonal {
        #[command(flatten)]
        region: RegionArg,
        #[arg(long)]
        other: PathBuf,
    },
    /// Rows, columns and broken diagonals.
    Knutvic {
        #[command(flatten)]
        region: RegionArg,
        #[arg(long)]
        modulus: Option<u64>,
    },
    /// Passes when no quadrangle-criterion violation exists.
    Quadrangle {
        #[command(flatten)]
        region: RegionArg,
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Factorial brute force over column permutations.
    Immune {
        #[command(flatten)]
        region: RegionArg,
        #[arg(long = "max-cols", default_value_t = IMMUNE_BRUTE_FORCE_CAP)]
        max_cols: usize,
    },
}

#[derive(Args)]
struct ImmunizeArgs {
    /// Saved immune-region state; the 3×3 seed when omitted.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BuildStateArgs {
    #[arg(long)]
    steps: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    verify_each: bool,
    #[arg(long)]
    resume: Option<PathBuf>,
}

#[derive(Args)]
struct BuildVaticanArgs {
    #[command(flatten)]
    common: BuildStateArgs,
    /// Build the unordered-pair (semi-Vatican) variant.
    #[arg(long)]
    semi: bool,
}

#[derive(Subcommand)]
enum ScmCmd {
    /// Greedy partial SCM over an infinite squareful group.
    Greedy {
        #[arg(long, default_value = "Z")]
        group: String,
        #[arg(long)]
        steps: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        verify_each: bool,
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// θ(x) = 2x on Z_n (needs gcd(n, 6) = 1), certified exhaustively.
    Cyclic {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Componentwise SCM of a product of cyclic groups.
    Product {
        /// Comma-separated cyclic orders, e.g. 5,7.
        #[arg(long, value_delimiter = ',')]
        orders: Vec<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Quotient construction on Z_n with H = ⟨h⟩.
    Quotient {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        h: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Nim-field block SCM of the elementary abelian 2-group.
    E2 {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct MooArgs {
    #[arg(long, default_value = "Z")]
    group: String,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    steps: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    verify_each: bool,
    #[arg(long)]
    resume: Option<PathBuf>,
}

#[derive(Args)]
struct KnutvicArgs {
    #[arg(long)]
    n: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OrthocheckArgs {
    /// Saved mapping JSON.
    #[arg(long)]
    mapping: PathBuf,
    /// Rows for window checks over infinite groups.
    #[arg(long, default_value_t = 8)]
    window: usize,
}

#[derive(Args)]
struct RealArgs {
    /// x y d: locate the pair (x, y) at distance d.
    #[arg(long, num_args = 3, allow_negative_numbers = true, value_names = ["X", "Y", "D"])]
    probe: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tol: f64,
    #[arg(long, default_value = "row")]
    axis: String,
}

#[derive(Subcommand)]
enum OracleCmd {
    /// The classical zig-zag complete square of even order.
    Williams {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustive SCM search over a finite group.
    BruteforceScm {
        #[arg(long)]
        group: String,
        #[arg(long, default_value_t = 9)]
        cap: u64,
    },
    /// The nimber multiplication table.
    NimTable {
        #[arg(long)]
        size: u64,
    },
}

enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn usage(e: impl std::fmt::Display) -> Self {
        CliError::Usage(e.to_string())
    }

    fn runtime(e: impl std::fmt::Display) -> Self {
        CliError::Runtime(e.to_string())
    }
}

type CliResult = Result<ExitCode, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let jobs = cli
        .jobs
        .or_else(|| {
            std::env::var("LATININF_JOBS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(0);
    if jobs > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))
}

fn load_region(arg: &RegionArg) -> Result<LatinRegion, CliError> {
    let text = read_file(&arg.region)?;
    let is_csv = arg
        .region
        .extension()
        .map(|e| e == "csv")
        .unwrap_or(false);
    if is_csv {
        let universe = SymbolUniverse::parse(&arg.universe).map_err(CliError::usage)?;
        parse_csv(&text, universe).map_err(CliError::usage)
    } else {
        persist::any_region_from_json(&text).map_err(CliError::usage)
    }
}

/// Emit a verification report as JSON and map pass/fail to the exit code.
fn finish_report(report: VerificationReport) -> CliResult {
    println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
    Ok(if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn summary(fields: &[(&str, String)]) -> String {
    let map: BTreeMap<&str, String> = fields.iter().cloned().collect();
    serde_json::to_string_pretty(&map).expect("serializable")
}

fn dispatch(command: Command) -> CliResult {
    match command {
        Command::BuildTerrace(args) => build_terrace(args),
        Command::Window(args) => window(args),
        Command::Verify(cmd) => verify(cmd),
        Command::Immunize(args) => immunize(args),
        Command::BuildNonrowcomplete(args) => build_nonrowcomplete(args),
        Command::BuildNongroupVatican(args) => build_nongroup_vatican(args),
        Command::Scm(cmd) => scm(cmd),
        Command::Moo(args) => moo(args),
        Command::Knutvic(args) => knutvic(args),
        Command::Orthocheck(args) => orthocheck(args),
        Command::Real(args) => real(args),
        Command::Oracle(cmd) => oracle(cmd),
    }
}

fn build_terrace(args: BuildTerraceArgs) -> CliResult {
    let (mut terrace, cursor) = match &args.resume {
        Some(path) => persist::terrace_from_json(&read_file(path)?).map_err(CliError::usage)?,
        None => {
            let kind = TerraceKind::parse(&args.kind)
                .ok_or_else(|| CliError::usage(format!("unknown terrace kind {:?}", args.kind)))?;
            let group = GroupKernel::parse(&args.group).map_err(CliError::usage)?;
            let index = IndexKind::parse(&args.index)
                .ok_or_else(|| CliError::usage(format!("unknown index kind {:?}", args.index)))?;
            let t = PartialTerrace::new(kind, group, IndexSet::new(index))
                .map_err(CliError::usage)?;
            (t, 0)
        }
    };
    let log = run(&mut terrace, cursor, args.steps, args.verify_each)
        .map_err(CliError::runtime)?;
    write_file(&args.out, &persist::terrace_to_json(&terrace, cursor + args.steps))?;
    println!(
        "{}",
        summary(&[
            ("artifact", "terrace".into()),
            ("steps", log.records.len().to_string()),
            ("points", terrace.len().to_string()),
            ("growth", log.total_growth().to_string()),
            ("out", args.out.display().to_string()),
        ])
    );
    Ok(ExitCode::SUCCESS)
}

fn window(args: WindowArgs) -> CliResult {
    let (terrace, _) =
        persist::terrace_from_json(&read_file(&args.terrace)?).map_err(CliError::usage)?;
    if terrace.len() < args.size {
        return Err(CliError::usage(format!(
            "terrace has {} assigned points, window needs {}",
            terrace.len(),
            args.size
        )));
    }
    let format = match args.format.as_str() {
        "csv" => RenderFormat::Csv,
        "json" => RenderFormat::Json,
        other => return Err(CliError::usage(format!("unknown format {other:?}"))),
    };
    let region = cayley_window(&terrace, &window_of_first(&terrace, args.size))
        .map_err(CliError::runtime)?;
    let text = render(&region, format);
    match &args.out {
        Some(path) => write_file(path, &text)?,
        None => print!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn verify(cmd: VerifyCmd) -> CliResult {
    match cmd {
        VerifyCmd::Latin(arg) => finish_report(verify_latin(&load_region(&arg)?)),
        VerifyCmd::Vatican(arg) => finish_report(verify_vatican_safety(&load_region(&arg)?)),
        VerifyCmd::Semivatican(arg) => {
            finish_report(verify_semivatican_safety(&load_region(&arg)?))
        }
        VerifyCmd::Dcomplete {
            region,
            max_distance,
        } => {
            let d = parse_rational(&max_distance).map_err(CliError::usage)?;
            finish_report(verify_d_complete(&load_region(&region)?, &d))
        }
        VerifyCmd::Orthogonal { region, other } => {
            let a = load_region(&region)?;
            let b = load_region(&RegionArg {
                region: other,
                universe: region.universe.clone(),
            })?;
            finish_report(verify_orthogonal(&a, &b).map_err(CliError::usage)?)
        }
        VerifyCmd::Knutvic { region, modulus } => {
            finish_report(verify_knutvic(&load_region(&region)?, modulus))
        }
        VerifyCmd::Quadrangle { region, budget } => finish_report(
            verify_quadrangle(&load_region(&region)?, budget).map_err(CliError::runtime)?,
        ),
        VerifyCmd::Immune { region, max_cols } => finish_report(
            verify_immune(&load_region(&region)?, max_cols).map_err(CliError::usage)?,
        ),
    }
}

fn immunize(args: ImmunizeArgs) -> CliResult {
    let (mut state, cursor) = match &args.input {
        Some(path) => persist::immune_from_json(&read_file(path)?).map_err(CliError::usage)?,
        None => (seed_rowcomplete(), 0),
    };
    let added = state.immunize().map_err(CliError::runtime)?;
    write_file(&args.out, &persist::immune_to_json(&state, cursor))?;
    println!(
        "{}",
        summary(&[
            ("artifact", "immune-region".into()),
            ("cells_added", added.to_string()),
            ("treated_triples", state.ledger().len().to_string()),
            ("out", args.out.display().to_string()),
        ])
    );
    Ok(ExitCode::SUCCESS)
}

fn build_nonrowcomplete(args: BuildStateArgs) -> CliResult {
    let (mut state, cursor) = match &args.resume {
        Some(path) => persist::immune_from_json(&read_file(path)?).map_err(CliError::usage)?,
        None => (seed_rowcomplete(), 0),
    };
    let log = run(&mut state, cursor, args.steps, args.verify_each).map_err(CliError::runtime)?;
    write_file(&args.out, &persist::immune_to_json(&state, cursor + args.steps))?;
    println!(
        "{}",
        summary(&[
            ("artifact", "immune-region".into()),
            ("steps", log.records.len().to_string()),
            ("cells", state.region().len().to_string()),
            ("out", args.out.display().to_string()),
        ])
    );
    Ok(ExitCode::SUCCESS)
}

fn build_nongroup_vatican(args: BuildVaticanArgs) -> CliResult {
    let mode = if args.semi {
        BalanceMode::SemiVatican
    } else {
        BalanceMode::Vatican
    };
    let (mut state, cursor) = match &args.common.resume {
        Some(path) => {
            let (state, cursor) =
                persist::vatican_from_json(&read_file(path)?).map_err(CliError::usage)?;
            if state.mode() != mode {
                return Err(CliError::usage("resume state has a different balance mode"));
            }
            (state, cursor)
        }
        None => (seed_vatican(mode), 0),
    };
    let log = run(
        &mut state,
        cursor,
        args.common.steps,
        args.common.verify_each,
    )
    .map_err(CliError::runtime)?;
    write_file(
        &args.common.out,
        &persist::vatican_to_json(&state, cursor + args.common.steps),
    )?;
    println!(
        "{}",
        summary(&[
            ("artifact", "vatican-region".into()),
            ("steps", log.records.len().to_string()),
            ("cells", state.region().len().to_string()),
            ("out", args.common.out.display().to_string()),
        ])
    );
    Ok(ExitCode::SUCCESS)
}

fn scm(cmd: ScmCmd) -> CliResult {
    match cmd {
        ScmCmd::Greedy {
            group,
            steps,
            out,
            verify_each,
            resume,
        } => {
            let (mut builder, cursor) = match &resume {
                Some(path) => {
                    let (mapping, cursor) =
                        persist::mapping_from_json(&read_file(path)?).map_err(CliError::usage)?;
                    (ScmBuilder::from_mapping(mapping), cursor)
                }
                None => {
                    let kernel = GroupKernel::parse(&group).map_err(CliError::usage)?;
                    (ScmBuilder::new(kernel).map_err(CliError::usage)?, 0)
                }
            };
            let log = run(&mut builder, cursor, steps, verify_each).map_err(CliError::runtime)?;
            write_file(
                &out,
                &persist::mapping_to_json(builder.mapping(), cursor + steps),
            )?;
            println!(
                "{}",
                summary(&[
                    ("artifact", "mapping".into()),
                    ("steps", log.records.len().to_string()),
                    ("points", builder.mapping().len().to_string()),
                    ("out", out.display().to_string()),
                ])
            );
            Ok(ExitCode::SUCCESS)
        }
        ScmCmd::Cyclic { n, out } => {
            let cert = scm_cyclic(n).map_err(CliError::usage)?;
            emit_certificate(cert, out)
        }
        ScmCmd::Product { orders, out } => {
            let parts = orders
                .iter()
                .map(|n| scm_cyclic(*n))
                .collect::<Result<Vec<_>, _>>()
                .map_err(CliError::usage)?;
            let refs: Vec<&latininf::ortho::ScmCertificate> = parts.iter().collect();
            let cert = scm_direct_product(&refs).map_err(CliError::runtime)?;
            emit_certificate(cert, out)
        }
        ScmCmd::Quotient { n, h, out } => {
            if h == 0 || n % h != 0 {
                return Err(CliError::usage("h must divide n"));
            }
            let kernel = GroupKernel::parse(&format!("Zn:{n}")).map_err(CliError::usage)?;
            let sub_order = n / h;
            let subgroup: Vec<GroupElement> = (0..sub_order)
                .map(|k| kernel.parse_element(&(h * k).to_string()).expect("residue"))
                .collect();
            let theta_sub = scm_cyclic(sub_order).map_err(CliError::usage)?;
            let phi_quot = scm_cyclic(h).map_err(CliError::usage)?;
            // Transport both through the canonical identifications
            // H ≅ Z_{n/h} via k ↦ hk and G/H ≅ Z_h via the reps 0..h-1.
            let theta_h: BTreeMap<GroupElement, GroupElement> = theta_sub
                .mapping
                .pairs()
                .map(|(g, v)| {
                    let gk = residue_value(g);
                    let vk = residue_value(v);
                    (
                        kernel.parse_element(&(h * gk).to_string()).expect("residue"),
                        kernel.parse_element(&(h * vk).to_string()).expect("residue"),
                    )
                })
                .collect();
            let phi_reps: BTreeMap<GroupElement, GroupElement> = phi_quot
                .mapping
                .pairs()
                .map(|(g, v)| {
                    (
                        kernel
                            .parse_element(&residue_value(g).to_string())
                            .expect("residue"),
                        kernel
                            .parse_element(&residue_value(v).to_string())
                            .expect("residue"),
                    )
                })
                .collect();
            let reps = canonical_transversal(&kernel, &subgroup).map_err(CliError::runtime)?;
            let cert = scm_quotient(&kernel, &subgroup, &theta_h, &phi_reps, &reps)
                .map_err(CliError::runtime)?;
            emit_certificate(cert, out)
        }
        ScmCmd::E2 { m, out } => {
            let cert = scm_elementary_2group(m).map_err(CliError::usage)?;
            emit_certificate(cert, out)
        }
    }
}

fn residue_value(e: &GroupElement) -> u64 {
    e.to_string().parse().expect("canonical residue text")
}

fn emit_certificate(
    cert: latininf::ortho::ScmCertificate,
    out: Option<PathBuf>,
) -> CliResult {
    if let Some(path) = &out {
        write_file(path, &persist::mapping_to_json(&cert.mapping, 0))?;
    }
    println!(
        "{}",
        summary(&[
            ("artifact", "scm-certificate".into()),
            ("group", cert.group.clone()),
            ("elements", cert.mapping.len().to_string()),
            ("transcript", cert.transcript.join("; ")),
        ])
    );
    Ok(ExitCode::SUCCESS)
}

fn moo(args: MooArgs) -> CliResult {
    let (mut fam, cursor) = match &args.resume {
        Some(path) => persist::moo_from_json(&read_file(path)?).map_err(CliError::usage)?,
        None => {
            if args.k == 0 {
                return Err(CliError::usage("family size k must be at least 1"));
            }
            let kernel = GroupKernel::parse(&args.group).map_err(CliError::usage)?;
            (MooFamily::new(kernel, args.k).map_err(CliError::usage)?, 0)
        }
    };
    let log = run(&mut fam, cursor, args.steps, args.verify_each).map_err(CliError::runtime)?;
    write_file(&args.out, &persist::moo_to_json(&fam, cursor + args.steps))?;
    println!(
        "{}",
        summary(&[
            ("artifact", "moo-family".into()),
            ("steps", log.records.len().to_string()),
            ("k", fam.size().to_string()),
            ("out", args.out.display().to_string()),
        ])
    );
    Ok(ExitCode::SUCCESS)
}

fn knutvic(args: KnutvicArgs) -> CliResult {
    let cert = scm_cyclic(args.n).map_err(CliError::usage)?;
    let square = knut_vic_square(&cert).map_err(CliError::runtime)?;
    if let Some(path) = &args.out {
        write_file(path, &render(&square, RenderFormat::Csv))?;
    }
    finish_report(verify_knutvic(&square, Some(args.n)))
}

fn orthocheck(args: OrthocheckArgs) -> CliResult {
    let (mapping, _) =
        persist::mapping_from_json(&read_file(&args.mapping)?).map_err(CliError::usage)?;
    let kernel = mapping.group().clone();
    let (rows, cols): (Vec<GroupElement>, Vec<GroupElement>) = if mapping.is_total() {
        let all = kernel.elements().map_err(CliError::usage)?;
        (all.clone(), all)
    } else {
        let rows: Vec<GroupElement> = (0..args.window as u64)
            .map(|k| kernel.enumerate(k).expect("enumeration"))
            .collect();
        let cols: Vec<GroupElement> = mapping.pairs().map(|(g, _)| g.clone()).collect();
        (rows, cols)
    };
    let ltheta = table_window(&kernel, TableStyle::Theta, Some(&mapping), &rows, &cols)
        .map_err(CliError::runtime)?;
    let cayley =
        table_window(&kernel, TableStyle::Cayley, None, &rows, &cols).map_err(CliError::runtime)?;
    let normal = table_window(&kernel, TableStyle::NormalMult, None, &rows, &cols)
        .map_err(CliError::runtime)?;
    let mut vs_cayley =
        verify_orthogonal(&ltheta, &cayley).map_err(CliError::runtime)?;
    vs_cayley.property = "orthogonal-to-cayley".into();
    let mut vs_normal =
        verify_orthogonal(&ltheta, &normal).map_err(CliError::runtime)?;
    vs_normal.property = "orthogonal-to-normal-mult".into();
    let pass = vs_cayley.pass && vs_normal.pass;
    println!(
        "{}",
        serde_json::to_string_pretty(&vec![vs_cayley, vs_normal]).expect("serializable")
    );
    Ok(if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn real(args: RealArgs) -> CliResult {
    if args.probe.len() != 3 {
        return Err(CliError::usage("--probe needs exactly X Y D"));
    }
    let axis = match args.axis.as_str() {
        "row" => ProbeAxis::Row,
        "col" | "column" => ProbeAxis::Column,
        other => return Err(CliError::usage(format!("unknown axis {other:?}"))),
    };
    let result = locate_pair(args.probe[0], args.probe[1], args.probe[2], args.tol, axis)
        .map_err(CliError::usage)?;
    println!("{}", serde_json::to_string_pretty(&result).expect("serializable"));
    Ok(ExitCode::SUCCESS)
}

fn oracle(cmd: OracleCmd) -> CliResult {
    match cmd {
        OracleCmd::Williams { n, out } => {
            let square = williams_complete_square(n).map_err(CliError::usage)?;
            if let Some(path) = &out {
                write_file(path, &render(&square, RenderFormat::Csv))?;
            }
            let one = parse_rational("1").expect("literal");
            finish_report(verify_d_complete(&square, &one))
        }
        OracleCmd::BruteforceScm { group, cap } => {
            let kernel = GroupKernel::parse(&group).map_err(CliError::usage)?;
            let found = brute_force_scm_search(&kernel, cap).map_err(CliError::usage)?;
            match found {
                Some(mapping) => {
                    debug_assert!(verify_scm(&mapping).pass);
                    print!("{}", persist::mapping_to_json(&mapping, 0));
                }
                None => println!(
                    "{}",
                    summary(&[("group", kernel.render()), ("scm", "none".into())])
                ),
            }
            Ok(ExitCode::SUCCESS)
        }
        OracleCmd::NimTable { size } => {
            let mut lines = vec!["x,y,product".to_string()];
            for x in 0..size {
                for y in 0..size {
                    lines.push(format!("{x},{y},{}", latininf::group::nim_mul(x, y)));
                }
            }
            println!("{}", lines.join("\n"));
            Ok(ExitCode::SUCCESS)
        }
    }
}
