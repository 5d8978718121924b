//! Command-line surface: instance validation, exact and approximate solves,
//! encoders and ratio tables.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::crossing::{compute_crossings, crossing_ratio, crossing_solve};
use crate::dp::dp_opt;
use crate::error::{Error, Result};
use crate::geometry::{
    check_ball_consistency, geo_ratio, geo_solve, interference_graph, intersection_graph,
    k_for_epsilon_geo, search_origin, GeoMode, GeoOptions,
};
use crate::io::{
    read_decomposition, read_instance, read_json, to_json, BallFile, CspFile, EdgeListFile,
    InstanceFile, LatticeFile, PartitionFile, VisionFile,
};
use crate::model::{
    balance_report, energy, to_undirected, AlphaStar, Instance, Objective, Partition,
    DEFAULT_BALANCE_CAP,
};
use crate::oracle::{exact_opt, DEFAULT_ORACLE_CAP};
use crate::problems::{
    encode_edwards_anderson, encode_kcut, encode_max2csp, encode_maxcut, encode_maxdicut,
    vision_grid,
};
use crate::shifting::{
    baker_max, baker_min_balanced, k_for_epsilon, max_product, td_exact, ApproxResult, ShiftOutcome,
};
use crate::treedecomp::validate_td;

/// Exit status for usage errors.
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(
    name = "layercut",
    version,
    about = "Shifting schemes for pairwise energy functions"
)]
pub struct Cli {
    /// Worker threads (default: machine parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check an instance file, optionally against a scheme's preconditions.
    Validate(ValidateArgs),
    /// Exhaustive optimum (small instances only).
    Oracle(OracleArgs),
    /// Exact or approximate optimization.
    Solve(SolveArgs),
    /// Write an instance file for a combinatorial problem.
    Encode(EncodeArgs),
    /// Guarantee of each scheme as a function of k.
    RatioTable(RatioArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Td,
    Baker,
    Geo,
    Crossing,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Td => "td",
            Scheme::Baker => "baker",
            Scheme::Geo => "geo",
            Scheme::Crossing => "crossing",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Intersection,
    Interference,
}

impl From<ModeArg> for GeoMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Intersection => GeoMode::Intersection,
            ModeArg::Interference => GeoMode::Interference,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    /// Minimize instead of maximize.
    #[arg(long)]
    pub min: bool,
    /// Maximize the product of folded vertex functions (baker only).
    #[arg(long)]
    pub product: bool,
    /// `uniform` or a partition file of `[α_uv, α_vu]` pairs.
    #[arg(long, default_value = "uniform")]
    pub partition: String,
    /// Ball set file for the geometric scheme (else `metadata.balls`).
    #[arg(long)]
    pub balls: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Search grid origins for a small density.
    #[arg(long)]
    pub search_origin: bool,
    /// Tree decomposition file for the exact scheme.
    #[arg(long)]
    pub td: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub file: PathBuf,
    #[arg(long, value_enum)]
    pub scheme: Option<Scheme>,
    #[arg(long)]
    pub k: Option<usize>,
    #[command(flatten)]
    pub problem: ProblemArgs,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    pub file: PathBuf,
    #[arg(long)]
    pub min: bool,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("which").required(true).args(["scheme", "exact_td"])))]
pub struct SolveArgs {
    pub file: PathBuf,
    #[arg(long, value_enum)]
    pub scheme: Option<Scheme>,
    /// Same as `--scheme td`.
    #[arg(long)]
    pub exact_td: bool,
    #[arg(long, conflicts_with = "epsilon")]
    pub k: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long)]
    pub json: bool,
    /// Include wall time in the report.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EncodeKind {
    Maxcut,
    Dicut,
    Kcut,
    Csp,
    Ea,
    Vision,
    Geometric,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(value_enum)]
    pub kind: EncodeKind,
    pub input: PathBuf,
    /// Output path (default: stdout).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Labels of geometric instances.
    #[arg(long, default_value_t = 2)]
    pub q: usize,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RatioScheme {
    Baker,
    /// Balanced min-sum; needs `--alpha`.
    Min,
    Geo,
    Crossing,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("range").required(true).args(["k_range", "epsilon"])))]
pub struct RatioArgs {
    #[arg(long, value_enum)]
    pub scheme: RatioScheme,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Inclusive range `a..b`.
    #[arg(long)]
    pub k_range: Option<String>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub phi: usize,
    #[arg(long)]
    pub alpha: Option<f64>,
}

/// Machine-readable solve report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub scheme: Scheme,
    pub objective: &'static str,
    pub k: usize,
    pub ratio_guarantee: f64,
    /// `exponent` for max-product, `factor` otherwise.
    pub ratio_kind: &'static str,
    pub value: f64,
    pub energy: f64,
    pub dp_bound: f64,
    pub configuration: Vec<usize>,
    pub winning_shift: Vec<usize>,
    pub widths: Vec<usize>,
    pub per_shift: Vec<ShiftOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct OracleReport {
    objective: &'static str,
    value: f64,
    configuration: Vec<usize>,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Capacity(_) => 3,
        Error::Parameter(_) | Error::Domain(_) | Error::Precondition(_) | Error::Unsupported(_) => {
            4
        }
        Error::InvalidInstance(_)
        | Error::InvalidConfiguration(_)
        | Error::InvalidPartition(_)
        | Error::Degeneracy(_)
        | Error::Consistency(_)
        | Error::Format(_)
        | Error::Io(_) => 2,
    }
}

/// Parses `argv` (program name first) and runs the command.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = write!(err, "{}", e.render());
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
    {
        Ok(pool) => pool,
        Err(e) => {
            let _ = writeln!(err, "error: cannot start worker pool: {e}");
            return 4;
        }
    };
    match pool.install(|| execute(&cli.command)) {
        Ok(text) => {
            if out.write_all(text.as_bytes()).is_err() {
                return 2;
            }
            0
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(command: &Command) -> Result<String> {
    match command {
        Command::Validate(args) => validate(args),
        Command::Oracle(args) => oracle(args),
        Command::Solve(args) => solve(args),
        Command::Encode(args) => encode(args),
        Command::RatioTable(args) => ratio_table(args),
    }
}

fn objective(min: bool) -> Objective {
    if min {
        Objective::Min
    } else {
        Objective::Max
    }
}

fn objective_name(obj: Objective) -> &'static str {
    match obj {
        Objective::Max => "max",
        Objective::Min => "min",
    }
}

/// Ratio rounded to 12 decimals without trailing zeros.
pub fn format_ratio(x: f64) -> String {
    let s = format!("{x:.12}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn join<T: ToString>(items: &[T]) -> String {
    if items.is_empty() {
        return "-".into();
    }
    items.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}

fn undirected(inst: Instance) -> Result<Instance> {
    if inst.is_directed() {
        log::info!("merging antiparallel arcs into an undirected instance");
        to_undirected(&inst)
    } else {
        Ok(inst)
    }
}

fn load_partition(source: &str, inst: &Instance) -> Result<Partition> {
    let part = if source == "uniform" {
        Partition::uniform(inst.edges().len())
    } else {
        read_json::<PartitionFile>(Path::new(source))?.to_partition()?
    };
    part.check_for(inst)?;
    Ok(part)
}

struct GeoSetup {
    balls: crate::geometry::BallSet,
    options: GeoOptions,
}

fn geo_setup(file: &InstanceFile, args: &ProblemArgs, obj: Objective) -> Result<GeoSetup> {
    let ball_file = match &args.balls {
        Some(path) => read_json::<BallFile>(path)?,
        None => file.embedded_balls()?.ok_or_else(|| {
            Error::Consistency("geometric scheme needs --balls or metadata.balls".into())
        })?,
    };
    let balls = ball_file.balls()?;
    let mode = args
        .mode
        .map(GeoMode::from)
        .or(ball_file.mode)
        .unwrap_or(GeoMode::Intersection);
    let origin = if args.search_origin {
        Some(search_origin(&balls, mode)?)
    } else {
        ball_file.origin.clone()
    };
    Ok(GeoSetup {
        balls,
        options: GeoOptions {
            mode,
            origin,
            objective: obj,
        },
    })
}

fn validate(args: &ValidateArgs) -> Result<String> {
    let (file, inst) = read_instance(&args.file)?;
    let mut text = String::new();
    let _ = writeln!(
        text,
        "valid instance: q={} n={} m={} directed={}",
        inst.q(),
        inst.num_vertices(),
        inst.edges().len(),
        inst.is_directed()
    );
    let Some(scheme) = args.scheme else {
        return Ok(text);
    };
    let obj = objective(args.problem.min);
    match scheme {
        Scheme::Td => {
            let inst = undirected(inst)?;
            load_partition(&args.problem.partition, &inst)?;
            if let Some(path) = &args.problem.td {
                let td = read_decomposition(path)?;
                validate_td(&inst.graph(), &td)
                    .map_err(|v| Error::Consistency(format!("invalid tree decomposition: {v}")))?;
                let _ = writeln!(text, "tree decomposition valid: width {}", td.width());
            }
        }
        Scheme::Baker => {
            let inst = undirected(inst)?;
            let part = load_partition(&args.problem.partition, &inst)?;
            inst.require_nonnegative("baker shifting")?;
            if args.problem.product || obj == Objective::Min {
                let report = balance_report(&inst, &part, DEFAULT_BALANCE_CAP)?;
                if args.problem.product {
                    if let Some((v, b)) =
                        report.balancers.iter().enumerate().find(|(_, &b)| b < 1.0)
                    {
                        return Err(Error::Domain(format!(
                            "max-product needs f_i >= 1 everywhere, but vertex {v} reaches {b}"
                        )));
                    }
                } else {
                    match report.alpha_star {
                        AlphaStar::Finite(a) => {
                            let _ = writeln!(text, "alpha*={}", a);
                        }
                        AlphaStar::Unbalanced { vertex } => {
                            return Err(Error::Domain(format!(
                                "vertex {vertex} is unbalanced; min-sum shifting requires f_i >= b_i > 0"
                            )))
                        }
                    }
                }
            }
        }
        Scheme::Geo => {
            let inst_u = undirected(inst.clone())?;
            load_partition(&args.problem.partition, &inst_u)?;
            inst_u.require_nonnegative("geometric shifting")?;
            let setup = geo_setup(&file, &args.problem, obj)?;
            check_ball_consistency(&inst_u, &setup.balls, setup.options.mode)?;
            let grid = crate::geometry::grid_decompose(
                &setup.balls,
                setup.options.mode,
                setup.options.origin.as_deref(),
            )?;
            let _ = writeln!(
                text,
                "balls consistent: d={} density={}",
                setup.balls.d, grid.density
            );
        }
        Scheme::Crossing => {
            if inst.is_directed() {
                return Err(Error::Precondition(
                    "crossing scheme expects an undirected instance".into(),
                ));
            }
            load_partition(&args.problem.partition, &inst)?;
            inst.require_nonnegative("crossing shifting")?;
            let drawing = compute_crossings(&file.planar_coords()?, inst.edges())?;
            let phi = drawing.phi(inst.edges().len());
            let _ = writeln!(
                text,
                "drawing: crossings={} phi={}",
                drawing.crossings.len(),
                phi
            );
            if let Some(k) = args.k {
                if k <= phi + 2 {
                    return Err(Error::Parameter(format!(
                        "need k > phi + 2 = {}, got k = {k}",
                        phi + 2
                    )));
                }
            }
        }
    }
    let _ = writeln!(text, "preconditions hold for scheme {}", scheme.name());
    Ok(text)
}

fn oracle(args: &OracleArgs) -> Result<String> {
    let (_, inst) = read_instance(&args.file)?;
    let obj = objective(args.min);
    let (value, cfg) = exact_opt(&inst, obj, None, DEFAULT_ORACLE_CAP)?;
    let report = OracleReport {
        objective: objective_name(obj),
        value,
        configuration: cfg.into_labels(),
    };
    if args.json {
        return Ok(to_json(&report)? + "\n");
    }
    Ok(format!(
        "objective: {}\nvalue: {}\nconfiguration: {}\n",
        report.objective,
        report.value,
        join(&report.configuration)
    ))
}

fn choose_k(scheme: Scheme, k: Option<usize>, epsilon: Option<f64>, d: usize) -> Result<usize> {
    match (k, epsilon) {
        (Some(k), _) => Ok(k),
        (None, Some(eps)) => match scheme {
            Scheme::Baker => k_for_epsilon(eps),
            Scheme::Geo => k_for_epsilon_geo(eps, d),
            Scheme::Crossing => Err(Error::Parameter(
                "the crossing scheme has no epsilon mode; its guarantee depends on phi, pass --k"
                    .into(),
            )),
            Scheme::Td => Ok(0),
        },
        (None, None) => match scheme {
            Scheme::Td => Ok(0),
            _ => Err(Error::Parameter("pass --k or --epsilon".into())),
        },
    }
}

fn solve(args: &SolveArgs) -> Result<String> {
    let started = Instant::now();
    let scheme = if args.exact_td {
        Scheme::Td
    } else {
        args.scheme.unwrap_or(Scheme::Td)
    };
    let (file, inst) = read_instance(&args.file)?;
    let obj = objective(args.problem.min);
    if args.problem.product && (scheme != Scheme::Baker || obj == Objective::Min) {
        return Err(Error::Unsupported(
            "--product applies to maximization with --scheme baker".into(),
        ));
    }
    let mut phi = None;
    let (result, k) = match scheme {
        Scheme::Td => {
            let inst = undirected(inst)?;
            let part = load_partition(&args.problem.partition, &inst)?;
            let res = match &args.problem.td {
                Some(path) => exact_with_decomposition(&inst, &part, path, obj)?,
                None => td_exact(&inst, &part, obj)?,
            };
            (res, 0)
        }
        Scheme::Baker => {
            let k = choose_k(scheme, args.k, args.epsilon, 0)?;
            let inst = undirected(inst)?;
            let part = load_partition(&args.problem.partition, &inst)?;
            let res = if args.problem.product {
                max_product(&inst, &part, k)?
            } else if obj == Objective::Min {
                baker_min_balanced(&inst, &part, k)?
            } else {
                baker_max(&inst, &part, k)?
            };
            (res, k)
        }
        Scheme::Geo => {
            let setup = geo_setup(&file, &args.problem, obj)?;
            let k = choose_k(scheme, args.k, args.epsilon, setup.balls.d)?;
            let inst = undirected(inst)?;
            let part = load_partition(&args.problem.partition, &inst)?;
            (geo_solve(&inst, &setup.balls, &part, k, &setup.options)?, k)
        }
        Scheme::Crossing => {
            if obj == Objective::Min {
                return Err(Error::Unsupported(
                    "the crossing scheme maximizes only".into(),
                ));
            }
            let k = choose_k(scheme, args.k, args.epsilon, 0)?;
            if inst.is_directed() {
                return Err(Error::Precondition(
                    "crossing scheme expects an undirected instance".into(),
                ));
            }
            let part = load_partition(&args.problem.partition, &inst)?;
            let drawing = compute_crossings(&file.planar_coords()?, inst.edges())?;
            phi = Some(drawing.phi(inst.edges().len()));
            (crossing_solve(&inst, &drawing, &part, k)?, k)
        }
    };
    log::info!("scheme {} with k={k} finished", scheme.name());
    let report = SolveReport {
        scheme,
        objective: objective_name(obj),
        k,
        ratio_guarantee: result.ratio_guarantee,
        ratio_kind: if args.problem.product {
            "exponent"
        } else {
            "factor"
        },
        value: result.value,
        energy: result.energy,
        dp_bound: result.dp_bound,
        configuration: result.cfg.into_labels(),
        winning_shift: result.winning_shift,
        widths: result.widths,
        per_shift: result.per_shift,
        phi,
        wall_time_ms: args.timing.then(|| started.elapsed().as_secs_f64() * 1e3),
    };
    if args.json {
        return Ok(to_json(&report)? + "\n");
    }
    Ok(render_report(&report))
}

fn exact_with_decomposition(
    inst: &Instance,
    part: &Partition,
    path: &Path,
    obj: Objective,
) -> Result<ApproxResult> {
    let td = read_decomposition(path)?;
    validate_td(&inst.graph(), &td)
        .map_err(|v| Error::Consistency(format!("invalid tree decomposition: {v}")))?;
    let all: Vec<usize> = (0..inst.num_vertices()).collect();
    let (value, cfg) = dp_opt(inst, &td, part, &all, obj)?;
    Ok(ApproxResult {
        energy: energy(inst, &cfg)?,
        cfg,
        value,
        dp_bound: value,
        ratio_guarantee: 1.0,
        k: 0,
        winning_shift: Vec::new(),
        widths: vec![td.width()],
        per_shift: Vec::new(),
    })
}

pub fn render_report(r: &SolveReport) -> String {
    let mut text = String::new();
    let _ = writeln!(text, "scheme: {}", r.scheme.name());
    let _ = writeln!(text, "objective: {}", r.objective);
    let _ = writeln!(text, "k: {}", r.k);
    if let Some(phi) = r.phi {
        let _ = writeln!(text, "phi: {phi}");
    }
    let _ = writeln!(
        text,
        "guarantee: {} ({})",
        format_ratio(r.ratio_guarantee),
        r.ratio_kind
    );
    let _ = writeln!(text, "value: {}", r.value);
    let _ = writeln!(text, "energy: {}", r.energy);
    let _ = writeln!(text, "dp_bound: {}", r.dp_bound);
    let _ = writeln!(text, "winning_shift: {}", join(&r.winning_shift));
    let _ = writeln!(text, "widths: {}", join(&r.widths));
    let _ = writeln!(text, "configuration: {}", join(&r.configuration));
    for s in &r.per_shift {
        let _ = writeln!(
            text,
            "shift {}: value={} dp_bound={} widths={}",
            join(&s.shift),
            s.value,
            s.dp_bound,
            join(&s.widths)
        );
    }
    if let Some(ms) = r.wall_time_ms {
        let _ = writeln!(text, "wall_time_ms: {ms:.3}");
    }
    text
}

fn cut_table(q: usize) -> Vec<f64> {
    (0..q * q)
        .map(|i| if i / q != i % q { 1.0 } else { 0.0 })
        .collect()
}

fn encode(args: &EncodeArgs) -> Result<String> {
    let path = args.input.as_path();
    let (inst, metadata, coords) = match args.kind {
        EncodeKind::Maxcut => {
            let f: EdgeListFile = read_json(path)?;
            (
                encode_maxcut(f.num_vertices, &f.triples())?,
                serde_json::json!({"kind": "maxcut"}),
                None,
            )
        }
        EncodeKind::Dicut => {
            let f: EdgeListFile = read_json(path)?;
            (
                encode_maxdicut(f.num_vertices, &f.triples())?,
                serde_json::json!({"kind": "dicut"}),
                None,
            )
        }
        EncodeKind::Kcut => {
            let f: EdgeListFile = read_json(path)?;
            let k =
                f.k.ok_or_else(|| Error::Parameter("kcut input needs a field k".into()))?;
            (
                encode_kcut(f.num_vertices, &f.triples(), k)?,
                serde_json::json!({"kind": "kcut", "k": k}),
                None,
            )
        }
        EncodeKind::Csp => {
            let f: CspFile = read_json(path)?;
            (
                encode_max2csp(f.q, f.num_vars, &f.constraints)?,
                serde_json::json!({"kind": "csp"}),
                None,
            )
        }
        EncodeKind::Ea => {
            let f: LatticeFile = read_json(path)?;
            let ea = encode_edwards_anderson(&f.dims, &f.couplings, f.field)?;
            let meta = serde_json::json!({
                "kind": "edwards_anderson",
                "dims": f.dims,
                "constant": ea.constant,
                "note": "maximize the cut; ground energy = constant - 2 * cut, label 0 is spin -1",
            });
            (ea.instance, meta, None)
        }
        EncodeKind::Vision => {
            let f: VisionFile = read_json(path)?;
            (
                vision_grid(f.width, f.height, f.q, &f.observed, f.smoothness)?,
                serde_json::json!({"kind": "vision"}),
                None,
            )
        }
        EncodeKind::Geometric => {
            let mut f: BallFile = read_json(path)?;
            let balls = f.balls()?;
            let mode = args
                .mode
                .map(GeoMode::from)
                .or(f.mode)
                .unwrap_or(GeoMode::Intersection);
            f.mode = Some(mode);
            let n = balls.len();
            let q = args.q;
            let inst = match mode {
                GeoMode::Intersection => {
                    let edges: Vec<_> = intersection_graph(&balls)
                        .edges()
                        .iter()
                        .map(|&(u, v)| (u, v, 1.0))
                        .collect();
                    encode_kcut(n, &edges, q)?
                }
                GeoMode::Interference => {
                    let arcs = interference_graph(&balls);
                    let m = arcs.len();
                    Instance::new(
                        q,
                        true,
                        n,
                        arcs,
                        vec![vec![0.0; q]; n],
                        vec![cut_table(q); m],
                    )?
                }
            };
            let meta = serde_json::json!({"kind": "geometric", "balls": f});
            (inst, meta, Some(balls.centers.clone()))
        }
    };
    let mut file = InstanceFile::from_instance(&inst);
    file.metadata = Some(metadata);
    file.coords = coords;
    let text = to_json(&file)? + "\n";
    match &args.output {
        Some(out) => {
            std::fs::write(out, text).map_err(|e| Error::Io(format!("{}: {e}", out.display())))?;
            Ok(format!("wrote {}\n", out.display()))
        }
        None => Ok(text),
    }
}

fn parse_range(text: &str) -> Result<(usize, usize)> {
    let bad = || Error::Parameter(format!("k range must look like a..b, got {text:?}"));
    let (a, b) = text.split_once("..").ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b
        .trim()
        .trim_start_matches('=')
        .parse()
        .map_err(|_| bad())?;
    if a == 0 || a > b {
        return Err(Error::Parameter(format!(
            "k range needs 1 <= a <= b, got {text:?}"
        )));
    }
    Ok((a, b))
}

fn ratio_for(args: &RatioArgs, k: usize) -> Result<f64> {
    let base = k as f64 / (k + 2) as f64;
    Ok(match args.scheme {
        RatioScheme::Baker => base,
        RatioScheme::Min => {
            let alpha = args
                .alpha
                .filter(|a| *a >= 1.0)
                .ok_or_else(|| Error::Parameter("min-sum ratios need --alpha >= 1".into()))?;
            1.0 + 2.0 * (alpha - 1.0) / (k + 2) as f64
        }
        RatioScheme::Geo => geo_ratio(k, args.d),
        RatioScheme::Crossing => crossing_ratio(k, args.phi),
    })
}

fn ratio_table(args: &RatioArgs) -> Result<String> {
    let mut text = String::new();
    if let Some(eps) = args.epsilon {
        let k = match args.scheme {
            RatioScheme::Baker | RatioScheme::Min => k_for_epsilon(eps)?,
            RatioScheme::Geo => k_for_epsilon_geo(eps, args.d)?,
            RatioScheme::Crossing => {
                return Err(Error::Parameter(
                    "the crossing scheme has no epsilon mode; its guarantee depends on phi".into(),
                ))
            }
        };
        let _ = writeln!(
            text,
            "epsilon={eps} k={k} ratio={}",
            format_ratio(ratio_for(args, k)?)
        );
    }
    if let Some(range) = &args.k_range {
        let (a, b) = parse_range(range)?;
        for k in a..=b {
            let _ = writeln!(text, "k={k} ratio={}", format_ratio(ratio_for(args, k)?));
        }
    }
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("layercut").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn baker_ratio_row() {
        let (code, out, _) = run_str(&["ratio-table", "--scheme", "baker", "--k-range", "18..18"]);
        assert_eq!(code, 0);
        assert_eq!(out, "k=18 ratio=0.9\n");
    }

    #[test]
    fn epsilon_row_picks_k() {
        let (code, out, _) = run_str(&["ratio-table", "--scheme", "baker", "--epsilon", "0.1"]);
        assert_eq!(code, 0);
        assert_eq!(out, "epsilon=0.1 k=18 ratio=0.9\n");
    }

    #[test]
    fn geo_epsilon_with_rho_point_nine() {
        let (code, out, _) = run_str(&[
            "ratio-table",
            "--scheme",
            "geo",
            "--d",
            "3",
            "--epsilon",
            "0.19",
        ]);
        assert_eq!(code, 0);
        assert!(out.starts_with("epsilon=0.19 k=18 "), "{out}");
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        let (code, _, err) = run_str(&["ratio-table", "--bogus"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(!err.is_empty());
    }

    #[test]
    fn crossing_has_no_epsilon_mode() {
        let (code, _, err) = run_str(&["ratio-table", "--scheme", "crossing", "--epsilon", "0.1"]);
        assert_eq!(code, 4);
        assert!(err.contains("phi"));
    }

    #[test]
    fn bad_range_is_parameter_error() {
        assert_eq!(
            run_str(&["ratio-table", "--scheme", "baker", "--k-range", "5..2"]).0,
            4
        );
    }

    #[test]
    fn ratio_formatting() {
        assert_eq!(format_ratio(0.9), "0.9");
        assert_eq!(format_ratio(0.9 * 0.9), "0.81");
        assert_eq!(format_ratio(1.0), "1");
        assert_eq!(format_ratio(0.5), "0.5");
    }

    #[test]
    fn missing_file_is_validation_failure() {
        assert_eq!(run_str(&["validate", "/nonexistent/instance.json"]).0, 2);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Capacity(String::new())), 3);
        assert_eq!(exit_code(&Error::Domain(String::new())), 4);
        assert_eq!(exit_code(&Error::InvalidInstance(String::new())), 2);
    }
}
