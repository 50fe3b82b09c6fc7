//! Command-line front end: `bound`, `colour`, `gen`, `convert` and `bench`.
//!
//! The binary only parses arguments and calls [`run`]; everything else lives
//! here so the commands can be driven from tests.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::graph::{
    connected_components, counting_bound, gen_forbidden_intersection, gen_gnp, gen_hamming, gen_kneser,
    validate_partition, ConflictGraph, Partition, TimetablingInstance,
};
use crate::ingest::{
    parse_dimacs, parse_itc2007, parse_native, parse_toronto, write_dimacs, write_native, write_partition,
    InstanceDocument, SourceFormat,
};
use crate::oracle::{exact_bounded_chromatic, sandwich_check, unbounded_class_size};
use crate::relax::{
    build_bounded, build_laminar, build_precoloured, build_room_assignment, build_theta, build_unbounded,
    build_weighted, BoundSemantics, BoundedOptions, LaminarOptions, RoomOptions, SdpModel, ThetaVariant,
};
use crate::rounding::{colouring_block, greedy_colouring, iterative_round, kms_round, RoundingConfig};
use crate::solver::{extract_bound, solve, SolveResult, SolverConfig};
use crate::{Error, Result};

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "BCSDP_THREADS";
/// Environment variable naming the dataset directory for `bench`.
pub const DATA_ENV: &str = "BCSDP_DATA";

#[derive(Debug, Parser)]
#[command(
    name = "bcsdp",
    version,
    about = "SDP bounds and colourings for bounded colouring and timetabling"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a relaxation and print the real and certified lower bound.
    Bound(BoundArgs),
    /// Solve, round to a colouring and report the gap to the lower bound.
    Colour(ColourArgs),
    /// Write a generated instance.
    Gen(GenArgs),
    /// Convert an instance to another format.
    Convert(ConvertArgs),
    /// Regenerate one of the benchmark tables.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Instance files. A Toronto instance is a `.crs`/`.stu` pair or their
    /// common stem.
    pub inputs: Vec<PathBuf>,
    /// Input format; inferred from the extension when omitted.
    #[arg(long)]
    pub format: Option<SourceFormat>,
    /// Generated instance instead of a file, e.g. `kneser:8,2` or `gnp:20,0.5,7`.
    #[arg(long, conflicts_with = "inputs")]
    pub gen: Option<String>,
    /// Keep only the k-th largest connected component (1-based).
    #[arg(long)]
    pub component: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ClassSizeArgs {
    /// Room count, i.e. the bound on class size.
    #[arg(long, conflicts_with = "m_offset")]
    pub m: Option<usize>,
    /// Set m = C + offset, where C is the largest class of an unbounded
    /// optimal colouring.
    #[arg(long, allow_negative_numbers = true)]
    pub m_offset: Option<i64>,
    /// Use this C for `--m-offset` instead of computing it.
    #[arg(long, requires = "m_offset")]
    pub class_size: Option<usize>,
    /// Time limit in seconds for the exact search behind `--m-offset`.
    #[arg(long, default_value_t = 600.0)]
    pub oracle_limit: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Relative residual tolerance.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Solver time limit in seconds.
    #[arg(long)]
    pub time_limit: Option<f64>,
    /// Print one line per solver iteration on stderr.
    #[arg(long)]
    pub trace: bool,
}

impl SolverArgs {
    pub fn config(&self) -> Result<SolverConfig> {
        let mut cfg = SolverConfig::default();
        if let Some(eps) = self.eps {
            cfg.eps = eps;
        }
        if let Some(max_iter) = self.max_iter {
            cfg.max_iter = max_iter;
        }
        cfg.time_limit = self.time_limit.map(seconds).transpose()?;
        cfg.trace = self.trace;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    pub output_format: OutputFormat,
    /// Write the table here instead of stdout.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Relaxation {
    /// Bounded colouring; weighted or pre-coloured when the instance is.
    Bounded,
    /// Same relaxation without the class-size bound.
    Unbounded,
    /// Lovász theta of the complement.
    Theta,
    ThetaStrict,
    ThetaStrong,
    /// Room capacities (and features) as laminar threshold rows.
    Laminar,
    /// Explicit event-to-room variables.
    Rooms,
}

impl Relaxation {
    fn name(self) -> &'static str {
        match self {
            Relaxation::Bounded => "bounded",
            Relaxation::Unbounded => "unbounded",
            Relaxation::Theta => "theta",
            Relaxation::ThetaStrict => "theta-strict",
            Relaxation::ThetaStrong => "theta-strong",
            Relaxation::Laminar => "laminar",
            Relaxation::Rooms => "rooms",
        }
    }

    fn uses_m(self) -> bool {
        !matches!(
            self,
            Relaxation::Unbounded | Relaxation::Theta | Relaxation::ThetaStrict | Relaxation::ThetaStrong
        )
    }
}

#[derive(Debug, Clone, Args)]
pub struct BoundArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub size: ClassSizeArgs,
    #[arg(long, value_enum, default_value_t = Relaxation::Bounded)]
    pub relax: Relaxation,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Kms,
    Iterative,
    Greedy,
}

#[derive(Debug, Clone, Args)]
pub struct ColourArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub size: ClassSizeArgs,
    #[arg(long, value_enum, default_value_t = Method::Kms)]
    pub method: Method,
    #[arg(long, default_value_t = 50)]
    pub attempts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Integrality threshold of iterative rounding.
    #[arg(long, default_value_t = 1e-6)]
    pub delta: f64,
    /// Write the partition file here.
    #[arg(long)]
    pub partition: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Native,
    Dimacs,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    /// Generator spec: complete:N, empty:N, path:N, cycle:N, petersen,
    /// kneser:N,K, hamming:BITS,D, fi:M,GAMMA or gnp:N,P[,SEED].
    pub spec: String,
    #[arg(long, value_enum, default_value_t = Target::Native)]
    pub to: Target,
    /// Room count stored in native output (default: number of vertices).
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ConvertArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value_t = Target::Native)]
    pub to: Target,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    TorontoSta83,
    KneserFi,
    Itc2007,
    RandomSweep,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(value_enum)]
    pub suite: Suite,
    /// Dataset directory (falls back to $BCSDP_DATA, then `data`).
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    /// Vertices per random graph.
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    /// Edge probability of the random graphs.
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    /// Class-size bound of the random sweep; defaults to C + m-offset.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, default_value_t = -3, allow_negative_numbers = true)]
    pub m_offset: i64,
    /// Time limit in seconds for each exact search.
    #[arg(long, default_value_t = 600.0)]
    pub oracle_limit: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

fn seconds(s: f64) -> Result<Duration> {
    Duration::try_from_secs_f64(s).map_err(|_| Error::InvalidArgument(format!("bad duration {s}")))
}

/// A cell of an output table; floats keep a fixed number of decimals so csv
/// output is stable.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Empty,
    Int(i64),
    Float(f64, usize),
    Text(String),
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Empty => String::new(),
            Cell::Int(i) => i.to_string(),
            Cell::Float(x, d) => format!("{x:.d$}"),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Empty => Value::Null,
            Cell::Int(i) => json!(i),
            Cell::Float(x, _) if !x.is_finite() => Value::Null,
            Cell::Float(x, _) => json!(self.text().parse::<f64>().unwrap_or(*x)),
            Cell::Text(s) => json!(s),
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

fn float(x: f64) -> Cell {
    Cell::Float(x, 6)
}

fn secs(x: f64) -> Cell {
    Cell::Float(x, 3)
}

/// Rows with named columns, rendered as text, csv or json.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Extra lines printed after the table in text mode only.
    pub notes: Vec<String>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Table {
            columns,
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|&c| c == name)
    }

    pub fn render(&self, format: OutputFormat) -> Result<String> {
        match format {
            OutputFormat::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                let io = |e: csv::Error| Error::Io(e.into());
                w.write_record(&self.columns).map_err(io)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::text)).map_err(io)?;
                }
                let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
                Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
            }
            OutputFormat::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let obj: Map<String, Value> = self
                            .columns
                            .iter()
                            .zip(row)
                            .map(|(c, v)| (c.to_string(), v.json()))
                            .collect();
                        Value::Object(obj)
                    })
                    .collect();
                Ok(serde_json::to_string_pretty(&rows)? + "\n")
            }
            OutputFormat::Text => {
                let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(Cell::text).collect()).collect();
                let widths: Vec<usize> = (0..self.columns.len())
                    .map(|i| {
                        cells
                            .iter()
                            .map(|r| r[i].len())
                            .chain([self.columns[i].len()])
                            .max()
                            .unwrap_or(0)
                    })
                    .collect();
                let line = |items: Vec<&str>| {
                    items
                        .iter()
                        .zip(&widths)
                        .map(|(s, w)| format!("{s:<w$}"))
                        .collect::<Vec<_>>()
                        .join("  ")
                        .trim_end()
                        .to_string()
                };
                let mut out = line(self.columns.clone()) + "\n";
                for r in &cells {
                    out += &(line(r.iter().map(String::as_str).collect()) + "\n");
                }
                for note in &self.notes {
                    out += note;
                    out.push('\n');
                }
                Ok(out)
            }
        }
    }
}

/// Parses a generator spec such as `kneser:8,2`.
pub fn parse_gen_spec(spec: &str) -> Result<ConflictGraph> {
    let bad = || Error::InvalidArgument(format!("bad generator spec '{spec}'"));
    let (kind, params) = spec.split_once(':').unwrap_or((spec, ""));
    let p: Vec<&str> = params.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    let int = |i: usize| -> Result<usize> { p.get(i).ok_or_else(bad)?.parse().map_err(|_| bad()) };
    let real = |i: usize| -> Result<f64> { p.get(i).ok_or_else(bad)?.parse().map_err(|_| bad()) };
    let arity = |k: usize| if p.len() == k { Ok(()) } else { Err(bad()) };
    match kind {
        "complete" => arity(1).and_then(|_| Ok(ConflictGraph::complete(int(0)?))),
        "empty" => arity(1).and_then(|_| Ok(ConflictGraph::empty(int(0)?))),
        "path" => arity(1).and_then(|_| Ok(ConflictGraph::path(int(0)?))),
        "cycle" => arity(1).and_then(|_| ConflictGraph::cycle(int(0)?)),
        "petersen" => arity(0).and_then(|_| gen_kneser(5, 2)),
        "kneser" => arity(2).and_then(|_| gen_kneser(int(0)?, int(1)?)),
        "hamming" => arity(2).and_then(|_| gen_hamming(int(0)?, int(1)?)),
        "fi" => arity(2).and_then(|_| gen_forbidden_intersection(int(0)?, real(1)?)),
        "gnp" => {
            let seed = match p.len() {
                2 => 0,
                3 => int(2)? as u64,
                _ => return Err(bad()),
            };
            gen_gnp(int(0)?, real(1)?, seed)
        }
        _ => Err(bad()),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn infer_format(path: &Path) -> Result<SourceFormat> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("col" | "dimacs") => Ok(SourceFormat::Dimacs),
        Some("crs" | "stu") => Ok(SourceFormat::Toronto),
        Some("ctt") => Ok(SourceFormat::Itc2007),
        Some("bcsdp" | "native") => Ok(SourceFormat::Native),
        _ => Err(Error::InvalidArgument(format!(
            "cannot infer the format of {}; pass --format",
            path.display()
        ))),
    }
}

fn load_toronto(paths: &[PathBuf]) -> Result<InstanceDocument> {
    let (crs, stu) = match paths {
        [one] => (one.with_extension("crs"), one.with_extension("stu")),
        [a, b] if b.extension().is_some_and(|e| e == "crs") => (b.clone(), a.clone()),
        [a, b] => (a.clone(), b.clone()),
        _ => {
            return Err(Error::InvalidArgument(
                "a Toronto instance needs a .crs and a .stu file".into(),
            ))
        }
    };
    parse_toronto(&stem(&crs), &read(&crs)?, &read(&stu)?)
}

/// Graph-only document with `m = n` single-seat rooms.
fn graph_document(name: &str, g: ConflictGraph, format: SourceFormat) -> InstanceDocument {
    let n = g.n().max(1);
    let mut inst = TimetablingInstance::bounded(g, n);
    inst.room_capacities = vec![1; n];
    InstanceDocument::new(name, inst, format)
}

/// Loads the instance named by the input flags and applies `--component`.
pub fn load_input(args: &InputArgs) -> Result<InstanceDocument> {
    let doc = if let Some(spec) = &args.gen {
        graph_document(spec, parse_gen_spec(spec)?, SourceFormat::Native)
    } else {
        let first = args
            .inputs
            .first()
            .ok_or_else(|| Error::InvalidArgument("no input given (pass a file or --gen)".into()))?;
        let format = match args.format {
            Some(f) => f,
            None if args.inputs.len() == 1 && first.extension().is_none() => SourceFormat::Toronto,
            None => infer_format(first)?,
        };
        if format != SourceFormat::Toronto && args.inputs.len() != 1 {
            return Err(Error::InvalidArgument(format!(
                "{} takes exactly one file",
                format.as_str()
            )));
        }
        match format {
            SourceFormat::Dimacs => graph_document(&stem(first), parse_dimacs(&read(first)?)?, SourceFormat::Dimacs),
            SourceFormat::Toronto => load_toronto(&args.inputs)?,
            SourceFormat::Itc2007 => parse_itc2007(&read(first)?)?,
            SourceFormat::Native => parse_native(&read(first)?)?,
        }
    };
    match args.component {
        None => Ok(doc),
        Some(k) => select_component(&doc, k),
    }
}

fn uniform_capacity(inst: &TimetablingInstance) -> Option<u64> {
    let first = *inst.room_capacities.first()?;
    inst.room_capacities.iter().all(|&c| c == first).then_some(first)
}

/// Restricts a document to the k-th largest connected component (1-based).
pub fn select_component(doc: &InstanceDocument, k: usize) -> Result<InstanceDocument> {
    let comps = connected_components(&doc.instance.graph);
    if k == 0 || k > comps.len() {
        return Err(Error::InvalidArgument(format!(
            "component {k} requested, the graph has {}",
            comps.len()
        )));
    }
    let keep = &comps[k - 1];
    let inst = &doc.instance;
    let mut index = vec![usize::MAX; inst.n()];
    for (i, &v) in keep.iter().enumerate() {
        index[v] = i;
    }
    let mut sub = inst.clone();
    sub.graph = inst.graph.induced(keep);
    sub.event_sizes = keep.iter().map(|&v| inst.event_sizes[v]).collect();
    sub.weights = inst.weights.as_ref().map(|w| keep.iter().map(|&v| w[v]).collect());
    sub.event_features = inst
        .event_features
        .iter()
        .filter(|&&(v, _)| index[v] != usize::MAX)
        .map(|&(v, f)| (index[v], f))
        .collect();
    sub.precolouring = inst
        .precolouring
        .iter()
        .map(|c| {
            c.iter()
                .filter(|&&v| index[v] != usize::MAX)
                .map(|&v| index[v])
                .collect::<Vec<_>>()
        })
        .filter(|c| !c.is_empty())
        .collect();
    if let Some(cap) = uniform_capacity(inst) {
        if inst.room_features.is_empty() && sub.m > keep.len() {
            sub.m = keep.len();
            sub.room_capacities = vec![cap; sub.m];
        }
    }
    let mut out = InstanceDocument::new(format!("{}#{k}", doc.name), sub, doc.source_format);
    out.labels = if doc.labels.is_empty() {
        Vec::new()
    } else {
        keep.iter().map(|&v| doc.labels[v].clone()).collect()
    };
    out.validate()?;
    Ok(out)
}

/// Replaces the room count of an instance whose rooms are interchangeable.
pub fn with_room_count(inst: &TimetablingInstance, m: usize) -> Result<TimetablingInstance> {
    let cap = uniform_capacity(inst)
        .filter(|_| inst.room_features.is_empty())
        .ok_or_else(|| Error::InvalidArgument("--m needs rooms of equal capacity without features".into()))?;
    let mut out = inst.clone();
    out.m = m;
    out.room_capacities = vec![cap; m];
    out.validate()?;
    Ok(out)
}

/// Applies `--m`, `--m-offset` and `--class-size`; returns the instance and
/// whether the room count was set explicitly.
fn resolve_instance(doc: &InstanceDocument, size: &ClassSizeArgs) -> Result<TimetablingInstance> {
    let m = match (size.m, size.m_offset) {
        (Some(m), _) => Some(m),
        (None, Some(offset)) => {
            let c = match size.class_size {
                Some(c) => c,
                None => unbounded_class_size(&doc.instance.graph, Some(seconds(size.oracle_limit)?))?.1,
            };
            Some((c as i64 + offset).max(1) as usize)
        }
        (None, None) => None,
    };
    match m {
        Some(m) => with_room_count(&doc.instance, m),
        None => Ok(doc.instance.clone()),
    }
}

/// Builds the chosen relaxation of an instance.
pub fn build_relaxation(inst: &TimetablingInstance, relax: Relaxation) -> Result<(SdpModel, BoundSemantics)> {
    let g = &inst.graph;
    match relax {
        Relaxation::Bounded => match (&inst.weights, inst.precolouring.is_empty()) {
            (Some(_), false) => Err(Error::InvalidArgument(
                "weights and pre-colouring together are not supported by the bounded relaxation".into(),
            )),
            (Some(w), true) => build_weighted(g, inst.m, w),
            (None, false) => build_precoloured(g, inst.m, &inst.precolouring),
            (None, true) => build_bounded(g, inst.m),
        },
        Relaxation::Unbounded => build_unbounded(g, BoundedOptions::default()),
        Relaxation::Theta => build_theta(g, ThetaVariant::Lovasz),
        Relaxation::ThetaStrict => build_theta(g, ThetaVariant::Strict),
        Relaxation::ThetaStrong => build_theta(g, ThetaVariant::Strong),
        Relaxation::Laminar => build_laminar(
            inst,
            LaminarOptions {
                counting: true,
                features: inst.feature_count > 0,
                ..LaminarOptions::default()
            },
        ),
        Relaxation::Rooms => build_room_assignment(inst, &RoomOptions::default()),
    }
}

/// The relaxation used for rounding and for the gap of `colour`.
fn colouring_relaxation(inst: &TimetablingInstance) -> Relaxation {
    if inst.is_plain() {
        Relaxation::Bounded
    } else {
        Relaxation::Laminar
    }
}

/// A finished solve: real bound, certified ceiling and solver statistics.
#[derive(Debug, Clone)]
pub struct BoundOutcome {
    pub bound: f64,
    pub certified: i64,
    pub result: SolveResult,
    pub sem: BoundSemantics,
}

pub fn compute_bound(inst: &TimetablingInstance, relax: Relaxation, cfg: &SolverConfig) -> Result<BoundOutcome> {
    let (model, sem) = build_relaxation(inst, relax)?;
    let result = solve(&model, &sem, cfg)?;
    let (bound, certified) = extract_bound(&result)?;
    Ok(BoundOutcome {
        bound,
        certified,
        result,
        sem,
    })
}

pub const BOUND_COLUMNS: [&str; 8] = [
    "instance",
    "m",
    "relaxation",
    "bound",
    "certified",
    "iterations",
    "seconds",
    "status",
];

pub fn run_bound(args: &BoundArgs) -> Result<Table> {
    let doc = load_input(&args.input)?;
    let inst = resolve_instance(&doc, &args.size)?;
    let cfg = args.solver.config()?;
    let outcome = compute_bound(&inst, args.relax, &cfg)?;
    let r = &outcome.result;
    let mut table = Table::new(BOUND_COLUMNS.to_vec());
    table.push(vec![
        doc.name.as_str().into(),
        args.relax.uses_m().then_some(inst.m).into(),
        args.relax.name().into(),
        float(outcome.bound),
        outcome.certified.into(),
        r.iterations.into(),
        secs(r.seconds),
        r.status.as_str().into(),
    ]);
    table.notes.push(format!(
        "residuals: primal {:.2e}  dual {:.2e}  gap {:.2e}",
        r.residuals.primal, r.residuals.dual, r.residuals.gap
    ));
    Ok(table)
}

pub const COLOUR_COLUMNS: [&str; 9] = [
    "instance",
    "m",
    "method",
    "classes",
    "valid",
    "certified",
    "gap",
    "seconds",
    "status",
];

/// Runs `colour`: solves the relaxation, rounds and validates. Returns the
/// report and the partition.
pub fn run_colour(args: &ColourArgs) -> Result<(Table, Partition)> {
    let start = Instant::now();
    let doc = load_input(&args.input)?;
    let inst = resolve_instance(&doc, &args.size)?;
    let cfg = args.solver.config()?;
    let rounding = RoundingConfig {
        attempts: args.attempts,
        seed: args.seed,
        delta: args.delta,
    };
    rounding.validate()?;
    let outcome = compute_bound(&inst, colouring_relaxation(&inst), &cfg)?;
    let part = match args.method {
        Method::Kms => {
            let block = colouring_block(&outcome.result.x, &outcome.sem, inst.n())?;
            kms_round(&block, &inst, &rounding)?
        }
        Method::Iterative => iterative_round(&inst, &rounding, &cfg)?.0,
        Method::Greedy => greedy_colouring(&inst, args.seed)?,
    };
    let report = validate_partition(&inst, &part);
    if let Some(path) = &args.partition {
        fs::write(path, write_partition(&part))?;
    }
    let mut table = Table::new(COLOUR_COLUMNS.to_vec());
    let method = match args.method {
        Method::Kms => "kms",
        Method::Iterative => "iterative",
        Method::Greedy => "greedy",
    };
    table.push(vec![
        doc.name.as_str().into(),
        inst.m.into(),
        method.into(),
        part.len().into(),
        if report.ok() { "yes" } else { "no" }.into(),
        outcome.certified.into(),
        (part.len() as i64 - outcome.certified).into(),
        secs(start.elapsed().as_secs_f64()),
        outcome.result.status.as_str().into(),
    ]);
    if args.partition.is_none() {
        table.notes.push("partition:".into());
        table.notes.extend(write_partition(&part).lines().map(str::to_string));
    }
    for v in &report.violations {
        table.notes.push(format!("violation: {v:?}"));
    }
    Ok((table, part))
}

fn write_target(doc: &InstanceDocument, to: Target) -> Result<String> {
    match to {
        Target::Native => write_native(doc),
        Target::Dimacs => Ok(write_dimacs(&doc.instance.graph)),
        Target::Json => Ok(serde_json::to_string_pretty(doc)? + "\n"),
    }
}

pub fn run_gen(args: &GenArgs) -> Result<String> {
    let mut doc = graph_document(&args.spec, parse_gen_spec(&args.spec)?, SourceFormat::Native);
    if let Some(m) = args.m {
        doc.instance = with_room_count(&doc.instance, m)?;
    }
    write_target(&doc, args.to)
}

pub fn run_convert(args: &ConvertArgs) -> Result<String> {
    write_target(&load_input(&args.input)?, args.to)
}

fn data_dir(args: &BenchArgs) -> PathBuf {
    args.data_dir
        .clone()
        .or_else(|| std::env::var_os(DATA_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("data"))
}

/// First existing `dir/sub/name` over the candidate subdirectories.
fn locate(dir: &Path, subdirs: &[&str], name: &str) -> Option<PathBuf> {
    subdirs.iter().map(|s| dir.join(s).join(name)).find(|p| p.is_file())
}

fn status_of(err: &Error) -> String {
    match err {
        Error::Timeout { .. } => "timeout".into(),
        other => format!("error: {other}"),
    }
}

/// Class bounds of the published Kneser and forbidden-intersection table:
/// (label, graph spec, C). FI(6, γ) joins strings at Hamming distance γ·6.
pub const KNESER_FI_ROWS: [(&str, &str, usize); 8] = [
    ("K(5,2)", "kneser:5,2", 4),
    ("K(6,2)", "kneser:6,2", 5),
    ("K(7,2)", "kneser:7,2", 6),
    ("K(8,2)", "kneser:8,2", 6),
    ("FI(6,0.50)", "hamming:6,3", 32),
    ("FI(6,0.67)", "hamming:6,4", 10),
    ("FI(6,0.83)", "hamming:6,5", 32),
    ("FI(6,1.00)", "hamming:6,6", 32),
];

/// m values of the Toronto table; `None` is the unbounded row.
pub const TORONTO_ROWS: [Option<usize>; 11] = [
    Some(1),
    Some(2),
    Some(3),
    Some(4),
    Some(5),
    Some(6),
    Some(7),
    Some(8),
    Some(9),
    Some(47),
    None,
];

fn oracle_cell(inst: &TimetablingInstance, limit: Duration) -> (Cell, f64, Option<String>) {
    let start = Instant::now();
    match exact_bounded_chromatic(inst, Some(limit)) {
        Ok(r) => {
            let note = r.timed_out.then(|| "oracle-timeout".to_string());
            (r.chi_m.into(), start.elapsed().as_secs_f64(), note)
        }
        Err(e) => (Cell::Empty, start.elapsed().as_secs_f64(), Some(status_of(&e))),
    }
}

fn bench_toronto(args: &BenchArgs, cfg: &SolverConfig, limit: Duration) -> Table {
    let mut table = Table::new(vec![
        "instance",
        "m",
        "chi_m",
        "chi_seconds",
        "bound",
        "certified",
        "bound_seconds",
        "counting",
        "status",
    ]);
    let dir = data_dir(args);
    let subdirs = ["", "toronto"];
    let doc = match (
        locate(&dir, &subdirs, "sta-f-83.crs"),
        locate(&dir, &subdirs, "sta-f-83.stu"),
    ) {
        (Some(crs), Some(stu)) => load_toronto(&[crs, stu]).and_then(|d| select_component(&d, 2)),
        _ => Err(Error::InvalidArgument(format!(
            "missing-data: sta-f-83.crs/.stu not found under {}",
            dir.display()
        ))),
    };
    let rows: Vec<Vec<Cell>> = TORONTO_ROWS
        .par_iter()
        .map(|&m| {
            let doc = match &doc {
                Ok(d) => d,
                Err(e) => {
                    let status = match e {
                        Error::InvalidArgument(s) if s.starts_with("missing-data") => "missing-data".to_string(),
                        other => status_of(other),
                    };
                    let mut row = vec![Cell::from("sta-f-83#2"), m.into()];
                    row.extend(std::iter::repeat_n(Cell::Empty, 6));
                    row.push(status.into());
                    return row;
                }
            };
            let n = doc.instance.n();
            let inst = TimetablingInstance::bounded(doc.instance.graph.clone(), m.unwrap_or(n).min(n));
            let relax = if m.is_some() {
                Relaxation::Bounded
            } else {
                Relaxation::Unbounded
            };
            let (chi, chi_s, mut status) = oracle_cell(&inst, limit);
            let (bound, certified, bound_s) = match compute_bound(&inst, relax, cfg) {
                Ok(o) => (float(o.bound), o.certified.into(), secs(o.result.seconds)),
                Err(e) => {
                    status = Some(status_of(&e));
                    (Cell::Empty, Cell::Empty, Cell::Empty)
                }
            };
            vec![
                doc.name.as_str().into(),
                m.into(),
                chi,
                secs(chi_s),
                bound,
                certified,
                bound_s,
                m.map(|m| counting_bound(n, m)).into(),
                status.unwrap_or_else(|| "ok".into()).into(),
            ]
        })
        .collect();
    table.rows = rows;
    table
}

fn bench_kneser_fi(cfg: &SolverConfig, limit: Duration) -> Table {
    let mut table = Table::new(vec![
        "graph", "C", "y0", "chi0", "y1", "chi1", "y2", "chi2", "y3", "chi3", "seconds", "status",
    ]);
    table.rows = KNESER_FI_ROWS
        .par_iter()
        .map(|&(label, spec, c)| {
            let start = Instant::now();
            let mut row = vec![Cell::from(label), c.into()];
            let mut status = None;
            let g = parse_gen_spec(spec).expect("table specs are valid");
            for offset in 0..4 {
                let m = c.saturating_sub(offset).max(1);
                let inst = TimetablingInstance::bounded(g.clone(), m);
                match compute_bound(&inst, Relaxation::Bounded, cfg) {
                    Ok(o) => row.push(Cell::Float(o.bound, 2)),
                    Err(e) => {
                        status = Some(status_of(&e));
                        row.push(Cell::Empty);
                    }
                }
                let (chi, _, note) = oracle_cell(&inst, limit);
                status = status.or(note);
                row.push(chi);
            }
            row.push(secs(start.elapsed().as_secs_f64()));
            row.push(status.unwrap_or_else(|| "ok".into()).into());
            row
        })
        .collect();
    table
}

fn bench_itc(args: &BenchArgs, cfg: &SolverConfig) -> Table {
    let mut table = Table::new(vec![
        "instance",
        "n",
        "edges",
        "rooms",
        "unbounded",
        "unbounded_seconds",
        "bounded",
        "bounded_seconds",
        "rounded",
        "status",
    ]);
    let dir = data_dir(args);
    let names: Vec<String> = (1..=21).map(|i| format!("comp{i:02}")).collect();
    table.rows = names
        .par_iter()
        .map(|name| {
            let missing = || {
                let mut row = vec![Cell::from(name.as_str())];
                row.extend(std::iter::repeat_n(Cell::Empty, 8));
                row
            };
            let path = ["ctt", "course"]
                .iter()
                .find_map(|ext| locate(&dir, &["", "itc2007"], &format!("{name}.{ext}")));
            let Some(path) = path else {
                let mut row = missing();
                row.push("missing-data".into());
                return row;
            };
            let doc = match read(&path).and_then(|t| parse_itc2007(&t)) {
                Ok(d) => d,
                Err(e) => {
                    let mut row = missing();
                    row.push(status_of(&e).into());
                    return row;
                }
            };
            let g = &doc.instance.graph;
            let inst = TimetablingInstance::bounded(g.clone(), doc.instance.m.min(g.n()));
            let mut status = None;
            let mut cell = |relax| match compute_bound(&inst, relax, cfg) {
                Ok(o) => (Some(o.clone()), Cell::Float(o.bound, 2), secs(o.result.seconds)),
                Err(e) => {
                    status = Some(status_of(&e));
                    (None, Cell::Empty, Cell::Empty)
                }
            };
            let (_, unbounded, unbounded_s) = cell(Relaxation::Unbounded);
            let (bounded_outcome, bounded, bounded_s) = cell(Relaxation::Bounded);
            let rounded = bounded_outcome.and_then(|o| {
                let block = colouring_block(&o.result.x, &o.sem, inst.n()).ok()?;
                kms_round(&block, &inst, &RoundingConfig::default()).ok()
            });
            vec![
                doc.name.as_str().into(),
                g.n().into(),
                g.edge_count().into(),
                doc.instance.m.into(),
                unbounded,
                unbounded_s,
                bounded,
                bounded_s,
                rounded.map(|p| p.len()).into(),
                status.unwrap_or_else(|| "ok".into()).into(),
            ]
        })
        .collect();
    table
}

fn bench_random(args: &BenchArgs, cfg: &SolverConfig, limit: Duration) -> Table {
    let mut table = Table::new(vec![
        "instance",
        "seed",
        "m",
        "clique",
        "counting",
        "theta",
        "bound",
        "certified",
        "chi_m",
        "greedy",
        "sandwich",
        "seconds",
        "status",
    ]);
    table.rows = (0..args.seeds)
        .into_par_iter()
        .map(|seed| {
            let start = Instant::now();
            let name = format!("gnp:{},{},{seed}", args.n, args.p);
            let row = |m: Option<usize>, rest: Vec<Cell>, status: String| {
                let mut row = vec![Cell::from(name.as_str()), Cell::Int(seed as i64), m.into()];
                row.extend(rest);
                row.push(secs(start.elapsed().as_secs_f64()));
                row.push(status.into());
                row
            };
            let empty = || vec![Cell::Empty; 8];
            let result = gen_gnp(args.n, args.p, seed).and_then(|g| {
                let m = match args.m {
                    Some(m) => m,
                    None => (unbounded_class_size(&g, Some(limit))?.1 as i64 + args.m_offset).max(1) as usize,
                };
                Ok((m, sandwich_check(&g, m, cfg, Some(limit))))
            });
            match result {
                Ok((m, Ok(s))) => row(
                    Some(m),
                    vec![
                        s.clique.into(),
                        s.counting.into(),
                        float(s.theta),
                        float(s.bounded_sdp),
                        s.certified.into(),
                        s.chi_m.into(),
                        s.greedy.into(),
                        if s.passed { "pass" } else { "FAIL" }.into(),
                    ],
                    if s.passed { "ok" } else { "sandwich-violation" }.into(),
                ),
                Ok((m, Err(e))) => row(Some(m), empty(), status_of(&e)),
                Err(e) => row(None, empty(), status_of(&e)),
            }
        })
        .collect();
    table
}

/// Runs a bench suite. Rows are computed in the worker pool and returned in
/// suite order.
pub fn run_bench(args: &BenchArgs) -> Result<Table> {
    let cfg = args.solver.config()?;
    let limit = seconds(args.oracle_limit)?;
    Ok(match args.suite {
        Suite::TorontoSta83 => bench_toronto(args, &cfg, limit),
        Suite::KneserFi => bench_kneser_fi(&cfg, limit),
        Suite::Itc2007 => bench_itc(args, &cfg),
        Suite::RandomSweep => bench_random(args, &cfg, limit),
    })
}

/// True when every row of a bench table completed.
pub fn all_ok(table: &Table) -> bool {
    let Some(i) = table.column("status") else {
        return true;
    };
    table.rows.iter().all(|r| matches!(&r[i], Cell::Text(s) if s == "ok"))
}

/// Worker pool sized by `BCSDP_THREADS` (all cores when unset or 0).
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::InvalidArgument(format!("{THREADS_ENV}={s} is not a thread count")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))
}

/// Executes a parsed command line. Returns `Ok(false)` when the command ran
/// but some requested computation failed (a bench row, or an invalid
/// colouring).
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<bool> {
    let pool = thread_pool()?;
    let (text, path, ok) = pool.install(|| -> Result<(String, Option<PathBuf>, bool)> {
        Ok(match &cli.command {
            Command::Bound(args) => (
                run_bound(args)?.render(args.out.output_format)?,
                args.out.output.clone(),
                true,
            ),
            Command::Colour(args) => {
                let (table, _) = run_colour(args)?;
                let valid = table.rows.iter().all(|r| matches!(&r[4], Cell::Text(s) if s == "yes"));
                (table.render(args.out.output_format)?, args.out.output.clone(), valid)
            }
            Command::Gen(args) => (run_gen(args)?, args.output.clone(), true),
            Command::Convert(args) => (run_convert(args)?, args.output.clone(), true),
            Command::Bench(args) => {
                let table = run_bench(args)?;
                (
                    table.render(args.out.output_format)?,
                    args.out.output.clone(),
                    all_ok(&table),
                )
            }
        })
    })?;
    match path {
        Some(p) => fs::write(p, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(ok)
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let mut stdout = std::io::stdout().lock();
    match run(&cli, &mut stdout) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("bcsdp").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn gen_specs() {
        assert_eq!(parse_gen_spec("complete:5").unwrap(), ConflictGraph::complete(5));
        assert_eq!(parse_gen_spec("petersen").unwrap().edge_count(), 15);
        assert_eq!(parse_gen_spec("kneser:6,2").unwrap().n(), 15);
        assert_eq!(parse_gen_spec("gnp:10,0.5,3").unwrap(), gen_gnp(10, 0.5, 3).unwrap());
        assert_eq!(parse_gen_spec("fi:6,0.67").unwrap(), gen_hamming(6, 2).unwrap());
        for bad in ["kneser:6", "torus:3", "complete:x", "gnp:10"] {
            assert!(parse_gen_spec(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn bound_complete_graph() {
        let Command::Bound(args) = parse(&["bound", "--gen", "complete:5", "--relax", "bounded", "--m", "1"]).command
        else {
            panic!("not a bound command");
        };
        let table = run_bound(&args).unwrap();
        let row = &table.rows[0];
        assert_eq!(row[table.column("certified").unwrap()], Cell::Int(5));
        assert_eq!(row[table.column("m").unwrap()], Cell::Int(1));
    }

    #[test]
    fn negative_offset_parses() {
        let Command::Bound(args) = parse(&["bound", "--gen", "kneser:8,2", "--m-offset", "-3"]).command else {
            panic!("not a bound command");
        };
        assert_eq!(args.size.m_offset, Some(-3));
    }

    #[test]
    fn m_and_offset_conflict() {
        let res = Cli::try_parse_from(["bcsdp", "bound", "--gen", "complete:3", "--m", "2", "--m-offset", "-1"]);
        assert!(res.is_err());
    }

    #[test]
    fn table_formats() {
        let mut t = Table::new(vec!["name", "value", "note"]);
        t.push(vec!["a,b".into(), float(1.5), Cell::Empty]);
        let csv = t.render(OutputFormat::Csv).unwrap();
        assert_eq!(csv, "name,value,note\n\"a,b\",1.500000,\n");
        let json: Value = serde_json::from_str(&t.render(OutputFormat::Json).unwrap()).unwrap();
        assert_eq!(json[0]["value"], json!(1.5));
        assert!(json[0]["note"].is_null());
        assert!(t.render(OutputFormat::Text).unwrap().starts_with("name  value"));
    }

    #[test]
    fn component_selection() {
        let g = ConflictGraph::from_edges(6, [(0, 1), (2, 3), (3, 4)]).unwrap();
        let doc = graph_document("g", g, SourceFormat::Native);
        let sub = select_component(&doc, 1).unwrap();
        assert_eq!(sub.instance.n(), 3);
        assert_eq!(sub.instance.m, 3);
        assert_eq!(sub.instance.graph.edge_count(), 2);
        assert!(select_component(&doc, 5).is_err());
    }

    #[test]
    fn room_count_override_needs_uniform_rooms() {
        let mut inst = TimetablingInstance::bounded(ConflictGraph::empty(3), 2);
        assert_eq!(with_room_count(&inst, 3).unwrap().room_capacities, vec![1, 1, 1]);
        inst.room_capacities = vec![1, 2];
        assert!(with_room_count(&inst, 3).is_err());
    }
}
