// SPDX-License-Identifier: Apache-2.0

//! Batch driver behind the `rectify` binary. [`run`] parses arguments,
//! dispatches one subcommand on a dedicated thread pool and writes a JSON
//! report (stdout unless `--report` is given) plus optional CSV tables.
//!
//! Exit codes: 0 success, 2 invalid input or parameters, 3 numerical abort
//! (including any NaN or infinity in a report).

mod cloud_file;
mod commands;
mod finite;

use std::ffi::OsString;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub use cloud_file::{read_cloud, write_cloud, CloudHeader};
pub use finite::first_non_finite;

use crate::error::Error;
use crate::generators::GeneratorSpec;
use crate::geometry::PointCloud;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser, Serialize)]
#[command(name = "rectify", version, about = "Multiscale flatness statistics of point clouds")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Write a generated cloud file.
    Generate(GenerateArgs),
    /// Dyadic Hausdorff content of the cloud.
    Content(ContentArgs),
    /// Beta number of one ball.
    Beta(BetaArgs),
    /// Multiscale beta square sum over a cube hierarchy.
    Tst(TstArgs),
    /// Big-projection profile.
    Pbp(PbpArgs),
    /// Non-flatness floor, net tree and dimension estimates.
    Dimension(DimensionArgs),
    /// Capacity lower bound from content and measure.
    Capacity(CapacityArgs),
    /// Beta sum against skeleton measure at several dyadic levels.
    Bjcheck(BjcheckArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Generate(_) => "generate",
            Command::Content(_) => "content",
            Command::Beta(_) => "beta",
            Command::Tst(_) => "tst",
            Command::Pbp(_) => "pbp",
            Command::Dimension(_) => "dimension",
            Command::Capacity(_) => "capacity",
            Command::Bjcheck(_) => "bjcheck",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GenKind {
    Cantor4,
    Koch,
    LipschitzGraph,
    Segment,
    Arc,
    Disk,
}

/// Generator flags. Only those used by `--kind` may be given.
#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: Option<GenKind>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ambient_dim: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub span: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
    /// Take the product with a unit segment sampled at this many points.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub product_samples: Option<usize>,
}

impl GenArgs {
    pub fn to_spec(&self) -> Result<GeneratorSpec, CliError> {
        let kind = self.kind.ok_or_else(|| CliError::Validation("--kind is required".into()))?;
        macro_rules! need {
            ($f:ident) => {
                self.$f.ok_or_else(|| {
                    CliError::Validation(format!("--{} is required for --kind {:?}", stringify!($f).replace('_', "-"), kind))
                })?
            };
        }
        let used: &[&str] = match kind {
            GenKind::Cantor4 => &["lambda", "depth"],
            GenKind::Koch => &["ratio", "depth"],
            GenKind::LipschitzGraph => &["lipschitz", "count", "seed"],
            GenKind::Segment => &["ambient_dim", "count"],
            GenKind::Arc => &["radius", "span", "count"],
            GenKind::Disk => &["radius", "spacing"],
        };
        let given = [
            ("lambda", self.lambda.is_some()),
            ("ratio", self.ratio.is_some()),
            ("depth", self.depth.is_some()),
            ("lipschitz", self.lipschitz.is_some()),
            ("count", self.count.is_some()),
            ("seed", self.seed.is_some()),
            ("ambient_dim", self.ambient_dim.is_some()),
            ("radius", self.radius.is_some()),
            ("span", self.span.is_some()),
            ("spacing", self.spacing.is_some()),
        ];
        if let Some((f, _)) = given.iter().find(|(f, g)| *g && !used.contains(f)) {
            return Err(CliError::Validation(format!("--{} does not apply to --kind {kind:?}", f.replace('_', "-"))));
        }
        let base = match kind {
            GenKind::Cantor4 => GeneratorSpec::Cantor4 { lambda: need!(lambda), depth: need!(depth) },
            GenKind::Koch => GeneratorSpec::Koch { ratio: need!(ratio), depth: need!(depth) },
            GenKind::LipschitzGraph => {
                GeneratorSpec::LipschitzGraph { lipschitz: need!(lipschitz), count: need!(count), seed: need!(seed) }
            }
            GenKind::Segment => GeneratorSpec::Segment { ambient_dim: need!(ambient_dim), count: need!(count) },
            GenKind::Arc => GeneratorSpec::Arc { radius: need!(radius), span: need!(span), count: need!(count) },
            GenKind::Disk => GeneratorSpec::Disk { radius: need!(radius), spacing: need!(spacing) },
        };
        Ok(match self.product_samples {
            Some(samples) => GeneratorSpec::Product { base: Box::new(base), samples },
            None => base,
        })
    }
}

/// Either a cloud file or generator flags.
#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct InputArgs {
    /// Cloud file: JSON header line followed by CSV coordinates.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub generator: GenArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct OutputArgs {
    /// JSON report path (stdout when absent).
    #[arg(long)]
    #[serde(skip)]
    pub report: Option<PathBuf>,
    /// CSV table path.
    #[arg(long)]
    #[serde(skip)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub generator: GenArgs,
    /// Cloud file to write.
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct ContentArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    /// Smallest cover side (default: cloud resolution).
    #[arg(long)]
    pub min_scale: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaKind {
    Inf,
    Content,
    Measure,
}

#[derive(Debug, Args, Serialize)]
pub struct BetaArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Ball center, comma separated.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub center: Vec<f64>,
    #[arg(long)]
    pub ball_radius: f64,
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    #[arg(long, value_enum, default_value_t = BetaKind::Content)]
    pub beta: BetaKind,
    /// Exponent (ignored for `--beta inf`).
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long)]
    pub min_scale: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Which cube of a Christ-David hierarchy to start from.
#[derive(Debug, Clone, Args, Serialize)]
pub struct CubeArgs {
    #[arg(long, default_value_t = 0.25)]
    pub rho: f64,
    /// Finest generation built (default: finest admissible for the resolution).
    #[arg(long, allow_hyphen_values = true)]
    pub k_max: Option<i32>,
    /// Generation of the top cube (default: the coarsest).
    #[arg(long, allow_hyphen_values = true)]
    pub top_generation: Option<i32>,
    /// Index of the top cube within its generation.
    #[arg(long, default_value_t = 0)]
    pub top_index: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct TstArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub cubes: CubeArgs,
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// Ball dilation `C0` in `beta(C0 B_Q)`.
    #[arg(long, default_value_t = 2.0)]
    pub c0: f64,
    #[arg(long)]
    pub min_scale: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct PbpArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [0.05, 0.1, 0.2, 0.3])]
    pub eps: Vec<f64>,
    #[arg(long, default_value_t = crate::pbp::DEFAULT_SAMPLES)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub pbp_seed: u64,
    /// Projection grid (default: cloud resolution).
    #[arg(long)]
    pub grid: Option<f64>,
    /// Ball as `x1,...,xn,r`; repeatable (default: first point, radius = diameter).
    #[arg(long, allow_hyphen_values = true)]
    pub ball: Vec<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct DimensionArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 0.25)]
    pub rho: f64,
    /// Generation of the cube `R` (default: the coarsest).
    #[arg(long, allow_hyphen_values = true)]
    pub top_generation: Option<i32>,
    #[arg(long, default_value_t = 0)]
    pub top_index: usize,
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    #[arg(long, default_value_t = 6)]
    pub kappa: u32,
    #[arg(long, default_value_t = 2)]
    pub levels: u32,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 0.05)]
    pub scan_min: f64,
    #[arg(long, default_value_t = 0.5)]
    pub scan_max: f64,
    #[arg(long, default_value_t = 2)]
    pub ball_density: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct CapacityArgs {
    #[arg(long)]
    pub content: f64,
    #[arg(long)]
    pub measure: f64,
    #[arg(long)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct BjcheckArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub cubes: CubeArgs,
    /// Dyadic levels, comma separated.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub k: Vec<i32>,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    #[arg(long)]
    pub min_scale: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Validation(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Numerical(m) => write!(f, "numerical abort: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Numerical(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

/// Where the analysed cloud came from.
#[derive(Debug, Clone, Serialize)]
pub struct InputSummary {
    pub source: InputSource,
    pub ambient_dim: usize,
    pub resolution: f64,
    pub count: usize,
    pub weights: bool,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InputSource {
    File(PathBuf),
    Generator(GeneratorSpec),
}

pub(crate) fn load_input(args: &InputArgs) -> Result<(InputSummary, PointCloud<f64>), CliError> {
    let (source, cloud) = match (&args.input, args.generator.kind) {
        (Some(_), Some(_)) => return Err(CliError::Validation("give either --input or --kind, not both".into())),
        (None, None) => return Err(CliError::Validation("one of --input or --kind is required".into())),
        (Some(path), None) => {
            let f = File::open(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            let (_, cloud) = read_cloud(f).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            (InputSource::File(path.clone()), cloud)
        }
        (None, Some(_)) => {
            let spec = args.generator.to_spec()?;
            let cloud = spec.generate::<f64>()?;
            (InputSource::Generator(spec), cloud)
        }
    };
    let summary = InputSummary {
        source,
        ambient_dim: cloud.dim(),
        resolution: cloud.resolution(),
        count: cloud.len(),
        weights: cloud.weights().is_some(),
    };
    Ok((summary, cloud))
}

/// CSV table written next to a report.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

/// What a subcommand hands back for writing.
pub(crate) struct Outcome {
    pub input: Option<InputSummary>,
    pub result: serde_json::Value,
    pub table: Option<Table>,
}

#[derive(Serialize)]
struct Report<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a Cli,
    input: &'a Option<InputSummary>,
    result: &'a serde_json::Value,
}

/// Checks `value` for non-finite floats, then converts it to JSON.
pub(crate) fn finite_json<S: Serialize>(value: &S) -> Result<serde_json::Value, CliError> {
    if let Some(at) = first_non_finite(value) {
        return Err(CliError::Numerical(format!("non-finite value {at}")));
    }
    serde_json::to_value(value).map_err(|e| CliError::Numerical(e.to_string()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn write_table(path: &Path, table: &Table) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Validation(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(&table.header).map_err(io)?;
    for row in &table.rows {
        w.write_record(row).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn output_args(command: &Command) -> &OutputArgs {
    match command {
        Command::Generate(a) => &a.output,
        Command::Content(a) => &a.output,
        Command::Beta(a) => &a.output,
        Command::Tst(a) => &a.output,
        Command::Pbp(a) => &a.output,
        Command::Dimension(a) => &a.output,
        Command::Capacity(a) => &a.output,
        Command::Bjcheck(a) => &a.output,
    }
}

/// Runs a parsed command line and writes its outputs.
pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
    let outcome = pool.install(|| commands::dispatch(&cli.command))?;
    let report = Report {
        tool: "rectify",
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name(),
        config: cli,
        input: &outcome.input,
        result: &outcome.result,
    };
    let out = output_args(&cli.command);
    if out.csv.is_some() && outcome.table.is_none() {
        return Err(CliError::Validation(format!("`{}` produces no CSV table", cli.command.name())));
    }
    let mut text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Numerical(e.to_string()))?;
    text.push('\n');
    match &out.report {
        Some(path) => write_file(path, text.as_bytes())?,
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes()).map_err(|e| CliError::Validation(format!("stdout: {e}")))?;
        }
    }
    if let (Some(path), Some(table)) = (&out.csv, &outcome.table) {
        write_table(path, table)?;
    }
    Ok(())
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return if code == 0 { EXIT_OK } else { EXIT_VALIDATION };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("rectify: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn argument_definitions_are_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn generator_flags_are_checked() {
        let g = GenArgs { kind: Some(GenKind::Cantor4), lambda: Some(0.25), ..Default::default() };
        assert!(matches!(g.to_spec(), Err(CliError::Validation(_))));
        let g = GenArgs { depth: Some(2), ratio: Some(0.3), ..g };
        assert!(matches!(g.to_spec(), Err(CliError::Validation(_))));
        let g = GenArgs { ratio: None, product_samples: Some(3), ..g };
        let spec = g.to_spec().unwrap();
        assert_eq!(spec.generate::<f64>().unwrap().len(), 48);
    }
}
