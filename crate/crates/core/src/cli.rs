//! Command-line front end: `design`, `encode`, `decode`, `eval`, `ratepoints`, `replay`.
//!
//! Every command that writes files also writes `<out>.manifest.json`, which
//! records the parsed parameters and a hash of each output so `replay` can
//! rerun the command and check the bytes.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{CommandFactory, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::codec::stream::{read_stream, write_stream};
use crate::codec::{decode, encode_cpc, ConcentricCode, Variant};
use crate::combinatorics::{rate_point_census, Composition, CompositionFilter, DEFAULT_CENSUS_LIMIT};
use crate::design::{design_common_composition, lloyd_general, optimal_levels_single, Design, DesignConfig};
use crate::error::{Error, Result};
use crate::eval::{
    default_step_grid, ecsq_curve, ecusq_curve, empirical_distortion, rate_fixed, rate_variable, shannon_bound,
    write_rd_csv, RdPoint,
};
use crate::order_stats::{gaussian_order_stats, DEFAULT_TOL};
use crate::rng::{fnv1a, ALGORITHM_ID};
use crate::wsc::{default_filter, design_with_allocation, lattice_constant, RateMode};

#[derive(Parser, Debug)]
#[command(name = "cpc", version, about = "Permutation and concentric permutation source codes")]
pub struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = "CPC_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Design a codebook and write it as JSON.
    Design(DesignArgs),
    /// Encode CSV rows into a binary index stream.
    Encode(EncodeArgs),
    /// Decode an index stream back to CSV reconstructions.
    Decode(DecodeArgs),
    /// Monte Carlo rate and distortion of codebooks, plus scalar baselines.
    Eval(EvalArgs),
    /// Count distinct fixed-rate operating points.
    Ratepoints(RatepointsArgs),
    /// Rerun a manifest and check that outputs are byte-identical.
    Replay(ReplayArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DesignMode {
    Common,
    General,
    WscVar,
    WscFixed,
}

#[derive(clap::Args, Debug, Clone, Serialize, Deserialize)]
pub struct DesignArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long = "J", default_value_t = 1)]
    pub j: usize,
    #[arg(long, default_value = "1", value_parser = parse_variant)]
    pub variant: u8,
    #[arg(long, value_enum, default_value_t = DesignMode::Common)]
    pub mode: DesignMode,
    /// Target rate in bits per sample (WSC modes).
    #[arg(long)]
    pub rate: Option<f64>,
    /// Composition such as `3,2,2`; repeat once per sphere in general mode.
    #[arg(long = "composition")]
    pub compositions: Vec<Composition>,
    #[arg(long, default_value_t = 500_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Lattice behind the shape-rate split in wsc-var mode: `scalar` or `leech`.
    #[arg(long, default_value = "scalar")]
    pub lattice: String,
    #[arg(long)]
    pub no_conjecture_filter: bool,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(clap::Args, Debug, Clone, Serialize, Deserialize)]
pub struct EncodeArgs {
    #[arg(long)]
    pub codebook: PathBuf,
    /// CSV without header, one vector per row.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(clap::Args, Debug, Clone, Serialize, Deserialize)]
pub struct DecodeArgs {
    #[arg(long)]
    pub codebook: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Baseline {
    Ecsq,
    Ecusq,
    Bound,
}

#[derive(clap::Args, Debug, Clone, Serialize, Deserialize)]
pub struct EvalArgs {
    #[arg(long = "codebook")]
    pub codebooks: Vec<PathBuf>,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, value_enum, value_delimiter = ',')]
    pub baselines: Vec<Baseline>,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(clap::Args, Debug, Clone, Serialize, Deserialize)]
pub struct RatepointsArgs {
    /// Inclusive range such as `2-9` or a single value.
    #[arg(long = "n-range", value_parser = parse_range)]
    pub n_range: (usize, usize),
    #[arg(long = "J-range", value_parser = parse_range)]
    pub j_range: (usize, usize),
    /// Largest number of multisets the census may enumerate.
    #[arg(long, default_value_t = DEFAULT_CENSUS_LIMIT)]
    pub limit: u64,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(clap::Args, Debug, Clone, Serialize, Deserialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
}

fn parse_variant(s: &str) -> std::result::Result<u8, String> {
    s.parse::<Variant>().map(u8::from).map_err(|e| e.to_string())
}

fn parse_range(s: &str) -> std::result::Result<(usize, usize), String> {
    let bad = || format!("expected `a-b`, `a..b` or `a`, got {s:?}");
    let (lo, hi) = match s.split_once("..").or_else(|| s.split_once('-')) {
        Some((a, b)) => (a.trim(), b.trim().trim_start_matches('=')),
        None => (s.trim(), s.trim()),
    };
    let lo: usize = lo.parse().map_err(|_| bad())?;
    let hi: usize = hi.parse().map_err(|_| bad())?;
    if lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

/// Provenance record written next to every output.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub params: Command,
    pub seed: Option<u64>,
    pub versions: Versions,
    pub outputs: Vec<OutputRecord>,
    pub wall_time_secs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub crate_version: String,
    pub rng: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub path: PathBuf,
    /// FNV-1a 64 of the file bytes, hex.
    pub fnv1a: String,
    pub bytes: usize,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

/// Path of the manifest that accompanies `out`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Process exit code for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_) | Error::InvalidComposition(_) => 2,
        Error::Infeasible(_)
        | Error::RateTooLow(_)
        | Error::OmegaInfeasible(_)
        | Error::NonConvergence { .. }
        | Error::LevelOrder(_) => 3,
        Error::DimensionMismatch { .. } | Error::RowMismatch { .. } => 4,
        Error::CorruptStream(_) | Error::RankOutOfRange { .. } | Error::NotInCodebook(_) => 5,
        Error::ResourceGuard { .. } => 6,
        Error::Io(_) | Error::Json(_) | Error::Csv(_) => 1,
    }
}

/// Entry point of the `cpc` binary.
pub fn main() -> i32 {
    run_from(std::env::args_os())
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let argv: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(cli, argv) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}\n\n{}", Cli::command().render_usage());
            2
        }
        Err(CliError::Lib(e)) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

enum CliError {
    Usage(String),
    Lib(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Lib(e.into())
    }
}

fn execute(cli: Cli, argv: Vec<String>) -> std::result::Result<(), CliError> {
    let pool = match cli.threads {
        Some(0) => return Err(CliError::Usage("--threads must be at least 1".into())),
        Some(t) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| CliError::Usage(e.to_string()))?,
        ),
        None => None,
    };
    let run = move || dispatch(cli.command, argv);
    match pool {
        Some(p) => p.install(run),
        None => run(),
    }
}

fn dispatch(command: Command, argv: Vec<String>) -> std::result::Result<(), CliError> {
    if let Command::Replay(args) = &command {
        return replay(&args.manifest);
    }
    let command = absolutize(command)?;
    let start = Instant::now();
    let outputs = run_command(&command)?;
    let manifest = RunManifest {
        command: command_name(&command).into(),
        argv,
        seed: command_seed(&command),
        versions: Versions { crate_version: env!("CARGO_PKG_VERSION").into(), rng: ALGORITHM_ID.into() },
        outputs: outputs.iter().map(|p| output_record(p)).collect::<Result<_>>()?,
        wall_time_secs: start.elapsed().as_secs_f64(),
        params: command,
    };
    let path = manifest_path(&manifest.outputs[0].path);
    fs::write(path, serde_json::to_string_pretty(&manifest).map_err(Error::from)?)?;
    Ok(())
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Design(_) => "design",
        Command::Encode(_) => "encode",
        Command::Decode(_) => "decode",
        Command::Eval(_) => "eval",
        Command::Ratepoints(_) => "ratepoints",
        Command::Replay(_) => "replay",
    }
}

fn command_seed(c: &Command) -> Option<u64> {
    match c {
        Command::Design(a) => Some(a.seed),
        Command::Eval(a) => Some(a.seed),
        _ => None,
    }
}

/// Rewrites every path to absolute form so the manifest replays from any directory.
fn absolutize(mut c: Command) -> Result<Command> {
    let abs = |p: &mut PathBuf| -> Result<()> {
        *p = std::path::absolute(&*p)?;
        Ok(())
    };
    match &mut c {
        Command::Design(a) => abs(&mut a.out)?,
        Command::Encode(a) => {
            abs(&mut a.codebook)?;
            abs(&mut a.input)?;
            abs(&mut a.out)?;
        }
        Command::Decode(a) => {
            abs(&mut a.codebook)?;
            abs(&mut a.input)?;
            abs(&mut a.out)?;
        }
        Command::Eval(a) => {
            for p in &mut a.codebooks {
                abs(p)?;
            }
            abs(&mut a.out)?;
        }
        Command::Ratepoints(a) => abs(&mut a.out)?,
        Command::Replay(a) => abs(&mut a.manifest)?,
    }
    Ok(c)
}

fn output_record(path: &Path) -> Result<OutputRecord> {
    let bytes = fs::read(path)?;
    Ok(OutputRecord { path: path.to_path_buf(), fnv1a: format!("{:016x}", fnv1a(&bytes)), bytes: bytes.len() })
}

/// Runs one command and returns the files it wrote.
fn run_command(c: &Command) -> std::result::Result<Vec<PathBuf>, CliError> {
    match c {
        Command::Design(a) => cmd_design(a),
        Command::Encode(a) => cmd_encode(a),
        Command::Decode(a) => cmd_decode(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Ratepoints(a) => cmd_ratepoints(a),
        Command::Replay(_) => unreachable!("replay is dispatched separately"),
    }
}

fn replay(manifest: &Path) -> std::result::Result<(), CliError> {
    let m = RunManifest::read(manifest)?;
    if m.versions.rng != ALGORITHM_ID {
        return Err(Error::InvalidArgument(format!(
            "manifest uses RNG {:?}, this build has {ALGORITHM_ID:?}",
            m.versions.rng
        ))
        .into());
    }
    let outputs = run_command(&m.params)?;
    let mut mismatched = Vec::new();
    for (old, path) in m.outputs.iter().zip(&outputs) {
        let new = output_record(path)?;
        if new.fnv1a != old.fnv1a || new.bytes != old.bytes {
            mismatched.push(path.display().to_string());
        }
    }
    if outputs.len() != m.outputs.len() || !mismatched.is_empty() {
        return Err(Error::Infeasible(format!("replay differs from manifest: {}", mismatched.join(", "))).into());
    }
    println!("replay ok: {} output(s) identical", outputs.len());
    Ok(())
}

fn cmd_design(a: &DesignArgs) -> std::result::Result<Vec<PathBuf>, CliError> {
    let variant = Variant::try_from(a.variant)?;
    let cfg = DesignConfig {
        j: a.j,
        variant,
        sample_count: a.samples,
        rng_seed: a.seed,
        sigma: a.sigma,
        ..Default::default()
    };
    let check_n = |c: &Composition| -> std::result::Result<(), CliError> {
        if c.n() != a.n {
            return Err(CliError::Usage(format!("composition {c} sums to {}, but --n is {}", c.n(), a.n)));
        }
        Ok(())
    };
    let json = match a.mode {
        DesignMode::Common => {
            let [c] = a.compositions.as_slice() else {
                return Err(CliError::Usage("common mode needs exactly one --composition".into()));
            };
            check_n(c)?;
            if a.j == 1 {
                let table = gaussian_order_stats(a.n, a.sigma, DEFAULT_TOL)?;
                let cw = optimal_levels_single(c, &table, variant)?;
                ConcentricCode::single(cw).to_json()?
            } else {
                design_common_composition(c, &cfg)?.to_json()?
            }
        }
        DesignMode::General => {
            if a.compositions.len() != a.j {
                return Err(CliError::Usage(format!(
                    "general mode needs one --composition per sphere ({} given, J = {})",
                    a.compositions.len(),
                    a.j
                )));
            }
            for c in &a.compositions {
                check_n(c)?;
            }
            lloyd_general(&a.compositions, &cfg)?.to_json()?
        }
        DesignMode::WscVar | DesignMode::WscFixed => {
            let Some(rate) = a.rate else {
                return Err(CliError::Usage("--rate is required in wsc-var and wsc-fixed modes".into()));
            };
            let filter = if a.no_conjecture_filter { CompositionFilter::None } else { default_filter(variant) };
            let (mode, g) = if a.mode == DesignMode::WscVar {
                let g = lattice_constant(&a.lattice)
                    .ok_or_else(|| CliError::Usage(format!("unknown lattice {:?}", a.lattice)))?;
                (RateMode::Variable, g)
            } else {
                (RateMode::Fixed, crate::wsc::G_SCALAR)
            };
            let (design, report) = design_with_allocation(mode, a.n, rate, &cfg, g, filter)?;
            if report.rate_deviation_flag {
                eprintln!(
                    "warning: achieved rate {:.4} is more than 0.5 bit from the target {rate}",
                    report.achieved_rate
                );
            }
            wsc_json(&design, &report)?
        }
    };
    fs::write(&a.out, json)?;
    Ok(vec![a.out.clone()])
}

fn wsc_json(design: &Design, report: &crate::wsc::WscReport) -> Result<String> {
    let mut doc = design.code.to_document();
    let mut block = serde_json::to_value(&design.report)?;
    block["allocation"] = serde_json::to_value(report)?;
    doc.design = Some(block);
    Ok(serde_json::to_string_pretty(&doc)?)
}

fn read_codebook(path: &Path) -> Result<ConcentricCode> {
    ConcentricCode::from_json(&fs::read_to_string(path)?)
}

/// Reads headerless CSV rows of `n` numbers. Row numbers in errors are 1-based.
pub fn read_vectors(path: &Path, n: usize) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_path(path)?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != n {
            return Err(Error::RowMismatch { row: i + 1, expected: n, got: record.len() });
        }
        let row = record
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::InvalidArgument(format!("row {}: {f:?} is not a finite number", i + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn cmd_encode(a: &EncodeArgs) -> std::result::Result<Vec<PathBuf>, CliError> {
    let code = read_codebook(&a.codebook)?;
    let rows = read_vectors(&a.input, code.n())?;
    let indices = rows.iter().map(|x| encode_cpc(x, &code).map(|(idx, _)| idx)).collect::<Result<Vec<_>>>()?;
    fs::write(&a.out, write_stream(&code, &indices)?)?;
    Ok(vec![a.out.clone()])
}

fn cmd_decode(a: &DecodeArgs) -> std::result::Result<Vec<PathBuf>, CliError> {
    let code = read_codebook(&a.codebook)?;
    let indices = read_stream(&code, &fs::read(&a.input)?)?;
    let mut out = Vec::new();
    for idx in &indices {
        let x = decode(idx, &code)?;
        let line: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    fs::write(&a.out, out)?;
    Ok(vec![a.out.clone()])
}

/// Rows for one codebook: the entropy-coded and the fixed-rate operating point.
pub fn codebook_rd_points(code: &ConcentricCode, samples: usize, seed: u64, sigma: f64) -> Result<Vec<RdPoint>> {
    let emp = empirical_distortion(code, samples, seed, sigma)?;
    let row = |method: &str, rate_bits: f64| RdPoint {
        method: method.into(),
        n: code.n(),
        j: code.j(),
        rate_bits,
        distortion: emp.distortion,
        stderr: emp.stderr,
        seed,
        samples,
    };
    Ok(vec![row("cpc-variable", rate_variable(code, &emp.probs)?), row("cpc-fixed", rate_fixed(code))])
}

fn cmd_eval(a: &EvalArgs) -> std::result::Result<Vec<PathBuf>, CliError> {
    if a.codebooks.is_empty() && a.baselines.is_empty() {
        return Err(CliError::Usage("eval needs at least one --codebook or --baselines".into()));
    }
    let mut points = Vec::new();
    for path in &a.codebooks {
        let code = read_codebook(path)?;
        points.extend(codebook_rd_points(&code, a.samples, a.seed, a.sigma)?);
    }
    let code_rates: Vec<f64> = points.iter().map(|p| p.rate_bits).collect();
    for b in &a.baselines {
        match b {
            Baseline::Ecsq => points.extend(ecsq_curve(&default_step_grid(a.sigma), a.sigma)?),
            Baseline::Ecusq => points.extend(ecusq_curve(&default_step_grid(a.sigma), a.sigma)?),
            Baseline::Bound => {
                let rates = if code_rates.is_empty() {
                    (0..=80).map(|i| i as f64 * 0.05).collect()
                } else {
                    let mut r = code_rates.clone();
                    r.sort_by(f64::total_cmp);
                    r.dedup();
                    r
                };
                points.extend(shannon_bound(&rates, a.sigma)?);
            }
        }
    }
    let mut buf = Vec::new();
    write_rd_csv(&mut buf, &points)?;
    fs::write(&a.out, buf)?;
    Ok(vec![a.out.clone()])
}

fn cmd_ratepoints(a: &RatepointsArgs) -> std::result::Result<Vec<PathBuf>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "J", "count"]).map_err(Error::from)?;
    for n in a.n_range.0..=a.n_range.1 {
        for j in a.j_range.0..=a.j_range.1 {
            let census = rate_point_census(n, j, a.limit)?;
            w.write_record([n.to_string(), j.to_string(), census.count().to_string()]).map_err(Error::from)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    fs::write(&a.out, bytes)?;
    Ok(vec![a.out.clone()])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("2-9").unwrap(), (2, 9));
        assert_eq!(parse_range("2..9").unwrap(), (2, 9));
        assert_eq!(parse_range("2..=9").unwrap(), (2, 9));
        assert_eq!(parse_range("6").unwrap(), (6, 6));
        assert!(parse_range("9-2").is_err());
        assert!(parse_range("x").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::RateTooLow("x".into())), 3);
        assert_eq!(exit_code(&Error::RowMismatch { row: 3, expected: 4, got: 5 }), 4);
        assert_eq!(exit_code(&Error::CorruptStream("x".into())), 5);
        assert_eq!(exit_code(&Error::ResourceGuard { bound: "1".into(), limit: "0".into() }), 6);
    }

    #[test]
    fn manifest_path_appends_suffix() {
        assert_eq!(manifest_path(Path::new("/tmp/a.json")), PathBuf::from("/tmp/a.json.manifest.json"));
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run_from(["cpc", "design", "--n", "7"]), 2);
        assert_eq!(run_from(["cpc", "bogus"]), 2);
    }
}
