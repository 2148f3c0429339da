//! Command-line front end: block spectra, entropies, branch points and the
//! verification sweep, written as CSV or JSON tables.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or configuration
//! error, 3 resource budget exceeded. All rows are computed before anything is
//! written, so a failing run leaves no partial output.

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::closed_form::{self, BlockSpectrum};
use crate::edge;
use crate::oracle::{self, Alpha, SpectrumReport};
use crate::vbs::{self, Boundary, ChainSpec};
use crate::weyl::{self, BellIndex, DEFAULT_MAX_EMBEDDING_DIM};
use crate::{Error, DEFAULT_AMPLITUDE_BUDGET, DEFAULT_MATRIX_BUDGET};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

pub const BUDGET_AMPS_ENV: &str = "SUN_VBS_BUDGET_AMPS";
pub const BUDGET_MATRIX_ENV: &str = "SUN_VBS_BUDGET_MATRIX";

/// Oracle agreement threshold for `--verify` rows.
pub const ROW_TOLERANCE: f64 = 1e-10;

/// Fixed CSV header of spectrum and entropy tables.
pub const ROW_HEADER: [&str; 12] = [
    "n",
    "N",
    "L",
    "boundary",
    "lambda_singlet",
    "lambda_adjoint",
    "S",
    "alpha",
    "S_alpha_re",
    "S_alpha_im",
    "verified",
    "max_dev",
];

pub const BRANCH_HEADER: [&str; 9] = [
    "n",
    "L",
    "m",
    "sign",
    "alpha_re",
    "alpha_im",
    "residual",
    "relative_residual",
    "parity",
];

#[derive(Parser, Debug)]
#[command(
    name = "sun-vbs",
    version,
    about = "Entanglement of SU(n) valence-bond-solid chains"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Block spectrum (lambda_singlet, lambda_adjoint) per block length.
    Spectrum(TableArgs),
    /// Von Neumann and Rényi entropies, one row per alpha.
    Entropy(TableArgs),
    /// Closed forms against the brute-force oracle and identity checks.
    Verify(VerifyArgs),
    /// Complex alpha where Tr rho^alpha vanishes.
    BranchPoints(BranchArgs),
}

#[derive(Args, Debug, Clone)]
pub struct Budgets {
    /// Largest state vector the oracle may build.
    #[arg(long, env = BUDGET_AMPS_ENV, default_value_t = DEFAULT_AMPLITUDE_BUDGET)]
    pub budget_amps: usize,
    /// Largest dense matrix side the oracle may build.
    #[arg(long, env = BUDGET_MATRIX_ENV, default_value_t = DEFAULT_MATRIX_BUDGET)]
    pub budget_matrix: usize,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SummaryFormat {
    Text,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum BoundaryArg {
    Open,
    Periodic,
}

impl From<BoundaryArg> for Boundary {
    fn from(b: BoundaryArg) -> Self {
        match b {
            BoundaryArg::Open => Boundary::Open,
            BoundaryArg::Periodic => Boundary::Periodic,
        }
    }
}

/// Logarithm base for reported entropies.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum LogBase {
    E,
    Two,
    N,
}

impl FromStr for LogBase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "e" => Ok(LogBase::E),
            "2" => Ok(LogBase::Two),
            "n" => Ok(LogBase::N),
            _ => Err(format!("log base must be e, 2 or n, got {s}")),
        }
    }
}

impl LogBase {
    fn value(self, n: usize) -> f64 {
        match self {
            LogBase::E => std::f64::consts::E,
            LogBase::Two => 2.0,
            LogBase::N => n as f64,
        }
    }
}

/// `L` or an inclusive range `a..b`.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct IntRange {
    pub first: usize,
    pub last: usize,
}

impl IntRange {
    pub fn iter(self) -> std::ops::RangeInclusive<usize> {
        self.first..=self.last
    }
}

impl FromStr for IntRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let num = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("not a non-negative integer: {t}"))
        };
        let (first, last) = match s.split_once("..") {
            Some((a, b)) => (num(a)?, num(b.strip_prefix('=').unwrap_or(b))?),
            None => {
                let v = num(s)?;
                (v, v)
            }
        };
        if first > last {
            return Err(format!("empty range {s}"));
        }
        Ok(IntRange { first, last })
    }
}

fn parse_alpha(s: &str) -> Result<Alpha, String> {
    s.parse::<Alpha>().map_err(|e| e.to_string())
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write to this file instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct TableArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = BoundaryArg::Open)]
    pub boundary: BoundaryArg,
    /// Ring length (periodic) or oracle chain length for --verify (open).
    #[arg(long)]
    pub chain: Option<usize>,
    /// Block length `L` or range `a..b`.
    #[arg(long)]
    pub block: IntRange,
    /// Rényi indices, real or `a+bi`; repeat or separate with commas.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, value_parser = parse_alpha)]
    pub alpha: Vec<Alpha>,
    /// Compare against the brute-force oracle.
    #[arg(long)]
    pub verify: bool,
    /// e, 2 or n.
    #[arg(long, default_value = "e")]
    pub log_base: LogBase,
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub budgets: Budgets,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, ValueEnum)]
pub enum Check {
    OpenSpectrum,
    PeriodicSpectrum,
    Saturation,
    RenyiFlatness,
    BranchPoints,
    EdgeStates,
    SwapIdentity,
    BellInvariance,
    TransferMatrix,
    Independence,
    LimitConsistency,
}

impl Check {
    pub const ALL: [Check; 11] = [
        Check::OpenSpectrum,
        Check::PeriodicSpectrum,
        Check::Saturation,
        Check::RenyiFlatness,
        Check::BranchPoints,
        Check::EdgeStates,
        Check::SwapIdentity,
        Check::BellInvariance,
        Check::TransferMatrix,
        Check::Independence,
        Check::LimitConsistency,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::OpenSpectrum => "open-spectrum",
            Check::PeriodicSpectrum => "periodic-spectrum",
            Check::Saturation => "saturation",
            Check::RenyiFlatness => "renyi-flatness",
            Check::BranchPoints => "branch-points",
            Check::EdgeStates => "edge-states",
            Check::SwapIdentity => "swap-identity",
            Check::BellInvariance => "bell-invariance",
            Check::TransferMatrix => "transfer-matrix",
            Check::Independence => "independence",
            Check::LimitConsistency => "limit-consistency",
        }
    }

    pub fn tolerance(self) -> f64 {
        match self {
            Check::OpenSpectrum | Check::PeriodicSpectrum | Check::RenyiFlatness => 1e-10,
            Check::EdgeStates | Check::LimitConsistency => 1e-10,
            Check::Saturation | Check::SwapIdentity | Check::TransferMatrix => 1e-12,
            Check::BellInvariance => 1e-13,
            Check::BranchPoints => 1e-8,
            Check::Independence => 1e-11,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Args, Debug, Clone)]
pub struct VerifyArgs {
    /// Restrict every check to these n (default: each check's own set).
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    /// Largest chain length of the oracle grid (default 8 for n=2, 4 for n=3).
    #[arg(long)]
    pub chain: Option<usize>,
    /// Run a single check.
    #[arg(long, value_enum)]
    pub only: Option<Check>,
    #[arg(long, value_enum, default_value_t = SummaryFormat::Text)]
    pub format: SummaryFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub budgets: Budgets,
}

#[derive(Args, Debug, Clone)]
pub struct BranchArgs {
    #[arg(long)]
    pub n: usize,
    /// Block length `L` or range `a..b`.
    #[arg(long)]
    pub block: IntRange,
    /// Winding numbers `m` or range `a..b`.
    #[arg(long, default_value = "0..2")]
    pub m: IntRange,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// One line of a spectrum or entropy table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub n: usize,
    /// Ring length, `-1` for the open chain.
    #[serde(rename = "N")]
    pub chain: i64,
    #[serde(rename = "L")]
    pub block: usize,
    pub boundary: String,
    pub lambda_singlet: f64,
    pub lambda_adjoint: f64,
    #[serde(rename = "S")]
    pub entropy: f64,
    pub alpha: Option<String>,
    #[serde(rename = "S_alpha_re")]
    pub renyi_re: Option<f64>,
    #[serde(rename = "S_alpha_im")]
    pub renyi_im: Option<f64>,
    pub verified: Option<bool>,
    pub max_dev: Option<f64>,
    #[serde(default)]
    pub branch_point: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchRow {
    pub n: usize,
    #[serde(rename = "L")]
    pub block: usize,
    pub m: u32,
    pub sign: i8,
    pub alpha_re: f64,
    pub alpha_im: f64,
    /// `|Tr ρ^α|`; absent when it overflows a double.
    pub residual: Option<f64>,
    pub relative_residual: f64,
    pub parity: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub check: String,
    pub cases: usize,
    /// Absent when the deviation overflows a double.
    pub max_dev: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifySummary {
    pub pass: bool,
    pub checks: Vec<CheckOutcome>,
}

/// Failure of a command, mapped to an exit code.
#[derive(Debug)]
pub enum CliError {
    Lib(Error),
    Usage(String),
    Io(std::io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Usage(s) => f.write_str(s),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Lib(Error::BudgetExceeded { .. }) => EXIT_BUDGET,
            _ => EXIT_USAGE,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt<T>(v: &Option<T>, f: impl Fn(&T) -> String) -> String {
    v.as_ref().map(f).unwrap_or_default()
}

pub fn rows_to_csv(rows: &[ResultRow]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(ROW_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.chain.to_string(),
            r.block.to_string(),
            r.boundary.clone(),
            sci(r.lambda_singlet),
            sci(r.lambda_adjoint),
            sci(r.entropy),
            r.alpha.clone().unwrap_or_default(),
            opt(&r.renyi_re, |v| sci(*v)),
            opt(&r.renyi_im, |v| sci(*v)),
            opt(&r.verified, |v| v.to_string()),
            opt(&r.max_dev, |v| sci(*v)),
        ])
        .map_err(csv_err)?;
    }
    finish_csv(w)
}

pub fn branch_rows_to_csv(rows: &[BranchRow]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(BRANCH_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.block.to_string(),
            r.m.to_string(),
            r.sign.to_string(),
            sci(r.alpha_re),
            sci(r.alpha_im),
            opt(&r.residual, |v| sci(*v)),
            sci(r.relative_residual),
            r.parity.to_string(),
        ])
        .map_err(csv_err)?;
    }
    finish_csv(w)
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e.to_string()))
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> CliResult<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    s.push('\n');
    Ok(s)
}

fn emit(text: &str, out_path: &Option<PathBuf>, stdout: &mut dyn Write) -> CliResult<()> {
    match out_path {
        Some(p) => std::fs::write(p, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Closed-form spectrum for one table row.
fn closed_spectrum(
    n: usize,
    boundary: Boundary,
    chain: Option<usize>,
    len: usize,
) -> CliResult<Box<dyn BlockSpectrum>> {
    Ok(match boundary {
        Boundary::Open => Box::new(closed_form::lambda_open(n, len)?),
        Boundary::Periodic => {
            let sites = chain.ok_or_else(|| {
                CliError::Usage("--chain is required for a periodic boundary".into())
            })?;
            Box::new(closed_form::lambda_periodic(n, sites, len)?)
        }
    })
}

/// Oracle spectrum of sites `1..=len` of the chain the row describes.
fn oracle_spectrum(args: &TableArgs, len: usize) -> CliResult<SpectrumReport> {
    let boundary: Boundary = args.boundary.into();
    let sites = match boundary {
        Boundary::Open => args.chain.unwrap_or(len),
        Boundary::Periodic => args.chain.unwrap_or(0),
    };
    let spec = ChainSpec::with_budget(args.n, sites, boundary, args.budgets.budget_amps)?;
    let block = spec.block(1, len)?;
    let state = vbs::vbs_state(&spec)?;
    Ok(oracle::schmidt_spectrum(
        &state,
        block,
        args.budgets.budget_matrix,
    )?)
}

/// Largest eigenvalue deviation, counting oracle eigenvalues past `n²` as
/// deviations from zero.
fn spectrum_deviation(oracle: &SpectrumReport, closed: &[f64]) -> f64 {
    let ev = oracle.eigenvalues();
    let head = closed
        .iter()
        .enumerate()
        .map(|(i, c)| (ev.get(i).copied().unwrap_or(0.0) - c).abs());
    let tail = ev.iter().skip(closed.len()).map(|v| v.abs());
    head.chain(tail).fold(0.0, f64::max)
}

fn check_table_args(args: &TableArgs) -> CliResult<()> {
    if args.n < 2 {
        return Err(Error::InvalidDimension(args.n).into());
    }
    if args.block.first == 0 {
        return Err(CliError::Usage("block lengths start at 1".into()));
    }
    if args.boundary == BoundaryArg::Periodic && args.chain.is_none() {
        return Err(CliError::Usage(
            "--chain is required for a periodic boundary".into(),
        ));
    }
    if let Some(sites) = args.chain {
        if args.block.last > sites {
            return Err(CliError::Usage(format!(
                "block length {} exceeds chain length {sites}",
                args.block.last
            )));
        }
    }
    for a in &args.alpha {
        a.validate()?;
    }
    Ok(())
}

fn table_rows(args: &TableArgs, with_entropies: bool) -> CliResult<Vec<ResultRow>> {
    check_table_args(args)?;
    let boundary: Boundary = args.boundary.into();
    let base = args.log_base.value(args.n);
    let chain_col = match boundary {
        Boundary::Open => -1,
        Boundary::Periodic => args.chain.unwrap_or(0) as i64,
    };
    let mut rows = Vec::new();
    for len in args.block.iter() {
        let closed = closed_spectrum(args.n, boundary, args.chain, len)?;
        let entropy = closed.entropy();
        let oracle = if args.verify {
            Some(oracle_spectrum(args, len)?)
        } else {
            None
        };
        let base_dev = oracle.as_ref().map(|o| {
            let d = spectrum_deviation(o, &closed.eigenvalues());
            if with_entropies {
                d.max((oracle::von_neumann(o) - entropy).abs())
            } else {
                d
            }
        });
        let row = |alpha: Option<String>,
                   s_alpha: Option<crate::C64>,
                   dev: Option<f64>,
                   bp: bool| ResultRow {
            n: args.n,
            chain: chain_col,
            block: len,
            boundary: boundary.as_str().to_string(),
            lambda_singlet: closed.singlet(),
            lambda_adjoint: closed.adjoint(),
            entropy: closed_form::rescale_entropy(entropy, base),
            alpha,
            renyi_re: s_alpha.map(|z| closed_form::rescale_entropy(z.re, base)),
            renyi_im: s_alpha.map(|z| closed_form::rescale_entropy(z.im, base)),
            verified: dev.map(|d| d < ROW_TOLERANCE),
            max_dev: dev,
            branch_point: bp,
        };
        if !with_entropies || args.alpha.is_empty() {
            rows.push(row(None, None, base_dev, false));
            continue;
        }
        for &alpha in &args.alpha {
            let label = Some(alpha.to_string());
            match closed.renyi_alpha(alpha) {
                Ok(z) => {
                    let dev = match (&oracle, base_dev) {
                        (Some(o), Some(d)) => {
                            Some(d.max((oracle::renyi_alpha(o, alpha)? - z).norm()))
                        }
                        _ => None,
                    };
                    rows.push(row(label, Some(z), dev, false));
                }
                Err(Error::BranchPoint(_)) => rows.push(row(label, None, base_dev, true)),
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok(rows)
}

fn render_rows(rows: &[ResultRow], format: Format) -> CliResult<String> {
    match format {
        Format::Csv => rows_to_csv(rows),
        Format::Json => to_json(&rows),
    }
}

fn cmd_table(args: &TableArgs, with_entropies: bool, stdout: &mut dyn Write) -> CliResult<i32> {
    let rows = table_rows(args, with_entropies)?;
    emit(
        &render_rows(&rows, args.output.format)?,
        &args.output.out,
        stdout,
    )?;
    let failed = rows.iter().any(|r| r.verified == Some(false));
    Ok(if failed { EXIT_VERIFY_FAILED } else { EXIT_OK })
}

pub fn branch_rows(args: &BranchArgs) -> CliResult<Vec<BranchRow>> {
    let mut rows = Vec::new();
    let m_first =
        u32::try_from(args.m.first).map_err(|_| CliError::Usage("m out of range".into()))?;
    let m_last =
        u32::try_from(args.m.last).map_err(|_| CliError::Usage("m out of range".into()))?;
    for len in args.block.iter() {
        for bp in closed_form::branch_points(args.n, len, m_first..=m_last)? {
            let residual = closed_form::power_sum_residual(args.n, len, bp.alpha)?;
            rows.push(BranchRow {
                n: args.n,
                block: len,
                m: bp.m,
                sign: bp.sign,
                alpha_re: bp.alpha.re,
                alpha_im: bp.alpha.im,
                residual: residual.is_finite().then_some(residual),
                relative_residual: closed_form::relative_power_sum_residual(args.n, len, bp.alpha)?,
                parity: bp.parity_ok(),
            });
        }
    }
    Ok(rows)
}

fn cmd_branch_points(args: &BranchArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    let rows = branch_rows(args)?;
    let text = match args.output.format {
        Format::Csv => branch_rows_to_csv(&rows)?,
        Format::Json => to_json(&rows)?,
    };
    emit(&text, &args.output.out, stdout)?;
    Ok(EXIT_OK)
}

/// Sweep parameters shared by the verification checks.
#[derive(Clone, Debug)]
pub struct VerifyGrid {
    pub ns: Option<Vec<usize>>,
    pub chain: Option<usize>,
    pub budgets: Budgets,
}

impl Default for VerifyGrid {
    fn default() -> Self {
        VerifyGrid {
            ns: None,
            chain: None,
            budgets: Budgets {
                budget_amps: DEFAULT_AMPLITUDE_BUDGET,
                budget_matrix: DEFAULT_MATRIX_BUDGET,
            },
        }
    }
}

impl VerifyGrid {
    fn ns(&self, default: &[usize]) -> Vec<usize> {
        self.ns.clone().unwrap_or_else(|| default.to_vec())
    }

    fn max_chain(&self, n: usize) -> usize {
        self.chain.unwrap_or(match n {
            2 => 8,
            3 => 4,
            _ => 3,
        })
    }

    fn max_open_block(n: usize) -> usize {
        match n {
            2 => 5,
            3 => 3,
            _ => 2,
        }
    }
}

fn outcome(
    check: Check,
    cases: usize,
    max_dev: f64,
    extra_ok: bool,
    detail: Option<String>,
) -> CheckOutcome {
    let tolerance = check.tolerance();
    CheckOutcome {
        check: check.name().to_string(),
        cases,
        max_dev: max_dev.is_finite().then_some(max_dev),
        tolerance,
        pass: extra_ok && max_dev < tolerance,
        detail,
    }
}

/// Oracle spectra of every block `(k, L)` of open chains up to the grid size.
struct OpenSample {
    n: usize,
    len: usize,
    spectrum: Vec<f64>,
}

fn open_grid(grid: &VerifyGrid) -> CliResult<Vec<OpenSample>> {
    let mut jobs = Vec::new();
    for n in grid.ns(&[2, 3]) {
        for sites in 1..=grid.max_chain(n) {
            let spec = ChainSpec::with_budget(n, sites, Boundary::Open, grid.budgets.budget_amps)?;
            for len in 1..=sites.min(VerifyGrid::max_open_block(n)) {
                for first in 1..=sites - len + 1 {
                    jobs.push((spec.clone(), first, len));
                }
            }
        }
    }
    let budget = grid.budgets.budget_matrix;
    jobs.par_iter()
        .map(|(spec, first, len)| {
            let state = vbs::open_vbs_state(spec)?;
            let report = oracle::schmidt_spectrum(&state, spec.block(*first, *len)?, budget)?;
            Ok(OpenSample {
                n: spec.n,
                len: *len,
                spectrum: report.eigenvalues().to_vec(),
            })
        })
        .collect::<Result<Vec<_>, Error>>()
        .map_err(CliError::from)
}

fn check_open_spectrum(samples: &[OpenSample]) -> CliResult<CheckOutcome> {
    let mut worst: f64 = 0.0;
    for s in samples {
        let closed = closed_form::lambda_open(s.n, s.len)?.eigenvalues();
        let report = SpectrumReport::from_eigenvalues(s.spectrum.clone())?;
        worst = worst.max(spectrum_deviation(&report, &closed));
    }
    Ok(outcome(
        Check::OpenSpectrum,
        samples.len(),
        worst,
        true,
        None,
    ))
}

fn check_independence(samples: &[OpenSample]) -> CheckOutcome {
    let mut worst: f64 = 0.0;
    for a in samples {
        for b in samples.iter().filter(|b| b.n == a.n && b.len == a.len) {
            let d = a.n * a.n;
            for i in 0..d {
                let x = a.spectrum.get(i).copied().unwrap_or(0.0);
                let y = b.spectrum.get(i).copied().unwrap_or(0.0);
                worst = worst.max((x - y).abs());
            }
        }
    }
    outcome(Check::Independence, samples.len(), worst, true, None)
}

fn check_periodic_spectrum(grid: &VerifyGrid) -> CliResult<CheckOutcome> {
    let mut jobs = Vec::new();
    for n in grid.ns(&[2, 3]) {
        for sites in 3..=grid.max_chain(n) {
            let spec =
                ChainSpec::with_budget(n, sites, Boundary::Periodic, grid.budgets.budget_amps)?;
            jobs.push(spec);
        }
    }
    let budget = grid.budgets.budget_matrix;
    let per_chain = jobs
        .par_iter()
        .map(|spec| {
            let state = vbs::periodic_vbs_state(spec)?;
            let mut worst: f64 = 0.0;
            for len in 1..spec.sites {
                let report = oracle::schmidt_spectrum(&state, spec.block(1, len)?, budget)?;
                let closed = closed_form::lambda_periodic(spec.n, spec.sites, len)?.eigenvalues();
                worst = worst.max(spectrum_deviation(&report, &closed));
            }
            Ok((spec.sites - 1, worst))
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let cases = per_chain.iter().map(|c| c.0).sum();
    let worst = per_chain.iter().map(|c| c.1).fold(0.0, f64::max);
    Ok(outcome(Check::PeriodicSpectrum, cases, worst, true, None))
}

/// `3 (n²-1)^{-L} (L log(n²-1) + 2)`.
pub fn saturation_envelope(n: usize, len: usize) -> f64 {
    let k = (n * n - 1) as f64;
    3.0 * k.powi(-(len as i32)) * (len as f64 * k.ln() + 2.0)
}

fn check_saturation(grid: &VerifyGrid) -> CliResult<CheckOutcome> {
    let mut worst: f64 = 0.0;
    let mut envelope_ok = true;
    let mut cases = 0;
    for n in grid.ns(&[2, 3, 4]) {
        let limit = 2.0 * (n as f64).ln();
        worst = worst.max((closed_form::entropy_open(n, 30)? - limit).abs());
        let mut previous = f64::INFINITY;
        for len in 2..=40 {
            let deficit = closed_form::entropy_deficit_open(n, len)?;
            envelope_ok &=
                deficit >= 0.0 && deficit <= saturation_envelope(n, len) && deficit <= previous;
            previous = deficit;
            cases += 1;
        }
    }
    let detail =
        (!envelope_ok).then(|| "entropy deficit leaves the exponential envelope".to_string());
    Ok(outcome(
        Check::Saturation,
        cases,
        worst,
        envelope_ok,
        detail,
    ))
}

pub const FLATNESS_ALPHAS: [f64; 6] = [0.5, 0.9, 1.1, 2.0, 5.0, 10.0];

fn check_renyi_flatness(grid: &VerifyGrid) -> CliResult<CheckOutcome> {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for n in grid.ns(&[2, 3]) {
        let spec = closed_form::lambda_open(n, 40)?;
        for a in FLATNESS_ALPHAS {
            worst = worst.max((spec.renyi(a)? - 2.0 * (n as f64).ln()).abs());
            cases += 1;
        }
    }
    Ok(outcome(Check::RenyiFlatness, cases, worst, true, None))
}

fn check_branch_points(grid: &VerifyGrid) -> CliResult<CheckOutcome> {
    let mut worst: f64 = 0.0;
    let mut worst_relative: f64 = 0.0;
    let mut failing = Vec::new();
    let mut parity = true;
    let mut cases = 0;
    for n in grid.ns(&[2, 3]) {
        let args = BranchArgs {
            n,
            block: IntRange { first: 2, last: 6 },
            m: IntRange { first: 0, last: 2 },
            output: OutputArgs {
                format: Format::Csv,
                out: None,
            },
        };
        for row in branch_rows(&args)? {
            let r = row.residual.unwrap_or(f64::INFINITY);
            if r >= Check::BranchPoints.tolerance() && !failing.contains(&(n, row.block)) {
                failing.push((n, row.block));
            }
            worst = worst.max(r);
            worst_relative = worst_relative.max(row.relative_residual);
            parity &= row.parity;
            cases += 1;
        }
    }
    let mut detail = format!(
        "max relative residual {worst_relative:.3e}; real-part parity {}",
        if parity { "ok" } else { "violated" }
    );
    if !failing.is_empty() {
        let list: Vec<String> = failing
            .iter()
            .map(|(n, l)| format!("n={n} L={l}"))
            .collect();
        detail.push_str(&format!(
            "; absolute residual above tolerance at {}",
            list.join(", ")
        ));
    }
    Ok(outcome(
        Check::BranchPoints,
        cases,
        worst,
        parity,
        Some(detail),
    ))
}

fn check_edge_states(grid: &VerifyGrid) -> CliResult<CheckOutcome> {
    let mut jobs = Vec::new();
    for n in grid.ns(&[2, 3]) {
        for len in 1..=VerifyGrid::max_open_block(n) {
            jobs.push((n, len));
        }
    }
    let budgets = grid.budgets.clone();
    let devs = jobs
        .par_iter()
        .map(|&(n, len)| -> Result<(f64, f64), Error> {
            let basis = edge::EdgeBasis::build(n, len, budgets.budget_amps)?;
            let gram = edge::edge_gram(n, len, budgets.budget_amps)?;
            let k = (n * n - 1) as f64;
            let mut gram_rel: f64 = 0.0;
            for label in BellIndex::all(n) {
                let i = label.linear(n);
                let want = k.powi(len as i32) * edge::edge_weight(n, len, label)?;
                let got = gram[[i, i]].re;
                gram_rel = gram_rel.max(if want == 0.0 {
                    got.abs()
                } else {
                    (got - want).abs() / want
                });
            }
            let spec = ChainSpec::with_budget(n, len, Boundary::Open, budgets.budget_amps)?;
            let state = vbs::open_vbs_state(&spec)?;
            let rho = oracle::reduced_density(&state, spec.block(1, len)?, budgets.budget_matrix)?;
            let rebuilt = edge::reconstruct_rho(n, len, budgets.budget_matrix)?;
            let frob = rebuilt.frobenius_distance(rho.matrix());
            Ok((basis.orthonormality_defect().max(frob), gram_rel))
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let worst = devs.iter().map(|d| d.0).fold(0.0, f64::max);
    let gram = devs.iter().map(|d| d.1).fold(0.0, f64::max);
    let detail = format!("max relative Gram deviation {gram:.3e}");
    Ok(outcome(
        Check::EdgeStates,
        jobs.len(),
        worst,
        gram < 1e-9,
        Some(detail),
    ))
}

fn check_swap_identity(grid: &VerifyGrid) -> CliResult<CheckOutcome> {
    let ns = grid.ns(&[2, 3, 4]);
    let max_n = ns
        .iter()
        .copied()
        .max()
        .unwrap_or(2)
        .max(DEFAULT_MAX_EMBEDDING_DIM);
    let mut worst: f64 = 0.0;
    for &n in &ns {
        worst = worst.max(weyl::swap_identity_residual(n, max_n)?);
    }
    Ok(outcome(Check::SwapIdentity, ns.len(), worst, true, None))
}

fn check_bell_invariance(grid: &VerifyGrid) -> CliResult<CheckOutcome> {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for n in grid.ns(&[2, 3, 4]) {
        for a in BellIndex::all(n) {
            worst = worst.max(weyl::singlet_invariance_residual(n, a)?);
            cases += 1;
        }
    }
    Ok(outcome(Check::BellInvariance, cases, worst, true, None))
}

fn check_transfer_matrix(grid: &VerifyGrid) -> CliResult<CheckOutcome> {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for n in grid.ns(&[2, 3, 4]) {
        for len in 1..=20 {
            let a = closed_form::two_spin_rdm_transfer(n, len)?;
            let b = closed_form::lambda_open(n, len)?;
            worst = worst
                .max((a.singlet - b.singlet).abs())
                .max((a.adjoint - b.adjoint).abs());
            cases += 1;
        }
        let k = (n * n - 1) as f64;
        let mut expected = vec![-1.0; n * n - 1];
        expected.insert(0, k);
        let jacobi = closed_form::transfer_spectrum(n)?;
        let (mut diag, off) = closed_form::transfer_diagonalized(n)?;
        diag.sort_by(|a, b| b.total_cmp(a));
        for (e, (x, y)) in expected.iter().zip(jacobi.iter().zip(&diag)) {
            worst = worst.max((e - x).abs()).max((e - y).abs());
        }
        worst = worst.max(off);
        cases += 1;
    }
    Ok(outcome(Check::TransferMatrix, cases, worst, true, None))
}

fn check_limit_consistency(grid: &VerifyGrid) -> CliResult<CheckOutcome> {
    let mut worst: f64 = 0.0;
    let mut near_one: f64 = 0.0;
    let mut cases = 0;
    for n in grid.ns(&[2]) {
        let ring = closed_form::lambda_periodic(n, 40, 2)?;
        let open = closed_form::lambda_open(n, 2)?;
        worst = worst
            .max((ring.singlet - open.singlet).abs())
            .max((ring.adjoint - open.adjoint).abs());
        cases += 1;
    }
    for n in grid.ns(&[2, 3]) {
        let mut spectra: Vec<Box<dyn BlockSpectrum>> = Vec::new();
        for len in 1..=10 {
            spectra.push(Box::new(closed_form::lambda_open(n, len)?));
        }
        for sites in 3..=grid.max_chain(n) {
            for len in 1..sites {
                spectra.push(Box::new(closed_form::lambda_periodic(n, sites, len)?));
            }
        }
        for s in &spectra {
            let entropy = s.entropy();
            for a in [1.0 - 1e-6, 1.0 + 1e-6] {
                near_one = near_one.max((s.renyi(a)? - entropy).abs());
            }
            cases += 1;
        }
    }
    let detail = format!("max |S_(1+-1e-6) - S| = {near_one:.3e} (tolerance 1e-5)");
    Ok(outcome(
        Check::LimitConsistency,
        cases,
        worst,
        near_one < 1e-5,
        Some(detail),
    ))
}

/// Runs the selected checks in a fixed order.
pub fn run_checks(grid: &VerifyGrid, only: Option<Check>) -> CliResult<VerifySummary> {
    let selected: Vec<Check> = match only {
        Some(c) => vec![c],
        None => Check::ALL.to_vec(),
    };
    if let Some(ns) = &grid.ns {
        for &n in ns {
            if n < 2 {
                return Err(Error::InvalidDimension(n).into());
            }
        }
    }
    let samples =
        if selected.contains(&Check::OpenSpectrum) || selected.contains(&Check::Independence) {
            open_grid(grid)?
        } else {
            Vec::new()
        };
    let mut checks = Vec::with_capacity(selected.len());
    for check in selected {
        checks.push(match check {
            Check::OpenSpectrum => check_open_spectrum(&samples)?,
            Check::PeriodicSpectrum => check_periodic_spectrum(grid)?,
            Check::Saturation => check_saturation(grid)?,
            Check::RenyiFlatness => check_renyi_flatness(grid)?,
            Check::BranchPoints => check_branch_points(grid)?,
            Check::EdgeStates => check_edge_states(grid)?,
            Check::SwapIdentity => check_swap_identity(grid)?,
            Check::BellInvariance => check_bell_invariance(grid)?,
            Check::TransferMatrix => check_transfer_matrix(grid)?,
            Check::Independence => check_independence(&samples),
            Check::LimitConsistency => check_limit_consistency(grid)?,
        });
    }
    Ok(VerifySummary {
        pass: checks.iter().all(|c| c.pass),
        checks,
    })
}

fn summary_text(summary: &VerifySummary) -> String {
    let mut s = String::new();
    for c in &summary.checks {
        let dev = c
            .max_dev
            .map_or_else(|| "overflow".to_string(), |d| format!("{d:.6e}"));
        s.push_str(&format!(
            "{:<18} {} max_dev={} tol={:.0e} cases={}",
            c.check,
            if c.pass { "PASS" } else { "FAIL" },
            dev,
            c.tolerance,
            c.cases
        ));
        if let Some(d) = &c.detail {
            s.push_str(&format!("  ({d})"));
        }
        s.push('\n');
    }
    s.push_str(if summary.pass {
        "overall PASS\n"
    } else {
        "overall FAIL\n"
    });
    s
}

fn cmd_verify(args: &VerifyArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    let grid = VerifyGrid {
        ns: (!args.n.is_empty()).then(|| args.n.clone()),
        chain: args.chain,
        budgets: args.budgets.clone(),
    };
    let summary = run_checks(&grid, args.only)?;
    let text = match args.format {
        SummaryFormat::Text => summary_text(&summary),
        SummaryFormat::Json => to_json(&summary)?,
    };
    emit(&text, &args.out, stdout)?;
    Ok(if summary.pass {
        EXIT_OK
    } else {
        EXIT_VERIFY_FAILED
    })
}

pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> CliResult<i32> {
    match &cli.command {
        Command::Spectrum(a) => cmd_table(a, false, stdout),
        Command::Entropy(a) => cmd_table(a, true, stdout),
        Command::Verify(a) => cmd_verify(a, stdout),
        Command::BranchPoints(a) => cmd_branch_points(a, stdout),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { stdout } else { stderr };
            let _ = sink.write_all(text.as_bytes());
            return if code == 0 { EXIT_OK } else { EXIT_USAGE };
        }
    };
    match execute(&cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
