use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use tripneg_core::moments::{
    collect_measurements, gate_distribution, group_distribution, stream_seed, CalibrationTable, DetectionMode, Group,
    GroupExpectations, MeasurementPath, MeasurementSet,
};
use tripneg_core::network::{sample_shots, DEFAULT_SIZE_CAP};
use tripneg_core::spectral::{
    majorization_from_measurements, negativity_report_from_measurements, MajorizationReport, NegativityReport,
};
use tripneg_core::state::{
    bound_state, dct_state, ghz, product_state, random_density, random_state, w_state, DctParams, TripartiteState,
};
use tripneg_core::tensor::DimTriple;

use crate::render::{self, Format};
use crate::{measurements, statefile, table1};

#[derive(Debug, Parser)]
#[command(name = "tripneg", version, about = "LOCC estimation of three-party negativities from trace powers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Recover negativities (or majorization relations) of a state.
    Detect(DetectArgs),
    /// Write a preset state to a state file.
    Gen(GenArgs),
    /// Recompute the reference correlator table of the bound entangled state.
    Table1(FormatArgs),
    /// Compare measured parameter counts with full tomography.
    Paramcount(ParamArgs),
    /// Outcome probabilities and correlators for one group and copy count.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Full,
    ASide,
    BSide,
    CSide,
    Majorization,
}

impl From<ModeArg> for DetectionMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Full => DetectionMode::Full,
            ModeArg::ASide => DetectionMode::ASide,
            ModeArg::BSide => DetectionMode::BSide,
            ModeArg::CSide => DetectionMode::CSide,
            ModeArg::Majorization => DetectionMode::Majorization,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PathArg {
    Analytic,
    Gate,
    Shots,
}

#[derive(Debug, Args)]
pub struct FormatArgs {
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// How expectations are produced (defaults to shots when --shots is given).
    #[arg(long, value_enum)]
    pub path: Option<PathArg>,
    /// Shots per (group, k).
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest joint dimension the gate-level path may build.
    #[arg(long, default_value_t = DEFAULT_SIZE_CAP)]
    pub cap: usize,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

impl RunArgs {
    fn path(&self) -> Result<MeasurementPath, CliError> {
        let path = self.path.unwrap_or(if self.shots.is_some() { PathArg::Shots } else { PathArg::Analytic });
        match (path, self.shots) {
            (PathArg::Shots, Some(0)) => Err(CliError::Usage("--shots must be at least 1".into())),
            (PathArg::Shots, Some(n)) => Ok(MeasurementPath::Shots { n, seed: self.seed }),
            (PathArg::Shots, None) => Err(CliError::Usage("--path shots needs --shots N".into())),
            (_, Some(_)) => Err(CliError::Usage("--shots only applies to --path shots".into())),
            (PathArg::Analytic, None) => Ok(MeasurementPath::Analytic),
            (PathArg::Gate, None) => Ok(MeasurementPath::Gate { cap: self.cap }),
        }
    }
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// State file to analyse.
    #[arg(long, conflicts_with = "measurements")]
    pub state: Option<PathBuf>,
    /// Measurement file to analyse instead of a state.
    #[arg(long)]
    pub measurements: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "full")]
    pub mode: ModeArg,
    /// Also write the measured correlators to this file.
    #[arg(long)]
    pub save_measurements: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Ghz,
    W,
    Bound,
    Dct,
    Random,
    Product,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(value_enum)]
    pub preset: Preset,
    /// Output file (standard out when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Local dimensions for random and product states.
    #[arg(long, num_args = 3, value_names = ["DA", "DB", "DC"])]
    pub dims: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Rank of a random state (full rank by default).
    #[arg(long)]
    pub rank: Option<usize>,
    /// DCT weights λ0+ λ0− λ01 λ10 λ11; fractions such as 1/3 are accepted.
    #[arg(long, num_args = 5, value_names = ["L0P", "L0M", "L01", "L10", "L11"], allow_hyphen_values = true)]
    pub params: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct ParamArgs {
    /// Total dimensions (8 12 16 18 when none are given).
    pub d: Vec<usize>,
    /// Adds dA·dB·dC to the list.
    #[arg(long, num_args = 3, value_names = ["DA", "DB", "DC"])]
    pub dims: Option<Vec<usize>>,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub state: PathBuf,
    /// Copy count.
    #[arg(long)]
    pub k: usize,
    /// `1` for stage one, or a sign configuration such as `-++`.
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    pub group: String,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Conditioning(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Conditioning(_) => 3,
        }
    }
}

impl From<tripneg_core::Error> for CliError {
    fn from(e: tripneg_core::Error) -> Self {
        match e {
            tripneg_core::Error::IllConditioned { .. } => CliError::Conditioning(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

/// Text for standard out and the process exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub stdout: String,
    pub code: u8,
}

impl Output {
    fn ok(stdout: String) -> Self {
        Self { stdout, code: 0 }
    }
}

pub fn run(cli: Cli) -> Result<Output, CliError> {
    match cli.command {
        Command::Detect(a) => detect(&a),
        Command::Gen(a) => gen(&a),
        Command::Table1(a) => Ok(cmd_table1(a.format)),
        Command::Paramcount(a) => paramcount(&a),
        Command::Simulate(a) => simulate(&a),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

pub fn load_state(path: &Path) -> Result<TripartiteState, CliError> {
    statefile::parse(&read(path)?).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn table_for(groups: &[Group]) -> Result<CalibrationTable, CliError> {
    let closed = CalibrationTable::closed_form();
    let covered = groups.iter().all(|g| match g {
        Group::First => true,
        Group::Second(cfg) => closed.get(*cfg).is_some(),
    });
    Ok(if covered { closed } else { CalibrationTable::calibrated()?.clone() })
}

fn detect(a: &DetectArgs) -> Result<Output, CliError> {
    let mode: DetectionMode = a.mode.into();
    let table = table_for(&mode.groups())?;
    let path = a.run.path()?;
    let set = match (&a.state, &a.measurements) {
        (Some(s), None) => {
            let rho = load_state(s)?;
            collect_measurements(&rho, mode, path, &table)?
        }
        (None, Some(m)) => {
            if a.run.path.is_some() || a.run.shots.is_some() {
                return Err(CliError::Usage("--path and --shots do not apply to --measurements input".into()));
            }
            measurements::parse(&read(m)?).map_err(|e| CliError::Validation(format!("{}: {e}", m.display())))?
        }
        _ => return Err(CliError::Usage("detect needs --state or --measurements".into())),
    };
    if let Some(out) = &a.save_measurements {
        write_file(out, &measurements::write(&set))?;
    }
    if mode == DetectionMode::Majorization {
        let r = majorization_from_measurements(&set, &table)?;
        return Ok(Output::ok(render::majorization_report(&r, a.run.format)));
    }
    let report = negativity_report_from_measurements(&set, mode, &table, stream_seed(a.run.seed, Group::First, 0))?;
    Ok(detect_output(&report, a.run.format))
}

fn detect_output(report: &NegativityReport, fmt: Format) -> Output {
    let stdout = render::negativity_report(report, fmt);
    let code = match report.first_error() {
        Some(e) => CliError::from(e.clone()).exit_code(),
        None => 0,
    };
    Output { stdout, code }
}

/// Majorization report for a loaded state, exposed for tests.
pub fn majorization_for(rho: &TripartiteState, path: MeasurementPath) -> Result<MajorizationReport, CliError> {
    let table = CalibrationTable::calibrated()?;
    let set = collect_measurements(rho, DetectionMode::Majorization, path, table)?;
    Ok(majorization_from_measurements(&set, table)?)
}

fn parse_fraction(t: &str) -> Result<f64, CliError> {
    let bad = || CliError::Usage(format!("bad number '{t}'"));
    match t.split_once('/') {
        Some((n, d)) => {
            let (n, d): (f64, f64) = (n.trim().parse().map_err(|_| bad())?, d.trim().parse().map_err(|_| bad())?);
            if d == 0.0 {
                return Err(bad());
            }
            Ok(n / d)
        }
        None => t.trim().parse().map_err(|_| bad()),
    }
}

fn dims_arg(v: &Option<Vec<usize>>) -> Result<Option<DimTriple>, CliError> {
    match v.as_deref() {
        None => Ok(None),
        Some(&[a, b, c]) => DimTriple::new(a, b, c).map(Some).map_err(|e| CliError::Usage(e.to_string())),
        Some(_) => Err(CliError::Usage("--dims takes three values".into())),
    }
}

pub fn build_preset(a: &GenArgs) -> Result<TripartiteState, CliError> {
    let dims = dims_arg(&a.dims)?;
    let qubits_only = |name: &str| match dims {
        Some(d) if !d.is_qubits() => Err(CliError::Usage(format!("preset {name} is defined for 2x2x2 only"))),
        _ => Ok(()),
    };
    if a.params.is_some() && a.preset != Preset::Dct {
        return Err(CliError::Usage("--params only applies to the dct preset".into()));
    }
    let dims = dims.unwrap_or(DimTriple::QUBITS);
    Ok(match a.preset {
        Preset::Ghz => {
            qubits_only("ghz")?;
            ghz()
        }
        Preset::W => {
            qubits_only("w")?;
            w_state()
        }
        Preset::Bound => {
            qubits_only("bound")?;
            bound_state()
        }
        Preset::Dct => {
            qubits_only("dct")?;
            let raw = a.params.as_ref().ok_or_else(|| CliError::Usage("dct needs --params with five weights".into()))?;
            let v: Vec<f64> = raw.iter().map(|t| parse_fraction(t)).collect::<Result<_, _>>()?;
            let p = DctParams { lambda0_plus: v[0], lambda0_minus: v[1], lambda01: v[2], lambda10: v[3], lambda11: v[4] };
            dct_state(&p)?
        }
        Preset::Random => random_state(dims, a.rank.unwrap_or(dims.total()), a.seed)?,
        Preset::Product => {
            if a.rank.is_some() {
                return Err(CliError::Usage("--rank only applies to the random preset".into()));
            }
            let local = |d: usize, salt: u64| random_density(d, 1, a.seed.wrapping_mul(3).wrapping_add(salt));
            product_state(&local(dims.a, 0)?, &local(dims.b, 1)?, &local(dims.c, 2)?)?
        }
    })
}

fn gen(a: &GenArgs) -> Result<Output, CliError> {
    let text = statefile::write(&build_preset(a)?);
    match &a.out {
        Some(p) => {
            write_file(p, &text)?;
            Ok(Output::ok(String::new()))
        }
        None => Ok(Output::ok(text)),
    }
}

pub fn cmd_table1(fmt: Format) -> Output {
    let cells = table1::compute();
    let code = if table1::mismatches(&cells) > 0 { 2 } else { 0 };
    Output { stdout: render::table1(&cells, fmt), code }
}

/// `(d, 4(d−2)+1, d²−1)`.
pub fn paramcount_row(d: usize) -> (usize, usize, usize) {
    (d, DetectionMode::Full.parameter_count(d), d * d - 1)
}

fn paramcount(a: &ParamArgs) -> Result<Output, CliError> {
    let mut ds = a.d.clone();
    if let Some(t) = dims_arg(&a.dims)? {
        ds.push(t.total());
    }
    if ds.is_empty() {
        ds = vec![8, 12, 16, 18];
    }
    if let Some(d) = ds.iter().find(|&&d| d < 3) {
        return Err(CliError::Usage(format!("dimension {d} is below 3")));
    }
    let rows: Vec<_> = ds.into_iter().map(paramcount_row).collect();
    Ok(Output::ok(render::paramcount(&rows, a.format)))
}

fn simulate(a: &SimulateArgs) -> Result<Output, CliError> {
    if a.k == 0 {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    let group: Group = a.group.parse().map_err(|_| CliError::Usage(format!("unknown group '{}'", a.group)))?;
    let rho = load_state(&a.state)?;
    let table = table_for(&[group])?;
    let analytic = group_distribution(&rho, a.k, group, &table)?;
    let (dist, deviation) = match a.run.path()? {
        MeasurementPath::Analytic => (analytic, None),
        MeasurementPath::Gate { cap } => {
            let gate = gate_distribution(&rho, a.k, group, cap)?;
            let dev = gate.probs().iter().zip(analytic.probs()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            (gate, Some(dev))
        }
        MeasurementPath::Shots { n, seed } => {
            (sample_shots(&analytic, n, stream_seed(seed, group, a.k))?.empirical(), None)
        }
    };
    let e = GroupExpectations::from_distribution(&dist);
    Ok(Output::ok(render::simulation(a.k, &group.to_string(), &dist, &e, deviation, a.run.format)))
}

/// Measurement set for a loaded state, exposed for tests.
pub fn measure(rho: &TripartiteState, mode: DetectionMode, path: MeasurementPath) -> Result<MeasurementSet, CliError> {
    let table = table_for(&mode.groups())?;
    Ok(collect_measurements(rho, mode, path, &table)?)
}
