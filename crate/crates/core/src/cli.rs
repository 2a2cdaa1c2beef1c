//! Command-line surface: rate queries, Monte Carlo sessions, GDoF ladders and
//! figure data, all written as CSV.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::channel::{db_to_linear, ChannelParams};
use crate::codec::{run_session, CodeSchedule, SessionConfig};
use crate::error::Error;
use crate::rates::{
    gdof_closed_form, gdof_numeric, kramer_equal_gain, kramer_two_user, rate_no_interference_m,
    rate_two_user, theorem3_rate, RateSolution,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

/// Tolerance printed next to GDoF targets.
pub const GDOF_TOLERANCE: f64 = 0.05;

#[derive(Parser, Debug)]
#[command(name = "icfb", version, about = "Feedback coding for the symmetric Gaussian interference channel")]
pub struct Cli {
    /// Seed for message points and channel noise.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Flat key=value file supplying defaults for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Symmetric rate of one scheme at one channel.
    Rate(RateArgs),
    /// Monte Carlo run of the encoder and interval decoder.
    Simulate(SimulateArgs),
    /// Normalized rate along a ladder of powers.
    Gdof(GdofArgs),
    /// Data behind one comparison figure.
    Figure(FigureArgs),
}

#[derive(Args, Debug)]
pub struct ChannelArgs {
    /// Number of users.
    #[arg(long = "M")]
    pub m: Option<usize>,
    /// SNR in dB, P = 10^(snr-db/10).
    #[arg(long = "snr-db", allow_negative_numbers = true)]
    pub snr_db: Option<f64>,
    /// Interference exponent log INR / log SNR.
    #[arg(long, conflicts_with = "a")]
    pub alpha: Option<f64>,
    /// Cross gain.
    #[arg(long)]
    pub a: Option<f64>,
}

#[derive(Args, Debug)]
pub struct RateArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeArg>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    /// Number of channel uses per session.
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Target rate as a fraction of log(1/β).
    #[arg(long = "rate-fraction")]
    pub rate_fraction: Option<f64>,
    /// Number of independent sessions.
    #[arg(long)]
    pub trials: Option<u64>,
    /// Discard and count sessions whose empirical rate falls short.
    #[arg(long)]
    pub retransmit: bool,
    #[arg(long, value_enum)]
    pub schedule: Option<ScheduleArg>,
}

#[derive(Args, Debug)]
pub struct GdofArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long = "M")]
    pub m: Option<usize>,
    /// Comma-separated powers, e.g. 1e3,1e6,1e9.
    #[arg(long)]
    pub ladder: Option<String>,
}

#[derive(Args, Debug)]
pub struct FigureArgs {
    /// One of rate-vs-alpha-high-snr, rate-vs-alpha-low-snr, gdof-curve, strong-ic, weak-ic.
    pub id: String,
    /// Grid over x: `v1,v2,…` or `start:stop:step`.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long = "M")]
    pub m: Option<usize>,
    /// Fixed SNR for α sweeps.
    #[arg(long = "snr-db", allow_negative_numbers = true)]
    pub snr_db: Option<f64>,
    /// Fixed α for SNR sweeps.
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeArg {
    Proposed,
    Kramer,
    NoInterference,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleArg {
    /// Transient steps into the steady triple of the proposed scheme.
    Steady,
    /// Per-step minimizer of g_λ at constant power.
    Greedy,
}

#[derive(Debug)]
pub enum CliError {
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

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Lib(e.into())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Lib(e) if e.is_infeasible() => EXIT_INFEASIBLE,
            CliError::Lib(Error::Io(_)) => EXIT_FAILURE,
            CliError::Lib(_) => EXIT_USAGE,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Flat `key=value` settings; `#` starts a comment line.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

const CONFIG_KEYS: [&str; 15] = [
    "M",
    "snr-db",
    "alpha",
    "a",
    "scheme",
    "horizon",
    "rate-fraction",
    "trials",
    "seed",
    "retransmit",
    "schedule",
    "ladder",
    "grid",
    "out",
    "id",
];

impl Config {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", i + 1)))?;
            let k = k.trim();
            if !CONFIG_KEYS.contains(&k) {
                return Err(CliError::Usage(format!("config line {}: unknown key '{k}'", i + 1)));
            }
            values.insert(k.to_string(), v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        self.raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| CliError::Usage(format!("config key '{key}': cannot parse '{v}'")))
            })
            .transpose()
    }

    fn resolve<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> CliResult<T> {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.get(key)?.unwrap_or(default)),
        }
    }

    fn resolve_opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }

    fn resolve_enum<T: ValueEnum>(&self, flag: Option<T>, key: &str, default: T) -> CliResult<T> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.raw(key) {
            None => Ok(default),
            Some(s) => T::from_str(s, true).map_err(|e| CliError::Usage(format!("config key '{key}': {e}"))),
        }
    }

    fn resolve_bool(&self, flag: bool, key: &str) -> CliResult<bool> {
        if flag {
            return Ok(true);
        }
        match self.raw(key) {
            None => Ok(false),
            Some("true") | Some("1") | Some("yes") => Ok(true),
            Some("false") | Some("0") | Some("no") => Ok(false),
            Some(v) => Err(CliError::Usage(format!("config key 'retransmit': cannot parse '{v}'"))),
        }
    }
}

/// Parse `args` and run the command; returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(&cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "icfb: {e}");
            e.exit_code()
        }
    }
}

/// Run a parsed command line.
pub fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<i32> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let out_path = cli.out.clone().or_else(|| cfg.raw("out").map(PathBuf::from));
    let seed = cfg.resolve(cli.seed, "seed", 0u64)?;
    let mut buf = Vec::new();
    let code = match &cli.command {
        Command::Rate(a) => cmd_rate(a, &cfg, &mut buf)?,
        Command::Simulate(a) => cmd_simulate(a, &cfg, seed, &mut buf)?,
        Command::Gdof(a) => cmd_gdof(a, &cfg, &mut buf)?,
        Command::Figure(a) => cmd_figure(a, &cfg, &mut buf, stderr)?,
    };
    match out_path {
        Some(p) => fs::write(&p, &buf)?,
        None => stdout.write_all(&buf)?,
    }
    Ok(code)
}

/// Shortest round-trip decimal form.
fn num(v: f64) -> String {
    format!("{v:?}")
}

fn csv_writer(out: &mut Vec<u8>) -> csv::Writer<&mut Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

fn resolve_channel(c: &ChannelArgs, cfg: &Config, default_m: usize) -> CliResult<ChannelParams> {
    let m = cfg.resolve(c.m, "M", default_m)?;
    let snr_db: f64 = cfg
        .resolve_opt(c.snr_db, "snr-db")?
        .ok_or_else(|| CliError::Usage("--snr-db is required".into()))?;
    // a flag for either gain form overrides both config keys
    let (alpha, a) = if c.alpha.is_some() || c.a.is_some() {
        (c.alpha, c.a)
    } else {
        (cfg.get::<f64>("alpha")?, cfg.get::<f64>("a")?)
    };
    match (alpha, a) {
        (Some(al), None) => Ok(ChannelParams::from_alpha(m, snr_db, al)?),
        (None, Some(a)) => Ok(ChannelParams::new(m, a, db_to_linear(snr_db))?),
        _ => Err(CliError::Usage("exactly one of --alpha and --a is required".into())),
    }
}

/// The proposed scheme's steady-state solution for a channel.
pub fn proposed_solution(params: &ChannelParams) -> crate::Result<RateSolution> {
    if params.a == 0.0 || params.m == 1 {
        rate_no_interference_m(params.p, params.m)
    } else if params.m == 2 {
        rate_two_user(params.a, params.p)
    } else {
        theorem3_rate(params.a, params.p, params.m)
    }
}

/// Kramer's scheme where it is available: two users, or equal gains.
pub fn kramer_solution(params: &ChannelParams) -> crate::Result<RateSolution> {
    if params.m == 2 {
        kramer_two_user(params.a, params.p)
    } else if params.a == 1.0 {
        kramer_equal_gain(params.m, params.p)
    } else {
        Err(Error::InvalidParams(
            "the Kramer scheme needs M = 2 or a = 1".into(),
        ))
    }
}

pub fn cmd_rate(args: &RateArgs, cfg: &Config, out: &mut Vec<u8>) -> CliResult<i32> {
    let params = resolve_channel(&args.channel, cfg, 2)?;
    let scheme = cfg.resolve_enum(args.scheme, "scheme", SchemeArg::Proposed)?;
    let sol = match scheme {
        SchemeArg::Proposed => proposed_solution(&params)?,
        SchemeArg::Kramer => kramer_solution(&params)?,
        SchemeArg::NoInterference => {
            if params.a != 0.0 {
                return Err(CliError::Usage("scheme no-interference needs a = 0".into()));
            }
            rate_no_interference_m(params.p, params.m)?
        }
    };
    let d = &sol.diagnostics;
    let mut w = csv_writer(out);
    w.write_record([
        "scheme",
        "M",
        "a",
        "P",
        "r_sym",
        "b",
        "beta",
        "lambda",
        "feasible",
        "residual_beta",
        "residual_closure",
    ])?;
    w.write_record([
        sol.scheme.name().to_string(),
        params.m.to_string(),
        num(params.a),
        num(params.p),
        num(sol.r_sym),
        num(sol.b),
        num(sol.beta),
        num(sol.lambda()),
        sol.feasible().to_string(),
        num(d.residual_beta),
        num(d.residual_closure),
    ])?;
    w.flush()?;
    Ok(if sol.feasible() { EXIT_OK } else { EXIT_INFEASIBLE })
}

pub fn cmd_simulate(args: &SimulateArgs, cfg: &Config, seed: u64, out: &mut Vec<u8>) -> CliResult<i32> {
    let params = resolve_channel(&args.channel, cfg, 2)?;
    let horizon = cfg.resolve(args.horizon, "horizon", 60usize)?;
    let rate_fraction = cfg.resolve(args.rate_fraction, "rate-fraction", 0.8f64)?;
    let trials = cfg.resolve(args.trials, "trials", 1000u64)?;
    let retransmit = cfg.resolve_bool(args.retransmit, "retransmit")?;
    let schedule_kind = cfg.resolve_enum(args.schedule, "schedule", ScheduleArg::Steady)?;
    if horizon < 1 {
        return Err(CliError::Usage("--horizon must be at least 1".into()));
    }
    if !(rate_fraction > 0.0 && rate_fraction < 1.0) {
        return Err(CliError::Usage("--rate-fraction must lie in (0, 1)".into()));
    }
    let schedule = match schedule_kind {
        ScheduleArg::Greedy => CodeSchedule::greedy(&params, horizon)?,
        ScheduleArg::Steady if params.a == 0.0 => CodeSchedule::no_interference(params.p, params.m)?,
        ScheduleArg::Steady => {
            let sol = proposed_solution(&params)?;
            if !sol.feasible() {
                return Err(Error::NoAdmissibleRoot.into());
            }
            CodeSchedule::from_solution(&sol)?
        }
    };
    let res = run_session(
        &params,
        &schedule,
        &SessionConfig {
            horizon,
            rate_fraction,
            trials,
            seed,
            retransmit,
        },
    )?;
    let mut w = csv_writer(out);
    w.write_record(["m", "p_e", "rate_bits", "avg_power", "retransmissions"])?;
    if res.trials > 0 {
        for u in &res.users {
            w.write_record([
                u.user.to_string(),
                num(u.p_e),
                num(u.rate_bits),
                num(u.avg_power),
                u.retransmissions.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(EXIT_OK)
}

/// Parse `v1,v2,…` or `start:stop:step` (inclusive of `stop`).
pub fn parse_grid(s: &str) -> CliResult<Vec<f64>> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::EmptyGrid.into());
    }
    let bad = |t: &str| CliError::Usage(format!("cannot parse grid value '{t}'"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let v: Vec<f64> = parts
            .iter()
            .map(|t| t.trim().parse::<f64>().map_err(|_| bad(t)))
            .collect::<CliResult<_>>()?;
        let (start, stop, step) = (v[0], v[1], v[2]);
        if !(step > 0.0) || !start.is_finite() || !stop.is_finite() {
            return Err(CliError::Usage("grid step must be positive".into()));
        }
        let count = ((stop - start) / step + 1e-9).floor();
        if count < 0.0 {
            return Err(Error::EmptyGrid.into());
        }
        return Ok((0..=count as usize)
            .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
            .collect());
    }
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<f64>().map_err(|_| bad(t)))
        .collect::<CliResult<Vec<f64>>>()
        .and_then(|v| if v.is_empty() { Err(Error::EmptyGrid.into()) } else { Ok(v) })
}

pub fn cmd_gdof(args: &GdofArgs, cfg: &Config, out: &mut Vec<u8>) -> CliResult<i32> {
    let alpha: f64 = cfg
        .resolve_opt(args.alpha, "alpha")?
        .ok_or_else(|| CliError::Usage("--alpha is required".into()))?;
    let m = cfg.resolve(args.m, "M", 2usize)?;
    let ladder_text = cfg.resolve(args.ladder.clone(), "ladder", "1e3,1e6,1e9".to_string())?;
    let ladder = parse_grid(&ladder_text)?;
    let target = gdof_closed_form(alpha)?;
    let rows = gdof_numeric(alpha, m, &ladder)?;
    let mut w = csv_writer(out);
    w.write_record(["P", "d_hat", "target", "tolerance"])?;
    for (p, d) in rows {
        w.write_record([num(p), num(d), num(target), num(GDOF_TOLERANCE)])?;
    }
    w.flush()?;
    Ok(EXIT_OK)
}

/// Figure identifiers with their default sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureId {
    RateVsAlphaHighSnr,
    RateVsAlphaLowSnr,
    GdofCurve,
    StrongIc,
    WeakIc,
}

impl FigureId {
    pub const ALL: [FigureId; 5] = [
        FigureId::RateVsAlphaHighSnr,
        FigureId::RateVsAlphaLowSnr,
        FigureId::GdofCurve,
        FigureId::StrongIc,
        FigureId::WeakIc,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FigureId::RateVsAlphaHighSnr => "rate-vs-alpha-high-snr",
            FigureId::RateVsAlphaLowSnr => "rate-vs-alpha-low-snr",
            FigureId::GdofCurve => "gdof-curve",
            FigureId::StrongIc => "strong-ic",
            FigureId::WeakIc => "weak-ic",
        }
    }

    fn default_grid(&self) -> &'static str {
        match self {
            FigureId::RateVsAlphaHighSnr | FigureId::RateVsAlphaLowSnr => "0:3:0.1",
            FigureId::GdofCurve => "0.1:3:0.1",
            FigureId::StrongIc | FigureId::WeakIc => "10:60:5",
        }
    }

    fn default_m(&self) -> usize {
        match self {
            FigureId::StrongIc | FigureId::WeakIc => 4,
            _ => 2,
        }
    }

    /// Bundled external curves, `x,scheme,value` with `#` provenance lines.
    pub fn reference_data(&self) -> &'static str {
        match self {
            FigureId::RateVsAlphaHighSnr => {
                include_str!("../../../reference-data/rate-vs-alpha-high-snr.csv")
            }
            FigureId::RateVsAlphaLowSnr => include_str!("../../../reference-data/rate-vs-alpha-low-snr.csv"),
            FigureId::GdofCurve => include_str!("../../../reference-data/gdof-curve.csv"),
            FigureId::StrongIc => include_str!("../../../reference-data/strong-ic.csv"),
            FigureId::WeakIc => include_str!("../../../reference-data/weak-ic.csv"),
        }
    }
}

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        FigureId::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::UnknownFigure(s.to_string()))
    }
}

/// One `x,scheme,value` record.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureRow {
    pub x: f64,
    pub scheme: String,
    pub value: f64,
}

/// Resolved sweep behind one figure.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureJob {
    pub id: FigureId,
    pub grid: Vec<f64>,
    pub m: usize,
    pub snr_db: f64,
    pub alpha: f64,
}

impl FigureJob {
    pub fn with_defaults(id: FigureId) -> Self {
        let (snr_db, alpha) = match id {
            FigureId::RateVsAlphaHighSnr => (40.0, 0.0),
            FigureId::RateVsAlphaLowSnr => (10.0, 0.0),
            FigureId::GdofCurve => (90.0, 0.0),
            FigureId::StrongIc => (0.0, 3.0),
            FigureId::WeakIc => (0.0, 0.25),
        };
        Self {
            id,
            grid: parse_grid(id.default_grid()).expect("default grid parses"),
            m: id.default_m(),
            snr_db,
            alpha,
        }
    }

    /// Computed and reference rows sorted by `x` then scheme; points a solver
    /// cannot serve are reported through `skipped`.
    pub fn rows(&self, skipped: &mut Vec<String>) -> crate::Result<Vec<FigureRow>> {
        if self.grid.is_empty() {
            return Err(Error::EmptyGrid);
        }
        let mut rows = Vec::new();
        let mut push = |x: f64, scheme: &str, r: crate::Result<f64>| match r {
            Ok(v) => rows.push(FigureRow {
                x,
                scheme: scheme.to_string(),
                value: v,
            }),
            Err(e) => skipped.push(format!("{scheme} at x={x}: {e}")),
        };
        let feasible_rate = |r: crate::Result<RateSolution>| {
            r.and_then(|s| if s.feasible() { Ok(s.r_sym) } else { Err(Error::NoAdmissibleRoot) })
        };
        for &x in &self.grid {
            match self.id {
                FigureId::RateVsAlphaHighSnr | FigureId::RateVsAlphaLowSnr => {
                    let params = ChannelParams::from_alpha(self.m, self.snr_db, x)?;
                    push(x, "proposed", feasible_rate(proposed_solution(&params)));
                    push(x, "kramer", feasible_rate(kramer_solution(&params)));
                }
                FigureId::GdofCurve => {
                    if x == 1.0 {
                        continue;
                    }
                    push(x, "closed-form", gdof_closed_form(x));
                    let p = db_to_linear(self.snr_db);
                    push(
                        x,
                        "numeric",
                        gdof_numeric(x, self.m, &[p]).map(|v| v[0].1),
                    );
                }
                FigureId::StrongIc | FigureId::WeakIc => {
                    let params = ChannelParams::from_alpha(self.m, x, self.alpha)?;
                    push(x, "proposed", feasible_rate(proposed_solution(&params)));
                }
            }
        }
        rows.extend(parse_reference(self.id.reference_data())?);
        rows.sort_by(|a, b| a.x.total_cmp(&b.x).then_with(|| a.scheme.cmp(&b.scheme)));
        Ok(rows)
    }
}

/// Read a bundled `x,scheme,value` file, skipping `#` lines.
pub fn parse_reference(text: &str) -> crate::Result<Vec<FigureRow>> {
    let mut rd = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).unwrap_or("").trim().to_string();
        let real = |i: usize| {
            field(i)
                .parse::<f64>()
                .map_err(|_| Error::Io(format!("bad reference value '{}'", field(i))))
        };
        rows.push(FigureRow {
            x: real(0)?,
            scheme: field(1),
            value: real(2)?,
        });
    }
    Ok(rows)
}

pub fn cmd_figure(args: &FigureArgs, cfg: &Config, out: &mut Vec<u8>, stderr: &mut dyn Write) -> CliResult<i32> {
    let id: FigureId = args.id.parse()?;
    let mut job = FigureJob::with_defaults(id);
    if let Some(g) = cfg.resolve_opt(args.grid.clone(), "grid")? {
        job.grid = parse_grid(&g)?;
    }
    job.m = cfg.resolve(args.m, "M", job.m)?;
    job.snr_db = cfg.resolve(args.snr_db, "snr-db", job.snr_db)?;
    job.alpha = cfg.resolve(args.alpha, "alpha", job.alpha)?;
    let mut skipped = Vec::new();
    let rows = job.rows(&mut skipped)?;
    for s in &skipped {
        writeln!(stderr, "icfb: skipped {s}")?;
    }
    let mut w = csv_writer(out);
    w.write_record(["x", "scheme", "value"])?;
    for r in rows {
        w.write_record([num(r.x), r.scheme, num(r.value)])?;
    }
    w.flush()?;
    Ok(EXIT_OK)
}
