//! Command-line front end.
//!
//! Exit codes: 0 success, 2 invalid flags or parameter values, 3 numerical
//! failure, 4 a regenerated table row outside tolerance.

pub mod tables;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::Error;
use crate::exact::exact_spectrum;
use crate::model::{gk_energy, PotentialParams, Sector};
use crate::oracle::{fixtures_dir, generate_quadrature_fixtures, shoot_eigenvalue, write_fixtures, ShootingConfig};
use crate::perturbation::first_order_coefficient;
use crate::variational::{bound_at_a, history_at, minimize_over_a, DEFAULT_A_MAX};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_TOLERANCE: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "npo", version, about = "Bounds and exact values for -d2/dr2 + B r^2 + gamma(gamma+1)/r^2 + lambda r^2/(1+g r^2)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Variational upper bound, minimized over A unless --fix-A is given.
    Bound(BoundArgs),
    /// Quasi-exact solutions of a given polynomial order.
    Exact(ExactArgs),
    /// First-order coefficient of lambda in the unshifted basis.
    Perturb(PerturbArgs),
    /// Regenerate one of the comparison tables as CSV.
    Table(TableArgs),
    /// Shooting eigenvalue next to the variational bound.
    Oracle(BoundArgs),
    /// Regenerate the pinned quadrature fixtures.
    Fixtures(FixturesArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
struct ChannelArgs {
    /// Angular parameter gamma = l + (N-3)/2.
    #[arg(long, allow_negative_numbers = true, conflicts_with_all = ["space_dim", "l"])]
    gamma: Option<f64>,
    /// Space dimension (with --l).
    #[arg(long = "N", requires = "l")]
    space_dim: Option<u32>,
    /// Angular momentum (with --N).
    #[arg(long, requires = "space_dim")]
    l: Option<u32>,
    #[arg(long = "B", default_value_t = 1.0)]
    b: f64,
}

impl ChannelArgs {
    fn sector(&self) -> Result<Sector, CliError> {
        let s = match (self.gamma, self.space_dim, self.l) {
            (Some(gamma), None, None) => Sector::new(gamma, self.b),
            (None, Some(dim), Some(l)) => Sector::from_dimension(dim, l, self.b),
            _ => return Err(CliError::Usage("give either --gamma or both --N and --l".into())),
        };
        s.map_err(CliError::usage)
    }

    fn record(&self, params: &mut BTreeMap<String, Value>, sector: &Sector) {
        if let (Some(dim), Some(l)) = (self.space_dim, self.l) {
            params.insert("N".into(), json!(dim));
            params.insert("l".into(), json!(l));
        }
        params.insert("gamma".into(), json!(sector.gamma()));
        params.insert("B".into(), json!(sector.b()));
    }
}

#[derive(Args, Debug)]
struct BoundArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    #[arg(long, allow_negative_numbers = true)]
    lambda: f64,
    #[arg(long)]
    g: f64,
    #[arg(long, default_value_t = 0)]
    level: usize,
    #[arg(long = "D", default_value_t = 20)]
    dim: usize,
    #[arg(long, default_value_t = DEFAULT_A_MAX, allow_negative_numbers = true)]
    amax: f64,
    /// Use this A instead of minimizing.
    #[arg(long = "fix-A", allow_negative_numbers = true)]
    fix_a: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args, Debug)]
struct ExactArgs {
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    channel: ChannelArgs,
    #[arg(long)]
    g: f64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args, Debug)]
struct PerturbArgs {
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    channel: ChannelArgs,
    #[arg(long)]
    g: f64,
    /// Also report the first-order energy at this lambda.
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args, Debug)]
struct TableArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
    table: u8,
    /// CSV destination; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON object mapping table numbers to a tolerance that replaces the
    /// per-row defaults, e.g. {"3": 1e-5}.
    #[arg(long)]
    tolerances: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FixturesArgs {
    /// Destination file; `$NPO_FIXTURES/quadrature.json` by default.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Everything about one invocation, serialized as a single JSON object.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub parameters: BTreeMap<String, Value>,
    /// Headline number (the bound, coefficient or oracle eigenvalue).
    pub value: Option<f64>,
    pub results: Value,
    pub optimal_a: Option<f64>,
    #[serde(rename = "D")]
    pub dim: Option<usize>,
    /// `(D, value)` at the optimal `A`.
    pub history: Vec<(usize, f64)>,
    pub wall_time_s: f64,
    pub version: String,
}

impl RunRecord {
    fn new(command: &str, parameters: BTreeMap<String, Value>) -> Self {
        RunRecord {
            command: command.to_string(),
            parameters,
            value: None,
            results: Value::Null,
            optimal_a: None,
            dim: None,
            history: Vec::new(),
            wall_time_s: 0.0,
            version: crate::VERSION.to_string(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("records serialize")
    }

    pub fn from_json(text: &str) -> crate::Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Header plus one row: parameters, then the headline value, `A*` and `D`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = self.parameters.keys().cloned().collect();
        header.extend(["value", "optimal_A", "D"].map(String::from));
        let mut row: Vec<String> = self.parameters.values().map(csv_value).collect();
        row.push(self.value.map(sig15).unwrap_or_default());
        row.push(self.optimal_a.map(sig15).unwrap_or_default());
        row.push(self.dim.map(|d| d.to_string()).unwrap_or_default());
        w.write_record(&header).expect("in-memory write");
        w.write_record(&row).expect("in-memory write");
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }
}

fn csv_value(v: &Value) -> String {
    match v {
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => sig15(x),
            _ => n.to_string(),
        },
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Fifteen significant digits, trailing zeros dropped.
pub fn sig15(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..15).contains(&exp) {
        let decimals = (14 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.14e}")
    }
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Numerical(Error),
    Tolerance(usize),
    Io(String),
}

impl CliError {
    fn usage(e: Error) -> Self {
        CliError::Usage(e.to_string())
    }

    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numerical(_) | CliError::Io(_) => EXIT_NUMERICAL,
            CliError::Tolerance(_) => EXIT_TOLERANCE,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Numerical(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "invalid arguments: {m}"),
            CliError::Numerical(e) => write!(f, "numerical failure: {e}"),
            CliError::Tolerance(n) => write!(f, "{n} row(s) outside tolerance"),
            CliError::Io(m) => write!(f, "i/o failure: {m}"),
        }
    }
}

/// Parse `args` (program name first), run, and return the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "npo: {e}");
            e.code()
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Bound(a) => emit(out, a.format, &cmd_bound(&a)?, text_bound),
        Command::Exact(a) => emit(out, a.format, &cmd_exact(&a)?, text_exact),
        Command::Perturb(a) => emit(out, a.format, &cmd_perturb(&a)?, text_perturb),
        Command::Oracle(a) => emit(out, a.format, &cmd_oracle(&a)?, text_oracle),
        Command::Table(a) => cmd_table(&a, out),
        Command::Fixtures(a) => {
            let path = a.out.unwrap_or_else(|| fixtures_dir().join("quadrature.json"));
            let records = generate_quadrature_fixtures()?;
            write_fixtures(&path, &records)?;
            writeln!(out, "wrote {} records to {}", records.len(), path.display())?;
            Ok(())
        }
    }
}

fn emit(out: &mut dyn Write, format: Format, rec: &RunRecord, text: fn(&RunRecord) -> String) -> Result<(), CliError> {
    match format {
        Format::Json => writeln!(out, "{}", rec.to_json())?,
        Format::Csv => write!(out, "{}", rec.to_csv())?,
        Format::Text => write!(out, "{}", text(rec))?,
    }
    Ok(())
}

fn potential(lambda: f64, g: f64) -> Result<PotentialParams, CliError> {
    PotentialParams::new(lambda, g).map_err(CliError::usage)
}

fn bound_inputs(a: &BoundArgs) -> Result<(Sector, PotentialParams, BTreeMap<String, Value>), CliError> {
    let sector = a.channel.sector()?;
    let pot = potential(a.lambda, a.g)?;
    if a.level >= a.dim {
        return Err(CliError::Usage(format!("--level {} needs --D > {}", a.level, a.level)));
    }
    let mut params = BTreeMap::new();
    a.channel.record(&mut params, &sector);
    params.insert("lambda".into(), json!(a.lambda));
    params.insert("g".into(), json!(a.g));
    params.insert("level".into(), json!(a.level));
    params.insert("D".into(), json!(a.dim));
    match a.fix_a {
        Some(fixed) => {
            params.insert("fix_A".into(), json!(fixed));
        }
        None => {
            params.insert("amax".into(), json!(a.amax));
        }
    }
    Ok((sector, pot, params))
}

fn variational(a: &BoundArgs, sector: &Sector, pot: &PotentialParams) -> Result<(f64, f64, Vec<(usize, f64)>), CliError> {
    match a.fix_a {
        Some(fixed) => {
            sector.with_a(fixed).map_err(CliError::usage)?;
            let bound = bound_at_a(a.level, a.dim, fixed, sector, pot)?;
            Ok((bound, fixed, history_at(a.level, a.dim, fixed, sector, pot)?))
        }
        None => {
            if !(a.amax > sector.a_min()) {
                return Err(CliError::Usage(format!("--amax must exceed A_min = {}", sector.a_min())));
            }
            let r = minimize_over_a(a.level, a.dim, sector, pot, a.amax)?;
            Ok((r.bound, r.optimal_a, r.history))
        }
    }
}

fn cmd_bound(a: &BoundArgs) -> Result<RunRecord, CliError> {
    let start = Instant::now();
    let (sector, pot, params) = bound_inputs(a)?;
    let (bound, opt_a, history) = variational(a, &sector, &pot)?;
    let mut rec = RunRecord::new("bound", params);
    rec.value = Some(bound);
    rec.results = json!({ "bound": bound });
    rec.optimal_a = Some(opt_a);
    rec.dim = Some(a.dim);
    rec.history = history;
    rec.wall_time_s = start.elapsed().as_secs_f64();
    Ok(rec)
}

fn cmd_oracle(a: &BoundArgs) -> Result<RunRecord, CliError> {
    let start = Instant::now();
    let (sector, pot, params) = bound_inputs(a)?;
    if sector.b() != 1.0 {
        return Err(CliError::Usage("the shooting oracle is implemented for B = 1".into()));
    }
    let shot = shoot_eigenvalue(a.level, sector.gamma(), &pot, &ShootingConfig::default())?;
    let (bound, opt_a, history) = variational(a, &sector, &pot)?;
    let mut rec = RunRecord::new("oracle", params);
    rec.value = Some(shot);
    rec.results = json!({ "shooting": shot, "bound": bound, "bound_minus_shooting": bound - shot });
    rec.optimal_a = Some(opt_a);
    rec.dim = Some(a.dim);
    rec.history = history;
    rec.wall_time_s = start.elapsed().as_secs_f64();
    Ok(rec)
}

fn cmd_exact(a: &ExactArgs) -> Result<RunRecord, CliError> {
    let start = Instant::now();
    let sector = a.channel.sector()?;
    if sector.b() != 1.0 {
        return Err(CliError::Usage("quasi-exact solutions are defined for B = 1".into()));
    }
    if a.n == 0 || !(a.g > 0.0) {
        return Err(CliError::Usage("need --n >= 1 and --g > 0".into()));
    }
    let sols = exact_spectrum(a.n, sector.gamma(), a.g)?;
    let mut params = BTreeMap::new();
    a.channel.record(&mut params, &sector);
    params.insert("n".into(), json!(a.n));
    params.insert("g".into(), json!(a.g));
    let mut rec = RunRecord::new("exact", params);
    rec.value = sols.first().map(|s| s.energy);
    rec.results = serde_json::to_value(&sols).expect("solutions serialize");
    rec.wall_time_s = start.elapsed().as_secs_f64();
    Ok(rec)
}

fn cmd_perturb(a: &PerturbArgs) -> Result<RunRecord, CliError> {
    let start = Instant::now();
    let sector = a.channel.sector()?;
    if !(a.g > 0.0) {
        return Err(CliError::Usage("--g must be positive".into()));
    }
    let coef = first_order_coefficient(a.n, &sector, a.g)?;
    let e0 = gk_energy(a.n, &sector.with_a(0.0)?);
    let mut params = BTreeMap::new();
    a.channel.record(&mut params, &sector);
    params.insert("n".into(), json!(a.n));
    params.insert("g".into(), json!(a.g));
    let mut results = json!({ "coefficient": coef, "unperturbed": e0 });
    if let Some(lambda) = a.lambda {
        params.insert("lambda".into(), json!(lambda));
        results["energy"] = json!(e0 + lambda * coef);
    }
    let mut rec = RunRecord::new("perturb", params);
    rec.value = Some(coef);
    rec.results = results;
    rec.wall_time_s = start.elapsed().as_secs_f64();
    Ok(rec)
}

fn cmd_table(a: &TableArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let tolerance = match &a.tolerances {
        None => None,
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let map: BTreeMap<String, f64> =
                serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("tolerance file: {e}")))?;
            map.get(&a.table.to_string()).copied()
        }
    };
    let rows = tables::compute_table(a.table, tolerance)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["table", "parameters", "quantity", "computed", "published", "diff", "tolerance", "pass", "note"])
        .map_err(|e| CliError::Io(e.to_string()))?;
    for r in &rows {
        w.write_record([
            r.table.to_string(),
            r.parameters.clone(),
            r.quantity.clone(),
            sig15(r.computed),
            r.published.clone(),
            sig15(r.diff),
            sig15(r.tolerance),
            r.pass.to_string(),
            r.note.clone(),
        ])
        .map_err(|e| CliError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    match &a.out {
        Some(path) => {
            std::fs::write(path, &bytes)?;
            writeln!(out, "table {}: {} rows written to {}", a.table, rows.len(), path.display())?;
        }
        None => out.write_all(&bytes)?,
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    if failed > 0 {
        return Err(CliError::Tolerance(failed));
    }
    Ok(())
}

fn text_history(rec: &RunRecord) -> String {
    rec.history.iter().map(|(d, e)| format!("  D={d:<3} {}\n", sig15(*e))).collect()
}

fn text_bound(rec: &RunRecord) -> String {
    format!(
        "bound      {}\noptimal A  {}\nD          {}\nhistory\n{}",
        sig15(rec.value.unwrap_or(f64::NAN)),
        sig15(rec.optimal_a.unwrap_or(f64::NAN)),
        rec.dim.unwrap_or(0),
        text_history(rec)
    )
}

fn text_oracle(rec: &RunRecord) -> String {
    let r = &rec.results;
    let f = |k: &str| r[k].as_f64().map_or_else(String::new, sig15);
    format!(
        "shooting   {}\nbound      {}\ndifference {}\noptimal A  {}\nD          {}\n",
        f("shooting"),
        f("bound"),
        f("bound_minus_shooting"),
        sig15(rec.optimal_a.unwrap_or(f64::NAN)),
        rec.dim.unwrap_or(0)
    )
}

fn text_exact(rec: &RunRecord) -> String {
    let mut s = String::new();
    for sol in rec.results.as_array().into_iter().flatten() {
        let num = |k: &str| sol[k].as_f64().map_or_else(String::new, sig15);
        let alphas: Vec<String> =
            sol["alphas"].as_array().into_iter().flatten().filter_map(Value::as_f64).map(sig15).collect();
        s.push_str(&format!(
            "E={}  lambda={}  nodes={}  alphas=[{}]\n",
            num("energy"),
            num("lambda"),
            sol["nodes"],
            alphas.join(", ")
        ));
    }
    s
}

fn text_perturb(rec: &RunRecord) -> String {
    let r = &rec.results;
    let mut s = format!(
        "E = {} + {} lambda\n",
        r["unperturbed"].as_f64().map_or_else(String::new, sig15),
        sig15(rec.value.unwrap_or(f64::NAN))
    );
    if let Some(e) = r["energy"].as_f64() {
        s.push_str(&format!("E(lambda) = {}\n", sig15(e)));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("npo").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn significant_digits() {
        assert_eq!(sig15(3.0), "3");
        assert_eq!(sig15(5.186373002931507), "5.18637300293151");
        assert_eq!(sig15(-133.0), "-133");
        assert_eq!(sig15(0.001992603359200), "0.0019926033592");
        assert_eq!(sig15(1.5e-9), "1.50000000000000e-9");
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run_capture(&["bound", "--lambda", "1"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["bound", "--gamma", "0", "--N", "3", "--l", "0", "--lambda", "1", "--g", "1"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["bound", "--gamma", "0", "--lambda", "1", "--g", "-1"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["bound", "--gamma", "0", "--lambda", "1", "--g", "1", "--level", "3", "--D", "2"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["table", "--table", "7"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn trivial_bound() {
        let (code, out, _) = run_capture(&["bound", "--gamma", "0", "--lambda", "0", "--g", "1", "--D", "4", "--format", "json"]);
        assert_eq!(code, EXIT_OK);
        let rec = RunRecord::from_json(out.trim()).unwrap();
        assert!((rec.value.unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(rec.history.len(), 4);
    }

    #[test]
    fn csv_projection() {
        let (code, out, _) =
            run_capture(&["perturb", "--n", "0", "--N", "3", "--l", "0", "--g", "0.5", "--format", "csv"]);
        assert_eq!(code, EXIT_OK);
        let mut lines = out.lines();
        assert_eq!(lines.next().unwrap(), "B,N,g,gamma,l,n,value,optimal_A,D");
        assert!(lines.next().unwrap().contains("0.7419076686088"));
    }
}
