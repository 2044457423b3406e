//! `orbit-approx`: drives the constructions, the brute-force oracle and the
//! exponent estimates from the command line.
//!
//! Exit codes: 0 success, 2 bad input or unmet precondition, 3 precision
//! exhausted, 4 a certified bound failed, 5 not enough data for an estimate.

mod output;
mod range;

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde_json::{json, Value};

use orbit_approx::analysis::{geometric_grid, target_kind, TargetKind, DEFAULT_ORACLE_CAP};
use orbit_approx::real::set_precision_cap;
use orbit_approx::sl2::{count_norm_bounded, enumerate_entries, write_enumeration_csv};
use orbit_approx::{
    approx_irrational_slope, approx_origin, approx_rational_slope, approx_signed, estimate_exponents, normalize,
    select_indices_large_omega, select_indices_small_omega, staircase, verify_lemma1, verify_theorem4,
    ApproxResult, Certificate, ContinuedFraction, Error, Omega, PlanePoint, RealValue, StaircaseSource, Window,
};

use output::{write_json, Format, Rows};
use range::IndexRange;

const GOLDEN: &str = "surd:(-1+1*sqrt(5))/2";

#[derive(Parser)]
#[command(name = "orbit-approx", version, about = "Approximation of plane points by SL(2,Z) orbits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Largest norm budget the brute-force oracle may enumerate.
    #[arg(long, global = true, env = "ORBIT_APPROX_ORACLE_CAP", default_value_t = DEFAULT_ORACLE_CAP)]
    cap: u64,
    /// Working precision, in bits, at which an undecided comparison gives up.
    #[arg(long, global = true)]
    max_bits: Option<u32>,
}

#[derive(Subcommand)]
enum Command {
    /// Convergents p_k/q_k of ξ with exact bounds on |ε_k|.
    Convergents {
        #[command(flatten)]
        x: XArgs,
        /// Last index k.
        #[arg(long, default_value_t = 10)]
        n: usize,
    },
    /// Run one of the constructions over a range of indices.
    Approx(ApproxArgs),
    /// Exhaustive lower-bound checks with the oracle.
    Verify {
        #[command(subcommand)]
        which: Verify,
    },
    /// Empirical exponents from a staircase, next to the predicted values.
    Exponents(ExponentArgs),
    /// All of SL(2,Z) with entries in [−T, T].
    Enumerate {
        #[arg(long = "T", alias = "t")]
        t: u64,
        /// Print only the number of matrices.
        #[arg(long)]
        count: bool,
    },
}

#[derive(Args)]
struct XArgs {
    /// Slope ξ in the real-input grammar; x = (ξ, 1).
    #[arg(long, default_value = GOLDEN, allow_hyphen_values = true)]
    xi: String,
    /// The point x as "x1,x2"; overrides --xi.
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
}

impl XArgs {
    fn point(&self) -> Result<PlanePoint, Error> {
        match &self.x {
            Some(p) => p.parse(),
            None => Ok(PlanePoint::from_slope(self.xi.parse()?)),
        }
    }

    fn slope(&self) -> Result<RealValue, Error> {
        match &self.x {
            Some(_) => self.point()?.slope(),
            None => self.xi.parse(),
        }
    }
}

#[derive(Args)]
struct XiArg {
    /// Slope ξ in the real-input grammar; x = (ξ, 1).
    #[arg(long, default_value = GOLDEN, allow_hyphen_values = true)]
    xi: String,
}

impl XiArg {
    fn cf(&self) -> Result<ContinuedFraction, Error> {
        ContinuedFraction::new(self.xi.parse()?)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Origin,
    Rational,
    IrrationalSmallOmega,
    IrrationalLargeOmega,
    Signed,
}

#[derive(Args)]
struct ApproxArgs {
    #[command(flatten)]
    x: XArgs,
    /// Target point "y1,y2".
    #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
    y: String,
    #[arg(long, value_enum)]
    method: Method,
    /// Indices k: "6", "6..12" or "odd 9..21".
    #[arg(long, num_args = 1..=2, default_value = "1..10")]
    k: Vec<String>,
    /// Starting indices j₀ for the small-ω driver.
    #[arg(long, default_value = "1..8")]
    j0: String,
    /// Asserted ω(ξ) > 2 for the large-ω driver.
    #[arg(long)]
    omega: Option<BigRational>,
    /// Exponent μ in (0, 1/3) for the signed construction.
    #[arg(long, default_value = "3/10")]
    mu: BigRational,
}

#[derive(Subcommand)]
enum Verify {
    /// |γ(ξ,1)| ≥ 1/(2q_k) for all |γ| ≤ q_{k+1}/2.
    Lemma1 {
        #[command(flatten)]
        xi: XiArg,
        #[arg(long)]
        k: usize,
    },
    /// |γ(ξ,1) − y| ≥ 1/(4bq_k) for all |γ| ≤ |y₂|q_kq_{k+1}/4, y of slope a/b.
    #[command(name = "thm4")]
    Thm4 {
        #[command(flatten)]
        xi: XiArg,
        #[arg(long, allow_hyphen_values = true)]
        y: String,
        #[arg(long)]
        k: usize,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SourceArg {
    Oracle,
    Constructions,
}

#[derive(Args)]
struct ExponentArgs {
    #[command(flatten)]
    x: XArgs,
    #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
    y: String,
    /// Largest norm budget; the grid is 1, 2, 4, … and T itself.
    #[arg(long = "T", alias = "t", default_value_t = 10_000)]
    t: u64,
    #[arg(long, value_enum, default_value_t = SourceArg::Oracle)]
    source: SourceArg,
    /// Lower end of the window; defaults to ⌈√T⌉.
    #[arg(long)]
    window_min: Option<u64>,
    /// Asserted ω(ξ); quadratic irrationals default to 1.
    #[arg(long)]
    omega_xi: Option<Omega>,
    /// Asserted ω of the slope of y; quadratic irrationals default to 1.
    #[arg(long)]
    omega_y: Option<Omega>,
    /// Also write the staircase as CSV to this file.
    #[arg(long)]
    staircase_csv: Option<PathBuf>,
    /// Also write the records as CSV to this file.
    #[arg(long)]
    records_csv: Option<PathBuf>,
}

enum Failure {
    Core(Error),
    Io(io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Io(e.into())
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::PrecisionExhausted { .. } => 3,
        Error::BoundViolated(_) | Error::BoundNotYetReached(_) => 4,
        Error::InsufficientData(_) => 5,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(bits) = cli.max_bits {
        set_precision_cap(bits);
    }
    let mut out = io::stdout().lock();
    let result = run(&cli, &mut out).and_then(|code| {
        out.flush()?;
        Ok(code)
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: &Cli, out: &mut impl Write) -> Result<u8, Failure> {
    match &cli.command {
        Command::Convergents { x, n } => convergents(x, *n, cli.format, out),
        Command::Approx(args) => approx(args, cli.format, out),
        Command::Verify { which } => verify(which, cli.cap, cli.format, out),
        Command::Exponents(args) => exponents(args, cli.cap, cli.format, out),
        Command::Enumerate { t, count } => enumerate(*t, *count, cli.cap, cli.format, out),
    }
}

fn emit(rows: &Rows, json: Value, format: Format, out: &mut impl Write) -> Result<(), Failure> {
    match format {
        Format::Table => rows.write_table(out)?,
        Format::Csv => rows.write_csv(out)?,
        Format::Json => write_json(out, &json)?,
    }
    Ok(())
}

fn convergents(x: &XArgs, n: usize, format: Format, out: &mut impl Write) -> Result<u8, Failure> {
    let cf = ContinuedFraction::new(x.slope()?)?;
    let digits = cf.partial_quotients(n)?;
    let mut rows = Rows::new(&["k", "a", "p", "q", "sign", "|ε| ≥", "|ε| ≤"]);
    let mut json = Vec::new();
    for (row, a) in cf.table_rows(n)?.into_iter().zip(&digits) {
        let k: usize = row[0].parse().expect("index column");
        cf.certify_epsilon_bounds(k)?;
        let lower = format!("{}/{}", row[4], row[5]);
        let upper = format!("{}/{}", row[6], row[7]);
        json.push(json!({
            "k": k, "a": a.to_string(), "p": row[1], "q": row[2], "sign": row[3],
            "abs_eps_lower": lower, "abs_eps_upper": upper,
        }));
        rows.push(vec![row[0].clone(), a.to_string(), row[1].clone(), row[2].clone(), row[3].clone(), lower, upper]);
    }
    emit(&rows, Value::Array(json), format, out)?;
    Ok(0)
}

/// One attempted construction.
struct Attempt {
    k: Option<usize>,
    j0: Option<usize>,
    result: Result<ApproxResult, Error>,
}

fn indices(parts: &[String]) -> Result<IndexRange, Error> {
    IndexRange::parse(&parts.join(" "))
}

fn attempts(args: &ApproxArgs) -> Result<Vec<Attempt>, Error> {
    let x = args.x.point()?;
    let y: PlanePoint = args.y.parse()?;
    let ks = indices(&args.k)?;
    let at = |k: usize, result| Attempt { k: Some(k), j0: None, result };
    if args.method == Method::Signed {
        return Ok(ks.iter().map(|k| at(k, approx_signed(&x, &y, k, &args.mu))).collect());
    }
    let pair = normalize(&x, &y)?;
    Ok(match args.method {
        Method::Origin => ks.iter().map(|k| at(k, approx_origin(&pair, k))).collect(),
        Method::Rational => ks.iter().map(|k| at(k, approx_rational_slope(&pair, k))).collect(),
        Method::IrrationalSmallOmega => IndexRange::parse(&args.j0)?
            .iter()
            .map(|j0| {
                let chosen = select_indices_small_omega(&pair, j0);
                Attempt {
                    k: chosen.as_ref().ok().map(|c| c.1),
                    j0: Some(j0),
                    result: chosen.and_then(|(j, k)| approx_irrational_slope(&pair, j, k)),
                }
            })
            .collect(),
        Method::IrrationalLargeOmega => {
            let omega = args
                .omega
                .as_ref()
                .ok_or_else(|| Error::InvalidInput("--omega is required for this method".into()))?;
            select_indices_large_omega(&pair, omega, ks.bounds.clone())?
                .into_iter()
                .filter(|&(_, k)| ks.iter().any(|i| i == k))
                .map(|(j, k)| at(k, approx_irrational_slope(&pair, j, k)))
                .collect()
        }
        Method::Signed => unreachable!("handled above"),
    })
}

fn approx(args: &ApproxArgs, format: Format, out: &mut impl Write) -> Result<u8, Failure> {
    let mut code = 0;
    let mut rows = Rows::new(&["k", "j", "ℓ", "γ", "|γ|", "|γx − y|", "status"]);
    let mut json = Vec::new();
    let dash = || "-".to_string();
    for a in attempts(args)? {
        let k = a.k.map_or_else(dash, |k| k.to_string());
        let status = match &a.result {
            Ok(r) => {
                let open: Vec<&str> = r.bounds.iter().filter(|b| !b.holds).map(|b| b.name).collect();
                if open.is_empty() {
                    "PASS".to_string()
                } else {
                    format!("PASS (not reached: {})", open.join(", "))
                }
            }
            Err(Error::KTooSmall { detail, .. }) => format!("k too small: {detail}"),
            Err(Error::BoundNotYetReached(report)) => format!("not reached: {}", report.summary()),
            Err(e @ Error::InvalidInput(_)) if a.j0.is_some() => format!("skipped: {e}"),
            Err(Error::BoundViolated(m)) => {
                code = 4;
                format!("FAIL: {m}")
            }
            Err(_) => return Err(a.result.expect_err("error arm").into()),
        };
        match &a.result {
            Ok(r) => {
                let t = &r.trace;
                rows.push(vec![
                    k,
                    t.j.map_or_else(dash, |j| j.to_string()),
                    t.ell.as_ref().map_or_else(dash, BigInt::to_string),
                    r.gamma.to_string(),
                    r.norm.to_string(),
                    format!("{:.6e}", r.residual_norm()?.to_f64()),
                    status.clone(),
                ]);
            }
            Err(_) => rows.push(vec![k, dash(), dash(), dash(), dash(), dash(), status.clone()]),
        }
        json.push(json!({
            "k": a.k,
            "j0": a.j0,
            "status": status,
            "result": a.result.as_ref().ok().map(ApproxResult::to_json),
        }));
    }
    emit(&rows, Value::Array(json), format, out)?;
    Ok(code)
}

fn verify(which: &Verify, cap: u64, format: Format, out: &mut impl Write) -> Result<u8, Failure> {
    let cert: Certificate = match which {
        Verify::Lemma1 { xi, k } => verify_lemma1(&xi.cf()?, *k, cap)?,
        Verify::Thm4 { xi, y, k } => verify_theorem4(&xi.cf()?, &y.parse()?, *k, cap)?,
    };
    match format {
        Format::Table => writeln!(out, "{cert}")?,
        Format::Json => write_json(&mut *out, &cert.to_json())?,
        Format::Csv => {
            let mut rows = Rows::new(&["kind", "T", "count", "bound", "minimizer", "min_distance", "passed"]);
            rows.push(vec![
                cert.kind.to_string(),
                cert.t.to_string(),
                cert.count.to_string(),
                cert.bound.to_string(),
                cert.minimizer.to_string(),
                cert.min_distance.to_string(),
                cert.passed.to_string(),
            ]);
            rows.write_csv(&mut *out)?;
        }
    }
    Ok(if cert.passed { 0 } else { 4 })
}

/// ω = 1 for quadratic irrationals, whose partial quotients are bounded.
fn default_omega(given: &Option<Omega>, slope: impl FnOnce() -> Result<RealValue, Error>) -> Result<Option<Omega>, Error> {
    if given.is_some() {
        return Ok(given.clone());
    }
    let s = slope()?;
    Ok((s.is_exact() && !s.is_rational()).then(Omega::one))
}

fn exponents(args: &ExponentArgs, cap: u64, format: Format, out: &mut impl Write) -> Result<u8, Failure> {
    let x = args.x.point()?;
    let y: PlanePoint = args.y.parse()?;
    let window = match args.window_min {
        Some(m) => Window::new(m, args.t)?,
        None => Window::tail(args.t),
    };
    let omega_xi = default_omega(&args.omega_xi, || x.slope())?;
    let omega_y = match target_kind(&y)? {
        TargetKind::Irrational => default_omega(&args.omega_y, || y.slope())?,
        _ => args.omega_y.clone(),
    };
    let source = match args.source {
        SourceArg::Oracle => StaircaseSource::Oracle,
        SourceArg::Constructions => StaircaseSource::Constructions,
    };
    let rs = staircase(&x, &y, &geometric_grid(args.t), source, cap)?;
    if let Some(p) = &args.staircase_csv {
        rs.write_staircase_csv(File::create(p)?)?;
    }
    if let Some(p) = &args.records_csv {
        rs.write_records_csv(File::create(p)?)?;
    }
    let est = estimate_exponents(&rs, &window, omega_xi.as_ref(), omega_y.as_ref())?;
    match format {
        Format::Table => {
            writeln!(out, "{est}")?;
            writeln!(out)?;
            let mut rows = Rows::new(&["T", "|γ|", "D(T)", "−log D / log T"]);
            for g in &rs.grid {
                let r = g.record.map(|i| &rs.records[i]);
                let ratio = r.filter(|_| g.t > 1).map(|r| -r.residual_approx.ln() / (g.t as f64).ln());
                rows.push(vec![
                    g.t.to_string(),
                    r.map_or("-".into(), |r| r.norm.to_string()),
                    r.map_or("-".into(), |r| format!("{:.6e}", r.residual_approx)),
                    ratio.map_or("-".into(), |v| format!("{v:.4}")),
                ]);
            }
            rows.write_table(&mut *out)?;
        }
        Format::Json => write_json(
            &mut *out,
            &json!({
                "estimate": est.to_json(),
                "omega_xi": omega_xi.map(|w| w.to_string()),
                "omega_y": omega_y.map(|w| w.to_string()),
                "staircase": rs.to_json(),
            }),
        )?,
        Format::Csv => rs.write_staircase_csv(&mut *out)?,
    }
    Ok(0)
}

fn enumerate(t: u64, count: bool, cap: u64, format: Format, out: &mut impl Write) -> Result<u8, Failure> {
    if t > cap {
        return Err(Error::CapExceeded { requested: t, cap }.into());
    }
    if count {
        let n = count_norm_bounded(t);
        match format {
            Format::Json => write_json(&mut *out, &json!({ "T": t, "count": n }))?,
            _ => writeln!(out, "{n}")?,
        }
        return Ok(0);
    }
    match format {
        Format::Csv => write_enumeration_csv(t, &mut *out)?,
        Format::Json => {
            let all: Vec<Value> = enumerate_entries(t).map(|e| json!(e)).collect();
            write_json(&mut *out, &Value::Array(all))?;
        }
        Format::Table => {
            let mut rows = Rows::new(&["v1", "u1", "v2", "u2", "norm"]);
            for e in enumerate_entries(t) {
                let norm = e.iter().map(|v| v.abs()).max().expect("four entries");
                rows.push(e.iter().chain([&norm]).map(i64::to_string).collect());
            }
            rows.write_table(&mut *out)?;
        }
    }
    Ok(0)
}
