use std::fs;
use std::io::{self, Write};
use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Number, Value};
use ternrep::class::class_data;
use ternrep::pipeline::{equidist, even_nonsquare_discriminants, scan, PathCounts};
use ternrep::region::{default_radius, parse_rational};
use ternrep::{certify_patch, EnumWindow, Error, Outcome, Rational, Region, Solver};

#[derive(Parser)]
#[command(name = "ternrep", version, about = "Bounded representations n = x^2 + y^2 - z^2")]
struct Cli {
    /// Patch radius p/q; overrides the config file.
    #[arg(long, global = true)]
    radius: Option<String>,

    /// TOML file with `patch_radius = "p/q"`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Represent one n and print the result as JSON.
    Represent {
        #[arg(long, allow_hyphen_values = true)]
        n: i64,
    },
    /// Solve every n in a range and compare against the direct search.
    Scan {
        #[arg(long, allow_hyphen_values = true)]
        from: i64,
        #[arg(long, allow_hyphen_values = true)]
        to: i64,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Point counts in K and the patch against the volume proxy.
    Equidist {
        #[arg(long, allow_hyphen_values = true)]
        d_min: i64,
        #[arg(long, allow_hyphen_values = true)]
        d_max: i64,
        #[arg(long, value_enum, default_value_t = Step::EvenNonsquare)]
        step: Step,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Class number, fundamental automorph and regulator of d.
    Class {
        #[arg(long, allow_hyphen_values = true)]
        d: i64,
    },
    /// List primitive forms of discriminant d in a region.
    Enumerate {
        #[arg(long, allow_hyphen_values = true)]
        d: i64,
        #[arg(long, value_enum)]
        region: RegionArg,
        #[arg(long)]
        count_only: bool,
    },
    /// Certification table for the ball of the given radius.
    Certify {
        #[arg(long)]
        radius: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Step {
    EvenNonsquare,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegionArg {
    #[value(name = "box")]
    Box,
    #[value(name = "K")]
    K,
    #[value(name = "patch")]
    Patch,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct Config {
    patch_radius: Option<String>,
}

#[derive(Debug)]
enum CliError {
    Invalid(String),
    Internal(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InternalConsistency(_) => CliError::Internal(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Invalid(format!("i/o: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Invalid(format!("csv: {e}"))
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Internal(msg)) => {
            eprintln!("internal consistency failure: {msg}");
            ExitCode::from(3)
        }
    }
}

fn configured_radius(cli_radius: Option<&str>, config: Option<&FsPath>) -> CliResult<Rational> {
    if let Some(r) = cli_radius {
        return Ok(parse_rational(r)?);
    }
    let Some(path) = config else {
        return Ok(default_radius());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Invalid(format!("config {}: {e}", path.display())))?;
    let cfg: Config = toml::from_str(&text)
        .map_err(|e| CliError::Invalid(format!("config {}: {e}", path.display())))?;
    match cfg.patch_radius {
        Some(r) => Ok(parse_rational(&r)?),
        None => Ok(default_radius()),
    }
}

fn workers(jobs: Option<usize>) -> usize {
    jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn run(cli: Cli) -> CliResult {
    let radius = |local: Option<&str>| {
        configured_radius(local.or(cli.radius.as_deref()), cli.config.as_deref())
    };
    let stdout = io::stdout();
    match &cli.command {
        Command::Represent { n } => {
            let solver = Solver::new(radius(None)?)?;
            let r = solver.represent(*n)?;
            let mut v = json!({ "n": r.n, "patch_radius": solver.radius().to_string() });
            match r.outcome {
                Outcome::Found { triple, path } => {
                    v["outcome"] = "Found".into();
                    v["path"] = path.name().into();
                    v["x"] = triple.x().into();
                    v["y"] = triple.y().into();
                    v["z"] = triple.z().into();
                }
                Outcome::NotFound => v["outcome"] = "NotFound".into(),
            }
            writeln!(stdout.lock(), "{v}")?;
        }
        Command::Scan { from, to, jobs, out } => {
            let solver = Solver::new(radius(None)?)?;
            let rep = scan(&solver, *from, *to, workers(*jobs))?;
            let mut w = csv::WriterBuilder::new().from_path(out)?;
            w.write_record(["n", "outcome", "path", "x", "y", "z"])?;
            for row in &rep.rows {
                let r = &row.result;
                match r.outcome {
                    Outcome::Found { triple, path } => w.write_record([
                        r.n.to_string(),
                        "Found".into(),
                        path.name().into(),
                        triple.x().to_string(),
                        triple.y().to_string(),
                        triple.z().to_string(),
                    ])?,
                    Outcome::NotFound => w.write_record([
                        r.n.to_string(),
                        "NotFound".into(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                    ])?,
                }
            }
            w.flush()?;
            let summary = ScanSummary {
                from: rep.from,
                to: rep.to,
                patch_radius: solver.radius().to_string(),
                exceptional: &rep.exceptional,
                max_exceptional: rep.max_exceptional(),
                omega_hits: rep.omega_hits.len(),
                path_counts: &rep.path_counts,
                disagreements: &rep.disagreements,
                omega_bound_failures: &rep.omega_bound_failures,
            };
            write_json(&sidecar(out), &serde_json::to_value(&summary).expect("plain data"))?;
            if !rep.is_consistent() {
                return Err(CliError::Internal(format!(
                    "solver and oracle disagree at {:?}",
                    rep.disagreements
                )));
            }
        }
        Command::Equidist { d_min, d_max, step, jobs, out } => {
            let solver = Solver::new(radius(None)?)?;
            if d_min > d_max {
                return Err(CliError::Invalid(format!("empty range [{d_min}, {d_max}]")));
            }
            let ds = match step {
                Step::EvenNonsquare => even_nonsquare_discriminants(*d_min, *d_max),
            };
            let rep = equidist(&solver, &ds, workers(*jobs))?;
            let mut w = csv::WriterBuilder::new().from_path(out)?;
            w.write_record(["d", "lambda_K", "lambda_patch", "vol_proxy", "ratio", "normalized_K"])?;
            for r in &rep.rows {
                w.write_record([
                    r.d.to_string(),
                    r.lambda_k.to_string(),
                    r.lambda_patch.to_string(),
                    r.vol_proxy.to_string(),
                    r.ratio_patch_over_k.to_string(),
                    r.normalized_k.to_string(),
                ])?;
            }
            w.flush()?;
            let mut summary = serde_json::to_value(&rep.summary).expect("plain data");
            summary["d_min"] = (*d_min).into();
            summary["d_max"] = (*d_max).into();
            write_json(&sidecar(out), &summary)?;
        }
        Command::Class { d } => {
            let c = class_data(*d)?;
            let big = |s: String| -> Value {
                serde_json::from_str::<Number>(&s).map_or(Value::String(s), Value::Number)
            };
            let v = json!({
                "d": c.d,
                "h": c.h,
                "t": big(c.t.to_string()),
                "u": big(c.u.to_string()),
                "regulator": c.regulator,
                "vol_proxy": c.vol_proxy,
            });
            writeln!(stdout.lock(), "{v}")?;
        }
        Command::Enumerate { d, region, count_only } => {
            let region = match region {
                RegionArg::Box => Region::FullBox,
                RegionArg::K => Region::K,
                RegionArg::Patch => Region::Patch(Solver::new(radius(None)?)?.patch().clone()),
            };
            let window = EnumWindow::new(*d, region)?;
            let mut lock = stdout.lock();
            if *count_only {
                writeln!(lock, "{}", window.forms().count())?;
            } else {
                let mut w = csv::Writer::from_writer(lock);
                w.write_record(["a", "b", "c"])?;
                for f in window.forms() {
                    w.write_record([f.a.to_string(), f.b.to_string(), f.c.to_string()])?;
                }
                w.flush()?;
            }
        }
        Command::Certify { radius: local } => {
            let r = radius(local.as_deref())?;
            let report = certify_patch(r)?;
            let mut w = csv::Writer::from_writer(stdout.lock());
            w.write_record(["map", "functional", "center_value", "norm", "slack"])?;
            for row in &report.rows {
                w.write_record([
                    row.map.name().to_string(),
                    row.functional.name().to_string(),
                    row.center_value.to_string(),
                    row.norm.to_string(),
                    row.slack.to_string(),
                ])?;
            }
            w.flush()?;
            eprintln!(
                "radius {r}: {}",
                if report.passed() { "certified" } else { "not certified" }
            );
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct ScanSummary<'a> {
    from: i64,
    to: i64,
    patch_radius: String,
    exceptional: &'a [i64],
    max_exceptional: Option<i64>,
    omega_hits: usize,
    path_counts: &'a PathCounts,
    disagreements: &'a [i64],
    omega_bound_failures: &'a [i64],
}

fn sidecar(out: &FsPath) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".summary.json");
    PathBuf::from(s)
}

fn write_json(path: &FsPath, v: &Value) -> CliResult {
    let mut text = serde_json::to_string_pretty(v).expect("serializable");
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
