//! Command-line front end: `tscale analyze|simulate|realize|stability`.

pub mod commands;
pub mod document;
pub mod report;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::exact::RationalMatrix;
use commands::{exit_code, Outcome, SimulateFlags, EXIT_INPUT};
use document::{Model, SystemDocument};

pub const DEFAULT_REALIZATION_TIMESCALE: &str = "points 0 1 2 3 4 5 6 7 8 9 10";

#[derive(Debug, Parser)]
#[command(name = "tscale", version, about = "Linear systems on time scales")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Rank tolerance for Kalman, PBH, K_j/L_j and decomposition tests.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Comma-separated horizon schedule, e.g. `50,100,200`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub horizons: Option<Vec<String>>,
    /// Decision margin for the stability-region functional.
    #[arg(long)]
    pub delta_margin: Option<f64>,
    /// Number of K_j / L_j terms beyond the first.
    #[arg(long)]
    pub q: Option<usize>,
    /// Output prefix: writes PREFIX.json and PREFIX.txt (plus PREFIX.csv or PREFIX.toml).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Full report: regressivity, controllability, observability, realization, stability.
    Analyze {
        document: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Simulate the system and write the trajectory as CSV.
    Simulate {
        document: PathBuf,
        /// Constant input, comma-separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        u: Option<Vec<String>>,
        /// Steer to this state with the minimum-energy input.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        steer: Option<Vec<String>>,
        /// Recover x0 from the simulated output.
        #[arg(long)]
        reconstruct: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Companion realization of a transfer-function file.
    Realize {
        transfer_function: PathBuf,
        /// Time scale written into the emitted system document.
        #[arg(long, default_value = DEFAULT_REALIZATION_TIMESCALE)]
        timescale: String,
        #[command(flatten)]
        common: Common,
    },
    /// Stability verdicts only.
    Stability {
        document: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn numbers(flag: &str, xs: &[String]) -> Result<Vec<f64>> {
    xs.iter()
        .map(|s| commands::parse_number(s).map_err(|e| Error::Parse(format!("--{flag}: {e}"))))
        .collect()
}

fn load(path: &Path, common: &Common) -> Result<Model> {
    let doc = SystemDocument::parse(&read(path)?)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let mut model = Model::from_document(&doc)?;
    let o = &mut model.options;
    if let Some(t) = common.tol {
        if !(t > 0.0) {
            return Err(Error::Parse("--tol must be positive".into()));
        }
        o.tol = Some(t);
    }
    if let Some(h) = &common.horizons {
        o.horizons = numbers("horizons", h)?;
    }
    if let Some(d) = common.delta_margin {
        if !(d > 0.0) {
            return Err(Error::Parse("--delta-margin must be positive".into()));
        }
        o.delta = d;
    }
    if let Some(q) = common.q {
        o.q = q;
    }
    model.validate_options()?;
    Ok(model)
}

fn write(path: PathBuf, text: &str) -> Result<()> {
    fs::write(&path, text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn emit(outcome: &Outcome, out: Option<&Path>, csv_to_stdout: bool) -> Result<()> {
    match out {
        Some(prefix) => {
            write(with_ext(prefix, "json"), &outcome.report.to_json())?;
            write(with_ext(prefix, "txt"), &outcome.report.to_text())?;
            if let Some(csv) = &outcome.csv {
                write(with_ext(prefix, "csv"), csv)?;
            }
            if let Some(doc) = &outcome.document {
                write(with_ext(prefix, "toml"), doc)?;
            }
        }
        None if csv_to_stdout => {
            print!("{}", outcome.csv.as_deref().unwrap_or_default());
            eprint!("{}", outcome.report.to_json());
        }
        None => print!("{}", outcome.report.to_json()),
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<i32> {
    let (outcome, out, csv_to_stdout) = match cli.command {
        Command::Analyze { document, common } => {
            let model = load(&document, &common)?;
            (commands::analyze(&model, &file_name(&document), "analyze")?, common.out, false)
        }
        Command::Stability { document, common } => {
            let model = load(&document, &common)?;
            (commands::stability(&model, &file_name(&document))?, common.out, false)
        }
        Command::Simulate {
            document,
            u,
            steer,
            reconstruct,
            common,
        } => {
            let model = load(&document, &common)?;
            let flags = SimulateFlags {
                u: u.as_deref().map(|v| numbers("u", v)).transpose()?,
                steer: steer.as_deref().map(|v| numbers("steer", v)).transpose()?,
                reconstruct,
            };
            (commands::simulate(&model, &file_name(&document), &flags)?, common.out, true)
        }
        Command::Realize {
            transfer_function,
            timescale,
            common,
        } => {
            let g: RationalMatrix = read(&transfer_function)?
                .parse()
                .map_err(|e| Error::Parse(format!("{}: {e}", transfer_function.display())))?;
            timescale
                .parse::<crate::timescale::TimeScaleSpec>()
                .map_err(|e| Error::Parse(format!("--timescale: {e}")))?;
            (
                commands::realize(&g, &file_name(&transfer_function), &timescale)?,
                common.out,
                false,
            )
        }
    };
    emit(&outcome, out.as_deref(), csv_to_stdout)?;
    Ok(outcome.code)
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
