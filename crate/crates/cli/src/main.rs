use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use depth_regress::{Dataset, LocationEstimator, Notion};
use depth_regress_cli::commands::{self, CliError, CliResult, GridSpec, Method, PrdSettings};
use depth_regress_cli::fixtures;
use depth_regress_cli::format::fmt_g;

/// Regression depth, projection regression depth and Carrizosa depth on CSV data.
#[derive(Parser)]
#[command(name = "depth-regress", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Depth of one candidate fit.
    Depth {
        /// rd, prd or dc.
        #[arg(long)]
        notion: Notion,
        #[command(flatten)]
        data: DataArgs,
        /// Coefficients, intercept first.
        #[arg(long, num_args = 1.., allow_negative_numbers = true, required = true)]
        beta: Vec<f64>,
        /// Residuals at most this large count as zero (rd, dc).
        #[arg(long)]
        tol: Option<f64>,
        #[command(flatten)]
        prd: PrdArgs,
    },
    /// Deepest fits and the uniqueness diagnostic.
    Median {
        /// rd, prd or dc.
        #[arg(long)]
        notion: Notion,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        prd: PrdArgs,
        /// Where the optimizer trace goes if the projection median fails to converge.
        #[arg(long, default_value = "depth_regress_trace.json")]
        trace_out: PathBuf,
    },
    /// Depth over a square grid of (beta1, beta2), as CSV.
    Gridmap {
        /// rd, prd or dc.
        #[arg(long)]
        notion: Notion,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = -3.0, allow_negative_numbers = true)]
        lo: f64,
        #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
        hi: f64,
        #[arg(long, default_value_t = 31)]
        steps: usize,
        /// Output file; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        prd: PrdArgs,
    },
    /// Fitted values and residuals of several fits, as CSV.
    Residuals {
        #[command(flatten)]
        data: DataArgs,
        /// Comma-separated subset of ls, rd and prd.
        #[arg(long, value_delimiter = ',', default_value = "ls,rd,prd")]
        methods: Vec<String>,
        /// Output file; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        prd: PrdArgs,
    },
    /// Print or write a built-in dataset.
    Fixture {
        /// stars, abc, two_lines, normal30 or symmetric30.
        name: String,
        #[arg(long, default_value_t = 10)]
        m: usize,
        #[arg(long, default_value_t = fixtures::SEED)]
        seed: u64,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct DataArgs {
    /// CSV with header x1,…,y.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Use a built-in dataset instead of a file.
    #[arg(long)]
    fixture: Option<String>,
}

impl DataArgs {
    fn load(&self) -> CliResult<Dataset> {
        match (&self.data, &self.fixture) {
            (Some(p), _) => commands::load_csv(p),
            (None, Some(name)) => Ok(fixtures::load(name, 10, fixtures::SEED)?),
            (None, None) => unreachable!("clap enforces the group"),
        }
    }
}

#[derive(Args)]
struct PrdArgs {
    /// Location estimator T: median, mean or quantile:<q>.
    #[arg(long, default_value = "median")]
    location: LocationEstimator,
    /// Direction search: auto, exact or grid.
    #[arg(long, default_value = "auto")]
    search: String,
    #[arg(long, default_value_t = 1024)]
    grid_angles: usize,
    #[arg(long, default_value_t = 100_000)]
    max_evaluations: usize,
}

impl PrdArgs {
    fn settings(&self) -> CliResult<PrdSettings> {
        let mut s = PrdSettings {
            location: self.location,
            ..PrdSettings::default()
        };
        s.options.search = commands::parse_search(&self.search, self.grid_angles)?;
        s.options.max_evaluations = self.max_evaluations;
        Ok(s)
    }
}

fn output(path: &Option<PathBuf>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn print_json(v: &serde_json::Value) -> CliResult<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v).map_err(io::Error::from)?;
    writeln!(out)?;
    Ok(())
}

fn configure_threads() -> CliResult<()> {
    if let Ok(raw) = std::env::var("DEPTH_REGRESS_THREADS") {
        let n: usize = raw.parse().ok().filter(|&n| n >= 1).ok_or_else(|| {
            CliError::Input(format!(
                "DEPTH_REGRESS_THREADS={raw:?} is not an integer >= 1"
            ))
        })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Input(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match cli.cmd {
        Command::Depth {
            notion,
            data,
            beta,
            tol,
            prd,
        } => {
            let v = commands::depth(&data.load()?, notion, &beta, tol, &prd.settings()?)?;
            print_json(&v)
        }
        Command::Median {
            notion,
            data,
            prd,
            trace_out,
        } => match commands::median(&data.load()?, notion, &prd.settings()?) {
            Ok(v) => print_json(&v),
            Err(CliError::Depth(e)) => {
                if let Some(trace) = commands::trace_json(&e) {
                    std::fs::write(
                        &trace_out,
                        serde_json::to_string_pretty(&trace).map_err(io::Error::from)?,
                    )?;
                    eprintln!("optimizer trace written to {}", trace_out.display());
                }
                Err(CliError::Depth(e))
            }
            Err(e) => Err(e),
        },
        Command::Gridmap {
            notion,
            data,
            lo,
            hi,
            steps,
            out,
            prd,
        } => {
            let rows = commands::gridmap(
                &data.load()?,
                notion,
                GridSpec { lo, hi, steps },
                &prd.settings()?,
            )?;
            commands::write_gridmap(&rows, output(&out)?)?;
            Ok(())
        }
        Command::Residuals {
            data,
            methods,
            out,
            prd,
        } => {
            let methods = methods
                .iter()
                .map(|m| m.parse::<Method>())
                .collect::<CliResult<Vec<_>>>()?;
            let table = commands::residuals(&data.load()?, &methods, &prd.settings()?)?;
            let mut w = output(&out)?;
            table.write_csv(&mut w, fmt_g)?;
            w.flush()?;
            Ok(())
        }
        Command::Fixture {
            name,
            m,
            seed,
            dump,
        } => {
            let d = fixtures::load(&name, m, seed)?;
            let mut w = output(&dump)?;
            d.to_csv(&mut w)?;
            w.flush()?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("depth-regress: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
