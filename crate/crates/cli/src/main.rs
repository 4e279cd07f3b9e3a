use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fpopt_core::{compare_schedules, construct_optimal, envelope_curve, spectral_gap, validate_pair, Schedule};

mod error;
mod figures;
mod output;
mod problem;

use error::{exit, CliError};
use output::{CertificateJson, ReportJson, ScheduleReportJson};
use problem::{parse_variant, ProblemFile};

const DEFAULT_SAMPLES: usize = 4096;
const SAMPLES_ENV: &str = "FPOPT_SAMPLES";

/// Optimal non-reversible Fokker-Planck coefficients for Gaussian equilibria.
#[derive(Debug, Parser)]
#[command(name = "fpopt", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Construct the optimal pair for a covariance and budget, with its certificate
    Optimize {
        input: PathBuf,
        /// Multiplicative constant c > 1 (overrides the file)
        #[arg(long)]
        c: Option<f64>,
        /// standard or transpose (overrides the file)
        #[arg(long)]
        variant: Option<String>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Check admissibility, stability and hypoellipticity of a pair or schedule
    Validate {
        input: PathBuf,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Propagator norm curve with its sharp exponential envelope, as CSV
    Curve {
        input: PathBuf,
        /// Envelope rate (default: spectral gap of the final pair)
        #[arg(long)]
        rate: Option<f64>,
        #[arg(long)]
        tmax: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Rank schedules sharing one covariance by their sharp constant, as TSV
    Compare {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        rate: Option<f64>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Regenerate the data of one of the case-study figures
    Reproduce {
        /// fig1, fig2, fig3 or fig4
        figure: String,
        #[arg(long, default_value = ".")]
        outdir: PathBuf,
        #[arg(long)]
        samples: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::PARSE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}

fn run(command: Command) -> Result<u8, CliError> {
    match command {
        Command::Optimize { input, c, variant, out } => optimize(&input, c, variant.as_deref(), out.as_deref()),
        Command::Validate { input, out } => validate(&input, out.as_deref()),
        Command::Curve { input, rate, tmax, samples, out } => curve(&input, rate, tmax, samples, out.as_deref()),
        Command::Compare { inputs, rate, out } => compare(&inputs, rate, out.as_deref()),
        Command::Reproduce { figure, outdir, samples } => {
            let figure: figures::Figure = figure.parse()?;
            let manifest = figures::reproduce(figure, &outdir, default_samples(samples, None)?)?;
            eprintln!("wrote {} curves to {}", manifest.curves.len(), outdir.display());
            Ok(0)
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::new(exit::FAILURE, format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map(|s| s + "\n").map_err(|e| CliError::new(exit::FAILURE, e.to_string()))
}

/// Flag, then problem file, then `FPOPT_SAMPLES`, then 4096.
fn default_samples(flag: Option<usize>, file: Option<usize>) -> Result<usize, CliError> {
    let samples = match flag.or(file) {
        Some(n) => n,
        None => match std::env::var(SAMPLES_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| CliError::parse(format!("{SAMPLES_ENV}: expected a positive integer, got '{v}'")))?,
            Err(_) => DEFAULT_SAMPLES,
        },
    };
    if samples < 2 {
        return Err(CliError::parse(format!("need at least 2 samples, got {samples}")));
    }
    Ok(samples)
}

fn optimize(input: &Path, c: Option<f64>, variant: Option<&str>, out: Option<&Path>) -> Result<u8, CliError> {
    let problem = ProblemFile::read(input)?;
    let cov = problem.covariance()?;
    let c = c.or(problem.c).ok_or_else(|| CliError::parse("no budget: give 'c' in the file or --c"))?;
    let variant = match variant {
        Some(v) => parse_variant(Some(v))?,
        None => problem.variant()?,
    };
    let cert = construct_optimal(&cov, c, variant)?;
    emit(out, &to_json(&CertificateJson::new(&cov, c, &cert))?)?;
    Ok(0)
}

fn validate(input: &Path, out: Option<&Path>) -> Result<u8, CliError> {
    let problem = ProblemFile::read(input)?;
    let cov = problem.covariance()?;
    let (text, pass) = if let Some(pair) = problem.pair(&cov)? {
        let report = validate_pair(&cov, &pair);
        (to_json(&ReportJson::from(&report))?, report.all_pass())
    } else if problem.schedule.is_some() {
        let schedule = problem.schedule(&cov)?;
        let pieces: Vec<ReportJson> =
            schedule.pairs().iter().map(|p| ReportJson::from(&validate_pair(&cov, p))).collect();
        let all_pass = pieces.iter().all(|r| r.all_pass);
        (to_json(&ScheduleReportJson { all_pass, pieces })?, all_pass)
    } else {
        return Err(CliError::parse("nothing to validate: the problem has no 'pair' or 'schedule'"));
    };
    emit(out, &text)?;
    Ok(if pass { 0 } else { exit::VALIDATION })
}

fn resolve_rate(flag: Option<f64>, file: Option<f64>, schedule: &Schedule) -> Result<f64, CliError> {
    let rate = match flag.or(file) {
        Some(r) => r,
        None => spectral_gap(schedule.asymptotic_pair())?,
    };
    if !(rate.is_finite() && rate > 0.0) {
        return Err(CliError::parse(format!("rate must be > 0, got {rate}")));
    }
    Ok(rate)
}

fn curve(
    input: &Path,
    rate: Option<f64>,
    tmax: Option<f64>,
    samples: Option<usize>,
    out: Option<&Path>,
) -> Result<u8, CliError> {
    let problem = ProblemFile::read(input)?;
    let cov = problem.covariance()?;
    let schedule = problem.schedule(&cov)?;
    let analysis = problem.analysis.clone().unwrap_or_default();
    let rate = resolve_rate(rate, analysis.rate, &schedule)?;
    let tmax = tmax.or(analysis.tmax).unwrap_or_else(|| schedule.default_horizon(rate));
    if !(tmax.is_finite() && tmax > 0.0) {
        return Err(CliError::parse(format!("tmax must be > 0, got {tmax}")));
    }
    let samples = default_samples(samples, analysis.samples)?;
    let curve = envelope_curve(&schedule, rate, tmax, samples)?;
    emit(out, &curve.to_csv(curve.sharp_constant))?;
    Ok(0)
}

fn compare(inputs: &[PathBuf], rate: Option<f64>, out: Option<&Path>) -> Result<u8, CliError> {
    let mut schedules = Vec::with_capacity(inputs.len());
    let mut file_rate = None;
    for path in inputs {
        let problem = ProblemFile::read(path)?;
        let cov = problem.covariance()?;
        let schedule = problem.schedule(&cov)?;
        let id = problem.id.clone().unwrap_or_else(|| {
            path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
        });
        if file_rate.is_none() {
            file_rate = problem.analysis.as_ref().and_then(|a| a.rate);
        }
        schedules.push((id, schedule));
    }
    let rate = resolve_rate(rate, file_rate, &schedules[0].1)?;
    let rows = compare_schedules(&schedules, rate)?;
    let mut tsv = String::from("id\tsharp_constant\tmax_frobenius_c\n");
    for row in rows {
        tsv.push_str(&format!("{}\t{:.16e}\t{:.16e}\n", row.id, row.sharp_constant, row.max_frobenius()));
    }
    emit(out, &tsv)?;
    Ok(0)
}
