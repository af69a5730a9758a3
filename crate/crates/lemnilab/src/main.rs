use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lemnilab::output::{atoms_csv, lengths_csv, samples_csv, write_all};
use lemnilab::{analyze, laurent, verify, CliError, CliResult, GridSpec, Overrides, ProblemSpec, THREADS_ENV};

#[derive(Parser)]
#[command(name = "lemnilab", version, about = "Level curves of ln|f|: lengths, moments and closed forms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-level lengths plus the selected analyses.
    Analyze(Common),
    /// Run the invariant suite; exit status 0 only if every check passes.
    Verify(Common),
    /// Dump the Laurent model of a polynomial.
    Laurent(Common),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// Problem specification (JSON file, or `-` for stdin).
    #[arg(long)]
    input: String,
    /// Output directory; without it the primary output goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Uniform level grid `a:b:n`.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    /// Comma-separated levels.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    t: Option<Vec<f64>>,
    /// Hankel order p (derivatives up to 2p).
    #[arg(long)]
    order: Option<usize>,
    /// Laurent truncation N.
    #[arg(long = "laurent-n")]
    laurent_n: Option<usize>,
    /// Relative ODE tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Worker threads (falls back to LEMNILAB_THREADS).
    #[arg(long, env = THREADS_ENV)]
    threads: Option<usize>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

impl Common {
    fn overrides(&self) -> CliResult<Overrides> {
        Ok(Overrides {
            grid: self.grid.as_deref().map(GridSpec::parse).transpose()?,
            t: self.t.clone(),
            order: self.order,
            laurent_n: self.laurent_n,
            tol: self.tol,
        })
    }

    fn read_spec(&self) -> CliResult<ProblemSpec> {
        let text = if self.input == "-" {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s).map_err(|e| CliError::spec(format!("cannot read stdin: {e}")))?;
            s
        } else {
            std::fs::read_to_string(&self.input)
                .map_err(|e| CliError::spec(format!("cannot read {}: {e}", self.input)))?
        };
        ProblemSpec::from_json(&text)
    }
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).unwrap_or_default();
    s.push('\n');
    s
}

fn emit(out: Option<&Path>, files: Vec<(&str, String)>, stdout: String) -> CliResult<()> {
    match out {
        Some(dir) => write_all(dir, &files),
        None => {
            print!("{stdout}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> CliResult<bool> {
    let (Command::Analyze(c) | Command::Verify(c) | Command::Laurent(c)) = &cli.command;
    if let Some(n) = c.threads {
        if n == 0 {
            return Err(CliError::spec("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::spec(format!("cannot configure threads: {e}")))?;
    }
    let problem = c.read_spec()?.resolve(&c.overrides()?)?;
    for w in &problem.warnings {
        eprintln!("warning: {w}");
    }
    let out = c.out.as_deref();
    match &cli.command {
        Command::Analyze(_) => {
            let result = analyze(&problem)?;
            let csv = lengths_csv(&result.rows);
            let json = pretty(&result.summary);
            let mut files = Vec::new();
            if c.format == Format::Csv {
                files.push(("lengths.csv", csv.clone()));
            }
            files.push(("summary.json", json.clone()));
            if let Some(sets) = &result.samples {
                files.push(("samples.csv", samples_csv(sets)));
            }
            emit(out, files, if c.format == Format::Csv { csv } else { json })?;
            Ok(true)
        }
        Command::Verify(_) => {
            let result = verify(&problem)?;
            let json = pretty(&result.summary);
            let body = match c.format {
                Format::Json => json.clone(),
                Format::Csv => {
                    let mut s = String::from("name,measured,threshold,relation,verdict\n");
                    for ch in &result.checks {
                        s.push_str(&format!(
                            "{},{},{},{},{}\n",
                            ch.name,
                            lemnilab::output::num(ch.measured),
                            lemnilab::output::num(ch.threshold),
                            ch.relation,
                            ch.verdict
                        ));
                    }
                    s
                }
            };
            emit(out, vec![("verify.json", json)], body)?;
            Ok(result.all_passed())
        }
        Command::Laurent(_) => {
            let (value, model) = laurent(&problem)?;
            let json = pretty(&value);
            let atoms = atoms_csv(&model.atoms);
            let body = if c.format == Format::Csv { atoms.clone() } else { json.clone() };
            emit(out, vec![("laurent.json", json), ("atoms.csv", atoms)], body)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
