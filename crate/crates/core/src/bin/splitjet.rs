use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;

use splitjet::cli::{run_command, CliError, Command, OutputFormat, RunConfig};
use splitjet::field::{Field, Valuation};
use splitjet::jacobian::DEFAULT_MAX_DEGREE;
use splitjet::text::parse_vars;

#[derive(Parser)]
#[command(name = "splitjet", version, about = "Exact splitting lemma computations on power-series jets")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Split f into a quadratic normal form plus a residual part
    Split(Common),
    /// Normal form of the quadratic part
    Quadform(Common),
    /// Milnor number (jets are first truncated at a certified determinacy bound)
    Milnor(Common),
    /// Finite-determinacy bound from the Jacobian ideal
    Determinacy(Common),
    /// Tail change between split forms: F0 F1 "phi_1; ...; phi_n"
    Transport(Common),
    /// Solve F(x, y) = 0 for the variables named by --split-vars
    Ift(Common),
    /// Weighted norm sum |c_a| eps^a
    Norm(Common),
    /// Check F(phi) = G: F G "phi_1; ...; phi_n"
    Verify(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args)]
struct Common {
    /// `q`, `fp:7`, `f2k:4` or `f2k:4:modulus=t4+t+1`
    #[arg(long, default_value = "q")]
    field: String,
    /// Comma-separated variable names, in order
    #[arg(long)]
    vars: String,
    /// Jet precision N (terms of degree > N are dropped)
    #[arg(long, default_value_t = 6)]
    precision: u32,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Largest degree searched by milnor/determinacy
    #[arg(long, default_value_t = DEFAULT_MAX_DEGREE)]
    max_degree: u32,
    /// Unknowns for ift, comma-separated
    #[arg(long, default_value = "")]
    split_vars: String,
    /// `trivial`, `archimedean` or `padic:p`
    #[arg(long, default_value = "trivial")]
    valuation: String,
    /// Comma-separated positive rationals, one per variable
    #[arg(long)]
    eps: Option<String>,
    /// Expressions; `@path` reads one from a file
    #[arg(required = true)]
    inputs: Vec<String>,
}

fn config(c: &Common) -> Result<RunConfig, CliError> {
    let field: Field = c.field.parse()?;
    let vars = parse_vars(&c.vars, field)?;
    let split_vars = c.split_vars.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect();
    let valuation: Valuation = c.valuation.parse()?;
    let epsilon = match &c.eps {
        None => None,
        Some(s) => Some(
            s.split(',')
                .map(|e| {
                    Field::Rational
                        .parse_literal(e.trim())
                        .map(|q| q.as_rational().unwrap().clone())
                        .map_err(CliError::from)
                })
                .collect::<Result<Vec<BigRational>, _>>()?,
        ),
    };
    let format = match c.format {
        Format::Text => OutputFormat::Text,
        Format::Json => OutputFormat::Json,
    };
    Ok(RunConfig { field, vars, precision: c.precision, max_degree: c.max_degree, split_vars, valuation, epsilon, format })
}

fn read_inputs(raw: &[String]) -> Result<Vec<String>, CliError> {
    raw.iter()
        .map(|s| match s.strip_prefix('@') {
            Some(path) => std::fs::read_to_string(path)
                .map(|t| t.trim().to_string())
                .map_err(|e| CliError::Input(format!("cannot read {path}: {e}"))),
            None => Ok(s.clone()),
        })
        .collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, common) = match &cli.command {
        Cmd::Split(c) => (Command::Split, c),
        Cmd::Quadform(c) => (Command::Quadform, c),
        Cmd::Milnor(c) => (Command::Milnor, c),
        Cmd::Determinacy(c) => (Command::Determinacy, c),
        Cmd::Transport(c) => (Command::Transport, c),
        Cmd::Ift(c) => (Command::Ift, c),
        Cmd::Norm(c) => (Command::Norm, c),
        Cmd::Verify(c) => (Command::Verify, c),
    };
    let result = config(common).and_then(|cfg| {
        let inputs = read_inputs(&common.inputs)?;
        run_command(cmd, &cfg, &inputs).map(|r| (cfg, r))
    });
    match result {
        Ok((cfg, report)) => {
            print!("{}", report.render(cfg.format));
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
