//! `fwt`: command-line front end for exact contextuality analysis.
//!
//! Exit status reflects process health only: 0 on success (whatever the
//! verdict), 1 on usage errors, 2 on unreadable or invalid input.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fwt_core::contextuality::DEFAULT_LIMIT;

#[derive(Parser)]
#[command(name = "fwt", version, about = "Exact contextuality analysis of bipartite compound systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Input {
    /// System file (JSON).
    path: Option<PathBuf>,
    /// Built-in system id; see `fwt catalog`.
    #[arg(long, value_name = "ID")]
    builtin: Option<String>,
}

#[derive(Args)]
struct Limit {
    /// Cap on enumerated realizations.
    #[arg(long, value_name = "N", default_value_t = DEFAULT_LIMIT)]
    limit: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    /// Non-signaling realizations inside the supports.
    Ns,
    /// Every assignment of outcomes over the full alphabets.
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum Emit {
    Rays,
    Triads,
    Search,
}

#[derive(Clone, Copy, ValueEnum)]
enum Rule {
    /// Exactly one ray per triad gets 0.
    Zero,
    /// Exactly one ray per triad gets 1.
    One,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a system; prints a JSON verdict report.
    Analyze {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        limit: Limit,
    },
    /// Check context-independence of marginals; prints a JSON report.
    Nonsignaling {
        #[command(flatten)]
        input: Input,
    },
    /// List or count realizations, one JSON object per line.
    Realizations {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum, default_value = "ns")]
        mode: Mode,
        #[arg(long)]
        count_only: bool,
        #[command(flatten)]
        limit: Limit,
    },
    /// Peres rays, triads, or the Kochen-Specker coloring search.
    Peres {
        #[arg(long, value_enum, default_value = "search")]
        emit: Emit,
        /// Coloring rule for `--emit search`.
        #[arg(long, value_enum, default_value = "zero")]
        rule: Rule,
        /// Use only the 16 triads lying entirely inside the 33 rays.
        #[arg(long)]
        complete_only: bool,
    },
    /// Largest CHSH value of a binary 2×2 system under ±1 coding.
    Chsh {
        #[command(flatten)]
        input: Input,
    },
    /// List built-in ids, or print one as a system file.
    Catalog { id: Option<String> },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let mut out = std::io::stdout().lock();
    let result = match cli.command {
        Command::Analyze { input, limit } => commands::analyze(&mut out, &input.source(), limit.limit),
        Command::Nonsignaling { input } => commands::nonsignaling(&mut out, &input.source()),
        Command::Realizations { input, mode, count_only, limit } => {
            commands::realizations(&mut out, &input.source(), matches!(mode, Mode::All), count_only, limit.limit)
        }
        Command::Peres { emit, rule, complete_only } => {
            let rule = match rule {
                Rule::Zero => fwt_core::ks::ColoringRule::ExactlyOneZero,
                Rule::One => fwt_core::ks::ColoringRule::ExactlyOneOne,
            };
            let emit = match emit {
                Emit::Rays => commands::PeresEmit::Rays,
                Emit::Triads => commands::PeresEmit::Triads,
                Emit::Search => commands::PeresEmit::Search(rule),
            };
            commands::peres(&mut out, emit, complete_only)
        }
        Command::Chsh { input } => commands::chsh(&mut out, &input.source()),
        Command::Catalog { id } => commands::catalog(&mut out, id.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(commands::CliError::Output(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fwt: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

impl Input {
    fn source(&self) -> commands::Source {
        match (&self.path, &self.builtin) {
            (_, Some(id)) => commands::Source::Builtin(id.clone()),
            (Some(p), None) => commands::Source::File(p.clone()),
            (None, None) => unreachable!("clap enforces one input"),
        }
    }
}
