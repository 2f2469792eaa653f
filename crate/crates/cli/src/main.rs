mod commands;
mod files;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use locc_core::Error;

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Numerical(String),
}

impl CliError {
    /// Sorts a library error into input (exit 2) or numerical (exit 3).
    pub fn input(e: Error) -> Self {
        match e {
            Error::Singular
            | Error::Annihilated(_)
            | Error::ExpansionResidual(_)
            | Error::ClosureOverflow(_) => CliError::Numerical(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }

    pub fn context(self, what: &str) -> Self {
        match self {
            CliError::Input(m) => CliError::Input(format!("{what}: {m}")),
            CliError::Numerical(m) => CliError::Numerical(format!("{what}: {m}")),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::input(e)
    }
}

#[derive(Parser, Debug)]
#[command(name = "locc", version, about = "LOCC transformations in SLOCC classes with finite stabilizer")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Numerical tolerance for commutation and feasibility tests.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Restarts for the witness search.
    #[arg(long, global = true, default_value_t = 64)]
    pub budget: usize,
    #[arg(long, global = true, conflicts_with = "text")]
    pub json: bool,
    #[arg(long, global = true)]
    pub text: bool,
    /// Worker threads for parallel sections (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Reachability, convertibility and isolation of a state.
    Analyze { state: PathBuf },
    Reachable { state: PathBuf },
    Convertible {
        state: PathBuf,
        #[arg(long)]
        party: usize,
    },
    /// Can some separable map take the source to the target?
    SepCheck { source: PathBuf, target: PathBuf },
    MesCheck { state: PathBuf },
    LockReport {
        state: PathBuf,
        /// Witness file for the step to apply.
        #[arg(long)]
        step: Option<PathBuf>,
    },
    #[command(subcommand)]
    Synth(Synth),
    #[command(subcommand)]
    Protocol(ProtocolCmd),
    #[command(subcommand)]
    Build(Build),
    /// Monte-Carlo accessible or source volume over a slice.
    Volume {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        anchor: PathBuf,
        /// `party-ball:<j>` or `segment:<j>:<sym>:<hx>,<hy>,<hz>`.
        #[arg(long)]
        slice: String,
        #[arg(long, default_value_t = locc_core::volumes::DEFAULT_SAMPLES)]
        samples: usize,
    },
    #[command(subcommand)]
    Demo(Demo),
}

#[derive(Subcommand, Debug)]
pub enum Synth {
    /// One-round protocol from a witness.
    Locc1 {
        state: PathBuf,
        witness: PathBuf,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Two-round L-class protocol with a probabilistic first step.
    TwoStepL {
        #[arg(long, allow_hyphen_values = true)]
        g1: String,
        #[arg(long, allow_hyphen_values = true)]
        g2: String,
        #[arg(long, allow_hyphen_values = true)]
        h2: String,
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Also write the source state file.
        #[arg(long)]
        state_out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
pub enum ProtocolCmd {
    Run { protocol: PathBuf, state: PathBuf },
}

#[derive(Subcommand, Debug)]
pub enum Build {
    /// The 2^m-qubit member of the recursive Pauli-stabilizer family.
    PsiM {
        #[arg(long)]
        m: usize,
        /// Eight reals: re,im of the four coefficients.
        #[arg(long, allow_hyphen_values = true)]
        alpha: String,
        #[arg(long, value_enum, default_value_t = PathArg::Recursive)]
        path: PathArg,
        #[arg(long, value_enum, default_value_t = GenericityArg::Chain)]
        genericity: GenericityArg,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
pub enum Demo {
    /// Fraction of random states that are LOCC-reachable.
    Corollary2 {
        #[arg(long)]
        class: String,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum KindArg {
    A,
    S,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum PathArg {
    Recursive,
    Symmetrizer,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum GenericityArg {
    Seed,
    Chain,
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if cli.global.threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.global.threads)
            .build_global();
    }
    match commands::dispatch(&cli, &argv[1..]) {
        Ok(report) => {
            let text = if cli.global.text {
                report.to_text()
            } else {
                report.to_json() + "\n"
            };
            // a closed pipe downstream is not a failure of the analysis
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            ExitCode::SUCCESS
        }
        Err(CliError::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(CliError::Numerical(m)) => {
            eprintln!("numerical failure: {m}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}
