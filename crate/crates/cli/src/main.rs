//! Command-line front end: constructions, sweeps, analysis and the
//! acceptance checks, with CSV/JSON artifacts that embed their configuration.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::*;
use config::Config;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub msg: String,
}

impl CliError {
    pub fn validation(msg: impl Into<String>) -> Self {
        CliError { code: 2, msg: msg.into() }
    }
}

impl From<prufer_embed::Error> for CliError {
    fn from(e: prufer_embed::Error) -> Self {
        use prufer_embed::Error::*;
        let code = match &e {
            Domain(_) | InsufficientSamples { .. } | Io(_) | Csv(_) | Json(_) => 2,
            PhaseSetterSingular { .. }
            | PhaseLockLost { .. }
            | DegeneratePeriod { .. }
            | ConstructionImpossible(_)
            | SegmentTooShort { .. }
            | ConstructionFailed(_) => 3,
            StepTooLarge { .. } | NumericFailure { .. } => 4,
        };
        CliError { code, msg: e.to_string() }
    }
}

#[derive(Parser)]
#[command(name = "prufer-embed", version, about = "Embedded eigenvalues for decaying discrete Schrödinger operators")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// key=value file, or an artifact whose embedded config is replayed
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, short, default_value = ".")]
    out: PathBuf,
    /// Override any key (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Table of A_q and B_q with brute-force cross-checks
    Constants {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        q_min: Option<String>,
        #[arg(long)]
        q_max: Option<String>,
    },
    /// Embed one eigenvalue with the construction matching k(E)
    Embed {
        #[command(flatten)]
        common: Common,
        #[arg(long, short, allow_hyphen_values = true)]
        e: Option<String>,
        #[arg(long, short)]
        a: Option<String>,
        #[arg(long)]
        theta0: Option<String>,
        #[arg(long)]
        n_max: Option<String>,
    },
    /// Embed several eigenvalues by gluing resonant segments
    MultiEmbed {
        #[command(flatten)]
        common: Common,
        /// File with one `E theta0` pair per line
        #[arg(long)]
        targets_file: Option<String>,
        /// Inline targets `E@theta0;E@theta0`
        #[arg(long, allow_hyphen_values = true)]
        targets: Option<String>,
        /// Envelope growth: none, log:<offset> or const:<value>
        #[arg(long)]
        h: Option<String>,
        #[arg(long)]
        n_max: Option<String>,
    },
    /// Sweep a or E and record fitted slopes and verdicts
    Sweep {
        #[command(flatten)]
        common: Common,
        /// a or e
        #[arg(long)]
        axis: Option<String>,
        /// lo:hi:step or a comma list
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        #[arg(long)]
        seed: Option<String>,
    },
    /// Refit a stored trajectory
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Trajectory CSV
        input: Option<String>,
        #[arg(long)]
        fit_min: Option<String>,
        #[arg(long)]
        fit_max: Option<String>,
    },
    /// Run the acceptance criteria
    Verify {
        #[command(flatten)]
        common: Common,
        /// `all` or a comma list of criterion numbers
        #[arg(long)]
        criteria: Option<String>,
    },
}

fn keys(specific: &[(&'static str, &'static str)], with_policy: bool) -> Vec<(&'static str, &'static str)> {
    let mut v = specific.to_vec();
    if with_policy {
        v.extend_from_slice(&POLICY_DEFAULTS);
    }
    v
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let resolve = |name: &str, defaults: Vec<(&str, &str)>, common: &Common, flags: Vec<(&str, Option<String>)>| {
        Config::resolve(name, &defaults, common.config.as_deref(), &common.set, flags)
    };
    match cli.cmd {
        Cmd::Constants { common, q_min, q_max } => {
            let c = resolve("constants", keys(&CONSTANTS_KEYS, false), &common, vec![("q_min", q_min), ("q_max", q_max)])?;
            constants(&c, &common.out)
        }
        Cmd::Embed { common, e, a, theta0, n_max } => {
            let c = resolve(
                "embed",
                keys(&EMBED_KEYS, true),
                &common,
                vec![("e", e), ("a", a), ("theta0", theta0), ("n_max", n_max)],
            )?;
            embed_cmd(&c, &common.out)
        }
        Cmd::MultiEmbed { common, targets_file, targets, h, n_max } => {
            let mut c = resolve(
                "multi-embed",
                keys(&MULTI_KEYS, true),
                &common,
                vec![("targets_file", targets_file), ("targets", targets), ("h", h), ("n_max", n_max)],
            )?;
            multi_embed(&mut c, &common.out)
        }
        Cmd::Sweep { common, axis, grid, seed } => {
            let c = resolve(
                "sweep",
                keys(&SWEEP_KEYS, true),
                &common,
                vec![("axis", axis), ("grid", grid), ("seed", seed)],
            )?;
            sweep(&c, &common.out)
        }
        Cmd::Analyze { common, input, fit_min, fit_max } => {
            let c = resolve(
                "analyze",
                keys(&ANALYZE_KEYS, true),
                &common,
                vec![("input", input), ("fit_min", fit_min), ("fit_max", fit_max)],
            )?;
            analyze(&c, &common.out)
        }
        Cmd::Verify { common, criteria } => {
            let c = resolve("verify", keys(&VERIFY_KEYS, false), &common, vec![("criteria", criteria)])?;
            verify_cmd(&c, &common.out)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {}", e.msg);
            ExitCode::from(e.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use prufer_embed::Error;

    #[test]
    fn exit_codes_by_error_kind() {
        let code = |e: Error| CliError::from(e).code;
        assert_eq!(code(Error::Domain("x".into())), 2);
        assert_eq!(code(Error::ConstructionFailed("x".into())), 3);
        assert_eq!(code(Error::PhaseLockLost { m: 3, theta: 0.1 }), 3);
        assert_eq!(code(Error::NumericFailure { n: 9 }), 4);
        assert_eq!(code(Error::StepTooLarge { n: 9, ratio: 0.7 }), 4);
    }
}
