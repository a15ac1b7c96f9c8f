//! Command-line front end for `seqmodels`: the model-file format, the run
//! report and the subcommands.

pub mod commands;
pub mod config;
pub mod error;
pub mod format;
pub mod report;

use std::ffi::OsString;

use clap::Parser;

pub use commands::{Command, Output};
pub use config::Config;
pub use error::CliError;
pub use report::RunReport;

#[derive(Parser, Debug)]
#[command(name = "seqmodels", version, about = "Validate, evaluate, convert and compare sequence models")]
pub struct Cli {
    #[command(flatten)]
    pub config: Config,
    #[command(subcommand)]
    pub command: Command,
}

/// Everything a process run would emit.
#[derive(Debug, Default)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

/// Parse arguments, run the command inside a pool of the requested size and
/// render the result.
pub fn run<I, S>(args: I) -> Outcome
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome { stdout: text, stderr: String::new(), code }
            } else {
                Outcome {
                    stdout: String::new(),
                    stderr: format!("error[usage]: {}\n{text}", first_line(&text)),
                    code,
                }
            };
        }
    };
    run_cli(&cli)
}

fn first_line(s: &str) -> &str {
    s.lines().next().unwrap_or("")
}

pub fn run_cli(cli: &Cli) -> Outcome {
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.config.threads).build() {
        Ok(p) => p,
        Err(e) => {
            return Outcome {
                stderr: format!("error[threads]: {e}\n"),
                code: 3,
                ..Outcome::default()
            }
        }
    };
    let result = pool.install(|| commands::execute(&cli.command, &cli.config));
    let mut out = Outcome::default();
    match result {
        Ok(Output { report, payload }) => {
            let text = if cli.config.porcelain { report.porcelain() } else { report.human() };
            // a model on stdout pushes the report to stderr
            match payload {
                Some(model) => {
                    out.stdout = model;
                    out.stderr = text;
                }
                None => out.stdout = text,
            }
            if report.exit_code != 0 {
                out.stderr.push_str(&format!("error[check_failed]: {} reported a failed check\n", report.command));
            }
            out.code = report.exit_code;
        }
        Err(e) => {
            out.stderr = format!("error[{}]: {}\n", e.tag(), first_line(&e.to_string()));
            out.code = e.exit_code();
        }
    }
    out
}
