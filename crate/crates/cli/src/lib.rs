//! Command-line frontend: operator documents in, verification reports out.

pub mod commands;
pub mod doc;
pub mod report;

use std::time::Instant;

use clap::Parser;

use commands::{execute, Command};

#[derive(Parser, Debug)]
#[command(name = "nijenhuis", version, about = "Verify Nijenhuis operators and related structures")]
pub struct Cli {
    /// Emit the report as one JSON object.
    #[arg(long, global = true)]
    pub json: bool,
    /// Include wall time in the report (makes output run-dependent).
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

/// What a run printed and its exit code: 0 all checks pass, 1 a check
/// failed, 2 bad input.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome { stdout: text, stderr: String::new(), code }
            } else {
                Outcome { stdout: String::new(), stderr: text, code }
            };
        }
    };
    let start = Instant::now();
    match execute(&cli.command) {
        Ok(mut report) => {
            if cli.timing {
                report.wall_time_ms = Some(start.elapsed().as_secs_f64() * 1e3);
            }
            let code = if report.pass { 0 } else { 1 };
            let stdout = if cli.json {
                report.to_json() + "\n"
            } else if matches!(cli.command, Command::Canonical { .. }) && report.pass {
                report.output.clone().unwrap_or_default()
            } else {
                report.to_text()
            };
            Outcome { stdout, stderr: String::new(), code }
        }
        Err(e) => Outcome {
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
            code: 2,
        },
    }
}
