//! Command-line front end for `bcclace`: report files, run manifests and
//! parallel drivers for the search, the checks and the simulator.

pub mod args;
pub mod commands;
pub mod error;
pub mod report;
pub mod manifest;
pub mod parallel;
pub mod spec_file;

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::json;

use args::{Cli, Command};
use commands::{Outcome, OutputFile};
use error::{CliError, EXIT_USAGE};
use manifest::{Digest, Manifest};

/// Runs the command in `cli` and returns its outcome without touching the filesystem.
pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let policy = cli.policy.into();
    match &cli.command {
        Command::RwTable(a) => commands::rw_table(a, policy),
        Command::Verify(a) => commands::verify_cmd(a, policy),
        Command::Search(a) => commands::search_cmd(a, policy),
        Command::Validate(a) => commands::validate_cmd(a),
        Command::Simulate(a) => commands::simulate_cmd(a),
        Command::Replay(_) => Err(CliError::usage("replay cannot be nested")),
    }
}

fn write_file(path: &Path, bytes: &[u8], append: bool) -> Result<(), CliError> {
    let mut f = std::fs::OpenOptions::new()
        .create(true)
        .write(true)
        .append(append)
        .truncate(!append)
        .open(path)
        .map_err(|e| CliError::io(path, e))?;
    f.write_all(bytes).map_err(|e| CliError::io(path, e))
}

fn digests(files: &[OutputFile]) -> Vec<Digest> {
    files.iter().map(|f| Digest::of(&f.name, &f.bytes)).collect()
}

/// Writes the outputs and a manifest into `dir`.
pub fn write_outputs(dir: &Path, cli: &Cli, argv: Vec<String>, outcome: &Outcome) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    for f in &outcome.files {
        write_file(&dir.join(&f.name), &f.bytes, false)?;
    }
    for f in &outcome.appends {
        write_file(&dir.join(&f.name), &f.bytes, true)?;
    }
    let m = Manifest {
        command: cli.command.name().to_owned(),
        argv,
        parameters: serde_json::to_value(&cli.command).expect("arguments serialize"),
        policy: bcclace::Policy::from(cli.policy).as_str().to_owned(),
        version: env!("CARGO_PKG_VERSION").to_owned(),
        timestamp: manifest::now(),
        outputs: digests(&outcome.files),
    };
    let mut bytes = serde_json::to_vec_pretty(&m).expect("manifest serializes");
    bytes.push(b'\n');
    write_file(&dir.join("manifest.json"), &bytes, false)
}

fn replay(path: &Path, out: Option<&PathBuf>) -> Result<Outcome, CliError> {
    let m = manifest::read(path)?;
    let argv = std::iter::once("bcclace".to_owned()).chain(m.argv.iter().cloned());
    let cli = Cli::try_parse_from(argv).map_err(|e| CliError::usage(format!("manifest arguments: {e}")))?;
    if matches!(cli.command, Command::Replay(_)) {
        return Err(CliError::usage("manifest records a replay"));
    }
    let outcome = execute(&cli)?;
    let now = digests(&outcome.files);
    let mut rows = Vec::new();
    let mut summary = format!("replaying: bcclace {}\n", m.argv.join(" "));
    let mut all = now.len() == m.outputs.len();
    for rec in &m.outputs {
        let fresh = now.iter().find(|d| d.file == rec.file);
        let same = fresh.is_some_and(|d| d.sha256 == rec.sha256);
        all &= same;
        summary.push_str(&format!("  {:<16} {}\n", rec.file, if same { "identical" } else { "DIFFERS" }));
        rows.push(json!({
            "file": rec.file,
            "recorded": rec.sha256,
            "replayed": fresh.map(|d| d.sha256.clone()),
            "identical": same,
        }));
    }
    if let Some(dir) = out {
        write_outputs(dir, &cli, m.argv.clone(), &outcome)?;
    }
    let report = json!({ "command": "replay", "manifest": path, "outputs": rows, "identical": all });
    Ok(Outcome { exit_code: i32::from(!all), report, files: Vec::new(), appends: Vec::new(), summary })
}

/// Full program: parse `args` (including the program name), run, write, report.
/// Returns the process exit code.
pub fn main_with(args: Vec<OsString>) -> i32 {
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
        }
    };
    match run(&cli, &args[1..]) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run(cli: &Cli, raw_args: &[OsString]) -> Result<i32, CliError> {
    let outcome = match &cli.command {
        Command::Replay(a) => replay(&a.manifest, cli.out.as_ref())?,
        _ => {
            let outcome = execute(cli)?;
            if let Some(dir) = &cli.out {
                write_outputs(dir, cli, manifest::strip_out(raw_args)?, &outcome)?;
            }
            outcome
        }
    };
    if cli.json {
        let text = serde_json::to_string_pretty(&outcome.report).expect("JSON values serialize");
        // A closed pipe on stdout is the reader's choice, not an error here.
        let _ = writeln!(std::io::stdout(), "{text}");
    }
    eprint!("{}", outcome.summary);
    Ok(outcome.exit_code)
}
