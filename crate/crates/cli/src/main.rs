//! `mdraw`: sample paths, run estimators and the verification suite.
//!
//! Exit status: 0 success, 2 gate failure, 64 usage error, 74 I/O error.

mod args;
mod commands;
mod output;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Common};

const EXIT_GATE: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_IO: u8 = 74;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
}

impl From<mdraw_core::Error> for CliError {
    fn from(e: mdraw_core::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

/// Where the document goes; `None` is stdout.
fn destination(common: &Common, stem: &str) -> Option<PathBuf> {
    match &common.out {
        Some(p) if p.as_os_str() == "-" => None,
        Some(p) => Some(p.clone()),
        None => common
            .out_dir
            .as_ref()
            .map(|d| d.join(format!("{stem}.{}", common.format.extension()))),
    }
}

fn emit(common: &Common, doc: &commands::Document) -> Result<(), CliError> {
    let io_err = |what: &str, e: io::Error| CliError::Io(format!("{what}: {e}"));
    match destination(common, &doc.stem) {
        None => {
            let stdout = io::stdout();
            let mut out = BufWriter::new(stdout.lock());
            output::write_document(&mut out, common.format, &doc.header, &doc.sections)
                .map_err(|e| io_err("stdout", e))
        }
        Some(path) => {
            let shown = path.display().to_string();
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| io_err(&shown, e))?;
            }
            let file = File::create(&path).map_err(|e| io_err(&shown, e))?;
            let mut out = BufWriter::new(file);
            output::write_document(&mut out, common.format, &doc.header, &doc.sections)
                .and_then(|()| out.flush())
                .map_err(|e| io_err(&shown, e))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let result = commands::run(&cli.command, &cli.common).and_then(|doc| {
        emit(&cli.common, &doc)?;
        Ok(doc.pass)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("mdraw: gate failed");
            ExitCode::from(EXIT_GATE)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("mdraw: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("mdraw: {msg}");
            ExitCode::from(EXIT_IO)
        }
    }
}
