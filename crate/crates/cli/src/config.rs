//! Flat `key=value` config files and the effective-config echo.
//!
//! A config file line `key=value` stands for the flag `--key=value`; `true`
//! and `false` switch boolean flags. Keys given on the command line win over
//! the file. The echo is written in the same format, so it can be fed back
//! through `--config` to replay a run.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use clap::{ArgMatches, Command};

use crate::CliError;

/// Removes `--config FILE` from `argv` and splices the file's flags in right
/// after the subcommand, dropping keys that also appear on the command line.
pub fn expand(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let mut args: Vec<String> = Vec::with_capacity(argv.len());
    for a in argv {
        args.push(a.into_string().map_err(|a| CliError::Usage(format!("argument {a:?} is not UTF-8")))?);
    }
    let mut config = None;
    let mut kept = Vec::with_capacity(args.len());
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            let path = it.next().ok_or_else(|| CliError::Usage("--config needs a file".into()))?;
            config = Some(path);
        } else if let Some(path) = a.strip_prefix("--config=") {
            config = Some(path.to_string());
        } else {
            kept.push(a);
        }
    }
    let Some(path) = config else {
        return Ok(kept.into_iter().map(OsString::from).collect());
    };
    let text = fs::read_to_string(&path).map_err(|e| CliError::Usage(format!("cannot read config {path}: {e}")))?;
    let given: Vec<&str> = kept.iter().filter_map(|a| flag_name(a)).collect();
    let mut from_file = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("{path}:{}: expected key=value, got {line:?}", lineno + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        if given.contains(&key) {
            continue;
        }
        match value {
            "true" => from_file.push(format!("--{key}")),
            "false" => {}
            _ => from_file.push(format!("--{key}={value}")),
        }
    }
    // the subcommand is the first token after the program name
    let at = 2.min(kept.len());
    let mut out: Vec<String> = kept[..at].to_vec();
    out.extend(from_file);
    out.extend_from_slice(&kept[at..]);
    Ok(out.into_iter().map(OsString::from).collect())
}

fn flag_name(arg: &str) -> Option<&str> {
    let name = arg.strip_prefix("--")?;
    Some(name.split_once('=').map_or(name, |(k, _)| k))
}

/// Every valued argument of the matched subcommand, defaults included, as
/// `key=value` lines in declaration order.
pub fn effective(sub: &Command, matches: &ArgMatches) -> String {
    let mut out = format!("# pktsched {}\n", sub.get_name());
    for arg in sub.get_arguments() {
        let Some(long) = arg.get_long() else { continue };
        if matches!(long, "help" | "config") {
            continue;
        }
        let Some(values) = matches.get_raw(arg.get_id().as_str()) else { continue };
        for v in values {
            out.push_str(&format!("{long}={}\n", v.to_string_lossy()));
        }
    }
    out
}

pub fn write_effective(dir: &Path, text: &str) -> Result<(), CliError> {
    fs::write(dir.join("config.txt"), text).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}
