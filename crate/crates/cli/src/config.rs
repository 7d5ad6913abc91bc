//! Flat `key = value` configuration files merged in front of command-line flags.

use std::ffi::OsString;
use std::path::Path;

use crate::output::CliError;

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("config line {}: expected `key = value`, got `{line}`", k + 1)))?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() {
            return Err(CliError::Config(format!("config line {}: empty key", k + 1)));
        }
        out.push((key, value.trim().to_string()));
    }
    Ok(out)
}

fn value_of(args: &[OsString], i: usize, flag: &str) -> Option<OsString> {
    let a = args[i].to_str()?;
    if a == flag {
        args.get(i + 1).cloned()
    } else {
        a.strip_prefix(flag).and_then(|r| r.strip_prefix('=')).map(OsString::from)
    }
}

/// Builds the argument vector clap sees: the subcommand (the first argument
/// found in `commands`, else the file's `command` key), then every entry of
/// the config file as `--key=value`, then the user's own flags, so that later
/// occurrences (the user's) override the file.
pub fn merge(raw: Vec<OsString>, commands: &[&str]) -> Result<Vec<OsString>, CliError> {
    let (bin, rest) = raw.split_first().map(|(b, r)| (b.clone(), r.to_vec())).unwrap_or_default();
    let mut config_path = None;
    let mut sub = None;
    let mut i = 0;
    while i < rest.len() {
        if let Some(v) = value_of(&rest, i, "--config") {
            config_path = Some(v);
            i += if rest[i] == "--config" { 2 } else { 1 };
            continue;
        }
        let takes_value = rest[i] == "--out";
        if sub.is_none() && commands.iter().any(|c| rest[i] == *c) {
            sub = Some(i);
        }
        i += if takes_value { 2 } else { 1 };
    }
    let entries = match &config_path {
        Some(p) => {
            let path = Path::new(p);
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
            parse(&text)?
        }
        None => Vec::new(),
    };
    let mut file_command = None;
    let mut tokens: Vec<OsString> = Vec::new();
    for (key, value) in entries {
        if key == "command" {
            file_command = Some(value);
        } else {
            tokens.push(format!("--{key}={value}").into());
        }
    }
    let mut out = vec![bin];
    match sub {
        Some(s) => {
            out.extend_from_slice(&rest[..=s]);
            out.extend(tokens);
            out.extend_from_slice(&rest[s + 1..]);
        }
        None => {
            if let Some(cmd) = file_command {
                out.push(cmd.into());
            }
            out.extend(tokens);
            out.extend(rest);
        }
    }
    Ok(out)
}
