//! `key=value` config files. Each key names a long flag; values given on the
//! command line win over the file.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::path::Path;

use clap::{ArgAction, Command};

fn config_path(argv: &[OsString]) -> Option<OsString> {
    let mut it = argv.iter();
    while let Some(arg) = it.next() {
        let s = arg.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(rest) = s.strip_prefix("--config=") {
            return Some(rest.into());
        }
    }
    None
}

fn long_names(cmd: &Command) -> Vec<(String, bool)> {
    cmd.get_arguments()
        .filter_map(|a| {
            let is_flag = matches!(a.get_action(), ArgAction::SetTrue | ArgAction::SetFalse);
            a.get_long().map(|l| (l.to_string(), is_flag))
        })
        .collect()
}

/// Appends the config file's entries to `argv` as flags.
pub fn expand(argv: Vec<OsString>, cmd: &Command) -> Result<Vec<OsString>, String> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(Path::new(&path)).map_err(|e| format!("config {}: {e}", path.to_string_lossy()))?;
    let sub_name = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).find(|a| cmd.get_subcommands().any(|s| s.get_name() == a));
    let globals = long_names(cmd);
    let mut everywhere: BTreeSet<String> = globals.iter().map(|g| g.0.clone()).collect();
    for s in cmd.get_subcommands() {
        everywhere.extend(long_names(s).into_iter().map(|g| g.0));
    }
    let mut here = globals;
    if let Some(name) = &sub_name {
        here.extend(long_names(cmd.find_subcommand(name).expect("listed subcommand")));
    }
    let given: BTreeSet<String> = argv
        .iter()
        .filter_map(|a| {
            let s = a.to_string_lossy();
            s.strip_prefix("--").map(|f| f.split('=').next().unwrap_or("").to_string())
        })
        .collect();
    let mut out = argv;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!("config line {}: expected key=value, got {line:?}", lineno + 1));
        };
        let (key, value) = (key.trim(), value.trim());
        if key == "config" {
            return Err(format!("config line {}: nested config files are not supported", lineno + 1));
        }
        if !everywhere.contains(key) {
            return Err(format!("config line {}: unknown key {key:?}", lineno + 1));
        }
        let Some((_, is_flag)) = here.iter().find(|(l, _)| l == key) else {
            // belongs to another subcommand
            continue;
        };
        if given.contains(key) {
            continue;
        }
        if *is_flag {
            match value {
                "true" => out.push(format!("--{key}").into()),
                "false" => {}
                _ => return Err(format!("config line {}: {key} takes true or false", lineno + 1)),
            }
        } else {
            out.push(format!("--{key}={value}").into());
        }
    }
    Ok(out)
}
