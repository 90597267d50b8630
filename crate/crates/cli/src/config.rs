//! `--config FILE`: a TOML file whose keys are flag names.
//!
//! Top-level keys apply to the chosen subcommand; a table named after the
//! subcommand (e.g. `[generate]`) holds keys for it alone. Flags given on
//! the command line take precedence over the file.

use std::ffi::OsString;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::Command;

/// Config path and subcommand name found by a light scan of the arguments.
pub struct Scan {
    pub config: Option<PathBuf>,
    pub subcommand: Option<(usize, String)>,
}

pub fn scan(args: &[OsString]) -> Scan {
    let mut config = None;
    let mut subcommand = None;
    let mut i = 1;
    while i < args.len() {
        let a = args[i].to_string_lossy();
        if a == "--config" {
            config = args.get(i + 1).map(PathBuf::from);
            i += 2;
            continue;
        }
        if let Some(p) = a.strip_prefix("--config=") {
            config = Some(PathBuf::from(p));
        } else if !a.starts_with('-') && subcommand.is_none() {
            subcommand = Some((i, a.into_owned()));
        }
        i += 1;
    }
    Scan { config, subcommand }
}

fn scalar(key: &str, v: &toml::Value) -> Result<String> {
    Ok(match v {
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(n) => n.to_string(),
        toml::Value::Float(x) => x.to_string(),
        other => bail!("config key `{key}`: unsupported value {other}"),
    })
}

fn push_flag(cmd: &Command, key: &str, value: &toml::Value, out: &mut Vec<OsString>) -> Result<()> {
    let arg = cmd
        .get_arguments()
        .find(|a| a.get_long() == Some(key))
        .ok_or_else(|| anyhow!("config key `{key}` is not a flag of `{}`", cmd.get_name()))?;
    let flag = OsString::from(format!("--{key}"));
    let multi = arg.get_num_args().is_some_and(|r| r.max_values() > 1);
    match value {
        toml::Value::Boolean(true) => out.push(flag),
        toml::Value::Boolean(false) => {}
        toml::Value::Array(items) if multi => {
            out.push(flag);
            for item in items {
                out.push(scalar(key, item)?.into());
            }
        }
        toml::Value::Array(items) => {
            for item in items {
                out.push(flag.clone());
                out.push(scalar(key, item)?.into());
            }
        }
        v => {
            out.push(flag);
            out.push(scalar(key, v)?.into());
        }
    }
    Ok(())
}

/// Arguments with the config file's flags spliced in after the subcommand.
pub fn expand(args: Vec<OsString>, root: &Command) -> Result<Vec<OsString>> {
    let scan = scan(&args);
    let (Some(path), Some((at, name))) = (scan.config, scan.subcommand) else {
        return Ok(args);
    };
    let Some(cmd) = root.find_subcommand(&name) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path).with_context(|| format!("cannot read config {}", path.display()))?;
    let table: toml::Table = text.parse().with_context(|| format!("invalid config {}", path.display()))?;
    let mut injected = Vec::new();
    for (key, value) in &table {
        match value {
            toml::Value::Table(_) => {}
            v => push_flag(cmd, key, v, &mut injected)?,
        }
    }
    if let Some(toml::Value::Table(section)) = table.get(&name) {
        for (key, value) in section {
            push_flag(cmd, key, value, &mut injected)?;
        }
    }
    let mut out: Vec<OsString> = args[..=at].to_vec();
    out.extend(injected);
    out.extend(args[at + 1..].iter().cloned());
    Ok(out)
}
