//! Optional TOML config files for the command line.
//!
//! `--config FILE` supplies flag values under the same names as the long
//! flags, either at the top level or in a table named after the subcommand.
//! Values from the file are inserted ahead of the user's own flags, so an
//! explicit flag always wins.

use std::ffi::OsString;
use std::path::Path;

use anyhow::{bail, Context};
use toml::Value;

/// Removes `--config FILE` from `args` and returns the path, if present.
fn take_config_path(args: &mut Vec<OsString>) -> anyhow::Result<Option<OsString>> {
    let mut i = 1;
    while i < args.len() {
        let arg = args[i].to_string_lossy().into_owned();
        if arg == "--config" {
            if i + 1 >= args.len() {
                bail!("--config needs a file path");
            }
            let path = args.remove(i + 1);
            args.remove(i);
            return Ok(Some(path));
        }
        if let Some(path) = arg.strip_prefix("--config=") {
            let path = OsString::from(path);
            args.remove(i);
            return Ok(Some(path));
        }
        i += 1;
    }
    Ok(None)
}

fn flag_values(key: &str, value: &Value) -> anyhow::Result<Vec<OsString>> {
    let flag = format!("--{}", key.replace('_', "-"));
    let scalar = |v: &Value| -> anyhow::Result<String> {
        Ok(match v {
            Value::String(s) => s.clone(),
            Value::Integer(i) => i.to_string(),
            Value::Float(f) => f.to_string(),
            other => bail!("config key {key:?}: unsupported value {other}"),
        })
    };
    Ok(match value {
        Value::Boolean(true) => vec![flag.into()],
        Value::Boolean(false) => vec![],
        Value::Array(items) => {
            let joined = items.iter().map(scalar).collect::<anyhow::Result<Vec<_>>>()?.join(",");
            vec![flag.into(), joined.into()]
        }
        other => vec![flag.into(), scalar(other)?.into()],
    })
}

/// Expands `--config FILE` into explicit flags placed right after the subcommand.
pub fn expand_args(mut args: Vec<OsString>) -> anyhow::Result<Vec<OsString>> {
    let Some(path) = take_config_path(&mut args)? else {
        return Ok(args);
    };
    let path = Path::new(&path);
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let table: toml::Table = text.parse().with_context(|| format!("parsing {}", path.display()))?;

    let Some(sub_pos) = args.iter().skip(1).position(|a| !a.to_string_lossy().starts_with('-')) else {
        return Ok(args);
    };
    let sub_pos = sub_pos + 1;
    let subcommand = args[sub_pos].to_string_lossy().into_owned();

    let mut inserted = Vec::new();
    for (key, value) in &table {
        match value {
            Value::Table(section) if *key == subcommand => {
                for (k, v) in section {
                    inserted.extend(flag_values(k, v)?);
                }
            }
            Value::Table(_) => {}
            _ => inserted.extend(flag_values(key, value)?),
        }
    }
    args.splice(sub_pos + 1..sub_pos + 1, inserted);
    Ok(args)
}
