//! Config files are merged by turning every entry into a `--key=value`
//! flag placed right after the subcommand name. Subcommands let a repeated
//! flag override itself, so anything given on the command line wins.

use std::ffi::OsString;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::Value;

/// Parses a config file: a JSON object, or flat `key = value` lines with
/// `#` comments.
pub fn read_config(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    if text.trim_start().starts_with('{') {
        parse_json(&text).with_context(|| format!("config {}", path.display()))
    } else {
        parse_flat(&text).with_context(|| format!("config {}", path.display()))
    }
}

fn parse_json(text: &str) -> Result<Vec<(String, String)>> {
    let Value::Object(map) = serde_json::from_str::<Value>(text)? else {
        bail!("top level must be an object");
    };
    let mut out = Vec::new();
    for (k, v) in map {
        let s = match v {
            Value::Null => continue,
            Value::Array(items) => items.iter().map(scalar).collect::<Result<Vec<_>>>()?.join(","),
            v => scalar(&v)?,
        };
        out.push((k, s));
    }
    Ok(out)
}

fn scalar(v: &Value) -> Result<String> {
    Ok(match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        Value::Bool(b) => b.to_string(),
        _ => bail!("nested value {v} not supported"),
    })
}

fn parse_flat(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("line {}: expected key = value", i + 1);
        };
        out.push((k.trim().to_string(), v.trim().trim_matches('"').to_string()));
    }
    Ok(out)
}

/// Flags for the config entries. Booleans become bare switches (or are
/// dropped when false).
pub fn to_flags(entries: &[(String, String)]) -> Result<Vec<OsString>> {
    let mut out = Vec::new();
    for (k, v) in entries {
        let key = k.replace('_', "-");
        if key == "config" {
            bail!("config files cannot include other config files");
        }
        match v.as_str() {
            "true" => out.push(format!("--{key}").into()),
            "false" => {}
            _ => out.push(format!("--{key}={v}").into()),
        }
    }
    Ok(out)
}

/// Value of `--config` in raw arguments, if any.
pub fn find_config(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--" {
            break;
        }
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(rest) = s.strip_prefix("--config=") {
            return Some(rest.into());
        }
    }
    None
}

/// Arguments reordered as `bin subcommand <config flags> <user flags>`.
/// User flags that preceded the subcommand are global and still valid
/// after it; moving them keeps them later than the config flags.
pub fn splice(args: &[OsString], subcommand: &str, flags: Vec<OsString>) -> Vec<OsString> {
    let Some(at) = args.iter().skip(1).position(|a| a == subcommand).map(|i| i + 1) else {
        return args.to_vec();
    };
    let mut out = vec![args[0].clone(), args[at].clone()];
    out.extend(flags);
    out.extend_from_slice(&args[1..at]);
    out.extend_from_slice(&args[at + 1..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_and_json_agree() {
        let flat = parse_flat("# study\nreps = 5\nmodels = I,II\nrequire_stationary = true\n").unwrap();
        let json = parse_json(r#"{"reps": 5, "models": ["I", "II"], "require_stationary": true}"#).unwrap();
        let mut a = to_flags(&flat).unwrap();
        let mut b = to_flags(&json).unwrap();
        a.sort();
        b.sort();
        assert_eq!(a, b);
        assert!(a.contains(&"--require-stationary".into()));
    }

    #[test]
    fn flags_land_after_subcommand() {
        let args: Vec<OsString> = ["intgarch", "-v", "fit", "--orders", "1,1,0"].iter().map(Into::into).collect();
        let out = splice(&args, "fit", vec!["--orders=1,1,1".into()]);
        let s: Vec<_> = out.iter().map(|a| a.to_string_lossy().into_owned()).collect();
        assert_eq!(s, ["intgarch", "fit", "--orders=1,1,1", "-v", "--orders", "1,1,0"]);
    }

    #[test]
    fn bad_lines_rejected() {
        assert!(parse_flat("seed 7").is_err());
        assert!(parse_json(r#"{"a": {"b": 1}}"#).is_err());
        assert!(parse_json("[1]").is_err());
    }
}
