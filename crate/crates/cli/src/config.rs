//! `key = value` files that supply defaults for command-line flags.

use std::fs;
use std::path::Path;

/// Parses `key = value` lines. Blank lines and lines starting with `#` are
/// skipped; keys are flag names without the leading dashes.
pub fn parse(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key = value", i + 1))?;
        let k = k.trim().trim_start_matches("--");
        if k.is_empty() {
            return Err(format!("config line {}: empty key", i + 1));
        }
        out.push((k.to_string(), unquote(v.trim()).to_string()));
    }
    Ok(out)
}

fn unquote(v: &str) -> &str {
    let b = v.as_bytes();
    if b.len() >= 2
        && (b[0] == b'"' && b[b.len() - 1] == b'"' || b[0] == b'\'' && b[b.len() - 1] == b'\'')
    {
        &v[1..v.len() - 1]
    } else {
        v
    }
}

fn given(args: &[String], key: &str) -> bool {
    let long = format!("--{key}");
    let eq = format!("--{key}=");
    args.iter().any(|a| *a == long || a.starts_with(&eq))
}

/// Removes `--config <path>` from `args` and appends every key of the file
/// that is not already given on the command line. Boolean keys take the
/// values `true` or `false`.
pub fn merge(mut args: Vec<String>) -> Result<Vec<String>, String> {
    let Some(pos) = args
        .iter()
        .position(|a| a == "--config" || a.starts_with("--config="))
    else {
        return Ok(args);
    };
    let path = if let Some(p) = args[pos].strip_prefix("--config=") {
        let p = p.to_string();
        args.remove(pos);
        p
    } else {
        if pos + 1 >= args.len() {
            return Err("--config: missing file path".into());
        }
        let p = args.remove(pos + 1);
        args.remove(pos);
        p
    };
    let text = fs::read_to_string(Path::new(&path)).map_err(|e| format!("--config {path}: {e}"))?;
    for (k, v) in parse(&text).map_err(|e| format!("--config {path}: {e}"))? {
        if given(&args, &k) {
            continue;
        }
        match v.as_str() {
            "true" => args.push(format!("--{k}")),
            "false" => {}
            _ => args.push(format!("--{k}={v}")),
        }
    }
    Ok(args)
}
