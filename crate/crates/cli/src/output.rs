use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub t: f64,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate_error: Option<f64>,
}

/// `t,value[,estimate_error]` with 17 significant digits.
pub fn csv(rows: &[Row]) -> String {
    let with_err = rows.first().is_some_and(|r| r.estimate_error.is_some());
    let mut s = String::from(if with_err {
        "t,value,estimate_error\n"
    } else {
        "t,value\n"
    });
    for r in rows {
        let _ = write!(s, "{:.16e},{:.16e}", r.t, r.value);
        if let Some(e) = r.estimate_error {
            let _ = write!(s, ",{e:.16e}");
        }
        s.push('\n');
    }
    s
}

pub fn json<C: Serialize>(config: &C, rows: &[Row]) -> String {
    let mut s =
        serde_json::to_string_pretty(&serde_json::json!({ "config": config, "rows": rows }))
            .expect("rows serialize");
    s.push('\n');
    s
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError {
        code: 1,
        msg: format!("--out {}: {e}", path.display()),
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    write_file(path, &s)
}

/// Writes the data to `--out` and the summary to stdout, or, without a file,
/// the data to stdout and the summary to stderr.
pub fn emit<C: Serialize>(
    config: &C,
    rows: &[Row],
    out: &crate::OutputArgs,
    summary: &str,
) -> Result<(), CliError> {
    let data = match out.format {
        Format::Csv => csv(rows),
        Format::Json => json(config, rows),
    };
    match &out.out {
        Some(path) => {
            write_file(path, &data)?;
            println!("{summary}");
        }
        None => {
            let mut stdout = io::stdout().lock();
            let _ = stdout.write_all(data.as_bytes());
            eprintln!("{summary}");
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let rows = [Row {
            t: 0.0,
            value: 1.0 / 3.0,
            estimate_error: None,
        }];
        assert_eq!(
            csv(&rows),
            "t,value\n0.0000000000000000e0,3.3333333333333331e-1\n"
        );
        let rows = [Row {
            t: 1.0,
            value: -2.0,
            estimate_error: Some(1e-9),
        }];
        assert_eq!(
            csv(&rows),
            "t,value,estimate_error\n1.0000000000000000e0,-2.0000000000000000e0,1.0000000000000001e-9\n"
        );
    }

    #[test]
    fn csv_round_trips_values() {
        let v = 0.1f64 + 0.2;
        let s = csv(&[Row {
            t: 0.5,
            value: v,
            estimate_error: None,
        }]);
        let parsed: f64 = s
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .nth(1)
            .unwrap()
            .parse()
            .unwrap();
        assert_eq!(parsed, v);
    }

    #[test]
    fn json_layout() {
        let s = json(
            &serde_json::json!({"k": 1}),
            &[Row {
                t: 0.0,
                value: 2.0,
                estimate_error: None,
            }],
        );
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["config"]["k"], 1);
        assert_eq!(v["rows"][0]["value"], 2.0);
        assert!(v["rows"][0].get("estimate_error").is_none());
    }
}
