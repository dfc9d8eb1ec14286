//! File formats and run manifests.
//!
//! Designs are CSV with header `index,pool_size` (plus `#`-prefixed summary
//! comments) or a JSON mirror with the same field names; outcomes are CSV
//! with header `index,result`; accuracy reports carry the six columns
//! `p,rmse,eta,ci_low,ci_high,mean_estimate`. Report files contain data
//! only, so identical runs produce identical bytes; the manifest describing
//! how a file was produced is written next to it as
//! `<output>.manifest.json`. All floating-point output uses 9 significant
//! digits.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::design::RangeReport;
use crate::error::Error;
use crate::estimator::{OutcomeVector, PoolDesign};
use crate::montecarlo::AccuracyReport;

/// Output encoding for design and report files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    Csv,
    Json,
}

impl std::str::FromStr for FileFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(FileFormat::Csv),
            "json" => Ok(FileFormat::Json),
            other => Err(format!("unknown format {other:?}, expected csv or json")),
        }
    }
}

/// Everything needed to reproduce a run: tool version, subcommand, the full
/// parameter set, the seed and generator when randomness was involved, and a
/// timestamp.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub subcommand: String,
    pub parameters: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub rng_algorithm: Option<String>,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(subcommand: &str) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            parameters: BTreeMap::new(),
            seed: None,
            rng_algorithm: None,
            timestamp: chrono::Utc::now().to_rfc3339(),
        }
    }

    pub fn param(mut self, key: &str, value: impl Display) -> Self {
        let _ = self.parameters.insert(key.to_string(), value.to_string());
        self
    }

    /// Records the seed and pins the generator identity.
    pub fn seeded(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self.rng_algorithm = Some(crate::montecarlo::RNG_ALGORITHM.to_string());
        self
    }
}

/// Sidecar manifest path for an output file: `<output>.manifest.json`.
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_os_string();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Writes the manifest next to the output it describes.
pub fn write_manifest(output: &Path, manifest: &RunManifest) -> Result<(), Error> {
    let body = serde_json::to_string_pretty(manifest)?;
    fs::write(manifest_path(output), body + "\n")?;
    Ok(())
}

/// Formats with `digits` significant digits, like printf's `%g`: plain
/// decimal while the exponent is moderate, scientific otherwise, trailing
/// zeros trimmed.
pub fn format_sig(value: f64, digits: usize) -> String {
    assert!(digits >= 1);
    if value == 0.0 {
        return "0".to_string();
    }
    if !value.is_finite() {
        return value.to_string();
    }
    let exponent = value.abs().log10().floor() as i32;
    if exponent >= -4 && exponent < digits as i32 {
        let decimals = (digits as i32 - 1 - exponent).max(0) as usize;
        trim_decimal(format!("{value:.decimals$}"))
    } else {
        let formatted = format!("{value:.precision$e}", precision = digits - 1);
        match formatted.split_once('e') {
            Some((mantissa, exp)) => format!("{}e{exp}", trim_decimal(mantissa.to_string())),
            None => formatted,
        }
    }
}

fn trim_decimal(mut s: String) -> String {
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

/// Rounds to `digits` significant decimal digits; used before JSON
/// serialization so emitted numbers match the CSV precision.
pub fn round_sig(value: f64, digits: u32) -> f64 {
    if value == 0.0 || !value.is_finite() {
        return value;
    }
    let exponent = value.abs().log10().floor() as i32;
    let factor = 10f64.powi(digits as i32 - 1 - exponent);
    (value * factor).round() / factor
}

fn json_number(value: f64) -> serde_json::Value {
    serde_json::Number::from_f64(round_sig(value, 9))
        .map(serde_json::Value::Number)
        .unwrap_or(serde_json::Value::Null)
}

fn parse_error(path: &Path, line: usize, message: impl Display) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.to_string(),
    }
}

/// Writes a design file. The CSV form carries the spacing, total sample
/// count, and range-check result as `#` comments above the
/// `index,pool_size` table; the JSON form mirrors them as fields.
pub fn write_design_file(
    path: &Path,
    design: &PoolDesign,
    q: Option<f64>,
    range: Option<&RangeReport>,
    format: FileFormat,
) -> Result<(), Error> {
    let body = match format {
        FileFormat::Csv => {
            let mut out = String::new();
            if let Some(q) = q {
                out.push_str(&format!("# q: {}\n", format_sig(q, 9)));
            }
            out.push_str(&format!("# total_samples: {}\n", design.total_samples()));
            out.push_str(&format!("# range_check: {}\n", range_summary(range)));
            out.push_str("index,pool_size\n");
            for (index, size) in design.sizes().iter().enumerate() {
                out.push_str(&format!("{index},{size}\n"));
            }
            out
        }
        FileFormat::Json => {
            let pools: Vec<_> = design
                .sizes()
                .iter()
                .enumerate()
                .map(|(index, size)| serde_json::json!({"index": index, "pool_size": size}))
                .collect();
            let value = serde_json::json!({
                "q": q.map(|q| round_sig(q, 9)),
                "total_samples": design.total_samples(),
                "range_check": range_summary(range),
                "pools": pools,
            });
            serde_json::to_string_pretty(&value)? + "\n"
        }
    };
    fs::write(path, body)?;
    Ok(())
}

fn range_summary(range: Option<&RangeReport>) -> String {
    match range {
        None => "not_checked".to_string(),
        Some(report) if report.is_ok() => "ok".to_string(),
        Some(report) => {
            let details: Vec<String> = report.violations().iter().map(|v| v.to_string()).collect();
            format!("violated: {}", details.join("; "))
        }
    }
}

/// Reads a design written by [`write_design_file`] in either format,
/// detected from the content.
pub fn read_design_file(path: &Path) -> Result<PoolDesign, Error> {
    let content = fs::read_to_string(path)?;
    if content.trim_start().starts_with('{') {
        read_design_json(path, &content)
    } else {
        read_design_csv(path, &content)
    }
}

fn read_design_json(path: &Path, content: &str) -> Result<PoolDesign, Error> {
    #[derive(serde::Deserialize)]
    struct DesignJson {
        pools: Vec<PoolRowJson>,
    }
    #[derive(serde::Deserialize)]
    struct PoolRowJson {
        pool_size: u32,
    }
    let parsed: DesignJson =
        serde_json::from_str(content).map_err(|e| parse_error(path, e.line(), e))?;
    PoolDesign::new(parsed.pools.into_iter().map(|row| row.pool_size).collect())
}

fn read_design_csv(path: &Path, content: &str) -> Result<PoolDesign, Error> {
    let mut sizes = Vec::new();
    let mut header_seen = false;
    for (number, raw) in content.lines().enumerate() {
        let line_no = number + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            if line != "index,pool_size" {
                return Err(parse_error(
                    path,
                    line_no,
                    format!("expected header \"index,pool_size\", found {line:?}"),
                ));
            }
            header_seen = true;
            continue;
        }
        let (index_field, size_field) = line
            .split_once(',')
            .ok_or_else(|| parse_error(path, line_no, "expected two comma-separated fields"))?;
        let index: usize = index_field
            .trim()
            .parse()
            .map_err(|e| parse_error(path, line_no, format!("bad index: {e}")))?;
        if index != sizes.len() {
            return Err(parse_error(
                path,
                line_no,
                format!("expected index {}, found {index}", sizes.len()),
            ));
        }
        let size: u32 = size_field
            .trim()
            .parse()
            .map_err(|e| parse_error(path, line_no, format!("bad pool size: {e}")))?;
        sizes.push(size);
    }
    if !header_seen {
        return Err(parse_error(path, 1, "missing header \"index,pool_size\""));
    }
    PoolDesign::new(sizes)
}

/// Reads an outcome file: CSV with header `index,result` and 0/1 results.
pub fn read_outcomes_file(path: &Path) -> Result<OutcomeVector, Error> {
    let content = fs::read_to_string(path)?;
    let mut outcomes = Vec::new();
    let mut header_seen = false;
    for (number, raw) in content.lines().enumerate() {
        let line_no = number + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            if line != "index,result" {
                return Err(parse_error(
                    path,
                    line_no,
                    format!("expected header \"index,result\", found {line:?}"),
                ));
            }
            header_seen = true;
            continue;
        }
        let (index_field, result_field) = line
            .split_once(',')
            .ok_or_else(|| parse_error(path, line_no, "expected two comma-separated fields"))?;
        let index: usize = index_field
            .trim()
            .parse()
            .map_err(|e| parse_error(path, line_no, format!("bad index: {e}")))?;
        if index != outcomes.len() {
            return Err(parse_error(
                path,
                line_no,
                format!("expected index {}, found {index}", outcomes.len()),
            ));
        }
        match result_field.trim() {
            "0" => outcomes.push(false),
            "1" => outcomes.push(true),
            other => {
                return Err(parse_error(
                    path,
                    line_no,
                    format!("result must be 0 or 1, found {other:?}"),
                ))
            }
        }
    }
    if !header_seen {
        return Err(parse_error(path, 1, "missing header \"index,result\""));
    }
    Ok(OutcomeVector::new(outcomes))
}

/// Writes an accuracy report. Data only — the manifest goes in the sidecar —
/// so reruns with the same seed are byte-identical.
pub fn write_report_file(
    path: &Path,
    report: &AccuracyReport,
    format: FileFormat,
) -> Result<(), Error> {
    let body = match format {
        FileFormat::Csv => {
            let mut out = String::from("p,rmse,eta,ci_low,ci_high,mean_estimate\n");
            for point in &report.points {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    format_sig(point.p, 9),
                    format_sig(point.rmse, 9),
                    format_sig(point.eta, 9),
                    format_sig(point.ci_low, 9),
                    format_sig(point.ci_high, 9),
                    format_sig(point.mean_estimate, 9),
                ));
            }
            out
        }
        FileFormat::Json => {
            let rows: Vec<_> = report
                .points
                .iter()
                .map(|point| {
                    serde_json::json!({
                        "p": json_number(point.p),
                        "rmse": json_number(point.rmse),
                        "eta": json_number(point.eta),
                        "ci_low": json_number(point.ci_low),
                        "ci_high": json_number(point.ci_high),
                        "mean_estimate": json_number(point.mean_estimate),
                    })
                })
                .collect();
            serde_json::to_string_pretty(&rows)? + "\n"
        }
    };
    fs::write(path, body)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::AccuracyPoint;

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(format_sig(0.0, 9), "0");
        assert_eq!(format_sig(1.085, 9), "1.085");
        assert_eq!(format_sig(0.001, 9), "0.001");
        assert_eq!(format_sig(40439.0, 9), "40439");
        assert_eq!(format_sig(0.292893219, 9), "0.292893219");
        assert_eq!(format_sig(1.0 - 1.0 / 3.0f64.sqrt(), 9), "0.422649731");
        assert_eq!(format_sig(1.23456789e-7, 9), "1.23456789e-7");
        assert_eq!(format_sig(-2.5e12, 9), "-2.5e12");
    }

    #[test]
    fn round_trip_through_nine_digits_is_parseable() {
        for value in [0.05, 1e-9, 0.4226497308103742, 3162.2776601683795] {
            let printed = format_sig(value, 9);
            let reparsed: f64 = printed.parse().unwrap();
            assert!(
                ((reparsed - value) / value).abs() < 1e-8,
                "{value} -> {printed} -> {reparsed}"
            );
        }
    }

    #[test]
    fn design_round_trip_csv_and_json() {
        let dir = tempfile::tempdir().unwrap();
        let design = PoolDesign::new(vec![1, 2, 3, 5, 8, 13]).unwrap();
        for (format, name) in [(FileFormat::Csv, "d.csv"), (FileFormat::Json, "d.json")] {
            let path = dir.path().join(name);
            write_design_file(&path, &design, Some(1.5), None, format).unwrap();
            let reread = read_design_file(&path).unwrap();
            assert_eq!(reread, design, "format {format:?}");
        }
    }

    #[test]
    fn design_csv_contains_totals_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("design.csv");
        let design = PoolDesign::new(vec![2, 2, 2]).unwrap();
        write_design_file(&path, &design, Some(1.0), None, FileFormat::Csv).unwrap();
        let content = fs::read_to_string(&path).unwrap();
        assert!(content.contains("# total_samples: 6"));
        assert!(content.contains("index,pool_size"));
        assert!(content.contains("# range_check: not_checked"));
    }

    #[test]
    fn design_parse_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "index,pool_size\n0,1\n1,two\n").unwrap();
        match read_design_file(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }

        fs::write(&path, "pool,size\n0,1\n").unwrap();
        match read_design_file(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected header error, got {other:?}"),
        }

        fs::write(&path, "index,pool_size\n0,1\n5,2\n").unwrap();
        match read_design_file(&path) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("expected index 1"));
            }
            other => panic!("expected index error, got {other:?}"),
        }
    }

    #[test]
    fn outcome_file_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("outcomes.csv");
        fs::write(&path, "index,result\n0,0\n1,1\n2,0\n").unwrap();
        let outcomes = read_outcomes_file(&path).unwrap();
        assert_eq!(outcomes.as_slice(), &[false, true, false]);

        fs::write(&path, "index,result\n0,2\n").unwrap();
        match read_outcomes_file(&path) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 2);
                assert!(message.contains("0 or 1"));
            }
            other => panic!("expected result error, got {other:?}"),
        }
    }

    #[test]
    fn report_csv_has_nine_digit_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.csv");
        let report = AccuracyReport {
            points: vec![AccuracyPoint {
                p: 0.001,
                rmse: 0.000251234567891,
                eta: 0.251234567891,
                ci_low: 0.0005,
                ci_high: 0.0015,
                mean_estimate: 0.00099,
            }],
        };
        write_report_file(&path, &report, FileFormat::Csv).unwrap();
        let content = fs::read_to_string(&path).unwrap();
        let mut lines = content.lines();
        assert_eq!(lines.next(), Some("p,rmse,eta,ci_low,ci_high,mean_estimate"));
        assert_eq!(
            lines.next(),
            Some("0.001,0.000251234568,0.251234568,0.0005,0.0015,0.00099")
        );
    }

    #[test]
    fn report_json_mirrors_field_names() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        let report = AccuracyReport {
            points: vec![AccuracyPoint {
                p: 0.1,
                rmse: 0.01,
                eta: 0.1,
                ci_low: 0.08,
                ci_high: 0.12,
                mean_estimate: 0.999,
            }],
        };
        write_report_file(&path, &report, FileFormat::Json).unwrap();
        let value: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        let row = &value[0];
        for key in ["p", "rmse", "eta", "ci_low", "ci_high", "mean_estimate"] {
            assert!(row.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn manifest_sits_next_to_output() {
        let dir = tempfile::tempdir().unwrap();
        let output = dir.path().join("report.csv");
        let manifest = RunManifest::new("sweep").param("reps", 10).seeded(42);
        write_manifest(&output, &manifest).unwrap();
        let sidecar = manifest_path(&output);
        assert_eq!(sidecar, dir.path().join("report.csv.manifest.json"));
        let value: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&sidecar).unwrap()).unwrap();
        assert_eq!(value["subcommand"], "sweep");
        assert_eq!(value["seed"], 42);
        assert_eq!(value["parameters"]["reps"], "10");
        assert!(value["rng_algorithm"].as_str().unwrap().contains("chacha8"));
    }
}
