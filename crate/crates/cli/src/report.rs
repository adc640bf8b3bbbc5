//! Run reports and their JSON / CSV serialization.
//!
//! Non-finite floats are written as the strings `"nan"`, `"inf"` and
//! `"-inf"` so that a failed run never loses its residual.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub matrix: String,
    pub n: usize,
    pub nnz: usize,
    pub method: String,
    pub precond: String,
    pub domains: usize,
    #[serde(with = "float")]
    pub av_bd: f64,
    #[serde(with = "float")]
    pub av_bs: f64,
    pub n_blocks: usize,
    #[serde(with = "float")]
    pub blocking_time: f64,
    #[serde(with = "float")]
    pub factor_time: f64,
    #[serde(with = "float")]
    pub solve_time: f64,
    #[serde(with = "float")]
    pub total_time: f64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(with = "float")]
    pub final_relres: f64,
    pub nnz_precond: usize,
    #[serde(with = "float")]
    pub memory_ratio: f64,
    /// `max |x_i - 1|` when the right-hand side is `A * ones`.
    #[serde(with = "opt_float", default)]
    pub max_error: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    Json,
    Csv,
}

/// JSON overwrites `path`; CSV appends one row, writing the header only
/// when the file is new or empty.
pub fn emit_report(report: &RunReport, format: ReportFormat, path: &Path) -> std::io::Result<()> {
    match format {
        ReportFormat::Json => {
            let mut f = std::fs::File::create(path)?;
            serde_json::to_writer_pretty(&mut f, report)?;
            writeln!(f)
        }
        ReportFormat::Csv => {
            let fresh = std::fs::metadata(path)
                .map(|m| m.len() == 0)
                .unwrap_or(true);
            let f = OpenOptions::new().create(true).append(true).open(path)?;
            let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(f);
            w.serialize(report).map_err(std::io::Error::other)?;
            w.flush()
        }
    }
}

pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        v.to_string()
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Raw {
    Num(f64),
    Text(String),
}

fn from_raw<E: serde::de::Error>(raw: Raw) -> Result<f64, E> {
    match raw {
        Raw::Num(v) => Ok(v),
        Raw::Text(s) => match s.as_str() {
            "nan" => Ok(f64::NAN),
            "inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            other => other
                .parse()
                .map_err(|_| E::custom(format!("invalid number '{other}'"))),
        },
    }
}

mod float {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&format_float(*v))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        from_raw(Raw::deserialize(d)?)
    }
}

mod opt_float {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => float::serialize(x, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        match Option::<Raw>::deserialize(d)? {
            None => Ok(None),
            Some(Raw::Text(s)) if s.is_empty() => Ok(None),
            Some(raw) => from_raw(raw).map(Some),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunReport {
        RunReport {
            matrix: "lap".into(),
            n: 4,
            nnz: 10,
            method: "graph".into(),
            precond: "seq".into(),
            domains: 1,
            av_bd: 0.9,
            av_bs: 1.5,
            n_blocks: 3,
            blocking_time: 0.001,
            factor_time: 0.002,
            solve_time: 0.003,
            total_time: 0.006,
            iterations: 7,
            converged: true,
            final_relres: 3.2e-7,
            nnz_precond: 12,
            memory_ratio: 1.2,
            max_error: Some(1e-6),
        }
    }

    #[test]
    fn json_round_trip() {
        let r = sample();
        let text = serde_json::to_string(&r).unwrap();
        assert_eq!(serde_json::from_str::<RunReport>(&text).unwrap(), r);
    }

    #[test]
    fn non_finite_values_use_sentinels() {
        let mut r = sample();
        r.final_relres = f64::NAN;
        r.max_error = Some(f64::INFINITY);
        let text = serde_json::to_string(&r).unwrap();
        assert!(text.contains("\"final_relres\":\"nan\""), "{text}");
        assert!(text.contains("\"max_error\":\"inf\""), "{text}");
        let back: RunReport = serde_json::from_str(&text).unwrap();
        assert!(back.final_relres.is_nan());
        assert_eq!(back.max_error, Some(f64::INFINITY));
    }

    #[test]
    fn csv_appends_rows_under_one_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("runs.csv");
        let mut r = sample();
        emit_report(&r, ReportFormat::Csv, &path).unwrap();
        r.final_relres = f64::NAN;
        r.max_error = None;
        emit_report(&r, ReportFormat::Csv, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("matrix,n,nnz"));
        assert!(lines[2].contains(",nan,"));
        let mut rd = csv::Reader::from_path(&path).unwrap();
        let rows: Vec<RunReport> = rd.deserialize().collect::<Result<_, _>>().unwrap();
        assert_eq!(rows[0], sample());
        assert!(rows[1].final_relres.is_nan());
        assert_eq!(rows[1].max_error, None);
    }
}
