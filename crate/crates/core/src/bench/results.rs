//! Result table rows and their CSV/JSON renderings.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Analytic,
    Simulation,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Analytic => write!(f, "analytic"),
            Source::Simulation => write!(f, "simulation"),
        }
    }
}

/// One (case, N, policy, source) point.
///
/// Delay and density columns hold the natural quantity of each source:
/// for SpCDC the analytic PDR is its lower bound and the analytic delay is
/// the channel-access delay including the own transmission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub case_id: String,
    pub n_vehicles: usize,
    pub policy: String,
    pub source: Source,
    #[serde(deserialize_with = "nan_from_null")]
    pub pdr: f64,
    /// Half-width of the 99% interval; empty for analytic rows.
    pub pdr_ci: Option<f64>,
    #[serde(deserialize_with = "nan_from_null")]
    pub mean_delay_s: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub mean_reception_delay_s: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub contention_density: f64,
    pub overload_drops: u64,
    pub generated: u64,
    pub runtime_s: f64,
    pub seed: Option<u64>,
    /// Empty unless the point failed.
    pub errors: String,
}

/// JSON has no NaN; failed rows serialise it as `null`.
fn nan_from_null<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

impl ResultRow {
    pub fn failed(&self) -> bool {
        !self.errors.is_empty()
    }

    /// Lower edge of the PDR interval, the point estimate without one.
    pub fn pdr_lower_edge(&self) -> f64 {
        self.pdr - self.pdr_ci.unwrap_or(0.0)
    }

    pub fn overload_fraction(&self) -> f64 {
        if self.generated == 0 {
            0.0
        } else {
            self.overload_drops as f64 / self.generated as f64
        }
    }

    /// Everything except the wall-clock column.
    pub fn same_result(&self, other: &ResultRow) -> bool {
        let mut a = self.clone();
        a.runtime_s = other.runtime_s;
        a == *other
    }
}

/// Sort key of the written table: case order as given, then N, policy, source.
pub fn sort_rows(rows: &mut [ResultRow], case_order: &[String]) {
    let rank = |id: &str| case_order.iter().position(|c| c == id).unwrap_or(usize::MAX);
    rows.sort_by(|a, b| {
        rank(&a.case_id)
            .cmp(&rank(&b.case_id))
            .then_with(|| a.case_id.cmp(&b.case_id))
            .then(a.n_vehicles.cmp(&b.n_vehicles))
            .then_with(|| a.policy.cmp(&b.policy))
            .then(a.source.cmp(&b.source))
    });
}

/// Appends rows to a CSV file as they are produced, so a crashed sweep
/// keeps everything finished so far.
pub struct RowSink {
    writer: csv::Writer<std::fs::File>,
}

impl RowSink {
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        Ok(Self {
            writer: csv::Writer::from_path(path)?,
        })
    }

    pub fn push(&mut self, row: &ResultRow) -> Result<()> {
        self.writer.serialize(row)?;
        self.writer.flush()?;
        Ok(())
    }
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(CSV_HEADER)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<std::result::Result<Vec<_>, _>>()?)
}

pub fn write_json<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, rows)?;
    Ok(())
}

pub fn read_json<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    Ok(serde_json::from_reader(input)?)
}

/// Reads `results.csv` or `results.json`, chosen by extension.
pub fn load(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        read_json(file)
    } else {
        read_csv(file)
    }
}

/// Writes `results.csv` and `results.json` into `dir`, replacing any
/// partial file atomically.
pub fn save(rows: &[ResultRow], dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join("results.csv.tmp");
    write_csv(rows, std::fs::File::create(&tmp)?)?;
    std::fs::rename(&tmp, dir.join("results.csv"))?;
    write_json(rows, std::fs::File::create(dir.join("results.json"))?)?;
    Ok(())
}

pub const CSV_HEADER: [&str; 14] = [
    "case_id",
    "n_vehicles",
    "policy",
    "source",
    "pdr",
    "pdr_ci",
    "mean_delay_s",
    "mean_reception_delay_s",
    "contention_density",
    "overload_drops",
    "generated",
    "runtime_s",
    "seed",
    "errors",
];

#[cfg(test)]
mod tests {
    use super::*;

    fn row(case: &str, n: usize, policy: &str, source: Source) -> ResultRow {
        ResultRow {
            case_id: case.into(),
            n_vehicles: n,
            policy: policy.into(),
            source,
            pdr: 0.9,
            pdr_ci: (source == Source::Simulation).then_some(0.01),
            mean_delay_s: 1e-3,
            mean_reception_delay_s: 2e-3,
            contention_density: 1.5,
            overload_drops: 0,
            generated: 100,
            runtime_s: 0.1,
            seed: (source == Source::Simulation).then_some(1),
            errors: String::new(),
        }
    }

    #[test]
    fn header_matches_field_order() {
        let mut buf = Vec::new();
        write_csv(&[row("a", 10, "spcdc", Source::Analytic)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
        let mut empty = Vec::new();
        write_csv(&[], &mut empty).unwrap();
        assert_eq!(String::from_utf8(empty).unwrap().trim_end(), CSV_HEADER.join(","));
        assert!(read_csv(&CSV_HEADER.join(",").into_bytes()[..])
            .unwrap()
            .is_empty());
    }

    #[test]
    fn failed_rows_survive_json() {
        let mut r = row("a", 10, "spcdc", Source::Analytic);
        r.pdr = f64::NAN;
        r.errors = "saturated".into();
        let mut buf = Vec::new();
        write_json(&[r], &mut buf).unwrap();
        let back = read_json(&buf[..]).unwrap();
        assert!(back[0].pdr.is_nan());
        assert_eq!(back[0].errors, "saturated");
    }

    #[test]
    fn rows_sort_by_case_order_then_grid() {
        let mut rows = vec![
            row("b", 10, "spcdc", Source::Simulation),
            row("a", 20, "dot11p:16", Source::Analytic),
            row("b", 10, "dot11p:16", Source::Simulation),
            row("b", 10, "dot11p:16", Source::Analytic),
        ];
        sort_rows(&mut rows, &["b".into(), "a".into()]);
        let keys: Vec<_> = rows
            .iter()
            .map(|r| (r.case_id.as_str(), r.policy.as_str(), r.source))
            .collect();
        assert_eq!(
            keys,
            [
                ("b", "dot11p:16", Source::Analytic),
                ("b", "dot11p:16", Source::Simulation),
                ("b", "spcdc", Source::Simulation),
                ("a", "dot11p:16", Source::Analytic),
            ]
        );
    }
}
