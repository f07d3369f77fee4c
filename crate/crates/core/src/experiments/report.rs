//! Experiment reports: JSON sidecar plus CSV tables.
//!
//! Files written by [`export_report`] for an experiment named `E`:
//!
//! * `E.json` — the full [`Report`]; non-finite reals are stored as the strings
//!   `"inf"`, `"-inf"`, `"nan"`.
//! * `E_norms.csv` — `quantity,s,p,q,r,window_start,window_end,value`.
//! * `E_blocks.csv` — `row,quantity,j,value`, the per-block profile of each
//!   norm row (`row` is the 0-based line of `E_norms.csv`).
//! * `E_<table>.csv` — one file per named series, header = column names.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::lp::NormSample;

/// f64 that survives JSON, including ±∞ and NaN.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Default)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v = self.0;
        if v.is_finite() {
            s.serialize_f64(v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Real(v)),
            Raw::Text(t) => match t.as_str() {
                "inf" => Ok(Real(f64::INFINITY)),
                "-inf" => Ok(Real(f64::NEG_INFINITY)),
                "nan" => Ok(Real(f64::NAN)),
                other => Err(serde::de::Error::custom(format!("not a real: {other}"))),
            },
        }
    }
}

mod real {
    use super::Real;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        Real(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Real::deserialize(d)?.0)
    }
}

mod real_opt {
    use super::Real;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.map(Real).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Ok(Option::<Real>::deserialize(d)?.map(|r| r.0))
    }
}

mod real_map {
    use std::collections::BTreeMap;

    use super::Real;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &BTreeMap<String, f64>, s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|(k, x)| (k.clone(), Real(*x))).collect::<BTreeMap<_, _>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, f64>, D::Error> {
        Ok(BTreeMap::<String, Real>::deserialize(d)?.into_iter().map(|(k, r)| (k, r.0)).collect())
    }
}

mod real_rows {
    use super::Real;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|r| r.iter().map(|x| Real(*x)).collect::<Vec<_>>()).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<f64>>, D::Error> {
        Ok(Vec::<Vec<Real>>::deserialize(d)?.into_iter().map(|r| r.into_iter().map(|x| x.0).collect()).collect())
    }
}

mod real_profile {
    use super::Real;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[(i32, f64)], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|(j, x)| (*j, Real(*x))).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<(i32, f64)>, D::Error> {
        Ok(Vec::<(i32, Real)>::deserialize(d)?.into_iter().map(|(j, r)| (j, r.0)).collect())
    }
}

/// One headline norm with its block evidence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormRecord {
    pub quantity: String,
    #[serde(with = "real")]
    pub s: f64,
    #[serde(with = "real")]
    pub p: f64,
    #[serde(with = "real")]
    pub q: f64,
    #[serde(with = "real_opt")]
    pub r: Option<f64>,
    #[serde(with = "real_opt")]
    pub window_start: Option<f64>,
    #[serde(with = "real_opt")]
    pub window_end: Option<f64>,
    #[serde(with = "real")]
    pub value: f64,
    #[serde(with = "real_profile")]
    pub profile: Vec<(i32, f64)>,
}

impl NormRecord {
    pub fn from_sample(quantity: impl Into<String>, ns: &NormSample) -> Self {
        NormRecord {
            quantity: quantity.into(),
            s: ns.index.s,
            p: ns.index.p,
            q: ns.index.q,
            r: ns.index.r,
            window_start: ns.time_window.map(|w| w.0),
            window_end: ns.time_window.map(|w| w.1),
            value: ns.value,
            profile: ns.block_profile.clone(),
        }
    }

    pub fn at_time(mut self, t: f64) -> Self {
        self.window_start = Some(t);
        self.window_end = Some(t);
        self
    }
}

/// Column-oriented numeric table.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    #[serde(with = "real_rows")]
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

/// Machine-readable outcome of one experiment.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub experiment: String,
    pub version: String,
    pub seed: u64,
    /// Configurations outside the proven regimes are reported but not asserted.
    pub exploratory: bool,
    /// Echo of the effective configuration.
    pub config: BTreeMap<String, String>,
    #[serde(with = "real_map")]
    pub scalars: BTreeMap<String, f64>,
    /// Hard assertions; the run fails iff one of them is false.
    pub checks: BTreeMap<String, bool>,
    /// Soft outcomes (e.g. an inconclusive decay search).
    pub flags: BTreeMap<String, bool>,
    pub norms: Vec<NormRecord>,
    pub tables: BTreeMap<String, Table>,
}

impl Report {
    pub fn new(experiment: impl Into<String>) -> Self {
        Report { experiment: experiment.into(), version: env!("CARGO_PKG_VERSION").to_string(), ..Default::default() }
    }

    pub fn scalar(&mut self, key: impl Into<String>, v: f64) {
        self.scalars.insert(key.into(), v);
    }

    pub fn check(&mut self, key: impl Into<String>, ok: bool) {
        self.checks.insert(key.into(), ok);
    }

    pub fn flag(&mut self, key: impl Into<String>, v: bool) {
        self.flags.insert(key.into(), v);
    }

    pub fn passed(&self) -> bool {
        self.exploratory || self.checks.values().all(|&b| b)
    }

    /// Names of failed checks.
    pub fn failures(&self) -> Vec<&str> {
        self.checks.iter().filter(|(_, &v)| !v).map(|(k, _)| k.as_str()).collect()
    }
}

fn io_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Writes the JSON sidecar and CSV files into `dir` (created if absent); returns the paths.
pub fn export_report(report: &Report, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let name = &report.experiment;
    let mut out = Vec::new();

    let json = dir.join(format!("{name}.json"));
    fs::write(&json, serde_json::to_string_pretty(report)?)?;
    out.push(json);

    let norms = dir.join(format!("{name}_norms.csv"));
    let mut w = csv::Writer::from_path(&norms).map_err(io_err)?;
    w.write_record(["quantity", "s", "p", "q", "r", "window_start", "window_end", "value"]).map_err(io_err)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for n in &report.norms {
        w.write_record([
            n.quantity.clone(),
            n.s.to_string(),
            n.p.to_string(),
            n.q.to_string(),
            opt(n.r),
            opt(n.window_start),
            opt(n.window_end),
            n.value.to_string(),
        ])
        .map_err(io_err)?;
    }
    w.flush()?;
    out.push(norms);

    let blocks = dir.join(format!("{name}_blocks.csv"));
    let mut w = csv::Writer::from_path(&blocks).map_err(io_err)?;
    w.write_record(["row", "quantity", "j", "value"]).map_err(io_err)?;
    for (i, n) in report.norms.iter().enumerate() {
        for (j, v) in &n.profile {
            w.write_record([i.to_string(), n.quantity.clone(), j.to_string(), v.to_string()]).map_err(io_err)?;
        }
    }
    w.flush()?;
    out.push(blocks);

    for (tname, t) in &report.tables {
        let path = dir.join(format!("{name}_{tname}.csv"));
        let mut w = csv::Writer::from_path(&path).map_err(io_err)?;
        w.write_record(&t.columns).map_err(io_err)?;
        for row in &t.rows {
            w.write_record(row.iter().map(|v| v.to_string())).map_err(io_err)?;
        }
        w.flush()?;
        out.push(path);
    }
    Ok(out)
}

/// Reads `dir/<experiment>.json`.
pub fn import_report(dir: impl AsRef<Path>, experiment: &str) -> Result<Report> {
    let text = fs::read_to_string(dir.as_ref().join(format!("{experiment}.json")))?;
    Ok(serde_json::from_str(&text)?)
}

/// Reads a numeric CSV written by [`export_report`].
pub fn read_table(path: impl AsRef<Path>) -> Result<Table> {
    let mut r = csv::Reader::from_path(path).map_err(io_err)?;
    let columns = r.headers().map_err(io_err)?.iter().map(|s| s.to_string()).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(io_err)?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| Error::InvalidArgument(format!("non-numeric cell `{s}`"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(Table { columns, rows })
}
