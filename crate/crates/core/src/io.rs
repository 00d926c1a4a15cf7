//! Dataset ingestion and artifact serialization.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibration::{AnnualSeries, CalibrationData, CaseSeries};
use crate::config::RunConfig;
use crate::scenario::{Trajectory, TrajectoryRow};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed CSV at line {line}: {message}")]
    Csv {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: PathBuf, column: String },
    #[error("{path}, line {line}: cannot parse `{value}` in column `{column}`")]
    Parse {
        path: PathBuf,
        line: u64,
        column: String,
        value: String,
    },
    #[error("{path}, line {line}: duplicate {what} {key}")]
    Duplicate {
        path: PathBuf,
        line: u64,
        what: &'static str,
        key: String,
    },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
    #[error("{path}: no data rows")]
    Empty { path: PathBuf },
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("missing datasets: {}", .0.join(", "))]
    MissingDatasets(Vec<String>),
    #[error("{path}: {key_path}: {message}")]
    Config {
        path: PathBuf,
        key_path: String,
        message: String,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetKind {
    Population,
    Gdp,
    Gcf,
    Cases,
    TradeoffPanel,
}

impl DatasetKind {
    pub const ALL: [Self; 5] = [
        Self::Population,
        Self::Gdp,
        Self::Gcf,
        Self::Cases,
        Self::TradeoffPanel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Population => "population",
            Self::Gdp => "gdp",
            Self::Gcf => "gcf",
            Self::Cases => "cases",
            Self::TradeoffPanel => "tradeoff-panel",
        }
    }

    /// Logical columns that must be mapped.
    pub fn required_columns(self) -> &'static [&'static str] {
        match self {
            Self::Population | Self::Gdp | Self::Gcf => &["year", "value"],
            Self::Cases => &["date", "confirmed", "deaths", "recovered"],
            Self::TradeoffPanel => &["gdp_shortfall", "infection_reduction"],
        }
    }

    /// Accepted units and the factor converting each to the base unit.
    pub fn units(self) -> &'static [(&'static str, f64)] {
        match self {
            Self::Population => &[("persons", 1.0), ("thousands", 1e3), ("millions", 1e6)],
            Self::Gdp | Self::Gcf => &[("usd", 1.0), ("million-usd", 1e6), ("billion-usd", 1e9)],
            Self::Cases => &[("persons", 1.0)],
            Self::TradeoffPanel => &[("percent", 1.0), ("fraction", 100.0)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub path: PathBuf,
    pub kind: DatasetKind,
    /// Logical column name to header in the file.
    pub columns: BTreeMap<String, String>,
    pub units: String,
}

impl DatasetEntry {
    pub fn validate(&self) -> Result<(), IoError> {
        for col in self.kind.required_columns() {
            if !self.columns.contains_key(*col) {
                return Err(IoError::Manifest(format!(
                    "{} dataset `{}` does not map column `{col}`",
                    self.kind.name(),
                    self.path.display()
                )));
            }
        }
        self.unit_factor().map(|_| ())
    }

    pub fn unit_factor(&self) -> Result<f64, IoError> {
        self.kind
            .units()
            .iter()
            .find(|(u, _)| *u == self.units)
            .map(|(_, f)| *f)
            .ok_or_else(|| {
                let allowed: Vec<&str> = self.kind.units().iter().map(|(u, _)| *u).collect();
                IoError::Manifest(format!(
                    "unit `{}` not valid for {} (allowed: {})",
                    self.units,
                    self.kind.name(),
                    allowed.join(", ")
                ))
            })
    }

    fn header(&self, logical: &str) -> &str {
        &self.columns[logical]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub datasets: Vec<DatasetEntry>,
    /// Directory that relative dataset paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

pub const MANIFEST_FILE: &str = "manifest.json";

impl DatasetManifest {
    pub fn load(dir: &Path) -> Result<Self, IoError> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        let mut de = serde_json::Deserializer::from_str(&text);
        let mut manifest: Self =
            serde_path_to_error::deserialize(&mut de).map_err(|e| IoError::Config {
                path: path.clone(),
                key_path: e.path().to_string(),
                message: e.inner().to_string(),
            })?;
        manifest.base_dir = dir.to_path_buf();
        for entry in &manifest.datasets {
            entry.validate()?;
        }
        Ok(manifest)
    }

    pub fn entry(&self, kind: DatasetKind) -> Option<&DatasetEntry> {
        self.datasets.iter().find(|d| d.kind == kind)
    }

    pub fn resolve(&self, entry: &DatasetEntry) -> PathBuf {
        if entry.path.is_absolute() {
            entry.path.clone()
        } else {
            self.base_dir.join(&entry.path)
        }
    }
}

struct Table {
    path: PathBuf,
    headers: Vec<String>,
    /// `(line number, cells)`
    rows: Vec<(u64, Vec<String>)>,
}

impl Table {
    fn read(path: &Path) -> Result<Self, IoError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| csv_err(path, e))?;
        let headers = reader
            .headers()
            .map_err(|e| csv_err(path, e))?
            .iter()
            .map(str::to_owned)
            .collect();
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| csv_err(path, e))?;
            let line = rec.position().map_or(0, |p| p.line());
            rows.push((line, rec.iter().map(str::to_owned).collect()));
        }
        if rows.is_empty() {
            return Err(IoError::Empty {
                path: path.to_path_buf(),
            });
        }
        Ok(Self {
            path: path.to_path_buf(),
            headers,
            rows,
        })
    }

    fn index(&self, header: &str) -> Result<usize, IoError> {
        self.headers
            .iter()
            .position(|h| h == header)
            .ok_or_else(|| IoError::MissingColumn {
                path: self.path.clone(),
                column: header.into(),
            })
    }

    fn parse<T: std::str::FromStr>(
        &self,
        line: u64,
        column: &str,
        cell: &str,
    ) -> Result<T, IoError> {
        cell.parse().map_err(|_| IoError::Parse {
            path: self.path.clone(),
            line,
            column: column.into(),
            value: cell.into(),
        })
    }

    fn number(&self, line: u64, column: &str, cell: &str) -> Result<f64, IoError> {
        let v: f64 = self.parse(line, column, cell)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(IoError::Parse {
                path: self.path.clone(),
                line,
                column: column.into(),
                value: cell.into(),
            })
        }
    }
}

fn csv_err(path: &Path, e: csv::Error) -> IoError {
    if let csv::ErrorKind::Io(_) = e.kind() {
        let csv::ErrorKind::Io(inner) = e.into_kind() else {
            unreachable!()
        };
        return IoError::Io {
            path: path.to_path_buf(),
            source: inner,
        };
    }
    IoError::Csv {
        path: path.to_path_buf(),
        line: e.position().map_or(0, |p| p.line()),
        message: e.to_string(),
    }
}

/// Year-indexed series in base units, sorted by year.
pub fn load_annual_series(
    manifest: &DatasetManifest,
    entry: &DatasetEntry,
) -> Result<AnnualSeries, IoError> {
    entry.validate()?;
    let path = manifest.resolve(entry);
    let table = Table::read(&path)?;
    let factor = entry.unit_factor()?;
    let (year_col, value_col) = (entry.header("year"), entry.header("value"));
    let (yi, vi) = (table.index(year_col)?, table.index(value_col)?);
    let mut seen: BTreeMap<i32, (u64, f64)> = BTreeMap::new();
    for (line, cells) in &table.rows {
        let year: i32 = table.parse(*line, year_col, &cells[yi])?;
        let value = table.number(*line, value_col, &cells[vi])? * factor;
        if seen.insert(year, (*line, value)).is_some() {
            return Err(IoError::Duplicate {
                path,
                line: *line,
                what: "year",
                key: year.to_string(),
            });
        }
    }
    let (years, values): (Vec<i32>, Vec<f64>) = seen.into_iter().map(|(y, (_, v))| (y, v)).unzip();
    AnnualSeries::new(years, values).map_err(|e| IoError::Invalid {
        path,
        message: e.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Repair {
    pub date: NaiveDate,
    pub column: String,
    pub reported: f64,
    pub repaired: f64,
}

/// Downward corrections replaced by the running maximum of each cumulative
/// column.
pub fn load_case_series(
    manifest: &DatasetManifest,
    entry: &DatasetEntry,
) -> Result<(CaseSeries, Vec<Repair>), IoError> {
    entry.validate()?;
    let path = manifest.resolve(entry);
    let table = Table::read(&path)?;
    let names = ["date", "confirmed", "deaths", "recovered"].map(|c| entry.header(c).to_owned());
    let idx = names
        .iter()
        .map(|n| table.index(n))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows: BTreeMap<NaiveDate, (u64, [f64; 3])> = BTreeMap::new();
    for (line, cells) in &table.rows {
        let date: NaiveDate = table.parse(*line, &names[0], &cells[idx[0]])?;
        let mut vals = [0.0; 3];
        for k in 0..3 {
            let v = table.number(*line, &names[k + 1], &cells[idx[k + 1]])?;
            if v < 0.0 {
                return Err(IoError::Parse {
                    path: path.clone(),
                    line: *line,
                    column: names[k + 1].clone(),
                    value: cells[idx[k + 1]].clone(),
                });
            }
            vals[k] = v;
        }
        if rows.insert(date, (*line, vals)).is_some() {
            return Err(IoError::Duplicate {
                path,
                line: *line,
                what: "date",
                key: date.to_string(),
            });
        }
    }
    let mut cases = CaseSeries {
        dates: Vec::with_capacity(rows.len()),
        confirmed: Vec::with_capacity(rows.len()),
        recovered: Vec::with_capacity(rows.len()),
        deaths: Vec::with_capacity(rows.len()),
    };
    let mut repairs = Vec::new();
    let mut running = [0.0f64; 3];
    for (date, (_, vals)) in rows {
        let mut fixed = vals;
        for k in 0..3 {
            if vals[k] < running[k] {
                repairs.push(Repair {
                    date,
                    column: names[k + 1].clone(),
                    reported: vals[k],
                    repaired: running[k],
                });
                fixed[k] = running[k];
            }
            running[k] = fixed[k];
        }
        cases.dates.push(date);
        cases.confirmed.push(fixed[0]);
        cases.deaths.push(fixed[1]);
        cases.recovered.push(fixed[2]);
    }
    Ok((cases, repairs))
}

/// Paired `(GDP shortfall %, infection-rate reduction %)` observations.
pub fn load_tradeoff_panel(
    manifest: &DatasetManifest,
    entry: &DatasetEntry,
) -> Result<(Vec<f64>, Vec<f64>), IoError> {
    entry.validate()?;
    let path = manifest.resolve(entry);
    let table = Table::read(&path)?;
    let factor = entry.unit_factor()?;
    let (xc, yc) = (
        entry.header("gdp_shortfall"),
        entry.header("infection_reduction"),
    );
    let (xi, yi) = (table.index(xc)?, table.index(yc)?);
    let mut x = Vec::with_capacity(table.rows.len());
    let mut y = Vec::with_capacity(table.rows.len());
    for (line, cells) in &table.rows {
        x.push(table.number(*line, xc, &cells[xi])? * factor);
        y.push(table.number(*line, yc, &cells[yi])? * factor);
    }
    Ok((x, y))
}

/// Everything calibration needs, with the case-repair log.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub data: CalibrationData,
    pub repairs: Vec<Repair>,
}

pub fn load_calibration_data(dir: &Path) -> Result<LoadedData, IoError> {
    let manifest_path = dir.join(MANIFEST_FILE);
    if !manifest_path.exists() {
        return Err(IoError::MissingDatasets(
            std::iter::once(format!("{} (dataset manifest)", manifest_path.display()))
                .chain(DatasetKind::ALL.iter().map(|k| k.name().to_owned()))
                .collect(),
        ));
    }
    let manifest = DatasetManifest::load(dir)?;
    let missing: Vec<String> = DatasetKind::ALL
        .iter()
        .filter_map(|&k| match manifest.entry(k) {
            None => Some(format!("{} (not in manifest)", k.name())),
            Some(e) if !manifest.resolve(e).exists() => {
                Some(format!("{} ({})", k.name(), manifest.resolve(e).display()))
            }
            Some(_) => None,
        })
        .collect();
    if !missing.is_empty() {
        return Err(IoError::MissingDatasets(missing));
    }
    let get = |k| manifest.entry(k).expect("checked above");
    let (cases, repairs) = load_case_series(&manifest, get(DatasetKind::Cases))?;
    let (x, y) = load_tradeoff_panel(&manifest, get(DatasetKind::TradeoffPanel))?;
    Ok(LoadedData {
        data: CalibrationData {
            population: load_annual_series(&manifest, get(DatasetKind::Population))?,
            gdp: load_annual_series(&manifest, get(DatasetKind::Gdp))?,
            gcf: load_annual_series(&manifest, get(DatasetKind::Gcf))?,
            cases,
            gdp_shortfall_pct: x,
            infection_reduction_pct: y,
        },
        repairs,
    })
}

/// Write to a sibling temporary file, then rename over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(path))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| IoError::Io {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| IoError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut de = serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| IoError::Config {
        path: path.to_path_buf(),
        key_path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

pub fn trajectory_csv(rows: &[TrajectoryRow]) -> String {
    let mut out = TrajectoryRow::COLUMNS.join(",");
    out.push('\n');
    for r in rows {
        // Display for f64 prints the shortest string that parses back exactly
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.date, r.n, r.s, r.i, r.r, r.d, r.a, r.k, r.y, r.c, r.h, r.p
        );
    }
    out
}

pub fn write_trajectory(trajectory: &Trajectory, path: &Path) -> Result<(), IoError> {
    write_atomic(path, trajectory_csv(&trajectory.rows).as_bytes())
}

pub fn read_trajectory(path: &Path) -> Result<Vec<TrajectoryRow>, IoError> {
    let table = Table::read(path)?;
    if table.headers != TrajectoryRow::COLUMNS {
        return Err(IoError::Invalid {
            path: path.to_path_buf(),
            message: format!(
                "expected header `{}`, found `{}`",
                TrajectoryRow::COLUMNS.join(","),
                table.headers.join(",")
            ),
        });
    }
    table
        .rows
        .iter()
        .map(|(line, c)| {
            let col = TrajectoryRow::COLUMNS;
            let num = |k: usize| table.number(*line, col[k], &c[k]);
            Ok(TrajectoryRow {
                date: table.parse(*line, "date", &c[0])?,
                n: num(1)?,
                s: num(2)?,
                i: num(3)?,
                r: num(4)?,
                d: num(5)?,
                a: num(6)?,
                k: num(7)?,
                y: num(8)?,
                c: num(9)?,
                h: num(10)?,
                p: num(11)?,
            })
        })
        .collect()
}

pub fn load_config(path: &Path) -> Result<RunConfig, IoError> {
    read_json(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputEntry {
    pub file: String,
    pub kind: String,
    pub description: String,
}

/// Index of everything a command wrote into its output directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputManifest {
    pub command: String,
    pub params_fingerprint: Option<String>,
    pub files: Vec<OutputEntry>,
}

impl OutputManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.into(),
            ..Default::default()
        }
    }

    pub fn add(&mut self, file: impl Into<String>, kind: &str, description: impl Into<String>) {
        self.files.push(OutputEntry {
            file: file.into(),
            kind: kind.into(),
            description: description.into(),
        });
    }

    pub fn write(&self, dir: &Path) -> Result<(), IoError> {
        write_json(&dir.join(MANIFEST_FILE), self)
    }
}

pub fn ensure_dir(dir: &Path) -> Result<(), IoError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}
