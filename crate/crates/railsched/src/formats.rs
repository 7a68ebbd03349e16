//! On-disk formats: route and scenario TOML, timetable and OD CSV, and
//! line-delimited JSON output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use railsched_core::agents::{parse_hms, Hms, PostAction, Timetable, TimetableEntry, TimetableError};
use railsched_core::harness::Scenario;
use railsched_core::passenger::{ArrivalMode, OdError, OdMatrix, OdRecord};
use railsched_core::route::{RouteConfig, RouteError, RouteModel};
use railsched_core::sim::{Disruption, SimParams};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    TomlWrite(#[from] toml::ser::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Route(#[from] RouteError),
    #[error(transparent)]
    Timetable(#[from] TimetableError),
    #[error(transparent)]
    Od(#[from] OdError),
    #[error("line {line}: {msg}")]
    Field { line: u64, msg: String },
    #[error("{0}")]
    Invalid(String),
}

pub fn read_text(path: &Path) -> Result<String, FormatError> {
    fs::read_to_string(path).map_err(|source| FormatError::Io { path: path.to_path_buf(), source })
}

/// Write through a sibling temporary file and rename, so readers never see
/// a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), FormatError> {
    let io = |source| FormatError::Io { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let mut f = fs::File::create(&tmp).map_err(io)?;
    f.write_all(bytes).map_err(io)?;
    f.sync_all().map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

/// Rolling stock shared by every train in the timetable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RollingStock {
    pub length_m: f64,
    pub capacity: u32,
}

impl Default for RollingStock {
    fn default() -> Self {
        RollingStock { length_m: 100.0, capacity: 600 }
    }
}

/// A route file: the line itself plus optional rolling stock and dynamics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteFile {
    #[serde(default)]
    pub rolling_stock: RollingStock,
    #[serde(default)]
    pub dynamics: SimParams,
    #[serde(flatten)]
    pub line: RouteConfig,
}

impl RouteFile {
    pub fn parse(text: &str) -> Result<RouteFile, FormatError> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String, FormatError> {
        Ok(toml::to_string(self)?)
    }

    pub fn model(&self) -> Result<RouteModel, FormatError> {
        Ok(RouteModel::from_config(&self.line)?)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TimetableRow {
    train: String,
    station: String,
    #[serde(rename = "arrive_hms")]
    arrive: String,
    #[serde(rename = "depart_hms")]
    depart: String,
    platform: String,
    post_action: String,
}

/// Timetable CSV: `train,station,arrive_hms,depart_hms,platform,post_action` with
/// station and platform ids and `HH:MM:SS` times.
pub fn parse_timetable(text: &str, model: &RouteModel) -> Result<Timetable, FormatError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let mut entries = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let row: TimetableRow = rec.deserialize(Some(&headers))?;
        let l = line as usize;
        let station = model
            .station_by_name(&row.station)
            .map_err(|_| TimetableError::UnknownStation { line: l, station: row.station.clone() })?;
        let platform =
            model.stations[station.index()].platforms.iter().position(|p| p.id == row.platform).ok_or_else(|| {
                TimetableError::UnknownPlatform {
                    line: l,
                    station: row.station.clone(),
                    platform: row.platform.clone(),
                }
            })?;
        let time = |v: &str| parse_hms(v).ok_or_else(|| TimetableError::BadTime { line: l, value: v.to_string() });
        let post_action = PostAction::parse(&row.post_action)
            .ok_or_else(|| TimetableError::BadAction { line: l, value: row.post_action.clone() })?;
        entries.push(TimetableEntry {
            train: row.train,
            station,
            arrive_s: time(&row.arrive)?,
            depart_s: time(&row.depart)?,
            platform,
            post_action,
        });
    }
    let tt = Timetable { entries };
    tt.validate(model)?;
    Ok(tt)
}

pub fn timetable_to_csv(tt: &Timetable, model: &RouteModel) -> Result<String, FormatError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for e in &tt.entries {
        let st = &model.stations[e.station.index()];
        w.serialize(TimetableRow {
            train: e.train.clone(),
            station: st.id.clone(),
            arrive: Hms(e.arrive_s).to_string(),
            depart: Hms(e.depart_s).to_string(),
            platform: st.platforms[e.platform].id.clone(),
            post_action: e.post_action.as_str().to_string(),
        })?;
    }
    finish_csv(w)
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String, FormatError> {
    let bytes = w.into_inner().map_err(|e| FormatError::Invalid(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| FormatError::Invalid(e.to_string()))
}

#[derive(Debug, Serialize, Deserialize)]
struct OdRow {
    origin: String,
    destination: String,
    bucket_start_s: u32,
    #[serde(default = "default_bucket")]
    bucket_s: u32,
    rate_pps: f64,
}

fn default_bucket() -> u32 {
    DEFAULT_BUCKET_S
}

/// Bucket width when the OD file has no `bucket_s` column.
pub const DEFAULT_BUCKET_S: u32 = 3600;

/// OD CSV: `origin,destination,bucket_start_s,rate_pps` with station ids,
/// plus an optional `bucket_s` width column shared by every row. Absent
/// pairs have rate zero.
pub fn parse_od(text: &str, model: &RouteModel) -> Result<OdMatrix, FormatError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let mut records = Vec::new();
    let mut width: Option<u32> = None;
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let row: OdRow = rec.deserialize(Some(&headers))?;
        let field = |msg: String| FormatError::Field { line, msg };
        if *width.get_or_insert(row.bucket_s) != row.bucket_s {
            return Err(field(format!("bucket width {} differs from earlier rows", row.bucket_s)));
        }
        records.push(OdRecord {
            origin: model.station_by_name(&row.origin)?,
            destination: model.station_by_name(&row.destination)?,
            bucket_start_s: row.bucket_start_s,
            rate_pps: row.rate_pps,
        });
    }
    Ok(OdMatrix::from_records(model.stations.len(), width.unwrap_or(DEFAULT_BUCKET_S), &records)?)
}

pub fn od_to_csv(od: &OdMatrix, model: &RouteModel) -> Result<String, FormatError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in od.records() {
        w.serialize(OdRow {
            origin: model.stations[r.origin.index()].id.clone(),
            destination: model.stations[r.destination.index()].id.clone(),
            bucket_start_s: r.bucket_start_s,
            bucket_s: od.bucket_s(),
            rate_pps: r.rate_pps,
        })?;
    }
    finish_csv(w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisruptionFile {
    pub blocks: Vec<String>,
    /// Time of day, seconds.
    pub start_s: u32,
    pub duration_s: u32,
}

/// A scenario file. Control assignment is defined for one disrupted span,
/// so at most one disruption record is accepted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub name: String,
    /// Run start as `HH:MM:SS`; service start when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon_s: Option<u32>,
    #[serde(default)]
    pub arrivals: ArrivalMode,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub disruptions: Vec<DisruptionFile>,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<ScenarioFile, FormatError> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String, FormatError> {
        Ok(toml::to_string(self)?)
    }

    pub fn resolve(&self, model: &RouteModel) -> Result<Scenario, FormatError> {
        let disruption = match self.disruptions.as_slice() {
            [] => None,
            [d] => {
                if d.blocks.is_empty() || d.duration_s == 0 {
                    return Err(FormatError::Invalid("a disruption needs blocks and a positive duration".into()));
                }
                let blocks = d.blocks.iter().map(|b| model.block_by_name(b)).collect::<Result<Vec<_>, _>>()?;
                Some(Disruption { blocks, start: d.start_s, duration: d.duration_s })
            }
            _ => return Err(FormatError::Invalid("at most one disruption per scenario is supported".into())),
        };
        let start = match self.start.as_deref() {
            Some(v) => Some(parse_hms(v).ok_or_else(|| FormatError::Invalid(format!("bad time {v}")))?),
            None => None,
        };
        Ok(Scenario { name: self.name.clone(), disruption, start_s: start, arrivals: self.arrivals })
    }
}

/// One JSON document per line.
pub fn to_jsonl<'a, T: Serialize + 'a>(items: impl IntoIterator<Item = &'a T>) -> Result<String, FormatError> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item)?);
        out.push('\n');
    }
    Ok(out)
}
