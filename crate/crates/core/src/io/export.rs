//! Per-vertex field exports and point-set exports in CSV or JSON.
//!
//! CSV files start with `#` lines: a title, then `# metadata <json>` holding
//! [`ExportMetadata`] on one line. Field columns are
//! `vertex,angle,magnitude,x,y,z,u,v`; `x,y,z` (extrinsic vector) and `u,v`
//! (log-map coordinates) are empty when absent. Floats use the shortest
//! representation that parses back to the same value.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::IoError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = IoError;
    fn from_str(s: &str) -> Result<Self, IoError> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(IoError::Invalid {
                what: "format",
                message: format!("'{s}' (expected csv or json)"),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldKind {
    /// Tangent vectors: `angle` in the vertex polar frame, `magnitude`.
    Vector,
    /// Scalars stored in `magnitude` with `angle = 0`.
    Scalar,
    /// Log map: `angle = φ`, `magnitude = r`, plus `u, v`.
    LogMap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportMetadata {
    pub schema_version: u32,
    pub tool: String,
    pub tool_version: String,
    pub kind: FieldKind,
    pub mesh_checksum: String,
    pub vertex_count: usize,
    pub t: f64,
    pub t_multiplier: f64,
    pub degree: u32,
    pub intrinsic_delaunay: bool,
    /// The run configuration, for re-running.
    pub provenance: serde_json::Value,
}

impl ExportMetadata {
    pub fn new(kind: FieldKind, mesh_checksum: String, vertex_count: usize) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME").to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            kind,
            mesh_checksum,
            vertex_count,
            t: 0.0,
            t_multiplier: 1.0,
            degree: 1,
            intrinsic_delaunay: true,
            provenance: serde_json::Value::Null,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldRecord {
    pub vertex: usize,
    pub angle: f64,
    pub magnitude: f64,
    pub extrinsic: Option<[f64; 3]>,
    pub uv: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldExport {
    pub metadata: ExportMetadata,
    pub records: Vec<FieldRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    vertex: usize,
    angle: f64,
    magnitude: f64,
    x: Option<f64>,
    y: Option<f64>,
    z: Option<f64>,
    u: Option<f64>,
    v: Option<f64>,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    std::fs::write(path, bytes).map_err(|source| IoError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn read_file(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.to_path_buf(),
        source,
    })
}

/// Splits leading `#` lines off a CSV document and returns the metadata JSON
/// and the remaining body.
fn split_header<'a>(text: &'a str, title: &str) -> Result<(&'a str, &'a str), IoError> {
    let mut metadata = None;
    let mut rest = text;
    let mut line_no = 0;
    while let Some(line) = rest.strip_prefix('#') {
        line_no += 1;
        let (line, tail) = line.split_once('\n').unwrap_or((line, ""));
        let line = line.trim();
        if let Some(json) = line.strip_prefix("metadata ") {
            metadata = Some(json);
        } else if line_no == 1 && line != title {
            return Err(IoError::Parse {
                line: 1,
                message: format!("expected '# {title}' header"),
            });
        }
        rest = tail;
    }
    let metadata = metadata.ok_or(IoError::Parse {
        line: line_no.max(1),
        message: "missing '# metadata' line".into(),
    })?;
    Ok((metadata, rest))
}

impl FieldExport {
    const TITLE: &'static str = "vector-heat field";

    pub fn to_csv(&self) -> Result<String, IoError> {
        let mut out = format!(
            "# {}\n# metadata {}\n",
            Self::TITLE,
            serde_json::to_string(&self.metadata)?
        );
        let mut w = csv::Writer::from_writer(Vec::new());
        if self.records.is_empty() {
            w.write_record(["vertex", "angle", "magnitude", "x", "y", "z", "u", "v"])?;
        }
        for r in &self.records {
            w.serialize(CsvRow {
                vertex: r.vertex,
                angle: r.angle,
                magnitude: r.magnitude,
                x: r.extrinsic.map(|e| e[0]),
                y: r.extrinsic.map(|e| e[1]),
                z: r.extrinsic.map(|e| e[2]),
                u: r.uv.map(|e| e[0]),
                v: r.uv.map(|e| e[1]),
            })?;
        }
        let bytes = w.into_inner().map_err(|e| IoError::Invalid {
            what: "csv",
            message: e.to_string(),
        })?;
        out.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
        Ok(out)
    }

    pub fn from_csv(text: &str) -> Result<Self, IoError> {
        let (meta, body) = split_header(text, Self::TITLE)?;
        let metadata: ExportMetadata = serde_json::from_str(meta)?;
        let mut records = Vec::new();
        for row in csv::Reader::from_reader(body.as_bytes()).deserialize() {
            let r: CsvRow = row?;
            let extrinsic = match (r.x, r.y, r.z) {
                (Some(x), Some(y), Some(z)) => Some([x, y, z]),
                _ => None,
            };
            let uv = match (r.u, r.v) {
                (Some(u), Some(v)) => Some([u, v]),
                _ => None,
            };
            records.push(FieldRecord {
                vertex: r.vertex,
                angle: r.angle,
                magnitude: r.magnitude,
                extrinsic,
                uv,
            });
        }
        Ok(Self { metadata, records })
    }

    pub fn to_json(&self) -> Result<String, IoError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self, IoError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn render(&self, format: Format) -> Result<String, IoError> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    pub fn write(&self, path: impl AsRef<Path>, format: Format) -> Result<(), IoError> {
        write_file(path.as_ref(), self.render(format)?.as_bytes())
    }

    /// Reads either format, chosen by the first non-space character.
    pub fn read(path: impl AsRef<Path>) -> Result<Self, IoError> {
        let text = read_file(path.as_ref())?;
        if text.trim_start().starts_with('{') {
            Self::from_json(&text)
        } else {
            Self::from_csv(&text)
        }
    }
}

/// A located point: vertex or face with barycentric coordinates, and its
/// embedded position when available.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub vertex: Option<usize>,
    pub face: Option<usize>,
    pub bary: Option<[f64; 3]>,
    pub position: Option<[f64; 3]>,
}

/// Output of `mean`, `median`, `gcvt` and `landmarks`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointsExport {
    pub metadata: ExportMetadata,
    pub points: Vec<PointRecord>,
    /// Run statistics such as iteration counts.
    pub stats: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PointRow {
    index: usize,
    vertex: Option<usize>,
    face: Option<usize>,
    b0: Option<f64>,
    b1: Option<f64>,
    b2: Option<f64>,
    x: Option<f64>,
    y: Option<f64>,
    z: Option<f64>,
}

impl PointRecord {
    pub fn from_point(mesh: &crate::IntrinsicMesh, p: crate::SurfacePoint) -> Self {
        let position = p.position(mesh).map(|q| [q.x, q.y, q.z]);
        match p {
            crate::SurfacePoint::Vertex { vertex } => Self {
                vertex: Some(vertex),
                face: None,
                bary: None,
                position,
            },
            crate::SurfacePoint::Face { face, bary } => Self {
                vertex: None,
                face: Some(face),
                bary: Some(bary),
                position,
            },
        }
    }
}

impl PointsExport {
    const TITLE: &'static str = "vector-heat points";

    pub fn render(&self, format: Format) -> Result<String, IoError> {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self)?;
                s.push('\n');
                Ok(s)
            }
            Format::Csv => {
                let mut out = format!(
                    "# {}\n# metadata {}\n# stats {}\n",
                    Self::TITLE,
                    serde_json::to_string(&self.metadata)?,
                    serde_json::to_string(&self.stats)?
                );
                let mut w = csv::Writer::from_writer(Vec::new());
                if self.points.is_empty() {
                    w.write_record(["index", "vertex", "face", "b0", "b1", "b2", "x", "y", "z"])?;
                }
                for (index, p) in self.points.iter().enumerate() {
                    w.serialize(PointRow {
                        index,
                        vertex: p.vertex,
                        face: p.face,
                        b0: p.bary.map(|b| b[0]),
                        b1: p.bary.map(|b| b[1]),
                        b2: p.bary.map(|b| b[2]),
                        x: p.position.map(|q| q[0]),
                        y: p.position.map(|q| q[1]),
                        z: p.position.map(|q| q[2]),
                    })?;
                }
                let bytes = w.into_inner().map_err(|e| IoError::Invalid {
                    what: "csv",
                    message: e.to_string(),
                })?;
                out.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
                Ok(out)
            }
        }
    }

    pub fn write(&self, path: impl AsRef<Path>, format: Format) -> Result<(), IoError> {
        write_file(path.as_ref(), self.render(format)?.as_bytes())
    }
}
