//! Mesh files, run configuration and field exports.
//!
//! Two mesh formats are read. OBJ with `v` and triangular `f` records
//! (other records are skipped), and a plain-text intrinsic format:
//!
//! ```text
//! # comments and blank lines are ignored
//! <vertex count> <face count>
//! <a> <b> <c>          one line per face, 0-based, counter-clockwise
//! <i> <j> <length>     one line per edge, either orientation
//! ```

mod config;
mod export;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::error::Error as MeshError;
use crate::mesh::IntrinsicMesh;

pub mod validate;

pub use config::{parse_source, Command, RunConfig, SourceLocation, SourceSpec, Suite};
pub use export::{
    ExportMetadata, FieldExport, FieldKind, FieldRecord, Format, PointRecord, PointsExport,
    SCHEMA_VERSION,
};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: face has {count} vertices; only triangles are supported")]
    NotTriangle { line: usize, count: usize },

    #[error("line {line}: {source}")]
    MeshAt { line: usize, source: MeshError },

    #[error(transparent)]
    Mesh(#[from] MeshError),

    #[error("unknown mesh format for {0}; expected .obj or .txt/.imesh")]
    UnknownFormat(PathBuf),

    #[error("{0}")]
    Json(#[from] serde_json::Error),

    #[error("{0}")]
    Csv(#[from] csv::Error),

    #[error("invalid {what}: {message}")]
    Invalid { what: &'static str, message: String },
}

/// A parsed mesh file before the halfedge build, remembering the line of
/// each face for error reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshFile {
    pub faces: Vec<[usize; 3]>,
    pub face_lines: Vec<usize>,
    pub positions: Option<Vec<Vector3<f64>>>,
    pub vertex_count: usize,
    pub lengths: BTreeMap<(usize, usize), f64>,
}

fn parse_err(line: usize, message: impl Into<String>) -> IoError {
    IoError::Parse {
        line,
        message: message.into(),
    }
}

fn number<T: std::str::FromStr>(token: &str, line: usize, what: &str) -> Result<T, IoError> {
    token
        .parse()
        .map_err(|_| parse_err(line, format!("invalid {what} '{token}'")))
}

/// OBJ vertex reference: `7`, `7/2`, `7//3`, `7/2/3` or negative relative
/// indices; 1-based.
fn obj_index(token: &str, count: usize, line: usize) -> Result<usize, IoError> {
    let head = token.split('/').next().unwrap_or("");
    let i: i64 = number(head, line, "vertex index")?;
    let resolved = if i > 0 {
        i - 1
    } else if i < 0 {
        count as i64 + i
    } else {
        return Err(parse_err(line, "vertex index 0 is not valid in OBJ"));
    };
    if resolved < 0 || resolved as usize >= count {
        return Err(parse_err(
            line,
            format!("vertex index {i} out of range ({count} vertices so far)"),
        ));
    }
    Ok(resolved as usize)
}

pub fn parse_obj(text: &str) -> Result<MeshFile, IoError> {
    let mut positions = Vec::new();
    let mut faces = Vec::new();
    let mut face_lines = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut tokens = content.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let xyz: Vec<&str> = tokens.collect();
                if xyz.len() < 3 {
                    return Err(parse_err(line, "vertex needs three coordinates"));
                }
                let c: Vec<f64> = xyz[..3]
                    .iter()
                    .map(|t| number(t, line, "coordinate"))
                    .collect::<Result<_, _>>()?;
                if c.iter().any(|x| !x.is_finite()) {
                    return Err(parse_err(line, "non-finite coordinate"));
                }
                positions.push(Vector3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let refs: Vec<&str> = tokens.collect();
                if refs.len() != 3 {
                    return Err(IoError::NotTriangle {
                        line,
                        count: refs.len(),
                    });
                }
                let mut f = [0usize; 3];
                for (slot, t) in f.iter_mut().zip(&refs) {
                    *slot = obj_index(t, positions.len(), line)?;
                }
                faces.push(f);
                face_lines.push(line);
            }
            _ => {}
        }
    }
    Ok(MeshFile {
        faces,
        face_lines,
        vertex_count: positions.len(),
        positions: Some(positions),
        lengths: BTreeMap::new(),
    })
}

pub fn parse_intrinsic(text: &str) -> Result<MeshFile, IoError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (line, counts) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing counts line"))?;
    let counts: Vec<&str> = counts.split_whitespace().collect();
    if counts.len() != 2 {
        return Err(parse_err(line, "counts line must be '<vertices> <faces>'"));
    }
    let nv: usize = number(counts[0], line, "vertex count")?;
    let nf: usize = number(counts[1], line, "face count")?;
    let mut faces = Vec::with_capacity(nf);
    let mut face_lines = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (line, l) = lines
            .next()
            .ok_or_else(|| parse_err(line, format!("expected {nf} faces")))?;
        let t: Vec<&str> = l.split_whitespace().collect();
        if t.len() != 3 {
            return Err(IoError::NotTriangle {
                line,
                count: t.len(),
            });
        }
        let mut f = [0usize; 3];
        for (slot, tok) in f.iter_mut().zip(&t) {
            *slot = number(tok, line, "vertex index")?;
            if *slot >= nv {
                return Err(parse_err(
                    line,
                    format!("vertex index {slot} out of range ({nv} vertices)"),
                ));
            }
        }
        faces.push(f);
        face_lines.push(line);
    }
    let mut lengths = BTreeMap::new();
    for (line, l) in lines {
        let t: Vec<&str> = l.split_whitespace().collect();
        if t.len() != 3 {
            return Err(parse_err(line, "edge line must be '<i> <j> <length>'"));
        }
        let i: usize = number(t[0], line, "vertex index")?;
        let j: usize = number(t[1], line, "vertex index")?;
        let len: f64 = number(t[2], line, "length")?;
        let key = (i.min(j), i.max(j));
        if lengths.insert(key, len).is_some() {
            return Err(parse_err(line, format!("edge ({i}, {j}) listed twice")));
        }
    }
    Ok(MeshFile {
        faces,
        face_lines,
        positions: None,
        vertex_count: nv,
        lengths,
    })
}

impl MeshFile {
    /// Builds the halfedge mesh, attaching the offending line to errors that
    /// name a face or an edge.
    pub fn build(&self) -> Result<IntrinsicMesh, IoError> {
        let result = match &self.positions {
            Some(p) => IntrinsicMesh::from_positions(&self.faces, p.clone()),
            None => {
                IntrinsicMesh::from_lengths(&self.faces, self.vertex_count, self.lengths.clone())
            }
        };
        result.map_err(|e| match self.line_of(&e) {
            Some(line) => IoError::MeshAt { line, source: e },
            None => IoError::Mesh(e),
        })
    }

    fn line_of(&self, e: &MeshError) -> Option<usize> {
        match *e {
            MeshError::InvalidFace { face } | MeshError::TriangleInequality { face, .. } => {
                self.face_lines.get(face).copied()
            }
            MeshError::NonManifoldEdge(a, b) => {
                // First face that repeats an oriented edge or is the third
                // face on the edge.
                let mut directed = Vec::new();
                for (f, line) in self.faces.iter().zip(&self.face_lines) {
                    let Some(k) = (0..3).find(|&k| {
                        let (x, y) = (f[k], f[(k + 1) % 3]);
                        (x, y) == (a, b) || (x, y) == (b, a)
                    }) else {
                        continue;
                    };
                    let d = (f[k], f[(k + 1) % 3]);
                    if directed.contains(&d) || directed.len() == 2 {
                        return Some(*line);
                    }
                    directed.push(d);
                }
                None
            }
            MeshError::NonManifoldVertex(v) | MeshError::IsolatedVertex(v) => self
                .faces
                .iter()
                .zip(&self.face_lines)
                .find(|(f, _)| f.contains(&v))
                .map(|(_, l)| *l),
            _ => None,
        }
    }
}

pub fn parse_mesh(text: &str, path: &Path) -> Result<IntrinsicMesh, IoError> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    let file = match ext.as_deref() {
        Some("obj") => parse_obj(text)?,
        Some("txt") | Some("imesh") => parse_intrinsic(text)?,
        _ => return Err(IoError::UnknownFormat(path.to_path_buf())),
    };
    file.build()
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<IntrinsicMesh, IoError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_mesh(&text, path)
}

/// Writes an OBJ; meshes without positions cannot be written this way.
pub fn write_obj(mesh: &IntrinsicMesh) -> Result<String, IoError> {
    use std::fmt::Write;
    let pos = mesh.positions().ok_or(MeshError::NoEmbedding)?;
    let mut s = String::new();
    for p in pos {
        let _ = writeln!(s, "v {:?} {:?} {:?}", p.x, p.y, p.z);
    }
    for f in 0..mesh.face_count() {
        let [a, b, c] = mesh.face_vertices(f);
        let _ = writeln!(s, "f {} {} {}", a + 1, b + 1, c + 1);
    }
    Ok(s)
}

/// Writes the intrinsic format (connectivity and edge lengths only).
pub fn write_intrinsic(mesh: &IntrinsicMesh) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    let _ = writeln!(s, "{} {}", mesh.vertex_count(), mesh.face_count());
    for f in 0..mesh.face_count() {
        let [a, b, c] = mesh.face_vertices(f);
        let _ = writeln!(s, "{a} {b} {c}");
    }
    for e in 0..mesh.edge_count() {
        let h = mesh.edge_halfedge(e);
        let _ = writeln!(
            s,
            "{} {} {:?}",
            mesh.tail(h),
            mesh.head(h),
            mesh.edge_length(e)
        );
    }
    s
}

/// SHA-256 over connectivity and the bit patterns of all edge lengths,
/// hex-encoded; identifies the intrinsic geometry a result was computed on.
pub fn mesh_checksum(mesh: &IntrinsicMesh) -> String {
    let mut hasher = Sha256::new();
    hasher.update((mesh.vertex_count() as u64).to_le_bytes());
    for f in 0..mesh.face_count() {
        for v in mesh.face_vertices(f) {
            hasher.update((v as u64).to_le_bytes());
        }
    }
    for e in 0..mesh.edge_count() {
        hasher.update(mesh.edge_length(e).to_bits().to_le_bytes());
    }
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_obj() {
        let text =
            "# square\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nf 1 2 3\nf 1/1/1 3/3/1 4//1\n";
        let m = parse_obj(text).unwrap().build().unwrap();
        assert_eq!(
            (m.vertex_count(), m.edge_count(), m.face_count()),
            (4, 5, 2)
        );
        assert!((m.total_area() - 1.0).abs() < 1e-15);
        let neg = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n";
        assert_eq!(parse_obj(neg).unwrap().faces, vec![[0, 1, 2]]);
    }

    #[test]
    fn icosahedron_round_trip() {
        let m = crate::generators::icosahedron().build().unwrap();
        let back = parse_obj(&write_obj(&m).unwrap()).unwrap().build().unwrap();
        let l = back.edge_lengths();
        assert!(l.iter().all(|x| (x - l[0]).abs() < 1e-6));
        assert_eq!(mesh_checksum(&m), mesh_checksum(&back));
        let i = parse_intrinsic(&write_intrinsic(&m))
            .unwrap()
            .build()
            .unwrap();
        assert_eq!(mesh_checksum(&m), mesh_checksum(&i));
    }

    #[test]
    fn intrinsic_345() {
        let text = "# right triangle\n3 1\n0 1 2\n0 1 3\n1 2 4\n2 0 5\n";
        let m = parse_intrinsic(text).unwrap().build().unwrap();
        assert!((m.total_area() - 6.0).abs() < 1e-12);
        assert!(m.positions().is_none());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let quad = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
        assert!(matches!(
            parse_obj(quad),
            Err(IoError::NotTriangle { line: 5, count: 4 })
        ));
        let bad = "v 0 0 0\nv x 0 0\n";
        assert!(matches!(
            parse_obj(bad),
            Err(IoError::Parse { line: 2, .. })
        ));
        let range = "v 0 0 0\nf 1 2 3\n";
        assert!(matches!(
            parse_obj(range),
            Err(IoError::Parse { line: 2, .. })
        ));
        // Three faces on one edge.
        let fin = "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 -1 0\nv 0 0 1\nf 1 2 3\nf 2 1 4\nf 1 2 5\n";
        let e = parse_obj(fin).unwrap().build().unwrap_err();
        assert!(matches!(e, IoError::MeshAt { line: 8, .. }), "{e}");
        let tri = "3 1\n0 1 2\n0 1 1\n1 2 1\n2 0 3\n";
        let e = parse_intrinsic(tri).unwrap().build().unwrap_err();
        assert!(matches!(e, IoError::MeshAt { line: 2, .. }), "{e}");
        let missing = "3 2\n0 1 2\n";
        assert!(matches!(
            parse_intrinsic(missing),
            Err(IoError::Parse { .. })
        ));
        assert!(matches!(
            parse_mesh("", Path::new("a.ply")),
            Err(IoError::UnknownFormat(_))
        ));
        assert!(matches!(
            load_mesh("/nonexistent/x.obj"),
            Err(IoError::Read { .. })
        ));
    }
}
