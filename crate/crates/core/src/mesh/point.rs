use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::IntrinsicMesh;
use crate::error::{Error, Result};

/// A location on the mesh: a vertex, or a face with barycentric coordinates
/// ordered like [`IntrinsicMesh::face_vertices`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SurfacePoint {
    Vertex { vertex: usize },
    Face { face: usize, bary: [f64; 3] },
}

const BARY_TOLERANCE: f64 = 1e-12;

impl SurfacePoint {
    pub fn vertex(vertex: usize) -> Self {
        SurfacePoint::Vertex { vertex }
    }

    /// Face point; coordinates must be non-negative and sum to one.
    pub fn face(face: usize, bary: [f64; 3]) -> Result<Self> {
        let sum: f64 = bary.iter().sum();
        if bary.iter().any(|&b| !(b >= -BARY_TOLERANCE)) || (sum - 1.0).abs() > BARY_TOLERANCE {
            return Err(Error::InvalidBarycentric(bary));
        }
        Ok(SurfacePoint::Face { face, bary })
    }

    /// Face point from coordinates that are only approximately normalized;
    /// negatives are clamped and the result is rescaled.
    pub fn face_normalized(face: usize, bary: [f64; 3]) -> Self {
        let b = bary.map(|x| x.max(0.0));
        let s: f64 = b.iter().sum();
        let b = if s > 0.0 {
            b.map(|x| x / s)
        } else {
            [1.0 / 3.0; 3]
        };
        SurfacePoint::Face { face, bary: b }
    }

    pub fn barycenter(face: usize) -> Self {
        SurfacePoint::Face {
            face,
            bary: [1.0 / 3.0; 3],
        }
    }

    pub fn validate(&self, mesh: &IntrinsicMesh) -> Result<()> {
        match *self {
            SurfacePoint::Vertex { vertex } => mesh.check_vertex(vertex),
            SurfacePoint::Face { face, bary } => {
                mesh.check_face(face)?;
                SurfacePoint::face(face, bary).map(|_| ())
            }
        }
    }

    /// Mesh vertices supporting this point with their interpolation weights.
    pub fn weights(&self, mesh: &IntrinsicMesh) -> Vec<(usize, f64)> {
        match *self {
            SurfacePoint::Vertex { vertex } => vec![(vertex, 1.0)],
            SurfacePoint::Face { face, bary } => mesh
                .face_vertices(face)
                .into_iter()
                .zip(bary)
                .filter(|&(_, w)| w != 0.0)
                .collect(),
        }
    }

    /// Linear interpolation of per-vertex data.
    pub fn interpolate<T>(&self, mesh: &IntrinsicMesh, values: &[T]) -> T
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
    {
        match *self {
            SurfacePoint::Vertex { vertex } => values[vertex],
            SurfacePoint::Face { face, bary } => {
                let [a, b, c] = mesh.face_vertices(face);
                values[a] * bary[0] + values[b] * bary[1] + values[c] * bary[2]
            }
        }
    }

    /// Snaps a face point lying (numerically) on a vertex to that vertex.
    pub fn snapped(&self, mesh: &IntrinsicMesh, tolerance: f64) -> Self {
        match *self {
            SurfacePoint::Face { face, bary } => {
                let vs = mesh.face_vertices(face);
                for k in 0..3 {
                    if bary[k] >= 1.0 - tolerance {
                        return SurfacePoint::vertex(vs[k]);
                    }
                }
                *self
            }
            p => p,
        }
    }

    /// Position in the planar layout of `face` (see [`IntrinsicMesh::face_layout`]).
    pub fn layout_position(&self, mesh: &IntrinsicMesh, face: usize) -> Option<Vector2<f64>> {
        let p = mesh.face_layout(face);
        let vs = mesh.face_vertices(face);
        match *self {
            SurfacePoint::Vertex { vertex } => vs.iter().position(|&v| v == vertex).map(|k| p[k]),
            SurfacePoint::Face { face: f, bary } if f == face => {
                Some(p[0] * bary[0] + p[1] * bary[1] + p[2] * bary[2])
            }
            _ => None,
        }
    }

    /// Embedded position, when the mesh has one.
    pub fn position(&self, mesh: &IntrinsicMesh) -> Option<Vector3<f64>> {
        let pos = mesh.positions()?;
        Some(match *self {
            SurfacePoint::Vertex { vertex } => pos[vertex],
            SurfacePoint::Face { face, bary } => {
                let [a, b, c] = mesh.face_vertices(face);
                pos[a] * bary[0] + pos[b] * bary[1] + pos[c] * bary[2]
            }
        })
    }

    /// Vertex with the largest weight.
    pub fn nearest_vertex(&self, mesh: &IntrinsicMesh) -> usize {
        match *self {
            SurfacePoint::Vertex { vertex } => vertex,
            SurfacePoint::Face { face, bary } => {
                let vs = mesh.face_vertices(face);
                let k = (0..3).max_by(|&a, &b| bary[a].total_cmp(&bary[b])).unwrap();
                vs[k]
            }
        }
    }
}
