use std::collections::{BTreeMap, HashMap};

use nalgebra::Vector3;

use super::{IntrinsicMesh, INVALID};
use crate::error::{Error, Result};

/// Geometry accompanying face connectivity.
#[derive(Debug, Clone)]
pub enum Geometry {
    Positions(Vec<Vector3<f64>>),
    /// Lengths keyed by vertex pair; either orientation of the pair is
    /// accepted.
    EdgeLengths {
        vertex_count: usize,
        lengths: BTreeMap<(usize, usize), f64>,
    },
}

impl Geometry {
    fn vertex_count(&self) -> usize {
        match self {
            Geometry::Positions(p) => p.len(),
            Geometry::EdgeLengths { vertex_count, .. } => *vertex_count,
        }
    }
}

impl IntrinsicMesh {
    pub fn from_positions(faces: &[[usize; 3]], positions: Vec<Vector3<f64>>) -> Result<Self> {
        Self::build(faces, Geometry::Positions(positions))
    }

    pub fn from_lengths(
        faces: &[[usize; 3]],
        vertex_count: usize,
        lengths: BTreeMap<(usize, usize), f64>,
    ) -> Result<Self> {
        Self::build(
            faces,
            Geometry::EdgeLengths {
                vertex_count,
                lengths,
            },
        )
    }

    /// Builds connectivity, edge lengths and all derived angles, areas and
    /// tangent frames. Faces must be consistently oriented.
    pub fn build(faces: &[[usize; 3]], geometry: Geometry) -> Result<Self> {
        let n = geometry.vertex_count();
        for (fi, f) in faces.iter().enumerate() {
            if f.iter().any(|&v| v >= n) || f[0] == f[1] || f[1] == f[2] || f[2] == f[0] {
                return Err(Error::InvalidFace { face: fi });
            }
        }

        let nf = faces.len();
        let mut he_next = Vec::with_capacity(6 * nf);
        let mut he_vertex = Vec::with_capacity(6 * nf);
        let mut he_face = Vec::with_capacity(6 * nf);
        let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * nf);

        for (fi, f) in faces.iter().enumerate() {
            let base = 3 * fi;
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                if directed.insert((a, b), base + k).is_some() {
                    return Err(Error::NonManifoldEdge(a.min(b), a.max(b)));
                }
                he_vertex.push(a);
                he_face.push(fi);
                he_next.push(base + (k + 1) % 3);
            }
        }

        // Twins, edges and exterior halfedges.
        let interior_count = he_vertex.len();
        let mut he_twin = vec![INVALID; interior_count];
        let mut he_edge = vec![INVALID; interior_count];
        let mut edge_he = Vec::new();
        for h in 0..interior_count {
            if he_twin[h] != INVALID {
                continue;
            }
            let a = he_vertex[h];
            let b = he_vertex[he_next[h]];
            let e = edge_he.len();
            edge_he.push(h);
            he_edge[h] = e;
            let t = match directed.get(&(b, a)) {
                Some(&t) => t,
                None => {
                    let t = he_vertex.len();
                    he_vertex.push(b);
                    he_face.push(INVALID);
                    he_next.push(INVALID);
                    he_twin.push(INVALID);
                    he_edge.push(e);
                    t
                }
            };
            he_twin[h] = t;
            he_twin[t] = h;
            he_edge[t] = e;
        }

        // Link exterior halfedges into boundary loops.
        let mut exterior_out = vec![INVALID; n];
        for h in interior_count..he_vertex.len() {
            let v = he_vertex[h];
            if exterior_out[v] != INVALID {
                return Err(Error::NonManifoldVertex(v));
            }
            exterior_out[v] = h;
        }
        for h in interior_count..he_vertex.len() {
            let head = he_vertex[he_twin[h]];
            he_next[h] = exterior_out[head];
        }

        // Reference halfedges.
        let mut vertex_he = vec![INVALID; n];
        let mut out_degree = vec![0usize; n];
        for h in 0..he_vertex.len() {
            out_degree[he_vertex[h]] += 1;
        }
        for h in 0..interior_count {
            let v = he_vertex[h];
            if vertex_he[v] == INVALID {
                vertex_he[v] = h;
            }
        }
        for h in interior_count..he_vertex.len() {
            // Exterior halfedge x → y: its twin y → x is the clockwise-most
            // interior halfedge leaving y.
            let head = he_vertex[he_twin[h]];
            vertex_he[head] = he_twin[h];
        }
        let mut on_boundary = vec![false; n];
        for h in interior_count..he_vertex.len() {
            on_boundary[he_vertex[h]] = true;
        }

        let face_he: Vec<usize> = (0..nf).map(|f| 3 * f).collect();
        let ne = edge_he.len();
        let nh = he_vertex.len();

        let mut mesh = IntrinsicMesh {
            vertex_count: n,
            he_next,
            he_twin,
            he_vertex,
            he_face,
            he_edge,
            edge_he,
            face_he,
            vertex_he,
            edge_length: vec![0.0; ne],
            corner_angle: vec![0.0; nh],
            direction: vec![0.0; nh],
            face_area: vec![0.0; nf],
            angle_sum: vec![0.0; n],
            on_boundary,
            positions: None,
        };

        for v in 0..n {
            if mesh.vertex_he[v] == INVALID {
                return Err(Error::IsolatedVertex(v));
            }
            // A manifold vertex has a single fan containing every outgoing halfedge.
            let mut count = 0usize;
            let mut it = mesh.outgoing(v);
            while it.next().is_some() {
                count += 1;
                if count > out_degree[v] {
                    break;
                }
            }
            if count != out_degree[v] {
                return Err(Error::NonManifoldVertex(v));
            }
        }

        match geometry {
            Geometry::Positions(p) => {
                for e in 0..ne {
                    let h = mesh.edge_he[e];
                    let (a, b) = (mesh.tail(h), mesh.head(h));
                    let l = (p[a] - p[b]).norm();
                    if !(l > 0.0 && l.is_finite()) {
                        return Err(Error::NonPositiveLength(a.min(b), a.max(b), l));
                    }
                    mesh.edge_length[e] = l;
                }
                mesh.positions = Some(p);
            }
            Geometry::EdgeLengths { lengths, .. } => {
                for e in 0..ne {
                    let h = mesh.edge_he[e];
                    let (a, b) = (mesh.tail(h), mesh.head(h));
                    let l = lengths
                        .get(&(a, b))
                        .or_else(|| lengths.get(&(b, a)))
                        .copied()
                        .ok_or(Error::MissingEdgeLength(a.min(b), a.max(b)))?;
                    if !(l > 0.0 && l.is_finite()) {
                        return Err(Error::NonPositiveLength(a.min(b), a.max(b), l));
                    }
                    mesh.edge_length[e] = l;
                }
            }
        }

        for f in 0..nf {
            mesh.update_face_geometry(f)?;
        }
        for v in 0..n {
            mesh.update_vertex_frame(v);
        }
        Ok(mesh)
    }
}
