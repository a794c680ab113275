//! Intrinsic triangle meshes.
//!
//! Connectivity is stored as a halfedge structure in which every edge owns
//! two halfedges; halfedges on the exterior side of a boundary edge have no
//! face. All geometry is derived from edge lengths alone. Each vertex carries
//! a polar coordinate system whose zero direction is a reference outgoing
//! edge and in which the interior angles are rescaled to sum to `2π`
//! (or `π` at boundary vertices).

mod build;
mod point;
mod tangent;

use nalgebra::{Vector2, Vector3};
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub use build::Geometry;
pub use point::SurfacePoint;

/// Largest polar angle spanned by the interior wedge of a boundary vertex;
/// the rest of the circle is the exterior wedge.
pub const BOUNDARY_WEDGE_LIMIT: f64 = 1.75 * PI;

/// Sentinel for "no element" in the halfedge arrays.
pub const INVALID: usize = usize::MAX;

/// A tangent vector encoded as a complex number `r e^{iφ}` in the polar
/// coordinate system of vertex `basis`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentVector {
    pub value: Complex64,
    pub basis: usize,
}

impl TangentVector {
    pub fn new(basis: usize, value: Complex64) -> Self {
        Self { value, basis }
    }

    pub fn from_polar(basis: usize, magnitude: f64, angle: f64) -> Self {
        Self::new(basis, Complex64::from_polar(magnitude, angle))
    }

    pub fn magnitude(&self) -> f64 {
        self.value.norm()
    }

    /// Angle in `[0, 2π)`.
    pub fn angle(&self) -> f64 {
        self.value.arg().rem_euclid(2.0 * PI)
    }
}

#[derive(Debug, Clone)]
pub struct IntrinsicMesh {
    pub(crate) vertex_count: usize,

    pub(crate) he_next: Vec<usize>,
    pub(crate) he_twin: Vec<usize>,
    pub(crate) he_vertex: Vec<usize>,
    pub(crate) he_face: Vec<usize>,
    pub(crate) he_edge: Vec<usize>,

    pub(crate) edge_he: Vec<usize>,
    pub(crate) face_he: Vec<usize>,
    pub(crate) vertex_he: Vec<usize>,

    pub(crate) edge_length: Vec<f64>,
    /// Interior angle at the tail of each face halfedge; zero for exterior ones.
    pub(crate) corner_angle: Vec<f64>,
    /// Direction of each halfedge in the polar frame of its tail vertex.
    pub(crate) direction: Vec<f64>,
    pub(crate) face_area: Vec<f64>,
    pub(crate) angle_sum: Vec<f64>,
    pub(crate) on_boundary: Vec<bool>,

    pub(crate) positions: Option<Vec<Vector3<f64>>>,
}

impl IntrinsicMesh {
    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn face_count(&self) -> usize {
        self.face_he.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_he.len()
    }

    pub fn halfedge_count(&self) -> usize {
        self.he_next.len()
    }

    pub fn positions(&self) -> Option<&[Vector3<f64>]> {
        self.positions.as_deref()
    }

    // --- connectivity ---

    pub fn next(&self, he: usize) -> usize {
        self.he_next[he]
    }

    pub fn prev(&self, he: usize) -> usize {
        // Exterior loops can be longer than three, so walk around.
        let mut h = he;
        loop {
            let n = self.he_next[h];
            if n == he {
                return h;
            }
            h = n;
        }
    }

    pub fn twin(&self, he: usize) -> usize {
        self.he_twin[he]
    }

    pub fn tail(&self, he: usize) -> usize {
        self.he_vertex[he]
    }

    pub fn head(&self, he: usize) -> usize {
        self.he_vertex[self.he_twin[he]]
    }

    /// Face to the left of `he`, or `None` for exterior halfedges.
    pub fn face_of(&self, he: usize) -> Option<usize> {
        let f = self.he_face[he];
        (f != INVALID).then_some(f)
    }

    pub fn edge_of(&self, he: usize) -> usize {
        self.he_edge[he]
    }

    pub fn edge_halfedge(&self, edge: usize) -> usize {
        self.edge_he[edge]
    }

    pub fn face_halfedge(&self, face: usize) -> usize {
        self.face_he[face]
    }

    /// The reference outgoing halfedge of a vertex (direction `φ = 0`).
    pub fn vertex_halfedge(&self, v: usize) -> usize {
        self.vertex_he[v]
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.on_boundary[v]
    }

    pub fn is_boundary_edge(&self, edge: usize) -> bool {
        let h = self.edge_he[edge];
        self.he_face[h] == INVALID || self.he_face[self.he_twin[h]] == INVALID
    }

    /// Halfedges of a face, starting from its stored first halfedge.
    pub fn face_halfedges(&self, face: usize) -> [usize; 3] {
        let h0 = self.face_he[face];
        let h1 = self.he_next[h0];
        [h0, h1, self.he_next[h1]]
    }

    pub fn face_vertices(&self, face: usize) -> [usize; 3] {
        self.face_halfedges(face).map(|h| self.he_vertex[h])
    }

    /// Outgoing halfedges of `v` in counter-clockwise order starting at the
    /// reference halfedge. At a boundary vertex the last item is the exterior
    /// halfedge along the boundary.
    pub fn outgoing(&self, v: usize) -> Outgoing<'_> {
        Outgoing {
            mesh: self,
            start: self.vertex_he[v],
            current: Some(self.vertex_he[v]),
        }
    }

    pub fn degree(&self, v: usize) -> usize {
        self.outgoing(v).count()
    }

    /// Halfedge from `i` to `j`, if the two vertices share an edge.
    pub fn halfedge_between(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.vertex_count || j >= self.vertex_count {
            return None;
        }
        self.outgoing(i).find(|&h| self.head(h) == j)
    }

    pub fn check_vertex(&self, v: usize) -> Result<()> {
        if v < self.vertex_count {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange {
                vertex: v,
                count: self.vertex_count,
            })
        }
    }

    pub(crate) fn check_face(&self, f: usize) -> Result<()> {
        if f < self.face_count() {
            Ok(())
        } else {
            Err(Error::FaceOutOfRange {
                face: f,
                count: self.face_count(),
            })
        }
    }

    // --- geometry ---

    pub fn edge_length(&self, edge: usize) -> f64 {
        self.edge_length[edge]
    }

    pub fn halfedge_length(&self, he: usize) -> f64 {
        self.edge_length[self.he_edge[he]]
    }

    pub fn edge_lengths(&self) -> &[f64] {
        &self.edge_length
    }

    /// Interior angle `θ_i^{jk}` at the tail `i` of face halfedge `i → j`.
    pub fn corner_angle(&self, he: usize) -> f64 {
        self.corner_angle[he]
    }

    /// Angle opposite a face halfedge, zero for exterior halfedges.
    pub fn opposite_angle(&self, he: usize) -> f64 {
        if self.he_face[he] == INVALID {
            0.0
        } else {
            self.corner_angle[self.prev(he)]
        }
    }

    pub fn face_area(&self, face: usize) -> f64 {
        self.face_area[face]
    }

    pub fn total_area(&self) -> f64 {
        self.face_area.iter().sum()
    }

    /// Total interior angle `Θ_i` around a vertex.
    pub fn angle_sum(&self, v: usize) -> f64 {
        self.angle_sum[v]
    }

    /// Factor mapping interior angles at `v` to polar-frame angles: `2π/Θ`
    /// at interior vertices. Boundary vertices keep their angles (scale 1),
    /// so flat boundaries stay isometric; only when `Θ` exceeds
    /// [`BOUNDARY_WEDGE_LIMIT`] is the interior wedge compressed to it.
    pub fn angle_scale(&self, v: usize) -> f64 {
        if self.on_boundary[v] {
            (BOUNDARY_WEDGE_LIMIT / self.angle_sum[v]).min(1.0)
        } else {
            2.0 * PI / self.angle_sum[v]
        }
    }

    /// Normalized corner angle `θ̃` at the tail of a face halfedge.
    pub fn normalized_angle(&self, he: usize) -> f64 {
        self.corner_angle[he] * self.angle_scale(self.he_vertex[he])
    }

    /// Direction `φ_ij` of halfedge `i → j` in the polar frame of `i`.
    pub fn edge_direction(&self, he: usize) -> f64 {
        self.direction[he]
    }

    /// Halfedge vector `ℓ_ij e^{iφ_ij}` expressed in the frame of its tail.
    pub fn halfedge_vector(&self, he: usize) -> Complex64 {
        Complex64::from_polar(self.halfedge_length(he), self.direction[he])
    }

    /// Unit complex rotation `r_ij` carrying tangent vectors from the frame of
    /// `i` to the frame of `j` along halfedge `i → j`.
    pub fn transport_rotation(&self, he: usize) -> Complex64 {
        let rho = self.direction[self.he_twin[he]] + PI - self.direction[he];
        Complex64::from_polar(1.0, rho)
    }

    pub fn mean_edge_length(&self) -> f64 {
        if self.edge_length.is_empty() {
            return 0.0;
        }
        self.edge_length.iter().sum::<f64>() / self.edge_length.len() as f64
    }

    /// Cotan weight `cot θ_k^{ij} + cot θ_l^{ji}` of an edge (one term on the
    /// boundary).
    pub fn cotan_weight(&self, edge: usize) -> f64 {
        let h = self.edge_he[edge];
        let mut w = 0.0;
        for side in [h, self.he_twin[h]] {
            if self.he_face[side] != INVALID {
                w += 1.0 / self.opposite_angle(side).tan();
            }
        }
        w
    }

    /// Planar layout of a face: the tail of its first halfedge at the origin,
    /// the first edge along `+x`, the third vertex in the upper half plane.
    pub fn face_layout(&self, face: usize) -> [Vector2<f64>; 3] {
        let [h0, _, h2] = self.face_halfedges(face);
        let l01 = self.halfedge_length(h0);
        let l20 = self.halfedge_length(h2);
        let a = self.corner_angle[h0];
        [
            Vector2::zeros(),
            Vector2::new(l01, 0.0),
            Vector2::new(l20 * a.cos(), l20 * a.sin()),
        ]
    }

    /// Angle of halfedge `he` (a halfedge of `face`) within the face layout.
    pub(crate) fn layout_angle(&self, he: usize) -> f64 {
        let face = self.he_face[he];
        let hs = self.face_halfedges(face);
        let p = self.face_layout(face);
        let slot = hs
            .iter()
            .position(|&h| h == he)
            .expect("halfedge not in face");
        let d = p[(slot + 1) % 3] - p[slot];
        d.y.atan2(d.x)
    }

    /// Rotation taking vectors in the polar frame of `tail(he)` into the
    /// layout frame of `face_of(he)`.
    pub fn vertex_to_face_rotation(&self, he: usize) -> Complex64 {
        Complex64::from_polar(1.0, self.layout_angle(he) - self.direction[he])
    }

    /// Moves a tangent vector across one edge: `r_ij · v`.
    pub fn transport_along_edge(&self, v: TangentVector, to: usize) -> Result<TangentVector> {
        self.check_vertex(v.basis)?;
        self.check_vertex(to)?;
        let he = self
            .halfedge_between(v.basis, to)
            .ok_or(Error::NotAnEdge(v.basis, to))?;
        Ok(TangentVector::new(
            to,
            self.transport_rotation(he) * v.value,
        ))
    }

    /// Like [`transport_along_edge`](Self::transport_along_edge) but names the
    /// edge by its endpoints and checks that `v` is based at one of them.
    pub fn transport_across(
        &self,
        v: TangentVector,
        edge: (usize, usize),
    ) -> Result<TangentVector> {
        let (a, b) = edge;
        let to = if v.basis == a {
            b
        } else if v.basis == b {
            a
        } else {
            return Err(Error::WrongBasis {
                based: v.basis,
                from: a,
                to: b,
            });
        };
        self.transport_along_edge(v, to)
    }

    /// Recomputes corner angles and area of one face from its edge lengths.
    pub(crate) fn update_face_geometry(&mut self, face: usize) -> Result<()> {
        let hs = self.face_halfedges(face);
        let l = hs.map(|h| self.halfedge_length(h));
        if !satisfies_triangle_inequality(l[0], l[1], l[2]) {
            return Err(Error::TriangleInequality { face, lengths: l });
        }
        // Corner at tail of hs[k] sits between edges hs[k] and hs[k+2];
        // the opposite side is hs[k+1].
        for k in 0..3 {
            let adj_a = l[k];
            let adj_b = l[(k + 2) % 3];
            let opp = l[(k + 1) % 3];
            self.corner_angle[hs[k]] = law_of_cosines(adj_a, adj_b, opp);
        }
        self.face_area[face] = heron_area(l[0], l[1], l[2]);
        Ok(())
    }

    /// Recomputes `Θ`, the reference frame and all outgoing directions of a
    /// vertex by a counter-clockwise sweep from its reference halfedge.
    pub(crate) fn update_vertex_frame(&mut self, v: usize) {
        let mut sum = 0.0;
        for h in self.outgoing(v) {
            if self.he_face[h] != INVALID {
                sum += self.corner_angle[h];
            }
        }
        self.angle_sum[v] = sum;
        let scale = self.angle_scale(v);
        let hs: Vec<usize> = self.outgoing(v).collect();
        let mut phi = 0.0;
        for h in hs {
            self.direction[h] = phi;
            if self.he_face[h] != INVALID {
                phi += self.corner_angle[h] * scale;
            }
        }
    }
}

/// Iterator over the outgoing halfedges of a vertex in counter-clockwise order.
pub struct Outgoing<'a> {
    mesh: &'a IntrinsicMesh,
    start: usize,
    current: Option<usize>,
}

impl Iterator for Outgoing<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        let h = self.current?;
        let m = self.mesh;
        self.current = if m.he_face[h] == INVALID {
            None
        } else {
            let n = m.he_twin[m.prev(h)];
            (n != self.start).then_some(n)
        };
        Some(h)
    }
}

pub(crate) fn satisfies_triangle_inequality(a: f64, b: f64, c: f64) -> bool {
    a < b + c && b < a + c && c < a + b
}

/// Angle between sides `a` and `b` of a triangle whose third side is `opp`.
pub(crate) fn law_of_cosines(a: f64, b: f64, opp: f64) -> f64 {
    let c = (a * a + b * b - opp * opp) / (2.0 * a * b);
    c.clamp(-1.0, 1.0).acos()
}

/// Numerically stable Heron formula.
pub(crate) fn heron_area(a: f64, b: f64, c: f64) -> f64 {
    let mut s = [a, b, c];
    s.sort_by(|x, y| y.total_cmp(x));
    let [a, b, c] = s;
    let p = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
    0.25 * p.max(0.0).sqrt()
}

#[cfg(test)]
mod tests;
