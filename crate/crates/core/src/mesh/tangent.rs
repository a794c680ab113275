//! Conversion between intrinsic tangent vectors and embedded 3-vectors.
//! Only used for I/O and visualization.

use nalgebra::Vector3;
use num_complex::Complex64;
use std::f64::consts::TAU;

use super::{IntrinsicMesh, TangentVector, INVALID};
use crate::error::{Error, Result};

/// Piecewise-linear correspondence between polar angles and angles measured
/// in the projected tangent plane of a vertex.
struct WedgeMap {
    basis: (Vector3<f64>, Vector3<f64>),
    /// (polar angle, planar angle) breakpoints, increasing, ending at (2π, 2π).
    breaks: Vec<(f64, f64)>,
}

impl WedgeMap {
    fn polar_from_planar(&self, gamma: f64) -> f64 {
        interpolate(&self.breaks, gamma, |b| b.1, |b| b.0)
    }

    fn planar_from_polar(&self, phi: f64) -> f64 {
        interpolate(&self.breaks, phi, |b| b.0, |b| b.1)
    }
}

fn interpolate(
    breaks: &[(f64, f64)],
    x: f64,
    key: impl Fn(&(f64, f64)) -> f64,
    val: impl Fn(&(f64, f64)) -> f64,
) -> f64 {
    let x = x.rem_euclid(TAU);
    for w in breaks.windows(2) {
        let (x0, x1) = (key(&w[0]), key(&w[1]));
        if x >= x0 && x <= x1 {
            let s = if x1 > x0 { (x - x0) / (x1 - x0) } else { 0.0 };
            return val(&w[0]) + s * (val(&w[1]) - val(&w[0]));
        }
    }
    val(breaks.last().unwrap())
}

impl IntrinsicMesh {
    fn require_positions(&self) -> Result<&[Vector3<f64>]> {
        self.positions().ok_or(Error::NoEmbedding)
    }

    /// Angle-weighted vertex normal.
    pub fn vertex_normal(&self, v: usize) -> Result<Vector3<f64>> {
        let p = self.require_positions()?;
        let mut n = Vector3::zeros();
        for h in self.outgoing(v) {
            let f = self.he_face[h];
            if f == INVALID {
                continue;
            }
            let [a, b, c] = self.face_vertices(f);
            if let Some(u) = (p[b] - p[a]).cross(&(p[c] - p[a])).try_normalize(0.0) {
                n += u * self.corner_angle[h];
            }
        }
        Ok(n.try_normalize(0.0).unwrap_or_else(Vector3::z))
    }

    fn wedge_map(&self, v: usize) -> Result<WedgeMap> {
        let p = self.require_positions()?;
        let n = self.vertex_normal(v)?;
        let project = |h: usize| {
            let d = p[self.head(h)] - p[v];
            d - n * d.dot(&n)
        };
        let r = self.vertex_he[v];
        let b1 = project(r)
            .try_normalize(1e-300)
            .unwrap_or_else(|| any_orthogonal(&n));
        let b2 = n.cross(&b1);

        let hs: Vec<usize> = self.outgoing(v).collect();
        let planar: Vec<f64> = hs
            .iter()
            .map(|&h| {
                let d = project(h);
                d.dot(&b2).atan2(d.dot(&b1))
            })
            .collect();

        let mut breaks = Vec::with_capacity(hs.len() + 2);
        let mut gamma = 0.0;
        breaks.push((0.0, 0.0));
        let boundary = self.on_boundary[v];
        let wedges = if boundary { hs.len() - 1 } else { hs.len() };
        for a in 0..wedges {
            let next = if a + 1 < hs.len() {
                planar[a + 1]
            } else {
                planar[0]
            };
            let mut step = (next - planar[a]).rem_euclid(TAU);
            if step == 0.0 {
                step = TAU / wedges as f64;
            }
            gamma += step;
            let phi = if a + 1 < hs.len() {
                self.direction[hs[a + 1]]
            } else {
                TAU
            };
            breaks.push((phi, gamma));
        }
        if boundary {
            breaks.push((TAU, TAU.max(gamma)));
        }
        // Non-star projections can overshoot a full turn; rescale.
        let total = breaks.last().unwrap().1;
        if (total - TAU).abs() > 1e-12 {
            for b in &mut breaks {
                b.1 *= TAU / total;
            }
        }
        Ok(WedgeMap {
            basis: (b1, b2),
            breaks,
        })
    }

    /// Expresses the tangential part of an embedded vector at vertex `v` in
    /// the polar frame of `v`.
    pub fn extrinsic_to_tangent(&self, v: usize, x: Vector3<f64>) -> Result<TangentVector> {
        self.check_vertex(v)?;
        let n = self.vertex_normal(v)?;
        let xt = x - n * x.dot(&n);
        let mag = xt.norm();
        if mag == 0.0 {
            return Ok(TangentVector::new(v, Complex64::new(0.0, 0.0)));
        }
        let map = self.wedge_map(v)?;
        let (b1, b2) = map.basis;
        let gamma = xt.dot(&b2).atan2(xt.dot(&b1));
        let phi = map.polar_from_planar(gamma);
        Ok(TangentVector::from_polar(v, mag, phi))
    }

    /// Embedded representative of a tangent vector, lying in the tangent
    /// plane of its base vertex.
    pub fn tangent_to_extrinsic(&self, t: TangentVector) -> Result<Vector3<f64>> {
        self.check_vertex(t.basis)?;
        let map = self.wedge_map(t.basis)?;
        let (b1, b2) = map.basis;
        let gamma = map.planar_from_polar(t.angle());
        Ok((b1 * gamma.cos() + b2 * gamma.sin()) * t.magnitude())
    }

    /// Orthonormal basis of a face's plane aligned with its layout frame.
    pub fn face_basis(&self, face: usize) -> Result<(Vector3<f64>, Vector3<f64>, Vector3<f64>)> {
        let p = self.require_positions()?;
        let [a, b, c] = self.face_vertices(face);
        let e1 = (p[b] - p[a]).normalize();
        let n = (p[b] - p[a]).cross(&(p[c] - p[a])).normalize();
        Ok((e1, n.cross(&e1), n))
    }

    /// Embeds a vector given in the layout frame of `face`.
    pub fn face_vector_to_extrinsic(&self, face: usize, z: Complex64) -> Result<Vector3<f64>> {
        let (e1, e2, _) = self.face_basis(face)?;
        Ok(e1 * z.re + e2 * z.im)
    }

    /// Projects an embedded vector into the layout frame of `face`.
    pub fn face_vector_from_extrinsic(&self, face: usize, x: Vector3<f64>) -> Result<Complex64> {
        let (e1, e2, _) = self.face_basis(face)?;
        Ok(Complex64::new(x.dot(&e1), x.dot(&e2)))
    }
}

fn any_orthogonal(n: &Vector3<f64>) -> Vector3<f64> {
    let a = if n.x.abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    (a - n * a.dot(n)).normalize()
}
