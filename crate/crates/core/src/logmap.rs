//! Global logarithmic map: a transported horizontal field `H`, a diffused
//! radial field `R`, and a radial coordinate from a Poisson solve.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{IntrinsicMesh, SurfacePoint};
use crate::operators::divergence;
use crate::vhm::{SourceSet, VectorHeatSolver};

/// Right-hand side for the radial field about a source vertex, each value in
/// the polar frame of the vertex it is attached to.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialInitialData {
    pub source: usize,
    pub center: Complex64,
    pub neighbors: Vec<(usize, Complex64)>,
}

/// Integral of the neighbor hat function against the unit radial measure,
/// over one triangle with corner angle `alpha` at the source, opposite-side
/// length `l_side` (from the source to the third vertex) and area `area`.
/// Expressed with the shared edge along `+x`; the lower triangle is the
/// mirror image.
fn neighbor_term(alpha: f64, l_side: f64, area: f64) -> Complex64 {
    let (s, c) = alpha.sin_cos();
    Complex64::new(alpha * s, s - alpha * c) * (l_side / (4.0 * area))
}

/// Per-face source term with edge `ij` along `+x`.
fn center_term(alpha: f64, l_ij: f64, l_ik: f64, area: f64) -> Complex64 {
    let (s, c) = alpha.sin_cos();
    Complex64::new(
        -s * (l_ik * alpha + l_ij * s),
        l_ij * (c * s - alpha) + l_ik * (alpha * c - s),
    ) / (4.0 * area)
}

/// Finite-element initial data for the radial unit field about vertex `i`.
/// Independent of the radius of the smoothed source.
pub fn radial_initial_conditions(mesh: &IntrinsicMesh, i: usize) -> Result<RadialInitialData> {
    mesh.check_vertex(i)?;
    let mut center = Complex64::new(0.0, 0.0);
    let mut neighbors = Vec::new();
    let mut any_face = false;
    for h in mesh.outgoing(i) {
        let j = mesh.head(h);
        let t = mesh.twin(h);
        let mut local = Complex64::new(0.0, 0.0);
        if let Some(f) = mesh.face_of(h) {
            any_face = true;
            // Face ijk: corner alpha at i, k = tail(prev(h)).
            let alpha = mesh.corner_angle(h);
            let l_ik = mesh.halfedge_length(mesh.prev(h));
            local += neighbor_term(alpha, l_ik, mesh.face_area(f));
            center += Complex64::from_polar(1.0, mesh.edge_direction(h))
                * center_term(alpha, mesh.halfedge_length(h), l_ik, mesh.face_area(f));
        }
        if let Some(f) = mesh.face_of(t) {
            // Face jil: corner beta at i is at the tail of i -> l = next(t).
            let il = mesh.next(t);
            let beta = mesh.corner_angle(il);
            local += neighbor_term(beta, mesh.halfedge_length(il), mesh.face_area(f)).conj();
        }
        // Rotate into the frame of i, then carry across the edge to j.
        let value =
            mesh.transport_rotation(h) * Complex64::from_polar(1.0, mesh.edge_direction(h)) * local;
        neighbors.push((j, value));
    }
    if !any_face {
        return Err(Error::IsolatedVertex(i));
    }
    Ok(RadialInitialData {
        source: i,
        center,
        neighbors,
    })
}

/// Unit vectors along the outgoing edges at each neighbor and zero at the
/// source: the simple alternative to [`radial_initial_conditions`].
pub fn naive_radial_initial_conditions(
    mesh: &IntrinsicMesh,
    i: usize,
) -> Result<RadialInitialData> {
    mesh.check_vertex(i)?;
    let neighbors = mesh
        .outgoing(i)
        .map(|h| {
            let j = mesh.head(h);
            (
                j,
                Complex64::from_polar(
                    1.0,
                    mesh.edge_direction(mesh.twin(h)) + std::f64::consts::PI,
                ),
            )
        })
        .collect();
    Ok(RadialInitialData {
        source: i,
        center: Complex64::new(0.0, 0.0),
        neighbors,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RadialInit {
    #[default]
    FiniteElement,
    Naive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogMapField {
    pub basepoint: SurfacePoint,
    /// Unit zero direction at the basepoint, in its frame.
    pub zero_direction: Complex64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub r: Vec<f64>,
    pub phi: Vec<f64>,
    pub radial: Vec<Complex64>,
    pub horizontal: Vec<Complex64>,
}

impl LogMapField {
    pub fn coordinates(&self, vertex: usize) -> (f64, f64) {
        (self.u[vertex], self.v[vertex])
    }

    /// Log-map coordinates at any surface point (linear inside faces).
    pub fn logmap_at(&self, mesh: &IntrinsicMesh, p: SurfacePoint) -> (f64, f64) {
        match p {
            SurfacePoint::Vertex { vertex } => (self.u[vertex], self.v[vertex]),
            _ => (p.interpolate(mesh, &self.u), p.interpolate(mesh, &self.v)),
        }
    }

    /// Interpolated radial coordinate.
    pub fn distance_at(&self, mesh: &IntrinsicMesh, p: SurfacePoint) -> f64 {
        p.interpolate(mesh, &self.r)
    }

    /// `(u, v)` as a tangent vector at the basepoint, in its frame.
    pub fn to_tangent(&self, uv: (f64, f64)) -> Complex64 {
        Complex64::new(uv.0, uv.1) * self.zero_direction
    }
}

fn normalized(z: Complex64) -> Complex64 {
    let n = z.norm();
    if n > 0.0 && n.is_finite() {
        z / n
    } else {
        Complex64::new(0.0, 0.0)
    }
}

/// Log map about `basepoint`. `zero_direction` is a tangent vector at the
/// basepoint (vertex polar frame or face layout frame) marking `φ = 0`.
pub fn compute_log_map(
    solver: &VectorHeatSolver,
    basepoint: SurfacePoint,
    zero_direction: Complex64,
    init: RadialInit,
) -> Result<LogMapField> {
    let mesh = solver.mesh();
    let op = solver.operator_mesh();
    basepoint.validate(mesh)?;
    if !(zero_direction.norm() > 0.0) {
        return Err(Error::ZeroVector);
    }
    let h0 = normalized(zero_direction);
    let n = mesh.vertex_count();

    // Horizontal field: transport of H0, directions only.
    let mut hs = SourceSet::<Complex64>::new();
    hs.push_point(mesh, basepoint, h0)?;
    let mut y0 = vec![Complex64::new(0.0, 0.0); n];
    for e in &hs.entries {
        y0[e.vertex] += e.value * e.weight;
    }
    let horizontal: Vec<Complex64> = solver
        .diffuse_vector(&y0, 1)?
        .into_iter()
        .map(normalized)
        .collect();

    // Radial field from the finite-element initial data at each corner.
    let mut x0 = vec![Complex64::new(0.0, 0.0); n];
    for (vertex, w) in basepoint.weights(mesh) {
        let data = match init {
            RadialInit::FiniteElement => radial_initial_conditions(op, vertex)?,
            RadialInit::Naive => naive_radial_initial_conditions(op, vertex)?,
        };
        x0[vertex] += data.center * w;
        for (j, x) in data.neighbors {
            x0[j] += x * w;
        }
    }
    let mut radial: Vec<Complex64> = solver
        .diffuse_vector(&x0, 1)?
        .into_iter()
        .map(normalized)
        .collect();
    if let SurfacePoint::Vertex { vertex } = basepoint {
        radial[vertex] = Complex64::new(0.0, 0.0);
    }

    // Angle from H to R.
    let phi: Vec<f64> = (0..n)
        .map(|i| {
            if radial[i] == Complex64::new(0.0, 0.0) || horizontal[i] == Complex64::new(0.0, 0.0) {
                0.0
            } else {
                (radial[i] * horizontal[i].conj()).arg()
            }
        })
        .collect();

    // Radial coordinate: L r = -div R, gauged to vanish at the basepoint.
    let div = divergence(op, &radial)?;
    let rhs: Vec<f64> = div.iter().map(|d| -d).collect();
    let mut r = solver.solve_poisson(&rhs)?;
    // The source itself is singular for R, which offsets r by about h/2.
    // Fit the shift to the exactly known distances around the basepoint.
    let shift = match basepoint {
        SurfacePoint::Vertex { vertex } => {
            let ring: Vec<f64> = op
                .outgoing(vertex)
                .map(|h| r[op.head(h)] - op.halfedge_length(h))
                .collect();
            ring.iter().sum::<f64>() / ring.len() as f64
        }
        SurfacePoint::Face { face, bary } => {
            let layout = mesh.face_layout(face);
            let q = layout[0] * bary[0] + layout[1] * bary[1] + layout[2] * bary[2];
            let verts = mesh.face_vertices(face);
            (0..3)
                .map(|c| bary[c] * (r[verts[c]] - (layout[c] - q).norm()))
                .sum()
        }
    };
    for x in &mut r {
        *x -= shift;
    }
    if let SurfacePoint::Vertex { vertex } = basepoint {
        r[vertex] = 0.0;
    }

    let u = (0..n).map(|i| r[i] * phi[i].cos()).collect();
    let v = (0..n).map(|i| r[i] * phi[i].sin()).collect();
    Ok(LogMapField {
        basepoint,
        zero_direction: h0,
        u,
        v,
        r,
        phi,
        radial,
        horizontal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;
    use crate::vhm::SolverOptions;
    use nalgebra::Vector3;
    use std::f64::consts::{FRAC_PI_3, PI};

    fn hexagon_fan() -> IntrinsicMesh {
        let mut positions = vec![Vector3::zeros()];
        for a in 0..6 {
            let t = FRAC_PI_3 * a as f64;
            positions.push(Vector3::new(t.cos(), t.sin(), 0.0));
        }
        let faces: Vec<[usize; 3]> = (0..6).map(|a| [0, 1 + a, 1 + (a + 1) % 6]).collect();
        IntrinsicMesh::from_positions(&faces, positions).unwrap()
    }

    #[test]
    fn hexagon_fan_initial_data() {
        let m = hexagon_fan();
        let d = radial_initial_conditions(&m, 0).unwrap();
        assert!(d.center.norm() < 1e-14);
        assert_eq!(d.neighbors.len(), 6);
        for (j, x) in d.neighbors {
            // π/3 along the outgoing edge direction, seen from j.
            let outward = m
                .extrinsic_to_tangent(j, m.positions().unwrap()[j])
                .unwrap()
                .value;
            assert!((x - outward * (PI / 3.0)).norm() < 1e-12, "{j}: {x}");
        }
        assert!(matches!(
            radial_initial_conditions(&m, 9),
            Err(Error::VertexOutOfRange { .. })
        ));
    }

    #[test]
    fn flat_disk_log_map_is_identity_chart() {
        let m = generators::disk(20, 1.0).build().unwrap();
        let s = VectorHeatSolver::new(&m, SolverOptions::default()).unwrap();
        let x = m.extrinsic_to_tangent(0, Vector3::x()).unwrap();
        let field = compute_log_map(
            &s,
            SurfacePoint::vertex(0),
            x.value,
            RadialInit::FiniteElement,
        )
        .unwrap();
        let p = m.positions().unwrap();
        // First order in h, largest on the Neumann boundary.
        let h = m.mean_edge_length();
        let (mut worst, mut inner): (f64, f64) = (0.0, 0.0);
        for i in 0..m.vertex_count() {
            let e = ((field.u[i] - p[i].x).powi(2) + (field.v[i] - p[i].y).powi(2)).sqrt();
            worst = worst.max(e);
            if p[i].xy().norm() < 0.8 {
                inner = inner.max(e);
            }
        }
        assert!(worst < 0.6 * h, "max error {worst}");
        assert!(inner < 0.01, "interior error {inner}");
        assert_eq!(field.r[0], 0.0);
        assert!(field.r.iter().skip(1).all(|&r| r > 0.0));
        // Gauge covariance.
        let rot = Complex64::from_polar(1.0, 0.4);
        let g = compute_log_map(
            &s,
            SurfacePoint::vertex(0),
            x.value * rot,
            RadialInit::FiniteElement,
        )
        .unwrap();
        for i in 1..m.vertex_count() {
            let d = (g.phi[i] - field.phi[i] + 0.4).rem_euclid(std::f64::consts::TAU);
            assert!(d.min(std::f64::consts::TAU - d) < 1e-8);
            assert!((g.r[i] - field.r[i]).abs() < 1e-12);
        }
        assert!(compute_log_map(
            &s,
            SurfacePoint::vertex(0),
            Complex64::new(0.0, 0.0),
            RadialInit::Naive
        )
        .is_err());
    }

    #[test]
    fn logmap_at_interpolates() {
        let m = generators::disk(8, 1.0).build().unwrap();
        let s = VectorHeatSolver::new(&m, SolverOptions::default()).unwrap();
        let field = compute_log_map(
            &s,
            SurfacePoint::vertex(0),
            Complex64::new(1.0, 0.0),
            RadialInit::FiniteElement,
        )
        .unwrap();
        assert_eq!(
            field.logmap_at(&m, SurfacePoint::vertex(5)),
            field.coordinates(5)
        );
        let [a, b, c] = m.face_vertices(17);
        let (u, v) = field.logmap_at(&m, SurfacePoint::barycenter(17));
        assert!((u - (field.u[a] + field.u[b] + field.u[c]) / 3.0).abs() < 1e-15);
        assert!((v - (field.v[a] + field.v[b] + field.v[c]) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn face_basepoint_gauge() {
        let m = generators::disk(14, 1.0).build().unwrap();
        let s = VectorHeatSolver::new(&m, SolverOptions::default()).unwrap();
        let f = 40;
        let bp = SurfacePoint::face(f, [0.2, 0.3, 0.5]).unwrap();
        let z = m.face_vector_from_extrinsic(f, Vector3::y()).unwrap();
        let field = compute_log_map(&s, bp, z, RadialInit::FiniteElement).unwrap();
        let c = bp.position(&m).unwrap();
        let p = m.positions().unwrap();
        for v in m.face_vertices(f) {
            assert!((field.r[v] - (p[v] - c).norm()).abs() < 0.01);
        }
        // φ = 0 along +y: u measures the y offset, v the -x offset.
        let mut worst: f64 = 0.0;
        for i in 0..m.vertex_count() {
            let d = p[i] - c;
            let e = ((field.u[i] - d.y).powi(2) + (field.v[i] + d.x).powi(2)).sqrt();
            worst = worst.max(e);
        }
        assert!(worst < 1.0 * m.mean_edge_length(), "{worst}");
    }

    #[test]
    fn one_ring_is_isometric_on_a_flat_fan() {
        let m = generators::disk(6, 1.0).build().unwrap();
        let s = VectorHeatSolver::new(&m, SolverOptions::default()).unwrap();
        let x = m.extrinsic_to_tangent(0, Vector3::x()).unwrap();
        let field = compute_log_map(
            &s,
            SurfacePoint::vertex(0),
            x.value,
            RadialInit::FiniteElement,
        )
        .unwrap();
        let p = m.positions().unwrap();
        for j in 1..7 {
            let z = Complex64::new(field.u[j], field.v[j]);
            let q = Complex64::new(p[j].x, p[j].y);
            assert!((z - q).norm() < 1e-6 * q.norm(), "{j}: {z} vs {q}");
        }
    }

    #[test]
    fn finite_element_data_beats_naive_on_irregular_sphere() {
        use crate::oracles::SphereOracle;
        let o = SphereOracle::default();
        let m = generators::jitter(&generators::icosphere(4), 0.3, 11, true)
            .build()
            .unwrap();
        let s = VectorHeatSolver::new(&m, SolverOptions::default()).unwrap();
        let p = m.positions().unwrap();
        let e0 = m
            .tangent_to_extrinsic(crate::TangentVector::new(0, Complex64::new(1.0, 0.0)))
            .unwrap();
        let mut errors = Vec::new();
        for init in [RadialInit::FiniteElement, RadialInit::Naive] {
            let f = compute_log_map(&s, SurfacePoint::vertex(0), Complex64::new(1.0, 0.0), init)
                .unwrap();
            let (mut er, mut ep, mut n) = (0.0, 0.0, 0);
            for i in 1..m.vertex_count() {
                let Ok((r, phi)) = o.log(p[0], p[i], e0) else {
                    continue;
                };
                if r > 2.5 {
                    continue;
                }
                let d = (f.phi[i] - phi).rem_euclid(std::f64::consts::TAU);
                ep += d.min(std::f64::consts::TAU - d);
                er += (f.r[i] - r).abs();
                n += 1;
            }
            errors.push((er / n as f64, ep / n as f64));
        }
        let (fe, naive) = (errors[0], errors[1]);
        assert!(fe.0 < 0.01 && fe.1 < 0.02, "{fe:?}");
        assert!(
            naive.0 > 5.0 * fe.0 && naive.1 > 5.0 * fe.1,
            "{fe:?} {naive:?}"
        );
    }
}
