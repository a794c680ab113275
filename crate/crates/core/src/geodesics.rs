//! Straightest geodesics traced face by face. Each face is laid out in the
//! plane; crossing an edge unfolds the next face onto the current one.

use std::f64::consts::{PI, TAU};

use nalgebra::Vector2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mesh::{IntrinsicMesh, SurfacePoint, TangentVector, INVALID};

/// Barycentric distance at which a trace is considered to pass through a
/// vertex.
const VERTEX_SNAP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSegment {
    pub face: usize,
    /// Entry and exit points in the layout of `face`.
    pub from: Vector2<f64>,
    pub to: Vector2<f64>,
}

impl TraceSegment {
    pub fn length(&self) -> f64 {
        (self.to - self.from).norm()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicTrace {
    pub start: SurfacePoint,
    /// Angle of the initial direction in the frame of `start` (vertex polar
    /// frame or face layout frame).
    pub direction: f64,
    /// Requested arc length.
    pub length: f64,
    pub path: Vec<TraceSegment>,
    pub endpoint: SurfacePoint,
    /// Angle of the final direction in the layout frame of the endpoint's face.
    pub end_direction: f64,
    /// Set when the trace stopped early at the boundary.
    pub truncated: bool,
    pub vertex_hits: usize,
}

impl GeodesicTrace {
    /// Arc length actually travelled.
    pub fn travelled(&self) -> f64 {
        self.path.iter().map(TraceSegment::length).sum()
    }

    /// Unit tangent at the endpoint, in the endpoint's face layout frame.
    pub fn end_tangent(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.end_direction)
    }
}

fn barycentric(p: Vector2<f64>, tri: &[Vector2<f64>; 3]) -> [f64; 3] {
    let cross = |a: Vector2<f64>, b: Vector2<f64>| a.x * b.y - a.y * b.x;
    let area = cross(tri[1] - tri[0], tri[2] - tri[0]);
    let b0 = cross(tri[1] - p, tri[2] - p) / area;
    let b1 = cross(tri[2] - p, tri[0] - p) / area;
    [b0, b1, 1.0 - b0 - b1]
}

/// Rate of change of barycentric coordinates along direction `d`.
fn barycentric_rate(d: Vector2<f64>, tri: &[Vector2<f64>; 3]) -> [f64; 3] {
    let cross = |a: Vector2<f64>, b: Vector2<f64>| a.x * b.y - a.y * b.x;
    let area = cross(tri[1] - tri[0], tri[2] - tri[0]);
    let r0 = cross(tri[2] - tri[1], d) / area;
    let r1 = cross(tri[0] - tri[2], d) / area;
    [r0, r1, -r0 - r1]
}

/// Clamps an angle in `[0, 2π)` to the wedge `[0, width]`, snapping to the
/// nearer side.
fn clamp_to_wedge(offset: f64, width: f64) -> f64 {
    if offset <= width {
        offset
    } else if offset - width < TAU - offset {
        width
    } else {
        0.0
    }
}

fn angle_of(v: Vector2<f64>) -> f64 {
    v.y.atan2(v.x)
}

fn unit(angle: f64) -> Vector2<f64> {
    Vector2::new(angle.cos(), angle.sin())
}

impl IntrinsicMesh {
    /// Face and layout direction for polar angle `alpha` at vertex `v`, or
    /// `None` when it points into the exterior wedge of a boundary vertex.
    fn wedge_for_direction(&self, v: usize, alpha: f64) -> Option<(usize, f64)> {
        let alpha = alpha.rem_euclid(TAU);
        let mut best: Option<(f64, usize)> = None;
        for h in self.outgoing(v) {
            if self.face_of(h).is_none() {
                continue;
            }
            let offset = (alpha - self.direction[h]).rem_euclid(TAU);
            let width = self.normalized_angle(h);
            let excess = if offset <= width {
                0.0
            } else {
                (offset - width).min(TAU - offset)
            };
            if best.is_none_or(|(e, _)| excess < e) {
                best = Some((excess, h));
            }
        }
        let (excess, h) = best?;
        if excess > 1e-12 {
            return None;
        }
        let offset = clamp_to_wedge(
            (alpha - self.direction[h]).rem_euclid(TAU),
            self.normalized_angle(h),
        );
        let layout = self.layout_angle(h) + offset / self.angle_scale(v);
        Some((h, layout))
    }

    /// Polar angle at `tail(h)` of a direction given in the layout of
    /// `face_of(h)`.
    fn polar_from_layout(&self, h: usize, layout: f64) -> f64 {
        let within = clamp_to_wedge(
            (layout - self.layout_angle(h)).rem_euclid(TAU),
            self.corner_angle[h],
        );
        (self.direction[h] + within * self.angle_scale(self.tail(h))).rem_euclid(TAU)
    }
}

/// Traces the geodesic leaving `start` with initial velocity `v` (in the
/// frame of `start`) for arc length `|v|`.
pub fn trace_geodesic(
    mesh: &IntrinsicMesh,
    start: SurfacePoint,
    v: Complex64,
) -> Result<GeodesicTrace> {
    start.validate(mesh)?;
    let length = v.norm();
    if !(length > 0.0) || !length.is_finite() {
        return Err(Error::ZeroVector);
    }
    let direction = v.arg().rem_euclid(TAU);

    let mut trace = GeodesicTrace {
        start,
        direction,
        length,
        path: Vec::new(),
        endpoint: start,
        end_direction: direction,
        truncated: false,
        vertex_hits: 0,
    };

    // Current face, position and direction in that face's layout.
    let (mut face, mut pos, mut dir) = match start {
        SurfacePoint::Face { face, .. } => {
            let p = start
                .layout_position(mesh, face)
                .expect("point in its face");
            (face, p, unit(direction))
        }
        SurfacePoint::Vertex { vertex } => match mesh.wedge_for_direction(vertex, direction) {
            Some((h, layout)) => {
                let f = mesh.face_of(h).unwrap();
                let p = start.layout_position(mesh, f).unwrap();
                (f, p, unit(layout))
            }
            None => {
                // Direction leaves the surface immediately.
                let h = mesh
                    .outgoing(vertex)
                    .find(|&h| mesh.face_of(h).is_some())
                    .ok_or(Error::IsolatedVertex(vertex))?;
                let f = mesh.face_of(h).unwrap();
                let k = mesh.face_halfedges(f).iter().position(|&x| x == h).unwrap();
                let mut bary = [0.0; 3];
                bary[k] = 1.0;
                trace.endpoint = SurfacePoint::Face { face: f, bary };
                trace.end_direction = mesh.layout_angle(h);
                trace.truncated = true;
                return Ok(trace);
            }
        },
    };

    let mut remaining = length;
    let max_steps = 64 * mesh.face_count().max(16) + 1024;
    for _ in 0..max_steps {
        let tri = mesh.face_layout(face);
        let b = barycentric(pos, &tri);
        let rate = barycentric_rate(dir, &tri);
        // Nearest edge crossing along the ray.
        let mut exit: Option<(f64, usize)> = None;
        for k in 0..3 {
            if rate[k] < 0.0 {
                let s = (-b[k] / rate[k]).max(0.0);
                if exit.is_none_or(|(best, _)| s < best) {
                    exit = Some((s, k));
                }
            }
        }
        let (s, k) = exit.ok_or_else(|| Error::Numerical("trace direction degenerate".into()))?;
        if s >= remaining {
            let end = pos + dir * remaining;
            trace.path.push(TraceSegment {
                face,
                from: pos,
                to: end,
            });
            trace.endpoint = SurfacePoint::face_normalized(face, barycentric(end, &tri));
            trace.end_direction = angle_of(dir);
            return Ok(trace);
        }
        let exit_point = pos + dir * s;
        trace.path.push(TraceSegment {
            face,
            from: pos,
            to: exit_point,
        });
        remaining -= s;

        let hs = mesh.face_halfedges(face);
        let eb = barycentric(exit_point, &tri);
        // Vertex hit: another coordinate besides k is also ~0.
        let near_vertex = (0..3).filter(|&j| j != k).find(|&j| eb[j] < VERTEX_SNAP);
        if let Some(j) = near_vertex {
            // The vertex is the third one, with weight ~1.
            let vk = 3 - k - j;
            let h = hs[vk];
            let vertex = mesh.tail(h);
            trace.vertex_hits += 1;
            let back = (angle_of(-dir)).rem_euclid(TAU);
            let beta = mesh.polar_from_layout(h, back);
            if mesh.is_boundary_vertex(vertex) {
                let mut bary = [0.0; 3];
                bary[vk] = 1.0;
                trace.endpoint = SurfacePoint::Face { face, bary };
                trace.end_direction = angle_of(dir);
                trace.truncated = true;
                return Ok(trace);
            }
            let alpha = beta + PI;
            let (h2, layout) = mesh
                .wedge_for_direction(vertex, alpha)
                .ok_or_else(|| Error::Numerical("no wedge at interior vertex".into()))?;
            face = mesh.face_of(h2).unwrap();
            pos = SurfacePoint::vertex(vertex)
                .layout_position(mesh, face)
                .unwrap();
            dir = unit(layout);
            continue;
        }

        // Cross the edge opposite corner k: halfedge hs[(k + 1) % 3].
        let he = hs[(k + 1) % 3];
        let twin = mesh.twin(he);
        let next_face = mesh.he_face[twin];
        if next_face == INVALID {
            trace.endpoint = SurfacePoint::face_normalized(face, eb);
            trace.end_direction = angle_of(dir);
            trace.truncated = true;
            return Ok(trace);
        }
        let (pa, pb) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
        let lambda = ((exit_point - pa).dot(&(pb - pa)) / (pb - pa).norm_squared()).clamp(0.0, 1.0);
        let ntri = mesh.face_layout(next_face);
        let nhs = mesh.face_halfedges(next_face);
        let t = nhs.iter().position(|&x| x == twin).unwrap();
        // twin runs b -> a in the next face.
        let (qb, qa) = (ntri[t], ntri[(t + 1) % 3]);
        pos = qb + (qa - qb) * (1.0 - lambda);
        let rotation = angle_of(qb - qa) - angle_of(pb - pa);
        dir = unit(angle_of(dir) + rotation);
        face = next_face;
    }
    Err(Error::Numerical("geodesic trace did not terminate".into()))
}

/// Carries `x` (in the frame of the trace start) to the endpoint, keeping
/// its angle to the geodesic fixed. The result is in the layout frame of
/// the endpoint's face.
pub fn transport_along_trace(trace: &GeodesicTrace, x: Complex64) -> Complex64 {
    x * Complex64::from_polar(1.0, trace.end_direction - trace.direction)
}

/// Exponential map: endpoint of the geodesic with initial velocity `v`.
pub fn exp_map(mesh: &IntrinsicMesh, start: SurfacePoint, v: Complex64) -> Result<SurfacePoint> {
    Ok(trace_geodesic(mesh, start, v)?.endpoint)
}

/// Vector `x` given in the layout frame of `face`, expressed at vertex
/// `vertex` of that face in its polar frame (angles measured from the edges
/// of `face` are rescaled like the corner angle).
pub fn face_to_vertex(
    mesh: &IntrinsicMesh,
    face: usize,
    vertex: usize,
    x: Complex64,
) -> Result<TangentVector> {
    mesh.check_face(face)?;
    let h = mesh
        .face_halfedges(face)
        .into_iter()
        .find(|&h| mesh.tail(h) == vertex)
        .ok_or(Error::InvalidProblem(format!(
            "vertex {vertex} not in face {face}"
        )))?;
    Ok(TangentVector::new(
        vertex,
        mesh.vertex_to_face_rotation(h).conj() * x,
    ))
}
