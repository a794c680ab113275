//! Reference values for tests and validation: closed-form sphere geometry,
//! flat-plane charts, exhaustive energy minimization, numerical quadrature
//! of the radial initial data and a Lanczos eigenvalue estimate.
//!
//! Nothing here calls into the transport, log-map or center code.

use nalgebra::{DMatrix, DVector, Vector2, Vector3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mesh::IntrinsicMesh;
use crate::operators::SparseMatrix;
use crate::solver::Factorization;

/// Closed-form geometry of a sphere centered at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereOracle {
    pub radius: f64,
}

impl Default for SphereOracle {
    fn default() -> Self {
        Self { radius: 1.0 }
    }
}

/// Below this `sin` of the central angle two points count as antipodal.
const ANTIPODAL_EPS: f64 = 1e-12;

fn rotate(v: Vector3<f64>, axis: Vector3<f64>, angle: f64) -> Vector3<f64> {
    let (s, c) = angle.sin_cos();
    v * c + axis.cross(&v) * s + axis * axis.dot(&v) * (1.0 - c)
}

impl SphereOracle {
    pub fn new(radius: f64) -> Self {
        Self { radius }
    }

    pub fn project(&self, x: Vector3<f64>) -> Vector3<f64> {
        x.normalize() * self.radius
    }

    pub fn central_angle(&self, x: Vector3<f64>, y: Vector3<f64>) -> f64 {
        let (a, b) = (x.normalize(), y.normalize());
        a.cross(&b).norm().atan2(a.dot(&b))
    }

    pub fn distance(&self, x: Vector3<f64>, y: Vector3<f64>) -> f64 {
        self.radius * self.central_angle(x, y)
    }

    /// Parallel transport of the tangent vector `v` at `x` to `y` along the
    /// shortest great circle.
    pub fn transport(
        &self,
        x: Vector3<f64>,
        y: Vector3<f64>,
        v: Vector3<f64>,
    ) -> Result<Vector3<f64>> {
        let (a, b) = (x.normalize(), y.normalize());
        let n = a.cross(&b);
        let s = n.norm();
        if s < ANTIPODAL_EPS {
            return if a.dot(&b) > 0.0 {
                Ok(v)
            } else {
                Err(Error::Antipodal)
            };
        }
        Ok(rotate(v, n / s, s.atan2(a.dot(&b))))
    }

    /// Unit tangent at `x` obtained by rotating `e0` by `phi` counter-clockwise
    /// about the outward normal.
    fn tangent_direction(x: Vector3<f64>, e0: Vector3<f64>, phi: f64) -> Vector3<f64> {
        let n = x.normalize();
        let e = (e0 - n * n.dot(&e0)).normalize();
        e * phi.cos() + n.cross(&e) * phi.sin()
    }

    /// Geodesic polar coordinates `(r, φ)` of `y` about `x`, with `φ`
    /// measured counter-clockwise from the tangent direction `e0`.
    pub fn log(&self, x: Vector3<f64>, y: Vector3<f64>, e0: Vector3<f64>) -> Result<(f64, f64)> {
        let (a, b) = (x.normalize(), y.normalize());
        let s = a.cross(&b).norm();
        if s < ANTIPODAL_EPS && a.dot(&b) < 0.0 {
            return Err(Error::Antipodal);
        }
        let r = self.radius * s.atan2(a.dot(&b));
        if r == 0.0 {
            return Ok((0.0, 0.0));
        }
        let d = b - a * a.dot(&b);
        let e = (e0 - a * a.dot(&e0)).normalize();
        let phi = d.dot(&a.cross(&e)).atan2(d.dot(&e));
        Ok((r, phi))
    }

    /// Inverse of [`SphereOracle::log`].
    pub fn exp(&self, x: Vector3<f64>, e0: Vector3<f64>, r: f64, phi: f64) -> Vector3<f64> {
        let a = x.normalize();
        let d = Self::tangent_direction(a, e0, phi);
        let t = r / self.radius;
        (a * t.cos() + d * t.sin()) * self.radius
    }
}

/// Exact flat-chart quantities for meshes lying in the `z = 0` plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlanarQuantity {
    /// Euclidean distance to a point.
    Distance { from: Vector2<f64> },
    /// Log map about `base` with `φ = 0` along `zero`, as `u + iv`.
    LogMap {
        base: Vector2<f64>,
        zero: Vector2<f64>,
    },
    /// A constant vector field: the extrinsic vector itself.
    Constant { vector: Vector2<f64> },
}

/// Per-vertex reference values; real for distances, `u + iv` or `x + iy`
/// otherwise.
pub fn planar_reference(mesh: &IntrinsicMesh, quantity: PlanarQuantity) -> Result<Vec<Complex64>> {
    let pos = mesh.positions().ok_or(Error::NoEmbedding)?;
    Ok(pos
        .iter()
        .map(|p| {
            let q = Vector2::new(p.x, p.y);
            match quantity {
                PlanarQuantity::Distance { from } => Complex64::new((q - from).norm(), 0.0),
                PlanarQuantity::LogMap { base, zero } => {
                    let d = Complex64::new(q.x - base.x, q.y - base.y);
                    let z = Complex64::new(zero.x, zero.y);
                    d * z.conj() / z.norm()
                }
                PlanarQuantity::Constant { vector } => Complex64::new(vector.x, vector.y),
            }
        })
        .collect())
}

/// Exhaustive minimizer over vertices of `Σ w_i d(v, y_i)^p`. `distance`
/// gets a vertex and a sample index.
pub fn brute_force_center(
    vertex_count: usize,
    weights: &[f64],
    p: f64,
    distance: impl Fn(usize, usize) -> f64,
) -> (usize, f64) {
    (0..vertex_count)
        .map(|v| {
            let e: f64 = weights
                .iter()
                .enumerate()
                .map(|(i, w)| w * distance(v, i).powf(p))
                .sum();
            (v, e)
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((0, f64::INFINITY))
}

/// Numerical quadrature of the radial initial data around vertex `i`, by
/// integrating hat functions over a circle of radius `eps` in each face.
/// Values are in the polar frame of `i`: `(center, [(neighbor, value)])`.
pub fn radial_quadrature(
    mesh: &IntrinsicMesh,
    i: usize,
    eps: f64,
    samples: usize,
) -> (Complex64, Vec<(usize, Complex64)>) {
    let mut center = Complex64::new(0.0, 0.0);
    let mut out: Vec<(usize, Complex64)> = Vec::new();
    let add = |out: &mut Vec<(usize, Complex64)>, j: usize, z: Complex64| match out
        .iter_mut()
        .find(|e| e.0 == j)
    {
        Some(e) => e.1 += z,
        None => out.push((j, z)),
    };
    for h in mesh.outgoing(i) {
        let Some(_) = mesh.face_of(h) else { continue };
        // Face (i, a, b) counter-clockwise with a on +x.
        let a = mesh.head(h);
        let b = mesh.tail(mesh.prev(h));
        let (l_ia, l_ib) = (mesh.halfedge_length(h), mesh.halfedge_length(mesh.prev(h)));
        let l_ab = mesh.halfedge_length(mesh.next(h));
        let alpha = ((l_ia * l_ia + l_ib * l_ib - l_ab * l_ab) / (2.0 * l_ia * l_ib))
            .clamp(-1.0, 1.0)
            .acos();
        let pa = Vector2::new(l_ia, 0.0);
        let pb = Vector2::new(l_ib * alpha.cos(), l_ib * alpha.sin());
        let det = pa.x * pb.y - pa.y * pb.x;
        // Barycentric weights of a point q for corners a and b.
        let hat = |q: Vector2<f64>| {
            (
                (q.x * pb.y - q.y * pb.x) / det,
                (pa.x * q.y - pa.y * q.x) / det,
            )
        };
        // Composite Simpson in θ over [0, α].
        let n = 2 * samples.max(1);
        let dt = alpha / n as f64;
        let (mut ia, mut ib, mut ic) = (
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
        );
        for s in 0..=n {
            let w = if s == 0 || s == n {
                1.0
            } else if s % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let th = s as f64 * dt;
            let dir = Complex64::from_polar(1.0, th);
            let (wa, wb) = hat(Vector2::new(eps * th.cos(), eps * th.sin()));
            // Measure (1/ε²)·n(θ)·ε dθ; the constant part of ψ_i is dropped.
            let k = w * dt / 3.0 / eps;
            ia += dir * (wa * k);
            ib += dir * (wb * k);
            ic += dir * ((-wa - wb) * k);
        }
        // Each neighbor's integral is taken in the hinge chart with its own
        // edge on +x, then rotated by that edge's frame angle.
        let frame = Complex64::from_polar(1.0, mesh.edge_direction(h));
        add(&mut out, a, frame * ia);
        let frame_b =
            Complex64::from_polar(1.0, mesh.edge_direction(mesh.twin(mesh.prev(h))) - alpha);
        add(&mut out, b, frame_b * ib);
        center += frame * ic;
    }
    (center, out)
}

/// Smallest eigenvalue of a symmetric matrix by Lanczos on the shift-inverted
/// operator `(A + σI)⁻¹`, with full reorthogonalization. Fails with
/// [`Error::NotPositiveDefinite`] when `A + σI` cannot be factored, which
/// already certifies an eigenvalue below `-σ`.
pub fn smallest_eigenvalue(
    a: &SparseMatrix<f64>,
    sigma: f64,
    iterations: usize,
    seed: u64,
) -> Result<f64> {
    let n = a.rows;
    let shifted = a.add_diagonal(&vec![1.0; n], sigma);
    let f = Factorization::new(shifted)?;
    let k = iterations.min(n).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
    q /= q.norm();
    let mut basis: Vec<DVector<f64>> = vec![q];
    let (mut alphas, mut betas) = (Vec::new(), Vec::new());
    for step in 0..k {
        let qj = &basis[step];
        let mut w = DVector::from_vec(f.solve(qj.as_slice())?);
        let alpha = w.dot(qj);
        alphas.push(alpha);
        for _ in 0..2 {
            for b in &basis {
                let c = w.dot(b);
                w -= b * c;
            }
        }
        let beta = w.norm();
        if step + 1 == k || beta < 1e-14 * alpha.abs().max(1.0) {
            break;
        }
        betas.push(beta);
        basis.push(w / beta);
    }
    let m = alphas.len();
    let t = DMatrix::from_fn(m, m, |r, c| {
        if r == c {
            alphas[r]
        } else if r + 1 == c {
            betas[r]
        } else if c + 1 == r {
            betas[c]
        } else {
            0.0
        }
    });
    let mu = t.symmetric_eigenvalues().max();
    Ok(1.0 / mu - sigma)
}

/// Maximum absolute row sum, an upper bound on the spectral norm.
pub fn infinity_norm(a: &SparseMatrix<f64>) -> f64 {
    let mut rows = vec![0.0; a.rows];
    for (r, _, v) in a.triplets() {
        rows[r] += v.abs();
    }
    rows.into_iter().fold(0.0, f64::max)
}
