//! The vector heat method: parallel transport by short-time diffusion of a
//! vector field, normalized by diffused magnitudes, plus closest-point
//! interpolation of scalars.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::idt::to_intrinsic_delaunay;
use crate::mesh::{IntrinsicMesh, SurfacePoint, TangentVector};
use crate::operators::{connection_laplacian, cotan_laplacian, lumped_mass, SparseMatrix};
use crate::solver::Factorization;

/// `|Y| / ū` below which a vertex is reported as degenerate.
const DEGENERATE_RATIO: f64 = 1e-12;

/// Relative shift added to the Poisson system to remove its constant kernel.
const POISSON_SHIFT: f64 = 1e-8;

/// `t = m·h²` with `h` the mean edge length.
pub fn choose_time(mesh: &IntrinsicMesh, multiplier: f64) -> Result<f64> {
    if !(multiplier > 0.0) || !multiplier.is_finite() {
        return Err(Error::InvalidTimeMultiplier(multiplier));
    }
    if mesh.edge_count() == 0 {
        return Err(Error::InvalidProblem("empty mesh".into()));
    }
    let h = mesh.mean_edge_length();
    Ok(multiplier * h * h)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub time_multiplier: f64,
    pub use_intrinsic_delaunay: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            time_multiplier: 1.0,
            use_intrinsic_delaunay: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceEntry<T> {
    pub vertex: usize,
    pub value: T,
    pub weight: f64,
}

/// Dirac sources at vertices. Entries at the same vertex are merged by
/// summing their weighted contributions when the right-hand sides are built.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SourceSet<T> {
    pub entries: Vec<SourceEntry<T>>,
}

impl<T: Copy> SourceSet<T> {
    pub fn new() -> Self {
        Self {
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, vertex: usize, value: T) -> &mut Self {
        self.push_weighted(vertex, value, 1.0)
    }

    pub fn push_weighted(&mut self, vertex: usize, value: T, weight: f64) -> &mut Self {
        self.entries.push(SourceEntry {
            vertex,
            value,
            weight,
        });
        self
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    fn check(&self, mesh: &IntrinsicMesh) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::EmptySources);
        }
        for e in &self.entries {
            mesh.check_vertex(e.vertex)?;
            if !(e.weight >= 0.0) || !e.weight.is_finite() {
                return Err(Error::InvalidProblem(format!("source weight {}", e.weight)));
            }
        }
        if self.entries.iter().all(|e| e.weight == 0.0) {
            return Err(Error::ZeroSources);
        }
        Ok(())
    }
}

impl SourceSet<f64> {
    /// Scalar source at a surface point, split barycentrically.
    pub fn push_point(
        &mut self,
        mesh: &IntrinsicMesh,
        point: SurfacePoint,
        value: f64,
    ) -> Result<&mut Self> {
        self.push_point_weighted(mesh, point, value, 1.0)
    }

    pub fn push_point_weighted(
        &mut self,
        mesh: &IntrinsicMesh,
        point: SurfacePoint,
        value: f64,
        weight: f64,
    ) -> Result<&mut Self> {
        point.validate(mesh)?;
        for (v, w) in point.weights(mesh) {
            self.push_weighted(v, value, w * weight);
        }
        Ok(self)
    }
}

impl SourceSet<Complex64> {
    /// Vector source at a surface point. At a vertex `vector` is in that
    /// vertex's polar frame, inside a face in the face's layout frame.
    pub fn push_point(
        &mut self,
        mesh: &IntrinsicMesh,
        point: SurfacePoint,
        vector: Complex64,
    ) -> Result<&mut Self> {
        self.push_point_weighted(mesh, point, vector, 1.0)
    }

    pub fn push_point_weighted(
        &mut self,
        mesh: &IntrinsicMesh,
        point: SurfacePoint,
        vector: Complex64,
        weight: f64,
    ) -> Result<&mut Self> {
        point.validate(mesh)?;
        match point {
            SurfacePoint::Vertex { vertex } => {
                self.push_weighted(vertex, vector, weight);
            }
            SurfacePoint::Face { face, bary } => {
                for (k, h) in mesh.face_halfedges(face).into_iter().enumerate() {
                    if bary[k] != 0.0 {
                        let local = mesh.vertex_to_face_rotation(h).conj() * vector;
                        self.push_weighted(mesh.tail(h), local, bary[k] * weight);
                    }
                }
            }
        }
        Ok(self)
    }
}

/// Per-vertex output of [`VectorHeatSolver::transport`].
#[derive(Debug, Clone, PartialEq)]
pub struct TransportResult {
    /// `ū · Y/|Y|` (for `k > 1`, `ū` times the principal `k`-th root).
    pub field: Vec<Complex64>,
    /// The diffused field `Y_t` before normalization, in `k`-th power form.
    pub direction: Vec<Complex64>,
    /// Interpolated magnitudes `ū = u_t / φ_t`.
    pub magnitude: Vec<f64>,
    pub degenerate: Vec<bool>,
    pub t: f64,
    pub degree: u32,
}

impl TransportResult {
    pub fn vector(&self, v: usize) -> TangentVector {
        TangentVector::new(v, self.field[v])
    }

    /// All `k` representatives of the `k`-direction at `v`.
    pub fn roots(&self, v: usize) -> Vec<Complex64> {
        let k = self.degree as usize;
        (0..k)
            .map(|j| {
                self.field[v]
                    * Complex64::from_polar(1.0, std::f64::consts::TAU * j as f64 / k as f64)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarResult {
    pub values: Vec<f64>,
    pub degenerate: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundTrip {
    /// The complex ratio `(A_ij A_ji x) / x`.
    pub ratio: Complex64,
    /// `|Im ratio| / |ratio|`.
    pub relative_imaginary: f64,
    pub angle_error: f64,
}

type Cached<T> = Mutex<Option<Arc<Factorization<T>>>>;

/// Owns the operator mesh, its Laplacians and lazily built
/// prefactorizations. Each factorization is computed at most once; every
/// query afterwards only backsolves.
pub struct VectorHeatSolver {
    mesh: IntrinsicMesh,
    operator_mesh: IntrinsicMesh,
    flip_count: usize,
    t: f64,
    mass: Vec<f64>,
    laplacian: SparseMatrix<f64>,
    heat: Cached<f64>,
    poisson: Cached<f64>,
    vector: Mutex<BTreeMap<u32, Arc<Factorization<Complex64>>>>,
    factor_count: AtomicUsize,
}

impl std::fmt::Debug for VectorHeatSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VectorHeatSolver")
            .field("vertices", &self.mesh.vertex_count())
            .field("t", &self.t)
            .field("flips", &self.flip_count)
            .finish()
    }
}

impl VectorHeatSolver {
    pub fn new(mesh: &IntrinsicMesh, options: SolverOptions) -> Result<Self> {
        let t = choose_time(mesh, options.time_multiplier)?;
        Self::with_time(mesh, t, options.use_intrinsic_delaunay)
    }

    pub fn with_time(mesh: &IntrinsicMesh, t: f64, use_intrinsic_delaunay: bool) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidTime(t));
        }
        let (operator_mesh, flip_count) = if use_intrinsic_delaunay {
            let r = to_intrinsic_delaunay(mesh)?;
            (r.mesh, r.flip_count)
        } else {
            (mesh.clone(), 0)
        };
        let mass = lumped_mass(&operator_mesh);
        let laplacian = cotan_laplacian(&operator_mesh);
        Ok(Self {
            mesh: mesh.clone(),
            operator_mesh,
            flip_count,
            t,
            mass,
            laplacian,
            heat: Mutex::new(None),
            poisson: Mutex::new(None),
            vector: Mutex::new(BTreeMap::new()),
            factor_count: AtomicUsize::new(0),
        })
    }

    pub fn mesh(&self) -> &IntrinsicMesh {
        &self.mesh
    }

    /// Mesh the operators are assembled on (intrinsic Delaunay by default).
    pub fn operator_mesh(&self) -> &IntrinsicMesh {
        &self.operator_mesh
    }

    pub fn flip_count(&self) -> usize {
        self.flip_count
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn laplacian(&self) -> &SparseMatrix<f64> {
        &self.laplacian
    }

    /// Number of numeric factorizations performed so far.
    pub fn factorization_count(&self) -> usize {
        self.factor_count.load(Ordering::Relaxed)
    }

    fn cached<T: crate::solver::Scalar>(
        &self,
        slot: &Cached<T>,
        build: impl FnOnce() -> Result<SparseMatrix<T>>,
    ) -> Result<Arc<Factorization<T>>> {
        let mut guard = slot.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(f) = guard.as_ref() {
            return Ok(f.clone());
        }
        let f = Arc::new(Factorization::new(build()?)?);
        self.factor_count.fetch_add(1, Ordering::Relaxed);
        *guard = Some(f.clone());
        Ok(f)
    }

    /// Factorization of `M + tL`.
    pub fn heat_factorization(&self) -> Result<Arc<Factorization<f64>>> {
        self.cached(&self.heat, || {
            Ok(self.laplacian.scaled_plus_diagonal(self.t, &self.mass))
        })
    }

    /// Factorization of `L + εM`, used for the log-map Poisson problem.
    pub fn poisson_factorization(&self) -> Result<Arc<Factorization<f64>>> {
        self.cached(&self.poisson, || {
            let n = self.mass.len().max(1) as f64;
            let l_scale = (0..self.laplacian.rows)
                .map(|i| self.laplacian.get(i, i))
                .sum::<f64>()
                / n;
            let m_scale = self.mass.iter().sum::<f64>() / n;
            let eps = POISSON_SHIFT * l_scale / m_scale;
            Ok(self.laplacian.add_diagonal(&self.mass, eps))
        })
    }

    /// Factorization of `M + tL∇` for `k`-direction fields.
    pub fn vector_factorization(&self, k: u32) -> Result<Arc<Factorization<Complex64>>> {
        if k == 0 {
            return Err(Error::InvalidDegree(k));
        }
        let mut map = self.vector.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(f) = map.get(&k) {
            return Ok(f.clone());
        }
        let mass: Vec<Complex64> = self.mass.iter().map(|&m| Complex64::new(m, 0.0)).collect();
        let a = connection_laplacian(&self.operator_mesh, k)?
            .scaled_plus_diagonal(Complex64::new(self.t, 0.0), &mass);
        let f = Arc::new(Factorization::new(a)?);
        self.factor_count.fetch_add(1, Ordering::Relaxed);
        map.insert(k, f.clone());
        Ok(f)
    }

    /// Builds the scalar heat and the degree-`k` vector heat factorizations.
    pub fn prefactor(&self, degrees: &[u32]) -> Result<()> {
        self.heat_factorization()?;
        for &k in degrees {
            self.vector_factorization(k)?;
        }
        Ok(())
    }

    /// One backward Euler step of the scalar heat flow from `u0`.
    pub fn diffuse_scalar(&self, u0: &[f64]) -> Result<Vec<f64>> {
        self.heat_factorization()?.solve(u0)
    }

    /// One backward Euler step of the degree-`k` vector heat flow.
    pub fn diffuse_vector(&self, y0: &[Complex64], k: u32) -> Result<Vec<Complex64>> {
        self.vector_factorization(k)?.solve(y0)
    }

    /// Solves `L r = b` up to the constant kernel.
    pub fn solve_poisson(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.poisson_factorization()?.solve(b)
    }

    /// Transports the source vectors along shortest geodesics to every
    /// vertex. With `k > 1` each source is a `k`-direction given by any of
    /// its representatives.
    pub fn transport(&self, sources: &SourceSet<Complex64>, k: u32) -> Result<TransportResult> {
        if k == 0 {
            return Err(Error::InvalidDegree(k));
        }
        sources.check(&self.mesh)?;
        if sources
            .entries
            .iter()
            .all(|e| e.value == Complex64::new(0.0, 0.0) || e.weight == 0.0)
        {
            return Err(Error::ZeroVector);
        }
        let n = self.mesh.vertex_count();
        let mut y0 = vec![Complex64::new(0.0, 0.0); n];
        let mut u0 = vec![0.0; n];
        let mut phi0 = vec![0.0; n];
        for e in &sources.entries {
            let mag = e.value.norm();
            if mag > 0.0 {
                y0[e.vertex] += e.weight * mag * (e.value / mag).powu(k);
            }
            u0[e.vertex] += e.weight * mag;
            phi0[e.vertex] += e.weight;
        }
        let y = self.diffuse_vector(&y0, k)?;
        let u = self.diffuse_scalar(&u0)?;
        let phi = self.diffuse_scalar(&phi0)?;

        let mut field = vec![Complex64::new(0.0, 0.0); n];
        let mut magnitude = vec![0.0; n];
        let mut degenerate = vec![false; n];
        for i in 0..n {
            if !(phi[i] > 0.0) {
                degenerate[i] = true;
                continue;
            }
            magnitude[i] = u[i] / phi[i];
            let norm = y[i].norm();
            if !(norm > DEGENERATE_RATIO * u[i].abs()) || norm == 0.0 {
                degenerate[i] = true;
                continue;
            }
            let dir = y[i] / norm;
            let dir = if k == 1 {
                dir
            } else {
                Complex64::from_polar(1.0, dir.arg() / k as f64)
            };
            field[i] = dir * magnitude[i];
        }
        Ok(TransportResult {
            field,
            direction: y,
            magnitude,
            degenerate,
            t: self.t,
            degree: k,
        })
    }

    /// Closest-point interpolation `ū = u_t / φ_t` of scalar sources.
    pub fn interpolate(&self, sources: &SourceSet<f64>) -> Result<ScalarResult> {
        sources.check(&self.mesh)?;
        let n = self.mesh.vertex_count();
        let mut u0 = vec![0.0; n];
        let mut phi0 = vec![0.0; n];
        for e in &sources.entries {
            u0[e.vertex] += e.weight * e.value;
            phi0[e.vertex] += e.weight;
        }
        let u = self.diffuse_scalar(&u0)?;
        let phi = self.diffuse_scalar(&phi0)?;
        let mut values = vec![0.0; n];
        let mut degenerate = vec![false; n];
        for i in 0..n {
            if phi[i] > f64::MIN_POSITIVE {
                values[i] = u[i] / phi[i];
            } else {
                degenerate[i] = true;
            }
        }
        Ok(ScalarResult { values, degenerate })
    }

    /// Transports a unit vector from `i` to `j` with the unnormalized heat
    /// operator, then back from `j` to `i`. The solution operator is
    /// Hermitian, so the returned ratio is real and positive.
    pub fn roundtrip(&self, i: usize, j: usize) -> Result<RoundTrip> {
        self.mesh.check_vertex(i)?;
        self.mesh.check_vertex(j)?;
        if i == j {
            return Err(Error::InvalidProblem(
                "round trip needs two distinct vertices".into(),
            ));
        }
        let n = self.mesh.vertex_count();
        let x = Complex64::new(1.0, 0.0);
        let mut b = vec![Complex64::new(0.0, 0.0); n];
        b[i] = x;
        let there = self.diffuse_vector(&b, 1)?;
        let mut b = vec![Complex64::new(0.0, 0.0); n];
        b[j] = there[j];
        let back = self.diffuse_vector(&b, 1)?;
        let ratio = back[i] / x;
        let norm = ratio.norm();
        if !(norm > 0.0) {
            return Err(Error::Numerical("round trip underflow".into()));
        }
        Ok(RoundTrip {
            ratio,
            relative_imaginary: ratio.im.abs() / norm,
            angle_error: ratio.arg().abs(),
        })
    }
}
