//! Geodesic centers: Karcher means (`p = 2`), geometric medians (`p = 1`,
//! Weiszfeld weights), centroidal Voronoi tessellations and ordered
//! landmarks. Every step computes a log map at the current point and walks
//! along a traced geodesic.

use nalgebra::Vector3;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesics::trace_geodesic;
use crate::logmap::{compute_log_map, LogMapField, RadialInit};
use crate::mesh::{IntrinsicMesh, SurfacePoint};
use crate::vhm::VectorHeatSolver;

/// Default stopping tolerance on `|v|`, as a fraction of the mean edge length.
pub const DEFAULT_TOLERANCE_FACTOR: f64 = 0.05;

/// Samples closer than `WEISZFELD_FLOOR · h` count as coinciding with the iterate.
pub const WEISZFELD_FLOOR: f64 = 1e-8;

/// Number of times a step is halved after an energy increase.
const MAX_HALVINGS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Exponent {
    /// Geometric median.
    Median,
    /// Karcher mean.
    Mean,
}

impl Exponent {
    pub fn from_p(p: u32) -> Result<Self> {
        match p {
            1 => Ok(Exponent::Median),
            2 => Ok(Exponent::Mean),
            _ => Err(Error::InvalidProblem(format!(
                "exponent must be 1 or 2, got {p}"
            ))),
        }
    }

    pub fn p(self) -> u32 {
        match self {
            Exponent::Median => 1,
            Exponent::Mean => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Samples {
    /// Weighted surface points.
    Points(Vec<(SurfacePoint, f64)>),
    /// Nonnegative density per vertex, integrated with the lumped mass.
    Density(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CenterProblem {
    pub samples: Samples,
    pub exponent: Exponent,
    pub step: f64,
    /// Stop when `|v|` falls below this; `None` means
    /// `DEFAULT_TOLERANCE_FACTOR` times the mean edge length.
    pub tolerance: Option<f64>,
    pub max_iterations: usize,
}

impl CenterProblem {
    pub fn new(samples: Samples, exponent: Exponent) -> Self {
        Self {
            samples,
            exponent,
            step: 1.0,
            tolerance: None,
            max_iterations: 100,
        }
    }

    pub fn points(points: &[SurfacePoint], exponent: Exponent) -> Self {
        Self::new(
            Samples::Points(points.iter().map(|&p| (p, 1.0)).collect()),
            exponent,
        )
    }

    pub fn tolerance_for(&self, mesh: &IntrinsicMesh) -> f64 {
        self.tolerance
            .unwrap_or(DEFAULT_TOLERANCE_FACTOR * mesh.mean_edge_length())
    }

    pub fn validate(&self, mesh: &IntrinsicMesh) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidProblem(format!(
                "step size must be positive, got {}",
                self.step
            )));
        }
        if let Some(t) = self.tolerance {
            if !(t >= 0.0) {
                return Err(Error::InvalidProblem(format!(
                    "tolerance must be nonnegative, got {t}"
                )));
            }
        }
        let positive = match &self.samples {
            Samples::Points(pts) => {
                for (p, w) in pts {
                    p.validate(mesh)?;
                    if !(*w >= 0.0 && w.is_finite()) {
                        return Err(Error::InvalidProblem(format!(
                            "sample weight {w} is not a nonnegative number"
                        )));
                    }
                }
                pts.iter().any(|&(_, w)| w > 0.0)
            }
            Samples::Density(rho) => {
                if rho.len() != mesh.vertex_count() {
                    return Err(Error::DimensionMismatch {
                        expected: mesh.vertex_count(),
                        got: rho.len(),
                    });
                }
                if rho.iter().any(|&r| !(r >= 0.0 && r.is_finite())) {
                    return Err(Error::InvalidProblem("density must be nonnegative".into()));
                }
                rho.iter().any(|&r| r > 0.0)
            }
        };
        if !positive {
            return Err(Error::InvalidProblem(
                "no sample has positive weight".into(),
            ));
        }
        Ok(())
    }
}

/// One Karcher step from `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct KarcherStep {
    /// Descent direction at `m` (vertex polar frame or face layout frame).
    pub v: Complex64,
    /// Endpoint of the geodesic from `m` along `step · v`.
    pub next: SurfacePoint,
    /// `E(m) = (1/(2W)) Σ w_i d(m, y_i)^p`.
    pub energy: f64,
}

/// `(weight, log vector at the basepoint, distance)` for every sample.
fn sample_logs(
    solver: &VectorHeatSolver,
    field: &LogMapField,
    samples: &Samples,
) -> Vec<(f64, Complex64, f64)> {
    let mesh = solver.mesh();
    match samples {
        Samples::Points(pts) => pts
            .iter()
            .filter(|(_, w)| *w > 0.0)
            .map(|&(y, w)| {
                let uv = field.logmap_at(mesh, y);
                (w, field.to_tangent(uv), Complex64::new(uv.0, uv.1).norm())
            })
            .collect(),
        Samples::Density(rho) => rho
            .iter()
            .enumerate()
            .filter(|(_, r)| **r > 0.0)
            .map(|(i, &r)| {
                let uv = field.coordinates(i);
                (solver.mass()[i] * r, field.to_tangent(uv), field.r[i].abs())
            })
            .collect(),
    }
}

fn energy_and_direction(
    logs: &[(f64, Complex64, f64)],
    exponent: Exponent,
    h: f64,
) -> (f64, Complex64) {
    let total: f64 = logs.iter().map(|l| l.0).sum();
    let energy = logs
        .iter()
        .map(|&(w, _, d)| w * d.powi(exponent.p() as i32))
        .sum::<f64>()
        / (2.0 * total);
    let v = match exponent {
        Exponent::Mean => logs.iter().map(|&(w, x, _)| x * w).sum::<Complex64>() / total,
        Exponent::Median => {
            // Samples at the iterate itself drop out of the Weiszfeld average
            // and act as a brake (Vardi and Zhang), so a sample point is a
            // fixed point only when it really is the median.
            let floor = WEISZFELD_FLOOR * h;
            let mut num = Complex64::new(0.0, 0.0);
            let mut den = 0.0;
            let mut eta = 0.0;
            for &(w, x, d) in logs {
                if d <= floor {
                    eta += w;
                } else {
                    num += x * (w / d);
                    den += w / d;
                }
            }
            if den == 0.0 {
                Complex64::new(0.0, 0.0)
            } else if eta == 0.0 {
                num / den
            } else if num.norm() <= eta {
                Complex64::new(0.0, 0.0)
            } else {
                num / den * (1.0 - eta / num.norm())
            }
        }
    };
    (energy, v)
}

fn log_map_at(solver: &VectorHeatSolver, m: SurfacePoint) -> Result<LogMapField> {
    compute_log_map(
        solver,
        m,
        Complex64::new(1.0, 0.0),
        RadialInit::FiniteElement,
    )
}

fn walk(mesh: &IntrinsicMesh, m: SurfacePoint, v: Complex64) -> Result<SurfacePoint> {
    if v.norm() == 0.0 {
        return Ok(m);
    }
    Ok(trace_geodesic(mesh, m, v)?.endpoint)
}

/// Descent direction and next iterate at `m`.
pub fn karcher_update(
    solver: &VectorHeatSolver,
    m: SurfacePoint,
    problem: &CenterProblem,
) -> Result<KarcherStep> {
    problem.validate(solver.mesh())?;
    let field = log_map_at(solver, m)?;
    let logs = sample_logs(solver, &field, &problem.samples);
    let (energy, v) =
        energy_and_direction(&logs, problem.exponent, solver.mesh().mean_edge_length());
    let next = walk(solver.mesh(), m, v * problem.step)?;
    Ok(KarcherStep { v, next, energy })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialGuess {
    Point(SurfacePoint),
    /// Uniformly random point on the surface from a seeded generator.
    Random {
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CenterResult {
    pub center: SurfacePoint,
    pub iterations: usize,
    pub trajectory: Vec<SurfacePoint>,
    pub energies: Vec<f64>,
    pub final_gradient_norm: f64,
    pub converged: bool,
    /// The energy kept rising after every step halving. `center` is then the
    /// last accepted iterate, at the noise floor of the discrete log map.
    pub stalled: bool,
}

/// Area-uniform random point.
pub fn random_point(mesh: &IntrinsicMesh, rng: &mut impl Rng) -> SurfacePoint {
    let total = mesh.total_area();
    let mut target = rng.random::<f64>() * total;
    let mut face = mesh.face_count() - 1;
    for f in 0..mesh.face_count() {
        target -= mesh.face_area(f);
        if target <= 0.0 {
            face = f;
            break;
        }
    }
    let (mut a, mut b) = (rng.random::<f64>(), rng.random::<f64>());
    if a + b > 1.0 {
        a = 1.0 - a;
        b = 1.0 - b;
    }
    SurfacePoint::face_normalized(face, [1.0 - a - b, a, b])
}

/// `count` area-uniform random points from a seeded generator.
pub fn random_points(mesh: &IntrinsicMesh, count: usize, seed: u64) -> Vec<SurfacePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_point(mesh, &mut rng)).collect()
}

/// Iterates [`karcher_update`] until `|v|` is below tolerance. For the mean,
/// a step that raises the energy is retried from the previous point with
/// half the step.
pub fn find_center(
    solver: &VectorHeatSolver,
    problem: &CenterProblem,
    initial: InitialGuess,
) -> Result<CenterResult> {
    let mesh = solver.mesh();
    problem.validate(mesh)?;
    let tol = problem.tolerance_for(mesh);
    let h = mesh.mean_edge_length();
    let mut m = match initial {
        InitialGuess::Point(p) => {
            p.validate(mesh)?;
            p
        }
        InitialGuess::Random { seed } => random_point(mesh, &mut ChaCha8Rng::seed_from_u64(seed)),
    };
    let mut trajectory = vec![m];
    let mut energies = Vec::new();
    // Last accepted point with its energy and direction.
    let mut accepted: Option<(SurfacePoint, f64, Complex64)> = None;
    let mut halvings = 0;
    let mut step = problem.step;
    let mut norm = f64::INFINITY;
    for iteration in 0..problem.max_iterations {
        let field = log_map_at(solver, m)?;
        let logs = sample_logs(solver, &field, &problem.samples);
        let (energy, v) = energy_and_direction(&logs, problem.exponent, h);
        energies.push(energy);
        // Weiszfeld steps are left unmonitored: near the median the energy
        // read from r is noisier than the remaining steps.
        if let Some((prev, prev_energy, prev_v)) = accepted {
            let slack = 1e-8 * prev_energy.abs().max(h * h);
            if problem.exponent == Exponent::Mean && energy > prev_energy + slack {
                if halvings == MAX_HALVINGS {
                    return Ok(CenterResult {
                        center: prev,
                        iterations: iteration,
                        trajectory,
                        energies,
                        final_gradient_norm: prev_v.norm(),
                        converged: false,
                        stalled: true,
                    });
                }
                halvings += 1;
                step *= 0.5;
                m = walk(mesh, prev, prev_v * step)?;
                trajectory.push(m);
                continue;
            }
        }
        halvings = 0;
        step = problem.step;
        norm = v.norm();
        if norm <= tol {
            return Ok(CenterResult {
                center: m,
                iterations: iteration,
                trajectory,
                energies,
                final_gradient_norm: norm,
                converged: true,
                stalled: false,
            });
        }
        accepted = Some((m, energy, v));
        m = walk(mesh, m, v * step)?;
        trajectory.push(m);
    }
    Ok(CenterResult {
        center: m,
        iterations: problem.max_iterations,
        trajectory,
        energies,
        final_gradient_norm: norm,
        converged: false,
        stalled: false,
    })
}

/// Sites and their soft cell indicators.
#[derive(Debug, Clone, PartialEq)]
pub struct VoronoiState {
    pub sites: Vec<SurfacePoint>,
    /// `cell_densities[s][v]`; sums to one over sites at every vertex.
    pub cell_densities: Vec<Vec<f64>>,
    pub iterations: usize,
    pub max_movement: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GcvtOptions {
    pub lloyd_iterations: usize,
    pub karcher_steps: usize,
    /// Stop once no site moves farther than this; `None` uses the default
    /// center tolerance.
    pub tolerance: Option<f64>,
}

impl Default for GcvtOptions {
    fn default() -> Self {
        Self {
            lloyd_iterations: 20,
            karcher_steps: 1,
            tolerance: None,
        }
    }
}

fn same_point(mesh: &IntrinsicMesh, a: SurfacePoint, b: SurfacePoint) -> bool {
    let wa = a.weights(mesh);
    let wb = b.weights(mesh);
    let mut diff = 0.0;
    for &(v, w) in &wa {
        diff += (w - wb.iter().find(|e| e.0 == v).map_or(0.0, |e| e.1)).abs();
    }
    for &(v, w) in &wb {
        if !wa.iter().any(|e| e.0 == v) {
            diff += w;
        }
    }
    diff < 1e-9
}

/// Heat kernels of each site normalized into a partition of unity.
pub fn cell_densities(solver: &VectorHeatSolver, sites: &[SurfacePoint]) -> Result<Vec<Vec<f64>>> {
    let mesh = solver.mesh();
    let n = mesh.vertex_count();
    let mut kernels = Vec::with_capacity(sites.len());
    for s in sites {
        let mut u0 = vec![0.0; n];
        for (v, w) in s.weights(mesh) {
            u0[v] += w;
        }
        kernels.push(solver.diffuse_scalar(&u0)?);
    }
    let mut rho = vec![vec![0.0; n]; sites.len()];
    for v in 0..n {
        let total: f64 = kernels.iter().map(|k| k[v].max(0.0)).sum();
        for (s, k) in kernels.iter().enumerate() {
            rho[s][v] = if total > 0.0 {
                k[v].max(0.0) / total
            } else {
                1.0 / sites.len() as f64
            };
        }
    }
    Ok(rho)
}

/// Geodesic centroidal Voronoi tessellation by Lloyd iterations with soft
/// cells from the solver's heat kernel.
pub fn gcvt(
    solver: &VectorHeatSolver,
    initial_sites: &[SurfacePoint],
    options: GcvtOptions,
) -> Result<VoronoiState> {
    let mesh = solver.mesh();
    if initial_sites.is_empty() {
        return Err(Error::InvalidProblem(
            "at least one site is required".into(),
        ));
    }
    for s in initial_sites {
        s.validate(mesh)?;
    }
    let mut sites = initial_sites.to_vec();
    let mut warnings = Vec::new();
    for a in 0..sites.len() {
        for b in 0..a {
            if same_point(mesh, sites[a], sites[b]) {
                let rho = cell_densities(solver, &sites)?;
                // Least covered vertex: far from every other site.
                let cover: Vec<f64> = (0..mesh.vertex_count())
                    .map(|v| {
                        rho.iter()
                            .enumerate()
                            .filter(|(s, _)| *s != a)
                            .map(|(_, r)| r[v])
                            .sum::<f64>()
                    })
                    .collect();
                let far = (0..mesh.vertex_count())
                    .min_by(|&x, &y| {
                        let kx = solver.mass()[x] * cover[x];
                        let ky = solver.mass()[y] * cover[y];
                        kx.total_cmp(&ky)
                    })
                    .unwrap_or(0);
                warnings.push(format!(
                    "site {a} coincides with site {b}; moved to vertex {far}"
                ));
                sites[a] = SurfacePoint::vertex(far);
                break;
            }
        }
    }
    let tol = options
        .tolerance
        .unwrap_or(DEFAULT_TOLERANCE_FACTOR * mesh.mean_edge_length());
    let mut iterations = 0;
    let mut max_movement = f64::INFINITY;
    let mut rho = cell_densities(solver, &sites)?;
    while iterations < options.lloyd_iterations {
        iterations += 1;
        max_movement = 0.0f64;
        for (s, site) in sites.iter_mut().enumerate() {
            let problem = CenterProblem::new(Samples::Density(rho[s].clone()), Exponent::Mean);
            for _ in 0..options.karcher_steps.max(1) {
                let step = karcher_update(solver, *site, &problem)?;
                max_movement = max_movement.max(step.v.norm() * problem.step);
                *site = step.next;
            }
        }
        rho = cell_densities(solver, &sites)?;
        if max_movement < tol {
            break;
        }
    }
    Ok(VoronoiState {
        sites,
        cell_densities: rho,
        iterations,
        max_movement,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandmarkOptions {
    pub count: usize,
    pub initial_guesses: usize,
    /// Weight of a small extrinsic term (height along `bias_axis`, relative
    /// to the bounding radius) added to distances to break symmetric ties.
    pub extrinsic_bias: f64,
    pub bias_axis: Vector3<f64>,
    pub seed: u64,
}

impl Default for LandmarkOptions {
    fn default() -> Self {
        Self {
            count: 10,
            initial_guesses: 4,
            extrinsic_bias: 0.0,
            bias_axis: Vector3::z(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Landmarks {
    pub medians: Vec<SurfacePoint>,
    pub landmarks: Vec<SurfacePoint>,
}

/// Geometric medians of the whole surface from several random starts,
/// followed by farthest-point sampling seeded with those medians. Medians
/// are not part of the emitted landmarks.
pub fn ordered_landmarks(solver: &VectorHeatSolver, options: LandmarkOptions) -> Result<Landmarks> {
    let mesh = solver.mesh();
    let n = mesh.vertex_count();
    if options.count == 0 {
        return Ok(Landmarks {
            medians: Vec::new(),
            landmarks: Vec::new(),
        });
    }
    let h = mesh.mean_edge_length();
    let problem = CenterProblem::new(Samples::Density(vec![1.0; n]), Exponent::Median);
    let mut medians: Vec<SurfacePoint> = Vec::new();
    let mut min_dist = vec![f64::INFINITY; n];
    for g in 0..options.initial_guesses.max(1) {
        let seed = options.seed.wrapping_add(g as u64);
        let c = find_center(solver, &problem, InitialGuess::Random { seed })?.center;
        let duplicate = medians
            .iter()
            .any(|_| c.interpolate(mesh, &min_dist) < 2.0 * h);
        if duplicate {
            continue;
        }
        let field = log_map_at(solver, c)?;
        for (d, r) in min_dist.iter_mut().zip(&field.r) {
            *d = d.min(r.abs());
        }
        medians.push(c);
    }
    let bias: Vec<f64> = match (options.extrinsic_bias, mesh.positions()) {
        (b, Some(pos)) if b != 0.0 => {
            let c = pos.iter().sum::<Vector3<f64>>() / n as f64;
            let radius = pos
                .iter()
                .map(|p| (p - c).norm())
                .fold(0.0, f64::max)
                .max(f64::MIN_POSITIVE);
            let axis = options.bias_axis.normalize();
            pos.iter()
                .map(|p| b * h * (p - c).dot(&axis) / radius)
                .collect()
        }
        _ => vec![0.0; n],
    };
    let mut landmarks = Vec::with_capacity(options.count);
    for _ in 0..options.count {
        let v = (0..n)
            .max_by(|&a, &b| (min_dist[a] + bias[a]).total_cmp(&(min_dist[b] + bias[b])))
            .unwrap_or(0);
        let p = SurfacePoint::vertex(v);
        let field = log_map_at(solver, p)?;
        for (d, r) in min_dist.iter_mut().zip(&field.r) {
            *d = d.min(r.abs());
        }
        min_dist[v] = 0.0;
        landmarks.push(p);
    }
    Ok(Landmarks { medians, landmarks })
}
