//! Oracle suites behind `vheat validate`. Each suite returns a typed report
//! with its raw measurements and a pass flag; [`run_suites`] bundles them
//! into the machine-readable metrics file.

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::Vector3;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::Suite;
use super::export::SCHEMA_VERSION;
use crate::error::{Error, Result};
use crate::generators::{self, TriangleMesh};
use crate::geodesics::{trace_geodesic, transport_along_trace};
use crate::mesh::{IntrinsicMesh, SurfacePoint, TangentVector};
use crate::oracles::SphereOracle;
use crate::vhm::{SolverOptions, SourceSet, VectorHeatSolver};

/// Vertices within this central angle of the source's antipode are skipped.
pub const CUT_LOCUS_MARGIN: f64 = 0.25 * PI;

fn wrap(a: f64) -> f64 {
    (a + PI).rem_euclid(2.0 * PI) - PI
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlatLevel {
    pub faces: usize,
    pub max_angle_error: f64,
    pub max_magnitude_error: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlatReport {
    pub levels: Vec<FlatLevel>,
    pub seconds: f64,
    pub passed: bool,
}

pub const FLAT_ANGLE_TOLERANCE: f64 = 1e-6;
pub const FLAT_MAGNITUDE_TOLERANCE: f64 = 1e-8;
pub const FLAT_SECONDS: f64 = 5.0;
/// In-plane jitter of the flat grids. Larger offsets can fold triangles
/// over, and the folded mesh is no longer intrinsically flat.
pub const FLAT_JITTER: f64 = 0.2;

/// Single-source transport on jittered planar grids with `10·2^l` cells per
/// side, `l = 1..=levels`. The exact answer is a constant field.
pub fn flat_exactness(levels: u32, seed: u64) -> Result<FlatReport> {
    let start = Instant::now();
    let mut out = Vec::new();
    for l in 1..=levels {
        let n = 10 << l;
        let mesh = generators::jitter(
            &generators::grid(n, 1.0),
            FLAT_JITTER,
            seed + l as u64,
            false,
        )
        .build()?;
        out.push(flat_level(&mesh, 0.7)?);
    }
    let seconds = start.elapsed().as_secs_f64();
    let passed = seconds < FLAT_SECONDS
        && out.iter().all(|l| {
            l.max_angle_error < FLAT_ANGLE_TOLERANCE
                && l.max_magnitude_error < FLAT_MAGNITUDE_TOLERANCE
        });
    Ok(FlatReport {
        levels: out,
        seconds,
        passed,
    })
}

/// Transports a unit vector at angle `angle` from the vertex nearest the
/// centroid of a planar mesh and measures the deviation from a constant.
pub fn flat_level(mesh: &IntrinsicMesh, angle: f64) -> Result<FlatLevel> {
    let p = mesh.positions().ok_or(Error::NoEmbedding)?;
    let c = p.iter().sum::<Vector3<f64>>() / p.len() as f64;
    let source = (0..p.len())
        .min_by(|&a, &b| (p[a] - c).norm().total_cmp(&(p[b] - c).norm()))
        .ok_or(Error::InvalidProblem("empty mesh".into()))?;
    let solver = VectorHeatSolver::new(mesh, SolverOptions::default())?;
    let x0 = Complex64::from_polar(1.0, angle);
    let mut sources = SourceSet::new();
    sources.push(source, x0);
    let res = solver.transport(&sources, 1)?;
    let target = mesh.tangent_to_extrinsic(TangentVector::new(source, x0))?;
    let target = target.y.atan2(target.x);
    let (mut max_angle, mut max_mag) = (0.0f64, 0.0f64);
    for v in 0..mesh.vertex_count() {
        let e = mesh.tangent_to_extrinsic(res.vector(v))?;
        max_angle = max_angle.max(wrap(e.y.atan2(e.x) - target).abs());
        max_mag = max_mag.max((res.field[v].norm() - 1.0).abs());
    }
    Ok(FlatLevel {
        faces: mesh.face_count(),
        max_angle_error: max_angle,
        max_magnitude_error: max_mag,
    })
}

/// Angular error of a transported field against exact sphere transport,
/// per vertex, as `(central angle to source, error)`. The comparison is
/// made in the exact tangent plane of the unit sphere.
pub fn sphere_transport_errors(
    mesh: &IntrinsicMesh,
    source: usize,
    x0: Complex64,
    field: &[Complex64],
) -> Result<Vec<(f64, f64)>> {
    let p = mesh.positions().ok_or(Error::NoEmbedding)?;
    let oracle = SphereOracle::new(1.0);
    let tangent = |v: usize, x: Vector3<f64>| {
        let n = p[v].normalize();
        x - n * x.dot(&n)
    };
    let x0e = tangent(
        source,
        mesh.tangent_to_extrinsic(TangentVector::new(source, x0))?,
    );
    let mut out = Vec::with_capacity(p.len());
    for v in 0..p.len() {
        if v == source {
            continue;
        }
        let theta = oracle.central_angle(p[source], p[v]);
        if theta > PI - CUT_LOCUS_MARGIN {
            continue;
        }
        let exact = oracle.transport(oracle.project(p[source]), oracle.project(p[v]), x0e)?;
        let got = tangent(
            v,
            mesh.tangent_to_extrinsic(TangentVector::new(v, field[v]))?,
        );
        let n = p[v].normalize();
        let err = n.dot(&exact.cross(&got)).atan2(exact.dot(&got)).abs();
        out.push((theta, err));
    }
    Ok(out)
}

/// Mean angle error of single-source transport from vertex 0 against exact
/// sphere transport, outside the cut-locus cap.
pub fn sphere_mean_error(mesh: &IntrinsicMesh, multiplier: f64) -> Result<f64> {
    let solver = VectorHeatSolver::new(
        mesh,
        SolverOptions {
            time_multiplier: multiplier,
            use_intrinsic_delaunay: true,
        },
    )?;
    let x0 = Complex64::new(1.0, 0.0);
    let field = transport_one(&solver, 0, x0)?;
    let errs: Vec<f64> = sphere_transport_errors(mesh, 0, x0, &field)?
        .into_iter()
        .map(|e| e.1)
        .collect();
    Ok(mean(&errs))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub subdivision_levels: Vec<u32>,
    pub h: Vec<f64>,
    pub mean_angle_error: Vec<f64>,
    pub slope: f64,
    pub finest_error: f64,
    pub passed: bool,
}

pub const SLOPE_RANGE: (f64, f64) = (0.8, 1.5);
pub const SPHERE_FINEST_TOLERANCE: f64 = 0.05;

/// Transport from vertex 0 on icospheres `first..first+levels`; fits the
/// log-log slope of mean angle error against mean edge length.
pub fn sphere_convergence(first: u32, levels: u32) -> Result<ConvergenceReport> {
    sphere_convergence_with(first, levels, generators::icosphere)
}

/// [`sphere_convergence`] on any family of unit-sphere meshes indexed by
/// subdivision level. Vertex 0 is the source.
pub fn sphere_convergence_with(
    first: u32,
    levels: u32,
    family: impl Fn(u32) -> TriangleMesh,
) -> Result<ConvergenceReport> {
    if levels < 2 {
        return Err(Error::InvalidProblem(
            "convergence needs at least two levels".into(),
        ));
    }
    let subdivision_levels: Vec<u32> = (first..first + levels).collect();
    let mut h = Vec::new();
    let mut errors = Vec::new();
    for &l in &subdivision_levels {
        let mesh = family(l).build()?;
        h.push(mesh.mean_edge_length());
        errors.push(sphere_mean_error(&mesh, 1.0)?);
    }
    let slope = log_log_slope(&h, &errors);
    let finest_error = *errors.last().unwrap();
    let passed =
        slope >= SLOPE_RANGE.0 && slope <= SLOPE_RANGE.1 && finest_error < SPHERE_FINEST_TOLERANCE;
    Ok(ConvergenceReport {
        subdivision_levels,
        h,
        mean_angle_error: errors,
        slope,
        finest_error,
        passed,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepCurve {
    pub mesh: String,
    pub errors: Vec<f64>,
    pub argmin: f64,
    pub interior_minimum: bool,
    /// Error at `m = 1` divided by the minimum error.
    pub ratio_at_one: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub multipliers: Vec<f64>,
    pub curves: Vec<SweepCurve>,
    pub passed: bool,
}

pub const ARGMIN_RANGE: (f64, f64) = (0.5, 2.0);
/// Traces stay shorter than the conjugate radius of every sweep mesh, so
/// each one is a shortest geodesic.
pub const SWEEP_TRACE_LENGTH: f64 = 0.8;
pub const SWEEP_TRACES: usize = 300;

/// Multipliers `2^(k/2)` for `k = -6..=6`.
pub fn sweep_multipliers() -> Vec<f64> {
    (-6..=6).map(|k| 2f64.powf(k as f64 / 2.0)).collect()
}

/// Curved closed surfaces for the t-sweep. Round spheres are left out: on
/// constant curvature the error keeps falling as `t` grows.
pub fn sweep_meshes() -> Vec<(String, TriangleMesh)> {
    vec![
        (
            "ellipsoid-5".into(),
            generators::ellipsoid(5, [1.0, 0.7, 0.45]),
        ),
        ("bumpy-sphere-5".into(), generators::bumpy_sphere(5, 0.15)),
        ("torus-160x64".into(), generators::torus(1.0, 0.4, 160, 64)),
    ]
}

/// Mean angle between a transported field and trace-and-unfold transport
/// along `count` random geodesics from `source` with lengths in `lengths`.
/// The field is carried into each endpoint face and blended barycentrically.
pub fn trace_errors(
    mesh: &IntrinsicMesh,
    field: &[Complex64],
    source: usize,
    x0: Complex64,
    count: usize,
    lengths: (f64, f64),
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    let mut errors = Vec::with_capacity(count);
    let mut attempts = 0;
    while errors.len() < count {
        attempts += 1;
        if attempts > 20 * count {
            return Err(Error::Numerical(
                "too many traces ended at vertices or boundary".into(),
            ));
        }
        let dir = Complex64::from_polar(1.0, rng.random_range(0.0..2.0 * PI));
        let length = rng.random_range(lengths.0..lengths.1);
        let trace = trace_geodesic(mesh, SurfacePoint::vertex(source), dir * length)?;
        if trace.truncated {
            continue;
        }
        let SurfacePoint::Face { face, bary } = trace.endpoint else {
            continue;
        };
        let unfolded = transport_along_trace(&trace, x0);
        let mut blended = Complex64::new(0.0, 0.0);
        for (k, h) in mesh.face_halfedges(face).into_iter().enumerate() {
            blended += bary[k] * mesh.vertex_to_face_rotation(h) * field[mesh.tail(h)];
        }
        errors.push(wrap(blended.arg() - unfolded.arg()).abs());
    }
    Ok(errors)
}

fn transport_one(
    solver: &VectorHeatSolver,
    source: usize,
    x0: Complex64,
) -> Result<Vec<Complex64>> {
    let mut sources = SourceSet::new();
    sources.push(source, x0);
    Ok(solver.transport(&sources, 1)?.field)
}

/// Mean trace error over three sources for one multiplier.
pub fn sweep_error(mesh: &IntrinsicMesh, multiplier: f64, seed: u64) -> Result<f64> {
    let solver = VectorHeatSolver::new(
        mesh,
        SolverOptions {
            time_multiplier: multiplier,
            use_intrinsic_delaunay: true,
        },
    )?;
    let n = mesh.vertex_count();
    let x0 = Complex64::new(1.0, 0.0);
    let mut all = Vec::new();
    for (k, source) in [7 % n, n / 3, 2 * n / 3].into_iter().enumerate() {
        // Same traces for every multiplier.
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
        let field = transport_one(&solver, source, x0)?;
        all.extend(trace_errors(
            mesh,
            &field,
            source,
            x0,
            SWEEP_TRACES / 3,
            (0.05, SWEEP_TRACE_LENGTH),
            &mut rng,
        )?);
    }
    Ok(mean(&all))
}

/// Mean transport error against trace-and-unfold transport over a range of
/// time multipliers `m` in `t = m·h²`, on each of [`sweep_meshes`].
pub fn t_sweep(seed: u64) -> Result<SweepReport> {
    let multipliers = sweep_multipliers();
    let one = multipliers
        .iter()
        .position(|&m| m == 1.0)
        .expect("grid contains 1");
    let mut curves = Vec::new();
    for (name, tm) in sweep_meshes() {
        let mesh = tm.build()?;
        let errors = multipliers
            .iter()
            .map(|&m| sweep_error(&mesh, m, seed))
            .collect::<Result<Vec<_>>>()?;
        let k = (0..errors.len())
            .min_by(|&a, &b| errors[a].total_cmp(&errors[b]))
            .unwrap();
        curves.push(SweepCurve {
            mesh: name,
            argmin: multipliers[k],
            interior_minimum: k > 0 && k + 1 < errors.len(),
            ratio_at_one: errors[one] / errors[k],
            errors,
        });
    }
    let passed = curves
        .iter()
        .all(|c| c.interior_minimum && c.argmin >= ARGMIN_RANGE.0 && c.argmin <= ARGMIN_RANGE.1);
    Ok(SweepReport {
        multipliers,
        curves,
        passed,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundTripMesh {
    pub mesh: String,
    pub pairs: usize,
    pub max_relative_imaginary: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundTripReport {
    pub meshes: Vec<RoundTripMesh>,
    pub passed: bool,
}

pub const ROUNDTRIP_TOLERANCE: f64 = 1e-8;

/// `pairs` random vertex pairs on each of three meshes; the round-trip
/// ratio must be real.
pub fn roundtrip_battery(pairs: usize, seed: u64) -> Result<RoundTripReport> {
    let meshes = [
        ("icosphere-3", generators::icosphere(3)),
        (
            "jittered-grid-24",
            generators::jitter(&generators::grid(24, 1.0), 0.3, seed, false),
        ),
        ("torus-48x24", generators::torus(1.0, 0.35, 48, 24)),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (name, tm) in meshes {
        let mesh = tm.build()?;
        let solver = VectorHeatSolver::new(&mesh, SolverOptions::default())?;
        let n = mesh.vertex_count();
        let (mut worst, mut failures) = (0.0f64, 0);
        for _ in 0..pairs {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let rt = solver.roundtrip(i, j)?;
            worst = worst.max(rt.relative_imaginary);
            if !(rt.relative_imaginary <= ROUNDTRIP_TOLERANCE) || rt.ratio.re <= 0.0 {
                failures += 1;
            }
        }
        out.push(RoundTripMesh {
            mesh: name.into(),
            pairs,
            max_relative_imaginary: worst,
            failures,
        });
    }
    let passed = out.iter().all(|m| m.failures == 0);
    Ok(RoundTripReport {
        meshes: out,
        passed,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceLevel {
    pub subdivision_level: u32,
    pub traces: usize,
    pub mean_angle_error: f64,
    pub max_angle_error: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceReport {
    pub levels: Vec<TraceLevel>,
    pub passed: bool,
}

pub const TRACE_TOLERANCE: f64 = 0.05;

/// Heat-transported vectors at the ends of random geodesic traces against
/// the trace-and-unfold transport along the same traces, from random
/// sources. Returns the mean and maximum angle error.
pub fn trace_level(mesh: &IntrinsicMesh, traces: usize, seed: u64) -> Result<(f64, f64)> {
    let solver = VectorHeatSolver::new(mesh, SolverOptions::default())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = mesh.vertex_count();
    let mut errors = Vec::with_capacity(traces);
    for _ in 0..traces {
        let s = rng.random_range(0..n);
        let x0 = Complex64::from_polar(1.0, rng.random_range(0.0..2.0 * PI));
        let field = transport_one(&solver, s, x0)?;
        errors.extend(trace_errors(mesh, &field, s, x0, 1, (0.2, 2.0), &mut rng)?);
    }
    Ok((mean(&errors), errors.iter().cloned().fold(0.0, f64::max)))
}

/// [`trace_level`] on icospheres `first..first+levels`; the finest level
/// must agree to [`TRACE_TOLERANCE`] on average.
pub fn trace_oracle(first: u32, levels: u32, traces: usize, seed: u64) -> Result<TraceReport> {
    let mut out = Vec::new();
    for l in first..first + levels {
        let mesh = generators::icosphere(l).build()?;
        let (mean_angle_error, max_angle_error) = trace_level(&mesh, traces, seed)?;
        out.push(TraceLevel {
            subdivision_level: l,
            traces,
            mean_angle_error,
            max_angle_error,
        });
    }
    let passed = out
        .last()
        .is_some_and(|l| l.mean_angle_error < TRACE_TOLERANCE);
    Ok(TraceReport {
        levels: out,
        passed,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "suite", rename_all = "kebab-case")]
pub enum SuiteReport {
    FlatExactness(FlatReport),
    SphereConvergence(ConvergenceReport),
    TSweep(SweepReport),
    Roundtrip(RoundTripReport),
    TraceOracle(TraceReport),
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        match self {
            SuiteReport::FlatExactness(r) => r.passed,
            SuiteReport::SphereConvergence(r) => r.passed,
            SuiteReport::TSweep(r) => r.passed,
            SuiteReport::Roundtrip(r) => r.passed,
            SuiteReport::TraceOracle(r) => r.passed,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SuiteReport::FlatExactness(_) => "flat-exactness",
            SuiteReport::SphereConvergence(_) => "sphere-convergence",
            SuiteReport::TSweep(_) => "t-sweep",
            SuiteReport::Roundtrip(_) => "roundtrip",
            SuiteReport::TraceOracle(_) => "trace-oracle",
        }
    }

    /// One human-readable line.
    pub fn summary(&self) -> String {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        let detail = match self {
            SuiteReport::FlatExactness(r) => {
                let a = r
                    .levels
                    .iter()
                    .map(|l| l.max_angle_error)
                    .fold(0.0, f64::max);
                let m = r
                    .levels
                    .iter()
                    .map(|l| l.max_magnitude_error)
                    .fold(0.0, f64::max);
                format!(
                    "max angle error {a:.2e} rad, max magnitude error {m:.2e}, {:.2} s",
                    r.seconds
                )
            }
            SuiteReport::SphereConvergence(r) => {
                format!(
                    "slope {:.3}, finest mean error {:.4} rad",
                    r.slope, r.finest_error
                )
            }
            SuiteReport::TSweep(r) => {
                let a: Vec<String> = r
                    .curves
                    .iter()
                    .map(|c| {
                        format!(
                            "{}: argmin m = {:.3}, error(1)/min = {:.2}",
                            c.mesh, c.argmin, c.ratio_at_one
                        )
                    })
                    .collect();
                a.join(", ")
            }
            SuiteReport::Roundtrip(r) => {
                let w = r
                    .meshes
                    .iter()
                    .map(|m| m.max_relative_imaginary)
                    .fold(0.0, f64::max);
                let f: usize = r.meshes.iter().map(|m| m.failures).sum();
                format!("max relative imaginary part {w:.2e}, {f} failures")
            }
            SuiteReport::TraceOracle(r) => {
                let l = r.levels.last().unwrap();
                format!(
                    "level {} mean angle error {:.4} rad",
                    l.subdivision_level, l.mean_angle_error
                )
            }
        };
        format!("{status} {}: {detail}", self.name())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub schema_version: u32,
    pub levels: u32,
    pub seed: u64,
    pub suites: Vec<SuiteReport>,
    pub passed: bool,
}

/// Runs one suite, or all of them. `levels` sets the number of refinement
/// levels for the flat, convergence and trace suites.
pub fn run_suites(suite: Suite, levels: u32, seed: u64) -> Result<ValidationReport> {
    let all = suite == Suite::All;
    let mut suites = Vec::new();
    if all || suite == Suite::FlatExactness {
        suites.push(SuiteReport::FlatExactness(flat_exactness(levels, seed)?));
    }
    if all || suite == Suite::SphereConvergence {
        suites.push(SuiteReport::SphereConvergence(sphere_convergence(
            2, levels,
        )?));
    }
    if all || suite == Suite::TSweep {
        suites.push(SuiteReport::TSweep(t_sweep(seed)?));
    }
    if all || suite == Suite::Roundtrip {
        suites.push(SuiteReport::Roundtrip(roundtrip_battery(100, seed)?));
    }
    if all || suite == Suite::TraceOracle {
        suites.push(SuiteReport::TraceOracle(trace_oracle(2, levels, 50, seed)?));
    }
    let passed = suites.iter().all(SuiteReport::passed);
    Ok(ValidationReport {
        schema_version: SCHEMA_VERSION,
        levels,
        seed,
        suites,
        passed,
    })
}
