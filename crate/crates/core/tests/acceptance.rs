//! Acceptance run: every criterion at its stated tolerance, one PASS/FAIL
//! line each. A criterion that fails is reported, not hidden; the process
//! exits non-zero only when a criterion could not be evaluated at all.

use std::f64::consts::{FRAC_PI_4, PI, TAU};
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::Vector3;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vector_heat::centers::{find_center, CenterProblem, Exponent, InitialGuess};
use vector_heat::generators::{self, TriangleMesh};
use vector_heat::geodesics::trace_geodesic;
use vector_heat::idt::to_intrinsic_delaunay;
use vector_heat::io::validate::{
    flat_exactness, log_log_slope, roundtrip_battery, sphere_convergence, sphere_convergence_with,
    t_sweep, trace_oracle, SuiteReport,
};
use vector_heat::logmap::{compute_log_map, RadialInit};
use vector_heat::operators::{connection_laplacian, cotan_laplacian, edge_weights, SparseMatrix};
use vector_heat::oracles::{brute_force_center, infinity_norm, smallest_eigenvalue, SphereOracle};
use vector_heat::{
    Error, IntrinsicMesh, Result, SolverOptions, SourceSet, SurfacePoint, TangentVector,
    VectorHeatSolver,
};

const SEED: u64 = 0;

struct Outcome {
    passed: bool,
    detail: String,
    info: Vec<String>,
}

impl Outcome {
    fn new(passed: bool, detail: String) -> Self {
        Self {
            passed,
            detail,
            info: Vec::new(),
        }
    }

    fn with_info(mut self, line: String) -> Self {
        self.info.push(line);
        self
    }
}

fn wrap(a: f64) -> f64 {
    (a + PI).rem_euclid(TAU) - PI
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

fn suite_detail(report: &SuiteReport) -> String {
    report
        .summary()
        .split_once(": ")
        .map(|(_, d)| d.to_string())
        .unwrap_or_default()
}

fn flat() -> Result<Outcome> {
    let r = flat_exactness(4, SEED)?;
    let faces = r.levels.last().map(|l| l.faces).unwrap_or(0);
    let detail = format!(
        "{}; {} levels up to {faces} faces",
        suite_detail(&SuiteReport::FlatExactness(r.clone())),
        r.levels.len()
    );
    Ok(Outcome::new(r.passed, detail))
}

fn sphere() -> Result<Outcome> {
    let start = Instant::now();
    let r = sphere_convergence(2, 3)?;
    let seconds = start.elapsed().as_secs_f64();
    let passed = r.passed && seconds < 60.0;
    let errors: Vec<String> = r
        .mean_angle_error
        .iter()
        .map(|e| format!("{e:.2e}"))
        .collect();
    let jittered = sphere_convergence_with(2, 3, |l| {
        generators::jitter(&generators::icosphere(l), 0.3, 11, true)
    })?;
    Ok(Outcome::new(
        passed,
        format!(
            "slope {:.3} (need [0.8, 1.5]), mean errors [{}] rad, finest {:.1e} < 0.05, {seconds:.1} s",
            r.slope,
            errors.join(", "),
            r.finest_error
        ),
    )
    .with_info(format!("jittered icospheres: slope {:.3}, finest {:.1e} rad", jittered.slope, jittered.finest_error)))
}

fn roundtrip() -> Result<Outcome> {
    let r = roundtrip_battery(100, SEED)?;
    Ok(Outcome::new(
        r.passed,
        suite_detail(&SuiteReport::Roundtrip(r)),
    ))
}

fn nearest_vertex(mesh: &IntrinsicMesh, q: Vector3<f64>) -> usize {
    let p = mesh.positions().expect("embedded");
    (0..p.len())
        .min_by(|&a, &b| (p[a] - q).norm().total_cmp(&(p[b] - q).norm()))
        .unwrap()
}

/// Distance from the boundary between the two nearest sources' cells is
/// taken as half the gap between the two smallest source distances.
fn magnitudes() -> Result<Outcome> {
    let mesh = generators::icosphere(4).build()?;
    let solver = VectorHeatSolver::new(&mesh, SolverOptions::default())?;
    let o = SphereOracle::default();
    let p = mesh.positions().unwrap();
    let dirs = [
        Vector3::new(1.0, 0.2, 0.1),
        Vector3::new(-0.4, 1.0, -0.3),
        Vector3::new(0.1, -0.5, 1.0),
    ];
    let sources: Vec<usize> = dirs
        .iter()
        .map(|d| nearest_vertex(&mesh, d.normalize()))
        .collect();
    let mut set = SourceSet::<Complex64>::new();
    for (k, &s) in sources.iter().enumerate() {
        set.push(s, Complex64::from_polar(k as f64 + 1.0, 0.3 * k as f64));
    }
    let res = solver.transport(&set, 1)?;
    let h = mesh.mean_edge_length();
    let (mut checked, mut worst) = (0, 0.0f64);
    for v in 0..mesh.vertex_count() {
        let mut d: Vec<(f64, usize)> = sources
            .iter()
            .enumerate()
            .map(|(k, &s)| (o.distance(p[v], p[s]), k))
            .collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0));
        if (d[1].0 - d[0].0) / 2.0 <= 3.0 * h {
            continue;
        }
        let target = d[0].1 as f64 + 1.0;
        worst = worst.max((res.field[v].norm() - target).abs() / target);
        checked += 1;
    }
    Ok(Outcome::new(
        checked > 0 && worst < 0.01,
        format!("max relative magnitude error {worst:.2e} (< 1e-2) at {checked} of {} vertices beyond 3h", mesh.vertex_count()),
    ))
}

fn low_quality_corpus() -> Vec<(&'static str, TriangleMesh)> {
    vec![
        ("sliver-strip", generators::sliver_strip(80, 0.04, 9)),
        (
            "jittered-grid",
            generators::jitter(&generators::grid(40, 1.0), 0.45, 2, false),
        ),
        ("uv-sphere", generators::uv_sphere(30, 90)),
        ("thin-torus", generators::torus(1.0, 0.3, 400, 6)),
        (
            "needle-sphere",
            generators::jitter(&generators::icosphere(3), 0.45, 5, true),
        ),
        (
            "sheared-grid",
            generators::grid(30, 1.0)
                .map_positions(|p| Vector3::new(p.x + 6.0 * p.y, 0.2 * p.y, 0.0)),
        ),
    ]
}

/// Real symmetric `2n × 2n` form of a Hermitian matrix; same spectrum, each
/// eigenvalue twice.
fn realify(a: &SparseMatrix<Complex64>) -> SparseMatrix<f64> {
    let n = a.rows;
    let mut t = Vec::with_capacity(4 * a.nnz());
    for (r, c, z) in a.triplets() {
        t.push((r, c, z.re));
        t.push((n + r, n + c, z.re));
        t.push((r, n + c, -z.im));
        t.push((n + r, c, z.im));
    }
    SparseMatrix::from_triplets(2 * n, 2 * n, t)
}

/// Smallest eigenvalue relative to `‖A‖`. A failed factorization of
/// `A + 1e-8‖A‖ I` already proves the bound is violated.
fn relative_min_eigenvalue(a: &SparseMatrix<f64>) -> Result<f64> {
    let norm = infinity_norm(a);
    match smallest_eigenvalue(a, 1e-8 * norm, 60, SEED) {
        Ok(l) => Ok(l / norm),
        Err(Error::NotPositiveDefinite) => Ok(f64::NEG_INFINITY),
        Err(e) => Err(e),
    }
}

fn idt() -> Result<Outcome> {
    let mut passed = true;
    let mut rows = Vec::new();
    let mut info = Vec::new();
    for (name, tm) in low_quality_corpus() {
        let mesh = tm.build()?;
        let before = edge_weights(&mesh)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        let d = to_intrinsic_delaunay(&mesh)?;
        let w = edge_weights(&d.mesh);
        let (mut interior, mut boundary) = (f64::INFINITY, f64::INFINITY);
        for (e, &x) in w.iter().enumerate() {
            if d.mesh.is_boundary_edge(e) {
                boundary = boundary.min(x);
            } else {
                interior = interior.min(x);
            }
        }
        let min_w = interior.min(boundary);
        let conn = relative_min_eigenvalue(&realify(&connection_laplacian(&d.mesh, 1)?))?;
        let cot = relative_min_eigenvalue(&cotan_laplacian(&d.mesh))?;
        let ok = min_w >= -1e-12 && conn >= -1e-8;
        passed &= ok;
        rows.push(format!("{name} {}", if ok { "ok" } else { "FAIL" }));
        info.push(format!(
            "{name}: {} vertices, {} flips, min weight {before:.2e} -> interior {interior:.2e}, boundary {}, λmin/‖L∇‖ {conn:.1e}, λmin/‖L‖ {cot:.1e}",
            mesh.vertex_count(),
            d.flip_count,
            if boundary.is_finite() { format!("{boundary:.2e}") } else { "none".into() },
        ));
    }
    let mut out = Outcome::new(
        passed,
        format!(
            "weights ≥ -1e-12 and λmin(L∇) ≥ -1e-8‖L∇‖ on {}",
            rows.join(", ")
        ),
    );
    for line in info {
        out = out.with_info(line);
    }
    Ok(out)
}

struct SphereLogErrors {
    h: f64,
    r: f64,
    phi: f64,
}

fn sphere_log_errors(level: u32) -> Result<SphereLogErrors> {
    let mesh = generators::icosphere(level).build()?;
    let solver = VectorHeatSolver::new(&mesh, SolverOptions::default())?;
    let o = SphereOracle::default();
    let p = mesh.positions().unwrap();
    let zero = Complex64::new(1.0, 0.0);
    let field = compute_log_map(
        &solver,
        SurfacePoint::vertex(0),
        zero,
        RadialInit::FiniteElement,
    )?;
    let e0 = mesh.tangent_to_extrinsic(TangentVector::new(0, zero))?;
    let (mut er, mut ep) = (Vec::new(), Vec::new());
    for i in 1..mesh.vertex_count() {
        let Ok((r, phi)) = o.log(p[0], p[i], e0) else {
            continue;
        };
        if r > PI - FRAC_PI_4 {
            continue;
        }
        er.push((field.r[i] - r).abs());
        ep.push(wrap(field.phi[i] - phi).abs());
    }
    Ok(SphereLogErrors {
        h: mesh.mean_edge_length(),
        r: mean(&er),
        phi: mean(&ep),
    })
}

struct CircleStats {
    violations: usize,
    max_deviation: f64,
}

/// `φ` along polyhedral geodesic circles of radius `1.5h, 3h, 6h` about a
/// vertex, 720 samples each: drops of more than 1e-3 rad between
/// consecutive samples, and the largest deviation from the exact polar
/// angle after removing the mean offset.
fn circle_stats(
    mesh: &IntrinsicMesh,
    solver: &VectorHeatSolver,
    base: usize,
    init: RadialInit,
) -> Result<CircleStats> {
    let field = compute_log_map(
        solver,
        SurfacePoint::vertex(base),
        Complex64::new(1.0, 0.0),
        init,
    )?;
    let h = mesh.mean_edge_length();
    let mut stats = CircleStats {
        violations: 0,
        max_deviation: 0.0,
    };
    for radius in [1.5 * h, 3.0 * h, 6.0 * h] {
        let mut phis = Vec::with_capacity(720);
        for k in 0..720 {
            let theta = TAU * k as f64 / 720.0;
            let end = trace_geodesic(
                mesh,
                SurfacePoint::vertex(base),
                Complex64::from_polar(radius, theta),
            )?
            .endpoint;
            let (u, v) = field.logmap_at(mesh, end);
            phis.push((theta, v.atan2(u)));
        }
        for k in 0..phis.len() {
            if wrap(phis[(k + 1) % phis.len()].1 - phis[k].1) < -1e-3 {
                stats.violations += 1;
            }
        }
        let offset = phis
            .iter()
            .map(|&(t, f)| Complex64::from_polar(1.0, f - t))
            .sum::<Complex64>()
            .arg();
        for &(t, f) in &phis {
            stats.max_deviation = stats.max_deviation.max(wrap(f - t - offset).abs());
        }
    }
    Ok(stats)
}

fn logmap() -> Result<Outcome> {
    // (a) flat disk, radius 1, ~10k faces.
    let disk = generators::disk(40, 1.0).build()?;
    let solver = VectorHeatSolver::new(&disk, SolverOptions::default())?;
    let x = disk.extrinsic_to_tangent(0, Vector3::x())?.value;
    let field = compute_log_map(
        &solver,
        SurfacePoint::vertex(0),
        x,
        RadialInit::FiniteElement,
    )?;
    let p = disk.positions().unwrap();
    let disk_error = (0..disk.vertex_count())
        .map(|i| (Complex64::new(field.u[i], field.v[i]) - Complex64::new(p[i].x, p[i].y)).norm())
        .fold(0.0, f64::max);
    let a = disk_error < 0.02;

    // (b) icosphere convergence of r and φ.
    let levels = [2, 3, 4]
        .map(sphere_log_errors)
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let h: Vec<f64> = levels.iter().map(|l| l.h).collect();
    let r_slope = log_log_slope(&h, &levels.iter().map(|l| l.r).collect::<Vec<_>>());
    let phi_slope = log_log_slope(&h, &levels.iter().map(|l| l.phi).collect::<Vec<_>>());
    let b = r_slope >= 0.8 && phi_slope >= 0.8;

    // (c) finite-element against naive initial data.
    let meshes = [
        (
            "jittered grid",
            generators::jitter(&generators::grid(40, 1.0), 0.3, 3, false).build()?,
        ),
        (
            "jittered sphere",
            generators::jitter(&generators::icosphere(4), 0.3, 11, true).build()?,
        ),
    ];
    let mut c = true;
    let mut c_parts = Vec::new();
    let mut c_info = Vec::new();
    for (name, mesh) in &meshes {
        let solver = VectorHeatSolver::new(mesh, SolverOptions::default())?;
        let p = mesh.positions().unwrap();
        let centroid = p.iter().sum::<Vector3<f64>>() / p.len() as f64;
        let base = if mesh.is_boundary_vertex(0) {
            nearest_vertex(mesh, centroid)
        } else {
            0
        };
        let fe = circle_stats(mesh, &solver, base, RadialInit::FiniteElement)?;
        let naive = circle_stats(mesh, &solver, base, RadialInit::Naive)?;
        // Reduced by at least 10×; with no naive violations there is
        // nothing to reduce.
        let reduced = naive.violations > 0 && fe.violations * 10 <= naive.violations;
        c &= reduced;
        c_parts.push(format!("{name} {} vs {}", fe.violations, naive.violations));
        c_info.push(format!(
            "{name}: max deviation from the exact polar angle {:.3} rad (finite element) vs {:.3} rad (naive)",
            fe.max_deviation, naive.max_deviation
        ));
    }

    let detail = format!(
        "(a) disk max (u,v) error {disk_error:.4} {} 0.02; (b) sphere slopes r {r_slope:.2}, φ {phi_slope:.2} (need ≥ 0.8); (c) monotonicity violations FE vs naive: {} (need ≥ 10× fewer)",
        if a { "<" } else { "≥" },
        c_parts.join(", ")
    );
    let mut out = Outcome::new(a && b && c, detail)
        .with_info(format!(
            "sphere mean r errors {:?}",
            levels
                .iter()
                .map(|l| format!("{:.2e}", l.r))
                .collect::<Vec<_>>()
        ))
        .with_info(format!(
            "sphere mean φ errors {:?}",
            levels
                .iter()
                .map(|l| format!("{:.2e}", l.phi))
                .collect::<Vec<_>>()
        ));
    for line in c_info {
        out = out.with_info(line);
    }
    Ok(out)
}

fn locate_flat(mesh: &IntrinsicMesh, x: f64, y: f64) -> SurfacePoint {
    let p = mesh.positions().unwrap();
    for f in 0..mesh.face_count() {
        let [a, b, c] = mesh.face_vertices(f);
        let det = (p[b].x - p[a].x) * (p[c].y - p[a].y) - (p[c].x - p[a].x) * (p[b].y - p[a].y);
        let wb = ((x - p[a].x) * (p[c].y - p[a].y) - (p[c].x - p[a].x) * (y - p[a].y)) / det;
        let wc = ((p[b].x - p[a].x) * (y - p[a].y) - (x - p[a].x) * (p[b].y - p[a].y)) / det;
        let wa = 1.0 - wb - wc;
        if wa >= -1e-12 && wb >= -1e-12 && wc >= -1e-12 {
            return SurfacePoint::face_normalized(f, [wa, wb, wc]);
        }
    }
    panic!("({x}, {y}) is off the mesh");
}

fn centers() -> Result<Outcome> {
    let mut parts = Vec::new();
    let mut passed = true;
    let mut max_iterations = 0;

    // Planar centroid.
    let grid = generators::grid(24, 2.0)
        .map_positions(|p| p - Vector3::new(1.0, 1.0, 0.0))
        .build()?;
    let solver = VectorHeatSolver::new(&grid, SolverOptions::default())?;
    let pts = [(-0.5, -0.2), (0.4, -0.3), (0.1, 0.55), (0.3, 0.2)];
    let samples: Vec<SurfacePoint> = pts.iter().map(|&(x, y)| locate_flat(&grid, x, y)).collect();
    let r = find_center(
        &solver,
        &CenterProblem::points(&samples, Exponent::Mean),
        InitialGuess::Point(locate_flat(&grid, 0.6, -0.6)),
    )?;
    let c = r.center.position(&grid).unwrap();
    let h = grid.mean_edge_length();
    let off = (c - Vector3::new(0.075, 0.0625, 0.0)).norm();
    let ok = r.converged && r.iterations <= 3 && off < h;
    passed &= ok;
    max_iterations = max_iterations.max(r.iterations);
    parts.push(format!(
        "centroid {} iterations, off by {:.2}h",
        r.iterations,
        off / h
    ));

    // Two-point mean on the sphere.
    let sphere = generators::icosphere(4).build()?;
    let solver = VectorHeatSolver::new(&sphere, SolverOptions::default())?;
    let a = nearest_vertex(&sphere, Vector3::new(0.5f64.cos(), 0.5f64.sin(), 0.0));
    let b = nearest_vertex(&sphere, Vector3::new(0.5f64.cos(), -(0.5f64.sin()), 0.0));
    let p = sphere.positions().unwrap();
    let mid = (p[a] + p[b]).normalize();
    let problem = CenterProblem::points(
        &[SurfacePoint::vertex(a), SurfacePoint::vertex(b)],
        Exponent::Mean,
    );
    let r = find_center(
        &solver,
        &problem,
        InitialGuess::Point(SurfacePoint::vertex(a)),
    )?;
    let d = SphereOracle::default().distance(r.center.position(&sphere).unwrap(), mid);
    let h = sphere.mean_edge_length();
    let ok = r.converged && d < h;
    passed &= ok;
    max_iterations = max_iterations.max(r.iterations);
    parts.push(format!(
        "sphere midpoint {} iterations, off by {:.2}h",
        r.iterations,
        d / h
    ));

    // Fermat point against brute force over vertices.
    let solver = VectorHeatSolver::new(&grid, SolverOptions::default())?;
    let pts = [(-0.6, -0.4), (0.6, -0.5), (0.0, 0.6)];
    let samples: Vec<SurfacePoint> = pts.iter().map(|&(x, y)| locate_flat(&grid, x, y)).collect();
    let r = find_center(
        &solver,
        &CenterProblem::points(&samples, Exponent::Median),
        InitialGuess::Random { seed: 4 },
    )?;
    let pos = grid.positions().unwrap();
    let (best, _) = brute_force_center(grid.vertex_count(), &[1.0; 3], 1.0, |v, i| {
        ((pos[v].x - pts[i].0).powi(2) + (pos[v].y - pts[i].1).powi(2)).sqrt()
    });
    let h = grid.mean_edge_length();
    let off = (r.center.position(&grid).unwrap() - pos[best]).norm();
    let ok = r.converged && off < 1.5 * h;
    passed &= ok;
    max_iterations = max_iterations.max(r.iterations);
    parts.push(format!(
        "Fermat point {} iterations, {:.2}h from brute force",
        r.iterations,
        off / h
    ));

    passed &= max_iterations <= 20;
    Ok(Outcome::new(passed, parts.join("; ")))
}

fn sweep() -> Result<Outcome> {
    let r = t_sweep(SEED)?;
    Ok(Outcome::new(
        r.passed,
        format!(
            "{} (need interior argmin in [0.5, 2])",
            suite_detail(&SuiteReport::TSweep(r.clone()))
        ),
    ))
}

fn traces() -> Result<Outcome> {
    let r = trace_oracle(2, 3, 50, SEED)?;
    let coarser: Vec<String> = r
        .levels
        .iter()
        .map(|l| format!("level {}: {:.4}", l.subdivision_level, l.mean_angle_error))
        .collect();
    Ok(Outcome::new(
        r.passed,
        format!(
            "{} (< 0.05)",
            suite_detail(&SuiteReport::TraceOracle(r.clone()))
        ),
    )
    .with_info(format!("mean angle error by level: {}", coarser.join(", "))))
}

fn performance() -> Result<Outcome> {
    let mesh =
        generators::jitter(&generators::torus(1.0, 0.4, 320, 160), 0.3, SEED, false).build()?;
    let start = Instant::now();
    let solver = VectorHeatSolver::new(&mesh, SolverOptions::default())?;
    solver.prefactor(&[1])?;
    let precompute = start.elapsed().as_secs_f64();
    let factored = solver.factorization_count();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let mut set = SourceSet::<Complex64>::new();
        for _ in 0..rng.random_range(1..4) {
            set.push(
                rng.random_range(0..mesh.vertex_count()),
                Complex64::from_polar(1.0, rng.random_range(0.0..TAU)),
            );
        }
        let t = Instant::now();
        solver.transport(&set, 1)?;
        worst = worst.max(t.elapsed().as_secs_f64());
    }
    let refactors = solver.factorization_count() - factored;
    Ok(Outcome::new(
        precompute <= 10.0 && worst <= 0.5 && refactors == 0,
        format!(
            "{} triangles ({} flips): precompute {precompute:.2} s (≤ 10), slowest of 10 solves {worst:.3} s (≤ 0.5), {refactors} refactorizations",
            mesh.face_count(),
            solver.flip_count()
        ),
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Result<Outcome>); 10] = [
        ("flat exactness", flat),
        ("sphere transport convergence", sphere),
        ("round-trip symmetry", roundtrip),
        ("magnitude interpolation", magnitudes),
        ("intrinsic Delaunay guarantees", idt),
        ("log map accuracy", logmap),
        ("Karcher mean and median", centers),
        ("t-sweep", sweep),
        ("trace-and-unfold cross-check", traces),
        ("performance", performance),
    ];
    let mut passed = 0;
    let mut errors = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        match run() {
            Ok(o) => {
                passed += o.passed as usize;
                println!(
                    "{} {:>2} {name}: {} [{:.1} s]",
                    if o.passed { "PASS" } else { "FAIL" },
                    k + 1,
                    o.detail,
                    start.elapsed().as_secs_f64()
                );
                for line in o.info {
                    println!("          {line}");
                }
            }
            Err(e) => {
                errors += 1;
                println!("FAIL {:>2} {name}: not evaluated: {e}", k + 1);
            }
        }
    }
    println!("acceptance: {passed} of {} criteria pass", criteria.len());
    if errors > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
