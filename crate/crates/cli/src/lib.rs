//! Runs one [`RunConfig`] and renders its artifact. `main.rs` only parses
//! arguments, so everything here is testable without spawning a process.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde_json::json;
use thiserror::Error;
use vector_heat::centers::{
    self, CenterProblem, Exponent, GcvtOptions, InitialGuess, LandmarkOptions, Samples,
};
use vector_heat::io::validate::{run_suites, ValidationReport};
use vector_heat::io::{
    load_mesh, mesh_checksum, Command, ExportMetadata, FieldExport, FieldKind, FieldRecord,
    IoError, PointRecord, PointsExport, RunConfig, Suite,
};
use vector_heat::logmap::{compute_log_map, RadialInit};
use vector_heat::{
    IntrinsicMesh, SolverOptions, SourceSet, SurfacePoint, TangentVector, VectorHeatSolver,
};

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or arguments. Exit status 2.
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] IoError),

    #[error(transparent)]
    Numerical(#[from] vector_heat::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

/// A rendered artifact plus lines for the terminal. `success` is false
/// when a validation suite failed; the artifact is still complete.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub artifact: String,
    pub messages: Vec<String>,
    pub success: bool,
}

impl Outcome {
    fn ok(artifact: String, messages: Vec<String>) -> Self {
        Self {
            artifact,
            messages,
            success: true,
        }
    }
}

pub fn run(config: &RunConfig) -> Result<Outcome, CliError> {
    config
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    if config.command == Command::Validate {
        return validate(config);
    }
    let path = config.input.as_ref().expect("validated");
    let mesh = load_mesh(path)?;
    let solver = VectorHeatSolver::new(
        &mesh,
        SolverOptions {
            time_multiplier: config.t_multiplier,
            use_intrinsic_delaunay: config.use_intrinsic_delaunay,
        },
    )?;
    let points = source_points(&mesh, config)?;
    match config.command {
        Command::Transport => transport(&mesh, &solver, config, &points),
        Command::Interpolate => interpolate(&mesh, &solver, config, &points),
        Command::Logmap => logmap(&mesh, &solver, config, &points),
        Command::Mean | Command::Median => center(&mesh, &solver, config, &points),
        Command::Gcvt => gcvt(&mesh, &solver, config),
        Command::Landmarks => landmarks(&mesh, &solver, config),
        Command::Validate => unreachable!(),
    }
}

fn source_points(mesh: &IntrinsicMesh, config: &RunConfig) -> Result<Vec<SurfacePoint>, CliError> {
    config
        .sources
        .iter()
        .map(|s| {
            s.location
                .to_point(mesh)
                .map_err(|e| CliError::Usage(format!("--source: {e}")))
        })
        .collect()
}

fn metadata(
    mesh: &IntrinsicMesh,
    solver: &VectorHeatSolver,
    config: &RunConfig,
    kind: FieldKind,
) -> ExportMetadata {
    let mut m = ExportMetadata::new(kind, mesh_checksum(mesh), mesh.vertex_count());
    m.t = solver.time();
    m.t_multiplier = config.t_multiplier;
    m.degree = config.degree;
    m.intrinsic_delaunay = config.use_intrinsic_delaunay;
    m.provenance = serde_json::to_value(config).expect("config serializes");
    m
}

fn field(
    mesh: &IntrinsicMesh,
    solver: &VectorHeatSolver,
    config: &RunConfig,
    kind: FieldKind,
    records: Vec<FieldRecord>,
) -> Result<String, CliError> {
    let export = FieldExport {
        metadata: metadata(mesh, solver, config, kind),
        records,
    };
    Ok(export.render(config.format)?)
}

fn transport(
    mesh: &IntrinsicMesh,
    solver: &VectorHeatSolver,
    config: &RunConfig,
    points: &[SurfacePoint],
) -> Result<Outcome, CliError> {
    let mut sources = SourceSet::<Complex64>::new();
    for (spec, &p) in config.sources.iter().zip(points) {
        sources.push_point_weighted(mesh, p, spec.vector(), spec.weight)?;
    }
    let res = solver.transport(&sources, config.degree)?;
    let records = (0..mesh.vertex_count())
        .map(|v| {
            let x = res.field[v];
            let extrinsic = mesh
                .positions()
                .map(|_| mesh.tangent_to_extrinsic(TangentVector::new(v, x)))
                .transpose()?
                .map(|e| [e.x, e.y, e.z]);
            Ok(FieldRecord {
                vertex: v,
                angle: x.arg(),
                magnitude: x.norm(),
                extrinsic,
                uv: None,
            })
        })
        .collect::<Result<Vec<_>, vector_heat::Error>>()?;
    let degenerate = res.degenerate.iter().filter(|&&d| d).count();
    let mut messages = vec![format!(
        "transported {} source(s) to {} vertices, t = {:.3e}",
        sources.len(),
        mesh.vertex_count(),
        res.t
    )];
    if degenerate > 0 {
        messages.push(format!(
            "warning: {degenerate} vertices with vanishing diffused field were set to zero"
        ));
    }
    Ok(Outcome::ok(
        field(mesh, solver, config, FieldKind::Vector, records)?,
        messages,
    ))
}

fn interpolate(
    mesh: &IntrinsicMesh,
    solver: &VectorHeatSolver,
    config: &RunConfig,
    points: &[SurfacePoint],
) -> Result<Outcome, CliError> {
    let mut sources = SourceSet::<f64>::new();
    for (spec, &p) in config.sources.iter().zip(points) {
        sources.push_point_weighted(mesh, p, spec.value, spec.weight)?;
    }
    let res = solver.interpolate(&sources)?;
    let records = res
        .values
        .iter()
        .enumerate()
        .map(|(v, &x)| FieldRecord {
            vertex: v,
            angle: 0.0,
            magnitude: x,
            extrinsic: None,
            uv: None,
        })
        .collect();
    let messages = vec![format!("interpolated {} source(s)", sources.len())];
    Ok(Outcome::ok(
        field(mesh, solver, config, FieldKind::Scalar, records)?,
        messages,
    ))
}

fn logmap(
    mesh: &IntrinsicMesh,
    solver: &VectorHeatSolver,
    config: &RunConfig,
    points: &[SurfacePoint],
) -> Result<Outcome, CliError> {
    let spec = &config.sources[0];
    let zero = Complex64::from_polar(1.0, spec.angle);
    let lm = compute_log_map(solver, points[0], zero, RadialInit::FiniteElement)?;
    let records = (0..mesh.vertex_count())
        .map(|v| FieldRecord {
            vertex: v,
            angle: lm.phi[v],
            magnitude: lm.r[v],
            extrinsic: None,
            uv: Some([lm.u[v], lm.v[v]]),
        })
        .collect();
    let mut messages = vec![format!("log map about {:?}", points[0])];
    if config.sources.len() > 1 {
        messages.push("warning: only the first --source is used as the basepoint".into());
    }
    Ok(Outcome::ok(
        field(mesh, solver, config, FieldKind::LogMap, records)?,
        messages,
    ))
}

fn points_export(
    mesh: &IntrinsicMesh,
    solver: &VectorHeatSolver,
    config: &RunConfig,
    points: &[SurfacePoint],
    stats: BTreeMap<String, serde_json::Value>,
) -> Result<String, CliError> {
    let export = PointsExport {
        metadata: metadata(mesh, solver, config, FieldKind::Vector),
        points: points
            .iter()
            .map(|&p| PointRecord::from_point(mesh, p))
            .collect(),
        stats,
    };
    Ok(export.render(config.format)?)
}

fn center(
    mesh: &IntrinsicMesh,
    solver: &VectorHeatSolver,
    config: &RunConfig,
    points: &[SurfacePoint],
) -> Result<Outcome, CliError> {
    let exponent = if config.command == Command::Mean {
        Exponent::Mean
    } else {
        Exponent::Median
    };
    let samples = config
        .sources
        .iter()
        .zip(points)
        .map(|(s, &p)| (p, s.weight))
        .collect();
    let mut problem = CenterProblem::new(Samples::Points(samples), exponent);
    problem.max_iterations = config.iterations.max(1);
    let res = centers::find_center(solver, &problem, InitialGuess::Point(points[0]))?;
    let stats = BTreeMap::from([
        ("iterations".to_string(), json!(res.iterations)),
        ("converged".to_string(), json!(res.converged)),
        ("stalled".to_string(), json!(res.stalled)),
        (
            "final_gradient_norm".to_string(),
            json!(res.final_gradient_norm),
        ),
        ("energies".to_string(), json!(res.energies)),
    ]);
    let mut messages = vec![format!(
        "{:?} after {} iterations: {:?}",
        exponent, res.iterations, res.center
    )];
    if res.stalled {
        messages.push(format!(
            "warning: energy stopped decreasing at |v| = {:.3e}",
            res.final_gradient_norm
        ));
    } else if !res.converged {
        messages.push(format!(
            "warning: not converged, |v| = {:.3e}",
            res.final_gradient_norm
        ));
    }
    Ok(Outcome::ok(
        points_export(mesh, solver, config, &[res.center], stats)?,
        messages,
    ))
}

fn gcvt(
    mesh: &IntrinsicMesh,
    solver: &VectorHeatSolver,
    config: &RunConfig,
) -> Result<Outcome, CliError> {
    let initial = centers::random_points(mesh, config.count, config.seed);
    let state = centers::gcvt(
        solver,
        &initial,
        GcvtOptions {
            lloyd_iterations: config.iterations,
            ..GcvtOptions::default()
        },
    )?;
    let stats = BTreeMap::from([
        ("iterations".to_string(), json!(state.iterations)),
        ("max_movement".to_string(), json!(state.max_movement)),
        ("warnings".to_string(), json!(state.warnings)),
    ]);
    let mut messages = vec![format!(
        "{} sites after {} Lloyd iterations",
        state.sites.len(),
        state.iterations
    )];
    messages.extend(state.warnings.iter().map(|w| format!("warning: {w}")));
    Ok(Outcome::ok(
        points_export(mesh, solver, config, &state.sites, stats)?,
        messages,
    ))
}

fn landmarks(
    mesh: &IntrinsicMesh,
    solver: &VectorHeatSolver,
    config: &RunConfig,
) -> Result<Outcome, CliError> {
    let options = LandmarkOptions {
        count: config.count,
        seed: config.seed,
        ..LandmarkOptions::default()
    };
    let res = centers::ordered_landmarks(solver, options)?;
    let medians: Vec<serde_json::Value> = res
        .medians
        .iter()
        .map(|&p| json!(PointRecord::from_point(mesh, p)))
        .collect();
    let stats = BTreeMap::from([("medians".to_string(), json!(medians))]);
    let messages = vec![format!(
        "{} landmarks from {} median(s)",
        res.landmarks.len(),
        res.medians.len()
    )];
    Ok(Outcome::ok(
        points_export(mesh, solver, config, &res.landmarks, stats)?,
        messages,
    ))
}

fn validate(config: &RunConfig) -> Result<Outcome, CliError> {
    let suite = config.suite.unwrap_or(Suite::All);
    let report: ValidationReport = run_suites(suite, config.levels, config.seed)?;
    let mut artifact = serde_json::to_string_pretty(&report).map_err(IoError::from)?;
    artifact.push('\n');
    let messages = report.suites.iter().map(|s| s.summary()).collect();
    Ok(Outcome {
        artifact,
        messages,
        success: report.passed,
    })
}
