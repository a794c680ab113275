//! Browser bindings for a small interactive demo. [`Scene`] holds a generated
//! mesh with a prefactored solver and is plain Rust; [`Demo`] wraps it for
//! JavaScript. All arrays are flat `f32`/`u32` buffers.

use num_complex::Complex64;
use thiserror::Error as ThisError;
use vector_heat::centers::{self, CenterProblem, Exponent, InitialGuess};
use vector_heat::generators;
use vector_heat::logmap::{compute_log_map, RadialInit};
use vector_heat::{
    Error, IntrinsicMesh, SolverOptions, SourceSet, SurfacePoint, TangentVector, VectorHeatSolver,
};
use wasm_bindgen::prelude::*;

pub const SHAPES: [&str; 3] = ["sphere", "bumpy", "torus"];

#[derive(Debug, ThisError)]
pub enum DemoError {
    #[error("unknown shape {0:?}, expected one of {SHAPES:?}")]
    UnknownShape(String),
    #[error(transparent)]
    Numerical(#[from] Error),
}

pub struct Scene {
    mesh: IntrinsicMesh,
    solver: VectorHeatSolver,
}

/// Result of a center query: position, iteration count and whether `|v|`
/// reached the tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct Center {
    pub position: [f64; 3],
    pub iterations: usize,
    pub converged: bool,
}

impl Scene {
    /// `detail` is clamped to 1..=5.
    pub fn new(shape: &str, detail: u32) -> Result<Self, DemoError> {
        let detail = detail.clamp(1, 5);
        let tri = match shape {
            "sphere" => generators::icosphere(detail),
            "bumpy" => generators::bumpy_sphere(detail, 0.15),
            "torus" => {
                let n = 8 << detail;
                generators::torus(1.0, 0.4, n, n * 2 / 5)
            }
            other => return Err(DemoError::UnknownShape(other.into())),
        };
        let mesh = tri.build()?;
        let solver = VectorHeatSolver::new(&mesh, SolverOptions::default())?;
        solver.prefactor(&[1])?;
        Ok(Self { mesh, solver })
    }

    pub fn mesh(&self) -> &IntrinsicMesh {
        &self.mesh
    }

    pub fn positions(&self) -> Vec<f32> {
        self.mesh
            .positions()
            .expect("generated meshes carry positions")
            .iter()
            .flat_map(|p| [p.x as f32, p.y as f32, p.z as f32])
            .collect()
    }

    pub fn triangles(&self) -> Vec<u32> {
        (0..self.mesh.face_count())
            .flat_map(|f| self.mesh.face_vertices(f).map(|v| v as u32))
            .collect()
    }

    fn check(&self, vertices: &[u32]) -> Result<(), Error> {
        if vertices.is_empty() {
            return Err(Error::ZeroSources);
        }
        for &v in vertices {
            self.mesh.check_vertex(v as usize)?;
        }
        Ok(())
    }

    /// Transports a unit vector from every source vertex, at `angle` from
    /// each source's reference edge, and returns unit extrinsic vectors.
    pub fn transport(&self, vertices: &[u32], angle: f64) -> Result<Vec<f32>, Error> {
        self.check(vertices)?;
        let mut sources = SourceSet::<Complex64>::new();
        for &v in vertices {
            sources.push(v as usize, Complex64::from_polar(1.0, angle));
        }
        let res = self.solver.transport(&sources, 1)?;
        let mut out = Vec::with_capacity(3 * res.field.len());
        for (v, x) in res.field.iter().enumerate() {
            let e = self.mesh.tangent_to_extrinsic(TangentVector::new(
                v,
                *x / x.norm().max(f64::MIN_POSITIVE),
            ))?;
            out.extend([e.x as f32, e.y as f32, e.z as f32]);
        }
        Ok(out)
    }

    /// Log map about `vertex`, interleaved `(u, v)` per vertex.
    pub fn log_map(&self, vertex: u32) -> Result<Vec<f32>, Error> {
        self.check(&[vertex])?;
        let field = compute_log_map(
            &self.solver,
            SurfacePoint::vertex(vertex as usize),
            Complex64::new(1.0, 0.0),
            RadialInit::FiniteElement,
        )?;
        Ok(field
            .u
            .iter()
            .zip(&field.v)
            .flat_map(|(&u, &v)| [u as f32, v as f32])
            .collect())
    }

    /// Karcher mean or geometric median of the given vertices, started at
    /// the first one.
    pub fn center(&self, vertices: &[u32], median: bool) -> Result<Center, Error> {
        self.check(vertices)?;
        let samples: Vec<SurfacePoint> = vertices
            .iter()
            .map(|&v| SurfacePoint::vertex(v as usize))
            .collect();
        let exponent = if median {
            Exponent::Median
        } else {
            Exponent::Mean
        };
        let mut problem = CenterProblem::points(&samples, exponent);
        problem.max_iterations = 30;
        let res = centers::find_center(&self.solver, &problem, InitialGuess::Point(samples[0]))?;
        let p = res
            .center
            .position(&self.mesh)
            .expect("generated meshes carry positions");
        Ok(Center {
            position: [p.x, p.y, p.z],
            iterations: res.iterations,
            converged: res.converged,
        })
    }
}

fn js(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct Demo {
    scene: Scene,
}

#[wasm_bindgen]
impl Demo {
    /// `shape` is `sphere`, `bumpy` or `torus`.
    #[wasm_bindgen(constructor)]
    pub fn new(shape: &str, detail: u32) -> Result<Demo, JsError> {
        Ok(Demo {
            scene: Scene::new(shape, detail).map_err(js)?,
        })
    }

    #[wasm_bindgen(js_name = vertexCount)]
    pub fn vertex_count(&self) -> usize {
        self.scene.mesh.vertex_count()
    }

    #[wasm_bindgen(js_name = meanEdgeLength)]
    pub fn mean_edge_length(&self) -> f64 {
        self.scene.mesh.mean_edge_length()
    }

    pub fn positions(&self) -> Vec<f32> {
        self.scene.positions()
    }

    pub fn triangles(&self) -> Vec<u32> {
        self.scene.triangles()
    }

    pub fn transport(&self, vertices: &[u32], angle: f64) -> Result<Vec<f32>, JsError> {
        self.scene.transport(vertices, angle).map_err(js)
    }

    #[wasm_bindgen(js_name = logMap)]
    pub fn log_map(&self, vertex: u32) -> Result<Vec<f32>, JsError> {
        self.scene.log_map(vertex).map_err(js)
    }

    /// `[x, y, z, iterations, converged]`.
    pub fn center(&self, vertices: &[u32], median: bool) -> Result<Vec<f64>, JsError> {
        let c = self.scene.center(vertices, median).map_err(js)?;
        Ok(vec![
            c.position[0],
            c.position[1],
            c.position[2],
            c.iterations as f64,
            if c.converged { 1.0 } else { 0.0 },
        ])
    }
}
