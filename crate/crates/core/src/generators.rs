//! Procedural test surfaces: icospheres, planar grids, disks, and a few
//! curved shapes without symmetry. Used by the validation suites, the
//! benchmarks and the browser demo.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::mesh::IntrinsicMesh;

/// Raw triangle soup with positions.
#[derive(Debug, Clone, Default)]
pub struct TriangleMesh {
    pub positions: Vec<Vector3<f64>>,
    pub faces: Vec<[usize; 3]>,
}

impl TriangleMesh {
    pub fn build(&self) -> Result<IntrinsicMesh> {
        IntrinsicMesh::from_positions(&self.faces, self.positions.clone())
    }

    pub fn map_positions(mut self, f: impl Fn(Vector3<f64>) -> Vector3<f64>) -> Self {
        for p in &mut self.positions {
            *p = f(*p);
        }
        self
    }
}

/// Unit icosahedron with a vertex at the north pole `(0, 0, 1)`.
pub fn icosahedron() -> TriangleMesh {
    let mut positions = vec![Vector3::new(0.0, 0.0, 1.0)];
    let z = 1.0 / 5f64.sqrt();
    let r = 2.0 / 5f64.sqrt();
    for k in 0..5 {
        let a = TAU * k as f64 / 5.0;
        positions.push(Vector3::new(r * a.cos(), r * a.sin(), z));
    }
    for k in 0..5 {
        let a = TAU * (k as f64 + 0.5) / 5.0;
        positions.push(Vector3::new(r * a.cos(), r * a.sin(), -z));
    }
    positions.push(Vector3::new(0.0, 0.0, -1.0));

    let mut faces = Vec::with_capacity(20);
    for k in 0..5 {
        let u = 1 + k;
        let un = 1 + (k + 1) % 5;
        let l = 6 + k;
        let ln = 6 + (k + 1) % 5;
        faces.push([0, u, un]);
        faces.push([u, l, un]);
        faces.push([un, l, ln]);
        faces.push([l, 11, ln]);
    }
    TriangleMesh { positions, faces }
}

/// Loop-style 1:4 subdivision projected to the unit sphere.
pub fn icosphere(level: u32) -> TriangleMesh {
    let mut mesh = icosahedron();
    for _ in 0..level {
        mesh = subdivide(&mesh, |p| p.normalize());
    }
    mesh
}

/// Splits every triangle into four through edge midpoints, passing new
/// midpoints through `project`.
pub fn subdivide(
    mesh: &TriangleMesh,
    project: impl Fn(Vector3<f64>) -> Vector3<f64>,
) -> TriangleMesh {
    let mut positions = mesh.positions.clone();
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
    let mut mid = |a: usize, b: usize, positions: &mut Vec<Vector3<f64>>| -> usize {
        let key = (a.min(b), a.max(b));
        *midpoint.entry(key).or_insert_with(|| {
            positions.push(project((positions[a] + positions[b]) * 0.5));
            positions.len() - 1
        })
    };
    let mut faces = Vec::with_capacity(mesh.faces.len() * 4);
    for &[a, b, c] in &mesh.faces {
        let ab = mid(a, b, &mut positions);
        let bc = mid(b, c, &mut positions);
        let ca = mid(c, a, &mut positions);
        faces.push([a, ab, ca]);
        faces.push([ab, b, bc]);
        faces.push([ca, bc, c]);
        faces.push([ab, bc, ca]);
    }
    TriangleMesh { positions, faces }
}

/// Latitude-longitude sphere with poles on the z axis.
pub fn uv_sphere(rings: usize, segments: usize) -> TriangleMesh {
    let mut positions = vec![Vector3::new(0.0, 0.0, 1.0)];
    for i in 1..rings {
        let theta = PI * i as f64 / rings as f64;
        for j in 0..segments {
            let phi = TAU * j as f64 / segments as f64;
            positions.push(Vector3::new(
                theta.sin() * phi.cos(),
                theta.sin() * phi.sin(),
                theta.cos(),
            ));
        }
    }
    positions.push(Vector3::new(0.0, 0.0, -1.0));
    let south = positions.len() - 1;
    let ring = |i: usize, j: usize| 1 + (i - 1) * segments + j % segments;
    let mut faces = Vec::new();
    for j in 0..segments {
        faces.push([0, ring(1, j), ring(1, j + 1)]);
    }
    for i in 1..rings - 1 {
        for j in 0..segments {
            let (a, b) = (ring(i, j), ring(i, j + 1));
            let (c, d) = (ring(i + 1, j), ring(i + 1, j + 1));
            faces.push([a, c, d]);
            faces.push([a, d, b]);
        }
    }
    for j in 0..segments {
        faces.push([ring(rings - 1, j), south, ring(rings - 1, j + 1)]);
    }
    TriangleMesh { positions, faces }
}

/// Regular `n × n` grid on `[0, size]²` in the `z = 0` plane, every cell
/// split along the same diagonal.
pub fn grid(n: usize, size: f64) -> TriangleMesh {
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut positions = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            positions.push(Vector3::new(
                size * i as f64 / n as f64,
                size * j as f64 / n as f64,
                0.0,
            ));
        }
    }
    let mut faces = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    TriangleMesh { positions, faces }
}

/// Disk of the given radius in the `z = 0` plane built from `rings`
/// concentric rings; ring `k` carries `6k` vertices. The center is vertex 0.
pub fn disk(rings: usize, radius: f64) -> TriangleMesh {
    let mut positions = vec![Vector3::zeros()];
    let mut starts = vec![0usize];
    for k in 1..=rings {
        starts.push(positions.len());
        let count = 6 * k;
        for j in 0..count {
            let a = TAU * j as f64 / count as f64;
            let r = radius * k as f64 / rings as f64;
            positions.push(Vector3::new(r * a.cos(), r * a.sin(), 0.0));
        }
    }
    let mut faces = Vec::new();
    for j in 0..6 {
        faces.push([0, 1 + j, 1 + (j + 1) % 6]);
    }
    for k in 2..=rings {
        let (inner, outer) = (starts[k - 1], starts[k]);
        let (ni, no) = (6 * (k - 1), 6 * k);
        let (mut i, mut o) = (0usize, 0usize);
        while i < ni || o < no {
            let ai = (i + 1) as f64 / ni as f64;
            let ao = (o + 1) as f64 / no as f64;
            if o < no && (i >= ni || ao <= ai) {
                faces.push([inner + i % ni, outer + o, outer + (o + 1) % no]);
                o += 1;
            } else {
                faces.push([inner + i, outer + o % no, inner + (i + 1) % ni]);
                i += 1;
            }
        }
    }
    TriangleMesh { positions, faces }
}

/// Icosphere stretched into an ellipsoid with semi-axes `axes`.
pub fn ellipsoid(level: u32, axes: [f64; 3]) -> TriangleMesh {
    icosphere(level).map_positions(|p| Vector3::new(p.x * axes[0], p.y * axes[1], p.z * axes[2]))
}

/// Icosphere with a smooth, non-symmetric radial bump pattern.
pub fn bumpy_sphere(level: u32, amplitude: f64) -> TriangleMesh {
    icosphere(level).map_positions(|p| {
        let bump =
            (3.0 * p.x + 1.0).sin() * (2.0 * p.y - 0.5).cos() + 0.5 * (4.0 * p.z + 0.3).sin();
        p * (1.0 + amplitude * bump)
    })
}

/// Torus around the z axis.
pub fn torus(major: f64, minor: f64, nu: usize, nv: usize) -> TriangleMesh {
    let mut positions = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let u = TAU * i as f64 / nu as f64;
        for j in 0..nv {
            let v = TAU * j as f64 / nv as f64;
            let r = major + minor * v.cos();
            positions.push(Vector3::new(r * u.cos(), r * u.sin(), minor * v.sin()));
        }
    }
    let id = |i: usize, j: usize| (i % nu) * nv + j % nv;
    let mut faces = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    TriangleMesh { positions, faces }
}

/// Displaces every vertex by a random offset of at most `amount` (relative
/// to its mean incident edge length) within the local tangent plane of a
/// sphere, then reprojects if `on_sphere`. Deterministic for a given seed.
pub fn jitter(mesh: &TriangleMesh, amount: f64, seed: u64, on_sphere: bool) -> TriangleMesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut len_sum = vec![0.0; mesh.positions.len()];
    let mut count = vec![0usize; mesh.positions.len()];
    for f in &mesh.faces {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            let l = (mesh.positions[a] - mesh.positions[b]).norm();
            len_sum[a] += l;
            len_sum[b] += l;
            count[a] += 1;
            count[b] += 1;
        }
    }
    let mut out = mesh.clone();
    for (i, p) in out.positions.iter_mut().enumerate() {
        let h = if count[i] > 0 {
            len_sum[i] / count[i] as f64
        } else {
            0.0
        };
        let d = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let mut q = *p + d * (amount * h);
        if on_sphere {
            q = q.normalize();
        } else {
            q.z = p.z;
        }
        *p = q;
    }
    out
}

/// Long strip of very thin triangles: a `1 × width` rectangle cut into
/// `segments` slivers by zig-zag diagonals that skip `skew` columns.
pub fn sliver_strip(segments: usize, width: f64, skew: usize) -> TriangleMesh {
    let mut positions = Vec::new();
    for i in 0..=segments {
        positions.push(Vector3::new(i as f64 / segments as f64, 0.0, 0.0));
    }
    for i in 0..=segments {
        positions.push(Vector3::new(i as f64 / segments as f64, width, 0.0));
    }
    let bottom = |i: usize| i;
    let top = |i: usize| segments + 1 + i;
    // Fan every top vertex band against a shifted bottom band to get obtuse,
    // non-Delaunay slivers.
    let mut faces = Vec::new();
    let s = skew.min(segments);
    // Left fan: bottom 0..s to top 0.
    for i in 0..s {
        faces.push([bottom(i), bottom(i + 1), top(0)]);
    }
    for i in 0..segments - s {
        faces.push([bottom(i + s), bottom(i + s + 1), top(i + 1)]);
        faces.push([bottom(i + s), top(i + 1), top(i)]);
    }
    for i in segments - s..segments {
        faces.push([bottom(segments), top(i + 1), top(i)]);
    }
    TriangleMesh { positions, faces }
}
