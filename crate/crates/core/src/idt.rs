//! Intrinsic Delaunay retriangulation by edge flips, keeping every vertex's
//! polar frame fixed so per-vertex tangent data can be copied between the
//! input mesh and the flipped one.

use std::collections::VecDeque;
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::mesh::{satisfies_triangle_inequality, IntrinsicMesh};

/// Angle-sum slack before an edge counts as non-Delaunay; cocircular
/// configurations are left alone.
pub const DELAUNAY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct DelaunayResult {
    pub mesh: IntrinsicMesh,
    pub flip_count: usize,
    /// Maps input vertices to vertices of `mesh`; always the identity.
    pub vertex_correspondence: Vec<usize>,
}

/// Sum of the two angles opposite an edge (one angle on the boundary).
pub fn opposite_angle_sum(mesh: &IntrinsicMesh, edge: usize) -> f64 {
    let h = mesh.edge_halfedge(edge);
    mesh.opposite_angle(h) + mesh.opposite_angle(mesh.twin(h))
}

pub fn is_delaunay_edge(mesh: &IntrinsicMesh, edge: usize) -> bool {
    mesh.is_boundary_edge(edge) || opposite_angle_sum(mesh, edge) <= PI + DELAUNAY_TOLERANCE
}

pub fn is_delaunay(mesh: &IntrinsicMesh) -> bool {
    (0..mesh.edge_count()).all(|e| is_delaunay_edge(mesh, e))
}

/// Length of the other diagonal of the quad formed by the two faces of an
/// interior edge, measured in the unfolded quad.
pub fn flipped_length(mesh: &IntrinsicMesh, edge: usize) -> Result<f64> {
    if mesh.is_boundary_edge(edge) {
        return Err(Error::BoundaryEdge(edge));
    }
    let h = mesh.edge_halfedge(edge);
    let t = mesh.twin(h);
    let h2 = mesh.next(mesh.next(h)); // k -> i
    let t1 = mesh.next(t); // i -> l
    let l_ik = mesh.halfedge_length(h2);
    let l_il = mesh.halfedge_length(t1);
    let angle = mesh.corner_angle(h) + mesh.corner_angle(t1);
    let sq = l_ik * l_ik + l_il * l_il - 2.0 * l_ik * l_il * angle.cos();
    Ok(sq.max(0.0).sqrt())
}

/// Flips interior edge `ij` (faces `ijk`, `jil`) to `kl`, assigning the
/// intrinsic diagonal length and the polar directions of the new halfedges.
pub fn flip_edge(mesh: &mut IntrinsicMesh, edge: usize) -> Result<()> {
    let new_len = flipped_length(mesh, edge)?;

    let h = mesh.edge_halfedge(edge); // i -> j
    let t = mesh.twin(h); // j -> i
    let h1 = mesh.next(h); // j -> k
    let h2 = mesh.next(h1); // k -> i
    let t1 = mesh.next(t); // i -> l
    let t2 = mesh.next(t1); // l -> j
    let (i, j) = (mesh.tail(h), mesh.tail(t));
    let (k, l) = (mesh.tail(h2), mesh.tail(t2));

    let l_lj = mesh.halfedge_length(t2);
    let l_jk = mesh.halfedge_length(h1);
    let l_ki = mesh.halfedge_length(h2);
    let l_il = mesh.halfedge_length(t1);
    if k == l
        || !(new_len > 0.0)
        || !satisfies_triangle_inequality(l_lj, l_jk, new_len)
        || !satisfies_triangle_inequality(l_ki, l_il, new_len)
        || mesh.corner_angle(h) + mesh.corner_angle(t1) >= PI
        || mesh.corner_angle(h1) + mesh.corner_angle(t) >= PI
    {
        return Err(Error::Unflippable(edge));
    }

    let f1 = mesh.he_face[h];
    let f2 = mesh.he_face[t];

    // f1: k -> l -> j -> k ; f2: l -> k -> i -> l
    mesh.he_vertex[h] = k;
    mesh.he_vertex[t] = l;
    mesh.he_next[h] = t2;
    mesh.he_next[t2] = h1;
    mesh.he_next[h1] = h;
    mesh.he_next[t] = h2;
    mesh.he_next[h2] = t1;
    mesh.he_next[t1] = t;
    mesh.he_face[t2] = f1;
    mesh.he_face[h2] = f2;
    mesh.face_he[f1] = h;
    mesh.face_he[f2] = t;
    if mesh.vertex_he[i] == h {
        mesh.vertex_he[i] = t1;
    }
    if mesh.vertex_he[j] == t {
        mesh.vertex_he[j] = h1;
    }

    mesh.edge_length[edge] = new_len;
    mesh.update_face_geometry(f1)?;
    mesh.update_face_geometry(f2)?;

    mesh.direction[h] = (mesh.direction[h2] + mesh.normalized_angle(h2)).rem_euclid(TAU);
    mesh.direction[t] = (mesh.direction[t2] + mesh.normalized_angle(t2)).rem_euclid(TAU);
    Ok(())
}

/// Flips non-Delaunay edges (FIFO order) until every interior edge has an
/// opposite angle sum of at most `π`.
pub fn to_intrinsic_delaunay(mesh: &IntrinsicMesh) -> Result<DelaunayResult> {
    let mut m = mesh.clone();
    let ne = m.edge_count();
    let mut queued = vec![false; ne];
    let mut queue = VecDeque::new();
    for e in 0..ne {
        if !is_delaunay_edge(&m, e) {
            queued[e] = true;
            queue.push_back(e);
        }
    }

    let mut flips = 0usize;
    let mut deferred: Vec<usize> = Vec::new();
    let mut flips_at_last_retry = 0usize;
    let max_flips = 200 * ne.max(1);
    loop {
        while let Some(e) = queue.pop_front() {
            queued[e] = false;
            if is_delaunay_edge(&m, e) {
                continue;
            }
            match flip_edge(&mut m, e) {
                Ok(()) => {
                    flips += 1;
                    if flips > max_flips {
                        return Err(Error::DelaunayStagnated(queue.into_iter().collect()));
                    }
                    let h = m.edge_halfedge(e);
                    let t = m.twin(h);
                    for n in [m.next(h), m.next(m.next(h)), m.next(t), m.next(m.next(t))] {
                        let ne = m.edge_of(n);
                        if !queued[ne] {
                            queued[ne] = true;
                            queue.push_back(ne);
                        }
                    }
                }
                Err(Error::Unflippable(_)) => deferred.push(e),
                Err(other) => return Err(other),
            }
        }
        deferred.retain(|&e| !is_delaunay_edge(&m, e));
        if deferred.is_empty() {
            break;
        }
        if flips == flips_at_last_retry {
            deferred.sort_unstable();
            return Err(Error::DelaunayStagnated(deferred));
        }
        flips_at_last_retry = flips;
        for e in deferred.drain(..) {
            if !queued[e] {
                queued[e] = true;
                queue.push_back(e);
            }
        }
    }

    Ok(DelaunayResult {
        vertex_correspondence: (0..m.vertex_count()).collect(),
        mesh: m,
        flip_count: flips,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;
    use nalgebra::Vector3;

    fn unit_square() -> IntrinsicMesh {
        let p = vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(1.0, 1.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
        ];
        IntrinsicMesh::from_positions(&[[0, 1, 2], [0, 2, 3]], p).unwrap()
    }

    fn diagonal(m: &IntrinsicMesh) -> usize {
        (0..m.edge_count())
            .find(|&e| !m.is_boundary_edge(e))
            .unwrap()
    }

    #[test]
    fn planar_quad_flip() {
        let mut m = unit_square();
        let e = diagonal(&m);
        let before: Vec<f64> = (0..4).map(|v| m.angle_sum(v)).collect();
        flip_edge(&mut m, e).unwrap();
        assert!((m.edge_length(e) - 2f64.sqrt()).abs() < 1e-12);
        let h = m.edge_halfedge(e);
        let mut ends = [m.tail(h), m.head(h)];
        ends.sort();
        assert_eq!(ends, [1, 3]);
        for v in 0..4 {
            m.update_vertex_frame(v);
            assert!((m.angle_sum(v) - before[v]).abs() < 1e-10);
        }
        assert!((m.total_area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn double_flip_restores_lengths() {
        let tm = generators::jitter(&generators::icosphere(2), 0.2, 5, true);
        let original = tm.build().unwrap();
        let mut m = original.clone();
        for e in (0..m.edge_count()).step_by(13) {
            if flip_edge(&mut m, e).is_ok() {
                flip_edge(&mut m, e).unwrap();
                assert!((m.edge_length(e) - original.edge_length(e)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn flip_preserves_frames_and_angle_sums() {
        let original = generators::jitter(&generators::icosphere(2), 0.3, 9, true)
            .build()
            .unwrap();
        let mut m = original.clone();
        let e = (0..m.edge_count())
            .find(|&e| flipped_length(&m, e).is_ok() && flip_edge(&mut m.clone(), e).is_ok())
            .unwrap();
        let h = m.edge_halfedge(e);
        let quad = [
            m.tail(h),
            m.head(h),
            m.tail(m.prev(h)),
            m.tail(m.prev(m.twin(h))),
        ];
        flip_edge(&mut m, e).unwrap();
        for &v in &quad {
            let sum: f64 = m.outgoing(v).map(|h| m.corner_angle(h)).sum();
            assert!((sum - original.angle_sum(v)).abs() < 1e-10);
            // Directions stay consistent with the counter-clockwise sweep.
            let mut copy = m.clone();
            copy.vertex_he[v] = original.vertex_halfedge(v);
            if copy.he_vertex[copy.vertex_he[v]] == v {
                let expected: Vec<f64> = m.outgoing(v).map(|h| m.edge_direction(h)).collect();
                copy.update_vertex_frame(v);
                let got: Vec<f64> = copy.outgoing(v).map(|h| copy.edge_direction(h)).collect();
                for (a, b) in expected.iter().zip(got.iter()) {
                    let d = (a - b).rem_euclid(TAU);
                    assert!(d.min(TAU - d) < 1e-10);
                }
            }
        }
    }

    #[test]
    fn boundary_edge_cannot_flip() {
        let mut m = unit_square();
        let e = (0..m.edge_count())
            .find(|&e| m.is_boundary_edge(e))
            .unwrap();
        assert_eq!(flip_edge(&mut m, e), Err(Error::BoundaryEdge(e)));
    }

    #[test]
    fn delaunay_mesh_is_fixed_point() {
        let m = generators::icosphere(2).build().unwrap();
        let r = to_intrinsic_delaunay(&m).unwrap();
        assert_eq!(r.flip_count, 0);
        assert_eq!(r.mesh.edge_lengths(), m.edge_lengths());
    }

    #[test]
    fn sliver_strip_becomes_delaunay() {
        let m = generators::sliver_strip(30, 0.05, 8).build().unwrap();
        assert!(!is_delaunay(&m));
        let r = to_intrinsic_delaunay(&m).unwrap();
        assert!(r.flip_count > 0);
        for e in 0..r.mesh.edge_count() {
            assert!(
                r.mesh.cotan_weight(e) >= -1e-12,
                "edge {e}: {}",
                r.mesh.cotan_weight(e)
            );
        }
        assert!((r.mesh.total_area() - m.total_area()).abs() < 1e-9 * m.total_area());
        for v in 0..m.vertex_count() {
            assert!((r.mesh.angle_sum(v) - m.angle_sum(v)).abs() < 1e-9 * m.angle_sum(v));
        }
        assert_eq!(
            r.vertex_correspondence,
            (0..m.vertex_count()).collect::<Vec<_>>()
        );
    }
}
