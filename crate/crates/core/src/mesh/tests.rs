use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI, TAU};

use nalgebra::Vector3;
use num_complex::Complex64;
use proptest::prelude::*;

use super::*;
use crate::generators;

fn hexagon_fan() -> IntrinsicMesh {
    let mut positions = vec![Vector3::zeros()];
    for a in 0..6 {
        let t = FRAC_PI_3 * a as f64;
        positions.push(Vector3::new(t.cos(), t.sin(), 0.0));
    }
    let faces: Vec<[usize; 3]> = (0..6).map(|a| [0, 1 + a, 1 + (a + 1) % 6]).collect();
    IntrinsicMesh::from_positions(&faces, positions).unwrap()
}

/// Six faces around a vertex with total angle `total`, all spokes of unit
/// length.
fn cone_fan(total: f64) -> IntrinsicMesh {
    let faces: Vec<[usize; 3]> = (0..6).map(|a| [0, 1 + a, 1 + (a + 1) % 6]).collect();
    let wedge = total / 6.0;
    let rim = 2.0 * (wedge / 2.0).sin();
    let mut lengths = BTreeMap::new();
    for a in 0..6 {
        lengths.insert((0, 1 + a), 1.0);
        lengths.insert((1 + a, 1 + (a + 1) % 6), rim);
    }
    IntrinsicMesh::from_lengths(&faces, 7, lengths).unwrap()
}

#[test]
fn equilateral_face() {
    let mut lengths = BTreeMap::new();
    lengths.insert((0, 1), 1.0);
    lengths.insert((1, 2), 1.0);
    lengths.insert((2, 0), 1.0);
    let m = IntrinsicMesh::from_lengths(&[[0, 1, 2]], 3, lengths).unwrap();
    for h in m.face_halfedges(0) {
        assert!((m.corner_angle(h) - FRAC_PI_3).abs() < 1e-15);
    }
    assert!((m.face_area(0) - 3f64.sqrt() / 4.0).abs() < 1e-15);
    assert_eq!(m.edge_count(), 3);
    assert_eq!(m.halfedge_count(), 6);
    assert!((0..3).all(|v| m.is_boundary_vertex(v)));
}

#[test]
fn right_triangle_345() {
    let mut lengths = BTreeMap::new();
    lengths.insert((0, 1), 3.0);
    lengths.insert((1, 2), 5.0);
    lengths.insert((0, 2), 4.0);
    let m = IntrinsicMesh::from_lengths(&[[0, 1, 2]], 3, lengths).unwrap();
    assert!((m.face_area(0) - 6.0).abs() < 1e-14);
    // Opposite the length-5 edge (1, 2) is the corner at vertex 0.
    let h = m.halfedge_between(0, 1).unwrap();
    assert!((m.corner_angle(h) - FRAC_PI_2).abs() < 1e-14);
}

#[test]
fn flat_hexagon_fan_frames() {
    let m = hexagon_fan();
    assert!(!m.is_boundary_vertex(0));
    assert!((m.angle_sum(0) - TAU).abs() < 1e-14);
    let hs: Vec<usize> = m.outgoing(0).collect();
    assert_eq!(hs.len(), 6);
    for (a, &h) in hs.iter().enumerate() {
        assert!((m.normalized_angle(h) - FRAC_PI_3).abs() < 1e-14);
        assert!((m.edge_direction(h) - a as f64 * FRAC_PI_3).abs() < 1e-13);
        // Reference edge is to vertex 1; spokes go counter-clockwise.
        assert_eq!(m.head(h), 1 + a);
    }
}

#[test]
fn normalized_angles_sum_to_full_turn() {
    let m = generators::jitter(&generators::icosphere(2), 0.2, 7, true)
        .build()
        .unwrap();
    for v in 0..m.vertex_count() {
        let s: f64 = m.outgoing(v).map(|h| m.normalized_angle(h)).sum();
        assert!((s - TAU).abs() < 1e-10 * TAU, "vertex {v}: {s}");
    }
}

#[test]
fn boundary_vertices_keep_their_angles() {
    let m = generators::grid(4, 1.0).build().unwrap();
    for v in 0..m.vertex_count() {
        if !m.is_boundary_vertex(v) {
            continue;
        }
        let hs: Vec<usize> = m.outgoing(v).collect();
        let last = *hs.last().unwrap();
        assert!(m.face_of(last).is_none());
        assert_eq!(m.angle_scale(v), 1.0);
        assert!((m.edge_direction(last) - m.angle_sum(v)).abs() < 1e-12);
        let corner = v == 0 || v == 4 || v == 20 || v == 24;
        let expected = if corner { FRAC_PI_2 } else { PI };
        assert!((m.angle_sum(v) - expected).abs() < 1e-12);
    }
    // A slit-like boundary vertex is compressed so the exterior wedge survives.
    let fan: Vec<[usize; 3]> = (0..7).map(|a| [0, 1 + a, 2 + a]).collect();
    let mut positions = vec![Vector3::zeros()];
    for a in 0..8 {
        let t = a as f64 * 0.95 * TAU / 7.0;
        positions.push(Vector3::new(t.cos(), t.sin(), 0.0));
    }
    let m = IntrinsicMesh::from_positions(&fan, positions).unwrap();
    assert!(m.angle_sum(0) > BOUNDARY_WEDGE_LIMIT);
    let last = m.outgoing(0).last().unwrap();
    assert!((m.edge_direction(last) - BOUNDARY_WEDGE_LIMIT).abs() < 1e-12);
}

#[test]
fn rotations_are_unit_and_inverse() {
    let m = generators::jitter(&generators::icosphere(2), 0.3, 3, true)
        .build()
        .unwrap();
    for h in 0..m.halfedge_count() {
        let r = m.transport_rotation(h);
        let rt = m.transport_rotation(m.twin(h));
        assert!((r.norm() - 1.0).abs() < 1e-12);
        assert!((r * rt - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((rt - r.conj()).norm() < 1e-12);
    }
}

#[test]
fn flat_transport_matches_extrinsic() {
    let m = generators::jitter(&generators::grid(6, 1.0), 0.25, 11, false)
        .build()
        .unwrap();
    for h in 0..m.halfedge_count() {
        let (i, j) = (m.tail(h), m.head(h));
        let v = TangentVector::from_polar(i, 1.3, 0.4 + h as f64 * 0.37);
        let w = m.transport_along_edge(v, j).unwrap();
        let xi = m.tangent_to_extrinsic(v).unwrap();
        let xj = m.tangent_to_extrinsic(w).unwrap();
        assert!((xi - xj).norm() < 1e-10, "halfedge {h}: {xi:?} vs {xj:?}");
        assert!((w.magnitude() - 1.3).abs() < 1e-15);
    }
}

#[test]
fn roundtrip_along_edge() {
    let m = generators::icosphere(2).build().unwrap();
    for h in 0..m.halfedge_count() {
        let v = TangentVector::from_polar(m.tail(h), 0.7, 1.1);
        let there = m.transport_along_edge(v, m.head(h)).unwrap();
        let back = m.transport_along_edge(there, m.tail(h)).unwrap();
        assert!((back.value - v.value).norm() < 1e-12);
    }
}

#[test]
fn cone_holonomy_equals_angle_defect() {
    // Apex 0 with total angle Θ on a closed bipyramid: the rim vertices are
    // interior, so the loop around the apex picks up the curvature of the
    // enclosed fan faces, Σ(θ̃ sums − π). With all rim angles unscaled this
    // is exactly the apex defect 2π − Θ.
    let total = 5.0f64;
    let mut faces: Vec<[usize; 3]> = (0..6).map(|a| [0, 1 + a, 1 + (a + 1) % 6]).collect();
    faces.extend((0..6).map(|a| [7, 1 + (a + 1) % 6, 1 + a]));
    let rim = 2.0 * (total / 12.0).sin();
    let mut lengths = BTreeMap::new();
    for a in 0..6 {
        lengths.insert((0, 1 + a), 1.0);
        lengths.insert((7, 1 + a), 1.0);
        lengths.insert((1 + a, 1 + (a + 1) % 6), rim);
    }
    let m = IntrinsicMesh::from_lengths(&faces, 8, lengths).unwrap();
    let start = TangentVector::from_polar(1, 1.0, 0.3);
    let mut v = start;
    for a in 0..6 {
        v = m.transport_along_edge(v, 1 + (a + 1) % 6).unwrap();
    }
    let product: Complex64 = (0..6)
        .map(|a| m.transport_rotation(m.halfedge_between(1 + a, 1 + (a + 1) % 6).unwrap()))
        .product();
    assert!((v.value - start.value * product).norm() < 1e-12);
    let holonomy = (v.value / start.value).arg();
    let curvature: f64 = (0..6)
        .map(|f| {
            m.face_halfedges(f)
                .iter()
                .map(|&h| m.normalized_angle(h))
                .sum::<f64>()
                - PI
        })
        .sum();
    let diff = (holonomy - curvature).rem_euclid(TAU);
    assert!(
        diff.min(TAU - diff) < 1e-8,
        "holonomy {holonomy}, curvature {curvature}"
    );

    // Rim vertices have Θ = 2(π − Θ_apex/6) here, so the fan curvature
    // differs from the plain defect by the rim rescaling; with the scales
    // removed it is the apex defect.
    let unscaled: f64 = (0..6)
        .map(|f| {
            let hs = m.face_halfedges(f);
            let apex = hs.iter().find(|&&h| m.tail(h) == 0).copied().unwrap();
            m.normalized_angle(apex)
                + hs.iter()
                    .filter(|&&h| h != apex)
                    .map(|&h| m.corner_angle(h))
                    .sum::<f64>()
                - PI
        })
        .sum();
    let d = (unscaled - (TAU - total)).rem_euclid(TAU);
    assert!(d.min(TAU - d) < 1e-12);
}

#[test]
fn transport_rejects_foreign_basis() {
    let m = hexagon_fan();
    let v = TangentVector::from_polar(3, 1.0, 0.0);
    assert!(matches!(
        m.transport_across(v, (0, 1)),
        Err(Error::WrongBasis { .. })
    ));
    assert!(matches!(
        m.transport_along_edge(v, 6),
        Err(Error::NotAnEdge(3, 6))
    ));
}

#[test]
fn extrinsic_reference_directions() {
    let m = hexagon_fan();
    let along0 = m
        .extrinsic_to_tangent(0, Vector3::new(1.0, 0.0, 0.0))
        .unwrap();
    assert!(along0.angle().min(TAU - along0.angle()) < 1e-12);
    let along1 = m
        .extrinsic_to_tangent(0, Vector3::new(0.5, 3f64.sqrt() / 2.0, 0.0))
        .unwrap();
    assert!((along1.angle() - FRAC_PI_3).abs() < 1e-12);
}

#[test]
fn extrinsic_requires_embedding() {
    let m = cone_fan(TAU);
    assert_eq!(
        m.extrinsic_to_tangent(0, Vector3::x()),
        Err(Error::NoEmbedding)
    );
    assert_eq!(
        m.tangent_to_extrinsic(TangentVector::from_polar(0, 1.0, 0.0)),
        Err(Error::NoEmbedding)
    );
}

#[test]
fn extrinsic_roundtrip_on_icosphere() {
    let m = generators::icosphere(4).build().unwrap();
    let p = m.positions().unwrap().to_vec();
    let mut worst: f64 = 0.0;
    for v in (0..m.vertex_count()).step_by(7) {
        let n = p[v].normalize();
        let a = Vector3::new(0.3, -0.7, 0.2).cross(&n).normalize();
        let t = m.extrinsic_to_tangent(v, a).unwrap();
        let back = m.tangent_to_extrinsic(t).unwrap();
        let nv = m.vertex_normal(v).unwrap();
        let at = (a - nv * a.dot(&nv)).normalize();
        worst = worst.max(at.angle(&back.normalize()));
    }
    assert!(worst < 1e-3, "worst angle error {worst}");
}

#[test]
fn rejects_bad_input() {
    // Two faces sharing a directed edge.
    let p = vec![
        Vector3::zeros(),
        Vector3::x(),
        Vector3::y(),
        Vector3::new(1.0, 1.0, 0.0),
    ];
    let r = IntrinsicMesh::from_positions(&[[0, 1, 2], [0, 1, 3]], p.clone());
    assert_eq!(r.unwrap_err(), Error::NonManifoldEdge(0, 1));

    let r = IntrinsicMesh::from_positions(&[[0, 1, 2]], p.clone());
    assert_eq!(r.unwrap_err(), Error::IsolatedVertex(3));

    let mut lengths = BTreeMap::new();
    lengths.insert((0, 1), 1.0);
    lengths.insert((1, 2), 1.0);
    lengths.insert((2, 0), 3.0);
    let r = IntrinsicMesh::from_lengths(&[[0, 1, 2]], 3, lengths.clone());
    assert!(matches!(r, Err(Error::TriangleInequality { face: 0, .. })));

    lengths.insert((2, 0), 0.0);
    let r = IntrinsicMesh::from_lengths(&[[0, 1, 2]], 3, lengths.clone());
    assert!(matches!(r, Err(Error::NonPositiveLength(0, 2, _))));

    lengths.remove(&(2, 0));
    let r = IntrinsicMesh::from_lengths(&[[0, 1, 2]], 3, lengths);
    assert_eq!(r.unwrap_err(), Error::MissingEdgeLength(0, 2));

    // Bowtie: two fans sharing only vertex 0.
    let p = vec![
        Vector3::zeros(),
        Vector3::x(),
        Vector3::y(),
        Vector3::new(-1.0, 0.0, 0.0),
        Vector3::new(0.0, -1.0, 0.0),
    ];
    let r = IntrinsicMesh::from_positions(&[[0, 1, 2], [0, 3, 4]], p);
    assert_eq!(r.unwrap_err(), Error::NonManifoldVertex(0));
}

#[test]
fn generators_are_outward_oriented() {
    for tm in [
        generators::icosphere(2),
        generators::uv_sphere(8, 12),
        generators::torus(2.0, 0.7, 12, 8),
    ] {
        let m = tm.build().unwrap();
        assert_eq!(
            m.vertex_count() as i64 - m.edge_count() as i64 + m.face_count() as i64,
            if tm.faces.len() == 2 * 12 * 8 { 0 } else { 2 }
        );
    }
    let s = generators::icosphere(1);
    for f in &s.faces {
        let [a, b, c] = f.map(|i| s.positions[i]);
        assert!((b - a).cross(&(c - a)).dot(&(a + b + c)) > 0.0);
    }
    for tm in [
        generators::grid(3, 1.0),
        generators::disk(4, 1.0),
        generators::sliver_strip(10, 0.05, 4),
    ] {
        let m = tm.build().unwrap();
        assert!((0..m.face_count()).all(|f| {
            let [a, b, c] = m.face_vertices(f).map(|i| tm.positions[i]);
            (b - a).cross(&(c - a)).z > 0.0
        }));
    }
    let d = generators::disk(5, 1.0).build().unwrap();
    assert!((d.total_area() - PI).abs() < 0.1);
}

proptest! {
    #[test]
    fn flat_transport_is_path_independent(seed in 0u64..1000, steps in 1usize..40) {
        let m = generators::jitter(&generators::grid(5, 1.0), 0.2, seed, false).build().unwrap();
        // Random walk over interior vertices, then back along the same path.
        let s0 = 7usize;
        let mut v = TangentVector::from_polar(s0, 1.0, 0.9);
        let mut at = s0;
        let mut path = vec![s0];
        let mut state = seed;
        for _ in 0..steps {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let hs: Vec<usize> = m.outgoing(at).filter(|&h| !m.is_boundary_vertex(m.head(h))).collect();
            let h = hs[(state >> 33) as usize % hs.len()];
            at = m.head(h);
            path.push(at);
        }
        for w in path.windows(2) {
            v = m.transport_along_edge(v, w[1]).unwrap();
        }
        // Return along the path in reverse.
        for w in path.windows(2).rev() {
            v = m.transport_along_edge(v, w[0]).unwrap();
        }
        prop_assert!((v.value - Complex64::from_polar(1.0, 0.9)).norm() < 1e-8);
        // Walking the path agrees with the extrinsic (flat) transport.
        let x0 = m.tangent_to_extrinsic(TangentVector::from_polar(s0, 1.0, 0.9)).unwrap();
        let mut u = TangentVector::from_polar(s0, 1.0, 0.9);
        for w in path.windows(2) {
            u = m.transport_along_edge(u, w[1]).unwrap();
        }
        let x1 = m.tangent_to_extrinsic(u).unwrap();
        prop_assert!((x0 - x1).norm() < 1e-8);
    }
}
