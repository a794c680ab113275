//! Discrete operators on an intrinsic mesh: cotan Laplacian, connection
//! Laplacian, lumped mass and the divergence of a vertex vector field.

use std::ops::{AddAssign, Mul};

use faer::sparse::{SparseColMat, Triplet};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mesh::IntrinsicMesh;

/// Compressed sparse column matrix with sorted, merged entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<T>,
}

impl<T> SparseMatrix<T>
where
    T: Copy + Default + AddAssign + Mul<Output = T>,
{
    /// Builds from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(rows: usize, cols: usize, mut entries: Vec<(usize, usize, T)>) -> Self {
        entries.sort_unstable_by_key(|&(r, c, _)| (c, r));
        let mut col_ptr = vec![0usize; cols + 1];
        let mut row_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<T> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            assert!(r < rows && c < cols, "entry ({r}, {c}) out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_idx.push(r);
                values.push(v);
                col_ptr[c + 1] += 1;
                last = Some((r, c));
            }
        }
        for c in 0..cols {
            col_ptr[c + 1] += col_ptr[c];
        }
        Self {
            rows,
            cols,
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        let range = self.col_ptr[c]..self.col_ptr[c + 1];
        match self.row_idx[range.clone()].binary_search(&r) {
            Ok(k) => self.values[range.start + k],
            Err(_) => T::default(),
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![T::default(); self.rows];
        for c in 0..self.cols {
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                y[self.row_idx[k]] += self.values[k] * x[c];
            }
        }
        y
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.cols).flat_map(move |c| {
            (self.col_ptr[c]..self.col_ptr[c + 1])
                .map(move |k| (self.row_idx[k], c, self.values[k]))
        })
    }

    /// `self + s·D` for a diagonal `D`.
    pub fn add_diagonal(&self, diag: &[T], s: T) -> Self {
        let mut t: Vec<_> = self.triplets().collect();
        t.extend(diag.iter().enumerate().map(|(i, &d)| (i, i, d * s)));
        Self::from_triplets(self.rows, self.cols, t)
    }

    /// `a·self + D`.
    pub fn scaled_plus_diagonal(&self, a: T, diag: &[T]) -> Self {
        let mut t: Vec<_> = self.triplets().map(|(r, c, v)| (r, c, v * a)).collect();
        t.extend(diag.iter().enumerate().map(|(i, &d)| (i, i, d)));
        Self::from_triplets(self.rows, self.cols, t)
    }

    pub(crate) fn to_faer(&self) -> Result<SparseColMat<usize, T>>
    where
        T: faer::traits::ComplexField,
    {
        let t: Vec<_> = self
            .triplets()
            .map(|(r, c, v)| Triplet::new(r, c, v))
            .collect();
        SparseColMat::try_new_from_triplets(self.rows, self.cols, &t)
            .map_err(|e| Error::Numerical(format!("sparse assembly: {e:?}")))
    }
}

/// Half cotan weight `c_ij = ½(cot α + cot β)` of every edge.
pub fn edge_weights(mesh: &IntrinsicMesh) -> Vec<f64> {
    (0..mesh.edge_count())
        .map(|e| 0.5 * mesh.cotan_weight(e))
        .collect()
}

/// Cotan Laplacian, positive semidefinite: `L_ij = -c_ij`, `L_ii = Σ c_ij`.
pub fn cotan_laplacian(mesh: &IntrinsicMesh) -> SparseMatrix<f64> {
    let n = mesh.vertex_count();
    let mut t = Vec::with_capacity(4 * mesh.edge_count());
    for (e, w) in edge_weights(mesh).into_iter().enumerate() {
        let h = mesh.edge_halfedge(e);
        let (i, j) = (mesh.tail(h), mesh.head(h));
        t.push((i, j, -w));
        t.push((j, i, -w));
        t.push((i, i, w));
        t.push((j, j, w));
    }
    SparseMatrix::from_triplets(n, n, t)
}

/// Connection Laplacian for `k`-symmetric direction fields. Entry `(i, j)`
/// carries `-c_ij r_ji^k`, bringing values at `j` into the frame of `i`.
pub fn connection_laplacian(mesh: &IntrinsicMesh, k: u32) -> Result<SparseMatrix<Complex64>> {
    if k == 0 {
        return Err(Error::InvalidDegree(k));
    }
    let n = mesh.vertex_count();
    let mut t = Vec::with_capacity(4 * mesh.edge_count());
    for (e, w) in edge_weights(mesh).into_iter().enumerate() {
        let h = mesh.edge_halfedge(e);
        let (i, j) = (mesh.tail(h), mesh.head(h));
        let r_ij = mesh.transport_rotation(h).powu(k);
        t.push((i, j, -w * r_ij.conj()));
        t.push((j, i, -w * r_ij));
        t.push((i, i, Complex64::new(w, 0.0)));
        t.push((j, j, Complex64::new(w, 0.0)));
    }
    Ok(SparseMatrix::from_triplets(n, n, t))
}

/// Lumped (barycentric) vertex areas.
pub fn lumped_mass(mesh: &IntrinsicMesh) -> Vec<f64> {
    let mut m = vec![0.0; mesh.vertex_count()];
    for f in 0..mesh.face_count() {
        let a = mesh.face_area(f) / 3.0;
        for v in mesh.face_vertices(f) {
            m[v] += a;
        }
    }
    m
}

/// Divergence of a vertex vector field (each value in its vertex's polar
/// frame): `Σ_j c_ij · ½(⟨e_ij, X_i⟩ + ⟨-e_ji, X_j⟩)`. With this sign,
/// radially outward fields have positive divergence and `L r = -div X`
/// integrates a gradient field `X = ∇r`.
pub fn divergence(mesh: &IntrinsicMesh, field: &[Complex64]) -> Result<Vec<f64>> {
    if field.len() != mesh.vertex_count() {
        return Err(Error::DimensionMismatch {
            expected: mesh.vertex_count(),
            got: field.len(),
        });
    }
    let mut div = vec![0.0; mesh.vertex_count()];
    for (e, w) in edge_weights(mesh).into_iter().enumerate() {
        let h = mesh.edge_halfedge(e);
        let t = mesh.twin(h);
        let (i, j) = (mesh.tail(h), mesh.head(h));
        let e_ij = mesh.halfedge_vector(h);
        let e_ji = mesh.halfedge_vector(t);
        let dot = |a: Complex64, b: Complex64| a.re * b.re + a.im * b.im;
        // Edge flux from i towards j.
        let flux = 0.5 * (dot(e_ij, field[i]) - dot(e_ji, field[j]));
        div[i] += w * flux;
        div[j] -= w * flux;
    }
    Ok(div)
}
